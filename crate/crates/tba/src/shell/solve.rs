//! The solve pipeline: substitute assumptions, reduce, evaluate over the
//! free letters, and emit the solution file.
//!
//! Solution file format (bit-exact):
//!
//! ```text
//! # tba-solutions v1
//! # letters: <all letter names, canonical order>
//! # free: <letters left free after killing>
//! # count: <model count>
//! <one row per model: '0'/'1' over ALL letters, ascending free index>
//! ```
//!
//! Killed letters are reinstated in every row at their assumed values. Rows
//! are identical for any worker count and chunk size, and for the naive
//! oracle backend.

use std::io::Write;
use std::sync::Arc;

use num_bigint::BigUint;

use crate::bitengine::{
    self, enumerate_models, estimate_cycles, eval_full, stream_models, EngineOptions, EngineStats,
    MATERIALIZE_MAX_VARS,
};
use crate::boolcore::{
    eval_naive, reduce_constants, substitute, vars, Assignment, BoolTerm, Letter, Valuation,
};

use super::ShellError;

/// Evaluation strategy: the word-parallel engine or the naive term-by-term
/// oracle (slow; used for differential checks).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum Backend {
    #[default]
    BitParallel,
    Naive,
}

/// A prepared solve: reduced term, free letter order, and the row template
/// over the full namespace.
pub struct SolvePipeline {
    reduced: BoolTerm,
    free: Arc<[Letter]>,
    all_letters: Vec<Letter>,
    assumptions: Assignment,
}

/// What a finished solve reports back.
pub struct SolveSummary {
    pub count: BigUint,
    pub free_count: usize,
    pub stats: EngineStats,
}

impl SolvePipeline {
    pub fn new(
        theta: &BoolTerm,
        assumptions: &Assignment,
        all_letters: Vec<Letter>,
    ) -> Result<Self, ShellError> {
        debug_assert!(all_letters.windows(2).all(|w| w[0] < w[1]));
        for letter in assumptions.letters() {
            if all_letters.binary_search(letter).is_err() {
                return Err(ShellError::BadInput(format!(
                    "assumption binds letter {letter} outside the letter set"
                )));
            }
        }
        let reduced = reduce_constants(&substitute(theta, assumptions));
        let free: Vec<Letter> = all_letters
            .iter()
            .filter(|l| !assumptions.contains(l))
            .cloned()
            .collect();
        for v in vars(&reduced) {
            if free.binary_search(&v).is_err() {
                return Err(ShellError::BadInput(format!(
                    "term letter {v} outside the letter set"
                )));
            }
        }
        Ok(SolvePipeline {
            reduced,
            free: free.into(),
            all_letters,
            assumptions: assumptions.clone(),
        })
    }

    pub fn free_letters(&self) -> &Arc<[Letter]> {
        &self.free
    }

    pub fn reduced_term(&self) -> &BoolTerm {
        &self.reduced
    }

    /// The total valuation over all letters for one free-letter index.
    pub fn full_valuation(&self, free_index: u64) -> Valuation {
        Valuation::from_index(self.free.clone(), free_index).extended(&self.assumptions)
    }

    /// Model count only.
    pub fn count(
        &self,
        opts: &EngineOptions,
        backend: Backend,
    ) -> Result<(BigUint, EngineStats), ShellError> {
        match backend {
            Backend::BitParallel => {
                let (d, stats) = eval_full(&self.reduced, self.free.clone(), opts)?;
                Ok((d.model_count().clone(), stats))
            }
            Backend::Naive => {
                let (indices, stats) = self.naive_models(opts)?;
                Ok((BigUint::from(indices.len()), stats))
            }
        }
    }

    /// All model indices by brute-force naive evaluation, in order.
    fn naive_models(&self, opts: &EngineOptions) -> Result<(Vec<u64>, EngineStats), ShellError> {
        let started = std::time::Instant::now();
        let v = self.free.len() as u32;
        if v > opts.max_vars {
            return Err(bitengine::EngineError::CapExceeded {
                cap: opts.max_vars,
                actual: v,
            }
            .into());
        }
        let mut out = Vec::new();
        for ix in 0..(1u64 << v) {
            let val = Valuation::from_index(self.free.clone(), ix);
            if eval_naive(&self.reduced, &val)? {
                out.push(ix);
            }
        }
        let stats = estimate_cycles(
            crate::boolcore::node_count(&self.reduced),
            v,
            v.min(opts.chunk_log2),
            started.elapsed(),
        );
        Ok((out, stats))
    }

    /// Writes the solution file; `row_hook` sees each emitted free index.
    pub fn write_solutions(
        &self,
        opts: &EngineOptions,
        backend: Backend,
        out: &mut dyn Write,
        mut row_hook: impl FnMut(u64) -> Result<(), ShellError>,
    ) -> Result<SolveSummary, ShellError> {
        let v = self.free.len() as u32;
        let template = RowTemplate::new(self);
        let mut emit = |out: &mut dyn Write, ix: u64| -> Result<(), ShellError> {
            out.write_all(template.row(ix).as_bytes())?;
            out.write_all(b"\n")?;
            row_hook(ix)
        };

        match backend {
            Backend::Naive => {
                let (indices, stats) = self.naive_models(opts)?;
                let count = BigUint::from(indices.len());
                self.write_header(out, &count)?;
                for ix in indices {
                    emit(out, ix)?;
                }
                Ok(SolveSummary {
                    count,
                    free_count: self.free.len(),
                    stats,
                })
            }
            Backend::BitParallel if v <= MATERIALIZE_MAX_VARS => {
                let (d, stats) = eval_full(&self.reduced, self.free.clone(), opts)?;
                self.write_header(out, d.model_count())?;
                for val in enumerate_models(&d, None)? {
                    emit(out, val.index().expect("free count within u64"))?;
                }
                Ok(SolveSummary {
                    count: d.model_count().clone(),
                    free_count: self.free.len(),
                    stats,
                })
            }
            Backend::BitParallel => {
                // Too wide to materialize: count first, then stream rows.
                let (d, _) = eval_full(&self.reduced, self.free.clone(), opts)?;
                self.write_header(out, d.model_count())?;
                let mut failure = None;
                let (_, stats) = stream_models(&self.reduced, self.free.clone(), opts, |ix| {
                    match emit(out, ix) {
                        Ok(()) => true,
                        Err(e) => {
                            failure = Some(e);
                            false
                        }
                    }
                })?;
                if let Some(e) = failure {
                    return Err(e);
                }
                Ok(SolveSummary {
                    count: d.model_count().clone(),
                    free_count: self.free.len(),
                    stats,
                })
            }
        }
    }

    fn write_header(&self, out: &mut dyn Write, count: &BigUint) -> Result<(), ShellError> {
        out.write_all(b"# tba-solutions v1\n")?;
        write_letter_list(out, "# letters:", &self.all_letters)?;
        write_letter_list(out, "# free:", &self.free)?;
        writeln!(out, "# count: {count}")?;
        Ok(())
    }
}

fn write_letter_list(
    out: &mut dyn Write,
    prefix: &str,
    letters: &[Letter],
) -> Result<(), ShellError> {
    out.write_all(prefix.as_bytes())?;
    for l in letters {
        write!(out, " {l}")?;
    }
    out.write_all(b"\n")?;
    Ok(())
}

/// Precomputed per-letter row sources: a fixed character for killed
/// letters, a free bit position otherwise.
struct RowTemplate {
    sources: Vec<RowSource>,
    free_count: usize,
}

enum RowSource {
    Fixed(u8),
    Free(usize),
}

impl RowTemplate {
    fn new(pipeline: &SolvePipeline) -> Self {
        let sources = pipeline
            .all_letters
            .iter()
            .map(|l| match pipeline.assumptions.get(l) {
                Some(b) => RowSource::Fixed(if b { b'1' } else { b'0' }),
                None => RowSource::Free(pipeline.free.binary_search(l).expect("letter is free")),
            })
            .collect();
        RowTemplate {
            sources,
            free_count: pipeline.free.len(),
        }
    }

    fn row(&self, free_index: u64) -> String {
        self.sources
            .iter()
            .map(|s| match s {
                RowSource::Fixed(c) => *c as char,
                RowSource::Free(pos) => {
                    if (free_index >> (self.free_count - 1 - pos)) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                }
            })
            .collect()
    }
}
