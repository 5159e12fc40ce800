//! Word-parallel evaluation of Boolean terms over all valuations.
//!
//! A term over `v` letters is evaluated on the free Boolean vectors whose
//! rows are the matrix of binary expansions of `0..2^v`; the resulting
//! vector codes the term's full DNF — bit `j` is the term's value at
//! valuation index `j`. Work is split into `2^(v-k)` chunks of `2^k` bits
//! evaluated independently (and in parallel) with plain word operations,
//! then merged in ascending chunk order, so output is bit-identical for any
//! chunk size and worker count.
//!
//! Free-vector rows are never stored as a table: within a chunk a row is
//! either constant or one of six fixed word patterns, synthesized on the fly
//! from the chunk index. Memory stays proportional to a chunk.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use thiserror::Error;

use crate::boolcore::{self, BoolTerm, Letter, Valuation};

/// Hard ceiling on free variables the engine will ever accept.
pub const MAX_SUPPORTED_VARS: u32 = 40;
/// Default feasibility cap (CLI `--max-vars`, configurable up to the ceiling).
pub const DEFAULT_MAX_VARS: u32 = 30;
/// Above this many variables the DNF vector is not materialized; only
/// counting and streamed enumeration are offered (2^28 bits = 32 MiB).
pub const MATERIALIZE_MAX_VARS: u32 = 28;
/// Default log2 chunk size: 2^16 bits = 1024 words per chunk.
pub const DEFAULT_CHUNK_LOG2: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("term has {actual} free variables, above the feasibility cap {cap}")]
    CapExceeded { cap: u32, actual: u32 },
    #[error("chunk size 2^{k} exceeds the valuation space 2^{v}")]
    ChunkTooLarge { k: u32, v: u32 },
    #[error("{what} {got} out of range (bound {bound})")]
    IndexOutOfRange {
        what: &'static str,
        got: u64,
        bound: u64,
    },
    #[error("bit vectors differ in length: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("collection of bit vectors is empty")]
    EmptyCollection,
    #[error("letter {0} does not occur in the evaluation order")]
    UnknownLetter(Letter),
    #[error("DNF vector over {v} variables is not materialized (cap {cap}); use streaming")]
    NotMaterialized { v: u32, cap: u32 },
    #[error("invalid engine options: {0}")]
    InvalidOptions(String),
}

/// A packed bit array; bit `i` lives in word `i/64` at position `i%64`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    pub fn and_assign(&mut self, other: &Bits) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    /// Bitwise complement within the declared length.
    pub fn complement(&self) -> Bits {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        mask_tail(&mut words, self.len);
        Bits {
            len: self.len,
            words,
        }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

fn mask_tail(words: &mut [u64], len: usize) {
    if !len.is_multiple_of(64) {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (len % 64)) - 1;
        }
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        Ok(())
    }
}

impl FromStr for Bits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Bits::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits.set(i, true),
                other => return Err(format!("invalid bit character {other:?}")),
            }
        }
        Ok(bits)
    }
}

/// The family of free Boolean vectors over `v` variables: row `i` (1-based)
/// of the matrix whose columns are the `v`-bit binary expansions of
/// `0..2^v`, zero-padded on the left.
#[derive(Clone, Copy, Debug)]
pub struct FreeVectorScheme {
    v: u32,
}

impl FreeVectorScheme {
    pub fn new(v: u32) -> Self {
        FreeVectorScheme { v }
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    /// Bit `j` of row `i`: `(j >> (v - i)) & 1`.
    pub fn bit(&self, i: u32, j: u64) -> Result<bool, EngineError> {
        if i == 0 || i > self.v {
            return Err(EngineError::IndexOutOfRange {
                what: "variable position",
                got: u64::from(i),
                bound: u64::from(self.v),
            });
        }
        if self.v < 64 && j >= (1u64 << self.v) {
            return Err(EngineError::IndexOutOfRange {
                what: "valuation index",
                got: j,
                bound: 1u64 << self.v,
            });
        }
        Ok((j >> (self.v - i)) & 1 == 1)
    }

    /// Materializes row `i` as a bit array (small `v` only).
    pub fn vector(&self, i: u32) -> Result<Bits, EngineError> {
        if self.v > MATERIALIZE_MAX_VARS {
            return Err(EngineError::NotMaterialized {
                v: self.v,
                cap: MATERIALIZE_MAX_VARS,
            });
        }
        let len = 1usize << self.v;
        let mut bits = Bits::zeros(len);
        for j in 0..len as u64 {
            if self.bit(i, j)? {
                bits.set(j as usize, true);
            }
        }
        Ok(bits)
    }
}

/// True iff every signed meet `b_1^a1 & ... & b_n^an` over all sign patterns
/// is nonzero, i.e. the vectors freely generate.
pub fn is_independent(vectors: &[Bits]) -> Result<bool, EngineError> {
    let first = vectors.first().ok_or(EngineError::EmptyCollection)?;
    for v in vectors {
        if v.len() != first.len() {
            return Err(EngineError::LengthMismatch {
                expected: first.len(),
                got: v.len(),
            });
        }
    }
    let n = vectors.len();
    if n > 30 {
        return Err(EngineError::InvalidOptions(format!(
            "independence check over {n} vectors needs 2^{n} sign patterns"
        )));
    }
    for alpha in 0u64..(1u64 << n) {
        let mut meet = if alpha & 1 == 1 {
            vectors[0].clone()
        } else {
            vectors[0].complement()
        };
        for (i, v) in vectors.iter().enumerate().skip(1) {
            if (alpha >> i) & 1 == 1 {
                meet.and_assign(v);
            } else {
                meet.and_assign(&v.complement());
            }
        }
        if !meet.any() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of free generating sets of the free Boolean algebra on `n`
/// generators: `(2^n)! / n!` exactly.
pub fn count_free_generating_sets(n: u32) -> BigUint {
    let mut result = BigUint::one();
    // (2^n)!/n! = (n+1)(n+2)...(2^n)
    let top = 1u64 << n;
    for f in (u64::from(n) + 1)..=top {
        result *= f;
    }
    result
}

/// One block of the output vector: bits `j*2^k .. (j+1)*2^k` of the DNF.
#[derive(Clone, Debug)]
pub struct Chunk {
    index: u64,
    k: u32,
    words: Vec<u64>,
}

impl Chunk {
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Bit `r` of the chunk, i.e. the term's value at valuation `j*2^k + r`.
    pub fn bit(&self, r: u64) -> bool {
        assert!(r < (1u64 << self.k));
        (self.words[(r / 64) as usize] >> (r % 64)) & 1 == 1
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn to_bit_string(&self) -> String {
        (0..(1u64 << self.k))
            .map(|r| if self.bit(r) { '1' } else { '0' })
            .collect()
    }
}

/// Engine tuning knobs. `workers == 0` means "use all cores".
#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub chunk_log2: u32,
    pub workers: usize,
    pub max_vars: u32,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            chunk_log2: DEFAULT_CHUNK_LOG2,
            workers: 0,
            max_vars: DEFAULT_MAX_VARS,
        }
    }
}

impl EngineOptions {
    fn validate(&self) -> Result<(), EngineError> {
        if self.max_vars > MAX_SUPPORTED_VARS {
            return Err(EngineError::InvalidOptions(format!(
                "max-vars {} above the supported ceiling {}",
                self.max_vars, MAX_SUPPORTED_VARS
            )));
        }
        Ok(())
    }
}

/// Evaluation statistics: `estimated_ops = node_count * 2^(v-k)` is the
/// bitwise-operation estimate; `elapsed` is measured wall time.
#[derive(Clone, Debug)]
pub struct EngineStats {
    pub node_count: u64,
    pub v: u32,
    pub k: u32,
    pub chunk_count: u64,
    pub estimated_ops: u128,
    pub elapsed: Duration,
}

/// Builds the diagnostic record for a run over `v` variables with chunk
/// size `2^k` on a term of the given node count.
pub fn estimate_cycles(node_count: u64, v: u32, k: u32, elapsed: Duration) -> EngineStats {
    assert!(k <= v);
    EngineStats {
        node_count,
        v,
        k,
        chunk_count: 1u64 << (v - k),
        estimated_ops: u128::from(node_count) << (v - k),
        elapsed,
    }
}

impl fmt::Display for EngineStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "v={} k={} chunks={} nodes={} est_ops={} elapsed={:?}",
            self.v, self.k, self.chunk_count, self.node_count, self.estimated_ops, self.elapsed
        )
    }
}

/// The full-DNF vector of a term: bit `j` is the term's value at valuation
/// index `j`. Materialized only up to [`MATERIALIZE_MAX_VARS`] variables;
/// the model count is always present.
#[derive(Clone, Debug)]
pub struct DnfVector {
    order: Arc<[Letter]>,
    bits: Option<Bits>,
    model_count: BigUint,
}

impl DnfVector {
    pub fn v(&self) -> u32 {
        self.order.len() as u32
    }

    pub fn order(&self) -> &Arc<[Letter]> {
        &self.order
    }

    pub fn model_count(&self) -> &BigUint {
        &self.model_count
    }

    pub fn is_materialized(&self) -> bool {
        self.bits.is_some()
    }

    pub fn bits(&self) -> Option<&Bits> {
        self.bits.as_ref()
    }

    /// Value at a valuation index, when materialized.
    pub fn bit(&self, index: u64) -> Option<bool> {
        self.bits.as_ref().map(|b| b.get(index as usize))
    }

    pub fn to_bit_string(&self) -> Option<String> {
        self.bits.as_ref().map(|b| b.to_string())
    }
}

// ---------------------------------------------------------------------------
// Compilation: terms become postfix programs over chunk-sized word buffers.

#[derive(Clone, Copy, Debug)]
enum Op {
    PushConst(bool),
    /// Push the free-vector row with `shift = v - i` (0 is the fastest row).
    PushVar(u32),
    Not,
    And,
    Or,
    Xor,
    Implies,
    Iff,
}

fn compile(t: &BoolTerm, order: &[Letter]) -> Result<Vec<Op>, EngineError> {
    let mut prog = Vec::new();
    compile_into(t, order, &mut prog)?;
    Ok(prog)
}

fn compile_into(t: &BoolTerm, order: &[Letter], out: &mut Vec<Op>) -> Result<(), EngineError> {
    match t {
        BoolTerm::Const(b) => out.push(Op::PushConst(*b)),
        BoolTerm::Var(l) => {
            let pos = order
                .binary_search(l)
                .map_err(|_| EngineError::UnknownLetter(l.clone()))?;
            out.push(Op::PushVar((order.len() - 1 - pos) as u32));
        }
        BoolTerm::Not(c) => {
            compile_into(c, order, out)?;
            out.push(Op::Not);
        }
        BoolTerm::And(cs) | BoolTerm::Or(cs) => {
            let op = if matches!(t, BoolTerm::And(_)) {
                Op::And
            } else {
                Op::Or
            };
            let mut iter = cs.iter();
            match iter.next() {
                None => out.push(Op::PushConst(matches!(t, BoolTerm::And(_)))),
                Some(first) => {
                    compile_into(first, order, out)?;
                    for c in iter {
                        compile_into(c, order, out)?;
                        out.push(op);
                    }
                }
            }
        }
        BoolTerm::Xor(l, r) => {
            compile_into(l, order, out)?;
            compile_into(r, order, out)?;
            out.push(Op::Xor);
        }
        BoolTerm::Implies(l, r) => {
            compile_into(l, order, out)?;
            compile_into(r, order, out)?;
            out.push(Op::Implies);
        }
        BoolTerm::Iff(l, r) => {
            compile_into(l, order, out)?;
            compile_into(r, order, out)?;
            out.push(Op::Iff);
        }
    }
    Ok(())
}

/// Fixed periodic word patterns for free-vector rows with shift 0..5
/// (period 2, 4, 8, 16, 32, 64 bits), LSB first.
const VAR_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Word `w` of the free-vector row with the given shift inside chunk `j`.
#[inline]
fn var_word(shift: u32, j: u64, w: u64, k: u32) -> u64 {
    if shift >= k {
        // Constant across the whole chunk.
        if (j >> (shift - k)) & 1 == 1 {
            !0
        } else {
            0
        }
    } else if shift >= 6 {
        // Constant across one word.
        if (w >> (shift - 6)) & 1 == 1 {
            !0
        } else {
            0
        }
    } else {
        VAR_PATTERNS[shift as usize]
    }
}

struct ChunkEvaluator {
    prog: Vec<Op>,
    k: u32,
    words_per_chunk: usize,
}

impl ChunkEvaluator {
    fn new(prog: Vec<Op>, k: u32) -> Self {
        let words_per_chunk = if k >= 6 { 1usize << (k - 6) } else { 1 };
        ChunkEvaluator {
            prog,
            k,
            words_per_chunk,
        }
    }

    /// Evaluates chunk `j` into a fresh word buffer.
    fn eval(&self, j: u64) -> Vec<u64> {
        let mut out = vec![0u64; self.words_per_chunk];
        self.eval_into(j, &mut out);
        out
    }

    fn eval_into(&self, j: u64, out: &mut [u64]) {
        debug_assert_eq!(out.len(), self.words_per_chunk);
        let mut stack: Vec<Vec<u64>> = Vec::new();
        let mut spare: Vec<Vec<u64>> = Vec::new();
        let n = self.words_per_chunk;
        for op in &self.prog {
            match op {
                Op::PushConst(b) => {
                    let mut buf = spare.pop().unwrap_or_else(|| vec![0; n]);
                    buf.fill(if *b { !0 } else { 0 });
                    stack.push(buf);
                }
                Op::PushVar(shift) => {
                    let mut buf = spare.pop().unwrap_or_else(|| vec![0; n]);
                    for (w, slot) in buf.iter_mut().enumerate() {
                        *slot = var_word(*shift, j, w as u64, self.k);
                    }
                    stack.push(buf);
                }
                Op::Not => {
                    let top = stack.last_mut().expect("well-formed program");
                    for slot in top.iter_mut() {
                        *slot = !*slot;
                    }
                }
                binary => {
                    let rhs = stack.pop().expect("well-formed program");
                    let lhs = stack.last_mut().expect("well-formed program");
                    match binary {
                        Op::And => {
                            for (a, b) in lhs.iter_mut().zip(&rhs) {
                                *a &= b;
                            }
                        }
                        Op::Or => {
                            for (a, b) in lhs.iter_mut().zip(&rhs) {
                                *a |= b;
                            }
                        }
                        Op::Xor => {
                            for (a, b) in lhs.iter_mut().zip(&rhs) {
                                *a ^= b;
                            }
                        }
                        Op::Implies => {
                            for (a, b) in lhs.iter_mut().zip(&rhs) {
                                *a = !*a | b;
                            }
                        }
                        Op::Iff => {
                            for (a, b) in lhs.iter_mut().zip(&rhs) {
                                *a = !(*a ^ b);
                            }
                        }
                        _ => unreachable!(),
                    }
                    spare.push(rhs);
                }
            }
        }
        let result = stack.pop().expect("well-formed program");
        debug_assert!(stack.is_empty());
        out.copy_from_slice(&result);
        if self.k < 6 {
            out[0] &= (1u64 << (1u64 << self.k)) - 1;
        }
    }
}

/// Runs `f` on a dedicated pool of `workers` threads, or inline on the
/// current pool when `workers` is 0. Nested engine calls pass 0 so one
/// explicit pool serves a whole pipeline.
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(f)
    }
}

/// Evaluates one block of the output vector; pure in `(t, order, j, k)`.
pub fn eval_chunk(t: &BoolTerm, order: &[Letter], j: u64, k: u32) -> Result<Chunk, EngineError> {
    let v = order.len() as u32;
    if k > v {
        return Err(EngineError::ChunkTooLarge { k, v });
    }
    let chunk_count = 1u64 << (v - k);
    if j >= chunk_count {
        return Err(EngineError::IndexOutOfRange {
            what: "chunk index",
            got: j,
            bound: chunk_count,
        });
    }
    let evaluator = ChunkEvaluator::new(compile(t, order)?, k);
    Ok(Chunk {
        index: j,
        k,
        words: evaluator.eval(j),
    })
}

/// Evaluates `t` over all `2^v` valuations of `order`.
///
/// The requested chunk size is clamped to the valuation space, so small
/// terms are always a single chunk. Output is bit-identical for every
/// worker count and chunk size.
pub fn eval_full(
    t: &BoolTerm,
    order: Arc<[Letter]>,
    opts: &EngineOptions,
) -> Result<(DnfVector, EngineStats), EngineError> {
    opts.validate()?;
    let started = Instant::now();
    let v = order.len() as u32;
    if v > opts.max_vars {
        return Err(EngineError::CapExceeded {
            cap: opts.max_vars,
            actual: v,
        });
    }
    debug_assert!(
        order.windows(2).all(|w| w[0] < w[1]),
        "order must be sorted"
    );
    let k = opts.chunk_log2.min(v);
    let chunk_count = 1u64 << (v - k);
    let node_count = boolcore::node_count(t);
    let evaluator = ChunkEvaluator::new(compile(t, &order)?, k);

    let bits;
    let ones;
    if v <= MATERIALIZE_MAX_VARS {
        let mut all = Bits::zeros(1usize << v);
        if k >= 6 {
            let wpc = evaluator.words_per_chunk;
            with_workers(opts.workers, || {
                all.words
                    .par_chunks_mut(wpc)
                    .enumerate()
                    .for_each(|(j, slice)| evaluator.eval_into(j as u64, slice));
            });
        } else {
            // Sub-word chunks: evaluate sequentially and splice bit ranges.
            for j in 0..chunk_count {
                let words = evaluator.eval(j);
                let offset = j << k;
                all.words[(offset / 64) as usize] |= words[0] << (offset % 64);
            }
        }
        ones = all.count_ones();
        bits = Some(all);
    } else {
        ones = with_workers(opts.workers, || {
            (0..chunk_count)
                .into_par_iter()
                .map(|j| {
                    evaluator
                        .eval(j)
                        .iter()
                        .map(|w| u64::from(w.count_ones()))
                        .sum::<u64>()
                })
                .sum()
        });
        bits = None;
    }

    let stats = estimate_cycles(node_count, v, k, started.elapsed());
    Ok((
        DnfVector {
            order,
            bits,
            model_count: BigUint::from(ones),
        },
        stats,
    ))
}

/// Streams the valuation indices of all models in ascending order without
/// materializing the vector. The sink returns `false` to stop early.
/// Returns the number of indices emitted.
pub fn stream_models(
    t: &BoolTerm,
    order: Arc<[Letter]>,
    opts: &EngineOptions,
    mut sink: impl FnMut(u64) -> bool,
) -> Result<(u64, EngineStats), EngineError> {
    opts.validate()?;
    let started = Instant::now();
    let v = order.len() as u32;
    if v > opts.max_vars {
        return Err(EngineError::CapExceeded {
            cap: opts.max_vars,
            actual: v,
        });
    }
    let k = opts.chunk_log2.min(v);
    let chunk_count = 1u64 << (v - k);
    let node_count = boolcore::node_count(t);
    let evaluator = ChunkEvaluator::new(compile(t, &order)?, k);

    let window = (opts.workers.max(rayon::current_num_threads()) * 4).max(16) as u64;
    let mut emitted = 0u64;
    'outer: for start in (0..chunk_count).step_by(window as usize) {
        let end = (start + window).min(chunk_count);
        let chunks: Vec<Vec<u64>> = with_workers(opts.workers, || {
            (start..end)
                .into_par_iter()
                .map(|j| evaluator.eval(j))
                .collect()
        });
        for (offset, words) in chunks.iter().enumerate() {
            let j = start + offset as u64;
            for (w, &word) in words.iter().enumerate() {
                let mut bitset = word;
                while bitset != 0 {
                    let r = (w as u64) * 64 + u64::from(bitset.trailing_zeros());
                    bitset &= bitset - 1;
                    emitted += 1;
                    if !sink((j << k) | r) {
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok((
        emitted,
        estimate_cycles(node_count, v, k, started.elapsed()),
    ))
}

/// Iterates the models of a materialized DNF vector in ascending valuation
/// index order.
pub fn enumerate_models(
    d: &DnfVector,
    limit: Option<u64>,
) -> Result<impl Iterator<Item = Valuation> + '_, EngineError> {
    let bits = d.bits.as_ref().ok_or(EngineError::NotMaterialized {
        v: d.v(),
        cap: MATERIALIZE_MAX_VARS,
    })?;
    let order = d.order.clone();
    let iter = SetBitIter {
        words: bits.words(),
        word_idx: 0,
        current: bits.words().first().copied().unwrap_or(0),
    };
    Ok(iter
        .take(limit.map_or(usize::MAX, |l| l as usize))
        .map(move |ix| Valuation::from_index(order.clone(), ix)))
}

struct SetBitIter<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for SetBitIter<'_> {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros();
                self.current &= self.current - 1;
                return Some((self.word_idx as u64) * 64 + u64::from(bit));
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}
