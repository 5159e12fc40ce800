//! Counting labeled and unlabeled models through good definable partitions.
//!
//! The search space over a domain of size `n` is split along c-partitions:
//! length-`m` sequences of possibly empty blocks whose nonempty members
//! form an ordered partition of `I_n`, laid out as consecutive integer
//! blocks. A partition spec pairs one defining formula per block position
//! with forced relation orientations between blocks; the orientations kill
//! letters wholesale before the engine runs, and the formulas filter the
//! decoded models down to exactly those realizing the partition. Per-block
//! multiplicities then recover the labeled total, and canonical-form
//! deduplication the unlabeled one.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::binomial;
use num_traits::{One, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::bitengine::{self, EngineError, EngineOptions};
use crate::boolcore::{reduce_constants, substitute, Assignment, Letter, Valuation};
use crate::fol::{
    ground_theory, substitute_free_var, FolError, FolFormula, FolTerm, PropTheory, Signature,
};
use crate::modelkit::{canonical_key, decode_model, satisfies_under, LabeledModel, ModelError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error("partition killing needs a signature with exactly one binary relation, got {0}")]
    UnsupportedSignature(String),
    #[error("partition has {got} blocks but the spec declares {expected} layers")]
    LayerCountMismatch { expected: usize, got: usize },
    #[error("layer formula must have exactly the free variable {expected}, found {found:?}")]
    BadLayerFormula {
        expected: String,
        found: Vec<String>,
    },
    #[error("orientation indices ({i},{j}) outside the upper triangle of {m} layers")]
    BadOrientationIndex { i: usize, j: usize, m: usize },
    #[error("domain size {n} below the minimum {min} for this construction")]
    DomainTooSmall { n: usize, min: usize },
    #[error("partition {sizes:?} leaves {v} free letters, above the cap {cap}")]
    PartitionCapExceeded {
        sizes: Vec<usize>,
        v: usize,
        cap: u32,
    },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fol(#[from] FolError),
}

/// A weak composition of `n` into `m` parts, realized as consecutive
/// blocks: block `i` is `[sum(sizes[..i]), sum(sizes[..=i]))`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CPartition {
    sizes: Vec<usize>,
}

impl CPartition {
    pub fn new(sizes: Vec<usize>) -> Self {
        assert!(!sizes.is_empty());
        CPartition { sizes }
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// The consecutive element range of block `i`.
    pub fn block(&self, i: usize) -> Range<usize> {
        let start: usize = self.sizes[..i].iter().sum();
        start..start + self.sizes[i]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.m()).map(|i| self.block(i))
    }
}

impl fmt::Display for CPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let strs: Vec<String> = self.sizes.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", strs.join(","))
    }
}

/// Streams all c-partitions of `n` into `m` blocks in ascending
/// lexicographic order of their size vectors.
pub fn enumerate_c_partitions(n: usize, m: usize) -> impl Iterator<Item = CPartition> {
    assert!(m >= 1);
    let mut first = vec![0; m];
    first[m - 1] = n;
    WeakCompositions { next: Some(first) }
}

struct WeakCompositions {
    next: Option<Vec<usize>>,
}

impl Iterator for WeakCompositions {
    type Item = CPartition;

    fn next(&mut self) -> Option<CPartition> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let m = succ.len();
        // Lexicographic successor: bump the rightmost position that has
        // mass anywhere to its right, zero the middle, put the rest last.
        let mut right_sum = succ[m - 1];
        let mut advanced = false;
        for j in (0..m.saturating_sub(1)).rev() {
            if right_sum > 0 {
                succ[j] += 1;
                for x in &mut succ[j + 1..] {
                    *x = 0;
                }
                succ[m - 1] = right_sum - 1;
                advanced = true;
                break;
            }
            right_sum += succ[j];
        }
        self.next = if advanced { Some(succ) } else { None };
        Some(CPartition::new(current))
    }
}

/// Closed-form count of c-partitions: `sum_{k=1..m} C(m,k) C(n-1,k-1)`,
/// summing over the number of nonempty blocks.
pub fn count_c_partitions(n: usize, m: usize) -> BigUint {
    assert!(n >= 1 && m >= 1);
    let mut total = BigUint::zero();
    for k in 1..=m {
        total += binomial(BigUint::from(m), BigUint::from(k))
            * binomial(BigUint::from(n - 1), BigUint::from(k - 1));
    }
    total
}

/// Forced relation shape between two blocks: which of `R(x,y)`, `R(y,x)`
/// holds or fails for `x` in the earlier block and `y` in the later one.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    /// R(x,y) holds.
    Forward,
    /// R(y,x) holds.
    Backward,
    /// R(x,y) fails.
    NotForward,
    /// R(y,x) fails.
    NotBackward,
    /// No constraint.
    Unconstrained,
}

/// One block-defining formula: `formula` with the single free variable `var`.
#[derive(Clone, Debug)]
pub struct LayerFormula {
    var: String,
    formula: FolFormula,
}

impl LayerFormula {
    pub fn new(var: impl Into<String>, formula: FolFormula) -> Result<Self, CountError> {
        let var = var.into();
        let free = formula.free_vars();
        if free != [var.clone()] {
            return Err(CountError::BadLayerFormula {
                expected: var,
                found: free,
            });
        }
        Ok(LayerFormula { var, formula })
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    pub fn formula(&self) -> &FolFormula {
        &self.formula
    }

    /// The formula instantiated at a concrete element.
    pub fn at(&self, element: usize) -> FolFormula {
        substitute_free_var(&self.formula, &self.var, &FolTerm::Element(element))
    }
}

/// A good definable partition: `m` layer formulas plus an orientation table
/// on the upper triangle (diagonal included) of layer pairs.
#[derive(Clone, Debug)]
pub struct GoodPartitionSpec {
    layers: Vec<LayerFormula>,
    orient: Vec<Orientation>,
}

fn triangle_index(i: usize, j: usize, m: usize) -> usize {
    // (i, j) with i <= j < m, row-major over the upper triangle.
    i * m - i * (i + 1) / 2 + j
}

impl GoodPartitionSpec {
    pub fn new(layers: Vec<LayerFormula>) -> Self {
        let m = layers.len();
        GoodPartitionSpec {
            layers,
            orient: vec![Orientation::Unconstrained; m * (m + 1) / 2],
        }
    }

    pub fn m(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LayerFormula] {
        &self.layers
    }

    /// Sets `S_ij` for layer positions `i <= j` (0-based).
    pub fn set_orientation(
        &mut self,
        i: usize,
        j: usize,
        orientation: Orientation,
    ) -> Result<(), CountError> {
        let m = self.m();
        if i > j || j >= m {
            return Err(CountError::BadOrientationIndex { i, j, m });
        }
        self.orient[triangle_index(i, j, m)] = orientation;
        Ok(())
    }

    pub fn orientation(&self, i: usize, j: usize) -> Orientation {
        assert!(i <= j && j < self.m());
        self.orient[triangle_index(i, j, self.m())]
    }
}

fn partition_relation(theory: &PropTheory) -> Result<String, CountError> {
    let sig = theory.signature();
    let describe = |sig: &Signature| {
        format!(
            "{} functions, {} relations",
            sig.functions().len(),
            sig.relations().len()
        )
    };
    match (sig.functions(), sig.relations()) {
        ([], [(name, 2)]) => Ok(name.clone()),
        _ => Err(CountError::UnsupportedSignature(describe(sig))),
    }
}

/// The letters fixed by a partition's orientations: for every layer pair
/// `i <= j` and elements `(a, b)` of blocks `i x j`, the entry forces
/// `R(a,b)` or `R(b,a)` on or off. Unconstrained entries fix nothing.
pub fn kill_for_partition(
    spec: &GoodPartitionSpec,
    x: &CPartition,
    theory: &PropTheory,
) -> Result<Assignment, CountError> {
    let rel = partition_relation(theory)?;
    if x.m() != spec.m() {
        return Err(CountError::LayerCountMismatch {
            expected: spec.m(),
            got: x.m(),
        });
    }
    let mut kills = Assignment::new();
    let letter = |a: usize, b: usize| Letter::indexed(rel.clone(), vec![a as i64, b as i64]);
    for i in 0..spec.m() {
        for j in i..spec.m() {
            let orientation = spec.orientation(i, j);
            if orientation == Orientation::Unconstrained {
                continue;
            }
            for a in x.block(i) {
                for b in x.block(j) {
                    match orientation {
                        Orientation::Forward => kills.set(letter(a, b), true),
                        Orientation::NotForward => kills.set(letter(a, b), false),
                        Orientation::Backward => kills.set(letter(b, a), true),
                        Orientation::NotBackward => kills.set(letter(b, a), false),
                        Orientation::Unconstrained => unreachable!(),
                    }
                }
            }
        }
    }
    Ok(kills)
}

/// Falling factorial `n (n-1) ... (n-k+1)`: the number of ways to label `k`
/// definable constants inside `I_n`.
pub fn definable_constants_factor(k: usize, n: usize) -> BigUint {
    let mut out = BigUint::one();
    for i in 0..k {
        out *= n - i;
    }
    out
}

/// Per-partition record of the counting run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionCount {
    pub sizes: Vec<usize>,
    /// Models with canonical blocks realizing this partition.
    pub labeled_in_class: BigUint,
    /// Isomorphism classes among them.
    pub unlabeled_in_class: BigUint,
    /// Ways to distribute `I_n` into the blocks.
    pub multiplicity: BigUint,
    /// `multiplicity * labeled_in_class`.
    pub contribution: BigUint,
}

/// Output of the partitioned counting procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountReport {
    pub n: usize,
    pub rows: Vec<PartitionCount>,
    pub labeled_total: BigUint,
    pub unlabeled_total: BigUint,
}

impl CountReport {
    /// Recomputes the totals from the rows; true when they agree.
    pub fn totals_consistent(&self) -> bool {
        let l: BigUint = self.rows.iter().map(|r| r.contribution.clone()).sum();
        let k: BigUint = self.rows.iter().map(|r| r.unlabeled_in_class.clone()).sum();
        l == self.labeled_total && k == self.unlabeled_total
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tba-count n={}\n", self.n));
        out.push_str("sizes\tmodels\tclasses\tmult\tcontribution\n");
        for row in &self.rows {
            let sizes: Vec<String> = row.sizes.iter().map(|s| s.to_string()).collect();
            out.push_str(&format!(
                "({})\t{}\t{}\t{}\t{}\n",
                sizes.join(","),
                row.labeled_in_class,
                row.unlabeled_in_class,
                row.multiplicity,
                row.contribution
            ));
        }
        out.push_str(&format!("labeled total: {}\n", self.labeled_total));
        out.push_str(&format!("unlabeled total: {}\n", self.unlabeled_total));
        out
    }
}

/// The blockwise labeling multiplicity `prod_i C(beta_i, alpha_i)` with
/// `beta_1 = n` and `beta_{i+1} = beta_i - alpha_i`.
fn block_multiplicity(x: &CPartition) -> BigUint {
    let mut remaining = x.n();
    let mut mult = BigUint::one();
    for &alpha in x.sizes() {
        mult *= binomial(BigUint::from(remaining), BigUint::from(alpha));
        remaining -= alpha;
    }
    mult
}

/// True iff the partition's layer formulas define exactly the canonical
/// blocks of `x` in the model.
fn realizes_partition(
    model: &LabeledModel,
    spec: &GoodPartitionSpec,
    x: &CPartition,
) -> Result<bool, CountError> {
    for (i, layer) in spec.layers().iter().enumerate() {
        let block = x.block(i);
        for a in 0..model.n() {
            let phi = layer.at(a);
            let mut env = std::collections::HashMap::new();
            let holds = satisfies_under(model, &phi, &mut env)?;
            if holds != block.contains(&a) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Runs the full partitioned counting procedure: for every c-partition,
/// kill the oriented letters, reduce, run the engine, decode and filter the
/// realizing models, deduplicate up to isomorphism, then total the labeled
/// count with blockwise multiplicities and the unlabeled count across
/// partitions.
pub fn tba_count(
    theory: &PropTheory,
    spec: &GoodPartitionSpec,
    base_assumptions: &Assignment,
    opts: &EngineOptions,
) -> Result<CountReport, CountError> {
    partition_relation(theory)?;
    let partitions: Vec<CPartition> = enumerate_c_partitions(theory.n(), spec.m()).collect();
    let inner_opts = EngineOptions {
        workers: 0,
        ..opts.clone()
    };
    let rows: Result<Vec<PartitionCount>, CountError> =
        bitengine::with_workers(opts.workers, || {
            partitions
                .par_iter()
                .map(|x| partition_row(theory, spec, base_assumptions, x, &inner_opts))
                .collect()
        });
    let rows = rows?;
    let labeled_total = rows.iter().map(|r| r.contribution.clone()).sum();
    let unlabeled_total = rows.iter().map(|r| r.unlabeled_in_class.clone()).sum();
    Ok(CountReport {
        n: theory.n(),
        rows,
        labeled_total,
        unlabeled_total,
    })
}

fn partition_row(
    theory: &PropTheory,
    spec: &GoodPartitionSpec,
    base: &Assignment,
    x: &CPartition,
    opts: &EngineOptions,
) -> Result<PartitionCount, CountError> {
    let mut kills = theory.assumptions.clone();
    kills.update(base);
    kills.update(&kill_for_partition(spec, x, theory)?);

    let theta = reduce_constants(&substitute(&theory.theta(), &kills));
    let free: Vec<Letter> = theory
        .letters()
        .iter()
        .filter(|l| !kills.contains(l))
        .cloned()
        .collect();
    if free.len() as u32 > opts.max_vars {
        return Err(CountError::PartitionCapExceeded {
            sizes: x.sizes().to_vec(),
            v: free.len(),
            cap: opts.max_vars,
        });
    }
    let free_order: Arc<[Letter]> = free.into();

    let mut decode_error: Option<ModelError> = None;
    let mut realizing: Vec<LabeledModel> = Vec::new();
    let mut filter_error: Option<CountError> = None;
    bitengine::stream_models(&theta, free_order.clone(), opts, |ix| {
        let full = Valuation::from_index(free_order.clone(), ix).extended(&kills);
        let model = match decode_model(&full, theory) {
            Ok(m) => m,
            Err(e) => {
                decode_error = Some(e);
                return false;
            }
        };
        match realizes_partition(&model, spec, x) {
            Ok(true) => realizing.push(model),
            Ok(false) => {}
            Err(e) => {
                filter_error = Some(e);
                return false;
            }
        }
        true
    })?;
    if let Some(e) = decode_error {
        return Err(e.into());
    }
    if let Some(e) = filter_error {
        return Err(e);
    }

    let mut classes: BTreeSet<Vec<bool>> = BTreeSet::new();
    for model in &realizing {
        classes.insert(canonical_key(model)?);
    }
    let multiplicity = block_multiplicity(x);
    let labeled_in_class = BigUint::from(realizing.len());
    let contribution = multiplicity.clone() * labeled_in_class.clone();
    Ok(PartitionCount {
        sizes: x.sizes().to_vec(),
        labeled_in_class,
        unlabeled_in_class: BigUint::from(classes.len()),
        multiplicity,
        contribution,
    })
}

// ---------------------------------------------------------------------------
// Bounded-order fixtures: partial orders with a least and a greatest element,
// layered by iterated minimality.

/// Relation name used by the bounded-order fixtures; the letter `p(i,j)`
/// states `i <= j`.
pub const ORDER_RELATION: &str = "p";

fn rel(x: &str, y: &str) -> FolFormula {
    FolFormula::rel(ORDER_RELATION, vec![FolTerm::var(x), FolTerm::var(y)])
}

/// Axioms of a partial order on `I_n` with a least and a greatest element,
/// grounded over the single binary relation [`ORDER_RELATION`].
pub fn bounded_order_theory(n: usize) -> Result<PropTheory, CountError> {
    if n < 2 {
        return Err(CountError::DomainTooSmall { n, min: 2 });
    }
    let mut sig = Signature::new();
    sig.add_relation(ORDER_RELATION, 2)?;
    let reflexive = FolFormula::forall(
        "x",
        FolFormula::rel(ORDER_RELATION, vec![FolTerm::var("x"), FolTerm::var("x")]),
    );
    let antisymmetric = FolFormula::forall(
        "x",
        FolFormula::forall(
            "y",
            FolFormula::and(vec![rel("x", "y"), rel("y", "x")])
                .implies(FolFormula::eq(FolTerm::var("x"), FolTerm::var("y"))),
        ),
    );
    let transitive = FolFormula::forall(
        "x",
        FolFormula::forall(
            "y",
            FolFormula::forall(
                "z",
                FolFormula::and(vec![rel("x", "y"), rel("y", "z")]).implies(rel("x", "z")),
            ),
        ),
    );
    let least = FolFormula::exists("x", FolFormula::forall("y", rel("x", "y")));
    let greatest = FolFormula::exists("x", FolFormula::forall("y", rel("y", "x")));
    Ok(ground_theory(
        &[reflexive, antisymmetric, transitive, least, greatest],
        n,
        &sig,
    )?)
}

/// The iterated-minimality layers for orders on `I_n`: layer 0 is the least
/// element, layer k+1 the minimal elements once layers up to k are removed.
/// Elements of a later-or-equal layer are never below an earlier layer, so
/// every strict upper-triangle pair is oriented; the diagonal stays
/// unconstrained (reflexivity lives on it).
pub fn poset_layer_spec(n: usize) -> Result<GoodPartitionSpec, CountError> {
    if n < 2 {
        return Err(CountError::DomainTooSmall { n, min: 2 });
    }
    let mut layers: Vec<LayerFormula> = Vec::with_capacity(n);
    let mut formulas: Vec<FolFormula> = Vec::with_capacity(n);
    for k in 0..n {
        let bound = format!("y{k}");
        let theta_k = if k == 0 {
            // Layer 0: the least element.
            FolFormula::forall(
                bound,
                FolFormula::rel(ORDER_RELATION, vec![FolTerm::var("x"), FolTerm::var("y0")]),
            )
        } else {
            // Layer k: minimal once earlier layers are removed — no y
            // outside them lies strictly below x.
            let nothing_below = {
                let mut parts: Vec<FolFormula> = formulas
                    .iter()
                    .map(|theta| substitute_free_var(theta, "x", &FolTerm::var(bound.clone())))
                    .collect();
                parts.push(
                    FolFormula::rel(
                        ORDER_RELATION,
                        vec![FolTerm::var(bound.clone()), FolTerm::var("x")],
                    )
                    .not(),
                );
                parts.push(FolFormula::eq(
                    FolTerm::var(bound.clone()),
                    FolTerm::var("x"),
                ));
                FolFormula::or(parts)
            };
            let minimal_in_rest = FolFormula::forall(bound, nothing_below);
            let mut parts = vec![minimal_in_rest];
            parts.extend(formulas.iter().map(|theta| theta.clone().not()));
            FolFormula::and(parts)
        };
        formulas.push(theta_k.clone());
        layers.push(LayerFormula::new("x", theta_k)?);
    }
    let mut spec = GoodPartitionSpec::new(layers);
    for i in 0..n {
        for j in (i + 1)..n {
            spec.set_orientation(i, j, Orientation::NotBackward)?;
        }
    }
    Ok(spec)
}

/// The fixed letters of bounded orders on `I_n`: 0 is least, `n-1` is
/// greatest, the relation is reflexive. Kills `5n - 6` letters.
pub fn poset_base_kills(n: usize) -> Result<Assignment, CountError> {
    if n < 2 {
        return Err(CountError::DomainTooSmall { n, min: 2 });
    }
    let letter = |a: usize, b: usize| Letter::indexed(ORDER_RELATION, vec![a as i64, b as i64]);
    let mut kills = Assignment::new();
    for i in 0..n {
        kills.set(letter(0, i), true); // least element below everything
        kills.set(letter(i, n - 1), true); // greatest element above everything
        kills.set(letter(i, i), true); // reflexivity
    }
    for j in 1..n {
        kills.set(letter(j, 0), false); // nothing else below the least
    }
    for k in 0..n - 1 {
        kills.set(letter(n - 1, k), false); // greatest below nothing else
    }
    debug_assert_eq!(kills.len(), 5 * n - 6);
    Ok(kills)
}

/// Number of iterated-minimality c-partitions of a bounded order on `I_n`:
/// the compositions of the `n - 2` middle elements, `2^(n-3)` of them for
/// `n >= 3` and exactly one (the empty middle) for `n = 2`.
pub fn poset_cpartition_count(n: usize) -> Result<BigUint, CountError> {
    if n < 2 {
        return Err(CountError::DomainTooSmall { n, min: 2 });
    }
    if n == 2 {
        return Ok(BigUint::one());
    }
    Ok(BigUint::one() << (n - 3))
}
