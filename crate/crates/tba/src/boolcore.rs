//! Boolean terms over named letters: constant reduction, substitution and a
//! naive evaluation oracle.
//!
//! Everything downstream (the bit-parallel engine, grounding, the script
//! front end) speaks [`BoolTerm`] over [`Letter`]s. The canonical letter
//! order — lexicographic by `(family, index tuple)` — is fixed here and used
//! for every variable order, valuation index and file output in the crate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// A propositional letter: a family name plus an integer index tuple.
///
/// `x` is the 0-ary letter `Letter::named("x")`; `p(0,1)` is
/// `Letter::indexed("p", [0, 1])`. The derived ordering (family first, then
/// the tuple componentwise) is the canonical letter order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    family: String,
    indices: Vec<i64>,
}

impl Letter {
    pub fn named(family: impl Into<String>) -> Self {
        Letter {
            family: family.into(),
            indices: Vec::new(),
        }
    }

    pub fn indexed(family: impl Into<String>, indices: impl Into<Vec<i64>>) -> Self {
        Letter {
            family: family.into(),
            indices: indices.into(),
        }
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        if !self.indices.is_empty() {
            write!(f, "(")?;
            for (k, ix) in self.indices.iter().enumerate() {
                if k > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{ix}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl From<&str> for Letter {
    fn from(name: &str) -> Self {
        Letter::named(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoolError {
    #[error("letter {0} is not bound by the valuation")]
    UnboundLetter(Letter),
}

/// A propositional term.
///
/// `And`/`Or` nodes are n-ary and hold at least two children; use the
/// [`BoolTerm::and`]/[`BoolTerm::or`] constructors, which collapse the empty
/// and singleton cases. Grounded theories produce very wide conjunctions, so
/// the n-ary form is kept in the tree and only binarized for node counting
/// and engine compilation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum BoolTerm {
    Const(bool),
    Var(Letter),
    Not(Box<BoolTerm>),
    And(Vec<BoolTerm>),
    Or(Vec<BoolTerm>),
    Xor(Box<BoolTerm>, Box<BoolTerm>),
    Implies(Box<BoolTerm>, Box<BoolTerm>),
    Iff(Box<BoolTerm>, Box<BoolTerm>),
}

impl BoolTerm {
    pub const TRUE: BoolTerm = BoolTerm::Const(true);
    pub const FALSE: BoolTerm = BoolTerm::Const(false);

    pub fn var(letter: impl Into<Letter>) -> Self {
        BoolTerm::Var(letter.into())
    }

    /// N-ary conjunction; empty yields `Const(true)`, singleton the child itself.
    pub fn and(mut children: Vec<BoolTerm>) -> Self {
        match children.len() {
            0 => BoolTerm::TRUE,
            1 => children.pop().unwrap(),
            _ => BoolTerm::And(children),
        }
    }

    /// N-ary disjunction; empty yields `Const(false)`, singleton the child itself.
    pub fn or(mut children: Vec<BoolTerm>) -> Self {
        match children.len() {
            0 => BoolTerm::FALSE,
            1 => children.pop().unwrap(),
            _ => BoolTerm::Or(children),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        BoolTerm::Not(Box::new(self))
    }

    pub fn xor(self, rhs: BoolTerm) -> Self {
        BoolTerm::Xor(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: BoolTerm) -> Self {
        BoolTerm::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn iff(self, rhs: BoolTerm) -> Self {
        BoolTerm::Iff(Box::new(self), Box::new(rhs))
    }

    pub fn is_const(&self) -> Option<bool> {
        match self {
            BoolTerm::Const(b) => Some(*b),
            _ => None,
        }
    }
}

/// Negation that never stacks: constants flip, double negations cancel.
fn mk_not(t: BoolTerm) -> BoolTerm {
    match t {
        BoolTerm::Const(b) => BoolTerm::Const(!b),
        BoolTerm::Not(inner) => *inner,
        other => BoolTerm::Not(Box::new(other)),
    }
}

/// Propagates constants through all seven connectives and eliminates double
/// negations. No other simplification is performed, so the pass is linear
/// and predictable. The result contains no `Const` node unless the whole
/// term collapsed to one, and reducing twice is the identity.
pub fn reduce_constants(t: &BoolTerm) -> BoolTerm {
    match t {
        BoolTerm::Const(_) | BoolTerm::Var(_) => t.clone(),
        BoolTerm::Not(c) => mk_not(reduce_constants(c)),
        BoolTerm::And(cs) => {
            let mut out = Vec::with_capacity(cs.len());
            for c in cs {
                match reduce_constants(c) {
                    BoolTerm::Const(false) => return BoolTerm::FALSE,
                    BoolTerm::Const(true) => {}
                    r => out.push(r),
                }
            }
            BoolTerm::and(out)
        }
        BoolTerm::Or(cs) => {
            let mut out = Vec::with_capacity(cs.len());
            for c in cs {
                match reduce_constants(c) {
                    BoolTerm::Const(true) => return BoolTerm::TRUE,
                    BoolTerm::Const(false) => {}
                    r => out.push(r),
                }
            }
            BoolTerm::or(out)
        }
        BoolTerm::Xor(a, b) => match (reduce_constants(a), reduce_constants(b)) {
            (BoolTerm::Const(x), BoolTerm::Const(y)) => BoolTerm::Const(x ^ y),
            (BoolTerm::Const(false), r) | (r, BoolTerm::Const(false)) => r,
            (BoolTerm::Const(true), r) | (r, BoolTerm::Const(true)) => mk_not(r),
            (ra, rb) => ra.xor(rb),
        },
        BoolTerm::Implies(a, b) => match (reduce_constants(a), reduce_constants(b)) {
            (BoolTerm::Const(false), _) => BoolTerm::TRUE,
            (_, BoolTerm::Const(true)) => BoolTerm::TRUE,
            (BoolTerm::Const(true), rb) => rb,
            (ra, BoolTerm::Const(false)) => mk_not(ra),
            (ra, rb) => ra.implies(rb),
        },
        BoolTerm::Iff(a, b) => match (reduce_constants(a), reduce_constants(b)) {
            (BoolTerm::Const(x), BoolTerm::Const(y)) => BoolTerm::Const(x == y),
            (BoolTerm::Const(true), r) | (r, BoolTerm::Const(true)) => r,
            (BoolTerm::Const(false), r) | (r, BoolTerm::Const(false)) => mk_not(r),
            (ra, rb) => ra.iff(rb),
        },
    }
}

/// Replaces every bound letter by its constant. No reduction is performed;
/// compose with [`reduce_constants`] to fold the constants away.
pub fn substitute(t: &BoolTerm, a: &Assignment) -> BoolTerm {
    match t {
        BoolTerm::Const(_) => t.clone(),
        BoolTerm::Var(l) => match a.get(l) {
            Some(b) => BoolTerm::Const(b),
            None => t.clone(),
        },
        BoolTerm::Not(c) => BoolTerm::Not(Box::new(substitute(c, a))),
        BoolTerm::And(cs) => BoolTerm::And(cs.iter().map(|c| substitute(c, a)).collect()),
        BoolTerm::Or(cs) => BoolTerm::Or(cs.iter().map(|c| substitute(c, a)).collect()),
        BoolTerm::Xor(l, r) => substitute(l, a).xor(substitute(r, a)),
        BoolTerm::Implies(l, r) => substitute(l, a).implies(substitute(r, a)),
        BoolTerm::Iff(l, r) => substitute(l, a).iff(substitute(r, a)),
    }
}

/// Two-valued semantics; `Xor` is symmetric difference. Fails if the
/// valuation misses a letter of the term.
pub fn eval_naive(t: &BoolTerm, v: &Valuation) -> Result<bool, BoolError> {
    match t {
        BoolTerm::Const(b) => Ok(*b),
        BoolTerm::Var(l) => v.get(l).ok_or_else(|| BoolError::UnboundLetter(l.clone())),
        BoolTerm::Not(c) => Ok(!eval_naive(c, v)?),
        BoolTerm::And(cs) => {
            let mut acc = true;
            for c in cs {
                acc &= eval_naive(c, v)?;
            }
            Ok(acc)
        }
        BoolTerm::Or(cs) => {
            let mut acc = false;
            for c in cs {
                acc |= eval_naive(c, v)?;
            }
            Ok(acc)
        }
        BoolTerm::Xor(l, r) => Ok(eval_naive(l, v)? ^ eval_naive(r, v)?),
        BoolTerm::Implies(l, r) => Ok(!eval_naive(l, v)? | eval_naive(r, v)?),
        BoolTerm::Iff(l, r) => Ok(eval_naive(l, v)? == eval_naive(r, v)?),
    }
}

/// The letters of `t` in canonical order.
pub fn vars(t: &BoolTerm) -> Vec<Letter> {
    let mut set = BTreeSet::new();
    collect_vars(t, &mut set);
    set.into_iter().collect()
}

fn collect_vars(t: &BoolTerm, out: &mut BTreeSet<Letter>) {
    match t {
        BoolTerm::Const(_) => {}
        BoolTerm::Var(l) => {
            out.insert(l.clone());
        }
        BoolTerm::Not(c) => collect_vars(c, out),
        BoolTerm::And(cs) | BoolTerm::Or(cs) => {
            for c in cs {
                collect_vars(c, out);
            }
        }
        BoolTerm::Xor(l, r) | BoolTerm::Implies(l, r) | BoolTerm::Iff(l, r) => {
            collect_vars(l, out);
            collect_vars(r, out);
        }
    }
}

/// Node count of the binarized tree: n-ary `And`/`Or` are counted as if
/// folded left-associatively, so a k-child node contributes k-1 inner nodes.
pub fn node_count(t: &BoolTerm) -> u64 {
    match t {
        BoolTerm::Const(_) | BoolTerm::Var(_) => 1,
        BoolTerm::Not(c) => 1 + node_count(c),
        BoolTerm::And(cs) | BoolTerm::Or(cs) => {
            let children: u64 = cs.iter().map(node_count).sum();
            children + (cs.len() as u64 - 1)
        }
        BoolTerm::Xor(l, r) | BoolTerm::Implies(l, r) | BoolTerm::Iff(l, r) => {
            1 + node_count(l) + node_count(r)
        }
    }
}

impl fmt::Display for BoolTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_term(self, f, 0)
    }
}

// Precedence levels: <-> 1, -> 2, | 3, ^ 4, & 5, ~ 6.
fn fmt_term(t: &BoolTerm, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
    let prec = match t {
        BoolTerm::Const(_) | BoolTerm::Var(_) => 7,
        BoolTerm::Not(_) => 6,
        BoolTerm::And(_) => 5,
        BoolTerm::Xor(..) => 4,
        BoolTerm::Or(_) => 3,
        BoolTerm::Implies(..) => 2,
        BoolTerm::Iff(..) => 1,
    };
    let need_parens = prec < parent;
    if need_parens {
        write!(f, "(")?;
    }
    match t {
        BoolTerm::Const(b) => write!(f, "{}", u8::from(*b))?,
        BoolTerm::Var(l) => write!(f, "{l}")?,
        BoolTerm::Not(c) => {
            write!(f, "~")?;
            fmt_term(c, f, 7)?;
        }
        BoolTerm::And(cs) => fmt_chain(cs, " & ", f, prec)?,
        BoolTerm::Or(cs) => fmt_chain(cs, " | ", f, prec)?,
        BoolTerm::Xor(l, r) => {
            fmt_term(l, f, prec)?;
            write!(f, " ^ ")?;
            fmt_term(r, f, prec + 1)?;
        }
        BoolTerm::Implies(l, r) => {
            fmt_term(l, f, prec + 1)?;
            write!(f, " -> ")?;
            fmt_term(r, f, prec)?;
        }
        BoolTerm::Iff(l, r) => {
            fmt_term(l, f, prec)?;
            write!(f, " <-> ")?;
            fmt_term(r, f, prec + 1)?;
        }
    }
    if need_parens {
        write!(f, ")")?;
    }
    Ok(())
}

fn fmt_chain(cs: &[BoolTerm], sep: &str, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    for (k, c) in cs.iter().enumerate() {
        if k > 0 {
            write!(f, "{sep}")?;
        }
        fmt_term(c, f, prec + 1)?;
    }
    Ok(())
}

/// Partial map from letters to bits. Inserting twice keeps the later value;
/// update order is significant for script assumption blocks.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Assignment {
    map: BTreeMap<Letter, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, letter: Letter, value: bool) {
        self.map.insert(letter, value);
    }

    pub fn get(&self, letter: &Letter) -> Option<bool> {
        self.map.get(letter).copied()
    }

    pub fn contains(&self, letter: &Letter) -> bool {
        self.map.contains_key(letter)
    }

    /// Applies every binding of `other` on top of this one.
    pub fn update(&mut self, other: &Assignment) {
        for (l, b) in &other.map {
            self.map.insert(l.clone(), *b);
        }
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Letter, bool)> {
        self.map.iter().map(|(l, b)| (l, *b))
    }

    pub fn letters(&self) -> impl Iterator<Item = &Letter> {
        self.map.keys()
    }
}

impl FromIterator<(Letter, bool)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (Letter, bool)>>(iter: I) -> Self {
        Assignment {
            map: iter.into_iter().collect(),
        }
    }
}

/// Total assignment over an ordered letter set.
///
/// A valuation is equivalently an index into `0..2^v`: position `i`
/// (0-based) in the order carries bit `(index >> (v-1-i)) & 1`, so the first
/// letter is the most significant bit of the index. Orders are kept sorted
/// canonically, which makes lookup a binary search.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Valuation {
    order: Arc<[Letter]>,
    bits: Vec<u64>,
}

impl Valuation {
    /// The valuation with the given index under the bit convention above.
    /// Panics if `index` does not fit `v` bits (engine callers never exceed
    /// the feasibility cap, which is far below 64).
    pub fn from_index(order: Arc<[Letter]>, index: u64) -> Self {
        let v = order.len();
        assert!(
            v >= 64 || index < (1u64 << v),
            "valuation index out of range"
        );
        debug_assert!(
            order.windows(2).all(|w| w[0] < w[1]),
            "order must be sorted"
        );
        let mut bits = vec![0u64; v.div_ceil(64)];
        for i in 0..v {
            if (index >> (v - 1 - i)) & 1 == 1 {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        Valuation { order, bits }
    }

    /// Builds a valuation from explicit pairs; letters are sorted into
    /// canonical order first. Duplicate letters keep the last value.
    pub fn from_pairs(pairs: &[(Letter, bool)]) -> Self {
        let map: BTreeMap<Letter, bool> = pairs.iter().cloned().collect();
        let order: Arc<[Letter]> = map.keys().cloned().collect::<Vec<_>>().into();
        let mut bits = vec![0u64; order.len().div_ceil(64)];
        for (i, (_, b)) in map.iter().enumerate() {
            if *b {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        Valuation { order, bits }
    }

    /// Total valuation over `order` whose bit at position `i` is `f(i)`.
    pub fn from_fn(order: Arc<[Letter]>, f: impl Fn(usize) -> bool) -> Self {
        let v = order.len();
        debug_assert!(
            order.windows(2).all(|w| w[0] < w[1]),
            "order must be sorted"
        );
        let mut bits = vec![0u64; v.div_ceil(64)];
        for i in 0..v {
            if f(i) {
                bits[i / 64] |= 1 << (i % 64);
            }
        }
        Valuation { order, bits }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Bit at position `pos` of the letter order.
    pub fn bit(&self, pos: usize) -> bool {
        assert!(pos < self.order.len());
        (self.bits[pos / 64] >> (pos % 64)) & 1 == 1
    }

    pub fn get(&self, letter: &Letter) -> Option<bool> {
        let pos = self.order.binary_search(letter).ok()?;
        Some(self.bit(pos))
    }

    /// The valuation index when the letter set fits in 64 bits.
    pub fn index(&self) -> Option<u64> {
        let v = self.order.len();
        if v > 64 {
            return None;
        }
        let mut ix = 0u64;
        for i in 0..v {
            ix = (ix << 1) | u64::from(self.bit(i));
        }
        Some(ix)
    }

    /// Row of `'0'`/`'1'` characters over the letter order.
    pub fn row_string(&self) -> String {
        (0..self.order.len())
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Extends this valuation with extra bindings (used to reinstate killed
    /// letters). The result is re-sorted into canonical order.
    pub fn extended(&self, extra: &Assignment) -> Valuation {
        let mut pairs: Vec<(Letter, bool)> = self
            .order
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), self.bit(i)))
            .collect();
        pairs.extend(extra.iter().map(|(l, b)| (l.clone(), b)));
        Valuation::from_pairs(&pairs)
    }
}
