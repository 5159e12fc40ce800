//! Labeled finite models over the domain `I_n`, the decode/encode
//! correspondence with valuations of the grounded letter set, direct
//! first-order satisfaction, and relabeling/automorphism machinery with the
//! labeled-count identity `l = sum n!/|Aut(A)|`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::boolcore::{Letter, Valuation};
use crate::fol::{FolFormula, FolTerm, PropLetter, PropTheory, Signature, SymbolKind};

/// Permutation searches are factorial; anything above this is refused.
pub const PERMUTATION_SEARCH_MAX_N: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("valuation assigns {found} values to {symbol}({tuple}); functions need exactly one")]
    FunctionalityViolation {
        symbol: String,
        tuple: String,
        found: usize,
    },
    #[error("letter {0} missing from the valuation")]
    MissingLetter(Letter),
    #[error("domain size {n} above the permutation-search guard {guard}")]
    GuardExceeded { n: usize, guard: usize },
    #[error("unknown symbol {0}")]
    UnknownSymbol(String),
    #[error("symbol {symbol} expects {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("free variable {0} under satisfaction")]
    FreeVariable(String),
    #[error("element {element} outside the domain 0..{n}")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("models over different signatures or domain sizes")]
    IncompatibleModels,
}

/// A finite structure whose domain is literally `{0, ..., n-1}`: total
/// function tables (row-major) and relation tables per symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabeledModel {
    n: usize,
    signature: Arc<Signature>,
    functions: BTreeMap<String, Vec<usize>>,
    relations: BTreeMap<String, Vec<bool>>,
}

fn table_index(n: usize, args: &[usize]) -> usize {
    let mut ix = 0;
    for &a in args {
        debug_assert!(a < n);
        ix = ix * n + a;
    }
    ix
}

impl LabeledModel {
    /// A model with all function values 0 and all relations empty.
    pub fn new(signature: Arc<Signature>, n: usize) -> Self {
        let mut functions = BTreeMap::new();
        for (name, arity) in signature.functions() {
            functions.insert(name.clone(), vec![0; n.pow(*arity as u32)]);
        }
        let mut relations = BTreeMap::new();
        for (name, arity) in signature.relations() {
            relations.insert(name.clone(), vec![false; n.pow(*arity as u32)]);
        }
        LabeledModel {
            n,
            signature,
            functions,
            relations,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.signature
    }

    pub fn fun_value(&self, symbol: &str, args: &[usize]) -> Result<usize, ModelError> {
        let table = self
            .functions
            .get(symbol)
            .ok_or_else(|| ModelError::UnknownSymbol(symbol.to_string()))?;
        Ok(table[table_index(self.n, args)])
    }

    pub fn set_fun_value(
        &mut self,
        symbol: &str,
        args: &[usize],
        value: usize,
    ) -> Result<(), ModelError> {
        if value >= self.n {
            return Err(ModelError::ElementOutOfRange {
                element: value,
                n: self.n,
            });
        }
        let n = self.n;
        let table = self
            .functions
            .get_mut(symbol)
            .ok_or_else(|| ModelError::UnknownSymbol(symbol.to_string()))?;
        table[table_index(n, args)] = value;
        Ok(())
    }

    pub fn rel_holds(&self, symbol: &str, args: &[usize]) -> Result<bool, ModelError> {
        let table = self
            .relations
            .get(symbol)
            .ok_or_else(|| ModelError::UnknownSymbol(symbol.to_string()))?;
        Ok(table[table_index(self.n, args)])
    }

    pub fn set_rel(&mut self, symbol: &str, args: &[usize], holds: bool) -> Result<(), ModelError> {
        let n = self.n;
        let table = self
            .relations
            .get_mut(symbol)
            .ok_or_else(|| ModelError::UnknownSymbol(symbol.to_string()))?;
        table[table_index(n, args)] = holds;
        Ok(())
    }

    /// Constant value, i.e. the table entry of a 0-ary function.
    pub fn constant(&self, symbol: &str) -> Result<usize, ModelError> {
        self.fun_value(symbol, &[])
    }
}

impl fmt::Display for LabeledModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        for (name, table) in &self.functions {
            let arity = self
                .signature
                .functions()
                .iter()
                .find(|(s, _)| s == name)
                .map(|(_, a)| *a)
                .unwrap_or(0);
            if arity == 0 {
                writeln!(f, "{name} = {}", table[0])?;
                continue;
            }
            write!(f, "fun {name}:")?;
            for tuple in crate::fol::tuples(self.n, arity) {
                write!(f, " {name}(")?;
                for (i, a) in tuple.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")={}", table[table_index(self.n, &tuple)])?;
            }
            writeln!(f)?;
        }
        for (name, table) in &self.relations {
            let arity = self
                .signature
                .relations()
                .iter()
                .find(|(s, _)| s == name)
                .map(|(_, a)| *a)
                .unwrap_or(0);
            if arity == 2 {
                writeln!(f, "rel {name}:")?;
                for i in 0..self.n {
                    write!(f, "  ")?;
                    for j in 0..self.n {
                        write!(f, "{}", u8::from(table[i * self.n + j]))?;
                    }
                    writeln!(f)?;
                }
            } else {
                write!(f, "rel {name}: {{")?;
                let mut first = true;
                for tuple in crate::fol::tuples(self.n, arity) {
                    if table[table_index(self.n, &tuple)] {
                        if !first {
                            write!(f, ", ")?;
                        }
                        first = false;
                        write!(f, "(")?;
                        for (i, a) in tuple.iter().enumerate() {
                            if i > 0 {
                                write!(f, ",")?;
                            }
                            write!(f, "{a}")?;
                        }
                        write!(f, ")")?;
                    }
                }
                writeln!(f, "}}")?;
            }
        }
        Ok(())
    }
}

/// Reads the structure off a valuation of the grounded letter set: function
/// tables from graph letters, relations from membership letters. Fails if
/// some tuple has no value or several.
pub fn decode_model(mu: &Valuation, theory: &PropTheory) -> Result<LabeledModel, ModelError> {
    let sig = theory.signature();
    let n = theory.n();
    let mut model = LabeledModel::new(sig.clone(), n);
    for (name, arity) in sig.functions() {
        for tuple in crate::fol::tuples(n, *arity) {
            let mut value = None;
            let mut found = 0;
            for b in 0..n {
                let letter = PropLetter::Fun {
                    symbol: name.clone(),
                    args: tuple.clone(),
                    value: b,
                }
                .to_letter();
                let bit = mu.get(&letter).ok_or(ModelError::MissingLetter(letter))?;
                if bit {
                    found += 1;
                    value = Some(b);
                }
            }
            if found != 1 {
                return Err(ModelError::FunctionalityViolation {
                    symbol: name.clone(),
                    tuple: tuple
                        .iter()
                        .map(|a| a.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    found,
                });
            }
            model.set_fun_value(name, &tuple, value.unwrap())?;
        }
    }
    for (name, arity) in sig.relations() {
        for tuple in crate::fol::tuples(n, *arity) {
            let letter = PropLetter::Rel {
                symbol: name.clone(),
                args: tuple.clone(),
            }
            .to_letter();
            let bit = mu.get(&letter).ok_or(ModelError::MissingLetter(letter))?;
            model.set_rel(name, &tuple, bit)?;
        }
    }
    Ok(model)
}

/// The exact inverse of [`decode_model`]: the valuation over `order` whose
/// letters read the model's tables.
pub fn encode_valuation(model: &LabeledModel, order: Arc<[Letter]>) -> Valuation {
    let sig = model.signature().clone();
    let n = model.n();
    let bits: Vec<bool> = order
        .iter()
        .map(|letter| match PropLetter::from_letter(&sig, letter, n) {
            Ok(PropLetter::Fun {
                symbol,
                args,
                value,
            }) => model
                .fun_value(&symbol, &args)
                .map(|v| v == value)
                .unwrap_or(false),
            Ok(PropLetter::Rel { symbol, args }) => {
                model.rel_holds(&symbol, &args).unwrap_or(false)
            }
            Err(_) => false,
        })
        .collect();
    Valuation::from_fn(order, move |i| bits[i])
}

/// Standard Tarskian satisfaction; quantifiers range over `I_n`.
pub fn satisfies(model: &LabeledModel, phi: &FolFormula) -> Result<bool, ModelError> {
    let mut env = HashMap::new();
    satisfies_under(model, phi, &mut env)
}

/// Satisfaction with an explicit element environment for free variables.
pub fn satisfies_under(
    model: &LabeledModel,
    phi: &FolFormula,
    env: &mut HashMap<String, usize>,
) -> Result<bool, ModelError> {
    match phi {
        FolFormula::Eq(l, r) => Ok(eval_term(model, l, env)? == eval_term(model, r, env)?),
        FolFormula::Rel(name, args) => {
            let arity = match model.signature().lookup(name) {
                Some((SymbolKind::Relation, arity)) => arity,
                _ => return Err(ModelError::UnknownSymbol(name.clone())),
            };
            if args.len() != arity {
                return Err(ModelError::ArityMismatch {
                    symbol: name.clone(),
                    expected: arity,
                    got: args.len(),
                });
            }
            let vals = args
                .iter()
                .map(|a| eval_term(model, a, env))
                .collect::<Result<Vec<_>, _>>()?;
            model.rel_holds(name, &vals)
        }
        FolFormula::Not(c) => Ok(!satisfies_under(model, c, env)?),
        FolFormula::And(cs) => {
            for c in cs {
                if !satisfies_under(model, c, env)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        FolFormula::Or(cs) => {
            for c in cs {
                if satisfies_under(model, c, env)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        FolFormula::Implies(l, r) => {
            Ok(!satisfies_under(model, l, env)? || satisfies_under(model, r, env)?)
        }
        FolFormula::Iff(l, r) => {
            Ok(satisfies_under(model, l, env)? == satisfies_under(model, r, env)?)
        }
        FolFormula::Forall(v, body) | FolFormula::Exists(v, body) => {
            let forall = matches!(phi, FolFormula::Forall(..));
            let saved = env.get(v).copied();
            let mut result = forall;
            for a in 0..model.n() {
                env.insert(v.clone(), a);
                let here = satisfies_under(model, body, env);
                match saved {
                    Some(old) => {
                        env.insert(v.clone(), old);
                    }
                    None => {
                        env.remove(v);
                    }
                }
                let here = here?;
                if forall && !here {
                    result = false;
                    break;
                }
                if !forall && here {
                    result = true;
                    break;
                }
            }
            Ok(result)
        }
    }
}

fn eval_term(
    model: &LabeledModel,
    t: &FolTerm,
    env: &HashMap<String, usize>,
) -> Result<usize, ModelError> {
    match t {
        FolTerm::Var(v) => env
            .get(v)
            .copied()
            .ok_or_else(|| ModelError::FreeVariable(v.clone())),
        FolTerm::Element(a) => {
            if *a >= model.n() {
                return Err(ModelError::ElementOutOfRange {
                    element: *a,
                    n: model.n(),
                });
            }
            Ok(*a)
        }
        FolTerm::App(name, args) => {
            let arity = match model.signature().lookup(name) {
                Some((SymbolKind::Function, arity)) => arity,
                _ => return Err(ModelError::UnknownSymbol(name.clone())),
            };
            if args.len() != arity {
                return Err(ModelError::ArityMismatch {
                    symbol: name.clone(),
                    expected: arity,
                    got: args.len(),
                });
            }
            let vals = args
                .iter()
                .map(|a| eval_term(model, a, env))
                .collect::<Result<Vec<_>, _>>()?;
            model.fun_value(name, &vals)
        }
    }
}

/// A bijection of `I_n`, stored as the image vector.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, ModelError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(ModelError::NotAPermutation(n));
            }
            seen[i] = true;
        }
        Ok(Permutation(images))
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &img) in self.0.iter().enumerate() {
            inv[img] = i;
        }
        Permutation(inv)
    }

    /// Composition `self . other`: first apply `other`, then `self`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    /// All permutations of `I_n` in lexicographic order of image vectors.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        use itertools::Itertools;
        (0..n).permutations(n).map(Permutation)
    }
}

/// Transports the structure along a relabeling: relations pull back through
/// the permutation, function values through its inverse.
pub fn relabel(model: &LabeledModel, pi: &Permutation) -> LabeledModel {
    let n = model.n();
    assert_eq!(pi.n(), n);
    let inv = pi.inverse();
    let mut out = LabeledModel::new(model.signature().clone(), n);
    for (name, arity) in model.signature().functions().to_vec() {
        for tuple in crate::fol::tuples(n, arity) {
            let mapped: Vec<usize> = tuple.iter().map(|&i| pi.apply(i)).collect();
            let value = inv.apply(model.fun_value(&name, &mapped).unwrap());
            out.set_fun_value(&name, &tuple, value).unwrap();
        }
    }
    for (name, arity) in model.signature().relations().to_vec() {
        for tuple in crate::fol::tuples(n, arity) {
            let mapped: Vec<usize> = tuple.iter().map(|&i| pi.apply(i)).collect();
            let holds = model.rel_holds(&name, &mapped).unwrap();
            out.set_rel(&name, &tuple, holds).unwrap();
        }
    }
    out
}

fn guard(n: usize) -> Result<(), ModelError> {
    if n > PERMUTATION_SEARCH_MAX_N {
        return Err(ModelError::GuardExceeded {
            n,
            guard: PERMUTATION_SEARCH_MAX_N,
        });
    }
    Ok(())
}

/// Per-element invariants used to prune the permutation search: for every
/// relation, the number of true tuples holding the element at each
/// position; for every function, the element's out-value multiset size as
/// image. Any automorphism or isomorphism must preserve these counts.
fn fingerprints(model: &LabeledModel) -> Vec<Vec<usize>> {
    let n = model.n();
    let mut fps = vec![Vec::new(); n];
    for (name, arity) in model.signature().relations() {
        for pos in 0..*arity {
            let mut counts = vec![0usize; n];
            for tuple in crate::fol::tuples(n, *arity) {
                if model.rel_holds(name, &tuple).unwrap() {
                    counts[tuple[pos]] += 1;
                }
            }
            for (i, fp) in fps.iter_mut().enumerate() {
                fp.push(counts[i]);
            }
        }
    }
    for (name, arity) in model.signature().functions() {
        let mut image_counts = vec![0usize; n];
        for tuple in crate::fol::tuples(n, *arity) {
            image_counts[model.fun_value(name, &tuple).unwrap()] += 1;
        }
        for (i, fp) in fps.iter_mut().enumerate() {
            fp.push(image_counts[i]);
        }
    }
    fps
}

/// Searches all permutations `pi` with `relabel(source, pi) == target`,
/// pruning on per-element invariants; calls `found` for each hit and stops
/// early when it returns `false`.
fn permutation_search(
    source: &LabeledModel,
    target: &LabeledModel,
    mut found: impl FnMut(Permutation) -> bool,
) -> Result<(), ModelError> {
    let n = source.n();
    guard(n)?;
    if source.signature() != target.signature() || n != target.n() {
        return Err(ModelError::IncompatibleModels);
    }
    let fp_source = fingerprints(source);
    let fp_target = fingerprints(target);
    // pi maps target positions to source elements: relabel(source, pi) == target
    // requires fp_source[pi(i)] == fp_target[i].
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
    for fp in &fp_target {
        let c: Vec<usize> = (0..n).filter(|&j| fp_source[j] == *fp).collect();
        if c.is_empty() {
            return Ok(());
        }
        candidates.push(c);
    }
    let mut images = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search_rec(
        source,
        target,
        &candidates,
        &mut images,
        &mut used,
        0,
        &mut found,
    );
    Ok(())
}

fn search_rec(
    source: &LabeledModel,
    target: &LabeledModel,
    candidates: &[Vec<usize>],
    images: &mut Vec<usize>,
    used: &mut Vec<bool>,
    depth: usize,
    found: &mut impl FnMut(Permutation) -> bool,
) -> bool {
    let n = source.n();
    if depth == n {
        let pi = Permutation(images.clone());
        if &relabel(source, &pi) == target {
            return found(pi);
        }
        return true;
    }
    for &cand in &candidates[depth] {
        if used[cand] {
            continue;
        }
        images[depth] = cand;
        used[cand] = true;
        let ok = prefix_consistent(source, target, images, depth);
        let keep_going = if ok {
            search_rec(source, target, candidates, images, used, depth + 1, found)
        } else {
            true
        };
        used[cand] = false;
        images[depth] = usize::MAX;
        if !keep_going {
            return false;
        }
    }
    true
}

/// Checks relation tuples that lie entirely within the assigned prefix
/// `0..=depth` and mention `depth`.
fn prefix_consistent(
    source: &LabeledModel,
    target: &LabeledModel,
    images: &[usize],
    depth: usize,
) -> bool {
    for (name, arity) in target.signature().relations() {
        let assigned: Vec<usize> = (0..=depth).collect();
        for tuple in tuples_over(&assigned, *arity) {
            if !tuple.contains(&depth) {
                continue;
            }
            let mapped: Vec<usize> = tuple.iter().map(|&i| images[i]).collect();
            if source.rel_holds(name, &mapped).unwrap() != target.rel_holds(name, &tuple).unwrap() {
                return false;
            }
        }
    }
    true
}

fn tuples_over(elements: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                elements.iter().map(move |&a| {
                    let mut t2 = t.clone();
                    t2.push(a);
                    t2
                })
            })
            .collect();
    }
    out
}

/// All automorphisms of the model (permutations fixing every table).
pub fn automorphisms(model: &LabeledModel) -> Result<Vec<Permutation>, ModelError> {
    let mut out = Vec::new();
    permutation_search(model, model, |pi| {
        out.push(pi);
        true
    })?;
    Ok(out)
}

/// Some relabeling carrying `a` onto `b`, if the models are isomorphic.
pub fn is_isomorphic(
    a: &LabeledModel,
    b: &LabeledModel,
) -> Result<Option<Permutation>, ModelError> {
    let mut hit = None;
    permutation_search(a, b, |pi| {
        hit = Some(pi);
        false
    })?;
    Ok(hit)
}

/// The canonical representative of the isomorphism class: the relabeling
/// whose encoded letter bitstring is lexicographically minimal.
pub fn canonical_form(model: &LabeledModel) -> Result<LabeledModel, ModelError> {
    guard(model.n())?;
    let order: Arc<[Letter]> = model.signature().letters(model.n()).into();
    let mut best: Option<(Vec<bool>, LabeledModel)> = None;
    for pi in Permutation::all(model.n()) {
        let candidate = relabel(model, &pi);
        let encoded = encode_valuation(&candidate, order.clone());
        let key: Vec<bool> = (0..order.len()).map(|i| encoded.bit(i)).collect();
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, candidate));
        }
    }
    Ok(best.expect("at least the identity relabeling").1)
}

/// The canonical encoded bitstring, usable as a dedup key.
pub fn canonical_key(model: &LabeledModel) -> Result<Vec<bool>, ModelError> {
    let canonical = canonical_form(model)?;
    let order: Arc<[Letter]> = model.signature().letters(model.n()).into();
    let encoded = encode_valuation(&canonical, order.clone());
    Ok((0..order.len()).map(|i| encoded.bit(i)).collect())
}

/// True iff every automorphism maps `subset` into itself.
pub fn is_absolutely_invariant(model: &LabeledModel, subset: &[usize]) -> Result<bool, ModelError> {
    let members: Vec<bool> = {
        let mut m = vec![false; model.n()];
        for &x in subset {
            m[x] = true;
        }
        m
    };
    for pi in automorphisms(model)? {
        for &x in subset {
            if !members[pi.apply(x)] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Number of factorial permutations of `n` as a big integer.
pub fn factorial(n: usize) -> BigUint {
    let mut out = BigUint::from(1u32);
    for f in 2..=n {
        out *= f;
    }
    out
}

/// Labeled-model count from a set of pairwise non-isomorphic models:
/// the sum of `n! / |Aut(A)|` over the set.
pub fn burnside_labeled_count(unlabeled: &[LabeledModel]) -> Result<BigUint, ModelError> {
    let mut total = BigUint::zero();
    for model in unlabeled {
        let auts = automorphisms(model)?.len();
        total += factorial(model.n()) / BigUint::from(auts);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::ground_theory;

    fn rel_sig(name: &str) -> Arc<Signature> {
        let mut sig = Signature::new();
        sig.add_relation(name, 2).unwrap();
        Arc::new(sig)
    }

    /// Poset on I_n given by the set of pairs (i,j) with i <= j.
    fn order_model(n: usize, pairs: &[(usize, usize)]) -> LabeledModel {
        let mut m = LabeledModel::new(rel_sig("q"), n);
        for i in 0..n {
            m.set_rel("q", &[i, i], true).unwrap();
        }
        for &(i, j) in pairs {
            m.set_rel("q", &[i, j], true).unwrap();
        }
        m
    }

    #[test]
    fn decode_single_relation_bit() {
        let sig = rel_sig("q");
        let theory = ground_theory(&[], 2, &sig).unwrap();
        let mu = Valuation::from_pairs(&[
            (Letter::indexed("q", vec![0, 0]), true),
            (Letter::indexed("q", vec![0, 1]), false),
            (Letter::indexed("q", vec![1, 0]), false),
            (Letter::indexed("q", vec![1, 1]), false),
        ]);
        let model = decode_model(&mu, &theory).unwrap();
        assert!(model.rel_holds("q", &[0, 0]).unwrap());
        assert!(!model.rel_holds("q", &[0, 1]).unwrap());
    }

    #[test]
    fn decode_constant() {
        let mut sig = Signature::new();
        sig.add_constant("c").unwrap();
        let theory = ground_theory(&[], 2, &sig).unwrap();
        let mu = Valuation::from_pairs(&[
            (Letter::indexed("c", vec![0]), true),
            (Letter::indexed("c", vec![1]), false),
        ]);
        let model = decode_model(&mu, &theory).unwrap();
        assert_eq!(model.constant("c").unwrap(), 0);
    }

    #[test]
    fn decode_detects_functionality_violation() {
        let mut sig = Signature::new();
        sig.add_function("F", 1).unwrap();
        let theory = ground_theory(&[], 2, &sig).unwrap();
        let mu = Valuation::from_pairs(&[
            (Letter::indexed("F", vec![0, 0]), true),
            (Letter::indexed("F", vec![0, 1]), true),
            (Letter::indexed("F", vec![1, 0]), true),
            (Letter::indexed("F", vec![1, 1]), false),
        ]);
        let err = decode_model(&mu, &theory).unwrap_err();
        assert_eq!(
            err,
            ModelError::FunctionalityViolation {
                symbol: "F".into(),
                tuple: "0".into(),
                found: 2,
            }
        );
    }

    #[test]
    fn encode_round_trips() {
        let sig = rel_sig("q");
        let theory = ground_theory(&[], 2, &sig).unwrap();
        let mu = Valuation::from_pairs(&[
            (Letter::indexed("q", vec![0, 0]), true),
            (Letter::indexed("q", vec![0, 1]), false),
            (Letter::indexed("q", vec![1, 0]), false),
            (Letter::indexed("q", vec![1, 1]), false),
        ]);
        let model = decode_model(&mu, &theory).unwrap();
        let back = encode_valuation(&model, theory.letters().clone());
        assert_eq!(back, mu);

        let antichain = order_model(2, &[]);
        let encoded = encode_valuation(&antichain, theory.letters().clone());
        assert_eq!(encoded.row_string(), "1001");

        let chain = order_model(2, &[(0, 1)]);
        let encoded = encode_valuation(&chain, theory.letters().clone());
        assert_eq!(encoded.row_string(), "1101");
    }

    #[test]
    fn satisfaction_fixtures() {
        let chain3 = order_model(3, &[(0, 1), (0, 2), (1, 2)]);
        let has_least = FolFormula::exists(
            "x",
            FolFormula::forall(
                "y",
                FolFormula::rel("q", vec![FolTerm::var("x"), FolTerm::var("y")]),
            ),
        );
        assert!(satisfies(&chain3, &has_least).unwrap());

        let antichain2 = order_model(2, &[]);
        let total = FolFormula::forall(
            "x",
            FolFormula::forall(
                "y",
                FolFormula::or(vec![
                    FolFormula::rel("q", vec![FolTerm::var("x"), FolTerm::var("y")]),
                    FolFormula::rel("q", vec![FolTerm::var("y"), FolTerm::var("x")]),
                ]),
            ),
        );
        assert!(!satisfies(&antichain2, &total).unwrap());

        let reflexive_eq =
            FolFormula::forall("x", FolFormula::eq(FolTerm::var("x"), FolTerm::var("x")));
        assert!(satisfies(&antichain2, &reflexive_eq).unwrap());
    }

    #[test]
    fn relabel_fixtures() {
        let chain = order_model(2, &[(0, 1)]);
        let swap = Permutation::from_images(vec![1, 0]).unwrap();
        let swapped = relabel(&chain, &swap);
        assert!(swapped.rel_holds("q", &[1, 0]).unwrap());
        assert!(!swapped.rel_holds("q", &[0, 1]).unwrap());
        assert!(swapped.rel_holds("q", &[0, 0]).unwrap());

        assert_eq!(relabel(&chain, &Permutation::identity(2)), chain);

        let mut sig = Signature::new();
        sig.add_constant("c").unwrap();
        let mut m = LabeledModel::new(Arc::new(sig), 2);
        m.set_fun_value("c", &[], 0).unwrap();
        let relabeled = relabel(&m, &swap);
        assert_eq!(relabeled.constant("c").unwrap(), 1);
    }

    #[test]
    fn relabel_composes() {
        let m = order_model(3, &[(0, 1), (0, 2), (1, 2)]);
        let a = Permutation::from_images(vec![1, 2, 0]).unwrap();
        let b = Permutation::from_images(vec![2, 0, 1]).unwrap();
        assert_eq!(relabel(&relabel(&m, &a), &b), relabel(&m, &a.compose(&b)));
    }

    #[test]
    fn automorphism_counts() {
        let antichain = order_model(2, &[]);
        assert_eq!(automorphisms(&antichain).unwrap().len(), 2);
        let chain = order_model(2, &[(0, 1)]);
        assert_eq!(automorphisms(&chain).unwrap().len(), 1);
    }

    #[test]
    fn absolute_invariance_fixtures() {
        let chain3 = order_model(3, &[(0, 1), (0, 2), (1, 2)]);
        assert!(is_absolutely_invariant(&chain3, &[0]).unwrap());
        let antichain = order_model(2, &[]);
        assert!(!is_absolutely_invariant(&antichain, &[0]).unwrap());
        assert!(is_absolutely_invariant(&antichain, &[0, 1]).unwrap());
    }

    #[test]
    fn isomorphism_and_canonical_form_agree() {
        let chain_a = order_model(2, &[(0, 1)]);
        let chain_b = order_model(2, &[(1, 0)]);
        let antichain = order_model(2, &[]);
        assert!(is_isomorphic(&chain_a, &chain_b).unwrap().is_some());
        assert!(is_isomorphic(&chain_a, &antichain).unwrap().is_none());
        assert_eq!(
            canonical_form(&chain_a).unwrap(),
            canonical_form(&chain_b).unwrap()
        );
        assert_ne!(
            canonical_form(&chain_a).unwrap(),
            canonical_form(&antichain).unwrap()
        );
        // The witness permutation transports one onto the other.
        let pi = is_isomorphic(&chain_a, &chain_b).unwrap().unwrap();
        assert_eq!(relabel(&chain_a, &pi), chain_b);
    }

    #[test]
    fn canonical_form_is_relabel_invariant() {
        let m = order_model(3, &[(0, 1)]);
        let canon = canonical_form(&m).unwrap();
        for pi in Permutation::all(3) {
            assert_eq!(canonical_form(&relabel(&m, &pi)).unwrap(), canon);
        }
    }

    #[test]
    fn burnside_posets_on_three_elements() {
        // All five unlabeled posets on 3 elements; labeled total must be 19.
        let posets = vec![
            order_model(3, &[]),                       // antichain: |Aut| = 6
            order_model(3, &[(0, 1), (0, 2), (1, 2)]), // chain: |Aut| = 1
            order_model(3, &[(0, 1), (0, 2)]),         // V: |Aut| = 2
            order_model(3, &[(0, 2), (1, 2)]),         // Λ: |Aut| = 2
            order_model(3, &[(0, 1)]),                 // chain + point: |Aut| = 1
        ];
        assert_eq!(
            burnside_labeled_count(&posets).unwrap(),
            BigUint::from(19u32)
        );
    }

    #[test]
    fn burnside_posets_on_two_elements() {
        let posets = vec![order_model(2, &[]), order_model(2, &[(0, 1)])];
        assert_eq!(
            burnside_labeled_count(&posets).unwrap(),
            BigUint::from(3u32)
        );
    }

    #[test]
    fn rigid_model_contributes_factorial() {
        let chain4 = order_model(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(
            burnside_labeled_count(&[chain4]).unwrap(),
            BigUint::from(24u32)
        );
    }

    #[test]
    fn guard_rejects_large_domains() {
        let m = LabeledModel::new(rel_sig("q"), 11);
        assert!(matches!(
            automorphisms(&m),
            Err(ModelError::GuardExceeded { n: 11, guard: 10 })
        ));
    }

    #[test]
    fn decode_encode_bijection_exhaustive() {
        // One binary relation, n=2: every valuation of the 4 letters decodes,
        // and decode/encode invert each other in both directions.
        let sig = rel_sig("q");
        let theory = ground_theory(&[], 2, &sig).unwrap();
        let letters = theory.letters().clone();
        for ix in 0..16u64 {
            let mu = Valuation::from_index(letters.clone(), ix);
            let model = decode_model(&mu, &theory).unwrap();
            assert_eq!(encode_valuation(&model, letters.clone()), mu);
        }

        // One unary function, n=2: exactly the 4 functional valuations
        // decode; the other 12 violate functionality. Round trips hold on
        // the functional ones and on all 4 function tables.
        let mut fsig = Signature::new();
        fsig.add_function("F", 1).unwrap();
        let ftheory = ground_theory(&[], 2, &fsig).unwrap();
        let fletters = ftheory.letters().clone();
        let mut decodable = 0;
        for ix in 0..16u64 {
            let mu = Valuation::from_index(fletters.clone(), ix);
            match decode_model(&mu, &ftheory) {
                Ok(model) => {
                    decodable += 1;
                    assert_eq!(encode_valuation(&model, fletters.clone()), mu);
                }
                Err(ModelError::FunctionalityViolation { .. }) => {}
                Err(other) => panic!("unexpected error {other}"),
            }
        }
        assert_eq!(decodable, 4);
        for table in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            let mut model = LabeledModel::new(Arc::new(fsig.clone()), 2);
            model.set_fun_value("F", &[0], table[0]).unwrap();
            model.set_fun_value("F", &[1], table[1]).unwrap();
            let mu = encode_valuation(&model, fletters.clone());
            assert_eq!(decode_model(&mu, &ftheory).unwrap(), model);
        }
    }

    #[test]
    fn labeling_theorem_equivalences() {
        // relabel(A, a) == relabel(A, b) iff a . b^{-1} is an automorphism.
        for model in [
            order_model(3, &[(0, 1)]),
            order_model(3, &[(0, 1), (0, 2)]),
            order_model(3, &[]),
        ] {
            let auts = automorphisms(&model).unwrap();
            for a in Permutation::all(3) {
                for b in Permutation::all(3) {
                    let same = relabel(&model, &a) == relabel(&model, &b);
                    let quotient = a.compose(&b.inverse());
                    assert_eq!(same, auts.contains(&quotient), "a={a:?} b={b:?}");
                }
            }
        }
    }
}
