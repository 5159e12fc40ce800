#![allow(dead_code)]

//! Shared oracles and generators for the integration suites. Everything
//! here recomputes expectations independently of the code paths under test:
//! brute-force enumeration over raw bitmasks, direct closures for equation
//! systems, and permutation orbits on encoded masks.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use tba::boolcore::{BoolTerm, Letter};
use tba::fol::{FolFormula, FolTerm};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random Boolean term over at most `max_vars` letters `x00..`, bounded
/// depth, all seven connectives plus constants.
pub fn random_term(rng: &mut ChaCha8Rng, max_vars: usize, depth: usize) -> BoolTerm {
    if depth == 0 || rng.gen_bool(0.25) {
        if rng.gen_bool(0.08) {
            return BoolTerm::Const(rng.gen());
        }
        let i = rng.gen_range(0..max_vars);
        return BoolTerm::var(Letter::named(format!("x{i:02}")));
    }
    match rng.gen_range(0..6) {
        0 => random_term(rng, max_vars, depth - 1).not(),
        1 => {
            let k = rng.gen_range(2..=3);
            BoolTerm::And(
                (0..k)
                    .map(|_| random_term(rng, max_vars, depth - 1))
                    .collect(),
            )
        }
        2 => {
            let k = rng.gen_range(2..=3);
            BoolTerm::Or(
                (0..k)
                    .map(|_| random_term(rng, max_vars, depth - 1))
                    .collect(),
            )
        }
        3 => random_term(rng, max_vars, depth - 1).xor(random_term(rng, max_vars, depth - 1)),
        4 => random_term(rng, max_vars, depth - 1).implies(random_term(rng, max_vars, depth - 1)),
        _ => random_term(rng, max_vars, depth - 1).iff(random_term(rng, max_vars, depth - 1)),
    }
}

/// Random closed first-order sentence over one binary relation symbol
/// `R`, quantifier depth at most `q_depth`, elements drawn from `0..n`.
pub fn random_sentence(rng: &mut ChaCha8Rng, n: usize, q_depth: usize) -> FolFormula {
    fn term(rng: &mut ChaCha8Rng, scope: &[String], n: usize) -> FolTerm {
        if !scope.is_empty() && rng.gen_bool(0.7) {
            FolTerm::var(scope[rng.gen_range(0..scope.len())].clone())
        } else {
            FolTerm::Element(rng.gen_range(0..n))
        }
    }
    fn go(
        rng: &mut ChaCha8Rng,
        scope: &mut Vec<String>,
        n: usize,
        q_depth: usize,
        depth: usize,
    ) -> FolFormula {
        let pick = rng.gen_range(0..8);
        if depth == 0 || pick < 2 {
            let atom_eq = rng.gen_bool(0.3);
            let a = term(rng, scope, n);
            let b = term(rng, scope, n);
            return if atom_eq {
                FolFormula::eq(a, b)
            } else {
                FolFormula::rel("R", vec![a, b])
            };
        }
        match pick {
            2 | 3 if q_depth > 0 => {
                let var = format!("v{}", scope.len());
                scope.push(var.clone());
                let body = go(rng, scope, n, q_depth - 1, depth - 1);
                scope.pop();
                if pick == 2 {
                    FolFormula::forall(var, body)
                } else {
                    FolFormula::exists(var, body)
                }
            }
            4 => go(rng, scope, n, q_depth, depth - 1).not(),
            5 => FolFormula::And(vec![
                go(rng, scope, n, q_depth, depth - 1),
                go(rng, scope, n, q_depth, depth - 1),
            ]),
            6 => FolFormula::Or(vec![
                go(rng, scope, n, q_depth, depth - 1),
                go(rng, scope, n, q_depth, depth - 1),
            ]),
            _ => {
                go(rng, scope, n, q_depth, depth - 1).implies(go(rng, scope, n, q_depth, depth - 1))
            }
        }
    }
    go(rng, &mut Vec::new(), n, q_depth, 3)
}

/// Relation on `I_n` as one row bitmask per element.
pub type Rows = Vec<u32>;

pub fn mask_to_rows(mask: u64, n: usize) -> Rows {
    (0..n)
        .map(|i| {
            let mut row = 0u32;
            for j in 0..n {
                if (mask >> (i * n + j)) & 1 == 1 {
                    row |= 1 << j;
                }
            }
            row
        })
        .collect()
}

pub fn is_poset_rows(rows: &Rows) -> bool {
    let n = rows.len();
    for i in 0..n {
        if rows[i] & (1 << i) == 0 {
            return false; // not reflexive
        }
        for j in 0..n {
            if i != j && rows[i] & (1 << j) != 0 {
                if rows[j] & (1 << i) != 0 {
                    return false; // not antisymmetric
                }
                if rows[j] & !rows[i] != 0 {
                    return false; // not transitive
                }
            }
        }
    }
    true
}

/// Brute-force count of labeled posets on `I_n` over all `2^(n^2)` relations.
pub fn count_posets_brute(n: usize) -> u64 {
    assert!(n * n <= 24, "full enumeration kept small");
    let mut count = 0;
    for mask in 0..(1u64 << (n * n)) {
        if is_poset_rows(&mask_to_rows(mask, n)) {
            count += 1;
        }
    }
    count
}

/// Brute-force count of labeled posets with the diagonal forced reflexive,
/// enumerating only the `2^(n^2-n)` off-diagonal patterns.
pub fn count_posets_brute_reflexive(n: usize) -> u64 {
    let off: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect();
    let mut count = 0;
    for mask in 0..(1u64 << off.len()) {
        let mut rows: Rows = (0..n).map(|i| 1u32 << i).collect();
        for (bit, &(i, j)) in off.iter().enumerate() {
            if (mask >> bit) & 1 == 1 {
                rows[i] |= 1 << j;
            }
        }
        if is_poset_rows(&rows) {
            count += 1;
        }
    }
    count
}

pub fn has_least_and_greatest(rows: &Rows) -> bool {
    let n = rows.len();
    let full = (1u32 << n) - 1;
    let least = rows.contains(&full);
    let greatest = (0..n).any(|j| (0..n).all(|i| rows[i] & (1 << j) != 0));
    least && greatest
}

/// Applies a permutation to a relation: out(i,j) = in(p(i), p(j)).
pub fn permute_rows(rows: &Rows, p: &[usize]) -> Rows {
    let n = rows.len();
    (0..n)
        .map(|i| {
            let mut row = 0u32;
            for j in 0..n {
                if rows[p[i]] & (1 << p[j]) != 0 {
                    row |= 1 << j;
                }
            }
            row
        })
        .collect()
}

pub fn all_perms(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut out);
    out.sort();
    out
}

fn heap_permute(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Canonical orbit representative of a relation under relabeling, as the
/// minimal row vector over all permutations. Pure bitmask computation.
pub fn canon_rows(rows: &Rows, perms: &[Vec<usize>]) -> Rows {
    perms
        .iter()
        .map(|p| permute_rows(rows, p))
        .min()
        .expect("at least the identity")
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_tba")
}

pub struct CliOutput {
    pub status: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_cli(args: &[&str], cwd: &std::path::Path) -> CliOutput {
    let out = std::process::Command::new(bin_path())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    CliOutput {
        status: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}
