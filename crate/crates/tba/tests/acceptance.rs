//! Acceptance suite: every release criterion as one test, each printing a
//! PASS line with its measurements (visible under `--nocapture`). All
//! expectations come from independent oracles computed inside the tests or
//! from frozen fixture files.

mod common;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use tba::bitengine::{
    count_free_generating_sets, eval_full, is_independent, Bits, EngineOptions, FreeVectorScheme,
};
use tba::boolcore::{eval_naive, node_count, vars, Assignment, BoolTerm, Letter, Valuation};
use tba::countlab::{
    bounded_order_theory, count_c_partitions, enumerate_c_partitions, poset_base_kills,
    poset_cpartition_count, poset_layer_spec, tba_count,
};
use tba::fol::{ground_theory, translate_sentence, Signature};
use tba::modelkit::{
    automorphisms, burnside_labeled_count, canonical_form, decode_model, encode_valuation,
    factorial, satisfies,
};

use common::*;

fn order_of(t: &BoolTerm) -> Arc<[Letter]> {
    vars(t).into()
}

#[test]
fn c01_full_dnf_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = rng(0xC01);
    let mut checked_bits = 0u64;
    for case in 0..200 {
        let t = random_term(&mut rng, 12, 8);
        let order = order_of(&t);
        let v = order.len();
        let (d, _) = eval_full(&t, order.clone(), &EngineOptions::default()).unwrap();
        for ix in 0..(1u64 << v) {
            let val = Valuation::from_index(order.clone(), ix);
            assert_eq!(
                d.bit(ix).unwrap(),
                eval_naive(&t, &val).unwrap(),
                "case {case}, valuation {ix}"
            );
            checked_bits += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "oracle sweep took {elapsed:?}");
    println!(
        "ACCEPT c01 full-DNF oracle equivalence: PASS (200 terms, {checked_bits} bits, {elapsed:?})"
    );
}

#[test]
fn c02_free_vector_fixture() {
    let scheme = FreeVectorScheme::new(3);
    let rows: Vec<Bits> = (1..=3).map(|i| scheme.vector(i).unwrap()).collect();
    let strings: Vec<String> = rows.iter().map(|b| b.to_string()).collect();
    assert_eq!(strings, ["00001111", "00110011", "01010101"]);
    assert!(is_independent(&rows).unwrap());
    println!(
        "ACCEPT c02 free-vector fixture v=3: PASS ({})",
        strings.join(" ")
    );
}

#[test]
fn c03_chunk_and_worker_determinism() {
    let started = Instant::now();
    let mut rng = rng(0xC03);
    for case in 0..20 {
        let t = random_term(&mut rng, 12, 8);
        let order = order_of(&t);
        let v = order.len() as u32;
        let mut reference: Option<(Option<String>, BigUint)> = None;
        for k in [6u32, 9, v] {
            for workers in [1usize, 2, 0] {
                let opts = EngineOptions {
                    chunk_log2: k.min(v),
                    workers,
                    ..Default::default()
                };
                let (d, _) = eval_full(&t, order.clone(), &opts).unwrap();
                let key = (d.to_bit_string(), d.model_count().clone());
                match &reference {
                    None => reference = Some(key),
                    Some(r) => assert_eq!(r, &key, "case {case}, k={k}, workers={workers}"),
                }
            }
        }
    }
    println!(
        "ACCEPT c03 chunk/worker determinism: PASS (20 terms x 9 configurations, {:?})",
        started.elapsed()
    );
}

#[test]
fn c04_free_generating_set_counts() {
    let started = Instant::now();
    // Brute force for n=1: independent singletons {b} over a 2-set are
    // exactly {01} and {10}.
    let singles = (0u8..4).filter(|&b| b & 0x3 != 0 && !b & 0x3 != 0).count();
    assert_eq!(singles, 2);
    assert_eq!(count_free_generating_sets(1), BigUint::from(2u32));

    // Brute force for n=2: unordered pairs of distinct subsets of a 4-set
    // whose four signed meets are all nonempty.
    let mut brute = 0u32;
    for p1 in 0..16u8 {
        for p2 in (p1 + 1)..16 {
            let meets = [p1 & p2, p1 & !p2 & 0xF, !p1 & p2 & 0xF, !p1 & !p2 & 0xF];
            if meets.iter().all(|&m| m != 0) {
                brute += 1;
            }
        }
    }
    assert_eq!(brute, 12);
    assert_eq!(count_free_generating_sets(2), BigUint::from(12u32));
    assert_eq!(count_free_generating_sets(3), BigUint::from(6720u32));
    println!(
        "ACCEPT c04 (2^n)!/n! counts 2/12/6720 with n<=2 brute force: PASS ({:?})",
        started.elapsed()
    );
}

#[test]
fn c05_boolean_equation_fixture() {
    // Independent oracle: evaluate the two equations directly over all 16
    // assignments of (x, y, z, u).
    let mut expected = BTreeSet::new();
    for bits in 0..16u8 {
        let x = bits & 8 != 0;
        let y = bits & 4 != 0;
        let z = bits & 2 != 0;
        let u = bits & 1 != 0;
        let e1 = x ^ y ^ !z ^ u;
        let e2 = (x | (y & z)) == u;
        if e1 && e2 {
            expected.insert((x, y, z, u));
        }
    }
    assert_eq!(
        expected,
        BTreeSet::from([
            (false, false, false, false),
            (true, false, false, true),
            (true, true, true, true),
        ])
    );

    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(
        &[
            "solve",
            "--all",
            fixture("baequ4_in.txt").to_str().unwrap(),
            "solutions.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status, 0, "stderr: {}", out.stderr);
    let text = std::fs::read_to_string(dir.path().join("solutions.txt")).unwrap();
    let mut solved = BTreeSet::new();
    let mut letters: Vec<String> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# letters:") {
            letters = rest.split_whitespace().map(str::to_string).collect();
        } else if !line.starts_with('#') && !line.is_empty() {
            let get = |name: &str| {
                let pos = letters.iter().position(|l| l == name).unwrap();
                line.as_bytes()[pos] == b'1'
            };
            solved.insert((get("x"), get("y"), get("z"), get("u")));
        }
    }
    assert_eq!(solved, expected);
    println!("ACCEPT c05 Boolean-equation fixture: PASS (3 solutions match the 16-case oracle)");
}

fn poset_axioms(sig_name: &str) -> Vec<tba::fol::FolFormula> {
    use tba::fol::{FolFormula, FolTerm};
    let rel = |x: &str, y: &str| FolFormula::rel(sig_name, vec![FolTerm::var(x), FolTerm::var(y)]);
    vec![
        FolFormula::forall("x", rel("x", "x")),
        FolFormula::forall(
            "x",
            FolFormula::forall(
                "y",
                FolFormula::And(vec![rel("x", "y"), rel("y", "x")])
                    .implies(FolFormula::eq(FolTerm::var("x"), FolTerm::var("y"))),
            ),
        ),
        FolFormula::forall(
            "x",
            FolFormula::forall(
                "y",
                FolFormula::forall(
                    "z",
                    FolFormula::And(vec![rel("x", "y"), rel("y", "z")]).implies(rel("x", "z")),
                ),
            ),
        ),
    ]
}

#[test]
fn c06_labeled_poset_counts() {
    let started = Instant::now();
    let mut sig = Signature::new();
    sig.add_relation("q", 2).unwrap();
    let axioms = poset_axioms("q");
    let expected = [(2usize, 3u64), (3, 19), (4, 219), (5, 4231)];
    for (n, count) in expected {
        let theory = ground_theory(&axioms, n, &sig).unwrap();
        let engine_count = if n <= 4 {
            // Engine over the full letter set; oracle over all 2^(n^2).
            assert_eq!(count_posets_brute(n), count, "oracle n={n}");
            let (d, _) = eval_full(
                &theory.theta(),
                theory.letters().clone(),
                &EngineOptions::default(),
            )
            .unwrap();
            d.model_count().clone()
        } else {
            // n = 5: kill the diagonal, compare against the oracle
            // restricted to reflexive relations (2^20 cases each way).
            assert_eq!(count_posets_brute_reflexive(n), count, "oracle n={n}");
            let mut kills = Assignment::new();
            for i in 0..n {
                kills.set(Letter::indexed("q", vec![i as i64, i as i64]), true);
            }
            let reduced = tba::boolcore::reduce_constants(&tba::boolcore::substitute(
                &theory.theta(),
                &kills,
            ));
            let free: Vec<Letter> = theory
                .letters()
                .iter()
                .filter(|l| !kills.contains(l))
                .cloned()
                .collect();
            let (d, _) = eval_full(&reduced, free.into(), &EngineOptions::default()).unwrap();
            d.model_count().clone()
        };
        assert_eq!(engine_count, BigUint::from(count), "engine n={n}");
    }
    println!(
        "ACCEPT c06 labeled poset counts 3/19/219/4231: PASS ({:?})",
        started.elapsed()
    );
}

#[test]
fn c07_burnside_identity() {
    let started = Instant::now();
    let mut sig = Signature::new();
    sig.add_relation("q", 2).unwrap();
    let axioms = poset_axioms("q");
    let expected = [(2usize, 3u32), (3, 19), (4, 219)];
    for (n, labeled) in expected {
        let theory = ground_theory(&axioms, n, &sig).unwrap();
        let (d, _) = eval_full(
            &theory.theta(),
            theory.letters().clone(),
            &EngineOptions::default(),
        )
        .unwrap();
        assert_eq!(d.model_count(), &BigUint::from(labeled));
        let mut classes: Vec<tba::modelkit::LabeledModel> = Vec::new();
        let mut seen = BTreeSet::new();
        for mu in tba::bitengine::enumerate_models(&d, None).unwrap() {
            let model = decode_model(&mu, &theory).unwrap();
            let canon = canonical_form(&model).unwrap();
            let key = encode_valuation(&canon, theory.letters().clone()).row_string();
            if seen.insert(key) {
                classes.push(canon);
            }
        }
        let burnside = burnside_labeled_count(&classes).unwrap();
        assert_eq!(burnside, BigUint::from(labeled), "n={n}");
        if n == 3 {
            // 19 decomposes as 1 + 6 + 3 + 3 + 6 over the five classes.
            let mut parts: Vec<u64> = classes
                .iter()
                .map(|m| {
                    let aut = automorphisms(m).unwrap().len();
                    let f: BigUint = factorial(3) / BigUint::from(aut);
                    u64::try_from(&f).unwrap()
                })
                .collect();
            parts.sort_unstable();
            assert_eq!(parts, [1, 3, 3, 6, 6]);
        }
    }
    println!(
        "ACCEPT c07 Burnside identity n=2..4: PASS ({:?})",
        started.elapsed()
    );
}

#[test]
fn c08_killing_variable_consistency() {
    let started = Instant::now();
    // Independent oracle: enumerate all relations on I_n, keep bounded
    // posets, count labels and orbits with raw bitmask permutations.
    for (n, expected_l, expected_k) in [(2usize, 2u64, 1u64), (3, 6, 1), (4, 36, 2)] {
        let perms = all_perms(n);
        let mut labeled = 0u64;
        let mut orbits = BTreeSet::new();
        for mask in 0..(1u64 << (n * n)) {
            let rows = mask_to_rows(mask, n);
            if is_poset_rows(&rows) && has_least_and_greatest(&rows) {
                labeled += 1;
                orbits.insert(canon_rows(&rows, &perms));
            }
        }
        assert_eq!(
            (labeled, orbits.len() as u64),
            (expected_l, expected_k),
            "oracle n={n}"
        );

        let theory = bounded_order_theory(n).unwrap();
        let spec = poset_layer_spec(n).unwrap();
        let base = poset_base_kills(n).unwrap();
        let report = tba_count(&theory, &spec, &base, &EngineOptions::default()).unwrap();
        assert_eq!(report.labeled_total, BigUint::from(expected_l), "n={n}");
        assert_eq!(report.unlabeled_total, BigUint::from(expected_k), "n={n}");
        assert!(report.totals_consistent());
    }
    // Base-kill counts: 5n-6 letters for n=2..10; 30 free letters at n=8.
    for n in 2..=10 {
        assert_eq!(poset_base_kills(n).unwrap().len(), 5 * n - 6);
    }
    let theory8 = bounded_order_theory(8).unwrap();
    let kills8 = poset_base_kills(8).unwrap();
    let free8 = theory8
        .letters()
        .iter()
        .filter(|l| !kills8.contains(l))
        .count();
    assert_eq!(free8, 30);
    println!(
        "ACCEPT c08 killing-variable consistency (2,1)/(6,1)/(36,2), 5n-6 kills, 30 free at n=8: PASS ({:?})",
        started.elapsed()
    );
}

#[test]
fn c09_c_partition_counts() {
    for n in 1..=8 {
        for m in 1..=8 {
            let streamed = enumerate_c_partitions(n, m).count();
            let formula = count_c_partitions(n, m);
            assert_eq!(BigUint::from(streamed), formula, "n={n} m={m}");
        }
    }
    // Layer partitions of bounded orders: compositions of the n-2 middle
    // elements, counted by placing separators between adjacent positions.
    for n in 3..=12usize {
        let middle = n - 2;
        let compositions = 1u64 << (middle - 1);
        assert_eq!(
            poset_cpartition_count(n).unwrap(),
            BigUint::from(compositions),
            "n={n}"
        );
    }
    println!("ACCEPT c09 c-partition counts (n,m <= 8; layer compositions to n=12): PASS");
}

#[test]
fn c10_translation_soundness() {
    let started = Instant::now();
    let mut sig = Signature::new();
    sig.add_relation("R", 2).unwrap();
    let n = 2;
    let letters: Arc<[Letter]> = sig.letters(n).into();
    let empty_theory = ground_theory(&[], n, &sig).unwrap();
    let mut rng = rng(0xC10);
    for case in 0..30 {
        let phi = random_sentence(&mut rng, n, 2);
        let theta = translate_sentence(&phi, n, &sig).unwrap();
        for ix in 0..16u64 {
            let mu = Valuation::from_index(letters.clone(), ix);
            let prop_side = eval_naive(&theta, &mu).unwrap();
            let model = decode_model(&mu, &empty_theory).unwrap();
            let fol_side = satisfies(&model, &phi).unwrap();
            assert_eq!(prop_side, fol_side, "case {case} ({phi}), valuation {ix}");
        }
    }
    println!(
        "ACCEPT c10 translation soundness (30 sentences x 16 structures): PASS ({:?})",
        started.elapsed()
    );
}

#[test]
fn c11_throughput_smoke() {
    // A 100-node term over 24 free variables: one negation plus 49 binary
    // connectives over cycling leaves (1 + 1 + 49*2 = 100 nodes).
    let names: Vec<Letter> = (0..24).map(|i| Letter::named(format!("x{i:02}"))).collect();
    let mut t = BoolTerm::var(names[0].clone()).not();
    for step in 0..49usize {
        let leaf = BoolTerm::var(names[(step + 1) % 24].clone());
        t = match step % 3 {
            0 => t.xor(leaf),
            1 => BoolTerm::Or(vec![t, leaf]),
            _ => t.implies(leaf),
        };
    }
    assert_eq!(node_count(&t), 100);
    assert_eq!(vars(&t).len(), 24);
    let order: Arc<[Letter]> = names.into_iter().collect::<Vec<_>>().into();
    let started = Instant::now();
    let (d, stats) = eval_full(&t, order, &EngineOptions::default()).unwrap();
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "throughput smoke took {elapsed:?}"
    );
    println!(
        "ACCEPT c11 throughput smoke (100 nodes, v=24, count={}): PASS ({stats})",
        d.model_count()
    );
}

#[test]
fn c12_cli_golden_files() {
    let started = Instant::now();
    for (input, golden) in [
        ("baequ4_in.txt", "baequ4_golden.txt"),
        ("so_n4.txt", "so_n4_golden.txt"),
    ] {
        let golden_text = std::fs::read_to_string(fixture(golden)).unwrap();
        let configurations: &[&[&str]] = &[
            &[],
            &["--jobs", "1"],
            &["--jobs", "4"],
            &["--chunk-bits", "6"],
            &["--chunk-bits", "9"],
            &["--jobs", "2", "--chunk-bits", "7"],
            &["--backend", "naive"],
        ];
        for extra in configurations {
            let dir = tempfile::tempdir().unwrap();
            let mut args = vec!["solve", "--all"];
            args.extend_from_slice(extra);
            let input_path = fixture(input);
            args.push(input_path.to_str().unwrap());
            args.push("got.txt");
            let out = run_cli(&args, dir.path());
            assert_eq!(out.status, 0, "{input} {extra:?}: {}", out.stderr);
            let got = std::fs::read_to_string(dir.path().join("got.txt")).unwrap();
            assert_eq!(
                got, golden_text,
                "{input} with {extra:?} diverges from golden"
            );
        }
    }
    println!(
        "ACCEPT c12 CLI golden files stable across jobs/chunks/backends: PASS ({:?})",
        started.elapsed()
    );
}
