//! Cross-partition properties of the counting procedure on the
//! bounded-order fixtures, plus grounding/satisfaction agreement on wider
//! domains than the acceptance sweep uses.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use tba::bitengine::{stream_models, EngineOptions};
use tba::boolcore::{eval_naive, reduce_constants, substitute, Letter, Valuation};
use tba::countlab::{
    bounded_order_theory, enumerate_c_partitions, kill_for_partition, poset_base_kills,
    poset_layer_spec, tba_count, CPartition, CountError, GoodPartitionSpec,
};
use tba::fol::{ground_theory, translate_sentence, PropTheory, Signature};
use tba::modelkit::{canonical_key, decode_model, satisfies, satisfies_under, LabeledModel};

/// The models with canonical blocks realizing one partition: kills, engine,
/// decode, then the literal layer-formula filter.
fn realizing_models(
    theory: &PropTheory,
    spec: &GoodPartitionSpec,
    base: &tba::boolcore::Assignment,
    x: &CPartition,
) -> Vec<LabeledModel> {
    let mut kills = base.clone();
    kills.update(&kill_for_partition(spec, x, theory).unwrap());
    let theta = reduce_constants(&substitute(&theory.theta(), &kills));
    let free: Vec<Letter> = theory
        .letters()
        .iter()
        .filter(|l| !kills.contains(l))
        .cloned()
        .collect();
    let free_order: Arc<[Letter]> = free.into();
    let mut out = Vec::new();
    stream_models(
        &theta,
        free_order.clone(),
        &EngineOptions::default(),
        |ix| {
            let full = Valuation::from_index(free_order.clone(), ix).extended(&kills);
            let model = decode_model(&full, theory).unwrap();
            let realizes = spec.layers().iter().enumerate().all(|(i, layer)| {
                let block = x.block(i);
                (0..model.n()).all(|a| {
                    let phi = layer.at(a);
                    let mut env = HashMap::new();
                    satisfies_under(&model, &phi, &mut env).unwrap() == block.contains(&a)
                })
            });
            if realizes {
                out.push(model);
            }
            true
        },
    )
    .unwrap();
    out
}

#[test]
fn partitions_produce_disjoint_nonisomorphic_model_sets() {
    // Distinct partitions never share a model up to isomorphism (one
    // partition may still hold several isomorphic labelings; the per-class
    // dedup handles those).
    for n in [4usize, 5] {
        let theory = bounded_order_theory(n).unwrap();
        let spec = poset_layer_spec(n).unwrap();
        let base = poset_base_kills(n).unwrap();
        let mut earlier: BTreeSet<Vec<bool>> = BTreeSet::new();
        let mut class_total = 0usize;
        for x in enumerate_c_partitions(n, spec.m()) {
            let mut here: BTreeSet<Vec<bool>> = BTreeSet::new();
            for model in realizing_models(&theory, &spec, &base, &x) {
                here.insert(canonical_key(&model).unwrap());
            }
            class_total += here.len();
            for key in here {
                assert!(
                    earlier.insert(key),
                    "partition {x} shares an isomorphism class with an earlier partition"
                );
            }
        }
        let report = tba_count(&theory, &spec, &base, &EngineOptions::default()).unwrap();
        assert_eq!(
            num_bigint::BigUint::from(class_total),
            report.unlabeled_total
        );
        if n == 5 {
            // 5 * 4 * 19 labeled bounded orders, 5 classes (the unlabeled
            // three-point posets between the bounds).
            assert_eq!(report.labeled_total, num_bigint::BigUint::from(380u32));
            assert_eq!(report.unlabeled_total, num_bigint::BigUint::from(5u32));
        }
    }
}

#[test]
fn partition_cap_violation_names_the_partition() {
    let theory = bounded_order_theory(5).unwrap();
    let spec = poset_layer_spec(5).unwrap();
    let base = poset_base_kills(5).unwrap();
    let opts = EngineOptions {
        max_vars: 2,
        ..Default::default()
    };
    match tba_count(&theory, &spec, &base, &opts) {
        Err(CountError::PartitionCapExceeded { sizes, v, cap }) => {
            assert_eq!(sizes.iter().sum::<usize>(), 5);
            assert!(v > 2);
            assert_eq!(cap, 2);
        }
        other => panic!("expected a partition cap error, got {other:?}"),
    }
}

#[test]
fn grounding_agrees_with_satisfaction_on_three_elements() {
    use tba::fol::{FolFormula, FolTerm};
    let mut sig = Signature::new();
    sig.add_relation("R", 2).unwrap();
    let n = 3;
    let letters: Arc<[Letter]> = sig.letters(n).into();
    let empty = ground_theory(&[], n, &sig).unwrap();
    let rel = |x: &str, y: &str| FolFormula::rel("R", vec![FolTerm::var(x), FolTerm::var(y)]);
    let sentences = vec![
        // A transitive tournament-ish shape and a couple of mixed forms.
        FolFormula::forall("x", FolFormula::exists("y", rel("x", "y"))),
        FolFormula::exists(
            "x",
            FolFormula::forall("y", rel("x", "y").implies(rel("y", "x"))),
        ),
        FolFormula::forall(
            "x",
            FolFormula::forall(
                "y",
                FolFormula::Or(vec![
                    FolFormula::eq(FolTerm::var("x"), FolTerm::var("y")),
                    rel("x", "y").iff(rel("y", "x").not()),
                ]),
            ),
        ),
        FolFormula::rel("R", vec![FolTerm::Element(0), FolTerm::Element(2)]).not(),
    ];
    for phi in &sentences {
        let theta = translate_sentence(phi, n, &sig).unwrap();
        for ix in 0..(1u64 << 9) {
            let mu = Valuation::from_index(letters.clone(), ix);
            let model = decode_model(&mu, &empty).unwrap();
            assert_eq!(
                eval_naive(&theta, &mu).unwrap(),
                satisfies(&model, phi).unwrap(),
                "sentence {phi}, valuation {ix}"
            );
        }
    }
}
