//! Cross-module properties that are too heavy for unit tests: plan
//! reduction beyond four values, decision determinism, witness soundness,
//! and batch/individual agreement.

use cbd_core::batch::{decide_all, decide_all_seq};
use cbd_core::coupling::check_categorical_multimax;
use cbd_core::decide::{
    decide_contextuality, decide_maximal_equality, decide_traditional, verify_witness,
    DecideOptions, Status,
};
use cbd_core::gen::{self, SystemShape};
use cbd_core::model::ValueKind;
use cbd_core::split::{plan_full_categorical, reduce_12};
use rand::Rng;

fn opts() -> DecideOptions {
    DecideOptions::default()
}

#[test]
fn reduced_plans_agree_with_full_plans_beyond_four_values() {
    // With six values the 1-2 reduction genuinely discards dichotomies
    // (three-against-three splits), yet the verdict must not move.
    let mut rng = gen::rng(61);
    for _ in 0..25 {
        let sys = gen::random_single_connection(&mut rng, ValueKind::Categorical, 6, 2, 6);
        let full = plan_full_categorical(&sys).unwrap();
        let reduced = reduce_12(&full);
        assert_eq!(full.entry("q").unwrap().subsets.len(), 31);
        assert_eq!(reduced.entry("q").unwrap().subsets.len(), 21);

        let dense = decide_contextuality(&sys, &full, &opts()).unwrap();
        let sparse = decide_contextuality(&sys, &reduced, &opts()).unwrap();
        assert_eq!(dense.status, sparse.status);
    }
}

#[test]
fn identical_inputs_yield_identical_verdicts() {
    let shape = SystemShape::small();
    let mut rng = gen::rng(62);
    for _ in 0..20 {
        let sys = gen::random_system(&mut rng, &shape);
        let plan = plan_full_categorical(&sys).unwrap();
        let first = decide_contextuality(&sys, &plan, &opts()).unwrap();
        let second = decide_contextuality(&sys, &plan, &opts()).unwrap();
        assert_eq!(first, second);

        let t1 = decide_traditional(&sys, &opts());
        let t2 = decide_traditional(&sys, &opts());
        assert_eq!(t1, t2);
    }
}

#[test]
fn noncontextual_witnesses_always_verify() {
    let mut rng = gen::rng(63);
    let mut exercised = 0;
    for _ in 0..60 {
        let k = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=3);
        let sys = gen::random_single_connection(&mut rng, ValueKind::Categorical, k, n, 4);
        let plan = plan_full_categorical(&sys).unwrap();
        let verdict = decide_contextuality(&sys, &plan, &opts()).unwrap();
        if verdict.status != Status::Noncontextual {
            continue;
        }
        exercised += 1;
        let witness = verdict.witness.as_ref().unwrap();
        verify_witness(&sys, &plan, witness).unwrap();
        // A full-plan witness of a categorical connection must survive the
        // four-point scan: the program rows encode exactly the pairwise
        // cell maxima.
        assert!(check_categorical_multimax(witness).is_none());
    }
    assert!(exercised >= 10, "only {exercised} noncontextual draws");
}

#[test]
fn equality_notion_specializes_on_consistent_systems() {
    let mut rng = gen::rng(64);
    for _ in 0..50 {
        let sys = gen::random_consistent_system(&mut rng, &SystemShape::small());
        let equality = decide_maximal_equality(&sys, &opts()).unwrap();
        let traditional = decide_traditional(&sys, &opts()).unwrap();
        assert_eq!(equality.status, traditional.status);
    }
}

#[test]
fn batch_matches_individual_decisions() {
    let shape = SystemShape::small();
    let mut rng = gen::rng(65);
    let jobs: Vec<_> = (0..24)
        .map(|round| {
            let sys = if round % 3 == 0 {
                gen::random_product_system(&mut rng, &shape)
            } else {
                gen::random_system(&mut rng, &shape)
            };
            let plan = plan_full_categorical(&sys).unwrap();
            (sys, plan)
        })
        .collect();
    let parallel = decide_all(&jobs, &opts());
    let sequential = decide_all_seq(&jobs, &opts());
    assert_eq!(parallel.len(), jobs.len());
    for (i, (sys, plan)) in jobs.iter().enumerate() {
        let direct = decide_contextuality(sys, plan, &opts());
        assert_eq!(parallel[i], direct);
        assert_eq!(sequential[i], direct);
    }
}
