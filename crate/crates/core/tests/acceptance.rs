//! End-to-end acceptance checks: canonical examples, exhaustive small
//! grids, and randomized property suites, one criterion per test. Each
//! prints a single `criterion NN: PASS/FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};

use cbd_core::coupling::{
    check_categorical_multimax, check_cut_multimaximal, check_multimaximal_binary,
    find_dominance_alignment, multimaximal_binary, nested_events_coupling, nominal_dominance,
    CoupledVar, Coupling,
};
use cbd_core::decide::{
    build_feasibility_lp, decide_contextuality, decide_maximal_equality,
    decide_single_connection_cuts, decide_traditional, decide_two_variable_categorical,
    verify_equality_witness, verify_witness, DecideOptions, Status,
};
use cbd_core::gen::{self, SystemShape};
use cbd_core::lp::{LpOutcome, LpProblem, LpRow};
use cbd_core::model::fixtures::{
    context, cross_space, four_valued_pair, pr_box, pr_box_coarse_map,
    single_content_four_values, single_content_three_values,
};
use cbd_core::model::{ContentDecl, System, SystemSpec, ValueKind, ValueSpace};
use cbd_core::rational::{rat, Rational};
use cbd_core::split::{plan_cuts, plan_full_categorical, plan_allowable, reduce_12};
use cbd_core::vspace::VSpace;
use rand::Rng;

fn opts() -> DecideOptions {
    DecideOptions::default()
}

fn criterion(n: usize, label: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {n:02}: PASS - {label}"),
        Err(cause) => {
            println!("criterion {n:02}: FAIL - {label}");
            resume_unwind(cause);
        }
    }
}

/// Single-content system measuring `q` once per context, contexts "1", "2", ...
fn connection(kind: ValueKind, pmfs: &[&Vec<Rational>]) -> System {
    let k = pmfs[0].len();
    let labels: Vec<String> = (0..k).map(|i| i.to_string()).collect();
    let space = match kind {
        ValueKind::Categorical => ValueSpace::categorical(labels.clone()),
        ValueKind::Ordered => ValueSpace::ordered(labels.clone()),
    };
    let contexts = pmfs
        .iter()
        .enumerate()
        .map(|(ci, pmf)| {
            let atoms: Vec<(Vec<&str>, Rational)> = pmf
                .iter()
                .enumerate()
                .filter(|(_, p)| p.is_positive())
                .map(|(li, p)| (vec![labels[li].as_str()], p.clone()))
                .collect();
            let borrowed: Vec<(&[&str], Rational)> =
                atoms.iter().map(|(v, p)| (v.as_slice(), p.clone())).collect();
            context(&(ci + 1).to_string(), &["q"], &borrowed)
        })
        .collect();
    System::validate(SystemSpec {
        contents: vec![ContentDecl {
            id: "q".into(),
            space,
        }],
        contexts,
    })
    .expect("connection spec is valid")
}

/// All pmfs of length `k` with entries in {0, 1/4, 1/2, 3/4, 1}.
fn grid_pmfs(k: usize) -> Vec<Vec<Rational>> {
    fn rec(k: usize, left: i64, prefix: &mut Vec<Rational>, out: &mut Vec<Vec<Rational>>) {
        if k == 1 {
            prefix.push(rat(left, 4));
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for v in 0..=left {
            prefix.push(rat(v, 4));
            rec(k - 1, left - v, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, 4, &mut Vec::new(), &mut out);
    out
}

#[test]
fn criterion_01_pr_box_is_contextual() {
    criterion(1, "PR box contextual under the full plan and traditionally", || {
        let sys = pr_box();
        let plan = plan_full_categorical(&sys).unwrap();
        let split = decide_contextuality(&sys, &plan, &opts()).unwrap();
        assert_eq!(split.status, Status::Contextual);
        assert!(split.witness.is_none());
        assert!(split.residual.unwrap().is_positive());
        let traditional = decide_traditional(&sys, &opts()).unwrap();
        assert_eq!(traditional.status, Status::Contextual);
    });
}

#[test]
fn criterion_02_coarse_graining_pair() {
    criterion(
        2,
        "four-valued pair admits a maximal-equality coupling; its parity coarse-graining does not",
        || {
            let sys = four_valued_pair(ValueKind::Categorical);
            let fine = decide_maximal_equality(&sys, &opts()).unwrap();
            assert_eq!(fine.status, Status::Noncontextual);
            let witness = fine.witness.as_ref().unwrap();
            verify_equality_witness(&sys, witness).unwrap();

            let coarse = sys.coarse_grain(&pr_box_coarse_map()).unwrap();
            let plan = plan_full_categorical(&coarse).unwrap();
            let split = decide_contextuality(&coarse, &plan, &opts()).unwrap();
            assert_eq!(split.status, Status::Contextual);
            let equality = decide_maximal_equality(&coarse, &opts()).unwrap();
            assert_eq!(equality.status, Status::Contextual);
        },
    );
}

#[test]
fn criterion_03_three_valued_connection_full_vs_cuts() {
    criterion(
        3,
        "three-valued connection: contextual under the full plan, noncontextual under cuts",
        || {
            let cat = single_content_three_values(ValueKind::Categorical);
            let full = plan_full_categorical(&cat).unwrap();
            let dense = decide_contextuality(&cat, &full, &opts()).unwrap();
            assert_eq!(dense.status, Status::Contextual);

            let ord = single_content_three_values(ValueKind::Ordered);
            let cuts = plan_cuts(&ord).unwrap();
            let sparse = decide_contextuality(&ord, &cuts, &opts()).unwrap();
            assert_eq!(sparse.status, Status::Noncontextual);
            verify_witness(&ord, &cuts, sparse.witness.as_ref().unwrap()).unwrap();

            let quantile = decide_single_connection_cuts(&ord).unwrap();
            assert_eq!(quantile.status, Status::Noncontextual);
            assert!(check_cut_multimaximal(quantile.witness.as_ref().unwrap()).is_none());
        },
    );
}

#[test]
fn criterion_04_four_valued_connection_and_its_coupling() {
    criterion(
        4,
        "four-valued connection noncontextual; the ten-atom coupling meets every program row",
        || {
            let sys = single_content_four_values();
            let plan = plan_full_categorical(&sys).unwrap();
            let verdict = decide_contextuality(&sys, &plan, &opts()).unwrap();
            assert_eq!(verdict.status, Status::Noncontextual);

            let tuples: [[u8; 3]; 10] = [
                [0, 1, 1],
                [0, 1, 0],
                [0, 1, 2],
                [0, 1, 3],
                [0, 2, 2],
                [0, 3, 3],
                [0, 0, 0],
                [1, 1, 1],
                [2, 2, 2],
                [3, 3, 3],
            ];
            let (problem, atom_space) = build_feasibility_lp(&sys, &plan, &opts()).unwrap();
            let position: Vec<BTreeMap<u8, usize>> = (0..3)
                .map(|ci| {
                    sys.atoms(ci)
                        .iter()
                        .enumerate()
                        .map(|(i, (values, _))| (values[0], i))
                        .collect()
                })
                .collect();
            let tenth = rat(1, 10);
            let mut x = vec![Rational::zero(); problem.num_vars];
            for t in &tuples {
                let mut idx = 0;
                for ci in 0..3 {
                    idx = idx * atom_space.supports[ci] + position[ci][&t[ci]];
                }
                x[idx] += &tenth;
            }
            for row in &problem.rows {
                let lhs: Rational = row
                    .coeffs
                    .iter()
                    .map(|(j, c)| c.clone() * &x[*j])
                    .sum();
                assert_eq!(lhs, row.rhs, "coupling violates a program row");
            }

            let labels: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
            let vars = (1..=3)
                .map(|ci| CoupledVar {
                    id: format!("q@{ci}"),
                    labels: labels.clone(),
                })
                .collect();
            let atoms = tuples.iter().map(|t| (t.to_vec(), tenth.clone())).collect();
            let coupling = Coupling::new(vars, atoms).unwrap();
            assert!(check_categorical_multimax(&coupling).is_none());
            verify_witness(&sys, &plan, &coupling).unwrap();
        },
    );
}

#[test]
fn criterion_05_cross_space_allowable_dichotomies() {
    criterion(
        5,
        "five-point cross: 13 of 15 dichotomies allowable, opposite arms excluded",
        || {
            let space = VSpace::from_value_space(&cross_space()).unwrap();
            let allowable = space.allowable_dichotomizations().unwrap();
            assert_eq!(allowable.len(), 13);

            let all: Vec<cbd_core::vspace::Dichotomy> = (1..space.full())
                .filter(|m| m & 1 == 1)
                .map(|m| cbd_core::vspace::Dichotomy::new(m, 5))
                .collect();
            assert_eq!(all.len(), 15);
            let excluded: Vec<_> = all
                .iter()
                .filter(|d| !allowable.contains(d))
                .collect();
            let lr = space
                .mask_of(&["left".to_string(), "right".to_string()])
                .unwrap();
            let ud = space
                .mask_of(&["up".to_string(), "down".to_string()])
                .unwrap();
            let cut_off: Vec<_> = excluded.iter().map(|d| d.part1).collect();
            assert_eq!(excluded.len(), 2);
            assert!(cut_off.contains(&lr) && cut_off.contains(&ud));
        },
    );
}

#[test]
fn criterion_06_ordered_connections_under_cuts() {
    criterion(
        6,
        "200 random ordered connections: cut-plan program feasible, quantile witness multimaximal",
        || {
            let mut rng = gen::rng(0xC6);
            for _ in 0..200 {
                let k = rng.gen_range(2..=5);
                let n = rng.gen_range(1..=4);
                let sys = gen::random_single_connection(&mut rng, ValueKind::Ordered, k, n, 5);
                let plan = plan_cuts(&sys).unwrap();
                let verdict = decide_contextuality(&sys, &plan, &opts()).unwrap();
                assert_eq!(verdict.status, Status::Noncontextual);

                let quantile = decide_single_connection_cuts(&sys).unwrap();
                let witness = quantile.witness.as_ref().unwrap();
                assert!(check_cut_multimaximal(witness).is_none());
                verify_witness(&sys, &plan, witness).unwrap();
            }
        },
    );
}

/// Feasibility program of a multimaximal coupling for binary variables
/// with the given success probabilities; atom `a` reads variable `i`'s
/// value off bit `n-1-i`.
fn binary_multimax_lp(ps: &[Rational]) -> LpProblem {
    let n = ps.len();
    let atoms = 1usize << n;
    let ones = |i: usize| (0..atoms).filter(move |a| a >> (n - 1 - i) & 1 == 1);
    let mut rows = vec![LpRow {
        coeffs: (0..atoms).map(|a| (a, Rational::one())).collect(),
        rhs: Rational::one(),
    }];
    for i in 0..n {
        rows.push(LpRow {
            coeffs: ones(i).map(|a| (a, Rational::one())).collect(),
            rhs: ps[i].clone(),
        });
        for j in i + 1..n {
            rows.push(LpRow {
                coeffs: ones(i)
                    .filter(|&a| a >> (n - 1 - j) & 1 == 1)
                    .map(|a| (a, Rational::one()))
                    .collect(),
                rhs: ps[i].clone().min(ps[j].clone()),
            });
        }
    }
    LpProblem {
        num_vars: atoms,
        rows,
    }
}

#[test]
fn criterion_07_binary_families_staircase_and_uniqueness() {
    criterion(
        7,
        "200 random binary families: staircase coupling multimaximal, unique for n <= 3",
        || {
            let mut rng = gen::rng(0xC7);
            for _ in 0..200 {
                let n = rng.gen_range(1..=5);
                let ps = gen::random_binary_ps(&mut rng, n);
                let staircase = multimaximal_binary(&ps);
                assert!(check_multimaximal_binary(&staircase).is_none());

                if n > 3 {
                    continue;
                }
                // Pin every coordinate of the feasibility polytope from both
                // sides: max = min = the staircase value, so the coupling is
                // the polytope's only point.
                let problem = binary_multimax_lp(&ps);
                for a in 0..problem.num_vars {
                    let tuple: Vec<u8> = (0..n).map(|i| (a >> (n - 1 - i) & 1) as u8).collect();
                    let expected = staircase
                        .atoms
                        .iter()
                        .find(|(t, _)| *t == tuple)
                        .map(|(_, p)| p.clone())
                        .unwrap_or_else(Rational::zero);
                    let mut objective = vec![Rational::zero(); problem.num_vars];
                    objective[a] = Rational::one();
                    match problem.maximize(&objective) {
                        LpOutcome::Optimal { value, .. } => assert_eq!(value, expected),
                        other => panic!("expected an optimum, got {other:?}"),
                    }
                    match problem.minimize(&objective) {
                        LpOutcome::Optimal { value, .. } => assert_eq!(value, expected),
                        other => panic!("expected an optimum, got {other:?}"),
                    }
                }
            }
        },
    );
}

#[test]
fn criterion_08_small_grid_dominance_and_plans() {
    criterion(
        8,
        "exhaustive quarter-grids: pair verdicts = dominance; aligned families noncontextual; full = 1-2 plan",
        || {
            for k in 2..=4usize {
                let pmfs = grid_pmfs(k);
                let labels: Vec<String> = (0..k).map(|i| i.to_string()).collect();

                for i in 0..pmfs.len() {
                    for j in i..pmfs.len() {
                        let sys = connection(ValueKind::Categorical, &[&pmfs[i], &pmfs[j]]);
                        let full = plan_full_categorical(&sys).unwrap();
                        let verdict = decide_contextuality(&sys, &full, &opts()).unwrap();
                        let dominated = nominal_dominance(&pmfs[i], &pmfs[j])
                            || nominal_dominance(&pmfs[j], &pmfs[i]);
                        assert_eq!(verdict.status == Status::Noncontextual, dominated);

                        let direct = decide_two_variable_categorical(&sys).unwrap();
                        assert_eq!(direct.status, verdict.status);

                        // Up to four values every dichotomizing cell already
                        // has at most two labels, so the reduced plan is the
                        // full plan; re-solve a sample anyway.
                        let reduced = reduce_12(&full);
                        assert_eq!(reduced.entries, full.entries);
                        if (i + 3 * j) % 17 == 0 {
                            let again = decide_contextuality(&sys, &reduced, &opts()).unwrap();
                            assert_eq!(again.status, verdict.status);
                        }
                    }
                }

                let mut aligned = 0usize;
                for i in 0..pmfs.len() {
                    for j in i..pmfs.len() {
                        for l in j..pmfs.len() {
                            let family =
                                [pmfs[i].clone(), pmfs[j].clone(), pmfs[l].clone()];
                            let Some(alignment) = find_dominance_alignment(&family) else {
                                continue;
                            };
                            aligned += 1;
                            let vars: Vec<(String, Vec<Rational>)> = family
                                .iter()
                                .enumerate()
                                .map(|(t, pmf)| (format!("q@{}", t + 1), pmf.clone()))
                                .collect();
                            let witness = nested_events_coupling(&labels, &vars, &alignment);
                            let sys = connection(
                                ValueKind::Categorical,
                                &[&family[0], &family[1], &family[2]],
                            );
                            let full = plan_full_categorical(&sys).unwrap();
                            verify_witness(&sys, &full, &witness).unwrap();
                        }
                    }
                }
                assert!(aligned > pmfs.len(), "alignment branch unexercised");
            }
        },
    );
}

#[test]
fn criterion_09_principles() {
    criterion(
        9,
        "nestedness, deterministic redundancy, analyticity, and coarse-graining principles",
        || {
            let shape = SystemShape::small();

            // Nestedness: subsystems of noncontextual systems stay noncontextual.
            let mut rng = gen::rng(0x91);
            let mut exercised = 0;
            for round in 0..100 {
                let sys = if round % 2 == 0 {
                    gen::random_product_system(&mut rng, &shape)
                } else {
                    gen::random_system(&mut rng, &shape)
                };
                let plan = plan_full_categorical(&sys).unwrap();
                if decide_contextuality(&sys, &plan, &opts()).unwrap().status
                    != Status::Noncontextual
                {
                    continue;
                }
                exercised += 1;
                let sub = gen::random_subsystem(&mut rng, &sys);
                let sub_plan = plan_full_categorical(&sub).unwrap();
                assert_eq!(
                    decide_contextuality(&sub, &sub_plan, &opts()).unwrap().status,
                    Status::Noncontextual
                );
            }
            assert!(exercised >= 50);

            // Deterministic redundancy: adding a deterministic variable never
            // moves the verdict, and removing it restores the system.
            let mut rng = gen::rng(0x92);
            for _ in 0..100 {
                let sys = gen::random_system(&mut rng, &shape);
                let plan = plan_full_categorical(&sys).unwrap();
                let base = decide_contextuality(&sys, &plan, &opts()).unwrap().status;

                let open: Vec<(usize, usize)> = (0..sys.content_count())
                    .flat_map(|qi| (0..sys.context_count()).map(move |ci| (qi, ci)))
                    .filter(|&(qi, ci)| !sys.is_measured(qi, ci))
                    .collect();
                if let Some(&(qi, ci)) = (!open.is_empty())
                    .then(|| &open[rng.gen_range(0..open.len())])
                {
                    let content = sys.contents()[qi].id.clone();
                    let ctx = sys.context_id(ci).to_string();
                    let labels = &sys.contents()[qi].space.labels;
                    let value = labels[rng.gen_range(0..labels.len())].clone();
                    let bigger = sys.add_deterministic(&content, &ctx, &value).unwrap();
                    let bigger_plan = plan_full_categorical(&bigger).unwrap();
                    assert_eq!(
                        decide_contextuality(&bigger, &bigger_plan, &opts())
                            .unwrap()
                            .status,
                        base
                    );
                    let restored = bigger.drop_variable(&content, &ctx).unwrap();
                    assert_eq!(restored.spec(), sys.spec());
                }

                // Delete a pre-existing deterministic variable when one exists.
                let deterministic = sys.format_pairs().into_iter().find(|&(qi, ci)| {
                    sys.marginal(ci, qi).iter().any(|p| p.is_one())
                });
                if let Some((qi, ci)) = deterministic {
                    let content = sys.contents()[qi].id.clone();
                    let ctx = sys.context_id(ci).to_string();
                    if let Ok(smaller) = sys.drop_variable(&content, &ctx) {
                        let smaller_plan = plan_full_categorical(&smaller).unwrap();
                        assert_eq!(
                            decide_contextuality(&smaller, &smaller_plan, &opts())
                                .unwrap()
                                .status,
                            base
                        );
                    }
                }
            }

            // Analyticity: all-deterministic systems are always noncontextual.
            let mut rng = gen::rng(0x93);
            for _ in 0..100 {
                let sys = gen::random_deterministic_system(&mut rng, &shape);
                let plan = plan_full_categorical(&sys).unwrap();
                assert_eq!(
                    decide_contextuality(&sys, &plan, &opts()).unwrap().status,
                    Status::Noncontextual
                );
            }

            // Coarse-graining: allowable coarse-grainings preserve
            // noncontextuality under the allowable plan.
            let mut rng = gen::rng(0x94);
            for _ in 0..100 {
                let sys = gen::random_product_system(&mut rng, &shape);
                let plan = plan_allowable(&sys).unwrap();
                assert_eq!(
                    decide_contextuality(&sys, &plan, &opts()).unwrap().status,
                    Status::Noncontextual
                );
                let map = gen::random_coarse_map(&mut rng, &sys);
                let coarse = sys.coarse_grain(&map).unwrap();
                let coarse_plan = plan_allowable(&coarse).unwrap();
                assert_eq!(
                    decide_contextuality(&coarse, &coarse_plan, &opts())
                        .unwrap()
                        .status,
                    Status::Noncontextual
                );
            }
        },
    );
}

#[test]
fn criterion_10_consistent_systems_specialize() {
    criterion(
        10,
        "100 consistently connected systems: split verdict equals the traditional verdict",
        || {
            let mut rng = gen::rng(0xCA);
            for _ in 0..100 {
                let sys = gen::random_consistent_system(&mut rng, &SystemShape::small());
                let plan = plan_full_categorical(&sys).unwrap();
                let split = decide_contextuality(&sys, &plan, &opts()).unwrap();
                let traditional = decide_traditional(&sys, &opts()).unwrap();
                assert_eq!(split.status, traditional.status);
            }
        },
    );
}
