//! The (non)contextuality decision procedures.
//!
//! The main entry point, [`decide_contextuality`], reduces the question to
//! exact rational feasibility: a probability is attached to every global
//! atom (one support atom picked per context) and constrained so that each
//! context reproduces its bunch while, for every dichotomization of every
//! content, each pair of contexts attains the largest possible coincidence
//! probability. The system is noncontextual exactly when the constraint
//! set is nonempty; a feasible point is returned as an explicit witness
//! coupling.
//!
//! When a system is contextual the phase-1 optimum of the feasibility
//! program — the smallest total constraint violation — is reported as a
//! diagnostic residual. It certifies infeasibility but is not a calibrated
//! degree of contextuality; use it only to confirm the verdict.
//!
//! [`decide_traditional`] answers the older question, sensible only for
//! consistently connected systems: whether a coupling exists whose
//! connection variables are equal almost surely. Its relaxation
//! [`decide_maximal_equality`] asks for pairwise-maximal equality
//! probabilities of the original (undichotomized) variables and exists to
//! make the contrast explicit: it degenerates on connections with
//! disjoint supports, which the split-based analysis handles soundly. The
//! specialized procedures for two-variable categorical connections and
//! for ordered single connections bypass the program entirely and produce
//! constructive witnesses.

use crate::coupling::{
    find_dominance_alignment, nested_events_coupling, quantile_coupling, CoupledVar, Coupling,
};
use crate::lp::{Feasibility, LpProblem, LpRow};
use crate::model::{ModelError, System, ValueKind};
use crate::rational::Rational;
use crate::split::{determination_check, plan_cuts, SplitError, SplitPlan};
use crate::vspace::{mask_bit, Mask};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Noncontextual,
    Contextual,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Noncontextual => "noncontextual",
            Status::Contextual => "contextual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpSize {
    pub variables: usize,
    pub constraints: usize,
}

/// The outcome of a decision procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    /// A coupling of the whole system certifying noncontextuality.
    pub witness: Option<Coupling>,
    /// Smallest total violation of the feasibility program, positive iff
    /// contextual. Absent when no program was solved.
    pub residual: Option<Rational>,
    /// Size of the feasibility program, when one was built.
    pub lp_size: Option<LpSize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecideOptions {
    /// Upper bound on the number of global atoms (program variables).
    pub max_atoms: usize,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            max_atoms: 1_000_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecideError {
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("the program would need {atoms} atom variables, above the budget of {max}")]
    AtomBudgetExceeded { atoms: usize, max: usize },
    #[error("content `{content}` is distributed differently in contexts `{context_a}` and `{context_b}`")]
    InconsistentlyConnected {
        content: String,
        context_a: String,
        context_b: String,
    },
    #[error("procedure requires {0}")]
    ShapeMismatch(&'static str),
}

/// Index space of global atoms: one support atom chosen per context, the
/// last context varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalAtoms {
    pub supports: Vec<usize>,
}

impl GlobalAtoms {
    pub fn count(&self) -> Option<usize> {
        self.supports
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.supports.len()];
        for ci in (0..self.supports.len()).rev() {
            out[ci] = idx % self.supports[ci];
            idx /= self.supports[ci];
        }
        out
    }
}

fn plan_checked(system: &System, plan: &SplitPlan) -> Result<(), DecideError> {
    for content in system.contents() {
        if plan.entry(&content.id).is_none() {
            return Err(SplitError::PlanIncomplete(content.id.clone()).into());
        }
        if !determination_check(system, plan, &content.id)? {
            return Err(SplitError::NotDetermining(content.id.clone()).into());
        }
    }
    Ok(())
}

fn global_atoms(system: &System, opts: &DecideOptions) -> Result<GlobalAtoms, DecideError> {
    let atoms = GlobalAtoms {
        supports: (0..system.context_count())
            .map(|ci| system.atoms(ci).len())
            .collect(),
    };
    match atoms.count() {
        Some(n) if n <= opts.max_atoms => Ok(atoms),
        Some(n) => Err(DecideError::AtomBudgetExceeded {
            atoms: n,
            max: opts.max_atoms,
        }),
        None => Err(DecideError::AtomBudgetExceeded {
            atoms: usize::MAX,
            max: opts.max_atoms,
        }),
    }
}

/// Bunch-marginal rows: every support atom of every context must receive
/// exactly its bunch probability.
fn marginal_rows(system: &System, atoms: &GlobalAtoms) -> Vec<LpRow> {
    let count = atoms.count().expect("count checked by caller");
    let mut rows: Vec<LpRow> = Vec::new();
    let mut row_of: Vec<Vec<usize>> = Vec::new();
    for ci in 0..system.context_count() {
        let mut per_support = Vec::new();
        for (_, prob) in system.atoms(ci) {
            per_support.push(rows.len());
            rows.push(LpRow {
                coeffs: Vec::new(),
                rhs: prob.clone(),
            });
        }
        row_of.push(per_support);
    }
    for idx in 0..count {
        let digits = atoms.decode(idx);
        for (ci, &s) in digits.iter().enumerate() {
            let r = row_of[ci][s];
            rows[r].coeffs.push((idx, Rational::one()));
        }
    }
    rows
}

/// Builds the multimaximal-coupling feasibility program for `system` under
/// `plan`.
pub fn build_feasibility_lp(
    system: &System,
    plan: &SplitPlan,
    opts: &DecideOptions,
) -> Result<(LpProblem, GlobalAtoms), DecideError> {
    plan_checked(system, plan)?;
    let atoms = global_atoms(system, opts)?;
    let count = atoms.count().expect("count checked above");
    let mut rows = marginal_rows(system, &atoms);

    // Coincidence rows: for each content, dichotomization, and unordered
    // pair of measuring contexts, the both-inside probability equals the
    // smaller event probability.
    for (qi, content) in system.contents().iter().enumerate() {
        let entry = plan.entry(&content.id).expect("plan checked above");
        let measured = system.measured_in(qi);
        if measured.len() < 2 || entry.subsets.is_empty() {
            continue;
        }
        // Membership of each context's support atoms in each subset.
        let membership: BTreeMap<(usize, Mask), Vec<bool>> = measured
            .iter()
            .flat_map(|&ci| {
                let pos = system
                    .measures(ci)
                    .iter()
                    .position(|&q| q == qi)
                    .expect("measured_in is consistent");
                entry.subsets.iter().map(move |&subset| {
                    let bits = system
                        .atoms(ci)
                        .iter()
                        .map(|(values, _)| subset & mask_bit(values[pos] as usize) != 0)
                        .collect();
                    ((ci, subset), bits)
                })
            })
            .collect();
        let event = |ci: usize, subset: Mask| -> Rational {
            system
                .atoms(ci)
                .iter()
                .zip(&membership[&(ci, subset)])
                .filter(|(_, &inside)| inside)
                .map(|((_, p), _)| p)
                .sum()
        };
        for &subset in &entry.subsets {
            for (i, &ca) in measured.iter().enumerate() {
                for &cb in &measured[i + 1..] {
                    let rhs = event(ca, subset).min(event(cb, subset));
                    let in_a = &membership[&(ca, subset)];
                    let in_b = &membership[&(cb, subset)];
                    let coeffs = (0..count)
                        .filter(|&idx| {
                            let digits = atoms.decode(idx);
                            in_a[digits[ca]] && in_b[digits[cb]]
                        })
                        .map(|idx| (idx, Rational::one()))
                        .collect();
                    rows.push(LpRow { coeffs, rhs });
                }
            }
        }
    }

    Ok((
        LpProblem {
            num_vars: count,
            rows,
        },
        atoms,
    ))
}

/// Assembles the witness coupling from a feasible point: one variable per
/// (content, context) slot of the format, in context order.
pub fn witness_from_solution(
    system: &System,
    atoms: &GlobalAtoms,
    solution: &[Rational],
) -> Coupling {
    let vars: Vec<CoupledVar> = system
        .format_pairs()
        .into_iter()
        .map(|(qi, ci)| CoupledVar {
            id: format!("{}@{}", system.contents()[qi].id, system.context_id(ci)),
            labels: system.contents()[qi].space.labels.clone(),
        })
        .collect();
    let coupling_atoms: Vec<(Vec<u8>, Rational)> = solution
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_positive())
        .map(|(idx, p)| {
            let digits = atoms.decode(idx);
            let values = digits
                .iter()
                .enumerate()
                .flat_map(|(ci, &s)| system.atoms(ci)[s].0.iter().copied())
                .collect();
            (values, p.clone())
        })
        .collect();
    Coupling::new(vars, coupling_atoms).expect("feasible point is a distribution")
}

/// Decides (non)contextuality of the system under the given split plan.
pub fn decide_contextuality(
    system: &System,
    plan: &SplitPlan,
    opts: &DecideOptions,
) -> Result<Verdict, DecideError> {
    let (lp, atoms) = build_feasibility_lp(system, plan, opts)?;
    let size = LpSize {
        variables: lp.num_vars,
        constraints: lp.rows.len(),
    };
    Ok(match lp.feasible_point() {
        Feasibility::Feasible(x) => {
            let witness = witness_from_solution(system, &atoms, &x);
            debug_assert_eq!(verify_witness(system, plan, &witness), Ok(()));
            Verdict {
                status: Status::Noncontextual,
                witness: Some(witness),
                residual: None,
                lp_size: Some(size),
            }
        }
        Feasibility::Infeasible { residual } => Verdict {
            status: Status::Contextual,
            witness: None,
            residual: Some(residual),
            lp_size: Some(size),
        },
    })
}

/// Decides whether a coupling exists whose connections pairwise maximize
/// the probability of taking equal values — the direct analysis of the
/// original variables, with no dichotomization involved.
///
/// For consistently connected systems the attainable maximum is 1, so this
/// coincides with [`decide_traditional`]. For inconsistently connected
/// systems it is a much weaker notion than the split-based one: a
/// connection whose per-context supports are disjoint maximizes every
/// equality probability (at zero) in any coupling whatsoever, which is
/// precisely why value-level equality is a poor carrier of contextuality
/// for non-binary variables and why [`decide_contextuality`] works on
/// dichotomizations instead.
pub fn decide_maximal_equality(
    system: &System,
    opts: &DecideOptions,
) -> Result<Verdict, DecideError> {
    let atoms = global_atoms(system, opts)?;
    let count = atoms.count().expect("count checked above");
    let mut rows = marginal_rows(system, &atoms);
    for qi in 0..system.content_count() {
        let measured = system.measured_in(qi);
        for (i, &ca) in measured.iter().enumerate() {
            for &cb in &measured[i + 1..] {
                let ma = system.marginal(ca, qi);
                let mb = system.marginal(cb, qi);
                let rhs: Rational = ma
                    .iter()
                    .zip(&mb)
                    .map(|(a, b)| a.clone().min(b.clone()))
                    .sum();
                let pa = system
                    .measures(ca)
                    .iter()
                    .position(|&q| q == qi)
                    .expect("measured_in is consistent");
                let pb = system
                    .measures(cb)
                    .iter()
                    .position(|&q| q == qi)
                    .expect("measured_in is consistent");
                let coeffs = (0..count)
                    .filter(|&idx| {
                        let digits = atoms.decode(idx);
                        system.atoms(ca)[digits[ca]].0[pa] == system.atoms(cb)[digits[cb]].0[pb]
                    })
                    .map(|idx| (idx, Rational::one()))
                    .collect();
                rows.push(LpRow { coeffs, rhs });
            }
        }
    }
    let lp = LpProblem {
        num_vars: count,
        rows,
    };
    let size = LpSize {
        variables: lp.num_vars,
        constraints: lp.rows.len(),
    };
    Ok(match lp.feasible_point() {
        Feasibility::Feasible(x) => {
            let witness = witness_from_solution(system, &atoms, &x);
            debug_assert_eq!(verify_equality_witness(system, &witness), Ok(()));
            Verdict {
                status: Status::Noncontextual,
                witness: Some(witness),
                residual: None,
                lp_size: Some(size),
            }
        }
        Feasibility::Infeasible { residual } => Verdict {
            status: Status::Contextual,
            witness: None,
            residual: Some(residual),
            lp_size: Some(size),
        },
    })
}

/// Decides the traditional question: existence of a coupling whose
/// connection variables coincide almost surely. Only consistently
/// connected systems qualify.
pub fn decide_traditional(system: &System, opts: &DecideOptions) -> Result<Verdict, DecideError> {
    if let crate::model::Consistency::Inconsistent {
        content,
        context_a,
        context_b,
    } = system.is_consistently_connected()
    {
        return Err(DecideError::InconsistentlyConnected {
            content,
            context_a,
            context_b,
        });
    }
    let atoms = global_atoms(system, opts)?;
    let count = atoms.count().expect("count checked above");
    let mut rows = marginal_rows(system, &atoms);
    for qi in 0..system.content_count() {
        let measured = system.measured_in(qi);
        for (i, &ca) in measured.iter().enumerate() {
            for &cb in &measured[i + 1..] {
                let pa = system
                    .measures(ca)
                    .iter()
                    .position(|&q| q == qi)
                    .expect("measured_in is consistent");
                let pb = system
                    .measures(cb)
                    .iter()
                    .position(|&q| q == qi)
                    .expect("measured_in is consistent");
                let coeffs = (0..count)
                    .filter(|&idx| {
                        let digits = atoms.decode(idx);
                        system.atoms(ca)[digits[ca]].0[pa] != system.atoms(cb)[digits[cb]].0[pb]
                    })
                    .map(|idx| (idx, Rational::one()))
                    .collect();
                rows.push(LpRow {
                    coeffs,
                    rhs: Rational::zero(),
                });
            }
        }
    }
    let lp = LpProblem {
        num_vars: count,
        rows,
    };
    let size = LpSize {
        variables: lp.num_vars,
        constraints: lp.rows.len(),
    };
    Ok(match lp.feasible_point() {
        Feasibility::Feasible(x) => Verdict {
            status: Status::Noncontextual,
            witness: Some(witness_from_solution(system, &atoms, &x)),
            residual: None,
            lp_size: Some(size),
        },
        Feasibility::Infeasible { residual } => Verdict {
            status: Status::Contextual,
            witness: None,
            residual: Some(residual),
            lp_size: Some(size),
        },
    })
}

fn single_content_shape(system: &System) -> Result<usize, DecideError> {
    if system.content_count() != 1 {
        return Err(DecideError::ShapeMismatch("a single content"));
    }
    for ci in 0..system.context_count() {
        if system.measures(ci) != [0] {
            return Err(DecideError::ShapeMismatch(
                "every context measuring exactly the one content",
            ));
        }
    }
    Ok(0)
}

/// Decides a categorical connection of exactly two variables through
/// nominal dominance, constructing the nested-events witness when one
/// direction holds.
pub fn decide_two_variable_categorical(system: &System) -> Result<Verdict, DecideError> {
    let qi = single_content_shape(system)?;
    if system.context_count() != 2 {
        return Err(DecideError::ShapeMismatch("exactly two contexts"));
    }
    if system.contents()[qi].space.kind != ValueKind::Categorical {
        return Err(DecideError::ShapeMismatch("a categorical content"));
    }
    let vars: Vec<(String, Vec<Rational>)> = (0..2)
        .map(|ci| {
            (
                format!("{}@{}", system.contents()[qi].id, system.context_id(ci)),
                system.marginal(ci, qi),
            )
        })
        .collect();
    let pmfs: Vec<Vec<Rational>> = vars.iter().map(|(_, p)| p.clone()).collect();
    Ok(match find_dominance_alignment(&pmfs) {
        Some(alignment) => {
            let witness = nested_events_coupling(
                &system.contents()[qi].space.labels,
                &vars,
                &alignment,
            );
            Verdict {
                status: Status::Noncontextual,
                witness: Some(witness),
                residual: None,
                lp_size: None,
            }
        }
        None => Verdict {
            status: Status::Contextual,
            witness: None,
            residual: None,
            lp_size: None,
        },
    })
}

/// Couples an ordered single connection by reading every context off one
/// uniform source. The result always satisfies the cut maxima, so such
/// systems are never contextual under the cut plan.
pub fn decide_single_connection_cuts(system: &System) -> Result<Verdict, DecideError> {
    let qi = single_content_shape(system)?;
    let content = &system.contents()[qi];
    if content.space.kind != ValueKind::Ordered {
        return Err(DecideError::ShapeMismatch("an ordered content"));
    }
    let vars: Vec<(String, Vec<Rational>)> = (0..system.context_count())
        .map(|ci| {
            (
                format!("{}@{}", content.id, system.context_id(ci)),
                system.marginal(ci, qi),
            )
        })
        .collect();
    let witness = quantile_coupling(&content.space.labels, &vars);
    let plan = plan_cuts(system)?;
    debug_assert_eq!(verify_witness(system, &plan, &witness), Ok(()));
    Ok(Verdict {
        status: Status::Noncontextual,
        witness: Some(witness),
        residual: None,
        lp_size: None,
    })
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WitnessError {
    #[error("witness variables do not match the system format")]
    VarOrder,
    #[error("witness restricted to context `{0}` differs from its bunch")]
    BunchMismatch(String),
    #[error("coincidence probability for content `{content}` between contexts `{context_a}` and `{context_b}` misses its maximum")]
    CoincidenceMismatch {
        content: String,
        context_a: String,
        context_b: String,
    },
}

/// Checks that a coupling reproduces every bunch and attains every
/// coincidence maximum demanded by the plan.
pub fn verify_witness(
    system: &System,
    plan: &SplitPlan,
    coupling: &Coupling,
) -> Result<(), WitnessError> {
    let pairs = system.format_pairs();
    if coupling.vars.len() != pairs.len() {
        return Err(WitnessError::VarOrder);
    }
    for (var, &(qi, ci)) in coupling.vars.iter().zip(&pairs) {
        let content = &system.contents()[qi];
        if var.id != format!("{}@{}", content.id, system.context_id(ci))
            || var.labels != content.space.labels
        {
            return Err(WitnessError::VarOrder);
        }
    }
    // Positions of each context's block in the flattened format.
    let mut slot = 0usize;
    for ci in 0..system.context_count() {
        let width = system.measures(ci).len();
        let mut joint: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        for (values, p) in &coupling.atoms {
            let key = values[slot..slot + width].to_vec();
            *joint.entry(key).or_insert_with(Rational::zero) += p;
        }
        let expected: BTreeMap<Vec<u8>, Rational> = system
            .atoms(ci)
            .iter()
            .map(|(v, p)| (v.clone(), p.clone()))
            .collect();
        if joint != expected {
            return Err(WitnessError::BunchMismatch(system.context_id(ci).into()));
        }
        slot += width;
    }

    let slot_of = |qi: usize, ci: usize| -> usize {
        let mut s = 0;
        for c in 0..ci {
            s += system.measures(c).len();
        }
        s + system
            .measures(ci)
            .iter()
            .position(|&q| q == qi)
            .expect("pair comes from the format")
    };
    for (qi, content) in system.contents().iter().enumerate() {
        let Some(entry) = plan.entry(&content.id) else {
            continue;
        };
        let measured = system.measured_in(qi);
        for &subset in &entry.subsets {
            let event = |ci: usize| -> Rational {
                system
                    .marginal(ci, qi)
                    .iter()
                    .enumerate()
                    .filter(|(li, _)| subset & mask_bit(*li) != 0)
                    .map(|(_, p)| p)
                    .sum()
            };
            for (i, &ca) in measured.iter().enumerate() {
                for &cb in &measured[i + 1..] {
                    let (sa, sb) = (slot_of(qi, ca), slot_of(qi, cb));
                    let joint = coupling.event(|values| {
                        subset & mask_bit(values[sa] as usize) != 0
                            && subset & mask_bit(values[sb] as usize) != 0
                    });
                    if joint != event(ca).min(event(cb)) {
                        return Err(WitnessError::CoincidenceMismatch {
                            content: content.id.clone(),
                            context_a: system.context_id(ca).into(),
                            context_b: system.context_id(cb).into(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks that a coupling reproduces every bunch and pairwise maximizes
/// the probability of equal values in every connection.
pub fn verify_equality_witness(system: &System, coupling: &Coupling) -> Result<(), WitnessError> {
    let empty = SplitPlan {
        policy: crate::split::PlanPolicy::Custom,
        entries: Vec::new(),
    };
    // Variable layout and bunch checks are shared with the plan-based
    // verifier; an empty plan skips all coincidence rows.
    verify_witness(system, &empty, coupling)?;
    let slot_of = |qi: usize, ci: usize| -> usize {
        let mut s = 0;
        for c in 0..ci {
            s += system.measures(c).len();
        }
        s + system
            .measures(ci)
            .iter()
            .position(|&q| q == qi)
            .expect("pair comes from the format")
    };
    for (qi, content) in system.contents().iter().enumerate() {
        let measured = system.measured_in(qi);
        for (i, &ca) in measured.iter().enumerate() {
            for &cb in &measured[i + 1..] {
                let (sa, sb) = (slot_of(qi, ca), slot_of(qi, cb));
                let got = coupling.event(|values| values[sa] == values[sb]);
                let expected: Rational = system
                    .marginal(ca, qi)
                    .iter()
                    .zip(&system.marginal(cb, qi))
                    .map(|(a, b)| a.clone().min(b.clone()))
                    .sum();
                if got != expected {
                    return Err(WitnessError::CoincidenceMismatch {
                        content: content.id.clone(),
                        context_a: system.context_id(ca).into(),
                        context_b: system.context_id(cb).into(),
                    });
                }
            }
        }
    }
    Ok(())
}
