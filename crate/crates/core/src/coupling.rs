//! Couplings of jointly distributed variables and multimaximality checks.
//!
//! A coupling here is an explicit finite joint distribution over a tuple of
//! variables, each with its own label list. The module provides the three
//! constructions used throughout the crate — the staircase coupling of a
//! family of binary variables, the quantile coupling of an ordered
//! connection, and the nested-events coupling of a dominance-aligned
//! categorical connection — together with checks that a given coupling
//! maximizes all the relevant coincidence probabilities.
//!
//! For binary variables, maximizing every `Pr[both = 1]` pins the joint to
//! `min` of the marginals pairwise; the staircase coupling is the unique
//! joint achieving all of them at once. For ordered variables the analogous
//! condition must hold at every cut, and for categorical variables at every
//! subset of labels.

use crate::rational::Rational;
use std::collections::BTreeMap;
use thiserror::Error;

/// One coordinate of a coupling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledVar {
    pub id: String,
    pub labels: Vec<String>,
}

/// A finite joint distribution, atoms sorted by value tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coupling {
    pub vars: Vec<CoupledVar>,
    pub atoms: Vec<(Vec<u8>, Rational)>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CouplingError {
    #[error("coupling has no atoms")]
    Empty,
    #[error("atom probabilities sum to {0}, not 1")]
    NonUnitMass(String),
    #[error("atom probability is not positive")]
    NonPositiveProbability,
    #[error("atom arity does not match the variable count")]
    ArityMismatch,
    #[error("atom value out of range for variable `{0}`")]
    ValueOutOfRange(String),
}

impl Coupling {
    /// Validates, sorts, and merges duplicate atoms.
    pub fn new(
        vars: Vec<CoupledVar>,
        atoms: Vec<(Vec<u8>, Rational)>,
    ) -> Result<Coupling, CouplingError> {
        if atoms.is_empty() {
            return Err(CouplingError::Empty);
        }
        let mut merged: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        let mut total = Rational::zero();
        for (values, prob) in atoms {
            if values.len() != vars.len() {
                return Err(CouplingError::ArityMismatch);
            }
            for (var, &v) in vars.iter().zip(&values) {
                if v as usize >= var.labels.len() {
                    return Err(CouplingError::ValueOutOfRange(var.id.clone()));
                }
            }
            if !prob.is_positive() {
                return Err(CouplingError::NonPositiveProbability);
            }
            total += &prob;
            *merged.entry(values).or_insert_with(Rational::zero) += &prob;
        }
        if !total.is_one() {
            return Err(CouplingError::NonUnitMass(total.to_string()));
        }
        Ok(Coupling {
            vars,
            atoms: merged.into_iter().collect(),
        })
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    /// Dense marginal distribution of variable `vi`.
    pub fn marginal(&self, vi: usize) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.vars[vi].labels.len()];
        for (values, prob) in &self.atoms {
            out[values[vi] as usize] += prob;
        }
        out
    }

    /// Probability of an event defined pointwise on atoms.
    pub fn event(&self, mut pred: impl FnMut(&[u8]) -> bool) -> Rational {
        self.atoms
            .iter()
            .filter(|(values, _)| pred(values))
            .map(|(_, p)| p)
            .sum()
    }
}

/// A witnessed failure of multimaximality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MultimaxViolation {
    /// `Pr[i = 1, j = 1]` differs from the smaller marginal.
    Pair {
        i: usize,
        j: usize,
        expected: Rational,
        got: Rational,
    },
    /// Positive mass on a forbidden side of an order cut.
    Cut {
        i: usize,
        j: usize,
        cut: usize,
        mass: Rational,
    },
    /// Two atoms and two variables exhibiting the four-point pattern that
    /// breaks the coincidence maximum for the cell `{a[i], b[j]}`.
    FourPoint {
        i: usize,
        j: usize,
        atom_a: usize,
        atom_b: usize,
    },
}

/// Cumulative sums of a pmf.
pub fn cdf(pmf: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::zero();
    pmf.iter()
        .map(|p| {
            acc += p;
            acc.clone()
        })
        .collect()
}

/// The staircase coupling of binary variables with success probabilities
/// `ps`: the unique joint giving every pair the largest possible
/// `Pr[both = 1]`. Variables are named by their one-based position.
pub fn multimaximal_binary(ps: &[Rational]) -> Coupling {
    let n = ps.len();
    let vars: Vec<CoupledVar> = (1..=n)
        .map(|i| CoupledVar {
            id: i.to_string(),
            labels: vec!["0".into(), "1".into()],
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ps[b].cmp(&ps[a]).then(a.cmp(&b)));

    let mut atoms = Vec::new();
    let top = order.first().map(|&i| ps[i].clone()).unwrap_or_else(Rational::zero);
    let rest = Rational::one() - &top;
    if rest.is_positive() || n == 0 {
        atoms.push((vec![0u8; n], rest));
    }
    let mut ones = vec![0u8; n];
    for (t, &i) in order.iter().enumerate() {
        ones[i] = 1;
        let next = order
            .get(t + 1)
            .map(|&j| ps[j].clone())
            .unwrap_or_else(Rational::zero);
        let step = ps[i].clone() - next;
        if step.is_positive() {
            atoms.push((ones.clone(), step));
        }
    }
    Coupling::new(vars, atoms).expect("staircase coupling is a distribution")
}

/// Checks the pairwise coincidence maxima of a coupling of binary variables.
pub fn check_multimaximal_binary(c: &Coupling) -> Option<MultimaxViolation> {
    assert!(
        c.vars.iter().all(|v| v.labels.len() == 2),
        "binary check requires binary variables"
    );
    let ps: Vec<Rational> = (0..c.arity()).map(|v| c.marginal(v)[1].clone()).collect();
    for i in 0..c.arity() {
        for j in i + 1..c.arity() {
            let got = c.event(|a| a[i] == 1 && a[j] == 1);
            let expected = ps[i].clone().min(ps[j].clone());
            if got != expected {
                return Some(MultimaxViolation::Pair {
                    i,
                    j,
                    expected,
                    got,
                });
            }
        }
    }
    None
}

/// The quantile coupling of pmfs over a common ordered label list: every
/// variable is read off the same uniform source through its quantile
/// function.
pub fn quantile_coupling(labels: &[String], vars: &[(String, Vec<Rational>)]) -> Coupling {
    let cdfs: Vec<Vec<Rational>> = vars.iter().map(|(_, pmf)| cdf(pmf)).collect();
    let mut breakpoints: Vec<Rational> = cdfs
        .iter()
        .flatten()
        .filter(|b| b.is_positive())
        .cloned()
        .collect();
    breakpoints.sort();
    breakpoints.dedup();

    let coupled: Vec<CoupledVar> = vars
        .iter()
        .map(|(id, _)| CoupledVar {
            id: id.clone(),
            labels: labels.to_vec(),
        })
        .collect();
    let mut atoms = Vec::new();
    let mut prev = Rational::zero();
    for b in breakpoints {
        let width = b.clone() - &prev;
        if width.is_positive() {
            let values: Vec<u8> = cdfs
                .iter()
                .map(|f| f.iter().position(|v| *v >= b) .expect("cdf reaches 1") as u8)
                .collect();
            atoms.push((values, width));
        }
        prev = b;
    }
    Coupling::new(coupled, atoms).expect("quantile coupling is a distribution")
}

/// Checks coincidence maxima of an ordered-label coupling at every cut: no
/// atom may put the variable with the larger cdf below a cut while the other
/// sits above it.
pub fn check_cut_multimaximal(c: &Coupling) -> Option<MultimaxViolation> {
    let k = c.vars[0].labels.len();
    assert!(
        c.vars.iter().all(|v| v.labels == c.vars[0].labels),
        "cut check requires a common label list"
    );
    let cdfs: Vec<Vec<Rational>> = (0..c.arity()).map(|v| cdf(&c.marginal(v))).collect();
    for i in 0..c.arity() {
        for j in i + 1..c.arity() {
            for cut in 0..k.saturating_sub(1) {
                // When F_i(cut) >= F_j(cut), variable j may not fall at or
                // below the cut while variable i is above it, and dually.
                let fwd = cdfs[i][cut] >= cdfs[j][cut];
                let bwd = cdfs[j][cut] >= cdfs[i][cut];
                let mass = c.event(|a| {
                    let below_i = (a[i] as usize) <= cut;
                    let below_j = (a[j] as usize) <= cut;
                    (fwd && below_j && !below_i) || (bwd && below_i && !below_j)
                });
                if mass.is_positive() {
                    return Some(MultimaxViolation::Cut { i, j, cut, mass });
                }
            }
        }
    }
    None
}

/// Checks coincidence maxima of a categorical coupling at every cell of
/// labels. A violation is witnessed by two atoms `a`, `b` and variables
/// `i`, `j` with `a[i]`, `b[i]`, `b[j]`, `a[j]` forming a chain of four
/// pairwise-unequal adjacent values; the cell `{a[i], b[j]}` then traps
/// strictly less than the smaller of the two cell probabilities.
pub fn check_categorical_multimax(c: &Coupling) -> Option<MultimaxViolation> {
    assert!(
        c.vars.iter().all(|v| v.labels == c.vars[0].labels),
        "categorical check requires a common label list"
    );
    for i in 0..c.arity() {
        for j in i + 1..c.arity() {
            for (ai, (a, _)) in c.atoms.iter().enumerate() {
                for (bi, (b, _)) in c.atoms.iter().enumerate() {
                    let (x, y, w, z) = (a[i], b[i], b[j], a[j]);
                    if x != y && y != w && w != z && z != x {
                        return Some(MultimaxViolation::FourPoint {
                            i,
                            j,
                            atom_a: ai,
                            atom_b: bi,
                        });
                    }
                }
            }
        }
    }
    None
}

/// A dominance alignment of a family of pmfs: a single exceptional label
/// and an order along which every other label's probability is
/// nondecreasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub exceptional: usize,
    pub order: Vec<usize>,
}

/// Whether `p` dominates `q`: `p` falls strictly below `q` at no more than
/// one label.
pub fn nominal_dominance(p: &[Rational], q: &[Rational]) -> bool {
    assert_eq!(p.len(), q.len(), "pmfs must share a label list");
    p.iter().zip(q).filter(|(a, b)| a < b).count() <= 1
}

/// Searches for a dominance alignment of the family. Sorting by a candidate
/// exceptional label's probability is forced: within the sorted order, ties
/// in the exceptional label imply identical pmfs, so checking the sorted
/// order is exhaustive.
pub fn find_dominance_alignment(pmfs: &[Vec<Rational>]) -> Option<Alignment> {
    if pmfs.is_empty() {
        return Some(Alignment {
            exceptional: 0,
            order: vec![],
        });
    }
    let k = pmfs[0].len();
    for exceptional in 0..k {
        let mut order: Vec<usize> = (0..pmfs.len()).collect();
        order.sort_by(|&a, &b| {
            pmfs[b][exceptional]
                .cmp(&pmfs[a][exceptional])
                .then(a.cmp(&b))
        });
        let aligned = order.windows(2).all(|w| {
            (0..k)
                .filter(|&l| l != exceptional)
                .all(|l| pmfs[w[0]][l] <= pmfs[w[1]][l])
        });
        if aligned {
            return Some(Alignment { exceptional, order });
        }
    }
    None
}

/// The nested-events coupling of a dominance-aligned family: every
/// non-exceptional label occupies a block with a common left endpoint
/// across variables, so each label's event is nested along the order and
/// every cell's coincidence probability attains its maximum.
pub fn nested_events_coupling(
    labels: &[String],
    vars: &[(String, Vec<Rational>)],
    alignment: &Alignment,
) -> Coupling {
    let k = labels.len();
    let last = &vars[*alignment.order.last().expect("nonempty family")].1;
    // Block left endpoints, laid out from the widest pmf in the order.
    let mut left = vec![Rational::zero(); k];
    let mut acc = last[alignment.exceptional].clone();
    for l in 0..k {
        if l == alignment.exceptional {
            continue;
        }
        left[l] = acc.clone();
        acc += &last[l];
    }

    let mut breakpoints: Vec<Rational> = vec![Rational::one()];
    for &v in &alignment.order {
        for l in 0..k {
            if l == alignment.exceptional {
                continue;
            }
            let end = left[l].clone() + &vars[v].1[l];
            if left[l].is_positive() {
                breakpoints.push(left[l].clone());
            }
            if end.is_positive() && end < Rational::one() {
                breakpoints.push(end);
            }
        }
    }
    breakpoints.sort();
    breakpoints.dedup();

    let value_at = |v: usize, point: &Rational| -> u8 {
        for l in 0..k {
            if l == alignment.exceptional {
                continue;
            }
            let width = &vars[v].1[l];
            if *point >= left[l] && point.clone() - &left[l] < *width {
                return l as u8;
            }
        }
        alignment.exceptional as u8
    };

    let coupled: Vec<CoupledVar> = vars
        .iter()
        .map(|(id, _)| CoupledVar {
            id: id.clone(),
            labels: labels.to_vec(),
        })
        .collect();
    let mut atoms = Vec::new();
    let mut prev = Rational::zero();
    for b in breakpoints {
        let width = b.clone() - &prev;
        if width.is_positive() {
            let values: Vec<u8> = (0..vars.len()).map(|v| value_at(v, &prev)).collect();
            atoms.push((values, width));
        }
        prev = b;
    }
    Coupling::new(coupled, atoms).expect("nested-events coupling is a distribution")
}
