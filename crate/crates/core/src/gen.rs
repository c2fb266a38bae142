//! Seeded random generators for systems and connections.
//!
//! Everything here is deterministic in the seed (ChaCha8 keystream), so
//! test corpora and benches are reproducible. The generators only promise
//! structural validity; distributional properties are whatever falls out
//! of the integer-weight construction. Exceptions are documented per
//! generator (e.g. product systems are noncontextual by construction,
//! consistent systems have equal marginals in every connection).

use crate::model::{
    AtomDecl, ContentCoarseMap, ContentDecl, ContextDecl, CoarseGrainingMap, System, SystemSpec,
    ValueKind, ValueSpace,
};
use crate::rational::Rational;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size caps for [`random_system`] and friends.
#[derive(Debug, Clone)]
pub struct SystemShape {
    pub max_contents: usize,
    pub max_contexts: usize,
    pub max_labels: usize,
    /// Contents per context.
    pub max_arity: usize,
    /// Support atoms per bunch.
    pub max_support: usize,
    pub kind: ValueKind,
}

impl SystemShape {
    /// Comfortable for exhaustive-ish suites: a few binary/ternary contents
    /// in a few contexts.
    pub fn small() -> Self {
        SystemShape {
            max_contents: 3,
            max_contexts: 3,
            max_labels: 3,
            max_arity: 2,
            max_support: 4,
            kind: ValueKind::Categorical,
        }
    }
}

fn space(kind: ValueKind, k: usize) -> ValueSpace {
    let labels: Vec<String> = (0..k).map(|i| i.to_string()).collect();
    match kind {
        ValueKind::Categorical => ValueSpace::categorical(labels),
        ValueKind::Ordered => ValueSpace::ordered(labels),
    }
}

/// A pmf with the given support size: positive integer weights normalized
/// by their sum.
pub fn random_pmf_with_support(rng: &mut ChaCha8Rng, k: usize, support: usize) -> Vec<Rational> {
    assert!(support >= 1 && support <= k);
    let mut labels: Vec<usize> = (0..k).collect();
    labels.shuffle(rng);
    let chosen = &labels[..support];
    let weights: Vec<i64> = (0..support).map(|_| rng.gen_range(1..=8)).collect();
    let total: i64 = weights.iter().sum();
    let mut pmf = vec![Rational::zero(); k];
    for (&li, &w) in chosen.iter().zip(&weights) {
        pmf[li] = Rational::new(w, total);
    }
    pmf
}

pub fn random_pmf(rng: &mut ChaCha8Rng, k: usize) -> Vec<Rational> {
    let support = rng.gen_range(1..=k);
    random_pmf_with_support(rng, k, support)
}

/// Success probabilities for a binary family, denominators up to 12.
pub fn random_binary_ps(rng: &mut ChaCha8Rng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| {
            let den = rng.gen_range(1..=12);
            let num = rng.gen_range(0..=den);
            Rational::new(num, den)
        })
        .collect()
}

/// Random formats covering every content, then independent random bunches.
pub fn random_system(rng: &mut ChaCha8Rng, shape: &SystemShape) -> System {
    let n_q = rng.gen_range(1..=shape.max_contents);
    let contents: Vec<ContentDecl> = (0..n_q)
        .map(|qi| ContentDecl {
            id: format!("q{qi}"),
            space: space(shape.kind, rng.gen_range(2..=shape.max_labels)),
        })
        .collect();

    let n_c = rng.gen_range(1..=shape.max_contexts);
    let mut formats: Vec<BTreeSet<usize>> = (0..n_c)
        .map(|_| {
            let arity = rng.gen_range(1..=shape.max_arity.min(n_q));
            let mut all: Vec<usize> = (0..n_q).collect();
            all.shuffle(rng);
            all[..arity].iter().copied().collect()
        })
        .collect();
    for qi in 0..n_q {
        if !formats.iter().any(|f| f.contains(&qi)) {
            let candidates: Vec<usize> = (0..n_c).filter(|&ci| !formats[ci].contains(&qi)).collect();
            let ci = *candidates.choose(rng).expect("qi is in no context");
            formats[ci].insert(qi);
        }
    }

    let contexts: Vec<ContextDecl> = formats
        .iter()
        .enumerate()
        .map(|(ci, format)| {
            let measures: Vec<usize> = format.iter().copied().collect();
            let sizes: Vec<usize> = measures.iter().map(|&qi| contents[qi].space.len()).collect();
            let cells: usize = sizes.iter().product();
            let support = rng.gen_range(1..=shape.max_support.min(cells));
            let mut tuples: BTreeSet<Vec<usize>> = BTreeSet::new();
            while tuples.len() < support {
                tuples.insert(sizes.iter().map(|&k| rng.gen_range(0..k)).collect());
            }
            let weights: Vec<i64> = (0..support).map(|_| rng.gen_range(1..=8)).collect();
            let total: i64 = weights.iter().sum();
            ContextDecl {
                id: format!("c{ci}"),
                measures: measures
                    .iter()
                    .map(|&qi| contents[qi].id.clone())
                    .collect(),
                atoms: tuples
                    .iter()
                    .zip(&weights)
                    .map(|(tuple, &w)| AtomDecl {
                        values: tuple
                            .iter()
                            .zip(&measures)
                            .map(|(&li, &qi)| contents[qi].space.labels[li].clone())
                            .collect(),
                        prob: Rational::new(w, total),
                    })
                    .collect(),
            }
        })
        .collect();

    System::validate(SystemSpec { contents, contexts }).expect("generated spec is valid")
}

/// Every bunch a single deterministic atom; values vary freely across
/// contexts, so the system is typically inconsistently connected.
pub fn random_deterministic_system(rng: &mut ChaCha8Rng, shape: &SystemShape) -> System {
    let shape = SystemShape {
        max_support: 1,
        ..shape.clone()
    };
    random_system(rng, &shape)
}

/// One pmf per content shared by all its contexts; each bunch is the
/// independent product of its contents' pmfs. Such systems admit an
/// identity coupling, hence are noncontextual under every plan.
pub fn random_product_system(rng: &mut ChaCha8Rng, shape: &SystemShape) -> System {
    let skeleton = random_system(rng, shape);
    let contents = skeleton.contents().to_vec();
    let pmfs: Vec<Vec<Rational>> = contents
        .iter()
        .map(|c| random_pmf(rng, c.space.len()))
        .collect();
    let contexts: Vec<ContextDecl> = (0..skeleton.context_count())
        .map(|ci| {
            let measures = skeleton.measures(ci).to_vec();
            let mut atoms: Vec<AtomDecl> = vec![AtomDecl {
                values: Vec::new(),
                prob: Rational::one(),
            }];
            for &qi in &measures {
                let mut next = Vec::new();
                for atom in &atoms {
                    for (li, p) in pmfs[qi].iter().enumerate() {
                        if p.is_zero() {
                            continue;
                        }
                        let mut values = atom.values.clone();
                        values.push(contents[qi].space.labels[li].clone());
                        next.push(AtomDecl {
                            values,
                            prob: atom.prob.clone() * p,
                        });
                    }
                }
                atoms = next;
            }
            ContextDecl {
                id: skeleton.context_id(ci).to_string(),
                measures: measures
                    .iter()
                    .map(|&qi| contents[qi].id.clone())
                    .collect(),
                atoms,
            }
        })
        .collect();
    System::validate(SystemSpec { contents, contexts }).expect("product spec is valid")
}

/// Consistently connected system: one pmf per content, contexts measuring
/// one or two contents. Two-content joints start as products and are then
/// stirred by marginal-preserving transport moves, so bunches are
/// correlated but every connection keeps identical distributions.
pub fn random_consistent_system(rng: &mut ChaCha8Rng, shape: &SystemShape) -> System {
    let n_q = rng.gen_range(1..=shape.max_contents);
    let contents: Vec<ContentDecl> = (0..n_q)
        .map(|qi| ContentDecl {
            id: format!("q{qi}"),
            space: space(shape.kind, rng.gen_range(2..=shape.max_labels)),
        })
        .collect();
    let pmfs: Vec<Vec<Rational>> = contents
        .iter()
        .map(|c| random_pmf(rng, c.space.len()))
        .collect();

    let n_c = rng.gen_range(1..=shape.max_contexts);
    let mut formats: Vec<Vec<usize>> = (0..n_c)
        .map(|_| {
            let arity = if n_q == 1 { 1 } else { rng.gen_range(1..=2) };
            let mut all: Vec<usize> = (0..n_q).collect();
            all.shuffle(rng);
            let mut f = all[..arity].to_vec();
            f.sort_unstable();
            f
        })
        .collect();
    for qi in 0..n_q {
        if !formats.iter().any(|f| f.contains(&qi)) {
            let candidates: Vec<usize> =
                (0..n_c).filter(|&ci| !formats[ci].contains(&qi)).collect();
            let ci = *candidates.choose(rng).expect("qi is in no context");
            formats[ci].push(qi);
            formats[ci].sort_unstable();
            formats[ci].truncate(2);
        }
    }

    let contexts: Vec<ContextDecl> = formats
        .iter()
        .enumerate()
        .map(|(ci, format)| match format[..] {
            [qi] => ContextDecl {
                id: format!("c{ci}"),
                measures: vec![contents[qi].id.clone()],
                atoms: pmfs[qi]
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.is_positive())
                    .map(|(li, p)| AtomDecl {
                        values: vec![contents[qi].space.labels[li].clone()],
                        prob: p.clone(),
                    })
                    .collect(),
            },
            [qa, qb] => {
                let (ka, kb) = (contents[qa].space.len(), contents[qb].space.len());
                let mut joint = vec![vec![Rational::zero(); kb]; ka];
                for (la, pa) in pmfs[qa].iter().enumerate() {
                    for (lb, pb) in pmfs[qb].iter().enumerate() {
                        joint[la][lb] = pa.clone() * pb;
                    }
                }
                for _ in 0..6 {
                    let (r1, r2) = (rng.gen_range(0..ka), rng.gen_range(0..ka));
                    let (c1, c2) = (rng.gen_range(0..kb), rng.gen_range(0..kb));
                    if r1 == r2 || c1 == c2 {
                        continue;
                    }
                    let cap = joint[r1][c2].clone().min(joint[r2][c1].clone());
                    if !cap.is_positive() {
                        continue;
                    }
                    let eps = cap * &Rational::new(rng.gen_range(0..=2), 2);
                    joint[r1][c1] += &eps;
                    joint[r2][c2] += &eps;
                    joint[r1][c2] -= &eps;
                    joint[r2][c1] -= &eps;
                }
                let labels_a = contents[qa].space.labels.clone();
                let labels_b = contents[qb].space.labels.clone();
                let mut atoms = Vec::new();
                for (la, row) in joint.iter().enumerate() {
                    for (lb, p) in row.iter().enumerate() {
                        if p.is_positive() {
                            atoms.push(AtomDecl {
                                values: vec![labels_a[la].clone(), labels_b[lb].clone()],
                                prob: p.clone(),
                            });
                        }
                    }
                }
                ContextDecl {
                    id: format!("c{ci}"),
                    measures: vec![contents[qa].id.clone(), contents[qb].id.clone()],
                    atoms,
                }
            }
            _ => unreachable!("consistent formats have one or two contents"),
        })
        .collect();

    System::validate(SystemSpec { contents, contexts }).expect("consistent spec is valid")
}

/// A single content measured in every context.
pub fn random_single_connection(
    rng: &mut ChaCha8Rng,
    kind: ValueKind,
    labels: usize,
    contexts: usize,
    max_support: usize,
) -> System {
    let content = ContentDecl {
        id: "q".into(),
        space: space(kind, labels),
    };
    let contexts: Vec<ContextDecl> = (0..contexts)
        .map(|ci| {
            let support = rng.gen_range(1..=max_support.min(labels));
            let pmf = random_pmf_with_support(rng, labels, support);
            ContextDecl {
                id: format!("c{ci}"),
                measures: vec!["q".into()],
                atoms: pmf
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.is_positive())
                    .map(|(li, p)| AtomDecl {
                        values: vec![content.space.labels[li].clone()],
                        prob: p.clone(),
                    })
                    .collect(),
            }
        })
        .collect();
    System::validate(SystemSpec {
        contents: vec![content],
        contexts,
    })
    .expect("connection spec is valid")
}

/// Keeps a random nonempty subset of the format.
pub fn random_subsystem(rng: &mut ChaCha8Rng, system: &System) -> System {
    let pairs: Vec<(String, String)> = system
        .format_pairs()
        .into_iter()
        .map(|(qi, ci)| {
            (
                system.contents()[qi].id.clone(),
                system.context_id(ci).to_string(),
            )
        })
        .collect();
    let mut keep: BTreeSet<(String, String)> = pairs
        .iter()
        .filter(|_| rng.gen_range(0..4) < 3)
        .cloned()
        .collect();
    if keep.is_empty() {
        keep.insert(pairs.choose(rng).expect("format is nonempty").clone());
    }
    system.subsystem(&keep).expect("kept pairs form a system")
}

/// A coarse-graining allowable by construction: ordered spaces are merged
/// along random cuts (monotone block map), categorical spaces through a
/// random surjection.
pub fn random_coarse_map(rng: &mut ChaCha8Rng, system: &System) -> CoarseGrainingMap {
    let mut per_content = BTreeMap::new();
    for content in system.contents() {
        let k = content.space.len();
        let k2 = rng.gen_range(1..=k);
        let assignment: Vec<usize> = match content.space.kind {
            ValueKind::Ordered => {
                // k2 blocks of consecutive labels.
                let mut cuts: Vec<usize> = (1..k).collect();
                cuts.shuffle(rng);
                let mut cuts: Vec<usize> = cuts[..k2 - 1].to_vec();
                cuts.sort_unstable();
                let mut block = 0;
                (0..k)
                    .map(|li| {
                        while block < cuts.len() && li >= cuts[block] {
                            block += 1;
                        }
                        block
                    })
                    .collect()
            }
            ValueKind::Categorical => {
                let mut order: Vec<usize> = (0..k).collect();
                order.shuffle(rng);
                let mut assignment = vec![0; k];
                for (rank, &li) in order.iter().enumerate() {
                    assignment[li] = if rank < k2 {
                        rank
                    } else {
                        rng.gen_range(0..k2)
                    };
                }
                assignment
            }
        };
        per_content.insert(
            content.id.clone(),
            ContentCoarseMap {
                target: space(content.space.kind, k2),
                map: content
                    .space
                    .labels
                    .iter()
                    .zip(&assignment)
                    .map(|(label, &t)| (label.clone(), t.to_string()))
                    .collect(),
            },
        );
    }
    CoarseGrainingMap { per_content }
}
