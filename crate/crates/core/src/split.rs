//! Split plans and split representations.
//!
//! A split plan assigns to each content a collection of dichotomizations of
//! its value space. The split representation replaces each variable by the
//! corresponding family of binary indicator variables, one per
//! dichotomization, measured in exactly the contexts that measured the
//! source variable. Contextuality of the source system is defined through
//! couplings of this binary system, so plans are the knob selecting which
//! events matter: all subsets (categorical), order cuts, vicinity-allowable
//! dichotomizations, or the small-cell (1-2) reduction.
//!
//! Dichotomizations are stored up to complementation; the canonical
//! representative is the cell containing the least label. Determination is
//! checked over the support union of each connection: values that never
//! occur in any bunch cannot be (and need not be) separated.

use crate::model::{ContentDecl, ContextDecl, ModelError, System, ValueKind, ValueSpace};
use crate::rational::Rational;
use crate::vspace::{full_mask, mask_bit, mask_elems, Mask, VSpace, VSpaceError};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanPolicy {
    /// Every dichotomization of every (categorical) content.
    Full,
    /// Order cuts at the support union of each (ordered) content.
    Cuts,
    /// Vicinity-allowable dichotomizations of each content.
    Allowable,
    /// Dichotomizations whose smaller cell has at most two elements.
    OneTwo,
    /// Hand-assembled plan.
    Custom,
}

impl PlanPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            PlanPolicy::Full => "full",
            PlanPolicy::Cuts => "cuts",
            PlanPolicy::Allowable => "allowable",
            PlanPolicy::OneTwo => "12",
            PlanPolicy::Custom => "custom",
        }
    }
}

/// The dichotomizations chosen for one content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentPlan {
    pub content: String,
    /// Ground size (label count) of the content's value space.
    pub ground: usize,
    /// Canonical cells, each containing label 0, sorted; proper and nonempty.
    pub subsets: Vec<Mask>,
}

impl ContentPlan {
    pub fn new(content: String, ground: usize, subsets: impl IntoIterator<Item = Mask>) -> Self {
        let full = full_mask(ground);
        let mut canon: Vec<Mask> = subsets
            .into_iter()
            .map(|m| {
                debug_assert!(m != 0 && m != full, "cells must be proper and nonempty");
                if m & 1 != 0 {
                    m
                } else {
                    full & !m
                }
            })
            .collect();
        canon.sort_unstable();
        canon.dedup();
        ContentPlan {
            content,
            ground,
            subsets: canon,
        }
    }

    /// Size of the smaller cell of subset `m`.
    fn min_cell(&self, m: Mask) -> usize {
        let a = m.count_ones() as usize;
        a.min(self.ground - a)
    }
}

/// A split plan: one entry per content of the system it was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub policy: PlanPolicy,
    pub entries: Vec<ContentPlan>,
}

impl SplitPlan {
    pub fn entry(&self, content: &str) -> Option<&ContentPlan> {
        self.entries.iter().find(|e| e.content == content)
    }

    /// Total number of split variables over all contents.
    pub fn split_count(&self) -> usize {
        self.entries.iter().map(|e| e.subsets.len()).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("content `{0}` is not categorical")]
    NotCategorical(String),
    #[error("content `{0}` is not ordered")]
    NotOrdered(String),
    #[error("plan has no entry for content `{0}`")]
    PlanIncomplete(String),
    #[error("plan does not determine content `{0}` on its support")]
    NotDetermining(String),
    #[error("content `{content}`: {source}")]
    VSpace {
        content: String,
        source: VSpaceError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// All dichotomizations of every content. Requires categorical contents.
pub fn plan_full_categorical(system: &System) -> Result<SplitPlan, SplitError> {
    let mut entries = Vec::new();
    for content in system.contents() {
        if content.space.kind != ValueKind::Categorical {
            return Err(SplitError::NotCategorical(content.id.clone()));
        }
        let k = content.space.len();
        let full = full_mask(k);
        // Canonical cells contain label 0: odd masks below the full set.
        let subsets = (1..full).step_by(2);
        entries.push(ContentPlan::new(content.id.clone(), k, subsets));
    }
    Ok(SplitPlan {
        policy: PlanPolicy::Full,
        entries,
    })
}

/// Cut dichotomizations at each support point of each connection except the
/// largest. Requires ordered contents; cells are closed below.
pub fn plan_cuts(system: &System) -> Result<SplitPlan, SplitError> {
    let mut entries = Vec::new();
    for (qi, content) in system.contents().iter().enumerate() {
        if content.space.kind != ValueKind::Ordered {
            return Err(SplitError::NotOrdered(content.id.clone()));
        }
        let support = system.support_union(qi);
        let mut subsets = Vec::new();
        for &cut in support.iter().rev().skip(1).rev() {
            // All labels up to and including the cut point.
            subsets.push(full_mask(cut + 1));
        }
        entries.push(ContentPlan::new(
            content.id.clone(),
            content.space.len(),
            subsets,
        ));
    }
    Ok(SplitPlan {
        policy: PlanPolicy::Cuts,
        entries,
    })
}

/// Vicinity-allowable dichotomizations of every content.
pub fn plan_allowable(system: &System) -> Result<SplitPlan, SplitError> {
    let mut entries = Vec::new();
    for content in system.contents() {
        let space = VSpace::from_value_space(&content.space).map_err(|source| {
            SplitError::VSpace {
                content: content.id.clone(),
                source,
            }
        })?;
        let dichotomies = space.allowable_dichotomizations().map_err(|source| {
            SplitError::VSpace {
                content: content.id.clone(),
                source,
            }
        })?;
        entries.push(ContentPlan::new(
            content.id.clone(),
            content.space.len(),
            dichotomies.into_iter().map(|d| d.part0),
        ));
    }
    Ok(SplitPlan {
        policy: PlanPolicy::Allowable,
        entries,
    })
}

/// Restricts a plan to dichotomizations whose smaller cell has at most two
/// elements.
pub fn reduce_12(plan: &SplitPlan) -> SplitPlan {
    SplitPlan {
        policy: PlanPolicy::OneTwo,
        entries: plan
            .entries
            .iter()
            .map(|e| ContentPlan {
                content: e.content.clone(),
                ground: e.ground,
                subsets: e
                    .subsets
                    .iter()
                    .copied()
                    .filter(|&m| e.min_cell(m) <= 2)
                    .collect(),
            })
            .collect(),
    }
}

/// Whether the plan's indicator values determine the content's value on the
/// support union of its connection.
pub fn determination_check(system: &System, plan: &SplitPlan, content: &str) -> Result<bool, SplitError> {
    let qi = system
        .content_idx(content)
        .ok_or_else(|| ModelError::UnknownContent(content.to_string()))?;
    let entry = plan
        .entry(content)
        .ok_or_else(|| SplitError::PlanIncomplete(content.to_string()))?;
    let support = system.support_union(qi);
    let mut patterns: Vec<Vec<bool>> = Vec::with_capacity(support.len());
    for &li in &support {
        let pattern: Vec<bool> = entry
            .subsets
            .iter()
            .map(|&m| m & mask_bit(li) != 0)
            .collect();
        if patterns.contains(&pattern) {
            return Ok(false);
        }
        patterns.push(pattern);
    }
    Ok(true)
}

/// One split content: which source content and which cell it indicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitOrigin {
    pub source: String,
    pub subset: Mask,
    pub subset_labels: Vec<String>,
}

/// The split representation: a binary system plus the origin of each of its
/// contents. Contexts whose every measured content has an empty plan entry
/// (possible only when every such variable is deterministic) are dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSystem {
    pub system: System,
    pub origins: Vec<SplitOrigin>,
}

/// Identifier of a split content: `source:{cell labels}`.
pub fn split_content_id(source: &str, space: &ValueSpace, subset: Mask) -> String {
    let labels: Vec<&str> = mask_elems(subset)
        .map(|i| space.labels[i].as_str())
        .collect();
    format!("{}:{{{}}}", source, labels.join(","))
}

/// Builds the split representation of `system` under `plan`.
pub fn split_system(system: &System, plan: &SplitPlan) -> Result<SplitSystem, SplitError> {
    for content in system.contents() {
        if plan.entry(&content.id).is_none() {
            return Err(SplitError::PlanIncomplete(content.id.clone()));
        }
        if !determination_check(system, plan, &content.id)? {
            return Err(SplitError::NotDetermining(content.id.clone()));
        }
    }

    let mut contents = Vec::new();
    let mut origins = Vec::new();
    // Split contents of each source content, in source order.
    let mut of_source: Vec<Vec<(Mask, String)>> = Vec::new();
    for content in system.contents() {
        let entry = plan.entry(&content.id).unwrap();
        let mut splits = Vec::new();
        for &subset in &entry.subsets {
            let id = split_content_id(&content.id, &content.space, subset);
            contents.push(ContentDecl {
                id: id.clone(),
                space: ValueSpace::categorical(vec!["0", "1"]),
            });
            origins.push(SplitOrigin {
                source: content.id.clone(),
                subset,
                subset_labels: mask_elems(subset)
                    .map(|i| content.space.labels[i].clone())
                    .collect(),
            });
            splits.push((subset, id));
        }
        of_source.push(splits);
    }

    let mut contexts = Vec::new();
    for ci in 0..system.context_count() {
        let measures: Vec<String> = system
            .measures(ci)
            .iter()
            .flat_map(|&qi| of_source[qi].iter().map(|(_, id)| id.clone()))
            .collect();
        if measures.is_empty() {
            continue;
        }
        let atoms = system
            .atoms(ci)
            .iter()
            .map(|(values, prob)| crate::model::AtomDecl {
                values: system
                    .measures(ci)
                    .iter()
                    .zip(values)
                    .flat_map(|(&qi, &li)| {
                        of_source[qi].iter().map(move |&(subset, _)| {
                            if subset & mask_bit(li as usize) != 0 {
                                "1".to_string()
                            } else {
                                "0".to_string()
                            }
                        })
                    })
                    .collect(),
                prob: prob.clone(),
            })
            .collect();
        contexts.push(ContextDecl {
            id: system.context_id(ci).to_string(),
            measures,
            atoms,
        });
    }

    let split = System::validate(crate::model::SystemSpec { contents, contexts })?;
    Ok(SplitSystem {
        system: split,
        origins,
    })
}

/// Probability that `content` falls in `subset` in context `ci`.
pub fn event_probability(system: &System, ci: usize, qi: usize, subset: Mask) -> Rational {
    system
        .marginal(ci, qi)
        .iter()
        .enumerate()
        .filter(|(li, _)| subset & mask_bit(*li) != 0)
        .map(|(_, p)| p)
        .sum()
}
