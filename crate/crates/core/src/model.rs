//! Systems of random variables.
//!
//! A system assigns to each *context* a jointly distributed *bunch* of
//! variables, one per measured *content*. The same content measured in
//! different contexts forms a *connection*; nothing ties a connection
//! together until it is coupled. This module holds the validated
//! representation plus the structural operations everything else builds on:
//! marginals and connections, consistency checks, coarse-graining, and
//! subsystem extraction.

use crate::rational::Rational;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Hard cap on labels per value space (masks downstream are `u64`).
pub const MAX_LABELS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// No structure beyond distinctness; every subset is an event of interest.
    Categorical,
    /// Labels are totally ordered by their declared order.
    Ordered,
}

/// The value space of a content: ordered, distinct labels plus a kind.
///
/// `vicinities`, when present, override the vicinity structure derived from
/// the kind (all order-intervals for ordered spaces, all nonempty subsets
/// for categorical ones).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValueSpace {
    pub labels: Vec<String>,
    pub kind: ValueKind,
    pub vicinities: Option<Vec<Vec<String>>>,
}

impl ValueSpace {
    pub fn categorical<S: Into<String>>(labels: Vec<S>) -> Self {
        ValueSpace {
            labels: labels.into_iter().map(Into::into).collect(),
            kind: ValueKind::Categorical,
            vicinities: None,
        }
    }

    pub fn ordered<S: Into<String>>(labels: Vec<S>) -> Self {
        ValueSpace {
            labels: labels.into_iter().map(Into::into).collect(),
            kind: ValueKind::Ordered,
            vicinities: None,
        }
    }

    pub fn with_vicinities(mut self, vicinities: Vec<Vec<&str>>) -> Self {
        self.vicinities = Some(
            vicinities
                .into_iter()
                .map(|v| v.into_iter().map(str::to_string).collect())
                .collect(),
        );
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A declared content: identifier plus value space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentDecl {
    pub id: String,
    pub space: ValueSpace,
}

/// One atom of a bunch distribution: values aligned with the context's
/// measured contents, plus its probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomDecl {
    pub values: Vec<String>,
    pub prob: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextDecl {
    pub id: String,
    pub measures: Vec<String>,
    pub atoms: Vec<AtomDecl>,
}

/// Raw, unvalidated system description.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SystemSpec {
    pub contents: Vec<ContentDecl>,
    pub contexts: Vec<ContextDecl>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("context `{context}`: probabilities sum to {total}, not 1")]
    NonUnitMass { context: String, total: String },
    #[error("context `{context}`: negative probability {prob}")]
    NegativeProbability { context: String, prob: String },
    #[error("content `{content}`: unknown label `{label}`")]
    UnknownLabel { content: String, label: String },
    #[error("unknown content `{0}`")]
    UnknownContent(String),
    #[error("unknown context `{0}`")]
    UnknownContext(String),
    #[error("duplicate content id `{0}`")]
    DuplicateContent(String),
    #[error("duplicate context id `{0}`")]
    DuplicateContext(String),
    #[error("content `{content}`: duplicate label `{label}`")]
    DuplicateLabel { content: String, label: String },
    #[error("content `{content}`: {len} labels exceeds the cap of {max}", max = MAX_LABELS)]
    TooManyLabels { content: String, len: usize },
    #[error("context `{context}`: duplicate atom {values:?}")]
    DuplicateAtom { context: String, values: Vec<String> },
    #[error("context `{context}`: atom has {got} values for {expected} measured contents")]
    ArityMismatch {
        context: String,
        got: usize,
        expected: usize,
    },
    #[error("empty format: the system measures nothing")]
    EmptyFormat,
    #[error("context `{context}` measures `{content}` more than once")]
    RepeatedMeasure { context: String, content: String },
    #[error("content `{content}`: map is not surjective onto the target labels")]
    NotSurjective { content: String },
    #[error("content `{content}` is not measured in context `{context}`")]
    NotMeasured { content: String, context: String },
    #[error("content `{content}` is already measured in context `{context}`")]
    AlreadyMeasured { content: String, context: String },
}

#[derive(Debug, Clone)]
struct ContextInfo {
    id: String,
    /// Content indices, ascending (canonical order).
    measures: Vec<usize>,
    /// Canonical bunch: positive atoms only, values as label indices aligned
    /// with `measures`, sorted by value tuple.
    atoms: Vec<(Vec<u8>, Rational)>,
}

/// A validated system. Construction canonicalizes bunches (zero-probability
/// atoms dropped, atoms sorted, measures in content order), so equal systems
/// compare equal regardless of how their specs were written.
#[derive(Debug, Clone)]
pub struct System {
    contents: Vec<ContentDecl>,
    contexts: Vec<ContextInfo>,
    content_index: BTreeMap<String, usize>,
    context_index: BTreeMap<String, usize>,
    /// Per content: contexts measuring it, ascending.
    measured_in: Vec<Vec<usize>>,
}

impl PartialEq for System {
    fn eq(&self, other: &Self) -> bool {
        self.contents == other.contents
            && self.contexts.len() == other.contexts.len()
            && self
                .contexts
                .iter()
                .zip(&other.contexts)
                .all(|(a, b)| a.id == b.id && a.measures == b.measures && a.atoms == b.atoms)
    }
}

impl Eq for System {}

/// Per-context marginal distributions of one content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionView {
    pub content: String,
    pub labels: Vec<String>,
    /// `(context id, dense pmf over labels)` in context declaration order.
    pub per_context: Vec<(String, Vec<Rational>)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent,
    /// Marginals of `content` differ between the two contexts.
    Inconsistent {
        content: String,
        context_a: String,
        context_b: String,
    },
}

impl Consistency {
    pub fn is_consistent(&self) -> bool {
        matches!(self, Consistency::Consistent)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrongConsistency {
    Strong,
    /// Joint distributions over the shared contents differ between the pair.
    NotStrong { context_a: String, context_b: String },
}

impl StrongConsistency {
    pub fn is_strong(&self) -> bool {
        matches!(self, StrongConsistency::Strong)
    }
}

/// Per-content relabeling onto a new value space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentCoarseMap {
    pub target: ValueSpace,
    /// Total map from source labels onto target labels.
    pub map: BTreeMap<String, String>,
}

/// Coarse-graining of a system: surjective relabelings for a subset of
/// contents; untouched contents pass through unchanged.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoarseGrainingMap {
    pub per_content: BTreeMap<String, ContentCoarseMap>,
}

impl System {
    pub fn validate(spec: SystemSpec) -> Result<System, ModelError> {
        let mut content_index = BTreeMap::new();
        for (i, c) in spec.contents.iter().enumerate() {
            if content_index.insert(c.id.clone(), i).is_some() {
                return Err(ModelError::DuplicateContent(c.id.clone()));
            }
            if c.space.len() > MAX_LABELS {
                return Err(ModelError::TooManyLabels {
                    content: c.id.clone(),
                    len: c.space.len(),
                });
            }
            let mut seen = BTreeSet::new();
            for l in &c.space.labels {
                if !seen.insert(l) {
                    return Err(ModelError::DuplicateLabel {
                        content: c.id.clone(),
                        label: l.clone(),
                    });
                }
            }
            if let Some(vicinities) = &c.space.vicinities {
                for v in vicinities {
                    for l in v {
                        if c.space.label_index(l).is_none() {
                            return Err(ModelError::UnknownLabel {
                                content: c.id.clone(),
                                label: l.clone(),
                            });
                        }
                    }
                }
            }
        }

        if spec.contexts.is_empty() {
            return Err(ModelError::EmptyFormat);
        }

        let mut context_index = BTreeMap::new();
        let mut contexts = Vec::with_capacity(spec.contexts.len());
        let mut measured_in = vec![Vec::new(); spec.contents.len()];

        for (ci, ctx) in spec.contexts.iter().enumerate() {
            if context_index.insert(ctx.id.clone(), ci).is_some() {
                return Err(ModelError::DuplicateContext(ctx.id.clone()));
            }
            if ctx.measures.is_empty() {
                return Err(ModelError::EmptyFormat);
            }
            let mut measures = Vec::with_capacity(ctx.measures.len());
            for m in &ctx.measures {
                let qi = *content_index
                    .get(m)
                    .ok_or_else(|| ModelError::UnknownContent(m.clone()))?;
                if measures.contains(&qi) {
                    return Err(ModelError::RepeatedMeasure {
                        context: ctx.id.clone(),
                        content: m.clone(),
                    });
                }
                measures.push(qi);
            }
            // Canonical order: by content index; remember how to permute atoms.
            let mut order: Vec<usize> = (0..measures.len()).collect();
            order.sort_by_key(|&slot| measures[slot]);
            let measures_sorted: Vec<usize> = order.iter().map(|&slot| measures[slot]).collect();

            let mut atoms: Vec<(Vec<u8>, Rational)> = Vec::with_capacity(ctx.atoms.len());
            let mut total = Rational::zero();
            for atom in &ctx.atoms {
                if atom.values.len() != measures.len() {
                    return Err(ModelError::ArityMismatch {
                        context: ctx.id.clone(),
                        got: atom.values.len(),
                        expected: measures.len(),
                    });
                }
                if atom.prob.is_negative() {
                    return Err(ModelError::NegativeProbability {
                        context: ctx.id.clone(),
                        prob: atom.prob.to_string(),
                    });
                }
                let mut values = Vec::with_capacity(measures.len());
                for &slot in &order {
                    let qi = measures[slot];
                    let label = &atom.values[slot];
                    let li = spec.contents[qi].space.label_index(label).ok_or_else(|| {
                        ModelError::UnknownLabel {
                            content: spec.contents[qi].id.clone(),
                            label: label.clone(),
                        }
                    })?;
                    values.push(li as u8);
                }
                if atoms.iter().any(|(v, _)| *v == values) {
                    return Err(ModelError::DuplicateAtom {
                        context: ctx.id.clone(),
                        values: atom.values.clone(),
                    });
                }
                total += &atom.prob;
                if !atom.prob.is_zero() {
                    atoms.push((values, atom.prob.clone()));
                }
            }
            if !total.is_one() {
                return Err(ModelError::NonUnitMass {
                    context: ctx.id.clone(),
                    total: total.to_string(),
                });
            }
            atoms.sort_by(|a, b| a.0.cmp(&b.0));

            for &qi in &measures_sorted {
                measured_in[qi].push(ci);
            }
            contexts.push(ContextInfo {
                id: ctx.id.clone(),
                measures: measures_sorted,
                atoms,
            });
        }

        Ok(System {
            contents: spec.contents,
            contexts,
            content_index,
            context_index,
            measured_in,
        })
    }

    // ------------------------------------------------------------------
    // Accessors
    // ------------------------------------------------------------------

    pub fn contents(&self) -> &[ContentDecl] {
        &self.contents
    }

    pub fn content_count(&self) -> usize {
        self.contents.len()
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn content_idx(&self, id: &str) -> Option<usize> {
        self.content_index.get(id).copied()
    }

    pub fn context_idx(&self, id: &str) -> Option<usize> {
        self.context_index.get(id).copied()
    }

    pub fn context_id(&self, ci: usize) -> &str {
        &self.contexts[ci].id
    }

    /// Content indices measured in context `ci`, ascending.
    pub fn measures(&self, ci: usize) -> &[usize] {
        &self.contexts[ci].measures
    }

    /// Canonical bunch of context `ci`: positive atoms, label indices aligned
    /// with `measures(ci)`, sorted.
    pub fn atoms(&self, ci: usize) -> &[(Vec<u8>, Rational)] {
        &self.contexts[ci].atoms
    }

    /// Contexts measuring content `qi`, ascending.
    pub fn measured_in(&self, qi: usize) -> &[usize] {
        &self.measured_in[qi]
    }

    pub fn is_measured(&self, qi: usize, ci: usize) -> bool {
        self.contexts[ci].measures.contains(&qi)
    }

    /// All `(content, context)` index pairs of the format, context-major.
    pub fn format_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for (ci, ctx) in self.contexts.iter().enumerate() {
            for &qi in &ctx.measures {
                pairs.push((qi, ci));
            }
        }
        pairs
    }

    /// Reconstructs the canonical spec (useful for persistence and equality
    /// with hand-built systems).
    pub fn spec(&self) -> SystemSpec {
        SystemSpec {
            contents: self.contents.clone(),
            contexts: self
                .contexts
                .iter()
                .map(|ctx| ContextDecl {
                    id: ctx.id.clone(),
                    measures: ctx
                        .measures
                        .iter()
                        .map(|&qi| self.contents[qi].id.clone())
                        .collect(),
                    atoms: ctx
                        .atoms
                        .iter()
                        .map(|(values, prob)| AtomDecl {
                            values: values
                                .iter()
                                .zip(&ctx.measures)
                                .map(|(&li, &qi)| self.contents[qi].space.labels[li as usize].clone())
                                .collect(),
                            prob: prob.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    // ------------------------------------------------------------------
    // Marginals and connections
    // ------------------------------------------------------------------

    /// Dense marginal pmf of content `qi` in context `ci` over its labels.
    pub fn marginal(&self, ci: usize, qi: usize) -> Vec<Rational> {
        let ctx = &self.contexts[ci];
        let slot = ctx
            .measures
            .iter()
            .position(|&m| m == qi)
            .expect("content not measured in context");
        let mut pmf = vec![Rational::zero(); self.contents[qi].space.len()];
        for (values, prob) in &ctx.atoms {
            pmf[values[slot] as usize] += prob;
        }
        pmf
    }

    /// Joint distribution of a subset of measured contents (ascending
    /// indices) in context `ci`, as a map from value tuples to probabilities.
    pub fn joint_marginal(&self, ci: usize, subset: &[usize]) -> BTreeMap<Vec<u8>, Rational> {
        let ctx = &self.contexts[ci];
        let slots: Vec<usize> = subset
            .iter()
            .map(|&qi| {
                ctx.measures
                    .iter()
                    .position(|&m| m == qi)
                    .expect("content not measured in context")
            })
            .collect();
        let mut joint: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        for (values, prob) in &ctx.atoms {
            let key: Vec<u8> = slots.iter().map(|&s| values[s]).collect();
            *joint.entry(key).or_insert_with(Rational::zero) += prob;
        }
        joint
    }

    /// The connection of a content: its marginal in every context measuring it.
    pub fn connection(&self, content: &str) -> Result<ConnectionView, ModelError> {
        let qi = self
            .content_idx(content)
            .ok_or_else(|| ModelError::UnknownContent(content.to_string()))?;
        Ok(ConnectionView {
            content: content.to_string(),
            labels: self.contents[qi].space.labels.clone(),
            per_context: self.measured_in[qi]
                .iter()
                .map(|&ci| (self.contexts[ci].id.clone(), self.marginal(ci, qi)))
                .collect(),
        })
    }

    /// Label indices carrying positive probability in at least one context,
    /// ascending. Empty for contents measured nowhere.
    pub fn support_union(&self, qi: usize) -> Vec<usize> {
        let k = self.contents[qi].space.len();
        let mut seen = vec![false; k];
        for &ci in &self.measured_in[qi] {
            for (li, p) in self.marginal(ci, qi).iter().enumerate() {
                if !p.is_zero() {
                    seen[li] = true;
                }
            }
        }
        (0..k).filter(|&li| seen[li]).collect()
    }

    /// Every connection has identical marginals across its contexts.
    pub fn is_consistently_connected(&self) -> Consistency {
        for (qi, contexts) in self.measured_in.iter().enumerate() {
            if contexts.len() < 2 {
                continue;
            }
            let first = self.marginal(contexts[0], qi);
            for &ci in &contexts[1..] {
                if self.marginal(ci, qi) != first {
                    return Consistency::Inconsistent {
                        content: self.contents[qi].id.clone(),
                        context_a: self.contexts[contexts[0]].id.clone(),
                        context_b: self.contexts[ci].id.clone(),
                    };
                }
            }
        }
        Consistency::Consistent
    }

    /// Every pair of contexts agrees on the joint distribution of the
    /// contents they share (vacuous for pairs sharing nothing).
    pub fn is_strongly_consistent(&self) -> StrongConsistency {
        for a in 0..self.contexts.len() {
            for b in a + 1..self.contexts.len() {
                let shared: Vec<usize> = self.contexts[a]
                    .measures
                    .iter()
                    .copied()
                    .filter(|qi| self.contexts[b].measures.contains(qi))
                    .collect();
                if shared.is_empty() {
                    continue;
                }
                if self.joint_marginal(a, &shared) != self.joint_marginal(b, &shared) {
                    return StrongConsistency::NotStrong {
                        context_a: self.contexts[a].id.clone(),
                        context_b: self.contexts[b].id.clone(),
                    };
                }
            }
        }
        StrongConsistency::Strong
    }

    // ------------------------------------------------------------------
    // Structural edits
    // ------------------------------------------------------------------

    /// Applies per-content surjective relabelings; colliding atoms merge by
    /// summing probabilities, so total mass is preserved exactly.
    pub fn coarse_grain(&self, map: &CoarseGrainingMap) -> Result<System, ModelError> {
        for id in map.per_content.keys() {
            if self.content_idx(id).is_none() {
                return Err(ModelError::UnknownContent(id.clone()));
            }
        }
        let mut spec = self.spec();
        for content in &mut spec.contents {
            let Some(cm) = map.per_content.get(&content.id) else {
                continue;
            };
            // Total on source labels, into target labels, onto all of them.
            let mut hit = vec![false; cm.target.len()];
            for label in &content.space.labels {
                let image = cm.map.get(label).ok_or_else(|| ModelError::UnknownLabel {
                    content: content.id.clone(),
                    label: label.clone(),
                })?;
                let ti = cm.target.label_index(image).ok_or_else(|| {
                    ModelError::UnknownLabel {
                        content: content.id.clone(),
                        label: image.clone(),
                    }
                })?;
                hit[ti] = true;
            }
            for (src, _) in &cm.map {
                if content.space.label_index(src).is_none() {
                    return Err(ModelError::UnknownLabel {
                        content: content.id.clone(),
                        label: src.clone(),
                    });
                }
            }
            if !hit.iter().all(|&h| h) {
                return Err(ModelError::NotSurjective {
                    content: content.id.clone(),
                });
            }
            content.space = cm.target.clone();
        }
        for ctx in &mut spec.contexts {
            let mut merged: BTreeMap<Vec<String>, Rational> = BTreeMap::new();
            for atom in &ctx.atoms {
                let values: Vec<String> = atom
                    .values
                    .iter()
                    .zip(&ctx.measures)
                    .map(|(v, q)| match map.per_content.get(q) {
                        Some(cm) => cm.map[v].clone(),
                        None => v.clone(),
                    })
                    .collect();
                *merged.entry(values).or_insert_with(Rational::zero) += &atom.prob;
            }
            ctx.atoms = merged
                .into_iter()
                .map(|(values, prob)| AtomDecl { values, prob })
                .collect();
        }
        System::validate(spec)
    }

    /// Removes the variable of `content` in `context`, marginalizing the
    /// bunch. Contexts left measuring nothing are removed; contents left
    /// measured nowhere are pruned from the declarations.
    pub fn drop_variable(&self, content: &str, context: &str) -> Result<System, ModelError> {
        let qi = self
            .content_idx(content)
            .ok_or_else(|| ModelError::UnknownContent(content.to_string()))?;
        let ci = self
            .context_idx(context)
            .ok_or_else(|| ModelError::UnknownContext(context.to_string()))?;
        if !self.is_measured(qi, ci) {
            return Err(ModelError::NotMeasured {
                content: content.to_string(),
                context: context.to_string(),
            });
        }
        let mut keep = BTreeSet::new();
        for (q, c) in self.format_pairs() {
            if (q, c) != (qi, ci) {
                keep.insert((self.contents[q].id.clone(), self.contexts[c].id.clone()));
            }
        }
        self.subsystem(&keep)
    }

    /// Inserts the deterministic variable `content = value` into `context`.
    pub fn add_deterministic(
        &self,
        content: &str,
        context: &str,
        value: &str,
    ) -> Result<System, ModelError> {
        let qi = self
            .content_idx(content)
            .ok_or_else(|| ModelError::UnknownContent(content.to_string()))?;
        let ci = self
            .context_idx(context)
            .ok_or_else(|| ModelError::UnknownContext(context.to_string()))?;
        if self.is_measured(qi, ci) {
            return Err(ModelError::AlreadyMeasured {
                content: content.to_string(),
                context: context.to_string(),
            });
        }
        if self.contents[qi].space.label_index(value).is_none() {
            return Err(ModelError::UnknownLabel {
                content: content.to_string(),
                label: value.to_string(),
            });
        }
        let mut spec = self.spec();
        let ctx = &mut spec.contexts[ci];
        ctx.measures.push(content.to_string());
        for atom in &mut ctx.atoms {
            atom.values.push(value.to_string());
        }
        System::validate(spec)
    }

    /// Restricts the system to the given `(content id, context id)` pairs.
    /// Bunches are marginalized to the kept contents; contexts keeping
    /// nothing disappear, as do content declarations measured nowhere.
    pub fn subsystem(
        &self,
        keep: &BTreeSet<(String, String)>,
    ) -> Result<System, ModelError> {
        if keep.is_empty() {
            return Err(ModelError::EmptyFormat);
        }
        for (q, c) in keep {
            let qi = self
                .content_idx(q)
                .ok_or_else(|| ModelError::UnknownContent(q.clone()))?;
            let ci = self
                .context_idx(c)
                .ok_or_else(|| ModelError::UnknownContext(c.clone()))?;
            if !self.is_measured(qi, ci) {
                return Err(ModelError::NotMeasured {
                    content: q.clone(),
                    context: c.clone(),
                });
            }
        }
        let mut contexts = Vec::new();
        let mut used_contents: BTreeSet<usize> = BTreeSet::new();
        for (ci, ctx) in self.contexts.iter().enumerate() {
            let kept: Vec<usize> = ctx
                .measures
                .iter()
                .copied()
                .filter(|&qi| {
                    keep.contains(&(self.contents[qi].id.clone(), ctx.id.clone()))
                })
                .collect();
            if kept.is_empty() {
                continue;
            }
            used_contents.extend(kept.iter().copied());
            let joint = self.joint_marginal(ci, &kept);
            contexts.push(ContextDecl {
                id: ctx.id.clone(),
                measures: kept.iter().map(|&qi| self.contents[qi].id.clone()).collect(),
                atoms: joint
                    .into_iter()
                    .map(|(values, prob)| AtomDecl {
                        values: values
                            .iter()
                            .zip(&kept)
                            .map(|(&li, &qi)| self.contents[qi].space.labels[li as usize].clone())
                            .collect(),
                        prob,
                    })
                    .collect(),
            });
        }
        let contents = self
            .contents
            .iter()
            .enumerate()
            .filter(|(qi, _)| used_contents.contains(qi))
            .map(|(_, c)| c.clone())
            .collect();
        System::validate(SystemSpec { contents, contexts })
    }
}

pub mod fixtures {
    //! Ready-made example systems, the same ones shipped in `corpus/`.
    //! Handy for tests, demos, and exploring the decision procedures.

    use super::*;
    use crate::rational::rat;

    pub fn context(id: &str, measures: &[&str], atoms: &[(&[&str], Rational)]) -> ContextDecl {
        ContextDecl {
            id: id.to_string(),
            measures: measures.iter().map(|s| s.to_string()).collect(),
            atoms: atoms
                .iter()
                .map(|(values, prob)| AtomDecl {
                    values: values.iter().map(|s| s.to_string()).collect(),
                    prob: prob.clone(),
                })
                .collect(),
        }
    }

    /// Two binary contents, two contexts, perfectly correlated in one and
    /// perfectly anticorrelated in the other. Consistently connected and
    /// contextual.
    pub fn pr_box() -> System {
        let spec = SystemSpec {
            contents: vec![
                ContentDecl {
                    id: "1".into(),
                    space: ValueSpace::categorical(vec!["0", "1"]),
                },
                ContentDecl {
                    id: "2".into(),
                    space: ValueSpace::categorical(vec!["0", "1"]),
                },
            ],
            contexts: vec![
                context(
                    "1",
                    &["1", "2"],
                    &[(&["1", "1"], rat(1, 2)), (&["0", "0"], rat(1, 2))],
                ),
                context(
                    "2",
                    &["1", "2"],
                    &[(&["1", "0"], rat(1, 2)), (&["0", "1"], rat(1, 2))],
                ),
            ],
        };
        System::validate(spec).unwrap()
    }

    /// The four-context extension of the PR box: two extra contexts pin both
    /// contents to 1 and to 0 respectively.
    pub fn pr_box_extended() -> System {
        let mut spec = pr_box().spec();
        spec.contexts.push(context(
            "3",
            &["1", "2"],
            &[(&["1", "1"], rat(1, 1))],
        ));
        spec.contexts.push(context(
            "4",
            &["1", "2"],
            &[(&["0", "0"], rat(1, 1))],
        ));
        System::validate(spec).unwrap()
    }

    /// Two 4-valued contents whose per-context supports are disjoint:
    /// context 1 sees values {1,3}, context 2 sees {2,4}. Every coupling
    /// trivially maximizes the equality probabilities, yet the parity
    /// coarse-graining lands on [`pr_box`].
    pub fn four_valued_pair(kind: ValueKind) -> System {
        let space = match kind {
            ValueKind::Categorical => ValueSpace::categorical(vec!["1", "2", "3", "4"]),
            ValueKind::Ordered => ValueSpace::ordered(vec!["1", "2", "3", "4"]),
        };
        let spec = SystemSpec {
            contents: vec![
                ContentDecl {
                    id: "1".into(),
                    space: space.clone(),
                },
                ContentDecl {
                    id: "2".into(),
                    space,
                },
            ],
            contexts: vec![
                context(
                    "1",
                    &["1", "2"],
                    &[(&["1", "1"], rat(1, 2)), (&["3", "3"], rat(1, 2))],
                ),
                context(
                    "2",
                    &["1", "2"],
                    &[(&["2", "4"], rat(1, 2)), (&["4", "2"], rat(1, 2))],
                ),
            ],
        };
        System::validate(spec).unwrap()
    }

    /// One content with values {1,2,3} measured in three contexts:
    /// pmfs (1/2,1/2,0), (0,1/2,1/2), (1/2,0,1/2).
    pub fn single_content_three_values(kind: ValueKind) -> System {
        let space = match kind {
            ValueKind::Categorical => ValueSpace::categorical(vec!["1", "2", "3"]),
            ValueKind::Ordered => ValueSpace::ordered(vec!["1", "2", "3"]),
        };
        let spec = SystemSpec {
            contents: vec![ContentDecl {
                id: "q".into(),
                space,
            }],
            contexts: vec![
                context(
                    "1",
                    &["q"],
                    &[(&["1"], rat(1, 2)), (&["2"], rat(1, 2))],
                ),
                context(
                    "2",
                    &["q"],
                    &[(&["2"], rat(1, 2)), (&["3"], rat(1, 2))],
                ),
                context(
                    "3",
                    &["q"],
                    &[(&["1"], rat(1, 2)), (&["3"], rat(1, 2))],
                ),
            ],
        };
        System::validate(spec).unwrap()
    }

    /// One content with values {a,b,c,d} measured in three contexts:
    /// pmfs (7,1,1,1)/10, (1,5,2,2)/10, (2,2,3,3)/10.
    pub fn single_content_four_values() -> System {
        let spec = SystemSpec {
            contents: vec![ContentDecl {
                id: "q".into(),
                space: ValueSpace::categorical(vec!["a", "b", "c", "d"]),
            }],
            contexts: vec![
                context(
                    "1",
                    &["q"],
                    &[
                        (&["a"], rat(7, 10)),
                        (&["b"], rat(1, 10)),
                        (&["c"], rat(1, 10)),
                        (&["d"], rat(1, 10)),
                    ],
                ),
                context(
                    "2",
                    &["q"],
                    &[
                        (&["a"], rat(1, 10)),
                        (&["b"], rat(5, 10)),
                        (&["c"], rat(2, 10)),
                        (&["d"], rat(2, 10)),
                    ],
                ),
                context(
                    "3",
                    &["q"],
                    &[
                        (&["a"], rat(2, 10)),
                        (&["b"], rat(2, 10)),
                        (&["c"], rat(3, 10)),
                        (&["d"], rat(3, 10)),
                    ],
                ),
            ],
        };
        System::validate(spec).unwrap()
    }

    /// The coarse-graining sending values 1,2 to 1 and 3,4 to 0 on both
    /// contents of [`four_valued_pair`]; the image is [`pr_box`].
    pub fn pr_box_coarse_map() -> CoarseGrainingMap {
        let target = ValueSpace::categorical(vec!["0", "1"]);
        let mut map = BTreeMap::new();
        map.insert("1".to_string(), "1".to_string());
        map.insert("2".to_string(), "1".to_string());
        map.insert("3".to_string(), "0".to_string());
        map.insert("4".to_string(), "0".to_string());
        let mut per_content = BTreeMap::new();
        for id in ["1", "2"] {
            per_content.insert(
                id.to_string(),
                ContentCoarseMap {
                    target: target.clone(),
                    map: map.clone(),
                },
            );
        }
        CoarseGrainingMap { per_content }
    }

    /// The five-point cross vicinity space: four peripheral points around a
    /// center; vicinities are the eight adjacent pairs (antipodal peripheral
    /// points are not adjacent).
    pub fn cross_space() -> ValueSpace {
        ValueSpace::categorical(vec!["center", "left", "right", "up", "down"]).with_vicinities(
            vec![
                vec!["left", "up"],
                vec!["left", "center"],
                vec!["left", "down"],
                vec!["right", "up"],
                vec!["right", "center"],
                vec!["right", "down"],
                vec!["up", "center"],
                vec!["down", "center"],
            ],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::rational::rat;

    fn decl(id: &str, labels: Vec<&str>) -> ContentDecl {
        ContentDecl {
            id: id.to_string(),
            space: ValueSpace::categorical(labels),
        }
    }

    #[test]
    fn validates_the_pr_box() {
        let sys = pr_box();
        assert_eq!(sys.content_count(), 2);
        assert_eq!(sys.context_count(), 2);
        assert_eq!(sys.format_pairs().len(), 4);
    }

    #[test]
    fn rejects_non_unit_mass() {
        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![context("c", &["q"], &[(&["0"], rat(1, 2))])],
        };
        assert_eq!(
            System::validate(spec),
            Err(ModelError::NonUnitMass {
                context: "c".into(),
                total: "1/2".into()
            })
        );
    }

    #[test]
    fn rejects_unknown_labels_and_duplicate_atoms() {
        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![context("c", &["q"], &[(&["2"], rat(1, 1))])],
        };
        assert!(matches!(
            System::validate(spec),
            Err(ModelError::UnknownLabel { .. })
        ));

        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![context(
                "c",
                &["q"],
                &[(&["0"], rat(1, 2)), (&["0"], rat(1, 2))],
            )],
        };
        assert!(matches!(
            System::validate(spec),
            Err(ModelError::DuplicateAtom { .. })
        ));
    }

    #[test]
    fn rejects_empty_formats() {
        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![],
        };
        assert_eq!(System::validate(spec), Err(ModelError::EmptyFormat));

        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![context("c", &[], &[])],
        };
        assert_eq!(System::validate(spec), Err(ModelError::EmptyFormat));
    }

    #[test]
    fn zero_probability_atoms_are_dropped() {
        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![context(
                "c",
                &["q"],
                &[(&["0"], rat(0, 1)), (&["1"], rat(1, 1))],
            )],
        };
        let sys = System::validate(spec).unwrap();
        assert_eq!(sys.atoms(0).len(), 1);
    }

    #[test]
    fn negative_probabilities_are_rejected() {
        let spec = SystemSpec {
            contents: vec![decl("q", vec!["0", "1"])],
            contexts: vec![context(
                "c",
                &["q"],
                &[(&["0"], rat(-1, 2)), (&["1"], rat(3, 2))],
            )],
        };
        assert!(matches!(
            System::validate(spec),
            Err(ModelError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn connection_reports_all_marginals() {
        let sys = pr_box();
        let conn = sys.connection("1").unwrap();
        assert_eq!(conn.per_context.len(), 2);
        for (_, pmf) in &conn.per_context {
            assert_eq!(pmf, &vec![rat(1, 2), rat(1, 2)]);
        }
        assert!(sys.connection("nope").is_err());
    }

    #[test]
    fn pr_box_is_consistently_connected_but_not_strong() {
        let sys = pr_box();
        assert!(sys.is_consistently_connected().is_consistent());
        assert_eq!(
            sys.is_strongly_consistent(),
            StrongConsistency::NotStrong {
                context_a: "1".into(),
                context_b: "2".into()
            }
        );
    }

    #[test]
    fn four_valued_pair_is_inconsistently_connected() {
        let sys = four_valued_pair(ValueKind::Categorical);
        assert_eq!(
            sys.is_consistently_connected(),
            Consistency::Inconsistent {
                content: "1".into(),
                context_a: "1".into(),
                context_b: "2".into()
            }
        );
    }

    #[test]
    fn identical_bunches_are_strongly_consistent() {
        let spec = SystemSpec {
            contents: vec![decl("1", vec!["0", "1"]), decl("2", vec!["0", "1"])],
            contexts: vec![
                context(
                    "1",
                    &["1", "2"],
                    &[(&["1", "1"], rat(1, 2)), (&["0", "0"], rat(1, 2))],
                ),
                context(
                    "2",
                    &["1", "2"],
                    &[(&["1", "1"], rat(1, 2)), (&["0", "0"], rat(1, 2))],
                ),
            ],
        };
        let sys = System::validate(spec).unwrap();
        assert!(sys.is_strongly_consistent().is_strong());
        assert!(sys.is_consistently_connected().is_consistent());
    }

    #[test]
    fn disjoint_contexts_are_vacuously_strong() {
        let spec = SystemSpec {
            contents: vec![decl("1", vec!["0", "1"]), decl("2", vec!["0", "1"])],
            contexts: vec![
                context("1", &["1"], &[(&["0"], rat(1, 1))]),
                context("2", &["2"], &[(&["1"], rat(1, 1))]),
            ],
        };
        let sys = System::validate(spec).unwrap();
        assert!(sys.is_strongly_consistent().is_strong());
    }

    #[test]
    fn coarse_graining_four_valued_pair_yields_the_pr_box() {
        let sys = four_valued_pair(ValueKind::Categorical);
        let coarse = sys.coarse_grain(&pr_box_coarse_map()).unwrap();
        assert_eq!(coarse, pr_box());
    }

    #[test]
    fn coarse_graining_merges_colliding_atoms() {
        let spec = SystemSpec {
            contents: vec![decl("q", vec!["a", "b"])],
            contexts: vec![context(
                "c",
                &["q"],
                &[(&["a"], rat(1, 3)), (&["b"], rat(2, 3))],
            )],
        };
        let sys = System::validate(spec).unwrap();
        let mut per_content = BTreeMap::new();
        per_content.insert(
            "q".to_string(),
            ContentCoarseMap {
                target: ValueSpace::categorical(vec!["x"]),
                map: [("a", "x"), ("b", "x")]
                    .into_iter()
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .collect(),
            },
        );
        let coarse = sys
            .coarse_grain(&CoarseGrainingMap { per_content })
            .unwrap();
        assert_eq!(coarse.atoms(0), &[(vec![0], rat(1, 1))]);
    }

    #[test]
    fn non_surjective_coarse_graining_is_rejected() {
        let sys = four_valued_pair(ValueKind::Categorical);
        let mut map = pr_box_coarse_map();
        for cm in map.per_content.values_mut() {
            cm.map.insert("3".into(), "1".into());
            cm.map.insert("4".into(), "1".into());
        }
        assert!(matches!(
            sys.coarse_grain(&map),
            Err(ModelError::NotSurjective { .. })
        ));
    }

    #[test]
    fn injective_coarse_graining_is_invertible() {
        let sys = pr_box();
        let target = ValueSpace::categorical(vec!["x", "y"]);
        let mut per_content = BTreeMap::new();
        for id in ["1", "2"] {
            per_content.insert(
                id.to_string(),
                ContentCoarseMap {
                    target: target.clone(),
                    map: [("0", "x"), ("1", "y")]
                        .into_iter()
                        .map(|(a, b)| (a.to_string(), b.to_string()))
                        .collect(),
                },
            );
        }
        let renamed = sys.coarse_grain(&CoarseGrainingMap { per_content }).unwrap();
        let mut back = BTreeMap::new();
        for id in ["1", "2"] {
            back.insert(
                id.to_string(),
                ContentCoarseMap {
                    target: ValueSpace::categorical(vec!["0", "1"]),
                    map: [("x", "0"), ("y", "1")]
                        .into_iter()
                        .map(|(a, b)| (a.to_string(), b.to_string()))
                        .collect(),
                },
            );
        }
        let restored = renamed.coarse_grain(&CoarseGrainingMap { per_content: back }).unwrap();
        assert_eq!(restored, sys);
    }

    #[test]
    fn extended_pr_box_restricts_to_the_pr_box() {
        let big = pr_box_extended();
        let keep: BTreeSet<(String, String)> = ["1", "2"]
            .iter()
            .flat_map(|q| ["1", "2"].iter().map(move |c| (q.to_string(), c.to_string())))
            .collect();
        assert_eq!(big.subsystem(&keep).unwrap(), pr_box());
    }

    #[test]
    fn dropping_both_extra_contexts_restores_the_pr_box() {
        let big = pr_box_extended();
        let step = big.drop_variable("1", "3").unwrap();
        let step = step.drop_variable("2", "3").unwrap();
        let step = step.drop_variable("1", "4").unwrap();
        let step = step.drop_variable("2", "4").unwrap();
        assert_eq!(step, pr_box());
    }

    #[test]
    fn add_then_drop_round_trips() {
        let sys = pr_box();
        let spec = {
            let mut s = sys.spec();
            s.contexts.push(context("3", &["1"], &[(&["1"], rat(1, 1))]));
            s
        };
        let sys3 = System::validate(spec).unwrap();
        let added = sys3.add_deterministic("2", "3", "0").unwrap();
        assert!(added.is_measured(1, 2));
        assert_eq!(added.drop_variable("2", "3").unwrap(), sys3);
        assert!(matches!(
            sys3.add_deterministic("1", "3", "1"),
            Err(ModelError::AlreadyMeasured { .. })
        ));
        assert!(matches!(
            sys3.drop_variable("2", "3"),
            Err(ModelError::NotMeasured { .. })
        ));
    }

    #[test]
    fn subsystem_composes() {
        let big = pr_box_extended();
        let a: BTreeSet<(String, String)> = big
            .format_pairs()
            .into_iter()
            .filter(|&(_, c)| c != 3)
            .map(|(q, c)| {
                (
                    big.contents()[q].id.clone(),
                    big.context_id(c).to_string(),
                )
            })
            .collect();
        let b: BTreeSet<(String, String)> = ["1", "2"]
            .iter()
            .flat_map(|q| ["1", "2"].iter().map(move |c| (q.to_string(), c.to_string())))
            .collect();
        let via_a = big.subsystem(&a).unwrap().subsystem(&b).unwrap();
        let direct = big.subsystem(&b).unwrap();
        assert_eq!(via_a, direct);
    }

    #[test]
    fn empty_subsystem_is_rejected() {
        let sys = pr_box();
        assert_eq!(
            sys.subsystem(&BTreeSet::new()),
            Err(ModelError::EmptyFormat)
        );
    }

    #[test]
    fn single_variable_subsystem() {
        let sys = pr_box();
        let keep: BTreeSet<(String, String)> =
            [("1".to_string(), "1".to_string())].into_iter().collect();
        let small = sys.subsystem(&keep).unwrap();
        assert_eq!(small.content_count(), 1);
        assert_eq!(small.context_count(), 1);
        assert_eq!(small.atoms(0).len(), 2);
    }

    #[test]
    fn support_union_spans_contexts() {
        let sys = single_content_three_values(ValueKind::Categorical);
        assert_eq!(sys.support_union(0), vec![0, 1, 2]);
        let pair = four_valued_pair(ValueKind::Categorical);
        assert_eq!(pair.support_union(0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn measures_are_canonicalized_by_content_order() {
        let spec = SystemSpec {
            contents: vec![decl("1", vec!["0", "1"]), decl("2", vec!["0", "1"])],
            contexts: vec![context(
                "c",
                &["2", "1"],
                &[(&["0", "1"], rat(1, 2)), (&["1", "0"], rat(1, 2))],
            )],
        };
        let sys = System::validate(spec).unwrap();
        assert_eq!(sys.measures(0), &[0, 1]);
        // Atom values were permuted alongside: content 1 first.
        assert_eq!(
            sys.atoms(0),
            &[
                (vec![0, 1], rat(1, 2)),
                (vec![1, 0], rat(1, 2)),
            ]
        );
    }

    #[test]
    fn mass_is_preserved_by_edits() {
        let sys = four_valued_pair(ValueKind::Categorical);
        let coarse = sys.coarse_grain(&pr_box_coarse_map()).unwrap();
        for ci in 0..coarse.context_count() {
            let total: Rational = coarse.atoms(ci).iter().map(|(_, p)| p).sum();
            assert!(total.is_one());
        }
        let dropped = sys.drop_variable("1", "1").unwrap();
        for ci in 0..dropped.context_count() {
            let total: Rational = dropped.atoms(ci).iter().map(|(_, p)| p).sum();
            assert!(total.is_one());
        }
    }
}
