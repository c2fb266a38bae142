//! Vicinity spaces and linked sets.
//!
//! A vicinity space (a symmetric pre-topology) is a finite ground set
//! together with a family of nonempty *vicinities* covering every element.
//! A set is *linked* when it can be assembled from singletons and vicinities
//! by two closure rules: adjoining limit points, and uniting linked sets
//! that share a point. Linked sets are what a dichotomization has to respect
//! — both halves, and the ground set itself, must be linked — and they
//! likewise constrain which coarse-grainings are allowable.
//!
//! Ground sets are represented as bit masks. Full family enumeration is
//! capped at [`ENUM_CAP`] elements; membership tests beyond the cap close
//! over subsets of the queried set only, with an early exit.

use crate::model::{ValueKind, ValueSpace};
use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;
use thiserror::Error;

/// Subset of the ground set, one bit per element (declared label order).
pub type Mask = u64;

/// Cap for full linked-family enumeration.
pub const ENUM_CAP: usize = 16;

pub fn mask_bit(i: usize) -> Mask {
    1 << i
}

pub fn full_mask(k: usize) -> Mask {
    if k == 64 {
        !0
    } else {
        (1 << k) - 1
    }
}

/// Ascending element indices of a mask.
pub fn mask_elems(m: Mask) -> impl Iterator<Item = usize> {
    (0..64).filter(move |&i| m & (1 << i) != 0)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VSpaceError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("vicinities must be nonempty")]
    EmptyVicinity,
    #[error("label `{0}` belongs to no vicinity")]
    UncoveredLabel(String),
    #[error("ground set of {got} elements exceeds the enumeration cap of {cap}")]
    GroundTooLarge { got: usize, cap: usize },
    #[error("the ground set is not linked")]
    GroundNotLinked,
    #[error("coarse-graining is not surjective")]
    NotSurjective,
    #[error("map assigns {got} values for {expected} ground elements")]
    MapArity { got: usize, expected: usize },
    #[error("map value {0} is outside the target ground set")]
    MapRange(usize),
    #[error("precondition failed: {0} is not an allowable coarse-graining")]
    NotAllowable(&'static str),
}

/// All linked subsets of a ground set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkedFamily {
    ground: usize,
    members: BTreeSet<Mask>,
}

impl LinkedFamily {
    pub fn contains(&self, m: Mask) -> bool {
        self.members.contains(&m)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Mask> + '_ {
        self.members.iter().copied()
    }
}

/// A two-cell partition of the ground set. `part0` is the canonical
/// representative: the cell containing the least element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dichotomy {
    pub part0: Mask,
    pub part1: Mask,
}

impl Dichotomy {
    /// Canonicalizes an arbitrary proper nonempty cell of a k-element ground.
    pub fn new(cell: Mask, k: usize) -> Dichotomy {
        let comp = full_mask(k) & !cell;
        debug_assert!(cell != 0 && comp != 0);
        if cell & 1 != 0 {
            Dichotomy {
                part0: cell,
                part1: comp,
            }
        } else {
            Dichotomy {
                part0: comp,
                part1: cell,
            }
        }
    }

    /// Size of the smaller cell.
    pub fn min_cell(&self) -> usize {
        (self.part0.count_ones() as usize).min(self.part1.count_ones() as usize)
    }
}

/// A validated vicinity space.
#[derive(Debug, Clone)]
pub struct VSpace {
    labels: Vec<String>,
    vicinities: Vec<Mask>,
    family: OnceLock<Result<LinkedFamily, VSpaceError>>,
}

impl PartialEq for VSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.vicinities == other.vicinities
    }
}

impl VSpace {
    pub fn new(labels: Vec<String>, vicinities: Vec<Mask>) -> Result<VSpace, VSpaceError> {
        let k = labels.len();
        if k > crate::model::MAX_LABELS {
            return Err(VSpaceError::GroundTooLarge {
                got: k,
                cap: crate::model::MAX_LABELS,
            });
        }
        let full = full_mask(k);
        let mut covered: Mask = 0;
        let mut seen = BTreeSet::new();
        let mut canon = Vec::new();
        for &v in &vicinities {
            if v == 0 {
                return Err(VSpaceError::EmptyVicinity);
            }
            debug_assert_eq!(v & !full, 0, "vicinity outside ground");
            covered |= v;
            if seen.insert(v) {
                canon.push(v);
            }
        }
        if covered != full {
            let missing = mask_elems(full & !covered).next().unwrap();
            return Err(VSpaceError::UncoveredLabel(labels[missing].clone()));
        }
        canon.sort_unstable();
        Ok(VSpace {
            labels,
            vicinities: canon,
            family: OnceLock::new(),
        })
    }

    /// Builds the vicinity structure of a value space: explicit vicinities
    /// when declared, otherwise all order-intervals (ordered) or all
    /// nonempty subsets (categorical).
    pub fn from_value_space(space: &ValueSpace) -> Result<VSpace, VSpaceError> {
        let k = space.len();
        if let Some(explicit) = &space.vicinities {
            let mut masks = Vec::with_capacity(explicit.len());
            for v in explicit {
                let mut m: Mask = 0;
                for label in v {
                    let i = space
                        .label_index(label)
                        .ok_or_else(|| VSpaceError::UnknownLabel(label.clone()))?;
                    m |= mask_bit(i);
                }
                masks.push(m);
            }
            return VSpace::new(space.labels.clone(), masks);
        }
        match space.kind {
            ValueKind::Ordered => {
                let mut masks = Vec::with_capacity(k * (k + 1) / 2);
                for lo in 0..k {
                    let mut m: Mask = 0;
                    for hi in lo..k {
                        m |= mask_bit(hi);
                        masks.push(m);
                    }
                }
                VSpace::new(space.labels.clone(), masks)
            }
            ValueKind::Categorical => {
                if k > ENUM_CAP {
                    return Err(VSpaceError::GroundTooLarge {
                        got: k,
                        cap: ENUM_CAP,
                    });
                }
                let masks: Vec<Mask> = (1..=full_mask(k)).collect();
                VSpace::new(space.labels.clone(), masks)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vicinities(&self) -> &[Mask] {
        &self.vicinities
    }

    pub fn full(&self) -> Mask {
        full_mask(self.len())
    }

    pub fn mask_of(&self, labels: &[String]) -> Result<Mask, VSpaceError> {
        let mut m: Mask = 0;
        for l in labels {
            let i = self
                .labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| VSpaceError::UnknownLabel(l.clone()))?;
            m |= mask_bit(i);
        }
        Ok(m)
    }

    pub fn labels_of(&self, m: Mask) -> Vec<String> {
        mask_elems(m).map(|i| self.labels[i].clone()).collect()
    }

    /// Limit points of `f`: elements whose every vicinity meets `f` in a
    /// point other than the element itself.
    pub fn limit_points(&self, f: Mask) -> Mask {
        let mut out: Mask = 0;
        'elems: for x in 0..self.len() {
            let bx = mask_bit(x);
            for &v in &self.vicinities {
                if v & bx != 0 && v & f & !bx == 0 {
                    continue 'elems;
                }
            }
            out |= bx;
        }
        out
    }

    /// The closure step shared by enumeration and membership testing.
    /// `restrict` limits growth to submasks of the given set; `target`
    /// enables early exit.
    fn close(&self, restrict: Option<Mask>, target: Option<Mask>) -> HashSet<Mask> {
        let within = restrict.unwrap_or(self.full());
        let mut set: HashSet<Mask> = HashSet::new();
        let mut members: Vec<Mask> = Vec::new();
        let add = |m: Mask, set: &mut HashSet<Mask>, members: &mut Vec<Mask>| {
            if set.insert(m) {
                members.push(m);
            }
        };
        for x in mask_elems(within) {
            add(mask_bit(x), &mut set, &mut members);
        }
        for &v in &self.vicinities {
            if v & !within == 0 {
                add(v, &mut set, &mut members);
            }
        }
        if let Some(t) = target {
            if set.contains(&t) {
                return set;
            }
        }
        let mut i = 0;
        while i < members.len() {
            let f = members[i];
            let grow = self.limit_points(f) & !f & within;
            for x in mask_elems(grow) {
                add(f | mask_bit(x), &mut set, &mut members);
            }
            let mut j = 0;
            while j < members.len() {
                let g = members[j];
                if f & g != 0 && f | g != f && f | g != g {
                    add(f | g, &mut set, &mut members);
                }
                j += 1;
            }
            if let Some(t) = target {
                if set.contains(&t) {
                    return set;
                }
            }
            i += 1;
        }
        set
    }

    /// Enumerates every linked subset. Errors beyond [`ENUM_CAP`] elements.
    pub fn linked_family(&self) -> Result<&LinkedFamily, VSpaceError> {
        self.family
            .get_or_init(|| {
                let k = self.len();
                if k > ENUM_CAP {
                    return Err(VSpaceError::GroundTooLarge { got: k, cap: ENUM_CAP });
                }
                // Fast path: when every nonempty subset is a vicinity the
                // closure is the whole power set.
                let members: BTreeSet<Mask> =
                    if self.vicinities.len() == full_mask(k) as usize && k > 0 {
                        (1..=self.full()).collect()
                    } else {
                        self.close(None, None).into_iter().collect()
                    };
                Ok(LinkedFamily { ground: k, members })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Whether `f` is linked. Uses the enumerated family when available;
    /// beyond the cap, closes over subsets of `f` with an early exit.
    pub fn is_vlinked(&self, f: Mask) -> bool {
        debug_assert_eq!(f & !self.full(), 0, "subset outside ground");
        if f == 0 {
            return false;
        }
        if self.len() <= ENUM_CAP {
            return self.linked_family().map(|fam| fam.contains(f)).unwrap_or(false);
        }
        self.close(Some(f), Some(f)).contains(&f)
    }

    /// All allowable dichotomizations: two-cell partitions with both cells
    /// linked. Errors if the ground set itself is not linked.
    pub fn allowable_dichotomizations(&self) -> Result<Vec<Dichotomy>, VSpaceError> {
        let family = self.linked_family()?;
        if !family.contains(self.full()) {
            return Err(VSpaceError::GroundNotLinked);
        }
        let mut out = Vec::new();
        // Canonical cell contains element 0; skip the full set.
        let full = self.full();
        let mut cell: Mask = 1;
        while cell < full {
            if cell & 1 != 0 {
                let comp = full & !cell;
                if family.contains(cell) && family.contains(comp) {
                    out.push(Dichotomy {
                        part0: cell,
                        part1: comp,
                    });
                }
            }
            cell += 2; // only odd masks contain element 0
        }
        Ok(out)
    }

    /// Whether the vicinities generate the full power set (equivalently,
    /// distinct elements have distinct vicinity memberships). Reported as a
    /// warning by callers, never an error.
    pub fn is_ordinary(&self) -> bool {
        let k = self.len();
        for x in 0..k {
            for y in x + 1..k {
                let (bx, by) = (mask_bit(x), mask_bit(y));
                if self
                    .vicinities
                    .iter()
                    .all(|&v| (v & bx != 0) == (v & by != 0))
                {
                    return false;
                }
            }
        }
        true
    }
}

/// Whether the total surjection `map` (source element index → target element
/// index) is an allowable coarse-graining: images and preimages of linked
/// sets are linked.
pub fn is_allowable_coarse_graining(
    src: &VSpace,
    dst: &VSpace,
    map: &[usize],
) -> Result<bool, VSpaceError> {
    if map.len() != src.len() {
        return Err(VSpaceError::MapArity {
            got: map.len(),
            expected: src.len(),
        });
    }
    let mut onto: Mask = 0;
    for &t in map {
        if t >= dst.len() {
            return Err(VSpaceError::MapRange(t));
        }
        onto |= mask_bit(t);
    }
    if onto != dst.full() {
        return Err(VSpaceError::NotSurjective);
    }
    let src_family = src.linked_family()?;
    let dst_family = dst.linked_family()?;
    let image = |m: Mask| -> Mask {
        mask_elems(m).fold(0, |acc, i| acc | mask_bit(map[i]))
    };
    let preimage = |m: Mask| -> Mask {
        (0..src.len())
            .filter(|&i| m & mask_bit(map[i]) != 0)
            .fold(0, |acc, i| acc | mask_bit(i))
    };
    for f in src_family.iter() {
        if !dst_family.contains(image(f)) {
            return Ok(false);
        }
    }
    for g in dst_family.iter() {
        let p = preimage(g);
        if p != 0 && !src_family.contains(p) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Property-test harness: given allowable `f: src → mid` and `g: mid → dst`,
/// checks that the composition is allowable too.
pub fn compose_check(
    src: &VSpace,
    mid: &VSpace,
    dst: &VSpace,
    f: &[usize],
    g: &[usize],
) -> Result<bool, VSpaceError> {
    if !is_allowable_coarse_graining(src, mid, f)? {
        return Err(VSpaceError::NotAllowable("f"));
    }
    if !is_allowable_coarse_graining(mid, dst, g)? {
        return Err(VSpaceError::NotAllowable("g"));
    }
    let composed: Vec<usize> = f.iter().map(|&i| g[i]).collect();
    is_allowable_coarse_graining(src, dst, &composed)
}
