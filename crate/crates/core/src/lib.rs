//! Decides whether a finite system of random variables is contextual.
//!
//! A *system* is a family of random variables indexed by what is measured
//! (the *content*) and the conditions under which it is measured (the
//! *context*). Variables sharing a context are jointly distributed (a
//! *bunch*); variables sharing a content across contexts (a *connection*)
//! are stochastically unrelated until coupled. The system is noncontextual
//! when some joint distribution over all variables reproduces every bunch
//! while coupling every connection of its binary split variables maximally
//! — pairwise maximal couplings for every dichotomization in the chosen
//! split plan. That feasibility question is decided exactly, in rational
//! arithmetic, as a linear program.
//!
//! Modules, bottom up:
//!
//! - [`rational`]: arbitrary-precision rational probabilities.
//! - [`model`]: systems, bunches, connections, and structural edits
//!   (coarse-graining, subsystems, deterministic variables).
//! - [`vspace`]: vicinity spaces, linked sets, allowable dichotomizations
//!   and coarse-grainings.
//! - [`split`]: split plans (full categorical, cuts, allowable, 1-2) and
//!   the split representation of a system.
//! - [`coupling`]: explicit couplings — staircase multimaximal binary
//!   couplings, quantile couplings, nested-events couplings — and the
//!   checks that certify them.
//! - [`lp`]: exact phase-1/phase-2 simplex with Bland's rule.
//! - [`decide`]: the feasibility formulation and the public verdicts.
//! - [`batch`]: data-parallel batch decisions (sequential fallback when the
//!   `parallel` feature is disabled).

pub mod batch;
pub mod coupling;
pub mod decide;
#[cfg(feature = "gen")]
pub mod gen;
pub mod lp;
pub mod model;
pub mod rational;
pub mod split;
pub mod vspace;

pub use decide::{decide_contextuality, decide_traditional, DecideOptions, Status, Verdict};
pub use model::{System, SystemSpec};
pub use rational::Rational;
pub use split::SplitPlan;
