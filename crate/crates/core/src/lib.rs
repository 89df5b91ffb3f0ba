//! Kinematical groups of `(n+1)`-dimensional spacetime.
//!
//! Any group of linear spacetime transformations that contains the rotations,
//! reflections and time reversal, and no other transformations that keep
//! space and time separate, is one of five groups determined by a parameter
//! `σ ∈ R ∪ {∞}`:
//!
//! | σ      | group      |
//! |--------|------------|
//! | σ > 0  | Lorentz    |
//! | σ = 0  | Galilei    |
//! | σ < 0  | O(n+1)     |
//! | σ = ∞  | Carroll    |
//! | none   | Aristotle  |
//!
//! This crate builds those groups, classifies Lie algebra generator sets into
//! the five cases, and implements the normalizer test and the Cartan
//! decomposition used to pin down the group from its Lie algebra.
//!
//! Coordinates are ordered space first, time last.

pub mod affine;
pub mod classify;
pub mod error;
pub mod groups;
pub mod isotypic;
pub mod matcore;
pub mod verify;

use std::fmt;
use std::str::FromStr;

pub use classify::{CaseLabel, ClassificationResult, Outcome, Sigma};
pub use error::{Error, Result};
pub use groups::{CartanFactors, Group};
pub use matcore::{BlockForm, Metric, MetricSign, SquareMatrix};

/// Tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Deliberate defects that can be switched on in the verification suite to
/// confirm it detects broken implementations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// The metric adjoint uses `gamma_∓` instead of `gamma_±`.
    DaggerSignFlip,
    /// Boost parts are read as finite `σ` whenever `b` is nonzero, dropping
    /// the scale-relative cutoff that maps tiny `b` to `σ = ∞`.
    NoSigmaThreshold,
    /// The classifier ignores symmetric traceless components.
    SkipTracelessCheck,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::DaggerSignFlip,
        Mutation::NoSigmaThreshold,
        Mutation::SkipTracelessCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Mutation::DaggerSignFlip => "dagger-sign-flip",
            Mutation::NoSigmaThreshold => "no-sigma-threshold",
            Mutation::SkipTracelessCheck => "skip-m2-check",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown mutation {s:?}")))
    }
}
