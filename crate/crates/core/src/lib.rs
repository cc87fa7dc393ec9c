//! Numerical toolkit for harmonic-analysis checks on the unit disc.
//!
//! The crate instantiates, at desk scale, the machinery behind boundedness of
//! harmonic conjugation on weighted Bergman spaces: polynomial models of
//! analytic/harmonic functions ([`series`]), weighted area quadrature
//! ([`quad`]), Bekollé–Bonami weights and maximal functions ([`weights`]),
//! the dyadic Carleson-square tree ([`carleson`]), the good-lambda engine
//! built on it ([`goodlambda`]), and empirical operator-constant estimation
//! ([`harness`]). The [`cli`] module drives everything from a config file
//! and writes CSV/JSON reports suitable for CI diffing.
//!
//! Every check is reproducible: random families are seeded, sample sets are
//! deterministic, and reductions use a fixed summation order.

pub mod carleson;
pub mod cli;
pub mod goodlambda;
pub mod harness;
pub mod quad;
pub mod series;
pub mod weights;

use num_complex::Complex64;
use thiserror::Error;

/// Errors shared across the numeric modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An integrand returned NaN or ±inf at a quadrature node.
    #[error("non-finite sample {value} at z = {at}")]
    NonFiniteSample { at: Complex64, value: f64 },

    /// A point or segment left the domain an operation requires.
    #[error("domain violation: {0}")]
    Domain(String),

    /// A weight integral kept growing under grid refinement; the weight is
    /// outside the integrable scope.
    #[error("divergent weight: {0}")]
    DivergentWeight(String),

    /// A dyadic square identifier with index out of range for its level.
    #[error("invalid square id ({level}, {index})")]
    InvalidSquare { level: u32, index: u64 },

    /// A square carries no measure, so measure ratios are undefined.
    #[error("zero-measure square ({level}, {index})")]
    ZeroMeasureSquare { level: u32, index: u64 },

    /// Tree construction requires the base point value to vanish.
    #[error("base point not zero: |f(0)| = {0}")]
    BasePointNotZero(f64),

    /// Norm-domination ratios are undefined when d vanishes but B does not.
    #[error("division by zero: {0}")]
    ZeroDenominator(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Pairwise (cascade) summation. Deterministic for a fixed slice order and
/// markedly more accurate than naive left-to-right accumulation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
