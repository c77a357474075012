//! Crate-wide error type.
//!
//! Every fallible operation returns [`Result`]. Variants carry enough data
//! to report the offending value, not just the failure class.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// `h + h''` dips below zero somewhere: boundary curvature is not
    /// strictly positive, so the body is rejected at construction.
    #[error("support function is not strictly convex: min(h + h'') = {rho_min:.6e} <= 0")]
    NotConvexPlus { rho_min: f64 },

    /// `h` dips below zero somewhere: the origin is not an interior point.
    #[error("origin not interior to the body: min h = {h_min:.6e} <= 0")]
    OriginOutside { h_min: f64 },

    /// Direction-dependent quantities are undefined for the zero vector.
    #[error("zero vector has no direction")]
    ZeroVector,

    /// A requested value lies outside an attainable open range.
    #[error("value {value} outside attainable range ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    /// Curve parameters must be strictly increasing.
    #[error("curve parameters are not strictly increasing")]
    NonMonotoneParam,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("point ({x}, {t}) outside field domain")]
    OutOfDomain { x: f64, t: f64 },

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// A test field's support must keep at least one quadrature cell of
    /// margin to the domain boundary.
    #[error("test field support too close to the domain boundary")]
    SupportViolation,

    #[error("volume variation vanishes; curvature quotient undefined")]
    ZeroVolumeVariation,

    #[error("leaf start ({x}, {t}) outside field domain")]
    StartOutOfDomain { x: f64, t: f64 },

    /// A probe leaf started slightly above the base leaf crossed it, which
    /// indicates the integration step is too coarse for the field.
    #[error("integration step too large: probe ordering failed at xi = {xi}")]
    StepTooLarge { xi: f64 },

    #[error("leaf ordering violated at xi = {xi}")]
    OrderingViolation { xi: f64 },

    #[error("test function support leaves the chart image")]
    SupportOutsideChart,

    /// Slope reconstruction drove the profile outside the attainable slope
    /// range; the surface cannot continue as a graph past this abscissa.
    #[error("slope reconstruction left the attainable range at xi = {xi}")]
    RangeEscape { xi: f64 },

    #[error("leaves cross at xi = {xi}")]
    LeafCrossing { xi: f64 },

    #[error("leaf family does not cover the lattice point ({x}, {t})")]
    CoverageGap { x: f64, t: f64 },

    #[error("curve is not unit speed: |velocity| deviates from 1 by {dev:.3e}")]
    NotUnitSpeed { dev: f64 },

    #[error("vector is not unit: |v| = {norm}")]
    NotUnit { norm: f64 },

    #[error("sample grids do not match: {0}")]
    GridMismatch(String),

    #[error("invalid body description: {0}")]
    BadBodySpec(String),

    #[error("malformed data at line {line}: {msg}")]
    CsvFormat { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
