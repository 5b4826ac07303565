//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("cannot invert a quaternion with norm below tolerance (norm = {norm:e})")]
    ZeroInverse { norm: f64 },

    #[error("matrix is singular: |ad - bc| = {det_norm:e}")]
    SingularMatrix { det_norm: f64 },

    #[error("map sends the point to infinity (c*p + d vanished)")]
    MapsToInfinity,

    #[error("point has nonzero k component ({k:e}); it does not lie in U^3")]
    NotInUpperHalfSpace { k: f64 },

    #[error("series weight m = {m} rejected; the modified series requires m >= 2")]
    WeightTooSmall { m: u32 },

    #[error("pole of H encountered while summing word \"{word}\" (denominator norm {denom_norm:e})")]
    Pole { word: String, denom_norm: f64 },

    #[error("term for word \"{word}\" overflowed (norm {norm:e})")]
    Overflow { word: String, norm: f64 },

    #[error("denominator series vanished at the evaluation point (norm {norm:e}); the point is an equilibrium-pole")]
    EquilibriumPole { norm: f64 },

    #[error("point ({x}, {y}, {r}) was not reached by any word in the ball")]
    LocateFailed { x: f64, y: f64, r: f64 },

    #[error("initial point lies outside the domain (violation {violation:e} on face {face})")]
    OutsideDomain { face: String, violation: f64 },

    #[error("unknown side label \"{label}\"")]
    UnknownSide { label: String },

    #[error("invalid face pairing: {reason}")]
    InvalidPairing { reason: String },

    #[error("gluing matrix is not unimodular (det = {det})")]
    NotUnimodular { det: i64 },

    #[error("gluing interpolation is singular at t = {t} (det = {det:e})")]
    SingularInterpolation { t: f64, det: f64 },

    #[error("genus {genus} gluing is not supported (supported: 1 and 2)")]
    UnsupportedGenus { genus: u8 },

    #[error("equilibrium index is undefined: field vanishes on the probe circle (min norm {min_norm:e})")]
    IndexUndefined { min_norm: f64 },

    #[error("winding accumulation did not close to an integer (got {winding})")]
    WindingNotInteger { winding: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
