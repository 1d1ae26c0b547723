use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spinor is not normalized (|ψ|² = {norm_sqr})")]
    NonUnitSpinor { norm_sqr: f64 },

    #[error("triplet coefficient vector is not normalized (Σ|c|² = {norm_sqr})")]
    NonUnitCoefficients { norm_sqr: f64 },

    #[error("momentum transfer vanishes; its direction is undefined")]
    ZeroMomentumTransfer,

    #[error("the orbital (electron momentum) term of Q⊥ is not supported for motionless spins")]
    MomentumTermUnsupported,

    #[error("off-shell pair: |k1| = {k1}, |k2| = {k2}")]
    OffShell { k1: f64, k2: f64 },

    #[error("channel {channel} requires a triplet coefficient vector")]
    MissingCoefficients { channel: String },

    #[error("channel {channel} is not populated by the target state")]
    ChannelNotPopulated { channel: String },

    #[error("regime {regime} does not apply to a {target} target")]
    RegimeMismatch { regime: String, target: String },

    #[error("polarization undefined: vanishing cross-section (denominator {denominator:e})")]
    PolarizationUndefined { denominator: f64 },

    #[error("direction lies {angle:.4} rad from the beam axis, inside the excluded forward cone of {limit:.4} rad")]
    ForwardCone { angle: f64, limit: f64 },

    #[error("quadrature did not converge: coarse = {coarse:e}, refined = {fine:e}")]
    Convergence { coarse: f64, fine: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("temperature must be finite and non-negative, got {0}")]
    InvalidTemperature(f64),

    #[error("basis function is degenerate: k_A = k_B")]
    DegenerateBasis,

    #[error("two-body potential is not symmetric under x_A <-> x_B (deviation {deviation:e})")]
    AsymmetricPotential { deviation: f64 },

    #[error("lattice too large for desk-scale evaluation: {0} points per axis (max 8)")]
    LatticeTooLarge(usize),

    #[error("quadrature rule construction failed: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
