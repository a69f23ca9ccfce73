//! Numerical tolerances used across the crate.
//!
//! Every threshold is named here so that tests and library code agree on a
//! single value. Tolerances fall in three bands: machine-precision checks on
//! exactly-representable constructions (1e-12), eigensolver-limited checks
//! (1e-10), and analysis identities that accumulate a few rounding steps
//! (1e-9).

/// Elementwise Hermiticity requirement, max|A - A†|.
pub const HERMITICITY: f64 = 1e-12;

/// Projector family checks: idempotence, orthogonality, completeness.
pub const PROJECTOR: f64 = 1e-12;

/// State normalization, |‖ψ‖ - 1|.
pub const STATE_NORM: f64 = 1e-12;

/// Unitarity of propagators, max|U†U - I|.
pub const UNITARITY: f64 = 1e-10;

/// Eigendecomposition reconstruction, ‖VΛV† - H‖_max relative to ‖H‖_max.
pub const EIG_RECONSTRUCTION: f64 = 1e-10;

/// Trace preservation of the partial trace.
pub const TRACE: f64 = 1e-10;

/// Unperturbed energies closer than this form one degenerate cluster.
pub const ENERGY_CLUSTER: f64 = 1e-9;

/// Overlap gap below which a spectral assignment is flagged ambiguous.
pub const OVERLAP_GAP: f64 = 1e-6;

/// λ_max at or below this is treated as zero (infinite plateau).
pub const LAMBDA_FLOOR: f64 = 1e-15;

/// Amplitude products below this make a correlation amplitude undefined.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

/// Slack allowed on the perturbation identities (norm split, λ bound).
pub const IDENTITY_SLACK: f64 = 1e-9;
