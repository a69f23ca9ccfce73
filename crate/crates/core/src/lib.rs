//! Exact numerical simulation of a qubit (Q) coupled to a bath (B) that is
//! itself strongly coupled to an environment (E).
//!
//! Both interactions are of the separable kind,
//!
//! ```text
//! H_QB = c Σ_pq γ_pq P_Qp ⊗ Π_Bq        H_BE = C Σ_ij κ_ij P_Bi ⊗ Π_Ej
//! ```
//!
//! with orthogonal projector families on each factor. When the B–E coupling
//! dominates (c/C ≪ 1) and the bath starts in a pointer state of `H_BE`, the
//! qubit's coherences survive for a time `τ = ħ/λ_max` set by the exact
//! energy shifts `λ` of the composite spectrum. This crate builds such
//! models, diagonalizes them exactly, extracts the eigenstate corrections
//! (ε, λ) relative to the unperturbed product basis, and evolves the full
//! state to measure decoherence observables directly.
//!
//! Module map:
//! - [`operators`]: dense complex linear algebra (tensor products, embeddings,
//!   partial trace, Hermitian eigensolver, spectral propagator).
//! - [`model`]: declarative construction and validation of tripartite models.
//! - [`spectral`]: exact perturbative bookkeeping (ε, λ, norm split, bounds).
//! - [`dynamics`]: time evolution, correlation amplitudes, fidelities.
//! - [`protocol`]: robust-state selection, plateau verification, ratio sweeps.

pub mod dynamics;
pub mod model;
pub mod numfmt;
pub mod operators;
pub mod protocol;
pub mod spectral;
pub mod tol;

pub use num_complex::Complex64;
