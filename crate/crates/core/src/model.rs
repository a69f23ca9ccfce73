//! Declarative construction and validation of tripartite models.
//!
//! A model is two separable interactions sharing the bath factor: `h_qb`
//! couples the qubit to the bath through a rotated projector family on B,
//! and `h_be` couples the bath to the environment through the standard
//! pointer family on B. The angle between the two B families is the only
//! nontrivial geometric freedom; at θ = 0 the interactions commute and all
//! eigenstate corrections vanish.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{
    self, embed, tensor_product, ComplexOperator, OperatorError, StateVector,
};
use crate::tol;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid model: {field}: {message}")]
    Validation { field: String, message: String },
    #[error("projector family '{family}' violates {invariant}: deviation {deviation:.3e}")]
    InvalidFamily { family: String, invariant: String, deviation: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

fn validation(field: &str, message: impl Into<String>) -> ModelError {
    ModelError::Validation { field: field.to_string(), message: message.into() }
}

/// A complete family of mutually orthogonal projectors on one factor space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFamily {
    space_dim: usize,
    projectors: Vec<ComplexOperator>,
    labels: Vec<usize>,
}

impl ProjectorFamily {
    /// Validate and wrap an explicit list of projectors.
    pub fn new(
        name: &str,
        space_dim: usize,
        projectors: Vec<ComplexOperator>,
    ) -> Result<Self, ModelError> {
        let labels = (0..projectors.len()).collect();
        let family = Self { space_dim, projectors, labels };
        family.validate(name)?;
        Ok(family)
    }

    /// Rank-1 projectors onto the computational basis.
    pub fn standard_basis(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|k| StateVector::basis(dim, k).density())
            .collect();
        Self { space_dim: dim, projectors, labels: (0..dim).collect() }
    }

    /// Rank-1 projectors onto the θ-rotated basis. For dim 2 this is the
    /// plane rotation by θ; larger spaces compose Givens rotations on
    /// adjacent index pairs, all with the same angle.
    pub fn rotated_basis(dim: usize, theta: f64) -> Result<Self, ModelError> {
        if !theta.is_finite() {
            return Err(validation("theta", "rotation angle must be finite"));
        }
        let rotation = rotation_matrix(dim, theta);
        let projectors = (0..dim)
            .map(|k| {
                let col = StateVector::raw((0..dim).map(|i| rotation.get(i, k)).collect());
                col.density()
            })
            .collect();
        Ok(Self { space_dim: dim, projectors, labels: (0..dim).collect() })
    }

    pub fn validate(&self, name: &str) -> Result<(), ModelError> {
        let invalid = |invariant: &str, deviation: f64| ModelError::InvalidFamily {
            family: name.to_string(),
            invariant: invariant.to_string(),
            deviation,
        };
        let mut sum = ComplexOperator::zeros(self.space_dim);
        for (a, p) in self.projectors.iter().enumerate() {
            if p.dim() != self.space_dim {
                return Err(validation(
                    name,
                    format!("projector {a} has dimension {} on a space of {}", p.dim(), self.space_dim),
                ));
            }
            let herm = p.hermiticity_deviation();
            if herm > tol::PROJECTOR {
                return Err(invalid("hermiticity", herm));
            }
            let idem = p.matmul(p).sub(p).max_abs();
            if idem > tol::PROJECTOR {
                return Err(invalid("idempotence", idem));
            }
            for q in &self.projectors[a + 1..] {
                let cross = p.matmul(q).max_abs();
                if cross > tol::PROJECTOR {
                    return Err(invalid("orthogonality", cross));
                }
            }
            sum = sum.add(p);
        }
        let complete = sum.sub(&ComplexOperator::identity(self.space_dim)).max_abs();
        if complete > tol::PROJECTOR {
            return Err(invalid("completeness", complete));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn projector(&self, a: usize) -> &ComplexOperator {
        &self.projectors[a]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Extract the basis vector of a rank-1 projector, with a deterministic
    /// gauge (largest component real positive).
    pub fn basis_vector(&self, a: usize) -> Result<StateVector, ModelError> {
        let p = &self.projectors[a];
        let tr = p.trace().re;
        if (tr - 1.0).abs() > 1e-9 {
            return Err(validation(
                "projector",
                format!("projector {a} has rank {tr:.3}; a rank-1 family is required here"),
            ));
        }
        let mut best = 0usize;
        let mut best_diag = -1.0;
        for j in 0..p.dim() {
            let d = p.get(j, j).re;
            if d > best_diag {
                best_diag = d;
                best = j;
            }
        }
        let scale = best_diag.sqrt();
        let mut amps: Vec<Complex64> =
            (0..p.dim()).map(|i| p.get(i, best) / scale).collect();
        let mut pivot = 0usize;
        let mut pivot_norm = 0.0;
        for (i, z) in amps.iter().enumerate() {
            if z.norm() > pivot_norm {
                pivot_norm = z.norm();
                pivot = i;
            }
        }
        let phase = amps[pivot].conj() / pivot_norm;
        for z in &mut amps {
            *z *= phase;
        }
        Ok(StateVector::normalized(amps)?)
    }
}

fn rotation_matrix(dim: usize, theta: f64) -> ComplexOperator {
    let mut r = ComplexOperator::identity(dim);
    for k in 0..dim.saturating_sub(1) {
        let mut g = ComplexOperator::identity(dim);
        let (c, s) = (theta.cos(), theta.sin());
        g.set(k, k, Complex64::new(c, 0.0));
        g.set(k, k + 1, Complex64::new(-s, 0.0));
        g.set(k + 1, k, Complex64::new(s, 0.0));
        g.set(k + 1, k + 1, Complex64::new(c, 0.0));
        r = r.matmul(&g);
    }
    r
}

/// The two projector families on the bath space: the family entering `h_qb`
/// (θ-rotated) and the pointer family entering `h_be` (standard basis).
pub fn rotated_bath_families(
    d_b: usize,
    theta: f64,
) -> Result<(ProjectorFamily, ProjectorFamily), ModelError> {
    let qb_side = ProjectorFamily::rotated_basis(d_b, theta)?;
    let be_side = ProjectorFamily::standard_basis(d_b);
    Ok((qb_side, be_side))
}

/// One separable interaction: coupling · Σ `coeff[a][b]` · P_a ⊗ Π_b.
#[derive(Debug, Clone)]
pub struct SeparableInteraction {
    pub coupling: f64,
    /// Real coefficient matrix, shape (left family size, right family size).
    pub coeffs: Vec<Vec<f64>>,
    pub left: ProjectorFamily,
    pub right: ProjectorFamily,
}

impl SeparableInteraction {
    pub fn validate(&self, name: &str) -> Result<(), ModelError> {
        self.left.validate(&format!("{name}.left"))?;
        self.right.validate(&format!("{name}.right"))?;
        if self.coeffs.len() != self.left.len()
            || self.coeffs.iter().any(|row| row.len() != self.right.len())
        {
            return Err(validation(
                &format!("{name}.coeffs"),
                format!(
                    "coeffs shape must be ({}, {}), found ({}, {:?})",
                    self.left.len(),
                    self.right.len(),
                    self.coeffs.len(),
                    self.coeffs.iter().map(|r| r.len()).collect::<Vec<_>>()
                ),
            ));
        }
        Ok(())
    }

    /// Assemble the interaction operator on the left ⊗ right space.
    pub fn assemble(&self) -> Result<ComplexOperator, ModelError> {
        self.validate("interaction")?;
        let dim = self.left.space_dim() * self.right.space_dim();
        let mut out = ComplexOperator::zeros(dim);
        for (a, row) in self.coeffs.iter().enumerate() {
            for (b, &coeff) in row.iter().enumerate() {
                if coeff == 0.0 {
                    continue;
                }
                let term = tensor_product(self.left.projector(a), self.right.projector(b))?;
                out = out.add(&term.scale_re(coeff));
            }
        }
        Ok(out.scale_re(self.coupling))
    }

    pub fn dim(&self) -> usize {
        self.left.space_dim() * self.right.space_dim()
    }
}

/// The full Q ⊗ B ⊗ E model.
#[derive(Debug, Clone)]
pub struct TripartiteModel {
    pub dims: [usize; 3],
    /// Qubit-bath interaction, acting on Q ⊗ B.
    pub h_qb: SeparableInteraction,
    /// Bath-environment interaction, acting on B ⊗ E.
    pub h_be: SeparableInteraction,
    pub hbar: f64,
    /// Angle between the bath family of `h_qb` and the pointer family of `h_be`.
    pub theta: f64,
}

impl TripartiteModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        let [dq, db, de] = self.dims;
        if dq == 0 || db == 0 || de == 0 {
            return Err(validation("dims", "all factor dimensions must be positive"));
        }
        self.h_qb.validate("h_qb")?;
        self.h_be.validate("h_be")?;
        if self.h_qb.dim() != dq * db {
            return Err(validation(
                "h_qb",
                format!("acts on dimension {}, expected {}", self.h_qb.dim(), dq * db),
            ));
        }
        if self.h_be.dim() != db * de {
            return Err(validation(
                "h_be",
                format!("acts on dimension {}, expected {}", self.h_be.dim(), db * de),
            ));
        }
        if !(self.h_be.coupling > 0.0) {
            return Err(validation("h_be.C", "the dominant coupling C must be positive"));
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(validation("hbar", "must be positive and finite"));
        }
        if !self.ratio().is_finite() {
            return Err(validation("h_qb.c", "the ratio c/C must be finite"));
        }
        let total: usize = self.dims.iter().product();
        if total > operators::max_dim() {
            return Err(ModelError::Operator(OperatorError::CapacityExceeded {
                requested: total,
                cap: operators::max_dim(),
            }));
        }
        Ok(())
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// c/C.
    pub fn ratio(&self) -> f64 {
        self.h_qb.coupling / self.h_be.coupling
    }

    /// H_QB lifted to the full space.
    pub fn h_qb_embedded(&self) -> Result<ComplexOperator, ModelError> {
        let dims = self.dims.to_vec();
        Ok(embed(&self.h_qb.assemble()?, &[0, 1], &dims)?)
    }

    /// H_BE lifted to the full space.
    pub fn h_be_embedded(&self) -> Result<ComplexOperator, ModelError> {
        let dims = self.dims.to_vec();
        Ok(embed(&self.h_be.assemble()?, &[1, 2], &dims)?)
    }

    /// H_QB + H_BE on the full space.
    pub fn full_hamiltonian(&self) -> Result<ComplexOperator, ModelError> {
        Ok(self.h_qb_embedded()?.add(&self.h_be_embedded()?))
    }

    /// Same geometry with a different qubit-bath coupling. Used by ratio sweeps.
    pub fn with_qb_coupling(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.h_qb.coupling = c;
        out
    }

    /// The smallest model exhibiting nontrivial corrections: two-level
    /// factors, maximally non-commuting bath families (θ = π/4), weak
    /// qubit coupling c/C = 0.01.
    pub fn canonical() -> Self {
        from_config(&ModelConfig::canonical()).expect("canonical config is valid").0
    }
}

/// Uncorrelated initial state |Ψ⟩_Q ⊗ |0⟩_B ⊗ |χ⟩_E.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub q_amps: Vec<Complex64>,
    pub b_amps: Vec<Complex64>,
    pub e_amps: Vec<Complex64>,
}

impl ProductState {
    pub fn validate(&self, dims: &[usize; 3]) -> Result<(), ModelError> {
        for (name, amps, dim) in [
            ("initial.q_amps", &self.q_amps, dims[0]),
            ("initial.b_amps", &self.b_amps, dims[1]),
            ("initial.e_amps", &self.e_amps, dims[2]),
        ] {
            if amps.len() != dim {
                return Err(validation(
                    name,
                    format!("expected {dim} amplitudes, found {}", amps.len()),
                ));
            }
            let norm = operators::l2_norm(amps);
            if (norm - 1.0).abs() > tol::STATE_NORM {
                return Err(validation(name, format!("norm {norm} is not 1 within {:.1e}", tol::STATE_NORM)));
            }
        }
        Ok(())
    }

    /// Kronecker product of the three factors, in Q, B, E order.
    pub fn to_vector(&self) -> Result<StateVector, ModelError> {
        let q = StateVector::new(self.q_amps.clone())?;
        let b = StateVector::new(self.b_amps.clone())?;
        let e = StateVector::new(self.e_amps.clone())?;
        Ok(q.kron(&b).kron(&e))
    }

    /// Same state with the bath factor replaced by the pointer state `i0`.
    pub fn with_robust_bath(&self, i0: usize, d_b: usize) -> Self {
        let mut b_amps = vec![Complex64::ZERO; d_b];
        b_amps[i0] = Complex64::ONE;
        Self { q_amps: self.q_amps.clone(), b_amps, e_amps: self.e_amps.clone() }
    }

    pub fn canonical() -> Self {
        from_config(&ModelConfig::canonical()).expect("canonical config is valid").1
    }
}

/// Build the full-space state vector for a model.
pub fn product_state_vector(
    model: &TripartiteModel,
    state: &ProductState,
) -> Result<StateVector, ModelError> {
    state.validate(&model.dims)?;
    state.to_vector()
}

// ---------------------------------------------------------------------------
// Config file schema
// ---------------------------------------------------------------------------

fn default_hbar() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dims: [usize; 3],
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    pub h_qb: QbInteractionConfig,
    pub h_be: BeInteractionConfig,
    pub initial: InitialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QbInteractionConfig {
    pub c: f64,
    pub gamma: Vec<Vec<f64>>,
    pub bath_family: BathFamilyKind,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BathFamilyKind {
    #[serde(rename = "rotated")]
    Rotated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeInteractionConfig {
    #[serde(rename = "C")]
    pub coupling: f64,
    pub kappa: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub q_amps: Vec<[f64; 2]>,
    pub b_amps: Vec<[f64; 2]>,
    pub e_amps: Vec<[f64; 2]>,
}

impl ModelConfig {
    pub const CANONICAL_THETA: f64 = std::f64::consts::FRAC_PI_4;

    /// The default model used in documentation and tests.
    pub fn canonical() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            dims: [2, 2, 2],
            hbar: 1.0,
            h_qb: QbInteractionConfig {
                c: 0.01,
                gamma: vec![vec![1.0, -1.0], vec![-1.0, 1.0]],
                bath_family: BathFamilyKind::Rotated,
                theta: Self::CANONICAL_THETA,
            },
            h_be: BeInteractionConfig {
                coupling: 1.0,
                kappa: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            },
            initial: InitialConfig {
                q_amps: vec![[s, 0.0], [s, 0.0]],
                b_amps: vec![[1.0, 0.0], [0.0, 0.0]],
                e_amps: vec![[s, 0.0], [s, 0.0]],
            },
        }
    }
}

fn amps_from_pairs(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

fn pairs_from_amps(amps: &[Complex64]) -> Vec<[f64; 2]> {
    amps.iter().map(|z| [z.re, z.im]).collect()
}

/// Build a validated model and initial state from a parsed config.
pub fn from_config(config: &ModelConfig) -> Result<(TripartiteModel, ProductState), ModelError> {
    let [dq, db, de] = config.dims;
    let (qb_bath_family, be_bath_family) = rotated_bath_families(db, config.h_qb.theta)?;
    let h_qb = SeparableInteraction {
        coupling: config.h_qb.c,
        coeffs: config.h_qb.gamma.clone(),
        left: ProjectorFamily::standard_basis(dq),
        right: qb_bath_family,
    };
    let h_be = SeparableInteraction {
        coupling: config.h_be.coupling,
        coeffs: config.h_be.kappa.clone(),
        left: be_bath_family,
        right: ProjectorFamily::standard_basis(de),
    };
    let model = TripartiteModel {
        dims: config.dims,
        h_qb,
        h_be,
        hbar: config.hbar,
        theta: config.h_qb.theta,
    };
    model.validate()?;
    let state = ProductState {
        q_amps: amps_from_pairs(&config.initial.q_amps),
        b_amps: amps_from_pairs(&config.initial.b_amps),
        e_amps: amps_from_pairs(&config.initial.e_amps),
    };
    state.validate(&model.dims)?;
    Ok((model, state))
}

/// Reconstruct the config document for a model and initial state.
pub fn to_config(model: &TripartiteModel, state: &ProductState) -> ModelConfig {
    ModelConfig {
        dims: model.dims,
        hbar: model.hbar,
        h_qb: QbInteractionConfig {
            c: model.h_qb.coupling,
            gamma: model.h_qb.coeffs.clone(),
            bath_family: BathFamilyKind::Rotated,
            theta: model.theta,
        },
        h_be: BeInteractionConfig {
            coupling: model.h_be.coupling,
            kappa: model.h_be.coeffs.clone(),
        },
        initial: InitialConfig {
            q_amps: pairs_from_amps(&state.q_amps),
            b_amps: pairs_from_amps(&state.b_amps),
            e_amps: pairs_from_amps(&state.e_amps),
        },
    }
}

/// Parse, validate and build a model from config text (strict JSON schema:
/// unknown keys are rejected).
pub fn load_model(config_text: &str) -> Result<(TripartiteModel, ProductState), ModelError> {
    let config: ModelConfig = serde_json::from_str(config_text)
        .map_err(|e| ModelError::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
    from_config(&config)
}

/// Serialize a model back to config text.
pub fn save_model(model: &TripartiteModel, state: &ProductState) -> String {
    serde_json::to_string_pretty(&to_config(model, state)).expect("config serializes")
}
