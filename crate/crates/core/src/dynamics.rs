//! Time evolution and decoherence observables.
//!
//! Evolution is exact: one Hermitian eigensolve of the full Hamiltonian is
//! reused across the whole time grid, so there is no step error and the grid
//! spacing only affects sampling. The observables are the reduced density
//! matrices of Q and Q+B, the correlation amplitudes z_pp'(t) multiplying
//! the qubit's off-diagonal elements, the fidelity of Q+B against its
//! initial (pure) state, and the residual-dephasing closed form driven by
//! the exact energy shifts λ_{p,i0,j}.

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{product_state_vector, ModelError, ProductState, TripartiteModel};
use crate::numfmt::float17;
use crate::operators::{
    hermitian_eig, partial_trace, ComplexOperator, EigenDecomposition, OperatorError,
    StateVector,
};
use crate::spectral::{PerturbationRecord, SpectralError};
use crate::tol;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error(
        "correlation amplitude for pair ({p}, {p_prime}) is undefined: \
         |C_p·C_p'| = {magnitude:.3e} is below {floor:.1e}"
    )]
    UndefinedAmplitude { p: usize, p_prime: usize, magnitude: f64, floor: f64 },
    #[error("tracked pair ({0}, {1}) is out of range for the qubit dimension")]
    PairOutOfRange(usize, usize),
    #[error("invalid baseline: {0}")]
    InvalidBaseline(String),
}

/// Uniform time grid on [t_start, t_end].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<Self, DynamicsError> {
        let grid = Self { t_start, t_end, n_points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.t_start >= 0.0) || !self.t_start.is_finite() {
            return Err(DynamicsError::InvalidGrid("t_start must be finite and >= 0".into()));
        }
        if !(self.t_end > self.t_start) || !self.t_end.is_finite() {
            return Err(DynamicsError::InvalidGrid("t_end must be finite and > t_start".into()));
        }
        if self.n_points < 2 {
            return Err(DynamicsError::InvalidGrid("n_points must be at least 2".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let step = (self.t_end - self.t_start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|k| self.t_start + step * k as f64)
            .collect()
    }
}

/// Shared eigensolve of a model's full Hamiltonian, reused across a grid.
pub struct Evolution {
    eig: EigenDecomposition,
    hbar: f64,
}

impl Evolution {
    pub fn new(model: &TripartiteModel) -> Result<Self, DynamicsError> {
        let h = model.full_hamiltonian()?;
        Ok(Self { eig: hermitian_eig(&h)?, hbar: model.hbar })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eig.eigenvalues()
    }

    /// Eigenbasis coefficients of a state, computed once per initial state.
    pub fn coefficients(&self, state: &StateVector) -> Vec<Complex64> {
        self.eig.coefficients(state)
    }

    /// State at time t from precomputed coefficients.
    pub fn state_at(&self, coefficients: &[Complex64], t: f64) -> StateVector {
        let phased: Vec<Complex64> = coefficients
            .iter()
            .zip(self.eig.eigenvalues())
            .map(|(c, &e)| c * (-Complex64::i() * e * t / self.hbar).exp())
            .collect();
        self.eig.synthesize(&phased)
    }
}

/// Evolve `state0` over the grid, one exact state per grid point.
pub fn evolve(
    model: &TripartiteModel,
    state0: &StateVector,
    grid: &TimeGrid,
) -> Result<Vec<StateVector>, DynamicsError> {
    grid.validate()?;
    if state0.dim() != model.total_dim() {
        return Err(DynamicsError::Operator(OperatorError::ShapeMismatch(format!(
            "state dimension {} does not match model dimension {}",
            state0.dim(),
            model.total_dim()
        ))));
    }
    let engine = Evolution::new(model)?;
    let coeffs = engine.coefficients(state0);
    Ok(grid.times().iter().map(|&t| engine.state_at(&coeffs, t)).collect())
}

/// Reduced density operator of the qubit.
pub fn reduced_q(
    state: &StateVector,
    dims: &[usize; 3],
) -> Result<ComplexOperator, DynamicsError> {
    Ok(partial_trace(&state.density(), &[0], &dims[..])?)
}

/// Reduced density operator of qubit + bath.
pub fn reduced_qb(
    state: &StateVector,
    dims: &[usize; 3],
) -> Result<ComplexOperator, DynamicsError> {
    Ok(partial_trace(&state.density(), &[0, 1], &dims[..])?)
}

/// Fidelity of the evolved state's Q+B marginal against a pure reference
/// density operator: F = Tr(ρ_ref · ρ_QB(t)).
pub fn qb_fidelity(
    state: &StateVector,
    dims: &[usize; 3],
    initial_qb_density: &ComplexOperator,
) -> Result<f64, DynamicsError> {
    let purity = initial_qb_density
        .matmul(initial_qb_density)
        .trace()
        .re;
    if (purity - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::Operator(OperatorError::ContractViolation(format!(
            "fidelity reference must be pure; purity = {purity}"
        ))));
    }
    let rho_qb = reduced_qb(state, dims)?;
    Ok(initial_qb_density.matmul(&rho_qb).trace().re)
}

/// F = ⟨ref|ρ_QB(t)|ref⟩ for a pure reference vector. Avoids re-checking
/// purity inside grid loops.
pub fn qb_fidelity_pure(
    state: &StateVector,
    dims: &[usize; 3],
    reference_qb: &StateVector,
) -> Result<f64, DynamicsError> {
    let rho_qb = reduced_qb(state, dims)?;
    let image = rho_qb.apply(reference_qb);
    Ok(reference_qb.inner(&image).re)
}

/// Time series of the decoherence observables for a set of tracked qubit
/// index pairs.
#[derive(Debug, Clone)]
pub struct DecoherenceTrace {
    pub times: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    /// |z_pp'(t)| per tracked pair, aligned with `pairs`.
    pub z_abs: Vec<Vec<f64>>,
    /// ρ_Qpp'(t) per tracked pair.
    pub rho_offdiag: Vec<Vec<Complex64>>,
    pub qb_fidelity: Vec<f64>,
    /// Frobenius distance ‖ρ_QB(t) - ρ_QB(0)‖.
    pub qb_state_distance: Vec<f64>,
}

/// Evolve a product-state preparation and extract the tracked observables.
pub fn compute_trace(
    model: &TripartiteModel,
    initial: &ProductState,
    grid: &TimeGrid,
    pairs: &[(usize, usize)],
) -> Result<DecoherenceTrace, DynamicsError> {
    grid.validate()?;
    let dims = model.dims;
    for &(p, q) in pairs {
        if p >= dims[0] || q >= dims[0] || p == q {
            return Err(DynamicsError::PairOutOfRange(p, q));
        }
    }
    let state0 = product_state_vector(model, initial)?;

    // Pointer-basis amplitudes C_p = ⟨p|Ψ⟩ of the qubit factor.
    let q_state = StateVector::new(initial.q_amps.clone())?;
    let c_amps: Vec<Complex64> = (0..dims[0])
        .map(|p| {
            model
                .h_qb
                .left
                .basis_vector(p)
                .map(|v| v.inner(&q_state))
        })
        .collect::<Result<_, _>>()?;
    for &(p, q) in pairs {
        let magnitude = (c_amps[p] * c_amps[q].conj()).norm();
        if magnitude <= tol::AMPLITUDE_FLOOR {
            return Err(DynamicsError::UndefinedAmplitude {
                p,
                p_prime: q,
                magnitude,
                floor: tol::AMPLITUDE_FLOOR,
            });
        }
    }

    let engine = Evolution::new(model)?;
    let coeffs = engine.coefficients(&state0);
    let reference_qb = StateVector::new(initial.q_amps.clone())?
        .kron(&StateVector::new(initial.b_amps.clone())?);
    let rho_qb0 = reduced_qb(&state0, &dims)?;

    let times = grid.times();
    let mut z_abs = vec![Vec::with_capacity(times.len()); pairs.len()];
    let mut rho_offdiag = vec![Vec::with_capacity(times.len()); pairs.len()];
    let mut fidelity = Vec::with_capacity(times.len());
    let mut distance = Vec::with_capacity(times.len());

    // Pointer-basis matrix elements need the basis vectors once.
    let q_basis: Vec<StateVector> = (0..dims[0])
        .map(|p| model.h_qb.left.basis_vector(p))
        .collect::<Result<_, _>>()?;

    for &t in &times {
        let state = engine.state_at(&coeffs, t);
        let rho_q = reduced_q(&state, &dims)?;
        for (slot, &(p, q)) in pairs.iter().enumerate() {
            let image = rho_q.apply(&q_basis[q]);
            let element = q_basis[p].inner(&image);
            rho_offdiag[slot].push(element);
            z_abs[slot].push((element / (c_amps[p] * c_amps[q].conj())).norm());
        }
        fidelity.push(qb_fidelity_pure(&state, &dims, &reference_qb)?);
        let rho_qb = reduced_qb(&state, &dims)?;
        distance.push(rho_qb.sub(&rho_qb0).frobenius_norm());
    }

    Ok(DecoherenceTrace {
        times,
        pairs: pairs.to_vec(),
        z_abs,
        rho_offdiag,
        qb_fidelity: fidelity,
        qb_state_distance: distance,
    })
}

/// Divide the tracked off-diagonal elements by C_p·C*_p' to recover the
/// complex correlation amplitude z_pp'(t).
pub fn correlation_amplitude(
    trace: &DecoherenceTrace,
    pair: (usize, usize),
    c_amps: &[Complex64],
) -> Result<Vec<Complex64>, DynamicsError> {
    let slot = trace
        .pairs
        .iter()
        .position(|&p| p == pair)
        .ok_or(DynamicsError::PairOutOfRange(pair.0, pair.1))?;
    let denom = c_amps[pair.0] * c_amps[pair.1].conj();
    if denom.norm() <= tol::AMPLITUDE_FLOOR {
        return Err(DynamicsError::UndefinedAmplitude {
            p: pair.0,
            p_prime: pair.1,
            magnitude: denom.norm(),
            floor: tol::AMPLITUDE_FLOOR,
        });
    }
    Ok(trace.rho_offdiag[slot].iter().map(|rho| rho / denom).collect())
}

/// Two-body Q+B dephasing model: coefficient matrix γ, coupling c, and a
/// probability mixture p_q over the bath projector labels.
#[derive(Debug, Clone)]
pub struct TwoBodyBaseline {
    pub gamma: Vec<Vec<f64>>,
    pub c: f64,
    pub bath_weights: Vec<f64>,
    pub hbar: f64,
}

impl TwoBodyBaseline {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.bath_weights.iter().any(|&p| p < 0.0) {
            return Err(DynamicsError::InvalidBaseline("bath weights must be non-negative".into()));
        }
        let total: f64 = self.bath_weights.iter().sum();
        if (total - 1.0).abs() > tol::STATE_NORM {
            return Err(DynamicsError::InvalidBaseline(format!(
                "bath weights sum to {total}, expected 1"
            )));
        }
        if self.gamma.iter().any(|row| row.len() != self.bath_weights.len()) {
            return Err(DynamicsError::InvalidBaseline(
                "gamma columns must match the number of bath weights".into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form correlation amplitude of the two-body model:
/// z_pp'(t) = Σ_q p_q exp(-i·c·t·(γ_pq - γ_p'q)/ħ).
pub fn baseline_z_closed_form(
    baseline: &TwoBodyBaseline,
    pair: (usize, usize),
    grid: &TimeGrid,
) -> Result<Vec<Complex64>, DynamicsError> {
    baseline.validate()?;
    grid.validate()?;
    let (p, pp) = pair;
    Ok(grid
        .times()
        .iter()
        .map(|&t| {
            baseline
                .bath_weights
                .iter()
                .enumerate()
                .map(|(q, &w)| {
                    let phase = -baseline.c * t * (baseline.gamma[p][q] - baseline.gamma[pp][q])
                        / baseline.hbar;
                    w * Complex64::new(0.0, phase).exp()
                })
                .sum()
        })
        .collect())
}

/// Simulate the two-body model directly: evolve Q ⊗ B under the assembled
/// separable interaction for each pure bath component, mix the reduced qubit
/// states with the given weights, and extract z. Agrees with the closed form
/// to machine precision when the bath family is rank-1 and the mixture
/// components are its basis vectors.
pub fn baseline_z_simulated(
    baseline: &TwoBodyBaseline,
    q_amps: &[Complex64],
    bath_family: &crate::model::ProjectorFamily,
    pair: (usize, usize),
    grid: &TimeGrid,
) -> Result<Vec<Complex64>, DynamicsError> {
    baseline.validate()?;
    grid.validate()?;
    let dq = baseline.gamma.len();
    let db = bath_family.space_dim();
    if q_amps.len() != dq {
        return Err(DynamicsError::InvalidBaseline(format!(
            "qubit amplitudes have length {}, expected {dq}",
            q_amps.len()
        )));
    }
    let interaction = crate::model::SeparableInteraction {
        coupling: baseline.c,
        coeffs: baseline.gamma.clone(),
        left: crate::model::ProjectorFamily::standard_basis(dq),
        right: bath_family.clone(),
    };
    let h = interaction.assemble()?;
    let eig = hermitian_eig(&h)?;
    let q_state = StateVector::new(q_amps.to_vec())?;

    let times = grid.times();
    let mut mixed: Vec<ComplexOperator> =
        times.iter().map(|_| ComplexOperator::zeros(dq)).collect();
    for (q_label, &weight) in baseline.bath_weights.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        let bath_state = bath_family.basis_vector(q_label)?;
        let state0 = q_state.kron(&bath_state);
        let coeffs = eig.coefficients(&state0);
        for (k, &t) in times.iter().enumerate() {
            let phased: Vec<Complex64> = coeffs
                .iter()
                .zip(eig.eigenvalues())
                .map(|(c, &e)| c * (-Complex64::i() * e * t / baseline.hbar).exp())
                .collect();
            let state = eig.synthesize(&phased);
            let rho_q = partial_trace(&state.density(), &[0], &[dq, db])?;
            mixed[k] = mixed[k].add(&rho_q.scale_re(weight));
        }
    }

    let denom = q_amps[pair.0] * q_amps[pair.1].conj();
    if denom.norm() <= tol::AMPLITUDE_FLOOR {
        return Err(DynamicsError::UndefinedAmplitude {
            p: pair.0,
            p_prime: pair.1,
            magnitude: denom.norm(),
            floor: tol::AMPLITUDE_FLOOR,
        });
    }
    Ok(mixed
        .iter()
        .map(|rho| rho.get(pair.0, pair.1) / denom)
        .collect())
}

/// Residual dephasing of the qubit by the environment after the plateau:
/// z_pp'(t) = Σ_j |β_j|² exp(-i·t·(λ_{p,i0,j} - λ_{p',i0,j})/ħ).
pub fn residual_z_closed_form(
    records: &[PerturbationRecord],
    i0: usize,
    e_amps: &[Complex64],
    pair: (usize, usize),
    grid: &TimeGrid,
    hbar: f64,
) -> Result<Vec<Complex64>, DynamicsError> {
    grid.validate()?;
    let lambda = |p: usize, j: usize| -> Option<f64> {
        records
            .iter()
            .find(|r| r.p == p && r.i == i0 && r.j == j)
            .map(|r| r.lambda)
    };
    let n_e = e_amps.len();
    let mut terms = Vec::with_capacity(n_e);
    for (j, beta) in e_amps.iter().enumerate() {
        let lp = lambda(pair.0, j).ok_or_else(|| {
            DynamicsError::InvalidBaseline(format!("no record for (p={}, i={i0}, j={j})", pair.0))
        })?;
        let lpp = lambda(pair.1, j).ok_or_else(|| {
            DynamicsError::InvalidBaseline(format!("no record for (p={}, i={i0}, j={j})", pair.1))
        })?;
        terms.push((beta.norm_sqr(), lp - lpp));
    }
    Ok(grid
        .times()
        .iter()
        .map(|&t| {
            terms
                .iter()
                .map(|&(w, dl)| w * Complex64::new(0.0, -t * dl / hbar).exp())
                .sum()
        })
        .collect())
}

/// Apply the phase-diagonal part of the propagator,
/// U₁|Ψ⟩ = Σ_pij e^{-i·t·E_pij/ħ} (1-ε²_pij) |pij⟩⟨pij|Ψ⟩.
/// The result is not normalized; its norm² is bounded by n₁.
pub fn phase_diagonal_state(
    records: &[PerturbationRecord],
    initial: &StateVector,
    t: f64,
    hbar: f64,
) -> Vec<Complex64> {
    let mut amps = vec![Complex64::ZERO; initial.dim()];
    for r in records {
        let weight = (1.0 - r.epsilon * r.epsilon)
            * r.unperturbed.inner(initial)
            * (-Complex64::i() * r.e_exact * t / hbar).exp();
        if weight == Complex64::ZERO {
            continue;
        }
        for (x, amp) in r.unperturbed.amplitudes().iter().enumerate() {
            amps[x] += weight * amp;
        }
    }
    amps
}

/// How far an interaction moves a product state |x⟩⊗|y⟩ out of the
/// |x⟩-preserving subspace: ‖(1 - |x⟩⟨x| ⊗ 1)·H(|x⟩⊗|y⟩)‖ relative to
/// ‖H(|x⟩⊗|y⟩)‖. Zero exactly when |x⟩ is preserved by the interaction.
pub fn robustness_residual(
    h_int: &ComplexOperator,
    x_state: &StateVector,
    y_state: &StateVector,
) -> f64 {
    let dx = x_state.dim();
    let dy = y_state.dim();
    assert_eq!(h_int.dim(), dx * dy, "interaction dimension mismatch");
    let image = h_int.apply(&x_state.kron(y_state));
    let amps = image.amplitudes();
    // Project each y-column onto |x⟩ and subtract.
    let mut residual_sq = 0.0;
    for b in 0..dy {
        let inner: Complex64 = (0..dx)
            .map(|a| x_state.amplitudes()[a].conj() * amps[a * dy + b])
            .sum();
        for a in 0..dx {
            let projected = x_state.amplitudes()[a] * inner;
            residual_sq += (amps[a * dy + b] - projected).norm_sqr();
        }
    }
    let norm = crate::operators::l2_norm(amps);
    residual_sq.sqrt() / norm.max(1e-15)
}

/// CSV table of a trace: `time`, then `z_abs_p_p'`, `re_rho_p_p'`,
/// `im_rho_p_p'` for each tracked pair, then `qb_fidelity`.
pub fn trace_to_csv(trace: &DecoherenceTrace) -> String {
    let mut header = String::from("time");
    for &(p, q) in &trace.pairs {
        header.push_str(&format!(",z_abs_{p}_{q},re_rho_{p}_{q},im_rho_{p}_{q}"));
    }
    header.push_str(",qb_fidelity\n");
    let mut out = header;
    for (k, &t) in trace.times.iter().enumerate() {
        out.push_str(&float17(t));
        for slot in 0..trace.pairs.len() {
            out.push_str(&format!(
                ",{},{},{}",
                float17(trace.z_abs[slot][k]),
                float17(trace.rho_offdiag[slot][k].re),
                float17(trace.rho_offdiag[slot][k].im),
            ));
        }
        out.push_str(&format!(",{}\n", float17(trace.qb_fidelity[k])));
    }
    out
}
