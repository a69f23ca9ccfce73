//! The decoherence-suppression protocol as an executable driver.
//!
//! The driver selects the bath pointer state that minimizes the exact energy
//! shifts, asserts it as the initial bath state, predicts the plateau
//! duration τ = ħ/λ_max, evolves the full system, and verifies that the Q+B
//! fidelity stays above threshold for the configured fraction of τ. Ratio
//! sweeps rebuild the model at several values of c/C and fit the scaling of
//! ε_max against the ratio.

use thiserror::Error;

use crate::dynamics::{compute_trace, DecoherenceTrace, DynamicsError, Evolution, TimeGrid};
use crate::model::{ModelError, ProductState, TripartiteModel};
use crate::numfmt::float17;
use crate::operators::{hermitian_eig, partial_trace, OperatorError};
use crate::spectral::{
    match_spectrum, summarize, unperturbed_spectrum, PerturbationRecord,
    PerturbationSummary, SpectralError, Tau,
};

/// Coupling ratio above which the weak-coupling assumption is flagged.
pub const WEAK_COUPLING_LIMIT: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("insufficient sweep: {found} ladder points, at least 4 required")]
    InsufficientSweep { found: usize },
    #[error("invalid ratio ladder: {0}")]
    InvalidLadder(String),
    #[error("invalid protocol config: {0}")]
    InvalidConfig(String),
}

/// Driver configuration.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    /// c/C values for scaling sweeps, strictly positive and descending.
    pub ratio_ladder: Vec<f64>,
    /// Fidelity the plateau must maintain.
    pub fidelity_threshold: f64,
    /// The plateau is checked on [0, plateau_fraction·τ].
    pub plateau_fraction: f64,
    /// Number of grid points and the fallback time span (used verbatim when
    /// τ is infinite).
    pub grid: TimeGrid,
    /// Qubit index pairs whose coherences are tracked.
    pub tracked_pairs: Vec<(usize, usize)>,
    /// How many times to repeat the plateau run, feeding the evolved
    /// environment state back in as the new |χ⟩_E.
    pub repeat_count: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            ratio_ladder: vec![0.1, 0.05, 0.02, 0.01, 0.005],
            fidelity_threshold: 0.99,
            plateau_fraction: 0.1,
            grid: TimeGrid { t_start: 0.0, t_end: 10.0, n_points: 101 },
            tracked_pairs: vec![(0, 1)],
            repeat_count: 1,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.fidelity_threshold > 0.0 && self.fidelity_threshold < 1.0) {
            return Err(ProtocolError::InvalidConfig(
                "fidelity_threshold must lie in (0, 1)".into(),
            ));
        }
        if !(self.plateau_fraction > 0.0) || !self.plateau_fraction.is_finite() {
            return Err(ProtocolError::InvalidConfig(
                "plateau_fraction must be positive and finite".into(),
            ));
        }
        if self.repeat_count == 0 {
            return Err(ProtocolError::InvalidConfig("repeat_count must be at least 1".into()));
        }
        self.grid.validate()?;
        for window in self.ratio_ladder.windows(2) {
            if window[1] >= window[0] {
                return Err(ProtocolError::InvalidLadder(
                    "ladder must be strictly descending".into(),
                ));
            }
        }
        if self.ratio_ladder.iter().any(|&r| !(r > 0.0)) {
            return Err(ProtocolError::InvalidLadder("ratios must be positive".into()));
        }
        Ok(())
    }
}

/// Per-candidate table entry for the robust-state search.
#[derive(Debug, Clone)]
pub struct BathCandidate {
    pub i: usize,
    /// max_{p,j} |⟨pij|H_QB|pij⟩| over the raw product kets.
    pub diag_figure: f64,
    /// max_{p,j} |λ_pij| from the exact records.
    pub lambda_max: f64,
}

#[derive(Debug, Clone)]
pub struct RobustSelection {
    pub i0: usize,
    /// All candidate rows were equal within 1e-12.
    pub tie: bool,
    pub table: Vec<BathCandidate>,
}

/// Pick the bath pointer index whose row minimizes the exact λ_max; ties go
/// to the lowest index.
pub fn select_robust_bath_state(
    model: &TripartiteModel,
) -> Result<RobustSelection, ProtocolError> {
    let records = match_spectrum(model)?;
    select_robust_bath_state_from(model, &records)
}

/// Same selection from precomputed records.
pub fn select_robust_bath_state_from(
    model: &TripartiteModel,
    records: &[PerturbationRecord],
) -> Result<RobustSelection, ProtocolError> {
    let levels = unperturbed_spectrum(model)?;
    let h_qb = model.h_qb_embedded()?;
    let d_b = model.dims[1];
    let mut table = Vec::with_capacity(d_b);
    for i in 0..d_b {
        let diag_figure = levels
            .iter()
            .filter(|l| l.i == i)
            .map(|l| l.ket.inner(&h_qb.apply(&l.ket)).norm())
            .fold(0.0, f64::max);
        let lambda_max = records
            .iter()
            .filter(|r| r.i == i)
            .map(|r| r.lambda.abs())
            .fold(0.0, f64::max);
        table.push(BathCandidate { i, diag_figure, lambda_max });
    }
    let mut i0 = 0usize;
    for (i, row) in table.iter().enumerate() {
        if row.lambda_max < table[i0].lambda_max {
            i0 = i;
        }
    }
    let min = table.iter().map(|r| r.lambda_max).fold(f64::INFINITY, f64::min);
    let max = table.iter().map(|r| r.lambda_max).fold(f64::NEG_INFINITY, f64::max);
    let tie = (max - min).abs() <= 1e-12;
    if tie {
        i0 = 0;
    }
    Ok(RobustSelection { i0, tie, table })
}

/// Outcome of one plateau repetition.
#[derive(Debug, Clone)]
pub struct RepeatOutcome {
    pub min_fidelity: f64,
    pub ok: bool,
}

/// Full protocol outcome.
#[derive(Debug, Clone)]
pub struct ProtocolReport {
    pub chosen_i0: usize,
    pub tie: bool,
    pub selection_table: Vec<BathCandidate>,
    pub summary: PerturbationSummary,
    /// c/C exceeded the weak-coupling regime.
    pub regime_warning: bool,
    /// λ_max vanished: the plateau is exact and unbounded.
    pub exact_limit: bool,
    /// End of the checked window, plateau_fraction·τ.
    pub plateau_time: f64,
    pub plateau_min_fidelity: f64,
    pub plateau_ok: bool,
    pub repeats: Vec<RepeatOutcome>,
    /// Leakage weight n₂; the probability of bath-state-changing errors.
    pub error_probability_bound: f64,
    pub fidelity_threshold: f64,
    pub plateau_fraction: f64,
    pub records: Vec<PerturbationRecord>,
    pub trace: DecoherenceTrace,
}

/// Run the suppression protocol: select the robust bath state, predict τ,
/// evolve, and check the plateau.
pub fn run_protocol(
    model: &TripartiteModel,
    initial: &ProductState,
    config: &ProtocolConfig,
) -> Result<ProtocolReport, ProtocolError> {
    config.validate()?;
    model.validate()?;
    let records = match_spectrum(model)?;
    let selection = select_robust_bath_state_from(model, &records)?;
    let robust = initial.with_robust_bath(selection.i0, model.dims[1]);
    let psi0 = crate::model::product_state_vector(model, &robust)?;
    let summary = summarize(&records, model, selection.i0, &psi0);

    let (plateau_time, grid) = match summary.tau {
        Tau::Infinite => (f64::INFINITY, config.grid),
        Tau::Finite(tau) => {
            let t_end = config.plateau_fraction * tau;
            (
                t_end,
                TimeGrid { t_start: 0.0, t_end, n_points: config.grid.n_points },
            )
        }
    };

    let trace = compute_trace(model, &robust, &grid, &config.tracked_pairs)?;
    let min_fidelity = trace.qb_fidelity.iter().copied().fold(f64::INFINITY, f64::min);
    let mut repeats = vec![RepeatOutcome {
        min_fidelity,
        ok: min_fidelity >= config.fidelity_threshold,
    }];

    // Optional repetitions: evolve to the end of the window, retain the
    // environment marginal's dominant eigenvector as the new |χ⟩_E, and
    // re-assert Q+B to the robust product state.
    let mut current = robust.clone();
    for _ in 1..config.repeat_count {
        let state0 = crate::model::product_state_vector(model, &current)?;
        let engine = Evolution::new(model)?;
        let coeffs = engine.coefficients(&state0);
        let end_state = engine.state_at(&coeffs, grid.t_end);
        let rho_e = partial_trace(&end_state.density(), &[2], &model.dims[..])?;
        let eig = hermitian_eig(&rho_e)?;
        let chi = eig.eigenvector(eig.dim() - 1);
        current = ProductState {
            q_amps: robust.q_amps.clone(),
            b_amps: robust.b_amps.clone(),
            e_amps: chi.amplitudes().to_vec(),
        };
        let repeat_trace = compute_trace(model, &current, &grid, &config.tracked_pairs)?;
        let min_fid = repeat_trace
            .qb_fidelity
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        repeats.push(RepeatOutcome {
            min_fidelity: min_fid,
            ok: min_fid >= config.fidelity_threshold,
        });
    }

    let plateau_ok = repeats.iter().all(|r| r.ok);
    Ok(ProtocolReport {
        chosen_i0: selection.i0,
        tie: selection.tie,
        selection_table: selection.table,
        regime_warning: summary.ratio.abs() > WEAK_COUPLING_LIMIT,
        exact_limit: !summary.tau.is_finite(),
        plateau_time,
        plateau_min_fidelity: min_fidelity,
        plateau_ok,
        repeats,
        error_probability_bound: summary.n2,
        fidelity_threshold: config.fidelity_threshold,
        plateau_fraction: config.plateau_fraction,
        summary,
        records,
        trace,
    })
}

/// Flat key-value rendering of a report, deterministic field order.
pub fn report_to_text(report: &ProtocolReport) -> String {
    let mut out = String::new();
    let mut push = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    push("chosen_i0", report.chosen_i0.to_string());
    push("tie", report.tie.to_string());
    push("ratio", float17(report.summary.ratio));
    push("eps_max", float17(report.summary.eps_max));
    push("eps_max_robust", float17(report.summary.eps_max_robust));
    push("lambda_max", float17(report.summary.lambda_max));
    push("tau", float17(report.summary.tau.as_f64()));
    push("n1", float17(report.summary.n1));
    push("n2", float17(report.summary.n2));
    push("error_probability_bound", float17(report.error_probability_bound));
    push("regime_warning", report.regime_warning.to_string());
    push("exact_limit", report.exact_limit.to_string());
    push("plateau_fraction", float17(report.plateau_fraction));
    push("plateau_time", float17(report.plateau_time));
    push("fidelity_threshold", float17(report.fidelity_threshold));
    push("plateau_min_fidelity", float17(report.plateau_min_fidelity));
    push("plateau_ok", report.plateau_ok.to_string());
    push("repeat_count", report.repeats.len().to_string());
    for (k, repeat) in report.repeats.iter().enumerate() {
        push(&format!("repeat_{}_min_fidelity", k + 1), float17(repeat.min_fidelity));
        push(&format!("repeat_{}_ok", k + 1), repeat.ok.to_string());
    }
    for row in &report.selection_table {
        push(&format!("candidate_{}_diag_figure", row.i), float17(row.diag_figure));
        push(&format!("candidate_{}_lambda_max", row.i), float17(row.lambda_max));
    }
    out
}

/// Least-squares line fit with the coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> ScalingFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let fit = slope * x + intercept;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    ScalingFit { slope, intercept, r2 }
}

/// One rung of a coupling-ratio sweep.
#[derive(Debug, Clone)]
pub struct SweepRung {
    pub ratio: f64,
    pub i0: usize,
    pub eps_max: f64,
    pub lambda_max: f64,
    pub tau: Tau,
    pub n1: f64,
    pub n2: f64,
    /// n₂/(c/C)², the prefactor of the quadratic error-probability law.
    pub n2_over_ratio_sq: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rungs: Vec<SweepRung>,
    /// Fit of log ε_max against log(c/C).
    pub fit: ScalingFit,
}

/// Rebuild the model at each ladder ratio (varying c at fixed C), collect
/// summaries, and fit log ε_max against log ratio.
pub fn sweep_ratio(
    model: &TripartiteModel,
    initial: &ProductState,
    config: &ProtocolConfig,
) -> Result<SweepResult, ProtocolError> {
    config.validate()?;
    let ladder = &config.ratio_ladder;
    if ladder.len() < 4 {
        return Err(ProtocolError::InsufficientSweep { found: ladder.len() });
    }
    let span = ladder.first().unwrap() / ladder.last().unwrap();
    if span < 10.0 {
        return Err(ProtocolError::InvalidLadder(format!(
            "ladder spans a factor of {span:.3}, at least one decade required"
        )));
    }
    if ladder.iter().any(|&r| r > WEAK_COUPLING_LIMIT) {
        return Err(ProtocolError::InvalidLadder(format!(
            "all ratios must be at most {WEAK_COUPLING_LIMIT}"
        )));
    }

    let big_c = model.h_be.coupling;
    let mut rungs = Vec::with_capacity(ladder.len());
    for &ratio in ladder {
        let rung_model = model.with_qb_coupling(ratio * big_c);
        let records = match_spectrum(&rung_model)?;
        let selection = select_robust_bath_state_from(&rung_model, &records)?;
        let robust = initial.with_robust_bath(selection.i0, rung_model.dims[1]);
        let psi0 = crate::model::product_state_vector(&rung_model, &robust)?;
        let summary = summarize(&records, &rung_model, selection.i0, &psi0);
        rungs.push(SweepRung {
            ratio,
            i0: selection.i0,
            eps_max: summary.eps_max,
            lambda_max: summary.lambda_max,
            tau: summary.tau,
            n1: summary.n1,
            n2: summary.n2,
            n2_over_ratio_sq: summary.n2 / (ratio * ratio),
        });
    }

    let xs: Vec<f64> = rungs.iter().map(|r| r.ratio.ln()).collect();
    let ys: Vec<f64> = rungs
        .iter()
        .map(|r| {
            if r.eps_max > 0.0 {
                r.eps_max.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(ProtocolError::InvalidLadder(
            "ε_max vanished on a rung; the scaling fit is undefined".into(),
        ));
    }
    let fit = linear_fit(&xs, &ys);
    Ok(SweepResult { rungs, fit })
}

/// CSV table of a sweep:
/// `ratio,eps_max,lambda_max,tau,n1,n2,n2_over_ratio_sq`.
pub fn sweep_to_csv(sweep: &SweepResult) -> String {
    let mut out = String::from("ratio,eps_max,lambda_max,tau,n1,n2,n2_over_ratio_sq\n");
    for r in &sweep.rungs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            float17(r.ratio),
            float17(r.eps_max),
            float17(r.lambda_max),
            float17(r.tau.as_f64()),
            float17(r.n1),
            float17(r.n2),
            float17(r.n2_over_ratio_sq),
        ));
    }
    out
}

/// Flat key-value rendering of the sweep fit.
pub fn sweep_to_text(sweep: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(&format!("rungs = {}\n", sweep.rungs.len()));
    out.push_str(&format!("slope = {}\n", float17(sweep.fit.slope)));
    out.push_str(&format!("intercept = {}\n", float17(sweep.fit.intercept)));
    out.push_str(&format!("r2 = {}\n", float17(sweep.fit.r2)));
    let k_max = sweep
        .rungs
        .iter()
        .map(|r| r.n2_over_ratio_sq)
        .fold(f64::NEG_INFINITY, f64::max);
    let k_min = sweep
        .rungs
        .iter()
        .map(|r| r.n2_over_ratio_sq)
        .fold(f64::INFINITY, f64::min);
    out.push_str(&format!("n2_prefactor_min = {}\n", float17(k_min)));
    out.push_str(&format!("n2_prefactor_max = {}\n", float17(k_max)));
    out
}
