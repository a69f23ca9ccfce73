//! The five batch commands. Each loads a model config (with overrides
//! applied before validation), runs one analysis, and writes CSV tables,
//! flat key-value summaries, and SVG plots into the output directory.

use std::fs;
use std::path::Path;

use qbe_core::dynamics::{
    baseline_z_closed_form, baseline_z_simulated, compute_trace, trace_to_csv, TimeGrid,
    TwoBodyBaseline,
};
use qbe_core::model::{from_config, product_state_vector, ModelConfig, ProductState, TripartiteModel};
use qbe_core::numfmt::float17;
use qbe_core::operators::StateVector;
use qbe_core::protocol::{
    report_to_text, run_protocol, select_robust_bath_state_from, sweep_ratio, sweep_to_csv,
    sweep_to_text, ProtocolConfig, RobustSelection,
};
use qbe_core::spectral::{match_spectrum, records_to_csv, summarize, PerturbationSummary, Tau};

use crate::error::CliError;
use crate::outputs::OutputDir;
use crate::overrides::apply_override;
use crate::svg::{line_plot, Series};

pub fn load_model_with_overrides(
    path: &Path,
    overrides: &[String],
) -> Result<(TripartiteModel, ProductState), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        CliError::Validation(format!(
            "config parse error at line {} column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    let config: ModelConfig = serde_json::from_value(value)
        .map_err(|e| CliError::Validation(format!("config validation error: {e}")))?;
    Ok(from_config(&config)?)
}

pub fn parse_pairs(spec: &str) -> Result<Vec<(usize, usize)>, CliError> {
    spec.split(',')
        .map(|item| {
            let (a, b) = item.split_once(':').ok_or_else(|| {
                CliError::Usage(format!("pair '{item}' is not of the form p:q"))
            })?;
            let p = a
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("pair index '{a}' is not an integer")))?;
            let q = b
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("pair index '{b}' is not an integer")))?;
            Ok((p, q))
        })
        .collect()
}

pub fn parse_ratios(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|item| {
            item.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("ratio '{item}' is not a number")))
        })
        .collect()
}

fn analyze_summary_text(selection: &RobustSelection, summary: &PerturbationSummary) -> String {
    let mut out = String::new();
    let mut push = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    push("chosen_i0", selection.i0.to_string());
    push("tie", selection.tie.to_string());
    push("ratio", float17(summary.ratio));
    push("eps_max", float17(summary.eps_max));
    push("eps_max_robust", float17(summary.eps_max_robust));
    push("lambda_max", float17(summary.lambda_max));
    push("tau", float17(summary.tau.as_f64()));
    push("n1", float17(summary.n1));
    push("n2", float17(summary.n2));
    for row in &selection.table {
        push(&format!("candidate_{}_diag_figure", row.i), float17(row.diag_figure));
        push(&format!("candidate_{}_lambda_max", row.i), float17(row.lambda_max));
    }
    out
}

/// Spectral analysis: records table and aggregate summary.
pub fn cmd_analyze(
    model: &TripartiteModel,
    state: &ProductState,
    out: &OutputDir,
) -> Result<(), CliError> {
    let records = match_spectrum(model)?;
    let selection = select_robust_bath_state_from(model, &records)?;
    let robust = state.with_robust_bath(selection.i0, model.dims[1]);
    let psi0 = product_state_vector(model, &robust)?;
    let summary = summarize(&records, model, selection.i0, &psi0);
    out.write("records.csv", &records_to_csv(&records))?;
    out.write("summary.txt", &analyze_summary_text(&selection, &summary))?;
    Ok(())
}

/// Time evolution of the configured initial state.
pub fn cmd_evolve(
    model: &TripartiteModel,
    state: &ProductState,
    out: &OutputDir,
    t_end: Option<f64>,
    n_points: usize,
    pairs: &[(usize, usize)],
) -> Result<(), CliError> {
    let records = match_spectrum(model)?;
    let selection = select_robust_bath_state_from(model, &records)?;
    let psi0 = product_state_vector(model, state)?;
    let summary = summarize(&records, model, selection.i0, &psi0);
    let t_end = t_end.unwrap_or(match summary.tau {
        Tau::Finite(tau) => 5.0 * tau,
        Tau::Infinite => 10.0 * model.hbar / model.h_be.coupling,
    });
    let grid = TimeGrid::new(0.0, t_end, n_points)?;
    let trace = compute_trace(model, state, &grid, pairs)?;
    out.write("trace.csv", &trace_to_csv(&trace))?;

    let fidelity_series = [Series {
        label: "qb_fidelity".into(),
        points: trace.times.iter().copied().zip(trace.qb_fidelity.iter().copied()).collect(),
    }];
    out.write(
        "fidelity.svg",
        &line_plot("Q+B fidelity", "t", "F(t)", &fidelity_series),
    )?;

    let z_series: Vec<Series> = trace
        .pairs
        .iter()
        .enumerate()
        .map(|(slot, &(p, q))| Series {
            label: format!("|z_{p}{q}|"),
            points: trace.times.iter().copied().zip(trace.z_abs[slot].iter().copied()).collect(),
        })
        .collect();
    out.write("z_abs.svg", &line_plot("coherence magnitude", "t", "|z(t)|", &z_series))?;
    Ok(())
}

/// Full suppression-protocol run.
#[allow(clippy::too_many_arguments)]
pub fn cmd_protocol(
    model: &TripartiteModel,
    state: &ProductState,
    out: &OutputDir,
    threshold: f64,
    plateau_fraction: f64,
    n_points: usize,
    repeat: usize,
    pairs: &[(usize, usize)],
) -> Result<(), CliError> {
    let config = ProtocolConfig {
        fidelity_threshold: threshold,
        plateau_fraction,
        grid: TimeGrid { t_start: 0.0, t_end: 10.0 * model.hbar / model.h_be.coupling, n_points },
        tracked_pairs: pairs.to_vec(),
        repeat_count: repeat,
        ..ProtocolConfig::default()
    };
    let report = run_protocol(model, state, &config)?;
    out.write("report.txt", &report_to_text(&report))?;
    out.write("records.csv", &records_to_csv(&report.records))?;
    out.write("trace.csv", &trace_to_csv(&report.trace))?;
    let fidelity_series = [Series {
        label: "qb_fidelity".into(),
        points: report
            .trace
            .times
            .iter()
            .copied()
            .zip(report.trace.qb_fidelity.iter().copied())
            .collect(),
    }];
    out.write(
        "fidelity.svg",
        &line_plot("plateau check", "t", "F(t)", &fidelity_series),
    )?;
    Ok(())
}

/// Coupling-ratio sweep with the scaling fit.
pub fn cmd_sweep(
    model: &TripartiteModel,
    state: &ProductState,
    out: &OutputDir,
    ratios: &[f64],
) -> Result<(), CliError> {
    let config = ProtocolConfig { ratio_ladder: ratios.to_vec(), ..ProtocolConfig::default() };
    let sweep = sweep_ratio(model, state, &config)?;
    out.write("scaling.csv", &sweep_to_csv(&sweep))?;
    out.write("scaling.txt", &sweep_to_text(&sweep))?;

    let data = Series {
        label: "eps_max".into(),
        points: sweep
            .rungs
            .iter()
            .map(|r| (r.ratio.log10(), r.eps_max.log10()))
            .collect(),
    };
    let ln10 = std::f64::consts::LN_10;
    let fit_points: Vec<(f64, f64)> = [sweep.rungs.last().unwrap(), &sweep.rungs[0]]
        .iter()
        .map(|r| {
            let x = r.ratio.log10();
            (x, (sweep.fit.slope * r.ratio.ln() + sweep.fit.intercept) / ln10)
        })
        .collect();
    let fit = Series { label: format!("fit slope {:.3}", sweep.fit.slope), points: fit_points };
    out.write(
        "scaling.svg",
        &line_plot("correction scaling", "log10(c/C)", "log10(eps_max)", &[data, fit]),
    )?;
    Ok(())
}

/// Two-body baseline: closed form against direct simulation.
pub fn cmd_baseline(
    model: &TripartiteModel,
    state: &ProductState,
    out: &OutputDir,
    t_end: f64,
    n_points: usize,
    pair: (usize, usize),
) -> Result<(), CliError> {
    let family = &model.h_qb.right;
    let b_state = StateVector::new(state.b_amps.clone()).map_err(qbe_core::model::ModelError::from)?;
    let weights: Vec<f64> = (0..family.len())
        .map(|q| Ok(family.basis_vector(q)?.inner(&b_state).norm_sqr()))
        .collect::<Result<_, qbe_core::model::ModelError>>()?;
    let baseline = TwoBodyBaseline {
        gamma: model.h_qb.coeffs.clone(),
        c: model.h_qb.coupling,
        bath_weights: weights,
        hbar: model.hbar,
    };
    let grid = TimeGrid::new(0.0, t_end, n_points)?;
    let closed = baseline_z_closed_form(&baseline, pair, &grid)?;
    let simulated = baseline_z_simulated(&baseline, &state.q_amps, family, pair, &grid)?;

    let mut csv = String::from("time,re_z_closed,im_z_closed,abs_z_closed,abs_z_simulated\n");
    for (k, &t) in grid.times().iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            float17(t),
            float17(closed[k].re),
            float17(closed[k].im),
            float17(closed[k].norm()),
            float17(simulated[k].norm()),
        ));
    }
    out.write("baseline.csv", &csv)?;

    let series = [
        Series {
            label: "closed form".into(),
            points: grid.times().iter().copied().zip(closed.iter().map(|z| z.norm())).collect(),
        },
        Series {
            label: "simulated".into(),
            points: grid
                .times()
                .iter()
                .copied()
                .zip(simulated.iter().map(|z| z.norm()))
                .collect(),
        },
    ];
    out.write(
        "baseline.svg",
        &line_plot("two-body coherence", "t", "|z(t)|", &series),
    )?;
    Ok(())
}
