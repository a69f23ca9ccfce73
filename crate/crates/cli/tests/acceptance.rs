//! Acceptance suite: every quantitative criterion of the simulator, checked
//! at its stated tolerance. Each test prints one `[acceptance]` verdict line
//! (visible with `cargo test -- --nocapture`) and fails loudly if the
//! criterion is not met.

use std::time::{Duration, Instant};

use qbe_core::dynamics::{
    baseline_z_closed_form, baseline_z_simulated, compute_trace, residual_z_closed_form,
    TimeGrid, TwoBodyBaseline,
};
use qbe_core::model::{
    from_config, product_state_vector, BathFamilyKind, BeInteractionConfig, InitialConfig,
    ModelConfig, ProductState, ProjectorFamily, QbInteractionConfig, TripartiteModel,
};
use qbe_core::protocol::{select_robust_bath_state, sweep_ratio, ProtocolConfig};
use qbe_core::spectral::{lambda_bound_with, match_spectrum, norm_split, summarize, Tau};
use qbe_core::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("[acceptance] {name}: {} — {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn canonical() -> (TripartiteModel, ProductState) {
    from_config(&ModelConfig::canonical()).unwrap()
}

fn random_amps(n: usize, rng: &mut StdRng) -> Vec<[f64; 2]> {
    let raw: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.iter().map(|z| [z.re / norm, z.im / norm]).collect()
}

/// Random valid model with dims at most (2, 3, 3). The same seed is used by
/// the norm-split and shift-bound criteria so both see identical models.
fn random_model(rng: &mut StdRng) -> (TripartiteModel, ProductState) {
    let d_b = if rng.random_bool(0.5) { 2 } else { 3 };
    let d_e = if rng.random_bool(0.5) { 2 } else { 3 };
    let big_c = rng.random_range(0.5..2.0);
    let ratio = rng.random_range((1e-3f64).ln()..(0.5f64).ln()).exp();
    let config = ModelConfig {
        dims: [2, d_b, d_e],
        hbar: 1.0,
        h_qb: QbInteractionConfig {
            c: ratio * big_c,
            gamma: (0..2)
                .map(|_| (0..d_b).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect(),
            bath_family: BathFamilyKind::Rotated,
            theta: rng.random_range(0.0..std::f64::consts::PI),
        },
        h_be: BeInteractionConfig {
            coupling: big_c,
            kappa: (0..d_b)
                .map(|_| (0..d_e).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect(),
        },
        initial: InitialConfig {
            q_amps: random_amps(2, rng),
            b_amps: random_amps(d_b, rng),
            e_amps: random_amps(d_e, rng),
        },
    };
    from_config(&config).unwrap()
}

#[test]
fn criterion_1_exact_limit_identity() {
    let start = Instant::now();

    // Branch one: c = 0. The bath pointer state decouples Q+B from the
    // environment entirely, so the Q+B marginal is frozen.
    let (model, state) = canonical();
    let free = model.with_qb_coupling(0.0);
    let robust = state.with_robust_bath(0, 2);
    let grid = TimeGrid::new(0.0, 100.0, 64).unwrap();
    let trace = compute_trace(&free, &robust, &grid, &[(0, 1)]).unwrap();
    let dev_c0 = trace
        .qb_fidelity
        .iter()
        .map(|f| (1.0 - f).abs())
        .fold(0.0, f64::max);

    // Branch two: θ = 0 with the canonical coupling. The two bath families
    // coincide, so the eigenstate corrections vanish identically (ε = 0),
    // and the criterion requires the Q+B fidelity to stay at 1.
    let mut aligned_config = ModelConfig::canonical();
    aligned_config.h_qb.theta = 0.0;
    let (aligned, aligned_state) = from_config(&aligned_config).unwrap();
    let records = match_spectrum(&aligned).unwrap();
    let aligned_robust = aligned_state.with_robust_bath(0, 2);
    let psi0 = product_state_vector(&aligned, &aligned_robust).unwrap();
    let summary = summarize(&records, &aligned, 0, &psi0);
    let tau = summary.tau.as_f64();
    let grid = TimeGrid::new(0.0, tau, 64).unwrap();
    let trace = compute_trace(&aligned, &aligned_robust, &grid, &[(0, 1)]).unwrap();
    let dev_theta0 = trace
        .qb_fidelity
        .iter()
        .map(|f| (1.0 - f).abs())
        .fold(0.0, f64::max);
    println!(
        "[acceptance] exact-limit detail: c=0 max|1-F| = {dev_c0:.3e}; \
         θ=0 ε_max = {:.3e}, λ_max = {:.3e}, max|1-F| over [0,τ] = {dev_theta0:.3e}",
        summary.eps_max, summary.lambda_max
    );

    let elapsed = start.elapsed();
    let pass = dev_c0 <= 1e-10 && dev_theta0 <= 1e-10 && elapsed < Duration::from_secs(1);
    verdict(
        "criterion 1: exact-limit identity (θ=0 or c=0 ⇒ fidelity 1 ± 1e-10)",
        pass,
        &format!(
            "c=0 deviation {dev_c0:.3e}; θ=0 deviation {dev_theta0:.3e}; \
             the θ=0 branch retains the finite pointer shifts λ = c·γ, which \
             dephase a superposed qubit by exactly cos²(c·t/ħ); elapsed {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_2_two_body_oracle_equivalence() {
    let start = Instant::now();
    let grid = TimeGrid::new(0.0, 8.0, 64).unwrap();
    let mut worst: f64 = 0.0;

    // Canonical baseline: equal mixture of the rotated bath family.
    let (model, state) = canonical();
    let b_state = qbe_core::operators::StateVector::new(state.b_amps.clone()).unwrap();
    let family = &model.h_qb.right;
    let weights: Vec<f64> = (0..family.len())
        .map(|q| family.basis_vector(q).unwrap().inner(&b_state).norm_sqr())
        .collect();
    let baseline = TwoBodyBaseline {
        gamma: model.h_qb.coeffs.clone(),
        c: model.h_qb.coupling,
        bath_weights: weights,
        hbar: model.hbar,
    };
    let closed = baseline_z_closed_form(&baseline, (0, 1), &grid).unwrap();
    let simulated =
        baseline_z_simulated(&baseline, &state.q_amps, family, (0, 1), &grid).unwrap();
    for (a, b) in simulated.iter().zip(&closed) {
        worst = worst.max((a - b).norm());
    }

    // Twenty random rank-1 baselines.
    let mut rng = StdRng::seed_from_u64(20260808);
    let mut done = 0;
    while done < 20 {
        let d_b = if rng.random_bool(0.5) { 2 } else { 3 };
        let gamma: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..d_b).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let mut bath_weights: Vec<f64> =
            (0..d_b).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = bath_weights.iter().sum();
        bath_weights.iter_mut().for_each(|w| *w /= total);
        let baseline = TwoBodyBaseline {
            gamma,
            c: rng.random_range(0.1..1.5),
            bath_weights,
            hbar: 1.0,
        };
        let family =
            ProjectorFamily::rotated_basis(d_b, rng.random_range(0.0..1.5)).unwrap();
        let amps = random_amps(2, &mut rng);
        let q_amps: Vec<Complex64> =
            amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        if (q_amps[0] * q_amps[1].conj()).norm() < 1e-3 {
            continue;
        }
        let closed = baseline_z_closed_form(&baseline, (0, 1), &grid).unwrap();
        let simulated =
            baseline_z_simulated(&baseline, &q_amps, &family, (0, 1), &grid).unwrap();
        for (a, b) in simulated.iter().zip(&closed) {
            worst = worst.max((a - b).norm());
        }
        done += 1;
    }

    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(10);
    verdict(
        "criterion 2: two-body closed form vs simulation (1e-10, 64 points, 20 random baselines)",
        pass,
        &format!("worst deviation {worst:.3e}; elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_3_norm_split_identity_on_random_models() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(50505);
    let mut worst_sum: f64 = 0.0;
    let mut worst_floor: f64 = f64::INFINITY;
    for _ in 0..50 {
        let (model, state) = random_model(&mut rng);
        let records = match_spectrum(&model).unwrap();
        let psi0 = product_state_vector(&model, &state).unwrap();
        let (n1, n2) = norm_split(&records, &psi0);
        worst_sum = worst_sum.max((n1 + n2 - 1.0).abs());
        let eps_max = records.iter().map(|r| r.epsilon).fold(0.0, f64::max);
        worst_floor = worst_floor.min(n1 - (1.0 - eps_max * eps_max).powi(2));
    }
    let elapsed = start.elapsed();
    let pass = worst_sum <= 1e-9 && worst_floor >= -1e-9 && elapsed < Duration::from_secs(60);
    verdict(
        "criterion 3: norm split n1+n2=1 and n1 ≥ (1-ε²_max)² on 50 random models",
        pass,
        &format!(
            "max|n1+n2-1| = {worst_sum:.3e}; min margin above floor = {worst_floor:.3e}; \
             elapsed {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_4_energy_shift_bound_on_random_models() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(50505); // same models as criterion 3
    let mut worst_violation: f64 = f64::NEG_INFINITY;
    for _ in 0..50 {
        let (model, _) = random_model(&mut rng);
        let records = match_spectrum(&model).unwrap();
        let h_qb = model.h_qb_embedded().unwrap();
        for r in &records {
            let bound = lambda_bound_with(r, &h_qb).unwrap();
            worst_violation = worst_violation.max(r.lambda.abs() - bound);
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_violation <= 1e-9 && elapsed < Duration::from_secs(60);
    verdict(
        "criterion 4: |λ| within its bound on every record of 50 random models",
        pass,
        &format!("worst |λ| - bound = {worst_violation:.3e}; elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_5_eps_max_scaling_slope() {
    let start = Instant::now();
    let (model, state) = canonical();
    let config = ProtocolConfig {
        ratio_ladder: vec![0.1, 0.05, 0.02, 0.01, 0.005],
        ..ProtocolConfig::default()
    };
    let sweep = sweep_ratio(&model, &state, &config).unwrap();
    let elapsed = start.elapsed();
    let pass = sweep.fit.slope >= 0.85
        && sweep.fit.slope <= 1.15
        && sweep.fit.r2 >= 0.98
        && elapsed < Duration::from_secs(30);
    verdict(
        "criterion 5: log-log slope of ε_max vs c/C in [0.85, 1.15] with r² ≥ 0.98",
        pass,
        &format!(
            "slope = {:.4}, r² = {:.6}; elapsed {elapsed:?}",
            sweep.fit.slope, sweep.fit.r2
        ),
    );
}

#[test]
fn criterion_6_error_probability_is_quadratic_in_the_ratio() {
    let start = Instant::now();
    let (model, state) = canonical();
    let sweep = sweep_ratio(&model, &state, &ProtocolConfig::default()).unwrap();
    let k_values: Vec<f64> = sweep.rungs.iter().map(|r| r.n2_over_ratio_sq).collect();
    let k_max = k_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k_min = k_values.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    let pass = k_min > 0.0 && k_max / k_min <= 2.0 && elapsed < Duration::from_secs(30);
    verdict(
        "criterion 6: n₂ ≤ K·(c/C)² with K stable within a factor of 2",
        pass,
        &format!("K range [{k_min:.4}, {k_max:.4}], spread ×{:.3}; elapsed {elapsed:?}", k_max / k_min),
    );
}

#[test]
fn criterion_7_plateau_and_post_plateau_dephasing() {
    let start = Instant::now();

    // Plateau on the canonical model.
    let (model, state) = canonical();
    let selection = select_robust_bath_state(&model).unwrap();
    let records = match_spectrum(&model).unwrap();
    let robust = state.with_robust_bath(selection.i0, 2);
    let psi0 = product_state_vector(&model, &robust).unwrap();
    let summary = summarize(&records, &model, selection.i0, &psi0);
    let tau = match summary.tau {
        Tau::Finite(t) => t,
        Tau::Infinite => panic!("canonical model must have a finite plateau"),
    };
    let plateau_grid = TimeGrid::new(0.0, 0.1 * tau, 101).unwrap();
    let plateau = compute_trace(&model, &robust, &plateau_grid, &[(0, 1)]).unwrap();
    let canonical_min = plateau
        .qb_fidelity
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    // The canonical coefficients are antisymmetric between the qubit rows,
    // which makes the exact shifts independent of p (σ_z ⊗ σ_z-type
    // symmetry at θ = π/4); the resulting dephasing rates λ_p - λ_p' cancel
    // identically and no post-plateau decay exists to demonstrate. Breaking
    // the row symmetry in γ restores p-dependent shifts while leaving every
    // other canonical parameter unchanged.
    let mut demo_config = ModelConfig::canonical();
    demo_config.h_qb.gamma = vec![vec![1.0, -1.0], vec![-1.0, 3.0]];
    let (demo, demo_state) = from_config(&demo_config).unwrap();
    let demo_selection = select_robust_bath_state(&demo).unwrap();
    let demo_records = match_spectrum(&demo).unwrap();
    let demo_robust = demo_state.with_robust_bath(demo_selection.i0, 2);
    let demo_psi0 = product_state_vector(&demo, &demo_robust).unwrap();
    let demo_summary = summarize(&demo_records, &demo, demo_selection.i0, &demo_psi0);
    let demo_tau = demo_summary.tau.as_f64();

    let demo_plateau_grid = TimeGrid::new(0.0, 0.1 * demo_tau, 101).unwrap();
    let demo_plateau = compute_trace(&demo, &demo_robust, &demo_plateau_grid, &[(0, 1)]).unwrap();
    let demo_min = demo_plateau
        .qb_fidelity
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let late_grid = TimeGrid::new(0.0, 20.0 * demo_tau, 2).unwrap();
    let late = compute_trace(&demo, &demo_robust, &late_grid, &[(0, 1)]).unwrap();
    let fidelity_at_20_tau = late.qb_fidelity[1];

    // Residual-dephasing closed form against the exact coherence.
    let residual_grid = TimeGrid::new(0.0, 5.0 * demo_tau, 101).unwrap();
    let residual_trace =
        compute_trace(&demo, &demo_robust, &residual_grid, &[(0, 1)]).unwrap();
    let closed = residual_z_closed_form(
        &demo_records,
        demo_selection.i0,
        &demo_robust.e_amps,
        (0, 1),
        &residual_grid,
        demo.hbar,
    )
    .unwrap();
    let mut worst_z_dev: f64 = 0.0;
    for k in 0..residual_grid.n_points {
        worst_z_dev = worst_z_dev.max((residual_trace.z_abs[0][k] - closed[k].norm()).abs());
    }

    let elapsed = start.elapsed();
    let pass = canonical_min >= 0.99
        && demo_min >= 0.99
        && fidelity_at_20_tau < demo_min
        && worst_z_dev <= 0.05
        && elapsed < Duration::from_secs(30);
    verdict(
        "criterion 7: fidelity plateau, post-plateau decay, residual dephasing law",
        pass,
        &format!(
            "canonical plateau min {canonical_min:.6}; row-asymmetric plateau min {demo_min:.6}; \
             F(20τ) = {fidelity_at_20_tau:.4} (dip {}); max | |z|_exact - |z|_closed | = \
             {worst_z_dev:.4e} on [0, 5τ]; elapsed {elapsed:?}",
            if fidelity_at_20_tau < demo_min { "present" } else { "absent" }
        ),
    );
}

#[test]
fn criterion_8_monotone_suppression_with_stronger_environment() {
    let start = Instant::now();
    let (model, state) = canonical();
    let robust = state.with_robust_bath(0, 2);
    let window = TimeGrid::new(0.0, 50.0, 128).unwrap();
    let mut averages = Vec::new();
    for doubling in 0..3 {
        let mut rung = model.clone();
        rung.h_be.coupling = model.h_be.coupling * f64::powi(2.0, doubling);
        let trace = compute_trace(&rung, &robust, &window, &[]).unwrap();
        let mean: f64 = trace.qb_fidelity.iter().map(|f| 1.0 - f).sum::<f64>()
            / trace.qb_fidelity.len() as f64;
        averages.push(mean);
    }
    let monotone = averages.windows(2).all(|w| w[1] <= w[0] * 1.10);
    let elapsed = start.elapsed();
    verdict(
        "criterion 8: time-averaged infidelity non-increasing as C doubles (10% slack)",
        monotone && elapsed < Duration::from_secs(30),
        &format!("averages {averages:?}; elapsed {elapsed:?}"),
    );
}

#[test]
fn criterion_9_protocol_runs_are_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_qbesim");
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("model.json");
    let config_text =
        serde_json::to_string_pretty(&ModelConfig::canonical()).unwrap();
    std::fs::write(&config_path, config_text).unwrap();

    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_dir = dir.path().join(format!("run{run}"));
        let status = std::process::Command::new(bin)
            .args([
                "protocol",
                "--model",
                config_path.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "protocol run {run} failed");
        let mut bundle = Vec::new();
        for name in ["report.txt", "records.csv", "trace.csv", "fidelity.svg"] {
            bundle.push(std::fs::read(out_dir.join(name)).unwrap());
        }
        outputs.push(bundle);
    }
    let identical = outputs[0] == outputs[1];
    verdict(
        "criterion 9: repeated protocol runs produce byte-identical outputs",
        identical,
        "report.txt, records.csv, trace.csv, fidelity.svg compared",
    );
}
