//! Shared generators for randomized model tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qbe_core::model::{from_config, ModelConfig, ProductState, TripartiteModel};
use rand::rngs::StdRng;
use rand::Rng;

pub fn random_amps(n: usize, rng: &mut StdRng) -> Vec<[f64; 2]> {
    let raw: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    raw.iter().map(|z| [z.re / norm, z.im / norm]).collect()
}

/// A random valid model with dimensions at most (2, 3, 3). The coupling
/// ratio is drawn log-uniformly from `ratio_range`.
pub fn random_model(
    rng: &mut StdRng,
    ratio_range: (f64, f64),
) -> (TripartiteModel, ProductState) {
    let d_b = if rng.random_bool(0.5) { 2 } else { 3 };
    let d_e = if rng.random_bool(0.5) { 2 } else { 3 };
    let big_c = rng.random_range(0.5..2.0);
    let log_ratio = rng.random_range(ratio_range.0.ln()..ratio_range.1.ln());
    let c = log_ratio.exp() * big_c;
    let gamma: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..d_b).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let kappa: Vec<Vec<f64>> = (0..d_b)
        .map(|_| (0..d_e).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let config = ModelConfig {
        dims: [2, d_b, d_e],
        hbar: 1.0,
        h_qb: qbe_core::model::QbInteractionConfig {
            c,
            gamma,
            bath_family: qbe_core::model::BathFamilyKind::Rotated,
            theta: rng.random_range(0.0..std::f64::consts::PI),
        },
        h_be: qbe_core::model::BeInteractionConfig { coupling: big_c, kappa },
        initial: qbe_core::model::InitialConfig {
            q_amps: random_amps(2, rng),
            b_amps: random_amps(d_b, rng),
            e_amps: random_amps(d_e, rng),
        },
    };
    from_config(&config).expect("random config is valid")
}
