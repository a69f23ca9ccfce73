//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is exact-by-construction where possible: matrix
//! exponentials go through the spectral decomposition of a Hermitian
//! generator, so propagators are unitary up to eigensolver accuracy rather
//! than series truncation. The eigensolver is a cyclic Jacobi iteration for
//! complex Hermitian matrices with a fixed sweep order, so repeated runs on
//! the same platform produce bit-identical results.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64;
use thiserror::Error;

use crate::tol;

/// Default cap on the dimension of any constructed operator.
pub const DEFAULT_MAX_DIM: usize = 4096;

static MAX_DIM: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_DIM);

/// Current cap on operator dimensions.
pub fn max_dim() -> usize {
    MAX_DIM.load(Ordering::Relaxed)
}

/// Override the dimension cap (e.g. from an environment variable).
pub fn set_max_dim(dim: usize) {
    MAX_DIM.store(dim, Ordering::Relaxed);
}

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("operator dimension {requested} exceeds the configured maximum {cap}")]
    CapacityExceeded { requested: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operator is not Hermitian: max|A - A\u{2020}| = {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("density operator violates its contract: {0}")]
    ContractViolation(String),
    #[error("Jacobi eigensolver did not converge within {max_sweeps} sweeps (off-diagonal {residual:.3e})")]
    NoConvergence { max_sweeps: usize, residual: f64 },
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("state norm {norm} deviates from 1 by more than {tol:.1e}")]
    NotNormalized { norm: f64, tol: f64 },
}

/// Dense square complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: vec![Complex64::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.set(k, k, Complex64::ONE);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (k, &d) in diag.iter().enumerate() {
            m.set(k, k, Complex64::new(d, 0.0));
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, OperatorError> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(OperatorError::ShapeMismatch(format!(
                    "expected {dim} columns, found {}",
                    row.len()
                )));
            }
        }
        Ok(Self { dim, entries: rows.iter().flatten().copied().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.dim + j] = v;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self { dim: self.dim, entries }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Self { dim: self.dim, entries }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self { dim: self.dim, entries: self.entries.iter().map(|a| a * factor).collect() }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.dim, v.dim(), "operator/vector dimensions differ");
        let amps = (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.get(i, j) * v.amplitudes()[j])
                    .sum()
            })
            .collect();
        StateVector::raw(amps)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max|A - A†| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tolerance: f64) -> bool {
        self.hermiticity_deviation() <= tolerance
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }
}

impl std::ops::Add for &ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator::add(self, rhs)
    }
}

impl std::ops::Sub for &ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &ComplexOperator) -> ComplexOperator {
        ComplexOperator::sub(self, rhs)
    }
}

impl std::ops::Mul for &ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.matmul(rhs)
    }
}

/// Normalized complex state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Build from amplitudes that must already be normalized to 1e-12.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, OperatorError> {
        let norm = l2_norm(&amplitudes);
        if (norm - 1.0).abs() > tol::STATE_NORM {
            return Err(OperatorError::NotNormalized { norm, tol: tol::STATE_NORM });
        }
        Ok(Self { amplitudes })
    }

    /// Build from arbitrary amplitudes, rescaling to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self, OperatorError> {
        let norm = l2_norm(&amplitudes);
        if norm <= 0.0 {
            return Err(OperatorError::ZeroVector);
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    /// Internal constructor for vectors produced by unitary maps.
    pub(crate) fn raw(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    /// Computational basis vector e_k.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index out of range");
        let mut amplitudes = vec![Complex64::ZERO; dim];
        amplitudes[k] = Complex64::ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "vector dimensions differ");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |self⟩ ⊗ |other⟩.
    pub fn kron(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Self { amplitudes }
    }

    /// Density operator |self⟩⟨self|.
    pub fn density(&self) -> ComplexOperator {
        ComplexOperator::from_fn(self.dim(), |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        })
    }

    pub fn scale_phase(&self, phase: Complex64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * phase).collect() }
    }

    pub fn sub(&self, other: &Self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a - b)
            .collect()
    }
}

pub fn l2_norm(amplitudes: &[Complex64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// A ⊗ B with row-major index convention:
/// `entry[(i1·dB + i2), (j1·dB + j2)] = A[i1,j1]·B[i2,j2]`.
pub fn tensor_product(
    a: &ComplexOperator,
    b: &ComplexOperator,
) -> Result<ComplexOperator, OperatorError> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(OperatorError::CapacityExceeded { requested: usize::MAX, cap: max_dim() })?;
    if dim > max_dim() {
        return Err(OperatorError::CapacityExceeded { requested: dim, cap: max_dim() });
    }
    let (da, db) = (a.dim(), b.dim());
    let mut out = ComplexOperator::zeros(dim);
    for i1 in 0..da {
        for j1 in 0..da {
            let aij = a.get(i1, j1);
            if aij == Complex64::ZERO {
                continue;
            }
            for i2 in 0..db {
                for j2 in 0..db {
                    out.set(i1 * db + i2, j1 * db + j2, aij * b.get(i2, j2));
                }
            }
        }
    }
    Ok(out)
}

fn decompose_index(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

fn compose_index(indices: &[usize], dims: &[usize]) -> usize {
    indices
        .iter()
        .zip(dims)
        .fold(0, |acc, (&i, &d)| acc * d + i)
}

/// Lift `op`, acting on the factors named by `slots`, to the full product
/// space described by `dims` (identity on the remaining factors). Factor
/// order is fixed; `slots` must be strictly ascending.
pub fn embed(
    op: &ComplexOperator,
    slots: &[usize],
    dims: &[usize],
) -> Result<ComplexOperator, OperatorError> {
    if slots.windows(2).any(|w| w[0] >= w[1]) || slots.iter().any(|&s| s >= dims.len()) {
        return Err(OperatorError::ShapeMismatch(format!(
            "slot mask {slots:?} is not a strictly ascending subset of 0..{}",
            dims.len()
        )));
    }
    let masked_dim: usize = slots.iter().map(|&s| dims[s]).product();
    if masked_dim != op.dim() {
        return Err(OperatorError::ShapeMismatch(format!(
            "operator dimension {} does not match masked factor product {masked_dim}",
            op.dim()
        )));
    }
    let total: usize = dims.iter().product();
    if total > max_dim() {
        return Err(OperatorError::CapacityExceeded { requested: total, cap: max_dim() });
    }
    let masked_dims: Vec<usize> = slots.iter().map(|&s| dims[s]).collect();
    let mut out = ComplexOperator::zeros(total);
    for r in 0..total {
        let ri = decompose_index(r, dims);
        for c in 0..total {
            let ci = decompose_index(c, dims);
            let mut unmasked_equal = true;
            for k in 0..dims.len() {
                if !slots.contains(&k) && ri[k] != ci[k] {
                    unmasked_equal = false;
                    break;
                }
            }
            if !unmasked_equal {
                continue;
            }
            let mr: Vec<usize> = slots.iter().map(|&s| ri[s]).collect();
            let mc: Vec<usize> = slots.iter().map(|&s| ci[s]).collect();
            out.set(
                r,
                c,
                op.get(compose_index(&mr, &masked_dims), compose_index(&mc, &masked_dims)),
            );
        }
    }
    Ok(out)
}

/// Reduced density operator on the `keep` factors of a density operator on
/// the product space described by `dims`. The input must be Hermitian with
/// unit trace.
pub fn partial_trace(
    rho: &ComplexOperator,
    keep: &[usize],
    dims: &[usize],
) -> Result<ComplexOperator, OperatorError> {
    let total: usize = dims.iter().product();
    if rho.dim() != total {
        return Err(OperatorError::ShapeMismatch(format!(
            "density operator dimension {} does not match factor product {total}",
            rho.dim()
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&s| s >= dims.len()) {
        return Err(OperatorError::ShapeMismatch(format!(
            "keep mask {keep:?} is not a strictly ascending subset of 0..{}",
            dims.len()
        )));
    }
    if !rho.is_hermitian(tol::TRACE) {
        return Err(OperatorError::ContractViolation(format!(
            "input is not Hermitian within {:.1e}",
            tol::TRACE
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
        return Err(OperatorError::ContractViolation(format!(
            "input trace {tr} is not 1 within {:.1e}",
            tol::TRACE
        )));
    }

    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product::<usize>().max(1);

    let mut out = ComplexOperator::zeros(kept_total);
    let mut full_r = vec![0usize; dims.len()];
    let mut full_c = vec![0usize; dims.len()];
    for kr in 0..kept_total {
        let kri = decompose_index(kr, &kept_dims);
        for kc in 0..kept_total {
            let kci = decompose_index(kc, &kept_dims);
            let mut sum = Complex64::ZERO;
            for t in 0..traced_total {
                let ti = decompose_index(t, &traced_dims);
                for (slot, &f) in keep.iter().enumerate() {
                    full_r[f] = kri[slot];
                    full_c[f] = kci[slot];
                }
                for (slot, &f) in traced.iter().enumerate() {
                    full_r[f] = ti[slot];
                    full_c[f] = ti[slot];
                }
                sum += rho.get(compose_index(&full_r, dims), compose_index(&full_c, dims));
            }
            out.set(kr, kc, sum);
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian operator: ascending real eigenvalues and
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, aligned with `eigenvalues`.
    vectors: ComplexOperator,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &ComplexOperator {
        &self.vectors
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        StateVector::raw((0..self.dim()).map(|i| self.vectors.get(i, k)).collect())
    }

    /// VΛV†.
    pub fn reconstruct(&self) -> ComplexOperator {
        let n = self.dim();
        ComplexOperator::from_fn(n, |i, j| {
            (0..n)
                .map(|k| {
                    self.vectors.get(i, k)
                        * self.eigenvalues[k]
                        * self.vectors.get(j, k).conj()
                })
                .sum()
        })
    }

    /// V f(Λ) V† for a complex-valued function of the eigenvalues.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> ComplexOperator {
        let n = self.dim();
        let phases: Vec<Complex64> = self.eigenvalues.iter().map(|&e| f(e)).collect();
        ComplexOperator::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * phases[k] * self.vectors.get(j, k).conj())
                .sum()
        })
    }

    /// Coefficients ⟨v_k|ψ⟩ of a state in the eigenbasis.
    pub fn coefficients(&self, psi: &StateVector) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| self.vectors.get(i, k).conj() * psi.amplitudes()[i])
                    .sum()
            })
            .collect()
    }

    /// Reassemble a state from eigenbasis coefficients.
    pub fn synthesize(&self, coefficients: &[Complex64]) -> StateVector {
        let n = self.dim();
        StateVector::raw(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|k| self.vectors.get(i, k) * coefficients[k])
                        .sum()
                })
                .collect(),
        )
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a complex Hermitian matrix by cyclic Jacobi
/// rotations. The pivot order is fixed, so the output is deterministic for
/// identical input on the same platform. Entries that are exactly zero are
/// never rotated, which preserves any block structure of the input exactly.
pub fn hermitian_eig(h: &ComplexOperator) -> Result<EigenDecomposition, OperatorError> {
    let dev = h.hermiticity_deviation();
    if dev > tol::HERMITICITY {
        return Err(OperatorError::NotHermitian { deviation: dev, tol: tol::HERMITICITY });
    }
    let n = h.dim();
    if n == 0 {
        return Err(OperatorError::ShapeMismatch("empty operator".into()));
    }

    let mut a = h.clone();
    let mut v = ComplexOperator::identity(n);

    let mut converged = false;
    let mut last_off = 0.0;
    for sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off_sum = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off_sum += a.get(p, q).norm();
            }
        }
        last_off = off_sum;
        if off_sum == 0.0 {
            converged = true;
            break;
        }
        let thresh = if sweep < 3 { 0.2 * off_sum / (n * n) as f64 } else { 0.0 };

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                let dp = a.get(p, p).re;
                let dq = a.get(q, q).re;
                let g = 100.0 * r;
                // Late in the iteration, wipe entries that can no longer
                // affect the diagonal at working precision.
                if sweep > 4 && dp.abs() + g == dp.abs() && dq.abs() + g == dq.abs() {
                    a.set(p, q, Complex64::ZERO);
                    a.set(q, p, Complex64::ZERO);
                    continue;
                }
                if r <= thresh || r == 0.0 {
                    continue;
                }
                let w = apq / r;
                let h_gap = dq - dp;
                let t = if h_gap.abs() + g == h_gap.abs() {
                    r / h_gap
                } else {
                    let theta = 0.5 * h_gap / r;
                    let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        t = -t;
                    }
                    t
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- A·U with U = [[c, s·w], [-s·w̄, c]] on columns (p, q).
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - s * w.conj() * aiq);
                    a.set(i, q, s * w * aip + c * aiq);
                }
                // A <- U†·A on rows (p, q).
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, c * apj - s * w * aqj);
                    a.set(q, j, s * w.conj() * apj + c * aqj);
                }
                // The pivot is annihilated by construction.
                a.set(p, q, Complex64::ZERO);
                a.set(q, p, Complex64::ZERO);
                // V <- V·U.
                for i in 0..n {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * w.conj() * viq);
                    v.set(i, q, s * w * vip + c * viq);
                }
            }
        }
    }
    if !converged {
        return Err(OperatorError::NoConvergence {
            max_sweeps: JACOBI_MAX_SWEEPS,
            residual: last_off,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        a.get(x, x)
            .re
            .partial_cmp(&a.get(y, y).re)
            .unwrap()
            .then(x.cmp(&y))
    });

    let eigenvalues: Vec<f64> = order.iter().map(|&k| a.get(k, k).re).collect();
    let mut vectors = ComplexOperator::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        // Fix the gauge: make the largest-modulus component real positive.
        let mut best = 0usize;
        let mut best_norm = 0.0;
        for i in 0..n {
            let m = v.get(i, k).norm();
            if m > best_norm {
                best_norm = m;
                best = i;
            }
        }
        let pivot = v.get(best, k);
        let phase = if best_norm > 0.0 { pivot.conj() / best_norm } else { Complex64::ONE };
        for i in 0..n {
            vectors.set(i, col, v.get(i, k) * phase);
        }
    }

    Ok(EigenDecomposition { eigenvalues, vectors })
}

/// exp(-i·H·t/ħ) through the spectral decomposition of `h`.
pub fn propagator(
    h: &ComplexOperator,
    t: f64,
    hbar: f64,
) -> Result<ComplexOperator, OperatorError> {
    let eig = hermitian_eig(h)?;
    Ok(propagator_from_eig(&eig, t, hbar))
}

/// exp(-i·H·t/ħ) when the eigendecomposition of H is already known.
pub fn propagator_from_eig(eig: &EigenDecomposition, t: f64, hbar: f64) -> ComplexOperator {
    eig.map_spectrum(|e| (-Complex64::i() * e * t / hbar).exp())
}
