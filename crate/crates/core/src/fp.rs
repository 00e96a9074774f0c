//! Fractional-programming machinery for sum-rate maximization.
//!
//! With auxiliaries `λ` (real) and `β` (complex) the surrogate
//!
//! ```text
//! L = Σ ln(1+λ_k) − Σ λ_k + Σ (1+λ_k)[2Re{β_k* a_k} − |β_k|² B_k],
//! a_k = w_kᴴ h_k,  B_k = σ_k² + Σ_i |w_iᴴ h_k|²
//! ```
//!
//! is maximized in closed form by `λ_k = γ_k`, `β_k = a_k / B_k`, where it
//! equals the sum-rate. For fixed auxiliaries it is a concave quadratic in
//! `W`, maximized by `W = (C + μI)⁻¹ D` with `μ ≥ 0` set by the sum-power
//! constraint.
//!
//! Rates are in bits/s/Hz. [`fp_objective`] reports `L / ln 2` so that it
//! matches [`sum_rate`] at the optimal auxiliaries.

use std::f64::consts::LN_2;

use nalgebra::DVector;

use crate::linalg::{frobenius_sq, HermitianEigen};
use crate::{CMatrix, Complex64, Error, Result};

/// Complex N×K precoder together with its sum-power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamMatrix {
    pub w: CMatrix,
    pub power_budget: f64,
}

impl BeamMatrix {
    pub fn new(w: CMatrix, power_budget: f64) -> Self {
        Self { w, power_budget }
    }

    /// `tr(W Wᴴ)`.
    pub fn transmit_power(&self) -> f64 {
        frobenius_sq(&self.w)
    }

    /// Matched-filter precoder: column `k` is `h_k / ‖h_k‖`, all columns
    /// scaled together to spend exactly the budget.
    pub fn matched_filter(h: &CMatrix, power_budget: f64) -> Self {
        let k = h.ncols();
        let mut w = h.clone();
        for mut col in w.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col.unscale_mut(norm);
            }
        }
        let total = frobenius_sq(&w);
        if total > 0.0 {
            w.scale_mut((power_budget / total).sqrt());
        }
        debug_assert_eq!(w.ncols(), k);
        Self { w, power_budget }
    }
}

/// Auxiliary variables of the quadratic transform.
#[derive(Debug, Clone, PartialEq)]
pub struct FpAuxiliaries {
    pub lambda: Vec<f64>,
    pub beta: Vec<Complex64>,
}

fn check_dims(h: &CMatrix, w: &CMatrix, noise: &[f64]) -> Result<()> {
    if h.nrows() != w.nrows() || h.ncols() != w.ncols() || h.ncols() != noise.len() {
        return Err(Error::DimensionMismatch(format!(
            "H is {}x{}, W is {}x{}, {} noise powers",
            h.nrows(),
            h.ncols(),
            w.nrows(),
            w.ncols(),
            noise.len()
        )));
    }
    if noise.iter().any(|&s| !(s > 0.0)) {
        return Err(crate::error::invalid("noise powers must be positive"));
    }
    Ok(())
}

/// Per-user received terms: `gains[k][j] = h_kᴴ w_j`.
fn cross_gains(h: &CMatrix, w: &CMatrix) -> CMatrix {
    h.adjoint() * w
}

/// SINR of every user.
pub fn compute_sinr(h: &CMatrix, w: &CMatrix, noise: &[f64]) -> Result<Vec<f64>> {
    check_dims(h, w, noise)?;
    let m = cross_gains(h, w);
    Ok((0..h.ncols())
        .map(|k| {
            let total: f64 = m.row(k).iter().map(|z| z.norm_sqr()).sum();
            let signal = m[(k, k)].norm_sqr();
            // `total - signal` can lose the interference entirely when it is tiny.
            let interference: f64 = m
                .row(k)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            debug_assert!(total >= signal);
            signal / (interference + noise[k])
        })
        .collect())
}

/// `Σ_k log₂(1 + γ_k)`.
pub fn sum_rate(h: &CMatrix, w: &CMatrix, noise: &[f64]) -> Result<f64> {
    Ok(compute_sinr(h, w, noise)?
        .iter()
        .map(|g| (1.0 + g).log2())
        .sum())
}

/// Conditionally optimal auxiliaries `λ_k = γ_k`, `β_k = a_k / B_k`.
pub fn update_auxiliaries(h: &CMatrix, w: &CMatrix, noise: &[f64]) -> Result<FpAuxiliaries> {
    let lambda = compute_sinr(h, w, noise)?;
    let m = cross_gains(h, w);
    let beta = (0..h.ncols())
        .map(|k| {
            let a = m[(k, k)].conj();
            let b = noise[k] + m.row(k).iter().map(|z| z.norm_sqr()).sum::<f64>();
            a / b
        })
        .collect();
    Ok(FpAuxiliaries { lambda, beta })
}

/// Surrogate objective `L`, in bits (`L_nats / ln 2`).
pub fn fp_objective(h: &CMatrix, w: &CMatrix, aux: &FpAuxiliaries, noise: &[f64]) -> Result<f64> {
    check_dims(h, w, noise)?;
    let k_users = h.ncols();
    if aux.lambda.len() != k_users || aux.beta.len() != k_users {
        return Err(Error::DimensionMismatch("auxiliaries do not match user count".into()));
    }
    if aux.lambda.iter().any(|&l| !(l > -1.0)) {
        return Err(crate::error::invalid("auxiliary λ must exceed -1"));
    }
    let m = cross_gains(h, w);
    let mut nats = 0.0;
    for k in 0..k_users {
        let lam = aux.lambda[k];
        let beta = aux.beta[k];
        let a = m[(k, k)].conj();
        let signal = a.norm_sqr();
        let rest: f64 = noise[k]
            + m.row(k)
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, z)| z.norm_sqr())
                .sum::<f64>();
        let b = signal + rest;
        let gamma = signal / rest;
        // Completed square of ln(1+λ) − λ + (1+λ)(2Re(β*a) − |β|²B): the
        // expanded form cancels terms of size λ and loses precision at high SINR.
        nats += lam.ln_1p() + (gamma - lam) / (1.0 + gamma) - (1.0 + lam) * b * (beta - a / b).norm_sqr();
    }
    Ok(nats / LN_2)
}

/// `C = Σ (1+λ_k)|β_k|² h_k h_kᴴ` and `D = [(1+λ_k) β_k* h_k]_k`.
pub fn build_quadratic_terms(h: &CMatrix, aux: &FpAuxiliaries) -> (CMatrix, CMatrix) {
    let n = h.nrows();
    let mut c = CMatrix::zeros(n, n);
    let mut d = CMatrix::zeros(n, h.ncols());
    for (k, hk) in h.column_iter().enumerate() {
        let weight = (1.0 + aux.lambda[k]) * aux.beta[k].norm_sqr();
        c += (hk * hk.adjoint()).scale(weight);
        d.set_column(k, &(hk * ((1.0 + aux.lambda[k]) * aux.beta[k].conj())));
    }
    (c, d)
}

/// `tr(Wᴴ C W) − 2 Re tr(Wᴴ D)`, the quantity minimized by the beamformer update.
pub fn beamformer_cost(c: &CMatrix, d: &CMatrix, w: &CMatrix) -> f64 {
    let quad: Complex64 = (w.adjoint() * c * w).trace();
    let lin: Complex64 = (w.adjoint() * d).trace();
    quad.re - 2.0 * lin.re
}

/// Relative cutoff below which an eigenvalue of `C` counts as zero.
const EIGEN_RTOL: f64 = 1e-12;
/// Bisection stops once the power residual is this fraction of the budget.
const RIDGE_POWER_RTOL: f64 = 1e-10;
/// ... or once the bracket has shrunk to this fraction of its initial top.
const RIDGE_WIDTH_RTOL: f64 = 1e-12;
const MAX_BRACKET_DOUBLINGS: usize = 2000;

/// Spectral form of the power-constrained quadratic: with `C = V Λ Vᴴ` and
/// `q_n = ‖(Vᴴ D)_n‖²`, the transmit power of `(C+μI)⁻¹D` is
/// `Σ_n q_n / (Λ_n + μ)²`.
#[derive(Debug, Clone)]
pub struct RidgeProblem {
    eigen: HermitianEigen,
    projected: CMatrix,
    weights: DVector<f64>,
    cutoff: f64,
    d_energy: f64,
}

impl RidgeProblem {
    pub fn new(c: &CMatrix, d: &CMatrix) -> Result<Self> {
        if c.nrows() != d.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "C is {}x{} but D has {} rows",
                c.nrows(),
                c.ncols(),
                d.nrows()
            )));
        }
        let mut eigen = HermitianEigen::new(c)?;
        // C is PSD; negative eigenvalues are round-off.
        eigen.values.iter_mut().for_each(|v| *v = v.max(0.0));
        let projected = eigen.vectors.adjoint() * d;
        let weights = DVector::from_iterator(
            projected.nrows(),
            projected.row_iter().map(|r| r.iter().map(|z| z.norm_sqr()).sum::<f64>()),
        );
        let cutoff = EIGEN_RTOL * eigen.max_abs();
        Ok(Self {
            eigen,
            projected,
            weights,
            cutoff,
            d_energy: frobenius_sq(d),
        })
    }

    /// Transmit power of `(C + μI)⁻¹ D`. At `μ = 0` the pseudo-inverse is used.
    pub fn power(&self, mu: f64) -> f64 {
        self.eigen
            .values
            .iter()
            .zip(self.weights.iter())
            .map(|(&lam, &q)| {
                if mu == 0.0 {
                    if lam > self.cutoff {
                        q / (lam * lam)
                    } else {
                        0.0
                    }
                } else {
                    q / ((lam + mu) * (lam + mu))
                }
            })
            .sum()
    }

    /// Smallest `μ ≥ 0` whose precoder meets the power budget.
    pub fn solve(&self, budget: f64) -> Result<f64> {
        if !(budget > 0.0) {
            return Err(crate::error::invalid("power budget must be positive"));
        }
        if self.power(0.0) <= budget {
            return Ok(0.0);
        }
        let mut hi = (self.d_energy / budget).sqrt();
        let mut doublings = 0;
        while self.power(hi) >= budget {
            hi *= 2.0;
            doublings += 1;
            if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
                return Err(Error::Numerical(
                    "could not bracket the ridge multiplier".into(),
                ));
            }
        }
        let mut lo = 0.0;
        let width_tol = RIDGE_WIDTH_RTOL * hi;
        while hi - lo > width_tol {
            let mid = 0.5 * (lo + hi);
            let pw = self.power(mid);
            if (pw - budget).abs() <= RIDGE_POWER_RTOL * budget {
                return Ok(mid);
            }
            if pw > budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // `hi` always satisfies the budget.
        Ok(hi)
    }

    /// `(C + μI)⁻¹ D` (pseudo-inverse when `μ = 0`).
    pub fn precoder(&self, mu: f64) -> CMatrix {
        let mut scaled = self.projected.clone();
        for (n, mut row) in scaled.row_iter_mut().enumerate() {
            let lam = self.eigen.values[n];
            let inv = if mu == 0.0 {
                if lam > self.cutoff {
                    1.0 / lam
                } else {
                    0.0
                }
            } else {
                1.0 / (lam + mu)
            };
            row.scale_mut(inv);
        }
        &self.eigen.vectors * scaled
    }
}

/// Ridge multiplier `μ` for the power-constrained quadratic `(C, D, p)`.
pub fn solve_ridge_multiplier(c: &CMatrix, d: &CMatrix, budget: f64) -> Result<f64> {
    RidgeProblem::new(c, d)?.solve(budget)
}

/// Result of the closed-form beamformer step.
#[derive(Debug, Clone)]
pub struct BeamformerUpdate {
    pub beam: BeamMatrix,
    pub ridge_multiplier: f64,
}

/// Optimal `W` for fixed auxiliaries under `tr(W Wᴴ) ≤ p`.
pub fn update_beamformer(
    h: &CMatrix,
    aux: &FpAuxiliaries,
    budget: f64,
) -> Result<BeamformerUpdate> {
    if aux.lambda.len() != h.ncols() || aux.beta.len() != h.ncols() {
        return Err(Error::DimensionMismatch("auxiliaries do not match user count".into()));
    }
    let (c, d) = build_quadratic_terms(h, aux);
    let problem = RidgeProblem::new(&c, &d)?;
    let mu = problem.solve(budget)?;
    Ok(BeamformerUpdate {
        beam: BeamMatrix::new(problem.precoder(mu), budget),
        ridge_multiplier: mu,
    })
}
