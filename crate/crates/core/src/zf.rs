//! Zero-forcing precoding.

use crate::fp::BeamMatrix;
use crate::linalg::{checked_gram_eigen, gram};
use crate::{CMatrix, Error, Result};

fn check(h: &CMatrix) -> Result<()> {
    if h.nrows() < h.ncols() {
        return Err(crate::error::invalid(format!(
            "zero forcing needs N ≥ K, got N={} K={}",
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(())
}

/// `tr((Hᴴ H)⁻¹)` with the condition-number guard applied.
pub fn gram_inverse_trace(h: &CMatrix) -> Result<f64> {
    check(h)?;
    let eig = checked_gram_eigen(&gram(h))?;
    Ok(eig.values.iter().map(|v| 1.0 / v).sum())
}

/// `W_ZF = √(p / tr((HᴴH)⁻¹)) · H (HᴴH)⁻¹`.
///
/// The pseudo-inverse is formed from a QR factorization `H = QR`, i.e.
/// `H (HᴴH)⁻¹ = Q R⁻ᴴ`, which keeps the nulling accurate to the conditioning
/// of `H` rather than of its Gram matrix.
pub fn zf_beamformer(h: &CMatrix, power_budget: f64) -> Result<BeamMatrix> {
    check(h)?;
    // Guard on the Gram spectrum before any factorization.
    checked_gram_eigen(&gram(h))?;
    let k = h.ncols();
    let qr = h.clone().qr();
    let r = qr.r();
    let q = qr.q();
    // Solve Rᴴ X = I for X = R⁻ᴴ.
    let identity = CMatrix::identity(k, k);
    let r_inv_h = r
        .adjoint()
        .solve_lower_triangular(&identity)
        .ok_or_else(|| Error::Numerical("triangular factor is singular".into()))?;
    let pinv = q * r_inv_h;
    // tr((HᴴH)⁻¹) = ‖R⁻¹‖_F² = ‖H (HᴴH)⁻¹‖_F²
    let trace_inv = crate::linalg::frobenius_sq(&pinv);
    let w = pinv.scale((power_budget / trace_inv).sqrt());
    Ok(BeamMatrix::new(w, power_budget))
}

/// Closed-form ZF sum-rate `Σ_k log₂(1 + p / σ_k² / tr((HᴴH)⁻¹))`.
pub fn zf_sum_rate(h: &CMatrix, power_budget: f64, noise: &[f64]) -> Result<f64> {
    if noise.len() != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} noise powers for {} users",
            noise.len(),
            h.ncols()
        )));
    }
    let t = gram_inverse_trace(h)?;
    Ok(noise
        .iter()
        .map(|s| (1.0 + power_budget / s / t).log2())
        .sum())
}
