//! Quantities that need the true effectiveness `Λ`. Test and diagnostics only.

use crate::error::{Error, Result};
use crate::linalg::{LinalgError, Matrix};
use crate::plant::Effectiveness;

/// `θ_v* = ((BΛ)ᵀ (BΛΛBᵀ)⁻¹)ᵀ`, the parameter for which `BΛθ_v*ᵀ = I`.
pub fn ideal_theta(b: &Matrix, lam: &Effectiveness) -> Result<Matrix> {
    let b_lam = b.scale_columns(lam.as_slice())?;
    match b_lam.right_pinv() {
        Ok(p) => Ok(p.transpose()),
        Err(LinalgError::RankDeficient) => Err(Error::Assumption(
            "B·Λ lost full row rank; no ideal parameter exists".into(),
        )),
        Err(e) => Err(e.into()),
    }
}

/// `θ_v − θ_v*`.
pub fn deviation(theta_v: &Matrix, b: &Matrix, lam: &Effectiveness) -> Result<Matrix> {
    Ok(theta_v.sub(&ideal_theta(b, lam)?)?)
}

/// `tr(θ̃ᵀ Γ⁻¹ θ̃ Λ)`.
pub fn lyapunov_value(
    theta_v: &Matrix,
    gamma: &Matrix,
    b: &Matrix,
    lam: &Effectiveness,
) -> Result<f64> {
    let dev = deviation(theta_v, b, lam)?;
    weighted_inner(&dev, &gamma.inverse()?, &dev, lam)
}

/// `tr(Xᵀ W Y Λ)`, summed entrywise to avoid forming the `m × m` product.
fn weighted_inner(x: &Matrix, w: &Matrix, y: &Matrix, lam: &Effectiveness) -> Result<f64> {
    let wy = w.matmul(y)?;
    let mut total = 0.0;
    for i in 0..x.rows() {
        for (j, l) in lam.as_slice().iter().enumerate() {
            total += x.get(i, j) * wy.get(i, j) * l;
        }
    }
    Ok(total)
}

/// `V(θ_next) − V(θ)` at fixed `Λ`, expanded around `θ` so that the small
/// difference is not lost to cancellation between two large values.
pub fn lyapunov_increment(
    theta_v: &Matrix,
    theta_next: &Matrix,
    gamma: &Matrix,
    b: &Matrix,
    lam: &Effectiveness,
) -> Result<f64> {
    let dev = deviation(theta_v, b, lam)?;
    let step = theta_next.sub(theta_v)?;
    let g_inv = gamma.inverse()?;
    Ok(weighted_inner(&step, &g_inv, &dev, lam)?
        + weighted_inner(&dev, &g_inv, &step, lam)?
        + weighted_inner(&step, &g_inv, &step, lam)?)
}

/// `θ̃ᵀ v`, the actuator-space mismatch driving adaptation.
pub fn regressor(theta_v: &Matrix, b: &Matrix, lam: &Effectiveness, v: &Matrix) -> Result<Matrix> {
    Ok(deviation(theta_v, b, lam)?.transpose().matmul(v)?)
}

/// `−|BΛθ̃ᵀv|² / σ²`, the guaranteed per-step decrease.
pub fn decrease_bound(
    theta_v: &Matrix,
    b: &Matrix,
    lam: &Effectiveness,
    v: &Matrix,
    sigma_sq: f64,
) -> Result<f64> {
    let y = b
        .scale_columns(lam.as_slice())?
        .matmul(&regressor(theta_v, b, lam, v)?)?;
    Ok(-y.dot(&y)? / sigma_sq)
}
