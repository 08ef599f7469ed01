//! Outer-loop discrete LQR with integral action.
//!
//! The tracking error is integrated into `x_new(k+1) = x_new(k) + Δt (ref − y)`
//! and appended to the plant state, giving `z = [x; x_new]` and
//!
//! ```text
//! z(k+1) = [ A     0 ] z(k) + [ B_v ] v(k) + [ 0    ] ref(k)
//!          [ -ΔtC  I ]        [ 0   ]        [ Δt I ]
//! ```
//!
//! The gain comes from the discrete algebraic Riccati equation, solved by
//! iterating the Riccati difference equation from `P₀ = Q`.

use crate::error::{config_err, Error, Result};
use crate::linalg::Matrix;

pub const DARE_TOLERANCE: f64 = 1e-12;
pub const DARE_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    pub a_bar: Matrix,
    pub b_bar: Matrix,
    pub e_bar: Matrix,
    pub n: usize,
    pub r: usize,
}

impl AugmentedSystem {
    pub fn build(a: &Matrix, b_v: &Matrix, c: &Matrix, dt: f64) -> Result<Self> {
        let n = a.rows();
        let r = b_v.cols();
        if !a.is_square() || b_v.rows() != n || c.shape() != (r, n) {
            return Err(config_err(format!(
                "augmentation needs A n×n, B_v n×r, C r×n; got {:?}, {:?}, {:?}",
                a.shape(),
                b_v.shape(),
                c.shape()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config_err(format!("dt must be positive, got {dt}")));
        }
        let top = a.hstack(&Matrix::zeros(n, r))?;
        let bottom = c.scale(-dt)?.hstack(&Matrix::identity(r))?;
        let a_bar = top.vstack(&bottom)?;
        let b_bar = b_v.vstack(&Matrix::zeros(r, r))?;
        let e_bar = Matrix::zeros(n, r).vstack(&Matrix::identity(r).scale(dt)?)?;
        Ok(Self {
            a_bar,
            b_bar,
            e_bar,
            n,
            r,
        })
    }

    pub fn dim(&self) -> usize {
        self.n + self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrSolution {
    pub p: Matrix,
    pub k: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub iterations: usize,
    pub residual: f64,
}

impl LqrSolution {
    /// `−K z`.
    pub fn control(&self, z: &Matrix) -> Result<Matrix> {
        Ok(self.k.matmul(z)?.scale(-1.0)?)
    }

    /// `ρ(A − B K)`.
    pub fn closed_loop_radius(&self, a: &Matrix, b: &Matrix) -> Result<f64> {
        Ok(a.sub(&b.matmul(&self.k)?)?.spectral_radius()?)
    }
}

fn riccati_map(
    a: &Matrix,
    b: &Matrix,
    q: &Matrix,
    r: &Matrix,
    p: &Matrix,
) -> Result<(Matrix, Matrix)> {
    let at = a.transpose();
    let bt = b.transpose();
    let pa = p.matmul(a)?;
    let pb = p.matmul(b)?;
    let gain_lhs = r.add(&bt.matmul(&pb)?)?;
    let k = gain_lhs.inverse()?.matmul(&bt.matmul(&pa)?)?;
    let next = q
        .add(&at.matmul(&pa)?)?
        .sub(&at.matmul(&pb)?.matmul(&k)?)?
        .symmetrize()?;
    Ok((next, k))
}

/// Infinite-horizon discrete LQR for `z⁺ = A z + B v`, cost `Σ zᵀQz + vᵀRv`.
pub fn solve_dare(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> Result<LqrSolution> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || q.shape() != (n, n) || r.shape() != (b.cols(), b.cols()) {
        return Err(config_err(format!(
            "DARE shapes: A {:?}, B {:?}, Q {:?}, R {:?}",
            a.shape(),
            b.shape(),
            q.shape(),
            r.shape()
        )));
    }
    let r_min = r
        .sym_eig_min()
        .map_err(|_| config_err("R must be symmetric"))?;
    if r_min <= 0.0 {
        return Err(config_err(format!(
            "R must be positive definite (min eigenvalue {r_min})"
        )));
    }
    let q_min = q
        .sym_eig_min()
        .map_err(|_| config_err("Q must be symmetric"))?;
    if q_min < -1e-12 {
        return Err(config_err(format!(
            "Q must be positive semi-definite (min eigenvalue {q_min})"
        )));
    }

    let mut p = q.symmetrize()?;
    let mut last_change = f64::INFINITY;
    for iteration in 1..=DARE_MAX_ITERATIONS {
        let (next, _) = match riccati_map(a, b, q, r, &p) {
            Ok(step) => step,
            Err(Error::Linalg(_)) => {
                return Err(Error::DareNoConvergence {
                    iterations: iteration,
                    last_change,
                })
            }
            Err(other) => return Err(other),
        };
        last_change = next.max_abs_diff(&p)?;
        p = next;
        if last_change < DARE_TOLERANCE {
            let (image, k) = riccati_map(a, b, q, r, &p)?;
            let residual = image.max_abs_diff(&p)?;
            log::debug!("DARE converged in {iteration} iterations, residual {residual:e}");
            return Ok(LqrSolution {
                p,
                k,
                q: q.clone(),
                r: r.clone(),
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::DareNoConvergence {
        iterations: DARE_MAX_ITERATIONS,
        last_change,
    })
}

/// `x_new + Δt (ref − y)`.
pub fn integrator_step(x_new: &Matrix, reference: &Matrix, y: &Matrix, dt: f64) -> Result<Matrix> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(config_err(format!("dt must be positive, got {dt}")));
    }
    Ok(x_new.add(&reference.sub(y)?.scale(dt)?)?)
}

/// Componentwise `limit · tanh(v / limit)`.
pub fn soft_saturate(v: &Matrix, limits: &[f64]) -> Result<Matrix> {
    if limits.len() != v.rows() || v.cols() != 1 {
        return Err(config_err(format!(
            "saturation expects {} limits, got {}",
            v.rows(),
            limits.len()
        )));
    }
    if let Some(bad) = limits.iter().find(|l| l.is_nan() || **l <= 0.0) {
        return Err(config_err(format!(
            "saturation limit must be positive, got {bad}"
        )));
    }
    let out: Vec<f64> = v
        .as_slice()
        .iter()
        .zip(limits)
        .map(|(x, l)| {
            if l.is_infinite() {
                *x
            } else {
                l * (x / l).tanh()
            }
        })
        .collect();
    Ok(Matrix::column(&out)?)
}

/// Gain plus the optional saturation applied to its output.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub solution: LqrSolution,
    pub saturation: Option<Vec<f64>>,
}

impl Controller {
    pub fn control(&self, z: &Matrix) -> Result<Matrix> {
        let v = self.solution.control(z)?;
        match &self.saturation {
            Some(limits) => soft_saturate(&v, limits),
            None => Ok(v),
        }
    }
}
