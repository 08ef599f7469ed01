//! Discrete adaptive control allocator.
//!
//! The allocator maps the virtual command `v` (length `r`) to actuator
//! commands `u = θ_vᵀ v` (length `m`) and adapts `θ_v` from the measured net
//! moment `B Λ u` alone. It never sees the effectiveness matrix `Λ`.
//!
//! One step, given `v(k)` and the measurement `m(k) = B Λ u(k)`:
//!
//! ```text
//! σ²(k)    = 1 + λ̄ · vᵀ Γ v
//! ε(k)     = (v − m) / σ²
//! θ_v(k+1) = θ_v + Γ v εᵀ B
//! ξ(k+1)   = A_m ξ + m − v
//! ξ_m(k+1) = A_m ξ_m                      (open-loop reference model)
//!          = A_m ξ_m − l (ξ − ξ_m)        (closed-loop reference model)
//! ```
//!
//! `λ̄` bounds `λ_max(B Λ Bᵀ)` from above. Since every entry of `Λ` lies in
//! `(0, 1]`, `λ_max(B Bᵀ)` is such a bound and is the default.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::linalg::Matrix;

/// Spectral radii at or above `1 - BOUNDARY_BAND` are reported as boundary cases.
pub const BOUNDARY_BAND: f64 = 1e-9;

const GAMMA_SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceMode {
    OpenLoop,
    #[default]
    ClosedLoop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInit {
    /// `θ_v(0) = (Bᵀ(BBᵀ)⁻¹)ᵀ`, exact for a healthy actuator set.
    #[default]
    Pinv,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocatorConfig {
    gamma: Matrix,
    a_m: Matrix,
    l: f64,
    lambda_bar: f64,
    b_alloc: Matrix,
    mode: ReferenceMode,
}

impl AllocatorConfig {
    pub fn new(
        b_alloc: Matrix,
        gamma: Matrix,
        a_m: Matrix,
        mode: ReferenceMode,
        l: f64,
    ) -> Result<Self> {
        let r = b_alloc.rows();
        if gamma.shape() != (r, r) {
            return Err(config_err(format!(
                "Gamma must be {r}x{r}, got {:?}",
                gamma.shape()
            )));
        }
        if a_m.shape() != (r, r) {
            return Err(config_err(format!(
                "A_m must be {r}x{r}, got {:?}",
                a_m.shape()
            )));
        }
        if !l.is_finite() {
            return Err(config_err("l must be finite"));
        }
        let gamma_check = check_gamma(&gamma);
        if let Some(bad) = gamma_check.iter().find(|c| c.status != CheckStatus::Pass) {
            return Err(config_err(format!(
                "Gamma: {} (value {:e})",
                bad.name, bad.value
            )));
        }
        let gram = b_alloc.matmul(&b_alloc.transpose())?;
        if gram.inverse().is_err() {
            return Err(config_err("allocation matrix B must have full row rank"));
        }
        let lambda_bar = gram.sym_eig_max()?;
        Ok(Self {
            gamma,
            a_m,
            l,
            lambda_bar,
            b_alloc,
            mode,
        })
    }

    /// Overrides the default `λ̄ = λ_max(BBᵀ)`; smaller values are rejected.
    pub fn with_lambda_bar(mut self, lambda_bar: f64) -> Result<Self> {
        let floor = self.nominal_lambda_max()?;
        if !lambda_bar.is_finite() || lambda_bar < floor * (1.0 - 1e-12) {
            return Err(config_err(format!(
                "lambda_bar {lambda_bar} is below lambda_max(B B^T) = {floor}"
            )));
        }
        self.lambda_bar = lambda_bar;
        Ok(self)
    }

    pub fn gamma(&self) -> &Matrix {
        &self.gamma
    }

    pub fn a_m(&self) -> &Matrix {
        &self.a_m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn b_alloc(&self) -> &Matrix {
        &self.b_alloc
    }

    pub fn mode(&self) -> ReferenceMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: ReferenceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn r(&self) -> usize {
        self.b_alloc.rows()
    }

    pub fn m(&self) -> usize {
        self.b_alloc.cols()
    }

    fn nominal_lambda_max(&self) -> Result<f64> {
        Ok(self
            .b_alloc
            .matmul(&self.b_alloc.transpose())?
            .sym_eig_max()?)
    }

    pub fn initial_state(&self, init: ThetaInit) -> Result<AllocatorState> {
        let theta_v = match init {
            ThetaInit::Pinv => self.b_alloc.right_pinv()?.transpose(),
            ThetaInit::Zero => Matrix::zeros(self.r(), self.m()),
        };
        Ok(AllocatorState {
            theta_v,
            xi: Matrix::zeros(self.r(), 1),
            xi_m: Matrix::zeros(self.r(), 1),
            k: 0,
        })
    }

    /// `1 + λ̄ vᵀΓv`.
    pub fn sigma_sq(&self, v: &Matrix) -> Result<f64> {
        self.check_v(v)?;
        Ok(1.0 + self.lambda_bar * self.gamma.quadratic_form(v)?)
    }

    /// `(v − measured) / σ²`.
    pub fn epsilon(&self, v: &Matrix, measured: &Matrix) -> Result<Matrix> {
        self.check_v(measured)?;
        let sigma_sq = self.sigma_sq(v)?;
        Ok(v.sub(measured)?.scale(1.0 / sigma_sq)?)
    }

    /// Matrix driving the allocation error `ξ − ξ_m` in the reference-model loop:
    /// `A_m` for the open-loop model, `A_m + l I` for the closed-loop one.
    pub fn error_dynamics(&self) -> Result<Matrix> {
        match self.mode {
            ReferenceMode::OpenLoop => Ok(self.a_m.clone()),
            ReferenceMode::ClosedLoop => {
                Ok(self.a_m.add(&Matrix::identity(self.r()).scale(self.l)?)?)
            }
        }
    }

    pub fn check_assumption1(&self) -> Result<AssumptionReport> {
        check_assumption1(&self.a_m, self.mode, self.l)
    }

    fn check_v(&self, v: &Matrix) -> Result<()> {
        if v.shape() != (self.r(), 1) {
            return Err(config_err(format!(
                "expected an {}-vector, got {:?}",
                self.r(),
                v.shape()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocatorState {
    /// `r × m` adaptive parameter.
    pub theta_v: Matrix,
    pub xi: Matrix,
    pub xi_m: Matrix,
    pub k: usize,
}

/// Per-step quantities produced while advancing the allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub sigma_sq: f64,
    pub epsilon: Matrix,
}

impl AllocatorState {
    /// `θ_vᵀ v`.
    pub fn compute_u(&self, v: &Matrix) -> Result<Matrix> {
        Ok(self.theta_v.transpose().matmul(v)?)
    }

    /// `θ_v ← θ_v + Γ v εᵀ B`.
    pub fn update_theta(&self, cfg: &AllocatorConfig, v: &Matrix, eps: &Matrix) -> Result<Self> {
        cfg.check_v(v)?;
        cfg.check_v(eps)?;
        let delta = cfg
            .gamma
            .matmul(v)?
            .matmul(&eps.transpose())?
            .matmul(&cfg.b_alloc)?;
        Ok(Self {
            theta_v: self.theta_v.add(&delta)?,
            ..self.clone()
        })
    }

    /// `ξ ← A_m ξ + measured − v`.
    pub fn step_xi(&self, cfg: &AllocatorConfig, v: &Matrix, measured: &Matrix) -> Result<Self> {
        cfg.check_v(v)?;
        cfg.check_v(measured)?;
        Ok(Self {
            xi: cfg.a_m.matmul(&self.xi)?.add(measured)?.sub(v)?,
            ..self.clone()
        })
    }

    pub fn step_reference(&self, cfg: &AllocatorConfig) -> Result<Self> {
        let open = cfg.a_m.matmul(&self.xi_m)?;
        let xi_m = match cfg.mode {
            ReferenceMode::OpenLoop => open,
            ReferenceMode::ClosedLoop => open.sub(&self.allocation_error()?.scale(cfg.l)?)?,
        };
        Ok(Self {
            xi_m,
            ..self.clone()
        })
    }

    /// `ξ − ξ_m`.
    pub fn allocation_error(&self) -> Result<Matrix> {
        Ok(self.xi.sub(&self.xi_m)?)
    }

    /// One full allocator step. The reference model uses `ξ(k)`, not `ξ(k+1)`.
    pub fn advance(
        &self,
        cfg: &AllocatorConfig,
        v: &Matrix,
        measured: &Matrix,
    ) -> Result<(Self, StepDiagnostics)> {
        let sigma_sq = cfg.sigma_sq(v)?;
        let epsilon = cfg.epsilon(v, measured)?;
        let with_reference = self.step_reference(cfg)?;
        let with_xi = self.step_xi(cfg, v, measured)?;
        let mut next = self.update_theta(cfg, v, &epsilon)?;
        next.xi = with_xi.xi;
        next.xi_m = with_reference.xi_m;
        next.k = self.k + 1;
        Ok((next, StepDiagnostics { sigma_sq, epsilon }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    /// Spectral radius within [`BOUNDARY_BAND`] of one; requires manual review
    /// of the Jordan structure on the unit circle.
    Boundary,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub status: CheckStatus,
}

impl CheckItem {
    fn radius(name: &str, value: f64) -> Self {
        let status = if value < 1.0 - BOUNDARY_BAND {
            CheckStatus::Pass
        } else if value <= 1.0 {
            CheckStatus::Boundary
        } else {
            CheckStatus::Fail
        };
        Self {
            name: name.to_string(),
            value,
            status,
        }
    }

    pub(crate) fn flag(name: &str, value: f64, ok: bool) -> Self {
        Self {
            name: name.to_string(),
            value,
            status: if ok {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub conditions: Vec<CheckItem>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.conditions
            .iter()
            .all(|c| c.status == CheckStatus::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.conditions
            .iter()
            .any(|c| c.status == CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.conditions
            .iter()
            .filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckItem> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub(crate) fn into_error(self) -> Error {
        let names: Vec<String> = self
            .failures()
            .map(|c| format!("{} (value {:.6})", c.name, c.value))
            .collect();
        Error::Assumption(names.join(", "))
    }
}

pub const COND_A_M: &str = "rho(A_m) <= 1";
pub const COND_A_M_PLUS_L: &str = "rho(A_m + l*I) <= 1";
pub const COND_A_M_MINUS_L: &str = "rho(A_m - l*I) <= 1";

/// Unit-circle conditions on the reference dynamics. For the closed-loop
/// model both `A_m + lI` and `A_m − lI` are checked.
pub fn check_assumption1(a_m: &Matrix, mode: ReferenceMode, l: f64) -> Result<AssumptionReport> {
    let mut conditions = vec![CheckItem::radius(COND_A_M, a_m.spectral_radius()?)];
    if mode == ReferenceMode::ClosedLoop {
        let shift = Matrix::identity(a_m.rows()).scale(l)?;
        conditions.push(CheckItem::radius(
            COND_A_M_PLUS_L,
            a_m.add(&shift)?.spectral_radius()?,
        ));
        conditions.push(CheckItem::radius(
            COND_A_M_MINUS_L,
            a_m.sub(&shift)?.spectral_radius()?,
        ));
    }
    Ok(AssumptionReport { conditions })
}

pub const COND_GAMMA_SYMMETRIC: &str = "Gamma symmetric";
pub const COND_GAMMA_PD: &str = "Gamma positive definite";

/// Symmetry and positive definiteness of the adaptation rate.
pub fn check_gamma(gamma: &Matrix) -> Vec<CheckItem> {
    if !gamma.is_square() {
        return vec![CheckItem::flag(COND_GAMMA_SYMMETRIC, f64::NAN, false)];
    }
    let asym = gamma.max_asymmetry().unwrap_or(f64::INFINITY);
    let symmetric = asym <= GAMMA_SYMMETRY_TOLERANCE * gamma.max_abs().max(1.0);
    let mut out = vec![CheckItem::flag(COND_GAMMA_SYMMETRIC, asym, symmetric)];
    let min_eig = if symmetric {
        gamma
            .symmetrize()
            .and_then(|g| g.sym_eig_min())
            .unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    out.push(CheckItem::flag(COND_GAMMA_PD, min_eig, min_eig > 0.0));
    out
}
