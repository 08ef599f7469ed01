//! Discrete LTI plant with actuator loss of effectiveness.
//!
//! The plant integrates `x(k+1) = A x(k) + B_u Λ u(k)` with the full input
//! matrix. The allocator works on the moment map `B` (an `r × m` factor, with
//! `B_v · B` the allocation design matrix) and only sees `B Λ u` through
//! [`PlantModel::measured_moment`].

use crate::error::{config_err, Result};
use crate::linalg::Matrix;

const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: Matrix,
    b_u: Matrix,
    b_v: Matrix,
    b: Matrix,
    c: Matrix,
    dt: f64,
    state_labels: Vec<String>,
    input_labels: Vec<String>,
}

impl PlantModel {
    /// Validates shapes, `dt > 0`, `r < m` and that `B_v` and `B` both have rank `r`.
    pub fn new(a: Matrix, b_u: Matrix, b_v: Matrix, b: Matrix, c: Matrix, dt: f64) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() {
            return Err(config_err(format!("A must be square, got {:?}", a.shape())));
        }
        let m = b_u.cols();
        let r = b.rows();
        if b_u.rows() != n {
            return Err(config_err(format!(
                "B_u must be {n}x_, got {:?}",
                b_u.shape()
            )));
        }
        if b_v.shape() != (n, r) {
            return Err(config_err(format!(
                "B_v must be {n}x{r}, got {:?}",
                b_v.shape()
            )));
        }
        if b.cols() != m {
            return Err(config_err(format!(
                "B must be {r}x{m}, got {:?}",
                b.shape()
            )));
        }
        if c.shape() != (r, n) {
            return Err(config_err(format!(
                "C must be {r}x{n}, got {:?}",
                c.shape()
            )));
        }
        if r >= m {
            return Err(config_err(format!(
                "plant is not over-actuated: r = {r}, m = {m}"
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(config_err(format!("dt must be positive, got {dt}")));
        }
        if gram_min_eig(&b.matmul(&b.transpose())?)? <= RANK_TOLERANCE {
            return Err(config_err("B must have full row rank"));
        }
        if gram_min_eig(&b_v.transpose().matmul(&b_v)?)? <= RANK_TOLERANCE {
            return Err(config_err("B_v must have full column rank"));
        }
        Ok(Self {
            a,
            b_u,
            b_v,
            b,
            c,
            dt,
            state_labels: (1..=n).map(|i| format!("x{i}")).collect(),
            input_labels: (1..=m).map(|i| format!("u{i}")).collect(),
        })
    }

    /// Replaces the default `x1..`, `u1..` column names used in traces.
    pub fn with_labels(mut self, states: &[&str], inputs: &[&str]) -> Result<Self> {
        if states.len() != self.n() || inputs.len() != self.m() {
            return Err(config_err("label count does not match plant dimensions"));
        }
        self.state_labels = states.iter().map(|s| s.to_string()).collect();
        self.input_labels = inputs.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    /// ADMIRE, linearized at Mach 0.22 and 3 km, discretized at 0.1 s.
    ///
    /// States `[α β p q r]`, surfaces `[canard, right elevon, left elevon, rudder]`.
    /// The moment map `B` is the `p, q, r` rows of `B_u`; `B_v = [0; I₃]`, so
    /// `B_v · B` is `B_u` with the two force rows zeroed. `C` selects `p, q, r`.
    pub fn admire() -> Self {
        let a = Matrix::from_rows(&[
            [1.0214, 0.0054, 0.0003, 0.4176, -0.0013],
            [0.0, 0.6307, 0.0821, 0.0, -0.3792],
            [0.0, -3.4485, 0.3979, 0.0, 1.1569],
            [1.1199, 0.0024, 0.0001, 1.0374, -0.0003],
            [0.0, 0.3802, -0.0156, 0.0, 0.8062],
        ])
        .expect("static matrix");
        let b_u = Matrix::from_rows(&[
            [0.1823, -0.1798, -0.1795, 0.0008],
            [0.0, -0.0639, 0.0639, 0.1396],
            [0.0, -1.584, 1.584, 0.2937],
            [0.8075, -0.6456, -0.6456, 0.0013],
            [0.0, -0.1005, 0.1005, -0.4113],
        ])
        .expect("static matrix");
        let b = b_u.row_range(2, 5).expect("static matrix");
        let b_v = Matrix::zeros(2, 3)
            .vstack(&Matrix::identity(3))
            .expect("static matrix");
        let c = Matrix::zeros(3, 2)
            .hstack(&Matrix::identity(3))
            .expect("static matrix");
        Self::new(a, b_u, b_v, b, c, 0.1)
            .and_then(|p| {
                p.with_labels(
                    &["alpha", "beta", "p", "q", "r"],
                    &["u_c", "u_re", "u_le", "u_r"],
                )
            })
            .expect("ADMIRE preset is valid")
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b_u(&self) -> &Matrix {
        &self.b_u
    }

    pub fn b_v(&self) -> &Matrix {
        &self.b_v
    }

    /// Moment map seen by the allocator.
    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b_u.cols()
    }

    pub fn r(&self) -> usize {
        self.b.rows()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    /// `B_v · B`, the matrix the allocator is designed against.
    pub fn design_input(&self) -> Result<Matrix> {
        Ok(self.b_v.matmul(&self.b)?)
    }

    /// `B_u · Bᵀ(BBᵀ)⁻¹`: the map from commanded moment to state increment
    /// when `u` is the minimum-norm allocation of that moment.
    pub fn projected_input(&self) -> Result<Matrix> {
        Ok(self.b_u.matmul(&self.b.right_pinv()?)?)
    }

    /// `A x + B_u Λ u`.
    pub fn step(&self, lam: &Effectiveness, x: &PlantState, u: &Matrix) -> Result<PlantState> {
        self.check_input(lam, u)?;
        let next = self
            .a
            .matmul(&x.x)?
            .add(&self.b_u.scale_columns(lam.as_slice())?.matmul(u)?)?;
        Ok(PlantState { x: next })
    }

    /// Ideal measurement of the net moment `B Λ u`.
    pub fn measured_moment(&self, lam: &Effectiveness, u: &Matrix) -> Result<Matrix> {
        self.check_input(lam, u)?;
        Ok(self.b.scale_columns(lam.as_slice())?.matmul(u)?)
    }

    pub fn output(&self, x: &PlantState) -> Result<Matrix> {
        Ok(self.c.matmul(&x.x)?)
    }

    fn check_input(&self, lam: &Effectiveness, u: &Matrix) -> Result<()> {
        if lam.len() != self.m() || u.shape() != (self.m(), 1) {
            return Err(config_err(format!(
                "expected {} actuators, got effectiveness of {} and input {:?}",
                self.m(),
                lam.len(),
                u.shape()
            )));
        }
        Ok(())
    }
}

fn gram_min_eig(gram: &Matrix) -> Result<f64> {
    Ok(gram.sym_eig_min()?)
}

/// Diagonal of Λ: one factor in `(0, 1]` per actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct Effectiveness(Vec<f64>);

impl Effectiveness {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(config_err(format!("effectiveness {bad} outside (0, 1]")));
        }
        Ok(Self(values))
    }

    pub fn nominal(m: usize) -> Self {
        Self(vec![1.0; m])
    }

    pub fn uniform(m: usize, level: f64) -> Result<Self> {
        Self::new(vec![level; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_matrix(&self) -> Matrix {
        Matrix::from_diag(&self.0).expect("finite by construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: Matrix,
}

impl PlantState {
    pub fn zeros(n: usize) -> Self {
        Self {
            x: Matrix::zeros(n, 1),
        }
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Ok(Self {
            x: Matrix::column(values)?,
        })
    }
}
