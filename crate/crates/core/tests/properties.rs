use proptest::prelude::*;

use adalloc::allocator::{AllocatorConfig, ReferenceMode, ThetaInit};
use adalloc::scenario::oracle;
use adalloc::{Effectiveness, Matrix, PlantModel};

fn entries(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, len)
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    entries(rows * cols).prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
}

fn symmetric(n: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, n).prop_map(|m| m.symmetrize().unwrap())
}

/// Diagonally dominant, hence invertible and well conditioned.
fn well_conditioned(n: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, n).prop_map(move |m| {
        m.add(&Matrix::identity(n).scale(4.0 * n as f64).unwrap())
            .unwrap()
    })
}

fn effectiveness(m: usize) -> impl Strategy<Value = Effectiveness> {
    prop::collection::vec(0.2..=1.0f64, m).prop_map(|v| Effectiveness::new(v).unwrap())
}

/// `r × m` with a dominant leading block so that `B Bᵀ` stays invertible.
fn full_rank_b(r: usize, m: usize) -> impl Strategy<Value = Matrix> {
    matrix(r, m).prop_map(move |b| {
        let mut boost = Matrix::zeros(r, m).into_vec();
        for i in 0..r {
            boost[i * m + i] = 3.0;
        }
        b.add(&Matrix::new(r, m, boost).unwrap()).unwrap()
    })
}

fn gamma_pd(r: usize) -> impl Strategy<Value = Matrix> {
    matrix(r, r).prop_map(move |g| {
        g.matmul(&g.transpose())
            .unwrap()
            .add(&Matrix::identity(r).scale(0.1).unwrap())
            .unwrap()
            .symmetrize()
            .unwrap()
    })
}

proptest! {
    #[test]
    fn rayleigh_quotient_within_extremes(s in symmetric(4), x in entries(4)) {
        let x = Matrix::column(&x).unwrap();
        let norm = x.dot(&x).unwrap();
        prop_assume!(norm > 1e-6);
        let q = s.quadratic_form(&x).unwrap() / norm;
        let (lo, hi) = (s.sym_eig_min().unwrap(), s.sym_eig_max().unwrap());
        prop_assert!(q >= lo - 1e-10 && q <= hi + 1e-10);
    }

    #[test]
    fn right_pinv_is_right_inverse(b in full_rank_b(3, 5)) {
        let p = b.right_pinv().unwrap();
        let err = b.matmul(&p).unwrap().max_abs_diff(&Matrix::identity(3)).unwrap();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn inverse_round_trips(m in well_conditioned(4)) {
        let back = m.inverse().unwrap().inverse().unwrap();
        prop_assert!(back.max_abs_diff(&m).unwrap() < 1e-9);
        let id = m.matmul(&m.inverse().unwrap()).unwrap();
        prop_assert!(id.max_abs_diff(&Matrix::identity(4)).unwrap() < 1e-12);
    }

    #[test]
    fn spectral_radius_is_homogeneous(m in matrix(3, 3), c in -3.0..3.0f64) {
        let rho = m.spectral_radius().unwrap();
        let scaled = m.scale(c).unwrap().spectral_radius().unwrap();
        prop_assert!((scaled - c.abs() * rho).abs() <= 1e-8 * (1.0 + c.abs() * rho));
    }

    #[test]
    fn spectral_radius_of_symmetric_matches_eigenvalues(s in symmetric(4)) {
        let eig = s.sym_eigenvalues().unwrap();
        let expected = eig.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        prop_assert!((s.spectral_radius().unwrap() - expected).abs() <= 1e-9 * (1.0 + expected));
    }

    #[test]
    fn effectiveness_never_raises_gram_maximum(b in full_rank_b(3, 4), lam in effectiveness(4), t in 0.0..1.0f64) {
        let gram = |l: &[f64]| {
            let bl = b.scale_columns(l).unwrap();
            bl.matmul(&bl.transpose()).unwrap().sym_eig_max().unwrap()
        };
        let nominal = gram(&[1.0; 4]);
        let faulty = gram(lam.as_slice());
        prop_assert!(faulty <= nominal * (1.0 + 1e-12));
        // shrinking every entry further cannot raise it either
        let lower: Vec<f64> = lam.as_slice().iter().map(|x| x * (0.5 + 0.5 * t)).collect();
        prop_assert!(gram(&lower) <= faulty * (1.0 + 1e-12));
    }

    #[test]
    fn sigma_sq_at_least_one(b in full_rank_b(3, 4), g in gamma_pd(3), v in entries(3)) {
        let cfg = AllocatorConfig::new(b, g, Matrix::identity(3).scale(0.5).unwrap(), ReferenceMode::OpenLoop, 0.0).unwrap();
        prop_assert!(cfg.sigma_sq(&Matrix::column(&v).unwrap()).unwrap() >= 1.0);
    }

    #[test]
    fn measured_moment_is_linear(lam in effectiveness(4), u1 in entries(4), u2 in entries(4), a in -2.0..2.0f64) {
        let plant = PlantModel::admire();
        let (u1, u2) = (Matrix::column(&u1).unwrap(), Matrix::column(&u2).unwrap());
        let combined = u1.scale(a).unwrap().add(&u2).unwrap();
        let lhs = plant.measured_moment(&lam, &combined).unwrap();
        let rhs = plant
            .measured_moment(&lam, &u1)
            .unwrap()
            .scale(a)
            .unwrap()
            .add(&plant.measured_moment(&lam, &u2).unwrap())
            .unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn lyapunov_never_increases(
        b in full_rank_b(2, 3),
        g in gamma_pd(2),
        lam in effectiveness(3),
        theta in matrix(2, 3),
        v in entries(2),
    ) {
        let cfg = AllocatorConfig::new(b.clone(), g.clone(), Matrix::identity(2).scale(0.5).unwrap(), ReferenceMode::ClosedLoop, 0.1).unwrap();
        let mut state = cfg.initial_state(ThetaInit::Zero).unwrap();
        state.theta_v = theta;
        let v = Matrix::column(&v).unwrap();
        let u = state.compute_u(&v).unwrap();
        let measured = b.scale_columns(lam.as_slice()).unwrap().matmul(&u).unwrap();
        let (next, diag) = state.advance(&cfg, &v, &measured).unwrap();
        let inc = oracle::lyapunov_increment(&state.theta_v, &next.theta_v, &g, &b, &lam).unwrap();
        let bound = oracle::decrease_bound(&state.theta_v, &b, &lam, &v, diag.sigma_sq).unwrap();
        let scale = 1.0 + oracle::lyapunov_value(&state.theta_v, &g, &b, &lam).unwrap();
        prop_assert!(inc <= 1e-12 * scale, "increment {inc}");
        prop_assert!(inc <= bound + 1e-12 * scale, "increment {inc} above bound {bound}");
    }
}
