//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use adalloc::allocator::{
    CheckStatus, ReferenceMode, ThetaInit, COND_A_M, COND_A_M_MINUS_L, COND_A_M_PLUS_L,
    COND_GAMMA_PD,
};
use adalloc::scenario::config::{
    ChannelReference, Doublet, EffectivenessSpec, ExplicitPlant, FaultEvent, MatrixSpec,
    PlantSource,
};
use adalloc::scenario::metrics::{metrics, PHASE_POST_FAULT_STEADY, PHASE_PRE_FAULT_STEADY};
use adalloc::scenario::{check_config, oracle, Scenario, ScenarioConfig, ScenarioTrace};
use adalloc::{solve_dare, Effectiveness, Matrix};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn benchmark() -> Result<(Scenario, ScenarioTrace), String> {
    let s = Scenario::from_config(&ScenarioConfig::admire_benchmark()).map_err(err)?;
    let t = s.run().map_err(err)?;
    Ok((s, t))
}

fn lyapunov_decrease() -> Outcome {
    let start = Instant::now();
    let (s, trace) = benchmark()?;
    let report = metrics(&trace, &s).map_err(err)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure(
        trace.len() == 2001
            && report.max_lyapunov_increase <= 1e-9
            && report.strict_decrease_violations == 0
            && elapsed < 1.0,
        format!(
            "rows {}, max increase {:.3e}, strict-decrease violations {}, runtime {:.3} s",
            trace.len(),
            report.max_lyapunov_increase,
            report.strict_decrease_violations,
            elapsed
        ),
    )
}

fn allocation_convergence() -> Outcome {
    let (s, trace) = benchmark()?;
    let report = metrics(&trace, &s).map_err(err)?;
    let pre = report
        .phase(PHASE_PRE_FAULT_STEADY)
        .ok_or("missing pre-fault phase")?;
    let post = report
        .phase(PHASE_POST_FAULT_STEADY)
        .ok_or("missing post-fault phase")?;
    let fault_rows = &trace.rows[pre.end_row..];
    let spike = fault_rows
        .iter()
        .map(|r| r.allocation_error())
        .fold(0.0, f64::max);
    ensure(
        pre.allocation_error_relative < 1e-3 && post.allocation_error_relative < 1e-3,
        format!(
            "pre-fault tail {:.3e}, post-fault spike {:.3e}, end tail {:.3e} (relative, bound 1e-3)",
            pre.allocation_error_relative, spike, post.allocation_error_relative
        ),
    )
}

fn theta_settles() -> Outcome {
    let (s, trace) = benchmark()?;
    let report = metrics(&trace, &s).map_err(err)?;
    ensure(
        report.theta_final_drift < 1e-4,
        format!("drift over last 100 steps {:.3e}", report.theta_final_drift),
    )
}

fn tracking() -> Outcome {
    let (s, trace) = benchmark()?;
    let report = metrics(&trace, &s).map_err(err)?;
    let bounded = (0..2).all(|i| report.post_fault_peak_x[i] <= 10.0 * report.pre_fault_peak_x[i]);
    ensure(
        report.worst_tracking_normalized < 1e-2 && bounded,
        format!(
            "{} segments, worst settled error {:.3e}; alpha peak {:.3}/{:.3}, beta peak {:.3}/{:.3} (pre/post fault)",
            report.segments.len(),
            report.worst_tracking_normalized,
            report.pre_fault_peak_x[0],
            report.post_fault_peak_x[0],
            report.pre_fault_peak_x[1],
            report.post_fault_peak_x[1]
        ),
    )
}

fn dare() -> Outcome {
    let one = Matrix::identity(1);
    let sol = solve_dare(&one, &one, &one, &one).map_err(err)?;
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let p_err = (sol.p.get(0, 0) - phi).abs();
    let k_err = (sol.k.get(0, 0) - (phi - 1.0)).abs();
    let s = Scenario::from_config(&ScenarioConfig::admire_benchmark()).map_err(err)?;
    let radius = s.design_radius().map_err(err)?;
    let residual = s.controller.solution.residual;
    ensure(
        p_err < 1e-10 && k_err < 1e-10 && radius < 1.0 && residual < 1e-9 && s.controller.solution.k.shape() == (3, 8),
        format!(
            "scalar |dP| {p_err:.1e}, |dK| {k_err:.1e}; ADMIRE closed-loop radius {radius:.6}, residual {residual:.1e}"
        ),
    )
}

fn random_small_config(rng: &mut ChaCha8Rng, mode: ReferenceMode) -> ScenarioConfig {
    let b = vec![vec![rng.gen_range(0.5..1.5), rng.gen_range(-1.5..-0.5)]];
    let mut doublets = Vec::new();
    for _ in 0..4 {
        doublets.push(Doublet {
            amplitude: rng.gen_range(-1.0..1.0),
            start: rng.gen_range(0.0..15.0),
            width: rng.gen_range(0.5..3.0),
        });
    }
    let mut cfg = ScenarioConfig::admire_benchmark();
    cfg.plant = PlantSource::Explicit(ExplicitPlant {
        a: vec![vec![rng.gen_range(0.5..0.95)]],
        b_u: b.clone(),
        b_v: vec![vec![1.0]],
        b,
        c: vec![vec![1.0]],
        dt: 0.1,
        state_labels: None,
        input_labels: None,
    });
    cfg.allocator.gamma = MatrixSpec::Scalar(rng.gen_range(0.2..2.0));
    cfg.allocator.a_m = MatrixSpec::Scalar(rng.gen_range(0.0..0.6));
    cfg.allocator.l = rng.gen_range(0.0..0.3);
    cfg.allocator.mode = mode;
    cfg.allocator.theta_init = ThetaInit::Zero;
    cfg.controller.r = MatrixSpec::Scalar(1.0);
    cfg.scenario.duration = 19.9;
    cfg.scenario.references = vec![ChannelReference {
        points: vec![(0.0, rng.gen_range(-1.0..1.0))],
        doublets,
    }];
    cfg.scenario.faults = vec![FaultEvent {
        time: rng.gen_range(2.0..15.0),
        effectiveness: EffectivenessSpec::PerActuator(vec![
            rng.gen_range(0.3..1.0),
            rng.gen_range(0.3..1.0),
        ]),
    }];
    cfg
}

/// Replays `e(k+1) = E e(k) + BΛθ̃ᵀ(k) v(k)` from the logged parameters.
fn oracle_error_gap(cfg: &ScenarioConfig) -> adalloc::Result<f64> {
    let s = Scenario::from_config(cfg)?;
    let trace = s.run()?;
    assert_eq!(trace.len(), 200);
    let dynamics = s.allocator.error_dynamics()?;
    let b = s.plant.b();
    let mut e = Matrix::zeros(1, 1);
    let mut gap = 0.0_f64;
    for row in &trace.rows {
        gap = gap.max((e.get(0, 0) - row.e[0]).abs());
        let lam: Effectiveness = s.effectiveness_at(row.t);
        let theta = Matrix::new(1, 2, row.theta.clone())?;
        let v = Matrix::column(&row.v)?;
        let drive = b
            .scale_columns(lam.as_slice())?
            .matmul(&oracle::regressor(&theta, b, &lam, &v)?)?;
        e = dynamics.matmul(&e)?.add(&drive)?;
    }
    Ok(gap)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst = 0.0_f64;
    for mode in [ReferenceMode::OpenLoop, ReferenceMode::ClosedLoop] {
        for _ in 0..5 {
            let cfg = random_small_config(&mut rng, mode);
            worst = worst.max(oracle_error_gap(&cfg).map_err(err)?);
        }
    }
    ensure(
        worst < 1e-10,
        format!(
            "10 random 200-step instances (r=1, m=2, both modes), max |e - recursion| {worst:.3e}"
        ),
    )
}

fn reductions() -> Outcome {
    let mut closed = ScenarioConfig::admire_benchmark();
    closed.allocator.l = 0.0;
    closed.allocator.mode = ReferenceMode::ClosedLoop;
    let mut open = closed.clone();
    open.allocator.mode = ReferenceMode::OpenLoop;
    let a = adalloc::scenario::run(&closed).map_err(err)?;
    let b = adalloc::scenario::run(&open).map_err(err)?;
    let mut gap = 0.0_f64;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        let fa = ra.signals();
        let fb = rb.signals();
        for (x, y) in fa.zip(fb) {
            gap = gap.max((x - y).abs());
        }
    }

    let mut healthy = ScenarioConfig::admire_benchmark();
    healthy.scenario.faults.clear();
    let h = adalloc::scenario::run(&healthy).map_err(err)?;
    let alloc = h
        .rows
        .iter()
        .map(|r| r.allocation_error())
        .fold(0.0, f64::max);
    ensure(
        a.len() == b.len() && gap <= 1e-12 && alloc < 1e-10,
        format!("l=0 closed vs open max gap {gap:.1e}; healthy pinv allocation error {alloc:.1e}"),
    )
}

fn failed_names(cfg: &ScenarioConfig) -> Result<Vec<String>, String> {
    Ok(check_config(cfg)
        .map_err(err)?
        .into_iter()
        .filter(|c| c.status == CheckStatus::Fail)
        .map(|c| c.name)
        .collect())
}

fn assumption_checker() -> Outcome {
    let base = ScenarioConfig::admire_benchmark();
    let items = check_config(&base).map_err(err)?;
    let radius = |name: &str| {
        items
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.value)
            .unwrap_or(f64::NAN)
    };
    let radii = [
        radius(COND_A_M),
        radius(COND_A_M_PLUS_L),
        radius(COND_A_M_MINUS_L),
    ];
    let base_ok = items.iter().all(|c| c.status == CheckStatus::Pass)
        && [0.5, 0.6, 0.4]
            .iter()
            .zip(&radii)
            .all(|(want, got)| (want - got).abs() < 1e-9);

    let mut unstable = base.clone();
    unstable.allocator.a_m = MatrixSpec::Scalar(1.5);
    let mut shifted = base.clone();
    shifted.allocator.a_m = MatrixSpec::Scalar(0.95);
    let mut singular_gamma = base.clone();
    singular_gamma.allocator.gamma = MatrixSpec::Diag(vec![1.0, 0.0, 0.1]);

    let f_unstable = failed_names(&unstable)?;
    let f_shifted = failed_names(&shifted)?;
    let f_gamma = failed_names(&singular_gamma)?;
    let perturbed_ok = f_unstable.iter().any(|n| n == COND_A_M)
        && f_shifted == [COND_A_M_PLUS_L]
        && f_gamma == [COND_GAMMA_PD];
    ensure(
        base_ok && perturbed_ok,
        format!(
            "radii {:?}; A_m=1.5I fails {:?}; A_m=0.95I fails {:?}; singular Gamma fails {:?}",
            radii, f_unstable, f_shifted, f_gamma
        ),
    )
}

fn determinism_round_trip() -> Outcome {
    let (_, a) = benchmark()?;
    let (_, b) = benchmark()?;
    let csv_a = a.to_csv_string().map_err(err)?;
    let csv_b = b.to_csv_string().map_err(err)?;
    let back = ScenarioTrace::read_csv(csv_a.as_bytes()).map_err(err)?;
    let bits_equal = back.rows.len() == a.rows.len()
        && back.rows.iter().zip(&a.rows).all(|(x, y)| {
            let fx = x.signals();
            let fy = y.signals();
            x.k == y.k
                && x.t.to_bits() == y.t.to_bits()
                && x.sigma_sq.to_bits() == y.sigma_sq.to_bits()
                && x.lyapunov.map(f64::to_bits) == y.lyapunov.map(f64::to_bits)
                && fx.zip(fy).all(|(p, q)| p.to_bits() == q.to_bits())
        });
    ensure(
        csv_a == csv_b && bits_equal,
        format!(
            "{} bytes, identical runs {}, lossless parse-back {}",
            csv_a.len(),
            csv_a == csv_b,
            bits_equal
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 Lyapunov decrease", lyapunov_decrease),
        ("2 allocation convergence", allocation_convergence),
        ("3 parameter settling", theta_settles),
        ("4 tracking", tracking),
        ("5 Riccati solution", dare),
        ("6 error recursion", oracle_equivalence),
        ("7 reductions", reductions),
        ("8 assumption checker", assumption_checker),
        ("9 determinism and round-trip", determinism_round_trip),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
