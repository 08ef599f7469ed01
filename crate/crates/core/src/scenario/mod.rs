//! Closed-loop simulation: reference → LQR → allocator → plant → measurement.
//!
//! Each step `k` at `t = k Δt`:
//!
//! 1. `Λ(t)` from the fault schedule, `ref(t)` from the reference schedules
//! 2. `y = C x`
//! 3. `v = −K [x; x_new]`, optionally soft-saturated
//! 4. `u = θ_vᵀ v`, `measured = B Λ u`
//! 5. the row is logged (signals at step `k`, oracle `V` under `Λ(t)`)
//! 6. allocator advance (`ε`, `θ_v`, `ξ`, `ξ_m`), `x_new ← x_new + Δt (ref − y)`,
//!    `x ← A x + B_u Λ u`

pub mod config;
pub mod metrics;
pub mod oracle;
pub mod reference;
pub mod trace;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocator::{check_gamma, AllocatorConfig, CheckItem, CheckStatus, ThetaInit};
use crate::controller::{integrator_step, solve_dare, AugmentedSystem, Controller};
use crate::error::{config_err, Error, Result};
use crate::linalg::{LinalgError, Matrix};
use crate::plant::{Effectiveness, PlantModel, PlantState};

pub use config::{InputModel, ScenarioConfig};
pub use metrics::{metrics, MetricsReport};
pub use reference::{reference_signal, ReferenceSchedule, TIME_EPS};
pub use trace::{ScenarioTrace, TraceRow};

/// A validated configuration with its gain already computed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub plant: PlantModel,
    pub allocator: AllocatorConfig,
    pub theta_init: ThetaInit,
    pub controller: Controller,
    /// Present when the controller carries integral action.
    pub augmented: Option<AugmentedSystem>,
    /// Matrix the gain was designed against.
    pub design_input: Matrix,
    pub references: Vec<ReferenceSchedule>,
    /// Sorted by time; each entry holds until the next.
    pub faults: Vec<(f64, Effectiveness)>,
    pub duration: f64,
    pub x0: PlantState,
    pub signal_ceiling: f64,
}

fn allocator_from(cfg: &ScenarioConfig, plant: &PlantModel) -> Result<AllocatorConfig> {
    let r = plant.r();
    let a = &cfg.allocator;
    let alloc = AllocatorConfig::new(
        plant.b().clone(),
        a.gamma.resolve(r, "gamma")?,
        a.a_m.resolve(r, "a_m")?,
        a.mode,
        a.l,
    )?;
    match a.lambda_bar {
        Some(lb) => alloc.with_lambda_bar(lb),
        None => Ok(alloc),
    }
}

impl Scenario {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let plant = cfg.build_plant()?;
        let (n, m, r) = (plant.n(), plant.m(), plant.r());
        let run = &cfg.scenario;
        if !(run.duration > 0.0 && run.duration.is_finite()) {
            return Err(config_err(format!(
                "duration must be positive, got {}",
                run.duration
            )));
        }
        if run.signal_ceiling.is_nan() || run.signal_ceiling <= 0.0 {
            return Err(config_err("signal_ceiling must be positive"));
        }

        let allocator = allocator_from(cfg, &plant)?;
        let report = allocator.check_assumption1()?;
        if report.any_fail() {
            return Err(report.into_error());
        }
        for c in report
            .conditions
            .iter()
            .filter(|c| c.status == CheckStatus::Boundary)
        {
            log::warn!(
                "{} is on the stability boundary (value {})",
                c.name,
                c.value
            );
        }

        let references = if run.references.is_empty() {
            vec![ReferenceSchedule::default(); r]
        } else if run.references.len() == r {
            run.references
                .iter()
                .map(|c| c.schedule())
                .collect::<Result<Vec<_>>>()?
        } else {
            return Err(config_err(format!(
                "{} reference channels given, plant has {r} outputs",
                run.references.len()
            )));
        };

        let mut faults = Vec::with_capacity(run.faults.len());
        for f in &run.faults {
            if !(f.time >= 0.0 && f.time <= run.duration) {
                return Err(config_err(format!(
                    "fault time {} outside [0, {}]",
                    f.time, run.duration
                )));
            }
            faults.push((f.time, f.effectiveness.resolve(m)?));
        }
        faults.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut x0 = match &run.x0 {
            Some(v) if v.len() == n => v.clone(),
            Some(v) => {
                return Err(config_err(format!(
                    "x0 has {} entries, plant has {n} states",
                    v.len()
                )))
            }
            None => vec![0.0; n],
        };
        if run.x0_jitter != 0.0 {
            if !(run.x0_jitter > 0.0 && run.x0_jitter.is_finite()) {
                return Err(config_err("x0_jitter must be a nonnegative finite number"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
            for x in &mut x0 {
                *x += rng.gen_range(-run.x0_jitter..=run.x0_jitter);
            }
        }
        let x0 = PlantState::from_slice(&x0)?;

        let ctl = &cfg.controller;
        let design_input = match ctl.input_model {
            InputModel::Projected => plant.projected_input()?,
            InputModel::Factored => plant.b_v().clone(),
        };
        let r_weight = ctl.r.resolve(r, "controller.r")?;
        let (solution, augmented) = if ctl.integral {
            let aug = AugmentedSystem::build(plant.a(), &design_input, plant.c(), plant.dt())?;
            let q = ctl.q.resolve(aug.dim(), "controller.q")?;
            (
                solve_dare(&aug.a_bar, &aug.b_bar, &q, &r_weight)?,
                Some(aug),
            )
        } else {
            let q = ctl.q.resolve(n, "controller.q")?;
            (solve_dare(plant.a(), &design_input, &q, &r_weight)?, None)
        };
        if let Some(limits) = &ctl.saturation {
            if limits.len() != r || limits.iter().any(|l| l.is_nan() || *l <= 0.0) {
                return Err(config_err(format!("saturation needs {r} positive limits")));
            }
        }

        Ok(Self {
            plant,
            allocator,
            theta_init: cfg.allocator.theta_init,
            controller: Controller {
                solution,
                saturation: ctl.saturation.clone(),
            },
            augmented,
            design_input,
            references,
            faults,
            duration: run.duration,
            x0,
            signal_ceiling: run.signal_ceiling,
        })
    }

    /// `⌊duration / Δt⌋ + 1`.
    pub fn row_count(&self) -> usize {
        (self.duration / self.plant.dt() + 1e-9).floor() as usize + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.plant.dt()
    }

    pub fn effectiveness_at(&self, t: f64) -> Effectiveness {
        self.faults
            .iter()
            .take_while(|(time, _)| *time <= t + TIME_EPS)
            .last()
            .map_or_else(
                || Effectiveness::nominal(self.plant.m()),
                |(_, l)| l.clone(),
            )
    }

    pub fn reference_at(&self, t: f64) -> Result<Matrix> {
        reference_signal(&self.references, t)
    }

    pub fn fault_times(&self) -> Vec<f64> {
        self.faults.iter().map(|(t, _)| *t).collect()
    }

    /// Closed-loop spectral radius of the design model under the computed gain.
    pub fn design_radius(&self) -> Result<f64> {
        match &self.augmented {
            Some(aug) => self
                .controller
                .solution
                .closed_loop_radius(&aug.a_bar, &aug.b_bar),
            None => self
                .controller
                .solution
                .closed_loop_radius(self.plant.a(), &self.design_input),
        }
    }

    pub fn run(&self) -> Result<ScenarioTrace> {
        let plant = &self.plant;
        let (r, dt) = (plant.r(), plant.dt());
        let total = self.row_count();
        let mut rows = Vec::with_capacity(total);
        let mut x = self.x0.clone();
        let mut x_new = Matrix::zeros(r, 1);
        let mut alloc = self.allocator.initial_state(self.theta_init)?;
        let gamma = self.allocator.gamma();

        for k in 0..total {
            let step = || -> Result<_> {
                let t = self.time(k);
                let lam = self.effectiveness_at(t);
                let reference = self.reference_at(t)?;
                let y = plant.output(&x)?;
                let z = if self.augmented.is_some() {
                    x.x.vstack(&x_new)?
                } else {
                    x.x.clone()
                };
                let v = self.controller.control(&z)?;
                let u = alloc.compute_u(&v)?;
                let measured = plant.measured_moment(&lam, &u)?;
                let e = alloc.allocation_error()?;
                let lyapunov = oracle::lyapunov_value(&alloc.theta_v, gamma, plant.b(), &lam).ok();
                let (next_alloc, diag) = alloc.advance(&self.allocator, &v, &measured)?;
                let row = TraceRow {
                    k,
                    t,
                    x: x.x.as_slice().to_vec(),
                    u: u.as_slice().to_vec(),
                    v: v.as_slice().to_vec(),
                    measured: measured.as_slice().to_vec(),
                    xi: alloc.xi.as_slice().to_vec(),
                    xi_m: alloc.xi_m.as_slice().to_vec(),
                    e: e.as_slice().to_vec(),
                    theta: alloc.theta_v.as_slice().to_vec(),
                    lyapunov,
                    sigma_sq: diag.sigma_sq,
                };
                let next_x_new = if self.augmented.is_some() {
                    integrator_step(&x_new, &reference, &y, dt)?
                } else {
                    x_new.clone()
                };
                let next_x = plant.step(&lam, &x, &u)?;
                Ok((row, next_alloc, next_x_new, next_x))
            };
            let (row, next_alloc, next_x_new, next_x) = step().map_err(|e| match e {
                Error::Linalg(LinalgError::NonFinite { op }) => Error::NonFinite {
                    step: k,
                    signal: op,
                },
                other => other,
            })?;
            if !row.is_finite() {
                return Err(Error::NonFinite {
                    step: k,
                    signal: "logged signal",
                });
            }
            for (signal, norm) in [
                ("x", next_x.x.max_abs()),
                ("theta_v", next_alloc.theta_v.max_abs()),
                ("xi", next_alloc.xi.max_abs()),
                ("xi_m", next_alloc.xi_m.max_abs()),
                ("x_new", next_x_new.max_abs()),
            ] {
                if norm > self.signal_ceiling {
                    return Err(Error::Unbounded {
                        step: k,
                        signal,
                        norm,
                        ceiling: self.signal_ceiling,
                    });
                }
            }
            rows.push(row);
            alloc = next_alloc;
            x_new = next_x_new;
            x = next_x;
        }

        Ok(ScenarioTrace {
            state_labels: plant.state_labels().to_vec(),
            input_labels: plant.input_labels().to_vec(),
            r,
            rows,
        })
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioTrace> {
    Scenario::from_config(cfg)?.run()
}

pub const COND_B_RANK: &str = "rank(B) = r";
pub const COND_GAMMA_MAX: &str = "Gamma max eigenvalue";

/// Every static condition on a configuration, without stopping at the first
/// failure. Errors only when the plant or matrices cannot be built at all.
pub fn check_config(cfg: &ScenarioConfig) -> Result<Vec<CheckItem>> {
    let plant = cfg.build_plant()?;
    let r = plant.r();
    let gamma = cfg.allocator.gamma.resolve(r, "gamma")?;
    let a_m = cfg.allocator.a_m.resolve(r, "a_m")?;

    let mut items = check_gamma(&gamma);
    let gamma_max = gamma
        .symmetrize()
        .and_then(|g| g.sym_eig_max())
        .unwrap_or(f64::NAN);
    items.push(CheckItem {
        name: COND_GAMMA_MAX.into(),
        value: gamma_max,
        status: CheckStatus::Pass,
    });
    let gram_min = plant.b().matmul(&plant.b().transpose())?.sym_eig_min()?;
    items.push(CheckItem {
        name: COND_B_RANK.into(),
        value: gram_min,
        status: if gram_min > 1e-12 {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
    });
    items.extend(
        crate::allocator::check_assumption1(&a_m, cfg.allocator.mode, cfg.allocator.l)?.conditions,
    );
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use config::EffectivenessSpec;

    fn zero_config() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::admire_benchmark();
        cfg.scenario.references.clear();
        cfg.scenario.faults.clear();
        cfg.scenario.duration = 5.0;
        cfg
    }

    #[test]
    fn equilibrium_stays_zero() {
        let trace = run(&zero_config()).unwrap();
        assert_eq!(trace.len(), 51);
        for row in &trace.rows {
            for s in [
                &row.x,
                &row.u,
                &row.v,
                &row.measured,
                &row.xi,
                &row.xi_m,
                &row.e,
            ] {
                assert!(s.iter().all(|x| *x == 0.0));
            }
            assert_eq!(row.sigma_sq, 1.0);
        }
    }

    #[test]
    fn logged_error_is_exact_difference() {
        let mut cfg = ScenarioConfig::admire_benchmark();
        cfg.scenario.duration = 30.0;
        cfg.scenario.faults[0].time = 10.0;
        let trace = run(&cfg).unwrap();
        for row in &trace.rows {
            for i in 0..3 {
                assert_eq!(row.e[i], row.xi[i] - row.xi_m[i]);
            }
        }
    }

    #[test]
    fn row_count_and_times() {
        let s = Scenario::from_config(&ScenarioConfig::admire_benchmark()).unwrap();
        assert_eq!(s.row_count(), 2001);
        assert_eq!(s.effectiveness_at(99.9).as_slice(), &[1.0; 4]);
        assert_eq!(s.effectiveness_at(s.time(1000)).as_slice(), &[0.7; 4]);
    }

    #[test]
    fn invalid_runs_rejected() {
        let mut cfg = zero_config();
        cfg.scenario.duration = 0.0;
        assert!(matches!(Scenario::from_config(&cfg), Err(Error::Config(_))));

        let mut cfg = zero_config();
        cfg.scenario.faults.push(config::FaultEvent {
            time: 10.0,
            effectiveness: EffectivenessSpec::Uniform(0.5),
        });
        assert!(matches!(Scenario::from_config(&cfg), Err(Error::Config(_))));

        let mut cfg = zero_config();
        cfg.allocator.a_m = config::MatrixSpec::Scalar(1.5);
        assert!(matches!(
            Scenario::from_config(&cfg),
            Err(Error::Assumption(_))
        ));
    }

    #[test]
    fn jitter_is_seeded() {
        let mut cfg = zero_config();
        cfg.scenario.x0_jitter = 1e-3;
        cfg.scenario.seed = 7;
        let a = Scenario::from_config(&cfg).unwrap().x0;
        let b = Scenario::from_config(&cfg).unwrap().x0;
        assert_eq!(a.x, b.x);
        assert!(a.x.max_abs() > 0.0 && a.x.max_abs() <= 1e-3);
        cfg.scenario.seed = 8;
        assert_ne!(Scenario::from_config(&cfg).unwrap().x0.x, a.x);
    }

    #[test]
    fn ceiling_aborts() {
        let mut cfg = ScenarioConfig::admire_benchmark();
        cfg.controller.input_model = InputModel::Factored;
        cfg.scenario.signal_ceiling = 10.0;
        assert!(matches!(run(&cfg), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn check_config_collects_everything() {
        let mut cfg = ScenarioConfig::admire_benchmark();
        let items = check_config(&cfg).unwrap();
        assert!(items.iter().all(|c| c.status == CheckStatus::Pass));
        cfg.allocator.gamma = config::MatrixSpec::Diag(vec![1.0, 0.0, 0.1]);
        cfg.allocator.a_m = config::MatrixSpec::Scalar(1.5);
        let failed: Vec<_> = check_config(&cfg)
            .unwrap()
            .into_iter()
            .filter(|c| c.status == CheckStatus::Fail)
            .map(|c| c.name)
            .collect();
        assert!(failed.contains(&crate::allocator::COND_GAMMA_PD.to_string()));
        assert!(failed.contains(&crate::allocator::COND_A_M.to_string()));
    }
}
