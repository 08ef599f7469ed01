//! Summary statistics over a trace, split into phases around the first fault.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

use super::oracle;
use super::reference::TIME_EPS;
use super::trace::{ScenarioTrace, TraceRow};
use super::Scenario;

/// Rows in a steady-state window.
pub const STEADY_WINDOW: usize = 50;
/// Lag, in rows, for the parameter drift measure.
pub const DRIFT_LAG: usize = 100;
/// Fraction of each constant-reference segment treated as settled.
pub const SEGMENT_TAIL: f64 = 0.2;
/// `‖θ̃ᵀv‖` above which the oracle must strictly decrease.
pub const EXCITATION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseMetrics {
    pub name: String,
    pub start_row: usize,
    /// Exclusive.
    pub end_row: usize,
    /// `max_k ‖v − BΛu‖∞`.
    pub allocation_error_inf: f64,
    /// `max_k ‖v − BΛu‖∞ / (1 + ‖v‖∞)`.
    pub allocation_error_relative: f64,
    pub tracking_rms: Vec<f64>,
    pub peak_u: Vec<f64>,
    pub peak_x: Vec<f64>,
    pub max_lyapunov_increase: f64,
    /// `‖θ_v(end) − θ_v(end − lag)‖_max`, lag clipped to the phase.
    pub theta_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentTracking {
    pub channel: usize,
    pub start_t: f64,
    pub end_t: f64,
    pub reference: f64,
    pub tail_rows: usize,
    pub worst_error: f64,
    /// `max |ref − y| / (1 + |ref|)` over the settled tail.
    pub worst_normalized: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rows: usize,
    pub phases: Vec<PhaseMetrics>,
    pub segments: Vec<SegmentTracking>,
    pub max_lyapunov_increase: f64,
    /// Steps with `‖θ̃ᵀv‖ > EXCITATION_THRESHOLD` where `V` did not decrease.
    pub strict_decrease_violations: usize,
    pub theta_final_drift: f64,
    pub worst_tracking_normalized: f64,
    pub pre_fault_peak_x: Vec<f64>,
    pub post_fault_peak_x: Vec<f64>,
}

impl MetricsReport {
    pub fn phase(&self, name: &str) -> Option<&PhaseMetrics> {
        self.phases.iter().find(|p| p.name == name)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub const PHASE_PRE_FAULT_STEADY: &str = "pre_fault_steady";
pub const PHASE_POST_FAULT_TRANSIENT: &str = "post_fault_transient";
pub const PHASE_POST_FAULT_STEADY: &str = "post_fault_steady";

fn theta_of(row: &TraceRow, r: usize, m: usize) -> Result<Matrix> {
    Ok(Matrix::new(r, m, row.theta.clone())?)
}

fn peaks<'a>(values: impl Iterator<Item = &'a [f64]>, len: usize) -> Vec<f64> {
    let mut out = vec![0.0_f64; len];
    for v in values {
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.max(x.abs());
        }
    }
    out
}

/// Phase statistics, oracle increments and per-segment tracking.
/// The scenario supplies `Λ(t)`, `ref(t)` and the output map.
pub fn metrics(trace: &ScenarioTrace, scenario: &Scenario) -> Result<MetricsReport> {
    let plant = &scenario.plant;
    let (n, m, r) = (plant.n(), plant.m(), plant.r());
    if trace.n() != n || trace.m() != m || trace.r != r {
        return Err(Error::Trace(
            "trace dimensions do not match the scenario".into(),
        ));
    }
    let total = trace.len();
    let gamma = scenario.allocator.gamma();

    let mut outputs = Vec::with_capacity(total);
    let mut refs = Vec::with_capacity(total);
    for row in &trace.rows {
        outputs.push(plant.c().matmul(&Matrix::column(&row.x)?)?.into_vec());
        refs.push(scenario.reference_at(row.t)?.into_vec());
    }

    // increments[k] = V(k+1) − V(k) under Λ(t_k)
    let mut increments = Vec::with_capacity(total.saturating_sub(1));
    let mut violations = 0;
    for pair in trace.rows.windows(2) {
        let lam = scenario.effectiveness_at(pair[0].t);
        let theta = theta_of(&pair[0], r, m)?;
        let next = theta_of(&pair[1], r, m)?;
        let inc = oracle::lyapunov_increment(&theta, &next, gamma, plant.b(), &lam)?;
        let excitation = oracle::regressor(&theta, plant.b(), &lam, &Matrix::column(&pair[0].v)?)?
            .frobenius_norm();
        if excitation > EXCITATION_THRESHOLD && inc >= 0.0 {
            violations += 1;
        }
        increments.push(inc);
    }

    let fault_row = scenario.fault_times().first().map(|tf| {
        trace
            .rows
            .iter()
            .position(|row| row.t >= tf - TIME_EPS)
            .unwrap_or(total)
    });

    let phase = |name: &str, start: usize, end: usize| -> Result<PhaseMetrics> {
        let rows = &trace.rows[start..end];
        let mut alloc_inf = 0.0_f64;
        let mut alloc_rel = 0.0_f64;
        for row in rows {
            let err = row.allocation_error();
            let v_inf = row.v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
            alloc_inf = alloc_inf.max(err);
            alloc_rel = alloc_rel.max(err / (1.0 + v_inf));
        }
        let mut tracking_rms = vec![0.0; r];
        if end > start {
            for k in start..end {
                for i in 0..r {
                    tracking_rms[i] += (refs[k][i] - outputs[k][i]).powi(2);
                }
            }
            for t in &mut tracking_rms {
                *t = (*t / (end - start) as f64).sqrt();
            }
        }
        let max_inc = increments
            [start.min(increments.len())..end.saturating_sub(1).min(increments.len())]
            .iter()
            .fold(0.0_f64, |a, x| a.max(*x));
        let theta_drift = if end > start {
            let last = theta_of(&trace.rows[end - 1], r, m)?;
            let lagged = theta_of(
                &trace.rows[(end - 1).saturating_sub(DRIFT_LAG).max(start)],
                r,
                m,
            )?;
            last.max_abs_diff(&lagged)?
        } else {
            0.0
        };
        Ok(PhaseMetrics {
            name: name.to_string(),
            start_row: start,
            end_row: end,
            allocation_error_inf: alloc_inf,
            allocation_error_relative: alloc_rel,
            tracking_rms,
            peak_u: peaks(rows.iter().map(|r| r.u.as_slice()), m),
            peak_x: peaks(rows.iter().map(|r| r.x.as_slice()), n),
            max_lyapunov_increase: max_inc,
            theta_drift,
        })
    };

    let tail_start = total.saturating_sub(STEADY_WINDOW);
    let phases = match fault_row {
        Some(f) => vec![
            phase(PHASE_PRE_FAULT_STEADY, f.saturating_sub(STEADY_WINDOW), f)?,
            phase(PHASE_POST_FAULT_TRANSIENT, f, tail_start.max(f))?,
            phase(PHASE_POST_FAULT_STEADY, tail_start.max(f), total)?,
        ],
        None => vec![phase(PHASE_PRE_FAULT_STEADY, tail_start, total)?],
    };

    let segments = segment_tracking(trace, scenario, &outputs, &refs);
    let worst_tracking_normalized = segments
        .iter()
        .fold(0.0_f64, |a, s| a.max(s.worst_normalized));

    let theta_final_drift = if total > 0 {
        theta_of(&trace.rows[total - 1], r, m)?.max_abs_diff(&theta_of(
            &trace.rows[(total - 1).saturating_sub(DRIFT_LAG)],
            r,
            m,
        )?)?
    } else {
        0.0
    };
    let split = fault_row.unwrap_or(total);

    Ok(MetricsReport {
        rows: total,
        max_lyapunov_increase: increments.iter().fold(0.0_f64, |a, x| a.max(*x)),
        strict_decrease_violations: violations,
        theta_final_drift,
        worst_tracking_normalized,
        pre_fault_peak_x: peaks(trace.rows[..split].iter().map(|r| r.x.as_slice()), n),
        post_fault_peak_x: peaks(trace.rows[split..].iter().map(|r| r.x.as_slice()), n),
        phases,
        segments,
    })
}

/// Splits each channel at its own reference switches and at every fault time,
/// then scores the last [`SEGMENT_TAIL`] of each piece.
fn segment_tracking(
    trace: &ScenarioTrace,
    scenario: &Scenario,
    outputs: &[Vec<f64>],
    refs: &[Vec<f64>],
) -> Vec<SegmentTracking> {
    let Some(last) = trace.rows.last() else {
        return Vec::new();
    };
    let t_end = last.t;
    let mut out = Vec::new();
    for (channel, schedule) in scenario.references.iter().enumerate() {
        let mut cuts: Vec<f64> = schedule
            .switch_times()
            .into_iter()
            .chain(scenario.fault_times())
            .filter(|t| *t > TIME_EPS && *t <= t_end + TIME_EPS)
            .collect();
        cuts.push(0.0);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);

        for (i, &start) in cuts.iter().enumerate() {
            let end = cuts.get(i + 1).copied();
            let idx: Vec<usize> = trace
                .rows
                .iter()
                .enumerate()
                .filter(|(_, row)| {
                    row.t >= start - TIME_EPS && end.is_none_or(|e| row.t < e - TIME_EPS)
                })
                .map(|(k, _)| k)
                .collect();
            if idx.is_empty() {
                continue;
            }
            let skip = ((idx.len() as f64) * (1.0 - SEGMENT_TAIL)).floor() as usize;
            let tail = &idx[skip.min(idx.len() - 1)..];
            let mut worst_error = 0.0_f64;
            let mut worst_normalized = 0.0_f64;
            for &k in tail {
                let reference = refs[k][channel];
                let err = (reference - outputs[k][channel]).abs();
                worst_error = worst_error.max(err);
                worst_normalized = worst_normalized.max(err / (1.0 + reference.abs()));
            }
            out.push(SegmentTracking {
                channel,
                start_t: start,
                end_t: end.unwrap_or(t_end),
                reference: refs[idx[0]][channel],
                tail_rows: tail.len(),
                worst_error,
                worst_normalized,
            });
        }
    }
    out
}
