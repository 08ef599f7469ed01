//! Piecewise-constant reference schedules.

use crate::error::{config_err, Result};
use crate::linalg::Matrix;

/// Slack applied to switch-time comparisons so that `k · dt` lands on the
/// intended side of a breakpoint.
pub const TIME_EPS: f64 = 1e-9;

/// Value held from each breakpoint time until the next; zero before the first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceSchedule {
    breakpoints: Vec<(f64, f64)>,
}

impl ReferenceSchedule {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        for (i, (t, v)) in points.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() || *t < 0.0 {
                return Err(config_err(format!(
                    "reference point {i} is invalid: ({t}, {v})"
                )));
            }
        }
        if points.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(config_err("reference schedule times must be nondecreasing"));
        }
        Ok(Self {
            breakpoints: points,
        })
    }

    /// `+a` on `[start, start+width)`, `−a` on `[start+width, start+2·width)`, then zero.
    pub fn doublet(amplitude: f64, start: f64, width: f64) -> Result<Self> {
        if width.is_nan() || width <= 0.0 {
            return Err(config_err(format!(
                "doublet width must be positive, got {width}"
            )));
        }
        Self::new(vec![
            (start, amplitude),
            (start + width, -amplitude),
            (start + 2.0 * width, 0.0),
        ])
    }

    /// Pointwise sum of two schedules.
    pub fn superpose(&self, other: &Self) -> Self {
        let mut times: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .map(|(t, _)| *t)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let breakpoints = times
            .into_iter()
            .map(|t| (t, self.value_at(t) + other.value_at(t)))
            .collect();
        Self { breakpoints }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(time, _)| *time <= t + TIME_EPS)
            .last()
            .map_or(0.0, |(_, v)| *v)
    }

    pub fn switch_times(&self) -> Vec<f64> {
        self.breakpoints.iter().map(|(t, _)| *t).collect()
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }
}

/// Stacks one value per output channel.
pub fn reference_signal(schedules: &[ReferenceSchedule], t: f64) -> Result<Matrix> {
    if schedules.is_empty() {
        return Err(config_err("no reference channels"));
    }
    if t < 0.0 {
        return Err(config_err(format!(
            "reference requested at negative time {t}"
        )));
    }
    let values: Vec<f64> = schedules.iter().map(|s| s.value_at(t)).collect();
    Ok(Matrix::column(&values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_schedule_is_zero() {
        assert_eq!(ReferenceSchedule::default().value_at(42.0), 0.0);
        let r = reference_signal(&[ReferenceSchedule::default()], 1.0).unwrap();
        assert_eq!(r.as_slice(), &[0.0]);
        assert!(reference_signal(&[], 0.0).is_err());
    }

    #[test]
    fn step_lookup_inclusive_at_switch() {
        let s = ReferenceSchedule::new(vec![(0.0, 0.0), (10.0, 0.1)]).unwrap();
        assert_eq!(s.value_at(5.0), 0.0);
        assert_eq!(s.value_at(10.0), 0.1);
        // 100 · 0.1 is not exactly 10 in floating point
        assert_eq!(s.value_at(100.0 * 0.1), 0.1);
    }

    #[test]
    fn doublet_shape() {
        let (a, start, w) = (0.2, 3.0, 4.0);
        let d = ReferenceSchedule::doublet(a, start, w).unwrap();
        assert_eq!(d.value_at(start + w / 2.0), a);
        assert_eq!(d.value_at(start + 1.5 * w), -a);
        assert_eq!(d.value_at(start + 2.5 * w), 0.0);
        assert_eq!(d.value_at(start - 1.0), 0.0);
        assert!(ReferenceSchedule::doublet(a, start, 0.0).is_err());
    }

    #[test]
    fn superposition_adds() {
        let a = ReferenceSchedule::doublet(1.0, 0.0, 1.0).unwrap();
        let b = ReferenceSchedule::new(vec![(1.5, 0.25)]).unwrap();
        let s = a.superpose(&b);
        for t in [0.0, 0.5, 1.0, 1.5, 1.7, 2.0, 3.0] {
            assert_eq!(s.value_at(t), a.value_at(t) + b.value_at(t), "t = {t}");
        }
    }

    #[test]
    fn rejects_decreasing_times() {
        assert!(ReferenceSchedule::new(vec![(2.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(ReferenceSchedule::new(vec![(f64::NAN, 1.0)]).is_err());
    }
}
