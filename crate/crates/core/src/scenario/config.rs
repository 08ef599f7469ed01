//! JSON experiment description and its resolution into runnable parts.

use serde::{Deserialize, Serialize};

use crate::allocator::{ReferenceMode, ThetaInit};
use crate::error::{config_err, Result};
use crate::linalg::Matrix;
use crate::plant::{Effectiveness, PlantModel};

use super::reference::ReferenceSchedule;

pub const DEFAULT_SIGNAL_CEILING: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantSource,
    pub allocator: AllocatorSection,
    pub controller: ControllerSection,
    pub scenario: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSource {
    Preset { preset: String },
    Explicit(ExplicitPlant),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPlant {
    pub a: Vec<Vec<f64>>,
    pub b_u: Vec<Vec<f64>>,
    pub b_v: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_labels: Option<Vec<String>>,
}

/// A square matrix given as `c` (meaning `c·I`), a diagonal, or full rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Diag(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn resolve(&self, dim: usize, name: &str) -> Result<Matrix> {
        let m = match self {
            MatrixSpec::Scalar(c) => Matrix::identity(dim).scale(*c)?,
            MatrixSpec::Diag(d) => Matrix::from_diag(d)?,
            MatrixSpec::Full(rows) => Matrix::from_rows(rows)?,
        };
        if m.shape() != (dim, dim) {
            return Err(config_err(format!(
                "{name} must be {dim}×{dim}, got {}×{}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocatorSection {
    pub gamma: MatrixSpec,
    pub a_m: MatrixSpec,
    #[serde(default)]
    pub l: f64,
    #[serde(default)]
    pub mode: ReferenceMode,
    #[serde(default)]
    pub theta_init: ThetaInit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bar: Option<f64>,
}

/// Which input matrix the gain is designed against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputModel {
    /// `B_u · B⁺`, the virtual-input map the plant actually realises.
    #[default]
    Projected,
    /// The nominal `B_v`.
    Factored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub q: MatrixSpec,
    pub r: MatrixSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<Vec<f64>>,
    #[serde(default)]
    pub input_model: InputModel,
    #[serde(default = "default_true")]
    pub integral: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Doublet {
    pub amplitude: f64,
    pub start: f64,
    pub width: f64,
}

/// One output channel: explicit `(time, value)` points plus doublets, summed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelReference {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub doublets: Vec<Doublet>,
}

impl ChannelReference {
    pub fn schedule(&self) -> Result<ReferenceSchedule> {
        let mut s = ReferenceSchedule::new(self.points.clone())?;
        for d in &self.doublets {
            s = s.superpose(&ReferenceSchedule::doublet(d.amplitude, d.start, d.width)?);
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EffectivenessSpec {
    Uniform(f64),
    PerActuator(Vec<f64>),
}

impl EffectivenessSpec {
    pub fn resolve(&self, m: usize) -> Result<Effectiveness> {
        let lam = match self {
            EffectivenessSpec::Uniform(level) => Effectiveness::uniform(m, *level)?,
            EffectivenessSpec::PerActuator(values) => Effectiveness::new(values.clone())?,
        };
        if lam.len() != m {
            return Err(config_err(format!(
                "effectiveness has {} entries, plant has {m} actuators",
                lam.len()
            )));
        }
        Ok(lam)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultEvent {
    pub time: f64,
    pub effectiveness: EffectivenessSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub duration: f64,
    #[serde(default)]
    pub references: Vec<ChannelReference>,
    #[serde(default)]
    pub faults: Vec<FaultEvent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Half-width of a uniform perturbation added to `x0`, drawn from `seed`.
    #[serde(default)]
    pub x0_jitter: f64,
    #[serde(default = "default_ceiling")]
    pub signal_ceiling: f64,
}

fn default_ceiling() -> f64 {
    DEFAULT_SIGNAL_CEILING
}

impl ScenarioConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("config parse: {e}")))
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| config_err(format!("config parse: {e}")))
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// ADMIRE at `Δt = 0.1 s` for 200 s with a uniform 30% effectiveness loss at 100 s.
    pub fn admire_benchmark() -> Self {
        let doublet = |amplitude, start, width| Doublet {
            amplitude,
            start,
            width,
        };
        Self {
            plant: PlantSource::Preset {
                preset: "admire".into(),
            },
            allocator: AllocatorSection {
                gamma: MatrixSpec::Diag(vec![1.0, 1.0, 0.1]),
                a_m: MatrixSpec::Diag(vec![0.5, 0.5, 0.5]),
                l: 0.1,
                mode: ReferenceMode::ClosedLoop,
                theta_init: ThetaInit::Pinv,
                lambda_bar: None,
            },
            controller: ControllerSection {
                q: MatrixSpec::Scalar(1.0),
                r: MatrixSpec::Diag(vec![1.0, 1.0, 0.1]),
                saturation: None,
                input_model: InputModel::Projected,
                integral: true,
            },
            scenario: RunSection {
                duration: 200.0,
                references: vec![
                    ChannelReference {
                        points: vec![],
                        doublets: vec![doublet(0.1, 20.0, 20.0), doublet(0.1, 110.0, 15.0)],
                    },
                    ChannelReference {
                        points: vec![],
                        doublets: vec![doublet(0.1, 60.0, 12.0), doublet(0.1, 142.0, 12.0)],
                    },
                    ChannelReference {
                        points: vec![(1.0, 0.05)],
                        doublets: vec![],
                    },
                ],
                faults: vec![FaultEvent {
                    time: 100.0,
                    effectiveness: EffectivenessSpec::Uniform(0.7),
                }],
                x0: None,
                seed: 0,
                x0_jitter: 0.0,
                signal_ceiling: DEFAULT_SIGNAL_CEILING,
            },
        }
    }

    pub fn build_plant(&self) -> Result<PlantModel> {
        match &self.plant {
            PlantSource::Preset { preset } => match preset.as_str() {
                "admire" => Ok(PlantModel::admire()),
                other => Err(config_err(format!("unknown plant preset '{other}'"))),
            },
            PlantSource::Explicit(p) => {
                let plant = PlantModel::new(
                    Matrix::from_rows(&p.a)?,
                    Matrix::from_rows(&p.b_u)?,
                    Matrix::from_rows(&p.b_v)?,
                    Matrix::from_rows(&p.b)?,
                    Matrix::from_rows(&p.c)?,
                    p.dt,
                )?;
                match (&p.state_labels, &p.input_labels) {
                    (None, None) => Ok(plant),
                    (states, inputs) => {
                        let states: Vec<String> = states
                            .clone()
                            .unwrap_or_else(|| plant.state_labels().to_vec());
                        let inputs: Vec<String> = inputs
                            .clone()
                            .unwrap_or_else(|| plant.input_labels().to_vec());
                        let s: Vec<&str> = states.iter().map(String::as_str).collect();
                        let i: Vec<&str> = inputs.iter().map(String::as_str).collect();
                        plant.with_labels(&s, &i)
                    }
                }
            }
        }
    }
}
