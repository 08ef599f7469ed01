//! Discrete adaptive control allocation with an LQR outer loop.
//!
//! The allocator distributes a virtual command `v` over redundant actuators
//! whose effectiveness is unknown, adapting from the measured net moment
//! alone. A simulation harness closes the loop around a linear plant and
//! records everything needed to audit the adaptation.

pub mod allocator;
pub mod controller;
pub mod error;
pub mod linalg;
pub mod plant;
pub mod scenario;

pub use allocator::{AllocatorConfig, AllocatorState, ReferenceMode, ThetaInit};
pub use controller::{solve_dare, AugmentedSystem, Controller, LqrSolution};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use plant::{Effectiveness, PlantModel, PlantState};
pub use scenario::{Scenario, ScenarioConfig, ScenarioTrace};
