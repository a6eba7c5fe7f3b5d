//! Energy-harvesting sensor networks with duty cycling and wake-up signalling.
//!
//! The analytic modules ([`dynamics`], [`battery`], [`chain`], [`special`])
//! are generic over the scalar type through [`Real`]; the simulator works in
//! `f64`. Concrete aliases for the common instantiation live at the crate root.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod chain;
pub mod config;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod model;
pub mod policies;
pub mod scalar;
pub mod sim;
pub mod special;
pub mod wakeup;

pub use battery::{
    battery_stationary, build_battery_chain, consumption_pmf, coupled_fixed_point, pr_battery_at_least,
    pr_transmit_semiclosed,
};
pub use config::{ConfigWarning, SimConfig};
pub use dynamics::{build_transition_matrix, state_stationary};
pub use energy::EnergyLedger;
pub use error::{Error, Result};
pub use model::{Device, DeviceState, DutyCycleConfig, Event, Report};
pub use policies::{Clustering, PolicyKind};
pub use scalar::Real;
pub use sim::{run_experiment, run_simulation, step_tti, Aggregate, Experiment, PolicyPlan, RunMetrics, TtiLog, World};
pub use wakeup::{GeometryMode, WakeupDecision, WakeupParams, WakeupSensing};

pub type Point = model::Position<f64>;
pub type Area = model::AreaSpec<f64>;
pub type TransitionMatrix = dynamics::StateTransitionMatrix<f64>;
pub type Harvest = dynamics::HarvestModel<f64>;
pub type BatteryChainF64 = battery::BatteryChain<f64>;
pub type BatteryDistributionF64 = battery::BatteryDistribution<f64>;
pub type CoupledParamsF64 = battery::CoupledParams<f64>;
pub type FixedPointF64 = battery::FixedPoint<f64>;
pub type SemiClosedF64 = battery::SemiClosed<f64>;
