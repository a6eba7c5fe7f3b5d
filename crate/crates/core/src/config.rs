//! Simulation configuration and its validation.

use crate::dynamics::harvest_active_prob;
use crate::error::{Error, Result};
use crate::model::{sensing_power, AreaSpec};
use crate::policies::PolicyKind;
use crate::wakeup::{GeometryMode, WakeupParams, WakeupSensing};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub n_devices: usize,
    /// Event probability per TTI.
    pub alpha: f64,
    /// Sensing decay rate, 1/m.
    pub eta: f64,
    /// Maximum information per report.
    pub psi: f64,
    /// Minimum expected information per event.
    pub i_min: f64,
    pub e_max: u32,
    pub e_tx: u32,
    pub e_idle: u32,
    /// Units deposited by an active energy source in one TTI.
    pub e_h: u32,
    /// Product of the source rate and the TTI duration.
    pub lambda_tau: f64,
    /// Cluster radius; also sets the wake-up threshold `p(d_max)`.
    pub d_max: f64,
    pub k_neighbors: usize,
    pub policy: PolicyKind,
    pub wakeup_sensing: WakeupSensing,
    pub geometry_mode: GeometryMode,
    /// Metered TTIs per run.
    pub tti_count: u64,
    /// Unmetered warm-up TTIs; `None` means ten times the longest DRX cycle.
    pub burn_in: Option<u64>,
    pub n_runs: usize,
    pub base_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area_width: 20.0,
            area_height: 20.0,
            n_devices: 100,
            alpha: 0.5,
            eta: 1.0,
            psi: 1.0,
            i_min: (-2.0f64).exp(),
            e_max: 100,
            e_tx: 10,
            e_idle: 1,
            e_h: 3,
            lambda_tau: 1.0,
            d_max: 4.0,
            k_neighbors: 5,
            policy: PolicyKind::KnnCluster,
            wakeup_sensing: WakeupSensing::Deterministic,
            geometry_mode: GeometryMode::Oracle,
            tti_count: 10_000,
            burn_in: None,
            n_runs: 100,
            base_seed: 2024,
        }
    }
}

/// Non-fatal findings of [`SimConfig::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigWarning {
    /// `e_tx > e_max`: no device can ever transmit.
    UnreachableTransmit,
}

impl SimConfig {
    /// Checks every invariant. Errors name the offending key.
    pub fn validate(&self) -> Result<Vec<ConfigWarning>> {
        fn positive(key: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{key}` must be a positive number, got {v}")))
            }
        }
        positive("area_width", self.area_width)?;
        positive("area_height", self.area_height)?;
        positive("eta", self.eta)?;
        positive("psi", self.psi)?;
        positive("i_min", self.i_min)?;
        positive("lambda_tau", self.lambda_tau)?;
        positive("d_max", self.d_max)?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("`alpha` must lie in [0, 1], got {}", self.alpha)));
        }
        if self.i_min > self.psi {
            return Err(Error::Config(format!(
                "`i_min` ({}) must not exceed `psi` ({})",
                self.i_min, self.psi
            )));
        }
        for (key, v) in [
            ("n_devices", self.n_devices),
            ("k_neighbors", self.k_neighbors),
            ("n_runs", self.n_runs),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be >= 1")));
            }
        }
        for (key, v) in [("e_max", self.e_max), ("e_tx", self.e_tx), ("e_h", self.e_h)] {
            if v == 0 {
                return Err(Error::Config(format!("`{key}` must be >= 1")));
            }
        }
        let mut warnings = Vec::new();
        if self.e_tx > self.e_max {
            warnings.push(ConfigWarning::UnreachableTransmit);
        }
        Ok(warnings)
    }

    pub fn area(&self) -> AreaSpec<f64> {
        AreaSpec {
            width: self.area_width,
            height: self.area_height,
        }
    }

    /// Per-TTI probability that a device's energy source is active.
    pub fn harvest_prob(&self) -> f64 {
        harvest_active_prob(self.lambda_tau, 1.0).expect("validated lambda_tau")
    }

    /// Wake-up threshold `p(d_max)`.
    pub fn p_threshold(&self) -> f64 {
        sensing_power(self.d_max, self.eta).expect("validated d_max and eta")
    }

    pub fn wakeup_params(&self) -> WakeupParams {
        WakeupParams {
            psi: self.psi,
            eta: self.eta,
            i_min: self.i_min,
            p_threshold: self.p_threshold(),
            e_idle: self.e_idle,
            e_tx: self.e_tx,
            geometry: self.geometry_mode,
            sensing: self.wakeup_sensing,
        }
    }
}
