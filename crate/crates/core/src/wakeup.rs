//! Base-station wake-up of spatially correlated sleeping devices when the
//! information received about an event falls short of `i_min`.

use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::model::{best_information, sensing_power, Device, DeviceState, Event, Report};
use crate::scalar::Real;

/// How the base station obtains the reporter geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryMode {
    /// Distances and angles taken from the true epicenter.
    Oracle,
    /// Reporter distance recovered from its information; the angle is
    /// averaged out.
    Estimated,
}

/// How a woken device senses the ongoing event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WakeupSensing {
    /// Always obtains `psi * p(d)`.
    Deterministic,
    /// Detects with probability `p(d)`, like an idle device.
    Bernoulli,
}

impl fmt::Display for GeometryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeometryMode::Oracle => "oracle-geometry",
            GeometryMode::Estimated => "estimated",
        })
    }
}

impl FromStr for GeometryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle-geometry" | "oracle" => Ok(GeometryMode::Oracle),
            "estimated" => Ok(GeometryMode::Estimated),
            other => Err(Error::Config(format!(
                "unknown geometry mode `{other}` (expected oracle-geometry or estimated)"
            ))),
        }
    }
}

impl fmt::Display for WakeupSensing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WakeupSensing::Deterministic => "deterministic",
            WakeupSensing::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for WakeupSensing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "deterministic" => Ok(WakeupSensing::Deterministic),
            "bernoulli" => Ok(WakeupSensing::Bernoulli),
            other => Err(Error::Config(format!(
                "unknown wakeup sensing `{other}` (expected deterministic or bernoulli)"
            ))),
        }
    }
}

/// Distance `-ln(I / psi) / eta` at which a device reports information `I`.
pub fn estimate_reporter_distance<T: Real>(information: T, psi: T, eta: T) -> Result<T> {
    if !(information > T::zero() && information <= psi) {
        return Err(Error::domain(
            "estimate_reporter_distance",
            format!("information {information} outside (0, {psi}]"),
        ));
    }
    if !(eta > T::zero()) {
        return Err(Error::domain("estimate_reporter_distance", format!("eta {eta} <= 0")));
    }
    Ok(-(information / psi).ln() / eta)
}

const RADICAND_SLACK: f64 = 1e-12;

/// `Pr(S3_j | S3_h)`: sensing power at the law-of-cosines distance between
/// device `j` and the epicenter, given the reporter distance `d_h`, the
/// device separation `d_jh` and the angle `phi` between them.
pub fn conditional_report_prob<T: Real>(d_h: T, d_jh: T, phi: T, eta: T) -> Result<T> {
    if !(d_h >= T::zero() && d_jh >= T::zero()) {
        return Err(Error::domain(
            "conditional_report_prob",
            format!("distances must be non-negative, got d_h={d_h} d_jh={d_jh}"),
        ));
    }
    let two = T::lit(2.0);
    let mut radicand = d_h * d_h + d_jh * d_jh - two * d_h * d_jh * phi.cos();
    if radicand < T::zero() {
        if radicand < -T::lit(RADICAND_SLACK) {
            return Err(Error::Numeric(format!(
                "law-of-cosines radicand {radicand} is negative"
            )));
        }
        radicand = T::zero();
    }
    sensing_power(radicand.sqrt(), eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WakeupParams {
    pub psi: f64,
    pub eta: f64,
    pub i_min: f64,
    /// Minimum correlation score `p(d_max)` for a device to be woken.
    pub p_threshold: f64,
    pub e_idle: u32,
    pub e_tx: u32,
    pub geometry: GeometryMode,
    pub sensing: WakeupSensing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WakeupDecision {
    /// Eligible sleepers and their scores, best first.
    pub candidates: Vec<(usize, f64)>,
    pub threshold: f64,
    /// Devices activated, in activation order.
    pub woken: Vec<usize>,
    /// Reports delivered by woken devices.
    pub delivered: Vec<Report>,
    pub initial_information: f64,
    pub final_information: f64,
}

const PHI_QUADRATURE_POINTS: usize = 1024;

fn correlation_score(
    device: &Device,
    reporters: &[(&Device, f64)],
    event: &Event,
    params: &WakeupParams,
) -> Result<f64> {
    let mut best = 0.0f64;
    for &(reporter, information) in reporters {
        let d_jh = device.position.distance(&reporter.position);
        let score = match params.geometry {
            GeometryMode::Oracle => {
                let d_h = reporter.position.distance(&event.epicenter);
                let phi = if d_h == 0.0 || d_jh == 0.0 {
                    0.0
                } else {
                    let to_event = (
                        event.epicenter.x - reporter.position.x,
                        event.epicenter.y - reporter.position.y,
                    );
                    let to_device = (
                        device.position.x - reporter.position.x,
                        device.position.y - reporter.position.y,
                    );
                    let cos = (to_event.0 * to_device.0 + to_event.1 * to_device.1) / (d_h * d_jh);
                    cos.clamp(-1.0, 1.0).acos()
                };
                conditional_report_prob(d_h, d_jh, phi, params.eta)?
            }
            GeometryMode::Estimated => {
                let d_h = estimate_reporter_distance(information, params.psi, params.eta)?;
                let step = 2.0 * core::f64::consts::PI / PHI_QUADRATURE_POINTS as f64;
                let mut acc = 0.0;
                for k in 0..PHI_QUADRATURE_POINTS {
                    acc += conditional_report_prob(d_h, d_jh, step * k as f64, params.eta)?;
                }
                acc / PHI_QUADRATURE_POINTS as f64
            }
        };
        best = best.max(score);
    }
    Ok(best)
}

/// Runs one sequential wake-up round for `event`.
///
/// Nothing happens when the best reported information already meets
/// `i_min`. Otherwise every sleeping device holding at least `e_tx` units
/// is scored by its maximum correlation with the reporters, candidates
/// below `p_threshold` are dropped and the rest are woken best-first:
/// each pays `e_idle`, senses the event, and transmits (paying `e_tx`)
/// when it still can. The round stops once `i_min` is reached.
///
/// `devices[i].id` must equal `i`.
pub fn wakeup_round<R: Rng + ?Sized>(
    event: &Event,
    reporters: &[Report],
    devices: &mut [Device],
    params: &WakeupParams,
    ledger: &mut EnergyLedger,
    rng: &mut R,
) -> Result<WakeupDecision> {
    let initial = best_information(reporters);
    let mut decision = WakeupDecision {
        candidates: Vec::new(),
        threshold: params.p_threshold,
        woken: Vec::new(),
        delivered: Vec::new(),
        initial_information: initial,
        final_information: initial,
    };
    if reporters.is_empty() || initial >= params.i_min {
        return Ok(decision);
    }

    let reporter_geometry: Vec<(&Device, f64)> = reporters
        .iter()
        .map(|r| (&devices[r.device_id], r.information))
        .collect();
    let mut candidates = Vec::new();
    for device in devices.iter() {
        if device.state != DeviceState::Sleep || device.battery < params.e_tx {
            continue;
        }
        let score = correlation_score(device, &reporter_geometry, event, params)?;
        if score >= params.p_threshold {
            candidates.push((device.id, score));
        }
    }
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    drop(reporter_geometry);

    let mut info = initial;
    for &(id, _) in &candidates {
        if info >= params.i_min {
            break;
        }
        let device = &mut devices[id];
        decision.woken.push(id);
        if !ledger.spend(device, params.e_idle) {
            device.state = DeviceState::Sleep;
            continue;
        }
        device.state = DeviceState::Active;
        let activation = sensing_power(device.position.distance(&event.epicenter), params.eta)?;
        let sensed = match params.sensing {
            WakeupSensing::Deterministic => true,
            WakeupSensing::Bernoulli => rng.random::<f64>() < activation,
        };
        if !sensed {
            device.state = DeviceState::Sleep;
            continue;
        }
        if device.battery >= params.e_tx {
            ledger.spend(device, params.e_tx);
            device.state = DeviceState::Transmit;
            let report = Report {
                device_id: id,
                event_id: event.id,
                information: params.psi * activation,
            };
            info = info.max(report.information);
            decision.delivered.push(report);
        } else {
            device.state = DeviceState::Sleep;
        }
    }
    decision.candidates = candidates;
    decision.final_information = info;
    Ok(decision)
}
