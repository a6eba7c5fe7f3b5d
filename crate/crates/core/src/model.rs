//! Domain types, geometry, the distance-decaying sensing function and
//! per-event information aggregation.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point inside the deployment rectangle, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Position<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Self) -> T {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Rectangular deployment area `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaSpec<T> {
    pub width: T,
    pub height: T,
}

impl<T: Real> AreaSpec<T> {
    pub fn new(width: T, height: T) -> Result<Self> {
        if !(width > T::zero() && height > T::zero()) {
            return Err(Error::Config(format!(
                "area must have positive width and height, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    /// Surface of the area in square meters.
    pub fn surface(&self) -> T {
        self.width * self.height
    }

    pub fn contains(&self, p: &Position<T>) -> bool {
        p.x >= T::zero() && p.x <= self.width && p.y >= T::zero() && p.y <= self.height
    }
}

impl AreaSpec<f64> {
    /// Uniform random point in the area.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Position<f64> {
        Position::new(rng.random::<f64>() * self.width, rng.random::<f64>() * self.height)
    }
}

/// Operational state of a device within a TTI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceState {
    /// S1: sensing, waiting for an event.
    Idle,
    /// S2: triggered by an event, about to transmit.
    Active,
    /// S3: transmitting to the base station.
    Transmit,
    /// S4: low-power sleep, harvesting only.
    Sleep,
}

impl DeviceState {
    pub const ALL: [DeviceState; 4] = [
        DeviceState::Idle,
        DeviceState::Active,
        DeviceState::Transmit,
        DeviceState::Sleep,
    ];

    /// Zero-based row/column index in the 4-state chain.
    pub fn index(self) -> usize {
        match self {
            DeviceState::Idle => 0,
            DeviceState::Active => 1,
            DeviceState::Transmit => 2,
            DeviceState::Sleep => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            DeviceState::Idle => "S1",
            DeviceState::Active => "S2",
            DeviceState::Transmit => "S3",
            DeviceState::Sleep => "S4",
        }
    }
}

/// Periodic ON/sleep schedule of a device, in TTIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DutyCycleConfig {
    on_time: u32,
    drx_cycle: u32,
    offset: u32,
}

impl DutyCycleConfig {
    pub fn new(on_time: u32, drx_cycle: u32, offset: u32) -> Result<Self> {
        if on_time == 0 || on_time > drx_cycle {
            return Err(Error::Config(format!(
                "duty cycle needs 1 <= on_time <= drx_cycle, got on={on_time} drx={drx_cycle}"
            )));
        }
        if offset >= drx_cycle {
            return Err(Error::Config(format!(
                "duty cycle offset {offset} must be < drx_cycle {drx_cycle}"
            )));
        }
        Ok(Self {
            on_time,
            drx_cycle,
            offset,
        })
    }

    pub fn always_on() -> Self {
        Self {
            on_time: 1,
            drx_cycle: 1,
            offset: 0,
        }
    }

    pub fn on_time(&self) -> u32 {
        self.on_time
    }

    pub fn drx_cycle(&self) -> u32 {
        self.drx_cycle
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    /// Whether the schedule is inside its ON window at `tti`.
    pub fn is_on(&self, tti: u64) -> bool {
        let drx = u64::from(self.drx_cycle);
        let phase = (tti % drx + drx - u64::from(self.offset)) % drx;
        phase < u64::from(self.on_time)
    }
}

impl Default for DutyCycleConfig {
    fn default() -> Self {
        Self::always_on()
    }
}

/// A deployed energy-harvesting device.
#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: usize,
    pub position: Position<f64>,
    /// Stored energy in integer units, `0..=e_max`.
    pub battery: u32,
    pub state: DeviceState,
    pub duty: DutyCycleConfig,
    /// Energy-source rate (per TTI).
    pub harvest_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub id: u64,
    pub tti: u64,
    pub epicenter: Position<f64>,
}

/// Information a device delivered about an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub device_id: usize,
    pub event_id: u64,
    pub information: f64,
}

/// Activation probability `exp(-eta * d)` of a sensing device at distance `d`.
pub fn sensing_power<T: Real>(d: T, eta: T) -> Result<T> {
    if !(d >= T::zero()) {
        return Err(Error::domain("sensing_power", format!("distance {d} < 0")));
    }
    if !(eta > T::zero()) {
        return Err(Error::domain("sensing_power", format!("eta {eta} <= 0")));
    }
    Ok((-eta * d).exp())
}

/// Information `psi * exp(-eta * d)` a device at distance `d` can report.
pub fn event_information<T: Real>(d: T, eta: T, psi: T) -> Result<T> {
    if !(psi > T::zero()) {
        return Err(Error::domain("event_information", format!("psi {psi} <= 0")));
    }
    Ok(psi * sensing_power(d, eta)?)
}

/// Information kept by the base station for one event: the best report,
/// or zero when nothing was delivered.
pub fn best_information<'a, I>(reports: I) -> f64
where
    I: IntoIterator<Item = &'a Report>,
{
    reports.into_iter().map(|r| r.information).fold(0.0, f64::max)
}

/// Drops `n` devices uniformly over `area`, full battery, idle, always-on schedule.
pub fn deploy_uniform<R: Rng + ?Sized>(
    n: usize,
    area: &AreaSpec<f64>,
    e_max: u32,
    harvest_rate: f64,
    rng: &mut R,
) -> Result<Vec<Device>> {
    if n == 0 {
        return Err(Error::Config("deployment needs at least one device".into()));
    }
    Ok((0..n)
        .map(|id| Device {
            id,
            position: area.sample(rng),
            battery: e_max,
            state: DeviceState::Idle,
            duty: DutyCycleConfig::default(),
            harvest_rate,
        })
        .collect())
}
