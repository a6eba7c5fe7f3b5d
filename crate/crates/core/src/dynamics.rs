//! Analytic four-state device chain (idle, active, transmit, sleep), the
//! harvest-activity probability and the chain's stationary occupancy.
//!
//! In simulation the idle -> active transition is driven by actual event
//! draws; the matrix built here is the averaged, analysis-side view used for
//! energy prediction and for cross-checking the simulator.

use crate::chain;
use crate::error::{Error, Result};
use crate::model::{AreaSpec, DeviceState, DutyCycleConfig};
use crate::scalar::Real;

/// Energy-source model: rate `lambda` per TTI of duration `tau`, each
/// active TTI delivering `quantum` energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarvestModel<T> {
    pub lambda: T,
    pub tau: T,
    pub quantum: u32,
}

impl<T: Real> HarvestModel<T> {
    pub fn new(lambda: T, tau: T, quantum: u32) -> Result<Self> {
        if !(lambda > T::zero() && tau > T::zero()) || quantum == 0 {
            return Err(Error::Config(format!(
                "harvest model needs lambda > 0, tau > 0, quantum >= 1 (got {lambda}, {tau}, {quantum})"
            )));
        }
        Ok(Self { lambda, tau, quantum })
    }

    /// Per-TTI probability that the source is active.
    pub fn active_prob(&self) -> T {
        (self.lambda * self.tau) * (-(self.lambda * self.tau)).exp()
    }
}

/// Probability `lambda tau exp(-lambda tau)` that the energy source is active in a TTI.
pub fn harvest_active_prob<T: Real>(lambda: T, tau: T) -> Result<T> {
    if !(lambda > T::zero()) || !(tau > T::zero()) {
        return Err(Error::domain(
            "harvest_active_prob",
            format!("lambda {lambda} and tau {tau} must be positive"),
        ));
    }
    let x = lambda * tau;
    Ok(x * (-x).exp())
}

/// `P[S4 -> S1] = on_time / drx_cycle`.
pub fn p_sleep_to_idle<T: Real>(duty: &DutyCycleConfig) -> T {
    T::count(duty.on_time() as usize) / T::count(duty.drx_cycle() as usize)
}

/// `sum_{i=1}^{on} w^i (on - i) / (drx - i)`, the common core of the
/// idle self-loop (`w = 1 - alpha`) and the transmit -> idle return (`w = 1`).
fn schedule_sum<T: Real>(duty: &DutyCycleConfig, weight: T, func: &'static str) -> Result<T> {
    let on = duty.on_time() as usize;
    let drx = duty.drx_cycle() as usize;
    if drx <= on {
        return Err(Error::domain(
            func,
            format!("drx_cycle {drx} <= on_time {on}: summand (on - {drx})/(drx - {drx}) divides by zero"),
        ));
    }
    let mut acc = T::zero();
    let mut w = T::one();
    for i in 1..=on {
        w = w * weight;
        acc = acc + w * T::count(on - i) / T::count(drx - i);
    }
    Ok(acc)
}

fn check_unit<T: Real>(v: T, from: DeviceState, to: DeviceState, detail: &str) -> Result<T> {
    if v >= T::zero() && v <= T::one() {
        Ok(v)
    } else {
        Err(Error::ModelInconsistency {
            from: from.index() + 1,
            to: to.index() + 1,
            value: v.to_f64().unwrap_or(f64::NAN),
            detail: detail.to_string(),
        })
    }
}

/// Idle self-loop probability `P[S1 -> S1]`.
pub fn p_idle_self<T: Real>(duty: &DutyCycleConfig, alpha: T) -> Result<T> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::domain("p_idle_self", format!("alpha {alpha} outside [0, 1]")));
    }
    let v = schedule_sum(duty, T::one() - alpha, "p_idle_self")?;
    check_unit(
        v,
        DeviceState::Idle,
        DeviceState::Idle,
        &format!("on={} drx={} alpha={alpha}", duty.on_time(), duty.drx_cycle()),
    )
}

/// Transmit -> idle return probability `P[S3 -> S1]`.
pub fn p_tx_to_idle<T: Real>(duty: &DutyCycleConfig) -> Result<T> {
    let v = schedule_sum(duty, T::one(), "p_tx_to_idle")?;
    check_unit(
        v,
        DeviceState::Transmit,
        DeviceState::Idle,
        &format!("on={} drx={}", duty.on_time(), duty.drx_cycle()),
    )
}

/// Row-stochastic 4x4 transition matrix over `S1..S4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTransitionMatrix<T> {
    rows: [[T; 4]; 4],
}

impl<T: Real> StateTransitionMatrix<T> {
    /// Wraps a raw matrix after checking entries and row sums.
    pub fn from_rows(rows: [[T; 4]; 4]) -> Result<Self> {
        for (m, row) in rows.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                if !(v >= T::zero() && v <= T::one()) {
                    return Err(Error::ModelInconsistency {
                        from: m + 1,
                        to: n + 1,
                        value: v.to_f64().unwrap_or(f64::NAN),
                        detail: "entry outside [0, 1]".into(),
                    });
                }
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(8.0)) {
                return Err(Error::Numeric(format!("row S{} sums to {sum}", m + 1)));
            }
        }
        Ok(Self { rows })
    }

    pub fn get(&self, from: DeviceState, to: DeviceState) -> T {
        self.rows[from.index()][to.index()]
    }

    pub fn rows(&self) -> &[[T; 4]; 4] {
        &self.rows
    }

    fn flat(&self) -> [T; 16] {
        let mut out = [T::zero(); 16];
        for m in 0..4 {
            out[m * 4..m * 4 + 4].copy_from_slice(&self.rows[m]);
        }
        out
    }
}

/// Builds the analytic matrix from the schedule, event rate and the three
/// externally supplied probabilities.
///
/// `p_detect` is the activation probability for the reference distance,
/// `p_wake` is `P[S4 -> S2]` and `p_tx_capable` is `Pr(B >= E_tx)`.
pub fn build_transition_matrix<T: Real>(
    duty: &DutyCycleConfig,
    alpha: T,
    p_detect: T,
    p_wake: T,
    p_tx_capable: T,
) -> Result<StateTransitionMatrix<T>> {
    for (name, v) in [
        ("alpha", alpha),
        ("p_detect", p_detect),
        ("p_wake", p_wake),
        ("p_tx_capable", p_tx_capable),
    ] {
        if !(v >= T::zero() && v <= T::one()) {
            return Err(Error::domain(
                "build_transition_matrix",
                format!("{name} = {v} outside [0, 1]"),
            ));
        }
    }
    use DeviceState::*;
    let ctx = format!(
        "on={} drx={} alpha={alpha} p_detect={p_detect} p_wake={p_wake} p_tx_capable={p_tx_capable}",
        duty.on_time(),
        duty.drx_cycle()
    );
    let one = T::one();

    let p12 = alpha * p_detect;
    let p11 = p_idle_self(duty, alpha)?;
    let p14 = check_unit(one - p11 - p12, Idle, Sleep, &ctx)?;
    let p23 = p_tx_capable;
    let p24 = one - p23;
    let p31 = p_tx_to_idle(duty)?;
    let p34 = one - p31;
    let p41 = p_sleep_to_idle::<T>(duty);
    let p42 = p_wake;
    let p44 = check_unit(one - p41 - p42, Sleep, Sleep, &ctx)?;

    let z = T::zero();
    StateTransitionMatrix::from_rows([
        [p11, p12, z, p14],
        [z, z, p23, p24],
        [p31, z, z, p34],
        [p41, p42, z, p44],
    ])
}

/// Stationary state occupancy `(Pr(S1), .., Pr(S4))`.
pub fn state_stationary<T: Real>(matrix: &StateTransitionMatrix<T>) -> Result<[T; 4]> {
    let pi = chain::stationary(4, &matrix.flat())?;
    Ok([pi[0], pi[1], pi[2], pi[3]])
}

/// `max |(pi P - pi)_j|` for the 4-state chain.
pub fn state_residual<T: Real>(matrix: &StateTransitionMatrix<T>, pi: &[T; 4]) -> T {
    chain::stationary_residual(4, &matrix.flat(), pi)
}

/// Mean energy per TTI implied by an occupancy vector: sensing and active
/// states pay `e_idle`, a transmission pays `e_tx`, sleep is free.
pub fn expected_consumption<T: Real>(pi: &[T; 4], e_idle: T, e_tx: T) -> T {
    (pi[0] + pi[1]) * e_idle + pi[2] * e_tx
}

// 5-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Spatial average of `exp(-eta d)` for independent uniform device and
/// epicenter positions in `area`, accurate to about 1e-6.
///
/// Uses the triangular densities of the coordinate differences and a
/// composite Gauss-Legendre rule refined until two successive panel counts
/// agree.
pub fn mean_detection_prob<T: Real>(area: &AreaSpec<T>, eta: T) -> Result<T> {
    if !(eta > T::zero()) {
        return Err(Error::domain("mean_detection_prob", format!("eta {eta} <= 0")));
    }
    let (w, h) = (area.width, area.height);
    let two = T::lit(2.0);
    let integrand = |u: T, v: T| (-eta * u.hypot(v)).exp() * two * (w - u) / (w * w) * two * (h - v) / (h * h);
    let rule = |panels: usize| -> T {
        let nodes = |len: T| -> Vec<(T, T)> {
            let step = len / T::count(panels);
            let half = step / two;
            let mut out = Vec::with_capacity(panels * 5);
            for k in 0..panels {
                let mid = step * T::count(k) + half;
                for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                    out.push((mid + half * T::lit(*x), half * T::lit(*wt)));
                }
            }
            out
        };
        let us = nodes(w);
        let vs = nodes(h);
        let mut acc = T::zero();
        for &(u, wu) in &us {
            let mut row = T::zero();
            for &(v, wv) in &vs {
                row = row + wv * integrand(u, v);
            }
            acc = acc + wu * row;
        }
        acc
    };
    let mut panels = 8;
    let mut prev = rule(panels);
    loop {
        panels *= 2;
        let cur = rule(panels);
        if (cur - prev).abs() < T::lit(1e-8) || panels >= 512 {
            return Ok(cur);
        }
        prev = cur;
    }
}
