//! Battery-level Markov chain, its stationary solve, the binomial
//! semi-closed transmit-capability expression and the coupled
//! state/battery fixed point.
//!
//! Levels are integer energy units `0..=e_max`. Each TTI the source
//! deposits `harvest_quantum` units with probability `harvest_prob`
//! (clamped at `e_max`), then an independent consumption `c` is drawn from
//! the consumption pmf and removed (clamped at 0). Harvest-before-spend
//! matches the simulator's per-TTI ordering.

use crate::chain;
use crate::dynamics::{build_transition_matrix, state_stationary, StateTransitionMatrix};
use crate::error::{Error, Result};
use crate::model::DutyCycleConfig;
use crate::scalar::Real;
use crate::special::{ln_gamma, reg_incomplete_beta};

/// Finite battery chain over levels `0..=e_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryChain<T> {
    e_max: u32,
    harvest_quantum: u32,
    harvest_prob: T,
    consumption_pmf: Vec<(u32, T)>,
    transition: Vec<T>,
}

impl<T: Real> BatteryChain<T> {
    pub fn n_states(&self) -> usize {
        self.e_max as usize + 1
    }

    pub fn e_max(&self) -> u32 {
        self.e_max
    }

    pub fn harvest_prob(&self) -> T {
        self.harvest_prob
    }

    pub fn harvest_quantum(&self) -> u32 {
        self.harvest_quantum
    }

    pub fn consumption_pmf(&self) -> &[(u32, T)] {
        &self.consumption_pmf
    }

    /// `Pr(level from -> level to)` in one TTI.
    pub fn prob(&self, from: u32, to: u32) -> T {
        self.transition[from as usize * self.n_states() + to as usize]
    }

    /// Row-major transition matrix.
    pub fn matrix(&self) -> &[T] {
        &self.transition
    }
}

/// Stationary battery-level distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryDistribution<T> {
    probabilities: Vec<T>,
}

impl<T: Real> BatteryDistribution<T> {
    pub fn new(probabilities: Vec<T>) -> Result<Self> {
        if probabilities.is_empty() || probabilities.iter().any(|&p| !(p >= T::zero())) {
            return Err(Error::Config(
                "battery distribution must be non-empty and non-negative".into(),
            ));
        }
        let total: T = probabilities.iter().copied().sum();
        if (total - T::one()).abs() > T::lit(1e-10).max(T::epsilon() * T::count(probabilities.len())) {
            return Err(Error::Config(format!("battery distribution sums to {total}")));
        }
        Ok(Self { probabilities })
    }

    pub fn probabilities(&self) -> &[T] {
        &self.probabilities
    }

    pub fn e_max(&self) -> u32 {
        (self.probabilities.len() - 1) as u32
    }

    pub fn mean(&self) -> T {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(b, &p)| T::count(b) * p)
            .sum()
    }
}

/// Builds the battery chain for a harvest quantum and a consumption pmf
/// given as `(units, probability)` pairs.
pub fn build_battery_chain<T: Real>(
    e_max: u32,
    harvest_quantum: u32,
    harvest_prob: T,
    consumption_pmf: &[(u32, T)],
) -> Result<BatteryChain<T>> {
    if e_max == 0 {
        return Err(Error::Config("battery capacity e_max must be >= 1".into()));
    }
    if !(harvest_prob >= T::zero() && harvest_prob <= T::one()) {
        return Err(Error::Config(format!(
            "harvest probability {harvest_prob} outside [0, 1]"
        )));
    }
    if consumption_pmf.is_empty() {
        return Err(Error::Config("consumption pmf is empty".into()));
    }
    if consumption_pmf.iter().any(|&(_, p)| !(p >= T::zero())) {
        return Err(Error::Config("consumption pmf has a negative entry".into()));
    }
    let total: T = consumption_pmf.iter().map(|&(_, p)| p).sum();
    if (total - T::one()).abs() > T::lit(1e-9) {
        return Err(Error::Config(format!("consumption pmf sums to {total}, expected 1")));
    }

    let n = e_max as usize + 1;
    let mut transition = vec![T::zero(); n * n];
    let outcomes = [(0u32, T::one() - harvest_prob), (harvest_quantum, harvest_prob)];
    for level in 0..=e_max {
        let row = &mut transition[level as usize * n..(level as usize + 1) * n];
        for &(gain, pg) in &outcomes {
            if pg == T::zero() {
                continue;
            }
            let charged = level.saturating_add(gain).min(e_max);
            for &(cost, pc) in consumption_pmf {
                let next = charged.saturating_sub(cost);
                row[next as usize] = row[next as usize] + pg * pc;
            }
        }
    }
    Ok(BatteryChain {
        e_max,
        harvest_quantum,
        harvest_prob,
        consumption_pmf: consumption_pmf.to_vec(),
        transition,
    })
}

/// Stationary distribution of the battery chain.
pub fn battery_stationary<T: Real>(chain: &BatteryChain<T>) -> Result<BatteryDistribution<T>> {
    let n = chain.n_states();
    let pi = chain::stationary(n, &chain.transition)?;
    Ok(BatteryDistribution { probabilities: pi })
}

/// `Pr(B >= threshold)`; `unreachable` flags a threshold above capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailProbability<T> {
    pub prob: T,
    pub unreachable: bool,
}

pub fn pr_battery_at_least<T: Real>(dist: &BatteryDistribution<T>, threshold: u32) -> TailProbability<T> {
    if threshold > dist.e_max() {
        return TailProbability {
            prob: T::zero(),
            unreachable: true,
        };
    }
    TailProbability {
        prob: dist.probabilities[threshold as usize..].iter().copied().sum(),
        unreachable: false,
    }
}

/// Binomial-sum transmit capability and its beta-function counterpart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiClosed<T> {
    /// `sum_{x=e_tx}^{e_max} C(x, e_tx) p^e_tx (1 - p)^(x - e_tx)`.
    pub binomial_sum: T,
    /// `I_p(e_tx + 1, e_max + 1)`.
    pub beta_form: T,
}

/// Reference evaluation of the semi-closed binomial expression for
/// `Pr(B >= E_tx)` with success parameter `p_enter = P[S1->S2] + P[S4->S2]`.
///
/// This is kept for comparison only; [`battery_stationary`] is the ground truth.
pub fn pr_transmit_semiclosed<T: Real>(p_enter: T, e_tx: u32, e_max: u32) -> Result<SemiClosed<T>> {
    if !(p_enter >= T::zero() && p_enter <= T::one()) {
        return Err(Error::domain(
            "pr_transmit_semiclosed",
            format!("p_enter {p_enter} outside [0, 1]"),
        ));
    }
    if e_tx == 0 || e_tx > e_max {
        return Err(Error::domain(
            "pr_transmit_semiclosed",
            format!("need 0 < e_tx <= e_max, got e_tx={e_tx} e_max={e_max}"),
        ));
    }
    let one = T::one();
    let binomial_sum = if p_enter == T::zero() {
        T::zero()
    } else if p_enter == one {
        // only the x = e_tx term survives (0^0 = 1)
        one
    } else {
        let k = T::count(e_tx as usize);
        let ln_p = p_enter.ln();
        let ln_q = (one - p_enter).ln();
        (e_tx..=e_max)
            .map(|x| {
                let xt = T::count(x as usize);
                let ln_choose = ln_gamma(xt + one) - ln_gamma(k + one) - ln_gamma(xt - k + one);
                (ln_choose + k * ln_p + (xt - k) * ln_q).exp()
            })
            .sum()
    };
    let beta_form = reg_incomplete_beta(p_enter, T::count(e_tx as usize + 1), T::count(e_max as usize + 1))?;
    Ok(SemiClosed {
        binomial_sum,
        beta_form,
    })
}

/// Inputs of the coupled state/battery fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoupledParams<T> {
    pub duty: DutyCycleConfig,
    pub alpha: T,
    /// Event-conditional activation probability used for `P[S1->S2]`.
    pub p_detect: T,
    /// `P[S4->S2]`.
    pub p_wake: T,
    pub harvest_prob: T,
    pub harvest_quantum: u32,
    pub e_idle: u32,
    pub e_tx: u32,
    pub e_max: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint<T> {
    pub occupancy: [T; 4],
    pub battery: BatteryDistribution<T>,
    pub p_tx_capable: T,
    pub matrix: StateTransitionMatrix<T>,
    pub iterations: usize,
}

const FIXED_POINT_TOL: f64 = 1e-8;
const FIXED_POINT_MAX_ITER: usize = 1000;

/// Iterates state occupancy -> consumption pmf -> battery distribution ->
/// `Pr(B >= e_tx)` until the transmit capability settles.
///
/// Starting guess is `p_tx_capable = 1`. When successive updates change
/// direction the next iterate is the average of the last two.
pub fn coupled_fixed_point<T: Real>(params: &CoupledParams<T>) -> Result<FixedPoint<T>> {
    let tol = T::lit(FIXED_POINT_TOL);
    let mut p_tx = T::one();
    let mut last_step: Option<T> = None;
    let mut trace: Vec<f64> = Vec::new();

    for iteration in 1..=FIXED_POINT_MAX_ITER {
        let matrix = build_transition_matrix(&params.duty, params.alpha, params.p_detect, params.p_wake, p_tx)?;
        let occupancy = state_stationary(&matrix)?;
        let pmf = consumption_pmf(&occupancy, params.e_idle, params.e_tx);
        let chain = build_battery_chain(params.e_max, params.harvest_quantum, params.harvest_prob, &pmf)?;
        let battery = battery_stationary(&chain)?;
        let target = pr_battery_at_least(&battery, params.e_tx).prob;

        let step = target - p_tx;
        trace.push(target.to_f64().unwrap_or(f64::NAN));
        if trace.len() > 6 {
            trace.remove(0);
        }
        if step.abs() <= tol {
            return Ok(FixedPoint {
                occupancy,
                battery,
                p_tx_capable: target,
                matrix,
                iterations: iteration,
            });
        }
        let oscillating = matches!(last_step, Some(prev) if prev * step < T::zero());
        p_tx = if oscillating {
            (p_tx + target) / T::lit(2.0)
        } else {
            target
        };
        last_step = Some(step);
    }
    Err(Error::IterationLimit {
        iterations: FIXED_POINT_MAX_ITER,
        trace,
    })
}

/// Per-TTI consumption implied by state occupancy: idle and active pay
/// `e_idle`, transmit pays `e_tx`, sleep pays nothing.
pub fn consumption_pmf<T: Real>(occupancy: &[T; 4], e_idle: u32, e_tx: u32) -> Vec<(u32, T)> {
    let mut pmf: Vec<(u32, T)> = Vec::with_capacity(3);
    let mut add = |units: u32, p: T| {
        if let Some(entry) = pmf.iter_mut().find(|(u, _)| *u == units) {
            entry.1 = entry.1 + p;
        } else {
            pmf.push((units, p));
        }
    };
    add(e_idle, occupancy[0] + occupancy[1]);
    add(e_tx, occupancy[2]);
    add(0, occupancy[3]);
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_drain() {
        let chain = build_battery_chain(2, 1, 0.0, &[(1, 1.0)]).unwrap();
        assert_eq!(chain.prob(2, 1), 1.0);
        assert_eq!(chain.prob(1, 0), 1.0);
        assert_eq!(chain.prob(0, 0), 1.0);
        let dist = battery_stationary(&chain).unwrap();
        assert_eq!(dist.probabilities(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn pure_charge() {
        let chain = build_battery_chain(2, 1, 1.0, &[(0, 1.0)]).unwrap();
        let dist = battery_stationary(&chain).unwrap();
        assert_eq!(dist.probabilities(), &[0.0, 0.0, 1.0]);
        assert_eq!(pr_battery_at_least(&dist, 2).prob, 1.0);
    }

    #[test]
    fn two_level_birth_death() {
        let (p, q) = (0.3f64, 0.45);
        let chain = build_battery_chain(1, 1, p, &[(1, q), (0, 1.0 - q)]).unwrap();
        let dist = battery_stationary(&chain).unwrap();
        // up: harvest then no spend; down: any spend, since a full battery stays full after harvest
        let closed = p * (1.0 - q) / (p * (1.0 - q) + q);
        assert!((dist.probabilities()[1] - closed).abs() < 1e-14);
        // brute-force matrix power
        let mut v = [1.0f64, 0.0];
        for _ in 0..10_000 {
            v = [
                v[0] * chain.prob(0, 0) + v[1] * chain.prob(1, 0),
                v[0] * chain.prob(0, 1) + v[1] * chain.prob(1, 1),
            ];
        }
        assert!((v[1] - closed).abs() < 1e-12);
    }

    #[test]
    fn pmf_validation() {
        assert!(build_battery_chain::<f64>(2, 1, 0.5, &[]).is_err());
        assert!(build_battery_chain(2, 1, 0.5, &[(1, 0.5)]).is_err());
        assert!(build_battery_chain(2, 1, 0.5, &[(1, 0.5), (0, 0.5 + 1e-10)]).is_ok());
        assert!(build_battery_chain(0, 1, 0.5, &[(1, 1.0)]).is_err());
    }

    #[test]
    fn degenerate_battery_chain() {
        // neither harvest nor consumption: every level is its own class
        let chain = build_battery_chain(2, 1, 0.0, &[(0, 1.0)]).unwrap();
        assert!(matches!(battery_stationary(&chain), Err(Error::DegenerateChain { .. })));
    }

    #[test]
    fn tail_sums() {
        let dist = BatteryDistribution::new(vec![1.0f64 / 11.0; 11]).unwrap();
        assert!((pr_battery_at_least(&dist, 5).prob - 6.0 / 11.0).abs() < 1e-15);
        assert!((pr_battery_at_least(&dist, 0).prob - 1.0).abs() < 1e-15);
        let over = pr_battery_at_least(&dist, 11);
        assert_eq!(over.prob, 0.0);
        assert!(over.unreachable);
    }

    #[test]
    fn semiclosed_values() {
        assert_eq!(pr_transmit_semiclosed(0.0, 3, 5).unwrap().binomial_sum, 0.0);
        assert_eq!(pr_transmit_semiclosed(1.0, 1, 1).unwrap().binomial_sum, 1.0);
        let v = pr_transmit_semiclosed(0.3, 2, 4).unwrap().binomial_sum;
        let brute: f64 = (2..=4u32)
            .map(|x| {
                let c = f64::from(x * (x - 1) / 2);
                c * 0.09 * 0.7f64.powi(x as i32 - 2)
            })
            .sum();
        assert!((v - brute).abs() < 1e-13);
        assert!((v - 0.5436).abs() < 1e-12);
        assert!(pr_transmit_semiclosed(0.3, 0, 4).is_err());
        assert!(pr_transmit_semiclosed(0.3, 5, 4).is_err());
    }

    fn random_chain(rng: &mut ChaCha8Rng, e_max: u32) -> BatteryChain<f64> {
        let harvest = rng.random_range(0.05..0.95);
        let support = rng.random_range(1..4usize);
        let mut pmf: Vec<(u32, f64)> = vec![(0, rng.random_range(0.1..1.0))];
        for _ in 0..support {
            pmf.push((rng.random_range(1..=e_max.min(5)), rng.random_range(0.1..1.0)));
        }
        let s: f64 = pmf.iter().map(|p| p.1).sum();
        for p in pmf.iter_mut() {
            p.1 /= s;
        }
        build_battery_chain(e_max, rng.random_range(1..=3), harvest, &pmf).unwrap()
    }

    #[test]
    fn chains_are_stochastic_and_match_matrix_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let e_max = rng.random_range(1..30);
            let chain = random_chain(&mut rng, e_max);
            assert!(chain::max_row_defect(chain.n_states(), chain.matrix()) <= 1e-12);
            let dist = battery_stationary(&chain).unwrap();
            let n = chain.n_states();
            assert!(chain::stationary_residual(n, chain.matrix(), dist.probabilities()) <= 1e-10);
            let mut v = vec![0.0; n];
            v[n - 1] = 1.0;
            for _ in 0..1000 {
                let mut next = vec![0.0; n];
                for i in 0..n {
                    for j in 0..n {
                        next[j] += v[i] * chain.matrix()[i * n + j];
                    }
                }
                v = next;
            }
            for j in 0..n {
                assert!((v[j] - dist.probabilities()[j]).abs() < 1e-6);
            }
        }
    }

    fn base_params() -> CoupledParams<f64> {
        CoupledParams {
            duty: DutyCycleConfig::new(1, 4, 0).unwrap(),
            alpha: 0.05,
            p_detect: 0.0146,
            p_wake: 0.0,
            harvest_prob: (-1.0f64).exp(),
            harvest_quantum: 1,
            e_idle: 1,
            e_tx: 10,
            e_max: 100,
        }
    }

    #[test]
    fn fixed_point_without_harvest() {
        let params = CoupledParams {
            harvest_prob: 0.0,
            ..base_params()
        };
        let fp = coupled_fixed_point(&params).unwrap();
        assert!(fp.p_tx_capable.abs() < 1e-8);
        assert!(fp.battery.probabilities()[0] > 1.0 - 1e-8);
    }

    #[test]
    fn fixed_point_unreachable_threshold() {
        let params = CoupledParams {
            e_tx: 150,
            ..base_params()
        };
        let fp = coupled_fixed_point(&params).unwrap();
        assert_eq!(fp.p_tx_capable, 0.0);
        assert!(fp.iterations <= 2);
    }

    #[test]
    fn fixed_point_is_consistent() {
        let fp = coupled_fixed_point(&base_params()).unwrap();
        let again = build_transition_matrix(&base_params().duty, 0.05, 0.0146, 0.0, fp.p_tx_capable).unwrap();
        let pi = state_stationary(&again).unwrap();
        for j in 0..4 {
            assert!((pi[j] - fp.occupancy[j]).abs() < 1e-7);
        }
    }
}
