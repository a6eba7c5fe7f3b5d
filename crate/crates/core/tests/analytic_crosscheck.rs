//! The analytic chains against direct Monte Carlo sampling of the same
//! single-device dynamics.

use ehwake::battery::{coupled_fixed_point, CoupledParams};
use ehwake::dynamics::{build_transition_matrix, mean_detection_prob, state_stationary};
use ehwake::model::{AreaSpec, DeviceState, DutyCycleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEPS: usize = 1_000_000;

fn pick(row: &[f64; 4], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    3
}

#[test]
fn state_chain_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (on, drx, alpha, p_detect, p_wake, p_tx) in [
        (1, 4, 0.05, 0.3, 0.0, 1.0),
        (2, 8, 0.5, 0.0146, 0.01, 0.8),
        (1, 2, 0.9, 0.7, 0.2, 0.3),
    ] {
        let duty = DutyCycleConfig::new(on, drx, 0).unwrap();
        let m = build_transition_matrix(&duty, alpha, p_detect, p_wake, p_tx).unwrap();
        let pi = state_stationary(&m).unwrap();
        let rows = m.rows();
        let mut counts = [0usize; 4];
        let mut s = 3;
        for _ in 0..STEPS {
            s = pick(&rows[s], rng.random());
            counts[s] += 1;
        }
        for k in 0..4 {
            let freq = counts[k] as f64 / STEPS as f64;
            assert!(
                (freq - pi[k]).abs() < 0.01,
                "({on},{drx}) state {k}: {freq} vs {}",
                pi[k]
            );
        }
    }
}

/// Joint state/battery walk: transmission is possible only when the actual
/// battery holds `e_tx`, instead of the fixed point's averaged probability.
fn joint_walk(params: &CoupledParams<f64>, rng: &mut ChaCha8Rng) -> ([f64; 4], f64) {
    let full = build_transition_matrix(&params.duty, params.alpha, params.p_detect, params.p_wake, 1.0).unwrap();
    let rows = full.rows();
    let mut state = DeviceState::Sleep;
    let mut battery = params.e_max;
    let mut counts = [0usize; 4];
    let mut capable = 0usize;
    for _ in 0..STEPS {
        if rng.random::<f64>() < params.harvest_prob {
            battery = (battery + params.harvest_quantum).min(params.e_max);
        }
        let cost = match state {
            DeviceState::Idle | DeviceState::Active => params.e_idle,
            DeviceState::Transmit => params.e_tx,
            DeviceState::Sleep => 0,
        };
        battery = battery.saturating_sub(cost);
        counts[state.index()] += 1;
        if battery >= params.e_tx {
            capable += 1;
        }
        let next = if state == DeviceState::Active {
            if battery >= params.e_tx {
                2
            } else {
                3
            }
        } else {
            pick(&rows[state.index()], rng.random())
        };
        state = DeviceState::from_index(next).unwrap();
    }
    let freq = counts.map(|c| c as f64 / STEPS as f64);
    (freq, capable as f64 / STEPS as f64)
}

#[test]
fn coupled_fixed_point_matches_joint_walk() {
    let area = AreaSpec::new(20.0, 20.0).unwrap();
    let p_detect = mean_detection_prob(&area, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let base = CoupledParams {
        duty: DutyCycleConfig::new(1, 4, 0).unwrap(),
        alpha: 0.5,
        p_detect,
        p_wake: 0.0,
        harvest_prob: (-1.0f64).exp(),
        harvest_quantum: 3,
        e_idle: 1,
        e_tx: 10,
        e_max: 100,
    };
    let starved = CoupledParams {
        harvest_prob: 0.1,
        harvest_quantum: 1,
        p_detect: 0.2,
        p_wake: 0.05,
        ..base
    };
    for params in [base, starved] {
        let fp = coupled_fixed_point(&params).unwrap();
        let (freq, capable) = joint_walk(&params, &mut rng);
        for k in 0..4 {
            assert!(
                (freq[k] - fp.occupancy[k]).abs() < 0.02,
                "state {k}: {} vs {}",
                freq[k],
                fp.occupancy[k]
            );
        }
        assert!(
            (capable - fp.p_tx_capable).abs() < 0.02,
            "{capable} vs {}",
            fp.p_tx_capable
        );
    }
}
