//! Per-TTI world update, single runs, metrics and seeded Monte Carlo
//! experiments.
//!
//! Every random draw of a run comes from one ChaCha stream selected by
//! `(base_seed, run index)`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::SimConfig;
use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::model::{
    best_information, deploy_uniform, sensing_power, Device, DeviceState, DutyCycleConfig, Event, Report,
};
use crate::policies::{
    cluster_count, genie_detector, grid_search_duty, knn_clustering, random_duty_policy, round_robin_schedule,
    Clustering, GridSearchOutcome, PolicyKind, RANDOM_DRX_CYCLES, RANDOM_ON_TIMES,
};
use crate::wakeup::{wakeup_round, WakeupDecision, WakeupParams};

/// Fully resolved duty-cycling plan for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyPlan {
    Random,
    /// Network-uniform `(on, drx)` with a random offset per device.
    Uniform {
        on_time: u32,
        drx_cycle: u32,
    },
    KnnCluster,
    Genie,
}

impl PolicyPlan {
    pub fn kind(&self) -> PolicyKind {
        match self {
            PolicyPlan::Random => PolicyKind::Random,
            PolicyPlan::Uniform { .. } => PolicyKind::GridSearch,
            PolicyPlan::KnnCluster => PolicyKind::KnnCluster,
            PolicyPlan::Genie => PolicyKind::Genie,
        }
    }
}

/// Random stream for run `index` of an experiment seeded with `base_seed`.
pub fn run_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

/// What happened in one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct TtiLog {
    pub tti: u64,
    pub event: Option<Event>,
    /// Reports from devices that detected the event on their own.
    pub detections: Vec<Report>,
    pub wakeup: Option<WakeupDecision>,
    /// Information kept for the event after wake-up; 0 without an event.
    pub final_information: f64,
    /// Energy units removed from batteries this TTI, network-wide.
    pub energy_spent: u64,
    /// Devices per state `S1..S4` after event handling.
    pub census: [usize; 4],
}

/// Single-writer simulation state of one run.
#[derive(Debug, Clone)]
pub struct World {
    pub devices: Vec<Device>,
    pub clock: u64,
    pub plan: PolicyPlan,
    pub clustering: Option<Clustering>,
    config: SimConfig,
    harvest_prob: f64,
    wakeup: WakeupParams,
    ledger: EnergyLedger,
    next_event_id: u64,
    rng: ChaCha8Rng,
}

impl World {
    /// Deploys devices and installs the schedule of `plan`, drawing from `rng`.
    pub fn new(config: &SimConfig, plan: PolicyPlan, mut rng: ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let harvest_prob = config.harvest_prob();
        let mut devices = deploy_uniform(
            config.n_devices,
            &config.area(),
            config.e_max,
            config.lambda_tau,
            &mut rng,
        )?;
        let mut clustering = None;
        match plan {
            PolicyPlan::Random => {
                for (d, duty) in devices.iter_mut().zip(random_duty_policy(config.n_devices, &mut rng)) {
                    d.duty = duty;
                }
            }
            PolicyPlan::Uniform { on_time, drx_cycle } => {
                for d in devices.iter_mut() {
                    let offset = rng.random_range(0..drx_cycle);
                    d.duty = DutyCycleConfig::new(on_time, drx_cycle, offset)?;
                }
            }
            PolicyPlan::KnnCluster => {
                let m = cluster_count(&config.area(), config.d_max).min(config.n_devices);
                let positions: Vec<_> = devices.iter().map(|d| d.position).collect();
                let c = knn_clustering(&positions, m, config.k_neighbors, &mut rng)?;
                for (d, duty) in devices.iter_mut().zip(round_robin_schedule(&c)) {
                    d.duty = duty;
                }
                clustering = Some(c);
            }
            PolicyPlan::Genie => {
                for d in devices.iter_mut() {
                    d.state = DeviceState::Sleep;
                }
            }
        }
        let ledger = EnergyLedger::new(&devices);
        Ok(Self {
            devices,
            clock: 0,
            plan,
            clustering,
            config: config.clone(),
            harvest_prob,
            wakeup: config.wakeup_params(),
            ledger,
            next_event_id: 0,
            rng,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn ledger_balanced(&self) -> bool {
        self.ledger.balanced(&self.devices)
    }

    /// Longest DRX cycle in the deployment.
    pub fn max_drx(&self) -> u64 {
        self.devices
            .iter()
            .map(|d| u64::from(d.duty.drx_cycle()))
            .max()
            .unwrap_or(1)
    }

    fn scheduled_state(&self, duty: &DutyCycleConfig, tti: u64) -> DeviceState {
        if self.plan != PolicyPlan::Genie && duty.is_on(tti) {
            DeviceState::Idle
        } else {
            DeviceState::Sleep
        }
    }
}

/// Advances the world by one TTI.
///
/// Order: harvest, schedule, event draw, idle sensing and detection,
/// transmission, wake-up, return to schedule. Under the genie plan the
/// schedule/detection/transmission phases are replaced by activating the
/// device nearest to the epicenter.
pub fn step_tti(world: &mut World) -> Result<TtiLog> {
    let tti = world.clock;
    let cfg = &world.config;
    let (e_idle, e_tx, e_max, e_h) = (cfg.e_idle, cfg.e_tx, cfg.e_max, cfg.e_h);
    let (alpha, eta, psi, i_min) = (cfg.alpha, cfg.eta, cfg.psi, cfg.i_min);
    let area = cfg.area();

    // harvest
    let hp = world.harvest_prob;
    for d in world.devices.iter_mut() {
        if world.rng.random::<f64>() < hp {
            world.ledger.harvest(d, e_h, e_max);
        }
    }

    // schedule
    for i in 0..world.devices.len() {
        let s = world.scheduled_state(&world.devices[i].duty, tti);
        world.devices[i].state = s;
    }

    // event
    let event = if world.rng.random::<f64>() < alpha {
        let e = Event {
            id: world.next_event_id,
            tti,
            epicenter: area.sample(&mut world.rng),
        };
        world.next_event_id += 1;
        Some(e)
    } else {
        None
    };

    let mut detections = Vec::new();
    if world.plan == PolicyPlan::Genie {
        if let Some(ev) = &event {
            let id = genie_detector(ev, &world.devices).expect("non-empty deployment");
            let d = &mut world.devices[id];
            if world.ledger.spend(d, e_idle) {
                d.state = DeviceState::Active;
                if world.ledger.spend(d, e_tx) {
                    d.state = DeviceState::Transmit;
                    detections.push(Report {
                        device_id: id,
                        event_id: ev.id,
                        information: psi * sensing_power(d.position.distance(&ev.epicenter), eta)?,
                    });
                } else {
                    d.state = DeviceState::Sleep;
                }
            }
        }
    } else {
        // idle sensing; a device that cannot pay fails and sleeps
        for d in world.devices.iter_mut() {
            if d.state != DeviceState::Idle {
                continue;
            }
            if !world.ledger.spend(d, e_idle) {
                d.state = DeviceState::Sleep;
                continue;
            }
            if let Some(ev) = &event {
                let p = sensing_power(d.position.distance(&ev.epicenter), eta)?;
                if world.rng.random::<f64>() < p {
                    d.state = DeviceState::Active;
                }
            }
        }
        // transmission
        if let Some(ev) = &event {
            for d in world.devices.iter_mut() {
                if d.state != DeviceState::Active {
                    continue;
                }
                if d.battery >= e_tx {
                    world.ledger.spend(d, e_tx);
                    d.state = DeviceState::Transmit;
                    detections.push(Report {
                        device_id: d.id,
                        event_id: ev.id,
                        information: psi * sensing_power(d.position.distance(&ev.epicenter), eta)?,
                    });
                } else {
                    world.ledger.spend(d, e_tx);
                    d.state = DeviceState::Sleep;
                }
            }
        }
    }

    // wake-up; pointless under the genie plan, whose reporter is already the closest device
    let mut wakeup = None;
    let mut final_information = best_information(&detections);
    if let Some(ev) = &event {
        if world.plan != PolicyPlan::Genie && !detections.is_empty() && final_information < i_min {
            let decision = wakeup_round(
                ev,
                &detections,
                &mut world.devices,
                &world.wakeup,
                &mut world.ledger,
                &mut world.rng,
            )?;
            final_information = decision.final_information;
            wakeup = Some(decision);
        }
    }

    let mut census = [0usize; 4];
    for d in &world.devices {
        census[d.state.index()] += 1;
    }

    // return to schedule
    for i in 0..world.devices.len() {
        if matches!(world.devices[i].state, DeviceState::Active | DeviceState::Transmit) {
            let s = world.scheduled_state(&world.devices[i].duty, tti);
            world.devices[i].state = s;
        }
    }

    world.clock += 1;
    Ok(TtiLog {
        tti,
        event,
        detections,
        wakeup,
        final_information,
        energy_spent: world.ledger.take_tti_spent(),
        census,
    })
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Missed events over events; `None` when no event occurred.
    pub misdetection_prob: Option<f64>,
    /// Energy units per device per metered TTI; `None` for an empty run.
    pub mean_ec: Option<f64>,
    /// Sum of per-event information over `alpha * K`; `None` when that is 0.
    pub mean_info: Option<f64>,
    pub events_total: u64,
    pub events_missed: u64,
    pub tti_count: u64,
    pub n_devices: usize,
    pub seed: u64,
    pub stream: u64,
    pub ledger_balanced: bool,
}

/// Streaming reduction of metered TTI logs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsAccumulator {
    pub ttis: u64,
    pub energy: u64,
    pub events: u64,
    pub missed: u64,
    pub info_sum: f64,
}

impl MetricsAccumulator {
    pub fn push(&mut self, log: &TtiLog) {
        self.ttis += 1;
        self.energy += log.energy_spent;
        if log.event.is_some() {
            self.events += 1;
            self.info_sum += log.final_information;
            if log.final_information <= 0.0 {
                self.missed += 1;
            }
        }
    }

    pub fn mean_ec(&self, n_devices: usize) -> Option<f64> {
        (self.ttis > 0 && n_devices > 0).then(|| self.energy as f64 / (n_devices as f64 * self.ttis as f64))
    }

    pub fn mean_info(&self, alpha: f64) -> Option<f64> {
        let expected = alpha * self.ttis as f64;
        (expected > 0.0).then(|| self.info_sum / expected)
    }

    pub fn misdetection(&self) -> Option<f64> {
        (self.events > 0).then(|| self.missed as f64 / self.events as f64)
    }
}

fn accumulate(logs: &[TtiLog]) -> MetricsAccumulator {
    let mut acc = MetricsAccumulator::default();
    for log in logs {
        acc.push(log);
    }
    acc
}

/// Energy units consumed per device per TTI.
pub fn mean_energy_consumption(logs: &[TtiLog], n_devices: usize) -> Option<f64> {
    accumulate(logs).mean_ec(n_devices)
}

/// Information per event normalized by the expected event count `alpha * k`.
pub fn mean_information_per_event(logs: &[TtiLog], alpha: f64, k: u64) -> Option<f64> {
    let expected = alpha * k as f64;
    (expected > 0.0).then(|| accumulate(logs).info_sum / expected)
}

/// Fraction of events for which no information reached the base station.
pub fn misdetection_probability(logs: &[TtiLog]) -> Option<f64> {
    accumulate(logs).misdetection()
}

/// Runs burn-in plus `tti_count` metered TTIs on a fresh world drawn from
/// stream `stream` of `seed`. The metered logs are returned when `trace` is set.
pub fn run_simulation(
    config: &SimConfig,
    plan: PolicyPlan,
    seed: u64,
    stream: u64,
    trace: bool,
) -> Result<(RunMetrics, Option<Vec<TtiLog>>)> {
    let mut world = World::new(config, plan, run_rng(seed, stream))?;
    let burn_in = config.burn_in.unwrap_or(10 * world.max_drx());
    for _ in 0..burn_in {
        step_tti(&mut world)?;
    }
    let mut acc = MetricsAccumulator::default();
    let mut logs = trace.then(Vec::new);
    for _ in 0..config.tti_count {
        let log = step_tti(&mut world)?;
        acc.push(&log);
        if let Some(l) = logs.as_mut() {
            l.push(log);
        }
    }
    let metrics = RunMetrics {
        misdetection_prob: acc.misdetection(),
        mean_ec: acc.mean_ec(config.n_devices),
        mean_info: acc.mean_info(config.alpha),
        events_total: acc.events,
        events_missed: acc.missed,
        tti_count: acc.ttis,
        n_devices: config.n_devices,
        seed,
        stream,
        ledger_balanced: world.ledger_balanced(),
    };
    Ok((metrics, logs))
}

/// Mean, sample standard deviation and 95% normal confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: Option<f64>,
    pub std: f64,
    pub ci_half_width: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: None,
                std: 0.0,
                ci_half_width: 0.0,
                n,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean: Some(mean),
            std,
            ci_half_width: 1.96 * std / (n as f64).sqrt(),
            n,
        }
    }

    pub fn ci(&self) -> Option<(f64, f64)> {
        self.mean.map(|m| (m - self.ci_half_width, m + self.ci_half_width))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub policy: PolicyKind,
    pub n_devices: usize,
    pub misdetection: Stat,
    pub ec: Stat,
    pub info: Stat,
    pub n_runs: usize,
    pub base_seed: u64,
    /// Conservation identity held on every run.
    pub ledger_balanced: bool,
}

impl Aggregate {
    pub fn from_runs(policy: PolicyKind, base_seed: u64, runs: &[RunMetrics]) -> Self {
        let collect = |f: fn(&RunMetrics) -> Option<f64>| runs.iter().filter_map(f).collect::<Vec<_>>();
        Self {
            policy,
            n_devices: runs.first().map_or(0, |r| r.n_devices),
            misdetection: Stat::from_samples(&collect(|r| r.misdetection_prob)),
            ec: Stat::from_samples(&collect(|r| r.mean_ec)),
            info: Stat::from_samples(&collect(|r| r.mean_info)),
            n_runs: runs.len(),
            base_seed,
            ledger_balanced: runs.iter().all(|r| r.ledger_balanced),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub aggregate: Aggregate,
    pub runs: Vec<RunMetrics>,
    pub plan: PolicyPlan,
    /// Pilot search report when the policy is grid search.
    pub grid: Option<GridSearchOutcome>,
}

/// Pilot size used to evaluate each grid-search candidate.
pub const PILOT_RUNS: usize = 10;
pub const PILOT_TTIS: u64 = 5_000;
const PILOT_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

fn with_pool<T: Send>(parallelism: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn run_batch(config: &SimConfig, plan: PolicyPlan, base_seed: u64, n_runs: usize) -> Result<Vec<RunMetrics>> {
    (0..n_runs as u64)
        .into_par_iter()
        .map(|i| run_simulation(config, plan, base_seed, i, false).map(|(m, _)| m))
        .collect()
}

/// Chooses the network-uniform `(on, drx)` by pilot Monte Carlo runs over
/// the random-benchmark ranges.
pub fn pilot_grid_search(config: &SimConfig, base_seed: u64, parallelism: usize) -> Result<GridSearchOutcome> {
    let pilot = SimConfig {
        tti_count: config.tti_count.min(PILOT_TTIS),
        ..config.clone()
    };
    let pilot_seed = base_seed ^ PILOT_SEED_SALT;
    let pilot_runs = PILOT_RUNS.min(config.n_runs).max(1);
    with_pool(parallelism, || {
        let mut failure = None;
        let outcome = grid_search_duty(&RANDOM_ON_TIMES, &RANDOM_DRX_CYCLES, config.i_min, |on, drx| {
            let plan = PolicyPlan::Uniform {
                on_time: on,
                drx_cycle: drx,
            };
            match run_batch(&pilot, plan, pilot_seed, pilot_runs) {
                Ok(runs) => {
                    let agg = Aggregate::from_runs(PolicyKind::GridSearch, pilot_seed, &runs);
                    (agg.ec.mean.unwrap_or(f64::INFINITY), agg.info.mean.unwrap_or(0.0))
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    (f64::INFINITY, 0.0)
                }
            }
        });
        match failure {
            Some(e) => Err(e),
            None => outcome,
        }
    })?
}

/// Runs `n_runs` independent seeded simulations of `config.policy` (fresh
/// deployment each) on `parallelism` threads and aggregates them. Results
/// are identical for any thread count.
pub fn run_experiment(config: &SimConfig, n_runs: usize, base_seed: u64, parallelism: usize) -> Result<Experiment> {
    if n_runs == 0 {
        return Err(Error::Config("an experiment needs at least one run".into()));
    }
    config.validate()?;
    let (plan, grid) = match config.policy {
        PolicyKind::Random => (PolicyPlan::Random, None),
        PolicyKind::KnnCluster => (PolicyPlan::KnnCluster, None),
        PolicyKind::Genie => (PolicyPlan::Genie, None),
        PolicyKind::GridSearch => {
            let outcome = pilot_grid_search(config, base_seed, parallelism)?;
            (
                PolicyPlan::Uniform {
                    on_time: outcome.on_time,
                    drx_cycle: outcome.drx_cycle,
                },
                Some(outcome),
            )
        }
    };
    let runs = with_pool(parallelism, || run_batch(config, plan, base_seed, n_runs))??;
    Ok(Experiment {
        aggregate: Aggregate::from_runs(config.policy, base_seed, &runs),
        runs,
        plan,
        grid,
    })
}
