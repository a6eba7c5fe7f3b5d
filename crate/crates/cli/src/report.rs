//! Table builders behind the subcommands.

use ehwake::battery::{CoupledParams, FixedPoint};
use ehwake::dynamics::mean_detection_prob;
use ehwake::sim::{run_rng, Experiment};
use ehwake::{
    coupled_fixed_point, pr_battery_at_least, pr_transmit_semiclosed, DeviceState, DutyCycleConfig, PolicyKind,
    PolicyPlan, SimConfig, TtiLog, World,
};

use crate::csv::{fmt_float, fmt_opt, Table};
use crate::error::CliError;

pub const SWEEP_HEADER: [&str; 10] = [
    "policy",
    "n_devices",
    "misdetection_mean",
    "misdetection_ci",
    "ec_mean",
    "ec_ci",
    "info_mean",
    "info_ci",
    "n_runs",
    "base_seed",
];

/// Inputs of the single-device analytic model that the configuration
/// does not carry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisArgs {
    pub on_time: u32,
    pub drx_cycle: u32,
    /// Replaces the source-activity probability derived from `lambda_tau`.
    pub harvest_prob: Option<f64>,
    pub p_wake: f64,
}

impl Default for AnalysisArgs {
    fn default() -> Self {
        Self {
            on_time: 1,
            drx_cycle: 4,
            harvest_prob: None,
            p_wake: 0.0,
        }
    }
}

/// Coupled state/battery parameters for a device with schedule `(on, drx)`
/// and detection probability averaged over the area.
pub fn analytic_params(cfg: &SimConfig, args: &AnalysisArgs) -> Result<CoupledParams<f64>, CliError> {
    cfg.validate()?;
    let duty = DutyCycleConfig::new(args.on_time, args.drx_cycle, 0)?;
    Ok(CoupledParams {
        duty,
        alpha: cfg.alpha,
        p_detect: mean_detection_prob(&cfg.area(), cfg.eta)?,
        p_wake: args.p_wake,
        harvest_prob: args.harvest_prob.unwrap_or_else(|| cfg.harvest_prob()),
        harvest_quantum: cfg.e_h,
        e_idle: cfg.e_idle,
        e_tx: cfg.e_tx,
        e_max: cfg.e_max,
    })
}

/// Stationary battery distribution (one row per level) followed by a
/// summary row: `Pr(B >= e_tx)` from the stationary solve, then the
/// binomial semi-closed value and its beta-form companion.
pub fn battery_table(cfg: &SimConfig, args: &AnalysisArgs) -> Result<(Table, FixedPoint<f64>), CliError> {
    let params = analytic_params(cfg, args)?;
    let fp = coupled_fixed_point(&params)?;
    let mut table = Table::new([
        "row",
        "level",
        "probability",
        "pr_at_least_e_tx",
        "binomial_sum",
        "beta_form",
    ]);
    for (level, &p) in fp.battery.probabilities().iter().enumerate() {
        table.push(vec![
            "level".into(),
            level.to_string(),
            fmt_float(p),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    let tail = pr_battery_at_least(&fp.battery, cfg.e_tx);
    let p_enter =
        fp.matrix.get(DeviceState::Idle, DeviceState::Active) + fp.matrix.get(DeviceState::Sleep, DeviceState::Active);
    // undefined when e_tx exceeds the capacity
    let semi = pr_transmit_semiclosed(p_enter.min(1.0), cfg.e_tx, cfg.e_max).ok();
    table.push(vec![
        "summary".into(),
        String::new(),
        String::new(),
        fmt_float(tail.prob),
        fmt_opt(semi.map(|s| s.binomial_sum)),
        fmt_opt(semi.map(|s| s.beta_form)),
    ]);
    Ok((table, fp))
}

/// The 4-state transition matrix at the coupled fixed point and its
/// stationary vector.
pub fn matrix_table(cfg: &SimConfig, args: &AnalysisArgs) -> Result<(Table, FixedPoint<f64>), CliError> {
    let fp = coupled_fixed_point(&analytic_params(cfg, args)?)?;
    let mut table = Table::new(["from", "S1", "S2", "S3", "S4", "stationary"]);
    for from in DeviceState::ALL {
        let mut row = vec![from.label().to_string()];
        row.extend(DeviceState::ALL.iter().map(|&to| fmt_float(fp.matrix.get(from, to))));
        row.push(fmt_float(fp.occupancy[from.index()]));
        table.push(row);
    }
    Ok((table, fp))
}

/// Deployment, clustering and round-robin schedule of run 0.
pub fn cluster_table(cfg: &SimConfig) -> Result<(Table, usize), CliError> {
    let world = World::new(cfg, PolicyPlan::KnnCluster, run_rng(cfg.base_seed, 0))?;
    let clustering = world.clustering.as_ref().expect("knn plan clusters");
    let mut table = Table::new(["device_id", "x", "y", "cluster_id", "on", "drx", "offset"]);
    for d in &world.devices {
        table.push(vec![
            d.id.to_string(),
            fmt_float(d.position.x),
            fmt_float(d.position.y),
            clustering.assignment[d.id].to_string(),
            d.duty.on_time().to_string(),
            d.duty.drx_cycle().to_string(),
            d.duty.offset().to_string(),
        ]);
    }
    Ok((table, clustering.n_clusters()))
}

pub fn sweep_row(exp: &Experiment) -> Vec<String> {
    let a = &exp.aggregate;
    vec![
        a.policy.to_string(),
        a.n_devices.to_string(),
        fmt_opt(a.misdetection.mean),
        fmt_float(a.misdetection.ci_half_width),
        fmt_opt(a.ec.mean),
        fmt_float(a.ec.ci_half_width),
        fmt_opt(a.info.mean),
        fmt_float(a.info.ci_half_width),
        a.n_runs.to_string(),
        a.base_seed.to_string(),
    ]
}

pub fn sweep_table(experiments: &[Experiment]) -> Table {
    let mut table = Table::new(SWEEP_HEADER);
    for exp in experiments {
        table.push(sweep_row(exp));
    }
    table
}

/// Runs one experiment per `(policy, density)`, policies outermost.
pub fn sweep(
    cfg: &SimConfig,
    densities: &[usize],
    policies: &[PolicyKind],
    parallelism: usize,
    mut progress: impl FnMut(&Experiment),
) -> Result<Vec<Experiment>, CliError> {
    if densities.is_empty() || policies.is_empty() {
        return Err(CliError::Usage(
            "a sweep needs at least one density and one policy".into(),
        ));
    }
    let mut out = Vec::with_capacity(densities.len() * policies.len());
    for &policy in policies {
        for &n in densities {
            let point = SimConfig {
                n_devices: n,
                policy,
                ..cfg.clone()
            };
            let exp = ehwake::run_experiment(&point, point.n_runs, point.base_seed, parallelism)?;
            progress(&exp);
            out.push(exp);
        }
    }
    Ok(out)
}

/// Per-run metrics of one experiment.
pub fn runs_table(exp: &Experiment) -> Table {
    let mut table = Table::new([
        "run",
        "seed",
        "misdetection",
        "ec",
        "info",
        "events_total",
        "events_missed",
        "ledger_balanced",
    ]);
    for r in &exp.runs {
        table.push(vec![
            r.stream.to_string(),
            r.seed.to_string(),
            fmt_opt(r.misdetection_prob),
            fmt_opt(r.mean_ec),
            fmt_opt(r.mean_info),
            r.events_total.to_string(),
            r.events_missed.to_string(),
            r.ledger_balanced.to_string(),
        ]);
    }
    table
}

/// One row per metered TTI.
pub fn trace_table(logs: &[TtiLog]) -> Table {
    let mut table = Table::new([
        "tti",
        "event_id",
        "epicenter_x",
        "epicenter_y",
        "detections",
        "woken",
        "final_info",
        "energy_spent",
        "s1",
        "s2",
        "s3",
        "s4",
    ]);
    for log in logs {
        let (id, x, y) = match &log.event {
            Some(e) => (e.id.to_string(), fmt_float(e.epicenter.x), fmt_float(e.epicenter.y)),
            None => (String::new(), String::new(), String::new()),
        };
        let mut row = vec![
            log.tti.to_string(),
            id,
            x,
            y,
            log.detections.len().to_string(),
            log.wakeup.as_ref().map_or(0, |w| w.woken.len()).to_string(),
            fmt_float(log.final_information),
            log.energy_spent.to_string(),
        ];
        row.extend(log.census.iter().map(|c| c.to_string()));
        table.push(row);
    }
    table
}

/// One row per wake-up round.
pub fn wakeup_table(logs: &[TtiLog]) -> Table {
    let mut table = Table::new(["event_id", "tti", "initial_info", "woken_count", "final_info"]);
    for log in logs {
        if let (Some(event), Some(w)) = (&log.event, &log.wakeup) {
            table.push(vec![
                event.id.to_string(),
                log.tti.to_string(),
                fmt_float(w.initial_information),
                w.woken.len().to_string(),
                fmt_float(w.final_information),
            ]);
        }
    }
    table
}
