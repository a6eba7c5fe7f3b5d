use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ehwake::{ConfigWarning, PolicyKind, SimConfig};
use ehwake_cli::config_file::key_reference;
use ehwake_cli::report::{self, AnalysisArgs};
use ehwake_cli::{load_config, sibling_path, svg, write_file, CliError};

#[derive(Parser)]
#[command(
    name = "ehwake",
    version,
    about = "Duty-cycling and wake-up simulator for energy-harvesting sensor networks"
)]
#[command(after_help = key_reference())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines); defaults apply to omitted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra detail: per-TTI trace files for `simulate`, progress on stderr otherwise.
    #[arg(long)]
    trace: bool,
    /// Worker threads for Monte Carlo runs; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct Analysis {
    /// ON time of the analysed schedule, TTIs.
    #[arg(long, default_value_t = 1)]
    on: u32,
    /// DRX cycle of the analysed schedule, TTIs.
    #[arg(long, default_value_t = 4)]
    drx: u32,
    /// Source-activity probability per TTI, instead of the one implied by `lambda_tau`.
    #[arg(long)]
    harvest_prob: Option<f64>,
    /// Sleep-to-active (wake-up) probability.
    #[arg(long, default_value_t = 0.0)]
    p_wake: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run one Monte Carlo experiment and print its aggregate.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write per-run metrics to this CSV.
        #[arg(long)]
        runs_out: Option<PathBuf>,
    },
    /// Run experiments over device densities and policies.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 50, 100, 250])]
        densities: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = PolicyKind::ALL.to_vec())]
        policies: Vec<PolicyKind>,
        /// Directory for misdetection/energy/information charts.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Stationary battery distribution of the analytic single-device model.
    Battery {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        analysis: Analysis,
    },
    /// Analytic 4-state transition matrix and its stationary vector.
    Matrix {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        analysis: Analysis,
    },
    /// KNN clustering and round-robin schedule of one deployment.
    Cluster {
        #[command(flatten)]
        common: Common,
    },
}

impl Analysis {
    fn args(&self) -> Result<AnalysisArgs, CliError> {
        if let Some(p) = self.harvest_prob {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Usage(format!("--harvest-prob must lie in [0, 1], got {p}")));
            }
        }
        Ok(AnalysisArgs {
            on_time: self.on,
            drx_cycle: self.drx,
            harvest_prob: self.harvest_prob,
            p_wake: self.p_wake,
        })
    }
}

impl Common {
    fn config(&self) -> Result<SimConfig, CliError> {
        let mut cfg = load_config(self.config.as_deref())?;
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        for w in cfg.validate()? {
            match w {
                ConfigWarning::UnreachableTransmit => {
                    eprintln!(
                        "warning: e_tx ({}) exceeds e_max ({}); no device can transmit",
                        cfg.e_tx, cfg.e_max
                    )
                }
            }
        }
        Ok(cfg)
    }

    fn threads(&self) -> Result<usize, CliError> {
        match self.threads {
            Some(0) => Err(CliError::Usage("--threads must be >= 1".into())),
            Some(t) => Ok(t),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    fn emit(&self, csv: &str) -> Result<(), CliError> {
        match &self.out {
            Some(path) => write_file(path, csv),
            None => {
                print!("{csv}");
                Ok(())
            }
        }
    }

    fn trace_path(&self, suffix: &str) -> PathBuf {
        match &self.out {
            Some(p) => sibling_path(p, suffix),
            None => PathBuf::from(format!("{suffix}.csv")),
        }
    }
}

fn warn_grid(exp: &ehwake::Experiment) {
    if let Some(g) = exp.grid.as_ref().filter(|g| !g.feasible) {
        eprintln!(
            "warning: no (on, drx) pair meets i_min at N={}; using best-information pair ({}, {})",
            exp.aggregate.n_devices, g.on_time, g.drx_cycle
        );
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, runs_out } => {
            let cfg = common.config()?;
            let exp = ehwake::run_experiment(&cfg, cfg.n_runs, cfg.base_seed, common.threads()?)?;
            warn_grid(&exp);
            if !exp.aggregate.ledger_balanced {
                return Err(CliError::Model(ehwake::Error::Numeric(
                    "energy ledger out of balance".into(),
                )));
            }
            common.emit(&report::sweep_table(std::slice::from_ref(&exp)).render())?;
            if let Some(path) = runs_out {
                write_file(&path, &report::runs_table(&exp).render())?;
            }
            if common.trace {
                let (_, logs) = ehwake::run_simulation(&cfg, exp.plan, cfg.base_seed, 0, true)?;
                let logs = logs.unwrap_or_default();
                let trace = common.trace_path("trace");
                let wakeup = common.trace_path("wakeup");
                write_file(&trace, &report::trace_table(&logs).render())?;
                write_file(&wakeup, &report::wakeup_table(&logs).render())?;
                eprintln!("trace of run 0 written to {} and {}", trace.display(), wakeup.display());
            }
        }
        Command::Sweep {
            common,
            densities,
            policies,
            svg: svg_dir,
        } => {
            let cfg = common.config()?;
            let trace = common.trace;
            let exps = report::sweep(&cfg, &densities, &policies, common.threads()?, |exp| {
                warn_grid(exp);
                if trace {
                    let a = &exp.aggregate;
                    eprintln!(
                        "{} N={}: misdetection {:?} ec {:?} info {:?}",
                        a.policy, a.n_devices, a.misdetection.mean, a.ec.mean, a.info.mean
                    );
                }
            })?;
            common.emit(&report::sweep_table(&exps).render())?;
            if let Some(dir) = svg_dir {
                for (stem, chart) in svg::sweep_charts(&exps) {
                    write_file(&dir.join(format!("{stem}.svg")), &chart)?;
                }
            }
        }
        Command::Battery { common, analysis } => {
            let cfg = common.config()?;
            let (table, fp) = report::battery_table(&cfg, &analysis.args()?)?;
            if common.trace {
                eprintln!(
                    "fixed point after {} iterations, p_tx_capable {}",
                    fp.iterations, fp.p_tx_capable
                );
            }
            common.emit(&table.render())?;
        }
        Command::Matrix { common, analysis } => {
            let cfg = common.config()?;
            let (table, fp) = report::matrix_table(&cfg, &analysis.args()?)?;
            if common.trace {
                eprintln!(
                    "fixed point after {} iterations, p_tx_capable {}",
                    fp.iterations, fp.p_tx_capable
                );
            }
            common.emit(&table.render())?;
        }
        Command::Cluster { common } => {
            let cfg = common.config()?;
            let (table, clusters) = report::cluster_table(&cfg)?;
            let target = ehwake::policies::cluster_count(&cfg.area(), cfg.d_max).min(cfg.n_devices);
            eprintln!("{target} clusters targeted, {clusters} non-empty");
            common.emit(&table.render())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
