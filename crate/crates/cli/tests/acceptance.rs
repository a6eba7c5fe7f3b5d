//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Calibrated criteria (1-6, 11, 12) run the shipped `calibration`
//! preset: 100 runs of 10^4 metered TTIs for N in {10, 50, 100, 250}.

use std::collections::HashMap;
use std::time::Instant;

use ehwake::battery::{battery_stationary, build_battery_chain};
use ehwake::chain::{stationary, stationary_residual};
use ehwake::model::{deploy_uniform, AreaSpec};
use ehwake::policies::{cluster_count, knn_clustering, round_robin_schedule};
use ehwake::sim::Experiment;
use ehwake::special::reg_incomplete_beta;
use ehwake::{PolicyKind, SimConfig};
use ehwake_cli::parse_config;
use ehwake_cli::report::{sweep, sweep_table};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DENSITIES: [usize; 4] = [10, 50, 100, 250];
const PRESET: &str = include_str!("../presets/calibration.conf");

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

type Cells = HashMap<(PolicyKind, usize), Experiment>;

fn cell(cells: &Cells, p: PolicyKind, n: usize) -> &Experiment {
    &cells[&(p, n)]
}

fn mean_ci(s: &ehwake::sim::Stat) -> (f64, f64, f64) {
    let m = s.mean.unwrap_or(f64::NAN);
    (m, m - s.ci_half_width, m + s.ci_half_width)
}

fn misdetection(cells: &Cells, p: PolicyKind, n: usize) -> (f64, f64, f64) {
    mean_ci(&cell(cells, p, n).aggregate.misdetection)
}

fn ec(cells: &Cells, p: PolicyKind, n: usize) -> f64 {
    cell(cells, p, n).aggregate.ec.mean.unwrap_or(f64::NAN)
}

fn info(cells: &Cells, p: PolicyKind, n: usize) -> f64 {
    cell(cells, p, n).aggregate.info.mean.unwrap_or(f64::NAN)
}

use PolicyKind::{Genie, GridSearch, KnnCluster, Random};

fn criterion_1(cells: &Cells) -> Outcome {
    let order = [Genie, KnnCluster, GridSearch, Random];
    let mut pass = true;
    let mut notes = Vec::new();
    for n in DENSITIES {
        for w in order.windows(2) {
            let (lo, hi) = (misdetection(cells, w[0], n), misdetection(cells, w[1], n));
            let ordered = lo.0 <= hi.0;
            let resolved = n < 50 || lo.2 < hi.1;
            if !(ordered && resolved) {
                pass = false;
                notes.push(format!("N={n} {}={:.4} vs {}={:.4}", w[0], lo.0, w[1], hi.0));
            }
        }
    }
    Outcome {
        id: 1,
        name: "misdetection ordering genie <= knn <= grid <= random",
        pass,
        detail: if notes.is_empty() {
            "all gaps ordered and resolved".into()
        } else {
            notes.join("; ")
        },
    }
}

fn criterion_2(cells: &Cells) -> Outcome {
    let knn = misdetection(cells, KnnCluster, 250).0;
    let random = misdetection(cells, Random, 250).0;
    Outcome {
        id: 2,
        name: "N=250 knn misdetection < 5%, random in [4%, 12%]",
        pass: knn < 0.05 && (0.04..=0.12).contains(&random),
        detail: format!("knn {knn:.4}, random {random:.4}"),
    }
}

fn criterion_3(cells: &Cells) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [100, 250] {
        let ratio = misdetection(cells, Random, n).0 / misdetection(cells, KnnCluster, n).0;
        pass &= ratio >= 5.0;
        notes.push(format!("N={n} ratio {ratio:.3}"));
    }
    Outcome {
        id: 3,
        name: "random/knn misdetection ratio >= 5 for N >= 100",
        pass,
        detail: notes.join(", "),
    }
}

fn criterion_4(cells: &Cells) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [50, 100, 250] {
        let (k, r) = (ec(cells, KnnCluster, n), ec(cells, Random, n));
        pass &= k < r;
        notes.push(format!("N={n} knn {k:.4} random {r:.4}"));
    }
    let ratio = ec(cells, KnnCluster, 250) / ec(cells, Random, 250);
    pass &= ratio <= 0.55;
    notes.push(format!("N=250 knn/random {ratio:.3}"));
    Outcome {
        id: 4,
        name: "knn EC below random for N >= 50, <= 0.55x at N=250",
        pass,
        detail: notes.join(", "),
    }
}

fn criterion_5(cells: &Cells) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in DENSITIES {
        let (g, k) = (ec(cells, Genie, n), ec(cells, KnnCluster, n));
        pass &= g < k;
        notes.push(format!("N={n} genie {g:.4} knn {k:.4}"));
    }
    let ratio = ec(cells, KnnCluster, 250) / ec(cells, Genie, 250);
    pass &= ratio <= 2.0;
    notes.push(format!("N=250 knn/genie {ratio:.3}"));
    Outcome {
        id: 5,
        name: "genie EC below knn at every N, knn/genie <= 2 at N=250",
        pass,
        detail: notes.join(", "),
    }
}

fn criterion_6(cells: &Cells, i_min: f64) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in DENSITIES {
        let (k, g) = (info(cells, KnnCluster, n), info(cells, Genie, n));
        if n >= 50 {
            pass &= (0.8 * i_min..=2.0 * i_min).contains(&k);
        }
        pass &= g >= i_min;
        notes.push(format!("N={n} knn {k:.4} genie {g:.4}"));
    }
    Outcome {
        id: 6,
        name: "knn info in [0.8, 2] x i_min for N >= 50, genie info >= i_min",
        pass,
        detail: format!("i_min {i_min:.4}; {}", notes.join(", ")),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let e_max = rng.random_range(1..=50u32);
        let quantum = rng.random_range(1..=3u32);
        let harvest = rng.random_range(0.05..0.95);
        // zero and one-unit costs always present so every level drains to 0
        let top = rng.random_range(1..=4u32);
        let weights: Vec<f64> = (0..=top).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let pmf: Vec<(u32, f64)> = weights.iter().enumerate().map(|(c, w)| (c as u32, w / total)).collect();
        let chain = build_battery_chain(e_max, quantum, harvest, &pmf).unwrap();
        let dist = battery_stationary(&chain).unwrap();

        // independent walk: harvest, clamp, then spend, clamp
        let steps = 1_000_000u64;
        let mut counts = vec![0u64; e_max as usize + 1];
        let mut level = e_max;
        for _ in 0..steps {
            if rng.random::<f64>() < harvest {
                level = (level + quantum).min(e_max);
            }
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut cost = pmf.last().unwrap().0;
            for &(c, p) in &pmf {
                acc += p;
                if u < acc {
                    cost = c;
                    break;
                }
            }
            level = level.saturating_sub(cost);
            counts[level as usize] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            worst = worst.max((c as f64 / steps as f64 - dist.probabilities()[b]).abs());
        }
    }
    Outcome {
        id: 7,
        name: "battery stationary vs 10^6-step empirical, 50 chains, +-0.01",
        pass: worst <= 0.01,
        detail: format!("max per-level deviation {worst:.5}"),
    }
}

fn ln_choose(n: u32, k: u32) -> f64 {
    (1..=k).map(|i| (f64::from(n - k + i) / f64::from(i)).ln()).sum()
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=30u32 {
        for s in 1..=n {
            for tenth in 1..=9 {
                let p = f64::from(tenth) / 10.0;
                let tail: f64 = (s..=n)
                    .map(|x| (ln_choose(n, x) + f64::from(x) * p.ln() + f64::from(n - x) * (1.0 - p).ln()).exp())
                    .sum();
                let beta = reg_incomplete_beta(p, f64::from(s), f64::from(n - s + 1)).unwrap();
                worst = worst.max((beta - tail).abs());
            }
        }
    }
    Outcome {
        id: 8,
        name: "regularized incomplete beta vs binomial tails, n <= 30, 1e-9",
        pass: worst <= 1e-9,
        detail: format!("max deviation {worst:.3e}"),
    }
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_res, mut worst_pow) = (0.0f64, 0.0f64);
    for i in 0..100 {
        // redraw until the matrix has a single closed class
        let (p, pi) = loop {
            let mut p = [0.0f64; 16];
            for r in 0..4 {
                // odd-numbered instances get structural zeros off the diagonal
                let w: Vec<f64> = (0..4)
                    .map(|c| {
                        if i % 2 == 1 && c != r && rng.random_bool(0.4) {
                            0.0
                        } else {
                            rng.random_range(0.01..1.0)
                        }
                    })
                    .collect();
                let total: f64 = w.iter().sum();
                for c in 0..4 {
                    p[r * 4 + c] = w[c] / total;
                }
            }
            if let Ok(pi) = stationary(4, &p) {
                break (p, pi);
            }
        };
        worst_res = worst_res.max(stationary_residual(4, &p, &pi));
        let mut v = [0.25f64; 4];
        for _ in 0..200_000 {
            let mut next = [0.0; 4];
            for r in 0..4 {
                for c in 0..4 {
                    next[c] += v[r] * 0.5 * (p[r * 4 + c] + if r == c { 1.0 } else { 0.0 });
                }
            }
            let delta = (0..4).map(|k| (next[k] - v[k]).abs()).fold(0.0, f64::max);
            v = next;
            if delta < 1e-16 {
                break;
            }
        }
        worst_pow = worst_pow.max((0..4).map(|k| (v[k] - pi[k]).abs()).fold(0.0, f64::max));
    }
    Outcome {
        id: 9,
        name: "4-state stationarity residual <= 1e-10, power iteration within 1e-8",
        pass: worst_res <= 1e-10 && worst_pow <= 1e-8,
        detail: format!("max residual {worst_res:.3e}, max power-iteration gap {worst_pow:.3e}"),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let area = AreaSpec::new(20.0, 20.0).unwrap();
    let mut violations = 0;
    let mut checked = 0u64;
    for _ in 0..100 {
        let n = rng.random_range(10..=250usize);
        let devices = deploy_uniform(n, &area, 10, 1.0, &mut rng).unwrap();
        let positions: Vec<_> = devices.iter().map(|d| d.position).collect();
        let m = cluster_count(&area, 4.0).min(n);
        let k = rng.random_range(1..=8usize);
        let clustering = knn_clustering(&positions, m, k, &mut rng).unwrap();
        let schedule = round_robin_schedule(&clustering);
        for members in clustering.members() {
            let cycle = schedule[members[0]].drx_cycle() as u64;
            for t in 0..cycle {
                checked += 1;
                if members.iter().filter(|&&d| schedule[d].is_on(t)).count() != 1 {
                    violations += 1;
                }
            }
        }
    }
    Outcome {
        id: 10,
        name: "exactly one ON device per cluster per TTI, 100 clusterings",
        pass: violations == 0,
        detail: format!("{violations} violations over {checked} cluster-TTIs"),
    }
}

fn main() {
    let config: SimConfig = parse_config(PRESET).expect("preset parses");
    let started = Instant::now();
    let sequential = sweep(&config, &DENSITIES, &PolicyKind::ALL, 1, |_| {}).expect("sweep runs");
    let sequential_csv = sweep_table(&sequential).render();
    let parallel = sweep(&config, &DENSITIES, &PolicyKind::ALL, 8, |_| {}).expect("sweep runs");
    let parallel_csv = sweep_table(&parallel).render();
    println!(
        "calibrated sweep ({} runs x {} TTIs each):",
        config.n_runs, config.tti_count
    );
    print!("{sequential_csv}");
    println!("sweeps finished in {:.1}s", started.elapsed().as_secs_f64());

    let cells: Cells = sequential
        .iter()
        .map(|e| ((e.aggregate.policy, e.aggregate.n_devices), e.clone()))
        .collect();

    let all_runs = sequential.iter().map(|e| e.runs.len()).sum::<usize>();
    let balanced = sequential
        .iter()
        .chain(&parallel)
        .all(|e| e.runs.iter().all(|r| r.ledger_balanced));

    let outcomes = vec![
        criterion_1(&cells),
        criterion_2(&cells),
        criterion_3(&cells),
        criterion_4(&cells),
        criterion_5(&cells),
        criterion_6(&cells, config.i_min),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        Outcome {
            id: 11,
            name: "sweep CSV byte-identical across executions and parallelism 1 vs 8",
            pass: sequential_csv == parallel_csv,
            detail: format!("{} bytes compared", sequential_csv.len()),
        },
        Outcome {
            id: 12,
            name: "per-device energy conservation on every sweep run",
            pass: balanced,
            detail: format!("{} runs per sweep, two sweeps", all_runs),
        },
    ];

    let mut failed = 0;
    for o in &outcomes {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {verdict}: {}; {}", o.id, o.name, o.detail);
    }
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
