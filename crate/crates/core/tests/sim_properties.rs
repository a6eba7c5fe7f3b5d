use ehwake::sim::{run_rng, Stat};
use ehwake::{run_experiment, run_simulation, step_tti, DeviceState, PolicyKind, PolicyPlan, SimConfig, World};
use proptest::prelude::*;

fn plan_of(i: usize) -> PolicyPlan {
    [
        PolicyPlan::Random,
        PolicyPlan::Uniform {
            on_time: 1,
            drx_cycle: 4,
        },
        PolicyPlan::KnnCluster,
        PolicyPlan::Genie,
    ][i]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn world_invariants(seed in any::<u64>(), n in 1usize..60, plan in 0usize..4, alpha in 0.0f64..=1.0, e_max in 5u32..60) {
        let cfg = SimConfig { n_devices: n, alpha, e_max, e_h: 2, lambda_tau: 0.5, ..SimConfig::default() };
        let mut world = World::new(&cfg, plan_of(plan), run_rng(seed, 0)).unwrap();
        let mut spent_before = world.ledger().total_spent();
        for _ in 0..200 {
            let log = step_tti(&mut world).unwrap();
            prop_assert_eq!(log.census.iter().sum::<usize>(), n);
            prop_assert!(world.devices.iter().all(|d| d.battery <= e_max));
            let spent = world.ledger().total_spent();
            prop_assert_eq!(spent - spent_before, log.energy_spent);
            spent_before = spent;
            if log.event.is_none() {
                prop_assert!(log.detections.is_empty() && log.wakeup.is_none());
                prop_assert_eq!(log.final_information, 0.0);
            }
            prop_assert!(log.final_information >= 0.0 && log.final_information <= cfg.psi);
            prop_assert!(world.ledger_balanced());
        }
    }
}

#[test]
fn one_sensing_device_per_cluster_without_events() {
    for seed in 0..5 {
        let cfg = SimConfig {
            alpha: 0.0,
            e_h: 10,
            n_devices: 80,
            ..SimConfig::default()
        };
        let mut world = World::new(&cfg, PolicyPlan::KnnCluster, run_rng(seed, 0)).unwrap();
        let clusters = world.clustering.as_ref().unwrap().n_clusters();
        for _ in 0..300 {
            let log = step_tti(&mut world).unwrap();
            assert_eq!(log.census[DeviceState::Idle.index()], clusters);
        }
    }
}

#[test]
fn genie_with_abundant_harvest_rarely_misses() {
    let cfg = SimConfig {
        policy: PolicyKind::Genie,
        n_devices: 100,
        lambda_tau: 1.0,
        e_h: 30,
        ..SimConfig::default()
    };
    let (m, _) = run_simulation(&cfg, PolicyPlan::Genie, 12, 0, false).unwrap();
    assert!(m.misdetection_prob.unwrap() < 0.001, "{:?}", m.misdetection_prob);
}

fn overlaps(a: &Stat, b: &Stat) -> bool {
    let (a0, a1) = a.ci().unwrap();
    let (b0, b1) = b.ci().unwrap();
    a0 <= b1 && b0 <= a1
}

#[test]
fn more_runs_agree_with_fewer() {
    let cfg = SimConfig {
        policy: PolicyKind::Random,
        n_devices: 20,
        tti_count: 400,
        ..SimConfig::default()
    };
    let few = run_experiment(&cfg, 100, 1, 4).unwrap().aggregate;
    let many = run_experiment(&cfg, 1000, 2, 4).unwrap().aggregate;
    assert!(overlaps(&few.misdetection, &many.misdetection));
    assert!(overlaps(&few.ec, &many.ec));
    assert!(overlaps(&few.info, &many.info));
    assert!(many.ec.ci_half_width < few.ec.ci_half_width);
    assert!(many.info.ci_half_width < few.info.ci_half_width);
}

#[test]
fn grid_search_choice_reproduces_by_rerun() {
    let cfg = SimConfig {
        policy: PolicyKind::GridSearch,
        n_devices: 60,
        tti_count: 1000,
        ..SimConfig::default()
    };
    let exp = run_experiment(&cfg, 3, 8, 2).unwrap();
    let grid = exp.grid.unwrap();
    let again = ehwake::sim::pilot_grid_search(&cfg, 8, 1).unwrap();
    assert_eq!(grid, again);
    assert_eq!(grid.report.len(), 6);
    // independent brute force over the report
    let best = grid
        .report
        .iter()
        .filter(|p| p.feasible)
        .min_by(|a, b| a.ec.total_cmp(&b.ec).then(b.drx_cycle.cmp(&a.drx_cycle)));
    if let Some(best) = best {
        assert_eq!((best.on_time, best.drx_cycle), (grid.on_time, grid.drx_cycle));
        assert_eq!(
            exp.plan,
            PolicyPlan::Uniform {
                on_time: best.on_time,
                drx_cycle: best.drx_cycle
            }
        );
    } else {
        assert!(!grid.feasible);
    }
}
