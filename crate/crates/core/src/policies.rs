//! Duty-cycling strategies: random benchmark, network-uniform grid search,
//! KNN-cluster round robin and the genie-aided bound.
//!
//! Complexity: the grid search evaluates `g` network-uniform pairs, `g` being
//! the product of the candidate set sizes. The clustering precomputes every
//! device's nearest neighbours by a brute-force scan, `O(N^2)` distance
//! evaluations, after which each voting pass is `O(N k)`.

use core::fmt;
use core::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{AreaSpec, Device, DutyCycleConfig, Event, Position};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    Random,
    GridSearch,
    KnnCluster,
    Genie,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Random,
        PolicyKind::GridSearch,
        PolicyKind::KnnCluster,
        PolicyKind::Genie,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::GridSearch => "grid-search",
            PolicyKind::KnnCluster => "knn-cluster",
            PolicyKind::Genie => "genie",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PolicyKind::Random),
            "grid-search" | "grid" => Ok(PolicyKind::GridSearch),
            "knn-cluster" | "knn" => Ok(PolicyKind::KnnCluster),
            "genie" => Ok(PolicyKind::Genie),
            other => Err(Error::Config(format!(
                "unknown policy `{other}` (expected random, grid-search, knn-cluster or genie)"
            ))),
        }
    }
}

/// Number of clusters `ceil(area / (pi d_max^2))`, at least one.
pub fn cluster_count<T: Real>(area: &AreaSpec<T>, d_max: T) -> usize {
    let ratio = area.surface() / (T::PI() * d_max * d_max);
    ratio.ceil().to_usize().unwrap_or(1).max(1)
}

/// Partition of the devices into spatial clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `assignment[device] = cluster id`, ids contiguous `0..m`.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Position<f64>>,
    pub k_neighbors: usize,
    pub iterations: usize,
}

impl Clustering {
    pub fn n_clusters(&self) -> usize {
        self.centroids.len()
    }

    /// Device ids of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (device, &c) in self.assignment.iter().enumerate() {
            out[c].push(device);
        }
        out
    }
}

const KNN_MAX_ITER: usize = 100;

fn nearest_centroid(p: &Position<f64>, centroids: &[Position<f64>], allowed: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        if !allowed(c) {
            continue;
        }
        let d = p.distance_sq(centroid);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn recompute_centroids(positions: &[Position<f64>], assignment: &[usize], m: usize, centroids: &mut [Position<f64>]) {
    let mut sums = vec![(0.0, 0.0, 0usize); m];
    for (p, &c) in positions.iter().zip(assignment) {
        sums[c].0 += p.x;
        sums[c].1 += p.y;
        sums[c].2 += 1;
    }
    for (c, (sx, sy, n)) in sums.into_iter().enumerate() {
        if n > 0 {
            centroids[c] = Position::new(sx / n as f64, sy / n as f64);
        }
    }
}

/// Hybrid KNN clustering.
///
/// Centroids start at `m` distinct device positions and every device joins
/// its nearest centroid. Each pass then moves every device to the cluster
/// holding the majority of its `k` nearest neighbours under the previous
/// assignment (ties go to the nearest tied centroid) and recomputes the
/// centroids, until nothing changes or the pass cap is hit. Clusters left
/// empty are dissolved and the ids compacted.
pub fn knn_clustering<R: Rng + ?Sized>(
    positions: &[Position<f64>],
    m: usize,
    k_neighbors: usize,
    rng: &mut R,
) -> Result<Clustering> {
    let n = positions.len();
    if n == 0 {
        return Err(Error::Config("clustering needs at least one position".into()));
    }
    if m == 0 || k_neighbors == 0 {
        return Err(Error::Config("cluster count and k_neighbors must be >= 1".into()));
    }
    if m > n {
        return Err(Error::Config(format!("cannot form {m} clusters from {n} devices")));
    }

    let mut seeds: Vec<usize> = sample(rng, n, m).into_vec();
    seeds.sort_unstable();
    let mut centroids: Vec<Position<f64>> = seeds.iter().map(|&i| positions[i]).collect();
    let mut assignment: Vec<usize> = positions
        .iter()
        .map(|p| nearest_centroid(p, &centroids, |_| true))
        .collect();
    recompute_centroids(positions, &assignment, m, &mut centroids);

    let k = k_neighbors.min(n - 1);
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (positions[i].distance_sq(&positions[j]), j))
                .collect();
            others.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
            others.truncate(k);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut iterations = 0;
    let mut votes = vec![0usize; m];
    while k > 0 && iterations < KNN_MAX_ITER {
        iterations += 1;
        let next: Vec<usize> = (0..n)
            .map(|i| {
                votes.iter_mut().for_each(|v| *v = 0);
                for &j in &neighbors[i] {
                    votes[assignment[j]] += 1;
                }
                let top = *votes.iter().max().expect("m >= 1");
                let tied = &votes;
                nearest_centroid(&positions[i], &centroids, |c| tied[c] == top)
            })
            .collect();
        let changed = next != assignment;
        assignment = next;
        recompute_centroids(positions, &assignment, m, &mut centroids);
        if !changed {
            break;
        }
    }

    // dissolve empty clusters, keep ids in order of the surviving centroids
    let mut sizes = vec![0usize; m];
    for &c in &assignment {
        sizes[c] += 1;
    }
    let mut remap = vec![usize::MAX; m];
    let mut kept = Vec::new();
    for c in 0..m {
        if sizes[c] > 0 {
            remap[c] = kept.len();
            kept.push(centroids[c]);
        }
    }
    for c in assignment.iter_mut() {
        *c = remap[*c];
    }

    Ok(Clustering {
        assignment,
        centroids: kept,
        k_neighbors,
        iterations,
    })
}

/// One TTI ON per cluster member in turn: `on = 1`, `drx = cluster size`,
/// offsets `0..size` by ascending device id.
pub fn round_robin_schedule(clustering: &Clustering) -> Vec<DutyCycleConfig> {
    let mut out = vec![DutyCycleConfig::always_on(); clustering.assignment.len()];
    for members in clustering.members() {
        let size = members.len() as u32;
        for (rank, &device) in members.iter().enumerate() {
            out[device] = DutyCycleConfig::new(1, size, rank as u32).expect("rank < cluster size");
        }
    }
    out
}

pub const RANDOM_ON_TIMES: [u32; 2] = [1, 2];
pub const RANDOM_DRX_CYCLES: [u32; 3] = [2, 4, 8];

/// Independent random schedules: ON time from {1, 2}, DRX cycle from
/// {2, 4, 8}, uniform offset. The always-on draw (2, 2) is redrawn.
pub fn random_duty_policy<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<DutyCycleConfig> {
    (0..n)
        .map(|_| loop {
            let on = RANDOM_ON_TIMES[rng.random_range(0..RANDOM_ON_TIMES.len())];
            let drx = RANDOM_DRX_CYCLES[rng.random_range(0..RANDOM_DRX_CYCLES.len())];
            if on >= drx {
                continue;
            }
            let offset = rng.random_range(0..drx);
            break DutyCycleConfig::new(on, drx, offset).expect("validated draw");
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub on_time: u32,
    pub drx_cycle: u32,
    pub ec: f64,
    pub info: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchOutcome {
    /// Chosen `(on_time, drx_cycle)`. When no pair is feasible this is the
    /// best-information fallback and `feasible` is false.
    pub on_time: u32,
    pub drx_cycle: u32,
    pub feasible: bool,
    pub report: Vec<GridPoint>,
}

/// Exhaustive search over network-uniform `(on, drx)` pairs: minimum mean
/// energy subject to mean information per event `>= i_min`.
///
/// `evaluator(on, drx)` returns `(mean_ec, mean_info)`. Pairs with
/// `on > drx` are skipped. Ties on energy go to the larger DRX cycle.
pub fn grid_search_duty<F>(
    candidate_on: &[u32],
    candidate_drx: &[u32],
    i_min: f64,
    mut evaluator: F,
) -> Result<GridSearchOutcome>
where
    F: FnMut(u32, u32) -> (f64, f64),
{
    let mut report = Vec::new();
    for &on in candidate_on {
        for &drx in candidate_drx {
            if on == 0 || on > drx {
                continue;
            }
            let (ec, info) = evaluator(on, drx);
            report.push(GridPoint {
                on_time: on,
                drx_cycle: drx,
                ec,
                info,
                feasible: info >= i_min,
            });
        }
    }
    if report.is_empty() {
        return Err(Error::Config("grid search has no valid (on, drx) candidate".into()));
    }

    let best_feasible = report
        .iter()
        .filter(|p| p.feasible)
        .min_by(|a, b| a.ec.total_cmp(&b.ec).then(b.drx_cycle.cmp(&a.drx_cycle)));
    let chosen = match best_feasible {
        Some(p) => *p,
        None => *report
            .iter()
            .max_by(|a, b| a.info.total_cmp(&b.info).then(b.ec.total_cmp(&a.ec)))
            .expect("non-empty report"),
    };
    Ok(GridSearchOutcome {
        on_time: chosen.on_time,
        drx_cycle: chosen.drx_cycle,
        feasible: chosen.feasible,
        report,
    })
}

/// Device closest to the epicenter, lowest id on ties.
pub fn genie_detector(event: &Event, devices: &[Device]) -> Option<usize> {
    devices
        .iter()
        .map(|d| (d.position.distance_sq(&event.epicenter), d.id))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}
