//! Classical graph generators calibrated to a target density.
//!
//! The generators are conventionally undirected; they are stored in the
//! shared directed representation as follows: ER and WS keep both
//! directions of every undirected edge (so directed density equals the
//! undirected projection density), BA stores each attachment new→old.
//! Calibration and all structural comparisons therefore use the
//! undirected projection, consistent with the topology-metric
//! conventions.

use std::collections::BTreeSet;

use rand::Rng;
use thiserror::Error;

use crate::graph::DirectedNetwork;
use crate::metrics::MetricsReport;
use crate::seed::rng_for;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{family} cannot reach density {target}: {reason}")]
    Unreachable {
        family: Family,
        target: f64,
        reason: String,
    },
    #[error(
        "{family} calibration missed: mean projection density {achieved} vs target {target} (>10% off)"
    )]
    CalibrationMissed {
        family: Family,
        achieved: f64,
        target: f64,
    },
}

/// The three classical families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Family {
    Er,
    Ba,
    Ws,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Er, Family::Ba, Family::Ws];

    pub fn token(&self) -> &'static str {
        match self {
            Family::Er => "ER",
            Family::Ba => "BA",
            Family::Ws => "WS",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for Family {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_uppercase().as_str() {
            "ER" => Ok(Family::Er),
            "BA" => Ok(Family::Ba),
            "WS" => Ok(Family::Ws),
            other => Err(BaselineError::InvalidParameter(format!(
                "unknown family `{other}` (expected ER, BA, or WS)"
            ))),
        }
    }
}

/// Density of the undirected projection: edges present in either
/// direction over `n(n-1)/2` unordered pairs.
pub fn projection_density(g: &DirectedNetwork) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    let undirected: usize = g.undirected_adjacency().iter().map(|s| s.len()).sum::<usize>() / 2;
    undirected as f64 / ((n * (n - 1) / 2) as f64)
}

/// Erdős–Rényi: every unordered pair becomes a mutual directed pair
/// independently with probability `p`. Pure function of `(n, p, seed)`.
pub fn generate_er(n: usize, p: f64, seed: u64) -> Result<DirectedNetwork, BaselineError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BaselineError::InvalidParameter(format!(
            "ER probability {p} outside [0, 1]"
        )));
    }
    let mut rng = rng_for(seed, &["er"]);
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(p) {
                edges.insert((i, j));
                edges.insert((j, i));
            }
        }
    }
    Ok(DirectedNetwork::new(n, edges).expect("generated edges are valid"))
}

/// Barabási–Albert preferential attachment: an m-node seed clique, then
/// each arriving node attaches `m` edges (stored new→old) to existing
/// nodes with probability proportional to current projected degree.
pub fn generate_ba(n: usize, m: usize, seed: u64) -> Result<DirectedNetwork, BaselineError> {
    if m < 1 || m >= n {
        return Err(BaselineError::InvalidParameter(format!(
            "BA needs 1 <= m < n, got m={m}, n={n}"
        )));
    }
    let mut rng = rng_for(seed, &["ba"]);
    let mut edges = BTreeSet::new();
    let mut degree = vec![0usize; n];
    for i in 0..m {
        for j in (i + 1)..m {
            edges.insert((i, j));
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    for v in m..n {
        let mut targets: BTreeSet<usize> = BTreeSet::new();
        while targets.len() < m {
            // Weighted draw over current degrees; the seed clique start
            // guarantees positive total weight.
            let total: usize = degree[..v]
                .iter()
                .enumerate()
                .filter(|(i, _)| !targets.contains(i))
                .map(|(_, &d)| d.max(1))
                .sum();
            let mut pick = rng.gen_range(0..total);
            let mut chosen = None;
            for (i, &d) in degree[..v].iter().enumerate() {
                if targets.contains(&i) {
                    continue;
                }
                let w = d.max(1);
                if pick < w {
                    chosen = Some(i);
                    break;
                }
                pick -= w;
            }
            targets.insert(chosen.expect("weighted draw lands on a node"));
        }
        for t in targets {
            edges.insert((v, t));
            degree[v] += 1;
            degree[t] += 1;
        }
    }
    Ok(DirectedNetwork::new(n, edges).expect("generated edges are valid"))
}

/// Watts–Strogatz: ring lattice with `k_ring` nearest neighbors, each
/// ring edge rewired with probability `beta` to a uniform non-duplicate
/// target; stored as mutual directed pairs. Edge count is preserved.
pub fn generate_ws(
    n: usize,
    k_ring: usize,
    beta: f64,
    seed: u64,
) -> Result<DirectedNetwork, BaselineError> {
    if k_ring % 2 != 0 || k_ring < 2 || k_ring >= n {
        return Err(BaselineError::InvalidParameter(format!(
            "WS needs even 2 <= k_ring < n, got k_ring={k_ring}, n={n}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(BaselineError::InvalidParameter(format!(
            "WS beta {beta} outside [0, 1]"
        )));
    }
    let mut rng = rng_for(seed, &["ws"]);
    let mut undirected: BTreeSet<(usize, usize)> = BTreeSet::new();
    let norm = |a: usize, b: usize| (a.min(b), a.max(b));
    for i in 0..n {
        for hop in 1..=(k_ring / 2) {
            undirected.insert(norm(i, (i + hop) % n));
        }
    }
    for i in 0..n {
        for hop in 1..=(k_ring / 2) {
            let old = norm(i, (i + hop) % n);
            if !undirected.contains(&old) {
                continue; // already rewired away by an earlier step
            }
            if !rng.gen_bool(beta) {
                continue;
            }
            // Uniform replacement target avoiding self-loops and existing
            // edges; skip when node i is saturated.
            let neighbors: BTreeSet<usize> = undirected
                .iter()
                .filter_map(|&(a, b)| {
                    if a == i {
                        Some(b)
                    } else if b == i {
                        Some(a)
                    } else {
                        None
                    }
                })
                .collect();
            if neighbors.len() >= n - 1 {
                continue;
            }
            let target = loop {
                let t = rng.gen_range(0..n);
                if t != i && !neighbors.contains(&t) {
                    break t;
                }
            };
            undirected.remove(&old);
            undirected.insert(norm(i, target));
        }
    }
    let mut edges = BTreeSet::new();
    for (a, b) in undirected {
        edges.insert((a, b));
        edges.insert((b, a));
    }
    Ok(DirectedNetwork::new(n, edges).expect("generated edges are valid"))
}

/// Calibration input: node count, target undirected projection density,
/// and the seed list to average over.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget {
    pub n: usize,
    pub density: f64,
    pub seeds: Vec<u64>,
}

impl CalibrationTarget {
    pub fn new(n: usize, density: f64, seed_count: usize) -> CalibrationTarget {
        CalibrationTarget {
            n,
            density,
            seeds: (0..seed_count as u64).collect(),
        }
    }
}

/// Calibrated parameters per family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyParams {
    Er { p: f64 },
    Ba { m: usize },
    Ws { k_ring: usize, beta: f64 },
}

pub fn generate_family(
    params: FamilyParams,
    n: usize,
    seed: u64,
) -> Result<DirectedNetwork, BaselineError> {
    match params {
        FamilyParams::Er { p } => generate_er(n, p, seed),
        FamilyParams::Ba { m } => generate_ba(n, m, seed),
        FamilyParams::Ws { k_ring, beta } => generate_ws(n, k_ring, beta, seed),
    }
}

const WS_DEFAULT_BETA: f64 = 0.1;
const CALIBRATION_TOLERANCE: f64 = 0.10;

/// Density-matching calibration: ER takes `p = density`, BA takes
/// `m = round(density·(n−1)/2)`, WS takes the nearest feasible even ring
/// degree with the default rewiring probability. The returned parameters
/// are checked to achieve mean projection density within 10% of target
/// over the given seeds.
pub fn calibrate(
    target: &CalibrationTarget,
    family: Family,
) -> Result<FamilyParams, BaselineError> {
    if !(0.0 < target.density && target.density < 1.0) {
        return Err(BaselineError::InvalidParameter(format!(
            "target density {} outside (0, 1)",
            target.density
        )));
    }
    if target.seeds.is_empty() {
        return Err(BaselineError::InvalidParameter(
            "seed list must be non-empty".to_string(),
        ));
    }
    let n = target.n;
    let params = match family {
        Family::Er => FamilyParams::Er { p: target.density },
        Family::Ba => {
            let m = ((target.density * (n - 1) as f64) / 2.0).round() as usize;
            let m = m.clamp(1, n.saturating_sub(2));
            FamilyParams::Ba { m }
        }
        Family::Ws => {
            let mut k = (target.density * (n - 1) as f64).round() as usize;
            if k % 2 == 1 {
                k += 1;
            }
            if k < 2 {
                return Err(BaselineError::Unreachable {
                    family,
                    target: target.density,
                    reason: "ring degree rounds below 2".to_string(),
                });
            }
            if k >= n {
                return Err(BaselineError::Unreachable {
                    family,
                    target: target.density,
                    reason: format!("ring degree {k} hits the node-count ceiling {n}"),
                });
            }
            FamilyParams::Ws {
                k_ring: k,
                beta: WS_DEFAULT_BETA,
            }
        }
    };

    let mut sum = 0.0;
    for &seed in &target.seeds {
        let g = generate_family(params, n, seed)?;
        sum += projection_density(&g);
    }
    let achieved = sum / target.seeds.len() as f64;
    if (achieved - target.density).abs() > CALIBRATION_TOLERANCE * target.density {
        return Err(BaselineError::CalibrationMissed {
            family,
            achieved,
            target: target.density,
        });
    }
    Ok(params)
}

/// Per-seed metrics row.
#[derive(Debug, Clone)]
pub struct SuiteRow {
    pub family: Family,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Mean ± standard error of one metric over seeds. `samples` counts the
/// seeds where the metric was defined.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Aggregated suite result for one family.
#[derive(Debug, Clone)]
pub struct FamilySuite {
    pub family: Family,
    pub params: FamilyParams,
    pub rows: Vec<SuiteRow>,
    pub summaries: Vec<MetricSummary>,
}

/// The full baseline comparison: every requested family at calibrated
/// parameters, metrics per seed, aggregates over seeds. Calibration
/// failures are carried per family rather than aborting the suite.
#[derive(Debug)]
pub struct BaselineSuite {
    pub families: Vec<Result<FamilySuite, BaselineError>>,
}

pub fn summarize(metric: &'static str, values: &[f64]) -> MetricSummary {
    let samples = values.len();
    if samples == 0 {
        return MetricSummary {
            metric,
            mean: f64::NAN,
            stderr: f64::NAN,
            samples,
        };
    }
    let mean = values.iter().sum::<f64>() / samples as f64;
    let stderr = if samples < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        (var / samples as f64).sqrt()
    };
    MetricSummary {
        metric,
        mean,
        stderr,
        samples,
    }
}

fn family_suite(target: &CalibrationTarget, family: Family) -> Result<FamilySuite, BaselineError> {
    if target.seeds.len() < 2 {
        return Err(BaselineError::InvalidParameter(
            "suite needs at least 2 seeds".to_string(),
        ));
    }
    let params = calibrate(target, family)?;
    let rows: Vec<SuiteRow> = target
        .seeds
        .iter()
        .map(|&seed| {
            let g = generate_family(params, target.n, seed)?;
            Ok(SuiteRow {
                family,
                seed,
                report: MetricsReport::compute(&g),
            })
        })
        .collect::<Result<_, BaselineError>>()?;

    let collect = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Vec<f64> {
        rows.iter().filter_map(|r| f(&r.report)).collect()
    };
    let summaries = vec![
        summarize("density", &collect(&|r| Some(r.density))),
        summarize("avg_clustering", &collect(&|r| Some(r.avg_clustering))),
        summarize("lcc_proportion", &collect(&|r| Some(r.lcc_proportion))),
        summarize("avg_path", &collect(&|r| r.avg_path)),
        summarize("modularity", &collect(&|r| r.modularity)),
    ];
    Ok(FamilySuite {
        family,
        params,
        rows,
        summaries,
    })
}

/// Run the comparison for all three families.
pub fn baseline_suite(target: &CalibrationTarget) -> BaselineSuite {
    baseline_suite_for(target, &Family::ALL)
}

/// Run the comparison for a chosen family subset.
pub fn baseline_suite_for(target: &CalibrationTarget, families: &[Family]) -> BaselineSuite {
    BaselineSuite {
        families: families
            .iter()
            .map(|&family| family_suite(target, family))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{avg_clustering, degree_sequence, ks_statistic};

    #[test]
    fn er_extremes() {
        assert_eq!(generate_er(10, 0.0, 1).unwrap(), DirectedNetwork::empty(10));
        assert_eq!(
            generate_er(10, 1.0, 1).unwrap(),
            DirectedNetwork::complete(10)
        );
    }

    #[test]
    fn er_is_deterministic_per_seed() {
        let a = generate_er(30, 0.2, 5).unwrap();
        let b = generate_er(30, 0.2, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_er(30, 0.2, 6).unwrap());
    }

    #[test]
    fn er_clustering_tracks_p() {
        // Projection clustering of ER concentrates on p.
        let p = 0.19;
        let values: Vec<f64> = (0..30)
            .map(|s| avg_clustering(&generate_er(50, p, s).unwrap()))
            .collect();
        let summary = summarize("clustering", &values);
        assert!(
            (summary.mean - p).abs() < 3.0 * summary.stderr.max(1e-9),
            "mean {} stderr {}",
            summary.mean,
            summary.stderr
        );
        assert!((0.16..=0.22).contains(&summary.mean), "{}", summary.mean);
    }

    #[test]
    fn ba_structure() {
        // n = m+1 collapses to a clique.
        let g = generate_ba(6, 5, 3).unwrap();
        let adj = g.undirected_adjacency();
        assert!(adj.iter().all(|s| s.len() == 5));
        // Exact edge-count identity.
        for (n, m, seed) in [(50, 5, 1), (40, 3, 9), (20, 2, 4)] {
            let g = generate_ba(n, m, seed).unwrap();
            let expected = m * (n - m) + m * (m - 1) / 2;
            assert_eq!(g.edge_count(), expected, "n={n} m={m}");
        }
    }

    #[test]
    fn ba_heavier_tail_than_er() {
        // Paired-seed comparison at matched projection density.
        let n = 50;
        let m = 5;
        let p = {
            let edges = (m * (n - m) + m * (m - 1) / 2) as f64;
            edges / ((n * (n - 1) / 2) as f64)
        };
        let mut ba_max_sum = 0usize;
        let mut er_max_sum = 0usize;
        for seed in 0..30 {
            let ba = generate_ba(n, m, seed).unwrap();
            let er = generate_er(n, p, seed).unwrap();
            ba_max_sum += *degree_sequence(&ba).last().unwrap();
            er_max_sum += *degree_sequence(&er).last().unwrap();
        }
        assert!(
            ba_max_sum > er_max_sum,
            "BA mean max degree {} <= ER {}",
            ba_max_sum as f64 / 30.0,
            er_max_sum as f64 / 30.0
        );
        // Pooled KS between the families is macroscopic.
        let mut ba_pool = Vec::new();
        let mut er_pool = Vec::new();
        for seed in 0..30 {
            ba_pool.extend(degree_sequence(&generate_ba(n, m, seed).unwrap()));
            er_pool.extend(degree_sequence(&generate_er(n, p, seed).unwrap()));
        }
        let ks = ks_statistic(&ba_pool, &er_pool).unwrap();
        assert!(ks > 0.2, "pooled KS {ks}");
    }

    #[test]
    fn ws_lattice_clustering_matches_closed_form() {
        let k = 10;
        let g = generate_ws(50, k, 0.0, 7).unwrap();
        let analytic = 3.0 * (k as f64 - 2.0) / (4.0 * (k as f64 - 2.0) + 4.0);
        let measured = avg_clustering(&g);
        assert!(
            (measured - analytic).abs() < 1e-12,
            "measured {measured} analytic {analytic}"
        );
        // Deterministic lattice: no seed dependence at beta = 0.
        assert_eq!(g, generate_ws(50, k, 0.0, 99).unwrap());
    }

    #[test]
    fn ws_preserves_edge_count() {
        for beta in [0.0, 0.1, 0.5, 1.0] {
            let g = generate_ws(50, 10, beta, 3).unwrap();
            let undirected: usize =
                g.undirected_adjacency().iter().map(|s| s.len()).sum::<usize>() / 2;
            assert_eq!(undirected, 50 * 10 / 2, "beta={beta}");
        }
    }

    #[test]
    fn ws_full_rewire_approaches_er_clustering() {
        let n = 50;
        let k = 10;
        let p = k as f64 / (n - 1) as f64;
        let mut ws_sum = 0.0;
        let mut er_sum = 0.0;
        for seed in 0..30 {
            ws_sum += avg_clustering(&generate_ws(n, k, 1.0, seed).unwrap());
            er_sum += avg_clustering(&generate_er(n, p, seed).unwrap());
        }
        let gap = (ws_sum / 30.0 - er_sum / 30.0).abs();
        assert!(gap < 0.05, "gap {gap}");
    }

    #[test]
    fn ws_small_world_signature_at_low_beta() {
        let n = 50;
        let k = 10;
        let p = k as f64 / (n - 1) as f64;
        let ws_clustering: Vec<f64> = (0..30)
            .map(|s| avg_clustering(&generate_ws(n, k, 0.1, s).unwrap()))
            .collect();
        let er_clustering: Vec<f64> = (0..30)
            .map(|s| avg_clustering(&generate_er(n, p, s).unwrap()))
            .collect();
        let ws = summarize("c", &ws_clustering);
        let er = summarize("c", &er_clustering);
        let gap = ws.mean - er.mean;
        let stderr = (ws.stderr.powi(2) + er.stderr.powi(2)).sqrt();
        assert!(gap > 3.0 * stderr, "gap {gap} stderr {stderr}");

        let ws_path: Vec<f64> = (0..30)
            .filter_map(|s| crate::metrics::avg_path(&generate_ws(n, k, 0.1, s).unwrap()))
            .collect();
        let er_path: Vec<f64> = (0..30)
            .filter_map(|s| crate::metrics::avg_path(&generate_er(n, p, s).unwrap()))
            .collect();
        let ws_mean = ws_path.iter().sum::<f64>() / ws_path.len() as f64;
        let er_mean = er_path.iter().sum::<f64>() / er_path.len() as f64;
        assert!(ws_mean < 1.5 * er_mean, "ws {ws_mean} er {er_mean}");
    }

    #[test]
    fn calibrate_examples() {
        let target = CalibrationTarget::new(50, 0.19, 30);
        assert_eq!(
            calibrate(&target, Family::Er).unwrap(),
            FamilyParams::Er { p: 0.19 }
        );
        assert_eq!(
            calibrate(&target, Family::Ba).unwrap(),
            FamilyParams::Ba { m: 5 }
        );
        assert_eq!(
            calibrate(&target, Family::Ws).unwrap(),
            FamilyParams::Ws { k_ring: 10, beta: 0.1 }
        );
    }

    #[test]
    fn calibrate_ws_ceiling_error() {
        let target = CalibrationTarget::new(50, 0.9999, 5);
        assert!(matches!(
            calibrate(&target, Family::Ws),
            Err(BaselineError::Unreachable { .. })
        ));
    }

    #[test]
    fn suite_er_density_concentrates() {
        let target = CalibrationTarget::new(50, 0.19, 30);
        let suite = baseline_suite_for(&target, &[Family::Er]);
        let er = suite.families[0].as_ref().unwrap();
        let density = er.summaries.iter().find(|s| s.metric == "density").unwrap();
        assert!((0.17..=0.21).contains(&density.mean), "{}", density.mean);
    }

    #[test]
    fn suite_ws_beta_zero_is_deterministic() {
        let mut target = CalibrationTarget::new(50, 0.19, 5);
        target.seeds = vec![1, 2, 3, 4, 5];
        let params = FamilyParams::Ws { k_ring: 10, beta: 0.0 };
        let values: Vec<f64> = target
            .seeds
            .iter()
            .map(|&s| avg_clustering(&generate_family(params, 50, s).unwrap()))
            .collect();
        let summary = summarize("clustering", &values);
        assert_eq!(summary.stderr, 0.0);
    }
}
