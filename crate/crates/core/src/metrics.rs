//! Topology metrics and network-comparison statistics.
//!
//! Conventions: clustering, components, path lengths, and modularity are
//! computed on the undirected projection (an edge exists iff either
//! direction exists), "connected" means weakly connected, and average
//! path length is taken within the largest component only. Metrics that
//! can be undefined (path length on a fragmented graph, modularity of an
//! empty edge set) report absence explicitly instead of 0 or NaN.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use thiserror::Error;

use crate::graph::DirectedNetwork;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("networks have {0} and {1} nodes; edge distance needs equal node sets")]
    NodeCountMismatch(usize, usize),
    #[error("degree sequence is empty")]
    EmptySequence,
}

/// Directed density: `|E| / (n(n-1))`. Zero for a single-node network.
pub fn density(g: &DirectedNetwork) -> f64 {
    let n = g.node_count();
    if n < 2 {
        return 0.0;
    }
    g.edge_count() as f64 / (n * (n - 1)) as f64
}

/// Mean local clustering coefficient of the undirected projection.
/// Nodes of projected degree < 2 contribute 0.
pub fn avg_clustering(g: &DirectedNetwork) -> f64 {
    let adj = g.undirected_adjacency();
    let n = g.node_count();
    let mut total = 0.0;
    for v in 0..n {
        total += local_clustering(&adj, v);
    }
    total / n as f64
}

fn local_clustering(adj: &[BTreeSet<usize>], v: usize) -> f64 {
    let neighbors: Vec<usize> = adj[v].iter().copied().collect();
    let d = neighbors.len();
    if d < 2 {
        return 0.0;
    }
    let mut triangles = 0usize;
    for (a, &u) in neighbors.iter().enumerate() {
        for &w in &neighbors[a + 1..] {
            if adj[u].contains(&w) {
                triangles += 1;
            }
        }
    }
    triangles as f64 / ((d * (d - 1) / 2) as f64)
}

/// Nodes of the largest weakly connected component, ascending.
pub fn largest_component(g: &DirectedNetwork) -> Vec<usize> {
    let adj = g.undirected_adjacency();
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut component = vec![start];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    component.push(u);
                    queue.push_back(u);
                }
            }
        }
        if component.len() > best.len() {
            best = component;
        }
    }
    best.sort_unstable();
    best
}

/// Fraction of nodes in the largest weakly connected component.
pub fn lcc_proportion(g: &DirectedNetwork) -> f64 {
    largest_component(g).len() as f64 / g.node_count() as f64
}

/// Mean undirected shortest-path length over unordered node pairs within
/// the largest component. `None` when that component has fewer than 2
/// nodes (the metric is undefined, not zero).
pub fn avg_path(g: &DirectedNetwork) -> Option<f64> {
    let component = largest_component(g);
    let k = component.len();
    if k < 2 {
        return None;
    }
    let adj = g.undirected_adjacency();
    let members: BTreeSet<usize> = component.iter().copied().collect();
    let mut total: u64 = 0;
    for &source in &component {
        let mut dist = vec![usize::MAX; g.node_count()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        for &target in members.range((source + 1)..) {
            total += dist[target] as u64;
        }
    }
    let pairs = (k * (k - 1) / 2) as f64;
    Some(total as f64 / pairs)
}

/// A modularity score together with the partition achieving it.
/// `communities[v]` is the community index of node `v`; indices are
/// compact and ordered by each community's smallest member.
#[derive(Debug, Clone, PartialEq)]
pub struct Modularity {
    pub q: f64,
    pub communities: Vec<usize>,
}

/// Newman modularity of an explicit partition, on the undirected
/// projection: `Q = Σ_c (L_c/m − (D_c/2m)²)`.
pub fn modularity_of(g: &DirectedNetwork, communities: &[usize]) -> Option<f64> {
    let adj = g.undirected_adjacency();
    let n = g.node_count();
    assert_eq!(communities.len(), n, "one community per node");
    let m: usize = adj.iter().map(|s| s.len()).sum::<usize>() / 2;
    if m == 0 {
        return None;
    }
    let k = communities.iter().max().map_or(0, |&c| c + 1);
    let mut intra = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for v in 0..n {
        degree[communities[v]] += adj[v].len();
        for &u in adj[v].range((v + 1)..) {
            if communities[u] == communities[v] {
                intra[communities[v]] += 1;
            }
        }
    }
    let m_f = m as f64;
    let mut q = 0.0;
    for c in 0..k {
        let a = degree[c] as f64 / (2.0 * m_f);
        q += intra[c] as f64 / m_f - a * a;
    }
    Some(q)
}

/// Greedy agglomerative modularity maximization (CNM-style) on the
/// undirected projection. Starts from singletons, repeatedly merges the
/// connected community pair with the largest gain (ties broken by lowest
/// community index, where a community's index is its smallest member),
/// and returns the best partition seen. Deterministic. `None` when the
/// edge set is empty.
pub fn modularity(g: &DirectedNetwork) -> Option<Modularity> {
    let adj = g.undirected_adjacency();
    let n = g.node_count();
    let m: usize = adj.iter().map(|s| s.len()).sum::<usize>() / 2;
    if m == 0 {
        return None;
    }
    let m_f = m as f64;

    // Community state, keyed by smallest member id.
    let mut assignment: Vec<usize> = (0..n).collect();
    let mut degree: std::collections::BTreeMap<usize, usize> = (0..n)
        .map(|v| (v, adj[v].len()))
        .collect();
    let mut intra: std::collections::BTreeMap<usize, usize> =
        (0..n).map(|v| (v, 0)).collect();
    // Undirected edge counts between community pairs (lo, hi).
    let mut between: std::collections::BTreeMap<(usize, usize), usize> =
        std::collections::BTreeMap::new();
    for v in 0..n {
        for &u in adj[v].range((v + 1)..) {
            *between.entry((v, u)).or_insert(0) += 1;
        }
    }

    let q_of = |degree: &std::collections::BTreeMap<usize, usize>,
                intra: &std::collections::BTreeMap<usize, usize>| {
        degree
            .iter()
            .map(|(c, &d)| {
                let a = d as f64 / (2.0 * m_f);
                intra[c] as f64 / m_f - a * a
            })
            .sum::<f64>()
    };

    let mut q = q_of(&degree, &intra);
    let mut best_q = q;
    let mut best_assignment = assignment.clone();

    while !between.is_empty() {
        // Pick the connected pair with the largest modularity gain.
        let mut chosen: Option<((usize, usize), f64)> = None;
        for (&(a, b), &edges) in &between {
            let gain = edges as f64 / m_f
                - (degree[&a] as f64 * degree[&b] as f64) / (2.0 * m_f * m_f);
            let better = match chosen {
                None => true,
                Some((_, best_gain)) => gain > best_gain,
            };
            if better {
                chosen = Some(((a, b), gain));
            }
        }
        let ((a, b), gain) = chosen.expect("non-empty between map");

        // Merge b into a (a < b by key order).
        let db = degree.remove(&b).expect("community exists");
        *degree.get_mut(&a).expect("community exists") += db;
        let ib = intra.remove(&b).expect("community exists");
        let ab = between.remove(&(a, b)).expect("connected pair");
        *intra.get_mut(&a).expect("community exists") += ib + ab;
        for v in 0..n {
            if assignment[v] == b {
                assignment[v] = a;
            }
        }
        // Re-point b's remaining neighbor links at a.
        let moved: Vec<((usize, usize), usize)> = between
            .iter()
            .filter(|(&(x, y), _)| x == b || y == b)
            .map(|(&k, &v)| (k, v))
            .collect();
        for ((x, y), w) in moved {
            between.remove(&(x, y));
            let other = if x == b { y } else { x };
            let key = (a.min(other), a.max(other));
            *between.entry(key).or_insert(0) += w;
        }

        q += 2.0 * gain;
        if q > best_q {
            best_q = q;
            best_assignment = assignment.clone();
        }
    }

    Some(Modularity {
        q: best_q,
        communities: compact_labels(&best_assignment),
    })
}

/// Renumber arbitrary community labels to 0..k by smallest member.
fn compact_labels(assignment: &[usize]) -> Vec<usize> {
    let mut mapping = std::collections::BTreeMap::new();
    let mut out = Vec::with_capacity(assignment.len());
    for &label in assignment {
        let next = mapping.len();
        out.push(*mapping.entry(label).or_insert(next));
    }
    out
}

/// Fraction of possible directed edges on which two networks disagree:
/// `|E1 Δ E2| / (n(n-1))`. A scaled Hamming metric.
pub fn edge_distance(a: &DirectedNetwork, b: &DirectedNetwork) -> Result<f64, MetricsError> {
    if a.node_count() != b.node_count() {
        return Err(MetricsError::NodeCountMismatch(a.node_count(), b.node_count()));
    }
    let n = a.node_count();
    if n < 2 {
        return Ok(0.0);
    }
    let disagreements = a.edge_set().symmetric_difference(b.edge_set()).count();
    Ok(disagreements as f64 / (n * (n - 1)) as f64)
}

/// Degree sequence of the undirected projection, ascending.
pub fn degree_sequence(g: &DirectedNetwork) -> Vec<usize> {
    let mut degrees: Vec<usize> = g.undirected_adjacency().iter().map(|s| s.len()).collect();
    degrees.sort_unstable();
    degrees
}

/// Two-sample Kolmogorov-Smirnov statistic over integer sequences:
/// the supremum over thresholds of |ECDF1 − ECDF2|. Order-insensitive.
pub fn ks_statistic(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    let values: BTreeSet<usize> = a.iter().chain(b.iter()).copied().collect();
    let ecdf = |xs: &[usize], v: usize| {
        xs.iter().filter(|&&x| x <= v).count() as f64 / xs.len() as f64
    };
    let mut sup: f64 = 0.0;
    for &v in &values {
        let diff = (ecdf(a, v) - ecdf(b, v)).abs();
        if diff > sup {
            sup = diff;
        }
    }
    Ok(sup)
}

/// The full per-network topology report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub n: usize,
    pub edge_count: usize,
    pub density: f64,
    pub avg_clustering: f64,
    pub lcc_proportion: f64,
    pub avg_path: Option<f64>,
    pub modularity: Option<f64>,
    pub degree_sequence: Vec<usize>,
}

impl MetricsReport {
    pub fn compute(g: &DirectedNetwork) -> MetricsReport {
        MetricsReport {
            n: g.node_count(),
            edge_count: g.edge_count(),
            density: density(g),
            avg_clustering: avg_clustering(g),
            lcc_proportion: lcc_proportion(g),
            avg_path: avg_path(g),
            modularity: modularity(g).map(|m| m.q),
            degree_sequence: degree_sequence(g),
        }
    }
}
