//! Baseline / inbreeding homophily decomposition.
//!
//! For each demographic attribute the baseline is the probability a random
//! ordered pair of distinct personas shares a group, which depends only on
//! roster composition; the same-group ratio divides the observed share of
//! same-group edges by that baseline, so values above 1 measure preference
//! beyond composition. Both quantities are backed by exact integer pair
//! counts, so reports can be checked against enumeration with zero
//! tolerance.

use crate::graph::DirectedNetwork;
use crate::persona::{Attribute, Roster};

/// Exact integer ratio `matching / total` over ordered pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub matching: u64,
    pub total: u64,
}

impl PairCounts {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matching as f64 / self.total as f64
        }
    }
}

/// Per-attribute homophily report. `raw_share` and `ratio` are `None` when
/// undefined (no edges, or a zero baseline); undefined is a first-class
/// state, never silently 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HomophilyReport {
    pub attribute: Attribute,
    /// Random-pairing probability of a same-group tie, from roster
    /// composition alone.
    pub baseline: f64,
    /// Observed fraction of edges joining same-group personas.
    pub raw_share: Option<f64>,
    /// Inbreeding homophily: `raw_share / baseline`. 1 means purely
    /// baseline homophily.
    pub ratio: Option<f64>,
    /// Exact counts behind `baseline`.
    pub baseline_pairs: PairCounts,
    /// Number of edges joining same-group personas.
    pub matching_edges: u64,
    pub edge_count: u64,
}

impl HomophilyReport {
    pub fn defined(&self) -> bool {
        self.ratio.is_some()
    }
}

/// Exact ordered-pair counts for the baseline of `attribute`.
///
/// Categorical attributes use the closed form `Σ_g |V_g|·(|V_g|−1)` over
/// `n(n−1)`; interests count ordered pairs with tag overlap ≥ 1 by direct
/// enumeration (the only parameter-free rule yielding a single scalar).
pub fn baseline_pairs(roster: &Roster, attribute: Attribute) -> PairCounts {
    let n = roster.len() as u64;
    let total = n * (n - 1);
    let matching = match attribute {
        Attribute::Interests => {
            let mut count = 0u64;
            for a in roster.iter() {
                for b in roster.iter() {
                    if a.id != b.id && a.same_group(b, Attribute::Interests) {
                        count += 1;
                    }
                }
            }
            count
        }
        cat => {
            let partition = crate::persona::partition(roster, cat)
                .expect("categorical attributes always partition");
            partition
                .groups
                .values()
                .map(|g| {
                    let size = g.len() as u64;
                    size * (size - 1)
                })
                .sum()
        }
    };
    PairCounts { matching, total }
}

/// Random-pairing probability that a directed pair shares a group on
/// `attribute`. Returns 0 when every group is a singleton; callers must
/// treat the ratio as undefined in that case.
pub fn baseline_probability(roster: &Roster, attribute: Attribute) -> f64 {
    baseline_pairs(roster, attribute).fraction()
}

/// Count edges joining same-group personas on `attribute`.
pub fn matching_edges(g: &DirectedNetwork, roster: &Roster, attribute: Attribute) -> u64 {
    g.edges()
        .filter(|&(i, j)| {
            let a = roster.get(i).expect("edge endpoint in roster");
            let b = roster.get(j).expect("edge endpoint in roster");
            a.same_group(b, attribute)
        })
        .count() as u64
}

/// The same-group ratio for one attribute: observed same-group edge share
/// over the composition baseline.
pub fn same_group_ratio(
    g: &DirectedNetwork,
    roster: &Roster,
    attribute: Attribute,
) -> HomophilyReport {
    let baseline_pairs = baseline_pairs(roster, attribute);
    let baseline = baseline_pairs.fraction();
    let edge_count = g.edge_count() as u64;
    let matching = matching_edges(g, roster, attribute);
    let raw_share = if edge_count == 0 {
        None
    } else {
        Some(matching as f64 / edge_count as f64)
    };
    let ratio = match raw_share {
        Some(share) if baseline > 0.0 => Some(share / baseline),
        _ => None,
    };
    HomophilyReport {
        attribute,
        baseline,
        raw_share,
        ratio,
        baseline_pairs,
        matching_edges: matching,
        edge_count,
    }
}

/// One report per attribute in fixed order: gender, age-bracket, race,
/// religion, politics, interests. Undefined attributes are reported as
/// such without aborting the profile.
pub fn homophily_profile(g: &DirectedNetwork, roster: &Roster) -> Vec<HomophilyReport> {
    Attribute::ALL
        .iter()
        .map(|&attribute| same_group_ratio(g, roster, attribute))
        .collect()
}
