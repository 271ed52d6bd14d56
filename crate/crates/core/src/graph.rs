//! Directed-network representation, `.adj` file I/O, and verification.
//!
//! Networks are node-set-fixed: `n` is part of the value, and every edge
//! endpoint must be in `0..n`. Edges are an ordered set of `(source,
//! target)` pairs with no self-loops. All analysis operates on immutable
//! networks, so they are freely shareable across threads.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::persona::Roster;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("network needs at least 1 node")]
    NoNodes,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) references node {2} but the network has {3} nodes")]
    NodeOutOfRange(usize, usize, usize, usize),
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A directed graph over nodes `0..n` with no self-loops or duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedNetwork {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedNetwork {
    /// Build a network, validating endpoints and rejecting self-loops.
    /// Duplicate pairs collapse silently (the edge set is a set).
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::NoNodes);
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(GraphError::SelfLoop(i, j));
            }
            let bad = if i >= n { i } else { j };
            if i >= n || j >= n {
                return Err(GraphError::NodeOutOfRange(i, j, bad, n));
            }
            set.insert((i, j));
        }
        Ok(DirectedNetwork { n, edges: set })
    }

    /// Build without validation. Exists so tests and verification fixtures
    /// can represent invalid graphs; everything else should use [`new`].
    ///
    /// [`new`]: DirectedNetwork::new
    pub fn new_unchecked(n: usize, edges: BTreeSet<(usize, usize)>) -> Self {
        DirectedNetwork { n, edges }
    }

    pub fn empty(n: usize) -> Self {
        DirectedNetwork {
            n,
            edges: BTreeSet::new(),
        }
    }

    /// Complete directed graph: every ordered pair with distinct endpoints.
    pub fn complete(n: usize) -> Self {
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.insert((i, j));
                }
            }
        }
        DirectedNetwork { n, edges }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.edges.contains(&(source, target))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    /// Neighbor sets of the undirected projection: `j ∈ adj[i]` iff either
    /// direction exists. The convention every topology metric uses.
    pub fn undirected_adjacency(&self) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); self.n];
        for &(i, j) in &self.edges {
            if i < self.n && j < self.n && i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
        adj
    }

    /// Out-neighbor lists, ascending per source.
    pub fn out_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            if i < self.n {
                adj[i].push(j);
            }
        }
        adj
    }

    /// Apply a node relabeling: edge `(i, j)` becomes `(perm[i], perm[j])`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, GraphError> {
        assert_eq!(perm.len(), self.n, "permutation must cover all nodes");
        DirectedNetwork::new(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }
}

/// One structural violation found by [`verify_network`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    SelfLoop { node: usize },
    NodeOutOfRange { source: usize, target: usize, n: usize },
    NodeCountMismatch { network: usize, roster: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Violation::NodeOutOfRange { source, target, n } => {
                write!(f, "edge ({source}, {target}) outside node range 0..{n}")
            }
            Violation::NodeCountMismatch { network, roster } => {
                write!(f, "network has {network} nodes but the roster has {roster}")
            }
        }
    }
}

/// Pass/fail verification result with itemized violations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub violations: Vec<Violation>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a network is a valid directed graph over the roster: node count
/// matches, endpoints in range, no self-loops. Duplicates cannot occur in
/// the set representation; file and parse layers reject them earlier.
pub fn verify_network(network: &DirectedNetwork, roster: &Roster) -> VerificationReport {
    let mut violations = Vec::new();
    if network.n != roster.len() {
        violations.push(Violation::NodeCountMismatch {
            network: network.n,
            roster: roster.len(),
        });
    }
    for &(i, j) in &network.edges {
        if i == j {
            violations.push(Violation::SelfLoop { node: i });
        } else if i >= network.n || j >= network.n {
            violations.push(Violation::NodeOutOfRange {
                source: i,
                target: j,
                n: network.n,
            });
        }
    }
    VerificationReport { violations }
}

/// Render the `.adj` form: header `n=<count>`, then one line per non-empty
/// source, `src: dst1 dst2 ...`, sources and destinations ascending, LF
/// line endings, no trailing whitespace. Byte-stable so golden files diff
/// cleanly.
pub fn adj_to_string(network: &DirectedNetwork) -> String {
    let mut out = format!("n={}\n", network.n);
    let mut current: Option<usize> = None;
    for &(i, j) in &network.edges {
        match current {
            Some(src) if src == i => {
                out.push(' ');
            }
            _ => {
                if current.is_some() {
                    out.push('\n');
                }
                out.push_str(&format!("{i}:"));
                out.push(' ');
                current = Some(i);
            }
        }
        out.push_str(&j.to_string());
    }
    if current.is_some() {
        out.push('\n');
    }
    out
}

pub fn write_adj(network: &DirectedNetwork, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let path = path.as_ref();
    std::fs::write(path, adj_to_string(network)).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse the `.adj` form, validating strictly: ascending sources, ascending
/// destinations, in-range ids, no self-loops, no duplicates. Errors carry
/// the offending line number.
pub fn adj_from_str(text: &str, path: &str) -> Result<DirectedNetwork, GraphError> {
    let malformed = |line: usize, message: String| GraphError::Malformed {
        path: path.to_string(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file, expected `n=<count>` header".to_string()))?;
    let n: usize = header
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| malformed(1, format!("expected `n=<count>` header, got `{header}`")))?;
    if n == 0 {
        return Err(malformed(1, "node count must be at least 1".to_string()));
    }

    let mut edges = BTreeSet::new();
    let mut last_src: Option<usize> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            return Err(malformed(line_no, "blank line not allowed".to_string()));
        }
        if line != line.trim_end() {
            return Err(malformed(line_no, "trailing whitespace".to_string()));
        }
        let (src_text, rest) = line
            .split_once(':')
            .ok_or_else(|| malformed(line_no, format!("expected `src: dst ...`, got `{line}`")))?;
        let src: usize = src_text
            .parse()
            .map_err(|_| malformed(line_no, format!("bad source id `{src_text}`")))?;
        if src >= n {
            return Err(malformed(line_no, format!("source id {src} out of range 0..{n}")));
        }
        if let Some(prev) = last_src {
            if src <= prev {
                return Err(malformed(
                    line_no,
                    format!("source {src} not ascending after {prev}"),
                ));
            }
        }
        last_src = Some(src);

        let rest = rest.strip_prefix(' ').ok_or_else(|| {
            malformed(line_no, "expected single space after `:`".to_string())
        })?;
        let mut last_dst: Option<usize> = None;
        let mut any = false;
        for token in rest.split(' ') {
            if token.is_empty() {
                return Err(malformed(line_no, "double space between targets".to_string()));
            }
            let dst: usize = token
                .parse()
                .map_err(|_| malformed(line_no, format!("bad target id `{token}`")))?;
            if dst >= n {
                return Err(malformed(line_no, format!("target id {dst} out of range 0..{n}")));
            }
            if dst == src {
                return Err(malformed(line_no, format!("self-loop {src} -> {dst}")));
            }
            if let Some(prev) = last_dst {
                if dst == prev {
                    return Err(malformed(line_no, format!("duplicate edge {src} -> {dst}")));
                }
                if dst < prev {
                    return Err(malformed(
                        line_no,
                        format!("target {dst} not ascending after {prev}"),
                    ));
                }
            }
            last_dst = Some(dst);
            edges.insert((src, dst));
            any = true;
        }
        if !any {
            return Err(malformed(line_no, format!("source {src} lists no targets")));
        }
    }
    Ok(DirectedNetwork { n, edges })
}

pub fn read_adj(path: impl AsRef<Path>) -> Result<DirectedNetwork, GraphError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    adj_from_str(&text, &path.display().to_string())
}
