//! Deterministic homophily-weighted mock backend.
//!
//! The mock recovers its full context — ego, candidate personas, current
//! edges — from the rendered prompt text itself (the structural block
//! markers and persona cards make prompts machine-readable in every
//! language), scores each candidate by shared-attribute weights, and
//! emits nominations in the same text contract the remote backend uses.
//! Its output therefore flows through the real parser path: the whole
//! pipeline is exercised, not just the math.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::backend::{Backend, BackendError, BackendRequest};
use crate::persona::{age_bracket_label, Attribute};
use crate::seed::derive_seed;
use crate::template::{
    Method, CANDIDATES_MARKER, EDGES_MARKER, EGO_MARKER, REASONS_MARKER, ROSTER_MARKER,
};

#[derive(Debug, Error)]
pub enum MockError {
    #[error("mock could not parse prompt: {0}")]
    UnparseablePrompt(String),
}

/// Homophily-weighted nomination policy.
///
/// Each candidate scores `base_logit + Σ_a weights[a] · 1{same group on a}`
/// plus, when `seed != 0`, a deterministic jitter in `[0, 0.5)` derived
/// from `(seed, ego, candidate)` that varies networks across seeds without
/// overturning a dominant weight. Seed 0 disables jitter so ties resolve
/// purely by lowest persona id. The top `out_degree_target` candidates are
/// nominated.
#[derive(Debug, Clone, PartialEq)]
pub struct MockPolicy {
    pub weights: BTreeMap<Attribute, f64>,
    pub base_logit: f64,
    pub out_degree_target: usize,
    pub seed: u64,
}

const JITTER_AMPLITUDE: f64 = 0.5;

impl MockPolicy {
    /// No preferences at all: nominations fall to the lowest-id candidates.
    pub fn uniform(out_degree_target: usize) -> MockPolicy {
        MockPolicy {
            weights: BTreeMap::new(),
            base_logit: 0.0,
            out_degree_target,
            seed: 0,
        }
    }

    /// A single dominant attribute.
    pub fn weighted(attribute: Attribute, weight: f64, out_degree_target: usize, seed: u64) -> MockPolicy {
        MockPolicy {
            weights: BTreeMap::from([(attribute, weight)]),
            base_logit: 0.0,
            out_degree_target,
            seed,
        }
    }

    /// Method-signature emulation: politics dominates tie formation under
    /// the factorizing and iterative methods, age under global, with
    /// per-method out-degrees tuned to the observed density scales.
    pub fn emulation_for(method: Method, seed: u64) -> MockPolicy {
        let (attribute, out_degree) = match method {
            Method::Sequential => (Attribute::Politics, 6),
            Method::Local => (Attribute::Politics, 5),
            Method::Iterative => (Attribute::Politics, 7),
            Method::Global => (Attribute::AgeBracket, 3),
        };
        MockPolicy::weighted(attribute, 3.0, out_degree, seed)
    }
}

/// A persona as recovered from one prompt card.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardInfo {
    pub id: Option<usize>,
    pub name: String,
    pub gender: String,
    pub age: u32,
    pub race: String,
    pub religion: String,
    pub politics: String,
    pub interests: BTreeSet<String>,
}

fn same_group(a: &CardInfo, b: &CardInfo, attribute: Attribute) -> bool {
    match attribute {
        Attribute::Gender => a.gender == b.gender,
        Attribute::AgeBracket => age_bracket_label(a.age) == age_bracket_label(b.age),
        Attribute::Race => a.race == b.race,
        Attribute::Religion => a.religion == b.religion,
        Attribute::Politics => a.politics == b.politics,
        Attribute::Interests => a.interests.intersection(&b.interests).next().is_some(),
    }
}

/// What kind of reply the prompt asks for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReplyShape {
    /// Ego nominating from a candidate list: `- <name>` lines.
    Names,
    /// Full `- <source> -> <target>` edge list over the roster.
    EdgeList,
}

/// Everything the mock recovers from a prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptContext {
    pub shape: ReplyShape,
    pub ego: Option<CardInfo>,
    pub candidates: Vec<CardInfo>,
    /// `(source name, target name)` pairs from the current-network block.
    pub current_edges: Vec<(String, String)>,
    pub reasons_on: bool,
}

fn parse_card(line: &str) -> Option<CardInfo> {
    let (head, attrs) = line.split_once(" | ")?;
    let (id, name) = if let Some(name) = head.strip_prefix("* ") {
        (None, name.trim().to_string())
    } else {
        let (num, name) = head.split_once(". ")?;
        (Some(num.trim().parse().ok()?), name.trim().to_string())
    };
    let mut gender = None;
    let mut age = None;
    let mut race = None;
    let mut religion = None;
    let mut politics = None;
    let mut interests = BTreeSet::new();
    for field in attrs.split("; ") {
        let (key, value) = field.split_once(": ")?;
        match key {
            "gender" => gender = Some(value.to_string()),
            "age" => age = value.parse().ok(),
            "race" => race = Some(value.to_string()),
            "religion" => religion = Some(value.to_string()),
            "politics" => politics = Some(value.to_string()),
            "interests" => {
                interests = value.split(", ").map(str::to_string).collect();
            }
            _ => return None,
        }
    }
    Some(CardInfo {
        id,
        name,
        gender: gender?,
        age: age?,
        race: race?,
        religion: religion?,
        politics: politics?,
        interests,
    })
}

/// Recover the generation context from rendered prompt text.
pub fn parse_prompt_context(prompt: &str) -> Result<PromptContext, MockError> {
    let mut ego = None;
    let mut candidates = Vec::new();
    let mut current_edges = Vec::new();
    let mut has_edges_block = false;

    #[derive(PartialEq)]
    enum Block {
        None,
        Ego,
        Cards,
        Edges,
    }
    let mut block = Block::None;

    for line in prompt.lines() {
        let trimmed = line.trim_end();
        match trimmed {
            EGO_MARKER => {
                block = Block::Ego;
                continue;
            }
            ROSTER_MARKER | CANDIDATES_MARKER => {
                block = Block::Cards;
                continue;
            }
            EDGES_MARKER => {
                block = Block::Edges;
                has_edges_block = true;
                continue;
            }
            _ => {}
        }
        match block {
            Block::Ego => {
                if let Some(card) = parse_card(trimmed) {
                    ego = Some(card);
                    block = Block::None;
                } else if !trimmed.is_empty() {
                    block = Block::None;
                }
            }
            Block::Cards => {
                if let Some(card) = parse_card(trimmed) {
                    candidates.push(card);
                } else if !trimmed.is_empty() {
                    block = Block::None;
                }
            }
            Block::Edges => {
                if let Some(rest) = trimmed.strip_prefix("- ") {
                    if let Some((src, dst)) = rest.split_once(" -> ") {
                        current_edges.push((src.trim().to_string(), dst.trim().to_string()));
                        continue;
                    }
                }
                if !trimmed.is_empty() {
                    block = Block::None;
                }
            }
            Block::None => {}
        }
    }

    if candidates.is_empty() {
        return Err(MockError::UnparseablePrompt(
            "no persona cards found".to_string(),
        ));
    }
    let shape = if has_edges_block || ego.is_none() {
        ReplyShape::EdgeList
    } else {
        ReplyShape::Names
    };
    Ok(PromptContext {
        shape,
        ego,
        candidates,
        current_edges,
        reasons_on: prompt.contains(REASONS_MARKER),
    })
}

fn jitter(policy: &MockPolicy, ego: &str, candidate: &str) -> f64 {
    if policy.seed == 0 {
        return 0.0;
    }
    let h = derive_seed(policy.seed, &["mock-jitter", ego, candidate]);
    (h >> 11) as f64 / (1u64 << 53) as f64 * JITTER_AMPLITUDE
}

fn score(policy: &MockPolicy, ego: &CardInfo, candidate: &CardInfo) -> f64 {
    let mut score = policy.base_logit + jitter(policy, &ego.name, &candidate.name);
    for (&attribute, &weight) in &policy.weights {
        if same_group(ego, candidate, attribute) {
            score += weight;
        }
    }
    score
}

/// The reason the mock attaches to a nomination: the highest-weighted
/// shared attribute, falling back to attribute order when no weighted
/// attribute matches.
fn reason_for(policy: &MockPolicy, ego: &CardInfo, candidate: &CardInfo) -> String {
    let mut best: Option<(f64, Attribute)> = None;
    for attribute in Attribute::ALL {
        if !same_group(ego, candidate, attribute) {
            continue;
        }
        let weight = policy.weights.get(&attribute).copied().unwrap_or(0.0);
        if best.is_none_or(|(w, _)| weight > w) {
            best = Some((weight, attribute));
        }
    }
    match best {
        Some((_, attribute)) => format!("same {}", attribute.token()),
        None => "new acquaintance".to_string(),
    }
}

/// Nominate for one ego: top `out_degree_target` candidates by score,
/// ties by lowest persona id.
fn select<'a>(
    policy: &MockPolicy,
    ego: &CardInfo,
    candidates: &'a [CardInfo],
) -> Vec<&'a CardInfo> {
    let mut scored: Vec<(f64, usize, &CardInfo)> = candidates
        .iter()
        .filter(|c| c.name != ego.name)
        .map(|c| (score(policy, ego, c), c.id.unwrap_or(usize::MAX), c))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(policy.out_degree_target)
        .map(|(_, _, c)| c)
        .collect()
}

/// Pure function from (policy, context) to response text; identical
/// inputs give byte-identical output.
pub fn mock_complete(policy: &MockPolicy, context: &PromptContext) -> String {
    let mut lines = Vec::new();
    match context.shape {
        ReplyShape::Names => {
            let ego = context.ego.as_ref().expect("names reply has an ego");
            for candidate in select(policy, ego, &context.candidates) {
                if context.reasons_on {
                    lines.push(format!(
                        "- {}: {}",
                        candidate.name,
                        reason_for(policy, ego, candidate)
                    ));
                } else {
                    lines.push(format!("- {}", candidate.name));
                }
            }
        }
        ReplyShape::EdgeList => {
            let mut sources: Vec<&CardInfo> = context.candidates.iter().collect();
            sources.sort_by_key(|c| c.id.unwrap_or(usize::MAX));
            for source in sources {
                for target in select(policy, source, &context.candidates) {
                    if context.reasons_on {
                        lines.push(format!(
                            "- {} -> {}: {}",
                            source.name,
                            target.name,
                            reason_for(policy, source, target)
                        ));
                    } else {
                        lines.push(format!("- {} -> {}", source.name, target.name));
                    }
                }
            }
        }
    }
    lines.join("\n")
}

/// The standard offline backend: homophily-weighted deterministic policy.
pub struct MockBackend {
    pub policy: MockPolicy,
}

impl MockBackend {
    pub fn new(policy: MockPolicy) -> MockBackend {
        MockBackend { policy }
    }
}

impl Backend for MockBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let context = parse_prompt_context(&request.prompt)
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(mock_complete(&self.policy, &context))
    }

    fn name(&self) -> &'static str {
        "mock"
    }
}

/// Test backend: echoes the current-network block verbatim on edge-list
/// prompts (a fixed point for iterative generation) and delegates ego
/// prompts to an inner policy.
pub struct EchoEdgesBackend {
    pub inner: MockBackend,
}

impl Backend for EchoEdgesBackend {
    fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let context = parse_prompt_context(&request.prompt)
            .map_err(|e| BackendError::Config(e.to_string()))?;
        match context.shape {
            ReplyShape::EdgeList => Ok(context
                .current_edges
                .iter()
                .map(|(src, dst)| format!("- {src} -> {dst}"))
                .collect::<Vec<_>>()
                .join("\n")),
            ReplyShape::Names => self.inner.complete(request),
        }
    }

    fn name(&self) -> &'static str {
        "echo-edges"
    }
}

/// Test backend: nominates nobody, ever (empty replies drop all edges).
pub struct DropAllBackend;

impl Backend for DropAllBackend {
    fn complete(&self, _request: &BackendRequest) -> Result<String, BackendError> {
        Ok(String::new())
    }

    fn name(&self) -> &'static str {
        "drop-all"
    }
}
