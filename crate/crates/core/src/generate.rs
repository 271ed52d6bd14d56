//! The four edge-set samplers over an abstract text backend.
//!
//! Sequential and local generation factorize by source: one backend call
//! per persona, lenient per-line parsing (bad nominations are dropped and
//! tallied, a persona whose calls never parse contributes no edges).
//! Global and iterative generation sample the edge set jointly: a reply
//! is accepted whole or wholly retried, and persistent failure aborts the
//! run. Every call, response, parse tally, and retry count lands in the
//! run transcript.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Backend, BackendError, BackendRequest};
use crate::graph::{DirectedNetwork, GraphError};
use crate::parse::{parse_response, ParseMode, ParseOutcome, ParseTally, TieNomination};
use crate::persona::Roster;
use crate::seed::{derive_seed, rng_for};
use crate::template::{
    candidates_block, edges_block, ego_block, render_prompt, round_token, roster_block,
    Culture, Language, PromptTemplate, TemplateError, TemplateSet, REASONS_MARKER,
};

pub use crate::template::Method;

/// Knobs for one network generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub method: Method,
    /// Local-method neighborhood size.
    pub k: usize,
    /// Iterative-method round count. 0 returns the initialization
    /// unchanged, which is useful for factorization checks.
    pub rounds: usize,
    pub temperature: f64,
    pub seed: u64,
    pub include_reason: bool,
    /// Attempts per backend call (first try included).
    pub max_retries: usize,
    pub model: String,
    /// Concurrent backend calls for the factorizing methods.
    pub parallelism: usize,
}

impl GenerationConfig {
    pub fn new(method: Method) -> GenerationConfig {
        GenerationConfig {
            method,
            k: 12,
            rounds: 3,
            temperature: 0.8,
            seed: 0,
            include_reason: false,
            max_retries: 3,
            model: "gpt-4.1-mini".to_string(),
            parallelism: 1,
        }
    }

    pub fn validate(&self, roster_size: usize) -> Result<(), GenErrorKind> {
        if self.method == Method::Local && (self.k < 1 || self.k > roster_size - 1) {
            return Err(GenErrorKind::Config(format!(
                "neighborhood size k={} must be in [1, {}] for a {}-persona roster",
                self.k,
                roster_size - 1,
                roster_size
            )));
        }
        if self.temperature < 0.0 {
            return Err(GenErrorKind::Config(format!(
                "temperature {} must be non-negative",
                self.temperature
            )));
        }
        if self.max_retries < 1 {
            return Err(GenErrorKind::Config("max_retries must be at least 1".into()));
        }
        if self.parallelism < 1 {
            return Err(GenErrorKind::Config("parallelism must be at least 1".into()));
        }
        if self.model.is_empty() {
            return Err(GenErrorKind::Config("model id must be non-empty".into()));
        }
        Ok(())
    }
}

/// One backend call as recorded in the transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CallRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ego: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    pub attempts: usize,
    pub prompt: String,
    pub response: String,
    pub tally: ParseTally,
    pub nominations: Vec<TieNomination>,
    pub accepted: bool,
}

/// Everything that happened while generating one network.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunTranscript {
    pub backend: String,
    pub calls: Vec<CallRecord>,
    /// Iterative only: edge sets E(0)..E(T).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<Vec<Vec<(usize, usize)>>>,
}

#[derive(Debug, Clone)]
pub struct GenerationResult {
    pub network: DirectedNetwork,
    pub transcript: RunTranscript,
}

#[derive(Debug, Error)]
pub enum GenErrorKind {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("backend failed after {attempts} attempt(s): {source}")]
    BackendExhausted {
        attempts: usize,
        #[source]
        source: BackendError,
    },
    #[error("no acceptable response after {attempts} attempt(s) ({context})")]
    ParseExhausted { attempts: usize, context: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Generation failure carrying the partial transcript, and for iterative
/// runs the last valid edge set.
#[derive(Debug, Error)]
#[error("{kind}")]
pub struct GenError {
    pub kind: GenErrorKind,
    pub transcript: RunTranscript,
    pub last_network: Option<DirectedNetwork>,
}

impl GenError {
    fn bare(kind: GenErrorKind) -> Box<GenError> {
        Box::new(GenError {
            kind,
            transcript: RunTranscript::default(),
            last_network: None,
        })
    }
}

type GenResult = Result<GenerationResult, Box<GenError>>;

/// The curated neighborhood for one ego: `k` personas drawn uniformly
/// without replacement from everyone else, from a sub-seed derived from
/// `(seed, ego)` alone — reproducible, and independent across egos.
pub fn local_neighborhood(seed: u64, ego: usize, n: usize, k: usize) -> BTreeSet<usize> {
    use rand::Rng;
    let mut rng = rng_for(seed, &["local-neighborhood", &ego.to_string()]);
    let mut candidates: Vec<usize> = (0..n).filter(|&i| i != ego).collect();
    let mut out = BTreeSet::new();
    for i in 0..k.min(candidates.len()) {
        let j = rng.gen_range(i..candidates.len());
        candidates.swap(i, j);
        out.insert(candidates[i]);
    }
    out
}

fn with_reason_marker(prompt: String, include_reason: bool) -> String {
    if include_reason {
        format!("{prompt}\n{REASONS_MARKER}")
    } else {
        prompt
    }
}

/// Outcome of one logical call after retries.
enum CallResult {
    Accepted(Vec<TieNomination>),
    /// All attempts produced unacceptable responses.
    Rejected,
    /// The backend gave up in a way retries cannot fix.
    Backend(BackendError),
}

fn backoff(error: &BackendError, attempt: usize) -> Duration {
    match error {
        BackendError::RateLimited {
            retry_after: Some(d),
        } => (*d).min(Duration::from_secs(30)),
        BackendError::RateLimited { retry_after: None } => {
            Duration::from_millis(100 * attempt as u64)
        }
        _ => Duration::from_millis(50 * attempt as u64),
    }
}

/// Issue one prompt with the retry policy: transient backend errors and
/// unacceptable parses retry up to `max_retries` total attempts with the
/// identical prompt; rate-limit waits honor retry-after. `strict` mode
/// (the joint methods) additionally rejects any response with individual
/// rejections.
fn call_with_retries(
    backend: &dyn Backend,
    roster: &Roster,
    prompt: String,
    mode: &ParseMode,
    config: &GenerationConfig,
    label: &str,
    strict: bool,
    ego: Option<usize>,
    round: Option<usize>,
) -> (CallRecord, CallResult) {
    let request = BackendRequest {
        model: config.model.clone(),
        prompt: prompt.clone(),
        temperature: config.temperature,
        seed_hint: Some(derive_seed(config.seed, &["call", label])),
    };
    let mut record = CallRecord {
        ego,
        round,
        attempts: 0,
        prompt,
        response: String::new(),
        tally: ParseTally::default(),
        nominations: Vec::new(),
        accepted: false,
    };

    let mut last_outcome: Option<ParseOutcome> = None;
    for attempt in 1..=config.max_retries {
        record.attempts = attempt;
        match backend.complete(&request) {
            Ok(text) => {
                let outcome = parse_response(&text, mode, roster, config.include_reason);
                record.response = text;
                record.tally = outcome.tally;
                record.nominations = outcome.nominations.clone();
                let acceptable =
                    !outcome.soft_failure && (!strict || outcome.tally.rejected() == 0);
                if acceptable {
                    record.accepted = true;
                    return (record, CallResult::Accepted(outcome.nominations));
                }
                last_outcome = Some(outcome);
            }
            Err(error) => {
                if error.is_transient() && attempt < config.max_retries {
                    std::thread::sleep(backoff(&error, attempt));
                    continue;
                }
                record.response = format!("<error: {error}>");
                return (record, CallResult::Backend(error));
            }
        }
    }
    let _ = last_outcome;
    (record, CallResult::Rejected)
}

/// Run one backend call per ego (sequential and local share this shape),
/// optionally in parallel. Assembly is order-independent set union.
fn factorized_run(
    backend: &dyn Backend,
    roster: &Roster,
    config: &GenerationConfig,
    order: &[usize],
    per_ego: impl Fn(usize) -> (String, ParseMode) + Sync,
    label_prefix: &str,
) -> Result<(BTreeSet<(usize, usize)>, Vec<CallRecord>), Box<GenError>> {
    let run_one = |&ego: &usize| {
        let (prompt, mode) = per_ego(ego);
        call_with_retries(
            backend,
            roster,
            prompt,
            &mode,
            config,
            &format!("{label_prefix}/{ego}"),
            false,
            Some(ego),
            None,
        )
    };

    let results: Vec<(CallRecord, CallResult)> = if config.parallelism > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| GenError::bare(GenErrorKind::Config(e.to_string())))?;
        pool.install(|| order.par_iter().map(run_one).collect())
    } else {
        order.iter().map(run_one).collect()
    };

    let mut edges = BTreeSet::new();
    let mut calls: Vec<CallRecord> = Vec::with_capacity(results.len());
    let mut backend_failure: Option<(usize, BackendError)> = None;
    for (record, result) in results {
        let attempts = record.attempts;
        match result {
            CallResult::Accepted(nominations) => {
                for nom in nominations {
                    edges.insert((nom.source, nom.target));
                }
            }
            // A persona whose responses never parse contributes no edges;
            // the transcript keeps the evidence.
            CallResult::Rejected => {}
            CallResult::Backend(error) => {
                if backend_failure.is_none() {
                    backend_failure = Some((attempts, error));
                }
            }
        }
        calls.push(record);
    }
    calls.sort_by_key(|c| c.ego);

    if let Some((attempts, source)) = backend_failure {
        return Err(Box::new(GenError {
            kind: GenErrorKind::BackendExhausted { attempts, source },
            transcript: RunTranscript {
                backend: backend.name().to_string(),
                calls,
                rounds: None,
            },
            last_network: None,
        }));
    }
    Ok((edges, calls))
}

fn sequential_prompt(
    roster: &Roster,
    template: &PromptTemplate,
    config: &GenerationConfig,
    ego: usize,
) -> (String, ParseMode) {
    let bindings = BTreeMap::from([
        ("ego", ego_block(roster.get(ego).expect("ego in roster"))),
        ("roster", roster_block(roster, Some(ego))),
    ]);
    let prompt = render_prompt(template, &bindings).expect("validated template renders");
    let allowed: BTreeSet<usize> = (0..roster.len()).filter(|&i| i != ego).collect();
    (
        with_reason_marker(prompt, config.include_reason),
        ParseMode::Ego { ego, allowed },
    )
}

/// Sequential generation: one independent call per ego over the rest of
/// the roster; the network is the union of parsed nominations.
pub fn generate_sequential(
    backend: &dyn Backend,
    roster: &Roster,
    templates: &TemplateSet,
    culture: Culture,
    language: Language,
    config: &GenerationConfig,
) -> GenResult {
    let order: Vec<usize> = (0..roster.len()).collect();
    generate_sequential_with_order(backend, roster, templates, culture, language, config, &order)
}

/// Sequential generation with an explicit ego processing order. The
/// result is order-invariant under any deterministic backend; this
/// entry point exists so that factorization property is testable.
pub fn generate_sequential_with_order(
    backend: &dyn Backend,
    roster: &Roster,
    templates: &TemplateSet,
    culture: Culture,
    language: Language,
    config: &GenerationConfig,
    order: &[usize],
) -> GenResult {
    config.validate(roster.len()).map_err(GenError::bare)?;
    let template = templates
        .get(Method::Sequential, language, culture)
        .map_err(|e| GenError::bare(e.into()))?;
    let (edges, calls) = factorized_run(
        backend,
        roster,
        config,
        order,
        |ego| sequential_prompt(roster, &template, config, ego),
        "seq",
    )?;
    let network = DirectedNetwork::new(roster.len(), edges)
        .map_err(|e| GenError::bare(e.into()))?;
    Ok(GenerationResult {
        network,
        transcript: RunTranscript {
            backend: backend.name().to_string(),
            calls,
            rounds: None,
        },
    })
}

/// Local generation: each ego sees only its seeded k-candidate
/// neighborhood; nominations outside the neighborhood are rejected at
/// parse time.
pub fn generate_local(
    backend: &dyn Backend,
    roster: &Roster,
    templates: &TemplateSet,
    culture: Culture,
    language: Language,
    config: &GenerationConfig,
) -> GenResult {
    config.validate(roster.len()).map_err(GenError::bare)?;
    let template = templates
        .get(Method::Local, language, culture)
        .map_err(|e| GenError::bare(e.into()))?;
    let order: Vec<usize> = (0..roster.len()).collect();
    let (edges, calls) = factorized_run(
        backend,
        roster,
        config,
        &order,
        |ego| {
            let neighborhood = local_neighborhood(config.seed, ego, roster.len(), config.k);
            let bindings = BTreeMap::from([
                ("ego", ego_block(roster.get(ego).expect("ego in roster"))),
                ("neighborhood", candidates_block(roster, &neighborhood)),
            ]);
            let prompt =
                render_prompt(&template, &bindings).expect("validated template renders");
            (
                with_reason_marker(prompt, config.include_reason),
                ParseMode::Ego {
                    ego,
                    allowed: neighborhood,
                },
            )
        },
        "loc",
    )?;
    let network = DirectedNetwork::new(roster.len(), edges)
        .map_err(|e| GenError::bare(e.into()))?;
    Ok(GenerationResult {
        network,
        transcript: RunTranscript {
            backend: backend.name().to_string(),
            calls,
            rounds: None,
        },
    })
}

/// Global generation: one call carrying the whole roster, parsed as a
/// full edge list. The joint sample is accepted whole or wholly retried;
/// there is no per-source fallback and no partial network on failure.
pub fn generate_global(
    backend: &dyn Backend,
    roster: &Roster,
    templates: &TemplateSet,
    culture: Culture,
    language: Language,
    config: &GenerationConfig,
) -> GenResult {
    config.validate(roster.len()).map_err(GenError::bare)?;
    let template = templates
        .get(Method::Global, language, culture)
        .map_err(|e| GenError::bare(e.into()))?;
    let bindings = BTreeMap::from([("roster", roster_block(roster, None))]);
    let prompt = render_prompt(&template, &bindings).expect("validated template renders");
    let (record, result) = call_with_retries(
        backend,
        roster,
        with_reason_marker(prompt, config.include_reason),
        &ParseMode::EdgeList,
        config,
        "glob",
        true,
        None,
        None,
    );
    let attempts = record.attempts;
    let transcript = RunTranscript {
        backend: backend.name().to_string(),
        calls: vec![record],
        rounds: None,
    };
    match result {
        CallResult::Accepted(nominations) => {
            let network = DirectedNetwork::new(
                roster.len(),
                nominations.iter().map(|n| (n.source, n.target)),
            )
            .map_err(|e| GenError::bare(e.into()))?;
            Ok(GenerationResult { network, transcript })
        }
        CallResult::Rejected => Err(Box::new(GenError {
            kind: GenErrorKind::ParseExhausted {
                attempts,
                context: "global edge list".to_string(),
            },
            transcript,
            last_network: None,
        })),
        CallResult::Backend(source) => Err(Box::new(GenError {
            kind: GenErrorKind::BackendExhausted { attempts, source },
            transcript,
            last_network: None,
        })),
    }
}

/// Iterative generation: a Markov chain over edge sets. E(0) comes from
/// sequential generation; each round shows the full roster and the
/// current edge list and parses the reply as the complete replacement
/// edge set. Failure surfaces the last valid edge set.
pub fn generate_iterative(
    backend: &dyn Backend,
    roster: &Roster,
    templates: &TemplateSet,
    culture: Culture,
    language: Language,
    config: &GenerationConfig,
) -> GenResult {
    config.validate(roster.len()).map_err(GenError::bare)?;
    let template = templates
        .get(Method::Iterative, language, culture)
        .map_err(|e| GenError::bare(e.into()))?;

    let initial = generate_sequential(backend, roster, templates, culture, language, config)?;
    let mut calls = initial.transcript.calls;
    let mut rounds: Vec<Vec<(usize, usize)>> = vec![initial.network.edges().collect()];
    let mut current = initial.network;

    for round in 1..=config.rounds {
        let bindings = BTreeMap::from([
            ("roster", roster_block(roster, None)),
            ("current_edges", edges_block(roster, &current)),
            ("round", round_token(round, config.rounds)),
        ]);
        let prompt = render_prompt(&template, &bindings).expect("validated template renders");
        let (record, result) = call_with_retries(
            backend,
            roster,
            with_reason_marker(prompt, config.include_reason),
            &ParseMode::EdgeList,
            config,
            &format!("iter/{round}"),
            true,
            None,
            Some(round),
        );
        let attempts = record.attempts;
        calls.push(record);
        match result {
            CallResult::Accepted(nominations) => {
                let next = DirectedNetwork::new(
                    roster.len(),
                    nominations.iter().map(|n| (n.source, n.target)),
                )
                .map_err(|e| GenError::bare(e.into()))?;
                rounds.push(next.edges().collect());
                current = next;
            }
            CallResult::Rejected => {
                return Err(Box::new(GenError {
                    kind: GenErrorKind::ParseExhausted {
                        attempts,
                        context: format!("iterative round {round}"),
                    },
                    transcript: RunTranscript {
                        backend: backend.name().to_string(),
                        calls,
                        rounds: Some(rounds),
                    },
                    last_network: Some(current),
                }));
            }
            CallResult::Backend(source) => {
                return Err(Box::new(GenError {
                    kind: GenErrorKind::BackendExhausted { attempts, source },
                    transcript: RunTranscript {
                        backend: backend.name().to_string(),
                        calls,
                        rounds: Some(rounds),
                    },
                    last_network: Some(current),
                }));
            }
        }
    }

    Ok(GenerationResult {
        network: current,
        transcript: RunTranscript {
            backend: backend.name().to_string(),
            calls,
            rounds: Some(rounds),
        },
    })
}

/// Dispatch on the configured method.
pub fn generate(
    backend: &dyn Backend,
    roster: &Roster,
    templates: &TemplateSet,
    culture: Culture,
    language: Language,
    config: &GenerationConfig,
) -> GenResult {
    match config.method {
        Method::Sequential => {
            generate_sequential(backend, roster, templates, culture, language, config)
        }
        Method::Global => generate_global(backend, roster, templates, culture, language, config),
        Method::Local => generate_local(backend, roster, templates, culture, language, config),
        Method::Iterative => {
            generate_iterative(backend, roster, templates, culture, language, config)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::verify_network;
    use crate::homophily::homophily_profile;
    use crate::metrics::avg_clustering;
    use crate::mock::{
        parse_prompt_context, DropAllBackend, EchoEdgesBackend, MockBackend, MockPolicy,
        ReplyShape,
    };
    use crate::persona::Attribute;

    fn setup() -> (Roster, TemplateSet) {
        (Roster::canonical(), TemplateSet::builtin())
    }

    fn config(method: Method) -> GenerationConfig {
        let mut c = GenerationConfig::new(method);
        c.seed = 1;
        c.model = "mock".to_string();
        c
    }

    #[test]
    fn sequential_zero_propensity_gives_empty_network() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::uniform(0));
        let result = generate_sequential(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Sequential),
        )
        .unwrap();
        assert_eq!(result.network.edge_count(), 0);
        assert_eq!(result.transcript.calls.len(), 50);
    }

    #[test]
    fn sequential_nominate_everyone_gives_complete_graph() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::uniform(49));
        let result = generate_sequential(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Sequential),
        )
        .unwrap();
        assert_eq!(result.network, DirectedNetwork::complete(50));
    }

    #[test]
    fn sequential_is_order_invariant() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 6, 7));
        let cfg = config(Method::Sequential);
        let forward: Vec<usize> = (0..50).collect();
        let reverse: Vec<usize> = (0..50).rev().collect();
        let mut shuffled: Vec<usize> = (0..50).collect();
        shuffled.swap(3, 41);
        shuffled.swap(0, 17);
        let a = generate_sequential_with_order(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg, &forward,
        )
        .unwrap();
        for order in [&reverse, &shuffled] {
            let b = generate_sequential_with_order(
                &backend, &roster, &templates, Culture::Us, Language::En, &cfg, order,
            )
            .unwrap();
            assert_eq!(a.network, b.network);
        }
    }

    #[test]
    fn sequential_politics_weight_dominates_profile() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 6, 1));
        let result = generate_sequential(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Sequential),
        )
        .unwrap();
        let profile = homophily_profile(&result.network, &roster);
        let politics = profile
            .iter()
            .find(|r| r.attribute == Attribute::Politics)
            .unwrap()
            .ratio
            .unwrap();
        for report in &profile {
            if report.attribute != Attribute::Politics {
                assert!(
                    politics > report.ratio.unwrap(),
                    "politics {politics} vs {} {}",
                    report.attribute,
                    report.ratio.unwrap()
                );
            }
        }
    }

    #[test]
    fn local_edges_stay_inside_neighborhoods() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 5, 3));
        let cfg = config(Method::Local);
        let result = generate_local(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        for (i, j) in result.network.edges() {
            let neighborhood = local_neighborhood(cfg.seed, i, 50, cfg.k);
            assert!(neighborhood.contains(&j), "({i}, {j}) outside ν({i})");
        }
    }

    #[test]
    fn local_nominate_everyone_gives_out_degree_k() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::uniform(50));
        let mut cfg = config(Method::Local);
        cfg.k = 12;
        let result = generate_local(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        let out = result.network.out_adjacency();
        assert!(out.iter().all(|targets| targets.len() == 12));
    }

    #[test]
    fn local_with_full_k_presents_whole_roster() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 6, 7));
        let mut cfg = config(Method::Local);
        cfg.k = 49;
        for ego in 0..50 {
            let expected: BTreeSet<usize> = (0..50).filter(|&i| i != ego).collect();
            assert_eq!(local_neighborhood(cfg.seed, ego, 50, 49), expected);
        }
        // With every candidate set equal to the full roster, local and
        // sequential coincide under the same deterministic backend.
        let local = generate_local(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        let sequential = generate_sequential(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Sequential),
        )
        .unwrap();
        assert_eq!(local.network, sequential.network);
    }

    #[test]
    fn neighborhoods_are_reproducible_and_seed_sensitive() {
        let a = local_neighborhood(5, 3, 50, 12);
        let b = local_neighborhood(5, 3, 50, 12);
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert!(!a.contains(&3));
        let c = local_neighborhood(6, 3, 50, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn global_mock_density_in_reported_band() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::emulation_for(Method::Global, 2));
        let result = generate_global(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Global),
        )
        .unwrap();
        let density = crate::metrics::density(&result.network);
        assert!((0.03..=0.09).contains(&density), "density {density}");
    }

    #[test]
    fn iterative_identity_mock_is_fixed_point() {
        let (roster, templates) = setup();
        let backend = EchoEdgesBackend {
            inner: MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 6, 5)),
        };
        let mut cfg = config(Method::Iterative);
        cfg.rounds = 3;
        let result = generate_iterative(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        let rounds = result.transcript.rounds.as_ref().unwrap();
        assert_eq!(rounds.len(), 4);
        assert!(rounds[0].len() > 0, "E(0) should be non-trivial");
        for t in 1..rounds.len() {
            assert_eq!(rounds[t], rounds[0], "round {t} diverged");
        }
        assert_eq!(
            result.network.edges().collect::<Vec<_>>(),
            rounds[0].clone()
        );
    }

    #[test]
    fn iterative_zero_rounds_equals_sequential() {
        let (roster, templates) = setup();
        let make_backend = || MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 6, 5));
        let mut cfg = config(Method::Iterative);
        cfg.rounds = 0;
        let iterative = generate_iterative(
            &make_backend(), &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        let sequential = generate_sequential(
            &make_backend(),
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &cfg,
        )
        .unwrap();
        assert_eq!(iterative.network, sequential.network);
        assert_eq!(
            crate::graph::adj_to_string(&iterative.network),
            crate::graph::adj_to_string(&sequential.network)
        );
    }

    #[test]
    fn iterative_edge_dropping_mock_empties_after_round_one() {
        let (roster, templates) = setup();
        // Ego prompts also yield empty replies, so E(0) is empty too; use
        // rounds signal to confirm the drop happened at round boundaries.
        let backend = DropAllBackend;
        let mut cfg = config(Method::Iterative);
        cfg.rounds = 2;
        let result = generate_iterative(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        assert_eq!(result.network.edge_count(), 0);
    }

    /// Closes open two-paths: adds (i, k) when (i, j) and (j, k) exist.
    struct TriadicBackend {
        inner: MockBackend,
    }

    impl Backend for TriadicBackend {
        fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
            let context = parse_prompt_context(&request.prompt)
                .map_err(|e| BackendError::Config(e.to_string()))?;
            if context.shape == ReplyShape::Names {
                return self.inner.complete(request);
            }
            let mut edges: BTreeSet<(String, String)> =
                context.current_edges.iter().cloned().collect();
            let snapshot: Vec<(String, String)> = edges.iter().cloned().collect();
            for (i, j) in &snapshot {
                for (j2, k) in &snapshot {
                    if j == j2 && i != k {
                        edges.insert((i.clone(), k.clone()));
                    }
                }
            }
            Ok(edges
                .iter()
                .map(|(a, b)| format!("- {a} -> {b}"))
                .collect::<Vec<_>>()
                .join("\n"))
        }

        fn name(&self) -> &'static str {
            "triadic"
        }
    }

    #[test]
    fn iterative_triadic_mock_never_decreases_clustering() {
        let (roster, templates) = setup();
        let backend = TriadicBackend {
            inner: MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 4, 11)),
        };
        let mut cfg = config(Method::Iterative);
        cfg.rounds = 3;
        let result = generate_iterative(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap();
        let rounds = result.transcript.rounds.unwrap();
        let clustering: Vec<f64> = rounds
            .iter()
            .map(|edges| {
                let g = DirectedNetwork::new(50, edges.iter().copied()).unwrap();
                avg_clustering(&g)
            })
            .collect();
        for t in 1..clustering.len() {
            assert!(
                clustering[t] >= clustering[t - 1] - 1e-12,
                "clustering fell {} -> {} at round {t}",
                clustering[t - 1],
                clustering[t]
            );
        }
    }

    #[test]
    fn every_generated_network_verifies() {
        let (roster, templates) = setup();
        for method in Method::ALL {
            let backend = MockBackend::new(MockPolicy::emulation_for(method, 13));
            let mut cfg = config(method);
            cfg.rounds = 2;
            let result = generate(
                &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
            )
            .unwrap();
            assert!(
                verify_network(&result.network, &roster).passed(),
                "{method}"
            );
        }
    }

    #[test]
    fn invalid_k_is_config_error() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::uniform(3));
        let mut cfg = config(Method::Local);
        cfg.k = 60;
        let err = generate_local(
            &backend, &roster, &templates, Culture::Us, Language::En, &cfg,
        )
        .unwrap_err();
        assert!(matches!(err.kind, GenErrorKind::Config(_)));
    }

    #[test]
    fn parallel_generation_matches_serial() {
        let (roster, templates) = setup();
        let backend = MockBackend::new(MockPolicy::weighted(Attribute::Politics, 3.0, 6, 7));
        let mut serial_cfg = config(Method::Sequential);
        serial_cfg.parallelism = 1;
        let mut parallel_cfg = config(Method::Sequential);
        parallel_cfg.parallelism = 4;
        let a = generate_sequential(
            &backend, &roster, &templates, Culture::Us, Language::En, &serial_cfg,
        )
        .unwrap();
        let b = generate_sequential(
            &backend, &roster, &templates, Culture::Us, Language::En, &parallel_cfg,
        )
        .unwrap();
        assert_eq!(a.network, b.network);
    }

    /// Always replies with prose naming nobody: a soft failure every time.
    struct NonsenseBackend;

    impl Backend for NonsenseBackend {
        fn complete(&self, _request: &BackendRequest) -> Result<String, BackendError> {
            Ok("I would rather not say.".to_string())
        }

        fn name(&self) -> &'static str {
            "nonsense"
        }
    }

    #[test]
    fn sequential_soft_failures_yield_empty_contributions() {
        let (roster, templates) = setup();
        let backend = NonsenseBackend;
        let result = generate_sequential(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Sequential),
        )
        .unwrap();
        assert_eq!(result.network.edge_count(), 0);
        assert!(result
            .transcript
            .calls
            .iter()
            .all(|c| c.attempts == 3 && !c.accepted));
    }

    #[test]
    fn global_soft_failure_is_hard_error() {
        let (roster, templates) = setup();
        let backend = NonsenseBackend;
        let err = generate_global(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Global),
        )
        .unwrap_err();
        assert!(matches!(err.kind, GenErrorKind::ParseExhausted { attempts: 3, .. }));
        assert!(err.last_network.is_none());
        assert_eq!(err.transcript.calls.len(), 1);
    }

    /// Emits one edge to an unknown persona alongside valid ones.
    struct UnknownNameBackend;

    impl Backend for UnknownNameBackend {
        fn complete(&self, request: &BackendRequest) -> Result<String, BackendError> {
            let context = parse_prompt_context(&request.prompt)
                .map_err(|e| BackendError::Config(e.to_string()))?;
            let a = &context.candidates[0].name;
            let b = &context.candidates[1].name;
            Ok(format!("- {a} -> {b}\n- {a} -> Zorp Glorbax"))
        }

        fn name(&self) -> &'static str {
            "unknown-name"
        }
    }

    #[test]
    fn global_unknown_persona_retries_then_errors() {
        let (roster, templates) = setup();
        let backend = UnknownNameBackend;
        let err = generate_global(
            &backend,
            &roster,
            &templates,
            Culture::Us,
            Language::En,
            &config(Method::Global),
        )
        .unwrap_err();
        assert!(matches!(err.kind, GenErrorKind::ParseExhausted { attempts: 3, .. }));
        assert_eq!(err.transcript.calls[0].tally.unknown_names, 1);
    }
}
