//! Experiment orchestration: the three-study condition matrix, the
//! filename convention, resumable generation runs, and report
//! aggregation.
//!
//! Layout under the output directory: `<out>/<study>/<NAME>.adj` for
//! verified networks (written atomically via temp file + rename),
//! `<out>/<study>/transcripts/<NAME>.json` for run transcripts, and
//! `<out>/<study>/analysis/*.csv` for the aggregate tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Backend;
use crate::generate::{generate, GenerationConfig, RunTranscript};
use crate::graph::{read_adj, verify_network, DirectedNetwork, GraphError};
use crate::homophily::homophily_profile;
use crate::metrics::{degree_sequence, edge_distance, ks_statistic, MetricsReport};
use crate::persona::Roster;
use crate::seed::derive_seed;
use crate::template::{Method, TemplateSet};

pub use crate::template::{Culture, Language};

/// The three controlled experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Cultural,
    Method,
    Language,
}

impl Study {
    pub const ALL: [Study; 3] = [Study::Cultural, Study::Method, Study::Language];

    pub fn token(&self) -> &'static str {
        match self {
            Study::Cultural => "cultural",
            Study::Method => "method",
            Study::Language => "language",
        }
    }
}

impl std::fmt::Display for Study {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for Study {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "cultural" => Ok(Study::Cultural),
            "method" => Ok(Study::Method),
            "language" => Ok(Study::Language),
            other => Err(StudyError::Usage(format!("unknown study `{other}`"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("{0}")]
    Usage(String),
    #[error("bad condition filename `{name}`: {reason}")]
    BadFilename { name: String, reason: String },
    #[error(transparent)]
    Template(#[from] crate::template::TemplateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Persona(#[from] crate::persona::PersonaError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no valid .adj files in {0}")]
    EmptyDirectory(String),
}

/// One experimental condition: the six-tuple identifying a generated
/// network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub study: Study,
    pub culture: Culture,
    pub language: Language,
    pub method: Method,
    pub model: String,
    pub seed: u32,
}

impl Condition {
    /// The filename token slot: culture for the cultural and method
    /// studies; language for the language study, where culture is fixed.
    pub fn condition_token(&self) -> String {
        match self.study {
            Study::Cultural | Study::Method => self.culture.token().to_uppercase(),
            Study::Language => self.language.token().to_uppercase(),
        }
    }
}

/// The paper-default model triple; any list of opaque ids works.
pub fn default_models() -> Vec<String> {
    ["gpt-4.1-nano", "gpt-4.1-mini", "gpt-4.1"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Model id as it appears in filenames: dots and underscores become
/// dashes so the four-field underscore layout stays parseable.
pub fn sanitize_model(model: &str) -> String {
    model.replace(['.', '_'], "-")
}

/// `METHOD_MODEL_CONDITION_SEED.adj`, injective over any matrix whose
/// sanitized model ids are distinct.
pub fn condition_filename(c: &Condition) -> String {
    format!(
        "{}_{}_{}_{}.adj",
        c.method.token().to_uppercase(),
        sanitize_model(&c.model),
        c.condition_token(),
        c.seed
    )
}

/// Invert [`condition_filename`]. Models are matched through the given
/// list because sanitization is lossy.
pub fn parse_filename(
    study: Study,
    name: &str,
    models: &[String],
) -> Result<Condition, StudyError> {
    let bad = |reason: &str| StudyError::BadFilename {
        name: name.to_string(),
        reason: reason.to_string(),
    };
    let stem = name
        .strip_suffix(".adj")
        .ok_or_else(|| bad("missing .adj extension"))?;
    let parts: Vec<&str> = stem.split('_').collect();
    if parts.len() != 4 {
        return Err(bad("expected METHOD_MODEL_CONDITION_SEED"));
    }
    let method: Method = parts[0]
        .to_lowercase()
        .parse()
        .map_err(|_| bad("unknown method token"))?;
    let model = models
        .iter()
        .find(|m| sanitize_model(m) == parts[1])
        .ok_or_else(|| bad("model token not in the configured model list"))?
        .clone();
    let (culture, language) = match study {
        Study::Cultural | Study::Method => {
            let culture: Culture = parts[2]
                .parse()
                .map_err(|_| bad("unknown culture token"))?;
            (culture, Language::En)
        }
        Study::Language => {
            let language: Language = parts[2]
                .to_lowercase()
                .parse()
                .map_err(|_| bad("unknown language token"))?;
            (Culture::Us, language)
        }
    };
    let seed: u32 = parts[3].parse().map_err(|_| bad("bad seed"))?;
    Ok(Condition {
        study,
        culture,
        language,
        method,
        model,
        seed,
    })
}

/// Enumerate one study's conditions with the default models and two
/// seeds per cell: 24 cultural, 72 method, 96 language.
pub fn enumerate_matrix(study: Study) -> Vec<Condition> {
    enumerate_matrix_with(study, &default_models(), 2)
}

/// Enumerate with explicit models and seeds-per-condition, ordered
/// lexicographically on (culture, language, method, model, seed).
pub fn enumerate_matrix_with(
    study: Study,
    models: &[String],
    seeds_per_condition: u32,
) -> Vec<Condition> {
    let (cultures, languages, methods): (Vec<Culture>, Vec<Language>, Vec<Method>) = match study {
        Study::Cultural => (
            Culture::ALL.to_vec(),
            vec![Language::En],
            vec![Method::Sequential],
        ),
        Study::Method => (
            Culture::ALL.to_vec(),
            vec![Language::En],
            vec![Method::Global, Method::Local, Method::Iterative],
        ),
        Study::Language => (
            vec![Culture::Us],
            Language::ALL.to_vec(),
            Method::ALL.to_vec(),
        ),
    };
    let mut out = Vec::new();
    for culture in &cultures {
        for language in &languages {
            for method in &methods {
                for model in models {
                    for seed in 0..seeds_per_condition {
                        out.push(Condition {
                            study,
                            culture: *culture,
                            language: *language,
                            method: *method,
                            model: model.clone(),
                            seed,
                        });
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        (a.culture.token(), a.language.token(), a.method.token(), &a.model, a.seed).cmp(&(
            b.culture.token(),
            b.language.token(),
            b.method.token(),
            &b.model,
            b.seed,
        ))
    });
    out
}

/// Generation overrides shared by every condition in a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyOverrides {
    pub k: usize,
    pub rounds: usize,
    pub temperature: f64,
    /// Root seed; per-condition seeds derive from it and the condition
    /// labels, so adding conditions never perturbs existing ones.
    pub seed: u64,
    pub include_reason: bool,
    pub max_retries: usize,
    pub parallelism: usize,
}

impl Default for StudyOverrides {
    fn default() -> StudyOverrides {
        let defaults = GenerationConfig::new(Method::Sequential);
        StudyOverrides {
            k: defaults.k,
            rounds: defaults.rounds,
            temperature: defaults.temperature,
            seed: 0,
            include_reason: false,
            max_retries: defaults.max_retries,
            parallelism: 1,
        }
    }
}

/// Everything a run needs: which study, where to write, which models,
/// and config overrides.
#[derive(Debug, Clone)]
pub struct StudyManifest {
    pub study: Study,
    pub out_dir: PathBuf,
    pub models: Vec<String>,
    pub seeds_per_condition: u32,
    pub overrides: StudyOverrides,
}

impl StudyManifest {
    pub fn new(study: Study, out_dir: impl Into<PathBuf>) -> StudyManifest {
        StudyManifest {
            study,
            out_dir: out_dir.into(),
            models: default_models(),
            seeds_per_condition: 2,
            overrides: StudyOverrides::default(),
        }
    }

    pub fn conditions(&self) -> Vec<Condition> {
        enumerate_matrix_with(self.study, &self.models, self.seeds_per_condition)
    }

    pub fn study_dir(&self) -> PathBuf {
        self.out_dir.join(self.study.token())
    }
}

/// Per-condition generation seed: a stable hash of the full condition
/// label under the manifest root seed.
pub fn condition_seed(root: u64, c: &Condition) -> u64 {
    derive_seed(
        root,
        &[
            "condition",
            c.study.token(),
            c.culture.token(),
            c.language.token(),
            c.method.token(),
            &c.model,
            &c.seed.to_string(),
        ],
    )
}

fn generation_config(manifest: &StudyManifest, c: &Condition) -> GenerationConfig {
    let o = &manifest.overrides;
    GenerationConfig {
        method: c.method,
        k: o.k,
        rounds: o.rounds,
        temperature: o.temperature,
        seed: condition_seed(o.seed, c),
        include_reason: o.include_reason,
        max_retries: o.max_retries,
        model: c.model.clone(),
        parallelism: 1,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub condition: Condition,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunSummary {
    pub generated: usize,
    pub skipped: usize,
    pub failed: Vec<FailureRecord>,
}

impl RunSummary {
    pub fn ok(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Transcript file payload: condition plus the generation transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub condition: Condition,
    pub transcript: RunTranscript,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StudyError + '_ {
    move |source| StudyError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write then rename, so interrupted runs never leave half-written files.
fn atomic_write(path: &Path, contents: &str) -> Result<(), StudyError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

/// Run every condition of the manifest against one backend.
///
/// Fails fast if any needed template is missing. Per-condition failures
/// are recorded and the run continues; `resume` skips conditions whose
/// output already exists and verifies. Progress notes go to stderr.
pub fn run_study(
    manifest: &StudyManifest,
    backend: &dyn Backend,
    templates: &TemplateSet,
    roster: &Roster,
    resume: bool,
) -> Result<RunSummary, StudyError> {
    let conditions = manifest.conditions();
    // Template precondition check before any generation work.
    for c in &conditions {
        templates.get(c.method, c.language, c.culture)?;
    }

    let study_dir = manifest.study_dir();
    let transcripts_dir = study_dir.join("transcripts");
    std::fs::create_dir_all(&transcripts_dir).map_err(io_err(&transcripts_dir))?;

    let mut summary = RunSummary::default();
    for condition in &conditions {
        let filename = condition_filename(condition);
        let adj_path = study_dir.join(&filename);
        if resume && adj_path.exists() {
            if let Ok(existing) = read_adj(&adj_path) {
                if verify_network(&existing, roster).passed() {
                    summary.skipped += 1;
                    continue;
                }
            }
        }

        let config = generation_config(manifest, condition);
        let result = generate(
            backend,
            roster,
            templates,
            condition.culture,
            condition.language,
            &config,
        );
        match result {
            Ok(generated) => {
                let verification = verify_network(&generated.network, roster);
                if !verification.passed() {
                    summary.failed.push(FailureRecord {
                        condition: condition.clone(),
                        message: format!(
                            "verification failed: {}",
                            verification
                                .violations
                                .iter()
                                .map(|v| v.to_string())
                                .collect::<Vec<_>>()
                                .join("; ")
                        ),
                    });
                    continue;
                }
                atomic_write(&adj_path, &crate::graph::adj_to_string(&generated.network))?;
                let transcript = TranscriptFile {
                    condition: condition.clone(),
                    transcript: generated.transcript,
                };
                let transcript_path =
                    transcripts_dir.join(filename.replace(".adj", ".json"));
                atomic_write(
                    &transcript_path,
                    &serde_json::to_string_pretty(&transcript).expect("transcript serializes"),
                )?;
                summary.generated += 1;
            }
            Err(failure) => {
                // Keep the partial transcript for the post-mortem.
                let transcript = TranscriptFile {
                    condition: condition.clone(),
                    transcript: failure.transcript.clone(),
                };
                let transcript_path = transcripts_dir
                    .join(filename.replace(".adj", ".failed.json"));
                atomic_write(
                    &transcript_path,
                    &serde_json::to_string_pretty(&transcript).expect("transcript serializes"),
                )?;
                summary.failed.push(FailureRecord {
                    condition: condition.clone(),
                    message: failure.kind.to_string(),
                });
            }
        }
    }
    Ok(summary)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// The four aggregate tables produced by [`analyze_study`].
#[derive(Debug, Clone)]
pub struct StudyAnalysis {
    pub topology_csv: String,
    pub homophily_csv: String,
    pub edge_distance_csv: String,
    pub degree_ks_csv: String,
    /// Files skipped for unparseable names, for the caller to surface.
    pub warnings: Vec<String>,
}

/// Analyze every parseable `.adj` in a study directory: topology and
/// homophily per condition, then pairwise model comparisons averaged
/// over matched conditions differing only in model.
pub fn analyze_study(
    dir: impl AsRef<Path>,
    study: Study,
    roster: &Roster,
    models: &[String],
) -> Result<StudyAnalysis, StudyError> {
    let dir = dir.as_ref();
    let mut entries: Vec<(Condition, String, DirectedNetwork)> = Vec::new();
    let mut warnings = Vec::new();
    let mut listing: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "adj"))
        .collect();
    listing.sort();
    for path in listing {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        match parse_filename(study, &name, models) {
            Ok(condition) => {
                let network = read_adj(&path)?;
                entries.push((condition, name, network));
            }
            Err(e) => warnings.push(format!("skipping {name}: {e}")),
        }
    }
    if entries.is_empty() {
        return Err(StudyError::EmptyDirectory(dir.display().to_string()));
    }

    let mut topology = String::from(
        "file,method,model,condition,seed,n,edges,density,avg_clustering,lcc_proportion,avg_path,modularity\n",
    );
    let mut homophily = String::from(
        "file,method,model,condition,seed,attribute,baseline,raw_share,ratio,defined\n",
    );
    for (condition, name, network) in &entries {
        let report = MetricsReport::compute(network);
        writeln!(
            topology,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            name,
            condition.method,
            sanitize_model(&condition.model),
            condition.condition_token(),
            condition.seed,
            report.n,
            report.edge_count,
            report.density,
            report.avg_clustering,
            report.lcc_proportion,
            fmt_opt(report.avg_path),
            fmt_opt(report.modularity),
        )
        .expect("writing to string");
        for r in homophily_profile(network, roster) {
            writeln!(
                homophily,
                "{},{},{},{},{},{},{},{},{},{}",
                name,
                condition.method,
                sanitize_model(&condition.model),
                condition.condition_token(),
                condition.seed,
                r.attribute,
                r.baseline,
                fmt_opt(r.raw_share),
                fmt_opt(r.ratio),
                r.defined(),
            )
            .expect("writing to string");
        }
    }

    // Model-pair comparisons over matched conditions (same culture,
    // language, method, seed; different model).
    type MatchKey = (String, String, String, u32);
    let mut by_key: BTreeMap<MatchKey, Vec<(String, &DirectedNetwork)>> = BTreeMap::new();
    for (condition, _, network) in &entries {
        let key = (
            condition.culture.token().to_string(),
            condition.language.token().to_string(),
            condition.method.token().to_string(),
            condition.seed,
        );
        by_key
            .entry(key)
            .or_default()
            .push((sanitize_model(&condition.model), network));
    }
    let mut distance_sums: BTreeMap<(String, String), (f64, f64, usize)> = BTreeMap::new();
    for group in by_key.values() {
        for (i, (model_a, net_a)) in group.iter().enumerate() {
            for (model_b, net_b) in group.iter().skip(i + 1) {
                if model_a == model_b {
                    continue;
                }
                let mut pair = (model_a.clone(), model_b.clone());
                if pair.0 > pair.1 {
                    std::mem::swap(&mut pair.0, &mut pair.1);
                }
                let distance = edge_distance(net_a, net_b)?;
                let ks = ks_statistic(&degree_sequence(net_a), &degree_sequence(net_b))
                    .unwrap_or(0.0);
                let slot = distance_sums.entry(pair).or_insert((0.0, 0.0, 0));
                slot.0 += distance;
                slot.1 += ks;
                slot.2 += 1;
            }
        }
    }
    let mut edge_distance_csv = String::from("model_a,model_b,mean_edge_distance,pairs\n");
    let mut degree_ks_csv = String::from("model_a,model_b,mean_degree_ks,pairs\n");
    for ((a, b), (dist, ks, count)) in &distance_sums {
        writeln!(
            edge_distance_csv,
            "{a},{b},{},{count}",
            dist / *count as f64
        )
        .expect("writing to string");
        writeln!(degree_ks_csv, "{a},{b},{},{count}", ks / *count as f64)
            .expect("writing to string");
    }

    Ok(StudyAnalysis {
        topology_csv: topology,
        homophily_csv: homophily,
        edge_distance_csv,
        degree_ks_csv,
        warnings,
    })
}

/// Write the four analysis tables under `<dir>/analysis/`.
pub fn write_analysis(dir: impl AsRef<Path>, analysis: &StudyAnalysis) -> Result<Vec<PathBuf>, StudyError> {
    let analysis_dir = dir.as_ref().join("analysis");
    std::fs::create_dir_all(&analysis_dir).map_err(io_err(&analysis_dir))?;
    let tables = [
        ("topology.csv", &analysis.topology_csv),
        ("homophily.csv", &analysis.homophily_csv),
        ("edge_distance.csv", &analysis.edge_distance_csv),
        ("degree_ks.csv", &analysis.degree_ks_csv),
    ];
    let mut written = Vec::new();
    for (name, contents) in tables {
        let path = analysis_dir.join(name);
        atomic_write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn matrix_counts_match_design() {
        assert_eq!(enumerate_matrix(Study::Cultural).len(), 24);
        assert_eq!(enumerate_matrix(Study::Method).len(), 72);
        assert_eq!(enumerate_matrix(Study::Language).len(), 96);
        let total: usize = Study::ALL.iter().map(|&s| enumerate_matrix(s).len()).sum();
        assert_eq!(total, 192);
    }

    #[test]
    fn matrix_respects_study_constraints() {
        for c in enumerate_matrix(Study::Cultural) {
            assert_eq!(c.language, Language::En);
            assert_eq!(c.method, Method::Sequential);
        }
        for c in enumerate_matrix(Study::Method) {
            assert_eq!(c.language, Language::En);
            assert_ne!(c.method, Method::Sequential);
        }
        for c in enumerate_matrix(Study::Language) {
            assert_eq!(c.culture, Culture::Us);
        }
    }

    #[test]
    fn matrix_is_duplicate_free_and_sorted() {
        for study in Study::ALL {
            let conditions = enumerate_matrix(study);
            let set: BTreeSet<String> = conditions.iter().map(condition_filename).collect();
            assert_eq!(set.len(), conditions.len(), "{study}");
            let mut again = conditions.clone();
            again.sort_by(|a, b| {
                (a.culture.token(), a.language.token(), a.method.token(), &a.model, a.seed).cmp(
                    &(b.culture.token(), b.language.token(), b.method.token(), &b.model, b.seed),
                )
            });
            assert_eq!(again, conditions, "{study}");
        }
    }

    #[test]
    fn filename_golden_example() {
        let c = Condition {
            study: Study::Cultural,
            culture: Culture::India,
            language: Language::En,
            method: Method::Sequential,
            model: "gpt-4.1-mini".to_string(),
            seed: 0,
        };
        assert_eq!(condition_filename(&c), "SEQUENTIAL_gpt-4-1-mini_INDIA_0.adj");
    }

    #[test]
    fn filenames_are_injective_and_round_trip() {
        let models = default_models();
        let mut seen = BTreeSet::new();
        for study in Study::ALL {
            for c in enumerate_matrix(study) {
                let name = condition_filename(&c);
                assert!(seen.insert((study, name.clone())), "duplicate {name}");
                let parsed = parse_filename(study, &name, &models).unwrap();
                assert_eq!(parsed, c);
            }
        }
    }

    #[test]
    fn parse_filename_rejects_garbage() {
        let models = default_models();
        assert!(parse_filename(Study::Cultural, "nope.adj", &models).is_err());
        assert!(parse_filename(Study::Cultural, "SEQUENTIAL_who_INDIA_0.adj", &models).is_err());
        assert!(
            parse_filename(Study::Cultural, "SEQUENTIAL_gpt-4-1_NOWHERE_0.adj", &models).is_err()
        );
        assert!(parse_filename(Study::Cultural, "SEQUENTIAL_gpt-4-1_INDIA_x.adj", &models).is_err());
    }

    #[test]
    fn condition_seed_is_stable_and_distinct() {
        let matrix = enumerate_matrix(Study::Language);
        let seeds: BTreeSet<u64> = matrix.iter().map(|c| condition_seed(0, c)).collect();
        assert_eq!(seeds.len(), matrix.len());
        assert_eq!(condition_seed(0, &matrix[0]), condition_seed(0, &matrix[0]));
    }
}
