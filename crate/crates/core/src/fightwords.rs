//! Fighting-words comparison of two reason-text corpora.
//!
//! Fits a Dirichlet–multinomial model with an informative prior
//! proportional to pooled term frequencies and reports a z-score per
//! n-gram: positive z associates the term with corpus A, negative with
//! corpus B. Tokenization is unicode-lowercased, punctuation-stripped,
//! whitespace-split (a documented limitation for unsegmented scripts),
//! with unigrams and bigrams by default.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::study::{Condition, Study, TranscriptFile};
use crate::template::{Culture, Language, Method};

#[derive(Debug, Error)]
pub enum FightWordsError {
    #[error("vocabulary needs at least 2 terms, got {0}")]
    VocabularyTooSmall(usize),
    #[error("alpha0 must be positive, got {0}")]
    BadPrior(f64),
    #[error("no reasons matched the filter under {0}")]
    EmptyCorpus(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus has no non-empty documents")]
    NoDocuments,
}

/// Tokenizer settings: lowercase, strip punctuation, emit n-grams of
/// order 1..=max_ngram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub max_ngram: usize,
}

impl Default for TokenizerConfig {
    fn default() -> TokenizerConfig {
        TokenizerConfig {
            lowercase: true,
            max_ngram: 2,
        }
    }
}

/// A bag of documents plus its tokenizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<String>,
    pub config: TokenizerConfig,
}

impl Corpus {
    pub fn new(documents: Vec<String>) -> Corpus {
        Corpus {
            documents,
            config: TokenizerConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), FightWordsError> {
        if self.documents.iter().all(|d| d.trim().is_empty()) {
            return Err(FightWordsError::NoDocuments);
        }
        Ok(())
    }

    /// Term counts over all documents. Document order cannot matter:
    /// counting is commutative.
    pub fn counts(&self) -> BTreeMap<String, u64> {
        let mut counts = BTreeMap::new();
        for doc in &self.documents {
            let words = words(doc, self.config.lowercase);
            for order in 1..=self.config.max_ngram {
                if words.len() < order {
                    continue;
                }
                for window in words.windows(order) {
                    *counts.entry(window.join(" ")).or_insert(0) += 1;
                }
            }
        }
        counts
    }
}

fn words(text: &str, lowercase: bool) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    cleaned
        .split_whitespace()
        .map(|w| {
            if lowercase {
                w.to_lowercase()
            } else {
                w.to_string()
            }
        })
        .collect()
}

/// Per-term association result.
#[derive(Debug, Clone, PartialEq)]
pub struct FightingWordsResult {
    pub term: String,
    pub count_a: u64,
    pub count_b: u64,
    /// Log-odds-ratio with the informative Dirichlet prior.
    pub delta: f64,
    pub variance: f64,
    /// `delta / sqrt(variance)`; positive associates with corpus A.
    pub z: f64,
}

/// Default prior mass: 1% of the pooled token count.
pub fn default_alpha0(a: &Corpus, b: &Corpus) -> f64 {
    let total: u64 = a.counts().values().sum::<u64>() + b.counts().values().sum::<u64>();
    0.01 * total as f64
}

/// Dirichlet–multinomial fighting words. Results are sorted by |z|
/// descending (ties by term) over the union vocabulary.
pub fn fighting_words(
    a: &Corpus,
    b: &Corpus,
    alpha0: f64,
) -> Result<Vec<FightingWordsResult>, FightWordsError> {
    if alpha0 <= 0.0 {
        return Err(FightWordsError::BadPrior(alpha0));
    }
    a.validate()?;
    b.validate()?;
    let counts_a = a.counts();
    let counts_b = b.counts();
    let mut vocabulary: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for (term, &c) in &counts_a {
        vocabulary.entry(term.clone()).or_insert((0, 0)).0 = c;
    }
    for (term, &c) in &counts_b {
        vocabulary.entry(term.clone()).or_insert((0, 0)).1 = c;
    }
    if vocabulary.len() < 2 {
        return Err(FightWordsError::VocabularyTooSmall(vocabulary.len()));
    }

    let n_a: u64 = counts_a.values().sum();
    let n_b: u64 = counts_b.values().sum();
    let pooled_total = (n_a + n_b) as f64;

    let mut results: Vec<FightingWordsResult> = vocabulary
        .into_iter()
        .map(|(term, (y_a, y_b))| {
            let alpha_w = alpha0 * ((y_a + y_b) as f64) / pooled_total;
            let odds = |y: u64, n: u64| {
                let y = y as f64;
                let n = n as f64;
                ((y + alpha_w) / (n + alpha0 - y - alpha_w)).ln()
            };
            let delta = odds(y_a, n_a) - odds(y_b, n_b);
            let variance = 1.0 / (y_a as f64 + alpha_w) + 1.0 / (y_b as f64 + alpha_w);
            FightingWordsResult {
                term,
                count_a: y_a,
                count_b: y_b,
                delta,
                variance,
                z: delta / variance.sqrt(),
            }
        })
        .collect();
    results.sort_by(|x, y| {
        y.z.abs()
            .total_cmp(&x.z.abs())
            .then_with(|| x.term.cmp(&y.term))
    });
    Ok(results)
}

/// CSV export: term, counts, z, sorted by |z|.
pub fn fightwords_csv(results: &[FightingWordsResult]) -> String {
    let mut out = String::from("term,count_a,count_b,z\n");
    for r in results {
        out.push_str(&format!("{},{},{},{}\n", r.term, r.count_a, r.count_b, r.z));
    }
    out
}

/// Predicate over conditions, usable from the command line as
/// `field=value` pairs joined by commas, e.g. `method=global,language=hi`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConditionFilter {
    pub study: Option<Study>,
    pub method: Option<Method>,
    pub culture: Option<Culture>,
    pub language: Option<Language>,
    pub model: Option<String>,
    pub seed: Option<u32>,
}

impl ConditionFilter {
    pub fn matches(&self, c: &Condition) -> bool {
        self.study.is_none_or(|s| s == c.study)
            && self.method.is_none_or(|m| m == c.method)
            && self.culture.is_none_or(|cu| cu == c.culture)
            && self.language.is_none_or(|l| l == c.language)
            && self
                .model
                .as_ref()
                .is_none_or(|m| m == &c.model || crate::study::sanitize_model(m) == crate::study::sanitize_model(&c.model))
            && self.seed.is_none_or(|s| s == c.seed)
    }
}

impl std::str::FromStr for ConditionFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut filter = ConditionFilter::default();
        if s.trim().is_empty() {
            return Ok(filter);
        }
        for clause in s.split(',') {
            let (key, value) = clause
                .split_once('=')
                .ok_or_else(|| format!("bad filter clause `{clause}` (want field=value)"))?;
            match key.trim() {
                "study" => filter.study = Some(value.trim().parse().map_err(|e| format!("{e}"))?),
                "method" => filter.method = Some(value.trim().parse().map_err(|e| format!("{e}"))?),
                "culture" => {
                    filter.culture = Some(value.trim().parse().map_err(|e| format!("{e}"))?)
                }
                "language" => {
                    filter.language = Some(value.trim().parse().map_err(|e| format!("{e}"))?)
                }
                "model" => filter.model = Some(value.trim().to_string()),
                "seed" => {
                    filter.seed =
                        Some(value.trim().parse().map_err(|_| "bad seed".to_string())?)
                }
                other => return Err(format!("unknown filter field `{other}`")),
            }
        }
        Ok(filter)
    }
}

/// Collect nomination reasons from every transcript under `dir` (searched
/// recursively) whose condition matches the filter.
pub fn collect_reasons(
    dir: impl AsRef<Path>,
    filter: &ConditionFilter,
) -> Result<Corpus, FightWordsError> {
    let dir = dir.as_ref();
    let mut documents = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        let entries = std::fs::read_dir(&current).map_err(|source| FightWordsError::Io {
            path: current.display().to_string(),
            source,
        })?;
        let mut paths: Vec<_> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        for path in paths {
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            if path.extension().is_none_or(|e| e != "json") {
                continue;
            }
            let Ok(text) = std::fs::read_to_string(&path) else {
                continue;
            };
            let Ok(file) = serde_json::from_str::<TranscriptFile>(&text) else {
                continue;
            };
            if !filter.matches(&file.condition) {
                continue;
            }
            for call in &file.transcript.calls {
                for nomination in &call.nominations {
                    if let Some(reason) = &nomination.reason {
                        documents.push(reason.clone());
                    }
                }
            }
        }
    }
    if documents.is_empty() {
        return Err(FightWordsError::EmptyCorpus(dir.display().to_string()));
    }
    Ok(Corpus::new(documents))
}
