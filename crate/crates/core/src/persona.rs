//! Personas, rosters, demographic marginals, and attribute partitions.
//!
//! A roster is the fixed population every generated network shares. The
//! canonical 50-persona roster ships as a checked-in data file so all
//! experimental conditions analyze the same population; new rosters can
//! be sampled from demographic marginals for testing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::rng_for;

/// Age bracket edges used everywhere age is treated as categorical.
/// One source of truth so homophily reports stay comparable across studies.
pub const AGE_BRACKETS: [(u32, u32); 4] = [(18, 29), (30, 44), (45, 64), (65, 99)];

/// Label for the bracket containing `age`, e.g. `"30-44"` or `"65+"`.
pub fn age_bracket_label(age: u32) -> String {
    for (i, (lo, hi)) in AGE_BRACKETS.iter().enumerate() {
        if age >= *lo && age <= *hi {
            return if i == AGE_BRACKETS.len() - 1 {
                format!("{lo}+")
            } else {
                format!("{lo}-{hi}")
            };
        }
    }
    // Callers validate age into [18, 99]; out-of-range only via unchecked paths.
    format!("{age}")
}

/// The six demographic dimensions homophily is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attribute {
    Gender,
    AgeBracket,
    Race,
    Religion,
    Politics,
    Interests,
}

impl Attribute {
    /// Profile order used by every per-attribute report.
    pub const ALL: [Attribute; 6] = [
        Attribute::Gender,
        Attribute::AgeBracket,
        Attribute::Race,
        Attribute::Religion,
        Attribute::Politics,
        Attribute::Interests,
    ];

    /// The five categorical dimensions that admit a partition (age bucketed).
    pub const CATEGORICAL: [Attribute; 5] = [
        Attribute::Gender,
        Attribute::AgeBracket,
        Attribute::Race,
        Attribute::Religion,
        Attribute::Politics,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Attribute::Gender => "gender",
            Attribute::AgeBracket => "age-bracket",
            Attribute::Race => "race",
            Attribute::Religion => "religion",
            Attribute::Politics => "politics",
            Attribute::Interests => "interests",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Attribute {
    type Err = PersonaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gender" => Ok(Attribute::Gender),
            "age" | "age-bracket" | "age_bracket" => Ok(Attribute::AgeBracket),
            "race" => Ok(Attribute::Race),
            "religion" => Ok(Attribute::Religion),
            "politics" => Ok(Attribute::Politics),
            "interests" => Ok(Attribute::Interests),
            other => Err(PersonaError::UnknownAttribute(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum PersonaError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("attribute `{0}` is not categorical; it cannot partition a roster")]
    NotPartitionable(Attribute),
    #[error("roster of {requested} personas exceeds the name pool ({available} names)")]
    NamePoolExhausted { requested: usize, available: usize },
    #[error("roster needs at least 2 personas, got {0}")]
    TooSmall(usize),
    #[error("invalid marginals: {0}")]
    InvalidMarginals(String),
    #[error("invalid roster: {0}")]
    InvalidRoster(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// A synthetic individual: six demographic attributes plus a display name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Persona {
    pub id: usize,
    pub name: String,
    pub gender: String,
    pub age: u32,
    pub race: String,
    pub religion: String,
    pub politics: String,
    pub interests: BTreeSet<String>,
}

impl Persona {
    /// Categorical value of `attribute` for this persona (age bucketed).
    /// `None` for interests, which is a multi-set rather than a category.
    pub fn category(&self, attribute: Attribute) -> Option<String> {
        match attribute {
            Attribute::Gender => Some(self.gender.clone()),
            Attribute::AgeBracket => Some(age_bracket_label(self.age)),
            Attribute::Race => Some(self.race.clone()),
            Attribute::Religion => Some(self.religion.clone()),
            Attribute::Politics => Some(self.politics.clone()),
            Attribute::Interests => None,
        }
    }

    /// Whether two personas count as "same group" on `attribute`.
    /// Interests match on overlap of at least one tag.
    pub fn same_group(&self, other: &Persona, attribute: Attribute) -> bool {
        match attribute {
            Attribute::Interests => self.interests.intersection(&other.interests).next().is_some(),
            cat => self.category(cat) == other.category(cat),
        }
    }
}

/// Where a roster came from: marginals source plus sampling seed, and an
/// optional free-text note (the canonical file uses it to flag which counts
/// are curated and which are invented).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// An ordered, immutable population of personas with ids `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Roster {
    pub provenance: Provenance,
    pub personas: Vec<Persona>,
}

const CANONICAL_ROSTER_JSON: &str = include_str!("../data/canonical_roster.json");
const US_MARGINALS_JSON: &str = include_str!("../data/us_marginals.json");
const NAME_POOL: &str = include_str!("../data/name_pool.txt");

impl Roster {
    pub fn new(provenance: Provenance, personas: Vec<Persona>) -> Result<Self, PersonaError> {
        let roster = Roster {
            provenance,
            personas,
        };
        roster.validate()?;
        Ok(roster)
    }

    /// The fixed 50-persona roster shared by every experimental condition.
    pub fn canonical() -> Roster {
        let roster: Roster =
            serde_json::from_str(CANONICAL_ROSTER_JSON).expect("embedded roster parses");
        roster.validate().expect("embedded roster is valid");
        roster
    }

    /// The fixed display-name pool (200 names). Names are display-only and
    /// never enter any metric.
    pub fn name_pool() -> Vec<&'static str> {
        NAME_POOL
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.personas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.personas.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Persona> {
        self.personas.get(id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Persona> {
        self.personas.iter()
    }

    pub fn validate(&self) -> Result<(), PersonaError> {
        if self.personas.len() < 2 {
            return Err(PersonaError::TooSmall(self.personas.len()));
        }
        let mut names = BTreeSet::new();
        for (i, p) in self.personas.iter().enumerate() {
            if p.id != i {
                return Err(PersonaError::InvalidRoster(format!(
                    "persona at position {i} has id {} (ids must be exactly 0..{})",
                    p.id,
                    self.personas.len()
                )));
            }
            if p.interests.is_empty() {
                return Err(PersonaError::InvalidRoster(format!(
                    "persona {} (`{}`) has no interests",
                    p.id, p.name
                )));
            }
            if p.age < 18 || p.age > 99 {
                return Err(PersonaError::InvalidRoster(format!(
                    "persona {} (`{}`) has age {} outside [18, 99]",
                    p.id, p.name, p.age
                )));
            }
            if !names.insert(p.name.clone()) {
                return Err(PersonaError::InvalidRoster(format!(
                    "duplicate persona name `{}`",
                    p.name
                )));
            }
        }
        Ok(())
    }

    /// Find a persona by display name, case-insensitive and
    /// whitespace-normalized.
    pub fn by_name(&self, name: &str) -> Option<&Persona> {
        let needle = normalize_name(name);
        self.personas.iter().find(|p| normalize_name(&p.name) == needle)
    }
}

/// Lowercased, single-spaced form used for all name matching.
pub fn normalize_name(name: &str) -> String {
    name.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Disjoint, exhaustive grouping of a roster by one categorical attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributePartition {
    pub attribute: Attribute,
    pub groups: BTreeMap<String, BTreeSet<usize>>,
}

impl AttributePartition {
    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.values().map(|g| g.len()).collect()
    }
}

/// Partition the roster by a categorical attribute (age is bucketed).
pub fn partition(roster: &Roster, attribute: Attribute) -> Result<AttributePartition, PersonaError> {
    if attribute == Attribute::Interests {
        return Err(PersonaError::NotPartitionable(attribute));
    }
    let mut groups: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for p in roster.iter() {
        let value = p.category(attribute).expect("categorical attribute");
        groups.entry(value).or_default().insert(p.id);
    }
    Ok(AttributePartition { attribute, groups })
}

/// Per-attribute categorical distributions a roster can be sampled from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marginals {
    pub gender: BTreeMap<String, f64>,
    /// Keyed by bracket label; uniform fill within the bracket.
    pub age: BTreeMap<String, f64>,
    pub race: BTreeMap<String, f64>,
    pub religion: BTreeMap<String, f64>,
    pub politics: BTreeMap<String, f64>,
    pub interests: InterestsMarginal,
}

/// Tag pool plus a distribution over how many tags each persona draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterestsMarginal {
    pub pool: Vec<String>,
    pub draw_counts: BTreeMap<usize, f64>,
}

const PROB_SUM_TOLERANCE: f64 = 1e-9;

impl Marginals {
    /// The curated U.S. adult marginals the canonical roster derives from.
    pub fn canonical_us() -> Marginals {
        let marginals: Marginals =
            serde_json::from_str(US_MARGINALS_JSON).expect("embedded marginals parse");
        marginals.validate().expect("embedded marginals are valid");
        marginals
    }

    pub fn validate(&self) -> Result<(), PersonaError> {
        let blocks: [(&str, &BTreeMap<String, f64>); 5] = [
            ("gender", &self.gender),
            ("age", &self.age),
            ("race", &self.race),
            ("religion", &self.religion),
            ("politics", &self.politics),
        ];
        for (name, map) in blocks {
            check_distribution(name, map.values().copied())?;
        }
        for label in self.age.keys() {
            if parse_bracket(label).is_none() {
                return Err(PersonaError::InvalidMarginals(format!(
                    "age bracket `{label}` does not match the configured brackets"
                )));
            }
        }
        check_distribution("interests.draw_counts", self.interests.draw_counts.values().copied())?;
        if self.interests.pool.is_empty() {
            return Err(PersonaError::InvalidMarginals(
                "interests.pool is empty".to_string(),
            ));
        }
        let max_draw = self.interests.draw_counts.keys().max().copied().unwrap_or(0);
        if max_draw > self.interests.pool.len() {
            return Err(PersonaError::InvalidMarginals(format!(
                "draw count {max_draw} exceeds interest pool size {}",
                self.interests.pool.len()
            )));
        }
        if self.interests.draw_counts.keys().any(|&k| k == 0) {
            return Err(PersonaError::InvalidMarginals(
                "draw count 0 would violate the non-empty interests invariant".to_string(),
            ));
        }
        Ok(())
    }
}

fn check_distribution(name: &str, probs: impl Iterator<Item = f64>) -> Result<(), PersonaError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(PersonaError::InvalidMarginals(format!(
                "`{name}` has probability {p} outside [0, 1]"
            )));
        }
        sum += p;
        count += 1;
    }
    if count == 0 {
        return Err(PersonaError::InvalidMarginals(format!("`{name}` is empty")));
    }
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        return Err(PersonaError::InvalidMarginals(format!(
            "`{name}` probabilities sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Bracket label → inclusive age range, using the configured bracket edges.
fn parse_bracket(label: &str) -> Option<(u32, u32)> {
    for (i, (lo, hi)) in AGE_BRACKETS.iter().enumerate() {
        let expected = if i == AGE_BRACKETS.len() - 1 {
            format!("{lo}+")
        } else {
            format!("{lo}-{hi}")
        };
        if label == expected {
            return Some((*lo, *hi));
        }
    }
    None
}

/// Sample a fresh roster from marginals. Pure function of its arguments:
/// the same `(marginals, n, seed)` always yields a byte-identical roster.
/// Attributes are drawn independently per attribute; names come from the
/// fixed pool without replacement.
pub fn sample_roster(marginals: &Marginals, n: usize, seed: u64) -> Result<Roster, PersonaError> {
    marginals.validate()?;
    if n < 2 {
        return Err(PersonaError::TooSmall(n));
    }
    let pool = Roster::name_pool();
    if n > pool.len() {
        return Err(PersonaError::NamePoolExhausted {
            requested: n,
            available: pool.len(),
        });
    }

    let mut name_rng = rng_for(seed, &["roster", "names"]);
    let mut names: Vec<&str> = pool;
    // Partial Fisher-Yates: the first n slots end up a uniform sample.
    for i in 0..n {
        let j = name_rng.gen_range(i..names.len());
        names.swap(i, j);
    }

    let mut rng = rng_for(seed, &["roster", "attributes"]);
    let mut personas = Vec::with_capacity(n);
    for id in 0..n {
        let gender = draw_categorical(&marginals.gender, &mut rng);
        let bracket_label = draw_categorical(&marginals.age, &mut rng);
        let (lo, hi) = parse_bracket(&bracket_label).expect("validated bracket label");
        let age = rng.gen_range(lo..=hi);
        let race = draw_categorical(&marginals.race, &mut rng);
        let religion = draw_categorical(&marginals.religion, &mut rng);
        let politics = draw_categorical(&marginals.politics, &mut rng);
        let draw_count = draw_count(&marginals.interests.draw_counts, &mut rng);
        let interests = draw_tags(&marginals.interests.pool, draw_count, &mut rng);

        personas.push(Persona {
            id,
            name: names[id].to_string(),
            gender,
            age,
            race,
            religion,
            politics,
            interests,
        });
    }

    Roster::new(
        Provenance {
            source: "sampled".to_string(),
            seed: Some(seed),
            note: None,
        },
        personas,
    )
}

fn draw_categorical(dist: &BTreeMap<String, f64>, rng: &mut impl Rng) -> String {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (value, p) in dist {
        acc += p;
        if r < acc {
            return value.clone();
        }
    }
    // Rounding can leave r marginally above the final cumulative sum.
    dist.keys().next_back().expect("non-empty distribution").clone()
}

fn draw_count(dist: &BTreeMap<usize, f64>, rng: &mut impl Rng) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (value, p) in dist {
        acc += p;
        if r < acc {
            return *value;
        }
    }
    *dist.keys().next_back().expect("non-empty distribution")
}

fn draw_tags(pool: &[String], count: usize, rng: &mut impl Rng) -> BTreeSet<String> {
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    let mut tags = BTreeSet::new();
    for i in 0..count.min(pool.len()) {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
        tags.insert(pool[indices[i]].clone());
    }
    tags
}

/// Read a roster file (JSON, one record per persona).
pub fn load_roster(path: impl AsRef<Path>) -> Result<Roster, PersonaError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PersonaError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let roster: Roster = serde_json::from_str(&text).map_err(|source| PersonaError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    roster.validate()?;
    Ok(roster)
}

/// Write a roster file. `load_roster(save_roster(r))` is the identity.
pub fn save_roster(roster: &Roster, path: impl AsRef<Path>) -> Result<(), PersonaError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(roster).expect("roster serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| PersonaError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Read a marginals file (JSON, one block per attribute).
pub fn load_marginals(path: impl AsRef<Path>) -> Result<Marginals, PersonaError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| PersonaError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let marginals: Marginals =
        serde_json::from_str(&text).map_err(|source| PersonaError::Parse {
            path: path.display().to_string(),
            source,
        })?;
    marginals.validate()?;
    Ok(marginals)
}
