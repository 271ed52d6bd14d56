//! Prompt templates and deterministic rendering.
//!
//! One template file per (method, language) pair, `<method>.<lang>.txt`,
//! with `{placeholder}` substitution; cultural framing is injected through
//! a `{culture_preamble}` sub-template, `preamble.<culture>.<lang>.txt`.
//! Rendered persona cards and edge listings use fixed language-independent
//! block markers (`[you]`, `[roster]`, `[candidates]`, `[current network]`)
//! so that any backend — in particular the deterministic mock — can
//! recover the full context from the prompt text alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DirectedNetwork;
use crate::persona::{Persona, Roster};

/// The four prompt architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sequential,
    Global,
    Local,
    Iterative,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Sequential,
        Method::Global,
        Method::Local,
        Method::Iterative,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Method::Sequential => "sequential",
            Method::Global => "global",
            Method::Local => "local",
            Method::Iterative => "iterative",
        }
    }

    /// Placeholders the method's template must contain, exactly.
    pub fn required_placeholders(&self) -> &'static [&'static str] {
        match self {
            Method::Sequential => &["ego", "roster"],
            Method::Global => &["roster"],
            Method::Local => &["ego", "neighborhood"],
            Method::Iterative => &["roster", "current_edges", "round"],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Method {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "sequential" => Ok(Method::Sequential),
            "global" => Ok(Method::Global),
            "local" => Ok(Method::Local),
            "iterative" => Ok(Method::Iterative),
            other => Err(TemplateError::UnknownToken {
                kind: "method",
                token: other.to_string(),
            }),
        }
    }
}

/// Prompt languages in the language study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Es,
    Hi,
    Ja,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::En, Language::Es, Language::Hi, Language::Ja];

    pub fn token(&self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Es => "es",
            Language::Hi => "hi",
            Language::Ja => "ja",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Language {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "en" => Ok(Language::En),
            "es" => Ok(Language::Es),
            "hi" => Ok(Language::Hi),
            "ja" => Ok(Language::Ja),
            other => Err(TemplateError::UnknownToken {
                kind: "language",
                token: other.to_string(),
            }),
        }
    }
}

/// Cultural framings in the cultural study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Culture {
    #[serde(rename = "US")]
    Us,
    India,
    Japan,
    Brazil,
}

impl Culture {
    pub const ALL: [Culture; 4] = [Culture::Us, Culture::India, Culture::Japan, Culture::Brazil];

    pub fn token(&self) -> &'static str {
        match self {
            Culture::Us => "US",
            Culture::India => "India",
            Culture::Japan => "Japan",
            Culture::Brazil => "Brazil",
        }
    }

    fn file_token(&self) -> &'static str {
        match self {
            Culture::Us => "us",
            Culture::India => "india",
            Culture::Japan => "japan",
            Culture::Brazil => "brazil",
        }
    }
}

impl fmt::Display for Culture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Culture {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "us" | "usa" => Ok(Culture::Us),
            "india" => Ok(Culture::India),
            "japan" => Ok(Culture::Japan),
            "brazil" => Ok(Culture::Brazil),
            other => Err(TemplateError::UnknownToken {
                kind: "culture",
                token: other.to_string(),
            }),
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("unknown {kind} `{token}`")]
    UnknownToken { kind: &'static str, token: String },
    #[error("template file missing: {0}")]
    MissingFile(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("template {method}.{language}: expected placeholders {expected:?}, found {found:?}")]
    PlaceholderMismatch {
        method: Method,
        language: Language,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("missing binding for placeholder `{0}`")]
    MissingBinding(String),
    #[error("binding `{0}` does not appear in the template")]
    ExtraBinding(String),
}

/// A ready-to-render template: method text in one language with the
/// culture preamble already injected, leaving exactly the method's
/// required placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub method: Method,
    pub language: Language,
    pub culture: Culture,
    pub body: String,
}

impl PromptTemplate {
    pub fn validate(&self) -> Result<(), TemplateError> {
        let found = placeholders(&self.body);
        let expected: BTreeSet<String> = self
            .method
            .required_placeholders()
            .iter()
            .map(|s| s.to_string())
            .collect();
        if found != expected {
            return Err(TemplateError::PlaceholderMismatch {
                method: self.method,
                language: self.language,
                expected: expected.into_iter().collect(),
                found: found.into_iter().collect(),
            });
        }
        Ok(())
    }
}

/// `{name}` occurrences where `name` is `[a-z_]+`.
fn placeholders(body: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(end) = body[i + 1..].find('}') {
                let name = &body[i + 1..i + 1 + end];
                if !name.is_empty()
                    && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_')
                {
                    out.insert(name.to_string());
                    i += end + 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

/// Deterministic substitution. `bindings` must supply exactly the
/// template's placeholders: a missing or extra binding is an error.
pub fn render_prompt(
    template: &PromptTemplate,
    bindings: &BTreeMap<&str, String>,
) -> Result<String, TemplateError> {
    let wanted = placeholders(&template.body);
    for key in bindings.keys() {
        if !wanted.contains(*key) {
            return Err(TemplateError::ExtraBinding(key.to_string()));
        }
    }
    let mut text = template.body.clone();
    for name in &wanted {
        let value = bindings
            .get(name.as_str())
            .ok_or_else(|| TemplateError::MissingBinding(name.clone()))?;
        text = text.replace(&format!("{{{name}}}"), value);
    }
    Ok(text)
}

// Structural markers. Fixed across languages so prompt text is machine
// recoverable regardless of the surrounding prose.
pub const EGO_MARKER: &str = "[you]";
pub const ROSTER_MARKER: &str = "[roster]";
pub const CANDIDATES_MARKER: &str = "[candidates]";
pub const EDGES_MARKER: &str = "[current network]";
pub const REASONS_MARKER: &str = "[reasons: on]";

/// One-line persona card: id, name, five attributes, interests.
pub fn persona_card(p: &Persona) -> String {
    format!(
        "{}. {} | gender: {}; age: {}; race: {}; religion: {}; politics: {}; interests: {}",
        p.id,
        p.name,
        p.gender,
        p.age,
        p.race,
        p.religion,
        p.politics,
        p.interests.iter().cloned().collect::<Vec<_>>().join(", ")
    )
}

fn ego_card(p: &Persona) -> String {
    format!(
        "* {} | gender: {}; age: {}; race: {}; religion: {}; politics: {}; interests: {}",
        p.name,
        p.gender,
        p.age,
        p.race,
        p.religion,
        p.politics,
        p.interests.iter().cloned().collect::<Vec<_>>().join(", ")
    )
}

/// `[you]` block for the ego persona.
pub fn ego_block(ego: &Persona) -> String {
    format!("{EGO_MARKER}\n{}", ego_card(ego))
}

/// `[roster]` block with every persona except `exclude`.
pub fn roster_block(roster: &Roster, exclude: Option<usize>) -> String {
    let mut out = String::from(ROSTER_MARKER);
    for p in roster.iter() {
        if Some(p.id) == exclude {
            continue;
        }
        out.push('\n');
        out.push_str(&persona_card(p));
    }
    out
}

/// `[candidates]` block for a curated neighborhood.
pub fn candidates_block(roster: &Roster, ids: &BTreeSet<usize>) -> String {
    let mut out = String::from(CANDIDATES_MARKER);
    for &id in ids {
        let p = roster.get(id).expect("candidate id in roster");
        out.push('\n');
        out.push_str(&persona_card(p));
    }
    out
}

/// `[current network]` block: one `- Source -> Target` line per edge.
/// An empty edge set renders just the marker.
pub fn edges_block(roster: &Roster, network: &DirectedNetwork) -> String {
    let mut out = String::from(EDGES_MARKER);
    for (i, j) in network.edges() {
        let src = roster.get(i).expect("edge source in roster");
        let dst = roster.get(j).expect("edge target in roster");
        out.push('\n');
        out.push_str(&format!("- {} -> {}", src.name, dst.name));
    }
    out
}

/// `{round}` binding: `t/T`.
pub fn round_token(round: usize, total: usize) -> String {
    format!("{round}/{total}")
}

macro_rules! builtin_templates {
    ($($method:ident, $lang:ident => $file:literal;)*) => {
        fn builtin_bodies() -> BTreeMap<(Method, Language), String> {
            let mut map = BTreeMap::new();
            $(map.insert(
                (Method::$method, Language::$lang),
                include_str!($file).to_string(),
            );)*
            map
        }
    };
}

macro_rules! builtin_preambles {
    ($($culture:ident, $lang:ident => $file:literal;)*) => {
        fn builtin_preamble_map() -> BTreeMap<(Culture, Language), String> {
            let mut map = BTreeMap::new();
            $(map.insert(
                (Culture::$culture, Language::$lang),
                include_str!($file).trim_end().to_string(),
            );)*
            map
        }
    };
}

builtin_templates! {
    Sequential, En => "../templates/sequential.en.txt";
    Sequential, Es => "../templates/sequential.es.txt";
    Sequential, Hi => "../templates/sequential.hi.txt";
    Sequential, Ja => "../templates/sequential.ja.txt";
    Global, En => "../templates/global.en.txt";
    Global, Es => "../templates/global.es.txt";
    Global, Hi => "../templates/global.hi.txt";
    Global, Ja => "../templates/global.ja.txt";
    Local, En => "../templates/local.en.txt";
    Local, Es => "../templates/local.es.txt";
    Local, Hi => "../templates/local.hi.txt";
    Local, Ja => "../templates/local.ja.txt";
    Iterative, En => "../templates/iterative.en.txt";
    Iterative, Es => "../templates/iterative.es.txt";
    Iterative, Hi => "../templates/iterative.hi.txt";
    Iterative, Ja => "../templates/iterative.ja.txt";
}

builtin_preambles! {
    Us, En => "../templates/preamble.us.en.txt";
    Us, Es => "../templates/preamble.us.es.txt";
    Us, Hi => "../templates/preamble.us.hi.txt";
    Us, Ja => "../templates/preamble.us.ja.txt";
    India, En => "../templates/preamble.india.en.txt";
    India, Es => "../templates/preamble.india.es.txt";
    India, Hi => "../templates/preamble.india.hi.txt";
    India, Ja => "../templates/preamble.india.ja.txt";
    Japan, En => "../templates/preamble.japan.en.txt";
    Japan, Es => "../templates/preamble.japan.es.txt";
    Japan, Hi => "../templates/preamble.japan.hi.txt";
    Japan, Ja => "../templates/preamble.japan.ja.txt";
    Brazil, En => "../templates/preamble.brazil.en.txt";
    Brazil, Es => "../templates/preamble.brazil.es.txt";
    Brazil, Hi => "../templates/preamble.brazil.hi.txt";
    Brazil, Ja => "../templates/preamble.brazil.ja.txt";
}

/// The full set of (method, language) bodies and (culture, language)
/// preambles. Ships embedded; an on-disk directory can override it.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    bodies: BTreeMap<(Method, Language), String>,
    preambles: BTreeMap<(Culture, Language), String>,
}

impl TemplateSet {
    /// The templates compiled into the library.
    pub fn builtin() -> TemplateSet {
        TemplateSet {
            bodies: builtin_bodies(),
            preambles: builtin_preamble_map(),
        }
    }

    /// Load every template and preamble file from a directory. All 16
    /// `<method>.<lang>.txt` and 16 `preamble.<culture>.<lang>.txt` files
    /// must exist; a missing file fails fast by name.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<TemplateSet, TemplateError> {
        let dir = dir.as_ref();
        let read = |name: String| -> Result<String, TemplateError> {
            let path = dir.join(&name);
            if !path.exists() {
                return Err(TemplateError::MissingFile(path.display().to_string()));
            }
            std::fs::read_to_string(&path).map_err(|source| TemplateError::Io {
                path: path.display().to_string(),
                source,
            })
        };
        let mut bodies = BTreeMap::new();
        for method in Method::ALL {
            for language in Language::ALL {
                let body = read(format!("{}.{}.txt", method.token(), language.token()))?;
                bodies.insert((method, language), body);
            }
        }
        let mut preambles = BTreeMap::new();
        for culture in Culture::ALL {
            for language in Language::ALL {
                let text = read(format!(
                    "preamble.{}.{}.txt",
                    culture.file_token(),
                    language.token()
                ))?;
                preambles.insert((culture, language), text.trim_end().to_string());
            }
        }
        let set = TemplateSet { bodies, preambles };
        set.validate()?;
        Ok(set)
    }

    /// Check every body carries exactly its method's placeholders plus
    /// `{culture_preamble}`.
    pub fn validate(&self) -> Result<(), TemplateError> {
        for (&(method, language), body) in &self.bodies {
            let mut expected: BTreeSet<String> = method
                .required_placeholders()
                .iter()
                .map(|s| s.to_string())
                .collect();
            expected.insert("culture_preamble".to_string());
            let found = placeholders(body);
            if found != expected {
                return Err(TemplateError::PlaceholderMismatch {
                    method,
                    language,
                    expected: expected.into_iter().collect(),
                    found: found.into_iter().collect(),
                });
            }
        }
        Ok(())
    }

    /// Resolve the template for one condition, injecting the culture
    /// preamble.
    pub fn get(
        &self,
        method: Method,
        language: Language,
        culture: Culture,
    ) -> Result<PromptTemplate, TemplateError> {
        let body = self.bodies.get(&(method, language)).ok_or_else(|| {
            TemplateError::MissingFile(format!("{}.{}.txt", method.token(), language.token()))
        })?;
        let preamble = self.preambles.get(&(culture, language)).ok_or_else(|| {
            TemplateError::MissingFile(format!(
                "preamble.{}.{}.txt",
                culture.file_token(),
                language.token()
            ))
        })?;
        let template = PromptTemplate {
            method,
            language,
            culture,
            body: body.replace("{culture_preamble}", preamble),
        };
        template.validate()?;
        Ok(template)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_set_is_complete_and_valid() {
        let set = TemplateSet::builtin();
        set.validate().unwrap();
        for method in Method::ALL {
            for language in Language::ALL {
                for culture in Culture::ALL {
                    let template = set.get(method, language, culture).unwrap();
                    template.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn render_sequential_contains_all_cards() {
        let set = TemplateSet::builtin();
        let roster = Roster::canonical();
        let template = set.get(Method::Sequential, Language::En, Culture::Us).unwrap();
        let ego = roster.get(3).unwrap();
        let bindings = BTreeMap::from([
            ("ego", ego_block(ego)),
            ("roster", roster_block(&roster, Some(3))),
        ]);
        let text = render_prompt(&template, &bindings).unwrap();
        // 49 numbered cards plus the starred ego card.
        let numbered = text.lines().filter(|l| l.contains(" | gender: ") && !l.starts_with('*')).count();
        assert_eq!(numbered, 49);
        assert!(text.contains(&format!("* {}", ego.name)));
        assert!(!text.contains(&format!("{}. {}", ego.id, ego.name)));
        // Deterministic.
        assert_eq!(text, render_prompt(&template, &bindings).unwrap());
    }

    #[test]
    fn render_missing_binding_errors() {
        let set = TemplateSet::builtin();
        let roster = Roster::canonical();
        let template = set.get(Method::Sequential, Language::En, Culture::Us).unwrap();
        let bindings = BTreeMap::from([("ego", ego_block(roster.get(0).unwrap()))]);
        assert!(matches!(
            render_prompt(&template, &bindings),
            Err(TemplateError::MissingBinding(p)) if p == "roster"
        ));
        let bindings = BTreeMap::from([
            ("ego", String::new()),
            ("roster", String::new()),
            ("bogus", String::new()),
        ]);
        assert!(matches!(
            render_prompt(&template, &bindings),
            Err(TemplateError::ExtraBinding(p)) if p == "bogus"
        ));
    }

    #[test]
    fn from_dir_reports_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        let err = TemplateSet::from_dir(dir.path()).unwrap_err();
        assert!(matches!(err, TemplateError::MissingFile(name) if name.contains("sequential.en.txt")));
    }

    #[test]
    fn placeholder_scan() {
        let found = placeholders("a {x} b {y_z} c {Bad} {x}");
        assert_eq!(
            found,
            BTreeSet::from(["x".to_string(), "y_z".to_string()])
        );
    }

    #[test]
    fn edges_block_lists_edges_in_order() {
        let roster = Roster::canonical();
        let g = DirectedNetwork::new(50, [(2, 1), (0, 5)]).unwrap();
        let block = edges_block(&roster, &g);
        let lines: Vec<&str> = block.lines().collect();
        assert_eq!(lines[0], EDGES_MARKER);
        assert_eq!(
            lines[1],
            format!(
                "- {} -> {}",
                roster.get(0).unwrap().name,
                roster.get(5).unwrap().name
            )
        );
        assert_eq!(lines.len(), 3);
    }
}
