//! Response parsing: turning backend text into verified tie nominations.
//!
//! This is the enforcement point for network validity. Names are matched
//! against the roster exactly (case-insensitive, whitespace-normalized,
//! on word boundaries, so `Maria Lopezz` never matches `Maria Lopez`);
//! unknown names, self-references, out-of-candidate-set targets and
//! duplicates are rejected individually and tallied. The primary format
//! is one nomination per line (`- <name>` or `- <source> -> <target>`,
//! optionally `: <reason>`); free prose falls back to name scanning.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::persona::{normalize_name, Roster};

/// One directed friendship nomination, optionally justified.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieNomination {
    pub source: usize,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Per-call rejection counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTally {
    pub unknown_names: usize,
    pub self_references: usize,
    pub out_of_set: usize,
    pub duplicates: usize,
}

impl ParseTally {
    pub fn rejected(&self) -> usize {
        self.unknown_names + self.self_references + self.out_of_set + self.duplicates
    }
}

/// What kind of response the call expects.
#[derive(Debug, Clone)]
pub enum ParseMode {
    /// One persona nominating targets from a fixed candidate set; the
    /// source of every nomination is `ego`.
    Ego { ego: usize, allowed: BTreeSet<usize> },
    /// A full `source -> target` edge list over the whole roster.
    EdgeList,
}

/// Parse result: accepted nominations, rejection tally, and whether the
/// call soft-failed (non-empty text yielding zero nominations, which
/// triggers a retry). An empty response is a legitimate empty nomination
/// set, not a failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseOutcome {
    pub nominations: Vec<TieNomination>,
    pub tally: ParseTally,
    pub soft_failure: bool,
}

/// Word tokens with byte spans, lowercased. Words are maximal runs of
/// alphanumeric characters, so punctuation never glues names together.
fn tokens(text: &str) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(idx);
            }
        } else if let Some(s) = start.take() {
            out.push((text[s..idx].to_lowercase(), s, idx));
        }
    }
    if let Some(s) = start {
        out.push((text[s..].to_lowercase(), s, text.len()));
    }
    out
}

struct NameIndex {
    /// (token sequence, persona id), longest names first so that a longer
    /// name wins over a name that prefixes it.
    names: Vec<(Vec<String>, usize)>,
}

impl NameIndex {
    fn build(roster: &Roster) -> NameIndex {
        let mut names: Vec<(Vec<String>, usize)> = roster
            .iter()
            .map(|p| {
                let toks = normalize_name(&p.name)
                    .split(' ')
                    .map(str::to_string)
                    .collect();
                (toks, p.id)
            })
            .collect();
        names.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));
        NameIndex { names }
    }

    /// Match a name whose tokens start at `pos`. Returns (persona id,
    /// token count consumed).
    fn match_at(&self, toks: &[(String, usize, usize)], pos: usize) -> Option<(usize, usize)> {
        for (name_toks, id) in &self.names {
            let len = name_toks.len();
            if pos + len <= toks.len()
                && name_toks
                    .iter()
                    .zip(&toks[pos..pos + len])
                    .all(|(n, (t, _, _))| n == t)
            {
                return Some((*id, len));
            }
        }
        None
    }

    /// Whole trimmed string must be exactly one roster name.
    fn match_exact(&self, text: &str) -> Option<usize> {
        let toks = tokens(text);
        let (id, used) = self.match_at(&toks, 0)?;
        (used == toks.len()).then_some(id)
    }
}

/// Strip a leading bullet (`- `, `* `, `• `, `1. `, `1) `).
fn strip_bullet(line: &str) -> (&str, bool) {
    let trimmed = line.trim_start();
    for prefix in ["- ", "* ", "• "] {
        if let Some(rest) = trimmed.strip_prefix(prefix) {
            return (rest.trim_start(), true);
        }
    }
    let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &trimmed[digits..];
        for sep in [". ", ") "] {
            if let Some(r) = rest.strip_prefix(sep) {
                return (r.trim_start(), true);
            }
        }
    }
    (trimmed, false)
}

/// Split a line into sentence-like segments so prose such as
/// `"A — reason. B — reason."` yields one segment per nomination.
fn segments(line: &str) -> Vec<&str> {
    line.split(['.', '。', ';', '；'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Reason text: the remainder of a segment after the matched name,
/// stripped of separator punctuation. Empty reasons collapse to `None`.
fn extract_reason(segment: &str, name_end: usize) -> Option<String> {
    let rest = segment[name_end..]
        .trim_start()
        .trim_start_matches([':', '：', ',', '，', '—', '–', '-'])
        .trim();
    (!rest.is_empty()).then(|| rest.to_string())
}

/// Parse one backend response into nominations.
///
/// In [`ParseMode::Ego`] every accepted target must be in the allowed
/// candidate set; in [`ParseMode::EdgeList`] lines name both endpoints as
/// `source -> target`. `include_reason` controls whether trailing reason
/// text is captured.
pub fn parse_response(
    text: &str,
    mode: &ParseMode,
    roster: &Roster,
    include_reason: bool,
) -> ParseOutcome {
    let index = NameIndex::build(roster);
    let mut nominations: Vec<TieNomination> = Vec::new();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut tally = ParseTally::default();

    let mut accept = |source: usize,
                      target: usize,
                      reason: Option<String>,
                      tally: &mut ParseTally| {
        match mode {
            ParseMode::Ego { ego, allowed } => {
                if target == *ego {
                    tally.self_references += 1;
                    return;
                }
                if !allowed.contains(&target) {
                    tally.out_of_set += 1;
                    return;
                }
            }
            ParseMode::EdgeList => {
                if source == target {
                    tally.self_references += 1;
                    return;
                }
            }
        }
        if !seen.insert((source, target)) {
            tally.duplicates += 1;
            return;
        }
        nominations.push(TieNomination {
            source,
            target,
            reason: if include_reason { reason } else { None },
        });
    };

    for raw_line in text.lines() {
        let (line, bulleted) = strip_bullet(raw_line);
        if line.is_empty() {
            continue;
        }
        match mode {
            ParseMode::EdgeList => {
                let Some((left, right)) = line.split_once("->") else {
                    if bulleted {
                        tally.unknown_names += 1;
                    }
                    continue;
                };
                let Some(source) = index.match_exact(left) else {
                    tally.unknown_names += 1;
                    continue;
                };
                // Target is the leading name of the right side; anything
                // after it is the reason.
                let toks = tokens(right);
                let Some((target, used)) = index.match_at(&toks, 0) else {
                    tally.unknown_names += 1;
                    continue;
                };
                let name_end = toks[used - 1].2;
                let reason = extract_reason(right, name_end);
                accept(source, target, reason, &mut tally);
            }
            ParseMode::Ego { ego, .. } => {
                let mut matched_in_line = false;
                for segment in segments(line) {
                    let toks = tokens(segment);
                    if toks.is_empty() {
                        continue;
                    }
                    if let Some((target, used)) = index.match_at(&toks, 0) {
                        // Structured form: name at segment start, optional
                        // reason after it.
                        let name_end = toks[used - 1].2;
                        let reason = extract_reason(segment, name_end);
                        accept(*ego, target, reason, &mut tally);
                        matched_in_line = true;
                        continue;
                    }
                    // Free prose: scan the segment for embedded names.
                    let mut pos = 0;
                    while pos < toks.len() {
                        if let Some((target, used)) = index.match_at(&toks, pos) {
                            accept(*ego, target, None, &mut tally);
                            matched_in_line = true;
                            pos += used;
                        } else {
                            pos += 1;
                        }
                    }
                }
                if bulleted && !matched_in_line {
                    tally.unknown_names += 1;
                }
            }
        }
    }

    let soft_failure = nominations.is_empty() && !text.trim().is_empty();
    ParseOutcome {
        nominations,
        tally,
        soft_failure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persona::{Persona, Provenance};
    use proptest::prelude::*;

    fn roster() -> Roster {
        let names = ["Maria Lopez", "Ken Tanaka", "Ava Thompson", "Liam Carter"];
        let personas = names
            .iter()
            .enumerate()
            .map(|(id, name)| Persona {
                id,
                name: name.to_string(),
                gender: "F".to_string(),
                age: 30,
                race: "x".to_string(),
                religion: "y".to_string(),
                politics: "z".to_string(),
                interests: std::collections::BTreeSet::from(["reading".to_string()]),
            })
            .collect();
        Roster::new(Provenance::default(), personas).unwrap()
    }

    fn ego_mode(ego: usize, n: usize) -> ParseMode {
        ParseMode::Ego {
            ego,
            allowed: (0..n).filter(|&i| i != ego).collect(),
        }
    }

    #[test]
    fn prose_with_two_names() {
        let r = roster();
        let out = parse_response(
            "I would befriend Maria Lopez and Ken Tanaka.",
            &ego_mode(2, 4),
            &r,
            false,
        );
        assert_eq!(out.nominations.len(), 2);
        assert_eq!(out.nominations[0].target, 0);
        assert_eq!(out.nominations[1].target, 1);
        assert!(!out.soft_failure);
    }

    #[test]
    fn self_reference_rejected_and_tallied() {
        let r = roster();
        let out = parse_response("- Maria Lopez\n- Ken Tanaka", &ego_mode(0, 4), &r, false);
        assert_eq!(out.nominations.len(), 1);
        assert_eq!(out.nominations[0].target, 1);
        assert_eq!(out.tally.self_references, 1);
    }

    #[test]
    fn reasons_captured_from_dash_prose() {
        let r = roster();
        let out = parse_response(
            "Maria Lopez — we share hobbies. Ken Tanaka — same age.",
            &ego_mode(2, 4),
            &r,
            true,
        );
        assert_eq!(out.nominations.len(), 2);
        assert_eq!(out.nominations[0].reason.as_deref(), Some("we share hobbies"));
        assert_eq!(out.nominations[1].reason.as_deref(), Some("same age"));
    }

    #[test]
    fn reasons_captured_from_contract_format() {
        let r = roster();
        let out = parse_response(
            "- Maria Lopez: lives nearby\n- Ken Tanaka",
            &ego_mode(2, 4),
            &r,
            true,
        );
        assert_eq!(out.nominations[0].reason.as_deref(), Some("lives nearby"));
        assert_eq!(out.nominations[1].reason, None);
    }

    #[test]
    fn reasons_dropped_when_not_requested() {
        let r = roster();
        let out = parse_response("- Maria Lopez: lives nearby", &ego_mode(2, 4), &r, false);
        assert_eq!(out.nominations[0].reason, None);
    }

    #[test]
    fn near_miss_name_is_unknown() {
        let r = roster();
        let out = parse_response("- Maria Lopezz\n- Kenn Tanaka", &ego_mode(2, 4), &r, false);
        assert!(out.nominations.is_empty());
        assert_eq!(out.tally.unknown_names, 2);
        assert!(out.soft_failure);
    }

    #[test]
    fn out_of_set_target_dropped() {
        let r = roster();
        let mode = ParseMode::Ego {
            ego: 0,
            allowed: BTreeSet::from([1, 2]),
        };
        let out = parse_response("- Liam Carter\n- Ken Tanaka", &mode, &r, false);
        assert_eq!(out.nominations.len(), 1);
        assert_eq!(out.nominations[0].target, 1);
        assert_eq!(out.tally.out_of_set, 1);
    }

    #[test]
    fn duplicates_deduplicated() {
        let r = roster();
        let out = parse_response(
            "- Ken Tanaka: first\n- Ken Tanaka: second",
            &ego_mode(0, 4),
            &r,
            true,
        );
        assert_eq!(out.nominations.len(), 1);
        assert_eq!(out.nominations[0].reason.as_deref(), Some("first"));
        assert_eq!(out.tally.duplicates, 1);
    }

    #[test]
    fn empty_text_is_not_soft_failure() {
        let r = roster();
        let out = parse_response("", &ego_mode(0, 4), &r, false);
        assert!(out.nominations.is_empty());
        assert!(!out.soft_failure);
        let out = parse_response("   \n  ", &ego_mode(0, 4), &r, false);
        assert!(!out.soft_failure);
    }

    #[test]
    fn nonempty_text_without_names_is_soft_failure() {
        let r = roster();
        let out = parse_response("I cannot help with that.", &ego_mode(0, 4), &r, false);
        assert!(out.nominations.is_empty());
        assert!(out.soft_failure);
    }

    #[test]
    fn edge_list_lines() {
        let r = roster();
        let out = parse_response(
            "- Maria Lopez -> Ken Tanaka\n- Ava Thompson -> Maria Lopez: neighbors\n- Ken Tanaka -> Ken Tanaka",
            &ParseMode::EdgeList,
            &r,
            true,
        );
        assert_eq!(out.nominations.len(), 2);
        assert_eq!(
            (out.nominations[0].source, out.nominations[0].target),
            (0, 1)
        );
        assert_eq!(out.nominations[1].reason.as_deref(), Some("neighbors"));
        assert_eq!(out.tally.self_references, 1);
    }

    #[test]
    fn edge_list_unknown_side_tallied() {
        let r = roster();
        let out = parse_response(
            "- Maria Lopez -> Bogus Person\n- Nobody Here -> Ken Tanaka",
            &ParseMode::EdgeList,
            &r,
            false,
        );
        assert!(out.nominations.is_empty());
        assert_eq!(out.tally.unknown_names, 2);
    }

    proptest! {
        /// Adversarial fuzz: whatever the text, no nomination ever targets
        /// outside the allowed set, and near-miss names never match.
        #[test]
        fn never_escapes_allowed_set(noise in "[a-zA-Z ,.\\-\n]{0,120}", pick in 0usize..4) {
            let r = roster();
            let text = format!("{noise}\n- Maria Lopezz\n- {}\n{noise}", r.get(pick).unwrap().name);
            let allowed = BTreeSet::from([1usize, 3]);
            let mode = ParseMode::Ego { ego: 0, allowed: allowed.clone() };
            let out = parse_response(&text, &mode, &r, false);
            for nom in &out.nominations {
                prop_assert!(allowed.contains(&nom.target));
                prop_assert_eq!(nom.source, 0);
            }
        }
    }
}
