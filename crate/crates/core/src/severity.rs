//! The closed qualitative scale and its normalization table.
//!
//! | text                                   | label              |
//! |----------------------------------------|--------------------|
//! | no, none, absent                       | no                 |
//! | normal                                 | normal             |
//! | trace, trivial                         | trace              |
//! | mild, mildly                           | mild               |
//! | mild(ly) to moderate(ly), mild-moderate | mild-to-moderate  |
//! | moderate, moderately                   | moderate           |
//! | moderate(ly) to severe(ly)             | moderate-to-severe |
//! | severe, severely                       | severe             |
//! | dilated, enlarged                      | dilated            |
//! | reduced, decreased, depressed          | reduced            |
//! | thickened                              | thickened          |
//!
//! A grade followed by a descriptor ("severely reduced") keeps the grade as
//! the label and the descriptor as a qualifier. Words outside the table are
//! never extracted.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    No,
    Normal,
    Trace,
    Mild,
    MildToModerate,
    Moderate,
    ModerateToSevere,
    Severe,
    Dilated,
    Reduced,
    Thickened,
}

pub const ALL_LABELS: [Severity; 11] = [
    Severity::No,
    Severity::Normal,
    Severity::Trace,
    Severity::Mild,
    Severity::MildToModerate,
    Severity::Moderate,
    Severity::ModerateToSevere,
    Severity::Severe,
    Severity::Dilated,
    Severity::Reduced,
    Severity::Thickened,
];

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::No => "no",
            Severity::Normal => "normal",
            Severity::Trace => "trace",
            Severity::Mild => "mild",
            Severity::MildToModerate => "mild-to-moderate",
            Severity::Moderate => "moderate",
            Severity::ModerateToSevere => "moderate-to-severe",
            Severity::Severe => "severe",
            Severity::Dilated => "dilated",
            Severity::Reduced => "reduced",
            Severity::Thickened => "thickened",
        }
    }

    fn is_descriptor(self) -> bool {
        matches!(self, Severity::Dilated | Severity::Reduced | Severity::Thickened)
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    /// Accepts canonical labels and any phrase the table normalizes.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL_LABELS
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .or_else(|| normalize(s).map(|(label, _)| label))
            .ok_or_else(|| format!("unknown qualitative label `{s}`"))
    }
}

/// A qualitative phrase located in text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QualitativePhrase {
    pub start: usize,
    pub end: usize,
    pub label: Severity,
    pub qualifier: Option<Severity>,
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z]+").unwrap())
}

fn grade(word: &str) -> Option<Severity> {
    Some(match word {
        "no" | "none" | "absent" => Severity::No,
        "normal" => Severity::Normal,
        "trace" | "trivial" => Severity::Trace,
        "mild" | "mildly" => Severity::Mild,
        "moderate" | "moderately" => Severity::Moderate,
        "severe" | "severely" => Severity::Severe,
        _ => return None,
    })
}

fn descriptor(word: &str) -> Option<Severity> {
    Some(match word {
        "dilated" | "enlarged" => Severity::Dilated,
        "reduced" | "decreased" | "depressed" => Severity::Reduced,
        "thickened" => Severity::Thickened,
        _ => return None,
    })
}

fn joined_by_space(gap: &str) -> bool {
    !gap.is_empty() && gap.chars().all(|c| c == ' ' || c == '\t')
}

fn joined_by_space_or_hyphen(gap: &str) -> bool {
    let trimmed = gap.trim_matches(|c| c == ' ' || c == '\t');
    joined_by_space(gap) || trimmed == "-"
}

/// Find every qualitative phrase in `text`, left to right, longest first.
pub fn scan(text: &str) -> Vec<QualitativePhrase> {
    let words: Vec<(usize, usize, String)> = word_re()
        .find_iter(text)
        .map(|m| (m.start(), m.end(), m.as_str().to_ascii_lowercase()))
        .collect();
    let gap = |a: usize, b: usize| &text[words[a].1..words[b].0];
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let w = words[i].2.as_str();
        if let Some(g) = grade(w) {
            let mut label = g;
            let mut last = i;
            // compound grades: "mild to moderate", "mildly-to-moderately", "mild-moderate"
            if matches!(g, Severity::Mild | Severity::Moderate) {
                let upper = if g == Severity::Mild { Severity::Moderate } else { Severity::Severe };
                let compound = if i + 2 < words.len()
                    && words[i + 1].2 == "to"
                    && joined_by_space_or_hyphen(gap(i, i + 1))
                    && joined_by_space_or_hyphen(gap(i + 1, i + 2))
                    && grade(&words[i + 2].2) == Some(upper)
                {
                    Some(i + 2)
                } else if i + 1 < words.len()
                    && gap(i, i + 1).trim_matches(|c| c == ' ' || c == '\t') == "-"
                    && grade(&words[i + 1].2) == Some(upper)
                {
                    Some(i + 1)
                } else {
                    None
                };
                if let Some(j) = compound {
                    label = if g == Severity::Mild {
                        Severity::MildToModerate
                    } else {
                        Severity::ModerateToSevere
                    };
                    last = j;
                }
            }
            let mut qualifier = None;
            let gradable = !matches!(label, Severity::No | Severity::Normal);
            if gradable && last + 1 < words.len() && joined_by_space(gap(last, last + 1)) {
                if let Some(d) = descriptor(&words[last + 1].2) {
                    qualifier = Some(d);
                    last += 1;
                }
            }
            out.push(QualitativePhrase {
                start: words[i].0,
                end: words[last].1,
                label,
                qualifier,
            });
            i = last + 1;
        } else if let Some(d) = descriptor(w) {
            out.push(QualitativePhrase {
                start: words[i].0,
                end: words[i].1,
                label: d,
                qualifier: None,
            });
            i += 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Normalize a whole phrase ("mildly to moderately reduced") to its label
/// and optional descriptor. Returns `None` unless the phrase is exactly one
/// table entry.
pub fn normalize(phrase: &str) -> Option<(Severity, Option<Severity>)> {
    let trimmed = phrase.trim();
    let found = scan(trimmed);
    match found.as_slice() {
        [one] if one.start == 0 && one.end == trimmed.len() => Some((one.label, one.qualifier)),
        _ => None,
    }
}

/// True when the label is a descriptor rather than a grade.
pub fn is_descriptor(label: Severity) -> bool {
    label.is_descriptor()
}
