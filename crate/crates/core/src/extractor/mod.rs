//! Concept-value extraction pipeline.
//!
//! `identify_concepts` → `identify_values` → `link_pairs` → `select_final`.
//! Every stage is a pure function of the report text and the lexicon.

mod concepts;
mod linking;
mod values;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use concepts::identify_concepts;
pub use linking::{link_pairs, select_final};
pub use values::identify_values;

use crate::docmodel::{EchoReport, SectionKind, Span};
use crate::lexicon::{Lexicon, TermSource};
use crate::severity::Severity;
use crate::units::Unit;

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptMention {
    pub concept_id: String,
    pub span: Span,
    /// Exact report text covered by the span.
    pub matched_phrase: String,
    pub section_kind: SectionKind,
    pub source: TermSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MentionKind {
    Quantitative,
    Qualitative,
}

impl MentionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MentionKind::Quantitative => "quantitative",
            MentionKind::Qualitative => "qualitative",
        }
    }
}

impl FromStr for MentionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quantitative" => Ok(MentionKind::Quantitative),
            "qualitative" => Ok(MentionKind::Qualitative),
            other => Err(format!("unknown value kind `{other}`")),
        }
    }
}

impl fmt::Display for MentionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    GreaterThan,
    LessThan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueMention {
    pub span: Span,
    pub kind: MentionKind,
    pub value_min: Option<f64>,
    pub value_max: Option<f64>,
    pub unit: Option<Unit>,
    pub comparator: Option<Comparator>,
    pub uncertain: bool,
    pub qualitative_label: Option<Severity>,
    /// Descriptor that followed a grade ("reduced" in "severely reduced").
    pub qualifier: Option<Severity>,
    /// The number was glued to the preceding word ("open2.2").
    pub attached: bool,
}

impl ValueMention {
    pub fn quantitative(span: Span, min: f64, max: f64, unit: Option<Unit>) -> ValueMention {
        ValueMention {
            span,
            kind: MentionKind::Quantitative,
            value_min: Some(min),
            value_max: Some(max),
            unit,
            comparator: None,
            uncertain: false,
            qualitative_label: None,
            qualifier: None,
            attached: false,
        }
    }

    pub fn qualitative(span: Span, label: Severity) -> ValueMention {
        ValueMention {
            span,
            kind: MentionKind::Qualitative,
            value_min: None,
            value_max: None,
            unit: None,
            comparator: None,
            uncertain: false,
            qualitative_label: Some(label),
            qualifier: None,
            attached: false,
        }
    }

    pub fn is_range(&self) -> bool {
        matches!((self.value_min, self.value_max), (Some(a), Some(b)) if a != b)
    }
}

/// Which linking rule produced a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    /// "no CONCEPT"
    NegationNo,
    /// "CONCEPT-head sclerosis without FINDING"
    NegationWithout,
    /// concept, separator characters, value
    Separator,
    /// "CONCEPT is SEVERITY"
    Copula,
    /// "SEVERITY CONCEPT"
    SeverityFirst,
    /// "A, B, and C are all SEVERITY"
    Coordinated,
    /// label cell then value cell on a tabular line
    Tabular,
}

impl PatternId {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternId::NegationNo => "P1-no",
            PatternId::NegationWithout => "P1-without",
            PatternId::Separator => "P2-separator",
            PatternId::Copula => "P3-copula",
            PatternId::SeverityFirst => "P3-severity-first",
            PatternId::Coordinated => "P3-coordinated",
            PatternId::Tabular => "P4-tabular",
        }
    }
}

impl FromStr for PatternId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            PatternId::NegationNo,
            PatternId::NegationWithout,
            PatternId::Separator,
            PatternId::Copula,
            PatternId::SeverityFirst,
            PatternId::Coordinated,
            PatternId::Tabular,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| format!("unknown pattern id `{s}`"))
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptValuePair {
    pub concept_id: String,
    pub value: ValueMention,
    pub concept_span: Span,
    pub pattern_id: PatternId,
    pub negated_source: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExtractionResult {
    pub report_id: String,
    /// Document order.
    pub all_pairs: Vec<ConceptValuePair>,
    pub final_pairs: BTreeMap<String, ConceptValuePair>,
}

/// Run the whole pipeline over one segmented report.
pub fn extract_report(report: &EchoReport, lex: &Lexicon) -> ExtractionResult {
    let mentions = identify_concepts(report, lex);
    let values = identify_values(report);
    let all_pairs = link_pairs(report, &mentions, &values, lex);
    let final_pairs = select_final(&all_pairs);
    ExtractionResult {
        report_id: report.report_id.clone(),
        all_pairs,
        final_pairs,
    }
}

pub const EXTRACTION_HEADER: &str =
    "report_id\tconcept_id\tkind\tvalue_min\tvalue_max\tunit\tqualitative_label\tstart\tend\tpattern_id";

/// Render every pair as one tab-delimited line; `start`/`end` are the
/// concept span.
pub fn extraction_rows(result: &ExtractionResult) -> Vec<String> {
    result
        .all_pairs
        .iter()
        .map(|p| {
            let v = &p.value;
            let num = |x: Option<f64>| x.map(|n| n.to_string()).unwrap_or_default();
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                result.report_id,
                p.concept_id,
                v.kind,
                num(v.value_min),
                num(v.value_max),
                v.unit.map(Unit::as_str).unwrap_or(""),
                v.qualitative_label.map(Severity::as_str).unwrap_or(""),
                p.concept_span.start,
                p.concept_span.end,
                p.pattern_id,
            )
        })
        .collect()
}

pub fn extraction_tsv(results: &[ExtractionResult]) -> String {
    let mut out = format!("{EXTRACTION_HEADER}\n");
    for r in results {
        for row in extraction_rows(r) {
            out.push_str(&row);
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, thiserror::Error)]
#[error("{source_name}:{line}: {message}")]
pub struct ExtractionParseError {
    pub source_name: String,
    pub line: usize,
    pub message: String,
}

/// Read an extraction file back into per-report pair lists (report order
/// follows first appearance). Comparator and uncertainty flags are not
/// part of the format and come back unset.
pub fn parse_extraction_tsv(
    source_name: &str,
    text: &str,
) -> Result<Vec<(String, Vec<ConceptValuePair>)>, ExtractionParseError> {
    let err = |line: usize, message: String| ExtractionParseError {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut out: Vec<(String, Vec<ConceptValuePair>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if idx == 0 {
            if line != EXTRACTION_HEADER {
                return Err(err(line_no, "missing extraction header".into()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(err(line_no, format!("expected 10 fields, found {}", f.len())));
        }
        let kind: MentionKind = f[2].parse().map_err(|m| err(line_no, m))?;
        let num = |s: &str| -> Result<Option<f64>, ExtractionParseError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| err(line_no, format!("bad number `{s}`")))
            }
        };
        let start: usize = f[7].parse().map_err(|_| err(line_no, format!("bad offset `{}`", f[7])))?;
        let end: usize = f[8].parse().map_err(|_| err(line_no, format!("bad offset `{}`", f[8])))?;
        if end < start {
            return Err(err(line_no, "end offset before start".into()));
        }
        let unit = if f[5].is_empty() {
            None
        } else {
            Some(f[5].parse::<Unit>().map_err(|m| err(line_no, m))?)
        };
        let label = if f[6].is_empty() {
            None
        } else {
            Some(f[6].parse::<Severity>().map_err(|m| err(line_no, m))?)
        };
        let span = Span::new(start, end);
        let value = ValueMention {
            span: Span::new(end, end),
            kind,
            value_min: num(f[3])?,
            value_max: num(f[4])?,
            unit,
            comparator: None,
            uncertain: false,
            qualitative_label: label,
            qualifier: None,
            attached: false,
        };
        match kind {
            MentionKind::Quantitative if value.value_min.is_none() || value.value_max.is_none() => {
                return Err(err(line_no, "quantitative row without values".into()))
            }
            MentionKind::Qualitative if label.is_none() => {
                return Err(err(line_no, "qualitative row without label".into()))
            }
            _ => {}
        }
        let pair = ConceptValuePair {
            concept_id: f[1].to_string(),
            value,
            concept_span: span,
            pattern_id: f[9].parse().map_err(|m| err(line_no, m))?,
            negated_source: false,
        };
        let pair = ConceptValuePair {
            negated_source: matches!(pair.pattern_id, PatternId::NegationNo | PatternId::NegationWithout),
            ..pair
        };
        match out.iter_mut().find(|(id, _)| id == f[0]) {
            Some((_, pairs)) => pairs.push(pair),
            None => out.push((f[0].to_string(), vec![pair])),
        }
    }
    Ok(out)
}
