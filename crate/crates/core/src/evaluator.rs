//! Gold-standard comparison: per-report outcome classes, value matching,
//! metric aggregation and the fixed-width results table.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::extractor::{ExtractionResult, MentionKind, ValueMention};
use crate::lexicon::Lexicon;
use crate::severity::Severity;
use crate::units::Unit;

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no extraction result for report `{0}`")]
    MissingReport(String),
    #[error("duplicate gold rows for report `{report_id}`, concept `{concept_id}`")]
    DuplicateGold { report_id: String, concept_id: String },
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedValue {
    pub kind: MentionKind,
    pub value_min: Option<f64>,
    pub value_max: Option<f64>,
    pub unit: Option<Unit>,
    pub qualitative_label: Option<Severity>,
}

impl From<&ValueMention> for ExpectedValue {
    fn from(v: &ValueMention) -> Self {
        ExpectedValue {
            kind: v.kind,
            value_min: v.value_min,
            value_max: v.value_max,
            unit: v.unit,
            qualitative_label: v.qualitative_label,
        }
    }
}

impl ExpectedValue {
    pub fn quantitative(min: f64, max: f64, unit: Option<Unit>) -> Self {
        ExpectedValue {
            kind: MentionKind::Quantitative,
            value_min: Some(min),
            value_max: Some(max),
            unit,
            qualitative_label: None,
        }
    }

    pub fn qualitative(label: Severity) -> Self {
        ExpectedValue {
            kind: MentionKind::Qualitative,
            value_min: None,
            value_max: None,
            unit: None,
            qualitative_label: Some(label),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldAnnotation {
    pub report_id: String,
    pub concept_id: String,
    pub present: bool,
    /// Set exactly when `present` is true.
    pub expected: Option<ExpectedValue>,
}

impl GoldAnnotation {
    pub fn absent(report_id: &str, concept_id: &str) -> Self {
        GoldAnnotation {
            report_id: report_id.to_string(),
            concept_id: concept_id.to_string(),
            present: false,
            expected: None,
        }
    }

    pub fn present(report_id: &str, concept_id: &str, expected: ExpectedValue) -> Self {
        GoldAnnotation {
            report_id: report_id.to_string(),
            concept_id: concept_id.to_string(),
            present: true,
            expected: Some(expected),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeClass {
    TP,
    FP,
    TN,
    FN,
}

impl fmt::Display for OutcomeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeClass::TP => "TP",
            OutcomeClass::FP => "FP",
            OutcomeClass::TN => "TN",
            OutcomeClass::FN => "FN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reason {
    ValueMatch,
    SpuriousPair,
    NoMention,
    ConceptMissed,
    ValueMismatch,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::ValueMatch => "value-match",
            Reason::SpuriousPair => "spurious-pair",
            Reason::NoMention => "no-mention",
            Reason::ConceptMissed => "concept-missed",
            Reason::ValueMismatch => "value-mismatch",
        }
    }
}

impl FromStr for OutcomeClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "TP" => OutcomeClass::TP,
            "FP" => OutcomeClass::FP,
            "TN" => OutcomeClass::TN,
            "FN" => OutcomeClass::FN,
            other => return Err(format!("unknown outcome class `{other}`")),
        })
    }
}

impl FromStr for Reason {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Reason::ValueMatch,
            Reason::SpuriousPair,
            Reason::NoMention,
            Reason::ConceptMissed,
            Reason::ValueMismatch,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| format!("unknown reason `{s}`"))
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report_id: String,
    pub concept_id: String,
    pub class: OutcomeClass,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub concept_id: String,
    pub corpus_tag: String,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub absent: bool,
    /// tp+fp was 0 and precision is reported as 0.
    pub precision_undefined: bool,
    /// tp+fn was 0 and recall is reported as 0.
    pub recall_undefined: bool,
}

impl Metrics {
    pub fn from_counts(concept_id: &str, corpus_tag: &str, tp: usize, fp: usize, tn: usize, fn_: usize) -> Metrics {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_score = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            concept_id: concept_id.to_string(),
            corpus_tag: corpus_tag.to_string(),
            tp,
            fp,
            tn,
            fn_,
            precision,
            recall,
            f_score,
            absent: tp == 0 && fp == 0 && fn_ == 0,
            precision_undefined: tp + fp == 0,
            recall_undefined: tp + fn_ == 0,
        }
    }
}

fn numbers_match(a: &ExpectedValue, b: &ExpectedValue) -> bool {
    let (Some(a_min), Some(a_max), Some(b_min), Some(b_max)) = (a.value_min, a.value_max, b.value_min, b.value_max)
    else {
        return false;
    };
    let (fa, fb) = match (a.unit, b.unit) {
        (Some(ua), Some(ub)) if ua.dimension() != ub.dimension() => return false,
        (Some(ua), Some(ub)) => (ua.to_base(), ub.to_base()),
        // a missing unit on either side compares the numbers as written
        _ => (1.0, 1.0),
    };
    (a_min * fa - b_min * fb).abs() <= TOLERANCE && (a_max * fa - b_max * fb).abs() <= TOLERANCE
}

/// Symmetric comparison of two expected-value records.
pub fn values_match(a: &ExpectedValue, b: &ExpectedValue) -> bool {
    if a.kind != b.kind {
        return false;
    }
    match a.kind {
        MentionKind::Quantitative => numbers_match(a, b),
        MentionKind::Qualitative => a.qualitative_label.is_some() && a.qualitative_label == b.qualitative_label,
    }
}

/// Does an extracted value match the reference value? Comparator and
/// uncertainty markers are ignored; ranges must match at both ends.
pub fn compare_values(extracted: &ValueMention, expected: &ExpectedValue) -> bool {
    values_match(&ExpectedValue::from(extracted), expected)
}

/// Classify one report for every evaluated concept. Concepts without a gold
/// row for this report count as absent.
pub fn classify(
    result: &ExtractionResult,
    gold: &[GoldAnnotation],
    concepts: &[String],
) -> Result<Vec<Outcome>, EvalError> {
    let mut by_concept: HashMap<&str, &GoldAnnotation> = HashMap::new();
    for g in gold.iter().filter(|g| g.report_id == result.report_id) {
        if by_concept.insert(g.concept_id.as_str(), g).is_some() {
            return Err(EvalError::DuplicateGold {
                report_id: g.report_id.clone(),
                concept_id: g.concept_id.clone(),
            });
        }
    }
    Ok(concepts
        .iter()
        .map(|c| {
            let expected = by_concept.get(c.as_str()).and_then(|g| g.expected.as_ref());
            let pair = result.final_pairs.get(c);
            let (class, reason) = match (expected, pair) {
                (Some(e), Some(p)) if compare_values(&p.value, e) => (OutcomeClass::TP, Reason::ValueMatch),
                (Some(_), Some(_)) => (OutcomeClass::FN, Reason::ValueMismatch),
                (Some(_), None) => (OutcomeClass::FN, Reason::ConceptMissed),
                (None, Some(_)) => (OutcomeClass::FP, Reason::SpuriousPair),
                (None, None) => (OutcomeClass::TN, Reason::NoMention),
            };
            Outcome {
                report_id: result.report_id.clone(),
                concept_id: c.clone(),
                class,
                reason,
            }
        })
        .collect())
}

/// Classify every report. Every report named in the gold file must have a
/// result.
pub fn classify_corpus(
    results: &[ExtractionResult],
    gold: &[GoldAnnotation],
    concepts: &[String],
) -> Result<Vec<Outcome>, EvalError> {
    let mut by_report: HashMap<&str, Vec<GoldAnnotation>> = HashMap::new();
    for g in gold {
        by_report.entry(g.report_id.as_str()).or_default().push(g.clone());
    }
    for g in gold {
        if !results.iter().any(|r| r.report_id == g.report_id) {
            return Err(EvalError::MissingReport(g.report_id.clone()));
        }
    }
    let mut out = Vec::with_capacity(results.len() * concepts.len());
    for r in results {
        let rows = by_report.get(r.report_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        out.extend(classify(r, rows, concepts)?);
    }
    Ok(out)
}

/// One Metrics per concept, in order of first appearance.
pub fn aggregate(outcomes: &[Outcome], corpus_tag: &str) -> Vec<Metrics> {
    let mut order: Vec<&str> = Vec::new();
    let mut counts: HashMap<&str, [usize; 4]> = HashMap::new();
    for o in outcomes {
        let slot = counts.entry(o.concept_id.as_str()).or_insert_with(|| {
            order.push(o.concept_id.as_str());
            [0; 4]
        });
        slot[o.class as usize] += 1;
    }
    order
        .into_iter()
        .map(|c| {
            let [tp, fp, tn, fn_] = counts[c];
            Metrics::from_counts(c, corpus_tag, tp, fp, tn, fn_)
        })
        .collect()
}

fn pct(x: f64) -> String {
    format!("{}", (x * 100.0).round() as i64)
}

/// Fixed-width table: one row per concept in lexicon order, three columns
/// (recall %, precision %, F-score) per corpus in order of first
/// appearance. Absent cells read `A`.
pub fn render_table(metrics: &[Metrics], lex: &Lexicon) -> String {
    let mut corpora: Vec<&str> = Vec::new();
    for m in metrics {
        if !corpora.contains(&m.corpus_tag.as_str()) {
            corpora.push(&m.corpus_tag);
        }
    }
    let index: BTreeMap<(&str, &str), &Metrics> = metrics
        .iter()
        .map(|m| ((m.corpus_tag.as_str(), m.concept_id.as_str()), m))
        .collect();
    let mut rows: Vec<(String, &str)> = lex
        .concepts()
        .iter()
        .filter(|c| metrics.iter().any(|m| m.concept_id == c.concept_id))
        .map(|c| (c.canonical_name.clone(), c.concept_id.as_str()))
        .collect();
    // concepts unknown to the lexicon go last, by id
    let mut extra: Vec<&str> = metrics
        .iter()
        .map(|m| m.concept_id.as_str())
        .filter(|id| lex.concept(id).is_none())
        .collect();
    extra.sort_unstable();
    extra.dedup();
    rows.extend(extra.into_iter().map(|id| (id.to_string(), id)));

    let name_w = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("Concept".len());
    const CELL: usize = 5;
    let group_w = CELL * 3 + 2;
    let mut out = String::new();

    out.push_str(&format!("{:<name_w$}", ""));
    for c in &corpora {
        out.push_str(&format!("  {c:^group_w$}"));
    }
    out = out.trim_end().to_string();
    out.push('\n');
    out.push_str(&format!("{:<name_w$}", "Concept"));
    for _ in &corpora {
        out.push_str(&format!("  {:>CELL$} {:>CELL$} {:>CELL$}", "R(%)", "P(%)", "F"));
    }
    out.push('\n');

    for (name, id) in rows {
        out.push_str(&format!("{name:<name_w$}"));
        for c in &corpora {
            let cells = match index.get(&(*c, id)) {
                Some(m) if m.absent => ["A".to_string(), "A".to_string(), "A".to_string()],
                Some(m) => [pct(m.recall), pct(m.precision), format!("{:.2}", m.f_score)],
                None => ["-".to_string(), "-".to_string(), "-".to_string()],
            };
            out.push_str(&format!("  {:>CELL$} {:>CELL$} {:>CELL$}", cells[0], cells[1], cells[2]));
        }
        out.push('\n');
    }
    out
}

pub const METRICS_HEADER: &str =
    "corpus_tag\tconcept_id\ttp\tfp\ttn\tfn\tprecision\trecall\tf_score\tabsent\tprecision_undefined\trecall_undefined";

pub fn metrics_tsv(metrics: &[Metrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for m in metrics {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            m.corpus_tag,
            m.concept_id,
            m.tp,
            m.fp,
            m.tn,
            m.fn_,
            m.precision,
            m.recall,
            m.f_score,
            m.absent,
            m.precision_undefined,
            m.recall_undefined
        ));
    }
    out
}

pub const GOLD_HEADER: &str = "report_id\tconcept_id\tpresent\tkind\tvalue_min\tvalue_max\tunit\tqualitative_label";

pub fn gold_tsv(rows: &[GoldAnnotation]) -> String {
    let mut out = format!("{GOLD_HEADER}\n");
    for g in rows {
        let num = |x: Option<f64>| x.map(|n| n.to_string()).unwrap_or_default();
        match &g.expected {
            Some(e) => out.push_str(&format!(
                "{}\t{}\t1\t{}\t{}\t{}\t{}\t{}\n",
                g.report_id,
                g.concept_id,
                e.kind,
                num(e.value_min),
                num(e.value_max),
                e.unit.map(Unit::as_str).unwrap_or(""),
                e.qualitative_label.map(Severity::as_str).unwrap_or(""),
            )),
            None => out.push_str(&format!("{}\t{}\t0\t\t\t\t\t\n", g.report_id, g.concept_id)),
        }
    }
    out
}

pub fn parse_gold_tsv(source_name: &str, text: &str) -> Result<Vec<GoldAnnotation>, EvalError> {
    let err = |line: usize, message: String| EvalError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == GOLD_HEADER => {}
        _ => return Err(err(1, "missing gold header".into())),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(err(n, format!("expected 8 fields, found {}", f.len())));
        }
        let present = match f[2] {
            "1" => true,
            "0" => false,
            other => return Err(err(n, format!("present must be 0 or 1, found `{other}`"))),
        };
        if !present {
            if f[3..].iter().any(|s| !s.is_empty()) {
                return Err(err(n, "absent row carries a value".into()));
            }
            out.push(GoldAnnotation::absent(f[0], f[1]));
            continue;
        }
        let kind: MentionKind = f[3].parse().map_err(|m| err(n, m))?;
        let num = |s: &str| -> Result<Option<f64>, EvalError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| err(n, format!("bad number `{s}`")))
            }
        };
        let unit = if f[6].is_empty() {
            None
        } else {
            Some(f[6].parse::<Unit>().map_err(|m| err(n, m))?)
        };
        let label = if f[7].is_empty() {
            None
        } else {
            Some(f[7].parse::<Severity>().map_err(|m| err(n, m))?)
        };
        let expected = ExpectedValue {
            kind,
            value_min: num(f[4])?,
            value_max: num(f[5])?,
            unit,
            qualitative_label: label,
        };
        let ok = match kind {
            MentionKind::Quantitative => matches!((expected.value_min, expected.value_max), (Some(a), Some(b)) if a <= b),
            MentionKind::Qualitative => label.is_some(),
        };
        if !ok {
            return Err(err(n, "present row has an incomplete value".into()));
        }
        out.push(GoldAnnotation::present(f[0], f[1], expected));
    }
    Ok(out)
}

pub const OUTCOMES_HEADER: &str = "report_id\tconcept_id\tclass\treason";

pub fn outcomes_tsv(outcomes: &[Outcome]) -> String {
    let mut out = format!("{OUTCOMES_HEADER}\n");
    for o in outcomes {
        out.push_str(&format!("{}\t{}\t{}\t{}\n", o.report_id, o.concept_id, o.class, o.reason));
    }
    out
}

pub fn parse_outcomes_tsv(source_name: &str, text: &str) -> Result<Vec<Outcome>, EvalError> {
    let err = |line: usize, message: String| EvalError::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == OUTCOMES_HEADER => {}
        _ => return Err(err(1, "missing outcomes header".into())),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(err(idx + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let class = f[2].parse().map_err(|m| err(idx + 1, m))?;
        let reason = f[3].parse().map_err(|m| err(idx + 1, m))?;
        out.push(Outcome {
            report_id: f[0].to_string(),
            concept_id: f[1].to_string(),
            class,
            reason,
        });
    }
    Ok(out)
}
