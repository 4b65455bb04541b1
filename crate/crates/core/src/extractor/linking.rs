use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::docmodel::{EchoReport, SectionKind, Span};
use crate::lexicon::{Lexicon, RulePack, ValueKind};
use crate::severity::Severity;

use super::{ConceptMention, ConceptValuePair, MentionKind, PatternId, ValueMention};

const COPULAS: [&str; 8] = ["is", "are", "was", "were", "appears", "appear", "remains", "measures"];

fn without_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)\b(?P<head>[a-z]+(?:[ \t]+[a-z]+){0,3})[ \t]+(?:sclerosis|thickening|calcification)[ \t]+(?P<without>without)[ \t]+(?P<finding>stenosis|regurgitation)\b",
        )
        .unwrap()
    })
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z]+").unwrap())
}

fn coordinated_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(?:are|were)[ \t]+all[ \t]+$").unwrap())
}

fn accepts(lex: &Lexicon, concept_id: &str, v: &ValueMention) -> bool {
    let Some(def) = lex.concept(concept_id) else { return false };
    match v.kind {
        MentionKind::Quantitative => def.value_kind.accepts_quantitative(),
        MentionKind::Qualitative => def.value_kind.accepts_qualitative(),
    }
}

/// A full stop followed by whitespace (or ending the gap) closes a sentence.
fn crosses_sentence(gap: &str) -> bool {
    let b = gap.as_bytes();
    b.iter().enumerate().any(|(i, &c)| {
        c == b'.' && b.get(i + 1).is_none_or(|n| n.is_ascii_whitespace())
    })
}

fn separator_gap(gap: &str, pack: &RulePack) -> bool {
    let newlines = gap.matches('\n').count();
    let allowed = if pack.cross_line_linking { 1 } else { 0 };
    newlines <= allowed && gap.chars().all(|c| c == '\n' || pack.is_separator(c))
}

/// Gap between a label cell and its value cell on one tabular line.
fn tabular_gap(gap: &str, pack: &RulePack) -> bool {
    gap.chars()
        .all(|c| c != '\n' && (c.is_alphabetic() || pack.is_separator(c) || matches!(c, '-' | '/' | '\'')))
}

fn copula_gap(gap: &str) -> bool {
    if gap.contains('\n') || !gap.starts_with([' ', '\t']) || !gap.ends_with([' ', '\t']) {
        return false;
    }
    let words: Vec<&str> = gap.split_whitespace().collect();
    (1..=2).contains(&words.len())
        && words
            .iter()
            .all(|w| COPULAS.contains(&w.to_ascii_lowercase().as_str()))
}

struct Ctx<'a> {
    report: &'a EchoReport,
    text: &'a str,
    lex: &'a Lexicon,
    pack: &'a RulePack,
    mentions: Vec<&'a ConceptMention>,
    values: Vec<&'a ValueMention>,
}

impl Ctx<'_> {
    fn tabular(&self, at: usize) -> bool {
        self.report.kind_at(at) == Some(SectionKind::Tabular)
    }

    /// Concepts to the left that could own the value.
    fn left_candidates(&self, vi: usize) -> Vec<usize> {
        let v = self.values[vi];
        self.mentions
            .iter()
            .enumerate()
            .filter(|(_, m)| m.span.end <= v.span.start)
            .filter(|(_, m)| v.span.start - m.span.end <= self.pack.max_link_window_chars)
            .filter(|(_, m)| {
                let gap = &self.text[m.span.end..v.span.start];
                let newlines = gap.matches('\n').count();
                !crosses_sentence(gap)
                    && newlines <= usize::from(self.pack.cross_line_linking)
                    && !self.values[..vi].iter().any(|w| w.span.start >= m.span.end)
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// "SEVERITY CONCEPT" on the same line.
    fn right_candidate(&self, vi: usize) -> Option<usize> {
        let v = self.values[vi];
        if v.kind != MentionKind::Qualitative {
            return None;
        }
        let mi = self.mentions.iter().position(|m| m.span.start >= v.span.end)?;
        let gap = &self.text[v.span.end..self.mentions[mi].span.start];
        let spaced = !gap.is_empty() && gap.chars().all(|c| c == ' ' || c == '\t');
        spaced.then_some(mi)
    }

    fn left_pattern(&self, mi: usize, v: &ValueMention) -> Option<PatternId> {
        let m = self.mentions[mi];
        if !accepts(self.lex, &m.concept_id, v) {
            return None;
        }
        let gap = &self.text[m.span.end..v.span.start];
        if self.tabular(v.span.start) && tabular_gap(gap, self.pack) {
            return Some(PatternId::Tabular);
        }
        if separator_gap(gap, self.pack) {
            return Some(PatternId::Separator);
        }
        if copula_gap(gap) {
            return Some(PatternId::Copula);
        }
        None
    }

    fn pair(&self, mi: usize, v: &ValueMention, pattern: PatternId) -> ConceptValuePair {
        let m = self.mentions[mi];
        ConceptValuePair {
            concept_id: m.concept_id.clone(),
            value: v.clone(),
            concept_span: m.span,
            pattern_id: pattern,
            negated_source: matches!(pattern, PatternId::NegationNo | PatternId::NegationWithout),
        }
    }
}

/// "X sclerosis without stenosis" asserts absence of the stenosis concept
/// whose lexicon term is "X stenosis".
fn negation_without(report: &EchoReport, lex: &Lexicon) -> Vec<ConceptValuePair> {
    let text = report.raw_text.as_str();
    let mut out = Vec::new();
    for caps in without_re().captures_iter(text) {
        let head = caps.name("head").unwrap();
        let finding = caps.name("finding").unwrap();
        let without = caps.name("without").unwrap();
        // try the longest trailing run of head words that names a concept
        let word_starts: Vec<usize> = word_re()
            .find_iter(head.as_str())
            .map(|w| head.start() + w.start())
            .collect();
        for &ws in &word_starts {
            let phrase = format!("{} {}", &text[ws..head.end()], finding.as_str());
            let Some(id) = lex.lookup_phrase(&phrase) else { continue };
            if !lex.concept(id).is_some_and(|c| c.value_kind != ValueKind::Quantitative) {
                continue;
            }
            out.push(ConceptValuePair {
                concept_id: id.to_string(),
                value: ValueMention::qualitative(Span::new(without.start(), without.end()), Severity::No),
                concept_span: Span::new(ws, finding.end()),
                pattern_id: PatternId::NegationWithout,
                negated_source: true,
            });
            break;
        }
    }
    out
}

/// Attach values to concepts. Returns every pair, sorted by concept span
/// then value span.
pub fn link_pairs(
    report: &EchoReport,
    mentions: &[ConceptMention],
    values: &[ValueMention],
    lex: &Lexicon,
) -> Vec<ConceptValuePair> {
    let pack = lex.active_pack();
    let text = report.raw_text.as_str();
    let kept = |s: Span| !(pack.exclude_tabular && report.kind_at(s.start) == Some(SectionKind::Tabular));
    let mentions: Vec<&ConceptMention> = mentions.iter().filter(|m| kept(m.span)).collect();
    let values: Vec<&ValueMention> = values
        .iter()
        .filter(|v| kept(v.span) && !mentions.iter().any(|m| m.span.overlaps(&v.span)))
        .collect();
    let ctx = Ctx { report, text, lex, pack, mentions, values };

    let mut pairs = Vec::new();
    if pack.negation_without_pattern {
        pairs.extend(negation_without(report, lex).into_iter().filter(|p| kept(p.concept_span)));
    }
    let mut taken = vec![false; ctx.mentions.len()];

    for (vi, v) in ctx.values.iter().copied().enumerate() {
        if v.attached && !pack.tolerant_tokenization {
            continue;
        }
        // "no CONCEPT"
        if v.qualitative_label == Some(Severity::No) {
            if let Some(mi) = ctx.right_candidate(vi) {
                if !taken[mi] && accepts(lex, &ctx.mentions[mi].concept_id, v) {
                    pairs.push(ctx.pair(mi, v, PatternId::NegationNo));
                    taken[mi] = true;
                    continue;
                }
            }
        }
        if pack.reference_range_discrimination
            && v.kind == MentionKind::Quantitative
            && ctx.tabular(v.span.start)
            && (v.comparator.is_some() || v.is_range())
        {
            continue;
        }

        // "1.1 > 2.4 cm²": the measured number shares the reference's unit
        let with_unit;
        let v = match ctx.values.get(vi + 1) {
            Some(r)
                if pack.reference_range_discrimination
                    && v.kind == MentionKind::Quantitative
                    && v.unit.is_none()
                    && v.comparator.is_none()
                    && r.comparator.is_some()
                    && r.unit.is_some()
                    && ctx.tabular(v.span.start)
                    && text[v.span.end..r.span.start].chars().all(|c| matches!(c, ' ' | '\t' | '>' | '<')) =>
            {
                with_unit = ValueMention { unit: r.unit, ..v.clone() };
                &with_unit
            }
            _ => v,
        };

        let left = ctx.left_candidates(vi);
        let right = ctx
            .right_candidate(vi)
            .filter(|&mi| !taken[mi] && accepts(lex, &ctx.mentions[mi].concept_id, v));
        let chosen = if pack.nearest_concept_linking {
            let mut best: Option<(usize, u8, usize, PatternId)> = None;
            for &mi in &left {
                if taken[mi] {
                    continue;
                }
                if let Some(p) = ctx.left_pattern(mi, v) {
                    let cand = (v.span.start - ctx.mentions[mi].span.end, 0, mi, p);
                    if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                        best = Some(cand);
                    }
                }
            }
            if let Some(mi) = right {
                let cand = (ctx.mentions[mi].span.start - v.span.end, 1, mi, PatternId::SeverityFirst);
                if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                    best = Some(cand);
                }
            }
            best.map(|(_, _, mi, p)| (mi, p))
        } else if let Some(&mi) = left.first() {
            // greedy: the earliest concept in reach claims the value
            if taken[mi] {
                None
            } else {
                ctx.left_pattern(mi, v).map(|p| (mi, p))
            }
        } else {
            right.map(|mi| (mi, PatternId::SeverityFirst))
        };

        if let Some((mi, p)) = chosen {
            pairs.push(ctx.pair(mi, v, p));
            taken[mi] = true;
        } else if pack.coordinated_distribution
            && v.kind == MentionKind::Qualitative
            && coordinated_re().is_match(&text[report.line_bounds(v.span.start).start..v.span.start])
        {
            let line_start = report.line_bounds(v.span.start).start;
            for (mi, m) in ctx.mentions.iter().enumerate() {
                if taken[mi] || m.span.start < line_start || m.span.end > v.span.start {
                    continue;
                }
                if crosses_sentence(&text[m.span.end..v.span.start]) || !accepts(lex, &m.concept_id, v) {
                    continue;
                }
                pairs.push(ctx.pair(mi, v, PatternId::Coordinated));
                taken[mi] = true;
            }
        }
    }

    pairs.sort_by_key(|p| (p.concept_span.start, p.value.span.start));
    pairs
}

/// Keep, for each concept, the pair whose concept mention starts last
/// (impressions and later measurements override earlier ones).
pub fn select_final(pairs: &[ConceptValuePair]) -> BTreeMap<String, ConceptValuePair> {
    let mut out: BTreeMap<String, ConceptValuePair> = BTreeMap::new();
    for p in pairs {
        match out.get(&p.concept_id) {
            Some(prev) if prev.concept_span.start > p.concept_span.start => {}
            _ => {
                out.insert(p.concept_id.clone(), p.clone());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::segment_report;
    use crate::extractor::extract_report;
    use crate::units::Unit;

    fn robust() -> Lexicon {
        Lexicon::builtin().merge_rule_pack(&RulePack::robust()).unwrap()
    }

    fn finals(text: &str, lex: &Lexicon) -> BTreeMap<String, ConceptValuePair> {
        extract_report(&segment_report("t", "x", text), lex).final_pairs
    }

    #[test]
    fn semicolon_needs_pack() {
        let text = "Calculated left ventricular ejection fraction; 65 %";
        assert!(finals(text, &Lexicon::builtin()).is_empty());
        let f = finals(text, &robust());
        assert_eq!(f["left-ventricular-ejection-fraction"].value.value_min, Some(65.0));
    }

    #[test]
    fn reference_range_is_discriminated() {
        let text = "Aortic Valve Area 1.1 > 2.4 cm²\nMitral Valve Area > 3 cm²";
        let base = finals(text, &Lexicon::builtin());
        assert_eq!(base["aortic-valve-orifice-area"].value.value_min, Some(1.1));
        assert_eq!(base["mitral-valve-orifice-area"].value.value_min, Some(3.0));
        let rob = finals(text, &robust());
        assert_eq!(rob["aortic-valve-orifice-area"].value.value_min, Some(1.1));
        assert_eq!(rob["aortic-valve-orifice-area"].value.unit, Some(Unit::Cm2));
        assert!(!rob.contains_key("mitral-valve-orifice-area"));
    }

    #[test]
    fn sclerosis_without_stenosis() {
        let text = "Mitral valve sclerosis without stenosis.";
        assert!(finals(text, &Lexicon::builtin()).is_empty());
        let f = finals(text, &robust());
        let p = &f["mitral-valve-stenosis"];
        assert_eq!(p.value.qualitative_label, Some(Severity::No));
        assert_eq!(p.pattern_id, PatternId::NegationWithout);
        assert!(p.negated_source);
    }

    #[test]
    fn coordinated_normal() {
        let text = "Left ventricular size, systolic function, wall thickness, and wall motion are all normal.";
        let f = finals(text, &robust());
        let p = &f["left-ventricular-size"];
        assert_eq!(p.value.qualitative_label, Some(Severity::Normal));
        assert_eq!(p.pattern_id, PatternId::Coordinated);
        assert!(finals(text, &Lexicon::builtin()).is_empty());
    }

    #[test]
    fn cross_line_pressure() {
        let text = "Estimated right\natrial pressure: 8 mmHg.";
        assert!(finals(text, &Lexicon::builtin()).is_empty());
        assert_eq!(finals(text, &robust())["right-atrial-pressure"].value.value_min, Some(8.0));
    }

    #[test]
    fn copula_and_severity_first() {
        let f = finals("The left atrium is dilated. There is mild mitral regurgitation.", &robust());
        assert_eq!(f["left-atrium-size-end-systole"].value.qualitative_label, Some(Severity::Dilated));
        assert_eq!(f["left-atrium-size-end-systole"].pattern_id, PatternId::Copula);
        assert_eq!(f["mitral-valve-regurgitation"].pattern_id, PatternId::SeverityFirst);
    }

    #[test]
    fn later_mention_overrides() {
        let text = "There is mild mitral regurgitation.\nIMPRESSION:\nModerate mitral regurgitation.";
        let f = finals(text, &robust());
        assert_eq!(f["mitral-valve-regurgitation"].value.qualitative_label, Some(Severity::Moderate));
    }

    #[test]
    fn sentence_break_blocks_linking() {
        let f = finals("Normal LVEF. 12 mmHg was noted.", &robust());
        assert!(f.is_empty());
    }

    #[test]
    fn gap_helpers() {
        let pack = RulePack::baseline();
        assert!(separator_gap(": ", &pack));
        assert!(!separator_gap(";", &pack));
        assert!(!separator_gap(" \n", &pack));
        assert!(copula_gap(" is "));
        assert!(!copula_gap(" is not "));
        assert!(crosses_sentence("x. y"));
        assert!(!crosses_sentence("1.5"));
    }
}
