use crate::docmodel::{EchoReport, SectionKind, Span};
use crate::lexicon::{Lexicon, RulePack, TermSource};

use super::ConceptMention;

fn char_before(text: &str, at: usize) -> Option<char> {
    text[..at].chars().next_back()
}

fn char_after(text: &str, at: usize) -> Option<char> {
    text[at..].chars().next()
}

/// A match must start a word. With word-boundary matching it must also end
/// one; tolerant tokenization lets a digit follow ("open2.2").
fn boundaries_ok(text: &str, start: usize, end: usize, pack: &RulePack) -> bool {
    if char_before(text, start).is_some_and(|c| c.is_alphanumeric()) {
        return false;
    }
    if !pack.word_boundary_matching {
        return true;
    }
    match char_after(text, end) {
        Some(c) if c.is_ascii_digit() => pack.tolerant_tokenization,
        Some(c) => !c.is_alphanumeric(),
        None => true,
    }
}

/// Find concept mentions in document order. Overlapping candidates are
/// resolved longest-first.
pub fn identify_concepts(report: &EchoReport, lex: &Lexicon) -> Vec<ConceptMention> {
    let pack = lex.active_pack();
    let text = report.raw_text.as_str();
    let mut candidates: Vec<(Span, usize)> = Vec::new();

    for (entry_idx, entry) in lex.term_entries().iter().enumerate() {
        if entry.source == TermSource::Trap && pack.word_boundary_matching {
            continue;
        }
        let re = if pack.cross_line_linking {
            &entry.cross_line
        } else {
            &entry.same_line
        };
        let mut at = 0;
        while at <= text.len() {
            let Some(m) = re.find_at(text, at) else { break };
            if !m.is_empty() && boundaries_ok(text, m.start(), m.end(), pack) {
                candidates.push((Span::new(m.start(), m.end()), entry_idx));
            }
            at = m.start() + char_after(text, m.start()).map_or(1, char::len_utf8);
        }
    }

    candidates.sort_by(|a, b| {
        b.0.len()
            .cmp(&a.0.len())
            .then(a.0.start.cmp(&b.0.start))
            .then(a.1.cmp(&b.1))
    });
    let mut chosen: Vec<(Span, usize)> = Vec::new();
    for cand in candidates {
        if chosen.iter().all(|(s, _)| !s.overlaps(&cand.0)) {
            chosen.push(cand);
        }
    }
    chosen.sort_by_key(|(s, _)| (s.start, s.end));

    let entries = lex.term_entries();
    chosen
        .into_iter()
        .map(|(span, idx)| {
            let entry = &entries[idx];
            ConceptMention {
                concept_id: lex.concepts()[entry.concept_index].concept_id.clone(),
                span,
                matched_phrase: text[span.start..span.end].to_string(),
                section_kind: report.kind_at(span.start).unwrap_or(SectionKind::Narrative),
                source: entry.source,
            }
        })
        .collect()
}
