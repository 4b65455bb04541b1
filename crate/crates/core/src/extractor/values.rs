use std::sync::OnceLock;

use regex::Regex;

use crate::docmodel::{EchoReport, Span};
use crate::severity;
use crate::units::Unit;

use super::{Comparator, ValueMention};

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?P<pre>(?:[<>]=?|[≥≤])[ \t]*|\?[ \t]*)?(?P<a>\d+(?:\.\d+)?)(?:[ \t]*[-–][ \t]*(?P<b>\d+(?:\.\d+)?))?(?:[ \t]*(?P<unit>cm²|cm2|cm\^2|mmHg|mm[ \t]Hg|m/s|mm|cm|%))?",
        )
        .unwrap()
    })
}

fn prev_char(text: &str, at: usize) -> Option<char> {
    text[..at].chars().next_back()
}

fn next_char(text: &str, at: usize) -> Option<char> {
    text[at..].chars().next()
}

/// Digits continuing past the match ("1.2.3") make the token malformed.
fn continues_number(text: &str, at: usize) -> bool {
    let rest = &text[at..];
    let mut chars = rest.chars();
    matches!((chars.next(), chars.next()), (Some('.'), Some(d)) if d.is_ascii_digit())
}

fn scan_numbers(text: &str) -> Vec<ValueMention> {
    let mut out = Vec::new();
    let mut at = 0;
    while let Some(caps) = number_re().captures_at(text, at) {
        let whole = caps.get(0).unwrap();
        let a = caps.name("a").unwrap();
        let pre = caps.name("pre");
        at = whole.end();

        // tail of a malformed token such as the ".3" in "1.2.3"
        if text[..a.start()].ends_with('.')
            && prev_char(text, a.start() - 1).is_some_and(|c| c.is_ascii_digit())
        {
            continue;
        }
        let Ok(min) = a.as_str().parse::<f64>() else { continue };
        let mut end = a.end();
        let mut max = min;
        if let Some(b) = caps.name("b") {
            match b.as_str().parse::<f64>() {
                Ok(v) if v >= min => {
                    max = v;
                    end = b.end();
                }
                // descending pair: keep the first number, rescan the rest
                _ => at = a.end(),
            }
        }
        if continues_number(text, end) {
            at = at.max(end + 1);
            continue;
        }
        let mut unit = None;
        if let Some(u) = caps.name("unit") {
            let joined = u.start() >= end && text[end..u.start()].trim().is_empty();
            if joined && !next_char(text, u.end()).is_some_and(char::is_alphabetic) {
                unit = Unit::from_text(u.as_str());
                end = u.end();
            }
        }

        let start = pre.map_or(a.start(), |p| p.start());
        let prefix = pre.map(|p| p.as_str().trim()).unwrap_or("");
        let comparator = match prefix {
            ">" | ">=" | "≥" => Some(Comparator::GreaterThan),
            "<" | "<=" | "≤" => Some(Comparator::LessThan),
            _ => None,
        };
        let attached = pre.is_none() && prev_char(text, a.start()).is_some_and(char::is_alphabetic);
        let mut v = ValueMention::quantitative(Span::new(start, end), min, max, unit);
        v.comparator = comparator;
        v.uncertain = prefix == "?";
        v.attached = attached;
        out.push(v);
    }
    out
}

/// Find numeric and qualitative value mentions, in document order.
/// Malformed numerics are skipped.
pub fn identify_values(report: &EchoReport) -> Vec<ValueMention> {
    let text = report.raw_text.as_str();
    let mut out = scan_numbers(text);
    out.extend(severity::scan(text).into_iter().map(|q| {
        let mut v = ValueMention::qualitative(Span::new(q.start, q.end), q.label);
        v.qualifier = q.qualifier;
        v
    }));
    out.sort_by_key(|v| (v.span.start, v.span.end));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::docmodel::segment_report;
    use crate::extractor::MentionKind;
    use crate::severity::Severity;

    fn values(text: &str) -> Vec<ValueMention> {
        identify_values(&segment_report("t", "x", text))
    }

    #[test]
    fn comparator_is_captured_and_number_kept() {
        let v = &values(">55")[0];
        assert_eq!((v.value_min, v.value_max), (Some(55.0), Some(55.0)));
        assert_eq!(v.comparator, Some(Comparator::GreaterThan));
    }

    #[test]
    fn uncertain_range() {
        let v = &values("?55-70")[0];
        assert_eq!((v.value_min, v.value_max), (Some(55.0), Some(70.0)));
        assert!(v.uncertain);
        assert!(v.comparator.is_none());
    }

    #[test]
    fn unit_after_space() {
        let v = &values("Aortic valve systolic mean Doppler gradient 12 mmHg;")[0];
        assert_eq!(v.value_min, Some(12.0));
        assert_eq!(v.unit, Some(Unit::MmHg));
    }

    #[test]
    fn trace_is_qualitative() {
        let vs = values("There is trace mitral regurgitation");
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].kind, MentionKind::Qualitative);
        assert_eq!(vs[0].qualitative_label, Some(Severity::Trace));
        assert!(vs[0].value_min.is_none());
    }

    #[test]
    fn spaced_range_and_superscript_unit() {
        let v = &values("Ejection Fraction 0.55 - 0.75")[0];
        assert_eq!((v.value_min, v.value_max), (Some(0.55), Some(0.75)));
        let v = &values("AoVA 1.2-1.9cm²)")[0];
        assert_eq!((v.value_min, v.value_max, v.unit), (Some(1.2), Some(1.9), Some(Unit::Cm2)));
    }

    #[test]
    fn reference_row_yields_two_values() {
        let vs = values("Aortic Valve Area 1.1 > 2.4 cm²");
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].value_min, Some(1.1));
        assert!(vs[0].unit.is_none());
        assert_eq!(vs[1].value_min, Some(2.4));
        assert_eq!(vs[1].comparator, Some(Comparator::GreaterThan));
        assert_eq!(vs[1].unit, Some(Unit::Cm2));
    }

    #[test]
    fn glued_number_is_flagged() {
        let v = &values("Ao valve open2.2 cm")[0];
        assert!(v.attached);
        assert_eq!(v.value_min, Some(2.2));
        assert_eq!(v.unit, Some(Unit::Cm));
    }

    #[test]
    fn descending_pair_is_not_a_range() {
        let vs = values("Date 2015-03");
        let nums: Vec<f64> = vs.iter().filter_map(|v| v.value_min).collect();
        assert_eq!(nums, [2015.0, 3.0]);
        assert!(vs.iter().all(|v| v.value_min <= v.value_max));
    }

    #[test]
    fn malformed_numbers_are_skipped() {
        let vs = values("version 1.2.3 then 7");
        let nums: Vec<f64> = vs.iter().filter_map(|v| v.value_min).collect();
        assert_eq!(nums, [7.0]);
    }

    #[test]
    fn unit_requires_word_end() {
        let v = &values("4 mmol")[0];
        assert!(v.unit.is_none());
        assert_eq!(&"4 mmol"[v.span.start..v.span.end], "4");
    }

    #[test]
    fn compound_severity() {
        let vs = values("LV function is mildly to moderately reduced.");
        assert_eq!(vs[0].qualitative_label, Some(Severity::MildToModerate));
        assert_eq!(vs[0].qualifier, Some(Severity::Reduced));
    }
}
