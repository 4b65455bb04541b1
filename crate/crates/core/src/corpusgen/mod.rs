//! Deterministic synthetic echo reports with closed-world gold annotations.
//!
//! Each report is assembled from data-driven templates (`data/templates.tsv`)
//! into a site-specific skeleton. Quirk templates reproduce known formatting
//! hazards; the gold always records the intended truth regardless of how the
//! sentence was perturbed.

pub mod profile;
pub mod rng;
pub mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

pub use profile::{SiteProfile, EVALUATED, QUIRK_IDS, REPORT_LEVEL_QUIRKS, SITES};
pub use rng::SplitMix64;
pub use templates::{ConceptValueSpec, Style, Template, TemplateLibrary, ValueType};

use crate::docmodel::{manifest_string, segment_report, EchoReport, ManifestEntry};
use crate::evaluator::{gold_tsv, ExpectedValue, GoldAnnotation};
use crate::severity::Severity;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown quirk `{0}`")]
    UnknownQuirk(String),
    #[error("report count must be at least 1")]
    EmptyCorpus,
    #[error("invalid profile: {0}")]
    Profile(String),
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// One Bernoulli draw for a quirk, kept so rates can be audited.
#[derive(Debug, Clone, PartialEq)]
pub struct QuirkDraw {
    pub quirk_id: String,
    pub concept_id: String,
    pub hit: bool,
}

/// The emitted fragment that backs a gold row (reverse index).
#[derive(Debug, Clone, PartialEq)]
pub struct Evidence {
    pub concept_id: String,
    pub template_id: String,
    pub fragment: String,
    /// Value text exactly as written into the fragment.
    pub value_text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedReport {
    pub report: EchoReport,
    /// One row per evaluated concept.
    pub gold: Vec<GoldAnnotation>,
    /// (quirk_id, concept_id) for every perturbation actually emitted;
    /// report-level quirks use an empty concept id.
    pub applied_quirks: Vec<(String, String)>,
    pub quirk_draws: Vec<QuirkDraw>,
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuirkInfo {
    pub quirk_id: &'static str,
    pub description: &'static str,
    pub example_sentence: &'static str,
}

pub fn quirk_catalog() -> Vec<QuirkInfo> {
    let q = |quirk_id, description, example_sentence| QuirkInfo {
        quirk_id,
        description,
        example_sentence,
    };
    vec![
        q(
            "reference_only_row",
            "table row carries only the reference value; the concept was not measured",
            "Aortic Valve Area > 2.40 cm²",
        ),
        q(
            "reference_range_tabular",
            "table row prints the measured value followed by its reference value",
            "Aortic Valve Area 1.1 > 2.4 cm²",
        ),
        q(
            "semicolon_separator",
            "semicolon used where a colon separates concept and value",
            "Calculated left ventricular ejection fraction; 65 %",
        ),
        q(
            "sclerosis_without_stenosis",
            "stenosis negated by a 'sclerosis without stenosis' phrase",
            "Mitral valve sclerosis without stenosis",
        ),
        q(
            "doppler_insertion",
            "extra words inside the concept term",
            "Aortic valve systolic mean Doppler gradient 12 mmHg;",
        ),
        q(
            "abbreviated_table_label",
            "partly abbreviated table label",
            "LV Size-end systole   3.2 cm",
        ),
        q("missing_space", "no space between label and value", "Ao valve open2.2 cm"),
        q(
            "cross_line_concept",
            "line break inside the concept term",
            "Estimated right\natrial pressure: 8 mmHg.",
        ),
        q(
            "compound_normal_sentence",
            "several findings share one trailing assessment",
            "Left ventricular size, systolic function, wall thickness, and wall motion are all normal.",
        ),
        q(
            "free_text_only",
            "report has no tabular or semi-structured section",
            "The left atrium is dilated. There is trace mitral regurgitation.",
        ),
        q(
            "adjacent_concepts",
            "two concepts and their values share one short phrase",
            "Mild AS (AoVA 1.2-1.9cm²).",
        ),
        q(
            "ea_ratio_row",
            "E:A ratio row that a loose matcher confuses with E/e'",
            "Mitral E:A Rt 2",
        ),
    ]
}

const FILLERS: [&str; 5] = [
    "There is no pericardial effusion.",
    "The interatrial septum is intact.",
    "The aortic root is normal in size.",
    "Prior study available for comparison.",
    "The inferior vena cava is of normal caliber.",
];

const SURNAMES: [&str; 8] = ["Rivera", "Chen", "Okafor", "Novak", "Haddad", "Larsen", "Moreau", "Singh"];
const GIVEN: [&str; 8] = ["Maria", "James", "Lena", "Omar", "Grace", "Tomas", "Priya", "Daniel"];

fn severity_phrase(label: Severity) -> &'static str {
    match label {
        Severity::MildToModerate => "mild to moderate",
        Severity::ModerateToSevere => "moderate to severe",
        other => other.as_str(),
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn draw_number(rng: &mut SplitMix64, spec: &ConceptValueSpec) -> (String, f64) {
    let k = rng.range_inclusive(spec.min_scaled, spec.max_scaled);
    let scale = 10f64.powi(spec.decimals as i32);
    let text = format!("{:.*}", spec.decimals, k as f64 / scale);
    let value = text.parse().expect("formatted number parses");
    (text, value)
}

fn draw_range(rng: &mut SplitMix64, spec: &ConceptValueSpec) -> ((String, f64), (String, f64)) {
    let a = draw_number(rng, spec);
    let mut b = draw_number(rng, spec);
    // a handful of retries; a one-value range falls back to a widened upper end
    for _ in 0..8 {
        if b.1 != a.1 {
            break;
        }
        b = draw_number(rng, spec);
    }
    if b.1 == a.1 {
        let bumped = a.1 + 10f64.powi(-(spec.decimals as i32));
        let text = format!("{:.*}", spec.decimals, bumped);
        b = (text.clone(), text.parse().unwrap());
    }
    if a.1 < b.1 {
        (a, b)
    } else {
        (b, a)
    }
}

struct Emitted {
    tabular: Vec<String>,
    narrative: Vec<String>,
    impression: Vec<String>,
}

impl Emitted {
    fn push(&mut self, style: Style, text: String) {
        match style {
            Style::Tabular => self.tabular.push(text),
            Style::Narrative => self.narrative.push(text),
            Style::Impression => self.impression.push(text),
        }
    }
}

struct ReportBuilder<'a> {
    profile: &'a SiteProfile,
    lib: &'a TemplateLibrary,
    free_text: bool,
    emitted: Emitted,
    gold: BTreeMap<String, ExpectedValue>,
    done: BTreeSet<String>,
    applied: Vec<(String, String)>,
    draws: Vec<QuirkDraw>,
    evidence: Vec<Evidence>,
}

impl ReportBuilder<'_> {
    fn eligible(&self, concept: &str, quirk: Option<&str>) -> Vec<&Template> {
        let site = self.profile.site_tag.as_str();
        self.lib
            .templates
            .iter()
            .filter(|t| {
                t.concept_id == concept
                    && t.for_site(site)
                    && t.quirk.as_deref() == quirk
                    && !(self.free_text && t.style == Style::Tabular)
            })
            .collect()
    }

    fn draw(&mut self, rng: &mut SplitMix64, quirk: &str, concept: &str, p: f64) -> bool {
        let hit = rng.chance(p);
        self.draws.push(QuirkDraw {
            quirk_id: quirk.to_string(),
            concept_id: concept.to_string(),
            hit,
        });
        hit
    }

    fn pick_label(rng: &mut SplitMix64, spec: &ConceptValueSpec, allow_no: bool) -> Option<Severity> {
        let labels: Vec<Severity> = spec
            .severities
            .iter()
            .copied()
            .filter(|&l| allow_no || l != Severity::No)
            .collect();
        (!labels.is_empty()).then(|| *rng.pick(&labels))
    }

    fn emit_concept(&mut self, rng: &mut SplitMix64, concept: &str) {
        let Some(spec) = self.lib.value_spec(concept) else { return };
        // a mention is an opportunity for each quirk in precedence order until
        // one applies; quirks with no template here are never drawn
        let mut chosen_quirk = None;
        for (q, p) in self.profile.concept_quirks(concept) {
            if self.eligible(concept, Some(q)).is_empty() {
                continue;
            }
            if self.draw(rng, q, concept, p) {
                chosen_quirk = Some(q);
                break;
            }
        }

        let (template, mut label) = match chosen_quirk {
            Some(q) => {
                let cands = self.eligible(concept, Some(q));
                ((*rng.pick(&cands)).clone(), None)
            }
            None => {
                let qualitative = spec.qual_share > 0.0 && rng.chance(spec.qual_share);
                let (label, types): (Option<Severity>, &[ValueType]) = if qualitative {
                    let l = Self::pick_label(rng, spec, true);
                    match l {
                        Some(Severity::No) => (l, &[ValueType::No]),
                        _ => (l, &[ValueType::Qual]),
                    }
                } else {
                    (None, &[ValueType::Quant, ValueType::Range])
                };
                let cands: Vec<&Template> = self
                    .eligible(concept, None)
                    .into_iter()
                    .filter(|t| types.contains(&t.value_type))
                    .collect();
                if cands.is_empty() {
                    return;
                }
                ((*rng.pick(&cands)).clone(), label)
            }
        };

        let mut text = template.text.clone();
        let mut value_text = String::new();
        let expected = match template.value_type {
            ValueType::Quant => {
                let (s, v) = draw_number(rng, spec);
                text = text.replace("{value}", &s);
                value_text = s;
                Some(ExpectedValue::quantitative(v, v, template.unit))
            }
            ValueType::Range => {
                let ((ls, lo), (hs, hi)) = draw_range(rng, spec);
                text = text.replace("{lo}", &ls).replace("{hi}", &hs);
                value_text = format!("{ls}-{hs}");
                Some(ExpectedValue::quantitative(lo, hi, template.unit))
            }
            ValueType::Qual => {
                if label.is_none() {
                    label = Self::pick_label(rng, spec, false);
                }
                label.map(ExpectedValue::qualitative)
            }
            ValueType::No => Some(ExpectedValue::qualitative(Severity::No)),
            ValueType::Normal => Some(ExpectedValue::qualitative(Severity::Normal)),
            ValueType::None => {
                if text.contains("{value}") {
                    let k = rng.range_inclusive(5, 25);
                    text = text.replace("{value}", &format!("{:.1}", k as f64 / 10.0));
                }
                None
            }
        };

        // the severity slot belongs to the companion when there is one
        let mut companion_gold = None;
        if let Some(comp) = &template.companion {
            let comp_label = self
                .lib
                .value_spec(comp)
                .and_then(|s| Self::pick_label(rng, s, false));
            if let Some(l) = comp_label {
                companion_gold = Some((comp.clone(), l));
                label = Some(l);
            }
        }
        if let Some(l) = label {
            let phrase = severity_phrase(l);
            text = text.replace("{sev}", phrase).replace("{Sev}", &capitalize(phrase));
            if template.value_type != ValueType::Range && value_text.is_empty() {
                value_text = phrase.to_string();
            }
        }
        for v in [ValueType::No, ValueType::Normal] {
            if template.value_type == v && value_text.is_empty() {
                value_text = if v == ValueType::No { "without".into() } else { "normal".into() };
            }
        }
        if template.value_type == ValueType::No && !text.contains("without") {
            value_text = if text.starts_with("No ") { "No".into() } else { "no".into() };
        }

        if let Some(q) = chosen_quirk {
            self.applied.push((q.to_string(), concept.to_string()));
        }
        if let Some(e) = expected {
            self.gold.insert(concept.to_string(), e);
            self.evidence.push(Evidence {
                concept_id: concept.to_string(),
                template_id: template.template_id.clone(),
                fragment: text.clone(),
                value_text,
            });
        }
        if let Some((comp, l)) = companion_gold {
            self.gold.insert(comp.clone(), ExpectedValue::qualitative(l));
            self.evidence.push(Evidence {
                concept_id: comp.clone(),
                template_id: template.template_id.clone(),
                fragment: text.clone(),
                value_text: capitalize(severity_phrase(l)),
            });
            self.done.insert(comp);
        }
        self.done.insert(concept.to_string());
        self.emitted.push(template.style, text);
    }
}

fn date(rng: &mut SplitMix64) -> String {
    format!(
        "{:02}/{:02}/{}",
        rng.range_inclusive(1, 12),
        rng.range_inclusive(1, 28),
        rng.range_inclusive(2005, 2018)
    )
}

fn paragraphs(rng: &mut SplitMix64, sentences: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sentences.len() {
        let take = rng.range_inclusive(2, 3) as usize;
        let end = (i + take).min(sentences.len());
        out.push(sentences[i..end].join(" "));
        i = end;
    }
    out
}

fn assemble(site: &str, rng: &mut SplitMix64, e: &Emitted) -> String {
    let mut lines: Vec<String> = Vec::new();
    let section = |lines: &mut Vec<String>, header: &str, body: &[String]| {
        if body.is_empty() {
            return;
        }
        if !lines.is_empty() {
            lines.push(String::new());
        }
        lines.push(header.to_string());
        lines.extend(body.iter().cloned());
    };
    match site {
        "wcm" => {
            lines.push(format!("Patient: {}, {}", rng.pick(&SURNAMES), rng.pick(&GIVEN)));
            lines.push(format!("Patient ID: {}", rng.range_inclusive(100_000, 999_999)));
            lines.push(format!("Study Date: {}", date(rng)));
            lines.push("Study: Transthoracic echocardiogram".to_string());
            section(&mut lines, "MEASUREMENTS", &e.tabular);
            section(&mut lines, "FINDINGS", &e.narrative);
            section(&mut lines, "IMPRESSION:", &e.impression);
        }
        "mayo" => {
            lines.push(format!("Patient ID: {}", rng.range_inclusive(100_000, 999_999)));
            lines.push(format!("Exam Date: {}", date(rng)));
            section(&mut lines, "Findings:", &[&e.tabular[..], &e.narrative[..]].concat());
            let numbered: Vec<String> = e
                .impression
                .iter()
                .enumerate()
                .map(|(i, s)| format!("{}. {s}", i + 1))
                .collect();
            section(&mut lines, "Final Impressions:", &numbered);
        }
        "nw" => {
            section(&mut lines, "Measurements:", &e.tabular);
            section(&mut lines, "Findings:", &e.narrative);
            section(&mut lines, "SUMMARY:", &e.impression);
        }
        _ => {
            let body = paragraphs(rng, &[&e.tabular[..], &e.narrative[..]].concat());
            section(&mut lines, "Findings:", &body);
            let conclusions = paragraphs(rng, &e.impression);
            section(&mut lines, "Conclusions:", &conclusions);
        }
    }
    if lines.is_empty() {
        lines.push("Findings:".to_string());
        lines.push(FILLERS[0].to_string());
    }
    let mut text = lines.join("\n");
    text.push('\n');
    text
}

fn generate_report(index: usize, profile: &SiteProfile, lib: &TemplateLibrary, rng: &mut SplitMix64) -> GeneratedReport {
    let site = profile.site_tag.as_str();
    let report_id = format!("{site}-{:04}", index + 1);
    let mut b = ReportBuilder {
        profile,
        lib,
        free_text: false,
        emitted: Emitted {
            tabular: Vec::new(),
            narrative: Vec::new(),
            impression: Vec::new(),
        },
        gold: BTreeMap::new(),
        done: BTreeSet::new(),
        applied: Vec::new(),
        draws: Vec::new(),
        evidence: Vec::new(),
    };

    if let Some(p) = profile.quirk_rate("free_text_only", "") {
        if b.draw(rng, "free_text_only", "", p) {
            b.free_text = true;
            b.applied.push(("free_text_only".to_string(), String::new()));
        }
    }
    // free-text sites never get tables
    b.free_text |= site == "mimic";

    for concept in EVALUATED {
        if b.done.contains(concept) {
            continue;
        }
        let f = profile.concept_frequencies.get(concept).copied().unwrap_or(0.0);
        if rng.chance(f) {
            b.emit_concept(rng, concept);
        }
    }

    const EE: &str = "e-e-prime-ratio";
    if let Some(p) = profile.quirk_rate("ea_ratio_row", "") {
        let cands: Vec<Template> = b.eligible(EE, Some("ea_ratio_row")).into_iter().cloned().collect();
        if !b.done.contains(EE) && !cands.is_empty() && b.draw(rng, "ea_ratio_row", "", p) {
            {
                let t = rng.pick(&cands).clone();
                let k = rng.range_inclusive(5, 25);
                let text = t.text.replace("{value}", &format!("{:.1}", k as f64 / 10.0));
                b.emitted.push(t.style, text);
                b.applied.push(("ea_ratio_row".to_string(), String::new()));
            }
        }
    }

    for filler in FILLERS {
        if rng.chance(0.3) {
            let at = rng.below(b.emitted.narrative.len() as u64 + 1) as usize;
            b.emitted.narrative.insert(at, filler.to_string());
        }
    }

    let raw = assemble(site, rng, &b.emitted);
    let gold = EVALUATED
        .iter()
        .map(|&c| match b.gold.get(c) {
            Some(e) => GoldAnnotation::present(&report_id, c, e.clone()),
            None => GoldAnnotation::absent(&report_id, c),
        })
        .collect();
    GeneratedReport {
        report: segment_report(&report_id, site, &raw),
        gold,
        applied_quirks: b.applied,
        quirk_draws: b.draws,
        evidence: b.evidence,
    }
}

/// Generate `n` reports with the shipped template library.
pub fn generate_corpus(profile: &SiteProfile, n: usize, seed: u64) -> Result<Vec<GeneratedReport>, CorpusError> {
    generate_corpus_with(profile, n, seed, &TemplateLibrary::builtin())
}

pub fn generate_corpus_with(
    profile: &SiteProfile,
    n: usize,
    seed: u64,
    lib: &TemplateLibrary,
) -> Result<Vec<GeneratedReport>, CorpusError> {
    if n == 0 {
        return Err(CorpusError::EmptyCorpus);
    }
    profile.validate()?;
    let mut rng = SplitMix64::for_corpus(seed, &profile.site_tag);
    Ok((0..n).map(|i| generate_report(i, profile, lib, &mut rng)).collect())
}

pub const QUIRKS_HEADER: &str = "report_id\tquirk_id\tconcept_id";

pub fn quirks_tsv(reports: &[GeneratedReport]) -> String {
    let mut out = format!("{QUIRKS_HEADER}\n");
    for r in reports {
        for (q, c) in &r.applied_quirks {
            out.push_str(&format!("{}\t{q}\t{c}\n", r.report.report_id));
        }
    }
    out
}

/// Every file of an on-disk corpus as (relative path, contents), in a
/// fixed order.
pub fn corpus_files(reports: &[GeneratedReport]) -> Vec<(PathBuf, String)> {
    let entries: Vec<ManifestEntry> = reports
        .iter()
        .map(|r| ManifestEntry {
            report_id: r.report.report_id.clone(),
            site_tag: r.report.site_tag.clone(),
            relative_path: PathBuf::from("reports").join(format!("{}.txt", r.report.report_id)),
        })
        .collect();
    let mut files = vec![(PathBuf::from(crate::docmodel::MANIFEST_FILE), manifest_string(&entries))];
    for (e, r) in entries.iter().zip(reports) {
        files.push((e.relative_path.clone(), r.report.raw_text.clone()));
    }
    let gold: Vec<GoldAnnotation> = reports.iter().flat_map(|r| r.gold.iter().cloned()).collect();
    files.push((PathBuf::from("gold.tsv"), gold_tsv(&gold)));
    files.push((PathBuf::from("quirks.tsv"), quirks_tsv(reports)));
    files
}
