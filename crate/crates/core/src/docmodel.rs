//! Report text to section-typed document model.
//!
//! Offsets are byte offsets into the newline-normalized report text, so any
//! span can slice `raw_text` directly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Manifest {
        source_name: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectionKind {
    Metadata,
    Tabular,
    Narrative,
    Impression,
}

impl SectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SectionKind::Metadata => "metadata",
            SectionKind::Tabular => "tabular",
            SectionKind::Narrative => "narrative",
            SectionKind::Impression => "impression",
        }
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub text: String,
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub kind: SectionKind,
    pub start_offset: usize,
    pub end_offset: usize,
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EchoReport {
    pub report_id: String,
    pub site_tag: String,
    pub raw_text: String,
    pub sections: Vec<Section>,
}

impl EchoReport {
    pub fn section_at(&self, offset: usize) -> Option<&Section> {
        let idx = self.sections.partition_point(|s| s.end_offset < offset);
        self.sections
            .get(idx)
            .filter(|s| s.start_offset <= offset && offset <= s.end_offset)
    }

    pub fn kind_at(&self, offset: usize) -> Option<SectionKind> {
        self.section_at(offset).map(|s| s.kind)
    }

    /// Byte range of the line containing `offset` (newline excluded).
    pub fn line_bounds(&self, offset: usize) -> Span {
        let text = &self.raw_text;
        let start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
        let end = text[offset.min(text.len())..]
            .find('\n')
            .map_or(text.len(), |i| offset + i);
        Span::new(start, end)
    }
}

/// Convert CRLF and lone CR line endings to `\n`.
pub fn normalize_newlines(text: &str) -> String {
    text.replace("\r\n", "\n").replace('\r', "\n")
}

const CELL: &str = r"(?:(?:[<>]=?|[≥≤]|\?)[ \t]*)?\d+(?:\.\d+)?(?:[ \t]*[-–][ \t]*\d+(?:\.\d+)?)?(?:[ \t]*(?:cm²|cm2|mmHg|mm Hg|m/s|mm|cm|%))?";

fn label_value_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(
            r"^[A-Za-z][^\d\n]{{0,59}}?[ \t:;=]*{CELL}(?:[ \t]*{CELL})*[ \t]*;?$"
        ))
        .unwrap()
    })
}

fn columns_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\S(?:[ ]{2,}|\t)[ \t]*\S").unwrap())
}

fn metadata_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z][A-Za-z0-9 #/().'-]{0,30}:[ \t]*\S").unwrap())
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z][A-Za-z &/]{0,40}:?$").unwrap())
}

fn impression_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)impression|conclusion|summary").unwrap())
}

fn impression_lead_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(?:final\s+)?(?:impressions?|conclusions?|summary)\s*:").unwrap()
    })
}

const CLINICAL_WORDS: [&str; 17] = [
    "valve", "ventric", "atri", "ejection", "regurg", "stenosis", "septum", "aort", "mitral",
    "tricusp", "pulmon", "gradient", "velocity", "lvef", "pressure", "dimension", "wall",
];

/// Label-value(-reference) shape, or aligned columns around a number.
pub fn is_tabular_line(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() {
        return false;
    }
    if label_value_re().is_match(t) {
        return true;
    }
    columns_re().is_match(t) && t.bytes().any(|b| b.is_ascii_digit())
}

fn is_metadata_line(line: &str) -> bool {
    let t = line.trim();
    if !metadata_re().is_match(t) {
        return false;
    }
    let lower = t.to_ascii_lowercase();
    !CLINICAL_WORDS.iter().any(|w| lower.contains(w))
}

fn is_header_line(line: &str) -> bool {
    let t = line.trim();
    if !header_re().is_match(t) {
        return false;
    }
    t.ends_with(':') || t.chars().filter(|c| c.is_alphabetic()).all(|c| c.is_uppercase())
}

/// Split a report into metadata, tabular, narrative and impression
/// sections. Whitespace-only input yields zero sections.
pub fn segment_report(report_id: &str, site_tag: &str, raw_text: &str) -> EchoReport {
    let text = normalize_newlines(raw_text);
    let mut lines: Vec<(usize, &str)> = Vec::new();
    let mut pos = 0;
    for piece in text.split('\n') {
        lines.push((pos, piece));
        pos += piece.len() + 1;
    }

    let mut kinds: Vec<Option<SectionKind>> = Vec::with_capacity(lines.len());
    let mut leading = true;
    let mut in_impression = false;
    for &(_, line) in &lines {
        if line.trim().is_empty() {
            kinds.push(None);
            continue;
        }
        if leading && is_metadata_line(line) {
            kinds.push(Some(SectionKind::Metadata));
            continue;
        }
        leading = false;
        let kind = if is_header_line(line) {
            in_impression = impression_re().is_match(line);
            if in_impression {
                SectionKind::Impression
            } else {
                SectionKind::Narrative
            }
        } else if impression_lead_re().is_match(line.trim_start()) {
            in_impression = true;
            SectionKind::Impression
        } else if is_tabular_line(line) {
            SectionKind::Tabular
        } else if in_impression {
            SectionKind::Impression
        } else {
            SectionKind::Narrative
        };
        kinds.push(Some(kind));
    }

    let mut sections: Vec<Section> = Vec::new();
    let mut prev: Option<SectionKind> = None;
    for (&(start, line), kind) in lines.iter().zip(&kinds) {
        match kind {
            None => prev = None,
            Some(k) => {
                let end = start + line.len();
                let entry = Line {
                    text: line.to_string(),
                    start,
                };
                match sections.last_mut() {
                    Some(s) if prev == Some(*k) => {
                        s.end_offset = end;
                        s.lines.push(entry);
                    }
                    _ => sections.push(Section {
                        kind: *k,
                        start_offset: start,
                        end_offset: end,
                        lines: vec![entry],
                    }),
                }
                prev = Some(*k);
            }
        }
    }

    EchoReport {
        report_id: report_id.to_string(),
        site_tag: site_tag.to_string(),
        raw_text: text,
        sections,
    }
}

/// One row of a corpus manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub report_id: String,
    pub site_tag: String,
    pub relative_path: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const MANIFEST_HEADER: &str = "report_id\tsite_tag\trelative_path";

pub fn parse_manifest(source_name: &str, text: &str) -> Result<Vec<ManifestEntry>, DocError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (idx == 0 && line == MANIFEST_HEADER) {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.trim().is_empty()) {
            return Err(DocError::Manifest {
                source_name: source_name.to_string(),
                line: idx + 1,
                message: format!("expected report_id, site_tag, relative_path; got {} fields", fields.len()),
            });
        }
        if out.iter().any(|e: &ManifestEntry| e.report_id == fields[0]) {
            return Err(DocError::Manifest {
                source_name: source_name.to_string(),
                line: idx + 1,
                message: format!("duplicate report id `{}`", fields[0]),
            });
        }
        out.push(ManifestEntry {
            report_id: fields[0].to_string(),
            site_tag: fields[1].to_string(),
            relative_path: PathBuf::from(fields[2]),
        });
    }
    Ok(out)
}

pub fn manifest_string(entries: &[ManifestEntry]) -> String {
    let mut out = format!("{MANIFEST_HEADER}\n");
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            e.report_id,
            e.site_tag,
            e.relative_path.display()
        ));
    }
    out
}

/// Read `manifest.tsv` under `dir` and segment every listed report, in
/// manifest order.
pub fn load_corpus(dir: &Path) -> Result<Vec<EchoReport>, DocError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = read(&manifest_path)?;
    let entries = parse_manifest(&manifest_path.display().to_string(), &text)?;
    entries
        .iter()
        .map(|e| {
            let body = read(&dir.join(&e.relative_path))?;
            Ok(segment_report(&e.report_id, &e.site_tag, &body))
        })
        .collect()
}

fn read(path: &Path) -> Result<String, DocError> {
    std::fs::read_to_string(path).map_err(|source| DocError::Io {
        path: path.display().to_string(),
        source,
    })
}
