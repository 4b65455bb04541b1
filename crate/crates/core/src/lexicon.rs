//! Concept dictionary and site rule packs.
//!
//! A [`Lexicon`] holds the target concepts with their lookup phrases and the
//! [`RulePack`] currently in force. Packs add site-specific phrases and switch
//! linking rules on or off; merging never mutates the input lexicon.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use regex::Regex;
use thiserror::Error;

/// Shipped concept dictionary (24 evaluated concepts plus 3 optional ones).
pub const DEFAULT_LEXICON: &str = include_str!("../data/default.lexicon");

/// Site rule packs shipped with the crate, keyed by site tag.
pub const BUILTIN_PACKS: [(&str, &str); 4] = [
    ("wcm", include_str!("../data/packs/wcm.pack")),
    ("mayo", include_str!("../data/packs/mayo.pack")),
    ("nw", include_str!("../data/packs/nw.pack")),
    ("mimic", include_str!("../data/packs/mimic.pack")),
];

/// Unit strings accepted in the `units` column of a lexicon file.
pub const KNOWN_UNITS: [&str; 7] = ["cm", "cm2", "mmHg", "%", "m/s", "mm", "ratio-unitless"];

/// Default concept-to-value distance bound, in bytes of report text.
pub const DEFAULT_LINK_WINDOW: usize = 60;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate concept id `{0}`")]
    DuplicateConcept(String),

    #[error("concept `{0}` has no lookup terms")]
    EmptyTerms(String),

    #[error("quantitative concept `{0}` lists no expected units")]
    MissingUnits(String),

    #[error("phrase `{phrase}` is registered under both `{first}` and `{second}`")]
    DuplicateTerm {
        phrase: String,
        first: String,
        second: String,
    },

    #[error("rule pack `{pack}` line {line}: unknown concept `{concept}`")]
    UnknownConcept {
        pack: String,
        concept: String,
        line: usize,
    },

    #[error("invalid term pattern `{pattern}` for `{concept}`: {message}")]
    BadPattern {
        concept: String,
        pattern: String,
        message: String,
    },

    #[error("rule pack `{0}`: max_link_window_chars must be positive")]
    ZeroWindow(String),

    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LexiconError {
    pub fn is_io(&self) -> bool {
        matches!(self, LexiconError::Io { .. })
    }
}

/// What kind of value a concept can be paired with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Quantitative,
    Qualitative,
    Both,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Quantitative => "quantitative",
            ValueKind::Qualitative => "qualitative",
            ValueKind::Both => "both",
        }
    }

    pub fn accepts_quantitative(self) -> bool {
        matches!(self, ValueKind::Quantitative | ValueKind::Both)
    }

    pub fn accepts_qualitative(self) -> bool {
        matches!(self, ValueKind::Qualitative | ValueKind::Both)
    }
}

impl FromStr for ValueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quantitative" => Ok(ValueKind::Quantitative),
            "qualitative" => Ok(ValueKind::Qualitative),
            "both" => Ok(ValueKind::Both),
            other => Err(format!("unknown value kind `{other}`")),
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One target concept and the phrases that identify it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDef {
    pub concept_id: String,
    pub canonical_name: String,
    /// Case-insensitive lookup phrases.
    pub terms: Vec<String>,
    /// Short forms, matched exactly as written.
    pub abbreviations: Vec<String>,
    /// Extra regular expressions, matched case-insensitively.
    pub term_patterns: Vec<String>,
    pub value_kind: ValueKind,
    pub expected_units: Vec<String>,
    /// True for the concepts outside the evaluated set.
    pub optional: bool,
}

/// A phrase that maps to a concept only in fidelity (substring) matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrapTerm {
    pub concept_id: String,
    pub phrase: String,
}

/// Site-specific extra terms plus linking-rule toggles.
#[derive(Debug, Clone, PartialEq)]
pub struct RulePack {
    pub pack_id: String,
    pub added_terms: BTreeMap<String, Vec<String>>,
    /// First pack-file line that mentioned each concept id in `added_terms`.
    pub term_lines: BTreeMap<String, usize>,
    pub separator_chars: BTreeSet<char>,
    pub word_boundary_matching: bool,
    pub reference_range_discrimination: bool,
    pub negation_without_pattern: bool,
    pub cross_line_linking: bool,
    pub max_link_window_chars: usize,
    /// Accept values glued to the preceding word ("open2.2 cm").
    pub tolerant_tokenization: bool,
    /// Nearest-concept linking; when false the earliest concept in reach
    /// captures a value.
    pub nearest_concept_linking: bool,
    /// Distribute "... are all normal" over every coordinated concept.
    pub coordinated_distribution: bool,
    /// Ignore everything inside tabular sections.
    pub exclude_tabular: bool,
}

const ALWAYS_SEPARATORS: [char; 3] = [':', ' ', '\t'];

impl Default for RulePack {
    fn default() -> Self {
        RulePack::baseline()
    }
}

impl RulePack {
    /// The configuration that reproduces the unmodified system.
    pub fn baseline() -> Self {
        RulePack {
            pack_id: "baseline".to_string(),
            added_terms: BTreeMap::new(),
            term_lines: BTreeMap::new(),
            separator_chars: ALWAYS_SEPARATORS.into_iter().collect(),
            word_boundary_matching: false,
            reference_range_discrimination: false,
            negation_without_pattern: false,
            cross_line_linking: false,
            max_link_window_chars: DEFAULT_LINK_WINDOW,
            tolerant_tokenization: false,
            nearest_concept_linking: false,
            coordinated_distribution: false,
            exclude_tabular: false,
        }
    }

    /// Every robust rule switched on, with the terms and separators of all
    /// shipped site packs.
    pub fn robust() -> Self {
        let mut pack = RulePack::baseline();
        pack.pack_id = "robust".to_string();
        for (site, _) in BUILTIN_PACKS {
            let site_pack = RulePack::builtin(site).expect("shipped packs parse");
            for (concept, phrases) in site_pack.added_terms {
                let entry = pack.added_terms.entry(concept).or_default();
                for phrase in phrases {
                    if !entry.contains(&phrase) {
                        entry.push(phrase);
                    }
                }
            }
            pack.separator_chars.extend(site_pack.separator_chars);
        }
        pack.separator_chars.extend([';', '~', '&', '(', ')']);
        pack.set_robust_flags();
        pack
    }

    pub fn set_robust_flags(&mut self) {
        self.word_boundary_matching = true;
        self.reference_range_discrimination = true;
        self.negation_without_pattern = true;
        self.cross_line_linking = true;
        self.tolerant_tokenization = true;
        self.nearest_concept_linking = true;
        self.coordinated_distribution = true;
    }

    pub fn builtin(site: &str) -> Option<RulePack> {
        BUILTIN_PACKS
            .iter()
            .find(|(tag, _)| *tag == site)
            .map(|(tag, text)| RulePack::parse(tag, text).expect("shipped packs parse"))
    }

    /// Read a pack file and layer it over `base`.
    pub fn load_onto(base: RulePack, path: &Path) -> Result<RulePack, LexiconError> {
        let text = read_file(path)?;
        RulePack::parse_onto(base, &path.display().to_string(), &text)
    }

    pub fn load(path: &Path) -> Result<RulePack, LexiconError> {
        let text = read_file(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "pack".to_string());
        let mut pack = RulePack::parse(&path.display().to_string(), &text)?;
        if pack.pack_id.is_empty() {
            pack.pack_id = stem;
        }
        Ok(pack)
    }

    /// Parse a rule-pack file. Records are tab-delimited:
    /// `PACK id`, `TERM concept_id phrase`, `SEP char`, `FLAG name value`.
    pub fn parse(source_name: &str, text: &str) -> Result<RulePack, LexiconError> {
        let mut pack = RulePack::baseline();
        pack.pack_id = String::new();
        RulePack::parse_onto(pack, source_name, text)
    }

    /// Apply a pack file's records on top of an existing pack: terms and
    /// separators accumulate, flags in the file override.
    pub fn parse_onto(mut pack: RulePack, source_name: &str, text: &str) -> Result<RulePack, LexiconError> {
        let err = |line: usize, message: String| LexiconError::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            match fields[0].trim() {
                "PACK" if fields.len() == 2 => pack.pack_id = fields[1].trim().to_string(),
                "TERM" if fields.len() == 3 => {
                    let concept = fields[1].trim().to_string();
                    let phrase = normalize_phrase(fields[2]);
                    if phrase.is_empty() {
                        return Err(err(line_no, "empty TERM phrase".into()));
                    }
                    pack.term_lines.entry(concept.clone()).or_insert(line_no);
                    let entry = pack.added_terms.entry(concept).or_default();
                    if !entry.contains(&phrase) {
                        entry.push(phrase);
                    }
                }
                "SEP" if fields.len() == 2 => {
                    let c = parse_sep(fields[1])
                        .ok_or_else(|| err(line_no, format!("bad SEP value `{}`", fields[1])))?;
                    pack.separator_chars.insert(c);
                }
                "FLAG" if fields.len() == 3 => {
                    pack.set_flag(fields[1].trim(), fields[2].trim())
                        .map_err(|m| err(line_no, m))?;
                }
                other => {
                    return Err(err(
                        line_no,
                        format!("unrecognised record `{other}` with {} fields", fields.len()),
                    ))
                }
            }
        }
        if pack.max_link_window_chars == 0 {
            return Err(LexiconError::ZeroWindow(pack.pack_id));
        }
        Ok(pack)
    }

    pub fn set_flag(&mut self, name: &str, value: &str) -> Result<(), String> {
        if name == "max_link_window_chars" {
            let n: usize = value
                .parse()
                .map_err(|_| format!("max_link_window_chars expects a count, got `{value}`"))?;
            if n == 0 {
                return Err("max_link_window_chars must be positive".into());
            }
            self.max_link_window_chars = n;
            return Ok(());
        }
        let on = match value {
            "1" | "true" | "on" | "yes" => true,
            "0" | "false" | "off" | "no" => false,
            _ => return Err(format!("flag `{name}` expects a boolean, got `{value}`")),
        };
        let slot = match name {
            "word_boundary_matching" => &mut self.word_boundary_matching,
            "reference_range_discrimination" => &mut self.reference_range_discrimination,
            "negation_without_pattern" => &mut self.negation_without_pattern,
            "cross_line_linking" => &mut self.cross_line_linking,
            "tolerant_tokenization" => &mut self.tolerant_tokenization,
            "nearest_concept_linking" => &mut self.nearest_concept_linking,
            "coordinated_distribution" => &mut self.coordinated_distribution,
            "exclude_tabular" => &mut self.exclude_tabular,
            other => return Err(format!("unknown flag `{other}`")),
        };
        *slot = on;
        Ok(())
    }

    pub fn is_separator(&self, c: char) -> bool {
        self.separator_chars.contains(&c)
    }

    /// Serialize back into the pack file format.
    pub fn to_pack_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("PACK\t{}\n", self.pack_id));
        for (concept, phrases) in &self.added_terms {
            for phrase in phrases {
                out.push_str(&format!("TERM\t{concept}\t{phrase}\n"));
            }
        }
        for c in &self.separator_chars {
            if !ALWAYS_SEPARATORS.contains(c) {
                out.push_str(&format!("SEP\t{}\n", sep_name(*c)));
            }
        }
        let flags = [
            ("word_boundary_matching", self.word_boundary_matching),
            ("reference_range_discrimination", self.reference_range_discrimination),
            ("negation_without_pattern", self.negation_without_pattern),
            ("cross_line_linking", self.cross_line_linking),
            ("tolerant_tokenization", self.tolerant_tokenization),
            ("nearest_concept_linking", self.nearest_concept_linking),
            ("coordinated_distribution", self.coordinated_distribution),
            ("exclude_tabular", self.exclude_tabular),
        ];
        for (name, on) in flags {
            out.push_str(&format!("FLAG\t{name}\t{on}\n"));
        }
        out.push_str(&format!(
            "FLAG\tmax_link_window_chars\t{}\n",
            self.max_link_window_chars
        ));
        out
    }
}

fn parse_sep(field: &str) -> Option<char> {
    match field {
        "space" => Some(' '),
        "tab" | "\\t" => Some('\t'),
        "newline" | "\\n" => Some('\n'),
        s => {
            let mut chars = s.chars();
            let c = chars.next()?;
            chars.next().is_none().then_some(c)
        }
    }
}

fn sep_name(c: char) -> String {
    match c {
        ' ' => "space".into(),
        '\t' => "tab".into(),
        '\n' => "newline".into(),
        c => c.to_string(),
    }
}

/// Where a lookup phrase came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermSource {
    Term,
    Abbreviation,
    Pattern,
    Trap,
}

/// A compiled lookup phrase.
#[derive(Debug, Clone)]
pub struct TermEntry {
    pub concept_index: usize,
    pub phrase: String,
    pub source: TermSource,
    /// Matches the phrase with words separated by spaces or tabs.
    pub same_line: Regex,
    /// Also lets a single line break stand in for a space.
    pub cross_line: Regex,
}

#[derive(Debug, Clone, Default)]
struct TermIndex {
    entries: Vec<TermEntry>,
}

/// The concept dictionary plus the active rule pack.
#[derive(Debug, Clone)]
pub struct Lexicon {
    concepts: Vec<ConceptDef>,
    fidelity_traps: Vec<TrapTerm>,
    active_pack: RulePack,
    index: Arc<TermIndex>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.concepts == other.concepts
            && self.fidelity_traps == other.fidelity_traps
            && self.active_pack == other.active_pack
    }
}

/// Collapse internal whitespace and trim.
pub fn normalize_phrase(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn phrase_key(s: &str) -> String {
    normalize_phrase(s).to_lowercase()
}

fn phrase_regexes(phrase: &str, case_insensitive: bool) -> (Regex, Regex) {
    let words: Vec<String> = phrase.split_whitespace().map(regex::escape).collect();
    let flag = if case_insensitive { "(?i)" } else { "" };
    let same = format!("{flag}{}", words.join("[ \\t]+"));
    let cross = format!("{flag}{}", words.join("(?:[ \\t]*\\n[ \\t]*|[ \\t]+)"));
    (
        Regex::new(&same).expect("escaped phrase compiles"),
        Regex::new(&cross).expect("escaped phrase compiles"),
    )
}

impl Lexicon {
    /// Validate the concepts and build the lookup index.
    pub fn new(
        concepts: Vec<ConceptDef>,
        fidelity_traps: Vec<TrapTerm>,
        active_pack: RulePack,
    ) -> Result<Lexicon, LexiconError> {
        let mut seen = BTreeSet::new();
        for c in &concepts {
            if !seen.insert(c.concept_id.as_str()) {
                return Err(LexiconError::DuplicateConcept(c.concept_id.clone()));
            }
            if c.terms.is_empty() || c.terms.iter().any(|t| t.trim().is_empty()) {
                return Err(LexiconError::EmptyTerms(c.concept_id.clone()));
            }
            if c.value_kind == ValueKind::Quantitative && c.expected_units.is_empty() {
                return Err(LexiconError::MissingUnits(c.concept_id.clone()));
            }
        }
        if active_pack.max_link_window_chars == 0 {
            return Err(LexiconError::ZeroWindow(active_pack.pack_id.clone()));
        }
        let index = build_index(&concepts, &fidelity_traps)?;
        Ok(Lexicon {
            concepts,
            fidelity_traps,
            active_pack,
            index: Arc::new(index),
        })
    }

    /// The shipped dictionary with the baseline pack attached.
    pub fn builtin() -> Lexicon {
        Lexicon::parse("default.lexicon", DEFAULT_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Lexicon, LexiconError> {
        Lexicon::parse(&path.display().to_string(), &read_file(path)?)
    }

    pub fn parse(source_name: &str, text: &str) -> Result<Lexicon, LexiconError> {
        let err = |line: usize, message: String| LexiconError::Parse {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut concepts: Vec<ConceptDef> = Vec::new();
        let mut traps = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            if fields[0] == "TRAP" {
                if fields.len() != 3 {
                    return Err(err(line_no, "TRAP records need 3 fields".into()));
                }
                traps.push(TrapTerm {
                    concept_id: fields[1].trim().to_string(),
                    phrase: normalize_phrase(fields[2]),
                });
                continue;
            }
            if fields.len() != 7 && fields.len() != 8 {
                return Err(err(
                    line_no,
                    format!("expected 7 tab-delimited fields, found {}", fields.len()),
                ));
            }
            let concept_id = fields[0].trim().to_string();
            if concept_id.is_empty() {
                return Err(err(line_no, "empty concept id".into()));
            }
            if concepts.iter().any(|c| c.concept_id == concept_id) {
                return Err(LexiconError::DuplicateConcept(concept_id));
            }
            let value_kind = fields[2].trim().parse().map_err(|m| err(line_no, m))?;
            let expected_units = split_list(fields[3], ',');
            if let Some(u) = expected_units.iter().find(|u| !KNOWN_UNITS.contains(&u.as_str())) {
                return Err(err(line_no, format!("unknown unit `{u}`")));
            }
            let optional = match fields[4].trim() {
                "0" => false,
                "1" => true,
                other => return Err(err(line_no, format!("optional must be 0 or 1, got `{other}`"))),
            };
            let terms: Vec<String> = split_list(fields[5], '|');
            if terms.is_empty() {
                return Err(LexiconError::EmptyTerms(concept_id));
            }
            let abbreviations = split_list(fields[6], '|');
            let term_patterns = fields
                .get(7)
                .map(|f| f.split('|').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
                .unwrap_or_default();
            concepts.push(ConceptDef {
                concept_id,
                canonical_name: fields[1].trim().to_string(),
                terms,
                abbreviations,
                term_patterns,
                value_kind,
                expected_units,
                optional,
            });
        }
        Lexicon::new(concepts, traps, RulePack::baseline())
    }

    /// Serialize into the lexicon file format.
    pub fn to_lexicon_string(&self) -> String {
        let mut out = String::from(
            "# concept_id\tcanonical_name\tvalue_kind\tunits\toptional\tterms\tabbreviations\n",
        );
        for c in &self.concepts {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                c.concept_id,
                c.canonical_name,
                c.value_kind,
                c.expected_units.join(","),
                u8::from(c.optional),
                c.terms.join("|"),
                c.abbreviations.join("|"),
            ));
            if !c.term_patterns.is_empty() {
                out.push('\t');
                out.push_str(&c.term_patterns.join("|"));
            }
            out.push('\n');
        }
        for t in &self.fidelity_traps {
            out.push_str(&format!("TRAP\t{}\t{}\n", t.concept_id, t.phrase));
        }
        out
    }

    pub fn concepts(&self) -> &[ConceptDef] {
        &self.concepts
    }

    pub fn concept(&self, concept_id: &str) -> Option<&ConceptDef> {
        self.concepts.iter().find(|c| c.concept_id == concept_id)
    }

    /// Ids of the evaluated (non-optional) concepts, in dictionary order.
    pub fn evaluated_ids(&self) -> Vec<String> {
        self.concepts
            .iter()
            .filter(|c| !c.optional)
            .map(|c| c.concept_id.clone())
            .collect()
    }

    pub fn fidelity_traps(&self) -> &[TrapTerm] {
        &self.fidelity_traps
    }

    pub fn active_pack(&self) -> &RulePack {
        &self.active_pack
    }

    pub fn term_entries(&self) -> &[TermEntry] {
        &self.index.entries
    }

    /// Concept id owning a phrase (case-insensitive), if any.
    pub fn lookup_phrase(&self, phrase: &str) -> Option<&str> {
        let key = phrase_key(phrase);
        self.index
            .entries
            .iter()
            .find(|e| e.source != TermSource::Pattern && phrase_key(&e.phrase) == key)
            .map(|e| self.concepts[e.concept_index].concept_id.as_str())
    }

    /// Return a new lexicon with the pack's terms appended and the pack
    /// made active.
    pub fn merge_rule_pack(&self, pack: &RulePack) -> Result<Lexicon, LexiconError> {
        let mut concepts = self.concepts.clone();
        for (concept_id, phrases) in &pack.added_terms {
            let Some(def) = concepts.iter_mut().find(|c| &c.concept_id == concept_id) else {
                return Err(LexiconError::UnknownConcept {
                    pack: pack.pack_id.clone(),
                    concept: concept_id.clone(),
                    line: pack.term_lines.get(concept_id).copied().unwrap_or(0),
                });
            };
            for phrase in phrases {
                let key = phrase_key(phrase);
                let known = def.terms.iter().any(|t| phrase_key(t) == key);
                if !known {
                    def.terms.push(normalize_phrase(phrase));
                }
            }
        }
        Lexicon::new(concepts, self.fidelity_traps.clone(), pack.clone())
    }

    /// Replace the active pack without touching the terms.
    pub fn with_pack(&self, pack: RulePack) -> Lexicon {
        Lexicon {
            concepts: self.concepts.clone(),
            fidelity_traps: self.fidelity_traps.clone(),
            active_pack: pack,
            index: Arc::clone(&self.index),
        }
    }
}

fn split_list(field: &str, sep: char) -> Vec<String> {
    field
        .split(sep)
        .map(normalize_phrase)
        .filter(|s| !s.is_empty())
        .collect()
}

fn build_index(concepts: &[ConceptDef], traps: &[TrapTerm]) -> Result<TermIndex, LexiconError> {
    let mut owners: BTreeMap<String, usize> = BTreeMap::new();
    let mut entries = Vec::new();
    let mut register = |concept_index: usize,
                        phrase: &str,
                        source: TermSource,
                        entries: &mut Vec<TermEntry>|
     -> Result<(), LexiconError> {
        let key = phrase_key(phrase);
        if let Some(&owner) = owners.get(&key) {
            if owner == concept_index {
                return Ok(());
            }
            return Err(LexiconError::DuplicateTerm {
                phrase: phrase.to_string(),
                first: concepts[owner].concept_id.clone(),
                second: concepts[concept_index].concept_id.clone(),
            });
        }
        owners.insert(key, concept_index);
        let (same_line, cross_line) = phrase_regexes(phrase, source != TermSource::Abbreviation);
        entries.push(TermEntry {
            concept_index,
            phrase: normalize_phrase(phrase),
            source,
            same_line,
            cross_line,
        });
        Ok(())
    };

    for (ci, c) in concepts.iter().enumerate() {
        for t in &c.terms {
            register(ci, t, TermSource::Term, &mut entries)?;
        }
        for a in &c.abbreviations {
            register(ci, a, TermSource::Abbreviation, &mut entries)?;
        }
    }
    for trap in traps {
        let Some(ci) = concepts.iter().position(|c| c.concept_id == trap.concept_id) else {
            return Err(LexiconError::UnknownConcept {
                pack: "fidelity_traps".into(),
                concept: trap.concept_id.clone(),
                line: 0,
            });
        };
        register(ci, &trap.phrase, TermSource::Trap, &mut entries)?;
    }
    for (ci, c) in concepts.iter().enumerate() {
        for p in &c.term_patterns {
            let compiled = Regex::new(&format!("(?i){p}")).map_err(|e| LexiconError::BadPattern {
                concept: c.concept_id.clone(),
                pattern: p.clone(),
                message: e.to_string(),
            })?;
            entries.push(TermEntry {
                concept_index: ci,
                phrase: p.clone(),
                source: TermSource::Pattern,
                same_line: compiled.clone(),
                cross_line: compiled,
            });
        }
    }
    Ok(TermIndex { entries })
}

/// Read and validate a lexicon file; the baseline pack is attached.
pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let text = read_file(path)?;
    Lexicon::parse(&path.display().to_string(), &text)
}

pub fn merge_rule_pack(lex: &Lexicon, pack: &RulePack) -> Result<Lexicon, LexiconError> {
    lex.merge_rule_pack(pack)
}

fn read_file(path: &Path) -> Result<String, LexiconError> {
    std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })
}
