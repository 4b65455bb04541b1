use std::path::Path;
use std::str::FromStr;

use crate::severity::Severity;
use crate::units::Unit;

use super::profile::QUIRK_IDS;
use super::CorpusError;

pub const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.tsv");
pub const DEFAULT_CONCEPT_VALUES: &str = include_str!("../../data/concept_values.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Tabular,
    Narrative,
    Impression,
}

/// What the template asserts about its concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Quant,
    Range,
    Qual,
    /// Always qualitative 'no'.
    No,
    /// Always qualitative 'normal'.
    Normal,
    /// Mentions the concept without asserting a value for it.
    None,
}

impl FromStr for ValueType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "quant" => ValueType::Quant,
            "range" => ValueType::Range,
            "qual" => ValueType::Qual,
            "no" => ValueType::No,
            "normal" => ValueType::Normal,
            "none" => ValueType::None,
            other => return Err(format!("unknown value type `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub template_id: String,
    pub concept_id: String,
    /// Empty means every site.
    pub sites: Vec<String>,
    pub style: Style,
    pub quirk: Option<String>,
    pub unit: Option<Unit>,
    pub value_type: ValueType,
    pub companion: Option<String>,
    /// Text with `\n` escapes already expanded.
    pub text: String,
}

impl Template {
    pub fn for_site(&self, site: &str) -> bool {
        self.sites.is_empty() || self.sites.iter().any(|s| s == site)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptValueSpec {
    pub concept_id: String,
    /// Inclusive integer bounds in units of 10^-decimals.
    pub min_scaled: i64,
    pub max_scaled: i64,
    pub decimals: usize,
    pub severities: Vec<Severity>,
    pub qual_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateLibrary {
    pub templates: Vec<Template>,
    pub values: Vec<ConceptValueSpec>,
}

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn dash_opt(s: &str) -> Option<&str> {
    (s != "-" && !s.is_empty()).then_some(s)
}

fn scaled(source: &str, line: usize, s: &str, decimals: usize) -> Result<i64, CorpusError> {
    let x: f64 = s
        .parse()
        .map_err(|_| parse_err(source, line, format!("bad number `{s}`")))?;
    Ok((x * 10f64.powi(decimals as i32)).round() as i64)
}

pub fn parse_templates(source: &str, text: &str) -> Result<Vec<Template>, CorpusError> {
    let mut out: Vec<Template> = Vec::new();
    for (n, line) in data_lines(text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(parse_err(source, n, format!("expected 9 fields, found {}", f.len())));
        }
        if out.iter().any(|t| t.template_id == f[0]) {
            return Err(parse_err(source, n, format!("duplicate template id `{}`", f[0])));
        }
        let style = match f[3] {
            "tabular" => Style::Tabular,
            "narrative" => Style::Narrative,
            "impression" => Style::Impression,
            other => return Err(parse_err(source, n, format!("unknown style `{other}`"))),
        };
        let quirk = dash_opt(f[4]).map(str::to_string);
        if let Some(q) = &quirk {
            if !QUIRK_IDS.contains(&q.as_str()) {
                return Err(CorpusError::UnknownQuirk(q.clone()));
            }
        }
        let unit = match dash_opt(f[5]) {
            Some(u) => Some(u.parse::<Unit>().map_err(|m| parse_err(source, n, m))?),
            None => None,
        };
        let value_type: ValueType = f[6].parse().map_err(|m| parse_err(source, n, m))?;
        let text = f[8].replace("\\n", "\n");
        let needs = match value_type {
            ValueType::Quant => text.contains("{value}"),
            ValueType::Range => text.contains("{lo}") && text.contains("{hi}"),
            ValueType::Qual => text.contains("{sev}") || text.contains("{Sev}"),
            _ => true,
        };
        if !needs {
            return Err(parse_err(source, n, "text lacks the slot its value type needs"));
        }
        out.push(Template {
            template_id: f[0].to_string(),
            concept_id: f[1].to_string(),
            sites: if f[2] == "*" {
                Vec::new()
            } else {
                f[2].split(',').map(str::to_string).collect()
            },
            style,
            quirk,
            unit,
            value_type,
            companion: dash_opt(f[7]).map(str::to_string),
            text,
        });
    }
    Ok(out)
}

pub fn parse_concept_values(source: &str, text: &str) -> Result<Vec<ConceptValueSpec>, CorpusError> {
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(parse_err(source, n, format!("expected 6 fields, found {}", f.len())));
        }
        let decimals: usize = f[3]
            .parse()
            .map_err(|_| parse_err(source, n, format!("bad decimals `{}`", f[3])))?;
        let (min_scaled, max_scaled) = match (dash_opt(f[1]), dash_opt(f[2])) {
            (Some(a), Some(b)) => (scaled(source, n, a, decimals)?, scaled(source, n, b, decimals)?),
            _ => (0, 0),
        };
        if min_scaled > max_scaled {
            return Err(parse_err(source, n, "min exceeds max"));
        }
        let severities = match dash_opt(f[4]) {
            Some(list) => list
                .split(',')
                .map(|s| s.parse::<Severity>().map_err(|m| parse_err(source, n, m)))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let qual_share: f64 = f[5]
            .parse()
            .map_err(|_| parse_err(source, n, format!("bad share `{}`", f[5])))?;
        if !(0.0..=1.0).contains(&qual_share) || (qual_share > 0.0 && severities.is_empty()) {
            return Err(parse_err(source, n, "qualitative share needs severities and must be in [0, 1]"));
        }
        out.push(ConceptValueSpec {
            concept_id: f[0].to_string(),
            min_scaled,
            max_scaled,
            decimals,
            severities,
            qual_share,
        });
    }
    Ok(out)
}

impl TemplateLibrary {
    pub fn builtin() -> TemplateLibrary {
        TemplateLibrary::parse(DEFAULT_TEMPLATES, DEFAULT_CONCEPT_VALUES).expect("shipped templates parse")
    }

    pub fn parse(templates: &str, values: &str) -> Result<TemplateLibrary, CorpusError> {
        Ok(TemplateLibrary {
            templates: parse_templates("templates.tsv", templates)?,
            values: parse_concept_values("concept_values.tsv", values)?,
        })
    }

    /// Load `templates.tsv` and `concept_values.tsv` from a directory.
    pub fn load(dir: &Path) -> Result<TemplateLibrary, CorpusError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| CorpusError::Io {
                path: dir.join(name),
                source: e,
            })
        };
        Ok(TemplateLibrary {
            templates: parse_templates("templates.tsv", &read("templates.tsv")?)?,
            values: parse_concept_values("concept_values.tsv", &read("concept_values.tsv")?)?,
        })
    }

    pub fn value_spec(&self, concept_id: &str) -> Option<&ConceptValueSpec> {
        self.values.iter().find(|v| v.concept_id == concept_id)
    }
}
