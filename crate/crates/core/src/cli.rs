//! Batch front end: generate → extract → evaluate → score.
//!
//! Exit codes: 0 success, 1 invalid invocation or input, 2 I/O failure.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::corpusgen::{corpus_files, generate_corpus_with, quirk_catalog, CorpusError, SiteProfile, TemplateLibrary};
use crate::docmodel::{load_corpus, DocError, MANIFEST_FILE};
use crate::evaluator::{
    aggregate, classify_corpus, metrics_tsv, outcomes_tsv, parse_gold_tsv, parse_outcomes_tsv, render_table,
    EvalError, Metrics,
};
use crate::extractor::{
    extract_report, extraction_tsv, parse_extraction_tsv, select_final, ExtractionParseError, ExtractionResult,
};
use crate::lexicon::{Lexicon, LexiconError, RulePack};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Mode {
    /// Baseline rules, reproducing the unmodified system.
    #[default]
    Fidelity,
    /// Every robust rule and all site terms switched on.
    Robust,
}

#[derive(Debug, Parser)]
#[command(name = "echox", version, about = "Concept-value extraction for echocardiogram reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct LexiconArgs {
    /// Lexicon file, or `default` for the shipped one.
    #[arg(long, env = "ECHOX_LEXICON", default_value = "default")]
    lexicon: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus with gold annotations.
    Generate {
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory holding templates.tsv and concept_values.tsv.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract concept-value pairs from a corpus.
    Extract {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long, value_enum, default_value_t = Mode::Fidelity)]
        mode: Mode,
        /// Rule pack layered over the mode, in order given.
        #[arg(long = "rulepack")]
        rulepacks: Vec<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify extractions against gold.
    Evaluate {
        #[command(flatten)]
        lexicon: LexiconArgs,
        #[arg(long)]
        extractions: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate outcome files into the results table.
    Score {
        #[command(flatten)]
        lexicon: LexiconArgs,
        /// TAG=PATH of an outcomes file; repeat per corpus.
        #[arg(long = "input")]
        inputs: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Print the quirk catalog.
    Quirks {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Generate,
    Extract,
    Evaluate,
    Score,
    Quirks,
}

/// Everything a run needs, independent of how it was parsed.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    /// None means the shipped lexicon.
    pub lexicon_path: Option<PathBuf>,
    pub rulepack_paths: Vec<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
    pub gold_path: Option<PathBuf>,
    pub extractions_path: Option<PathBuf>,
    /// Raw `TAG=PATH` arguments for `score`.
    pub inputs: Vec<String>,
    pub out_path: Option<PathBuf>,
    pub metrics_path: Option<PathBuf>,
    pub templates_dir: Option<PathBuf>,
    pub profile: Option<String>,
    pub n: Option<usize>,
    pub seed: u64,
    pub mode: Mode,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> RunConfig {
        RunConfig {
            command,
            lexicon_path: None,
            rulepack_paths: Vec::new(),
            corpus_dir: None,
            gold_path: None,
            extractions_path: None,
            inputs: Vec::new(),
            out_path: None,
            metrics_path: None,
            templates_dir: None,
            profile: None,
            n: None,
            seed: 0,
            mode: Mode::Fidelity,
        }
    }
}

fn lexicon_path(arg: &LexiconArgs) -> Option<PathBuf> {
    (arg.lexicon != "default").then(|| PathBuf::from(&arg.lexicon))
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> RunConfig {
        match cli.command {
            Command::Generate {
                profile,
                n,
                seed,
                templates,
                out,
            } => RunConfig {
                profile,
                n,
                seed,
                templates_dir: templates,
                out_path: out,
                ..RunConfig::new(CommandKind::Generate)
            },
            Command::Extract {
                lexicon,
                mode,
                rulepacks,
                corpus,
                out,
            } => RunConfig {
                lexicon_path: lexicon_path(&lexicon),
                mode,
                rulepack_paths: rulepacks,
                corpus_dir: corpus,
                out_path: out,
                ..RunConfig::new(CommandKind::Extract)
            },
            Command::Evaluate {
                lexicon,
                extractions,
                gold,
                out,
            } => RunConfig {
                lexicon_path: lexicon_path(&lexicon),
                extractions_path: extractions,
                gold_path: gold,
                out_path: out,
                ..RunConfig::new(CommandKind::Evaluate)
            },
            Command::Score {
                lexicon,
                inputs,
                out,
                metrics,
            } => RunConfig {
                lexicon_path: lexicon_path(&lexicon),
                inputs,
                out_path: out,
                metrics_path: metrics,
                ..RunConfig::new(CommandKind::Score)
            },
            Command::Quirks { out } => RunConfig {
                out_path: out,
                ..RunConfig::new(CommandKind::Quirks)
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: FindingSeverity,
    pub message: String,
    pub hint: String,
}

impl Finding {
    fn error(message: impl Into<String>, hint: impl Into<String>) -> Finding {
        Finding {
            severity: FindingSeverity::Error,
            message: message.into(),
            hint: hint.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            FindingSeverity::Error => "error",
            FindingSeverity::Warning => "warning",
        };
        write!(f, "{sev}: {} (hint: {})", self.message, self.hint)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Finding>),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Doc(#[from] DocError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Extraction(#[from] ExtractionParseError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Doc(DocError::Io { .. })
            | CliError::Corpus(CorpusError::Io { .. }) => EXIT_IO,
            CliError::Lexicon(e) if e.is_io() => EXIT_IO,
            _ => EXIT_INVALID,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write via a temp file in the target directory and rename into place,
/// so a failed run never leaves a half-written file behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn split_input(arg: &str) -> Option<(String, PathBuf)> {
    let (tag, path) = arg.split_once('=')?;
    (!tag.is_empty() && !path.is_empty()).then(|| (tag.to_string(), PathBuf::from(path)))
}

fn require<'a, T>(findings: &mut Vec<Finding>, value: &'a Option<T>, flag: &str) -> Option<&'a T> {
    if value.is_none() {
        findings.push(Finding::error(
            format!("missing required flag {flag}"),
            format!("pass {flag}"),
        ));
    }
    value.as_ref()
}

fn require_file(findings: &mut Vec<Finding>, path: &Path, flag: &str) -> bool {
    if path.is_file() {
        true
    } else {
        findings.push(Finding::error(
            format!("{flag} {} does not exist or is not a file", path.display()),
            "check the path",
        ));
        false
    }
}

fn lexicon_findings(cfg: &RunConfig, findings: &mut Vec<Finding>) {
    let base = match &cfg.lexicon_path {
        Some(p) => {
            if !require_file(findings, p, "--lexicon") {
                return;
            }
            match Lexicon::load(p) {
                Ok(l) => l,
                Err(e) => {
                    findings.push(Finding::error(e.to_string(), "fix the lexicon file"));
                    return;
                }
            }
        }
        None => Lexicon::builtin(),
    };
    // each pack checked alone so messages point at its own lines
    for p in &cfg.rulepack_paths {
        if !require_file(findings, p, "--rulepack") {
            continue;
        }
        let checked = RulePack::load(p).and_then(|pack| base.merge_rule_pack(&pack));
        if let Err(e) = checked {
            findings.push(Finding::error(
                format!("{}: {e}", p.display()),
                "fix the rule pack or the lexicon it extends",
            ));
        }
    }
    if cfg.mode == Mode::Robust {
        if let Err(e) = base.merge_rule_pack(&RulePack::robust()) {
            findings.push(Finding::error(
                format!("robust mode does not fit this lexicon: {e}"),
                "use a lexicon that defines the shipped concept ids",
            ));
        }
    }
}

/// Check a configuration without running it or touching any file.
pub fn validate_inputs(cfg: &RunConfig) -> Vec<Finding> {
    let mut f = Vec::new();
    match cfg.command {
        CommandKind::Generate => {
            if let Some(p) = require(&mut f, &cfg.profile, "--profile") {
                if SiteProfile::builtin(p).is_none() {
                    f.push(Finding::error(
                        format!("unknown profile `{p}`"),
                        "use one of wcm, mayo, nw, mimic",
                    ));
                }
            }
            if let Some(&n) = require(&mut f, &cfg.n, "--n") {
                if n == 0 {
                    f.push(Finding::error("--n must be at least 1", "pass a positive count"));
                }
            }
            require(&mut f, &cfg.out_path, "--out");
            if let Some(dir) = &cfg.templates_dir {
                if let Err(e) = TemplateLibrary::load(dir) {
                    f.push(Finding::error(e.to_string(), "fix the template files"));
                }
            }
        }
        CommandKind::Extract => {
            if let Some(dir) = require(&mut f, &cfg.corpus_dir, "--corpus") {
                require_file(&mut f, &dir.join(MANIFEST_FILE), "--corpus manifest");
            }
            require(&mut f, &cfg.out_path, "--out");
            lexicon_findings(cfg, &mut f);
        }
        CommandKind::Evaluate => {
            if let Some(p) = require(&mut f, &cfg.extractions_path, "--extractions") {
                if require_file(&mut f, p, "--extractions") {
                    if let Ok(text) = std::fs::read_to_string(p) {
                        if let Err(e) = parse_extraction_tsv(&p.display().to_string(), &text) {
                            f.push(Finding::error(e.to_string(), "regenerate with `echox extract`"));
                        }
                    }
                }
            }
            if let Some(p) = require(&mut f, &cfg.gold_path, "--gold") {
                if require_file(&mut f, p, "--gold") {
                    if let Ok(text) = std::fs::read_to_string(p) {
                        match parse_gold_tsv(&p.display().to_string(), &text) {
                            Ok(rows) => {
                                let mut seen = std::collections::HashSet::new();
                                for g in &rows {
                                    if !seen.insert((&g.report_id, &g.concept_id)) {
                                        f.push(Finding::error(
                                            format!(
                                                "{}: duplicate gold row for report `{}`, concept `{}`",
                                                p.display(),
                                                g.report_id,
                                                g.concept_id
                                            ),
                                            "keep one row per (report, concept)",
                                        ));
                                    }
                                }
                            }
                            Err(e) => f.push(Finding::error(e.to_string(), "fix the gold file")),
                        }
                    }
                }
            }
            require(&mut f, &cfg.out_path, "--out");
            lexicon_findings(cfg, &mut f);
        }
        CommandKind::Score => {
            if cfg.inputs.is_empty() {
                f.push(Finding::error("missing required flag --input", "pass --input TAG=PATH"));
            }
            for arg in &cfg.inputs {
                match split_input(arg) {
                    Some((_, p)) => {
                        require_file(&mut f, &p, "--input");
                    }
                    None => f.push(Finding::error(
                        format!("--input `{arg}` is not TAG=PATH"),
                        "write e.g. --input mayo=runs/mayo.outcomes.tsv",
                    )),
                }
            }
            require(&mut f, &cfg.out_path, "--out");
            lexicon_findings(cfg, &mut f);
        }
        CommandKind::Quirks => {}
    }
    f
}

/// The lexicon a run extracts with: base terms, then the mode's flag
/// bundle, then each rule pack in order.
pub fn build_lexicon(cfg: &RunConfig) -> Result<Lexicon, CliError> {
    let base = match &cfg.lexicon_path {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::builtin(),
    };
    let mut pack = match cfg.mode {
        Mode::Fidelity => RulePack::baseline(),
        Mode::Robust => RulePack::robust(),
    };
    for p in &cfg.rulepack_paths {
        pack = RulePack::load_onto(pack, p)?;
    }
    Ok(base.merge_rule_pack(&pack)?)
}

fn extract(cfg: &RunConfig, corpus: &Path, out: &Path) -> Result<String, CliError> {
    let lex = build_lexicon(cfg)?;
    let reports = load_corpus(corpus)?;
    // collect keeps manifest order whatever order workers finish in
    let results: Vec<ExtractionResult> = reports.par_iter().map(|r| extract_report(r, &lex)).collect();
    write_atomic(out, &extraction_tsv(&results))?;
    Ok(format!("extracted {} reports to {}", results.len(), out.display()))
}

fn evaluate(cfg: &RunConfig, extractions: &Path, gold_path: &Path, out: &Path) -> Result<String, CliError> {
    let lex = build_lexicon(cfg)?;
    let parsed = parse_extraction_tsv(&extractions.display().to_string(), &read(extractions)?)?;
    let gold = parse_gold_tsv(&gold_path.display().to_string(), &read(gold_path)?)?;
    let mut results: Vec<ExtractionResult> = parsed
        .into_iter()
        .map(|(report_id, all_pairs)| ExtractionResult {
            final_pairs: select_final(&all_pairs),
            report_id,
            all_pairs,
        })
        .collect();
    // reports where nothing was extracted have no rows in the file
    let mut gold_reports: Vec<&str> = Vec::new();
    for g in &gold {
        if !gold_reports.contains(&g.report_id.as_str()) {
            gold_reports.push(&g.report_id);
        }
    }
    for id in gold_reports {
        if !results.iter().any(|r| r.report_id == id) {
            results.push(ExtractionResult {
                report_id: id.to_string(),
                ..Default::default()
            });
        }
    }
    results.sort_by(|a, b| a.report_id.cmp(&b.report_id));
    let outcomes = classify_corpus(&results, &gold, &lex.evaluated_ids())?;
    write_atomic(out, &outcomes_tsv(&outcomes))?;
    Ok(format!("wrote {} outcomes to {}", outcomes.len(), out.display()))
}

fn score(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let lex = build_lexicon(cfg)?;
    let mut metrics: Vec<Metrics> = Vec::new();
    for arg in &cfg.inputs {
        let (tag, path) = split_input(arg).expect("validated");
        let outcomes = parse_outcomes_tsv(&path.display().to_string(), &read(&path)?)?;
        metrics.extend(aggregate(&outcomes, &tag));
    }
    let table = render_table(&metrics, &lex);
    // render everything before writing anything
    let dump = cfg.metrics_path.as_ref().map(|p| (p, metrics_tsv(&metrics)));
    write_atomic(out, &table)?;
    if let Some((p, text)) = dump {
        write_atomic(p, &text)?;
    }
    Ok(format!("wrote table for {} corpora to {}", cfg.inputs.len(), out.display()))
}

fn generate(cfg: &RunConfig, site: &str, n: usize, out: &Path) -> Result<String, CliError> {
    let profile = SiteProfile::builtin(site).expect("validated");
    let lib = match &cfg.templates_dir {
        Some(dir) => TemplateLibrary::load(dir)?,
        None => TemplateLibrary::builtin(),
    };
    let reports = generate_corpus_with(&profile, n, cfg.seed, &lib)?;
    for (rel, text) in corpus_files(&reports) {
        write_atomic(&out.join(rel), &text)?;
    }
    Ok(format!("wrote {n} {site} reports to {}", out.display()))
}

pub fn quirks_text() -> String {
    let mut out = String::from("quirk_id\tdescription\texample_sentence\n");
    for q in quirk_catalog() {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            q.quirk_id,
            q.description,
            q.example_sentence.replace('\n', "\\n")
        ));
    }
    out
}

/// Validate then execute. Returns a one-line summary on success.
pub fn run(cfg: &RunConfig) -> Result<String, CliError> {
    let findings = validate_inputs(cfg);
    if findings.iter().any(|f| f.severity == FindingSeverity::Error) {
        return Err(CliError::Invalid(findings));
    }
    let out = cfg.out_path.as_deref();
    match cfg.command {
        CommandKind::Generate => generate(
            cfg,
            cfg.profile.as_deref().expect("validated"),
            cfg.n.expect("validated"),
            out.expect("validated"),
        ),
        CommandKind::Extract => extract(cfg, cfg.corpus_dir.as_deref().expect("validated"), out.expect("validated")),
        CommandKind::Evaluate => evaluate(
            cfg,
            cfg.extractions_path.as_deref().expect("validated"),
            cfg.gold_path.as_deref().expect("validated"),
            out.expect("validated"),
        ),
        CommandKind::Score => score(cfg, out.expect("validated")),
        CommandKind::Quirks => {
            let text = quirks_text();
            match out {
                Some(p) => {
                    write_atomic(p, &text)?;
                    Ok(format!("wrote quirk catalog to {}", p.display()))
                }
                None => {
                    print!("{text}");
                    Ok(String::new())
                }
            }
        }
    }
}

/// Parse arguments, run, report on stderr, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run(&RunConfig::from(cli)) {
        Ok(msg) => {
            if !msg.is_empty() {
                eprintln!("{msg}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("echox: {e}");
            e.exit_code()
        }
    }
}
