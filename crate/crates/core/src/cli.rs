//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 input error, 2 internal invariant failure.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classifier::{load_lexicon, Lexicon, NoteClassifier};
use crate::dta::{CiConfig, ProportionMethod};
use crate::evaluation::{evaluate_with_classifier, EvaluationConfig, EvaluationError, PublishedRow};
use crate::ingest::{parse_cohort_file, write_cohort, ParseMode};
use crate::model::Condition;
use crate::report::{write_outputs, ReportDocument, ReportFormat};
use crate::serology::SerologyThresholds;
use crate::synth::{preset, synthesize_exact, synthesize_random, RandomSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "clinote", version, about = "Classify pathology request notes and score them against hepatitis serology")]
pub struct Cli {
    /// Lexicon file replacing the built-in category lexicon.
    #[arg(long, global = true, env = "CLINOTE_LEXICON")]
    pub lexicon: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a cohort CSV and print a validation summary.
    Validate(ValidateArgs),
    /// Classify notes, one per input line, as TSV.
    Classify(ClassifyArgs),
    /// Run the accuracy evaluation and write report files.
    Evaluate(EvaluateArgs),
    /// Write a synthetic cohort CSV.
    Synth(SynthArgs),
    /// Re-render a stored report.json in another format.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Hbv,
    Hcv,
}

impl From<ConditionArg> for Condition {
    fn from(c: ConditionArg) -> Self {
        match c {
            ConditionArg::Hbv => Condition::HepatitisB,
            ConditionArg::Hcv => Condition::HepatitisC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CiMethodArg {
    Exact,
    Score,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
    /// Skip malformed rows instead of stopping at the first one.
    #[arg(long)]
    pub lenient: bool,
    /// Print the full validation report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Text file with one note per line; `-` or omitted reads stdin.
    pub input: Option<PathBuf>,
    /// Write TSV here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub condition: ConditionArg,
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub hbsag_cutoff: Option<f64>,
    #[arg(long)]
    pub anti_hcv_cutoff: Option<f64>,
    /// Interval method for Sn and Sp.
    #[arg(long, value_enum, default_value = "exact")]
    pub ci_method: CiMethodArg,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Add 0.5 to every cell for likelihood-ratio intervals with a zero cell.
    #[arg(long)]
    pub haldane: bool,
    /// Comma-separated control category ids.
    #[arg(long, value_delimiter = ',')]
    pub controls: Option<Vec<u8>>,
    /// Keep vaccination-response notes.
    #[arg(long)]
    pub include_vaccination: bool,
    /// Footnote the published accuracy row next to the computed one.
    #[arg(long)]
    pub published: bool,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// figS1-hbv or figS1-hcv.
    #[arg(long, conflicts_with_all = ["n", "prevalence", "mix"])]
    pub preset: Option<String>,
    /// Record count for a random cohort.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub prevalence: Option<f64>,
    /// Category weights for a random cohort, e.g. `1:1,10:2,45:0.5`.
    #[arg(long, value_delimiter = ',')]
    pub mix: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json written by `evaluate`.
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: FormatArg,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: e.into(),
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let lexicon = || -> Result<Lexicon> {
        match &cli.lexicon {
            Some(path) => load_lexicon(path).with_context(|| format!("loading lexicon {}", path.display())),
            None => Ok(Lexicon::default_lexicon()),
        }
    };
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Classify(a) => classify(a, lexicon()?),
        Command::Evaluate(a) => evaluate(a, lexicon()?),
        Command::Synth(a) => synth(a, lexicon),
        Command::Report(a) => report(a),
    }
}

fn mode(lenient: bool) -> ParseMode {
    if lenient {
        ParseMode::Lenient
    } else {
        ParseMode::Strict
    }
}

fn write_text(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let parsed = parse_cohort_file(&a.input, mode(a.lenient))?;
    let r = &parsed.report;
    if a.json {
        println!("{}", serde_json::to_string_pretty(r).map_err(anyhow::Error::from)?);
    } else {
        println!(
            "{}: {} rows read, {} accepted, {} skipped, {} warnings",
            r.source,
            r.rows_read,
            r.records_accepted,
            r.skipped.len(),
            r.warnings.len()
        );
        for s in &r.skipped {
            println!("  skipped line {}: {}", s.line, s.message);
        }
        for w in &r.warnings {
            println!("  warning line {}: {}", w.line, w.message);
        }
    }
    Ok(())
}

fn classify(a: &ClassifyArgs, lexicon: Lexicon) -> Result<(), Failure> {
    let classifier = NoteClassifier::new(lexicon);
    let reader: Box<dyn BufRead> = match a.input.as_deref() {
        None => Box::new(io::stdin().lock()),
        Some(p) if p == Path::new("-") => Box::new(io::stdin().lock()),
        Some(p) => Box::new(io::BufReader::new(
            fs::File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
    };
    let mut out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(io::BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    };
    for line in reader.lines() {
        let line = line.context("reading notes")?;
        let c = classifier.classify(&line);
        writeln!(out, "{}\t{}\t{}\t{}", c.category_id, c.hbv_label, c.hcv_label, c.matched_pattern)?;
    }
    out.flush()?;
    Ok(())
}

fn evaluate(a: &EvaluateArgs, lexicon: Lexicon) -> Result<(), Failure> {
    let condition: Condition = a.condition.into();
    let parsed = parse_cohort_file(&a.input, mode(a.lenient))?;
    let defaults = SerologyThresholds::default();
    let thresholds = SerologyThresholds::new(
        a.hbsag_cutoff.unwrap_or(defaults.hbsag_cutoff()),
        a.anti_hcv_cutoff.unwrap_or(defaults.anti_hcv_cutoff()),
    )?;
    let mut config = EvaluationConfig::for_condition(condition);
    config.thresholds = thresholds;
    config.exclude_vaccination = !a.include_vaccination;
    config.ci_config = CiConfig {
        level: a.level,
        proportion_method: match a.ci_method {
            CiMethodArg::Exact => ProportionMethod::Exact,
            CiMethodArg::Score => ProportionMethod::Score,
        },
        haldane: a.haldane,
    };
    if let Some(ids) = &a.controls {
        config.control_category_ids = ids.clone();
    }
    let classifier = NoteClassifier::new(lexicon);
    let mut evaluation = evaluate_with_classifier(&parsed.cohort, &config, &classifier).map_err(|e: EvaluationError| Failure {
        code: if e.is_internal() { EXIT_INTERNAL } else { EXIT_INPUT },
        error: e.into(),
    })?;
    if a.published {
        evaluation.published = Some(PublishedRow::table3(condition));
    }
    let doc = ReportDocument::new(evaluation);
    let written = write_outputs(&doc, &a.out_dir)?;
    println!("{} (category {}): {}", condition.display_name(), condition.category_id(), doc.display.summary_line);
    println!("wrote {} files to {}", written.len(), a.out_dir.display());
    Ok(())
}

fn parse_mix(items: &[String]) -> Result<Vec<(u8, f64)>> {
    items
        .iter()
        .map(|item| {
            let (id, weight) = item
                .split_once(':')
                .with_context(|| format!("mix entry `{item}` is not category:weight"))?;
            let id: u8 = id.trim().parse().with_context(|| format!("bad category id in `{item}`"))?;
            let weight: f64 = weight.trim().parse().with_context(|| format!("bad weight in `{item}`"))?;
            Ok((id, weight))
        })
        .collect()
}

fn synth(a: &SynthArgs, lexicon: impl FnOnce() -> Result<Lexicon>) -> Result<(), Failure> {
    let cohort = match &a.preset {
        Some(name) => synthesize_exact(&preset(name, a.seed)?)?,
        None => {
            let Some(n) = a.n else {
                return Err(anyhow!("synth needs --preset NAME or --n COUNT (with --prevalence and --mix)").into());
            };
            let spec = RandomSpec {
                n,
                prevalence: a.prevalence.unwrap_or(0.0),
                note_mix: match &a.mix {
                    Some(items) => parse_mix(items)?,
                    None => vec![(crate::classifier::NON_SPECIFIC_CATEGORY, 1.0)],
                },
                seed: a.seed,
            };
            synthesize_random(&spec, &lexicon()?)?
        }
    };
    match &a.output {
        Some(path) => {
            let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_cohort(&cohort, io::BufWriter::new(file)).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} records to {}", cohort.len(), path.display());
        }
        None => write_cohort(&cohort, io::stdout().lock())?,
    }
    Ok(())
}

fn report(a: &ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let doc = ReportDocument::from_json(&text)?;
    let format = match a.format {
        FormatArg::Markdown => ReportFormat::Markdown,
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    write_text(a.output.as_deref(), &doc.render(format)?)?;
    Ok(())
}
