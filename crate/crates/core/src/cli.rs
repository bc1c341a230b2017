//! The `seltag` command line: `train`, `tag`, `calibrate`, `eval`, `curves`.
//!
//! Exit status is 0 on success, 1 on a usage error and 2 on a data error.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{
    build_cdfs, calibrate_threshold, collect_observations, curves_tsv, emit_curves, AccuracyMode,
};
use crate::confidence::{apply_policy, ConfidenceMeasure, ThresholdPolicy};
use crate::corpus::{corpus_stats, parse_closed_tags, parse_raw, train_model, TaggedCorpus};
use crate::error::Error;
use crate::evaluation::{evaluate, percent, report};
use crate::hmm::{baum_welch, forward_backward, forward_backward_lenient, HmmModel};

#[derive(Debug, Parser)]
#[command(name = "seltag", version, about = "Selective HMM part-of-speech tagger")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a model from a tagged corpus.
    Train(TrainArgs),
    /// Tag raw text, marking rejected tokens.
    Tag(TagArgs),
    /// Choose a threshold that reaches a target accuracy on held-out data.
    Calibrate(CalibrateArgs),
    /// Measure accuracy and efficiency of a threshold on gold data.
    Eval(EvalArgs),
    /// Write cumulative distributions of a measure for correct and incorrect tags.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Tagged training corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Closed-class tags, one per line.
    #[arg(long)]
    pub closed_tags: Option<PathBuf>,
    /// Where to write the model.
    #[arg(long, visible_alias = "model")]
    pub out: PathBuf,
    /// Untagged text for Baum-Welch refinement (defaults to the training words).
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub bw_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub bw_tol: f64,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    #[arg(long, default_value = "prob")]
    pub measure: ConfidenceMeasure,
    /// Acceptance threshold; omitted means accept everything.
    #[arg(long)]
    pub threshold: Option<f64>,
}

impl PolicyArgs {
    fn policy(&self) -> Result<ThresholdPolicy, CliError> {
        match self.threshold {
            None => Ok(ThresholdPolicy::accept_all(self.measure)),
            Some(t) => ThresholdPolicy::new(self.measure, t).map_err(|e| CliError::Usage(e.to_string())),
        }
    }
}

#[derive(Debug, Args)]
pub struct TagArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Pre-tokenised text, one sentence per line (stdin if omitted).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, default_value = "??")]
    pub reject_tag: String,
    /// Fail on a dead-end token instead of restarting the decode.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Held-out tagged corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "prob")]
    pub measure: ConfidenceMeasure,
    #[arg(long)]
    pub target: f64,
    #[arg(long, default_value = "oracle")]
    pub mode: AccuracyMode,
    /// JSON copy of the result.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stamp: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Gold tagged corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// JSON copy of the report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub stamp: bool,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "prob")]
    pub measure: ConfidenceMeasure,
    /// TSV output (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Data(e) => {
                write!(f, "{e}")?;
                let mut source = std::error::Error::source(e);
                while let Some(s) = source {
                    if !matches!(e, Error::Sentence { .. } | Error::Io { .. }) {
                        write!(f, ": {s}")?;
                    }
                    source = s.source();
                }
                Ok(())
            }
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn stdout_error(e: io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn load_gold(path: &Path) -> Result<TaggedCorpus, Error> {
    let corpus = TaggedCorpus::load(path)?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

fn unix_time() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn with_stamp(mut value: serde_json::Value, stamp: bool) -> serde_json::Value {
    if stamp {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("generated_unix".into(), unix_time().into());
        }
    }
    value
}

fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.bw_tol.is_nan() || args.bw_tol < 0.0 {
        return Err(CliError::Usage(format!(
            "--bw-tol must be non-negative, got {}",
            args.bw_tol
        )));
    }
    let corpus = TaggedCorpus::load(&args.corpus)?;
    let closed: BTreeSet<String> = match &args.closed_tags {
        Some(p) => parse_closed_tags(&read_file(p)?),
        None => BTreeSet::new(),
    };
    let mut model = train_model(&corpus, &closed)?;
    let stats = corpus_stats(&corpus, &model);
    let w = |e| CliError::Data(stdout_error(e));
    writeln!(out, "sentences\t{}", corpus.len()).map_err(w)?;
    writeln!(out, "tokens\t{}", stats.token_count).map_err(w)?;
    writeln!(out, "tags\t{}", model.n_tags()).map_err(w)?;
    writeln!(out, "vocabulary\t{}", model.vocabulary_size()).map_err(w)?;
    writeln!(out, "ambiguity (%)\t{}", percent(stats.ambiguous_fraction, 2)).map_err(w)?;
    writeln!(out, "unknown (%)\t{}", percent(stats.unknown_fraction, 2)).map_err(w)?;

    if args.bw_iters > 0 {
        let raw: Vec<Vec<String>> = match &args.raw {
            Some(p) => parse_raw(&read_file(p)?),
            None => corpus
                .words()
                .into_iter()
                .map(|s| s.into_iter().map(str::to_string).collect())
                .collect(),
        };
        let est = baum_welch(&model, &raw, args.bw_iters, args.bw_tol)?;
        for (k, ll) in est.log_likelihood.iter().enumerate() {
            writeln!(out, "bw iteration {k}\tlog-likelihood {ll}").map_err(w)?;
        }
        model = est.model;
    }
    model.save(&args.out)?;
    Ok(())
}

fn escape_word(word: &str) -> String {
    word.replace('\\', "\\\\").replace('/', "\\/")
}

fn cmd_tag(args: &TagArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let policy = args.policy.policy()?;
    if args.reject_tag.is_empty() || args.reject_tag.contains(char::is_whitespace) {
        return Err(CliError::Usage("--reject-tag must be a non-empty word".into()));
    }
    let model = HmmModel::load(&args.model)?;
    let reader: Box<dyn BufRead> = match &args.input {
        Some(p) => Box::new(BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufReader::new(io::stdin())),
    };
    let input_name = args
        .input
        .as_ref()
        .map_or_else(|| PathBuf::from("<stdin>"), Clone::clone);
    for (l, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&input_name, e))?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.is_empty() {
            writeln!(out).map_err(stdout_error)?;
            continue;
        }
        let posteriors = if args.strict {
            forward_backward(&model, &words).map_err(|e| e.in_sentence(l + 1))?
        } else {
            let dec = forward_backward_lenient(&model, &words).map_err(|e| e.in_sentence(l + 1))?;
            for &p in &dec.restarts {
                let _ = writeln!(
                    err,
                    "warning: line {}: dead-end token {:?} at position {p}; decoding restarted",
                    l + 1,
                    words[p]
                );
            }
            dec.posteriors
        };
        let decisions = apply_policy(&posteriors, &policy)?;
        let rendered: Vec<String> = words
            .iter()
            .zip(&decisions)
            .map(|(w, d)| {
                let tag = if d.accepted {
                    model.tagset().name(d.tag)
                } else {
                    args.reject_tag.as_str()
                };
                format!("{}/{}", escape_word(w), tag)
            })
            .collect();
        writeln!(out, "{}", rendered.join(" ")).map_err(stdout_error)?;
    }
    Ok(())
}

fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !(args.target > 0.0 && args.target <= 1.0) {
        return Err(CliError::Usage(format!(
            "--target must be in (0, 1], got {}",
            args.target
        )));
    }
    let model = HmmModel::load(&args.model)?;
    let corpus = load_gold(&args.corpus)?;
    let obs = collect_observations(&model, &corpus, args.measure)?;
    let cdfs = build_cdfs(&obs)?;
    let result = calibrate_threshold(&cdfs, obs.s(), args.target, args.mode, args.measure)?;
    out.write_all(result.to_text().as_bytes()).map_err(stdout_error)?;
    if args.stamp {
        writeln!(out, "generated_unix\t{}", unix_time()).map_err(stdout_error)?;
    }
    if let Some(path) = &args.out {
        let value = with_stamp(serde_json::to_value(result).map_err(Error::from)?, args.stamp);
        let mut text = serde_json::to_string_pretty(&value).map_err(Error::from)?;
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let policy = args.policy.policy()?;
    let model = HmmModel::load(&args.model)?;
    let corpus = load_gold(&args.corpus)?;
    let counts = evaluate(&model, &corpus, &policy)?;
    let rep = report(&counts, &policy)?;
    out.write_all(rep.to_text().as_bytes()).map_err(stdout_error)?;
    if args.stamp {
        writeln!(out, "generated_unix  {}", unix_time()).map_err(stdout_error)?;
    }
    if let Some(path) = &args.out {
        let value = with_stamp(serde_json::to_value(&rep).map_err(Error::from)?, args.stamp);
        let mut text = serde_json::to_string_pretty(&value).map_err(Error::from)?;
        text.push('\n');
        write_file(path, &text)?;
    }
    Ok(())
}

fn cmd_curves(args: &CurvesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = HmmModel::load(&args.model)?;
    let corpus = load_gold(&args.corpus)?;
    let obs = collect_observations(&model, &corpus, args.measure)?;
    let tsv = curves_tsv(&emit_curves(&build_cdfs(&obs)?));
    match &args.out {
        Some(path) => write_file(path, &tsv)?,
        None => out.write_all(tsv.as_bytes()).map_err(stdout_error)?,
    }
    Ok(())
}

/// Runs a parsed command. `out` receives normal output; `err` receives
/// warnings.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Tag(a) => match &a.out {
            Some(path) => {
                let file = File::create(path).map_err(|e| Error::io(path, e))?;
                let mut w = BufWriter::new(file);
                cmd_tag(a, &mut w, err)?;
                w.flush().map_err(|e| Error::io(path, e))?;
                Ok(())
            }
            None => cmd_tag(a, out, err),
        },
        Command::Calibrate(a) => cmd_calibrate(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Curves(a) => cmd_curves(a, out),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut err = io::stderr();
    let result = run(&cli, &mut out, &mut err);
    let flushed = out.flush();
    match result {
        Ok(()) if flushed.is_ok() => ExitCode::SUCCESS,
        Ok(()) => ExitCode::from(2),
        Err(e) => {
            let _ = writeln!(err, "seltag: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
