use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anls_star::{
    evaluate, parse_tree_bytes, score_with_breakdown, write_report, Config, DocumentSet, EvalOptions, PredictionSet,
    ReportFormat, Role, ValueTree,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anls-star", version, about = "Score predicted trees against ground truth with ANLS*")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score one prediction file against one ground-truth file
    Score {
        /// JSON ground truth; `{"$oneof": [...]}` marks alternatives
        ground_truth: PathBuf,
        /// JSON prediction
        prediction: PathBuf,
        #[command(flatten)]
        similarity: SimilarityArgs,
        /// Also print `s` and `l` per top-level key
        #[arg(long)]
        breakdown: bool,
    },
    /// Evaluate a JSONL prediction set against a JSONL ground-truth set
    Eval {
        /// Ground truth, one `{"id": ..., "value": ...}` object per line
        ground_truth: PathBuf,
        /// Predictions in the same format
        prediction: PathBuf,
        /// Report destination; standard output when omitted
        report: Option<PathBuf>,
        #[command(flatten)]
        similarity: SimilarityArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Worker threads; results do not depend on it
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        jobs: u32,
        /// Include per-key `s` and `l` in the report
        #[arg(long)]
        breakdown: bool,
    },
}

#[derive(Args)]
struct SimilarityArgs {
    /// String similarities below this threshold count as zero
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// Compare strings case-sensitively
    #[arg(long)]
    no_case_fold: bool,
    /// Keep leading and trailing whitespace
    #[arg(long)]
    no_trim: bool,
}

impl SimilarityArgs {
    fn config(&self) -> Result<Config, Failure> {
        let config = Config::new(self.tau).map_err(Failure::usage)?;
        Ok(config.with_case_fold(!self.no_case_fold).with_trim(!self.no_trim))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(format: Format) -> Self {
        match format {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(err: impl Display) -> Self {
        Self { code: 1, message: err.to_string() }
    }

    fn input(err: impl Display) -> Self {
        Self { code: 2, message: err.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Score {
            ground_truth,
            prediction,
            similarity,
            breakdown,
        } => {
            let config = similarity.config()?;
            let gt = read_tree(&ground_truth, Role::GroundTruth)?;
            let pred = read_tree(&prediction, Role::Prediction)?;
            cmd_score(&gt, &pred, &config, breakdown)
        }
        Command::Eval {
            ground_truth,
            prediction,
            report,
            similarity,
            format,
            jobs,
            breakdown,
        } => {
            let config = similarity.config()?;
            let options = EvalOptions {
                jobs: jobs as usize,
                breakdown,
                ..EvalOptions::default()
            };
            cmd_eval(&ground_truth, &prediction, report.as_deref(), format.into(), &config, &options)
        }
    }
}

fn read_tree(path: &Path, role: Role) -> Result<ValueTree, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    parse_tree_bytes(&bytes, role).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn cmd_score(gt: &ValueTree, pred: &ValueTree, config: &Config, breakdown: bool) -> Result<(), Failure> {
    let result = score_with_breakdown(gt, pred, config).map_err(Failure::input)?;
    let mut out = io::stdout().lock();
    let mut print = || -> io::Result<()> {
        writeln!(out, "{:.6}", result.total)?;
        if breakdown {
            for (key, pair) in &result.per_key {
                writeln!(out, "{key}\ts={:.6}\tl={}", pair.s, pair.l)?;
            }
        }
        out.flush()
    };
    print().map_err(Failure::input)
}

fn cmd_eval(
    ground_truth: &Path,
    prediction: &Path,
    report_path: Option<&Path>,
    format: ReportFormat,
    config: &Config,
    options: &EvalOptions,
) -> Result<(), Failure> {
    let gt = DocumentSet::from_jsonl(open(ground_truth)?, Role::GroundTruth)
        .map_err(|e| Failure::input(format!("{}: {e}", ground_truth.display())))?;
    let pred = PredictionSet::from_jsonl(open(prediction)?)
        .map_err(|e| Failure::input(format!("{}: {e}", prediction.display())))?;
    let report = evaluate(&gt, &pred, config, options).map_err(Failure::input)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }

    // Render fully before touching the destination so errors leave nothing behind.
    let mut rendered = Vec::new();
    write_report(&report, &mut rendered, format).map_err(Failure::input)?;
    let summary = format!("mean={:.6} failed={}", report.mean_score, report.failed_count);
    match report_path {
        Some(path) => {
            let mut file = BufWriter::new(
                File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
            );
            file.write_all(&rendered)
                .and_then(|()| file.flush())
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            println!("{summary}");
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(&rendered).and_then(|()| out.flush()).map_err(Failure::input)?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}
