mod commands;

use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Selects feedback templates for student summaries with multi-label
/// classifiers, evaluates the classifiers and renders the summaries.
#[derive(Debug, Parser)]
#[command(name = "rakelgen", version)]
struct Cli {
    /// Template registry JSON; defaults to the built-in 29-template set.
    #[arg(long, global = true, value_name = "PATH")]
    registry: Option<PathBuf>,

    /// Print errors on stderr as a JSON object.
    #[arg(long, global = true)]
    json_errors: bool,

    /// Train on a single thread even when built with parallel support.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset (JSON Lines).
    Generate(GenerateArgs),
    /// Cross-validate methods and print a comparison report.
    Evaluate(EvaluateArgs),
    /// Train one method and save the model file.
    Train(TrainArgs),
    /// Render feedback summaries with a saved model.
    Feedback(FeedbackArgs),
    /// Print the feature matrix of a dataset as CSV.
    InspectFeatures(InspectArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Generator config JSON; omitted fields take the shipped defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, env = "RAKELGEN_SEED")]
    seed: Option<u64>,
    /// Overrides the number of students.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeatureArg {
    Raw,
    Derived,
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CriterionArg {
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TieBreakArg {
    Lowest,
    Seeded,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MajorityArg {
    PerLabel,
    Labelset,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AveragingArg {
    Pooled,
    FoldMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

/// Feature encoding, tree and ensemble settings shared by train and evaluate.
#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = FeatureArg::Both)]
    features: FeatureArg,
    /// RAkEL labelset size (default 3).
    #[arg(long)]
    k: Option<usize>,
    /// RAkEL member count (default twice the label count).
    #[arg(long)]
    m: Option<usize>,
    /// RAkEL vote threshold; a label is set when its mean vote exceeds it.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Tree depth limit; unlimited when omitted.
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    #[arg(long, value_enum, default_value_t = CriterionArg::Gini)]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value_t = TieBreakArg::Lowest)]
    tie_break: TieBreakArg,
    #[arg(long, value_enum, default_value_t = MajorityArg::PerLabel)]
    majority_mode: MajorityArg,
    /// Chain label order as comma-separated label indices.
    #[arg(long, value_delimiter = ',')]
    chain_order: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Comma-separated: br, chain-predicted, chain-real, majority, lp, rakel.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "br,chain-predicted,majority,rakel,chain-real"
    )]
    methods: Vec<String>,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, env = "RAKELGEN_SEED", default_value_t = 0)]
    seed: u64,
    /// Method the others are t-tested against; defaults to rakel when
    /// requested, otherwise the first method.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long, value_enum, default_value_t = AveragingArg::Pooled)]
    averaging: AveragingArg,
    /// Also write the report as JSON.
    #[arg(long, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Print LaTeX table rows after the report.
    #[arg(long)]
    latex: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    #[arg(long, default_value = "rakel")]
    method: String,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    #[arg(long, env = "RAKELGEN_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["data", "record"]))]
struct FeedbackArgs {
    #[arg(long, value_name = "PATH")]
    model: PathBuf,
    /// Dataset in JSON Lines; labels are only used by real-history chains.
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// A single record as a JSON object.
    #[arg(long, value_name = "PATH")]
    record: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Slopes within this band read as "remained stable".
    #[arg(long, default_value_t = 0.05)]
    trend_tolerance: f64,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = FeatureArg::Both)]
    features: FeatureArg,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match stdout
                .write_all(out.as_bytes())
                .and_then(|()| stdout.flush())
            {
                // a closed pipe (`| head`) is not a failure
                Err(e) if e.kind() != ErrorKind::BrokenPipe => {
                    eprintln!("error: writing output: {e}");
                    ExitCode::from(1)
                }
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            if cli.json_errors {
                let obj = serde_json::json!({
                    "error": {
                        "kind": e.kind(),
                        "message": e.to_string(),
                    }
                });
                eprintln!("{obj}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
