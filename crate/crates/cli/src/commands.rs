use std::fmt::{self, Write as _};
use std::fs;
use std::io::BufReader;
use std::path::Path;

use rakelgen::artifact::ModelArtifact;
use rakelgen::domain::{read_records, Dataset, StudentRecord, TemplateRegistry};
use rakelgen::eval::{comparison_report, Averaging, CvSettings, FoldPlan, Method};
use rakelgen::features::{FeatureExtractor, FeatureMode};
use rakelgen::mlc::{self, MajorityMode, MlcStrategy, MultiLabelData, Payload, RakelConfig};
use rakelgen::nlg::RenderOptions;
use rakelgen::synth::{factor_correlation, generate_dataset, SynthConfig};
use rakelgen::tree::{SplitCriterion, TieBreak, TreeConfig};
use rakelgen::{Error, Execution};

use crate::{
    AveragingArg, Cli, Command, CriterionArg, EvaluateArgs, FeatureArg, FeedbackArgs, FormatArg,
    GenerateArgs, InspectArgs, MajorityArg, ModelArgs, TieBreakArg, TrainArgs,
};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if !e.is_validation() => "io",
            _ => "validation",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "io" => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(s) => f.write_str(s),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Runs the command and returns what it prints on stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let registry = match &cli.registry {
        Some(p) => TemplateRegistry::load(p)?,
        None => TemplateRegistry::default_registry(),
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &cli.command {
        Command::Generate(a) => generate(a, &registry),
        Command::Evaluate(a) => evaluate(a, registry, exec),
        Command::Train(a) => train(a, registry, exec),
        Command::Feedback(a) => feedback(a, &registry),
        Command::InspectFeatures(a) => inspect(a, registry),
    }
}

fn feature_mode(f: FeatureArg) -> FeatureMode {
    match f {
        FeatureArg::Raw => FeatureMode::Raw,
        FeatureArg::Derived => FeatureMode::Derived,
        FeatureArg::Both => FeatureMode::Both,
    }
}

fn tree_config(m: &ModelArgs, seed: u64) -> TreeConfig {
    TreeConfig {
        max_depth: m.max_depth,
        min_samples_leaf: m.min_samples_leaf,
        criterion: match m.criterion {
            CriterionArg::Gini => SplitCriterion::Gini,
            CriterionArg::Entropy => SplitCriterion::Entropy,
        },
        tie_break: match m.tie_break {
            TieBreakArg::Lowest => TieBreak::Lowest,
            TieBreakArg::Seeded => TieBreak::Seeded,
        },
        seed,
    }
}

fn strategy(name: &str, m: &ModelArgs, n_labels: usize, seed: u64) -> Result<MlcStrategy> {
    Ok(match name {
        "br" => MlcStrategy::BinaryRelevance,
        "chain-predicted" => MlcStrategy::ChainPredictedHistory,
        "chain-real" => MlcStrategy::ChainRealHistory,
        "majority" => MlcStrategy::MajorityClass {
            mode: match m.majority_mode {
                MajorityArg::PerLabel => MajorityMode::PerLabel,
                MajorityArg::Labelset => MajorityMode::Labelset,
            },
        },
        "lp" => MlcStrategy::LabelPowerset,
        "rakel" => {
            let defaults = RakelConfig::for_labels(n_labels);
            let cfg = RakelConfig {
                k: m.k.unwrap_or(defaults.k),
                m: m.m.unwrap_or(defaults.m),
                threshold: m.threshold,
                seed,
            };
            cfg.validate(n_labels)?;
            MlcStrategy::Rakel(cfg)
        }
        other => return Err(Error::UnknownMethod(other.to_string()).into()),
    })
}

fn labeled_data(
    path: &Path,
    registry: TemplateRegistry,
    mode: FeatureMode,
) -> Result<(Dataset, FeatureExtractor, MultiLabelData)> {
    let ds = Dataset::load(path, registry)?;
    let ext = FeatureExtractor::new(mode, ds.weeks());
    let data = MultiLabelData::from_dataset(&ds, &ext)?;
    Ok((ds, ext, data))
}

fn generate(a: &GenerateArgs, registry: &TemplateRegistry) -> Result<String> {
    let mut out = String::new();
    let mut cfg = match &a.config {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(n) = a.n {
        cfg.n_students = n;
    }
    cfg.validate()?;
    let ds = generate_dataset(&cfg, registry)?;
    write_file(&a.out, &ds.to_jsonl())?;
    let _ = writeln!(out, "wrote {} records to {}", ds.len(), a.out.display());
    for pair in &cfg.correlation_pairs {
        let achieved = match factor_correlation(ds.records(), pair.a, pair.b) {
            Ok(r) => format!("{r:.3}"),
            Err(_) => "undefined".to_string(),
        };
        let _ = writeln!(
            out,
            "r({}, {}) = {achieved} (target {})",
            pair.a, pair.b, pair.r
        );
    }
    Ok(out)
}

fn evaluate(a: &EvaluateArgs, registry: TemplateRegistry, exec: Execution) -> Result<String> {
    let mut out = String::new();
    if a.methods.is_empty() {
        return Err(CliError::Usage("no methods requested".into()));
    }
    let (_, _, data) = labeled_data(&a.data, registry, feature_mode(a.model.features))?;
    let methods = a
        .methods
        .iter()
        .map(|name| {
            Ok(Method::new(strategy(
                name,
                &a.model,
                data.n_labels(),
                a.seed,
            )?))
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = match &a.reference {
        Some(r) => r.clone(),
        None if a.methods.iter().any(|m| m == "rakel") => "rakel".to_string(),
        None => a.methods[0].clone(),
    };
    let plan = FoldPlan::new(data.len(), a.folds, a.seed)?;
    let settings = CvSettings {
        tree: tree_config(&a.model, a.seed),
        chain_order: a.model.chain_order.clone(),
        averaging: match a.averaging {
            AveragingArg::Pooled => Averaging::Pooled,
            AveragingArg::FoldMean => Averaging::FoldMean,
        },
        execution: exec,
    };
    let report = comparison_report(&data, &methods, &plan, &reference, &settings)?;
    out.push_str(&report.render_text());
    if a.latex {
        out.push('\n');
        for row in &report.rows {
            let _ = writeln!(out, "{} \\\\", row.latex_row());
        }
    }
    if let Some(path) = &a.json_out {
        write_file(path, &report.to_json_string())?;
    }
    Ok(out)
}

fn train(a: &TrainArgs, registry: TemplateRegistry, exec: Execution) -> Result<String> {
    let (ds, ext, data) = labeled_data(&a.data, registry, feature_mode(a.model.features))?;
    let strategy = strategy(&a.method, &a.model, data.n_labels(), a.seed)?;
    let tree = tree_config(&a.model, a.seed);
    let model = mlc::train(
        &data,
        &strategy,
        &tree,
        a.model.chain_order.as_deref(),
        exec,
    )?;
    let mut out = format!(
        "trained {} on {} records: {} labels, {} features\n",
        strategy.method_name(),
        data.len(),
        model.n_labels,
        model.n_features
    );
    let detail = match &model.payload {
        Payload::BinaryRelevance { trees } | Payload::Chain { trees, .. } => {
            let nodes: usize = trees.iter().map(|t| t.root().node_count()).sum();
            format!("{} trees, {nodes} nodes", trees.len())
        }
        Payload::Majority { bits } => format!("constant prediction {bits}"),
        Payload::LabelPowerset(lp) => {
            format!(
                "{} label sets, {} nodes",
                lp.n_classes(),
                lp.tree.root().node_count()
            )
        }
        Payload::Rakel { members } => {
            let nodes: usize = members.iter().map(|m| m.tree.root().node_count()).sum();
            let mut covered = vec![false; model.n_labels];
            for m in members {
                for &j in &m.labels {
                    covered[j] = true;
                }
            }
            let uncovered = covered.iter().filter(|&&c| !c).count();
            format!(
                "{} members, {nodes} nodes, {uncovered} uncovered labels",
                members.len()
            )
        }
    };
    let artifact = ModelArtifact::new(model, ds.registry(), &ext, a.seed);
    artifact.save(&a.out)?;
    let _ = writeln!(out, "{detail}\nsaved {}", a.out.display());
    Ok(out)
}

fn feedback(a: &FeedbackArgs, registry: &TemplateRegistry) -> Result<String> {
    if a.trend_tolerance.is_nan() || a.trend_tolerance < 0.0 {
        return Err(CliError::Usage(
            "trend tolerance must be non-negative".into(),
        ));
    }
    let artifact = ModelArtifact::load_for(&a.model, registry)?;
    let records: Vec<StudentRecord> = if let Some(path) = &a.data {
        let f = fs::File::open(path).map_err(|e| io_err(path, e))?;
        read_records(BufReader::new(f))?
    } else {
        let path = a.record.as_ref().expect("clap enforces one input");
        let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        vec![serde_json::from_str(&s).map_err(Error::from)?]
    };
    let opts = RenderOptions {
        trend_tolerance: a.trend_tolerance,
    };
    let mut out = String::new();
    for (i, rec) in records.iter().enumerate() {
        let (selection, summary) = artifact.feedback(rec, registry, &opts)?;
        match a.format {
            FormatArg::Text => {
                if i > 0 {
                    out.push('\n');
                }
                let _ = write!(out, "== {} ==\n{}", summary.student_id, summary.to_text());
            }
            FormatArg::Json => {
                let dropped: Vec<_> = selection
                    .dropped
                    .iter()
                    .map(
                        |d| serde_json::json!({ "template_id": d.template.id, "reason": d.reason }),
                    )
                    .collect();
                let obj = serde_json::json!({
                    "student_id": summary.student_id,
                    "sentences": summary.sentences,
                    "dropped": dropped,
                });
                let _ = writeln!(out, "{obj}");
            }
        }
    }
    Ok(out)
}

fn inspect(a: &InspectArgs, registry: TemplateRegistry) -> Result<String> {
    let ds = Dataset::load(&a.data, registry)?;
    let ext = FeatureExtractor::new(feature_mode(a.features), ds.weeks());
    let mut header = vec!["student_id".to_string()];
    header.extend(
        ext.schema()
            .columns()
            .iter()
            .map(|(f, n)| format!("{f}.{n}")),
    );
    let mut out = header.join(",");
    out.push('\n');
    for rec in ds.records() {
        out.push_str(&rec.student_id);
        for v in ext.values(rec) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}
