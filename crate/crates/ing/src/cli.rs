//! Command-line verbs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ing_core::{AccuracyReference, Aggregation, ClassMode, CoveragePolicy, ScoreFn};

use crate::config::{
    parse_accuracy_reference, parse_aggregation, parse_class_modes, parse_coverage, parse_score_fn, parse_thresholds,
    RunConfig,
};
use crate::embeddings::load_cloud;
use crate::manifest::{load_dataset, Manifest, PlanPolicy, PLAN_ORDER};
use crate::synth::{ShiftSpec, SynthSpec};
use crate::{eval, otdd, report, synth};

#[derive(Debug, Parser)]
#[command(name = "ing", version, about = "Part-based faithfulness evaluation of explanation methods")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write deterministic perturbation plans into a manifest.
    Plan(PlanArgs),
    /// Score every explanation method in a manifest.
    Eval(EvalArgs),
    /// Dataset distances from a reference cloud to other clouds.
    Otdd(OtddArgs),
    /// Re-render CSV and markdown from a JSON report.
    Report(ReportArgs),
    /// Generate a synthetic dataset with known answers.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated fractions, e.g. 0.2,0.4,0.6,0.8
    // a path-qualified Vec keeps clap from treating the flag as multi-valued
    #[arg(long, value_parser = parse_thresholds)]
    pub thresholds: Option<std::vec::Vec<f64>>,
    /// predicted, target or both
    #[arg(long, value_parser = parse_class_modes)]
    pub class_mode: Option<std::vec::Vec<ClassMode>>,
    /// sum or mean
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<Aggregation>,
    /// skip or fail
    #[arg(long, value_parser = parse_coverage)]
    pub coverage: Option<CoveragePolicy>,
    /// softmax or logit
    #[arg(long, value_parser = parse_score_fn)]
    pub score_fn: Option<ScoreFn>,
    /// prediction or label
    #[arg(long, value_parser = parse_accuracy_reference)]
    pub accuracy_reference: Option<AccuracyReference>,
    /// Comma-separated method ids to evaluate
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OtddArgs {
    /// Reference point-cloud file
    #[arg(long)]
    pub reference: PathBuf,
    /// Point-cloud files compared against the reference
    #[arg(long, num_args = 1.., required = true)]
    pub compare: Vec<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report.json written by `eval`
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Striped parts, lookup-table classifier, planted attributions
    Eval,
    /// Original, gray-masked and background-filled raster datasets
    Shift,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "eval")]
    pub kind: SynthKind,
    #[arg(long)]
    pub images: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Feature grid side for shift datasets
    #[arg(long, default_value_t = 8)]
    pub feature_side: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Plan(a) => cmd_plan(&a),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Otdd(a) => cmd_otdd(&a).map(|_| ()),
        Command::Report(a) => cmd_report(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

/// Fills every image's plan and records the plan policy. Re-running with
/// the same budget rewrites identical bytes.
pub fn cmd_plan(args: &PlanArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let budget = args.budget.unwrap_or(cfg.plan.budget);
    if budget == 0 {
        bail!("budget must be positive");
    }
    let mut manifest = Manifest::load(&args.manifest)?;
    let short: Vec<String> = manifest
        .images
        .iter()
        .filter(|img| img.part_ids.len() > budget)
        .map(|img| format!("{} ({} parts)", img.image_id, img.part_ids.len()))
        .collect();
    if !short.is_empty() {
        bail!(
            "budget {budget} cannot cover single-part removals for: {}",
            short.join(", ")
        );
    }
    for img in &mut manifest.images {
        let plan = ing_core::planner::enumerate_plan(&img.part_id_list(), budget)
            .with_context(|| format!("planning {}", img.image_id))?;
        img.plan = plan.iter().map(|s| s.key()).collect();
    }
    manifest.plan_policy = Some(PlanPolicy {
        budget,
        order: PLAN_ORDER.to_owned(),
    });
    manifest.save(&args.manifest)?;
    Ok(())
}

fn resolve_eval(args: &EvalArgs) -> anyhow::Result<(RunConfig, usize)> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    let e = &mut cfg.eval;
    if let Some(t) = &args.thresholds {
        e.thresholds = t.clone();
    }
    if let Some(m) = &args.class_mode {
        e.class_modes = m.clone();
    }
    if let Some(a) = args.aggregation {
        e.aggregation = a;
    }
    if let Some(c) = args.coverage {
        e.coverage = c;
    }
    if let Some(s) = args.score_fn {
        e.score_fn = s;
    }
    if let Some(r) = args.accuracy_reference {
        e.accuracy_reference = Some(r);
    }
    if let Some(m) = &args.methods {
        e.methods = Some(m.clone());
    }
    e.validate().map_err(anyhow::Error::msg)?;
    let workers = args.workers.or(cfg.workers).unwrap_or(0);
    Ok((cfg, workers))
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<eval::MetricReport> {
    let (cfg, workers) = resolve_eval(args)?;
    let manifest = Manifest::load(&args.manifest)?;
    let records = load_dataset(&manifest, &args.manifest)?;
    let rep = eval::evaluate_dataset(&manifest, &records, &cfg.eval, workers)
        .with_context(|| format!("evaluating {}", args.manifest.display()))?;
    report::write_report(&args.out, &rep)?;
    Ok(rep)
}

pub fn cmd_otdd(args: &OtddArgs) -> anyhow::Result<otdd::DistanceTable> {
    let mut cfg = RunConfig::load_or_default(args.config.as_deref())?;
    if let Some(e) = args.epsilon {
        cfg.otdd.epsilon = Some(e);
    }
    if let Some(m) = args.max_iter {
        cfg.otdd.max_iter = m;
    }
    if let Some(t) = args.tol {
        cfg.otdd.tol = t;
    }
    cfg.otdd.validate().map_err(anyhow::Error::msg)?;
    let workers = args.workers.or(cfg.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let table = pool.install(|| -> anyhow::Result<_> {
        let reference = load_cloud(&args.reference)?;
        let compared = args.compare.iter().map(|p| load_cloud(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(otdd::distance_table(&reference, &compared, &cfg.otdd.settings())?)
    })?;
    otdd::write_table(&args.out, &table)?;
    Ok(table)
}

pub fn cmd_report(args: &ReportArgs) -> anyhow::Result<()> {
    let rep = report::read_report(&args.input)?;
    report::render_report(&args.out, &rep)?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    match args.kind {
        SynthKind::Eval => {
            let mut spec = SynthSpec::default();
            spec.images = args.images.unwrap_or(spec.images);
            spec.seed = args.seed.unwrap_or(spec.seed);
            let path = synth::generate(&spec).write(&args.out)?;
            println!("{}", path.display());
        }
        SynthKind::Shift => {
            let mut spec = ShiftSpec::default();
            spec.images = args.images.unwrap_or(spec.images);
            spec.seed = args.seed.unwrap_or(spec.seed);
            if args.feature_side == 0 {
                bail!("feature side must be positive");
            }
            for p in synth::shift_datasets(&spec).write(&args.out, args.feature_side)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

/// Plans a manifest in place with the default budget.
pub fn plan_manifest(path: &Path, budget: usize) -> anyhow::Result<()> {
    cmd_plan(&PlanArgs {
        manifest: path.to_owned(),
        budget: Some(budget),
        config: None,
    })
}
