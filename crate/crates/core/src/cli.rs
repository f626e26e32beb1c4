//! Command-line surface: `compute-bonus`, `evaluate`, `sweep-k` and `compare`.
//!
//! Human-readable tables go to stdout, JSON reports and CSV series to the
//! paths given by `--json` / `--csv` (`-` means stdout), diagnostics to
//! stderr. Failures print one line `error: kind=<kind> reason=<text>` and
//! exit with [`DcaError::exit_code`].

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{greedy_reranker, grid_search_oracle, quota_select, selection_ndcg, ConstraintSet, QuotaSpec};
use crate::data::{load_dataset, DatasetConfig, LoadReport};
use crate::dca::{run_dca, scale_sweep, DcaConfig};
use crate::error::{DcaError, Result};
use crate::metrics::{
    ddp_for_bonus, disparate_impact_scaled, disparity, fpr_gap, ndcg_for_bonus, DdpReport, DisparityVector,
    Discounting, MetricKind, Objective,
};
use crate::model::{select_with_bonus, selection_count, AttrKind, BonusVector, RankingSpec, RecordTable, SelectionResult};

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Bonus cap used by the oracle when `--bonus-max` is not given.
pub const DEFAULT_ORACLE_BONUS_MAX: f64 = 20.0;

#[derive(Debug, Parser)]
#[command(name = "dca", version, about = "Bonus points that compensate disparity in top-k selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a bonus vector and report disparity before and after.
    ComputeBonus(ComputeArgs),
    /// Apply a given bonus vector and report metrics.
    Evaluate(EvaluateArgs),
    /// Disparity and nDCG over a grid of selection fractions, as CSV.
    SweepK(SweepArgs),
    /// Compare DCA against quota, greedy re-ranking and the grid oracle, as CSV.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset config (TOML) assigning column roles.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV file, overriding the config's `path`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Fairness attributes to compensate; all by default.
    #[arg(long, value_delimiter = ',')]
    pub attributes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Disparity,
    Di,
    Fpr,
}

impl From<ObjectiveArg> for MetricKind {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Disparity => MetricKind::Disparity,
            ObjectiveArg::Di => MetricKind::DisparateImpact,
            ObjectiveArg::Fpr => MetricKind::FprGap,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ObjectiveArgs {
    /// Selection fraction.
    #[arg(long)]
    pub k: Option<f64>,
    /// Optimize the log-discounted objective over ranks up to `--k-max`.
    #[arg(long)]
    pub log_discount: bool,
    /// Deepest selection fraction in log-discount mode (default 0.5).
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long, value_enum, default_value = "disparity")]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Bonus rounding step (default 0.5)
    #[arg(long)]
    pub granularity: Option<f64>,
    /// Upper bound for every bonus component; unbounded by default
    #[arg(long)]
    pub bonus_max: Option<f64>,
    /// Master seed for sampling
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Records drawn per iteration (default 500)
    #[arg(long)]
    pub sample_size: Option<usize>,
    /// Optimizer settings as JSON (the `config.dca` block of a report); flags override it.
    #[arg(long)]
    pub dca_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Write the JSON report here (`-` for stdout)
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    /// `name=value` pairs, or a JSON file holding a report or a name-to-value map.
    #[arg(long)]
    pub bonus: Option<String>,
    /// Metrics to report.
    #[arg(long, value_delimiter = ',', default_values = ["disparity", "ddp"])]
    pub metrics: Vec<MetricArg>,
    /// Granularity recorded with the bonus (default 0.5)
    #[arg(long)]
    pub granularity: Option<f64>,
    /// Write the JSON report here (`-` for stdout)
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Disparity,
    Di,
    Fpr,
    Ddp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepMode {
    /// Optimize separately at every k.
    PerK,
    /// One bonus (given, or optimized at `--k`) applied at every k.
    FixedBonus,
    /// One bonus optimized for the log-discounted objective, applied at every k.
    LogDiscounted,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub k_grid: Vec<f64>,
    #[arg(long, value_enum, default_value = "per-k")]
    pub mode: SweepMode,
    /// Bonus for `fixed-bonus` mode, as for `evaluate`.
    #[arg(long)]
    pub bonus: Option<String>,
    /// Write the CSV here (`-` or omitted for stdout)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Dca,
    Quota,
    Greedy,
    Oracle,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub objective: ObjectiveArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long, value_delimiter = ',', default_values = ["dca", "quota", "greedy"])]
    pub methods: Vec<Method>,
    /// Also emit DCA's bonus scaled by 0, STEP, 2*STEP, .., 1.
    #[arg(long)]
    pub scale_sweep: Option<f64>,
    /// Quota fraction; the population share of protected records by default.
    #[arg(long)]
    pub quota: Option<f64>,
    /// Write the CSV here (`-` or omitted for stdout)
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let reason = match &e {
                DcaError::Config(m) | DcaError::Data(m) | DcaError::Infeasible(m) => m.clone(),
                DcaError::Io(io) => io.to_string(),
            };
            eprintln!("error: kind={} reason={}", e.kind(), reason.replace('\n', " "));
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ComputeBonus(a) => compute_bonus(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::SweepK(a) => sweep_k(&a),
        Command::Compare(a) => compare(&a),
    }
}

struct Loaded {
    config: DatasetConfig,
    report: LoadReport,
    attributes: Vec<String>,
    warnings: Vec<String>,
}

const MAX_ROW_WARNINGS: usize = 20;

fn load(args: &DataArgs) -> Result<Loaded> {
    let mut config = DatasetConfig::from_file(&args.config)?;
    if let Some(p) = &args.data {
        config.path = Some(p.clone());
    }
    let report = load_dataset(&config)?;
    let attributes = args.attributes.clone().unwrap_or_else(|| report.table.fairness_names());
    report.table.fairness_indices(&attributes)?;
    let mut warnings: Vec<String> = report.skipped.iter().take(MAX_ROW_WARNINGS).cloned().collect();
    if report.skipped.len() > MAX_ROW_WARNINGS {
        warnings.push(format!("{} rows skipped in total", report.skipped.len()));
    }
    Ok(Loaded { config, report, attributes, warnings })
}

fn objective_of(args: &ObjectiveArgs) -> Objective {
    let kind = args.objective.into();
    if args.log_discount {
        Objective::log_discounted(kind, args.k_max.unwrap_or(0.5))
    } else {
        Objective::at_k(kind)
    }
}

fn ranking_of(loaded: &Loaded, args: &ObjectiveArgs) -> Result<RankingSpec> {
    let k = args.k.or(loaded.config.k).or(if args.log_discount { Some(args.k_max.unwrap_or(0.5)) } else { None });
    loaded.config.ranking_spec(k)
}

fn dca_config_of(opt: &OptimizerArgs, objective: Objective, attributes: &[String]) -> Result<DcaConfig> {
    let mut cfg = match &opt.dca_config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| DcaError::config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| DcaError::config(format!("{}: {e}", p.display())))?
        }
        None => DcaConfig { objective, ..DcaConfig::default() },
    };
    if opt.dca_config.is_none() || opt.seed != 0 {
        cfg.sample.seed = opt.seed;
    }
    if let Some(g) = opt.granularity {
        cfg.granularity = g;
    }
    if opt.bonus_max.is_some() {
        cfg.bonus_max = opt.bonus_max;
    }
    if let Some(s) = opt.sample_size {
        cfg.sample.sample_size = s;
    }
    if cfg.attributes.is_none() {
        cfg.attributes = Some(attributes.to_vec());
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub dataset: DatasetConfig,
    pub k: f64,
    pub attributes: Vec<String>,
    pub objective: Objective,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dca: Option<DcaConfig>,
}

#[derive(Debug, Serialize)]
pub struct DatasetEcho {
    pub n_records: usize,
    pub k_count: usize,
    pub skipped_rows: usize,
}

#[derive(Debug, Default, Serialize)]
pub struct Evaluation {
    pub metrics: BTreeMap<String, DisparityVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ddp: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_time_s: Option<f64>,
}

/// JSON report of `compute-bonus` and `evaluate`.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ConfigEcho,
    pub dataset: DatasetEcho,
    pub bonus: BonusVector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub core_bonus: Option<BonusVector>,
    pub before: Evaluation,
    pub after: Evaluation,
    pub ndcg: f64,
    pub warnings: Vec<String>,
    /// The only fields that vary between identical runs.
    pub timing: Timing,
}

fn metric_name(objective: &Objective) -> String {
    let base = match objective.kind {
        MetricKind::Disparity => "disparity",
        MetricKind::DisparateImpact => "di",
        MetricKind::FprGap => "fpr",
    };
    match objective.discounting {
        Discounting::AtK => base.to_string(),
        Discounting::LogDiscounted { .. } => format!("log_discounted_{base}"),
    }
}

fn binary_attrs(table: &RecordTable, attrs: &[String]) -> Vec<String> {
    attrs
        .iter()
        .filter(|a| table.fairness_column(a).is_some_and(|c| c.kind == AttrKind::Binary))
        .cloned()
        .collect()
}

fn ddp_of(table: &RecordTable, spec: &RankingSpec, bonus: &BonusVector, attrs: &[String], warnings: &mut Vec<String>) -> Result<Option<f64>> {
    let bin = binary_attrs(table, attrs);
    if bin.is_empty() {
        warnings.push("no binary attributes; DDP not reported".into());
        return Ok(None);
    }
    let DdpReport { value, warnings: w } = ddp_for_bonus(table, spec, bonus, &bin)?;
    warnings.extend(w);
    Ok(Some(value))
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout().write_all(bytes)?;
    } else {
        std::fs::write(path, bytes)
            .map_err(|e| DcaError::config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn emit_report(report: &RunReport, json: Option<&Path>) -> Result<()> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match json {
        Some(p) if p.as_os_str() == "-" => {}
        _ => print!("{}", render_table(report)),
    }
    if let Some(p) = json {
        let mut text = serde_json::to_string_pretty(report).map_err(|e| DcaError::data(format!("json: {e}")))?;
        text.push('\n');
        write_output(p, text.as_bytes())?;
    }
    Ok(())
}

/// Table with one column per attribute plus the norm.
pub fn render_table(report: &RunReport) -> String {
    let names = report.bonus.names();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(10) + 2;
    let mut out = String::new();
    out.push_str(&format!(
        "n = {}, k = {} ({} selected)\n",
        report.dataset.n_records, report.config.k, report.dataset.k_count
    ));
    out.push_str(&format!("{:<22}", ""));
    for n in names {
        out.push_str(&format!("{n:>width$}"));
    }
    out.push_str(&format!("{:>10}\n", "Norm"));
    out.push_str(&format!("{:<22}", "Bonus points"));
    for (_, v) in report.bonus.iter() {
        out.push_str(&format!("{v:>width$.2}"));
    }
    out.push('\n');
    if let Some(core) = &report.core_bonus {
        out.push_str(&format!("{:<22}", "  (core pass)"));
        for (_, v) in core.iter() {
            out.push_str(&format!("{v:>width$.2}"));
        }
        out.push('\n');
    }
    for (metric, before) in &report.before.metrics {
        for (label, vec) in [("before", Some(before)), ("after", report.after.metrics.get(metric))] {
            let Some(vec) = vec else { continue };
            out.push_str(&format!("{:<22}", format!("{metric} {label}")));
            for n in names {
                match vec.get(n) {
                    Some(c) => out.push_str(&format!("{c:>width$.4}")),
                    None => out.push_str(&format!("{:>width$}", "-")),
                }
            }
            out.push_str(&format!("{:>10.4}\n", vec.norm));
        }
    }
    out.push_str(&format!("nDCG@k {:.4}\n", report.ndcg));
    if let (Some(b), Some(a)) = (report.before.ddp, report.after.ddp) {
        out.push_str(&format!("DDP {b:.4} -> {a:.4}\n"));
    }
    out.push_str(&format!("wall time {:.3} s\n", report.timing.wall_time_s));
    out
}

pub fn compute_bonus(args: &ComputeArgs) -> Result<()> {
    let started = Instant::now();
    let loaded = load(&args.data)?;
    let table = &loaded.report.table;
    let spec = ranking_of(&loaded, &args.objective)?;
    let objective = objective_of(&args.objective);
    let config = dca_config_of(&args.optimizer, objective.clone(), &loaded.attributes)?;
    let result = run_dca(table, &spec, &config)?;

    let mut warnings = loaded.warnings.clone();
    warnings.extend(result.warnings.iter().cloned());
    let zero = BonusVector::zeros(result.bonus.names().to_vec(), result.bonus.granularity);
    let ddp_before = ddp_of(table, &spec, &zero, &loaded.attributes, &mut warnings)?;
    let ddp_after = ddp_of(table, &spec, &result.bonus, &loaded.attributes, &mut Vec::new())?;
    let name = metric_name(&config.objective);
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: "compute-bonus",
        config: ConfigEcho {
            dataset: loaded.config.clone(),
            k: spec.k,
            attributes: loaded.attributes.clone(),
            objective: config.objective.clone(),
            dca: Some(config),
        },
        dataset: DatasetEcho {
            n_records: table.len(),
            k_count: selection_count(spec.k, table.len()).0,
            skipped_rows: loaded.report.skipped.len(),
        },
        bonus: result.bonus.clone(),
        core_bonus: Some(result.core_bonus.clone()),
        before: Evaluation { metrics: [(name.clone(), result.objective_before.clone())].into(), ddp: ddp_before },
        after: Evaluation { metrics: [(name, result.objective_after.clone())].into(), ddp: ddp_after },
        ndcg: result.ndcg_after,
        warnings,
        timing: Timing { wall_time_s: started.elapsed().as_secs_f64(), loop_time_s: Some(result.loop_time.as_secs_f64()) },
    };
    emit_report(&report, args.json.as_deref())
}

/// Parses `a=1.5,b=2` or reads a JSON file with a `bonus` map (a report) or a bare map.
pub fn parse_bonus(spec: &str, granularity: f64) -> Result<BonusVector> {
    let path = Path::new(spec);
    if spec.ends_with(".json") || (path.is_file() && !spec.contains('=')) {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DcaError::config(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| DcaError::config(format!("{}: {e}", path.display())))?;
        let map = value.get("bonus").unwrap_or(&value);
        let obj = map
            .as_object()
            .ok_or_else(|| DcaError::config(format!("{}: expected a name-to-value map", path.display())))?;
        let pairs = obj
            .iter()
            .map(|(k, v)| {
                v.as_f64()
                    .map(|x| (k.clone(), x))
                    .ok_or_else(|| DcaError::config(format!("bonus `{k}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        return BonusVector::from_pairs(pairs, granularity);
    }
    let pairs = spec
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| DcaError::config(format!("bonus entry `{item}` is not name=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| DcaError::config(format!("bonus `{}` has a non-numeric value", k.trim())))?;
            Ok((k.trim().to_string(), v))
        })
        .collect::<Result<Vec<_>>>()?;
    BonusVector::from_pairs(pairs, granularity)
}

fn evaluate_metric(
    table: &RecordTable,
    spec: &RankingSpec,
    bonus: &BonusVector,
    objective: &Objective,
    attrs: &[String],
) -> Result<DisparityVector> {
    objective.validate(table, attrs)?;
    if bonus.names() == attrs {
        return objective.evaluate(table, spec, bonus);
    }
    // bonuses may target other attributes than the ones measured
    let selection = select_with_bonus(table, spec, bonus)?;
    match objective.discounting {
        Discounting::AtK => selection_metric(table, &selection, objective.kind, attrs),
        Discounting::LogDiscounted { .. } => Err(DcaError::config(
            "log-discounted evaluation needs the bonus to cover exactly the measured attributes",
        )),
    }
}

fn selection_metric(table: &RecordTable, selection: &SelectionResult, kind: MetricKind, attrs: &[String]) -> Result<DisparityVector> {
    match kind {
        MetricKind::Disparity => disparity(table, selection, attrs),
        MetricKind::DisparateImpact => disparate_impact_scaled(table, selection, attrs),
        MetricKind::FprGap => fpr_gap(table, selection, attrs),
    }
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let started = Instant::now();
    let loaded = load(&args.data)?;
    let table = &loaded.report.table;
    let spec = ranking_of(&loaded, &args.objective)?;
    let granularity = args.granularity.unwrap_or(crate::model::DEFAULT_GRANULARITY);
    let bonus = match &args.bonus {
        Some(b) => {
            let given = parse_bonus(b, granularity)?;
            table.fairness_indices(given.names())?;
            given
        }
        None => BonusVector::zeros(loaded.attributes.clone(), granularity),
    };
    let zero = BonusVector::zeros(bonus.names().to_vec(), granularity);
    let mut warnings = loaded.warnings.clone();
    let mut before = Evaluation::default();
    let mut after = Evaluation::default();
    let base = objective_of(&args.objective);
    for m in &args.metrics {
        let kind = match m {
            MetricArg::Disparity => MetricKind::Disparity,
            MetricArg::Di => MetricKind::DisparateImpact,
            MetricArg::Fpr => MetricKind::FprGap,
            MetricArg::Ddp => {
                before.ddp = ddp_of(table, &spec, &zero, &loaded.attributes, &mut warnings)?;
                after.ddp = ddp_of(table, &spec, &bonus, &loaded.attributes, &mut Vec::new())?;
                continue;
            }
        };
        let objective = Objective { kind, discounting: base.discounting.clone() };
        let attrs = if kind == MetricKind::DisparateImpact {
            binary_attrs(table, &loaded.attributes)
        } else {
            loaded.attributes.clone()
        };
        let name = metric_name(&objective);
        let b = evaluate_metric(table, &spec, &zero, &objective, &attrs)?;
        let a = evaluate_metric(table, &spec, &bonus, &objective, &attrs)?;
        warnings.extend(b.warnings.iter().cloned());
        before.metrics.insert(name.clone(), b);
        after.metrics.insert(name, a);
    }
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        command: "evaluate",
        config: ConfigEcho {
            dataset: loaded.config.clone(),
            k: spec.k,
            attributes: loaded.attributes.clone(),
            objective: base,
            dca: None,
        },
        dataset: DatasetEcho {
            n_records: table.len(),
            k_count: selection_count(spec.k, table.len()).0,
            skipped_rows: loaded.report.skipped.len(),
        },
        ndcg: ndcg_for_bonus(table, &spec, &bonus)?,
        bonus,
        core_bonus: None,
        before,
        after,
        warnings,
        timing: Timing { wall_time_s: started.elapsed().as_secs_f64(), loop_time_s: None },
    };
    emit_report(&report, args.json.as_deref())
}

fn write_csv_rows(path: Option<&Path>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| DcaError::data(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| DcaError::data(format!("csv: {e}")))?;
    match path {
        Some(p) => write_output(p, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn sweep_k(args: &SweepArgs) -> Result<()> {
    let loaded = load(&args.data)?;
    let table = &loaded.report.table;
    if args.k_grid.iter().any(|&k| !(k > 0.0 && k < 1.0)) {
        return Err(DcaError::config("every k in --k-grid must lie in (0, 1)"));
    }
    let kind: MetricKind = args.objective.objective.into();
    let at_k = Objective::at_k(kind);
    let attrs = &loaded.attributes;
    let first_k = args.k_grid[0];
    let base_spec = loaded.config.ranking_spec(Some(first_k))?;

    let shared: Option<BonusVector> = match args.mode {
        SweepMode::PerK => None,
        SweepMode::FixedBonus => Some(match &args.bonus {
            Some(b) => parse_bonus(b, args.optimizer.granularity.unwrap_or(crate::model::DEFAULT_GRANULARITY))?,
            None => {
                let k = args.objective.k.or(loaded.config.k).ok_or_else(|| {
                    DcaError::config("fixed-bonus mode needs --bonus or --k to optimize at")
                })?;
                let spec = loaded.config.ranking_spec(Some(k))?;
                let cfg = dca_config_of(&args.optimizer, at_k.clone(), attrs)?;
                run_dca(table, &spec, &cfg)?.bonus
            }
        }),
        SweepMode::LogDiscounted => {
            let k_max = args
                .objective
                .k_max
                .unwrap_or_else(|| args.k_grid.iter().copied().fold(0.0, f64::max));
            let spec = loaded.config.ranking_spec(Some(k_max))?;
            let cfg = dca_config_of(&args.optimizer, Objective::log_discounted(kind, k_max), attrs)?;
            Some(run_dca(table, &spec, &cfg)?.bonus)
        }
    };

    let rows: Vec<Result<Vec<String>>> = args
        .k_grid
        .par_iter()
        .map(|&k| {
            let spec = base_spec.with_k(k)?;
            let bonus = match &shared {
                Some(b) => b.clone(),
                None => {
                    let cfg = dca_config_of(&args.optimizer, at_k.clone(), attrs)?;
                    run_dca(table, &spec, &cfg)?.bonus
                }
            };
            let d = evaluate_metric(table, &spec, &bonus, &at_k, attrs)?;
            let ndcg = ndcg_for_bonus(table, &spec, &bonus)?;
            let mut row = vec![fmt(k)];
            row.extend(attrs.iter().map(|a| d.get(a).map(fmt).unwrap_or_default()));
            row.push(fmt(d.norm));
            row.push(fmt(ndcg));
            row.extend(attrs.iter().map(|a| bonus.get(a).map(fmt).unwrap_or_default()));
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut header = vec!["k".to_string()];
    header.extend(attrs.iter().cloned());
    header.push("norm".into());
    header.push("ndcg".into());
    header.extend(attrs.iter().map(|a| format!("bonus:{a}")));
    write_csv_rows(args.csv.as_deref(), &header, &rows)
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    if args.methods.is_empty() {
        return Err(DcaError::config("--methods must name at least one method"));
    }
    let loaded = load(&args.data)?;
    let table = &loaded.report.table;
    let spec = ranking_of(&loaded, &args.objective)?;
    let objective = objective_of(&args.objective);
    let kind = objective.kind;
    let attrs = &loaded.attributes;
    let at_k = Objective::at_k(kind);
    let mut warnings = loaded.warnings.clone();

    let mut rows: Vec<Vec<String>> = Vec::new();
    let push = |rows: &mut Vec<Vec<String>>, method: &str, param: String, d: &DisparityVector, ndcg: f64| {
        let mut row = vec![method.to_string(), param];
        row.extend(attrs.iter().map(|a| d.get(a).map(fmt).unwrap_or_default()));
        row.push(fmt(d.norm));
        row.push(fmt(ndcg));
        rows.push(row);
    };
    let zero = BonusVector::zeros(attrs.clone(), crate::model::DEFAULT_GRANULARITY);
    let baseline = evaluate_metric(table, &spec, &zero, &at_k, attrs)?;
    push(&mut rows, "baseline", String::new(), &baseline, 1.0);

    let mut dca_selection = None;
    if args.methods.contains(&Method::Dca) {
        let cfg = dca_config_of(&args.optimizer, objective.clone(), attrs)?;
        let result = run_dca(table, &spec, &cfg)?;
        warnings.extend(result.warnings.iter().cloned());
        let d = evaluate_metric(table, &spec, &result.bonus, &at_k, attrs)?;
        push(&mut rows, "dca", bonus_label(&result.bonus), &d, result.ndcg_after);
        if let Some(step) = args.scale_sweep {
            for p in scale_sweep(table, &spec, &result.bonus, &at_k, step)? {
                let d = evaluate_metric(table, &spec, &p.bonus, &at_k, attrs)?;
                push(&mut rows, "dca_scaled", fmt(p.scale), &d, p.ndcg);
            }
        }
        dca_selection = Some(select_with_bonus(table, &spec, &result.bonus)?);
    }
    let binary = binary_attrs(table, attrs);
    if args.methods.contains(&Method::Quota) {
        if binary.is_empty() {
            warnings.push("quota skipped: no binary attributes".into());
        } else {
            let protected_share = (0..table.len())
                .filter(|&r| binary.iter().any(|a| table.fairness_column(a).is_some_and(|c| c.values[r] == 1.0)))
                .count() as f64
                / table.len() as f64;
            let q = QuotaSpec { quota_fraction: args.quota.unwrap_or(protected_share), protected: binary.clone() };
            let out = quota_select(table, &spec, &q)?;
            if out.shortfall {
                warnings.push(format!("quota reserved {} slots but only {} protected records exist", out.reserved, out.protected_selected));
            }
            let d = selection_metric(table, &out.selection, kind, attrs)?;
            push(&mut rows, "quota", fmt(q.quota_fraction), &d, selection_ndcg(table, &spec, &out.selection)?);
        }
    }
    if args.methods.contains(&Method::Greedy) {
        if binary.is_empty() {
            warnings.push("greedy skipped: no binary attributes".into());
        } else {
            let constraints = match &dca_selection {
                Some(sel) => ConstraintSet::from_selection(table, sel, &binary)?,
                None => {
                    let parity = DisparityVector::new(binary.clone(), vec![0.0; binary.len()]);
                    ConstraintSet::from_target(table, &parity, selection_count(spec.k, table.len()).0)?
                }
            };
            let sel = greedy_reranker(table, &spec, &constraints)?;
            let d = selection_metric(table, &sel, kind, attrs)?;
            let label = constraints.minima.iter().map(|(k, v)| format!("{k}>={v}")).collect::<Vec<_>>().join(";");
            push(&mut rows, "greedy", label, &d, selection_ndcg(table, &spec, &sel)?);
        }
    }
    if args.methods.contains(&Method::Oracle) {
        let g = args.optimizer.granularity.unwrap_or(crate::model::DEFAULT_GRANULARITY);
        let max = args.optimizer.bonus_max.unwrap_or(DEFAULT_ORACLE_BONUS_MAX);
        let out = grid_search_oracle(table, &spec, attrs, g, max, &objective)?;
        let d = evaluate_metric(table, &spec, &out.bonus, &at_k, attrs)?;
        push(&mut rows, "oracle", bonus_label(&out.bonus), &d, ndcg_for_bonus(table, &spec, &out.bonus)?);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let mut header = vec!["method".to_string(), "parameter".to_string()];
    header.extend(attrs.iter().cloned());
    header.push("norm".into());
    header.push("ndcg".into());
    write_csv_rows(args.csv.as_deref(), &header, &rows)
}

fn bonus_label(b: &BonusVector) -> String {
    b.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(";")
}

/// Drops the `timing` block so two reports of identical runs compare equal.
pub fn strip_timing(report: &mut serde_json::Value) {
    if let Some(obj) = report.as_object_mut() {
        obj.remove("timing");
    }
}
