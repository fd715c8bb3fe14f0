//! Batch front end: dataset ingestion, run configuration, evaluation of all
//! DMUs and serialized reports.
//!
//! Input CSV header: `dmu,i:<name>,...,o:<name>,...`: the `i:`/`o:`
//! prefixes disambiguate inputs from outputs without a side schema. Values
//! use `.` as the decimal separator and no thousands separators.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::common::SolveOptions;
use crate::core::{
    self, Evaluation, ModelKind, Orientation, ReturnsToScale, Technology,
    ZeroAdjustmentLog, ZeroOutputPolicy, DEFAULT_ZERO_REPLACEMENT_FACTOR,
};
use crate::{lo, oracle, projection, qo, scores, DeaError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

/// A parsed dataset before the returns-to-scale regime is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub names: Vec<String>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    /// m x n, row-major by variable.
    pub inputs: Vec<Vec<f64>>,
    /// s x n.
    pub outputs: Vec<Vec<f64>>,
}

impl RawDataset {
    pub fn into_technology(self, rts: ReturnsToScale) -> Technology {
        Technology {
            inputs: self.inputs,
            outputs: self.outputs,
            names: self.names,
            rts,
        }
    }
}

/// Parses the input CSV format from a string.
pub fn parse_dataset_csv(text: &str) -> Result<RawDataset, DeaError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| DeaError::Parse(format!("csv header: {e}")))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("dmu") {
        return Err(DeaError::Parse(
            "first column of the header must be `dmu`".into(),
        ));
    }
    let mut input_names = Vec::new();
    let mut output_names = Vec::new();
    // Column kind per data column: true = input.
    let mut kinds = Vec::new();
    for h in headers.iter().skip(1) {
        if let Some(name) = h.strip_prefix("i:") {
            input_names.push(name.to_string());
            kinds.push(true);
        } else if let Some(name) = h.strip_prefix("o:") {
            output_names.push(name.to_string());
            kinds.push(false);
        } else {
            return Err(DeaError::Parse(format!(
                "column `{h}` must be prefixed with `i:` or `o:`"
            )));
        }
    }
    if input_names.is_empty() || output_names.is_empty() {
        return Err(DeaError::Parse(
            "dataset needs at least one input and one output column".into(),
        ));
    }

    let mut names = Vec::new();
    let mut inputs = vec![Vec::new(); input_names.len()];
    let mut outputs = vec![Vec::new(); output_names.len()];
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DeaError::Parse(format!("csv row {}: {e}", line + 2)))?;
        if record.len() != kinds.len() + 1 {
            return Err(DeaError::Parse(format!(
                "row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                kinds.len() + 1
            )));
        }
        names.push(record[0].to_string());
        let mut ii = 0;
        let mut oi = 0;
        for (k, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                DeaError::Parse(format!("row {}: `{field}` is not a number", line + 2))
            })?;
            if kinds[k] {
                inputs[ii].push(v);
                ii += 1;
            } else {
                outputs[oi].push(v);
                oi += 1;
            }
        }
    }
    if names.is_empty() {
        return Err(DeaError::Parse("dataset has no DMU rows".into()));
    }
    Ok(RawDataset {
        names,
        input_names,
        output_names,
        inputs,
        outputs,
    })
}

/// Parses the inline orientation spec `d1,...,dm:d1,...,ds`.
pub fn parse_orientation_spec(spec: &str) -> Result<Orientation, DeaError> {
    let (left, right) = spec
        .split_once(':')
        .ok_or_else(|| DeaError::Parse("orientation spec needs one `:` separator".into()))?;
    let parse_side = |side: &str, which: &str| -> Result<Vec<f64>, DeaError> {
        side.split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    DeaError::Parse(format!("{which} orientation `{tok}` is not a number"))
                })
            })
            .collect()
    };
    Ok(Orientation {
        input_coeffs: parse_side(left, "input")?,
        output_coeffs: parse_side(right, "output")?,
    })
}

/// Parses `crs|vrs|nirs|ndrs|grs:L:U`.
pub fn parse_rts_spec(spec: &str) -> Result<ReturnsToScale, DeaError> {
    let rts = match spec.to_ascii_lowercase().as_str() {
        "crs" => ReturnsToScale::Crs,
        "vrs" => ReturnsToScale::Vrs,
        "nirs" => ReturnsToScale::Nirs,
        "ndrs" => ReturnsToScale::Ndrs,
        other => {
            let mut parts = other.split(':');
            if parts.next() != Some("grs") {
                return Err(DeaError::Parse(format!(
                    "unknown returns-to-scale spec `{spec}`"
                )));
            }
            let mut bound = || -> Result<f64, DeaError> {
                parts
                    .next()
                    .ok_or_else(|| DeaError::Parse("grs spec needs `grs:L:U`".into()))?
                    .parse()
                    .map_err(|_| DeaError::Parse(format!("bad grs bound in `{spec}`")))
            };
            let lower = bound()?;
            let upper = bound()?;
            ReturnsToScale::Grs { lower, upper }
        }
    };
    rts.validate()?;
    Ok(rts)
}

/// Which model(s) a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Lo,
    Qo,
    Both,
}

impl ModelChoice {
    fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Lo => vec![ModelKind::Lo],
            ModelChoice::Qo => vec![ModelKind::Qo],
            ModelChoice::Both => vec![ModelKind::Lo, ModelKind::Qo],
        }
    }
}

impl std::str::FromStr for ModelChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lo" => Ok(ModelChoice::Lo),
            "qo" => Ok(ModelChoice::Qo),
            "both" => Ok(ModelChoice::Both),
            _ => Err(format!("unknown model `{s}` (expected lo|qo|both)")),
        }
    }
}

/// Batch-run settings. JSON config file and CLI flags populate the same
/// structure; flags win.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelChoice,
    /// Inline orientation spec; all-ones when absent.
    pub orient: Option<String>,
    pub rts: String,
    pub second_stage: bool,
    pub zero_output_policy: ZeroOutputPolicy,
    /// Per-output-index overrides of the global zero-output policy.
    pub zero_output_policy_overrides: BTreeMap<usize, ZeroOutputPolicy>,
    pub zero_replacement_factor: f64,
    pub qo_force_bisection: bool,
    pub beta_tolerance: f64,
    /// Decimal places in the human-readable table.
    pub round: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelChoice::Both,
            orient: None,
            rts: "crs".into(),
            second_stage: true,
            zero_output_policy: ZeroOutputPolicy::Potential,
            zero_output_policy_overrides: BTreeMap::new(),
            zero_replacement_factor: DEFAULT_ZERO_REPLACEMENT_FACTOR,
            qo_force_bisection: false,
            beta_tolerance: 1e-9,
            round: 6,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, DeaError> {
        serde_json::from_str(text).map_err(|e| DeaError::Parse(format!("config: {e}")))
    }

    fn policies(&self, num_outputs: usize) -> Vec<ZeroOutputPolicy> {
        (0..num_outputs)
            .map(|r| {
                self.zero_output_policy_overrides
                    .get(&r)
                    .copied()
                    .unwrap_or(self.zero_output_policy)
            })
            .collect()
    }
}

/// One DMU's result row in the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub dmu: String,
    pub evaluation: Evaluation,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelRun {
    pub model: ModelKind,
    pub rows: Vec<EvalRow>,
}

/// The serialized result tables of one batch run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub dataset: String,
    pub rts: String,
    pub orientation: Orientation,
    /// Same orientation scaled to max coefficient 1, for readability.
    pub orientation_normalized: Orientation,
    pub second_stage: bool,
    pub zero_adjustments: ZeroAdjustmentLog,
    pub runs: Vec<ModelRun>,
}

/// One figure-ready bar per variable: contraction/dilation factor plus the
/// relative target slack; dilation rows also carry the inverse factor for
/// the inverse-scale view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarRow {
    pub variable: String,
    pub kind: String,
    pub orientation_coeff: f64,
    pub factor: f64,
    pub relative_slack: f64,
    pub inverse_factor: Option<f64>,
}

/// Bar-plot rows for one evaluation, inputs first then outputs.
pub fn emit_bars(eval: &Evaluation, d: &Orientation) -> Vec<BarRow> {
    let mut rows = Vec::new();
    for (i, theta) in eval.theta.iter().enumerate() {
        rows.push(BarRow {
            variable: format!("input {}", i + 1),
            kind: "input".into(),
            orientation_coeff: d.input_coeffs[i],
            factor: *theta,
            relative_slack: eval.tau_minus[i],
            inverse_factor: None,
        });
    }
    for (r, phi) in eval.phi.iter().enumerate() {
        rows.push(BarRow {
            variable: format!("output {}", r + 1),
            kind: "output".into(),
            orientation_coeff: d.output_coeffs[r],
            factor: *phi,
            relative_slack: eval.tau_plus[r],
            inverse_factor: Some(1.0 / phi),
        });
    }
    rows
}

/// Evaluates every DMU of the technology with one model, in parallel, and
/// returns rows in input order.
pub fn evaluate_all(
    tech: &Technology,
    d: &Orientation,
    model: ModelKind,
    log: &ZeroAdjustmentLog,
    cfg: &RunConfig,
) -> Result<Vec<EvalRow>, DeaError> {
    let results: Vec<Result<EvalRow, DeaError>> = (0..tech.num_dmus())
        .into_par_iter()
        .map(|j| {
            let subject = tech.activity(j);
            let opts = SolveOptions {
                second_stage: cfg.second_stage,
                frozen_inputs: log.frozen_inputs(j),
                excluded_outputs: log.excluded_outputs(j),
                qo_force_bisection: cfg.qo_force_bisection,
                beta_tol: cfg.beta_tolerance,
            };
            let eval = match model {
                ModelKind::Lo => lo::solve_lo_with(tech, &subject, d, &opts)?,
                ModelKind::Qo => qo::solve_qo_with(tech, &subject, d, &opts)?,
            };
            let mut notes = Vec::new();
            if !eval.max_slack_resolved {
                notes.push("projection from solver vertex, not necessarily max-slack".into());
            }
            Ok(EvalRow {
                dmu: tech.names[j].clone(),
                evaluation: eval,
                notes,
            })
        })
        .collect();
    results.into_iter().collect()
}

fn fmt_vec(v: &[f64], digits: usize) -> String {
    v.iter()
        .map(|x| format!("{x:.digits$}"))
        .collect::<Vec<_>>()
        .join("|")
}

/// Renders the human-readable table with fixed-decimal formatting.
pub fn render_table(report: &Report, digits: usize) -> String {
    let mut out = String::new();
    out.push_str("model,dmu,beta,rho,theta,phi,tau_minus,tau_plus,target_inputs,target_outputs,projection_inputs,projection_outputs,outside\n");
    for run in &report.runs {
        let model = match run.model {
            ModelKind::Lo => "lo",
            ModelKind::Qo => "qo",
        };
        for row in &run.rows {
            let e = &row.evaluation;
            out.push_str(&format!(
                "{model},{},{:.digits$},{:.digits$},{},{},{},{},{},{},{},{},{}\n",
                row.dmu,
                e.beta,
                e.rho,
                fmt_vec(&e.theta, digits),
                fmt_vec(&e.phi, digits),
                fmt_vec(&e.tau_minus, digits),
                fmt_vec(&e.tau_plus, digits),
                fmt_vec(&e.target.inputs, digits),
                fmt_vec(&e.target.outputs, digits),
                fmt_vec(&e.projection.inputs, digits),
                fmt_vec(&e.projection.outputs, digits),
                e.outside_technology,
            ));
        }
    }
    out
}

#[derive(Debug, Parser)]
#[command(
    name = "deaorient",
    about = "Oriented DEA batch solver: LO and QO models, targets, projections, Farrell scores"
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every DMU and write reports.
    Eval(EvalArgs),
    /// Run the oracle and invariant self-check suite on a dataset.
    SelfCheck(SelfCheckArgs),
    /// Emit figure-ready contraction/dilation bar data.
    Bars(BarsArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Input dataset (CSV with `dmu,i:...,o:...` header).
    #[arg(long)]
    data: PathBuf,
    /// JSON run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Orientation `d1,...,dm:d1,...,ds` (default all ones).
    #[arg(long)]
    orient: Option<String>,
    /// Returns to scale: crs|vrs|nirs|ndrs|grs:L:U.
    #[arg(long)]
    rts: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model to run: lo|qo|both.
    #[arg(long)]
    model: Option<ModelChoice>,
    /// Max-slack second stage: on|off.
    #[arg(long)]
    second_stage: Option<String>,
    /// Global zero-output policy: potential|impossible.
    #[arg(long)]
    zero_output_policy: Option<String>,
    /// Force the QO bisection even when the fast path applies.
    #[arg(long)]
    qo_force_bisection: bool,
    /// Decimal places in the table output.
    #[arg(long)]
    round: Option<usize>,
    /// Write the full-precision JSON report here.
    #[arg(long)]
    out_json: Option<PathBuf>,
    /// Write the fixed-decimal CSV table here (defaults to stdout).
    #[arg(long)]
    out_table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelfCheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Dominated-pair samples per model in the monotonicity scan.
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Invert the monotonicity comparator; the scan must then fail, which
    /// proves the checker can detect violations.
    #[arg(long)]
    corrupt_comparator: bool,
}

#[derive(Debug, Args)]
struct BarsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Model to run: lo|qo|both.
    #[arg(long)]
    model: Option<ModelChoice>,
    /// Restrict output to one DMU.
    #[arg(long)]
    dmu: Option<String>,
    #[arg(long)]
    round: Option<usize>,
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let parsed = match CliArgs::try_parse_from(args) {
        Ok(p) => p,
        Err(e) => {
            // clap handles --help/--version through this path too.
            let _ = e.print();
            return if e.use_stderr() { EXIT_DATA } else { EXIT_OK };
        }
    };
    install_thread_pool();
    let outcome = match parsed.command {
        Command::Eval(a) => cmd_eval(&a),
        Command::SelfCheck(a) => cmd_self_check(&a),
        Command::Bars(a) => cmd_bars(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            classify_error(&e)
        }
    }
}

fn classify_error(e: &DeaError) -> i32 {
    match e {
        DeaError::Parse(_)
        | DeaError::Io(_)
        | DeaError::NegativeData(_)
        | DeaError::InvalidOrientation(_)
        | DeaError::InvalidRts(_)
        | DeaError::DimensionMismatch(_)
        | DeaError::NonFinite(_)
        | DeaError::InvalidArgument(_) => EXIT_DATA,
        _ => EXIT_SOLVER,
    }
}

/// `DEAORIENT_THREADS` caps evaluation parallelism; 0 or unset = auto.
fn install_thread_pool() {
    if let Ok(v) = std::env::var("DEAORIENT_THREADS") {
        if let Ok(k) = v.trim().parse::<usize>() {
            if k > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
        }
    }
}

struct LoadedRun {
    tech: Technology,
    log: ZeroAdjustmentLog,
    d: Orientation,
    cfg: RunConfig,
    dataset_path: String,
}

fn load_run(common: &CommonArgs, overrides: impl FnOnce(&mut RunConfig)) -> Result<LoadedRun, DeaError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_json(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &common.orient {
        cfg.orient = Some(o.clone());
    }
    if let Some(r) = &common.rts {
        cfg.rts = r.clone();
    }
    overrides(&mut cfg);

    let rts = parse_rts_spec(&cfg.rts)?;
    let raw = parse_dataset_csv(&fs::read_to_string(&common.data)?)?;
    let tech = raw.into_technology(rts);

    let diagnostics = core::validate_technology(&tech);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("data: {d}");
        }
        return Err(DeaError::InvalidArgument(format!(
            "{} data diagnostics; fix the dataset and retry",
            diagnostics.len()
        )));
    }

    let policies = cfg.policies(tech.num_outputs());
    let (tech, log) = core::preprocess_zeros(&tech, &policies, cfg.zero_replacement_factor)?;

    let d = match &cfg.orient {
        Some(spec) => parse_orientation_spec(spec)?,
        None => Orientation::ones(tech.num_inputs(), tech.num_outputs()),
    };
    if d.input_coeffs.len() != tech.num_inputs() || d.output_coeffs.len() != tech.num_outputs() {
        return Err(DeaError::InvalidOrientation(format!(
            "orientation has {}:{} coefficients, dataset has {}:{}",
            d.input_coeffs.len(),
            d.output_coeffs.len(),
            tech.num_inputs(),
            tech.num_outputs()
        )));
    }
    for j in 0..tech.num_dmus() {
        d.validate_for(&tech.activity(j))?;
    }

    Ok(LoadedRun {
        dataset_path: common.data.display().to_string(),
        tech,
        log,
        d,
        cfg,
    })
}

fn build_report(run: &LoadedRun) -> Result<Report, DeaError> {
    let mut runs = Vec::new();
    for kind in run.cfg.model.kinds() {
        let rows = evaluate_all(&run.tech, &run.d, kind, &run.log, &run.cfg)?;
        runs.push(ModelRun { model: kind, rows });
    }
    Ok(Report {
        dataset: run.dataset_path.clone(),
        rts: run.cfg.rts.clone(),
        orientation: run.d.clone(),
        orientation_normalized: run.d.normalized(),
        second_stage: run.cfg.second_stage,
        zero_adjustments: run.log.clone(),
        runs,
    })
}

fn cmd_eval(args: &EvalArgs) -> Result<i32, DeaError> {
    let run = load_run(&args.common, |cfg| {
        if let Some(m) = args.model {
            cfg.model = m;
        }
        if let Some(ss) = &args.second_stage {
            cfg.second_stage = ss != "off";
        }
        if let Some(p) = &args.zero_output_policy {
            cfg.zero_output_policy = match p.as_str() {
                "impossible" => ZeroOutputPolicy::Impossible,
                _ => ZeroOutputPolicy::Potential,
            };
        }
        if args.qo_force_bisection {
            cfg.qo_force_bisection = true;
        }
        if let Some(r) = args.round {
            cfg.round = r;
        }
    })?;
    let report = build_report(&run)?;

    if let Some(path) = &args.out_json {
        fs::write(path, serde_json::to_string_pretty(&report).expect("serialize"))?;
    }
    let table = render_table(&report, run.cfg.round);
    match &args.out_table {
        Some(path) => fs::write(path, &table)?,
        None => print!("{table}"),
    }
    Ok(EXIT_OK)
}

fn cmd_bars(args: &BarsArgs) -> Result<i32, DeaError> {
    let run = load_run(&args.common, |cfg| {
        if let Some(m) = args.model {
            cfg.model = m;
        }
        if let Some(r) = args.round {
            cfg.round = r;
        }
    })?;
    let report = build_report(&run)?;
    let digits = run.cfg.round;
    println!("model,dmu,variable,kind,orientation_coeff,factor,relative_slack,inverse_factor");
    for model_run in &report.runs {
        let model = match model_run.model {
            ModelKind::Lo => "lo",
            ModelKind::Qo => "qo",
        };
        for row in &model_run.rows {
            if let Some(only) = &args.dmu {
                if &row.dmu != only {
                    continue;
                }
            }
            for bar in emit_bars(&row.evaluation, &run.d) {
                let inv = bar
                    .inverse_factor
                    .map(|v| format!("{v:.digits$}"))
                    .unwrap_or_default();
                println!(
                    "{model},{},{},{},{:.digits$},{:.digits$},{:.digits$},{inv}",
                    row.dmu,
                    bar.variable,
                    bar.kind,
                    bar.orientation_coeff,
                    bar.factor,
                    bar.relative_slack,
                );
            }
        }
    }
    Ok(EXIT_OK)
}

fn cmd_self_check(args: &SelfCheckArgs) -> Result<i32, DeaError> {
    let run = load_run(&args.common, |_| {})?;
    let tech = &run.tech;
    let d = &run.d;
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("self-check {name}: {}", if ok { "ok" } else { "VIOLATION" });
        if !ok {
            failures += 1;
        }
    };

    let within_caps =
        tech.num_dmus() <= oracle::MAX_VARS && tech.num_inputs() + tech.num_outputs() + 2 <= oracle::MAX_CONSTRAINTS;

    let mut evals = Vec::new();
    for j in 0..tech.num_dmus() {
        let subject = tech.activity(j);
        let opts = SolveOptions {
            frozen_inputs: run.log.frozen_inputs(j),
            excluded_outputs: run.log.excluded_outputs(j),
            ..SolveOptions::default()
        };
        let lo_eval = lo::solve_lo_with(tech, &subject, d, &opts)?;
        let qo_eval = qo::solve_qo_with(tech, &subject, d, &opts)?;
        evals.push((subject, lo_eval, qo_eval));
    }

    // beta_Q <= beta_L for every DMU.
    check(
        "beta dominance (QO <= LO)",
        evals.iter().all(|(_, l, q)| q.beta <= l.beta + 1e-9),
    );

    // Targets weakly efficient, projections efficient.
    let mut frontier_ok = true;
    for (_, l, q) in &evals {
        frontier_ok &= projection::is_weakly_efficient(tech, &l.target)?;
        frontier_ok &= projection::is_weakly_efficient(tech, &q.target)?;
        frontier_ok &= projection::is_efficient(tech, &l.projection)?;
        frontier_ok &= projection::is_efficient(tech, &q.projection)?;
    }
    check("targets weakly efficient, projections efficient", frontier_ok);

    // Closed-form scores agree with the generic ratio.
    check(
        "closed-form scores",
        evals.iter().all(|(_, l, q)| {
            (scores::rho_lo_closed_form(l.beta, d) - l.rho).abs() <= 1e-9
                && (scores::rho_qo_closed_form(q.beta, d) - q.rho).abs() <= 1e-9
        }),
    );

    // Fast path vs bisection and CCR coincidence on uniform CRS orientations.
    if qo::fast_path_applies(tech, d) {
        let mut agree = true;
        let mut ccr_ok = true;
        for (subject, l, q) in &evals {
            if qo::check_fast_path_agreement(tech, subject, d, 1e-7).is_err() {
                agree = false;
            }
            let radial = Orientation {
                input_coeffs: vec![1.0; tech.num_inputs()],
                output_coeffs: vec![0.0; tech.num_outputs()],
            };
            let ccr = lo::solve_lo(tech, subject, &radial)?;
            let theta_ccr = 1.0 - ccr.beta;
            ccr_ok &= (l.rho - theta_ccr).abs() <= 1e-6 && (q.rho - theta_ccr).abs() <= 1e-6;
        }
        check("fast path vs bisection", agree);
        check("uniform-orientation scores match CCR", ccr_ok);

        // CRS balance: an output with coefficient d dilates by the inverse
        // of the contraction an input with coefficient d receives.
        let dm = d.input_coeffs[0];
        let dp = d.output_coeffs[0];
        if (dm - dp).abs() <= f64::EPSILON {
            check(
                "CRS balance (phi = 1/theta)",
                evals
                    .iter()
                    .all(|(_, _, q)| (q.phi[0] - 1.0 / q.theta[0]).abs() <= 1e-9),
            );
        }
    }

    // Oracle agreement on desk-scale datasets.
    if within_caps {
        let mut ok = true;
        for (subject, l, q) in &evals {
            let bl = oracle::brute_beta(tech, subject, d, ModelKind::Lo)?;
            let bq = oracle::brute_beta(tech, subject, d, ModelKind::Qo)?;
            ok &= (bl - l.beta).abs() <= 1e-7 && (bq - q.beta).abs() <= 1e-7;

            let p = core::membership_lp(tech, subject)?;
            let fm = {
                let a: Vec<Vec<_>> = p.rows.iter().map(|r| r.iter().map(|v| oracle::rat(*v)).collect()).collect();
                let b: Vec<_> = p.rhs.iter().map(|v| oracle::rat(*v)).collect();
                oracle::fm_feasible(&a, &p.relations, &b, &vec![true; tech.num_dmus()])?
            };
            ok &= fm == crate::lp::feasible(&p)?;
        }
        check("oracle agreement (brute beta, membership)", ok);
    } else {
        println!("self-check oracle agreement: skipped (instance above oracle caps)");
    }

    // Monotonicity scan per model.
    for kind in [ModelKind::Lo, ModelKind::Qo] {
        let name = match kind {
            ModelKind::Lo => "monotonicity (LO)",
            ModelKind::Qo => "monotonicity (QO)",
        };
        let violations = oracle::monotonicity_scan_with(
            tech,
            d,
            kind,
            args.samples,
            args.seed,
            args.corrupt_comparator,
        )?;
        check(name, violations.is_empty());
    }

    if failures == 0 {
        Ok(EXIT_OK)
    } else {
        eprintln!("{failures} self-check violation(s)");
        Ok(EXIT_DATA)
    }
}
