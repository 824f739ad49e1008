//! Command-line workflows: solve for thresholds, reproduce the two-state
//! example, evaluate rules and sweep the prior parameter.
//!
//! Every command validates its configuration before computing anything and
//! writes its artifacts under `--out`. JSON artifacts carry `tool_version`
//! and `model_hash` fields; CSV artifacts start with `#` comment lines
//! holding the same two values.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{DisorderError, Result};
use crate::example::{discrepancy_report, reference_model, DiscrepancyReport};
use crate::model::{DisorderModel, ModelFile};
use crate::sim::{
    dominance_sweep, evaluate_exact, evaluate_mc, write_evaluations_csv, CompetitorFamily,
    EvaluationResult, Verdict, DEFAULT_EXACT_HORIZON, DEFAULT_SIM_HORIZON,
};
use crate::stopping::{
    solve_rstar, stop_decision, value_at_start, Policy, Solution, ValueTable, DEFAULT_MAX_ITERS,
    DEFAULT_TOLERANCE,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

pub fn exit_code(err: &DisorderError) -> i32 {
    match err {
        DisorderError::NonConvergence { .. } | DisorderError::NoAdmissibleAssignment => {
            EXIT_NON_CONVERGENCE
        }
        DisorderError::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_INVALID,
    }
}

#[derive(Debug, Parser)]
#[command(name = "disorder", version, about = "Optimal detection of a switch between two Markov chains")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal thresholds and the optimal success probability.
    Solve(SolveArgs),
    /// Reproduce the two-state reference example and check the printed closed forms.
    Example(ExampleArgs),
    /// Evaluate stopping rules exactly or by simulation.
    Evaluate(EvaluateArgs),
    /// Solve and check dominance over a grid of prior parameters.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model JSON file; defaults to the built-in two-state model.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Override the prior parameter p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Override the tolerance window d.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Sup-norm accuracy certified for the thresholds.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Format of the summary; the threshold table is always JSON.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ExampleArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Rule to evaluate: `optimal`, `all-stop`, `fixed:<t>` or `posterior:<level>`.
    /// Repeatable.
    #[arg(long = "policy", default_value = "optimal")]
    pub policies: Vec<String>,
    /// Threshold table from `solve`; solved inline when absent.
    #[arg(long)]
    pub rstar: Option<PathBuf>,
    /// Enumerate every path instead of simulating.
    #[arg(long)]
    pub exact: bool,
    /// Path length; defaults to 20 with `--exact` and 60 otherwise.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Grid of prior parameters as `start:end:step`, end inclusive.
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub grid: String,
    /// Horizon of the exact evaluations behind the dominance verdict.
    #[arg(long, default_value_t = 16)]
    pub horizon: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&config) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns the files written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>> {
    match &config.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Example(a) => cmd_example(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Loads the model and applies the overrides; the hash is that of the
/// resulting model.
pub fn load_model(args: &ModelArgs) -> Result<DisorderModel> {
    let mut file = match &args.model {
        Some(path) => ModelFile::from_json(&fs::read_to_string(path)?)?,
        None => reference_model().to_file(),
    };
    if let Some(p) = args.p {
        file.p = p;
    }
    if let Some(d) = args.d {
        file.d = d;
    }
    DisorderModel::from_file(&file)
}

impl SolverArgs {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(DisorderError::InvalidInput(format!(
                "--tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(DisorderError::InvalidInput("--max-iters must be positive".into()));
        }
        Ok(())
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_file(path: PathBuf, contents: &[u8]) -> Result<PathBuf> {
    fs::write(&path, contents)?;
    Ok(path)
}

fn csv_header(model_hash: &str) -> String {
    format!("# tool_version={TOOL_VERSION}\n# model_hash={model_hash}\n")
}

fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Serialized threshold table. Infinite thresholds are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RstarFile {
    pub tool_version: String,
    pub model_hash: String,
    pub k: usize,
    pub d: usize,
    pub p: f64,
    pub entries: Vec<RstarEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RstarEntry {
    pub tuple: Vec<usize>,
    pub value: Option<f64>,
}

impl RstarFile {
    pub fn from_table(model: &DisorderModel, table: &ValueTable) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            model_hash: model.content_hash(),
            k: table.k(),
            d: table.d(),
            p: model.p(),
            entries: table
                .iter()
                .map(|(tuple, v)| RstarEntry {
                    tuple,
                    value: v.is_finite().then_some(v),
                })
                .collect(),
        }
    }

    /// Rebuilds the table after checking it was solved for `model`.
    pub fn to_table(&self, model: &DisorderModel) -> Result<ValueTable> {
        let expected = model.content_hash();
        if self.model_hash != expected {
            return Err(DisorderError::ModelHashMismatch {
                expected,
                found: self.model_hash.clone(),
            });
        }
        let mut table = ValueTable::zeros(self.k, self.d)?;
        if self.entries.len() != table.len() {
            return Err(DisorderError::InvalidInput(format!(
                "threshold file has {} entries, expected {}",
                self.entries.len(),
                table.len()
            )));
        }
        let mut values = vec![f64::NAN; table.len()];
        for e in &self.entries {
            if e.tuple.len() != self.d + 1 || e.tuple.iter().any(|&x| x >= self.k) {
                return Err(DisorderError::InvalidInput(format!(
                    "threshold entry {:?} does not fit k = {}, d = {}",
                    e.tuple, self.k, self.d
                )));
            }
            values[table.index_of(&e.tuple)] = e.value.unwrap_or(f64::INFINITY);
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(DisorderError::InvalidInput("threshold file repeats a tuple".into()));
        }
        table = ValueTable::from_values(self.k, self.d, values)?;
        table.check_model(model)?;
        Ok(table)
    }
}

pub fn load_rstar(path: &Path, model: &DisorderModel) -> Result<ValueTable> {
    let file: RstarFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.to_table(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub tool_version: String,
    pub model_hash: String,
    pub p: f64,
    pub d: usize,
    pub iterations: usize,
    pub residual: f64,
    pub certified_error: f64,
    /// Optimal success probability from the initial state.
    pub value: f64,
    pub thresholds: Vec<RstarEntry>,
}

fn format_tuple(t: &[usize]) -> String {
    t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-")
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Vec<PathBuf>> {
    args.solver.validate()?;
    let model = load_model(&args.model)?;
    prepare_out(&args.out)?;
    let Solution {
        table,
        iterations,
        residual,
        certified_error,
    } = solve_rstar(&model, args.solver.tol, args.solver.max_iters)?;
    let rstar = RstarFile::from_table(&model, &table);
    let summary = SolveSummary {
        tool_version: TOOL_VERSION.to_string(),
        model_hash: rstar.model_hash.clone(),
        p: model.p(),
        d: model.d(),
        iterations,
        residual,
        certified_error,
        value: value_at_start(&model, &table)?,
        thresholds: rstar.entries.clone(),
    };
    println!(
        "p = {}, d = {}: {} iterations, certified error {:.3e}, value {:.10}",
        summary.p, summary.d, iterations, certified_error, summary.value
    );
    for e in &summary.thresholds {
        match e.value {
            Some(v) => println!("  r*({}) = {v:.10}", format_tuple(&e.tuple)),
            None => println!("  r*({}) = inf", format_tuple(&e.tuple)),
        }
    }
    let mut written = vec![write_file(args.out.join("rstar.json"), &to_json_bytes(&rstar)?)?];
    written.push(match args.format {
        Format::Json => write_file(args.out.join("solve_summary.json"), &to_json_bytes(&summary)?)?,
        Format::Csv => {
            let mut buf = csv_header(&summary.model_hash).into_bytes();
            {
                let mut w = csv::Writer::from_writer(&mut buf);
                w.write_record(["tuple", "rstar", "iterations", "certified_error", "value"])?;
                for e in &summary.thresholds {
                    w.write_record([
                        format_tuple(&e.tuple),
                        e.value.map_or("inf".to_string(), |v| format!("{v:.12}")),
                        iterations.to_string(),
                        format!("{certified_error:.6e}"),
                        format!("{:.12}", summary.value),
                    ])?;
                }
                w.flush()?;
            }
            write_file(args.out.join("solve_summary.csv"), &buf)?
        }
    });
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub tool_version: String,
    #[serde(flatten)]
    pub report: DiscrepancyReport,
}

/// Grid of the threshold CSV written by `example`.
pub fn example_grid() -> Vec<f64> {
    (1..=99).map(|i| i as f64 / 100.0).collect()
}

fn pairs_text(pairs: &BTreeSet<(usize, usize)>) -> String {
    pairs
        .iter()
        .map(|(i, j)| format!("{i}-{j}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn cmd_example(args: &ExampleArgs) -> Result<Vec<PathBuf>> {
    prepare_out(&args.out)?;
    let model = reference_model();
    let report = ExampleReport {
        tool_version: TOOL_VERSION.to_string(),
        report: discrepancy_report(&model)?,
    };
    for b in &report.report.breakpoints {
        println!("breakpoint {} = {:.9} (computed {:.9})", b.printed, b.printed_value, b.computed);
    }
    let mut buf = csv_header(&report.report.model_hash).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["p", "rstar_0", "rstar_1", "stopping_pairs"])?;
        for p in example_grid() {
            let at_p = model.with_p(p)?;
            let solution = solve_rstar(&at_p, 1e-12, DEFAULT_MAX_ITERS)?;
            let pairs = crate::example::classify_pairs_with(&at_p, &solution.table)?;
            let r = solution.table.values();
            w.write_record([
                format!("{p:.2}"),
                format!("{:.12}", r[0]),
                format!("{:.12}", r[1]),
                pairs_text(&pairs),
            ])?;
        }
        w.flush()?;
    }
    Ok(vec![
        write_file(args.out.join("example_report.json"), &to_json_bytes(&report)?)?,
        write_file(args.out.join("example_thresholds.csv"), &buf)?,
    ])
}

/// Parses a rule name given on the command line.
pub fn parse_policy(spec: &str, rstar: Option<&ValueTable>, model: &DisorderModel) -> Result<Policy> {
    let bad = || DisorderError::InvalidInput(format!("unrecognized policy {spec:?}"));
    match spec.split_once(':') {
        None if spec == "optimal" => Ok(Policy::optimal(
            rstar.cloned().ok_or_else(|| DisorderError::InvalidInput("no thresholds".into()))?,
        )),
        None if spec == "all-stop" => Policy::all_stop(model),
        Some(("fixed", t)) => Ok(Policy::fixed_time(t.parse().map_err(|_| bad())?)),
        Some(("posterior", c)) => {
            let level: f64 = c.parse().map_err(|_| bad())?;
            let policy = Policy::posterior(level);
            policy.check(model)?;
            Ok(policy)
        }
        _ => Err(bad()),
    }
}

fn policy_names_valid(specs: &[String]) -> Result<()> {
    for s in specs {
        let ok = match s.split_once(':') {
            None => s == "optimal" || s == "all-stop",
            Some(("fixed", t)) => t.parse::<usize>().is_ok(),
            Some(("posterior", c)) => c.parse::<f64>().is_ok_and(|c| (0.0..=1.0).contains(&c)),
            _ => false,
        };
        if !ok {
            return Err(DisorderError::InvalidInput(format!("unrecognized policy {s:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub tool_version: String,
    pub model_hash: String,
    pub horizon: usize,
    pub seed: Option<u64>,
    pub results: Vec<EvaluationResult>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Vec<PathBuf>> {
    args.solver.validate()?;
    policy_names_valid(&args.policies)?;
    let horizon = args
        .horizon
        .unwrap_or(if args.exact { DEFAULT_EXACT_HORIZON } else { DEFAULT_SIM_HORIZON });
    if horizon == 0 {
        return Err(DisorderError::InvalidInput("--horizon must be positive".into()));
    }
    if !args.exact && args.trials == 0 {
        return Err(DisorderError::InvalidInput("--trials must be positive".into()));
    }
    let model = load_model(&args.model)?;
    if args.exact {
        let cap = crate::sim::max_exact_horizon(model.k());
        if horizon > cap {
            return Err(DisorderError::Capacity(format!(
                "{}^{horizon} paths exceed the enumeration limit of 2^24; use --horizon {cap} or less",
                model.k()
            )));
        }
    }
    let needs_rstar = args.policies.iter().any(|s| s == "optimal");
    let rstar = match (&args.rstar, needs_rstar) {
        (Some(path), _) => Some(load_rstar(path, &model)?),
        (None, true) => Some(solve_rstar(&model, args.solver.tol, args.solver.max_iters)?.table),
        (None, false) => None,
    };
    let policies = args
        .policies
        .iter()
        .map(|s| parse_policy(s, rstar.as_ref(), &model))
        .collect::<Result<Vec<_>>>()?;
    prepare_out(&args.out)?;
    let results = policies
        .iter()
        .map(|policy| {
            if args.exact {
                evaluate_exact(&model, policy, horizon)
            } else {
                evaluate_mc(&model, policy, args.trials, horizon, args.seed)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    for r in &results {
        println!("{}: {:.10} (+/- {:.2e})", r.policy_id, r.estimate, r.ci_halfwidth);
    }
    let model_hash = model.content_hash();
    let path = match args.format {
        Format::Csv => {
            let mut buf = csv_header(&model_hash).into_bytes();
            write_evaluations_csv(&results, &mut buf)?;
            write_file(args.out.join("evaluation.csv"), &buf)?
        }
        Format::Json => {
            let file = EvaluationFile {
                tool_version: TOOL_VERSION.to_string(),
                model_hash,
                horizon,
                seed: (!args.exact).then_some(args.seed),
                results,
            };
            write_file(args.out.join("evaluation.json"), &to_json_bytes(&file)?)?
        }
    };
    Ok(vec![path])
}

/// Parses `start:end:step` into the grid points, end included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| DisorderError::InvalidInput(format!("grid {spec:?}: {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, step] = parts.as_slice() else {
        return Err(bad("expected start:end:step"));
    };
    let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let (start, end, step) = (parse(start)?, parse(end)?, parse(step)?);
    if !(step > 0.0 && step.is_finite()) {
        return Err(bad("step must be positive"));
    }
    if !(start > 0.0 && end < 1.0) {
        return Err(bad("points must lie in (0, 1)"));
    }
    if start > end {
        return Err(bad("empty grid"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub thresholds: Vec<RstarEntry>,
    /// Windows `x_(n-d-1)..x_n` at which the optimal rule stops.
    pub stopping_windows: Vec<Vec<usize>>,
    pub value: f64,
    pub verdict: Verdict,
    pub best_competitor: String,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFile {
    pub tool_version: String,
    pub model_hash: String,
    pub horizon: usize,
    pub rows: Vec<SweepRow>,
}

fn stopping_windows(model: &DisorderModel, table: &ValueTable) -> Result<Vec<Vec<usize>>> {
    let k = model.k();
    let mut out = Vec::new();
    let total = k.pow(model.d() as u32 + 2);
    for idx in 0..total {
        let mut window = vec![0; model.d() + 2];
        let mut rest = idx;
        for slot in window.iter_mut().rev() {
            *slot = rest % k;
            rest /= k;
        }
        let reachable = window.windows(2).all(|w| {
            model.pre().prob(w[0], w[1]) > 0.0 || model.post().prob(w[0], w[1]) > 0.0
        });
        if reachable && stop_decision(model, table, &window)? {
            out.push(window);
        }
    }
    Ok(out)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<PathBuf>> {
    args.solver.validate()?;
    let grid = parse_grid(&args.grid)?;
    if args.horizon == 0 {
        return Err(DisorderError::InvalidInput("--horizon must be positive".into()));
    }
    // the grid replaces any p in the model file
    let base = load_model(&ModelArgs {
        p: None,
        ..args.model.clone()
    })?;
    let cap = crate::sim::max_exact_horizon(base.k());
    if args.horizon > cap {
        return Err(DisorderError::Capacity(format!(
            "{}^{} paths exceed the enumeration limit of 2^24; use --horizon {cap} or less",
            base.k(),
            args.horizon
        )));
    }
    prepare_out(&args.out)?;
    let family = CompetitorFamily::standard();
    let mut rows = Vec::with_capacity(grid.len());
    for &p in &grid {
        let model = base.with_p(p)?;
        let solution = solve_rstar(&model, args.solver.tol, args.solver.max_iters)?;
        let report = dominance_sweep(&model, &solution.table, &family, args.horizon)?;
        let best = report
            .competitors
            .iter()
            .max_by(|a, b| a.estimate.total_cmp(&b.estimate))
            .expect("competitor family is not empty");
        rows.push(SweepRow {
            p,
            thresholds: RstarFile::from_table(&model, &solution.table).entries,
            stopping_windows: stopping_windows(&model, &solution.table)?,
            value: value_at_start(&model, &solution.table)?,
            verdict: report.verdict,
            best_competitor: best.policy_id.clone(),
            margin: report.optimal.estimate - best.estimate,
        });
        println!("p = {p}: {:?}", report.verdict);
    }
    let model_hash = base.content_hash();
    let path = match args.format {
        Format::Json => {
            let file = SweepFile {
                tool_version: TOOL_VERSION.to_string(),
                model_hash,
                horizon: args.horizon,
                rows,
            };
            write_file(args.out.join("sweep.json"), &to_json_bytes(&file)?)?
        }
        Format::Csv => {
            let mut buf = csv_header(&model_hash).into_bytes();
            write_sweep_csv(&rows, &mut buf)?;
            write_file(args.out.join("sweep.csv"), &buf)?
        }
    };
    Ok(vec![path])
}

fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let Some(first) = rows.first() else {
        return Ok(());
    };
    let mut header = vec!["p".to_string()];
    header.extend(first.thresholds.iter().map(|e| format!("rstar_{}", format_tuple(&e.tuple))));
    header.extend(
        ["stopping_windows", "value", "verdict", "best_competitor", "margin"].map(String::from),
    );
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{}", r.p)];
        rec.extend(
            r.thresholds
                .iter()
                .map(|e| e.value.map_or("inf".to_string(), |v| format!("{v:.12}"))),
        );
        rec.push(
            r.stopping_windows
                .iter()
                .map(|w| format_tuple(w))
                .collect::<Vec<_>>()
                .join(";"),
        );
        rec.push(format!("{:.12}", r.value));
        rec.push(match r.verdict {
            Verdict::Dominant => "dominant".into(),
            Verdict::Dominated => "dominated".into(),
        });
        rec.push(r.best_competitor.clone());
        rec.push(format!("{:.6e}", r.margin));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
