//! Configuration loading and the `analyze`, `simulate` and `sweep` commands.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    self, AnalysisError, DeltaTable, Infeasibility, MixedBounds, PureEquilibrium,
};
use crate::payoff::PayoffParams;
use crate::sim::{
    self, MechanismSpec, RunMetrics, Scenario, SimError, SweepResults, SweepSpec, TraceRow,
};

pub const SWEEP_HEADER: [&str; 11] = [
    "mechanism",
    "n",
    "wba",
    "deviator_pc",
    "seed",
    "correct_rounds",
    "cum_master_utility",
    "cum_follower_utility",
    "detection_round",
    "convergence_round",
    "warnings",
];

pub const TRACE_HEADER: [&str; 8] = [
    "round",
    "verified",
    "f_count",
    "majority_cheats",
    "master_correct",
    "master_payoff",
    "mean_follower_payoff",
    "punishment_active",
];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("infeasible parameters (strict mode):\n{0}")]
    Infeasible(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Sim(SimError::InvalidScenario(_)) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Sim(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

mod defaults {
    pub fn n() -> usize {
        9
    }
    pub fn wba() -> f64 {
        1.0
    }
    pub fn wct() -> f64 {
        0.1
    }
    pub fn pc() -> f64 {
        0.1
    }
    pub fn pv_mixed() -> f64 {
        0.17
    }
    pub fn eps() -> f64 {
        0.01
    }
    pub fn xi() -> f64 {
        0.5
    }
    pub fn phi() -> f64 {
        0.05
    }
}

/// Parameters for the closed-form report. Defaults are the reference simulation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default = "defaults::wba")]
    pub wba: f64,
    #[serde(default = "defaults::wct")]
    pub wct: f64,
    /// Agreed cheat probability; also scales the penalty `wpc = wba / (n pc)`.
    #[serde(default = "defaults::pc")]
    pub pc: f64,
    #[serde(default = "defaults::pv_mixed")]
    pub pv_mixed: f64,
    /// `None` picks the midpoint of the pure window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv_pure: Option<f64>,
    #[serde(default = "defaults::eps")]
    pub eps: f64,
    #[serde(default = "defaults::xi")]
    pub xi: f64,
    #[serde(default = "defaults::phi")]
    pub phi: f64,
    /// Replaces the payoff set derived from `n`, `wba`, `wct` and `pc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PayoffParams>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n: defaults::n(),
            wba: defaults::wba(),
            wct: defaults::wct(),
            pc: defaults::pc(),
            pv_mixed: defaults::pv_mixed(),
            pv_pure: None,
            eps: defaults::eps(),
            xi: defaults::xi(),
            phi: defaults::phi(),
            params: None,
        }
    }
}

impl AnalysisConfig {
    pub fn payoff_params(&self) -> Result<PayoffParams, SimError> {
        match self.params {
            Some(p) => Ok(p),
            None => {
                let spec = MechanismSpec::RgMixed {
                    pv: self.pv_mixed,
                    pc: self.pc,
                    eps: self.eps,
                    punishment_rounds: 1,
                    xi: None,
                    phi: None,
                };
                sim::reference_params(&spec, self.n, self.wba, self.wct)
            }
        }
    }
}

/// Everything a command may need. Each command reads only its own section.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub trace: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Outcome of one closed-form evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Checked<T> {
    Ok { value: T },
    Infeasible { failed: Infeasibility },
    Error { message: String },
}

impl<T> Checked<T> {
    fn from_result(r: Result<T, AnalysisError>) -> Self {
        match r {
            Ok(value) => Checked::Ok { value },
            Err(AnalysisError::Infeasible(failed)) => Checked::Infeasible { failed },
            Err(AnalysisError::InvalidArgument(message)) => Checked::Error { message },
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Checked::Ok { value } => Some(value),
            _ => None,
        }
    }

    fn problem(&self) -> Option<String> {
        match self {
            Checked::Ok { .. } => None,
            Checked::Infeasible { failed } => Some(failed.to_string()),
            Checked::Error { message } => Some(message.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityPair {
    pub master: f64,
    pub worker: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub params: PayoffParams,
    pub pv_pure: Option<f64>,
    pub pure: Checked<PureEquilibrium>,
    pub mixed_minmax: Checked<f64>,
    pub mixed_floors: Checked<MixedBounds>,
    /// Floors that `pv_mixed` fails to clear, the correctness floor included.
    pub mixed_violations: Vec<Infeasibility>,
    /// `pv_mixed` clears the deterrence and participation floors, so honest play at the
    /// agreed `pc` is enforceable. The correctness floor is reported separately.
    pub pv_mixed_feasible: bool,
    pub mixed_utilities: Checked<UtilityPair>,
    pub delta_table: Checked<DeltaTable>,
}

impl AnalysisReport {
    /// Human-readable descriptions of every failed check.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = [
            self.pure.problem(),
            self.mixed_minmax.problem(),
            self.mixed_floors.problem(),
            self.mixed_utilities.problem(),
            self.delta_table.problem(),
        ]
        .into_iter()
        .flatten()
        .collect();
        out.extend(self.mixed_violations.iter().map(|v| v.to_string()));
        if let Some(t) = self.delta_table.value() {
            if t.guaranteed_range_empty {
                out.push("deviation test: guaranteed delta range is empty".into());
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn render_text(&self) -> String {
        use std::fmt::Write;
        let c = &self.config;
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "n = {}, pc = {}, eps = {}, xi = {}, phi = {}",
            c.n, c.pc, c.eps, c.xi, c.phi
        );
        let _ = writeln!(
            s,
            "payoffs: wba = {}, wct = {}, wpc = {}, mca = {}, mcv = {}, mpw = {}, mbr = {}",
            p.wba, p.wct, p.wpc, p.mca, p.mcv, p.mpw, p.mbr
        );
        let _ = writeln!(s, "\n[pure strategies]");
        match &self.pure {
            Checked::Ok { value: e } => {
                let _ = writeln!(s, "  pv window      ({}, {})", e.pv_low, e.pv_high);
                let _ = writeln!(s, "  pv             {}", self.pv_pure.unwrap_or(f64::NAN));
                let _ = writeln!(s, "  minmax         {}", e.minmax);
                let _ = writeln!(s, "  worker utility {}", e.worker_utility);
                let _ = writeln!(s, "  master utility {}", e.master_expected_utility);
            }
            other => {
                let _ = writeln!(s, "  INFEASIBLE: {}", other.problem().unwrap_or_default());
            }
        }
        let _ = writeln!(s, "\n[mixed strategies]  pv = {}", c.pv_mixed);
        match &self.mixed_floors {
            Checked::Ok { value: b } => {
                let _ = writeln!(s, "  deterrence floor    > {}", b.pv_floor_deterrence);
                let _ = writeln!(s, "  participation floor >= {}", b.pv_floor_participation);
                let _ = writeln!(s, "  correctness floor   >= {}", b.pv_floor_correctness);
            }
            other => {
                let _ = writeln!(s, "  floors: {}", other.problem().unwrap_or_default());
            }
        }
        match &self.mixed_minmax {
            Checked::Ok { value } => {
                let _ = writeln!(s, "  minmax              {value}");
            }
            other => {
                let _ = writeln!(s, "  minmax: {}", other.problem().unwrap_or_default());
            }
        }
        let _ = writeln!(
            s,
            "  pv feasible         {}",
            if self.pv_mixed_feasible { "yes" } else { "no" }
        );
        for v in &self.mixed_violations {
            let _ = writeln!(s, "    {v}");
        }
        match &self.mixed_utilities {
            Checked::Ok { value: u } => {
                let _ = writeln!(s, "  master utility      {}", u.master);
                let _ = writeln!(s, "  worker utility      {}", u.worker);
            }
            other => {
                let _ = writeln!(s, "  utilities: {}", other.problem().unwrap_or_default());
            }
        }
        let _ = writeln!(s, "\n[deviation test]");
        match &self.delta_table {
            Checked::Ok { value: t } => {
                let _ = writeln!(s, "  window (maxrounds) {}", t.window);
                let _ = writeln!(
                    s,
                    "  guaranteed range   {}",
                    if t.guaranteed_range_empty {
                        "EMPTY"
                    } else {
                        "non-empty"
                    }
                );
                let _ = writeln!(
                    s,
                    "  decidable rounds   {}",
                    if t.any_decidable { "some" } else { "none" }
                );
                let _ = writeln!(
                    s,
                    "  {:>4} {:>10} {:>5} {:>5} {:>5}",
                    "r", "delta", "dec", "high", "low"
                );
                for row in &t.rows {
                    let low = row.low_threshold.map_or("-".to_string(), |v| v.to_string());
                    let _ = writeln!(
                        s,
                        "  {:>4} {:>10.6} {:>5} {:>5} {:>5}",
                        row.r,
                        row.delta,
                        if row.decidable { "y" } else { "n" },
                        row.high_threshold,
                        low
                    );
                }
            }
            other => {
                let _ = writeln!(s, "  {}", other.problem().unwrap_or_default());
            }
        }
        s
    }
}

/// All closed-form quantities for one parameter set.
pub fn analyze(config: &AnalysisConfig) -> Result<AnalysisReport, SimError> {
    let params = config.payoff_params()?;
    let n = config.n;
    let pv_pure = match config.pv_pure {
        Some(pv) => Some(pv),
        None => analysis::pure_pv_bounds(&params, n)
            .ok()
            .map(|(lo, hi)| 0.5 * (lo + hi)),
    };
    let pure = match pv_pure {
        Some(pv) => Checked::from_result(PureEquilibrium::evaluate(&params, n, pv)),
        None => Checked::from_result(analysis::pure_pv_bounds(&params, n).map(|_| unreachable!())),
    };
    let mixed_minmax = Checked::from_result(analysis::mixed_minmax(&params, n, config.pv_mixed));
    let mixed_floors = Checked::from_result(analysis::mixed_pv_floors(
        &params, n, config.pc, config.xi, config.phi,
    ));
    let mixed_violations = mixed_floors
        .value()
        .map(|b| b.violations(config.pv_mixed))
        .unwrap_or_default();
    let pv_mixed_feasible = mixed_minmax.value().is_some();
    let mixed_utilities = Checked::from_result(
        analysis::expected_utilities_mixed(&params, n, config.pc, config.pv_mixed)
            .map(|(master, worker)| UtilityPair { master, worker }),
    );
    let delta_table = Checked::from_result(analysis::delta_table(n, config.pc, config.eps));
    Ok(AnalysisReport {
        config: config.clone(),
        params,
        pv_pure,
        pure,
        mixed_minmax,
        mixed_floors,
        mixed_violations,
        pv_mixed_feasible,
        mixed_utilities,
        delta_table,
    })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory CSV writer cannot fail")
}

/// Per-round trace as CSV.
pub fn trace_csv(rows: &[TraceRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory write");
    for r in rows {
        let o = &r.outcome;
        w.write_record([
            r.round.to_string(),
            o.verified.to_string(),
            o.f_count.to_string(),
            o.majority_cheats.to_string(),
            o.master_correct.to_string(),
            o.master_payoff.to_string(),
            opt(r.mean_follower_payoff),
            r.punishment_active.to_string(),
        ])
        .expect("in-memory write");
    }
    finish_csv(w)
}

/// One row per sweep cell. Failed cells leave the metric columns empty and carry
/// the error in `warnings`.
pub fn sweep_csv(results: &[(Scenario, Result<RunMetrics, SimError>)]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for (s, r) in results {
        let head = [
            s.mechanism.kind().label().to_string(),
            s.n.to_string(),
            s.wba.to_string(),
            s.deviator_pc.to_string(),
            s.seed.to_string(),
        ];
        let tail = match r {
            Ok(m) => [
                m.correct_rounds.to_string(),
                m.cumulative_master_utility.to_string(),
                m.cumulative_follower_utility.to_string(),
                opt(m.detection_round),
                opt(m.convergence_round),
                m.warnings
                    .iter()
                    .map(|w| w.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
            ],
            Err(e) => [
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                format!("error: {e}"),
            ],
        };
        w.write_record(head.iter().chain(tail.iter()))
            .expect("in-memory write");
    }
    finish_csv(w)
}

#[derive(Debug, Parser)]
#[command(
    name = "rgsim",
    version,
    about = "Repeated-game mechanisms for master-worker computing"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print and write closed-form feasibility windows, minmax values and utilities.
    Analyze(CommonArgs),
    /// Run a single scenario.
    Simulate(CommonArgs),
    /// Run a parameter grid and write one CSV.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out_dir` in the config. Defaults to `.`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Treat feasibility warnings as errors.
    #[arg(long)]
    pub strict: bool,
    /// Write a per-round trace (simulate only).
    #[arg(long)]
    pub trace: bool,
}

struct Context {
    config: RunConfig,
    config_path: PathBuf,
    out_dir: PathBuf,
    threads: Option<usize>,
    strict: bool,
    trace: bool,
}

impl Context {
    fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let config = RunConfig::load(&args.config)?;
        let out_dir = args
            .out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            threads: args.threads.or(config.threads),
            trace: args.trace || config.trace,
            strict: args.strict,
            config_path: args.config.clone(),
            out_dir,
            config,
        })
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        fs::create_dir_all(&self.out_dir).map_err(io_err(&self.out_dir))?;
        let path = self.out_dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        Ok(path)
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::Config {
            path: self.config_path.clone(),
            message: format!("missing `{key}` section"),
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

pub fn cmd_analyze(args: &CommonArgs) -> Result<AnalysisReport, CliError> {
    let ctx = Context::new(args)?;
    let report = analyze(&ctx.config.analysis)?;
    print!("{}", report.render_text());
    ctx.write("analysis.json", &to_json(&report))?;
    let problems = report.problems();
    if ctx.strict && !problems.is_empty() {
        return Err(CliError::Infeasible(problems.join("\n")));
    }
    Ok(report)
}

pub fn cmd_simulate(args: &CommonArgs) -> Result<RunMetrics, CliError> {
    let ctx = Context::new(args)?;
    let scenario = ctx
        .config
        .scenario
        .as_ref()
        .ok_or_else(|| ctx.missing("scenario"))?;
    scenario.validate()?;
    if ctx.strict {
        let warnings = sim::feasibility_warnings(scenario)?;
        if !warnings.is_empty() {
            let lines: Vec<_> = warnings.iter().map(|w| w.to_string()).collect();
            return Err(CliError::Infeasible(lines.join("\n")));
        }
    }
    let metrics = if ctx.trace {
        sim::run_scenario_with_trace(scenario)?
    } else {
        sim::run_scenario(scenario)?
    };
    let path = ctx.write("metrics.json", &to_json(&metrics))?;
    println!("wrote {}", path.display());
    if let Some(rows) = &metrics.trace {
        let path = ctx.write("trace.csv", &trace_csv(rows))?;
        println!("wrote {}", path.display());
    }
    Ok(metrics)
}

pub fn cmd_sweep(args: &CommonArgs) -> Result<SweepResults, CliError> {
    let ctx = Context::new(args)?;
    let spec = ctx
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| ctx.missing("sweep"))?;
    let grid = spec.expand();
    if ctx.strict {
        let mut lines = Vec::new();
        for s in &grid {
            for w in sim::feasibility_warnings(s)? {
                lines.push(format!(
                    "{} n={} wba={}: {w}",
                    s.mechanism.kind().label(),
                    s.n,
                    s.wba
                ));
            }
        }
        if !lines.is_empty() {
            lines.dedup();
            return Err(CliError::Infeasible(lines.join("\n")));
        }
    }
    let results = sim::run_sweep(&grid, ctx.threads)?;
    let path = ctx.write("sweep.csv", &sweep_csv(&results))?;
    println!("wrote {} ({} cells)", path.display(), results.len());
    Ok(results)
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(a).map(|_| ()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
