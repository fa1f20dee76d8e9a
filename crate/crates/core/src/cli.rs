//! Command-line driver: `check`, `simulate`, `hodograph` and `combinatorics`.
//!
//! Every run is described by one JSON experiment config:
//!
//! ```json
//! { "version": 1, "command": "check", "seed": 7, "junction": { ... } }
//! ```
//!
//! `--override key.path=value` edits the config before it is validated
//! (the value is parsed as JSON, falling back to a string). Reports are
//! printed to stdout and, when an output directory is set, written there.
//! Exit codes: 0 pass, 1 mathematical failure, 2 invalid input,
//! 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::complementing::{
    build_linearization, check_complementing, check_junction, default_samples, ComplementingError, Mode, Sample,
    Verdict, C64, D_ZERO_TOL, KERNEL_TOL,
};
use crate::gevrey::{c0_low, q_pi, run_scans, ScanRanges};
use crate::hodograph::{fmt_f, roundtrip, synthetic_case, Dataset, HodographError, RoundtripReport};
use crate::junction_config::JunctionConfig;
use crate::mcf_sim::{run, BumpTest, NetworkState, RunOutput, SimError, SolverParams};

pub const CONFIG_VERSION: u32 = 1;
/// Seed used when neither the config nor `--seed` gives one.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Parser)]
#[command(name = "junction", version, about = "Junction balance, complementing checks, hodograph transforms and network curvature flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complementing-condition verdict for a junction configuration.
    Check(CommonArgs),
    /// Curvature flow of a curve network.
    Simulate(CommonArgs),
    /// Hodograph round trip on the built-in datasets.
    Hodograph(CommonArgs),
    /// Exact combinatorial scans.
    Combinatorics {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        b_max: Option<u32>,
        #[arg(long)]
        degree_max: Option<u32>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Check,
    Simulate,
    Hodograph,
    Combinatorics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction: Option<JunctionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hodograph: Option<HodographSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanRanges>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckOptions {
    pub modes: Vec<Mode>,
    /// Shear constant; defaults to `2/gap`.
    pub shear: Option<f64>,
    /// Seeded frequency samples added to the default ones.
    pub random_samples: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { modes: vec![Mode::Elliptic, Mode::Parabolic], shear: None, random_samples: 4 }
    }
}

/// Initial network: straight segments from `(gamma, p)` to the pins plus
/// optional `bumps[k][κ] * sin(π s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub x_left: f64,
    pub x_right: f64,
    pub gamma: f64,
    pub p: Vec<f64>,
    pub s: usize,
    pub theta: Vec<u32>,
    pub pins: Vec<Vec<f64>>,
    #[serde(default)]
    pub bumps: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub t_end: f64,
    /// Diagnostics row every this many steps (0: first and last only).
    pub record_every: usize,
    /// Test function for the Brakke residual; centered at the initial junction if absent.
    pub test_function: Option<BumpTest>,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec { t_end: 1.0, record_every: 10, test_function: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HodographSpec {
    pub datasets: Vec<Dataset>,
    pub h: Vec<f64>,
    pub chain_tol: f64,
}

impl Default for HodographSpec {
    fn default() -> Self {
        HodographSpec {
            datasets: vec![Dataset::Curved, Dataset::Tangential, Dataset::Translating],
            h: vec![1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0],
            chain_tol: 1e-3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn status(&self) -> &'static str {
        match self.exit_code() {
            2 => "invalid_input",
            _ => "numerical_failure",
        }
    }
}

impl From<ComplementingError> for CliError {
    fn from(e: ComplementingError) -> Self {
        match e {
            ComplementingError::BranchFailure { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::NewtonDiverged { .. } | SimError::JunctionEscape { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<HodographError> for CliError {
    fn from(e: HodographError) -> Self {
        match e {
            HodographError::Root { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub report: Value,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

/// Sets `path` (dot separated) in a JSON object, creating objects on the way.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| invalid(format!("override {assignment:?} is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("bad override key {key:?}")));
    }
    for part in &parts[..parts.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| invalid(format!("override {key:?} descends into a non-object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| json!({}));
    }
    let obj = node.as_object_mut().ok_or_else(|| invalid(format!("override {key:?} descends into a non-object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

/// Reads, overrides and validates the config for `kind`. A file without a
/// `version` field is read as a bare junction configuration (check only).
pub fn load_config(kind: CommandKind, args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut value = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
            let v: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            if v.get("version").is_none() && kind == CommandKind::Check {
                json!({ "version": CONFIG_VERSION, "junction": v })
            } else {
                v
            }
        }
        None => json!({ "version": CONFIG_VERSION }),
    };
    if !value.is_object() {
        return Err(invalid("config must be a JSON object"));
    }
    for o in &args.overrides {
        apply_override(&mut value, o)?;
    }
    let mut config: ExperimentConfig = serde_json::from_value(value).map_err(|e| invalid(format!("config: {e}")))?;
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    validate(kind, &mut config)?;
    Ok(config)
}

fn validate(kind: CommandKind, config: &mut ExperimentConfig) -> Result<(), CliError> {
    if config.version != CONFIG_VERSION {
        return Err(invalid(format!("unsupported config version {}", config.version)));
    }
    match config.command {
        Some(c) if c != kind => return Err(invalid(format!("config is for {c:?}, not {kind:?}"))),
        _ => config.command = Some(kind),
    }
    let present = [
        ("junction", config.junction.is_some(), CommandKind::Check),
        ("check", config.check.is_some(), CommandKind::Check),
        ("network", config.network.is_some(), CommandKind::Simulate),
        ("solver", config.solver.is_some(), CommandKind::Simulate),
        ("run", config.run.is_some(), CommandKind::Simulate),
        ("hodograph", config.hodograph.is_some(), CommandKind::Hodograph),
        ("scan", config.scan.is_some(), CommandKind::Combinatorics),
    ];
    for (name, is_set, owner) in present {
        if is_set && owner != kind {
            return Err(invalid(format!("field {name:?} does not belong to {kind:?}")));
        }
    }
    match kind {
        CommandKind::Check if config.junction.is_none() => Err(invalid("missing field \"junction\"")),
        CommandKind::Simulate if config.network.is_none() => Err(invalid("missing field \"network\"")),
        _ => Ok(()),
    }
}

fn random_samples(sys_mode: Mode, dim: usize, count: usize, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let scale = rng.gen_range(0.5..2.0);
            let mut xi: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let len = xi.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
            xi.iter_mut().for_each(|x| *x *= scale / len);
            let rho = match sys_mode {
                Mode::Elliptic => None,
                Mode::Parabolic => {
                    let phase = rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2);
                    Some(C64::from_polar(rng.gen_range(0.0..4.0), phase))
                }
            };
            Sample { xi, rho }
        })
        .collect()
}

pub fn run_check(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let junction = config.junction.as_ref().expect("validated");
    let opts = config.check.clone().unwrap_or_default();
    if opts.modes.is_empty() {
        return Err(invalid("check.modes is empty"));
    }
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    let mut verdicts: Vec<Verdict> = Vec::new();
    for (i, &mode) in opts.modes.iter().enumerate() {
        let verdict = if junction.not_all_tangent() {
            let sys = build_linearization(junction, opts.shear, mode)?;
            let mut samples = default_samples(&sys);
            let dim = junction.n().saturating_sub(1).max(1);
            samples.extend(random_samples(mode, dim, opts.random_samples, seed.wrapping_add(i as u64)));
            check_complementing(&sys, &samples)?
        } else {
            check_junction(junction, opts.shear, mode)?
        };
        verdicts.push(verdict);
    }
    let passed = verdicts.iter().all(|v| v.holds);
    let report = json!({
        "command": "check",
        "version": CONFIG_VERSION,
        "seed": seed,
        "constants": { "kernel_tol": KERNEL_TOL, "d_zero_tol": D_ZERO_TOL },
        "junction": junction,
        "balance": junction.balance_residual(),
        "verdicts": verdicts,
        "holds": passed,
    });
    Ok(Outcome { passed, report })
}

fn initial_network(spec: &NetworkSpec, params: &SolverParams) -> Result<NetworkState, CliError> {
    let q = spec.theta.len();
    let m = spec.p.len();
    if spec.pins.len() != q || spec.pins.iter().any(|p| p.len() != m) {
        return Err(invalid("network.pins must have one m-vector per sheet"));
    }
    if let Some(b) = &spec.bumps {
        if b.len() != q || b.iter().any(|v| v.len() != m) {
            return Err(invalid("network.bumps must have one m-vector per sheet"));
        }
    }
    let state = NetworkState::from_segments(
        spec.gamma,
        spec.p.clone(),
        spec.x_left,
        spec.x_right,
        spec.s,
        spec.theta.clone(),
        spec.pins.clone(),
        params.cells(),
        |k, s| match &spec.bumps {
            Some(b) => b[k].iter().map(|a| a * (std::f64::consts::PI * s).sin()).collect(),
            None => vec![0.0; m],
        },
    )?;
    Ok(state)
}

fn write_diagnostics_csv(out: &RunOutput, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let m = out.final_state.m();
    let mut header: Vec<String> =
        ["t", "total_area", "balance_norm", "brakke_residual", "max_mcf_residual", "coincidence_error", "gamma"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    header.extend((0..m).map(|c| format!("P{c}")));
    w.write_record(&header)?;
    for d in &out.diagnostics {
        let mut row: Vec<String> = [d.t, d.total_area, d.balance_norm, d.brakke_residual, d.max_mcf_residual, d.coincidence_error, d.gamma]
            .iter()
            .map(|&v| fmt_f(v))
            .collect();
        row.extend(d.p.iter().map(|&v| fmt_f(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_state_csv(state: &NetworkState, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sheet".to_string(), "node".to_string(), "x".to_string()];
    header.extend((0..state.m()).map(|c| format!("u{c}")));
    w.write_record(&header)?;
    for k in 0..state.q() {
        for (i, v) in state.sheets[k].iter().enumerate() {
            let mut row = vec![k.to_string(), i.to_string(), fmt_f(state.x(k, i))];
            row.extend(v.iter().map(|&x| fmt_f(x)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run_simulate(config: &ExperimentConfig) -> Result<(Outcome, Option<RunOutput>), CliError> {
    let spec = config.network.as_ref().expect("validated");
    let params = config.solver.clone().unwrap_or_default();
    params.validate()?;
    let run_spec = config.run.clone().unwrap_or_default();
    if !(run_spec.t_end.is_finite() && run_spec.t_end > 0.0) {
        return Err(invalid("run.t_end must be positive"));
    }
    let initial = initial_network(spec, &params)?;
    let phi = run_spec.test_function.clone().unwrap_or_else(|| {
        let mut center = vec![initial.gamma];
        center.extend(initial.p.iter().copied());
        let reach = (initial.x_right - initial.gamma).min(initial.gamma - initial.x_left);
        BumpTest { center, radius: 0.8 * reach }
    });
    if phi.center.len() != initial.m() + 1 || !(phi.radius > 0.0) {
        return Err(invalid("run.test_function needs m+1 center coordinates and a positive radius"));
    }
    let out = run(&initial, &params, run_spec.t_end, run_spec.record_every, &phi)?;
    let slack = 10.0 * params.newton_tol;
    let monotone = out.steps == 0 || out.max_area_increase <= slack;
    let constrained = out.max_balance_norm <= params.newton_tol && out.max_coincidence_error <= params.newton_tol;
    let passed = monotone && constrained;
    let report = json!({
        "command": "simulate",
        "version": CONFIG_VERSION,
        "seed": config.seed.unwrap_or(DEFAULT_SEED),
        "constants": { "area_slack": slack, "newton_tol": params.newton_tol },
        "network": spec,
        "solver": params,
        "run": run_spec,
        "test_function": phi,
        "steps": out.steps,
        "steady": out.steady,
        "final_time": out.final_state.t,
        "final_gamma": out.final_state.gamma,
        "final_P": out.final_state.p,
        "final_total_area": out.diagnostics.last().map(|d| d.total_area),
        "max_area_increase": if out.steps == 0 { 0.0 } else { out.max_area_increase },
        "max_balance_norm": out.max_balance_norm,
        "max_coincidence_error": out.max_coincidence_error,
        "area_non_increasing": monotone,
        "constraints_held": constrained,
        "holds": passed,
    });
    Ok((Outcome { passed, report }, Some(out)))
}

fn observed_orders(reports: &[RoundtripReport], f: impl Fn(&RoundtripReport) -> f64) -> Vec<f64> {
    reports.windows(2).map(|w| (f(&w[0]) / f(&w[1])).ln() / (w[0].h / w[1].h).ln()).collect()
}

pub fn run_hodograph(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = config.hodograph.clone().unwrap_or_default();
    if spec.datasets.is_empty() || spec.h.is_empty() || spec.h.iter().any(|h| !(*h > 0.0 && *h <= 0.25)) {
        return Err(invalid("hodograph needs datasets and steps 0 < h <= 1/4"));
    }
    let mut passed = true;
    let mut entries = Vec::new();
    for &ds in &spec.datasets {
        let reports = spec
            .h
            .iter()
            .map(|&h| roundtrip(&synthetic_case(ds, h)?))
            .collect::<Result<Vec<_>, HodographError>>()?;
        let ok = reports.iter().all(|r| r.chain_rule.passes(spec.chain_tol) && r.roundtrip_error.is_finite());
        passed &= ok;
        entries.push(json!({
            "dataset": ds,
            "reports": reports,
            "roundtrip_orders": observed_orders(&reports, |r| r.roundtrip_error),
            "chain_rule_normal_orders": observed_orders(&reports, |r| r.chain_rule.normal_max_error),
            "chain_rule_line_orders": observed_orders(&reports, |r| r.chain_rule.line_max_error.unwrap_or(f64::NAN)),
            "holds": ok,
        }));
    }
    let report = json!({
        "command": "hodograph",
        "version": CONFIG_VERSION,
        "seed": config.seed.unwrap_or(DEFAULT_SEED),
        "constants": { "chain_tol": spec.chain_tol, "interface_tol": crate::hodograph::INTERFACE_TOL },
        "datasets": entries,
        "holds": passed,
    });
    Ok(Outcome { passed, report })
}

pub fn run_combinatorics(config: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ranges = config.scan.unwrap_or_default();
    if ranges.b_max == 0 || ranges.degree_max < 4 {
        return Err(invalid("scan needs b_max >= 1 and degree_max >= 4"));
    }
    let scan = run_scans(ranges);
    let report = json!({
        "command": "combinatorics",
        "version": CONFIG_VERSION,
        "seed": config.seed.unwrap_or(DEFAULT_SEED),
        "constants": {
            "q_pi": q_pi(),
            "q_pi_f64": q_pi().to_f64(),
            "c0_low": c0_low(),
            "c0_low_f64": c0_low().to_f64(),
        },
        "scan": scan,
        "holds": scan.holds,
    });
    Ok(Outcome { passed: scan.holds, report })
}

fn write_report(dir: &Path, report: &Value) -> Result<(), CliError> {
    let mut f = fs::File::create(dir.join("report.json"))?;
    serde_json::to_writer_pretty(&mut f, report).map_err(|e| CliError::Io(e.into()))?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Runs one subcommand; returns the process exit code.
pub fn execute(cli: Cli) -> Result<u8, CliError> {
    let (kind, mut args) = match cli.command {
        Command::Check(a) => (CommandKind::Check, a),
        Command::Simulate(a) => (CommandKind::Simulate, a),
        Command::Hodograph(a) => (CommandKind::Hodograph, a),
        Command::Combinatorics { mut common, b_max, degree_max } => {
            if let Some(b) = b_max {
                common.overrides.push(format!("scan.b_max={b}"));
            }
            if let Some(d) = degree_max {
                common.overrides.push(format!("scan.degree_max={d}"));
            }
            (CommandKind::Combinatorics, common)
        }
    };
    args.overrides.retain(|o| !o.is_empty());
    let config = load_config(kind, &args)?;
    let out_dir = config.output.clone();
    if let Some(dir) = &out_dir {
        fs::create_dir_all(dir)?;
    }
    let outcome = match kind {
        CommandKind::Check => run_check(&config)?,
        CommandKind::Hodograph => run_hodograph(&config)?,
        CommandKind::Combinatorics => run_combinatorics(&config)?,
        CommandKind::Simulate => {
            let (outcome, run_out) = run_simulate(&config)?;
            if let (Some(dir), Some(r)) = (&out_dir, &run_out) {
                write_diagnostics_csv(r, &dir.join("diagnostics.csv"))?;
                write_state_csv(&r.final_state, &dir.join("final_state.csv"))?;
            }
            outcome
        }
    };
    if let Some(dir) = &out_dir {
        write_report(dir, &outcome.report)?;
    }
    let text = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Io(e.into()))?;
    println!("{text}");
    if !outcome.passed {
        eprintln!("{}", json!({ "status": "math_failure", "reason": format!("{kind:?} criteria not met").to_lowercase() }));
        return Ok(1);
    }
    Ok(0)
}

/// Parses arguments, runs, and maps errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({ "status": e.status(), "reason": e.to_string() }));
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(overrides: &[&str]) -> CommonArgs {
        CommonArgs { config: None, out: None, seed: None, overrides: overrides.iter().map(|s| s.to_string()).collect() }
    }

    #[test]
    fn override_paths() {
        let mut v = json!({ "version": 1 });
        apply_override(&mut v, "scan.b_max=2").unwrap();
        apply_override(&mut v, "output=runs/a").unwrap();
        assert_eq!(v, json!({ "version": 1, "scan": { "b_max": 2 }, "output": "runs/a" }));
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "output.x=1").is_err());
    }

    #[test]
    fn schema_rejection() {
        let e = load_config(CommandKind::Combinatorics, &args(&["bogus=1"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = load_config(CommandKind::Check, &args(&[])).unwrap_err();
        assert!(e.to_string().contains("junction"));
        let e = load_config(CommandKind::Combinatorics, &args(&["network.gamma=0"])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = load_config(CommandKind::Combinatorics, &args(&["version=2"])).unwrap_err();
        assert!(e.to_string().contains("version"));
        let e = load_config(CommandKind::Hodograph, &args(&["command=\"check\""])).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn check_y_and_equal_slopes() {
        let r3 = 3f64.sqrt();
        let y = JunctionConfig::new(1, 1, 2, vec![1, 1, 1], vec![vec![r3], vec![-r3], vec![0.0]]).unwrap();
        let mut cfg = load_config(CommandKind::Combinatorics, &args(&[])).unwrap();
        cfg.command = Some(CommandKind::Check);
        cfg.junction = Some(y.clone());
        let out = run_check(&cfg).unwrap();
        assert!(out.passed);
        assert!(out.report["verdicts"][0]["D"].as_f64().unwrap() > 0.0);
        cfg.junction = Some(y.with_slopes(vec![vec![0.5]; 3]).unwrap());
        assert!(!run_check(&cfg).unwrap().passed);
    }

    #[test]
    fn random_samples_are_seeded() {
        let a = random_samples(Mode::Parabolic, 2, 3, 9);
        assert_eq!(a, random_samples(Mode::Parabolic, 2, 3, 9));
        assert_ne!(a, random_samples(Mode::Parabolic, 2, 3, 10));
        assert!(a.iter().all(|s| s.rho.unwrap().re >= 0.0));
    }
}
