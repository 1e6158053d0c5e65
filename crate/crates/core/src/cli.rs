//! Command-line front end: configuration, scenario runs, sweeps, bound reports
//! and circuit export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, BoundReport};
use crate::error::Error;
use crate::noise::{noisy_fidelity, NoiseModel, NoisyFidelity, PauliRates, DEFAULT_TRAJECTORIES};
use crate::protocol::{
    benchmark_situations, run_scenario, AngleConvention, CouplerPrep, FidelityReport, LogicalLabel, ProtocolParams,
    Scenario, ScenarioCircuits, UpdateMode,
};

pub const CSV_HEADER: &str = "axis_value,scenario,init,exact_fidelity,sampled_fidelity,sampled_stderr,\
depth_total,depth_evolution,trotter_steps,per_step_bound,total_bound,adiabatic_margin,seed";

pub const SWEEP_AXES: [&str; 9] =
    ["dt", "h_para", "dh", "J_C", "Gamma", "N_s", "eps_bitflip", "eps_phase", "eps_meas"];

#[derive(Debug, Parser)]
#[command(name = "ising-exchange", version, about = "Exchange protocol on two coupled transverse-field Ising chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (TOML, flat keys)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when omitted
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed, overrides the configuration
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and trajectories
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Report depths and bounds without simulating
    #[arg(long, global = true)]
    pub depth_only: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the configured scenario and emit a JSON report
    Run,
    /// Sweep one parameter and emit CSV rows
    Sweep,
    /// Emit error, adiabaticity and depth bounds as JSON
    Bounds,
    /// Write the full protocol circuit as OpenQASM 2.0
    Export,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::InvalidParams(_)
            | Error::InvalidConfig(_)
            | Error::InvalidNoise(_)
            | Error::SubStepHold { .. }
            | Error::RegisterSize { .. } => CliError::Invalid(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// An angle given as a number or as a multiple of pi (`"pi"`, `"pi/3"`, `"2*pi/3"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Radians(f64),
    Expr(String),
}

impl Angle {
    pub fn radians(&self) -> Result<f64, CliError> {
        match self {
            Angle::Radians(x) => Ok(*x),
            Angle::Expr(s) => parse_pi_expr(s).ok_or_else(|| CliError::Invalid(format!("cannot parse angle {s:?}"))),
        }
    }
}

fn parse_pi_expr(s: &str) -> Option<f64> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let factor = match num.as_str() {
        "pi" => 1.0,
        n => n.strip_suffix("*pi")?.parse::<f64>().ok()?,
    };
    Some(factor * std::f64::consts::PI / den)
}

/// Flat configuration file. Physical parameters are mandatory; the rest have
/// documented defaults and are echoed in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N_s")]
    pub n_s: usize,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "J_C")]
    pub j_c: f64,
    pub h_ferro: f64,
    pub h_para: f64,
    pub dt: f64,
    pub dh: f64,
    #[serde(rename = "T")]
    pub t_hold: f64,
    #[serde(rename = "Gamma")]
    pub gamma: Angle,
    pub theta: Angle,
    pub shots: u64,
    pub seed: Option<u64>,
    #[serde(default)]
    pub update_mode: UpdateMode,
    #[serde(default)]
    pub coupler_prep: CouplerPrep,
    #[serde(default)]
    pub angle_convention: AngleConvention,
    /// A scenario name or `"all"` for the five benchmark situations.
    #[serde(default = "default_scenario")]
    pub scenario: String,
    #[serde(default = "default_init")]
    pub init: LogicalLabel,
    #[serde(default)]
    pub eps_bitflip: f64,
    #[serde(default)]
    pub eps_phase: f64,
    #[serde(default)]
    pub eps_meas: f64,
    /// Two-qubit gate rates; default to the one-qubit values.
    pub eps_bitflip_2q: Option<f64>,
    pub eps_phase_2q: Option<f64>,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    pub sweep_axis: Option<String>,
    pub sweep_values: Option<Vec<f64>>,
}

fn default_scenario() -> String {
    "braid".into()
}

fn default_init() -> LogicalLabel {
    LogicalLabel::AllUp
}

fn default_trajectories() -> usize {
    DEFAULT_TRAJECTORIES
}

/// Everything a run needs, with all defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub params: ProtocolParams,
    pub situations: Vec<(Scenario, LogicalLabel)>,
    pub noise: NoiseModel,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Invalid(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Resolved, CliError> {
        let seed = seed_override
            .or(self.seed)
            .ok_or_else(|| CliError::Invalid("config: missing field `seed` (or pass --seed)".into()))?;
        let params = ProtocolParams {
            n_s: self.n_s,
            j: self.j,
            j_c: self.j_c,
            h_ferro: self.h_ferro,
            h_para: self.h_para,
            dt: self.dt,
            dh: self.dh,
            t_hold: self.t_hold,
            gamma: self.gamma.radians()?,
            theta: self.theta.radians()?,
            shots: self.shots,
            seed,
            update_mode: self.update_mode,
            coupler_prep: self.coupler_prep,
            angle_convention: self.angle_convention,
        };
        params.validate()?;
        let situations = if self.scenario == "all" {
            benchmark_situations().to_vec()
        } else {
            let s: Scenario = serde_json::from_value(serde_json::Value::String(self.scenario.clone()))
                .map_err(|_| CliError::Invalid(format!("unknown scenario {:?}", self.scenario)))?;
            vec![(s, self.init)]
        };
        let noise = NoiseModel {
            one_qubit: PauliRates { bitflip: self.eps_bitflip, phase: self.eps_phase },
            two_qubit: PauliRates {
                bitflip: self.eps_bitflip_2q.unwrap_or(self.eps_bitflip),
                phase: self.eps_phase_2q.unwrap_or(self.eps_phase),
            },
            eps_meas: self.eps_meas,
            trajectories: self.trajectories,
        };
        noise.validate()?;
        Ok(Resolved { params, situations, noise })
    }
}

/// JSON payload of `run`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub report: FidelityReport,
    pub noisy: Option<NoisyFidelity>,
}

pub fn cmd_run(resolved: &Resolved) -> Result<Vec<RunOutput>, CliError> {
    resolved
        .situations
        .iter()
        .map(|&(scenario, init)| {
            let report = run_scenario(&resolved.params, scenario, init)?;
            let noisy = if needs_trajectories(&resolved.noise) {
                Some(noisy_fidelity(&resolved.params, scenario, init, &resolved.noise)?)
            } else {
                None
            };
            Ok(RunOutput { report, noisy })
        })
        .collect()
}

fn needs_trajectories(model: &NoiseModel) -> bool {
    !model.is_noiseless() || model.eps_meas > 0.0
}

pub fn cmd_bounds(resolved: &Resolved) -> Result<BoundReport, CliError> {
    Ok(analysis::bound_report(&resolved.params)?)
}

pub fn cmd_export(resolved: &Resolved) -> Result<String, CliError> {
    let [(scenario, init)] = resolved.situations[..] else {
        return Err(CliError::Invalid("export needs a single scenario, not \"all\"".into()));
    };
    let circuits = ScenarioCircuits::build(&resolved.params, scenario, init)?;
    Ok(circuits.full()?.to_qasm())
}

/// Splits a master seed into a per-row seed.
pub fn derive_seed(master: u64, axis_index: u64, scenario_id: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(master) ^ axis_index) ^ scenario_id)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub scenario: Scenario,
    pub init: LogicalLabel,
    pub exact_fidelity: Option<f64>,
    pub sampled_fidelity: Option<f64>,
    pub sampled_stderr: Option<f64>,
    pub depth_total: usize,
    pub depth_evolution: usize,
    pub trotter_steps: usize,
    pub per_step_bound: f64,
    pub total_bound: f64,
    pub adiabatic_margin: f64,
    pub seed: u64,
}

fn apply_axis(resolved: &Resolved, axis: &str, value: f64) -> Result<(ProtocolParams, NoiseModel), CliError> {
    let mut p = resolved.params.clone();
    let mut n = resolved.noise.clone();
    match axis {
        "dt" => p.dt = value,
        "h_para" => p.h_para = value,
        "dh" => p.dh = value,
        "J_C" => p.j_c = value,
        "Gamma" => p.gamma = value,
        "N_s" => {
            if value.fract() != 0.0 || value < 0.0 {
                return Err(CliError::Invalid(format!("N_s must be a whole number, got {value}")));
            }
            p.n_s = value as usize;
        }
        "eps_bitflip" => {
            n.one_qubit.bitflip = value;
            n.two_qubit.bitflip = value;
        }
        "eps_phase" => {
            n.one_qubit.phase = value;
            n.two_qubit.phase = value;
        }
        "eps_meas" => n.eps_meas = value,
        other => {
            return Err(CliError::Invalid(format!("unknown sweep axis {other:?}; expected one of {SWEEP_AXES:?}")))
        }
    }
    p.validate()?;
    n.validate()?;
    Ok((p, n))
}

fn sweep_row(
    params: &ProtocolParams,
    noise: &NoiseModel,
    scenario: Scenario,
    init: LogicalLabel,
    axis_value: f64,
    depth_only: bool,
) -> Result<SweepRow, CliError> {
    let bounds = crate::protocol::BoundValues::for_params(params)?;
    let base = |depth_total, depth_evolution| SweepRow {
        axis_value,
        scenario,
        init,
        exact_fidelity: None,
        sampled_fidelity: None,
        sampled_stderr: None,
        depth_total,
        depth_evolution,
        trotter_steps: 0,
        per_step_bound: bounds.per_step,
        total_bound: bounds.total,
        adiabatic_margin: bounds.adiabatic_margin,
        seed: params.seed,
    };
    if depth_only {
        let circuits = ScenarioCircuits::build(params, scenario, init)?;
        let steps = params.steps_per_hold()? * circuits.schedule.n_holds();
        return Ok(SweepRow { trotter_steps: steps, ..base(circuits.full()?.depth(), circuits.evolution.depth()) });
    }
    let report = run_scenario(params, scenario, init)?;
    let mut row = SweepRow {
        exact_fidelity: Some(report.exact_fidelity),
        sampled_fidelity: Some(report.sampled_fidelity),
        sampled_stderr: Some(report.sampled_stderr),
        trotter_steps: report.trotter_steps,
        ..base(report.depth_total, report.depth_evolution)
    };
    if needs_trajectories(noise) {
        let noisy = noisy_fidelity(params, scenario, init, noise)?;
        row.exact_fidelity = Some(noisy.mean);
        row.sampled_fidelity = Some(noisy.sampled);
        row.sampled_stderr = Some(noisy.sampled_stderr);
    }
    Ok(row)
}

pub fn cmd_sweep(resolved: &Resolved, axis: &str, values: &[f64], depth_only: bool) -> Result<Vec<SweepRow>, CliError> {
    let jobs: Vec<(usize, f64, Scenario, LogicalLabel)> = values
        .iter()
        .enumerate()
        .flat_map(|(i, &v)| resolved.situations.iter().map(move |&(s, l)| (i, v, s, l)))
        .collect();
    // validate every point before spending time on any of them
    for &(_, v, _, _) in &jobs {
        apply_axis(resolved, axis, v)?;
    }
    jobs.par_iter()
        .map(|&(i, v, scenario, init)| {
            let (mut p, n) = apply_axis(resolved, axis, v)?;
            p.seed = derive_seed(resolved.params.seed, i as u64, scenario.id());
            sweep_row(&p, &n, scenario, init, v, depth_only)
        })
        .collect()
}

/// `%.12g`-style formatting.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let m = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{m}e{exp}")
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig(r.axis_value),
            r.scenario.name(),
            r.init.name(),
            opt(r.exact_fidelity),
            opt(r.sampled_fidelity),
            opt(r.sampled_stderr),
            r.depth_total,
            r.depth_evolution,
            r.trotter_steps,
            fmt_sig(r.per_step_bound),
            fmt_sig(r.total_bound),
            fmt_sig(r.adiabatic_margin),
            r.seed
        );
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::Runtime(e.to_string()))
}

/// Produces the output text of one invocation.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Invalid("--config <path> is required".into()))?;
    let config = RunConfig::load(path)?;
    let resolved = config.resolve(cli.seed)?;
    match cli.command {
        Command::Run => {
            let outputs = cmd_run(&resolved)?;
            match outputs.as_slice() {
                [single] => to_json(single),
                many => to_json(&many),
            }
        }
        Command::Sweep => {
            let axis = config
                .sweep_axis
                .as_deref()
                .ok_or_else(|| CliError::Invalid("config: missing field `sweep_axis`".into()))?;
            let values = config
                .sweep_values
                .as_deref()
                .ok_or_else(|| CliError::Invalid("config: missing field `sweep_values`".into()))?;
            Ok(sweep_csv(&cmd_sweep(&resolved, axis, values, cli.depth_only)?))
        }
        Command::Bounds => to_json(&cmd_bounds(&resolved)?),
        Command::Export => cmd_export(&resolved),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    let result = (|| {
        if let Some(n) = cli.jobs {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        let text = execute(&cli)?;
        write_output(cli.out.as_deref(), &text)
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const HIGH: &str = r#"
N_s = 6
J = 1.0
J_C = 0.3
h_ferro = 0.01
h_para = 5.0
dt = 0.2
dh = 0.05
T = 2.0
Gamma = "pi/3"
theta = "pi"
shots = 10000
seed = 7
"#;

    #[test]
    fn angle_expressions() {
        use std::f64::consts::PI;
        assert_eq!(parse_pi_expr("pi"), Some(PI));
        assert_eq!(parse_pi_expr("pi/3"), Some(PI / 3.0));
        assert_eq!(parse_pi_expr("2*pi / 3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_pi_expr("tau"), None);
    }

    #[test]
    fn config_resolves_to_preset() {
        let r = RunConfig::parse(HIGH).unwrap().resolve(None).unwrap();
        let expected = ProtocolParams { seed: 7, ..ProtocolParams::high_fidelity() };
        assert_eq!(r.params, expected);
        assert_eq!(r.situations, vec![(Scenario::Braid, LogicalLabel::AllUp)]);
        assert!(r.noise.is_noiseless());
        assert_eq!(r.noise.trajectories, 200);
    }

    #[test]
    fn seed_flag_overrides_config() {
        let r = RunConfig::parse(HIGH).unwrap().resolve(Some(99)).unwrap();
        assert_eq!(r.params.seed, 99);
    }

    #[test]
    fn missing_key_is_named() {
        let text = HIGH.replace("dt = 0.2\n", "");
        let err = RunConfig::parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("dt"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = RunConfig::parse(&format!("{HIGH}\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn unknown_scenario_and_axis_are_invalid() {
        let c = RunConfig::parse(&format!("{HIGH}\nscenario = \"spin\"\n")).unwrap();
        assert_eq!(c.resolve(None).unwrap_err().exit_code(), 2);
        let r = RunConfig::parse(HIGH).unwrap().resolve(None).unwrap();
        assert_eq!(cmd_sweep(&r, "colour", &[1.0], true).unwrap_err().exit_code(), 2);
        assert_eq!(cmd_sweep(&r, "N_s", &[6.5], true).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn all_selects_five_situations() {
        let c = RunConfig::parse(&format!("{HIGH}\nscenario = \"all\"\n")).unwrap();
        assert_eq!(c.resolve(None).unwrap().situations.len(), 5);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.32), "1.32");
        assert_eq!(fmt_sig(7920.0), "7920");
        assert_eq!(fmt_sig(0.1 + 0.2), "0.3");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(1e-6), "1e-6");
        assert_eq!(fmt_sig(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-2.5), "-2.5");
    }

    #[test]
    fn seeds_fan_out() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(2, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0));
    }

    #[test]
    fn depth_only_sweep_over_sites() {
        let r = RunConfig::parse(HIGH).unwrap().resolve(None).unwrap();
        let rows = cmd_sweep(&r, "N_s", &[6.0, 8.0], true).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].exact_fidelity.is_none());
        assert!(rows[1].depth_evolution > rows[0].depth_evolution);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv.lines().count(), 3);
    }
}
