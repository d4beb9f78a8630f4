//! The `bpump` command-line tool: selection-rule tables, dark-state
//! queries, trace simulation, global fitting, temperature-law fitting, and
//! initialisation predictions.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 validation failure, 3 fit did
//! not converge. Output files are written to a temporary sibling and
//! renamed into place, so a failing run never leaves a partial file.
//! `BPUMP_THREADS` caps the worker pool; all randomness sits behind the
//! `--seed` flag.

use std::collections::HashSet;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dynamics::{IntegratorConfig, ModelParameters, PulseShape, DEFAULT_STEP};
use crate::estimation::{
    self, correct_temperature, fit_global, fit_temperature_law, initial_guess, Bound,
    ExponentMode, FitOptions, FreeParam,
};
use crate::schemes::{
    calibrate_rabi, simulate_initialisation, strained_prediction, time_to_fidelity,
    InitialisationReport, SchemesConfig, StrainedScheme, CALIBRATION_TARGET,
    FULL_STRENGTH_DRIVE_SCALE,
};
use crate::selection::{
    dark_subspace, dipole_block, normalized_intensities, ExcitedLevel,
    MixingParameters, Polarization,
};
use crate::signal::{read_trace_csv, write_trace_csv, ComboKind, ProbeCombo, SynthesisConfig};

/// Simulate, fit, and predict dark-state optical pumping of acceptor-bound
/// hole spins.
#[derive(Debug, Parser)]
#[command(name = "bpump", version, about)]
pub struct Cli {
    /// JSON run configuration (model overrides, fit options).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (multi-start, bootstrap).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format where both are supported.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit the normalized |Q|^2 intensity tables for both circular
    /// polarizations and both excited doublets.
    Tables(TablesArgs),
    /// Print the dark subspace for a polarization and a set of doublets.
    Dark(DarkArgs),
    /// Simulate a pump-probe trace and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit the four-parameter model globally to trace CSVs.
    Fit(FitArgs),
    /// Fit the temperature law to a lifetime series CSV.
    Tempfit(TempfitArgs),
    /// Predict initialisation fidelity under continuous drive.
    Initialise(InitialiseArgs),
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// Ground-state mixing parameter.
    #[arg(long, allow_hyphen_values = true, default_value_t = crate::selection::DEFAULT_GAMMA)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct DarkArgs {
    /// Pump polarization.
    #[arg(long, value_parser = parse_pol)]
    pub pol: Polarization,
    /// Comma-separated excited doublets, e.g. `g6,g7`.
    #[arg(long, value_delimiter = ',')]
    pub excited: Vec<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = crate::selection::DEFAULT_GAMMA)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Pump/probe combo.
    #[arg(long, value_parser = parse_combo)]
    pub combo: ComboKind,
    /// Circular probe polarization.
    #[arg(long, value_parser = parse_pol, default_value = "plus")]
    pub probe: Polarization,
    /// Delay grid `start:stop:step` in ps.
    #[arg(long, allow_hyphen_values = true, default_value = "-20:2000:5")]
    pub delays: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Trace CSV files, or directories scanned for *.csv.
    #[arg(long, required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TempfitArgs {
    /// Series CSV: temperature_K,t_spin_ps,stderr_ps.
    #[arg(long)]
    pub data: PathBuf,
    /// Fit the exponent instead of pinning it at 2.
    #[arg(long)]
    pub free_exponent: bool,
    /// Apply the cryostat thermometry correction T + 9.8/T first.
    #[arg(long)]
    pub correct_temperatures: bool,
}

#[derive(Debug, Args)]
pub struct InitialiseArgs {
    /// Target dark-state fraction; when omitted, report the saturation of
    /// a drive of `--duration`.
    #[arg(long)]
    pub target: Option<f64>,
    /// Drive duration for the saturation report (ps).
    #[arg(long, default_value_t = 1000.0)]
    pub duration: f64,
    /// Use the strained 4-level scheme.
    #[arg(long)]
    pub strained: bool,
    /// Orbital lifetime override for the strained scheme (ps).
    #[arg(long)]
    pub t_orbital: Option<f64>,
    /// Spin lifetime override (ps).
    #[arg(long)]
    pub t_spin: Option<f64>,
    /// Multiple of the calibrated drive (on top of the full-strength
    /// equivalence for continuous drives).
    #[arg(long, default_value_t = 1.0)]
    pub drive_scale: f64,
}

/// JSON run configuration; unknown keys are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema: Option<u32>,
    pub model: ModelOverrides,
    /// Integrator step for `simulate` (ps).
    pub integrator_step_ps: Option<f64>,
    pub fit: FitSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOverrides {
    pub omega0: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub t_orbital_ps: Option<f64>,
    pub t_spin_ps: Option<f64>,
    pub delta6_rad_per_ps: Option<f64>,
    pub delta7_rad_per_ps: Option<f64>,
    pub lambda: Option<f64>,
    pub pulse_start_ps: Option<f64>,
    pub pulse_duration_ps: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub fixed: Vec<String>,
    pub n_starts: Option<usize>,
    pub max_evaluations: Option<usize>,
    pub diameter_tol: Option<f64>,
    pub integrator_step_ps: Option<f64>,
    pub bootstrap_resamples: Option<usize>,
    pub fit_offsets: Option<bool>,
    pub use_sigmas: Option<bool>,
    pub bounds: Vec<BoundEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundEntry {
    pub param: String,
    pub lower: f64,
    pub upper: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        if let Some(schema) = config.schema {
            if schema != 1 {
                return Err(CliError::Validation(format!(
                    "unsupported config schema {schema}, expected 1"
                )));
            }
        }
        Ok(config)
    }

    /// Model parameters with the overrides applied on the defaults.
    pub fn model_parameters(&self) -> ModelParameters {
        let mut p = ModelParameters::default();
        let o = &self.model;
        if let Some(v) = o.omega0 {
            p.omega0 = v;
        }
        if let Some(v) = o.alpha {
            p.mixing.alpha = v;
        }
        if let Some(v) = o.gamma {
            p.mixing.gamma = v;
        }
        if let Some(v) = o.t_orbital_ps {
            p.t_orbital = v;
        }
        if let Some(v) = o.t_spin_ps {
            p.t_spin = v;
        }
        if let Some(v) = o.delta6_rad_per_ps {
            p.delta6 = v;
        }
        if let Some(v) = o.delta7_rad_per_ps {
            p.delta7 = v;
        }
        if let Some(v) = o.lambda {
            p.lambda = v;
        }
        let start = o.pulse_start_ps.unwrap_or(0.0);
        if let Some(duration) = o.pulse_duration_ps {
            p.pulse = PulseShape::square(start, duration);
        } else if p.omega0 > 0.0 {
            p.pulse = PulseShape::square(start, 9.0);
        }
        p
    }

    pub fn fit_options(&self, seed: u64) -> Result<FitOptions, CliError> {
        let mut opts = FitOptions { seed, ..FitOptions::default() };
        let f = &self.fit;
        if let Some(v) = f.n_starts {
            opts.n_starts = v;
        }
        if let Some(v) = f.max_evaluations {
            opts.max_evaluations = v;
        }
        if let Some(v) = f.diameter_tol {
            opts.diameter_tol = v;
        }
        if let Some(v) = f.integrator_step_ps {
            opts.integrator_step = v;
        }
        if let Some(v) = f.bootstrap_resamples {
            opts.bootstrap_resamples = v;
        }
        if let Some(v) = f.fit_offsets {
            opts.fit_offsets = v;
        }
        if let Some(v) = f.use_sigmas {
            opts.use_sigmas = v;
        }
        for entry in &f.bounds {
            let param = FreeParam::parse(&entry.param).ok_or_else(|| {
                CliError::Validation(format!("unknown bound parameter `{}`", entry.param))
            })?;
            opts.bounds.push((param, Bound { lower: entry.lower, upper: entry.upper }));
        }
        Ok(opts)
    }

    pub fn fixed_set(&self) -> Result<HashSet<FreeParam>, CliError> {
        self.fit
            .fixed
            .iter()
            .map(|name| {
                FreeParam::parse(name).ok_or_else(|| {
                    CliError::Validation(format!("unknown fixed parameter `{name}`"))
                })
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
    #[error("fit did not converge: {0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn parse_pol(s: &str) -> Result<Polarization, String> {
    match s {
        "plus" => Ok(Polarization::PlusCircular),
        "minus" => Ok(Polarization::MinusCircular),
        "linear_x" => Ok(Polarization::LinearX),
        "linear_y" => Ok(Polarization::LinearY),
        _ => Err(format!("unknown polarization `{s}` (plus|minus|linear_x|linear_y)")),
    }
}

fn parse_combo(s: &str) -> Result<ComboKind, String> {
    match s.to_ascii_uppercase().as_str() {
        "SCP" => Ok(ComboKind::Scp),
        "OCP" => Ok(ComboKind::Ocp),
        "PCP" => Ok(ComboKind::Pcp),
        _ => Err(format!("unknown combo `{s}` (scp|ocp|pcp)")),
    }
}

/// Write bytes to `path` atomically: temp sibling plus rename.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match parent {
        Some(dir) => dir.join(format!(
            ".{}.tmp",
            path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
        )),
        None => PathBuf::from(format!(".{}.tmp", path.display())),
    };
    let write_result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(())
    })();
    if let Err(e) = write_result {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::from(e)
    })
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => atomic_write(path, bytes),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn mj_labels() -> [&'static str; 4] {
    ["+3/2", "+1/2", "-1/2", "-3/2"]
}

fn cmd_tables(cli: &Cli, args: &TablesArgs) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let alpha = config.model.alpha.unwrap_or_else(|| MixingParameters::default().alpha);
    let mix = MixingParameters::new(args.gamma, alpha);
    let (g6, g7) = ExcitedLevel::canonical_pair();
    let mut rows = Vec::new();
    for (level, name) in [(g6, "gamma6"), (g7, "gamma7")] {
        for (pol, pol_name) in [
            (Polarization::PlusCircular, "plus"),
            (Polarization::MinusCircular, "minus"),
        ] {
            let table = normalized_intensities(&dipole_block(&level, pol, &mix));
            for (r, row) in table.iter().enumerate() {
                for (c, value) in row.iter().enumerate() {
                    rows.push((name, pol_name, ["+1/2", "-1/2"][r], mj_labels()[c], *value));
                }
            }
        }
    }
    let bytes = match cli.format {
        Format::Csv => {
            let mut s = String::from("level,polarization,excited_mj,ground_mj,intensity\n");
            for (level, pol, emj, gmj, v) in &rows {
                s.push_str(&format!("{level},{pol},{emj},{gmj},{v}\n"));
            }
            s.into_bytes()
        }
        Format::Json => {
            let entries: Vec<serde_json::Value> = rows
                .iter()
                .map(|(level, pol, emj, gmj, v)| {
                    serde_json::json!({
                        "level": level,
                        "polarization": pol,
                        "excited_mj": emj,
                        "ground_mj": gmj,
                        "intensity": v,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "schema": 1,
                "gamma": args.gamma,
                "entries": entries,
            });
            let mut bytes = serde_json::to_vec_pretty(&doc).expect("serializable");
            bytes.push(b'\n');
            bytes
        }
    };
    emit(&cli.out, &bytes)
}

fn cmd_dark(cli: &Cli, args: &DarkArgs) -> Result<(), CliError> {
    if args.excited.is_empty() {
        return Err(CliError::Validation("need at least one excited doublet".into()));
    }
    let config = load_config(cli)?;
    let alpha = config.model.alpha.unwrap_or_else(|| MixingParameters::default().alpha);
    let mix = MixingParameters::new(args.gamma, alpha);
    let (g6, g7) = ExcitedLevel::canonical_pair();
    let blocks: Result<Vec<_>, CliError> = args
        .excited
        .iter()
        .map(|name| match name.trim() {
            "g6" | "gamma6" => Ok(dipole_block(&g6, args.pol, &mix)),
            "g7" | "gamma7" => Ok(dipole_block(&g7, args.pol, &mix)),
            other => Err(CliError::Validation(format!(
                "unknown excited doublet `{other}` (g6|g7)"
            ))),
        })
        .collect();
    let blocks = blocks?;
    let dark = dark_subspace(&blocks).map_err(|e| CliError::Validation(e.to_string()))?;
    let bytes = match cli.format {
        Format::Json => {
            let basis: Vec<Vec<serde_json::Value>> = dark
                .basis
                .iter()
                .map(|v| {
                    v.iter()
                        .map(|z| serde_json::json!({"re": z.re, "im": z.im}))
                        .collect()
                })
                .collect();
            let doc = serde_json::json!({
                "schema": 1,
                "dimension": dark.dimension,
                "ground_order": mj_labels(),
                "basis": basis,
            });
            let mut b = serde_json::to_vec_pretty(&doc).expect("serializable");
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut s = format!("dimension,{}\n", dark.dimension);
            for (i, v) in dark.basis.iter().enumerate() {
                let comps: Vec<String> =
                    v.iter().map(|z| format!("{:+.6}{:+.6}i", z.re, z.im)).collect();
                s.push_str(&format!("vector_{i},{}\n", comps.join(",")));
            }
            s.into_bytes()
        }
    };
    emit(&cli.out, &bytes)
}

fn parse_delays(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Validation(format!(
            "delay spec `{spec}` must be start:stop:step"
        )));
    }
    let parse = |s: &str| -> Result<f64, CliError> {
        s.parse()
            .map_err(|_| CliError::Validation(format!("bad number `{s}` in delay spec")))
    };
    let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || stop <= start {
        return Err(CliError::Validation("need stop > start and step > 0".into()));
    }
    let mut delays = Vec::new();
    let mut t = start;
    while t <= stop + 1e-9 {
        delays.push(t);
        t += step;
    }
    Ok(delays)
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let params = config.model_parameters();
    params.validate().map_err(|e| CliError::Validation(e.to_string()))?;
    let combo = ProbeCombo::new(args.combo, args.probe)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let delays = parse_delays(&args.delays)?;
    let synth = SynthesisConfig {
        integrator: IntegratorConfig {
            step: config.integrator_step_ps.unwrap_or(DEFAULT_STEP),
            check_invariants: true,
        },
        ..SynthesisConfig::default()
    };
    let trace = crate::signal::synthesize_trace(&params, combo, &delays, &synth)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut bytes = Vec::new();
    write_trace_csv(&trace, &mut bytes).map_err(|e| CliError::Io(e.to_string()))?;
    emit(&cli.out, &bytes)
}

fn collect_trace_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "csv"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            if !input.exists() {
                return Err(CliError::Io(format!("no such file: {}", input.display())));
            }
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        return Err(CliError::Io("no trace CSV files found".into()));
    }
    Ok(files)
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let files = collect_trace_files(&args.data)?;
    let mut traces = Vec::new();
    for file in &files {
        let reader = BufReader::new(
            fs::File::open(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?,
        );
        let trace = read_trace_csv(reader).map_err(|e| {
            CliError::Validation(format!("{}: {e}", file.display()))
        })?;
        traces.push(trace);
    }
    let base = config.model_parameters();
    let init = if config.model.omega0.is_some() {
        base.clone()
    } else {
        let mut guessed =
            initial_guess(&traces, &base).map_err(|e| CliError::Validation(e.to_string()))?;
        if guessed.omega0 == 0.0 {
            guessed.omega0 = 0.06;
            guessed.pulse = PulseShape::square(0.0, 9.0);
        }
        guessed
    };
    let opts = config.fit_options(cli.seed.unwrap_or(0))?;
    let fixed = config.fixed_set()?;
    let result = fit_global(&traces, &init, &fixed, &opts)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let mut bytes = serde_json::to_vec_pretty(&result.to_json()).expect("serializable");
    bytes.push(b'\n');
    emit(&cli.out, &bytes)?;
    if !result.converged {
        return Err(CliError::NonConvergence(format!(
            "evaluation budget exhausted (residual {})",
            result.residual_norm
        )));
    }
    Ok(())
}

fn cmd_tempfit(cli: &Cli, args: &TempfitArgs) -> Result<(), CliError> {
    let reader = BufReader::new(
        fs::File::open(&args.data)
            .map_err(|e| CliError::Io(format!("{}: {e}", args.data.display())))?,
    );
    let mut series =
        estimation::read_series_csv(reader).map_err(|e| CliError::Validation(e.to_string()))?;
    if args.correct_temperatures {
        let corrected: Result<Vec<_>, _> = series
            .entries()
            .iter()
            .map(|e| {
                correct_temperature(e.temperature_k).map(|t| estimation::TemperaturePoint {
                    temperature_k: t,
                    ..*e
                })
            })
            .collect();
        series = estimation::TemperatureSeries::new(
            corrected.map_err(|e| CliError::Validation(e.to_string()))?,
        )
        .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let mode = if args.free_exponent {
        ExponentMode::Free
    } else {
        ExponentMode::FixedQuadratic
    };
    let fit =
        fit_temperature_law(&series, mode).map_err(|e| CliError::Validation(e.to_string()))?;
    let doc = serde_json::json!({
        "schema": 1,
        "coefficient_per_ps_kp": fit.coefficient,
        "exponent": fit.exponent,
        "coefficient_se": fit.coefficient_se,
        "exponent_se": fit.exponent_se,
        "temperatures_corrected": args.correct_temperatures,
        "n_points": series.entries().len(),
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("serializable");
    bytes.push(b'\n');
    emit(&cli.out, &bytes)
}

fn report_to_json(report: &InitialisationReport, omega0: f64, drive: f64) -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "omega0_calibrated_rad_per_ps": omega0,
        "omega0_drive_rad_per_ps": drive,
        "target_fidelity": report.target_fidelity,
        "time_to_target_ps": report.time_to_target_ps,
        "saturation_level": report.saturation_level,
        "saturation_time_ps": report.saturation_time_ps,
    })
}

fn cmd_initialise(cli: &Cli, args: &InitialiseArgs) -> Result<(), CliError> {
    let config = load_config(cli)?;
    let schemes_config = SchemesConfig::default();
    let base = config.model_parameters();
    // drive strength: explicit override, else calibrate against the
    // single-cycle result
    let omega_cal = match config.model.omega0 {
        Some(v) if v > 0.0 => v,
        _ => {
            let mut cal_params = base.clone();
            cal_params.pulse = PulseShape::square(0.0, 9.0);
            calibrate_rabi(&cal_params, CALIBRATION_TARGET, &schemes_config)
                .map_err(|e| CliError::Validation(e.to_string()))?
                .omega0
        }
    };
    let report = if args.strained {
        let scheme = StrainedScheme {
            t_orbital: args.t_orbital.unwrap_or(15.0),
            t_spin: args.t_spin.unwrap_or(4.9e9),
            detuning: 0.0,
        };
        strained_prediction(
            &scheme,
            omega_cal,
            args.drive_scale,
            args.target.unwrap_or(0.99),
            &schemes_config,
        )
        .map_err(|e| CliError::Validation(e.to_string()))?
    } else {
        let mut params = base.clone();
        params.omega0 = omega_cal * FULL_STRENGTH_DRIVE_SCALE * args.drive_scale;
        if let Some(t) = args.t_orbital {
            params.t_orbital = t;
        }
        if let Some(t) = args.t_spin {
            params.t_spin = t;
        }
        match args.target {
            Some(target) => time_to_fidelity(&params, target, &schemes_config)
                .map_err(|e| CliError::Validation(e.to_string()))?,
            None => simulate_initialisation(&params, args.duration, &schemes_config)
                .map_err(|e| CliError::Validation(e.to_string()))?,
        }
    };
    let drive = if args.strained {
        omega_cal * args.drive_scale
    } else {
        omega_cal * FULL_STRENGTH_DRIVE_SCALE * args.drive_scale
    };
    let doc = report_to_json(&report, omega_cal, drive);
    let mut json_bytes = serde_json::to_vec_pretty(&doc).expect("serializable");
    json_bytes.push(b'\n');
    let mut csv = String::from("time_ps,dark_population\n");
    for (t, p) in &report.trajectory {
        csv.push_str(&format!("{t},{p}\n"));
    }
    match &cli.out {
        Some(path) => {
            atomic_write(path, &json_bytes)?;
            let csv_path = path.with_extension("csv");
            atomic_write(&csv_path, csv.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(&json_bytes)?;
        }
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn configure_threads() {
    if let Ok(value) = std::env::var("BPUMP_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints its own help/usage; map parse failures to the
            // validation exit code, help/version to success
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Tables(args) => cmd_tables(&cli, args),
        Command::Dark(args) => cmd_dark(&cli, args),
        Command::Simulate(args) => cmd_simulate(&cli, args),
        Command::Fit(args) => cmd_fit(&cli, args),
        Command::Tempfit(args) => cmd_tempfit(&cli, args),
        Command::Initialise(args) => cmd_initialise(&cli, args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
