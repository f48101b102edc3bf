use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcf_bsfwm::compensation::{Axis, Perturbation};
use pcf_bsfwm::io::Format;
use pcf_bsfwm::units::LinearGrid;
use pcf_bsfwm::Error;

mod commands;
mod config;

use config::{parse_grid, parse_list, parse_perturbation, PumpSetting, RunConfig};

/// Photonic crystal fibre dispersion and BS-FWM phase-matching design tool.
#[derive(Parser)]
#[command(name = "pcf-bsfwm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// n_eff, β, β₁, β₂ and v_g over wavelength; prints the ZDW.
    Dispersion(DispersionArgs),
    /// Symmetry bandwidth over a (pitch, d/pitch) grid with ZDW contours.
    SymmetryMap(MapArgs),
    /// Phase-matching map over (λ_q, λ_s) with both zero loci.
    Phasematch(PhasematchArgs),
    /// Efficiency envelope over source wavelength.
    Envelope(EnvelopeArgs),
    /// Fixed-pump shift compensating pitch or d/pitch errors.
    Compensate(CompensateArgs),
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for grid computations.
    #[arg(long)]
    threads: Option<usize>,
    /// Reserved; the tool has no randomness.
    #[arg(long)]
    seedless: bool,
}

#[derive(Args)]
struct Fibre {
    /// Hole pitch, µm.
    #[arg(long)]
    pitch: Option<f64>,
    /// Hole diameter over pitch.
    #[arg(long)]
    ratio: Option<f64>,
    /// Finite-difference base step, rad/s.
    #[arg(long)]
    derivative_step: Option<f64>,
}

#[derive(Args)]
struct Conversion {
    /// Fixed pump wavelength in nm, or "auto".
    #[arg(long, value_parser = parse_pump)]
    pump: Option<PumpSetting>,
    /// Fixed pump intensity FWHM, nm.
    #[arg(long)]
    fwhm: Option<f64>,
    /// Target wavelength, nm.
    #[arg(long)]
    target: Option<f64>,
    /// Fibre length, m.
    #[arg(long)]
    length: Option<f64>,
    /// Nonlinear coefficient, 1/(W m).
    #[arg(long)]
    gamma: Option<f64>,
    /// Fixed pump peak power, W.
    #[arg(long)]
    p_power: Option<f64>,
    /// Tunable pump peak power, W.
    #[arg(long)]
    q_power: Option<f64>,
    /// Geometry perturbation "pitch:F" or "ratio:F".
    #[arg(long, value_parser = parse_perturb, allow_hyphen_values = true)]
    perturb: Option<Perturbation>,
}

#[derive(Args)]
struct DispersionArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    fibre: Fibre,
    /// Wavelength grid "start:stop:step", µm.
    #[arg(long, value_parser = parse_grid_arg)]
    lambda: Option<LinearGrid>,
    #[arg(long, value_parser = parse_perturb, allow_hyphen_values = true)]
    perturb: Option<Perturbation>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    common: Common,
    /// Pitch axis "start:stop:step", µm.
    #[arg(long, value_parser = parse_grid_arg)]
    pitch_grid: Option<LinearGrid>,
    /// d/pitch axis "start:stop:step".
    #[arg(long, value_parser = parse_grid_arg)]
    ratio_grid: Option<LinearGrid>,
    /// Group-velocity symmetry threshold, m/s.
    #[arg(long)]
    threshold: Option<f64>,
    /// ZDW contour levels, µm, comma separated.
    #[arg(long, value_parser = parse_list_arg)]
    levels: Option<::std::vec::Vec<f64>>,
    #[arg(long)]
    derivative_step: Option<f64>,
}

#[derive(Args)]
struct PhasematchArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    fibre: Fibre,
    #[command(flatten)]
    conversion: Conversion,
    /// Tunable pump grid "start:stop:step", nm.
    #[arg(long, value_parser = parse_grid_arg)]
    q_grid: Option<LinearGrid>,
    /// Source grid "start:stop:step", nm.
    #[arg(long, value_parser = parse_grid_arg)]
    s_grid: Option<LinearGrid>,
}

#[derive(Args)]
struct EnvelopeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    fibre: Fibre,
    #[command(flatten)]
    conversion: Conversion,
    /// Source grid "start:stop:step", nm.
    #[arg(long, value_parser = parse_grid_arg)]
    s_grid: Option<LinearGrid>,
}

#[derive(Args)]
struct CompensateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    fibre: Fibre,
    /// Target wavelength, nm.
    #[arg(long)]
    target: Option<f64>,
    /// Perturbed parameter: pitch or ratio.
    #[arg(long, value_parser = parse_axis)]
    axis: Option<Axis>,
    /// Relative perturbations, comma separated.
    #[arg(long, value_parser = parse_list_arg, allow_hyphen_values = true)]
    fractions: Option<::std::vec::Vec<f64>>,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_pump(s: &str) -> Result<PumpSetting, String> {
    s.parse().map_err(|e: Error| e.to_string())
}
fn parse_perturb(s: &str) -> Result<Perturbation, String> {
    parse_perturbation(s).map_err(|e| e.to_string())
}
fn parse_grid_arg(s: &str) -> Result<LinearGrid, String> {
    parse_grid(s).map_err(|e| e.to_string())
}
fn parse_list_arg(s: &str) -> Result<Vec<f64>, String> {
    parse_list(s).map_err(|e| e.to_string())
}
fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Fibre {
    fn apply(&self, c: &mut RunConfig) {
        c.pitch_um = self.pitch;
        c.d_over_pitch = self.ratio;
        c.derivative_step_rad_per_s = self.derivative_step;
    }
}

impl Conversion {
    fn apply(&self, c: &mut RunConfig) {
        c.pump_nm = self.pump;
        c.pump_fwhm_nm = self.fwhm;
        c.target_nm = self.target;
        c.fibre_length_m = self.length;
        c.gamma_per_w_per_m = self.gamma;
        c.p_power_w = self.p_power;
        c.q_power_w = self.q_power;
        c.perturbation = self.perturb;
    }
}

enum Failure {
    Lib(Error),
    Other(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(lib) => Failure::Lib(lib),
            Err(other) => Failure::Other(other),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NotFound(_) => 3,
        e if e.is_domain_or_config() => 2,
        _ => 1,
    }
}

fn load(common: &Common, command: &str, flags: RunConfig) -> Result<RunConfig, Failure> {
    if common.seedless {
        return Err(Error::Config("--seedless is reserved: this tool uses no randomness".into()).into());
    }
    let file = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(c) = file.command.as_deref().filter(|c| *c != command) {
        return Err(Error::Config(format!("config file is for '{c}', not '{command}'")).into());
    }
    let mut merged = file.overlay(&flags);
    if common.format.is_some() {
        merged.format = common.format;
    }
    Ok(merged)
}

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn write_output(common: &Common, output: commands::Output) -> Result<(), Failure> {
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    match &common.out {
        Some(path) => {
            std::fs::write(path, &output.body).map_err(|e| anyhow::anyhow!("writing {}: {e}", path.display()))?;
            for (suffix, bytes) in &output.sidecars {
                let p = sidecar_path(path, suffix);
                std::fs::write(&p, bytes).map_err(|e| anyhow::anyhow!("writing {}: {e}", p.display()))?;
            }
            for m in &output.messages {
                println!("{m}");
            }
        }
        None => {
            for m in &output.messages {
                eprintln!("{m}");
            }
            if !output.sidecars.is_empty() {
                eprintln!("warning: contours are only written alongside --out or with --format json");
            }
            std::io::stdout().write_all(&output.body).map_err(|e| anyhow::anyhow!("writing stdout: {e}"))?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (common, output) = match cli.command {
        Command::Dispersion(a) => {
            let mut flags = RunConfig { lambda_um: a.lambda, perturbation: a.perturb, ..Default::default() };
            a.fibre.apply(&mut flags);
            let cfg = load(&a.common, "dispersion", flags)?;
            (a.common, commands::dispersion(cfg)?)
        }
        Command::SymmetryMap(a) => {
            let flags = RunConfig {
                pitch_grid_um: a.pitch_grid,
                ratio_grid: a.ratio_grid,
                threshold_m_per_s: a.threshold,
                contour_levels_um: a.levels.clone(),
                derivative_step_rad_per_s: a.derivative_step,
                ..Default::default()
            };
            let cfg = load(&a.common, "symmetry-map", flags)?;
            let threads = a.common.threads;
            (a.common, commands::symmetry_map(cfg, threads)?)
        }
        Command::Phasematch(a) => {
            let mut flags = RunConfig { q_grid_nm: a.q_grid, s_grid_nm: a.s_grid, ..Default::default() };
            a.fibre.apply(&mut flags);
            a.conversion.apply(&mut flags);
            let cfg = load(&a.common, "phasematch", flags)?;
            let out = with_threads(a.common.threads, || commands::phasematch(cfg))?;
            (a.common, out)
        }
        Command::Envelope(a) => {
            let mut flags = RunConfig { s_grid_nm: a.s_grid, ..Default::default() };
            a.fibre.apply(&mut flags);
            a.conversion.apply(&mut flags);
            let cfg = load(&a.common, "envelope", flags)?;
            let out = with_threads(a.common.threads, || commands::envelope(cfg))?;
            (a.common, out)
        }
        Command::Compensate(a) => {
            let mut flags = RunConfig { target_nm: a.target, axis: a.axis, fractions: a.fractions.clone(), ..Default::default() };
            a.fibre.apply(&mut flags);
            let cfg = load(&a.common, "compensate", flags)?;
            let out = with_threads(a.common.threads, || commands::compensate(cfg))?;
            (a.common, out)
        }
    };
    write_output(&common, output)
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> pcf_bsfwm::Result<T> + Send,
) -> Result<T, Failure> {
    match threads {
        None => Ok(f()?),
        Some(0) => Err(Error::Config("thread count must be at least 1".into()).into()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(f)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
