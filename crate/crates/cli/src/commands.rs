//! Subcommand implementations. Each resolves its configuration, computes,
//! and returns the rendered output plus human-readable summary lines.

use pcf_bsfwm::compensation::{self, Axis, CurveStatus};
use pcf_bsfwm::fwm::{self, ConversionSetup, PumpSpec, DEFAULT_ZDW_WINDOW_UM};
use pcf_bsfwm::io::{self, fmt_f64, fmt_opt, Format, Header, Table};
use pcf_bsfwm::pcf::{DispersionModel, FibreGeometry, DEFAULT_DERIVATIVE_STEP};
use pcf_bsfwm::sweep::{self, ModelData, SweepGrid};
use pcf_bsfwm::units::LinearGrid;
use pcf_bsfwm::{Error, Result};
use serde_json::{json, Value};

use crate::config::{PumpSetting, RunConfig};

pub const DEFAULT_FWHM_NM: f64 = 5.0;
pub const DEFAULT_LEVELS_UM: [f64; 7] = [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2];
const DEFAULT_Q_GRID_NM: LinearGrid = LinearGrid { start: 700.0, stop: 1450.0, step: 2.0 };
const DEFAULT_S_GRID_NM: LinearGrid = LinearGrid { start: 600.0, stop: 1540.0, step: 2.0 };

/// A finished run.
pub struct Output {
    pub body: Vec<u8>,
    /// Additional files keyed by suffix (e.g. contours next to a CSV map).
    pub sidecars: Vec<(String, Vec<u8>)>,
    pub messages: Vec<String>,
    pub warnings: Vec<String>,
}

fn require(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("{what} is required")))
}

fn base_model(cfg: &mut RunConfig) -> Result<DispersionModel> {
    let pitch = require(cfg.pitch_um, "pitch (--pitch)")?;
    let ratio = require(cfg.d_over_pitch, "hole ratio d/pitch (--ratio)")?;
    let step = *cfg.derivative_step_rad_per_s.get_or_insert(DEFAULT_DERIVATIVE_STEP);
    DispersionModel::new(FibreGeometry::new(pitch, ratio)?)?.with_derivative_step(step)
}

/// The nominal model with any configured perturbation applied.
fn model(cfg: &mut RunConfig) -> Result<DispersionModel> {
    let m = base_model(cfg)?;
    match cfg.perturbation {
        Some(p) => m.with_geometry(p.apply(m.geometry())?),
        None => Ok(m),
    }
}

fn setup(cfg: &mut RunConfig) -> Result<ConversionSetup> {
    let s = ConversionSetup {
        fibre_length_m: *cfg.fibre_length_m.get_or_insert(fwm::DEFAULT_FIBRE_LENGTH_M),
        gamma: cfg.gamma_per_w_per_m,
        p_power: cfg.p_power_w,
        q_power: cfg.q_power_w,
    };
    s.validate()?;
    Ok(s)
}

/// Resolves `"auto"` against the (perturbed) fibre and records the value.
fn pump(cfg: &mut RunConfig, m: &DispersionModel, target_nm: f64, messages: &mut Vec<String>) -> Result<PumpSpec> {
    let fwhm = *cfg.pump_fwhm_nm.get_or_insert(DEFAULT_FWHM_NM);
    let center = match cfg.pump_nm.unwrap_or(PumpSetting::Auto) {
        PumpSetting::Nm(v) => v,
        PumpSetting::Auto => {
            let s = compensation::pump_for_target(m, target_nm)?;
            messages.push(format!("fixed pump (auto): {:.4} nm", s.lambda_p_nm));
            s.lambda_p_nm
        }
    };
    cfg.pump_nm = Some(PumpSetting::Nm(center));
    PumpSpec::new(center, fwhm)
}

fn target(cfg: &RunConfig) -> Result<f64> {
    let t = cfg
        .target_nm
        .ok_or_else(|| Error::Config("a target wavelength (--target, nm) is required".into()))?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Config(format!("target wavelength must be positive, got {t} nm")));
    }
    Ok(t)
}

fn render(format: Format, header: &Header, table: &Table, data: Value) -> Result<Vec<u8>> {
    let mut body = Vec::new();
    match format {
        Format::Csv => io::write_csv(&mut body, header, table)?,
        Format::Json => io::write_json(&mut body, header, data)?,
    }
    Ok(body)
}

fn finish(cfg: &mut RunConfig, command: &str) -> Format {
    cfg.command = Some(command.to_string());
    *cfg.format.get_or_insert(Format::Csv)
}

pub fn dispersion(mut cfg: RunConfig) -> Result<Output> {
    let m = model(&mut cfg)?;
    let grid = match cfg.lambda_um {
        Some(g) => g,
        None => {
            // stencil-safe part of the ZDW window at 1 nm
            let (lo, hi) = m.stencil_window(2);
            let start = (lo.max(DEFAULT_ZDW_WINDOW_UM.0) * 1e3).ceil() / 1e3;
            let stop = (hi.min(DEFAULT_ZDW_WINDOW_UM.1) * 1e3).floor() / 1e3;
            LinearGrid::new(start, stop, 1e-3)?
        }
    };
    grid.validate()?;
    cfg.lambda_um = Some(grid);
    let format = finish(&mut cfg, "dispersion");
    let samples = m.dispersion_profile(&grid.points())?;
    let zdw = match m.find_zdw(DEFAULT_ZDW_WINDOW_UM) {
        Ok(z) => Some(z),
        Err(Error::NotFound(_)) => None,
        Err(e) => return Err(e),
    };
    let mut messages = vec![match &zdw {
        Some(z) => format!("zero-dispersion wavelength: {:.3} µm ({:.2} nm)", z.lambda_um, z.lambda_um * 1e3),
        None => "zero-dispersion wavelength: none in 0.4-2.0 µm".to_string(),
    }];
    if let Some(z) = zdw.filter(|z| z.root_count > 1) {
        messages.push(format!("{} sign changes of beta2 in the search window", z.root_count));
    }

    let header = Header::new("dispersion", &cfg)?.with("zdw_um", zdw.map(|z| z.lambda_um))?;
    let mut table = Table::new(&["lambda_um", "n_eff", "beta_rad_per_m", "beta1_s_per_m", "beta2_s2_per_m", "vg_m_per_s"]);
    for s in &samples {
        table.push(vec![
            fmt_f64(s.lambda_um),
            fmt_f64(s.n_eff),
            fmt_f64(s.beta),
            fmt_f64(s.beta1),
            fmt_f64(s.beta2),
            fmt_f64(s.group_velocity),
        ]);
    }
    let column = |f: fn(&pcf_bsfwm::pcf::DispersionSample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    let data = json!({
        "zdw_um": zdw.map(|z| z.lambda_um),
        "zdw_root_count": zdw.map(|z| z.root_count),
        "lambda_um": column(|s| s.lambda_um),
        "n_eff": column(|s| s.n_eff),
        "beta_rad_per_m": column(|s| s.beta),
        "beta1_s_per_m": column(|s| s.beta1),
        "beta2_s2_per_m": column(|s| s.beta2),
        "vg_m_per_s": column(|s| s.group_velocity),
    });
    Ok(Output { body: render(format, &header, &table, data)?, sidecars: vec![], messages, warnings: vec![] })
}

pub fn symmetry_map(mut cfg: RunConfig, threads: Option<usize>) -> Result<Output> {
    let defaults = SweepGrid::default();
    let grid = SweepGrid {
        pitch: *cfg.pitch_grid_um.get_or_insert(defaults.pitch),
        ratio: *cfg.ratio_grid.get_or_insert(defaults.ratio),
        threshold: *cfg.threshold_m_per_s.get_or_insert(defaults.threshold),
    };
    grid.validate()?;
    let levels = cfg.contour_levels_um.get_or_insert_with(|| DEFAULT_LEVELS_UM.to_vec()).clone();
    let step = *cfg.derivative_step_rad_per_s.get_or_insert(DEFAULT_DERIVATIVE_STEP);
    let format = finish(&mut cfg, "symmetry-map");
    let data = ModelData { derivative_step: step, ..ModelData::default() };
    let result = sweep::run_sweep(&grid, &data, threads)?;

    let mut warnings = Vec::new();
    let contours = match sweep::extract_zdw_contours(&result, &levels) {
        Ok(c) => c,
        Err(e) => {
            warnings.push(format!("no ZDW contours: {e}"));
            Vec::new()
        }
    };
    let messages = vec![format!(
        "{} cells: {} ok, {} truncated, {} no-zdw, {} invalid-domain",
        result.cells.len(),
        result.count(sweep::CellStatus::Ok),
        result.count(sweep::CellStatus::Truncated),
        result.count(sweep::CellStatus::NoZdw),
        result.count(sweep::CellStatus::InvalidDomain)
    )];
    let header = Header::new("symmetry-map", &cfg)?
        .with("bandwidth_definition", "total wavelength extent of the symmetric band about the first ZDW, µm")?;
    let mut table = Table::new(&["pitch_um", "d_over_pitch", "zdw_um", "bandwidth_um", "status"]);
    for c in &result.cells {
        table.push(vec![
            fmt_f64(c.pitch_um),
            fmt_f64(c.ratio),
            fmt_opt(c.zdw_um),
            fmt_opt(c.bandwidth_um),
            c.status.as_str().to_string(),
        ]);
    }
    let contours_json = serde_json::to_value(&contours)?;
    let data = json!({
        "pitch_um": result.pitch_um,
        "d_over_pitch": result.ratio,
        "layout": "row-major, d_over_pitch outer",
        "zdw_um": result.cells.iter().map(|c| c.zdw_um).collect::<Vec<_>>(),
        "bandwidth_um": result.cells.iter().map(|c| c.bandwidth_um).collect::<Vec<_>>(),
        "status": result.cells.iter().map(|c| c.status.as_str()).collect::<Vec<_>>(),
        "status_code": result.cells.iter().map(|c| c.status.code()).collect::<Vec<_>>(),
        "contours": contours_json,
    });
    let mut sidecars = Vec::new();
    if format == Format::Csv {
        let mut buf = Vec::new();
        io::write_json(&mut buf, &Header::new("zdw-contours", &cfg)?, json!({ "contours": contours_json }))?;
        sidecars.push(("contours.json".to_string(), buf));
    }
    Ok(Output { body: render(format, &header, &table, data)?, sidecars, messages, warnings })
}

pub fn phasematch(mut cfg: RunConfig) -> Result<Output> {
    let m = model(&mut cfg)?;
    let t = target(&cfg)?;
    let setup = setup(&mut cfg)?;
    let mut messages = Vec::new();
    let pump = pump(&mut cfg, &m, t, &mut messages)?;
    let q = *cfg.q_grid_nm.get_or_insert(DEFAULT_Q_GRID_NM);
    let s = *cfg.s_grid_nm.get_or_insert(DEFAULT_Q_GRID_NM);
    q.validate()?;
    s.validate()?;
    let format = finish(&mut cfg, "phasematch");
    let (qs, ss) = (q.points(), s.points());
    let map = fwm::phasematch_map(&m, &setup, &pump, &qs, &ss, t)?;
    let intersections = if ss.len() >= 3 {
        fwm::loci_intersections(&m, &setup, &pump, t, &ss)?
    } else {
        Vec::new()
    };
    let contacts = fwm::loci_contacts(&map, 1.0);
    messages.push(format!(
        "{} locus intersection(s); longest one-cell coincidence {:.0} nm",
        intersections.len(),
        contacts.iter().map(|c| c.span_nm()).fold(0.0, f64::max)
    ));

    let header = Header::new("phasematch", &cfg)?
        .with("lambda_p_nm", pump.center_nm)?
        .with("intersections", &intersections)?;
    let mut table = Table::new(&[
        "lambda_q_nm",
        "lambda_s_nm",
        "delta_kappa_rad_per_m",
        "energy_mismatch_rad_per_s",
        "phi",
        "alpha_p",
        "product",
    ]);
    for (is, &ls) in ss.iter().enumerate() {
        for (iq, &lq) in qs.iter().enumerate() {
            let k = map.index(iq, is);
            table.push(vec![
                fmt_f64(lq),
                fmt_f64(ls),
                fmt_f64(map.delta_kappa[k]),
                fmt_f64(map.energy_mismatch[k]),
                fmt_f64(map.phi[k]),
                fmt_f64(map.alpha[k]),
                fmt_f64(map.phi[k] * map.alpha[k]),
            ]);
        }
    }
    let data = json!({
        "layout": "row-major, lambda_s outer",
        "map": map,
        "intersections": intersections,
        "coincidences": contacts,
    });
    Ok(Output { body: render(format, &header, &table, data)?, sidecars: vec![], messages, warnings: vec![] })
}

pub fn envelope(mut cfg: RunConfig) -> Result<Output> {
    let m = model(&mut cfg)?;
    let t = target(&cfg)?;
    let setup = setup(&mut cfg)?;
    let mut messages = Vec::new();
    let pump = pump(&mut cfg, &m, t, &mut messages)?;
    let s = *cfg.s_grid_nm.get_or_insert(DEFAULT_S_GRID_NM);
    s.validate()?;
    let format = finish(&mut cfg, "envelope");
    let points = fwm::efficiency_envelope(&m, &setup, &pump, t, &s.points())?;
    let span = fwm::span_above(&points, compensation::SUMMARY_LEVEL);
    let width = fwm::span_width_nm(&points, compensation::SUMMARY_LEVEL);
    messages.push(match span {
        Some((a, b)) => format!("efficiency >= 0.5 from {a} to {b} nm ({width} nm)"),
        None => "efficiency never reaches 0.5".to_string(),
    });
    let clipped = points.iter().filter(|p| p.clipped).count();
    let warnings = if clipped > 0 {
        vec![format!("{clipped} source point(s) had the tunable-pump search clipped by the validity domain")]
    } else {
        vec![]
    };

    let header = Header::new("envelope", &cfg)?
        .with("lambda_p_nm", pump.center_nm)?
        .with("summary_bandwidth_nm", width)?
        .with("summary_span_nm", span)?;
    let mut table = Table::new(&["lambda_s_nm", "efficiency", "lambda_q_nm", "phi", "alpha_p", "clipped"]);
    for p in &points {
        table.push(vec![
            fmt_f64(p.lambda_s_nm),
            fmt_f64(p.efficiency),
            fmt_f64(p.lambda_q_nm),
            fmt_f64(p.phi),
            fmt_f64(p.alpha),
            p.clipped.to_string(),
        ]);
    }
    let data = json!({ "summary_bandwidth_nm": width, "summary_span_nm": span, "points": points });
    Ok(Output { body: render(format, &header, &table, data)?, sidecars: vec![], messages, warnings })
}

pub fn compensate(mut cfg: RunConfig) -> Result<Output> {
    if cfg.perturbation.is_some() {
        return Err(Error::Config("compensate takes --axis and --fractions, not --perturb".into()));
    }
    let m = base_model(&mut cfg)?;
    let t = target(&cfg)?;
    let axis = *cfg.axis.get_or_insert(Axis::Pitch);
    let fractions = cfg
        .fractions
        .get_or_insert_with(|| (-10..=10).map(|k| k as f64 / 1000.0).collect())
        .clone();
    if fractions.is_empty() {
        return Err(Error::Config("at least one perturbation fraction is required".into()));
    }
    let format = finish(&mut cfg, "compensate");
    let nominal = compensation::pump_for_target(&m, t)?;
    let curve = compensation::compensation_curve(&m, axis, &fractions, t)?;
    let mut messages = vec![format!("nominal fixed pump: {:.4} nm", nominal.lambda_p_nm)];
    let warnings: Vec<String> = curve
        .iter()
        .filter(|p| p.status != CurveStatus::Ok)
        .map(|p| format!("fraction {}: {} {}", p.fraction, p.status.as_str(), p.message.clone().unwrap_or_default()))
        .collect();
    messages.push(format!("{} point(s) computed", curve.len() - warnings.len()));

    let header = Header::new("compensate", &cfg)?.with("nominal_lambda_p_nm", nominal.lambda_p_nm)?;
    let mut table = Table::new(&["axis", "fraction", "lambda_p_nm", "delta_lambda_p_nm", "status"]);
    for p in &curve {
        table.push(vec![
            p.axis.to_string(),
            fmt_f64(p.fraction),
            fmt_opt(p.lambda_p_nm),
            fmt_opt(p.delta_lambda_p_nm),
            p.status.as_str().to_string(),
        ]);
    }
    let data = json!({ "nominal_lambda_p_nm": nominal.lambda_p_nm, "curve": curve });
    Ok(Output { body: render(format, &header, &table, data)?, sidecars: vec![], messages, warnings })
}
