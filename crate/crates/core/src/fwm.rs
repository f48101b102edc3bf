//! Bragg-scattering four-wave mixing: energy conservation, phase mismatch,
//! phase-matching intensity, pump envelope, group-velocity symmetry and the
//! map/envelope computations built on them.
//!
//! A fixed pump `p` and a tunable pump `q` convert a source photon `s` to a
//! target `t` with `ω_p + ω_t = ω_q + ω_s`. The linear phase mismatch is
//! `Δβ = β_p + β_t − β_q − β_s` and the total mismatch adds the optional
//! cross-phase term, `Δκ = Δβ/2 + γ(P_q − P_p)/2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{self, Field, Polyline};
use crate::pcf::DispersionModel;
use crate::roots;
use crate::units::{nm_from_omega, omega_from_nm, omega_from_um, omega_width_from_nm, um_from_omega};
use crate::{Error, Result};

/// Default fibre length, m.
pub const DEFAULT_FIBRE_LENGTH_M: f64 = 1.0;

/// Default ZDW search window for symmetry metrics, µm.
pub const DEFAULT_ZDW_WINDOW_UM: (f64, f64) = (0.4, 2.0);

/// Half-width of the tunable-pump search window, in pump intensity FWHMs.
const SEARCH_HALF_WIDTH_FWHM: f64 = 5.0;

/// Coarse tunable-pump scan step, in pump intensity FWHMs.
const COARSE_STEP_FWHM: f64 = 0.1;

/// Golden-section tolerance of the inner maximisation, nm.
const REFINE_TOL_NM: f64 = 1e-3;

/// The four angular frequencies of a BS-FWM interaction, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourWaveSet {
    pub omega_p: f64,
    pub omega_q: f64,
    pub omega_s: f64,
    pub omega_t: f64,
}

impl FourWaveSet {
    pub fn new(omega_p: f64, omega_q: f64, omega_s: f64, omega_t: f64) -> Result<Self> {
        if [omega_p, omega_q, omega_s, omega_t].iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("all four frequencies must be positive".into()));
        }
        Ok(Self { omega_p, omega_q, omega_s, omega_t })
    }

    /// From wavelengths in nm.
    pub fn from_nm(p: f64, q: f64, s: f64, t: f64) -> Result<Self> {
        Self::new(omega_from_nm(p), omega_from_nm(q), omega_from_nm(s), omega_from_nm(t))
    }

    /// The set with `(p, t)` and `(q, s)` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            omega_p: self.omega_q,
            omega_q: self.omega_p,
            omega_s: self.omega_t,
            omega_t: self.omega_s,
        }
    }
}

/// `(ω_p + ω_t) − (ω_q + ω_s)`; zero when energy is conserved.
pub fn energy_mismatch(set: &FourWaveSet) -> f64 {
    (set.omega_p + set.omega_t) - (set.omega_q + set.omega_s)
}

/// `Δβ = β_p + β_t − β_q − β_s` in rad/m.
pub fn linear_phase_mismatch(set: &FourWaveSet, model: &DispersionModel) -> Result<f64> {
    let leg = |name: &str, omega: f64| {
        model.beta(omega).map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("{name} leg: {m}")),
            Error::ModelBreakdown(m) => Error::ModelBreakdown(format!("{name} leg: {m}")),
            other => other,
        })
    };
    let bp = leg("pump p", set.omega_p)?;
    let bq = leg("pump q", set.omega_q)?;
    let bs = leg("source", set.omega_s)?;
    let bt = leg("target", set.omega_t)?;
    Ok((bp - bq) + (bt - bs))
}

/// Fibre length and optional nonlinear parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConversionSetup {
    pub fibre_length_m: f64,
    /// W⁻¹ m⁻¹
    pub gamma: Option<f64>,
    /// W
    pub p_power: Option<f64>,
    /// W
    pub q_power: Option<f64>,
}

impl Default for ConversionSetup {
    fn default() -> Self {
        Self { fibre_length_m: DEFAULT_FIBRE_LENGTH_M, gamma: None, p_power: None, q_power: None }
    }
}

impl ConversionSetup {
    pub fn new(fibre_length_m: f64) -> Result<Self> {
        let s = Self { fibre_length_m, ..Self::default() };
        s.validate()?;
        Ok(s)
    }

    pub fn with_nonlinearity(mut self, gamma: f64, p_power: f64, q_power: f64) -> Result<Self> {
        self.gamma = Some(gamma);
        self.p_power = Some(p_power);
        self.q_power = Some(q_power);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fibre_length_m.is_finite() && self.fibre_length_m > 0.0) {
            return Err(Error::Config(format!(
                "fibre length must be positive, got {} m",
                self.fibre_length_m
            )));
        }
        for p in [self.p_power, self.q_power].into_iter().flatten() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Config(format!("pump powers must be non-negative, got {p} W")));
            }
        }
        let powers = self.p_power.is_some() || self.q_power.is_some();
        if powers && (self.p_power.is_none() || self.q_power.is_none()) {
            return Err(Error::Config("both pump powers are required together".into()));
        }
        if powers != self.gamma.is_some() {
            return Err(Error::Config(
                "the nonlinearity gamma is required exactly when pump powers are given".into(),
            ));
        }
        Ok(())
    }

    /// `γ(P_q − P_p)/2`, zero when the nonlinear term is absent.
    pub fn nonlinear_offset(&self) -> Result<f64> {
        self.validate()?;
        Ok(match (self.gamma, self.p_power, self.q_power) {
            (Some(g), Some(pp), Some(pq)) => 0.5 * g * (pq - pp),
            _ => 0.0,
        })
    }
}

/// `Δκ = Δβ/2 + γ(P_q − P_p)/2` in rad/m.
pub fn total_phase_mismatch(set: &FourWaveSet, model: &DispersionModel, setup: &ConversionSetup) -> Result<f64> {
    let offset = setup.nonlinear_offset()?;
    Ok(0.5 * linear_phase_mismatch(set, model)? + offset)
}

/// sin(x)/x with sinc(0) = 1.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Phase-matching intensity `|sinc(Δκ L / 2)|²`.
#[inline]
pub fn phasematch_intensity(delta_kappa: f64, length_m: f64) -> f64 {
    sinc(0.5 * delta_kappa * length_m).powi(2)
}

/// Fixed-pump spectrum: centre wavelength and intensity FWHM, both nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub center_nm: f64,
    pub fwhm_nm: f64,
}

impl PumpSpec {
    pub fn new(center_nm: f64, fwhm_nm: f64) -> Result<Self> {
        if !(center_nm.is_finite() && center_nm > 0.0) {
            return Err(Error::Config(format!("pump wavelength must be positive, got {center_nm} nm")));
        }
        if !(fwhm_nm.is_finite() && fwhm_nm > 0.0) {
            return Err(Error::Config(format!("pump FWHM must be positive, got {fwhm_nm} nm")));
        }
        Ok(Self { center_nm, fwhm_nm })
    }

    pub fn center_omega(&self) -> f64 {
        omega_from_nm(self.center_nm)
    }

    /// Intensity FWHM in rad/s.
    pub fn fwhm_omega(&self) -> f64 {
        omega_width_from_nm(self.fwhm_nm, self.center_nm)
    }

    /// Field-envelope width σ such that `exp(−2(Δω/σ)²)` has the intensity FWHM.
    pub fn sigma(&self) -> f64 {
        self.fwhm_omega() / (2.0 * std::f64::consts::LN_2).sqrt()
    }
}

/// `α_p = exp(−((ω_p − ω_p0)/σ)²)`.
pub fn pump_envelope(omega_p: f64, pump: &PumpSpec) -> f64 {
    let x = (omega_p - pump.center_omega()) / pump.sigma();
    (-x * x).exp()
}

/// [`pump_envelope`] at the energy-conserving `ω_p = ω_q + ω_s − ω_t`.
pub fn pump_envelope_for(set: &FourWaveSet, pump: &PumpSpec) -> f64 {
    pump_envelope(set.omega_q + set.omega_s - set.omega_t, pump)
}

/// `|v_g(ω₀ + δ) − v_g(ω₀ − δ)|` in m/s.
pub fn gv_symmetry_delta(model: &DispersionModel, omega0: f64, detuning: f64) -> Result<f64> {
    let up = model.group_velocity(omega0 + detuning)?;
    let down = model.group_velocity(omega0 - detuning)?;
    Ok((up - down).abs())
}

/// Result of [`symmetry_bandwidth`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryBandwidth {
    pub zdw_um: f64,
    /// Total wavelength extent `λ(ω₀ − δ) − λ(ω₀ + δ)` of the symmetric band, µm.
    pub bandwidth_um: f64,
    /// Largest qualifying detuning δ, rad/s.
    pub max_detuning: f64,
    /// Set when the scan reached the validity boundary (or a model breakdown)
    /// before Δv_g reached the threshold.
    pub truncated: bool,
}

/// Symmetric band about the first ZDW in [`DEFAULT_ZDW_WINDOW_UM`].
pub fn symmetry_bandwidth(model: &DispersionModel, threshold: f64) -> Result<SymmetryBandwidth> {
    symmetry_bandwidth_in(model, threshold, DEFAULT_ZDW_WINDOW_UM)
}

/// Largest detuning `δ` such that `Δv_g < threshold` for every grid detuning
/// up to `δ`, on a grid whose wavelength spacing is at most 1 nm.
pub fn symmetry_bandwidth_in(model: &DispersionModel, threshold: f64, zdw_window_um: (f64, f64)) -> Result<SymmetryBandwidth> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!("threshold must be non-negative, got {threshold}")));
    }
    let zdw = model.find_zdw(zdw_window_um)?;
    let omega0 = omega_from_um(zdw.lambda_um);
    let (s_lo, s_hi) = model.stencil_window(1);
    let (w_lo, w_hi) = (omega_from_um(s_hi), omega_from_um(s_lo));
    let max_detuning = (w_hi - omega0).min(omega0 - w_lo);
    if max_detuning <= 0.0 {
        return Err(Error::Domain(format!("ZDW at {} µm sits on the validity edge", zdw.lambda_um)));
    }
    // 1 nm at the longest wavelength reached bounds the spacing everywhere
    let step = omega_width_from_nm(1.0, um_from_omega(omega0 - max_detuning) * 1e3);
    let n = (max_detuning / step).floor() as usize;
    let mut last = 0.0;
    let mut truncated = true;
    for k in 1..=n {
        let d = k as f64 * step;
        match gv_symmetry_delta(model, omega0, d) {
            Ok(dv) if dv < threshold => last = d,
            Ok(_) => {
                truncated = false;
                break;
            }
            Err(Error::ModelBreakdown(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let bandwidth_um = if last > 0.0 { um_from_omega(omega0 - last) - um_from_omega(omega0 + last) } else { 0.0 };
    Ok(SymmetryBandwidth { zdw_um: zdw.lambda_um, bandwidth_um, max_detuning: last, truncated })
}

/// Φ map over `(λ_q, λ_s)` with the zero-mismatch and energy-conservation loci.
///
/// Layers are row-major with rows indexed by `λ_s` and columns by `λ_q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasematchMap {
    pub lambda_q_nm: Vec<f64>,
    pub lambda_s_nm: Vec<f64>,
    pub lambda_t_nm: f64,
    pub lambda_p_nm: f64,
    pub fibre_length_m: f64,
    /// Δκ with ω_p fixed at the pump centre, rad/m.
    pub delta_kappa: Vec<f64>,
    /// `(ω_q + ω_s − ω_t) − ω_p`, rad/s.
    pub energy_mismatch: Vec<f64>,
    pub phi: Vec<f64>,
    /// Pump envelope at the energy-conserving ω_p.
    pub alpha: Vec<f64>,
    pub zero_mismatch_locus: Vec<Polyline>,
    pub energy_locus: Vec<Polyline>,
}

impl PhasematchMap {
    pub fn index(&self, iq: usize, is: usize) -> usize {
        is * self.lambda_q_nm.len() + iq
    }
}

/// Computes Φ, α_p and both zero loci on the `q_grid × s_grid` grid (nm).
pub fn phasematch_map(
    model: &DispersionModel,
    setup: &ConversionSetup,
    pump: &PumpSpec,
    q_grid: &[f64],
    s_grid: &[f64],
    lambda_t_nm: f64,
) -> Result<PhasematchMap> {
    if q_grid.is_empty() || s_grid.is_empty() {
        return Err(Error::Config("phase-matching map needs non-empty grids".into()));
    }
    let offset = setup.nonlinear_offset()?;
    let omega_t = omega_from_nm(lambda_t_nm);
    let omega_p = pump.center_omega();
    let beta_t = model.beta(omega_t).map_err(|e| leg_error("target", e))?;
    let beta_p = model.beta(omega_p).map_err(|e| leg_error("pump p", e))?;
    let beta_axis = |grid: &[f64], name: &str| -> Result<Vec<f64>> {
        grid.par_iter()
            .map(|&l| model.beta(omega_from_nm(l)).map_err(|e| leg_error(name, e)))
            .collect()
    };
    let beta_q = beta_axis(q_grid, "pump q")?;
    let beta_s = beta_axis(s_grid, "source")?;

    let nq = q_grid.len();
    let cells = nq * s_grid.len();
    let mut delta_kappa = Vec::with_capacity(cells);
    let mut energy = Vec::with_capacity(cells);
    let mut phi = Vec::with_capacity(cells);
    let mut alpha = Vec::with_capacity(cells);
    for (is, &ls) in s_grid.iter().enumerate() {
        let omega_s = omega_from_nm(ls);
        for (iq, &lq) in q_grid.iter().enumerate() {
            let omega_q = omega_from_nm(lq);
            let dk = 0.5 * ((beta_p - beta_q[iq]) + (beta_t - beta_s[is])) + offset;
            let implied_p = omega_q + omega_s - omega_t;
            delta_kappa.push(dk);
            energy.push(implied_p - omega_p);
            phi.push(phasematch_intensity(dk, setup.fibre_length_m));
            alpha.push(pump_envelope(implied_p, pump));
        }
    }
    let zero_mismatch_locus = contour::march(&Field::new(q_grid, s_grid, &delta_kappa), 0.0);
    let energy_locus = contour::march(&Field::new(q_grid, s_grid, &energy), 0.0);
    Ok(PhasematchMap {
        lambda_q_nm: q_grid.to_vec(),
        lambda_s_nm: s_grid.to_vec(),
        lambda_t_nm,
        lambda_p_nm: pump.center_nm,
        fibre_length_m: setup.fibre_length_m,
        delta_kappa,
        energy_mismatch: energy,
        phi,
        alpha,
        zero_mismatch_locus,
        energy_locus,
    })
}

fn leg_error(name: &str, e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{name} leg: {m}")),
        Error::ModelBreakdown(m) => Error::ModelBreakdown(format!("{name} leg: {m}")),
        other => other,
    }
}

/// A contiguous stretch of the energy-conservation locus lying within the
/// tolerance of the zero-mismatch locus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LociContact {
    pub lambda_s_min_nm: f64,
    pub lambda_s_max_nm: f64,
}

impl LociContact {
    pub fn span_nm(&self) -> f64 {
        self.lambda_s_max_nm - self.lambda_s_min_nm
    }
}

/// Where the two loci of `map` meet or run together, measured along the
/// energy-conservation locus. Distances are in grid cells of the map.
pub fn loci_contacts(map: &PhasematchMap, tolerance_cells: f64) -> Vec<LociContact> {
    let cell = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]).abs() / (v.len() - 1) as f64 } else { 1.0 };
    let scale = [cell(&map.lambda_q_nm), cell(&map.lambda_s_nm)];
    let segments: Vec<([f64; 2], [f64; 2])> = map
        .zero_mismatch_locus
        .iter()
        .flat_map(|pl| pl.points.windows(2).map(|w| (w[0], w[1])))
        .collect();
    let near = |p: [f64; 2]| {
        segments
            .iter()
            .any(|(a, b)| contour::point_segment_distance(p, *a, *b, scale) <= tolerance_cells)
    };
    let mut out = Vec::new();
    for line in &map.energy_locus {
        let mut current: Option<LociContact> = None;
        for &p in &line.points {
            if near(p) {
                let c = current.get_or_insert(LociContact { lambda_s_min_nm: p[1], lambda_s_max_nm: p[1] });
                c.lambda_s_min_nm = c.lambda_s_min_nm.min(p[1]);
                c.lambda_s_max_nm = c.lambda_s_max_nm.max(p[1]);
            } else if let Some(c) = current.take() {
                out.push(c);
            }
        }
        out.extend(current);
    }
    out
}

/// Relative tolerance (on the β scale) below which a local extremum of Δκ
/// along the energy-conservation curve counts as a touching intersection.
pub const TANGENCY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IntersectionKind {
    /// Δκ changes sign.
    Crossing,
    /// Δκ touches zero without changing sign (a double root).
    Tangency,
}

/// A point on both loci, located to within one step of the source grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LociIntersection {
    pub lambda_q_nm: f64,
    pub lambda_s_nm: f64,
    pub kind: IntersectionKind,
}

/// Intersections of the zero-mismatch locus with the energy-conservation
/// locus for a fixed pump at its centre wavelength.
///
/// Δκ is evaluated exactly along the energy-conservation curve
/// `ω_q = ω_p + ω_t − ω_s` at each `s_grid` wavelength. Sign changes are
/// crossings; a local minimum of |Δκ| whose parabolic vertex lies within
/// [`TANGENCY_TOLERANCE`] of zero is a tangency.
pub fn loci_intersections(
    model: &DispersionModel,
    setup: &ConversionSetup,
    pump: &PumpSpec,
    lambda_t_nm: f64,
    s_grid: &[f64],
) -> Result<Vec<LociIntersection>> {
    if s_grid.len() < 3 {
        return Err(Error::Config("intersection search needs at least three source points".into()));
    }
    let offset = setup.nonlinear_offset()?;
    let omega_t = omega_from_nm(lambda_t_nm);
    let omega_p = pump.center_omega();
    let beta_p = model.beta(omega_p).map_err(|e| leg_error("pump p", e))?;
    let beta_t = model.beta(omega_t).map_err(|e| leg_error("target", e))?;
    let g = |ls: f64| -> Result<f64> {
        let omega_s = omega_from_nm(ls);
        let omega_q = omega_p + omega_t - omega_s;
        Ok(0.5 * ((beta_p - model.beta(omega_q)?) + (beta_t - model.beta(omega_s)?)) + offset)
    };
    let values: Vec<f64> = s_grid
        .iter()
        .map(|&ls| match g(ls) {
            Ok(v) => Ok(v),
            Err(Error::Domain(_)) | Err(Error::ModelBreakdown(_)) => Ok(f64::NAN),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let tolerance = TANGENCY_TOLERANCE * beta_p.abs();
    let point = |ls: f64, kind| LociIntersection {
        lambda_q_nm: nm_from_omega(omega_p + omega_t - omega_from_nm(ls)),
        lambda_s_nm: ls,
        kind,
    };
    let mut out = Vec::new();
    for i in 0..values.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        if a == 0.0 || (b != 0.0 && a.signum() != b.signum()) {
            let root = roots::bisect(&g, s_grid[i], s_grid[i + 1], 1e-9)?;
            out.push(point(root, IntersectionKind::Crossing));
        }
        if i == 0 {
            continue;
        }
        let prev = values[i - 1];
        if !prev.is_finite() || prev.signum() != a.signum() || a.signum() != b.signum() {
            continue;
        }
        if a.abs() <= prev.abs() && a.abs() < b.abs() {
            // parabola through the three samples, in units of the local step
            let (h0, h1) = (s_grid[i] - s_grid[i - 1], s_grid[i + 1] - s_grid[i]);
            let (d0, d1) = ((a - prev) / h0, (b - a) / h1);
            let curvature = 2.0 * (d1 - d0) / (h0 + h1);
            let slope = d0 + 0.5 * curvature * h0;
            let shift = if curvature != 0.0 { (-slope / curvature).clamp(-h0, h1) } else { 0.0 };
            let vertex = a + slope * shift + 0.5 * curvature * shift * shift;
            if vertex.abs() <= tolerance {
                out.push(point(s_grid[i] + shift, IntersectionKind::Tangency));
            }
        }
    }
    Ok(out)
}

/// Maximum efficiency bound at one source wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub lambda_s_nm: f64,
    /// max over λ_q of Φ·α_p.
    pub efficiency: f64,
    /// λ_q at the maximum, nm.
    pub lambda_q_nm: f64,
    pub phi: f64,
    pub alpha: f64,
    /// The λ_q search window was clipped by the validity domain.
    pub clipped: bool,
}

/// Per-source maximum of Φ(Δκ)·α_p over the tunable pump, target fixed.
pub fn efficiency_envelope(
    model: &DispersionModel,
    setup: &ConversionSetup,
    pump: &PumpSpec,
    lambda_t_nm: f64,
    s_grid: &[f64],
) -> Result<Vec<EnvelopePoint>> {
    if s_grid.is_empty() {
        return Err(Error::Config("envelope needs a non-empty source grid".into()));
    }
    setup.validate()?;
    s_grid
        .par_iter()
        .map(|&ls| envelope_point(model, setup, pump, lambda_t_nm, ls))
        .collect()
}

/// Inner maximisation of [`efficiency_envelope`] for one source wavelength.
///
/// The tunable pump is scanned over ±5 FWHM around the energy-conserving
/// value at a step of FWHM/10. The best scan point and every sign change of
/// Δκ (where Φ = 1) are then refined by golden-section search; the sign
/// changes catch phase-matching peaks narrower than the scan step.
pub fn envelope_point(
    model: &DispersionModel,
    setup: &ConversionSetup,
    pump: &PumpSpec,
    lambda_t_nm: f64,
    lambda_s_nm: f64,
) -> Result<EnvelopePoint> {
    let offset = setup.nonlinear_offset()?;
    let omega_t = omega_from_nm(lambda_t_nm);
    let omega_s = omega_from_nm(lambda_s_nm);
    let beta_t = model.beta(omega_t).map_err(|e| leg_error("target", e))?;
    let beta_s = model.beta(omega_s).map_err(|e| leg_error("source", e))?;
    let length = setup.fibre_length_m;

    let fwhm = pump.fwhm_omega();
    let step = COARSE_STEP_FWHM * fwhm;
    let center = pump.center_omega() + omega_t - omega_s;
    let (w_lo, w_hi) = model.omega_window();
    // both the tunable pump and the implied fixed pump must stay in-window
    let lo_bound = w_lo.max(w_lo + omega_t - omega_s);
    let hi_bound = w_hi.min(w_hi + omega_t - omega_s);
    let half = SEARCH_HALF_WIDTH_FWHM * fwhm;
    let (lo, hi) = ((center - half).max(lo_bound), (center + half).min(hi_bound));
    let mut clipped = lo > center - half || hi < center + half;
    if lo >= hi {
        return Err(Error::Domain(format!(
            "no valid tunable-pump wavelength for source {lambda_s_nm} nm and target {lambda_t_nm} nm"
        )));
    }

    let delta_kappa = |omega_q: f64| -> Result<f64> {
        let omega_p = omega_q + omega_s - omega_t;
        Ok(0.5 * ((model.beta(omega_p)? - model.beta(omega_q)?) + (beta_t - beta_s)) + offset)
    };
    let objective = |omega_q: f64| -> Result<f64> {
        let dk = delta_kappa(omega_q)?;
        Ok(phasematch_intensity(dk, length) * pump_envelope(omega_q + omega_s - omega_t, pump))
    };

    let k_lo = ((lo - center) / step).ceil() as i64;
    let k_hi = ((hi - center) / step).floor() as i64;
    let mut grid: Vec<f64> = Vec::new();
    if lo < center + k_lo as f64 * step {
        grid.push(lo);
    }
    grid.extend((k_lo..=k_hi).map(|k| center + k as f64 * step));
    if hi > center + k_hi as f64 * step {
        grid.push(hi);
    }

    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(grid.len());
    for &w in &grid {
        match delta_kappa(w) {
            Ok(dk) => {
                let v = phasematch_intensity(dk, length) * pump_envelope(w + omega_s - omega_t, pump);
                samples.push((w, dk, v));
            }
            Err(Error::ModelBreakdown(_)) => clipped = true,
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() {
        return Err(Error::ModelBreakdown(format!(
            "model undefined across the tunable-pump window for source {lambda_s_nm} nm"
        )));
    }

    let tol = |w: f64| omega_width_from_nm(REFINE_TOL_NM, nm_from_omega(w));
    let mut best = samples
        .iter()
        .copied()
        .fold((samples[0].0, f64::NEG_INFINITY), |acc, (w, _, v)| if v > acc.1 { (w, v) } else { acc });

    let consider = |best: &mut (f64, f64), a: f64, b: f64| -> Result<()> {
        if b > a {
            let (w, v) = roots::golden_section_max(&objective, a, b, tol(a))?;
            if v > best.1 {
                *best = (w, v);
            }
        }
        Ok(())
    };

    let i_best = samples.iter().position(|s| s.0 == best.0).unwrap_or(0);
    let a = samples[i_best.saturating_sub(1)].0;
    let b = samples[(i_best + 1).min(samples.len() - 1)].0;
    consider(&mut best, a, b)?;

    for pair in samples.windows(2) {
        let ((wa, da, _), (wb, db, _)) = (pair[0], pair[1]);
        if da == 0.0 || da.signum() != db.signum() {
            let root = roots::bisect(&delta_kappa, wa, wb, 1.0)?;
            let v = objective(root)?;
            if v > best.1 {
                best = (root, v);
            }
            // Φ falls to its first null where |Δκ| L / 2 = π
            let slope = ((db - da) / (wb - wa)).abs();
            let half_width = if slope > 0.0 { (2.0 * std::f64::consts::PI / (length * slope)).min(wb - wa) } else { wb - wa };
            consider(&mut best, (root - half_width).max(lo), (root + half_width).min(hi))?;
        }
    }

    let (omega_q, efficiency) = best;
    let dk = delta_kappa(omega_q)?;
    Ok(EnvelopePoint {
        lambda_s_nm,
        efficiency,
        lambda_q_nm: nm_from_omega(omega_q),
        phi: phasematch_intensity(dk, length),
        alpha: pump_envelope(omega_q + omega_s - omega_t, pump),
        clipped,
    })
}

/// Longest contiguous run of grid points with efficiency ≥ `level`, as
/// `(first λ_s, last λ_s)` in nm.
pub fn span_above(points: &[EnvelopePoint], level: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    let mut start: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        let inside = p.efficiency >= level;
        if inside && start.is_none() {
            start = Some(i);
        }
        let end_here = inside && (i + 1 == points.len() || points[i + 1].efficiency < level);
        if end_here {
            let s = start.take().unwrap();
            let run = (points[s].lambda_s_nm, p.lambda_s_nm);
            if best.is_none_or(|b| run.1 - run.0 > b.1 - b.0) {
                best = Some(run);
            }
        } else if !inside {
            start = None;
        }
    }
    best
}

/// Width in nm of [`span_above`], zero when no point reaches `level`.
pub fn span_width_nm(points: &[EnvelopePoint], level: f64) -> f64 {
    span_above(points, level).map_or(0.0, |(a, b)| b - a)
}
