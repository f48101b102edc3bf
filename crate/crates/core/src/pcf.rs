//! Empirical effective-index model of regular hexagonal-lattice photonic
//! crystal fibre and the dispersion quantities derived from it.
//!
//! The fundamental-mode index follows from two fitted normalised parameters,
//! `V` (fixing the fundamental space-filling mode index `n_FSM`) and `W`
//! (fixing `n_eff` relative to `n_FSM`), each a logistic function of
//! `λ/Λ` whose four shape constants are power series in `d/Λ`. The core
//! index is the dispersive silica index at the same wavelength, so the
//! model carries both waveguide and material dispersion.
//!
//! Frequency derivatives of `β(ω) = n_eff(ω) ω / c` are central finite
//! differences. The base step `h` is configurable; each order uses a scaled
//! step (`h`, `10h`, `30h`, `100h` for orders 1..4) so that rounding noise in
//! `β ≈ 10⁷ rad/m` stays well below the derivative being estimated.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data;
use crate::material::SellmeierCoefficients;
use crate::roots;
use crate::units::{omega_from_um, um_from_omega, C};
use crate::{Error, Result};

/// Default base finite-difference step in rad/s.
pub const DEFAULT_DERIVATIVE_STEP: f64 = 1e11;

/// Per-order multipliers applied to the base derivative step.
const STEP_SCALE: [f64; 4] = [1.0, 10.0, 30.0, 100.0];

/// Wavelength resolution of the ZDW bracket scan, µm.
const ZDW_SCAN_STEP_UM: f64 = 1e-3;

/// A PCF design: hole pitch Λ in µm and hole diameter over pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FibreGeometry {
    pitch_um: f64,
    d_over_pitch: f64,
}

impl FibreGeometry {
    pub fn new(pitch_um: f64, d_over_pitch: f64) -> Result<Self> {
        if !(pitch_um.is_finite() && pitch_um > 0.0) {
            return Err(Error::Config(format!("pitch must be positive, got {pitch_um} µm")));
        }
        if !(d_over_pitch > 0.0 && d_over_pitch < 1.0) {
            return Err(Error::Config(format!(
                "d/pitch must lie in (0, 1), got {d_over_pitch}"
            )));
        }
        Ok(Self { pitch_um, d_over_pitch })
    }

    pub fn pitch_um(&self) -> f64 {
        self.pitch_um
    }

    pub fn d_over_pitch(&self) -> f64 {
        self.d_over_pitch
    }
}

impl fmt::Display for FibreGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pitch {} µm, d/pitch {}", self.pitch_um, self.d_over_pitch)
    }
}

/// One fitted parameter (V or W): `P = A1 + A2 / (1 + A3 exp(A4 x))` with
/// `Ai = k_i0 + Σ_j k_ij r^e_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTable {
    /// Rows `k_0j .. k_3j`, columns i = 1..4.
    pub coefficients: [[f64; 4]; 4],
    /// Rows `e_1j .. e_3j`, columns i = 1..4.
    pub exponents: [[f64; 4]; 3],
}

impl FitTable {
    /// The four logistic shape constants at hole ratio `r`.
    pub fn shape(&self, r: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut v = self.coefficients[0][i];
            for j in 0..3 {
                v += self.coefficients[j + 1][i] * r.powf(self.exponents[j][i]);
            }
            *slot = v;
        }
        out
    }

    #[inline]
    fn eval_shape(shape: &[f64; 4], x: f64) -> f64 {
        shape[0] + shape[1] / (1.0 + shape[2] * (shape[3] * x).exp())
    }

    pub fn eval(&self, r: f64, x: f64) -> f64 {
        Self::eval_shape(&self.shape(r), x)
    }
}

/// Published fit range of the empirical relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityRect {
    pub d_over_pitch: (f64, f64),
    pub lambda_over_pitch: (f64, f64),
}

/// V and W fit tables plus their validity rectangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalFitTables {
    pub v: FitTable,
    pub w: FitTable,
    pub validity: ValidityRect,
}

#[derive(Deserialize)]
struct FitsFile {
    format: String,
    validity: ValidityEntry,
    v: FitTable,
    w: FitTable,
}

#[derive(Deserialize)]
struct ValidityEntry {
    d_over_pitch: [f64; 2],
    lambda_over_pitch: [f64; 2],
}

impl EmpiricalFitTables {
    pub fn bundled() -> Self {
        Self::from_data_str(data::PCF_EMPIRICAL_FITS).expect("bundled fit tables are valid")
    }

    /// Parses a `pcf_empirical_fits`-format file. The shape is enforced by
    /// the fixed-size arrays; the checksum is verified before parsing.
    pub fn from_data_str(text: &str) -> Result<Self> {
        let file: FitsFile = data::parse_toml(text, "PCF fit tables")?;
        if file.format != "pcf-empirical-vw/1" {
            return Err(Error::Data(format!("unsupported fit format {:?}", file.format)));
        }
        let [r_lo, r_hi] = file.validity.d_over_pitch;
        let [x_lo, x_hi] = file.validity.lambda_over_pitch;
        if !(r_lo < r_hi && x_lo < x_hi && r_lo >= 0.0 && x_lo >= 0.0) {
            return Err(Error::Data("empty validity rectangle".into()));
        }
        Ok(Self {
            v: file.v,
            w: file.w,
            validity: ValidityRect {
                d_over_pitch: (r_lo, r_hi),
                lambda_over_pitch: (x_lo, x_hi),
            },
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_data_str(&std::fs::read_to_string(path)?)
    }

    /// Whether `(geometry, λ)` lies inside the published fit rectangle.
    pub fn check_validity(&self, geometry: &FibreGeometry, lambda_um: f64) -> Validity {
        let (r_lo, r_hi) = self.validity.d_over_pitch;
        let r = geometry.d_over_pitch;
        if !(r >= r_lo && r <= r_hi) {
            return Validity::Invalid(format!(
                "d/pitch = {r} outside the fitted range [{r_lo}, {r_hi}]"
            ));
        }
        let (x_lo, x_hi) = self.validity.lambda_over_pitch;
        let x = lambda_um / geometry.pitch_um;
        if !(x >= x_lo && x <= x_hi) {
            return Validity::Invalid(format!(
                "lambda/pitch = {x:.4} outside the fitted range [{x_lo}, {x_hi}]"
            ));
        }
        Validity::Valid
    }
}

/// Outcome of a validity check; the reason names the violated bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(String),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            Validity::Valid => None,
            Validity::Invalid(r) => Some(r),
        }
    }
}

/// Validity of `(geometry, λ)` against the bundled fit range.
pub fn check_validity(geometry: &FibreGeometry, lambda_um: f64) -> Validity {
    EmpiricalFitTables::bundled().check_validity(geometry, lambda_um)
}

/// Zero-dispersion wavelength found by [`DispersionModel::find_zdw`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Zdw {
    /// Shortest-wavelength root of β₂ in the window, µm.
    pub lambda_um: f64,
    /// Number of β₂ sign changes seen in the scanned window.
    pub root_count: usize,
    /// Set when the scan stopped early at a model breakdown, µm.
    pub scan_truncated_at_um: Option<f64>,
}

/// One row of a dispersion profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionSample {
    pub lambda_um: f64,
    pub n_eff: f64,
    /// rad/m
    pub beta: f64,
    /// s/m
    pub beta1: f64,
    /// s²/m
    pub beta2: f64,
    /// m/s
    pub group_velocity: f64,
}

/// Evaluator for `n_eff`, `β` and its frequency derivatives for one fibre.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionModel {
    geometry: FibreGeometry,
    material: SellmeierCoefficients,
    fits: EmpiricalFitTables,
    derivative_step: f64,
    v_shape: [f64; 4],
    w_shape: [f64; 4],
    lambda_window: (f64, f64),
}

impl DispersionModel {
    /// Model with the bundled silica and fit data and the default step.
    /// Fails if `d/Λ` lies outside the fitted range.
    pub fn new(geometry: FibreGeometry) -> Result<Self> {
        Self::with_data(
            geometry,
            SellmeierCoefficients::fused_silica(),
            EmpiricalFitTables::bundled(),
            DEFAULT_DERIVATIVE_STEP,
        )
    }

    pub fn with_data(
        geometry: FibreGeometry,
        material: SellmeierCoefficients,
        fits: EmpiricalFitTables,
        derivative_step: f64,
    ) -> Result<Self> {
        let (r_lo, r_hi) = fits.validity.d_over_pitch;
        if !(geometry.d_over_pitch >= r_lo && geometry.d_over_pitch <= r_hi) {
            return Err(Error::Domain(format!(
                "d/pitch = {} outside the fitted range [{r_lo}, {r_hi}]",
                geometry.d_over_pitch
            )));
        }
        let (x_lo, x_hi) = fits.validity.lambda_over_pitch;
        let (m_lo, m_hi) = material.window();
        let lo = (x_lo * geometry.pitch_um).max(m_lo);
        let hi = (x_hi * geometry.pitch_um).min(m_hi);
        if lo >= hi {
            return Err(Error::Domain(format!(
                "no wavelength satisfies both the fit range and the material window for {geometry}"
            )));
        }
        let v_shape = fits.v.shape(geometry.d_over_pitch);
        let w_shape = fits.w.shape(geometry.d_over_pitch);
        let model = Self {
            geometry,
            material,
            fits,
            derivative_step: DEFAULT_DERIVATIVE_STEP,
            v_shape,
            w_shape,
            lambda_window: (lo, hi),
        };
        model.with_derivative_step(derivative_step)
    }

    /// Replaces the base finite-difference step (rad/s).
    pub fn with_derivative_step(mut self, step: f64) -> Result<Self> {
        let (w_lo, w_hi) = self.omega_window();
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("derivative step must be positive, got {step}")));
        }
        if STEP_SCALE[3] * step * 100.0 > w_hi - w_lo {
            return Err(Error::Config(format!(
                "derivative step {step} rad/s is too coarse for the {:.3e} rad/s validity window",
                w_hi - w_lo
            )));
        }
        self.derivative_step = step;
        Ok(self)
    }

    pub fn geometry(&self) -> FibreGeometry {
        self.geometry
    }

    pub fn material(&self) -> &SellmeierCoefficients {
        &self.material
    }

    pub fn fits(&self) -> &EmpiricalFitTables {
        &self.fits
    }

    pub fn derivative_step(&self) -> f64 {
        self.derivative_step
    }

    /// Step used for the order-`n` stencil.
    pub fn stencil_step(&self, n: usize) -> f64 {
        STEP_SCALE[n.clamp(1, 4) - 1] * self.derivative_step
    }

    /// Same model for a different geometry, keeping data and step.
    pub fn with_geometry(&self, geometry: FibreGeometry) -> Result<Self> {
        Self::with_data(geometry, self.material.clone(), self.fits.clone(), self.derivative_step)
    }

    /// Wavelength range (µm) inside both the fit rectangle and the material
    /// window for this geometry.
    pub fn wavelength_window(&self) -> (f64, f64) {
        self.lambda_window
    }

    /// [`Self::wavelength_window`] in angular frequency, ascending.
    pub fn omega_window(&self) -> (f64, f64) {
        (omega_from_um(self.lambda_window.1), omega_from_um(self.lambda_window.0))
    }

    pub fn check_validity(&self, lambda_um: f64) -> Validity {
        match self.fits.check_validity(&self.geometry, lambda_um) {
            Validity::Valid if !self.material.contains(lambda_um) => Validity::Invalid(format!(
                "lambda = {lambda_um} µm outside the material window [{}, {}] µm",
                self.material.window().0,
                self.material.window().1
            )),
            v => v,
        }
    }

    fn gate(&self, lambda_um: f64) -> Result<()> {
        match self.check_validity(lambda_um) {
            Validity::Valid => Ok(()),
            Validity::Invalid(reason) => Err(Error::Domain(format!("{} at {lambda_um} µm: {reason}", self.geometry))),
        }
    }

    /// Fitted (V, W) at λ (µm).
    pub fn fit_parameters(&self, lambda_um: f64) -> Result<(f64, f64)> {
        self.gate(lambda_um)?;
        let x = lambda_um / self.geometry.pitch_um;
        Ok((
            FitTable::eval_shape(&self.v_shape, x),
            FitTable::eval_shape(&self.w_shape, x),
        ))
    }

    /// Returns `(n_core, n_FSM, n_eff)`.
    fn indices(&self, lambda_um: f64) -> Result<(f64, f64, f64)> {
        let (v, w) = self.fit_parameters(lambda_um)?;
        let n_core = self.material.refractive_index(lambda_um)?;
        let k_a = 2.0 * std::f64::consts::PI / lambda_um * self.geometry.pitch_um / 3f64.sqrt();
        let n_fsm2 = n_core * n_core - (v / k_a).powi(2);
        if n_fsm2 <= 0.0 {
            return Err(Error::ModelBreakdown(format!(
                "negative FSM radicand {n_fsm2:.3e} at {lambda_um} µm for {}",
                self.geometry
            )));
        }
        if w <= 0.0 || w > v {
            return Err(Error::ModelBreakdown(format!(
                "fitted W = {w:.4} outside (0, V = {v:.4}] at {lambda_um} µm for {}",
                self.geometry
            )));
        }
        let n_eff2 = n_fsm2 + (w / k_a).powi(2);
        Ok((n_core, n_fsm2.sqrt(), n_eff2.sqrt()))
    }

    /// Index of the fundamental space-filling mode of the cladding.
    pub fn fsm_index(&self, lambda_um: f64) -> Result<f64> {
        self.indices(lambda_um).map(|(_, n_fsm, _)| n_fsm)
    }

    /// Fundamental-mode effective index at λ (µm).
    pub fn effective_index(&self, lambda_um: f64) -> Result<f64> {
        self.indices(lambda_um).map(|(_, _, n)| n)
    }

    /// Propagation constant β = n_eff ω / c in rad/m.
    pub fn beta(&self, omega: f64) -> Result<f64> {
        let n = self.effective_index(um_from_omega(omega))?;
        Ok(n * omega / C)
    }

    pub fn beta_at_um(&self, lambda_um: f64) -> Result<f64> {
        self.beta(omega_from_um(lambda_um))
    }

    /// Order-`n` frequency derivative of β at `omega`, n in 1..=4.
    /// Units: s^n / m.
    pub fn beta_n(&self, omega: f64, n: usize) -> Result<f64> {
        if !(1..=4).contains(&n) {
            return Err(Error::Config(format!("derivative order must be 1..=4, got {n}")));
        }
        let h = self.stencil_step(n);
        let (w_lo, w_hi) = self.omega_window();
        if omega - 2.0 * h < w_lo {
            return Err(Error::Domain(format!(
                "order-{n} stencil at {:.4} µm crosses the long-wavelength edge {:.4} µm",
                um_from_omega(omega),
                self.lambda_window.1
            )));
        }
        if omega + 2.0 * h > w_hi {
            return Err(Error::Domain(format!(
                "order-{n} stencil at {:.4} µm crosses the short-wavelength edge {:.4} µm",
                um_from_omega(omega),
                self.lambda_window.0
            )));
        }
        let fm2 = self.beta(omega - 2.0 * h)?;
        let fm1 = self.beta(omega - h)?;
        let fp1 = self.beta(omega + h)?;
        let fp2 = self.beta(omega + 2.0 * h)?;
        let d = match n {
            1 => (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h),
            2 => {
                let f0 = self.beta(omega)?;
                (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h)
            }
            3 => (fp2 - 2.0 * fp1 + 2.0 * fm1 - fm2) / (2.0 * h * h * h),
            _ => {
                let f0 = self.beta(omega)?;
                (fp2 - 4.0 * fp1 + 6.0 * f0 - 4.0 * fm1 + fm2) / (h * h * h * h)
            }
        };
        Ok(d)
    }

    /// v_g = 1/β₁ in m/s.
    pub fn group_velocity(&self, omega: f64) -> Result<f64> {
        Ok(1.0 / self.beta_n(omega, 1)?)
    }

    /// β₂ at a wavelength in µm.
    pub fn beta2_at_um(&self, lambda_um: f64) -> Result<f64> {
        self.beta_n(omega_from_um(lambda_um), 2)
    }

    /// Wavelength range (µm) where the order-`n` stencil stays in-window.
    pub fn stencil_window(&self, n: usize) -> (f64, f64) {
        let (w_lo, w_hi) = self.omega_window();
        // small extra margin keeps the stencil clear of rounding at the edge
        let margin = 2.0 * self.stencil_step(n) * (1.0 + 1e-9);
        (um_from_omega(w_hi - margin), um_from_omega(w_lo + margin))
    }

    /// First (shortest-wavelength) zero of β₂ in `window` (µm), intersected
    /// with the model's stencil-safe window.
    ///
    /// The window is scanned at 1 nm; the first sign change is refined by
    /// bisection. A model breakdown part-way through the scan truncates it;
    /// if that happens before any root is seen the breakdown is returned.
    pub fn find_zdw(&self, window: (f64, f64)) -> Result<Zdw> {
        let (s_lo, s_hi) = self.stencil_window(2);
        let lo = window.0.max(s_lo);
        let hi = window.1.min(s_hi);
        if !(window.0 < window.1) {
            return Err(Error::Config(format!("empty ZDW search window [{}, {}]", window.0, window.1)));
        }
        if lo >= hi {
            return Err(Error::Domain(format!(
                "ZDW search window [{}, {}] µm does not overlap the valid window [{s_lo:.4}, {s_hi:.4}] µm for {}",
                window.0, window.1, self.geometry
            )));
        }
        let steps = ((hi - lo) / ZDW_SCAN_STEP_UM).ceil().max(1.0) as usize;
        let mut lambdas = Vec::with_capacity(steps + 1);
        let mut values = Vec::with_capacity(steps + 1);
        let mut truncated = None;
        for i in 0..=steps {
            let l = lo + (hi - lo) * i as f64 / steps as f64;
            match self.beta2_at_um(l) {
                Ok(b2) => {
                    lambdas.push(l);
                    values.push(b2);
                }
                Err(e @ Error::ModelBreakdown(_)) => {
                    if values.is_empty() {
                        return Err(e);
                    }
                    truncated = Some(l);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let brackets = roots::sign_changes(&values);
        let Some(&first) = brackets.first() else {
            return Err(match truncated {
                Some(l) => Error::ModelBreakdown(format!(
                    "model breaks down at {l:.4} µm before any zero of beta2 for {}",
                    self.geometry
                )),
                None => Error::NotFound(format!(
                    "beta2 has no sign change in [{lo:.4}, {hi:.4}] µm for {}",
                    self.geometry
                )),
            });
        };
        let root = roots::bisect(|l| self.beta2_at_um(l), lambdas[first], lambdas[first + 1], 1e-9)?;
        Ok(Zdw {
            lambda_um: root,
            root_count: brackets.len(),
            scan_truncated_at_um: truncated,
        })
    }

    /// λ, n_eff, β, β₁, β₂ and v_g at each wavelength (µm).
    pub fn dispersion_profile(&self, lambdas_um: &[f64]) -> Result<Vec<DispersionSample>> {
        lambdas_um
            .iter()
            .map(|&l| {
                let omega = omega_from_um(l);
                let beta1 = self.beta_n(omega, 1)?;
                Ok(DispersionSample {
                    lambda_um: l,
                    n_eff: self.effective_index(l)?,
                    beta: self.beta(omega)?,
                    beta1,
                    beta2: self.beta_n(omega, 2)?,
                    group_velocity: 1.0 / beta1,
                })
            })
            .collect()
    }
}
