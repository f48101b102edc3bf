//! Fixed-pump selection for a target wavelength and its sensitivity to
//! fabrication errors in pitch or hole ratio.
//!
//! With `q` and `s` degenerate at `ω_m = (ω_p + ω_t)/2`, phase matching
//! reduces to the scalar equation
//! `f(ω_p) = β(ω_p) + β(ω_t) − 2β(ω_m) = 0`. It always has the double root
//! `ω_p = ω_t`, which is excluded; the nontrivial root places `ω_m` near the
//! zero-dispersion point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fwm::{self, ConversionSetup, EnvelopePoint, PumpSpec, DEFAULT_ZDW_WINDOW_UM};
use crate::pcf::{DispersionModel, FibreGeometry};
use crate::roots;
use crate::units::{nm_from_omega, omega_from_nm, omega_from_um, omega_width_from_nm};
use crate::{Error, Result};

/// Wavelength step of the bracketing scan, nm.
pub const PUMP_SCAN_STEP_NM: f64 = 1.0;

/// Half-width of the excluded neighbourhood of the trivial root, nm.
pub const TRIVIAL_EXCLUSION_NM: f64 = 0.5;

/// Envelope level defining the summary bandwidth.
pub const SUMMARY_LEVEL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Pitch,
    Ratio,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Pitch => "pitch",
            Axis::Ratio => "ratio",
        })
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pitch" => Ok(Axis::Pitch),
            "ratio" => Ok(Axis::Ratio),
            other => Err(Error::Config(format!("unknown perturbation axis '{other}' (expected pitch or ratio)"))),
        }
    }
}

/// Signed relative change of one geometry parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub axis: Axis,
    pub fraction: f64,
}

impl Perturbation {
    pub fn new(axis: Axis, fraction: f64) -> Result<Self> {
        let p = Self { axis, fraction };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fraction.abs() < 0.1) {
            return Err(Error::Config(format!(
                "perturbation fraction must satisfy |f| < 0.1, got {}",
                self.fraction
            )));
        }
        Ok(())
    }

    pub fn apply(&self, geometry: FibreGeometry) -> Result<FibreGeometry> {
        self.validate()?;
        let k = 1.0 + self.fraction;
        match self.axis {
            Axis::Pitch => FibreGeometry::new(geometry.pitch_um() * k, geometry.d_over_pitch()),
            Axis::Ratio => FibreGeometry::new(geometry.pitch_um(), geometry.d_over_pitch() * k),
        }
    }
}

/// Result of [`pump_for_target`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PumpSolution {
    pub lambda_p_nm: f64,
    pub omega_p: f64,
    /// Degeneracy wavelength `2πc / ((ω_p + ω_t)/2)`, nm.
    pub degeneracy_nm: f64,
    /// `f(ω_p)`, rad/m.
    pub residual: f64,
    /// `|β(ω_p)|`, the scale the residual is judged against.
    pub beta_scale: f64,
    /// The root was bracketed by the outermost scan points.
    pub at_edge: bool,
}

/// `f(ω_p) = β(ω_p) + β(ω_t) − 2β((ω_p + ω_t)/2)`.
pub fn degeneracy_mismatch<F>(beta: F, omega_p: f64, omega_t: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mid = 0.5 * (omega_p + omega_t);
    let b_mid = beta(mid)?;
    Ok((beta(omega_p)? - b_mid) + (beta(omega_t)? - b_mid))
}

/// The fixed-pump wavelength phase-matching degenerate conversion to
/// `lambda_t_nm`.
///
/// Of several nontrivial roots, the one whose degeneracy point lies closest
/// to the first zero-dispersion wavelength is returned.
pub fn pump_for_target(model: &DispersionModel, lambda_t_nm: f64) -> Result<PumpSolution> {
    let omega_t = omega_from_nm(lambda_t_nm);
    model.beta(omega_t).map_err(|e| match e {
        Error::Domain(m) => Error::Domain(format!("target leg: {m}")),
        other => other,
    })?;
    let zdw = model.find_zdw(DEFAULT_ZDW_WINDOW_UM)?;
    let (lo_um, hi_um) = model.wavelength_window();
    solve_pump(|w| model.beta(w), (lo_um * 1e3, hi_um * 1e3), lambda_t_nm, omega_from_um(zdw.lambda_um))
}

/// [`pump_for_target`] for an arbitrary propagation constant `beta(ω)` valid
/// on `window_nm`, choosing the root whose degeneracy frequency is nearest
/// `reference_omega`.
pub fn solve_pump<F>(beta: F, window_nm: (f64, f64), lambda_t_nm: f64, reference_omega: f64) -> Result<PumpSolution>
where
    F: Fn(f64) -> Result<f64>,
{
    let (lo, hi) = window_nm;
    if !(lo < hi) || !(lambda_t_nm > lo && lambda_t_nm < hi) {
        return Err(Error::Domain(format!(
            "target {lambda_t_nm} nm outside the pump search window [{lo}, {hi}] nm"
        )));
    }
    let omega_t = omega_from_nm(lambda_t_nm);
    let exclusion = omega_width_from_nm(TRIVIAL_EXCLUSION_NM, lambda_t_nm);
    let f = |w: f64| degeneracy_mismatch(&beta, w, omega_t);

    let first = (lo / PUMP_SCAN_STEP_NM).ceil() as i64;
    let last = (hi / PUMP_SCAN_STEP_NM).floor() as i64;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for k in first..=last {
        let w = omega_from_nm(k as f64 * PUMP_SCAN_STEP_NM);
        if (w - omega_t).abs() < exclusion {
            samples.push((w, f64::NAN));
            continue;
        }
        let v = match f(w) {
            Ok(v) => v,
            Err(Error::ModelBreakdown(_)) | Err(Error::Domain(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        samples.push((w, v));
    }

    let mut best: Option<(f64, usize)> = None;
    for i in 0..samples.len().saturating_sub(1) {
        let ((wa, fa), (wb, fb)) = (samples[i], samples[i + 1]);
        if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() && fa != 0.0 {
            continue;
        }
        // tolerance at the resolution of f64 near ω
        let root = roots::bisect(&f, wa, wb, 4.0 * f64::EPSILON * wa.abs())?;
        let distance = (0.5 * (root + omega_t) - reference_omega).abs();
        if best.is_none_or(|(r, _)| distance < (0.5 * (r + omega_t) - reference_omega).abs()) {
            best = Some((root, i));
        }
    }
    let (omega_p, i) = best.ok_or_else(|| {
        Error::NotFound(format!("no nontrivial pump root for target {lambda_t_nm} nm in [{lo}, {hi}] nm"))
    })?;
    Ok(PumpSolution {
        lambda_p_nm: nm_from_omega(omega_p),
        omega_p,
        degeneracy_nm: nm_from_omega(0.5 * (omega_p + omega_t)),
        residual: f(omega_p)?,
        beta_scale: beta(omega_p)?.abs(),
        at_edge: i == 0 || i + 2 == samples.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveStatus {
    Ok,
    Edge,
    NoRoot,
    InvalidDomain,
}

impl CurveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveStatus::Ok => "ok",
            CurveStatus::Edge => "edge",
            CurveStatus::NoRoot => "no-root",
            CurveStatus::InvalidDomain => "invalid-domain",
        }
    }
}

/// One point of [`compensation_curve`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub axis: Axis,
    pub fraction: f64,
    pub lambda_p_nm: Option<f64>,
    pub delta_lambda_p_nm: Option<f64>,
    pub status: CurveStatus,
    pub message: Option<String>,
}

/// Pump wavelength and its shift from nominal for each perturbation fraction.
pub fn compensation_curve(
    model: &DispersionModel,
    axis: Axis,
    fractions: &[f64],
    lambda_t_nm: f64,
) -> Result<Vec<CurvePoint>> {
    for &f in fractions {
        Perturbation::new(axis, f)?;
    }
    let nominal = pump_for_target(model, lambda_t_nm)?;
    Ok(fractions
        .par_iter()
        .map(|&fraction| {
            let solved = Perturbation { axis, fraction }
                .apply(model.geometry())
                .and_then(|g| model.with_geometry(g))
                .and_then(|m| pump_for_target(&m, lambda_t_nm));
            match solved {
                Ok(s) => CurvePoint {
                    axis,
                    fraction,
                    lambda_p_nm: Some(s.lambda_p_nm),
                    delta_lambda_p_nm: Some(s.lambda_p_nm - nominal.lambda_p_nm),
                    status: if s.at_edge { CurveStatus::Edge } else { CurveStatus::Ok },
                    message: None,
                },
                Err(e) => CurvePoint {
                    axis,
                    fraction,
                    lambda_p_nm: None,
                    delta_lambda_p_nm: None,
                    status: if matches!(e, Error::NotFound(_)) { CurveStatus::NoRoot } else { CurveStatus::InvalidDomain },
                    message: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Result of [`perturbed_envelope`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedEnvelope {
    pub perturbation: Perturbation,
    pub geometry: FibreGeometry,
    pub pump: PumpSpec,
    pub pump_solution: PumpSolution,
    pub points: Vec<EnvelopePoint>,
    /// Longest contiguous source span with efficiency ≥ 0.5, nm.
    pub summary_bandwidth_nm: f64,
}

/// Efficiency envelope of the perturbed fibre with its own re-solved pump.
pub fn perturbed_envelope(
    model: &DispersionModel,
    perturbation: Perturbation,
    setup: &ConversionSetup,
    lambda_t_nm: f64,
    pump_fwhm_nm: f64,
    s_grid: &[f64],
) -> Result<PerturbedEnvelope> {
    let geometry = perturbation.apply(model.geometry())?;
    let perturbed = model.with_geometry(geometry)?;
    let solution = pump_for_target(&perturbed, lambda_t_nm)?;
    let pump = PumpSpec::new(solution.lambda_p_nm, pump_fwhm_nm)?;
    let points = fwm::efficiency_envelope(&perturbed, setup, &pump, lambda_t_nm, s_grid)?;
    let summary_bandwidth_nm = fwm::span_width_nm(&points, SUMMARY_LEVEL);
    Ok(PerturbedEnvelope { perturbation, geometry, pump, pump_solution: solution, points, summary_bandwidth_nm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(pitch: f64, ratio: f64) -> DispersionModel {
        DispersionModel::new(FibreGeometry::new(pitch, ratio).unwrap()).unwrap()
    }

    #[test]
    fn trivial_root_is_zero_and_excluded() {
        let m = model(1.78, 0.437);
        let wt = omega_from_nm(1550.0);
        assert_eq!(degeneracy_mismatch(|w| m.beta(w), wt, wt).unwrap(), 0.0);
        let s = pump_for_target(&m, 1550.0).unwrap();
        assert!((s.omega_p - wt).abs() > omega_width_from_nm(PUMP_SCAN_STEP_NM, 1550.0));
    }

    #[test]
    fn odd_dispersion_mirrors_target() {
        let w0 = omega_from_nm(900.0);
        let beta = |w: f64| -> Result<f64> {
            let x = w - w0;
            Ok(6.0e6 + 4.9e-9 * x + 3.0e-41 / 6.0 * x.powi(3))
        };
        let s = solve_pump(beta, (400.0, 2000.0), 1550.0, w0).unwrap();
        let expected = 2.0 * w0 - omega_from_nm(1550.0);
        assert!(((s.omega_p - expected) / expected).abs() < 1e-12, "{} vs {}", s.omega_p, expected);
        assert!((s.degeneracy_nm - 900.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_design_root_is_a_root() {
        let m = model(1.78, 0.437);
        let s = pump_for_target(&m, 1550.0).unwrap();
        assert!(s.residual.abs() <= 1e-10 * s.beta_scale);
        assert!(!s.at_edge);
        assert!(s.lambda_p_nm > 600.0 && s.lambda_p_nm < 700.0);
        assert!((s.lambda_p_nm - 637.318601168874).abs() < 1e-9);
    }

    #[test]
    fn perturbation_bounds() {
        assert!(Perturbation::new(Axis::Pitch, 0.1).is_err());
        assert!(Perturbation::new(Axis::Ratio, -0.099).is_ok());
        let g = Perturbation::new(Axis::Pitch, 0.01).unwrap().apply(FibreGeometry::new(2.0, 0.5).unwrap()).unwrap();
        assert!((g.pitch_um() - 2.02).abs() < 1e-12);
        assert_eq!(g.d_over_pitch(), 0.5);
    }

    #[test]
    fn zero_fraction_has_zero_shift() {
        let m = model(1.78, 0.437);
        let c = compensation_curve(&m, Axis::Pitch, &[0.0], 1550.0).unwrap();
        assert_eq!(c[0].delta_lambda_p_nm, Some(0.0));
    }

    #[test]
    fn curve_matches_direct_solve() {
        let m = model(1.78, 0.437);
        let c = compensation_curve(&m, Axis::Ratio, &[0.005], 1550.0).unwrap();
        let g = Perturbation::new(Axis::Ratio, 0.005).unwrap().apply(m.geometry()).unwrap();
        let direct = pump_for_target(&m.with_geometry(g).unwrap(), 1550.0).unwrap();
        assert_eq!(c[0].lambda_p_nm, Some(direct.lambda_p_nm));
    }

    #[test]
    fn shift_is_continuous_through_zero() {
        let m = model(1.78, 0.437);
        let fractions: Vec<f64> = (-10..=10).map(|k| k as f64 * 0.001).collect();
        let c = compensation_curve(&m, Axis::Pitch, &fractions, 1550.0).unwrap();
        let d: Vec<f64> = c.iter().map(|p| p.delta_lambda_p_nm.unwrap()).collect();
        for w in d.windows(2) {
            assert!((w[1] - w[0]).abs() < 0.2, "{d:?}");
        }
        for (f, v) in fractions.iter().zip(&d) {
            if *f != 0.0 {
                assert_eq!(f.signum(), v.signum(), "{d:?}");
            }
        }
    }

    #[test]
    fn pitch_and_ratio_curves_differ() {
        let m = model(1.78, 0.437);
        let p = compensation_curve(&m, Axis::Pitch, &[-0.01, 0.01], 1550.0).unwrap();
        let r = compensation_curve(&m, Axis::Ratio, &[-0.01, 0.01], 1550.0).unwrap();
        assert_ne!(p[0].lambda_p_nm, r[0].lambda_p_nm);
        assert_ne!(p[1].lambda_p_nm, r[1].lambda_p_nm);
    }

    #[test]
    fn failed_points_do_not_abort_curve() {
        let m = model(1.78, 0.437);
        let c = compensation_curve(&m, Axis::Ratio, &[0.0, -0.099], 1550.0).unwrap();
        assert_eq!(c[0].status, CurveStatus::Ok);
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn no_zdw_is_not_found() {
        // a large-core fibre whose first ZDW lies beyond the search window
        let m = model(3.0, 0.25);
        match pump_for_target(&m, 1550.0) {
            Err(Error::NotFound(_)) | Ok(_) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
