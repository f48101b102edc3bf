//! Physical constants and wavelength/frequency conversions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of a vacuum wavelength in micrometres.
#[inline]
pub fn omega_from_um(lambda_um: f64) -> f64 {
    2.0 * PI * C / (lambda_um * 1e-6)
}

/// Vacuum wavelength in micrometres of an angular frequency (rad/s).
#[inline]
pub fn um_from_omega(omega: f64) -> f64 {
    2.0 * PI * C / omega * 1e6
}

/// Angular frequency (rad/s) of a vacuum wavelength in nanometres.
#[inline]
pub fn omega_from_nm(lambda_nm: f64) -> f64 {
    2.0 * PI * C / (lambda_nm * 1e-9)
}

/// Vacuum wavelength in nanometres of an angular frequency (rad/s).
#[inline]
pub fn nm_from_omega(omega: f64) -> f64 {
    2.0 * PI * C / omega * 1e9
}

/// Angular-frequency width (rad/s) of a small wavelength interval `width_nm`
/// centred on `center_nm`.
#[inline]
pub fn omega_width_from_nm(width_nm: f64, center_nm: f64) -> f64 {
    2.0 * PI * C * (width_nm * 1e-9) / (center_nm * 1e-9).powi(2)
}

/// Inclusive, evenly spaced axis `start, start + step, ..., stop`.
///
/// The last point is `stop` whenever `(stop - start) / step` is within
/// `1e-9` of an integer; otherwise the axis ends at the last point below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LinearGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    /// A single-point axis.
    pub fn single(value: f64) -> Self {
        Self { start: value, stop: value, step: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        if self.step <= 0.0 {
            return Err(Error::Config(format!("grid step must be positive, got {}", self.step)));
        }
        if self.stop < self.start {
            return Err(Error::Config(format!(
                "empty grid: stop {} is below start {}",
                self.stop, self.start
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        (((self.stop - self.start) / self.step) + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Point `i`, computed as `start + i * step` so that refining the step
    /// reproduces coarse-grid coordinates exactly where they coincide.
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = LinearGrid::new(0.8, 3.0, 0.02).unwrap();
        assert_eq!(g.len(), 111);
        assert!((g.points()[110] - 3.0).abs() < 1e-12);
        assert_eq!(LinearGrid::single(1.78).points(), vec![1.78]);
        assert_eq!(LinearGrid::new(0.0, 1.05, 0.5).unwrap().len(), 3);
    }

    #[test]
    fn grid_rejects_empty_or_bad_step() {
        assert!(LinearGrid::new(1.0, 0.5, 0.1).is_err());
        assert!(LinearGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(LinearGrid::new(0.0, f64::NAN, 0.1).is_err());
    }

    #[test]
    fn conversions_round_trip() {
        for &l in &[0.21, 0.794, 1.55, 6.7] {
            let w = omega_from_um(l);
            assert!((um_from_omega(w) - l).abs() < 1e-14 * l);
            assert!((nm_from_omega(omega_from_nm(l * 1e3)) - l * 1e3).abs() < 1e-10);
        }
    }

    #[test]
    fn width_matches_finite_difference() {
        let w = omega_width_from_nm(0.01, 1550.0);
        let fd = omega_from_nm(1549.995) - omega_from_nm(1550.005);
        assert!((w - fd).abs() / fd < 1e-8);
    }
}
