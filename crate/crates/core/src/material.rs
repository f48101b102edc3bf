//! Refractive index of the fibre glass from a three-term Sellmeier model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data;
use crate::{Error, Result};

/// Three-term Sellmeier coefficients with the wavelength window in which the
/// fit is trusted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SellmeierCoefficients {
    name: String,
    /// Dimensionless oscillator strengths.
    b: [f64; 3],
    /// Resonance wavelengths squared, µm².
    c: [f64; 3],
    /// Transparency window, µm.
    window: (f64, f64),
}

#[derive(Deserialize)]
struct SellmeierFile {
    format: String,
    name: String,
    window: WindowEntry,
    term: Vec<TermEntry>,
}

#[derive(Deserialize)]
struct WindowEntry {
    min_um: f64,
    max_um: f64,
}

#[derive(Deserialize)]
struct TermEntry {
    b: f64,
    c_um2: f64,
}

impl SellmeierCoefficients {
    pub fn new(name: impl Into<String>, b: [f64; 3], c: [f64; 3], window: (f64, f64)) -> Result<Self> {
        if b.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("Sellmeier b coefficients must be finite and non-negative".into()));
        }
        if c.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Config("Sellmeier c coefficients must be finite and positive".into()));
        }
        if c[0] == c[1] || c[0] == c[2] || c[1] == c[2] {
            return Err(Error::Config("Sellmeier c coefficients must be pairwise distinct".into()));
        }
        if !(window.0 > 0.0 && window.1 > window.0) {
            return Err(Error::Config(format!(
                "invalid Sellmeier window [{}, {}] µm",
                window.0, window.1
            )));
        }
        Ok(Self { name: name.into(), b, c, window })
    }

    /// The bundled fused-silica data.
    pub fn fused_silica() -> Self {
        Self::from_data_str(data::SILICA_SELLMEIER).expect("bundled silica data is valid")
    }

    /// Parses a `silica_sellmeier`-format file, verifying its checksum.
    pub fn from_data_str(text: &str) -> Result<Self> {
        let file: SellmeierFile = data::parse_toml(text, "Sellmeier data")?;
        if file.format != "sellmeier-3/1" {
            return Err(Error::Data(format!("unsupported Sellmeier format {:?}", file.format)));
        }
        if file.term.len() != 3 {
            return Err(Error::Data(format!(
                "expected 3 Sellmeier terms, found {}",
                file.term.len()
            )));
        }
        let b = [file.term[0].b, file.term[1].b, file.term[2].b];
        let c = [file.term[0].c_um2, file.term[1].c_um2, file.term[2].c_um2];
        Self::new(file.name, b, c, (file.window.min_um, file.window.max_um))
            .map_err(|e| Error::Data(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_data_str(&std::fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn b(&self) -> [f64; 3] {
        self.b
    }

    pub fn c(&self) -> [f64; 3] {
        self.c
    }

    /// Transparency window in µm.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn contains(&self, lambda_um: f64) -> bool {
        lambda_um >= self.window.0 && lambda_um <= self.window.1
    }

    /// n(λ) for λ in µm.
    pub fn refractive_index(&self, lambda_um: f64) -> Result<f64> {
        refractive_index(lambda_um, self)
    }
}

/// n = sqrt(1 + Σ bᵢ λ² / (λ² − cᵢ)).
pub fn refractive_index(lambda_um: f64, coeffs: &SellmeierCoefficients) -> Result<f64> {
    if !lambda_um.is_finite() || !coeffs.contains(lambda_um) {
        return Err(Error::Domain(format!(
            "wavelength {lambda_um} µm outside the {} transparency window [{}, {}] µm",
            coeffs.name, coeffs.window.0, coeffs.window.1
        )));
    }
    let l2 = lambda_um * lambda_um;
    let mut n2 = 1.0;
    for (b, c) in coeffs.b.iter().zip(coeffs.c.iter()) {
        if l2 == *c {
            return Err(Error::Domain(format!(
                "wavelength {lambda_um} µm sits on a Sellmeier resonance"
            )));
        }
        n2 += b * l2 / (l2 - c);
    }
    if n2 <= 0.0 {
        return Err(Error::Domain(format!(
            "Sellmeier radicand {n2} is not positive at {lambda_um} µm"
        )));
    }
    Ok(n2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_limit() {
        let vac = SellmeierCoefficients::new("vacuum", [0.0; 3], [0.01, 0.02, 100.0], (0.1, 10.0)).unwrap();
        for &l in &[0.2, 1.0, 1.55, 7.5] {
            assert_eq!(refractive_index(l, &vac).unwrap(), 1.0);
        }
    }

    #[test]
    fn silica_at_telecom() {
        let n = SellmeierCoefficients::fused_silica().refractive_index(1.55).unwrap();
        // regression reference, evaluated directly from the bundled data
        assert!((n - 1.444_023_621_703_260_7).abs() < 1e-12, "{n}");
        assert!((n - 1.444).abs() < 1e-3);
    }

    #[test]
    fn outside_window_is_a_domain_error() {
        let silica = SellmeierCoefficients::fused_silica();
        let err = silica.refractive_index(0.05).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("0.21")));
        assert!(silica.refractive_index(7.0).is_err());
        assert!(silica.refractive_index(f64::NAN).is_err());
    }

    #[test]
    fn monotone_decreasing_on_nm_grid() {
        let silica = SellmeierCoefficients::fused_silica();
        let mut prev = silica.refractive_index(0.4).unwrap();
        for i in 1..=1400 {
            let n = silica.refractive_index(0.4 + i as f64 * 1e-3).unwrap();
            assert!(n < prev, "not decreasing at {} µm", 0.4 + i as f64 * 1e-3);
            prev = n;
        }
    }

    #[test]
    fn above_unity_across_window() {
        let silica = SellmeierCoefficients::fused_silica();
        let (lo, hi) = silica.window();
        for i in 0..=1000 {
            let l = lo + (hi - lo) * i as f64 / 1000.0;
            assert!(silica.refractive_index(l).unwrap() > 1.0);
        }
    }

    #[test]
    fn continuity() {
        let silica = SellmeierCoefficients::fused_silica();
        let n0 = silica.refractive_index(1.0).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..10 {
            let h = 10f64.powi(-k);
            let d = (silica.refractive_index(1.0 + h).unwrap() - n0).abs();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn invariants_enforced() {
        assert!(SellmeierCoefficients::new("x", [-0.1, 0.0, 0.0], [0.01, 0.02, 100.0], (0.2, 2.0)).is_err());
        assert!(SellmeierCoefficients::new("x", [0.1, 0.0, 0.0], [0.01, 0.01, 100.0], (0.2, 2.0)).is_err());
        assert!(SellmeierCoefficients::new("x", [0.1, 0.0, 0.0], [0.0, 0.01, 100.0], (0.2, 2.0)).is_err());
    }

    #[test]
    fn loads_from_file() {
        let dir = std::env::temp_dir().join(format!("sellmeier-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("silica_sellmeier.toml");
        std::fs::write(&p, data::SILICA_SELLMEIER).unwrap();
        assert_eq!(SellmeierCoefficients::load(&p).unwrap(), SellmeierCoefficients::fused_silica());
    }
}
