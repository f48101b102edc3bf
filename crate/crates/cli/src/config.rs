//! Run configuration: file loading, flag overrides and parsing helpers.

use std::path::Path;

use anyhow::Context;
use pcf_bsfwm::compensation::{Axis, Perturbation};
use pcf_bsfwm::io::Format;
use pcf_bsfwm::units::LinearGrid;
use pcf_bsfwm::Error;
use serde::{Deserialize, Serialize};

/// Fixed-pump wavelength: a value in nm or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PumpSetting {
    Auto,
    Nm(f64),
}

impl std::str::FromStr for PumpSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "auto" {
            return Ok(PumpSetting::Auto);
        }
        s.parse::<f64>()
            .map(PumpSetting::Nm)
            .map_err(|_| Error::Config(format!("pump must be 'auto' or a wavelength in nm, got '{s}'")))
    }
}

impl Serialize for PumpSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PumpSetting::Auto => s.serialize_str("auto"),
            PumpSetting::Nm(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for PumpSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Nm(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Nm(v) => Ok(PumpSetting::Nm(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Everything a run needs. Unset fields take per-command defaults; the
/// resolved configuration written into each output has every field the
/// command used filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch_um: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_over_pitch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_nm: Option<PumpSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pump_fwhm_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fibre_length_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_per_w_per_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative_step_rad_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_um: Option<LinearGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_grid_nm: Option<LinearGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid_nm: Option<LinearGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch_grid_um: Option<LinearGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_grid: Option<LinearGrid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_m_per_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_levels_um: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fractions: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),+) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )+
    };
}

impl RunConfig {
    /// Reads a TOML or JSON file (JSON when the extension is `.json` or the
    /// text starts with `{`).
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
        let parsed = if json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        };
        Ok(parsed?)
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, command, pitch_um, d_over_pitch, perturbation, pump_nm, pump_fwhm_nm, target_nm,
            fibre_length_m, gamma_per_w_per_m, p_power_w, q_power_w, derivative_step_rad_per_s, lambda_um,
            q_grid_nm, s_grid_nm, pitch_grid_um, ratio_grid, threshold_m_per_s, contour_levels_um, axis,
            fractions, format
        );
        self
    }
}

/// `start:stop:step`.
pub fn parse_grid(s: &str) -> Result<LinearGrid, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("grid must be 'start:stop:step', got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    LinearGrid::new(v[0], v[1], v[2])
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::Config(format!("not a number list: '{s}'"))))
        .collect()
}

/// `axis:fraction`, e.g. `pitch:0.01`.
pub fn parse_perturbation(s: &str) -> Result<Perturbation, Error> {
    let (axis, fraction) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("perturbation must be 'pitch:F' or 'ratio:F', got '{s}'")))?;
    let fraction = fraction
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("bad perturbation fraction in '{s}'")))?;
    Perturbation::new(axis.trim().parse()?, fraction)
}
