//! Design-space sweep of the symmetry bandwidth over pitch and hole ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{self, Field, Polyline};
use crate::fwm::{self, DEFAULT_ZDW_WINDOW_UM};
use crate::material::SellmeierCoefficients;
use crate::pcf::{DispersionModel, EmpiricalFitTables, FibreGeometry, DEFAULT_DERIVATIVE_STEP};
use crate::units::LinearGrid;
use crate::{Error, Result};

/// Group-velocity symmetry threshold used by default, m/s.
pub const DEFAULT_THRESHOLD: f64 = 5e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// µm
    pub pitch: LinearGrid,
    pub ratio: LinearGrid,
    /// m/s
    pub threshold: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            pitch: LinearGrid { start: 0.8, stop: 3.0, step: 0.02 },
            ratio: LinearGrid { start: 0.25, stop: 0.7, step: 0.005 },
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl SweepGrid {
    /// Checks the grid, requiring at least two points per axis.
    pub fn new(pitch: LinearGrid, ratio: LinearGrid, threshold: f64) -> Result<Self> {
        let g = Self { pitch, ratio, threshold };
        g.validate()?;
        if pitch.len() < 2 || ratio.len() < 2 {
            return Err(Error::Config("a sweep grid needs at least two points per axis".into()));
        }
        Ok(g)
    }

    /// Checks bounds and steps; single-point axes are allowed.
    pub fn validate(&self) -> Result<()> {
        self.pitch.validate()?;
        self.ratio.validate()?;
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::Config(format!("threshold must be non-negative, got {}", self.threshold)));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.pitch.len() * self.ratio.len()
    }
}

/// Material data, fit tables and derivative step shared by every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    pub material: SellmeierCoefficients,
    pub fits: EmpiricalFitTables,
    pub derivative_step: f64,
}

impl Default for ModelData {
    fn default() -> Self {
        Self {
            material: SellmeierCoefficients::fused_silica(),
            fits: EmpiricalFitTables::bundled(),
            derivative_step: DEFAULT_DERIVATIVE_STEP,
        }
    }
}

impl ModelData {
    pub fn model(&self, geometry: FibreGeometry) -> Result<DispersionModel> {
        DispersionModel::with_data(geometry, self.material.clone(), self.fits.clone(), self.derivative_step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    NoZdw,
    InvalidDomain,
    Truncated,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::NoZdw => "no-zdw",
            CellStatus::InvalidDomain => "invalid-domain",
            CellStatus::Truncated => "truncated",
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            CellStatus::Ok => 0,
            CellStatus::NoZdw => 1,
            CellStatus::InvalidDomain => 2,
            CellStatus::Truncated => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub pitch_um: f64,
    pub ratio: f64,
    pub zdw_um: Option<f64>,
    pub bandwidth_um: Option<f64>,
    pub status: CellStatus,
}

/// One record per grid cell, row-major: ratio is the outer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub pitch_um: Vec<f64>,
    pub ratio: Vec<f64>,
    pub threshold: f64,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, i_pitch: usize, i_ratio: usize) -> &SweepCell {
        &self.cells[i_ratio * self.pitch_um.len() + i_pitch]
    }

    /// ZDW per cell with missing values as NaN.
    pub fn zdw_field(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.zdw_um.unwrap_or(f64::NAN)).collect()
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }
}

/// Evaluates one design.
pub fn evaluate_cell(data: &ModelData, pitch_um: f64, ratio: f64, threshold: f64) -> SweepCell {
    let invalid = SweepCell { pitch_um, ratio, zdw_um: None, bandwidth_um: None, status: CellStatus::InvalidDomain };
    let Ok(model) = FibreGeometry::new(pitch_um, ratio).and_then(|g| data.model(g)) else {
        return invalid;
    };
    let zdw = match model.find_zdw(DEFAULT_ZDW_WINDOW_UM) {
        Ok(z) => z,
        Err(Error::NotFound(_)) => return SweepCell { status: CellStatus::NoZdw, ..invalid },
        Err(_) => return invalid,
    };
    match fwm::symmetry_bandwidth_in(&model, threshold, DEFAULT_ZDW_WINDOW_UM) {
        Ok(sb) => SweepCell {
            pitch_um,
            ratio,
            zdw_um: Some(zdw.lambda_um),
            bandwidth_um: Some(sb.bandwidth_um),
            status: if sb.truncated { CellStatus::Truncated } else { CellStatus::Ok },
        },
        Err(_) => SweepCell { zdw_um: Some(zdw.lambda_um), ..invalid },
    }
}

/// Runs every cell of `grid`. `threads = None` uses the global pool,
/// `Some(1)` runs serially on the calling thread.
pub fn run_sweep(grid: &SweepGrid, data: &ModelData, threads: Option<usize>) -> Result<SweepResult> {
    grid.validate()?;
    let pitch = grid.pitch.points();
    let ratio = grid.ratio.points();
    let coords: Vec<(f64, f64)> = ratio.iter().flat_map(|&r| pitch.iter().map(move |&p| (p, r))).collect();
    let eval = |&(p, r): &(f64, f64)| evaluate_cell(data, p, r, grid.threshold);
    let cells: Vec<SweepCell> = match threads {
        Some(0) => return Err(Error::Config("thread count must be at least 1".into())),
        Some(1) => coords.iter().map(eval).collect(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| coords.par_iter().map(eval).collect()),
        None => coords.par_iter().map(eval).collect(),
    };
    if cells.iter().all(|c| c.status == CellStatus::InvalidDomain) {
        return Err(Error::Config("no cell of the sweep grid lies in the valid model domain".into()));
    }
    Ok(SweepResult { pitch_um: pitch, ratio, threshold: grid.threshold, cells })
}

/// Polylines of one ZDW level in (pitch, ratio) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZdwContour {
    pub level_um: f64,
    pub polylines: Vec<Polyline>,
}

/// Iso-ZDW lines of a sweep; cells without a ZDW are masked.
pub fn extract_zdw_contours(result: &SweepResult, levels_um: &[f64]) -> Result<Vec<ZdwContour>> {
    let with_zdw = result.cells.iter().filter(|c| c.zdw_um.is_some()).count();
    if with_zdw < 4 {
        return Err(Error::Config(format!("contouring needs at least 4 cells with a ZDW, found {with_zdw}")));
    }
    let values = result.zdw_field();
    let field = Field::new(&result.pitch_um, &result.ratio, &values);
    Ok(levels_um
        .iter()
        .map(|&level_um| ZdwContour { level_um, polylines: contour::march(&field, level_um) })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64, f64) -> f64) -> SweepResult {
        let pitch: Vec<f64> = (0..11).map(|i| 1.0 + 0.1 * i as f64).collect();
        let ratio: Vec<f64> = (0..6).map(|j| 0.3 + 0.05 * j as f64).collect();
        let cells = ratio
            .iter()
            .flat_map(|&r| {
                let f = &f;
                pitch.iter().map(move |&p| SweepCell {
                    pitch_um: p,
                    ratio: r,
                    zdw_um: Some(f(p, r)),
                    bandwidth_um: Some(0.0),
                    status: CellStatus::Ok,
                })
            })
            .collect();
        SweepResult { pitch_um: pitch, ratio, threshold: DEFAULT_THRESHOLD, cells }
    }

    #[test]
    fn constant_field_has_no_contours() {
        let r = synthetic(|_, _| 0.9);
        let c = extract_zdw_contours(&r, &[0.8, 1.0]).unwrap();
        assert!(c.iter().all(|c| c.polylines.is_empty()));
    }

    #[test]
    fn linear_field_contour_is_vertical() {
        let r = synthetic(|p, _| p);
        let c = extract_zdw_contours(&r, &[1.45]).unwrap();
        assert_eq!(c[0].polylines.len(), 1);
        for pt in &c[0].polylines[0].points {
            assert!((pt[0] - 1.45).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_cells_rejected() {
        let mut r = synthetic(|p, _| p);
        for c in r.cells.iter_mut().skip(3) {
            c.zdw_um = None;
        }
        assert!(extract_zdw_contours(&r, &[1.2]).is_err());
    }

    #[test]
    fn single_cell_fig1_design() {
        let g = SweepGrid { pitch: LinearGrid::single(1.39), ratio: LinearGrid::single(0.55), threshold: DEFAULT_THRESHOLD };
        let r = run_sweep(&g, &ModelData::default(), Some(1)).unwrap();
        assert_eq!(r.cells.len(), 1);
        let c = r.cells[0];
        assert!(matches!(c.status, CellStatus::Ok | CellStatus::Truncated));
        assert!((c.zdw_um.unwrap() - 0.8006).abs() < 1e-3);
    }

    #[test]
    fn lower_left_cell_is_invalid() {
        let c = evaluate_cell(&ModelData::default(), 0.8, 0.25, DEFAULT_THRESHOLD);
        assert_eq!(c.status, CellStatus::InvalidDomain);
        assert!(c.zdw_um.is_none() && c.bandwidth_um.is_none());
    }

    #[test]
    fn all_invalid_grid_is_config_error() {
        let g = SweepGrid {
            pitch: LinearGrid::new(0.8, 0.82, 0.02).unwrap(),
            ratio: LinearGrid::new(0.9, 0.95, 0.05).unwrap(),
            threshold: DEFAULT_THRESHOLD,
        };
        assert!(matches!(run_sweep(&g, &ModelData::default(), Some(1)), Err(Error::Config(_))));
    }

    #[test]
    fn grid_needs_two_points_per_axis() {
        assert!(SweepGrid::new(LinearGrid::single(1.0), LinearGrid::new(0.3, 0.4, 0.05).unwrap(), 1.0).is_err());
        assert_eq!(SweepGrid::default().cell_count(), 111 * 91);
    }

    #[test]
    fn serial_and_parallel_agree() {
        let g = SweepGrid::new(
            LinearGrid::new(1.2, 1.5, 0.1).unwrap(),
            LinearGrid::new(0.4, 0.55, 0.05).unwrap(),
            2e4,
        )
        .unwrap();
        let d = ModelData::default();
        let a = run_sweep(&g, &d, Some(1)).unwrap();
        let b = run_sweep(&g, &d, Some(3)).unwrap();
        assert_eq!(a, b);
        // row-major, ratio outer
        assert_eq!(a.cell(2, 1).pitch_um, a.pitch_um[2]);
        assert_eq!(a.cell(2, 1).ratio, a.ratio[1]);
    }

    #[test]
    fn bandwidth_implies_zdw() {
        let g = SweepGrid::new(
            LinearGrid::new(0.8, 2.0, 0.4).unwrap(),
            LinearGrid::new(0.25, 0.65, 0.2).unwrap(),
            DEFAULT_THRESHOLD,
        )
        .unwrap();
        let r = run_sweep(&g, &ModelData::default(), None).unwrap();
        for c in &r.cells {
            if c.bandwidth_um.is_some() {
                assert!(c.zdw_um.is_some());
                assert!(matches!(c.status, CellStatus::Ok | CellStatus::Truncated));
            }
        }
    }
}
