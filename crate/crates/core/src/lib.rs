//! Dispersion modelling of photonic crystal fibre (PCF) and phase-matching
//! analysis of Bragg-scattering four-wave mixing (BS-FWM).
//!
//! The crate is organised bottom-up:
//!
//! * [`material`]: Sellmeier refractive index of the silica background.
//! * [`pcf`]: empirical effective-index model of hexagonal-lattice PCF,
//!   propagation constant, its frequency derivatives and the zero-dispersion
//!   wavelength.
//! * [`fwm`]: energy conservation, phase mismatch, phase-matching intensity,
//!   pump envelope, group-velocity symmetry metrics, phase-matching maps and
//!   efficiency envelopes.
//! * [`sweep`]: (pitch, d/pitch) design-space sweeps and ZDW contours.
//! * [`compensation`]: fixed-pump wavelength selection and fabrication-error
//!   compensation.
//! * [`io`]: CSV/JSON writers for every result type.
//!
//! Wavelengths are micrometres in [`material`], [`pcf`] and [`sweep`], and
//! nanometres in [`fwm`] and [`compensation`]. Angular frequencies are rad/s
//! throughout.
//!
//! ```
//! use pcf_bsfwm::pcf::{DispersionModel, FibreGeometry};
//!
//! let model = DispersionModel::new(FibreGeometry::new(1.78, 0.437)?)?;
//! let zdw = model.find_zdw((0.4, 2.0))?;
//! assert!((zdw.lambda_um - 0.9).abs() < 0.03);
//! # Ok::<(), pcf_bsfwm::Error>(())
//! ```

pub mod compensation;
pub mod contour;
pub mod data;
mod error;
pub mod fwm;
pub mod io;
pub mod material;
pub mod pcf;
pub mod roots;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Schema version of the CSV/JSON output formats.
pub const SCHEMA_VERSION: u32 = 1;
