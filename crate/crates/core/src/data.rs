//! Bundled coefficient files and their integrity check.
//!
//! Each data file is TOML with a top-level `checksum = "<hex>"` line. The
//! checksum is the lowercase hex SHA-256 of the file's bytes with that one
//! line (including its newline) removed, so comments are covered too.

use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Bundled fused-silica Sellmeier data.
pub const SILICA_SELLMEIER: &str = include_str!("../data/silica_sellmeier.toml");

/// Bundled empirical V/W fit tables for hexagonal-lattice PCF.
pub const PCF_EMPIRICAL_FITS: &str = include_str!("../data/pcf_empirical_fits.toml");

const CHECKSUM_PREFIX: &str = "checksum = ";

/// SHA-256 over the file content excluding the checksum line.
pub fn compute_checksum(text: &str) -> String {
    let mut hasher = Sha256::new();
    for line in text.split_inclusive('\n') {
        if !line.starts_with(CHECKSUM_PREFIX) {
            hasher.update(line.as_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

fn recorded_checksum(text: &str) -> Result<String> {
    let mut found = text
        .lines()
        .filter_map(|l| l.strip_prefix(CHECKSUM_PREFIX))
        .map(|v| v.trim().trim_matches('"').to_string());
    let first = found
        .next()
        .ok_or_else(|| Error::Data("missing checksum line".into()))?;
    if found.next().is_some() {
        return Err(Error::Data("more than one checksum line".into()));
    }
    Ok(first)
}

/// Fails unless the recorded checksum matches the content.
pub fn verify_checksum(text: &str) -> Result<()> {
    let recorded = recorded_checksum(text)?;
    let actual = compute_checksum(text);
    if recorded != actual {
        return Err(Error::Data(format!(
            "checksum mismatch: recorded {recorded}, computed {actual}"
        )));
    }
    Ok(())
}

/// Rewrites the checksum line so the file verifies. Used when authoring data.
pub fn seal(text: &str) -> String {
    let sum = compute_checksum(text);
    text.split_inclusive('\n')
        .map(|line| {
            if line.starts_with(CHECKSUM_PREFIX) {
                format!("{CHECKSUM_PREFIX}\"{sum}\"\n")
            } else {
                line.to_string()
            }
        })
        .collect()
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    verify_checksum(text)?;
    toml::from_str(text).map_err(|e| Error::Data(format!("{what}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_files_verify() {
        verify_checksum(SILICA_SELLMEIER).unwrap();
        verify_checksum(PCF_EMPIRICAL_FITS).unwrap();
    }

    #[test]
    fn tampering_is_detected() {
        let edited = SILICA_SELLMEIER.replace("0.6961663", "0.6961664");
        assert!(matches!(verify_checksum(&edited), Err(Error::Data(_))));
        let comment = PCF_EMPIRICAL_FITS.replacen("# Empirical", "# empirical", 1);
        assert!(verify_checksum(&comment).is_err());
    }

    #[test]
    fn seal_restores_validity() {
        let edited = SILICA_SELLMEIER.replace("0.6961663", "0.6961664");
        verify_checksum(&seal(&edited)).unwrap();
    }

    #[test]
    fn missing_checksum_is_an_error() {
        let stripped: String = SILICA_SELLMEIER
            .split_inclusive('\n')
            .filter(|l| !l.starts_with(CHECKSUM_PREFIX))
            .collect();
        assert!(verify_checksum(&stripped).is_err());
    }
}
