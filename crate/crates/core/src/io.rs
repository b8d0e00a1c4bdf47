//! Serialization helpers shared by the command-line tools: ASCII CSV,
//! binary PGM (P5) rasters, JSON documents, and reproducible run manifests.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polydyn::{Raster, RASTER_INSIDE, RASTER_UNDECIDED};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("format error: {0}")]
    Format(String),
}

/// Writes an ASCII CSV file: a header row followed by data rows. Floating
/// point cells use the shortest round-trip representation.
pub fn write_csv(
    path: impl AsRef<Path>,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(IoError::Format(format!(
                "row has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Formats a float with the shortest representation that round-trips.
pub fn csv_cell(value: f64) -> String {
    format!("{value}")
}

/// Writes a binary 8-bit PGM (P5) image.
pub fn write_pgm(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    gray: &[u8],
) -> Result<(), IoError> {
    if gray.len() != width * height {
        return Err(IoError::Format(format!(
            "pixel buffer has {} bytes for {}x{}",
            gray.len(),
            width,
            height
        )));
    }
    let mut file = fs::File::create(path)?;
    write!(file, "P5\n{width} {height}\n255\n")?;
    file.write_all(gray)?;
    Ok(())
}

/// Grayscale rendering of an escape-time raster: non-escaping and undecided
/// pixels are black; escaping pixels brighten monotonically with earlier
/// escape.
pub fn raster_to_gray(raster: &Raster) -> Vec<u8> {
    let max_count = raster
        .counts
        .iter()
        .copied()
        .filter(|&n| n != RASTER_INSIDE && n != RASTER_UNDECIDED)
        .max()
        .unwrap_or(0)
        .max(1);
    raster
        .counts
        .iter()
        .map(|&n| {
            if n == RASTER_INSIDE || n == RASTER_UNDECIDED {
                0u8
            } else {
                let scaled = (n as u64 * 191 / max_count as u64) as u8;
                255 - scaled.min(191)
            }
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, IoError> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Record of one command-line run; replaying the manifest reproduces the
/// outputs byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub inputs: Vec<String>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
    pub seed: u64,
}

impl RunManifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        read_json(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polydyn::{julia_raster, Polynomial};
    use crate::C64;

    fn tmp(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("blaschke-io-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn csv_round_trip_text() {
        let path = tmp("table.csv");
        write_csv(
            &path,
            &["n", "value"],
            &[
                vec!["1".into(), csv_cell(0.5)],
                vec!["2".into(), csv_cell(1.0 / 3.0)],
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "n,value\n1,0.5\n2,0.3333333333333333\n");
        let bad = write_csv(&path, &["a"], &[vec!["1".into(), "2".into()]]);
        assert!(bad.is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn pgm_has_binary_header() {
        let path = tmp("img.pgm");
        write_pgm(&path, 3, 2, &[0, 64, 128, 192, 255, 32]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(bytes.len(), 11 + 6);
        assert!(write_pgm(&path, 2, 2, &[0u8; 3]).is_err());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn raster_gray_is_deterministic_and_two_valued_for_the_disk() {
        let f = Polynomial::quadratic(C64::new(0.0, 0.0));
        let raster = julia_raster(&f, [-2.0, 2.0, -2.0, 2.0], 64, 64, 80).unwrap();
        let gray_a = raster_to_gray(&raster);
        let gray_b = raster_to_gray(&raster);
        assert_eq!(gray_a, gray_b);
        assert!(gray_a.iter().any(|&g| g == 0));
        assert!(gray_a.iter().any(|&g| g > 0));
    }

    #[test]
    fn manifest_round_trip() {
        let path = tmp("manifest.json");
        let manifest = RunManifest {
            subcommand: "psi".into(),
            argv: vec!["psi".into(), "--divisor".into(), "d.json".into()],
            inputs: vec!["d.json".into()],
            parameters: serde_json::json!({"inverse": false}),
            outputs: vec!["out.json".into()],
            seed: 7,
        };
        manifest.write(&path).unwrap();
        let loaded = RunManifest::load(&path).unwrap();
        assert_eq!(loaded, manifest);
        std::fs::remove_file(&path).ok();
    }
}
