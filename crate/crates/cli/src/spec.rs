//! On-disk specification for conformal repelling systems consumed by the
//! `dim` subcommand.

use blaschke_div_core::dimension::{Branch, Region};
use blaschke_div_core::poly::CPoly;
use blaschke_div_core::C64;
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Disk { center: [f64; 2], radius: f64 },
    ArcBand { theta_lo: f64, theta_hi: f64, r_lo: f64, r_hi: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BranchSpec {
    Affine { a: [f64; 2], b: [f64; 2] },
    PolyInverse { coeffs: Vec<[f64; 2]>, l: u32, seed: [f64; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub region: RegionSpec,
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default)]
    pub bracket: Option<[f64; 2]>,
}

fn complex(pair: [f64; 2]) -> C64 {
    C64::new(pair[0], pair[1])
}

impl RegionSpec {
    pub fn build(&self) -> Region {
        match *self {
            RegionSpec::Disk { center, radius } => Region::Disk {
                center: complex(center),
                radius,
            },
            RegionSpec::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            } => Region::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            },
        }
    }
}

impl BranchSpec {
    pub fn build(&self) -> Branch {
        match self {
            BranchSpec::Affine { a, b } => Branch::Affine {
                a: complex(*a),
                b: complex(*b),
            },
            BranchSpec::PolyInverse { coeffs, l, seed } => Branch::PolyInverse {
                poly: CPoly::new(coeffs.iter().map(|&c| complex(c)).collect()),
                l: *l,
                seed: complex(*seed),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_spec_round_trip() {
        let text = r#"{
            "region": {"type": "disk", "center": [0.5, 0.0], "radius": 0.55},
            "branches": [
                {"type": "affine", "a": [0.3333333333333333, 0.0], "b": [0.0, 0.0]},
                {"type": "affine", "a": [0.3333333333333333, 0.0], "b": [0.6666666666666666, 0.0]}
            ],
            "depth": 12
        }"#;
        let spec: SystemSpec = serde_json::from_str(text).unwrap();
        assert_eq!(spec.branches.len(), 2);
        assert_eq!(spec.depth, Some(12));
        assert!(matches!(spec.region.build(), Region::Disk { .. }));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "region": {"type": "disk", "center": [0.0, 0.0], "radius": 1.0, "extra": 1},
            "branches": []
        }"#;
        assert!(serde_json::from_str::<SystemSpec>(text).is_err());
    }
}
