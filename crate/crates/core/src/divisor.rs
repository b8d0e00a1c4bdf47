//! Integral divisors on planar sets: degree and support algebra, the disk/circle
//! split, the bottleneck matching metric, and ε-neighborhood membership.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

/// Relative tolerance under which two points are merged into one entry.
///
/// Below Newton residual targets, above double-precision noise.
pub const MERGE_TOL: f64 = 1e-12;

/// Default tolerance on ||q| − 1| for classifying a point as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DivisorError {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: u32, right: u32 },
    #[error("point {point} lies outside the closed unit disk (|q| = {modulus})")]
    PointOutsideClosedDisk { point: C64, modulus: f64 },
}

/// A finite integral divisor: a formal sum of points with positive multiplicities.
///
/// Entries are kept sorted lexicographically by (re, im), with points pairwise
/// distinct up to the relative merge tolerance [`MERGE_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    entries: Vec<(C64, u32)>,
}

impl Divisor {
    pub fn empty() -> Self {
        Divisor { entries: Vec::new() }
    }

    /// Builds a divisor from (point, multiplicity) pairs, merging coincident
    /// points and dropping zero multiplicities.
    pub fn from_entries<I: IntoIterator<Item = (C64, u32)>>(entries: I) -> Self {
        let mut d = Divisor::empty();
        for (q, m) in entries {
            d.push(q, m);
        }
        d
    }

    /// Single-point divisor m·q.
    pub fn single(q: C64, m: u32) -> Self {
        Divisor::from_entries([(q, m)])
    }

    /// Builds from a point list, each with multiplicity one (coincident points merge).
    pub fn from_points<I: IntoIterator<Item = C64>>(points: I) -> Self {
        Divisor::from_entries(points.into_iter().map(|q| (q, 1)))
    }

    fn push(&mut self, q: C64, m: u32) {
        if m == 0 {
            return;
        }
        let tol = MERGE_TOL * q.norm().max(1.0);
        if let Some(entry) = self.entries.iter_mut().find(|(p, _)| (*p - q).norm() <= tol) {
            entry.1 += m;
            return;
        }
        let pos = self
            .entries
            .partition_point(|(p, _)| (p.re, p.im) < (q.re, q.im));
        self.entries.insert(pos, (q, m));
    }

    /// Entries in canonical (re, im)-lexicographic order.
    pub fn entries(&self) -> &[(C64, u32)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// deg(D) = Σ ν(q).
    pub fn degree(&self) -> u32 {
        self.entries.iter().map(|(_, m)| m).sum()
    }

    /// The support of the divisor, in canonical order.
    pub fn support(&self) -> Vec<C64> {
        self.entries.iter().map(|(q, _)| *q).collect()
    }

    /// Multiplicity of the divisor at q (0 off the support).
    pub fn multiplicity_at(&self, q: C64) -> u32 {
        let tol = MERGE_TOL * q.norm().max(1.0);
        self.entries
            .iter()
            .find(|(p, _)| (*p - q).norm() <= tol)
            .map(|(_, m)| *m)
            .unwrap_or(0)
    }

    /// The multiplicity-expanded point list (each point repeated ν(q) times).
    pub fn expanded(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.degree() as usize);
        for (q, m) in &self.entries {
            for _ in 0..*m {
                out.push(*q);
            }
        }
        out
    }

    /// Pointwise sum of multiplicities.
    pub fn add(&self, other: &Divisor) -> Divisor {
        let mut d = self.clone();
        for (q, m) in &other.entries {
            d.push(*q, *m);
        }
        d
    }

    /// Applies a map to every support point, keeping multiplicities.
    pub fn map_points<F: Fn(C64) -> C64>(&self, f: F) -> Divisor {
        Divisor::from_entries(self.entries.iter().map(|(q, m)| (f(*q), *m)))
    }

    /// The scaled divisor with support t·supp(D).
    pub fn scale(&self, t: f64) -> Divisor {
        self.map_points(|q| q * t)
    }

    /// Largest modulus over the support (0 for the empty divisor).
    pub fn max_modulus(&self) -> f64 {
        self.entries.iter().map(|(q, _)| q.norm()).fold(0.0, f64::max)
    }

    /// Splits into interior and boundary parts of the closed unit disk.
    ///
    /// Points with ||q| − 1| ≤ tol are radially projected onto the circle;
    /// points with |q| > 1 + tol are rejected.
    pub fn split_disk(&self, tol: f64) -> Result<DiskSplit, DivisorError> {
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for (q, m) in &self.entries {
            let r = q.norm();
            if r > 1.0 + tol {
                return Err(DivisorError::PointOutsideClosedDisk { point: *q, modulus: r });
            }
            if (r - 1.0).abs() <= tol {
                boundary.push((q / r, *m));
            } else {
                interior.push((*q, *m));
            }
        }
        Ok(DiskSplit {
            interior: Divisor::from_entries(interior),
            boundary: Divisor::from_entries(boundary),
        })
    }

    /// Bottleneck matching distance: the minimum over bijections of the
    /// multiplicity-expanded point lists of the maximum pairwise distance.
    pub fn matching_distance(&self, other: &Divisor) -> Result<f64, DivisorError> {
        let (da, db) = (self.degree(), other.degree());
        if da != db {
            return Err(DivisorError::DegreeMismatch { left: da, right: db });
        }
        let a = self.expanded();
        let b = other.expanded();
        if a.is_empty() {
            return Ok(0.0);
        }
        let n = a.len();
        let mut dists = Vec::with_capacity(n * n);
        for pa in &a {
            for pb in &b {
                dists.push((pa - pb).norm());
            }
        }
        let mut levels = dists.clone();
        levels.sort_by(|x, y| x.partial_cmp(y).expect("finite distances"));
        levels.dedup();
        // Binary search for the smallest level at which a perfect matching exists.
        let feasible = |d: f64| -> bool {
            perfect_matching_exists(n, |i, j| dists[i * n + j] <= d)
        };
        let mut lo = 0usize;
        let mut hi = levels.len() - 1;
        debug_assert!(feasible(levels[hi]));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if feasible(levels[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(levels[lo])
    }

    /// Membership of E = self in the ε-neighborhood of D: true iff a bijection of
    /// the expanded lists exists with every aₖ ∈ 𝔻(qₖ, ε) ∩ 𝔻 (open) or ∩ 𝔻̄ (closed).
    pub fn in_neighborhood(
        &self,
        center: &Divisor,
        eps: f64,
        closed: bool,
    ) -> Result<bool, DivisorError> {
        let (da, db) = (self.degree(), center.degree());
        if da != db {
            return Err(DivisorError::DegreeMismatch { left: da, right: db });
        }
        let a = self.expanded();
        let q = center.expanded();
        let n = a.len();
        if n == 0 {
            return Ok(true);
        }
        let ambient_ok = |z: C64| {
            if closed {
                z.norm() <= 1.0 + MERGE_TOL
            } else {
                z.norm() < 1.0
            }
        };
        Ok(perfect_matching_exists(n, |i, j| {
            ambient_ok(a[i]) && (a[i] - q[j]).norm() < eps
        }))
    }
}

/// The interior/boundary decomposition of a divisor supported in the closed disk.
#[derive(Clone, Debug, PartialEq)]
pub struct DiskSplit {
    pub interior: Divisor,
    pub boundary: Divisor,
}

impl DiskSplit {
    /// Recombines into a single divisor (boundary points stay radially projected).
    pub fn recombine(&self) -> Divisor {
        self.interior.add(&self.boundary)
    }

    /// Interior degree d₁.
    pub fn interior_degree(&self) -> u32 {
        self.interior.degree()
    }

    /// Boundary degree d₂.
    pub fn boundary_degree(&self) -> u32 {
        self.boundary.degree()
    }
}

/// Kuhn's augmenting-path bipartite matching on an n×n adjacency predicate.
fn perfect_matching_exists<F: Fn(usize, usize) -> bool>(n: usize, adj: F) -> bool {
    let mut match_of_right: Vec<Option<usize>> = vec![None; n];
    fn try_assign<F: Fn(usize, usize) -> bool>(
        i: usize,
        adj: &F,
        n: usize,
        visited: &mut [bool],
        match_of_right: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if adj(i, j) && !visited[j] {
                visited[j] = true;
                let free = match match_of_right[j] {
                    None => true,
                    Some(k) => try_assign(k, adj, n, visited, match_of_right),
                };
                if free {
                    match_of_right[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut visited = vec![false; n];
        if !try_assign(i, &adj, n, &mut visited, &mut match_of_right) {
            return false;
        }
    }
    true
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    re: f64,
    im: f64,
    mult: u32,
}

#[derive(Serialize, Deserialize)]
struct DivisorJson {
    entries: Vec<EntryJson>,
}

impl Divisor {
    /// Canonical JSON: `{"entries":[{"re":..,"im":..,"mult":..},...]}`, entries
    /// sorted lexicographically by (re, im).
    pub fn to_json(&self) -> String {
        let doc = DivisorJson {
            entries: self
                .entries
                .iter()
                .map(|(q, m)| EntryJson { re: q.re, im: q.im, mult: *m })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("divisor serialization cannot fail")
    }

    /// Parses the canonical JSON format; entry order in the input is irrelevant.
    pub fn from_json(s: &str) -> Result<Divisor, serde_json::Error> {
        let doc: DivisorJson = serde_json::from_str(s)?;
        Ok(Divisor::from_entries(
            doc.entries
                .into_iter()
                .map(|e| (Complex64::new(e.re, e.im), e.mult)),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn degree_examples() {
        assert_eq!(Divisor::empty().degree(), 0);
        let d = Divisor::from_entries([(c(0.0, 0.0), 2), (c(0.5, 0.0), 1)]);
        assert_eq!(d.degree(), 3);
        let d = Divisor::from_entries([(c(0.0, 1.0), 1), (c(0.0, -1.0), 1)]);
        assert_eq!(d.degree(), 2);
    }

    #[test]
    fn add_examples() {
        let o = c(0.0, 0.0);
        let sum = Divisor::single(o, 1).add(&Divisor::single(o, 1));
        assert_eq!(sum, Divisor::single(o, 2));

        let disjoint = Divisor::single(o, 1).add(&Divisor::single(c(1.0, 0.0), 1));
        assert_eq!(disjoint.entries().len(), 2);
        assert_eq!(disjoint.degree(), 2);

        let a = c(0.3, -0.2);
        let merged = Divisor::single(a, 2).add(&Divisor::single(a, 3));
        assert_eq!(merged, Divisor::single(a, 5));
    }

    #[test]
    fn split_disk_examples() {
        let q = C64::from_polar(1.0, std::f64::consts::PI / 3.0);
        let d = Divisor::from_entries([(c(0.5, 0.0), 1), (q, 1)]);
        let split = d.split_disk(BOUNDARY_TOL).unwrap();
        assert_eq!(split.interior, Divisor::single(c(0.5, 0.0), 1));
        assert_eq!(split.boundary.degree(), 1);
        assert!((split.boundary.support()[0].norm() - 1.0).abs() < 1e-15);

        let err = Divisor::single(c(1.2, 0.0), 1).split_disk(BOUNDARY_TOL);
        assert!(matches!(err, Err(DivisorError::PointOutsideClosedDisk { .. })));

        let d = Divisor::single(c(0.0, 0.0), 2);
        let split = d.split_disk(BOUNDARY_TOL).unwrap();
        assert_eq!(split.interior.degree(), 2);
        assert!(split.boundary.is_empty());
    }

    #[test]
    fn split_disk_projects_near_boundary_points() {
        let q = c(1.0 - 1e-10, 0.0);
        let split = Divisor::single(q, 1).split_disk(BOUNDARY_TOL).unwrap();
        assert_eq!(split.boundary.support()[0], c(1.0, 0.0));
    }

    #[test]
    fn matching_distance_examples() {
        let d = Divisor::single(c(0.0, 0.0), 1);
        assert_eq!(d.matching_distance(&d).unwrap(), 0.0);

        let d1 = Divisor::from_entries([(c(0.0, 0.0), 1), (c(1.0, 0.0), 1)]);
        let d2 = Divisor::from_entries([(c(0.1, 0.0), 1), (c(0.9, 0.0), 1)]);
        let dist = d1.matching_distance(&d2).unwrap();
        assert!((dist - 0.1).abs() < 1e-15, "got {dist}");

        let err = Divisor::single(c(0.0, 0.0), 1).matching_distance(&Divisor::single(c(0.0, 0.0), 2));
        assert!(matches!(err, Err(DivisorError::DegreeMismatch { left: 1, right: 2 })));
    }

    #[test]
    fn matching_distance_prefers_bottleneck_assignment() {
        // Crossed assignment is optimal: identity pairing gives max 2, crossed gives 1.
        let d1 = Divisor::from_entries([(c(0.0, 0.0), 1), (c(1.0, 0.0), 1)]);
        let d2 = Divisor::from_entries([(c(-1.0, 0.0), 1), (c(2.0, 0.0), 1)]);
        assert!((d1.matching_distance(&d2).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn in_neighborhood_examples() {
        let d = Divisor::from_entries([(c(0.2, 0.1), 1), (c(-0.4, 0.0), 2)]);
        assert!(d.in_neighborhood(&d, 1e-9, false).unwrap());

        let center = Divisor::single(c(0.9, 0.0), 1);
        let e = Divisor::single(c(0.99, 0.0), 1);
        assert!(!e.in_neighborhood(&center, 0.05, false).unwrap());
        assert!(!e.in_neighborhood(&center, 0.05, true).unwrap());

        let q = C64::from_polar(1.0, 0.7);
        let b = Divisor::single(q, 1);
        assert!(!b.in_neighborhood(&b, 0.1, false).unwrap());
        assert!(b.in_neighborhood(&b, 0.1, true).unwrap());
    }

    #[test]
    fn json_round_trip_is_canonical() {
        let d = Divisor::from_entries([(c(0.5, -0.2), 2), (c(-0.1, 0.9), 1)]);
        let s = d.to_json();
        let back = Divisor::from_json(&s).unwrap();
        assert_eq!(d, back);
        // canonical order: (-0.1, 0.9) before (0.5, -0.2)
        let doc: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(doc["entries"][0]["re"].as_f64().unwrap(), -0.1);
    }

    #[test]
    fn merge_tolerance_is_relative() {
        let d = Divisor::from_entries([(c(0.5, 0.0), 1), (c(0.5 + 1e-13, 0.0), 1)]);
        assert_eq!(d.entries().len(), 1);
        assert_eq!(d.degree(), 2);
        let d = Divisor::from_entries([(c(0.5, 0.0), 1), (c(0.5 + 1e-9, 0.0), 1)]);
        assert_eq!(d.entries().len(), 2);
    }
}
