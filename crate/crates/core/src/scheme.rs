//! Mapping schemes (a finite vertex set with a self-map and local degrees),
//! divisor tuples over a scheme, boundary strata, cycle return products,
//! boundary-orbit classification, and the Misiurewicz-divisor predicate.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blaschke::{BlaschkeError, BlaschkeProduct, Centering};
use crate::divisor::{DiskSplit, Divisor, DivisorError, BOUNDARY_TOL};
use crate::C64;

/// Angular tolerance (radians) for comparing points on the unit circle.
pub const ANGULAR_TOL: f64 = 1e-8;

/// Matching tolerance for deciding exact periodicity of boundary orbits.
const PERIODICITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("unknown vertex id {0:?}")]
    UnknownVertex(String),
    #[error("local degree at {0:?} must be positive")]
    ZeroDelta(String),
    #[error("cycle {cycle:?} has local-degree product 1")]
    DegenerateCycle { cycle: Vec<String> },
    #[error("factor at {vertex:?} has degree {found}, expected {expected}")]
    FactorDegree { vertex: String, expected: u32, found: u32 },
    #[error("vertex {0:?} is not periodic")]
    NotPeriodic(String),
    #[error(transparent)]
    Divisor(#[from] DivisorError),
    #[error(transparent)]
    Blaschke(#[from] BlaschkeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Debug)]
struct VertexData {
    id: String,
    sigma: usize,
    delta: u32,
}

/// A finite set of vertices with a self-map `sigma` and positive local
/// degrees `delta`, stored in deterministic id order.
#[derive(Clone, Debug)]
pub struct MappingScheme {
    vertices: Vec<VertexData>,
}

impl MappingScheme {
    /// Builds a scheme from (id, sigma-target id, delta) triples. Ids are
    /// sorted; duplicate ids, dangling targets, and zero degrees are rejected.
    pub fn new<I, S, T>(entries: I) -> Result<Self, SchemeError>
    where
        I: IntoIterator<Item = (S, T, u32)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut raw: Vec<(String, String, u32)> = entries
            .into_iter()
            .map(|(id, tgt, d)| (id.into(), tgt.into(), d))
            .collect();
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        for w in raw.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SchemeError::DuplicateVertex(w[0].0.clone()));
            }
        }
        let index: BTreeMap<&str, usize> =
            raw.iter().enumerate().map(|(i, (id, _, _))| (id.as_str(), i)).collect();
        let mut vertices = Vec::with_capacity(raw.len());
        for (id, tgt, delta) in &raw {
            if *delta == 0 {
                return Err(SchemeError::ZeroDelta(id.clone()));
            }
            let sigma = *index
                .get(tgt.as_str())
                .ok_or_else(|| SchemeError::UnknownVertex(tgt.clone()))?;
            vertices.push(VertexData { id: id.clone(), sigma, delta: *delta });
        }
        Ok(MappingScheme { vertices })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vertices.iter().map(|v| v.id.as_str())
    }

    pub fn id(&self, v: usize) -> &str {
        &self.vertices[v].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    pub fn sigma(&self, v: usize) -> usize {
        self.vertices[v].sigma
    }

    pub fn delta(&self, v: usize) -> u32 {
        self.vertices[v].delta
    }

    /// True when v lies on a sigma-cycle.
    pub fn is_periodic(&self, v: usize) -> bool {
        let mut w = self.sigma(v);
        for _ in 0..self.len() {
            if w == v {
                return true;
            }
            w = self.sigma(w);
        }
        false
    }

    /// Minimal number of sigma-steps from v to a periodic vertex.
    pub fn depth(&self, v: usize) -> u32 {
        let mut w = v;
        let mut steps = 0u32;
        while !self.is_periodic(w) {
            w = self.sigma(w);
            steps += 1;
        }
        steps
    }

    /// The cycle through a periodic vertex, in orbit order starting at v.
    pub fn cycle_of(&self, v: usize) -> Result<Vec<usize>, SchemeError> {
        if !self.is_periodic(v) {
            return Err(SchemeError::NotPeriodic(self.id(v).to_string()));
        }
        let mut cycle = vec![v];
        let mut w = self.sigma(v);
        while w != v {
            cycle.push(w);
            w = self.sigma(w);
        }
        Ok(cycle)
    }

    /// Period of the cycle eventually reached from v.
    pub fn eventual_period(&self, v: usize) -> u32 {
        let mut w = v;
        while !self.is_periodic(w) {
            w = self.sigma(w);
        }
        self.cycle_of(w).expect("periodic by construction").len() as u32
    }

    /// All cycles, each listed from its smallest-index vertex, ordered by that
    /// vertex.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut seen = vec![false; self.len()];
        for v in 0..self.len() {
            if seen[v] || !self.is_periodic(v) {
                continue;
            }
            let cycle = self.cycle_of(v).expect("periodic");
            for &w in &cycle {
                seen[w] = true;
            }
            out.push(cycle);
        }
        out
    }

    /// Checks the cycle degree condition and reports the orbit structure.
    pub fn validate(&self) -> Result<SchemeReport, SchemeError> {
        let cycles = self.cycles();
        for cycle in &cycles {
            let product: u64 = cycle.iter().map(|&v| self.delta(v) as u64).product();
            if product < 2 {
                return Err(SchemeError::DegenerateCycle {
                    cycle: cycle.iter().map(|&v| self.id(v).to_string()).collect(),
                });
            }
        }
        let mut periodic = Vec::new();
        let mut aperiodic = Vec::new();
        let mut depths = Vec::new();
        let mut periods = Vec::new();
        for v in 0..self.len() {
            let id = self.id(v).to_string();
            if self.is_periodic(v) {
                periodic.push(id.clone());
            } else {
                aperiodic.push(id.clone());
            }
            depths.push((id.clone(), self.depth(v)));
            periods.push((id, self.eventual_period(v)));
        }
        Ok(SchemeReport {
            periodic,
            aperiodic,
            cycles: cycles
                .iter()
                .map(|c| c.iter().map(|&v| self.id(v).to_string()).collect())
                .collect(),
            depths,
            periods,
        })
    }

    /// Number of boundary markings:
    /// ∏_{v aperiodic} delta(v) · ∏_{cycles O} (∏_{v∈O} delta(v) − 1).
    pub fn count_markings(&self) -> u64 {
        let mut count = 1u64;
        for v in 0..self.len() {
            if !self.is_periodic(v) {
                count *= self.delta(v) as u64;
            }
        }
        for cycle in self.cycles() {
            let big: u64 = cycle.iter().map(|&v| self.delta(v) as u64).product();
            count *= big - 1;
        }
        count
    }

    /// Canonical JSON: `{"vertices":[{"id":..,"sigma":..,"delta":..},..]}` in
    /// id order.
    pub fn to_json(&self) -> String {
        let doc = SchemeJson {
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexJson {
                    id: v.id.clone(),
                    sigma: self.vertices[v.sigma].id.clone(),
                    delta: v.delta,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("scheme serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, SchemeError> {
        let doc: SchemeJson = serde_json::from_str(s)?;
        MappingScheme::new(doc.vertices.into_iter().map(|v| (v.id, v.sigma, v.delta)))
    }
}

#[derive(Serialize, Deserialize)]
struct VertexJson {
    id: String,
    sigma: String,
    delta: u32,
}

#[derive(Serialize, Deserialize)]
struct SchemeJson {
    vertices: Vec<VertexJson>,
}

/// Orbit structure of a validated scheme.
#[derive(Clone, Debug)]
pub struct SchemeReport {
    pub periodic: Vec<String>,
    pub aperiodic: Vec<String>,
    pub cycles: Vec<Vec<String>>,
    /// (vertex, steps to reach a periodic vertex).
    pub depths: Vec<(String, u32)>,
    /// (vertex, period of the cycle it eventually reaches).
    pub periods: Vec<(String, u32)>,
}

impl fmt::Display for SchemeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "periodic vertices: {}", self.periodic.join(", "))?;
        writeln!(
            f,
            "aperiodic vertices: {}",
            if self.aperiodic.is_empty() { "(none)".to_string() } else { self.aperiodic.join(", ") }
        )?;
        for cycle in &self.cycles {
            writeln!(f, "cycle: {}", cycle.join(" -> "))?;
        }
        for ((id, depth), (_, period)) in self.depths.iter().zip(&self.periods) {
            writeln!(f, "{id}: depth {depth}, eventual period {period}")?;
        }
        Ok(())
    }
}

/// Position of a scheme divisor relative to the boundary strata, strongest
/// label last.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stratum {
    /// No boundary zeros at any vertex.
    Interior,
    /// Boundary zeros present and some cycle has lost all its interior zeros.
    Boundary,
    /// Boundary zeros present but every cycle keeps at least one interior
    /// zero, so every return product is expanding on the circle.
    AttractingBoundary,
    /// Attracting boundary with no escaped zero at the normalization point 1.
    AdmissibleBoundary,
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stratum::Interior => "interior",
            Stratum::Boundary => "boundary (some cycle fully escaped)",
            Stratum::AttractingBoundary => "attracting boundary",
            Stratum::AdmissibleBoundary => "admissible boundary",
        };
        f.write_str(name)
    }
}

/// A tuple of disk divisors over a scheme, one of degree delta(v) − 1 per
/// vertex, with the interior Blaschke factors cached.
#[derive(Clone, Debug)]
pub struct SchemeDivisor {
    scheme: MappingScheme,
    splits: Vec<DiskSplit>,
    products: Vec<BlaschkeProduct>,
}

impl SchemeDivisor {
    /// Builds the tuple from one divisor per vertex, in scheme vertex order.
    pub fn new(scheme: &MappingScheme, factors: &[Divisor]) -> Result<Self, SchemeError> {
        if factors.len() != scheme.len() {
            return Err(SchemeError::FactorDegree {
                vertex: "(count)".to_string(),
                expected: scheme.len() as u32,
                found: factors.len() as u32,
            });
        }
        let mut splits = Vec::with_capacity(factors.len());
        let mut products = Vec::with_capacity(factors.len());
        for (v, factor) in factors.iter().enumerate() {
            let expected = scheme.delta(v) - 1;
            if factor.degree() != expected {
                return Err(SchemeError::FactorDegree {
                    vertex: scheme.id(v).to_string(),
                    expected,
                    found: factor.degree(),
                });
            }
            let split = factor.split_disk(BOUNDARY_TOL)?;
            let product = BlaschkeProduct::from_divisor(&split.interior, Centering::FixedPoint)?;
            splits.push(split);
            products.push(product);
        }
        Ok(SchemeDivisor { scheme: scheme.clone(), splits, products })
    }

    /// Replaces the factor at one vertex, rebuilding the cached product.
    pub fn with_factor(&self, v: usize, factor: &Divisor) -> Result<Self, SchemeError> {
        let mut factors: Vec<Divisor> =
            self.splits.iter().map(DiskSplit::recombine).collect();
        factors[v] = factor.clone();
        SchemeDivisor::new(&self.scheme, &factors)
    }

    pub fn scheme(&self) -> &MappingScheme {
        &self.scheme
    }

    pub fn split(&self, v: usize) -> &DiskSplit {
        &self.splits[v]
    }

    pub fn interior_divisor(&self, v: usize) -> &Divisor {
        &self.splits[v].interior
    }

    pub fn boundary_divisor(&self, v: usize) -> &Divisor {
        &self.splits[v].boundary
    }

    /// The cached interior Blaschke factor at v.
    pub fn product(&self, v: usize) -> &BlaschkeProduct {
        &self.products[v]
    }

    pub fn factor_divisor(&self, v: usize) -> Divisor {
        self.splits[v].recombine()
    }

    /// Largest distance between the two tuples' factors across vertices.
    pub fn matching_distance(&self, other: &SchemeDivisor) -> Result<f64, SchemeError> {
        let mut worst = 0.0_f64;
        for v in 0..self.scheme.len() {
            let d = self.factor_divisor(v).matching_distance(&other.factor_divisor(v))?;
            worst = worst.max(d);
        }
        Ok(worst)
    }

    /// Strongest applicable stratum label.
    pub fn boundary_stratum(&self) -> Stratum {
        let any_boundary = self.splits.iter().any(|s| !s.boundary.is_empty());
        if !any_boundary {
            return Stratum::Interior;
        }
        for cycle in self.scheme.cycles() {
            let interior_total: u32 =
                cycle.iter().map(|&v| self.splits[v].interior_degree()).sum();
            if interior_total == 0 {
                return Stratum::Boundary;
            }
        }
        let one = C64::new(1.0, 0.0);
        for split in &self.splits {
            for (q, _) in split.boundary.entries() {
                if angular_distance(*q, one) < ANGULAR_TOL {
                    return Stratum::AttractingBoundary;
                }
            }
        }
        Stratum::AdmissibleBoundary
    }

    /// The return product around the cycle of a periodic vertex:
    /// factors at v, sigma(v), …, in application order.
    pub fn hat_composition(&self, v: usize) -> Result<CycleProduct, SchemeError> {
        let cycle = self.scheme.cycle_of(v)?;
        Ok(CycleProduct {
            factors: cycle.iter().map(|&w| self.products[w].clone()).collect(),
        })
    }

    /// Applies `steps` successive interior factors starting at vertex u,
    /// renormalizing to the circle after each step; returns the pushed point
    /// and the vertex it lives at.
    pub fn push_boundary(&self, u: usize, q: C64, steps: u32) -> (C64, usize) {
        let mut z = q;
        let mut v = u;
        for _ in 0..steps {
            z = self.products[v].eval(z);
            let n = z.norm();
            if n > 0.0 {
                z /= n;
            }
            v = self.scheme.sigma(v);
        }
        (z, v)
    }

    /// Classifies a boundary point's orbit: the minimal depth m (at least the
    /// scheme depth of u) whose pushed point is exactly periodic under the
    /// return product, with its minimal period l, searched within the horizon.
    pub fn classify_preperiodic(
        &self,
        u: usize,
        q: C64,
        horizon: u32,
    ) -> Result<PreperiodicityTag, SchemeError> {
        let q = if q.norm() > 0.0 { q / q.norm() } else { q };
        let base_depth = self.scheme.depth(u);
        let (mut point, mut vertex) = self.push_boundary(u, q, base_depth);
        for extra in 0..=horizon {
            let m = base_depth + extra;
            let hat = self.hat_composition(vertex)?;
            if let Some(l) = minimal_period(&hat, point, horizon) {
                return Ok(PreperiodicityTag::Preperiodic { depth: m, period: l });
            }
            let (next, next_vertex) = self.push_boundary(vertex, point, 1);
            point = next;
            vertex = next_vertex;
        }
        Ok(PreperiodicityTag::NotPreperiodic)
    }

    /// Boundary support points of other vertices pushed forward to v (each
    /// source vertex u ≠ v contributing through its minimal route length).
    pub fn incoming_boundary_orbit(&self, v: usize) -> Vec<C64> {
        let mut out = Vec::new();
        for u in 0..self.scheme.len() {
            if u == v {
                continue;
            }
            let Some(route) = route_length(&self.scheme, u, v) else {
                continue;
            };
            for q in self.splits[u].boundary.support() {
                let (p, _) = self.push_boundary(u, q, route);
                out.push(p);
            }
        }
        out
    }

    /// Finite-horizon Misiurewicz check: no boundary support point may be hit
    /// by the incoming pushed supports, nor by the truncated forward orbit of
    /// those sets under the return product on periodic vertices.
    pub fn is_misiurewicz(&self, horizon: u32) -> Result<MisiurewiczReport, SchemeError> {
        let mut min_separation = f64::INFINITY;
        for v in 0..self.scheme.len() {
            let own = self.splits[v].boundary.support();
            if own.is_empty() && !self.scheme.is_periodic(v) {
                continue;
            }
            let incoming = self.incoming_boundary_orbit(v);
            for &a in &own {
                for &b in &incoming {
                    min_separation = min_separation.min(angular_distance(a, b));
                }
            }
            if self.scheme.is_periodic(v) && !own.is_empty() {
                let hat = self.hat_composition(v)?;
                let mut level: Vec<C64> =
                    incoming.iter().copied().chain(own.iter().copied()).collect();
                for _ in 0..horizon {
                    for p in level.iter_mut() {
                        let mut next = hat.eval(*p);
                        let n = next.norm();
                        if n > 0.0 {
                            next /= n;
                        }
                        *p = next;
                    }
                    for &a in &own {
                        for &b in &level {
                            min_separation = min_separation.min(angular_distance(a, b));
                        }
                    }
                }
            }
        }
        let generic = self
            .splits
            .iter()
            .all(|s| s.boundary.entries().iter().all(|(_, m)| *m == 1));
        let verdict = if min_separation < ANGULAR_TOL {
            MisiurewiczVerdict::Fails
        } else if min_separation >= 10.0 * ANGULAR_TOL {
            MisiurewiczVerdict::Holds
        } else {
            MisiurewiczVerdict::Undecided
        };
        Ok(MisiurewiczReport { verdict, min_separation, generic, horizon })
    }

    /// JSON with the scheme plus per-vertex divisor JSON nested under vertex
    /// ids.
    pub fn to_json(&self) -> String {
        let factors: BTreeMap<String, serde_json::Value> = (0..self.scheme.len())
            .map(|v| {
                let divisor_doc: serde_json::Value =
                    serde_json::from_str(&self.factor_divisor(v).to_json())
                        .expect("divisor JSON round trip");
                (self.scheme.id(v).to_string(), divisor_doc)
            })
            .collect();
        let scheme_doc: serde_json::Value =
            serde_json::from_str(&self.scheme.to_json()).expect("scheme JSON round trip");
        let doc = serde_json::json!({ "scheme": scheme_doc, "factors": factors });
        serde_json::to_string_pretty(&doc).expect("scheme divisor serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, SchemeError> {
        #[derive(Deserialize)]
        struct Doc {
            scheme: serde_json::Value,
            factors: BTreeMap<String, serde_json::Value>,
        }
        let doc: Doc = serde_json::from_str(s)?;
        let scheme = MappingScheme::from_json(&doc.scheme.to_string())?;
        let mut factors = vec![Divisor::empty(); scheme.len()];
        for (id, value) in &doc.factors {
            let v = scheme
                .index_of(id)
                .ok_or_else(|| SchemeError::UnknownVertex(id.clone()))?;
            factors[v] = Divisor::from_json(&value.to_string())?;
        }
        SchemeDivisor::new(&scheme, &factors)
    }
}

/// Composition of Blaschke factors around one cycle, in application order.
#[derive(Clone, Debug)]
pub struct CycleProduct {
    factors: Vec<BlaschkeProduct>,
}

impl CycleProduct {
    pub fn factors(&self) -> &[BlaschkeProduct] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(BlaschkeProduct::degree).product()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.factors.iter().fold(z, |w, b| b.eval(w))
    }

    pub fn eval_with_deriv(&self, z: C64) -> (C64, C64) {
        let mut w = z;
        let mut dw = C64::new(1.0, 0.0);
        for b in &self.factors {
            let (value, deriv) = b.eval_with_deriv(w);
            dw *= deriv;
            w = value;
        }
        (w, dw)
    }

    pub fn deriv(&self, z: C64) -> C64 {
        self.eval_with_deriv(z).1
    }

    /// Derivative at the common fixed point 0.
    pub fn multiplier(&self) -> C64 {
        self.factors
            .iter()
            .map(|b| b.deriv(C64::new(0.0, 0.0)))
            .product()
    }

    pub fn iterate(&self, z: C64, n: u32) -> C64 {
        (0..n).fold(z, |w, _| self.eval(w))
    }
}

/// Orbit classification of a boundary point over a scheme divisor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreperiodicityTag {
    Preperiodic { depth: u32, period: u32 },
    NotPreperiodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MisiurewiczVerdict {
    Holds,
    Fails,
    Undecided,
}

/// Result of the finite-horizon Misiurewicz check.
#[derive(Clone, Copy, Debug)]
pub struct MisiurewiczReport {
    pub verdict: MisiurewiczVerdict,
    /// Smallest angular separation seen across all checked pairs.
    pub min_separation: f64,
    /// Every boundary support point is simple.
    pub generic: bool,
    pub horizon: u32,
}

/// Angular distance between two points identified with their radial
/// projections to the circle.
pub fn angular_distance(a: C64, b: C64) -> f64 {
    (a * b.conj()).arg().abs()
}

fn minimal_period(hat: &CycleProduct, point: C64, horizon: u32) -> Option<u32> {
    let mut z = point;
    for l in 1..=horizon {
        z = hat.eval(z);
        let n = z.norm();
        if n > 0.0 {
            z /= n;
        }
        if (z - point).norm() < PERIODICITY_TOL {
            return Some(l);
        }
    }
    None
}

/// Minimal k ≥ 1 with sigma^k(u) = v, if any.
fn route_length(scheme: &MappingScheme, u: usize, v: usize) -> Option<u32> {
    let mut w = scheme.sigma(u);
    for k in 1..=scheme.len() as u32 {
        if w == v {
            return Some(k);
        }
        w = scheme.sigma(w);
    }
    None
}
