//! Conformal repelling systems and dimension estimation: certified inverse
//! branches over a disk or arc-band region, non-escaping point samples,
//! Bowen-pressure dimension via a transfer operator on cylinder words, the
//! Moran-equation oracle, the dimension lower-bound evaluator, and the
//! angular-width bound for univalent images.

use thiserror::Error;

use crate::poly::CPoly;
use crate::C64;

const TAU: f64 = 2.0 * std::f64::consts::PI;
/// Relative stop for the transfer-operator power iteration.
const POWER_ITERATION_TOL: f64 = 1e-12;
const POWER_ITERATION_MAX: usize = 200_000;
/// Sample budget for boundary polylines during certification.
const BOUNDARY_SAMPLES: usize = 360;
/// Cylinder-word budget for non-escaping samples and transfer states.
const WORD_BUDGET: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum DimensionError {
    #[error("region is invalid: {0}")]
    InvalidRegion(String),
    #[error("branch certification failed: {0}")]
    BranchNotCertified(String),
    #[error("pressure bracket does not straddle eigenvalue 1")]
    BracketDoesNotStraddle,
    #[error("transfer-operator eigenvalue did not converge")]
    EigenvalueNotConverged,
    #[error("cylinder-word budget exceeded at the requested depth")]
    DepthBudgetExceeded,
    #[error("domain sample contains the origin")]
    OriginInDomain,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Target region of a repelling system.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Disk { center: C64, radius: f64 },
    /// Annular sector `r in [r_lo, r_hi]`, `theta in [theta_lo, theta_hi]`,
    /// slit along `theta_lo` when the angular span is a full turn.
    ArcBand {
        theta_lo: f64,
        theta_hi: f64,
        r_lo: f64,
        r_hi: f64,
    },
}

impl Region {
    fn validate(&self) -> Result<(), DimensionError> {
        match *self {
            Region::Disk { radius, .. } => {
                if !(radius > 0.0) {
                    return Err(DimensionError::InvalidRegion("disk radius must be positive".into()));
                }
            }
            Region::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            } => {
                if !(r_lo > 0.0) || !(r_hi > r_lo) {
                    return Err(DimensionError::InvalidRegion(
                        "arc band radii must satisfy 0 < r_lo < r_hi".into(),
                    ));
                }
                let span = theta_hi - theta_lo;
                if !(span > 0.0) || span > TAU + 1e-12 {
                    return Err(DimensionError::InvalidRegion(
                        "arc band angular span must lie in (0, 2 pi]".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Angular offset of `z` from `theta_lo`, folded into `[0, 2 pi)`.
    fn angular_offset(theta_lo: f64, z: C64) -> f64 {
        (z.arg() - theta_lo).rem_euclid(TAU)
    }

    pub fn contains(&self, z: C64) -> bool {
        match *self {
            Region::Disk { center, radius } => (z - center).norm() <= radius + 1e-12,
            Region::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            } => {
                let r = z.norm();
                if r < r_lo - 1e-12 || r > r_hi + 1e-12 {
                    return false;
                }
                let span = theta_hi - theta_lo;
                if span >= TAU - 1e-12 {
                    return true;
                }
                Self::angular_offset(theta_lo, z) <= span + 1e-12
            }
        }
    }

    /// Distance from `z` to the strict part of the boundary (the full circle
    /// for a disk; the radial circles and, for partial spans, the angular
    /// edges of an arc band). Negative when outside.
    pub fn interior_margin(&self, z: C64) -> f64 {
        match *self {
            Region::Disk { center, radius } => radius - (z - center).norm(),
            Region::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            } => {
                let r = z.norm();
                let mut margin = (r - r_lo).min(r_hi - r);
                let span = theta_hi - theta_lo;
                if span < TAU - 1e-12 {
                    let t = Self::angular_offset(theta_lo, z);
                    let signed = if t <= span {
                        t.min(span - t)
                    } else {
                        -(t - span).min(TAU - t)
                    };
                    margin = margin.min(signed * r);
                }
                margin
            }
        }
    }

    pub fn basepoint(&self) -> C64 {
        match *self {
            Region::Disk { center, .. } => center,
            Region::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            } => C64::from_polar((r_lo * r_hi).sqrt(), (theta_lo + theta_hi) / 2.0),
        }
    }

    /// Closed boundary polyline with `n` samples (first point repeated last).
    pub fn boundary_polyline(&self, n: usize) -> Vec<C64> {
        let n = n.max(16);
        let mut pts = Vec::with_capacity(n + 1);
        match *self {
            Region::Disk { center, radius } => {
                for j in 0..n {
                    let t = TAU * j as f64 / n as f64;
                    pts.push(center + C64::from_polar(radius, t));
                }
            }
            Region::ArcBand {
                theta_lo,
                theta_hi,
                r_lo,
                r_hi,
            } => {
                let quarter = (n / 4).max(4);
                for j in 0..quarter {
                    let t = theta_lo + (theta_hi - theta_lo) * j as f64 / quarter as f64;
                    pts.push(C64::from_polar(r_hi, t));
                }
                for j in 0..quarter {
                    let r = r_hi - (r_hi - r_lo) * j as f64 / quarter as f64;
                    pts.push(C64::from_polar(r, theta_hi));
                }
                for j in 0..quarter {
                    let t = theta_hi - (theta_hi - theta_lo) * j as f64 / quarter as f64;
                    pts.push(C64::from_polar(r_lo, t));
                }
                for j in 0..quarter {
                    let r = r_lo + (r_hi - r_lo) * j as f64 / quarter as f64;
                    pts.push(C64::from_polar(r, theta_lo));
                }
            }
        }
        pts.push(pts[0]);
        pts
    }

    /// Whether a boundary sample lies on (or angularly near) the slit of a
    /// full-turn arc band; such samples bound the region only as a cut, not
    /// as genuine boundary.
    fn near_slit(&self, z: C64) -> bool {
        match *self {
            Region::Disk { .. } => false,
            Region::ArcBand {
                theta_lo, theta_hi, ..
            } => {
                let span = theta_hi - theta_lo;
                if span < TAU - 1e-12 {
                    return false;
                }
                let t = Self::angular_offset(theta_lo, z);
                t < 0.15 || t > span - 0.15
            }
        }
    }

    /// Path from the basepoint to `z` staying inside the region.
    fn path_to(&self, z: C64, steps: usize) -> Vec<C64> {
        let steps = steps.max(2);
        match *self {
            Region::Disk { .. } => {
                let a = self.basepoint();
                (0..=steps)
                    .map(|j| a + (z - a) * C64::new(j as f64 / steps as f64, 0.0))
                    .collect()
            }
            Region::ArcBand { theta_lo, .. } => {
                let a = self.basepoint();
                let (r0, t0) = (a.norm(), Self::angular_offset(theta_lo, a));
                let (r1, t1) = (z.norm(), Self::angular_offset(theta_lo, z));
                (0..=steps)
                    .map(|j| {
                        let s = j as f64 / steps as f64;
                        let r = r0.powf(1.0 - s) * r1.powf(s);
                        let t = theta_lo + t0 + (t1 - t0) * s;
                        C64::from_polar(r, t)
                    })
                    .collect()
            }
        }
    }
}

/// Inverse branch of a repelling system.
#[derive(Debug, Clone)]
pub enum Branch {
    /// `g(z) = a z + b` with `|a| < 1`.
    Affine { a: C64, b: C64 },
    /// A univalent branch of `f^{-l}` determined by `seed`, a preimage of
    /// the region basepoint; evaluated by Newton continuation along paths
    /// inside the region.
    PolyInverse { poly: CPoly, l: u32, seed: C64 },
}

fn iterate_with_deriv(poly: &CPoly, l: u32, z: C64) -> (C64, C64) {
    let mut w = z;
    let mut dw = C64::new(1.0, 0.0);
    for _ in 0..l {
        let (v, dv) = poly.eval_with_deriv(w);
        dw *= dv;
        w = v;
    }
    (w, dw)
}

fn newton_branch(poly: &CPoly, l: u32, target: C64, seed: C64) -> Option<C64> {
    let mut w = seed;
    for _ in 0..60 {
        let (v, dv) = iterate_with_deriv(poly, l, w);
        let r = v - target;
        if r.norm() < 1e-13 * (1.0 + target.norm()) {
            return Some(w);
        }
        if dv.norm() < 1e-280 {
            return None;
        }
        w -= r / dv;
        if !w.is_finite() {
            return None;
        }
    }
    None
}

impl Branch {
    fn validate(&self, region: &Region) -> Result<(), DimensionError> {
        match self {
            Branch::Affine { a, .. } => {
                if a.norm() >= 1.0 {
                    return Err(DimensionError::BranchNotCertified(
                        "affine branch is not a contraction".into(),
                    ));
                }
                Ok(())
            }
            Branch::PolyInverse { poly, l, seed } => {
                if poly.degree() < 2 {
                    return Err(DimensionError::BranchNotCertified(
                        "inverse branch needs a polynomial of degree at least 2".into(),
                    ));
                }
                if *l == 0 {
                    return Err(DimensionError::BranchNotCertified(
                        "inverse branch needs l >= 1".into(),
                    ));
                }
                let base = region.basepoint();
                let polished = newton_branch(poly, *l, base, *seed).ok_or_else(|| {
                    DimensionError::BranchNotCertified(
                        "seed does not converge to a preimage of the basepoint".into(),
                    )
                })?;
                if (polished - *seed).norm() > 0.1 * (1.0 + seed.norm()) {
                    return Err(DimensionError::BranchNotCertified(
                        "seed is far from the preimage it selects".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Evaluates the branch at `z` inside `region`.
    pub fn eval(&self, region: &Region, z: C64) -> Result<C64, DimensionError> {
        match self {
            Branch::Affine { a, b } => Ok(*a * z + *b),
            Branch::PolyInverse { poly, l, seed } => {
                let mut w = *seed;
                for p in region.path_to(z, 32) {
                    w = newton_branch(poly, *l, p, w).ok_or_else(|| {
                        DimensionError::BranchNotCertified(
                            "branch continuation lost the Newton basin".into(),
                        )
                    })?;
                }
                Ok(w)
            }
        }
    }

    /// `|g'(z)|`, the conformal contraction weight at `z`.
    pub fn weight(&self, region: &Region, z: C64) -> Result<f64, DimensionError> {
        match self {
            Branch::Affine { a, .. } => Ok(a.norm()),
            Branch::PolyInverse { poly, l, .. } => {
                let w = self.eval(region, z)?;
                let (_, dv) = iterate_with_deriv(poly, *l, w);
                if dv.norm() < 1e-280 {
                    return Err(DimensionError::BranchNotCertified(
                        "branch image hits a critical point".into(),
                    ));
                }
                Ok(1.0 / dv.norm())
            }
        }
    }

    fn forward(&self, z: C64) -> C64 {
        match self {
            Branch::Affine { a, b } => (z - *b) / *a,
            Branch::PolyInverse { poly, l, .. } => iterate_with_deriv(poly, *l, z).0,
        }
    }
}

/// Certification record for a repelling system.
#[derive(Debug, Clone)]
pub struct Certification {
    pub containment_margin: f64,
    pub min_separation: f64,
    pub expansion: Vec<f64>,
    pub boundary_residual: f64,
}

/// Conformal repelling system: inverse branches mapping the region strictly
/// into itself with certified disjointness, containment and expansion.
#[derive(Debug, Clone)]
pub struct RepellingSystem {
    region: Region,
    branches: Vec<Branch>,
    certification: Certification,
}

/// Winding number of a closed polyline around `w`, or `None` when the
/// polyline passes too close to `w` or a segment turns by more than a half
/// turn.
pub fn winding_polyline(samples: &[C64], w: C64) -> Option<i32> {
    if samples.len() < 4 {
        return None;
    }
    let mut total = 0.0f64;
    for pair in samples.windows(2) {
        let a = pair[0] - w;
        let b = pair[1] - w;
        if a.norm() < 1e-12 || b.norm() < 1e-12 {
            return None;
        }
        let turn = (b / a).arg();
        if turn.abs() > 2.8 {
            return None;
        }
        total += turn;
    }
    let closure = (samples[0] - samples[samples.len() - 1]).norm();
    if closure > 1e-9 * (1.0 + samples[0].norm()) {
        return None;
    }
    let winding = total / TAU;
    if (winding - winding.round()).abs() > 0.3 {
        return None;
    }
    Some(winding.round() as i32)
}

impl RepellingSystem {
    pub fn new(region: Region, branches: Vec<Branch>) -> Result<Self, DimensionError> {
        region.validate()?;
        if branches.is_empty() {
            return Err(DimensionError::BranchNotCertified("no branches given".into()));
        }
        for b in &branches {
            b.validate(&region)?;
        }
        let boundary = region.boundary_polyline(BOUNDARY_SAMPLES);
        let slit: Vec<bool> = boundary.iter().map(|&z| region.near_slit(z)).collect();
        let mut image_boundaries = Vec::with_capacity(branches.len());
        let mut interior_probes = Vec::with_capacity(branches.len());
        let mut containment_margin = f64::INFINITY;
        let mut boundary_residual = 0.0f64;
        for branch in &branches {
            let mut image = Vec::with_capacity(boundary.len());
            for &z in &boundary {
                let w = branch.eval(&region, z)?;
                boundary_residual = boundary_residual.max((branch.forward(w) - z).norm());
                containment_margin = containment_margin.min(region.interior_margin(w));
                image.push(w);
            }
            image_boundaries.push(image);
            interior_probes.push(branch.eval(&region, region.basepoint())?);
        }
        if !(containment_margin > 0.0) {
            return Err(DimensionError::BranchNotCertified(format!(
                "branch images are not compactly contained (margin {containment_margin:.3e})"
            )));
        }
        if boundary_residual > 1e-8 {
            return Err(DimensionError::BranchNotCertified(format!(
                "branch is not a right inverse on the boundary (residual {boundary_residual:.3e})"
            )));
        }
        let mut min_separation = f64::INFINITY;
        for i in 0..branches.len() {
            for j in (i + 1)..branches.len() {
                let mut gap = f64::INFINITY;
                for (a_idx, &a) in image_boundaries[i].iter().enumerate() {
                    if slit[a_idx.min(slit.len() - 1)] {
                        continue;
                    }
                    for (b_idx, &b) in image_boundaries[j].iter().enumerate().step_by(2) {
                        if slit[b_idx.min(slit.len() - 1)] {
                            continue;
                        }
                        gap = gap.min((a - b).norm());
                    }
                }
                let inside = winding_polyline(&image_boundaries[j], interior_probes[i])
                    .map(|w| w != 0)
                    .unwrap_or(true);
                let inside_rev = winding_polyline(&image_boundaries[i], interior_probes[j])
                    .map(|w| w != 0)
                    .unwrap_or(true);
                let mut crossing = false;
                for (pair_a, pair_b) in [(i, j), (j, i)] {
                    for (a_idx, &a) in image_boundaries[pair_a].iter().enumerate().step_by(3) {
                        if slit[a_idx.min(slit.len() - 1)] {
                            continue;
                        }
                        if matches!(
                            winding_polyline(&image_boundaries[pair_b], a),
                            Some(w) if w != 0
                        ) {
                            crossing = true;
                            break;
                        }
                    }
                    if crossing {
                        break;
                    }
                }
                if !(gap > 0.0) || inside || inside_rev || crossing {
                    return Err(DimensionError::BranchNotCertified(format!(
                        "branch images {i} and {j} are not disjoint"
                    )));
                }
                min_separation = min_separation.min(gap);
            }
        }
        let mut expansion = Vec::with_capacity(branches.len());
        for branch in &branches {
            let mut least = f64::INFINITY;
            for &z in boundary.iter().chain(std::iter::once(&region.basepoint())) {
                let w = branch.weight(&region, z)?;
                least = least.min(1.0 / w);
            }
            if !(least > 1.0) {
                return Err(DimensionError::BranchNotCertified(format!(
                    "branch expansion {least:.6} is not greater than 1"
                )));
            }
            expansion.push(least);
        }
        for (k, branch) in branches.iter().enumerate() {
            if let Branch::PolyInverse { .. } = branch {
                let image = &image_boundaries[k];
                let forward: Vec<C64> = image.iter().map(|&w| branch.forward(w)).collect();
                for &probe in &interior_probes {
                    if !region.contains(probe) {
                        continue;
                    }
                    match winding_polyline(&forward, probe) {
                        Some(1) => {}
                        other => {
                            return Err(DimensionError::BranchNotCertified(format!(
                                "branch {k} univalence winding check returned {other:?}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(RepellingSystem {
            region,
            branches,
            certification: Certification {
                containment_margin,
                min_separation: if min_separation.is_finite() {
                    min_separation
                } else {
                    0.0
                },
                expansion,
                boundary_residual,
            },
        })
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn certification(&self) -> &Certification {
        &self.certification
    }

    fn word_count(&self, depth: u32) -> Result<usize, DimensionError> {
        let b = self.branches.len();
        let mut count = 1usize;
        for _ in 0..depth {
            count = count
                .checked_mul(b)
                .filter(|&c| c <= WORD_BUDGET)
                .ok_or(DimensionError::DepthBudgetExceeded)?;
        }
        Ok(count)
    }

    /// Representatives of all depth-`depth` cylinders: the word
    /// `(u_1, ..., u_d)` is represented by `g_{u_1} ∘ ... ∘ g_{u_d}`
    /// applied to the region basepoint.
    pub fn cylinder_points(&self, depth: u32) -> Result<Vec<C64>, DimensionError> {
        let b = self.branches.len();
        self.word_count(depth)?;
        let mut points = vec![self.region.basepoint()];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(points.len() * b);
            for branch in &self.branches {
                for &x in &points {
                    next.push(branch.eval(&self.region, x)?);
                }
            }
            points = next;
        }
        Ok(points)
    }
}

/// Samples of the non-escaping set: depth-`depth` cylinder representatives,
/// with the forward-invariance residual checked on every sample.
pub fn nonescaping_set(
    system: &RepellingSystem,
    depth: u32,
) -> Result<Vec<C64>, DimensionError> {
    let points = system.cylinder_points(depth)?;
    for &x in &points {
        if !system.region.contains(x) {
            return Err(DimensionError::BranchNotCertified(format!(
                "cylinder representative {x} escaped the region"
            )));
        }
    }
    Ok(points)
}

fn word_points_and_weights(
    system: &RepellingSystem,
    depth: u32,
) -> Result<(Vec<C64>, Vec<Vec<f64>>), DimensionError> {
    let points = system.cylinder_points(depth)?;
    let mut weights = Vec::with_capacity(system.branches.len());
    for branch in &system.branches {
        let mut row = Vec::with_capacity(points.len());
        for &x in &points {
            row.push(branch.weight(&system.region, x)?);
        }
        weights.push(row);
    }
    Ok((points, weights))
}

fn leading_eigenvalue(
    weights: &[Vec<f64>],
    n_states: usize,
    n_branches: usize,
    s: f64,
) -> Result<f64, DimensionError> {
    let stride = n_states / n_branches.max(1);
    let mut v = vec![1.0f64; n_states];
    let mut lambda_prev = 0.0f64;
    for iter in 0..POWER_ITERATION_MAX {
        let mut next = vec![0.0f64; n_states];
        for u in 0..n_states {
            let head = u / n_branches;
            let mut acc = 0.0;
            for (i, row) in weights.iter().enumerate() {
                acc += row[u].powf(s) * v[i * stride + head];
            }
            next[u] = acc;
        }
        let norm: f64 = next.iter().sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(DimensionError::EigenvalueNotConverged);
        }
        let lambda = norm / v.iter().sum::<f64>();
        for x in &mut next {
            *x /= norm / n_states as f64;
        }
        v = next;
        if iter > 2 && (lambda - lambda_prev).abs() <= POWER_ITERATION_TOL * lambda.abs() {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(DimensionError::EigenvalueNotConverged)
}

fn pressure_root(
    system: &RepellingSystem,
    depth: u32,
    bracket: (f64, f64),
) -> Result<f64, DimensionError> {
    let n_branches = system.branches.len();
    let (points, weights) = word_points_and_weights(system, depth)?;
    let n_states = points.len();
    let lambda = |s: f64| leading_eigenvalue(&weights, n_states, n_branches, s);
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) {
        return Err(DimensionError::InvalidParameter("empty bracket".into()));
    }
    let f_lo = lambda(lo)?;
    let f_hi = lambda(hi)?;
    if !(f_lo >= 1.0 && f_hi <= 1.0) {
        return Err(DimensionError::BracketDoesNotStraddle);
    }
    let probe = lambda(lo + 0.75 * (hi - lo))?;
    if probe > lambda(lo + 0.25 * (hi - lo))? + 1e-9 {
        return Err(DimensionError::BracketDoesNotStraddle);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-9 {
            return Ok(mid);
        }
        if lambda(mid)? >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bowen-pressure dimension: the `s` in `bracket` at which the leading
/// eigenvalue of the transfer operator with weights `|g'|^s` on depth-`depth`
/// cylinders equals 1; certified by agreement with the refinement at
/// `depth + 1` within 1e-3.
pub fn pressure_dimension(
    system: &RepellingSystem,
    depth: u32,
    bracket: (f64, f64),
) -> Result<f64, DimensionError> {
    let coarse = pressure_root(system, depth, bracket)?;
    let fine = pressure_root(system, depth + 1, bracket)?;
    if (coarse - fine).abs() > 1e-3 {
        return Err(DimensionError::EigenvalueNotConverged);
    }
    Ok(fine)
}

/// Root of the Moran equation `sum r_k^s = 1`, bisected to 1e-12.
pub fn moran_dimension(ratios: &[f64]) -> Result<f64, DimensionError> {
    if ratios.is_empty() {
        return Err(DimensionError::InvalidParameter("empty ratio list".into()));
    }
    for &r in ratios {
        if !(r > 0.0 && r < 1.0) {
            return Err(DimensionError::InvalidParameter(format!(
                "ratio {r} outside (0, 1)"
            )));
        }
    }
    let total = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>();
    if ratios.len() == 1 {
        return Ok(0.0);
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while total(hi) > 1.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(DimensionError::InvalidParameter(
                "moran equation has no root in range".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 {
            return Ok(mid);
        }
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dimension lower bound `(C1 + log eta + 4 pi eta) /
/// (log C2 + (q+1) log eta + 2 pi eta)`.
pub fn shishikura_bound(eta: f64, c1: f64, c2: f64, q: u32) -> Result<f64, DimensionError> {
    if !(eta > 1.0) {
        return Err(DimensionError::InvalidParameter("eta must exceed 1".into()));
    }
    if !(c2 > 0.0) {
        return Err(DimensionError::InvalidParameter("C2 must be positive".into()));
    }
    if q == 0 {
        return Err(DimensionError::InvalidParameter("q must be at least 1".into()));
    }
    let pi = std::f64::consts::PI;
    Ok((c1 + eta.ln() + 4.0 * pi * eta) / (c2.ln() + (q as f64 + 1.0) * eta.ln() + 2.0 * pi * eta))
}

/// Width `sup - inf` of a continuous argument branch along the sample path.
pub fn angular_width(samples: &[C64]) -> Result<f64, DimensionError> {
    if samples.is_empty() {
        return Err(DimensionError::InvalidParameter("empty sample set".into()));
    }
    let mut arg = samples[0].arg();
    if samples[0].norm() < 1e-12 {
        return Err(DimensionError::OriginInDomain);
    }
    let mut lo = arg;
    let mut hi = arg;
    for pair in samples.windows(2) {
        if pair[1].norm() < 1e-12 {
            return Err(DimensionError::OriginInDomain);
        }
        arg += (pair[1] / pair[0]).arg();
        lo = lo.min(arg);
        hi = hi.max(arg);
    }
    Ok(hi - lo)
}

/// The bound `c(r) = 4 log((1+r)/(1-r))` on the angular width of `f(D(0,r))`
/// over univalent maps `f` fixing no constraint beyond `0 notin f(D)`.
pub fn bound_c(r: f64) -> Result<f64, DimensionError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(DimensionError::InvalidParameter(format!(
            "radius {r} outside (0, 1)"
        )));
    }
    Ok(4.0 * ((1.0 + r) / (1.0 - r)).ln())
}

/// Pressure dimension of the Julia set of `z^2 + c` for small `|c|`, via the
/// full binary shift on inverse-branch cylinders rooted at the repelling
/// fixed point.
pub fn julia_pressure_dimension(c: C64, depth: u32) -> Result<f64, DimensionError> {
    let disc = (C64::new(1.0, 0.0) - C64::new(4.0, 0.0) * c).sqrt();
    let beta = (C64::new(1.0, 0.0) + disc) / C64::new(2.0, 0.0);
    if (beta * C64::new(2.0, 0.0)).norm() <= 1.0 {
        return Err(DimensionError::InvalidParameter(
            "fixed point is not repelling".into(),
        ));
    }
    let b = 2usize;
    let mut count = 1usize;
    for _ in 0..depth {
        count = count
            .checked_mul(b)
            .filter(|&n| n <= WORD_BUDGET)
            .ok_or(DimensionError::DepthBudgetExceeded)?;
    }
    let branch = |sign: usize, z: C64| -> C64 {
        let root = (z - c).sqrt();
        if sign == 0 {
            root
        } else {
            -root
        }
    };
    let reps = |k: u32| -> Result<Vec<C64>, DimensionError> {
        let mut points = vec![beta];
        for _ in 0..k {
            let mut next = Vec::with_capacity(points.len() * 2);
            for sign in 0..2 {
                for &x in &points {
                    let w = branch(sign, x);
                    if !w.is_finite() || w.norm() < 1e-9 {
                        return Err(DimensionError::BranchNotCertified(
                            "julia cylinder hit the critical orbit".into(),
                        ));
                    }
                    next.push(w);
                }
            }
            points = next;
        }
        Ok(points)
    };
    let root_at = |k: u32| -> Result<f64, DimensionError> {
        let points = reps(k)?;
        let n_states = points.len();
        let weights: Vec<Vec<f64>> = (0..2)
            .map(|sign| {
                points
                    .iter()
                    .map(|&x| 1.0 / (2.0 * branch(sign, x).norm()))
                    .collect()
            })
            .collect();
        let lambda = |s: f64| leading_eigenvalue(&weights, n_states, 2, s);
        let mut lo = 0.5f64;
        let mut hi = 2.0f64;
        if !(lambda(lo)? >= 1.0 && lambda(hi)? <= 1.0) {
            return Err(DimensionError::BracketDoesNotStraddle);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo < 1e-9 {
                return Ok(mid);
            }
            if lambda(mid)? >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let coarse = root_at(depth.saturating_sub(1))?;
    let fine = root_at(depth)?;
    if (coarse - fine).abs() > 5e-3 {
        return Err(DimensionError::EigenvalueNotConverged);
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cantor_system() -> RepellingSystem {
        let region = Region::Disk {
            center: c(0.5, 0.0),
            radius: 0.52,
        };
        let third = c(1.0 / 3.0, 0.0);
        RepellingSystem::new(
            region,
            vec![
                Branch::Affine {
                    a: third,
                    b: c(0.0, 0.0),
                },
                Branch::Affine {
                    a: third,
                    b: c(2.0 / 3.0, 0.0),
                },
            ],
        )
        .unwrap()
    }

    fn circle_system() -> RepellingSystem {
        let region = Region::ArcBand {
            theta_lo: 0.0,
            theta_hi: TAU,
            r_lo: 0.8,
            r_hi: 1.25,
        };
        let square = CPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        RepellingSystem::new(
            region,
            vec![
                Branch::PolyInverse {
                    poly: square.clone(),
                    l: 1,
                    seed: c(0.0, 1.0),
                },
                Branch::PolyInverse {
                    poly: square,
                    l: 1,
                    seed: c(0.0, -1.0),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn cantor_certification_and_dimension() {
        let system = cantor_system();
        let cert = system.certification();
        assert!(cert.containment_margin > 0.0);
        assert!(cert.min_separation > 0.2);
        assert!(cert.expansion.iter().all(|&e| (e - 3.0).abs() < 1e-9));
        let dim = pressure_dimension(&system, 6, (0.1, 1.0)).unwrap();
        let oracle = 2.0f64.ln() / 3.0f64.ln();
        assert!((dim - oracle).abs() < 1e-3, "dim {dim} vs {oracle}");
    }

    #[test]
    fn single_branch_dimension_is_zero() {
        let region = Region::Disk {
            center: c(0.0, 0.0),
            radius: 1.0,
        };
        let system = RepellingSystem::new(
            region,
            vec![Branch::Affine {
                a: c(0.5, 0.0),
                b: c(0.0, 0.0),
            }],
        )
        .unwrap();
        let dim = pressure_dimension(&system, 6, (-0.5, 1.0)).unwrap();
        assert!(dim.abs() < 1e-3, "dim {dim}");
        let samples = nonescaping_set(&system, 8).unwrap();
        assert_eq!(samples.len(), 1);
        assert!(samples.iter().all(|z| z.norm() < 0.01));
    }

    #[test]
    fn half_quarter_system_matches_the_moran_root() {
        let region = Region::Disk {
            center: c(0.5, 0.0),
            radius: 0.55,
        };
        let system = RepellingSystem::new(
            region,
            vec![
                Branch::Affine {
                    a: c(0.5, 0.0),
                    b: c(0.0, 0.0),
                },
                Branch::Affine {
                    a: c(0.25, 0.0),
                    b: c(0.75, 0.0),
                },
            ],
        )
        .unwrap();
        let dim = pressure_dimension(&system, 6, (0.1, 1.0)).unwrap();
        let oracle = moran_dimension(&[0.5, 0.25]).unwrap();
        assert!((oracle - 0.69424).abs() < 1e-4, "oracle {oracle}");
        assert!((dim - oracle).abs() < 1e-3, "dim {dim} vs {oracle}");
    }

    #[test]
    fn moran_closed_forms() {
        let two_thirds = moran_dimension(&[1.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((two_thirds - 2.0f64.ln() / 3.0f64.ln()).abs() < 1e-11);
        assert_eq!(moran_dimension(&[0.37]).unwrap(), 0.0);
        let interval = moran_dimension(&[0.5, 0.5]).unwrap();
        assert!((interval - 1.0).abs() < 1e-11);
        assert!(moran_dimension(&[]).is_err());
        assert!(moran_dimension(&[1.5]).is_err());
    }

    #[test]
    fn circle_system_certifies_and_has_dimension_one() {
        let system = circle_system();
        let cert = system.certification();
        assert!(cert.containment_margin > 0.0, "margin {}", cert.containment_margin);
        assert!(cert.expansion.iter().all(|&e| e > 1.5));
        let samples = nonescaping_set(&system, 8).unwrap();
        assert_eq!(samples.len(), 256);
        for z in &samples {
            assert!((z.norm() - 1.0).abs() < 1e-8, "|z| = {}", z.norm());
        }
        let dim = pressure_dimension(&system, 6, (0.5, 1.5)).unwrap();
        assert!((dim - 1.0).abs() < 1e-3, "dim {dim}");
    }

    #[test]
    fn disjointness_violations_are_rejected() {
        let region = Region::Disk {
            center: c(0.5, 0.0),
            radius: 0.52,
        };
        let err = RepellingSystem::new(
            region,
            vec![
                Branch::Affine {
                    a: c(0.6, 0.0),
                    b: c(0.0, 0.0),
                },
                Branch::Affine {
                    a: c(0.6, 0.0),
                    b: c(0.4, 0.0),
                },
            ],
        );
        assert!(matches!(err, Err(DimensionError::BranchNotCertified(_))));
    }

    #[test]
    fn bracket_that_does_not_straddle_is_reported() {
        let system = cantor_system();
        assert!(matches!(
            pressure_dimension(&system, 5, (0.9, 1.5)),
            Err(DimensionError::BracketDoesNotStraddle)
        ));
    }

    #[test]
    fn depth_budget_is_enforced() {
        let system = cantor_system();
        assert!(matches!(
            nonescaping_set(&system, 40),
            Err(DimensionError::DepthBudgetExceeded)
        ));
    }

    #[test]
    fn shishikura_bound_values() {
        let v = shishikura_bound(10.0, 0.0, 1.0, 1).unwrap();
        assert!((v - 1.8976).abs() < 1e-4, "bound {v}");
        let far = shishikura_bound(1e6, 0.0, 1.0, 1).unwrap();
        assert!((far - 2.0).abs() < 1e-4, "bound {far}");
        let q2 = shishikura_bound(10.0, 0.0, 1.0, 2).unwrap();
        let q5 = shishikura_bound(10.0, 0.0, 1.0, 5).unwrap();
        assert!(v > q2 && q2 > q5);
        assert!(shishikura_bound(0.5, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn angular_width_of_a_translated_disk() {
        let d = 2.0_f64;
        let r = 0.5_f64;
        let t_star = (r / d).asin();
        let mut samples = Vec::new();
        let n = 720;
        for j in 0..=n {
            let t = TAU * j as f64 / n as f64;
            samples.push(c(d, 0.0) + C64::from_polar(r, t));
        }
        samples.push(C64::from_polar((d * d - r * r).sqrt(), t_star));
        samples.push(C64::from_polar((d * d - r * r).sqrt(), -t_star));
        let width = angular_width(&samples).unwrap();
        let exact = 2.0 * (r / d).asin();
        assert!((width - exact).abs() < 1e-9, "width {width} vs {exact}");
        assert!(width <= bound_c(r).unwrap());
    }

    #[test]
    fn angular_width_rejects_the_origin() {
        assert!(matches!(
            angular_width(&[c(1.0, 0.0), c(0.0, 0.0)]),
            Err(DimensionError::OriginInDomain)
        ));
    }

    #[test]
    fn julia_pressure_dimension_of_the_circle_is_one() {
        let dim = julia_pressure_dimension(c(0.0, 0.0), 10).unwrap();
        assert!((dim - 1.0).abs() < 1e-6, "dim {dim}");
    }

    #[test]
    fn winding_polyline_counts_turns() {
        let mut square = vec![c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)];
        let dense: Vec<C64> = square
            .iter()
            .zip(square.iter().cycle().skip(1))
            .flat_map(|(&a, &b)| (0..16).map(move |j| a + (b - a) * c(j as f64 / 16.0, 0.0)))
            .collect();
        square = dense;
        square.push(square[0]);
        assert_eq!(winding_polyline(&square, c(0.0, 0.0)), Some(1));
        assert_eq!(winding_polyline(&square, c(3.0, 0.0)), Some(0));
    }
}
