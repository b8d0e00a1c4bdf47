//! Dynamics of monic centered polynomials: Green's function and Böttcher
//! coordinates near infinity, external-ray tracing with certified landing,
//! holomorphic motion of finite hyperbolic sets, escape-time rasters, and a
//! box-counting dimension estimator for planar point clouds.

use rayon::prelude::*;
use std::collections::HashSet;
use thiserror::Error;

use crate::C64;

/// Relative tolerance for the Green's function and Böttcher residuals.
pub const BOTTCHER_TOL: f64 = 1e-9;
/// Successive-difference tolerance for the inverse-limit motion iteration.
pub const MOTION_TOL: f64 = 1e-10;
/// Geometric decay of the potential per accepted ray step.
pub const RAY_DECAY: f64 = 0.85;
/// Window length and ball radius for declaring an external ray landed.
pub const RAY_LANDING_WINDOW: usize = 20;
pub const RAY_LANDING_BALL: f64 = 1e-8;
/// Hard cap on the number of samples per traced ray.
pub const RAY_SAMPLE_BUDGET: usize = 4000;

#[derive(Debug, Error)]
pub enum PolyDynError {
    #[error("polynomial must be monic, centered, and of degree at least 2")]
    InvalidPolynomial,
    #[error("external angle must have a nonzero denominator")]
    InvalidAngle,
    #[error("point lies inside the pullback region; the root product is not certified there")]
    InsidePullbackRegion,
    #[error("ray continuation failed near a critical orbit at step {step}")]
    RayBifurcation { step: usize },
    #[error("ray did not settle into a landing ball within the sample budget")]
    NoLandingAtBudget,
    #[error("hyperbolic set is not forward invariant within matching tolerance")]
    SetNotInvariant,
    #[error("expansion certificate failed at point {index}: |(f^m)'| = {value}")]
    SetNotExpanding { index: usize, value: f64 },
    #[error("inverse branch left its certified disk at orbit depth {depth}")]
    BranchEscape { depth: usize },
    #[error("motion iteration did not converge within the depth budget")]
    MotionNotConverged,
    #[error("raster resolution must be positive in both directions")]
    EmptyRaster,
    #[error("box-count fit is degenerate: {0}")]
    DegenerateFit(String),
}

/// Monic centered polynomial `z^d + a_{d-2} z^{d-2} + ... + a_0` with `d >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    /// Builds from the lower coefficients `[a_0, ..., a_{d-2}]`; the degree is
    /// `lower.len() + 1`.
    pub fn new(lower: &[C64]) -> Result<Self, PolyDynError> {
        if lower.is_empty() {
            return Err(PolyDynError::InvalidPolynomial);
        }
        let mut coeffs = lower.to_vec();
        coeffs.push(C64::new(0.0, 0.0));
        coeffs.push(C64::new(1.0, 0.0));
        Ok(Polynomial { coeffs })
    }

    /// Builds from a full ascending coefficient list, which must already be
    /// monic with vanishing subleading coefficient.
    pub fn from_coeffs(coeffs: &[C64]) -> Result<Self, PolyDynError> {
        let d = coeffs.len().saturating_sub(1);
        if d < 2 {
            return Err(PolyDynError::InvalidPolynomial);
        }
        if (coeffs[d] - C64::new(1.0, 0.0)).norm() > 1e-12 || coeffs[d - 1].norm() > 1e-12 {
            return Err(PolyDynError::InvalidPolynomial);
        }
        let mut c = coeffs.to_vec();
        c[d] = C64::new(1.0, 0.0);
        c[d - 1] = C64::new(0.0, 0.0);
        Ok(Polynomial { coeffs: c })
    }

    /// The quadratic `z^2 + c`.
    pub fn quadratic(c: C64) -> Self {
        Polynomial {
            coeffs: vec![c, C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        }
    }

    /// The monomial `z^d`.
    pub fn monomial(d: usize) -> Result<Self, PolyDynError> {
        if d < 2 {
            return Err(PolyDynError::InvalidPolynomial);
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); d + 1];
        coeffs[d] = C64::new(1.0, 0.0);
        Ok(Polynomial { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn eval_with_deriv(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn iterate(&self, z: C64, n: usize) -> C64 {
        let mut w = z;
        for _ in 0..n {
            w = self.eval(w);
        }
        w
    }

    /// Evaluates `f^n` together with the chain-rule derivative `(f^n)'`.
    pub fn iterate_with_deriv(&self, z: C64, n: usize) -> (C64, C64) {
        let mut w = z;
        let mut dw = C64::new(1.0, 0.0);
        for _ in 0..n {
            let (p, dp) = self.eval_with_deriv(w);
            dw *= dp;
            w = p;
        }
        (w, dw)
    }

    fn lower_norm(&self) -> f64 {
        let d = self.degree();
        self.coeffs[..d - 1].iter().map(|c| c.norm()).sum()
    }

    /// Radius beyond which the orbit provably escapes with `|f(z)| >= 2|z|`.
    pub fn escape_radius(&self) -> f64 {
        (2.0 * (1.0 + self.lower_norm())).max(4.0)
    }
}

/// Green's function `G(z) = lim log^+ |f^n(z)| / d^n`; zero on bounded orbits.
pub fn green(f: &Polynomial, z: C64) -> f64 {
    let d = f.degree() as f64;
    let escape = f.escape_radius();
    let mut w = z;
    let mut n = 0u32;
    for _ in 0..50_000 {
        if w.norm() > escape {
            let mut g_prev = w.norm().ln() / d.powi(n as i32);
            loop {
                if w.norm().ln() * d > 600.0 {
                    return g_prev;
                }
                w = f.eval(w);
                n += 1;
                let g = w.norm().ln() / d.powi(n as i32);
                if (g - g_prev).abs() < 1e-14 * g.max(1.0) {
                    return g;
                }
                g_prev = g;
            }
        }
        w = f.eval(w);
        n += 1;
    }
    0.0
}

/// Böttcher coordinate `phi(z) = z * prod (f^{n+1}(z) / (f^n(z))^d)^{1/d^{n+1}}`
/// with principal roots; certified only where every factor stays within the
/// principal branch, otherwise `InsidePullbackRegion`.
pub fn bottcher(f: &Polynomial, z: C64) -> Result<C64, PolyDynError> {
    let d = f.degree();
    if z.norm() < 1e-280 {
        return Err(PolyDynError::InsidePullbackRegion);
    }
    let mut w = z;
    let mut acc = C64::new(0.0, 0.0);
    let mut scale = 1.0 / d as f64;
    for _ in 0..700 {
        if w.norm().ln() > 600.0 / d as f64 {
            break;
        }
        let wd = power(w, d);
        let wn = f.eval(w);
        let u = (wn - wd) / wd;
        if !u.is_finite() || u.norm() >= 0.75 {
            return Err(PolyDynError::InsidePullbackRegion);
        }
        let term = (C64::new(1.0, 0.0) + u).ln() * scale;
        acc += term;
        if term.norm() < 1e-18 {
            break;
        }
        w = wn;
        scale /= d as f64;
    }
    Ok(z * acc.exp())
}

fn power(z: C64, d: usize) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    let mut base = z;
    let mut e = d;
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

/// Solves `phi(z) = v` in the region where the root product converges,
/// by multiplicative fixed-point correction.
fn bottcher_preimage(f: &Polynomial, v: C64) -> Result<C64, PolyDynError> {
    let mut z = v;
    for _ in 0..200 {
        let phi = bottcher(f, z)?;
        let err = phi - v;
        if err.norm() < 1e-13 * v.norm() {
            return Ok(z);
        }
        z *= v / phi;
    }
    Err(PolyDynError::RayBifurcation { step: 0 })
}

/// Reduced rational external angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Angle {
    pub num: u64,
    pub den: u64,
}

impl Angle {
    pub fn new(num: u64, den: u64) -> Result<Self, PolyDynError> {
        if den == 0 {
            return Err(PolyDynError::InvalidAngle);
        }
        let num = num % den;
        let g = gcd(num.max(1), den);
        Ok(Angle {
            num: num / if num == 0 { 1 } else { g },
            den: if num == 0 { 1 } else { den / g },
        })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// The angle multiplied by `d^k`, reduced mod 1 exactly.
    pub fn doubled(&self, d: u64, k: u32) -> Angle {
        let mut num = self.num as u128;
        let den = self.den as u128;
        for _ in 0..k {
            num = (num * d as u128) % den;
        }
        Angle {
            num: num as u64,
            den: self.den,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Traced external ray: samples `(G, z)` with strictly decreasing potential.
#[derive(Debug, Clone)]
pub struct ExternalRay {
    pub theta: Angle,
    pub samples: Vec<(f64, C64)>,
    pub landing: Option<C64>,
}

/// The point of the ray at potential `g`, found by pulling the Böttcher
/// anchor at potential `d^k g` back through `f^k` with Newton steps.
fn solve_on_ray(
    f: &Polynomial,
    theta: Angle,
    g: f64,
    seed: Option<C64>,
    step: usize,
) -> Result<C64, PolyDynError> {
    let d = f.degree();
    let g_safe = f.escape_radius().ln();
    let mut k = 0u32;
    let mut gk = g;
    while gk < g_safe {
        gk *= d as f64;
        k += 1;
    }
    let ang = theta.doubled(d as u64, k);
    let v = C64::from_polar(gk.exp(), 2.0 * std::f64::consts::PI * ang.value());
    let anchor = bottcher_preimage(f, v)?;
    if k == 0 {
        return Ok(anchor);
    }
    let tracked = seed.is_some();
    let mut z = seed.unwrap_or(anchor);
    let origin = z;
    let mut last_step = f64::INFINITY;
    for _ in 0..80 {
        let (w, dw) = f.iterate_with_deriv(z, k as usize);
        if dw.norm() < 1e-280 {
            return Err(PolyDynError::RayBifurcation { step });
        }
        let mut delta = (w - anchor) / dw;
        let max_step = 0.5 * (1.0 + z.norm());
        if delta.norm() > max_step {
            delta *= max_step / delta.norm();
        }
        z -= delta;
        if tracked && (z - origin).norm() > 0.5 * (1.0 + z.norm()) {
            return Err(PolyDynError::RayBifurcation { step });
        }
        last_step = delta.norm();
        if last_step < 1e-13 * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    if last_step < 1e-9 * (1.0 + z.norm()) {
        Ok(z)
    } else {
        Err(PolyDynError::RayBifurcation { step })
    }
}

/// Single ray point at potential `g > 0`, marched down from the escape region.
pub fn ray_point(f: &Polynomial, theta: Angle, g: f64) -> Result<C64, PolyDynError> {
    let g_top = f.escape_radius().ln() * 1.25;
    if g >= g_top {
        return solve_on_ray(f, theta, g, None, 0);
    }
    let mut cur = g_top;
    let mut z = solve_on_ray(f, theta, cur, None, 0)?;
    let mut step = 0usize;
    while cur > g {
        let next = (cur * RAY_DECAY).max(g);
        z = march_step(f, theta, cur, next, z, &mut step)?;
        cur = next;
    }
    Ok(z)
}

/// Advances one sample from a point known at potential `g_from` down to
/// `g_to`, splitting the descent at the geometric mean whenever the Newton
/// correction fails to track the ray.
fn march_step(
    f: &Polynomial,
    theta: Angle,
    g_from: f64,
    g_to: f64,
    seed: C64,
    step: &mut usize,
) -> Result<C64, PolyDynError> {
    *step += 1;
    let mut cur = g_from;
    let mut z = seed;
    let mut target = g_to;
    let mut splits = 0usize;
    loop {
        match solve_on_ray(f, theta, target, Some(z), *step) {
            Ok(p) => {
                if target <= g_to {
                    return Ok(p);
                }
                cur = target;
                z = p;
                target = g_to;
            }
            Err(e) => {
                splits += 1;
                if splits > 40 || (cur - target).abs() < 1e-14 * cur {
                    return Err(e);
                }
                target = (cur * target).sqrt();
            }
        }
    }
}

/// Traces the external ray at angle `theta` down to potential `g_min`.
///
/// When `g_min <= 1e-8` a landing point is required: the ray is continued
/// until twenty consecutive samples fit in a ball of radius `1e-8`, and
/// `NoLandingAtBudget` is returned if the sample budget runs out first.
pub fn external_ray(
    f: &Polynomial,
    theta: Angle,
    g_min: f64,
) -> Result<ExternalRay, PolyDynError> {
    if !(g_min > 0.0) {
        return Err(PolyDynError::InvalidAngle);
    }
    let want_landing = g_min <= 1e-8;
    let g_top = f.escape_radius().ln() * 1.25;
    let mut samples: Vec<(f64, C64)> = Vec::new();
    let mut g = g_top;
    let mut z = solve_on_ray(f, theta, g, None, 0)?;
    samples.push((g, z));
    let mut step = 0usize;
    let mut landing = None;
    while samples.len() < RAY_SAMPLE_BUDGET {
        let next = g * RAY_DECAY;
        if !want_landing && next < g_min {
            break;
        }
        z = march_step(f, theta, g, next, z, &mut step)?;
        g = next;
        samples.push((g, z));
        if samples.len() >= RAY_LANDING_WINDOW {
            let tail = &samples[samples.len() - RAY_LANDING_WINDOW..];
            let last = tail[tail.len() - 1].1;
            if tail.iter().all(|&(_, p)| (p - last).norm() < RAY_LANDING_BALL) {
                landing = Some(last);
                if want_landing {
                    break;
                }
            }
        }
        if landing.is_some() && g <= g_min {
            break;
        }
    }
    if want_landing && landing.is_none() {
        return Err(PolyDynError::NoLandingAtBudget);
    }
    Ok(ExternalRay {
        theta,
        samples,
        landing,
    })
}

/// Finite forward-invariant set with a certified expanding iterate, carrying
/// the conformal weight `rho(z) = sum_{k<m} |(f0^k)'(z)|` used to measure the
/// inverse-branch disks.
#[derive(Debug, Clone)]
pub struct HyperbolicSetMotion {
    base: Polynomial,
    points: Vec<C64>,
    sigma: Vec<usize>,
    rho: Vec<f64>,
    radius: f64,
}

impl HyperbolicSetMotion {
    /// Certifies forward invariance of `points` under `base` and expansion of
    /// the `m`-th iterate at every point; `radius` is measured in the
    /// `rho`-weighted metric.
    pub fn new(
        base: Polynomial,
        points: Vec<C64>,
        m: u32,
        radius: f64,
    ) -> Result<Self, PolyDynError> {
        if points.is_empty() || m == 0 || !(radius > 0.0) {
            return Err(PolyDynError::SetNotInvariant);
        }
        let mut sigma = Vec::with_capacity(points.len());
        for &x in &points {
            let y = base.eval(x);
            let j = points
                .iter()
                .position(|&p| (p - y).norm() < 1e-8)
                .ok_or(PolyDynError::SetNotInvariant)?;
            sigma.push(j);
        }
        let mut rho = Vec::with_capacity(points.len());
        for (i, &x) in points.iter().enumerate() {
            let mut w = x;
            let mut der = 1.0;
            let mut weight = 0.0;
            for _ in 0..m {
                weight += der;
                let (p, dp) = base.eval_with_deriv(w);
                der *= dp.norm();
                w = p;
            }
            if der <= 1.0 + 1e-12 {
                return Err(PolyDynError::SetNotExpanding {
                    index: i,
                    value: der,
                });
            }
            rho.push(weight);
        }
        Ok(HyperbolicSetMotion {
            base,
            points,
            sigma,
            rho,
            radius,
        })
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn base(&self) -> &Polynomial {
        &self.base
    }

    fn orbit_index(&self, start: usize, steps: usize) -> usize {
        let mut i = start;
        for _ in 0..steps {
            i = self.sigma[i];
        }
        i
    }
}

fn newton_preimage(f: &Polynomial, target: C64, seed: C64) -> Option<C64> {
    let mut w = seed;
    let scale = 1.0 + target.norm();
    for _ in 0..60 {
        let (p, dp) = f.eval_with_deriv(w);
        let r = p - target;
        if r.norm() < 1e-14 * scale {
            return Some(w);
        }
        if dp.norm() < 1e-280 {
            return None;
        }
        w -= r / dp;
    }
    let (p, _) = f.eval_with_deriv(w);
    if (p - target).norm() < 1e-11 * scale {
        Some(w)
    } else {
        None
    }
}

/// Image of the hyperbolic set under the holomorphic motion toward `f`,
/// computed by the inverse-limit formula: the depth-`n` approximation pulls
/// `f0^{n+1}(x)` back through `n+1` inverse branches of `f`, each certified to
/// stay inside the `rho`-disk around the corresponding base orbit point.
pub fn motion_hyperbolic_set(
    motion: &HyperbolicSetMotion,
    f: &Polynomial,
) -> Result<Vec<C64>, PolyDynError> {
    if f.degree() != motion.base.degree() {
        return Err(PolyDynError::SetNotInvariant);
    }
    let mut out = Vec::with_capacity(motion.points.len());
    for i in 0..motion.points.len() {
        let mut prev: Option<C64> = None;
        let mut value = None;
        for n in 0..400usize {
            let mut p = motion.points[motion.orbit_index(i, n + 1)];
            for j in (0..=n).rev() {
                let center = motion.points[motion.orbit_index(i, j)];
                let w = newton_preimage(f, p, center)
                    .ok_or(PolyDynError::BranchEscape { depth: j })?;
                if motion.rho[motion.orbit_index(i, j)] * (w - center).norm() > motion.radius {
                    return Err(PolyDynError::BranchEscape { depth: j });
                }
                p = w;
            }
            if let Some(q) = prev {
                if (p - q).norm() < MOTION_TOL {
                    value = Some(p);
                    break;
                }
            }
            prev = Some(p);
        }
        out.push(value.ok_or(PolyDynError::MotionNotConverged)?);
    }
    Ok(out)
}

/// Escape-time raster over a rectangular window. `counts` is row-major with
/// `u32::MAX` marking non-escaping pixels and `u32::MAX - 1` marking pixels
/// undecided within the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub window: [f64; 4],
    pub width: usize,
    pub height: usize,
    pub budget: u32,
    pub counts: Vec<u32>,
}

pub const RASTER_INSIDE: u32 = u32::MAX;
pub const RASTER_UNDECIDED: u32 = u32::MAX - 1;

impl Raster {
    pub fn pixel_width(&self) -> f64 {
        (self.window[1] - self.window[0]) / self.width as f64
    }

    pub fn pixel_center(&self, col: usize, row: usize) -> C64 {
        let dx = (self.window[1] - self.window[0]) / self.width as f64;
        let dy = (self.window[3] - self.window[2]) / self.height as f64;
        C64::new(
            self.window[0] + (col as f64 + 0.5) * dx,
            self.window[2] + (row as f64 + 0.5) * dy,
        )
    }

    fn is_inside(&self, col: usize, row: usize) -> bool {
        self.counts[row * self.width + col] >= RASTER_UNDECIDED
    }

    /// Centers of non-escaping pixels with at least one escaping 4-neighbor
    /// (pixels beyond the window count as escaping).
    pub fn boundary_points(&self) -> Vec<C64> {
        let mut out = Vec::new();
        for row in 0..self.height {
            for col in 0..self.width {
                if !self.is_inside(col, row) {
                    continue;
                }
                let mut exposed = col == 0 || col + 1 == self.width || row == 0 || row + 1 == self.height;
                if !exposed {
                    exposed = !self.is_inside(col - 1, row)
                        || !self.is_inside(col + 1, row)
                        || !self.is_inside(col, row - 1)
                        || !self.is_inside(col, row + 1);
                }
                if exposed {
                    out.push(self.pixel_center(col, row));
                }
            }
        }
        out
    }
}

fn raster_rows<F>(window: [f64; 4], width: usize, height: usize, classify: F) -> Vec<u32>
where
    F: Fn(C64) -> u32 + Sync,
{
    let dx = (window[1] - window[0]) / width as f64;
    let dy = (window[3] - window[2]) / height as f64;
    let rows: Vec<Vec<u32>> = crate::thread_pool().install(|| {
        (0..height)
            .into_par_iter()
            .map(|row| {
                let y = window[2] + (row as f64 + 0.5) * dy;
                (0..width)
                    .map(|col| {
                        let x = window[0] + (col as f64 + 0.5) * dx;
                        classify(C64::new(x, y))
                    })
                    .collect()
            })
            .collect()
    });
    rows.into_iter().flatten().collect()
}

/// Escape-time raster of the filled Julia set of `f`.
pub fn julia_raster(
    f: &Polynomial,
    window: [f64; 4],
    width: usize,
    height: usize,
    budget: u32,
) -> Result<Raster, PolyDynError> {
    if width == 0 || height == 0 || budget == 0 {
        return Err(PolyDynError::EmptyRaster);
    }
    if !(window[0] < window[1]) || !(window[2] < window[3]) {
        return Err(PolyDynError::EmptyRaster);
    }
    let escape = f.escape_radius();
    let counts = raster_rows(window, width, height, |z0| {
        let mut z = z0;
        for n in 0..budget {
            if z.norm_sqr() > escape * escape {
                return n;
            }
            z = f.eval(z);
        }
        RASTER_INSIDE
    });
    Ok(Raster {
        window,
        width,
        height,
        budget,
        counts,
    })
}

/// Raster of the attracting basin of `attractor`: pixels are marked inside
/// when the orbit enters the capture disk, by escape count otherwise, and
/// undecided when the budget runs out first.
pub fn basin_raster(
    f: &Polynomial,
    attractor: C64,
    capture_radius: f64,
    window: [f64; 4],
    width: usize,
    height: usize,
    budget: u32,
) -> Result<Raster, PolyDynError> {
    if width == 0 || height == 0 || budget == 0 || !(capture_radius > 0.0) {
        return Err(PolyDynError::EmptyRaster);
    }
    let escape = f.escape_radius();
    let cap2 = capture_radius * capture_radius;
    let counts = raster_rows(window, width, height, |z0| {
        let mut z = z0;
        for n in 0..budget {
            if (z - attractor).norm_sqr() < cap2 {
                return RASTER_INSIDE;
            }
            if z.norm_sqr() > escape * escape {
                return n;
            }
            z = f.eval(z);
        }
        RASTER_UNDECIDED
    });
    Ok(Raster {
        window,
        width,
        height,
        budget,
        counts,
    })
}

/// Box-counting fit: slope of `log N(eps)` against `log(1/eps)` over dyadic
/// scales, with a two-sigma confidence band from the fit residuals.
#[derive(Debug, Clone)]
pub struct BoxDimension {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<(f64, u64)>,
}

/// Least-squares box-counting dimension over `n_scales` dyadic scales
/// starting at `largest_scale`.
pub fn box_dimension(
    points: &[C64],
    largest_scale: f64,
    n_scales: usize,
) -> Result<BoxDimension, PolyDynError> {
    if n_scales < 4 {
        return Err(PolyDynError::DegenerateFit(
            "need at least 4 dyadic scales".into(),
        ));
    }
    if points.is_empty() || !(largest_scale > 0.0) {
        return Err(PolyDynError::DegenerateFit("empty point set".into()));
    }
    let min_x = points.iter().map(|p| p.re).fold(f64::INFINITY, f64::min);
    let min_y = points.iter().map(|p| p.im).fold(f64::INFINITY, f64::min);
    let mut counts = Vec::with_capacity(n_scales);
    for j in 0..n_scales {
        let eps = largest_scale / (1u64 << j) as f64;
        let mut boxes: HashSet<(i64, i64)> = HashSet::new();
        for p in points {
            let ix = ((p.re - min_x) / eps).floor() as i64;
            let iy = ((p.im - min_y) / eps).floor() as i64;
            boxes.insert((ix, iy));
        }
        counts.push((eps, boxes.len() as u64));
    }
    let xs: Vec<f64> = counts.iter().map(|&(e, _)| (1.0 / e).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx < 1e-12 {
        return Err(PolyDynError::DegenerateFit("scales do not separate".into()));
    }
    let slope = sxy / sxx;
    let resid: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - my - slope * (x - mx);
            e * e
        })
        .sum();
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let stderr = (resid / dof / sxx).sqrt();
    Ok(BoxDimension {
        estimate: slope,
        lower: slope - 2.0 * stderr,
        upper: slope + 2.0 * stderr,
        counts,
    })
}
