//! Finite Blaschke products built from free zero divisors, the zero↔critical
//! divisor correspondence (forward, inverse, and boundary-extended), and the
//! degeneration limit law for zeros escaping to the circle.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::divisor::{DiskSplit, Divisor, DivisorError, BOUNDARY_TOL};
use crate::poly::{cluster_roots, CPoly, PolyError};
use crate::C64;

/// Free zeros must satisfy |q| < 1 − BOUNDARY_GUARD to build a product.
const BOUNDARY_GUARD: f64 = 1e-9;

/// Clustering tolerance for grouping repeated critical points.
const CRIT_CLUSTER_TOL: f64 = 1e-7;

/// Newton target for the inverse-correspondence corrector, in symmetric coordinates.
const INVERSE_NEWTON_TOL: f64 = 1e-12;

/// Smallest allowed continuation step before declaring a stall.
const MIN_CONTINUATION_STEP: f64 = 1e-10;

/// Residual gate for accepting an inverse-correspondence answer.
const INVERSE_RESIDUAL_TOL: f64 = 1e-8;

/// Compact-set samples closer than this to an escaped boundary point are rejected.
const ESCAPE_MARGIN: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum BlaschkeError {
    #[error("free zero {0} too close to the unit circle")]
    BoundaryZero(C64),
    #[error("evaluation at pole {0}")]
    PoleHit(C64),
    #[error(transparent)]
    RootFindingFailed(#[from] PolyError),
    #[error("critical point count {found} does not match degree − 1 = {expected}")]
    CriticalCountMismatch { found: u32, expected: u32 },
    #[error("continuation stalled at t = {t} (step {step} below floor)")]
    ContinuationStalled { t: f64, step: f64 },
    #[error("inverse residual {residual} exceeds tolerance")]
    ResidualTooLarge { residual: f64 },
    #[error("escaped support contains 1 (degeneration hypothesis violated)")]
    OneInEscapedSupport,
    #[error("compact-set sample {0} too close to escaped support")]
    CompactSetHitsEscapedSupport(C64),
    #[error(transparent)]
    Divisor(#[from] DivisorError),
    #[error("zeros-centered recentering did not converge")]
    RecenteringFailed,
}

/// Normalization of a finite Blaschke product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centering {
    /// β(0) = 0 and β(1) = 1; the zero divisor is 1·0 + (free zeros).
    FixedPoint,
    /// The zeros sum to 0 and β(1) = 1.
    ZerosCentered,
}

/// A finite Blaschke product of degree ≥ 1 mapping the unit disk onto itself,
/// normalized to fix 1, stored as its full zero list plus the unimodular
/// rotation factor.
#[derive(Clone, Debug)]
pub struct BlaschkeProduct {
    free_zeros: Divisor,
    centering: Centering,
    rotation: C64,
    zeros: Vec<(C64, u32)>,
}

impl BlaschkeProduct {
    /// Builds the product with the given free zero divisor.
    ///
    /// Fixed-point-centered: β(z) = z·∏ ((1−q̄)/(1−q) · (z−q)/(1−q̄z))^ν(q).
    /// Zeros-centered: the fixed-point-centered zero set is moved by the unique
    /// disk automorphism fixing 1 that makes the zeros sum to 0.
    pub fn from_divisor(free_zeros: &Divisor, centering: Centering) -> Result<Self, BlaschkeError> {
        for (q, _) in free_zeros.entries() {
            if q.norm() >= 1.0 - BOUNDARY_GUARD {
                return Err(BlaschkeError::BoundaryZero(*q));
            }
        }
        let mut zeros: Vec<(C64, u32)> = Vec::with_capacity(free_zeros.entries().len() + 1);
        zeros.push((C64::new(0.0, 0.0), 1));
        for (q, m) in free_zeros.entries() {
            if q.norm() == 0.0 {
                zeros[0].1 += m;
            } else {
                zeros.push((*q, *m));
            }
        }
        if centering == Centering::ZerosCentered {
            zeros = recenter_zeros(&zeros)?;
        }
        let mut rotation = C64::new(1.0, 0.0);
        let one = C64::new(1.0, 0.0);
        for (q, m) in &zeros {
            let factor = (one - q.conj()) / (one - q);
            rotation *= factor.powu(*m);
        }
        Ok(BlaschkeProduct { free_zeros: free_zeros.clone(), centering, rotation, zeros })
    }

    /// The free zero divisor used to build the product.
    pub fn free_zeros(&self) -> &Divisor {
        &self.free_zeros
    }

    pub fn centering(&self) -> Centering {
        self.centering
    }

    /// Full zero list including the normalization zero, with multiplicities.
    pub fn zeros(&self) -> &[(C64, u32)] {
        &self.zeros
    }

    /// The unimodular factor in front of the Möbius factors.
    pub fn rotation(&self) -> C64 {
        self.rotation
    }

    /// deg(β) = 1 + deg(free zeros).
    pub fn degree(&self) -> u32 {
        self.zeros.iter().map(|(_, m)| m).sum()
    }

    /// Evaluates β(z). At a pole the result is non-finite; use
    /// [`BlaschkeProduct::eval_checked`] when poles must be reported.
    pub fn eval(&self, z: C64) -> C64 {
        let mut acc = self.rotation;
        for (q, m) in &self.zeros {
            let factor = (z - q) / (C64::new(1.0, 0.0) - q.conj() * z);
            acc *= factor.powu(*m);
        }
        acc
    }

    /// Evaluates β(z), reporting a pole hit instead of returning a non-finite value.
    pub fn eval_checked(&self, z: C64) -> Result<C64, BlaschkeError> {
        for (q, _) in &self.zeros {
            let denom = C64::new(1.0, 0.0) - q.conj() * z;
            if denom.norm() < 1e-14 * z.norm().max(1.0) {
                return Err(BlaschkeError::PoleHit(z));
            }
        }
        Ok(self.eval(z))
    }

    /// Evaluates (β(z), β′(z)) by product-rule accumulation; exact at zeros of β.
    pub fn eval_with_deriv(&self, z: C64) -> (C64, C64) {
        let one = C64::new(1.0, 0.0);
        let mut p = self.rotation;
        let mut dp = C64::new(0.0, 0.0);
        for (q, m) in &self.zeros {
            let denom = one - q.conj() * z;
            let f = (z - q) / denom;
            let df = (one - q.conj() * q) / (denom * denom);
            for _ in 0..*m {
                dp = dp * f + p * df;
                p *= f;
            }
        }
        (p, dp)
    }

    /// β′(z).
    pub fn deriv(&self, z: C64) -> C64 {
        self.eval_with_deriv(z).1
    }

    /// The multiplier β′(0); for fixed-point-centered products this is the
    /// derivative at the fixed point 0.
    pub fn multiplier(&self) -> C64 {
        self.deriv(C64::new(0.0, 0.0))
    }

    /// Numerator and denominator polynomials: β = rotation · P/Q.
    pub fn rational_parts(&self) -> (CPoly, CPoly) {
        let one = C64::new(1.0, 0.0);
        let mut p = CPoly::one();
        let mut q_poly = CPoly::one();
        for (q, m) in &self.zeros {
            for _ in 0..*m {
                p = p.mul(&CPoly::new(vec![-q, one]));
                q_poly = q_poly.mul(&CPoly::new(vec![one, -q.conj()]));
            }
        }
        (p.scale(self.rotation), q_poly)
    }

    /// The ramification divisor R_β = Σ (deg(β,q) − 1)·q over critical points in 𝔻.
    pub fn ramification_divisor(&self) -> Result<Divisor, BlaschkeError> {
        let expected = self.degree() - 1;
        if expected == 0 {
            return Ok(Divisor::empty());
        }
        let (p, q) = self.rational_parts();
        let numerator = p.derivative().mul(&q).sub(&p.mul(&q.derivative()));
        let roots = numerator.roots()?;
        let interior: Vec<C64> = roots.into_iter().filter(|z| z.norm() < 1.0).collect();
        let clusters = cluster_roots(&interior, CRIT_CLUSTER_TOL);
        let found: u32 = clusters.iter().map(|(_, m)| m).sum();
        if found != expected {
            return Err(BlaschkeError::CriticalCountMismatch { found, expected });
        }
        Ok(Divisor::from_entries(clusters))
    }
}

/// Finds the disk automorphism h fixing 1 with Σ h(zeros) = 0 and applies it.
fn recenter_zeros(zeros: &[(C64, u32)]) -> Result<Vec<(C64, u32)>, BlaschkeError> {
    let expanded: Vec<C64> = zeros
        .iter()
        .flat_map(|(q, m)| std::iter::repeat(*q).take(*m as usize))
        .collect();
    let n = expanded.len() as f64;
    let h = |w: C64, z: C64| {
        let one = C64::new(1.0, 0.0);
        ((one - w.conj()) / (one - w)) * (z - w) / (one - w.conj() * z)
    };
    let sum = |w: C64| -> C64 { expanded.iter().map(|&z| h(w, z)).sum() };
    // Damped Newton on ℝ² with finite-difference Jacobian; the mean of the
    // zeros is an O(|w|²)-accurate seed.
    let mut w = expanded.iter().sum::<C64>() / n;
    if w.norm() > 0.95 {
        w *= 0.95 / w.norm();
    }
    let fd = 1e-7;
    for _ in 0..100 {
        let f = sum(w);
        if f.norm() < 1e-13 * n {
            return Ok(apply_automorphism(zeros, w, h));
        }
        let fx = (sum(w + C64::new(fd, 0.0)) - sum(w - C64::new(fd, 0.0))) / (2.0 * fd);
        let fy = (sum(w + C64::new(0.0, fd)) - sum(w - C64::new(0.0, fd))) / (2.0 * fd);
        let jac = [[fx.re, fy.re], [fx.im, fy.im]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (f.re * jac[1][1] - f.im * jac[0][1]) / det;
        let dy = (f.im * jac[0][0] - f.re * jac[1][0]) / det;
        let mut step = C64::new(dx, dy);
        let mut next = w - step;
        let mut damping = 0;
        while (next.norm() > 1.0 - 1e-6 || sum(next).norm() > f.norm()) && damping < 60 {
            step *= 0.5;
            next = w - step;
            damping += 1;
        }
        if damping == 60 {
            break;
        }
        w = next;
    }
    let f = sum(w);
    if f.norm() < 1e-10 * n {
        Ok(apply_automorphism(zeros, w, h))
    } else {
        Err(BlaschkeError::RecenteringFailed)
    }
}

fn apply_automorphism<F: Fn(C64, C64) -> C64>(
    zeros: &[(C64, u32)],
    w: C64,
    h: F,
) -> Vec<(C64, u32)> {
    zeros.iter().map(|(q, m)| (h(w, *q), *m)).collect()
}

/// The zero→critical correspondence: D ↦ ramification divisor of the
/// fixed-point-centered product with free zeros D.
pub fn psi_forward(d: &Divisor) -> Result<Divisor, BlaschkeError> {
    BlaschkeProduct::from_divisor(d, Centering::FixedPoint)?.ramification_divisor()
}

/// The inverse correspondence: finds the unique interior divisor D with
/// psi_forward(D) = R by predictor–corrector continuation along the straight
/// path t·R from e·0, Newton-correcting in elementary symmetric coordinates.
pub fn psi_inverse(r: &Divisor) -> Result<Divisor, BlaschkeError> {
    let e = r.degree();
    if e == 0 {
        return Ok(Divisor::empty());
    }
    for (q, _) in r.entries() {
        if q.norm() >= 1.0 - BOUNDARY_GUARD {
            return Err(BlaschkeError::BoundaryZero(*q));
        }
    }
    let n = e as usize;
    let target = r.expanded();
    // State: coefficients c of the monic polynomial whose roots are the zeros,
    // excluding the leading 1 — ascending order, length n.
    let mut c = vec![C64::new(0.0, 0.0); n];
    let mut t = 0.0_f64;
    let mut step = 0.25_f64;
    let mut prev: Option<(f64, Vec<C64>)> = None;
    while t < 1.0 {
        let t_next = (t + step).min(1.0);
        let goal = sym_coords_of_scaled(&target, t_next);
        // Secant predictor from the last accepted step, when available.
        let mut guess: Vec<C64> = match &prev {
            Some((t_prev, c_prev)) if t - t_prev > 1e-14 => {
                let ratio = (t_next - t) / (t - t_prev);
                c.iter()
                    .zip(c_prev.iter())
                    .map(|(a, b)| a + (a - b) * ratio)
                    .collect()
            }
            _ => c.clone(),
        };
        match newton_correct(&mut guess, &goal) {
            Ok(()) => {
                prev = Some((t, c));
                c = guess;
                t = t_next;
                step = (step * 1.5).min(0.25);
            }
            Err(_) => {
                step *= 0.5;
                if step < MIN_CONTINUATION_STEP {
                    return Err(BlaschkeError::ContinuationStalled { t, step });
                }
            }
        }
    }
    let zeros = roots_of_sym(&c)?;
    let d = Divisor::from_points(zeros);
    let residual = psi_forward(&d)?.matching_distance(r)?;
    if residual > INVERSE_RESIDUAL_TOL {
        return Err(BlaschkeError::ResidualTooLarge { residual });
    }
    Ok(d)
}

/// Symmetric coordinates (monic coefficients, ascending, leading 1 dropped)
/// of the divisor with the given expanded points scaled by t.
fn sym_coords_of_scaled(points: &[C64], t: f64) -> Vec<C64> {
    let scaled: Vec<C64> = points.iter().map(|&p| p * t).collect();
    sym_coords(&scaled)
}

fn sym_coords(points: &[C64]) -> Vec<C64> {
    let p = CPoly::from_roots(points);
    let mut coeffs = p.coeffs().to_vec();
    coeffs.pop();
    coeffs
}

fn roots_of_sym(c: &[C64]) -> Result<Vec<C64>, PolyError> {
    let mut coeffs = c.to_vec();
    coeffs.push(C64::new(1.0, 0.0));
    CPoly::new(coeffs).roots()
}

/// Critical symmetric coordinates as a function of zero symmetric coordinates.
fn forward_in_sym(c: &[C64]) -> Result<Vec<C64>, BlaschkeError> {
    let zeros = roots_of_sym(c)?;
    for z in &zeros {
        if z.norm() >= 1.0 - BOUNDARY_GUARD {
            return Err(BlaschkeError::BoundaryZero(*z));
        }
    }
    let d = Divisor::from_points(zeros.clone());
    // Multiplicity bookkeeping is irrelevant here: we only need the critical
    // points with repetition, which the expanded divisor provides.
    let crit = psi_forward(&d)?;
    let mut expanded = crit.expanded();
    while expanded.len() < zeros.len() {
        // Guard against cluster under-counting; cannot normally happen because
        // ramification_divisor checks the degree.
        expanded.push(C64::new(0.0, 0.0));
    }
    Ok(sym_coords(&expanded))
}

/// Newton iteration on the real 2n-dimensional system sym(Ψ(roots(c))) = goal.
fn newton_correct(c: &mut [C64], goal: &[C64]) -> Result<(), BlaschkeError> {
    let n = c.len();
    let fd = 1e-7;
    for _ in 0..40 {
        let f = forward_in_sym(c)?;
        let res: Vec<C64> = f.iter().zip(goal).map(|(a, b)| a - b).collect();
        let norm = res.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        if norm < INVERSE_NEWTON_TOL {
            return Ok(());
        }
        // Real finite-difference Jacobian: the forward map involves conjugates
        // and is smooth but not holomorphic in the coefficients.
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for j in 0..n {
            for (axis, offset) in [(0usize, C64::new(fd, 0.0)), (1usize, C64::new(0.0, fd))] {
                let mut cp = c.to_vec();
                cp[j] += offset;
                let fp = forward_in_sym(&cp)?;
                let mut cm = c.to_vec();
                cm[j] -= offset;
                let fm = forward_in_sym(&cm)?;
                for i in 0..n {
                    let df = (fp[i] - fm[i]) / (2.0 * fd);
                    jac[(2 * i, 2 * j + axis)] = df.re;
                    jac[(2 * i + 1, 2 * j + axis)] = df.im;
                }
            }
        }
        let mut rhs = DVector::<f64>::zeros(2 * n);
        for i in 0..n {
            rhs[2 * i] = res[i].re;
            rhs[2 * i + 1] = res[i].im;
        }
        let lu = jac.lu();
        let delta = lu
            .solve(&rhs)
            .ok_or(BlaschkeError::ResidualTooLarge { residual: norm })?;
        for j in 0..n {
            c[j] -= C64::new(delta[2 * j], delta[2 * j + 1]);
        }
    }
    let f = forward_in_sym(c)?;
    let norm = f
        .iter()
        .zip(goal)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0_f64, f64::max);
    if norm < INVERSE_NEWTON_TOL {
        Ok(())
    } else {
        Err(BlaschkeError::ResidualTooLarge { residual: norm })
    }
}

/// The boundary-extended correspondence: interior part through psi_forward,
/// boundary part carried unchanged.
pub fn psi_bar(d: &Divisor) -> Result<Divisor, BlaschkeError> {
    let split = d.split_disk(BOUNDARY_TOL)?;
    Ok(psi_forward(&split.interior)?.add(&split.boundary))
}

/// The degree-1 escape factor β_b(z) = (|b|/b)·(b−z)/(1−b̄z) minus 1, together
/// with the closed-form identity value (|b|−1)(b+z|b|)/(b(1−b̄z)).
///
/// The two agree to 1e−12; the identity is the quantitative content of the
/// degeneration law for a single escaping zero.
pub fn moebius_escape_deviation(b: C64, z: C64) -> Result<(C64, C64), BlaschkeError> {
    if b.norm() == 0.0 {
        return Err(BlaschkeError::BoundaryZero(b));
    }
    let one = C64::new(1.0, 0.0);
    let denom = one - b.conj() * z;
    if denom.norm() < 1e-13 * z.norm().max(1.0) {
        return Err(BlaschkeError::PoleHit(z));
    }
    let r = b.norm();
    let beta = (r / b) * (b - z) / denom;
    let direct = beta - one;
    let identity = (r - 1.0) * (b + z * r) / (b * denom);
    debug_assert!(
        (direct - identity).norm() <= 1e-12 * direct.norm().max(1.0),
        "escape identity violated: {direct} vs {identity}"
    );
    Ok((direct, identity))
}

/// Limit object of a degenerating sequence: the surviving interior product and
/// the escaped boundary divisor.
#[derive(Clone, Debug)]
pub struct DegenerateLimit {
    pub surviving: BlaschkeProduct,
    pub escaped: Divisor,
}

/// One row of a degeneration convergence report.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DegenerationRow {
    pub n: u32,
    pub sup_deviation: f64,
    pub identity_bound: f64,
}

/// Convergence report for [`degenerate_limit`].
#[derive(Clone, Debug)]
pub struct DegenerationReport {
    pub rows: Vec<DegenerationRow>,
    /// Final sup deviation below the caller's tolerance.
    pub converged: bool,
    /// Deviations trend downward across the schedule.
    pub trending_down: bool,
}

/// Runs the escaping-zero degeneration experiment.
///
/// The target divisor in the closed disk is split into an interior part
/// (surviving product B⁰) and a boundary part (escaped support); the sequence
/// pulls each escaped point q to (1 − 1/n)·q. For every n in the schedule the
/// sup of |B_n − B⁰| over the compact-set samples is recorded together with
/// the closed-form identity bound, which must dominate it.
pub fn degenerate_limit(
    target: &Divisor,
    schedule: &[u32],
    compact_samples: &[C64],
    final_tol: f64,
) -> Result<(DegenerateLimit, DegenerationReport), BlaschkeError> {
    let split: DiskSplit = target.split_disk(BOUNDARY_TOL)?;
    let one = C64::new(1.0, 0.0);
    for (q, _) in split.boundary.entries() {
        if (q - one).norm() < 1e-9 {
            return Err(BlaschkeError::OneInEscapedSupport);
        }
    }
    for &z in compact_samples {
        for (q, _) in split.boundary.entries() {
            if (z - q).norm() < ESCAPE_MARGIN {
                return Err(BlaschkeError::CompactSetHitsEscapedSupport(z));
            }
        }
    }
    let surviving = BlaschkeProduct::from_divisor(&split.interior, Centering::FixedPoint)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let pulled = pull_boundary(&split, n);
        let bn = BlaschkeProduct::from_divisor(&pulled, Centering::FixedPoint)?;
        let mut sup = 0.0_f64;
        let mut bound = 0.0_f64;
        for &z in compact_samples {
            let dev = (bn.eval(z) - surviving.eval(z)).norm();
            sup = sup.max(dev);
            bound = bound.max(identity_bound(&surviving, &split.boundary, n, z));
        }
        rows.push(DegenerationRow { n, sup_deviation: sup, identity_bound: bound });
    }
    let converged = rows.last().map(|r| r.sup_deviation < final_tol).unwrap_or(false);
    let trending_down = is_trending_down(&rows);
    Ok((
        DegenerateLimit { surviving, escaped: split.boundary.clone() },
        DegenerationReport { rows, converged, trending_down },
    ))
}

/// The spec sequence: boundary points pulled to radius 1 − 1/n, interior kept.
pub fn pull_boundary(split: &DiskSplit, n: u32) -> Divisor {
    let r = 1.0 - 1.0 / n as f64;
    split.interior.add(&split.boundary.map_points(|q| q * r))
}

/// Closed-form bound on |B_n(z) − B⁰(z)| from the single-factor escape identity:
/// |B⁰|·M^{m−1}·Σ_k (identity term + rotation mismatch), M the largest factor modulus.
fn identity_bound(surviving: &BlaschkeProduct, escaped: &Divisor, n: u32, z: C64) -> f64 {
    let r = 1.0 - 1.0 / n as f64;
    let one = C64::new(1.0, 0.0);
    let mut sum = 0.0_f64;
    let mut m_count = 0u32;
    let mut max_factor = 1.0_f64;
    for (q, mult) in escaped.entries() {
        let b = q * r;
        let denom = one - b.conj() * z;
        if denom.norm() == 0.0 {
            return f64::INFINITY;
        }
        let identity = ((b.norm() - 1.0) * (b + z * b.norm()) / (b * denom)).norm();
        let u = -q * (one - b.conj()) / (one - b);
        let factor = ((z - b) / denom).norm();
        sum += (identity + (u - one).norm()) * *mult as f64;
        m_count += mult;
        max_factor = max_factor.max(factor);
    }
    if m_count == 0 {
        return 0.0;
    }
    surviving.eval(z).norm() * max_factor.powi(m_count as i32 - 1) * sum
}

fn is_trending_down(rows: &[DegenerationRow]) -> bool {
    if rows.len() < 2 {
        return true;
    }
    let first = rows.first().expect("nonempty").sup_deviation;
    let last = rows.last().expect("nonempty").sup_deviation;
    let mut decreasing_steps = 0usize;
    for w in rows.windows(2) {
        if w[1].sup_deviation <= w[0].sup_deviation * (1.0 + 1e-9) {
            decreasing_steps += 1;
        }
    }
    (last <= first || first == 0.0) && decreasing_steps * 2 >= rows.len() - 1
}

/// Multiplier at 0 of the degree-2 disjoint-type model with free zero −λ:
/// ρ = λ(1+λ̄)/(1+λ).
pub fn disjoint_type_multiplier(lambda: C64) -> C64 {
    lambda * (C64::new(1.0, 0.0) + lambda.conj()) / (C64::new(1.0, 0.0) + lambda)
}

/// Inverse of [`disjoint_type_multiplier`]: λ = ρ(1−ρ̄)/(1−ρ).
pub fn disjoint_type_zero_parameter(rho: C64) -> C64 {
    rho * (C64::new(1.0, 0.0) - rho.conj()) / (C64::new(1.0, 0.0) - rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: C64, b: C64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn monomial_products() {
        let b = BlaschkeProduct::from_divisor(&Divisor::single(c(0.0, 0.0), 1), Centering::FixedPoint)
            .unwrap();
        assert_eq!(b.degree(), 2);
        assert_close(b.eval(c(0.0, 1.0)), c(-1.0, 0.0), 1e-15);
        let b3 = BlaschkeProduct::from_divisor(&Divisor::single(c(0.0, 0.0), 2), Centering::FixedPoint)
            .unwrap();
        assert_close(b3.eval(c(0.5, 0.0)), c(0.125, 0.0), 1e-15);
    }

    #[test]
    fn product_formula_example() {
        // free zero 0.5: β(z) = z(z−0.5)/(1−0.5z)
        let b = BlaschkeProduct::from_divisor(&Divisor::single(c(0.5, 0.0), 1), Centering::FixedPoint)
            .unwrap();
        assert_close(b.eval(c(1.0, 0.0)), c(1.0, 0.0), 1e-14);
        assert_close(b.eval(c(0.2, 0.0)), c(0.2 * (-0.3) / 0.9, 0.0), 1e-15);
        assert_close(b.eval(c(0.0, 0.0)), c(0.0, 0.0), 1e-15);
    }

    #[test]
    fn boundary_modulus_one() {
        let d = Divisor::from_entries([(c(0.5, 0.1), 1), (c(-0.2, 0.4), 2)]);
        let b = BlaschkeProduct::from_divisor(&d, Centering::FixedPoint).unwrap();
        for k in 0..64 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let z = C64::from_polar(1.0, theta);
            assert!((b.eval(z).norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_zero_rejected() {
        let err = BlaschkeProduct::from_divisor(&Divisor::single(c(0.9999999999, 0.0), 1), Centering::FixedPoint);
        assert!(matches!(err, Err(BlaschkeError::BoundaryZero(_))));
    }

    #[test]
    fn derivative_matches_central_differences() {
        let d = Divisor::from_entries([(c(0.3, -0.2), 1), (c(-0.1, 0.5), 1)]);
        let b = BlaschkeProduct::from_divisor(&d, Centering::FixedPoint).unwrap();
        let h = 1e-6;
        for &z in &[c(0.1, 0.2), c(-0.5, 0.3), c(0.7, 0.0), c(0.0, -0.8)] {
            let num = (b.eval(z + c(h, 0.0)) - b.eval(z - c(h, 0.0))) / c(2.0 * h, 0.0);
            let (_, dv) = b.eval_with_deriv(z);
            assert!((dv - num).norm() < 1e-6 * dv.norm().max(1.0));
        }
    }

    #[test]
    fn ramification_of_monomials() {
        let b2 = BlaschkeProduct::from_divisor(&Divisor::single(c(0.0, 0.0), 1), Centering::FixedPoint)
            .unwrap();
        assert_eq!(b2.ramification_divisor().unwrap(), Divisor::single(c(0.0, 0.0), 1));
        let b3 = BlaschkeProduct::from_divisor(&Divisor::single(c(0.0, 0.0), 2), Centering::FixedPoint)
            .unwrap();
        assert_eq!(b3.ramification_divisor().unwrap(), Divisor::single(c(0.0, 0.0), 2));
    }

    #[test]
    fn ramification_closed_form_half() {
        // Critical points of β from 1·0.5 solve āz² − 2z + a = 0 with a = 0.5;
        // the interior root is (1 − √(1−|a|²))/ā = 2 − √3.
        let b = BlaschkeProduct::from_divisor(&Divisor::single(c(0.5, 0.0), 1), Centering::FixedPoint)
            .unwrap();
        let r = b.ramification_divisor().unwrap();
        assert_eq!(r.degree(), 1);
        assert_close(r.support()[0], c(2.0 - 3.0_f64.sqrt(), 0.0), 1e-12);
    }

    #[test]
    fn psi_closed_form_and_round_trip() {
        let d = Divisor::single(c(0.5, 0.0), 1);
        let r = psi_forward(&d).unwrap();
        assert_close(r.support()[0], c(2.0 - 3.0_f64.sqrt(), 0.0), 1e-12);
        let back = psi_inverse(&r).unwrap();
        assert!(back.matching_distance(&d).unwrap() < 1e-10);
    }

    #[test]
    fn psi_inverse_fixed_points_at_origin() {
        for e in 1..=3u32 {
            let d = Divisor::single(c(0.0, 0.0), e);
            let r = psi_forward(&d).unwrap();
            assert_eq!(r, d);
            let back = psi_inverse(&r).unwrap();
            assert!(back.matching_distance(&d).unwrap() < 1e-10);
        }
    }

    #[test]
    fn psi_inverse_degree_three_random_shape() {
        let d = Divisor::from_entries([(c(0.4, 0.3), 1), (c(-0.5, 0.1), 1), (c(0.0, -0.6), 1)]);
        let r = psi_forward(&d).unwrap();
        let back = psi_inverse(&r).unwrap();
        assert!(back.matching_distance(&d).unwrap() < 1e-8);
    }

    #[test]
    fn psi_bar_rules() {
        let q = c(0.0, 1.0);
        let pure_boundary = Divisor::single(q, 1);
        assert_eq!(psi_bar(&pure_boundary).unwrap(), pure_boundary);

        let mixed = Divisor::from_entries([(c(0.5, 0.0), 1), (c(-1.0, 0.0), 1)]);
        let out = psi_bar(&mixed).unwrap();
        assert_eq!(out.degree(), 2);
        assert_eq!(out.multiplicity_at(c(-1.0, 0.0)), 1);
        let interior: Vec<C64> = out
            .support()
            .into_iter()
            .filter(|z| z.norm() < 1.0)
            .collect();
        assert_close(interior[0], c(2.0 - 3.0_f64.sqrt(), 0.0), 1e-12);

        let interior_only = Divisor::single(c(0.0, 0.0), 2);
        assert_eq!(psi_bar(&interior_only).unwrap(), interior_only);
    }

    #[test]
    fn escape_deviation_examples() {
        let (direct, identity) = moebius_escape_deviation(c(0.9, 0.0), c(0.0, 0.0)).unwrap();
        assert_close(direct, c(-0.1, 0.0), 1e-15);
        assert_close(identity, c(-0.1, 0.0), 1e-15);

        // b real, z = −1: β_b(−1) = 1 exactly.
        let (direct, _) = moebius_escape_deviation(c(0.77, 0.0), c(-1.0, 0.0)).unwrap();
        assert!(direct.norm() < 1e-15);

        let b = c(0.0, 0.999);
        let z = c(2.0, 0.0);
        let (direct, _) = moebius_escape_deviation(b, z).unwrap();
        let bound = 0.001 * (1.0 + 2.0) / (0.999 * (C64::new(1.0, 0.0) - b.conj() * z).norm());
        assert!(direct.norm() <= bound + 1e-12);
    }

    #[test]
    fn degeneration_monotone_to_zero() {
        let target = Divisor::single(c(0.0, 1.0), 1);
        let samples = disk_samples();
        let schedule = [10, 100, 1000, 10000];
        let (limit, report) = degenerate_limit(&target, &schedule, &samples, 1e-3).unwrap();
        assert!(report.converged, "final deviation {:?}", report.rows.last());
        assert!(report.trending_down);
        assert_eq!(limit.surviving.degree(), 1);
        for row in &report.rows {
            assert!(
                row.sup_deviation <= row.identity_bound + 1e-12,
                "identity bound violated at n = {}",
                row.n
            );
        }
    }

    #[test]
    fn degeneration_constant_sequence() {
        let target = Divisor::single(c(0.3, 0.2), 1);
        let samples = disk_samples();
        let (limit, report) = degenerate_limit(&target, &[2, 5, 10], &samples, 1e-12).unwrap();
        assert!(limit.escaped.is_empty());
        for row in &report.rows {
            assert_eq!(row.sup_deviation, 0.0);
        }
    }

    #[test]
    fn degeneration_rejects_one_in_support() {
        let target = Divisor::single(c(1.0, 0.0), 1);
        let err = degenerate_limit(&target, &[10], &disk_samples(), 1e-3);
        assert!(matches!(err, Err(BlaschkeError::OneInEscapedSupport)));
    }

    #[test]
    fn disjoint_multiplier_round_trip() {
        for &lambda in &[c(0.3, 0.2), c(-0.4, 0.1), c(0.0, 0.5), c(0.25, 0.0)] {
            let rho = disjoint_type_multiplier(lambda);
            assert_close(disjoint_type_zero_parameter(rho), lambda, 1e-13);
            // The multiplier really is the derivative at 0 of the model product.
            let b = BlaschkeProduct::from_divisor(&Divisor::single(-lambda, 1), Centering::FixedPoint)
                .unwrap();
            assert_close(b.multiplier(), rho, 1e-13);
        }
    }

    #[test]
    fn zeros_centered_normalization() {
        let d = Divisor::from_entries([(c(0.5, 0.0), 1), (c(0.2, 0.3), 1)]);
        let b = BlaschkeProduct::from_divisor(&d, Centering::ZerosCentered).unwrap();
        let sum: C64 = b
            .zeros()
            .iter()
            .map(|(q, m)| q * C64::new(*m as f64, 0.0))
            .sum();
        assert!(sum.norm() < 1e-9, "zero sum {sum}");
        assert_close(b.eval(c(1.0, 0.0)), c(1.0, 0.0), 1e-12);
        assert_eq!(b.degree(), 3);
    }

    fn disk_samples() -> Vec<C64> {
        // |z| ≤ 2 grid minus a neighborhood of i (the escape point used in tests).
        let mut out = Vec::new();
        let n = 25;
        for a in 0..n {
            for b in 0..n {
                let z = c(
                    -2.0 + 4.0 * a as f64 / (n - 1) as f64,
                    -2.0 + 4.0 * b as f64 / (n - 1) as f64,
                );
                if z.norm() <= 2.0 && (z - c(0.0, 1.0)).norm() >= 0.5 {
                    out.push(z);
                }
            }
        }
        out
    }
}
