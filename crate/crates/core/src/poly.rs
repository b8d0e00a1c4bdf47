//! Dense complex polynomials: evaluation, arithmetic, and root finding via
//! companion-matrix eigenvalues with Newton polishing.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, Schur};
use thiserror::Error;

use crate::C64;

/// Coefficients below this magnitude relative to the largest one are treated as
/// zero when normalizing the degree.
const DEGREE_TRIM_REL: f64 = 1e-300;

/// Number of Newton refinement steps applied to each companion-matrix eigenvalue.
const POLISH_STEPS: usize = 2;

/// QR sweeps allowed per matrix dimension before the companion eigenvalue
/// solve is abandoned in favor of the Weierstrass iteration.
const SCHUR_SWEEPS_PER_DIM: usize = 60;

/// Simultaneous-iteration sweeps allowed in the Weierstrass fallback.
const WEIERSTRASS_SWEEPS: usize = 600;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolyError {
    #[error("root finding failed: {0}")]
    RootFindingFailed(String),
}

/// A polynomial over ℂ stored densely in ascending degree order.
///
/// The zero polynomial is represented by an empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct CPoly {
    coeffs: Vec<C64>,
}

impl CPoly {
    /// Builds from ascending-order coefficients, trimming trailing (near-)zeros.
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = CPoly { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        CPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        CPoly { coeffs: vec![C64::new(1.0, 0.0)] }
    }

    /// The monomial c·z^k.
    pub fn monomial(c: C64, k: usize) -> Self {
        if c == C64::new(0.0, 0.0) {
            return CPoly::zero();
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = c;
        CPoly { coeffs }
    }

    /// Monic polynomial with the given roots (with repetition).
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut p = CPoly::one();
        for &r in roots {
            p = p.mul(&CPoly::new(vec![-r, C64::new(1.0, 0.0)]));
        }
        p
    }

    fn trim(&mut self) {
        let max = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        let cut = max * DEGREE_TRIM_REL;
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= cut {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of a nonzero polynomial; zero polynomial reports degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
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

    /// Evaluates the polynomial and its derivative in one Horner pass.
    pub fn eval_with_deriv(&self, z: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> CPoly {
        if self.coeffs.len() <= 1 {
            return CPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * C64::new(k as f64, 0.0))
            .collect();
        CPoly::new(coeffs)
    }

    pub fn add(&self, other: &CPoly) -> CPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![C64::new(0.0, 0.0); n];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        for (k, c) in other.coeffs.iter().enumerate() {
            coeffs[k] += c;
        }
        CPoly::new(coeffs)
    }

    pub fn sub(&self, other: &CPoly) -> CPoly {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &CPoly) -> CPoly {
        if self.is_zero() || other.is_zero() {
            return CPoly::zero();
        }
        let mut coeffs = vec![C64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        CPoly::new(coeffs)
    }

    /// All complex roots, unsorted, with repetition: eigenvalues of the monic
    /// companion matrix followed by two Newton polish steps per root.
    pub fn roots(&self) -> Result<Vec<C64>, PolyError> {
        if self.coeffs.len() <= 1 {
            return Ok(Vec::new());
        }
        // Deflate exact zero roots first: they are common (maps fixing 0) and
        // keep the companion matrix well scaled.
        let lead_scale = self.coeffs.last().expect("nonempty").norm();
        let mut low = 0usize;
        while low < self.coeffs.len() - 1 && self.coeffs[low].norm() <= lead_scale * 1e-250 {
            low += 1;
        }
        let mut roots = vec![C64::new(0.0, 0.0); low];
        let reduced = &self.coeffs[low..];
        let n = reduced.len() - 1;
        if n == 0 {
            return Ok(roots);
        }
        let lead = reduced[n];
        if n == 1 {
            roots.push(-reduced[0] / lead);
            return Ok(roots);
        }
        let monic: Vec<C64> = reduced[..n].iter().map(|c| c / lead).collect();
        let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for i in 1..n {
            m[(i, i - 1)] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -monic[i];
        }
        // An uncapped QR iteration can cycle forever on companions of
        // near-binomial polynomials (equimodular root rings such as z^n ≈ c),
        // so bound the sweeps and fall back to a collective root iteration.
        let eig = match Schur::try_new(m, f64::EPSILON, SCHUR_SWEEPS_PER_DIM * n)
            .and_then(|schur| schur.eigenvalues())
        {
            Some(eig) => eig.iter().copied().collect(),
            None => weierstrass_roots(&monic)?,
        };
        for e in eig {
            roots.push(self.polish(e));
        }
        Ok(roots)
    }

    fn polish(&self, mut z: C64) -> C64 {
        for _ in 0..POLISH_STEPS {
            let (p, dp) = self.eval_with_deriv(z);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            let next = z - step;
            // Reject polish steps that make the residual worse (multiple roots).
            if self.eval(next).norm() <= p.norm() {
                z = next;
            } else {
                break;
            }
        }
        z
    }
}

/// Simultaneous Weierstrass (Durand–Kerner) iteration on a monic polynomial
/// given by its ascending tail coefficients (leading 1 omitted).
fn weierstrass_roots(monic_tail: &[C64]) -> Result<Vec<C64>, PolyError> {
    let n = monic_tail.len();
    let radius = 1.0
        + monic_tail
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
    // Slightly spiraled seeds keep the start asymmetric with respect to any
    // root constellation while staying inside the Cauchy bound.
    let mut z: Vec<C64> = (0..n)
        .map(|k| {
            let angle = 0.4 + TAU * k as f64 / n as f64;
            C64::from_polar(radius * (0.55 + 0.4 * k as f64 / n as f64), angle)
        })
        .collect();
    let eval = |w: C64| -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for &c in monic_tail.iter().rev() {
            acc = acc * w + c;
        }
        acc
    };
    let step_tol = 1e-13 * radius.max(1.0);
    let residual_tol = 1e-12 * (1.0 + radius);
    for _ in 0..WEIERSTRASS_SWEEPS {
        let mut max_step = 0.0_f64;
        let mut max_residual = 0.0_f64;
        for k in 0..n {
            let mut denom = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != k {
                    denom *= z[k] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                z[k] += C64::new(1e-8 * radius, 1e-8 * radius);
                max_step = f64::INFINITY;
                continue;
            }
            let value = eval(z[k]);
            let step = value / denom;
            z[k] -= step;
            max_step = max_step.max(step.norm());
            max_residual = max_residual.max(value.norm());
        }
        if max_step < step_tol || max_residual < residual_tol {
            return Ok(z);
        }
    }
    Err(PolyError::RootFindingFailed(
        "simultaneous root iteration did not converge".into(),
    ))
}

/// Groups nearby roots into (representative, multiplicity) clusters.
///
/// Points within `tol` of a cluster representative join that cluster; the
/// representative is the running centroid. Intended for converting polished
/// root lists into divisors with detected multiplicities.
pub fn cluster_roots(roots: &[C64], tol: f64) -> Vec<(C64, u32)> {
    let mut clusters: Vec<(C64, u32)> = Vec::new();
    let mut sorted: Vec<C64> = roots.to_vec();
    sorted.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite points"));
    for z in sorted {
        match clusters
            .iter_mut()
            .find(|(c, _)| (*c - z).norm() <= tol)
        {
            Some((c, m)) => {
                let count = *m as f64;
                *c = (*c * count + z) / (count + 1.0);
                *m += 1;
            }
            None => clusters.push((z, 1)),
        }
    }
    clusters
}
