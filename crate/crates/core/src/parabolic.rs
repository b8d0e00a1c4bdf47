//! Perturbed parabolic germs: continued-fraction rotation numbers, attracting
//! and repelling Fatou coordinates with certified translation residuals, horn
//! map sampling on a cylinder band, and a transported-derivative check of the
//! return multiplier through the gate of a near-parabolic map.

use thiserror::Error;

use crate::C64;

/// Iteration depth used for the Fatou-coordinate tail (tripled by Richardson).
pub const FATOU_BASE_ITERATIONS: usize = 768;
/// Residual tolerance certified on Fatou charts.
pub const FATOU_CHART_TOL: f64 = 1e-6;

const TAU: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum ParabolicError {
    #[error("continued-fraction chain hits a zero denominator")]
    DivisionByZero,
    #[error("local map must fix the origin with the declared multiplier (found {found}, expected {expected})")]
    MultiplierMismatch { found: C64, expected: C64 },
    #[error("local map coefficients are invalid: {0}")]
    InvalidMap(String),
    #[error("rotation data must satisfy 0 <= p < q with gcd(p, q) = 1")]
    InvalidRotation,
    #[error("operation requires the unperturbed parabolic (alpha = 0)")]
    RequiresParabolic,
    #[error("point is not inside a certified attracting petal")]
    NotInPetal,
    #[error("parabolic jet is degenerate: leading coefficient below threshold")]
    DegenerateJet,
    #[error("attracting and repelling charts have empty overlap on the requested band")]
    ChartOverlapEmpty,
    #[error("orbit failed to transit the gate between the fixed points")]
    GateNotCrossed,
    #[error("perturbation argument lies outside the sector |arg alpha| < pi/4")]
    SectorViolated,
    #[error("return transport supports only q = 1 rotation data")]
    UnsupportedRotation,
}

/// Local holomorphic germ fixing the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalMap {
    /// `z / (1 - z)`, the Möbius parabolic with exact Fatou coordinate.
    MoebiusParabolic,
    /// Polynomial germ by ascending coefficients; the constant term must vanish.
    Series(Vec<C64>),
}

impl LocalMap {
    pub fn validate(&self) -> Result<(), ParabolicError> {
        match self {
            LocalMap::MoebiusParabolic => Ok(()),
            LocalMap::Series(c) => {
                if c.len() < 2 {
                    return Err(ParabolicError::InvalidMap(
                        "series needs at least a linear term".into(),
                    ));
                }
                if c[0].norm() > 1e-15 {
                    return Err(ParabolicError::InvalidMap(
                        "series must fix the origin".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, z: C64) -> C64 {
        match self {
            LocalMap::MoebiusParabolic => z / (C64::new(1.0, 0.0) - z),
            LocalMap::Series(c) => {
                let mut acc = C64::new(0.0, 0.0);
                for &a in c.iter().rev() {
                    acc = acc * z + a;
                }
                acc
            }
        }
    }

    pub fn eval_with_deriv(&self, z: C64) -> (C64, C64) {
        match self {
            LocalMap::MoebiusParabolic => {
                let d = C64::new(1.0, 0.0) - z;
                (z / d, C64::new(1.0, 0.0) / (d * d))
            }
            LocalMap::Series(c) => {
                let mut p = C64::new(0.0, 0.0);
                let mut dp = C64::new(0.0, 0.0);
                for &a in c.iter().rev() {
                    dp = dp * z + p;
                    p = p * z + a;
                }
                (p, dp)
            }
        }
    }

    pub fn multiplier(&self) -> C64 {
        match self {
            LocalMap::MoebiusParabolic => C64::new(1.0, 0.0),
            LocalMap::Series(c) => c[1],
        }
    }
}

/// Classification of a perturbation by the sign of `Im alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaClass {
    Attracting,
    Repelling,
    Boundary,
}

#[derive(Debug, Clone, Copy)]
pub struct AlphaChain {
    pub a1: u64,
    pub a2: u64,
    pub nu: C64,
    pub alpha: C64,
    pub class: AlphaClass,
}

/// Evaluates `alpha = 1 / (a1 - 1/(a2 + nu))` exactly and classifies the
/// perturbation: attracting iff `Im alpha > 0` iff `Im nu < 0`.
pub fn alpha_chain(a1: u64, a2: u64, nu: C64) -> Result<AlphaChain, ParabolicError> {
    let inner = C64::new(a2 as f64, 0.0) + nu;
    if inner.norm() < 1e-300 {
        return Err(ParabolicError::DivisionByZero);
    }
    let denom = C64::new(a1 as f64, 0.0) - C64::new(1.0, 0.0) / inner;
    if denom.norm() < 1e-300 {
        return Err(ParabolicError::DivisionByZero);
    }
    let alpha = C64::new(1.0, 0.0) / denom;
    let class = if alpha.im > 0.0 {
        AlphaClass::Attracting
    } else if alpha.im < 0.0 {
        AlphaClass::Repelling
    } else {
        AlphaClass::Boundary
    };
    Ok(AlphaChain {
        a1,
        a2,
        nu,
        alpha,
        class,
    })
}

/// Germ with rotation data `p/q` and perturbation `alpha`, so that
/// `f'(0) = exp(2 pi i (p + alpha) / q)`.
#[derive(Debug, Clone)]
pub struct PerturbedParabolic {
    pub map: LocalMap,
    pub p: u32,
    pub q: u32,
    pub alpha: C64,
    pub chain: Option<AlphaChain>,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl PerturbedParabolic {
    pub fn new(map: LocalMap, p: u32, q: u32, alpha: C64) -> Result<Self, ParabolicError> {
        map.validate()?;
        if q == 0 || p >= q || gcd(p, q) != 1 {
            return Err(ParabolicError::InvalidRotation);
        }
        let expected = (C64::new(0.0, TAU) * (C64::new(p as f64, 0.0) + alpha)
            / C64::new(q as f64, 0.0))
        .exp();
        let found = map.multiplier();
        if (found - expected).norm() > 1e-12 * (1.0 + expected.norm()) {
            return Err(ParabolicError::MultiplierMismatch { found, expected });
        }
        Ok(PerturbedParabolic {
            map,
            p,
            q,
            alpha,
            chain: None,
        })
    }

    /// Unperturbed parabolic with `alpha = 0`.
    pub fn parabolic(map: LocalMap, p: u32, q: u32) -> Result<Self, ParabolicError> {
        Self::new(map, p, q, C64::new(0.0, 0.0))
    }

    /// Attaches continued-fraction data, requiring exact consistency with
    /// `alpha`.
    pub fn with_chain(mut self, chain: AlphaChain) -> Result<Self, ParabolicError> {
        if (chain.alpha - self.alpha).norm() > 1e-15 * (1.0 + self.alpha.norm()) {
            return Err(ParabolicError::InvalidRotation);
        }
        self.chain = Some(chain);
        Ok(self)
    }

    /// Whether the perturbation sits in the sector `|arg alpha| < pi/4`.
    pub fn is_in_sector(&self) -> bool {
        self.alpha.norm() > 0.0 && self.alpha.arg().abs() < std::f64::consts::FRAC_PI_4
    }

    fn step(&self, z: C64) -> C64 {
        let mut w = z;
        for _ in 0..self.q {
            w = self.map.eval(w);
        }
        w
    }
}

/// Measured jet data of `f^q(z) = z + c z^{q+1} + ...` together with the
/// iterative residue `beta` of the conjugated translation
/// `F(u) = u + 1 + beta/u + O(u^{-2})` in the coordinate `u = -1/(q c z^q)`.
#[derive(Debug, Clone, Copy)]
pub struct ParabolicJet {
    pub q: u32,
    pub c: C64,
    pub beta: C64,
}

fn zpow(z: C64, q: u32) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..q {
        acc *= z;
    }
    acc
}

fn measure_jet<F>(step: &F, q: u32) -> Result<ParabolicJet, ParabolicError>
where
    F: Fn(C64) -> Option<C64>,
{
    let dir = C64::from_polar(1.0, 0.437);
    let radii = [6e-3, 3e-3, 1.5e-3];
    let mut m = [C64::new(0.0, 0.0); 3];
    for (j, &h) in radii.iter().enumerate() {
        let z = dir * h;
        let g = step(z).ok_or(ParabolicError::DegenerateJet)?;
        m[j] = (g - z) / zpow(z, q + 1);
    }
    let a1 = m[1] * 2.0 - m[0];
    let a2 = m[2] * 2.0 - m[1];
    let c = (a2 * 4.0 - a1) / 3.0;
    if c.norm() < 1e-8 {
        return Err(ParabolicError::DegenerateJet);
    }
    let u_of = |z: C64| -C64::new(1.0, 0.0) / (C64::new(q as f64, 0.0) * c * zpow(z, q));
    let mut xs = [C64::new(0.0, 0.0); 3];
    let mut ms = [C64::new(0.0, 0.0); 3];
    for (j, &h) in radii.iter().enumerate() {
        let z = dir * h;
        let g = step(z).ok_or(ParabolicError::DegenerateJet)?;
        let u = u_of(z);
        let delta = u_of(g) - u - C64::new(1.0, 0.0);
        xs[j] = C64::new(1.0, 0.0) / u;
        ms[j] = u * delta;
    }
    let mut beta = C64::new(0.0, 0.0);
    for j in 0..3 {
        let mut weight = C64::new(1.0, 0.0);
        for k in 0..3 {
            if k != j {
                weight *= xs[k] / (xs[k] - xs[j]);
            }
        }
        beta += ms[j] * weight;
    }
    Ok(ParabolicJet { q, c, beta })
}

/// Attracting axis of petal `k`: the direction where `c z^q` is negative real.
fn petal_axis(jet: &ParabolicJet, k: u32) -> C64 {
    let theta = (std::f64::consts::PI - jet.c.arg() + TAU * k as f64) / jet.q as f64;
    C64::from_polar(1.0, theta)
}

/// Index of the attracting petal whose axis is nearest to `z`.
pub fn petal_index(jet: &ParabolicJet, z: C64) -> u32 {
    let mut best = 0u32;
    let mut best_gap = f64::INFINITY;
    for k in 0..jet.q {
        let gap = (z.arg() - petal_axis(jet, k).arg()).rem_euclid(TAU);
        let gap = gap.min(TAU - gap);
        if gap < best_gap {
            best_gap = gap;
            best = k;
        }
    }
    best
}

/// Fatou coordinate by orbit averaging: `phi = lim (u_n - n - beta Log u_n)`
/// with two Richardson levels in `1/n`. With `strict_gate` the start point
/// must already sit in the incoming half-plane `Re u > 1`.
fn fatou_coordinate_raw<F>(
    step: &F,
    jet: &ParabolicJet,
    z: C64,
    strict_gate: bool,
) -> Result<C64, ParabolicError>
where
    F: Fn(C64) -> Option<C64>,
{
    if z.norm() < 1e-12 {
        return Err(ParabolicError::NotInPetal);
    }
    let u_of = |w: C64| -> Option<C64> {
        let den = C64::new(jet.q as f64, 0.0) * jet.c * zpow(w, jet.q);
        if den.norm() < 1e-280 {
            None
        } else {
            Some(-C64::new(1.0, 0.0) / den)
        }
    };
    let u0 = u_of(z).ok_or(ParabolicError::NotInPetal)?;
    if strict_gate && u0.re <= 1.0 {
        return Err(ParabolicError::NotInPetal);
    }
    let mut w = z;
    let mut u_prev = u0;
    let mut translation_exact = true;
    for _ in 0..8 {
        w = step(w).ok_or(ParabolicError::NotInPetal)?;
        let u = u_of(w).ok_or(ParabolicError::NotInPetal)?;
        if (u - u_prev - C64::new(1.0, 0.0)).norm() > 1e-13 * (1.0 + u.norm()) {
            translation_exact = false;
            break;
        }
        u_prev = u;
    }
    if translation_exact {
        return Ok(u0);
    }
    let n = FATOU_BASE_ITERATIONS;
    let cap = 4.0 * z.norm() + 1.0;
    let mut w = z;
    let mut checkpoints = [C64::new(0.0, 0.0); 3];
    for k in 1..=(4 * n) {
        w = step(w).ok_or(ParabolicError::NotInPetal)?;
        if !w.is_finite() || w.norm() > cap {
            return Err(ParabolicError::NotInPetal);
        }
        if k == n {
            checkpoints[0] = w;
        } else if k == 2 * n {
            checkpoints[1] = w;
        } else if k == 4 * n {
            checkpoints[2] = w;
        }
    }
    let phi_at = |w: C64, steps: f64| -> Option<C64> {
        let u = u_of(w)?;
        Some(u - C64::new(steps, 0.0) - jet.beta * u.ln())
    };
    let u_last = u_of(checkpoints[2]).ok_or(ParabolicError::NotInPetal)?;
    if u_last.re < 0.4 * (4 * n) as f64 {
        return Err(ParabolicError::NotInPetal);
    }
    let p1 = phi_at(checkpoints[0], n as f64).ok_or(ParabolicError::NotInPetal)?;
    let p2 = phi_at(checkpoints[1], 2.0 * n as f64).ok_or(ParabolicError::NotInPetal)?;
    let p4 = phi_at(checkpoints[2], 4.0 * n as f64).ok_or(ParabolicError::NotInPetal)?;
    let r1 = p2 * 2.0 - p1;
    let r2 = p4 * 2.0 - p2;
    Ok(r2 * 2.0 - r1)
}

/// Jet of `f^q` for an unperturbed parabolic: exact for the Möbius germ
/// (whose normal form is a pure translation), measured otherwise.
pub fn parabolic_jet(p: &PerturbedParabolic) -> Result<ParabolicJet, ParabolicError> {
    if p.alpha.norm() > 1e-15 {
        return Err(ParabolicError::RequiresParabolic);
    }
    if matches!(p.map, LocalMap::MoebiusParabolic) {
        return Ok(ParabolicJet {
            q: 1,
            c: C64::new(1.0, 0.0),
            beta: C64::new(0.0, 0.0),
        });
    }
    let step = |z: C64| -> Option<C64> {
        let w = p.step(z);
        if w.is_finite() {
            Some(w)
        } else {
            None
        }
    };
    measure_jet(&step, p.q)
}

/// Attracting Fatou coordinate at `z`, certified to satisfy
/// `phi(f^q(z)) = phi(z) + 1`; the normalization anchors `phi` to the
/// asymptotic coordinate `u = -1/(q c z^q)` along the orbit.
pub fn fatou_attracting(p: &PerturbedParabolic, z: C64) -> Result<C64, ParabolicError> {
    let jet = parabolic_jet(p)?;
    let step = |w: C64| -> Option<C64> {
        let v = p.step(w);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    };
    fatou_coordinate_raw(&step, &jet, z, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Attracting,
    Repelling,
}

/// Sampled Fatou chart with its certified translation residual.
#[derive(Debug, Clone)]
pub struct FatouChart {
    pub kind: ChartKind,
    pub petal: u32,
    pub samples: Vec<(C64, C64)>,
    pub residual: f64,
}

fn chart_radii(jet: &ParabolicJet, n: usize) -> Vec<f64> {
    let scale = (1.0 / (4.0 * jet.q as f64 * jet.c.norm()))
        .powf(1.0 / jet.q as f64)
        .min(0.45);
    let lo = (0.3 * scale).ln();
    let hi = (0.8 * scale).ln();
    (0..n)
        .map(|j| (lo + (hi - lo) * j as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}

impl FatouChart {
    /// Samples the attracting chart of petal `k` along its axis and certifies
    /// the translation residual on every sample.
    pub fn attracting(
        p: &PerturbedParabolic,
        petal: u32,
        n_samples: usize,
    ) -> Result<Self, ParabolicError> {
        let jet = parabolic_jet(p)?;
        if petal >= jet.q {
            return Err(ParabolicError::NotInPetal);
        }
        let axis = petal_axis(&jet, petal);
        let step = |w: C64| -> Option<C64> {
            let v = p.step(w);
            if v.is_finite() {
                Some(v)
            } else {
                None
            }
        };
        let mut samples = Vec::new();
        let mut residual = 0.0f64;
        for r in chart_radii(&jet, n_samples.max(3)) {
            let z = axis * r;
            let phi = fatou_coordinate_raw(&step, &jet, z, true)?;
            let phi_next = fatou_coordinate_raw(&step, &jet, p.step(z), false)?;
            residual = residual.max((phi_next - phi - C64::new(1.0, 0.0)).norm());
            samples.push((z, phi));
        }
        Ok(FatouChart {
            kind: ChartKind::Attracting,
            petal,
            samples,
            residual,
        })
    }
}

fn inverse_step(p: &PerturbedParabolic, z: C64) -> Option<C64> {
    let mut w = z;
    for _ in 0..40 {
        let mut v = w;
        let mut dv = C64::new(1.0, 0.0);
        for _ in 0..p.q {
            let (e, de) = p.map.eval_with_deriv(v);
            dv *= de;
            v = e;
        }
        let r = v - z;
        if r.norm() < 1e-15 * (1.0 + z.norm()) {
            return Some(w);
        }
        if dv.norm() < 1e-280 {
            return None;
        }
        w -= r / dv;
    }
    None
}

/// Horn map samples `E(w) = phi_att(psi_rep^{-1}(w))` on a cylinder band,
/// with the periodicity residual, the additive normalization constant fitted
/// on the top row, and the per-row drift after normalization.
#[derive(Debug, Clone)]
pub struct HornMap {
    pub samples: Vec<(C64, C64)>,
    pub normalization: C64,
    pub periodicity_residual: f64,
    pub drift: Vec<(f64, f64)>,
}

pub fn horn_map_samples(
    p: &PerturbedParabolic,
    band: (f64, f64),
    n_samples: usize,
) -> Result<HornMap, ParabolicError> {
    if !(band.0 > 0.0) || !(band.1 > band.0) {
        return Err(ParabolicError::ChartOverlapEmpty);
    }
    let jet = parabolic_jet(p)?;
    let fwd = |w: C64| -> Option<C64> {
        let v = p.step(w);
        if v.is_finite() {
            Some(v)
        } else {
            None
        }
    };
    let inv = |w: C64| inverse_step(p, w);
    let jet_inv = if matches!(p.map, LocalMap::MoebiusParabolic) {
        ParabolicJet {
            q: 1,
            c: C64::new(-1.0, 0.0),
            beta: C64::new(0.0, 0.0),
        }
    } else {
        measure_jet(&inv, p.q)?
    };
    let phi_att = |z: C64| fatou_coordinate_raw(&fwd, &jet, z, false);
    let phi_rep = |z: C64| fatou_coordinate_raw(&inv, &jet_inv, z, false).map(|v| -v);

    let theta_rep = (-jet.c.arg()) / jet.q as f64;
    let theta_att = (std::f64::consts::PI - jet.c.arg()) / jet.q as f64;
    let mid = (theta_rep + theta_att) / 2.0;
    let seed_for = |w: C64| -> Result<C64, ParabolicError> {
        let target = C64::new(jet_inv.q as f64, 0.0) * jet_inv.c * w;
        if target.norm() < 1e-280 {
            return Err(ParabolicError::ChartOverlapEmpty);
        }
        let zq = C64::new(1.0, 0.0) / target;
        let r = zq.norm().powf(1.0 / jet.q as f64);
        let base_arg = zq.arg() / jet.q as f64;
        let mut best = C64::new(0.0, 0.0);
        let mut best_gap = f64::INFINITY;
        for k in 0..jet.q {
            let cand = C64::from_polar(r, base_arg + TAU * k as f64 / jet.q as f64);
            let gap = (cand.arg() - mid).rem_euclid(TAU);
            let gap = gap.min(TAU - gap);
            if gap < best_gap {
                best_gap = gap;
                best = cand;
            }
        }
        Ok(best)
    };
    let psi_rep = |w: C64| -> Result<C64, ParabolicError> {
        let mut z = seed_for(w)?;
        for _ in 0..40 {
            let value = phi_rep(z).map_err(|_| ParabolicError::ChartOverlapEmpty)?;
            let r = value - w;
            if r.norm() < 1e-9 {
                return Ok(z);
            }
            let h = 1e-6 * z.norm();
            let plus = phi_rep(z + C64::new(h, 0.0)).map_err(|_| ParabolicError::ChartOverlapEmpty)?;
            let minus =
                phi_rep(z - C64::new(h, 0.0)).map_err(|_| ParabolicError::ChartOverlapEmpty)?;
            let d = (plus - minus) / C64::new(2.0 * h, 0.0);
            if d.norm() < 1e-280 {
                return Err(ParabolicError::ChartOverlapEmpty);
            }
            z -= r / d;
        }
        Err(ParabolicError::ChartOverlapEmpty)
    };

    let n_rows = 3usize;
    let n_re = (n_samples.max(6) / n_rows).max(2);
    let mut samples = Vec::new();
    let mut periodicity = 0.0f64;
    let mut rows: Vec<(f64, Vec<(C64, C64)>)> = Vec::new();
    for row in 0..n_rows {
        let im = band.0 + (band.1 - band.0) * row as f64 / (n_rows - 1) as f64;
        let mut row_samples = Vec::new();
        for j in 0..n_re {
            let w = C64::new(j as f64 / n_re as f64, im);
            let z = psi_rep(w)?;
            let e = phi_att(z).map_err(|_| ParabolicError::ChartOverlapEmpty)?;
            let z1 = psi_rep(w + C64::new(1.0, 0.0))?;
            let e1 = phi_att(z1).map_err(|_| ParabolicError::ChartOverlapEmpty)?;
            periodicity = periodicity.max((e1 - e - C64::new(1.0, 0.0)).norm());
            row_samples.push((w, e));
            samples.push((w, e));
        }
        rows.push((im, row_samples));
    }
    let top = &rows[n_rows - 1].1;
    let normalization =
        top.iter().map(|&(w, e)| e - w).sum::<C64>() / C64::new(top.len() as f64, 0.0);
    let drift = rows
        .iter()
        .map(|(im, row)| {
            let mean = row
                .iter()
                .map(|&(w, e)| (e - normalization - w).norm())
                .sum::<f64>()
                / row.len() as f64;
            (*im, mean)
        })
        .collect();
    Ok(HornMap {
        samples,
        normalization,
        periodicity_residual: periodicity,
        drift,
    })
}

/// Outcome of the transported-derivative return-multiplier comparison.
#[derive(Debug, Clone)]
pub struct ReturnMultiplierReport {
    pub alpha: C64,
    pub sigma: C64,
    pub steps: usize,
    pub measured_log: C64,
    pub expected_log: C64,
    pub modulus_ratio: f64,
    pub arg_offset_turns: f64,
    pub passed: bool,
}

/// Modulus of `z / (z - sigma)` on the section circle near the gate end.
const RETURN_SECTION_MODULUS: f64 = 1e-3;
/// Number of circle points averaged for the derivative estimate.
const RETURN_CIRCLE_POINTS: usize = 4;

fn transit_deviation(
    p: &PerturbedParabolic,
    sigma: C64,
    z0: C64,
    budget: usize,
) -> Result<(C64, usize), ParabolicError> {
    let alpha = p.alpha;
    let zeta = |z: C64| z / (z - sigma);
    let mut z = z0;
    let mut log_zeta = C64::new(0.0, 0.0);
    let mut steps = 0usize;
    for _ in 0..budget {
        let w = p.map.eval(z);
        if !w.is_finite()
            || w.norm() > 8.0 * sigma.norm()
            || w.norm() < 1e-8 * z0.norm()
            || (w - sigma).norm() < 1e-9 * sigma.norm()
        {
            return Err(ParabolicError::GateNotCrossed);
        }
        let step_log = (zeta(w) / zeta(z)).ln();
        if step_log.im.abs() > 1.5 {
            return Err(ParabolicError::GateNotCrossed);
        }
        log_zeta += step_log;
        z = w;
        steps += 1;
        if log_zeta.im >= TAU {
            let deviation = log_zeta / alpha - C64::new(0.0, TAU * steps as f64);
            return Ok((deviation, steps));
        }
    }
    Err(ParabolicError::GateNotCrossed)
}

/// Transports a small circle of section points once around the gate between
/// the fixed points `0` and `sigma`, tracking the cylinder coordinate
/// `Log(z/(z - sigma)) / (2 pi i alpha)` along each orbit.  One revolution
/// advances the accumulated coordinate by the step count `n` while the
/// principal branch drops by `1/alpha`, so the induced return map on the
/// quotient cylinder end has derivative `exp(-2 pi i / alpha)`; the measured
/// branch drop is compared against that value.
pub fn return_multiplier_check(
    p: &PerturbedParabolic,
) -> Result<ReturnMultiplierReport, ParabolicError> {
    if p.q != 1 {
        return Err(ParabolicError::UnsupportedRotation);
    }
    let alpha = p.alpha;
    if alpha.norm() < 1e-14 || alpha.arg().abs() >= std::f64::consts::FRAC_PI_4 {
        return Err(ParabolicError::SectorViolated);
    }
    let mut sigma = C64::new(1.0, 0.0) - (C64::new(0.0, TAU) * alpha).exp();
    for _ in 0..80 {
        let (v, dv) = p.map.eval_with_deriv(sigma);
        let r = v - sigma;
        if r.norm() < 1e-15 * (1.0 + sigma.norm()) {
            break;
        }
        let denom = dv - C64::new(1.0, 0.0);
        if denom.norm() < 1e-280 {
            return Err(ParabolicError::GateNotCrossed);
        }
        sigma -= r / denom;
    }
    if sigma.norm() < 1e-12 || (p.map.eval(sigma) - sigma).norm() > 1e-10 * (1.0 + sigma.norm()) {
        return Err(ParabolicError::GateNotCrossed);
    }

    let revolution = 1.0 / alpha.re;
    if !(revolution >= 4.0) || revolution > 1e6 {
        return Err(ParabolicError::GateNotCrossed);
    }
    let budget = (40.0 * revolution) as usize + 1000;
    let height = (1.0 / RETURN_SECTION_MODULUS).ln() / (TAU * alpha.re);
    let mut mean = C64::new(0.0, 0.0);
    let mut steps_total = 0usize;
    for j in 0..RETURN_CIRCLE_POINTS {
        let w_tilde = C64::new(j as f64 / RETURN_CIRCLE_POINTS as f64, height);
        let zeta0 = (C64::new(0.0, TAU) * alpha * w_tilde).exp();
        let denom = zeta0 - C64::new(1.0, 0.0);
        if denom.norm() < 1e-12 {
            return Err(ParabolicError::GateNotCrossed);
        }
        let z0 = sigma * zeta0 / denom;
        let (deviation, steps) = transit_deviation(p, sigma, z0, budget)?;
        mean += deviation.exp();
        steps_total += steps;
    }
    mean /= C64::new(RETURN_CIRCLE_POINTS as f64, 0.0);
    if !mean.is_finite() || mean.norm() < 1e-280 {
        return Err(ParabolicError::GateNotCrossed);
    }
    let deviation_log = mean.ln();
    let expected_log = C64::new(0.0, -TAU) / alpha;
    let measured_log = expected_log + deviation_log;
    let arg_offset = (deviation_log.im / TAU).abs();
    let modulus_ratio = deviation_log.re.exp();
    let passed = deviation_log.re.abs() <= 1.05f64.ln() && arg_offset <= 0.05;
    Ok(ReturnMultiplierReport {
        alpha,
        sigma,
        steps: steps_total,
        measured_log,
        expected_log,
        modulus_ratio,
        arg_offset_turns: arg_offset,
        passed,
    })
}
