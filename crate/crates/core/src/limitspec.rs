//! Spectrum of the ε → 0 limit operator.
//!
//! Eliminating the room field `u₂ = α u₁ / (α − λ)` turns the coupled limit
//! problem into a strip problem with the λ-dependent Robin coefficient
//! `μ(λ) = α r λ / (α − λ)` on the decorated side. Each transverse Floquet
//! mode `θ = φ + 2πm` then reduces to the scalar dispersion relation
//! `f_θ(λ) = μ(λ)` with
//!
//! ```text
//! f_θ(λ) =  κ tanh(κL),  κ = √(θ² − λ)   for λ < θ²
//! f_θ(λ) = −k tan(kL),   k = √(λ − θ²)   for λ > θ²
//! ```
//!
//! `f_θ − μ` decreases strictly between consecutive poles (`λ = α` and the
//! tangent poles), running from +∞ to −∞, so each such interval holds
//! exactly one root. Roots are bracketed by the poles themselves.

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;

use serde::Serialize;

const BIG: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitParams {
    pub alpha: f64,
    pub r: f64,
    /// Strip width `L`.
    pub width: f64,
}

impl LimitParams {
    pub fn new(alpha: f64, r: f64, width: f64) -> LimitParams {
        assert!(
            alpha > 0.0 && r > 0.0 && width > 0.0,
            "limit parameters must be positive"
        );
        LimitParams { alpha, r, width }
    }

    /// `(π / 2L)²`, the bottom of the first transverse Neumann-Dirichlet band.
    pub fn gap_threshold(&self) -> f64 {
        (PI / (2.0 * self.width)).powi(2)
    }

    pub fn has_gap(&self) -> bool {
        self.alpha < self.gap_threshold()
    }

    /// `μ(λ) = α r λ / (α − λ)`.
    pub fn robin_coefficient(&self, lambda: f64) -> f64 {
        self.alpha * self.r * lambda / (self.alpha - lambda)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitError {
    BracketFailure {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    IdentityViolation {
        mu: f64,
        beta: f64,
        defect: f64,
    },
}

impl fmt::Display for LimitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitError::BracketFailure { lo, hi, f_lo, f_hi } => write!(
                f,
                "BRACKET_FAILURE: F({lo:e}) = {f_lo:e} and F({hi:e}) = {f_hi:e} do not straddle zero"
            ),
            LimitError::IdentityViolation { mu, beta, defect } => {
                write!(f, "BRACKET_FAILURE: fixed point mu = {mu}, beta = {beta} violates the identity by {defect:e}")
            }
        }
    }
}

impl std::error::Error for LimitError {}

/// Bisection down to adjacent floats; `g(lo) > 0 > g(hi)` is assumed and
/// the endpoints are never evaluated.
fn bisect_decreasing(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = g(mid);
        if v > 0.0 {
            lo = mid;
        } else if v < 0.0 {
            hi = mid;
        } else {
            return mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest eigenvalue of `−u'' = λu` on `(−L, 0)` with `u'(−L) = 0` and
/// `u'(0) = μ u(0)`.
pub fn beta_of_mu(mu: f64, width: f64) -> f64 {
    assert!(mu.is_finite() && width > 0.0);
    if mu == 0.0 {
        return 0.0;
    }
    if mu < 0.0 {
        // −k tan(kL) = μ with k ∈ (0, π/2L)
        let k = bisect_decreasing(0.0, PI / (2.0 * width), |k| -k * (k * width).tan() - mu);
        k * k
    } else {
        // κ tanh(κL) = μ, increasing in κ
        let mut hi = 1.0;
        while hi * (hi * width).tanh() < mu {
            hi *= 2.0;
        }
        let kappa = bisect_decreasing(0.0, hi, |x| mu - x * (x * width).tanh());
        -kappa * kappa
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaStar {
    pub beta: f64,
    pub mu: f64,
    /// `|μ* − α r β / (α − β)| / |μ*|`.
    pub identity_defect: f64,
}

/// Gap edge `β`: the unique `μ* < −αr` with `β(μ*) = α μ* / (α r + μ*)`.
/// `None` when there is no gap.
pub fn solve_beta_star(p: &LimitParams) -> Result<Option<BetaStar>, LimitError> {
    if !p.has_gap() {
        return Ok(None);
    }
    let ar = p.alpha * p.r;
    let f = |mu: f64| beta_of_mu(mu, p.width) - p.alpha * mu / (ar + mu);
    let (lo, hi) = (-BIG, -ar - 1e-6 * ar);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(LimitError::BracketFailure { lo, hi, f_lo, f_hi });
    }
    let mu = bisect_decreasing(lo, hi, f);
    let beta = p.alpha * mu / (ar + mu);
    let defect = ((mu - ar * beta / (p.alpha - beta)) / mu).abs();
    if defect > 1e-9 {
        return Err(LimitError::IdentityViolation { mu, beta, defect });
    }
    Ok(Some(BetaStar {
        beta,
        mu,
        identity_defect: defect,
    }))
}

/// `f_θ(λ) − μ(λ)`.
pub fn dispersion_residual(p: &LimitParams, theta: f64, lambda: f64) -> f64 {
    let t2 = theta * theta;
    let f = if lambda < t2 {
        let kappa = (t2 - lambda).sqrt();
        kappa * (kappa * p.width).tanh()
    } else if lambda > t2 {
        let k = (lambda - t2).sqrt();
        -k * (k * p.width).tan()
    } else {
        0.0
    };
    f - p.robin_coefficient(lambda)
}

/// Poles of the dispersion residual of mode `θ` in ascending order, enough
/// to delimit `count` root intervals.
fn poles(p: &LimitParams, theta: f64, count: usize) -> Vec<f64> {
    let mut out: Vec<f64> = (0..count)
        .map(|n| theta * theta + ((n as f64 + 0.5) * PI / p.width).powi(2))
        .collect();
    out.push(p.alpha);
    out.sort_by(f64::total_cmp);
    out.truncate(count);
    out
}

/// First `count` roots of mode `θ`, one per pole interval.
pub fn mode_roots(p: &LimitParams, theta: f64, count: usize) -> Vec<f64> {
    let mut roots = Vec::with_capacity(count);
    let mut lo = 0.0;
    for hi in poles(p, theta, count) {
        if hi > lo {
            let root = if lo == 0.0 && theta == 0.0 {
                0.0
            } else {
                bisect_decreasing(lo, hi, |l| dispersion_residual(p, theta, l))
            };
            roots.push(root);
        }
        lo = hi;
    }
    roots
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiberBands {
    pub phi: f64,
    /// Ascending values below α.
    pub lower: Vec<f64>,
    /// Ascending values above α.
    pub upper: Vec<f64>,
    pub modes_used: (i64, i64),
}

/// Transverse indices `m` with `(φ + 2πm)² ≤ Λ_max + α`, widened to contain
/// at least the mode closest to zero.
pub fn default_mode_range(phi: f64, lambda_max: f64, alpha: f64) -> RangeInclusive<i64> {
    let s = (lambda_max + alpha).sqrt();
    let lo = ((-s - phi) / (2.0 * PI)).ceil() as i64;
    let hi = ((s - phi) / (2.0 * PI)).floor() as i64;
    let nearest = (-phi / (2.0 * PI)).round() as i64;
    lo.min(nearest)..=hi.max(nearest)
}

/// Limit fiber eigenvalues at quasimomentum `φ`, `k_per_mode` pole intervals
/// per transverse mode.
pub fn limit_fiber_bands(
    p: &LimitParams,
    phi: f64,
    m_range: RangeInclusive<i64>,
    k_per_mode: usize,
) -> FiberBands {
    let modes_used = (*m_range.start(), *m_range.end());
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for m in m_range {
        let theta = phi + 2.0 * PI * m as f64;
        for root in mode_roots(p, theta, k_per_mode) {
            if root < p.alpha {
                lower.push(root);
            } else {
                upper.push(root);
            }
        }
    }
    lower.sort_by(f64::total_cmp);
    upper.sort_by(f64::total_cmp);
    FiberBands {
        phi,
        lower,
        upper,
        modes_used,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSpectrum {
    pub alpha: f64,
    pub beta: Option<f64>,
    pub has_gap: bool,
    /// Closed intervals; the last one is unbounded above.
    pub intervals: Vec<(f64, f64)>,
}

impl LimitSpectrum {
    pub fn contains(&self, lambda: f64, tol: f64) -> bool {
        self.intervals
            .iter()
            .any(|&(a, b)| lambda >= a - tol && lambda <= b + tol)
    }

    /// Distance from `lambda` to the set.
    pub fn distance(&self, lambda: f64) -> f64 {
        self.intervals
            .iter()
            .map(|&(a, b)| {
                if lambda < a {
                    a - lambda
                } else if lambda > b {
                    lambda - b
                } else {
                    0.0
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The set clipped to `[0, top]`.
    pub fn within(&self, top: f64) -> Vec<(f64, f64)> {
        self.intervals
            .iter()
            .filter(|&&(a, _)| a <= top)
            .map(|&(a, b)| (a, b.min(top)))
            .collect()
    }
}

/// `[0, α] ∪ [β, ∞)` with a gap, `[0, ∞)` otherwise.
pub fn limit_spectrum(p: &LimitParams) -> Result<LimitSpectrum, LimitError> {
    let star = solve_beta_star(p)?;
    Ok(match star {
        Some(s) => LimitSpectrum {
            alpha: p.alpha,
            beta: Some(s.beta),
            has_gap: true,
            intervals: vec![(0.0, p.alpha), (s.beta, f64::INFINITY)],
        },
        None => LimitSpectrum {
            alpha: p.alpha,
            beta: None,
            has_gap: false,
            intervals: vec![(0.0, f64::INFINITY)],
        },
    })
}
