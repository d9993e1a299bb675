//! Canonical pairs, the α-reparameterization and the existence threshold.
//!
//! With `α = λM` and `c = 1 - H/M` the canonical-pair system becomes
//! explicit in `α`:
//!
//! ```text
//! c = ln((1+α)/2) / α      M = 1 / (n+1-2c)      H = (1-c) M
//! λ = α(n+1) - 2 ln((1+α)/2)
//! ```
//!
//! so solving for the pair of a given `(n, λ)` is a single monotone scalar
//! root find in `α`. Equilibrium existence for `n >= 3` reduces to
//! comparing two implicitly defined curves `β₁(α)` and `β₂(α)` whose unique
//! crossing `α₀` fixes `λ_min(n) = λ(α₀)`.

use std::f64::consts::LN_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::faultline::{GameConfig, Profile};
use crate::numeric::{golden_max, newton_bisect, Tolerances};

const ALPHA_FLOOR: f64 = 1e-9;
const ALPHA_CEIL: f64 = 64.0;
const BETA_CEIL: f64 = 32.0;

/// `ln((1+α)/2)`, accurate near `α = 1`.
fn log_half_one_plus(alpha: f64) -> f64 {
    (0.5 * (alpha - 1.0)).ln_1p()
}

/// `c(α) = ln((1+α)/2) / α`.
pub fn c_of_alpha(alpha: f64) -> f64 {
    log_half_one_plus(alpha) / alpha
}

/// `λ(α) = α(n+1) - 2 ln((1+α)/2)`.
pub fn lambda_of_alpha(alpha: f64, n: usize) -> f64 {
    alpha * (n as f64 + 1.0) - 2.0 * log_half_one_plus(alpha)
}

fn dlambda_dalpha(alpha: f64, n: usize) -> f64 {
    n as f64 + 1.0 - 2.0 / (1.0 + alpha)
}

/// Explicit canonical quantities for a given `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reparam {
    pub c: f64,
    pub m: f64,
    pub h: f64,
    pub lambda: f64,
}

pub fn reparam_forward(alpha: f64, n: usize) -> Result<Reparam> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(domain(format!("alpha must be positive, got {alpha}")));
    }
    if n < 2 {
        return Err(Error::UnsupportedN(n));
    }
    let c = c_of_alpha(alpha);
    let m = 1.0 / (n as f64 + 1.0 - 2.0 * c);
    Ok(Reparam {
        c,
        m,
        h: (1.0 - c) * m,
        lambda: lambda_of_alpha(alpha, n),
    })
}

/// Unique `α > 0` with `λ(α) = lambda`.
pub fn lambda_to_alpha(lambda: f64, n: usize) -> Result<f64> {
    lambda_to_alpha_with(lambda, n, &Tolerances::default())
}

pub fn lambda_to_alpha_with(lambda: f64, n: usize, tol: &Tolerances) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedN(n));
    }
    if !(lambda.is_finite() && lambda > 2.0 * LN_2) {
        return Err(Error::NoCanonicalPair { n, lambda });
    }
    let f = |a: f64| lambda_of_alpha(a, n) - lambda;
    let mut lo = ALPHA_FLOOR;
    while f(lo) >= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NoCanonicalPair { n, lambda });
        }
    }
    let mut hi = ALPHA_CEIL;
    while f(hi) <= 0.0 {
        hi *= 2.0;
    }
    newton_bisect(f, |a| dlambda_dalpha(a, n), lo, hi, tol)
}

/// `(H, M)` solving the canonical-pair system for `(n, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalPair {
    pub n: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub c: f64,
    pub h: f64,
    pub m: f64,
}

/// Residuals of the three defining relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResiduals {
    /// `e^{λ(M-H)} - (1+λM)/2`.
    pub optimal_h: f64,
    /// `2H + (n-1)M - 1`.
    pub total_length: f64,
    /// `λH - ln 2`; must be positive.
    pub hinterland_margin: f64,
}

impl CanonicalPair {
    pub fn residuals(&self) -> PairResiduals {
        let l = self.lambda;
        PairResiduals {
            optimal_h: (l * (self.m - self.h)).exp() - 0.5 * (1.0 + l * self.m),
            total_length: 2.0 * self.h + (self.n as f64 - 1.0) * self.m - 1.0,
            hinterland_margin: l * self.h - LN_2,
        }
    }

    /// `x_i = H + (i-1) M`, with the last position pinned to `1 - H`.
    pub fn profile(&self) -> Profile {
        let mut xs: Vec<f64> = (0..self.n)
            .map(|i| self.h + i as f64 * self.m)
            .collect();
        if let Some(last) = xs.last_mut() {
            *last = 1.0 - self.h;
        }
        let xs = xs.into_iter().map(|x| x.clamp(0.0, 1.0)).collect();
        Profile::new(xs).expect("canonical positions lie in [0, 1]")
    }
}

pub fn canonical_pair(config: &GameConfig) -> Result<CanonicalPair> {
    canonical_pair_with(config, &Tolerances::default())
}

pub fn canonical_pair_with(config: &GameConfig, tol: &Tolerances) -> Result<CanonicalPair> {
    let GameConfig { n, lambda } = *config;
    if n < 2 {
        return Err(Error::NoCanonicalPair { n, lambda });
    }
    let alpha = lambda_to_alpha_with(lambda, n, tol)?;
    let r = reparam_forward(alpha, n)?;
    Ok(CanonicalPair {
        n,
        lambda,
        alpha,
        c: r.c,
        h: r.h,
        m: r.m,
    })
}

pub fn canonical_profile(config: &GameConfig) -> Result<Profile> {
    canonical_pair(config).map(|p| p.profile())
}

/// Diagnostic state of the existence test at one `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReparamPoint {
    pub alpha: f64,
    pub c: f64,
    /// Root `β >= 0` of `e^{-α}(1+α) = e^{-2β}(1+β)`.
    pub beta1: Option<f64>,
    /// Root `β >= 0` of `e^{-α}(1+α/2) = e^{-β}(3/4+β/2)`; absent when
    /// `e^{-α}(1+α/2) > 3/4`.
    pub beta2: Option<f64>,
}

impl ReparamPoint {
    /// `β₁ <= β₂`; fails whenever `β₂` is absent.
    pub fn condition_holds(&self) -> bool {
        matches!((self.beta1, self.beta2), (Some(b1), Some(b2)) if b1 <= b2)
    }
}

// Both curves are solved in log form: ln(1+β) - 2β and ln(3/4 + β/2) - β
// are strictly decreasing on β >= 0.

fn solve_decreasing<F, D>(f: F, df: D, tol: &Tolerances) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if f(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let mut hi = BETA_CEIL;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    newton_bisect(f, df, 0.0, hi, tol)
}

fn beta1_with(alpha: f64, tol: &Tolerances) -> Result<f64> {
    let target = alpha.ln_1p() - alpha;
    solve_decreasing(
        |b| b.ln_1p() - 2.0 * b - target,
        |b| 1.0 / (1.0 + b) - 2.0,
        tol,
    )
}

fn beta2_with(alpha: f64, tol: &Tolerances) -> Result<Option<f64>> {
    let target = (0.5 * alpha).ln_1p() - alpha;
    if target > 0.75f64.ln() {
        return Ok(None);
    }
    solve_decreasing(
        |b| (0.75 + 0.5 * b).ln() - b - target,
        |b| 1.0 / (1.5 + b) - 1.0,
        tol,
    )
    .map(Some)
}

pub fn beta_pair(alpha: f64) -> Result<ReparamPoint> {
    beta_pair_with(alpha, &Tolerances::default())
}

pub fn beta_pair_with(alpha: f64, tol: &Tolerances) -> Result<ReparamPoint> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(domain(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(ReparamPoint {
        alpha,
        c: if alpha > 0.0 { c_of_alpha(alpha) } else { f64::NEG_INFINITY },
        beta1: Some(beta1_with(alpha, tol)?),
        beta2: beta2_with(alpha, tol)?,
    })
}

/// `ln[e^{-β₁}(3/4+β₁/2)] - ln[e^{-α}(1+α/2)]`.
///
/// Nonnegative exactly when `β₁ <= β₂` (with `β₂` absent counting as
/// failure), so its sign decides existence at `α`.
pub fn existence_margin(alpha: f64) -> Result<f64> {
    existence_margin_with(alpha, &Tolerances::default()).map(|(m, _)| m)
}

// returns (margin, d margin / d alpha)
fn existence_margin_with(alpha: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    let b1 = beta1_with(alpha, tol)?;
    let value = (0.75 + 0.5 * b1).ln() - b1 - ((0.5 * alpha).ln_1p() - alpha);
    let db1 = alpha / (1.0 + alpha) * (1.0 + b1) / (1.0 + 2.0 * b1);
    let slope = (1.0 / (1.5 + b1) - 1.0) * db1 - (1.0 / (2.0 + alpha) - 1.0);
    Ok((value, slope))
}

/// The crossing `(α₀, β₀)` of the two β curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub alpha0: f64,
    pub beta0: f64,
    /// `c(α₀)`: the smallest `c` of any equilibrium for `n >= 3`.
    pub c_min: f64,
}

impl ThresholdResult {
    /// `λ_min(n) = (n+1)α₀ - 2 ln((1+α₀)/2)`.
    pub fn lambda_min(&self, n: usize) -> f64 {
        lambda_of_alpha(self.alpha0, n)
    }
}

pub fn compute_threshold(tol: &Tolerances) -> Result<ThresholdResult> {
    let margin = |a: f64| existence_margin_with(a, tol).map(|(m, _)| m).unwrap_or(f64::NAN);
    let slope = |a: f64| existence_margin_with(a, tol).map(|(_, s)| s).unwrap_or(f64::NAN);
    let alpha0 = newton_bisect(margin, slope, ALPHA_FLOOR, 1.0, tol)?;
    Ok(ThresholdResult {
        alpha0,
        beta0: beta1_with(alpha0, tol)?,
        c_min: c_of_alpha(alpha0),
    })
}

/// Memoized threshold at default tolerances.
pub fn threshold() -> &'static ThresholdResult {
    static CACHE: OnceLock<ThresholdResult> = OnceLock::new();
    CACHE.get_or_init(|| {
        compute_threshold(&Tolerances::default()).expect("threshold bracket (0, 1] is valid")
    })
}

pub fn lambda_min(n: usize) -> f64 {
    threshold().lambda_min(n)
}

/// `(α_max, c_max)`: the maximizer of `c(α)`, found on `[1, 10]`.
pub fn alpha_max() -> (f64, f64) {
    static CACHE: OnceLock<(f64, f64)> = OnceLock::new();
    *CACHE.get_or_init(|| golden_max(c_of_alpha, 1.0, 10.0, 1e-10))
}

/// `λ_max(n) = λ(α_max)`: the rate maximizing the canonical spacing `M`.
pub fn lambda_max(n: usize) -> f64 {
    lambda_of_alpha(alpha_max().0, n)
}

/// Whether `FPH(n, λ)` admits a pure Nash equilibrium.
///
/// For `λ = 0` this reports the classical fault-free answer (none for
/// `n = 3`, some for every other `n`).
pub fn ne_exists(config: &GameConfig) -> bool {
    match config.n {
        1 | 2 => true,
        n if config.is_fault_free() => n != 3,
        n => config.lambda >= lambda_min(n),
    }
}

/// The unique equilibrium for `λ > 0`, or `None` when there is none.
///
/// The fault-free game with `n >= 4` has a continuum of equilibria and is
/// rejected here; see [`crate::efficiency::faultfree_ne_profile`].
pub fn nash_equilibrium(config: &GameConfig) -> Result<Option<Profile>> {
    let GameConfig { n, lambda } = *config;
    match n {
        1 => Ok(Some(Profile::new(vec![0.5])?)),
        2 if lambda > 2.0 * LN_2 => canonical_profile(config).map(Some),
        2 => Ok(Some(Profile::new(vec![0.5, 0.5])?)),
        3 if config.is_fault_free() => Ok(None),
        _ if config.is_fault_free() => Err(domain(
            "the fault-free game has no unique equilibrium for n >= 4",
        )),
        _ if ne_exists(config) => canonical_profile(config).map(Some),
        _ => Ok(None),
    }
}
