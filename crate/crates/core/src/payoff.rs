//! Closed-form expected payoffs.
//!
//! A player's expected market splits into a left and a right part, each
//! depending only on the length of the adjacent region. A hinterland of
//! length `d` yields `E[H(d)] = (1 - e^{-λd}) / λ`; an internal region of
//! length `d` yields `E[M(d)] = (1 - e^{-λd}(1 + λd/2)) / λ`. At `λ = 0`
//! both reduce to their fault-free limits `d` and `d / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::faultline::{GameConfig, Profile};

fn check(lambda: f64, d: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(domain(format!("fault rate must be finite and >= 0, got {lambda}")));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(domain(format!("region length must be finite and >= 0, got {d}")));
    }
    Ok(())
}

/// Expected profit from a hinterland of length `d`.
pub fn eh(lambda: f64, d: f64) -> Result<f64> {
    check(lambda, d)?;
    Ok(hinterland(lambda, d))
}

/// Expected profit from an internal region of length `d`.
pub fn em(lambda: f64, d: f64) -> Result<f64> {
    check(lambda, d)?;
    Ok(internal(lambda, d))
}

// -expm1 keeps full relative precision as λd -> 0
pub(crate) fn hinterland(lambda: f64, d: f64) -> f64 {
    if lambda == 0.0 {
        return d;
    }
    -(-lambda * d).exp_m1() / lambda
}

pub(crate) fn internal(lambda: f64, d: f64) -> f64 {
    if lambda == 0.0 {
        return 0.5 * d;
    }
    let x = lambda * d;
    (-(-x).exp_m1() - 0.5 * x * (-x).exp()) / lambda
}

/// `d/dd E[H(d)] = e^{-λd}`.
pub fn eh_prime(lambda: f64, d: f64) -> f64 {
    (-lambda * d).exp()
}

/// `d/dd E[M(d)] = e^{-λd}(1 + λd)/2`.
pub fn em_prime(lambda: f64, d: f64) -> f64 {
    0.5 * (-lambda * d).exp() * (1.0 + lambda * d)
}

/// Expected market of a peripheral server at distance `t` from the line end
/// whose neighbor sits at distance `s` from the same end (`0 <= t <= s`).
///
/// Continuous extension: colocation at `t = s` is not divided.
pub fn theta(lambda: f64, t: f64, s: f64) -> f64 {
    hinterland(lambda, t) + internal(lambda, s - t)
}

/// Expected market of an internal server at offset `t` inside a gap of
/// length `s` between its neighbors. Continuous extension as for [`theta`].
pub fn mu(lambda: f64, t: f64, s: f64) -> f64 {
    internal(lambda, t) + internal(lambda, s - t)
}

/// Expected payoff of one player, split into half-markets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffBreakdown {
    /// Expected left half-market `E[D^l]`.
    pub left: f64,
    /// Expected right half-market `E[D^r]`.
    pub right: f64,
    /// Number of players stacked at this coordinate.
    pub gamma: usize,
    /// `(left + right) / gamma`.
    pub total: f64,
    pub left_peripheral: bool,
    pub right_peripheral: bool,
}

/// Expected payoff `u_i` of player `i` (γ-divided, exact colocation
/// semantics).
pub fn expected_payoff(config: &GameConfig, profile: &Profile, i: usize) -> Result<PayoffBreakdown> {
    let x = profile.position(i)?;
    let lambda = config.lambda;
    let (left, left_peripheral) = match profile.left_neighbor(i)? {
        None => (hinterland(lambda, x), true),
        Some(nb) => (internal(lambda, x - nb), false),
    };
    let (right, right_peripheral) = match profile.right_neighbor(i)? {
        None => (hinterland(lambda, 1.0 - x), true),
        Some(nb) => (internal(lambda, nb - x), false),
    };
    let gamma = profile.gamma(i)?;
    Ok(PayoffBreakdown {
        left,
        right,
        gamma,
        total: (left + right) / gamma as f64,
        left_peripheral,
        right_peripheral,
    })
}

/// Expected payoffs of all players, in profile order.
pub fn expected_payoffs(config: &GameConfig, profile: &Profile) -> Vec<f64> {
    (0..profile.len())
        .map(|i| {
            expected_payoff(config, profile, i)
                .expect("index in range")
                .total
        })
        .collect()
}
