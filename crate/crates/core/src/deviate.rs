//! Best responses and equilibrium verification.
//!
//! With player `i` removed, the others split the line into two hinterlands
//! and a sequence of internal gaps. The payoff of `i` is strictly concave
//! inside each region, so the best response is the best of the per-region
//! optima: the midpoint of an internal gap, or the root of
//! `e^{λ(s-2t)} = (1+λ(s-t))/2` in a hinterland. A grid scan over the
//! exact payoff serves as an independent check.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalPair;
use crate::error::{domain, Error, Result};
use crate::faultline::{GameConfig, Profile};
use crate::numeric::{golden_max, newton_bisect, Tolerances};
use crate::payoff::{expected_payoff, hinterland, internal, theta};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const GRID_RESOLUTION: usize = 10_000;

const TIE: f64 = 1e-14;

/// Which region a candidate deviation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Candidate {
    Stay,
    LeftHinterland,
    RightHinterland,
    Internal,
    Colocate,
    Center,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub player: usize,
    pub best_point: f64,
    pub best_payoff: f64,
    pub current_payoff: f64,
    /// `best_payoff - current_payoff`.
    pub gain: f64,
    pub source: Candidate,
    /// The best payoff is a supremum approached next to a neighbor rather
    /// than attained at `best_point` itself.
    pub limit: bool,
}

/// Verdict plus per-player reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub is_equilibrium: bool,
    pub max_gain: f64,
    pub reports: Vec<DeviationReport>,
}

impl Verification {
    fn from_reports(reports: Vec<DeviationReport>, tol: f64) -> Self {
        let max_gain = reports
            .iter()
            .map(|r| r.gain)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            is_equilibrium: max_gain <= tol,
            max_gain,
            reports,
        }
    }
}

fn check_rate(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("fault rate must be finite and >= 0, got {lambda}")))
    }
}

/// Optimal distance `t*` from the line end for a server whose neighbor is at
/// distance `s`, and the payoff `θ(t*, s)` there.
pub fn hinterland_optimum(lambda: f64, s: f64) -> Result<(f64, f64)> {
    check_rate(lambda)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(domain(format!("hinterland span must be in (0, 1], got {s}")));
    }
    if lambda * s <= LN_2 {
        return Ok((s, theta(lambda, s, s)));
    }
    let slope = |t: f64| (-lambda * t).exp() - 0.5 * (-lambda * (s - t)).exp() * (1.0 + lambda * (s - t));
    let curvature = |t: f64| {
        -lambda * (-lambda * t).exp() - 0.5 * lambda * lambda * (s - t) * (-lambda * (s - t)).exp()
    };
    let t = newton_bisect(slope, curvature, 0.0, s, &Tolerances::default())?;
    Ok((t, theta(lambda, t, s)))
}

/// Optimum inside an internal gap of length `s`: always the midpoint.
pub fn internal_optimum(lambda: f64, s: f64) -> Result<(f64, f64)> {
    check_rate(lambda)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(domain(format!("gap length must be in [0, 1], got {s}")));
    }
    Ok((0.5 * s, 2.0 * internal(lambda, 0.5 * s)))
}

fn pick(best: &mut (f64, f64, Candidate, bool), cand: (f64, f64, Candidate, bool)) {
    let better = cand.1 > best.1 + TIE || ((cand.1 - best.1).abs() <= TIE && cand.0 < best.0);
    if better {
        *best = cand;
    }
}

/// Analytic best response of player `i` against the rest of `profile`.
///
/// Exact colocation is only offered as a candidate when `n = 2`; for larger
/// `n` a colocated spot is always beaten by a nearby isolated one.
pub fn best_response(config: &GameConfig, profile: &Profile, i: usize) -> Result<DeviationReport> {
    let lambda = config.lambda;
    let x = profile.position(i)?;
    let current = expected_payoff(config, profile, i)?.total;
    let others = profile.others(i)?;

    let mut best = (x, current, Candidate::Stay, false);
    if others.is_empty() {
        pick(&mut best, (0.5, 2.0 * hinterland(lambda, 0.5), Candidate::Center, false));
    } else {
        let first = others[0];
        let last = *others.last().expect("nonempty");
        if first > 0.0 {
            let (t, v) = hinterland_optimum(lambda, first)?;
            pick(&mut best, (t, v, Candidate::LeftHinterland, t >= first));
        }
        if last < 1.0 {
            let (t, v) = hinterland_optimum(lambda, 1.0 - last)?;
            pick(&mut best, (1.0 - t, v, Candidate::RightHinterland, t >= 1.0 - last));
        }
        for w in others.windows(2) {
            let gap = w[1] - w[0];
            if gap > 0.0 {
                let (t, v) = internal_optimum(lambda, gap)?;
                pick(&mut best, (w[0] + t, v, Candidate::Internal, false));
            }
        }
        if profile.len() == 2 {
            let (moved, k) = profile.with_move(i, first)?;
            let v = expected_payoff(config, &moved, k)?.total;
            pick(&mut best, (first, v, Candidate::Colocate, false));
        }
    }

    let (best_point, best_payoff, source, limit) = best;
    Ok(DeviationReport {
        player: i,
        best_point,
        best_payoff,
        current_payoff: current,
        gain: best_payoff - current,
        source,
        limit,
    })
}

fn check_size(config: &GameConfig, profile: &Profile) -> Result<()> {
    if profile.len() != config.n {
        return Err(Error::ProfileSize {
            expected: config.n,
            got: profile.len(),
        });
    }
    Ok(())
}

/// Analytic verification: equilibrium iff no player gains more than `tol`.
pub fn verify_equilibrium(config: &GameConfig, profile: &Profile, tol: f64) -> Result<Verification> {
    check_size(config, profile)?;
    let reports = (0..profile.len())
        .map(|i| best_response(config, profile, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Verification::from_reports(reports, tol))
}

/// Best deviation found by scanning `resolution + 1` equally spaced points
/// of `[0, 1]` with the exact payoff, then refining around the best cell.
pub fn grid_best_response(
    config: &GameConfig,
    profile: &Profile,
    i: usize,
    resolution: usize,
) -> Result<DeviationReport> {
    let x = profile.position(i)?;
    let current = expected_payoff(config, profile, i)?.total;
    let payoff_at = |t: f64| -> f64 {
        let (moved, k) = profile.with_move(i, t).expect("t in [0, 1]");
        expected_payoff(config, &moved, k).expect("valid index").total
    };

    let step = 1.0 / resolution as f64;
    let mut best = (x, current, Candidate::Stay, false);
    let mut best_k = None;
    for k in 0..=resolution {
        let t = k as f64 * step;
        let v = payoff_at(t);
        if v > best.1 + TIE {
            best = (t, v, Candidate::Grid, false);
            best_k = Some(k);
        }
    }
    if let Some(k) = best_k {
        let lo = k.saturating_sub(1) as f64 * step;
        let hi = ((k + 1).min(resolution)) as f64 * step;
        let (t, v) = golden_max(payoff_at, lo, hi, 1e-13);
        if v > best.1 {
            best = (t, v, Candidate::Grid, false);
        }
    }
    Ok(DeviationReport {
        player: i,
        best_point: best.0,
        best_payoff: best.1,
        current_payoff: current,
        gain: best.1 - current,
        source: best.2,
        limit: false,
    })
}

/// Grid-scan verification, independent of the per-region analysis.
pub fn verify_equilibrium_grid(
    config: &GameConfig,
    profile: &Profile,
    tol: f64,
    resolution: usize,
) -> Result<Verification> {
    check_size(config, profile)?;
    let reports = (0..profile.len())
        .map(|i| grid_best_response(config, profile, i, resolution))
        .collect::<Result<Vec<_>>>()?;
    Ok(Verification::from_reports(reports, tol))
}

/// `2 E[M(M)] - max_t θ(t, H)`: how much an internal player of the canonical
/// profile loses by jumping to the best hinterland spot.
pub fn internal_hinterland_margin(pair: &CanonicalPair) -> Result<f64> {
    let (_, jump) = hinterland_optimum(pair.lambda, pair.h)?;
    Ok(2.0 * internal(pair.lambda, pair.m) - jump)
}

/// Whether no internal player of the canonical profile gains by moving into
/// a hinterland; equivalent to the canonical profile being an equilibrium.
pub fn internal_hinterland_test(pair: &CanonicalPair) -> Result<bool> {
    internal_hinterland_margin(pair).map(|m| m >= 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::{canonical_pair, canonical_profile};
    use approx::assert_abs_diff_eq;

    #[test]
    fn short_hinterland_goes_to_the_neighbor() {
        let (t, v) = hinterland_optimum(1.0, 0.5).unwrap();
        assert_eq!(t, 0.5);
        assert_abs_diff_eq!(v, 1.0 - (-0.5f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn canonical_span_recovers_h() {
        let (t, _) = hinterland_optimum(4.0, 0.5).unwrap();
        assert_abs_diff_eq!(t, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn quarter_span_at_rate_four() {
        // oracle: plain bisection on the first-order condition
        let (l, s) = (4.0f64, 0.25f64);
        let foc = |t: f64| (l * (s - 2.0 * t)).exp() - 0.5 * (1.0 + l * (s - t));
        let (mut lo, mut hi) = (0.0f64, s);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if foc(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        let (t, v) = hinterland_optimum(l, s).unwrap();
        assert!((t - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!(foc(t).abs() < 1e-10);
        assert!(l * t > LN_2);
        assert_abs_diff_eq!(t, 0.181_291_336_807_752_5, epsilon = 1e-10);
        assert_abs_diff_eq!(v, 0.162_915_537_230_858_1, epsilon = 1e-10);
    }

    #[test]
    fn hinterland_rejects_bad_span() {
        assert!(hinterland_optimum(1.0, 0.0).is_err());
        assert!(hinterland_optimum(1.0, 1.5).is_err());
        assert!(hinterland_optimum(-1.0, 0.5).is_err());
    }

    #[test]
    fn internal_midpoint() {
        let (t, v) = internal_optimum(4.0, 0.5).unwrap();
        assert_eq!(t, 0.25);
        assert_abs_diff_eq!(v, 0.224_090_419_121_418_25, epsilon = 1e-14);
        assert_eq!(internal_optimum(1.0, 0.0).unwrap().1, 0.0);
        for s in [0.1, 0.4, 0.9] {
            let (_, best) = internal_optimum(3.0, s).unwrap();
            assert!(best >= crate::payoff::mu(3.0, 0.3 * s, s));
        }
    }

    #[test]
    fn canonical_three_player_is_stable() {
        let cfg = GameConfig::new(3, 4.0).unwrap();
        let p = canonical_profile(&cfg).unwrap();
        let r = best_response(&cfg, &p, 1).unwrap();
        assert!(r.gain <= 1e-9);
        let v = verify_equilibrium(&cfg, &p, DEFAULT_TOL).unwrap();
        assert!(v.is_equilibrium, "{v:?}");
    }

    #[test]
    fn below_threshold_internal_player_jumps_out() {
        let cfg = GameConfig::new(3, 2.0).unwrap();
        let p = canonical_profile(&cfg).unwrap();
        let r = best_response(&cfg, &p, 1).unwrap();
        assert!(r.gain > 0.0);
        assert!(matches!(r.source, Candidate::LeftHinterland | Candidate::RightHinterland));
    }

    #[test]
    fn two_players_at_center_is_stable() {
        let cfg = GameConfig::new(2, 1.0).unwrap();
        let p = Profile::new(vec![0.5, 0.5]).unwrap();
        assert!(best_response(&cfg, &p, 0).unwrap().gain <= 1e-9);
    }

    #[test]
    fn off_optimum_peripherals_are_detected() {
        let cfg = GameConfig::new(3, 4.0).unwrap();
        let p = Profile::new(vec![0.2, 0.5, 0.8]).unwrap();
        let v = verify_equilibrium(&cfg, &p, DEFAULT_TOL).unwrap();
        assert!(!v.is_equilibrium);
        assert!(v.reports[0].gain > 0.0);
    }

    #[test]
    fn single_player_moves_to_center() {
        let cfg = GameConfig::new(1, 2.0).unwrap();
        let p = Profile::new(vec![0.1]).unwrap();
        let r = best_response(&cfg, &p, 0).unwrap();
        assert_eq!(r.best_point, 0.5);
        assert!(r.gain > 0.0);
    }

    #[test]
    fn profile_size_mismatch() {
        let cfg = GameConfig::new(3, 4.0).unwrap();
        let p = Profile::new(vec![0.5]).unwrap();
        assert!(matches!(
            verify_equilibrium(&cfg, &p, 1e-9),
            Err(Error::ProfileSize { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn margin_at_equal_spacing() {
        let pair = canonical_pair(&GameConfig::new(3, 4.0).unwrap()).unwrap();
        assert!(internal_hinterland_test(&pair).unwrap());
        let m = internal_hinterland_margin(&pair).unwrap();
        assert_abs_diff_eq!(m, 0.224_090_419_121_418_25 - 0.162_915_537_230_858_1, epsilon = 1e-10);
    }

    #[test]
    fn grid_agrees_on_canonical_profile() {
        let cfg = GameConfig::new(3, 4.0).unwrap();
        let p = canonical_profile(&cfg).unwrap();
        let v = verify_equilibrium_grid(&cfg, &p, DEFAULT_TOL, 2000).unwrap();
        assert!(v.is_equilibrium, "{v:?}");
    }
}
