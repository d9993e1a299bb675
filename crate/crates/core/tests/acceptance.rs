//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fph_core::canonical::{alpha_max, c_of_alpha, canonical_pair, compute_threshold, lambda_max, lambda_min};
use fph_core::deviate::{verify_equilibrium_grid, GRID_RESOLUTION};
use fph_core::efficiency::{
    c_free, expected_disconnected_fraction, faultfree_ne_profile, optimal_dc_profile, pos_poa, DcMode,
};
use fph_core::faultline::{realized_payoffs, sample_faults};
use fph_core::numeric::Tolerances;
use fph_core::payoff::expected_payoffs;
use fph_core::{
    best_response, canonical_profile, nash_equilibrium, verify_equilibrium, GameConfig, MonteCarlo, Profile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok { Ok(detail) } else { Err(detail) }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:?}, limit {limit:?}"))
    }
}

fn threshold_constant() -> Outcome {
    let start = Instant::now();
    let t = compute_threshold(&Tolerances::default()).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(1))?;
    check(
        (0.58803..=0.58823).contains(&t.alpha0),
        format!("alpha0 = {:.12}", t.alpha0),
    )
}

fn threshold_line() -> Outcome {
    let worst = (3..=20)
        .map(|n| (lambda_min(n) - (0.58813 * n as f64 + 1.04931)).abs())
        .fold(0.0, f64::max);
    check(worst < 5e-3, format!("max |lambda_min - linear| = {worst:.3e} over n = 3..20"))
}

fn spacing_extremes() -> Outcome {
    let (am, cm) = alpha_max();
    let c0 = c_of_alpha(compute_threshold(&Tolerances::default()).map_err(|e| e.to_string())?.alpha0);
    let detail = format!("alpha_max = {am:.6}, c_max = {cm:.6}, c(alpha0) = {c0:.6}");
    check(
        (0.231..=0.233).contains(&cm) && (3.10..=3.12).contains(&am) && (-0.393..=-0.391).contains(&c0),
        detail,
    )
}

fn exact_canonical_case() -> Outcome {
    let start = Instant::now();
    let cfg = GameConfig::new(3, 4.0).unwrap();
    let p = canonical_profile(&cfg).map_err(|e| e.to_string())?;
    let err = p
        .positions()
        .iter()
        .zip([0.25, 0.5, 0.75])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let analytic = verify_equilibrium(&cfg, &p, 1e-9).map_err(|e| e.to_string())?;
    let grid = verify_equilibrium_grid(&cfg, &p, 1e-9, GRID_RESOLUTION).map_err(|e| e.to_string())?;
    within(start.elapsed(), Duration::from_secs(5))?;
    check(
        err < 1e-12 && analytic.is_equilibrium && grid.is_equilibrium,
        format!(
            "max position error {err:.1e}, analytic max gain {:.2e}, grid max gain {:.2e}",
            analytic.max_gain, grid.max_gain
        ),
    )
}

fn nonexistence_below_threshold() -> Outcome {
    let lambda = lambda_min(3) - 0.05;
    let cfg = GameConfig::new(3, lambda).unwrap();
    let none = nash_equilibrium(&cfg).map_err(|e| e.to_string())?.is_none();
    let p = canonical_profile(&cfg).map_err(|e| e.to_string())?;
    let r = best_response(&cfg, &p, 1).map_err(|e| e.to_string())?;
    let xs = p.positions();
    let into_hinterland = r.best_point < xs[0] || r.best_point > xs[2];
    check(
        none && r.gain > 0.0 && into_hinterland,
        format!("lambda = {lambda:.6}, internal player gains {:.3e} at {:.6}", r.gain, r.best_point),
    )
}

fn two_player_equilibria() -> Outcome {
    let low = GameConfig::new(2, 1.0).unwrap();
    let high = GameConfig::new(2, 4.0).unwrap();
    let a = nash_equilibrium(&low).map_err(|e| e.to_string())?.ok_or("no equilibrium at 1")?;
    let b = nash_equilibrium(&high).map_err(|e| e.to_string())?.ok_or("no equilibrium at 4")?;
    let va = verify_equilibrium(&low, &a, 1e-9).map_err(|e| e.to_string())?;
    let vb = verify_equilibrium(&high, &b, 1e-9).map_err(|e| e.to_string())?;
    let sym = (b.positions()[0] - (1.0 - b.positions()[1])).abs();
    check(
        a.positions() == [0.5, 0.5] && sym < 1e-10 && va.is_equilibrium && vb.is_equilibrium,
        format!("lambda=1 -> {:?}, lambda=4 -> {:?}", a.positions(), b.positions()),
    )
}

fn region_difference() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(3..=20);
        let lambda = rng.random_range(lambda_min(n)..lambda_min(n) + 60.0);
        let cfg = GameConfig::new(n, lambda).unwrap();
        let pair = canonical_pair(&cfg).map_err(|e| e.to_string())?;
        let u = expected_payoffs(&cfg, &pair.profile());
        let want = (-lambda * pair.m).exp() / (2.0 * lambda);
        worst = worst.max(((u[0] - u[1]) - want).abs());
    }
    check(worst < 1e-12, format!("max deviation {worst:.2e} over 100 configurations"))
}

fn monte_carlo_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    let mut players = 0;
    for case in 0..5 {
        let n = rng.random_range(2..=6);
        let lambda = rng.random_range(0.5..15.0);
        let profile = Profile::new((0..n).map(|_| rng.random::<f64>()).collect()).unwrap();
        let cfg = GameConfig::new(n, lambda).unwrap();
        let closed = expected_payoffs(&cfg, &profile);
        let est = MonteCarlo::new(1_000_000, case).estimate(n, |r, out| {
            out.copy_from_slice(&realized_payoffs(&profile, &sample_faults(lambda, r)));
        });
        for (e, c) in est.iter().zip(&closed) {
            let z = e.z_score(*c).unwrap_or(if e.mean == *c { 0.0 } else { f64::INFINITY });
            worst = worst.max(z.abs());
            players += 1;
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    check(worst <= 3.0, format!("max |z| = {worst:.3} over {players} players"))
}

fn efficiency_values() -> Outcome {
    let cf = c_free(&canonical_profile(&GameConfig::new(3, 4.0).unwrap()).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let hi = pos_poa(&GameConfig::new(5, lambda_max(5)).unwrap()).map_err(|e| e.to_string())?;
    let lo = pos_poa(&GameConfig::new(5, lambda_min(5)).unwrap()).map_err(|e| e.to_string())?;
    check(
        (cf - 0.09375).abs() < 1e-12
            && (1.02..=1.06).contains(&hi.pos)
            && (1.25..=1.31).contains(&lo.pos)
            && lo.pos > hi.pos,
        format!("c_free = {cf:.12}, pos(lambda_max) = {:.6}, pos(lambda_min) = {:.6}", hi.pos, lo.pos),
    )
}

fn disconnection_shape() -> Outcome {
    let start = Instant::now();
    let n = 4;
    // the canonical profile is defined for every λ > 2 ln 2, equilibrium or not
    let lambdas: Vec<f64> = (0..=80).map(|k| 1.5 + 0.5 * k as f64).collect();
    let mut o_le_x = true;
    let mut x_lt_y = Vec::new();
    let mut worst_z = 0.0f64;
    for (k, &l) in lambdas.iter().enumerate() {
        let cfg = GameConfig::new(n, l).unwrap();
        let profiles = [
            optimal_dc_profile(&cfg).map_err(|e| e.to_string())?,
            canonical_profile(&cfg).map_err(|e| e.to_string())?,
            faultfree_ne_profile(n, l).map_err(|e| e.to_string())?,
        ];
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&profiles) {
            let closed = expected_disconnected_fraction(&cfg, p, DcMode::ClosedForm).map_err(|e| e.to_string())?;
            *slot = closed.mean;
            if k % 10 == 0 {
                let mc = expected_disconnected_fraction(&cfg, p, DcMode::MonteCarlo(MonteCarlo::new(200_000, k as u64)))
                    .map_err(|e| e.to_string())?;
                worst_z = worst_z.max(mc.z_score(closed.mean).unwrap_or(0.0).abs());
            }
        }
        o_le_x &= v[0] <= v[1] + 1e-12;
        x_lt_y.push(v[1] < v[2]);
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    let crossover = x_lt_y.iter().rposition(|b| !b).map_or(0, |k| k + 1);
    let found = crossover > 0 && crossover < lambdas.len();
    let at = lambdas.get(crossover).copied().unwrap_or(f64::NAN);
    check(
        o_le_x && found && worst_z <= 3.0,
        format!("o <= x at all {} rates, x < y from lambda = {at:.3}, max |z| = {worst_z:.3}", lambdas.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("threshold constant", threshold_constant),
        ("threshold line", threshold_line),
        ("spacing extremes", spacing_extremes),
        ("exact canonical case", exact_canonical_case),
        ("non-existence below threshold", nonexistence_below_threshold),
        ("two-player equilibria", two_player_equilibria),
        ("region-difference identity", region_difference),
        ("Monte Carlo consistency", monte_carlo_consistency),
        ("efficiency values", efficiency_values),
        ("disconnection ordering", disconnection_shape),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
