//! Statistical checks of the fault sampler and the Monte Carlo payoffs.

use fph_core::faultline::{interarrival, realized_payoffs, sample_faults};
use fph_core::payoff::expected_payoffs;
use fph_core::{canonical_profile, GameConfig, MonteCarlo, Profile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn interarrival_gaps_are_exponential() {
    let lambda = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| interarrival(lambda, &mut rng)).collect();
    let d = ks_statistic(draws, |x| 1.0 - (-lambda * x).exp());
    assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
}

#[test]
fn fault_counts_are_poisson_and_points_uniform() {
    let lambda = 2.5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let runs = 100_000;
    let mut counts = Vec::with_capacity(runs);
    let mut points = Vec::new();
    for _ in 0..runs {
        let f = sample_faults(lambda, &mut rng);
        counts.push(f.len() as f64);
        points.extend_from_slice(f.points());
    }
    let mean = counts.iter().sum::<f64>() / runs as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
    let se = (lambda / runs as f64).sqrt();
    assert!((mean - lambda).abs() < 4.0 * se, "mean count {mean}");
    assert!((var - lambda).abs() < 0.05 * lambda, "count variance {var}");

    // pooled points of a Poisson process on [0, 1] are uniform
    let m = points.len();
    let d = ks_statistic(points, |x| x);
    assert!(d < 1.628 / (m as f64).sqrt(), "KS statistic {d}");
}

// Independent sampler: Poisson count, then sorted uniforms.
fn sample_by_count(lambda: f64, rng: &mut ChaCha8Rng) -> fph_core::FaultSet {
    let k = Poisson::new(lambda).unwrap().sample(rng) as usize;
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.retain(|&x| x > 0.0);
    fph_core::FaultSet::new(xs).unwrap()
}

#[test]
fn count_then_uniform_sampler_agrees() {
    let cfg = GameConfig::new(3, 4.0).unwrap();
    let profile = canonical_profile(&cfg).unwrap();
    let closed = expected_payoffs(&cfg, &profile);
    let mc = MonteCarlo::new(400_000, 5);
    let est = mc.estimate(3, |rng, out| {
        let f = sample_by_count(cfg.lambda, rng);
        out.copy_from_slice(&realized_payoffs(&profile, &f));
    });
    for (e, c) in est.iter().zip(&closed) {
        assert!(e.covers(*c, 4.0), "{e:?} vs {c}");
    }
}

#[test]
fn monte_carlo_matches_closed_form_on_random_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let n = rng.random_range(1..=6);
        let lambda = rng.random_range(0.2..15.0);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if n >= 3 {
            // exercise colocation
            xs[1] = xs[0];
        }
        let profile = Profile::new(xs).unwrap();
        let cfg = GameConfig::new(n, lambda).unwrap();
        let closed = expected_payoffs(&cfg, &profile);
        let mc = MonteCarlo::new(100_000, case);
        let est = mc.estimate(n, |rng, out| {
            let f = sample_faults(lambda, rng);
            out.copy_from_slice(&realized_payoffs(&profile, &f));
        });
        for (e, c) in est.iter().zip(&closed) {
            assert!(e.covers(*c, 4.0), "case {case}: {profile:?} λ={lambda}: {e:?} vs {c}");
        }
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let profile = Profile::new(vec![0.2, 0.6]).unwrap();
    let mc = MonteCarlo::new(50_000, 99);
    let run = || {
        mc.estimate(2, |rng, out| {
            let f = sample_faults(6.0, rng);
            out.copy_from_slice(&realized_payoffs(&profile, &f));
        })
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(run);
    assert_eq!(single, run());
}
