//! Client-side cost metrics.
//!
//! Transportation cost without faults, the social optimum, price of
//! stability and anarchy, access cost under a realized fault set, and the
//! disconnected fraction (realized and expected). Also builds the two
//! comparison profiles: the profile minimizing expected disconnection and a
//! fault-free equilibrium.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::nash_equilibrium;
use crate::deviate::{verify_equilibrium_grid, GRID_RESOLUTION};
use crate::error::{Error, Result};
use crate::faultline::{sample_faults, FaultSet, GameConfig, Profile};
use crate::montecarlo::{Estimate, MonteCarlo};
use crate::numeric::golden_min;
use crate::payoff::{hinterland, internal};

/// Transport cost of clients on `[a, b]` served by the sorted, distinct
/// `servers` inside it, each client going to its nearest server.
fn segment_cost(a: f64, b: f64, servers: &[f64]) -> f64 {
    let (first, last) = (servers[0], servers[servers.len() - 1]);
    let ends = 0.5 * (first - a).powi(2) + 0.5 * (b - last).powi(2);
    let gaps: f64 = servers.windows(2).map(|w| 0.25 * (w[1] - w[0]).powi(2)).sum();
    ends + gaps
}

fn distinct(profile: &Profile) -> Result<Vec<f64>> {
    if profile.is_empty() {
        return Err(Error::EmptyProfile);
    }
    Ok(profile.stacks().into_iter().map(|(x, _)| x).collect())
}

/// `∫₀¹ min_i |x_i - y| dy`.
pub fn c_free(profile: &Profile) -> Result<f64> {
    Ok(segment_cost(0.0, 1.0, &distinct(profile)?))
}

/// Equally spaced profile `x_i = (2i-1)/(2n)` and its cost `1/(4n)`.
pub fn social_optimum(n: usize) -> Result<(Profile, f64)> {
    if n == 0 {
        return Err(Error::EmptyProfile);
    }
    let xs = (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
    Ok((Profile::new(xs)?, 0.25 / n as f64))
}

/// Which optimum cost normalizes PoS and PoA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `1/(4n)`, the integrated cost of the optimal profile.
    #[default]
    Computed,
    /// `1/(2n)`, the value quoted in the literature.
    Stated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub n: usize,
    pub lambda: f64,
    pub c_free: f64,
    /// Integrated optimum `1/(4n)`.
    pub optimum_cost: f64,
    /// Quoted optimum `1/(2n)`.
    pub stated_optimum_cost: f64,
    pub pos: f64,
    pub poa: f64,
    pub pos_stated: f64,
    pub poa_stated: f64,
    pub notes: Vec<String>,
}

impl EfficiencyReport {
    pub fn pos_with(&self, norm: Normalization) -> f64 {
        match norm {
            Normalization::Computed => self.pos,
            Normalization::Stated => self.pos_stated,
        }
    }
}

/// PoS and PoA of `FPH(n, λ)`. The equilibrium is unique wherever one
/// exists, so the two coincide.
pub fn pos_poa(config: &GameConfig) -> Result<EfficiencyReport> {
    let GameConfig { n, lambda } = *config;
    let eq = nash_equilibrium(config)?.ok_or(Error::NoEquilibrium { n, lambda })?;
    let cost = c_free(&eq)?;
    let optimum_cost = social_optimum(n)?.1;
    let stated_optimum_cost = 0.5 / n as f64;
    Ok(EfficiencyReport {
        n,
        lambda,
        c_free: cost,
        optimum_cost,
        stated_optimum_cost,
        pos: cost / optimum_cost,
        poa: cost / optimum_cost,
        pos_stated: cost / stated_optimum_cost,
        poa_stated: cost / stated_optimum_cost,
        notes: vec![
            "pos/poa divide by the integrated optimum 1/(4n)".into(),
            "pos_stated/poa_stated divide by the quoted optimum 1/(2n)".into(),
        ],
    })
}

/// Fault-delimited pieces `[a, b]` of the line, each with the servers it
/// contains. A server sitting on a fault belongs to both adjacent pieces.
fn pieces<'a>(servers: &'a [f64], faults: &'a FaultSet) -> impl Iterator<Item = (f64, f64, &'a [f64])> {
    let cuts: Vec<f64> = std::iter::once(0.0)
        .chain(faults.points().iter().copied())
        .chain(std::iter::once(1.0))
        .collect();
    (0..cuts.len() - 1).map(move |k| {
        let (a, b) = (cuts[k], cuts[k + 1]);
        let lo = servers.partition_point(|&x| x < a);
        let hi = servers.partition_point(|&x| x <= b);
        (a, b, &servers[lo..hi])
    })
}

/// Total length of fault-delimited pieces containing no server.
pub fn disconnected_fraction(profile: &Profile, faults: &FaultSet) -> Result<f64> {
    let servers = distinct(profile)?;
    Ok(pieces(&servers, faults)
        .filter(|(_, _, s)| s.is_empty())
        .map(|(a, b, _)| b - a)
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessCostConfig {
    /// Cost per unit length of disconnected clients.
    pub psi: f64,
}

impl AccessCostConfig {
    pub fn new(psi: f64) -> Result<Self> {
        if psi.is_finite() && psi >= 1.0 {
            Ok(Self { psi })
        } else {
            Err(crate::error::domain(format!("psi must be finite and >= 1, got {psi}")))
        }
    }
}

impl Default for AccessCostConfig {
    fn default() -> Self {
        Self { psi: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessCost {
    pub total: f64,
    pub transport: f64,
    pub disconnect: f64,
}

/// Transport cost of connected clients plus `ψ` times the disconnected length.
pub fn access_cost(profile: &Profile, faults: &FaultSet, cfg: &AccessCostConfig) -> Result<AccessCost> {
    let servers = distinct(profile)?;
    let (mut transport, mut lost) = (0.0, 0.0);
    for (a, b, s) in pieces(&servers, faults) {
        if s.is_empty() {
            lost += b - a;
        } else {
            transport += segment_cost(a, b, s);
        }
    }
    let disconnect = cfg.psi * lost;
    Ok(AccessCost {
        total: transport + disconnect,
        transport,
        disconnect,
    })
}

/// How to evaluate the expected disconnected fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DcMode {
    ClosedForm,
    MonteCarlo(MonteCarlo),
}

// A client at distance a from the nearest server on its left and b on its
// right is cut off iff both sides hold a fault; the two counts are
// independent. Integrating per region: hinterland h -> h - eh(h),
// internal gap g -> g - 2 em(g).
fn expected_dc(lambda: f64, servers: &[f64]) -> f64 {
    let (first, last) = (servers[0], servers[servers.len() - 1]);
    let ends = (first - hinterland(lambda, first)) + ((1.0 - last) - hinterland(lambda, 1.0 - last));
    let gaps: f64 = servers
        .windows(2)
        .map(|w| {
            let g = w[1] - w[0];
            g - 2.0 * internal(lambda, g)
        })
        .sum();
    (ends + gaps).max(0.0)
}

/// `E[L^dc]` for the fault rate of `config`. The closed form carries no
/// standard error and reports zero samples.
pub fn expected_disconnected_fraction(config: &GameConfig, profile: &Profile, mode: DcMode) -> Result<Estimate> {
    let servers = distinct(profile)?;
    let lambda = config.lambda;
    Ok(match mode {
        DcMode::ClosedForm => Estimate {
            mean: expected_dc(lambda, &servers),
            std_error: None,
            samples: 0,
        },
        DcMode::MonteCarlo(mc) => mc.estimate_scalar(|rng| {
            let faults = sample_faults(lambda, rng);
            pieces(&servers, &faults)
                .filter(|(_, _, s)| s.is_empty())
                .map(|(a, b, _)| b - a)
                .sum()
        }),
    })
}

const DC_STARTS: u64 = 16;
const DC_XTOL: f64 = 1e-8;
const DC_MAX_SWEEPS: usize = 5000;
const DC_SEED: u64 = 0x0dc0_ffee;

fn mirror(n: usize, half: &[f64]) -> Vec<f64> {
    let mut xs = half.to_vec();
    if n % 2 == 1 {
        xs.push(0.5);
    }
    xs.extend(half.iter().rev().map(|x| 1.0 - x));
    xs
}

fn descend(lambda: f64, n: usize, mut half: Vec<f64>) -> (Vec<f64>, f64) {
    let objective = |h: &[f64]| expected_dc(lambda, &mirror(n, h));
    for _ in 0..DC_MAX_SWEEPS {
        let mut moved = 0.0f64;
        for j in 0..half.len() {
            let lo = if j == 0 { 0.0 } else { half[j - 1] };
            let hi = half.get(j + 1).copied().unwrap_or(0.5);
            let (x, _) = golden_min(
                |t| {
                    let mut trial = half.clone();
                    trial[j] = t;
                    objective(&trial)
                },
                lo,
                hi,
                DC_XTOL * 1e-2,
            );
            moved = moved.max((x - half[j]).abs());
            half[j] = x;
        }
        if moved < DC_XTOL {
            break;
        }
    }
    let value = objective(&half);
    (half, value)
}

/// Profile minimizing the expected disconnected fraction, searched over
/// profiles symmetric about `1/2` by multi-start coordinate descent.
///
/// Without faults every profile disconnects nothing; the equally spaced
/// profile is returned.
pub fn optimal_dc_profile(config: &GameConfig) -> Result<Profile> {
    let GameConfig { n, lambda } = *config;
    if config.is_fault_free() || n == 1 {
        return social_optimum(n).map(|(p, _)| p);
    }
    let k = n / 2;
    let starts: Vec<Vec<f64>> = (0..DC_STARTS)
        .map(|s| {
            if s == 0 {
                return (1..=k).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(DC_SEED);
            rng.set_stream(s);
            let mut h: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..0.5)).collect();
            h.sort_by(f64::total_cmp);
            h
        })
        .collect();
    let results: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|h| descend(lambda, n, h))
        .collect();
    let (best, _) = results
        .into_iter()
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .expect("at least one start");
    Profile::new(mirror(n, &best))
}

/// Member of the implemented fault-free equilibrium family with hinterland
/// `h`: colocated pairs at `h` and `1 - h`, first and last gaps `2h`, and
/// equal interior gaps between single servers.
pub fn faultfree_family_member(n: usize, h: f64) -> Result<Profile> {
    let (lo, hi) = faultfree_family_range(n)?;
    if !(lo - 1e-15..=hi + 1e-15).contains(&h) {
        return Err(crate::error::domain(format!(
            "h = {h} outside the family range [{lo}, {hi}] for n = {n}"
        )));
    }
    let mut xs = vec![h, h];
    match n {
        4 => {}
        5 => xs.push(0.5),
        _ => {
            let g = (1.0 - 6.0 * h) / (n - 5) as f64;
            let first = 3.0 * h;
            xs.extend((0..n - 4).map(|k| first + k as f64 * g));
        }
    }
    xs.extend([1.0 - h, 1.0 - h]);
    Profile::new(xs.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
}

/// Range of the family parameter `h`. Interior gaps `g` must satisfy
/// `g <= 2h` (no server gains by splitting the widest gap) and, when an
/// interior single exists, `g >= h` (its market is at least a paired one).
pub fn faultfree_family_range(n: usize) -> Result<(f64, f64)> {
    match n {
        0..=3 => Err(Error::UnsupportedN(n)),
        4 => Ok((0.25, 0.25)),
        5 => Ok((1.0 / 6.0, 1.0 / 6.0)),
        6 => Ok((1.0 / 8.0, 1.0 / 6.0)),
        _ => Ok((1.0 / (2 * n - 4) as f64, 1.0 / (n + 1) as f64)),
    }
}

const FAMILY_GRID: usize = 64;

/// Fault-free equilibrium minimizing the expected disconnected fraction at
/// rate `lambda` within the implemented family. Every returned profile has
/// passed a grid-scan equilibrium check of the fault-free game.
///
/// `n = 1` and `n = 2` return the unique center equilibria; `n = 3` has
/// none.
pub fn faultfree_ne_profile(n: usize, lambda: f64) -> Result<Profile> {
    match n {
        0 => return Err(Error::EmptyProfile),
        1 => return Profile::new(vec![0.5]),
        2 => return Profile::new(vec![0.5, 0.5]),
        3 => return Err(Error::UnsupportedN(3)),
        _ => {}
    }
    let rate = GameConfig::new(n, lambda)?;
    let free = GameConfig::new(n, 0.0)?;
    let (lo, hi) = faultfree_family_range(n)?;
    let value = |h: f64| -> f64 {
        let p = faultfree_family_member(n, h).expect("h in range");
        expected_dc(rate.lambda, &distinct(&p).expect("nonempty"))
    };

    let mut candidates: Vec<f64> = (0..=FAMILY_GRID)
        .map(|k| lo + (hi - lo) * k as f64 / FAMILY_GRID as f64)
        .collect();
    if hi > lo {
        let step = (hi - lo) / FAMILY_GRID as f64;
        let best = candidates
            .iter()
            .copied()
            .min_by(|a, b| value(*a).total_cmp(&value(*b)))
            .expect("nonempty grid");
        let (h, _) = golden_min(value, (best - step).max(lo), (best + step).min(hi), 1e-12);
        candidates.push(h);
    }
    candidates.sort_by(|a, b| value(*a).total_cmp(&value(*b)).then(a.total_cmp(b)));
    candidates.dedup();

    for h in candidates {
        let p = faultfree_family_member(n, h)?;
        if verify_equilibrium_grid(&free, &p, 1e-9, GRID_RESOLUTION)?.is_equilibrium {
            return Ok(p);
        }
    }
    Err(Error::NoEquilibrium { n, lambda: 0.0 })
}
