//! Poisson line faults and realized markets.
//!
//! Everything here works on a single realization: a concrete fault set and a
//! concrete profile. Averaging these realizations over sampled fault sets is
//! the Monte Carlo oracle against which the closed forms in
//! [`crate::payoff`] are checked.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// The pair `(n, lambda)`: player count and Poisson fault rate.
///
/// `lambda == 0` is accepted as the fault-free game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n: usize,
    pub lambda: f64,
}

impl GameConfig {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain("player count must be at least 1"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(domain(format!("fault rate must be finite and >= 0, got {lambda}")));
        }
        Ok(Self { n, lambda })
    }

    pub fn is_fault_free(&self) -> bool {
        self.lambda == 0.0
    }
}

/// Sorted server positions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    positions: Vec<f64>,
}

impl Profile {
    pub fn new(mut positions: Vec<f64>) -> Result<Self> {
        if let Some(bad) = positions
            .iter()
            .find(|x| !(x.is_finite() && (0.0..=1.0).contains(*x)))
        {
            return Err(domain(format!("position {bad} outside [0, 1]")));
        }
        positions.sort_by(f64::total_cmp);
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, i: usize) -> Result<f64> {
        self.positions
            .get(i)
            .copied()
            .ok_or(Error::InvalidPlayer { index: i, n: self.len() })
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        self.position(i).map(|_| ())
    }

    /// Number of players sharing player `i`'s coordinate (exact equality).
    pub fn gamma(&self, i: usize) -> Result<usize> {
        let x = self.position(i)?;
        Ok(self.positions.iter().filter(|&&p| p == x).count())
    }

    /// Closest position strictly left of player `i`, if any.
    pub fn left_neighbor(&self, i: usize) -> Result<Option<f64>> {
        let x = self.position(i)?;
        let k = self.positions.partition_point(|&p| p < x);
        Ok(k.checked_sub(1).map(|j| self.positions[j]))
    }

    /// Closest position strictly right of player `i`, if any.
    pub fn right_neighbor(&self, i: usize) -> Result<Option<f64>> {
        let x = self.position(i)?;
        let k = self.positions.partition_point(|&p| p <= x);
        Ok(self.positions.get(k).copied())
    }

    /// Distinct coordinates with their stack sizes, left to right.
    pub fn stacks(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &p in &self.positions {
            match out.last_mut() {
                Some((q, k)) if *q == p => *k += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }

    /// Profile with player `i` moved to `x`, plus the mover's index in the
    /// re-sorted profile.
    pub fn with_move(&self, i: usize, x: f64) -> Result<(Profile, usize)> {
        self.check_index(i)?;
        if !(x.is_finite() && (0.0..=1.0).contains(&x)) {
            return Err(domain(format!("position {x} outside [0, 1]")));
        }
        let mut others: Vec<f64> = self.positions.clone();
        others.remove(i);
        let k = others.partition_point(|&p| p < x);
        others.insert(k, x);
        Ok((Profile { positions: others }, k))
    }

    /// Positions with player `i` removed.
    pub fn others(&self, i: usize) -> Result<Vec<f64>> {
        self.check_index(i)?;
        let mut v = self.positions.clone();
        v.remove(i);
        Ok(v)
    }
}

/// A realized fault set: strictly increasing points in `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FaultSet {
    points: Vec<f64>,
}

impl FaultSet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|p| !(p.is_finite() && *p > 0.0 && *p < 1.0)) {
            return Err(domain("fault points must lie in the open interval (0, 1)"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("fault points must be strictly increasing"));
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Closest fault strictly left of `x`.
    pub fn left_of(&self, x: f64) -> Option<f64> {
        let k = self.points.partition_point(|&f| f < x);
        k.checked_sub(1).map(|j| self.points[j])
    }

    /// Closest fault strictly right of `x`.
    pub fn right_of(&self, x: f64) -> Option<f64> {
        let k = self.points.partition_point(|&f| f <= x);
        self.points.get(k).copied()
    }
}

/// Market `[left, right]` of one player under a realized fault set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Market {
    pub left: f64,
    pub right: f64,
}

impl Market {
    pub fn size(&self) -> f64 {
        self.right - self.left
    }
}

/// One exponential inter-arrival gap of a rate-`lambda` Poisson process.
pub fn interarrival<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    Exp::new(lambda)
        .expect("rate must be positive and finite")
        .sample(rng)
}

/// Sample a Poisson fault set on `[0, 1]` by accumulating exponential
/// inter-arrival gaps until the running sum leaves the unit interval.
pub fn sample_faults<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> FaultSet {
    if lambda.is_nan() || lambda <= 0.0 {
        return FaultSet::empty();
    }
    let exp = Exp::new(lambda).expect("rate must be positive and finite");
    let mut points = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t >= 1.0 {
            break;
        }
        // zero-length gaps have probability zero; drop them to keep the set strict
        if t > 0.0 && points.last().is_none_or(|&p| t > p) {
            points.push(t);
        }
    }
    FaultSet { points }
}

/// Market of player `i` under `faults`.
///
/// A fault strictly between the player and its neighbor cuts the market
/// there; without one the boundary is the midpoint to the neighbor; a
/// peripheral player without a fault on that side reaches the line end.
/// A fault lying exactly on a server position does not block anything.
pub fn realized_market(profile: &Profile, i: usize, faults: &FaultSet) -> Result<Market> {
    let x = profile.position(i)?;
    let left = match (profile.left_neighbor(i)?, faults.left_of(x)) {
        (None, f) => f.unwrap_or(0.0),
        (Some(nb), Some(f)) if f > nb => f,
        (Some(nb), _) => 0.5 * (nb + x),
    };
    let right = match (profile.right_neighbor(i)?, faults.right_of(x)) {
        (None, f) => f.unwrap_or(1.0),
        (Some(nb), Some(f)) if f < nb => f,
        (Some(nb), _) => 0.5 * (x + nb),
    };
    Ok(Market { left, right })
}

/// Realized payoff `(R_i - L_i) / gamma_i` of player `i`.
pub fn realized_payoff(profile: &Profile, i: usize, faults: &FaultSet) -> Result<f64> {
    let m = realized_market(profile, i, faults)?;
    Ok(m.size() / profile.gamma(i)? as f64)
}

/// Realized payoffs of every player, in profile order.
pub fn realized_payoffs(profile: &Profile, faults: &FaultSet) -> Vec<f64> {
    let mut out = Vec::with_capacity(profile.len());
    for (x, gamma) in profile.stacks() {
        let first = profile.positions.partition_point(|&p| p < x);
        let share = realized_market(profile, first, faults)
            .expect("index from stacks is valid")
            .size()
            / gamma as f64;
        out.extend(std::iter::repeat_n(share, gamma));
    }
    out
}
