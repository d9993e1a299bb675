//! Fault-rate arguments: plain values, `a..b` ranges and the per-`n`
//! tokens `lmin` and `lmax`.

use fph_core::canonical::{lambda_max, lambda_min};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rate {
    Value(f64),
    Min,
    Max,
}

impl Rate {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            Rate::Value(v) => v,
            Rate::Min => lambda_min(n),
            Rate::Max => lambda_max(n),
        }
    }
}

pub fn parse_rate(s: &str) -> Result<Rate, String> {
    match s.trim() {
        "lmin" => Ok(Rate::Min),
        "lmax" => Ok(Rate::Max),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Rate::Value)
            .ok_or_else(|| format!("invalid fault rate `{t}`")),
    }
}

/// Either a single rate or an inclusive range sampled at `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateSpec {
    Single(Rate),
    Range(Rate, Rate),
}

pub fn parse_spec(s: &str) -> Result<RateSpec, String> {
    match s.split_once("..") {
        Some((a, b)) => Ok(RateSpec::Range(parse_rate(a)?, parse_rate(b)?)),
        None => parse_rate(s).map(RateSpec::Single),
    }
}

impl RateSpec {
    pub fn points(self, n: usize, steps: usize) -> Vec<f64> {
        match self {
            RateSpec::Single(r) => vec![r.resolve(n)],
            RateSpec::Range(a, b) => {
                let (a, b) = (a.resolve(n), b.resolve(n));
                if steps <= 1 {
                    return vec![a];
                }
                (0..steps)
                    .map(|k| a + (b - a) * k as f64 / (steps - 1) as f64)
                    .collect()
            }
        }
    }
}

/// Inclusive integer range `a..b`, or a single integer.
pub fn parse_n_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("invalid player count `{t}`"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b)?),
        None => {
            let v = num(s)?;
            (v, v)
        }
    };
    if a == 0 || a > b {
        return Err(format!("invalid range `{s}`"));
    }
    Ok((a, b))
}
