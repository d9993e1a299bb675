//! `fph`: solve, verify, simulate and sweep the fault-prone Hotelling game.

mod lambda;
mod output;

use std::f64::consts::LN_2;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fph_core::canonical::{canonical_pair_with, lambda_min, CanonicalPair};
use fph_core::deviate::{verify_equilibrium_grid, GRID_RESOLUTION};
use fph_core::efficiency::{
    c_free, expected_disconnected_fraction, faultfree_ne_profile, optimal_dc_profile, pos_poa, social_optimum,
    DcMode, Normalization,
};
use fph_core::faultline::{realized_payoffs, sample_faults};
use fph_core::numeric::Tolerances;
use fph_core::payoff::expected_payoffs;
use fph_core::{
    canonical_profile, nash_equilibrium, ne_exists, threshold, verify_equilibrium, Error, GameConfig, MonteCarlo,
    Profile,
};

use crate::lambda::{parse_n_range, parse_rate, parse_spec, RateSpec};
use crate::output::{csv_table, emit, fmt, fmt_opt, round, RunManifest};

// Rounded coefficients of the threshold line, printed next to the exact value.
const LINEAR_SLOPE: f64 = 0.58813;
const LINEAR_INTERCEPT: f64 = 1.04931;

#[derive(Parser)]
#[command(name = "fph", version, about = "Equilibria and efficiency of the fault-prone Hotelling game")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Tolerance on deviation gains (verify) and root finding (solve).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Emit JSON instead of text/CSV.
    #[arg(long)]
    json: bool,
    /// Write output to FILE plus a FILE.manifest.json run manifest.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Sampling {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, env = "FPH_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibrium profile and canonical-pair diagnostics for (n, λ).
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Existence threshold λ_min(n) over a range of n, as CSV.
    Threshold {
        /// Single n or inclusive range `a..b`.
        #[arg(long, default_value = "3..10")]
        n: String,
        #[command(flatten)]
        common: Common,
    },
    /// Best response of every player; exit 1 if someone gains more than --tol.
    Verify {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lambda: f64,
        /// Also scan a uniform grid of deviations.
        #[arg(long)]
        grid_oracle: bool,
        #[arg(required = true, num_args = 1..)]
        positions: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo payoffs against the closed form; exit 1 if some |z| > 4.
    Simulate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lambda: f64,
        #[arg(required = true, num_args = 1..)]
        positions: Vec<f64>,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        common: Common,
    },
    /// Efficiency metric per (λ, profile), as CSV.
    #[command(group(ArgGroup::new("rates").required(true).args(["lambda", "lambda_points"])))]
    Efficiency {
        #[arg(long)]
        n: usize,
        /// Rate `x` or range `a..b`; `lmin` and `lmax` resolve per n.
        #[arg(long)]
        lambda: Option<String>,
        /// Comma-separated rates or tokens.
        #[arg(long, value_delimiter = ',')]
        lambda_points: Vec<String>,
        /// Points sampled from a --lambda range.
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "canonical")]
        profiles: Vec<ProfileKind>,
        #[arg(long, value_enum, default_value = "cfree")]
        metric: Metric,
        /// Estimate the disconnected fraction by Monte Carlo.
        #[arg(long)]
        mc: bool,
        /// Normalize by the quoted optimum 1/(2n) instead of 1/(4n).
        #[arg(long)]
        stated_optimum: bool,
        #[command(flatten)]
        sampling: Sampling,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ProfileKind {
    Canonical,
    OptDc,
    Faultfree,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Metric {
    Cfree,
    Pos,
    Dcfrac,
}

/// Exit status plus message.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_)
            | Error::ProfileSize { .. }
            | Error::InvalidPlayer { .. }
            | Error::EmptyProfile
            | Error::UnsupportedN(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn check_common(c: &Common) -> Result<(), Failure> {
    if c.tol.is_finite() && c.tol > 0.0 {
        Ok(())
    } else {
        Err(usage(format!("--tol must be positive, got {}", c.tol)))
    }
}

fn profile_from(n: Option<usize>, positions: Vec<f64>) -> Result<Profile, Failure> {
    if let Some(n) = n {
        if n != positions.len() {
            return Err(usage(format!("--n {n} but {} positions given", positions.len())));
        }
    }
    Ok(Profile::new(positions)?)
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| fmt(*x)).collect::<Vec<_>>().join(" ")
}

fn rounded(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(round).collect()
}

fn solve(n: usize, lambda: f64, common: Common) -> Outcome {
    check_common(&common)?;
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(usage(format!("--lambda must be positive, got {lambda}")));
    }
    let cfg = GameConfig::new(n, lambda)?;
    let tol = Tolerances {
        root: common.tol.min(Tolerances::default().root),
        ..Tolerances::default()
    };
    let pair: Option<CanonicalPair> = canonical_pair_with(&cfg, &tol).ok();
    let exists = ne_exists(&cfg);
    let profile = match (exists, pair) {
        (false, _) => None,
        (true, Some(p)) if n >= 3 || lambda > 2.0 * LN_2 => Some(p.profile()),
        (true, _) => nash_equilibrium(&cfg)?,
    };
    let lmin = if n >= 3 { lambda_min(n) } else { 0.0 };

    let body = if common.json {
        output::json(&json!({
            "command": "solve",
            "n": n,
            "lambda": round(lambda),
            "exists": exists,
            "profile": profile.as_ref().map(|p| rounded(p.positions())),
            "diagnostics": pair.map(|p| json!({
                "h": round(p.h), "m": round(p.m), "alpha": round(p.alpha), "c": round(p.c),
            })),
            "lambda_min": round(lmin),
        }))
    } else {
        let na = |f: fn(&CanonicalPair) -> f64| pair.as_ref().map(f);
        let mut s = String::new();
        s += &format!("n           {n}\n");
        s += &format!("lambda      {}\n", fmt(lambda));
        s += &format!("exists      {exists}\n");
        match &profile {
            Some(p) => s += &format!("profile     {}\n", join(p.positions())),
            None => s += "profile     NON-EXISTENT\n",
        }
        s += &format!("H           {}\n", fmt_opt(na(|p| p.h)));
        s += &format!("M           {}\n", fmt_opt(na(|p| p.m)));
        s += &format!("alpha       {}\n", fmt_opt(na(|p| p.alpha)));
        s += &format!("c           {}\n", fmt_opt(na(|p| p.c)));
        s += &format!("lambda_min  {}\n", fmt(lmin));
        s
    };
    let manifest = RunManifest::new("solve", json!({ "n": n, "lambda": lambda, "tol": common.tol }));
    emit(&body, common.out.as_deref(), &manifest)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ThresholdRow {
    n: usize,
    lambda_min_exact: f64,
    lambda_min_linear_approx: f64,
    alpha0: f64,
    beta0: f64,
}

fn threshold_cmd(range: &str, common: Common) -> Outcome {
    check_common(&common)?;
    let (a, b) = parse_n_range(range).map_err(usage)?;
    if a < 3 {
        return Err(usage("the threshold is defined for n >= 3"));
    }
    let t = threshold();
    let rows: Vec<ThresholdRow> = (a..=b)
        .map(|n| ThresholdRow {
            n,
            lambda_min_exact: round(t.lambda_min(n)),
            lambda_min_linear_approx: round(LINEAR_SLOPE * n as f64 + LINEAR_INTERCEPT),
            alpha0: round(t.alpha0),
            beta0: round(t.beta0),
        })
        .collect();
    let body = if common.json {
        output::json(&rows)
    } else {
        let text: Vec<[String; 5]> = rows
            .iter()
            .map(|r| {
                [
                    r.n.to_string(),
                    fmt(r.lambda_min_exact),
                    fmt(r.lambda_min_linear_approx),
                    fmt(r.alpha0),
                    fmt(r.beta0),
                ]
            })
            .collect();
        csv_table(
            &["n", "lambda_min_exact", "lambda_min_linear_approx", "alpha0", "beta0"],
            &text,
        )
    };
    let manifest = RunManifest::new("threshold", json!({ "n": [a, b] }));
    emit(&body, common.out.as_deref(), &manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(n: Option<usize>, lambda: f64, grid: bool, positions: Vec<f64>, common: Common) -> Outcome {
    check_common(&common)?;
    let profile = profile_from(n, positions)?;
    let cfg = GameConfig::new(profile.len(), lambda)?;
    let analytic = verify_equilibrium(&cfg, &profile, common.tol)?;
    let oracle = if grid {
        Some(verify_equilibrium_grid(&cfg, &profile, common.tol, GRID_RESOLUTION)?)
    } else {
        None
    };

    let body = if common.json {
        let players: Vec<_> = analytic
            .reports
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let g = oracle.as_ref().map(|o| &o.reports[k]);
                json!({
                    "player": r.player,
                    "position": round(profile.positions()[k]),
                    "payoff": round(r.current_payoff),
                    "best_point": round(r.best_point),
                    "best_payoff": round(r.best_payoff),
                    "gain": round(r.gain),
                    "source": r.source,
                    "limit": r.limit,
                    "grid_best_point": g.map(|g| round(g.best_point)),
                    "grid_gain": g.map(|g| round(g.gain)),
                })
            })
            .collect();
        output::json(&json!({
            "command": "verify",
            "n": profile.len(),
            "lambda": round(lambda),
            "tol": common.tol,
            "equilibrium": analytic.is_equilibrium,
            "max_gain": round(analytic.max_gain),
            "grid_equilibrium": oracle.as_ref().map(|o| o.is_equilibrium),
            "players": players,
        }))
    } else {
        let mut header = vec![
            "player", "position", "payoff", "best_point", "best_payoff", "gain", "source", "limit",
        ];
        if grid {
            header.extend(["grid_best_point", "grid_gain", "grid_verdict"]);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for (k, r) in analytic.reports.iter().enumerate() {
            let mut rec = vec![
                r.player.to_string(),
                fmt(profile.positions()[k]),
                fmt(r.current_payoff),
                fmt(r.best_point),
                fmt(r.best_payoff),
                fmt(r.gain),
                serde_json::to_value(r.source).expect("enum").as_str().unwrap_or("").to_string(),
                r.limit.to_string(),
            ];
            if let Some(o) = &oracle {
                let g = &o.reports[k];
                rec.extend([fmt(g.best_point), fmt(g.gain), (g.gain <= common.tol).to_string()]);
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
    };
    let manifest = RunManifest::new(
        "verify",
        json!({
            "lambda": lambda, "positions": profile.positions(), "tol": common.tol, "grid_oracle": grid,
        }),
    );
    emit(&body, common.out.as_deref(), &manifest)?;

    eprintln!(
        "equilibrium: {} (max gain {})",
        analytic.is_equilibrium,
        fmt(analytic.max_gain)
    );
    if let Some(o) = &oracle {
        eprintln!("grid oracle: {} (max gain {})", o.is_equilibrium, fmt(o.max_gain));
        if o.is_equilibrium != analytic.is_equilibrium {
            eprintln!("warning: grid oracle disagrees with the analytic verdict");
            return Ok(ExitCode::from(1));
        }
    }
    Ok(if analytic.is_equilibrium {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

const Z_LIMIT: f64 = 4.0;

fn simulate(n: Option<usize>, lambda: f64, positions: Vec<f64>, sampling: Sampling, common: Common) -> Outcome {
    check_common(&common)?;
    if sampling.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let profile = profile_from(n, positions)?;
    let cfg = GameConfig::new(profile.len(), lambda)?;
    let closed = expected_payoffs(&cfg, &profile);
    let mc = MonteCarlo::new(sampling.samples, sampling.seed);
    let est = mc.estimate(profile.len(), |rng, out| {
        out.copy_from_slice(&realized_payoffs(&profile, &sample_faults(lambda, rng)));
    });
    let z: Vec<Option<f64>> = est.iter().zip(&closed).map(|(e, c)| e.z_score(*c)).collect();
    let failed = z.iter().flatten().any(|z| z.abs() > Z_LIMIT);

    let body = if common.json {
        let players: Vec<_> = (0..profile.len())
            .map(|k| {
                json!({
                    "player": k,
                    "position": round(profile.positions()[k]),
                    "closed_form": round(closed[k]),
                    "mc_mean": round(est[k].mean),
                    "mc_stderr": est[k].std_error.map(round),
                    "z_score": z[k].map(round),
                })
            })
            .collect();
        output::json(&json!({
            "command": "simulate",
            "n": profile.len(),
            "lambda": round(lambda),
            "samples": sampling.samples,
            "seed": sampling.seed,
            "players": players,
        }))
    } else {
        let rows: Vec<[String; 6]> = (0..profile.len())
            .map(|k| {
                [
                    k.to_string(),
                    fmt(profile.positions()[k]),
                    fmt(closed[k]),
                    fmt(est[k].mean),
                    fmt_opt(est[k].std_error),
                    fmt_opt(z[k]),
                ]
            })
            .collect();
        csv_table(
            &["player", "position", "closed_form", "mc_mean", "mc_stderr", "z_score"],
            &rows,
        )
    };
    let manifest = RunManifest::new(
        "simulate",
        json!({
            "lambda": lambda, "positions": profile.positions(),
            "samples": sampling.samples, "seed": sampling.seed,
        }),
    );
    emit(&body, common.out.as_deref(), &manifest)?;
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

#[derive(Serialize)]
struct EfficiencyRow {
    n: usize,
    lambda: f64,
    profile: ProfileKind,
    metric: Metric,
    value: Option<f64>,
    std_error: Option<f64>,
}

fn comparison_profile(cfg: &GameConfig, kind: ProfileKind) -> Option<Profile> {
    match kind {
        ProfileKind::Canonical if cfg.n <= 2 => nash_equilibrium(cfg).ok().flatten(),
        ProfileKind::Canonical => canonical_profile(cfg).ok(),
        ProfileKind::OptDc => optimal_dc_profile(cfg).ok(),
        ProfileKind::Faultfree => faultfree_ne_profile(cfg.n, cfg.lambda).ok(),
    }
}

struct EfficiencyArgs {
    n: usize,
    lambda: Option<String>,
    lambda_points: Vec<String>,
    steps: usize,
    profiles: Vec<ProfileKind>,
    metric: Metric,
    mc: bool,
    stated_optimum: bool,
    sampling: Sampling,
}

fn efficiency(a: EfficiencyArgs, common: Common) -> Outcome {
    check_common(&common)?;
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if a.mc && a.sampling.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let lambdas: Vec<f64> = match &a.lambda {
        Some(spec) => parse_spec(spec).map_err(usage)?.points(a.n, a.steps),
        None => a
            .lambda_points
            .iter()
            .map(|t| parse_rate(t).map(|r| RateSpec::Single(r).points(a.n, 1)[0]))
            .collect::<Result<_, _>>()
            .map_err(usage)?,
    };
    let norm = if a.stated_optimum {
        Normalization::Stated
    } else {
        Normalization::Computed
    };
    let optimum = match norm {
        Normalization::Computed => social_optimum(a.n)?.1,
        Normalization::Stated => 0.5 / a.n as f64,
    };

    let mut rows = Vec::new();
    for &lambda in &lambdas {
        let cfg = GameConfig::new(a.n, lambda)?;
        for &kind in &a.profiles {
            let profile = comparison_profile(&cfg, kind);
            let (value, std_error) = match (a.metric, &profile) {
                (_, None) => (None, None),
                (Metric::Cfree, Some(p)) => (Some(c_free(p)?), None),
                (Metric::Pos, Some(_)) if kind == ProfileKind::Canonical => {
                    (pos_poa(&cfg).ok().map(|r| r.pos_with(norm)), None)
                }
                (Metric::Pos, Some(p)) => (Some(c_free(p)? / optimum), None),
                (Metric::Dcfrac, Some(p)) => {
                    let mode = if a.mc {
                        DcMode::MonteCarlo(MonteCarlo::new(a.sampling.samples, a.sampling.seed))
                    } else {
                        DcMode::ClosedForm
                    };
                    let e = expected_disconnected_fraction(&cfg, p, mode)?;
                    (Some(e.mean), e.std_error)
                }
            };
            rows.push(EfficiencyRow {
                n: a.n,
                lambda: round(lambda),
                profile: kind,
                metric: a.metric,
                value: value.map(round),
                std_error: std_error.map(round),
            });
        }
    }

    let body = if common.json {
        output::json(&rows)
    } else {
        let name = |v: serde_json::Value| v.as_str().unwrap_or("").to_string();
        let text: Vec<[String; 6]> = rows
            .iter()
            .map(|r| {
                [
                    r.n.to_string(),
                    fmt(r.lambda),
                    name(json!(r.profile)),
                    name(json!(r.metric)),
                    fmt_opt(r.value),
                    fmt_opt(r.std_error),
                ]
            })
            .collect();
        csv_table(&["n", "lambda", "profile", "metric", "value", "std_error"], &text)
    };
    let manifest = RunManifest::new(
        "efficiency",
        json!({
            "n": a.n, "lambda": a.lambda, "lambda_points": a.lambda_points, "steps": a.steps,
            "resolved_lambdas": lambdas, "profiles": a.profiles, "metric": a.metric,
            "mc": a.mc, "samples": a.sampling.samples, "seed": a.sampling.seed,
            "stated_optimum": a.stated_optimum,
        }),
    );
    emit(&body, common.out.as_deref(), &manifest)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Solve { n, lambda, common } => solve(n, lambda, common),
        Command::Threshold { n, common } => threshold_cmd(&n, common),
        Command::Verify {
            n,
            lambda,
            grid_oracle,
            positions,
            common,
        } => verify(n, lambda, grid_oracle, positions, common),
        Command::Simulate {
            n,
            lambda,
            positions,
            sampling,
            common,
        } => simulate(n, lambda, positions, sampling, common),
        Command::Efficiency {
            n,
            lambda,
            lambda_points,
            steps,
            profiles,
            metric,
            mc,
            stated_optimum,
            sampling,
            common,
        } => efficiency(
            EfficiencyArgs {
                n,
                lambda,
                lambda_points,
                steps,
                profiles,
                metric,
                mc,
                stated_optimum,
                sampling,
            },
            common,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
