//! Monte Carlo estimators: Mecke degree check, two-point function, one-arm
//! crossing probabilities and critical-intensity estimation.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::models::{mass_beyond, norm_1to1, AdjacencySpec};
use crate::rcm::{bottleneck_to_shell, edge_range, explore_until, incident, EdgeRule, SpatialIndex};
use crate::sampler::{add_origin, add_palm_polar, sample_with, tag, RadialSampler, Seed, DEFAULT_POINT_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub seed_root: u64,
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_score: Option<f64>,
}

fn check_replicas(replicas: usize) -> Result<()> {
    if replicas < 2 {
        return argument("at least 2 replicas are required");
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return argument("intensity must be finite and >= 0");
    }
    Ok(())
}

/// Mean and standard error, summed in index order.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Mean palm degree of `o` in `B_R` against `lambda * int_{B_R} phi dmu`.
///
/// The analytic value is exact for the restricted process at any `R`; the
/// untruncated `lambda * norm_1to1` is reported in `params` next to the tail
/// mass that separates the two.
pub fn mecke_degree_check(
    spec: &AdjacencySpec<f64>,
    lambda: f64,
    r_ball: f64,
    replicas: usize,
    seed_root: u64,
) -> Result<MCResult> {
    check_replicas(replicas)?;
    check_lambda(lambda)?;
    let sampler = RadialSampler::new(spec.d, r_ball)?;
    let degs = (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let seed = Seed::new(seed_root, k);
            let mut c = sample_with(&sampler, lambda, seed, DEFAULT_POINT_CAP)?;
            let o = add_origin(&mut c);
            let rule = EdgeRule::new(spec, seed)?;
            Ok(incident(&c, &rule, o).len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (m, se) = mean_se(&degs);
    let full = lambda * norm_1to1(spec)?;
    let tail = lambda * mass_beyond(spec, r_ball)?;
    let want = full - tail;
    let z = if se > 0.0 { (m - want) / se } else if m == want { 0.0 } else { f64::INFINITY };
    Ok(MCResult {
        estimate: m,
        std_error: se,
        replicas,
        seed_root,
        params: params(&[
            ("lambda", lambda),
            ("R", r_ball),
            ("d", spec.d as f64),
            ("untruncated", full),
            ("tail", tail),
        ]),
        analytic: Some(want),
        z_score: Some(z),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointRow {
    pub r: f64,
    pub tau: f64,
    pub std_error: f64,
    /// Frequency of a direct edge between the two planted points.
    pub direct: f64,
}

/// Connection frequency of planted points `o` and `x_r` (at distance `r`).
pub fn two_point_estimate(
    spec: &AdjacencySpec<f64>,
    lambda: f64,
    r_ball: f64,
    r_bins: &[f64],
    replicas: usize,
    seed_root: u64,
) -> Result<Vec<TwoPointRow>> {
    check_replicas(replicas)?;
    check_lambda(lambda)?;
    if r_bins.iter().any(|&r| !(r >= 0.0) || r > r_ball) {
        return argument("two-point bins must lie in [0, R]");
    }
    let sampler = RadialSampler::new(spec.d, r_ball)?;
    let mut dir = vec![0.0; spec.d];
    dir[0] = 1.0;
    r_bins
        .iter()
        .enumerate()
        .map(|(b, &r)| {
            if r == 0.0 {
                return Ok(TwoPointRow { r, tau: 1.0, std_error: 0.0, direct: 1.0 });
            }
            let out = (0..replicas as u64)
                .into_par_iter()
                .map(|k| {
                    let seed = Seed::new(seed_root, ((b as u64) << 32) | k);
                    let mut c = sample_with(&sampler, lambda, seed, DEFAULT_POINT_CAP)?;
                    let o = add_origin(&mut c);
                    let x = add_palm_polar(&mut c, r, &dir)?;
                    let rule = EdgeRule::new(spec, seed)?;
                    let direct = rule.connects(o, x, c.dist(o, x));
                    let idx = SpatialIndex::new(&c, rule.range());
                    let conn = direct || explore_until(&c, &rule, &idx, o, |j| j == x);
                    Ok((conn as u8 as f64, direct as u8 as f64))
                })
                .collect::<Result<Vec<_>>>()?;
            let hits: Vec<f64> = out.iter().map(|p| p.0).collect();
            let direct = out.iter().map(|p| p.1).sum::<f64>() / replicas as f64;
            let (tau, se) = mean_se(&hits);
            Ok(TwoPointRow { r, tau, std_error: se, direct })
        })
        .collect()
}

fn crossing_shell(spec: &AdjacencySpec<f64>, r_ball: f64, margin: f64) -> Result<f64> {
    let shell = r_ball - margin;
    let range = edge_range(spec)?;
    if !(margin >= 0.0) || !(shell > range) {
        return argument(format!("shell R - margin = {shell} must exceed the edge range {range}"));
    }
    Ok(shell)
}

/// Fraction of replicas in which the cluster of `o` reaches radius `R - shell_margin`.
pub fn crossing_probability(
    spec: &AdjacencySpec<f64>,
    lambda: f64,
    r_ball: f64,
    shell_margin: f64,
    replicas: usize,
    seed_root: u64,
) -> Result<MCResult> {
    check_replicas(replicas)?;
    check_lambda(lambda)?;
    let shell = crossing_shell(spec, r_ball, shell_margin)?;
    let sampler = RadialSampler::new(spec.d, r_ball)?;
    let hits = (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let seed = Seed::new(seed_root, k);
            let mut c = sample_with(&sampler, lambda, seed, DEFAULT_POINT_CAP)?;
            let o = add_origin(&mut c);
            let rule = EdgeRule::new(spec, seed)?;
            let idx = SpatialIndex::new(&c, rule.range());
            Ok(explore_until(&c, &rule, &idx, o, |j| c.radius(j) >= shell) as u8 as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = replicas as f64;
    let p = hits.iter().sum::<f64>() / n;
    Ok(MCResult {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        replicas,
        seed_root,
        params: params(&[("lambda", lambda), ("R", r_ball), ("shell", shell)]),
        analytic: None,
        z_score: None,
    })
}

/// Per-replica crossing thresholds under the monotone coupling: points are
/// sampled once at `lambda_hi` with uniform marks `u`, the process at
/// `lambda` keeps points with `u * lambda_hi <= lambda`, and the returned
/// value is the smallest `lambda` at which `o` reaches the shell (`inf` if
/// it does not at `lambda_hi`).
pub fn crossing_thresholds(
    spec: &AdjacencySpec<f64>,
    r_ball: f64,
    shell_margin: f64,
    lambda_hi: f64,
    replicas: usize,
    seed_root: u64,
    stream_base: u64,
) -> Result<Vec<f64>> {
    check_lambda(lambda_hi)?;
    let shell = r_ball - shell_margin;
    if !(shell_margin >= 0.0) || !(shell > 0.0) {
        return argument(format!("shell R - margin = {shell} must be positive"));
    }
    let sampler = RadialSampler::new(spec.d, r_ball)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let seed = Seed::new(seed_root, stream_base | k);
            let mut c = sample_with(&sampler, lambda_hi, seed, DEFAULT_POINT_CAP)?;
            let mut marks = seed.rng(tag::MARKS);
            let mut w: Vec<f64> = (0..c.len()).map(|_| marks.random::<f64>() * lambda_hi).collect();
            let o = add_origin(&mut c);
            w.push(0.0);
            let rule = EdgeRule::new(spec, seed)?;
            let idx = SpatialIndex::new(&c, rule.range());
            Ok(bottleneck_to_shell(&c, &rule, &idx, o, &w, shell))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingRow {
    pub lambda: f64,
    pub p_hat: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingTable {
    #[serde(rename = "R")]
    pub r_ball: f64,
    pub shell: f64,
    /// Intensity where the empirical crossing probability first reaches 1/2.
    pub lambda_half: f64,
    /// Binomial (order-statistic) 95% interval for `lambda_half`.
    pub ci_low: f64,
    pub ci_high: f64,
    pub rows: Vec<CrossingRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCEstimate {
    pub lambda_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_r_crossings: Vec<CrossingTable>,
    pub method: String,
    pub replicas: usize,
    pub seed_root: u64,
    /// `lambda_hat * norm_1to1`.
    pub expected_degree: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateOptions {
    /// Defaults to the edge range of the model.
    #[serde(default)]
    pub shell_margin: Option<f64>,
    /// Points of the reported `(lambda, p_hat)` grid per radius.
    #[serde(default = "default_grid")]
    pub grid_points: usize,
}

fn default_grid() -> usize {
    16
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { shell_margin: None, grid_points: default_grid() }
    }
}

const Z95: f64 = 1.959963984540054;

fn ecdf_curve(sorted: &[f64], lo: f64, hi: f64, points: usize) -> Vec<CrossingRow> {
    let n = sorted.len() as f64;
    (0..points.max(2))
        .map(|k| {
            let lambda = lo + (hi - lo) * k as f64 / (points.max(2) - 1) as f64;
            let p = sorted.partition_point(|&t| t <= lambda) as f64 / n;
            CrossingRow { lambda, p_hat: p, std_error: (p * (1.0 - p) / n).sqrt() }
        })
        .collect()
}

/// Weighted least squares `y = a + b x`; returns `(a, se_a, chi2)`.
fn wls_intercept(x: &[f64], y: &[f64], sigma: &[f64]) -> (f64, f64, f64) {
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s).max(1e-300)).collect();
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    let b = (sw * sxy - sx * sy) / det;
    let a = (sy - b * sx) / sw;
    let chi2: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * (y - a - b * x).powi(2)).sum();
    (a, (sxx / det).sqrt(), chi2)
}

/// Finite-size crossing points `p_hat(lambda, R) = 1/2` for each `R`,
/// extrapolated linearly in `1/R`.
pub fn estimate_lambda_c(
    spec: &AdjacencySpec<f64>,
    r_list: &[f64],
    replicas: usize,
    bracket: (f64, f64),
    seed_root: u64,
) -> Result<LambdaCEstimate> {
    estimate_lambda_c_with(spec, r_list, replicas, bracket, seed_root, &EstimateOptions::default())
}

pub fn estimate_lambda_c_with(
    spec: &AdjacencySpec<f64>,
    r_list: &[f64],
    replicas: usize,
    bracket: (f64, f64),
    seed_root: u64,
    opts: &EstimateOptions,
) -> Result<LambdaCEstimate> {
    check_replicas(replicas)?;
    let (lo, hi) = bracket;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Bracketing { msg: format!("degenerate bracket ({lo}, {hi})"), curve: Vec::new() });
    }
    if r_list.is_empty() || r_list.windows(2).any(|w| !(w[1] > w[0])) {
        return argument("R_list must be non-empty and strictly increasing");
    }
    let margin = match opts.shell_margin {
        Some(m) => m,
        None => edge_range(spec)?,
    };
    let n = replicas as f64;
    let range = edge_range(spec)?;
    let mut warnings = Vec::new();
    let mut tables = Vec::new();
    for (k, &r) in r_list.iter().enumerate() {
        if r - margin <= range {
            warnings.push(format!(
                "R={r}: shell {} lies within one edge range ({range}) of o; the crossing is a one-hop event",
                r - margin
            ));
        }
        let mut t = crossing_thresholds(spec, r, margin, hi, replicas, seed_root, (k as u64) << 40)?;
        t.sort_by(f64::total_cmp);
        let rows = ecdf_curve(&t, lo, hi, opts.grid_points);
        let curve = || rows.iter().map(|c| (c.lambda, c.p_hat)).collect::<Vec<_>>();
        // smallest lambda with p_hat >= 1/2
        let m = replicas.div_ceil(2);
        let half = t[m - 1];
        if !half.is_finite() || half > hi {
            return Err(Error::Bracketing {
                msg: format!("p_hat(lambda_hi) < 1/2 at R={r}; raise the upper bracket"),
                curve: curve(),
            });
        }
        if half <= lo {
            return Err(Error::Bracketing {
                msg: format!("p_hat(lambda_lo) >= 1/2 at R={r}; lower the lower bracket"),
                curve: curve(),
            });
        }
        let spread = Z95 * n.sqrt() * 0.5;
        let i_lo = ((n * 0.5 - spread).floor().max(1.0) as usize).min(replicas) - 1;
        let i_hi = ((n * 0.5 + spread).ceil() as usize).min(replicas) - 1;
        tables.push(CrossingTable {
            r_ball: r,
            shell: r - margin,
            lambda_half: half,
            ci_low: t[i_lo].min(half),
            ci_high: t[i_hi].max(half).min(hi),
            rows,
        });
    }
    let y: Vec<f64> = tables.iter().map(|t| t.lambda_half).collect();
    let sig: Vec<f64> = tables.iter().map(|t| ((t.ci_high - t.ci_low) / (2.0 * Z95)).max(1e-12 * t.lambda_half)).collect();
    let (lambda_hat, se, method) = match tables.len() {
        1 => (y[0], sig[0], "one-arm crossing p=1/2, single radius".to_string()),
        len => {
            let x: Vec<f64> = r_list.iter().map(|r| 1.0 / r).collect();
            let (a, se_a, chi2) = wls_intercept(&x, &y, &sig);
            let inflate = if len > 2 { (chi2 / (len - 2) as f64).max(1.0) } else { 1.0 };
            (a, se_a * inflate.sqrt(), "one-arm crossing p=1/2, weighted linear fit in 1/R".to_string())
        }
    };
    Ok(LambdaCEstimate {
        lambda_hat,
        ci_low: lambda_hat - Z95 * se,
        ci_high: lambda_hat + Z95 * se,
        per_r_crossings: tables,
        method,
        replicas,
        seed_root,
        expected_degree: lambda_hat * norm_1to1(spec)?,
        warnings,
    })
}
