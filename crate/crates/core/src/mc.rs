//! Monte Carlo oracle for the log-return model
//! `dX = mu dt + sigma dW + rho dZ_{lambda t}` and its OU variance process.
//!
//! Every path `i` draws from its own ChaCha8 stream `(seed, i)`, so batches
//! are bit-identical for any thread count; results are collected in path
//! order. Brownian crossings are located by linear interpolation between
//! grid points (no bridge correction). Compound-Poisson jumps carry exact
//! epochs inside each step, so subordinator crossings by a jump are exact;
//! infinite-activity increments are spread linearly over the step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{ModelParams, SubordinatorSpec};

/// The random stream of path `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Values of one path at `k * dt`, starting at `k = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub dt: f64,
    pub values: Vec<f64>,
    pub stream_id: u64,
}

impl PathSample {
    pub fn horizon(&self) -> f64 {
        self.dt * (self.values.len().saturating_sub(1)) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// First time the path reaches `level` or above.
    Up,
    /// First time the path reaches `-level` or below.
    Down,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Mode::Up),
            "down" => Ok(Mode::Down),
            other => Err(Error::param("mode", format!("expected up or down, got `{other}`"))),
        }
    }
}

impl Mode {
    // signed distance past the barrier; >= 0 means crossed
    fn excess(self, v: f64, level: f64) -> f64 {
        match self {
            Mode::Up => v - level,
            Mode::Down => -level - v,
        }
    }
}

fn check_step(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("must be positive, got {horizon}")));
    }
    Ok((horizon / dt).round().max(1.0) as usize)
}

/// One log-return path with exact subordinator increments on the clock `lambda t`.
pub fn simulate_logreturn(
    model: &ModelParams,
    spec: &SubordinatorSpec,
    horizon: f64,
    dt: f64,
    seed: u64,
    stream_id: u64,
) -> Result<PathSample> {
    model.validate()?;
    spec.validate()?;
    let n = check_step(horizon, dt)?;
    let mut rng = stream_rng(seed, stream_id);
    let sd = model.sigma * dt.sqrt();
    let sampler = spec.sampler(model.lambda * dt);
    let mut x = 0.0;
    let mut values = Vec::with_capacity(n + 1);
    values.push(x);
    for _ in 0..n {
        let w: f64 = rng.sample(StandardNormal);
        let z = sampler.sample(&mut rng);
        x += model.mu * dt + sd * w + model.rho * z;
        values.push(x);
    }
    Ok(PathSample { dt, values, stream_id })
}

/// One path of the subordinator itself.
pub fn simulate_subordinator(spec: &SubordinatorSpec, horizon: f64, dt: f64, seed: u64, stream_id: u64) -> Result<PathSample> {
    spec.validate()?;
    let n = check_step(horizon, dt)?;
    let mut rng = stream_rng(seed, stream_id);
    let sampler = spec.sampler(dt);
    let mut z = 0.0;
    let mut values = Vec::with_capacity(n + 1);
    values.push(z);
    for _ in 0..n {
        z += sampler.sample(&mut rng);
        values.push(z);
    }
    Ok(PathSample { dt, values, stream_id })
}

/// The variance process `d sigma^2 = -lambda sigma^2 dt + dZ_{lambda t}`.
///
/// Each step is exact in the decay: `sigma^2 <- e^{-lambda dt} sigma^2 +`
/// jumps discounted from their own epochs, with the infinite-activity part of
/// the increment discounted from the step midpoint.
pub fn simulate_variance(
    model: &ModelParams,
    spec: &SubordinatorSpec,
    sigma0_sq: f64,
    horizon: f64,
    dt: f64,
    seed: u64,
    stream_id: u64,
) -> Result<PathSample> {
    model.validate()?;
    spec.validate()?;
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::param("sigma0_sq", format!("must be positive, got {sigma0_sq}")));
    }
    let n = check_step(horizon, dt)?;
    let mut rng = stream_rng(seed, stream_id);
    let lam = model.lambda;
    let decay = (-lam * dt).exp();
    let mid = (-0.5 * lam * dt).exp();
    let sampler = spec.sampler(lam * dt);
    let mut v = sigma0_sq;
    let mut values = Vec::with_capacity(n + 1);
    values.push(v);
    for _ in 0..n {
        // offsets are on the clock lambda t, so the remaining decay is e^{-(lambda dt - offset)}
        let inc = sampler.sample_detailed(&mut rng);
        let jumps: f64 = inc.jumps.iter().map(|&(at, size)| size * (at - lam * dt).exp()).sum();
        v = decay * v + mid * inc.diffuse + jumps;
        values.push(v);
    }
    Ok(PathSample { dt, values, stream_id })
}

/// `(1/T) int_0^T sigma_t^2 dt + rho^2 lambda Var[Z_1]`, the time average by
/// trapezoid on the path.
pub fn realized_variance(path: &PathSample, model: &ModelParams, spec: &SubordinatorSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) || t > path.horizon() * (1.0 + 1e-12) {
        return Err(Error::domain("realized_variance", format!("T = {t} outside the path [0, {}]", path.horizon())));
    }
    let jump = model.rho * model.rho * model.lambda * spec.variance();
    let vals = &path.values;
    if t == 0.0 {
        return Ok(vals[0] + jump);
    }
    let full = ((t / path.dt) + 1e-9).floor() as usize;
    let full = full.min(vals.len() - 1);
    let mut area = 0.0;
    for k in 0..full {
        area += 0.5 * (vals[k] + vals[k + 1]) * path.dt;
    }
    let rest = t - full as f64 * path.dt;
    if rest > 0.0 && full + 1 < vals.len() {
        let end = vals[full] + (vals[full + 1] - vals[full]) * rest / path.dt;
        area += 0.5 * (vals[full] + end) * rest;
    }
    Ok(area / t + jump)
}

/// Sorted exit times with the count of paths that never exited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalExitDistribution {
    pub level: f64,
    pub exit_times: Vec<f64>,
    pub censored_count: usize,
}

impl EmpiricalExitDistribution {
    pub fn from_times(level: f64, times: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut exit_times = Vec::new();
        let mut censored_count = 0;
        for t in times {
            match t {
                Some(t) => exit_times.push(t),
                None => censored_count += 1,
            }
        }
        exit_times.sort_by(f64::total_cmp);
        Self { level, exit_times, censored_count }
    }

    pub fn paths(&self) -> usize {
        self.exit_times.len() + self.censored_count
    }

    /// Kolmogorov–Smirnov distance to `cdf`, with censored paths counted
    /// as not yet exited; the comparison stops at `horizon`.
    pub fn ks_distance(&self, horizon: f64, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.paths() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.exit_times.len() {
            let x = self.exit_times[i];
            let mut j = i;
            while j < self.exit_times.len() && self.exit_times[j] == x {
                j += 1;
            }
            let f = cdf(x);
            d = d.max((f - i as f64 / n).abs()).max((f - j as f64 / n).abs());
            i = j;
        }
        d.max((cdf(horizon) - self.exit_times.len() as f64 / n).abs())
    }
}

/// First crossing of `level` on a stored path, interpolating linearly
/// between grid points.
pub fn path_exit_time(path: &PathSample, level: f64, mode: Mode) -> Option<f64> {
    let v = &path.values;
    if mode.excess(v[0], level) >= 0.0 {
        return Some(0.0);
    }
    for k in 1..v.len() {
        let e1 = mode.excess(v[k], level);
        if e1 >= 0.0 {
            let e0 = mode.excess(v[k - 1], level);
            return Some(path.dt * ((k - 1) as f64 + (-e0) / (e1 - e0)));
        }
    }
    None
}

/// Exit times of a batch of stored paths.
pub fn empirical_exit(paths: &[PathSample], level: f64, mode: Mode) -> EmpiricalExitDistribution {
    EmpiricalExitDistribution::from_times(level, paths.iter().map(|p| path_exit_time(p, level, mode)))
}

/// Batch settings for the streaming exit simulators.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Batch {
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
}

/// First time `Z_x` exceeds `level`, walking the path without storing it.
/// Jumps cross at their exact epochs; the diffuse part accrues linearly.
pub fn subordinator_exit_time<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    level: f64,
    dt: f64,
    horizon: f64,
    rng: &mut R,
) -> Option<f64> {
    let sampler = spec.sampler(dt);
    let mut z = 0.0;
    let mut x = 0.0;
    while x < horizon {
        let inc = sampler.sample_detailed(rng);
        let rate = inc.diffuse / dt;
        let mut last = 0.0;
        let mut zz = z;
        for &(at, size) in &inc.jumps {
            let before = zz + rate * (at - last);
            if before > level {
                return Some(x + last + (level - zz) / rate);
            }
            zz = before + size;
            last = at;
            if zz > level {
                return Some(x + at);
            }
        }
        let end = zz + rate * (dt - last);
        if end > level {
            return Some(x + last + (level - zz) / rate);
        }
        z = end;
        x += dt;
    }
    None
}

/// Empirical exit law of the subordinator over a batch.
pub fn subordinator_exit_batch(spec: &SubordinatorSpec, level: f64, batch: &Batch) -> Result<EmpiricalExitDistribution> {
    spec.validate()?;
    check_step(batch.horizon, batch.dt)?;
    let times: Vec<Option<f64>> = (0..batch.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(batch.seed, i as u64);
            subordinator_exit_time(spec, level, batch.dt, batch.horizon, &mut rng)
        })
        .collect();
    Ok(EmpiricalExitDistribution::from_times(level, times))
}

/// First crossing of the log-return process, streaming.
pub fn logreturn_exit_time<R: Rng + ?Sized>(
    model: &ModelParams,
    spec: &SubordinatorSpec,
    level: f64,
    mode: Mode,
    dt: f64,
    horizon: f64,
    rng: &mut R,
) -> Option<f64> {
    let sd = model.sigma * dt.sqrt();
    let jumps = model.rho != 0.0;
    let sampler = spec.sampler(model.lambda * dt);
    let steps = (horizon / dt).round() as usize;
    let mut x = 0.0;
    let mut e0 = mode.excess(x, level);
    for k in 0..steps {
        let w: f64 = rng.sample(StandardNormal);
        let z = if jumps { sampler.sample(rng) } else { 0.0 };
        x += model.mu * dt + sd * w + model.rho * z;
        let e1 = mode.excess(x, level);
        if e1 >= 0.0 {
            return Some(dt * (k as f64 + (-e0) / (e1 - e0)));
        }
        e0 = e1;
    }
    None
}

/// Empirical exit law of the log-return process over a batch.
pub fn logreturn_exit_batch(
    model: &ModelParams,
    spec: &SubordinatorSpec,
    level: f64,
    mode: Mode,
    batch: &Batch,
) -> Result<EmpiricalExitDistribution> {
    model.validate()?;
    spec.validate()?;
    check_step(batch.horizon, batch.dt)?;
    let times: Vec<Option<f64>> = (0..batch.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(batch.seed, i as u64);
            logreturn_exit_time(model, spec, level, mode, batch.dt, batch.horizon, &mut rng)
        })
        .collect();
    Ok(EmpiricalExitDistribution::from_times(level, times))
}

/// Censoring horizon: 50 times a proxy for the expected exit time.
pub fn default_horizon(model: &ModelParams, spec: &SubordinatorSpec, level: f64) -> f64 {
    let drift = (model.mu + model.rho * model.lambda * spec.mean()).abs();
    let proxy = if drift > 0.0 { level / drift } else { level * level / (model.sigma * model.sigma) };
    50.0 * proxy.max(1e-3)
}

/// Pathwise comparison of `A_{a+b}` with `B_a + C_b` under common noise.
///
/// `A` is the first time `mu t + sigma W + rho Z <= -(a + b)`, `B` the first
/// time `mu t + sigma W <= -a` and `C` the first time `mu t + rho Z <= -b`,
/// all driven by the same `W` and `Z`. This is an observable proxy for the
/// decomposition event, not an implementation of its probability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub censored_a: usize,
    pub censored_b: usize,
    pub censored_c: usize,
    /// Sorted `A - (B + C)` over paths where all three exited.
    pub differences: Vec<f64>,
    /// Share of those paths with `|A - (B + C)| < dt`.
    pub within_dt_fraction: f64,
    /// `B` times, for comparison with the inverse Gaussian law.
    pub b_exits: EmpiricalExitDistribution,
}

pub fn decomposition_check(
    a: f64,
    b: f64,
    model: &ModelParams,
    spec: &SubordinatorSpec,
    batch: &Batch,
) -> Result<DecompositionReport> {
    model.validate()?;
    spec.validate()?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::param("a", "barriers must be positive"));
    }
    if !(model.rho < 0.0) {
        return Err(Error::param("rho", format!("needs rho < 0, got {}", model.rho)));
    }
    let steps = check_step(batch.horizon, batch.dt)?;
    let dt = batch.dt;
    let triples: Vec<[Option<f64>; 3]> = (0..batch.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(batch.seed, i as u64);
            let sd = model.sigma * dt.sqrt();
            let sampler = spec.sampler(model.lambda * dt);
            let (mut w, mut z) = (0.0f64, 0.0f64);
            let mut out = [None; 3];
            let levels = [a + b, a, b];
            let mut prev = [0.0f64; 3];
            for k in 0..steps {
                let t = (k + 1) as f64 * dt;
                w += sd * rng.sample::<f64, _>(StandardNormal);
                z += sampler.sample(&mut rng);
                let drift = model.mu * t;
                let now = [drift + w + model.rho * z, drift + w, drift + model.rho * z];
                for j in 0..3 {
                    if out[j].is_none() && now[j] <= -levels[j] {
                        let (e0, e1) = (-levels[j] - prev[j], -levels[j] - now[j]);
                        out[j] = Some(dt * (k as f64 + (-e0) / (e1 - e0)));
                    }
                }
                prev = now;
                if out.iter().all(Option::is_some) {
                    break;
                }
            }
            out
        })
        .collect();
    let mut differences = Vec::new();
    let mut censored = [0usize; 3];
    for tr in &triples {
        for j in 0..3 {
            if tr[j].is_none() {
                censored[j] += 1;
            }
        }
        if let [Some(x), Some(y), Some(zc)] = *tr {
            differences.push(x - (y + zc));
        }
    }
    differences.sort_by(f64::total_cmp);
    let close = differences.iter().filter(|d| d.abs() < dt).count();
    let within_dt_fraction = if differences.is_empty() { 0.0 } else { close as f64 / differences.len() as f64 };
    let b_exits = EmpiricalExitDistribution::from_times(a, triples.iter().map(|t| t[1]));
    Ok(DecompositionReport {
        paths: batch.paths,
        dt,
        horizon: batch.horizon,
        censored_a: censored[0],
        censored_b: censored[1],
        censored_c: censored[2],
        differences,
        within_dt_fraction,
        b_exits,
    })
}
