//! Decomposition of a combined first-exit time into a Brownian exit and a
//! subordinator exit, with the weight `P` attached to the identity.
//!
//! `P1` and `P2` are the two joint probabilities; `P` integrates `P1 P2`
//! over `eps` and over the two times. Each factor is reduced to a single
//! integral: the Gaussian inner integral is a normal CDF, and the subordinator
//! inner integral is a survival function. Kinks from the `min`/`max` limits sit
//! at known points and become panel edges.
//!
//! The time integrals do not converge as written: for large times `P1 P2`
//! stays bounded away from zero over an `eps` range that grows with the times.
//! [`decomposition_probability`] therefore integrates over a box and reports
//! the value as computed, together with a bound on the `eps` tails. No
//! normalization is applied.

use std::cell::Cell;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::{invert_at, marginal_transforms, Method, TransformFn};
use crate::levy::{ModelParams, SubordinatorSpec};
use crate::mc::stream_rng;
use crate::quad::{integrate_breaks, integrate_to_inf, QuadSettings};
use crate::specfun::{bessel_i1_scaled, erfc, erfcx, gamma_q, ln_gamma, norm_cdf};

// Gaussian integrals are cut this many standard deviations out
const SD_WINDOW: f64 = 10.0;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Law of `Z_t` for a fixed `t`: an atom at 0 plus an absolutely continuous part.
#[derive(Clone)]
pub enum Marginal {
    Gamma { shape: f64, rate: f64 },
    /// `Poisson(lambda)` many `Exp(rate)` jumps.
    CompoundExp { lambda: f64, rate: f64 },
    InverseGaussian { mean: f64, shape: f64 },
    /// Talbot inversion of `e^{-t psi}` and `(1 - e^{-t psi}) / s`.
    Numeric { density: Arc<TransformFn<f64>>, survival: Arc<TransformFn<f64>> },
}

impl std::fmt::Debug for Marginal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Marginal::Gamma { shape, rate } => write!(f, "Gamma({shape}, {rate})"),
            Marginal::CompoundExp { lambda, rate } => write!(f, "CompoundExp({lambda}, {rate})"),
            Marginal::InverseGaussian { mean, shape } => write!(f, "IG({mean}, {shape})"),
            Marginal::Numeric { .. } => write!(f, "Numeric"),
        }
    }
}

impl Marginal {
    pub fn new(spec: &SubordinatorSpec, t: f64) -> Result<Self> {
        spec.validate()?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::domain("marginal", format!("time must be positive, got {t}")));
        }
        Ok(match *spec {
            SubordinatorSpec::GammaStationary { nu, alpha } => Marginal::Gamma { shape: nu * t, rate: alpha },
            SubordinatorSpec::GammaBdlp { nu, alpha } => Marginal::CompoundExp { lambda: nu * t, rate: alpha },
            SubordinatorSpec::IgStationary { delta, gamma } => {
                Marginal::InverseGaussian { mean: delta * t / gamma, shape: (delta * t).powi(2) }
            }
            _ => {
                let (d, s) = marginal_transforms(spec.laplace_exponent().shared(), t)?;
                let m = Marginal::Numeric { density: Arc::new(d), survival: Arc::new(s) };
                let probe = spec.mean() * t;
                let v = m.survival_open(probe) + m.density(probe);
                if !v.is_finite() {
                    return Err(Error::MarginalUnavailable(format!("{spec} at t = {t}: inversion failed")));
                }
                m
            }
        })
    }

    /// `P(Z = 0)`.
    pub fn atom(&self) -> f64 {
        match *self {
            Marginal::CompoundExp { lambda, .. } => (-lambda).exp(),
            _ => 0.0,
        }
    }

    /// Density of the continuous part at `x > 0`.
    pub fn density(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        match self {
            &Marginal::Gamma { shape, rate } => {
                ((shape - 1.0) * x.ln() + shape * rate.ln() - rate * x - ln_gamma(shape)).exp()
            }
            &Marginal::CompoundExp { lambda, rate } => {
                let z = 2.0 * (lambda * rate * x).sqrt();
                let i1 = bessel_i1_scaled(z).unwrap_or(f64::NAN);
                (z - lambda - rate * x).exp() * (lambda * rate / x).sqrt() * i1
            }
            &Marginal::InverseGaussian { mean, shape } => {
                let d = x - mean;
                (0.5 * (shape.ln() - 3.0 * x.ln()) - shape * d * d / (2.0 * mean * mean * x)).exp() * INV_SQRT_2PI
            }
            Marginal::Numeric { density, .. } => {
                invert_at(density, Method::Talbot, 32, x).map(|v| v.max(0.0)).unwrap_or(f64::NAN)
            }
        }
    }

    /// `P(Z > x)`; at `x = 0` this excludes the atom.
    pub fn survival_open(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            &Marginal::Gamma { shape, rate } => gamma_q(shape, rate * x),
            &Marginal::CompoundExp { lambda, rate } => compound_exp_survival(lambda, rate * x),
            &Marginal::InverseGaussian { mean, shape } => {
                if x == 0.0 {
                    return 1.0;
                }
                let r = (shape / x).sqrt() / std::f64::consts::SQRT_2;
                let z1 = r * (x / mean - 1.0);
                let z2 = r * (x / mean + 1.0);
                (0.5 * erfc(z1) - 0.5 * (2.0 * shape / mean - z2 * z2).exp() * erfcx(z2)).clamp(0.0, 1.0)
            }
            Marginal::Numeric { survival, .. } => {
                if x == 0.0 {
                    return 1.0;
                }
                invert_at(survival, Method::Talbot, 32, x).map(|v| v.clamp(0.0, 1.0)).unwrap_or(f64::NAN)
            }
        }
    }

    /// Gamma shape below 1, where the density is unbounded at 0.
    pub fn small_shape(&self) -> Option<f64> {
        match *self {
            Marginal::Gamma { shape, .. } if shape < 1.0 => Some(shape),
            _ => None,
        }
    }

    // density times dy/dw at y = len w^{1/k} for the gamma law with shape k:
    // the powers of w cancel, leaving (rate len)^k e^{-rate y} / Gamma(k+1)
    fn gamma_mass_weight(&self, len: f64, k: f64, y: f64) -> f64 {
        match *self {
            Marginal::Gamma { rate, .. } => (k * (rate * len).ln() - rate * y - ln_gamma(k + 1.0)).exp(),
            _ => unreachable!("only gamma marginals report a small shape"),
        }
    }

    /// `P(Z >= x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            self.survival_open(x)
        }
    }
}

// sum_{n>=1} Pois(n; lambda) Q(n, y), with Q(n, y) = e^{-y} sum_{k<n} y^k / k!
fn compound_exp_survival(lambda: f64, y: f64) -> f64 {
    let (ll, ly) = (lambda.ln(), if y > 0.0 { y.ln() } else { f64::NEG_INFINITY });
    let mut lf = 0.0; // ln n!
    let mut q = 0.0;
    let mut total = 0.0;
    let mut seen = 0.0;
    for n in 1..100_000usize {
        // add the k = n - 1 term to Q
        let k = n - 1;
        let lfk = lf;
        let term_q = if k == 0 { (-y).exp() } else { (-y + k as f64 * ly - lfk).exp() };
        q += term_q;
        lf += (n as f64).ln();
        let p = (-lambda + n as f64 * ll - lf).exp();
        total += p * q.min(1.0);
        seen += p;
        if n as f64 > lambda && (p < 1e-18 || 1.0 - (-lambda).exp() - seen < 1e-17) {
            break;
        }
    }
    total.clamp(0.0, 1.0)
}

// int_0^len h, substituting u = len w^{1/k} when h has a power-k endpoint at 0
fn power_substituted(h: impl Fn(f64) -> f64, len: f64, k: Option<f64>, short: &Cell<usize>) -> Result<f64> {
    match k {
        Some(k) => {
            let w = |v: f64| {
                let jac = len / k * v.powf(1.0 / k - 1.0);
                if jac == 0.0 {
                    0.0
                } else {
                    h(len * v.powf(1.0 / k)) * jac
                }
            };
            lenient(integrate_breaks(w, &[0.0, 1.0], &inner_settings()), short)
        }
        None => lenient(integrate_breaks(h, &[0.0, len], &inner_settings()), short),
    }
}

// ---------------------------------------------------------------------------
// P1

fn inner_settings() -> QuadSettings<f64> {
    QuadSettings::new(1e-13, 1e-10).with_panels(200)
}

// value of a nested integral, keeping the partial sum when the panel budget runs out
fn lenient(r: Result<crate::quad::Estimate<f64>>, short: &Cell<usize>) -> Result<f64> {
    match r {
        Ok(e) => Ok(e.value),
        Err(Error::BudgetExceeded { partial, .. }) if partial.is_finite() => {
            short.set(short.get() + 1);
            Ok(partial)
        }
        Err(e) => Err(e),
    }
}

// int phi_{t2}(tau) Phi(min(u1, u2 - tau) / sqrt t1) dtau
fn p1_core(u1: f64, u2: f64, t1: f64, t2: f64, short: &Cell<usize>) -> Result<f64> {
    let (s1, s2) = (t1.sqrt(), t2.sqrt());
    let tau_star = u2 - u1;
    let flat = norm_cdf(u1 / s1) * norm_cdf(tau_star / s2);
    let (lo, hi) = (tau_star.max(-SD_WINDOW * s2), SD_WINDOW * s2);
    if lo >= hi {
        return Ok(flat.clamp(0.0, 1.0));
    }
    let f = |tau: f64| {
        let z = tau / s2;
        INV_SQRT_2PI / s2 * (-0.5 * z * z).exp() * norm_cdf((u2 - tau) / s1)
    };
    let rest = lenient(integrate_breaks(f, &[lo, hi], &inner_settings()), short)?;
    Ok((flat + rest).clamp(0.0, 1.0))
}

/// `P(W_{t+alpha} >= a - eps, W_t >= a)` for standard Brownian motion.
pub fn p1_basic(eps: f64, t: f64, alpha: f64, a: f64) -> Result<f64> {
    check_times(t, alpha)?;
    p1_core(-a, -a + eps, t, alpha, &Cell::new(0))
}

/// The drifted, scaled counterpart, with the drift terms taken literally
/// (including the halved `mu (t1 + t2) / 2 sigma`).
pub fn p1_general(eps: f64, t1: f64, t2: f64, a: f64, model: &ModelParams) -> Result<f64> {
    check_times(t1, t2)?;
    let (u1, u2) = general_p1_limits(eps, t1, t2, a, model);
    p1_core(u1, u2, t1, t2, &Cell::new(0))
}

fn general_p1_limits(eps: f64, t1: f64, t2: f64, a: f64, m: &ModelParams) -> (f64, f64) {
    let u1 = (-a - m.mu * t1) / m.sigma;
    let u2 = (-a - eps) / m.sigma - m.mu * (t1 + t2) / (2.0 * m.sigma);
    (u1, u2)
}

fn check_times(t1: f64, t2: f64) -> Result<()> {
    for (k, v) in [("t", t1), ("alpha", t2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(k, format!("time must be positive, got {v}")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// P2

// E over eta ~ f of P(S >= max(c1, c2 - eta, 0)), S ~ s independent of eta.
fn p2_core(f: &Marginal, s: &Marginal, c1: f64, c2: f64, short: &Cell<usize>) -> Result<f64> {
    let af = f.atom();
    let mut total = af * s.survival(c1.max(c2));
    let bstar = c2 - c1;
    // eta beyond bstar: the limit is pinned at max(c1, 0)
    total += s.survival(c1) * f.survival_open(bstar.max(0.0));
    if bstar > 0.0 {
        // eta in [max(c2, 0), bstar]: the limit is 0
        if c1 < 0.0 {
            total += f.survival_open(c2.max(0.0)) - f.survival_open(bstar);
        }
        // eta in (0, m): limit c2 - eta > 0; integrated by parts so that only
        // bounded CDFs and the density of s away from 0 appear
        let m = bstar.min(c2.max(0.0));
        if m > 0.0 {
            let g = |b: f64| (1.0 - af) - f.survival_open(b);
            let boundary = g(m) * s.survival_open(c2 - m);
            let h = 0.5 * m;
            // G rises like b^k at 0 for a small gamma shape k
            let left = power_substituted(|b| g(b) * s.density(c2 - b), h, f.small_shape(), short)?;
            // the density of s blows up at the far end only when it reaches c2
            let right = match s.small_shape() {
                Some(k) if m >= c2 => {
                    let len = m - h;
                    let w = |u: f64| {
                        let y = len * u.powf(1.0 / k);
                        s.gamma_mass_weight(len, k, y) * g(c2 - y)
                    };
                    lenient(integrate_breaks(w, &[0.0, 1.0], &inner_settings()), short)?
                }
                _ => lenient(integrate_breaks(|b| g(b) * s.density(c2 - b), &[h, m], &inner_settings()), short)?,
            };
            total += boundary - left - right;
        }
    }
    if !total.is_finite() {
        return Err(Error::MarginalUnavailable("marginal evaluation failed".into()));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// `P(Y_{t+alpha} >= b + eps, Y_alpha >= b)` for the subordinator `spec`.
pub fn p2_basic(eps: f64, t: f64, alpha: f64, b: f64, spec: &SubordinatorSpec) -> Result<f64> {
    check_times(t, alpha)?;
    let f = Marginal::new(spec, t)?;
    let s = Marginal::new(spec, alpha)?;
    p2_core(&f, &s, b, b + eps, &Cell::new(0))
}

/// The loaded counterpart (`rho < 0`), with the limits taken literally.
pub fn p2_general(eps: f64, t1: f64, t2: f64, b: f64, model: &ModelParams, spec: &SubordinatorSpec) -> Result<f64> {
    check_times(t1, t2)?;
    check_rho(model)?;
    let f = Marginal::new(spec, t1)?;
    let s = Marginal::new(spec, t2)?;
    let (c1, c2) = general_p2_limits(eps, t1, t2, b, model);
    p2_core(&f, &s, c1, c2, &Cell::new(0))
}

fn general_p2_limits(eps: f64, t1: f64, t2: f64, b: f64, m: &ModelParams) -> (f64, f64) {
    let c1 = (b - m.mu * t2) / m.rho;
    let c2 = (b + eps) / m.rho - m.mu * (t1 + t2) / (2.0 * m.rho);
    (c1, c2)
}

fn check_rho(m: &ModelParams) -> Result<()> {
    if m.rho < 0.0 {
        Ok(())
    } else {
        Err(Error::param("rho", format!("the loaded decomposition needs rho < 0, got {}", m.rho)))
    }
}

// ---------------------------------------------------------------------------
// P

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `W + Y` with barriers `a`, `b`.
    Basic,
    /// `mu t + sigma W + rho Z` with the downward barriers `-a`, `-b`.
    General,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(Variant::Basic),
            "general" => Ok(Variant::General),
            other => Err(Error::param("variant", format!("expected basic or general, got `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecompositionInput {
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    /// Only read by [`Variant::General`].
    pub model: ModelParams,
    pub spec: SubordinatorSpec,
    /// The `eps` integral runs over `[-epsilon_window, epsilon_window]`.
    pub epsilon_window: f64,
    /// Both time integrals run over `(0, time_box]`.
    pub time_box: f64,
    /// Panel budget of the outermost integral.
    pub max_panels: usize,
}

impl DecompositionInput {
    pub fn basic(a: f64, b: f64, spec: SubordinatorSpec) -> Self {
        Self {
            variant: Variant::Basic,
            a,
            b,
            model: ModelParams::default(),
            spec,
            epsilon_window: 10.0,
            time_box: 5.0,
            max_panels: 200,
        }
    }

    pub fn general(a: f64, b: f64, model: ModelParams, spec: SubordinatorSpec) -> Self {
        Self { variant: Variant::General, model, ..Self::basic(a, b, spec) }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in [("a", self.a), ("b", self.b), ("eps-window", self.epsilon_window), ("time-box", self.time_box)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(k, format!("must be positive, got {v}")));
            }
        }
        self.spec.validate()?;
        if self.variant == Variant::General {
            self.model.validate()?;
            check_rho(&self.model)?;
        }
        Ok(())
    }

    // (u1, u2) of P1 and (c1, c2) of P2 at one point
    fn limits(&self, eps: f64, t1: f64, t2: f64) -> ([f64; 2], [f64; 2]) {
        match self.variant {
            Variant::Basic => ([-self.a, -self.a + eps], [self.b, self.b + eps]),
            Variant::General => {
                let (u1, u2) = general_p1_limits(eps, t1, t2, self.a, &self.model);
                let (c1, c2) = general_p2_limits(eps, t1, t2, self.b, &self.model);
                ([u1, u2], [c1, c2])
            }
        }
    }

    // eps values where P2 changes regime
    fn eps_kinks(&self, t1: f64, t2: f64) -> [f64; 2] {
        match self.variant {
            Variant::Basic => [0.0, -self.b],
            Variant::General => {
                let mu = self.model.mu;
                [mu * (t1 - t2) / 2.0, mu * (t1 + t2) / 2.0 - self.b]
            }
        }
    }

    // bound on the integral of P1 P2 outside the eps window; depends on the
    // times only through their sum
    fn eps_tail_bound(&self, tt: f64) -> Result<f64> {
        let e = self.epsilon_window;
        let (scale, drift, loading) = match self.variant {
            Variant::Basic => (1.0, 0.0, 1.0),
            Variant::General => (self.model.sigma, self.model.mu * tt / 2.0, -self.model.rho),
        };
        // Brownian side: E[(sd N - c)^+]
        let sd = scale * tt.sqrt();
        let z0 = (self.a + e + drift) / sd;
        let gauss = sd * (INV_SQRT_2PI * (-0.5 * z0 * z0).exp() - z0 * 0.5 * erfc(z0 / std::f64::consts::SQRT_2));
        // subordinator side: loading E[(Z_T - q0)^+]
        let q0 = (self.b + e - drift) / loading;
        let sub = if q0 > 0.0 {
            let z = Marginal::new(&self.spec, tt)?;
            integrate_to_inf(|q| z.survival_open(q), q0, &QuadSettings::new(1e-14, 1e-8))?.value
        } else {
            self.spec.mean() * tt - q0
        };
        Ok(gauss.max(0.0) + loading * sub)
    }
}

/// Quadrature value of the truncated `P`, with error estimates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub value: f64,
    /// Error estimate of the outermost integral.
    pub quadrature_error: f64,
    /// Bound on what the `eps` tails outside the window add over the time box.
    /// The time tails beyond the box are unbounded and not included.
    pub truncation_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_check: Option<McCheck>,
}

/// Monte Carlo integration of the same truncated integrand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

// int over eps of P1 P2 at fixed times
fn eps_integral(input: &DecompositionInput, t1: f64, t2: f64, short: &Cell<usize>) -> Result<f64> {
    let f = Marginal::new(&input.spec, t1)?;
    let s = Marginal::new(&input.spec, t2)?;
    let e = input.epsilon_window;
    let mut pts = vec![-e, e];
    pts.extend(input.eps_kinks(t1, t2).into_iter().filter(|k| k.abs() < e));
    pts.sort_by(f64::total_cmp);
    let err = Cell::new(None);
    let integrand = |eps: f64| {
        let ([u1, u2], [c1, c2]) = input.limits(eps, t1, t2);
        let v = p1_core(u1, u2, t1, t2, short).and_then(|p1| {
            if p1 == 0.0 {
                Ok(0.0)
            } else {
                p2_core(&f, &s, c1, c2, short).map(|p2| p1 * p2)
            }
        });
        v.unwrap_or_else(|x| {
            err.set(Some(x.to_string()));
            0.0
        })
    };
    let r = integrate_breaks(integrand, &pts, &QuadSettings::new(1e-11, 1e-8).with_panels(300));
    if let Some(msg) = err.take() {
        return Err(Error::MarginalUnavailable(msg));
    }
    lenient(r, short)
}

/// `int_0^T int_0^T int_{-E}^{E} P1 P2 deps dt1 dt2` by nested adaptive quadrature.
///
/// Inner integrals that exhaust their panel budget contribute their partial
/// sums (counted in a log line); the outermost one reports
/// [`Error::BudgetExceeded`] with its partial value.
pub fn decomposition_probability(input: &DecompositionInput) -> Result<DecompositionResult> {
    input.validate()?;
    let tb = input.time_box;
    let short = Cell::new(0usize);
    let err = Cell::new(None);
    let failed = Cell::new(false);
    let middle = |t2: f64| {
        let g = |t1: f64| {
            if failed.get() {
                return 0.0;
            }
            eps_integral(input, t1, t2, &short).unwrap_or_else(|e| {
                failed.set(true);
                err.set(Some(e.to_string()));
                0.0
            })
        };
        let r = integrate_breaks(g, &[0.0, tb], &QuadSettings::new(1e-10, 1e-7).with_panels(300));
        lenient(r, &short).unwrap_or(f64::NAN)
    };
    let outer = integrate_breaks(middle, &[0.0, tb], &QuadSettings::new(1e-9, 1e-6).with_panels(input.max_panels));
    if let Some(msg) = err.take() {
        return Err(Error::MarginalUnavailable(msg));
    }
    if short.get() > 0 {
        log::warn!("{} nested integrals stopped at their panel budget", short.get());
    }
    let est = outer?;
    // the (t1, t2) square folded onto t1 + t2 with triangular weight
    let bound = integrate_breaks(
        |tt: f64| input.eps_tail_bound(tt).unwrap_or(f64::INFINITY) * tt.min(2.0 * tb - tt),
        &[0.0, tb, 2.0 * tb],
        &QuadSettings::new(1e-12, 1e-6),
    )
    .map(|e| e.value)
    .unwrap_or(f64::INFINITY);
    Ok(DecompositionResult { value: est.value, quadrature_error: est.error, truncation_bound: bound, mc_check: None })
}

/// Monte Carlo integration of the truncated integrand: uniform `(t1, t2, eps)`
/// in the box, and the two joint events drawn directly from Brownian and
/// subordinator increments instead of the quadrature formulas.
pub fn mc_integration_check(input: &DecompositionInput, samples: usize, seed: u64) -> Result<McCheck> {
    input.validate()?;
    const CHUNK: usize = 4096;
    let (tb, e) = (input.time_box, input.epsilon_window);
    let volume = tb * tb * 2.0 * e;
    let chunks = samples.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0.0;
            for _ in 0..n {
                let t1 = tb * (1.0 - rng.random::<f64>());
                let t2 = tb * (1.0 - rng.random::<f64>());
                let eps = e * (2.0 * rng.random::<f64>() - 1.0);
                let ([u1, u2], [c1, c2]) = input.limits(eps, t1, t2);
                let w: f64 = rng.sample::<f64, _>(StandardNormal) * t1.sqrt();
                let chi: f64 = rng.sample::<f64, _>(StandardNormal) * t2.sqrt();
                let eta = input.spec.sample_increment(t1, &mut rng);
                let z = input.spec.sample_increment(t2, &mut rng);
                let ev1 = w <= u1 && w + chi <= u2;
                let ev2 = z >= c1 && z + eta >= c2;
                if ev1 && ev2 {
                    hits += 1.0;
                }
            }
            (hits, n as f64)
        })
        .collect();
    let (hits, n) = sums.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x.0, acc.1 + x.1));
    let p = hits / n;
    Ok(McCheck { value: volume * p, std_error: volume * (p * (1.0 - p) / n).sqrt(), samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_orthant() {
        // corr sqrt(1/2): 1/4 + asin(sqrt(1/2)) / (2 pi) = 3/8
        let v = p1_basic(0.0, 1.0, 1.0, 0.0).unwrap();
        assert!((v - 0.375).abs() < 1e-10, "{v}");
    }

    #[test]
    fn p1_limits() {
        for &(t, al, a) in &[(1.0, 1.0, 1.0), (0.3, 2.0, 0.5), (4.0, 0.1, 2.0)] {
            let want = 0.5 * erfc(a / (2.0f64 * t).sqrt());
            let far = 12.0 * (t + al).sqrt() + a;
            assert!((p1_basic(far, t, al, a).unwrap() - want).abs() < 1e-6);
            assert!(p1_basic(-far, t, al, a).unwrap() < 1e-6);
            let m = ModelParams { mu: -0.4, sigma: 1.3, ..Default::default() };
            let want = norm_cdf((-a - m.mu * t) / m.sigma / t.sqrt());
            let far = 12.0 * m.sigma * (t + al).sqrt() + a + 2.0;
            assert!((p1_general(-far, t, al, a, &m).unwrap() - want).abs() < 1e-6);
        }
    }

    #[test]
    fn p1_general_collapses_to_basic() {
        let m = ModelParams::default();
        for &eps in &[-1.5, -0.2, 0.0, 0.7, 3.0] {
            let g = p1_general(eps, 0.8, 1.7, 0.6, &m).unwrap();
            let b = p1_basic(-eps, 0.8, 1.7, 0.6).unwrap();
            assert!((g - b).abs() < 1e-13);
        }
    }

    #[test]
    fn p1_monotone_in_a() {
        let mut prev = 1.0;
        for i in 0..20 {
            let v = p1_basic(0.3, 1.0, 0.5, i as f64 * 0.2).unwrap();
            assert!(v <= prev + 1e-14);
            prev = v;
        }
    }

    #[test]
    fn compound_exp_survival_matches_gamma_sum() {
        let (lam, y) = (2.3, 1.7);
        let mut want = 0.0;
        for n in 1..60 {
            let p = (-lam + n as f64 * f64::ln(lam) - ln_gamma(n as f64 + 1.0)).exp();
            want += p * gamma_q(n as f64, y);
        }
        assert!((compound_exp_survival(lam, y) - want).abs() < 1e-14);
        assert!((compound_exp_survival(lam, 0.0) - (1.0 - (-lam).exp())).abs() < 1e-15);
    }

    #[test]
    fn marginals_normalized() {
        let specs = [
            SubordinatorSpec::GammaStationary { nu: 1.5, alpha: 2.0 },
            SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 },
            SubordinatorSpec::IgStationary { delta: 1.0, gamma: 1.0 },
            SubordinatorSpec::IgBdlp { delta: 1.0, gamma: 1.0 },
            SubordinatorSpec::PtsBdlp { beta: 1.0, gamma: 0.5, k: 1.0 },
        ];
        for spec in specs {
            let m = Marginal::new(&spec, 0.8).unwrap();
            for &x in &[0.3, 1.0, 2.5] {
                let tail = crate::quad::integrate_to_inf(|y| m.density(y), x, &QuadSettings::new(1e-12, 1e-9))
                    .unwrap()
                    .value;
                assert!((tail - m.survival_open(x)).abs() < 1e-7, "{spec} {x}: {tail} vs {}", m.survival_open(x));
            }
            let total = m.atom() + m.survival_open(0.0);
            assert!((total - 1.0).abs() < 1e-6 || matches!(m, Marginal::Numeric { .. }));
        }
    }

    #[test]
    fn p2_examples() {
        let spec = SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 };
        assert!((p2_basic(0.0, 1.0, 1.0, 0.0, &spec).unwrap() - 1.0).abs() < 1e-14);
        // eps -> -inf: P(Y_alpha >= b)
        let m = Marginal::new(&spec, 1.3).unwrap();
        let v = p2_basic(-60.0, 0.7, 1.3, 1.1, &spec).unwrap();
        assert!((v - m.survival(1.1)).abs() < 1e-12);
        let model = ModelParams { rho: -1.0, ..Default::default() };
        let v = p2_general(0.0, 1.0, 1.0, 1e-12, &model, &spec).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert!(matches!(
            p2_general(0.0, 1.0, 1.0, 1.0, &ModelParams::default(), &spec),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn p2_rho_scaling() {
        let spec = SubordinatorSpec::GammaStationary { nu: 2.0, alpha: 1.5 };
        for &c in &[0.5, 2.0, 3.7] {
            let m1 = ModelParams { rho: -1.0, ..Default::default() };
            let m2 = ModelParams { rho: -c, ..Default::default() };
            let v1 = p2_general(0.0, 0.9, 1.4, 0.8, &m1, &spec).unwrap();
            let v2 = p2_general(0.0, 0.9, 1.4, 0.8 * c, &m2, &spec).unwrap();
            assert!((v1 - v2).abs() < 1e-9, "{v1} {v2}");
        }
    }

    // direct quadrature of the printed double integral, for a law with no atom
    #[test]
    fn p2_matches_direct_double_integral() {
        let spec = SubordinatorSpec::IgStationary { delta: 1.0, gamma: 1.2 };
        let (t, al, b) = (0.8, 1.1, 0.6);
        let f = Marginal::new(&spec, t).unwrap();
        let s = Marginal::new(&spec, al).unwrap();
        let qs = QuadSettings::new(1e-13, 1e-11).with_panels(4000);
        for &eps in &[-0.5f64, 0.0, 0.4, 1.5] {
            let direct = integrate_breaks(
                |beta: f64| f.density(beta) * s.survival((b + eps - beta).max(b)),
                &[0.0, eps.max(0.0) + 1e-300, 60.0],
                &qs,
            )
            .unwrap()
            .value;
            let v = p2_basic(eps, t, al, b, &spec).unwrap();
            assert!((v - direct).abs() < 1e-9, "{eps}: {v} vs {direct}");
        }
    }

    #[test]
    fn far_barriers_give_tiny_p() {
        let input = DecompositionInput::basic(10.0, 10.0, SubordinatorSpec::GammaBdlp { nu: 1.0, alpha: 1.0 });
        let r = decomposition_probability(&input).unwrap();
        assert!(r.value >= 0.0 && r.value < 1e-6, "{r:?}");
    }
}
