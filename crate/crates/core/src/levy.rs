//! Catalog of the six subordinator laws: Lévy densities, integrated tails,
//! Laplace exponents, cumulants and exact increment samplers.
//!
//! Each stationary law `u` of an OU variance process comes with its
//! background driving process, whose Lévy density is `w = -u - x u'`.
//!
//! PTS laws are parameterized by `(beta, gamma, k)` with
//! `u(x) = beta k^{-2 gamma} gamma / (Gamma(gamma) Gamma(1-gamma)) x^{-gamma-1} e^{-k^2 x / 2}`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::Exponent;
use crate::real::Real;
use crate::specfun::{erfc, exp_integral_e1, gamma, gamma_upper};

/// A subordinator law and its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case")]
pub enum SubordinatorSpec<T = f64> {
    GammaStationary { nu: T, alpha: T },
    GammaBdlp { nu: T, alpha: T },
    IgStationary { delta: T, gamma: T },
    IgBdlp { delta: T, gamma: T },
    PtsStationary { beta: T, gamma: T, k: T },
    PtsBdlp { beta: T, gamma: T, k: T },
}

use SubordinatorSpec::*;

fn positive<T: Real>(key: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(key, format!("must be positive and finite, got {v}")))
    }
}

impl<T: Real> SubordinatorSpec<T> {
    /// Checks parameter ranges. PTS laws need `k > 0`: the density carries a
    /// `k^{-2 gamma}` prefactor, and the exponent and samplers need the tilt.
    pub fn validate(&self) -> Result<()> {
        match *self {
            GammaStationary { nu, alpha } | GammaBdlp { nu, alpha } => {
                positive("nu", nu)?;
                positive("alpha", alpha)
            }
            IgStationary { delta, gamma } | IgBdlp { delta, gamma } => {
                positive("delta", delta)?;
                positive("gamma", gamma)
            }
            PtsStationary { beta, gamma, k } | PtsBdlp { beta, gamma, k } => {
                positive("beta", beta)?;
                if !(gamma > T::zero() && gamma < T::one()) {
                    return Err(Error::param("gamma", format!("must lie in (0, 1), got {gamma}")));
                }
                positive("k", k)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GammaStationary { .. } => "gamma-stat",
            GammaBdlp { .. } => "gamma-bdlp",
            IgStationary { .. } => "ig-stat",
            IgBdlp { .. } => "ig-bdlp",
            PtsStationary { .. } => "pts-stat",
            PtsBdlp { .. } => "pts-bdlp",
        }
    }

    pub fn is_bdlp(&self) -> bool {
        matches!(self, GammaBdlp { .. } | IgBdlp { .. } | PtsBdlp { .. })
    }

    /// The stationary law whose driving process this is (identity on
    /// stationary laws).
    pub fn stationary(&self) -> Self {
        match *self {
            GammaBdlp { nu, alpha } => GammaStationary { nu, alpha },
            IgBdlp { delta, gamma } => IgStationary { delta, gamma },
            PtsBdlp { beta, gamma, k } => PtsStationary { beta, gamma, k },
            s => s,
        }
    }

    /// The driving process of a stationary law (identity on BDLP laws).
    pub fn bdlp(&self) -> Self {
        match *self {
            GammaStationary { nu, alpha } => GammaBdlp { nu, alpha },
            IgStationary { delta, gamma } => IgBdlp { delta, gamma },
            PtsStationary { beta, gamma, k } => PtsBdlp { beta, gamma, k },
            s => s,
        }
    }

    /// Exponential tilt: `E[e^{theta Z}]` is finite exactly for `theta` below it.
    pub fn tilt(&self) -> T {
        match *self {
            GammaStationary { alpha, .. } | GammaBdlp { alpha, .. } => alpha,
            IgStationary { gamma, .. } | IgBdlp { gamma, .. } => gamma * gamma * T::c(0.5),
            PtsStationary { k, .. } | PtsBdlp { k, .. } => k * k * T::c(0.5),
        }
    }

    // PTS constants: density prefactor, tail constant a = beta gamma / (2^gamma G(gamma) G(1-gamma)),
    // exponent constant A = beta 2^-gamma / G(gamma), tilt c = k^2/2.
    pub(crate) fn pts_constants(beta: T, g: T, k: T) -> PtsConstants<T> {
        let c = k * k * T::c(0.5);
        let gg = gamma(g) * gamma(T::one() - g);
        let two_g = T::c(2.0).powf(g);
        PtsConstants {
            density: beta * k.powf(-(g + g)) * g / gg,
            tail: beta * g / (two_g * gg),
            exponent: beta / (two_g * gamma(g)),
            c,
        }
    }

    /// Lévy density at `x > 0`.
    pub fn levy_density(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(Error::domain("levy_density", format!("x must be positive, got {x}")));
        }
        let half = T::c(0.5);
        let inv_sqrt_2pi = (T::c(2.0) * T::PI()).sqrt().recip();
        Ok(match *self {
            GammaStationary { nu, alpha } => nu / x * (-alpha * x).exp(),
            GammaBdlp { nu, alpha } => nu * alpha * (-alpha * x).exp(),
            IgStationary { delta, gamma } => inv_sqrt_2pi * delta * x.powf(T::c(-1.5)) * (-gamma * gamma * x * half).exp(),
            IgBdlp { delta, gamma } => {
                let g2 = gamma * gamma;
                half * inv_sqrt_2pi * delta * x.powf(T::c(-1.5)) * (T::one() + g2 * x) * (-g2 * x * half).exp()
            }
            PtsStationary { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                pc.density * x.powf(-g - T::one()) * (-pc.c * x).exp()
            }
            PtsBdlp { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                pc.density * x.powf(-g - T::one()) * (-pc.c * x).exp() * (g + pc.c * x)
            }
        })
    }

    /// Stationary Lévy density and its derivative, `(u(x), u'(x))`.
    pub fn stationary_density_and_derivative(&self, x: T) -> Result<(T, T)> {
        let s = self.stationary();
        let u = s.levy_density(x)?;
        let log_deriv = match s {
            GammaStationary { alpha, .. } => -x.recip() - alpha,
            IgStationary { gamma, .. } => T::c(-1.5) / x - gamma * gamma * T::c(0.5),
            PtsStationary { gamma: g, k, .. } => -(g + T::one()) / x - k * k * T::c(0.5),
            _ => unreachable!("stationary() returns a stationary law"),
        };
        Ok((u, u * log_deriv))
    }

    /// `pi(t, inf) = int_t^inf w(x) dx`.
    pub fn integrated_tail(&self, t: T) -> Result<T> {
        if !(t > T::zero()) {
            return Err(Error::domain("integrated_tail", format!("t must be positive, got {t}")));
        }
        let half = T::c(0.5);
        let sqrt_pi = T::PI().sqrt();
        Ok(match *self {
            GammaStationary { nu, alpha } => nu * exp_integral_e1(alpha * t)?,
            GammaBdlp { nu, alpha } => nu * (-alpha * t).exp(),
            IgStationary { delta, gamma } => {
                delta * gamma / (T::c(2.0) * sqrt_pi) * gamma_upper(-half, gamma * gamma * t * half)?
            }
            IgBdlp { delta, gamma } => {
                delta * gamma / (T::c(4.0) * sqrt_pi) * gamma_upper(-half, gamma * gamma * t * half)?
                    + delta * gamma * half * erfc(gamma * (t * half).sqrt())
            }
            PtsStationary { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                pc.tail * gamma_upper(-g, pc.c * t)?
            }
            PtsBdlp { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                pc.tail * (g * gamma_upper(-g, pc.c * t)? + gamma_upper(T::one() - g, pc.c * t)?)
            }
        })
    }

    /// Laplace exponent at complex `s`, `Re s > -tilt`.
    pub fn psi(&self, s: Complex<T>) -> Complex<T> {
        let one = Complex::new(T::one(), T::zero());
        match *self {
            GammaStationary { nu, alpha } => (one + s / alpha).ln() * nu,
            GammaBdlp { nu, alpha } => s * nu / (s + alpha),
            IgStationary { delta, gamma } => ((s * T::c(2.0) + gamma * gamma).sqrt() - gamma) * delta,
            IgBdlp { delta, gamma } => s * delta / (s * T::c(2.0) + gamma * gamma).sqrt(),
            PtsStationary { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                ((one + s / pc.c).powf(g) - one) * pc.exponent
            }
            PtsBdlp { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                let u = s / pc.c;
                u * (one + u).powf(g - T::one()) * (pc.exponent * g)
            }
        }
    }

    /// Real-argument Laplace exponent.
    pub fn psi_real(&self, s: T) -> T {
        self.psi(Complex::new(s, T::zero())).re
    }

    /// `E[Z_1] = psi'(0)`, by exact differentiation of the catalog exponent.
    pub fn mean(&self) -> T {
        match *self {
            GammaStationary { nu, alpha } | GammaBdlp { nu, alpha } => nu / alpha,
            IgStationary { delta, gamma } | IgBdlp { delta, gamma } => delta / gamma,
            PtsStationary { beta, gamma: g, k } | PtsBdlp { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                pc.exponent * g / pc.c
            }
        }
    }

    /// `Var[Z_1] = -psi''(0)`. A driving process has twice the variance of
    /// its stationary law.
    pub fn variance(&self) -> T {
        let v = match self.stationary() {
            GammaStationary { nu, alpha } => nu / (alpha * alpha),
            IgStationary { delta, gamma } => delta / (gamma * gamma * gamma),
            PtsStationary { beta, gamma: g, k } => {
                let pc = Self::pts_constants(beta, g, k);
                pc.exponent * g * (T::one() - g) / (pc.c * pc.c)
            }
            _ => unreachable!("stationary() returns a stationary law"),
        };
        if self.is_bdlp() {
            v + v
        } else {
            v
        }
    }

    /// `kappa(theta) = log E[e^{theta Z_1}] = -psi(-theta)` for `theta < tilt`.
    pub fn cumulant_kappa(&self, theta: T) -> Result<T> {
        let tilt = self.tilt();
        if !(theta < tilt) {
            return Err(Error::DivergentCumulant { theta: theta.to_f64_lossy(), tilt: tilt.to_f64_lossy() });
        }
        Ok(-self.psi_real(-theta))
    }

    pub fn laplace_exponent(&self) -> LaplaceExponent<T> {
        LaplaceExponent { spec: *self }
    }
}

pub(crate) struct PtsConstants<T> {
    pub density: T,
    pub tail: T,
    pub exponent: T,
    pub c: T,
}

/// `w(x) = -u(x) - x u'(x)` from a stationary density given with its derivative.
pub fn bdlp_from_stationary<T: Real>(u: impl Fn(T) -> (T, T)) -> impl Fn(T) -> T {
    move |x| {
        let (v, dv) = u(x);
        -v - x * dv
    }
}

/// The Laplace exponent of a catalog law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceExponent<T = f64> {
    pub spec: SubordinatorSpec<T>,
}

impl<T: Real> LaplaceExponent<T> {
    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

impl<T: Real> Exponent<T> for LaplaceExponent<T> {
    fn psi(&self, s: Complex<T>) -> Complex<T> {
        self.spec.psi(s)
    }

    fn abscissa(&self) -> T {
        -self.spec.tilt()
    }
}

// ---------------------------------------------------------------------------
// parsing

impl FromStr for SubordinatorSpec<f64> {
    type Err = Error;

    /// `gamma-bdlp:nu=1,alpha=1`, `ig-stat:delta=1,gamma=1`,
    /// `pts-bdlp:beta=1,gamma=0.5,k=1`, ...
    fn from_str(s: &str) -> Result<Self> {
        let (law, rest) = s.split_once(':').unwrap_or((s, ""));
        let law = law.trim();
        let keys: &[&str] = match law {
            "gamma-stat" | "gamma-bdlp" => &["nu", "alpha"],
            "ig-stat" | "ig-bdlp" => &["delta", "gamma"],
            "pts-stat" | "pts-bdlp" => &["beta", "gamma", "k"],
            other => return Err(Error::param("law", format!("unknown subordinator law `{other}`"))),
        };
        let mut vals = vec![None; keys.len()];
        for item in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::param(item, "expected key=value"))?;
            let k = k.trim();
            let idx = keys
                .iter()
                .position(|want| *want == k)
                .ok_or_else(|| Error::param(k, format!("not a parameter of `{law}`")))?;
            if vals[idx].is_some() {
                return Err(Error::param(k, "given twice"));
            }
            let x: f64 = v.trim().parse().map_err(|_| Error::param(k, format!("`{}` is not a number", v.trim())))?;
            vals[idx] = Some(x);
        }
        let get = |i: usize| vals[i].ok_or_else(|| Error::param(keys[i], "missing"));
        let spec = match law {
            "gamma-stat" => GammaStationary { nu: get(0)?, alpha: get(1)? },
            "gamma-bdlp" => GammaBdlp { nu: get(0)?, alpha: get(1)? },
            "ig-stat" => IgStationary { delta: get(0)?, gamma: get(1)? },
            "ig-bdlp" => IgBdlp { delta: get(0)?, gamma: get(1)? },
            "pts-stat" => PtsStationary { beta: get(0)?, gamma: get(1)?, k: get(2)? },
            _ => PtsBdlp { beta: get(0)?, gamma: get(1)?, k: get(2)? },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl<T: Real> fmt::Display for SubordinatorSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GammaStationary { nu, alpha } | GammaBdlp { nu, alpha } => {
                write!(f, "{}:nu={nu},alpha={alpha}", self.name())
            }
            IgStationary { delta, gamma } | IgBdlp { delta, gamma } => {
                write!(f, "{}:delta={delta},gamma={gamma}", self.name())
            }
            PtsStationary { beta, gamma, k } | PtsBdlp { beta, gamma, k } => {
                write!(f, "{}:beta={beta},gamma={gamma},k={k}", self.name())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// log-return model

/// Parameters of `dX = mu dt + sigma dW + rho dZ_{lambda t}` with OU variance
/// rate `lambda` and risk-free rate `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub sigma: f64,
    pub rho: f64,
    pub lambda: f64,
    pub r: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { mu: 0.0, sigma: 1.0, rho: 0.0, lambda: 1.0, r: 0.0 }
    }
}

impl ModelParams {
    /// `sigma > 0`, `lambda > 0`. A non-negative `rho` is accepted but logged,
    /// since the leverage reading needs `rho < 0`.
    pub fn validate(&self) -> Result<()> {
        positive("sigma", self.sigma)?;
        positive("lambda", self.lambda)?;
        for (key, v) in [("mu", self.mu), ("rho", self.rho), ("r", self.r)] {
            if !v.is_finite() {
                return Err(Error::param(key, format!("must be finite, got {v}")));
            }
        }
        if self.rho > 0.0 {
            log::warn!("rho = {} is positive; jumps push returns up, against the leverage effect", self.rho);
        }
        Ok(())
    }

    /// Risk-neutral drift `r - lambda kappa(rho) - sigma^2 / 2`.
    pub fn risk_neutral_drift(&self, spec: &SubordinatorSpec) -> Result<f64> {
        Ok(self.r - self.lambda * spec.cumulant_kappa(self.rho)? - 0.5 * self.sigma * self.sigma)
    }

    /// Same parameters with `mu` replaced by the risk-neutral drift.
    pub fn with_risk_neutral_drift(mut self, spec: &SubordinatorSpec) -> Result<Self> {
        self.mu = self.risk_neutral_drift(spec)?;
        Ok(self)
    }
}

impl FromStr for ModelParams {
    type Err = Error;

    /// `mu=0,sigma=1,rho=-1,lambda=1,r=0`; omitted keys keep their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut m = ModelParams::default();
        for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::param(item, "expected key=value"))?;
            let k = k.trim();
            let x: f64 = v.trim().parse().map_err(|_| Error::param(k, format!("`{}` is not a number", v.trim())))?;
            match k {
                "mu" => m.mu = x,
                "sigma" => m.sigma = x,
                "rho" => m.rho = x,
                "lambda" => m.lambda = x,
                "r" => m.r = x,
                other => return Err(Error::param(other, "not a model parameter")),
            }
        }
        m.validate()?;
        Ok(m)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mu={},sigma={},rho={},lambda={},r={}", self.mu, self.sigma, self.rho, self.lambda, self.r)
    }
}

// ---------------------------------------------------------------------------
// sampling

/// One increment split into a part without isolated jumps (accrued
/// continuously over the step) and compound-Poisson jumps at exact epochs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Increment {
    pub diffuse: f64,
    /// `(offset within the step, size)`, sorted by offset.
    pub jumps: Vec<(f64, f64)>,
}

impl Increment {
    pub fn total(&self) -> f64 {
        self.diffuse + self.jumps.iter().map(|j| j.1).sum::<f64>()
    }
}

/// Inverse Gaussian draw with mean `mu` and shape `lambda`.
///
/// Uses the Michael–Schucany–Haas transformation with the smaller root taken
/// as `mu^2 / x_large`, which stays accurate when `mu / lambda` is huge (tiny
/// time steps make the law extremely skewed).
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> f64 {
    let n: f64 = StandardNormal.sample(rng);
    let y = n * n;
    let my = mu * y;
    let big = mu + mu * my / (2.0 * lambda) + mu / (2.0 * lambda) * (4.0 * mu * lambda * y + my * my).sqrt();
    let small = mu * mu / big;
    let u: f64 = rng.random();
    if u <= mu / (mu + small) {
        small
    } else {
        big
    }
}

/// One-sided stable draw with `E[e^{-s S}] = e^{-s^alpha}`, `0 < alpha < 1`
/// (Kanter's representation; the Lévy law directly for `alpha = 1/2`).
pub fn sample_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha == 0.5 {
        // Lévy law: 1 / (2 N^2)
        let n: f64 = StandardNormal.sample(rng);
        return 0.5 / (n * n);
    }
    let u: f64 = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break v * std::f64::consts::PI;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let a = ((alpha * u).sin().powf(alpha) * ((1.0 - alpha) * u).sin().powf(1.0 - alpha) / u.sin())
        .powf(1.0 / (1.0 - alpha));
    (a / e).powf((1.0 - alpha) / alpha)
}

/// Exponentially tilted stable draw: proposals `s_scale * S` with `S` standard
/// one-sided stable of index `g`, accepted with probability `e^{-c x}`.
/// The expected number of proposals is `exp(s_scale^g * c^g)`; callers keep
/// that at most `e`.
fn sample_tilted_stable<R: Rng + ?Sized>(g: f64, s_scale: f64, c: f64, rng: &mut R) -> f64 {
    loop {
        let s = s_scale * sample_positive_stable(g, rng);
        let u: f64 = rng.random();
        if u <= (-c * s).exp() {
            return s;
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct TiltedStable {
    g: f64,
    pieces: usize,
    s_scale: f64,
    c: f64,
}

impl TiltedStable {
    fn new(beta: f64, g: f64, k: f64, dt: f64) -> Self {
        let pc = SubordinatorSpec::<f64>::pts_constants(beta, g, k);
        // untilted exponent dt * A c^{-g} s^g; acceptance exp(-dt A) per piece
        let load = dt * pc.exponent;
        let pieces = load.ceil().max(1.0);
        let scale = load / pieces * pc.c.powf(-g);
        TiltedStable { g, pieces: pieces as usize, s_scale: scale.powf(1.0 / g), c: pc.c }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut total = 0.0;
        for _ in 0..self.pieces {
            total += sample_tilted_stable(self.g, self.s_scale, self.c, rng);
        }
        total
    }
}

#[derive(Clone, Copy, Debug)]
enum Diffuse {
    None,
    Gamma(Gamma<f64>),
    InverseGaussian { mu: f64, lambda: f64 },
    Pts(TiltedStable),
}

#[derive(Clone, Copy, Debug)]
enum JumpLaw {
    Exp { alpha: f64 },
    Gamma(Gamma<f64>),
}

/// Exact sampler of `Z_{t+dt} - Z_t` for one spec and a fixed step, with the
/// law constants computed once.
#[derive(Clone, Copy, Debug)]
pub struct IncrementSampler {
    dt: f64,
    diffuse: Diffuse,
    jumps: Option<(Poisson<f64>, JumpLaw)>,
}

impl IncrementSampler {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One draw with the compound-Poisson jumps kept separate and
    /// time-stamped, sorted by offset.
    pub fn sample_detailed<R: Rng + ?Sized>(&self, rng: &mut R) -> Increment {
        let mut inc = Increment::default();
        inc.diffuse = match self.diffuse {
            Diffuse::None => 0.0,
            Diffuse::Gamma(d) => d.sample(rng),
            Diffuse::InverseGaussian { mu, lambda } => sample_inverse_gaussian(mu, lambda, rng),
            Diffuse::Pts(ts) => ts.sample(rng),
        };
        if let Some((count, law)) = &self.jumps {
            let n = count.sample(rng) as usize;
            for _ in 0..n {
                let at: f64 = rng.random::<f64>() * self.dt;
                let size = match law {
                    JumpLaw::Exp { alpha } => {
                        let e: f64 = Exp1.sample(rng);
                        e / alpha
                    }
                    JumpLaw::Gamma(d) => d.sample(rng),
                };
                inc.jumps.push((at, size));
            }
            inc.jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        inc
    }

    /// One draw of the total increment.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_detailed(rng).total()
    }
}

impl SubordinatorSpec<f64> {
    /// Rate and jump law of the compound-Poisson component, if any.
    pub fn finite_activity_rate(&self) -> f64 {
        match *self {
            GammaBdlp { nu, .. } => nu,
            IgBdlp { delta, gamma } => delta * gamma * 0.5,
            PtsBdlp { beta, gamma: g, k } => Self::pts_constants(beta, g, k).tail * gamma(1.0 - g),
            _ => 0.0,
        }
    }

    /// Increment sampler for step `dt`.
    ///
    /// Driving processes split into a stationary-type infinite-activity part
    /// plus a finite-activity part: IG BDLP = IG(delta/2) + CP(rate delta
    /// gamma/2, Gamma(1/2, gamma^2/2) jumps); PTS BDLP = PTS(gamma beta) +
    /// CP(rate a Gamma(1-gamma), Gamma(1-gamma, k^2/2) jumps).
    pub fn sampler(&self, dt: f64) -> IncrementSampler {
        let none = IncrementSampler { dt, diffuse: Diffuse::None, jumps: None };
        if !(dt > 0.0) {
            return none;
        }
        let cp = |law: JumpLaw| {
            let mean = self.finite_activity_rate() * dt;
            Poisson::new(mean).ok().map(|p| (p, law))
        };
        match *self {
            GammaStationary { nu, alpha } => IncrementSampler {
                diffuse: Gamma::new(nu * dt, 1.0 / alpha).map_or(Diffuse::None, Diffuse::Gamma),
                ..none
            },
            GammaBdlp { alpha, .. } => IncrementSampler { jumps: cp(JumpLaw::Exp { alpha }), ..none },
            IgStationary { delta, gamma } => {
                let d = delta * dt;
                IncrementSampler { diffuse: Diffuse::InverseGaussian { mu: d / gamma, lambda: d * d }, ..none }
            }
            IgBdlp { delta, gamma } => {
                let d = 0.5 * delta * dt;
                let jump = Gamma::new(0.5, 2.0 / (gamma * gamma)).expect("valid gamma law");
                IncrementSampler {
                    dt,
                    diffuse: Diffuse::InverseGaussian { mu: d / gamma, lambda: d * d },
                    jumps: cp(JumpLaw::Gamma(jump)),
                }
            }
            PtsStationary { beta, gamma, k } => {
                IncrementSampler { diffuse: Diffuse::Pts(TiltedStable::new(beta, gamma, k, dt)), ..none }
            }
            PtsBdlp { beta, gamma: g, k } => {
                let jump = Gamma::new(1.0 - g, 2.0 / (k * k)).expect("valid gamma law");
                IncrementSampler {
                    dt,
                    diffuse: Diffuse::Pts(TiltedStable::new(g * beta, g, k, dt)),
                    jumps: cp(JumpLaw::Gamma(jump)),
                }
            }
        }
    }

    /// Exact draw of `Z_{t+dt} - Z_t` with the jumps kept separate. Loops
    /// with a fixed step should build a [`sampler`](Self::sampler) once.
    pub fn sample_increment_detailed<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> Increment {
        self.sampler(dt).sample_detailed(rng)
    }

    /// Exact draw of `Z_{t+dt} - Z_t`.
    pub fn sample_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        self.sampler(dt).sample(rng)
    }
}
