//! Laplace transforms: numerical forward transform, Gaver–Stehfest and
//! fixed-Talbot inversion, and the transforms that link a subordinator's
//! Laplace exponent to its first-exit law.
//!
//! Both inverters first shift the transform so that its singularities sit
//! left of the imaginary axis: `f(t) = e^{s0 t} L^-1[F(s + s0)](t)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::curve::{DensityCurve, Grid};
use crate::error::{Error, Result};
use crate::quad::{integrate, Estimate, QuadSettings};
use crate::real::{KahanSum, Real};
use crate::specfun::gamma;

type Evaluator<T> = dyn Fn(Complex<T>) -> Complex<T> + Send + Sync;

/// A transform `F(s)`, analytic for `Re s > abscissa`.
#[derive(Clone)]
pub struct TransformFn<T> {
    evaluator: Arc<Evaluator<T>>,
    abscissa: T,
}

impl<T: Real> fmt::Debug for TransformFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformFn").field("abscissa", &self.abscissa).finish_non_exhaustive()
    }
}

impl<T: Real> TransformFn<T> {
    /// Wraps `f` after probing it at a few points right of `abscissa`.
    pub fn new(abscissa: T, f: impl Fn(Complex<T>) -> Complex<T> + Send + Sync + 'static) -> Result<Self> {
        if !abscissa.is_finite() {
            return Err(Error::InvalidTransform("abscissa must be finite".into()));
        }
        let base = abscissa + T::one();
        for (re, im) in [(base, T::zero()), (base, T::one()), (base + T::c(9.0), T::c(-3.0))] {
            let v = f(Complex::new(re, im));
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::InvalidTransform(format!("F({re} + {im}i) is not finite")));
            }
        }
        Ok(Self { evaluator: Arc::new(f), abscissa })
    }

    pub fn abscissa(&self) -> T {
        self.abscissa
    }

    #[inline]
    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        (self.evaluator)(s)
    }
}

/// Inversion algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Method {
    GaverStehfest,
    Talbot,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gs" | "gaver-stehfest" => Ok(Method::GaverStehfest),
            "talbot" => Ok(Method::Talbot),
            other => Err(Error::InvalidSettings(format!("unknown inversion method `{other}`"))),
        }
    }
}

impl Method {
    pub fn default_order(self) -> usize {
        match self {
            Method::GaverStehfest => 14,
            Method::Talbot => 32,
        }
    }

    fn check_order(self, order: usize) -> Result<()> {
        let ok = match self {
            Method::GaverStehfest => (8..=18).contains(&order) && order % 2 == 0,
            Method::Talbot => (16..=64).contains(&order),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSettings(format!("order {order} outside the admissible range for {self:?}")))
        }
    }
}

/// Method, order and evaluation grid for [`invert`].
#[derive(Clone, Debug)]
pub struct InversionSettings<T> {
    pub method: Method,
    pub order: usize,
    pub grid: Grid<T>,
}

impl<T: Real> InversionSettings<T> {
    pub fn new(method: Method, order: usize, grid: Grid<T>) -> Result<Self> {
        method.check_order(order)?;
        if !(grid.start > T::zero()) {
            return Err(Error::InvalidSettings("inversion grid must be strictly positive".into()));
        }
        Ok(Self { method, order, grid })
    }

    pub fn talbot(grid: Grid<T>) -> Result<Self> {
        Self::new(Method::Talbot, 32, grid)
    }
}

/// Inverts `f` at every grid point (in parallel; each point is independent).
pub fn invert<T: Real>(f: &TransformFn<T>, settings: &InversionSettings<T>) -> Result<DensityCurve<T>> {
    settings.method.check_order(settings.order)?;
    let values: Result<Vec<T>> = (0..settings.grid.count)
        .into_par_iter()
        .map(|i| invert_at(f, settings.method, settings.order, settings.grid.at(i)))
        .collect();
    DensityCurve::new(settings.grid, values?)
}

/// Inverse transform at a single `t > 0`.
pub fn invert_at<T: Real>(f: &TransformFn<T>, method: Method, order: usize, t: T) -> Result<T> {
    method.check_order(order)?;
    if !(t > T::zero()) {
        return Err(Error::InvalidSettings(format!("inversion point must be positive, got {t}")));
    }
    match method {
        Method::GaverStehfest => gaver_stehfest(f, order, t),
        Method::Talbot => Ok(talbot(f, order, t)),
    }
}

fn stehfest_weights(n: usize) -> Vec<f64> {
    let half = n / 2;
    let fact = |k: usize| (1..=k).fold(1.0f64, |acc, j| acc * j as f64);
    (1..=n)
        .map(|k| {
            let mut v = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                v += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half) % 2 == 1 {
                -v
            } else {
                v
            }
        })
        .collect()
}

fn gaver_stehfest<T: Real>(f: &TransformFn<T>, n: usize, t: T) -> Result<T> {
    let shift = f.abscissa();
    let ln2_t = T::LN_2() / t;
    let mut acc = KahanSum::new();
    let mut magnitude = T::zero();
    for (k, w) in stehfest_weights(n).into_iter().enumerate() {
        let s = ln2_t * T::from_usize_lossy(k + 1) + shift;
        let term = T::c(w) * f.eval(Complex::new(s, T::zero())).re;
        acc.add(term);
        magnitude = magnitude + term.abs();
    }
    let sum = acc.value();
    if magnitude == T::zero() {
        return Ok(T::zero());
    }
    // digits that survive the alternating sum
    let ratio = magnitude / sum.abs();
    if !sum.is_finite() || !(ratio * T::epsilon() < T::c(0.1)) {
        return Err(Error::NumericalBlowup { t: t.to_f64_lossy(), ratio: ratio.to_f64_lossy() });
    }
    Ok((shift * t).exp() * ln2_t * sum)
}

// Weideman's optimized fixed contour
// z(theta) = (N/t)(-0.6122 + 0.5017 theta cot(0.6407 theta) + 0.2645 i theta).
const TALBOT_SIGMA: f64 = -0.6122;
const TALBOT_MU: f64 = 0.5017;
const TALBOT_ALPHA: f64 = 0.6407;
const TALBOT_NU: f64 = 0.2645;

fn talbot<T: Real>(f: &TransformFn<T>, n: usize, t: T) -> T {
    let shift = f.abscissa() + t.recip();
    let nn = T::from_usize_lossy(n);
    let scale = nn / t;
    let (sigma, mu, alpha, nu) = (T::c(TALBOT_SIGMA), T::c(TALBOT_MU), T::c(TALBOT_ALPHA), T::c(TALBOT_NU));
    let node = |theta: T| -> Complex<T> {
        let (z, dz) = if theta == T::zero() {
            (Complex::new(scale * (sigma + mu / alpha), T::zero()), Complex::new(T::zero(), scale * nu))
        } else {
            let at = alpha * theta;
            let cot = at.cos() / at.sin();
            let z = Complex::new(scale * (sigma + mu * theta * cot), scale * nu * theta);
            let dre = mu * (cot - at / (at.sin() * at.sin()));
            (z, Complex::new(scale * dre, scale * nu))
        };
        (z * t).exp() * f.eval(z + shift) * dz
    };
    let mut acc = KahanSum::new();
    let step = T::c(2.0) * T::PI() / nn;
    // midpoint nodes theta_k = -pi + (k + 1/2) step are symmetric about zero;
    // for odd n one of them is theta = 0
    let offset = if n % 2 == 0 { T::c(0.5) } else { T::one() };
    for k in 0..n / 2 {
        let theta = (T::from_usize_lossy(k) + offset) * step;
        acc.add(T::c(2.0) * node(theta).im);
    }
    if n % 2 == 1 {
        acc.add(node(T::zero()).im);
    }
    (shift * t).exp() * acc.value() / nn
}

/// Growth bound `|f(t)| <= constant * exp(rate * t)` for all `t >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound<T> {
    pub constant: T,
    pub rate: T,
}

/// Numerical transform `int_0^inf f(t) e^{-st} dt` with its error estimate.
///
/// With a tail bound, the integral is cut where the bound falls below the
/// requested tolerance and the bound is added to the error. Without one, `f`
/// is probed on a geometric window; if `|f e^{-st}|` does not decay there the
/// transform is refused.
pub fn forward<T: Real>(
    f: impl Fn(T) -> T,
    s: Complex<T>,
    tail: Option<TailBound<T>>,
    settings: &QuadSettings<T>,
) -> Result<Estimate<Complex<T>, T>> {
    let sigma = s.re;
    let target = settings.abs_tol.max(T::c(1e-300));
    let (cut, tail_err) = match tail {
        Some(b) => {
            let decay = sigma - b.rate;
            if !(decay > T::zero()) {
                return Err(Error::TailUnbounded(format!("Re s = {sigma} does not exceed growth rate {}", b.rate)));
            }
            let c = b.constant.abs().max(T::min_positive_value());
            let cut = ((c / (decay * target)).ln() / decay).max(T::one() / decay);
            (cut, c * (-decay * cut).exp() / decay)
        }
        None => {
            if !(sigma > T::zero()) {
                return Err(Error::TailUnbounded("no tail bound and Re s <= 0".into()));
            }
            let mut prev = T::infinity();
            let mut t = T::c(4.0) / sigma;
            let mut last = T::zero();
            for _ in 0..8 {
                let v = f(t).abs() * (-sigma * t).exp();
                if !(v <= prev) {
                    return Err(Error::TailUnbounded(format!("|f(t) e^(-st)| grows near t = {t}")));
                }
                prev = v;
                last = t;
                t = t + t;
            }
            // the last probe must have decayed below the tolerance
            if prev * last > target {
                return Err(Error::TailUnbounded(format!("|f e^(-st)| = {prev} at t = {last} is above tolerance")));
            }
            (last, prev * last)
        }
    };
    // panels of a few decay lengths keep the oscillating factor resolved
    let panel = (T::c(4.0) / sigma.max(T::c(1e-3))).min(cut);
    let n_panels = (cut / panel).ceil().to_usize().unwrap_or(1).clamp(1, 400);
    let mut pts = Vec::with_capacity(n_panels + 1);
    for i in 0..=n_panels {
        pts.push(cut * T::from_usize_lossy(i) / T::from_usize_lossy(n_panels));
    }
    let re = crate::quad::integrate_breaks(|t| f(t) * (-s.re * t).exp() * (s.im * t).cos(), &pts, settings)?;
    let im = crate::quad::integrate_breaks(|t| -f(t) * (-s.re * t).exp() * (s.im * t).sin(), &pts, settings)?;
    Ok(Estimate {
        value: Complex::new(re.value, im.value),
        error: re.error + im.error + tail_err,
        evals: re.evals + im.evals,
    })
}

/// Laplace exponent of a subordinator: `psi(s) = -ln E[e^{-s Z_1}]`.
pub trait Exponent<T: Real>: Send + Sync {
    fn psi(&self, s: Complex<T>) -> Complex<T>;
    /// Real part left of which `psi` may be singular (minus the exponential tilt).
    fn abscissa(&self) -> T;
}

/// An exponent given by a closure; handy for degenerate drifts in tests.
#[derive(Clone)]
pub struct FnExponent<T> {
    f: Arc<Evaluator<T>>,
    abscissa: T,
}

impl<T: Real> FnExponent<T> {
    pub fn new(abscissa: T, f: impl Fn(Complex<T>) -> Complex<T> + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), abscissa }
    }
}

impl<T: Real> Exponent<T> for FnExponent<T> {
    fn psi(&self, s: Complex<T>) -> Complex<T> {
        (self.f)(s)
    }

    fn abscissa(&self) -> T {
        self.abscissa
    }
}

/// Transform in the level `t` of the exit density `h(x, t)` at elapsed time `x`:
/// `psi(s) e^{-x psi(s)} / s`.
pub fn exit_density_transform<T: Real, E>(psi: Arc<E>, x: T) -> Result<TransformFn<T>>
where
    E: Exponent<T> + ?Sized + 'static,
{
    TransformFn::new(T::zero(), move |s| {
        let p = psi.psi(s);
        p * (-p * x).exp() / s
    })
}

/// Transform in the level `t` of `P(T_t <= x) = P(Z_x >= t)`:
/// `(1 - e^{-x psi(s)}) / s`.
pub fn exit_cdf_transform<T: Real, E>(psi: Arc<E>, x: T) -> Result<TransformFn<T>>
where
    E: Exponent<T> + ?Sized + 'static,
{
    TransformFn::new(T::zero(), move |s| {
        let p = psi.psi(s);
        (Complex::new(T::one(), T::zero()) - (-p * x).exp()) / s
    })
}

/// Transform of the `q`-th exit-time moment, `q Gamma(1+q) / (s psi(s)^q)`,
/// taken verbatim (it carries no dependence on the elapsed-time argument).
pub fn moment_transform<T: Real, E>(psi: Arc<E>, q: T) -> Result<TransformFn<T>>
where
    E: Exponent<T> + ?Sized + 'static,
{
    if !(q > T::zero()) {
        return Err(Error::domain("moment_transform", format!("q must be positive, got {q}")));
    }
    let c = q * gamma(T::one() + q);
    TransformFn::new(T::zero(), move |s| Complex::new(c, T::zero()) / (s * psi.psi(s).powf(q)))
}

/// Transform in `t` of the marginal law `Z_t`, i.e. `e^{-t psi(s)}`, inverted
/// in the state variable. Returned as `(density, survival)` transforms:
/// `e^{-t psi(s)}` and `(1 - e^{-t psi(s)}) / s`.
pub fn marginal_transforms<T: Real, E>(psi: Arc<E>, t: T) -> Result<(TransformFn<T>, TransformFn<T>)>
where
    E: Exponent<T> + ?Sized + 'static,
{
    let p2 = psi.clone();
    let ab = psi.abscissa();
    let dens = TransformFn::new(ab, move |s| (-psi.psi(s) * t).exp())?;
    let surv = TransformFn::new(T::zero(), move |s| (Complex::new(T::one(), T::zero()) - (-p2.psi(s) * t).exp()) / s)?;
    Ok((dens, surv))
}

pub(crate) fn default_quad<T: Real>() -> QuadSettings<T> {
    QuadSettings::new(T::c(1e-14), T::c(1e-12)).with_panels(4000)
}

/// Convenience: numerically integrate `int_a^b f` with the crate defaults.
pub fn quad<T: Real>(f: impl FnMut(T) -> T, a: T, b: T) -> Result<T> {
    integrate(f, a, b, &default_quad()).map(|e| e.value)
}
