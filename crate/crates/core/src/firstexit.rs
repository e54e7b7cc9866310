//! First-exit times of subordinators and of Brownian motion with drift.
//!
//! Orientation: `h(x, t)` is the density of `T_t = inf{x : Z_x > t}` in the
//! elapsed time `x`, at a fixed barrier level `t`. With that reading the
//! transform in the level variable is `psi(s) e^{-x psi(s)} / s`, which is
//! what makes `P(T_t <= x) = P(Z_x >= t)` hold. Everything in this module
//! samples `x` on the caller's grid and treats `t` as a scalar.
//!
//! Closed forms for the IG and PTS laws factor as `(p * q) * r` with the
//! convolution taken in the level variable; [`convolve`] does that on a
//! uniform level grid, with product-integration weights for `tau^{-beta}`
//! singularities at the origin and exact handling of point masses.

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex;
use rayon::prelude::*;

use crate::curve::{DensityCurve, Grid};
use crate::error::{Error, Result};
use crate::laplace::{exit_cdf_transform, exit_density_transform, invert_at, moment_transform, Method, TransformFn};
use crate::levy::{ModelParams, SubordinatorSpec};
use crate::quad::{integrate_breaks, Estimate, QuadSettings};
use crate::real::{KahanSum, Real};
use crate::specfun::{bessel_i0_scaled, erfc, erfcx, gamma, hyp2f1_terminating, ln_gamma, stretched_exp_inverse};

/// Density of the first time `mu s + sigma W_s` hits `-a`.
///
/// For `mu < 0` this is the inverse Gaussian law `IG(a / sigma, -mu / sigma)`;
/// for `mu = 0` the Lévy law, which has no mean.
pub fn brownian_exit_density<T: Real>(a: T, mu: T, sigma: T, grid: Grid<T>) -> Result<DensityCurve<T>> {
    check_brownian(a, mu, sigma)?;
    let two = T::c(2.0);
    let norm = a / (sigma * (two * T::PI()).sqrt());
    Ok(DensityCurve::from_fn(grid, |x| {
        if x <= T::zero() {
            return T::zero();
        }
        let d = a + mu * x;
        norm * x.powf(T::c(-1.5)) * (-d * d / (two * sigma * sigma * x)).exp()
    }))
}

/// `P(B_a <= x)` for the same hitting time.
pub fn brownian_exit_cdf<T: Real>(a: T, mu: T, sigma: T, x: T) -> Result<T> {
    check_brownian(a, mu, sigma)?;
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let half = T::c(0.5);
    let v = -mu;
    let root = sigma * (T::c(2.0) * x).sqrt();
    // Phi((v x - a) / (sigma sqrt x)) + e^{2 v a / sigma^2} Phi(-(v x + a) / (sigma sqrt x))
    let first = half * erfc((a - v * x) / root);
    let z = (v * x + a) / root;
    let second = half * (T::c(2.0) * v * a / (sigma * sigma) - z * z).exp() * erfcx(z);
    Ok((first + second).min(T::one()))
}

fn check_brownian<T: Real>(a: T, mu: T, sigma: T) -> Result<()> {
    if !(a > T::zero()) {
        return Err(Error::param("a", format!("barrier must be positive, got {a}")));
    }
    if !(sigma > T::zero()) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    if mu > T::zero() {
        return Err(Error::domain(
            "brownian_exit_density",
            format!("drift mu = {mu} points away from the barrier; the exit law is defective"),
        ));
    }
    Ok(())
}

/// Exit density by pointwise numerical inversion in the level variable.
pub fn exit_density_numeric<T: Real>(
    spec: &SubordinatorSpec<T>,
    t: T,
    grid: Grid<T>,
    method: Method,
    order: usize,
) -> Result<DensityCurve<T>> {
    spec.validate()?;
    check_level(t)?;
    let psi = spec.laplace_exponent().shared();
    let values = (0..grid.count)
        .into_par_iter()
        .map(|i| {
            let f = exit_density_transform(psi.clone(), grid.at(i))?;
            invert_at(&f, method, order, t)
        })
        .collect::<Result<Vec<T>>>()?;
    let mut curve = DensityCurve::new(grid, values)?;
    curve.clamp_negative(T::c(1e-12));
    Ok(curve)
}

/// `P(T_t <= x)` by numerical inversion of `(1 - e^{-x psi(s)}) / s`.
pub fn exit_cdf_numeric<T: Real>(spec: &SubordinatorSpec<T>, t: T, x: T, method: Method, order: usize) -> Result<T> {
    spec.validate()?;
    check_level(t)?;
    if x <= T::zero() {
        return Ok(T::zero());
    }
    let f = exit_cdf_transform(spec.laplace_exponent().shared(), x)?;
    Ok(invert_at(&f, method, order, t)?.max(T::zero()).min(T::one()))
}

fn check_level<T: Real>(t: T) -> Result<()> {
    if t > T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("exit density", format!("level t must be positive, got {t}")))
    }
}

/// Knobs for [`exit_density_closed`].
#[derive(Clone, Copy, Debug)]
pub struct ClosedOptions {
    /// Evaluate the formulas exactly as printed, including the known slips
    /// (dropped point mass and mis-scaled `r` for IG, the `E`-function `r` for
    /// PTS driving processes, the degenerate hypergeometric for stationary gamma).
    pub as_printed: bool,
    /// Minimum number of cells on the level grid `[0, t]`.
    pub level_cells: usize,
}

impl Default for ClosedOptions {
    fn default() -> Self {
        Self { as_printed: false, level_cells: 1000 }
    }
}

impl ClosedOptions {
    pub fn as_printed() -> Self {
        Self { as_printed: true, ..Self::default() }
    }
}

const MAX_LEVEL_CELLS: usize = 8_000;
// relative change between level grids of n and 2n cells accepted as converged
const LEVEL_AGREEMENT: f64 = 3e-4;

#[derive(Default)]
struct Fallbacks {
    // level points where the E-function series lost too much to cancellation
    series: AtomicUsize,
    // x nodes whose narrowest factor the level grid cannot resolve
    resolution: AtomicUsize,
}

impl Fallbacks {
    fn report(&self) {
        let n = self.series.load(Ordering::Relaxed);
        if n > 0 {
            log::info!("{n} level points fell back to numerical inversion (E-function series too inaccurate)");
        }
        let n = self.resolution.load(Ordering::Relaxed);
        if n > 0 {
            log::info!("{n} x nodes fell back to numerical inversion (factor narrower than the level grid allows)");
        }
    }
}

/// Closed-form exit density on the `x` grid at level `t`.
///
/// Returns [`Error::ClosedFormUnavailable`] for laws without one (stationary
/// IG; PTS unless `1/gamma` is an integer; stationary gamma unless printed
/// formulas are requested, which then fail with a pole).
pub fn exit_density_closed<T: Real>(
    spec: &SubordinatorSpec<T>,
    t: T,
    grid: Grid<T>,
    opts: &ClosedOptions,
) -> Result<DensityCurve<T>> {
    spec.validate()?;
    check_level(t)?;
    let values = match *spec {
        SubordinatorSpec::GammaBdlp { nu, alpha } => {
            grid.points().map(|x| gamma_bdlp_density(nu, alpha, x, t)).collect::<Result<Vec<T>>>()?
        }
        SubordinatorSpec::GammaStationary { nu, alpha } => {
            if !opts.as_printed {
                return Err(Error::ClosedFormUnavailable(
                    "stationary gamma: the printed closed form is degenerate; use the numeric path".into(),
                ));
            }
            grid.points().map(|x| gamma_stationary_as_printed(nu, alpha, x, t)).collect::<Result<Vec<T>>>()?
        }
        SubordinatorSpec::IgStationary { .. } => {
            return Err(Error::ClosedFormUnavailable("stationary IG has no closed-form exit density".into()))
        }
        SubordinatorSpec::IgBdlp { .. } | SubordinatorSpec::PtsStationary { .. } | SubordinatorSpec::PtsBdlp { .. } => {
            let kernel = ConvolutionKernel::new(spec, opts)?;
            let fallbacks = Fallbacks::default();
            let out = (0..grid.count)
                .into_par_iter()
                .map(|i| kernel.density(grid.at(i), t, opts.level_cells, &fallbacks))
                .collect::<Result<Vec<T>>>()?;
            fallbacks.report();
            out
        }
    };
    let mut curve = DensityCurve::new(grid, values)?;
    curve.clamp_negative(T::c(1e-12));
    Ok(curve)
}

/// `nu e^{-x nu} I_0(2 sqrt(x nu alpha t)) e^{-alpha t}`, evaluated with a
/// scaled Bessel function so that large arguments do not overflow.
pub fn gamma_bdlp_density<T: Real>(nu: T, alpha: T, x: T, t: T) -> Result<T> {
    if x < T::zero() {
        return Ok(T::zero());
    }
    let z = T::c(2.0) * (x * nu * alpha * t).sqrt();
    Ok(nu * (z - x * nu - alpha * t).exp() * bessel_i0_scaled(z)?)
}

// The stationary-gamma formula as printed. `alpha^{x c}` is read as
// `alpha^{x nu}`; the hypergeometric factor has a pole at every admissible node.
fn gamma_stationary_as_printed<T: Real>(nu: T, alpha: T, x: T, t: T) -> Result<T> {
    let nx = nu * x;
    let n = nx.round();
    if !(n >= T::one()) || (nx - n).abs() > T::c(1e-9) * n {
        return Err(Error::ClosedFormUnavailable(format!(
            "stationary gamma closed form needs x nu in {{1, 2, ...}}, got {nx}"
        )));
    }
    let k = n.to_u32().ok_or(Error::Overflow("x nu"))?;
    let f = hyp2f1_terminating(k, T::one() - nx, T::one())?;
    let sign = if k % 2 == 0 { T::one() } else { -T::one() };
    let fact = gamma(nx);
    let integrand = |u: T| {
        let un = u.powf(nx);
        (-u * alpha).exp() * alpha.powf(nx) * (nu * sign * un * f + nu * un) / fact
    };
    let est = integrate_breaks(integrand, &[T::zero(), t], &QuadSettings::default())?;
    Ok(est.value)
}

/// Convolves two curves on the same grid starting at 0:
/// `(f * g)(t) = int_0^t f(tau) g(t - tau) d tau`, plus the atom terms.
pub fn convolve<T: Real>(f: &DensityCurve<T>, g: &DensityCurve<T>) -> Result<DensityCurve<T>> {
    let plan = ConvPlan::new(f, g)?;
    let values: Vec<T> = (0..f.grid.count).into_par_iter().map(|n| plan.total_at(n)).collect();
    let (beta, coef) = plan.origin();
    let mut out = DensityCurve::new(f.grid, values)?.with_atom(f.atom * g.atom);
    out.singular = beta;
    out.values[0] = coef;
    Ok(out)
}

/// The convolution at a single grid index `n >= 1`, excluding the atom.
pub fn convolve_at<T: Real>(f: &DensityCurve<T>, g: &DensityCurve<T>, n: usize) -> Result<T> {
    if n == 0 || n >= f.grid.count {
        return Err(Error::InvalidSettings(format!("convolution index {n} outside 1..{}", f.grid.count)));
    }
    Ok(ConvPlan::new(f, g)?.total_at(n))
}

struct ConvPlan<'a, T> {
    f: &'a DensityCurve<T>,
    g: &'a DensityCurve<T>,
    wf: Vec<(T, T)>,
    wg: Vec<(T, T)>,
    rf: Vec<T>,
    rg: Vec<T>,
}

fn same_exponent<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::c(1e-12)
}

impl<'a, T: Real> ConvPlan<'a, T> {
    fn new(f: &'a DensityCurve<T>, g: &'a DensityCurve<T>) -> Result<Self> {
        if !f.grid.same_as(&g.grid) {
            return Err(Error::GridMismatch(format!("{} vs {}", f.grid, g.grid)));
        }
        if f.grid.start != T::zero() {
            return Err(Error::GridMismatch(format!("convolution grids must start at 0, got {}", f.grid.start)));
        }
        let cells = f.grid.count.saturating_sub(1);
        let half = cells / 2 + 1;
        let rem = |c: &DensityCurve<T>| (0..half + 1).map(|i| c.remainder(i)).collect();
        Ok(Self {
            f,
            g,
            wf: cell_weights(f.grid.step, f.singular, half),
            wg: cell_weights(g.grid.step, g.singular, half),
            rf: rem(f),
            rg: rem(g),
        })
    }

    // exponent and coefficient (or value, when regular) of the result at 0
    fn origin(&self) -> (T, T) {
        let (f, g) = (self.f, self.g);
        let sum = f.singular + g.singular;
        let mut terms: Vec<(T, T)> = Vec::with_capacity(3);
        let b = beta_fn(T::one() - f.singular, T::one() - g.singular);
        let ac0 = f.regular_part(0) * g.regular_part(0) * b;
        if sum > T::one() + T::c(1e-12) {
            terms.push((sum - T::one(), ac0));
        } else if same_exponent(sum, T::one()) {
            terms.push((T::zero(), ac0));
        } else {
            terms.push((T::zero(), T::zero()));
        }
        if f.atom != T::zero() {
            terms.push((g.singular, f.atom * g.values[0]));
        }
        if g.atom != T::zero() {
            terms.push((f.singular, g.atom * f.values[0]));
        }
        let beta = terms.iter().map(|&(e, _)| e).fold(T::zero(), T::max);
        let coef = terms.iter().filter(|&&(e, _)| same_exponent(e, beta)).map(|&(_, c)| c).fold(T::zero(), |a, c| a + c);
        (beta, coef)
    }

    // raw value of the result at index n (n >= 1), atom excluded
    fn total_at(&self, n: usize) -> T {
        if n == 0 {
            return self.origin().1;
        }
        let (f, g) = (self.f, self.g);
        self.ac_at(n) + f.atom * g.values[n] + g.atom * f.values[n]
    }

    fn ac_at(&self, n: usize) -> T {
        let (f, g) = (self.f, self.g);
        let h = f.grid.step;
        if n == 1 {
            if !f.is_singular() && !g.is_singular() {
                return T::c(0.5) * h * (f.values[0] * g.values[1] + f.values[1] * g.values[0]);
            }
            // leading-order product integration over a single cell
            let b = beta_fn(T::one() - f.singular, T::one() - g.singular);
            let half = T::c(0.5);
            let fm = half * (f.regular_part(0) + f.regular_part(1));
            let gm = half * (g.regular_part(0) + g.regular_part(1));
            return b * h.powf(T::one() - f.singular - g.singular) * fm * gm;
        }
        let m = n / 2;
        half_convolution(f, &self.rf, g, &self.wf, n, m) + half_convolution(g, &self.rg, f, &self.wg, n, n - m)
    }
}

// int_0^{t_m} a(tau) b(t_n - tau) d tau. The singular term of `a` is
// integrated exactly against the linear interpolant of `b`; the bounded
// remainder goes through the trapezoid rule.
fn half_convolution<T: Real>(
    a: &DensityCurve<T>,
    rem: &[T],
    b: &DensityCurve<T>,
    w: &[(T, T)],
    n: usize,
    m: usize,
) -> T {
    let half_h = T::c(0.5) * a.grid.step;
    let c0 = if a.is_singular() { a.values[0] } else { T::zero() };
    let mut acc = KahanSum::new();
    for j in 0..m {
        let (wl, wr) = w[j];
        let (bl, br) = (b.values[n - j], b.values[n - j - 1]);
        acc.add((c0 * wl + half_h * rem[j]) * bl + (c0 * wr + half_h * rem[j + 1]) * br);
    }
    acc.value()
}

// Weights of a linear interpolant against tau^{-beta}, one (left, right)
// pair per cell.
fn cell_weights<T: Real>(h: T, beta: T, cells: usize) -> Vec<(T, T)> {
    if beta == T::zero() {
        return vec![(T::c(0.5) * h, T::c(0.5) * h); cells];
    }
    let one_b = T::one() - beta;
    let two_b = T::c(2.0) - beta;
    (0..cells)
        .map(|j| {
            let a = T::from_usize_lossy(j) * h;
            let b = a + h;
            let i0 = (b.powf(one_b) - a.powf(one_b)) / one_b;
            let i1 = (b.powf(two_b) - a.powf(two_b)) / two_b;
            ((b * i0 - i1) / h, (i1 - a * i0) / h)
        })
        .collect()
}

fn beta_fn<T: Real>(a: T, b: T) -> T {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

// p, q, r factors of the IG and PTS closed forms at one elapsed time x.
enum ConvolutionKernel<T> {
    IgBdlp { spec: SubordinatorSpec<T>, delta: T, gamma: T, as_printed: bool },
    PtsStationary { spec: SubordinatorSpec<T>, tail: T, c: T, g: T, m: u32 },
    PtsBdlp { spec: SubordinatorSpec<T>, tail: T, c: T, g: T, m: u32 },
}

fn integer_reciprocal<T: Real>(g: T) -> Option<u32> {
    let m = g.recip();
    let r = m.round();
    if (m - r).abs() <= T::c(1e-10) * r && r >= T::c(2.0) {
        r.to_u32()
    } else {
        None
    }
}

impl<T: Real> ConvolutionKernel<T> {
    fn new(spec: &SubordinatorSpec<T>, opts: &ClosedOptions) -> Result<Self> {
        let spec = *spec;
        match spec {
            SubordinatorSpec::IgBdlp { delta, gamma } => {
                Ok(Self::IgBdlp { spec, delta, gamma, as_printed: opts.as_printed })
            }
            SubordinatorSpec::PtsStationary { beta, gamma: g, k } | SubordinatorSpec::PtsBdlp { beta, gamma: g, k } => {
                let m = integer_reciprocal(g).ok_or_else(|| {
                    Error::ClosedFormUnavailable(format!(
                        "PTS closed form needs 1/gamma in {{2, 3, ...}}, got gamma = {g}"
                    ))
                })?;
                let pc = SubordinatorSpec::pts_constants(beta, g, k);
                if matches!(spec, SubordinatorSpec::PtsStationary { .. }) {
                    Ok(Self::PtsStationary { spec, tail: pc.tail, c: pc.c, g, m })
                } else if opts.as_printed {
                    Err(Error::ClosedFormUnavailable(
                        "printed r factor for the PTS driving process has a negative E-function order".into(),
                    ))
                } else {
                    Ok(Self::PtsBdlp { spec, tail: pc.tail, c: pc.c, g, m })
                }
            }
            _ => unreachable!("only IG and PTS laws use the convolution kernel"),
        }
    }

    fn spec(&self) -> &SubordinatorSpec<T> {
        match self {
            Self::IgBdlp { spec, .. } | Self::PtsStationary { spec, .. } | Self::PtsBdlp { spec, .. } => spec,
        }
    }

    // Laplace exponent (in the level variable) of the narrowest factor at x;
    // used to size the level grid.
    fn narrow_exponent(&self, x: T, s: T) -> T {
        let one = T::one();
        match *self {
            Self::IgBdlp { delta, gamma, .. } => {
                x * delta * gamma * T::c(0.5) * ((one + T::c(2.0) * s / (gamma * gamma)).sqrt() - one)
            }
            Self::PtsStationary { tail, c, g, .. } => -x * tail * gamma(-g) * ((one + s / c).powf(g) - one),
            Self::PtsBdlp { tail, c, g, .. } => -x * tail * g * gamma(-g) * ((one + s / c).powf(g) - one),
        }
    }

    // None when the factor is too narrow for MAX_LEVEL_CELLS
    fn level_cells(&self, x: T, t: T, min_cells: usize) -> Option<usize> {
        // the scale w solving x psi(1/w) = 1, by bisection in log s
        let (mut lo, mut hi) = (T::c(-30.0), T::c(30.0));
        if self.narrow_exponent(x, hi.exp()) < T::one() {
            return None;
        }
        for _ in 0..100 {
            let mid = T::c(0.5) * (lo + hi);
            if self.narrow_exponent(x, mid.exp()) < T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = (-hi).exp();
        let want = (T::c(20.0) * t / w).ceil().to_usize().unwrap_or(usize::MAX).max(min_cells);
        (want <= MAX_LEVEL_CELLS.max(min_cells)).then_some(want)
    }

    fn density(&self, x: T, t: T, min_cells: usize, fallbacks: &Fallbacks) -> Result<T> {
        if x < T::zero() {
            return Ok(T::zero());
        }
        if x == T::zero() {
            // no time elapsed: only an immediate jump over the level exits
            return self.spec().integrated_tail(t);
        }
        // double the level grid until two successive values agree
        let mut cells = self.level_cells(x, t, min_cells);
        let mut prev = None;
        while let Some(n) = cells {
            let value = self.density_on(x, t, n, fallbacks)?;
            if let Some(p) = prev {
                if (value - p).abs() <= T::c(LEVEL_AGREEMENT) * value.abs() {
                    return Ok(value);
                }
            }
            prev = Some(value);
            cells = (2 * n <= MAX_LEVEL_CELLS.max(min_cells)).then_some(2 * n);
        }
        fallbacks.resolution.fetch_add(1, Ordering::Relaxed);
        let f = exit_density_transform(self.spec().laplace_exponent().shared(), x)?;
        invert_at(&f, Method::Talbot, 32, t)
    }

    fn density_on(&self, x: T, t: T, cells: usize, fallbacks: &Fallbacks) -> Result<T> {
        let grid = Grid::new(T::zero(), t / T::from_usize_lossy(cells), cells + 1)?;
        let p = self.p_factor(grid)?;
        let q = self.q_factor(x, grid, fallbacks)?;
        match self {
            Self::PtsStationary { .. } => convolve_at(&p, &q, cells),
            _ => {
                let r = self.r_factor(x, grid)?;
                let pq = convolve(&p, &q)?;
                convolve_at(&pq, &r, cells)
            }
        }
    }

    // p(t) = pi(t, inf), singular at 0
    fn p_factor(&self, grid: Grid<T>) -> Result<DensityCurve<T>> {
        let spec = *self.spec();
        let values = std::iter::once(Ok(T::zero()))
            .chain((1..grid.count).map(|i| spec.integrated_tail(grid.at(i))))
            .collect::<Result<Vec<T>>>()?;
        let (beta, coef) = match *self {
            Self::IgBdlp { delta, .. } => (T::c(0.5), delta / (T::c(2.0) * T::PI()).sqrt()),
            Self::PtsStationary { tail, c, g, .. } => (g, tail * c.powf(-g) / g),
            Self::PtsBdlp { tail, c, g, .. } => (g, tail * c.powf(-g)),
        };
        DensityCurve::new(grid, values)?.with_singularity(beta, coef)
    }

    fn q_factor(&self, x: T, grid: Grid<T>, fallbacks: &Fallbacks) -> Result<DensityCurve<T>> {
        match *self {
            Self::IgBdlp { delta, gamma, as_printed, .. } => ig_q(x, delta, gamma, as_printed, grid),
            Self::PtsStationary { tail, c, g, m, .. } => pts_q(-x * tail * gamma(-g), c, g, m, grid, fallbacks),
            Self::PtsBdlp { tail, c, g, m, .. } => pts_q(-x * tail * g * gamma(-g), c, g, m, grid, fallbacks),
        }
    }

    fn r_factor(&self, x: T, grid: Grid<T>) -> Result<DensityCurve<T>> {
        match *self {
            Self::IgBdlp { delta, gamma, as_printed, .. } => Ok(ig_r(x, delta, gamma, as_printed, grid)),
            Self::PtsBdlp { tail, c, g, .. } => pts_r(x * tail * gamma(T::one() - g), c, g, grid),
            Self::PtsStationary { .. } => unreachable!("stationary PTS has no r factor"),
        }
    }
}

// q for the IG driving process: inverse of exp(-x delta gamma / 2 + A / sqrt(s + gamma^2 / 2)),
// A = x gamma^2 delta / (2 sqrt 2). The regular part is the Bessel integral
// t^{-3/2} / (2 sqrt pi) int u e^{-u^2/4t} I_1(2 sqrt(A u)) sqrt(A/u) du,
// summed termwise; the point mass e^{-x delta gamma / 2} at 0 is kept unless
// the printed form is requested.
fn ig_q<T: Real>(x: T, delta: T, gamma: T, as_printed: bool, grid: Grid<T>) -> Result<DensityCurve<T>> {
    let g2 = gamma * gamma;
    let a = x * g2 * delta / (T::c(2.0) * T::SQRT_2());
    let damp = -x * delta * gamma * T::c(0.5);
    let sqrt_pi = T::PI().sqrt();
    let coef = a / sqrt_pi * damp.exp();
    let mut values = Vec::with_capacity(grid.count);
    values.push(coef);
    for i in 1..grid.count {
        let t = grid.at(i);
        values.push((damp - g2 * t * T::c(0.5)).exp() * ig_q_series(a, t) / (T::c(2.0) * sqrt_pi));
    }
    let curve = DensityCurve::new(grid, values)?.with_singularity(T::c(0.5), coef)?;
    Ok(if as_printed { curve } else { curve.with_atom(damp.exp()) })
}

// sum_k A^{k+1} 2^{k+1} Gamma((k+2)/2) / (k! (k+1)!) t^{(k-1)/2}, summed as
// two interleaved recurrences over even and odd k
pub(crate) fn ig_q_series<T: Real>(a: T, t: T) -> T {
    let two_a = T::c(2.0) * a;
    let step = two_a * two_a * t;
    let sqrt_pi = T::PI().sqrt();
    let mut acc = KahanSum::new();
    // k = 0 and k = 1
    let mut terms = [two_a / t.sqrt(), two_a * two_a * T::c(0.25) * sqrt_pi];
    let mut peak = T::zero();
    for k in (0..20_000usize).step_by(2) {
        for (j, term) in terms.iter_mut().enumerate() {
            acc.add(*term);
            peak = peak.max(*term);
            let kf = T::from_usize_lossy(k + j);
            *term = *term * step * (kf + T::c(2.0)) * T::c(0.5)
                / ((kf + T::one()) * (kf + T::c(2.0)) * (kf + T::c(2.0)) * (kf + T::c(3.0)));
        }
        if k > 4 && terms[0].max(terms[1]) < peak * T::c(1e-18) {
            break;
        }
    }
    acc.value()
}

// r for the IG driving process: exp(x delta gamma / 2) times the inverse of
// exp(-(x delta / sqrt 2) sqrt(s + gamma^2 / 2)).
fn ig_r<T: Real>(x: T, delta: T, gamma: T, as_printed: bool, grid: Grid<T>) -> DensityCurve<T> {
    let g2 = gamma * gamma;
    let sqrt_pi = T::PI().sqrt();
    let half = T::c(0.5);
    DensityCurve::from_fn(grid, |t| {
        if t <= T::zero() {
            return T::zero();
        }
        if as_printed {
            let num = x * delta * g2 * g2 * g2;
            let e = -g2 * t * half + x * delta * gamma * half - delta * delta * x * x * g2 * g2 / (T::c(32.0) * t);
            num * e.exp() / (T::c(8.0) * sqrt_pi * (T::c(2.0) * t).powf(T::c(1.5)))
        } else {
            // the exponent is -(gamma sqrt(t/2) - x delta / (2 sqrt(2 t)))^2 <= 0
            let d = gamma * (t * half).sqrt() - x * delta / (T::c(2.0) * (T::c(2.0) * t).sqrt());
            (x * delta / T::SQRT_2()) * (-d * d).exp() / (T::c(2.0) * sqrt_pi * t.powf(T::c(1.5)))
        }
    })
}

// q for PTS: e^{K} e^{-c t} times the inverse of exp(-(B s)^gamma), B = K^{1/gamma} / c,
// via the MacRobert E-function; points where the series loses too much to
// cancellation are inverted numerically instead.
fn pts_q<T: Real>(k: T, c: T, g: T, m: u32, grid: Grid<T>, fallbacks: &Fallbacks) -> Result<DensityCurve<T>> {
    let b = k.powf(g.recip()) / c;
    let one = Complex::new(T::one(), T::zero());
    let transform = TransformFn::new(-c, move |s: Complex<T>| ((one - (one + s / c).powf(g)) * k).exp())?;
    let values = (0..grid.count)
        .map(|i| {
            let t = grid.at(i);
            if t <= T::zero() {
                return Ok(T::zero());
            }
            let closed = stretched_exp_inverse(T::one(), b, m, t).ok().and_then(|sv| {
                let v = (k - c * t).exp() * sv.value;
                let err = (k - c * t).exp() * sv.error;
                (v.is_finite() && err <= T::c(1e-9) * v.abs().max(T::c(1e-300))).then_some(v)
            });
            match closed {
                Some(v) => Ok(v),
                None => {
                    fallbacks.series.fetch_add(1, Ordering::Relaxed);
                    invert_at(&transform, Method::Talbot, 32, t)
                }
            }
        })
        .collect::<Result<Vec<T>>>()?;
    DensityCurve::new(grid, values)
}

// r for the PTS driving process: the compound-Poisson law with transform
// exp(-L (1 - (1 + s/c)^{gamma - 1})), L = x a Gamma(1 - gamma): a point mass
// e^{-L} plus a Poisson mixture of Gamma(n (1 - gamma), c) densities.
fn pts_r<T: Real>(lambda: T, c: T, g: T, grid: Grid<T>) -> Result<DensityCurve<T>> {
    let theta = T::one() - g;
    let atom = (-lambda).exp();
    let coef = atom * lambda * c.powf(theta) / gamma(theta);
    let mut values = Vec::with_capacity(grid.count);
    values.push(coef);
    for i in 1..grid.count {
        let t = grid.at(i);
        values.push(compound_gamma_density(lambda, c, theta, t));
    }
    Ok(DensityCurve::new(grid, values)?.with_singularity(g, coef)?.with_atom(atom))
}

pub(crate) fn compound_gamma_density<T: Real>(lambda: T, c: T, theta: T, t: T) -> T {
    let ll = lambda.ln();
    let lct = (c * t).ln();
    let lt = t.ln();
    let mut acc = KahanSum::new();
    let mut peak = T::neg_infinity();
    for n in 1..100_000usize {
        let nf = T::from_usize_lossy(n);
        let lterm = -lambda - c * t + nf * ll - ln_gamma(nf + T::one()) + nf * theta * lct - lt - ln_gamma(nf * theta);
        acc.add(lterm.exp());
        peak = peak.max(lterm);
        if n > 4 && lterm < peak - T::c(40.0) && nf > lambda {
            break;
        }
    }
    acc.value()
}

/// Mean exit time of the stationary gamma subordinator at level `t`,
/// `int_0^t int_0^inf alpha e^{-l alpha} (l alpha)^{u-1} / (nu Gamma(u)) du dl`.
///
/// The `l` integral is taken by parts against the Volterra function
/// `V(y) = int_0^inf y^u / Gamma(u+1) du`, leaving
/// `(e^{-Y} V(Y) + int_0^Y e^{-y} V(y) dy) / nu` with `Y = alpha t`.
pub fn exit_moment_gamma(t: T64, nu: T64, alpha: T64) -> Result<Estimate<T64>> {
    if !(nu > 0.0 && alpha > 0.0) {
        return Err(Error::param("nu/alpha", format!("must be positive, got nu={nu}, alpha={alpha}")));
    }
    check_level(t)?;
    let y = alpha * t;
    let settings = QuadSettings::new(1e-13, 1e-10).with_panels(4000);
    let mut inner_err = 0.0f64;
    let outer = integrate_breaks(
        |s| match volterra(s) {
            Ok(v) => {
                inner_err = inner_err.max(v.error);
                (-s).exp() * v.value
            }
            Err(_) => f64::NAN,
        },
        &[0.0, y],
        &settings,
    )?;
    if !outer.value.is_finite() {
        return Err(Error::NonConvergence { terms: outer.evals, estimate: outer.value });
    }
    let vy = volterra(y)?;
    let value = ((-y).exp() * vy.value + outer.value) / nu;
    Ok(Estimate { value, error: (outer.error + vy.error + inner_err * y) / nu, evals: outer.evals + vy.evals })
}

type T64 = f64;

/// `V(y) = int_0^inf y^u / Gamma(u + 1) du`, truncated where the integrand
/// falls below `1e-16` of its peak.
pub fn volterra(y: f64) -> Result<Estimate<f64>> {
    if y <= 0.0 {
        return Ok(Estimate { value: 0.0, error: 0.0, evals: 0 });
    }
    let ly = y.ln();
    let lf = |u: f64| u * ly - ln_gamma(u + 1.0);
    // the log-integrand is concave; its peak solves digamma(u + 1) = ln y
    let mut peak = 0.0f64;
    if lf(1e-6) > lf(0.0) {
        let (mut lo, mut hi) = (0.0f64, y.max(1.0) + 2.0);
        for _ in 0..200 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if lf(a) < lf(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        peak = 0.5 * (lo + hi);
    }
    let top = lf(peak);
    let cut = top + (1e-16f64).ln();
    let mut end = peak + 1.0;
    while lf(end) > cut {
        end = peak + 2.0 * (end - peak);
    }
    let mut pts = vec![0.0];
    if peak > 0.0 {
        pts.push(peak);
    }
    pts.push(end);
    integrate_breaks(|u| (lf(u) - top).exp(), &pts, &QuadSettings::new(1e-15, 1e-12).with_panels(4000)).map(|e| Estimate {
        value: e.value * top.exp(),
        error: e.error * top.exp(),
        evals: e.evals,
    })
}

/// `E[T_t^q]` by inverting `q Gamma(1+q) / (s psi(s)^q)` at level `t`.
pub fn exit_moment_numeric<T: Real>(spec: &SubordinatorSpec<T>, q: T, t: T, method: Method, order: usize) -> Result<T> {
    spec.validate()?;
    check_level(t)?;
    let f = moment_transform(spec.laplace_exponent().shared(), q)?;
    invert_at(&f, method, order, t)
}

/// Chernoff bound on `P(T_t > x) = P(Z_x < t) <= inf_s e^{s t - x psi(s)}`,
/// minimized over a log grid of `s`.
pub fn exit_survival_bound(spec: &SubordinatorSpec, t: f64, x: f64) -> f64 {
    (0..=240)
        .map(|i| 10f64.powf(-4.0 + i as f64 / 40.0))
        .map(|s| (s * t - x * spec.psi_real(s)).exp())
        .fold(1.0, f64::min)
}

/// Smallest `x` (on a doubling ladder from the mean exit time) at which
/// [`exit_survival_bound`] drops below `tol`, so that a grid `[0, x]` holds
/// all but `tol` of the exit-time mass.
pub fn adequate_horizon(spec: &SubordinatorSpec, t: f64, tol: f64) -> Result<f64> {
    spec.validate()?;
    check_level(t)?;
    let mut x = t / spec.mean();
    for _ in 0..60 {
        if exit_survival_bound(spec, t, x) <= tol {
            return Ok(x);
        }
        x *= 2.0;
    }
    Err(Error::NonConvergence { terms: 60, estimate: x })
}

/// Barrier pair for the decomposed exit problem `A_{a+b} = B_a + C_b`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExitTimeQuery {
    /// Brownian barrier component.
    pub a: f64,
    /// Subordinator barrier component.
    pub b: f64,
    pub model: ModelParams,
    pub spec: SubordinatorSpec,
    pub grid: Grid<f64>,
}

/// Outcome of admitting a query: non-positive barriers are crossed at time 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Admission {
    Proper(ExitTimeQuery),
    TrivialExit,
}

impl ExitTimeQuery {
    pub fn admit(a: f64, b: f64, model: ModelParams, spec: SubordinatorSpec, grid: Grid<f64>) -> Result<Admission> {
        model.validate()?;
        spec.validate()?;
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::param(if a.is_finite() { "b" } else { "a" }, "barrier must be finite"));
        }
        if a <= 0.0 || b <= 0.0 {
            return Ok(Admission::TrivialExit);
        }
        Ok(Admission::Proper(Self { a, b, model, spec, grid }))
    }
}
