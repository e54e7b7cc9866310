//! Special-function kernels: error function, incomplete gamma, modified
//! Bessel functions of order 0/1, terminating Gauss hypergeometric sums,
//! generalized hypergeometric series and the MacRobert E-function.
//!
//! Everything is generic over [`Real`]; accuracy statements refer to `f64`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};

const SERIES_BUDGET: usize = 2000;
const CF_BUDGET: usize = 5000;

// ---------------------------------------------------------------------------
// error function

/// Error function `2/sqrt(pi) * int_0^x exp(-t^2) dt`.
///
/// Odd by construction; absolute error about one ulp in `f64`.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return -erf(-x);
    }
    if x < T::c(2.5) {
        erf_series(x)
    } else {
        T::one() - (-x * x).exp() * erfcx_cf(x)
    }
}

/// Complementary error function.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x < T::zero() {
        return T::c(2.0) - erfc(-x);
    }
    if x < T::c(2.0) {
        T::one() - erf_series(x)
    } else {
        (-x * x).exp() * erfcx_cf(x)
    }
}

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx<T: Real>(x: T) -> T {
    if x < T::c(2.0) {
        (x * x).exp() * erfc(x)
    } else {
        erfcx_cf(x)
    }
}

/// Standard normal distribution function.
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::c(0.5) * erfc(-x / T::SQRT_2())
}

// erf(x) = 2x/sqrt(pi) exp(-x^2) sum (2x^2)^n / (2n+1)!!, all terms positive.
fn erf_series<T: Real>(x: T) -> T {
    let x2 = x * x;
    let two_x2 = x2 + x2;
    let mut term = T::one();
    let mut acc = KahanSum::new();
    acc.add(term);
    for n in 1..SERIES_BUDGET {
        term = term * two_x2 / T::from_usize_lossy(2 * n + 1);
        acc.add(term);
        if term < acc.value() * T::epsilon() * T::c(0.25) {
            break;
        }
    }
    T::c(2.0) * x / T::PI().sqrt() * (-x2).exp() * acc.value()
}

// exp(x^2) erfc(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
fn erfcx_cf<T: Real>(x: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let mut f = x;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..CF_BUDGET {
        let an = T::from_usize_lossy(n) * T::c(0.5);
        d = x + an * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    T::one() / (T::PI().sqrt() * f)
}

// ---------------------------------------------------------------------------
// gamma function

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (reflection below 1/2).
pub fn gamma<T: Real>(x: T) -> T {
    if x < T::c(0.5) {
        if x == x.floor() {
            return T::nan();
        }
        T::PI() / ((T::PI() * x).sin() * gamma(T::one() - x))
    } else {
        ln_gamma_lanczos(x).exp()
    }
}

/// `ln |Gamma(x)|` for real `x` that is not a non-positive integer.
pub fn ln_gamma<T: Real>(x: T) -> T {
    if x < T::c(0.5) {
        let s = (T::PI() * x).sin().abs();
        T::PI().ln() - s.ln() - ln_gamma_lanczos(T::one() - x)
    } else {
        ln_gamma_lanczos(x)
    }
}

fn ln_gamma_lanczos<T: Real>(x: T) -> T {
    let z = x - T::one();
    let mut acc = T::c(LANCZOS[0]);
    for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + T::c(p) / (z + T::from_usize_lossy(i));
    }
    let t = z + T::c(LANCZOS_G) + T::c(0.5);
    T::c(0.5) * (T::PI() + T::PI()).ln() + (z + T::c(0.5)) * t.ln() - t + acc.ln()
}

/// Gamma function of a complex argument.
pub fn gamma_complex<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::c(0.5);
    if z.re < half {
        let pi = Complex::new(T::PI(), T::zero());
        pi / ((pi * z).sin() * gamma_complex(Complex::new(T::one(), T::zero()) - z))
    } else {
        let zm = z - T::one();
        let mut acc = Complex::new(T::c(LANCZOS[0]), T::zero());
        for (i, &p) in LANCZOS.iter().enumerate().skip(1) {
            acc = acc + Complex::new(T::c(p), T::zero()) / (zm + T::from_usize_lossy(i));
        }
        let t = zm + T::c(LANCZOS_G) + half;
        let two_pi = T::PI() + T::PI();
        (t.ln() * (zm + half) - t).exp() * acc * two_pi.sqrt()
    }
}

// ---------------------------------------------------------------------------
// incomplete gamma

/// Upper incomplete gamma `Gamma(a, x) = int_x^inf t^(a-1) e^-t dt` for any real
/// `a` and `x > 0`.
///
/// For `x > max(a + 1, 1.5)` the Legendre continued fraction is used directly.
/// Otherwise positive `a >= 1` uses `Gamma(a) - gamma(a, x)`, and `a < 1` is
/// reached by downward recurrence `Gamma(b, x) = (Gamma(b+1, x) - x^b e^-x) / b`
/// from `a + ceil(-a) + 1`; non-positive integers start from `E1(x)`.
pub fn gamma_upper<T: Real>(a: T, x: T) -> Result<T> {
    if !(x > T::zero()) || !x.is_finite() {
        return Err(Error::domain("gamma_upper", format!("x must be positive and finite, got {x}")));
    }
    if !a.is_finite() {
        return Err(Error::domain("gamma_upper", "a must be finite"));
    }
    if x > (a + T::one()).max(T::c(1.5)) {
        return Ok(upper_cf(a, x));
    }
    if a >= T::one() {
        return Ok(gamma(a) - lower_series(a, x));
    }
    let is_int = a == a.floor();
    let (mut b, mut g) = if is_int {
        (T::zero(), exp_integral_e1(x)?)
    } else {
        let b0 = a + (-a).ceil() + T::one();
        (b0, gamma(b0) - lower_series(b0, x))
    };
    let ex = (-x).exp();
    while b > a + T::c(0.5) {
        b = b - T::one();
        g = (g - x.powf(b) * ex) / b;
    }
    Ok(g)
}

/// Exponential integral `E1(x) = Gamma(0, x)`.
pub fn exp_integral_e1<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::domain("exp_integral_e1", format!("x must be positive, got {x}")));
    }
    if x > T::c(1.5) {
        return Ok(upper_cf(T::zero(), x));
    }
    let euler = T::c(0.577_215_664_901_532_9);
    let mut acc = KahanSum::new();
    let mut term = T::one();
    for k in 1..SERIES_BUDGET {
        let kk = T::from_usize_lossy(k);
        term = -term * x / kk;
        let contrib = -term / kk;
        acc.add(contrib);
        if contrib.abs() < T::epsilon() * T::c(1e-2) * acc.value().abs() {
            break;
        }
    }
    Ok(-euler - x.ln() + acc.value())
}

/// Regularized upper incomplete gamma `Q(a, x)` for `a > 0`, `x >= 0`.
pub fn gamma_q<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::one();
    }
    if x < a + T::one() {
        T::one() - gamma_p_series(a, x)
    } else {
        let log_pref = -x + a * x.ln() - ln_gamma(a);
        log_pref.exp() * upper_cf_tail(a, x)
    }
}

/// Regularized lower incomplete gamma `P(a, x)` for `a > 0`, `x >= 0`.
pub fn gamma_p<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x < a + T::one() {
        gamma_p_series(a, x)
    } else {
        T::one() - gamma_q(a, x)
    }
}

fn gamma_p_series<T: Real>(a: T, x: T) -> T {
    let log_pref = -x + a * x.ln() - ln_gamma(a + T::one());
    let mut term = T::one();
    let mut acc = KahanSum::new();
    acc.add(term);
    for n in 1..SERIES_BUDGET {
        term = term * x / (a + T::from_usize_lossy(n));
        acc.add(term);
        if term < acc.value() * T::epsilon() * T::c(0.1) {
            break;
        }
    }
    log_pref.exp() * acc.value()
}

// gamma(a, x) = e^-x x^a sum x^n / (a (a+1) ... (a+n)), a > 0.
fn lower_series<T: Real>(a: T, x: T) -> T {
    let mut term = a.recip();
    let mut acc = KahanSum::new();
    acc.add(term);
    for n in 1..SERIES_BUDGET {
        term = term * x / (a + T::from_usize_lossy(n));
        acc.add(term);
        if term.abs() < acc.value().abs() * T::epsilon() * T::c(0.1) {
            break;
        }
    }
    (-x).exp() * x.powf(a) * acc.value()
}

fn upper_cf<T: Real>(a: T, x: T) -> T {
    (-x + a * x.ln()).exp() * upper_cf_tail(a, x)
}

// Legendre continued fraction for e^x x^-a Gamma(a, x), modified Lentz.
fn upper_cf_tail<T: Real>(a: T, x: T) -> T {
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one() - a;
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..CF_BUDGET {
        let fi = T::from_usize_lossy(i);
        let an = -fi * (fi - a);
        b = b + T::c(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let del = d * c;
        h = h * del;
        if (del - T::one()).abs() < T::epsilon() {
            break;
        }
    }
    h
}

// ---------------------------------------------------------------------------
// modified Bessel functions

const BESSEL_SERIES_LIMIT: f64 = 50.0;

/// `exp(-x) I0(x)` for `x >= 0`.
pub fn bessel_i0_scaled<T: Real>(x: T) -> Result<T> {
    check_bessel_arg("bessel_i0_scaled", x)?;
    if x <= T::c(BESSEL_SERIES_LIMIT) {
        let q = x * x * T::c(0.25);
        let mut term = T::one();
        let mut acc = KahanSum::new();
        acc.add(term);
        for k in 1..SERIES_BUDGET {
            let kk = T::from_usize_lossy(k);
            term = term * q / (kk * kk);
            acc.add(term);
            if term < acc.value() * T::epsilon() * T::c(0.1) {
                break;
            }
        }
        Ok((-x).exp() * acc.value())
    } else {
        Ok(bessel_scaled_asymptotic(T::zero(), x))
    }
}

/// `exp(-x) I1(x)` for `x >= 0`.
pub fn bessel_i1_scaled<T: Real>(x: T) -> Result<T> {
    check_bessel_arg("bessel_i1_scaled", x)?;
    if x <= T::c(BESSEL_SERIES_LIMIT) {
        let half = x * T::c(0.5);
        let q = half * half;
        let mut term = half;
        let mut acc = KahanSum::new();
        acc.add(term);
        for k in 1..SERIES_BUDGET {
            let kk = T::from_usize_lossy(k);
            term = term * q / (kk * (kk + T::one()));
            acc.add(term);
            if term <= acc.value() * T::epsilon() * T::c(0.1) {
                break;
            }
        }
        Ok((-x).exp() * acc.value())
    } else {
        Ok(bessel_scaled_asymptotic(T::one(), x))
    }
}

/// Modified Bessel function `I0(x)`; signals overflow past the exponent range.
pub fn bessel_i0<T: Real>(x: T) -> Result<T> {
    let s = bessel_i0_scaled(x)?;
    let v = x.exp() * s;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("bessel_i0"))
    }
}

/// Derivative of `I0`, equal to `I1(x)`.
pub fn bessel_i0_prime<T: Real>(x: T) -> Result<T> {
    let s = bessel_i1_scaled(x)?;
    let v = x.exp() * s;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("bessel_i0_prime"))
    }
}

fn check_bessel_arg<T: Real>(func: &'static str, x: T) -> Result<()> {
    if !(x >= T::zero()) || !x.is_finite() {
        return Err(Error::domain(func, format!("x must be finite and non-negative, got {x}")));
    }
    Ok(())
}

// Hankel expansion e^-x I_nu(x) ~ (2 pi x)^-1/2 sum (-1)^k a_k(nu) / x^k.
fn bessel_scaled_asymptotic<T: Real>(nu: T, x: T) -> T {
    let mu = T::c(4.0) * nu * nu;
    let mut term = T::one();
    let mut acc = KahanSum::new();
    acc.add(term);
    let mut prev = T::infinity();
    for k in 1..200 {
        let kk = T::from_usize_lossy(2 * k - 1);
        term = -term * (mu - kk * kk) / (T::from_usize_lossy(k) * T::c(8.0) * x);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        acc.add(term);
        if term.abs() < T::epsilon() * T::c(0.1) * acc.value().abs() {
            break;
        }
    }
    acc.value() / (T::c(2.0) * T::PI() * x).sqrt()
}

// ---------------------------------------------------------------------------
// hypergeometric series

/// `2F1(-n, -n; c; x)` as the finite sum of `n + 1` terms.
///
/// Fails with [`Error::Pole`] when the Pochhammer symbol `(c)_k` vanishes for
/// some `k <= n`, i.e. when `c` is one of `0, -1, ..., -(n-1)`.
pub fn hyp2f1_terminating<T: Real>(n: u32, c: T, x: T) -> Result<T> {
    let nn = n as usize;
    for k in 0..nn {
        if c + T::from_usize_lossy(k) == T::zero() {
            return Err(Error::Pole(format!(
                "2F1(-{n}, -{n}; {c}; x): (c)_{} vanishes",
                k + 1
            )));
        }
    }
    let mut term = T::one();
    let mut acc = KahanSum::new();
    acc.add(term);
    let minus_n = -T::from_usize_lossy(nn);
    for k in 0..nn {
        let kk = T::from_usize_lossy(k);
        let a = minus_n + kk;
        term = term * a * a / ((c + kk) * (kk + T::one())) * x;
        acc.add(term);
    }
    Ok(acc.value())
}

/// Parameters of a generalized hypergeometric series `mFn(a; b; x)`.
#[derive(Clone, Debug)]
pub struct PfqParams<T> {
    pub upper: Vec<Complex<T>>,
    pub lower: Vec<Complex<T>>,
    pub argument: Complex<T>,
}

impl<T: Real> PfqParams<T> {
    pub fn real(upper: &[T], lower: &[T], x: T) -> Self {
        let cx = |v: &T| Complex::new(*v, T::zero());
        Self {
            upper: upper.iter().map(cx).collect(),
            lower: lower.iter().map(cx).collect(),
            argument: Complex::new(x, T::zero()),
        }
    }
}

/// A series value together with its error estimate (truncation plus rounding).
#[derive(Clone, Copy, Debug)]
pub struct SeriesValue<V, T> {
    pub value: V,
    pub error: T,
    pub terms: usize,
}

fn is_nonpositive_integer<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.floor()
}

/// Partial sum of `sum_k prod (a_i)_k / prod (b_j)_k * x^k / k!`.
///
/// Terminates exactly when an upper parameter is a non-positive integer.
/// Otherwise stops once the tail bound from the ratio test drops below
/// `tol * |sum|`; fails with [`Error::NonConvergence`] if that does not happen
/// within `max_terms`.
pub fn pfq<T: Real>(params: &PfqParams<T>, max_terms: usize, tol: T) -> Result<SeriesValue<Complex<T>, T>> {
    let x = params.argument;
    let zero = Complex::new(T::zero(), T::zero());
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    let mut comp = zero;
    let mut abs_sum = T::one();
    let m = params.upper.len();
    let n = params.lower.len();
    let mut last_tail = T::infinity();
    let real_params = params.upper.iter().chain(params.lower.iter()).all(|p| p.im == T::zero());
    let alternating = real_params && x.im == T::zero() && x.re < T::zero();
    for k in 0..max_terms {
        let kk = T::from_usize_lossy(k);
        let mut num = Complex::new(T::one(), T::zero());
        for a in &params.upper {
            num = num * (*a + kk);
        }
        if num == zero {
            // terminating series
            let error = T::epsilon() * abs_sum * T::c(4.0);
            return Ok(SeriesValue { value: sum + comp, error, terms: k + 1 });
        }
        let mut den = Complex::new(kk + T::one(), T::zero());
        for b in &params.lower {
            let bk = *b + kk;
            if bk == zero {
                return Err(Error::Pole(format!("lower parameter {b} hits a non-positive integer")));
            }
            den = den * bk;
        }
        let ratio = num / den * x;
        term = term * ratio;
        // Neumaier on each component
        let t = sum + term;
        let fix = |s: T, tt: T, x: T| if s.abs() >= x.abs() { (s - tt) + x } else { (x - tt) + s };
        comp = comp + Complex::new(fix(sum.re, t.re, term.re), fix(sum.im, t.im, term.im));
        sum = t;
        abs_sum = abs_sum + term.norm();
        // alternating real series with shrinking terms: tail below the next term
        let r = ratio.norm();
        if alternating && ratio.re < T::zero() && r < T::one() {
            let next = term.norm() * r;
            last_tail = next;
            if next <= tol * (sum + comp).norm() {
                let error = next + T::epsilon() * abs_sum * T::c(4.0);
                return Ok(SeriesValue { value: sum + comp, error, terms: k + 2 });
            }
            continue;
        }
        // tail bound from the asymptotic ratio
        let r_lim = if m == n + 1 { r.max(x.norm()) } else { r };
        if r_lim < T::one() {
            let next = term.norm() * r_lim;
            let tail = next / (T::one() - r_lim);
            last_tail = tail;
            let scale = (sum + comp).norm().max(T::min_positive_value());
            if tail <= tol * scale && k >= 1 {
                let error = tail + T::epsilon() * abs_sum * T::c(4.0);
                return Ok(SeriesValue { value: sum + comp, error, terms: k + 2 });
            }
        } else if m > n + 1 && params.upper.iter().all(|a| !is_nonpositive_integer(*a)) && k > 64 {
            break;
        }
    }
    Err(Error::NonConvergence { terms: max_terms, estimate: last_tail.to_f64_lossy() })
}

// ---------------------------------------------------------------------------
// MacRobert E-function (no lower parameters)

/// Which series representation produced a MacRobert value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacRobertBranch {
    /// Sum over `i` of `x^{a_i}`-weighted `1F(m-1)` series.
    PowerSum,
    /// `prod Gamma(a) * mF0(a; ; -1/x)`, only for `m <= 1`.
    Reciprocal,
}

const MACROBERT_TERMS: usize = 4000;

/// `E(a_1, ..., a_m :: x)` for a complex argument on the principal branch.
pub fn macrobert_e<T: Real>(a: &[Complex<T>], x: Complex<T>) -> Result<SeriesValue<Complex<T>, T>> {
    macrobert_e_polar(a, x.norm(), x.arg()).map(|(v, _)| v)
}

/// `E(a_1, ..., a_m :: r e^{i phase})` with the phase carried explicitly, so
/// that `r e^{i pi}` and `r e^{-i pi}` are distinct points on the Riemann surface
/// of `x^{a_i}`.
///
/// For `m >= 2` only the power-sum branch applies (its `1F(m-1)` series are
/// entire). For `m = 1` both branches are evaluated when `|x|` is close to 1 and
/// the one with the smaller error estimate is returned.
pub fn macrobert_e_polar<T: Real>(
    a: &[Complex<T>],
    modulus: T,
    phase: T,
) -> Result<(SeriesValue<Complex<T>, T>, MacRobertBranch)> {
    if a.is_empty() {
        return Err(Error::domain("macrobert_e", "at least one upper parameter required"));
    }
    if !(modulus > T::zero()) {
        return Err(Error::domain("macrobert_e", "argument modulus must be positive"));
    }
    let tol = T::epsilon();
    if a.len() >= 2 {
        return macrobert_power_sum(a, modulus, phase, tol).map(|v| (v, MacRobertBranch::PowerSum));
    }
    let near_one = (modulus - T::one()).abs() < T::c(0.25);
    let power = if modulus < T::one() || near_one { Some(macrobert_power_sum(a, modulus, phase, tol)) } else { None };
    let recip = if modulus > T::one() || near_one { Some(macrobert_reciprocal(a, modulus, phase, tol)) } else { None };
    match (power, recip) {
        (Some(Ok(p)), Some(Ok(r))) => {
            if p.error <= r.error {
                Ok((p, MacRobertBranch::PowerSum))
            } else {
                Ok((r, MacRobertBranch::Reciprocal))
            }
        }
        (Some(Ok(p)), _) => Ok((p, MacRobertBranch::PowerSum)),
        (_, Some(Ok(r))) => Ok((r, MacRobertBranch::Reciprocal)),
        (Some(Err(e)), _) | (_, Some(Err(e))) => Err(e),
        (None, None) => unreachable!("at least one branch is always selected"),
    }
}

fn cpow_polar<T: Real>(modulus: T, phase: T, a: Complex<T>) -> Complex<T> {
    // (r e^{i phi})^a = exp(a (ln r + i phi))
    (a * Complex::new(modulus.ln(), phase)).exp()
}

fn macrobert_power_sum<T: Real>(
    a: &[Complex<T>],
    modulus: T,
    phase: T,
    tol: T,
) -> Result<SeriesValue<Complex<T>, T>> {
    let m = a.len();
    let one = Complex::new(T::one(), T::zero());
    let sign = if m % 2 == 0 { T::one() } else { -T::one() };
    let x = Complex::from_polar(modulus, phase) * sign;
    let mut total = Complex::new(T::zero(), T::zero());
    let mut err = T::zero();
    let mut terms = 0;
    for i in 0..m {
        let ai = a[i];
        let mut pref = gamma_complex(ai);
        let mut lower = Vec::with_capacity(m - 1);
        for (j, &aj) in a.iter().enumerate() {
            if j == i {
                continue;
            }
            let diff = aj - ai;
            if is_nonpositive_integer(diff) {
                return Err(Error::Pole(format!("Gamma(a_j - a_i) pole at a_j - a_i = {diff}")));
            }
            pref = pref * gamma_complex(diff);
            lower.push(ai - aj + one);
        }
        pref = pref * cpow_polar(modulus, phase, ai);
        let series = pfq(&PfqParams { upper: vec![ai], lower, argument: x }, MACROBERT_TERMS, tol)?;
        total = total + pref * series.value;
        err = err + pref.norm() * series.error;
        terms += series.terms;
    }
    Ok(SeriesValue { value: total, error: err, terms })
}

fn macrobert_reciprocal<T: Real>(
    a: &[Complex<T>],
    modulus: T,
    phase: T,
    tol: T,
) -> Result<SeriesValue<Complex<T>, T>> {
    let mut pref = Complex::new(T::one(), T::zero());
    for &ai in a {
        pref = pref * gamma_complex(ai);
    }
    let arg = -Complex::from_polar(modulus.recip(), -phase);
    let series = pfq(&PfqParams { upper: a.to_vec(), lower: vec![], argument: arg }, MACROBERT_TERMS, tol)?;
    Ok(SeriesValue { value: pref * series.value, error: pref.norm() * series.error, terms: series.terms })
}

/// `sum_{i, -i} (1/i) E(a :: r e^{i pi})`: the conjugate-pair combination used
/// by the inverse transform of `s^(c-1) exp(-(b s)^(1/m))`.
///
/// For real `a` the two summands are conjugate, so the result is real up to
/// rounding; the imaginary residue is returned for the caller to check.
pub fn macrobert_conjugate_pair<T: Real>(a: &[Complex<T>], r: T) -> Result<SeriesValue<Complex<T>, T>> {
    let (plus, _) = macrobert_e_polar(a, r, T::PI())?;
    let (minus, _) = macrobert_e_polar(a, r, -T::PI())?;
    let i = Complex::new(T::zero(), T::one());
    let value = plus.value / i + minus.value / (-i);
    Ok(SeriesValue { value, error: plus.error + minus.error, terms: plus.terms + minus.terms })
}

/// Closed-form inverse Laplace transform of `s^(c-1) exp(-(b s)^(1/m))` for
/// integer `m >= 2`, expressed through the MacRobert E-function.
pub fn stretched_exp_inverse<T: Real>(c: T, b: T, m: u32, t: T) -> Result<SeriesValue<T, T>> {
    if m < 2 {
        return Err(Error::domain("stretched_exp_inverse", "m must be an integer >= 2"));
    }
    if !(c > T::zero() && b > T::zero() && t > T::zero()) {
        return Err(Error::domain("stretched_exp_inverse", "c, b, t must be positive"));
    }
    let mf = T::from_u32(m).expect("u32 representable");
    let a: Vec<Complex<T>> = (0..m)
        .map(|j| Complex::new(c + T::from_u32(j).expect("u32") / mf, T::zero()))
        .collect();
    let r = b / (mf.powf(mf) * t);
    let pair = macrobert_conjugate_pair(&a, r)?;
    let two_pi = T::PI() + T::PI();
    let pref = mf.powf(T::c(0.5) + mf * c) / (two_pi.powf((mf + T::one()) * T::c(0.5)) * b.powf(c));
    Ok(SeriesValue { value: pref * pair.value.re, error: pref * (pair.error + pair.value.im.abs()), terms: pair.terms })
}
