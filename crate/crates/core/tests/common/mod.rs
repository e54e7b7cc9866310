//! Shared oracles for the integration and acceptance tests.
#![allow(dead_code)]

use std::sync::Arc;

use exitlab::laplace::TransformFn;
use exitlab::specfun::{bessel_i0, erf, gamma_upper};
use num_complex::Complex64 as C;

// Reference values from 40-digit mpmath, rounded to f64.
pub const ERF: &[(f64, f64)] = &[
    (-3.0, -9.99977909503001361e-01),
    (-1.0, -8.42700792949714894e-01),
    (-0.5, -5.20499877813046519e-01),
    (0.001, 1.12837879096923648e-03),
    (0.1, 1.12462916018284897e-01),
    (0.5, 5.20499877813046519e-01),
    (1.0, 8.42700792949714894e-01),
    (2.0, 9.95322265018952712e-01),
    (3.0, 9.99977909503001361e-01),
    (5.0, 9.99999999998462563e-01),
];

pub const ERFC: &[(f64, f64)] = &[
    (0.1, 8.87537083981715047e-01),
    (1.0, 1.57299207050285134e-01),
    (3.0, 2.20904969985854412e-05),
    (5.0, 1.53745979442803494e-12),
    (10.0, 2.08848758376254488e-45),
    (20.0, 5.39586561160790118e-176),
];

/// `(a, x, Gamma(a, x))`.
pub const GAMMA_UPPER: &[(f64, f64, f64)] = &[
    (-2.5, 0.05, 6.59514327521067685e+02),
    (-2.5, 0.5, 1.07246582575344718e+00),
    (-2.5, 1.0, 9.65566486312751660e-02),
    (-2.5, 3.0, 5.29432830501010013e-04),
    (-2.5, 10.0, 1.08221867212379971e-08),
    (-2.5, 25.0, 1.56571100888532344e-16),
    (-2.0, 0.05, 1.81967539899390630e+02),
    (-2.0, 0.5, 8.86417457100713846e-01),
    (-2.0, 1.0, 1.09691967197760143e-01),
    (-2.0, 3.0, 9.92294061780302781e-04),
    (-2.0, 10.0, 3.54876255308438226e-08),
    (-2.0, 25.0, 7.96465559701636647e-16),
    (-1.5, 0.05, 5.28251055026110095e+01),
    (-1.5, 0.5, 7.49890975459209463e-01),
    (-1.5, 1.0, 1.26487819593254419e-01),
    (-1.5, 3.0, 1.87025984867509156e-03),
    (-1.5, 10.0, 1.16511716858024371e-07),
    (-1.5, 25.0, 4.05271428456715553e-15),
    (-1.0, 0.05, 1.65566900015043039e+01),
    (-1.0, 0.5, 6.53287724649106005e-01),
    (-1.0, 1.0, 1.48495506775922048e-01),
    (-1.0, 3.0, 3.54730836175761030e-03),
    (-1.0, 10.0, 3.83024046563160877e-07),
    (-1.0, 25.0, 2.06277790645391611e-14),
    (-0.5, 0.05, 5.84288796134750044e+00),
    (-0.5, 0.5, 5.90691306732599397e-01),
    (-0.5, 1.0, 1.78147711781560691e-01),
    (-0.5, 3.0, 6.77613600177021189e-03),
    (-0.5, 10.0, 1.26090426132415715e-06),
    (-0.5, 25.0, 1.05024479492861435e-13),
    (0.0, 0.05, 2.46789848850997418e+00),
    (0.0, 0.5, 5.59773594776160843e-01),
    (0.0, 1.0, 2.19383934395520286e-01),
    (0.0, 3.0, 1.30483810941970368e-02),
    (0.0, 10.0, 4.15696892968532464e-06),
    (0.0, 25.0, 5.34889975534021666e-13),
    (0.5, 0.05, 1.33258333008945051e+00),
    (0.5, 0.5, 5.62418231594407070e-01),
    (0.5, 1.0, 2.78805585280661961e-01),
    (0.5, 3.0, 2.53565093234634428e-02),
    (0.5, 10.0, 1.37262662354498581e-05),
    (0.5, 25.0, 2.72507653324637350e-12),
    (1.0, 0.05, 9.51229424500714016e-01),
    (1.0, 0.5, 6.06530659712633424e-01),
    (1.0, 1.0, 3.67879441171442334e-01),
    (1.0, 3.0, 4.97870683678639445e-02),
    (1.0, 10.0, 4.53999297624848542e-05),
    (1.0, 25.0, 1.38879438649640209e-11),
    (2.5, 0.05, 1.32912461415123584e+00),
    (2.5, 0.5, 1.27957755865651213e+00),
    (2.5, 1.0, 1.12880279188910237e+00),
    (2.5, 3.0, 4.07069175871302980e-01),
    (2.5, 10.0, 1.66131731177946015e-03),
    (2.5, 25.0, 1.84219636950766755e-09),
    (5.0, 0.05, 2.39999999400491681e+01),
    (5.0, 0.5, 2.39958692248810586e+01),
    (5.0, 1.0, 2.39121636761437522e+01),
    (5.0, 3.0, 1.95663178685705290e+01),
    (5.0, 10.0, 7.02064513847065697e-01),
    (5.0, 25.0, 6.40580021977078959e-06),
];

/// `(x, I0(x), I1(x))`.
pub const BESSEL: &[(f64, f64, f64)] = &[
    (0.0, 1.00000000000000000e+00, 0.00000000000000000e+00),
    (0.1, 1.00250156293409565e+00, 5.00625260470926939e-02),
    (1.0, 1.26606587775200841e+00, 5.65159103992485035e-01),
    (2.0, 2.27958530233606727e+00, 1.59063685463732907e+00),
    (5.0, 2.72398718236044459e+01, 2.43356421424505278e+01),
    (10.0, 2.81571662846625441e+03, 2.67098830370125461e+03),
    (20.0, 4.35582825595535338e+07, 4.24549733851277679e+07),
    (50.0, 2.93255378384933618e+20, 2.90307859010355692e+20),
];

/// `(n, c, x, 2F1(-n, -n; c; x))`.
pub const HYP2F1: &[(u32, f64, f64, f64)] = &[
    (0, 3.0, 1.0, 1.00000000000000000e+00),
    (1, 2.0, 0.5, 1.25000000000000000e+00),
    (3, 2.5, 1.0, 6.80952380952380931e+00),
    (5, 0.5, -0.7, 8.17571555555555740e+00),
    (8, 3.25, 0.9, 5.49388823753422230e+02),
    (4, -4.5, 2.0, -8.28571428571428625e-01),
];

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

/// `n` points from `lo` to `hi`, evenly spaced in log scale.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// A transform with its known inverse.
pub struct Pair {
    pub name: &'static str,
    pub transform: TransformFn<f64>,
    pub inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

fn pair(
    name: &'static str,
    abscissa: f64,
    f: impl Fn(C) -> C + Send + Sync + 'static,
    inv: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> Pair {
    Pair { name, transform: TransformFn::new(abscissa, f).unwrap(), inverse: Arc::new(inv) }
}

/// Ten smooth, non-oscillatory pairs; the last seven are the special-function
/// pairs behind the closed-form exit densities.
pub fn corpus() -> Vec<Pair> {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    vec![
        pair("1/s", 0.0, |s| 1.0 / s, |_| 1.0),
        pair("1/s^2", 0.0, |s| 1.0 / (s * s), |t| t),
        pair("1/(s+1)", -1.0, |s| 1.0 / (s + 1.0), |t| (-t).exp()),
        pair("e^(1/s)/s", 0.0, |s| (1.0 / s).exp() / s, |t| bessel_i0(2.0 * t.sqrt()).unwrap()),
        pair("e^(-sqrt s)", 0.0, |s| (-s.sqrt()).exp(), move |t| (-0.25 / t).exp() / (2.0 * sqrt_pi * t.powf(1.5))),
        pair(
            "Gamma(1/2)/s [1 - (1 + s/2)^(-1/2)]",
            // s = 0 is removable; the branch point is the singularity
            -2.0,
            move |s| sqrt_pi / s * (1.0 - (1.0 + s / 2.0).powf(-0.5)),
            |t| gamma_upper(0.5, 2.0 * t).unwrap(),
        ),
        pair("1/(s sqrt(s+1))", 0.0, |s| 1.0 / (s * (s + 1.0).sqrt()), |t| erf(t.sqrt())),
        pair("1/sqrt(s+1)", -1.0, |s| 1.0 / (s + 1.0).sqrt(), move |t| (-t).exp() / (std::f64::consts::PI * t).sqrt()),
        pair(
            "sqrt(s+1)/s",
            0.0,
            |s| (s + 1.0).sqrt() / s,
            move |t| (-t).exp() / (std::f64::consts::PI * t).sqrt() + erf(t.sqrt()),
        ),
        pair(
            "s^(-1/2) e^(-sqrt s)",
            0.0,
            |s| (-s.sqrt()).exp() / s.sqrt(),
            move |t| (-0.25 / t).exp() / (std::f64::consts::PI * t).sqrt(),
        ),
    ]
}

/// One unit-ish parameter set per catalog law.
pub fn all_specs() -> Vec<exitlab::levy::SubordinatorSpec> {
    use exitlab::levy::SubordinatorSpec::*;
    vec![
        GammaStationary { nu: 1.0, alpha: 1.0 },
        GammaBdlp { nu: 1.0, alpha: 1.0 },
        IgStationary { delta: 1.0, gamma: 1.0 },
        IgBdlp { delta: 1.0, gamma: 1.0 },
        PtsStationary { beta: 1.0, gamma: 0.5, k: 1.0 },
        PtsBdlp { beta: 1.0, gamma: 0.5, k: 1.0 },
    ]
}
