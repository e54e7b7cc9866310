//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Panels are bisected in order of largest error estimate until the total
//! estimate meets `max(abs_tol, rel_tol * |value|)`. Known kinks or
//! singularities should be passed as breakpoints so that they sit on panel
//! edges, where the rule never evaluates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and panel budget for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct QuadSettings<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_panels: usize,
}

impl<T: Real> Default for QuadSettings<T> {
    fn default() -> Self {
        Self { abs_tol: T::c(1e-13), rel_tol: T::c(1e-11), max_panels: 2000 }
    }
}

impl<T: Real> QuadSettings<T> {
    pub fn new(abs_tol: T, rel_tol: T) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn with_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }
}

/// Integral value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate<V, E = V> {
    pub value: V,
    pub error: E,
    pub evals: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::c(0.5);
    let center = half * (a + b);
    let hl = half * (b - a);
    let fc = f(center);
    let mut kron = fc * T::c(WGK[7]);
    let mut gauss = fc * T::c(WG[3]);
    let mut abs_k = kron.abs();
    for j in 0..7 {
        let dx = hl * T::c(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron = kron + (f1 + f2) * T::c(WGK[j]);
        abs_k = abs_k + (f1.abs() + f2.abs()) * T::c(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * T::c(WG[j / 2]);
        }
    }
    let value = kron * hl;
    let raw = ((kron - gauss) * hl).abs();
    // QUADPACK-style error scaling
    let mut err = raw;
    if raw > T::zero() {
        err = raw * (T::c(200.0) * raw / (abs_k * hl.abs()).max(T::min_positive_value())).powf(T::c(1.5)).min(T::one());
    }
    let round = T::c(50.0) * T::epsilon() * abs_k * hl.abs();
    (value, err.max(round))
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(f: F, a: T, b: T, settings: &QuadSettings<T>) -> Result<Estimate<T>> {
    integrate_breaks(f, &[a, b], settings)
}

/// Integrate over `[points[0], points.last()]` with the interior points as
/// fixed panel edges.
pub fn integrate_breaks<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    points: &[T],
    settings: &QuadSettings<T>,
) -> Result<Estimate<T>> {
    if points.len() < 2 {
        return Err(Error::InvalidSettings("integration needs at least two points".into()));
    }
    let mut heap = BinaryHeap::new();
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk15(&mut f, w[0], w[1]);
        evals += 15;
        heap.push(Panel { a: w[0], b: w[1], value, error });
    }
    let total = |heap: &BinaryHeap<Panel<T>>| {
        let v: KahanSum<T> = heap.iter().map(|p| p.value).collect();
        let e: KahanSum<T> = heap.iter().map(|p| p.error).collect();
        (v.value(), e.value())
    };
    let (mut value, mut error) = total(&heap);
    while error > settings.abs_tol.max(settings.rel_tol * value.abs()) {
        if heap.len() >= settings.max_panels {
            return Err(Error::BudgetExceeded { partial: value.to_f64_lossy(), bound: error.to_f64_lossy() });
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = T::c(0.5) * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // cannot bisect further; keep the panel and stop refining it
            heap.push(Panel { error: T::zero(), ..worst });
            let (v, e) = total(&heap);
            value = v;
            error = e;
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evals += 30;
        value = value + (v1 + v2 - worst.value);
        error = error + (e1 + e2 - worst.error);
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        if heap.len() % 64 == 0 {
            let (v, e) = total(&heap);
            value = v;
            error = e;
        }
    }
    let (value, error) = total(&heap);
    if !value.is_finite() {
        return Err(Error::BudgetExceeded { partial: value.to_f64_lossy(), bound: f64::INFINITY });
    }
    Ok(Estimate { value, error, evals })
}

/// Integrate `f` over `[a, inf)` via `x = a + u / (1 - u)`.
pub fn integrate_to_inf<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, settings: &QuadSettings<T>) -> Result<Estimate<T>> {
    let g = |u: T| {
        let one_m = T::one() - u;
        if one_m <= T::zero() {
            return T::zero();
        }
        let x = a + u / one_m;
        let v = f(x) / (one_m * one_m);
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    integrate(g, T::zero(), T::one(), settings)
}
