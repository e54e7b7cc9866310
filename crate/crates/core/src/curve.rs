//! Uniform grids and sampled densities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{KahanSum, Real};

/// `count` points `start + i * step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub start: T,
    pub step: T,
    pub count: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(start: T, step: T, count: usize) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidSettings(format!("grid step must be positive, got {step}")));
        }
        if !(start >= T::zero()) || !start.is_finite() {
            return Err(Error::InvalidSettings(format!("grid start must be non-negative, got {start}")));
        }
        if count == 0 {
            return Err(Error::InvalidSettings("grid needs at least one point".into()));
        }
        Ok(Self { start, step, count })
    }

    /// Grid covering `[0, end]` with the given step (the end is rounded up).
    pub fn from_zero(end: T, step: T) -> Result<Self> {
        let n = (end / step).ceil().to_usize().unwrap_or(0) + 1;
        Self::new(T::zero(), step, n)
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        self.start + T::from_usize_lossy(i) * self.step
    }

    pub fn end(&self) -> T {
        self.at(self.count - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.count).map(|i| self.at(i))
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.count == other.count
            && (self.start - other.start).abs() <= T::epsilon() * self.step
            && (self.step - other.step).abs() <= T::epsilon() * T::c(16.0) * self.step
    }
}

impl<T: Real> fmt::Display for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.step, self.count)
    }
}

/// Parses `start:step:n`.
impl FromStr for Grid<f64> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidSettings(format!("grid `{s}` is not start:step:n")));
        }
        let num = |p: &str, what: &str| {
            p.trim().parse::<f64>().map_err(|_| Error::InvalidSettings(format!("grid {what} `{p}` is not a number")))
        };
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidSettings(format!("grid count `{}` is not an integer", parts[2])))?;
        Grid::new(num(parts[0], "start")?, num(parts[1], "step")?, count)
    }
}

/// A function sampled on a uniform grid, optionally with a point mass at the
/// grid origin (compound-Poisson laws put mass on "no jump yet").
///
/// A curve may also blow up like `tau^{-singular}` at a grid starting at 0.
/// In that case `values[0]` holds the coefficient `lim tau^singular f(tau)`
/// rather than a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
    pub atom: T,
    #[serde(default)]
    pub singular: T,
}

impl<T: Real> DensityCurve<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.count {
            return Err(Error::GridMismatch(format!("{} values for {} grid points", values.len(), grid.count)));
        }
        Ok(Self { grid, values, atom: T::zero(), singular: T::zero() })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values, atom: T::zero(), singular: T::zero() }
    }

    pub fn with_atom(mut self, atom: T) -> Self {
        self.atom = atom;
        self
    }

    /// Marks a `coef * tau^{-beta}` singularity at the origin, `0 <= beta < 1`.
    pub fn with_singularity(mut self, beta: T, coef: T) -> Result<Self> {
        if !(beta >= T::zero() && beta < T::one()) {
            return Err(Error::InvalidSettings(format!("singular exponent must lie in [0, 1), got {beta}")));
        }
        if beta > T::zero() && self.grid.start != T::zero() {
            return Err(Error::InvalidSettings("a singular curve needs a grid starting at 0".into()));
        }
        self.singular = beta;
        self.values[0] = coef;
        Ok(self)
    }

    pub fn is_singular(&self) -> bool {
        self.singular > T::zero()
    }

    /// `tau^singular f(tau)` at grid point `i`: bounded near the origin.
    pub fn regular_part(&self, i: usize) -> T {
        if !self.is_singular() || i == 0 {
            self.values[i]
        } else {
            self.values[i] * self.grid.at(i).powf(self.singular)
        }
    }

    /// `f(tau) - coef tau^{-singular}` at grid point `i`, bounded near the
    /// origin; its value at 0 is taken from the first interior point.
    pub fn remainder(&self, i: usize) -> T {
        if !self.is_singular() {
            return self.values[i];
        }
        let i = i.max(1);
        self.values[i] - self.values[0] * self.grid.at(i).powf(-self.singular)
    }

    // int_0^tau coef s^{-singular} ds
    fn singular_integral(&self, tau: T) -> T {
        if !self.is_singular() {
            return T::zero();
        }
        let one_b = T::one() - self.singular;
        self.values[0] * tau.powf(one_b) / one_b
    }

    /// Integral of the sampled part plus the atom: the singular term exactly,
    /// the remainder by the trapezoid rule.
    pub fn mass(&self) -> T {
        self.cdf().last().copied().unwrap_or(self.atom)
    }

    /// Running integral plus the atom, one entry per grid point.
    pub fn cdf(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = KahanSum::new();
        acc.add(self.atom);
        out.push(acc.value());
        let half = self.grid.step * T::c(0.5);
        for i in 1..self.values.len() {
            acc.add(half * (self.remainder(i - 1) + self.remainder(i)));
            out.push(acc.value() + self.singular_integral(self.grid.at(i) - self.grid.start));
        }
        out
    }

    /// Sets tiny negative samples (above `-tol`) to zero and returns how many
    /// samples were below `-tol`.
    pub fn clamp_negative(&mut self, tol: T) -> usize {
        let mut bad = 0;
        let mut clamped = 0;
        let skip = usize::from(self.is_singular());
        for v in self.values.iter_mut().skip(skip) {
            if *v < T::zero() {
                if *v >= -tol {
                    *v = T::zero();
                    clamped += 1;
                } else {
                    bad += 1;
                }
            }
        }
        if clamped > 0 {
            log::warn!("clamped {clamped} slightly negative density samples to zero");
        }
        if bad > 0 {
            log::warn!("{bad} density samples are negative beyond tolerance {tol}");
        }
        bad
    }
}

/// Trapezoid rule on uniform spacing.
pub fn trapezoid<T: Real>(values: &[T], step: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let mut acc: KahanSum<T> = values[1..n - 1].iter().copied().collect();
            acc.add(T::c(0.5) * (values[0] + values[n - 1]));
            acc.value() * step
        }
    }
}
