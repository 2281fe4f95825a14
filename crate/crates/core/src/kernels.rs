//! Per-axis primitives: the approximate error function, erf-difference
//! tables with their nonzero support, and the matching analytic gradients.
//!
//! A particle's voxel value is the product of three per-axis factors
//! `G[i] * H[j] * L[k]`, where each factor is the one-dimensional Gaussian
//! mass inside the voxel interval along that axis. The `(1/2)^3` prefactor of
//! the erf form is folded into the tables as one factor of `1/2` per axis.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FloatConst};

use crate::error::{GridError, Result};

/// First Bürmann-series coefficient.
pub const BURMANN_C1: f64 = 31.0 / 200.0;
/// Second Bürmann-series coefficient.
pub const BURMANN_C2: f64 = 341.0 / 8000.0;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Floating-point element type of a grid.
pub trait Real: Float + FloatConst + AddAssign + Sum + Default + Debug + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Three-term Bürmann approximation of the error function,
/// `sgn(t) sqrt(1 - e^{-t^2}) (1 + 2/sqrt(pi) (c1 e^{-t^2} - c2 e^{-2t^2}))`.
///
/// Odd, bounded by `[-1, 1]`, and within 3.5e-3 of the true erf. It saturates
/// to exactly 1 once `e^{-t^2}` drops below the type's resolution.
#[inline]
pub fn erf_approx<T: Real>(t: T) -> T {
    let t2 = t * t;
    let e = (-t2).exp();
    let one_minus_e = -(-t2).exp_m1();
    let a = T::from_f64(FRAC_2_SQRT_PI * BURMANN_C1);
    let b = T::from_f64(FRAC_2_SQRT_PI * BURMANN_C2);
    let poly = T::one() + a * e - b * e * e;
    let r = (one_minus_e.sqrt() * poly).min(T::one());
    if t < T::zero() {
        -r
    } else {
        r
    }
}

/// Exact derivative of [`erf_approx`].
#[inline]
pub fn erf_approx_derivative<T: Real>(t: T) -> T {
    let at = t.abs();
    let t2 = t * t;
    let e = (-t2).exp();
    let one_minus_e = -(-t2).exp_m1();
    let a = T::from_f64(FRAC_2_SQRT_PI * BURMANN_C1);
    let b = T::from_f64(FRAC_2_SQRT_PI * BURMANN_C2);
    let two = T::from_f64(2.0);
    let poly = T::one() + a * e - b * e * e;
    let root = one_minus_e.sqrt();
    // |t| / sqrt(1 - e^{-t^2}) -> 1 as t -> 0
    let ratio = if root > T::zero() { at / root } else { T::one() };
    ratio * e * poly - two * at * e * root * (a - two * b * e)
}

/// One axis worth of voxel masses for a single particle.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisTable<T = f32> {
    pub values: Vec<T>,
    /// Start of the nonzero support.
    pub lo: usize,
    /// End (exclusive) of the nonzero support.
    pub hi: usize,
    /// Number of erf evaluations spent building the table.
    pub erf_evals: usize,
}

impl<T: Real> AxisTable<T> {
    fn from_values(values: Vec<T>, erf_evals: usize) -> Self {
        let mut table = Self { values, lo: 0, hi: 0, erf_evals };
        table.set_support(T::zero());
        table
    }

    /// Shrinks the support to the tightest interval whose values exceed
    /// `threshold` (zero means saturation only).
    pub fn set_support(&mut self, threshold: T) {
        let keep = |v: &T| *v > threshold;
        match self.values.iter().position(keep) {
            Some(lo) => {
                let hi = self.values.iter().rposition(keep).map_or(lo, |i| i + 1);
                self.lo = lo;
                self.hi = hi;
            }
            None => {
                self.lo = 0;
                self.hi = 0;
            }
        }
    }

    pub fn support(&self) -> std::ops::Range<usize> {
        self.lo..self.hi
    }

    pub fn support_len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn total(&self) -> f64 {
        self.values.iter().map(|v| v.as_f64()).sum()
    }
}

fn check_axis(delta: f64, n: usize, sigma: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(GridError::InvalidSpec(format!("voxel width {delta} must be positive")));
    }
    if n == 0 {
        return Err(GridError::InvalidSpec("axis needs at least one voxel".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(GridError::InvalidSpec(format!("sigma {sigma} must be positive")));
    }
    Ok(())
}

#[inline]
fn erf_scale(sigma: f64) -> f64 {
    std::f64::consts::SQRT_2 / (2.0 * sigma)
}

/// Adds the masses of a Gaussian at `mu` over voxels `origin + i * delta`.
/// Each interior edge is evaluated once and shared by its two voxels.
fn accumulate_masses<T: Real>(out: &mut [T], mu: f64, origin: f64, delta: f64, sigma: f64) {
    let scale = erf_scale(sigma);
    let offset = origin - mu;
    let half = T::from_f64(0.5);
    let mut prev = erf_approx(T::from_f64(offset * scale));
    for (i, v) in out.iter_mut().enumerate() {
        let edge = offset + (i + 1) as f64 * delta;
        let cur = erf_approx(T::from_f64(edge * scale));
        *v += half * (cur - prev).abs();
        prev = cur;
    }
}

fn accumulate_gradient<T: Real>(out: &mut [T], mu: f64, origin: f64, delta: f64, sigma: f64) {
    let scale = erf_scale(sigma);
    let offset = origin - mu;
    // d/dmu of 0.5 * (erf(t_{i+1}) - erf(t_i)) with t = (x - mu) * scale
    let factor = T::from_f64(0.5 * scale);
    let mut prev = erf_approx_derivative(T::from_f64(offset * scale));
    for (i, g) in out.iter_mut().enumerate() {
        let edge = offset + (i + 1) as f64 * delta;
        let cur = erf_approx_derivative(T::from_f64(edge * scale));
        *g += factor * (prev - cur);
        prev = cur;
    }
}

/// Per-voxel Gaussian masses along one open axis.
pub fn axis_table<T: Real>(mu: f64, origin: f64, delta: f64, n: usize, sigma: f64) -> Result<AxisTable<T>> {
    check_axis(delta, n, sigma)?;
    let mut values = vec![T::zero(); n];
    accumulate_masses(&mut values, mu, origin, delta, sigma);
    Ok(AxisTable::from_values(values, n + 1))
}

fn check_periodic(edge: f64, delta: f64, n: usize, sigma: f64) -> Result<()> {
    check_axis(delta, n, sigma)?;
    if ((n as f64) * delta - edge).abs() > 1e-9 * edge {
        return Err(GridError::InvalidSpec(format!("periodic axis must cover the cell: {n} x {delta} != {edge}")));
    }
    if sigma * 6.0 >= edge {
        return Err(GridError::SigmaTooLargeForCell { sigma, edge });
    }
    Ok(())
}

/// Per-voxel masses along a periodic axis `[0, edge)`: the sum of the
/// particle and its two nearest lattice images.
pub fn axis_table_periodic<T: Real>(mu: f64, edge: f64, delta: f64, n: usize, sigma: f64) -> Result<AxisTable<T>> {
    check_periodic(edge, delta, n, sigma)?;
    let mut values = vec![T::zero(); n];
    for m in [-1.0, 0.0, 1.0] {
        accumulate_masses(&mut values, mu + m * edge, 0.0, delta, sigma);
    }
    Ok(AxisTable::from_values(values, 3 * (n + 1)))
}

/// `d values[i] / d mu` for [`axis_table`].
pub fn axis_gradient<T: Real>(mu: f64, origin: f64, delta: f64, n: usize, sigma: f64) -> Result<Vec<T>> {
    check_axis(delta, n, sigma)?;
    let mut grad = vec![T::zero(); n];
    accumulate_gradient(&mut grad, mu, origin, delta, sigma);
    Ok(grad)
}

/// `d values[i] / d mu` for [`axis_table_periodic`].
pub fn axis_gradient_periodic<T: Real>(mu: f64, edge: f64, delta: f64, n: usize, sigma: f64) -> Result<Vec<T>> {
    check_periodic(edge, delta, n, sigma)?;
    let mut grad = vec![T::zero(); n];
    for m in [-1.0, 0.0, 1.0] {
        accumulate_gradient(&mut grad, mu + m * edge, 0.0, delta, sigma);
    }
    Ok(grad)
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Reference implementations that share no code with the kernels.

    /// erf via its Maclaurin series for |x| < 3 and the Laplace continued
    /// fraction for erfc beyond.
    pub fn erf(x: f64) -> f64 {
        let ax = x.abs();
        let v = if ax < 3.0 {
            let mut term = ax;
            let mut sum = ax;
            let x2 = ax * ax;
            let mut n = 0.0;
            loop {
                n += 1.0;
                term *= -x2 / n;
                let add = term / (2.0 * n + 1.0);
                sum += add;
                if add.abs() <= 1e-17 * sum.abs() || n > 300.0 {
                    break;
                }
            }
            sum * 2.0 / std::f64::consts::PI.sqrt()
        } else {
            // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
            let mut f = ax;
            for k in (1..200).rev() {
                f = ax + (k as f64 / 2.0) / f;
            }
            1.0 - (-ax * ax).exp() / std::f64::consts::PI.sqrt() / f
        };
        v.copysign(x)
    }

    /// Gaussian mass in `[a, b]` by composite Simpson quadrature.
    pub fn gaussian_mass(mu: f64, sigma: f64, a: f64, b: f64) -> f64 {
        let n = 2000;
        let h = (b - a) / n as f64;
        let pdf = |x: f64| {
            (-(x - mu) * (x - mu) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut s = pdf(a) + pdf(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
        }
        s * h / 3.0
    }
}
