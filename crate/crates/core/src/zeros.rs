//! Zeros of `P_n` and the statistics of their counting measure.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rug::{Complex, Float};
use thiserror::Error;

use crate::asymptotics::{theta, AsymptoticsError};
use crate::geometry::CircularDomain;
use crate::moebius::straightening;
use crate::oracle::{from_c64, to_c64, MonicPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroError {
    #[error("Aberth iteration did not converge in {iterations} steps (largest step {step})")]
    NonConvergence { iterations: usize, step: f64 },
    #[error("polynomial has degree 0")]
    ConstantPolynomial,
    #[error("the two-circle limit needs a single non-concentric hole")]
    NotTwoCircle,
    #[error("winding number is undefined: the function vanishes on or near the circle")]
    ZeroOnContour,
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
}

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalZeroMeasure {
    pub n: usize,
    pub roots: Vec<Complex64>,
    /// `|P(z_k)|` at each root, evaluated at working precision.
    pub residuals: Vec<f64>,
    /// `|P(z_k)| / sum_j |b_j| |z_k|^j`.
    pub relative_residual: f64,
    /// Largest coefficient gap between `prod (z - z_k)` and the input.
    pub reconstruction_error: f64,
    /// Minimum, quartiles and maximum of `|z_k|`.
    pub radial_stats: [f64; 5],
    /// Arguments in `[0, 2 pi)`, sorted.
    pub angular_cdf: Vec<f64>,
    pub iterations: usize,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn measure_from(p: &MonicPolynomial, roots: Vec<Complex>, iterations: usize) -> EmpiricalZeroMeasure {
    let prec = p.precision();
    let n = p.degree();
    let full = p.full_coeffs(prec);
    let mut residuals = Vec::with_capacity(n);
    let mut relative: f64 = 0.0;
    for z in &roots {
        let r = p.eval(z).abs().real().to_f64();
        let modulus = Float::with_val(prec, z.abs_ref());
        let mut scale = Float::with_val(prec, 0);
        let mut power = Float::with_val(prec, 1);
        for c in &full {
            scale += Float::with_val(prec, c.abs_ref()) * &power;
            power *= &modulus;
        }
        relative = relative.max(r / scale.to_f64());
        residuals.push(r);
    }
    let mut product = vec![Complex::with_val(prec, 1)];
    for z in &roots {
        let mut next = vec![Complex::with_val(prec, 0); product.len() + 1];
        for (k, c) in product.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= Complex::with_val(prec, c * z);
        }
        product = next;
    }
    let reconstruction_error = product
        .iter()
        .zip(&full)
        .map(|(a, b)| Complex::with_val(prec, a - b).abs().real().to_f64())
        .fold(0.0, f64::max);
    let roots: Vec<Complex64> = roots.iter().map(to_c64).collect();
    let mut radii: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
    radii.sort_by(f64::total_cmp);
    let radial_stats = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&radii, q));
    let mut angular_cdf: Vec<f64> = roots.iter().map(|z| z.arg().rem_euclid(TAU)).collect();
    angular_cdf.sort_by(f64::total_cmp);
    EmpiricalZeroMeasure {
        n,
        roots,
        residuals,
        relative_residual: relative,
        reconstruction_error,
        radial_stats,
        angular_cdf,
        iterations,
    }
}

pub fn roots(p: &MonicPolynomial) -> Result<EmpiricalZeroMeasure, ZeroError> {
    roots_from(p, None)
}

/// Aberth–Ehrlich iteration started on a circle of the given radius
/// (default `|b_0|^{1/n}`).
pub fn roots_from(p: &MonicPolynomial, radius: Option<f64>) -> Result<EmpiricalZeroMeasure, ZeroError> {
    let n = p.degree();
    if n == 0 {
        return Err(ZeroError::ConstantPolynomial);
    }
    let prec = p.precision();
    if p.coeffs().iter().all(|c| c.is_zero()) {
        return Ok(measure_from(p, vec![Complex::with_val(prec, 0); n], 0));
    }
    let radius = radius.unwrap_or_else(|| {
        let b0 = to_c64(&p.coeffs()[0]).norm();
        if b0 > 0.0 {
            b0.powf(1.0 / n as f64)
        } else {
            1.0
        }
    });
    let mut z: Vec<Complex> =
        (0..n).map(|k| from_c64(Complex64::from_polar(radius, TAU * k as f64 / n as f64 + 0.4), prec)).collect();
    let mut done = vec![false; n];
    let tol = Float::with_val(prec, Float::i_exp(1, -((prec as i32) * 4 / 5)));
    let mut step = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        step = 0.0;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let value = p.eval(&z[k]);
            if value.is_zero() {
                done[k] = true;
                continue;
            }
            let newton = Complex::with_val(prec, &value / p.eval_derivative(&z[k]));
            let mut repulsion = Complex::with_val(prec, 0);
            for (j, zj) in z.iter().enumerate() {
                if j != k {
                    let d = Complex::with_val(prec, &z[k] - zj);
                    if !d.is_zero() {
                        repulsion += d.recip();
                    }
                }
            }
            let denom = Complex::with_val(prec, 1) - Complex::with_val(prec, &newton * &repulsion);
            let w = Complex::with_val(prec, &newton / &denom);
            let size = Float::with_val(prec, w.abs_ref());
            let scale = Float::with_val(prec, z[k].abs_ref()).max(&Float::with_val(prec, 1e-3));
            if size <= Float::with_val(prec, &tol * &scale) {
                done[k] = true;
            }
            step = step.max(size.to_f64());
            z[k] -= w;
        }
        if done.iter().all(|&d| d) {
            return Ok(measure_from(p, z, iteration));
        }
    }
    Err(ZeroError::NonConvergence { iterations: MAX_ITERATIONS, step })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniformity {
    pub ks_distance: f64,
    pub radial_spread: f64,
    /// All roots sit at the origin, so the arguments carry no information.
    pub degenerate: bool,
}

/// Kolmogorov–Smirnov distance of the arguments from the uniform law, and the
/// mean distance of `|z_k|` from `rho`.
pub fn angular_uniformity(measure: &EmpiricalZeroMeasure, rho: f64) -> Uniformity {
    let n = measure.roots.len() as f64;
    let radial_spread = measure.roots.iter().map(|z| (z.norm() - rho).abs()).sum::<f64>() / n;
    let degenerate = measure.roots.iter().all(|z| z.norm() < 1e-12);
    if degenerate {
        return Uniformity { ks_distance: 1.0, radial_spread, degenerate };
    }
    let ks_distance = measure
        .angular_cdf
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let u = t / TAU;
            ((i + 1) as f64 / n - u).max(u - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Uniformity { ks_distance, radial_spread, degenerate }
}

/// `q = log_{sigma^2} n mod 1`, the phase selecting the normal limit along `n`.
pub fn two_circle_phase(domain: &CircularDomain, n: usize) -> Result<f64, ZeroError> {
    let hole = single_hole(domain)?;
    let s2 = hole.sigma * hole.sigma;
    Ok(((n as f64).ln() / s2.ln()).rem_euclid(1.0))
}

fn single_hole(domain: &CircularDomain) -> Result<&crate::geometry::Hole, ZeroError> {
    match domain.holes() {
        [h] if h.a.norm() > 0.0 => Ok(h),
        _ => Err(ZeroError::NotTwoCircle),
    }
}

/// `(Phi'/Phi)(z) Theta_{sigma^2}(sigma^{2q} alpha Phi(z))`.
pub fn two_circle_limit(domain: &CircularDomain, q: f64, z: Complex64) -> Result<Complex64, ZeroError> {
    let hole = single_hole(domain)?;
    let phi = straightening(hole);
    let s2 = hole.sigma * hole.sigma;
    let u = phi.apply(z);
    Ok(phi.derivative(z) / u * theta(s2, s2.powf(q) * hole.alpha() * u)?)
}

/// Zeros of `f` inside `|z| < radius` by the argument principle, sampling until
/// every step turns by less than a quarter turn.
pub fn winding_count<F: Fn(Complex64) -> Complex64>(f: F, radius: f64) -> Result<i64, ZeroError> {
    let mut m = 512;
    while m <= 1 << 20 {
        let values: Vec<Complex64> =
            (0..=m).map(|k| f(Complex64::from_polar(radius, TAU * k as f64 / m as f64))).collect();
        if values.iter().any(|v| v.norm() == 0.0 || !v.is_finite()) {
            return Err(ZeroError::ZeroOnContour);
        }
        let steps: Vec<f64> = values.windows(2).map(|w| (w[1] / w[0]).arg()).collect();
        if steps.iter().all(|s| s.abs() < TAU / 4.0) {
            return Ok((steps.iter().sum::<f64>() / TAU).round() as i64);
        }
        m *= 2;
    }
    Err(ZeroError::ZeroOnContour)
}
