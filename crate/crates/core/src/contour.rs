//! Samples of an analytic function on a circle `|zeta| = rho` and the
//! trapezoid-rule integrals built from them.

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    radius: f64,
    samples: Vec<Complex64>,
}

/// `rho e^{2 pi i m / M}` for `m = 0..M`.
pub fn circle_points(radius: f64, m: usize) -> Vec<Complex64> {
    (0..m).map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / m as f64)).collect()
}

impl ContourGrid {
    pub fn new(radius: f64, samples: Vec<Complex64>) -> Self {
        Self { radius, samples }
    }

    pub fn sample<F: Fn(Complex64) -> Complex64>(radius: f64, m: usize, f: F) -> Self {
        Self { radius, samples: circle_points(radius, m).into_iter().map(f).collect() }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn points(&self) -> Vec<Complex64> {
        circle_points(self.radius, self.samples.len())
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Discrete Taylor coefficients `a_j ≈ f^{(j)}(0)/j!`, `j = 0..M`, aliased mod `M`.
    pub fn taylor_coefficients(&self) -> Vec<Complex64> {
        let m = self.samples.len();
        let mut buf = self.samples.clone();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let inv_r = 1.0 / self.radius;
        let mut scale = 1.0 / m as f64;
        for v in buf.iter_mut() {
            *v *= scale;
            scale *= inv_r;
        }
        buf
    }

    /// Trapezoid value of `(1/2 pi i) ∮ f(zeta)/(zeta - z) d zeta`.
    pub fn cauchy_eval(&self, z: Complex64) -> Complex64 {
        let m = self.samples.len() as f64;
        self.points().iter().zip(&self.samples).map(|(&p, &f)| f * p / (p - z)).sum::<Complex64>() / m
    }

    /// Trapezoid value of `(1/2 pi i) ∮ g(zeta, f(zeta)) d zeta`.
    pub fn integrate<G: Fn(Complex64, Complex64) -> Complex64>(&self, g: G) -> Complex64 {
        let m = self.samples.len() as f64;
        self.points().iter().zip(&self.samples).map(|(&p, &f)| g(p, f) * p).sum::<Complex64>() / m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_is_spectral_for_rational_function() {
        let pole = Complex64::new(2.0, 0.5);
        let f = |z: Complex64| 1.0 / (pole - z);
        let z = Complex64::new(0.3, -0.4);
        let q = z.norm() / 1.0f64.max((pole.norm() - 1.0) / 1.0 + 1.0);
        for m in [16, 32, 64] {
            let g = ContourGrid::sample(1.0, m, f);
            let err = (g.cauchy_eval(z) - f(z)).norm();
            let pred = 10.0 * (1.0 / pole.norm()).powi(m as i32) + 10.0 * (z.norm()).powi(m as i32);
            assert!(err <= pred.max(1e-15), "{m}: {err} vs {pred} ({q})");
        }
    }

    #[test]
    fn taylor_coefficients_of_polynomial() {
        let g = ContourGrid::sample(1.3, 16, |z| z * z * 3.0 - z + 2.0);
        let a = g.taylor_coefficients();
        assert!((a[0] - 2.0).norm() < 1e-14);
        assert!((a[1] + 1.0).norm() < 1e-14);
        assert!((a[2] - 3.0).norm() < 1e-14);
        assert!(a[3..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn exterior_cauchy_value_vanishes_for_entire_functions() {
        let g = ContourGrid::sample(1.0, 64, |z| z.exp());
        assert!(g.cauchy_eval(Complex64::new(3.0, 0.0)).norm() < 1e-13);
        let one = g.integrate(|p, _| 1.0 / p);
        assert!((one - 1.0).norm() < 1e-15);
    }
}
