//! Reproducing kernel of the domain as a sum over the composition family, the
//! companion meromorphic kernel, and area quadrature to certify reproduction.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::family::{m_iterate, CompositionFamily};
use crate::geometry::CircularDomain;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("family tail bound {bound:e} exceeds tolerance {tol:e}")]
    TailTooLarge { bound: f64, tol: f64 },
    #[error("point {0} is not inside the unit disk")]
    OutsideDisk(Complex64),
    #[error("zeta coincides with a pole of the meromorphic kernel")]
    PoleHit,
    #[error("quadrature under-resolved: rule estimate {estimate:e} vs residual {residual:e}")]
    UnderResolved { estimate: f64, residual: f64 },
    #[error("quadrature order must be positive")]
    BadOrder,
}

/// Area rule over the domain: a polar Gauss-Legendre by trapezoid rule on the
/// unit disk with the same kind of rule on each hole subtracted. Weights are
/// normalized to `dA = dx dy / pi`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<(Complex64, f64)>,
    orders: (usize, usize),
}

fn disk_nodes(
    center: Complex64,
    radius: f64,
    radial: usize,
    angular: usize,
    sign: f64,
) -> Result<Vec<(Complex64, f64)>, KernelError> {
    let gl = GaussLegendre::new(radial).map_err(|_| KernelError::BadOrder)?;
    let mut out = Vec::with_capacity(radial * angular);
    for (x, w) in gl.nodes().zip(gl.weights()) {
        let rho = radius * (1.0 + x) / 2.0;
        // (1/pi) * (R/2) w * rho * (2 pi / K)
        let weight = sign * radius * w * rho / angular as f64;
        for k in 0..angular {
            let theta = std::f64::consts::TAU * k as f64 / angular as f64;
            out.push((center + Complex64::from_polar(rho, theta), weight));
        }
    }
    Ok(out)
}

impl QuadratureRule {
    pub fn new(domain: &CircularDomain, radial: usize, angular: usize) -> Result<Self, KernelError> {
        if radial == 0 || angular == 0 {
            return Err(KernelError::BadOrder);
        }
        let mut nodes = disk_nodes(Complex64::new(0.0, 0.0), 1.0, radial, angular, 1.0)?;
        for h in domain.holes() {
            nodes.extend(disk_nodes(h.center(), h.radius(), radial, angular, -1.0)?);
        }
        Ok(Self { nodes, orders: (radial, angular) })
    }

    /// Orders integrating `z^n conj(z)^m`, `n, m <= max_degree`, exactly.
    pub fn for_degree(domain: &CircularDomain, max_degree: usize) -> Result<Self, KernelError> {
        Self::new(domain, max_degree + 1, 2 * max_degree + 1)
    }

    /// Rule on a single closed disk.
    pub fn disk(center: Complex64, radius: f64, radial: usize, angular: usize) -> Result<Self, KernelError> {
        Ok(Self { nodes: disk_nodes(center, radius, radial, angular, 1.0)?, orders: (radial, angular) })
    }

    pub fn nodes(&self) -> &[(Complex64, f64)] {
        &self.nodes
    }

    pub fn orders(&self) -> (usize, usize) {
        self.orders
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|(_, w)| w).sum()
    }

    pub fn integrate<F>(&self, f: F) -> Complex64
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let chunk = self.orders.1.max(1);
        let partial: Vec<Complex64> =
            self.nodes.par_chunks(chunk).map(|c| c.iter().map(|&(z, w)| f(z) * w).sum()).collect();
        partial.into_iter().sum()
    }
}

/// `sum_tau tau'(z) / (1 - tau(z) conj(w))^2` with no range checks.
pub fn kernel_series(family: &CompositionFamily, z: Complex64, w: Complex64) -> Complex64 {
    let wc = w.conj();
    family
        .elements()
        .iter()
        .map(|e| {
            let d = Complex64::new(1.0, 0.0) - e.map.apply(z) * wc;
            e.map.derivative(z) / (d * d)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub error_bound: f64,
}

/// Bound on the contribution of the words excluded from the family.
pub fn kernel_tail(domain: &CircularDomain, family: &CompositionFamily, z: Complex64, zeta: Complex64) -> f64 {
    let ra = domain.rho_a();
    let radius = z.norm().max(ra);
    let image = m_iterate(domain, radius, family.max_len() + 1).unwrap_or(1.0);
    let gap = 1.0 - image * zeta.norm();
    if gap <= 0.0 {
        return f64::INFINITY;
    }
    family.tail_bound() / (1.0 - z.norm() * ra).powi(2) / (gap * gap)
}

pub fn kernel_eval(
    domain: &CircularDomain,
    family: &CompositionFamily,
    z: Complex64,
    zeta: Complex64,
    tol: Option<f64>,
) -> Result<KernelValue, KernelError> {
    for p in [z, zeta] {
        if p.norm() >= 1.0 {
            return Err(KernelError::OutsideDisk(p));
        }
    }
    let error_bound = kernel_tail(domain, family, z, zeta);
    if let Some(tol) = tol {
        if error_bound.is_nan() || error_bound > tol {
            return Err(KernelError::TailTooLarge { bound: error_bound, tol });
        }
    }
    Ok(KernelValue { value: kernel_series(family, z, zeta), error_bound })
}

const POLE_GUARD: f64 = 1e-14;

/// `sum_tau (tau(z) - tau(0)) / ((zeta - tau(0)) (zeta - tau(z)))`.
pub fn m_kernel_eval(family: &CompositionFamily, z: Complex64, zeta: Complex64) -> Result<Complex64, KernelError> {
    let mut acc = Complex64::new(0.0, 0.0);
    for e in family.elements() {
        let t0 = e.map.apply(Complex64::new(0.0, 0.0));
        let tz = e.map.apply(z);
        let (d0, dz) = (zeta - t0, zeta - tz);
        if d0.norm() < POLE_GUARD || dz.norm() < POLE_GUARD {
            return Err(KernelError::PoleHit);
        }
        acc += (tz - t0) / (d0 * dz);
    }
    Ok(acc)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproduceReport {
    pub residual: f64,
    /// Change of the integral when both rule orders are halved.
    pub rule_estimate: f64,
    pub kernel_tail: f64,
}

/// `|int f(zeta) K(z, zeta) dA(zeta) - f(z)|` for a polynomial `f` given by
/// ascending coefficients.
pub fn reproduce_check(
    domain: &CircularDomain,
    family: &CompositionFamily,
    f: &[Complex64],
    z: Complex64,
    rule: &QuadratureRule,
) -> Result<ReproduceReport, KernelError> {
    let integrand = |zeta: Complex64| horner(f, zeta) * kernel_series(family, z, zeta);
    let value = rule.integrate(integrand);
    let (nr, na) = rule.orders();
    let coarse = QuadratureRule::new(domain, (nr / 2).max(1), (na / 2).max(1))?.integrate(integrand);
    let residual = (value - horner(f, z)).norm();
    let rule_estimate = (value - coarse).norm();
    if residual > 1e-10 && rule_estimate >= 0.5 * residual {
        return Err(KernelError::UnderResolved { estimate: rule_estimate, residual });
    }
    let sup_f = f.iter().map(|c| c.norm()).sum::<f64>();
    let tail = family.tail_bound() / (1.0 - z.norm() * domain.rho_a()).powi(2) * sup_f;
    Ok(ReproduceReport { residual, rule_estimate, kernel_tail: tail })
}
