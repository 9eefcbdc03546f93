//! The alternating layer recursion: odd layers are sampled on a circle
//! `|zeta| = rho`, even layers are recovered inside it by a Cauchy projection,
//! and the assembled polynomial yields `P_n` and `kappa_n` without any moments.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::contour::{circle_points, ContourGrid};
use crate::family::{m_of_r, mu_of_r, CompositionFamily, FamilyError};
use crate::geometry::CircularDomain;
use crate::oracle::MonicPolynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("degree {n} is not yet asymptotic at rho = {radius}: index value {index_value}, V = {v_estimate}; use a larger n or the moment oracle")]
    NotYetAsymptotic { n: usize, radius: f64, index_value: f64, v_estimate: f64 },
    #[error("family tail contributes up to {estimate}, above the limit {limit}")]
    TailTooLarge { estimate: f64, limit: f64 },
    #[error("|z| = {modulus} exceeds 0.95 rho = {limit}")]
    PointTooCloseToContour { modulus: f64, limit: f64 },
    #[error("contour radius {radius} outside ({low}, {high})")]
    BadRadius { radius: f64, low: f64, high: f64 },
    #[error("grid did not settle by M = {samples}: successive assemblies differ by {difference}")]
    GridNotConverged { samples: usize, difference: f64 },
    #[error(transparent)]
    Family(#[from] FamilyError),
}

pub const CLOSE_TO_CONTOUR: f64 = 0.95;
const NEGLIGIBLE: f64 = 1e-19;

/// An even layer, stored by its Taylor coefficients about the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenLayer {
    radius: f64,
    coeffs: Vec<Complex64>,
}

impl EvenLayer {
    pub fn constant(radius: f64, value: Complex64) -> Self {
        Self { radius, coeffs: vec![value] }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn at_origin(&self) -> Complex64 {
        self.coeffs.first().copied().unwrap_or_default()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64, SeriesError> {
        let limit = CLOSE_TO_CONTOUR * self.radius;
        if z.norm() > limit {
            return Err(SeriesError::PointTooCloseToContour { modulus: z.norm(), limit });
        }
        Ok(self.eval_unchecked(z))
    }

    fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::default(), |acc, &c| acc * z + c)
    }

    /// Bounds for `sup |E|` and `sup |E'|` on `|z| <= r` from the coefficients.
    fn majorants(&self, r: f64) -> (f64, f64) {
        let mut value = 0.0;
        let mut slope = 0.0;
        let mut power = 1.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            value += c.norm() * power;
            if j + 1 < self.coeffs.len() {
                slope += (j + 1) as f64 * self.coeffs[j + 1].norm() * power;
            }
            power *= r;
        }
        (value, slope)
    }
}

/// An odd layer on the contour, with the bound on what the truncated family omits.
#[derive(Debug, Clone, PartialEq)]
pub struct OddLayer {
    pub grid: ContourGrid,
    pub tail_error: f64,
}

/// `sum_tau [E(tau(zeta)) tau(zeta)^{n+1} - E(tau(0)) tau(0)^{n+1}]` on the contour.
pub fn odd_layer(
    domain: &CircularDomain,
    family: &CompositionFamily,
    even: &EvenLayer,
    n: usize,
    radius: f64,
    samples: usize,
) -> Result<OddLayer, SeriesError> {
    let m = m_of_r(domain, radius)?;
    let power = (n + 1) as i32;
    let maps: Vec<_> = family.nontrivial().map(|e| e.map).collect();
    let base: Complex64 = maps
        .iter()
        .map(|t| {
            let w = t.apply(Complex64::default());
            even.eval_unchecked(w) * w.powi(power)
        })
        .sum();
    let values: Vec<Complex64> = circle_points(radius, samples)
        .into_par_iter()
        .map(|zeta| {
            maps.iter()
                .map(|t| {
                    let w = t.apply(zeta);
                    even.eval_unchecked(w) * w.powi(power)
                })
                .sum::<Complex64>()
                - base
        })
        .collect();
    let (sup_e, sup_de) = even.majorants(m);
    let slope = (n + 1) as f64 * sup_e * m.powi(n as i32) + sup_de * m.powi(power);
    let sandwich = 1.0 / (1.0 - radius * domain.rho_a()).powi(2);
    let tail_error = radius * slope * family.tail_bound() * sandwich;
    Ok(OddLayer { grid: ContourGrid::new(radius, values), tail_error })
}

/// `-(1/2 pi i) ∮ O(zeta) zeta^{-n-1} / (zeta - z) d zeta`, kept as Taylor coefficients.
pub fn even_layer(odd: &ContourGrid, n: usize) -> EvenLayer {
    let taylor = odd.taylor_coefficients();
    let len = taylor.len();
    let mut coeffs: Vec<Complex64> = if n + 1 < len {
        // keep the lower half of the remaining modes; the upper half is aliasing
        let usable = (len - n - 1).min(len / 2);
        taylor[n + 1..n + 1 + usable].iter().map(|c| -c).collect()
    } else {
        Vec::new()
    };
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut power = 1.0;
    let mut last = 0;
    for (j, c) in coeffs.iter().enumerate() {
        if c.norm() * power > NEGLIGIBLE * scale.max(1e-300) {
            last = j;
        }
        power *= odd.radius();
    }
    coeffs.truncate(if scale == 0.0 { 1 } else { last + 1 });
    if coeffs.is_empty() {
        coeffs.push(Complex64::default());
    }
    EvenLayer { radius: odd.radius(), coeffs }
}

/// Default contour: midway between the unit circle and `rho_x`, kept inside `(rho_a, 1/rho_a)`.
pub fn default_radius(domain: &CircularDomain) -> f64 {
    let target = domain.rho_x().map_or(1.0, |x| 0.5 * (1.0 + x));
    let (low, high) = admissible_radii(domain);
    target.clamp(low, high)
}

/// The clamping interval `(rho_a + margin, 1/rho_a - margin)`.
pub fn admissible_radii(domain: &CircularDomain) -> (f64, f64) {
    let a = domain.rho_a();
    if a == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let margin = 0.05 * (1.0 / a - a);
    (a + margin, 1.0 / a - margin)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub radius: f64,
    pub m: f64,
    pub m2: f64,
    pub mu: f64,
    pub v_estimate: f64,
    pub index_value: f64,
}

impl Regime {
    pub fn index_assumption_holds(&self) -> bool {
        self.v_estimate < 1.0 && self.index_value < 1.0
    }
}

pub fn regime(
    domain: &CircularDomain,
    family: &CompositionFamily,
    n: usize,
    radius: f64,
) -> Result<Regime, SeriesError> {
    let a = domain.rho_a();
    let high = if a == 0.0 { f64::INFINITY } else { 1.0 / a };
    if !(radius > a && radius < high) {
        return Err(SeriesError::BadRadius { radius, low: a, high });
    }
    let m = m_of_r(domain, radius)?;
    let m2 = m_of_r(domain, m)?;
    let mu = mu_of_r(domain, family, radius)?.value;
    let s = domain.s() as f64;
    let v_estimate = radius * (2.0 * s + mu) * (m / radius).powi(n as i32) / (radius - m);
    let index_value = (n + 1) as f64 * (m2 / m).powi(n as i32);
    Ok(Regime { radius, m, m2, mu, v_estimate, index_value })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    pub radius: Option<f64>,
    /// Fixed number of odd layers beyond the first; adaptive when `None`.
    pub layers: Option<usize>,
    /// Fixed grid size; doubled from `min_samples` when `None`.
    pub samples: Option<usize>,
    pub min_samples: usize,
    pub max_samples: usize,
    pub max_layers: usize,
    pub tol: f64,
    pub grid_tol: f64,
    pub tail_limit: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            radius: None,
            layers: None,
            samples: None,
            min_samples: 256,
            max_samples: 4096,
            max_layers: 64,
            tol: 1e-13,
            grid_tol: 1e-10,
            tail_limit: 1e-8,
        }
    }
}

/// Odd layers `O_0..O_K` and even layers `E_0..E_{K+1}`.
#[derive(Debug, Clone)]
pub struct LayerStack {
    pub n: usize,
    pub regime: Regime,
    pub odd: Vec<OddLayer>,
    pub even: Vec<EvenLayer>,
    pub truncation_error: f64,
    pub tail_error: f64,
}

impl LayerStack {
    pub fn depth(&self) -> usize {
        self.odd.len() - 1
    }

    pub fn samples(&self) -> usize {
        self.odd[0].grid.len()
    }

    /// Samples of `zeta^{n+1} sum E_k + sum O_k` on the contour.
    pub fn assembled(&self) -> ContourGrid {
        let radius = self.regime.radius;
        let points = circle_points(radius, self.samples());
        let power = (self.n + 1) as i32;
        let values = points
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let evens: Complex64 = self.even[..self.odd.len()].iter().map(|e| e.eval_unchecked(z)).sum();
                let odds: Complex64 = self.odd.iter().map(|o| o.grid.samples()[i]).sum();
                z.powi(power) * evens + odds
            })
            .collect();
        ContourGrid::new(radius, values)
    }

    /// Samples of `sum O_k` on the contour.
    pub fn odd_sum(&self) -> ContourGrid {
        let len = self.samples();
        let values = (0..len).map(|i| self.odd.iter().map(|o| o.grid.samples()[i]).sum()).collect();
        ContourGrid::new(self.regime.radius, values)
    }

    /// `sum_k E_k(0)`, which equals `(n+1) kappa_n^{-2}`.
    pub fn even_sum_at_origin(&self) -> Complex64 {
        self.even.iter().map(|e| e.at_origin()).sum()
    }
}

pub fn build_stack(
    domain: &CircularDomain,
    family: &CompositionFamily,
    n: usize,
    config: &SeriesConfig,
    samples: usize,
) -> Result<LayerStack, SeriesError> {
    let radius = config.radius.unwrap_or_else(|| default_radius(domain));
    let regime = regime(domain, family, n, radius)?;
    if regime.index_value >= 1.0 {
        return Err(SeriesError::NotYetAsymptotic {
            n,
            radius,
            index_value: regime.index_value,
            v_estimate: regime.v_estimate,
        });
    }
    let refuse =
        || SeriesError::NotYetAsymptotic { n, radius, index_value: regime.index_value, v_estimate: regime.v_estimate };
    let mut even = vec![EvenLayer::constant(radius, Complex64::new(1.0, 0.0))];
    let mut odd: Vec<OddLayer> = Vec::new();
    let mut norms: Vec<f64> = Vec::new();
    let target = 1e-2 * config.tol;
    let max_layers = config.layers.unwrap_or(config.max_layers);
    let mut truncation_error = f64::INFINITY;
    for k in 0..=max_layers {
        let layer = odd_layer(domain, family, even.last().unwrap(), n, radius, samples)?;
        if layer.tail_error > config.tail_limit {
            return Err(SeriesError::TailTooLarge { estimate: layer.tail_error, limit: config.tail_limit });
        }
        let norm = layer.grid.sup_norm();
        even.push(even_layer(&layer.grid, n));
        odd.push(layer);
        norms.push(norm);
        let observed = if k >= 1 && norms[k - 1] > 0.0 { norm / norms[k - 1] } else { 0.0 };
        if regime.v_estimate >= 1.0 && k >= 1 && norm > 0.0 && observed >= 1.0 {
            return Err(refuse());
        }
        let ratio = if regime.v_estimate < 1.0 { regime.v_estimate.max(observed) } else { observed };
        truncation_error = if norm == 0.0 { 0.0 } else { norm * ratio / (1.0 - ratio) };
        let settled = norm == 0.0 || (k >= 1 && norm / (1.0 - ratio) < target);
        if config.layers.is_none() && settled {
            break;
        }
    }
    let tail_error = odd.iter().map(|o| o.tail_error).sum();
    Ok(LayerStack { n, regime, odd, even, truncation_error, tail_error })
}

#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub poly: MonicPolynomial,
    /// Coefficients `b_0..b_{n-1}` of `P_n` in double precision.
    pub coeffs: Vec<Complex64>,
    pub kappa: f64,
    /// `sum_k E_k(0) = (n+1) kappa_n^{-2}`.
    pub even_sum: Complex64,
    /// `|p_{n+1} - 1|`, the deviation of the assembled polynomial from monic.
    pub monicity: f64,
    /// Largest modulus among the modes above degree `n+1`.
    pub spill: f64,
    pub truncation_error: f64,
    pub tail_error: f64,
    pub samples: usize,
    pub layers: usize,
    pub regime: Regime,
}

fn assemble(stack: &LayerStack, prec: u32) -> SeriesResult {
    let n = stack.n;
    let p = stack.assembled().taylor_coefficients();
    let len = p.len();
    let lead = p[n + 1];
    let coeffs: Vec<Complex64> = (0..n).map(|j| p[j + 1] * ((j + 1) as f64 / (n + 1) as f64)).collect();
    let spill = p[n + 2..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let even_sum = stack.even_sum_at_origin();
    SeriesResult {
        poly: MonicPolynomial::from_c64(&coeffs, prec),
        coeffs,
        kappa: ((n + 1) as f64 / even_sum.re).sqrt(),
        even_sum,
        monicity: (lead - 1.0).norm(),
        spill,
        truncation_error: stack.truncation_error,
        tail_error: stack.tail_error,
        samples: len,
        layers: stack.depth(),
        regime: stack.regime,
    }
}

fn max_difference(a: &SeriesResult, b: &SeriesResult) -> f64 {
    let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    coeffs.max((a.even_sum - b.even_sum).norm())
}

pub const SERIES_PRECISION: u32 = 64;

/// `P_n` and `kappa_n` through the layer series.
pub fn series_orthopoly(
    domain: &CircularDomain,
    family: &CompositionFamily,
    n: usize,
    config: &SeriesConfig,
) -> Result<SeriesResult, SeriesError> {
    let floor = (4 * (n + 2)).next_power_of_two();
    if let Some(m) = config.samples {
        let stack = build_stack(domain, family, n, config, m.max(n + 3))?;
        return Ok(assemble(&stack, SERIES_PRECISION));
    }
    let mut m = config.min_samples.max(floor);
    let mut previous = assemble(&build_stack(domain, family, n, config, m)?, SERIES_PRECISION);
    loop {
        if 2 * m > config.max_samples.max(floor) {
            return Err(SeriesError::GridNotConverged { samples: m, difference: f64::NAN });
        }
        m *= 2;
        let current = assemble(&build_stack(domain, family, n, config, m)?, SERIES_PRECISION);
        let difference = max_difference(&previous, &current);
        if difference < config.grid_tol {
            return Ok(current);
        }
        if 2 * m > config.max_samples.max(floor) {
            return Err(SeriesError::GridNotConverged { samples: m, difference });
        }
        previous = current;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerNorm {
    /// Odd index `2k-1` of the reported layer pair.
    pub k: usize,
    pub odd_sup: f64,
    pub odd_bound: f64,
    /// `|f_{n,2k}|` sampled on `|z| = probe`.
    pub even_sup: f64,
    pub even_bound: f64,
}

/// Per-layer sup-norms alongside the decay bounds `(r - m) r^n V^k` and
/// `(r - m) V^k / ||z| - r|`; even layers are probed on `|z| = m(rho)`.
pub fn layer_norm_report(stack: &LayerStack) -> Vec<LayerNorm> {
    let Regime { radius, m, v_estimate, .. } = stack.regime;
    let probe = m.min(CLOSE_TO_CONTOUR * radius);
    let points = circle_points(probe, 256);
    (1..=stack.odd.len())
        .map(|k| {
            let odd_sup = stack.odd[k - 1].grid.sup_norm();
            let even = &stack.even[k];
            let even_sup = points.iter().map(|&z| even.eval_unchecked(z).norm()).fold(0.0, f64::max);
            let v = v_estimate.powi(k as i32);
            LayerNorm {
                k,
                odd_sup,
                odd_bound: (radius - m) * radius.powi(stack.n as i32) * v,
                even_sup,
                even_bound: (radius - m) * v / (radius - probe),
            }
        })
        .collect()
}
