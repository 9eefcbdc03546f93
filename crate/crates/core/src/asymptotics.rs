//! Large-`n` predictions for `kappa_n`, for `P_n` outside and inside the
//! critical circles, and the contour integrals behind them.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::RwLock;

use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::family::CompositionFamily;
use crate::geometry::{CircularDomain, CriticalData, Extended, GeometryError, Hole};
use crate::moebius::{contraction, straightening, MoebiusMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("z coincides with the critical point x_{index}")]
    AtPole { index: usize },
    #[error("|w| = {modulus} outside the analyticity guard {guard}")]
    BranchGuard { modulus: f64, guard: f64 },
    #[error("|z| = {modulus} does not exceed rho_x = {rho_x}")]
    InsideRhoX { modulus: f64, rho_x: f64 },
    #[error("|z| = {modulus} lies on the integration circle")]
    OnContour { modulus: f64 },
    #[error("theta needs Re t < 0 and 0 < sigma < 1, got t = {t}, sigma = {sigma}")]
    DomainError { t: Complex64, sigma: f64 },
    #[error("z is within {distance} of the fixed point a_{index}")]
    TooCloseToAj { index: usize, distance: f64 },
    #[error("z is the exceptional point a_{index}")]
    OnExceptionalPoint { index: usize },
    #[error("hole {index} is centered at the origin and has no critical point")]
    Concentric { index: usize },
    #[error("hole {index} does not attain rho_a")]
    NotDominant { index: usize },
    #[error("trapezoid sum did not settle with {samples} nodes")]
    Unresolved { samples: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

const EXCEPTIONAL: f64 = 1e-8;

fn critical(domain: &CircularDomain, j: usize) -> Result<(&Hole, CriticalData), AsymptoticsError> {
    let hole = domain.hole(j)?;
    let data = hole.critical.ok_or(AsymptoticsError::Concentric { index: j })?;
    Ok((hole, data))
}

/// Analyticity radius of `w -> R_j(w, z)` about `w = 0`.
fn guard(hole: &Hole, data: &CriticalData, z: Complex64) -> f64 {
    let x = data.x;
    let lin = Complex64::new(1.0, 0.0) - z / x;
    match data.y {
        Extended::Finite(y) if !hole.is_degenerate() => {
            let t = (y / x).re;
            let slope = 1.0 - 2.0 * z / (y + x);
            let root = if slope.norm() == 0.0 { f64::INFINITY } else { (lin * lin / slope).norm() };
            (t * t - 1.0).abs().min(root)
        }
        _ => lin.norm_sqr(),
    }
}

fn r_unchecked(hole: &Hole, data: &CriticalData, w: Complex64, z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let x = data.x;
    let lin = one - z / x;
    match data.y {
        Extended::Finite(y) if !hole.is_degenerate() => {
            let t = y / x;
            let lead = data.epsilon as f64 * (t - 1.0) / (t * t - 1.0 - w).sqrt();
            let num =
                lin + w * ((y - 2.0 * x) / (y - x) + (y * y + x * x) / (y * y - x * x) * z / x) - x * w * w / (y - x);
            let den = lin * lin + w * (one - 2.0 * z / (y + x));
            lead * num / den
        }
        _ => -(lin + w * (one + z / x)) / (lin * lin + w),
    }
}

/// `R_j(w, z)`, using the special branch when the boundary passes through the origin.
pub fn r_function(
    domain: &CircularDomain,
    j: usize,
    w: Complex64,
    z: Complex64,
) -> Result<Complex64, AsymptoticsError> {
    let (hole, data) = critical(domain, j)?;
    if (z - data.x).norm() <= 1e-14 * data.x.norm() {
        return Err(AsymptoticsError::AtPole { index: j });
    }
    let g = guard(hole, &data, z);
    if w.norm() >= g {
        return Err(AsymptoticsError::BranchGuard { modulus: w.norm(), guard: g });
    }
    Ok(r_unchecked(hole, &data, w, z))
}

pub const R_SAMPLES: usize = 128;

/// Maclaurin coefficients `R_{j,0..=K}(z)` from a trapezoid sum on half the guard radius.
pub fn r_coefficients(
    domain: &CircularDomain,
    j: usize,
    z: Complex64,
    k_max: usize,
) -> Result<Vec<Complex64>, AsymptoticsError> {
    let (hole, data) = critical(domain, j)?;
    if (z - data.x).norm() <= 1e-14 * data.x.norm() {
        return Err(AsymptoticsError::AtPole { index: j });
    }
    let rad = 0.5 * guard(hole, &data, z);
    let values: Vec<(Complex64, Complex64)> = (0..R_SAMPLES)
        .map(|m| {
            let w = Complex64::from_polar(rad, TAU * m as f64 / R_SAMPLES as f64);
            (w, r_unchecked(hole, &data, w, z))
        })
        .collect();
    Ok((0..=k_max)
        .map(|k| values.iter().map(|(w, v)| v * w.powi(-(k as i32))).sum::<Complex64>() / R_SAMPLES as f64)
        .collect())
}

/// `R_{j,k}(0)` in closed form.
pub fn r_coefficient_at_origin(domain: &CircularDomain, j: usize, k: usize) -> Result<f64, AsymptoticsError> {
    let (hole, data) = critical(domain, j)?;
    if hole.is_degenerate() {
        return Ok(if k == 0 { -1.0 } else { 0.0 });
    }
    let t = (data.y.finite().unwrap() / data.x).re;
    let kf = k as f64;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(data.epsilon as f64 * sign * binomial_half(k) * (2.0 * kf * t + 1.0) * (t - 1.0) / (t * t - 1.0).powf(kf + 0.5))
}

/// `binom(1/2, k)`.
pub fn binomial_half(k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (0.5 - i as f64) / (i + 1) as f64)
}

/// `ln[Gamma(k + 1/2) Gamma(n - k + 3/2) / Gamma(n + 2)]`.
pub fn gamma_ratio_log(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    ln_gamma(k + 0.5) + ln_gamma(n - k + 1.5) - ln_gamma(n + 2.0)
}

/// `C_k(z)`: the sum of `R_{j,k}(z)` over the holes with `|x_j| = rho_x`.
pub fn c_coefficients(domain: &CircularDomain, z: Complex64, k_max: usize) -> Result<Vec<Complex64>, AsymptoticsError> {
    let mut total = vec![Complex64::default(); k_max + 1];
    for j in domain.dominant_x() {
        for (acc, r) in total.iter_mut().zip(r_coefficients(domain, j, z, k_max)?) {
            *acc += r;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionValue {
    /// Value the corrections are added to: 1 for `(n+1) kappa_n^{-2}`, 0 otherwise.
    pub base: f64,
    pub prefactor: f64,
    pub terms: Vec<Complex64>,
    pub partial_sums: Vec<Complex64>,
    pub gamma_factors: Vec<f64>,
    /// Index of the last term kept (smallest term or `K`).
    pub truncation_index: usize,
    /// Holes tied at `rho_x` whose boundary passes through the origin.
    pub degenerate: Vec<usize>,
}

impl ExpansionValue {
    pub fn value(&self) -> Complex64 {
        self.partial_sums[self.truncation_index]
    }

    /// Sum of the kept terms, free of the cancellation in `value() - base`.
    pub fn correction(&self) -> Complex64 {
        self.terms[..=self.truncation_index].iter().sum()
    }

    fn build(base: f64, prefactor: f64, coeffs: &[Complex64], n: usize, degenerate: Vec<usize>) -> Self {
        let gamma_factors: Vec<f64> = (0..coeffs.len()).map(|k| gamma_ratio_log(n, k)).collect();
        let terms: Vec<Complex64> = coeffs.iter().zip(&gamma_factors).map(|(c, g)| c * (prefactor * g.exp())).collect();
        let mut partial_sums = Vec::with_capacity(terms.len());
        let mut acc = Complex64::new(base, 0.0);
        for t in &terms {
            acc += t;
            partial_sums.push(acc);
        }
        let mut truncation_index = terms.len() - 1;
        for k in 1..terms.len() {
            if terms[k].norm() > terms[k - 1].norm() && terms[k - 1].norm() > 0.0 {
                truncation_index = k - 1;
                break;
            }
        }
        Self { base, prefactor, terms, partial_sums, gamma_factors, truncation_index, degenerate }
    }
}

fn degenerate_ties(domain: &CircularDomain) -> Vec<usize> {
    domain.dominant_x().into_iter().filter(|&j| domain.holes()[j].is_degenerate()).collect()
}

/// `(n+1) kappa_n^{-2} ~ 1 + rho_x^{-2n-2}/(2 pi) sum_k C_k(0) Gamma-ratio_k`.
pub fn kappa_expansion(domain: &CircularDomain, n: usize, k_max: usize) -> Result<ExpansionValue, AsymptoticsError> {
    let Some(rx) = domain.rho_x() else {
        return Ok(ExpansionValue::build(1.0, 0.0, &[Complex64::default()], n, Vec::new()));
    };
    let k_max = k_max.min(n);
    let mut coeffs = vec![Complex64::default(); k_max + 1];
    for j in domain.dominant_x() {
        for (k, acc) in coeffs.iter_mut().enumerate() {
            *acc += r_coefficient_at_origin(domain, j, k)?;
        }
    }
    let prefactor = rx.powi(-2 * n as i32 - 2) / TAU;
    Ok(ExpansionValue::build(1.0, prefactor, &coeffs, n, degenerate_ties(domain)))
}

/// The explicit term of the degenerate configuration: `-rho_x^{-2n-2} Gamma(n+3/2) / (2 sqrt(pi) Gamma(n+2))`.
pub fn degenerate_correction(rho_x: f64, n: usize) -> f64 {
    let nf = n as f64;
    -(-(2.0 * nf + 2.0) * rho_x.ln() + ln_gamma(nf + 1.5) - ln_gamma(nf + 2.0)).exp() / (2.0 * PI.sqrt())
}

/// `P_n(z)/z^n - 1 ~ rho_x^{-2n-2}/(2 pi) sum_k C_k(z) Gamma-ratio_k` for `|z| > rho_x`.
pub fn exterior_expansion(
    domain: &CircularDomain,
    n: usize,
    z: Complex64,
    k_max: usize,
) -> Result<ExpansionValue, AsymptoticsError> {
    let Some(rx) = domain.rho_x() else {
        return Ok(ExpansionValue::build(0.0, 0.0, &[Complex64::default()], n, Vec::new()));
    };
    if z.norm() <= rx {
        return Err(AsymptoticsError::InsideRhoX { modulus: z.norm(), rho_x: rx });
    }
    let coeffs = c_coefficients(domain, z, k_max.min(n))?;
    let prefactor = rx.powi(-2 * n as i32 - 2) / TAU;
    Ok(ExpansionValue::build(0.0, prefactor, &coeffs, n, degenerate_ties(domain)))
}

/// Trapezoid value of `(1/2 pi i) ∮_{|zeta| = radius} f(zeta) d zeta` with nodes
/// starting at angle `offset`, doubled until successive values agree.
fn circle_integral<F>(radius: f64, offset: f64, f: F) -> Result<Complex64, AsymptoticsError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let node = |theta: f64| {
        let zeta = Complex64::from_polar(radius, offset + theta);
        f(zeta) * zeta
    };
    let mut m = 256usize;
    let first: Vec<Complex64> = (0..m).into_par_iter().map(|k| node(TAU * k as f64 / m as f64)).collect();
    let mut sum: Complex64 = first.iter().sum();
    let mut mass: f64 = 0.0;
    let mut value = sum / m as f64;
    while m < 1 << 22 {
        let odd: Vec<Complex64> =
            (0..m).into_par_iter().map(|k| node(TAU * (2 * k + 1) as f64 / (2 * m) as f64)).collect();
        mass = mass.max(odd.iter().map(|v| v.norm()).sum::<f64>() / m as f64);
        sum += odd.iter().sum::<Complex64>();
        m *= 2;
        let next = sum / m as f64;
        let diff = (next - value).norm();
        value = next;
        if diff <= 1e-14 * value.norm() || diff <= 1e-16 * mass {
            return Ok(value);
        }
    }
    Err(AsymptoticsError::Unresolved { samples: m })
}

/// `I_n(z) = (1/2 pi i) ∮_{|zeta| = |x_j|} T_j'(zeta) (T_j(zeta)/zeta)^n / (zeta - z) d zeta`.
pub fn i_n_integral(domain: &CircularDomain, j: usize, n: usize, z: Complex64) -> Result<Complex64, AsymptoticsError> {
    let (hole, data) = critical(domain, j)?;
    let radius = data.x.norm();
    if (z.norm() - radius).abs() <= 1e-12 * radius {
        return Err(AsymptoticsError::OnContour { modulus: z.norm() });
    }
    let t = contraction(hole);
    let power = n as i32;
    circle_integral(radius, data.x.arg(), |zeta| t.derivative(zeta) * (t.apply(zeta) / zeta).powi(power) / (zeta - z))
}

/// The expansion paired with [`i_n_integral`]: `-|x_j|^{-2n-2}/(2 pi) sum_k R_{j,k}(z) Gamma-ratio_k`.
pub fn i_n_expansion(
    domain: &CircularDomain,
    j: usize,
    n: usize,
    z: Complex64,
    k_max: usize,
) -> Result<ExpansionValue, AsymptoticsError> {
    let (_, data) = critical(domain, j)?;
    let coeffs = r_coefficients(domain, j, z, k_max.min(n))?;
    let prefactor = -data.x.norm().powi(-2 * n as i32 - 2) / TAU;
    Ok(ExpansionValue::build(0.0, prefactor, &coeffs, n, Vec::new()))
}

/// `chi_n(z) = (1/2 pi i) ∮ T_j'(zeta) [g(zeta)^n - g(z)^n] / (zeta - z) d zeta` with `g(w) = T_j(w)/w`.
pub fn chi_n(domain: &CircularDomain, j: usize, n: usize, z: Complex64) -> Result<Complex64, AsymptoticsError> {
    let (_, data) = critical(domain, j)?;
    Ok(chi_n_scaled(domain, j, n, z)? * data.x.norm().powi(-2 * n as i32 - 2))
}

/// `|x_j|^{2n+2} chi_n(z)`, computed with `g` rescaled by `|x_j|^2` so large `n` cannot underflow.
pub fn chi_n_scaled(domain: &CircularDomain, j: usize, n: usize, z: Complex64) -> Result<Complex64, AsymptoticsError> {
    let (hole, data) = critical(domain, j)?;
    let radius = data.x.norm();
    let lift = radius * radius;
    let t = contraction(hole);
    let g = |w: Complex64| lift * t.apply(w) / w;
    let power = n as i32;
    let gz = g(z).powi(power);
    let slope = if n == 0 {
        Complex64::default()
    } else {
        let dg = lift * (t.derivative(z) * z - t.apply(z)) / (z * z);
        n as f64 * g(z).powi(power - 1) * dg
    };
    let offset = if z.norm() > 0.0 { z.arg() } else { 0.0 };
    let value = circle_integral(radius, offset, |zeta| {
        let q = if (zeta - z).norm() < 1e-8 * radius { slope } else { (g(zeta).powi(power) - gz) / (zeta - z) };
        t.derivative(zeta) * q
    })?;
    Ok(value * lift)
}

/// `Theta_sigma(t) = t sum_{v in Z} sigma^v exp(sigma^v t)` for `Re t < 0`.
pub fn theta(sigma: f64, t: Complex64) -> Result<Complex64, AsymptoticsError> {
    if !(t.re < 0.0 && sigma > 0.0 && sigma < 1.0) {
        return Err(AsymptoticsError::DomainError { t, sigma });
    }
    let ln_s = sigma.ln();
    let centre = (-(-t.re).ln() / ln_s).round() as i64;
    let term = |v: i64| {
        let s = (v as f64 * ln_s).exp();
        s * (t * s).exp()
    };
    let mut sum = term(centre);
    let mut peak = sum.norm();
    for dir in [1i64, -1] {
        let mut v = centre + dir;
        loop {
            let x = term(v);
            sum += x;
            peak = peak.max(x.norm());
            if x.norm() < 1e-18 * peak || (v - centre).abs() > 1_000_000 {
                break;
            }
            v += dir;
        }
    }
    Ok(t * sum)
}

/// `Theta_sigma` with memoized evaluations.
#[derive(Debug)]
pub struct ThetaFunction {
    sigma: f64,
    cache: RwLock<HashMap<(u64, u64), Complex64>>,
}

impl ThetaFunction {
    pub fn new(sigma: f64) -> Result<Self, AsymptoticsError> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(AsymptoticsError::DomainError { t: Complex64::new(-1.0, 0.0), sigma });
        }
        Ok(Self { sigma, cache: RwLock::new(HashMap::new()) })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn eval(&self, t: Complex64) -> Result<Complex64, AsymptoticsError> {
        let key = (t.re.to_bits(), t.im.to_bits());
        if let Some(v) = self.cache.read().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = theta(self.sigma, t)?;
        self.cache.write().unwrap().insert(key, v);
        Ok(v)
    }
}

fn log_derivative(phi: &MoebiusMap, z: Complex64) -> Complex64 {
    phi.derivative(z) / phi.apply(z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSum {
    /// `sum_{v >= 1} (T_j^v(z))^n (T_j^v)'(z)` by direct summation.
    pub direct: Complex64,
    /// `(a_j^{n+1}/n) (Phi_j'/Phi_j)(z) Theta_{sigma_j^2}(n alpha_j Phi_j(z))`.
    pub predicted: Complex64,
    pub terms: usize,
}

pub fn tjv_tail_sum(domain: &CircularDomain, j: usize, n: usize, z: Complex64) -> Result<TailSum, AsymptoticsError> {
    let hole = domain.hole(j)?;
    let a = hole.a;
    if a.norm() == 0.0 {
        return Err(AsymptoticsError::Concentric { index: j });
    }
    let distance = (z - a).norm();
    if distance < EXCEPTIONAL {
        return Err(AsymptoticsError::TooCloseToAj { index: j, distance });
    }
    let phi = straightening(hole);
    let inv = phi.inverse();
    let s2 = hole.sigma * hole.sigma;
    let u = phi.apply(z);
    let du = phi.derivative(z);
    let power = n as i32;
    let mut direct = Complex64::default();
    let mut scale = 1.0;
    let mut terms = 0;
    for _ in 0..1_000_000 {
        scale *= s2;
        let w = inv.apply(scale * u);
        let term = w.powi(power) * inv.derivative(scale * u) * scale * du;
        direct += term;
        terms += 1;
        if scale < 1e-18 && term.norm() <= 1e-18 * direct.norm() {
            break;
        }
    }
    let nf = n as f64;
    let predicted = a.powi(power + 1) / nf * log_derivative(&phi, z) * theta(s2, nf * hole.alpha() * u)?;
    Ok(TailSum { direct, predicted, terms })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValue {
    pub value: Complex64,
    /// Largest summand modulus times the family tail bound.
    pub tail: f64,
}

fn exceptional_point(domain: &CircularDomain, z: Complex64) -> Option<usize> {
    domain.dominant_a().into_iter().find(|&k| (z - domain.holes()[k].a).norm() < EXCEPTIONAL)
}

/// `F_{j,n}(z)`: the sum over words whose outermost letter is not `j`.
pub fn f_jn(
    domain: &CircularDomain,
    family: &CompositionFamily,
    j: usize,
    n: usize,
    z: Complex64,
) -> Result<FValue, AsymptoticsError> {
    let hole = domain.hole(j)?;
    if !domain.dominant_a().contains(&j) {
        return Err(AsymptoticsError::NotDominant { index: j });
    }
    if let Some(index) = exceptional_point(domain, z) {
        return Err(AsymptoticsError::OnExceptionalPoint { index });
    }
    let phi = straightening(hole);
    let theta_fn = ThetaFunction::new(hole.sigma * hole.sigma)?;
    let scale = n as f64 * hole.alpha();
    let mut value = Complex64::default();
    let mut peak: f64 = 0.0;
    for e in family.elements().iter().filter(|e| e.outermost() != Some(j)) {
        let w = e.map.apply(z);
        let inner = log_derivative(&phi, w) * theta_fn.eval(scale * phi.apply(w))?;
        peak = peak.max(inner.norm());
        value += inner * e.map.derivative(z);
    }
    let sandwich = 1.0 / (1.0 - domain.rho_a() * domain.rho_a()).powi(2);
    Ok(FValue { value, tail: peak * family.tail_bound() * sandwich })
}

/// `z^n + (1/n) sum_{|a_j| = rho_a} a_j^{n+1} F_{j,n}(z)`, or `a_j^n/(1 - sigma_j^2)` at an exceptional point.
pub fn interior_prediction(
    domain: &CircularDomain,
    family: &CompositionFamily,
    n: usize,
    z: Complex64,
) -> Result<Complex64, AsymptoticsError> {
    let power = n as i32;
    if let Some(k) = exceptional_point(domain, z) {
        let h = &domain.holes()[k];
        return Ok(h.a.powi(power) / (1.0 - h.sigma * h.sigma));
    }
    let mut total = z.powi(power);
    for j in domain.dominant_a() {
        let a = domain.holes()[j].a;
        total += a.powi(power + 1) * f_jn(domain, family, j, n, z)?.value / n as f64;
    }
    Ok(total)
}
