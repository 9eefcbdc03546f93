//! The semigroup generated by the contractions `T_j`, enumerated by word length,
//! together with the radial contraction profile `m(r)` and the derivative sum `mu(r)`.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::CircularDomain;
use crate::moebius::{contraction, MoebiusMap};

pub const DEFAULT_CAP: usize = 1 << 21;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("family enumeration exceeded {cap} elements at word length {length}")]
    FamilyExplosion { cap: usize, length: usize },
    #[error("maximal word length must be at least 1")]
    ZeroLength,
    #[error("radius {r} outside [0, 1/rho_a] = [0, {limit}]")]
    RadiusOutOfRange { r: f64, limit: f64 },
}

/// One composition `tau = T_{w[0]} ∘ T_{w[1]} ∘ … ∘ T_{w[l-1]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyElement {
    pub map: MoebiusMap,
    /// Zero-based hole indices, outermost (applied last) first.
    pub word: Vec<u16>,
}

impl FamilyElement {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Index of the contraction applied last (leftmost letter).
    pub fn outermost(&self) -> Option<usize> {
        self.word.first().map(|&j| j as usize)
    }

    /// Index of the contraction applied first (rightmost letter).
    pub fn innermost(&self) -> Option<usize> {
        self.word.last().map(|&j| j as usize)
    }

    pub fn gamma(&self) -> Complex64 {
        self.map.gamma_factor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailKind {
    /// Rigorous geometric bound with ratio `q = sum r_j^2/(1 - |c_j| rho_a)^2 < 1`.
    Geometric { q: f64 },
    /// Extrapolated from the last observed level ratios; not a proof.
    Empirical { ratio: f64 },
    /// The observed level sums are not decaying.
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct CompositionFamily {
    elements: Vec<FamilyElement>,
    max_len: usize,
    prune_tol: f64,
    level_sums: Vec<f64>,
    pruned_mass: f64,
    tail_bound: f64,
    tail_kind: TailKind,
}

/// `sum_j r_j^2 / (1 - |c_j| rho_a)^2`.
pub fn radii_ratio(domain: &CircularDomain) -> f64 {
    let ra = domain.rho_a();
    domain.holes().iter().map(|h| h.radius().powi(2) / (1.0 - h.center().norm() * ra).powi(2)).sum()
}

impl CompositionFamily {
    /// The family holding only the identity, i.e. the kernel of the unit disk.
    pub fn identity_only() -> Self {
        Self {
            elements: vec![FamilyElement { map: MoebiusMap::identity(), word: Vec::new() }],
            max_len: 0,
            prune_tol: 0.0,
            level_sums: vec![1.0],
            pruned_mass: 0.0,
            tail_bound: 0.0,
            tail_kind: TailKind::Geometric { q: 0.0 },
        }
    }

    pub fn elements(&self) -> &[FamilyElement] {
        &self.elements
    }

    /// Everything but the identity.
    pub fn nontrivial(&self) -> impl Iterator<Item = &FamilyElement> {
        self.elements.iter().filter(|e| !e.is_identity())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn includes_identity(&self) -> bool {
        self.elements.first().is_some_and(FamilyElement::is_identity)
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn prune_tol(&self) -> f64 {
        self.prune_tol
    }

    /// `sum |gamma_tau|` over the kept words of each length.
    pub fn level_sums(&self) -> &[f64] {
        &self.level_sums
    }

    /// `sum |gamma_tau|` over the words dropped by pruning.
    pub fn pruned_mass(&self) -> f64 {
        self.pruned_mass
    }

    /// Estimate of `sum |gamma_tau|` over every excluded word.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn tail_kind(&self) -> TailKind {
        self.tail_kind
    }

    pub fn gamma_sum(&self) -> f64 {
        self.elements.iter().map(|e| e.gamma().norm()).sum()
    }
}

pub fn enumerate(domain: &CircularDomain, max_len: usize, prune_tol: f64) -> Result<CompositionFamily, FamilyError> {
    enumerate_with_cap(domain, max_len, prune_tol, DEFAULT_CAP)
}

pub fn enumerate_with_cap(
    domain: &CircularDomain,
    max_len: usize,
    prune_tol: f64,
    cap: usize,
) -> Result<CompositionFamily, FamilyError> {
    if max_len == 0 {
        return Err(FamilyError::ZeroLength);
    }
    let letters: Vec<MoebiusMap> = domain.holes().iter().map(contraction).collect();
    let mut elements = vec![FamilyElement { map: MoebiusMap::identity(), word: Vec::new() }];
    let mut level_sums = vec![1.0];
    let mut pruned_mass = 0.0;
    let mut frontier: Vec<FamilyElement> = elements.clone();
    for length in 1..=max_len {
        let candidates: Vec<FamilyElement> = letters
            .par_iter()
            .enumerate()
            .flat_map_iter(|(j, t)| {
                frontier.iter().map(move |tau| {
                    let mut word = Vec::with_capacity(tau.word.len() + 1);
                    word.push(j as u16);
                    word.extend_from_slice(&tau.word);
                    FamilyElement { map: t.compose(&tau.map), word }
                })
            })
            .collect();
        let (kept, dropped): (Vec<_>, Vec<_>) = candidates.into_iter().partition(|e| e.gamma().norm() >= prune_tol);
        pruned_mass += dropped.iter().map(|e| e.gamma().norm()).sum::<f64>();
        level_sums.push(kept.iter().map(|e| e.gamma().norm()).sum());
        if elements.len() + kept.len() > cap {
            return Err(FamilyError::FamilyExplosion { cap, length });
        }
        elements.extend(kept.iter().cloned());
        frontier = kept;
        if frontier.is_empty() {
            break;
        }
    }
    let q = radii_ratio(domain);
    let last = level_sums.last().copied().unwrap_or(0.0);
    let (tail_bound, tail_kind) = if q < 1.0 {
        let geometric = q.powi(max_len as i32 + 1) / (1.0 - q);
        (geometric + pruned_mass / (1.0 - q), TailKind::Geometric { q })
    } else {
        let n = level_sums.len();
        let ratio = (n.saturating_sub(3)..n - 1)
            .filter(|&i| i >= 1 && level_sums[i] > 0.0)
            .map(|i| level_sums[i + 1] / level_sums[i])
            .fold(0.0, f64::max);
        if ratio < 1.0 {
            ((last * ratio + pruned_mass) / (1.0 - ratio), TailKind::Empirical { ratio })
        } else {
            (f64::INFINITY, TailKind::Unbounded)
        }
    };
    Ok(CompositionFamily { elements, max_len, prune_tol, level_sums, pruned_mass, tail_bound, tail_kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SufficientCondition {
    RealCenters,
    RadiiSum,
    AtMostTwoDisks,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Proven(Vec<SufficientCondition>),
    EmpiricalConverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub condition_real_centers: bool,
    pub condition_radii: (bool, f64),
    pub s_le_2: bool,
    pub truncated_sum: f64,
    pub tail: f64,
    pub verdict: Verdict,
}

/// Default family used by [`check_assumption`].
pub const ASSUMPTION_MAX_LEN: usize = 12;
pub const ASSUMPTION_PRUNE: f64 = 1e-16;

pub fn check_assumption(domain: &CircularDomain) -> Result<AssumptionReport, FamilyError> {
    let family = enumerate(domain, ASSUMPTION_MAX_LEN, ASSUMPTION_PRUNE)?;
    Ok(check_assumption_with(domain, &family))
}

pub fn check_assumption_with(domain: &CircularDomain, family: &CompositionFamily) -> AssumptionReport {
    let real = domain.has_real_centers();
    let q = radii_ratio(domain);
    let small = domain.s() <= 2;
    let mut proven = Vec::new();
    if real {
        proven.push(SufficientCondition::RealCenters);
    }
    if q < 1.0 {
        proven.push(SufficientCondition::RadiiSum);
    }
    if small {
        proven.push(SufficientCondition::AtMostTwoDisks);
    }
    let verdict = if !proven.is_empty() {
        Verdict::Proven(proven)
    } else if matches!(family.tail_kind(), TailKind::Empirical { .. }) {
        Verdict::EmpiricalConverging
    } else {
        Verdict::Inconclusive
    };
    AssumptionReport {
        condition_real_centers: real,
        condition_radii: (q < 1.0, q),
        s_le_2: small,
        truncated_sum: family.gamma_sum(),
        tail: family.tail_bound(),
        verdict,
    }
}

fn check_radius(domain: &CircularDomain, r: f64) -> Result<(), FamilyError> {
    let limit = if domain.rho_a() > 0.0 { 1.0 / domain.rho_a() } else { f64::INFINITY };
    if !(r >= 0.0 && r <= limit * (1.0 + 1e-14)) {
        return Err(FamilyError::RadiusOutOfRange { r, limit });
    }
    Ok(())
}

/// `m(r) = max_j (r_j^2 r / (1 - |c_j| r) + |c_j|)`: every `T_j` maps the closed
/// disk of radius `r` into the closed disk of radius `m(r)`.
pub fn m_of_r(domain: &CircularDomain, r: f64) -> Result<f64, FamilyError> {
    check_radius(domain, r)?;
    Ok(m_unchecked(domain, r))
}

fn m_unchecked(domain: &CircularDomain, r: f64) -> f64 {
    domain
        .holes()
        .iter()
        .map(|h| {
            let c = h.center().norm();
            h.radius().powi(2) * r / (1.0 - c * r) + c
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn m_iterate(domain: &CircularDomain, r: f64, v: usize) -> Result<f64, FamilyError> {
    check_radius(domain, r)?;
    Ok((0..v).fold(r, |acc, _| m_unchecked(domain, acc)))
}

/// `max { m_j(r)/r : |x_j| > rho_x }`, the second-largest decay ratio at `rho_x`.
pub fn subdominant_ratio(domain: &CircularDomain, r: f64) -> Option<f64> {
    let dominant = domain.dominant_x();
    domain
        .holes()
        .iter()
        .enumerate()
        .filter(|(j, h)| !dominant.contains(j) && !h.is_concentric())
        .map(|(_, h)| {
            let c = h.center().norm();
            (h.radius().powi(2) * r / (1.0 - c * r) + c) / r
        })
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuValue {
    pub value: f64,
    pub tail: f64,
    pub argmax: Complex64,
}

pub const MU_SAMPLES: usize = 720;

/// `mu(r) = sup_{|z| <= r} sum_tau |tau'(z)|`. The sum is subharmonic, so the
/// supremum is sought on the circle `|z| = r`.
pub fn mu_of_r(domain: &CircularDomain, family: &CompositionFamily, r: f64) -> Result<MuValue, FamilyError> {
    let limit = if domain.rho_a() > 0.0 { 1.0 / domain.rho_a() } else { f64::INFINITY };
    if !(r >= 0.0 && r < limit) {
        return Err(FamilyError::RadiusOutOfRange { r, limit });
    }
    let total = |theta: f64| -> f64 {
        let z = Complex64::from_polar(r, theta);
        family.elements().iter().map(|e| e.map.derivative(z).norm()).sum()
    };
    let step = std::f64::consts::TAU / MU_SAMPLES as f64;
    let coarse: Vec<f64> = (0..MU_SAMPLES).into_par_iter().map(|k| total(k as f64 * step)).collect();
    let (kmax, mut best) = coarse.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let mut arg = kmax as f64 * step;
    let fine = step / 4.0;
    let base = arg;
    for i in -4i32..=4 {
        let t = base + i as f64 * fine;
        let v = total(t);
        if v > best {
            best = v;
            arg = t;
        }
    }
    let sandwich = 1.0 / (1.0 - r * domain.rho_a()).powi(2);
    Ok(MuValue { value: best, tail: family.tail_bound() * sandwich, argmax: Complex64::from_polar(r, arg) })
}
