//! Circular multiply connected domains: the open unit disk with finitely many
//! disjoint closed disks removed, plus the scalar invariants attached to each hole.

use num_complex::Complex64;
use thiserror::Error;

/// Gap required by every strict inequality checked in [`CircularDomain::validate`].
pub const VALIDATION_MARGIN: f64 = 1e-12;

/// Relative tolerance for ties such as `|x_j| = rho_x` or `|a_j| = rho_a`.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("no disks given")]
    Empty,
    #[error("disk {index} has non-positive or non-finite radius")]
    BadRadius { index: usize },
    #[error("disk {index} has a non-finite center")]
    BadCenter { index: usize },
    #[error("closed disk {index} is not contained in the open unit disk")]
    DiskNotContained { index: usize },
    #[error("closed disks {first} and {second} intersect")]
    DisksOverlap { first: usize, second: usize },
    #[error("disk is centered at the origin; x, y and the pole are undefined")]
    CenterAtOrigin,
    #[error("disk index {index} out of range (s = {count})")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("cannot parse decimal '{0}'")]
    Parse(String),
}

/// Decimal text of a disk as it was supplied, kept so that extended-precision
/// consumers can parse the inputs without passing through `f64`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecimalDisk {
    pub cx: String,
    pub cy: String,
    pub r: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
    pub decimal: Option<DecimalDisk>,
}

impl Disk {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self { center, radius, decimal: None }
    }

    pub fn real(center: f64, radius: f64) -> Self {
        Self::new(Complex64::new(center, 0.0), radius)
    }

    pub fn from_decimal(cx: &str, cy: &str, r: &str) -> Result<Self, GeometryError> {
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| GeometryError::Parse(s.to_string()));
        Ok(Self {
            center: Complex64::new(parse(cx)?, parse(cy)?),
            radius: parse(r)?,
            decimal: Some(DecimalDisk {
                cx: cx.trim().to_string(),
                cy: cy.trim().to_string(),
                r: r.trim().to_string(),
            }),
        })
    }
}

/// A point of the extended plane. `y_j` is infinite exactly when the hole's
/// boundary passes through the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(Complex64),
    Infinity,
}

impl Extended {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            Extended::Finite(z) => Some(z),
            Extended::Infinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalData {
    pub x: Complex64,
    pub y: Extended,
    pub epsilon: i8,
    pub pole: Complex64,
}

/// A validated hole together with its derived parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub disk: Disk,
    pub a: Complex64,
    pub sigma: f64,
    /// `None` for a hole centered at the origin.
    pub critical: Option<CriticalData>,
}

impl Hole {
    pub fn center(&self) -> Complex64 {
        self.disk.center
    }

    pub fn radius(&self) -> f64 {
        self.disk.radius
    }

    pub fn is_concentric(&self) -> bool {
        self.critical.is_none()
    }

    /// Whether the boundary circle passes through the origin.
    pub fn is_degenerate(&self) -> bool {
        !self.is_concentric() && boundary_through_origin(self.disk.center, self.disk.radius)
    }

    /// `|a|^{-1} - |a|`, the scale in the interior theta argument.
    pub fn alpha(&self) -> f64 {
        let m = self.a.norm();
        1.0 / m - m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircularDomain {
    holes: Vec<Hole>,
    rho_a: f64,
    rho_x: Option<f64>,
}

fn boundary_through_origin(c: Complex64, r: f64) -> bool {
    (r - c.norm()).abs() <= 4.0 * f64::EPSILON * r
}

/// Attracting fixed point `a` of `T` and `sigma = sqrt(T'(a))` for the disk `D(c, r)`.
///
/// Writing `z = c u` turns the fixed-point quadratic into the real equation
/// `|c|^2 u^2 - B u + 1 = 0` with `B = 1 + |c|^2 - r^2`; the small root is taken
/// in the cancellation-free form.
pub fn derive_pair(c: Complex64, r: f64) -> (Complex64, f64) {
    let c2 = c.norm_sqr();
    let b = 1.0 + c2 - r * r;
    let disc = (b * b - 4.0 * c2).max(0.0);
    let u = 2.0 / (b + disc.sqrt());
    let a = c * u;
    let sigma = r / (Complex64::new(1.0, 0.0) - c.conj() * a).norm();
    (a, sigma)
}

/// Center and radius of the disk whose attracting parameters are `(a, sigma)`.
pub fn forward_relations(a: Complex64, sigma: f64) -> (Complex64, f64) {
    let a2 = a.norm_sqr();
    let s2 = sigma * sigma;
    let den = 1.0 - a2 * s2;
    (a * ((1.0 - s2) / den), sigma * (1.0 - a2) / den)
}

pub fn critical_data(c: Complex64, r: f64) -> Result<CriticalData, GeometryError> {
    let m = c.norm();
    if m == 0.0 {
        return Err(GeometryError::CenterAtOrigin);
    }
    let u = c / m;
    let x = u / (m + r);
    let degenerate = boundary_through_origin(c, r);
    let y = if degenerate { Extended::Infinity } else { Extended::Finite(u / (m - r)) };
    let epsilon = if degenerate || r >= m { 1 } else { -1 };
    let pole = match y {
        Extended::Finite(y) => 2.0 * x * y / (x + y),
        Extended::Infinity => 2.0 * x,
    };
    Ok(CriticalData { x, y, epsilon, pole })
}

impl CircularDomain {
    pub fn validate(disks: Vec<Disk>) -> Result<Self, GeometryError> {
        if disks.is_empty() {
            return Err(GeometryError::Empty);
        }
        for (index, d) in disks.iter().enumerate() {
            if !(d.radius.is_finite() && d.radius > 0.0) {
                return Err(GeometryError::BadRadius { index });
            }
            if !(d.center.re.is_finite() && d.center.im.is_finite()) {
                return Err(GeometryError::BadCenter { index });
            }
            if d.center.norm() + d.radius >= 1.0 - VALIDATION_MARGIN {
                return Err(GeometryError::DiskNotContained { index });
            }
        }
        for i in 0..disks.len() {
            for j in i + 1..disks.len() {
                let gap = (disks[i].center - disks[j].center).norm() - disks[i].radius - disks[j].radius;
                if gap <= VALIDATION_MARGIN {
                    return Err(GeometryError::DisksOverlap { first: i, second: j });
                }
            }
        }
        let holes: Vec<Hole> = disks
            .into_iter()
            .map(|disk| {
                let (a, sigma) = derive_pair(disk.center, disk.radius);
                let critical = critical_data(disk.center, disk.radius).ok();
                Hole { disk, a, sigma, critical }
            })
            .collect();
        let rho_a = holes.iter().map(|h| h.a.norm()).fold(0.0, f64::max);
        let rho_x = holes.iter().filter_map(|h| h.critical.map(|c| c.x.norm())).reduce(f64::min);
        Ok(Self { holes, rho_a, rho_x })
    }

    pub fn from_pairs(pairs: &[(Complex64, f64)]) -> Result<Self, GeometryError> {
        Self::validate(pairs.iter().map(|&(c, r)| Disk::new(c, r)).collect())
    }

    pub fn s(&self) -> usize {
        self.holes.len()
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn hole(&self, j: usize) -> Result<&Hole, GeometryError> {
        self.holes.get(j).ok_or(GeometryError::IndexOutOfRange { index: j, count: self.holes.len() })
    }

    pub fn rho_a(&self) -> f64 {
        self.rho_a
    }

    pub fn rho_x(&self) -> Option<f64> {
        self.rho_x
    }

    /// Indices of the holes with `|x_j| = rho_x`.
    pub fn dominant_x(&self) -> Vec<usize> {
        let Some(rx) = self.rho_x else { return Vec::new() };
        self.holes
            .iter()
            .enumerate()
            .filter(|(_, h)| h.critical.is_some_and(|c| c.x.norm() <= rx * (1.0 + TIE_TOLERANCE)))
            .map(|(j, _)| j)
            .collect()
    }

    /// Indices of the holes with `|a_j| = rho_a`.
    pub fn dominant_a(&self) -> Vec<usize> {
        if self.rho_a == 0.0 {
            return Vec::new();
        }
        self.holes
            .iter()
            .enumerate()
            .filter(|(_, h)| h.a.norm() >= self.rho_a * (1.0 - TIE_TOLERANCE))
            .map(|(j, _)| j)
            .collect()
    }

    /// Index of the hole centered at the origin, if any.
    pub fn concentric(&self) -> Option<usize> {
        self.holes.iter().position(Hole::is_concentric)
    }

    /// Decay base `r_j^2` of the concentric hole; its contribution to the
    /// exterior and leading-coefficient corrections is `O(r_j^{2n+2})`.
    pub fn concentric_decay(&self) -> Option<f64> {
        self.concentric().map(|j| self.holes[j].disk.radius.powi(2))
    }

    /// Normalized area `1 - sum r_j^2`.
    pub fn area(&self) -> f64 {
        1.0 - self.holes.iter().map(|h| h.disk.radius.powi(2)).sum::<f64>()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() < 1.0 && self.holes.iter().all(|h| (z - h.disk.center).norm() > h.disk.radius)
    }

    pub fn has_real_centers(&self) -> bool {
        self.holes.iter().all(|h| h.disk.center.im == 0.0)
    }
}
