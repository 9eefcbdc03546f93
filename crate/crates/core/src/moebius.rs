//! Fractional linear maps `z -> (alpha z + beta) / (gamma z + delta)` and the
//! specific maps attached to a hole: the contraction `T_j`, its powers, and the
//! disk automorphism `Phi_j` that straightens it to a scaling.

use num_complex::Complex64;

use crate::geometry::{CircularDomain, GeometryError, Hole};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl MoebiusMap {
    /// Builds the map, rescaling the coefficients so the largest has modulus 1.
    pub fn new(alpha: Complex64, beta: Complex64, gamma: Complex64, delta: Complex64) -> Self {
        let scale = [alpha, beta, gamma, delta].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let k = 1.0 / scale;
        Self { alpha: alpha * k, beta: beta * k, gamma: gamma * k, delta: delta * k }
    }

    pub fn identity() -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::new(one(), z, z, one())
    }

    pub fn scaling(k: Complex64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self::new(k, z, z, one())
    }

    pub fn det(&self) -> Complex64 {
        self.alpha * self.delta - self.beta * self.gamma
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.alpha * z + self.beta) / (self.gamma * z + self.delta)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let d = self.gamma * z + self.delta;
        self.det() / (d * d)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self::new(
            self.alpha * inner.alpha + self.beta * inner.gamma,
            self.alpha * inner.beta + self.beta * inner.delta,
            self.gamma * inner.alpha + self.delta * inner.gamma,
            self.gamma * inner.beta + self.delta * inner.delta,
        )
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.delta, -self.beta, -self.gamma, self.alpha)
    }

    /// The point sent to infinity, `None` for affine maps.
    pub fn pole(&self) -> Option<Complex64> {
        if self.gamma == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some(-self.delta / self.gamma)
        }
    }

    /// `gamma_tau` in `tau'(z) = gamma_tau / (1 - z/p_tau)^2`; equals `tau'(0)`.
    pub fn gamma_factor(&self) -> Complex64 {
        self.det() / (self.delta * self.delta)
    }

    /// Image of the closed disk `D(center, radius)`, provided the pole lies outside it.
    pub fn image_disk(&self, center: Complex64, radius: f64) -> Option<(Complex64, f64)> {
        match self.pole() {
            None => Some((self.apply(center), radius * (self.alpha / self.delta).norm())),
            Some(p) => {
                let off = p - center;
                if off.norm() <= radius {
                    return None;
                }
                // the reflection of the pole in the circle maps to the image center
                let mirror = center + radius * radius / off.conj();
                let c = self.apply(mirror);
                let r = (self.apply(center + radius) - c).norm();
                Some((c, r))
            }
        }
    }

    /// Projective equality: coefficients agree up to a common factor.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let a = [self.alpha, self.beta, self.gamma, self.delta];
        let b = [other.alpha, other.beta, other.gamma, other.delta];
        let k = (0..4).max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm())).unwrap();
        if b[k].norm() == 0.0 {
            return false;
        }
        let (sa, sb) = (a[k], b[k]);
        a.iter().zip(b.iter()).all(|(x, y)| (x / sa - y / sb).norm() <= tol)
    }
}

/// `T_j(z) = ((r^2 - |c|^2) z + c) / (1 - conj(c) z)`.
pub fn contraction(hole: &Hole) -> MoebiusMap {
    let c = hole.center();
    let r = hole.radius();
    MoebiusMap::new(Complex64::new(r * r - c.norm_sqr(), 0.0), c, -c.conj(), one())
}

/// `Phi_j(z) = (conj(a)/|a|)(z - a)/(1 - conj(a) z)`; the identity for a concentric hole.
pub fn straightening(hole: &Hole) -> MoebiusMap {
    let a = hole.a;
    let m = a.norm();
    if m == 0.0 {
        return MoebiusMap::identity();
    }
    let u = a.conj() / m;
    MoebiusMap::new(u, -u * a, -a.conj(), one())
}

pub fn tj(domain: &CircularDomain, j: usize) -> Result<MoebiusMap, GeometryError> {
    Ok(contraction(domain.hole(j)?))
}

/// `T_j^v = Phi_j^{-1}(sigma_j^{2v} Phi_j)`, valid for every integer `v`.
pub fn tj_power(domain: &CircularDomain, j: usize, v: i64) -> Result<MoebiusMap, GeometryError> {
    let hole = domain.hole(j)?;
    if v == 0 {
        return Ok(MoebiusMap::identity());
    }
    let phi = straightening(hole);
    let k = hole.sigma.powi(2).powf(v as f64);
    Ok(phi.inverse().compose(&MoebiusMap::scaling(Complex64::new(k, 0.0))).compose(&phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Disk;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> CircularDomain {
        CircularDomain::validate(vec![Disk::real(0.4, 0.2)]).unwrap()
    }

    #[test]
    fn concentric_contraction_is_scaling() {
        let d = CircularDomain::validate(vec![Disk::real(0.0, 0.5)]).unwrap();
        let t = tj(&d, 0).unwrap();
        assert!(t.approx_eq(&MoebiusMap::scaling(c(0.25, 0.0)), 1e-15));
        assert!((t.apply(c(0.3, 0.7)) - c(0.075, 0.175)).norm() < 1e-15);
    }

    #[test]
    fn reference_contraction() {
        let d = reference();
        let t = tj(&d, 0).unwrap();
        let a = d.holes()[0].a;
        assert!((t.apply(a) - a).norm() < 1e-14);
        assert!((t.apply(1.0 / a.conj()) - 1.0 / a.conj()).norm() < 1e-12);
        assert!((t.derivative(c(0.0, 0.0)) - c(0.04, 0.0)).norm() < 1e-15);
        assert!((t.gamma_factor() - c(0.04, 0.0)).norm() < 1e-15);
        assert!((t.pole().unwrap() - c(2.5, 0.0)).norm() < 1e-14);
        assert!(tj(&d, 1).is_err());
    }

    #[test]
    fn powers_match_composition() {
        let d = reference();
        let t = tj(&d, 0).unwrap();
        assert!(tj_power(&d, 0, 0).unwrap().approx_eq(&MoebiusMap::identity(), 0.0));
        assert!(tj_power(&d, 0, 1).unwrap().approx_eq(&t, 1e-13));
        assert!(tj_power(&d, 0, 2).unwrap().approx_eq(&t.compose(&t), 1e-13));
        let back = tj_power(&d, 0, -1).unwrap().compose(&tj_power(&d, 0, 1).unwrap());
        assert!(back.approx_eq(&MoebiusMap::identity(), 1e-12));
        assert!(tj_power(&d, 0, -1).unwrap().approx_eq(&t.inverse(), 1e-12));
        let mut acc = MoebiusMap::identity();
        for _ in 0..7 {
            acc = t.compose(&acc);
        }
        assert!(tj_power(&d, 0, 7).unwrap().approx_eq(&acc, 1e-12));
    }

    #[test]
    fn image_disk_matches_boundary_samples() {
        let d = CircularDomain::validate(vec![Disk::new(c(0.1, -0.3), 0.25)]).unwrap();
        let t = tj(&d, 0).unwrap();
        let (center, radius) = t.image_disk(c(0.0, 0.0), 1.0).unwrap();
        for k in 0..32 {
            let w = t.apply(Complex64::from_polar(1.0, k as f64 * 0.2));
            assert!(((w - center).norm() - radius).abs() < 1e-14);
        }
        assert!((center - c(0.1, -0.3)).norm() + radius < 0.25);
        assert!((t.apply(c(0.0, 0.0)) - center).norm() < radius);
    }

    fn point() -> impl Strategy<Value = Complex64> {
        (0.0f64..0.95, 0.0f64..std::f64::consts::TAU).prop_map(|(m, t)| Complex64::from_polar(m, t))
    }

    proptest! {
        #[test]
        fn contraction_equals_conjugated_scaling(center in point(), frac in 0.05f64..0.95, z in point()) {
            let r = frac * (1.0 - center.norm());
            let d = CircularDomain::validate(vec![Disk::new(center, r)]).unwrap();
            let h = &d.holes()[0];
            let phi = straightening(h);
            let via = phi.inverse().apply(h.sigma * h.sigma * phi.apply(z));
            prop_assert!((tj(&d, 0).unwrap().apply(z) - via).norm() < 1e-12);
        }

        #[test]
        fn derivative_matches_difference_quotient(center in point(), frac in 0.05f64..0.95, z in point()) {
            let r = frac * (1.0 - center.norm());
            let d = CircularDomain::validate(vec![Disk::new(center, r)]).unwrap();
            let t = tj(&d, 0).unwrap();
            let h = 1e-6;
            let fd = (t.apply(z + h) - t.apply(z - h)) / (2.0 * h);
            prop_assert!((fd - t.derivative(z)).norm() < 1e-7 * (1.0 + t.derivative(z).norm()));
        }

        #[test]
        fn inclusions_around_fixed_point(center in point(), frac in 0.05f64..0.95, s in 0.01f64..0.99, theta in 0.0f64..std::f64::consts::TAU) {
            let r = frac * (1.0 - center.norm());
            let d = CircularDomain::validate(vec![Disk::new(center, r)]).unwrap();
            let h = &d.holes()[0];
            let am = h.a.norm();
            prop_assume!(am > 1e-3);
            let radius = am + s * (1.0 / am - am);
            let z = Complex64::from_polar(radius, theta);
            let t = tj(&d, 0).unwrap();
            prop_assert!(t.apply(z).norm() < radius);
            prop_assert!(t.inverse().apply(z).norm() > radius);
        }
    }
}
