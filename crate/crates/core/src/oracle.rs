//! Ground truth from exact monomial moments: the Gram matrix of `1, z, z^2, …`
//! over the domain and its Cholesky factor in extended precision.

use num_complex::Complex64;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float, Integer};
use thiserror::Error;

use crate::geometry::{CircularDomain, Hole};

pub const DEFAULT_PRECISION: u32 = 256;
pub const PRECISION_CAP: u32 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Gram solve at {bits} bits failed for degree {degree} (residual {residual:e})")]
    IllConditioned { bits: u32, degree: usize, residual: f64 },
    #[error("cannot parse decimal '{0}'")]
    Parse(String),
}

fn parse_float(s: &str, prec: u32) -> Result<Float, OracleError> {
    Float::parse(s).map(|p| Float::with_val(prec, p)).map_err(|_| OracleError::Parse(s.to_string()))
}

/// Center and radius at `prec` bits, from the original decimals when available.
pub fn hole_parameters(hole: &Hole, prec: u32) -> Result<(Complex, Float), OracleError> {
    match &hole.disk.decimal {
        Some(d) => {
            let re = parse_float(&d.cx, prec)?;
            let im = parse_float(&d.cy, prec)?;
            Ok((Complex::with_val(prec, (re, im)), parse_float(&d.r, prec)?))
        }
        None => {
            Ok((Complex::with_val(prec, (hole.center().re, hole.center().im)), Float::with_val(prec, hole.radius())))
        }
    }
}

pub fn to_c64(z: &Complex) -> Complex64 {
    Complex64::new(z.real().to_f64(), z.imag().to_f64())
}

pub fn from_c64(z: Complex64, prec: u32) -> Complex {
    Complex::with_val(prec, (z.re, z.im))
}

fn binomial(n: usize, k: usize, prec: u32) -> Float {
    Float::with_val(prec, Integer::from(Integer::binomial_u(n as u32, k as u32)))
}

/// `<z^n, z^m> = int z^n conj(z)^m dA` with `dA = dx dy / pi`.
pub fn moment(domain: &CircularDomain, n: usize, m: usize, prec: u32) -> Result<Complex, OracleError> {
    let mut acc = Complex::with_val(prec, 0);
    if n == m {
        acc += Float::with_val(prec, 1) / Float::with_val(prec, n + 1);
    }
    for hole in domain.holes() {
        let (c, r) = hole_parameters(hole, prec)?;
        let cbar = Complex::with_val(prec, c.conj_ref());
        let r2 = Float::with_val(prec, &r * &r);
        let mut inner = Complex::with_val(prec, 0);
        for k in 0..=n.min(m) {
            let coef = binomial(n, k, prec) * binomial(m, k, prec) * Float::with_val(prec, (&r2).pow(k as u32))
                / Float::with_val(prec, k + 1);
            let cp = Complex::with_val(prec, (&c).pow((n - k) as u32));
            let cbp = Complex::with_val(prec, (&cbar).pow((m - k) as u32));
            inner += Complex::with_val(prec, &cp * &cbp) * coef;
        }
        acc -= inner * r2;
    }
    Ok(acc)
}

/// Hermitian matrix `G[n][m] = <z^n, z^m>`, `0 <= n, m <= N`.
#[derive(Debug, Clone)]
pub struct Gram {
    size: usize,
    prec: u32,
    entries: Vec<Complex>,
}

impl Gram {
    pub fn degree(&self) -> usize {
        self.size - 1
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn get(&self, n: usize, m: usize) -> &Complex {
        &self.entries[n * self.size + m]
    }

    /// `<p, z^m>` for a monic `p` of degree at most `N`.
    pub fn inner_with_monomial(&self, p: &MonicPolynomial, m: usize) -> Complex {
        let mut acc = Complex::with_val(self.prec, self.get(p.degree(), m));
        for (k, b) in p.coeffs.iter().enumerate() {
            acc += Complex::with_val(self.prec, b * self.get(k, m));
        }
        acc
    }

    /// `||p||^2` for a monic `p` of degree at most `N`.
    pub fn norm_sqr(&self, p: &MonicPolynomial) -> Float {
        let full = p.full_coeffs(self.prec);
        let mut acc = Complex::with_val(self.prec, 0);
        for (k, bk) in full.iter().enumerate() {
            let mut row = Complex::with_val(self.prec, 0);
            for (l, bl) in full.iter().enumerate() {
                row += Complex::with_val(self.prec, self.get(k, l) * Complex::with_val(self.prec, bl.conj_ref()));
            }
            acc += row * bk;
        }
        Float::with_val(self.prec, acc.real())
    }
}

pub fn gram(domain: &CircularDomain, n_max: usize, prec: u32) -> Result<Gram, OracleError> {
    let size = n_max + 1;
    let holes: Vec<(Complex, Float)> =
        domain.holes().iter().map(|h| hole_parameters(h, prec)).collect::<Result<_, _>>()?;
    let binom: Vec<Vec<Float>> = (0..size).map(|n| (0..=n).map(|k| binomial(n, k, prec)).collect()).collect();
    // A[n][k] = C(n,k) c^{n-k} r^k, so a hole contributes r^2 A diag(1/(k+1)) A^H.
    let factors: Vec<Vec<Vec<Complex>>> = holes
        .iter()
        .map(|(c, r)| {
            let cpow: Vec<Complex> = (0..size).map(|e| Complex::with_val(prec, c.pow(e as u32))).collect();
            let rpow: Vec<Float> = (0..size).map(|e| Float::with_val(prec, r.pow(e as u32))).collect();
            (0..size)
                .map(|n| (0..=n).map(|k| Complex::with_val(prec, &cpow[n - k] * &binom[n][k]) * &rpow[k]).collect())
                .collect()
        })
        .collect();
    let weights: Vec<Float> = (0..size).map(|k| Float::with_val(prec, 1) / Float::with_val(prec, k + 1)).collect();
    let rows: Vec<Vec<Complex>> = (0..size)
        .into_par_iter()
        .map(|n| {
            (0..size)
                .map(|m| {
                    let mut acc = Complex::with_val(prec, 0);
                    if n == m {
                        acc += &weights[n];
                    }
                    for ((_, r), a) in holes.iter().zip(&factors) {
                        let mut inner = Complex::with_val(prec, 0);
                        for k in 0..=n.min(m) {
                            let conj = Complex::with_val(prec, a[m][k].conj_ref());
                            inner += Complex::with_val(prec, &a[n][k] * &conj) * &weights[k];
                        }
                        acc -= inner * Float::with_val(prec, r * r);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    Ok(Gram { size, prec, entries: rows.into_iter().flatten().collect() })
}

/// Degree-`n` monic polynomial `z^n + b_{n-1} z^{n-1} + … + b_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonicPolynomial {
    coeffs: Vec<Complex>,
    prec: u32,
}

impl MonicPolynomial {
    pub fn new(coeffs: Vec<Complex>, prec: u32) -> Self {
        Self { coeffs, prec }
    }

    pub fn monomial(n: usize, prec: u32) -> Self {
        Self { coeffs: (0..n).map(|_| Complex::with_val(prec, 0)).collect(), prec }
    }

    /// From `f64` coefficients `b_0..b_{n-1}`.
    pub fn from_c64(coeffs: &[Complex64], prec: u32) -> Self {
        Self { coeffs: coeffs.iter().map(|&c| from_c64(c, prec)).collect(), prec }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Lower coefficients `b_0..b_{n-1}`.
    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    /// All `n + 1` coefficients, leading 1 last.
    pub fn full_coeffs(&self, prec: u32) -> Vec<Complex> {
        let mut v: Vec<Complex> = self.coeffs.iter().map(|c| Complex::with_val(prec, c)).collect();
        v.push(Complex::with_val(prec, 1));
        v
    }

    pub fn coeffs_c64(&self) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = self.coeffs.iter().map(to_c64).collect();
        v.push(Complex64::new(1.0, 0.0));
        v
    }

    pub fn eval(&self, z: &Complex) -> Complex {
        let mut acc = Complex::with_val(self.prec, 1);
        for b in self.coeffs.iter().rev() {
            acc *= z;
            acc += b;
        }
        acc
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        to_c64(&self.eval(&from_c64(z, self.prec)))
    }

    /// `P(z)/z^n - 1`, formed before rounding to double.
    pub fn exterior_defect(&self, z: Complex64) -> Complex64 {
        let w = from_c64(z, self.prec);
        let mut p = self.eval(&w);
        let zn = Complex::with_val(self.prec, w.pow(self.degree() as u32));
        p /= &zn;
        p -= 1u32;
        to_c64(&p)
    }

    /// Coefficients of `P'`, degree `n - 1` with leading coefficient `n`.
    pub fn derivative(&self) -> Vec<Complex> {
        let n = self.degree();
        (1..=n)
            .map(|k| {
                if k == n {
                    Complex::with_val(self.prec, n)
                } else {
                    Complex::with_val(self.prec, &self.coeffs[k] * Float::with_val(self.prec, k))
                }
            })
            .collect()
    }

    pub fn eval_derivative(&self, z: &Complex) -> Complex {
        let d = self.derivative();
        let mut acc = Complex::with_val(self.prec, 0);
        for b in d.iter().rev() {
            acc *= z;
            acc += b;
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct OrthoEntry {
    pub poly: MonicPolynomial,
    pub kappa: Float,
    /// `max_{m<n} |<P_n, z^m>|` relative to the size of the summed terms.
    pub residual: f64,
}

impl OrthoEntry {
    pub fn kappa_f64(&self) -> f64 {
        self.kappa.to_f64()
    }

    /// `kappa_n^{-2} = ||P_n||^2`.
    pub fn norm_sqr(&self) -> Float {
        let k = Float::with_val(self.kappa.prec(), &self.kappa * &self.kappa);
        k.recip()
    }

    /// `(n+1) kappa_n^{-2} - 1`, formed before rounding to double.
    pub fn kappa_defect(&self) -> f64 {
        let n = self.poly.degree() as u32;
        let mut v = self.norm_sqr();
        v *= n + 1;
        v -= 1u32;
        v.to_f64()
    }
}

/// Monic orthogonal polynomials `P_0..P_N` and `kappa_n` from one Cholesky
/// factorization `G = L L^H` of the Gram matrix.
#[derive(Debug, Clone)]
pub struct OrthoSystem {
    gram: Gram,
    entries: Vec<OrthoEntry>,
}

impl OrthoSystem {
    pub fn gram(&self) -> &Gram {
        &self.gram
    }

    pub fn entries(&self) -> &[OrthoEntry] {
        &self.entries
    }

    pub fn get(&self, n: usize) -> &OrthoEntry {
        &self.entries[n]
    }

    pub fn precision(&self) -> u32 {
        self.gram.prec
    }
}

fn cholesky(g: &Gram) -> Option<Vec<Vec<Complex>>> {
    let prec = g.prec;
    let size = g.size;
    let mut l: Vec<Vec<Complex>> = (0..size).map(|i| vec![Complex::with_val(prec, 0); i + 1]).collect();
    for i in 0..size {
        let mut d = Float::with_val(prec, g.get(i, i).real());
        for lik in &l[i][..i] {
            d -= Float::with_val(prec, lik.norm_ref());
        }
        if !(d.is_sign_positive() && !d.is_zero()) {
            return None;
        }
        let lii = d.sqrt();
        l[i][i] = Complex::with_val(prec, &lii);
        let rows: Vec<Complex> = ((i + 1)..size)
            .into_par_iter()
            .map(|j| {
                let mut s = Complex::with_val(prec, g.get(j, i));
                for (ljk, lik) in l[j][..i].iter().zip(&l[i][..i]) {
                    let conj = Complex::with_val(prec, lik.conj_ref());
                    s -= Complex::with_val(prec, ljk * &conj);
                }
                s / &lii
            })
            .collect();
        for (j, v) in ((i + 1)..size).zip(rows) {
            l[j][i] = v;
        }
    }
    Some(l)
}

/// Solves `G_{<n} x = rhs` with the leading block of the factor.
fn block_solve(l: &[Vec<Complex>], rhs: &[Complex], prec: u32) -> Vec<Complex> {
    let n = rhs.len();
    let mut y: Vec<Complex> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = Complex::with_val(prec, &rhs[i]);
        for k in 0..i {
            s -= Complex::with_val(prec, &l[i][k] * &y[k]);
        }
        y.push(s / l[i][i].real());
    }
    let mut x = vec![Complex::with_val(prec, 0); n];
    for i in (0..n).rev() {
        let mut s = Complex::with_val(prec, &y[i]);
        for k in (i + 1)..n {
            let conj = Complex::with_val(prec, l[k][i].conj_ref());
            s -= Complex::with_val(prec, &conj * &x[k]);
        }
        x[i] = s / l[i][i].real();
    }
    x
}

fn solve_degree(g: &Gram, l: &[Vec<Complex>], n: usize) -> Result<OrthoEntry, OracleError> {
    let prec = g.prec;
    // Orthogonality <P, z^m> = 0 for m < n reads G_{<n} conj(b) = -G[0..n][n].
    let rhs: Vec<Complex> = (0..n).map(|m| -Complex::with_val(prec, g.get(m, n))).collect();
    let mut x = block_solve(l, &rhs, prec);
    let residual_vec = |x: &[Complex]| -> Vec<Complex> {
        (0..n)
            .map(|m| {
                let mut r = Complex::with_val(prec, &rhs[m]);
                for (k, xk) in x.iter().enumerate() {
                    r -= Complex::with_val(prec, g.get(m, k) * xk);
                }
                r
            })
            .collect()
    };
    for _ in 0..2 {
        let r = residual_vec(&x);
        let dx = block_solve(l, &r, prec);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    let coeffs: Vec<Complex> = x.iter().map(|v| Complex::with_val(prec, v.conj_ref())).collect();
    let poly = MonicPolynomial::new(coeffs, prec);
    let mut residual = 0.0f64;
    for m in 0..n {
        let ip = g.inner_with_monomial(&poly, m);
        let mut scale = Float::with_val(prec, g.get(n, m).abs_ref());
        for (k, b) in poly.coeffs.iter().enumerate() {
            scale += Float::with_val(prec, b.abs_ref()) * Float::with_val(prec, g.get(k, m).abs_ref());
        }
        let rel = Float::with_val(prec, ip.abs_ref()) / scale;
        residual = residual.max(rel.to_f64());
    }
    let tol = 2f64.powi(-(prec as i32) / 2);
    if residual.is_nan() || residual > tol {
        return Err(OracleError::IllConditioned { bits: prec, degree: n, residual });
    }
    let ip = g.inner_with_monomial(&poly, n);
    let norm = Float::with_val(prec, ip.real());
    if !(norm.is_sign_positive() && !norm.is_zero()) {
        return Err(OracleError::IllConditioned { bits: prec, degree: n, residual: f64::INFINITY });
    }
    let kappa = norm.sqrt().recip();
    Ok(OrthoEntry { poly, kappa, residual })
}

/// `P_0..P_N` at a fixed precision.
pub fn ortho_system(domain: &CircularDomain, n_max: usize, prec: u32) -> Result<OrthoSystem, OracleError> {
    let g = gram(domain, n_max, prec)?;
    let l = cholesky(&g).ok_or(OracleError::IllConditioned { bits: prec, degree: 0, residual: f64::INFINITY })?;
    let entries: Vec<OrthoEntry> =
        (0..=n_max).into_par_iter().map(|n| solve_degree(&g, &l, n)).collect::<Result<_, _>>()?;
    Ok(OrthoSystem { gram: g, entries })
}

/// As [`ortho_system`], doubling the precision on failure up to [`PRECISION_CAP`].
pub fn ortho_system_auto(domain: &CircularDomain, n_max: usize, prec: u32) -> Result<OrthoSystem, OracleError> {
    let mut bits = prec;
    loop {
        match ortho_system(domain, n_max, bits) {
            Err(OracleError::IllConditioned { .. }) if bits < PRECISION_CAP => bits *= 2,
            other => return other,
        }
    }
}

/// `(P_n, kappa_n)` for a single degree.
pub fn orthopoly(domain: &CircularDomain, n: usize, prec: u32) -> Result<(MonicPolynomial, Float), OracleError> {
    let sys = ortho_system_auto(domain, n, prec)?;
    let e = sys.entries.into_iter().nth(n).expect("degree in range");
    Ok((e.poly, e.kappa))
}
