//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Run with `cargo test -p bergman-cmcd --test acceptance`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bergman_cmcd::asymptotics::{chi_n_scaled, degenerate_correction, kappa_expansion, tjv_tail_sum};
use bergman_cmcd::contour::circle_points;
use bergman_cmcd::family::{
    check_assumption, enumerate, m_iterate, m_of_r, mu_of_r, SufficientCondition, Verdict, ASSUMPTION_PRUNE,
};
use bergman_cmcd::geometry::{CircularDomain, Disk};
use bergman_cmcd::kernel::{kernel_series, m_kernel_eval, reproduce_check, QuadratureRule};
use bergman_cmcd::oracle::{from_c64, ortho_system, to_c64, MonicPolynomial};
use bergman_cmcd::series::{series_orthopoly, SeriesConfig};
use bergman_cmcd::zeros::{angular_uniformity, roots_from};
use num_complex::Complex64;
use rug::Complex;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn domain(disks: &[(f64, f64, f64)]) -> CircularDomain {
    CircularDomain::validate(disks.iter().map(|&(x, y, r)| Disk::new(c(x, y), r)).collect()).unwrap()
}

fn reference() -> CircularDomain {
    domain(&[(0.4, 0.0, 0.2)])
}

fn annulus() -> CircularDomain {
    domain(&[(0.0, 0.0, 0.5)])
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("runtime {elapsed:?} exceeds {limit:?}"))
    }
}

fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn annulus_exactness() -> Outcome {
    let start = Instant::now();
    let d = annulus();
    let fam = enumerate(&d, 30, 0.0).unwrap();
    let sys = ortho_system(&d, 30, 256).unwrap();
    let mut worst_coeff: f64 = 0.0;
    let mut worst_kappa: f64 = 0.0;
    for n in 1..=30usize {
        let mut mono = vec![Complex64::default(); n + 1];
        mono[n] = c(1.0, 0.0);
        let kappa = ((n as f64 + 1.0) / (1.0 - 0.5f64.powi(2 * n as i32 + 2))).sqrt();
        let e = sys.get(n);
        worst_coeff = worst_coeff.max(max_gap(&e.poly.coeffs_c64(), &mono));
        worst_kappa = worst_kappa.max((e.kappa_f64() - kappa).abs() / kappa);
        let s = series_orthopoly(&d, &fam, n, &SeriesConfig::default()).map_err(|e| format!("series n = {n}: {e}"))?;
        worst_coeff = worst_coeff.max(max_gap(&s.coeffs, &mono));
        worst_kappa = worst_kappa.max((s.kappa - kappa).abs() / kappa);
    }
    within(start.elapsed(), Duration::from_secs(10))?;
    check(
        worst_coeff <= 1e-12 && worst_kappa <= 1e-12,
        format!("coefficients {worst_coeff:.2e}, kappa {worst_kappa:.2e}, {:.2?}", start.elapsed()),
    )
}

fn route_equivalence() -> Outcome {
    let start = Instant::now();
    let d = reference();
    let fam = enumerate(&d, 14, 0.0).unwrap();
    let sys = ortho_system(&d, 30, 256).unwrap();
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for n in [15, 20, 30] {
        let s = series_orthopoly(&d, &fam, n, &SeriesConfig::default()).map_err(|e| format!("n = {n}: {e}"))?;
        worst = worst.max(max_gap(&s.coeffs, &sys.get(n).poly.coeffs_c64()));
        samples = samples.max(s.samples);
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    check(worst <= 1e-6 && samples <= 2048, format!("disagreement {worst:.2e}, M = {samples}, {:.2?}", start.elapsed()))
}

fn curious_identity() -> Outcome {
    let domains = [
        domain(&[(0.4, 0.0, 0.2)]),
        domain(&[(0.4, 0.0, 0.2), (-0.45, 0.0, 0.2)]),
        domain(&[(0.4, 0.0, 0.2), (-0.45, 0.0, 0.2), (0.0, 0.6, 0.15)]),
    ];
    let mut worst: f64 = 0.0;
    for d in &domains {
        let sys = ortho_system(d, 40, 256).unwrap();
        let prec = sys.precision();
        for n in 1..=40 {
            let p = &sys.get(n).poly;
            let lhs = p.eval(&Complex::with_val(prec, 0));
            let mut rhs = Complex::with_val(prec, 0);
            for h in d.holes() {
                let r2 = h.radius() * h.radius();
                rhs += p.eval(&from_c64(h.center(), prec)) * r2;
            }
            let gap = to_c64(&Complex::with_val(prec, &lhs - &rhs)).norm();
            worst = worst.max(gap / to_c64(&lhs).norm());
        }
    }
    check(worst <= 1e-12, format!("worst relative gap {worst:.2e} over s = 1, 2, 3"))
}

fn kappa_expansion_check() -> Outcome {
    let d = reference();
    let sys = ortho_system(&d, 60, 256).unwrap();
    let rel = |n: usize| {
        let defect = sys.get(n).kappa_defect();
        let first = kappa_expansion(&d, n, 4).unwrap().terms[0].re;
        (defect - first).abs() / defect.abs()
    };
    let (r40, r60) = (rel(40), rel(60));
    let deg = domain(&[(0.25, 0.0, 0.25)]);
    let defect = ortho_system(&deg, 40, 256).unwrap().get(40).kappa_defect();
    let explicit = degenerate_correction(deg.rho_x().unwrap(), 40);
    let deg_rel = (defect - explicit).abs() / defect.abs();
    check(
        r40 <= 0.2 && r60 < r40 && deg_rel < 5e-4,
        format!("relative remainder {r40:.3e} at n = 40, {r60:.3e} at n = 60; degenerate {deg_rel:.2e}"),
    )
}

fn exterior_rates() -> Outcome {
    let d = reference();
    let sys = ortho_system(&d, 60, 256).unwrap();
    let rx = d.rho_x().unwrap();
    let degrees: Vec<usize> = (20..=60).collect();
    let xs: Vec<f64> = degrees.iter().map(|&n| n as f64).collect();
    let fitted = |r: f64| {
        let pts = circle_points(r, 64);
        let ys: Vec<f64> = degrees
            .iter()
            .map(|&n| {
                let p = &sys.get(n).poly;
                pts.iter().map(|&z| p.exterior_defect(z).norm()).fold(0.0, f64::max).ln()
            })
            .collect();
        slope(&xs, &ys)
    };
    let inner = (fitted(1.2), (m_of_r(&d, 1.2).unwrap() / 1.2).ln());
    let outer = (fitted(2.0 * rx), -2.0 * rx.ln());
    let err = |(got, want): (f64, f64)| ((got - want) / want).abs();
    check(
        err(inner) <= 0.07 && err(outer) <= 0.07,
        format!(
            "r = 1.2: {:.4} vs {:.4} ({:.1}%); r = 2 rho_x: {:.4} vs {:.4} ({:.1}%)",
            inner.0,
            inner.1,
            100.0 * err(inner),
            outer.0,
            outer.1,
            100.0 * err(outer)
        ),
    )
}

fn interior_theta() -> Outcome {
    let d = reference();
    let h = &d.holes()[0];
    let scaled: Vec<f64> = [25usize, 50, 100, 200]
        .iter()
        .map(|&n| {
            let t = tjv_tail_sum(&d, 0, n, c(0.0, 0.0)).unwrap();
            (n * n) as f64 / h.a.norm().powi(n as i32) * (t.direct - t.predicted).norm()
        })
        .collect();
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let variation = hi / lo;
    let p: MonicPolynomial = ortho_system(&d, 80, 256).unwrap().get(80).poly.clone();
    let ratio = p.eval_c64(h.a) * (1.0 - h.sigma * h.sigma) / h.a.powi(80);
    let detail = format!(
        "scaled gap {:?}, variation {variation:.1}x; P_80(a)(1 - sigma^2)/a^80 = {:.6}",
        scaled.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
        ratio.re
    );
    check(variation < 3.0 && (ratio - 1.0).norm() <= 0.1, detail)
}

fn chi_limit() -> Outcome {
    let d = reference();
    let x = d.holes()[0].critical.as_ref().unwrap().x;
    let at_x = chi_n_scaled(&d, 0, 200, x).unwrap();
    let rx = x.norm();
    let sups: Vec<f64> = (10..=80)
        .map(|n| {
            circle_points(rx, 64)
                .into_iter()
                .map(|z| chi_n_scaled(&d, 0, n, z).unwrap().norm() / (rx * rx))
                .fold(0.0, f64::max)
        })
        .collect();
    let hi = sups.iter().cloned().fold(0.0, f64::max);
    let lo = sups.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        (at_x.re + 0.5).abs() <= 0.05 && at_x.im.abs() <= 0.05 && hi / lo < 3.0,
        format!("chi_200(x) scaled = {:.4}; sup |x|^2n|chi_n| over n in 10..80 lies in [{lo:.4}, {hi:.4}]", at_x.re),
    )
}

fn kernel_checks() -> Outcome {
    let d = reference();
    let f = enumerate(&d, 10, 0.0).unwrap();
    let rule = QuadratureRule::new(&d, 48, 96).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..=5 {
        let mut poly = vec![c(0.0, 0.0); k + 1];
        poly[k] = c(1.0, 0.0);
        for z in [c(-0.5, 0.0), c(0.0, 0.3)] {
            let r = reproduce_check(&d, &f, &poly, z, &rule).map_err(|e| format!("k = {k}, z = {z}: {e}"))?;
            worst = worst.max(r.residual);
        }
    }
    let h = 1e-5;
    let mut fd_worst: f64 = 0.0;
    for (z, zeta) in [(c(0.3, 0.2), c(1.2, 0.4)), (c(-0.6, 0.1), c(-0.3, -1.25)), (c(0.0, 0.5), c(1.5, 0.0))] {
        let fd = (m_kernel_eval(&f, z + h, zeta).unwrap() - m_kernel_eval(&f, z - h, zeta).unwrap()) / (2.0 * h);
        let exact = kernel_series(&f, z, 1.0 / zeta.conj()) / (zeta * zeta);
        fd_worst = fd_worst.max((fd - exact).norm() / exact.norm());
    }
    check(
        worst < 1e-6 && fd_worst < 1e-6,
        format!("reproduction residual {worst:.2e}; finite-difference relation {fd_worst:.2e}"),
    )
}

fn contraction_profile() -> Outcome {
    let mut notes = Vec::new();
    for d in [reference(), domain(&[(0.4, 0.0, 0.2), (-0.3, 0.3, 0.15)])] {
        let ra = d.rho_a();
        let rx = d.rho_x().unwrap();
        let fixed = (m_of_r(&d, rx).unwrap() / rx - rx.powi(-2)).abs();
        if fixed > 1e-9 {
            return Err(format!("m(rho_x)/rho_x off by {fixed:.2e}"));
        }
        let hi = 1.0 / ra;
        let grid: Vec<f64> = (0..1000).map(|i| ra + (hi - ra) * i as f64 / 999.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&r| m_of_r(&d, r).unwrap()).collect();
        if !vals.windows(2).all(|w| w[1] > w[0]) {
            return Err("m not increasing".into());
        }
        for (&r, &m) in grid.iter().zip(&vals).skip(1).take(998) {
            if !(m < r && m > ra && m_iterate(&d, r, 2).unwrap() < m) {
                return Err(format!("contraction fails at r = {r}"));
            }
        }
        if (m_of_r(&d, ra).unwrap() - ra).abs() > 1e-12 || (m_iterate(&d, 1.0, 200).unwrap() - ra).abs() > 1e-6 {
            return Err("rho_a is not the attracting fixed point".into());
        }
        let f = enumerate(&d, 10, 0.0).unwrap();
        let g = f.gamma_sum();
        for r in [0.5, 1.0, 0.5 * (1.0 + hi)] {
            let mu = mu_of_r(&d, &f, r).unwrap().value;
            if !(g / (1.0 + r * ra).powi(2) <= mu && mu <= g / (1.0 - r * ra).powi(2)) {
                return Err(format!("sandwich fails at r = {r}"));
            }
        }
        notes.push(format!("s = {}: fixed-point gap {fixed:.1e}", d.s()));
    }
    Ok(notes.join("; "))
}

fn zeros() -> Outcome {
    let start = Instant::now();
    let d = reference();
    let sys = ortho_system(&d, 80, 256).unwrap();
    let ra = d.rho_a();
    let limit = d.rho_x().unwrap() + 0.1;
    let m80 = roots_from(&sys.get(80).poly, Some(ra)).map_err(|e| e.to_string())?;
    let u = angular_uniformity(&m80, ra);
    let mut outer: f64 = 0.0;
    for n in [30, 40, 60, 80] {
        let m = roots_from(&sys.get(n).poly, Some(ra)).map_err(|e| e.to_string())?;
        outer = outer.max(m.radial_stats[4]);
    }
    within(start.elapsed(), Duration::from_secs(120))?;
    check(
        u.ks_distance < 0.1 && u.radial_spread < 0.1 && outer < limit,
        format!(
            "KS {:.4}, radial spread {:.4}, largest |z| {outer:.3} < {limit:.3}, {:.2?}",
            u.ks_distance,
            u.radial_spread,
            start.elapsed()
        ),
    )
}

fn assumption_checker() -> Outcome {
    let real = domain(&[(0.4, 0.0, 0.2), (-0.45, 0.0, 0.2), (0.8, 0.0, 0.1)]);
    let small = domain(&[(0.0, 0.5, 0.08), (-0.5, 0.2, 0.08), (0.5, -0.3, 0.08)]);
    let proven = |d: &CircularDomain, want: SufficientCondition| matches!(check_assumption(d).unwrap().verdict, Verdict::Proven(ref v) if v.contains(&want));
    let small_report = check_assumption(&small).unwrap();
    let verdicts = proven(&real, SufficientCondition::RealCenters)
        && proven(&small, SufficientCondition::RadiiSum)
        && !small_report.condition_real_centers
        && proven(&reference(), SufficientCondition::AtMostTwoDisks);
    let mut drift: f64 = 0.0;
    for d in [&real, &small, &reference()] {
        let l = 12;
        let a = enumerate(d, l, ASSUMPTION_PRUNE).unwrap().gamma_sum();
        let b = enumerate(d, l + 4, ASSUMPTION_PRUNE).unwrap().gamma_sum();
        drift = drift.max((a - b).abs());
    }
    check(
        verdicts && drift <= 1e-10,
        format!(
            "verdicts {verdicts}, radii ratio {:.3}, sum drift L 12 -> 16 {drift:.2e}",
            small_report.condition_radii.1
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("annulus exactness", annulus_exactness),
        ("route equivalence", route_equivalence),
        ("curious identity", curious_identity),
        ("kappa expansion", kappa_expansion_check),
        ("exterior rates", exterior_rates),
        ("interior theta", interior_theta),
        ("chi limit", chi_limit),
        ("kernel", kernel_checks),
        ("contraction profile", contraction_profile),
        ("zeros", zeros),
        ("assumption checker", assumption_checker),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
