use bergman_cmcd::asymptotics::{chi_n_scaled, exterior_expansion, interior_prediction, kappa_expansion};
use bergman_cmcd::contour::circle_points;
use bergman_cmcd::family::{check_assumption, enumerate, Verdict};
use bergman_cmcd::geometry::{CircularDomain, Disk};
use bergman_cmcd::oracle::ortho_system;
use bergman_cmcd::zeros::{roots_from, two_circle_limit, two_circle_phase, winding_count};
use num_complex::Complex64;

fn reference() -> CircularDomain {
    CircularDomain::validate(vec![Disk::real(0.4, 0.2)]).unwrap()
}

#[test]
fn two_circle_normal_limit() {
    let d = reference();
    let a = d.holes()[0].a;
    let sys = ortho_system(&d, 160, 256).unwrap();
    let mut scaled = Vec::new();
    for n in [40, 80, 160] {
        let p = &sys.get(n).poly;
        let q = two_circle_phase(&d, n).unwrap();
        let sup = circle_points(0.5 * a.norm(), 64)
            .into_iter()
            .map(|z| {
                let lhs = n as f64 * p.eval_c64(z) / a.powi(n as i32 + 1);
                (lhs - two_circle_limit(&d, q, z).unwrap()).norm()
            })
            .fold(0.0, f64::max);
        scaled.push(n as f64 * sup);
    }
    assert!(scaled.iter().all(|&v| v < 4.0), "{scaled:?}");
    let p = &sys.get(160).poly;
    let q = two_circle_phase(&d, 160).unwrap();
    for r in [0.5, 0.7] {
        let radius = r * d.rho_a();
        let zp = winding_count(|z| p.eval_c64(z), radius).unwrap();
        let zf = winding_count(|z| two_circle_limit(&d, q, z).unwrap(), radius).unwrap();
        assert_eq!(zp, zf, "r = {r}");
    }
}

#[test]
fn value_at_the_exceptional_point() {
    let d = reference();
    let fam = enumerate(&d, 14, 0.0).unwrap();
    let sys = ortho_system(&d, 80, 256).unwrap();
    let h = &d.holes()[0];
    let p = &sys.get(80).poly;
    let exact = p.eval_c64(h.a);
    let predicted = interior_prediction(&d, &fam, 80, h.a).unwrap();
    assert!((exact / predicted - 1.0).norm() < 1e-6, "{exact} vs {predicted}");
    let scale = h.a.norm().powi(80) / 80.0;
    for z in [Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.2), Complex64::new(-0.2, 0.1)] {
        let gap = (p.eval_c64(z) - interior_prediction(&d, &fam, 80, z).unwrap()).norm();
        assert!(gap < 0.1 * scale, "{z}: {gap} vs {scale}");
    }
}

#[test]
fn more_expansion_terms_help() {
    let d = reference();
    let sys = ortho_system(&d, 40, 256).unwrap();
    let defect = sys.get(40).kappa_defect();
    let e = kappa_expansion(&d, 40, 4).unwrap();
    let one = (defect - e.terms[0].re).abs() / defect.abs();
    let three = (defect - e.terms[..3].iter().map(|t| t.re).sum::<f64>()).abs() / defect.abs();
    assert!(three < 1e-6 && three < one, "{one} {three}");
    let z = Complex64::new(2.0, 0.0);
    let exact = sys.get(40).poly.exterior_defect(z);
    let e = exterior_expansion(&d, 40, z, 4).unwrap();
    let one = (exact - e.terms[0]).norm() / exact.norm();
    let three = (exact - e.terms[..3].iter().sum::<Complex64>()).norm() / exact.norm();
    assert!(three < one && three < 0.1, "{one} {three}");
}

#[test]
fn chi_approaches_minus_half() {
    let d = reference();
    let x = d.holes()[0].critical.as_ref().unwrap().x;
    let gaps: Vec<f64> =
        [50, 100, 200, 400].iter().map(|&n| (chi_n_scaled(&d, 0, n, x).unwrap().re + 0.5).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    for w in gaps.windows(2) {
        // halving like n^{-1/2}
        assert!((w[1] / w[0] - 0.5f64.sqrt()).abs() < 0.03, "{gaps:?}");
    }
}

#[test]
fn zeros_are_resolved_and_excluded_from_the_exterior() {
    let domains = [
        reference(),
        CircularDomain::validate(vec![Disk::real(0.4, 0.2), Disk::new(Complex64::new(-0.3, 0.3), 0.15)]).unwrap(),
    ];
    for d in &domains {
        assert!(matches!(check_assumption(d).unwrap().verdict, Verdict::Proven(_)));
        let sys = ortho_system(d, 60, 256).unwrap();
        let limit = d.rho_x().unwrap() + 0.1;
        for n in [10, 30, 45, 60] {
            let m = roots_from(&sys.get(n).poly, Some(d.rho_a())).unwrap();
            assert!(m.relative_residual < 1e-10, "n = {n}: {}", m.relative_residual);
            if n >= 30 {
                assert!(m.radial_stats[4] < limit, "n = {n}: {}", m.radial_stats[4]);
            }
        }
    }
}
