//! The five subcommands. Each returns tables and plots; writing is left to the caller.

use bergman_cmcd::asymptotics::{chi_n_scaled, exterior_expansion, kappa_expansion, tjv_tail_sum};
use bergman_cmcd::contour::circle_points;
use bergman_cmcd::family::{check_assumption, enumerate_with_cap, m_of_r, CompositionFamily, FamilyError};
use bergman_cmcd::geometry::{CircularDomain, GeometryError};
use bergman_cmcd::kernel::{kernel_series, m_kernel_eval, reproduce_check, QuadratureRule};
use bergman_cmcd::oracle::{ortho_system_auto, OracleError, OrthoSystem};
use bergman_cmcd::series::{series_orthopoly, SeriesConfig};
use bergman_cmcd::zeros::{angular_uniformity, roots_from};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::RunConfig;
use crate::output::{flag, line_chart, num, scatter, tag, wide, Plot, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config: {0}")]
    Parse(String),
    #[error("invalid domain: {0}")]
    Domain(#[from] GeometryError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 3,
            CliError::Domain(_) => 2,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }
}

#[derive(Default)]
pub struct Report {
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    pub summary: Vec<String>,
}

/// Relative tolerance on fitted slopes.
pub const SLOPE_TOLERANCE: f64 = 0.07;
pub const KS_LIMIT: f64 = 0.1;
pub const EXCLUSION_MARGIN: f64 = 0.1;
pub const EXCLUSION_FROM: usize = 30;
pub const KERNEL_TOLERANCE: f64 = 1e-6;

fn family(cfg: &RunConfig, d: &CircularDomain) -> Result<CompositionFamily, FamilyError> {
    enumerate_with_cap(d, cfg.family.max_len, cfg.family.prune_tol.to_f64(), cfg.family.cap)
}

fn series_config(cfg: &RunConfig) -> SeriesConfig {
    SeriesConfig {
        radius: cfg.contour.radius.as_ref().map(|r| r.to_f64()),
        min_samples: cfg.contour.m_init,
        max_samples: cfg.contour.m_max,
        ..SeriesConfig::default()
    }
}

fn degrees(cfg: &RunConfig) -> Vec<usize> {
    let mut d = cfg.degrees.clone();
    d.sort_unstable();
    d.dedup();
    d
}

fn oracle(cfg: &RunConfig, d: &CircularDomain, n_max: usize) -> Result<OrthoSystem, OracleError> {
    ortho_system_auto(d, n_max, cfg.precision_bits)
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

pub fn validate(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.domain()?;
    let mut t = Table::new("validate", &["quantity", "hole", "value", "unit"]);
    let mut row = |q: &str, j: Option<usize>, v: String, unit: &str| {
        t.push(vec![q.into(), j.map(|j| j.to_string()).unwrap_or_default(), v, unit.into()]);
    };
    row("s", None, d.s().to_string(), "count");
    for (j, h) in d.holes().iter().enumerate() {
        row("center_re", Some(j), num(h.center().re), "length");
        row("center_im", Some(j), num(h.center().im), "length");
        row("radius", Some(j), num(h.radius()), "length");
        row("a_re", Some(j), num(h.a.re), "length");
        row("a_im", Some(j), num(h.a.im), "length");
        row("sigma", Some(j), num(h.sigma), "length");
        row("concentric", Some(j), flag(h.is_concentric()), "bool");
        row("degenerate", Some(j), flag(h.is_degenerate()), "bool");
        if let Some(c) = &h.critical {
            row("x_re", Some(j), num(c.x.re), "length");
            row("x_im", Some(j), num(c.x.im), "length");
        }
    }
    let rho_x = d.rho_x();
    row("rho_a", None, num(d.rho_a()), "length");
    row("rho_x", None, rho_x.map(num).unwrap_or_else(|| "inf".into()), "length");
    row("area", None, num(d.area()), "area");
    let verdict = match check_assumption(&d) {
        Ok(rep) => {
            row("real_centers", None, flag(rep.condition_real_centers), "bool");
            row("radii_ratio", None, num(rep.condition_radii.1), "1");
            row("gamma_sum", None, num(rep.truncated_sum), "1");
            row("gamma_tail", None, num(rep.tail), "1");
            format!("{:?}", rep.verdict)
        }
        Err(e) => format!("error: {}", tag(&e)),
    };
    row("assumption", None, verdict.clone(), "text");
    let summary = vec![
        format!("valid domain with {} hole(s)", d.s()),
        format!("rho_a = {:.6}", d.rho_a()),
        format!("rho_x = {}", rho_x.map(|x| format!("{x:.6}")).unwrap_or_else(|| "inf".into())),
        format!("assumption: {verdict}"),
    ];
    Ok(Report { tables: vec![t], plots: Vec::new(), summary })
}

pub fn orthopoly(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.domain()?;
    let ns = degrees(cfg);
    let n_max = *ns.last().expect("degrees checked non-empty");
    let sys = oracle(cfg, &d, n_max);
    let fam = family(cfg, &d);
    let scfg = series_config(cfg);
    let series: Vec<_> = ns
        .par_iter()
        .map(|&n| match &fam {
            Ok(f) => series_orthopoly(&d, f, n, &scfg).map_err(|e| (tag(&e), e.to_string())),
            Err(e) => Err((tag(e), e.to_string())),
        })
        .collect();
    let mut coeffs = Table::new(
        "orthopoly_coefficients",
        &["n [degree]", "k [power]", "route", "status", "re [1]", "im [1]", "disagreement [abs]"],
    );
    let mut kappa = Table::new(
        "orthopoly_kappa",
        &[
            "n [degree]",
            "route",
            "status",
            "kappa [1]",
            "disagreement [rel]",
            "samples [count]",
            "layers [count]",
            "message",
        ],
    );
    let mut any_ok = false;
    let mut worst = Vec::new();
    for (&n, s) in ns.iter().zip(&series) {
        let exact = sys.as_ref().ok().map(|sys| sys.get(n));
        match &sys {
            Ok(sys) => {
                any_ok = true;
                let e = sys.get(n);
                for (k, c) in e.poly.full_coeffs(sys.precision()).iter().enumerate() {
                    coeffs.push(vec![
                        n.to_string(),
                        k.to_string(),
                        "oracle".into(),
                        "ok".into(),
                        wide(c.real()),
                        wide(c.imag()),
                        String::new(),
                    ]);
                }
                kappa.push(vec![
                    n.to_string(),
                    "oracle".into(),
                    "ok".into(),
                    wide(&e.kappa),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("residual {}", num(e.residual)),
                ]);
            }
            Err(err) => {
                coeffs.push(vec![
                    n.to_string(),
                    String::new(),
                    "oracle".into(),
                    tag(err),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                kappa.push(vec![
                    n.to_string(),
                    "oracle".into(),
                    tag(err),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    err.to_string(),
                ]);
            }
        }
        match s {
            Ok(r) => {
                any_ok = true;
                let want = exact.map(|e| e.poly.coeffs_c64());
                let mut gap: f64 = 0.0;
                for k in 0..=n {
                    let c = if k < n { r.coeffs[k] } else { Complex64::new(1.0, 0.0) };
                    let dis = want.as_ref().map(|w| {
                        let v = if k < n { w[k] } else { Complex64::new(1.0, 0.0) };
                        (c - v).norm()
                    });
                    gap = gap.max(dis.unwrap_or(0.0));
                    coeffs.push(vec![
                        n.to_string(),
                        k.to_string(),
                        "series".into(),
                        "ok".into(),
                        num(c.re),
                        num(c.im),
                        dis.map(num).unwrap_or_default(),
                    ]);
                }
                let rel = exact.map(|e| (r.kappa - e.kappa_f64()).abs() / e.kappa_f64());
                kappa.push(vec![
                    n.to_string(),
                    "series".into(),
                    "ok".into(),
                    num(r.kappa),
                    rel.map(num).unwrap_or_default(),
                    r.samples.to_string(),
                    r.layers.to_string(),
                    format!("rho {}", num(r.regime.radius)),
                ]);
                if want.is_some() {
                    worst.push((n as f64, gap.max(1e-300).log10()));
                }
            }
            Err((t, msg)) => {
                coeffs.push(vec![
                    n.to_string(),
                    String::new(),
                    "series".into(),
                    t.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                kappa.push(vec![
                    n.to_string(),
                    "series".into(),
                    t.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    msg.clone(),
                ]);
            }
        }
    }
    if !any_ok {
        return Err(CliError::Failed("no degree succeeded on either route".into()));
    }
    let ok_series = series.iter().filter(|s| s.is_ok()).count();
    let summary = vec![format!(
        "{} degree(s): oracle {}, series {ok_series} succeeded",
        ns.len(),
        if sys.is_ok() { "all" } else { "none" }
    )];
    let plots = vec![Plot {
        name: "orthopoly_disagreement".into(),
        svg: line_chart(
            "oracle vs series coefficient disagreement",
            "n",
            "log10 max |difference|",
            &[("series - oracle".into(), worst)],
        ),
    }];
    Ok(Report { tables: vec![coeffs, kappa], plots, summary })
}

struct Claim {
    name: String,
    parameter: String,
    xs: Vec<f64>,
    observed: Vec<f64>,
    predicted_slope: Option<f64>,
    /// Values at or below this are roundoff at working precision and are left out of the fit.
    floor: f64,
}

impl Claim {
    fn row(&self) -> (Vec<String>, bool) {
        let (xs, logs): (Vec<f64>, Vec<f64>) = self
            .xs
            .iter()
            .zip(&self.observed)
            .filter(|(_, v)| v.abs() > self.floor)
            .map(|(&x, v)| (x, v.abs().ln()))
            .unzip();
        let zero = logs.is_empty();
        let (fitted, status) = match slope(&xs, &logs) {
            _ if zero => (None, "zero at working precision"),
            Some(f) if xs.len() == self.xs.len() => (Some(f), "ok"),
            Some(f) => (Some(f), "fit excludes values below working precision"),
            None => (None, "too few degrees"),
        };
        let rel = match (fitted, self.predicted_slope) {
            (Some(f), Some(p)) => Some(((f - p) / p).abs()),
            _ => None,
        };
        let pass = zero || rel.is_some_and(|r| r <= SLOPE_TOLERANCE);
        let row = vec![
            self.name.clone(),
            self.parameter.clone(),
            fitted.map(num).unwrap_or_default(),
            self.predicted_slope.map(num).unwrap_or_default(),
            rel.map(num).unwrap_or_default(),
            flag(pass),
            status.into(),
        ];
        (row, pass)
    }
}

pub fn asymptotics(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.domain()?;
    let ns = degrees(cfg);
    let n_max = *ns.last().expect("degrees checked non-empty");
    let sys = oracle(cfg, &d, n_max).map_err(|e| CliError::Failed(e.to_string()))?;
    let k_max = cfg.expansion.k;
    let floor = 2f64.powi(-(3 * cfg.precision_bits.min(1200) as i32) / 4);
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let mut trace =
        Table::new("asymptotics_trace", &["claim", "parameter", "n [degree]", "observed [1]", "predicted [1]"]);
    let mut claims = Vec::new();

    let rho_x = d.rho_x();
    let radii: Vec<(f64, Option<f64>)> = match rho_x {
        Some(rx) => {
            let inner = 1.0 + 0.3 * (rx - 1.0);
            vec![(inner, m_of_r(&d, inner).ok().map(|m| (m / inner).ln())), (2.0 * rx, Some(-2.0 * rx.ln()))]
        }
        None => vec![(2.0, None)],
    };
    for (r, predicted_slope) in radii {
        let pts = circle_points(r, 64);
        let mut observed = Vec::new();
        for &n in &ns {
            let p = &sys.get(n).poly;
            let (v, at) = pts.iter().map(|&z| (p.exterior_defect(z).norm(), z)).fold((0.0, pts[0]), |a, b| {
                if b.0 > a.0 {
                    b
                } else {
                    a
                }
            });
            let predicted = match rho_x {
                Some(rx) if r > rx => exterior_expansion(&d, n, at, k_max).ok().map(|e| num(e.correction().norm())),
                None => Some(num(0.0)),
                _ => None,
            };
            trace.push(vec![
                "exterior".into(),
                format!("r={}", num(r)),
                n.to_string(),
                num(v),
                predicted.unwrap_or_default(),
            ]);
            observed.push(v);
        }
        claims.push(Claim {
            name: "exterior".into(),
            parameter: format!("r={}", num(r)),
            xs: xs.clone(),
            observed,
            predicted_slope,
            floor,
        });
    }

    let mut observed = Vec::new();
    for &n in &ns {
        let defect = sys.get(n).kappa_defect();
        let exp = kappa_expansion(&d, n, k_max).map_err(|e| CliError::Failed(e.to_string()))?;
        trace.push(vec!["kappa".into(), "defect".into(), n.to_string(), num(defect), num(exp.correction().re)]);
        for (k, t) in exp.terms.iter().enumerate() {
            trace.push(vec!["kappa".into(), format!("term k={k}"), n.to_string(), String::new(), num(t.re)]);
        }
        observed.push(defect);
    }
    let decay = [rho_x.map(|x| -2.0 * x.ln()), d.concentric_decay().map(f64::ln)];
    let predicted_slope = decay.into_iter().flatten().reduce(f64::max);
    claims.push(Claim {
        name: "kappa".into(),
        parameter: "defect".into(),
        xs: xs.clone(),
        observed,
        predicted_slope,
        floor: 0.0,
    });

    for j in d.dominant_a() {
        let h = &d.holes()[j];
        if h.a.norm() == 0.0 {
            continue;
        }
        let mut observed = Vec::new();
        for &n in &ns {
            let t = tjv_tail_sum(&d, j, n, Complex64::new(0.0, 0.0)).map_err(|e| CliError::Failed(e.to_string()))?;
            let gap = (t.direct - t.predicted).norm();
            let nf = n as f64;
            trace.push(vec![
                "theta".into(),
                format!("hole={j}"),
                n.to_string(),
                num(nf * nf * gap / h.a.norm().powi(n as i32)),
                String::new(),
            ]);
            let at_a = sys.get(n).poly.eval_c64(h.a) * (1.0 - h.sigma * h.sigma) / h.a.powi(n as i32);
            trace.push(vec!["value_at_a".into(), format!("hole={j}"), n.to_string(), num(at_a.re), num(1.0)]);
            observed.push(nf * nf * gap);
        }
        claims.push(Claim {
            name: "theta".into(),
            parameter: format!("hole={j}"),
            xs: xs.clone(),
            observed,
            predicted_slope: Some(h.a.norm().ln()),
            floor: 0.0,
        });
    }

    let log_n: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    for j in d.dominant_x() {
        let x = d.holes()[j].critical.as_ref().map(|c| c.x).expect("dominant holes have x");
        let mut observed = Vec::new();
        for &n in &ns {
            let v = chi_n_scaled(&d, j, n, x).map_err(|e| CliError::Failed(e.to_string()))?;
            trace.push(vec!["chi".into(), format!("hole={j}"), n.to_string(), num(v.re), num(-0.5)]);
            observed.push(v.re + 0.5);
        }
        claims.push(Claim {
            name: "chi".into(),
            parameter: format!("hole={j} vs log n"),
            xs: log_n.clone(),
            observed,
            predicted_slope: Some(-0.5),
            floor: 0.0,
        });
    }

    let mut rates = Table::new(
        "asymptotics_rates",
        &[
            "claim",
            "parameter",
            "fitted_slope [log per unit]",
            "predicted_slope [log per unit]",
            "relative_error [1]",
            "pass",
            "status",
        ],
    );
    let mut summary = Vec::new();
    let mut series = Vec::new();
    for c in &claims {
        let (row, pass) = c.row();
        summary.push(format!(
            "{} {}: fitted {} predicted {} -> {}",
            c.name,
            c.parameter,
            row[2],
            row[3],
            if pass { "pass" } else { "fail" }
        ));
        rates.push(row);
        series.push((
            format!("{} {}", c.name, c.parameter),
            c.xs.iter().zip(&c.observed).map(|(&x, v)| (x, v.abs().ln())).collect(),
        ));
    }
    let plots = vec![Plot {
        name: "asymptotics_rates".into(),
        svg: line_chart("observed error against degree", "n (or log n for chi)", "log |error|", &series),
    }];
    Ok(Report { tables: vec![rates, trace], plots, summary })
}

pub fn zeros(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.domain()?;
    let ns = degrees(cfg);
    let n_max = *ns.last().expect("degrees checked non-empty");
    let sys = oracle(cfg, &d, n_max).map_err(|e| CliError::Failed(e.to_string()))?;
    let ra = d.rho_a();
    let start = (ra > 0.0).then_some(ra);
    let measures: Vec<_> = ns.par_iter().map(|&n| roots_from(&sys.get(n).poly, start)).collect();
    let mut roots = Table::new(
        "zeros_roots",
        &["n [degree]", "k [index]", "re [length]", "im [length]", "modulus [length]", "residual [abs]"],
    );
    let mut stats = Table::new(
        "zeros_stats",
        &[
            "n [degree]",
            "status",
            "ks_distance [1]",
            "ks_pass",
            "radial_spread [length]",
            "degenerate",
            "max_modulus [length]",
            "exterior_exclusion",
            "relative_residual [1]",
            "iterations [count]",
        ],
    );
    let mut plots = Vec::new();
    let mut summary = Vec::new();
    let mut any_ok = false;
    for (&n, m) in ns.iter().zip(&measures) {
        let m = match m {
            Ok(m) => m,
            Err(e) => {
                let mut row = vec![n.to_string(), tag(e)];
                row.resize(stats.columns.len(), String::new());
                stats.push(row);
                continue;
            }
        };
        any_ok = true;
        for (k, (z, r)) in m.roots.iter().zip(&m.residuals).enumerate() {
            roots.push(vec![n.to_string(), k.to_string(), num(z.re), num(z.im), num(z.norm()), num(*r)]);
        }
        let u = angular_uniformity(m, ra);
        let top = m.radial_stats[4];
        let exclusion = match d.rho_x() {
            _ if n < EXCLUSION_FROM => "n/a".to_string(),
            Some(rx) => flag(top < rx + EXCLUSION_MARGIN),
            None => flag(true),
        };
        stats.push(vec![
            n.to_string(),
            "ok".into(),
            num(u.ks_distance),
            flag(!u.degenerate && u.ks_distance < KS_LIMIT),
            num(u.radial_spread),
            flag(u.degenerate),
            num(top),
            exclusion.clone(),
            num(m.relative_residual),
            m.iterations.to_string(),
        ]);
        summary.push(format!(
            "n = {n}: KS {:.4}, radial spread {:.4}, max |z| {top:.4}, degenerate {}, exclusion {exclusion}",
            u.ks_distance, u.radial_spread, u.degenerate
        ));
        let mut circles = vec![("rho_a".to_string(), ra)];
        if let Some(rx) = d.rho_x() {
            circles.push(("rho_x".into(), rx));
        }
        plots.push(Plot { name: format!("zeros_n{n}"), svg: scatter(&format!("zeros of P_{n}"), &m.roots, &circles) });
    }
    if !any_ok {
        return Err(CliError::Failed("root finding failed for every degree".into()));
    }
    Ok(Report { tables: vec![roots, stats], plots, summary })
}

pub fn kernel_check(cfg: &RunConfig) -> Result<Report, CliError> {
    let d = cfg.domain()?;
    let fam = family(cfg, &d).map_err(|e| CliError::Failed(e.to_string()))?;
    let rule = QuadratureRule::new(&d, 48, 96).map_err(|e| CliError::Failed(e.to_string()))?;
    let probes: Vec<Complex64> = [Complex64::new(-0.5, 0.0), Complex64::new(0.0, 0.3), Complex64::new(0.0, 0.0)]
        .into_iter()
        .filter(|&z| d.contains(z))
        .collect();
    let mut rep = Table::new(
        "kernel_reproduction",
        &[
            "k [power]",
            "z_re [length]",
            "z_im [length]",
            "status",
            "residual [abs]",
            "rule_estimate [abs]",
            "kernel_tail [abs]",
            "pass",
        ],
    );
    let mut any_ok = false;
    let mut worst: f64 = 0.0;
    for k in 0..=5usize {
        let mut f = vec![Complex64::new(0.0, 0.0); k + 1];
        f[k] = Complex64::new(1.0, 0.0);
        for &z in &probes {
            let head = vec![k.to_string(), num(z.re), num(z.im)];
            let tail = match reproduce_check(&d, &fam, &f, z, &rule) {
                Ok(r) => {
                    any_ok = true;
                    worst = worst.max(r.residual);
                    vec![
                        "ok".into(),
                        num(r.residual),
                        num(r.rule_estimate),
                        num(r.kernel_tail),
                        flag(r.residual < KERNEL_TOLERANCE),
                    ]
                }
                Err(e) => vec![tag(&e), String::new(), String::new(), String::new(), flag(false)],
            };
            rep.push([head, tail].concat());
        }
    }
    let mut rel = Table::new(
        "kernel_relation",
        &[
            "z_re [length]",
            "z_im [length]",
            "zeta_re [length]",
            "zeta_im [length]",
            "status",
            "relative_error [1]",
            "pass",
        ],
    );
    let h = 1e-5;
    let pairs = [
        (Complex64::new(0.3, 0.2), Complex64::new(1.2, 0.4)),
        (Complex64::new(-0.6, 0.1), Complex64::new(-0.3, -1.25)),
        (Complex64::new(0.0, 0.5), Complex64::new(1.5, 0.0)),
    ];
    for (z, zeta) in pairs {
        let head = vec![num(z.re), num(z.im), num(zeta.re), num(zeta.im)];
        let fd = m_kernel_eval(&fam, z + h, zeta).and_then(|p| Ok((p - m_kernel_eval(&fam, z - h, zeta)?) / (2.0 * h)));
        let tail = match fd {
            Ok(fd) => {
                any_ok = true;
                let exact = kernel_series(&fam, z, 1.0 / zeta.conj()) / (zeta * zeta);
                let e = (fd - exact).norm() / exact.norm();
                vec!["ok".into(), num(e), flag(e < KERNEL_TOLERANCE)]
            }
            Err(e) => vec![tag(&e), String::new(), flag(false)],
        };
        rel.push([head, tail].concat());
    }
    if !any_ok {
        return Err(CliError::Failed("every kernel check failed".into()));
    }
    let summary = vec![format!("worst reproduction residual {worst:.3e} over {} point(s)", probes.len())];
    Ok(Report { tables: vec![rep, rel], plots: Vec::new(), summary })
}
