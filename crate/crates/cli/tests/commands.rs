use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bergman_cmcd_cli::config::RunConfig;
use tempfile::TempDir;

const REFERENCE: &str = r#"{"domain": [{"cx": "0.4", "cy": "0", "r": "0.2"}], "degrees": [5, 20]}"#;
const ANNULUS: &str = r#"{"domain": [{"cx": "0", "cy": "0", "r": "0.5"}], "degrees": [1, 2, 3, 5, 8, 13, 21, 30], "family": {"max_len": 30}}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bergman-cmcd"))
}

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{sub}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{sub}-out"));
    let output = bin().arg(sub).arg("--config").arg(&cfg).arg("--out").arg(&out).args(extra).output().unwrap();
    (output, out)
}

/// Rows after the hash record and the header, keyed by column name.
fn table(path: &Path) -> (String, Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_path(path).unwrap();
    let mut records = r.records().map(|r| r.unwrap().iter().map(str::to_string).collect::<Vec<_>>());
    let hash = records.next().unwrap();
    assert_eq!(hash[0], "config_sha256");
    let header = records.next().unwrap();
    (hash[1].clone(), header, records.collect())
}

fn col(header: &[String], prefix: &str) -> usize {
    header.iter().position(|h| h.starts_with(prefix)).unwrap_or_else(|| panic!("no column {prefix}"))
}

#[test]
fn validate_reports_reference_radii() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(tmp.path(), "validate", REFERENCE, &[]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("rho_a = 0.420204"), "{stdout}");
    assert!(stdout.contains("rho_x = 1.666667"), "{stdout}");
    let (hash, _, rows) = table(&out.join("validate.csv"));
    assert_eq!(hash, RunConfig::parse(REFERENCE).unwrap().hash());
    let rho_a: f64 = rows.iter().find(|r| r[0] == "rho_a").unwrap()[2].parse().unwrap();
    assert!((rho_a - 0.4202041028867287).abs() < 1e-15);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let overlap = r#"{"domain": [{"cx": 0.4, "cy": 0, "r": 0.2}, {"cx": -0.05, "cy": 0, "r": 0.3}]}"#;
    let (o, _) = run(tmp.path(), "validate", overlap, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("disks 0 and 1"));
    let (o, _) = run(tmp.path(), "validate", r#"{"domain": ["#, &[]);
    assert_eq!(o.status.code(), Some(3));
    let (o, _) = run(tmp.path(), "zeros", r#"{"domain": [], "seed": 3}"#, &[]);
    assert_eq!(o.status.code(), Some(3));
    let (o, _) = run(tmp.path(), "orthopoly", overlap, &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn orthopoly_annulus_routes_agree_exactly() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(tmp.path(), "orthopoly", ANNULUS, &[]);
    assert!(o.status.success());
    let (_, header, rows) = table(&out.join("orthopoly_coefficients.csv"));
    let (route, dis) = (col(&header, "route"), col(&header, "disagreement"));
    let series: Vec<f64> = rows.iter().filter(|r| r[route] == "series").map(|r| r[dis].parse().unwrap()).collect();
    assert_eq!(series.len(), [1, 2, 3, 5, 8, 13, 21, 30].iter().map(|n| n + 1).sum::<usize>());
    assert!(series.iter().all(|&d| d < 1e-12));
}

#[test]
fn orthopoly_reference_small_degree_is_tagged() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(tmp.path(), "orthopoly", REFERENCE, &[]);
    assert!(o.status.success());
    let (_, header, rows) = table(&out.join("orthopoly_kappa.csv"));
    let (n, route, status) = (col(&header, "n "), col(&header, "route"), col(&header, "status"));
    let find = |deg: &str, r: &str| rows.iter().find(|x| x[n] == deg && x[route] == r).unwrap().clone();
    assert_eq!(find("5", "series")[status], "NotYetAsymptotic");
    assert_eq!(find("5", "oracle")[status], "ok");
    assert_eq!(find("20", "series")[status], "ok");
    let (_, header, rows) = table(&out.join("orthopoly_coefficients.csv"));
    let (n, route, dis) = (col(&header, "n "), col(&header, "route"), col(&header, "disagreement"));
    let worst = rows
        .iter()
        .filter(|r| r[n] == "20" && r[route] == "series")
        .map(|r| r[dis].parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn asymptotics_rates_and_traces() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"domain": [{"cx": "0.4", "cy": "0", "r": "0.2"}], "degrees": [20, 30, 40, 50, 60, 100, 200]}"#;
    let (o, out) = run(tmp.path(), "asymptotics", cfg, &["--svg"]);
    assert!(o.status.success());
    let (_, header, rows) = table(&out.join("asymptotics_rates.csv"));
    let (claim, param, pass) = (col(&header, "claim"), col(&header, "parameter"), col(&header, "pass"));
    let outer = rows.iter().find(|r| r[claim] == "exterior" && r[param].starts_with("r=3.33")).unwrap();
    assert_eq!(outer[pass], "true");
    let (_, header, rows) = table(&out.join("asymptotics_trace.csv"));
    let (claim, observed) = (col(&header, "claim"), col(&header, "observed"));
    let chi: Vec<f64> = rows.iter().filter(|r| r[claim] == "chi").map(|r| r[observed].parse().unwrap()).collect();
    assert!(chi.windows(2).all(|w| (w[1] + 0.5).abs() < (w[0] + 0.5).abs()));
    assert!((chi.last().unwrap() + 0.5).abs() < 0.05);
    assert!(fs::read_to_string(out.join("asymptotics_rates.svg")).unwrap().starts_with("<?xml"));

    let (o, out) = run(tmp.path(), "asymptotics", ANNULUS, &[]);
    assert!(o.status.success());
    let (_, header, rows) = table(&out.join("asymptotics_trace.csv"));
    let (param, predicted) = (col(&header, "parameter"), col(&header, "predicted"));
    let terms: Vec<&Vec<String>> = rows.iter().filter(|r| r[param].starts_with("term")).collect();
    assert!(!terms.is_empty());
    assert!(terms.iter().all(|r| r[predicted].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn zeros_statistics() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"domain": [{"cx": "0.4", "cy": "0", "r": "0.2"}], "degrees": [20, 30, 40, 80]}"#;
    let (o, out) = run(tmp.path(), "zeros", cfg, &["--svg"]);
    assert!(o.status.success());
    let (_, header, rows) = table(&out.join("zeros_stats.csv"));
    let (n, ks, excl) = (col(&header, "n "), col(&header, "ks_pass"), col(&header, "exterior_exclusion"));
    assert_eq!(rows.iter().find(|r| r[n] == "80").unwrap()[ks], "true");
    for r in &rows {
        let expect = if r[n] == "20" { "n/a" } else { "true" };
        assert_eq!(r[excl], expect);
    }
    let svg = fs::read_to_string(out.join("zeros_n80.svg")).unwrap();
    assert!(svg.contains("rho_a") && svg.contains("rho_x"));

    let (o, out) = run(tmp.path(), "zeros", ANNULUS, &[]);
    assert!(o.status.success());
    let (_, header, rows) = table(&out.join("zeros_stats.csv"));
    let deg = col(&header, "degenerate");
    assert!(rows.iter().all(|r| r[deg] == "true"));
}

#[test]
fn kernel_check_passes_on_reference() {
    let tmp = TempDir::new().unwrap();
    let (o, out) = run(tmp.path(), "kernel-check", REFERENCE, &["--max-len", "10"]);
    assert!(o.status.success());
    for name in ["kernel_reproduction.csv", "kernel_relation.csv"] {
        let (_, header, rows) = table(&out.join(name));
        let pass = col(&header, "pass");
        assert!(!rows.is_empty() && rows.iter().all(|r| r[pass] == "true"), "{name}");
    }
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = r#"{"domain": [{"cx": "0.4", "cy": "0", "r": "0.2"}, {"cx": "-0.3", "cy": "0.3", "r": "0.15"}], "degrees": [20, 24, 30], "family": {"max_len": 8}}"#;
    let mut seen = Vec::new();
    for threads in ["1", "4"] {
        for sub in ["orthopoly", "asymptotics", "zeros"] {
            let dir = tmp.path().join(threads);
            fs::create_dir_all(&dir).unwrap();
            let cfg_path = dir.join("c.json");
            fs::write(&cfg_path, cfg).unwrap();
            let out = dir.join(sub);
            let o = bin()
                .env("BERGMAN_CMCD_THREADS", threads)
                .args([sub, "--config"])
                .arg(&cfg_path)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
            let mut files: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            assert!(files.iter().all(|f| f.extension().is_some_and(|e| e == "csv")));
            seen.push(files.iter().map(|f| fs::read(f).unwrap()).collect::<Vec<_>>());
        }
    }
    assert_eq!(seen[..3], seen[3..]);
}
