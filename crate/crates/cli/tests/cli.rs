use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_overbound"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn overbound")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Header and raw cells of a CSV without quoting.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (h, rows) = table(text);
    let i = h.iter().position(|c| c == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

/// Deterministic samples: a 90/10 mixture of N(mu, 1) and N(mu, 10) via a small LCG and Box-Muller.
fn samples_csv(n: usize, mu: f64) -> String {
    mixture_csv(n, mu, 10.0)
}

fn mixture_csv(n: usize, mu: f64, wide: f64) -> String {
    let mut state: u64 = 12345;
    let mut uniform = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    let mut out = String::from("error_m\n");
    for _ in 0..n {
        let z = (-2.0 * uniform().ln()).sqrt() * (std::f64::consts::TAU * uniform()).cos();
        let sd = if uniform() < 0.9 { 1.0 } else { wide };
        out.push_str(&format!("{}\n", mu + sd * z));
    }
    out
}

#[test]
fn cauchy_folded_cdf_is_a_quarter_at_one_scale() {
    let d = TempDir::new().unwrap();
    let c = write(d.path(), "c.json", r#"{"type":"cauchy","m":0.0,"lambda":1.0}"#);
    let out = ok(&["curves", "--bound", s(&c), "--x-min", "-1", "--x-max", "1", "--points", "3"]);
    let x = column(&out, "x");
    let folded = column(&out, "folded_cdf");
    assert_eq!(x, vec![-1.0, 0.0, 1.0]);
    assert!((folded[0] - 0.25).abs() < 1e-12 && (folded[2] - 0.25).abs() < 1e-12);
    assert!((folded[1] - 0.5).abs() < 1e-12);
}

#[test]
fn gaussian_is_a_line_on_quantile_scale() {
    let d = TempDir::new().unwrap();
    let g = write(d.path(), "g.json", r#"{"type":"gaussian","mu":1.0,"sigma":2.0}"#);
    let out = ok(&["curves", "--bound", s(&g), "--x-min", "-9", "--x-max", "11", "--points", "201"]);
    let x = column(&out, "x");
    let q = column(&out, "quantile_scale_cdf");
    // Least-squares line through the points.
    let n = x.len() as f64;
    let (mx, mq) = (x.iter().sum::<f64>() / n, q.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&q).map(|(a, b)| (a - mx) * (b - mq)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let resid = x.iter().zip(&q).map(|(a, b)| (b - mq - slope * (a - mx)).abs()).fold(0.0, f64::max);
    assert!(resid < 1e-9, "max residual {resid}");
    assert!((slope - 0.5).abs() < 1e-9);
}

#[test]
fn fitted_su_bound_has_flat_density_between_transitions() {
    let d = TempDir::new().unwrap();
    let data = write(d.path(), "s.csv", &samples_csv(4000, 0.0));
    let rec = d.path().join("su.json");
    ok(&["fit", "--samples", s(&data), "--out", s(&rec)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rec).unwrap()).unwrap();
    assert_eq!(v["method"], "cauchy_gaussian_su");
    assert!(v["report"].is_object());
    let (k, x1, x2) = (v["K"].as_f64().unwrap(), v["x1"].as_f64().unwrap(), v["x2"].as_f64().unwrap());
    assert!(x1 < x2);
    let (lo, hi) = (x1 + 1e-6 * (x2 - x1), x2 - 1e-6 * (x2 - x1));
    let out = ok(&["curves", "--bound", s(&rec), "--x-min", &lo.to_string(), "--x-max", &hi.to_string(), "--points", "25"]);
    for p in column(&out, "pdf") {
        assert!((p - k).abs() <= 1e-12 * k.max(1.0), "pdf {p} vs K {k}");
    }
}

#[test]
fn navden_without_parameters_is_an_input_error() {
    let d = TempDir::new().unwrap();
    let data = write(d.path(), "s.csv", &samples_csv(500, 0.0));
    let out = run(&["fit", "--samples", s(&data), "--method", "navden"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error[input]:"), "{err}");
    for f in ["delta", "x_tilde_max", "x_tilde_min", "B_tilde", "C_tilde", "k_tr", "k_max", "k_min", "k_bias"] {
        assert!(err.contains(f), "missing {f} in {err}");
    }
}

#[test]
fn navden_fit_with_parameter_file() {
    let d = TempDir::new().unwrap();
    let data = write(d.path(), "s.csv", &mixture_csv(2000, 0.0, 1.0));
    let params = write(
        d.path(),
        "p.toml",
        "delta = 0.2\nx_tilde_max = 42\nx_tilde_min = -42\nB_tilde = 50\nC_tilde = 130\nk_tr = 8\nk_max = 32\nk_min = -33\nk_bias = 4\n",
    );
    let out = ok(&["fit", "--samples", s(&data), "--method", "navden", "--navden-params", s(&params)]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["method"], "navden");
    assert!(v["q_scale"].as_f64().unwrap() > 0.0);
}

#[test]
fn symmetric_fit_rejects_biased_samples() {
    let d = TempDir::new().unwrap();
    let data = write(d.path(), "b.csv", &samples_csv(4000, 0.5));
    let out = run(&["fit", "--samples", s(&data)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bias") && err.contains("--mode nsu"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn paired_fit_writes_traces() {
    let d = TempDir::new().unwrap();
    let data = write(d.path(), "b.csv", &samples_csv(1500, 0.5));
    let tr = d.path().join("traces");
    let out = ok(&["fit", "--samples", s(&data), "--mode", "nsu", "--seed", "3", "--trace-dir", s(&tr)]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["method"], "cauchy_gaussian_nsu");
    assert_eq!(v["seed"], 3);
    for f in ["trace_cgcm.csv", "trace_gaussian.csv"] {
        let t = fs::read_to_string(tr.join(f)).unwrap();
        assert!(t.starts_with("iteration,point,value,feasible,mesh"));
        assert!(t.lines().count() > 10);
    }
}

#[test]
fn unknown_column_and_bad_file() {
    let d = TempDir::new().unwrap();
    let data = write(d.path(), "s.csv", "other\n1\n2\n");
    let out = run(&["fit", "--samples", s(&data)]);
    assert_eq!(out.status.code(), Some(2));
    let bad = write(d.path(), "x.json", r#"{"foo": 1}"#);
    let out = run(&["curves", "--bound", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
}

/// Vertical row of (H^T H)^-1 H^T by Gauss-Jordan on the normal equations.
fn vertical_row(sats: &[(f64, f64)]) -> Vec<f64> {
    let h: Vec<[f64; 4]> = sats
        .iter()
        .map(|&(az, el)| {
            let (a, e) = (az.to_radians(), el.to_radians());
            [-e.cos() * a.sin(), -e.cos() * a.cos(), -e.sin(), 1.0]
        })
        .collect();
    let mut m = [[0.0; 8]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = h.iter().map(|r| r[i] * r[j]).sum();
        }
        m[i][4 + i] = 1.0;
    }
    for c in 0..4 {
        let p = (c..4).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        let d = m[c][c];
        m[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..4 {
            if r != c {
                let f = m[r][c];
                for k in 0..8 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    h.iter().map(|r| (0..4).map(|k| m[2][4 + k] * r[k]).sum()).collect()
}

fn geometry(dir: &Path) -> (PathBuf, f64) {
    let sats = [(10.0, 20.0), (100.0, 35.0), (200.0, 50.0), (290.0, 25.0), (45.0, 80.0), (160.0, 65.0)];
    let mut body = String::from("epoch_id,sat_id,azimuth_deg,elevation_deg\n");
    for (i, (a, e)) in sats.iter().enumerate() {
        body.push_str(&format!("0,{i},{a},{e}\n"));
    }
    let norm = vertical_row(&sats).iter().map(|v| v * v).sum::<f64>().sqrt();
    (write(dir, "geo.csv", &body), norm)
}

fn vpl_of(bound: &Path, geo: &Path, p_hmi: &str) -> f64 {
    let out = ok(&["vpl", "--bound", s(bound), "--geometry", s(geo), "--p-hmi", p_hmi, "--dt", "0.001"]);
    column(&out, "vpl")[0]
}

#[test]
fn gaussian_vpl_matches_closed_form() {
    let d = TempDir::new().unwrap();
    let (geo, norm) = geometry(d.path());
    let g = write(d.path(), "g.json", r#"{"type":"gaussian","mu":0.0,"sigma":1.0}"#);
    // Two-sided allocation: P(|V| > VPL) = p.  Phi^-1(1 - 5e-8) = 5.326724.
    let expect = norm * 5.326_723_886_4;
    let v = vpl_of(&g, &geo, "1e-7");
    assert!((v - expect).abs() < 0.01 * expect, "vpl {v} vs {expect}");
}

#[test]
fn vpl_scales_with_sigma_and_grows_as_risk_shrinks() {
    let d = TempDir::new().unwrap();
    let (geo, _) = geometry(d.path());
    let g1 = write(d.path(), "g1.json", r#"{"type":"gaussian","mu":0.0,"sigma":1.0}"#);
    let g3 = write(d.path(), "g3.json", r#"{"type":"gaussian","mu":0.0,"sigma":3.0}"#);
    let (a, b) = (vpl_of(&g1, &geo, "1e-7"), vpl_of(&g3, &geo, "1e-7"));
    assert!((b / a - 3.0).abs() < 0.01, "ratio {}", b / a);
    let mut last = 0.0;
    for p in ["1e-3", "1e-5", "1e-7", "1e-9"] {
        let v = vpl_of(&g1, &geo, p);
        assert!(v > last, "p {p}");
        last = v;
    }
}

#[test]
fn vpl_lists_each_bound_per_epoch() {
    let d = TempDir::new().unwrap();
    let g = write(d.path(), "g.json", r#"{"type":"gaussian","mu":0.0,"sigma":1.0}"#);
    let r = write(d.path(), "r.json", r#"{"method":"single_gaussian","sigma_o":1.0}"#);
    let out = ok(&["vpl", "--bound", s(&g), "--bound", s(&r), "--epochs", "3", "--satellites", "8"]);
    let (h, rows) = table(&out);
    assert_eq!(h, ["epoch_id", "bound", "method", "vpl"]);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1][2], "single_gaussian");
    // Same distribution, same level.
    assert_eq!(rows[0][3], rows[1][3]);
}

#[test]
fn navden_table_has_reference_rows() {
    let out = ok(&["navden-table"]);
    let (h, rows) = table(&out);
    assert_eq!(h, ["k", "region", "l_tilde", "l_m", "g_tilde"]);
    assert_eq!(rows.len(), 66);
    assert_eq!(rows[0][0], "-33");
    assert_eq!(rows[0][2], "-inf");
}

const EXPERIMENT: &str = r#"
seed = 11
n_samples = 4000
methods = ["cauchy_gaussian", "single_gaussian"]

[sky]
epochs = 4
satellites = 10
"#;

#[test]
fn experiment_is_reproducible() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "exp.toml", EXPERIMENT);
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    ok(&["experiment", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["experiment", "--config", s(&cfg), "--out", s(&b)]);
    for f in ["epochs.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = d.path().join("c");
    ok(&["experiment", "--config", s(&cfg), "--out", s(&c), "--seed", "12"]);
    assert_ne!(fs::read(a.join("epochs.csv")).unwrap(), fs::read(c.join("epochs.csv")).unwrap());
}

#[test]
fn experiment_against_itself_reduces_nothing() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "exp.toml", &EXPERIMENT.replace("\"single_gaussian\"", "\"cauchy_gaussian\""));
    let o = d.path().join("o");
    ok(&["experiment", "--config", s(&cfg), "--out", s(&o)]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(o.join("summary.json")).unwrap()).unwrap();
    let c = &v["result"]["comparisons"][0];
    assert_eq!(c["average_reduction_pct"].as_f64().unwrap(), 0.0);
    assert_eq!(c["ours_always_lower"], false);
}
