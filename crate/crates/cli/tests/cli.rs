use std::path::Path;
use std::process::{Command, Output};

use qsdyn::output::{parse_csv, Table};
use tempfile::TempDir;

fn qsdyn(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdyn"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QSDYN_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = qsdyn(args, out);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn table(path: &Path) -> Table {
    parse_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn floats(t: &Table, col: &str) -> Vec<f64> {
    t.floats(col).unwrap().into_iter().map(|v| v.expect("value present")).collect()
}

#[test]
fn simulate_defaults_give_monotone_simplex_rows() {
    let dir = TempDir::new().unwrap();
    ok(&["simulate"], dir.path());
    let t = table(&dir.path().join("orbit.csv"));
    assert_eq!(t.header, ["t", "x0", "x1", "x2"]);
    assert_eq!(t.rows.len(), 1001);
    let ts = floats(&t, "t");
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*ts.last().unwrap(), 100.0);
    let (x0, x1, x2) = (floats(&t, "x0"), floats(&t, "x1"), floats(&t, "x2"));
    for i in 0..ts.len() {
        assert!((x0[i] + x1[i] + x2[i] - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn simulate_from_a_fixed_point_stays_put() {
    let dir = TempDir::new().unwrap();
    ok(&["simulate", "--x0", "0", "--x1", "0", "--x2", "1", "--tmax", "10"], dir.path());
    let t = table(&dir.path().join("orbit.csv"));
    for row in &t.rows {
        assert_eq!(&row[1..], ["0.0000000000000000e0", "0.0000000000000000e0", "1.0000000000000000e0"]);
    }
}

#[test]
fn simulate_reaches_mutator_coexistence() {
    let dir = TempDir::new().unwrap();
    ok(&["simulate", "--f0", "0.3", "--f1", "2.1"], dir.path());
    let t = table(&dir.path().join("orbit.csv"));
    let last = t.rows.last().unwrap();
    let x: Vec<f64> = last[1..].iter().map(|v| v.parse().unwrap()).collect();
    let d = ((x[0]).powi(2) + (x[1] - 0.125).powi(2) + (x[2] - 0.875).powi(2)).sqrt();
    assert!(d < 1e-2, "terminal state {x:?}");
}

#[test]
fn simulate_subclone_model_names_columns() {
    let dir = TempDir::new().unwrap();
    ok(&["simulate", "--f2s", "0.42,0.42,0.42", "--tmax", "5", "--emit-plots"], dir.path());
    let t = table(&dir.path().join("orbit.csv"));
    assert_eq!(t.header, ["t", "x0", "x1", "x2_1", "x2_2", "x2_3"]);
    assert_eq!(t.rows.len(), 51);
    let script = std::fs::read_to_string(dir.path().join("orbit.gp")).unwrap();
    assert!(script.contains("'orbit.csv'") && script.contains("using 1:6"));
}

#[test]
fn equilibria_report_has_one_attractor() {
    let dir = TempDir::new().unwrap();
    let text = ok(&["equilibria"], dir.path());
    assert_eq!(text.matches("stability    Attractor").count(), 1);
    for block in ["[UnstableDominance]", "[MutatorCoexistence]", "[FullCoexistence]"] {
        assert!(text.contains(block));
    }
    assert!(text.contains("critical mutation rates"));
    let t = table(&dir.path().join("equilibria.csv"));
    assert_eq!(t.rows.len(), 3);
    assert_eq!(t.strings("stability").unwrap().iter().filter(|s| **s == "Attractor").count(), 1);
    let full = t.rows.iter().find(|r| r[0] == "FullCoexistence").unwrap();
    let x0: f64 = full[3].parse().unwrap();
    assert!((x0 - 0.318_181_818_181_818_2).abs() < 1e-12);
}

#[test]
fn equilibria_equal_fitness_reports_degeneracy() {
    let dir = TempDir::new().unwrap();
    let csv = ok(&["equilibria", "--f1", "0.42", "--csv"], dir.path());
    let t = parse_csv(&csv).unwrap();
    let status = t.strings("status").unwrap();
    assert_eq!(status, ["ok", "DegenerateFitness", "ok"]);
    assert_eq!(t, table(&dir.path().join("equilibria.csv")));
}

#[test]
fn one_cell_sweep_has_one_row() {
    let dir = TempDir::new().unwrap();
    ok(&["sweep", "--f0Q_min", "0.63", "--f0Q_max", "0.63", "--f1Qp_min", "0.21", "--f1Qp_max", "0.21"], dir.path());
    let t = table(&dir.path().join("sweep_classify.csv"));
    assert_eq!(t.rows.len(), 1);
    assert_eq!(t.strings("outcome").unwrap(), ["Green"]);
}

#[test]
fn classification_sweep_reproduces_red_square() {
    let dir = TempDir::new().unwrap();
    let step = 0.05;
    ok(&["sweep", "--step", "0.05", "--emit-plots"], dir.path());
    let t = table(&dir.path().join("sweep_classify.csv"));
    assert_eq!(t.rows.len(), 20 * 20);
    let (f0q, f1qp) = (floats(&t, "f0Q"), floats(&t, "f1Qp"));
    let outcome = t.strings("outcome").unwrap();
    for i in 0..t.rows.len() {
        let band = (f0q[i] - 0.42).abs() <= 2.0 * step || (f1qp[i] - 0.42).abs() <= 2.0 * step;
        let square = f0q[i] < 0.42 && f1qp[i] < 0.42;
        if !band {
            assert_eq!(outcome[i] == "Red", square, "cell ({}, {})", f0q[i], f1qp[i]);
        }
    }
    let script = std::fs::read_to_string(dir.path().join("sweep_classify.gp")).unwrap();
    assert!(script.contains("'sweep_classify.csv'"));
}

#[test]
fn transient_sweep_fills_log_time() {
    let dir = TempDir::new().unwrap();
    ok(&["sweep", "--kind", "transients", "--step", "0.1"], dir.path());
    let t = table(&dir.path().join("sweep_transients.csv"));
    assert_eq!(t.rows.len(), 100);
    let outcome = t.strings("outcome").unwrap();
    let (time, log) = (t.floats("time").unwrap(), t.floats("log10_time").unwrap());
    for i in 0..t.rows.len() {
        assert_eq!(outcome[i] == "Unresolved", log[i].is_none());
        if let (Some(a), Some(b)) = (time[i], log[i]) {
            assert_eq!(a.log10(), b);
        }
    }
}

#[test]
fn transcritical_section_peaks_and_flips_one_eigenvalue() {
    let dir = TempDir::new().unwrap();
    let args = ["section", "--axis", "f0Q", "--value", "0.63", "--kind", "transients", "--eigen", "--branch", "FullCoexistence", "--emit-plots"];
    ok(&args, dir.path());
    let t = table(&dir.path().join("section_transients.csv"));
    assert_eq!(t.rows.len(), 100);
    let x = floats(&t, "f1Qp");
    let time = floats(&t, "time");
    let imax = (0..time.len()).max_by(|&a, &b| time[a].total_cmp(&time[b])).unwrap();
    assert!((x[imax] - 0.63).abs() <= 0.01 + 1e-9);
    let rescaled = floats(&t, "rescaled_time");
    assert!((rescaled[imax] - (time[imax].log10() - 2.0) / 2.0).abs() < 1e-15);

    let mut flipping = 0;
    for col in ["lambda1", "lambda2", "lambda3"] {
        let v = floats(&t, col);
        let changes: Vec<usize> = (1..v.len()).filter(|&i| (v[i] > 0.0) != (v[i - 1] > 0.0)).collect();
        if !changes.is_empty() {
            flipping += 1;
            assert!(changes.iter().all(|&i| (x[i] - 0.63).abs() <= 0.01 + 1e-9));
        }
    }
    assert_eq!(flipping, 1);
    for name in ["section_transients.gp", "section_transients_eigen.gp"] {
        let script = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(script.contains("'section_transients.csv'"));
    }
}

#[test]
fn stable_population_grows_past_the_bifurcation() {
    for fixed in ["0.21", "0.63"] {
        let dir = TempDir::new().unwrap();
        ok(&["section", "--axis", "f1Qp", "--value", fixed, "--kind", "densities", "--step", "0.02"], dir.path());
        let t = table(&dir.path().join("section_densities.csv"));
        let x0 = t.floats("x0").unwrap();
        let outcome = t.strings("outcome").unwrap();
        let green: Vec<f64> = (0..x0.len()).filter(|&i| outcome[i] == "Green").map(|i| x0[i].unwrap()).collect();
        assert!(green.len() > 5, "section at {fixed}");
        assert!(green.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(green.last().unwrap() > &green[0]);
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# two-population run\nf0 = 0.3\nf1 = 2.1 # mutator wins\ntmax = 20\ninterval = 2\n").unwrap();
    let cfg_arg = cfg.to_str().unwrap();
    ok(&["simulate", "--config", cfg_arg], dir.path());
    assert_eq!(table(&dir.path().join("orbit.csv")).rows.len(), 11);
    ok(&["simulate", "--config", cfg_arg, "--tmax", "4"], dir.path());
    assert_eq!(table(&dir.path().join("orbit.csv")).rows.len(), 3);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "colour = red\n").unwrap();
    let code = |args: &[&str]| qsdyn(args, dir.path()).status.code();
    assert_eq!(code(&["simulate", "--config", bad.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["simulate", "--config", "/nonexistent/run.cfg"]), Some(2));
    assert_eq!(code(&["simulate", "--Q=1.5"]), Some(2));
    assert_eq!(code(&["simulate", "--x0", "0.5"]), Some(2));
    assert_eq!(code(&["section", "--axis", "f0Q", "--value", "2"]), Some(2));
    assert_eq!(code(&["sweep", "--kind", "bogus"]), Some(2));
    assert_eq!(code(&["simulate", "--h_init", "1e-16", "--h_max", "1e-16", "--tmax", "1"]), Some(3));
    assert_eq!(code(&["equilibria"]), Some(0));
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("occupied");
    std::fs::write(&file, "").unwrap();
    assert_eq!(qsdyn(&["equilibria"], &file).status.code(), Some(2));
}

#[test]
fn runs_are_reproducible_and_thread_count_is_honoured() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["sweep", "--kind", "densities", "--step", "0.1", "--emit-plots"];
    ok(&args, a.path());
    let o = Command::new(env!("CARGO_BIN_EXE_qsdyn"))
        .args(args)
        .arg("--out")
        .arg(b.path())
        .env("QSDYN_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    for name in ["sweep_densities.csv", "sweep_densities.gp"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}
