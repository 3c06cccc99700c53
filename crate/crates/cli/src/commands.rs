use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use qsdyn::equilibria::{all_fixed_points, classify_analytic, critical_mutation_rates, EquilibriumError};
use qsdyn::integrator::trace;
use qsdyn::output::{fmt_f64, write_grid_csv, write_orbit_csv, write_section_csv};
use qsdyn::sweep::{section, sweep_kind, Axis, BranchChoice, Outcome, SweepKind};
use qsdyn::{Equilibrium, EquilibriumKind};

use crate::config::{CliError, RunConfig};
use crate::plots;

fn write_file(dir: &Path, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    let mut w = BufWriter::new(file);
    fill(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&path, e))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    write_file(dir, name, |w| w.write_all(text.as_bytes()))
}

fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))
}

pub fn simulate(cfg: &RunConfig) -> Result<String, CliError> {
    prepare_out(cfg)?;
    let t_end = cfg.integrator.t_max;
    let rows = match &cfg.general {
        Some(g) => trace(g, &cfg.initial, &cfg.integrator, cfg.interval, t_end),
        None => trace(&cfg.params, &cfg.initial, &cfg.integrator, cfg.interval, t_end),
    }
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    write_file(&cfg.out, "orbit.csv", |w| write_orbit_csv(&rows, w))?;
    let dim = cfg.initial.len();
    if cfg.emit_plots {
        write_text(&cfg.out, "orbit.gp", &plots::orbit("orbit.csv", "orbit.png", dim))?;
    }
    let (t, last) = rows.last().expect("trace starts with the initial state");
    let mut summary = format!("{} rows written to {}\nt = {t}: ", rows.len(), cfg.out.join("orbit.csv").display());
    summary.push_str(&last.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "));
    summary.push('\n');
    Ok(summary)
}

pub const EQUILIBRIA_HEADER: [&str; 15] = [
    "kind",
    "status",
    "exists",
    "x0",
    "x1",
    "x2",
    "lambda1",
    "lambda2",
    "lambda3",
    "lambda1_im",
    "lambda2_im",
    "lambda3_im",
    "eigen_source",
    "stability",
    "predicted_attractor",
];

fn eigen_source(e: &Equilibrium) -> &'static str {
    e.eigen_method.map(|m| m.as_str()).unwrap_or("analytic")
}

fn equilibria_csv(points: &[(EquilibriumKind, Result<Equilibrium, EquilibriumError>)], attractor: Option<EquilibriumKind>) -> String {
    let mut s = EQUILIBRIA_HEADER.join(",");
    s.push('\n');
    for (kind, res) in points {
        let mut f: Vec<String> = vec![kind.name().to_string()];
        match res {
            Ok(e) => {
                f.push("ok".into());
                f.push(if e.exists { "1" } else { "0" }.into());
                f.extend(e.coords.to_array().iter().map(|v| fmt_f64(*v)));
                f.extend(e.eigenvalues.iter().map(|v| fmt_f64(v.re)));
                f.extend(e.eigenvalues.iter().map(|v| fmt_f64(v.im)));
                f.push(eigen_source(e).into());
                f.push(e.stability.to_string());
            }
            Err(EquilibriumError::DegenerateFitness(_)) => {
                f.push("DegenerateFitness".into());
                f.push("0".into());
                f.extend(std::iter::repeat_n(String::new(), 11));
            }
            Err(other) => {
                f.push(format!("{other:?}").replace(',', ";"));
                f.push("0".into());
                f.extend(std::iter::repeat_n(String::new(), 11));
            }
        }
        f.push(if attractor == Some(*kind) { "1" } else { "0" }.into());
        s.push_str(&f.join(","));
        s.push('\n');
    }
    s
}

fn fmt_eigen(v: &Complex64) -> String {
    if v.im == 0.0 {
        format!("{:.6}", v.re)
    } else {
        format!("{:.6}{:+.6}i", v.re, v.im)
    }
}

fn equilibria_text(cfg: &RunConfig, points: &[(EquilibriumKind, Result<Equilibrium, EquilibriumError>)], attractor: &Result<Equilibrium, EquilibriumError>) -> String {
    let p = &cfg.params;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "f0 = {}, f1 = {}, f2 = {}, Q = {}, Qp = {}  (f0Q = {:.6}, f1Qp = {:.6})\n",
        p.f0(),
        p.f1(),
        p.f2(),
        p.q(),
        p.qp(),
        p.f0q(),
        p.f1qp()
    );
    for (kind, res) in points {
        let _ = writeln!(s, "[{}]", kind.name());
        match res {
            Ok(e) => {
                let c = e.coords;
                let _ = writeln!(s, "  coordinates  ({:.6}, {:.6}, {:.6})", c.x0, c.x1, c.x2);
                if e.exists {
                    let _ = writeln!(s, "  exists       yes");
                } else {
                    let _ = writeln!(s, "  exists       no ({})", e.violations.join("; "));
                }
                let ev: Vec<String> = e.eigenvalues.iter().map(fmt_eigen).collect();
                let _ = writeln!(s, "  eigenvalues  {} ({})", ev.join(", "), eigen_source(e));
                let _ = writeln!(s, "  stability    {}", e.stability);
            }
            Err(err) => {
                let name = match err {
                    EquilibriumError::DegenerateFitness(_) => "DegenerateFitness",
                    _ => "error",
                };
                let _ = writeln!(s, "  {name}: {err}");
            }
        }
        s.push('\n');
    }
    let (mu0c, mu1c) = critical_mutation_rates(p);
    let _ = writeln!(s, "critical mutation rates  mu0_c = {mu0c:.6} (mu0 = {:.6}), mu1_c = {mu1c:.6} (mu1 = {:.6})", p.mu0(), p.mu1());
    match attractor {
        Ok(e) => {
            let _ = writeln!(s, "predicted attractor      {}", e.kind.name());
        }
        Err(e) => {
            let _ = writeln!(s, "predicted attractor      none ({e})");
        }
    }
    s
}

pub fn equilibria(cfg: &RunConfig, csv_stdout: bool) -> Result<String, CliError> {
    prepare_out(cfg)?;
    let points = all_fixed_points(&cfg.params);
    let attractor = classify_analytic(&cfg.params);
    let csv = equilibria_csv(&points, attractor.as_ref().ok().map(|e| e.kind));
    let text = equilibria_text(cfg, &points, &attractor);
    write_text(&cfg.out, "equilibria.csv", &csv)?;
    write_text(&cfg.out, "equilibria.txt", &text)?;
    Ok(if csv_stdout { csv } else { text })
}

fn counts(outcomes: impl Iterator<Item = Outcome>) -> String {
    let mut n = [0usize; 4];
    for o in outcomes {
        n[match o {
            Outcome::Red => 0,
            Outcome::Blue => 1,
            Outcome::Green => 2,
            Outcome::Unresolved => 3,
        }] += 1;
    }
    format!("Red {}, Blue {}, Green {}, Unresolved {}", n[0], n[1], n[2], n[3])
}

pub fn sweep(cfg: &RunConfig, kind: SweepKind) -> Result<String, CliError> {
    prepare_out(cfg)?;
    let grid = sweep_kind(&cfg.sweep, kind).map_err(|e| CliError::Config(e.to_string()))?;
    let name = format!("sweep_{}", kind.as_str());
    let csv = format!("{name}.csv");
    write_file(&cfg.out, &csv, |w| write_grid_csv(&grid, w))?;
    if cfg.emit_plots {
        let png = format!("{name}.png");
        let script = match kind {
            SweepKind::Classify => plots::classification(&csv, &png),
            SweepKind::Densities => plots::densities(&csv, &png),
            SweepKind::Transients => plots::transients(&csv, &png),
        };
        write_text(&cfg.out, &format!("{name}.gp"), &script)?;
    }
    let errors = grid.cells.iter().filter(|c| c.error.is_some()).count();
    let disagree = grid.cells.iter().filter(|c| c.analytic.is_some() && !c.agreement).count();
    Ok(format!(
        "{} cells written to {}\n{}\ncells with errors: {errors}, disagreeing with analysis: {disagree}\n",
        grid.cells.len(),
        cfg.out.join(&csv).display(),
        counts(grid.cells.iter().map(|c| c.outcome))
    ))
}

pub fn run_section(
    cfg: &RunConfig,
    kind: SweepKind,
    axis: Axis,
    value: f64,
    branch: BranchChoice,
    with_eigen: bool,
) -> Result<String, CliError> {
    prepare_out(cfg)?;
    let branch = if with_eigen { branch } else { BranchChoice::None };
    let sec = section(&cfg.sweep, kind, axis, value, branch).map_err(|e| CliError::Config(e.to_string()))?;
    let name = format!("section_{}", kind.as_str());
    let csv = format!("{name}.csv");
    write_file(&cfg.out, &csv, |w| write_section_csv(&sec, with_eigen, w))?;
    if cfg.emit_plots {
        let with_time = kind == SweepKind::Transients;
        write_text(&cfg.out, &format!("{name}.gp"), &plots::section(&csv, &format!("{name}.png"), axis, value, with_time))?;
        if with_eigen {
            let script = plots::eigenvalues(&csv, &format!("{name}_eigen.png"), axis, value);
            write_text(&cfg.out, &format!("{name}_eigen.gp"), &script)?;
        }
    }
    let mut s = format!("{} rows written to {}\n", sec.rows.len(), cfg.out.join(&csv).display());
    let _ = writeln!(s, "{}", counts(sec.rows.iter().map(|r| r.cell.outcome)));
    let bif: Vec<String> = sec.bifurcations.iter().map(|b| format!("{b:.4}")).collect();
    let _ = writeln!(s, "outcome changes at: {}", if bif.is_empty() { "none".to_string() } else { bif.join(", ") });
    if let Some(i) = sec.slowest_row().filter(|_| kind == SweepKind::Transients) {
        let r = &sec.rows[i];
        let _ = writeln!(s, "slowest transient at {:.4} (t = {})", r.abscissa(axis), r.cell.time.map(|t| format!("{t:.4}")).unwrap_or("unresolved".into()));
    }
    if with_eigen {
        let changes = sec.eigen_sign_changes();
        for (j, c) in changes.iter().enumerate() {
            if !c.is_empty() {
                let pts: Vec<String> = c.iter().map(|b| format!("{b:.4}")).collect();
                let _ = writeln!(s, "lambda{} changes sign at: {}", j + 1, pts.join(", "));
            }
        }
    }
    Ok(s)
}
