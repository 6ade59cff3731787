//! Result files: study tables, plots, run logs and state dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use thiserror::Error;

use crate::grid::StructuredGrid;
use crate::simulate::RunResult;
use crate::study::{ConvergenceReport, StudyRow};
use crate::tpfa::StateFields;

pub const CSV_HEADER: &str = "scheme,tau_s,err_T_rel,err_p_rel,cpu_s,matvecs,linsolves";

/// Marker written in place of errors for runs that aborted.
pub const FAILED: &str = "failed";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot draw {path}: {message}")]
    Plot { path: PathBuf, message: String },
}

fn write(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// 12 significant digits.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| FAILED.to_string())
}

pub fn results_csv(rows: &[StudyRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.scheme,
            num(r.tau_s),
            opt(r.err_t_rel),
            opt(r.err_p_rel),
            num(r.cpu_s),
            r.matvecs,
            r.linsolves
        );
    }
    s
}

/// Writes `results.csv`, `scenario.echo`, `failures.txt` when a run aborted,
/// and the three log-log plots.
pub fn emit_outputs(report: &ConvergenceReport, dir: &Path, scenario_echo: &str) -> Result<(), OutputError> {
    fs::create_dir_all(dir).map_err(|source| OutputError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write(&dir.join("results.csv"), &results_csv(&report.rows))?;
    let mut echo = format!(
        "# reference: {} at tau_s = {}\n",
        report.reference.scheme,
        num(report.reference.tau_s)
    );
    echo.push_str(scenario_echo);
    write(&dir.join("scenario.echo"), &echo)?;
    let failures: Vec<String> = report
        .rows
        .iter()
        .filter_map(|r| r.failure.as_ref().map(|f| format!("{} tau_s={}: {}", r.scheme, num(r.tau_s), f)))
        .collect();
    if !failures.is_empty() {
        write(&dir.join("failures.txt"), &(failures.join("\n") + "\n"))?;
    }
    let pick = |f: fn(&StudyRow) -> Option<(f64, f64)>| -> Vec<(String, Vec<(f64, f64)>)> {
        let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for r in &report.rows {
            let Some(pt) = f(r) else { continue };
            match series.iter_mut().find(|(n, _)| *n == r.scheme) {
                Some((_, v)) => v.push(pt),
                None => series.push((r.scheme.clone(), vec![pt])),
            }
        }
        series
    };
    loglog(
        &dir.join("err_vs_tau.svg"),
        "temperature error vs time step",
        "tau [s]",
        "relative L2 error",
        &pick(|r| r.err_t_rel.map(|e| (r.tau_s, e))),
    )?;
    loglog(
        &dir.join("err_vs_cpu.svg"),
        "temperature error vs CPU time",
        "CPU [s]",
        "relative L2 error",
        &pick(|r| r.err_t_rel.map(|e| (r.cpu_s, e))),
    )?;
    loglog(
        &dir.join("cpu_vs_tau.svg"),
        "CPU time vs time step",
        "tau [s]",
        "CPU [s]",
        &pick(|r| r.err_t_rel.map(|_| (r.tau_s, r.cpu_s))),
    )?;
    Ok(())
}

fn bounds(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| *v > 0.0 && v.is_finite())
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.1, 10.0);
    }
    (lo / 2.0, hi * 2.0)
}

fn loglog(
    path: &Path,
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> Result<(), OutputError> {
    let err = |e: &dyn std::fmt::Display| OutputError::Plot {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));
    let root = SVGBackend::new(path, (800, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(15)
        .x_label_area_size(45)
        .y_label_area_size(70)
        .build_cartesian_2d((x0..x1).log_scale(), (y0..y1).log_scale())
        .map_err(|e| err(&e))?;
    chart
        .configure_mesh()
        .x_desc(xlabel)
        .y_desc(ylabel)
        .x_label_formatter(&|v| format!("{v:.0e}"))
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .draw()
        .map_err(|e| err(&e))?;
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart
            .draw_series(pts.iter().map(|&p| Circle::new(p, 4, color.filled())))
            .map_err(|e| err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))?;
    Ok(())
}

/// Per-cell state table `cell,i,j,k,T_s_C,T_f_C,p_Pa`.
pub fn state_csv(grid: &StructuredGrid, st: &StateFields) -> String {
    let mut s = String::from("cell,i,j,k,T_s_C,T_f_C,p_Pa\n");
    for c in 0..grid.n_cells() {
        let (i, j, k) = grid.coords(c);
        let _ = writeln!(s, "{c},{i},{j},{k},{},{},{}", num(st.ts[c]), num(st.tf[c]), num(st.p[c]));
    }
    s
}

/// Per-step diagnostics of a run.
pub fn run_log_csv(run: &RunResult) -> String {
    let mut s = String::from(
        "step,t_s,tau_s,T_matvecs,T_linsolves,T_newton,T_substeps_rejected,p_matvecs,p_linsolves,p_newton,p_substeps_rejected,clamp_warnings\n",
    );
    for (n, l) in run.log.iter().enumerate() {
        let (a, b) = (&l.temperature_work, &l.pressure_work);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            n + 1,
            num(l.t),
            num(l.tau),
            a.matvecs,
            a.linear_solves,
            a.newton_iterations,
            a.rejected,
            b.matvecs,
            b.linear_solves,
            b.newton_iterations,
            b.rejected,
            l.clamp_warnings
        );
    }
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| OutputError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::ReferenceInfo;

    fn row(scheme: &str, err: Option<f64>) -> StudyRow {
        StudyRow {
            scheme: scheme.into(),
            tau_s: 86400.0,
            err_t_rel: err,
            err_p_rel: err,
            cpu_s: 0.5,
            matvecs: 10,
            linsolves: 2,
            newton_iterations: 0,
            splitting_steps: 1,
            failure: err.is_none().then(|| "boom".to_string()),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(results_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_round_trips() {
        let csv = results_csv(&[row("ROS2", Some(1.23456789012e-4))]);
        let line = csv.lines().nth(1).unwrap();
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        assert_eq!(f[0], "ROS2");
        assert_eq!(f[2].parse::<f64>().unwrap(), 1.23456789012e-4);
        assert_eq!(f[1], "8.64000000000e4");
    }

    #[test]
    fn emits_files_with_failure_marker() {
        let dir = std::env::temp_dir().join(format!("expotherm-out-{}", std::process::id()));
        let report = ConvergenceReport {
            reference: ReferenceInfo {
                scheme: "ROS3p".into(),
                tau_s: 1.0,
                cpu_s: 0.0,
            },
            rows: vec![row("ROS2", Some(1e-3)), row("ROS2", None)],
        };
        emit_outputs(&report, &dir, "x = 1\n").unwrap();
        for f in ["results.csv", "scenario.echo", "failures.txt", "err_vs_tau.svg", "err_vs_cpu.svg", "cpu_vs_tau.svg"] {
            assert!(dir.join(f).exists(), "{f}");
        }
        let csv = fs::read_to_string(dir.join("results.csv")).unwrap();
        assert!(csv.lines().nth(2).unwrap().contains(FAILED));
        fs::remove_dir_all(&dir).unwrap();
    }
}
