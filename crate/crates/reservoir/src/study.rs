//! Convergence and efficiency studies against a shared reference run.

use rayon::prelude::*;

use crate::scenario::{ConfigError, DriverScheme};
use crate::simulate::{run_simulation, Prepared, RunOptions, RunResult, SimError};

/// Environment variable bounding the number of concurrent runs.
pub const JOBS_ENV: &str = "EXPOTHERM_JOBS";

/// Scheme of the shared reference run.
pub const REFERENCE_SCHEME: &str = "ROS3p";

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub scheme: String,
    pub tau_s: f64,
    /// `None` when the run aborted.
    pub err_t_rel: Option<f64>,
    pub err_p_rel: Option<f64>,
    pub cpu_s: f64,
    pub matvecs: usize,
    pub linsolves: usize,
    pub newton_iterations: usize,
    pub splitting_steps: usize,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceInfo {
    pub scheme: String,
    pub tau_s: f64,
    pub cpu_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub reference: ReferenceInfo,
    pub rows: Vec<StudyRow>,
}

impl ConvergenceReport {
    pub fn rows_for<'a>(&'a self, scheme: &'a str) -> impl Iterator<Item = &'a StudyRow> + 'a {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Least-squares slope of `log err` against `log τ`.
pub fn observed_order(taus: &[f64], errs: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(errs)
        .filter(|(t, e)| **t > 0.0 && **e > 0.0)
        .map(|(t, e)| (t.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let jobs = std::env::var(JOBS_ENV).ok().and_then(|v| v.parse::<usize>().ok());
    match jobs {
        Some(j) if j > 0 => match rayon::ThreadPoolBuilder::new().num_threads(j).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

/// Runs every `(scheme, τ)` pair and measures the relative L² errors of the
/// temperatures `(T_s, T_f)` and of the pressure at the final time against one
/// ROS3p run with `τ_ref = min(taus)/2`. Independent runs execute concurrently;
/// the row order follows `schemes × taus`.
pub fn convergence_study(
    prep: &Prepared,
    schemes: &[DriverScheme],
    taus: &[f64],
) -> Result<ConvergenceReport, SimError> {
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(ConfigError::Invalid("time steps must be positive and non-empty".into()).into());
    }
    let tau_ref = 0.5 * taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let run = |scheme: &DriverScheme, tau: f64| {
        let opts = RunOptions {
            scheme: scheme.clone(),
            tau,
            ..prep.options.clone()
        };
        run_simulation(&prep.reservoir, &prep.initial, &opts)
    };
    let reference_scheme = DriverScheme::parse(REFERENCE_SCHEME)?;
    let jobs: Vec<(usize, f64)> = (0..schemes.len())
        .flat_map(|s| taus.iter().map(move |&t| (s, t)))
        .collect();
    let (reference, results): (Result<RunResult, SimError>, Vec<Result<RunResult, SimError>>) = with_pool(|| {
        rayon::join(
            || run(&reference_scheme, tau_ref),
            || jobs.par_iter().map(|&(s, t)| run(&schemes[s], t)).collect(),
        )
    });
    let reference = reference?;
    let t_ref = reference.state.temperatures();
    let rows = jobs
        .iter()
        .zip(results)
        .map(|(&(s, tau), r)| match r {
            Ok(r) => {
                let w = r.total_work();
                StudyRow {
                    scheme: schemes[s].label.clone(),
                    tau_s: tau,
                    err_t_rel: Some(relative_l2(&r.state.temperatures(), &t_ref)),
                    err_p_rel: Some(relative_l2(&r.state.p, &reference.state.p)),
                    cpu_s: r.cpu_s,
                    matvecs: w.matvecs,
                    linsolves: w.linear_solves,
                    newton_iterations: w.newton_iterations,
                    splitting_steps: r.log.len(),
                    failure: None,
                }
            }
            Err(e) => StudyRow {
                scheme: schemes[s].label.clone(),
                tau_s: tau,
                err_t_rel: None,
                err_p_rel: None,
                cpu_s: 0.0,
                matvecs: 0,
                linsolves: 0,
                newton_iterations: 0,
                splitting_steps: 0,
                failure: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ConvergenceReport {
        reference: ReferenceInfo {
            scheme: REFERENCE_SCHEME.into(),
            tau_s: tau_ref,
            cpu_s: reference.cpu_s,
        },
        rows,
    })
}
