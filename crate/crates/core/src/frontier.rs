//! Quality-versus-randomness frontier tables.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::metrics::{compute_metrics, MetricsReport};
use crate::perturbation::PerturbationSpec;
use crate::solvers::{solve_plra, solve_pm_exact, SolverConfig};
use crate::tuning::{tune_plra, tune_pm_exponential, tune_pm_quadratic, QualityFloor, Tuned, TuningConfig};

/// Quality fractions of the maximum used by default.
pub const DEFAULT_ETA_GRID: [f64; 8] = [0.8, 0.85, 0.9, 0.95, 0.98, 0.99, 0.995, 1.0];

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "RANDMATCH_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "plra")]
    Plra,
    #[serde(rename = "pm-q")]
    PmQuadratic,
    #[serde(rename = "pm-e")]
    PmExponential,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Plra => "plra",
            Algorithm::PmQuadratic => "pm-q",
            Algorithm::PmExponential => "pm-e",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "plra" => Ok(Algorithm::Plra),
            "pm-q" | "pmq" => Ok(Algorithm::PmQuadratic),
            "pm-e" | "pme" => Ok(Algorithm::PmExponential),
            other => Err(Error::InvalidParameter(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// One `(eta, algorithm)` cell of the frontier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub eta: f64,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuned: Option<Tuned>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Tunes and solves every algorithm at every `eta`. Failures are recorded in
/// their row; rows come back sorted by `(eta, algorithm)`.
pub fn run_frontier(inst: &ProblemInstance, grid: &[f64], algorithms: &[Algorithm], base: &TuningConfig) -> Result<Vec<FrontierRow>> {
    if let Some(eta) = grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(Error::InvalidParameter(format!("eta {eta} outside (0, 1]")));
    }
    let cells: Vec<(f64, Algorithm)> = grid
        .iter()
        .flat_map(|&e| algorithms.iter().map(move |&a| (e, a)))
        .collect();
    let work = || -> Vec<FrontierRow> {
        use rayon::prelude::*;
        cells.par_iter().map(|&(eta, alg)| cell(inst, eta, alg, base)).collect()
    };
    let mut rows = match thread_limit() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    rows.sort_by(|a, b| a.eta.total_cmp(&b.eta).then(a.algorithm.cmp(&b.algorithm)));
    Ok(rows)
}

fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|n| *n > 0)
}

fn cell(inst: &ProblemInstance, eta: f64, algorithm: Algorithm, base: &TuningConfig) -> FrontierRow {
    let mut cfg = base.clone();
    cfg.floor = QualityFloor::Fraction(eta);
    let outcome = (|| -> Result<(Tuned, MetricsReport)> {
        let tuned = match algorithm {
            Algorithm::Plra => tune_plra(inst, &cfg)?,
            Algorithm::PmQuadratic => tune_pm_quadratic(inst, &cfg)?,
            Algorithm::PmExponential => tune_pm_exponential(inst, &cfg)?,
        };
        let spec = match (algorithm, tuned.param) {
            (Algorithm::PmQuadratic, Some(beta)) => Some(PerturbationSpec::Quadratic { beta }),
            (Algorithm::PmExponential, Some(alpha)) => Some(PerturbationSpec::Exponential { alpha }),
            _ => None,
        };
        let x = match spec {
            Some(spec) => {
                let solver = SolverConfig::new(tuned.cap, spec)
                    .with_tol(cfg.solver_tol)
                    .with_max_iters(cfg.solver_max_iters);
                solve_pm_exact(inst, &solver)?
            }
            None => solve_plra(inst, tuned.cap)?,
        };
        let metrics = compute_metrics(&x, inst, None)?;
        Ok((tuned, metrics))
    })();
    match outcome {
        Ok((tuned, metrics)) => FrontierRow {
            eta,
            algorithm,
            tuned: Some(tuned),
            metrics: Some(metrics),
            error: None,
        },
        Err(e) => FrontierRow {
            eta,
            algorithm,
            tuned: None,
            metrics: None,
            error: Some(e.to_string()),
        },
    }
}

pub const FRONTIER_HEADER: [&str; 12] = [
    "eta", "algorithm", "q", "param", "floor", "quality", "maxprob", "avgmaxp", "support", "entropy", "l2norm", "error",
];

/// CSV with one line per row; numeric cells use 17 significant digits.
pub fn write_frontier_csv<W: Write>(w: W, rows: &[FrontierRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FRONTIER_HEADER)?;
    let num = |v: f64| format!("{v:.16e}");
    for row in rows {
        let mut rec = vec![row.eta.to_string(), row.algorithm.to_string()];
        match &row.tuned {
            Some(t) => {
                rec.push(t.cap.to_string());
                rec.push(t.param.map(num).unwrap_or_default());
                rec.push(num(t.floor));
            }
            None => rec.extend([String::new(), String::new(), String::new()]),
        }
        match &row.metrics {
            Some(m) => rec.extend([
                num(m.quality),
                num(m.maxprob),
                num(m.avgmaxp),
                m.support.to_string(),
                num(m.entropy),
                num(m.l2norm),
            ]),
            None => rec.extend(std::iter::repeat(String::new()).take(6)),
        }
        rec.push(row.error.clone().unwrap_or_default());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
