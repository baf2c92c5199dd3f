//! Hyperparameter search against a quality floor.
//!
//! All searches run on fixed grids so results are reproducible: `Q` and `beta`
//! live on `k / N` with `N = round(1 / search_tol)`, and `alpha` is bisected
//! on `(0, alpha_max]` after a coarse geometric scan.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cap::{Cap, MAX_DENOMINATOR};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::perturbation::PerturbationSpec;
use crate::solvers::{max_quality, solve_plra, solve_pm_exact, SolverConfig};

/// A minimum acceptable quality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFloor {
    Absolute(f64),
    /// `eta * M` with `M` the unconstrained maximum quality.
    Fraction(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub floor: QualityFloor,
    /// Slackness added to the smallest admissible PLRA cap.
    pub delta: f64,
    pub search_tol: f64,
    pub alpha_max: f64,
    pub alpha_steps: usize,
    /// Duality-gap tolerance of the inner perturbed solves.
    pub solver_tol: f64,
    pub solver_max_iters: usize,
}

impl TuningConfig {
    pub fn new(floor: QualityFloor) -> Self {
        TuningConfig {
            floor,
            delta: 0.0,
            search_tol: 1e-3,
            alpha_max: 64.0,
            alpha_steps: 40,
            solver_tol: 1e-10,
            solver_max_iters: 20_000,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    fn check(&self) -> Result<()> {
        if let QualityFloor::Fraction(eta) = self.floor {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidParameter(format!("eta must lie in [0, 1], got {eta}")));
            }
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        grid_size(self.search_tol)?;
        if !(self.alpha_max > 0.0 && self.alpha_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha_max must be positive, got {}", self.alpha_max)));
        }
        Ok(())
    }

    fn solver(&self, cap: Cap, perturbation: PerturbationSpec) -> SolverConfig {
        SolverConfig::new(cap, perturbation)
            .with_tol(self.solver_tol)
            .with_max_iters(self.solver_max_iters)
    }
}

/// Result of a tuning run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub cap: Cap,
    /// `beta` or `alpha`; absent for PLRA.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
    pub quality: f64,
    pub floor: f64,
}

fn grid_size(search_tol: f64) -> Result<u64> {
    if !(search_tol > 0.0 && search_tol <= 1.0) {
        return Err(Error::InvalidParameter(format!("search_tol must lie in (0, 1], got {search_tol}")));
    }
    let n = (1.0 / search_tol).round() as u64;
    if n == 0 || n > MAX_DENOMINATOR {
        return Err(Error::InvalidParameter(format!("search_tol {search_tol} gives grid size {n}")));
    }
    Ok(n)
}

/// Slack used when comparing a computed quality against the floor.
fn slack(floor: f64) -> f64 {
    1e-9 * floor.abs().max(1.0)
}

/// Resolves the floor to an absolute value and checks it against `M`.
pub fn resolve_floor(inst: &ProblemInstance, floor: QualityFloor) -> Result<f64> {
    let m = max_quality(inst)?;
    let value = match floor {
        QualityFloor::Absolute(v) => v,
        QualityFloor::Fraction(eta) => eta * m,
    };
    if value > m + slack(m) {
        return Err(Error::FloorUnachievable { floor: value, max: m });
    }
    Ok(value)
}

/// Smallest cap `k / N` whose PLRA optimum reaches `floor`.
pub fn find_q_plra(inst: &ProblemInstance, floor: f64, search_tol: f64) -> Result<Cap> {
    let n = grid_size(search_tol)?;
    let m = max_quality(inst)?;
    if floor > m + slack(m) {
        return Err(Error::FloorUnachievable { floor, max: m });
    }
    let passes = |k: u64| -> bool {
        match Cap::new(k, n).and_then(|q| solve_plra(inst, q)) {
            Ok(x) => x.quality(inst) >= floor - slack(floor),
            Err(_) => false,
        }
    };
    // invariant: lo fails (k = 0 is not a cap), hi passes
    let (mut lo, mut hi) = (0u64, n);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Cap::new(hi, n)
}

/// `min(Q_PLRA + delta, 1)` with `delta` rounded to the search grid.
fn slack_cap(q_plra: Cap, delta: f64, n: u64) -> Cap {
    let dk = (delta * n as f64).round() as u64;
    q_plra.saturating_add(Ratio::new(dk, n))
}

fn tuned_cap(inst: &ProblemInstance, cfg: &TuningConfig) -> Result<(Cap, f64)> {
    cfg.check()?;
    let floor = resolve_floor(inst, cfg.floor)?;
    let n = grid_size(cfg.search_tol)?;
    let q_plra = find_q_plra(inst, floor, cfg.search_tol)?;
    Ok((slack_cap(q_plra, cfg.delta, n), floor))
}

fn perturbed_quality_at(inst: &ProblemInstance, cfg: &TuningConfig, cap: Cap, spec: PerturbationSpec) -> Result<f64> {
    Ok(solve_pm_exact(inst, &cfg.solver(cap, spec))?.quality(inst))
}

/// Cap `min(Q_PLRA + delta, 1)` and the largest grid `beta` whose quadratic
/// perturbation keeps the quality above the floor.
pub fn tune_pm_quadratic(inst: &ProblemInstance, cfg: &TuningConfig) -> Result<Tuned> {
    let (cap, floor) = tuned_cap(inst, cfg)?;
    let n = grid_size(cfg.search_tol)?;
    let quality = |j: u64| perturbed_quality_at(inst, cfg, cap, PerturbationSpec::Quadratic { beta: j as f64 / n as f64 });
    let top = quality(n)?;
    let (j, q) = if top >= floor - slack(floor) {
        (n, top)
    } else {
        // invariant: lo passes (beta = 0 is PLRA at a cap >= Q_PLRA), hi fails
        let (mut lo, mut hi) = (0u64, n);
        let mut lo_quality = quality(0)?;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let q = quality(mid)?;
            if q >= floor - slack(floor) {
                lo = mid;
                lo_quality = q;
            } else {
                hi = mid;
            }
        }
        (lo, lo_quality)
    };
    let beta = j as f64 / n as f64;
    let check = quality(j)?;
    if check < floor - slack(floor) {
        return Err(Error::FloorUnachievable { floor, max: check });
    }
    Ok(Tuned {
        cap,
        param: Some(beta),
        quality: q,
        floor,
    })
}

/// Coarse probes `alpha_max / 2^i`, ascending.
const COARSE_PROBES: u32 = 8;

/// Cap `min(Q_PLRA + delta, 1)` and a large `alpha` in `(0, alpha_max]` whose
/// exponential perturbation keeps the quality above the floor.
///
/// Quality need not be monotone in `alpha`; a coarse scan runs first and an
/// inversion around the floor is reported as [`Error::NonMonotoneDetected`].
pub fn tune_pm_exponential(inst: &ProblemInstance, cfg: &TuningConfig) -> Result<Tuned> {
    let (cap, floor) = tuned_cap(inst, cfg)?;
    let quality = |alpha: f64| perturbed_quality_at(inst, cfg, cap, PerturbationSpec::Exponential { alpha });
    let passes = |q: f64| q >= floor - slack(floor);
    let alphas: Vec<f64> = (0..COARSE_PROBES)
        .rev()
        .map(|i| cfg.alpha_max / 2f64.powi(i as i32))
        .collect();
    let coarse: Vec<f64> = alphas.par_iter().map(|&a| quality(a)).collect::<Result<_>>()?;
    for i in 0..alphas.len() {
        for j in i + 1..alphas.len() {
            if !passes(coarse[i]) && passes(coarse[j]) {
                return Err(Error::NonMonotoneDetected {
                    low_alpha: alphas[i],
                    low_quality: coarse[i],
                    high_alpha: alphas[j],
                    high_quality: coarse[j],
                });
            }
        }
    }
    let last = alphas.len() - 1;
    let (alpha, q) = if passes(coarse[last]) {
        (alphas[last], coarse[last])
    } else {
        let first_fail = coarse.iter().position(|q| !passes(*q)).expect("top probe fails");
        let (mut lo, mut lo_quality) = if first_fail == 0 {
            (0.0, f64::NAN)
        } else {
            (alphas[first_fail - 1], coarse[first_fail - 1])
        };
        let mut hi = alphas[first_fail];
        for _ in 0..cfg.alpha_steps {
            let mid = 0.5 * (lo + hi);
            let q = quality(mid)?;
            if passes(q) {
                lo = mid;
                lo_quality = q;
            } else {
                hi = mid;
            }
        }
        if lo <= 0.0 {
            return Err(Error::Infeasible(format!(
                "no alpha in (0, {}] reaches the floor {floor}",
                cfg.alpha_max
            )));
        }
        (lo, lo_quality)
    };
    let check = quality(alpha)?;
    if !passes(check) {
        return Err(Error::NonMonotoneDetected {
            low_alpha: alpha,
            low_quality: check,
            high_alpha: alpha,
            high_quality: q,
        });
    }
    Ok(Tuned {
        cap,
        param: Some(alpha),
        quality: check,
        floor,
    })
}

/// Smallest PLRA cap for the configured floor, as a [`Tuned`] record.
pub fn tune_plra(inst: &ProblemInstance, cfg: &TuningConfig) -> Result<Tuned> {
    cfg.check()?;
    let floor = resolve_floor(inst, cfg.floor)?;
    let cap = find_q_plra(inst, floor, cfg.search_tol)?;
    Ok(Tuned {
        cap,
        param: None,
        quality: solve_plra(inst, cap)?.quality(inst),
        floor,
    })
}
