//! Concave perturbation functions and their numerical sanity checks.
//!
//! Two kinds of family exist. Global families (`linear`, `quad`, `exp`) apply
//! the same `f` to every pair. Targeted families scale a penalty by `lambda / S`
//! per pair so that `S * f(x)` becomes `S*x - lambda*g(x)` for a randomness
//! metric `g`; pairs with `S = 0` fall back to `f(x) = x`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::BlockwiseSpec;

/// Where the solvers clamp `x` before evaluating an unbounded derivative.
pub const DERIVATIVE_FLOOR: f64 = 1e-12;

/// Declarative description of a perturbation function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PerturbationSpec {
    Linear,
    /// `x - beta x^2`
    Quadratic { beta: f64 },
    /// `1 - exp(-alpha x)`
    Exponential { alpha: f64 },
    /// `x - (lambda / S) x ln x`
    EntropyTargeted { lambda: f64 },
    /// `x - (lambda / S) x^2`
    QuadraticTargeted { lambda: f64 },
    /// `x + (lambda / S) 1{x > 0}`; analysis only, rejected by both solvers.
    SupportTargeted { lambda: f64 },
}

impl PerturbationSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PerturbationSpec::Linear => "linear",
            PerturbationSpec::Quadratic { .. } => "quad",
            PerturbationSpec::Exponential { .. } => "exp",
            PerturbationSpec::EntropyTargeted { .. } => "te",
            PerturbationSpec::QuadraticTargeted { .. } => "tq",
            PerturbationSpec::SupportTargeted { .. } => "ts",
        }
    }

    fn parameter(&self) -> Option<f64> {
        match *self {
            PerturbationSpec::Linear => None,
            PerturbationSpec::Quadratic { beta } => Some(beta),
            PerturbationSpec::Exponential { alpha } => Some(alpha),
            PerturbationSpec::EntropyTargeted { lambda }
            | PerturbationSpec::QuadraticTargeted { lambda }
            | PerturbationSpec::SupportTargeted { lambda } => Some(lambda),
        }
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.parameter() {
            None => write!(f, "{}", self.name()),
            Some(v) => write!(f, "{}:{}", self.name(), v),
        }
    }
}

impl FromStr for PerturbationSpec {
    type Err = Error;

    /// `linear`, `quad:B`, `exp:A`, `te:L`, `tq:L`, `ts:L`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "linear" {
            return Ok(PerturbationSpec::Linear);
        }
        let (name, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("unrecognised perturbation `{s}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad parameter in `{s}`")))?;
        let spec = match name.trim() {
            "quad" => PerturbationSpec::Quadratic { beta: v },
            "exp" => PerturbationSpec::Exponential { alpha: v },
            "te" => PerturbationSpec::EntropyTargeted { lambda: v },
            "tq" => PerturbationSpec::QuadraticTargeted { lambda: v },
            "ts" => PerturbationSpec::SupportTargeted { lambda: v },
            other => return Err(Error::InvalidParameter(format!("unknown family `{other}`"))),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for PerturbationSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PerturbationSpec> for String {
    fn from(p: PerturbationSpec) -> String {
        p.to_string()
    }
}

/// A validated perturbation, evaluated per pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    spec: PerturbationSpec,
}

/// Validates `spec` and returns its evaluator.
pub fn make_perturbation(spec: PerturbationSpec) -> Result<Perturbation> {
    let bad = |what: String| Err(Error::InvalidParameter(what));
    match spec {
        PerturbationSpec::Linear => {}
        PerturbationSpec::Quadratic { beta } => {
            if !(0.0..=1.0).contains(&beta) {
                return bad(format!("beta = {beta} not in [0, 1]"));
            }
        }
        PerturbationSpec::Exponential { alpha } => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return bad(format!("alpha = {alpha} must be positive"));
            }
        }
        PerturbationSpec::EntropyTargeted { lambda }
        | PerturbationSpec::QuadraticTargeted { lambda }
        | PerturbationSpec::SupportTargeted { lambda } => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return bad(format!("lambda = {lambda} must be nonnegative"));
            }
        }
    }
    Ok(Perturbation { spec })
}

impl Perturbation {
    pub fn linear() -> Self {
        Perturbation {
            spec: PerturbationSpec::Linear,
        }
    }

    pub fn spec(&self) -> PerturbationSpec {
        self.spec
    }

    /// Penalty coefficient `lambda / S` of targeted families.
    fn targeted(lambda: f64, sim: f64) -> Option<f64> {
        (sim > 0.0).then(|| lambda / sim)
    }

    /// `f_{p,r}(x)` for a pair with similarity `sim`.
    pub fn value(&self, x: f64, sim: f64) -> f64 {
        match self.spec {
            PerturbationSpec::Linear => x,
            PerturbationSpec::Quadratic { beta } => x - beta * x * x,
            PerturbationSpec::Exponential { alpha } => -(-alpha * x).exp_m1(),
            PerturbationSpec::EntropyTargeted { lambda } => match Self::targeted(lambda, sim) {
                Some(c) if x > 0.0 => x - c * x * x.ln(),
                _ => x,
            },
            PerturbationSpec::QuadraticTargeted { lambda } => match Self::targeted(lambda, sim) {
                Some(c) => x - c * x * x,
                None => x,
            },
            PerturbationSpec::SupportTargeted { lambda } => match Self::targeted(lambda, sim) {
                Some(c) if x > 0.0 => x + c,
                _ => x,
            },
        }
    }

    /// `f'_{p,r}(x)`; `+inf` at zero for the entropy-targeted family.
    pub fn derivative(&self, x: f64, sim: f64) -> f64 {
        match self.spec {
            PerturbationSpec::Linear | PerturbationSpec::SupportTargeted { .. } => 1.0,
            PerturbationSpec::Quadratic { beta } => 1.0 - 2.0 * beta * x,
            PerturbationSpec::Exponential { alpha } => alpha * (-alpha * x).exp(),
            PerturbationSpec::EntropyTargeted { lambda } => match Self::targeted(lambda, sim) {
                Some(c) => 1.0 - c * (x.ln() + 1.0),
                None => 1.0,
            },
            PerturbationSpec::QuadraticTargeted { lambda } => match Self::targeted(lambda, sim) {
                Some(c) => 1.0 - 2.0 * c * x,
                None => 1.0,
            },
        }
    }

    /// `S * f(x)`, the pair's contribution to perturbed quality.
    pub fn weighted(&self, x: f64, sim: f64) -> f64 {
        if sim == 0.0 {
            0.0
        } else {
            sim * self.value(x, sim)
        }
    }

    /// `S * f'(x)` with `x` clamped to `DERIVATIVE_FLOOR`.
    pub fn weighted_gradient(&self, x: f64, sim: f64) -> f64 {
        if sim == 0.0 {
            0.0
        } else {
            sim * self.derivative(x.max(DERIVATIVE_FLOOR), sim)
        }
    }

    /// Solves `S f'(x) = c` over `x >= 0` ignoring the cap: `+inf` when `c`
    /// lies below every slope. `None` when `S f'` is constant (`S = 0` or a
    /// linear family).
    pub fn weighted_gradient_inverse(&self, c: f64, sim: f64) -> Option<f64> {
        if sim <= 0.0 || self.is_linear() {
            return None;
        }
        let x = match self.spec {
            PerturbationSpec::Quadratic { beta } => (1.0 - c / sim) / (2.0 * beta),
            PerturbationSpec::Exponential { alpha } => {
                if c <= 0.0 {
                    f64::INFINITY
                } else {
                    (sim * alpha / c).ln() / alpha
                }
            }
            PerturbationSpec::EntropyTargeted { lambda } => ((sim - c) / lambda - 1.0).exp(),
            PerturbationSpec::QuadraticTargeted { lambda } => (sim - c) / (2.0 * lambda),
            PerturbationSpec::Linear | PerturbationSpec::SupportTargeted { .. } => return None,
        };
        Some(x.max(0.0))
    }

    /// `S f''(x)`; zero for constant-slope pairs.
    pub fn weighted_curvature(&self, x: f64, sim: f64) -> f64 {
        if sim <= 0.0 {
            return 0.0;
        }
        match self.spec {
            PerturbationSpec::Linear | PerturbationSpec::SupportTargeted { .. } => 0.0,
            PerturbationSpec::Quadratic { beta } => -2.0 * beta * sim,
            PerturbationSpec::Exponential { alpha } => -sim * alpha * alpha * (-alpha * x).exp(),
            PerturbationSpec::EntropyTargeted { lambda } => -lambda / x.max(DERIVATIVE_FLOOR),
            PerturbationSpec::QuadraticTargeted { lambda } => -2.0 * lambda,
        }
    }

    pub fn is_linear(&self) -> bool {
        match self.spec {
            PerturbationSpec::Linear => true,
            PerturbationSpec::Quadratic { beta } => beta == 0.0,
            PerturbationSpec::EntropyTargeted { lambda } | PerturbationSpec::QuadraticTargeted { lambda } => {
                lambda == 0.0
            }
            _ => false,
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self.spec, PerturbationSpec::SupportTargeted { lambda } if lambda > 0.0)
    }

    /// The function as seen by one pair.
    pub fn at(&self, sim: f64) -> PairPerturbation {
        PairPerturbation { f: *self, sim }
    }
}

/// A one-dimensional perturbation on `[0, 1]`.
pub trait ScalarPerturbation {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// `Perturbation` restricted to a fixed similarity.
#[derive(Clone, Copy, Debug)]
pub struct PairPerturbation {
    f: Perturbation,
    sim: f64,
}

impl ScalarPerturbation for PairPerturbation {
    fn value(&self, x: f64) -> f64 {
        self.f.value(x, self.sim)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.f.derivative(x, self.sim)
    }
}

/// A failed perturbation-function condition.
#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationIssue {
    GridTooSmall(usize),
    NonzeroAtZero(f64),
    Decreasing { at: f64 },
    NotConcave { at: f64, second_difference: f64 },
}

impl fmt::Display for PerturbationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationIssue::GridTooSmall(n) => write!(f, "grid of {n} points is too small"),
            PerturbationIssue::NonzeroAtZero(v) => write!(f, "f(0) = {v} != 0"),
            PerturbationIssue::Decreasing { at } => write!(f, "not monotone: decreasing near x = {at}"),
            PerturbationIssue::NotConcave { at, second_difference } => {
                write!(f, "not concave: second difference {second_difference:e} at x = {at}")
            }
        }
    }
}

/// Outcome of [`verify_perturbation`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerturbationReport {
    pub violations: Vec<PerturbationIssue>,
    /// Set when `f'(0)` is infinite; the function is still admissible.
    pub derivative_unbounded_at_zero: bool,
}

impl PerturbationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `f(0) = 0`, monotonicity and concavity on a uniform grid of
/// `grid_size` points over `[0, 1]`.
pub fn verify_perturbation<F: ScalarPerturbation + ?Sized>(f: &F, grid_size: usize) -> PerturbationReport {
    let mut report = PerturbationReport::default();
    if grid_size < 3 {
        report.violations.push(PerturbationIssue::GridTooSmall(grid_size));
        return report;
    }
    let f0 = f.value(0.0);
    if f0 != 0.0 {
        report.violations.push(PerturbationIssue::NonzeroAtZero(f0));
    }
    let step = 1.0 / (grid_size - 1) as f64;
    let values: Vec<f64> = (0..grid_size).map(|i| f.value(i as f64 * step)).collect();
    if let Some(i) = values.windows(2).position(|w| w[1] < w[0] - 1e-12) {
        report.violations.push(PerturbationIssue::Decreasing { at: i as f64 * step });
    }
    for i in 1..grid_size - 1 {
        let d2 = values[i + 1] - 2.0 * values[i] + values[i - 1];
        if d2 > 1e-9 {
            report.violations.push(PerturbationIssue::NotConcave {
                at: i as f64 * step,
                second_difference: d2,
            });
            break;
        }
    }
    report.derivative_unbounded_at_zero = !f.derivative(0.0).is_finite();
    report
}

/// `f'(0) < Dom(A) f'(1)`: the derivative condition under which perturbed
/// maximization provably returns the within-block uniform assignment.
/// Evaluated with unit similarity, so only meaningful for global families.
pub fn blockwise_condition(f: &Perturbation, spec: &BlockwiseSpec) -> bool {
    let (d0, d1) = (f.derivative(0.0, 1.0), f.derivative(1.0, 1.0));
    let dom = spec.dominance();
    if dom.is_infinite() {
        d1 >= 0.0 && d0.is_finite()
    } else {
        d0 < dom * d1
    }
}

/// `f'(0) < (v_i / v_{i-1}) f'(1)` for all consecutive levels.
pub fn level_condition(f: &Perturbation, levels: &[f64]) -> bool {
    let (d0, d1) = (f.derivative(0.0, 1.0), f.derivative(1.0, 1.0));
    levels.windows(2).all(|w| d0 < w[1] / w[0] * d1)
}
