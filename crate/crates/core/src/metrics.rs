//! Quality and randomness metrics of fractional assignments.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::perturbation::Perturbation;

/// Entries above this count towards the support.
pub const SUPPORT_TOL: f64 = 1e-9;

/// Tolerance on row and column sums of a fractional assignment.
pub const LOAD_TOL: f64 = 1e-9;

/// Marginal assignment probabilities `x[p, r]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalAssignment {
    x: Array2<f64>,
    /// Set when every entry is an exact multiple of `1 / grid`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<u64>,
}

impl FractionalAssignment {
    pub fn new(x: Array2<f64>) -> Self {
        FractionalAssignment { x, grid: None }
    }

    /// Entries `units[p, r] / grid`.
    pub fn from_units(units: &[u64], dims: (usize, usize), grid: u64) -> Self {
        let g = grid as f64;
        let x = Array2::from_shape_fn(dims, |(p, r)| units[p * dims.1 + r] as f64 / g);
        FractionalAssignment { x, grid: Some(grid) }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.x
    }

    pub fn dims(&self) -> (usize, usize) {
        self.x.dim()
    }

    pub fn get(&self, p: usize, r: usize) -> f64 {
        self.x[[p, r]]
    }

    pub fn grid(&self) -> Option<u64> {
        self.grid
    }

    /// Checks entries in `[0, 1]`, row sums `l_p` and column sums `<= l_r`.
    pub fn check(&self, inst: &ProblemInstance) -> Result<()> {
        check_dims(self, inst)?;
        let lp = inst.paper_load() as f64;
        let lr = inst.reviewer_load() as f64;
        if let Some(((p, r), v)) = self
            .x
            .indexed_iter()
            .find(|(_, v)| !(**v >= -LOAD_TOL && **v <= 1.0 + LOAD_TOL))
        {
            return Err(Error::MalformedInput(format!("x[{p},{r}] = {v} outside [0, 1]")));
        }
        for (p, row) in self.x.rows().into_iter().enumerate() {
            let s = row.sum();
            if (s - lp).abs() > LOAD_TOL * lp.max(1.0) * 10.0 {
                return Err(Error::MalformedInput(format!("row {p} sums to {s}, expected {lp}")));
            }
        }
        for (r, col) in self.x.columns().into_iter().enumerate() {
            let s = col.sum();
            if s > lr + LOAD_TOL * lr.max(1.0) * 10.0 {
                return Err(Error::MalformedInput(format!("column {r} sums to {s} > {lr}")));
            }
        }
        Ok(())
    }

    /// `sum S * x`.
    pub fn quality(&self, inst: &ProblemInstance) -> f64 {
        (&self.x * inst.similarities()).sum()
    }

    /// `sum S * f(x)`.
    pub fn perturbed_quality(&self, inst: &ProblemInstance, f: &Perturbation) -> f64 {
        self.x
            .indexed_iter()
            .map(|((p, r), &v)| f.weighted(v, inst.similarity(p, r)))
            .sum()
    }
}

fn check_dims(x: &FractionalAssignment, inst: &ProblemInstance) -> Result<()> {
    if x.dims() != inst.dims() {
        return Err(Error::DimensionMismatch {
            expected: inst.dims(),
            got: x.dims(),
        });
    }
    Ok(())
}

/// Quality plus the five randomness metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub quality: f64,
    pub maxprob: f64,
    pub avgmaxp: f64,
    pub support: usize,
    /// Natural-log entropy `-sum x ln x`.
    pub entropy: f64,
    pub l2norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pquality: Option<f64>,
    pub support_tol: f64,
}

pub fn compute_metrics(
    x: &FractionalAssignment,
    inst: &ProblemInstance,
    f: Option<&Perturbation>,
) -> Result<MetricsReport> {
    check_dims(x, inst)?;
    let m = x.matrix();
    let np = m.nrows();
    let maxprob = m.iter().copied().fold(0.0, f64::max);
    let avgmaxp = m
        .rows()
        .into_iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .sum::<f64>()
        / np as f64;
    let support = m.iter().filter(|&&v| v > SUPPORT_TOL).count();
    let entropy = m.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    let l2norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(MetricsReport {
        quality: x.quality(inst),
        maxprob,
        avgmaxp,
        support,
        entropy,
        l2norm,
        pquality: f.map(|f| x.perturbed_quality(inst, f)),
        support_tol: SUPPORT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::make_perturbation;
    use crate::fixtures::{fig1, fig1_plra_pattern, fig1_uniform};
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    #[test]
    fn fig1_uniform_metrics() {
        let inst = fig1();
        let m = compute_metrics(&fig1_uniform(), &inst, None).unwrap();
        assert_abs_diff_eq!(m.quality, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.maxprob, 0.5);
        assert_abs_diff_eq!(m.avgmaxp, 0.4, epsilon = 1e-12);
        assert_eq!(m.support, 13);
        assert_abs_diff_eq!(m.entropy, 3.0 * 3f64.ln() + 2.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.entropy, 4.6821, epsilon = 1e-4);
        assert_abs_diff_eq!(m.l2norm, 2f64.sqrt(), epsilon = 1e-12);
        assert!(m.pquality.is_none());
    }

    #[test]
    fn fig1_plra_metrics() {
        let inst = fig1();
        let m = compute_metrics(&fig1_plra_pattern(), &inst, None).unwrap();
        assert_abs_diff_eq!(m.quality, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.maxprob, 0.5);
        assert_abs_diff_eq!(m.avgmaxp, 0.5);
        assert_eq!(m.support, 10);
        assert_abs_diff_eq!(m.entropy, 5.0 * 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.l2norm, 2.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn identity_assignment_extremes() {
        let s = Array2::eye(3);
        let inst = ProblemInstance::new(s.clone(), 1, 1).unwrap();
        let x = FractionalAssignment::new(s);
        let m = compute_metrics(&x, &inst, None).unwrap();
        assert_eq!(m.quality, 3.0);
        assert_eq!(m.maxprob, 1.0);
        assert_eq!(m.support, 3);
        assert_eq!(m.entropy, 0.0);
        assert_abs_diff_eq!(m.l2norm, 3f64.sqrt());
    }

    #[test]
    fn pquality_present_with_perturbation() {
        let inst = fig1();
        let f = make_perturbation("quad:0.25".parse().unwrap()).unwrap();
        let m = compute_metrics(&fig1_uniform(), &inst, Some(&f)).unwrap();
        // 9 * (1/3 - 1/36) + 4 * (1/2 - 1/16)
        let expected = 9.0 * (1.0 / 3.0 - 0.25 / 9.0) + 4.0 * (0.5 - 0.25 / 4.0);
        assert_abs_diff_eq!(m.pquality.unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let inst = fig1();
        let x = FractionalAssignment::new(Array2::zeros((2, 5)));
        assert!(matches!(
            compute_metrics(&x, &inst, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn check_rejects_bad_rows() {
        let inst = ProblemInstance::new(array![[1.0, 1.0]], 1, 1).unwrap();
        assert!(FractionalAssignment::new(array![[0.5, 0.5]]).check(&inst).is_ok());
        assert!(FractionalAssignment::new(array![[0.5, 0.4]]).check(&inst).is_err());
        assert!(FractionalAssignment::new(array![[1.2, -0.2]]).check(&inst).is_err());
    }

    fn row_metrics(row: &[f64]) -> MetricsReport {
        let n = row.len();
        let inst = ProblemInstance::unchecked(Array2::ones((1, n)), 1, 1);
        let x = FractionalAssignment::new(Array1::from(row.to_vec()).into_shape((1, n)).unwrap());
        compute_metrics(&x, &inst, None).unwrap()
    }

    proptest! {
        #[test]
        fn uniform_row_is_most_random(raw in prop::collection::vec(0.0f64..1.0, 2..8), load in 1u32..3) {
            let n = raw.len();
            prop_assume!(load as usize <= n);
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-3);
            let lp = load as f64;
            let row: Vec<f64> = raw.iter().map(|v| v / total * lp).collect();
            prop_assume!(row.iter().all(|v| *v <= 1.0));
            let uniform = vec![lp / n as f64; n];
            let a = row_metrics(&row);
            let u = row_metrics(&uniform);
            prop_assert!(u.entropy >= a.entropy - 1e-12);
            prop_assert!(u.support >= a.support);
            prop_assert!(u.maxprob <= a.maxprob + 1e-12);
            prop_assert!(u.avgmaxp <= a.avgmaxp + 1e-12);
            prop_assert!(u.l2norm <= a.l2norm + 1e-12);
        }

        #[test]
        fn reviewer_permutation_invariance(seed in 0u64..1000) {
            use rand::seq::SliceRandom;
            let mut rng = crate::instance::rng_from_seed(seed);
            let inst = fig1();
            let x = fig1_uniform();
            let mut perm: Vec<usize> = (0..5).collect();
            perm.shuffle(&mut rng);
            let s2 = Array2::from_shape_fn((5, 5), |(p, r)| inst.similarity(p, perm[r]));
            let x2 = Array2::from_shape_fn((5, 5), |(p, r)| x.get(p, perm[r]));
            let inst2 = ProblemInstance::new(s2, 1, 1).unwrap();
            let a = compute_metrics(&x, &inst, None).unwrap();
            let b = compute_metrics(&FractionalAssignment::new(x2), &inst2, None).unwrap();
            prop_assert!((a.quality - b.quality).abs() < 1e-12);
            prop_assert!((a.entropy - b.entropy).abs() < 1e-12);
            prop_assert!((a.l2norm - b.l2norm).abs() < 1e-12);
            prop_assert_eq!(a.support, b.support);
            prop_assert_eq!(a.maxprob, b.maxprob);
            prop_assert!((a.avgmaxp - b.avgmaxp).abs() < 1e-12);
        }

        #[test]
        fn binary_assignment_has_zero_entropy(bits in prop::collection::vec(any::<bool>(), 12)) {
            let x = Array2::from_shape_fn((3, 4), |(p, r)| if bits[p * 4 + r] { 1.0 } else { 0.0 });
            let inst = ProblemInstance::unchecked(Array2::ones((3, 4)), 1, 4);
            let count = bits.iter().filter(|b| **b).count();
            let m = compute_metrics(&FractionalAssignment::new(x), &inst, None).unwrap();
            prop_assert_eq!(m.entropy, 0.0);
            prop_assert_eq!(m.support, count);
            prop_assert_eq!(m.quality, count as f64);
        }
    }
}
