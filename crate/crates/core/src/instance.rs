//! Problem data: similarity matrix plus paper and reviewer loads.

use std::fmt;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};

use crate::cap::Cap;
use crate::error::{Error, Result};
use crate::flow::{max_cost_max_flow, ArcBundle, FlowNetwork};

/// An assignment problem `(n_p, n_r, l_p, l_r, S)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    sim: Array2<f64>,
    paper_load: u32,
    reviewer_load: u32,
}

impl ProblemInstance {
    /// Builds and validates an instance.
    pub fn new(sim: Array2<f64>, paper_load: u32, reviewer_load: u32) -> Result<Self> {
        let inst = Self::unchecked(sim, paper_load, reviewer_load);
        let report = validate_instance(&inst);
        if let Some(v) = report.violations.first() {
            return Err(match *v {
                Violation::NegativeSimilarity { paper, reviewer, value } => Error::NegativeSimilarity {
                    row: paper,
                    column: reviewer,
                    value,
                },
                ref other => Error::InvalidSpec(other.to_string()),
            });
        }
        Ok(inst)
    }

    /// Builds an instance without checking any invariant.
    pub fn unchecked(sim: Array2<f64>, paper_load: u32, reviewer_load: u32) -> Self {
        ProblemInstance {
            sim,
            paper_load,
            reviewer_load,
        }
    }

    pub fn n_papers(&self) -> usize {
        self.sim.nrows()
    }

    pub fn n_reviewers(&self) -> usize {
        self.sim.ncols()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.sim.dim()
    }

    pub fn paper_load(&self) -> u32 {
        self.paper_load
    }

    pub fn reviewer_load(&self) -> u32 {
        self.reviewer_load
    }

    pub fn similarity(&self, p: usize, r: usize) -> f64 {
        self.sim[[p, r]]
    }

    pub fn similarities(&self) -> &Array2<f64> {
        &self.sim
    }

    pub fn total_similarity(&self) -> f64 {
        self.sim.sum()
    }
}

/// A violated instance invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NoPapers,
    NoReviewers,
    PaperLoadOutOfRange { paper_load: u32, n_reviewers: usize },
    ZeroReviewerLoad,
    NegativeSimilarity { paper: usize, reviewer: usize, value: f64 },
    NonFiniteSimilarity { paper: usize, reviewer: usize },
    LoadInfeasible { demand: u64, supply: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoPapers => write!(f, "no papers"),
            Violation::NoReviewers => write!(f, "no reviewers"),
            Violation::PaperLoadOutOfRange { paper_load, n_reviewers } => {
                write!(f, "paper load {paper_load} outside [1, {n_reviewers}]")
            }
            Violation::ZeroReviewerLoad => write!(f, "reviewer load must be >= 1"),
            Violation::NegativeSimilarity { paper, reviewer, value } => {
                write!(f, "negative similarity {value} at ({paper}, {reviewer})")
            }
            Violation::NonFiniteSimilarity { paper, reviewer } => {
                write!(f, "non-finite similarity at ({paper}, {reviewer})")
            }
            Violation::LoadInfeasible { demand, supply } => {
                write!(f, "load infeasible: n_p*l_p = {demand} > n_r*l_r = {supply}")
            }
        }
    }
}

/// Report-style validation result; empty means valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated invariant of `inst`.
pub fn validate_instance(inst: &ProblemInstance) -> ValidationReport {
    let mut violations = Vec::new();
    let (np, nr) = inst.dims();
    if np == 0 {
        violations.push(Violation::NoPapers);
    }
    if nr == 0 {
        violations.push(Violation::NoReviewers);
    }
    if inst.paper_load == 0 || inst.paper_load as usize > nr {
        violations.push(Violation::PaperLoadOutOfRange {
            paper_load: inst.paper_load,
            n_reviewers: nr,
        });
    }
    if inst.reviewer_load == 0 {
        violations.push(Violation::ZeroReviewerLoad);
    }
    for ((p, r), &v) in inst.sim.indexed_iter() {
        if !v.is_finite() {
            violations.push(Violation::NonFiniteSimilarity { paper: p, reviewer: r });
        } else if v < 0.0 {
            violations.push(Violation::NegativeSimilarity {
                paper: p,
                reviewer: r,
                value: v,
            });
        }
    }
    let demand = np as u64 * inst.paper_load as u64;
    let supply = nr as u64 * inst.reviewer_load as u64;
    if demand > supply {
        violations.push(Violation::LoadInfeasible { demand, supply });
    }
    ValidationReport { violations }
}

/// Whether some fractional assignment has row sums `l_p`, column sums at most
/// `l_r` and entries in `[0, Q]`. Decided by a max-flow on the network scaled
/// by the cap's denominator.
pub fn check_feasibility(inst: &ProblemInstance, cap: Cap) -> bool {
    let (np, nr) = inst.dims();
    let w = cap.denom();
    let units = cap.numer();
    let net = FlowNetwork::new(
        vec![inst.paper_load as u64 * w; np],
        vec![inst.reviewer_load as u64 * w; nr],
        vec![ArcBundle::uniform(0, units); np * nr],
    )
    .expect("consistent dimensions");
    let flow = max_cost_max_flow(&net);
    flow.value == np as u64 * inst.paper_load as u64 * w
}

/// Subject-area structure for block-constant similarity matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockwiseSpec {
    /// `k x k` block identity matrix.
    pub block_identity: Array2<f64>,
    pub paper_sizes: Vec<usize>,
    pub reviewer_sizes: Vec<usize>,
}

impl BlockwiseSpec {
    pub fn n_blocks(&self) -> usize {
        self.paper_sizes.len()
    }

    /// `sup { a : A_ii >= a * A_ij for all j != i }`; infinite when every
    /// off-diagonal entry is zero.
    pub fn dominance(&self) -> f64 {
        let a = &self.block_identity;
        let k = a.nrows();
        let mut dom = f64::INFINITY;
        for i in 0..k {
            for j in 0..k {
                if i != j && a[[i, j]] > 0.0 {
                    dom = dom.min(a[[i, i]] / a[[i, j]]);
                }
            }
        }
        dom
    }

    fn check(&self) -> Result<()> {
        let a = &self.block_identity;
        let k = self.paper_sizes.len();
        if k == 0 || a.dim() != (k, k) || self.reviewer_sizes.len() != k {
            return Err(Error::InvalidSpec(format!(
                "block identity {:?} does not match {} paper and {} reviewer blocks",
                a.dim(),
                k,
                self.reviewer_sizes.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSpec("block identity must be nonnegative".into()));
        }
        for i in 0..k {
            for j in 0..k {
                if i != j && a[[i, i]] <= a[[i, j]] {
                    return Err(Error::InvalidSpec(format!(
                        "block identity not dominant: A[{i},{i}] <= A[{i},{j}]"
                    )));
                }
            }
        }
        if self.paper_sizes.iter().sum::<usize>() == 0 || self.reviewer_sizes.iter().sum::<usize>() == 0 {
            return Err(Error::InvalidSpec("empty block sizes".into()));
        }
        Ok(())
    }

    /// Block index of each paper.
    pub fn paper_blocks(&self) -> Vec<usize> {
        expand(&self.paper_sizes)
    }

    /// Block index of each reviewer.
    pub fn reviewer_blocks(&self) -> Vec<usize> {
        expand(&self.reviewer_sizes)
    }
}

fn expand(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat(i).take(n))
        .collect()
}

/// Block-constant similarity matrix with `S[p, r] = A[block(p), block(r)]`.
pub fn generate_blockwise(spec: &BlockwiseSpec, paper_load: u32, reviewer_load: u32) -> Result<ProblemInstance> {
    spec.check()?;
    let pb = spec.paper_blocks();
    let rb = spec.reviewer_blocks();
    let sim = Array2::from_shape_fn((pb.len(), rb.len()), |(p, r)| spec.block_identity[[pb[p], rb[r]]]);
    ProblemInstance::new(sim, paper_load, reviewer_load)
}

/// Similarity levels for i.i.d. discrete instances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomDiscreteSpec {
    /// Strictly increasing, positive.
    pub levels: Vec<f64>,
    pub seed: u64,
}

impl RandomDiscreteSpec {
    fn check(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::InvalidSpec("at least one level required".into()));
        }
        if !(self.levels[0] > 0.0) || self.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSpec(
                "levels must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Seeded PRNG used everywhere in the crate (PCG-XSH-RR, 64-bit state).
pub fn rng_from_seed(seed: u64) -> Pcg32 {
    Pcg32::seed_from_u64(seed)
}

/// Similarity matrix whose entries are drawn uniformly from `spec.levels`.
pub fn generate_random_discrete(
    n_papers: usize,
    n_reviewers: usize,
    paper_load: u32,
    reviewer_load: u32,
    spec: &RandomDiscreteSpec,
) -> Result<ProblemInstance> {
    spec.check()?;
    let mut rng = rng_from_seed(spec.seed);
    let k = spec.levels.len();
    let sim = Array2::from_shape_simple_fn((n_papers, n_reviewers), || spec.levels[rng.gen_range(0..k)]);
    ProblemInstance::new(sim, paper_load, reviewer_load)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig1;
    use ndarray::array;

    #[test]
    fn fig1_instance_is_valid() {
        let inst = fig1();
        assert!(validate_instance(&inst).is_valid());
        assert_eq!(inst.dims(), (5, 5));
        let expected = array![
            [1., 1., 1., 0., 0.],
            [1., 1., 1., 0., 0.],
            [1., 1., 1., 0., 0.],
            [0., 0., 0., 1., 1.],
            [0., 0., 0., 1., 1.]
        ];
        assert_eq!(inst.similarities(), &expected);
    }

    #[test]
    fn overloaded_instance_reports_load_infeasible() {
        let inst = ProblemInstance::unchecked(Array2::ones((3, 2)), 1, 1);
        let report = validate_instance(&inst);
        assert!(report.violations.iter().any(|v| matches!(v, Violation::LoadInfeasible { .. })));
        assert!(report.violations.iter().any(|v| v.to_string().contains("load infeasible")));
    }

    #[test]
    fn negative_similarity_reported() {
        let inst = ProblemInstance::unchecked(array![[1.0, -0.1], [0.5, 0.5]], 1, 1);
        let report = validate_instance(&inst);
        assert_eq!(
            report.violations,
            vec![Violation::NegativeSimilarity {
                paper: 0,
                reviewer: 1,
                value: -0.1
            }]
        );
        assert!(report.violations[0].to_string().contains("negative similarity"));
        assert!(matches!(
            ProblemInstance::new(array![[1.0, -0.1], [0.5, 0.5]], 1, 1),
            Err(Error::NegativeSimilarity { .. })
        ));
    }

    #[test]
    fn feasibility_on_fig1() {
        let inst = fig1();
        assert!(check_feasibility(&inst, Cap::new(1, 2).unwrap()));
        assert!(!check_feasibility(&inst, Cap::new(1, 6).unwrap()));
        assert!(check_feasibility(&inst, Cap::new(1, 5).unwrap()));
        assert!(check_feasibility(&inst, Cap::ONE));
    }

    #[test]
    fn uncapped_feasible_whenever_loads_fit() {
        let inst = ProblemInstance::new(Array2::zeros((7, 3)), 2, 5).unwrap();
        assert!(check_feasibility(&inst, Cap::ONE));
    }

    #[test]
    fn blockwise_single_block_is_all_ones() {
        let spec = BlockwiseSpec {
            block_identity: array![[1.0]],
            paper_sizes: vec![4],
            reviewer_sizes: vec![4],
        };
        let inst = generate_blockwise(&spec, 1, 1).unwrap();
        assert_eq!(inst.similarities(), &Array2::<f64>::ones((4, 4)));
        assert_eq!(spec.dominance(), f64::INFINITY);
    }

    #[test]
    fn blockwise_two_by_two_pattern() {
        let spec = BlockwiseSpec {
            block_identity: array![[2.0, 1.0], [1.0, 3.0]],
            paper_sizes: vec![2, 2],
            reviewer_sizes: vec![2, 2],
        };
        let inst = generate_blockwise(&spec, 1, 1).unwrap();
        let s = inst.similarities();
        assert_eq!(s.row(0).to_vec(), vec![2., 2., 1., 1.]);
        assert_eq!(s.row(1).to_vec(), vec![2., 2., 1., 1.]);
        assert_eq!(s.row(2).to_vec(), vec![1., 1., 3., 3.]);
        assert_eq!(s.row(3).to_vec(), vec![1., 1., 3., 3.]);
        assert_eq!(spec.dominance(), 2.0);
    }

    #[test]
    fn non_dominant_block_identity_rejected() {
        let spec = BlockwiseSpec {
            block_identity: array![[1.0, 1.0], [0.0, 1.0]],
            paper_sizes: vec![1, 1],
            reviewer_sizes: vec![1, 1],
        };
        assert!(matches!(generate_blockwise(&spec, 1, 1), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn random_discrete_single_level() {
        let spec = RandomDiscreteSpec {
            levels: vec![1.0],
            seed: 7,
        };
        let inst = generate_random_discrete(1, 1, 1, 1, &spec).unwrap();
        assert_eq!(inst.similarities(), &array![[1.0]]);
    }

    #[test]
    fn random_discrete_is_reproducible() {
        let spec = RandomDiscreteSpec {
            levels: vec![0.25, 0.5, 1.0],
            seed: 42,
        };
        let a = generate_random_discrete(3, 3, 1, 1, &spec).unwrap();
        let b = generate_random_discrete(3, 3, 1, 1, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_discrete_levels_are_uniform() {
        let spec = RandomDiscreteSpec {
            levels: vec![0.25, 0.5, 1.0],
            seed: 1234,
        };
        let inst = generate_random_discrete(100, 100, 1, 1, &spec).unwrap();
        let n: f64 = 10_000.0;
        let p = 1.0 / 3.0;
        let sigma = (n * p * (1.0 - p)).sqrt();
        for level in &spec.levels {
            let count = inst.similarities().iter().filter(|v| *v == level).count() as f64;
            assert!((count - n * p).abs() <= 3.0 * sigma, "level {level}: {count}");
        }
    }

    #[test]
    fn bad_level_specs_rejected() {
        for levels in [vec![], vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]] {
            let spec = RandomDiscreteSpec { levels, seed: 0 };
            assert!(generate_random_discrete(2, 2, 1, 1, &spec).is_err());
        }
    }
}
