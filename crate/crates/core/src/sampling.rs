//! Lotteries over deterministic assignments.
//!
//! [`decompose`] writes a fractional assignment as a convex combination of
//! load-respecting binary assignments; [`sample_assignment`] draws one.
//!
//! The decomposition pads the assignment with a dummy paper that absorbs each
//! reviewer's slack, so every column sum is exactly `l_r`. Each step picks an
//! integral matrix `X` that rounds every entry of the current residual `y` to
//! its floor or ceiling while keeping the row and column sums, removes the
//! largest multiple `t` of `X` that keeps the rescaled residual inside the
//! rounding box, and repeats. Every step makes at least one more entry
//! integral.

use ndarray::Array2;
use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{max_cost_max_flow, ArcBundle, FlowNetwork};
use crate::instance::{rng_from_seed, ProblemInstance};
use crate::metrics::FractionalAssignment;

/// Residual entries this close to an integer count as integral on the
/// floating-point path.
pub const SNAP_TOL: f64 = 1e-9;

/// A binary assignment matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicAssignment {
    x: Array2<u8>,
}

impl DeterministicAssignment {
    pub fn new(x: Array2<u8>) -> Self {
        DeterministicAssignment { x }
    }

    pub fn matrix(&self) -> &Array2<u8> {
        &self.x
    }

    pub fn get(&self, p: usize, r: usize) -> bool {
        self.x[[p, r]] == 1
    }

    /// Reviewers assigned to paper `p`.
    pub fn reviewers_of(&self, p: usize) -> Vec<usize> {
        self.x.row(p).iter().enumerate().filter(|(_, v)| **v == 1).map(|(r, _)| r).collect()
    }

    pub fn to_fractional(&self) -> FractionalAssignment {
        FractionalAssignment::new(self.x.mapv(f64::from))
    }

    /// Row sums exactly `l_p`, column sums at most `l_r`, entries binary.
    pub fn is_feasible(&self, inst: &ProblemInstance) -> bool {
        self.x.dim() == inst.dims()
            && self.x.iter().all(|v| *v <= 1)
            && self.x.rows().into_iter().all(|r| r.iter().map(|v| *v as u32).sum::<u32>() == inst.paper_load())
            && self
                .x
                .columns()
                .into_iter()
                .all(|c| c.iter().map(|v| *v as u32).sum::<u32>() <= inst.reviewer_load())
    }
}

/// Weighted deterministic assignments whose mixture has the given marginals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentDistribution {
    pub components: Vec<(DeterministicAssignment, f64)>,
}

impl AssignmentDistribution {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|(_, g)| g).sum()
    }

    /// `sum gamma_i X_i`.
    pub fn marginals(&self) -> Array2<f64> {
        let dims = self.components.first().map_or((0, 0), |(x, _)| x.x.dim());
        let mut m = Array2::zeros(dims);
        for (x, g) in &self.components {
            m.zip_mut_with(&x.x, |a, &b| *a += g * b as f64);
        }
        m
    }

    /// `max |sum gamma_i X_i - x|`.
    pub fn reconstruction_error(&self, x: &FractionalAssignment) -> f64 {
        let m = self.marginals();
        if m.dim() != x.dims() {
            return f64::INFINITY;
        }
        m.iter().zip(x.matrix()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Splits `x` into a lottery over feasible deterministic assignments.
pub fn decompose(x: &FractionalAssignment, inst: &ProblemInstance) -> Result<AssignmentDistribution> {
    x.check(inst)?;
    let (np, nr) = inst.dims();
    let limit = nr + support(x) + 1;
    let lp = inst.paper_load() as u64;
    let lr = inst.reviewer_load() as u64;
    let slack_total = nr as u64 * lr - np as u64 * lp;
    let mut peeler = match x.grid() {
        Some(d) => Peeler::exact(x, d, lr)?,
        None => Peeler::float(x, lr),
    };
    let mut components = Vec::new();
    loop {
        if components.len() >= limit {
            return Err(Error::DecompositionOverrun { limit });
        }
        let (floors, fractional) = peeler.split();
        let rounded = round_face(np, nr, lp, lr, slack_total, &floors, &fractional)?;
        let (weight, done) = peeler.peel(&rounded, &fractional);
        let xs = Array2::from_shape_fn((np, nr), |(p, r)| rounded[p * nr + r] as u8);
        if weight > 0.0 {
            components.push((DeterministicAssignment::new(xs), weight));
        }
        if done {
            break;
        }
    }
    Ok(AssignmentDistribution { components })
}

fn support(x: &FractionalAssignment) -> usize {
    x.matrix().iter().filter(|v| **v > 0.0).count()
}

/// Integral matrix over the padded `(np + 1) x nr` layout with entries
/// `floor` or `floor + 1` (on fractional entries) and exact sums.
fn round_face(
    np: usize,
    nr: usize,
    lp: u64,
    lr: u64,
    slack_total: u64,
    floors: &[u64],
    fractional: &[bool],
) -> Result<Vec<u64>> {
    let rows = np + 1;
    let row_need: Vec<u64> = (0..rows)
        .map(|p| {
            let target = if p < np { lp } else { slack_total };
            let base: u64 = floors[p * nr..(p + 1) * nr].iter().sum();
            target.checked_sub(base).ok_or_else(|| malformed("row floors exceed load"))
        })
        .collect::<Result<_>>()?;
    let col_need: Vec<u64> = (0..nr)
        .map(|r| {
            let base: u64 = (0..rows).map(|p| floors[p * nr + r]).sum();
            lr.checked_sub(base).ok_or_else(|| malformed("column floors exceed load"))
        })
        .collect::<Result<_>>()?;
    let bundles = fractional
        .iter()
        .map(|&f| if f { ArcBundle::uniform(0, 1) } else { ArcBundle::default() })
        .collect();
    let want: u64 = row_need.iter().sum();
    if want != col_need.iter().sum::<u64>() {
        return Err(malformed("residual row and column totals differ"));
    }
    let net = FlowNetwork::new(row_need, col_need, bundles)?;
    let flow = max_cost_max_flow(&net);
    if flow.value != want {
        return Err(malformed("no integral rounding of the residual exists"));
    }
    Ok(floors.iter().zip(&flow.pair_units).map(|(f, u)| f + u).collect())
}

fn malformed(msg: &str) -> Error {
    Error::MalformedInput(format!("decomposition: {msg}"))
}

/// Residual mass `mu * y`, exact on a grid or in floating point.
enum Peeler {
    /// Entries in units of `1/d`; `mass` is the remaining weight times `d`.
    Exact { residual: Vec<u64>, mass: u64, d: u64 },
    Float { residual: Vec<f64>, mass: f64 },
}

impl Peeler {
    fn exact(x: &FractionalAssignment, d: u64, lr: u64) -> Result<Self> {
        let (np, nr) = x.dims();
        let df = d as f64;
        let mut residual = Vec::with_capacity((np + 1) * nr);
        for v in x.matrix().iter() {
            let u = (v * df).round();
            if (u - v * df).abs() > 1e-6 {
                return Err(malformed("entry is not on the declared grid"));
            }
            residual.push(u as u64);
        }
        for r in 0..nr {
            let col: u64 = (0..np).map(|p| residual[p * nr + r]).sum();
            residual.push((lr * d).checked_sub(col).ok_or_else(|| malformed("column overload"))?);
        }
        Ok(Peeler::Exact { residual, mass: d, d })
    }

    fn float(x: &FractionalAssignment, lr: u64) -> Self {
        let (np, nr) = x.dims();
        let mut residual: Vec<f64> = x.matrix().iter().map(|v| v.clamp(0.0, 1.0)).collect();
        for r in 0..nr {
            let col: f64 = (0..np).map(|p| residual[p * nr + r]).sum();
            residual.push((lr as f64 - col).max(0.0));
        }
        Peeler::Float { residual, mass: 1.0 }
    }

    /// Floors of the normalized residual and which entries are fractional.
    fn split(&self) -> (Vec<u64>, Vec<bool>) {
        match self {
            Peeler::Exact { residual, mass, .. } => (
                residual.iter().map(|v| v / mass).collect(),
                residual.iter().map(|v| v % mass != 0).collect(),
            ),
            Peeler::Float { residual, mass } => {
                let mut floors = Vec::with_capacity(residual.len());
                let mut frac = Vec::with_capacity(residual.len());
                for v in residual {
                    let y = v / mass;
                    let fl = (y + SNAP_TOL).floor().max(0.0);
                    floors.push(fl as u64);
                    frac.push(y - fl > SNAP_TOL);
                }
                (floors, frac)
            }
        }
    }

    /// Removes the chosen rounding; returns its weight and whether the
    /// residual is exhausted.
    fn peel(&mut self, rounded: &[u64], fractional: &[bool]) -> (f64, bool) {
        match self {
            Peeler::Exact { residual, mass, d } => {
                let m = *mass;
                let mut k = m;
                for (e, &is_frac) in fractional.iter().enumerate() {
                    if is_frac {
                        let rem = residual[e] % m;
                        let up = rounded[e] > residual[e] / m;
                        k = k.min(if up { rem } else { m - rem });
                    }
                }
                for (v, &x) in residual.iter_mut().zip(rounded) {
                    *v -= k * x;
                }
                *mass -= k;
                (k as f64 / *d as f64, *mass == 0)
            }
            Peeler::Float { residual, mass } => {
                let m = *mass;
                let mut t: f64 = 1.0;
                for (e, &is_frac) in fractional.iter().enumerate() {
                    if is_frac {
                        let y = residual[e] / m;
                        let fl = (y + SNAP_TOL).floor();
                        let frac = y - fl;
                        let up = rounded[e] as f64 > fl;
                        t = t.min(if up { frac } else { 1.0 - frac });
                    }
                }
                if fractional.iter().all(|f| !f) {
                    t = 1.0;
                }
                let k = t * m;
                for (v, &x) in residual.iter_mut().zip(rounded) {
                    *v = (*v - k * x as f64).max(0.0);
                }
                *mass -= k;
                let done = t >= 1.0 || *mass <= SNAP_TOL;
                if done {
                    (m, true)
                } else {
                    (k, false)
                }
            }
        }
    }
}

/// Draws one component with probability proportional to its weight.
pub fn sample_assignment(dist: &AssignmentDistribution, seed: u64) -> Result<DeterministicAssignment> {
    let mut rng = rng_from_seed(seed);
    Ok(dist.components[pick(dist, &mut rng)?].0.clone())
}

/// Indices of `n` components drawn from one seeded stream.
pub fn sample_indices(dist: &AssignmentDistribution, seed: u64, n: usize) -> Result<Vec<usize>> {
    let mut rng = rng_from_seed(seed);
    let index = weighted_index(dist)?;
    Ok((0..n).map(|_| index.sample(&mut rng)).collect())
}

fn weighted_index(dist: &AssignmentDistribution) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(dist.components.iter().map(|(_, g)| *g))
        .map_err(|e| Error::MalformedInput(format!("distribution weights: {e}")))
}

fn pick<R: rand::Rng>(dist: &AssignmentDistribution, rng: &mut R) -> Result<usize> {
    Ok(weighted_index(dist)?.sample(rng))
}
