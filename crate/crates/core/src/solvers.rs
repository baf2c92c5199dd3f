//! Fractional assignment solvers.
//!
//! * [`solve_plra`]: the capped linear program, solved exactly as a flow on
//!   the network scaled by the cap's denominator.
//! * [`solve_pm_flow`]: the piecewise-linear flow approximation of the
//!   perturbed program at precision `w`, followed by the greedy top-up.
//! * [`solve_pm_exact`]: pairwise conditional gradient on the perturbed
//!   program; every linear subproblem is an exact flow solve.
//! * [`solve_greedy`] / [`solve_balanced_greedy`]: per-paper constructions
//!   used as oracles on discrete-similarity instances.

use std::collections::HashMap;

use ndarray::Array2;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::cap::Cap;
use crate::error::{Error, Result};
use crate::dual;
use crate::flow::{build_pm_network, max_cost_max_flow, ArcBundle, FlowNetwork};
use crate::instance::ProblemInstance;
use crate::metrics::FractionalAssignment;
use crate::perturbation::{make_perturbation, Perturbation, PerturbationSpec};

/// Parameters shared by the perturbed solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub cap: Cap,
    pub perturbation: PerturbationSpec,
    /// Grid precision of the flow approximation.
    pub w: u64,
    /// Conditional gradient stops once the duality gap is below `tol * sum(S)`.
    pub tol: f64,
    pub max_iters: usize,
    /// Try a Newton solve on the dual prices before the conditional-gradient
    /// loop; its point is kept only when the linear oracle certifies the gap.
    #[serde(default = "default_dual_start")]
    pub dual_start: bool,
}

fn default_dual_start() -> bool {
    true
}

impl SolverConfig {
    /// Defaults: `w` is the smallest multiple of the cap denominator that is at
    /// least 100, `tol = 1e-10`, `max_iters = 20000`.
    pub fn new(cap: Cap, perturbation: PerturbationSpec) -> Self {
        let b = cap.denom();
        SolverConfig {
            cap,
            perturbation,
            w: b * 100u64.div_ceil(b).max(1),
            tol: 1e-10,
            max_iters: 20_000,
            dual_start: true,
        }
    }

    pub fn with_w(mut self, w: u64) -> Self {
        self.w = w;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_dual_start(mut self, on: bool) -> Self {
        self.dual_start = on;
        self
    }

    fn check(&self) -> Result<()> {
        if self.w == 0 {
            return Err(Error::InvalidParameter("precision w must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Solver diagnostics.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final conditional-gradient duality gap (bounds `OPT - PQuality(x)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub augmentations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_vertices: Option<usize>,
}

/// An assignment together with how it was obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub assignment: FractionalAssignment,
    pub stats: SolveStats,
}

/// Largest absolute fixed-point cost used by linear subproblems.
const MAX_LINEAR_SCALE: f64 = 1e12;

/// Integral optimum of `max <weights, x>` on the capped polytope scaled by the
/// cap denominator `b`: returns per-pair units (multiples of `1/b`).
struct LinearVertex {
    units: Vec<u64>,
    augmentations: usize,
}

fn linear_vertex(inst: &ProblemInstance, cap: Cap, weights: &[f64]) -> Result<LinearVertex> {
    let (np, nr) = inst.dims();
    let b = cap.denom();
    let a = cap.numer();
    let max_abs = weights.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nodes = (np + nr + 2) as f64;
    let scale = if max_abs > 0.0 {
        MAX_LINEAR_SCALE.min(1e18 / (4.0 * nodes * max_abs))
    } else {
        1.0
    };
    let costs: Vec<i64> = weights.iter().map(|v| (v * scale).round() as i64).collect();
    let net = FlowNetwork::new(
        vec![inst.paper_load() as u64 * b; np],
        vec![inst.reviewer_load() as u64 * b; nr],
        costs.iter().map(|&c| ArcBundle::uniform(c, a)).collect(),
    )?;
    let flow = max_cost_max_flow(&net);
    let need = np as u64 * inst.paper_load() as u64 * b;
    if flow.value < need {
        return Err(Error::Infeasible(format!(
            "cap {cap} admits total mass {}/{b}, need {need}/{b}",
            flow.value
        )));
    }
    let mut units = flow.pair_units;
    cancel_free_cycles(&mut units, &costs, np, nr, a, inst.reviewer_load() as u64 * b);
    Ok(LinearVertex {
        units,
        augmentations: flow.augmentations,
    })
}

/// Moves an optimal integral flow to a vertex of the polytope by cancelling
/// cycles of arcs strictly between their bounds, never decreasing the cost.
fn cancel_free_cycles(units: &mut [u64], costs: &[i64], np: usize, nr: usize, cap: u64, col_cap: u64) {
    let sink = np + nr;
    let n = np + nr + 1;
    let mut col: Vec<u64> = (0..nr).map(|r| (0..np).map(|p| units[p * nr + r]).sum()).collect();
    loop {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for p in 0..np {
            for r in 0..nr {
                let u = units[p * nr + r];
                if u > 0 && u < cap {
                    adj[p].push(np + r);
                    adj[np + r].push(p);
                }
            }
        }
        for r in 0..nr {
            if col[r] > 0 && col[r] < col_cap {
                adj[np + r].push(sink);
                adj[sink].push(np + r);
            }
        }
        let Some(cycle) = find_cycle(&adj) else { return };
        // +1 along the traversal direction, -1 against it
        let step = |i: usize| (cycle[i], cycle[(i + 1) % cycle.len()]);
        let mut gain: i128 = 0;
        for i in 0..cycle.len() {
            let (u, v) = step(i);
            if u < np && v >= np && v < sink {
                gain += costs[u * nr + v - np] as i128;
            } else if v < np && u >= np && u < sink {
                gain -= costs[v * nr + u - np] as i128;
            }
        }
        let sign: i64 = if gain >= 0 { 1 } else { -1 };
        let mut delta = u64::MAX;
        for i in 0..cycle.len() {
            let (u, v) = step(i);
            let (edge_up, residual_up, residual_down) = edge_state(u, v, np, sink, nr, units, &col, cap, col_cap);
            let up = (sign == 1) == edge_up;
            delta = delta.min(if up { residual_up } else { residual_down });
        }
        debug_assert!(delta > 0);
        for i in 0..cycle.len() {
            let (u, v) = step(i);
            let (edge_up, _, _) = edge_state(u, v, np, sink, nr, units, &col, cap, col_cap);
            let up = (sign == 1) == edge_up;
            let slot: &mut u64 = if u == sink || v == sink {
                let r = if u == sink { v } else { u } - np;
                &mut col[r]
            } else if u < np {
                &mut units[u * nr + v - np]
            } else {
                &mut units[v * nr + u - np]
            };
            if up {
                *slot += delta;
            } else {
                *slot -= delta;
            }
        }
    }
}

// whether traversing u -> v follows the flow direction, plus residuals
#[allow(clippy::too_many_arguments)]
fn edge_state(
    u: usize,
    v: usize,
    np: usize,
    sink: usize,
    nr: usize,
    units: &[u64],
    col: &[u64],
    cap: u64,
    col_cap: u64,
) -> (bool, u64, u64) {
    if v == sink {
        let c = col[u - np];
        (true, col_cap - c, c)
    } else if u == sink {
        let c = col[v - np];
        (false, col_cap - c, c)
    } else if u < np {
        let x = units[u * nr + v - np];
        (true, cap - x, x)
    } else {
        let x = units[v * nr + u - np];
        (false, cap - x, x)
    }
}

/// Any simple cycle of an undirected simple graph, as a node sequence.
fn find_cycle(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![usize::MAX; n];
    for root in 0..n {
        if depth[root] != usize::MAX || adj[root].is_empty() {
            continue;
        }
        depth[root] = 0;
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next == adj[u].len() {
                stack.pop();
                continue;
            }
            let v = adj[u][*next];
            *next += 1;
            if v == parent[u] {
                continue;
            }
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                parent[v] = u;
                stack.push((v, 0));
            } else if depth[v] < depth[u] {
                let mut cycle = vec![u];
                let mut w = u;
                while w != v {
                    w = parent[w];
                    cycle.push(w);
                }
                return Some(cycle);
            }
        }
    }
    None
}

/// Quality-maximal assignment with entries capped at `Q`.
///
/// The result is a vertex of the capped polytope with entries on the grid
/// `1/b` where `Q = a/b`.
pub fn solve_plra(inst: &ProblemInstance, cap: Cap) -> Result<FractionalAssignment> {
    Ok(solve_plra_detailed(inst, cap)?.assignment)
}

pub fn solve_plra_detailed(inst: &ProblemInstance, cap: Cap) -> Result<Solution> {
    let weights: Vec<f64> = inst.similarities().iter().copied().collect();
    let v = linear_vertex(inst, cap, &weights)?;
    Ok(Solution {
        assignment: FractionalAssignment::from_units(&v.units, inst.dims(), cap.denom()),
        stats: SolveStats {
            iterations: 1,
            augmentations: v.augmentations,
            ..SolveStats::default()
        },
    })
}

/// Maximum quality `M` over all assignments (cap 1).
pub fn max_quality(inst: &ProblemInstance) -> Result<f64> {
    Ok(solve_plra(inst, Cap::ONE)?.quality(inst))
}

/// Piecewise-linear flow approximation at precision `cfg.w`.
///
/// Flow units become `x = units / w`; entries are then raised in
/// lexicographic `(p, r)` order by `min(Q - x, paper need, reviewer room)`.
pub fn solve_pm_flow(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<FractionalAssignment> {
    Ok(solve_pm_flow_detailed(inst, cfg)?.assignment)
}

pub fn solve_pm_flow_detailed(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.check()?;
    let f = make_perturbation(cfg.perturbation)?;
    let net = build_pm_network(inst, cfg.cap, &f, cfg.w)?;
    let flow = max_cost_max_flow(&net);
    let (np, nr) = inst.dims();
    // exact arithmetic on the common grid of 1/w and Q
    let grid = cfg.w.lcm(&cfg.cap.denom());
    let per_unit = grid / cfg.w;
    let cap_units = cfg.cap.numer() * (grid / cfg.cap.denom());
    let lp = inst.paper_load() as u64 * grid;
    let lr = inst.reviewer_load() as u64 * grid;
    let mut units: Vec<u64> = flow.pair_units.iter().map(|u| u * per_unit).collect();
    let mut row: Vec<u64> = (0..np).map(|p| units[p * nr..(p + 1) * nr].iter().sum()).collect();
    let mut col: Vec<u64> = (0..nr).map(|r| (0..np).map(|p| units[p * nr + r]).sum()).collect();
    for p in 0..np {
        for r in 0..nr {
            let e = p * nr + r;
            let add = (cap_units - units[e]).min(lp - row[p]).min(lr - col[r]);
            units[e] += add;
            row[p] += add;
            col[r] += add;
        }
    }
    let total: u64 = row.iter().sum();
    if total != np as u64 * lp {
        return Err(Error::Infeasible(format!(
            "flow approximation placed {total}/{grid} of {} required mass",
            np as u64 * lp
        )));
    }
    Ok(Solution {
        assignment: FractionalAssignment::from_units(&units, inst.dims(), grid),
        stats: SolveStats {
            iterations: 1,
            augmentations: flow.augmentations,
            ..SolveStats::default()
        },
    })
}

/// A vertex of the capped polytope, stored sparsely as `(pair, units)`.
#[derive(Clone, Debug)]
struct Vertex {
    entries: Vec<(usize, u64)>,
    weight: f64,
}

impl Vertex {
    fn dot(&self, g: &[f64], scale: f64) -> f64 {
        self.entries.iter().map(|&(e, u)| g[e] * u as f64).sum::<f64>() * scale
    }
}

/// Perturbed quality maximized to duality gap `cfg.tol * sum(S)` by pairwise
/// conditional gradient with exact line search.
pub fn solve_pm_exact(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<FractionalAssignment> {
    Ok(solve_pm_exact_detailed(inst, cfg)?.assignment)
}

pub fn solve_pm_exact_detailed(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution> {
    cfg.check()?;
    let f = make_perturbation(cfg.perturbation)?;
    if !f.is_differentiable() {
        return Err(Error::NotDifferentiable(cfg.perturbation.to_string()));
    }
    ConditionalGradient::new(inst, cfg, f).run()
}

struct ConditionalGradient<'a> {
    inst: &'a ProblemInstance,
    cfg: &'a SolverConfig,
    f: Perturbation,
    sim: Vec<f64>,
    inv_b: f64,
    x: Vec<f64>,
    active: Vec<Vertex>,
    index: HashMap<Vec<(usize, u64)>, usize>,
    augmentations: usize,
}

impl<'a> ConditionalGradient<'a> {
    fn new(inst: &'a ProblemInstance, cfg: &'a SolverConfig, f: Perturbation) -> Self {
        let sim: Vec<f64> = inst.similarities().iter().copied().collect();
        ConditionalGradient {
            inst,
            cfg,
            f,
            x: vec![0.0; sim.len()],
            sim,
            inv_b: 1.0 / cfg.cap.denom() as f64,
            active: Vec::new(),
            index: HashMap::new(),
            augmentations: 0,
        }
    }

    fn gradient(&self) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.sim)
            .map(|(&x, &s)| self.f.weighted_gradient(x, s))
            .collect()
    }

    fn lmo(&mut self, g: &[f64]) -> Result<Vec<(usize, u64)>> {
        let v = linear_vertex(self.inst, self.cfg.cap, g)?;
        self.augmentations += v.augmentations;
        Ok(v.units.iter().enumerate().filter(|(_, u)| **u > 0).map(|(e, u)| (e, *u)).collect())
    }

    fn add_weight(&mut self, entries: Vec<(usize, u64)>, w: f64) -> usize {
        if let Some(&i) = self.index.get(&entries) {
            self.active[i].weight += w;
            return i;
        }
        self.index.insert(entries.clone(), self.active.len());
        self.active.push(Vertex { entries, weight: w });
        self.active.len() - 1
    }

    fn remove(&mut self, i: usize) {
        let v = self.active.swap_remove(i);
        self.index.remove(&v.entries);
        if i < self.active.len() {
            let moved = self.active[i].entries.clone();
            self.index.insert(moved, i);
        }
    }

    fn rebuild_x(&mut self) {
        self.x.fill(0.0);
        for v in &self.active {
            for &(e, u) in &v.entries {
                self.x[e] += v.weight * u as f64 * self.inv_b;
            }
        }
    }

    fn run(mut self) -> Result<Solution> {
        let total_s: f64 = self.sim.iter().sum();
        let threshold = self.cfg.tol * total_s.max(f64::MIN_POSITIVE);
        if self.cfg.dual_start && !self.f.is_linear() {
            if let Some(done) = self.try_dual(threshold)? {
                return Ok(done);
            }
        }
        let g0 = self.gradient();
        let start = self.lmo(&g0)?;
        self.add_weight(start, 1.0);
        self.rebuild_x();
        let mut gap = f64::INFINITY;
        let mut iterations = 0;
        while iterations < self.cfg.max_iters {
            iterations += 1;
            let g = self.gradient();
            let s = self.lmo(&g)?;
            let gx: f64 = g.iter().zip(&self.x).map(|(a, b)| a * b).sum();
            let gs: f64 = s.iter().map(|&(e, u)| g[e] * u as f64).sum::<f64>() * self.inv_b;
            gap = gs - gx;
            if gap <= threshold {
                break;
            }
            let away = (0..self.active.len())
                .min_by(|&i, &j| {
                    let a = self.active[i].dot(&g, self.inv_b);
                    let b = self.active[j].dot(&g, self.inv_b);
                    a.total_cmp(&b)
                })
                .expect("active set is never empty");
            if self.active[away].entries == s {
                // the best vertex already carries all weight it can
                break;
            }
            let d = self.direction(&s, away);
            let gamma_max = self.active[away].weight;
            let gamma = self.line_search(&d, gamma_max);
            if gamma <= 0.0 {
                break;
            }
            for &(e, de) in &d {
                self.x[e] = (self.x[e] + gamma * de).clamp(0.0, 1.0);
            }
            self.add_weight(s, gamma);
            if gamma >= gamma_max {
                self.remove(away);
            } else {
                self.active[away].weight -= gamma;
            }
            if iterations % 100 == 0 {
                self.rebuild_x();
            }
        }
        self.rebuild_x();
        Ok(Solution {
            assignment: FractionalAssignment::new(Array2::from_shape_vec(self.inst.dims(), self.x).expect("shape")),
            stats: SolveStats {
                iterations,
                gap: Some(gap.max(0.0)),
                augmentations: self.augmentations,
                active_vertices: Some(self.active.len()),
            },
        })
    }

    /// Takes the dual Newton point when it is feasible and the linear
    /// oracle certifies its gap.
    fn try_dual(&mut self, threshold: f64) -> Result<Option<Solution>> {
        let inst = self.inst;
        let f = self.f;
        let sim = self.sim.clone();
        let q = self.cfg.cap.as_f64();
        dual::solve_dual(inst, q, &f, &sim, |x, iterations| self.certify(x, iterations, threshold))
    }

    /// Accepts a feasible point whose linear-oracle gap is below `threshold`.
    fn certify(&mut self, x: Vec<f64>, iterations: usize, threshold: f64) -> Result<Option<Solution>> {
        let (np, nr) = self.inst.dims();
        let q = self.cfg.cap.as_f64();
        let lp = self.inst.paper_load() as f64;
        let lr = self.inst.reviewer_load() as f64;
        let tol = 1e-10;
        let rows_ok = x.chunks(nr).all(|row| (row.iter().sum::<f64>() - lp).abs() <= tol * lp.max(1.0));
        let cols_ok = (0..nr).all(|r| (0..np).map(|p| x[p * nr + r]).sum::<f64>() <= lr + tol * lr.max(1.0));
        if !rows_ok || !cols_ok || x.iter().any(|v| !(*v >= 0.0 && *v <= q)) {
            return Ok(None);
        }
        let saved = std::mem::replace(&mut self.x, x);
        let g = self.gradient();
        let s = self.lmo(&g)?;
        let gx: f64 = g.iter().zip(&self.x).map(|(a, b)| a * b).sum();
        let gs: f64 = s.iter().map(|&(e, u)| g[e] * u as f64).sum::<f64>() * self.inv_b;
        let gap = gs - gx;
        let x = std::mem::replace(&mut self.x, saved);
        if gap > threshold {
            return Ok(None);
        }
        Ok(Some(Solution {
            assignment: FractionalAssignment::new(Array2::from_shape_vec(self.inst.dims(), x).expect("shape")),
            stats: SolveStats {
                iterations: iterations + 1,
                gap: Some(gap.max(0.0)),
                augmentations: self.augmentations,
                active_vertices: None,
            },
        }))
    }

    /// Sparse `s - v_away`.
    fn direction(&self, s: &[(usize, u64)], away: usize) -> Vec<(usize, f64)> {
        let mut d: HashMap<usize, i128> = HashMap::new();
        for &(e, u) in s {
            *d.entry(e).or_default() += u as i128;
        }
        for &(e, u) in &self.active[away].entries {
            *d.entry(e).or_default() -= u as i128;
        }
        let mut d: Vec<(usize, f64)> = d
            .into_iter()
            .filter(|(_, v)| *v != 0)
            .map(|(e, v)| (e, v as f64 * self.inv_b))
            .collect();
        d.sort_unstable_by_key(|(e, _)| *e);
        d
    }

    /// Maximizer of the concave slice `phi(t) = PQuality(x + t d)` on
    /// `[0, t_max]`, by bisection on the sign of `phi'`.
    fn line_search(&self, d: &[(usize, f64)], t_max: f64) -> f64 {
        let slope = |t: f64| -> f64 {
            d.iter()
                .map(|&(e, de)| de * self.f.weighted_gradient((self.x[e] + t * de).clamp(0.0, 1.0), self.sim[e]))
                .sum()
        };
        if slope(0.0) <= 0.0 {
            return 0.0;
        }
        if slope(t_max) >= 0.0 {
            return t_max;
        }
        let (mut lo, mut hi) = (0.0, t_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// A reviewer whose column sum exceeds `l_r` under a greedy construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleMarker {
    pub reviewer: usize,
    pub load: f64,
    pub limit: u32,
}

/// Result of a greedy construction: the assignment ignores reviewer loads and
/// is flagged when it overloads someone.
#[derive(Clone, Debug, PartialEq)]
pub enum GreedyOutcome {
    Feasible(FractionalAssignment),
    Infeasible(InfeasibleMarker),
}

impl GreedyOutcome {
    pub fn assignment(&self) -> Option<&FractionalAssignment> {
        match self {
            GreedyOutcome::Feasible(x) => Some(x),
            GreedyOutcome::Infeasible(_) => None,
        }
    }

    pub fn into_assignment(self) -> Option<FractionalAssignment> {
        match self {
            GreedyOutcome::Feasible(x) => Some(x),
            GreedyOutcome::Infeasible(_) => None,
        }
    }
}

fn greedy_precondition(inst: &ProblemInstance, cap: Cap) -> Result<()> {
    let room = cap.numer() as u128 * inst.n_reviewers() as u128;
    if room < inst.paper_load() as u128 * cap.denom() as u128 {
        return Err(Error::Infeasible(format!(
            "cap {cap} times {} reviewers is below l_p = {}",
            inst.n_reviewers(),
            inst.paper_load()
        )));
    }
    Ok(())
}

/// Reviewers sorted by similarity for paper `p`, descending, ties by index.
fn ranked(inst: &ProblemInstance, p: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.n_reviewers()).collect();
    order.sort_by(|&a, &b| inst.similarity(p, b).total_cmp(&inst.similarity(p, a)).then(a.cmp(&b)));
    order
}

fn check_columns(inst: &ProblemInstance, x: FractionalAssignment) -> GreedyOutcome {
    let limit = inst.reviewer_load();
    for (r, c) in x.matrix().columns().into_iter().enumerate() {
        let load = c.sum();
        if load > limit as f64 + 1e-9 {
            return GreedyOutcome::Infeasible(InfeasibleMarker { reviewer: r, load, limit });
        }
    }
    GreedyOutcome::Feasible(x)
}

/// Each paper gives `Q` to its top `floor(l_p / Q)` reviewers and the
/// remainder to the next one.
pub fn solve_greedy(inst: &ProblemInstance, cap: Cap) -> Result<GreedyOutcome> {
    greedy_precondition(inst, cap)?;
    let (np, nr) = inst.dims();
    let (a, b) = (cap.numer(), cap.denom());
    let mut units = vec![0u64; np * nr];
    for p in 0..np {
        let mut need = inst.paper_load() as u64 * b;
        for r in ranked(inst, p) {
            if need == 0 {
                break;
            }
            let give = need.min(a);
            units[p * nr + r] = give;
            need -= give;
        }
    }
    Ok(check_columns(inst, FractionalAssignment::from_units(&units, inst.dims(), b)))
}

/// Like [`solve_greedy`], but reviewers with equal similarity form a level
/// that is either saturated at `Q` or shares the remaining need uniformly.
pub fn solve_balanced_greedy(inst: &ProblemInstance, cap: Cap) -> Result<GreedyOutcome> {
    greedy_precondition(inst, cap)?;
    let (np, nr) = inst.dims();
    let (a, b) = (cap.numer(), cap.denom());
    let q = cap.as_f64();
    let mut x = Array2::zeros((np, nr));
    for p in 0..np {
        let order = ranked(inst, p);
        let mut need = inst.paper_load() as u64 * b;
        let mut i = 0;
        while i < nr && need > 0 {
            let level = inst.similarity(p, order[i]);
            let mut j = i;
            while j < nr && inst.similarity(p, order[j]) == level {
                j += 1;
            }
            let size = (j - i) as u64;
            if need >= a * size {
                for &r in &order[i..j] {
                    x[[p, r]] = q;
                }
                need -= a * size;
            } else {
                let share = need as f64 / (b * size) as f64;
                for &r in &order[i..j] {
                    x[[p, r]] = share;
                }
                need = 0;
            }
            i = j;
        }
    }
    Ok(check_columns(inst, FractionalAssignment::new(x)))
}
