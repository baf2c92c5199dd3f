//! Exact max-cost max-flow on the bipartite assignment network.
//!
//! The network is always `s -> paper -> reviewer -> t`. Every paper-reviewer
//! pair carries a bundle of unit arcs whose costs are nonincreasing; bundles are
//! stored run-length compressed as `(cost, multiplicity)` so that a shortest
//! path scan only looks at the next unused run forward and the last used run
//! backward.
//!
//! Costs are fixed-point integers. The solver is successive shortest paths on
//! negated costs with node potentials: the initial potentials come from one
//! Bellman-Ford sweep over the layered DAG, and every later search is a dense
//! Dijkstra over reduced costs.

use crate::cap::Cap;
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::perturbation::Perturbation;

/// Fixed-point scale for arc costs.
pub const COST_SCALE: f64 = 1e9;

/// `round(v * COST_SCALE)`.
pub fn fixpoint(v: f64) -> i64 {
    (v * COST_SCALE).round() as i64
}

/// A maximal run of parallel unit arcs sharing one cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostRun {
    pub cost: i64,
    pub len: u64,
}

/// Parallel arcs of one paper-reviewer pair, in nonincreasing cost order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArcBundle {
    runs: Vec<CostRun>,
}

impl ArcBundle {
    /// Builds a bundle from per-arc costs, merging equal neighbours.
    /// Costs must be nonincreasing.
    pub fn from_costs(costs: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut runs: Vec<CostRun> = Vec::new();
        for c in costs {
            match runs.last_mut() {
                Some(last) if last.cost == c => last.len += 1,
                Some(last) if last.cost < c => {
                    return Err(Error::InvalidSpec(format!(
                        "arc costs must be nonincreasing ({} then {c})",
                        last.cost
                    )))
                }
                _ => runs.push(CostRun { cost: c, len: 1 }),
            }
        }
        Ok(ArcBundle { runs })
    }

    /// `len` parallel arcs all costing `cost`.
    pub fn uniform(cost: i64, len: u64) -> Self {
        if len == 0 {
            return ArcBundle::default();
        }
        ArcBundle {
            runs: vec![CostRun { cost, len }],
        }
    }

    pub fn runs(&self) -> &[CostRun] {
        &self.runs
    }

    pub fn capacity(&self) -> u64 {
        self.runs.iter().map(|r| r.len).sum()
    }

    /// Total cost of the first `units` arcs.
    pub fn prefix_cost(&self, mut units: u64) -> i128 {
        let mut total = 0i128;
        for r in &self.runs {
            let take = units.min(r.len);
            total += r.cost as i128 * take as i128;
            units -= take;
            if units == 0 {
                break;
            }
        }
        total
    }
}

/// The assignment flow network.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    n_papers: usize,
    n_reviewers: usize,
    paper_caps: Vec<u64>,
    reviewer_caps: Vec<u64>,
    bundles: Vec<ArcBundle>,
}

impl FlowNetwork {
    /// `bundles` is row-major over (paper, reviewer).
    pub fn new(paper_caps: Vec<u64>, reviewer_caps: Vec<u64>, bundles: Vec<ArcBundle>) -> Result<Self> {
        let (n_papers, n_reviewers) = (paper_caps.len(), reviewer_caps.len());
        if bundles.len() != n_papers * n_reviewers {
            return Err(Error::DimensionMismatch {
                expected: (n_papers, n_reviewers),
                got: (bundles.len(), 1),
            });
        }
        Ok(FlowNetwork {
            n_papers,
            n_reviewers,
            paper_caps,
            reviewer_caps,
            bundles,
        })
    }

    pub fn n_papers(&self) -> usize {
        self.n_papers
    }

    pub fn n_reviewers(&self) -> usize {
        self.n_reviewers
    }

    pub fn paper_caps(&self) -> &[u64] {
        &self.paper_caps
    }

    pub fn reviewer_caps(&self) -> &[u64] {
        &self.reviewer_caps
    }

    pub fn bundle(&self, p: usize, r: usize) -> &ArcBundle {
        &self.bundles[p * self.n_reviewers + r]
    }

    pub fn bundles(&self) -> &[ArcBundle] {
        &self.bundles
    }
}

/// Builds the piecewise-linear network for a perturbation at precision `w`:
/// `s -> p` with capacity `l_p * w`, `r -> t` with capacity `l_r * w`, and
/// `floor(Q * w)` unit arcs per pair where the i-th costs
/// `S * (f(i/w) - f((i-1)/w))` in fixed point.
pub fn build_pm_network(inst: &ProblemInstance, cap: Cap, f: &Perturbation, w: u64) -> Result<FlowNetwork> {
    if w == 0 {
        return Err(Error::InvalidParameter("precision w must be >= 1".into()));
    }
    let arcs = cap.units_at(w);
    if arcs == 0 {
        return Err(Error::CapTooSmall {
            cap: cap.to_string(),
            w,
        });
    }
    let (np, nr) = inst.dims();
    let wf = w as f64;
    let mut bundles = Vec::with_capacity(np * nr);
    for p in 0..np {
        for r in 0..nr {
            let s = inst.similarity(p, r);
            let mut prev_value = 0.0;
            let mut prev_cost = i64::MAX;
            let mut costs = Vec::with_capacity(arcs as usize);
            for i in 1..=arcs {
                let value = s * f.value(i as f64 / wf, s);
                // rounding noise must not break the nonincreasing order
                let c = fixpoint(value - prev_value).min(prev_cost);
                costs.push(c);
                prev_cost = c;
                prev_value = value;
            }
            bundles.push(ArcBundle::from_costs(costs)?);
        }
    }
    FlowNetwork::new(
        vec![inst.paper_load() as u64 * w; np],
        vec![inst.reviewer_load() as u64 * w; nr],
        bundles,
    )
}

/// Outcome of a max-cost max-flow run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    /// Units routed through each pair bundle, row-major.
    pub pair_units: Vec<u64>,
    pub paper_flow: Vec<u64>,
    pub reviewer_flow: Vec<u64>,
    pub value: u64,
    /// Sum of fixed-point arc costs carried by the flow.
    pub cost: i128,
    pub augmentations: usize,
}

impl FlowResult {
    pub fn units(&self, p: usize, r: usize) -> u64 {
        self.pair_units[p * self.reviewer_flow.len() + r]
    }
}

#[derive(Clone, Copy, Default)]
struct BundleState {
    // index of the run currently being filled and units already in it
    run: usize,
    used_in_run: u64,
    total: u64,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Via {
    None,
    Source,
    Forward(usize),
    Backward(usize),
    Reviewer(usize),
}

const INF: i64 = i64::MAX / 4;

/// Maximum flow of maximum total cost.
///
/// Deterministic: the Dijkstra frontier is scanned in node-index order and
/// ties go to the lowest index.
pub fn max_cost_max_flow(net: &FlowNetwork) -> FlowResult {
    Solver::new(net).run()
}

struct Solver<'a> {
    net: &'a FlowNetwork,
    np: usize,
    nr: usize,
    state: Vec<BundleState>,
    paper_flow: Vec<u64>,
    reviewer_flow: Vec<u64>,
    potential: Vec<i64>,
    dist: Vec<i64>,
    via: Vec<Via>,
    done: Vec<bool>,
}

// node layout: papers [0, np), reviewers [np, np + nr), source, sink
impl<'a> Solver<'a> {
    fn new(net: &'a FlowNetwork) -> Self {
        let (np, nr) = (net.n_papers, net.n_reviewers);
        let n = np + nr + 2;
        Solver {
            net,
            np,
            nr,
            state: vec![BundleState::default(); np * nr],
            paper_flow: vec![0; np],
            reviewer_flow: vec![0; nr],
            potential: vec![0; n],
            dist: vec![INF; n],
            via: vec![Via::None; n],
            done: vec![false; n],
        }
    }

    fn source(&self) -> usize {
        self.np + self.nr
    }

    fn sink(&self) -> usize {
        self.np + self.nr + 1
    }

    // forward residual of a bundle: (capacity, min-cost-form cost)
    fn forward(&self, e: usize) -> Option<(u64, i64)> {
        let st = self.state[e];
        let run = self.net.bundles[e].runs.get(st.run)?;
        Some((run.len - st.used_in_run, -run.cost))
    }

    fn backward(&self, e: usize) -> Option<(u64, i64)> {
        let st = self.state[e];
        let runs = &self.net.bundles[e].runs;
        if st.used_in_run > 0 {
            Some((st.used_in_run, runs[st.run].cost))
        } else if st.run > 0 {
            let r = runs[st.run - 1];
            Some((r.len, r.cost))
        } else {
            None
        }
    }

    fn push_forward(&mut self, e: usize, amount: u64) {
        let len = self.net.bundles[e].runs[self.state[e].run].len;
        let st = &mut self.state[e];
        st.used_in_run += amount;
        st.total += amount;
        debug_assert!(st.used_in_run <= len);
        if st.used_in_run == len {
            st.run += 1;
            st.used_in_run = 0;
        }
    }

    fn push_backward(&mut self, e: usize, amount: u64) {
        let runs = &self.net.bundles[e].runs;
        let st = &mut self.state[e];
        st.total -= amount;
        if st.used_in_run > 0 {
            st.used_in_run -= amount;
        } else {
            st.run -= 1;
            st.used_in_run = runs[st.run].len - amount;
        }
    }

    /// Shortest-path distances on the initial (flow-free) layered graph.
    fn initial_potentials(&mut self) {
        let (np, nr) = (self.np, self.nr);
        let (s, t) = (self.source(), self.sink());
        self.potential.fill(0);
        let mut reviewer_best = vec![INF; nr];
        for p in 0..np {
            if self.net.paper_caps[p] == 0 {
                continue;
            }
            for r in 0..nr {
                if let Some((_, c)) = self.forward(p * nr + r) {
                    reviewer_best[r] = reviewer_best[r].min(c);
                }
            }
        }
        let mut sink_best = INF;
        for r in 0..nr {
            if reviewer_best[r] < INF {
                self.potential[np + r] = reviewer_best[r];
                if self.net.reviewer_caps[r] > 0 {
                    sink_best = sink_best.min(reviewer_best[r]);
                }
            }
        }
        self.potential[s] = 0;
        self.potential[t] = if sink_best < INF { sink_best } else { 0 };
    }

    fn relax(&mut self, u: usize, v: usize, cost: i64, via: Via) {
        let reduced = cost + self.potential[u] - self.potential[v];
        debug_assert!(reduced >= 0, "negative reduced cost {reduced} on {u}->{v}");
        let nd = self.dist[u] + reduced;
        if nd < self.dist[v] {
            self.dist[v] = nd;
            self.via[v] = via;
        }
    }

    /// Dense Dijkstra on reduced costs; returns false if the sink is unreachable.
    fn shortest_path(&mut self) -> bool {
        let (np, nr) = (self.np, self.nr);
        let (s, t) = (self.source(), self.sink());
        let n = np + nr + 2;
        self.dist.fill(INF);
        self.via.fill(Via::None);
        self.done.fill(false);
        self.dist[s] = 0;
        loop {
            let mut u = usize::MAX;
            let mut best = INF;
            for v in 0..n {
                if !self.done[v] && self.dist[v] < best {
                    best = self.dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            self.done[u] = true;
            if u == t {
                break;
            }
            if u == s {
                for p in 0..np {
                    if self.paper_flow[p] < self.net.paper_caps[p] {
                        self.relax(s, p, 0, Via::Source);
                    }
                }
            } else if u < np {
                for r in 0..nr {
                    if let Some((_, c)) = self.forward(u * nr + r) {
                        self.relax(u, np + r, c, Via::Forward(u));
                    }
                }
            } else {
                let r = u - np;
                for p in 0..np {
                    if let Some((_, c)) = self.backward(p * nr + r) {
                        self.relax(u, p, c, Via::Backward(r));
                    }
                }
                if self.reviewer_flow[r] < self.net.reviewer_caps[r] {
                    self.relax(u, t, 0, Via::Reviewer(r));
                }
            }
        }
        if !self.done[t] {
            return false;
        }
        let dt = self.dist[t];
        for v in 0..n {
            self.potential[v] += if self.done[v] { self.dist[v] } else { dt };
        }
        true
    }

    fn augment(&mut self) {
        let (np, nr) = (self.np, self.nr);
        let (s, t) = (self.source(), self.sink());
        // bottleneck
        let mut amount = u64::MAX;
        let mut v = t;
        while v != s {
            match self.via[v] {
                Via::Reviewer(r) => {
                    amount = amount.min(self.net.reviewer_caps[r] - self.reviewer_flow[r]);
                    v = np + r;
                }
                Via::Forward(p) => {
                    let r = v - np;
                    amount = amount.min(self.forward(p * nr + r).map_or(0, |x| x.0));
                    v = p;
                }
                Via::Backward(r) => {
                    let p = v;
                    amount = amount.min(self.backward(p * nr + r).map_or(0, |x| x.0));
                    v = np + r;
                }
                Via::Source => {
                    amount = amount.min(self.net.paper_caps[v] - self.paper_flow[v]);
                    v = s;
                }
                Via::None => unreachable!("broken augmenting path"),
            }
        }
        debug_assert!(amount > 0);
        let mut v = t;
        while v != s {
            match self.via[v] {
                Via::Reviewer(r) => {
                    self.reviewer_flow[r] += amount;
                    v = np + r;
                }
                Via::Forward(p) => {
                    self.push_forward(p * nr + (v - np), amount);
                    v = p;
                }
                Via::Backward(r) => {
                    self.push_backward(v * nr + r, amount);
                    v = np + r;
                }
                Via::Source => {
                    self.paper_flow[v] += amount;
                    v = s;
                }
                Via::None => unreachable!(),
            }
        }
    }

    fn run(mut self) -> FlowResult {
        self.initial_potentials();
        let mut augmentations = 0;
        while self.shortest_path() {
            self.augment();
            augmentations += 1;
        }
        let pair_units: Vec<u64> = self.state.iter().map(|s| s.total).collect();
        let cost = pair_units
            .iter()
            .zip(&self.net.bundles)
            .map(|(&u, b)| b.prefix_cost(u))
            .sum();
        FlowResult {
            value: self.paper_flow.iter().sum(),
            pair_units,
            paper_flow: self.paper_flow,
            reviewer_flow: self.reviewer_flow,
            cost,
            augmentations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fig1, fig1_uniform};
    use crate::perturbation::{make_perturbation, PerturbationSpec};
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn fig1_network_is_uniform() {
        let inst = fig1();
        let f = make_perturbation(PerturbationSpec::Quadratic { beta: 0.25 }).unwrap();
        let net = build_pm_network(&inst, Cap::new(1, 2).unwrap(), &f, 6).unwrap();
        for b in net.bundles() {
            assert_eq!(b.capacity(), 3);
            if b.runs()[0].cost > 0 {
                assert_eq!(b.runs().len(), 3, "strictly concave slices stay distinct");
                assert!(b.runs().windows(2).all(|w| w[0].cost > w[1].cost));
            }
        }
        let flow = max_cost_max_flow(&net);
        assert_eq!(flow.value, 30);
        let uniform = fig1_uniform();
        let (np, nr) = inst.dims();
        for p in 0..np {
            for r in 0..nr {
                assert_eq!(flow.units(p, r), (uniform.get(p, r) * 6.0).round() as u64);
            }
        }
    }

    #[test]
    fn single_pair() {
        let inst = ProblemInstance::new(array![[1.0]], 1, 1).unwrap();
        let net = build_pm_network(&inst, Cap::ONE, &Perturbation::linear(), 2).unwrap();
        let flow = max_cost_max_flow(&net);
        assert_eq!(flow.value, 2);
        assert_eq!(flow.cost, fixpoint(1.0) as i128);
    }

    #[test]
    fn zero_similarity_costs_nothing() {
        let inst = ProblemInstance::new(array![[0.0, 0.0], [0.0, 0.0]], 1, 1).unwrap();
        let f = make_perturbation(PerturbationSpec::Exponential { alpha: 2.0 }).unwrap();
        let flow = max_cost_max_flow(&build_pm_network(&inst, Cap::ONE, &f, 4).unwrap());
        assert_eq!(flow.value, 8);
        assert_eq!(flow.cost, 0);
    }

    #[test]
    fn cap_below_grid_is_rejected() {
        let inst = ProblemInstance::new(array![[1.0, 1.0, 1.0]], 1, 1).unwrap();
        let f = Perturbation::linear();
        assert!(matches!(
            build_pm_network(&inst, Cap::new(1, 3).unwrap(), &f, 2),
            Err(Error::CapTooSmall { .. })
        ));
    }

    #[test]
    fn bundle_rejects_increasing_costs() {
        assert!(ArcBundle::from_costs([3, 5]).is_err());
        let b = ArcBundle::from_costs([5, 5, 3]).unwrap();
        assert_eq!(b.runs().len(), 2);
        assert_eq!(b.prefix_cost(2), 10);
        assert_eq!(b.prefix_cost(3), 13);
    }

    /// Best `(value, cost)` over all integral flows of a 2 x 2 network.
    fn brute_force(net: &FlowNetwork) -> (u64, i128) {
        let caps: Vec<u64> = net.bundles().iter().map(|b| b.capacity()).collect();
        let mut best = (0u64, i128::MIN);
        let mut units = [0u64; 4];
        loop {
            let rows_ok = (0..2).all(|p| units[2 * p] + units[2 * p + 1] <= net.paper_caps()[p]);
            let cols_ok = (0..2).all(|r| units[r] + units[2 + r] <= net.reviewer_caps()[r]);
            if rows_ok && cols_ok {
                let value = units.iter().sum::<u64>();
                let cost = (0..4).map(|e| net.bundles()[e].prefix_cost(units[e])).sum::<i128>();
                if (value, cost) > best {
                    best = (value, cost);
                }
            }
            let mut i = 0;
            loop {
                if i == 4 {
                    return best;
                }
                units[i] += 1;
                if units[i] <= caps[i] {
                    break;
                }
                units[i] = 0;
                i += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            costs in proptest::collection::vec(proptest::collection::vec(-5i64..20, 0..=3), 4),
            paper_caps in proptest::collection::vec(0u64..=4, 2),
            reviewer_caps in proptest::collection::vec(0u64..=4, 2),
        ) {
            let bundles = costs
                .into_iter()
                .map(|mut c| {
                    c.sort_unstable_by(|a, b| b.cmp(a));
                    ArcBundle::from_costs(c).unwrap()
                })
                .collect();
            let net = FlowNetwork::new(paper_caps, reviewer_caps, bundles).unwrap();
            let flow = max_cost_max_flow(&net);
            prop_assert_eq!((flow.value, flow.cost), brute_force(&net));
            let prefix: i128 = (0..4).map(|e| net.bundles()[e].prefix_cost(flow.pair_units[e])).sum();
            prop_assert_eq!(prefix, flow.cost);
            for p in 0..2 {
                prop_assert!(flow.paper_flow[p] <= net.paper_caps()[p]);
            }
        }
    }
}
