//! Projected Newton on the Lagrangian dual of the perturbed problem.
//!
//! Prices `u_p` (rows, free) and `v_r >= 0` (columns) give each pair the
//! response `x(c) = argmax_{0 <= x <= Q} S f(x) - c x` with `c = u_p + v_r`.
//! Pairs with `S = 0` have a step response; they are smoothed with a
//! quadratic of shrinking curvature `mu` and finally filled by a feasible flow.

use crate::error::Result;
use crate::flow::{max_cost_max_flow, ArcBundle, FlowNetwork};
use crate::instance::ProblemInstance;
use crate::perturbation::Perturbation;

const MAX_NEWTON: usize = 100;
const RESIDUAL_TOL: f64 = 1e-12;
const FILL_UNIT: f64 = (1u64 << 36) as f64;
/// Smoothing curvatures for flat pairs, relative to the largest pair curvature.
const MU_SCHEDULE: [f64; 6] = [1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-13];

struct Dual<'a> {
    f: &'a Perturbation,
    sim: &'a [f64],
    np: usize,
    nr: usize,
    lp: f64,
    lr: f64,
    q: f64,
    mu: f64,
}

struct Eval {
    /// `-dx/dc` per pair
    k: Vec<f64>,
    value: f64,
    grad: Vec<f64>,
}

impl<'a> Dual<'a> {
    fn flat(&self, e: usize) -> bool {
        self.sim[e] <= 0.0
    }

    fn load(&self, e: usize, c: f64) -> f64 {
        if self.flat(e) {
            (-c / self.mu).clamp(0.0, self.q)
        } else {
            self.f.weighted_gradient_inverse(c, self.sim[e]).unwrap_or(0.0).min(self.q)
        }
    }

    /// `(x, -dx/dc, S f(x) - c x)` at price `c`.
    fn response(&self, e: usize, c: f64) -> (f64, f64, f64) {
        let q = self.q;
        let x = self.load(e, c);
        let interior = x > 0.0 && x < q;
        if self.flat(e) {
            let k = if interior { 1.0 / self.mu } else { 0.0 };
            return (x, k, -0.5 * self.mu * x * x - c * x);
        }
        let s = self.sim[e];
        let k = if interior { 1.0 / -self.f.weighted_curvature(x, s) } else { 0.0 };
        (x, k, self.f.weighted(x, s) - c * x)
    }

    fn eval(&self, y: &[f64]) -> Eval {
        let (np, nr) = (self.np, self.nr);
        let mut k = vec![0.0; np * nr];
        let mut value = self.lp * y[..np].iter().sum::<f64>() + self.lr * y[np..].iter().sum::<f64>();
        let mut grad = vec![0.0; np + nr];
        grad[..np].fill(self.lp);
        grad[np..].fill(self.lr);
        for p in 0..np {
            for r in 0..nr {
                let e = p * nr + r;
                let (xe, ke, psi) = self.response(e, y[p] + y[np + r]);
                k[e] = ke;
                value += psi;
                grad[p] -= xe;
                grad[np + r] -= xe;
            }
        }
        Eval { k, value, grad }
    }

    /// Stationarity residual with the `v >= 0` bounds projected out.
    fn residual(&self, y: &[f64], grad: &[f64]) -> f64 {
        let np = self.np;
        let rows = grad[..np].iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let cols = grad[np..]
            .iter()
            .zip(&y[np..])
            .fold(0.0f64, |m, (g, v)| m.max((v - (v - g).max(0.0)).abs()));
        rows.max(cols)
    }

    /// Price `t` with `load(t) = target` for a nonincreasing `load`, by
    /// bracketing around `t0` and bisecting.
    fn root(load: impl Fn(f64) -> f64, target: f64, t0: f64) -> f64 {
        let mut step = 1e-3f64.max(t0.abs() * 1e-3);
        let (mut lo, mut hi) = (t0, t0);
        if load(t0) > target {
            for _ in 0..200 {
                hi += step;
                step *= 2.0;
                if load(hi) <= target {
                    break;
                }
            }
            lo = hi - step / 2.0;
        } else {
            for _ in 0..200 {
                lo -= step;
                step *= 2.0;
                if load(lo) >= target {
                    break;
                }
            }
            hi = lo + step / 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if load(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if (load(lo) - target).abs() < (load(hi) - target).abs() {
            lo
        } else {
            hi
        }
    }

    /// Exact minimization over each row price, then each column price.
    fn sweep(&self, y: &mut [f64]) {
        let (np, nr) = (self.np, self.nr);
        for p in 0..np {
            let (head, v) = y.split_at(np);
            let row = |t: f64| (0..nr).map(|r| self.load(p * nr + r, t + v[r])).sum::<f64>();
            let t = Self::root(row, self.lp, head[p]);
            y[p] = t;
        }
        for r in 0..nr {
            let u = &y[..np];
            let col = |t: f64| (0..np).map(|p| self.load(p * nr + r, u[p] + t)).sum::<f64>();
            y[np + r] = if col(0.0) <= self.lr {
                0.0
            } else {
                Self::root(col, self.lr, y[np + r].max(0.0)).max(0.0)
            };
        }
    }

    fn hess_mul(&self, k: &[f64], fixed: &[bool], lambda: f64, z: &[f64], out: &mut [f64]) {
        let (np, nr) = (self.np, self.nr);
        for (o, zi) in out.iter_mut().zip(z) {
            *o = lambda * zi;
        }
        for p in 0..np {
            for r in 0..nr {
                let ke = k[p * nr + r];
                if ke == 0.0 {
                    continue;
                }
                let zr = if fixed[np + r] { 0.0 } else { z[np + r] };
                let t = ke * (z[p] + zr);
                out[p] += t;
                if !fixed[np + r] {
                    out[np + r] += t;
                }
            }
        }
        for (o, fx) in out.iter_mut().zip(fixed) {
            if *fx {
                *o = 0.0;
            }
        }
    }

    /// Jacobi-preconditioned conjugate gradients for `(H + lambda I) d = b`.
    fn solve(&self, k: &[f64], fixed: &[bool], lambda: f64, b: &[f64]) -> Vec<f64> {
        let (np, nr) = (self.np, self.nr);
        let n = np + nr;
        let mut diag = vec![lambda; n];
        for p in 0..np {
            for r in 0..nr {
                let ke = k[p * nr + r];
                diag[p] += ke;
                diag[np + r] += ke;
            }
        }
        let mut d = vec![0.0; n];
        let mut res: Vec<f64> = b.iter().zip(fixed).map(|(v, f)| if *f { 0.0 } else { *v }).collect();
        let b_norm = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        if b_norm == 0.0 {
            return d;
        }
        let mut z: Vec<f64> = res.iter().zip(&diag).map(|(r, g)| r / g).collect();
        let mut dir = z.clone();
        let mut rz: f64 = res.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ad = vec![0.0; n];
        for _ in 0..(4 * n + 50) {
            self.hess_mul(k, fixed, lambda, &dir, &mut ad);
            let dad: f64 = dir.iter().zip(&ad).map(|(a, b)| a * b).sum();
            if dad <= 0.0 {
                break;
            }
            let alpha = rz / dad;
            for i in 0..n {
                d[i] += alpha * dir[i];
                res[i] -= alpha * ad[i];
            }
            if res.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-14 * b_norm {
                break;
            }
            for i in 0..n {
                z[i] = res[i] / diag[i];
            }
            let rz_next: f64 = res.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                dir[i] = z[i] + beta * dir[i];
            }
        }
        d
    }

    /// Alternates coordinate sweeps with damped Newton steps until the
    /// residual vanishes or no step decreases the dual. Returns the
    /// iteration count.
    fn run(&self, y: &mut Vec<f64>) -> usize {
        let (np, nr) = (self.np, self.nr);
        let mut lambda = 1e-6;
        for it in 0..MAX_NEWTON {
            self.sweep(y);
            let cur = self.eval(y);
            let res = self.residual(y, &cur.grad);
            if res <= RESIDUAL_TOL * self.lp.max(self.lr) {
                return it + 1;
            }
            // reviewers resting on v = 0 with spare load stay there
            let fixed: Vec<bool> = (0..np + nr)
                .map(|i| i >= np && y[i] <= 0.0 && cur.grad[i] > 0.0)
                .collect();
            let neg: Vec<f64> = cur.grad.iter().map(|g| -g).collect();
            let mut accepted = false;
            for _ in 0..30 {
                let d = self.solve(&cur.k, &fixed, lambda, &neg);
                let trial: Vec<f64> = (0..np + nr)
                    .map(|i| if i >= np { (y[i] + d[i]).max(0.0) } else { y[i] + d[i] })
                    .collect();
                let next = self.eval(&trial);
                let predicted: f64 = cur.grad.iter().zip(&trial).zip(y.iter()).map(|((g, t), v)| g * (t - v)).sum();
                let decrease = next.value <= cur.value + 1e-4 * predicted.min(0.0);
                let level = (next.value - cur.value).abs() <= 1e-15 * cur.value.abs().max(1.0);
                if decrease || (level && self.residual(&trial, &next.grad) < res) {
                    *y = trial;
                    lambda = (lambda * 0.1).max(1e-15);
                    accepted = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                return it + 1;
            }
        }
        MAX_NEWTON
    }

    /// Loads of the smooth pairs at prices `y`, with flat pairs routed by
    /// [`fill_flat`].
    fn primal(&self, y: &[f64]) -> Option<Vec<f64>> {
        let (np, nr) = (self.np, self.nr);
        let mut x = vec![0.0; np * nr];
        for p in 0..np {
            for r in 0..nr {
                let e = p * nr + r;
                if !self.flat(e) {
                    x[e] = self.load(e, y[p] + y[np + r]);
                }
            }
        }
        fill_flat(&mut x, self.sim, np, nr, self.lp, self.lr, self.q)?;
        Some(x)
    }
}

/// Runs the dual method on a strictly concave family and hands each
/// candidate assignment (row-major) with its iteration count to `accept`,
/// stopping at the first one it takes. Candidates come from progressively
/// smaller smoothing of the zero-similarity pairs.
pub(crate) fn solve_dual<T>(
    inst: &ProblemInstance,
    q: f64,
    f: &Perturbation,
    sim: &[f64],
    mut accept: impl FnMut(Vec<f64>, usize) -> Result<Option<T>>,
) -> Result<Option<T>> {
    let (np, nr) = inst.dims();
    let max_curv = sim
        .iter()
        .map(|&s| -f.weighted_curvature(0.5 * q, s))
        .fold(0.0f64, f64::max);
    if !(max_curv > 0.0 && max_curv.is_finite()) {
        return Ok(None);
    }
    let has_flat = sim.iter().any(|s| *s <= 0.0);
    let stages = if has_flat { &MU_SCHEDULE[..] } else { &MU_SCHEDULE[..1] };
    let mut y = vec![0.0; np + nr];
    let mut iterations = 0;
    for &rel in stages {
        let dual = Dual {
            f,
            sim,
            np,
            nr,
            lp: inst.paper_load() as f64,
            lr: inst.reviewer_load() as f64,
            q,
            mu: rel * max_curv,
        };
        iterations += dual.run(&mut y);
        if let Some(x) = dual.primal(&y) {
            if let Some(done) = accept(x, iterations)? {
                return Ok(Some(done));
            }
        }
    }
    Ok(None)
}

/// Routes each row's missing load through zero-similarity pairs.
fn fill_flat(x: &mut [f64], sim: &[f64], np: usize, nr: usize, lp: f64, lr: f64, q: f64) -> Option<()> {
    let deficit: Vec<f64> = (0..np).map(|p| lp - x[p * nr..(p + 1) * nr].iter().sum::<f64>()).collect();
    let negligible = 1e-11 * lp.max(1.0);
    if deficit.iter().all(|d| *d <= negligible) {
        return Some(());
    }
    let slack: Vec<f64> = (0..nr).map(|r| lr - (0..np).map(|p| x[p * nr + r]).sum::<f64>()).collect();
    let units = |v: f64| (v.max(0.0) * FILL_UNIT) as u64;
    let demand: Vec<u64> = deficit
        .iter()
        .map(|&d| if d > negligible { (d * FILL_UNIT).round() as u64 } else { 0 })
        .collect();
    let bundles = sim
        .iter()
        .map(|&s| if s <= 0.0 { ArcBundle::uniform(0, units(q)) } else { ArcBundle::default() })
        .collect();
    let net = FlowNetwork::new(demand.clone(), slack.iter().map(|s| units(*s)).collect(), bundles).ok()?;
    let flow = max_cost_max_flow(&net);
    if flow.value < demand.iter().sum::<u64>() {
        return None;
    }
    for (e, u) in flow.pair_units.iter().enumerate() {
        if *u > 0 {
            x[e] = *u as f64 / FILL_UNIT;
        }
    }
    Some(())
}
