//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::io::Write;
use std::time::Instant;

use ndarray::Array2;
use rand::Rng;
use randmatch::cap::Cap;
use randmatch::fixtures;
use randmatch::frontier::{run_frontier, write_frontier_csv, Algorithm, FrontierRow, DEFAULT_ETA_GRID};
use randmatch::instance::{
    check_feasibility, generate_blockwise, generate_random_discrete, rng_from_seed, BlockwiseSpec, ProblemInstance,
    RandomDiscreteSpec,
};
use randmatch::metrics::{compute_metrics, FractionalAssignment, MetricsReport};
use randmatch::perturbation::{blockwise_condition, level_condition, make_perturbation, PerturbationSpec};
use randmatch::sampling::{decompose, sample_indices};
use randmatch::solvers::{
    solve_balanced_greedy, solve_greedy, solve_plra, solve_pm_exact, solve_pm_exact_detailed, solve_pm_flow,
    SolverConfig,
};
use randmatch::tuning::{find_q_plra, resolve_floor, tune_pm_quadratic, QualityFloor, TuningConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn from_failures(failures: Vec<String>, ok_detail: String) -> Self {
        if failures.is_empty() {
            Outcome { pass: true, detail: ok_detail }
        } else {
            let shown: Vec<_> = failures.iter().take(5).cloned().collect();
            Outcome {
                pass: false,
                detail: format!("{} violation(s): {}", failures.len(), shown.join("; ")),
            }
        }
    }
}

/// Assignments produced along the way, reused by the sampling criterion.
#[derive(Default)]
struct Pool {
    items: Vec<(String, ProblemInstance, FractionalAssignment)>,
}

impl Pool {
    fn add(&mut self, name: impl Into<String>, inst: &ProblemInstance, x: &FractionalAssignment) {
        self.items.push((name.into(), inst.clone(), x.clone()));
    }
}

fn quad(beta: f64) -> PerturbationSpec {
    PerturbationSpec::Quadratic { beta }
}

fn close(a: f64, b: f64, eps: f64) -> bool {
    (a - b).abs() <= eps
}

fn max_abs_diff(x: &FractionalAssignment, y: &FractionalAssignment) -> f64 {
    x.matrix().iter().zip(y.matrix()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn fig1_metrics_ok(m: &MetricsReport) -> Option<String> {
    let want_entropy = 3.0 * 3f64.ln() + 2.0 * 2f64.ln();
    let ok = close(m.quality, 5.0, 1e-6)
        && close(m.maxprob, 0.5, 1e-6)
        && close(m.avgmaxp, 0.4, 1e-6)
        && m.support == 13
        && close(m.entropy, want_entropy, 1e-6)
        && close(m.l2norm, 2f64.sqrt(), 1e-6);
    (!ok).then(|| format!("{m:?}"))
}

fn criterion_1(pool: &mut Pool) -> Outcome {
    let start = Instant::now();
    let inst = fixtures::fig1();
    let cap = Cap::new(1, 2).unwrap();
    let cfg = SolverConfig::new(cap, quad(0.25)).with_w(6).with_tol(1e-12);
    let mut failures = Vec::new();
    let uniform = fixtures::fig1_uniform();
    for (name, x) in [
        ("pm-flow", solve_pm_flow(&inst, &cfg)),
        ("pm-exact", solve_pm_exact(&inst, &cfg)),
    ] {
        match x {
            Ok(x) => {
                let m = compute_metrics(&x, &inst, None).unwrap();
                if let Some(bad) = fig1_metrics_ok(&m) {
                    failures.push(format!("{name} metrics {bad}"));
                }
                if max_abs_diff(&x, &uniform) > 1e-6 {
                    failures.push(format!("{name} not uniform within blocks"));
                }
                pool.add(format!("fig1 {name}"), &inst, &x);
            }
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    match solve_plra(&inst, cap) {
        Ok(x) => {
            let m = compute_metrics(&x, &inst, None).unwrap();
            if !close(m.quality, 5.0, 1e-9) || m.entropy > 5.0 * 2f64.ln() + 1e-6 {
                failures.push(format!("plra metrics {m:?}"));
            }
            pool.add("fig1 plra", &inst, &x);
        }
        Err(e) => failures.push(format!("plra: {e}")),
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 1.0 {
        failures.push(format!("runtime {elapsed:.3}s >= 1s"));
    }
    Outcome::from_failures(failures, format!("flow, exact and PLRA match; {elapsed:.3}s"))
}

/// Random continuous-similarity instance with a feasible cap on the `1/w` grid.
fn random_instance(seed: u64, w: u64) -> (ProblemInstance, Cap) {
    let mut rng = rng_from_seed(seed);
    loop {
        let np = rng.gen_range(3..=30);
        let nr = rng.gen_range(3..=20);
        let lp = rng.gen_range(1..=3.min(nr as u32));
        let lr = ((np as u32 * lp) as f64 / nr as f64).ceil() as u32 + rng.gen_range(0..=2);
        let sim = Array2::from_shape_simple_fn((np, nr), || {
            if rng.gen_bool(0.15) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            }
        });
        let inst = ProblemInstance::new(sim, lp, lr).unwrap();
        let mut ks: Vec<u64> = (1..=w).collect();
        let pick = rng.gen_range(0..ks.len());
        ks.rotate_left(pick);
        for k in ks {
            let cap = Cap::new(k, w).unwrap();
            if check_feasibility(&inst, cap) {
                return (inst, cap);
            }
        }
    }
}

fn random_perturbation(rng: &mut impl Rng) -> PerturbationSpec {
    if rng.gen_bool(0.5) {
        quad(rng.gen_range(0.1..=1.0))
    } else {
        PerturbationSpec::Exponential {
            alpha: rng.gen_range(0.5..5.0),
        }
    }
}

fn criterion_2(pool: &mut Pool) -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst_margin = f64::INFINITY;
    let mut rng = rng_from_seed(2);
    for i in 0..50u64 {
        let w = [2, 5, 10][(i % 3) as usize];
        let (inst, cap) = random_instance(1000 + i, w);
        let spec = random_perturbation(&mut rng);
        let f = make_perturbation(spec).unwrap();
        let cfg = SolverConfig::new(cap, spec).with_w(w).with_tol(1e-9);
        let flow = match solve_pm_flow(&inst, &cfg) {
            Ok(x) => x,
            Err(e) => {
                failures.push(format!("instance {i}: flow {e}"));
                continue;
            }
        };
        let exact = match solve_pm_exact_detailed(&inst, &cfg) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("instance {i}: exact {e}"));
                continue;
            }
        };
        let total: f64 = inst.total_similarity();
        let pq_flow = flow.perturbed_quality(&inst, &f);
        let pq_exact = exact.assignment.perturbed_quality(&inst, &f);
        // OPT <= PQuality(exact) + gap
        let opt_bound = pq_exact + exact.stats.gap.unwrap_or(0.0);
        let rhs = opt_bound - f.value(1.0 / w as f64, 1.0) * total - 1e-6 * total;
        worst_margin = worst_margin.min(pq_flow - rhs);
        if pq_flow < rhs {
            failures.push(format!(
                "instance {i} ({spec}, w={w}): flow {pq_flow} < bound {rhs}"
            ));
        }
        if i % 10 == 0 {
            pool.add(format!("random {i} flow"), &inst, &flow);
            pool.add(format!("random {i} exact"), &inst, &exact.assignment);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        failures.push(format!("runtime {elapsed:.1}s >= 60s"));
    }
    Outcome::from_failures(
        failures,
        format!("50 instances, min slack {worst_margin:.3e}, {elapsed:.1}s"),
    )
}

/// Blockwise instance meeting the dominance theorem's assumptions.
fn blockwise_instance(seed: u64) -> (BlockwiseSpec, ProblemInstance, Cap) {
    let mut rng = rng_from_seed(seed);
    let k = rng.gen_range(2..=3);
    let mut reviewer_sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(2..=6)).collect();
    if reviewer_sizes.iter().all(|r| *r == reviewer_sizes[0]) {
        reviewer_sizes[0] += 1;
    }
    let paper_sizes: Vec<usize> = (0..k).map(|_| rng.gen_range(2..=5)).collect();
    let r_min = *reviewer_sizes.iter().min().unwrap() as u32;
    let lp = rng.gen_range(1..=2.min(r_min));
    let lr = paper_sizes
        .iter()
        .zip(&reviewer_sizes)
        .map(|(p, r)| ((*p as u32 * lp) as f64 / *r as f64).ceil() as u32)
        .max()
        .unwrap()
        + rng.gen_range(0..=1);
    let mut a = Array2::zeros((k, k));
    for i in 0..k {
        let d: f64 = rng.gen_range(2.0..3.0);
        a[[i, i]] = d;
        for j in 0..k {
            if i != j && rng.gen_bool(0.7) {
                a[[i, j]] = rng.gen_range(0.0..d / 2.5);
            }
        }
    }
    let spec = BlockwiseSpec {
        block_identity: a,
        paper_sizes,
        reviewer_sizes,
    };
    let inst = generate_blockwise(&spec, lp, lr).unwrap();
    // smallest cap with Q * r_i >= l_p, optionally loosened
    let cap = Cap::new(lp as u64, r_min as u64).unwrap();
    let cap = if rng.gen_bool(0.5) { cap } else { cap.saturating_add(num_rational::Ratio::new(1, 10)) };
    (spec, inst, cap)
}

fn criterion_3(pool: &mut Pool) -> Outcome {
    let mut failures = Vec::new();
    let mut strict_count = 0;
    let specs = [quad(0.25), quad(0.1), PerturbationSpec::Exponential { alpha: 0.5 }];
    for i in 0..25u64 {
        let (bspec, inst, cap) = blockwise_instance(3000 + i);
        let pspec = specs[(i % 3) as usize];
        let f = make_perturbation(pspec).unwrap();
        if !blockwise_condition(&f, &bspec) {
            failures.push(format!("instance {i}: generator broke f'(0) < Dom f'(1)"));
            continue;
        }
        let plra = solve_plra(&inst, cap).unwrap();
        let pm = solve_pm_exact(&inst, &SolverConfig::new(cap, pspec).with_tol(1e-12)).unwrap();
        let a = compute_metrics(&plra, &inst, None).unwrap();
        let b = compute_metrics(&pm, &inst, None).unwrap();
        let eps = 1e-6;
        let weak = b.quality >= a.quality - eps
            && b.maxprob <= a.maxprob + eps
            && b.avgmaxp <= a.avgmaxp + eps
            && b.support >= a.support
            && b.entropy >= a.entropy - eps
            && b.l2norm <= a.l2norm + eps;
        if !weak {
            failures.push(format!("instance {i}: PM {b:?} vs PLRA {a:?}"));
        }
        let strict = b.avgmaxp < a.avgmaxp - eps || b.l2norm < a.l2norm - eps || b.entropy > a.entropy + eps;
        if strict {
            strict_count += 1;
        } else {
            failures.push(format!("instance {i}: no strict improvement"));
        }
        pool.add(format!("blockwise {i} plra"), &inst, &plra);
        pool.add(format!("blockwise {i} pm"), &inst, &pm);
    }
    Outcome::from_failures(failures, format!("25 instances, strict gain on {strict_count}"))
}

fn criterion_4(pool: &mut Pool) -> Outcome {
    let levels = vec![0.25, 0.5, 1.0];
    let spec = quad(0.1);
    let f = make_perturbation(spec).unwrap();
    let mut failures = Vec::new();
    if !level_condition(&f, &levels) {
        failures.push("derivative condition fails for the chosen perturbation".into());
    }
    let mut found = 0;
    let mut tried = 0;
    let mut worst = 0.0f64;
    let mut seed = 4000u64;
    while found < 25 && tried < 500 {
        tried += 1;
        seed += 1;
        let mut rng = rng_from_seed(seed);
        let np = rng.gen_range(10..=30);
        let nr = rng.gen_range(6..=20);
        let lp = rng.gen_range(1..=2u32);
        let lr = ((2 * np as u32 * lp) as f64 / nr as f64).ceil() as u32 + rng.gen_range(0..=3);
        let inst = generate_random_discrete(np, nr, lp, lr, &RandomDiscreteSpec { levels: levels.clone(), seed }).unwrap();
        let caps = [Cap::new(1, 2).unwrap(), Cap::new(1, 3).unwrap(), Cap::new(2, 5).unwrap(), Cap::ONE];
        let cap = caps[rng.gen_range(0..caps.len())];
        if cap.numer() as u128 * (nr as u128 - 1) < lp as u128 * cap.denom() as u128 {
            continue;
        }
        let (Ok(g), Ok(bg)) = (solve_greedy(&inst, cap), solve_balanced_greedy(&inst, cap)) else { continue };
        let (Some(g), Some(bg)) = (g.into_assignment(), bg.into_assignment()) else { continue };
        found += 1;
        let pm = match solve_pm_exact(&inst, &SolverConfig::new(cap, spec).with_tol(1e-13).with_max_iters(100_000)) {
            Ok(x) => x,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let diff = max_abs_diff(&pm, &bg);
        worst = worst.max(diff);
        if diff > 1e-6 {
            failures.push(format!("seed {seed}: |PM - BG| = {diff:.3e}"));
        }
        let mg = compute_metrics(&g, &inst, None).unwrap();
        let mb = compute_metrics(&bg, &inst, None).unwrap();
        if mb.support < mg.support || mb.entropy < mg.entropy - 1e-9 || mb.l2norm > mg.l2norm + 1e-9 {
            failures.push(format!("seed {seed}: balanced greedy not dominating greedy"));
        }
        if found <= 5 {
            pool.add(format!("discrete {seed} pm"), &inst, &pm);
            pool.add(format!("discrete {seed} bg"), &inst, &bg);
            pool.add(format!("discrete {seed} greedy"), &inst, &g);
        }
    }
    if found < 25 {
        failures.push(format!("only {found} feasible instances in {tried} draws"));
    }
    Outcome::from_failures(failures, format!("{found} instances, max |PM - BG| = {worst:.2e}"))
}

fn criterion_5(pool: &mut Pool) -> Outcome {
    let mut failures = Vec::new();
    let mut components = 0;
    for (name, inst, x) in &pool.items {
        let dist = match decompose(x, inst) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        components += dist.len();
        let err = dist.reconstruction_error(x);
        if err > 1e-6 {
            failures.push(format!("{name}: reconstruction error {err:.3e}"));
        }
        if (dist.total_weight() - 1.0).abs() > 1e-9 {
            failures.push(format!("{name}: weights sum to {}", dist.total_weight()));
        }
        if dist.components.iter().any(|(c, g)| !c.is_feasible(inst) || *g <= 0.0) {
            failures.push(format!("{name}: infeasible component"));
        }
    }
    // empirical frequencies on the figure-1 lottery
    let (_, inst, x) = &pool.items[0];
    let dist = decompose(x, inst).unwrap();
    let n = 100_000;
    let draws = sample_indices(&dist, 5, n).unwrap();
    let mut counts = vec![0usize; dist.len()];
    for d in draws {
        counts[d] += 1;
    }
    for (i, ((_, g), c)) in dist.components.iter().zip(&counts).enumerate() {
        let freq = *c as f64 / n as f64;
        let sigma = (g * (1.0 - g) / n as f64).sqrt();
        if (freq - g).abs() > 3.0 * sigma {
            failures.push(format!("component {i}: frequency {freq} vs weight {g} (3 sigma = {:.2e})", 3.0 * sigma));
        }
    }
    Outcome::from_failures(
        failures,
        format!(
            "{} assignments, {components} components; {} sampled weights within 3 sigma",
            pool.items.len(),
            dist.len()
        ),
    )
}

fn criterion_6(_: &mut Pool) -> Outcome {
    let mut failures = Vec::new();
    let levels = vec![0.25, 0.5, 1.0];
    for i in 0..4u64 {
        let seed = 6000 + i;
        let inst = generate_random_discrete(12, 8, 1, 3, &RandomDiscreteSpec { levels: levels.clone(), seed }).unwrap();
        let cfg = TuningConfig::new(QualityFloor::Fraction(0.95)).with_delta(0.02);
        let floor = resolve_floor(&inst, cfg.floor).unwrap();
        let slack = 1e-9 * floor.max(1.0);
        match tune_pm_quadratic(&inst, &cfg) {
            Ok(t) => {
                let beta = t.param.unwrap();
                let q = |b: f64| {
                    solve_pm_exact(&inst, &SolverConfig::new(t.cap, quad(b)).with_tol(cfg.solver_tol))
                        .unwrap()
                        .quality(&inst)
                };
                if q(beta) < floor - slack {
                    failures.push(format!("seed {seed}: re-solve at beta {beta} below floor"));
                }
                if beta < 1.0 && q((beta + 1e-3).min(1.0)) >= floor - slack {
                    failures.push(format!("seed {seed}: beta {beta} + 1e-3 still meets the floor"));
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
        match find_q_plra(&inst, floor, 1e-3) {
            Ok(cap) => {
                let q_at = |c: Cap| solve_plra(&inst, c).map(|x| x.quality(&inst));
                if q_at(cap).unwrap() < floor - slack {
                    failures.push(format!("seed {seed}: Q_PLRA {cap} below floor"));
                }
                let k = (cap.as_f64() * 1000.0).round() as u64;
                if k > 1 {
                    if let Ok(q) = q_at(Cap::new(k - 1, 1000).unwrap()) {
                        if q >= floor - slack {
                            failures.push(format!("seed {seed}: Q_PLRA - 1e-3 still meets the floor"));
                        }
                    }
                }
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let betas = [0.0, 0.25, 0.5, 0.75, 1.0];
    for i in 0..10u64 {
        let seed = 6100 + i;
        let (inst, cap) = random_instance(seed, 10);
        let qs: Vec<f64> = betas
            .iter()
            .map(|&b| {
                solve_pm_exact(&inst, &SolverConfig::new(cap, quad(b)).with_tol(1e-11))
                    .unwrap()
                    .quality(&inst)
            })
            .collect();
        let tol = 1e-7 * inst.total_similarity().max(1.0);
        if qs.windows(2).any(|w| w[1] > w[0] + tol) {
            failures.push(format!("seed {seed}: quality across beta grid {qs:?}"));
        }
    }
    Outcome::from_failures(failures, "4 tuned instances, 10 beta sweeps".into())
}

fn criterion_7(_: &mut Pool) -> Outcome {
    let inst = fixtures::example1();
    let alphas = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 20.0];
    let qs: Vec<f64> = alphas
        .iter()
        .map(|&alpha| {
            let cfg = SolverConfig::new(Cap::ONE, PerturbationSpec::Exponential { alpha }).with_tol(1e-12);
            solve_pm_exact(&inst, &cfg).unwrap().quality(&inst)
        })
        .collect();
    let eps = 1e-6;
    let (j, _) = qs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let falls = (0..j).any(|i| qs[i] > qs[j] + eps);
    let rises = (j + 1..qs.len()).any(|k| qs[k] > qs[j] + eps);
    let curve: Vec<String> = alphas.iter().zip(&qs).map(|(a, q)| format!("{a}:{q:.5}")).collect();
    Outcome {
        pass: falls && rises,
        detail: format!(
            "quality falls then rises, minimum at alpha = {} [{}]",
            alphas[j],
            curve.join(" ")
        ),
    }
}

fn criterion_8(_: &mut Pool) -> Outcome {
    let mut failures = Vec::new();
    let algorithms = [Algorithm::Plra, Algorithm::PmQuadratic, Algorithm::PmExponential];
    let mut errored = 0;
    for (seed, np, nr, lp, lr) in [(8001u64, 12, 8, 1, 3), (8002, 40, 25, 2, 5)] {
        let inst = generate_random_discrete(
            np,
            nr,
            lp,
            lr,
            &RandomDiscreteSpec {
                levels: vec![0.25, 0.5, 1.0],
                seed,
            },
        )
        .unwrap();
        let cfg = TuningConfig::new(QualityFloor::Fraction(1.0)).with_delta(0.02);
        let rows = run_frontier(&inst, &DEFAULT_ETA_GRID, &algorithms, &cfg).unwrap();
        let mut buf = Vec::new();
        write_frontier_csv(&mut buf, &rows).unwrap();
        let table = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        if lines.len() != 1 + DEFAULT_ETA_GRID.len() * algorithms.len() {
            failures.push(format!("seed {seed}: {} lines", lines.len()));
        }
        if lines.iter().any(|l| l.split(',').count() != 12) {
            failures.push(format!("seed {seed}: malformed row"));
        }
        for &eta in &DEFAULT_ETA_GRID {
            let get = |a: Algorithm| -> Option<&FrontierRow> { rows.iter().find(|r| r.eta == eta && r.algorithm == a) };
            let Some(plra) = get(Algorithm::Plra).and_then(|r| r.metrics.as_ref()) else {
                failures.push(format!("seed {seed} eta {eta}: PLRA row failed"));
                continue;
            };
            for alg in [Algorithm::PmQuadratic, Algorithm::PmExponential] {
                let row = get(alg).unwrap();
                match &row.metrics {
                    Some(m) => {
                        if m.entropy < plra.entropy - 1e-9 || m.support < plra.support {
                            failures.push(format!(
                                "seed {seed} eta {eta} {alg}: entropy {} support {} vs PLRA {} {}",
                                m.entropy, m.support, plra.entropy, plra.support
                            ));
                        }
                        if m.quality < row.tuned.as_ref().unwrap().floor - 1e-6 {
                            failures.push(format!("seed {seed} eta {eta} {alg}: below floor"));
                        }
                    }
                    None => {
                        errored += 1;
                        eprintln!("  note: seed {seed} eta {eta} {alg}: {}", row.error.as_deref().unwrap_or("?"));
                    }
                }
            }
        }
    }
    Outcome::from_failures(
        failures,
        format!("2 synthetic frontiers, {errored} PM cells reported tuning errors"),
    )
}

fn main() {
    let criteria: [(&str, fn(&mut Pool) -> Outcome); 8] = [
        ("figure-1 golden", criterion_1),
        ("flow approximation bound", criterion_2),
        ("blockwise dominance", criterion_3),
        ("balanced greedy oracle", criterion_4),
        ("sampling", criterion_5),
        ("tuning", criterion_6),
        ("exponential non-monotonicity", criterion_7),
        ("synthetic frontier", criterion_8),
    ];
    let mut pool = Pool::default();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run(&mut pool);
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} ({name}): {status} - {} [{:.2}s]",
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().ok();
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
