//! Decompose a fractional assignment into deterministic ones and draw from it.

use randmatch::cap::Cap;
use randmatch::fixtures::fig1;
use randmatch::perturbation::PerturbationSpec;
use randmatch::sampling::{decompose, sample_assignment, sample_indices};
use randmatch::solvers::{solve_pm_flow, SolverConfig};

fn main() -> randmatch::error::Result<()> {
    let inst = fig1();
    let cfg = SolverConfig::new(Cap::new(1, 2)?, PerturbationSpec::Quadratic { beta: 0.25 }).with_w(6);
    let x = solve_pm_flow(&inst, &cfg)?;
    let dist = decompose(&x, &inst)?;
    println!("{} components", dist.len());
    for (a, weight) in &dist.components {
        let rows: Vec<_> = (0..inst.n_papers()).map(|p| a.reviewers_of(p)).collect();
        println!("  {weight:.4}  {rows:?}");
    }

    let drawn = sample_assignment(&dist, 42)?;
    println!("seed 42 draws {:?}", (0..5).map(|p| drawn.reviewers_of(p)).collect::<Vec<_>>());

    let mut counts = vec![0usize; dist.len()];
    for i in sample_indices(&dist, 7, 10_000)? {
        counts[i] += 1;
    }
    for ((_, w), c) in dist.components.iter().zip(&counts) {
        println!("  weight {w:.4}  empirical {:.4}", *c as f64 / 10_000.0);
    }
    Ok(())
}
