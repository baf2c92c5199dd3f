//! Quality under exponential perturbation need not be monotone in `alpha`.

use randmatch::cap::Cap;
use randmatch::fixtures::example1;
use randmatch::metrics::compute_metrics;
use randmatch::perturbation::PerturbationSpec;
use randmatch::solvers::{solve_pm_exact, SolverConfig};

fn main() -> randmatch::error::Result<()> {
    let inst = example1();
    for alpha in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 16.0, 32.0] {
        let cfg = SolverConfig::new(Cap::ONE, PerturbationSpec::Exponential { alpha }).with_tol(1e-12);
        let x = solve_pm_exact(&inst, &cfg)?;
        let q = compute_metrics(&x, &inst, None)?.quality;
        println!("alpha {alpha:5.1}: quality {q:.6}");
    }
    Ok(())
}
