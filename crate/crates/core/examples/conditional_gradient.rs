//! Exact perturbed maximization on a random instance, with and without the
//! dual Newton start.

use std::time::Instant;

use randmatch::cap::Cap;
use randmatch::instance::{generate_random_discrete, RandomDiscreteSpec};
use randmatch::metrics::compute_metrics;
use randmatch::perturbation::{make_perturbation, PerturbationSpec};
use randmatch::solvers::{solve_pm_exact_detailed, SolverConfig};

fn main() -> randmatch::error::Result<()> {
    let spec = RandomDiscreteSpec {
        levels: vec![0.25, 0.5, 1.0],
        seed: 11,
    };
    let inst = generate_random_discrete(20, 12, 2, 4, &spec)?;
    let family = PerturbationSpec::Exponential { alpha: 3.0 };
    let f = make_perturbation(family)?;

    for dual in [true, false] {
        let cfg = SolverConfig::new(Cap::new(1, 2)?, family)
            .with_tol(1e-8)
            .with_dual_start(dual);
        let t = Instant::now();
        let sol = solve_pm_exact_detailed(&inst, &cfg)?;
        let m = compute_metrics(&sol.assignment, &inst, Some(&f))?;
        println!(
            "dual start {dual:5}: pquality {:.9}  gap {:.1e}  iterations {:5}  {:?}",
            m.pquality.unwrap(),
            sol.stats.gap.unwrap_or(0.0),
            sol.stats.iterations,
            t.elapsed()
        );
    }
    Ok(())
}
