//! The grid-based flow solver approaches the exact perturbed optimum as the
//! precision `w` grows.

use randmatch::cap::Cap;
use randmatch::instance::{generate_random_discrete, RandomDiscreteSpec};
use randmatch::metrics::compute_metrics;
use randmatch::perturbation::{make_perturbation, PerturbationSpec};
use randmatch::solvers::{solve_pm_exact, solve_pm_flow, SolverConfig};

fn main() -> randmatch::error::Result<()> {
    let spec = RandomDiscreteSpec {
        levels: vec![0.2, 0.6, 1.0],
        seed: 3,
    };
    let inst = generate_random_discrete(15, 10, 2, 3, &spec)?;
    let family = PerturbationSpec::Quadratic { beta: 0.5 };
    let f = make_perturbation(family)?;
    let cfg = SolverConfig::new(Cap::new(2, 3)?, family);

    let exact = solve_pm_exact(&inst, &cfg.clone().with_tol(1e-12))?;
    let best = compute_metrics(&exact, &inst, Some(&f))?.pquality.unwrap();
    println!("exact pquality {best:.9}");
    for w in [3, 6, 12, 24, 48, 96] {
        let x = solve_pm_flow(&inst, &cfg.clone().with_w(w))?;
        let pq = compute_metrics(&x, &inst, Some(&f))?.pquality.unwrap();
        println!("w = {w:3}: pquality {pq:.9}  shortfall {:.2e}", best - pq);
    }
    Ok(())
}
