//! Two subject areas, five papers, five reviewers. Compares the deterministic
//! optimum, PLRA and perturbed maximization on the same cap.

use randmatch::cap::Cap;
use randmatch::fixtures::fig1;
use randmatch::metrics::compute_metrics;
use randmatch::perturbation::PerturbationSpec;
use randmatch::solvers::{max_quality, solve_plra, solve_pm_flow, SolverConfig};

fn main() -> randmatch::error::Result<()> {
    let inst = fig1();
    println!("max quality M = {}", max_quality(&inst)?);

    let cap = Cap::new(1, 2)?;
    let plra = solve_plra(&inst, cap)?;
    let cfg = SolverConfig::new(cap, PerturbationSpec::Quadratic { beta: 0.25 }).with_w(6);
    let pm = solve_pm_flow(&inst, &cfg)?;

    for (name, x) in [("plra", &plra), ("pm-q", &pm)] {
        let m = compute_metrics(x, &inst, None)?;
        println!(
            "{name:>5}: quality {:.3}  maxprob {:.3}  support {:2}  entropy {:.3}",
            m.quality, m.maxprob, m.support, m.entropy
        );
    }
    println!("pm-q assignment:\n{:.3}", pm.matrix());
    Ok(())
}
