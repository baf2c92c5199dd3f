//! Greedy constructions ignore reviewer loads and report when they overload
//! someone.

use ndarray::array;
use randmatch::cap::Cap;
use randmatch::instance::ProblemInstance;
use randmatch::solvers::{solve_balanced_greedy, solve_greedy, GreedyOutcome};

fn show(name: &str, out: GreedyOutcome) {
    match out {
        GreedyOutcome::Feasible(x) => println!("{name}: feasible\n{:.3}", x.matrix()),
        GreedyOutcome::Infeasible(m) => {
            println!("{name}: reviewer {} carries {:.3} > {}", m.reviewer, m.load, m.limit)
        }
    }
}

fn main() -> randmatch::error::Result<()> {
    let inst = ProblemInstance::new(
        array![[1.0, 1.0, 1.0, 0.2], [1.0, 1.0, 1.0, 0.2], [0.5, 0.5, 0.2, 1.0]],
        1,
        1,
    )?;
    let cap = Cap::new(1, 2)?;
    show("greedy", solve_greedy(&inst, cap)?);
    show("balanced", solve_balanced_greedy(&inst, cap)?);
    Ok(())
}
