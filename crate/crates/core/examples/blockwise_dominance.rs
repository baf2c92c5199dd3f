//! On blockwise instances, a perturbation satisfying the dominance condition
//! spreads each paper uniformly over its own block.

use ndarray::array;
use randmatch::cap::Cap;
use randmatch::instance::{generate_blockwise, BlockwiseSpec};
use randmatch::perturbation::{blockwise_condition, make_perturbation, PerturbationSpec};
use randmatch::solvers::{solve_pm_exact, SolverConfig};

fn main() -> randmatch::error::Result<()> {
    let spec = BlockwiseSpec {
        block_identity: array![[1.0, 0.3], [0.3, 0.8]],
        paper_sizes: vec![4, 3],
        reviewer_sizes: vec![4, 3],
    };
    let inst = generate_blockwise(&spec, 1, 1)?;
    println!("dominance {:.3}", spec.dominance());

    for beta in [0.1, 0.3, 0.5] {
        let family = PerturbationSpec::Quadratic { beta };
        let holds = blockwise_condition(&make_perturbation(family)?, &spec);
        let x = solve_pm_exact(&inst, &SolverConfig::new(Cap::ONE, family))?;
        let m = x.matrix();
        let uniform = (0..7).all(|p| {
            (0..7).all(|r| {
                let same = (p < 4) == (r < 4);
                let want = if !same { 0.0 } else if p < 4 { 0.25 } else { 1.0 / 3.0 };
                (m[[p, r]] - want).abs() < 1e-6
            })
        });
        println!("beta {beta}: condition {holds:5}  within-block uniform {uniform}");
    }
    Ok(())
}
