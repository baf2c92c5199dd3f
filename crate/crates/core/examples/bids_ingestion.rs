//! Turn a bid table into similarities and solve on it.

use randmatch::cap::Cap;
use randmatch::io::{read_bids, LevelMap};
use randmatch::perturbation::PerturbationSpec;
use randmatch::solvers::{solve_pm_flow, SolverConfig};

const BIDS: &str = "\
paper,reviewer,bid
p1,alice,eager
p1,bob,willing
p2,bob,eager
p2,carol,eager
p3,alice,willing
p3,carol,in_a_pinch
";

fn main() -> randmatch::error::Result<()> {
    let levels = LevelMap::parse("eager=1,willing=0.5,in_a_pinch=0.25")?;
    let table = read_bids(BIDS.as_bytes(), &levels)?;
    println!("papers {:?}\nreviewers {:?}\n{}", table.paper_ids, table.reviewer_ids, table.sim);

    let inst = table.clone().into_instance(1, 1)?;
    let cfg = SolverConfig::new(Cap::new(2, 3)?, PerturbationSpec::Quadratic { beta: 0.3 });
    let x = solve_pm_flow(&inst, &cfg)?;
    for (p, id) in table.paper_ids.iter().enumerate() {
        let row: Vec<String> = table
            .reviewer_ids
            .iter()
            .enumerate()
            .filter(|(r, _)| x.get(p, *r) > 0.0)
            .map(|(r, name)| format!("{name}:{:.3}", x.get(p, r)))
            .collect();
        println!("{id}: {}", row.join(" "));
    }
    Ok(())
}
