//! Quality/randomness trade-off of each algorithm over a grid of quality
//! fractions, written as CSV to stdout.

use randmatch::frontier::{run_frontier, write_frontier_csv, Algorithm};
use randmatch::instance::{generate_random_discrete, RandomDiscreteSpec};
use randmatch::tuning::{QualityFloor, TuningConfig};

fn main() -> randmatch::error::Result<()> {
    let spec = RandomDiscreteSpec {
        levels: vec![0.25, 0.5, 1.0],
        seed: 8,
    };
    let inst = generate_random_discrete(12, 8, 1, 3, &spec)?;
    let cfg = TuningConfig::new(QualityFloor::Fraction(1.0)).with_delta(0.02);
    let algorithms = [Algorithm::Plra, Algorithm::PmQuadratic, Algorithm::PmExponential];
    let rows = run_frontier(&inst, &[0.8, 0.9, 0.95, 1.0], &algorithms, &cfg)?;
    write_frontier_csv(std::io::stdout(), &rows)
}
