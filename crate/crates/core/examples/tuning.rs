//! Pick the smallest cap (and perturbation strength) that keeps quality above
//! a fraction of the optimum.

use randmatch::instance::{generate_random_discrete, RandomDiscreteSpec};
use randmatch::tuning::{tune_plra, tune_pm_exponential, tune_pm_quadratic, QualityFloor, TuningConfig};

fn main() -> randmatch::error::Result<()> {
    let spec = RandomDiscreteSpec {
        levels: vec![0.25, 0.5, 1.0],
        seed: 5,
    };
    let inst = generate_random_discrete(16, 10, 2, 4, &spec)?;
    for eta in [0.95, 0.9, 0.8] {
        let cfg = TuningConfig::new(QualityFloor::Fraction(eta)).with_delta(0.02);
        let plra = tune_plra(&inst, &cfg)?;
        let q = tune_pm_quadratic(&inst, &cfg)?;
        let e = tune_pm_exponential(&inst, &cfg)?;
        println!("eta {eta}: floor {:.4}", plra.floor);
        println!("  plra Q={}             quality {:.4}", plra.cap, plra.quality);
        println!("  pm-q Q={} beta={:.4}  quality {:.4}", q.cap, q.param.unwrap(), q.quality);
        println!("  pm-e Q={} alpha={:.4} quality {:.4}", e.cap, e.param.unwrap(), e.quality);
    }
    Ok(())
}
