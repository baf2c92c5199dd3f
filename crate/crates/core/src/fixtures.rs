//! Small reference instances and assignments used by examples and tests.

use ndarray::{array, Array2};

use crate::instance::{generate_blockwise, BlockwiseSpec, ProblemInstance};
use crate::metrics::FractionalAssignment;

/// Two subject areas; block A holds papers/reviewers 0..3, block B holds 3..5.
pub fn fig1_spec() -> BlockwiseSpec {
    BlockwiseSpec {
        block_identity: array![[1.0, 0.0], [0.0, 1.0]],
        paper_sizes: vec![3, 2],
        reviewer_sizes: vec![3, 2],
    }
}

/// The 5x5 two-area instance with `l_p = l_r = 1`.
pub fn fig1() -> ProblemInstance {
    generate_blockwise(&fig1_spec(), 1, 1).expect("fixture is valid")
}

/// Uniform within each block: 1/3 in A, 1/2 in B.
pub fn fig1_uniform() -> FractionalAssignment {
    FractionalAssignment::new(Array2::from_shape_fn((5, 5), |(p, r)| match (p < 3, r < 3) {
        (true, true) => 1.0 / 3.0,
        (false, false) => 0.5,
        _ => 0.0,
    }))
}

/// A cap-1/2 vertex: each block-A paper splits over two reviewers in a cycle.
pub fn fig1_plra_pattern() -> FractionalAssignment {
    let mut x = Array2::zeros((5, 5));
    for p in 0..3 {
        x[[p, p]] = 0.5;
        x[[p, (p + 1) % 3]] = 0.5;
    }
    for p in 3..5 {
        for r in 3..5 {
            x[[p, r]] = 0.5;
        }
    }
    FractionalAssignment::new(x)
}

/// The 3x3 similarity matrix on which exponential-perturbation quality is not
/// monotone in `alpha` (with `Q = 1`, `l_p = l_r = 1`).
pub fn example1() -> ProblemInstance {
    ProblemInstance::new(
        array![[0.4, 0.0, 0.6], [0.8, 0.6, 0.0], [0.8, 0.6, 1.0]],
        1,
        1,
    )
    .expect("fixture is valid")
}
