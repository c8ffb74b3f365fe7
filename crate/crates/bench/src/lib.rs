//! Reference phases shared by the benchmarks.

use hessdecay::{rat, PolyPhase};

pub fn cubic() -> PolyPhase {
    PolyPhase::from_int_terms(2, &[(&[3, 0], 1), (&[0, 3], 1)])
}

pub fn cusp() -> PolyPhase {
    PolyPhase::from_int_terms(2, &[(&[0, 2], 1), (&[2, 1], 2), (&[4, 0], 1)])
}

/// `½|x|² + x₁³/5 − x₁x₂²/10`.
pub fn perturbed() -> PolyPhase {
    PolyPhase::from_terms(
        2,
        vec![(vec![2, 0], rat(1, 2)), (vec![0, 2], rat(1, 2)), (vec![3, 0], rat(1, 5)), (vec![1, 2], rat(-1, 10))],
    )
    .unwrap()
}
