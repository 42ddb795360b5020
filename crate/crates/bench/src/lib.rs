//! Benchmark fixtures shared by the criterion targets.

use std::sync::Arc;

use nsfrac::{CompactSet, ContractiveMap, FifOperatorStage, InterpolationData, MapSequence, Point};

/// `n` points on a slightly perturbed spiral, deterministic.
pub fn spiral(n: usize, phase: f64) -> CompactSet {
    let pts = (0..n)
        .map(|i| {
            let t = i as f64 * 0.037 + phase;
            let r = 1.0 + 0.002 * i as f64;
            Point::two(r * t.cos(), r * t.sin())
        })
        .collect();
    CompactSet::new(pts).expect("finite spiral")
}

/// `x/2` and `x/2 + 3`, alternating.
pub fn alternating() -> MapSequence {
    MapSequence::periodic(vec![
        ContractiveMap::affine1d(0.5, 0.0).expect("contraction"),
        ContractiveMap::affine1d(0.5, 3.0).expect("contraction"),
    ])
    .expect("shared domain")
}

pub fn hat_stage(min_intervals: usize, scale: f64) -> FifOperatorStage {
    let data = InterpolationData::with_min_intervals(
        vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)],
        None,
        min_intervals,
    )
    .expect("valid data");
    FifOperatorStage::affine(Arc::new(data), scale).expect("valid stage")
}
