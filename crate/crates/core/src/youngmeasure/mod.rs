//! Atomic Young measures on first-order jets `(t, x, v)`.

mod io;
mod kr;
mod measure;
mod structure;

pub use io::{read_measure, write_measure};
pub use kr::{ground_distance, kr_distance, kr_distance_points, KrWeight, WeightedPoints, MAX_KR_ATOMS};
pub use measure::{
    anchoring_residual, closedness_residual, from_map, integrate, laminate, marginal_residual, r_k,
    tightness_profile, AtomicYoungMeasure, JetAtom,
};
pub use structure::{
    disintegrate, jensen_gap, structure_residual, Disintegration, DisintegrationOutcome, Fiber, GRAPH_TOL,
    STRUCTURE_TOL,
};

#[cfg(test)]
mod tests;
