//! Deterministic reductions.

/// Pairwise (tree) sum over the slice in index order.
///
/// The split points depend only on the length, so the result is bitwise
/// reproducible no matter how the inputs were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Maximum of a slice, `0.0` when empty. NaN entries are ignored.
pub fn max_or_zero(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}
