//! Small dense determinants.
//!
//! Orders up to three use cofactor expansion; larger ones use LU with
//! partial pivoting on a stack buffer.

use nalgebra::DMatrix;

const MAX_ORDER: usize = 16;

/// Determinant of the `rows × cols` submatrix of `a` (both index lists of
/// equal length `l ≤ 16`). The empty submatrix has determinant one.
pub(crate) fn sub_det(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    debug_assert_eq!(rows.len(), cols.len());
    let at = |i: usize, j: usize| a[(rows[i], cols[j])];
    match rows.len() {
        0 => 1.0,
        1 => at(0, 0),
        2 => at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0),
        3 => {
            at(0, 0) * (at(1, 1) * at(2, 2) - at(1, 2) * at(2, 1))
                - at(0, 1) * (at(1, 0) * at(2, 2) - at(1, 2) * at(2, 0))
                + at(0, 2) * (at(1, 0) * at(2, 1) - at(1, 1) * at(2, 0))
        }
        l => {
            assert!(l <= MAX_ORDER, "determinant order {l} too large");
            let mut buf = [0.0f64; MAX_ORDER * MAX_ORDER];
            for i in 0..l {
                for j in 0..l {
                    buf[i * l + j] = at(i, j);
                }
            }
            lu_det(&mut buf[..l * l], l)
        }
    }
}

/// Determinant of a square matrix.
pub fn determinant(a: &DMatrix<f64>) -> f64 {
    assert!(a.is_square(), "determinant of a non-square matrix");
    let idx: Vec<usize> = (0..a.nrows()).collect();
    sub_det(a, &idx, &idx)
}

fn lu_det(m: &mut [f64], l: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..l {
        let mut piv = k;
        let mut best = m[k * l + k].abs();
        for i in k + 1..l {
            let v = m[i * l + k].abs();
            if v > best {
                best = v;
                piv = i;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..l {
                m.swap(k * l + j, piv * l + j);
            }
            det = -det;
        }
        let d = m[k * l + k];
        det *= d;
        for i in k + 1..l {
            let f = m[i * l + k] / d;
            if f != 0.0 {
                for j in k + 1..l {
                    m[i * l + j] -= f * m[k * l + j];
                }
            }
        }
    }
    det
}
