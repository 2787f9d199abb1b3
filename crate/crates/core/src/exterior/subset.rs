use std::fmt;
use std::sync::OnceLock;

use crate::error::{arg, Result};

/// Largest ambient dimension for wedge objects (a map space `E ⊕ F` with
/// `n, m ≤ 8`).
pub const MAX_WEDGE_DIM: usize = 16;

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: usize = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

/// Strictly increasing set of zero-based indices in `0..ambient_dim`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IndexSubset {
    indices: Vec<usize>,
    ambient_dim: usize,
}

impl IndexSubset {
    pub fn new(indices: Vec<usize>, ambient_dim: usize) -> Result<Self> {
        if ambient_dim > MAX_WEDGE_DIM {
            return arg(format!("ambient dimension {ambient_dim} exceeds {MAX_WEDGE_DIM}"));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return arg(format!("indices {indices:?} are not strictly increasing"));
        }
        if indices.iter().any(|&i| i >= ambient_dim) {
            return arg(format!("indices {indices:?} out of range 0..{ambient_dim}"));
        }
        Ok(Self { indices, ambient_dim })
    }

    pub(crate) fn from_mask(mask: u32, ambient_dim: usize) -> Self {
        let indices = (0..ambient_dim).filter(|i| mask >> i & 1 == 1).collect();
        Self { indices, ambient_dim }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mask(&self) -> u32 {
        mask_of(&self.indices)
    }

    pub fn complement(&self) -> IndexSubset {
        let full = (1u32 << self.ambient_dim) - 1;
        Self::from_mask(full & !self.mask(), self.ambient_dim)
    }

    /// Position of this subset in the lexicographic basis of its degree.
    pub fn rank(&self) -> usize {
        rank_of_sorted(&self.indices, self.ambient_dim)
    }
}

impl fmt::Debug for IndexSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}/{}", self.indices, self.ambient_dim)
    }
}

pub(crate) fn mask_of(indices: &[usize]) -> u32 {
    indices.iter().fold(0u32, |m, &i| m | (1 << i))
}

/// Lexicographic rank of a strictly increasing index list among the
/// `C(n, len)` subsets of the same size.
pub(crate) fn rank_of_sorted(indices: &[usize], n: usize) -> usize {
    let l = indices.len();
    let mut rank = 0;
    let mut next = 0;
    for (pos, &c) in indices.iter().enumerate() {
        for j in next..c {
            rank += binomial(n - 1 - j, l - 1 - pos);
        }
        next = c + 1;
    }
    rank
}

pub(crate) fn rank_of_mask(mask: u32, n: usize) -> usize {
    let l = mask.count_ones() as usize;
    let mut rank = 0;
    let mut next = 0;
    let mut pos = 0;
    for c in 0..n {
        if mask >> c & 1 == 1 {
            for j in next..c {
                rank += binomial(n - 1 - j, l - 1 - pos);
            }
            next = c + 1;
            pos += 1;
        }
    }
    rank
}

/// Sign of the shuffle placing the indices of `a` before those of `b`:
/// `e_a ∧ e_b = sign · e_{a ∪ b}`. Zero when the sets intersect.
pub(crate) fn merge_sign(a: u32, b: u32) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    // Count pairs (i in a, j in b) with i > j.
    let mut inversions = 0u32;
    let mut rest = a;
    while rest != 0 {
        let i = rest.trailing_zeros();
        inversions += (b & ((1u32 << i) - 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Cached lexicographic subsets of a given size, stored flat.
pub(crate) struct Combos {
    pub(crate) degree: usize,
    pub(crate) count: usize,
    flat: Vec<usize>,
    masks: Vec<u32>,
}

impl Combos {
    pub(crate) fn get(&self, i: usize) -> &[usize] {
        &self.flat[i * self.degree..(i + 1) * self.degree]
    }

    pub(crate) fn mask(&self, i: usize) -> u32 {
        self.masks[i]
    }
}

fn enumerate(n: usize, l: usize) -> Combos {
    let mut flat = Vec::with_capacity(binomial(n, l) * l);
    let mut masks = Vec::with_capacity(binomial(n, l));
    let mut cur: Vec<usize> = (0..l).collect();
    loop {
        flat.extend_from_slice(&cur);
        masks.push(mask_of(&cur));
        // advance to the next combination in lexicographic order
        let mut i = l;
        loop {
            if i == 0 {
                let count = masks.len();
                return Combos { degree: l, count, flat, masks };
            }
            i -= 1;
            if cur[i] < n - l + i {
                cur[i] += 1;
                for j in i + 1..l {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub(crate) fn combos(n: usize, l: usize) -> &'static Combos {
    const SLOTS: usize = MAX_WEDGE_DIM + 1;
    static TABLE: OnceLock<Vec<OnceLock<Combos>>> = OnceLock::new();
    assert!(n <= MAX_WEDGE_DIM && l <= n, "combos({n}, {l}) out of range");
    let table = TABLE.get_or_init(|| (0..SLOTS * SLOTS).map(|_| OnceLock::new()).collect());
    table[n * SLOTS + l].get_or_init(|| enumerate(n, l))
}

/// Lexicographically ordered index subsets of size `l` in `0..n`.
pub fn basis_subsets(n: usize, l: usize) -> Result<Vec<IndexSubset>> {
    if n > MAX_WEDGE_DIM {
        return arg(format!("dimension {n} exceeds {MAX_WEDGE_DIM}"));
    }
    if l > n {
        return arg(format!("degree {l} exceeds dimension {n}"));
    }
    let c = combos(n, l);
    Ok((0..c.count)
        .map(|i| IndexSubset { indices: c.get(i).to_vec(), ambient_dim: n })
        .collect())
}

/// `σ(I)`: the sign with `e_I ∧ e_{I^c} = σ(I) e_1 ∧ … ∧ e_n`.
pub fn sigma_sign(subset: &IndexSubset) -> f64 {
    merge_sign(subset.mask(), subset.complement().mask())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_of_three_choose_two() {
        let b = basis_subsets(3, 2).unwrap();
        let idx: Vec<&[usize]> = b.iter().map(|s| s.indices()).collect();
        assert_eq!(idx, vec![&[0, 1][..], &[0, 2][..], &[1, 2][..]]);
    }

    #[test]
    fn basis_lengths() {
        assert_eq!(basis_subsets(4, 2).unwrap().len(), 6);
        let empty = basis_subsets(5, 0).unwrap();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].is_empty());
        assert!(basis_subsets(2, 3).is_err());
    }

    #[test]
    fn ranks_match_enumeration() {
        for n in 0..=7 {
            for l in 0..=n {
                for (i, s) in basis_subsets(n, l).unwrap().iter().enumerate() {
                    assert_eq!(s.rank(), i);
                    assert_eq!(rank_of_mask(s.mask(), n), i);
                }
            }
        }
    }

    #[test]
    fn invalid_subsets_rejected() {
        assert!(IndexSubset::new(vec![1, 1], 3).is_err());
        assert!(IndexSubset::new(vec![2, 1], 3).is_err());
        assert!(IndexSubset::new(vec![3], 3).is_err());
    }

    #[test]
    fn sigma_examples() {
        let first_k = IndexSubset::new(vec![0, 1, 2], 5).unwrap();
        assert_eq!(sigma_sign(&first_k), 1.0);
        let second = IndexSubset::new(vec![1], 2).unwrap();
        assert_eq!(sigma_sign(&second), -1.0);
    }

    #[test]
    fn merge_sign_by_brute_force() {
        // Oracle: bubble-sort the concatenated index list and count swaps.
        for a in 0u32..32 {
            for b in 0u32..32 {
                let expected = if a & b != 0 {
                    0.0
                } else {
                    let mut seq: Vec<u32> = (0..5).filter(|i| a >> i & 1 == 1).collect();
                    seq.extend((0..5).filter(|i| b >> i & 1 == 1));
                    let mut swaps = 0;
                    for i in 0..seq.len() {
                        for j in 0..seq.len() - 1 - i {
                            if seq[j] > seq[j + 1] {
                                seq.swap(j, j + 1);
                                swaps += 1;
                            }
                        }
                    }
                    if swaps % 2 == 0 { 1.0 } else { -1.0 }
                };
                assert_eq!(merge_sign(a, b), expected, "a={a:b} b={b:b}");
            }
        }
    }
}
