//! Bipartitions of the qubit register and the index bijection
//! `j <-> (j_A, j_Abar)`.
//!
//! A bipartition is stored as a membership mask: bit `i` of the mask is set
//! when qubit `i` belongs to part `A`. Basis indices use the opposite
//! orientation (qubit 0 is the most significant bit of `j`), so qubit `i`
//! lives at bit `n - 1 - i` of `j`. Sub-indices keep the relative qubit
//! order: the lowest-numbered qubit of a part is the most significant bit of
//! its sub-index.

use ndarray::Array2;
use num_complex::Complex;

use crate::error::{domain, Result};
use crate::qstate::PureState;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    n: usize,
    mask: u64,
}

impl Bipartition {
    pub fn new(n: usize, mask: u64) -> Result<Self> {
        if !(2..64).contains(&n) {
            return domain(format!("bipartitions need 2..64 qubits, got {n}"));
        }
        if mask >> n != 0 {
            return domain(format!("mask {mask:#b} has bits beyond {n} qubits"));
        }
        let k = mask.count_ones() as usize;
        if k == 0 || k == n {
            return domain(format!("mask {mask:#b} leaves a part empty"));
        }
        Ok(Self { n, mask })
    }

    /// Part `A` given as a list of qubit indices.
    pub fn from_qubits(n: usize, qubits: &[usize]) -> Result<Self> {
        let mut mask = 0u64;
        for &q in qubits {
            if q >= n {
                return domain(format!("qubit {q} out of range for {n} qubits"));
            }
            if mask & (1 << q) != 0 {
                return domain(format!("qubit {q} listed twice"));
            }
            mask |= 1 << q;
        }
        Self::new(n, mask)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            mask: !self.mask & ((1u64 << self.n) - 1),
        }
    }

    /// Qubits in `A`, ascending.
    pub fn qubits(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.contains(q)).collect()
    }

    pub fn contains(&self, qubit: usize) -> bool {
        qubit < self.n && self.mask >> qubit & 1 == 1
    }

    /// `n_A`.
    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    /// `N_A = 2^{n_A}`.
    pub fn dim(&self) -> usize {
        1 << self.size()
    }

    /// `N_Abar = 2^{n - n_A}`.
    pub fn complement_dim(&self) -> usize {
        1 << (self.n - self.size())
    }

    pub fn is_balanced(&self) -> bool {
        self.size() == self.n / 2
    }

    /// Basis-index bit position of every qubit in `A`, from the most
    /// significant sub-index bit to the least.
    fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&q| self.contains(q)).map(|q| self.n - 1 - q)
    }

    /// Basis index `j` with `j_A = sub` and every complement bit zero, for all
    /// `sub` in `0..N_A`.
    pub fn scatter_table(&self) -> Vec<usize> {
        let positions: Vec<usize> = self.positions().collect();
        let k = positions.len();
        (0..1usize << k)
            .map(|sub| {
                positions
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| sub >> (k - 1 - i) & 1 == 1)
                    .fold(0usize, |j, (_, &p)| j | 1 << p)
            })
            .collect()
    }
}

/// All bipartitions with `|A| = floor(n/2)`, in increasing mask order.
pub fn balanced_bipartitions(n: usize) -> Result<Vec<Bipartition>> {
    if n < 2 {
        return domain(format!("need at least 2 qubits, got {n}"));
    }
    if n >= 64 {
        return domain(format!("too many qubits for mask enumeration: {n}"));
    }
    let k = n / 2;
    let mut out = Vec::new();
    // Gosper's hack walks the k-subsets in increasing numeric order.
    let mut mask: u64 = (1 << k) - 1;
    while mask >> n == 0 {
        out.push(Bipartition { n, mask });
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok(out)
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Splits basis index `j` into `(j_A, j_Abar)`.
pub fn split_index(j: usize, b: &Bipartition) -> Result<(usize, usize)> {
    if j >> b.n != 0 {
        return domain(format!("index {j} out of range for {} qubits", b.n));
    }
    let (mut ja, mut jb) = (0usize, 0usize);
    for q in 0..b.n {
        let bit = j >> (b.n - 1 - q) & 1;
        if b.contains(q) {
            ja = ja << 1 | bit;
        } else {
            jb = jb << 1 | bit;
        }
    }
    Ok((ja, jb))
}

/// Inverse of [`split_index`].
pub fn merge_index(ja: usize, jb: usize, b: &Bipartition) -> Result<usize> {
    if ja >= b.dim() || jb >= b.complement_dim() {
        return domain(format!("sub-indices ({ja}, {jb}) out of range"));
    }
    let (mut ka, mut kb) = (b.size(), b.n - b.size());
    let mut j = 0usize;
    for q in 0..b.n {
        let bit = if b.contains(q) {
            ka -= 1;
            ja >> ka & 1
        } else {
            kb -= 1;
            jb >> kb & 1
        };
        j = j << 1 | bit;
    }
    Ok(j)
}

/// Gather tables mapping sub-indices to basis indices:
/// `j = rows[j_A] | cols[j_Abar]`.
#[derive(Debug, Clone)]
pub struct IndexMap {
    pub bipartition: Bipartition,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl IndexMap {
    pub fn new(b: Bipartition) -> Self {
        Self {
            bipartition: b,
            rows: b.scatter_table(),
            cols: b.complement().scatter_table(),
        }
    }

    #[inline]
    pub fn index(&self, ja: usize, jb: usize) -> usize {
        self.rows[ja] | self.cols[jb]
    }
}

/// The `N_A x N_Abar` coefficient matrix `M[j_A][j_Abar] = z_j`.
pub fn reshape<T: Real>(state: &PureState<T>, b: &Bipartition) -> Result<Array2<Complex<T>>> {
    if state.n() != b.n {
        return domain(format!(
            "state has {} qubits, bipartition {}",
            state.n(),
            b.n
        ));
    }
    let map = IndexMap::new(*b);
    let z = state.amplitudes();
    Ok(Array2::from_shape_fn((b.dim(), b.complement_dim()), |(r, c)| {
        z[map.index(r, c)]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_counts_and_order() {
        assert_eq!(balanced_bipartitions(4).unwrap().len(), 6);
        let three = balanced_bipartitions(3).unwrap();
        assert_eq!(three.len(), 3);
        assert!(three.iter().all(|b| b.size() == 1));
        let seven = balanced_bipartitions(7).unwrap();
        assert_eq!(seven.len(), 35);
        assert!(seven.iter().all(|b| b.size() == 3));
        assert!(seven.windows(2).all(|w| w[0].mask < w[1].mask));
        for n in 2..=14 {
            let k = n / 2;
            assert_eq!(balanced_bipartitions(n).unwrap().len() as f64, binomial(n, k));
        }
        assert!(balanced_bipartitions(1).is_err());
    }

    #[test]
    fn split_examples() {
        let b = Bipartition::from_qubits(3, &[0]).unwrap();
        assert_eq!(split_index(5, &b).unwrap(), (1, 1));
        let b = Bipartition::from_qubits(4, &[1, 3]).unwrap();
        assert_eq!(b.mask(), 0b1010);
        assert_eq!(split_index(11, &b).unwrap(), (1, 3));
        assert!(split_index(16, &b).is_err());
    }

    #[test]
    fn invalid_bipartitions() {
        assert!(Bipartition::new(3, 0).is_err());
        assert!(Bipartition::new(3, 0b111).is_err());
        assert!(Bipartition::new(3, 0b1000).is_err());
        assert!(Bipartition::from_qubits(3, &[0, 0]).is_err());
        assert!(Bipartition::from_qubits(3, &[3]).is_err());
    }

    #[test]
    fn split_is_a_bijection_up_to_twelve_qubits() {
        for n in 2..=12 {
            for b in balanced_bipartitions(n).unwrap() {
                let map = IndexMap::new(b);
                let mut seen = vec![false; 1 << n];
                for j in 0..1usize << n {
                    let (ja, jb) = split_index(j, &b).unwrap();
                    assert!(ja < b.dim() && jb < b.complement_dim());
                    assert_eq!(merge_index(ja, jb, &b).unwrap(), j);
                    assert_eq!(map.index(ja, jb), j);
                    let flat = ja * b.complement_dim() + jb;
                    assert!(!seen[flat]);
                    seen[flat] = true;
                }
            }
        }
    }

    #[test]
    fn contiguous_reshape_is_row_major() {
        let s = PureState::<f64>::haar_sample(5, 1).unwrap();
        let b = Bipartition::from_qubits(5, &[0, 1]).unwrap();
        let m = reshape(&s, &b).unwrap();
        assert_eq!(m.dim(), (4, 8));
        assert_eq!(m.as_slice().unwrap(), s.amplitudes());
    }

    #[test]
    fn bell_reshape() {
        let bell = PureState::<f64>::bell();
        let b = Bipartition::from_qubits(2, &[1]).unwrap();
        let m = reshape(&bell, &b).unwrap();
        let h = 0.5f64.sqrt();
        assert_eq!(m[[0, 0]].re, h);
        assert_eq!(m[[1, 1]].re, h);
        assert_eq!(m[[0, 1]].norm(), 0.0);
        assert_eq!(m[[1, 0]].norm(), 0.0);
    }

    #[test]
    fn reshape_complement_is_transpose_and_unit_norm() {
        for n in [3, 4, 6] {
            let s = PureState::<f64>::haar_sample(n, n as u64).unwrap();
            for b in balanced_bipartitions(n).unwrap() {
                let m = reshape(&s, &b).unwrap();
                let mt = reshape(&s, &b.complement()).unwrap();
                assert_eq!(m.t(), mt);
                let fro: f64 = m.iter().map(|z| z.norm_sqr()).sum();
                assert!((fro - 1.0).abs() <= 1e-12);
            }
        }
        let s = PureState::<f64>::haar_sample(3, 0).unwrap();
        assert!(reshape(&s, &Bipartition::new(4, 1).unwrap()).is_err());
    }
}
