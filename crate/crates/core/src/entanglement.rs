//! Bipartition purity, the potential of multipartite entanglement `H` and its
//! gradient on the unit sphere.
//!
//! The purity of part `A` is `Tr rho_A^2 = ||G||_F^2` with `G = M M^dagger`
//! and `M` the `N_A x N_Abar` reshaped amplitude matrix. `H` averages the
//! purity over every balanced bipartition. Since `pi_A = pi_Abar`, for even
//! `n` only the half of the bipartitions containing qubit 0 is evaluated and
//! each counts twice.

use ndarray::{s, Array2};
use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::partition::{balanced_bipartitions, Bipartition, IndexMap};
use crate::qstate::PureState;
use crate::scalar::Compensated;
use crate::Real;

/// Qubit count from which Gram accumulation switches to compensated sums.
pub const COMPENSATED_FROM: usize = 14;
const PARALLEL_FROM: usize = 10;
const GEMM_FROM: usize = 16;

/// Purities of every balanced bipartition with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PurityProfile<T> {
    pub masks: Vec<u64>,
    pub purities: Vec<T>,
    pub mean: T,
    pub std: T,
    pub min: T,
    pub max: T,
}

impl<T: Real> PurityProfile<T> {
    fn from_parts(masks: Vec<u64>, purities: Vec<T>) -> Self {
        let k = T::of(purities.len() as f64);
        let mean = purities.iter().copied().sum::<T>() / k;
        let var = purities.iter().map(|&p| (p - mean) * (p - mean)).sum::<T>() / k;
        let min = purities.iter().copied().fold(T::infinity(), T::min);
        let max = purities.iter().copied().fold(T::neg_infinity(), T::max);
        Self {
            masks,
            purities,
            mean,
            std: var.sqrt(),
            min,
            max,
        }
    }

    /// `max - min` over the bipartitions.
    pub fn spread(&self) -> T {
        self.max - self.min
    }
}

/// Purity of part `A` of `b`.
pub fn purity<T: Real>(state: &PureState<T>, b: &Bipartition) -> Result<T> {
    if state.n() != b.n() {
        return domain(format!(
            "state has {} qubits, bipartition {}",
            state.n(),
            b.n()
        ));
    }
    // Gram on the smaller side.
    let b = if b.size() * 2 > b.n() { b.complement() } else { *b };
    let map = IndexMap::new(b);
    let mut buf = Gathered::default();
    buf.load(state.amplitudes(), &map);
    Ok(buf.purity(state.n() >= COMPENSATED_FROM))
}

/// `H`: the purity averaged over balanced bipartitions.
pub fn potential<T: Real>(state: &PureState<T>) -> Result<T> {
    Potential::new(state.n())?.value(state)
}

pub fn purity_profile<T: Real>(state: &PureState<T>) -> Result<PurityProfile<T>> {
    Potential::new(state.n())?.profile(state)
}

/// Tangent gradient of `H` as interleaved `(re, im)` reals.
pub fn potential_gradient<T: Real>(state: &PureState<T>) -> Result<Vec<T>> {
    Ok(Potential::new(state.n())?.value_and_gradient(state)?.1)
}

/// Reusable evaluator of `H` for a fixed qubit count; holds the gather
/// tables of the distinct balanced bipartitions.
#[derive(Debug, Clone)]
pub struct Potential {
    n: usize,
    all: Vec<Bipartition>,
    maps: Vec<IndexMap>,
    /// Position in `maps` of every bipartition in `all`.
    slot: Vec<usize>,
    /// Weight of each distinct bipartition in the average.
    weight: f64,
}

impl Potential {
    pub fn new(n: usize) -> Result<Self> {
        crate::qstate::check_qubits(n)?;
        let all = balanced_bipartitions(n)?;
        let even = n % 2 == 0;
        let maps: Vec<IndexMap> = all
            .iter()
            .filter(|b| !even || b.contains(0))
            .map(|b| IndexMap::new(*b))
            .collect();
        let slot = all
            .iter()
            .map(|b| {
                let rep = if even && !b.contains(0) { b.complement() } else { *b };
                maps.iter()
                    .position(|m| m.bipartition == rep)
                    .expect("representative present")
            })
            .collect();
        let weight = 1.0 / maps.len() as f64;
        Ok(Self {
            n,
            all,
            maps,
            slot,
            weight,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All balanced bipartitions, in increasing mask order.
    pub fn bipartitions(&self) -> &[Bipartition] {
        &self.all
    }

    fn check<T: Real>(&self, state: &PureState<T>) -> Result<()> {
        if state.n() != self.n {
            return domain(format!(
                "state has {} qubits, evaluator {}",
                state.n(),
                self.n
            ));
        }
        Ok(())
    }

    fn distinct_purities<T: Real>(&self, state: &PureState<T>) -> Vec<T> {
        let z = state.amplitudes();
        let compensated = self.n >= COMPENSATED_FROM;
        let eval = |buf: &mut Gathered<T>, map: &IndexMap| {
            buf.load(z, map);
            buf.purity(compensated)
        };
        if self.n >= PARALLEL_FROM {
            self.maps
                .par_iter()
                .map_init(Gathered::default, eval)
                .collect()
        } else {
            let mut buf = Gathered::default();
            self.maps.iter().map(|m| eval(&mut buf, m)).collect()
        }
    }

    fn average<T: Real>(&self, values: &[T]) -> T {
        if self.n >= COMPENSATED_FROM {
            let mut acc = Compensated::default();
            values.iter().for_each(|&v| acc.add(v));
            acc.value() * T::of(self.weight)
        } else {
            values.iter().copied().sum::<T>() * T::of(self.weight)
        }
    }

    pub fn value<T: Real>(&self, state: &PureState<T>) -> Result<T> {
        self.check(state)?;
        let values = self.distinct_purities(state);
        Ok(self.average(&values))
    }

    pub fn profile<T: Real>(&self, state: &PureState<T>) -> Result<PurityProfile<T>> {
        self.check(state)?;
        let values = self.distinct_purities(state);
        let purities = self.slot.iter().map(|&s| values[s]).collect();
        Ok(PurityProfile::from_parts(
            self.all.iter().map(Bipartition::mask).collect(),
            purities,
        ))
    }

    /// `H` and its gradient projected onto the tangent space of the sphere,
    /// as interleaved `(re, im)` components.
    pub fn value_and_gradient<T: Real>(&self, state: &PureState<T>) -> Result<(T, Vec<T>)> {
        self.check(state)?;
        let z = state.amplitudes();
        let compensated = self.n >= COMPENSATED_FROM;
        let eval = |buf: &mut Gathered<T>, map: &IndexMap| {
            buf.load(z, map);
            buf.purity_and_gradient(compensated)
        };
        let parts: Vec<(T, Vec<T>, Vec<T>)> = if self.n >= PARALLEL_FROM {
            self.maps
                .par_iter()
                .map_init(Gathered::default, eval)
                .collect()
        } else {
            let mut buf = Gathered::default();
            self.maps.iter().map(|m| eval(&mut buf, m)).collect()
        };

        let scale = T::of(4.0 * self.weight);
        let mut grad = vec![T::zero(); 2 * z.len()];
        let mut values = Vec::with_capacity(parts.len());
        for ((value, gre, gim), map) in parts.into_iter().zip(&self.maps) {
            values.push(value);
            let cols = map.cols.len();
            for (a, &row) in map.rows.iter().enumerate() {
                for (c, &col) in map.cols.iter().enumerate() {
                    let j = row | col;
                    grad[2 * j] += scale * gre[a * cols + c];
                    grad[2 * j + 1] += scale * gim[a * cols + c];
                }
            }
        }
        project_tangent(z, &mut grad);
        Ok((self.average(&values), grad))
    }
}

/// Removes the radial component of `grad` at the unit vector `z`.
pub fn project_tangent<T: Real>(z: &[Complex<T>], grad: &mut [T]) {
    let radial: T = z
        .iter()
        .zip(grad.chunks_exact(2))
        .map(|(z, g)| z.re * g[0] + z.im * g[1])
        .sum();
    for (z, g) in z.iter().zip(grad.chunks_exact_mut(2)) {
        g[0] -= radial * z.re;
        g[1] -= radial * z.im;
    }
}

/// Reshaped amplitudes in split real/imaginary row-major storage.
#[derive(Default)]
struct Gathered<T> {
    re: Vec<T>,
    im: Vec<T>,
    rows: usize,
    cols: usize,
}

impl<T: Real> Gathered<T> {
    fn load(&mut self, z: &[Complex<T>], map: &IndexMap) {
        self.rows = map.rows.len();
        self.cols = map.cols.len();
        self.re.clear();
        self.im.clear();
        for &r in &map.rows {
            for &c in &map.cols {
                let v = z[r | c];
                self.re.push(v.re);
                self.im.push(v.im);
            }
        }
    }

    fn row(&self, a: usize) -> (&[T], &[T]) {
        let s = a * self.cols..(a + 1) * self.cols;
        (&self.re[s.clone()], &self.im[s])
    }

    /// `G_ab = sum_c M_ac conj(M_bc)`.
    #[inline]
    fn gram_entry(&self, a: usize, b: usize, compensated: bool) -> (T, T) {
        let (ar, ai) = self.row(a);
        let (br, bi) = self.row(b);
        if compensated {
            dot_compensated(ar, ai, br, bi)
        } else {
            dot(ar, ai, br, bi)
        }
    }

    fn purity(&self, compensated: bool) -> T {
        if !compensated && self.rows >= GEMM_FROM {
            let (gre, gim) = self.gram_gemm();
            return gre.iter().zip(gim.iter()).map(|(&r, &i)| r * r + i * i).sum();
        }
        let mut diag = Compensated::default();
        let mut off = Compensated::default();
        for a in 0..self.rows {
            let (g, _) = self.gram_entry(a, a, compensated);
            diag.add(g * g);
            for b in a + 1..self.rows {
                let (gr, gi) = self.gram_entry(a, b, compensated);
                off.add(gr * gr + gi * gi);
            }
        }
        diag.value() + (off.value() + off.value())
    }

    /// Purity and the unscaled Wirtinger gradient `G M` in split storage.
    fn purity_and_gradient(&self, compensated: bool) -> (T, Vec<T>, Vec<T>) {
        let (rows, cols) = (self.rows, self.cols);
        if !compensated && rows >= GEMM_FROM {
            return self.gradient_gemm();
        }
        let mut gre = vec![T::zero(); rows * rows];
        let mut gim = vec![T::zero(); rows * rows];
        for a in 0..rows {
            for b in a..rows {
                let (r, i) = self.gram_entry(a, b, compensated);
                gre[a * rows + b] = r;
                gim[a * rows + b] = i;
                gre[b * rows + a] = r;
                gim[b * rows + a] = -i;
            }
        }
        let value = gre
            .iter()
            .zip(&gim)
            .map(|(&r, &i)| r * r + i * i)
            .sum::<T>();

        let mut out_re = vec![T::zero(); rows * cols];
        let mut out_im = vec![T::zero(); rows * cols];
        for a in 0..rows {
            let ore = &mut out_re[a * cols..(a + 1) * cols];
            let oim = &mut out_im[a * cols..(a + 1) * cols];
            for b in 0..rows {
                let (g_re, g_im) = (gre[a * rows + b], gim[a * rows + b]);
                let (mr, mi) = self.row(b);
                for c in 0..cols {
                    ore[c] += g_re * mr[c] - g_im * mi[c];
                    oim[c] += g_re * mi[c] + g_im * mr[c];
                }
            }
        }
        (value, out_re, out_im)
    }
}

impl<T: Real> Gathered<T> {
    /// `[Re M; Im M]` as a `2 N_A x N_Abar` real matrix.
    fn stacked(&self) -> Array2<T> {
        let mut x = Array2::zeros((2 * self.rows, self.cols));
        x.as_slice_mut().unwrap()[..self.re.len()].copy_from_slice(&self.re);
        x.as_slice_mut().unwrap()[self.re.len()..].copy_from_slice(&self.im);
        x
    }

    /// Real and imaginary parts of `G = M M^dagger` via one real product
    /// `P = X X^T` with `X = [Re M; Im M]`.
    fn gram_gemm(&self) -> (Array2<T>, Array2<T>) {
        let r = self.rows;
        let x = self.stacked();
        let p = x.dot(&x.t());
        let (pr, pi) = (p.slice(s![..r, ..]), p.slice(s![r.., ..]));
        let gre = &pr.slice(s![.., ..r]) + &pi.slice(s![.., r..]);
        let gim = &pi.slice(s![.., ..r]) - &pr.slice(s![.., r..]);
        (gre, gim)
    }

    fn gradient_gemm(&self) -> (T, Vec<T>, Vec<T>) {
        let r = self.rows;
        let (gre, gim) = self.gram_gemm();
        let value = gre.iter().zip(gim.iter()).map(|(&a, &b)| a * a + b * b).sum::<T>();
        // [Re G, -Im G; Im G, Re G] [Re M; Im M] = [Re GM; Im GM]
        let mut block = Array2::zeros((2 * r, 2 * r));
        block.slice_mut(s![..r, ..r]).assign(&gre);
        block.slice_mut(s![r.., r..]).assign(&gre);
        block.slice_mut(s![r.., ..r]).assign(&gim);
        block.slice_mut(s![..r, r..]).assign(&gim.mapv(|v| -v));
        let out = block.dot(&self.stacked());
        let split = r * self.cols;
        let mut flat = out.into_raw_vec_and_offset().0;
        let im = flat.split_off(split);
        (value, flat, im)
    }
}

/// `sum_c a_c conj(b_c)` with four independent accumulators.
#[inline]
fn dot<T: Real>(ar: &[T], ai: &[T], br: &[T], bi: &[T]) -> (T, T) {
    let mut re = [T::zero(); 4];
    let mut im = [T::zero(); 4];
    let chunks = ar.len() / 4 * 4;
    for k in (0..chunks).step_by(4) {
        for l in 0..4 {
            let (xr, xi, yr, yi) = (ar[k + l], ai[k + l], br[k + l], bi[k + l]);
            re[l] += xr * yr + xi * yi;
            im[l] += xi * yr - xr * yi;
        }
    }
    for k in chunks..ar.len() {
        re[0] += ar[k] * br[k] + ai[k] * bi[k];
        im[0] += ai[k] * br[k] - ar[k] * bi[k];
    }
    ((re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3]))
}

fn dot_compensated<T: Real>(ar: &[T], ai: &[T], br: &[T], bi: &[T]) -> (T, T) {
    let mut re = Compensated::default();
    let mut im = Compensated::default();
    for k in 0..ar.len() {
        re.add(ar[k] * br[k]);
        re.add(ai[k] * bi[k]);
        im.add(ai[k] * br[k]);
        im.add(-(ar[k] * bi[k]));
    }
    (re.value(), im.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::reshape;
    use crate::qstate::{random_unitary, rng_stream};
    use approx::assert_abs_diff_eq;

    /// Explicit reduced density matrix by partial trace over the complement.
    fn partial_trace_purity(state: &PureState<f64>, b: &Bipartition) -> f64 {
        let m = reshape(state, b).unwrap();
        let (na, nb) = m.dim();
        let mut rho = vec![vec![Complex::new(0.0, 0.0); na]; na];
        for (i, row) in rho.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                for c in 0..nb {
                    *entry += m[[i, c]] * m[[k, c]].conj();
                }
            }
        }
        // Tr rho^2
        let mut tr = Complex::new(0.0, 0.0);
        for i in 0..na {
            for k in 0..na {
                tr += rho[i][k] * rho[k][i];
            }
        }
        tr.re
    }

    /// Term-by-term quartic sum over (j_A, l_A, j_Abar, l_Abar).
    fn quartic_purity(state: &PureState<f64>, b: &Bipartition) -> f64 {
        let m = reshape(state, b).unwrap();
        let (na, nb) = m.dim();
        let mut s = Complex::new(0.0, 0.0);
        for ja in 0..na {
            for la in 0..na {
                for jb in 0..nb {
                    for lb in 0..nb {
                        s += m[[ja, jb]] * m[[la, jb]].conj() * m[[la, lb]] * m[[ja, lb]].conj();
                    }
                }
            }
        }
        s.re
    }

    #[test]
    fn bell_and_product_purities() {
        let bell = PureState::<f64>::bell();
        let a0 = Bipartition::from_qubits(2, &[0]).unwrap();
        assert_abs_diff_eq!(purity(&bell, &a0).unwrap(), 0.5, epsilon = 1e-15);
        for n in 2..=6 {
            for j in [0, (1 << n) - 1, 5 % (1 << n)] {
                let s = PureState::<f64>::basis(n, j).unwrap();
                for b in balanced_bipartitions(n).unwrap() {
                    assert_abs_diff_eq!(purity(&s, &b).unwrap(), 1.0, epsilon = 1e-15);
                }
                assert_abs_diff_eq!(potential(&s).unwrap(), 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn w_state_purity_matches_partial_trace() {
        let w = PureState::<f64>::w(3).unwrap();
        let b = Bipartition::from_qubits(3, &[0]).unwrap();
        let oracle = partial_trace_purity(&w, &b);
        assert_abs_diff_eq!(oracle, 5.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(purity(&w, &b).unwrap(), oracle, epsilon = 1e-14);
    }

    #[test]
    fn ghz_potential() {
        let g3 = PureState::<f64>::ghz(3).unwrap();
        assert_abs_diff_eq!(potential(&g3).unwrap(), 0.5, epsilon = 1e-15);
        let g4 = PureState::<f64>::ghz(4).unwrap();
        let oracle: Vec<f64> = balanced_bipartitions(4)
            .unwrap()
            .iter()
            .map(|b| partial_trace_purity(&g4, b))
            .collect();
        assert!(oracle.iter().all(|&p| (p - 0.5).abs() < 1e-15));
        let profile = purity_profile(&g4).unwrap();
        assert_eq!(profile.purities.len(), 6);
        for (p, o) in profile.purities.iter().zip(&oracle) {
            assert_abs_diff_eq!(*p, *o, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(profile.std, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(potential(&g4).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gram_matches_quartic_sum() {
        for n in 2..=6 {
            for seed in 0..3 {
                let s = PureState::<f64>::haar_sample(n, seed).unwrap();
                for mask in 1..(1u64 << n) - 1 {
                    let b = Bipartition::new(n, mask).unwrap();
                    let p = purity(&s, &b).unwrap();
                    assert_abs_diff_eq!(p, quartic_purity(&s, &b), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn complement_symmetry_and_bounds() {
        let mut rng = rng_stream(77, 0);
        for n in 2..=10 {
            for _ in 0..4 {
                let s = PureState::<f64>::haar_sample_with(n, &mut rng).unwrap();
                for b in balanced_bipartitions(n).unwrap().iter().take(20) {
                    let p = purity(&s, b).unwrap();
                    let q = purity(&s, &b.complement()).unwrap();
                    assert_abs_diff_eq!(p, q, epsilon = 1e-12);
                    assert!(p >= 1.0 / b.dim() as f64 - 1e-10 && p <= 1.0 + 1e-10);
                }
            }
        }
    }

    #[test]
    fn potential_is_average_of_profile() {
        for n in [3, 4, 5, 8, 11] {
            let s = PureState::<f64>::haar_sample(n, 5).unwrap();
            let pr = purity_profile(&s).unwrap();
            let direct: f64 = balanced_bipartitions(n)
                .unwrap()
                .iter()
                .map(|b| purity(&s, b).unwrap())
                .sum::<f64>()
                / pr.purities.len() as f64;
            assert_abs_diff_eq!(pr.mean, direct, epsilon = 1e-14);
            assert_abs_diff_eq!(potential(&s).unwrap(), direct, epsilon = 1e-14);
        }
    }

    #[test]
    fn gemm_path_agrees_with_direct_loop() {
        for n in [6, 7, 8, 9] {
            let s = PureState::<f64>::haar_sample(n, 4).unwrap();
            for b in balanced_bipartitions(n).unwrap().iter().take(6) {
                let b = if b.size() * 2 > n { b.complement() } else { *b };
                let mut g = Gathered::default();
                g.load(s.amplitudes(), &IndexMap::new(b));
                let mut direct = 0.0;
                for a in 0..g.rows {
                    for c in 0..g.rows {
                        let (r, i) = g.gram_entry(a, c, false);
                        direct += r * r + i * i;
                    }
                }
                let (gre, gim) = g.gram_gemm();
                let via_gemm: f64 = gre.iter().zip(gim.iter()).map(|(r, i)| r * r + i * i).sum();
                assert_abs_diff_eq!(via_gemm, direct, epsilon = 1e-14);
                let (v1, re1, im1) = g.gradient_gemm();
                assert_abs_diff_eq!(v1, direct, epsilon = 1e-14);
                // direct G M
                for a in 0..g.rows {
                    for c in 0..g.cols {
                        let mut acc = Complex::new(0.0, 0.0);
                        for k in 0..g.rows {
                            let (r, i) = g.gram_entry(a, k, false);
                            acc += Complex::new(r, i) * Complex::new(g.re[k * g.cols + c], g.im[k * g.cols + c]);
                        }
                        assert_abs_diff_eq!(acc.re, re1[a * g.cols + c], epsilon = 1e-14);
                        assert_abs_diff_eq!(acc.im, im1[a * g.cols + c], epsilon = 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn compensated_path_agrees() {
        let s = PureState::<f64>::haar_sample(8, 1).unwrap();
        for b in balanced_bipartitions(8).unwrap().iter().take(5) {
            let map = IndexMap::new(*b);
            let mut g = Gathered::default();
            g.load(s.amplitudes(), &map);
            assert_abs_diff_eq!(g.purity(true), g.purity(false), epsilon = 1e-15);
        }
    }

    #[test]
    fn local_unitaries_leave_potential_invariant() {
        let mut rng = rng_stream(3, 3);
        for n in 2..=7 {
            let s = PureState::<f64>::haar_sample_with(n, &mut rng).unwrap();
            let h = potential(&s).unwrap();
            let mut t = s.clone();
            for q in 0..n {
                t = t.apply_local_unitary(q, &random_unitary(&mut rng)).unwrap();
            }
            assert_abs_diff_eq!(potential(&t).unwrap(), h, epsilon = 1e-10);
            let pt = purity_profile(&t).unwrap();
            let ps = purity_profile(&s).unwrap();
            for (a, b) in pt.purities.iter().zip(&ps.purities) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn global_phase_leaves_purities_unchanged() {
        let mut rng = rng_stream(8, 0);
        for n in [2, 5, 6] {
            let s = PureState::<f64>::haar_sample_with(n, &mut rng).unwrap();
            let t = s.with_global_phase(1.234);
            let (a, b) = (purity_profile(&s).unwrap(), purity_profile(&t).unwrap());
            for (x, y) in a.purities.iter().zip(&b.purities) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    fn finite_difference_gradient(state: &PureState<f64>, h: f64) -> Vec<f64> {
        let x = state.to_real_vec();
        let n = state.n();
        let f = |v: &[f64]| potential(&PureState::from_real_vec(n, v).unwrap()).unwrap();
        (0..x.len())
            .map(|i| {
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += h;
                down[i] -= h;
                (f(&up) - f(&down)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
        diff / scale
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for n in [2, 3, 4, 5] {
            for seed in 0..3 {
                let s = PureState::<f64>::haar_sample(n, 100 + seed).unwrap();
                let g = potential_gradient(&s).unwrap();
                let fd = finite_difference_gradient(&s, 1e-5);
                assert!(rel_err(&g, &fd) <= 1e-6, "n={n} err={}", rel_err(&g, &fd));
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_bell_state() {
        let g = potential_gradient(&PureState::<f64>::bell()).unwrap();
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm <= 1e-8);
    }

    #[test]
    fn gradient_is_orthogonal_to_phase_and_radial_directions() {
        for n in [3, 4, 6] {
            let s = PureState::<f64>::haar_sample(n, 9).unwrap();
            let g = potential_gradient(&s).unwrap();
            let z = s.amplitudes();
            let phase: f64 = z.iter().zip(g.chunks(2)).map(|(z, g)| -z.im * g[0] + z.re * g[1]).sum();
            let radial: f64 = z.iter().zip(g.chunks(2)).map(|(z, g)| z.re * g[0] + z.im * g[1]).sum();
            assert!(phase.abs() <= 1e-10);
            assert!(radial.abs() <= 1e-12);
        }
    }

    #[test]
    fn single_precision_potential() {
        let s = PureState::<f64>::haar_sample(6, 2).unwrap();
        let h64 = potential(&s).unwrap();
        let h32 = potential(&s.cast::<f32>()).unwrap();
        assert!((h64 - h32 as f64).abs() < 1e-5);
    }

    #[test]
    fn dimension_mismatch() {
        let s = PureState::<f64>::haar_sample(3, 2).unwrap();
        assert!(purity(&s, &Bipartition::new(4, 3).unwrap()).is_err());
        assert!(Potential::new(4).unwrap().value(&s).is_err());
    }
}
