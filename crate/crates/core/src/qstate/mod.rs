//! Normalized n-qubit pure states.
//!
//! Amplitudes are indexed by the decimal value `j` of the computational basis
//! bit-string `|j_0 j_1 ... j_{n-1}>`, with qubit 0 the most significant bit.

mod io;

use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::Real;

pub use io::{BINARY_MAGIC, BINARY_VERSION, FILE_NORM_TOL};

/// Default upper bound on the qubit count (2^20 amplitudes).
pub const DEFAULT_MAX_QUBITS: usize = 20;

static MAX_QUBITS: AtomicUsize = AtomicUsize::new(DEFAULT_MAX_QUBITS);

/// Current qubit cap enforced by the constructors.
pub fn max_qubits() -> usize {
    MAX_QUBITS.load(Ordering::Relaxed)
}

/// Raises or lowers the qubit cap. Values above 40 are clamped.
pub fn set_max_qubits(n: usize) {
    MAX_QUBITS.store(n.min(40), Ordering::Relaxed);
}

/// Random stream used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Independent stream `stream` derived from a master `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n < 2 {
        return domain(format!("need at least 2 qubits, got {n}"));
    }
    let cap = max_qubits();
    if n > cap {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the configured maximum of {cap}"
        )));
    }
    Ok(())
}

/// Normalized vector of `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<T> {
    n: usize,
    amps: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    /// Wraps amplitudes that must already be normalized within `T::NORM_TOL`.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        Self::with_tolerance(n, amps, T::NORM_TOL)
    }

    /// Accepts amplitudes whose norm deviates by at most `tol`, renormalizing
    /// only when the deviation exceeds the internal tolerance.
    pub(crate) fn with_tolerance(n: usize, amps: Vec<Complex<T>>, tol: f64) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::Validation(format!(
                "expected {} amplitudes for {n} qubits, got {}",
                1usize << n,
                amps.len()
            )));
        }
        let norm2 = norm_sqr(&amps).as_f64();
        if !norm2.is_finite() {
            return Err(Error::Numerical("non-finite amplitude".into()));
        }
        if (norm2 - 1.0).abs() > tol {
            return Err(Error::Validation(format!(
                "squared norm {norm2} deviates from 1 by more than {tol:e}"
            )));
        }
        let mut state = Self { n, amps };
        if (norm2 - 1.0).abs() > T::NORM_TOL {
            state.renormalize();
        }
        Ok(state)
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn normalized(n: usize, mut amps: Vec<Complex<T>>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::Validation(format!(
                "expected {} amplitudes for {n} qubits, got {}",
                1usize << n,
                amps.len()
            )));
        }
        let norm = norm_sqr(&amps).sqrt();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Numerical("cannot normalize a zero or non-finite vector".into()));
        }
        let inv = norm.recip();
        amps.iter_mut().for_each(|z| *z = z.scale(inv));
        Ok(Self { n, amps })
    }

    /// Computational basis state `|j>`.
    pub fn basis(n: usize, j: usize) -> Result<Self> {
        check_qubits(n)?;
        if j >= 1 << n {
            return domain(format!("basis index {j} out of range for {n} qubits"));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        amps[j] = Complex::new(T::one(), T::zero());
        Ok(Self { n, amps })
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`.
    pub fn ghz(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        let h = T::FRAC_1_SQRT_2();
        amps[0] = Complex::new(h, T::zero());
        amps[(1 << n) - 1] = Complex::new(h, T::zero());
        Ok(Self { n, amps })
    }

    /// Bell state `(|00> + |11>)/sqrt(2)`.
    pub fn bell() -> Self {
        Self::ghz(2).expect("two qubits are always allowed")
    }

    /// Equal superposition of the single-excitation basis states.
    pub fn w(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); 1 << n];
        let a = T::one() / T::of(n as f64).sqrt();
        for q in 0..n {
            amps[1 << q] = Complex::new(a, T::zero());
        }
        Ok(Self { n, amps })
    }

    /// Haar-random state from a fixed seed (stream 0).
    pub fn haar_sample(n: usize, seed: u64) -> Result<Self> {
        Self::haar_sample_with(n, &mut rng_stream(seed, 0))
    }

    /// Uniform state on the unit sphere: i.i.d. complex Gaussians, normalized.
    pub fn haar_sample_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_qubits(n)?;
        let amps = (0..1usize << n)
            .map(|_| Complex::new(T::standard_normal(rng), T::standard_normal(rng)))
            .collect();
        Self::normalized(n, amps)
    }

    /// Metropolis proposal: `(z + step*xi)/|z + step*xi|` with `xi` i.i.d. normal.
    pub fn perturb<R: Rng + ?Sized>(&self, step: T, rng: &mut R) -> Result<Self> {
        if !(step > T::zero()) || !step.is_finite() {
            return domain(format!("step must be positive, got {step}"));
        }
        let amps = self
            .amps
            .iter()
            .map(|z| {
                let dx = T::standard_normal(rng);
                let dy = T::standard_normal(rng);
                Complex::new(z.re + step * dx, z.im + step * dy)
            })
            .collect();
        Self::normalized(self.n, amps)
    }

    /// Applies the single-qubit unitary `u` (row-major `[[u00, u01], [u10, u11]]`).
    pub fn apply_local_unitary(&self, qubit: usize, u: &[[Complex<T>; 2]; 2]) -> Result<Self> {
        if qubit >= self.n {
            return domain(format!("qubit {qubit} out of range for {} qubits", self.n));
        }
        check_unitary(u)?;
        let bit = 1usize << (self.n - 1 - qubit);
        let mut amps = self.amps.clone();
        for j in 0..amps.len() {
            if j & bit != 0 {
                continue;
            }
            let a0 = self.amps[j];
            let a1 = self.amps[j | bit];
            amps[j] = u[0][0] * a0 + u[0][1] * a1;
            amps[j | bit] = u[1][0] * a0 + u[1][1] * a1;
        }
        let mut out = Self { n: self.n, amps };
        out.renormalize();
        Ok(out)
    }

    /// Multiplies every amplitude by `exp(i*theta)`.
    pub fn with_global_phase(&self, theta: T) -> Self {
        let phase = Complex::from_polar(T::one(), theta);
        Self {
            n: self.n,
            amps: self.amps.iter().map(|z| z * phase).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Hilbert space dimension `2^n`.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        norm_sqr(&self.amps)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> T {
        self.inner(other).norm_sqr()
    }

    /// Amplitudes as interleaved `(re, im)` reals, length `2^{n+1}`.
    pub fn to_real_vec(&self) -> Vec<T> {
        self.amps.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    /// Inverse of [`PureState::to_real_vec`], renormalizing the input.
    pub fn from_real_vec(n: usize, xs: &[T]) -> Result<Self> {
        if xs.len() != 2 << n {
            return domain(format!("expected {} reals, got {}", 2usize << n, xs.len()));
        }
        let amps = xs.chunks_exact(2).map(|c| Complex::new(c[0], c[1])).collect();
        Self::normalized(n, amps)
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> PureState<U> {
        let amps = self
            .amps
            .iter()
            .map(|z| Complex::new(U::of(z.re.as_f64()), U::of(z.im.as_f64())))
            .collect();
        let mut out = PureState { n: self.n, amps };
        out.renormalize();
        out
    }

    fn renormalize(&mut self) {
        let inv = norm_sqr(&self.amps).sqrt().recip();
        self.amps.iter_mut().for_each(|z| *z = z.scale(inv));
    }
}

fn norm_sqr<T: Real>(amps: &[Complex<T>]) -> T {
    amps.iter().map(|z| z.norm_sqr()).sum()
}

fn check_unitary<T: Real>(u: &[[Complex<T>; 2]; 2]) -> Result<()> {
    // u^dagger u = 1
    let mut err = 0.0f64;
    for r in 0..2 {
        for c in 0..2 {
            let s = u[0][r].conj() * u[0][c] + u[1][r].conj() * u[1][c];
            let target = if r == c { 1.0 } else { 0.0 };
            err = err.max((s.re.as_f64() - target).abs()).max(s.im.as_f64().abs());
        }
    }
    if !(err <= 1e-10) {
        return Err(Error::Validation(format!(
            "matrix is not unitary (max deviation {err:e})"
        )));
    }
    Ok(())
}

/// Pauli-X as a local unitary.
pub fn pauli_x<T: Real>() -> [[Complex<T>; 2]; 2] {
    let (o, l) = (Complex::new(T::zero(), T::zero()), Complex::new(T::one(), T::zero()));
    [[o, l], [l, o]]
}

/// Haar-random 2x2 unitary (QR of a complex Ginibre matrix with phase fix).
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R) -> [[Complex<T>; 2]; 2] {
    let mut g = || Complex::new(T::standard_normal(rng), T::standard_normal(rng));
    let (a, b, c, d) = (g(), g(), g(), g());
    // Gram-Schmidt on the columns (a, c) and (b, d).
    let n1 = (a.norm_sqr() + c.norm_sqr()).sqrt();
    let (e0, e1) = (a.unscale(n1), c.unscale(n1));
    let proj = e0.conj() * b + e1.conj() * d;
    let (f0, f1) = (b - e0 * proj, d - e1 * proj);
    let n2 = (f0.norm_sqr() + f1.norm_sqr()).sqrt();
    [[e0, f0.unscale(n2)], [e1, f1.unscale(n2)]]
}
