//! Statistical mechanics of multipartite entanglement for n-qubit pure states.
//!
//! The crate computes bipartition purities and the potential of multipartite
//! entanglement `H` (the purity averaged over balanced bipartitions), samples
//! the canonical ensemble `exp(-beta H)` on the unit sphere by Metropolis,
//! reweights energy samples to other temperatures, estimates cumulants, and
//! searches for maximally multipartite entangled states (MMES) by annealing
//! followed by a Riemannian gradient polish.
//!
//! The state, partition and entanglement kernels are generic over the real
//! scalar type (see [`Real`]); the aliases below fix the common `f64` case.

pub mod canonical;
pub mod cli;
pub mod entanglement;
mod error;
pub mod mmes;
pub mod partition;
pub mod qstate;
mod scalar;
pub mod theory;

pub use error::{Error, Result};
pub use scalar::Real;

pub use canonical::{CanonicalConfig, CumulantEstimate, EnergySamples};
pub use entanglement::PurityProfile;
pub use mmes::{AnnealSchedule, Direction, MmesResult};

pub use partition::Bipartition;
pub use qstate::PureState;
pub use theory::{GaussianModel, Histogram};

/// Complex amplitude over the scalar `T`.
pub type Amplitude<T> = num_complex::Complex<T>;

/// Double-precision pure state.
pub type State = PureState<f64>;
/// Single-precision pure state.
pub type State32 = PureState<f32>;
/// Double-precision purity profile.
pub type Profile = PurityProfile<f64>;
/// Double-precision annealing result.
pub type Mmes = MmesResult<f64>;
