//! Search for the extrema of `H`: maximally multipartite entangled states
//! (minimum, `beta -> +inf`) and separable states (maximum, `beta -> -inf`).
//!
//! Each restart runs a Metropolis chain on the sphere while `beta` follows the
//! schedule, keeps the best state it visits, and optionally sharpens it with
//! Riemannian gradient descent. One sweep is one global proposal.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{Potential, PurityProfile};
use crate::error::{domain, Error, Result};
use crate::qstate::{rng_stream, PureState};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Minimize => 1.0,
            Direction::Maximize => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Geometric,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub beta_start: f64,
    pub beta_end: f64,
    pub levels: usize,
    pub sweeps_per_level: usize,
    pub spacing: Spacing,
    pub restarts: usize,
    pub polish: bool,
    pub seed: u64,
    /// Initial proposal scale; adapted toward 35% acceptance throughout.
    pub step_size: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            beta_start: 1.0,
            beta_end: 1e5,
            levels: 60,
            sweeps_per_level: 2000,
            spacing: Spacing::Geometric,
            restarts: 8,
            polish: true,
            seed: 0,
            step_size: 0.1,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_start >= 0.0 && self.beta_end > self.beta_start) || !self.beta_end.is_finite() {
            return domain(format!(
                "need 0 <= beta_start < beta_end, got {} .. {}",
                self.beta_start, self.beta_end
            ));
        }
        if self.spacing == Spacing::Geometric && self.beta_start == 0.0 {
            return domain("geometric spacing needs beta_start > 0");
        }
        if self.levels == 0 || self.sweeps_per_level == 0 {
            return domain("schedule has zero total sweeps");
        }
        if self.restarts == 0 {
            return domain("need at least one restart");
        }
        if !(self.step_size > 0.0) {
            return domain("step size must be positive");
        }
        Ok(())
    }

    /// Inverse temperature of every level.
    pub fn betas(&self) -> Vec<f64> {
        if self.levels == 1 {
            return vec![self.beta_end];
        }
        let last = (self.levels - 1) as f64;
        (0..self.levels)
            .map(|l| {
                let t = l as f64 / last;
                match self.spacing {
                    Spacing::Geometric => self.beta_start * (self.beta_end / self.beta_start).powf(t),
                    Spacing::Linear => self.beta_start + (self.beta_end - self.beta_start) * t,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MmesResult<T> {
    #[serde(skip)]
    pub state: PureState<T>,
    pub n: usize,
    pub direction: Direction,
    pub energy: T,
    pub profile: PurityProfile<T>,
    /// `energy - 1/N_A`.
    pub gap: T,
    /// Restart that produced the best state.
    pub restart: usize,
    /// Sweep at which the restart's chain reached its best state.
    pub sweep: usize,
    pub seed: u64,
}

/// Convergence limits of the gradient polish.
pub const POLISH_GRAD_TOL: f64 = 1e-9;
pub const POLISH_MAX_ITERS: usize = 10_000;
const ARMIJO: f64 = 1e-4;
const ADAPT_GAIN: f64 = 0.02;
const TARGET_ACCEPTANCE: f64 = 0.35;

/// Best-over-restarts annealing in double precision.
pub fn anneal(n: usize, schedule: &AnnealSchedule, direction: Direction) -> Result<MmesResult<f64>> {
    anneal_with::<f64>(n, schedule, direction)
}

pub fn anneal_with<T: Real>(
    n: usize,
    schedule: &AnnealSchedule,
    direction: Direction,
) -> Result<MmesResult<T>> {
    schedule.validate()?;
    let potential = Potential::new(n)?;
    let runs = (0..schedule.restarts)
        .into_par_iter()
        .map(|r| run_restart::<T>(&potential, schedule, direction, r))
        .collect::<Result<Vec<_>>>()?;
    let sign = direction.sign();
    // Lowest signed energy wins; ties keep the lowest restart index.
    let (restart, (state, energy, sweep)) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, cand| {
            if sign * cand.1 .1.as_f64() < sign * best.1 .1.as_f64() {
                cand
            } else {
                best
            }
        })
        .expect("at least one restart");
    let profile = potential.profile(&state)?;
    let floor = T::one() / T::of((1usize << (n / 2)) as f64);
    Ok(MmesResult {
        state,
        n,
        direction,
        energy,
        profile,
        gap: energy - floor,
        restart,
        sweep,
        seed: schedule.seed,
    })
}

fn run_restart<T: Real>(
    potential: &Potential,
    schedule: &AnnealSchedule,
    direction: Direction,
    restart: usize,
) -> Result<(PureState<T>, T, usize)> {
    let n = potential.n();
    let sign = direction.sign();
    let mut rng = rng_stream(schedule.seed, restart as u64);
    let mut state = PureState::<T>::haar_sample_with(n, &mut rng)?;
    let mut energy = checked(potential.value(&state)?)?;
    let mut best = (state.clone(), energy, 0usize);
    let mut log_step = schedule.step_size.ln();
    let (log_min, log_max) = (1e-9f64.ln(), 4f64.ln());
    let mut sweep = 0usize;
    for beta in schedule.betas() {
        let beta = sign * beta;
        for _ in 0..schedule.sweeps_per_level {
            sweep += 1;
            let proposal = state.perturb(T::of(log_step.exp()), &mut rng)?;
            let e_new = checked(potential.value(&proposal)?)?;
            let delta = beta * (e_new - energy).as_f64();
            let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta).exp();
            if accept {
                state = proposal;
                energy = e_new;
                if sign * energy.as_f64() < sign * best.1.as_f64() {
                    best = (state.clone(), energy, sweep);
                }
            }
            let hit = if accept { 1.0 } else { 0.0 };
            log_step = (log_step + ADAPT_GAIN * (hit - TARGET_ACCEPTANCE)).clamp(log_min, log_max);
        }
    }
    if schedule.polish {
        let (polished, e) = polish(potential, &best.0, direction)?;
        if sign * e.as_f64() <= sign * best.1.as_f64() {
            best = (polished, e, best.2);
        }
    }
    Ok(best)
}

fn checked<T: Real>(e: T) -> Result<T> {
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::Numerical(format!("non-finite energy {e}")))
    }
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Riemannian gradient descent on the sphere (on `-H` when maximizing) with
/// Barzilai-Borwein trial steps, Armijo backtracking and retraction by
/// normalization. Stops once the tangent gradient norm drops below
/// [`POLISH_GRAD_TOL`] or after [`POLISH_MAX_ITERS`] iterations.
pub fn polish<T: Real>(
    potential: &Potential,
    start: &PureState<T>,
    direction: Direction,
) -> Result<(PureState<T>, T)> {
    let n = start.n();
    let sign = T::of(direction.sign());
    let mut x = start.to_real_vec();
    let (e0, g0) = potential.value_and_gradient(start)?;
    let mut f = sign * checked(e0)?;
    let mut g: Vec<T> = g0.into_iter().map(|v| sign * v).collect();
    let mut alpha = T::of(0.1) / norm(&g).max(T::of(1e-12));
    let mut prev: Option<(Vec<T>, Vec<T>)> = None;
    let tol = T::of(POLISH_GRAD_TOL);
    for _ in 0..POLISH_MAX_ITERS {
        let gnorm = norm(&g);
        if gnorm < tol {
            break;
        }
        if let Some((px, pg)) = &prev {
            let (mut ss, mut sy) = (T::zero(), T::zero());
            for k in 0..x.len() {
                let s = x[k] - px[k];
                let y = g[k] - pg[k];
                ss += s * s;
                sy += s * y;
            }
            if sy.abs() > T::zero() && ss > T::zero() {
                alpha = ss / sy.abs();
            }
        }
        let g2 = gnorm * gnorm;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<T> = x.iter().zip(&g).map(|(&xi, &gi)| xi - alpha * gi).collect();
            let s = PureState::from_real_vec(n, &trial)?;
            let e = sign * checked(potential.value(&s)?)?;
            if e <= f - T::of(ARMIJO) * alpha * g2 {
                accepted = Some((s, e));
                break;
            }
            alpha *= T::of(0.5);
        }
        let Some((s, e)) = accepted else { break };
        let (_, g_new) = potential.value_and_gradient(&s)?;
        prev = Some((std::mem::replace(&mut x, s.to_real_vec()), std::mem::take(&mut g)));
        g = g_new.into_iter().map(|v| sign * v).collect();
        f = e;
    }
    let state = PureState::from_real_vec(n, &x)?;
    let e = potential.value(&state)?;
    Ok((state, e))
}

/// Independent check of an optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyReport {
    pub n: usize,
    pub energy: f64,
    /// `max - min` purity over balanced bipartitions.
    pub spread: f64,
    /// `energy - 1/N_A`.
    pub gap: f64,
    pub gradient_norm: f64,
    /// Gap below [`PERFECT_GAP`].
    pub perfect: bool,
    pub masks: Vec<u64>,
    pub purities: Vec<f64>,
}

pub const PERFECT_GAP: f64 = 1e-6;

/// Recomputes the purity profile and gradient of a result from scratch.
pub fn certify<T: Real>(result: &MmesResult<T>) -> Result<CertifyReport> {
    certify_state(&result.state)
}

pub fn certify_state<T: Real>(state: &PureState<T>) -> Result<CertifyReport> {
    let n = state.n();
    let potential = Potential::new(n)?;
    let profile = potential.profile(state)?;
    let (_, grad) = potential.value_and_gradient(state)?;
    let gap = profile.mean.as_f64() - 1.0 / (1u64 << (n / 2)) as f64;
    Ok(CertifyReport {
        n,
        energy: profile.mean.as_f64(),
        spread: profile.spread().as_f64(),
        gap,
        gradient_norm: norm(&grad).as_f64(),
        perfect: gap < PERFECT_GAP,
        masks: profile.masks.clone(),
        purities: profile.purities.iter().map(|p| p.as_f64()).collect(),
    })
}
