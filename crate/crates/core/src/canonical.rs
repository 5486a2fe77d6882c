//! Metropolis sampling of the canonical ensemble `exp(-beta H) dmu` on the
//! unit sphere, importance reweighting to other temperatures, temperature
//! scans and cumulant estimation.
//!
//! Chains are seeded from `(seed, stream)` pairs so results do not depend on
//! how many threads execute them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::Potential;
use crate::error::{domain, Error, Result};
use crate::qstate::{rng_stream, PureState};
use crate::theory::Histogram;
use crate::Real;

/// Target acceptance of the burn-in step-size adaptation.
pub const DEFAULT_TARGET_ACCEPTANCE: f64 = 0.35;
/// Reweighting refuses to proceed below this effective sample size.
pub const MIN_REWEIGHT_ESS: f64 = 10.0;
const LOW_ACCEPTANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalConfig {
    pub beta: f64,
    /// Total Metropolis steps per chain, burn-in included.
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub step_size: f64,
    /// Target acceptance for burn-in adaptation; `None` keeps `step_size` fixed.
    pub adapt: Option<f64>,
    pub seed: u64,
    pub chains: usize,
}

impl Default for CanonicalConfig {
    fn default() -> Self {
        Self {
            beta: 0.0,
            steps: 110_000,
            burn_in: 10_000,
            thin: 10,
            step_size: 0.05,
            adapt: Some(DEFAULT_TARGET_ACCEPTANCE),
            seed: 0,
            chains: 1,
        }
    }
}

impl CanonicalConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_finite() {
            return domain(format!("beta must be finite, got {}", self.beta));
        }
        if self.steps <= self.burn_in {
            return domain(format!(
                "steps ({}) must exceed burn-in ({})",
                self.steps, self.burn_in
            ));
        }
        if self.thin == 0 {
            return domain("thin must be at least 1");
        }
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return domain(format!("step size must be positive, got {}", self.step_size));
        }
        if let Some(t) = self.adapt {
            if !(t > 0.0 && t < 1.0) {
                return domain(format!("target acceptance must lie in (0, 1), got {t}"));
            }
        }
        if self.chains == 0 {
            return domain("need at least one chain");
        }
        Ok(())
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Self { beta, ..self }
    }
}

/// Provenance of one recorded chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
    pub chain: u64,
    /// Metropolis step index of the first record.
    pub first_step: usize,
    pub thin: usize,
    /// Proposal scale used during the recorded phase.
    pub step_size: f64,
    /// Acceptance fell below 1% after adaptation.
    pub low_acceptance: bool,
}

/// Energies recorded along a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySamples {
    pub energies: Vec<f64>,
    /// Acceptance rate over the recorded phase.
    pub acceptance: f64,
    pub meta: ChainMeta,
}

impl EnergySamples {
    /// Samples that did not come from a chain (e.g. read back from CSV).
    pub fn from_values(energies: Vec<f64>, beta: f64, n: usize) -> Self {
        Self {
            energies,
            acceptance: 1.0,
            meta: ChainMeta {
                beta,
                n,
                seed: 0,
                chain: 0,
                first_step: 0,
                thin: 1,
                step_size: 0.0,
                low_acceptance: false,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Metropolis step at which record `k` was taken.
    pub fn step_of(&self, k: usize) -> usize {
        self.meta.first_step + k * self.meta.thin
    }

    /// Concatenates chains at a common `beta`.
    pub fn concat(chains: &[EnergySamples]) -> Result<Self> {
        let first = chains.first().ok_or_else(|| Error::Domain("no chains".into()))?;
        if chains.iter().any(|c| c.meta.beta != first.meta.beta) {
            return domain("chains sampled at different beta");
        }
        let total: usize = chains.iter().map(|c| c.len()).sum();
        let acceptance =
            chains.iter().map(|c| c.acceptance * c.len() as f64).sum::<f64>() / total.max(1) as f64;
        Ok(Self {
            energies: chains.iter().flat_map(|c| c.energies.iter().copied()).collect(),
            acceptance,
            meta: ChainMeta {
                low_acceptance: chains.iter().any(|c| c.meta.low_acceptance),
                ..first.meta
            },
        })
    }

    pub fn summary(&self) -> ChainSummary {
        let (mean, se, tau) = batch_means(&self.energies);
        ChainSummary {
            beta: self.meta.beta,
            n: self.meta.n,
            samples: self.len(),
            mean,
            se,
            ess: self.len() as f64 / tau,
            acceptance: self.acceptance,
        }
    }

    /// CSV with header `step,E`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,E\n");
        for (k, e) in self.energies.iter().enumerate() {
            out.push_str(&format!("{},{e}\n", self.step_of(k)));
        }
        out
    }

    /// Parses the `step,E` CSV produced by [`EnergySamples::to_csv`].
    pub fn from_csv(text: &str, beta: f64, n: usize) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "step,E" => {}
            other => {
                return Err(Error::Format(format!(
                    "expected header 'step,E', got {other:?}"
                )))
            }
        }
        let mut energies = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 2 {
                return Err(Error::Format(format!("line {}: expected 2 columns", i + 2)));
            }
            let e: f64 = cols[1]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad energy {:?}", i + 2, cols[1])))?;
            energies.push(e);
        }
        Ok(Self::from_values(energies, beta, n))
    }
}

/// JSON summary of a chain or pooled chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub beta: f64,
    pub n: usize,
    pub samples: usize,
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    pub acceptance: f64,
}

/// Mean, batch-means standard error and integrated autocorrelation time
/// estimate (`>= 1`), with `floor(sqrt(len))` batches.
pub fn batch_means(xs: &[f64]) -> (f64, f64, f64) {
    let len = xs.len();
    if len == 0 {
        return (f64::NAN, f64::NAN, 1.0);
    }
    let mean = xs.iter().sum::<f64>() / len as f64;
    if len < 4 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len.max(2) - 1) as f64;
        return (mean, (var / len as f64).sqrt(), 1.0);
    }
    let batches = (len as f64).sqrt().floor() as usize;
    let size = len / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| xs[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let bm = means.iter().sum::<f64>() / batches as f64;
    let var_b = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (len - 1) as f64;
    let tau = if var > 0.0 { (size as f64 * var_b / var).max(1.0) } else { 1.0 };
    (mean, (tau * var / len as f64).sqrt(), tau)
}

/// Runs chain `chain` of `config` with scalar type `T`.
pub fn run_chain<T: Real>(n: usize, config: &CanonicalConfig, chain: u64) -> Result<EnergySamples> {
    config.validate()?;
    let potential = Potential::new(n)?;
    let mut rng = rng_stream(config.seed, chain);
    let mut state = PureState::<T>::haar_sample_with(n, &mut rng)?;
    let mut energy = potential.value(&state)?.as_f64();
    let beta = config.beta;
    let mut log_step = config.step_size.ln();
    let (log_min, log_max) = (1e-9f64.ln(), 4f64.ln());

    let mut energies = Vec::with_capacity((config.steps - config.burn_in) / config.thin + 1);
    let mut accepted = 0usize;
    for step in 0..config.steps {
        let proposal = state.perturb(T::of(log_step.exp()), &mut rng)?;
        let e_new = potential.value(&proposal)?.as_f64();
        if !e_new.is_finite() {
            return Err(Error::Numerical(format!("energy {e_new} at step {step}")));
        }
        let delta = beta * (e_new - energy);
        let accept = delta <= 0.0 || rng.gen::<f64>() < (-delta).exp();
        if accept {
            state = proposal;
            energy = e_new;
        }
        if step < config.burn_in {
            if let Some(target) = config.adapt {
                let gain = 1.0 / (step as f64 + 1.0).powf(0.6);
                let hit = if accept { 1.0 } else { 0.0 };
                log_step = (log_step + gain * (hit - target)).clamp(log_min, log_max);
            }
        } else {
            accepted += accept as usize;
            if (step - config.burn_in) % config.thin == 0 {
                energies.push(energy);
            }
        }
    }
    let acceptance = accepted as f64 / (config.steps - config.burn_in) as f64;
    Ok(EnergySamples {
        energies,
        acceptance,
        meta: ChainMeta {
            beta,
            n,
            seed: config.seed,
            chain,
            first_step: config.burn_in,
            thin: config.thin,
            step_size: log_step.exp(),
            low_acceptance: acceptance < LOW_ACCEPTANCE,
        },
    })
}

/// All `config.chains` chains (streams `0..chains`) in double precision.
pub fn metropolis_chain(n: usize, config: &CanonicalConfig) -> Result<Vec<EnergySamples>> {
    config.validate()?;
    (0..config.chains as u64)
        .into_par_iter()
        .map(|c| run_chain::<f64>(n, config, c))
        .collect()
}

/// Independent exact draws at `beta = 0`: energies of `count` Haar states.
/// Draw `i` uses stream `i` of `seed`.
pub fn haar_energy_samples(n: usize, count: usize, seed: u64) -> Result<EnergySamples> {
    if count == 0 {
        return domain("need at least one sample");
    }
    let potential = Potential::new(n)?;
    let energies = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let s = PureState::<f64>::haar_sample_with(n, &mut rng_stream(seed, i))?;
            potential.value(&s)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut out = EnergySamples::from_values(energies, 0.0, n);
    out.meta.seed = seed;
    Ok(out)
}

/// Mean and batch-means SE over several chains of equal weight.
pub fn pooled_mean(chains: &[EnergySamples]) -> Result<(f64, f64)> {
    if chains.is_empty() || chains.iter().any(EnergySamples::is_empty) {
        return domain("no samples");
    }
    let k = chains.len() as f64;
    let stats: Vec<(f64, f64, f64)> = chains.iter().map(|c| batch_means(&c.energies)).collect();
    let mean = stats.iter().map(|s| s.0).sum::<f64>() / k;
    let se = stats.iter().map(|s| s.1 * s.1).sum::<f64>().sqrt() / k;
    Ok((mean, se))
}

#[derive(Debug, Clone, Serialize)]
pub struct Reweighted {
    pub beta0: f64,
    pub beta: f64,
    pub mean: f64,
    pub se: f64,
    pub ess: f64,
    /// Normalized importance weights, one per sample.
    #[serde(skip)]
    pub weights: Vec<f64>,
    pub histogram: Histogram,
}

/// Normalized weights `w_i ~ exp(-delta_beta E_i)`.
pub fn importance_weights(energies: &[f64], delta_beta: f64) -> Vec<f64> {
    let shift = energies
        .iter()
        .map(|&e| -delta_beta * e)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = energies.iter().map(|&e| (-delta_beta * e - shift).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Kish effective sample size `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    s * s / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Reweights samples drawn at `samples.meta.beta` to `beta`.
pub fn reweight(samples: &EnergySamples, beta: f64, bins: usize) -> Result<Reweighted> {
    if samples.is_empty() {
        return domain("cannot reweight an empty sample");
    }
    if !beta.is_finite() {
        return domain("target beta must be finite");
    }
    let beta0 = samples.meta.beta;
    let e = &samples.energies;
    let weights = if beta == beta0 {
        vec![1.0 / e.len() as f64; e.len()]
    } else {
        importance_weights(e, beta - beta0)
    };
    let ess = effective_sample_size(&weights);
    // The guard needs enough samples to be meaningful; fewer are reweighted as is.
    if e.len() as f64 >= MIN_REWEIGHT_ESS && ess < MIN_REWEIGHT_ESS {
        return Err(Error::DegenerateWeights {
            ess,
            min: MIN_REWEIGHT_ESS,
        });
    }
    let mean = if beta == beta0 {
        e.iter().sum::<f64>() / e.len() as f64
    } else {
        e.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / weights.iter().sum::<f64>()
    };
    let se = weighted_se(e, &weights, mean);
    let histogram = Histogram::weighted(e, &weights, bins)?.normalized();
    Ok(Reweighted {
        beta0,
        beta,
        mean,
        se,
        ess,
        weights,
        histogram,
    })
}

/// Batch-means SE of the ratio estimator `sum w E / sum w`, linearized.
fn weighted_se(e: &[f64], w: &[f64], mean: f64) -> f64 {
    let len = e.len();
    if len < 4 {
        return 0.0;
    }
    let batches = (len as f64).sqrt().floor() as usize;
    let size = len / batches;
    let used = batches * size;
    let total_w: f64 = w[..used].iter().sum();
    let contrib: Vec<f64> = (0..batches)
        .map(|b| {
            let r = b * size..(b + 1) * size;
            let num: f64 = e[r.clone()].iter().zip(&w[r]).map(|(x, w)| w * (x - mean)).sum();
            num / (total_w / batches as f64)
        })
        .collect();
    let m = contrib.iter().sum::<f64>() / batches as f64;
    let var = contrib.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub beta: f64,
    pub mean: f64,
    pub se: f64,
    pub acceptance: f64,
}

/// `<H>_beta` for every beta, one chain set per beta. Rows are sorted by
/// beta; chain `c` of row `k` uses stream `k * chains + c`.
pub fn mean_energy_scan(
    n: usize,
    betas: &[f64],
    config: &CanonicalConfig,
) -> Result<Vec<ScanRow>> {
    config.validate()?;
    if betas.iter().any(|b| !b.is_finite()) {
        return domain("beta list must be finite");
    }
    let mut sorted = betas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let chains = config.chains as u64;
    let jobs: Vec<(usize, u64)> = (0..sorted.len())
        .flat_map(|k| (0..chains).map(move |c| (k, c)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(k, c)| run_chain::<f64>(n, &config.with_beta(sorted[k]), k as u64 * chains + c))
        .collect::<Result<Vec<_>>>()?;
    runs.chunks(config.chains)
        .zip(&sorted)
        .map(|(set, &beta)| {
            let (mean, se) = pooled_mean(set)?;
            let acceptance = set.iter().map(|s| s.acceptance).sum::<f64>() / set.len() as f64;
            Ok(ScanRow {
                beta,
                mean,
                se,
                acceptance,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimate {
    pub order: usize,
    pub value: f64,
    pub se: f64,
}

/// Unbiased k-statistics `k_1..k_4` of a sample.
pub fn k_statistics(xs: &[f64]) -> [f64; 4] {
    let len = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / len;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= len;
    m3 /= len;
    m4 /= len;
    let k2 = len / (len - 1.0) * m2;
    let k3 = len * len / ((len - 1.0) * (len - 2.0)) * m3;
    let k4 = len * len * ((len + 1.0) * m4 - 3.0 * (len - 1.0) * m2 * m2)
        / ((len - 1.0) * (len - 2.0) * (len - 3.0));
    [mean, k2, k3, k4]
}

/// Effective sample size of an autocorrelated sequence (at most its length).
pub fn effective_samples(xs: &[f64]) -> f64 {
    xs.len() as f64 / batch_means(xs).2
}

/// k-statistics up to `max_order` with batch-means standard errors.
pub fn cumulants(xs: &[f64], max_order: usize) -> Result<Vec<CumulantEstimate>> {
    if !(1..=4).contains(&max_order) {
        return domain(format!("cumulant order must be 1..=4, got {max_order}"));
    }
    let needed = if max_order <= 2 { 100.0 } else { 1e4 };
    if xs.len() < 16 {
        return domain(format!("need at least {needed} effective samples, got {}", xs.len()));
    }
    let ess = effective_samples(xs);
    if ess < needed {
        return domain(format!(
            "need at least {needed} effective samples for order {max_order}, got {ess:.1}"
        ));
    }
    let full = k_statistics(xs);
    let batches = (xs.len() as f64).sqrt().floor() as usize;
    let size = xs.len() / batches;
    let per_batch: Vec<[f64; 4]> = (0..batches)
        .map(|b| k_statistics(&xs[b * size..(b + 1) * size]))
        .collect();
    Ok((0..max_order)
        .map(|m| {
            let vals: Vec<f64> = per_batch.iter().map(|k| k[m]).collect();
            let mean = vals.iter().sum::<f64>() / batches as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
            CumulantEstimate {
                order: m + 1,
                value: full[m],
                se: (var / batches as f64).sqrt(),
            }
        })
        .collect())
}
