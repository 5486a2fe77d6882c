//! Closed-form typical-state moments, the asymptotic second cumulant of `H`,
//! the Gaussian rigid-shift model, and histogram utilities for comparing
//! predictions with samples.

use serde::Serialize;

use crate::error::{domain, Result};

/// Haar mean of the purity of an `n_a | n_b` bipartition:
/// `(N_A + N_B) / (N + 1)`.
pub fn typical_mean(n_a: usize, n_b: usize) -> Result<f64> {
    check_sizes(n_a, n_b)?;
    // Divided through by N so nothing overflows for large n.
    let (ia, ib) = (pow2_neg(n_a), pow2_neg(n_b));
    Ok((ia + ib) / (1.0 + ia * ib))
}

/// Haar variance of the purity:
/// `2 (N_A^2 - 1)(N_B^2 - 1) / ((N + 1)^2 (N + 2)(N + 3))`.
pub fn typical_variance(n_a: usize, n_b: usize) -> Result<f64> {
    check_sizes(n_a, n_b)?;
    let (ia, ib) = (pow2_neg(n_a), pow2_neg(n_b));
    let inv_n = ia * ib;
    let num = 2.0 * (1.0 - ia * ia) * (1.0 - ib * ib) * (ia * ia) * (ib * ib);
    let den = (1.0 + inv_n).powi(2) * (1.0 + 2.0 * inv_n) * (1.0 + 3.0 * inv_n);
    Ok(num / den)
}

/// [`typical_mean`] at the balanced cut `floor(n/2) | ceil(n/2)`.
pub fn balanced_mean(n: usize) -> Result<f64> {
    typical_mean(n / 2, n - n / 2)
}

pub fn balanced_variance(n: usize) -> Result<f64> {
    typical_variance(n / 2, n - n / 2)
}

fn check_sizes(n_a: usize, n_b: usize) -> Result<()> {
    if n_a == 0 || n_b == 0 {
        return domain(format!("both parts need at least one qubit, got {n_a} | {n_b}"));
    }
    Ok(())
}

fn pow2_neg(k: usize) -> f64 {
    (-(k.min(2000) as f64)).exp2()
}

/// Exponent of `N` in the large-`N` second cumulant: `log2(3) - 4`.
pub fn kappa2_exponent() -> f64 {
    3f64.log2() - 4.0
}

/// Large-`N` second cumulant of `H` at `beta = 0`: `3 sqrt(2) N^(log2(3) - 4)`.
pub fn asymptotic_kappa2(n: usize) -> Result<f64> {
    if n < 2 {
        return domain(format!("need at least 2 qubits, got {n}"));
    }
    Ok(3.0 * 2f64.sqrt() * (n as f64 * kappa2_exponent()).exp2())
}

/// Reference minima of `H` for small registers; `None` when unknown.
pub fn known_minimum(n: usize) -> Option<f64> {
    match n {
        2 => Some(0.5),
        3 => Some(0.5),
        4 => Some(1.0 / 3.0),
        5 => Some(0.25),
        6 => Some(0.125),
        7 => Some(0.136),
        _ => None,
    }
}

/// Gaussian energy distribution at `beta = 0` rigidly shifted by
/// `-beta * sigma2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianModel {
    pub mu: f64,
    pub sigma2: f64,
    pub beta: f64,
}

pub fn gaussian_prediction(mu: f64, sigma2: f64, beta: f64) -> Result<GaussianModel> {
    if !(sigma2 >= 0.0) || !mu.is_finite() || !beta.is_finite() {
        return domain(format!("need finite mu, beta and sigma2 >= 0, got sigma2 = {sigma2}"));
    }
    Ok(GaussianModel { mu, sigma2, beta })
}

impl GaussianModel {
    /// Predicted `<H>_beta = mu - beta sigma2`.
    pub fn mean(&self) -> f64 {
        self.mu - self.beta * self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Largest `beta` of the rigid-shift regime, `mu / sigma2`.
    pub fn beta_star(&self) -> f64 {
        self.mu / self.sigma2
    }

    /// Same distribution at another temperature.
    pub fn at(&self, beta: f64) -> Self {
        Self { beta, ..*self }
    }

    /// The shift holds while the lower one-sigma tail stays above `e0`.
    pub fn is_valid(&self, e0: f64) -> bool {
        self.mean() - self.sigma() >= e0
    }

    pub fn density(&self, e: f64) -> f64 {
        let z = (e - self.mean()) / self.sigma();
        (-0.5 * z * z).exp() / (self.sigma() * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn cdf(&self, e: f64) -> f64 {
        if self.sigma2 == 0.0 {
            return if e >= self.mean() { 1.0 } else { 0.0 };
        }
        0.5 * libm::erfc(-(e - self.mean()) / (self.sigma() * std::f64::consts::SQRT_2))
    }
}

/// Binned (optionally weighted) samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    edges: Vec<f64>,
    weights: Vec<f64>,
    density: bool,
    /// Weighted mean and variance of the raw samples.
    mean: f64,
    variance: f64,
    /// Kish effective sample size of the raw samples.
    n_eff: f64,
}

/// Default bin count.
pub const DEFAULT_BINS: usize = 100;

impl Histogram {
    /// Equal-width bins over the observed range.
    pub fn from_samples(values: &[f64], bins: usize) -> Result<Self> {
        Self::build(values, None, bins, None)
    }

    pub fn weighted(values: &[f64], weights: &[f64], bins: usize) -> Result<Self> {
        Self::build(values, Some(weights), bins, None)
    }

    /// Equal-width bins over `[lo, hi]`; samples outside are clamped into
    /// the end bins.
    pub fn with_range(values: &[f64], bins: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::build(values, None, bins, Some((lo, hi)))
    }

    fn build(
        values: &[f64],
        weights: Option<&[f64]>,
        bins: usize,
        range: Option<(f64, f64)>,
    ) -> Result<Self> {
        if values.is_empty() {
            return domain("cannot bin an empty sample");
        }
        if bins == 0 {
            return domain("need at least one bin");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("non-finite sample value");
        }
        let ones;
        let w = match weights {
            Some(w) => {
                if w.len() != values.len() || w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                    return domain("weights must be finite, non-negative and match the samples");
                }
                w
            }
            None => {
                ones = vec![1.0; values.len()];
                &ones
            }
        };
        let (mut lo, mut hi) = range.unwrap_or_else(|| {
            values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
        });
        if !(hi > lo) {
            let pad = (lo.abs() * 1e-9).max(1e-12);
            lo -= pad;
            hi += pad;
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0.0; bins];
        for (&v, &wi) in values.iter().zip(w) {
            let k = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[k] += wi;
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return domain("weights sum to zero");
        }
        let mean = values.iter().zip(w).map(|(v, w)| v * w).sum::<f64>() / total;
        let variance = values.iter().zip(w).map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / total;
        let n_eff = total * total / w.iter().map(|w| w * w).sum::<f64>();
        Ok(Self {
            edges,
            weights: counts,
            density: false,
            mean,
            variance,
            n_eff,
        })
    }

    /// Rescales the bin weights to a probability density.
    pub fn normalized(mut self) -> Self {
        let mass = self.mass();
        let widths: Vec<f64> = self.edges.windows(2).map(|e| e[1] - e[0]).collect();
        for (w, dx) in self.weights.iter_mut().zip(&widths) {
            *w /= mass * dx;
        }
        self.density = true;
        self
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Counts (or summed weights), or densities once normalized.
    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_density(&self) -> bool {
        self.density
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    /// Total weight, or the integral of the density.
    pub fn mass(&self) -> f64 {
        if self.density {
            self.weights
                .iter()
                .zip(self.edges.windows(2))
                .map(|(w, e)| w * (e[1] - e[0]))
                .sum()
        } else {
            self.weights.iter().sum()
        }
    }

    /// Empirical CDF, linear inside each bin.
    pub fn cdf(&self, x: f64) -> f64 {
        let mass = self.mass();
        let first = self.edges[0];
        let last = *self.edges.last().unwrap();
        if x <= first {
            return 0.0;
        }
        if x >= last {
            return 1.0;
        }
        let mut acc = 0.0;
        for (w, e) in self.weights.iter().zip(self.edges.windows(2)) {
            let bin_mass = if self.density { w * (e[1] - e[0]) } else { *w };
            if x >= e[1] {
                acc += bin_mass;
            } else {
                acc += bin_mass * (x - e[0]) / (e[1] - e[0]);
                break;
            }
        }
        (acc / mass).clamp(0.0, 1.0)
    }

    /// `(bin center, density)` pairs.
    pub fn plot_data(&self) -> Vec<(f64, f64)> {
        let h = if self.density { self.clone() } else { self.clone().normalized() };
        h.edges
            .windows(2)
            .zip(&h.weights)
            .map(|(e, &d)| (0.5 * (e[0] + e[1]), d))
            .collect()
    }

    /// Two-column CSV `center,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("center,density\n");
        for (c, d) in self.plot_data() {
            out.push_str(&format!("{c},{d}\n"));
        }
        out
    }
}

/// What a histogram is compared against.
#[derive(Debug, Clone, Copy)]
pub enum Reference<'a> {
    Model(&'a GaussianModel),
    Histogram(&'a Histogram),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareReport {
    /// Kolmogorov-Smirnov distance between the CDFs.
    pub ks: f64,
    /// Asymptotic 1% critical value for `ks`.
    pub ks_critical_1pct: f64,
    /// Mean difference in units of its standard error.
    pub mean_diff_se: f64,
    /// Variance difference in units of its standard error.
    pub variance_diff_se: f64,
}

/// Asymptotic Kolmogorov-Smirnov critical value `sqrt(-ln(alpha/2)/2) / sqrt(n)`.
pub fn ks_critical(alpha: f64, n_eff: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / n_eff.sqrt()
}

pub fn compare(hist: &Histogram, reference: Reference<'_>) -> Result<CompareReport> {
    if !(hist.mass() > 0.0) {
        return domain("empty histogram");
    }
    match reference {
        Reference::Model(model) => {
            let ks = hist
                .edges
                .iter()
                .map(|&e| (hist.cdf(e) - model.cdf(e)).abs())
                .fold(0.0, f64::max);
            let n = hist.n_eff;
            Ok(CompareReport {
                ks,
                ks_critical_1pct: ks_critical(0.01, n),
                mean_diff_se: (hist.mean - model.mean()) / (hist.variance / n).sqrt(),
                variance_diff_se: (hist.variance - model.sigma2)
                    / (hist.variance * (2.0 / (n - 1.0).max(1.0)).sqrt()),
            })
        }
        Reference::Histogram(other) => {
            if !(other.mass() > 0.0) {
                return domain("empty reference histogram");
            }
            let ks = hist
                .edges
                .iter()
                .chain(&other.edges)
                .map(|&e| (hist.cdf(e) - other.cdf(e)).abs())
                .fold(0.0, f64::max);
            let (n, m) = (hist.n_eff, other.n_eff);
            let se_mean = (hist.variance / n + other.variance / m).sqrt();
            let se_var = (2.0 * hist.variance.powi(2) / (n - 1.0).max(1.0)
                + 2.0 * other.variance.powi(2) / (m - 1.0).max(1.0))
            .sqrt();
            Ok(CompareReport {
                ks,
                ks_critical_1pct: ks_critical(0.01, n * m / (n + m)),
                mean_diff_se: ratio_or_zero(hist.mean - other.mean, se_mean),
                variance_diff_se: ratio_or_zero(hist.variance - other.variance, se_var),
            })
        }
    }
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
