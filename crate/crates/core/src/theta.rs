//! The univariate density of a squared coordinate,
//!
//! `p(θ) ∝ θ^{−1/2} (1−θ)^k exp(aθ + b(1−θ)^{1/2}) (e^{−cθ^{1/2}} + e^{cθ^{1/2}})`
//! on `(0, 1)`, and a sampler for it.
//!
//! Sampling is by rejection from a `Beta(1/2, β)` proposal with
//! `β = 1 + k ∧ [(k − a) ∨ −1/2]`. The proposal absorbs `θ^{−1/2}` and part
//! of `(1−θ)^k`; the remaining log-ratio is bounded on `[0, 1]` and its maximum
//! is located numerically. After [`MAX_CONSECUTIVE_REJECTIONS`] failures in a
//! row the draw comes from a fine grid instead.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};

/// Consecutive rejections before switching to the grid sampler.
pub const MAX_CONSECUTIVE_REJECTIONS: u64 = 500;
/// Cells in the fallback grid.
pub const FALLBACK_GRID_CELLS: usize = 2000;
/// Points in the coarse envelope search (endpoints included).
const ENVELOPE_GRID: usize = 64;
/// Added to the located maximum of the log-ratio.
const ENVELOPE_MARGIN: f64 = std::f64::consts::LN_2;

/// `ln(e^{−x} + e^{x})`.
pub(crate) fn log_two_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p()
}

/// Coefficients `(a, b, c, k)` of the θ density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaDensityParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k: f64,
}

impl ThetaDensityParams {
    pub fn new(a: f64, b: f64, c: f64, k: f64) -> Result<Self> {
        let p = Self { a, b, c, k };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if ![self.a, self.b, self.c, self.k].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("theta density parameters {self:?}")));
        }
        if self.k < -0.5 {
            return Err(Error::Domain(format!("theta density needs k >= -1/2, got {}", self.k)));
        }
        Ok(())
    }

    /// Unnormalized log density at `θ ∈ (0, 1)`.
    pub fn log_density(&self, theta: f64) -> f64 {
        -0.5 * theta.ln() + self.log_density_tail(theta)
    }

    // Everything except the θ^{−1/2} factor.
    fn log_density_tail(&self, theta: f64) -> f64 {
        let k_term = if self.k == 0.0 { 0.0 } else { self.k * (-theta).ln_1p() };
        k_term + self.a * theta + self.b * (1.0 - theta).sqrt() + log_two_cosh(self.c * theta.sqrt())
    }

    /// Second shape of the beta proposal.
    pub fn proposal_beta(&self) -> f64 {
        1.0 + self.k.min((self.k - self.a).max(-0.5))
    }
}

/// Outcome of one θ draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaDraw {
    pub theta: f64,
    pub rejections: u64,
    pub used_fallback: bool,
}

/// A θ sampler with its proposal and envelope prepared.
#[derive(Clone, Debug)]
pub struct ThetaSampler {
    params: ThetaDensityParams,
    proposal: Beta<f64>,
    // (1−θ) exponent left after the proposal, ≥ 0.
    residual_k: f64,
    log_envelope: f64,
}

impl ThetaSampler {
    pub fn new(params: ThetaDensityParams) -> Result<Self> {
        params.validate()?;
        let beta = params.proposal_beta();
        let proposal = Beta::new(0.5, beta).map_err(|e| Error::Domain(format!("beta(1/2, {beta}) proposal: {e}")))?;
        let residual_k = (params.k - beta + 1.0).max(0.0);
        let mut s = Self { params, proposal, residual_k, log_envelope: 0.0 };
        s.log_envelope = s.max_log_ratio() + ENVELOPE_MARGIN;
        Ok(s)
    }

    pub fn params(&self) -> &ThetaDensityParams {
        &self.params
    }

    /// log of target over proposal, up to a constant; finite on `[0, 1)`.
    fn log_ratio(&self, theta: f64) -> f64 {
        let p = &self.params;
        let k_term = if self.residual_k == 0.0 { 0.0 } else { self.residual_k * (-theta).ln_1p() };
        k_term + p.a * theta + p.b * (1.0 - theta).max(0.0).sqrt() + log_two_cosh(p.c * theta.sqrt())
    }

    fn max_log_ratio(&self) -> f64 {
        let n = ENVELOPE_GRID - 1;
        let values: Vec<f64> = (0..=n).map(|j| self.log_ratio(j as f64 / n as f64)).collect();
        let (best, &best_val) = values.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).expect("non-empty grid");
        let lo = best.saturating_sub(1) as f64 / n as f64;
        let hi = (best + 1).min(n) as f64 / n as f64;
        best_val.max(self.golden_max(lo, hi))
    }

    fn golden_max(&self, mut lo: f64, mut hi: f64) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = self.log_ratio(x1);
        let mut f2 = self.log_ratio(x2);
        for _ in 0..80 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = self.log_ratio(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = self.log_ratio(x1);
            }
        }
        f1.max(f2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ThetaDraw {
        let mut rejections = 0;
        while rejections < MAX_CONSECUTIVE_REJECTIONS {
            let theta: f64 = self.proposal.sample(rng);
            let u: f64 = rng.random();
            if theta > 0.0 && theta < 1.0 && u.ln() < self.log_ratio(theta) - self.log_envelope {
                return ThetaDraw { theta, rejections, used_fallback: false };
            }
            rejections += 1;
        }
        ThetaDraw { theta: self.sample_grid(rng), rejections, used_fallback: true }
    }

    /// Inverse-CDF draw from a midpoint grid. The `θ^{−1/2}` factor is
    /// integrated exactly within each cell, so the singular endpoint costs
    /// nothing.
    pub fn sample_grid<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = FALLBACK_GRID_CELLS;
        let h = 1.0 / n as f64;
        let log_w: Vec<f64> = (0..n)
            .map(|j| {
                let (t0, t1) = (j as f64 * h, (j + 1) as f64 * h);
                let mass = 2.0 * (t1.sqrt() - t0.sqrt());
                self.params.log_density_tail((j as f64 + 0.5) * h) + mass.ln()
            })
            .collect();
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for lw in &log_w {
            acc += (lw - max).exp();
            cdf.push(acc);
        }
        loop {
            let target = rng.random::<f64>() * acc;
            let j = cdf.partition_point(|&c| c <= target).min(n - 1);
            let (s0, s1) = ((j as f64 * h).sqrt(), ((j + 1) as f64 * h).sqrt());
            let t = s0 + rng.random::<f64>() * (s1 - s0);
            let theta = t * t;
            if theta > 0.0 && theta < 1.0 {
                return theta;
            }
        }
    }
}

/// One draw from the θ density.
pub fn sample_theta<R: Rng + ?Sized>(params: &ThetaDensityParams, rng: &mut R) -> Result<f64> {
    Ok(ThetaSampler::new(*params)?.sample(rng).theta)
}
