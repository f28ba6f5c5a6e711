//! Normal draws restricted to an interval.
//!
//! Inside the body of the distribution the draw is by inverse CDF, always
//! evaluated on the side of the interval nearest zero so that the tail
//! probabilities keep full relative precision. Beyond five standard deviations
//! it switches to Robert's translated-exponential rejection sampler, and
//! narrow intervals use a uniform proposal.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Standardized distance beyond which the exponential sampler takes over.
pub const TAIL_SWITCH: f64 = 5.0;

/// Draw from `N(mean, sd²)` restricted to `(lower, upper)`; either bound may be infinite.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64> {
    if !mean.is_finite() || !sd.is_finite() || lower.is_nan() || upper.is_nan() {
        return Err(Error::NonFinite("truncated normal parameters".into()));
    }
    if sd <= 0.0 {
        return Err(Error::Domain(format!("truncated normal needs sd > 0, got {sd}")));
    }
    if lower >= upper {
        return Err(Error::Domain(format!("empty truncation interval ({lower}, {upper})")));
    }
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    loop {
        let x = mean + sd * standard(a, b, rng);
        if x > lower && x < upper {
            return Ok(x);
        }
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn standard<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= 0.0 {
        upper_tail(a, b, rng)
    } else if b <= 0.0 {
        -upper_tail(-b, -a, rng)
    } else if b - a < 0.5 {
        uniform_rejection(a, b, 0.0, rng)
    } else {
        let n = std_normal();
        let (pa, pb) = (n.cdf(a), n.cdf(b));
        n.inverse_cdf(pa + rng.random::<f64>() * (pb - pa))
    }
}

// 0 ≤ a < b ≤ ∞
fn upper_tail<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let width = b - a;
    if width < 1.0 / a.max(1.0) {
        return uniform_rejection(a, b, a, rng);
    }
    if a > TAIL_SWITCH {
        let rate = 0.5 * (a + (a * a + 4.0).sqrt());
        let exp = Exp::new(rate).expect("positive rate");
        loop {
            let x = a + exp.sample(rng);
            if x >= b {
                continue;
            }
            if rng.random::<f64>().ln() < -0.5 * (x - rate) * (x - rate) {
                return x;
            }
        }
    }
    // mirrored: Φ(−x) is accurate where Φ(x) has lost its digits
    let n = std_normal();
    let (qa, qb) = (n.cdf(-a), n.cdf(-b));
    -n.inverse_cdf(qb + rng.random::<f64>() * (qa - qb))
}

/// Uniform proposal on `(a, b)` accepted with `exp((m² − x²)/2)`, where `m`
/// is the point of the interval closest to zero.
fn uniform_rejection<R: Rng + ?Sized>(a: f64, b: f64, closest: f64, rng: &mut R) -> f64 {
    loop {
        let x = a + rng.random::<f64>() * (b - a);
        if rng.random::<f64>().ln() < 0.5 * (closest * closest - x * x) {
            return x;
        }
    }
}
