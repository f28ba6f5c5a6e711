//! Log-scale modified Bessel functions of the first kind.
//!
//! Concentrations in the hundreds overflow `I_ν` in double precision, so every
//! quantity here is a logarithm. Three evaluation routes are used:
//!
//! * `x < ν + 20`: the ascending power series, summed outward from its largest
//!   term so nothing overflows;
//! * `x ≥ ν + 20`, `ν < 10`: the large-argument (Hankel) expansion;
//! * `x ≥ ν + 20`, `ν ≥ 10`: the uniform (Debye) expansion in `ν`, with the
//!   `U_k(p)` polynomials generated from their recurrence.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Orders below this use the Hankel expansion once past the series region.
const UNIFORM_MIN_ORDER: f64 = 10.0;
/// The series is used while `x < ν + SERIES_MARGIN`.
const SERIES_MARGIN: f64 = 20.0;
/// Number of Debye terms `U_0 … U_{K−1}`.
const DEBYE_TERMS: usize = 14;

/// Order of a modified Bessel function, `ν ≥ −1/2`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if !nu.is_finite() {
            return Err(Error::NonFinite(format!("Bessel order {nu}")));
        }
        if nu < -0.5 {
            return Err(Error::Domain(format!("Bessel order {nu} < -1/2")));
        }
        Ok(Self(nu))
    }

    /// The order `(d − 2)/2` of the vMF normalizer on the unit sphere in `ℝᵈ`.
    pub fn sphere(dim: usize) -> Self {
        Self(dim as f64 / 2.0 - 1.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_args(nu: f64, x: f64) -> Result<()> {
    BesselOrder::new(nu)?;
    if x.is_nan() {
        return Err(Error::NonFinite("Bessel argument".into()));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("Bessel argument {x} < 0")));
    }
    Ok(())
}

/// `log I_ν(x)` for `x ≥ 0`, `ν ≥ −1/2`.
///
/// At `x = 0` this is `0` for `ν = 0`, `−∞` for `ν > 0` and `+∞` for `ν < 0`.
pub fn log_bessel_i(nu: f64, x: f64) -> Result<f64> {
    check_args(nu, x)?;
    Ok(log_bessel_i_unchecked(nu, x))
}

/// `log(I_ν(x) / x^ν)`: finite on `x ≥ 0` with limit `−ν log 2 − log Γ(ν+1)`
/// at zero, and nondecreasing in `x`.
pub fn log_scaled_bessel_ratio(nu: f64, x: f64) -> Result<f64> {
    check_args(nu, x)?;
    Ok(log_scaled_bessel_ratio_unchecked(nu, x))
}

pub(crate) fn log_bessel_i_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 {
            0.0
        } else if nu > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x < nu + SERIES_MARGIN {
        nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) + log_series_sum(nu, x)
    } else if nu < UNIFORM_MIN_ORDER {
        log_hankel(nu, x)
    } else {
        log_debye(nu, x)
    }
}

pub(crate) fn log_scaled_bessel_ratio_unchecked(nu: f64, x: f64) -> f64 {
    if x < nu + SERIES_MARGIN {
        -nu * LN_2 - ln_gamma(nu + 1.0) + log_series_sum(nu, x)
    } else {
        log_bessel_i_unchecked(nu, x) - nu * x.ln()
    }
}

/// `log Σ_j t_j` with `t_0 = 1`, `t_j = t_{j−1} (x²/4) / (j (j + ν))`.
///
/// Summation starts at the largest term (`j(j+ν) ≈ x²/4`) and walks outward,
/// which keeps every partial sum O(1).
fn log_series_sum(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let q = 0.25 * x * x;
    let peak = (0.5 * ((nu * nu + x * x).sqrt() - nu)).floor().max(0.0);
    let j0 = peak as u64;
    let log_t0 = if j0 == 0 {
        0.0
    } else {
        let jf = j0 as f64;
        jf * q.ln() - ln_gamma(jf + 1.0) - ln_gamma(jf + nu + 1.0) + ln_gamma(nu + 1.0)
    };

    let mut sum = 1.0;
    // upward
    let mut t = 1.0;
    let mut j = j0 + 1;
    loop {
        let jf = j as f64;
        t *= q / (jf * (jf + nu));
        sum += t;
        if t < sum * 1e-17 {
            break;
        }
        j += 1;
    }
    // downward
    let mut t = 1.0;
    let mut j = j0;
    while j >= 1 {
        let jf = j as f64;
        t *= jf * (jf + nu) / q;
        sum += t;
        if t < sum * 1e-17 {
            break;
        }
        j -= 1;
    }
    log_t0 + sum.ln()
}

/// Large-argument expansion `I_ν(x) ≈ eˣ/√(2πx) Σ (−1)ᵏ a_k(ν)/xᵏ`.
fn log_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() && k > 1 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

/// Coefficients (ascending powers of `p`) of the Debye polynomials `U_k(p)`.
fn debye_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        // U_{k+1}(p) = ½p²(1−p²)U_k'(p) + ⅛∫₀ᵖ(1−5t²)U_k(t)dt
        let mut polys = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS - 1 {
            let u = &polys[k];
            let mut next = vec![0.0; u.len() + 3];
            for (n, &c) in u.iter().enumerate().skip(1) {
                let d = n as f64 * c; // coefficient of p^{n-1} in U'
                next[n + 1] += 0.5 * d;
                next[n + 3] -= 0.5 * d;
            }
            for (n, &c) in u.iter().enumerate() {
                next[n + 1] += c / (8.0 * (n as f64 + 1.0));
                next[n + 3] -= 5.0 * c / (8.0 * (n as f64 + 3.0));
            }
            polys.push(next);
        }
        polys
    })
}

fn horner(coeffs: &[f64], p: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * p + c)
}

/// Uniform asymptotic expansion of `I_ν(νz)` for large `ν`.
fn log_debye(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let t = (1.0 + z * z).sqrt();
    let p = 1.0 / t;
    let eta = t + (z / (1.0 + t)).ln();
    let mut sum = 0.0;
    let mut scale = 1.0;
    for u in debye_polynomials() {
        sum += horner(u, p) * scale;
        scale /= nu;
    }
    nu * eta - 0.5 * (2.0 * PI * nu).ln() - 0.5 * t.ln() + sum.ln()
}
