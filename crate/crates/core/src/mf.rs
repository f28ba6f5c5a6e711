//! von Mises-Fisher samplers: the exact vector sampler, the exact matrix
//! rejection sampler and the column-wise Gibbs sampler for `MF(C)`,
//! `p(X) ∝ etr(CᵀX)` on `V_{R,m}`.
//!
//! Both matrix samplers work on `Y ~ MF(H)` with `H = UD` from the SVD
//! `C = UDVᵀ` and return `X = YVᵀ`. The columns of `H` are orthogonal, which
//! keeps the rejection envelope tight and removes one source of Gibbs
//! autocorrelation.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::linalg::{sample_uniform_sphere, NullSpace, StiefelMatrix, SvdDecomp};
use crate::special::log_scaled_bessel_ratio_unchecked;

/// Default cap on proposals per exact draw.
pub const DEFAULT_REJECTION_CAP: u64 = 10_000_000;

/// Vector vMF parameter `c`, stored as `κ = ‖c‖` and `μ = c/κ`.
#[derive(Clone, Debug)]
pub struct VmfParams {
    c: DVector<f64>,
    kappa: f64,
}

impl VmfParams {
    pub fn new(c: DVector<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Dimension("vMF dimension must be >= 1".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vMF concentration".into()));
        }
        let kappa = c.norm();
        Ok(Self { c, kappa })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Mean direction; `None` when `κ = 0`.
    pub fn mean_direction(&self) -> Option<DVector<f64>> {
        (self.kappa > 0.0).then(|| &self.c / self.kappa)
    }

    pub fn concentration(&self) -> &DVector<f64> {
        &self.c
    }
}

/// Exact draw from `p(x) ∝ exp(cᵀx)` on the unit sphere (Wood's algorithm).
pub fn sample_vmf_vector<R: Rng + ?Sized>(params: &VmfParams, rng: &mut R) -> DVector<f64> {
    sample_vmf(&params.c, params.kappa, rng)
}

fn sample_vmf<R: Rng + ?Sized>(c: &DVector<f64>, kappa: f64, rng: &mut R) -> DVector<f64> {
    let p = c.len();
    if kappa == 0.0 {
        return sample_uniform_sphere(p, rng).expect("p >= 1");
    }
    let mu = c / kappa;
    if p == 1 {
        // P(x = μ) = e^κ / (e^κ + e^{−κ})
        let plus = 1.0 / (1.0 + (-2.0 * kappa).exp());
        return if rng.random::<f64>() < plus { mu } else { -mu };
    }

    let pm1 = (p - 1) as f64;
    let b = pm1 / (2.0 * kappa + (4.0 * kappa * kappa + pm1 * pm1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let log_c = kappa * x0 + pm1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(0.5 * pm1, 0.5 * pm1).expect("valid beta shape");
    let (w, one_minus_w) = loop {
        let z: f64 = beta.sample(rng);
        let denom = 1.0 - (1.0 - b) * z;
        let w = (1.0 - (1.0 + b) * z) / denom;
        let u: f64 = rng.random();
        if kappa * w + pm1 * (1.0 - x0 * w).ln() - log_c >= u.ln() {
            break (w, 2.0 * b * z / denom);
        }
    };
    let radial = (one_minus_w * (1.0 + w)).max(0.0).sqrt();
    let v = sample_uniform_sphere(p - 1, rng).expect("p >= 2");

    // x = (√(1−w²) v, w) in a frame whose last axis is μ, then the Householder
    // reflection e_p ↦ μ.
    let mut x = DVector::zeros(p);
    x.rows_mut(0, p - 1).copy_from(&(v * radial));
    x[p - 1] = w;
    let mut h = -mu;
    h[p - 1] += 1.0;
    let hh = h.dot(&h);
    if hh > 0.0 {
        let s = 2.0 * h.dot(&x) / hh;
        x.axpy(-s, &h, 1.0);
    }
    x
}

/// Matrix MF parameters with the cached SVD of `C` and `H = U·diag(D)`.
#[derive(Clone, Debug)]
pub struct MFParams {
    c: DMatrix<f64>,
    svd: SvdDecomp,
    h: DMatrix<f64>,
}

impl MFParams {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        let svd = SvdDecomp::new(&c)?;
        let h = &svd.u * DMatrix::from_diagonal(&svd.d);
        Ok(Self { c, svd, h })
    }

    /// `C = d · I_{m×R}`: every singular value equal to `d`, the
    /// configuration of the rejection-count benchmark.
    pub fn isotropic(m: usize, r: usize, d: f64) -> Result<Self> {
        Self::new(DMatrix::identity(m, r) * d)
    }

    pub fn nrows(&self) -> usize {
        self.c.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.c.ncols()
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn svd(&self) -> &SvdDecomp {
        &self.svd
    }

    /// The column-orthogonal concentration `H = UD`.
    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }
}

/// One factor of the acceptance ratio for column `r` (1-based):
/// `log[I_ν(a)/a^ν] − log[I_ν(b)/b^ν]`, `ν = (m−r−1)/2`, `a = ‖N_rᵀH_r‖`, `b = ‖H_r‖`.
fn log_ratio_term(m: usize, r: usize, projected_norm: f64, norm: f64) -> f64 {
    let nu = (m as f64 - r as f64 - 1.0) / 2.0;
    log_scaled_bessel_ratio_unchecked(nu, projected_norm) - log_scaled_bessel_ratio_unchecked(nu, norm)
}

/// `log[p_MF(Y) / (g(Y) K(H))]` for the product-of-vMF envelope `g`.
///
/// Always `≤ 0`, and exactly `0` when `R = 1`.
pub fn mf_rejection_log_ratio(y: &StiefelMatrix, h: &DMatrix<f64>) -> Result<f64> {
    let (m, r_cols) = (y.nrows(), y.ncols());
    if h.shape() != (m, r_cols) {
        return Err(Error::Dimension(format!("Y is {m}x{r_cols} but H is {}x{}", h.nrows(), h.ncols())));
    }
    let y = y.as_matrix();
    let mut total = 0.0;
    for r in 2..=r_cols {
        let ns = NullSpace::new(&y.columns(0, r - 1).into_owned())?;
        let h_r = h.column(r - 1).into_owned();
        total += log_ratio_term(m, r, ns.project(&h_r).norm(), h_r.norm());
    }
    Ok(total)
}

/// Exact draw from `MF(C)` by rejection from the product-of-vMF envelope.
///
/// Returns the draw and the number of rejected proposals.
pub fn sample_mf_matrix_rejection<R: Rng + ?Sized>(params: &MFParams, rng: &mut R) -> Result<(StiefelMatrix, u64)> {
    sample_mf_matrix_rejection_capped(params, DEFAULT_REJECTION_CAP, rng)
}

/// As [`sample_mf_matrix_rejection`] with an explicit cap on proposals.
pub fn sample_mf_matrix_rejection_capped<R: Rng + ?Sized>(
    params: &MFParams,
    max_proposals: u64,
    rng: &mut R,
) -> Result<(StiefelMatrix, u64)> {
    if params.h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("MF concentration".into()));
    }
    let (m, r_cols) = params.h.shape();
    let h = &params.h;
    let norms: Vec<f64> = h.column_iter().map(|c| c.norm()).collect();
    let mut y = DMatrix::zeros(m, r_cols);
    let mut rejected = 0u64;

    'proposal: loop {
        if rejected >= max_proposals {
            return Err(Error::RejectionCap(max_proposals));
        }
        let log_u = rng.random::<f64>().ln();
        let h1 = h.column(0).into_owned();
        y.set_column(0, &sample_vmf(&h1, norms[0], rng));
        let mut log_ratio = 0.0;
        for r in 2..=r_cols {
            let ns = NullSpace::new(&y.columns(0, r - 1).into_owned())?;
            let proj = ns.project(&h.column(r - 1).into_owned());
            let proj_norm = proj.norm();
            let z = sample_vmf(&proj, proj_norm, rng);
            y.set_column(r - 1, &ns.embed(&z));
            log_ratio += log_ratio_term(m, r, proj_norm, norms[r - 1]);
            // every factor is ≤ 1, so the proposal is already lost
            if log_ratio <= log_u {
                rejected += 1;
                continue 'proposal;
            }
        }
        if log_u < log_ratio {
            let x = &y * params.svd.v.transpose();
            return Ok((StiefelMatrix::new_unchecked(x), rejected));
        }
        rejected += 1;
    }
}

/// One random-scan Gibbs sweep over the columns, targeting `MF(C)`.
///
/// Each column is redrawn from its vMF full conditional in the null space of
/// the others. Refuses `m = R`, where that chain cannot leave the starting
/// point up to column signs.
pub fn sample_mf_matrix_gibbs<R: Rng + ?Sized>(
    params: &MFParams,
    x_current: &StiefelMatrix,
    rng: &mut R,
) -> Result<StiefelMatrix> {
    let (m, r_cols) = params.h.shape();
    if x_current.nrows() != m || x_current.ncols() != r_cols {
        return Err(Error::Dimension(format!(
            "state is {}x{} but C is {m}x{r_cols}",
            x_current.nrows(),
            x_current.ncols()
        )));
    }
    if m == r_cols {
        return Err(Error::Reducible(m));
    }
    let v = &params.svd.v;
    let mut y = x_current.as_matrix() * v;
    let mut order: Vec<usize> = (0..r_cols).collect();
    order.shuffle(rng);
    for &r in &order {
        let others: Vec<usize> = (0..r_cols).filter(|&j| j != r).collect();
        let ns = NullSpace::new(&y.select_columns(&others))?;
        let proj = ns.project(&params.h.column(r).into_owned());
        let kappa = proj.norm();
        let z = sample_vmf(&proj, kappa, rng);
        y.set_column(r, &ns.embed(&z));
    }
    Ok(StiefelMatrix::new_unchecked(y * v.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_uniform_stiefel;
    use crate::stats::{mean, std_error};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn vmf_zero_concentration_is_uniform() {
        let p = VmfParams::new(DVector::zeros(5)).unwrap();
        let mut rng = rng(1);
        let n = 20_000;
        let mut m1 = 0.0;
        for _ in 0..n {
            let x = sample_vmf_vector(&p, &mut rng);
            assert!((x.norm() - 1.0).abs() < 1e-12);
            m1 += x[0];
        }
        assert!((m1 / n as f64).abs() < 4.0 * (0.2f64 / n as f64).sqrt());
    }

    #[test]
    fn vmf_one_dimensional_sign_probabilities() {
        let p = VmfParams::new(DVector::from_element(1, 0.5)).unwrap();
        let mut rng = rng(2);
        let n = 40_000;
        let plus = (0..n).filter(|_| sample_vmf_vector(&p, &mut rng)[0] > 0.0).count();
        let want = 1.0 / (1.0 + (-1.0f64).exp());
        let sd = (want * (1.0 - want) / n as f64).sqrt();
        assert!((plus as f64 / n as f64 - want).abs() < 4.0 * sd);
    }

    #[test]
    fn vmf_m3_mean_resultant_matches_closed_form() {
        // E[μᵀx] = coth κ − 1/κ on S²
        let kappa = 2.0f64;
        let c = DVector::from_column_slice(&[kappa, 0.0, 0.0]);
        let p = VmfParams::new(c).unwrap();
        let mut rng = rng(3);
        let draws: Vec<f64> = (0..100_000).map(|_| sample_vmf_vector(&p, &mut rng)[0]).collect();
        let want = 1.0 / kappa.tanh() - 1.0 / kappa;
        assert!((want - 0.5373).abs() < 1e-4);
        assert!((mean(&draws) - want).abs() < 3.0 * std_error(&draws));
    }

    #[test]
    fn vmf_rotates_to_arbitrary_direction() {
        let c = DVector::from_column_slice(&[1.0, -2.0, 0.5, 3.0]) * 5.0;
        let p = VmfParams::new(c.clone()).unwrap();
        let mu = p.mean_direction().unwrap();
        let mut rng = rng(4);
        let n = 20_000;
        let mut acc = DVector::zeros(4);
        for _ in 0..n {
            acc += sample_vmf_vector(&p, &mut rng);
        }
        acc /= n as f64;
        // the mean is parallel to μ
        let along = acc.dot(&mu);
        assert!((acc - &mu * along).norm() < 0.01);
        assert!(along > 0.9);
    }

    #[test]
    fn ratio_is_zero_for_single_column() {
        let mut rng = rng(5);
        let y = sample_uniform_stiefel(6, 1, &mut rng).unwrap();
        let h = DMatrix::from_fn(6, 1, |i, _| i as f64);
        assert_eq!(mf_rejection_log_ratio(&y, &h).unwrap(), 0.0);
    }

    #[test]
    fn ratio_attains_bound_when_columns_align() {
        let mut h = DMatrix::zeros(6, 3);
        h[(0, 0)] = 4.0;
        h[(2, 1)] = 2.0;
        h[(5, 2)] = 7.0;
        // Y = normalized H: N_rᵀH_r = H_r for every r
        let aligned = StiefelMatrix::new(h.map(|v: f64| if v == 0.0 { 0.0 } else { v.signum() })).unwrap();
        assert!(mf_rejection_log_ratio(&aligned, &h).unwrap().abs() < 1e-14);
        // first column along H_2: the second factor loses all of ‖H_2‖
        let mut y = DMatrix::zeros(6, 3);
        y[(2, 0)] = 1.0;
        y[(0, 1)] = 1.0;
        y[(1, 2)] = 1.0;
        let y = StiefelMatrix::new(y).unwrap();
        assert!(mf_rejection_log_ratio(&y, &h).unwrap() < -0.1);
    }

    #[test]
    fn ratio_rejects_mismatched_dims() {
        let y = StiefelMatrix::identity(4, 2).unwrap();
        assert!(mf_rejection_log_ratio(&y, &DMatrix::zeros(4, 3)).is_err());
    }

    #[test]
    fn zero_concentration_never_rejects() {
        let params = MFParams::new(DMatrix::zeros(5, 2)).unwrap();
        let mut rng = rng(6);
        for _ in 0..200 {
            let (x, rej) = sample_mf_matrix_rejection(&params, &mut rng).unwrap();
            assert_eq!(rej, 0);
            assert!(x.orthonormality_error() < 1e-12);
        }
    }

    #[test]
    fn rejection_cap_is_reported() {
        let params = MFParams::isotropic(10, 6, 20.0).unwrap();
        let mut rng = rng(7);
        let mut saw_cap = false;
        for _ in 0..20 {
            if let Err(Error::RejectionCap(1)) = sample_mf_matrix_rejection_capped(&params, 1, &mut rng) {
                saw_cap = true;
            }
        }
        assert!(saw_cap);
    }

    #[test]
    fn non_finite_concentration_is_an_error() {
        let mut c = DMatrix::zeros(3, 2);
        c[(0, 0)] = f64::NAN;
        assert!(MFParams::new(c).is_err());
    }

    #[test]
    fn gibbs_refuses_square() {
        let params = MFParams::isotropic(3, 3, 1.0).unwrap();
        let x = StiefelMatrix::identity(3, 3).unwrap();
        assert!(matches!(sample_mf_matrix_gibbs(&params, &x, &mut rng(0)), Err(Error::Reducible(3))));
    }

    #[test]
    fn gibbs_preserves_orthonormality_with_zero_concentration() {
        let params = MFParams::new(DMatrix::zeros(7, 3)).unwrap();
        let mut rng = rng(8);
        let mut x = sample_uniform_stiefel(7, 3, &mut rng).unwrap();
        for _ in 0..500 {
            x = sample_mf_matrix_gibbs(&params, &x, &mut rng).unwrap();
        }
        assert!(x.orthonormality_error() < 1e-9);
    }
}
