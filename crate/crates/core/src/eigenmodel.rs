//! Latent eigenmodel for symmetric binary networks.
//!
//! `y_ij = 1{z_ij > c}` with `Z = UΛUᵀ + E`, `E` symmetric with independent
//! standard normal off-diagonal noise (variance 2 on the diagonal),
//! `U ∈ V_{R,m}` uniform a priori, `λ_r ~ N(0, τ²)` and `c ~ N(0, σ_c²)`.
//! One Gibbs iteration updates `U` (a matrix Bingham full conditional),
//! `Λ`, `Z` and `c` in that order.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal as NormalDist, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bmf::{BMFParams, BmfGibbs, SweepStats};
use crate::error::{Error, Result};
use crate::linalg::{sample_uniform_stiefel, StiefelMatrix, SymmetricMatrix};
use crate::network::NetworkData;
use crate::stats::{mean, quantile};
use crate::truncnorm::sample_truncated_normal;

/// Prior variance of the threshold `c`.
pub const DEFAULT_C_PRIOR_VAR: f64 = 100.0;

/// Starting point of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Uniform `U`, `Λ` from its prior, `c = 0`.
    Random,
    /// Leading eigenpairs of normal scores of the ranked data.
    Spectral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenmodelConfig {
    pub r: usize,
    /// Prior variance of each `λ_r`; `None` means `m`.
    pub tau2: Option<f64>,
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub c_prior_var: f64,
    pub init: Init,
    /// Vector sweeps per column visit in the `U` update.
    pub n_inner: usize,
}

impl EigenmodelConfig {
    pub fn new(r: usize) -> Self {
        Self {
            r,
            tau2: None,
            n_iter: 11_000,
            burn_in: 1_000,
            thin: 10,
            c_prior_var: DEFAULT_C_PRIOR_VAR,
            init: Init::Random,
            n_inner: 1,
        }
    }

    pub fn tau2_for(&self, m: usize) -> f64 {
        self.tau2.unwrap_or(m as f64)
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.r == 0 || self.r >= m {
            return Err(Error::Dimension(format!("eigenmodel needs 1 <= R < m, got R={}, m={m}", self.r)));
        }
        let tau2 = self.tau2_for(m);
        if !(tau2 > 0.0 && tau2.is_finite()) || !(self.c_prior_var > 0.0 && self.c_prior_var.is_finite()) {
            return Err(Error::Domain("prior variances must be positive and finite".into()));
        }
        if self.thin == 0 {
            return Err(Error::Domain("thin must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EigenmodelState {
    pub u: StiefelMatrix,
    pub lambda: DVector<f64>,
    pub z: SymmetricMatrix,
    pub c: f64,
}

impl EigenmodelState {
    /// `UΛUᵀ`.
    pub fn mean_matrix(&self) -> DMatrix<f64> {
        low_rank(&self.u, &self.lambda)
    }

    /// Observed pairs whose `z_ij` lies on the wrong side of `c`.
    pub fn constraint_violations(&self, data: &NetworkData) -> usize {
        let z = self.z.as_matrix();
        data.observed_pairs().filter(|&(i, j, y)| (z[(i, j)] > self.c) != y).count()
    }
}

fn low_rank(u: &StiefelMatrix, lambda: &DVector<f64>) -> DMatrix<f64> {
    let u = u.as_matrix();
    let mut ul = u.clone();
    for (mut col, l) in ul.column_iter_mut().zip(lambda.iter()) {
        col *= *l;
    }
    ul * u.transpose()
}

/// `λ_r ~ N(τ² U_rᵀZU_r / (2 + τ²), 2τ² / (2 + τ²))`, independently.
pub fn sample_lambda<R: Rng + ?Sized>(
    u: &StiefelMatrix,
    z: &SymmetricMatrix,
    tau2: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if z.dim() != u.nrows() {
        return Err(Error::Dimension(format!("Z is {0}x{0} but U has {1} rows", z.dim(), u.nrows())));
    }
    let (mean, var) = lambda_conditional(u, z, tau2);
    let sd = var.sqrt();
    Ok(mean.map(|mu| mu + sd * rng.sample::<f64, _>(StandardNormal)))
}

/// Mean vector and common variance of the `Λ` full conditional.
pub fn lambda_conditional(u: &StiefelMatrix, z: &SymmetricMatrix, tau2: f64) -> (DVector<f64>, f64) {
    let u = u.as_matrix();
    let zu = z.as_matrix() * u;
    let shrink = tau2 / (2.0 + tau2);
    let mean = DVector::from_iterator(u.ncols(), (0..u.ncols()).map(|r| shrink * u.column(r).dot(&zu.column(r))));
    (mean, 2.0 * shrink)
}

/// One column-wise sweep of `U` under `BMF(A = Z/2, B = Λ, C = 0)`.
pub fn sample_u_conditional<R: Rng + ?Sized>(
    z: &SymmetricMatrix,
    lambda: &DVector<f64>,
    u: &StiefelMatrix,
    rng: &mut R,
) -> Result<StiefelMatrix> {
    sample_u_with(&mut BmfGibbs::default(), z, lambda, u, rng)
}

fn sample_u_with<R: Rng + ?Sized>(
    gibbs: &mut BmfGibbs,
    z: &SymmetricMatrix,
    lambda: &DVector<f64>,
    u: &StiefelMatrix,
    rng: &mut R,
) -> Result<StiefelMatrix> {
    let params = BMFParams::new(z.scaled(0.5), lambda.clone(), DMatrix::zeros(u.nrows(), u.ncols()))?;
    gibbs.sweep(&params, u, rng)
}

/// Redraws `Z` given `(U, Λ, c)`: truncated unit-variance normals on observed
/// pairs, unconstrained on missing pairs, variance 2 on the diagonal.
pub fn sample_z_conditional<R: Rng + ?Sized>(
    data: &NetworkData,
    u: &StiefelMatrix,
    lambda: &DVector<f64>,
    c: f64,
    rng: &mut R,
) -> Result<SymmetricMatrix> {
    let m = data.nodes();
    if u.nrows() != m {
        return Err(Error::Dimension(format!("U has {} rows but the network has {m} nodes", u.nrows())));
    }
    let mean = low_rank(u, lambda);
    let mut z = DMatrix::zeros(m, m);
    for i in 0..m {
        z[(i, i)] = mean[(i, i)] + std::f64::consts::SQRT_2 * rng.sample::<f64, _>(StandardNormal);
        for j in (i + 1)..m {
            let mu = mean[(i, j)];
            let v = match data.get(i, j) {
                Some(true) => sample_truncated_normal(mu, 1.0, c, f64::INFINITY, rng)?,
                Some(false) => sample_truncated_normal(mu, 1.0, f64::NEG_INFINITY, c, rng)?,
                None => mu + rng.sample::<f64, _>(StandardNormal),
            };
            z[(i, j)] = v;
            z[(j, i)] = v;
        }
    }
    SymmetricMatrix::new(z)
}

/// `(max{z_ij : y_ij = 0}, min{z_ij : y_ij = 1})`.
pub fn threshold_bounds(data: &NetworkData, z: &SymmetricMatrix) -> Result<(f64, f64)> {
    let z = z.as_matrix();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut any = false;
    for (i, j, y) in data.observed_pairs() {
        any = true;
        if y {
            hi = hi.min(z[(i, j)]);
        } else {
            lo = lo.max(z[(i, j)]);
        }
    }
    if !any {
        return Err(Error::Data("network has no observed pairs".into()));
    }
    Ok((lo, hi))
}

/// `c ~ N(0, prior_var)` restricted to the bracket left by `Z` and the data.
pub fn sample_c_conditional<R: Rng + ?Sized>(
    data: &NetworkData,
    z: &SymmetricMatrix,
    prior_var: f64,
    rng: &mut R,
) -> Result<f64> {
    let (lo, hi) = threshold_bounds(data, z)?;
    sample_truncated_normal(0.0, prior_var.sqrt(), lo, hi, rng)
}

/// Normal scores of the observed pairs, ties ranked in random order, with the
/// midpoint between the highest non-link and the lowest link score.
fn rank_scores<R: Rng + ?Sized>(data: &NetworkData, rng: &mut R) -> (DMatrix<f64>, f64) {
    let m = data.nodes();
    let mut pairs: Vec<(usize, usize, bool)> = data.observed_pairs().collect();
    pairs.shuffle(rng);
    // stable sort after the shuffle: ties keep a random order
    pairs.sort_by_key(|&(_, _, y)| y);
    let n = pairs.len() as f64;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut s = DMatrix::zeros(m, m);
    let (mut top0, mut bottom1) = (f64::NEG_INFINITY, f64::INFINITY);
    for (rank, &(i, j, y)) in pairs.iter().enumerate() {
        let score = normal.inverse_cdf((rank as f64 + 1.0) / (n + 1.0));
        s[(i, j)] = score;
        s[(j, i)] = score;
        if y {
            bottom1 = bottom1.min(score);
        } else {
            top0 = top0.max(score);
        }
    }
    let c = match (top0.is_finite(), bottom1.is_finite()) {
        (true, true) => 0.5 * (top0 + bottom1),
        (true, false) => top0 + 1.0,
        (false, true) => bottom1 - 1.0,
        (false, false) => 0.0,
    };
    (s, c)
}

/// Initial state for `init`; `Z` is drawn from its full conditional.
pub fn initial_state<R: Rng + ?Sized>(
    data: &NetworkData,
    config: &EigenmodelConfig,
    rng: &mut R,
) -> Result<EigenmodelState> {
    let m = data.nodes();
    config.validate(m)?;
    let (u, lambda, c) = match config.init {
        Init::Random => {
            let u = sample_uniform_stiefel(m, config.r, rng)?;
            let prior = NormalDist::new(0.0, config.tau2_for(m).sqrt()).expect("positive variance");
            let lambda = DVector::from_fn(config.r, |_, _| prior.sample(rng));
            (u, lambda, 0.0)
        }
        Init::Spectral => {
            let (scores, c) = rank_scores(data, rng);
            let eig = SymmetricMatrix::new(scores)?.eigen();
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&a, &b| eig.values[b].abs().total_cmp(&eig.values[a].abs()));
            idx.truncate(config.r);
            let u = StiefelMatrix::new(eig.vectors.as_matrix().select_columns(&idx))?;
            let lambda = DVector::from_iterator(config.r, idx.iter().map(|&i| eig.values[i]));
            (u, lambda, c)
        }
    };
    let z = sample_z_conditional(data, &u, &lambda, c, rng)?;
    Ok(EigenmodelState { u, lambda, z, c })
}

/// Posterior summary of one eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenvalueSummary {
    pub mean: f64,
    pub lower95: f64,
    pub upper95: f64,
}

/// Retained draws and running summaries of one chain.
#[derive(Clone, Debug)]
pub struct ChainOutput {
    /// Iteration number (1-based) of each retained draw.
    pub iterations: Vec<usize>,
    /// `Λ` at each retained draw, in the column order of `U`.
    pub lambda: Vec<DVector<f64>>,
    pub c: Vec<f64>,
    /// Posterior mean of `UΛUᵀ` over retained draws.
    pub posterior_mean: DMatrix<f64>,
    /// Posterior mean of `Pr(y_ij = 1) = Φ((UΛUᵀ)_ij − c)`.
    pub link_probability: DMatrix<f64>,
    pub stats: SweepStats,
    /// Constraint violations summed over all iterations; zero for a correct sampler.
    pub constraint_violations: u64,
    pub final_state: EigenmodelState,
}

impl ChainOutput {
    /// Per-draw eigenvalues sorted in decreasing order, which removes the
    /// arbitrary labelling of the columns of `U`.
    pub fn sorted_lambda(&self) -> Vec<DVector<f64>> {
        self.lambda
            .iter()
            .map(|l| {
                let mut v: Vec<f64> = l.iter().copied().collect();
                v.sort_by(|a, b| b.total_cmp(a));
                DVector::from_vec(v)
            })
            .collect()
    }

    /// Mean and central 95% interval of each sorted eigenvalue, listed by
    /// decreasing absolute posterior mean.
    pub fn eigenvalue_summary(&self) -> Vec<EigenvalueSummary> {
        let sorted = self.sorted_lambda();
        let r = sorted.first().map_or(0, |v| v.len());
        let mut out: Vec<EigenvalueSummary> = (0..r)
            .map(|k| {
                let xs: Vec<f64> = sorted.iter().map(|v| v[k]).collect();
                EigenvalueSummary { mean: mean(&xs), lower95: quantile(&xs, 0.025), upper95: quantile(&xs, 0.975) }
            })
            .collect();
        out.sort_by(|a, b| b.mean.abs().total_cmp(&a.mean.abs()));
        out
    }
}

/// Runs one Gibbs chain.
pub fn fit<R: Rng + ?Sized>(data: &NetworkData, config: &EigenmodelConfig, rng: &mut R) -> Result<ChainOutput> {
    let m = data.nodes();
    config.validate(m)?;
    if data.n_observed() == 0 {
        return Err(Error::Data("network has no observed pairs".into()));
    }
    let tau2 = config.tau2_for(m);
    let mut state = initial_state(data, config, rng)?;
    let mut gibbs = BmfGibbs::new(config.n_inner);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");

    let mut out = ChainOutput {
        iterations: Vec::new(),
        lambda: Vec::new(),
        c: Vec::new(),
        posterior_mean: DMatrix::zeros(m, m),
        link_probability: DMatrix::zeros(m, m),
        stats: SweepStats::default(),
        constraint_violations: 0,
        final_state: state.clone(),
    };
    for iter in 1..=config.n_iter {
        state.u = sample_u_with(&mut gibbs, &state.z, &state.lambda, &state.u, rng)?;
        state.lambda = sample_lambda(&state.u, &state.z, tau2, rng)?;
        state.z = sample_z_conditional(data, &state.u, &state.lambda, state.c, rng)?;
        state.c = sample_c_conditional(data, &state.z, config.c_prior_var, rng)?;
        out.constraint_violations += state.constraint_violations(data) as u64;

        if iter > config.burn_in && (iter - config.burn_in).is_multiple_of(config.thin) {
            let mm = state.mean_matrix();
            out.link_probability += mm.map(|v| normal.cdf(v - state.c));
            out.posterior_mean += mm;
            out.iterations.push(iter);
            out.lambda.push(state.lambda.clone());
            out.c.push(state.c);
        }
    }
    let kept = out.iterations.len().max(1) as f64;
    out.posterior_mean /= kept;
    out.link_probability /= kept;
    out.stats = gibbs.stats();
    out.final_state = state;
    Ok(out)
}

/// Simulates a network from `Z = UΛUᵀ + E` thresholded at `c`.
pub fn simulate_network<R: Rng + ?Sized>(u: &StiefelMatrix, lambda: &DVector<f64>, c: f64, rng: &mut R) -> NetworkData {
    let m = u.nrows();
    let mean = low_rank(u, lambda);
    let mut net = NetworkData::filled(m, None);
    for i in 0..m {
        for j in (i + 1)..m {
            let z = mean[(i, j)] + rng.sample::<f64, _>(StandardNormal);
            net.set(i, j, Some(z > c));
        }
    }
    net
}

/// Fraction of `‖M‖_F²` carried by the `r` largest-magnitude eigenvalues.
pub fn top_eigen_mass(m: &DMatrix<f64>, r: usize) -> Result<f64> {
    let eig = SymmetricMatrix::new(m.clone())?.eigen();
    let mut sq: Vec<f64> = eig.values.iter().map(|v| v * v).collect();
    sq.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = sq.iter().sum();
    Ok(sq.iter().take(r).sum::<f64>() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::{std_error, variance};

    fn truth(m: usize, lambda: &[f64], seed: u64) -> (StiefelMatrix, DVector<f64>) {
        let mut rng = stream_rng(seed, 99);
        (sample_uniform_stiefel(m, lambda.len(), &mut rng).unwrap(), DVector::from_column_slice(lambda))
    }

    #[test]
    fn lambda_conditional_formula() {
        let mut rng = stream_rng(1, 0);
        let u = sample_uniform_stiefel(10, 2, &mut rng).unwrap();
        let z = SymmetricMatrix::new(DMatrix::from_fn(10, 10, |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0)).unwrap();
        let (mean_v, var) = lambda_conditional(&u, &z, 10.0);
        for r in 0..2 {
            let ur = u.as_matrix().column(r);
            let q: f64 = (0..10).map(|i| (0..10).map(|j| ur[i] * z.as_matrix()[(i, j)] * ur[j]).sum::<f64>()).sum();
            assert!((mean_v[r] - 10.0 * q / 12.0).abs() < 1e-12);
        }
        assert!((var - 20.0 / 12.0).abs() < 1e-15);
        let (big, var_big) = lambda_conditional(&u, &z, 1e8);
        let q0 = u.as_matrix().column(0).dot(&(z.as_matrix() * u.as_matrix().column(0)));
        assert!((big[0] - q0).abs() < 1e-6 && (var_big - 2.0).abs() < 1e-7);
    }

    #[test]
    fn lambda_variance_with_zero_z() {
        let mut rng = stream_rng(2, 0);
        let u = StiefelMatrix::identity(4, 1).unwrap();
        let z = SymmetricMatrix::zeros(4);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_lambda(&u, &z, 3.0, &mut rng).unwrap()[0]).collect();
        let expected = 6.0 / 5.0;
        assert!((variance(&xs) / expected - 1.0).abs() < 0.02);
        assert!(mean(&xs).abs() < 3.0 * std_error(&xs));
    }

    #[test]
    fn z_respects_data_and_c_respects_z() {
        let mut rng = stream_rng(3, 0);
        let (u, l) = truth(12, &[4.0, -3.0], 3);
        let mut data = simulate_network(&u, &l, 0.5, &mut rng);
        data.set(0, 5, None);
        for _ in 0..50 {
            let c: f64 = rng.random_range(-1.0..1.0);
            let z = sample_z_conditional(&data, &u, &l, c, &mut rng).unwrap();
            let state = EigenmodelState { u: u.clone(), lambda: l.clone(), z: z.clone(), c };
            assert_eq!(state.constraint_violations(&data), 0);
            let c2 = sample_c_conditional(&data, &z, 100.0, &mut rng).unwrap();
            let (lo, hi) = threshold_bounds(&data, &z).unwrap();
            assert!(c2 > lo && c2 < hi);
        }
    }

    #[test]
    fn c_needs_observations() {
        let data = NetworkData::filled(4, None);
        assert!(sample_c_conditional(&data, &SymmetricMatrix::zeros(4), 100.0, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn zero_eigenvalues_leave_u_uniform() {
        let mut rng = stream_rng(4, 0);
        let z = SymmetricMatrix::new(DMatrix::from_fn(5, 5, |i, j| (i + j) as f64)).unwrap();
        let mut u = StiefelMatrix::identity(5, 2).unwrap();
        let mut sq = Vec::new();
        for _ in 0..20_000 {
            u = sample_u_conditional(&z, &DVector::zeros(2), &u, &mut rng).unwrap();
            sq.push(u.as_matrix()[(0, 0)].powi(2));
        }
        assert!((mean(&sq) - 0.2).abs() < 0.01);
        assert!(u.orthonormality_error() < 1e-9);
    }

    #[test]
    fn spectral_start_separates_links() {
        let mut rng = stream_rng(5, 0);
        let (u, l) = truth(20, &[8.0, -6.0], 5);
        let data = simulate_network(&u, &l, 0.5, &mut rng);
        let mut config = EigenmodelConfig::new(2);
        config.init = Init::Spectral;
        let s = initial_state(&data, &config, &mut rng).unwrap();
        assert_eq!(s.constraint_violations(&data), 0);
        assert!(s.u.orthonormality_error() < 1e-9);
    }

    #[test]
    fn short_chain_runs_and_is_reproducible() {
        let (u, l) = truth(15, &[6.0, -4.0], 6);
        let data = simulate_network(&u, &l, 0.3, &mut stream_rng(6, 1));
        let mut config = EigenmodelConfig::new(2);
        config.n_iter = 60;
        config.burn_in = 20;
        config.thin = 4;
        let a = fit(&data, &config, &mut stream_rng(7, 0)).unwrap();
        let b = fit(&data, &config, &mut stream_rng(7, 0)).unwrap();
        assert_eq!(a.iterations, (6..=15).map(|k| k * 4).collect::<Vec<_>>());
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.posterior_mean, b.posterior_mean);
        assert_eq!(a.constraint_violations, 0);
        assert!(a.link_probability.iter().all(|&p| (0.0..=1.0).contains(&p)));
        assert_eq!(a.eigenvalue_summary().len(), 2);
    }

    #[test]
    fn eigen_mass_of_low_rank_matrix() {
        let (u, l) = truth(10, &[3.0, -1.0], 8);
        let m = low_rank(&u, &l);
        assert!((top_eigen_mass(&m, 2).unwrap() - 1.0).abs() < 1e-12);
        assert!((top_eigen_mass(&m, 1).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let data = NetworkData::filled(5, Some(false));
        let mut rng = stream_rng(0, 0);
        assert!(fit(&data, &EigenmodelConfig::new(5), &mut rng).is_err());
        let mut c = EigenmodelConfig::new(2);
        c.thin = 0;
        assert!(fit(&data, &c, &mut rng).is_err());
    }
}
