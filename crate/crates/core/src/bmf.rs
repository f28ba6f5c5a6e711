//! Gibbs samplers for the Bingham and Bingham–von Mises-Fisher families,
//! `p(X) ∝ etr(CᵀX + B XᵀAX)` on `V_{R,m}` with `B` diagonal.
//!
//! The vector samplers work in the eigenbasis of `A`: with `A = EΛEᵀ`,
//! `y = Eᵀx` and `d = Eᵀc`, each coordinate update redraws `θ = y_i²` and the
//! sign of `y_i` while the other coordinates keep their relative squared mass
//! `q_j = y_j² / Σ_{l≠i} y_l²` and their signs.
//!
//! The matrix sampler updates one column at a time through the vector sampler
//! in the null space of the other columns. When `m = R` that null space is one
//! dimensional and the chain cannot move, so the square case updates pairs of
//! columns through a rotation/reflection of their two-dimensional span.

use std::ops::AddAssign;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{sample_uniform_sphere, tol, NullSpace, SpectralDecomp, StiefelMatrix, SymmetricMatrix};
use crate::theta::{log_two_cosh, ThetaDensityParams, ThetaSampler};

/// Grid cells for the angle of a pair update.
pub const PHI_GRID_CELLS: usize = 720;

/// Counters accumulated over sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub theta_draws: u64,
    pub theta_rejections: u64,
    pub theta_fallbacks: u64,
    /// Coordinate updates where every other coordinate had numerically zero mass.
    pub degenerate_redraws: u64,
    pub pair_updates: u64,
}

impl AddAssign for SweepStats {
    fn add_assign(&mut self, o: Self) {
        self.theta_draws += o.theta_draws;
        self.theta_rejections += o.theta_rejections;
        self.theta_fallbacks += o.theta_fallbacks;
        self.degenerate_redraws += o.degenerate_redraws;
        self.pair_updates += o.pair_updates;
    }
}

/// A vector BMF density `exp(cᵀx + xᵀAx)` prepared in the eigenbasis of `A`.
#[derive(Clone, Debug)]
pub struct VectorBmf {
    eigen: SpectralDecomp,
    d: DVector<f64>,
}

impl VectorBmf {
    pub fn new(a: &SymmetricMatrix, c: &DVector<f64>) -> Result<Self> {
        if c.len() != a.dim() {
            return Err(Error::Dimension(format!("A is {0}x{0} but c has length {1}", a.dim(), c.len())));
        }
        if a.dim() == 0 {
            return Err(Error::Dimension("vector BMF dimension must be >= 1".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector BMF linear term".into()));
        }
        let eigen = a.eigen();
        let d = eigen.vectors.as_matrix().tr_mul(c);
        Ok(Self { eigen, d })
    }

    /// The Bingham density `exp(xᵀAx)`.
    pub fn bingham(a: &SymmetricMatrix) -> Result<Self> {
        Self::new(a, &DVector::zeros(a.dim()))
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigen.values
    }

    /// `d = Eᵀc`.
    pub fn rotated_linear(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn to_eigen_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        self.eigen.vectors.as_matrix().tr_mul(x)
    }

    pub fn from_eigen_coords(&self, y: &DVector<f64>) -> DVector<f64> {
        self.eigen.vectors.as_matrix() * y
    }

    /// One sweep in original coordinates.
    pub fn sweep<R: Rng + ?Sized>(
        &self,
        x: &DVector<f64>,
        rng: &mut R,
        stats: &mut SweepStats,
    ) -> Result<DVector<f64>> {
        check_unit(x, self.dim())?;
        let mut y = self.to_eigen_coords(x);
        self.sweep_eigen(&mut y, rng, stats);
        Ok(self.from_eigen_coords(&y))
    }

    /// One sweep over all coordinates of `y = Eᵀx`, in a fresh random order.
    pub fn sweep_eigen<R: Rng + ?Sized>(&self, y: &mut DVector<f64>, rng: &mut R, stats: &mut SweepStats) {
        let m = self.dim();
        if m == 1 {
            let plus = 1.0 / (1.0 + (-2.0 * self.d[0]).exp());
            y[0] = if rng.random::<f64>() < plus { 1.0 } else { -1.0 };
            return;
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        for i in order {
            self.update_coordinate(y, i, rng, stats);
        }
    }

    fn update_coordinate<R: Rng + ?Sized>(&self, y: &mut DVector<f64>, i: usize, rng: &mut R, stats: &mut SweepStats) {
        let m = self.dim();
        let lambda = &self.eigen.values;
        let mut rest: f64 = (0..m).filter(|&j| j != i).map(|j| y[j] * y[j]).sum();
        if rest < tol::DEGENERATE_MASS {
            // q is undefined; any direction for the other coordinates is a
            // valid starting point for this update
            let v = sample_uniform_sphere(m - 1, rng).expect("m >= 2");
            for (j, vj) in (0..m).filter(|&j| j != i).zip(v.iter()) {
                y[j] = *vj;
            }
            rest = 1.0;
            stats.degenerate_redraws += 1;
        }
        let inv_sqrt_rest = 1.0 / rest.sqrt();
        let mut weighted_lambda = 0.0;
        let mut b = 0.0;
        for j in (0..m).filter(|&j| j != i) {
            weighted_lambda += y[j] * y[j] / rest * lambda[j];
            b += y[j] * inv_sqrt_rest * self.d[j];
        }
        let params = ThetaDensityParams { a: lambda[i] - weighted_lambda, b, c: self.d[i], k: (m as f64 - 3.0) / 2.0 };
        let draw = ThetaSampler::new(params).expect("finite parameters from a finite state").sample(rng);
        stats.theta_draws += 1;
        stats.theta_rejections += draw.rejections;
        stats.theta_fallbacks += u64::from(draw.used_fallback);

        let root = draw.theta.sqrt();
        let plus = 1.0 / (1.0 + (-2.0 * root * self.d[i]).exp());
        let sign = if rng.random::<f64>() < plus { 1.0 } else { -1.0 };
        let scale = ((1.0 - draw.theta) / rest).sqrt();
        for j in (0..m).filter(|&j| j != i) {
            y[j] *= scale;
        }
        y[i] = sign * root;
    }
}

fn check_unit(x: &DVector<f64>, m: usize) -> Result<()> {
    if x.len() != m {
        return Err(Error::Dimension(format!("state has length {} but density has dimension {m}", x.len())));
    }
    let err = (x.norm() - 1.0).abs();
    if err.is_nan() || err > tol::ORTHONORMAL {
        return Err(Error::Domain(format!("state is not a unit vector: |‖x‖ − 1| = {err:e}")));
    }
    Ok(())
}

/// One Gibbs sweep for the vector Bingham density `exp(xᵀAx)`.
pub fn bingham_vector_gibbs_sweep<R: Rng + ?Sized>(
    a: &SymmetricMatrix,
    x: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    VectorBmf::bingham(a)?.sweep(x, rng, &mut SweepStats::default())
}

/// One Gibbs sweep for the vector BMF density `exp(cᵀx + xᵀAx)`.
pub fn bmf_vector_gibbs_sweep<R: Rng + ?Sized>(
    a: &SymmetricMatrix,
    c: &DVector<f64>,
    x: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    VectorBmf::new(a, c)?.sweep(x, rng, &mut SweepStats::default())
}

/// Parameters `(A, B, C)` of the matrix BMF density; `B` is stored as its diagonal.
#[derive(Clone, Debug)]
pub struct BMFParams {
    a: SymmetricMatrix,
    b: DVector<f64>,
    c: DMatrix<f64>,
}

impl BMFParams {
    pub fn new(a: SymmetricMatrix, b: DVector<f64>, c: DMatrix<f64>) -> Result<Self> {
        let m = a.dim();
        if c.shape() != (m, b.len()) {
            return Err(Error::Dimension(format!(
                "A is {m}x{m}, B has {} entries, C is {}x{}",
                b.len(),
                c.nrows(),
                c.ncols()
            )));
        }
        if b.is_empty() || b.len() > m {
            return Err(Error::Dimension(format!("need 1 <= R <= m, got m={m}, R={}", b.len())));
        }
        if b.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("BMF parameters".into()));
        }
        Ok(Self { a, b, c })
    }

    /// All-zero parameters: the uniform distribution on `V_{R,m}`.
    pub fn zeros(m: usize, r: usize) -> Result<Self> {
        Self::new(SymmetricMatrix::zeros(m), DVector::zeros(r), DMatrix::zeros(m, r))
    }

    pub fn nrows(&self) -> usize {
        self.a.dim()
    }

    pub fn ncols(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &SymmetricMatrix {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// `tr(CᵀX + B XᵀAX)`.
    pub fn log_density(&self, x: &StiefelMatrix) -> f64 {
        let x = x.as_matrix();
        let ax = self.a.as_matrix() * x;
        let mut total = self.c.dot(x);
        for r in 0..self.ncols() {
            total += self.b[r] * x.column(r).dot(&ax.column(r));
        }
        total
    }
}

/// `Z(φ, s) = [[cos φ, s sin φ], [sin φ, −s cos φ]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation2 {
    pub phi: f64,
    pub s: f64,
}

impl Rotation2 {
    pub fn matrix(&self) -> Matrix2<f64> {
        let (sin, cos) = self.phi.sin_cos();
        Matrix2::new(cos, self.s * sin, sin, -self.s * cos)
    }
}

/// Conditional density of the 2 × 2 orthogonal factor of a column pair,
/// `p(Z) ∝ etr(C̃ᵀZ + B̃ ZᵀÃZ)`.
#[derive(Clone, Copy, Debug)]
pub struct PairDensity {
    pub a: Matrix2<f64>,
    pub b: [f64; 2],
    pub c: Matrix2<f64>,
}

impl PairDensity {
    /// `log p(Z(φ, s))` split as `base(φ) + s·signed(φ)`.
    fn parts(&self, phi: f64) -> (f64, f64) {
        let (sin, cos) = phi.sin_cos();
        let z1 = Vector2::new(cos, sin);
        let w = Vector2::new(sin, -cos);
        let base = self.c.column(0).dot(&z1) + self.b[0] * z1.dot(&(self.a * z1)) + self.b[1] * w.dot(&(self.a * w));
        (base, self.c.column(1).dot(&w))
    }

    pub fn log_density(&self, rot: Rotation2) -> f64 {
        let (base, signed) = self.parts(rot.phi);
        base + rot.s * signed
    }

    /// `log[p(Z(φ,−1)) + p(Z(φ,+1))]`.
    pub fn log_marginal(&self, phi: f64) -> f64 {
        let (base, signed) = self.parts(phi);
        base + log_two_cosh(signed)
    }

    /// `φ` from a midpoint-grid inverse CDF on `(0, 2π)` with uniform jitter
    /// within the cell, then `s` given `φ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Rotation2 {
        let n = PHI_GRID_CELLS;
        let h = std::f64::consts::TAU / n as f64;
        let logs: Vec<f64> = (0..n).map(|j| self.log_marginal((j as f64 + 0.5) * h)).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for l in &logs {
            acc += (l - max).exp();
            cdf.push(acc);
        }
        let target = rng.random::<f64>() * acc;
        let j = cdf.partition_point(|&c| c <= target).min(n - 1);
        let phi = (j as f64 + rng.random::<f64>()) * h;
        let (_, signed) = self.parts(phi);
        let plus = 1.0 / (1.0 + (-2.0 * signed).exp());
        let s = if rng.random::<f64>() < plus { 1.0 } else { -1.0 };
        Rotation2 { phi, s }
    }
}

/// Matrix BMF Gibbs sampler with running counters.
#[derive(Clone, Debug)]
pub struct BmfGibbs {
    n_inner: usize,
    stats: SweepStats,
}

impl Default for BmfGibbs {
    fn default() -> Self {
        Self::new(1)
    }
}

impl BmfGibbs {
    /// `n_inner` vector sweeps per column visit.
    pub fn new(n_inner: usize) -> Self {
        Self { n_inner: n_inner.max(1), stats: SweepStats::default() }
    }

    pub fn stats(&self) -> SweepStats {
        self.stats
    }

    /// Column-wise sweep; requires `m > R`.
    pub fn sweep<R: Rng + ?Sized>(
        &mut self,
        params: &BMFParams,
        x: &StiefelMatrix,
        rng: &mut R,
    ) -> Result<StiefelMatrix> {
        check_state(params, x)?;
        if x.nrows() == x.ncols() {
            return Err(Error::Reducible(x.nrows()));
        }
        Ok(self.column_sweep(params, x, rng))
    }

    /// Column-wise sweep without the `m > R` check. For `m = R` every column
    /// can only change sign, which is useful only to demonstrate exactly that.
    pub fn single_column_sweep<R: Rng + ?Sized>(
        &mut self,
        params: &BMFParams,
        x: &StiefelMatrix,
        rng: &mut R,
    ) -> Result<StiefelMatrix> {
        check_state(params, x)?;
        Ok(self.column_sweep(params, x, rng))
    }

    fn column_sweep<R: Rng + ?Sized>(&mut self, params: &BMFParams, x: &StiefelMatrix, rng: &mut R) -> StiefelMatrix {
        let r_cols = x.ncols();
        let mut x = x.as_matrix().clone();
        let mut order: Vec<usize> = (0..r_cols).collect();
        order.shuffle(rng);
        for r in order {
            let others = x.clone().remove_column(r);
            let ns = NullSpace::new(&others).expect("R - 1 < m columns");
            let n = ns.basis();
            let a_tilde =
                SymmetricMatrix::new(n.tr_mul(params.a.as_matrix()) * &n * params.b[r]).expect("finite parameters");
            let c_tilde = n.tr_mul(&params.c.column(r));
            let vb = VectorBmf::new(&a_tilde, &c_tilde).expect("consistent dimensions");
            let mut y = vb.to_eigen_coords(&n.tr_mul(&x.column(r)));
            let norm = y.norm();
            y /= norm;
            for _ in 0..self.n_inner {
                vb.sweep_eigen(&mut y, rng, &mut self.stats);
            }
            x.set_column(r, &(&n * vb.from_eigen_coords(&y)));
        }
        StiefelMatrix::new_unchecked(x)
    }

    /// Pair sweep for the square case `m = R ≥ 2`: every unordered pair of
    /// columns, in random order.
    pub fn pair_sweep<R: Rng + ?Sized>(
        &mut self,
        params: &BMFParams,
        x: &StiefelMatrix,
        rng: &mut R,
    ) -> Result<StiefelMatrix> {
        check_state(params, x)?;
        let (m, r_cols) = (x.nrows(), x.ncols());
        if m != r_cols || m < 2 {
            return Err(Error::Dimension(format!("pair update needs m = R >= 2, got m={m}, R={r_cols}")));
        }
        let mut x = x.as_matrix().clone();
        let mut pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))).collect();
        pairs.shuffle(rng);
        for (r1, r2) in pairs {
            let others = x.clone().remove_columns_at(&[r1, r2]);
            let n = NullSpace::new(&others).expect("m - 2 < m columns").basis();
            let na = n.tr_mul(params.a.as_matrix()) * &n;
            let nc1 = n.tr_mul(&params.c.column(r1));
            let nc2 = n.tr_mul(&params.c.column(r2));
            let density = PairDensity {
                a: Matrix2::new(na[(0, 0)], na[(0, 1)], na[(1, 0)], na[(1, 1)]),
                b: [params.b[r1], params.b[r2]],
                c: Matrix2::new(nc1[0], nc2[0], nc1[1], nc2[1]),
            };
            let z = density.sample(rng).matrix();
            let n2 = n.fixed_columns::<2>(0);
            let new = n2 * z;
            x.set_column(r1, &new.column(0));
            x.set_column(r2, &new.column(1));
            self.stats.pair_updates += 1;
        }
        Ok(StiefelMatrix::new_unchecked(x))
    }

    /// Column sweep when `m > R`, pair sweep when `m = R`.
    pub fn sweep_auto<R: Rng + ?Sized>(
        &mut self,
        params: &BMFParams,
        x: &StiefelMatrix,
        rng: &mut R,
    ) -> Result<StiefelMatrix> {
        if x.nrows() == x.ncols() && x.nrows() >= 2 {
            self.pair_sweep(params, x, rng)
        } else {
            self.sweep(params, x, rng)
        }
    }
}

fn check_state(params: &BMFParams, x: &StiefelMatrix) -> Result<()> {
    if x.nrows() != params.nrows() || x.ncols() != params.ncols() {
        return Err(Error::Dimension(format!(
            "state is {}x{} but parameters are {}x{}",
            x.nrows(),
            x.ncols(),
            params.nrows(),
            params.ncols()
        )));
    }
    Ok(())
}

/// One column-wise Gibbs sweep for `BMF(A, B, C)`; `m > R`.
pub fn bmf_matrix_gibbs_sweep<R: Rng + ?Sized>(
    params: &BMFParams,
    x: &StiefelMatrix,
    rng: &mut R,
) -> Result<StiefelMatrix> {
    BmfGibbs::default().sweep(params, x, rng)
}

/// One pair-update sweep for `BMF(A, B, C)`; `m = R`.
pub fn bmf_pair_gibbs_sweep<R: Rng + ?Sized>(
    params: &BMFParams,
    x: &StiefelMatrix,
    rng: &mut R,
) -> Result<StiefelMatrix> {
    BmfGibbs::default().pair_sweep(params, x, rng)
}
