//! Dense linear algebra on the Stiefel manifold.
//!
//! The samplers only ever need a handful of factorizations: a symmetric
//! eigendecomposition, a thin SVD and an orthonormal complement ("null space")
//! of a set of orthonormal columns. Eigen/singular values come back in
//! descending order with ties kept in input order, so everything downstream is
//! deterministic for a fixed RNG stream.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Numerical tolerances shared by the crate.
pub mod tol {
    /// `‖XᵀX − I‖_F` allowed when constructing a [`StiefelMatrix`](super::StiefelMatrix).
    pub const ORTHONORMAL: f64 = 1e-10;
    /// Relative Frobenius error allowed when a factorization reconstructs its input.
    pub const RECONSTRUCTION: f64 = 1e-8;
    /// Max-norm asymmetry left after symmetrization.
    pub const SYMMETRY: f64 = 1e-12;
    /// Squared mass below which the remaining coordinates of a unit vector are
    /// treated as numerically zero.
    pub const DEGENERATE_MASS: f64 = 1e-14;
}

/// Frobenius norm of `XᵀX − I`.
pub fn orthonormality_error(x: &DMatrix<f64>) -> f64 {
    let r = x.ncols();
    (x.transpose() * x - DMatrix::<f64>::identity(r, r)).norm()
}

/// An `m × R` real matrix with orthonormal columns, `1 ≤ R ≤ m`.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelMatrix(DMatrix<f64>);

impl StiefelMatrix {
    /// Validates orthonormality to [`tol::ORTHONORMAL`].
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let (m, r) = data.shape();
        if r == 0 || r > m {
            return Err(Error::Dimension(format!("Stiefel matrix needs 1 <= R <= m, got {m}x{r}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Stiefel matrix entries".into()));
        }
        let err = orthonormality_error(&data);
        if err > tol::ORTHONORMAL {
            return Err(Error::Domain(format!("columns are not orthonormal: ||X^T X - I||_F = {err:e}")));
        }
        Ok(Self(data))
    }

    /// Wraps a matrix the caller has constructed to be orthonormal.
    pub(crate) fn new_unchecked(data: DMatrix<f64>) -> Self {
        debug_assert!(data.ncols() >= 1 && data.ncols() <= data.nrows());
        Self(data)
    }

    /// The first `r` columns of the `m × m` identity.
    pub fn identity(m: usize, r: usize) -> Result<Self> {
        Self::new(DMatrix::identity(m, r))
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.0)
    }
}

/// A real symmetric matrix stored as a full square.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    /// Symmetrizes the input as `(M + Mᵀ)/2`; `xᵀMx` is unchanged by this.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("symmetric matrix entries".into()));
        }
        let sym = (&data + data.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn zeros(m: usize) -> Self {
        Self(DMatrix::zeros(m, m))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    /// `‖M − Mᵀ‖_∞` (entrywise max).
    pub fn asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).amax()
    }

    /// Eigendecomposition with eigenvalues in descending order.
    pub fn eigen(&self) -> SpectralDecomp {
        let eig = nalgebra::SymmetricEigen::new(self.0.clone());
        let order = descending_order(eig.eigenvalues.as_slice());
        let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = eig.eigenvectors.select_columns(&order);
        SpectralDecomp { vectors: StiefelMatrix::new_unchecked(vectors), values }
    }
}

/// `A = E Λ Eᵀ` with `Λ` descending.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub vectors: StiefelMatrix,
    pub values: DVector<f64>,
}

impl SpectralDecomp {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let e = self.vectors.as_matrix();
        e * DMatrix::from_diagonal(&self.values) * e.transpose()
    }
}

/// Thin SVD `C = U D Vᵀ` of an `m × R` matrix (`R ≤ m`), `D` descending.
#[derive(Clone, Debug)]
pub struct SvdDecomp {
    pub u: DMatrix<f64>,
    pub d: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdDecomp {
    pub fn new(c: &DMatrix<f64>) -> Result<Self> {
        let (m, r) = c.shape();
        if r == 0 || r > m {
            return Err(Error::Dimension(format!("SVD input must be m x R with 1 <= R <= m, got {m}x{r}")));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SVD input".into()));
        }
        let svd = c.clone().svd(true, true);
        let u = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^T");
        let order = descending_order(svd.singular_values.as_slice());
        let d = DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i]));
        let u = u.select_columns(&order);
        let v = v_t.transpose().select_columns(&order);
        Ok(Self { u, d, v })
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.d) * self.v.transpose()
    }
}

/// Stable descending order: equal values keep their input order.
fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Householder factorization of a set of columns, used to work in their
/// orthogonal complement without materializing it.
///
/// With `Q = H₀ H₁ ⋯ H_{k−1}` the full orthogonal factor of `X` (`m × k`),
/// the complement basis is `N = Q[:, k..m]`, so `Nᵀh = (Qᵀh)[k..]` and
/// `Nz = Q [0; z]`.
#[derive(Clone, Debug)]
pub struct NullSpace {
    m: usize,
    k: usize,
    // Reflector j acts on rows j..m; `None` when the column was already zero.
    reflectors: Vec<Option<DVector<f64>>>,
}

impl NullSpace {
    /// Complement of the columns of `x` (`k = 0` gives the whole space).
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        let (m, k) = x.shape();
        if k >= m {
            return Err(Error::Dimension(format!("null space needs fewer columns than rows, got {m}x{k}")));
        }
        let mut work = x.clone();
        let mut reflectors = Vec::with_capacity(k);
        for j in 0..k {
            let mut v: DVector<f64> = work.view((j, j), (m - j, 1)).column(0).into_owned();
            let norm = v.norm();
            if norm == 0.0 {
                reflectors.push(None);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = v.norm();
            if vnorm == 0.0 {
                reflectors.push(None);
                continue;
            }
            v /= vnorm;
            for c in j..k {
                let mut col = work.view_mut((j, c), (m - j, 1));
                let mut col = col.column_mut(0);
                let s = v.dot(&col);
                col.axpy(-2.0 * s, &v, 1.0);
            }
            reflectors.push(Some(v));
        }
        Ok(Self { m, k, reflectors })
    }

    /// Dimension of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        self.m
    }

    /// Dimension `m − k` of the complement.
    pub fn dim(&self) -> usize {
        self.m - self.k
    }

    fn reflect(&self, j: usize, y: &mut DVector<f64>) {
        if let Some(v) = &self.reflectors[j] {
            let mut tail = y.rows_mut(j, self.m - j);
            let s = v.dot(&tail);
            tail.axpy(-2.0 * s, v, 1.0);
        }
    }

    /// Coordinates `Nᵀh` of `h` in the complement basis.
    pub fn project(&self, h: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(h.len(), self.m);
        let mut y = h.clone();
        for j in 0..self.k {
            self.reflect(j, &mut y);
        }
        y.rows(self.k, self.m - self.k).into_owned()
    }

    /// Maps complement coordinates back: returns `Nz`.
    pub fn embed(&self, z: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(z.len(), self.dim());
        let mut y = DVector::zeros(self.m);
        y.rows_mut(self.k, self.m - self.k).copy_from(z);
        for j in (0..self.k).rev() {
            self.reflect(j, &mut y);
        }
        y
    }

    /// The explicit `m × (m − k)` basis `N`.
    pub fn basis(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut n = DMatrix::zeros(self.m, dim);
        let mut e = DVector::zeros(dim);
        for c in 0..dim {
            e[c] = 1.0;
            n.set_column(c, &self.embed(&e));
            e[c] = 0.0;
        }
        n
    }
}

/// Orthonormal basis `N` (`m × (m−k)`) of the complement of the columns of `x`.
///
/// `NᵀN = I` and `NᵀX = 0`; the basis is only unique up to rotation.
pub fn null_space_basis(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() == 0 {
        return Err(Error::Dimension("null space of an empty column set".into()));
    }
    Ok(NullSpace::new(x)?.basis())
}

/// Uniform draw on the unit sphere in `ℝᵐ` (a normalized Gaussian vector).
pub fn sample_uniform_sphere<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<DVector<f64>> {
    if m == 0 {
        return Err(Error::Dimension("sphere dimension must be >= 1".into()));
    }
    loop {
        let g = DVector::<f64>::from_fn(m, |_, _| rng.sample(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 && norm.is_finite() {
            return Ok(g / norm);
        }
    }
}

/// Uniform (Haar) draw on `V_{R,m}`: QR of a Gaussian matrix with the signs of
/// `diag(R)` folded into `Q`.
pub fn sample_uniform_stiefel<R: Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> Result<StiefelMatrix> {
    if r == 0 || r > m {
        return Err(Error::Dimension(format!("uniform Stiefel draw needs 1 <= R <= m, got m={m}, R={r}")));
    }
    loop {
        let g = DMatrix::<f64>::from_fn(m, r, |_, _| rng.sample(StandardNormal));
        let qr = g.qr();
        let rr = qr.r();
        if (0..r).any(|i| rr[(i, i)] == 0.0) {
            continue;
        }
        let mut q = qr.q();
        for (i, mut col) in q.column_iter_mut().enumerate() {
            if rr[(i, i)] < 0.0 {
                col.neg_mut();
            }
        }
        return Ok(StiefelMatrix::new_unchecked(q));
    }
}
