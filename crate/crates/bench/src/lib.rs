//! Fixtures shared by the benchmarks.

use bmfsim::linalg::{StiefelMatrix, SymmetricMatrix};
use bmfsim::BMFParams;
use nalgebra::{DMatrix, DVector};

/// `BMF(A, B, C)` on `m × r` with a fixed, well-spread spectrum.
pub fn bmf_fixture(m: usize, r: usize) -> (BMFParams, StiefelMatrix) {
    let a = DMatrix::from_fn(m, m, |i, j| ((i * 7 + j * 7 + i * j) % 11) as f64 / 5.0 - 1.0);
    let a = SymmetricMatrix::new((&a + a.transpose()) / 2.0).expect("symmetric");
    let b = DVector::from_fn(r, |k, _| (r - k) as f64);
    let c = DMatrix::from_fn(m, r, |i, k| if i == k { 2.0 } else { 0.0 });
    let params = BMFParams::new(a, b, c).expect("valid parameters");
    (params, StiefelMatrix::identity(m, r).expect("r <= m"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_valid() {
        for (m, r) in [(4, 4), (30, 3)] {
            let (p, x) = bmf_fixture(m, r);
            assert_eq!((p.nrows(), p.ncols()), (m, r));
            assert!(p.a().asymmetry() == 0.0);
            assert!(p.log_density(&x).is_finite());
        }
    }
}
