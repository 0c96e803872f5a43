//! Dense materialization of matrix-free operators, used for exact
//! diagonalization and as an independent reference at small sizes.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;

/// Largest chain that is ever materialized densely (4096 x 4096).
pub const MAX_DENSE_SITES: usize = 12;

fn sites_of(dim: usize) -> usize {
    dim.trailing_zeros() as usize
}

/// Builds the dense matrix column by column by applying `op` to basis vectors.
pub fn materialize<O: LinearOperator + ?Sized>(op: &O) -> Result<Mat<Complex64>> {
    let dim = op.dim();
    let sites = sites_of(dim);
    if sites > MAX_DENSE_SITES {
        return Err(Error::TooLargeForDense {
            sites,
            limit: MAX_DENSE_SITES,
        });
    }
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    let mut e = vec![Complex64::new(0.0, 0.0); dim];
    let mut col = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = Complex64::new(1.0, 0.0);
        op.apply_into(&e, &mut col);
        e[j] = Complex64::new(0.0, 0.0);
        for (i, z) in col.iter().enumerate() {
            m[(i, j)] = *z;
        }
    }
    Ok(m)
}

/// Largest entrywise deviation of `m` from its conjugate transpose.
pub fn hermiticity_defect(m: &Mat<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(m: &Mat<Complex64>) -> f64 {
    m.norm_l2()
}

pub fn matvec(m: &Mat<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let n = m.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..m.ncols() {
        let x = v[j];
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[(i, j)] * x;
        }
    }
    out
}

/// Eigendecomposition `H = V diag(values) V^dagger` of a dense Hermitian matrix.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Mat<Complex64>,
}

impl HermitianEigen {
    pub fn new(m: &Mat<Complex64>) -> Result<Self> {
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let values = (0..m.nrows()).map(|k| s[k].re).collect();
        Ok(Self {
            values,
            vectors: evd.U().to_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(Lambda) V^dagger` for a complex spectral function `f`.
    pub fn function(&self, f: impl Fn(f64) -> Complex64) -> Mat<Complex64> {
        let n = self.dim();
        let scaled = Mat::<Complex64>::from_fn(n, n, |i, k| self.vectors[(i, k)] * f(self.values[k]));
        &scaled * self.vectors.adjoint()
    }

    /// Dense propagator `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> Mat<Complex64> {
        self.function(|e| Complex64::new(0.0, -e * t).exp())
    }

    /// `|| H - V Lambda V^dagger ||_F`
    pub fn reconstruction_error(&self, m: &Mat<Complex64>) -> f64 {
        let r = self.function(|e| Complex64::new(e, 0.0));
        (&r - m).norm_l2()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{Pauli, PauliString, PauliTermSum};

    #[test]
    fn materialize_single_x() {
        let x = PauliTermSum::new(1, [(0.5, PauliString::single(0, Pauli::X))]).unwrap();
        let m = materialize(&x).unwrap();
        assert_eq!(m[(0, 1)], Complex64::new(0.5, 0.0));
        assert_eq!(m[(1, 0)], Complex64::new(0.5, 0.0));
        assert_eq!(m[(0, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn eigen_of_field() {
        let x = PauliTermSum::new(1, [(0.21, PauliString::single(0, Pauli::X))]).unwrap();
        let e = HermitianEigen::new(&materialize(&x).unwrap()).unwrap();
        assert!((e.values[0] + 0.21).abs() < 1e-15);
        assert!((e.values[1] - 0.21).abs() < 1e-15);
    }

    #[test]
    fn refuses_large_systems() {
        let z = PauliTermSum::new(13, [(1.0, PauliString::single(0, Pauli::Z))]).unwrap();
        assert!(matches!(materialize(&z), Err(Error::TooLargeForDense { .. })));
    }
}
