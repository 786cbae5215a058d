use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::vector::{axpy, dot};

/// The linear map `G(X) = [tr(G₁X), …, tr(G_dX)]` over `n × n` symmetric
/// matrices, accessed only through matrix-vector products with the `G_i`.
pub trait MeasurementOperator {
    /// Matrix side `n`.
    fn side(&self) -> usize;

    /// Number of measurements `d`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `out = G_i v`
    fn matvec(&self, i: usize, v: &[f64], out: &mut [f64]);

    /// `out_i = uᵀ G_i u`, i.e. `G(u uᵀ)`. `u` need not be unit length.
    fn gram(&self, u: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; self.side()];
        for (i, o) in out.iter_mut().enumerate() {
            self.matvec(i, u, &mut tmp);
            *o = dot(u, &tmp);
        }
    }

    /// `out = G*(a) v = Σ a_i G_i v`
    fn adjoint_matvec(&self, a: &[f64], v: &[f64], out: &mut [f64]) {
        let mut tmp = vec![0.0; self.side()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &ai) in a.iter().enumerate() {
            if ai != 0.0 {
                self.matvec(i, v, &mut tmp);
                axpy(ai, &tmp, out);
            }
        }
    }
}

impl<T: MeasurementOperator + ?Sized> MeasurementOperator for &T {
    fn side(&self) -> usize {
        (**self).side()
    }
    fn len(&self) -> usize {
        (**self).len()
    }
    fn matvec(&self, i: usize, v: &[f64], out: &mut [f64]) {
        (**self).matvec(i, v, out)
    }
    fn gram(&self, u: &[f64], out: &mut [f64]) {
        (**self).gram(u, out)
    }
    fn adjoint_matvec(&self, a: &[f64], v: &[f64], out: &mut [f64]) {
        (**self).adjoint_matvec(a, v, out)
    }
}

/// Explicitly stored symmetric `G_i`; meant for small instances and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMeasurements {
    n: usize,
    mats: Vec<DMatrix<f64>>,
}

impl DenseMeasurements {
    pub fn new(n: usize, mats: Vec<DMatrix<f64>>) -> Self {
        for m in &mats {
            assert_eq!(m.shape(), (n, n), "measurement matrices must be n × n");
        }
        Self { n, mats }
    }

    /// `d = 1`, `G₁ = I`: the operator `X ↦ tr(X)`.
    pub fn trace(n: usize) -> Self {
        Self::new(n, vec![DMatrix::identity(n, n)])
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }
}

impl MeasurementOperator for DenseMeasurements {
    fn side(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.mats.len()
    }

    fn matvec(&self, i: usize, v: &[f64], out: &mut [f64]) {
        let m = &self.mats[i];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..self.n).map(|c| m[(r, c)] * v[c]).sum();
        }
    }
}

/// `G(X)` for an explicit symmetric `X`, via its eigendecomposition.
pub fn measure_dense<Op: MeasurementOperator + ?Sized>(
    op: &Op,
    x: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let n = op.side();
    let mut out = vec![0.0; op.len()];
    if n == 0 {
        return Ok(out);
    }
    let eig = crate::cones::sym_eigen(n, x.as_slice())?;
    let mut tmp = vec![0.0; op.len()];
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda == 0.0 {
            continue;
        }
        let u: Vec<f64> = eig.eigenvectors.column(j).iter().cloned().collect();
        op.gram(&u, &mut tmp);
        axpy(lambda, &tmp, &mut out);
    }
    Ok(out)
}

/// `G*(a)` materialized as a dense `n × n` matrix.
pub fn adjoint_dense<Op: MeasurementOperator + ?Sized>(op: &Op, a: &[f64]) -> DMatrix<f64> {
    let n = op.side();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.adjoint_matvec(a, &e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = 0.0;
    }
    m
}
