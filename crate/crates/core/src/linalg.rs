//! Dense linear solves backing policy evaluation and occupancy.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) type Matrix = DMatrix<f64>;

pub(crate) fn identity(n: usize) -> Matrix {
    DMatrix::identity(n, n)
}

/// Solves `a x = rhs` by LU with partial pivoting.
pub(crate) fn solve(a: Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    let x = a.lu().solve(&b).ok_or(Error::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(x.iter().copied().collect())
}
