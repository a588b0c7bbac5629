//! Complex matrix aliases, checks and JSON interchange.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const C_I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

/// Frobenius norm of `U† U − I`.
pub fn unitarity_deviation(u: &CMat) -> f64 {
    let dim = u.nrows();
    (u.adjoint() * u - identity(dim)).norm()
}

pub fn ensure_square(u: &CMat, what: &str) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: expected square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_unitary(u: &CMat, tolerance: f64) -> Result<()> {
    ensure_square(u, "unitarity check")?;
    let deviation = unitarity_deviation(u);
    if deviation > tolerance {
        return Err(Error::NotUnitary {
            deviation,
            tolerance,
        });
    }
    Ok(())
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Max absolute entry of `H − H†`.
pub fn hermitian_deviation(h: &CMat) -> f64 {
    max_abs(&(h - h.adjoint()))
}

pub fn frobenius_distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// Row-major JSON form of a complex matrix: `{"dim": d, "data": [[re, im], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let dim = m.nrows();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..m.ncols() {
                data.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        MatrixJson { dim, data }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat> {
        if self.data.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix JSON: dim {} needs {} entries, got {}",
                self.dim,
                self.dim * self.dim,
                self.data.len()
            )));
        }
        Ok(CMat::from_fn(self.dim, self.dim, |r, c| {
            let [re, im] = self.data[r * self.dim + c];
            Complex64::new(re, im)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_json_round_trip() {
        let m = CMat::from_fn(3, 3, |r, c| Complex64::new(r as f64, c as f64));
        let j = MatrixJson::from(&m);
        let back = j.to_matrix().unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn identity_is_unitary() {
        assert!(unitarity_deviation(&identity(4)) < 1e-15);
    }
}
