//! Exact matrix permanent via the Ryser formula with Gray-code updates.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Permanent of a square complex matrix, exact in O(2ⁿ·n).
///
/// Ryser's inclusion–exclusion over column subsets,
/// `perm(A) = (−1)ⁿ Σ_{S≠∅} (−1)^{|S|} Πᵢ Σ_{j∈S} aᵢⱼ`,
/// walked in Gray-code order so each subset update touches one column.
/// The empty matrix has permanent 1.
pub fn permanent(m: &CMat) -> Result<Complex64> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "permanent requires a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if n > 30 {
        return Err(Error::InvalidArgument(format!(
            "permanent of a {n}x{n} matrix is out of reach for the Ryser sweep"
        )));
    }

    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut popcount: i32 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let gray = k ^ (k >> 1);
        if gray & (1 << j) != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += m[(i, j)];
            }
            popcount += 1;
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= m[(i, j)];
            }
            popcount -= 1;
        }
        let mut prod = Complex64::new(1.0, 0.0);
        for rs in &row_sums {
            prod *= *rs;
        }
        if (n as i32 - popcount) % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}
