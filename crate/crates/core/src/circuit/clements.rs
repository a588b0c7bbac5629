//! Rectangular mesh decomposition of a unitary into nearest-neighbour
//! two-mode rotations plus an output phase layer.

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{ensure_unitary, CMat};

use super::{CircuitSpec, PhaseLayer, TwoModeElement};

pub const DECOMPOSE_UNITARITY_TOL: f64 = 1e-10;

/// Factorizes `U = D · T₁ · … · T_Q` with exactly `Q = d(d−1)/2` elements on
/// nearest-neighbour mode pairs, by alternately nulling anti-diagonals of the
/// lower triangle from the right (column mixes) and from the left (row
/// mixes), then commuting the left factors through the final diagonal.
///
/// The commute step uses `T(θ,φ)† · D = D' · T(θ,φ')` with
/// `d'_n = −e^{−iφ} d_m`, `d'_m = d_m`, `e^{iφ'} = −d_n / d_m`, which keeps
/// `θ` and the mode pair and only rewrites phases.
pub fn clements_decompose(u: &CMat) -> Result<CircuitSpec> {
    ensure_unitary(u, DECOMPOSE_UNITARITY_TOL)?;
    let d = u.nrows();
    let mut w = u.clone();
    // Chronological lists: `left[i]` was applied to the left of `w` after
    // `left[i-1]`; `right[i]`'s inverse was applied to the right after
    // `right[i-1]`'s.
    let mut left: Vec<TwoModeElement> = Vec::new();
    let mut right: Vec<TwoModeElement> = Vec::new();

    for sweep in 0..d.saturating_sub(1) {
        if sweep % 2 == 0 {
            // Null (d−1−j, sweep−j) by mixing columns (c, c+1) from the right.
            for j in 0..=sweep {
                let row = d - 1 - j;
                let col = sweep - j;
                let a = w[(row, col)];
                let b = w[(row, col + 1)];
                let (theta, phi) = if a.norm() < 1e-300 && b.norm() < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (a.norm().atan2(b.norm()), (a * b.conj()).arg())
                };
                let (c_, s_) = (theta.cos(), theta.sin());
                let em = Complex64::from_polar(1.0, -phi);
                for r in 0..d {
                    let x = w[(r, col)];
                    let y = w[(r, col + 1)];
                    w[(r, col)] = em * c_ * x - s_ * y;
                    w[(r, col + 1)] = em * s_ * x + c_ * y;
                }
                right.push(TwoModeElement {
                    theta,
                    phi,
                    modes: (col, col + 1),
                });
            }
        } else {
            // Null (d−1−sweep+j, j) by mixing rows (r−1, r) from the left.
            for j in 0..=sweep {
                let row = d - 1 - sweep + j;
                let col = j;
                let a = w[(row - 1, col)];
                let b = w[(row, col)];
                let (theta, phi) = if a.norm() < 1e-300 && b.norm() < 1e-300 {
                    (0.0, 0.0)
                } else if b.norm() < 1e-300 {
                    (0.0, 0.0)
                } else {
                    (b.norm().atan2(a.norm()), (-b * a.conj()).arg())
                };
                let (c_, s_) = (theta.cos(), theta.sin());
                let ep = Complex64::from_polar(1.0, phi);
                for cc in 0..d {
                    let x = w[(row - 1, cc)];
                    let y = w[(row, cc)];
                    w[(row - 1, cc)] = ep * c_ * x - s_ * y;
                    w[(row, cc)] = ep * s_ * x + c_ * y;
                }
                left.push(TwoModeElement {
                    theta,
                    phi,
                    modes: (row - 1, row),
                });
            }
        }
    }

    // `w` is now diagonal up to round-off; its diagonal is the phase layer.
    let mut dvec: Vec<Complex64> = (0..d)
        .map(|i| {
            let z = w[(i, i)];
            let r = z.norm();
            if r < 1e-300 {
                Complex64::new(1.0, 0.0)
            } else {
                z / r
            }
        })
        .collect();

    // U = L₁†…L_p† · D · T_{Rq} … T_{R1}; commute each L† (innermost first)
    // through the running diagonal.
    let mut pushed: Vec<TwoModeElement> = Vec::with_capacity(left.len());
    for l in left.iter().rev() {
        let (n, m) = l.modes;
        let dn = dvec[n];
        let dm = dvec[m];
        let phi_new = (-dn / dm).arg();
        dvec[n] = -Complex64::from_polar(1.0, -l.phi) * dm;
        pushed.push(TwoModeElement {
            theta: l.theta,
            phi: phi_new,
            modes: l.modes,
        });
    }
    pushed.reverse();

    let mut elements = pushed;
    elements.extend(right.into_iter().rev());

    CircuitSpec::new(d, elements, PhaseLayer::new(dvec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{compose, count_nontrivial, element_matrix, TRIVIAL_ELEMENT_TOL};
    use crate::linalg::{frobenius_distance, identity};
    use crate::optimizer::haar_random_unitary;

    #[test]
    fn identity_decomposes_to_trivial_elements() {
        let spec = clements_decompose(&identity(5)).unwrap();
        assert_eq!(spec.elements.len(), 10);
        assert_eq!(count_nontrivial(&spec, TRIVIAL_ELEMENT_TOL), 0);
        assert!(frobenius_distance(&compose(&spec), &identity(5)) < 1e-12);
    }

    #[test]
    fn two_by_two_exact() {
        for seed in 0..20 {
            let u = haar_random_unitary(2, seed);
            let spec = clements_decompose(&u).unwrap();
            assert_eq!(spec.elements.len(), 1);
            assert!(frobenius_distance(&compose(&spec), &u) < 1e-12);
        }
    }

    #[test]
    fn haar_round_trip_small_dims() {
        for d in 2..=7 {
            for seed in 0..6 {
                let u = haar_random_unitary(d, 1000 * d as u64 + seed);
                let spec = clements_decompose(&u).unwrap();
                assert_eq!(spec.elements.len(), d * (d - 1) / 2);
                let err = frobenius_distance(&compose(&spec), &u);
                assert!(err < 1e-10, "d={d} seed={seed}: residual {err:.2e}");
            }
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let mut m = identity(3);
        m[(0, 0)] = num_complex::Complex64::new(1.5, 0.0);
        assert!(clements_decompose(&m).is_err());
    }

    #[test]
    fn commute_identity_holds() {
        // T(θ,φ)† D = D' T(θ,φ') with the documented phase rewrites.
        let theta = 0.7;
        let phi = -1.3;
        let d1 = Complex64::from_polar(1.0, 0.9);
        let d2 = Complex64::from_polar(1.0, -2.2);
        let t = element_matrix(&TwoModeElement::new(theta, phi, 0, 1).unwrap(), 2).unwrap();
        let mut dm = identity(2);
        dm[(0, 0)] = d1;
        dm[(1, 1)] = d2;
        let lhs = t.adjoint() * &dm;

        let phi_new = (-d1 / d2).arg();
        let t_new = element_matrix(&TwoModeElement::new(theta, phi_new, 0, 1).unwrap(), 2).unwrap();
        let mut dnew = identity(2);
        dnew[(0, 0)] = -Complex64::from_polar(1.0, -phi) * d2;
        dnew[(1, 1)] = d2;
        let rhs = dnew * t_new;
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
