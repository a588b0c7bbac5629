//! Haar-distributed random unitaries.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::linalg::CMat;

/// QR-based Haar sample: a complex Ginibre matrix is QR-factorized and `Q`
/// is corrected by the phases of `R`'s diagonal so the distribution is
/// right-invariant. Deterministic for a given seed.
pub fn haar_random_unitary(dim: usize, seed: u64) -> CMat {
    assert!(dim >= 1, "haar_random_unitary requires dim >= 1");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g = CMat::from_fn(dim, dim, |_, _| {
        Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng))
            * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, k)] *= phase;
        }
    }
    q
}

/// Box–Muller transform over the ChaCha stream.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_deviation;

    #[test]
    fn samples_are_unitary() {
        for dim in [1, 2, 5, 10] {
            let u = haar_random_unitary(dim, 99 + dim as u64);
            assert!(unitarity_deviation(&u) < 1e-12, "dim {dim}");
        }
    }

    #[test]
    fn same_seed_same_matrix() {
        let a = haar_random_unitary(6, 1234);
        let b = haar_random_unitary(6, 1234);
        assert_eq!(a, b);
        let c = haar_random_unitary(6, 1235);
        assert!((a - c).norm() > 1e-3);
    }

    #[test]
    fn dim_one_is_uniform_phase() {
        let n = 10_000;
        let mut mean = Complex64::new(0.0, 0.0);
        for seed in 0..n {
            let u = haar_random_unitary(1, seed);
            let z = u[(0, 0)];
            assert!((z.norm() - 1.0).abs() < 1e-12);
            mean += z;
        }
        mean /= n as f64;
        assert!(
            mean.norm() < 0.05,
            "phase mean {mean} too far from the origin"
        );
    }
}
