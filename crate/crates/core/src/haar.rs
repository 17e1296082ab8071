//! Random group elements: Haar-distributed orthogonal matrices and the
//! unitary / general-linear probes used by the invariance diagnostics.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::linalg::{OrthogonalMatrix, C64};

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal))
}

/// Draws `A` from Haar measure on `O(n)`.
///
/// QR of a standard Gaussian matrix, with the signs of `diag(R)` moved into `Q`.
/// Without the sign fix the law of `Q` depends on the QR convention and is not Haar.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> OrthogonalMatrix {
    assert!(n >= 1, "dimension must be positive");
    loop {
        let g = gaussian_matrix(n, rng);
        let qr = g.qr();
        let r = qr.r();
        let scale = r.amax();
        if (0..n).any(|j| r[(j, j)].abs() <= 1e-12 * scale) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        if let Ok(a) = OrthogonalMatrix::new(q) {
            return a;
        }
    }
}

/// A random unitary matrix `A · diag(e^{iθ_j})` with `A` Haar on `O(n)` and independent phases.
///
/// Not Haar on `U(n)`; it is only meant as a probe for `U(n)`-invariance identities.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let a = haar_orthogonal(n, rng).into_inner();
    let phase = Uniform::new(0.0, std::f64::consts::TAU).expect("valid range");
    let d: Vec<C64> = (0..n).map(|_| C64::from_polar(1.0, rng.sample(phase))).collect();
    DMatrix::from_fn(n, n, |j, k| a[(j, k)] * d[k])
}

/// A Gaussian matrix in `GL(n, ℝ)`, redrawn until `|det| >= 0.1`.
pub fn random_gl<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let g = gaussian_matrix(n, rng);
        if g.determinant().abs() >= 0.1 {
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_dimensional_group_is_plus_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = [false; 2];
        for _ in 0..64 {
            let a = haar_orthogonal(1, &mut rng).into_inner()[(0, 0)];
            assert!(a == 1.0 || a == -1.0);
            seen[(a > 0.0) as usize] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn determinant_signs_are_balanced() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        let mut pos = 0;
        for _ in 0..trials {
            let a = haar_orthogonal(3, &mut rng);
            let d = a.determinant();
            assert!((d.abs() - 1.0).abs() < 1e-10);
            assert!(a.orthogonality_defect() <= 1e-12);
            pos += (d > 0.0) as usize;
        }
        let freq = pos as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "frequency of det = +1 was {freq}");
    }

    #[test]
    fn unitary_probe_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unitary(3, &mut rng);
        let defect = (u.adjoint() * &u - DMatrix::<C64>::identity(3, 3)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(defect < 1e-12);
    }

    #[test]
    fn gl_probe_is_well_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            assert!(random_gl(2, &mut rng).determinant().abs() >= 0.1);
        }
    }
}
