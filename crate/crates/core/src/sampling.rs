//! Seeded random ensembles used by property tests and the oracle checks.
//!
//! Pure states are normalized complex-Gaussian vectors; mixed states are
//! `G G^dagger / Tr(G G^dagger)` for a complex-Gaussian (Ginibre) `G`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::quantum::{eigh, ComplexMatrix, DensityMatrix, Observable, PureState};

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(dim, dim, |_, _| complex_normal(rng))
}

pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PureState {
    loop {
        let amps: Vec<Complex64> = (0..dim).map(|_| complex_normal(rng)).collect();
        if let Ok(psi) = PureState::normalized(amps) {
            return psi;
        }
    }
}

pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, rng);
    DensityMatrix::from_unnormalized(&g * g.adjoint()).expect("G G^dagger is a valid state")
}

/// Gaussian unitary ensemble member (Hermitian, not normalized).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    (&g + g.adjoint()) * Complex64::from(0.5)
}

/// Haar-random unitary, taken as the eigenbasis of a GUE matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let (_, vectors) = eigh(&random_hermitian(dim, rng)).expect("GUE matrices are Hermitian");
    vectors
}

/// Random dichotomic observable: the sign of the spectrum of a GUE matrix.
///
/// If every eigenvalue has the same sign, the one closest to zero is
/// flipped, so the result always has both `+1` and `-1` in its spectrum
/// (for `dim >= 2`).
pub fn random_dichotomic<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Observable {
    let (values, vectors) = eigh(&random_hermitian(dim, rng)).expect("GUE matrices are Hermitian");
    let mut signs: Vec<f64> = values.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
    if dim >= 2 && signs.iter().all(|&s| s == signs[0]) {
        let k = (0..dim)
            .min_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()))
            .unwrap();
        signs[k] = -signs[k];
    }
    let signs = DMatrix::from_fn(dim, dim, |r, c| {
        Complex64::from(if r == c { signs[r] } else { 0.0 })
    });
    let m = &vectors * signs * vectors.adjoint();
    let m = (&m + m.adjoint()) * Complex64::from(0.5);
    Observable::new(m).expect("unitary conjugate of a sign matrix is dichotomic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::eigenvalues;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ensembles_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 4, 8] {
            let rho = random_density(d, &mut rng);
            assert_eq!(rho.dim(), d);
            let psi = random_pure_state(d, &mut rng);
            assert!((psi.amplitudes().norm_squared() - 1.0).abs() < 1e-12);
            let obs = random_dichotomic(d, &mut rng);
            assert!(!obs.is_trivial());
            let ev = eigenvalues(obs.matrix()).unwrap();
            assert!(ev.iter().all(|v| (v.abs() - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn seeded_reproducibility() {
        let a = random_density(4, &mut ChaCha8Rng::seed_from_u64(11));
        let b = random_density(4, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }
}
