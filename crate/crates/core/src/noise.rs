//! Source and detector noise: the depolarized Bell pair and Alice's lossy
//! two-outcome measurement with the null outcome mapped to `-1`.

use num_complex::Complex64;

use crate::error::{check_range, Error, Result};
use crate::quantum::{
    eigenvalues, hermiticity_error, identity, max_abs_diff, tensor, ComplexMatrix, DensityMatrix,
    Observable, HERMITIAN_TOL, PSD_TOL,
};
use crate::steering::BellState;

/// `nu |Phi+><Phi+| + (1 - nu) I/4`.
pub fn werner(nu: f64) -> Result<DensityMatrix> {
    check_range("nu", nu, 0.0, 1.0)?;
    let m = BellState::PhiPlus.vector().density().into_matrix() * Complex64::from(nu)
        + identity(4) * Complex64::from((1.0 - nu) / 4.0);
    DensityMatrix::new(m)
}

/// Completeness tolerance `|E+ + E- - I|`.
pub const COMPLETENESS_TOL: f64 = 1e-12;

/// Two-outcome POVM `{E+, E-}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryPovm {
    e_plus: ComplexMatrix,
    e_minus: ComplexMatrix,
}

impl BinaryPovm {
    pub fn new(e_plus: ComplexMatrix, e_minus: ComplexMatrix) -> Result<Self> {
        if e_plus.shape() != e_minus.shape() || !e_plus.is_square() {
            return Err(Error::DimensionMismatch {
                expected: e_plus.nrows(),
                found: e_minus.nrows(),
            });
        }
        for e in [&e_plus, &e_minus] {
            let herm = hermiticity_error(e);
            if herm > HERMITIAN_TOL {
                return Err(Error::NotHermitian(herm));
            }
            let min = eigenvalues(e)?.last().copied().unwrap_or(0.0);
            if min < -PSD_TOL {
                return Err(Error::InvalidState(format!(
                    "POVM element has eigenvalue {min:e}"
                )));
            }
        }
        let completeness = max_abs_diff(&(&e_plus + &e_minus), &identity(e_plus.nrows()));
        if completeness > COMPLETENESS_TOL {
            return Err(Error::InvalidState(format!(
                "POVM elements sum to identity only within {completeness:e}"
            )));
        }
        Ok(Self { e_plus, e_minus })
    }

    /// Projective measurement of a dichotomic observable.
    pub fn projective(obs: &Observable) -> Self {
        let (plus, minus) = obs.projectors();
        Self {
            e_plus: plus,
            e_minus: minus,
        }
    }

    pub fn e_plus(&self) -> &ComplexMatrix {
        &self.e_plus
    }

    pub fn e_minus(&self) -> &ComplexMatrix {
        &self.e_minus
    }

    pub fn element(&self, outcome_plus: bool) -> &ComplexMatrix {
        if outcome_plus {
            &self.e_plus
        } else {
            &self.e_minus
        }
    }

    pub fn dim(&self) -> usize {
        self.e_plus.nrows()
    }

    /// `E+ - E-`, whose expectation is the mean of the `+-1` outcome.
    pub fn outcome_operator(&self) -> ComplexMatrix {
        &self.e_plus - &self.e_minus
    }
}

/// `{eta E+, eta E- + (1 - eta) I}`: a click fails with probability
/// `1 - eta` and the null outcome is reported as `-1`.
pub fn lossy_povm(ideal: &BinaryPovm, eta: f64) -> Result<BinaryPovm> {
    check_range("eta", eta, 0.0, 1.0)?;
    let id = identity(ideal.dim());
    BinaryPovm::new(
        ideal.e_plus() * Complex64::from(eta),
        ideal.e_minus() * Complex64::from(eta) + id * Complex64::from(1.0 - eta),
    )
}

/// `<(A+ - A-) (x) (B+ - B-)>` for two-outcome POVMs on each side.
pub fn correlator(rho: &DensityMatrix, alice: &BinaryPovm, bob: &BinaryPovm) -> Result<f64> {
    rho.expectation(&tensor(&alice.outcome_operator(), &bob.outcome_operator()))
}

/// Probability that the two `+-1` outcomes differ.
pub fn disagreement_probability(
    rho: &DensityMatrix,
    alice: &BinaryPovm,
    bob: &BinaryPovm,
) -> Result<f64> {
    let p_pm = rho.expectation(&tensor(alice.e_plus(), bob.e_minus()))?;
    let p_mp = rho.expectation(&tensor(alice.e_minus(), bob.e_plus()))?;
    Ok(p_pm + p_mp)
}

/// CJWR value `|sum_i <A_i (x) B_i>| / sqrt(n)` with general two-outcome
/// measurements on both sides.
pub fn povm_cjwr_value(rho: &DensityMatrix, alice: &[BinaryPovm], bob: &[BinaryPovm]) -> Result<f64> {
    if alice.len() != bob.len() || alice.is_empty() {
        return Err(Error::InvalidSettings(format!(
            "{} Alice settings vs {} Bob settings",
            alice.len(),
            bob.len()
        )));
    }
    let mut sum = 0.0;
    for (a, b) in alice.iter().zip(bob) {
        sum += correlator(rho, a, b)?;
    }
    Ok(sum.abs() / (alice.len() as f64).sqrt())
}
