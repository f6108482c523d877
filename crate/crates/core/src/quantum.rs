//! Dense complex linear algebra for few-qubit systems.
//!
//! Everything here works on small `DMatrix<Complex64>` operators (dimension
//! 2 to 16 in practice): Pauli matrices, Kronecker products, expectation
//! values, Hermitian spectra, von Neumann entropy, partial traces and
//! spectral purification.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Entrywise tolerance for `M == M^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr(rho) - 1|` and on pure-state norms.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted for a positive semidefinite operator.
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance for spectrum assertions and eigen-reconstruction.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// Largest imaginary residue tolerated in an expectation value.
pub const IMAG_TOL: f64 = 1e-10;
/// Entrywise tolerance for `A^2 == I` on dichotomic observables.
pub const DICHOTOMIC_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

pub fn pauli(axis: Axis) -> ComplexMatrix {
    match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// `n . sigma` for a real 3-vector `n`.
pub fn pauli_direction(n: [f64; 3]) -> ComplexMatrix {
    Axis::ALL
        .iter()
        .map(|&a| pauli(a) * Complex64::from(n[a.index()]))
        .fold(DMatrix::zeros(2, 2), |acc, m| acc + m)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    DMatrix::identity(dim, dim)
}

/// Kronecker product `a (x) b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

/// Largest entrywise `|m - m^dagger|`.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitian eigendecomposition with eigenvalues sorted in descending order.
///
/// Returns the eigenvalues and a unitary whose columns are the matching
/// eigenvectors.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let herm_err = hermiticity_error(m);
    if herm_err > HERMITIAN_TOL.max(1e-12 * m.norm()) {
        return Err(Error::NotHermitian(herm_err));
    }
    // symmetrize away the rounding residue before handing the lower triangle over
    let sym = (m + m.adjoint()) * Complex64::from(0.5);
    let eig = sym.symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Real spectrum of a Hermitian matrix, sorted descending.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    eigh(m).map(|(values, _)| values)
}

/// Shannon entropy in bits of a probability vector, with `0 log 0 = 0`.
///
/// Tiny negative entries produced by rounding are treated as zero.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Square-root-of-spectrum purification on `system (x) ancilla`, ancilla of the
/// same dimension as the system.
fn spectral_purification(values: &[f64], vectors: &ComplexMatrix) -> DVector<Complex64> {
    let d = values.len();
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let mut psi = DVector::zeros(d * d);
    for (k, &lam) in values.iter().enumerate() {
        let weight = (lam.max(0.0) / total).sqrt();
        if weight == 0.0 {
            continue;
        }
        for s in 0..d {
            psi[s * d + k] += vectors[(s, k)] * weight;
        }
    }
    psi
}

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() || mat.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "not a non-empty square matrix ({}x{})",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = hermiticity_error(&mat);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = eigenvalues(&mat)?.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(Self(mat))
    }

    /// Normalizes `mat` by its trace and validates the result.
    pub fn from_unnormalized(mat: ComplexMatrix) -> Result<Self> {
        let tr = trace(&mat).re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("trace {tr} is not positive")));
        }
        let mut m = mat / Complex64::from(tr);
        let h = m.adjoint();
        m = (m + h) * Complex64::from(0.5);
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(identity(dim) / Complex64::from(dim as f64))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = &psi.0;
        Self(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues(&self.0).expect("density matrices are Hermitian")
    }

    /// `Tr(rho . obs)`; fails on a dimension mismatch or a non-real result.
    pub fn expectation(&self, obs: &ComplexMatrix) -> Result<f64> {
        expectation(self, obs)
    }

    pub fn entropy(&self) -> f64 {
        von_neumann_entropy(self)
    }

    /// Conjugation `U rho U^dagger`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        let m = u * &self.0 * u.adjoint();
        let h = m.adjoint();
        Ok(Self((m + h) * Complex64::from(0.5)))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self(tensor(&self.0, &other.0))
    }
}

/// `Tr(rho . obs)` as a real number.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.nrows() != rho.dim() || obs.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: obs.nrows(),
        });
    }
    let val: Complex64 = rho
        .0
        .row_iter()
        .enumerate()
        .map(|(i, row)| row.iter().zip(obs.column(i).iter()).map(|(a, b)| a * b).sum::<Complex64>())
        .sum();
    if val.im.abs() > IMAG_TOL {
        return Err(Error::NotHermitian(val.im.abs()));
    }
    Ok(val.re)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues())
}

/// Traces out the subsystems listed in `traced` from an operator on
/// `dims[0] (x) dims[1] (x) ...`.
///
/// Works on any square operator (not only normalized states), so it can
/// also reduce unnormalized conditional states.
pub fn partial_trace_op(
    m: &ComplexMatrix,
    dims: &[usize],
    traced: &[usize],
) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || total != m.nrows() || !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: m.nrows(),
        });
    }
    if let Some(&bad) = traced.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidSettings(format!(
            "subsystem index {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|k| !traced.contains(k)).collect();
    let kept_dim: usize = kept.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product::<usize>().max(1);

    // strides for the row-major multi-index
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut flat = 0;
        let mut rem = kept_idx;
        for &k in kept.iter().rev() {
            flat += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        let mut rem = traced_idx;
        for &k in traced.iter().rev() {
            flat += (rem % dims[k]) * strides[k];
            rem /= dims[k];
        }
        flat
    };

    let mut out = DMatrix::zeros(kept_dim, kept_dim);
    for r in 0..kept_dim {
        for c in 0..kept_dim {
            let mut acc = ZERO;
            for t in 0..traced_dim {
                acc += m[(compose(r, t), compose(c, t))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Reduced state after tracing out `traced` from `rho` on the factorization `dims`.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], traced: &[usize]) -> Result<DensityMatrix> {
    let reduced = partial_trace_op(&rho.0, dims, traced)?;
    let h = reduced.adjoint();
    DensityMatrix::new((reduced + h) * Complex64::from(0.5))
}

/// Spectral purification: returns `sum_k sqrt(l_k) |v_k> (x) |k>` on
/// `system (x) ancilla`, both of dimension `rho.dim()`.
pub fn purify(rho: &DensityMatrix) -> PureState {
    let (values, vectors) = eigh(&rho.0).expect("density matrices are Hermitian");
    let mut psi = spectral_purification(&values, &vectors);
    let norm = psi.norm();
    psi /= Complex64::from(norm);
    PureState(psi)
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(DVector<Complex64>);

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm_sq = v.norm_squared();
        if v.is_empty() || (norm_sq - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "state vector has squared norm {norm_sq}"
            )));
        }
        Ok(Self(v))
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(Self(v / Complex64::from(norm)))
    }

    /// Computational basis state `|index>` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        Self(self.0.kronecker(&other.0))
    }
}

/// Hermitian operator squaring to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(ComplexMatrix);

impl Observable {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                found: mat.ncols(),
            });
        }
        let herm = hermiticity_error(&mat);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let sq = &mat * &mat;
        let err = max_abs_diff(&sq, &identity(mat.nrows()));
        if err > DICHOTOMIC_TOL {
            return Err(Error::NotDichotomic(err));
        }
        Ok(Self(mat))
    }

    pub fn pauli(axis: Axis) -> Self {
        Self(pauli(axis))
    }

    /// Qubit observable `u . sigma`; `u` must be a unit vector.
    pub fn along(u: [f64; 3]) -> Result<Self> {
        let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSettings(format!(
                "direction has norm {norm}, expected 1"
            )));
        }
        Ok(Self(pauli_direction(u)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// True when the observable is `+I` or `-I`.
    pub fn is_trivial(&self) -> bool {
        let id = identity(self.dim());
        max_abs_diff(&self.0, &id) <= DICHOTOMIC_TOL || max_abs_diff(&self.0, &(-id)) <= DICHOTOMIC_TOL
    }

    /// Projectors onto the `+1` and `-1` eigenspaces.
    pub fn projectors(&self) -> (ComplexMatrix, ComplexMatrix) {
        let id = identity(self.dim());
        let half = Complex64::from(0.5);
        ((&id + &self.0) * half, (&id - &self.0) * half)
    }
}
