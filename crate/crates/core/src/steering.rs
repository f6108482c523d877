//! The three-setting CJWR steering functional and the reduction of an
//! arbitrary two-qubit state to Bell-diagonal form.
//!
//! The functional is available in two forms: the setting-dependent value
//! `F_n = |sum_i <(u_i . sigma) (x) (v_i . sigma)>| / sqrt(n)` and the
//! setting-optimal value `sqrt(l1^2 + l2^2 + l3^2)` built from the singular
//! values of the correlation matrix `t_ij = Tr[(sigma_i (x) sigma_j) rho]`.
//!
//! Bell-basis order is `(Phi+, Psi-, Phi-, Psi+)` everywhere in this crate.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix2, Matrix3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::{
    identity, pauli, pauli_direction, tensor, Axis, ComplexMatrix, DensityMatrix, Observable,
    PureState,
};

/// Entrywise slack on `|t_ij| <= 1`.
pub const CORRELATOR_TOL: f64 = 1e-10;
/// Slack on singular values of a physical correlation matrix.
pub const SINGULAR_VALUE_TOL: f64 = 1e-9;
/// Tolerance on unit-norm and orthonormality of setting directions.
pub const DIRECTION_TOL: f64 = 1e-12;

/// 3x3 matrix of Pauli correlators `t_ij = Tr[(sigma_i (x) sigma_j) rho]`,
/// rows indexed by Alice's axis and columns by Bob's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix(Matrix3<f64>);

impl CorrelationMatrix {
    pub fn new(t: Matrix3<f64>) -> Result<Self> {
        if let Some(bad) = t.iter().find(|v| v.abs() > 1.0 + CORRELATOR_TOL || v.is_nan()) {
            return Err(Error::InvalidState(format!("correlator {bad} exceeds 1")));
        }
        let max_sv = t.singular_values().max();
        if max_sv > 1.0 + SINGULAR_VALUE_TOL {
            return Err(Error::InvalidState(format!(
                "singular value {max_sv} exceeds 1"
            )));
        }
        Ok(Self(t))
    }

    pub fn get(&self, alice: Axis, bob: Axis) -> f64 {
        self.0[(alice.index(), bob.index())]
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Matched correlators `(t_xx, t_yy, t_zz)`.
    pub fn diagonal(&self) -> [f64; 3] {
        [self.0[(0, 0)], self.0[(1, 1)], self.0[(2, 2)]]
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> [f64; 3] {
        let mut sv: Vec<f64> = self.0.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        [sv[0], sv[1], sv[2]]
    }
}

pub fn correlation_matrix(rho: &DensityMatrix) -> Result<CorrelationMatrix> {
    require_two_qubits(rho)?;
    let mut t = Matrix3::zeros();
    for a in Axis::ALL {
        for b in Axis::ALL {
            t[(a.index(), b.index())] = rho.expectation(&tensor(&pauli(a), &pauli(b)))?;
        }
    }
    CorrelationMatrix::new(t)
}

fn require_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    Ok(())
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Measurement directions `{u_i; v_i}` for an n-setting CJWR test.
///
/// Alice's directions only need to be unit vectors; Bob's must be
/// orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSettings {
    alice: Vec<[f64; 3]>,
    bob: Vec<[f64; 3]>,
}

impl MeasurementSettings {
    pub fn new(alice: Vec<[f64; 3]>, bob: Vec<[f64; 3]>) -> Result<Self> {
        let n = alice.len();
        if !(n == 2 || n == 3) || bob.len() != n {
            return Err(Error::InvalidSettings(format!(
                "need 2 or 3 settings per party, got {} and {}",
                alice.len(),
                bob.len()
            )));
        }
        for u in &alice {
            if (norm3(u) - 1.0).abs() > DIRECTION_TOL {
                return Err(Error::InvalidSettings(format!("Alice direction {u:?} is not a unit vector")));
            }
        }
        for (i, v) in bob.iter().enumerate() {
            for (j, w) in bob.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot3(v, w) - want).abs() > DIRECTION_TOL {
                    return Err(Error::InvalidSettings("Bob's directions are not orthonormal".into()));
                }
            }
        }
        Ok(Self { alice, bob })
    }

    /// The protocol's settings: Alice measures `(sigma_x, -sigma_y, sigma_z)`,
    /// Bob `(sigma_x, sigma_y, sigma_z)`, so all three matched correlators of
    /// `|Phi+>` equal `+1`.
    pub fn protocol() -> Self {
        Self {
            alice: vec![[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
            bob: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn n(&self) -> usize {
        self.alice.len()
    }

    pub fn alice(&self) -> &[[f64; 3]] {
        &self.alice
    }

    pub fn bob(&self) -> &[[f64; 3]] {
        &self.bob
    }

    pub fn alice_observables(&self) -> Vec<Observable> {
        self.alice
            .iter()
            .map(|&u| Observable::along(u).expect("validated direction"))
            .collect()
    }

    pub fn bob_observables(&self) -> Vec<Observable> {
        self.bob
            .iter()
            .map(|&v| Observable::along(v).expect("validated direction"))
            .collect()
    }
}

/// `F_n(rho, mu) = |sum_i <A_i (x) B_i>| / sqrt(n)` by direct expectation.
pub fn cjwr_value(rho: &DensityMatrix, settings: &MeasurementSettings) -> Result<f64> {
    require_two_qubits(rho)?;
    let mut sum = 0.0;
    for (u, v) in settings.alice.iter().zip(&settings.bob) {
        sum += rho.expectation(&tensor(&pauli_direction(*u), &pauli_direction(*v)))?;
    }
    Ok(sum.abs() / (settings.n() as f64).sqrt())
}

/// Setting-optimal three-setting value `sqrt(l1^2 + l2^2 + l3^2)` from the
/// singular values of the correlation matrix.
pub fn cjwr_f3_optimal(rho: &DensityMatrix) -> Result<f64> {
    Ok(f3_from_correlations(&correlation_matrix(rho)?))
}

pub fn f3_from_correlations(t: &CorrelationMatrix) -> f64 {
    t.singular_values().iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// The CJWR operator `sum_l A_l (x) sigma_l`.
pub fn cjwr_operator(a: &[Observable; 3]) -> Result<ComplexMatrix> {
    let d = a[0].dim();
    for obs in a {
        if obs.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: obs.dim(),
            });
        }
        if obs.is_trivial() {
            return Err(Error::DegenerateObservable);
        }
    }
    Ok(a.iter()
        .zip(Axis::ALL)
        .map(|(obs, axis)| tensor(obs.matrix(), &pauli(axis)))
        .fold(DMatrix::zeros(2 * d, 2 * d), |acc, m| acc + m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellState {
    PhiPlus,
    PsiMinus,
    PhiMinus,
    PsiPlus,
}

impl BellState {
    pub const ORDER: [BellState; 4] = [
        BellState::PhiPlus,
        BellState::PsiMinus,
        BellState::PhiMinus,
        BellState::PsiPlus,
    ];

    pub fn vector(self) -> PureState {
        let s = FRAC_1_SQRT_2;
        let amps = match self {
            BellState::PhiPlus => [s, 0.0, 0.0, s],
            BellState::PsiMinus => [0.0, s, -s, 0.0],
            BellState::PhiMinus => [s, 0.0, 0.0, -s],
            BellState::PsiPlus => [0.0, s, s, 0.0],
        };
        PureState::new(amps.iter().map(|&a| Complex64::from(a)).collect())
            .expect("Bell states are normalized")
    }
}

/// Tolerance on `sum(lam) = 1` and on negativity of the weights.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Weights `(L_Phi+, L_Psi-, L_Phi-, L_Psi+)` of a Bell-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDiagonalState([f64; 4]);

impl BellDiagonalState {
    pub fn new(lam: [f64; 4]) -> Result<Self> {
        if lam.iter().any(|&l| l.is_nan() || l < -SIMPLEX_TOL) {
            return Err(Error::InvalidDistribution(format!("negative weight in {lam:?}")));
        }
        let total: f64 = lam.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!(
                "weights {lam:?} sum to {total}"
            )));
        }
        Ok(Self(lam.map(|l| l.max(0.0))))
    }

    pub fn lam(&self) -> [f64; 4] {
        self.0
    }

    /// `L_Phi+ >= L_Psi-` and `L_Phi- >= L_Psi+`.
    pub fn is_canonical(&self) -> bool {
        self.0[0] >= self.0[1] - SIMPLEX_TOL && self.0[2] >= self.0[3] - SIMPLEX_TOL
    }

    /// Inverse of [`bell_diagonal_correlators`].
    pub fn from_correlators(t: [f64; 3]) -> Result<Self> {
        let [t1, t2, t3] = t;
        Self::new([
            (1.0 + t1 - t2 + t3) / 4.0,
            (1.0 - t1 - t2 - t3) / 4.0,
            (1.0 - t1 + t2 + t3) / 4.0,
            (1.0 + t1 + t2 - t3) / 4.0,
        ])
    }
}

pub fn bell_diagonal_to_density(lam: &BellDiagonalState) -> DensityMatrix {
    let m = BellState::ORDER
        .iter()
        .zip(lam.0)
        .map(|(b, l)| b.vector().density().into_matrix() * Complex64::from(l))
        .fold(DMatrix::zeros(4, 4), |acc, m| acc + m);
    DensityMatrix::new(m).expect("convex mixture of Bell projectors")
}

/// Diagonal Pauli correlators `(T11, T22, T33)` of a Bell-diagonal state.
pub fn bell_diagonal_correlators(lam: &BellDiagonalState) -> [f64; 3] {
    let [l1, l2, l3, l4] = lam.0;
    [l1 - l2 - l3 + l4, -l1 - l2 + l3 + l4, l1 - l2 + l3 - l4]
}

/// `1/2 (rho_bar + rho_bar^*)` with `rho_bar = 1/2 [rho + (Y(x)Y) rho (Y(x)Y)]`.
///
/// Leaves the matched correlators `t_xx, t_yy, t_zz` untouched.
pub fn symmetrize(rho: &DensityMatrix) -> Result<DensityMatrix> {
    require_two_qubits(rho)?;
    let yy = tensor(&pauli(Axis::Y), &pauli(Axis::Y));
    let flipped = &yy * rho.matrix() * &yy;
    let bar = (rho.matrix() + flipped) * Complex64::from(0.5);
    let real = (&bar + bar.map(|z| z.conj())) * Complex64::from(0.5);
    DensityMatrix::new(real)
}

/// Qubit unitary `exp(-i theta sigma_y / 2)`, a rotation in the (x, z) plane:
/// under conjugation `U^dagger sigma_x U = cos(theta) sigma_x + sin(theta) sigma_z`.
pub fn xz_rotation(theta: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    identity(2) * Complex64::from(c) - pauli(Axis::Y) * Complex64::new(0.0, s)
}

/// Angles `(alpha, beta)` with `R(alpha) m R(beta)^T` diagonal, where
/// `R(theta) = [[c, s], [-s, c]]` is the action of [`xz_rotation`] on the
/// (x, z) correlator block.
fn diagonalizing_angles(m: &Matrix2<f64>) -> (f64, f64) {
    let e = (m[(0, 0)] + m[(1, 1)]) / 2.0;
    let f = (m[(0, 0)] - m[(1, 1)]) / 2.0;
    let g = (m[(1, 0)] + m[(0, 1)]) / 2.0;
    let h = (m[(1, 0)] - m[(0, 1)]) / 2.0;
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    // m = rot(phi) diag rot(theta) with rot(a) = R(-a)
    let theta = (a2 - a1) / 2.0;
    let phi = (a2 + a1) / 2.0;
    (phi, -theta)
}

fn rotation_block(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

/// Output of the Bell-diagonal reduction.
#[derive(Debug, Clone)]
pub struct BellReduction {
    /// Canonically ordered Bell weights.
    pub state: BellDiagonalState,
    /// `sum_k lam_k |B_k><B_k|`.
    pub density: DensityMatrix,
    /// The state after the `sigma_y (x) sigma_y` averaging and realification,
    /// before any local rotation.
    pub symmetrized: DensityMatrix,
    /// (x, z)-plane rotation angles applied on Alice's and Bob's side.
    pub rotation: (f64, f64),
    /// Largest off-diagonal modulus of the rotated state in the Bell basis.
    pub residual: f64,
}

/// Reduces a two-qubit state to a canonically ordered Bell-diagonal state.
///
/// Pipeline: `sigma_y (x) sigma_y` averaging, realification, then local
/// (x, z)-plane rotations chosen from the signed SVD of the residual
/// `{xx, xz, zx, zz}` correlator block. The rotations preserve the
/// setting-optimal CJWR value of the symmetrized state.
pub fn symmetrize_to_bell_diagonal(rho: &DensityMatrix) -> Result<BellReduction> {
    let symmetrized = symmetrize(rho)?;
    let t = correlation_matrix(&symmetrized)?;
    let block = Matrix2::new(
        t.get(Axis::X, Axis::X),
        t.get(Axis::X, Axis::Z),
        t.get(Axis::Z, Axis::X),
        t.get(Axis::Z, Axis::Z),
    );

    let (mut alpha, mut beta) = if block[(0, 1)].abs() <= 1e-14 && block[(1, 0)].abs() <= 1e-14 {
        (0.0, 0.0)
    } else {
        diagonalizing_angles(&block)
    };
    let diag = rotation_block(alpha) * block * rotation_block(beta).transpose();
    let (mut dx, mut dz) = (diag[(0, 0)], diag[(1, 1)]);
    if dx.abs() > dz.abs() {
        // quarter turn on both sides swaps the x and z correlators
        alpha += FRAC_PI_2;
        beta += FRAC_PI_2;
        std::mem::swap(&mut dx, &mut dz);
    }
    if dz < 0.0 {
        // half turn on Alice flips the sign of both x and z rows
        alpha += PI;
    }

    let u = tensor(&xz_rotation(alpha), &xz_rotation(beta));
    let rotated = symmetrized.conjugate(&u)?;

    let basis: Vec<PureState> = BellState::ORDER.iter().map(|b| b.vector()).collect();
    let mut lam = [0.0; 4];
    let mut residual = 0.0f64;
    for (i, bi) in basis.iter().enumerate() {
        let row = bi.amplitudes().adjoint() * rotated.matrix();
        for (j, bj) in basis.iter().enumerate() {
            let elem = (&row * bj.amplitudes())[(0, 0)];
            if i == j {
                lam[i] = elem.re.max(0.0);
            } else {
                residual = residual.max(elem.norm());
            }
        }
    }
    let total: f64 = lam.iter().sum();
    let state = BellDiagonalState::new(lam.map(|l| l / total))?;
    Ok(BellReduction {
        density: bell_diagonal_to_density(&state),
        state,
        symmetrized,
        rotation: (alpha, beta),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::random_density;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn werner(nu: f64) -> DensityMatrix {
        let m = BellState::PhiPlus.vector().density().into_matrix() * Complex64::from(nu)
            + identity(4) * Complex64::from((1.0 - nu) / 4.0);
        DensityMatrix::new(m).unwrap()
    }

    fn sqrt3() -> f64 {
        3f64.sqrt()
    }

    #[test]
    fn correlation_matrices() {
        let t = correlation_matrix(&werner(1.0)).unwrap();
        let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0));
        assert!((t.matrix() - want).abs().max() < 1e-15);

        let t = correlation_matrix(&DensityMatrix::maximally_mixed(4)).unwrap();
        assert!(t.matrix().abs().max() < 1e-15);

        let nu = 0.35;
        let t = correlation_matrix(&werner(nu)).unwrap();
        let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(nu, -nu, nu));
        assert!((t.matrix() - want).abs().max() < 1e-15);

        assert!(correlation_matrix(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn cjwr_with_protocol_settings() {
        let s = MeasurementSettings::protocol();
        assert_abs_diff_eq!(cjwr_value(&werner(1.0), &s).unwrap(), sqrt3(), epsilon = 1e-14);
        assert_abs_diff_eq!(
            cjwr_value(&DensityMatrix::maximally_mixed(4), &s).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        for nu in [0.2, 0.7, 0.93] {
            assert_abs_diff_eq!(cjwr_value(&werner(nu), &s).unwrap(), nu * sqrt3(), epsilon = 1e-14);
        }
    }

    #[test]
    fn two_setting_functional() {
        let s = MeasurementSettings::new(
            vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert_eq!(s.n(), 2);
        // F2 of Phi+ = (1 + 1)/sqrt 2
        assert_abs_diff_eq!(cjwr_value(&werner(1.0), &s).unwrap(), 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn invalid_settings() {
        assert!(MeasurementSettings::new(vec![[1.0, 0.0, 0.0]], vec![[1.0, 0.0, 0.0]]).is_err());
        assert!(MeasurementSettings::new(
            vec![[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]],
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        )
        .is_err());
        assert!(MeasurementSettings::new(
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[1.0, 0.0, 0.0], [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]]
        )
        .is_err());
    }

    #[test]
    fn optimal_f3() {
        assert_abs_diff_eq!(cjwr_f3_optimal(&werner(1.0)).unwrap(), sqrt3(), epsilon = 1e-12);
        let zero_zero = PureState::basis(4, 0).density();
        assert_abs_diff_eq!(cjwr_f3_optimal(&zero_zero).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cjwr_f3_optimal(&werner(0.5)).unwrap(), 0.5 * sqrt3(), epsilon = 1e-12);
        assert_abs_diff_eq!(cjwr_f3_optimal(&werner(0.8)).unwrap(), 0.8 * sqrt3(), epsilon = 1e-12);
    }

    #[test]
    fn cjwr_operator_spectra() {
        let paulis = [Axis::X, Axis::Y, Axis::Z].map(Observable::pauli);
        let op = cjwr_operator(&paulis).unwrap();
        let ev = crate::quantum::eigenvalues(&op).unwrap();
        let max_abs = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert_abs_diff_eq!(max_abs, 3.0, epsilon = 1e-12);

        // sigma_z (x) (sigma_x + sigma_y + sigma_z) has spectrum {+-sqrt3}
        let zs = [Axis::Z, Axis::Z, Axis::Z].map(Observable::pauli);
        let ev = crate::quantum::eigenvalues(&cjwr_operator(&zs).unwrap()).unwrap();
        for v in ev {
            assert_abs_diff_eq!(v.abs(), sqrt3(), epsilon = 1e-12);
        }

        let id = Observable::new(identity(2)).unwrap();
        let degenerate = [id, Observable::pauli(Axis::Y), Observable::pauli(Axis::Z)];
        assert!(matches!(cjwr_operator(&degenerate), Err(Error::DegenerateObservable)));

        let big = Observable::new(tensor(&pauli(Axis::X), &identity(2))).unwrap();
        let mixed = [big, Observable::pauli(Axis::Y), Observable::pauli(Axis::Z)];
        assert!(matches!(cjwr_operator(&mixed), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bell_diagonal_construction() {
        let phi = bell_diagonal_to_density(&BellDiagonalState::new([1.0, 0.0, 0.0, 0.0]).unwrap());
        let want = BellState::PhiPlus.vector().density();
        assert!(crate::quantum::max_abs_diff(phi.matrix(), want.matrix()) < 1e-15);

        let mixed = bell_diagonal_to_density(&BellDiagonalState::new([0.25; 4]).unwrap());
        assert!(crate::quantum::max_abs_diff(mixed.matrix(), DensityMatrix::maximally_mixed(4).matrix()) < 1e-15);

        let lam = BellDiagonalState::new([0.7, 0.1, 0.15, 0.05]).unwrap();
        let t = correlation_matrix(&bell_diagonal_to_density(&lam)).unwrap();
        for (got, want) in t.diagonal().iter().zip([0.5, -0.6, 0.7]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        assert!(BellDiagonalState::new([0.5, 0.6, -0.1, 0.0]).is_err());
        assert!(BellDiagonalState::new([0.5, 0.6, 0.1, 0.0]).is_err());
    }

    #[test]
    fn bell_diagonal_correlator_formulas() {
        let cases = [
            ([1.0, 0.0, 0.0, 0.0], [1.0, -1.0, 1.0]),
            ([0.25; 4], [0.0, 0.0, 0.0]),
            ([0.7, 0.1, 0.15, 0.05], [0.5, -0.6, 0.7]),
        ];
        for (lam, want) in cases {
            let got = bell_diagonal_correlators(&BellDiagonalState::new(lam).unwrap());
            for (g, w) in got.iter().zip(want) {
                assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
            }
            let back = BellDiagonalState::from_correlators(got).unwrap();
            for (g, w) in back.lam().iter().zip(lam) {
                assert_abs_diff_eq!(*g, w, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn xz_rotation_action() {
        let theta = 0.37;
        let u = xz_rotation(theta);
        let rotated_x = u.adjoint() * pauli(Axis::X) * &u;
        let want = pauli(Axis::X) * Complex64::from(theta.cos()) + pauli(Axis::Z) * Complex64::from(theta.sin());
        assert!(crate::quantum::max_abs_diff(&rotated_x, &want) < 1e-15);
    }

    #[test]
    fn signed_svd_angles_diagonalize() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..200 {
            let m = Matrix2::from_fn(|_, _| rng.random_range(-1.0..1.0));
            let (a, b) = diagonalizing_angles(&m);
            let d = rotation_block(a) * m * rotation_block(b).transpose();
            assert!(d[(0, 1)].abs() < 1e-12 && d[(1, 0)].abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn werner_reduces_to_expected_weights() {
        for nu in [0.0, 0.3, 0.8, 1.0] {
            let red = symmetrize_to_bell_diagonal(&werner(nu)).unwrap();
            let want = [(1.0 + 3.0 * nu) / 4.0, (1.0 - nu) / 4.0, (1.0 - nu) / 4.0, (1.0 - nu) / 4.0];
            for (g, w) in red.state.lam().iter().zip(want) {
                assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
            }
            assert_eq!(red.rotation, (0.0, 0.0));
        }
    }

    #[test]
    fn bell_diagonal_is_a_fixed_point() {
        let lam = BellDiagonalState::new([0.7, 0.1, 0.15, 0.05]).unwrap();
        let red = symmetrize_to_bell_diagonal(&bell_diagonal_to_density(&lam)).unwrap();
        for (g, w) in red.state.lam().iter().zip(lam.lam()) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
        // non-canonical input comes back reordered
        let lam = BellDiagonalState::new([0.0, 0.3, 0.0, 0.7]).unwrap();
        let red = symmetrize_to_bell_diagonal(&bell_diagonal_to_density(&lam)).unwrap();
        assert!(red.state.is_canonical());
        let mut got = red.state.lam();
        got.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip([0.0, 0.0, 0.3, 0.7]) {
            assert_abs_diff_eq!(*g, w, epsilon = 1e-12);
        }
    }

    #[test]
    fn reduction_of_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let rho = random_density(4, &mut rng);
            let red = symmetrize_to_bell_diagonal(&rho).unwrap();
            let before = correlation_matrix(&rho).unwrap().diagonal();
            let after = correlation_matrix(&red.symmetrized).unwrap().diagonal();
            for (b, a) in before.iter().zip(after) {
                assert!((b - a).abs() <= 1e-12);
            }
            assert!(red.state.is_canonical());
            assert!(red.residual < 1e-12, "residual {}", red.residual);
            let f_sym = cjwr_f3_optimal(&red.symmetrized).unwrap();
            let f_out = cjwr_f3_optimal(&red.density).unwrap();
            assert!((f_sym - f_out).abs() <= 1e-9);
        }
    }
}
