//! Brute-force checks of the analytic ingredients behind the key rates.
//!
//! Each check recomputes its own entropies and correlators from
//! eigendecompositions or explicit sums, and only calls the single library
//! function it is checking.

use std::fmt;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::keyrates::{eve_info_from_f3, holevo_bell_diagonal_upper, s_lambda_bound};
use crate::quantum::{
    eigenvalues, identity, partial_trace_op, pauli, purify, tensor, Axis, ComplexMatrix,
    DensityMatrix, Observable,
};
use crate::sampling::{random_density, random_dichotomic};
use crate::steering::{
    bell_diagonal_to_density, cjwr_operator, symmetrize_to_bell_diagonal, BellDiagonalState,
};

pub const NORM_TOL: f64 = 1e-9;
pub const BOUND_TOL: f64 = 1e-9;
pub const EQUALITY_TOL: f64 = 1e-6;
pub const EVE_MATCH_TOL: f64 = 1e-3;
pub const CORRELATOR_TOL: f64 = 1e-12;
pub const F3_TOL: f64 = 1e-9;
/// Gap allowed between the exact Holevo quantity and its upper bound.
pub const HOLEVO_GAP_TOL: f64 = 1e-8;
const FEASIBILITY_SLACK: f64 = 1e-12;
const FAMILY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub worst_case: String,
}

impl Criterion {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            max_violation: 0.0,
            tolerance,
            worst_case: String::new(),
        }
    }

    fn observe(&mut self, violation: f64, case: impl FnOnce() -> String) {
        if violation > self.max_violation || (self.worst_case.is_empty() && violation >= self.max_violation) {
            self.max_violation = violation;
            self.worst_case = case();
        }
    }

    pub fn pass(&self) -> bool {
        self.max_violation <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub check: String,
    pub trials: usize,
    pub criteria: Vec<Criterion>,
    pub notes: Vec<String>,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.criteria.iter().all(Criterion::pass)
    }

    pub fn max_violation(&self) -> f64 {
        self.criteria.iter().map(|c| c.max_violation).fold(0.0, f64::max)
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} [{}] trials={}",
            self.check,
            if self.pass() { "PASS" } else { "FAIL" },
            self.trials
        )?;
        for c in &self.criteria {
            writeln!(
                f,
                "  {:<28} max_violation={:.6e} tol={:.1e} {} worst={}",
                c.name,
                c.max_violation,
                c.tolerance,
                if c.pass() { "ok" } else { "VIOLATED" },
                c.worst_case
            )?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn shannon(ps: &[f64]) -> f64 {
    ps.iter().map(|&p| plogp(p.max(0.0))).sum()
}

fn h2(p: f64) -> f64 {
    plogp(p) + plogp(1.0 - p)
}

fn entropy_of(m: &ComplexMatrix) -> Result<f64> {
    Ok(shannon(&eigenvalues(m)?))
}

/// `H(L) - h(L1 + L3)`.
fn conditional_entropy(l: &[f64; 4]) -> f64 {
    shannon(l) - h2((l[0] + l[2]).clamp(0.0, 1.0))
}

fn correlators(l: &[f64; 4]) -> [f64; 3] {
    [
        l[0] - l[1] - l[2] + l[3],
        -l[0] - l[1] + l[2] + l[3],
        l[0] - l[1] + l[2] - l[3],
    ]
}

fn f3_squared(l: &[f64; 4]) -> f64 {
    correlators(l).iter().map(|t| t * t).sum()
}

fn r2(l: &[f64; 4]) -> f64 {
    (l[0] - l[1]).powi(2) + (l[2] - l[3]).powi(2)
}

/// All points of the simplex with coordinates in multiples of `1/n`.
fn simplex_grid(n: usize) -> impl ParallelIterator<Item = [f64; 4]> {
    let nf = n as f64;
    (0..=n).into_par_iter().flat_map_iter(move |i| {
        (0..=n - i).flat_map(move |j| {
            (0..=n - i - j).map(move |k| {
                let l = n - i - j - k;
                [i as f64 / nf, j as f64 / nf, k as f64 / nf, l as f64 / nf]
            })
        })
    })
}

fn grid_divisions(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::InvalidGrid(format!("grid step {step} outside (0, 0.1]")));
    }
    let n = (1.0 / step).round();
    if ((1.0 / n) - step).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!("grid step {step} does not divide 1")));
    }
    Ok(n as usize)
}

/// Largest eigenvalue modulus of the CJWR operator over random dichotomic
/// triples on dimension `d`, plus the anticommuting triple padded to `d`.
pub fn verify_cjwr_norm_bound(d: usize, trials: usize, seed: u64) -> Result<OracleReport> {
    if d < 2 || d % 2 != 0 || d > 8 {
        return Err(Error::InvalidSettings(format!("dimension {d} must be even and in [2, 8]")));
    }
    if trials == 0 {
        return Err(Error::InvalidSettings("at least one trial required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[Observable; 3]> = (0..trials)
        .map(|_| std::array::from_fn(|_| random_dichotomic(d, &mut rng)))
        .collect();
    let norms: Vec<f64> = triples
        .par_iter()
        .map(|t| -> Result<f64> {
            let ev = eigenvalues(&cjwr_operator(t)?)?;
            Ok(ev.iter().map(|v| v.abs()).fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;

    let mut bound = Criterion::new("norm <= 3", NORM_TOL);
    for (i, &n) in norms.iter().enumerate() {
        bound.observe((n - 3.0).max(0.0), || format!("trial {i}: norm {n:.12}"));
    }

    let pad = identity(d / 2);
    let anti: [Observable; 3] = Axis::ALL.map(|a| {
        Observable::new(tensor(&pad, &pauli(a))).expect("padded Pauli is dichotomic")
    });
    let top = eigenvalues(&cjwr_operator(&anti)?)?
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let mut equality = Criterion::new("anticommuting attains 3", NORM_TOL);
    equality.observe((top - 3.0).abs(), || format!("norm {top:.12}"));

    let largest = norms.iter().copied().fold(0.0, f64::max);
    Ok(OracleReport {
        check: format!("cjwr_norm_bound(d={d})"),
        trials,
        criteria: vec![bound, equality],
        notes: vec![format!("largest random-triple norm {largest:.9}")],
    })
}

/// Exact Holevo quantity of Bob's `sigma_z` outcome against a purifying Eve.
pub fn exact_holevo(lam: &BellDiagonalState) -> Result<f64> {
    let rho = bell_diagonal_to_density(lam);
    let s_e = entropy_of(rho.matrix())?;
    let psi = purify(&rho);
    let v = psi.amplitudes();
    let dims = [2, 2, 4];
    let (bp, bm) = Observable::pauli(Axis::Z).projectors();
    let mut conditional = 0.0;
    for proj in [bp, bm] {
        let p_full = tensor(&tensor(&identity(2), &proj), &identity(4));
        let w = &p_full * v;
        let joint: ComplexMatrix = &w * w.adjoint();
        let rho_e = partial_trace_op(&joint, &dims, &[0, 1])?;
        let p = rho_e.trace().re;
        if p > 1e-15 {
            conditional += p * entropy_of(&(rho_e / Complex64::from(p)))?;
        }
    }
    Ok(s_e - conditional)
}

/// Exact Holevo quantity versus the Bell-diagonal upper bound at one point.
pub fn verify_holevo_exact(lam: &BellDiagonalState) -> Result<OracleReport> {
    verify_holevo_points("holevo_exact", &[*lam])
}

/// [`verify_holevo_exact`] over the simplex grid with the given step.
pub fn verify_holevo_grid(step: f64) -> Result<OracleReport> {
    let n = grid_divisions(step)?;
    let points: Vec<BellDiagonalState> = simplex_grid(n)
        .map(|l| BellDiagonalState::new(l).expect("grid point on the simplex"))
        .collect();
    verify_holevo_points(&format!("holevo_grid(step={step})"), &points)
}

fn verify_holevo_points(name: &str, points: &[BellDiagonalState]) -> Result<OracleReport> {
    let results: Vec<(f64, f64)> = points
        .par_iter()
        .map(|lam| Ok((exact_holevo(lam)?, holevo_bell_diagonal_upper(lam))))
        .collect::<Result<_>>()?;
    let mut bound = Criterion::new("chi <= upper bound", BOUND_TOL);
    let mut tight = Criterion::new("upper bound tight", HOLEVO_GAP_TOL);
    for (lam, &(chi, upper)) in points.iter().zip(&results) {
        let case = || format!("{:?}: chi={chi:.12} bound={upper:.12}", lam.lam());
        bound.observe((chi - upper).max(0.0), case);
        tight.observe((upper - chi).abs(), case);
    }
    Ok(OracleReport {
        check: name.to_string(),
        trials: points.len(),
        criteria: vec![bound, tight],
        notes: vec![],
    })
}

/// `H(L) - h(L1 + L3) <= s_lambda_bound(R^2)` over the simplex grid, with
/// equality on the faces `L2 = L4 = 0` and `L1 = L3 = 0`.
pub fn verify_entropic_inequality(step: f64) -> Result<OracleReport> {
    let n = grid_divisions(step)?;
    let points: Vec<[f64; 4]> = simplex_grid(n).collect();
    let values: Vec<(f64, f64)> = points
        .par_iter()
        .map(|l| Ok((conditional_entropy(l), s_lambda_bound(r2(l).clamp(0.0, 1.0))?)))
        .collect::<Result<_>>()?;
    let mut inequality = Criterion::new("S(L) <= bound(R^2)", BOUND_TOL);
    let mut face_24 = Criterion::new("equality on L2=L4=0", EQUALITY_TOL);
    let mut face_13 = Criterion::new("equality on L1=L3=0", EQUALITY_TOL);
    let (mut n24, mut n13) = (0, 0);
    for (l, &(s, bound)) in points.iter().zip(&values) {
        let case = || format!("{l:?}: S={s:.12} bound={bound:.12}");
        inequality.observe((s - bound).max(0.0), case);
        if l[1] == 0.0 && l[3] == 0.0 {
            n24 += 1;
            face_24.observe((s - bound).abs(), case);
        }
        if l[0] == 0.0 && l[2] == 0.0 {
            n13 += 1;
            face_13.observe((s - bound).abs(), case);
        }
    }
    Ok(OracleReport {
        check: format!("entropic_inequality(step={step})"),
        trials: points.len(),
        criteria: vec![inequality, face_24, face_13],
        notes: vec![format!("{n24} points on L2=L4=0, {n13} on L1=L3=0")],
    })
}

/// Result of the constrained maximization at one target value.
#[derive(Debug, Clone, PartialEq)]
pub struct EveSearch {
    pub f3_target: f64,
    pub closed_form: f64,
    pub maximum: f64,
    pub argmax: [f64; 4],
    /// `"L1=L3=0"`, `"L2=L4=0"` or `"interior"`.
    pub family: &'static str,
    /// `|T22^2 - (2R^2 - 1)|` at the arg-max.
    pub t22_deviation: f64,
}

fn family_of(l: &[f64; 4]) -> &'static str {
    if l[0] + l[2] <= FAMILY_TOL {
        "L1=L3=0"
    } else if l[1] + l[3] <= FAMILY_TOL {
        "L2=L4=0"
    } else {
        "interior"
    }
}

/// Compass search over the simplex along the directions `e_i - e_j`,
/// halving the step until it falls below `min_step`. Moves that would make
/// a weight negative are shortened to land on the face.
fn refine(start: [f64; 4], f3_sq_min: f64, step: f64, min_step: f64) -> ([f64; 4], f64) {
    let feasible = |l: &[f64; 4]| f3_squared(l) >= f3_sq_min - FEASIBILITY_SLACK;
    let mut best = start;
    let mut value = conditional_entropy(&best);
    let mut s = step;
    while s >= min_step {
        let mut improved = false;
        for i in 0..4 {
            for j in 0..4 {
                if i == j || best[j] <= 0.0 {
                    continue;
                }
                let delta = s.min(best[j]);
                let mut cand = best;
                cand[i] += delta;
                cand[j] -= delta;
                if delta == best[j] {
                    cand[j] = 0.0;
                }
                if feasible(&cand) {
                    let v = conditional_entropy(&cand);
                    if v > value {
                        best = cand;
                        value = v;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            s *= 0.5;
        }
    }
    (best, value)
}

/// Maximizes `H(L) - h(L1 + L3)` over Bell-diagonal states with
/// `F3 >= f3_target` by a grid search followed by compass refinement.
pub fn eve_search(f3_target: f64, step: f64) -> Result<EveSearch> {
    const CANDIDATES: usize = 8;
    let closed_form = eve_info_from_f3(f3_target)?;
    if !(f3_target > 1.0) {
        return Err(Error::OutOfRange { name: "f3", value: f3_target, min: 1.0, max: 3f64.sqrt() });
    }
    let n = grid_divisions(step)?;
    let target_sq = f3_target * f3_target;
    let mut pool: Vec<([f64; 4], f64)> = simplex_grid(n)
        .filter(|l| f3_squared(l) >= target_sq - FEASIBILITY_SLACK)
        .map(|l| (l, conditional_entropy(&l)))
        .collect();
    if pool.is_empty() {
        return Err(Error::InvalidGrid(format!("no grid point reaches F3 = {f3_target}")));
    }
    // deterministic order regardless of scheduling
    pool.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.partial_cmp(&b.0).unwrap()));
    pool.truncate(CANDIDATES);
    let refined: Vec<([f64; 4], f64)> = pool
        .par_iter()
        .map(|&(l, _)| refine(l, target_sq, step / 2.0, 1e-10))
        .collect();
    let (argmax, maximum) = refined
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("non-empty pool");
    let t = correlators(&argmax);
    Ok(EveSearch {
        f3_target,
        closed_form,
        maximum,
        argmax,
        family: family_of(&argmax),
        t22_deviation: (t[1] * t[1] - (2.0 * r2(&argmax) - 1.0)).abs(),
    })
}

/// Checks the Eve-information closed form against [`eve_search`] at every
/// target in `f3_grid`.
pub fn verify_eve_closed_form(f3_grid: &[f64], step: f64) -> Result<OracleReport> {
    if step > 0.005 {
        return Err(Error::InvalidGrid(format!("search step {step} coarser than 0.005")));
    }
    let mut below = Criterion::new("max >= closed form - 1e-3", EVE_MATCH_TOL);
    let mut above = Criterion::new("max <= closed form + 1e-9", BOUND_TOL);
    let mut notes = Vec::new();
    for &f3 in f3_grid {
        let s = eve_search(f3, step)?;
        let case = || format!("f3={f3}: max={:.9} closed={:.9} at {:?}", s.maximum, s.closed_form, s.argmax);
        below.observe((s.closed_form - s.maximum).max(0.0), case);
        above.observe((s.maximum - s.closed_form).max(0.0), case);
        // the map (L1,L2,L3,L4) -> (L2,L1,L4,L3) preserves both objective and F3
        let mirror = [s.argmax[1], s.argmax[0], s.argmax[3], s.argmax[2]];
        notes.push(format!(
            "f3={f3}: max={:.9} closed={:.9} argmax={:?} family={} (mirror family {}), |T22^2-(2R^2-1)|={:.3e}",
            s.maximum,
            s.closed_form,
            s.argmax,
            s.family,
            family_of(&mirror),
            s.t22_deviation
        ));
    }
    Ok(OracleReport {
        check: format!("eve_closed_form(step={step})"),
        trials: f3_grid.len(),
        criteria: vec![below, above],
        notes,
    })
}

fn pauli_correlations(rho: &DensityMatrix) -> Result<Matrix3<f64>> {
    let mut t = Matrix3::zeros();
    for a in Axis::ALL {
        for b in Axis::ALL {
            t[(a.index(), b.index())] = rho.expectation(&tensor(&pauli(a), &pauli(b)))?;
        }
    }
    Ok(t)
}

fn f3_optimal(t: &Matrix3<f64>) -> f64 {
    t.singular_values().iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Random two-qubit states through the Bell-diagonal reduction: matched
/// correlators survive the symmetrization, and the setting-optimal CJWR
/// value of the symmetrized state survives the local rotations.
pub fn verify_reduction_invariance(trials: usize, seed: u64) -> Result<OracleReport> {
    if trials == 0 {
        return Err(Error::InvalidSettings("at least one trial required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<DensityMatrix> = (0..trials).map(|_| random_density(4, &mut rng)).collect();
    let rows: Vec<[f64; 4]> = states
        .par_iter()
        .map(|rho| {
            let red = symmetrize_to_bell_diagonal(rho)?;
            let t_in = pauli_correlations(rho)?;
            let t_sym = pauli_correlations(&red.symmetrized)?;
            let t_out = pauli_correlations(&red.density)?;
            let matched = (0..3).map(|i| (t_in[(i, i)] - t_sym[(i, i)]).abs()).fold(0.0, f64::max);
            let f3 = (f3_optimal(&t_out) - f3_optimal(&t_sym)).abs();
            let canonical = if red.state.is_canonical() { 0.0 } else { 1.0 };
            Ok([matched, f3, red.residual, canonical])
        })
        .collect::<Result<_>>()?;
    let mut matched = Criterion::new("matched correlators", CORRELATOR_TOL);
    let mut f3 = Criterion::new("optimal F3", F3_TOL);
    let mut residual = Criterion::new("Bell-basis residual", F3_TOL);
    let mut canonical = Criterion::new("canonical ordering", 0.0);
    for (i, r) in rows.iter().enumerate() {
        matched.observe(r[0], || format!("state {i}"));
        f3.observe(r[1], || format!("state {i}"));
        residual.observe(r[2], || format!("state {i}"));
        canonical.observe(r[3], || format!("state {i}"));
    }
    Ok(OracleReport {
        check: "reduction_invariance".into(),
        trials,
        criteria: vec![matched, f3, residual, canonical],
        notes: vec![],
    })
}

/// Every check at the resolution used by the `verify` command.
pub fn run_all(seed: u64) -> Result<Vec<OracleReport>> {
    let mut out = Vec::new();
    for d in [2, 4, 8] {
        out.push(verify_cjwr_norm_bound(d, 1000, seed)?);
    }
    out.push(verify_holevo_grid(0.05)?);
    out.push(verify_entropic_inequality(0.02)?);
    out.push(verify_eve_closed_form(&[1.05, 1.2, 1.4334, 1.6, 1.7, 3f64.sqrt()], 0.005)?);
    out.push(verify_reduction_invariance(1000, seed)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::werner;

    #[test]
    fn cjwr_bound_small() {
        let r = verify_cjwr_norm_bound(4, 50, 1).unwrap();
        assert!(r.pass(), "{r}");
        assert!(verify_cjwr_norm_bound(3, 10, 1).is_err());
    }

    #[test]
    fn collinear_triple_reaches_sqrt3() {
        let z = Observable::pauli(Axis::Z);
        let ev = eigenvalues(&cjwr_operator(&[z.clone(), z.clone(), z]).unwrap()).unwrap();
        assert!((ev[0] - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn holevo_examples() {
        let pure = BellDiagonalState::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(exact_holevo(&pure).unwrap().abs() < 1e-9);
        let mixed = BellDiagonalState::new([0.25; 4]).unwrap();
        let chi = exact_holevo(&mixed).unwrap();
        assert!(chi <= 1.0 + 1e-9);
        let r = verify_holevo_grid(0.1).unwrap();
        assert!(r.pass(), "{r}");
    }

    #[test]
    fn entropic_examples() {
        let l = [0.9, 0.0, 0.1, 0.0];
        assert!((conditional_entropy(&l) - s_lambda_bound(r2(&l)).unwrap()).abs() < 1e-12);
        let u = [0.25; 4];
        assert_eq!(r2(&u), 0.0);
        assert!((conditional_entropy(&u) - 1.0).abs() < 1e-12);
        let r = verify_entropic_inequality(0.05).unwrap();
        assert!(r.pass(), "{r}");
        assert!(verify_entropic_inequality(0.3).is_err());
    }

    #[test]
    fn eve_search_matches_closed_form() {
        let s = eve_search(1.4334, 0.01).unwrap();
        assert!((s.maximum - 0.5761).abs() < 1e-3, "{s:?}");
        assert!(s.maximum <= s.closed_form + 1e-9);
        assert_ne!(s.family, "interior");
        let top = eve_search(3f64.sqrt(), 0.01).unwrap();
        assert!(top.maximum.abs() < 1e-12);
        assert!(eve_search(1.8, 0.01).is_err());
    }

    #[test]
    fn reduction_examples() {
        let r = verify_reduction_invariance(20, 3).unwrap();
        assert!(r.pass(), "{r}");
        let w = werner(0.7).unwrap();
        let red = symmetrize_to_bell_diagonal(&w).unwrap();
        let t = pauli_correlations(&red.density).unwrap();
        assert!((f3_optimal(&t) - 0.7 * 3f64.sqrt()).abs() < 1e-12);
    }
}
