//! Critical noise and efficiency thresholds, and parameter sweeps.
//!
//! Roots are found by plain bisection. The rate functions have square-root
//! kinks where the witness crosses its classical bound, so derivative-based
//! methods are avoided.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::keyrates::{rate_at, rate_on_werner_line, NoiseParams, RateReport, RateVariant, SQRT3};

/// Bracket width at which bisection may stop.
pub const BRACKET_TOL: f64 = 1e-8;
/// Largest `|rate|` accepted at a reported root.
pub const RESIDUAL_TOL: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200;
/// Points checked below a critical QBER for strictly positive rate.
const VERIFY_POINTS: usize = 256;
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub variable: &'static str,
    pub critical: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub residual: f64,
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than [`BRACKET_TOL`] and the residual
/// at the midpoint is below [`RESIDUAL_TOL`], or when the bracket can no
/// longer be split in floating point.
pub fn bisect<F>(variable: &'static str, mut lo: f64, mut hi: f64, mut f: F) -> Result<ThresholdResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    if f_lo == 0.0 {
        return Ok(ThresholdResult { variable, critical: lo, bracket: (lo, lo), iterations: 0, residual: 0.0 });
    }
    if f_hi == 0.0 {
        return Ok(ThresholdResult { variable, critical: hi, bracket: (hi, hi), iterations: 0, residual: 0.0 });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange {
            what: format!("rate in {variable}"),
            lo,
            hi,
        });
    }
    let lo_positive = f_lo > 0.0;
    let mut iterations = 0;
    loop {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if (hi - lo <= BRACKET_TOL && f_mid.abs() <= RESIDUAL_TOL)
            || mid <= lo
            || mid >= hi
            || iterations >= MAX_ITERATIONS
        {
            return Ok(ThresholdResult {
                variable,
                critical: mid,
                bracket: (lo, hi),
                iterations,
                residual: f_mid.abs(),
            });
        }
        iterations += 1;
        if f_mid == 0.0 {
            return Ok(ThresholdResult { variable, critical: mid, bracket: (mid, mid), iterations, residual: 0.0 });
        }
        if (f_mid > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Largest QBER with positive key rate on the depolarizing line.
///
/// Defined for `1sdi`, `di_chsh` and `dd`.
pub fn critical_qber(variant: RateVariant) -> Result<ThresholdResult> {
    if matches!(variant, RateVariant::OneSidedDiPs | RateVariant::OneSidedDiNonPs) {
        return Err(Error::UnsupportedVariant(format!(
            "{variant} has no QBER threshold (use critical_eta)"
        )));
    }
    let rate = |q: f64| rate_on_werner_line(variant, q).map(|r| r.rate);
    let res = bisect("q", 0.0, 0.5, rate)?;
    for k in 0..VERIFY_POINTS {
        let q = res.bracket.0 * k as f64 / VERIFY_POINTS as f64;
        if rate(q)? <= 0.0 {
            return Err(Error::NoSignChange {
                what: format!("{variant} rate is not positive at q = {q} below the root"),
                lo: 0.0,
                hi: res.critical,
            });
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EtaStrategy {
    PostSelected,
    NonPostSelected,
}

impl EtaStrategy {
    pub fn variant(self) -> RateVariant {
        match self {
            EtaStrategy::PostSelected => RateVariant::OneSidedDiPs,
            EtaStrategy::NonPostSelected => RateVariant::OneSidedDiNonPs,
        }
    }
}

/// Minimum detection efficiency for a positive lossy rate at visibility `nu`.
///
/// The search bracket starts at `1/sqrt3`, below which no violation is
/// possible. Returns [`Error::NoKeyPossible`] when even `eta = 1` gives no key.
pub fn critical_eta(nu: f64, strategy: EtaStrategy) -> Result<ThresholdResult> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::OutOfRange { name: "nu", value: nu, min: 0.0, max: 1.0 });
    }
    let variant = strategy.variant();
    let rate = |eta: f64| rate_at(variant, &NoiseParams::new(nu, eta)?).map(|r| r.rate);
    let lo = 1.0 / SQRT3;
    if rate(1.0)? <= 0.0 {
        return Err(Error::NoKeyPossible { nu });
    }
    bisect("eta", lo, 1.0, rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    Qber,
    Visibility,
    Efficiency,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Qber => "q",
            SweepVariable::Visibility => "nu",
            SweepVariable::Efficiency => "eta",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q" => Ok(SweepVariable::Qber),
            "nu" => Ok(SweepVariable::Visibility),
            "eta" => Ok(SweepVariable::Efficiency),
            other => Err(Error::InvalidGrid(format!("unknown sweep variable {other}"))),
        }
    }
}

/// Inclusive grid `start, start + step, ..., <= stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(Error::InvalidGrid("non-finite bounds".into()));
    }
    if start > stop {
        return Err(Error::InvalidGrid(format!("start {start} > stop {stop}")));
    }
    if start == stop {
        return Ok(vec![start]);
    }
    if !(step > 0.0) {
        return Err(Error::InvalidGrid(format!("step {step} must be positive")));
    }
    let n = ((stop - start) / step + 1e-9).floor() + 1.0;
    if n > MAX_GRID_POINTS as f64 {
        return Err(Error::InvalidGrid(format!("{n} points exceeds {MAX_GRID_POINTS}")));
    }
    Ok((0..n as usize).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Values of the parameters that are not swept.
    pub fixed: NoiseParams,
    pub variants: Vec<RateVariant>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub report: RateReport,
}

fn evaluate_point(spec: &SweepSpec, value: f64, variant: RateVariant) -> Result<RateReport> {
    match spec.variable {
        SweepVariable::Qber => match variant {
            RateVariant::OneSidedDiPs | RateVariant::OneSidedDiNonPs => {
                crate::error::check_range("q", value, 0.0, 0.5)?;
                rate_at(variant, &NoiseParams::new(1.0 - 2.0 * value, spec.fixed.eta_a)?)
            }
            _ => rate_on_werner_line(variant, value),
        },
        SweepVariable::Visibility => rate_at(variant, &NoiseParams::new(value, spec.fixed.eta_a)?),
        SweepVariable::Efficiency => rate_at(variant, &NoiseParams::new(spec.fixed.nu, value)?),
    }
}

/// One row per grid point per variant, grid-major, in grid order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.variants.is_empty() {
        return Err(Error::InvalidGrid("no variants requested".into()));
    }
    let points = grid(spec.start, spec.stop, spec.step)?;
    let per_point: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|&value| {
            spec.variants
                .iter()
                .map(|&v| evaluate_point(spec, value, v).map(|report| SweepRow { value, report }))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EtaThresholdRow {
    pub nu: f64,
    /// `None` where no efficiency gives a key.
    pub nonps: Option<f64>,
    pub ps: Option<f64>,
}

/// Efficiency thresholds of both strategies over a visibility grid.
pub fn eta_threshold_sweep(start: f64, stop: f64, step: f64) -> Result<Vec<EtaThresholdRow>> {
    let points = grid(start, stop, step)?;
    let solve = |nu: f64, s: EtaStrategy| match critical_eta(nu, s) {
        Ok(r) => Ok(Some(r.critical)),
        Err(Error::NoKeyPossible { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    points
        .par_iter()
        .map(|&nu| {
            Ok(EtaThresholdRow {
                nu,
                nonps: solve(nu, EtaStrategy::NonPostSelected)?,
                ps: solve(nu, EtaStrategy::PostSelected)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_on_a_line() {
        let r = bisect("x", 0.0, 1.0, |x| Ok(0.3 - x)).unwrap();
        assert!((r.critical - 0.3).abs() < 1e-9);
        assert!(r.residual <= RESIDUAL_TOL);
        assert!(r.bracket.1 - r.bracket.0 <= BRACKET_TOL);
        assert!(matches!(bisect("x", 0.0, 1.0, |x| Ok(x + 1.0)), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn qber_thresholds() {
        let one = critical_qber(RateVariant::OneSidedDi).unwrap();
        assert!((one.critical - 0.0862).abs() <= 5e-4, "{one:?}");
        let di = critical_qber(RateVariant::DiChsh).unwrap();
        assert!((di.critical - 0.071).abs() <= 1e-3, "{di:?}");
        let dd = critical_qber(RateVariant::DeviceDependent).unwrap();
        assert!((dd.critical - 0.110).abs() <= 1e-3, "{dd:?}");
        for r in [&one, &di, &dd] {
            assert!(r.residual <= RESIDUAL_TOL);
            assert!(r.bracket.1 - r.bracket.0 <= BRACKET_TOL);
            assert!(r.iterations <= 60);
        }
        assert!(di.critical < one.critical && one.critical < dd.critical);
        assert!(critical_qber(RateVariant::OneSidedDiPs).is_err());
    }

    #[test]
    fn efficiency_thresholds() {
        let nonps = critical_eta(1.0, EtaStrategy::NonPostSelected).unwrap();
        assert!((nonps.critical - 0.827).abs() <= 1e-3, "{nonps:?}");
        let ps = critical_eta(1.0, EtaStrategy::PostSelected).unwrap();
        assert!((ps.critical - 0.745).abs() <= 1e-3, "{ps:?}");
        let lower_vis = critical_eta(0.96, EtaStrategy::PostSelected).unwrap();
        assert!(lower_vis.critical > ps.critical);
        assert!(matches!(
            critical_eta(0.8, EtaStrategy::NonPostSelected),
            Err(Error::NoKeyPossible { .. })
        ));
        assert!(critical_eta(0.0, EtaStrategy::PostSelected).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(grid(0.0, 0.12, 0.001).unwrap().len(), 121);
        assert_eq!(grid(0.3, 0.3, 0.0).unwrap(), vec![0.3]);
        assert!(grid(0.5, 0.1, 0.1).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
        assert!(grid(0.0, 1.0, 1e-7).is_err());
    }

    #[test]
    fn sweep_rows_are_grid_major() {
        let spec = SweepSpec {
            variable: SweepVariable::Qber,
            start: 0.0,
            stop: 0.002,
            step: 0.001,
            fixed: NoiseParams::ideal(),
            variants: vec![RateVariant::DeviceDependent, RateVariant::OneSidedDi],
        };
        let rows = sweep(&spec).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].report.variant, RateVariant::DeviceDependent);
        assert_eq!(rows[1].report.variant, RateVariant::OneSidedDi);
        assert_eq!(rows[2].value, 0.001);
    }

    #[test]
    fn single_point_sweep() {
        let spec = SweepSpec {
            variable: SweepVariable::Efficiency,
            start: 0.9,
            stop: 0.9,
            step: 0.01,
            fixed: NoiseParams::ideal(),
            variants: vec![RateVariant::OneSidedDiPs],
        };
        assert_eq!(sweep(&spec).unwrap().len(), 1);
    }

    #[test]
    fn threshold_map_has_gaps_below_feasibility() {
        let rows = eta_threshold_sweep(0.80, 1.0, 0.05).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].nonps, None);
        assert!(rows[4].ps.unwrap() < rows[4].nonps.unwrap());
    }
}
