//! Closed-form asymptotic key rates.
//!
//! All rates have the Devetak-Winter shape `I(A:B) - chi(B:E)`:
//!
//! | variant      | mutual information    | Eve term                                  |
//! |--------------|-----------------------|-------------------------------------------|
//! | `1sdi`       | `1 - h(Q)`            | `h((1 + sqrt((F3^2 - 1)/2)) / 2)`         |
//! | `1sdi_nonps` | `1 - h((1 - nu eta)/2)` | same, with `F3 = eta nu sqrt3`          |
//! | `1sdi_ps`    | `eta (1 - h((1 - nu)/2))` | same, with `F3 = eta nu sqrt3`        |
//! | `di_chsh`    | `1 - h(Q)`            | `h((1 + sqrt((B/2)^2 - 1)) / 2)`          |
//! | `dd`         | `1 - h(Q)`            | `h(Q)`                                    |
//!
//! Entropies are in bits. The Eve terms are clamped to 1 (no certified
//! secrecy) when the witness does not exceed its classical bound.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_range, Error, Result};
use crate::steering::BellDiagonalState;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Slack allowed above the physical maxima of F3 and B.
pub const WITNESS_TOL: f64 = 1e-9;

/// Source visibility and Alice's detection efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub nu: f64,
    pub eta_a: f64,
}

impl NoiseParams {
    pub fn new(nu: f64, eta_a: f64) -> Result<Self> {
        check_range("nu", nu, 0.0, 1.0)?;
        check_range("eta", eta_a, 0.0, 1.0)?;
        Ok(Self { nu, eta_a })
    }

    pub fn ideal() -> Self {
        Self { nu: 1.0, eta_a: 1.0 }
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::ideal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateVariant {
    /// Steering-certified rate from observed `(Q, F3)`.
    OneSidedDi,
    /// Lossy detection with post-selected QBER.
    OneSidedDiPs,
    /// Lossy detection, nulls mapped to -1 and kept.
    OneSidedDiNonPs,
    /// Bell (CHSH) certified fully device-independent rate.
    DiChsh,
    /// Fully trusted devices.
    DeviceDependent,
}

impl RateVariant {
    pub const ALL: [RateVariant; 5] = [
        RateVariant::OneSidedDi,
        RateVariant::OneSidedDiPs,
        RateVariant::OneSidedDiNonPs,
        RateVariant::DiChsh,
        RateVariant::DeviceDependent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RateVariant::OneSidedDi => "1sdi",
            RateVariant::OneSidedDiPs => "1sdi_ps",
            RateVariant::OneSidedDiNonPs => "1sdi_nonps",
            RateVariant::DiChsh => "di_chsh",
            RateVariant::DeviceDependent => "dd",
        }
    }
}

impl fmt::Display for RateVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RateVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::UnsupportedVariant(s.to_string()))
    }
}

/// One evaluated key-rate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub variant: RateVariant,
    /// QBER entering the mutual information.
    pub q: f64,
    /// Observed CJWR value, for the steering variants.
    pub f3: Option<f64>,
    /// Observed CHSH value, for the Bell variant.
    pub chsh: Option<f64>,
    /// Alice's detection efficiency; the post-selected rate scales `i_ab` by it.
    pub eta_a: f64,
    pub i_ab: f64,
    pub chi_e: f64,
    pub rate: f64,
}

impl RateReport {
    pub fn has_key(&self) -> bool {
        self.rate > 0.0
    }
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_range("x", x, 0.0, 1.0)?;
    Ok(h(x))
}

/// Binary entropy without range checking; callers guarantee `x` in [0, 1].
fn h(x: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(x) + term(1.0 - x)
}

/// `-sum L_i log2 L_i - h(L_1 + L_3)`, the upper bound on Eve's Holevo
/// information when Bob measures `sigma_z` on a Bell-diagonal state.
pub fn holevo_bell_diagonal_upper(lam: &BellDiagonalState) -> f64 {
    let l = lam.lam();
    let shannon: f64 = l.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    (shannon - h((l[0] + l[2]).clamp(0.0, 1.0))).max(0.0)
}

/// `R^2 = (L1 - L2)^2 + (L3 - L4)^2`.
pub fn r_squared(lam: &BellDiagonalState) -> f64 {
    let l = lam.lam();
    (l[0] - l[1]).powi(2) + (l[2] - l[3]).powi(2)
}

/// Entropic bound on `S(L)` as a function of `R^2`: `h((1 + sqrt(2R^2 - 1))/2)`
/// above `R^2 = 1/2`, and 1 below.
pub fn s_lambda_bound(r2: f64) -> Result<f64> {
    check_range("r2", r2, 0.0, 1.0)?;
    if r2 > 0.5 {
        Ok(h((1.0 + (2.0 * r2 - 1.0).sqrt()) / 2.0))
    } else {
        Ok(1.0)
    }
}

/// Eve's Holevo information bound for an observed steering value.
///
/// Returns 1 when `f3 <= 1` (no violation) and is non-increasing in `f3`.
pub fn eve_info_from_f3(f3: f64) -> Result<f64> {
    check_range("f3", f3, 0.0, SQRT3 + WITNESS_TOL)?;
    if f3 <= 1.0 {
        return Ok(1.0);
    }
    let f3 = f3.min(SQRT3);
    let root = ((f3 * f3 - 1.0) / 2.0).sqrt().min(1.0);
    Ok(h((1.0 + root) / 2.0))
}

fn eve_info_from_chsh(b: f64) -> f64 {
    if b <= 2.0 {
        return 1.0;
    }
    let b = b.min(TSIRELSON);
    let root = ((b / 2.0).powi(2) - 1.0).sqrt().min(1.0);
    h((1.0 + root) / 2.0)
}

fn check_qber(q: f64) -> Result<f64> {
    check_range("q", q, 0.0, 0.5)
}

/// Steering-certified rate `1 - h(Q) - h((1 + sqrt((F3^2 - 1)/2))/2)`.
pub fn rate_1sdi(q: f64, f3: f64) -> Result<RateReport> {
    check_qber(q)?;
    let chi_e = eve_info_from_f3(f3)?;
    let i_ab = 1.0 - h(q);
    Ok(RateReport {
        variant: RateVariant::OneSidedDi,
        q,
        f3: Some(f3),
        chsh: None,
        eta_a: 1.0,
        i_ab,
        chi_e,
        rate: i_ab - chi_e,
    })
}

/// CHSH-certified rate `1 - h(Q) - h((1 + sqrt((B/2)^2 - 1))/2)`.
pub fn rate_di_chsh(q: f64, b: f64) -> Result<RateReport> {
    check_qber(q)?;
    check_range("b", b, 0.0, TSIRELSON + WITNESS_TOL)?;
    let chi_e = eve_info_from_chsh(b);
    let i_ab = 1.0 - h(q);
    Ok(RateReport {
        variant: RateVariant::DiChsh,
        q,
        f3: None,
        chsh: Some(b),
        eta_a: 1.0,
        i_ab,
        chi_e,
        rate: i_ab - chi_e,
    })
}

/// Trusted-device rate `1 - 2h(Q)`.
pub fn rate_dd(q: f64) -> Result<RateReport> {
    check_qber(q)?;
    let i_ab = 1.0 - h(q);
    let chi_e = h(q);
    Ok(RateReport {
        variant: RateVariant::DeviceDependent,
        q,
        f3: None,
        chsh: None,
        eta_a: 1.0,
        i_ab,
        chi_e,
        rate: i_ab - chi_e,
    })
}

/// Observed statistics of the depolarized source with lossy Alice detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerObservables {
    /// QBER keeping null rounds (mapped to -1): `(1 - nu eta)/2`.
    pub q_nonps: f64,
    /// QBER after discarding null rounds: `(1 - nu)/2`.
    pub q_ps: f64,
    /// CJWR value over all rounds: `eta nu sqrt3`.
    pub f3: f64,
}

pub fn observables_from_werner(np: &NoiseParams) -> WernerObservables {
    WernerObservables {
        q_nonps: (1.0 - np.nu * np.eta_a) / 2.0,
        q_ps: (1.0 - np.nu) / 2.0,
        f3: np.eta_a * np.nu * SQRT3,
    }
}

/// Lossy rate without post-selection.
pub fn rate_1sdi_nonps(np: &NoiseParams) -> Result<RateReport> {
    let obs = observables_from_werner(np);
    let chi_e = eve_info_from_f3(obs.f3)?;
    let i_ab = 1.0 - h(obs.q_nonps);
    Ok(RateReport {
        variant: RateVariant::OneSidedDiNonPs,
        q: obs.q_nonps,
        f3: Some(obs.f3),
        chsh: None,
        eta_a: np.eta_a,
        i_ab,
        chi_e,
        rate: i_ab - chi_e,
    })
}

/// Lossy rate with post-selected QBER: `eta (1 - h(Q_PS)) - chi(F3)`.
///
/// The Eve term always uses the F3 of the full ensemble, nulls included.
pub fn rate_1sdi_ps(np: &NoiseParams) -> Result<RateReport> {
    let obs = observables_from_werner(np);
    post_selected_report(obs.q_ps, obs.f3, np.eta_a)
}

pub(crate) fn post_selected_report(q_ps: f64, f3: f64, eta_a: f64) -> Result<RateReport> {
    check_qber(q_ps)?;
    check_range("eta", eta_a, 0.0, 1.0)?;
    let chi_e = eve_info_from_f3(f3)?;
    let i_ab = 1.0 - h(q_ps);
    Ok(RateReport {
        variant: RateVariant::OneSidedDiPs,
        q: q_ps,
        f3: Some(f3),
        chsh: None,
        eta_a,
        i_ab,
        chi_e,
        rate: eta_a * i_ab - chi_e,
    })
}

/// Evaluates `variant` at the statistics the depolarized source produces
/// under `np`. The QBER-only variants use the non-post-selected QBER, and
/// the CHSH variant uses `B = 2 sqrt2 (1 - 2Q)`.
pub fn rate_at(variant: RateVariant, np: &NoiseParams) -> Result<RateReport> {
    let obs = observables_from_werner(np);
    match variant {
        RateVariant::OneSidedDi => rate_1sdi(obs.q_nonps, obs.f3),
        RateVariant::OneSidedDiPs => rate_1sdi_ps(np),
        RateVariant::OneSidedDiNonPs => rate_1sdi_nonps(np),
        RateVariant::DiChsh => rate_di_chsh(obs.q_nonps, TSIRELSON * (1.0 - 2.0 * obs.q_nonps)),
        RateVariant::DeviceDependent => rate_dd(obs.q_nonps),
    }
}

/// Evaluates `variant` on the depolarizing line through QBER `q`:
/// `F3 = sqrt3 (1 - 2Q)`, `B = 2 sqrt2 (1 - 2Q)`.
pub fn rate_on_werner_line(variant: RateVariant, q: f64) -> Result<RateReport> {
    check_qber(q)?;
    match variant {
        RateVariant::OneSidedDi => rate_1sdi(q, SQRT3 * (1.0 - 2.0 * q)),
        RateVariant::DiChsh => rate_di_chsh(q, TSIRELSON * (1.0 - 2.0 * q)),
        RateVariant::DeviceDependent => rate_dd(q),
        RateVariant::OneSidedDiPs | RateVariant::OneSidedDiNonPs => {
            rate_at(variant, &NoiseParams::new(1.0 - 2.0 * q, 1.0)?)
        }
    }
}
