//! Round-by-round Monte Carlo of the protocol on the depolarized source.
//!
//! Each round draws the inputs `x, y`, samples the ideal outcome pair from
//! the Born rule and then erases Alice's outcome with probability
//! `1 - eta`. Rounds are split into fixed-size blocks; block `k` uses a
//! ChaCha8 stream `k` under the configured seed, so results do not depend
//! on how blocks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_range, Error, Result};
use crate::keyrates::{
    post_selected_report, rate_1sdi, rate_dd, NoiseParams, RateReport, RateVariant,
    SQRT3,
};
use crate::noise::werner;
use crate::quantum::{tensor, DensityMatrix, Observable};
use crate::steering::MeasurementSettings;

/// Rounds per RNG stream.
pub const BLOCK_SIZE: u64 = 1 << 16;
const PROB_TOL: f64 = 1e-12;

/// Counts indexed `[x][y][a_raw][b]` with `a_raw` as in [`AliceOutcome::index`]
/// and `b` 0 for `+1`, 1 for `-1`.
pub type CountTable = [[[[u64; 2]; 3]; 3]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub rounds: u64,
    pub noise: NoiseParams,
    pub alice_probs: [f64; 3],
    pub bob_probs: [f64; 3],
    pub postselect: bool,
    pub seed: u64,
}

impl ProtocolConfig {
    /// Uniform, independent inputs.
    pub fn new(rounds: u64, noise: NoiseParams, seed: u64) -> Self {
        Self {
            rounds,
            noise,
            alice_probs: [1.0 / 3.0; 3],
            bob_probs: [1.0 / 3.0; 3],
            postselect: false,
            seed,
        }
    }

    pub fn with_postselect(mut self, postselect: bool) -> Self {
        self.postselect = postselect;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidSettings("number of rounds must be positive".into()));
        }
        NoiseParams::new(self.noise.nu, self.noise.eta_a)?;
        check_distribution("Alice", &self.alice_probs)?;
        check_distribution("Bob", &self.bob_probs)
    }
}

fn check_distribution(who: &str, p: &[f64; 3]) -> Result<()> {
    if p.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::InvalidDistribution(format!("{who} setting probabilities {p:?}")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!("{who} setting probabilities sum to {sum}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AliceOutcome {
    Plus,
    Minus,
    Null,
}

impl AliceOutcome {
    pub fn index(self) -> usize {
        match self {
            AliceOutcome::Plus => 0,
            AliceOutcome::Minus => 1,
            AliceOutcome::Null => 2,
        }
    }

    /// `+1` or `-1`, with the null outcome reported as `-1`.
    pub fn mapped(self) -> i8 {
        match self {
            AliceOutcome::Plus => 1,
            AliceOutcome::Minus | AliceOutcome::Null => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    /// Inputs in `1..=3`.
    pub x: u8,
    pub y: u8,
    pub a_raw: AliceOutcome,
    pub a_mapped: i8,
    pub b: i8,
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

fn cumulative<const N: usize>(p: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    let mut acc = 0.0;
    for (o, &v) in out.iter_mut().zip(p) {
        acc += v;
        *o = acc;
    }
    out
}

/// Precomputed Born-rule tables for one source and measurement set.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSampler {
    /// `P(a, b | x, y)` for ideal outcomes, cell order `(+,+), (+,-), (-,+), (-,-)`.
    joint: [[[f64; 4]; 3]; 3],
    joint_cdf: [[[f64; 4]; 3]; 3],
    alice_cdf: [f64; 3],
    bob_cdf: [f64; 3],
    eta: f64,
}

impl RoundSampler {
    pub fn new(
        rho: &DensityMatrix,
        alice: &[Observable; 3],
        bob: &[Observable; 3],
        eta: f64,
        alice_probs: [f64; 3],
        bob_probs: [f64; 3],
    ) -> Result<Self> {
        check_range("eta", eta, 0.0, 1.0)?;
        check_distribution("Alice", &alice_probs)?;
        check_distribution("Bob", &bob_probs)?;
        let mut joint = [[[0.0; 4]; 3]; 3];
        for (x, a) in alice.iter().enumerate() {
            let (ap, am) = a.projectors();
            for (y, b) in bob.iter().enumerate() {
                let (bp, bm) = b.projectors();
                let mut cell = [0.0; 4];
                for (k, (pa, pb)) in [(&ap, &bp), (&ap, &bm), (&am, &bp), (&am, &bm)].into_iter().enumerate() {
                    cell[k] = rho.expectation(&tensor(pa, pb))?.max(0.0);
                }
                let total: f64 = cell.iter().sum();
                joint[x][y] = cell.map(|v| v / total);
            }
        }
        let joint_cdf = joint.map(|row| row.map(|cell| cumulative(&cell)));
        Ok(Self {
            joint,
            joint_cdf,
            alice_cdf: cumulative(&alice_probs),
            bob_cdf: cumulative(&bob_probs),
            eta,
        })
    }

    /// Sampler for the protocol settings on `werner(nu)`.
    pub fn for_config(config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        let settings = MeasurementSettings::protocol();
        let alice: [Observable; 3] = settings.alice_observables().try_into().expect("three settings");
        let bob: [Observable; 3] = settings.bob_observables().try_into().expect("three settings");
        Self::new(
            &werner(config.noise.nu)?,
            &alice,
            &bob,
            config.noise.eta_a,
            config.alice_probs,
            config.bob_probs,
        )
    }

    /// Ideal-outcome probabilities `P(a, b | x, y)` for 0-based inputs.
    pub fn joint(&self, x: usize, y: usize) -> [f64; 4] {
        self.joint[x][y]
    }

    /// Probability of the count cell `[x][y][a_raw][b]` in a single round.
    pub fn cell_probability(&self, x: usize, y: usize, a_raw: AliceOutcome, b: usize) -> f64 {
        let px = self.alice_cdf[x] - if x == 0 { 0.0 } else { self.alice_cdf[x - 1] };
        let py = self.bob_cdf[y] - if y == 0 { 0.0 } else { self.bob_cdf[y - 1] };
        let j = &self.joint[x][y];
        let p_ab = match a_raw {
            AliceOutcome::Plus => self.eta * j[b],
            AliceOutcome::Minus => self.eta * j[2 + b],
            AliceOutcome::Null => (1.0 - self.eta) * (j[b] + j[2 + b]),
        };
        px * py * p_ab
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RoundRecord {
        let x = pick(&self.alice_cdf, rng.random::<f64>());
        let y = pick(&self.bob_cdf, rng.random::<f64>());
        let cell = pick(&self.joint_cdf[x][y], rng.random::<f64>());
        let detected = rng.random::<f64>() < self.eta;
        let a_raw = match (detected, cell < 2) {
            (false, _) => AliceOutcome::Null,
            (true, true) => AliceOutcome::Plus,
            (true, false) => AliceOutcome::Minus,
        };
        RoundRecord {
            x: x as u8 + 1,
            y: y as u8 + 1,
            a_raw,
            a_mapped: a_raw.mapped(),
            b: if cell % 2 == 0 { 1 } else { -1 },
        }
    }
}

fn record(counts: &mut CountTable, r: &RoundRecord) {
    let b = if r.b == 1 { 0 } else { 1 };
    counts[r.x as usize - 1][r.y as usize - 1][r.a_raw.index()][b] += 1;
}

fn merge(mut a: CountTable, b: CountTable) -> CountTable {
    for x in 0..3 {
        for y in 0..3 {
            for a_raw in 0..3 {
                for bb in 0..2 {
                    a[x][y][a_raw][bb] += b[x][y][a_raw][bb];
                }
            }
        }
    }
    a
}

/// Counts from `rounds` rounds, blocks sampled in parallel.
pub fn sample_counts(sampler: &RoundSampler, rounds: u64, seed: u64) -> CountTable {
    let blocks = rounds.div_ceil(BLOCK_SIZE);
    (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let len = BLOCK_SIZE.min(rounds - block * BLOCK_SIZE);
            let mut counts = CountTable::default();
            for _ in 0..len {
                record(&mut counts, &sampler.sample(&mut rng));
            }
            counts
        })
        .reduce(CountTable::default, merge)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub rounds: u64,
    pub postselect: bool,
    /// Rounds with `x = y = 3`.
    pub n_key_rounds: u64,
    pub q_hat: f64,
    pub q_hat_stderr: f64,
    pub f3_hat: f64,
    pub f3_hat_stderr: f64,
    /// Fraction of key rounds in which Alice's detector clicked.
    pub detection_rate: f64,
    /// `n_key_rounds / rounds`.
    pub sifting_fraction: f64,
    pub rate_hat: f64,
    pub counts: CountTable,
}

/// `(k + 1)/(n + 2)`, which keeps standard errors positive at `k = 0` or `k = n`.
fn smoothed(k: u64, n: u64) -> f64 {
    (k as f64 + 1.0) / (n as f64 + 2.0)
}

/// Estimates from a count table.
pub fn estimate(counts: &CountTable, postselect: bool) -> Result<SimStats> {
    let rounds: u64 = counts.iter().flatten().flatten().flatten().sum();
    if rounds == 0 {
        return Err(Error::InsufficientData("no rounds".into()));
    }
    let key = &counts[2][2];
    let n_key_rounds: u64 = key.iter().flatten().sum();
    if n_key_rounds < 2 {
        return Err(Error::InsufficientData(format!("{n_key_rounds} key rounds")));
    }
    let detected = n_key_rounds - key[2][0] - key[2][1];
    let (errors, n_q) = if postselect {
        (key[0][1] + key[1][0], detected)
    } else {
        (key[0][1] + key[1][0] + key[2][0], n_key_rounds)
    };
    if n_q < 2 {
        return Err(Error::InsufficientData(format!("{n_q} detected key rounds")));
    }
    let q_hat = errors as f64 / n_q as f64;
    let pq = smoothed(errors, n_q);
    let q_hat_stderr = (pq * (1.0 - pq) / n_q as f64).sqrt();

    let mut sum = 0.0;
    let mut var = 0.0;
    for i in 0..3 {
        let c = &counts[i][i];
        let n: u64 = c.iter().flatten().sum();
        if n < 2 {
            return Err(Error::InsufficientData(format!("{n} rounds with x = y = {}", i + 1)));
        }
        // mapped outcomes agree when a = b = +1 or a in {-1, null}, b = -1
        let agree = c[0][0] + c[1][1] + c[2][1];
        sum += (2.0 * agree as f64 - n as f64) / n as f64;
        let p = smoothed(agree, n);
        var += 4.0 * p * (1.0 - p) / n as f64;
    }
    let mut stats = SimStats {
        rounds,
        postselect,
        n_key_rounds,
        q_hat,
        q_hat_stderr,
        f3_hat: sum.abs() / SQRT3,
        f3_hat_stderr: var.sqrt() / SQRT3,
        detection_rate: detected as f64 / n_key_rounds as f64,
        sifting_fraction: n_key_rounds as f64 / rounds as f64,
        rate_hat: 0.0,
        counts: *counts,
    };
    let variant = if postselect { RateVariant::OneSidedDiPs } else { RateVariant::OneSidedDiNonPs };
    stats.rate_hat = empirical_rate(&stats, variant)?.rate;
    Ok(stats)
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<SimStats> {
    let sampler = RoundSampler::for_config(config)?;
    let counts = sample_counts(&sampler, config.rounds, config.seed);
    estimate(&counts, config.postselect)
}

/// Plugs the point estimates into the rate formula of `variant`.
///
/// `f3_hat` above `sqrt3` and `q_hat` above one half can only come from
/// sampling fluctuations; both are clamped with a warning.
pub fn empirical_rate(stats: &SimStats, variant: RateVariant) -> Result<RateReport> {
    let mut f3 = stats.f3_hat;
    if f3 > SQRT3 {
        log::warn!("f3_hat = {f3} exceeds sqrt3, clamped (statistical fluctuation)");
        f3 = SQRT3;
    }
    let mut q = stats.q_hat;
    if q > 0.5 {
        log::warn!("q_hat = {q} exceeds 1/2, clamped");
        q = 0.5;
    }
    match variant {
        RateVariant::OneSidedDi => rate_1sdi(q, f3),
        RateVariant::OneSidedDiNonPs if !stats.postselect => {
            let mut r = rate_1sdi(q, f3)?;
            r.variant = variant;
            r.eta_a = stats.detection_rate;
            Ok(r)
        }
        RateVariant::OneSidedDiPs if stats.postselect => post_selected_report(q, f3, stats.detection_rate),
        RateVariant::DeviceDependent => rate_dd(q),
        RateVariant::OneSidedDiNonPs | RateVariant::OneSidedDiPs => Err(Error::UnsupportedVariant(format!(
            "{variant} does not match the QBER convention of these statistics (postselect = {})",
            stats.postselect
        ))),
        RateVariant::DiChsh => Err(Error::UnsupportedVariant(
            "the protocol does not record CHSH statistics".into(),
        )),
    }
}
