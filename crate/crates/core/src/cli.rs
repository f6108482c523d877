//! Command-line front end. Exit codes: 0 success, 1 invalid arguments,
//! 2 domain errors or failed verification.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::keyrates::{
    rate_1sdi, rate_at, rate_dd, rate_di_chsh, NoiseParams, RateReport, RateVariant, SQRT3, TSIRELSON,
};
use crate::oracle;
use crate::simulator::{run_protocol, AliceOutcome, ProtocolConfig, SimStats};
use crate::thresholds::{
    critical_eta, critical_qber, eta_threshold_sweep, sweep, EtaStrategy, SweepSpec, SweepVariable,
    ThresholdResult,
};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "STEERQKD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "steerqkd", version, about = "Key rates, thresholds and simulation for steering-based 1sDI-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one key-rate formula
    Rate(RateArgs),
    /// Tabulate rates over a parameter grid
    Sweep(SweepArgs),
    /// Find the critical QBER or detection efficiency
    Threshold(ThresholdArgs),
    /// Monte Carlo simulation of the protocol
    Simulate(SimulateArgs),
    /// Run the brute-force oracle checks
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct RateArgs {
    /// One of 1sdi, 1sdi_ps, 1sdi_nonps, di_chsh, dd
    #[arg(long)]
    variant: String,
    /// QBER; without it the rate is evaluated at the source given by --nu/--eta
    #[arg(long)]
    q: Option<f64>,
    /// CJWR value (default: sqrt3 (1 - 2q))
    #[arg(long)]
    f3: Option<f64>,
    /// CHSH value (default: 2 sqrt2 (1 - 2q))
    #[arg(long)]
    b: Option<f64>,
    /// Visibility
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Alice's detection efficiency
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Also write the report as CSV
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Predefined table: qber (q in [0, 0.12]), efficiency (eta in [0.70, 1.00])
    /// or threshold-map (nu in [0.80, 1.00])
    #[arg(long, value_enum, conflicts_with_all = ["variable", "variants"])]
    preset: Option<Preset>,
    /// Swept parameter: q, nu or eta
    #[arg(long, required_unless_present = "preset")]
    variable: Option<String>,
    /// Comma-separated rate variants
    #[arg(long, value_delimiter = ',', required_unless_present = "preset")]
    variants: Vec<String>,
    /// Grid start (preset default if omitted)
    #[arg(long)]
    start: Option<f64>,
    /// Grid stop, inclusive
    #[arg(long)]
    stop: Option<f64>,
    /// Grid step
    #[arg(long)]
    step: Option<f64>,
    /// Visibility when not swept
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Detection efficiency when not swept
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// CSV destination (default: standard output)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// dd, 1sdi and di_chsh rates against QBER
    Qber,
    /// Lossy rates against efficiency
    Efficiency,
    /// Efficiency thresholds against visibility
    ThresholdMap,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    /// 1sdi, di_chsh or dd for a critical QBER; 1sdi_ps or 1sdi_nonps for a critical efficiency
    #[arg(long)]
    variant: String,
    /// Visibility for the efficiency thresholds
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Number of rounds
    #[arg(long, default_value_t = 1_000_000)]
    rounds: u64,
    /// Visibility
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    /// Alice's detection efficiency
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Discard null rounds when estimating the QBER
    #[arg(long)]
    postselect: bool,
    /// Write the summary statistics as CSV
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the (x, y, a, b) count table as CSV
    #[arg(long)]
    counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// RNG seed for the sampled checks
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Write one CSV row per criterion
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let mut stdout = io::stdout().lock();
    match run(cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn configure_threads() {
    let Ok(value) = std::env::var(THREADS_ENV) else { return };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
                log::debug!("global thread pool already initialized");
            }
        }
        _ => log::warn!("ignoring {THREADS_ENV}={value:?}: expected a positive integer"),
    }
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Rate(a) => cmd_rate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Threshold(a) => cmd_threshold(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

/// Fixed six-decimal formatting without a negative zero.
pub fn f6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn e6(x: f64) -> String {
    format!("{x:.6e}")
}

fn write_csv(dest: Option<&Path>, header: &[&str], rows: &[Vec<String>], stdout: &mut dyn Write) -> Result<()> {
    let sink: Box<dyn Write + '_> = match dest {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(&mut *stdout),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_variant(s: &str) -> Result<RateVariant> {
    s.parse()
}

fn rate_report(a: &RateArgs, variant: RateVariant) -> Result<RateReport> {
    let np = NoiseParams::new(a.nu, a.eta)?;
    let Some(q) = a.q else {
        if a.f3.is_some() || a.b.is_some() {
            return Err(Error::InvalidSettings("--f3 and --b require --q".into()));
        }
        return rate_at(variant, &np);
    };
    match variant {
        RateVariant::OneSidedDi => rate_1sdi(q, a.f3.unwrap_or(SQRT3 * (1.0 - 2.0 * q))),
        RateVariant::DiChsh => rate_di_chsh(q, a.b.unwrap_or(TSIRELSON * (1.0 - 2.0 * q))),
        RateVariant::DeviceDependent => rate_dd(q),
        RateVariant::OneSidedDiPs | RateVariant::OneSidedDiNonPs => Err(Error::InvalidSettings(format!(
            "{variant} is evaluated from --nu and --eta, not --q"
        ))),
    }
}

fn cmd_rate(a: RateArgs, out: &mut dyn Write) -> Result<i32> {
    let variant = parse_variant(&a.variant)?;
    if let Some(q) = a.q {
        crate::error::check_range("q", q, 0.0, 0.5)?;
    }
    let r = rate_report(&a, variant)?;
    writeln!(out, "variant: {}", r.variant)?;
    writeln!(out, "Q: {}", f6(r.q))?;
    if let Some(f3) = r.f3 {
        writeln!(out, "F3: {}", f6(f3))?;
    }
    if let Some(b) = r.chsh {
        writeln!(out, "B: {}", f6(b))?;
    }
    if matches!(variant, RateVariant::OneSidedDiPs | RateVariant::OneSidedDiNonPs) {
        writeln!(out, "eta_A: {}", f6(r.eta_a))?;
    }
    writeln!(out, "I_AB: {}", f6(r.i_ab))?;
    writeln!(out, "chi_E: {}", f6(r.chi_e))?;
    writeln!(out, "rate: {}", f6(r.rate))?;
    if let Some(path) = &a.out {
        let opt = |v: Option<f64>| v.map(f6).unwrap_or_default();
        write_csv(
            Some(path),
            &["variant", "q", "f3", "chsh", "eta_a", "i_ab", "chi_e", "rate"],
            &[vec![
                r.variant.to_string(),
                f6(r.q),
                opt(r.f3),
                opt(r.chsh),
                f6(r.eta_a),
                f6(r.i_ab),
                f6(r.chi_e),
                f6(r.rate),
            ]],
            out,
        )?;
    }
    Ok(0)
}

/// Wide table: one row per grid point, one rate column per variant.
fn rate_table(spec: &SweepSpec) -> Result<Vec<(f64, Vec<f64>)>> {
    let rows = sweep(spec)?;
    Ok(rows
        .chunks(spec.variants.len())
        .map(|c| (c[0].value, c.iter().map(|r| r.report.rate).collect()))
        .collect())
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let fixed = NoiseParams::new(a.nu, a.eta)?;
    let pick = |default: f64, given: Option<f64>| given.unwrap_or(default);
    let dest = a.out.as_deref();
    match a.preset {
        Some(Preset::Qber) => {
            let spec = SweepSpec {
                variable: SweepVariable::Qber,
                start: pick(0.0, a.start),
                stop: pick(0.12, a.stop),
                step: pick(0.001, a.step),
                fixed,
                variants: vec![RateVariant::DeviceDependent, RateVariant::OneSidedDi, RateVariant::DiChsh],
            };
            let rows: Vec<Vec<String>> = rate_table(&spec)?
                .into_iter()
                .map(|(q, r)| vec![f6(q), f6(100.0 * q), f6(r[0]), f6(r[1]), f6(r[2])])
                .collect();
            write_csv(dest, &["q", "q_pct", "rate_dd", "rate_1sdi", "rate_di"], &rows, out)?;
        }
        Some(Preset::Efficiency) => {
            let spec = SweepSpec {
                variable: SweepVariable::Efficiency,
                start: pick(0.70, a.start),
                stop: pick(1.00, a.stop),
                step: pick(0.001, a.step),
                fixed,
                variants: vec![RateVariant::OneSidedDiNonPs, RateVariant::OneSidedDiPs],
            };
            let rows: Vec<Vec<String>> = rate_table(&spec)?
                .into_iter()
                .map(|(eta, r)| vec![f6(eta), f6(100.0 * eta), f6(r[0]), f6(r[1])])
                .collect();
            write_csv(dest, &["eta", "eta_pct", "rate_nonps", "rate_ps"], &rows, out)?;
        }
        Some(Preset::ThresholdMap) => {
            let table = eta_threshold_sweep(pick(0.80, a.start), pick(1.00, a.stop), pick(0.005, a.step))?;
            let cell = |v: Option<f64>| v.map(f6).unwrap_or_default();
            let rows: Vec<Vec<String>> = table
                .into_iter()
                .map(|r| vec![f6(r.nu), f6(100.0 * r.nu), cell(r.nonps), cell(r.ps)])
                .collect();
            write_csv(dest, &["nu", "nu_pct", "eta_threshold_nonps", "eta_threshold_ps"], &rows, out)?;
        }
        None => {
            let variable: SweepVariable = a.variable.as_deref().unwrap_or_default().parse()?;
            let variants = a.variants.iter().map(|v| parse_variant(v.trim())).collect::<Result<Vec<_>>>()?;
            let missing = |name| Error::InvalidGrid(format!("--{name} is required without --preset"));
            let spec = SweepSpec {
                variable,
                start: a.start.ok_or_else(|| missing("start"))?,
                stop: a.stop.ok_or_else(|| missing("stop"))?,
                step: a.step.ok_or_else(|| missing("step"))?,
                fixed,
                variants,
            };
            let mut header = vec![variable.name().to_string()];
            header.extend(spec.variants.iter().map(|v| format!("rate_{v}")));
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = rate_table(&spec)?
                .into_iter()
                .map(|(x, r)| std::iter::once(f6(x)).chain(r.into_iter().map(f6)).collect())
                .collect();
            write_csv(dest, &header, &rows, out)?;
        }
    }
    Ok(0)
}

fn print_threshold(out: &mut dyn Write, label: &str, r: &ThresholdResult) -> io::Result<()> {
    writeln!(out, "{label}: {}", f6(r.critical))?;
    writeln!(out, "bracket: [{}, {}]", f6(r.bracket.0), f6(r.bracket.1))?;
    writeln!(out, "iterations: {}", r.iterations)?;
    writeln!(out, "residual: {}", e6(r.residual))
}

fn cmd_threshold(a: ThresholdArgs, out: &mut dyn Write) -> Result<i32> {
    let variant = parse_variant(&a.variant)?;
    writeln!(out, "variant: {variant}")?;
    let strategy = match variant {
        RateVariant::OneSidedDiPs => EtaStrategy::PostSelected,
        RateVariant::OneSidedDiNonPs => EtaStrategy::NonPostSelected,
        _ => {
            print_threshold(out, "critical_q", &critical_qber(variant)?)?;
            return Ok(0);
        }
    };
    writeln!(out, "nu: {}", f6(a.nu))?;
    match critical_eta(a.nu, strategy) {
        Ok(r) => print_threshold(out, "critical_eta", &r)?,
        Err(Error::NoKeyPossible { .. }) => writeln!(out, "critical_eta: no key possible")?,
        Err(e) => return Err(e),
    }
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let config = ProtocolConfig::new(a.rounds, NoiseParams::new(a.nu, a.eta)?, a.seed).with_postselect(a.postselect);
    let s = run_protocol(&config)?;
    writeln!(out, "rounds: {}", s.rounds)?;
    writeln!(out, "key_rounds: {}", s.n_key_rounds)?;
    writeln!(out, "sifting_fraction: {}", f6(s.sifting_fraction))?;
    writeln!(out, "detection_rate: {}", f6(s.detection_rate))?;
    writeln!(out, "q_hat: {} +/- {}", f6(s.q_hat), f6(s.q_hat_stderr))?;
    writeln!(out, "f3_hat: {} +/- {}", f6(s.f3_hat), f6(s.f3_hat_stderr))?;
    writeln!(out, "rate_hat: {}", f6(s.rate_hat))?;
    if let Some(path) = &a.out {
        write_csv(Some(path), &STATS_HEADER, &[stats_row(&config, &s)], out)?;
    }
    if let Some(path) = &a.counts {
        write_csv(Some(path), &["x", "y", "a", "b", "count"], &count_rows(&s), out)?;
    }
    Ok(0)
}

const STATS_HEADER: [&str; 14] = [
    "rounds",
    "nu",
    "eta",
    "seed",
    "postselect",
    "n_key_rounds",
    "sifting_fraction",
    "detection_rate",
    "q_hat",
    "q_hat_stderr",
    "f3_hat",
    "f3_hat_stderr",
    "rate_hat",
    "rate_variant",
];

fn stats_row(c: &ProtocolConfig, s: &SimStats) -> Vec<String> {
    let variant = if s.postselect { RateVariant::OneSidedDiPs } else { RateVariant::OneSidedDiNonPs };
    vec![
        s.rounds.to_string(),
        f6(c.noise.nu),
        f6(c.noise.eta_a),
        c.seed.to_string(),
        s.postselect.to_string(),
        s.n_key_rounds.to_string(),
        f6(s.sifting_fraction),
        f6(s.detection_rate),
        f6(s.q_hat),
        f6(s.q_hat_stderr),
        f6(s.f3_hat),
        f6(s.f3_hat_stderr),
        f6(s.rate_hat),
        variant.to_string(),
    ]
}

fn count_rows(s: &SimStats) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for x in 0..3 {
        for y in 0..3 {
            for a in [AliceOutcome::Plus, AliceOutcome::Minus, AliceOutcome::Null] {
                let a_label = match a {
                    AliceOutcome::Plus => "+1",
                    AliceOutcome::Minus => "-1",
                    AliceOutcome::Null => "null",
                };
                for (b, b_label) in ["+1", "-1"].into_iter().enumerate() {
                    rows.push(vec![
                        (x + 1).to_string(),
                        (y + 1).to_string(),
                        a_label.into(),
                        b_label.into(),
                        s.counts[x][y][a.index()][b].to_string(),
                    ]);
                }
            }
        }
    }
    rows
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let reports = oracle::run_all(a.seed)?;
    for r in &reports {
        write!(out, "{r}")?;
    }
    let failed = reports.iter().filter(|r| !r.pass()).count();
    writeln!(out, "{} checks, {failed} failed", reports.len())?;
    if let Some(path) = &a.out {
        let rows: Vec<Vec<String>> = reports
            .iter()
            .flat_map(|r| {
                r.criteria.iter().map(move |c| {
                    vec![
                        r.check.clone(),
                        c.name.clone(),
                        r.trials.to_string(),
                        e6(c.max_violation),
                        e6(c.tolerance),
                        c.pass().to_string(),
                        c.worst_case.clone(),
                    ]
                })
            })
            .collect();
        write_csv(
            Some(path),
            &["check", "criterion", "trials", "max_violation", "tolerance", "pass", "worst_case"],
            &rows,
            out,
        )?;
    }
    Ok(if failed == 0 { 0 } else { 2 })
}
