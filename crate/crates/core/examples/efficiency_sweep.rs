//! Lossy key rates against Alice's detection efficiency at full visibility.

use steerqkd::keyrates::{NoiseParams, RateVariant};
use steerqkd::thresholds::{sweep, SweepSpec, SweepVariable};

fn main() -> steerqkd::Result<()> {
    let spec = SweepSpec {
        variable: SweepVariable::Efficiency,
        start: 0.70,
        stop: 1.00,
        step: 0.01,
        fixed: NoiseParams::ideal(),
        variants: vec![RateVariant::OneSidedDiNonPs, RateVariant::OneSidedDiPs],
    };
    println!("eta,rate_nonps,rate_ps");
    for pair in sweep(&spec)?.chunks(2) {
        println!("{:.2},{:.6},{:.6}", pair[0].value, pair[0].report.rate, pair[1].report.rate);
    }
    Ok(())
}
