//! Key rate against QBER for the three models, with zero crossings.

use steerqkd::keyrates::{NoiseParams, RateVariant};
use steerqkd::thresholds::{sweep, SweepSpec, SweepVariable};

fn main() -> steerqkd::Result<()> {
    let variants = vec![RateVariant::DeviceDependent, RateVariant::OneSidedDi, RateVariant::DiChsh];
    let spec = SweepSpec {
        variable: SweepVariable::Qber,
        start: 0.0,
        stop: 0.12,
        step: 0.001,
        fixed: NoiseParams::ideal(),
        variants: variants.clone(),
    };
    let rows = sweep(&spec)?;
    println!("q,rate_dd,rate_1sdi,rate_di");
    for chunk in rows.chunks(variants.len()).step_by(10) {
        println!(
            "{:.3},{:.6},{:.6},{:.6}",
            chunk[0].value, chunk[0].report.rate, chunk[1].report.rate, chunk[2].report.rate
        );
    }
    for (k, v) in variants.iter().enumerate() {
        let last = rows
            .iter()
            .skip(k)
            .step_by(variants.len())
            .take_while(|r| r.report.rate > 0.0)
            .last()
            .map(|r| r.value);
        println!("{v}: last positive grid point {}", last.map_or("none".into(), |q| format!("{q:.3}")));
    }
    Ok(())
}
