//! Compares the three security models at a few QBER values on the
//! depolarizing line, then evaluates the lossy rates for one source.

use steerqkd::keyrates::{rate_at, rate_on_werner_line, NoiseParams, RateVariant};

fn main() -> steerqkd::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>10}", "Q", "dd", "1sdi", "di_chsh");
    for q in [0.0, 0.02, 0.05, 0.08, 0.1] {
        let r = |v| rate_on_werner_line(v, q).map(|r| r.rate);
        println!(
            "{q:>6.3} {:>10.6} {:>10.6} {:>10.6}",
            r(RateVariant::DeviceDependent)?,
            r(RateVariant::OneSidedDi)?,
            r(RateVariant::DiChsh)?
        );
    }

    let np = NoiseParams::new(0.98, 0.9)?;
    for v in [RateVariant::OneSidedDiNonPs, RateVariant::OneSidedDiPs] {
        let r = rate_at(v, &np)?;
        println!(
            "{v} at nu={}, eta={}: Q={:.6} F3={:.6} chi_E={:.6} rate={:.6}",
            np.nu,
            np.eta_a,
            r.q,
            r.f3.unwrap_or(f64::NAN),
            r.chi_e,
            r.rate
        );
    }
    Ok(())
}
