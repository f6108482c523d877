//! Minimum detection efficiency against visibility. Blank cells mean no
//! efficiency gives a positive rate.

use steerqkd::thresholds::eta_threshold_sweep;

fn main() -> steerqkd::Result<()> {
    let cell = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    println!("nu,eta_threshold_nonps,eta_threshold_ps");
    for r in eta_threshold_sweep(0.80, 1.00, 0.01)? {
        println!("{:.2},{},{}", r.nu, cell(r.nonps), cell(r.ps));
    }
    Ok(())
}
