//! Runs every oracle check at full resolution and prints the reports.

use steerqkd::oracle;

fn main() -> steerqkd::Result<()> {
    let reports = oracle::run_all(42)?;
    for r in &reports {
        print!("{r}");
    }
    let failed = reports.iter().filter(|r| !r.pass()).count();
    println!("{} checks, {failed} failed", reports.len());
    Ok(())
}
