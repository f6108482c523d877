//! Critical QBERs of the three models and the detection-efficiency
//! thresholds of both lossy strategies.

use steerqkd::keyrates::RateVariant;
use steerqkd::thresholds::{critical_eta, critical_qber, EtaStrategy};

fn main() -> steerqkd::Result<()> {
    for v in [RateVariant::DiChsh, RateVariant::OneSidedDi, RateVariant::DeviceDependent] {
        let r = critical_qber(v)?;
        println!("{v:<10} Q_c = {:.6}  ({} iterations, residual {:.1e})", r.critical, r.iterations, r.residual);
    }
    for nu in [1.0, 0.98, 0.96] {
        let ps = critical_eta(nu, EtaStrategy::PostSelected)?;
        let nonps = critical_eta(nu, EtaStrategy::NonPostSelected)?;
        println!("nu = {nu:.2}: eta_c ps = {:.6}, nonps = {:.6}", ps.critical, nonps.critical);
    }
    Ok(())
}
