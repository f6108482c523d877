//! Simulated runs compared with the analytic statistics of the source.

use steerqkd::keyrates::{observables_from_werner, NoiseParams};
use steerqkd::simulator::{run_protocol, ProtocolConfig};

fn main() -> steerqkd::Result<()> {
    for (nu, eta, postselect) in [(0.9, 1.0, false), (1.0, 0.8, false), (1.0, 0.8, true)] {
        let np = NoiseParams::new(nu, eta)?;
        let expected = observables_from_werner(&np);
        let stats = run_protocol(&ProtocolConfig::new(1_000_000, np, 42).with_postselect(postselect))?;
        let q_target = if postselect { expected.q_ps } else { expected.q_nonps };
        println!("nu={nu} eta={eta} postselect={postselect}");
        println!("  q_hat  = {:.6} +/- {:.6} (expected {q_target:.6})", stats.q_hat, stats.q_hat_stderr);
        println!("  f3_hat = {:.6} +/- {:.6} (expected {:.6})", stats.f3_hat, stats.f3_hat_stderr, expected.f3);
        println!("  key rounds {}, rate_hat {:.6}", stats.n_key_rounds, stats.rate_hat);
    }
    Ok(())
}
