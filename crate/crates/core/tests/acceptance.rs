//! Acceptance suite: one PASS/FAIL line per criterion, tolerances and
//! runtime limits as stated. Exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use steerqkd::keyrates::{observables_from_werner, rate_on_werner_line, NoiseParams, RateVariant};
use steerqkd::oracle::{
    verify_cjwr_norm_bound, verify_entropic_inequality, verify_eve_closed_form, verify_reduction_invariance,
};
use steerqkd::simulator::{run_protocol, ProtocolConfig, SimStats};
use steerqkd::thresholds::{critical_eta, critical_qber, grid, EtaStrategy};
use steerqkd::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed<F: FnOnce() -> Result<Outcome>>(limit: Duration, f: F) -> Outcome {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    match out {
        Ok(mut o) => {
            if elapsed > limit {
                o.pass = false;
            }
            o.detail = format!("{} | {:.2}s (limit {}s)", o.detail, elapsed.as_secs_f64(), limit.as_secs());
            o
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn critical_qber_reproduction() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (variant, target, tol) in [
        (RateVariant::OneSidedDi, 0.0862, 0.0005),
        (RateVariant::DiChsh, 0.071, 0.001),
        (RateVariant::DeviceDependent, 0.110, 0.002),
    ] {
        let start = Instant::now();
        let r = critical_qber(variant)?;
        let ok = within(r.critical, target, tol) && start.elapsed() < Duration::from_secs(1);
        pass &= ok;
        parts.push(format!("{variant}={:.6} (target {target}±{tol})", r.critical));
    }
    Ok(Outcome { pass, detail: parts.join(", ") })
}

fn efficiency_thresholds() -> Result<Outcome> {
    let nonps = critical_eta(1.0, EtaStrategy::NonPostSelected)?.critical;
    let ps = critical_eta(1.0, EtaStrategy::PostSelected)?.critical;
    Ok(Outcome {
        pass: within(nonps, 0.827, 0.001) && within(ps, 0.745, 0.001),
        detail: format!("nonps={nonps:.6} (target 0.827±0.001), ps={ps:.6} (target 0.745±0.001)"),
    })
}

fn ordering_properties() -> Result<Outcome> {
    let mut rate_violations = 0;
    for q in grid(0.0, 0.07, 0.001)? {
        let r = |v| rate_on_werner_line(v, q).map(|r| r.rate);
        let (dd, one, di) = (r(RateVariant::DeviceDependent)?, r(RateVariant::OneSidedDi)?, r(RateVariant::DiChsh)?);
        if !(dd >= one && one >= di) {
            rate_violations += 1;
        }
    }
    let mut ps_above = 0;
    let mut increasing = 0;
    let mut prev: Option<(f64, f64)> = None;
    let nus = grid(0.9, 1.0, 0.005)?;
    for &nu in &nus {
        let ps = critical_eta(nu, EtaStrategy::PostSelected)?.critical;
        let nonps = critical_eta(nu, EtaStrategy::NonPostSelected)?.critical;
        if ps > nonps {
            ps_above += 1;
        }
        if let Some((pp, pn)) = prev {
            if ps > pp || nonps > pn {
                increasing += 1;
            }
        }
        prev = Some((ps, nonps));
    }
    Ok(Outcome {
        pass: rate_violations == 0 && ps_above == 0 && increasing == 0,
        detail: format!(
            "rate-order violations {rate_violations}/71, ps>nonps {ps_above}/{n}, increasing steps {increasing}/{m}",
            n = nus.len(),
            m = nus.len() - 1
        ),
    })
}

fn cjwr_norm_bound() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for d in [2, 4, 8] {
        let r = verify_cjwr_norm_bound(d, 1000, 42)?;
        pass &= r.pass();
        parts.push(format!("d={d}: max violation {:.1e}", r.max_violation()));
    }
    Ok(Outcome { pass, detail: parts.join(", ") })
}

fn entropic_chain() -> Result<Outcome> {
    let r = verify_entropic_inequality(0.02)?;
    let inequality = &r.criteria[0];
    let face = &r.criteria[1];
    Ok(Outcome {
        pass: inequality.max_violation <= 1e-9 && face.max_violation <= 1e-6,
        detail: format!(
            "{} grid points, inequality excess {:.1e}, L2=L4=0 equality gap {:.1e}",
            r.trials, inequality.max_violation, face.max_violation
        ),
    })
}

fn eve_closed_form() -> Result<Outcome> {
    let r = verify_eve_closed_form(&[1.05, 1.2, 1.4334, 1.6, 1.7], 0.005)?;
    let below = &r.criteria[0];
    let above = &r.criteria[1];
    Ok(Outcome {
        pass: below.max_violation <= 1e-3 && above.max_violation <= 1e-9,
        detail: format!("shortfall {:.1e} (tol 1e-3), excess {:.1e} (tol 1e-9)", below.max_violation, above.max_violation),
    })
}

fn simulate(nu: f64, eta: f64, limit: Duration) -> Result<(SimStats, bool)> {
    let start = Instant::now();
    let stats = run_protocol(&ProtocolConfig::new(1_000_000, NoiseParams::new(nu, eta)?, 42))?;
    Ok((stats, start.elapsed() <= limit))
}

fn simulator_agreement() -> Result<Outcome> {
    let limit = Duration::from_secs(60);
    let mut pass = true;
    let mut parts = Vec::new();
    for (nu, eta) in [(0.9, 1.0), (1.0, 0.8)] {
        let target = observables_from_werner(&NoiseParams::new(nu, eta)?);
        let (s, fast) = simulate(nu, eta, limit)?;
        let zq = (s.q_hat - target.q_nonps).abs() / s.q_hat_stderr;
        let zf = (s.f3_hat - target.f3).abs() / s.f3_hat_stderr;
        pass &= fast && zq <= 4.0 && zf <= 4.0;
        parts.push(format!("(nu={nu}, eta={eta}) q z={zq:.2}, f3 z={zf:.2}"));
        let (again, _) = simulate(nu, eta, limit)?;
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("thread pool")
            .install(|| simulate(nu, eta, Duration::MAX))?
            .0;
        let identical = again == s && serial == s;
        pass &= identical;
        if !identical {
            parts.push("runs differ".into());
        }
    }
    Ok(Outcome { pass, detail: parts.join(", ") })
}

fn reduction_invariance() -> Result<Outcome> {
    let r = verify_reduction_invariance(1000, 42)?;
    let matched = &r.criteria[0];
    let f3 = &r.criteria[1];
    Ok(Outcome {
        pass: r.pass() && matched.max_violation <= 1e-12 && f3.max_violation <= 1e-9,
        detail: format!(
            "matched correlators {:.1e}, F3 {:.1e}, residual {:.1e}",
            matched.max_violation, f3.max_violation, r.criteria[2].max_violation
        ),
    })
}

fn main() {
    type Check = (&'static str, Duration, fn() -> Result<Outcome>);
    let checks: [Check; 8] = [
        ("critical QBER reproduction", Duration::from_secs(3), critical_qber_reproduction),
        ("detection-efficiency thresholds", Duration::from_secs(1), efficiency_thresholds),
        ("ordering properties", Duration::from_secs(5), ordering_properties),
        ("CJWR operator norm bound", Duration::from_secs(30), cjwr_norm_bound),
        ("entropic chain", Duration::from_secs(60), entropic_chain),
        ("Eve closed form", Duration::from_secs(300), eve_closed_form),
        ("simulator statistical agreement", Duration::from_secs(300), simulator_agreement),
        ("reduction invariance", Duration::from_secs(10), reduction_invariance),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in checks.into_iter().enumerate() {
        let o = timed(limit, f);
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
