//! Probe the certification pipeline at the acceptance parameters.

use orbitlab::capacity::certify_lower_bound;
use orbitlab::lens::LensSpace;
use std::time::Instant;

fn main() {
    let budget = 20_000;
    for p in [1i64, 3, 5] {
        let lens = LensSpace::new(p).unwrap();
        for eps in [0.1, 0.05, 0.02] {
            let t0 = Instant::now();
            let est = certify_lower_bound(lens, eps, budget).unwrap();
            println!(
                "p={p} eps={eps:5}: pass={} osc={:.5} ({:.4} of 2pi) min_T={:.4} min_reparam={:.4} [{:.1}s]{}",
                est.pass,
                est.oscillation,
                est.oscillation / std::f64::consts::TAU,
                est.min_period_found,
                est.min_reparam_period,
                t0.elapsed().as_secs_f64(),
                est.witness.map(|w| format!(" witness: kind={:?} period={:.4} speed={:.4}", w.kind, w.period, w.speed)).unwrap_or_default()
            );
        }
    }
    // control
    let est = certify_lower_bound(LensSpace::new(3).unwrap(), 0.0, budget).unwrap();
    println!("control p=3 eps=0: pass={} min_T={:.4}", est.pass, est.min_period_found);
}
