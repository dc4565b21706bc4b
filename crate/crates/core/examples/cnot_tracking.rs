//! Tracks the periodic reference toward the C-NOT gate (direct branch).

use su_steer::config::RunConfig;
use su_steer::controller::{simulate_tracking, TrackOptions};

fn main() -> su_steer::Result<()> {
    let mut cfg = RunConfig::cnot();
    cfg.horizon = 40.0;
    let exp = cfg.prepare()?;
    println!(
        "periodicity residual: {:.2e}",
        exp.reference.periodicity_residual()
    );

    let opts = TrackOptions {
        integrator: cfg.integrator,
        b_table: None,
    };
    let run = simulate_tracking(&exp.goal, &exp.reference, &exp.gains, cfg.horizon, &opts)?;
    for t in [0.0, 5.0, 10.0, 20.0, 40.0] {
        let i = run
            .times
            .iter()
            .position(|&s| s >= t - 1e-9)
            .unwrap_or(run.len() - 1);
        println!("t = {:5.1}  err = {:.3e}", run.times[i], run.err[i]);
    }
    println!(
        "err below a tenth of its start at t = {:?}",
        run.time_to_fraction(0.1)
    );
    for k in 0..2 {
        let (v, u) = run.peak_controls(k, 10.0);
        println!(
            "control {}: max|v| = {v:.2}, max|u| = {u:.2} on [0, 10]",
            k + 1
        );
    }
    Ok(())
}
