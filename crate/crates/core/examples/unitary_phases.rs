//! Eigenphases of the C-NOT gate and the equally spaced path toward -I.

use su_steer::config::{cnot, minus_identity};
use su_steer::planner::{build_path, compute_g};
use su_steer::su_core::unitary_eigendecomposition;

fn main() -> su_steer::Result<()> {
    let gate = cnot();
    let eig = unitary_eigendecomposition(&gate)?;
    println!("C-NOT phases: {:?}", eig.phases);
    println!(
        "reconstruction error: {:.2e}",
        eig.reconstruct().distance(gate.as_matrix())
    );

    let goal = minus_identity(4)?;
    let crit = compute_g(4)?;
    let path = build_path(&goal, &crit, 0.1)?;
    println!(
        "-I needs N = {} segments, step fidelity {:.4}",
        path.segments, path.step_fidelity
    );
    for (l, w) in path.waypoints.iter().enumerate() {
        println!("  waypoint {l}: V = {:+.4}", w.fidelity());
    }
    Ok(())
}
