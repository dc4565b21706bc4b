//! Critical fidelity values of the Lyapunov-like function on SU(n).

use su_steer::planner::compute_g;

fn main() -> su_steer::Result<()> {
    for n in 2..=8 {
        let crit = compute_g(n)?;
        println!("n = {n}: G = {:?}, delta = {}", crit.values, crit.delta);
    }
    Ok(())
}
