//! Rank of the B^j_k(0) span for the two-spin reference, by truncation order.

use su_steer::config::RunConfig;
use su_steer::reference::regularity_check;
use su_steer::su_core::lie_closure_dim;

fn main() -> su_steer::Result<()> {
    let cfg = RunConfig::cnot();
    let gens = cfg.build_generators()?;
    let fc = cfg.build_controls(gens.len())?;
    println!("Lie closure dimension: {}", lie_closure_dim(&gens)?);
    for j_max in 0..=6 {
        let rep = regularity_check(&fc, &gens, j_max, cfg.rank_tol)?;
        println!("J_max = {j_max}: rank {} of {}", rep.rank, rep.required);
    }
    Ok(())
}
