//! Segmented planning toward -I, whose fidelity sits on the critical value.

use su_steer::config::RunConfig;
use su_steer::planner::plan;

fn main() -> su_steer::Result<()> {
    let cfg = RunConfig::minus_identity();
    let exp = cfg.prepare()?;
    let glued = plan(&exp.goal, &exp.reference, &exp.gains, &cfg.plan_config())?;
    println!("branch: {:?}", glued.branch);
    if let Some(path) = &glued.path {
        println!("segments: {}", path.segments);
    }
    println!("switch times: {:?}", glued.switch_times);
    println!("V at switches: {:?}", glued.switch_v);
    println!("jumps in Z: {:?}", glued.z_jumps);
    println!("jumps in v: {:?}", glued.v_jumps);
    println!(
        "final err {:.4e}, final V {:.5}, converged {}",
        glued.final_err, glued.final_v, glued.converged
    );
    Ok(())
}
