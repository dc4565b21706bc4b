//! Full two-spin model against its rotating-wave approximation.

use su_steer::config::two_spin_abar;
use su_steer::integrator::IntegratorConfig;
use su_steer::spin_model::{compare_rwa, SpinModel};

fn main() -> su_steer::Result<()> {
    let model = SpinModel::default();
    let fc = two_spin_abar();
    let cfg = IntegratorConfig::with_step(1e-3);
    for scale in [1.0, 0.3, 0.1, 0.03, 0.01] {
        let cmp = compare_rwa(&model, |t| fc.eval(t), 10.0, &cfg, scale)?;
        println!("amplitude x{scale:<5} max error {:.3e}", cmp.max_error);
    }
    Ok(())
}
