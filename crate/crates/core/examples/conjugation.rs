//! Interaction-picture couplings: conjugation against the closed form.

use su_steer::cli::cmd_verify_conjugation;

fn main() -> su_steer::Result<()> {
    let rep = cmd_verify_conjugation(100, 10.0)?;
    println!("max deviation per axis: {:?}", rep.max_deviation);
    println!(
        "max imaginary part after recombination: {:e}",
        rep.recombination_max_imag
    );
    println!("passed: {}", rep.passed);
    Ok(())
}
