//! The fixed rate that maximizes effective capacity, across SNR and QoS.
//!
//!     cargo run --example optimal_rate

use qosprov::optimizer::{foc_residual, optimize_rate};
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let o = optimize_rate(10.0, 50.0, QosExponent::new(1.0)?)?;
    println!("gamma=10 kappa=50 theta=1: R* = {:.6}, C_E* = {:.6}", o.r_star, o.c_e_star);
    println!("  bracket {:?}, first-order residual {:.2e} (scale {:.2e})", o.bracket, o.foc_residual, o.foc_scale);
    let th = QosExponent::new(1.0)?;
    for r in [1.0, 2.0, o.r_star, 3.0, 4.0] {
        println!("  first-order residual at R={r:.4}: {:+.6}", foc_residual(10.0, 50.0, th, r)?);
    }

    println!("\n{:>8} {:>8} {:>10} {:>10}", "gamma", "theta", "R*", "C_E*");
    for gamma in [1.0, 10.0, 100.0, 1000.0] {
        for theta in [0.01, 1.0, 10.0] {
            let o = optimize_rate(gamma, 50.0, QosExponent::new(theta)?)?;
            println!("{gamma:>8} {theta:>8} {:>10.4} {:>10.4}", o.r_star, o.c_e_star);
        }
    }
    Ok(())
}
