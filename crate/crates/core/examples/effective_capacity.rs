//! Effective capacity of a fixed-rate link, and how channel memory moves it
//! between zero and the mean service rate.
//!
//!     cargo run --example effective_capacity

use qosprov::capacity::{capacity_upper_bound, effective_capacity};
use qosprov::channel::{derive_chain, discretize, ChannelSpec};
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let link = ChannelSpec::new(10.0, 3.0, 50.0)?;
    let chain = derive_chain(&link)?;
    println!("gamma=10 R=3 kappa=50: psi={:.4} nu={:.3} mu={:.3} P_ON={:.4}", chain.psi, chain.nu, chain.mu, chain.p_on);

    let k = discretize(&chain, 1.0)?;
    println!("one-block kernel: {:?}", k.p);

    println!("\n{:>8} {:>12}", "theta", "C_E");
    for theta in [1e-3, 0.1, 1.0, 10.0, 100.0] {
        let c = effective_capacity(&link, QosExponent::new(theta)?)?;
        println!("{theta:>8} {:>12.6}", c.value);
    }

    // slow channels are bursty; fast ones look memoryless
    let theta = QosExponent::new(1.0)?;
    println!("\n{:>8} {:>12} {:>12}", "kappa", "C_E", "R e^-psi");
    for kappa in [1e-3, 0.1, 1.0, 10.0, 1e3, 1e6] {
        let spec = ChannelSpec::new(10.0, 3.0, kappa)?;
        let c = effective_capacity(&spec, theta)?.value;
        println!("{kappa:>8} {c:>12.6} {:>12.6}", capacity_upper_bound(&spec)?);
    }
    Ok(())
}
