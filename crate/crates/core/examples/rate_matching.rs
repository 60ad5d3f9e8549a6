//! Largest arrival rate each source can push through a given link while
//! keeping the QoS exponent.
//!
//!     cargo run --example rate_matching

use qosprov::capacity::effective_capacity;
use qosprov::channel::ChannelSpec;
use qosprov::matching::{invert_bandwidth, max_arrival, max_arrival_dtms_simplified};
use qosprov::source::{BurstinessParam, SourceModel};
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let theta = QosExponent::new(1.0)?;
    let c_e = effective_capacity(&ChannelSpec::new(10.0, 3.0, 50.0)?, theta)?.value;
    println!("C_E = {c_e:.6} bits/block");

    let shapes = [
        SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 0.0 },
        SourceModel::Mfs { alpha: 5.0, beta: 5.0, lambda_on: 0.0 },
        SourceModel::Mmps { alpha: 5.0, beta: 5.0, lambda_on: 0.0 },
    ];
    for s in &shapes {
        let m = max_arrival(s, c_e, theta)?;
        let check = invert_bandwidth(s, c_e, theta)?;
        println!(
            "{:>5}: lambda_on* = {:.6}  lambda_avg* = {:.6}  ({:?}, residual {:.1e}, bisection {:.6})",
            s.family().name(),
            m.lambda_on_star,
            m.lambda_avg_star,
            m.method,
            m.residual,
            check.lambda_on_star
        );
        if let Some(alt) = m.printed_closed_form {
            println!("       alternative closed form gives {:.6} (residual {:.3})", alt.lambda_avg_star, alt.residual);
        }
    }

    // burstier DTMS sources (small s) get less
    for s in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let m = max_arrival_dtms_simplified(BurstinessParam::new(s)?, c_e, theta)?;
        println!("s = {s}: lambda_avg* = {:.6}", m.lambda_avg_star);
    }
    Ok(())
}
