//! Effective bandwidth of the three ON/OFF source families at equal P_ON.
//!
//!     cargo run --example source_bandwidth

use qosprov::source::{effective_bandwidth, mean_rate, SourceModel};
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let sources = [
        ("dtms", SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 2.0 }),
        ("mfs", SourceModel::Mfs { alpha: 1.0, beta: 1.0, lambda_on: 2.0 }),
        ("mmps", SourceModel::Mmps { alpha: 1.0, beta: 1.0, lambda_on: 2.0 }),
    ];
    print!("{:>8}", "theta");
    for (name, _) in &sources {
        print!(" {name:>10}");
    }
    println!();
    for theta in [1e-6, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0] {
        print!("{theta:>8}");
        for (_, s) in &sources {
            print!(" {:>10.5}", effective_bandwidth(s, QosExponent::new(theta)?)?);
        }
        println!();
    }
    // all three start at the mean rate; only MMPS grows past the ON rate
    for (name, s) in &sources {
        println!("{name}: mean {:.4}, ON rate {}", mean_rate(s)?, s.lambda_on());
    }
    Ok(())
}
