//! Monte Carlo estimates of effective capacity and bandwidth next to their
//! closed forms.
//!
//!     cargo run --release --example monte_carlo_oracles

use qosprov::capacity::effective_capacity;
use qosprov::channel::ChannelSpec;
use qosprov::sim::{estimate_effective_bandwidth, estimate_effective_capacity_with, EstimatorOptions};
use qosprov::source::{effective_bandwidth, SourceModel};
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let theta = QosExponent::new(1.0)?;
    let link = ChannelSpec::new(10.0, 3.0, 2.0)?;
    let exact = effective_capacity(&link, theta)?.value;
    for is in [false, true] {
        let mut opts = EstimatorOptions::new(500, 100_000, 1);
        opts.importance_sampling = is;
        let e = estimate_effective_capacity_with(&link, theta, &opts)?;
        println!(
            "C_E (importance sampling {is}): {:.6} +- {:.1e}  closed form {exact:.6}  ESS {:.0}",
            e.value, e.std_error, e.effective_sample_size
        );
        for w in &e.warnings {
            println!("  warning: {w}");
        }
    }

    for s in [
        SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 2.0 },
        SourceModel::Mfs { alpha: 1.0, beta: 1.0, lambda_on: 2.0 },
        SourceModel::Mmps { alpha: 1.0, beta: 1.0, lambda_on: 1.0 },
    ] {
        let e = estimate_effective_bandwidth(&s, theta, 200, 200_000, 2)?;
        let exact = effective_bandwidth(&s, theta)?;
        println!(
            "{:>5}: {:.6} +- {:.1e}  closed form {exact:.6}  z = {:+.2}",
            s.family().name(),
            e.value,
            e.std_error,
            (e.value - exact) / e.std_error
        );
    }
    Ok(())
}
