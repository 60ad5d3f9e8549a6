//! Delay-violation probability: point queries, the exponent needed for a
//! target, and the three tradeoff curves.
//!
//!     cargo run --example delay_tradeoff

use qosprov::channel::ChannelSpec;
use qosprov::numeric::{linspace, logspace};
use qosprov::qos::{delay_violation, operating_theta, required_theta, tradeoff_curve, DelayModel, TradeoffAxis, TradeoffConfig};
use qosprov::source::SourceModel;
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let model = DelayModel::new(1.0, QosExponent::new(1.0)?, 1.4449)?;
    for d in [0.0, 1.0, 3.0, 10.0] {
        println!("Pr{{D >= {d}}} ~ {:.3e}", delay_violation(&model, d)?);
    }

    let link = ChannelSpec::new(10.0, 3.0, 2.0)?;
    let th = required_theta(&link, 10.0, 1e-3, 1.0)?;
    println!("\ntheta needed for Pr{{D >= 10}} <= 1e-3 on kappa=2: {:.4}", th.get());
    match required_theta(&link, 2.0, 1e-9, 1.0) {
        Ok(t) => println!("1e-9 at d=2: theta {:.4}", t.get()),
        Err(e) => println!("1e-9 at d=2: {e}"),
    }

    let src = SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 0.9 };
    println!("operating exponent of {src:?}: {:.4}", operating_theta(&link, &src)?.get());

    let cfg = TradeoffConfig::default();
    for (axis, grid) in [
        (TradeoffAxis::Gamma, logspace(1.0, 1e3, 7)),
        (TradeoffAxis::Theta, logspace(1e-2, 10.0, 7)),
        (TradeoffAxis::POn, linspace(0.2, 0.8, 7)),
    ] {
        let mut c = cfg;
        if axis == TradeoffAxis::POn {
            c.theta = 0.01;
        }
        let t = tradeoff_curve(&c, axis, &grid)?;
        println!("\n{} panel (monotone: {})", t.axis.name(), t.monotone);
        for r in &t.rows {
            println!("  {:>9.4}  R={:.3} theta={:.4} violation={:.3e}", r.axis_value, r.rate, r.theta, r.violation);
        }
    }
    Ok(())
}
