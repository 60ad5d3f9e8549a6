//! Slotted FIFO queue fed by a DTMS source at 80% of its supportable rate,
//! with the simulated delay tail set against the analytic decay.
//!
//!     cargo run --release --example queue_simulation

use qosprov::capacity::effective_capacity;
use qosprov::channel::ChannelSpec;
use qosprov::matching::max_arrival;
use qosprov::qos::operating_theta;
use qosprov::sim::{simulate, Discretization, SimConfig};
use qosprov::source::SourceModel;
use qosprov::QosExponent;

fn main() -> qosprov::Result<()> {
    let link = ChannelSpec::new(10.0, 3.0, 2.0)?;
    let one = QosExponent::new(1.0)?;
    let shape = SourceModel::Dtms { p11: 0.5, p22: 0.5, lambda_on: 0.0 };
    let star = max_arrival(&shape, effective_capacity(&link, one)?.value, one)?;
    let source = shape.with_lambda(0.8 * star.lambda_on_star);

    let theta = operating_theta(&link, &source)?;
    let decay = theta.get() * effective_capacity(&link, theta)?.value;
    println!("lambda_on = {:.5}, operating theta = {:.5}, predicted decay {:.5}/block", source.lambda_on(), theta.get(), decay);

    let mut cfg = SimConfig::new(link, source, 1_000_000, 20, 8);
    cfg.discretization = Discretization::ExactOccupancy;
    let r = simulate(&cfg)?;
    println!(
        "mean arrival {:.4}, mean service {:.4}, zeta_hat {:.4}, {} delays ({} censored)",
        r.mean_arrival, r.mean_service, r.zeta_hat, r.delay_samples, r.censored
    );
    if let (Some(f), Some(ci)) = (r.fitted_decay, r.decay_ci_halfwidth) {
        println!("fitted decay {f:.4} +- {ci:.4} over {:?}", r.fit_band);
    }
    println!("\n{:>4} {:>12} {:>12}", "d", "Pr{D>=d}", "model");
    for p in r.delay_tail.iter().take(20) {
        println!("{:>4} {:>12.4e} {:>12.4e}", p.level, p.prob, r.zeta_hat * (-decay * p.level).exp());
    }
    for w in &r.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
