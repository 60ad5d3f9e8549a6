//! Regenerates every figure table into a directory (default `figures/`).
//!
//!     cargo run --release --example figure_sweeps -- out_dir

use std::path::PathBuf;

use qosprov::sweep::{write_sweep, Experiment, SweepSpec};

fn main() -> qosprov::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir)?;
    for e in Experiment::ALL {
        if e == Experiment::Custom {
            continue;
        }
        let path = dir.join(format!("{}.csv", e.name()));
        let out = write_sweep(&SweepSpec::new(e), &path)?;
        println!("{:<22} {:>5} rows -> {}", e.name(), out.table.rows.len(), path.display());
    }

    // fig2: where each family peaks
    let t = qosprov::sweep::run_sweep(&SweepSpec::new(Experiment::Fig2RateSweep))?.table;
    for f in ["dtms", "mfs", "mmps"] {
        let rows = t.filter("family", f);
        let (rate, lam) = (rows.numbers("rate"), rows.numbers("lambda_avg_star"));
        let k = (0..lam.len()).max_by(|&a, &b| lam[a].total_cmp(&lam[b])).unwrap();
        println!("{f}: best rate {} with lambda_avg* {:.4}", rate[k], lam[k]);
    }
    Ok(())
}
