//! The charge-sim pipeline end to end: a driven particle loses electrons at
//! random times and the lock-in record shows one step per electron.
//!
//!     cargo run --release --example charge_staircase [config.toml]

use std::path::PathBuf;

use maglev::scenario::{execute, load_config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/charge-sim.toml")));
    let (cfg, _) = load_config(&path)?;
    let outcome = execute(&cfg)?;
    let charge = outcome.report.charge.as_ref().ok_or("no charge readout in the report")?;
    println!("injected {} steps, detected {}", charge.injected_steps, charge.steps.len());
    if let Some(q) = charge.quantum {
        println!("lock-in response per electron {q:.4e} V");
    }
    for s in &charge.steps {
        println!(
            "t = {:>6.1} s   {:.4e} -> {:.4e}   {} e{}",
            s.t_s,
            s.before,
            s.after,
            s.quanta,
            if s.irregular { "  irregular" } else { "" }
        );
    }
    println!("final level {:.3e}, reached zero: {}", charge.final_level, charge.reached_zero);
    Ok(())
}
