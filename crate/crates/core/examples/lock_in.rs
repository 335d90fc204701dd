//! A noisy tone whose amplitude drops in equal steps, demodulated by the
//! lock-in and segmented by the step detector.
//!
//!     cargo run --release --example lock_in

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};

use maglev::analysis::{detect_charge_steps, StepOptions};
use maglev::rng::{stream, streams};
use maglev::sensing::{lock_in, LockInConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 1000.0;
    let f_ref = 20.0;
    let drops = [15.0, 40.0, 62.0, 90.0];
    let amplitude = |t: f64| 4.0 - drops.iter().filter(|&&d| t >= d).count() as f64;
    let noise = Normal::new(0.0, 2.0)?;
    let mut rng = stream(3, 0, streams::SYNTHETIC);
    let signal: Vec<f64> = (0..120_000)
        .map(|k| {
            let t = k as f64 / fs;
            amplitude(t) * (2.0 * PI * f_ref * t + 0.4).cos() + noise.sample(&mut rng)
        })
        .collect();

    let cfg = LockInConfig { reference: f_ref, time_constant: 1.0 };
    let out = lock_in(&signal, fs, &cfg)?;
    for t in [10.0, 30.0, 50.0, 80.0, 110.0] {
        let k = (t * fs) as usize;
        println!("t = {t:>5.1} s   R = {:.3}   phase = {:+.3} rad", out.r[k], out.phase[k]);
    }

    let steps = detect_charge_steps(&out.r, fs, cfg.time_constant, &StepOptions::default())?;
    println!(
        "\nquantum {:.3}, final level {:.3}, reached zero: {}",
        steps.quantum.unwrap_or(f64::NAN),
        steps.final_level,
        steps.reached_zero
    );
    for s in &steps.steps {
        println!(
            "step at {:>6.2} s: {:.3} -> {:.3} ({} quanta, t = {:.1})",
            s.t, s.before, s.after, s.quanta, s.t_stat
        );
    }
    Ok(())
}
