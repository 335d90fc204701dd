//! Thermal motion of a single harmonic mode, its Welch spectrum and a
//! damped-oscillator fit.
//!
//!     cargo run --release --example psd_fit

use std::f64::consts::PI;

use maglev::analysis::{effective_temperature, fit_psd, welch_psd, FitOptions};
use maglev::dynamics::{simulate, SimulationConfig, TrapModel};
use maglev::fieldmodel::TrapFrequencies;
use maglev::Particle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let freqs = TrapFrequencies::REFERENCE;
    let particle = Particle::reference();
    let gamma = 2.0 * PI * 0.5;
    let mut cfg = SimulationConfig::new(TrapModel::harmonic(freqs), particle, 295.0, gamma, 1000.0, 1e-4);
    cfg.record_every = 10;
    cfg.seed = 1;
    let traj = simulate(&cfg, None)?;
    let fs = traj.sample_rate();

    for (a, name) in ["x", "y", "z"].iter().enumerate() {
        let x = traj.axis(a);
        // ten bins per linewidth
        let seg = (10.0 * fs / (gamma / (2.0 * PI))) as usize;
        let est = welch_psd(&x, fs, seg)?;
        let f0 = freqs.as_array()[a];
        let fit = fit_psd(&est, &FitOptions::around(f0, 5.0))?;
        let t_eff = effective_temperature(particle.mass, fit.omega(), fit.mean_square());
        println!(
            "{name}: f0 = {:.4} ± {:.4} Hz (true {f0}), γ = {:.3} ± {:.3} Hz (true {:.3}), T' = {:.0} K, {} segments",
            fit.frequency,
            fit.sigma_frequency(),
            fit.gamma,
            fit.sigma_gamma(),
            gamma / (2.0 * PI),
            t_eff,
            est.segments
        );
    }
    Ok(())
}
