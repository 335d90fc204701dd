//! Fits to simulated thermal spectra: unbiased, with honest error bars.

use std::f64::consts::PI;

use rayon::prelude::*;

use maglev::analysis::{fit_psd, welch_psd, FitOptions};
use maglev::dynamics::{simulate, SimulationConfig, TrapModel};
use maglev::fieldmodel::TrapFrequencies;
use maglev::Particle;

/// Oscillation frequency of the split-step integrator, which satisfies
/// `cos(ω̃·dt) = 1 − (ω·dt)²/2`; about `(ω·dt)²/24` above ω.
fn discrete_frequency(f: f64, dt: f64) -> f64 {
    let w = 2.0 * PI * f;
    (1.0 - 0.5 * (w * dt).powi(2)).acos() / dt / (2.0 * PI)
}

#[test]
fn reported_uncertainties_cover_the_seed_to_seed_scatter() {
    let freqs = TrapFrequencies::REFERENCE;
    let gamma_hz = 0.5;
    // (γ pull, f₀ pull) per axis and seed
    let pulls: Vec<(f64, f64)> = (0..30u64)
        .into_par_iter()
        .flat_map(|seed| {
            let mut cfg = SimulationConfig::new(
                TrapModel::harmonic(freqs),
                Particle::reference(),
                295.0,
                2.0 * PI * gamma_hz,
                400.0,
                1e-4,
            );
            cfg.record_every = 10;
            cfg.seed = 100 + seed;
            let traj = simulate(&cfg, None).unwrap();
            (0..3)
                .map(|a| {
                    let f0 = discrete_frequency(freqs.as_array()[a], 1e-4);
                    let est = welch_psd(&traj.axis(a), traj.sample_rate(), 20_000).unwrap();
                    let fit = fit_psd(&est, &FitOptions::around(f0, 5.0)).unwrap();
                    ((fit.gamma - gamma_hz) / fit.sigma_gamma(), (fit.frequency - f0) / fit.sigma_frequency())
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let n = pulls.len() as f64;
    let stats = |v: Vec<f64>| {
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    let (gm, gs) = stats(pulls.iter().map(|p| p.0).collect());
    let (fm, fs) = stats(pulls.iter().map(|p| p.1).collect());
    // 90 pulls: the mean is known to ±0.11 and the width to about ±8%
    assert!(gm.abs() < 0.4, "γ pull mean {gm}");
    assert!((0.75..1.3).contains(&gs), "γ pull width {gs}");
    assert!(fm.abs() < 0.5, "f₀ pull mean {fm}");
    assert!((0.75..1.3).contains(&fs), "f₀ pull width {fs}");
}
