//! Mass from equipartition: an ensemble of particles starting at rest
//! thermalizes against the gas, and the position variance along y and z
//! gives m = k_B·T/(ω²⟨x²⟩).
//!
//!     cargo run --release --example thermal_mass

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;

use maglev::analysis::{extract_mass, AxisSamples};
use maglev::dynamics::{simulate, InitialCondition, SimulationConfig, TrapModel};
use maglev::fieldmodel::TrapFrequencies;
use maglev::Particle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let freqs = TrapFrequencies::REFERENCE;
    let particle = Particle::reference();
    let temperature = 295.0;
    // raised damping so each member thermalizes within a few seconds
    let gamma = 2.0 * PI * 0.1;
    let (members, duration, warmup) = (100u64, 40.0, 10.0);

    let runs = (0..members)
        .into_par_iter()
        .map(|m| {
            let mut cfg =
                SimulationConfig::new(TrapModel::harmonic(freqs), particle, temperature, gamma, duration, 1e-4);
            cfg.record_every = 50;
            cfg.seed = 7;
            cfg.member = m;
            cfg.initial = InitialCondition::At { displacement: Vector3::zeros(), velocity: Vector3::zeros() };
            simulate(&cfg, None).map(|t| t.skip_until(warmup))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let ys: Vec<Vec<f64>> = runs.iter().map(|t| t.axis(1)).collect();
    let zs: Vec<Vec<f64>> = runs.iter().map(|t| t.axis(2)).collect();
    let [_, wy, wz] = freqs.angular();
    let est = extract_mass(
        &AxisSamples::new(ys.iter().map(Vec::as_slice).collect(), wy),
        &AxisSamples::new(zs.iter().map(Vec::as_slice).collect(), wz),
        temperature,
    )?;
    println!("{} members x {} s after a {} s warm-up", members, duration - warmup, warmup);
    println!("y: m = ({:.3} ± {:.3})e-15 kg", est.y.mass * 1e15, est.y.uncertainty * 1e15);
    println!("z: m = ({:.3} ± {:.3})e-15 kg", est.z.mass * 1e15, est.z.uncertainty * 1e15);
    println!(
        "combined ({:.3} ± {:.3})e-15 kg, configured {:.3}e-15 kg",
        est.mass * 1e15,
        est.uncertainty * 1e15,
        particle.mass * 1e15
    );
    println!("histogram fit: y {:.3}e-15, z {:.3}e-15 kg", est.y.histogram_mass * 1e15, est.z.histogram_mass * 1e15);
    Ok(())
}
