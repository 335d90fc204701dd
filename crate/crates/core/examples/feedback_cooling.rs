//! Cold damping of the vertical mode: tune the channel gain for a target
//! linewidth, run the closed loop, and read the cooled temperature off the
//! fitted spectrum.
//!
//!     cargo run --release --example feedback_cooling

use std::f64::consts::PI;

use nalgebra::Vector3;

use maglev::analysis::{damping_bound, effective_temperature, fit_psd, phonon_occupation, welch_psd, FitOptions};
use maglev::dynamics::{simulate, InitialCondition, SimulationConfig, TrapModel};
use maglev::fieldmodel::TrapFrequencies;
use maglev::sensing::{
    closed_loop_damping, gain_for_damping, velocity_phase_deg, AxisChannel, Controller, ControllerConfig, Detector,
    DetectorConfig, FeedbackLoop, Plant,
};
use maglev::Particle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let freqs = TrapFrequencies::REFERENCE;
    let particle = Particle::reference();
    let (temperature, gamma) = (295.0, 2.0 * PI * 0.01);
    let fs = 5000.0;
    let fy = freqs.fy;

    let mut channels = [None; 3];
    channels[1] =
        Some(AxisChannel { center: fy, bandwidth: 60.0, phase_deg: velocity_phase_deg(fy, fs, 1), gain: 1.0 });
    let mut ctrl = ControllerConfig {
        sample_rate: fs,
        channels,
        direction: Vector3::new(0.9, 0.3, 0.3).normalize(),
        offset: 1e-15,
        bounds: (0.0, 2e-15),
        latency: 1,
    };
    let detector = DetectorConfig::default();
    let plant = Plant { mass: particle.mass, omega: 2.0 * PI * fy, damping: gamma };
    let gain = gain_for_damping(&ctrl, &detector, &plant, 1, 2.0 * PI * 1.0)?;
    ctrl.channels[1].as_mut().expect("y channel").gain = gain;
    let controller = Controller::new(ctrl.clone())?;
    let predicted = gamma + closed_loop_damping(&controller, &detector, &plant, 1)?;
    println!("gain {gain:.4e} N/V, predicted Γ'/2π = {:.4} Hz", predicted / (2.0 * PI));

    // the DC beam force moves the rest point; the detector is zeroed there
    let w = freqs.angular();
    let shift = Vector3::from_fn(|a, _| ctrl.offset * ctrl.direction[a] / (particle.mass * w[a] * w[a]));
    let mut psd_sum: Option<Vec<f64>> = None;
    let mut est0 = None;
    let members = 6;
    for m in 0..members {
        let mut sim = SimulationConfig::new(TrapModel::harmonic(freqs), particle, temperature, gamma, 200.0, 1e-4);
        sim.record_every = 10;
        sim.seed = 11;
        sim.member = m;
        sim.initial = InitialCondition::BoltzmannAt { displacement: shift };
        let mut fb = FeedbackLoop::new(Detector::new(detector.clone(), 11, m), controller.clone(), shift)?;
        let traj = simulate(&sim, Some(&mut fb))?.skip_until(10.0);
        let y: Vec<f64> = traj.axis(1).iter().map(|v| v - shift[1]).collect();
        let est = welch_psd(&y, traj.sample_rate(), 10_000)?;
        match psd_sum.as_mut() {
            Some(s) => s.iter_mut().zip(&est.psd).for_each(|(a, b)| *a += b),
            None => psd_sum = Some(est.psd.clone()),
        }
        est0 = Some(est);
    }
    let mut est = est0.expect("at least one member");
    est.psd = psd_sum.expect("summed").iter().map(|p| p / members as f64).collect();

    let fit = fit_psd(&est, &FitOptions::around(fy, 10.0))?;
    let t_eff = effective_temperature(particle.mass, fit.omega(), fit.mean_square());
    println!("fit: f0 = {:.3} Hz, Γ'/2π = {:.4} ± {:.4} Hz", fit.frequency, fit.gamma, fit.sigma_gamma());
    println!("T' = {:.3} K, T'/T = {:.4e}, Γ/Γ' = {:.4e}", t_eff, t_eff / temperature, gamma / fit.damping());
    println!("n' = {:.3e}", phonon_occupation(t_eff, fit.omega()));
    println!("Γ/2π <= {:.3e} Hz from (T', Γ')", damping_bound(t_eff, temperature, fit.damping()) / (2.0 * PI));
    Ok(())
}
