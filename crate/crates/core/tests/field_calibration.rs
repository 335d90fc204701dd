use nalgebra::Vector3;

use maglev::fieldmodel::{
    calibrate_coefficients, CalibrationOptions, FieldModel, Trap, TrapFrequencies, DEFAULT_TERMS,
};
use maglev::particle::{SILICA_CHI, SILICA_DENSITY};
use maglev::Particle;

fn calibrated(particle: Particle, targets: TrapFrequencies) -> Trap {
    let c = calibrate_coefficients(&targets, &particle, &DEFAULT_TERMS, None, &CalibrationOptions::default()).unwrap();
    Trap::new(FieldModel::new(c).unwrap(), particle)
}

#[test]
fn calibration_holds_across_particle_sizes() {
    for mass in [0.5e-15, 3.1e-15, 2e-14] {
        let p = Particle::from_mass(mass, SILICA_DENSITY, SILICA_CHI).unwrap();
        let trap = calibrated(p, TrapFrequencies::REFERENCE);
        let got = trap.trap_frequencies().unwrap().as_array();
        for (g, t) in got.iter().zip(TrapFrequencies::REFERENCE.as_array()) {
            assert!((g / t - 1.0).abs() < 1e-3, "m = {mass}: {got:?}");
        }
    }
}

#[test]
fn zero_field_line_curves_upward() {
    let trap = calibrated(Particle::reference(), TrapFrequencies::REFERENCE);
    let span = 5e-4;
    let h = |z: f64| trap.zero_field_height(z, span).unwrap();
    let h0 = h(0.0);
    let samples: Vec<(f64, f64)> = [1e-4, 2e-4, 3e-4].iter().map(|&z| (z, h(z) - h0)).collect();
    for &(z, dh) in &samples {
        assert!(dh > 0.0, "line bends down at z = {z}: {dh}");
        assert!((h(-z) - h0 - dh).abs() < 1e-3 * dh, "asymmetric at z = {z}");
    }
    // near the center the rise is quadratic
    let ratio = samples[1].1 / samples[0].1;
    assert!((ratio / 4.0 - 1.0).abs() < 0.05, "rise ratio {ratio}");
}

#[test]
fn gradient_at_equilibrium_is_order_ten_thousand_tesla_per_meter() {
    let trap = calibrated(Particle::reference(), TrapFrequencies::REFERENCE);
    let eq = trap.find_equilibrium().unwrap();
    let g = trap.field_gradient_magnitude(&eq).unwrap();
    assert!((2e3..=5e4).contains(&g), "gradient {g} T/m");
}

#[test]
fn force_vanishes_at_equilibrium_and_restores_nearby() {
    let trap = calibrated(Particle::reference(), TrapFrequencies::REFERENCE);
    let eq = trap.find_equilibrium().unwrap();
    let f0 = trap.force(&eq).unwrap();
    let w = TrapFrequencies::REFERENCE.angular();
    let m = Particle::reference().mass;
    assert!(f0.norm() < 1e-6 * m * maglev::constants::G, "{f0:?}");
    for (a, wa) in w.iter().enumerate() {
        let d = 1e-8;
        let r = eq + Vector3::from_fn(|i, _| if i == a { d } else { 0.0 });
        let f = trap.force(&r).unwrap()[a];
        let k = -f / d;
        assert!((k / (m * wa * wa) - 1.0).abs() < 1e-3, "axis {a}: k = {k}");
    }
}
