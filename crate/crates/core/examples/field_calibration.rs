//! Solve for the multipole coefficients that reproduce the reference trap,
//! then inspect the resulting potential.
//!
//!     cargo run --release --example field_calibration

use maglev::fieldmodel::{
    calibrate_coefficients, CalibrationOptions, FieldModel, Trap, TrapFrequencies, DEFAULT_TERMS,
};
use maglev::Particle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let particle = Particle::reference();
    let targets = TrapFrequencies::REFERENCE;
    let coeffs = calibrate_coefficients(&targets, &particle, &DEFAULT_TERMS, None, &CalibrationOptions::default())?;
    for t in &coeffs.terms {
        println!("c[{} {} {:?}] = {:+.6e}", t.degree, t.order, t.parity, t.coefficient);
    }

    let trap = Trap::new(FieldModel::new(coeffs)?, particle);
    let eq = trap.find_equilibrium()?;
    let f = trap.frequencies_at(&eq)?;
    println!("equilibrium  ({:.2e}, {:.3} um, {:.2e}) m", eq.x, eq.y * 1e6, eq.z);
    println!("frequencies  fx {:.4}  fy {:.4}  fz {:.4} Hz", f.fx, f.fy, f.fz);
    println!("|B| at eq    {:.3e} T", trap.field.b_field(&eq)?.norm());
    println!("gradient     {:.3e} T/m", trap.field_gradient_magnitude(&eq)?);

    // the zero-field line bends upward along z; gravity pulls the particle
    // to its lowest point, which closes the trap axially
    println!("\n   z (um)   zero-field height (um)");
    let h0 = trap.zero_field_height(0.0, 5e-4)?;
    for z in [-300e-6, -150e-6, 0.0, 150e-6, 300e-6] {
        let h = trap.zero_field_height(z, 5e-4)?;
        println!("{:>8.0}   {:>10.3}  ({:+.3})", z * 1e6, h * 1e6, (h - h0) * 1e6);
    }
    Ok(())
}
