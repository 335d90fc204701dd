//! Gas damping against pressure, and what a measured cooled temperature
//! says about the natural damping and the phonon occupation.
//!
//!     cargo run --release --example damping_budget

use std::f64::consts::PI;

use maglev::analysis::{damping_bound, phonon_occupation};
use maglev::constants::TORR;
use maglev::dynamics::{damping_from_pressure, Accommodation, Environment};
use maglev::Particle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = Particle::reference();
    println!("particle radius {:.3} um, mass {:.3e} kg", p.radius * 1e6, p.mass);
    println!("\n pressure (Torr)   Γ/2π diffuse (Hz)   Γ/2π specular (Hz)   Q at 7 Hz");
    for torr in [1e-4, 1e-6, 1e-8, 2e-10] {
        let mut env = Environment::new(295.0, torr * TORR);
        let diffuse = damping_from_pressure(&env, &p)?;
        env.accommodation = Accommodation::Specular;
        let specular = damping_from_pressure(&env, &p)?;
        println!(
            "{torr:>14.1e}   {:>17.3e}   {:>18.3e}   {:>9.2e}",
            diffuse / (2.0 * PI),
            specular / (2.0 * PI),
            2.0 * PI * 7.0 / diffuse
        );
    }
    match damping_from_pressure(&Environment::new(295.0, 760.0 * TORR), &p) {
        Ok(_) => println!("\natmosphere: unexpectedly in the free-molecular regime"),
        Err(e) => println!("\natmosphere: {e}"),
    }

    // a cooled mode at T′ with linewidth Γ′ bounds the natural damping
    println!("\n axis   f (Hz)   T' (mK)   Γ'/2π (Hz)   Γ/2π <= (Hz)   n'");
    for (axis, f, t_eff, cooled_hz) in [("y", 96.5, 1.2e-3, 7.0), ("z", 6.7, 0.6e-3, 1.5)] {
        let bound = damping_bound(t_eff, 295.0, 2.0 * PI * cooled_hz) / (2.0 * PI);
        let n = phonon_occupation(t_eff, 2.0 * PI * f);
        println!("{axis:>5}   {f:>6.1}   {:>7.2}   {cooled_hz:>10.1}   {bound:>12.2e}   {n:.2e}", t_eff * 1e3);
    }
    Ok(())
}
