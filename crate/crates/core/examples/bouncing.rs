//! A grain dropped on a rigid floor: restitution against temperature, and
//! the elastic limit with the viscosities scaled up.

use snowdem::harness::{run_bouncing_particle, BounceSetup};
use snowdem::material::{Material, CREEP_FIT_TABLE};

fn main() -> snowdem::Result<()> {
    println!("{:>6} {:>12} {:>12} {:>12} {:>14}", "T (C)", "impact", "rebound", "e", "contact (s)");
    for row in &CREEP_FIT_TABLE {
        let t = row.kelvin();
        let run = run_bouncing_particle(&BounceSetup::new(Material::ice(t), t), &mut ())?;
        println!(
            "{:>6} {:>12.4} {:>12.4} {:>12.5} {:>14.4e}",
            row.celsius, run.impact_speed, run.rebound_speed, run.restitution, run.contact_time
        );
    }
    let t = CREEP_FIT_TABLE[0].kelvin();
    let elastic = BounceSetup {
        viscosity_scale: 1e6,
        ..BounceSetup::new(Material::ice(t), t)
    };
    let run = run_bouncing_particle(&elastic, &mut ())?;
    println!("viscosities x1e6 at -1 C: e = {:.5}", run.restitution);
    Ok(())
}
