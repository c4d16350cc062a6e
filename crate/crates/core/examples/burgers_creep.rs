//! Stepped Burgers element against its closed-form creep curve, for each
//! temperature row of the creep-fit table.

use snowdem::material::CREEP_FIT_TABLE;
use snowdem::rheology::{constant_force_creep, creep_displacement};

fn main() -> snowdem::Result<()> {
    let (f0, dt, steps) = (0.1, 1e-3, 20_000);
    println!("{:>6} {:>10} {:>14} {:>14} {:>10}", "T (C)", "t (s)", "stepped (m)", "exact (m)", "rel err");
    for row in &CREEP_FIT_TABLE {
        let p = row.params(1.0);
        let u = constant_force_creep(&p, f0, dt, steps)?;
        for n in [1, 100, 1_000, 10_000, steps] {
            let t = n as f64 * dt;
            let exact = creep_displacement(&p, f0, t)?;
            println!(
                "{:>6} {:>10.3} {:>14.6e} {:>14.6e} {:>10.2e}",
                row.celsius,
                t,
                u[n],
                exact,
                (u[n] - exact).abs() / exact
            );
        }
    }
    Ok(())
}
