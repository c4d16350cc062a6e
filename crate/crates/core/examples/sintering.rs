//! Two grains pressed together, then pulled apart: fracture force against
//! sintering time and applied load at -5 C.

use snowdem::harness::{run_sintering_vs_load, run_two_particle_sintering, SinteringSetup};
use snowdem::material::Material;

fn main() -> snowdem::Result<()> {
    let t = 268.15;
    let base = SinteringSetup::new(Material::ice(t), t, 0.05, 0.25);

    println!("load {} N", base.load);
    println!("{:>10} {:>14} {:>14} {:>9}", "time (s)", "indent (m)", "f_frac (N)", "mode");
    for duration in [0.05, 0.1, 0.2, 0.4] {
        let setup = SinteringSetup { duration, ..base.clone() };
        let run = run_two_particle_sintering(&setup, &mut ())?;
        println!(
            "{duration:>10} {:>14.4e} {:>14.6} {:>9?}",
            run.indentation, run.f_frac, run.mode
        );
    }

    println!("\nsintering time {} s", base.duration);
    println!("{:>10} {:>14}", "load (N)", "f_frac (N)");
    let points = run_sintering_vs_load(&base, &[0.02, 0.05, 0.1, 0.2])?;
    for (load, f) in &points {
        println!("{load:>10} {f:>14.6}");
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    let line = snowdem::calibration::linear_fit(&x, &y)?;
    println!("zero-load intercept {:.5} N, R^2 {:.6}", line.intercept, line.r_squared);
    Ok(())
}
