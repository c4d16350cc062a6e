//! Fits Burgers constants to a synthetic fracture-force time series with
//! 1% noise, starting from a deliberately wrong guess.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use snowdem::calibration::{fit_burgers_dls, FixedParams, SampleAxis, SinteringDataset};
use snowdem::material::CREEP_FIT_TABLE;
use snowdem::rheology::{creep_displacement, BurgersParams};

fn main() -> snowdem::Result<()> {
    let truth = CREEP_FIT_TABLE[1].params(1.0);
    let (load, r_eq, tau_n) = (0.1, 1.5e-3, 0.6e6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(1.0, 0.01).expect("valid distribution");
    let mut samples = Vec::new();
    for k in 0..24 {
        let t = 0.5 * 2000f64.powf(k as f64 / 23.0);
        let f = tau_n * PI * r_eq * creep_displacement(&truth, load, t)? + truth.f0_b;
        samples.push((t, f * noise.sample(&mut rng)));
    }
    let data = SinteringDataset {
        temperature: truth.t_ref,
        r_eq,
        tau_n,
        axis: SampleAxis::Time,
        load: Some(load),
        duration: None,
        f0_b: Some(truth.f0_b),
        samples,
    };
    let guess = BurgersParams {
        k_d: truth.k_d * 2.0,
        c_i: truth.c_i * 0.5,
        c_d: truth.c_d * 3.0,
        ..truth
    };
    let fit = fit_burgers_dls(&data, &guess, FixedParams::K_I)?;
    println!("{} iterations, converged {}", fit.iterations, fit.converged);
    let history: Vec<String> = fit.history.iter().map(|h| format!("{h:.3e}")).collect();
    println!("residual history: {}", history.join(" "));
    println!("{:>4} {:>12} {:>12} {:>12} {:>8}", "", "start", "fitted", "truth", "error");
    for (name, a, b, c) in [
        ("k_d", guess.k_d, fit.params.k_d, truth.k_d),
        ("c_i", guess.c_i, fit.params.c_i, truth.c_i),
        ("c_d", guess.c_d, fit.params.c_d, truth.c_d),
    ] {
        println!("{name:>4} {a:>12.4e} {b:>12.4e} {c:>12.4e} {:>7.2}%", 100.0 * (b - c).abs() / c);
    }
    Ok(())
}
