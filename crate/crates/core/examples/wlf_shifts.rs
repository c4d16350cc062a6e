//! Temperature shifts of the fitted viscosities: the ratios between table
//! rows next to the WLF curves, and the material model built on them.

use snowdem::material::{MaterialModel, CREEP_FIT_TABLE};
use snowdem::rheology::{WlfConstants, WLF_REFERENCE_TEMPERATURE};

fn main() -> snowdem::Result<()> {
    let t0 = WLF_REFERENCE_TEMPERATURE;
    let base = CREEP_FIT_TABLE[0].params(1.0);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "T (C)", "c_i table", "c_i WLF", "c_d table", "c_d WLF");
    for row in &CREEP_FIT_TABLE {
        let p = row.params(1.0);
        let t = row.kelvin();
        println!(
            "{:>6} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
            row.celsius,
            p.c_i / base.c_i,
            WlfConstants::INSTANTANEOUS_VISCOSITY.shift(t, t0)?,
            p.c_d / base.c_d,
            WlfConstants::DELAYED_VISCOSITY.shift(t, t0)?,
        );
    }

    let model = MaterialModel::wlf_from_table(1.0);
    println!("\nWLF material model between the rows");
    println!("{:>6} {:>12} {:>12} {:>12}", "T (C)", "c_i", "c_d", "k_d");
    for c in [-1.0, -3.0, -5.0, -8.0, -12.0, -17.0, -23.0] {
        let p = model.params_at(273.15 + c)?;
        println!("{c:>6} {:>12.4e} {:>12.4e} {:>12.4e}", p.c_i, p.c_d, p.k_d);
    }
    Ok(())
}
