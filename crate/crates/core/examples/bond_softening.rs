//! A bond formed at a small overlap and pulled apart at constant speed: the
//! elastic rise, failure, and the exponential softening tail.

use snowdem::bond::{create_bond, Bond, BondPhase, evaluate_bond, BondEvent, BondGeometry, BondStep, FractureConfig};
use snowdem::material::CREEP_FIT_TABLE;
use snowdem::Vec3;

fn every(bond: &Bond) -> usize {
    if bond.phase == BondPhase::Softening {
        200
    } else {
        10_000
    }
}

fn main() -> snowdem::Result<()> {
    let params = CREEP_FIT_TABLE[1].params(10.0);
    let (r, overlap) = (1.5e-3, 1e-6);
    let geom = BondGeometry {
        overlap,
        reduced_radius: r / 2.0,
        distance: 2.0 * r - overlap,
        grain_size: 2.0 * r,
        normal: Vec3::x(),
    };
    let cfg = FractureConfig::default();
    let mut bond = create_bond((0, 1), &geom, 0.0, &params, &cfg, 1e9)?;
    println!(
        "radius {:.3e} m, area {:.3e} m^2, capacity {:.4e} N, stiffness {:.4e} N/m",
        bond.radius,
        bond.area,
        bond.tensile_capacity(),
        bond.axial_stiffness()
    );

    let (speed, dt) = (1e-3, 1e-5);
    let mut distance = geom.distance;
    println!("{:>12} {:>12} {:>10}", "u_n (m)", "f_n (N)", "event");
    for k in 0..1_000_000 {
        distance += speed * dt;
        let step = BondStep {
            normal: Vec3::x(),
            distance,
            v_rel: Vec3::new(-speed, 0.0, 0.0),
            omega_rel: Vec3::zeros(),
            contact_force: 0.0,
            dt,
            reduced_mass: f64::INFINITY,
            reduced_inertia: f64::INFINITY,
        };
        let (loads, event) = evaluate_bond(&mut bond, &step)?;
        let u = bond.displacement.u_n;
        match event {
            BondEvent::None if k % every(&bond) == 0 => println!("{u:>12.4e} {:>12.4e}", loads.f_n),
            BondEvent::None => {}
            BondEvent::Failed(mode) => println!("{u:>12.4e} {:>12.4e} {mode:?}", loads.f_n),
            BondEvent::Broke => {
                println!("{u:>12.4e} {:>12.4e} broken", loads.f_n);
                break;
            }
        }
    }
    Ok(())
}
