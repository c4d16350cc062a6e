//! A scene built in code: grains settling on a floor, sintering where they
//! touch, with a snapshot written mid-run and the run resumed from it.

use snowdem::dynamics::{critical_dt, Particle, Scene, Wall};
use snowdem::harness::{read_snapshot, write_snapshot};
use snowdem::material::Material;
use snowdem::Vec3;

fn main() -> snowdem::Result<()> {
    let t = 263.15;
    let mut scene = Scene::new(Material::ice(t), t, 1.0);
    scene.gravity = Vec3::new(0.0, 0.0, -9.81);
    scene.add_wall(Wall::floor(0.0));
    let r = 1e-3;
    for k in 0..27 {
        let (a, b, c) = (k % 3, (k / 3) % 3, k / 9);
        let x = Vec3::new(a as f64 * 2.1 * r + c as f64 * 0.3 * r, b as f64 * 2.1 * r, r + c as f64 * 2.2 * r);
        scene.add_particle(Particle::sphere(k, r, 917.0, x)?);
    }
    scene.dt = critical_dt(&scene)?;
    println!("dt {:.3e} s", scene.dt);

    let steps = (0.01 / scene.dt) as usize;
    for k in 0..steps {
        let report = scene.step()?;
        if k % (steps / 10) == 0 {
            println!(
                "t {:.4} s  contacts {:>3}  bonds {:>3}  KE {:.3e} J",
                scene.time,
                report.contacts,
                scene.active_bonds(),
                scene.kinetic_energy()
            );
        }
    }

    let dir = std::env::temp_dir().join("snowdem_custom_scene");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("snapshot.json");
    write_snapshot(&scene, &path)?;
    let mut resumed = read_snapshot(&path)?;
    scene.run(100)?;
    resumed.run(100)?;
    println!("snapshot {}; resumed run identical: {}", path.display(), scene == resumed);
    Ok(())
}
