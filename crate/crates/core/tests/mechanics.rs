use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snowdem::contact::{
    assemble_pair, contact_kinematics, friction_force, rolling_resistance, update_contact,
    ContactLaw, ContactState, FrictionConfig,
};
use snowdem::dynamics::{
    critical_dt, gear_correct, gear_predict, update_orientation, Motion, Particle, Scene,
};
use snowdem::material::{Material, MaterialModel, CREEP_FIT_TABLE};
use snowdem::rheology::{constant_force_creep, transverse_params};
use snowdem::{Error, Vec3};

fn vec3() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3().prop_filter("non-degenerate", |v| v.norm() > 0.1).prop_map(|v| v.normalize())
}

fn law() -> ContactLaw {
    let p = CREEP_FIT_TABLE[1].params(10.0);
    ContactLaw { normal: p, transverse: transverse_params(&p, 0.3).unwrap() }
}

proptest! {
    #[test]
    fn friction_never_exceeds_static_cap(trial in vec3(), mag in 0.0..100.0f64, f_n in 0.0..10.0f64) {
        let cfg = FrictionConfig::default();
        let (f, _) = friction_force(&(trial * mag), f_n, &cfg);
        prop_assert!(f.norm() <= cfg.mu_s * f_n * (1.0 + 1e-12));
    }

    #[test]
    fn rolling_moment_capped(theta in vec3(), k_t in 1.0..1e6f64, r in 1e-4..1e-2f64, f_n in 0.0..10.0f64) {
        let cfg = FrictionConfig { c_r: 0.0, ..FrictionConfig::default() };
        let (m, gamma) = rolling_resistance(&theta, &Vec3::zeros(), k_t, r, f_n, &cfg);
        prop_assert!(m.norm() <= cfg.mu_r * r * f_n * (1.0 + 1e-12) + 1e-300);
        prop_assert!((0.0..=1.0).contains(&gamma));
    }

    #[test]
    fn swapped_pair_gives_opposite_loads(
        n in unit(), vi in vec3(), vj in vec3(), wi in vec3(), wj in vec3(),
        ri in 5e-4..2e-3f64, rj in 5e-4..2e-3f64, squeeze in 1e-4..1e-2f64,
    ) {
        let mut pi = Particle::sphere(0, ri, 917.0, Vec3::zeros()).unwrap().with_velocity(vi * 0.1);
        let mut pj = Particle::sphere(1, rj, 917.0, n * (ri + rj) * (1.0 - squeeze)).unwrap().with_velocity(vj * 0.1);
        pi.angular_velocity = wi * 10.0;
        pj.angular_velocity = wj * 10.0;
        let (law, cfg, dt) = (law(), FrictionConfig::default(), 1e-6);
        let eval = |a: &Particle, b: &Particle| {
            let kin = contact_kinematics(a, b, dt).unwrap();
            let mut s = ContactState::new((0, 1), kin.normal);
            let loads = update_contact(&mut s, &kin, &law, &cfg, false, dt).unwrap();
            assemble_pair(&loads, None, &kin)
        };
        let (fwd, bwd) = (eval(&pi, &pj), eval(&pj, &pi));
        let tol = 1e-12 * fwd.force_i.norm().max(1e-30);
        prop_assert!((fwd.force_i + bwd.force_i).norm() <= tol);
        let ttol = 1e-12 * fwd.torque_i.norm().max(fwd.torque_j.norm()).max(1e-30);
        prop_assert!((fwd.torque_i - bwd.torque_j).norm() <= ttol);
        prop_assert!((fwd.torque_j - bwd.torque_i).norm() <= ttol);
    }

    #[test]
    fn orientation_stays_unit(w in vec3(), speed in 0.0..1e3f64, steps in 1usize..2000) {
        let mut p = Particle::sphere(0, 1e-3, 917.0, Vec3::zeros()).unwrap();
        p.angular_velocity = w * speed;
        for _ in 0..steps {
            p = update_orientation(&p, 1e-4);
        }
        prop_assert!((p.orientation.into_inner().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn creep_is_linear_in_load(f in 1e-3..1.0f64, factor in 0.1..10.0f64) {
        let p = CREEP_FIT_TABLE[2].params(1.0);
        let a = constant_force_creep(&p, f, 1e-3, 200).unwrap();
        let b = constant_force_creep(&p, f * factor, 1e-3, 200).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - x * factor).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn creep_consistent_under_unit_scale(f in 1e-3..1.0f64, scale in 0.1..100.0f64) {
        let row = CREEP_FIT_TABLE[3];
        let a = constant_force_creep(&row.params(1.0), f, 1e-3, 200).unwrap();
        let b = constant_force_creep(&row.params(scale), f * scale, 1e-3, 200).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }
}

/// One dynamic sphere pressed against a fixed one by a constant force.
fn pressed_pair(dt_factor: f64) -> (Scene, f64) {
    let t = CREEP_FIT_TABLE[0].kelvin();
    let mut material = Material::new(MaterialModel::fixed(CREEP_FIT_TABLE[0].params(10.0)));
    material.sintering = false;
    let mut scene = Scene::new(material, t, 1.0);
    scene.gravity = Vec3::zeros();
    let r = 1e-3;
    scene.add_particle(Particle::sphere(0, r, 917.0, Vec3::zeros()).unwrap().with_motion(Motion::Fixed));
    let mut p = Particle::sphere(1, r, 917.0, Vec3::new(2.0 * r - 1e-7, 0.0, 0.0)).unwrap();
    p.external_force = Vec3::new(-1e-2, 0.0, 0.0);
    scene.add_particle(p);
    let dt = critical_dt(&scene).unwrap();
    scene.dt = dt_factor * dt;
    (scene, dt)
}

fn peak_speed(dt_factor: f64, steps: usize) -> Result<f64, Error> {
    let (mut scene, _) = pressed_pair(dt_factor);
    let mut peak: f64 = 0.0;
    for _ in 0..steps {
        scene.step()?;
        peak = peak.max(scene.particles[1].velocity.norm());
    }
    Ok(peak)
}

/// Largest stretch of two copies of `particle` joined by a linear spring of
/// stiffness `k`, released from unit stretch and stepped with the Gear scheme.
fn spring_amplitude(particle: &Particle, k: f64, dt: f64, steps: usize) -> f64 {
    let (mut a, mut b) = (particle.clone(), particle.clone());
    a.position = Vec3::zeros();
    b.position = Vec3::new(1.0, 0.0, 0.0);
    b.acceleration = -b.position * (k / b.mass);
    a.acceleration = -b.acceleration;
    let mut peak: f64 = 1.0;
    for _ in 0..steps {
        let (pa, pb) = (gear_predict(&a, dt), gear_predict(&b, dt));
        let f = -(pb.position - pa.position) * k;
        a = gear_correct(&pa, &(-f), &Vec3::zeros(), dt);
        b = gear_correct(&pb, &f, &Vec3::zeros(), dt);
        peak = peak.max((b.position - a.position).norm());
        if !peak.is_finite() {
            break;
        }
    }
    peak
}

#[test]
fn spring_blows_up_far_above_critical_step() {
    let (scene, dt) = pressed_pair(1.0);
    let k = scene.law_at(scene.temperature).unwrap().normal.k_i;
    let p = &scene.particles[1];
    assert!(spring_amplitude(p, k, 0.5 * dt, 20_000) < 1.0 + 1e-6);
    assert!(spring_amplitude(p, k, 12.0 * dt, 20_000) > 1e6);
}

#[test]
fn contact_stable_at_half_critical_step() {
    let stable = peak_speed(0.5, 20_000).unwrap();
    let (scene, _) = pressed_pair(1.0);
    let m = scene.particles[1].mass;
    let k = scene.law_at(scene.temperature).unwrap().normal.k_i;
    // a suddenly applied load gives speeds of order f/sqrt(k m)
    let natural = 1e-2 / (k * m).sqrt();
    assert!(stable < natural, "stable run reached {stable} m/s (natural {natural})");
}

fn dense_cloud(seed: u64) -> Scene {
    let t = CREEP_FIT_TABLE[1].kelvin();
    let mut scene = Scene::new(Material::ice(t), t, 1.0);
    scene.gravity = Vec3::new(0.0, 0.0, -9.81);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = 1e-3;
    for k in 0..1000 {
        let (a, b, c) = (k % 10, (k / 10) % 10, k / 100);
        let jitter = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let x = Vec3::new(a as f64, b as f64, c as f64) * (1.995 * r) + jitter * (0.002 * r);
        scene.add_particle(Particle::sphere(k, r, 917.0, x).unwrap());
    }
    scene.dt = 0.2 * critical_dt(&scene).unwrap();
    scene
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut scene = dense_cloud(4);
            let mut pairs = 0;
            for _ in 0..60 {
                pairs = pairs.max(scene.step().unwrap().candidate_pairs);
            }
            (scene, pairs)
        })
    };
    let (one, pairs) = run(1);
    assert!(pairs >= one.parallel_threshold, "only {pairs} pairs; the parallel path was not exercised");
    let (four, _) = run(4);
    assert!(one == four, "1-thread and 4-thread runs differ");
}

#[test]
fn momentum_conserved_without_external_forces() {
    let mut scene = dense_cloud(8);
    scene.gravity = Vec3::zeros();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in &mut scene.particles {
        p.velocity = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.02;
    }
    let scale: f64 = scene.particles.iter().map(|p| p.mass * p.velocity.norm()).sum();
    let mut prev = scene.momentum();
    for _ in 0..100 {
        scene.step().unwrap();
        let now = scene.momentum();
        assert!((now - prev).norm() <= 1e-12 * scale);
        prev = now;
    }
}

