use nalgebra::{Quaternion, UnitQuaternion};

use super::{Motion, Particle};
use crate::Vec3;

/// Taylor prediction of acceleration, velocity and position from the
/// current jerk. Kinematic particles move at their prescribed velocity.
pub fn gear_predict(p: &Particle, dt: f64) -> Particle {
    let mut q = p.clone();
    match p.motion {
        Motion::Fixed => {}
        Motion::Kinematic => q.position += p.velocity * dt,
        Motion::Dynamic => {
            let (a, j) = (p.acceleration, p.jerk);
            q.acceleration = a + j * dt;
            q.velocity = p.velocity + a * dt + j * (0.5 * dt * dt);
            q.position = p.position + p.velocity * dt + a * (0.5 * dt * dt) + j * (dt * dt * dt / 6.0);

            let (al, aj) = (p.angular_acceleration, p.angular_jerk);
            q.angular_acceleration = al + aj * dt;
            q.angular_velocity = p.angular_velocity + al * dt + aj * (0.5 * dt * dt);
        }
    }
    q
}

/// Corrects a predicted particle with the force evaluated at the
/// prediction.
pub fn gear_correct(p: &Particle, total_force: &Vec3, g: &Vec3, dt: f64) -> Particle {
    let mut q = p.clone();
    if p.motion != Motion::Dynamic {
        return q;
    }
    let delta = total_force / p.mass + g - p.acceleration;
    q.acceleration += delta;
    q.velocity += delta * (5.0 / 12.0 * dt);
    q.position += delta * (dt * dt / 12.0);
    q.jerk += delta / dt;
    q
}

/// Rotational counterpart of [`gear_correct`] for a sphere.
pub fn gear_correct_rotation(p: &Particle, torque: &Vec3, dt: f64) -> Particle {
    let mut q = p.clone();
    if p.motion != Motion::Dynamic {
        return q;
    }
    let delta = torque / p.inertia - p.angular_acceleration;
    q.angular_acceleration += delta;
    q.angular_velocity += delta * (5.0 / 12.0 * dt);
    q.angular_jerk += delta / dt;
    q
}

/// Advances the orientation by the rotation `omega·dt` and renormalizes.
pub fn update_orientation(p: &Particle, dt: f64) -> Particle {
    let mut q = p.clone();
    let turn = UnitQuaternion::from_scaled_axis(p.angular_velocity * dt);
    q.orientation = UnitQuaternion::new_normalize((turn * p.orientation).into_inner());
    q
}

/// Component-wise quaternion difference `q_i - q_j`.
pub fn orientation_difference(a: &Particle, b: &Particle) -> Quaternion<f64> {
    a.orientation.into_inner() - b.orientation.into_inner()
}

/// Rotation taking the orientation of `b` onto that of `a`.
pub fn relative_rotation(a: &Particle, b: &Particle) -> UnitQuaternion<f64> {
    a.orientation * b.orientation.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn particle() -> Particle {
        Particle::sphere(0, 1e-3, 917.0, Vec3::zeros()).unwrap()
    }

    #[test]
    fn resting_particle_stays_put() {
        let p = particle();
        assert_eq!(gear_predict(&p, 1e-3), p);
    }

    #[test]
    fn constant_velocity_advances_linearly() {
        let p = particle().with_velocity(Vec3::new(1.0, -2.0, 0.5));
        let q = gear_predict(&p, 1e-3);
        assert_relative_eq!(q.position, Vec3::new(1e-3, -2e-3, 0.5e-3), epsilon = 1e-18);
    }

    #[test]
    fn prediction_error_is_fourth_order() {
        // x(t) = t^4 from t0 = 1: the cubic Taylor prediction misses dt^4
        let at = |t0: f64, dt: f64| {
            let mut p = particle();
            p.position = Vec3::x() * t0.powi(4);
            p.velocity = Vec3::x() * (4.0 * t0.powi(3));
            p.acceleration = Vec3::x() * (12.0 * t0 * t0);
            p.jerk = Vec3::x() * (24.0 * t0);
            (gear_predict(&p, dt).position.x - (t0 + dt).powi(4)).abs()
        };
        for dt in [1e-2, 5e-3, 2.5e-3] {
            assert_relative_eq!(at(1.0, dt), dt.powi(4), max_relative = 1e-4);
        }
        let mut p = particle();
        p.position = Vec3::x();
        p.velocity = Vec3::x() * 3.0;
        p.acceleration = Vec3::x() * 6.0;
        p.jerk = Vec3::x() * 6.0;
        assert_relative_eq!(gear_predict(&p, 0.01).position.x, 1.01f64.powi(3), max_relative = 1e-14);
    }

    #[test]
    fn matching_force_leaves_prediction_alone() {
        let mut p = particle();
        p.acceleration = Vec3::new(0.0, 0.0, -9.81);
        let f = p.acceleration * p.mass;
        let q = gear_correct(&p, &f, &Vec3::zeros(), 1e-4);
        assert_eq!(q.position, p.position);
        assert_eq!(q.velocity, p.velocity);
        assert_eq!(q.jerk, p.jerk);
    }

    #[test]
    fn free_fall_follows_parabola() {
        let g = Vec3::new(0.0, 0.0, -9.81);
        let dt = 1e-3;
        let mut p = particle();
        p.acceleration = g;
        for n in 1..=1000 {
            p = gear_predict(&p, dt);
            p = gear_correct(&p, &Vec3::zeros(), &g, dt);
            let t = n as f64 * dt;
            assert_relative_eq!(p.position.z, -0.5 * 9.81 * t * t, max_relative = 1e-12);
        }
    }

    #[test]
    fn non_dynamic_particles_ignore_forces() {
        let p = particle().with_motion(Motion::Kinematic).with_velocity(Vec3::x());
        let q = gear_correct(&gear_predict(&p, 0.1), &Vec3::y(), &Vec3::z(), 0.1);
        assert_relative_eq!(q.position, Vec3::x() * 0.1, epsilon = 1e-15);
        assert_eq!(q.velocity, Vec3::x());
        let f = particle().with_motion(Motion::Fixed).with_velocity(Vec3::x());
        assert_eq!(gear_predict(&f, 0.1).position, Vec3::zeros());
    }

    #[test]
    fn zero_spin_keeps_orientation() {
        let mut p = particle();
        p.orientation = UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3);
        let q = update_orientation(&p, 1e-3);
        assert_relative_eq!(q.orientation, p.orientation, epsilon = 1e-15);
    }

    #[test]
    fn full_turn_returns_to_start() {
        let mut p = particle();
        p.orientation = UnitQuaternion::from_euler_angles(0.4, -0.1, 1.0);
        let start = p.orientation;
        p.angular_velocity = Vec3::new(0.0, 0.0, 2.0 * std::f64::consts::PI);
        for _ in 0..10_000 {
            p = update_orientation(&p, 1e-4);
        }
        assert!(p.orientation.angle_to(&start) < 1e-6);
        let mut half = p.clone();
        half.orientation = start;
        for _ in 0..5_000 {
            half = update_orientation(&half, 1e-4);
        }
        let expected = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), std::f64::consts::PI) * start;
        assert!(half.orientation.angle_to(&expected) < 1e-6);
    }

    #[test]
    fn norm_stays_unit_over_a_million_steps() {
        let mut p = particle();
        p.angular_velocity = Vec3::new(3.0, -1.0, 7.0);
        for _ in 0..1_000_000 {
            p = update_orientation(&p, 1e-3);
        }
        assert!((p.orientation.into_inner().norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn relative_orientation_helpers() {
        let mut a = particle();
        let b = particle();
        a.orientation = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), 0.3);
        assert_relative_eq!(relative_rotation(&a, &b).angle(), 0.3, epsilon = 1e-14);
        let d = orientation_difference(&a, &a);
        assert_eq!(d.norm(), 0.0);
    }
}
