use std::collections::HashMap;

use super::Particle;
use crate::bond::BondRegistry;

/// Default skin as a fraction of the smallest radius.
pub const DEFAULT_SKIN_FRACTION: f64 = 0.1;

fn gap(a: &Particle, b: &Particle) -> f64 {
    (a.position - b.position).norm() - a.radius - b.radius
}

/// Pairs whose surface gap is below `skin_fraction·r_min`, plus every pair
/// holding a bond, sorted and without duplicates. Uses a uniform cell grid
/// with cells of one maximum diameter plus the skin.
pub fn neighbor_search(
    particles: &[Particle],
    bonds: &BondRegistry,
    skin_fraction: f64,
) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = bonds.iter().map(|b| b.pair).collect();
    if particles.len() >= 2 {
        let (r_min, r_max) = particles
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.radius), hi.max(p.radius)));
        let skin = skin_fraction * r_min;
        let cell = 2.0 * r_max + skin;
        let key = |p: &Particle| {
            [
                (p.position.x / cell).floor() as i64,
                (p.position.y / cell).floor() as i64,
                (p.position.z / cell).floor() as i64,
            ]
        };
        let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in particles.iter().enumerate() {
            grid.entry(key(p)).or_default().push(i);
        }
        for (i, p) in particles.iter().enumerate() {
            let [cx, cy, cz] = key(p);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(members) = grid.get(&[cx + dx, cy + dy, cz + dz]) else {
                            continue;
                        };
                        for &j in members {
                            if j > i && gap(p, &particles[j]) < skin {
                                pairs.push((i, j));
                            }
                        }
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// All-pairs reference for [`neighbor_search`].
pub fn brute_force_pairs(
    particles: &[Particle],
    bonds: &BondRegistry,
    skin_fraction: f64,
) -> Vec<(usize, usize)> {
    let r_min = particles.iter().map(|p| p.radius).fold(f64::INFINITY, f64::min);
    let skin = skin_fraction * r_min;
    let mut pairs: Vec<(usize, usize)> = bonds.iter().map(|b| b.pair).collect();
    for i in 0..particles.len() {
        for j in i + 1..particles.len() {
            if gap(&particles[i], &particles[j]) < skin {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}
