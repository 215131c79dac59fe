//! Seeded random streams shared by every Monte-Carlo routine.
//!
//! Parallel work is split into chunks; chunk `i` draws from ChaCha stream `i`
//! of the run seed, so results do not depend on the worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::normalize;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform point on the unit sphere of `R^dim`.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if v.iter().map(|c| c * c).sum::<f64>() > 1e-12 {
            normalize(&mut v);
            return v;
        }
    }
}

/// Uniform point of the cube `[-half, half]^dim`.
pub fn uniform_box<R: Rng + ?Sized>(rng: &mut R, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// Point of the unit sphere within chordal distance `radius` of `center`.
pub fn near_point<R: Rng + ?Sized>(rng: &mut R, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = center
            .iter()
            .map(|c| c + radius * rng.gen_range(-1.0..1.0))
            .collect();
        normalize(&mut v);
        let d2: f64 = v.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        if d2 < radius * radius {
            return v;
        }
    }
}

/// Deterministic quasi-uniform grid of `count` points on `S^{dim-1}`.
pub fn sphere_grid(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, 0x5eed);
    (0..count).map(|_| uniform_sphere(&mut rng, dim)).collect()
}
