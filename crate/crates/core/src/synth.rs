//! Deterministic synthetic stream generators for tests, regret traces and
//! the browser demo. All instances stay inside the unit ball, matching the
//! `||x|| <= 1` assumption of the regret and gradient bounds.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledInstance;
use crate::linalg::Vector;

fn clamp_to_unit_ball(mut v: Vec<f64>) -> Vector {
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 1.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    }
    Vector::new(v).expect("finite synthetic sample")
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream reproducible
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Two Gaussian classes with means `+-separation` along the first axis and
/// isotropic noise, clamped into the unit ball. Larger `separation` relative
/// to `noise` makes the stream more linearly separable.
pub fn gaussian_pair_stream(
    t: usize,
    dim: usize,
    separation: f64,
    noise: f64,
    seed: u64,
) -> Vec<LabeledInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| {
            let y = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let mut v: Vec<f64> = (0..dim).map(|_| noise * gaussian(&mut rng)).collect();
            v[0] += y * separation;
            LabeledInstance { x: clamp_to_unit_ball(v), y }
        })
        .collect()
}

/// Concentric rings in 2-D: positives near radius `0.3`, negatives near
/// radius `0.9`. Not linearly rankable, trivially separable with a Gaussian
/// kernel; exercises the nonlinearity claim of the kernel learner.
pub fn ring_stream(t: usize, noise: f64, seed: u64) -> Vec<LabeledInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..t)
        .map(|_| {
            let y = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let radius = if y > 0.0 { 0.3 } else { 0.9 } + noise * gaussian(&mut rng);
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            LabeledInstance {
                x: clamp_to_unit_ball(vec![radius * angle.cos(), radius * angle.sin()]),
                y,
            }
        })
        .collect()
}
