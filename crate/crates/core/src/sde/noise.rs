//! Counter-addressed Gaussian increments.
//!
//! Particle `i` owns ChaCha stream `i`; the normal for `(step, channel)`
//! sits at word position `(step * m + channel) * 4`. Every normal consumes
//! exactly two `u64`s (Box-Muller, one output kept), so drawing a step's
//! channels in order lands on the same words as seeking each one.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BRIDGE_STREAM: u64 = 1 << 63;
/// Bridge nodes reserved per step.
pub const BRIDGE_NODES: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    pub seed: u64,
    pub channels: usize,
}

fn unit_open(x: u64) -> f64 {
    // (0, 1]
    ((x >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit_open(rng.next_u64());
    let u2 = unit_open(rng.next_u64());
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

impl NoiseStream {
    pub fn new(seed: u64, channels: usize) -> Self {
        NoiseStream { seed, channels }
    }

    fn rng(&self, stream: u64, word: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng.set_word_pos(word);
        rng
    }

    /// Standard normal for `(particle, step, channel)`.
    pub fn normal(&self, particle: u64, step: u64, channel: usize) -> f64 {
        let word = (step as u128 * self.channels as u128 + channel as u128) * 4;
        box_muller(&mut self.rng(particle, word))
    }

    /// Brownian increments `N(0, dt)` of every channel for one step.
    pub fn increments(&self, particle: u64, step: u64, dt: f64, out: &mut [f64]) {
        let mut rng = self.rng(particle, step as u128 * self.channels as u128 * 4);
        let s = dt.sqrt();
        for o in out.iter_mut().take(self.channels) {
            *o = s * box_muller(&mut rng);
        }
    }

    /// Standard normal used to split step `step` at bridge node `node`.
    pub fn bridge_normal(&self, particle: u64, step: u64, node: u64, channel: usize) -> f64 {
        let slot = (step as u128 * BRIDGE_NODES as u128 + node as u128) * self.channels as u128;
        box_muller(&mut self.rng(particle ^ BRIDGE_STREAM, (slot + channel as u128) * 4))
    }
}

/// Sequential draws for a particle, advancing one step at a time.
pub struct ParticleNoise {
    rng: ChaCha8Rng,
    channels: usize,
}

impl ParticleNoise {
    pub fn new(stream: &NoiseStream, particle: u64, first_step: u64) -> Self {
        ParticleNoise {
            rng: stream.rng(particle, first_step as u128 * stream.channels as u128 * 4),
            channels: stream.channels,
        }
    }

    /// Increments of the next step.
    pub fn next(&mut self, dt: f64, out: &mut [f64]) {
        let s = dt.sqrt();
        for o in out.iter_mut().take(self.channels) {
            *o = s * box_muller(&mut self.rng);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_draws_match_seeks() {
        let s = NoiseStream::new(42, 3);
        let mut seq = ParticleNoise::new(&s, 7, 0);
        let mut buf = [0.0; 3];
        for step in 0..5 {
            seq.next(1.0, &mut buf);
            for (c, &b) in buf.iter().enumerate() {
                assert_eq!(b, s.normal(7, step, c));
            }
        }
        s.increments(7, 3, 4.0, &mut buf);
        assert_eq!(buf[1], 2.0 * s.normal(7, 3, 1));
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let s = NoiseStream::new(1, 2);
        assert_ne!(s.normal(0, 0, 0), s.normal(1, 0, 0));
        assert_ne!(s.normal(0, 0, 0), s.normal(0, 0, 1));
        assert_ne!(s.normal(0, 0, 0), s.bridge_normal(0, 0, 0, 0));
        assert_eq!(s.normal(3, 9, 1), NoiseStream::new(1, 2).normal(3, 9, 1));
        assert_ne!(s.normal(3, 9, 1), NoiseStream::new(2, 2).normal(3, 9, 1));
    }

    #[test]
    fn normals_have_unit_variance() {
        let s = NoiseStream::new(5, 1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|i| s.normal(0, i, 0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01 && (var - 1.0).abs() < 0.01);
    }
}
