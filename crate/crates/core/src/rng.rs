//! Counter-addressed Brownian increments.
//!
//! Every path draws from its own ChaCha8 stream selected by `(seed, stream)`.
//! Step `n` starts at a fixed word offset, so any step can be regenerated
//! without replaying the ones before it and the increments of a path do not
//! depend on which worker runs it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream id for sample `sample` of sweep level `k`; `purpose` separates
/// unrelated uses of the same `(k, sample)` pair.
pub fn stream_id(k: u32, sample: u32, purpose: u8) -> u64 {
    ((purpose as u64) << 56) | ((k as u64) << 32) | sample as u64
}

/// Increments of all modes over one step, tagged with their origin.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianIncrements {
    pub dw: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
    pub step: u64,
}

#[derive(Clone, Debug)]
pub struct BrownianStream {
    seed: u64,
    stream: u64,
    modes: usize,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits in (0, 1]
    ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

impl BrownianStream {
    pub fn new(seed: u64, stream: u64, modes: usize) -> Self {
        BrownianStream { seed, stream, modes }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    fn words_per_step(&self) -> u128 {
        // two u64 draws (four 32-bit words) per pair of normals
        (4 * self.modes.div_ceil(2)) as u128
    }

    /// Standard normals for step `step` (one per mode).
    pub fn normals(&self, step: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(step as u128 * self.words_per_step());
        let mut out = Vec::with_capacity(self.modes + 1);
        while out.len() < self.modes {
            let u1 = uniform(&mut rng);
            let u2 = uniform(&mut rng);
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            out.push(r * t.cos());
            out.push(r * t.sin());
        }
        out.truncate(self.modes);
        out
    }

    /// Increments `dW_i ~ N(0, dt)` for step `step`.
    pub fn increments(&self, step: u64, dt: f64) -> Vec<f64> {
        let s = dt.sqrt();
        self.normals(step).into_iter().map(|z| z * s).collect()
    }

    pub fn draw(&self, step: u64, dt: f64) -> BrownianIncrements {
        BrownianIncrements { dw: self.increments(step, dt), seed: self.seed, stream: self.stream, step }
    }

    /// Increment over coarse step `step` of size `factor · dt_fine`, built as
    /// the sum of the `factor` fine increments it spans.
    pub fn coarse_increments(&self, step: u64, factor: u64, dt_fine: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.modes];
        for s in step * factor..(step + 1) * factor {
            for (a, d) in acc.iter_mut().zip(self.increments(s, dt_fine)) {
                *a += d;
            }
        }
        acc
    }
}
