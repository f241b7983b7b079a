use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use super::C64;

/// A reproducible random stream addressed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8: the master seed fixes the key and the index selects the
/// 64-bit stream nonce, so stream `i` is the same sequence no matter which
/// thread draws it or in what order streams are created.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self { master_seed, stream_index, rng, spare_normal: None }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_low(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal deviate (Box–Muller, second value cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = (-2.0 * self.uniform_open_low().ln()).sqrt();
        let phi = 2.0 * PI * self.uniform();
        self.spare_normal = Some(r * phi.sin());
        r * phi.cos()
    }

    /// Circular complex normal with `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        C64::new(self.standard_normal() * s, self.standard_normal() * s)
    }
}

/// Split a master seed into the stream with the given index.
pub fn rng_split(master_seed: u64, index: u64) -> RngStream {
    RngStream::new(master_seed, index)
}
