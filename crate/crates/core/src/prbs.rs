//! Seeded random sources: the filtered binary dither used to excite the
//! identification, and Gaussian measurement noise.
//!
//! Every stochastic component takes an explicit seed. Independent streams are
//! derived from one scenario seed with [`derive_seed`].

use alloc::vec::Vec;
use core::f64::consts::PI;

// std's inherent float methods shadow these when testing
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Splitmix64 finalizer over `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Streaming ±amplitude binary sequence through a first-order low-pass.
#[derive(Debug, Clone)]
pub struct Prbs {
    rng: ChaCha8Rng,
    amplitude: f64,
    cutoff: f64,
    state: f64,
}

impl Prbs {
    pub fn new(seed: u64, amplitude: f64, cutoff: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            amplitude,
            cutoff,
            state: 0.0,
        }
    }

    /// Next filtered sample, `dt` seconds after the previous one.
    pub fn next_sample(&mut self, dt: f64) -> f64 {
        let bit = if self.rng.random::<bool>() {
            self.amplitude
        } else {
            -self.amplitude
        };
        let alpha = if self.cutoff.is_infinite() {
            1.0
        } else {
            1.0 - (-2.0 * PI * self.cutoff * dt).exp()
        };
        // convex combination of two values bounded by the amplitude
        self.state += alpha * (bit - self.state);
        self.state
    }
}

/// `n` samples of a filtered pseudo-random binary sequence.
pub fn filtered_prbs(seed: u64, amplitude: f64, cutoff: f64, dt: f64, n: usize) -> Vec<f64> {
    let mut prbs = Prbs::new(seed, amplitude, cutoff);
    (0..n).map(|_| prbs.next_sample(dt)).collect()
}

/// Zero-mean Gaussian noise source.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: ChaCha8Rng,
    dist: Option<Normal<f64>>,
}

impl GaussianNoise {
    /// A standard deviation of zero yields an exact zero stream.
    pub fn new(seed: u64, std_dev: f64) -> Self {
        let dist = (std_dev > 0.0).then(|| Normal::new(0.0, std_dev).expect("finite std_dev"));
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            dist,
        }
    }

    pub fn sample(&mut self) -> f64 {
        match &self.dist {
            Some(d) => d.sample(&mut self.rng),
            None => 0.0,
        }
    }
}
