//! Seed derivation for reproducible trials.
//!
//! A trial seed is a pure function of `(master_seed, trial_index)`; each
//! subsystem then draws from its own ChaCha stream keyed by that seed, so
//! adding draws to one subsystem never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` in a batch seeded with `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Per-trial uncertainty draws (initial sway, chaser offset).
    Setup = 1,
    Gust = 2,
    CameraNoise = 3,
    /// Rotor wake turbulence.
    Wake = 4,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Random streams owned by one simulation instance.
#[derive(Debug, Clone)]
pub struct Streams {
    pub gust: ChaCha8Rng,
    pub camera: ChaCha8Rng,
    pub wake: ChaCha8Rng,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self {
            gust: stream_rng(seed, Stream::Gust),
            camera: stream_rng(seed, Stream::CameraNoise),
            wake: stream_rng(seed, Stream::Wake),
        }
    }
}
