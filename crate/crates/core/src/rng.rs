//! Hierarchical seeding: `(seed, trial, stream)` names an independent ChaCha stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent random sources within one Monte-Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Topology,
    Shadowing,
    Fading,
    Noise,
    Symbols,
    Pilots,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Topology => 1,
            Stream::Shadowing => 2,
            Stream::Fading => 3,
            Stream::Noise => 4,
            Stream::Symbols => 5,
            Stream::Pilots => 6,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for `(seed, trial, stream)`; `salt` separates further sub-streams
/// (SNR point, packet) that must not share draws.
pub fn stream_rng(seed: u64, trial: u64, stream: Stream, salt: u64) -> SimRng {
    let key = splitmix64(seed ^ splitmix64(trial ^ splitmix64(salt.wrapping_add(0x5bd1_e995))));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream.id());
    rng
}
