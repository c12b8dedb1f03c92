//! Seeded random streams.
//!
//! Every stochastic quantity draws from its own stream keyed by what it belongs
//! to (a tail, a flight, a purpose), so runs that differ in one hazard setting
//! still share all other draws.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    ChargeCycles = 1,
    FlightPlan = 2,
    Consumption = 3,
    NavLoss = 4,
    Policy = 5,
    Exploration = 6,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a list of keys into a well-distributed 64-bit value.
pub fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter().fold(splitmix(seed), |acc, &k| splitmix(acc ^ splitmix(k)))
}

pub fn stream(seed: u64, kind: Stream, keys: &[u64]) -> SimRng {
    let mut all = Vec::with_capacity(keys.len() + 1);
    all.push(kind as u64);
    all.extend_from_slice(keys);
    SimRng::seed_from_u64(derive_seed(seed, &all))
}
