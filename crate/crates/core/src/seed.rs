//! Fan-out of one master seed into named, independent sub-seeds.
//!
//! Every random stream in a run (traffic, data splits, weight init, epoch
//! shuffles) is seeded from `(master, label, index)` through a fixed
//! derivation, so a run is reproducible from its master seed alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TRAFFIC: &str = "traffic";
pub const SPLIT: &str = "split";
pub const INIT: &str = "init";
pub const SHUFFLE: &str = "shuffle";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives the sub-seed for stream `label`, repetition `index`.
pub fn sub_seed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(label)) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng_for(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, label, index))
}
