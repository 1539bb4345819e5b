//! Seed derivation.
//!
//! Every random stream in a run is a ChaCha8 generator keyed by a 64-bit
//! seed and a phase-specific stream id, so phases never share state:
//!
//! * population of replication `r`: `base_seed ^ r`, stream [`Phase::Population`]
//! * arm assignment: same seed, stream [`Phase::Assignment`]
//! * period loop (random scores, interleaving): same seed, stream [`Phase::Runtime`]
//!
//! True-counterfactual runs use `base_seed ^ COUNTERFACTUAL_SALT` as their
//! base so they are independent of the comparison runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Mixed into the base seed of true-counterfactual runs.
pub const COUNTERFACTUAL_SALT: u64 = 0x5EED_C0DE_CAFE_F00D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Population = 0,
    Assignment = 1,
    Runtime = 2,
    Theory = 3,
}

/// Seed of replication `replication` derived from `base_seed`.
pub fn replication_seed(base_seed: u64, replication: u64) -> u64 {
    base_seed ^ replication
}

pub fn stream(seed: u64, phase: Phase) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(phase as u64);
    rng
}
