//! Seeded random streams.
//!
//! Every stochastic routine draws from ChaCha8 keyed by a 64-bit seed, with a
//! 64-bit stream id selecting an independent keystream. ChaCha is counter
//! based: block `k` of stream `s` is a pure function of `(seed, s, k)`, so
//! results never depend on the platform, the thread count or the order in
//! which work items are scheduled.
//!
//! The 256-bit key is expanded from the seed with `SeedableRng::seed_from_u64`
//! (PCG32 output, as documented by `rand_core`).
//!
//! Stream ids are partitioned by purpose:
//!
//! | range            | user                                  |
//! |------------------|---------------------------------------|
//! | `0..2^32`        | Gibbs chains (chain index)            |
//! | `2^32 + i`       | Moran permutations (permutation index)|
//! | `2^33 + i`       | posterior predictive replicates       |
//! | `2^34 + i`       | synthetic data generators             |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const CHAIN_BASE: u64 = 0;
pub const PERMUTATION_BASE: u64 = 1 << 32;
pub const PREDICTIVE_BASE: u64 = 1 << 33;
pub const SYNTH_BASE: u64 = 1 << 34;

/// Independent generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = || {
            let mut r = stream(7, 3);
            [r.next_u64(), r.next_u64(), r.next_u64()]
        };
        let (a, b) = (draw(), draw());
        assert_eq!(a, b);
        let mut other = stream(7, 4);
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn known_first_word() {
        // Frozen so an accidental change of generator or key expansion is caught.
        let mut r = stream(42, 0);
        assert_eq!(r.next_u64(), 12_578_764_544_318_200_737);
    }
}
