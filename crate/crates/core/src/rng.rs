// SPDX-License-Identifier: Apache-2.0

//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose 256-bit
//! key is the tuple `(seed, a, b, domain)`. A stream therefore depends only on
//! the logical coordinates of the draw (seed, trial or read index, distance),
//! never on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Monte-Carlo matchline trials, keyed by `(trial_index, d)`.
pub(crate) const DOMAIN_TRIAL: u64 = 0x7472_6961_6c00_0001;
/// Sequencing-error injection, keyed by `(read_index, 0)`.
pub(crate) const DOMAIN_READ: u64 = 0x7265_6164_0000_0002;
/// Read start positions, keyed by `(read_index, attempt)`.
pub(crate) const DOMAIN_POSITION: u64 = 0x706f_7300_0000_0003;

pub(crate) fn keyed_stream(domain: u64, seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..].copy_from_slice(&domain.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
