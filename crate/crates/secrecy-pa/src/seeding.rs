//! Deterministic derivation of per-task RNG seeds.
//!
//! Every random quantity in an experiment (channel draws, Monte Carlo noise,
//! optimiser restarts) pulls from its own stream, seeded by mixing a master
//! seed with a handful of integer coordinates that identify the task. Work
//! items can then run in any order, on any number of threads, and still
//! reproduce bit-identical results.

/// One step of the splitmix64 generator, used here as a mixing function.
///
/// Splitmix64 is a bijection on `u64` with good avalanche behaviour, so
/// feeding it a running state absorbs each word of the task coordinates
/// without collisions between short and long coordinate lists.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a master seed and task coordinates.
///
/// The coordinates are absorbed one by one, each followed by a splitmix64
/// scramble, and a final scramble keyed by the list length separates a
/// prefix from any of its extensions.
pub fn child_seed(master: u64, parts: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &p in parts {
        state = splitmix64(state ^ p);
    }
    splitmix64(state ^ parts.len() as u64)
}
