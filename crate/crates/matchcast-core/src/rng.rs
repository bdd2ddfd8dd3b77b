//! Seed derivation for reproducible sub-streams.

/// SplitMix64 step; used to derive independent stream seeds from a master seed.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives a per-stream seed (per fold, per tree, per season) from a master
/// seed so that parallel and sequential execution see identical randomness.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream.wrapping_mul(0x9e3779b97f4a7c15))
}
