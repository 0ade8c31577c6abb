//! Seed-stream derivation.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose seed is
//! derived from `(root seed, stream tag, index...)` by chained SplitMix64
//! mixing. The same tuple always yields the same stream, independent of the
//! order in which streams are created or of the thread that consumes them.
//! Economy generation uses one stream per (period, purpose) and one per
//! inventor; counterfactual draws use one stream per (draw, inventor, period).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Named purposes so different subsystems never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Economy = 1,
    Inventor = 2,
    Field = 3,
    Firm = 4,
    Geography = 5,
    Citations = 6,
    Rewire = 7,
    MonteCarlo = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, stream: Stream, path: &[u64]) -> u64 {
    let mut h = splitmix64(root ^ splitmix64(stream as u64));
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x5851_F42D_4C95_7F2D)));
    }
    h
}

pub fn stream_rng(root: u64, stream: Stream, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, stream, path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream_rng(7, Stream::Inventor, &[1, 2]).random();
        let b: u64 = stream_rng(7, Stream::Inventor, &[1, 2]).random();
        let c: u64 = stream_rng(7, Stream::Inventor, &[2, 1]).random();
        let d: u64 = stream_rng(7, Stream::Firm, &[1, 2]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
