use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent stream from a base seed and a stream index.
///
/// Sub-seeds are a pure function of `(seed, stream)`, so work split across
/// threads draws the same numbers as a sequential run.
pub(crate) fn derive(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
