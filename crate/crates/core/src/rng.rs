//! Seeded random streams. One run seed fans out into independent ChaCha
//! streams selected by id, so results do not depend on evaluation order or
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids used by the oracle suites.
pub mod ids {
    pub const ICI_MOMENTS: u64 = 1;
    pub const ZERO_DOPPLER: u64 = 2;
    pub const SUM_CAPACITY: u64 = 3;
    pub const ERGODIC: u64 = 4;
    pub const CONCAVITY: u64 = 5;
}

/// Independent stream `id` of the generator seeded with `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Sub-stream for chunk `chunk` of a trial-parallel job on stream `id`.
pub fn chunk_stream(seed: u64, id: u64, chunk: u64) -> ChaCha8Rng {
    // keep ids and chunks in disjoint halves of the stream space
    stream(seed, (id << 32) | (chunk & 0xffff_ffff))
}
