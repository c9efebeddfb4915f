//! Reproducible random streams.
//!
//! Every trial draws from its own ChaCha8 stream selected by
//! `(master_seed, stream_index)`, so trials can run on any worker in any
//! order and still produce the same draws.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A deterministic random stream owned by a single trial.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        RngStream {
            master_seed,
            stream_index,
            inner,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }
}

/// Shorthand for [`RngStream::new`].
pub fn spawn_stream(master_seed: u64, stream_index: u64) -> RngStream {
    RngStream::new(master_seed, stream_index)
}

impl RngCore for RngStream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    #[inline]
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Number of stream indices reserved for each grid point.
pub const STREAMS_PER_GRID_POINT: u64 = 1 << 32;

/// A contiguous block of stream indices: trial `i` uses `base + i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFamily {
    master_seed: u64,
    base: u64,
}

impl StreamFamily {
    pub fn new(master_seed: u64) -> Self {
        StreamFamily {
            master_seed,
            base: 0,
        }
    }

    /// Streams for grid point `g`: indices `g * 2^32 + i`.
    pub fn for_grid_point(master_seed: u64, grid_point: u64) -> Self {
        StreamFamily {
            master_seed,
            base: grid_point
                .checked_mul(STREAMS_PER_GRID_POINT)
                .expect("grid point index overflows the stream space"),
        }
    }

    /// The family shifted by `offset` indices.
    pub fn offset(self, offset: u64) -> Self {
        StreamFamily {
            master_seed: self.master_seed,
            base: self.base + offset,
        }
    }

    pub fn stream(&self, trial: u64) -> RngStream {
        RngStream::new(self.master_seed, self.base + trial)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn base(&self) -> u64 {
        self.base
    }
}
