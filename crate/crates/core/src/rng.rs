//! Deterministic random streams.
//!
//! Replication `i` of any experiment draws from `RngStream::new(seed, i)`,
//! so results never depend on which worker ran which replication.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_stream_is_reproducible() {
        let a: Vec<u64> = (0..16)
            .map({
                let mut r = RngStream::new(7, 3).rng();
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..16)
            .map({
                let mut r = RngStream::new(7, 3).rng();
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let mut r0 = RngStream::new(7, 0).rng();
        let mut r1 = RngStream::new(7, 1).rng();
        let a: Vec<u64> = (0..8).map(|_| r0.random()).collect();
        let b: Vec<u64> = (0..8).map(|_| r1.random()).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn stream_output_is_pinned() {
        // Changing generator or seeding scheme invalidates published seeds.
        let mut r = RngStream::new(42, 0).rng();
        let first: u64 = r.random();
        assert_eq!(first, 12578764544318200737);
    }
}
