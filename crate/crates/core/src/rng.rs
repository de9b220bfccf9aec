//! Seeded random streams.
//!
//! Each draw sequence is keyed by `(master, subkey)` and indexed by the
//! replication `stream`, so replication `i` sees the same numbers no matter
//! which worker runs it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub const SIGNAL_SUBKEY: u64 = 1;
pub const NOISE_SUBKEY: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed {
    pub master: u64,
    pub stream: u64,
}

impl Seed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn replication(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn signal_rng(self) -> ChaCha12Rng {
        self.rng(SIGNAL_SUBKEY)
    }

    pub fn noise_rng(self) -> ChaCha12Rng {
        self.rng(NOISE_SUBKEY)
    }

    /// Generator for an arbitrary subkey; distinct subkeys give independent streams.
    pub fn rng(self, subkey: u64) -> ChaCha12Rng {
        let mut state = self.master ^ subkey.wrapping_mul(0xA076_1D64_78BD_642F);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
