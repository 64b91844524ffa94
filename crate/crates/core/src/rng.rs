//! Deterministic random streams.
//!
//! Every trial owns a ChaCha key built from `(seed, sweep index, θ index,
//! trial index)`; the individual consumers (scene draw, per-frame detection
//! noise, phasor noise) read from separate ChaCha streams of that key. Results
//! therefore depend only on the indices, never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LANE_SCENE: u64 = 0;
const LANE_PHASOR: u64 = 1;
const LANE_ANALYSIS: u64 = 2;
const LANE_FRAME_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrialStreams {
    key: [u8; 32],
}

impl TrialStreams {
    pub fn new(seed: u64, sweep: u64, theta: u64, trial: u64) -> Self {
        let mut key = [0u8; 32];
        for (chunk, word) in key.chunks_exact_mut(8).zip([seed, sweep, theta, trial]) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self { key }
    }

    /// Streams for a standalone run that has no sweep structure.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0, 0, 0)
    }

    fn lane(&self, lane: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(lane);
        rng
    }

    pub fn scene(&self) -> ChaCha8Rng {
        self.lane(LANE_SCENE)
    }

    pub fn phasor_noise(&self) -> ChaCha8Rng {
        self.lane(LANE_PHASOR)
    }

    pub fn analysis(&self) -> ChaCha8Rng {
        self.lane(LANE_ANALYSIS)
    }

    pub fn frame(&self, frame: usize) -> ChaCha8Rng {
        self.lane(LANE_FRAME_BASE + frame as u64)
    }
}
