//! Counter-based random streams.
//!
//! Each draw is keyed by `(master_seed, particle, step, domain)`, so the
//! variate used by particle `p` at step `k` does not depend on which thread
//! handles it or in which order particles are visited.

use rand::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Stream purposes, kept apart so initial sampling never reuses step noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Initial = 1,
    Step = 2,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Splitmix64 generator whose starting state is a hash of the key.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(master_seed: u64, particle: u64, step: u64, domain: Domain) -> Self {
        let mut k = mix(master_seed.wrapping_add(GOLDEN.wrapping_mul(domain as u64)));
        k = mix(k ^ particle.wrapping_mul(GOLDEN));
        k = mix(k ^ step.wrapping_add(GOLDEN));
        Self { state: k }
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
