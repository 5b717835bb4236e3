//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 counter-based generator whose key is derived
//! from `(master seed, replication index)` and whose stream id is the role
//! the draws play. Replications can therefore run on any thread, in any
//! order, and still produce bit-identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream of random numbers is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamRole {
    Diffusion,
    Jumps,
    Noise,
    Chain,
    Gibbs,
    Auxiliary,
}

impl StreamRole {
    fn id(self) -> u64 {
        match self {
            StreamRole::Diffusion => 1,
            StreamRole::Jumps => 2,
            StreamRole::Noise => 3,
            StreamRole::Chain => 4,
            StreamRole::Gibbs => 5,
            StreamRole::Auxiliary => 6,
        }
    }
}

/// Seed of one replication: the master seed of the run plus the replication index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplicationSeed {
    pub master: u64,
    pub replication: u64,
}

impl ReplicationSeed {
    pub fn new(master: u64, replication: u64) -> Self {
        Self {
            master,
            replication,
        }
    }

    /// Independent generator for `role` within this replication.
    pub fn stream(&self, role: StreamRole) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let a = splitmix64(self.master ^ 0x5851_f42d_4c95_7f2d);
        let b = splitmix64(a ^ self.replication.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let c = splitmix64(b);
        let d = splitmix64(c ^ self.master);
        key[..8].copy_from_slice(&a.to_le_bytes());
        key[8..16].copy_from_slice(&b.to_le_bytes());
        key[16..24].copy_from_slice(&c.to_le_bytes());
        key[24..].copy_from_slice(&d.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(role.id());
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
