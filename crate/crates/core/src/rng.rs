//! Deterministic, isolated random streams keyed by (seed, trial, role).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What a stream is used for. Distinct roles never share keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Codebook,
    AliceSecrets,
    AdversaryBabble,
    AdversaryCoins,
    Message,
}

impl Role {
    fn tag(self) -> u64 {
        match self {
            Role::Codebook => 1,
            Role::AliceSecrets => 2,
            Role::AdversaryBabble => 3,
            Role::AdversaryCoins => 4,
            Role::Message => 5,
        }
    }
}

/// Trial index used for the experiment-wide codebook stream.
pub const SHARED_TRIAL: u64 = u64::MAX;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a; stable across platforms and toolchains.
fn label_hash(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

/// The stream for `(master_seed, trial, role)`, optionally separated further
/// by a free-form label.
pub fn stream(master_seed: u64, trial: u64, role: Role, label: Option<&str>) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = splitmix(master_seed) ^ splitmix(trial.rotate_left(17)) ^ label.map_or(0, label_hash);
    for block in key.chunks_mut(8) {
        state = splitmix(state ^ role.tag());
        block.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(role.tag());
    rng
}

/// The codebook stream shared by every trial of an experiment.
pub fn codebook_stream(master_seed: u64) -> ChaCha8Rng {
    stream(master_seed, SHARED_TRIAL, Role::Codebook, None)
}
