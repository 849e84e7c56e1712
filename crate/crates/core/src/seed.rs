//! Deterministic seed derivation.
//!
//! Every random stream in a run is keyed by `derive_seed(master, labels)`,
//! a SHA-256 based mix that is stable across platforms. Environment streams
//! are derived from labels that never mention the algorithm, so paired runs
//! of different learners see identical loss sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// One component of a seed-derivation path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedLabel {
    Str(String),
    Int(u64),
}

impl From<&str> for SeedLabel {
    fn from(s: &str) -> Self {
        SeedLabel::Str(s.to_owned())
    }
}

impl From<String> for SeedLabel {
    fn from(s: String) -> Self {
        SeedLabel::Str(s)
    }
}

impl From<u64> for SeedLabel {
    fn from(v: u64) -> Self {
        SeedLabel::Int(v)
    }
}

impl From<usize> for SeedLabel {
    fn from(v: usize) -> Self {
        SeedLabel::Int(v as u64)
    }
}

impl From<i32> for SeedLabel {
    fn from(v: i32) -> Self {
        SeedLabel::Int(v as u64)
    }
}

/// Mixes a master seed with a label path into a new 64-bit seed.
///
/// Labels are length-prefixed and type-tagged, so `["ab", "c"]` and
/// `["a", "bc"]` (or the string `"1"` and the integer `1`) never collide
/// structurally.
pub fn derive_seed(master_seed: u64, labels: &[SeedLabel]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"fastrates.seed.v1");
    hasher.update(master_seed.to_le_bytes());
    for label in labels {
        match label {
            SeedLabel::Str(s) => {
                hasher.update([0u8]);
                hasher.update((s.len() as u64).to_le_bytes());
                hasher.update(s.as_bytes());
            }
            SeedLabel::Int(v) => {
                hasher.update([1u8]);
                hasher.update(v.to_le_bytes());
            }
        }
    }
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// `seed_path!(0, "env", "gap", 0)` is `derive_seed` with inline labels.
#[macro_export]
macro_rules! seed_path {
    ($master:expr $(, $label:expr)* $(,)?) => {
        $crate::seed::derive_seed($master, &[$($crate::seed::SeedLabel::from($label)),*])
    };
}

/// A ChaCha stream keyed by a derived seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    #[test]
    fn deterministic() {
        let a = seed_path!(42, "env", "gap", 0);
        let b = seed_path!(42, "env", "gap", 0);
        assert_eq!(a, b);
    }

    #[test]
    fn labels_separate_streams() {
        let base = seed_path!(42, "env", "gap", 0);
        assert_ne!(base, seed_path!(42, "env", "gap", 1));
        assert_ne!(base, seed_path!(43, "env", "gap", 0));
        assert_ne!(seed_path!(0, "ab", "c"), seed_path!(0, "a", "bc"));
        assert_ne!(seed_path!(0, "1"), seed_path!(0, 1));
    }

    #[test]
    fn golden_value() {
        // Frozen on first run; a change here breaks replay of stored results.
        assert_eq!(seed_path!(0, "env", "gap", 0), GOLDEN_ENV_GAP_0);
    }

    const GOLDEN_ENV_GAP_0: u64 = 7900261936153708305;
}
