//! Named sub-seed derivation.
//!
//! All randomness in the toolkit flows from a single user-supplied seed
//! through named sub-seeds, so independent parts of a run never share an
//! RNG stream and adding work items never reshuffles existing ones.
//! Derivation: SHA-256 over the domain-separated label parts, first 8
//! bytes little-endian. Stable across platforms and releases.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derive a sub-seed from a root seed and a label path.
pub fn derive_seed(root: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"netweave/v1");
    hasher.update(root.to_le_bytes());
    for part in parts {
        hasher.update([0xff]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// ChaCha RNG seeded from a named sub-seed.
pub fn rng_for(root: u64, parts: &[&str]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, parts))
}
