//! Content hashing shared by prompt rendering, the completion cache, and run manifests.

use sha2::{Digest, Sha256};

/// SHA-256 over the given parts, each preceded by its byte length.
///
/// Length prefixes keep distinct part boundaries distinct, so
/// `["ab", "c"]` and `["a", "bc"]` produce different hashes.
/// Returns the digest as 64 lowercase hex digits.
pub fn content_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// SHA-256 of a raw byte buffer as 64 lowercase hex digits.
pub fn bytes_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
