use sha2::{Digest, Sha256};

/// Sub-seed for one pipeline stage, derived from the run's master seed.
pub fn derive_seed(master: u64, component: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(component.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
