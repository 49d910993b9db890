//! A minimal fixed-seed multiply-xor hasher for Morton keys.
//!
//! Octree lookups hash `u64` Morton codes on the hot path of field
//! evaluation; the default SipHash is several times slower than needed for
//! keys we control. This is the usual Fibonacci/xor-fold construction.

use std::collections::{HashMap, HashSet};
use std::hash::{BuildHasherDefault, Hasher};

#[derive(Default)]
pub struct MortonHasher {
    state: u64,
}

impl Hasher for MortonHasher {
    #[inline]
    fn finish(&self) -> u64 {
        self.state
    }

    fn write(&mut self, bytes: &[u8]) {
        // Only reached for non-u64 keys; fold bytes in 8 at a time.
        for chunk in bytes.chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            self.write_u64(u64::from_le_bytes(buf));
        }
    }

    #[inline]
    fn write_u64(&mut self, v: u64) {
        let mut x = self.state ^ v;
        x = x.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        x ^= x >> 32;
        self.state = x;
    }

    #[inline]
    fn write_u32(&mut self, v: u32) {
        self.write_u64(v as u64);
    }

    #[inline]
    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
}

pub type BuildMortonHasher = BuildHasherDefault<MortonHasher>;
pub type MortonMap<V> = HashMap<u64, V, BuildMortonHasher>;
pub type MortonSet = HashSet<u64, BuildMortonHasher>;
