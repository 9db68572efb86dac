//! Verifies the embedded constant expansions against pinned SHA-256 digests
//! so a corrupted or hand-edited digit file fails the build.

use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

const CHECKSUMS: &[(&str, &str)] = &[
    ("pi", "9666b122e6a0c74a3253ebc9389e578fffe8d58c574a338aaee5384a38f2683f"),
    ("e", "37ecf3a28e75187077c99d8a69d761680521b4e97f7d3f6346ea83645f183563"),
    ("sqrt2", "8db2f1f0d27da32ce600f9df400dd7eae99bc27e4b87d9f1f3357db5f1de3d52"),
    ("gamma", "2ae01151bbe3f21c0fdd2063d3ef4abca92522d677ea2175bde8a2d5142003cb"),
    ("zeta3", "706937b7bcc0005c29ed396635838d4fb6b6394f0fbf7caef0550a765877ca8e"),
];

fn main() {
    let dir = Path::new("data/constants");
    for (name, expected) in CHECKSUMS {
        let path = dir.join(format!("{name}.txt"));
        println!("cargo:rerun-if-changed={}", path.display());
        let text = fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()));
        let digest = Sha256::digest(text.trim().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        if hex != *expected {
            panic!("checksum mismatch for constant `{name}`: got {hex}, expected {expected}");
        }
    }
}
