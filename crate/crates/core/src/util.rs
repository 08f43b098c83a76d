//! Small shared helpers: stable hashing, log-factorial tables, atomic file writes.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// FNV-1a 64-bit hash. Used to fingerprint configs and cache payloads; stable
/// across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hex string of an FNV-1a hash, as embedded in artifact files.
pub fn fnv1a64_hex(bytes: &[u8]) -> String {
    format!("{:016x}", fnv1a64(bytes))
}

/// Table of ln(k!) for k = 0..=n, built with compensated summation so that
/// binomial weights survive N ≈ 2048 without overflow or drift.
pub struct LnFactorial {
    table: Vec<f64>,
}

impl LnFactorial {
    pub fn new(max_n: usize) -> Self {
        let mut table = Vec::with_capacity(max_n + 1);
        table.push(0.0);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 1..=max_n {
            // Kahan update of sum += ln k
            let y = (k as f64).ln() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        Self { table }
    }

    #[inline]
    pub fn ln_factorial(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// ln C(n, k)
    #[inline]
    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Write `bytes` to `path` atomically: write to a sibling temp file, then
/// rename over the target. A crash mid-write leaves the previous file intact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = match path.file_name() {
        Some(name) => {
            let mut n = name.to_os_string();
            n.push(".tmp");
            path.with_file_name(n)
        }
        None => {
            return Err(crate::error::Error::Argument(format!(
                "not a writable file path: {}",
                path.display()
            )))
        }
    };
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_known_value() {
        // FNV-1a of empty input is the offset basis.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
    }

    #[test]
    fn ln_binomial_small_exact() {
        let lf = LnFactorial::new(16);
        let c = (lf.ln_binomial(10, 3)).exp();
        assert!((c - 120.0).abs() < 1e-9);
    }

    #[test]
    fn ln_binomial_large_stable() {
        let lf = LnFactorial::new(2048);
        // C(2048, 1024) overflows f64; its log must still be finite and accurate.
        let v = lf.ln_binomial(2048, 1024);
        // Stirling-based reference: ln C(2n,n) ≈ 2n ln 2 − 0.5 ln(πn)
        let reference =
            2048.0 * std::f64::consts::LN_2 - 0.5 * (std::f64::consts::PI * 1024.0).ln();
        assert!((v - reference).abs() < 1e-3, "v={v} ref={reference}");
    }

    #[test]
    fn atomic_write_roundtrip() {
        let dir = std::env::temp_dir().join(format!("spinenc-util-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("x.txt");
        atomic_write(&p, b"hello").unwrap();
        atomic_write(&p, b"world").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"world");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
