//! Pool files.
//!
//! Two layouts hold the same data. Files ending in `.csv` are text:
//!
//! ```text
//! # pcurve pool v1 digest=<16 hex digits> seed=<u64> dropped=<u64>
//! p_nohack,p_hacked,beta,nspecs
//! 0.4178,0.0311,0.0123,5
//! ```
//!
//! Anything else is little-endian binary: the 8 bytes `PCRVPOOL`, a `u32`
//! version (1), then `u64` digest, seed, dropped and entry count, then one
//! 28-byte record per entry (`f64` p_nohack, `f64` p_hacked, `f64` beta,
//! `u32` nspecs).
//!
//! The digest is 64-bit FNV-1a over the JSON encoding of
//! `{"dgp": .., "strategy": .., "seed": ..}`, so a pool can be matched to
//! the study that reads it.

use std::fs::File;
use std::hash::Hasher;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fnv::FnvHasher;
use pcurve_core::dgp::{DgpConfig, PoolEntry, SearchStrategy, SimPool};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const MAGIC: &[u8; 8] = b"PCRVPOOL";
const VERSION: u32 = 1;
const RECORD: usize = 28;

pub fn digest(dgp: &DgpConfig, strategy: SearchStrategy, seed: u64) -> u64 {
    #[derive(Serialize)]
    struct Key<'a> {
        dgp: &'a DgpConfig,
        strategy: SearchStrategy,
        seed: u64,
    }
    let json = serde_json::to_vec(&Key { dgp, strategy, seed }).expect("config serializes");
    let mut h = FnvHasher::default();
    h.write(&json);
    h.finish()
}

/// Contents of a pool file before it is matched to a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolFile {
    pub digest: u64,
    pub seed: u64,
    pub dropped: u64,
    pub entries: Vec<PoolEntry>,
}

impl PoolFile {
    pub fn of(pool: &SimPool) -> Self {
        PoolFile {
            digest: digest(&pool.config, pool.strategy, pool.seed),
            seed: pool.seed,
            dropped: pool.dropped,
            entries: pool.entries.clone(),
        }
    }

    /// Attach the configuration the pool was simulated under. Fails when
    /// the digest disagrees.
    pub fn into_pool(self, dgp: &DgpConfig, strategy: SearchStrategy, origin: &Path) -> Result<SimPool, CliError> {
        let want = digest(dgp, strategy, self.seed);
        if want != self.digest {
            return Err(CliError::input(
                origin,
                format!(
                    "pool digest {:016x} does not match the study's dgp and strategy ({want:016x})",
                    self.digest
                ),
            ));
        }
        Ok(SimPool {
            entries: self.entries,
            config: dgp.clone(),
            strategy,
            seed: self.seed,
            dropped: self.dropped,
        })
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write(pool: &PoolFile, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = if is_csv(path) { write_csv(pool, &mut w) } else { write_bin(pool, &mut w) };
    res.and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<PoolFile, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = BufReader::new(file);
    if is_csv(path) {
        read_csv(&mut r, path)
    } else {
        read_bin(&mut r, path)
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    p_nohack: f64,
    p_hacked: f64,
    beta: f64,
    nspecs: u32,
}

fn write_csv<W: Write>(pool: &PoolFile, w: &mut W) -> std::io::Result<()> {
    writeln!(
        w,
        "# pcurve pool v{VERSION} digest={:016x} seed={} dropped={}",
        pool.digest, pool.seed, pool.dropped
    )?;
    let mut cw = csv::Writer::from_writer(w);
    for e in &pool.entries {
        cw.serialize(Row {
            p_nohack: e.p_nohack,
            p_hacked: e.p_hacked,
            beta: e.beta_reported,
            nspecs: e.n_specs_tried,
        })?;
    }
    cw.flush()
}

fn read_csv<R: BufRead>(r: &mut R, path: &Path) -> Result<PoolFile, CliError> {
    let mut first = String::new();
    r.read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    let bad = |m: &str| CliError::input(path, format!("line 1: {m}"));
    let rest = first
        .trim_end()
        .strip_prefix("# pcurve pool v")
        .ok_or_else(|| bad("missing pool header comment"))?;
    let mut fields = rest.split_whitespace();
    if fields.next() != Some("1") {
        return Err(bad("unsupported pool version"));
    }
    let mut get = |key: &str| -> Result<&str, CliError> {
        fields
            .next()
            .and_then(|f| f.strip_prefix(key))
            .and_then(|f| f.strip_prefix('='))
            .ok_or_else(|| bad(&format!("expected {key}=")))
    };
    let digest = u64::from_str_radix(get("digest")?, 16).map_err(|_| bad("bad digest"))?;
    let seed = get("seed")?.parse().map_err(|_| bad("bad seed"))?;
    let dropped = get("dropped")?.parse().map_err(|_| bad("bad dropped count"))?;
    let mut entries = Vec::new();
    for (i, row) in csv::Reader::from_reader(r).deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::input(path, format!("line {}: {e}", i + 3)))?;
        entries.push(PoolEntry {
            p_nohack: row.p_nohack,
            p_hacked: row.p_hacked,
            beta_reported: row.beta,
            n_specs_tried: row.nspecs,
        });
    }
    Ok(PoolFile {
        digest,
        seed,
        dropped,
        entries,
    })
}

fn write_bin<W: Write>(pool: &PoolFile, w: &mut W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [pool.digest, pool.seed, pool.dropped, pool.entries.len() as u64] {
        w.write_all(&v.to_le_bytes())?;
    }
    for e in &pool.entries {
        w.write_all(&e.p_nohack.to_le_bytes())?;
        w.write_all(&e.p_hacked.to_le_bytes())?;
        w.write_all(&e.beta_reported.to_le_bytes())?;
        w.write_all(&e.n_specs_tried.to_le_bytes())?;
    }
    Ok(())
}

fn read_bin<R: Read>(r: &mut R, path: &Path) -> Result<PoolFile, CliError> {
    let mut head = [0u8; 44];
    r.read_exact(&mut head)
        .map_err(|_| CliError::input(path, "truncated pool header"))?;
    if &head[..8] != MAGIC {
        return Err(CliError::input(path, "not a pool file"));
    }
    let u64_at = |i: usize| u64::from_le_bytes(head[i..i + 8].try_into().unwrap());
    let version = u32::from_le_bytes(head[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(CliError::input(path, format!("unsupported pool version {version}")));
    }
    let (digest, seed, dropped, count) = (u64_at(12), u64_at(20), u64_at(28), u64_at(36));
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| CliError::io(path, e))?;
    if body.len() as u64 != count.saturating_mul(RECORD as u64) {
        return Err(CliError::input(
            path,
            format!("expected {count} records, found {} bytes", body.len()),
        ));
    }
    let f = |c: &[u8], i: usize| f64::from_le_bytes(c[i..i + 8].try_into().unwrap());
    let entries = body
        .chunks_exact(RECORD)
        .map(|c| PoolEntry {
            p_nohack: f(c, 0),
            p_hacked: f(c, 8),
            beta_reported: f(c, 16),
            n_specs_tried: u32::from_le_bytes(c[24..28].try_into().unwrap()),
        })
        .collect();
    Ok(PoolFile {
        digest,
        seed,
        dropped,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use pcurve_core::dgp::DgpScenario;

    fn pool() -> SimPool {
        let cfg = DgpConfig::new(DgpScenario::Covariate);
        let entries = [
            Some(PoolEntry {
                p_nohack: 0.1 + 0.2,
                p_hacked: 1e-300,
                beta_reported: -0.123456789,
                n_specs_tried: 7,
            }),
            None,
            Some(PoolEntry {
                p_nohack: 1.0,
                p_hacked: 0.049999999999999996,
                beta_reported: 0.0,
                n_specs_tried: 1,
            }),
        ];
        SimPool::from_results(cfg, SearchStrategy::Minimum, 42, entries)
    }

    #[test]
    fn both_layouts_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = pool();
        for name in ["pool.csv", "pool.bin"] {
            let path = dir.path().join(name);
            write(&PoolFile::of(&p), &path).unwrap();
            let back = read(&path).unwrap();
            assert_eq!(back, PoolFile::of(&p));
            let q = back.into_pool(&p.config, p.strategy, &path).unwrap();
            assert_eq!(q, p);
        }
    }

    #[test]
    fn binary_header_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.bin");
        write(&PoolFile::of(&pool()), &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"PCRVPOOL");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[36..44].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 44 + 2 * 28);
    }

    #[test]
    fn digest_mismatch_is_rejected() {
        let p = pool();
        let other = DgpConfig::new(DgpScenario::Iv);
        let e = PoolFile::of(&p)
            .into_pool(&other, p.strategy, Path::new("x"))
            .unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert_ne!(digest(&p.config, p.strategy, 1), digest(&p.config, p.strategy, 2));
    }

    #[test]
    fn fnv_reference_vector() {
        let mut h = FnvHasher::default();
        h.write(b"a");
        assert_eq!(h.finish(), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"PCRVPOOL\x01\x00\x00\x00").unwrap();
        assert_eq!(read(&path).unwrap_err().exit_code(), 2);
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "p_nohack,p_hacked,beta,nspecs\n").unwrap();
        assert_eq!(read(&path).unwrap_err().exit_code(), 2);
    }
}
