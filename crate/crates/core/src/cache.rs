//! Content-addressed on-disk cache of eigensolutions.
//!
//! File layout: one line of JSON header, then little-endian `f64` arrays
//! (energies, eigenvectors column-major, certifying lower-basis energies),
//! then the SHA-256 of every preceding byte. Round trips are bit-exact.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::BasisSpec;
use crate::solver::{drift_report, ConvergenceReport, EigenResult};
use crate::{Error, Result};

const FORMAT: &str = "tmts-eigen";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    key: String,
    n_x: usize,
    n_y: usize,
    omega_x_bits: u64,
    omega_y_bits: u64,
    dim: usize,
    /// A result is certified when this or `lower` is present.
    converged_upto: Option<usize>,
    lower: Option<LowerHeader>,
}

#[derive(Serialize, Deserialize)]
struct LowerHeader {
    n_x: usize,
    n_y: usize,
    omega_x_bits: u64,
    omega_y_bits: u64,
    len: usize,
    tolerance_bits: u64,
}

/// Eigensolution plus the convergence data that certified it.
#[derive(Clone, Debug, PartialEq)]
pub struct CachedSolution {
    pub eig: EigenResult,
    pub convergence: Option<ConvergenceReport>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// The cached file failed verification and was rebuilt.
    Recomputed,
}

#[derive(Clone, Debug)]
pub struct EigenCache {
    dir: PathBuf,
}

struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)
    }

    fn put_f64s(&mut self, values: &[f64]) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(8 * 4096);
        for chunk in values.chunks(4096) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            self.put(&buf)?;
        }
        Ok(())
    }
}

fn read_f64s<R: Read>(r: &mut R, hasher: &mut Sha256, n: usize) -> std::io::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = vec![0u8; 8 * 4096];
    let mut left = n;
    while left > 0 {
        let take = left.min(4096);
        let bytes = &mut buf[..8 * take];
        r.read_exact(bytes)?;
        hasher.update(&*bytes);
        out.extend(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())));
        left -= take;
    }
    Ok(out)
}

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.eig"))
    }

    pub fn store(&self, key: &str, sol: &CachedSolution) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let eig = &sol.eig;
        let b = eig.basis();
        // the certifying rung: second-to-last basis of the ladder
        let lower_rung = sol.convergence.as_ref().and_then(|r| {
            let i = r.bases.len().checked_sub(2)?;
            Some((r.bases[i], r.spectra[i].as_slice(), r.tolerance))
        });
        let lower = lower_rung.map(|(lb, spectrum, tol)| LowerHeader {
            n_x: lb.n_x,
            n_y: lb.n_y,
            omega_x_bits: lb.omega_x.to_bits(),
            omega_y_bits: lb.omega_y.to_bits(),
            len: spectrum.len(),
            tolerance_bits: tol.to_bits(),
        });
        let header = Header {
            format: FORMAT.into(),
            version: VERSION,
            key: key.into(),
            n_x: b.n_x,
            n_y: b.n_y,
            omega_x_bits: b.omega_x.to_bits(),
            omega_y_bits: b.omega_y.to_bits(),
            dim: eig.dim(),
            converged_upto: eig.converged_upto(),
            lower,
        };
        let path = self.path_for(key);
        let tmp = path.with_extension("eig.tmp");
        {
            let mut w = HashingWriter {
                inner: BufWriter::new(File::create(&tmp)?),
                hasher: Sha256::new(),
            };
            let mut line = serde_json::to_vec(&header).expect("header serializes");
            line.push(b'\n');
            w.put(&line)?;
            w.put_f64s(eig.energies())?;
            w.put_f64s(eig.vectors())?;
            if let Some((_, spectrum, _)) = lower_rung {
                w.put_f64s(spectrum)?;
            }
            let digest = w.hasher.finalize();
            w.inner.write_all(&digest)?;
            w.inner.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// `Ok(None)` on a miss, `Err(CorruptCache)` when the file fails
    /// verification.
    pub fn load(&self, key: &str) -> Result<Option<CachedSolution>> {
        let path = self.path_for(key);
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: String| Error::CorruptCache {
            path: path.clone(),
            reason,
        };
        let file_len = file.metadata()?.len();
        let mut r = BufReader::new(file);
        let mut hasher = Sha256::new();
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        hasher.update(&line);
        let header: Header = serde_json::from_slice(&line).map_err(|e| corrupt(format!("bad header: {e}")))?;
        if header.format != FORMAT || header.version != VERSION || header.key != key {
            return Err(corrupt("header does not match this cache key".into()));
        }
        let basis = BasisSpec {
            omega_x: f64::from_bits(header.omega_x_bits),
            omega_y: f64::from_bits(header.omega_y_bits),
            n_x: header.n_x,
            n_y: header.n_y,
        };
        if basis.dim() != header.dim {
            return Err(corrupt("dimension does not match basis".into()));
        }
        let dim = header.dim;
        let lower_len = header.lower.as_ref().map_or(0, |l| l.len);
        let expected = (line.len() as u64)
            .saturating_add(8u64.saturating_mul((dim as u64).saturating_mul(dim as u64 + 1) + lower_len as u64))
            .saturating_add(32);
        if file_len != expected {
            return Err(corrupt(format!("size {file_len} bytes, expected {expected}")));
        }
        let short = |e: std::io::Error| corrupt(format!("truncated: {e}"));
        let energies = read_f64s(&mut r, &mut hasher, dim).map_err(short)?;
        let vectors = read_f64s(&mut r, &mut hasher, dim * dim).map_err(short)?;
        let lower = match &header.lower {
            Some(l) => Some(read_f64s(&mut r, &mut hasher, l.len).map_err(short)?),
            None => None,
        };
        let mut digest = [0u8; 32];
        r.read_exact(&mut digest).map_err(short)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(corrupt("trailing bytes after checksum".into()));
        }
        if hasher.finalize().as_slice() != digest {
            return Err(corrupt("checksum mismatch".into()));
        }

        let mut eig = EigenResult::from_parts(basis, energies, vectors)?;
        if header.converged_upto.is_some() || header.lower.is_some() {
            eig.set_converged_upto(header.converged_upto);
        }
        let convergence = match (header.lower, lower) {
            (Some(l), Some(lower_energies)) => {
                let lb = BasisSpec {
                    omega_x: f64::from_bits(l.omega_x_bits),
                    omega_y: f64::from_bits(l.omega_y_bits),
                    n_x: l.n_x,
                    n_y: l.n_y,
                };
                let tol = f64::from_bits(l.tolerance_bits);
                Some(drift_report(
                    &[lb, basis],
                    vec![lower_energies, eig.energies().to_vec()],
                    tol,
                )?)
            }
            _ => None,
        };
        Ok(Some(CachedSolution { eig, convergence }))
    }

    /// Loads `key`, or computes and stores it on a miss or a corrupt file.
    pub fn load_or_compute(
        &self,
        key: &str,
        compute: impl FnOnce() -> Result<CachedSolution>,
    ) -> Result<(CachedSolution, CacheOutcome)> {
        let outcome = match self.load(key) {
            Ok(Some(sol)) => return Ok((sol, CacheOutcome::Hit)),
            Ok(None) => CacheOutcome::Miss,
            Err(e @ Error::CorruptCache { .. }) => {
                log::warn!("{e}; recomputing");
                CacheOutcome::Recomputed
            }
            Err(e) => return Err(e),
        };
        let sol = compute()?;
        self.store(key, &sol)?;
        Ok((sol, outcome))
    }
}
