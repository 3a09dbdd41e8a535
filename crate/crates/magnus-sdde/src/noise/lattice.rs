//! Fine-mesh Wiener paths and their binary dump format.
//!
//! Increments are generated counter-style: the RNG is keyed by
//! `(seed, path index, fine-step index)` through ChaCha12 streams and word
//! positions, so any fine increment can be regenerated in isolation. Path
//! values are prefix sums of those increments; walking them sequentially
//! (`PathStream`) yields bitwise the values a materialized lattice stores.

use crate::error::{Error, Result};
use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

/// Fine-step count per Box-Muller draw, in 32-bit ChaCha words.
const WORDS_PER_STEP: u128 = 4;

static SAMPLE_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of lattices sampled since process start (test instrumentation).
pub fn lattice_sample_count() -> u64 {
    SAMPLE_COUNT.load(Ordering::Relaxed)
}

fn rng_for_path(seed: u64, path: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// One standard normal from two raw words, with fixed consumption.
fn box_muller(r1: u64, r2: u64) -> f64 {
    let scale = 1.0 / (1u64 << 53) as f64;
    let u1 = ((r1 >> 11) + 1) as f64 * scale; // in (0, 1]
    let u2 = (r2 >> 11) as f64 * scale; // in [0, 1)
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// `m` independent Wiener paths sampled at times `n * h_ref`, `n = 0..=n_samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerLattice {
    m: usize,
    h_ref: f64,
    n_samples: usize,
    seed: u64,
    /// paths[j][n] = W_j(n * h_ref)
    paths: Vec<Vec<f64>>,
}

impl WienerLattice {
    /// Sample `m` paths on `[0, horizon]` with fine step `h_ref`, deterministic
    /// in `seed`. `horizon / h_ref` must be an integer.
    pub fn sample(m: usize, horizon: f64, h_ref: f64, seed: u64) -> Result<Self> {
        if !(h_ref.is_finite() && h_ref > 0.0) || !(horizon.is_finite() && horizon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lattice needs h_ref > 0 and horizon >= 0, got h_ref={h_ref}, horizon={horizon}"
            )));
        }
        let n_samples = exact_ratio(horizon, h_ref).ok_or_else(|| {
            Error::MeshAlignment(format!(
                "horizon {horizon} is not an integer multiple of h_ref {h_ref}"
            ))
        })?;
        let sqrt_h = h_ref.sqrt();
        let paths = (0..m)
            .map(|j| {
                let mut rng = rng_for_path(seed, j);
                let mut w = Vec::with_capacity(n_samples + 1);
                let mut acc = 0.0f64;
                w.push(acc);
                for _ in 0..n_samples {
                    acc += sqrt_h * box_muller(rng.next_u64(), rng.next_u64());
                    w.push(acc);
                }
                w
            })
            .collect();
        SAMPLE_COUNT.fetch_add(1, Ordering::Relaxed);
        Ok(Self {
            m,
            h_ref,
            n_samples,
            seed,
            paths,
        })
    }

    pub fn path_count(&self) -> usize {
        self.m
    }

    pub fn h_ref(&self) -> f64 {
        self.h_ref
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.n_samples as f64 * self.h_ref
    }

    /// W_j at fine index `n`.
    pub fn value(&self, path: usize, index: usize) -> f64 {
        self.paths[path][index]
    }

    /// Map a time to its fine index, rejecting off-lattice times.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let r = t / self.h_ref;
        let k = r.round();
        if (r - k).abs() > 1e-9 * r.abs().max(1.0) {
            return Err(Error::MeshAlignment(format!(
                "time {t} is not on the lattice (h_ref = {})",
                self.h_ref
            )));
        }
        let k = k as i64;
        if k < 0 || k as usize > self.n_samples {
            return Err(Error::MeshAlignment(format!(
                "time {t} outside the lattice range [0, {}]",
                self.horizon()
            )));
        }
        Ok(k as usize)
    }

    /// ΔW_j(s, t) = W_j(t) - W_j(s) for lattice times s <= t.
    pub fn increment(&self, path: usize, s: f64, t: f64) -> Result<f64> {
        if path >= self.m {
            return Err(Error::InvalidArgument(format!(
                "path {path} out of range (m = {})",
                self.m
            )));
        }
        if s > t {
            return Err(Error::InvalidArgument(format!(
                "increment needs s <= t, got s={s}, t={t}"
            )));
        }
        let a = self.index_of(s)?;
        let b = self.index_of(t)?;
        Ok(self.paths[path][b] - self.paths[path][a])
    }

    pub(crate) fn increment_by_index(&self, path: usize, a: usize, b: usize) -> f64 {
        self.paths[path][b] - self.paths[path][a]
    }

    // ---- binary dump (WLAT) -------------------------------------------------

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(36 + 8 * self.m * (self.n_samples + 1));
        out.extend_from_slice(b"WLAT");
        out.extend_from_slice(&1u32.to_le_bytes());
        out.extend_from_slice(&(self.m as u64).to_le_bytes());
        out.extend_from_slice(&(self.n_samples as u64).to_le_bytes());
        out.extend_from_slice(&self.h_ref.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for path in &self.paths {
            for v in path {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Decode a WLAT dump. Validates the header and payload length before
    /// allocating anything proportional to the declared sizes.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        const HEADER: usize = 4 + 4 + 8 + 8 + 8 + 8;
        if bytes.len() < HEADER {
            return Err(Error::Format("truncated header".into()));
        }
        if &bytes[0..4] != b"WLAT" {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let m = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let n_samples = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let h_ref = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let seed = u64::from_le_bytes(bytes[32..40].try_into().unwrap());
        if !(h_ref.is_finite() && h_ref > 0.0) {
            return Err(Error::Format(format!("invalid h_ref {h_ref}")));
        }
        let values = m
            .checked_mul(n_samples.checked_add(1).ok_or_else(too_large)?)
            .ok_or_else(too_large)?;
        let payload = values.checked_mul(8).ok_or_else(too_large)?;
        if bytes.len() as u64 - HEADER as u64 != payload {
            return Err(Error::Format(format!(
                "payload length {} does not match m={m}, n_samples={n_samples}",
                bytes.len() - HEADER
            )));
        }
        let m = m as usize;
        let n_samples = n_samples as usize;
        let row = n_samples + 1;
        let mut paths = Vec::with_capacity(m);
        let mut off = HEADER;
        for _ in 0..m {
            let mut w = Vec::with_capacity(row);
            for _ in 0..row {
                let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                if !v.is_finite() {
                    return Err(Error::Format("non-finite path value".into()));
                }
                w.push(v);
                off += 8;
            }
            if w[0] != 0.0 {
                return Err(Error::Format("path does not start at zero".into()));
            }
            paths.push(w);
        }
        Ok(Self {
            m,
            h_ref,
            n_samples,
            seed,
            paths,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let p = path.as_ref();
        let mut f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(p, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let p = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(p)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(p, e))?;
        Self::from_bytes(&bytes)
    }
}

fn too_large() -> Error {
    Error::Format("declared sizes overflow".into())
}

fn exact_ratio(x: f64, unit: f64) -> Option<usize> {
    let r = x / unit;
    let k = r.round();
    if (r - k).abs() <= 1e-12 * r.abs().max(1.0) && k >= 0.0 && k <= (1u64 << 52) as f64 {
        Some(k as usize)
    } else {
        None
    }
}

/// Memory-bounded sequential walk over the same paths a materialized lattice
/// would hold: yields W_j(n * h_ref) row by row, bitwise identical to
/// [`WienerLattice::value`] for the same key.
pub struct PathStream {
    rngs: Vec<ChaCha12Rng>,
    current: Vec<f64>,
    sqrt_h: f64,
    step: usize,
}

impl PathStream {
    pub fn new(m: usize, h_ref: f64, seed: u64) -> Result<Self> {
        if !(h_ref.is_finite() && h_ref > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "PathStream needs h_ref > 0, got {h_ref}"
            )));
        }
        let mut rngs = Vec::with_capacity(m);
        for j in 0..m {
            let mut rng = rng_for_path(seed, j);
            rng.set_word_pos(0);
            rngs.push(rng);
        }
        Ok(Self {
            rngs,
            current: vec![0.0; m],
            sqrt_h: h_ref.sqrt(),
            step: 0,
        })
    }

    /// Values W_j(step * h_ref) for all paths, then advance one fine step.
    pub fn next_row(&mut self) -> &[f64] {
        if self.step > 0 {
            let pos = WORDS_PER_STEP * (self.step as u128 - 1);
            for (j, rng) in self.rngs.iter_mut().enumerate() {
                rng.set_word_pos(pos);
                self.current[j] += self.sqrt_h * box_muller(rng.next_u64(), rng.next_u64());
            }
        }
        self.step += 1;
        &self.current
    }
}
