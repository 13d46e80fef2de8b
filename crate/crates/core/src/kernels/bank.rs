use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{GammaKernel, KernelMethod, LMaxPolicy};
use crate::error::{Error, Result};
use crate::geometry::{SamplingLattice, SphereGrid, Vec3};
use crate::io_util::write_atomic;

const MAGIC: &[u8; 8] = b"MITDSMKB";
const FORMAT_VERSION: u32 = 1;

/// Kernels of power γ (products) and γ/2 (seminorms) for one probe point.
#[derive(Debug, Clone)]
pub struct KernelPair {
    pub full: GammaKernel,
    pub half: GammaKernel,
}

/// Precomputed kernels for every point of a sampling lattice.
#[derive(Debug, Clone)]
pub struct KernelBank {
    gamma: u32,
    method: KernelMethod,
    grid_fingerprint: u64,
    lattice_fingerprint: u64,
    entries: Vec<KernelPair>,
}

impl KernelBank {
    /// Builds the bank in parallel over lattice points. The result does not
    /// depend on the number of worker threads.
    pub fn build(grid: &SphereGrid, lattice: &SamplingLattice, gamma: u32, method: KernelMethod) -> Result<Self> {
        if gamma % 2 != 0 {
            return Err(Error::invalid(format!("gamma must be even, got {gamma}")));
        }
        let entries = lattice
            .points()
            .par_iter()
            .map(|z| {
                Ok(KernelPair {
                    full: GammaKernel::build(grid, z, gamma, method)?,
                    half: GammaKernel::build(grid, z, gamma / 2, method)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KernelBank {
            gamma,
            method,
            grid_fingerprint: grid.fingerprint(),
            lattice_fingerprint: lattice.fingerprint(),
            entries,
        })
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[KernelPair] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> Option<&KernelPair> {
        self.entries.get(i)
    }

    pub fn check(&self, grid: &SphereGrid, lattice: &SamplingLattice) -> Result<()> {
        if self.grid_fingerprint != grid.fingerprint() {
            return Err(Error::GridMismatch("kernel bank was built on a different receiver grid".into()));
        }
        if self.lattice_fingerprint != lattice.fingerprint() {
            return Err(Error::GridMismatch("kernel bank was built on a different lattice".into()));
        }
        Ok(())
    }

    /// Cache key over grid, lattice, γ and evaluation method.
    pub fn cache_key(grid: &SphereGrid, lattice: &SamplingLattice, gamma: u32, method: KernelMethod) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(MAGIC);
        h.update(FORMAT_VERSION.to_le_bytes());
        h.update(grid.content_hash());
        h.update(lattice.content_hash());
        h.update(gamma.to_le_bytes());
        match method {
            KernelMethod::Euler => h.update(b"euler"),
            KernelMethod::Series(LMaxPolicy::Auto) => h.update(b"series-auto"),
            KernelMethod::Series(LMaxPolicy::Fixed(n)) => {
                h.update(b"series-fixed");
                h.update((n as u64).to_le_bytes());
            }
        }
        h.finalize().into()
    }

    pub fn cache_path(dir: &Path, key: &[u8; 32]) -> PathBuf {
        let hex: String = key.iter().map(|b| format!("{b:02x}")).collect();
        dir.join(format!("bank-{}.bin", &hex[..24]))
    }

    /// Loads the bank from `dir` when a file with a matching key exists,
    /// otherwise builds it and stores it there.
    pub fn load_or_build(
        dir: &Path,
        grid: &SphereGrid,
        lattice: &SamplingLattice,
        gamma: u32,
        method: KernelMethod,
    ) -> Result<Self> {
        let key = Self::cache_key(grid, lattice, gamma, method);
        let path = Self::cache_path(dir, &key);
        if path.exists() {
            match Self::load(&path, &key, grid, lattice, gamma, method) {
                Ok(bank) => {
                    log::debug!("kernel bank loaded from {}", path.display());
                    return Ok(bank);
                }
                Err(e) => log::warn!("ignoring kernel cache {}: {e}", path.display()),
            }
        }
        let bank = Self::build(grid, lattice, gamma, method)?;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        bank.save(&path, &key)?;
        Ok(bank)
    }

    fn save(&self, path: &Path, key: &[u8; 32]) -> Result<()> {
        let n_grid = self.entries.first().map_or(0, |e| e.full.values.len());
        let mut buf = Vec::with_capacity(64 + self.entries.len() * n_grid * 48);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        buf.extend_from_slice(key);
        buf.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(n_grid as u64).to_le_bytes());
        for e in &self.entries {
            for k in [&e.full, &e.half] {
                buf.extend_from_slice(&(k.l_max.map_or(u64::MAX, |l| l as u64)).to_le_bytes());
                for v in &k.values {
                    for c in v.iter() {
                        buf.extend_from_slice(&c.to_le_bytes());
                    }
                }
            }
        }
        write_atomic(path, &buf)
    }

    fn load(
        path: &Path,
        key: &[u8; 32],
        grid: &SphereGrid,
        lattice: &SamplingLattice,
        gamma: u32,
        method: KernelMethod,
    ) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let mut r = Reader { bytes: &bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported version {version}")));
        }
        if r.take(32)? != key {
            return Err(Error::Cache("key hash mismatch".into()));
        }
        let n_z = r.u64()? as usize;
        let n_grid = r.u64()? as usize;
        if n_z != lattice.len() || n_grid != grid.len() {
            return Err(Error::Cache("dimension mismatch".into()));
        }
        let mut entries = Vec::with_capacity(n_z);
        for z in lattice.points() {
            let full = r.kernel(z, gamma, grid, n_grid)?;
            let half = r.kernel(z, gamma / 2, grid, n_grid)?;
            entries.push(KernelPair { full, half });
        }
        if r.pos != bytes.len() {
            return Err(Error::Cache("trailing bytes".into()));
        }
        Ok(KernelBank {
            gamma,
            method,
            grid_fingerprint: grid.fingerprint(),
            lattice_fingerprint: lattice.fingerprint(),
            entries,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Cache("truncated file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn kernel(&mut self, z: &Vec3, power: u32, grid: &SphereGrid, n: usize) -> Result<GammaKernel> {
        let l = self.u64()?;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(Vec3::new(self.f64()?, self.f64()?, self.f64()?));
        }
        Ok(GammaKernel {
            z: *z,
            power,
            radius: grid.radius(),
            l_max: (l != u64::MAX).then_some(l as usize),
            values,
            grid_fingerprint: grid.fingerprint(),
        })
    }
}
