//! Binary corrector cache.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "KFPC1"  version:u8
//! dim:u32  order:u32  nx:u32  nv:u32  model_hash:u64  count:u32
//! count blocks of (re:f64, im:f64) pairs, k-major and n-minor, one block per
//!     corrector in graded multi-index order, each on the cut of its level
//! count solver residuals:f64
//! checksum:u64   FNV-1a of every preceding byte
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;

use super::{fnv1a, PersistError};
use crate::cell::{CorrectorOptions, CorrectorSet};
use crate::multi_index;
use crate::spectral::{Model, PhaseField};

pub const MAGIC: &[u8; 5] = b"KFPC1";
pub const VERSION: u8 = 1;

/// Hash of everything the correctors depend on.
pub fn cache_key(model: &Model, opts: &CorrectorOptions) -> u64 {
    let mut bytes = model.canonical_bytes();
    bytes.extend_from_slice(&opts.solve.tol.to_le_bytes());
    fnv1a(&bytes)
}

/// `KFP_CACHE_DIR`, or `cache` under the working directory.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("KFP_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("cache"))
}

pub fn cache_path(dir: &Path, model: &Model, opts: &CorrectorOptions) -> PathBuf {
    let d = model.dim();
    dir.join(format!(
        "correctors-d{d}-o{}-x{}-v{}-{:016x}.kfpc",
        opts.order,
        opts.nx,
        opts.nv,
        cache_key(model, opts)
    ))
}

fn alphas(d: usize, order: u32) -> Vec<Vec<u32>> {
    (1..=order).flat_map(|level| multi_index::of_degree(d, level)).collect()
}

/// Serializes the correctors of `cset` with their solver residuals.
pub fn encode(cset: &CorrectorSet) -> Vec<u8> {
    let opts = cset.options();
    let d = cset.dim();
    let list = alphas(d, opts.order);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for v in [d as u32, opts.order, opts.nx as u32, opts.nv as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&cache_key(cset.model(), opts).to_le_bytes());
    out.extend_from_slice(&(list.len() as u32).to_le_bytes());
    for alpha in &list {
        let phi = cset.corrector(alpha).expect("complete hierarchy");
        for c in phi.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    for alpha in &list {
        let r = cset.reports().get(alpha).map_or(f64::NAN, |r| r.residual);
        out.extend_from_slice(&r.to_le_bytes());
    }
    let sum = fnv1a(&out);
    out.extend_from_slice(&sum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], PersistError> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(PersistError::CacheInvalid("truncated file".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, PersistError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn u64(&mut self) -> Result<u64, PersistError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn f64(&mut self) -> Result<f64, PersistError> {
        Ok(f64::from_bits(self.u64()?))
    }
}

/// Decoded correctors and residuals, checked against the expected model and
/// options.
pub fn decode(
    bytes: &[u8],
    model: &Model,
    opts: &CorrectorOptions,
) -> Result<(BTreeMap<Vec<u32>, PhaseField>, BTreeMap<Vec<u32>, f64>), PersistError> {
    let invalid = |m: String| PersistError::CacheInvalid(m);
    if bytes.len() < MAGIC.len() + 1 + 8 {
        return Err(invalid("file too short".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("eight bytes"));
    if fnv1a(body) != stored {
        return Err(invalid("checksum mismatch".into()));
    }
    let mut r = Reader { bytes: body, pos: 0 };
    if r.take(5)? != MAGIC {
        return Err(invalid("bad magic".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(invalid(format!("unsupported version {version}")));
    }
    let d = model.dim();
    let header = [r.u32()?, r.u32()?, r.u32()?, r.u32()?];
    let expect = [d as u32, opts.order, opts.nx as u32, opts.nv as u32];
    if header != expect {
        return Err(invalid(format!("header {header:?} does not match {expect:?}")));
    }
    if r.u64()? != cache_key(model, opts) {
        return Err(invalid("model hash mismatch".into()));
    }
    let list = alphas(d, opts.order);
    if r.u32()? as usize != list.len() {
        return Err(invalid("corrector count mismatch".into()));
    }
    let mut fields = BTreeMap::new();
    let mut layouts = BTreeMap::new();
    for alpha in &list {
        let level = multi_index::degree(alpha);
        let layout = layouts.entry(level).or_insert_with(|| Arc::new(opts.layout(d, level))).clone();
        let mut coeffs = Vec::with_capacity(layout.len());
        for _ in 0..layout.len() {
            coeffs.push(Complex64::new(r.f64()?, r.f64()?));
        }
        fields.insert(alpha.clone(), PhaseField::from_coeffs(layout, coeffs));
    }
    let mut residuals = BTreeMap::new();
    for alpha in &list {
        residuals.insert(alpha.clone(), r.f64()?);
    }
    if r.pos != body.len() {
        return Err(invalid("trailing bytes".into()));
    }
    Ok((fields, residuals))
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial cache.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PersistError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))?;
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(|e| PersistError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| PersistError::io(&tmp, e))?;
    f.sync_all().map_err(|e| PersistError::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| PersistError::io(path, e))
}

/// Where a corrector set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Solved,
}

/// Loads the correctors from `dir` or solves and stores them. A corrupt
/// file is an error unless `force`, which re-solves and overwrites it.
pub fn load_or_build(
    dir: &Path,
    model: &Model,
    opts: &CorrectorOptions,
    force: bool,
) -> Result<(CorrectorSet, BTreeMap<Vec<u32>, f64>, CacheOutcome), PersistError> {
    let path = cache_path(dir, model, opts);
    if !force && path.exists() {
        let bytes = std::fs::read(&path).map_err(|e| PersistError::io(&path, e))?;
        let (fields, residuals) = decode(&bytes, model, opts)?;
        let cset = CorrectorSet::from_correctors(model, opts, fields)?;
        log::info!("cache hit: {}", path.display());
        return Ok((cset, residuals, CacheOutcome::Hit));
    }
    log::info!("solving cell problems into {}", path.display());
    let cset = CorrectorSet::build(model, opts)?;
    let bytes = encode(&cset);
    write_atomic(&path, &bytes)?;
    let residuals = cset.reports().iter().map(|(a, r)| (a.clone(), r.residual)).collect();
    Ok((cset, residuals, CacheOutcome::Solved))
}
