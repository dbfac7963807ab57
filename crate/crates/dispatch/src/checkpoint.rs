//! On-disk policy bundles.
//!
//! A checkpoint directory holds `manifest.json` and one binary file per
//! actor and critic. Each binary file starts with the magic `MGPS`, a format
//! version and the block layout, followed by the values as little-endian f64.

use std::fs;
use std::path::{Path, PathBuf};

use mg_dispatch_core::drl::{BundleKind, CriticSet, Normalizer, PolicyBundle};
use mg_dispatch_core::nn::{Block, NetSpec, ParamSet};
use mg_dispatch_core::MicrogridConfig;
use serde::{Deserialize, Serialize};

use crate::config::Algorithm;
use crate::error::{io, Error, Result};

const MAGIC: &[u8; 4] = b"MGPS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub kind: BundleKind,
    pub seed: u64,
    pub config_hash: String,
    pub actor_spec: NetSpec,
    pub critic_spec: Option<NetSpec>,
    pub norm: Normalizer,
    pub grid: MicrogridConfig,
    pub reward_scale: Option<f64>,
    pub actors: Vec<String>,
    pub critics: Vec<String>,
}

/// A bundle read back from disk.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub manifest: Manifest,
    pub bundle: PolicyBundle,
    pub critics: Option<CriticSet>,
}

fn bad(path: &Path, detail: impl Into<String>) -> Error {
    Error::Checkpoint { path: path.to_path_buf(), detail: detail.into() }
}

pub fn encode_params(p: &ParamSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 16 * p.layout().len() + 8 * p.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(p.layout().len() as u32).to_le_bytes());
    for b in p.layout() {
        out.extend_from_slice(&(b.rows as u64).to_le_bytes());
        out.extend_from_slice(&(b.cols as u64).to_le_bytes());
    }
    out.extend_from_slice(&(p.len() as u64).to_le_bytes());
    for v in p.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    path: &'a Path,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.bytes.len() < N {
            return Err(bad(self.path, "file truncated"));
        }
        let (head, rest) = self.bytes.split_at(N);
        self.bytes = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.take()?)).map_err(|_| bad(self.path, "size overflow"))
    }
}

pub fn decode_params(bytes: &[u8], path: &Path) -> Result<ParamSet> {
    let mut c = Cursor { bytes, path };
    if &c.take::<4>()? != MAGIC {
        return Err(bad(path, "not a parameter file"));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(path, format!("unsupported format version {version}")));
    }
    let blocks = c.u32()? as usize;
    let mut layout = Vec::with_capacity(blocks.min(1024));
    for _ in 0..blocks {
        layout.push(Block { rows: c.u64()?, cols: c.u64()? });
    }
    let n = c.u64()?;
    if c.bytes.len() != 8 * n {
        return Err(bad(path, format!("expected {n} values, found {} bytes", c.bytes.len())));
    }
    let values = c.bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8"))).collect();
    ParamSet::from_values(layout, values).map_err(|e| bad(path, e.to_string()))
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(io(path))
}

pub fn save(
    dir: &Path,
    algorithm: Algorithm,
    seed: u64,
    config_hash: &str,
    bundle: &PolicyBundle,
    critics: Option<&CriticSet>,
) -> Result<Manifest> {
    bundle.validate()?;
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut actors = Vec::new();
    for (i, a) in bundle.actors.iter().enumerate() {
        let name = format!("actor_{i:02}.bin");
        write_file(dir.join(&name), &encode_params(a))?;
        actors.push(name);
    }
    let mut names = Vec::new();
    if let Some(cs) = critics {
        for (i, q) in cs.critics.iter().enumerate() {
            let name = format!("critic_{i:02}.bin");
            write_file(dir.join(&name), &encode_params(q))?;
            names.push(name);
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        algorithm,
        kind: bundle.kind,
        seed,
        config_hash: config_hash.to_string(),
        actor_spec: bundle.spec.clone(),
        critic_spec: critics.map(|c| c.spec.clone()),
        norm: bundle.norm,
        grid: bundle.grid,
        reward_scale: critics.map(|c| c.reward_scale),
        actors,
        critics: names,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    write_file(dir.join("manifest.json"), text.as_bytes())?;
    Ok(manifest)
}

fn read_params(dir: &Path, name: &str, spec: &NetSpec) -> Result<ParamSet> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(io(&path))?;
    let p = decode_params(&bytes, &path)?;
    if p.layout() != spec.layout() {
        return Err(bad(&path, "parameter layout does not match the manifest's network"));
    }
    Ok(p)
}

pub fn load(dir: &Path) -> Result<Checkpoint> {
    let mpath = dir.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(io(&mpath))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| bad(&mpath, e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(bad(&mpath, format!("unsupported format version {}", manifest.format_version)));
    }
    let actors =
        manifest.actors.iter().map(|n| read_params(dir, n, &manifest.actor_spec)).collect::<Result<Vec<_>>>()?;
    let bundle = PolicyBundle {
        kind: manifest.kind,
        spec: manifest.actor_spec.clone(),
        actors,
        norm: manifest.norm,
        grid: manifest.grid,
    };
    bundle.validate().map_err(|e| bad(&mpath, e.to_string()))?;
    let critics = match (&manifest.critic_spec, manifest.reward_scale) {
        (Some(spec), Some(reward_scale)) if !manifest.critics.is_empty() => Some(CriticSet {
            spec: spec.clone(),
            critics: manifest.critics.iter().map(|n| read_params(dir, n, spec)).collect::<Result<Vec<_>>>()?,
            reward_scale,
        }),
        _ => None,
    };
    Ok(Checkpoint { manifest, bundle, critics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mg_dispatch_core::nn::{Activation, MlpSpec};
    use mg_dispatch_core::rng::stream;

    #[test]
    fn params_round_trip_bit_exact() {
        let spec = NetSpec::Mlp(MlpSpec::new(3, &[5, 4], 1, Activation::Tanh));
        let p = spec.init_params(&mut stream(1, 1));
        let bytes = encode_params(&p);
        assert_eq!(&bytes[..4], MAGIC);
        let q = decode_params(&bytes, Path::new("x")).unwrap();
        assert_eq!(p.layout(), q.layout());
        assert!(p.values().iter().zip(q.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let spec = NetSpec::Mlp(MlpSpec::new(3, &[2], 1, Activation::Tanh));
        let bytes = encode_params(&spec.init_params(&mut stream(1, 1)));
        assert!(decode_params(&bytes[..bytes.len() - 1], Path::new("x")).is_err());
        let mut wrong = bytes.clone();
        wrong[4] = 9;
        assert!(decode_params(&wrong, Path::new("x")).is_err());
        assert!(decode_params(b"NOPE", Path::new("x")).is_err());
    }
}
