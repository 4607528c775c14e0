//! Request streams: synthetic Zipf-distributed keys and trace-file
//! ingestion. Streams materialize to a key vector up front so paired runs
//! across policies consume byte-identical inputs, verified by checksum.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Zipf;

use crate::error::{Error, Result};

/// How to produce the request stream.
#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadSpec {
    /// UTF-8 text file, one opaque key per line; lines beginning `#` are
    /// ignored, as are empty lines.
    Trace(PathBuf),
    /// Independent Zipf-ranked draws over `universe` items.
    Zipf {
        alpha: f64,
        universe: u64,
        length: u64,
    },
}

/// A materialized request stream. Keys are dense ids; trace workloads keep
/// the original strings for display.
#[derive(Debug, Clone)]
pub struct Workload {
    pub keys: Vec<u64>,
    names: Option<Vec<String>>,
}

impl Workload {
    pub fn from_spec(spec: &WorkloadSpec, seed: u64) -> Result<Self> {
        match spec {
            WorkloadSpec::Trace(path) => load_trace(path),
            WorkloadSpec::Zipf {
                alpha,
                universe,
                length,
            } => Ok(Self {
                keys: zipf_generate(*alpha, *universe, *length, seed)?,
                names: None,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Human-readable form of a key for event logs.
    pub fn display_key(&self, key: u64) -> String {
        match &self.names {
            Some(names) => names
                .get(key as usize)
                .cloned()
                .unwrap_or_else(|| key.to_string()),
            None => key.to_string(),
        }
    }

    /// Order-sensitive FNV-1a digest of the stream, used to assert that
    /// paired runs consumed identical requests.
    pub fn checksum(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for key in &self.keys {
            for b in key.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// I.i.d. Zipf-ranked keys in `[1, universe]`, deterministic per seed.
pub fn zipf_generate(alpha: f64, universe: u64, length: u64, seed: u64) -> Result<Vec<u64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "zipf alpha must be > 0, got {alpha}"
        )));
    }
    if universe == 0 || length == 0 {
        return Err(Error::InvalidArgument(
            "zipf universe and length must be >= 1".into(),
        ));
    }
    let dist = Zipf::new(universe as f64, alpha)
        .map_err(|e| Error::InvalidArgument(format!("zipf parameters rejected: {e}")))?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Ok((0..length)
        .map(|_| (dist.sample(&mut rng) as u64).clamp(1, universe))
        .collect())
}

/// Reads a trace file, interning each distinct key string to a dense id.
pub fn load_trace(path: &Path) -> Result<Workload> {
    let file = File::open(path).map_err(|e| Error::Trace {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let reader = BufReader::new(file);
    let mut ids = std::collections::HashMap::new();
    let mut names = Vec::new();
    let mut keys = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Trace {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let next_id = names.len() as u64;
        let id = *ids.entry(trimmed.to_string()).or_insert_with(|| {
            names.push(trimmed.to_string());
            next_id
        });
        keys.push(id);
    }
    if keys.is_empty() {
        return Err(Error::Trace {
            path: path.to_path_buf(),
            line: 0,
            message: "trace contains no keys".into(),
        });
    }
    Ok(Workload {
        keys,
        names: Some(names),
    })
}
