use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use thiserror::Error;

use crate::engine::{GroundTruth, TruthError};

/// Coordinates are drawn on a dyadic grid of this spacing.
pub const POSITION_GRID_BITS: u32 = 40;

/// Exhaustive general-position checks run only below this many subsets;
/// above it degeneracy surfaces lazily through the solvers' condition check.
pub const GENERAL_POSITION_LIMIT: u64 = 200_000;

#[derive(Debug, Error)]
pub enum PositionError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("position file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("position file has {found} agents, {needed} needed")]
    TooFew { needed: usize, found: usize },
    #[error(transparent)]
    Truth(#[from] TruthError),
}

/// Parsed position file: row-major coordinates, one agent per line.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionFile {
    pub k: usize,
    pub coords: Vec<f64>,
}

impl PositionFile {
    pub fn len(&self) -> usize {
        self.coords.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// One agent per line, `k` whitespace-separated decimals. Blank lines
    /// and `#` comments are skipped.
    pub fn parse(text: &str, k: usize) -> Result<Self, PositionError> {
        let mut coords = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let before = coords.len();
            for field in line.split_whitespace() {
                let x: f64 = field.parse().map_err(|e| PositionError::Parse {
                    line: i + 1,
                    reason: format!("`{field}`: {e}"),
                })?;
                coords.push(x);
            }
            let got = coords.len() - before;
            if got != k {
                return Err(PositionError::Parse {
                    line: i + 1,
                    reason: format!("expected {k} coordinates, got {got}"),
                });
            }
        }
        Ok(PositionFile { k, coords })
    }

    pub fn read(path: &Path, k: usize) -> Result<Self, PositionError> {
        let text = std::fs::read_to_string(path).map_err(|source| PositionError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, k)
    }

    /// Ground truth from the first `n` agents, agent 0 as leader.
    pub fn ground_truth(&self, n: usize, check_general_position: bool) -> Result<GroundTruth, PositionError> {
        if self.len() < n {
            return Err(PositionError::TooFew {
                needed: n,
                found: self.len(),
            });
        }
        let gt = GroundTruth::from_flat(self.k, self.coords[..n * self.k].to_vec(), Some(0))?;
        if check_general_position {
            gt.check_general_position(GENERAL_POSITION_LIMIT)?;
        }
        Ok(gt)
    }
}

/// `n` distinct points drawn uniformly from a fine dyadic grid on `[0,1)^k`,
/// agent 0 designated leader. With `check_general_position`, small
/// populations are also checked exhaustively for affine independence.
pub fn generate_uniform<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
    check_general_position: bool,
) -> Result<GroundTruth, PositionError> {
    let scale = (1u64 << POSITION_GRID_BITS) as f64;
    let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(n);
    let mut coords = Vec::with_capacity(n * k);
    while seen.len() < n {
        let cell: Vec<u64> = (0..k).map(|_| rng.gen::<u64>() >> (64 - POSITION_GRID_BITS)).collect();
        if seen.insert(cell.clone()) {
            coords.extend(cell.iter().map(|&c| c as f64 / scale));
        }
    }
    let gt = GroundTruth::from_flat(k, coords, Some(0))?;
    if check_general_position {
        gt.check_general_position(GENERAL_POSITION_LIMIT)?;
    }
    Ok(gt)
}
