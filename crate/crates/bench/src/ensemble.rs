//! Random input codes: sample, keep k = 1 balanced codes, rank by distance.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use layercode::css::{min_distance, sample_css, CssCode};

use crate::BenchError;

#[derive(Clone, Debug)]
pub struct EnsembleCode {
    /// Position in the sample sequence.
    pub id: usize,
    pub code: CssCode,
    pub distance: usize,
}

impl EnsembleCode {
    pub fn sha256(&self) -> String {
        format!("{:x}", Sha256::digest(self.code.to_text().as_bytes()))
    }
}

#[derive(Clone, Debug)]
pub struct Ensemble {
    pub n: usize,
    pub candidates: usize,
    pub requested: usize,
    pub codes: Vec<EnsembleCode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeptCode {
    pub id: usize,
    pub distance: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub n: usize,
    pub seed: u64,
    pub candidates: usize,
    pub requested: usize,
    pub kept: Vec<KeptCode>,
}

impl Ensemble {
    /// Number of codes missing from the requested count.
    pub fn shortfall(&self) -> usize {
        self.requested.saturating_sub(self.codes.len())
    }

    pub fn manifest(&self, seed: u64) -> EnsembleManifest {
        EnsembleManifest {
            n: self.n,
            seed,
            candidates: self.candidates,
            requested: self.requested,
            kept: self
                .codes
                .iter()
                .map(|c| KeptCode {
                    id: c.id,
                    distance: c.distance,
                    sha256: c.sha256(),
                })
                .collect(),
        }
    }
}

/// Check count per type for the balanced rates at odd `n`.
pub fn checks_per_type(n: usize) -> Result<usize, BenchError> {
    if n < 3 || n % 2 == 0 {
        return Err(BenchError::InvalidSpec(format!("ensemble length {n} must be odd and at least 3")));
    }
    Ok((n - 1) / 2)
}

/// Samples `candidates` codes with (n-1)/2 checks of each type, keeps those
/// with one logical qubit and equal X and Z distance, and returns the `keep`
/// of highest distance. Ties keep sample order. A short list is returned as
/// is; see [`Ensemble::shortfall`].
pub fn build_ensemble<R: Rng + ?Sized>(
    n: usize,
    candidates: usize,
    keep: usize,
    rng: &mut R,
) -> Result<Ensemble, BenchError> {
    let m = checks_per_type(n)?;
    let sampled = (0..candidates)
        .map(|_| sample_css(n, m, m, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let scored: Vec<Option<usize>> = sampled
        .par_iter()
        .map(|code| {
            if code.k() != 1 {
                return Ok(None);
            }
            Ok(match min_distance(code, n)? {
                Some((dx, dz)) if dx == dz => Some(dx),
                _ => None,
            })
        })
        .collect::<Result<_, BenchError>>()?;
    let mut codes: Vec<EnsembleCode> = sampled
        .into_iter()
        .zip(scored)
        .enumerate()
        .filter_map(|(id, (code, d))| d.map(|distance| EnsembleCode { id, code, distance }))
        .collect();
    codes.sort_by(|a, b| b.distance.cmp(&a.distance));
    codes.truncate(keep);
    Ok(Ensemble {
        n,
        candidates,
        requested: keep,
        codes,
    })
}
