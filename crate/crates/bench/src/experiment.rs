//! Threshold and memory-time experiments over random-code ensembles.
//!
//! Every trial draws from its own generator, seeded from (master seed, n,
//! grid point, trial), so results do not depend on how trials are scheduled.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use layercode::cluster::{ClusterConfig, ClusterDecoder, Schedule, TraceStep};
use layercode::concat::{ConcatDecoder, InputChoice};
use layercode::css::PauliType;
use layercode::f2::BitVector;
use layercode::layer::{LayerCode, LogicalBasis, Variant};
use layercode::thermal::{run_trial, SyndromeDecoder, TrialConfig};

use crate::ensemble::{build_ensemble, Ensemble, EnsembleManifest};
use crate::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Threshold,
    Memory,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderKind {
    #[default]
    Cluster,
    Concat,
    ConcatModified,
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cluster" => Ok(DecoderKind::Cluster),
            "concat" => Ok(DecoderKind::Concat),
            "concat-modified" => Ok(DecoderKind::ConcatModified),
            other => Err(format!("unknown decoder {other:?}")),
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::Cluster => "cluster",
            DecoderKind::Concat => "concat",
            DecoderKind::ConcatModified => "concat-modified",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputDecoderKind {
    #[default]
    MinW,
    MinY,
}

impl FromStr for InputDecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minw" => Ok(InputDecoderKind::MinW),
            "miny" => Ok(InputDecoderKind::MinY),
            other => Err(format!("unknown input decoder {other:?}")),
        }
    }
}

impl From<InputDecoderKind> for InputChoice {
    fn from(k: InputDecoderKind) -> Self {
        match k {
            InputDecoderKind::MinW => InputChoice::MinWeight,
            InputDecoderKind::MinY => InputChoice::MinYWeight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Input code lengths, each odd.
    pub n: Vec<usize>,
    /// Bit-flip probabilities for a threshold run, inverse temperatures for
    /// a memory run.
    pub points: Vec<f64>,
    pub trials: usize,
    /// Codes sampled per length.
    pub candidates: usize,
    /// Codes kept per length.
    pub keep: usize,
    pub seed: u64,
    /// Thread count. Does not affect results.
    pub workers: usize,
    pub decoder: DecoderKind,
    /// Growth schedule of the cluster decoder.
    pub schedule: Schedule,
    pub input_decoder: InputDecoderKind,
    pub spacing: usize,
    pub variant: Variant,
    /// Memory trials still alive at this clock are censored.
    pub t_max: f64,
    /// Cluster decoder traces recorded per threshold point.
    pub traced_trials: usize,
}

impl ExperimentSpec {
    pub fn threshold(n: Vec<usize>, p: Vec<f64>, trials: usize, seed: u64) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Threshold,
            n,
            points: p,
            trials,
            candidates: 2000,
            keep: 20,
            seed,
            workers: 1,
            decoder: DecoderKind::Cluster,
            schedule: Schedule::Linear,
            input_decoder: InputDecoderKind::MinW,
            spacing: 1,
            variant: Variant::Terminated,
            t_max: 0.0,
            traced_trials: 0,
        }
    }

    pub fn memory(n: Vec<usize>, beta: Vec<f64>, trials: usize, seed: u64) -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Memory,
            points: beta,
            t_max: 1e9,
            ..Self::threshold(n, Vec::new(), trials, seed)
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::InvalidSpec(msg));
        if self.n.is_empty() || self.points.is_empty() {
            return bad("grids must be nonempty".into());
        }
        if self.trials == 0 || self.keep == 0 || self.workers == 0 || self.spacing == 0 {
            return bad("trials, keep, workers and spacing must be at least 1".into());
        }
        for &n in &self.n {
            crate::ensemble::checks_per_type(n)?;
        }
        match self.kind {
            ExperimentKind::Threshold => {
                if let Some(p) = self.points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return bad(format!("probability {p} outside [0, 1]"));
                }
            }
            ExperimentKind::Memory => {
                if let Some(b) = self.points.iter().find(|b| !b.is_finite() || **b < 0.0) {
                    return bad(format!("inverse temperature {b} must be finite and nonnegative"));
                }
                if !(self.t_max > 0.0) {
                    return bad("t_max must be positive".into());
                }
            }
        }
        Ok(())
    }

    pub fn cluster_config(&self) -> ClusterConfig {
        ClusterConfig {
            schedule: self.schedule,
            ..ClusterConfig::default()
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool, BenchError> {
        Ok(rayon::ThreadPoolBuilder::new().num_threads(self.workers).build()?)
    }
}

const ENSEMBLE_STREAM: u64 = 1;
const THRESHOLD_STREAM: u64 = 2;
const MEMORY_STREAM: u64 = 3;

/// Seed for one trial, unique per (master, stream, n, point, trial).
pub fn trial_seed(master: u64, stream: u64, n: usize, point: usize, trial: usize) -> u64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&((stream << 32) | n as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(point as u64).to_le_bytes());
    key[24..].copy_from_slice(&(trial as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key).next_u64()
}

/// Generator for the ensemble of length `n`.
pub fn ensemble_rng(master: u64, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, ENSEMBLE_STREAM, n, 0, 0))
}

/// Builds the ensemble for each length in the spec.
pub fn ensembles(spec: &ExperimentSpec) -> Result<Vec<Ensemble>, BenchError> {
    spec.validate()?;
    let pool = spec.pool()?;
    spec.n
        .iter()
        .map(|&n| {
            let mut rng = ensemble_rng(spec.seed, n);
            let e = pool.install(|| build_ensemble(n, spec.candidates, spec.keep, &mut rng))?;
            if e.codes.is_empty() {
                return Err(BenchError::NoCodes(n));
            }
            Ok(e)
        })
        .collect()
}

struct Prepared {
    layers: Vec<LayerCode>,
    bases: Vec<LogicalBasis>,
}

impl Prepared {
    fn new(spec: &ExperimentSpec, ensemble: &Ensemble) -> Result<Self, BenchError> {
        let layers = ensemble
            .codes
            .iter()
            .map(|c| LayerCode::build(&c.code, spec.spacing, spec.variant))
            .collect::<Result<Vec<_>, _>>()?;
        let bases = layers.iter().map(LayerCode::logical_basis).collect();
        Ok(Prepared { layers, bases })
    }

    fn decoders(&self, spec: &ExperimentSpec) -> Result<Vec<Box<dyn SyndromeDecoder + '_>>, BenchError> {
        self.layers
            .iter()
            .map(|l| -> Result<Box<dyn SyndromeDecoder + '_>, BenchError> {
                Ok(match spec.decoder {
                    DecoderKind::Cluster => Box::new(ClusterDecoder::for_layer(l, spec.cluster_config())),
                    DecoderKind::Concat | DecoderKind::ConcatModified => Box::new(ConcatDecoder::new(
                        l,
                        PauliType::X,
                        spec.input_decoder.into(),
                        spec.decoder == DecoderKind::ConcatModified,
                    )?),
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub n: usize,
    pub p: f64,
    pub trials: usize,
    pub failures: usize,
    pub rate: f64,
    pub stderr: f64,
}

/// One step of a traced cluster decode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub p: f64,
    pub trial: usize,
    pub code_id: usize,
    #[serde(flatten)]
    pub step: TraceStep,
}

#[derive(Clone, Debug)]
pub struct ThresholdOutput {
    pub rows: Vec<ThresholdRow>,
    pub traces: Vec<TraceRecord>,
    pub ensembles: Vec<EnsembleManifest>,
}

struct ThresholdTrial {
    failed: bool,
    trace: Vec<TraceStep>,
}

/// Logical failure rate under i.i.d. bit flips, per (n, p). Trials cycle
/// through the ensemble codes.
pub fn threshold_experiment(spec: &ExperimentSpec) -> Result<ThresholdOutput, BenchError> {
    if spec.kind != ExperimentKind::Threshold {
        return Err(BenchError::InvalidSpec("not a threshold experiment".into()));
    }
    let ensembles = ensembles(spec)?;
    let pool = spec.pool()?;
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for ensemble in &ensembles {
        let prepared = Prepared::new(spec, ensemble)?;
        let decoders = prepared.decoders(spec)?;
        let clusters: Vec<ClusterDecoder> = if spec.traced_trials > 0 && spec.decoder == DecoderKind::Cluster {
            prepared
                .layers
                .iter()
                .map(|l| ClusterDecoder::for_layer(l, spec.cluster_config()))
                .collect()
        } else {
            Vec::new()
        };
        let n = ensemble.n;
        for (pi, &p) in spec.points.iter().enumerate() {
            let run = |trial: usize| -> Result<ThresholdTrial, BenchError> {
                let c = trial % ensemble.codes.len();
                let layer = &prepared.layers[c];
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, THRESHOLD_STREAM, n, pi, trial));
                let error =
                    BitVector::from_indices(layer.num_qubits(), (0..layer.num_qubits()).filter(|_| rng.gen_bool(p)));
                let syndrome = layer.z_syndrome(&error);
                let (correction, trace) = if trial < spec.traced_trials && !clusters.is_empty() {
                    clusters[c].decode_traced(&syndrome)?
                } else {
                    let correction = decoders[c].correct(&syndrome).map_err(BenchError::Concat)?;
                    (correction, Vec::new())
                };
                let residual = &error ^ &correction;
                if !layer.z_syndrome(&residual).is_zero() {
                    return Err(BenchError::InvalidCorrection);
                }
                Ok(ThresholdTrial {
                    failed: prepared.bases[c].x_is_logical(&residual),
                    trace,
                })
            };
            let results: Vec<ThresholdTrial> =
                pool.install(|| (0..spec.trials).into_par_iter().map(run).collect::<Result<_, _>>())?;
            let failures = results.iter().filter(|r| r.failed).count();
            let m = spec.trials as f64;
            let rate = failures as f64 / m;
            rows.push(ThresholdRow {
                n,
                p,
                trials: spec.trials,
                failures,
                rate,
                stderr: (rate * (1.0 - rate) / m).sqrt(),
            });
            for (trial, r) in results.into_iter().enumerate() {
                let code_id = ensemble.codes[trial % ensemble.codes.len()].id;
                traces.extend(r.trace.into_iter().map(|step| TraceRecord {
                    n,
                    p,
                    trial,
                    code_id,
                    step,
                }));
            }
        }
    }
    Ok(ThresholdOutput {
        rows,
        traces,
        ensembles: ensembles.iter().map(|e| e.manifest(spec.seed)).collect(),
    })
}

/// Bit-flip rate where the failure curve of `large` first rises above that
/// of `small`, by linear interpolation between shared grid points.
pub fn crossing(rows: &[ThresholdRow], small: usize, large: usize) -> Option<f64> {
    let mut diffs: Vec<(f64, f64)> = rows
        .iter()
        .filter(|a| a.n == small)
        .filter_map(|a| {
            rows.iter()
                .find(|b| b.n == large && b.p == a.p)
                .map(|b| (a.p, b.rate - a.rate))
        })
        .collect();
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    diffs.windows(2).find_map(|w| {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        (d0 < 0.0 && d1 >= 0.0).then(|| p0 + (p1 - p0) * -d0 / (d1 - d0))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub code_id: usize,
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    /// Failure time, or `t_max` when censored.
    pub t_fail: f64,
    pub censored: bool,
    pub flips: u64,
    pub decodes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub beta: f64,
    /// Mean with censored trials counted at `t_max`, a lower bound.
    pub mean_tfail: f64,
    pub sem: f64,
    pub trials: usize,
    pub censored: usize,
    /// Mean over uncensored trials only; empty when fewer than one.
    pub mean_tfail_uncensored: Option<f64>,
    pub sem_uncensored: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct MemoryOutput {
    pub trials: Vec<TrialRow>,
    pub summary: Vec<SummaryRow>,
    pub ensembles: Vec<EnsembleManifest>,
}

/// Sample mean and standard error of the mean (sample std / sqrt m).
pub fn mean_sem(xs: &[f64]) -> Option<(f64, f64)> {
    let m = xs.len();
    if m == 0 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return Some((mean, f64::NAN));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    Some((mean, (var / m as f64).sqrt()))
}

/// Aggregates a trial log into one row per (n, beta), in first-seen order.
pub fn summarize(trials: &[TrialRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for t in trials {
        let key = (t.n, t.beta.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(n, bits)| {
            let group: Vec<&TrialRow> = trials.iter().filter(|t| t.n == n && t.beta.to_bits() == bits).collect();
            let all: Vec<f64> = group.iter().map(|t| t.t_fail).collect();
            let done: Vec<f64> = group.iter().filter(|t| !t.censored).map(|t| t.t_fail).collect();
            let (mean_tfail, sem) = mean_sem(&all).expect("nonempty group");
            let uncensored = mean_sem(&done);
            SummaryRow {
                n,
                beta: f64::from_bits(bits),
                mean_tfail,
                sem,
                trials: all.len(),
                censored: all.len() - done.len(),
                mean_tfail_uncensored: uncensored.map(|u| u.0),
                sem_uncensored: uncensored.map(|u| u.1).filter(|s| s.is_finite()),
            }
        })
        .collect()
}

/// Memory time under Glauber dynamics of X errors, per (n, beta).
pub fn memory_experiment(spec: &ExperimentSpec) -> Result<MemoryOutput, BenchError> {
    if spec.kind != ExperimentKind::Memory {
        return Err(BenchError::InvalidSpec("not a memory experiment".into()));
    }
    let ensembles = ensembles(spec)?;
    let pool = spec.pool()?;
    let mut trials = Vec::new();
    for ensemble in &ensembles {
        let prepared = Prepared::new(spec, ensemble)?;
        let decoders = prepared.decoders(spec)?;
        let n = ensemble.n;
        for (bi, &beta) in spec.points.iter().enumerate() {
            let run = |trial: usize| -> Result<TrialRow, BenchError> {
                let c = trial % ensemble.codes.len();
                let seed = trial_seed(spec.seed, MEMORY_STREAM, n, bi, trial);
                let config = TrialConfig::new(beta, seed, 0, spec.t_max);
                let r = run_trial(&prepared.layers[c], &prepared.bases[c], &config, decoders[c].as_ref())?;
                Ok(TrialRow {
                    code_id: ensemble.codes[c].id,
                    n,
                    beta,
                    seed,
                    t_fail: r.t_end,
                    censored: r.t_fail.is_none(),
                    flips: r.flips,
                    decodes: r.decodes,
                })
            };
            let rows: Vec<TrialRow> =
                pool.install(|| (0..spec.trials).into_par_iter().map(run).collect::<Result<_, _>>())?;
            trials.extend(rows);
        }
    }
    Ok(MemoryOutput {
        summary: summarize(&trials),
        trials,
        ensembles: ensembles.iter().map(|e| e.manifest(spec.seed)).collect(),
    })
}
