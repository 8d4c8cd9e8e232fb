//! Ensemble construction, threshold and memory-time experiments, and the
//! fits applied to their results.

pub mod ensemble;
pub mod experiment;
pub mod output;
pub mod report;

use thiserror::Error;

use layercode::cluster::ClusterError;
use layercode::css::CssError;
use layercode::fit::FitError;
use layercode::layer::LayerError;
use layercode::thermal::ThermalError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("no code of length {0} survived the ensemble filter")]
    NoCodes(usize),
    #[error("decoder output does not reproduce the syndrome")]
    InvalidCorrection,
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error(transparent)]
    Css(#[from] CssError),
    #[error(transparent)]
    Layer(#[from] LayerError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error("concatenated decoder: {0}")]
    Concat(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Pool(#[from] rayon::ThreadPoolBuildError),
}
