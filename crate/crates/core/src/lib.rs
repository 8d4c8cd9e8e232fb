//! Layer codes built from CSS input codes, their decoders, and a thermal
//! memory simulator.

pub mod cluster;
pub mod concat;
pub mod css;
pub mod f2;
pub mod fit;
pub mod layer;
pub mod matching;
pub mod thermal;
pub mod uf;

pub type SpinSystem64 = thermal::SpinSystem<f64>;
pub type TrialConfig64 = thermal::TrialConfig<f64>;
pub type TrialResult64 = thermal::TrialResult<f64>;
pub type LinearFit64 = fit::LinearFit<f64>;
