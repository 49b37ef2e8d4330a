//! Multiclass classification through Fourier-smoothed class densities.
//!
//! Labeled 2-feature points are normalized to the unit square and rasterized
//! into one signed grid per class (+1 for the class, -1 for every other class).
//! Each grid is low-pass filtered in the frequency domain with a Gaussian whose
//! bandwidth grows with an iteration index `n`; the index is picked per class
//! by watching the correlation between successive smoothed grids settle. The
//! final grids are shifted and normalized into per-class probability fields
//! and prediction is a pixel lookup followed by an argmax.
//!
//! Module map:
//!
//! * [`dataset`]: CSV ingest, spiral generator, min-max scaling, stratified split
//! * [`grid`]: mesh geometry and signed rasterization
//! * [`spectral`]: 2D FFT, Gaussian spectral filter, smoothing and its direct-sum oracle
//! * [`trainer`]: bandwidth selection, probability normalization, model assembly
//! * [`inference`]: prediction and recall/confusion reports

pub mod dataset;
pub mod error;
pub mod fft;
pub mod grid;
pub mod inference;
pub mod spectral;
pub mod trainer;

pub use dataset::{Dataset, FeatureScaler, LabeledPoint, SpiralConfig};
pub use error::{Error, Result};
pub use grid::{DensityField, GridSpec, PixelIndex};
pub use inference::{EvalReport, Prediction};
pub use spectral::{FilterProfile, SpectrumField};
pub use trainer::{ClassifierModel, ConvergenceTrace, TrainConfig, TrainingSummary};
