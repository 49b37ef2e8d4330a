//! Command-line front end: dataset generation, training, prediction,
//! evaluation, model files and heatmap rendering.

pub mod commands;
pub mod heatmap;
pub mod model_file;
