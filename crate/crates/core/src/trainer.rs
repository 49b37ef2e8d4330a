//! One-vs-rest training: per-class bandwidth selection, a shared final
//! bandwidth, and normalization of the smoothed densities into probabilities.

use rayon::prelude::*;

use crate::dataset::{Dataset, FeatureScaler};
use crate::error::{Error, Result};
use crate::grid::{rasterize_signed, DensityField, GridSpec};
use crate::spectral::SpectralSmoother;

/// Shifted-density sums below this fall back to the uniform distribution.
pub const UNIFORM_FALLBACK_THRESHOLD: f64 = 1e-12;

/// Smallest iteration cap for which the stopping rule can be evaluated: the
/// second difference centered at 3 needs correlations at 2, 3 and 4.
pub const MIN_ITERATION_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub n_mesh: usize,
    pub epsilon: f64,
    pub n_max: usize,
    /// Held-out share used by CLI flows that split before training.
    pub test_fraction: f64,
}

impl TrainConfig {
    /// Defaults for a given mesh: ε = 0.01 and `n_max = max(n_mesh/8, 4)`.
    pub fn for_mesh(n_mesh: usize) -> Self {
        Self {
            n_mesh,
            epsilon: 0.01,
            n_max: (n_mesh / 8).max(MIN_ITERATION_CAP),
            test_fraction: 0.25,
        }
    }

    pub fn validate(&self) -> Result<GridSpec> {
        let grid = GridSpec::new(self.n_mesh)?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.n_max < MIN_ITERATION_CAP {
            return Err(Error::InvalidArgument(format!(
                "n_max must be at least {MIN_ITERATION_CAP}, got {}",
                self.n_max
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(grid)
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_mesh(512)
    }
}

/// Record of one class's bandwidth search.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub label: String,
    /// `(n, corr(ρ[n], ρ[n−1]))` for `n = 2, 3, ...`
    pub correlations: Vec<(usize, f64)>,
    /// `(n, c(n+1) − 2c(n) + c(n−1))` for `n = 3, 4, ...`
    pub second_derivatives: Vec<(usize, f64)>,
    pub n_k: usize,
    /// False when the cap was hit without satisfying `|d2| < ε`.
    pub converged: bool,
}

impl ConvergenceTrace {
    pub fn second_derivative_at(&self, n: usize) -> Option<f64> {
        self.second_derivatives
            .iter()
            .find(|(m, _)| *m == n)
            .map(|(_, d)| *d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSummary {
    pub n_k: Vec<usize>,
    pub traces: Vec<ConvergenceTrace>,
    pub class_counts: Vec<usize>,
    pub n_max: usize,
}

/// Trained per-class probability fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    labels: Vec<String>,
    grid: GridSpec,
    scaler: FeatureScaler,
    n_final: usize,
    epsilon: f64,
    fields: Vec<DensityField>,
    training: Option<TrainingSummary>,
}

/// Tolerance on `Σ_k P_k = 1` at every pixel.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;
/// Tolerance below zero for individual probabilities.
pub const PROBABILITY_FLOOR_TOLERANCE: f64 = 1e-12;

impl ClassifierModel {
    /// Assembles a model, checking shapes and the probability axioms.
    pub fn new(
        labels: Vec<String>,
        grid: GridSpec,
        scaler: FeatureScaler,
        n_final: usize,
        epsilon: f64,
        fields: Vec<DensityField>,
    ) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::TooFewClasses(labels.len()));
        }
        if fields.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} probability fields for {} labels",
                fields.len(),
                labels.len()
            )));
        }
        if let Some(f) = fields.iter().find(|f| f.grid() != &grid) {
            return Err(Error::GridMismatch(f.grid().len(), grid.len()));
        }
        let model = Self {
            labels,
            grid,
            scaler,
            n_final,
            epsilon,
            fields,
            training: None,
        };
        let (sum_err, min_p) = model.probability_extremes();
        if sum_err > PROBABILITY_SUM_TOLERANCE || min_p < -PROBABILITY_FLOOR_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "fields are not probabilities (max |Σ−1| = {sum_err:e}, min P = {min_p:e})"
            )));
        }
        Ok(model)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn scaler(&self) -> &FeatureScaler {
        &self.scaler
    }

    pub fn n_final(&self) -> usize {
        self.n_final
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn probability_fields(&self) -> &[DensityField] {
        &self.fields
    }

    /// Present on freshly trained models; not persisted in model files.
    pub fn training(&self) -> Option<&TrainingSummary> {
        self.training.as_ref()
    }

    /// `(max over pixels of |Σ_k P_k − 1|, min over pixels and classes of P_k)`.
    pub fn probability_extremes(&self) -> (f64, f64) {
        let mut sum_err: f64 = 0.0;
        let mut min_p = f64::INFINITY;
        for px in 0..self.grid.len() {
            let mut s = 0.0;
            for f in &self.fields {
                let v = f.values()[px];
                s += v;
                min_p = min_p.min(v);
            }
            sum_err = sum_err.max((s - 1.0).abs());
        }
        (sum_err, min_p)
    }
}

/// Pearson correlation over all pixels.
pub fn pearson_correlation(a: &DensityField, b: &DensityField) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(a.grid().len(), b.grid().len()));
    }
    let (ma, mb) = (a.mean(), b.mean());
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Bandwidth search over an arbitrary smoother `n ↦ ρ[n]`.
///
/// Stops at the first stencil center `n ≥ 3` with
/// `|c(n+1) − 2c(n) + c(n−1)| < ε`, where `c(n) = corr(ρ[n], ρ[n−1])`.
/// Without such an `n` up to `n_max` the result is `n_max`, unconverged.
pub fn search_iterations<F>(mut smoother: F, epsilon: f64, n_max: usize) -> Result<ConvergenceTrace>
where
    F: FnMut(usize) -> Result<DensityField>,
{
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if n_max < MIN_ITERATION_CAP {
        return Err(Error::InvalidArgument(format!(
            "n_max must be at least {MIN_ITERATION_CAP}, got {n_max}"
        )));
    }
    let mut trace = ConvergenceTrace {
        label: String::new(),
        correlations: Vec::new(),
        second_derivatives: Vec::new(),
        n_k: n_max,
        converged: false,
    };
    let mut previous = smoother(1)?;
    for m in 2..=n_max + 1 {
        let current = smoother(m)?;
        let c = pearson_correlation(&current, &previous)?;
        trace.correlations.push((m, c));
        previous = current;
        if m >= 4 {
            let k = trace.correlations.len();
            let (c_lo, c_mid, c_hi) = (
                trace.correlations[k - 3].1,
                trace.correlations[k - 2].1,
                trace.correlations[k - 1].1,
            );
            let n = m - 1;
            let d2 = c_hi - 2.0 * c_mid + c_lo;
            trace.second_derivatives.push((n, d2));
            if d2.abs() < epsilon {
                trace.n_k = n;
                trace.converged = true;
                return Ok(trace);
            }
        }
    }
    Ok(trace)
}

/// Bandwidth search on a signed class raster.
pub fn find_optimal_iteration(
    raster: &DensityField,
    epsilon: f64,
    n_max: usize,
) -> Result<(usize, ConvergenceTrace)> {
    let smoother = SpectralSmoother::new(raster);
    let trace = search_iterations(|n| smoother.smooth(n), epsilon, n_max)?;
    Ok((trace.n_k, trace))
}

/// Shifts all fields by their common minimum and normalizes per pixel.
pub fn build_probabilities(smoothed: &[DensityField]) -> Result<Vec<DensityField>> {
    let k = smoothed.len();
    if k < 2 {
        return Err(Error::TooFewClasses(k));
    }
    let grid = *smoothed[0].grid();
    if let Some(f) = smoothed.iter().find(|f| f.grid() != &grid) {
        return Err(Error::GridMismatch(f.grid().len(), grid.len()));
    }
    let rho_min = smoothed
        .iter()
        .map(DensityField::min)
        .fold(f64::INFINITY, f64::min);
    let mut out: Vec<DensityField> = (0..k).map(|_| DensityField::zeros(grid)).collect();
    let uniform = 1.0 / k as f64;
    let mut shifted = vec![0.0; k];
    for px in 0..grid.len() {
        let mut total = 0.0;
        for (s, f) in shifted.iter_mut().zip(smoothed) {
            *s = f.values()[px] - rho_min;
            total += *s;
        }
        for (o, s) in out.iter_mut().zip(&shifted) {
            o.values_mut()[px] = if total < UNIFORM_FALLBACK_THRESHOLD {
                uniform
            } else {
                s / total
            };
        }
    }
    Ok(out)
}

/// Trains a model on raw (unscaled) data.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<ClassifierModel> {
    let grid = config.validate()?;
    let counts = data.class_counts();
    if let Some((k, &c)) = counts.iter().enumerate().find(|(_, c)| **c == 0) {
        return Err(Error::ClassTooSmall {
            label: data.labels()[k].clone(),
            count: c,
            needed: 1,
        });
    }
    let scaler = FeatureScaler::fit(data)?;
    let normalized = scaler.apply_dataset(data);

    let searched: Vec<(SpectralSmoother, ConvergenceTrace)> = (0..data.n_classes())
        .into_par_iter()
        .map(|k| {
            let raster = rasterize_signed(&normalized, k, &grid)?;
            let smoother = SpectralSmoother::new(&raster);
            let mut trace =
                search_iterations(|n| smoother.smooth(n), config.epsilon, config.n_max)?;
            trace.label = data.labels()[k].clone();
            Ok((smoother, trace))
        })
        .collect::<Result<_>>()?;

    let n_k: Vec<usize> = searched.iter().map(|(_, t)| t.n_k).collect();
    let n_final = *n_k.iter().max().expect("at least two classes");
    let smoothed: Vec<DensityField> = searched
        .par_iter()
        .map(|(s, _)| s.smooth(n_final))
        .collect::<Result<_>>()?;
    let fields = build_probabilities(&smoothed)?;

    let mut model = ClassifierModel::new(
        data.labels().to_vec(),
        grid,
        scaler,
        n_final,
        config.epsilon,
        fields,
    )?;
    model.training = Some(TrainingSummary {
        n_k,
        traces: searched.into_iter().map(|(_, t)| t).collect(),
        class_counts: counts,
        n_max: config.n_max,
    });
    Ok(model)
}
