//! Pixel-lookup prediction and recall reporting.

use std::fmt;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::PixelIndex;
use crate::trainer::ClassifierModel;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub class_index: usize,
    pub probabilities: Vec<f64>,
    pub pixel: PixelIndex,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Reads all class probabilities at one pixel.
pub fn predict_pixel(model: &ClassifierModel, pixel: PixelIndex) -> Prediction {
    let probabilities: Vec<f64> = model
        .probability_fields()
        .iter()
        .map(|f| f.get(pixel))
        .collect();
    let class_index = argmax(&probabilities);
    Prediction {
        label: model.labels()[class_index].clone(),
        class_index,
        probabilities,
        pixel,
    }
}

/// Classifies a raw point. Normalized coordinates outside the unit square
/// resolve to the nearest boundary pixel.
pub fn predict(model: &ClassifierModel, x1: f64, x2: f64) -> Result<Prediction> {
    if !x1.is_finite() || !x2.is_finite() {
        return Err(Error::NonFinite);
    }
    let (u1, u2) = model.scaler().apply(x1, x2);
    let pixel = model
        .grid()
        .map_to_pixel(u1.clamp(0.0, 1.0), u2.clamp(0.0, 1.0))?;
    Ok(predict_pixel(model, pixel))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub labels: Vec<String>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    /// `None` for classes with no points.
    pub per_class_recall: Vec<Option<f64>>,
    pub macro_recall: f64,
    pub accuracy: f64,
    pub n_points: usize,
}

impl EvalReport {
    pub fn from_confusion(labels: Vec<String>, confusion: Vec<Vec<usize>>) -> Result<Self> {
        let k = labels.len();
        if confusion.len() != k || confusion.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument(format!(
                "confusion matrix must be {k}×{k}"
            )));
        }
        let n_points: usize = confusion.iter().flatten().sum();
        if n_points == 0 {
            return Err(Error::EmptyDataset);
        }
        let per_class_recall: Vec<Option<f64>> = confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let total: usize = row.iter().sum();
                (total > 0).then(|| row[i] as f64 / total as f64)
            })
            .collect();
        let present: Vec<f64> = per_class_recall.iter().flatten().copied().collect();
        let macro_recall = present.iter().sum::<f64>() / present.len() as f64;
        let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
        Ok(Self {
            labels,
            confusion,
            per_class_recall,
            macro_recall,
            accuracy: correct as f64 / n_points as f64,
            n_points,
        })
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .labels
            .iter()
            .map(|l| l.len())
            .chain(self.confusion.iter().flatten().map(|c| c.to_string().len()))
            .max()
            .unwrap_or(1)
            .max(4);
        writeln!(f, "confusion (rows = true, columns = predicted):")?;
        write!(f, "{:>width$}", "")?;
        for l in &self.labels {
            write!(f, " {l:>width$}")?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            write!(f, "{l:>width$}")?;
            for c in row {
                write!(f, " {c:>width$}")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "per-class recall:")?;
        for (l, r) in self.labels.iter().zip(&self.per_class_recall) {
            match r {
                Some(r) => writeln!(f, "  {l}: {r:.4}")?,
                None => writeln!(f, "  {l}: n/a")?,
            }
        }
        writeln!(f, "macro recall: {:.4}", self.macro_recall)?;
        writeln!(f, "accuracy: {:.4}", self.accuracy)?;
        write!(f, "points: {}", self.n_points)
    }
}

/// Predicts every point and tabulates the results against the true labels.
pub fn evaluate(model: &ClassifierModel, labeled: &Dataset) -> Result<EvalReport> {
    if labeled.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let truth: Vec<usize> = labeled
        .points()
        .iter()
        .map(|p| {
            model
                .labels()
                .iter()
                .position(|l| l == &p.label)
                .ok_or_else(|| Error::UnknownLabel(p.label.clone()))
        })
        .collect::<Result<_>>()?;
    let predicted: Vec<usize> = labeled
        .points()
        .par_iter()
        .map(|p| predict(model, p.x1, p.x2).map(|pr| pr.class_index))
        .collect::<Result<_>>()?;
    let k = model.n_classes();
    let mut confusion = vec![vec![0usize; k]; k];
    for (t, p) in truth.into_iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    EvalReport::from_confusion(model.labels().to_vec(), confusion)
}
