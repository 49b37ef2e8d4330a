//! Labeled point sets: CSV ingest, spiral benchmark generator, min-max
//! scaling and stratified train/test splitting.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A sample with two raw features and a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x1: f64,
    pub x2: f64,
    pub label: String,
}

impl LabeledPoint {
    pub fn new(x1: f64, x2: f64, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if !x1.is_finite() || !x2.is_finite() {
            return Err(Error::NonFinite);
        }
        if label.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(Self { x1, x2, label })
    }
}

/// Ordered points plus the class vocabulary (at least two labels).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<LabeledPoint>,
    labels: Vec<String>,
}

impl Dataset {
    /// Builds a dataset whose vocabulary is the labels in first-appearance order.
    pub fn from_points(points: Vec<LabeledPoint>) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        for p in &points {
            if !labels.iter().any(|l| l == &p.label) {
                labels.push(p.label.clone());
            }
        }
        Self::with_labels(points, labels)
    }

    /// Builds a dataset with an explicit vocabulary. Labels in the vocabulary
    /// need not all be present among the points.
    pub fn with_labels(points: Vec<LabeledPoint>, labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::TooFewClasses(labels.len()));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.is_empty() {
                return Err(Error::EmptyLabel);
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidArgument(format!("duplicate label {l:?}")));
            }
        }
        for p in &points {
            if !p.x1.is_finite() || !p.x2.is_finite() {
                return Err(Error::NonFinite);
            }
            if !labels.contains(&p.label) {
                return Err(Error::UnknownLabel(p.label.clone()));
            }
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Class index of every point, in point order.
    pub fn class_indices(&self) -> Vec<usize> {
        let lookup: HashMap<&str, usize> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        self.points.iter().map(|p| lookup[p.label.as_str()]).collect()
    }

    /// Number of points per class, in vocabulary order.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.labels.len()];
        for k in self.class_indices() {
            counts[k] += 1;
        }
        counts
    }
}

/// Per-feature affine map of the training range onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureScaler {
    pub min1: f64,
    pub max1: f64,
    pub min2: f64,
    pub max2: f64,
}

impl FeatureScaler {
    pub fn new(min1: f64, max1: f64, min2: f64, max2: f64) -> Result<Self> {
        if ![min1, max1, min2, max2].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if max1 <= min1 {
            return Err(Error::DegenerateFeature { feature: 1 });
        }
        if max2 <= min2 {
            return Err(Error::DegenerateFeature { feature: 2 });
        }
        Ok(Self {
            min1,
            max1,
            min2,
            max2,
        })
    }

    /// Fits the min-max range of each feature.
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let (mut min1, mut max1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut min2, mut max2) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in data.points() {
            min1 = min1.min(p.x1);
            max1 = max1.max(p.x1);
            min2 = min2.min(p.x2);
            max2 = max2.max(p.x2);
        }
        Self::new(min1, max1, min2, max2)
    }

    /// Maps a raw point to normalized coordinates. Not clamped.
    pub fn apply(&self, x1: f64, x2: f64) -> (f64, f64) {
        (
            (x1 - self.min1) / (self.max1 - self.min1),
            (x2 - self.min2) / (self.max2 - self.min2),
        )
    }

    /// Maps normalized coordinates back to raw feature units.
    pub fn invert(&self, u1: f64, u2: f64) -> (f64, f64) {
        (
            self.min1 + u1 * (self.max1 - self.min1),
            self.min2 + u2 * (self.max2 - self.min2),
        )
    }

    pub fn apply_points(&self, points: &[LabeledPoint]) -> Vec<LabeledPoint> {
        points
            .iter()
            .map(|p| {
                let (x1, x2) = self.apply(p.x1, p.x2);
                LabeledPoint {
                    x1,
                    x2,
                    label: p.label.clone(),
                }
            })
            .collect()
    }

    /// Normalizes every point; the vocabulary is kept as is.
    pub fn apply_dataset(&self, data: &Dataset) -> Dataset {
        Dataset {
            points: self.apply_points(data.points()),
            labels: data.labels.clone(),
        }
    }
}

pub fn fit_scaler(data: &Dataset) -> Result<FeatureScaler> {
    FeatureScaler::fit(data)
}

pub fn apply_scaler(points: &[LabeledPoint], scaler: &FeatureScaler) -> Vec<LabeledPoint> {
    scaler.apply_points(points)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_reader<R: Read>(reader: R, has_header: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn record_row(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

fn parse_feature(field: &str, row: u64, which: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::MalformedRow {
        row,
        message: format!("feature {which} is not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::MalformedRow {
            row,
            message: format!("feature {which} is not finite: {field:?}"),
        });
    }
    Ok(v)
}

fn csv_error(e: csv::Error, row: u64) -> Error {
    let row = e.position().map(|p| p.line()).unwrap_or(row);
    Error::MalformedRow {
        row,
        message: e.to_string(),
    }
}

/// Reads `x1,x2,label` rows. Row numbers in errors are 1-based file lines.
pub fn read_csv<R: Read>(reader: R, has_header: bool) -> Result<Dataset> {
    Dataset::from_points(read_labeled_points(reader, has_header)?)
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Dataset> {
    read_csv(open(path.as_ref())?, has_header)
}

/// Like [`read_csv`] without the two-class requirement.
pub fn read_labeled_points<R: Read>(reader: R, has_header: bool) -> Result<Vec<LabeledPoint>> {
    let mut rdr = csv_reader(reader, has_header);
    let mut points = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let fallback = n as u64 + 1 + u64::from(has_header);
        let rec = rec.map_err(|e| csv_error(e, fallback))?;
        let row = record_row(&rec, fallback);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected 3 fields (x1,x2,label), found {}", rec.len()),
            });
        }
        let x1 = parse_feature(&rec[0], row, 1)?;
        let x2 = parse_feature(&rec[1], row, 2)?;
        if rec[2].is_empty() {
            return Err(Error::MalformedRow {
                row,
                message: "empty label".into(),
            });
        }
        points.push(LabeledPoint {
            x1,
            x2,
            label: rec[2].to_string(),
        });
    }
    Ok(points)
}

pub fn load_labeled_points(path: impl AsRef<Path>, has_header: bool) -> Result<Vec<LabeledPoint>> {
    read_labeled_points(open(path.as_ref())?, has_header)
}

/// Reads feature pairs from rows with 2 columns (`x1,x2`) or 3 columns
/// (`x1,x2,label`, label ignored).
pub fn read_unlabeled_csv<R: Read>(reader: R, has_header: bool) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv_reader(reader, has_header);
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let fallback = n as u64 + 1 + u64::from(has_header);
        let rec = rec.map_err(|e| csv_error(e, fallback))?;
        let row = record_row(&rec, fallback);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != 2 && rec.len() != 3 {
            return Err(Error::MalformedRow {
                row,
                message: format!("expected 2 or 3 fields, found {}", rec.len()),
            });
        }
        out.push((parse_feature(&rec[0], row, 1)?, parse_feature(&rec[1], row, 2)?));
    }
    Ok(out)
}

pub fn load_unlabeled_csv(path: impl AsRef<Path>, has_header: bool) -> Result<Vec<(f64, f64)>> {
    read_unlabeled_csv(open(path.as_ref())?, has_header)
}

/// Writes `x1,x2,label` with a header row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    writeln!(out, "x1,x2,label")?;
    for p in data.points() {
        writeln!(out, "{},{},{}", p.x1, p.x2, p.label)?;
    }
    out.flush()
}

/// Parameters of the interleaved Archimedean spiral benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralConfig {
    pub n_classes: usize,
    pub n_per_class: usize,
    pub noise_sigmas: Vec<f64>,
    pub turns: f64,
    pub seed: u64,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            n_classes: 3,
            n_per_class: 400,
            noise_sigmas: vec![0.01, 0.015, 0.02],
            turns: 1.75,
            seed: 42,
        }
    }
}

const SPIRAL_CENTER: f64 = 0.5;
const SPIRAL_RADIUS: f64 = 0.45;
const SPIRAL_T_MIN: f64 = 0.2;

/// Standard normal pair from two uniforms (Box-Muller).
fn box_muller<R: Rng>(rng: &mut R) -> (f64, f64) {
    // 1 - U lies in (0, 1], keeping the log finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Interleaved noisy spirals, one arm per class.
///
/// Class `k` is labeled `"k"`. Each point draws `t ~ U[0.2, 1)` and sits at
/// radius `0.45 t` and angle `2π·turns·t + 2πk/K` around (0.5, 0.5), plus
/// isotropic Gaussian noise with standard deviation `noise_sigmas[k]`.
///
/// The stream is ChaCha8 seeded from `seed` via `seed_from_u64`, so the output
/// is identical on every platform.
pub fn generate_spirals(config: &SpiralConfig) -> Result<Dataset> {
    let SpiralConfig {
        n_classes,
        n_per_class,
        ref noise_sigmas,
        turns,
        seed,
    } = *config;
    if noise_sigmas.len() != n_classes {
        return Err(Error::NoiseArity {
            expected: n_classes,
            got: noise_sigmas.len(),
        });
    }
    if n_classes < 2 {
        return Err(Error::TooFewClasses(n_classes));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be at least 1".into()));
    }
    if !turns.is_finite() {
        return Err(Error::InvalidArgument("turns must be finite".into()));
    }
    if noise_sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidArgument(
            "noise sigmas must be finite and non-negative".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<String> = (0..n_classes).map(|k| k.to_string()).collect();
    let mut points = Vec::with_capacity(n_classes * n_per_class);
    for (k, label) in labels.iter().enumerate() {
        let offset = 2.0 * PI * k as f64 / n_classes as f64;
        let sigma = noise_sigmas[k];
        for _ in 0..n_per_class {
            let t = SPIRAL_T_MIN + (1.0 - SPIRAL_T_MIN) * rng.gen::<f64>();
            let radius = SPIRAL_RADIUS * t;
            let angle = 2.0 * PI * turns * t + offset;
            let (z1, z2) = box_muller(&mut rng);
            points.push(LabeledPoint {
                x1: SPIRAL_CENTER + radius * angle.cos() + sigma * z1,
                x2: SPIRAL_CENTER + radius * angle.sin() + sigma * z2,
                label: label.clone(),
            });
        }
    }
    Dataset::with_labels(points, labels)
}

/// Stratified split. Within each class the point indices are shuffled with a
/// ChaCha8 stream seeded by `seed`; the first `round(count·(1−test_fraction))`
/// (kept within `1..count`) go to train. Both halves keep the input order and
/// the full vocabulary.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = data.class_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; data.len()];
    for (k, label) in data.labels().iter().enumerate() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| classes[i] == k).collect();
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                label: label.clone(),
                count: members.len(),
                needed: 2,
            });
        }
        members.shuffle(&mut rng);
        let count = members.len();
        let n_train = ((count as f64) * (1.0 - test_fraction))
            .round()
            .clamp(1.0, (count - 1) as f64) as usize;
        for &i in &members[..n_train] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (p, &t) in data.points().iter().zip(&in_train) {
        if t {
            train.push(p.clone());
        } else {
            test.push(p.clone());
        }
    }
    Ok((
        Dataset::with_labels(train, data.labels.clone())?,
        Dataset::with_labels(test, data.labels.clone())?,
    ))
}
