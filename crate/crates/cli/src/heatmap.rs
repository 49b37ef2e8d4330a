//! Binary PGM/PPM rendering of probability fields.
//!
//! Image row `r` is mesh row `i = r`, so the top of the image is the low end
//! of feature `x2`. Columns follow `x1`.

use std::io::{self, Write};

use fourier_classifier::inference::predict_pixel;
use fourier_classifier::{ClassifierModel, PixelIndex};

/// Gray level of a probability: `round(255·p)`, clamped to 0..=255.
pub fn gray_level(p: f64) -> u8 {
    (255.0 * p).round().clamp(0.0, 255.0) as u8
}

/// Fully saturated, full-value color with hue `class / n_classes`.
pub fn palette(class: usize, n_classes: usize) -> [u8; 3] {
    let h = 6.0 * class as f64 / n_classes as f64;
    let sector = h.floor() as usize % 6;
    let f = h - h.floor();
    let (r, g, b) = match sector {
        0 => (1.0, f, 0.0),
        1 => (1.0 - f, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, 1.0 - f, 1.0),
        4 => (f, 0.0, 1.0),
        _ => (1.0, 0.0, 1.0 - f),
    };
    [gray_level(r), gray_level(g), gray_level(b)]
}

/// P5 image of one class's probability field.
pub fn write_probability_pgm<W: Write>(model: &ClassifierModel, class: usize, mut w: W) -> io::Result<()> {
    let field = model.probability_fields().get(class).ok_or_else(|| {
        io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("class index {class} out of range (K = {})", model.n_classes()),
        )
    })?;
    let n = model.grid().n_mesh();
    write!(w, "P5\n{n} {n}\n255\n")?;
    let pixels: Vec<u8> = field.values().iter().map(|&p| gray_level(p)).collect();
    w.write_all(&pixels)?;
    w.flush()
}

/// P6 image coloring each pixel by its predicted class.
pub fn write_decision_ppm<W: Write>(model: &ClassifierModel, mut w: W) -> io::Result<()> {
    let n = model.grid().n_mesh();
    let k = model.n_classes();
    let colors: Vec<[u8; 3]> = (0..k).map(|c| palette(c, k)).collect();
    write!(w, "P6\n{n} {n}\n255\n")?;
    let mut pixels = Vec::with_capacity(n * n * 3);
    for i in 0..n {
        for j in 0..n {
            let pred = predict_pixel(model, PixelIndex::new(i, j));
            pixels.extend_from_slice(&colors[pred.class_index]);
        }
    }
    w.write_all(&pixels)?;
    w.flush()
}
