//! Radix-2 Cooley-Tukey FFT, 1D and square 2D.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Precomputed twiddles and bit-reversal table for one power-of-two length.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    len: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2Fft {
    /// Panics if `len` is not a power of two.
    pub fn new(len: usize) -> Self {
        assert!(len.is_power_of_two(), "FFT length {len} is not a power of two");
        let twiddles = (0..len / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / len as f64;
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let bits = len.trailing_zeros();
        let bitrev = (0..len)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Self {
            len,
            twiddles,
            bitrev,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized in-place transform. The inverse direction uses conjugate
    /// twiddles and leaves scaling to the caller.
    pub fn process(&self, buf: &mut [Complex64], dir: Direction) {
        let n = self.len;
        assert_eq!(buf.len(), n);
        for i in 0..n {
            let r = self.bitrev[i];
            if i < r {
                buf.swap(i, r);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Square 2D transform of a row-major `n × n` buffer. The inverse is scaled
/// by `1/n²`.
pub fn fft2_in_place(data: &mut [Complex64], n: usize, dir: Direction) {
    assert_eq!(data.len(), n * n);
    let plan = Radix2Fft::new(n);
    for _ in 0..2 {
        data.par_chunks_mut(n).for_each(|row| plan.process(row, dir));
        transpose_square(data, n);
    }
    if dir == Direction::Inverse {
        let scale = 1.0 / (n * n) as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }
}
