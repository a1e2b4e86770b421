//! Thin wrappers around rustfft shared by the field solvers and the wave
//! propagators.
//!
//! All transforms run through a thread-local planner so rayon workers reuse
//! plans without locking. The inverse transform is normalized by 1/n, so
//! `fft_inverse(fft_forward(x)) == x` up to round-off.

use num_complex::Complex;
use rustfft::FftPlanner;
use std::cell::RefCell;
use std::sync::Arc;

pub type C64 = Complex<f64>;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn rustfft::Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place forward DFT, unnormalized: X_k = sum_m x_m e^{-2 pi i k m / n}.
pub fn fft_forward(data: &mut [C64]) {
    plan(data.len(), false).process(data);
}

/// In-place inverse DFT normalized by 1/n.
pub fn fft_inverse(data: &mut [C64]) {
    let n = data.len();
    plan(n, true).process(data);
    let scale = 1.0 / n as f64;
    for z in data.iter_mut() {
        *z *= scale;
    }
}

/// Forward DFT reusing a caller-provided scratch buffer (hot loops).
pub fn fft_forward_with_scratch(data: &mut [C64], scratch: &mut Vec<C64>) {
    let p = plan(data.len(), false);
    scratch.resize(p.get_inplace_scratch_len(), C64::new(0.0, 0.0));
    p.process_with_scratch(data, scratch);
}

/// Signed DFT wavenumbers 2 pi j / length in the layout rustfft uses:
/// j = 0, 1, ..., n/2-1, -n/2, ..., -1.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / length;
    (0..n)
        .map(|j| {
            let js = if j <= n / 2 { j as isize } else { j as isize - n as isize };
            base * js as f64
        })
        .collect()
}

/// Spectral first derivative of a periodic real sample set.
pub fn spectral_derivative(values: &[f64], length: f64) -> Vec<f64> {
    let n = values.len();
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    let ks = wavenumbers(n, length);
    for (z, &k) in buf.iter_mut().zip(&ks) {
        *z *= C64::new(0.0, k);
    }
    // The Nyquist mode of a real signal has no well-defined derivative sign;
    // zero it so the result stays real.
    if n % 2 == 0 {
        buf[n / 2] = C64::new(0.0, 0.0);
    }
    fft_inverse(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// Spectral Laplacian of a periodic real sample set.
pub fn spectral_laplacian(values: &[f64], length: f64) -> Vec<f64> {
    let n = values.len();
    let mut buf: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft_forward(&mut buf);
    let ks = wavenumbers(n, length);
    for (z, &k) in buf.iter_mut().zip(&ks) {
        *z *= -k * k;
    }
    fft_inverse(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// Spectral first derivative of complex periodic samples (in place).
pub fn spectral_derivative_c(values: &mut [C64], length: f64) {
    let n = values.len();
    fft_forward(values);
    let ks = wavenumbers(n, length);
    for (z, &k) in values.iter_mut().zip(&ks) {
        *z *= C64::new(0.0, k);
    }
    if n % 2 == 0 {
        values[n / 2] = C64::new(0.0, 0.0);
    }
    fft_inverse(values);
}

/// Spectral Laplacian of complex periodic samples (in place).
pub fn spectral_laplacian_c(values: &mut [C64], length: f64) {
    let n = values.len();
    fft_forward(values);
    let ks = wavenumbers(n, length);
    for (z, &k) in values.iter_mut().zip(&ks) {
        *z *= -k * k;
    }
    fft_inverse(values);
}

/// N-dimensional DFT over a row-major array, one axis at a time.
pub fn fft_nd(data: &mut [C64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "shape/product mismatch");
    let mut stride = 1usize;
    for &n_axis in shape.iter().rev() {
        let block = stride * n_axis;
        let p = plan(n_axis, inverse);
        let mut line = vec![C64::new(0.0, 0.0); n_axis];
        let mut scratch = vec![C64::new(0.0, 0.0); p.get_inplace_scratch_len()];
        for outer in 0..total / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for m in 0..n_axis {
                    line[m] = data[base + m * stride];
                }
                p.process_with_scratch(&mut line, &mut scratch);
                for m in 0..n_axis {
                    data[base + m * stride] = line[m];
                }
            }
        }
        stride = block;
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}
