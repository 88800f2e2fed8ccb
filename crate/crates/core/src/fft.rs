//! n-dimensional complex FFT on row-major buffers.
//!
//! Thin wrapper over `rustfft` applying 1-d transforms along each axis.
//! Transforms are single-threaded and deterministic; callers parallelize
//! across independent fields or scales instead.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward FFT of a real buffer with the given shape. Unnormalized.
pub fn forward_real(values: &[f64], shape: &[usize]) -> Vec<Complex<f64>> {
    debug_assert_eq!(values.len(), shape.iter().product::<usize>());
    let mut data: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    for axis in 0..shape.len() {
        transform_axis(&mut data, shape, axis, false);
    }
    data
}

/// Inverse FFT returning the real part, normalized by the total sample count.
pub fn inverse_to_real(mut spectrum: Vec<Complex<f64>>, shape: &[usize]) -> Vec<f64> {
    let total: usize = shape.iter().product();
    debug_assert_eq!(spectrum.len(), total);
    for axis in 0..shape.len() {
        transform_axis(&mut spectrum, shape, axis, true);
    }
    let scale = 1.0 / total as f64;
    spectrum.iter().map(|c| c.re * scale).collect()
}

fn transform_axis(data: &mut [Complex<f64>], shape: &[usize], axis: usize, inverse: bool) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    let mut line = vec![Complex::new(0.0, 0.0); n];
    for o in 0..outer {
        let block = o * n * stride;
        for s in 0..stride {
            let base = block + s;
            if stride == 1 {
                fft.process(&mut data[base..base + n]);
            } else {
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + i * stride];
                }
                fft.process(&mut line);
                for (i, &v) in line.iter().enumerate() {
                    data[base + i * stride] = v;
                }
            }
        }
    }
}
