//! Three-dimensional DFT on an `n³` grid by axis passes.
//!
//! Forward is unnormalized, inverse carries `1/n³`.

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::par::{self, Exec};

/// Lines processed per task.
const BLOCK_LINES: usize = 64;

fn site(n: usize, axis: usize, line: usize, j: usize) -> usize {
    let (p, q) = (line / n, line % n);
    match axis {
        0 => (j * n + p) * n + q,
        1 => (p * n + j) * n + q,
        _ => (p * n + q) * n + j,
    }
}

fn run_lines(fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], n: usize, exec: Exec) {
    par::for_each_chunk_mut(exec, buf, n * BLOCK_LINES, |_, block| fft.process(block));
}

fn pass(data: &mut [Complex64], n: usize, axis: usize, fft: &Arc<dyn Fft<f64>>, exec: Exec) {
    if axis == 2 {
        run_lines(fft, data, n, exec);
        return;
    }
    let mut buf = vec![Complex64::default(); data.len()];
    {
        let src: &[Complex64] = data;
        par::fill(exec, &mut buf, |i| src[site(n, axis, i / n, i % n)]);
    }
    run_lines(fft, &mut buf, n, exec);
    let inv: Vec<usize> = {
        let mut inv = vec![0; data.len()];
        for i in 0..data.len() {
            inv[site(n, axis, i / n, i % n)] = i;
        }
        inv
    };
    par::fill(exec, data, |s| buf[inv[s]]);
}

fn transform(data: &mut [Complex64], n: usize, direction: FftDirection, exec: Exec) {
    assert_eq!(data.len(), n * n * n, "grid must hold n³ values");
    let fft = FftPlanner::new().plan_fft(n, direction);
    for axis in (0..3).rev() {
        pass(data, n, axis, &fft, exec);
    }
}

pub fn fft3_forward(data: &mut [Complex64], n: usize, exec: Exec) {
    transform(data, n, FftDirection::Forward, exec);
}

pub fn fft3_inverse(data: &mut [Complex64], n: usize, exec: Exec) {
    transform(data, n, FftDirection::Inverse, exec);
    let scale = 1.0 / (n * n * n) as f64;
    par::for_each_mut(exec, data, |_, v| *v *= scale);
}
