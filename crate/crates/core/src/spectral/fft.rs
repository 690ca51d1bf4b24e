//! Row-column FFTs on cubic collocation grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A cubic collocation grid with `m` points per axis and cached FFT plans.
pub struct Grid {
    pub m: usize,
    pub dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Flat grid index of every retained mode, in the space's mode order.
    pub mode_slots: Vec<usize>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("m", &self.m).field("dim", &self.dim).finish()
    }
}

impl Grid {
    pub fn new(m: usize, dim: usize, modes: &[[i32; 3]]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mi = m as i64;
        let mode_slots = modes
            .iter()
            .map(|k| {
                let mut idx = 0usize;
                for &ki in k.iter().take(dim) {
                    let wrapped = (ki as i64).rem_euclid(mi) as usize;
                    idx = idx * m + wrapped;
                }
                idx
            })
            .collect();
        Grid { m, dim, forward, inverse, mode_slots }
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform, `sum_x f(x) e^{-ik.x}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &*self.forward);
    }

    /// Unnormalized inverse transform, `sum_k f_k e^{+ik.x}`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, &*self.inverse);
    }

    fn transform(&self, buf: &mut [Complex64], fft: &dyn Fft<f64>) {
        let m = self.m;
        debug_assert_eq!(buf.len(), self.len());
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        let mut line = vec![Complex64::default(); m];
        for axis in 0..self.dim {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(buf, &mut scratch);
                continue;
            }
            let outer = m.pow(axis as u32);
            for o in 0..outer {
                for inner in 0..stride {
                    let start = o * m * stride + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = buf[start + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        buf[start + j * stride] = *v;
                    }
                }
            }
        }
    }

    /// Integer wavenumber of each grid index along one axis, in FFT order.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let m = self.m as i64;
        let j = j as i64;
        if j <= m / 2 {
            j
        } else {
            j - m
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_forward_is_scaled_identity() {
        let modes = vec![[1, 0, 0]];
        let g = Grid::new(6, 2, &modes);
        let orig: Vec<Complex64> = (0..36).map(|i| Complex64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let mut buf = orig.clone();
        g.forward(&mut buf);
        g.inverse(&mut buf);
        for (a, b) in orig.iter().zip(buf.iter()) {
            assert!((a * 36.0 - b).norm() < 1e-9);
        }
    }

    #[test]
    fn slot_of_negative_mode_wraps() {
        let modes = vec![[-1, 2, 0]];
        let g = Grid::new(8, 2, &modes);
        assert_eq!(g.mode_slots[0], 7 * 8 + 2);
    }
}
