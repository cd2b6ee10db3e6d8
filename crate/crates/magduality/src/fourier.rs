//! 3-D FFT plumbing on the periodic box, plus the wavenumber convention.
//!
//! Fields live on an N^3 lattice with z the fastest index. Transforms are
//! done axis-by-axis with cached rustfft plans. Derivative wavenumbers use
//! the usual signed layout with the unmatched N/2 frequency set to zero so
//! that derivatives of real fields stay real.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::GridSpec;

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<usize, PlanPair>> = RefCell::new(HashMap::new());
}

fn plans(n: usize) -> PlanPair {
    PLAN_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
            })
            .clone()
    })
}

pub(crate) struct Engine {
    n: usize,
    /// Derivative wavenumbers 2*pi*f_i/L with f_{N/2} := 0.
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Engine {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.resolution();
        let l = spec.edge_length();
        let mut k = vec![0.0; n];
        for (i, ki) in k.iter_mut().enumerate() {
            let f = if i < n / 2 {
                i as f64
            } else if i == n / 2 {
                0.0
            } else {
                i as f64 - n as f64
            };
            *ki = 2.0 * std::f64::consts::PI * f / l;
        }
        let (fwd, inv) = plans(n);
        Engine { n, k, fwd, inv }
    }

    fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    fn pass(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let n = self.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        match axis {
            // z: contiguous lines
            2 => {
                for line in data.chunks_exact_mut(n) {
                    plan.process_with_scratch(line, &mut scratch);
                }
            }
            // y: stride n within each x-slab
            1 => {
                let mut buf = vec![Complex64::default(); n];
                for ix in 0..n {
                    let slab = ix * n * n;
                    for iz in 0..n {
                        for iy in 0..n {
                            buf[iy] = data[slab + iy * n + iz];
                        }
                        plan.process_with_scratch(&mut buf, &mut scratch);
                        for iy in 0..n {
                            data[slab + iy * n + iz] = buf[iy];
                        }
                    }
                }
            }
            // x: stride n^2
            0 => {
                let mut buf = vec![Complex64::default(); n];
                let n2 = n * n;
                for iy in 0..n {
                    for iz in 0..n {
                        let base = iy * n + iz;
                        for ix in 0..n {
                            buf[ix] = data[base + ix * n2];
                        }
                        plan.process_with_scratch(&mut buf, &mut scratch);
                        for ix in 0..n {
                            data[base + ix * n2] = buf[ix];
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn forward(&self, real: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(real.len(), self.len());
        let mut data: Vec<Complex64> = real.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        for axis in [2, 1, 0] {
            self.pass(&mut data, axis, true);
        }
        data
    }

    /// Inverse transform, normalized, real part only. The imaginary part of
    /// the result of any operator built here is FFT roundoff.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        for axis in [0, 1, 2] {
            self.pass(&mut data, axis, false);
        }
        let scale = 1.0 / self.len() as f64;
        data.into_iter().map(|c| c.re * scale).collect()
    }

    /// Visit every mode with its (kx, ky, kz); `f(idx, [kx,ky,kz])`.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3])) {
        let n = self.n;
        let mut idx = 0;
        for ix in 0..n {
            let kx = self.k[ix];
            for iy in 0..n {
                let ky = self.k[iy];
                for iz in 0..n {
                    f(idx, [kx, ky, self.k[iz]]);
                    idx += 1;
                }
            }
        }
    }
}

/// Split an interleaved `[f64;3]` field into component slices ready for the
/// per-component transforms.
pub(crate) fn split_components(data: &[[f64; 3]]) -> [Vec<f64>; 3] {
    let mut out = [
        Vec::with_capacity(data.len()),
        Vec::with_capacity(data.len()),
        Vec::with_capacity(data.len()),
    ];
    for v in data {
        out[0].push(v[0]);
        out[1].push(v[1]);
        out[2].push(v[2]);
    }
    out
}

pub(crate) fn merge_components(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Vec<[f64; 3]> {
    x.into_iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), c)| [a, b, c])
        .collect()
}
