//! Multi-dimensional periodic FFT helpers on a `TorusGrid`.

use crate::grid::TorusGrid;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward or inverse unnormalized transform over all axes in place.
/// The inverse is scaled by `1 / n^d`.
pub(crate) fn fftn(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let total = grid.num_nodes();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.d {
        let stride = n.pow((grid.d - 1 - axis) as u32);
        for base in 0..total {
            // line starts are the indices whose `axis` digit is zero
            if (base / stride) % n != 0 {
                continue;
            }
            for (j, l) in line.iter_mut().enumerate() {
                *l = data[base + j * stride];
            }
            fft.process(&mut line);
            for (j, l) in line.iter().enumerate() {
                data[base + j * stride] = *l;
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Angular wavenumber `2 pi k` of DFT index `j`; `None` at the Nyquist index of even `n`.
pub(crate) fn wavenumber(j: usize, n: usize) -> Option<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    if 2 * j == n {
        None
    } else if 2 * j < n {
        Some(two_pi * j as f64)
    } else {
        Some(two_pi * (j as f64 - n as f64))
    }
}

/// `|2 pi k|^2` of DFT index `j`, including the Nyquist mode.
pub(crate) fn wavenumber_sq(j: usize, n: usize) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let k = if 2 * j <= n { j as f64 } else { j as f64 - n as f64 };
    (two_pi * k).powi(2)
}

pub(crate) fn to_complex(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub(crate) fn real_part(values: &[Complex64]) -> Vec<f64> {
    values.iter().map(|c| c.re).collect()
}

/// Spectral gradient of nodal values; one vector per axis.
pub(crate) fn spectral_gradient(grid: &TorusGrid, values: &[f64]) -> Vec<Vec<f64>> {
    let mut hat = to_complex(values);
    fftn(grid, &mut hat, false);
    (0..grid.d)
        .map(|axis| {
            let mut g: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let j = grid.multi_index(k)[axis];
                    match wavenumber(j, grid.n) {
                        Some(w) => c * Complex64::new(0.0, w),
                        None => Complex64::new(0.0, 0.0),
                    }
                })
                .collect();
            fftn(grid, &mut g, true);
            real_part(&g)
        })
        .collect()
}

/// Spectral Laplacian of nodal values.
pub(crate) fn spectral_laplacian(grid: &TorusGrid, values: &[f64]) -> Vec<f64> {
    let mut hat = to_complex(values);
    fftn(grid, &mut hat, false);
    for (k, c) in hat.iter_mut().enumerate() {
        let k2: f64 = grid.multi_index(k).iter().map(|&j| wavenumber_sq(j, grid.n)).sum();
        *c *= -k2;
    }
    fftn(grid, &mut hat, true);
    real_part(&hat)
}

/// Zero-mean solution `q` of `Delta q = f - mean(f)`.
pub(crate) fn inverse_laplacian(grid: &TorusGrid, values: &[f64]) -> Vec<f64> {
    let mut hat = to_complex(values);
    fftn(grid, &mut hat, false);
    for (k, c) in hat.iter_mut().enumerate() {
        let k2: f64 = grid.multi_index(k).iter().map(|&j| wavenumber_sq(j, grid.n)).sum();
        *c = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { *c / (-k2) };
    }
    fftn(grid, &mut hat, true);
    real_part(&hat)
}
