//! FFT plumbing on torus grids.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::phasespace::TorusGrid;
use crate::scalar::{Complex, Real};

/// Forward/inverse DFTs on a [`TorusGrid`], unnormalized in both directions.
///
/// Forward uses `e^{-i x·ξ}`, inverse `e^{+i x·ξ}`.
#[derive(Clone)]
pub struct Spectral<T: Real> {
    grid: TorusGrid,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::<T>::new();
        let n = grid.n_points();
        Self {
            grid,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn run(&self, fft: &Arc<dyn Fft<T>>, data: &mut [Complex<T>]) {
        let n = self.grid.n_points();
        debug_assert_eq!(data.len(), self.grid.len());
        fft.process(data);
        if self.grid.dim() == 2 {
            let mut col = vec![Complex::new(T::zero(), T::zero()); n];
            for c in 0..n {
                for r in 0..n {
                    col[r] = data[r * n + c];
                }
                fft.process(&mut col);
                for r in 0..n {
                    data[r * n + c] = col[r];
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.run(&self.forward, data);
    }

    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.run(&self.inverse, data);
    }

    /// Fourier coefficients `û(ξ) = N^{-1} Σ_x u(x) e^{-i x·ξ}`.
    pub fn coefficients(&self, values: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = values.to_vec();
        self.forward(&mut out);
        let inv = T::one() / T::from_index(self.grid.len());
        out.iter_mut().for_each(|z| *z = *z * inv);
        out
    }

    /// Synthesis `u(x) = Σ_ξ û(ξ) e^{i x·ξ}`.
    #[cfg(test)]
    pub fn synthesize(&self, coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = coeffs.to_vec();
        self.inverse(&mut out);
        out
    }
}

/// Per-axis trigonometric basis `b_k(x)` used for band-limited interpolation:
/// `e^{i ξ_k x}` except at the Nyquist index, where `cos(n x / 2)` keeps the
/// interpolant of real data real.
pub(crate) fn interpolation_basis<T: Real>(grid: &TorusGrid, x: T) -> Vec<Complex<T>> {
    let n = grid.n_points();
    (0..n)
        .map(|k| {
            let xi = grid.axis_frequency(k);
            if k == n / 2 {
                Complex::new((T::from_int(xi) * x).cos(), T::zero())
            } else {
                crate::scalar::expi(T::from_int(xi) * x)
            }
        })
        .collect()
}

/// Evaluates the band-limited interpolant with coefficients `coeffs` at `x`.
pub(crate) fn interpolate<T: Real>(
    grid: &TorusGrid,
    coeffs: &[Complex<T>],
    x: &[T; 2],
) -> Complex<T> {
    let n = grid.n_points();
    let b0 = interpolation_basis(grid, x[0]);
    if grid.dim() == 1 {
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            acc += coeffs[k] * b0[k];
        }
        acc
    } else {
        let b1 = interpolation_basis(grid, x[1]);
        let mut acc = Complex::new(T::zero(), T::zero());
        for k0 in 0..n {
            let mut row = Complex::new(T::zero(), T::zero());
            let base = k0 * n;
            for k1 in 0..n {
                row += coeffs[base + k1] * b1[k1];
            }
            acc += row * b0[k0];
        }
        acc
    }
}
