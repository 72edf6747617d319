//! Numerical wave front sets of G-operator kernels.
//!
//! The kernel `K(x, x')` of `D` is sampled on `M × M`. A windowed Fourier
//! transform of blocks of the kernel gives a sampled surrogate of `WF'(D)`,
//! which is compared with the set predicted from the crossed-product symbol:
//! pairs `(m, g⁻¹m)` over the essential supports of the coefficients,
//! restricted to the transverse cotangent space for Lie groups. A second,
//! independent route reads the same set off the critical points of the
//! generating phase of the averaged operator.

mod kernel;
mod predict;
mod smoothing;
mod stationary;
mod wavefront;

pub use kernel::{kernel_of, Kernel};
pub use predict::{predicted_pairs, predicted_points, predicted_wavefront, PairCell, PairSet};
pub use smoothing::{
    default_cutoffs, smoothing_check, smoothing_check_at, SmoothingReport, SMOOTHING_FLOOR,
};
pub use stationary::{stationary_phase_support, GeneratingPhase, StationaryOptions};
pub use wavefront::{
    containment_report, resolution_agreement, wavefront_estimate, wavefront_estimate_bins,
    ContainmentReport, WavefrontSet, CONTAINMENT_TOL, DEFAULT_BINS, DEFAULT_THRESHOLD,
    DEFAULT_WINDOW,
};

use crate::phasespace::TorusGrid;
use crate::quantize::{fourier_multiplier, GridOperator};
use crate::scalar::{Complex, Real};

/// Fourier multiplier `e^{−σ²|ξ|²/2}`, a smoothing operator.
pub fn gaussian_blur<T: Real>(grid: TorusGrid, sigma: T) -> GridOperator<T> {
    fourier_multiplier(grid, format!("blur({})", sigma.as_f64()), |xi| {
        let r2 = T::from_int(xi[0] * xi[0] + xi[1] * xi[1]);
        Complex::new((-(sigma * sigma) * r2 * T::lit(0.5)).exp(), T::zero())
    })
}
