use nalgebra::DMatrix;

use crate::phasespace::TorusGrid;
use crate::quantize::GridOperator;
use crate::scalar::{Complex, Real};

/// Schwartz kernel samples `K(x_j, x'_k)` on `M × M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T: Real> {
    pub grid: TorusGrid,
    pub values: DMatrix<Complex<T>>,
}

/// Kernel of `D` with the Riemann weight `h^dim` divided out, so that smooth
/// operators have `O(1)` kernels and the identity a ridge of height `h^{-dim}`.
pub fn kernel_of<T: Real>(d: &GridOperator<T>) -> Kernel<T> {
    let grid = d.grid();
    let w = T::one() / grid.spacing::<T>().powi(grid.dim() as i32);
    Kernel {
        grid,
        values: d.matrix().map(|z| z * w),
    }
}
