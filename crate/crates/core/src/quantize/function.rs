use crate::error::{GopError, Result};
use crate::phasespace::TorusGrid;
use crate::scalar::{cabs, Complex, Real};

/// Complex samples of a function on a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T: Real> {
    grid: TorusGrid,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: TorusGrid, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GopError::GridMismatch(format!(
                "grid has {} points, got {} samples",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![Complex::new(T::zero(), T::zero()); grid.len()],
        }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[T; 2]) -> Complex<T>) -> Self {
        let values = (0..grid.len()).map(|j| f(&grid.point(j))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Discrete `L²` inner product with Riemann weight `h^dim`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        let w = self.grid.spacing::<T>().powi(self.grid.dim() as i32);
        let mut acc = Complex::new(T::zero(), T::zero());
        for (a, b) in self.values.iter().zip(&other.values) {
            acc += a * b.conj();
        }
        acc * w
    }

    pub fn norm(&self) -> T {
        let w = self.grid.spacing::<T>().powi(self.grid.dim() as i32);
        let mut acc = T::zero();
        for z in &self.values {
            let m = cabs(*z);
            acc += m * m;
        }
        (acc * w).sqrt()
    }
}
