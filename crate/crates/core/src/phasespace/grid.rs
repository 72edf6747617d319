use serde::{Deserialize, Serialize};

use crate::error::{GopError, Result};
use crate::scalar::Real;

/// Uniform periodic grid on the flat torus `T^dim = (R / 2πZ)^dim`.
///
/// Points are stored row-major: for `dim == 2` the flat index is
/// `i0 * n_points + i1`, where `i0` indexes the first coordinate.
/// Frequency index `k` along an axis stands for the integer frequency
/// `k` if `k < n/2` and `k - n` otherwise, so the band is `[-n/2, n/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    n_points: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n_points: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(GopError::Usage(format!(
                "torus dimension must be 1 or 2, got {dim}"
            )));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(GopError::Usage(format!(
                "points per axis must be a power of two >= 8, got {n_points}"
            )));
        }
        Ok(Self { dim, n_points })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Total number of samples, `n_points^dim`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing<T: Real>(&self) -> T {
        T::two_pi() / T::from_index(self.n_points)
    }

    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / self.n_points, flat % self.n_points]
        }
    }

    #[inline]
    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.n_points + idx[1]
        }
    }

    /// Periodic index arithmetic.
    #[inline]
    pub fn wrap(&self, i: i64) -> usize {
        i.rem_euclid(self.n_points as i64) as usize
    }

    /// Grid point coordinates in `[0, 2π)`; unused components are zero.
    pub fn point<T: Real>(&self, flat: usize) -> [T; 2] {
        let h = self.spacing::<T>();
        let [i0, i1] = self.multi_index(flat);
        if self.dim == 1 {
            [T::from_index(i0) * h, T::zero()]
        } else {
            [T::from_index(i0) * h, T::from_index(i1) * h]
        }
    }

    /// Signed integer frequency of an axis index.
    #[inline]
    pub fn axis_frequency(&self, k: usize) -> i64 {
        let n = self.n_points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Axis index of an integer frequency (aliased into the band).
    #[inline]
    pub fn frequency_index(&self, xi: i64) -> usize {
        self.wrap(xi)
    }

    /// Lattice frequency of a flat spectral index; unused component zero.
    pub fn frequency(&self, flat: usize) -> [i64; 2] {
        let [k0, k1] = self.multi_index(flat);
        if self.dim == 1 {
            [self.axis_frequency(k0), 0]
        } else {
            [self.axis_frequency(k0), self.axis_frequency(k1)]
        }
    }

    /// Nearest grid cell (per axis) of an arbitrary real point.
    pub fn nearest_cell<T: Real>(&self, x: &[T; 2]) -> [usize; 2] {
        let h = self.spacing::<T>();
        let mut out = [0usize; 2];
        for k in 0..self.dim {
            let r = (x[k] / h).round();
            out[k] = self.wrap(r.as_f64() as i64);
        }
        out
    }

    /// Indices of the resolved high-frequency band used for every
    /// "modulo compact operators" comparison: lattice frequencies with
    /// `|ξ| ≥ K` and `max_i |ξ_i| ≤ n/2 − K`.
    ///
    /// The upper guard keeps frequencies that alias through the Nyquist
    /// wrap-around at least `2K` apart, exactly like the gap across zero.
    pub fn band_indices(&self, k_cut: usize) -> Vec<usize> {
        let half = (self.n_points / 2) as i64;
        let k = k_cut as i64;
        (0..self.len())
            .filter(|&f| {
                let xi = self.frequency(f);
                let r2 = xi[0] * xi[0] + xi[1] * xi[1];
                let linf = xi[0].abs().max(xi[1].abs());
                r2 >= k * k && linf <= half - k
            })
            .collect()
    }

    /// Spectral indices within `guard` of the Nyquist edge (`|ξ_i| > n/2 − guard`).
    pub fn is_near_nyquist(&self, flat: usize, guard: usize) -> bool {
        let half = (self.n_points / 2) as i64;
        let xi = self.frequency(flat);
        (0..self.dim).any(|k| xi[k].abs() > half - guard as i64)
    }
}

/// Torus grid together with a direction grid on the unit cosphere.
///
/// In dimension 1 the directions are exactly `{+1, −1}` (index 0 and 1);
/// in dimension 2 they are `n_dirs` equispaced angles `θ_d = 2πd / n_dirs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CosphereGrid {
    torus: TorusGrid,
    n_dirs: usize,
}

impl CosphereGrid {
    pub fn new(torus: TorusGrid, n_dirs: usize) -> Result<Self> {
        match torus.dim() {
            1 if n_dirs != 2 => Err(GopError::Usage(format!(
                "a one-dimensional cosphere has exactly 2 directions, got {n_dirs}"
            ))),
            2 if n_dirs < 16 => Err(GopError::Usage(format!(
                "two-dimensional direction grid needs at least 16 angles, got {n_dirs}"
            ))),
            _ => Ok(Self { torus, n_dirs }),
        }
    }

    /// Two directions in dimension 1, 16 angles in dimension 2.
    pub fn standard(torus: TorusGrid) -> Self {
        let n_dirs = if torus.dim() == 1 { 2 } else { 16 };
        Self { torus, n_dirs }
    }

    #[inline]
    pub fn torus(&self) -> TorusGrid {
        self.torus
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.torus.dim()
    }

    #[inline]
    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    /// Number of cosphere cells, `n_points^dim * n_dirs`.
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.torus.len() * self.n_dirs
    }

    #[inline]
    pub fn cell(&self, point: usize, dir: usize) -> usize {
        point * self.n_dirs + dir
    }

    #[inline]
    pub fn split_cell(&self, cell: usize) -> (usize, usize) {
        (cell / self.n_dirs, cell % self.n_dirs)
    }

    /// Unit covector of direction index `d`.
    pub fn direction<T: Real>(&self, d: usize) -> [T; 2] {
        if self.dim() == 1 {
            if d == 0 {
                [T::one(), T::zero()]
            } else {
                [-T::one(), T::zero()]
            }
        } else {
            let th = T::two_pi() * T::from_index(d) / T::from_index(self.n_dirs);
            [th.cos(), th.sin()]
        }
    }

    /// Base point and unit covector of a cell.
    pub fn cell_point<T: Real>(&self, cell: usize) -> super::PhasePoint<T> {
        let (j, d) = self.split_cell(cell);
        super::PhasePoint::new(self.torus.point(j), self.direction(d))
    }

    /// Fractional direction coordinate of a nonzero covector: the two
    /// neighbouring direction indices and the weight of the second one.
    pub fn direction_weights<T: Real>(&self, p: &[T; 2]) -> (usize, usize, T) {
        if self.dim() == 1 {
            let d = if p[0] > T::zero() { 0 } else { 1 };
            (d, d, T::zero())
        } else {
            let th = crate::scalar::wrap_2pi(p[1].atan2(p[0]));
            let s = th / T::two_pi() * T::from_index(self.n_dirs);
            let fl = s.floor();
            let d0 = (fl.as_f64() as usize) % self.n_dirs;
            let w = s - fl;
            (d0, (d0 + 1) % self.n_dirs, w)
        }
    }

    /// Nearest direction index of a nonzero covector.
    pub fn nearest_direction<T: Real>(&self, p: &[T; 2]) -> usize {
        let (d0, d1, w) = self.direction_weights(p);
        if w > T::lit(0.5) {
            d1
        } else {
            d0
        }
    }

    /// Nearest cell of an arbitrary cotangent point.
    pub fn nearest_cell<T: Real>(&self, m: &super::PhasePoint<T>) -> usize {
        let j = self.torus.flat_index(self.torus.nearest_cell(&m.x));
        self.cell(j, self.nearest_direction(&m.p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(1, 4).is_err());
        assert!(TorusGrid::new(1, 24).is_err());
        assert!(TorusGrid::new(2, 8).is_ok());
    }

    #[test]
    fn periodic_indexing_is_total() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(g.wrap(-1), 7);
        assert_eq!(g.wrap(17), 1);
        assert_eq!(g.axis_frequency(4), -4);
        assert_eq!(g.axis_frequency(3), 3);
        assert_eq!(g.frequency_index(-3), 5);
    }

    #[test]
    fn band_excludes_zero_and_nyquist() {
        let g = TorusGrid::new(1, 32).unwrap();
        let band = g.band_indices(4);
        let freqs: Vec<i64> = band.iter().map(|&f| g.frequency(f)[0]).collect();
        assert!(freqs.iter().all(|x| x.abs() >= 4 && x.abs() <= 12));
        assert_eq!(freqs.len(), 18);
    }

    #[test]
    fn direction_lookup_dim2() {
        let cg = CosphereGrid::standard(TorusGrid::new(2, 8).unwrap());
        let d = cg.direction::<f64>(4);
        assert!((d[0]).abs() < 1e-15 && (d[1] - 1.0).abs() < 1e-15);
        assert_eq!(cg.nearest_direction(&[0.0f64, 2.0]), 4);
        assert_eq!(cg.nearest_direction(&[1.0f64, -1e-12]), 0);
    }
}
