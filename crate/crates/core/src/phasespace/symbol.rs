use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use super::{CanonicalMap, CosphereGrid, PhasePoint};
use crate::error::{GopError, Result};
use crate::scalar::{cabs, Complex, Real};
use crate::spectral::{interpolate, Spectral};

/// Degree-0 homogeneous function on `T*_0 M`, stored by its samples on the
/// cosphere grid.
///
/// Off-grid evaluation at `(x, p)` uses `(x, p/|p|)`: band-limited
/// (trigonometric) interpolation in `x` and linear interpolation in the
/// direction angle.
#[derive(Clone, Debug)]
pub struct HomogeneousSymbol<T: Real> {
    layout: CosphereGrid,
    samples: Vec<Complex<T>>,
    // per-direction Fourier coefficients, direction-major
    coeffs: OnceLock<Arc<Vec<Complex<T>>>>,
}

impl<T: Real> PartialEq for HomogeneousSymbol<T> {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout && self.samples == other.samples
    }
}

impl<T: Real> HomogeneousSymbol<T> {
    pub fn from_samples(layout: CosphereGrid, samples: Vec<Complex<T>>) -> Result<Self> {
        if samples.len() != layout.n_cells() {
            return Err(GopError::GridMismatch(format!(
                "expected {} symbol samples, got {}",
                layout.n_cells(),
                samples.len()
            )));
        }
        if samples
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GopError::Domain("symbol samples must be finite".into()));
        }
        Ok(Self {
            layout,
            samples,
            coeffs: OnceLock::new(),
        })
    }

    /// Samples `f(x, ω)` on every cell.
    pub fn from_fn<F>(layout: CosphereGrid, f: F) -> Self
    where
        F: Fn(&[T; 2], &[T; 2]) -> Complex<T> + Sync,
    {
        let samples = (0..layout.n_cells())
            .into_par_iter()
            .map(|c| {
                let m = layout.cell_point::<T>(c);
                f(&m.x, &m.p)
            })
            .collect();
        Self {
            layout,
            samples,
            coeffs: OnceLock::new(),
        }
    }

    pub fn constant(layout: CosphereGrid, value: Complex<T>) -> Self {
        Self {
            layout,
            samples: vec![value; layout.n_cells()],
            coeffs: OnceLock::new(),
        }
    }

    pub fn zero(layout: CosphereGrid) -> Self {
        Self::constant(layout, Complex::new(T::zero(), T::zero()))
    }

    pub fn layout(&self) -> CosphereGrid {
        self.layout
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    #[inline]
    pub fn at(&self, point: usize, dir: usize) -> Complex<T> {
        self.samples[self.layout.cell(point, dir)]
    }

    #[inline]
    pub fn at_cell(&self, cell: usize) -> Complex<T> {
        self.samples[cell]
    }

    /// Average over the direction grid at a base point (the value the
    /// quantizer assigns to the zero frequency).
    pub fn direction_mean(&self, point: usize) -> Complex<T> {
        let nd = self.layout.n_dirs();
        let mut acc = Complex::new(T::zero(), T::zero());
        for d in 0..nd {
            acc += self.at(point, d);
        }
        acc / T::from_index(nd)
    }

    /// Value at a grid point for an arbitrary nonzero direction.
    pub fn at_point_direction(&self, point: usize, p: &[T; 2]) -> Complex<T> {
        let (d0, d1, w) = self.layout.direction_weights(p);
        let a = self.at(point, d0);
        if d0 == d1 || w == T::zero() {
            a
        } else {
            a * (T::one() - w) + self.at(point, d1) * w
        }
    }

    fn coefficients(&self) -> &Arc<Vec<Complex<T>>> {
        self.coeffs.get_or_init(|| {
            let torus = self.layout.torus();
            let sp = Spectral::<T>::new(torus);
            let nd = self.layout.n_dirs();
            let n = torus.len();
            let mut out = Vec::with_capacity(nd * n);
            for d in 0..nd {
                let slice: Vec<_> = (0..n).map(|j| self.at(j, d)).collect();
                out.extend(sp.coefficients(&slice));
            }
            Arc::new(out)
        })
    }

    /// Evaluation at an arbitrary point of `T*_0 M`.
    pub fn eval(&self, m: &PhasePoint<T>) -> Result<Complex<T>> {
        m.checked()?;
        Ok(self.eval_unchecked(m))
    }

    pub(crate) fn eval_unchecked(&self, m: &PhasePoint<T>) -> Complex<T> {
        let torus = self.layout.torus();
        let n = torus.len();
        let coeffs = self.coefficients();
        let (d0, d1, w) = self.layout.direction_weights(&m.p);
        let v0 = interpolate(&torus, &coeffs[d0 * n..(d0 + 1) * n], &m.x);
        if d0 == d1 || w == T::zero() {
            return v0;
        }
        let v1 = interpolate(&torus, &coeffs[d1 * n..(d1 + 1) * n], &m.x);
        v0 * (T::one() - w) + v1 * w
    }

    /// `self ∘ g`, resampled on the cosphere grid: the new value at
    /// `(x, ω)` is `self(g(x, ω))`.
    pub fn compose_map(&self, g: &CanonicalMap<T>) -> Self {
        let layout = self.layout;
        // force the cache before the parallel section
        let _ = self.coefficients();
        let samples = (0..layout.n_cells())
            .into_par_iter()
            .map(|c| {
                let m = g.apply(&layout.cell_point::<T>(c));
                self.eval_unchecked(&m)
            })
            .collect();
        Self {
            layout,
            samples,
            coeffs: OnceLock::new(),
        }
    }

    fn check_layout(&self, other: &Self) {
        assert_eq!(self.layout, other.layout, "symbol layouts differ");
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        self.check_layout(other);
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Self {
            layout: self.layout,
            samples,
            coeffs: OnceLock::new(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        let samples = self.samples.iter().map(|a| f(*a)).collect();
        Self {
            layout: self.layout,
            samples,
            coeffs: OnceLock::new(),
        }
    }

    /// Like [`map`](Self::map) but also receives the cell index.
    pub fn map_cells(&self, f: impl Fn(usize, Complex<T>) -> Complex<T>) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(c, a)| f(c, *a))
            .collect();
        Self {
            layout: self.layout,
            samples,
            coeffs: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|a| a * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|a| a.conj())
    }

    /// Largest modulus over the grid (the max-coefficient norm).
    pub fn max_abs(&self) -> T {
        self.samples.iter().fold(T::zero(), |m, z| m.max(cabs(*z)))
    }

    pub fn is_zero(&self) -> bool {
        self.samples
            .iter()
            .all(|z| z.re == T::zero() && z.im == T::zero())
    }

    /// Essential-support surrogate: cells where `|a| > floor`, dilated by one
    /// cell in every base and direction axis.
    pub fn ess_supp_mask(&self, floor: T) -> Vec<bool> {
        let layout = self.layout;
        let torus = layout.torus();
        let raw: Vec<bool> = self.samples.iter().map(|z| cabs(*z) > floor).collect();
        let mut out = raw.clone();
        let nd = layout.n_dirs();
        for c in 0..layout.n_cells() {
            if !raw[c] {
                continue;
            }
            let (j, d) = layout.split_cell(c);
            let idx = torus.multi_index(j);
            let offs: &[i64] = &[-1, 0, 1];
            let off1: &[i64] = if torus.dim() == 2 { offs } else { &[0] };
            let doffs: &[i64] = if layout.dim() == 2 { offs } else { &[0] };
            for &a in offs {
                for &b in off1 {
                    let jj = torus.flat_index([
                        torus.wrap(idx[0] as i64 + a),
                        if torus.dim() == 2 {
                            torus.wrap(idx[1] as i64 + b)
                        } else {
                            0
                        },
                    ]);
                    for &e in doffs {
                        let dd = (d as i64 + e).rem_euclid(nd as i64) as usize;
                        out[layout.cell(jj, dd)] = true;
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::TorusGrid;

    fn layout1(n: usize) -> CosphereGrid {
        CosphereGrid::standard(TorusGrid::new(1, n).unwrap())
    }

    #[test]
    fn homogeneity_by_construction() {
        let l = layout1(16);
        let a = HomogeneousSymbol::<f64>::from_fn(l, |x, w| Complex::new(x[0].sin() * w[0], 1.0));
        let m = PhasePoint::new1(0.37, 2.5);
        let v1 = a.eval(&m).unwrap();
        let v2 = a.eval(&m.scale_p(17.0)).unwrap();
        assert!((v1 - v2).norm() < 1e-14);
        assert!((v1 - Complex::new(0.37f64.sin(), 1.0)).norm() < 1e-12);
        assert_eq!(
            a.eval(&PhasePoint::new1(0.3, 0.0)),
            Err(GopError::ZeroCovector)
        );
    }

    #[test]
    fn direction_interpolation_dim2() {
        let l = CosphereGrid::standard(TorusGrid::new(2, 8).unwrap());
        let a = HomogeneousSymbol::<f64>::from_fn(l, |_, w| Complex::new(w[0], 0.0));
        // halfway between angles 0 and π/8
        let th = std::f64::consts::PI / 16.0;
        let v = a
            .eval(&PhasePoint::new([0.0, 0.0], [th.cos(), th.sin()]))
            .unwrap();
        let expect = 0.5 * (1.0 + (2.0 * th).cos());
        assert!((v.re - expect).abs() < 1e-12);
    }

    #[test]
    fn ess_supp_dilates_one_cell() {
        let l = layout1(16);
        let a = HomogeneousSymbol::<f64>::from_fn(l, |x, _| {
            if (x[0] - 1.1780972450961724).abs() < 1e-9 {
                Complex::new(1.0, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        let mask = a.ess_supp_mask(1e-12);
        let marked: Vec<usize> = (0..l.n_cells())
            .filter(|&c| mask[c])
            .map(|c| c / 2)
            .collect();
        assert_eq!(marked, vec![2, 2, 3, 3, 4, 4]);
    }
}
