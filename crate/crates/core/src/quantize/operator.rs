use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::GridFunction;
use crate::error::{GopError, Result};
use crate::phasespace::TorusGrid;
use crate::scalar::{Complex, Real};
use crate::spectral::Spectral;

/// Smallest singular value accepted before a matrix is treated as singular.
pub const SIGMA_FLOOR: f64 = 1e-8;

const MAGIC: &[u8; 8] = b"GOPMAT01";

/// Dense operator on the samples of a torus grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridOperator<T: Real> {
    grid: TorusGrid,
    matrix: DMatrix<Complex<T>>,
    descriptor: String,
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> GridOperator<T> {
    pub fn new(
        grid: TorusGrid,
        matrix: DMatrix<Complex<T>>,
        descriptor: impl Into<String>,
    ) -> Result<Self> {
        let n = grid.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(GopError::GridMismatch(format!(
                "operator on a {n}-point grid needs a {n}x{n} matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GopError::Domain("operator entries must be finite".into()));
        }
        Ok(Self {
            grid,
            matrix,
            descriptor: descriptor.into(),
        })
    }

    pub(crate) fn from_parts(
        grid: TorusGrid,
        matrix: DMatrix<Complex<T>>,
        descriptor: impl Into<String>,
    ) -> Self {
        Self {
            grid,
            matrix,
            descriptor: descriptor.into(),
        }
    }

    /// Row-major construction; `row(j)` fills row `j`.
    pub(crate) fn from_rows(
        grid: TorusGrid,
        descriptor: impl Into<String>,
        row: impl Fn(usize, &mut [Complex<T>]) + Sync,
    ) -> Self {
        let n = grid.len();
        let mut data = vec![zero::<T>(); n * n];
        data.par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, r)| row(j, r));
        Self::from_parts(grid, DMatrix::from_row_slice(n, n, &data), descriptor)
    }

    pub fn identity(grid: TorusGrid) -> Self {
        let n = grid.len();
        Self::from_parts(grid, DMatrix::identity(n, n), "I")
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        let n = grid.len();
        Self::from_parts(grid, DMatrix::zeros(n, n), "0")
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.matrix
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn with_descriptor(mut self, d: impl Into<String>) -> Self {
        self.descriptor = d.into();
        self
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(GopError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn apply(&self, u: &GridFunction<T>) -> Result<GridFunction<T>> {
        if u.grid() != self.grid {
            return Err(GopError::GridMismatch(
                "function and operator grids differ".into(),
            ));
        }
        let v = &self.matrix * nalgebra::DVector::from_column_slice(u.values());
        GridFunction::new(self.grid, v.as_slice().to_vec())
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_parts(
            self.grid,
            &self.matrix * &other.matrix,
            format!("({})({})", self.descriptor, other.descriptor),
        ))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_parts(
            self.grid,
            &self.matrix + &other.matrix,
            format!("{} + {}", self.descriptor, other.descriptor),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::from_parts(
            self.grid,
            &self.matrix - &other.matrix,
            format!("{} - {}", self.descriptor, other.descriptor),
        ))
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self::from_parts(
            self.grid,
            self.matrix.map(|z| z * c),
            format!("({c})·{}", self.descriptor),
        )
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(
            self.grid,
            self.matrix.adjoint(),
            format!("({})*", self.descriptor),
        )
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<T> {
        let mut s: Vec<T> = self
            .matrix
            .clone()
            .singular_values()
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        s
    }

    /// Spectral norm (largest singular value).
    pub fn op_norm(&self) -> T {
        spectral_norm(&self.matrix)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check(other)?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| crate::scalar::cabs(a - b))
            .fold(T::zero(), |m, v| m.max(v)))
    }

    /// `‖self − other‖` in the spectral norm.
    pub fn distance(&self, other: &Self) -> Result<T> {
        self.check(other)?;
        Ok(spectral_norm(&(&self.matrix - &other.matrix)))
    }

    /// Matrix inverse, refused when `σ_min < 1e-8`.
    pub fn inverse(&self) -> Result<Self> {
        let svd = self.matrix.clone().svd(true, true);
        let smin = svd
            .singular_values
            .iter()
            .copied()
            .fold(T::max_value().unwrap_or(T::one()), |m, v| m.min(v));
        if !(smin >= T::lit(SIGMA_FLOOR)) {
            return Err(GopError::Conditioning {
                sigma_min: smin.as_f64(),
                floor: SIGMA_FLOOR,
            });
        }
        let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let mut sinv_ut = u.adjoint();
        for (i, s) in svd.singular_values.iter().enumerate() {
            let r = T::one() / *s;
            sinv_ut.row_mut(i).iter_mut().for_each(|z| *z = *z * r);
        }
        Ok(Self::from_parts(
            self.grid,
            vt.adjoint() * sinv_ut,
            format!("({})^-1", self.descriptor),
        ))
    }

    /// The matrix in the unitary Fourier basis, `F A F*`, indexed by flat
    /// frequency indices.
    pub fn to_fourier(&self) -> DMatrix<Complex<T>> {
        let sp = Spectral::<T>::new(self.grid);
        let n = self.size();
        let scale = T::one() / T::from_index(n).sqrt();
        let mut b = self.matrix.clone();
        b.as_mut_slice().par_chunks_mut(n).for_each(|col| {
            sp.forward(col);
            col.iter_mut().for_each(|z| *z = *z * scale);
        });
        let mut ct = b.transpose();
        ct.as_mut_slice().par_chunks_mut(n).for_each(|col| {
            sp.inverse(col);
            col.iter_mut().for_each(|z| *z = *z * scale);
        });
        ct.transpose()
    }

    /// `P_K A P_K` in the Fourier basis, restricted to the band `K`.
    pub fn band_block(&self, k_cut: usize) -> DMatrix<Complex<T>> {
        let idx = self.grid.band_indices(k_cut);
        let f = self.to_fourier();
        f.select_rows(idx.iter()).select_columns(idx.iter())
    }

    /// `‖P_K A P_K‖` with `P_K` the projection onto the band `|ξ| ≥ K`
    /// (away from the Nyquist edge, see [`TorusGrid::band_indices`]).
    pub fn band_norm(&self, k_cut: usize) -> T {
        let b = self.band_block(k_cut);
        if b.is_empty() {
            return T::zero();
        }
        spectral_norm(&b)
    }

    /// Writes the `GOPMAT01` binary format: magic, `u32` rows, `u32` cols,
    /// then row-major little-endian `complex128` entries.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        let (r, c) = self.matrix.shape();
        w.write_all(MAGIC)?;
        w.write_all(&(r as u32).to_le_bytes())?;
        w.write_all(&(c as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(r * c * 16);
        for i in 0..r {
            for j in 0..c {
                let z = self.matrix[(i, j)];
                buf.extend_from_slice(&z.re.as_f64().to_le_bytes());
                buf.extend_from_slice(&z.im.as_f64().to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a `GOPMAT01` matrix for the given grid.
    pub fn read_binary(grid: TorusGrid, mut r: impl Read) -> Result<Self> {
        let mut head = [0u8; 16];
        r.read_exact(&mut head)?;
        if &head[..8] != MAGIC {
            return Err(GopError::Format("bad matrix file magic".into()));
        }
        let rows = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
        let cols = u32::from_le_bytes(head[12..16].try_into().expect("4 bytes")) as usize;
        let mut body = vec![0u8; rows * cols * 16];
        r.read_exact(&mut body)?;
        let f = |o: usize| {
            T::lit(f64::from_le_bytes(
                body[o..o + 8].try_into().expect("8 bytes"),
            ))
        };
        let data: Vec<Complex<T>> = (0..rows * cols)
            .map(|k| Complex::new(f(16 * k), f(16 * k + 8)))
            .collect();
        Self::new(grid, DMatrix::from_row_slice(rows, cols, &data), "imported")
    }
}

pub(crate) fn spectral_norm<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    if m.is_empty() {
        return T::zero();
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(T::zero(), |a, b| a.max(b))
}

pub(crate) fn min_singular_value<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let s = m.clone().singular_values();
    s.iter()
        .copied()
        .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b))
}
