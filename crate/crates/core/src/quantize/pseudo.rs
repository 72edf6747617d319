use super::GridOperator;
use crate::error::{GopError, Result};
use crate::phasespace::{CanonicalMap, CosphereGrid, HomogeneousSymbol, TorusGrid};
use crate::scalar::{expi, Complex, Real};
use crate::spectral::{interpolate, Spectral};

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Offset index of `x_j − x_k` on the grid (per axis, cyclic).
#[inline]
pub(crate) fn offset_index(grid: &TorusGrid, j: usize, k: usize) -> usize {
    let n = grid.n_points();
    let (a, b) = (grid.multi_index(j), grid.multi_index(k));
    if grid.dim() == 1 {
        (a[0] + n - b[0]) % n
    } else {
        ((a[0] + n - b[0]) % n) * n + (a[1] + n - b[1]) % n
    }
}

/// Circulant operator of the Fourier multiplier `m(ξ)`:
/// `A = F* diag(m) F`.
pub fn fourier_multiplier<T: Real>(
    grid: TorusGrid,
    descriptor: impl Into<String>,
    m: impl Fn(&[i64; 2]) -> Complex<T>,
) -> GridOperator<T> {
    let n = grid.len();
    let sp = Spectral::<T>::new(grid);
    let mut c: Vec<Complex<T>> = (0..n).map(|f| m(&grid.frequency(f))).collect();
    sp.inverse(&mut c);
    let inv = T::one() / T::from_index(n);
    c.iter_mut().for_each(|z| *z = *z * inv);
    GridOperator::from_rows(grid, descriptor, |j, row| {
        for (k, r) in row.iter_mut().enumerate() {
            *r = c[offset_index(&grid, j, k)];
        }
    })
}

/// Standard order-zero quantization
/// `(Au)(x) = Σ_{ξ≠0} e^{ix·ξ} a(x, ξ/|ξ|) û(ξ) + ā(x) û(0)`,
/// with `ā` the direction mean of `a`.
pub fn quantize_symbol<T: Real>(
    a: &HomogeneousSymbol<T>,
    grid: TorusGrid,
) -> Result<GridOperator<T>> {
    let layout = a.layout();
    if layout.torus() != grid {
        return Err(GopError::Usage(format!(
            "symbol sampled on {:?}, operator requested on {:?}",
            layout.torus(),
            grid
        )));
    }
    let n = grid.len();
    let sp = Spectral::<T>::new(grid);
    // direction interpolation weights per frequency
    let weights: Vec<(usize, usize, T)> = (0..n)
        .map(|f| {
            let xi = grid.frequency(f);
            layout.direction_weights(&[T::from_int(xi[0]), T::from_int(xi[1])])
        })
        .collect();
    let inv = T::one() / T::from_index(n);
    Ok(GridOperator::from_rows(grid, "Op(a)", |j, row| {
        let mut c: Vec<Complex<T>> = weights
            .iter()
            .enumerate()
            .map(|(f, &(d0, d1, w))| {
                if f == 0 {
                    a.direction_mean(j)
                } else if d0 == d1 || w == T::zero() {
                    a.at(j, d0)
                } else {
                    a.at(j, d0) * (T::one() - w) + a.at(j, d1) * w
                }
            })
            .collect();
        sp.inverse(&mut c);
        for (k, r) in row.iter_mut().enumerate() {
            *r = c[offset_index(&grid, j, k)] * inv;
        }
    }))
}

/// `(Φu)(x) = u(x − c)`, realized as the multiplier `e^{−ic·ξ}`.
pub fn shift_operator<T: Real>(c: [T; 2], grid: TorusGrid) -> GridOperator<T> {
    fourier_multiplier(
        grid,
        format!("Shift({:?})", [c[0].as_f64(), c[1].as_f64()]),
        |xi| expi(-(c[0] * T::from_int(xi[0]) + c[1] * T::from_int(xi[1]))),
    )
}

/// Translation vector of a canonical map of translation type, or
/// [`GopError::Unsupported`] if the map is not a translation.
pub fn translation_vector<T: Real>(g: &CanonicalMap<T>, layout: &CosphereGrid) -> Result<[T; 2]> {
    let probe = layout.cell_point::<T>(0);
    let img = g.apply(&probe);
    let c = [img.x[0] - probe.x[0], img.x[1] - probe.x[1]];
    let tol = T::lit(1e-9);
    let stride = (layout.n_cells() / 37).max(1);
    for cell in (0..layout.n_cells()).step_by(stride) {
        let m = layout.cell_point::<T>(cell);
        let e = g.apply(&m);
        for k in 0..layout.dim() {
            if (e.x[k] - m.x[k] - c[k]).mag() > tol || (e.p[k] - m.p[k]).mag() > tol {
                return Err(GopError::Unsupported(format!(
                    "{} is not a translation",
                    g.descriptor()
                )));
            }
        }
    }
    Ok(c)
}

/// Shift by the translation underlying `g`.
pub fn shift_for_map<T: Real>(g: &CanonicalMap<T>, grid: TorusGrid) -> Result<GridOperator<T>> {
    let c = translation_vector(g, &CosphereGrid::standard(grid))?;
    Ok(shift_operator(c, grid))
}

fn density_at<T: Real>(grid: &TorusGrid, coeffs: &[Complex<T>], x: &[T; 2]) -> T {
    interpolate(grid, coeffs, x).re
}

fn check_density<T: Real>(grid: TorusGrid, density: &[T]) -> Result<()> {
    if density.len() != grid.len() {
        return Err(GopError::GridMismatch(format!(
            "density needs {} samples, got {}",
            grid.len(),
            density.len()
        )));
    }
    if density.iter().any(|v| !(*v > T::zero())) {
        return Err(GopError::Domain(
            "volume density must be strictly positive".into(),
        ));
    }
    Ok(())
}

/// Band-limited resampling of density samples taken on a grid of the same
/// dimension onto `grid`.
pub fn resample_density<T: Real>(density: &[T], grid: TorusGrid) -> Result<Vec<T>> {
    if density.len() == grid.len() {
        return Ok(density.to_vec());
    }
    let side = (1..=density.len())
        .find(|n| n.pow(grid.dim() as u32) >= density.len())
        .unwrap_or(0);
    if side.pow(grid.dim() as u32) != density.len() {
        return Err(GopError::GridMismatch(format!(
            "{} density samples do not fill a {}-d grid",
            density.len(),
            grid.dim()
        )));
    }
    let source = TorusGrid::new(grid.dim(), side)?;
    let samples: Vec<Complex<T>> = density
        .iter()
        .map(|v| Complex::new(*v, T::zero()))
        .collect();
    let coeffs = Spectral::<T>::new(source).coefficients(&samples);
    Ok((0..grid.len())
        .map(|j| density_at(&source, &coeffs, &grid.point::<T>(j)))
        .collect())
}

/// `diag(√(Vol(x − c)/Vol(x))) · Shift(c)`, unitary for the inner product
/// weighted by `Vol`. Off-grid values of `Vol` use band-limited
/// interpolation of the samples.
pub fn weighted_shift<T: Real>(
    c: [T; 2],
    density: &[T],
    grid: TorusGrid,
) -> Result<GridOperator<T>> {
    check_density(grid, density)?;
    let sp = Spectral::<T>::new(grid);
    let samples: Vec<Complex<T>> = density
        .iter()
        .map(|v| Complex::new(*v, T::zero()))
        .collect();
    let coeffs = sp.coefficients(&samples);
    let mut factor = Vec::with_capacity(grid.len());
    for (j, v) in density.iter().enumerate() {
        let x = grid.point::<T>(j);
        let moved = density_at(&grid, &coeffs, &[x[0] - c[0], x[1] - c[1]]);
        if !(moved > T::zero()) {
            return Err(GopError::Domain(
                "interpolated density is not positive".into(),
            ));
        }
        factor.push((moved / *v).sqrt());
    }
    let mut m = shift_operator(c, grid).into_matrix();
    for (i, f) in factor.iter().enumerate() {
        m.row_mut(i).iter_mut().for_each(|z| *z = *z * *f);
    }
    Ok(GridOperator::from_parts(grid, m, "WeightedShift"))
}

/// `‖U* diag(Vol) U − diag(Vol)‖_max / max Vol`.
pub fn weighted_unitarity_residual<T: Real>(u: &GridOperator<T>, density: &[T]) -> Result<T> {
    check_density(u.grid(), density)?;
    let m = u.matrix();
    let mut vm = m.clone();
    for (i, v) in density.iter().enumerate() {
        vm.row_mut(i).iter_mut().for_each(|z| *z = *z * *v);
    }
    let g = m.adjoint() * vm;
    let vmax = density.iter().copied().fold(T::zero(), |a, b| a.max(b));
    let mut worst = T::zero();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { density[i] } else { T::zero() };
            worst = worst.max(crate::scalar::cabs(
                g[(i, j)] - Complex::new(target, T::zero()),
            ));
        }
    }
    Ok(worst / vmax)
}

/// Multiplication by `f` (the quantization of a direction-independent symbol).
pub fn multiplication<T: Real>(
    grid: TorusGrid,
    f: impl Fn(&[T; 2]) -> Complex<T> + Sync,
) -> GridOperator<T> {
    GridOperator::from_rows(grid, "M_f", |j, row| {
        row.iter_mut().for_each(|z| *z = zero());
        row[j] = f(&grid.point(j));
    })
}

/// Quantization of `a ∘ g⁻¹`: the symbol transported by the map.
pub fn egorov_transport<T: Real>(
    a: &HomogeneousSymbol<T>,
    g: &CanonicalMap<T>,
) -> HomogeneousSymbol<T> {
    a.compose_map(&g.inverse())
}

/// `‖P_K (Φ Op(a) Φ⁻¹ − Op(a ∘ g⁻¹)) P_K‖`.
pub fn egorov_residual<T: Real>(
    phi: &GridOperator<T>,
    a: &HomogeneousSymbol<T>,
    g: &CanonicalMap<T>,
    k_cut: usize,
) -> Result<T> {
    if k_cut == 0 {
        return Err(GopError::Usage("band cutoff must be at least 1".into()));
    }
    let grid = phi.grid();
    let lhs = phi
        .compose(&quantize_symbol(a, grid)?)?
        .compose(&phi.inverse()?)?;
    let rhs = quantize_symbol(&egorov_transport(a, g), grid)?;
    Ok(lhs.sub(&rhs)?.band_norm(k_cut))
}
