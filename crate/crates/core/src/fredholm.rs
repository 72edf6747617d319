//! Finite-section Fredholm experiments.
//!
//! A square finite section always has index zero, so the numerical index
//! counts only near-null singular vectors that live at resolvable
//! frequencies: a near-null vector with more than half of its energy in the
//! Nyquist guard zone (`|ξ_i| > n/2 − n/8`) is a truncation artefact (the
//! place where a frequency ladder runs off the grid) and is excluded. An
//! index is reported only across a visible spectral gap.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::crossed::{
    finite_section_invertibility, symbol_inverse, CrossedElement, GroupModel, InverseOptions,
    Verdict,
};
use crate::error::{GopError, Result};
use crate::phasespace::TorusGrid;
use crate::quantize::{assemble_g_operator, GridOperator, Representation};
use crate::scalar::{cabs, Complex, Real};

/// Required ratio between the first singular value above the tolerance and
/// the last one below it.
pub const MIN_GAP_RATIO: f64 = 10.0;
/// Share of energy in the guard zone that marks a near-null vector as an artefact.
pub const ARTEFACT_SHARE: f64 = 0.5;
const PROFILE_HEAD: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct SizeIndex {
    pub n_points: usize,
    /// Smallest singular values, ascending.
    pub profile: Vec<f64>,
    pub near_null: usize,
    pub kernel: usize,
    pub cokernel: usize,
    /// Near-null right/left vectors discarded as guard-zone artefacts.
    pub artefacts: (usize, usize),
    pub gap_ratio: f64,
    /// `kernel − cokernel`, absent without a gap.
    pub index: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexVerdict {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    pub svd_tol: f64,
    pub sizes: Vec<SizeIndex>,
    pub verdict: IndexVerdict,
    /// Common index when stable.
    pub index: Option<i64>,
}

impl IndexReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == IndexVerdict::Stable
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n_points,sigma_head,near_null,kernel,cokernel,artefacts_ker,artefacts_coker,gap_ratio,index\n");
        for z in &self.sizes {
            let head: Vec<String> = z.profile.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{:e},{}",
                z.n_points,
                head.join(";"),
                z.near_null,
                z.kernel,
                z.cokernel,
                z.artefacts.0,
                z.artefacts.1,
                z.gap_ratio,
                z.index.map_or_else(|| "NA".to_string(), |i| i.to_string())
            );
        }
        s
    }
}

fn guard_share<T: Real>(grid: &TorusGrid, vector: impl Iterator<Item = Complex<T>>) -> f64 {
    let guard = grid.n_points() / 8;
    let (mut inside, mut total) = (0.0, 0.0);
    for (f, z) in vector.enumerate() {
        let e = cabs(z).as_f64().powi(2);
        total += e;
        if grid.is_near_nyquist(f, guard) {
            inside += e;
        }
    }
    if total > 0.0 {
        inside / total
    } else {
        0.0
    }
}

fn size_index<T: Real>(d: &GridOperator<T>, svd_tol: f64) -> SizeIndex {
    let grid = d.grid();
    let svd = d.to_fourier().svd(true, true);
    let (u, vt) = (
        svd.u.expect("left vectors requested"),
        svd.v_t.expect("right vectors requested"),
    );
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    let sv = |i: usize| svd.singular_values[i].as_f64();
    order.sort_by(|&a, &b| sv(a).total_cmp(&sv(b)));
    let null: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| sv(i) <= svd_tol)
        .collect();
    let above = order
        .iter()
        .map(|&i| sv(i))
        .find(|v| *v > svd_tol)
        .unwrap_or(f64::INFINITY);
    let below = null
        .last()
        .map_or(svd_tol, |&i| sv(i).max(f64::MIN_POSITIVE));
    let gap_ratio = above / below;
    let mut art = (0, 0);
    for &i in &null {
        if guard_share(&grid, vt.row(i).iter().map(|z| z.conj())) > ARTEFACT_SHARE {
            art.0 += 1;
        }
        if guard_share(&grid, u.column(i).iter().copied()) > ARTEFACT_SHARE {
            art.1 += 1;
        }
    }
    let (kernel, cokernel) = (null.len() - art.0, null.len() - art.1);
    SizeIndex {
        n_points: grid.n_points(),
        profile: order.iter().take(PROFILE_HEAD).map(|&i| sv(i)).collect(),
        near_null: null.len(),
        kernel,
        cokernel,
        artefacts: art,
        gap_ratio,
        index: (gap_ratio >= MIN_GAP_RATIO).then_some(kernel as i64 - cokernel as i64),
    }
}

/// Kernel/cokernel dimensions of finite sections at several grid sizes.
///
/// Needs at least three sizes. Singular values `≤ svd_tol` count as null;
/// each size needs a gap ratio of at least 10 around `svd_tol`, otherwise
/// the verdict is inconclusive.
pub fn numerical_index<T: Real>(ops: &[GridOperator<T>], svd_tol: T) -> Result<IndexReport> {
    if ops.len() < 3 {
        return Err(GopError::Usage(
            "numerical index needs at least three grid sizes".into(),
        ));
    }
    let tol = svd_tol.as_f64();
    if !(tol > 0.0) {
        return Err(GopError::Usage("svd tolerance must be positive".into()));
    }
    let sizes: Vec<SizeIndex> = ops.par_iter().map(|d| size_index(d, tol)).collect();
    let (verdict, index) = if sizes.iter().any(|z| z.index.is_none()) {
        (IndexVerdict::Inconclusive, None)
    } else if sizes.windows(2).all(|w| w[0].index == w[1].index) {
        (IndexVerdict::Stable, sizes[0].index)
    } else {
        (IndexVerdict::Unstable, None)
    };
    Ok(IndexReport {
        svd_tol: tol,
        sizes,
        verdict,
        index,
    })
}

#[derive(Clone, Debug)]
pub struct AlmostInverse<T: Real> {
    pub r: GridOperator<T>,
    pub cutoffs: [usize; 2],
    /// `‖P_K(RD − I)P_K‖` at `K` and `2K`.
    pub left: [T; 2],
    /// `‖P_K(DR − I)P_K‖` at `K` and `2K`.
    pub right: [T; 2],
}

/// Slack allowed when comparing residuals at `K` and `2K`.
pub const RESIDUAL_SLACK: f64 = 1e-12;

impl<T: Real> AlmostInverse<T> {
    /// Residuals do not increase from `K` to `2K` (up to round-off); a
    /// failure flags a symbol inverse that is too truncated.
    pub fn decreasing(&self) -> bool {
        let s = T::lit(RESIDUAL_SLACK);
        self.left[1] <= self.left[0] + s && self.right[1] <= self.right[0] + s
    }

    /// Left and right residuals agree within a factor 10 at both cutoffs.
    pub fn symmetric(&self) -> bool {
        let s = T::lit(RESIDUAL_SLACK);
        (0..2).all(|i| {
            let (l, r) = (self.left[i] + s, self.right[i] + s);
            l <= r * T::lit(10.0) && r <= l * T::lit(10.0)
        })
    }

    pub fn max_residual(&self) -> T {
        self.left
            .iter()
            .chain(&self.right)
            .fold(T::zero(), |a, b| a.max(*b))
    }
}

/// Assembles `R` from the symbol inverse `b` and measures `RD − I`,
/// `DR − I` on the high bands `K` and `2K`.
pub fn almost_inverse<T: Real>(
    d: &GridOperator<T>,
    b: &CrossedElement<T>,
    group: &GroupModel<T>,
    rep: &Representation<T>,
    k: usize,
) -> Result<AlmostInverse<T>> {
    let grid = d.grid();
    if k == 0 || 2 * k > grid.n_points() / 4 {
        return Err(GopError::Usage(format!(
            "band cutoff must satisfy 1 ≤ 2K ≤ {}",
            grid.n_points() / 4
        )));
    }
    let r = assemble_g_operator(b, group, rep, grid)?;
    let id = GridOperator::identity(grid);
    let rd = r.compose(d)?.sub(&id)?;
    let dr = d.compose(&r)?.sub(&id)?;
    Ok(AlmostInverse {
        cutoffs: [k, 2 * k],
        left: [rd.band_norm(k), rd.band_norm(2 * k)],
        right: [dr.band_norm(k), dr.band_norm(2 * k)],
        r,
    })
}

/// Inputs of [`ellipticity_experiment`].
#[derive(Clone, Debug)]
pub struct EllipticityConfig<T: Real> {
    pub element: CrossedElement<T>,
    pub group: GroupModel<T>,
    pub representation: Representation<T>,
    /// At least three; the element's layout is resampled on each.
    pub sizes: Vec<usize>,
    pub section_bases: usize,
    pub windows: Vec<usize>,
    pub section_threshold: T,
    pub inverse: InverseOptions<T>,
    pub band: usize,
    pub svd_tol: T,
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub section_verdict: Verdict,
    pub section_min_sigma: f64,
    pub inverse_residual: Option<f64>,
    pub inverse_error: Option<String>,
    /// Per size: `(n, left residuals, right residuals)`.
    pub almost_inverse: Vec<(usize, [f64; 2], [f64; 2])>,
    pub almost_inverse_ok: bool,
    /// `σ_min(D)` per size.
    pub sigma_min: Vec<(usize, f64)>,
    /// First singular value above the SVD tolerance, per size.
    pub lower_spectrum: Vec<(usize, f64)>,
    /// The lower spectrum falls strictly with `N`, by at least a factor 2
    /// overall: spectrum accumulating at zero, evidence against Fredholmness.
    pub lower_spectrum_drift: bool,
    pub index: IndexReport,
    pub fredholm_consistent: bool,
}

/// Runs the section test, the symbol inverse, the almost inverse and the
/// numerical index; "Fredholm-consistent" iff all pass with a stable index.
///
/// `build` produces the element on a given grid size (symbols are sampled
/// per grid).
pub fn ellipticity_experiment<T: Real>(
    cfg: &EllipticityConfig<T>,
    build: impl Fn(usize) -> Result<CrossedElement<T>>,
) -> Result<EllipticityReport> {
    if cfg.sizes.len() < 3 {
        return Err(GopError::Usage(
            "ellipticity experiment needs at least three grid sizes".into(),
        ));
    }
    let layout = cfg.element.layout();
    let n_cells = layout.n_cells();
    let stride = (n_cells / cfg.section_bases.max(1)).max(1);
    // spread over the base points, alternating directions
    let bases: Vec<_> = (0..cfg.section_bases.min(n_cells))
        .map(|k| layout.cell_point((k * stride + k % layout.n_dirs()) % n_cells))
        .collect();
    let sections = finite_section_invertibility(
        &cfg.element,
        &cfg.group,
        &bases,
        &cfg.windows,
        cfg.section_threshold,
    )?;

    let (inverse_residual, inverse_error) =
        match symbol_inverse(&cfg.element, &cfg.group, &cfg.inverse) {
            Ok(rep) => (Some(rep.residual().as_f64()), None),
            Err(e) => (None, Some(e.to_string())),
        };

    let mut ops = Vec::with_capacity(cfg.sizes.len());
    let mut almost = Vec::new();
    let mut almost_ok = inverse_error.is_none();
    for &n in &cfg.sizes {
        let elt = build(n)?;
        let grid = elt.layout().torus();
        let d = assemble_g_operator(&elt, &cfg.group, &cfg.representation, grid)?;
        if inverse_error.is_none() {
            let b = symbol_inverse(&elt, &cfg.group, &cfg.inverse)?.inverse;
            let ai = almost_inverse(&d, &b, &cfg.group, &cfg.representation, cfg.band)?;
            almost_ok &= ai.decreasing();
            almost.push((n, ai.left.map(|v| v.as_f64()), ai.right.map(|v| v.as_f64())));
        }
        ops.push(d);
    }
    let sigma_min = ops
        .iter()
        .map(|d| {
            (
                d.grid().n_points(),
                d.singular_values()
                    .into_iter()
                    .fold(f64::INFINITY, |a, s| a.min(s.as_f64())),
            )
        })
        .collect();
    let index = numerical_index(&ops, cfg.svd_tol)?;
    let lower_spectrum: Vec<(usize, f64)> = index
        .sizes
        .iter()
        .map(|z| {
            let d = &ops[cfg.sizes.iter().position(|&n| n == z.n_points).unwrap_or(0)];
            let first = d
                .singular_values()
                .into_iter()
                .map(|s| s.as_f64())
                .filter(|s| *s > index.svd_tol);
            (z.n_points, first.fold(f64::INFINITY, f64::min))
        })
        .collect();
    let lower_spectrum_drift = lower_spectrum.windows(2).all(|w| w[1].1 < w[0].1)
        && lower_spectrum.last().map(|l| l.1) <= lower_spectrum.first().map(|f| 0.5 * f.1);
    let fredholm_consistent =
        sections.verdict == Verdict::Elliptic && almost_ok && index.is_stable();
    Ok(EllipticityReport {
        section_verdict: sections.verdict,
        section_min_sigma: sections.min_sigma().as_f64(),
        inverse_residual,
        inverse_error,
        almost_inverse: almost,
        almost_inverse_ok: almost_ok,
        sigma_min,
        lower_spectrum,
        lower_spectrum_drift,
        index,
        fredholm_consistent,
    })
}
