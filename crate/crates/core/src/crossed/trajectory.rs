use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{convolve, CrossedElement, GroupKind, GroupModel};
use crate::error::{GopError, Result};
use crate::phasespace::{HomogeneousSymbol, PhasePoint};
use crate::quantize::min_singular_value;
use crate::scalar::{cabs, Complex, Real};

/// Default σ_min threshold separating elliptic from degenerate sections.
pub const DEFAULT_SECTION_THRESHOLD: f64 = 1e-3;

/// Finite section of the trajectory symbol at a base point:
/// `M[h, k] = w · a_{hk⁻¹}(h·m) + u δ_{hk}`.
#[derive(Clone, Debug)]
pub struct TrajectoryOperator<T: Real> {
    pub base: PhasePoint<T>,
    pub elements: Vec<i64>,
    pub matrix: DMatrix<Complex<T>>,
}

impl<T: Real> TrajectoryOperator<T> {
    pub fn sigma_min(&self) -> T {
        min_singular_value(&self.matrix)
    }

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
}

fn check_base<T: Real>(a: &CrossedElement<T>, base: &PhasePoint<T>) -> Result<()> {
    base.checked()?;
    if let Some(mask) = a.mask() {
        if !mask[a.layout().nearest_cell(base)] {
            return Err(GopError::Domain(
                "base point lies outside the transverse set of a restricted element".into(),
            ));
        }
    }
    Ok(())
}

pub fn trajectory_symbol<T: Real>(
    a: &CrossedElement<T>,
    group: &GroupModel<T>,
    base: &PhasePoint<T>,
    window: usize,
) -> Result<TrajectoryOperator<T>> {
    check_base(a, base)?;
    if !matches!(group.kind(), GroupKind::Cyclic { .. })
        && (window as u64) < a.support_radius(group)
    {
        return Err(GopError::Usage(format!(
            "window {window} is smaller than the support radius {}",
            a.support_radius(group)
        )));
    }
    let elements = group.section(window);
    let orbit = group.orbit(base, &elements);
    let n = elements.len();
    let w = group.weight();
    let unit = a.unit_value();
    let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
    data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let h = elements[i];
        for (j, z) in row.iter_mut().enumerate() {
            let g = group.compose(h, group.inverse(elements[j]));
            let mut v = match a.coeff(g) {
                Some(s) => s.eval_unchecked(&orbit[i]) * w,
                None => Complex::new(T::zero(), T::zero()),
            };
            if i == j {
                v += unit;
            }
            *z = v;
        }
    });
    Ok(TrajectoryOperator {
        base: *base,
        elements,
        matrix: DMatrix::from_row_slice(n, n, &data),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Elliptic,
    Degenerate,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct BaseSection<T> {
    pub base: PhasePoint<T>,
    /// `(window, σ_min)` in increasing window order.
    pub sigma: Vec<(usize, T)>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct SectionReport<T> {
    pub threshold: T,
    pub bases: Vec<BaseSection<T>>,
    pub verdict: Verdict,
}

impl<T: Real> SectionReport<T> {
    pub fn min_sigma(&self) -> T {
        self.bases
            .iter()
            .flat_map(|b| b.sigma.iter().map(|s| s.1))
            .fold(T::max_value().unwrap_or(T::one()), |a, b| a.min(b))
    }

    /// Smallest σ_min over base points at the given window.
    pub fn min_sigma_at(&self, window: usize) -> Option<T> {
        self.bases
            .iter()
            .filter_map(|b| b.sigma.iter().find(|s| s.0 == window).map(|s| s.1))
            .reduce(|a, b| a.min(b))
    }
}

/// Classifies a σ_min sequence over growing windows.
///
/// Degenerate: the last value is below the threshold, or the sequence never
/// increases and at least halves. Elliptic: every value is above the
/// threshold and the last relative change is at most 10%.
pub fn classify<T: Real>(sigma: &[T], threshold: T) -> Verdict {
    let (first, last) = match (sigma.first(), sigma.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Verdict::Inconclusive,
    };
    let non_increasing = sigma
        .windows(2)
        .all(|w| w[1] <= w[0] * (T::one() + T::lit(1e-12)));
    if last < threshold || (sigma.len() > 1 && non_increasing && last <= first * T::lit(0.5)) {
        return Verdict::Degenerate;
    }
    let min = sigma.iter().copied().fold(first, |a, b| a.min(b));
    let settled = sigma.len() < 2 || {
        let prev = sigma[sigma.len() - 2];
        (last - prev).mag() <= T::lit(0.1) * prev.mag()
    };
    if min >= threshold && settled {
        Verdict::Elliptic
    } else {
        Verdict::Inconclusive
    }
}

pub fn finite_section_invertibility<T: Real>(
    a: &CrossedElement<T>,
    group: &GroupModel<T>,
    bases: &[PhasePoint<T>],
    windows: &[usize],
    threshold: T,
) -> Result<SectionReport<T>> {
    if windows.is_empty() || windows.windows(2).any(|w| w[1] <= w[0]) {
        return Err(GopError::Usage(
            "windows must be nonempty and strictly increasing".into(),
        ));
    }
    let per_base: Vec<Result<BaseSection<T>>> = bases
        .par_iter()
        .map(|b| {
            let mut sigma = Vec::with_capacity(windows.len());
            for &w in windows {
                sigma.push((w, trajectory_symbol(a, group, b, w)?.sigma_min()));
            }
            let s: Vec<T> = sigma.iter().map(|v| v.1).collect();
            Ok(BaseSection {
                base: *b,
                verdict: classify(&s, threshold),
                sigma,
            })
        })
        .collect();
    let bases = per_base.into_iter().collect::<Result<Vec<_>>>()?;
    let verdict = if bases.iter().any(|b| b.verdict == Verdict::Degenerate) {
        Verdict::Degenerate
    } else if bases.iter().all(|b| b.verdict == Verdict::Elliptic) {
        Verdict::Elliptic
    } else {
        Verdict::Inconclusive
    };
    Ok(SectionReport {
        threshold,
        bases,
        verdict,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct InverseOptions<T> {
    /// Support cap `L`; default 4× the input support radius (at least 1).
    pub support_cap: Option<usize>,
    /// Accepted residual in the max-coefficient norm.
    pub tol: T,
}

impl<T: Real> Default for InverseOptions<T> {
    fn default() -> Self {
        Self {
            support_cap: None,
            tol: T::lit(1e-6),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InverseReport<T: Real> {
    pub inverse: CrossedElement<T>,
    /// `‖b ⋆ a − 1‖`.
    pub left_residual: T,
    /// `‖a ⋆ b − 1‖`.
    pub right_residual: T,
    pub support_cap: usize,
}

impl<T: Real> InverseReport<T> {
    pub fn residual(&self) -> T {
        self.left_residual.max(self.right_residual)
    }
}

/// Inverse in the unitized crossed product on a truncated support.
///
/// Coefficients are found cell by cell from the left-inverse equations
/// `Σ_h b_h(m) · [u δ_{gh} + w a_{h⁻¹g}(h⁻¹m)] = rhs_g(m)`, which only involve
/// the unknowns at the same cell `m`, solved in the least-squares sense over
/// `|g| ≤ L + r`. For discrete groups without unit, `δ_e ⊗ 1` is the identity.
pub fn symbol_inverse<T: Real>(
    a: &CrossedElement<T>,
    group: &GroupModel<T>,
    opts: &InverseOptions<T>,
) -> Result<InverseReport<T>> {
    let layout = a.layout();
    let unit = a.unit_value();
    let has_unit = cabs(unit) > T::zero();
    if !group.is_discrete() && !has_unit {
        return Err(GopError::Usage(
            "on the line an invertible element needs a nonzero unit".into(),
        ));
    }
    let r = a.support_radius(group) as usize;
    let mut cap = opts.support_cap.unwrap_or((4 * r).max(1));
    let (unknowns, equations): (Vec<i64>, Vec<i64>) = match group.kind() {
        GroupKind::Cyclic { order } => ((0..order as i64).collect(), (0..order as i64).collect()),
        kind => {
            if let GroupKind::Line { window, .. } = kind {
                let room = (window as usize).saturating_sub(r);
                if room == 0 {
                    return Err(GopError::Truncation {
                        element: r as i64,
                        window: window as i64,
                    });
                }
                cap = cap.min(room);
            }
            let e = (cap + r) as i64;
            ((-(cap as i64)..=cap as i64).collect(), (-e..=e).collect())
        }
    };
    let w = group.weight();
    let inv_h: Vec<i64> = unknowns.iter().map(|&h| group.inverse(h)).collect();
    let zero = Complex::new(T::zero(), T::zero());
    let cells: Vec<Vec<Complex<T>>> = (0..layout.n_cells())
        .into_par_iter()
        .map(|c| {
            let m = layout.cell_point::<T>(c);
            let orbit = group.orbit(&m, &inv_h);
            let mut mat = DMatrix::from_element(equations.len(), unknowns.len(), zero);
            let mut rhs = DVector::from_element(equations.len(), zero);
            for (i, &g) in equations.iter().enumerate() {
                for (j, &h) in unknowns.iter().enumerate() {
                    let k = group.compose(group.inverse(h), g);
                    let mut v = match a.coeff(k) {
                        Some(s) => s.eval_unchecked(&orbit[j]) * w,
                        None => zero,
                    };
                    if has_unit && group.normalize(g) == group.normalize(h) {
                        v += unit;
                    }
                    mat[(i, j)] = v;
                }
                rhs[i] = if has_unit {
                    match a.coeff(g) {
                        Some(s) => -s.at_cell(c) / unit,
                        None => zero,
                    }
                } else if group.normalize(g) == 0 {
                    Complex::new(T::one(), T::zero())
                } else {
                    zero
                };
            }
            let svd = mat.svd(true, true);
            let eps = T::lit(1e-13) * svd.singular_values.max();
            match svd.solve(&rhs, eps) {
                Ok(sol) => sol.iter().copied().collect(),
                Err(_) => vec![zero; unknowns.len()],
            }
        })
        .collect();
    let mut terms = Vec::with_capacity(unknowns.len());
    for (j, &h) in unknowns.iter().enumerate() {
        let samples: Vec<Complex<T>> = cells.iter().map(|v| v[j]).collect();
        terms.push((h, HomogeneousSymbol::from_samples(layout, samples)?));
    }
    let b_unit = if has_unit {
        Complex::new(T::one(), T::zero()) / unit
    } else {
        zero
    };
    let b = CrossedElement::from_terms(layout, terms, b_unit)?.pruned(T::lit(1e-15));
    let left = convolve(&b, a, group)?.distance_to_identity(group);
    let right = convolve(a, &b, group)?.distance_to_identity(group);
    let worst = left.max(right);
    if !(worst <= opts.tol) {
        return Err(GopError::InversionFailure {
            residual: worst.as_f64(),
            tol: opts.tol.as_f64(),
        });
    }
    Ok(InverseReport {
        inverse: b,
        left_residual: left,
        right_residual: right,
        support_cap: cap,
    })
}
