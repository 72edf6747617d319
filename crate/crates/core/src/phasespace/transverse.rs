use rayon::prelude::*;

use super::{radial_pairing, CanonicalMap, CosphereGrid, Hamiltonian, PhasePoint, VectorField};
use crate::error::{GopError, Result};
use crate::scalar::{dot, Real};

/// Cosphere cells of the transverse cotangent space: the common zero set of
/// a family of Hamiltonians, sampled on `S*M`.
#[derive(Clone, Debug)]
pub struct TransverseSet<T> {
    layout: CosphereGrid,
    mask: Vec<bool>,
    tol: T,
    hamiltonians: Vec<Hamiltonian<T>>,
}

impl<T: Real> TransverseSet<T> {
    /// The whole cosphere bundle (trivial group action).
    pub fn full(layout: CosphereGrid) -> Self {
        Self {
            layout,
            mask: vec![true; layout.n_cells()],
            tol: T::zero(),
            hamiltonians: vec![Hamiltonian::zero(layout.dim())],
        }
    }

    pub fn layout(&self) -> CosphereGrid {
        self.layout
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    #[inline]
    pub fn contains(&self, cell: usize) -> bool {
        self.mask[cell]
    }

    pub fn tol(&self) -> T {
        self.tol
    }

    pub fn hamiltonians(&self) -> &[Hamiltonian<T>] {
        &self.hamiltonians
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&b| b)
    }

    /// `max_i |H_i(m)|` at an arbitrary point, after projecting to `|p| = 1`.
    pub fn defect(&self, m: &PhasePoint<T>) -> Result<T> {
        let m = m.normalized()?;
        Ok(self
            .hamiltonians
            .iter()
            .map(|h| h.value(&m).mag())
            .fold(T::zero(), |a, b| a.max(b)))
    }

    /// Marked cells also present in `other` (same layout).
    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b)
    }
}

fn zero_set_with<T: Real>(
    hams: &[Hamiltonian<T>],
    layout: CosphereGrid,
    tol: T,
    measure: impl Fn(&Hamiltonian<T>, &PhasePoint<T>) -> T + Sync,
) -> Result<TransverseSet<T>> {
    if hams.is_empty() {
        return Err(GopError::Usage(
            "transverse zero set of an empty Hamiltonian family".into(),
        ));
    }
    if tol <= T::zero() {
        return Err(GopError::Usage(
            "zero-set tolerance must be positive".into(),
        ));
    }
    if let Some(h) = hams.iter().find(|h| h.dim() != layout.dim()) {
        return Err(GopError::GridMismatch(format!(
            "Hamiltonian `{}` is {}-dimensional, grid is {}-dimensional",
            h.descriptor(),
            h.dim(),
            layout.dim()
        )));
    }
    let mask = (0..layout.n_cells())
        .into_par_iter()
        .map(|c| {
            let m = layout.cell_point::<T>(c);
            hams.iter().all(|h| measure(h, &m).mag() <= tol)
        })
        .collect();
    Ok(TransverseSet {
        layout,
        mask,
        tol,
        hamiltonians: hams.to_vec(),
    })
}

/// Cells where `max_i |H_i(x, ω)| ≤ tol` on the unit cosphere.
pub fn transverse_zero_set<T: Real>(
    hams: &[Hamiltonian<T>],
    layout: CosphereGrid,
    tol: T,
) -> Result<TransverseSet<T>> {
    zero_set_with(hams, layout, tol, |h, m| h.value(m))
}

/// The same set described through the radial pairing `ω(p̃, V_H) = p · ∂H/∂p`.
pub fn transverse_zero_set_by_pairing<T: Real>(
    hams: &[Hamiltonian<T>],
    layout: CosphereGrid,
    tol: T,
) -> Result<TransverseSet<T>> {
    zero_set_with(hams, layout, tol, |h, m| {
        radial_pairing(h, m).unwrap_or_else(|_| T::zero())
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvarianceReport {
    pub checked: usize,
    pub violations: usize,
    pub fraction: f64,
}

/// Checks that `g` maps marked cells into the zero set: for every marked
/// cell the image, projected to `S*M`, must satisfy `max_i |H_i| ≤ tol + slack`.
pub fn check_invariance<T: Real>(
    ts: &TransverseSet<T>,
    g: &CanonicalMap<T>,
    slack: T,
) -> Result<InvarianceReport> {
    let layout = ts.layout();
    let bound = ts.tol + slack;
    let mut checked = 0;
    let mut violations = 0;
    for c in (0..layout.n_cells()).filter(|&c| ts.contains(c)) {
        checked += 1;
        let img = g.apply(&layout.cell_point::<T>(c));
        if ts.defect(&img)? > bound {
            violations += 1;
        }
    }
    let fraction = if checked == 0 {
        0.0
    } else {
        violations as f64 / checked as f64
    };
    Ok(InvarianceReport {
        checked,
        violations,
        fraction,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConormalReport {
    pub marked: usize,
    pub annihilating: usize,
    pub mismatches: usize,
}

impl ConormalReport {
    pub fn agrees(&self) -> bool {
        self.mismatches == 0
    }
}

/// For actions induced by vector fields on `M`: compares the marked set with
/// the covectors annihilating every orbit tangent `X_i(x)`.
pub fn conormal_orbit_check<T: Real>(
    fields: &[VectorField<T>],
    ts: &TransverseSet<T>,
) -> Result<ConormalReport> {
    if ts.hamiltonians().iter().any(|h| h.point_field().is_none()) {
        return Err(GopError::Usage(
            "conormal check needs Hamiltonians of the form p·X(x) (point transformations)".into(),
        ));
    }
    let layout = ts.layout();
    let d = layout.dim();
    let mut marked = 0;
    let mut annihilating = 0;
    let mut mismatches = 0;
    for c in 0..layout.n_cells() {
        let m = layout.cell_point::<T>(c);
        let ann = fields
            .iter()
            .all(|f| dot(&m.p, &f.at(&m.x), d).mag() <= ts.tol());
        marked += ts.contains(c) as usize;
        annihilating += ann as usize;
        mismatches += (ann != ts.contains(c)) as usize;
    }
    Ok(ConormalReport {
        marked,
        annihilating,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::TorusGrid;

    fn layout2() -> CosphereGrid {
        CosphereGrid::standard(TorusGrid::new(2, 8).unwrap())
    }

    #[test]
    fn zero_set_of_a_coordinate() {
        let l = layout2();
        let ts =
            transverse_zero_set(&[Hamiltonian::<f64>::linear([0.0, 1.0], 2)], l, 1e-9).unwrap();
        for c in 0..l.n_cells() {
            let (_, d) = l.split_cell(c);
            assert_eq!(ts.contains(c), d == 0 || d == 8, "cell {c}");
        }
    }

    #[test]
    fn trivial_group_marks_everything() {
        let ts = transverse_zero_set(&[Hamiltonian::<f64>::zero(2)], layout2(), 1e-9).unwrap();
        assert!(ts.is_full());
    }

    #[test]
    fn empty_family_is_a_usage_error() {
        assert!(matches!(
            transverse_zero_set::<f64>(&[], layout2(), 1e-9),
            Err(GopError::Usage(_))
        ));
        let h = [Hamiltonian::<f64>::zero(2)];
        assert!(transverse_zero_set(&h, layout2(), 0.0).is_err());
    }

    #[test]
    fn singular_zero_set_contains_whole_fibre_over_origin() {
        let l = layout2();
        let ts = transverse_zero_set(&[Hamiltonian::<f64>::quadratic_example()], l, 1e-9).unwrap();
        let origin = 0;
        assert!((0..l.n_dirs()).all(|d| ts.contains(l.cell(origin, d))));
        // away from the origin only isolated directions survive
        for j in 1..l.torus().len() {
            let k = (0..l.n_dirs())
                .filter(|&d| ts.contains(l.cell(j, d)))
                .count();
            assert!(k <= 2, "point {j} has {k} marked directions");
        }
    }

    #[test]
    fn invariance_and_conormals() {
        let l = layout2();
        let h = Hamiltonian::<f64>::linear([1.0, 0.0], 2);
        let ts = transverse_zero_set(&[h.clone()], l, 1e-9).unwrap();
        let g = CanonicalMap::translation([0.7, 0.0], 2);
        let rep = check_invariance(&ts, &g, 1e-12).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.checked > 0);
        let rep = check_invariance(&ts, &CanonicalMap::identity(2), 0.0).unwrap();
        assert_eq!(rep.violations, 0);
        let conormal = conormal_orbit_check(&[VectorField::constant([1.0, 0.0], 2)], &ts).unwrap();
        assert!(conormal.agrees());
    }

    #[test]
    fn conormal_rejects_non_point_hamiltonians() {
        let l = CosphereGrid::standard(TorusGrid::new(1, 8).unwrap());
        let ts = transverse_zero_set(&[Hamiltonian::<f64>::abs_p(1)], l, 1e-9).unwrap();
        assert!(ts.is_empty());
        assert!(matches!(
            conormal_orbit_check(&[], &ts),
            Err(GopError::Usage(_))
        ));
    }
}
