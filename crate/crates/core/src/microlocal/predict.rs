use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::wavefront::WavefrontSet;
use crate::crossed::{CrossedElement, GroupModel};
use crate::error::{GopError, Result};
use crate::phasespace::{CosphereGrid, PhasePoint, TransverseSet};
use crate::scalar::Real;

/// One cell of a sampled subset of `S*M × S*M`: base cells of `x` and `x'`
/// and direction indices of `p` and `p'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairCell {
    pub x: [usize; 2],
    pub xp: [usize; 2],
    pub p: usize,
    pub pp: usize,
}

/// Sparse set of [`PairCell`]s on a fixed cosphere layout, for any dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    layout: CosphereGrid,
    cells: BTreeSet<PairCell>,
}

impl PairSet {
    pub fn new(layout: CosphereGrid) -> Self {
        Self {
            layout,
            cells: BTreeSet::new(),
        }
    }

    pub fn layout(&self) -> CosphereGrid {
        self.layout
    }

    pub fn insert(&mut self, c: PairCell) {
        self.cells.insert(c);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: &PairCell) -> bool {
        self.cells.contains(c)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PairCell> {
        self.cells.iter()
    }

    /// Inserts `(m, q)` at the nearest cells.
    pub fn insert_points<T: Real>(&mut self, m: &PhasePoint<T>, q: &PhasePoint<T>) {
        let torus = self.layout.torus();
        self.cells.insert(PairCell {
            x: torus.nearest_cell(&m.x),
            xp: torus.nearest_cell(&q.x),
            p: self.layout.nearest_direction(&m.p),
            pp: self.layout.nearest_direction(&q.p),
        });
    }

    /// Chebyshev distance with periodic base coordinates and cyclic
    /// direction indices.
    pub fn cell_distance(&self, a: &PairCell, b: &PairCell) -> usize {
        let n = self.layout.torus().n_points();
        let nd = self.layout.n_dirs();
        let per = |u: usize, v: usize, m: usize| {
            let d = u.abs_diff(v) % m;
            d.min(m - d)
        };
        let mut d = per(a.p, b.p, nd).max(per(a.pp, b.pp, nd));
        for k in 0..self.layout.dim() {
            d = d.max(per(a.x[k], b.x[k], n)).max(per(a.xp[k], b.xp[k], n));
        }
        d
    }

    /// Symmetric Hausdorff distance in cells; `None` if exactly one side is
    /// empty, `Some(0)` if both are.
    pub fn hausdorff(&self, other: &Self) -> Option<usize> {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => return Some(0),
            (true, false) | (false, true) => return None,
            _ => {}
        }
        let one_way = |a: &Self, b: &Self| {
            a.cells
                .iter()
                .map(|c| {
                    b.cells
                        .iter()
                        .map(|d| self.cell_distance(c, d))
                        .min()
                        .unwrap_or(usize::MAX)
                })
                .max()
                .unwrap_or(0)
        };
        Some(one_way(self, other).max(one_way(other, self)))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x0,x1,xp0,xp1,p_dir,pp_dir\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                c.x[0], c.x[1], c.xp[0], c.xp[1], c.p, c.pp
            );
        }
        s
    }
}

/// Pairs `(m, g⁻¹m)` predicted for `WF'(D)`, one per essential-support
/// cell `m` of each coefficient `a_g`, plus the diagonal for a nonzero unit
/// coefficient. For the line group the base cells are restricted to `ts`
/// (pass `None` to skip the restriction); discrete groups ignore `ts`.
pub fn predicted_points<T: Real>(
    elt: &CrossedElement<T>,
    group: &GroupModel<T>,
    ts: Option<&TransverseSet<T>>,
    floor: T,
) -> Result<Vec<(PhasePoint<T>, PhasePoint<T>)>> {
    let layout = elt.layout();
    if let Some(t) = ts {
        if t.layout() != layout {
            return Err(GopError::GridMismatch(
                "transverse set sampled on another grid".into(),
            ));
        }
    }
    let restrict = if group.is_discrete() { None } else { ts };
    let keep = |c: usize| restrict.is_none_or(|t| t.contains(c));
    let mut out = Vec::new();
    if crate::scalar::cabs(elt.unit_value()) > floor {
        for c in (0..layout.n_cells()).filter(|&c| keep(c)) {
            let m = layout.cell_point::<T>(c);
            out.push((m, m));
        }
    }
    for (g, a) in elt.terms() {
        let mask = a.ess_supp_mask(floor);
        let ginv = group.inverse(g);
        for c in (0..layout.n_cells()).filter(|&c| mask[c] && keep(c)) {
            let m = layout.cell_point::<T>(c);
            out.push((m, group.apply(ginv, &m)));
        }
    }
    Ok(out)
}

/// [`predicted_points`] rasterized to cells.
pub fn predicted_pairs<T: Real>(
    elt: &CrossedElement<T>,
    group: &GroupModel<T>,
    ts: Option<&TransverseSet<T>>,
    floor: T,
) -> Result<PairSet> {
    let mut set = PairSet::new(elt.layout());
    for (m, q) in predicted_points(elt, group, ts, floor)? {
        set.insert_points(&m, &q);
    }
    Ok(set)
}

/// Predicted wave front set on `T¹ × T¹` in the block/angle cells of
/// [`wavefront_estimate`](super::wavefront_estimate).
pub fn predicted_wavefront<T: Real>(
    elt: &CrossedElement<T>,
    group: &GroupModel<T>,
    ts: Option<&TransverseSet<T>>,
    floor: T,
    window: usize,
    n_bins: usize,
) -> Result<WavefrontSet<T>> {
    let layout = elt.layout();
    if layout.dim() != 1 {
        return Err(GopError::Unsupported(
            "block wave front sets are implemented on T¹ × T¹".into(),
        ));
    }
    let n = layout.torus().n_points();
    if window == 0 || n % window != 0 {
        return Err(GopError::Usage("window must divide the grid size".into()));
    }
    let mut set = WavefrontSet::empty(n, window, n_bins);
    for (m, q) in predicted_points(elt, group, ts, floor)? {
        set.mark_point(m.x[0], q.x[0], m.p[0], q.p[0]);
    }
    Ok(set)
}
