use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GroupModel;
use crate::error::{GopError, Result};
use crate::phasespace::{CosphereGrid, HomogeneousSymbol, TorusGrid, TransverseSet};
use crate::scalar::{cabs, Complex, Real};

/// Element `u·1 + Σ_g δ_g ⊗ a_g` of the unitized crossed product
/// `C(S*M) ⋊ G`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedElement<T: Real> {
    layout: CosphereGrid,
    terms: BTreeMap<i64, HomogeneousSymbol<T>>,
    unit: Complex<T>,
    mask: Option<Vec<bool>>,
}

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> CrossedElement<T> {
    pub fn zero(layout: CosphereGrid) -> Self {
        Self {
            layout,
            terms: BTreeMap::new(),
            unit: czero(),
            mask: None,
        }
    }

    pub fn unit(layout: CosphereGrid, value: Complex<T>) -> Self {
        Self {
            unit: value,
            ..Self::zero(layout)
        }
    }

    /// `δ_g ⊗ a`.
    pub fn delta(g: i64, a: HomogeneousSymbol<T>) -> Self {
        let layout = a.layout();
        let mut terms = BTreeMap::new();
        terms.insert(g, a);
        Self {
            layout,
            terms,
            unit: czero(),
            mask: None,
        }
    }

    /// Builds an element from `(g, a_g)` pairs; support points must be distinct.
    pub fn from_terms(
        layout: CosphereGrid,
        terms: Vec<(i64, HomogeneousSymbol<T>)>,
        unit: Complex<T>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (g, a) in terms {
            if a.layout() != layout {
                return Err(GopError::GridMismatch(format!(
                    "coefficient at {g} sampled on another grid"
                )));
            }
            if map.insert(g, a).is_some() {
                return Err(GopError::Usage(format!("support point {g} listed twice")));
            }
        }
        Ok(Self {
            layout,
            terms: map,
            unit,
            mask: None,
        })
    }

    /// Haar average `Σ_k δ_k ⊗ φ(kτ)·a` over the line window, with the bump
    /// `φ(t) = bump(t / radius)` supported in `|t| < radius`.
    pub fn averaged(group: &GroupModel<T>, a: &HomogeneousSymbol<T>, radius: T) -> Result<Self> {
        let w = group
            .max_element()
            .ok_or_else(|| GopError::Usage("Haar averages need the line group".into()))?;
        if !(radius > T::zero()) {
            return Err(GopError::Usage("bump radius must be positive".into()));
        }
        let terms = (-w..=w)
            .filter_map(|k| {
                let s = group.parameter(k) / radius;
                (s.mag() < T::one()).then(|| {
                    (
                        k,
                        a.scale(Complex::new(crate::quantize::bump(s), T::zero())),
                    )
                })
            })
            .collect();
        Self::from_terms(a.layout(), terms, czero())
    }

    pub fn with_unit(mut self, unit: Complex<T>) -> Self {
        self.unit = unit;
        self
    }

    pub fn layout(&self) -> CosphereGrid {
        self.layout
    }

    pub fn unit_value(&self) -> Complex<T> {
        self.unit
    }

    pub fn support(&self) -> Vec<i64> {
        self.terms.keys().copied().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &HomogeneousSymbol<T>)> {
        self.terms.iter().map(|(g, a)| (*g, a))
    }

    pub fn coeff(&self, g: i64) -> Option<&HomogeneousSymbol<T>> {
        self.terms.get(&g)
    }

    /// Mask of cells kept by [`restrict_to_transverse`], if restricted.
    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Largest word length in the support.
    pub fn support_radius(&self, group: &GroupModel<T>) -> u64 {
        self.terms
            .keys()
            .map(|&g| group.radius(g))
            .max()
            .unwrap_or(0)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(GopError::GridMismatch(
                "crossed elements on different grids".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut terms = self.terms.clone();
        for (g, b) in &other.terms {
            let v = match terms.get(g) {
                Some(a) => a.add(b),
                None => b.clone(),
            };
            terms.insert(*g, v);
        }
        Ok(Self {
            layout: self.layout,
            terms,
            unit: self.unit + other.unit,
            mask: None,
        })
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            layout: self.layout,
            terms: self.terms.iter().map(|(g, a)| (*g, a.scale(c))).collect(),
            unit: self.unit * c,
            mask: self.mask.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex::new(-T::one(), T::zero())))
    }

    /// Drops coefficients with `max |a_g| ≤ tol`.
    pub fn pruned(&self, tol: T) -> Self {
        let mut out = self.clone();
        out.terms.retain(|_, a| a.max_abs() > tol);
        out
    }

    /// `max(|u|, max_g max |a_g|)`.
    pub fn max_coeff_norm(&self) -> T {
        self.terms
            .values()
            .map(|a| a.max_abs())
            .fold(cabs(self.unit), |m, v| m.max(v))
    }

    /// For discrete groups the unit equals `δ_e ⊗ 1`; this folds it in.
    pub fn absorb_unit(&self, group: &GroupModel<T>) -> Result<Self> {
        if !group.is_discrete() {
            return Err(GopError::Usage(
                "the unit is not an element of L¹(ℝ) and cannot be absorbed".into(),
            ));
        }
        let mut out = self.clone();
        if self.unit != czero() {
            let e = HomogeneousSymbol::constant(self.layout, self.unit);
            let v = match out.terms.get(&0) {
                Some(a) => a.add(&e),
                None => e,
            };
            out.terms.insert(0, v);
            out.unit = czero();
        }
        Ok(out)
    }

    /// `self − 1`, measured in the max-coefficient norm, treating the unit as
    /// `δ_e ⊗ 1` for discrete groups.
    pub fn distance_to_identity(&self, group: &GroupModel<T>) -> T {
        let one = Complex::new(T::one(), T::zero());
        if group.is_discrete() {
            let a = self.absorb_unit(group).expect("discrete");
            let mut worst = T::zero();
            for (g, s) in &a.terms {
                let v = if *g == 0 {
                    s.map(|z| z - one).max_abs()
                } else {
                    s.max_abs()
                };
                worst = worst.max(v);
            }
            if !a.terms.contains_key(&0) {
                worst = worst.max(T::one());
            }
            worst
        } else {
            self.terms
                .values()
                .map(|s| s.max_abs())
                .fold(cabs(self.unit - one), |m, v| m.max(v))
        }
    }
}

/// `α_h f = f ∘ act(h)⁻¹`.
pub fn act_on_symbol<T: Real>(
    group: &GroupModel<T>,
    h: i64,
    f: &HomogeneousSymbol<T>,
) -> HomogeneousSymbol<T> {
    if group.is_trivial_action() || group.normalize(h) == 0 {
        return f.clone();
    }
    f.compose_map(&group.act(group.inverse(h)))
}

/// Twisted convolution `(a⋆b)_g = Σ_h w a_h · α_h(b_{h⁻¹g})`, with the
/// adjoined units distributing over both factors.
pub fn convolve<T: Real>(
    a: &CrossedElement<T>,
    b: &CrossedElement<T>,
    group: &GroupModel<T>,
) -> Result<CrossedElement<T>> {
    a.check(b)?;
    let w = group.weight();
    let pairs: Vec<(i64, i64, i64)> = a
        .terms
        .keys()
        .flat_map(|&h| b.terms.keys().map(move |&k| (h, k)))
        .map(|(h, k)| (group.compose(h, k), h, k))
        .collect();
    if let Some(limit) = group.max_element() {
        if let Some(&(g, _, _)) = pairs.iter().find(|(g, _, _)| g.abs() > limit) {
            return Err(GopError::Truncation {
                element: g,
                window: limit,
            });
        }
    }
    let products: Vec<(i64, HomogeneousSymbol<T>)> = pairs
        .par_iter()
        .map(|&(g, h, k)| {
            let moved = act_on_symbol(group, h, &b.terms[&k]);
            (g, a.terms[&h].mul(&moved).scale(Complex::new(w, T::zero())))
        })
        .collect();
    let mut terms: BTreeMap<i64, HomogeneousSymbol<T>> = BTreeMap::new();
    for (g, p) in products {
        let v = match terms.remove(&g) {
            Some(acc) => acc.add(&p),
            None => p,
        };
        terms.insert(g, v);
    }
    let czero = czero::<T>();
    if b.unit != czero {
        for (h, s) in &a.terms {
            let p = s.scale(b.unit);
            let v = match terms.remove(h) {
                Some(acc) => acc.add(&p),
                None => p,
            };
            terms.insert(*h, v);
        }
    }
    if a.unit != czero {
        for (k, s) in &b.terms {
            let p = s.scale(a.unit);
            let v = match terms.remove(k) {
                Some(acc) => acc.add(&p),
                None => p,
            };
            terms.insert(*k, v);
        }
    }
    Ok(CrossedElement {
        layout: a.layout,
        terms,
        unit: a.unit * b.unit,
        mask: None,
    })
}

/// `(a*)_g = α_g(conj a_{g⁻¹})`, unit conjugated.
pub fn involution<T: Real>(a: &CrossedElement<T>, group: &GroupModel<T>) -> CrossedElement<T> {
    let terms = a
        .terms
        .par_iter()
        .map(|(h, s)| {
            let g = group.inverse(*h);
            (g, act_on_symbol(group, g, &s.conj()))
        })
        .collect();
    CrossedElement {
        layout: a.layout,
        terms,
        unit: a.unit.conj(),
        mask: a.mask.clone(),
    }
}

/// Zeroes every coefficient outside the transverse set and records the mask.
/// An empty set yields an element living on the empty space (its operator is
/// expected to be compact); check [`CrossedElement::mask`] for that case.
pub fn restrict_to_transverse<T: Real>(
    a: &CrossedElement<T>,
    ts: &TransverseSet<T>,
) -> Result<CrossedElement<T>> {
    if ts.layout() != a.layout {
        return Err(GopError::GridMismatch(
            "transverse set and element on different grids".into(),
        ));
    }
    let mask = ts.mask().to_vec();
    let terms = a
        .terms
        .iter()
        .map(|(g, s)| (*g, s.map_cells(|c, z| if mask[c] { z } else { czero() })))
        .collect();
    Ok(CrossedElement {
        layout: a.layout,
        terms,
        unit: a.unit,
        mask: Some(mask),
    })
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    g: i64,
    samples: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ElementRecord {
    dim: usize,
    n_points: usize,
    n_dirs: usize,
    unit: [f64; 2],
    terms: Vec<TermRecord>,
}

impl<T: Real> CrossedElement<T> {
    /// JSON text with the grid, the unit and one sample list per support point.
    pub fn to_json(&self) -> Result<String> {
        let rec = ElementRecord {
            dim: self.layout.dim(),
            n_points: self.layout.torus().n_points(),
            n_dirs: self.layout.n_dirs(),
            unit: [self.unit.re.as_f64(), self.unit.im.as_f64()],
            terms: self
                .terms
                .iter()
                .map(|(g, s)| TermRecord {
                    g: *g,
                    samples: s
                        .samples()
                        .iter()
                        .map(|z| [z.re.as_f64(), z.im.as_f64()])
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&rec).map_err(|e| GopError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ElementRecord =
            serde_json::from_str(text).map_err(|e| GopError::Format(e.to_string()))?;
        let layout = CosphereGrid::new(TorusGrid::new(rec.dim, rec.n_points)?, rec.n_dirs)?;
        let mut terms = Vec::new();
        for t in rec.terms {
            let samples = t
                .samples
                .iter()
                .map(|v| Complex::new(T::lit(v[0]), T::lit(v[1])))
                .collect();
            terms.push((t.g, HomogeneousSymbol::from_samples(layout, samples)?));
        }
        Self::from_terms(
            layout,
            terms,
            Complex::new(T::lit(rec.unit[0]), T::lit(rec.unit[1])),
        )
    }
}
