use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    quantize_canonical, quantize_symbol, resample_density, shift_operator, unitarize,
    weighted_shift, AmplitudeFamily, GridOperator,
};
use crate::crossed::{CrossedElement, GroupModel};
use crate::error::{GopError, Result};
use crate::hamflow::{FlowMap, GeneratingFunction, DEFAULT_T_MAX};
use crate::phasespace::{Hamiltonian, TorusGrid};
use crate::scalar::{Complex, Real};

/// How a group element `g` is represented by an operator `Φ_g`.
#[derive(Clone, Debug)]
pub enum Representation<T: Real> {
    /// `Φ_g = Shift(param(g)·velocity)`.
    Translations { velocity: [T; 2] },
    /// Weighted shifts for a volume density sampled on a grid; other grids
    /// see its band-limited resampling.
    WeightedTranslations { velocity: [T; 2], density: Vec<T> },
    /// Quantized flow `exp(param(g)·unit_time·V_H)`: quantized directly while
    /// the time stays near the identity, as a power of the one-step operator
    /// beyond that.
    Canonical {
        hamiltonian: Hamiltonian<T>,
        unit_time: T,
        integrator_step: T,
        amplitude: AmplitudeFamily<T>,
        unitarize: bool,
    },
    /// User-supplied operators per support point.
    Explicit(BTreeMap<i64, GridOperator<T>>),
}

fn canonical_at<T: Real>(
    h: &Hamiltonian<T>,
    time: T,
    step: T,
    amp: &AmplitudeFamily<T>,
    grid: TorusGrid,
    unitary: bool,
) -> Result<GridOperator<T>> {
    let flow = FlowMap::new(h.clone(), time, step)?;
    let s = GeneratingFunction::from_flow(flow.clone());
    let phi = quantize_canonical(&flow, &s, amp, grid)?;
    if unitary {
        unitarize(&phi)
    } else {
        Ok(phi)
    }
}

impl<T: Real> Representation<T> {
    /// `Φ_g` on `grid`.
    pub fn operator(
        &self,
        g: i64,
        group: &GroupModel<T>,
        grid: TorusGrid,
    ) -> Result<GridOperator<T>> {
        let s = group.parameter(g);
        match self {
            Self::Translations { velocity } => {
                Ok(shift_operator([s * velocity[0], s * velocity[1]], grid))
            }
            Self::WeightedTranslations { velocity, density } => weighted_shift(
                [s * velocity[0], s * velocity[1]],
                &resample_density(density, grid)?,
                grid,
            ),
            Self::Canonical {
                hamiltonian,
                unit_time,
                integrator_step,
                amplitude,
                unitarize,
            } => {
                let time = s * *unit_time;
                if time.mag() <= T::lit(DEFAULT_T_MAX) {
                    return canonical_at(
                        hamiltonian,
                        time,
                        *integrator_step,
                        amplitude,
                        grid,
                        *unitarize,
                    );
                }
                let sign = if g > 0 { 1 } else { -1 };
                let one = group.parameter(sign) * *unit_time;
                if one.mag() > T::lit(DEFAULT_T_MAX) {
                    return Err(GopError::Usage(
                        "unit step of the quantized flow exceeds the near-identity bound".into(),
                    ));
                }
                let step = canonical_at(
                    hamiltonian,
                    one,
                    *integrator_step,
                    amplitude,
                    grid,
                    *unitarize,
                )?;
                let mut acc = step.clone();
                for _ in 1..g.unsigned_abs() {
                    acc = acc.compose(&step)?;
                }
                Ok(acc.with_descriptor(format!("Phi^{g}")))
            }
            Self::Explicit(ops) => {
                let op = ops.get(&group.normalize(g)).ok_or_else(|| {
                    GopError::Usage(format!("no operator supplied for group element {g}"))
                })?;
                if op.grid() != grid {
                    return Err(GopError::GridMismatch(
                        "explicit representation on another grid".into(),
                    ));
                }
                Ok(op.clone())
            }
        }
    }
}

/// `D = u·I + Σ_g w Op(a_g) Φ_g` together with the bound
/// `|u| + Σ_g w ‖Op(a_g)‖ ‖Φ_g‖`.
pub fn assemble_g_operator_with_bound<T: Real>(
    elt: &CrossedElement<T>,
    group: &GroupModel<T>,
    rep: &Representation<T>,
    grid: TorusGrid,
) -> Result<(GridOperator<T>, T)> {
    assemble(elt, group, rep, grid, true)
}

/// `D = u·I + Σ_g w Op(a_g) Φ_g` (a quadrature sum on the line).
pub fn assemble_g_operator<T: Real>(
    elt: &CrossedElement<T>,
    group: &GroupModel<T>,
    rep: &Representation<T>,
    grid: TorusGrid,
) -> Result<GridOperator<T>> {
    Ok(assemble(elt, group, rep, grid, false)?.0)
}

fn assemble<T: Real>(
    elt: &CrossedElement<T>,
    group: &GroupModel<T>,
    rep: &Representation<T>,
    grid: TorusGrid,
    with_bound: bool,
) -> Result<(GridOperator<T>, T)> {
    if elt.layout().torus() != grid {
        return Err(GopError::Usage("crossed element and grid differ".into()));
    }
    let w = group.weight();
    let terms: Vec<(i64, &crate::phasespace::HomogeneousSymbol<T>)> = elt.terms().collect();
    let parts: Vec<Result<(GridOperator<T>, T)>> = terms
        .par_iter()
        .map(|(g, a)| {
            let op = quantize_symbol(a, grid)?;
            let phi = rep.operator(*g, group, grid)?;
            let bound = if with_bound {
                op.op_norm() * phi.op_norm() * w
            } else {
                T::zero()
            };
            Ok((op.compose(&phi)?, bound))
        })
        .collect();
    let unit = elt.unit_value();
    let mut d = GridOperator::identity(grid).scale(unit).into_matrix();
    let mut bound = (unit.re * unit.re + unit.im * unit.im).sqrt();
    let wc = Complex::new(w, T::zero());
    for p in parts {
        let (op, b) = p?;
        d += op.into_matrix() * wc;
        bound += b;
    }
    Ok((GridOperator::new(grid, d, "D")?, bound))
}
