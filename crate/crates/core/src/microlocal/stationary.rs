use std::sync::Arc;

use rayon::prelude::*;

use super::predict::{PairCell, PairSet};
use crate::error::{GopError, Result};
use crate::hamflow::{FlowMap, GeneratingFunction, HJ_DT};
use crate::phasespace::{CosphereGrid, Hamiltonian};
use crate::scalar::{norm2, Real};

type PhaseFn<T> = dyn Fn(&[T; 2], T, &[T; 2]) -> Result<T> + Send + Sync;

/// Phase `Ψ(x, x', t, θ) = S(x, t, θ) − x'·θ` of a Haar-averaged family of
/// Fourier integral operators, with `S` homogeneous of degree one in `θ`.
/// `t` ranges over the sample list; a phase without `t` has an empty list.
#[derive(Clone)]
pub struct GeneratingPhase<T> {
    dim: usize,
    descriptor: String,
    times: Vec<T>,
    s: Arc<PhaseFn<T>>,
}

impl<T: Real> std::fmt::Debug for GeneratingPhase<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratingPhase")
            .field("dim", &self.dim)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl<T: Real> GeneratingPhase<T> {
    pub fn new(
        dim: usize,
        descriptor: impl Into<String>,
        times: Vec<T>,
        s: impl Fn(&[T; 2], T, &[T; 2]) -> Result<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            descriptor: descriptor.into(),
            times,
            s: Arc::new(s),
        }
    }

    /// Phase with no group variable.
    pub fn without_time(
        dim: usize,
        descriptor: impl Into<String>,
        s: impl Fn(&[T; 2], &[T; 2]) -> Result<T> + Send + Sync + 'static,
    ) -> Self {
        Self::new(dim, descriptor, Vec::new(), move |x, _, th| s(x, th))
    }

    /// `S(x, t, θ)` = generating function of `exp(t·V_H)` at each sample time.
    pub fn from_flow(hamiltonian: Hamiltonian<T>, times: Vec<T>, integrator_step: T) -> Self {
        let dim = hamiltonian.dim();
        let desc = format!("flow of {}", hamiltonian.descriptor());
        let bound = times.iter().fold(T::zero(), |a, t| a.max(t.mag())) + T::lit(1e-2);
        Self::new(dim, desc, times, move |x, t, th| {
            let flow = FlowMap::with_bound(hamiltonian.clone(), t, integrator_step, bound)?;
            GeneratingFunction::from_flow(flow).evaluate(x, th)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn eval(&self, x: &[T; 2], t: T, theta: &[T; 2]) -> Result<T> {
        (self.s)(x, t, theta)
    }

    fn d_time(&self, x: &[T; 2], t: T, th: &[T; 2]) -> Result<T> {
        let dt = T::lit(HJ_DT);
        Ok((self.eval(x, t + dt, th)? - self.eval(x, t - dt, th)?) / (dt + dt))
    }

    fn grad(&self, x: &[T; 2], t: T, th: &[T; 2], wrt_x: bool) -> Result<[T; 2]> {
        let e = T::lit(1e-5);
        let mut g = [T::zero(); 2];
        for k in 0..self.dim {
            let (mut a, mut b) = if wrt_x { (*x, *x) } else { (*th, *th) };
            a[k] += e;
            b[k] -= e;
            let (fa, fb) = if wrt_x {
                (self.eval(&a, t, th)?, self.eval(&b, t, th)?)
            } else {
                (self.eval(x, t, &a)?, self.eval(x, t, &b)?)
            };
            g[k] = (fa - fb) / (e + e);
        }
        Ok(g)
    }
}

/// Tolerances of [`stationary_phase_support`].
#[derive(Clone, Copy, Debug)]
pub struct StationaryOptions<T> {
    /// `|∂_t S| ≤ time_tol` counts as stationary (dimension 2 also accepts
    /// the smaller of two neighbouring directions across a sign change).
    pub time_tol: T,
    /// Homogeneity and nondegeneracy tolerance.
    pub check_tol: T,
}

impl<T: Real> Default for StationaryOptions<T> {
    fn default() -> Self {
        Self {
            time_tol: T::lit(1e-6),
            check_tol: T::lit(1e-6),
        }
    }
}

/// Sampled critical set of the phase, mapped to `WF'`: for base points `x`,
/// sample times `t` and grid directions `θ` where the amplitude is on and
/// `∂_t S = 0`, emits `(x, ∂_x S; x', θ)` with `x'` the grid cell nearest to
/// `∂_θ S`.
///
/// Fails with a domain error if `S` is not homogeneous of degree one in `θ`
/// or if `∂_x S` vanishes at a critical point.
pub fn stationary_phase_support<T: Real>(
    phase: &GeneratingPhase<T>,
    amplitude: &(dyn Fn(&[T; 2], T, &[T; 2]) -> bool + Sync),
    layout: CosphereGrid,
    opts: StationaryOptions<T>,
) -> Result<PairSet> {
    if phase.dim() != layout.dim() {
        return Err(GopError::GridMismatch(
            "phase and grid dimensions differ".into(),
        ));
    }
    let torus = layout.torus();
    let nd = layout.n_dirs();
    let times: Vec<Option<T>> = if phase.times().is_empty() {
        vec![None]
    } else {
        phase.times().iter().map(|t| Some(*t)).collect()
    };
    let tval = |t: Option<T>| t.unwrap_or(T::zero());

    // homogeneity on a few samples
    let x0 = torus.point::<T>(0);
    for &t in &times {
        for d in 0..nd {
            let th = layout.direction::<T>(d);
            let s1 = phase.eval(&x0, tval(t), &th)?;
            let s2 = phase.eval(&x0, tval(t), &[th[0] * T::lit(2.0), th[1] * T::lit(2.0)])?;
            if (s2 - s1 * T::lit(2.0)).mag() > opts.check_tol * (T::one() + s1.mag()) {
                return Err(GopError::Domain(format!(
                    "phase '{}' is not homogeneous of degree one in θ",
                    phase.descriptor()
                )));
            }
        }
    }

    let hits: Vec<Result<Vec<PairCell>>> = (0..torus.len())
        .into_par_iter()
        .map(|j| {
            let x = torus.point::<T>(j);
            let mut out = Vec::new();
            for &t in &times {
                let on: Vec<bool> = (0..nd)
                    .map(|d| amplitude(&x, tval(t), &layout.direction(d)))
                    .collect();
                if !on.iter().any(|b| *b) {
                    continue;
                }
                let crit: Vec<bool> = match t {
                    None => vec![true; nd],
                    Some(tt) => {
                        let f = (0..nd)
                            .map(|d| phase.d_time(&x, tt, &layout.direction(d)))
                            .collect::<Result<Vec<T>>>()?;
                        (0..nd)
                            .map(|d| {
                                if f[d].mag() <= opts.time_tol {
                                    return true;
                                }
                                if layout.dim() == 1 {
                                    return false;
                                }
                                let (prev, next) = (f[(d + nd - 1) % nd], f[(d + 1) % nd]);
                                (f[d] * next < T::zero() && f[d].mag() <= next.mag())
                                    || (f[d] * prev < T::zero() && f[d].mag() < prev.mag())
                            })
                            .collect()
                    }
                };
                for d in (0..nd).filter(|&d| on[d] && crit[d]) {
                    let th = layout.direction::<T>(d);
                    let sx = phase.grad(&x, tval(t), &th, true)?;
                    if norm2(&sx, layout.dim()) < opts.check_tol {
                        return Err(GopError::Domain(format!(
                            "phase '{}' is degenerate: ∂ₓS vanishes at a critical point",
                            phase.descriptor()
                        )));
                    }
                    let st = phase.grad(&x, tval(t), &th, false)?;
                    out.push(PairCell {
                        x: torus.multi_index(j),
                        xp: torus.nearest_cell(&st),
                        p: layout.nearest_direction(&sx),
                        pp: d,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut set = PairSet::new(layout);
    for h in hits {
        for c in h? {
            set.insert(c);
        }
    }
    Ok(set)
}
