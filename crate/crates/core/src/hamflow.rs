//! Homogeneous Hamiltonian flows and their generating functions.
//!
//! For a near-identity flow `g = exp(tV_H)` the graph of `g` is cut out by
//! `p = ∂S/∂x`, `x' = ∂S/∂p'` with `S(x, p') = z · p'`, where `z` is the
//! starting point whose trajectory with initial covector `p'` reaches `x`
//! at time `t`.

use crate::error::{GopError, Result};
use crate::phasespace::{fd_step, CanonicalMap, Hamiltonian, PhasePoint};
use crate::scalar::{dot, norm2, Real};

/// Default bound on `|t|` for the near-identity regime.
pub const DEFAULT_T_MAX: f64 = 0.25;
/// Default RK4 step.
pub const DEFAULT_STEP: f64 = 0.01;
const SINGULAR_P: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 50;

fn rhs<T: Real>(h: &Hamiltonian<T>, m: &PhasePoint<T>, time: T) -> Result<PhasePoint<T>> {
    let n = m.p_norm();
    if !(n >= T::lit(SINGULAR_P)) {
        return Err(GopError::Singularity {
            time: time.as_f64(),
            norm: n.as_f64(),
        });
    }
    let gx = h.grad_x(m);
    Ok(PhasePoint::new(h.grad_p(m), [-gx[0], -gx[1]]))
}

fn axpy<T: Real>(m: &PhasePoint<T>, a: T, d: &PhasePoint<T>) -> PhasePoint<T> {
    PhasePoint::new(
        [m.x[0] + a * d.x[0], m.x[1] + a * d.x[1]],
        [m.p[0] + a * d.p[0], m.p[1] + a * d.p[1]],
    )
}

/// Fixed-step RK4 trajectory of `ẋ = ∂H/∂p, ṗ = −∂H/∂x`, invoking
/// `visit(time, state)` at every node including both ends.
fn rk4<T: Real>(
    h: &Hamiltonian<T>,
    t: T,
    start: &PhasePoint<T>,
    step: T,
    mut visit: impl FnMut(T, &PhasePoint<T>),
) -> Result<PhasePoint<T>> {
    if !(step > T::zero()) {
        return Err(GopError::Usage("integrator step must be positive".into()));
    }
    let mut m = *start;
    visit(T::zero(), &m);
    if t == T::zero() {
        return Ok(m);
    }
    let n_steps = (t.mag() / step).ceil().as_f64().max(1.0) as usize;
    let dt = t / T::from_index(n_steps);
    let half = dt * T::lit(0.5);
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    for i in 0..n_steps {
        let t0 = dt * T::from_index(i);
        let k1 = rhs(h, &m, t0)?;
        let k2 = rhs(h, &axpy(&m, half, &k1), t0 + half)?;
        let k3 = rhs(h, &axpy(&m, half, &k2), t0 + half)?;
        let k4 = rhs(h, &axpy(&m, dt, &k3), t0 + dt)?;
        for k in 0..2 {
            m.x[k] += sixth * (k1.x[k] + two * k2.x[k] + two * k3.x[k] + k4.x[k]);
            m.p[k] += sixth * (k1.p[k] + two * k2.p[k] + two * k3.p[k] + k4.p[k]);
        }
        visit(t0 + dt, &m);
    }
    let n = m.p_norm();
    if !(n >= T::lit(SINGULAR_P)) {
        return Err(GopError::Singularity {
            time: t.as_f64(),
            norm: n.as_f64(),
        });
    }
    Ok(m)
}

fn check_time<T: Real>(t: T, t_max: T) -> Result<()> {
    if t.mag() > t_max {
        return Err(GopError::Usage(format!(
            "flow time {} exceeds the near-identity bound {}",
            t.as_f64(),
            t_max.as_f64()
        )));
    }
    Ok(())
}

/// Endpoint of the Hamiltonian trajectory from `start` after time `t`.
pub fn integrate_flow<T: Real>(
    h: &Hamiltonian<T>,
    t: T,
    start: &PhasePoint<T>,
    step: T,
) -> Result<PhasePoint<T>> {
    integrate_flow_bounded(h, t, start, step, T::lit(DEFAULT_T_MAX))
}

/// [`integrate_flow`] with an explicit near-identity bound.
pub fn integrate_flow_bounded<T: Real>(
    h: &Hamiltonian<T>,
    t: T,
    start: &PhasePoint<T>,
    step: T,
    t_max: T,
) -> Result<PhasePoint<T>> {
    check_time(t, t_max)?;
    start.checked()?;
    rk4(h, t, start, step, |_, _| {})
}

/// `S(z, 0) + ∫ (p dx − H dt)` along the trajectory from `(z, p')`, minus
/// `z · p'`, i.e. the action integral alone (trapezoidal in time).
pub fn action_integral<T: Real>(
    h: &Hamiltonian<T>,
    start: &PhasePoint<T>,
    t: T,
    step: T,
) -> Result<T> {
    start.checked()?;
    let dim = h.dim();
    let mut acc = T::zero();
    let mut prev: Option<(T, T)> = None;
    rk4(h, t, start, step, |time, m| {
        let integrand = dot(&m.p, &h.grad_p(m), dim) - h.value(m);
        if let Some((t0, f0)) = prev {
            acc += (time - t0) * (f0 + integrand) * T::lit(0.5);
        }
        prev = Some((time, integrand));
    })?;
    Ok(acc)
}

/// Time-`t` map of a homogeneous Hamiltonian flow.
#[derive(Clone, Debug)]
pub struct FlowMap<T> {
    hamiltonian: Hamiltonian<T>,
    time: T,
    step: T,
}

impl<T: Real> FlowMap<T> {
    pub fn new(hamiltonian: Hamiltonian<T>, time: T, step: T) -> Result<Self> {
        Self::with_bound(hamiltonian, time, step, T::lit(DEFAULT_T_MAX))
    }

    pub fn with_bound(hamiltonian: Hamiltonian<T>, time: T, step: T, t_max: T) -> Result<Self> {
        check_time(time, t_max)?;
        if !(step > T::zero()) {
            return Err(GopError::Usage("integrator step must be positive".into()));
        }
        Ok(Self {
            hamiltonian,
            time,
            step,
        })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian<T> {
        &self.hamiltonian
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn apply(&self, m: &PhasePoint<T>) -> Result<PhasePoint<T>> {
        m.checked()?;
        rk4(&self.hamiltonian, self.time, m, self.step, |_, _| {})
    }

    pub fn apply_inverse(&self, m: &PhasePoint<T>) -> Result<PhasePoint<T>> {
        m.checked()?;
        rk4(&self.hamiltonian, -self.time, m, self.step, |_, _| {})
    }

    /// The flow as a [`CanonicalMap`]; an integration failure yields a
    /// point with NaN coordinates.
    pub fn as_map(&self) -> CanonicalMap<T> {
        let (f, b) = (self.clone(), self.clone());
        let nan = |m: &PhasePoint<T>| {
            let q = T::zero() / T::zero();
            PhasePoint::new([q; 2], m.p)
        };
        CanonicalMap::new(
            self.hamiltonian.dim(),
            format!(
                "flow[{}](t={})",
                self.hamiltonian.descriptor(),
                self.time.as_f64()
            ),
            move |m| f.apply(m).unwrap_or_else(|_| nan(m)),
            move |m| b.apply_inverse(m).unwrap_or_else(|_| nan(m)),
        )
    }
}

/// Generating function `S(x, p') = z(x, p') · p'` of a near-identity flow.
#[derive(Clone, Debug)]
pub struct GeneratingFunction<T> {
    flow: FlowMap<T>,
}

fn solve_small<T: Real>(jac: &[[T; 2]; 2], rhs: &[T; 2], dim: usize) -> Option<[T; 2]> {
    if dim == 1 {
        if jac[0][0] == T::zero() {
            return None;
        }
        return Some([rhs[0] / jac[0][0], T::zero()]);
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    Some([
        (rhs[0] * jac[1][1] - rhs[1] * jac[0][1]) / det,
        (jac[0][0] * rhs[1] - jac[1][0] * rhs[0]) / det,
    ])
}

impl<T: Real> GeneratingFunction<T> {
    pub fn new(hamiltonian: Hamiltonian<T>, time: T, step: T) -> Result<Self> {
        Ok(Self {
            flow: FlowMap::new(hamiltonian, time, step)?,
        })
    }

    pub fn from_flow(flow: FlowMap<T>) -> Self {
        Self { flow }
    }

    pub fn flow(&self) -> &FlowMap<T> {
        &self.flow
    }

    pub fn time(&self) -> T {
        self.flow.time
    }

    pub fn hamiltonian(&self) -> &Hamiltonian<T> {
        &self.flow.hamiltonian
    }

    fn dim(&self) -> usize {
        self.flow.hamiltonian.dim()
    }

    fn x_of(&self, z: &[T; 2], dir: &[T; 2]) -> Result<[T; 2]> {
        Ok(rk4(
            &self.flow.hamiltonian,
            self.flow.time,
            &PhasePoint::new(*z, *dir),
            self.flow.step,
            |_, _| {},
        )?
        .x)
    }

    /// Solves `x(z, t; p') = x` for `z` by damped Newton iteration seeded at
    /// `z = x`; the final residual is at most `1e-10`.
    pub fn base_point(&self, x: &[T; 2], p: &[T; 2]) -> Result<[T; 2]> {
        let dim = self.dim();
        let pn = norm2(p, dim);
        if pn == T::zero() {
            return Err(GopError::ZeroCovector);
        }
        let dir = [p[0] / pn, p[1] / pn];
        if self.flow.time == T::zero() {
            return Ok(*x);
        }
        let resid = |z: &[T; 2]| -> Result<([T; 2], T)> {
            let xz = self.x_of(z, &dir)?;
            let r = [xz[0] - x[0], xz[1] - x[1]];
            Ok((r, norm2(&r, dim)))
        };
        let target = T::lit(1e-13) * (T::one() + norm2(x, dim));
        let mut z = *x;
        let (mut r, mut rn) = resid(&z)?;
        let mut iterations = 0;
        while rn > target && iterations < NEWTON_MAX_ITER {
            iterations += 1;
            let hz = T::lit(1e-6) * (T::one() + norm2(&z, dim));
            let mut jac = [[T::zero(); 2]; 2];
            for k in 0..dim {
                let (mut zp, mut zm) = (z, z);
                zp[k] += hz;
                zm[k] -= hz;
                let (xp, xm) = (self.x_of(&zp, &dir)?, self.x_of(&zm, &dir)?);
                for i in 0..dim {
                    jac[i][k] = (xp[i] - xm[i]) / (hz + hz);
                }
            }
            let delta = solve_small(&jac, &[-r[0], -r[1]], dim).ok_or(GopError::Caustic {
                iterations,
                residual: rn.as_f64(),
            })?;
            let mut lambda = T::one();
            let mut accepted = false;
            for _ in 0..12 {
                let cand = [z[0] + lambda * delta[0], z[1] + lambda * delta[1]];
                let (rc, rcn) = resid(&cand)?;
                if rcn < rn {
                    z = cand;
                    r = rc;
                    rn = rcn;
                    accepted = true;
                    break;
                }
                lambda *= T::lit(0.5);
            }
            if !accepted {
                break;
            }
        }
        if !(rn <= T::lit(1e-10)) {
            return Err(GopError::Caustic {
                iterations,
                residual: rn.as_f64(),
            });
        }
        Ok(z)
    }

    /// `S(x, p')`.
    pub fn evaluate(&self, x: &[T; 2], p: &[T; 2]) -> Result<T> {
        let z = self.base_point(x, p)?;
        Ok(dot(&z, p, self.dim()))
    }

    /// `∂S/∂x` by central differences.
    pub fn grad_x(&self, x: &[T; 2], p: &[T; 2]) -> Result<[T; 2]> {
        let h = fd_step(&PhasePoint::new(*x, *p));
        let mut g = [T::zero(); 2];
        for k in 0..self.dim() {
            let (mut xp, mut xm) = (*x, *x);
            xp[k] += h;
            xm[k] -= h;
            g[k] = (self.evaluate(&xp, p)? - self.evaluate(&xm, p)?) / (h + h);
        }
        Ok(g)
    }

    /// `∂S/∂p'` by central differences.
    pub fn grad_p(&self, x: &[T; 2], p: &[T; 2]) -> Result<[T; 2]> {
        let h = fd_step(&PhasePoint::new(*x, *p));
        let mut g = [T::zero(); 2];
        for k in 0..self.dim() {
            let (mut pp, mut pm) = (*p, *p);
            pp[k] += h;
            pm[k] -= h;
            g[k] = (self.evaluate(x, &pp)? - self.evaluate(x, &pm)?) / (h + h);
        }
        Ok(g)
    }

    /// Same Hamiltonian at a shifted time (bound relaxed for difference stencils).
    fn at_time(&self, time: T) -> Result<Self> {
        let bound = T::lit(DEFAULT_T_MAX).max(self.flow.time.mag()) + T::lit(1e-2);
        Ok(Self {
            flow: FlowMap::with_bound(self.flow.hamiltonian.clone(), time, self.flow.step, bound)?,
        })
    }
}

/// Time step of the Hamilton–Jacobi residual stencil.
pub const HJ_DT: f64 = 1e-4;

/// `max |∂S/∂t + H(x, ∂S/∂x)|` over sample points `(x, p')`.
///
/// The time derivative is a central difference with `dt = 1e-4`, or the
/// second-order one-sided stencil at `t = 0`.
pub fn verify_hamilton_jacobi<T: Real>(
    s: &GeneratingFunction<T>,
    h: &Hamiltonian<T>,
    samples: &[PhasePoint<T>],
) -> Result<T> {
    let dt = T::lit(HJ_DT);
    let t = s.time();
    let mut worst = T::zero();
    if t == T::zero() {
        let (s1, s2) = (s.at_time(dt)?, s.at_time(dt + dt)?);
        for m in samples {
            let st = (-T::lit(3.0) * s.evaluate(&m.x, &m.p)?
                + T::lit(4.0) * s1.evaluate(&m.x, &m.p)?
                - s2.evaluate(&m.x, &m.p)?)
                / (dt + dt);
            let gx = s.grad_x(&m.x, &m.p)?;
            worst = worst.max((st + h.value(&PhasePoint::new(m.x, gx))).mag());
        }
    } else {
        let (sp, sm) = (s.at_time(t + dt)?, s.at_time(t - dt)?);
        for m in samples {
            let st = (sp.evaluate(&m.x, &m.p)? - sm.evaluate(&m.x, &m.p)?) / (dt + dt);
            let gx = s.grad_x(&m.x, &m.p)?;
            worst = worst.max((st + h.value(&PhasePoint::new(m.x, gx))).mag());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphReport<T> {
    /// `max |g_p(x', p') − ∂S/∂x|`.
    pub p_residual: T,
    /// `max |g_x(x', p') − x|` with `x' = ∂S/∂p'`.
    pub x_residual: T,
}

impl<T: Real> GraphReport<T> {
    pub fn max(&self) -> T {
        self.p_residual.max(self.x_residual)
    }
}

/// Checks that `(x, ∂S/∂x, ∂S/∂p', p')` lies on the graph of `g` at the
/// sample points `(x, p')`.
pub fn verify_graph_equations<T: Real>(
    s: &GeneratingFunction<T>,
    g: &CanonicalMap<T>,
    samples: &[PhasePoint<T>],
) -> Result<GraphReport<T>> {
    let dim = g.dim();
    let mut p_res = T::zero();
    let mut x_res = T::zero();
    for m in samples {
        let p = s.grad_x(&m.x, &m.p)?;
        let xprime = s.grad_p(&m.x, &m.p)?;
        let img = g.apply(&PhasePoint::new(xprime, m.p));
        let dp = [img.p[0] - p[0], img.p[1] - p[1]];
        let dx = [img.x[0] - m.x[0], img.x[1] - m.x[1]];
        p_res = p_res.max(norm2(&dp, dim));
        x_res = x_res.max(norm2(&dx, dim));
    }
    Ok(GraphReport {
        p_residual: p_res,
        x_residual: x_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STEP: f64 = 0.01;

    #[test]
    fn translation_flow_is_exact() {
        let h = Hamiltonian::<f64>::linear([1.0, -2.0], 2);
        let m = PhasePoint::new([0.4, 1.0], [0.3, 0.8]);
        let e = integrate_flow(&h, 0.2, &m, STEP).unwrap();
        assert!((e.x[0] - 0.6).abs() < 1e-14 && (e.x[1] - 0.6).abs() < 1e-14);
        assert_eq!(e.p, m.p);
    }

    #[test]
    fn circle_rotation() {
        let h = Hamiltonian::<f64>::abs_p(1);
        let e = integrate_flow(&h, 0.1, &PhasePoint::new1(2.0, 1.0), STEP).unwrap();
        assert!((e.x[0] - 2.1).abs() < 1e-14 && e.p[0] == 1.0);
    }

    #[test]
    fn singular_hamiltonian_conserves_energy() {
        let h = Hamiltonian::<f64>::quadratic_example();
        let m = PhasePoint::new([1.0, 1.0], [1.0, -1.0]);
        let e = integrate_flow(&h, 0.05, &m, STEP).unwrap();
        assert!(h.value(&e).abs() <= 1e-10);
        let fine = integrate_flow(&h, 0.05, &m, STEP / 8.0).unwrap();
        assert!(e.distance(&fine) < 1e-9);
    }

    #[test]
    fn time_bound_and_zero_covector() {
        let h = Hamiltonian::<f64>::abs_p(1);
        assert!(matches!(
            integrate_flow(&h, 0.3, &PhasePoint::new1(0.0, 1.0), STEP),
            Err(GopError::Usage(_))
        ));
        assert_eq!(
            integrate_flow(&h, 0.1, &PhasePoint::new1(0.0, 0.0), STEP),
            Err(GopError::ZeroCovector)
        );
    }

    #[test]
    fn trajectory_hitting_zero_section_is_singular() {
        // ṗ = −p drives p to 1e-9 well before t = 25
        let h = Hamiltonian::point_transformation(
            crate::phasespace::VectorField::new(1, |x: &[f64; 2]| [x[0], 0.0]),
            |_| [[1.0, 0.0], [0.0, 0.0]],
            "dilation",
        );
        let r = integrate_flow_bounded(&h, 25.0, &PhasePoint::new1(1.0, 1.0), 0.05, 30.0);
        assert!(matches!(r, Err(GopError::Singularity { .. })), "{r:?}");
    }

    #[test]
    fn generating_function_examples() {
        let x = [0.7, -0.2];
        let p = [0.6, 0.8];
        let s0 =
            GeneratingFunction::new(Hamiltonian::<f64>::quadratic_example(), 0.0, STEP).unwrap();
        assert_eq!(s0.evaluate(&x, &p).unwrap(), 0.7 * 0.6 - 0.2 * 0.8);

        let v = [0.5, 1.5];
        let s = GeneratingFunction::new(Hamiltonian::<f64>::linear(v, 2), 0.2, STEP).unwrap();
        let expect = (x[0] - 0.2 * v[0]) * p[0] + (x[1] - 0.2 * v[1]) * p[1];
        assert!((s.evaluate(&x, &p).unwrap() - expect).abs() < 1e-12);

        let s = GeneratingFunction::new(Hamiltonian::<f64>::abs_p(1), 0.1, STEP).unwrap();
        assert!((s.evaluate(&[1.3, 0.0], &[2.0, 0.0]).unwrap() - (1.3 - 0.1) * 2.0).abs() < 1e-12);
        assert!(
            (s.evaluate(&[1.3, 0.0], &[-2.0, 0.0]).unwrap() - (1.3 + 0.1) * -2.0).abs() < 1e-12
        );
    }

    #[test]
    fn caustic_is_reported() {
        // x' = x² blows up from x = 3 before t = 1/3; beyond the bound the
        // forward map is not invertible near x.
        let h = Hamiltonian::point_transformation(
            crate::phasespace::VectorField::new(1, |x: &[f64; 2]| [x[0] * x[0] * x[0], 0.0]),
            |x| [[3.0 * x[0] * x[0], 0.0], [0.0, 0.0]],
            "cubic",
        );
        let flow = FlowMap::with_bound(h, -2.0, 0.01, 5.0).unwrap();
        let s = GeneratingFunction::from_flow(flow);
        assert!(matches!(
            s.evaluate(&[3.0, 0.0], &[1.0, 0.0]),
            Err(GopError::Caustic { .. } | GopError::Singularity { .. })
        ));
    }
}
