use std::fmt;
use std::sync::Arc;

use super::PhasePoint;
use crate::scalar::Real;

pub type MapFn<T> = Arc<dyn Fn(&PhasePoint<T>) -> PhasePoint<T> + Send + Sync>;

/// Jacobian of a map of `T*M` in the ordering `(x_0.., p_0..)` for rows
/// (outputs) and columns (inputs); only the leading `2·dim` block is used.
pub type Jacobian<T> = [[T; 4]; 4];

type JacobianFn<T> = Arc<dyn Fn(&PhasePoint<T>) -> Jacobian<T> + Send + Sync>;

/// Homogeneous canonical transformation of `T*_0 M` with its inverse.
#[derive(Clone)]
pub struct CanonicalMap<T> {
    dim: usize,
    descriptor: String,
    forward: MapFn<T>,
    inverse: MapFn<T>,
    jacobian: Option<JacobianFn<T>>,
}

impl<T> fmt::Debug for CanonicalMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CanonicalMap")
            .field("dim", &self.dim)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

/// Central-difference step used for every Jacobian: `1e-5 (1 + |p|)`.
pub fn fd_step<T: Real>(m: &PhasePoint<T>) -> T {
    T::lit(1e-5) * (T::one() + m.p_norm())
}

impl<T: Real> CanonicalMap<T> {
    pub fn new(
        dim: usize,
        descriptor: impl Into<String>,
        forward: impl Fn(&PhasePoint<T>) -> PhasePoint<T> + Send + Sync + 'static,
        inverse: impl Fn(&PhasePoint<T>) -> PhasePoint<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            descriptor: descriptor.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            jacobian: None,
        }
    }

    pub fn from_arcs(
        dim: usize,
        descriptor: impl Into<String>,
        forward: MapFn<T>,
        inverse: MapFn<T>,
    ) -> Self {
        Self {
            dim,
            descriptor: descriptor.into(),
            forward,
            inverse,
            jacobian: None,
        }
    }

    /// Attaches an exact Jacobian, replacing the finite-difference fallback.
    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&PhasePoint<T>) -> Jacobian<T> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, "identity", |m| *m, |m| *m)
    }

    /// `(x, p) ↦ (x + c, p)`.
    pub fn translation(c: [T; 2], dim: usize) -> Self {
        Self::new(
            dim,
            format!("translation({},{})", c[0].as_f64(), c[1].as_f64()),
            move |m| PhasePoint::new([m.x[0] + c[0], m.x[1] + c[1]], m.p),
            move |m| PhasePoint::new([m.x[0] - c[0], m.x[1] - c[1]], m.p),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    #[inline]
    pub fn apply(&self, m: &PhasePoint<T>) -> PhasePoint<T> {
        (self.forward)(m)
    }

    #[inline]
    pub fn apply_inverse(&self, m: &PhasePoint<T>) -> PhasePoint<T> {
        (self.inverse)(m)
    }

    pub fn inverse(&self) -> Self {
        Self {
            dim: self.dim,
            descriptor: format!("inverse({})", self.descriptor),
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
            jacobian: None,
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let (f1, f2) = (self.forward.clone(), other.forward.clone());
        let (i1, i2) = (self.inverse.clone(), other.inverse.clone());
        Self {
            dim: self.dim,
            descriptor: format!("{}∘{}", self.descriptor, other.descriptor),
            forward: Arc::new(move |m| f1(&f2(m))),
            inverse: Arc::new(move |m| i2(&i1(m))),
            jacobian: None,
        }
    }

    /// Jacobian at `m`; exact if attached, else central differences with
    /// step [`fd_step`].
    pub fn jacobian(&self, m: &PhasePoint<T>) -> Jacobian<T> {
        if let Some(j) = &self.jacobian {
            return j(m);
        }
        let d = self.dim;
        let h = fd_step(m);
        let two_h = h + h;
        let mut jac = [[T::zero(); 4]; 4];
        for col in 0..2 * d {
            let mut plus = *m;
            let mut minus = *m;
            if col < d {
                plus.x[col] += h;
                minus.x[col] -= h;
            } else {
                plus.p[col - d] += h;
                minus.p[col - d] -= h;
            }
            let (fp, fm) = (self.apply(&plus), self.apply(&minus));
            for row in 0..2 * d {
                let (a, b) = if row < d {
                    (fp.x[row], fm.x[row])
                } else {
                    (fp.p[row - d], fm.p[row - d])
                };
                jac[row][col] = (a - b) / two_h;
            }
        }
        jac
    }

    /// Largest `|inverse(forward(m)) − m|` over the samples.
    pub fn round_trip_error(&self, samples: &[PhasePoint<T>]) -> T {
        samples
            .iter()
            .map(|m| self.apply_inverse(&self.apply(m)).distance(m))
            .fold(T::zero(), |a, b| a.max(b))
    }
}

/// Residuals of the condition that the map preserves the 1-form `p dx`:
/// `Σ_j g_pj ∂g_xj/∂p_k = 0` and `Σ_j g_pj ∂g_xj/∂x_k = p_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hom4Report<T> {
    /// `max |Σ_j g_pj ∂g_xj/∂p_k|`.
    pub p_residual: T,
    /// `max |Σ_j g_pj ∂g_xj/∂x_k − p_k|`.
    pub x_residual: T,
    pub samples: usize,
}

impl<T: Real> Hom4Report<T> {
    pub fn max(&self) -> T {
        self.p_residual.max(self.x_residual)
    }
}

pub fn check_homogeneous_canonical<T: Real>(
    g: &CanonicalMap<T>,
    samples: &[PhasePoint<T>],
) -> Hom4Report<T> {
    let d = g.dim();
    let mut p_res = T::zero();
    let mut x_res = T::zero();
    for m in samples {
        let img = g.apply(m);
        let jac = g.jacobian(m);
        for k in 0..d {
            let mut sp = T::zero();
            let mut sx = T::zero();
            for j in 0..d {
                sp += img.p[j] * jac[j][d + k];
                sx += img.p[j] * jac[j][k];
            }
            p_res = p_res.max(sp.mag());
            x_res = x_res.max((sx - m.p[k]).mag());
        }
    }
    Hom4Report {
        p_residual: p_res,
        x_residual: x_res,
        samples: samples.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<PhasePoint<f64>> {
        (0..20)
            .map(|i| {
                let t = i as f64 * 0.37;
                PhasePoint::new(
                    [t.sin() * 2.0, t.cos()],
                    [1.0 + t.cos(), (2.0 * t).sin() - 0.3],
                )
            })
            .collect()
    }

    #[test]
    fn identity_and_translation_preserve_one_form() {
        let id = CanonicalMap::<f64>::identity(2);
        assert!(check_homogeneous_canonical(&id, &samples()).max() <= 1e-9);
        let tr = CanonicalMap::<f64>::translation([0.3, -1.2], 2);
        assert!(check_homogeneous_canonical(&tr, &samples()).max() <= 1e-9);
        assert!(tr.round_trip_error(&samples()) <= 1e-12);
    }

    #[test]
    fn non_canonical_map_is_detected() {
        // p ↦ 2p rescales the 1-form
        let bad = CanonicalMap::<f64>::new(
            1,
            "bad",
            |m| PhasePoint::new1(m.x[0], 2.0 * m.p[0]),
            |m| PhasePoint::new1(m.x[0], 0.5 * m.p[0]),
        );
        let s = vec![PhasePoint::new1(0.2, 1.0)];
        assert!(check_homogeneous_canonical(&bad, &s).x_residual > 0.5);
    }

    #[test]
    fn compose_and_inverse() {
        let a = CanonicalMap::<f64>::translation([0.5, 0.0], 1);
        let b = CanonicalMap::<f64>::translation([0.25, 0.0], 1);
        let c = a.compose(&b);
        let m = PhasePoint::new1(1.0, -1.0);
        assert!((c.apply(&m).x[0] - 1.75).abs() < 1e-15);
        assert!((c.inverse().apply(&m).x[0] - 0.25).abs() < 1e-15);
    }
}
