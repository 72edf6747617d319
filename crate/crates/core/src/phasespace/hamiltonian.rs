use std::fmt;
use std::sync::Arc;

use super::PhasePoint;
use crate::error::{GopError, Result};
use crate::scalar::{dot, norm2, wrap_centered, Real};

type ScalarFn<T> = Arc<dyn Fn(&PhasePoint<T>) -> T + Send + Sync>;
type GradFn<T> = Arc<dyn Fn(&PhasePoint<T>) -> [T; 2] + Send + Sync>;
type FieldFn<T> = Arc<dyn Fn(&[T; 2]) -> [T; 2] + Send + Sync>;

/// Vector field `X` on the torus generating a point transformation.
#[derive(Clone)]
pub struct VectorField<T> {
    dim: usize,
    field: FieldFn<T>,
}

impl<T: Real> VectorField<T> {
    pub fn new(dim: usize, field: impl Fn(&[T; 2]) -> [T; 2] + Send + Sync + 'static) -> Self {
        Self {
            dim,
            field: Arc::new(field),
        }
    }

    /// Constant field `v`.
    pub fn constant(v: [T; 2], dim: usize) -> Self {
        Self::new(dim, move |_| v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, x: &[T; 2]) -> [T; 2] {
        (self.field)(x)
    }
}

/// Hamiltonian function on `T*_0 M`, positively homogeneous of degree one in `p`.
#[derive(Clone)]
pub struct Hamiltonian<T> {
    dim: usize,
    descriptor: String,
    value: ScalarFn<T>,
    grad_x: GradFn<T>,
    grad_p: GradFn<T>,
    point_field: Option<VectorField<T>>,
}

impl<T> fmt::Debug for Hamiltonian<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("dim", &self.dim)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl<T: Real> Hamiltonian<T> {
    pub fn custom(
        dim: usize,
        descriptor: impl Into<String>,
        value: impl Fn(&PhasePoint<T>) -> T + Send + Sync + 'static,
        grad_x: impl Fn(&PhasePoint<T>) -> [T; 2] + Send + Sync + 'static,
        grad_p: impl Fn(&PhasePoint<T>) -> [T; 2] + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            descriptor: descriptor.into(),
            value: Arc::new(value),
            grad_x: Arc::new(grad_x),
            grad_p: Arc::new(grad_p),
            point_field: None,
        }
    }

    /// `H(x, p) = p · X(x)`, the lift of a vector field; `jacobian(x)[i][k] = ∂X_i/∂x_k`.
    pub fn point_transformation(
        field: VectorField<T>,
        jacobian: impl Fn(&[T; 2]) -> [[T; 2]; 2] + Send + Sync + 'static,
        descriptor: impl Into<String>,
    ) -> Self {
        let dim = field.dim();
        let (f1, f2) = (field.clone(), field.clone());
        Self {
            dim,
            descriptor: descriptor.into(),
            value: Arc::new(move |m| dot(&m.p, &f1.at(&m.x), dim)),
            grad_x: Arc::new(move |m| {
                let j = jacobian(&m.x);
                let mut g = [T::zero(); 2];
                for k in 0..dim {
                    for i in 0..dim {
                        g[k] += m.p[i] * j[i][k];
                    }
                }
                g
            }),
            grad_p: Arc::new(move |m| f2.at(&m.x)),
            point_field: Some(field),
        }
    }

    /// `H = v · p`, generating the translation flow `x ↦ x + t v`.
    pub fn linear(v: [T; 2], dim: usize) -> Self {
        let mut h = Self::point_transformation(
            VectorField::constant(v, dim),
            |_| [[T::zero(); 2]; 2],
            if dim == 1 {
                format!("linear:{}", v[0].as_f64())
            } else {
                format!("linear:{},{}", v[0].as_f64(), v[1].as_f64())
            },
        );
        h.dim = dim;
        h
    }

    /// `H ≡ 0` (trivial group action).
    pub fn zero(dim: usize) -> Self {
        let mut h = Self::linear([T::zero(); 2], dim);
        h.descriptor = "zero".into();
        h
    }

    /// `H = |p|`, the geodesic flow of the flat metric.
    pub fn abs_p(dim: usize) -> Self {
        Self::custom(
            dim,
            "abs-p",
            move |m| norm2(&m.p, dim),
            |_| [T::zero(); 2],
            move |m| {
                let n = norm2(&m.p, dim);
                [m.p[0] / n, m.p[1] / n]
            },
        )
    }

    /// `H = x₁² p₁ + x₂² p₂` on `T²`, with `x` read in the centred chart
    /// `[-π, π)` so that the function is continuous on the torus.
    pub fn quadratic_example() -> Self {
        let field = VectorField::new(2, |x: &[T; 2]| {
            let (a, b) = (wrap_centered(x[0]), wrap_centered(x[1]));
            [a * a, b * b]
        });
        Self::point_transformation(
            field,
            |x| {
                let two = T::lit(2.0);
                [
                    [two * wrap_centered(x[0]), T::zero()],
                    [T::zero(), two * wrap_centered(x[1])],
                ]
            },
            "quadratic-example",
        )
    }

    /// Built-in Hamiltonians by name: `linear:v1[,v2]`, `quadratic-example`,
    /// `abs-p`, `zero`.
    pub fn from_name(name: &str, dim: usize) -> Result<Self> {
        let name = name.trim();
        if let Some(rest) = name.strip_prefix("linear:") {
            let comps: Vec<f64> = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| GopError::Usage(format!("bad linear Hamiltonian `{name}`: {e}")))?;
            if comps.len() != dim {
                return Err(GopError::Usage(format!(
                    "`{name}` has {} components on a {dim}-dimensional torus",
                    comps.len()
                )));
            }
            let v = [
                T::lit(comps[0]),
                if dim == 2 {
                    T::lit(comps[1])
                } else {
                    T::zero()
                },
            ];
            return Ok(Self::linear(v, dim));
        }
        match name {
            "abs-p" => Ok(Self::abs_p(dim)),
            "zero" => Ok(Self::zero(dim)),
            "quadratic-example" if dim == 2 => Ok(Self::quadratic_example()),
            "quadratic-example" => Err(GopError::Usage("quadratic-example lives on T²".into())),
            other => Err(GopError::Usage(format!("unknown Hamiltonian `{other}`"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    #[inline]
    pub fn value(&self, m: &PhasePoint<T>) -> T {
        (self.value)(m)
    }

    #[inline]
    pub fn grad_x(&self, m: &PhasePoint<T>) -> [T; 2] {
        (self.grad_x)(m)
    }

    #[inline]
    pub fn grad_p(&self, m: &PhasePoint<T>) -> [T; 2] {
        (self.grad_p)(m)
    }

    /// The generating vector field when `H = p · X(x)`.
    pub fn point_field(&self) -> Option<&VectorField<T>> {
        self.point_field.as_ref()
    }
}

/// Tangent vector `(dx, dp)` to `T*M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent<T> {
    pub dx: [T; 2],
    pub dp: [T; 2],
}

/// `V_H = (∂H/∂p, −∂H/∂x)`.
pub fn hamiltonian_vector_field<T: Real>(
    h: &Hamiltonian<T>,
    m: &PhasePoint<T>,
) -> Result<Tangent<T>> {
    m.checked()?;
    let gx = h.grad_x(m);
    Ok(Tangent {
        dx: h.grad_p(m),
        dp: [-gx[0], -gx[1]],
    })
}

/// Symplectic pairing of the radial vector `p ∂/∂p` with `V_H`, which is
/// `p · ∂H/∂p`; by the Euler identity it equals `H(x, p)`.
pub fn radial_pairing<T: Real>(h: &Hamiltonian<T>, m: &PhasePoint<T>) -> Result<T> {
    m.checked()?;
    Ok(dot(&m.p, &h.grad_p(m), h.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_field_examples() {
        let h = Hamiltonian::<f64>::linear([1.0, 0.0], 2);
        let v = hamiltonian_vector_field(&h, &PhasePoint::new([0.3, 2.0], [0.1, -4.0])).unwrap();
        assert_eq!(
            v,
            Tangent {
                dx: [1.0, 0.0],
                dp: [0.0, 0.0]
            }
        );

        let q = Hamiltonian::<f64>::quadratic_example();
        let v = hamiltonian_vector_field(&q, &PhasePoint::new([1.0, 1.0], [1.0, -1.0])).unwrap();
        assert!((v.dx[0] - 1.0).abs() < 1e-15 && (v.dx[1] - 1.0).abs() < 1e-15);
        assert!((v.dp[0] + 2.0).abs() < 1e-15 && (v.dp[1] - 2.0).abs() < 1e-15);

        let a = Hamiltonian::<f64>::abs_p(1);
        let v = hamiltonian_vector_field(&a, &PhasePoint::new1(0.5, 1.0)).unwrap();
        assert_eq!((v.dx[0], v.dp[0]), (1.0, 0.0));
    }

    #[test]
    fn radial_pairing_examples() {
        let h = Hamiltonian::<f64>::linear([0.0, 1.0], 2);
        assert_eq!(
            radial_pairing(&h, &PhasePoint::new([0.0, 0.0], [3.0, 4.0])).unwrap(),
            4.0
        );
        let q = Hamiltonian::<f64>::quadratic_example();
        assert_eq!(
            radial_pairing(&q, &PhasePoint::new([1.0, 1.0], [1.0, -1.0])).unwrap(),
            0.0
        );
        let a = Hamiltonian::<f64>::abs_p(1);
        assert_eq!(
            radial_pairing(&a, &PhasePoint::new1(2.0, -1.0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn zero_covector_rejected() {
        let h = Hamiltonian::<f64>::abs_p(2);
        let z = PhasePoint::new([0.1, 0.2], [0.0, 0.0]);
        assert_eq!(
            hamiltonian_vector_field(&h, &z),
            Err(GopError::ZeroCovector)
        );
        assert_eq!(radial_pairing(&h, &z), Err(GopError::ZeroCovector));
    }

    #[test]
    fn names() {
        assert_eq!(
            Hamiltonian::<f64>::from_name("linear:1,0", 2)
                .unwrap()
                .descriptor(),
            "linear:1,0"
        );
        assert!(Hamiltonian::<f64>::from_name("linear:1,0", 1).is_err());
        assert!(Hamiltonian::<f64>::from_name("quadratic-example", 1).is_err());
        assert!(Hamiltonian::<f64>::from_name("bogus", 1).is_err());
    }
}
