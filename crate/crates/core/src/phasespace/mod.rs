//! Cotangent bundle `T*_0 M` over flat tori: symbols, Hamiltonians,
//! homogeneous canonical transformations and the transverse cotangent space.

mod canonical;
mod grid;
mod hamiltonian;
mod symbol;
mod transverse;

pub use canonical::{
    check_homogeneous_canonical, fd_step, CanonicalMap, Hom4Report, Jacobian, MapFn,
};
pub use grid::{CosphereGrid, TorusGrid};
pub use hamiltonian::{
    hamiltonian_vector_field, radial_pairing, Hamiltonian, Tangent, VectorField,
};
pub use symbol::HomogeneousSymbol;
pub use transverse::{
    check_invariance, conormal_orbit_check, transverse_zero_set, transverse_zero_set_by_pairing,
    ConormalReport, InvarianceReport, TransverseSet,
};

use crate::error::{GopError, Result};
use crate::scalar::{norm2, Real};

/// A point `(x, p)` of the cotangent bundle. Components beyond the torus
/// dimension are kept at zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub x: [T; 2],
    pub p: [T; 2],
}

impl<T: Real> PhasePoint<T> {
    pub fn new(x: [T; 2], p: [T; 2]) -> Self {
        Self { x, p }
    }

    pub fn new1(x: T, p: T) -> Self {
        Self {
            x: [x, T::zero()],
            p: [p, T::zero()],
        }
    }

    pub fn p_norm(&self) -> T {
        norm2(&self.p, 2)
    }

    /// Fails on the zero section.
    pub fn checked(self) -> Result<Self> {
        if self.p_norm() == T::zero() || !self.p_norm().is_finite() {
            Err(GopError::ZeroCovector)
        } else {
            Ok(self)
        }
    }

    /// Projection to the cosphere, `(x, p / |p|)`.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.checked()?.p_norm();
        Ok(Self {
            x: self.x,
            p: [self.p[0] / n, self.p[1] / n],
        })
    }

    pub fn scale_p(&self, lambda: T) -> Self {
        Self {
            x: self.x,
            p: [self.p[0] * lambda, self.p[1] * lambda],
        }
    }

    /// Euclidean distance in the lifted chart (no periodic wrap).
    pub fn distance(&self, other: &Self) -> T {
        let mut s = T::zero();
        for k in 0..2 {
            let dx = self.x[k] - other.x[k];
            let dp = self.p[k] - other.p[k];
            s += dx * dx + dp * dp;
        }
        s.sqrt()
    }
}

/// A point of the cosphere bundle `S*M`: a torus point and a unit covector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CospherePoint<T> {
    point: PhasePoint<T>,
}

impl<T: Real> CospherePoint<T> {
    /// Normalizes `omega`; rejects the zero covector.
    pub fn new(x: [T; 2], omega: [T; 2]) -> Result<Self> {
        Ok(Self {
            point: PhasePoint::new(x, omega).normalized()?,
        })
    }

    pub fn x(&self) -> [T; 2] {
        self.point.x
    }

    pub fn omega(&self) -> [T; 2] {
        self.point.p
    }

    pub fn as_phase_point(&self) -> PhasePoint<T> {
        self.point
    }
}
