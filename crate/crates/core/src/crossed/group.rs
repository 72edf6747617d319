use serde::{Deserialize, Serialize};

use crate::error::{GopError, Result};
use crate::hamflow::FlowMap;
use crate::phasespace::{CanonicalMap, Hamiltonian, PhasePoint};
use crate::scalar::Real;

/// The acting group. Elements are integers in every case: residues for
/// `ℤ/n`, themselves for `ℤ`, and lattice points `t = kτ` for `ℝ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    Cyclic {
        order: u32,
    },
    Integers,
    /// `ℝ` sampled on `τℤ ∩ [−window·τ, window·τ]` with Haar weight `τ`.
    Line {
        tau: f64,
        window: u32,
    },
}

/// How the group acts on `T*_0 M`.
#[derive(Clone, Debug)]
pub enum Action<T: Real> {
    Trivial,
    /// `x ↦ x + param(g)·velocity`.
    Translation {
        velocity: [T; 2],
    },
    /// Powers of one homogeneous canonical map.
    Generator(CanonicalMap<T>),
    /// `exp(param(g)·unit_time·V_H)`, realized as powers of the unit step.
    HamiltonianFlow {
        hamiltonian: Hamiltonian<T>,
        unit_time: T,
        integrator_step: T,
    },
}

#[derive(Clone, Debug)]
pub struct GroupModel<T: Real> {
    kind: GroupKind,
    action: Action<T>,
    dim: usize,
    step_map: Option<CanonicalMap<T>>,
}

impl<T: Real> GroupModel<T> {
    pub fn new(kind: GroupKind, action: Action<T>, dim: usize) -> Result<Self> {
        match kind {
            GroupKind::Cyclic { order } if order == 0 => {
                return Err(GopError::Usage(
                    "cyclic group order must be positive".into(),
                ))
            }
            GroupKind::Line { tau, window } if !(tau > 0.0) || window == 0 => {
                return Err(GopError::Usage(
                    "line group needs tau > 0 and a nonempty window".into(),
                ))
            }
            _ => {}
        }
        let step_map = match &action {
            Action::Trivial | Action::Translation { .. } => None,
            Action::Generator(g) => Some(g.clone()),
            Action::HamiltonianFlow {
                hamiltonian,
                unit_time,
                integrator_step,
            } => {
                let scale = match kind {
                    GroupKind::Line { tau, .. } => T::lit(tau),
                    _ => T::one(),
                };
                Some(
                    FlowMap::new(hamiltonian.clone(), *unit_time * scale, *integrator_step)?
                        .as_map(),
                )
            }
        };
        Ok(Self {
            kind,
            action,
            dim,
            step_map,
        })
    }

    /// `ℤ/n` acting by rotations through multiples of `2π/n` along `direction`.
    pub fn cyclic_rotation(order: u32, direction: [T; 2], dim: usize) -> Result<Self> {
        let s = T::two_pi() / T::from_index(order.max(1) as usize);
        Self::new(
            GroupKind::Cyclic { order },
            Action::Translation {
                velocity: [direction[0] * s, direction[1] * s],
            },
            dim,
        )
    }

    /// `ℤ` acting by the rotation `x ↦ x + kα`.
    pub fn integer_rotation(alpha: [T; 2], dim: usize) -> Result<Self> {
        Self::new(
            GroupKind::Integers,
            Action::Translation { velocity: alpha },
            dim,
        )
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn action(&self) -> &Action<T> {
        &self.action
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_trivial_action(&self) -> bool {
        matches!(self.action, Action::Trivial)
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.kind, GroupKind::Line { .. })
    }

    pub fn identity(&self) -> i64 {
        0
    }

    pub fn normalize(&self, g: i64) -> i64 {
        match self.kind {
            GroupKind::Cyclic { order } => g.rem_euclid(order as i64),
            _ => g,
        }
    }

    pub fn compose(&self, a: i64, b: i64) -> i64 {
        self.normalize(a + b)
    }

    pub fn inverse(&self, g: i64) -> i64 {
        self.normalize(-g)
    }

    /// Word length of `g`.
    pub fn radius(&self, g: i64) -> u64 {
        match self.kind {
            GroupKind::Cyclic { order } => {
                let r = g.rem_euclid(order as i64) as u64;
                r.min(order as u64 - r)
            }
            _ => g.unsigned_abs(),
        }
    }

    /// Haar weight of one lattice point (1 for discrete groups).
    pub fn weight(&self) -> T {
        match self.kind {
            GroupKind::Line { tau, .. } => T::lit(tau),
            _ => T::one(),
        }
    }

    /// Real parameter of `g` (`g` itself, or `gτ` on the line).
    pub fn parameter(&self, g: i64) -> T {
        match self.kind {
            GroupKind::Line { tau, .. } => T::from_int(g) * T::lit(tau),
            _ => T::from_int(self.normalize(g)),
        }
    }

    /// Largest admissible `|g|` (the quadrature window on the line).
    pub fn max_element(&self) -> Option<i64> {
        match self.kind {
            GroupKind::Line { window, .. } => Some(window as i64),
            _ => None,
        }
    }

    /// Elements indexing a finite section of half-width `w`; the whole group
    /// for `ℤ/n`.
    pub fn section(&self, w: usize) -> Vec<i64> {
        match self.kind {
            GroupKind::Cyclic { order } => (0..order as i64).collect(),
            _ => (-(w as i64)..=w as i64).collect(),
        }
    }

    /// `act(g)(m)`.
    pub fn apply(&self, g: i64, m: &PhasePoint<T>) -> PhasePoint<T> {
        let g = self.normalize(g);
        match &self.action {
            Action::Trivial => *m,
            Action::Translation { velocity } => {
                let s = self.parameter(g);
                PhasePoint::new([m.x[0] + s * velocity[0], m.x[1] + s * velocity[1]], m.p)
            }
            _ => {
                let step = self
                    .step_map
                    .as_ref()
                    .expect("step map built for generator actions");
                let mut q = *m;
                for _ in 0..g.unsigned_abs() {
                    q = if g > 0 {
                        step.apply(&q)
                    } else {
                        step.apply_inverse(&q)
                    };
                }
                q
            }
        }
    }

    /// Orbit points `act(g)(m)` for `g` in `elements`, computed by stepping
    /// outward from the identity.
    pub fn orbit(&self, m: &PhasePoint<T>, elements: &[i64]) -> Vec<PhasePoint<T>> {
        let step = match (&self.action, &self.step_map) {
            (Action::Generator(_) | Action::HamiltonianFlow { .. }, Some(s)) => s,
            _ => return elements.iter().map(|&g| self.apply(g, m)).collect(),
        };
        let lo = elements.iter().copied().min().unwrap_or(0).min(0);
        let hi = elements.iter().copied().max().unwrap_or(0).max(0);
        let mut fwd = vec![*m];
        for _ in 0..hi {
            let next = step.apply(fwd.last().expect("nonempty"));
            fwd.push(next);
        }
        let mut bwd = vec![*m];
        for _ in 0..(-lo) {
            let next = step.apply_inverse(bwd.last().expect("nonempty"));
            bwd.push(next);
        }
        elements
            .iter()
            .map(|&g| {
                if g >= 0 {
                    fwd[g as usize]
                } else {
                    bwd[(-g) as usize]
                }
            })
            .collect()
    }

    /// `act(g)` as a canonical map.
    pub fn act(&self, g: i64) -> CanonicalMap<T> {
        let (f, b) = (self.clone(), self.clone());
        let ginv = self.inverse(g);
        CanonicalMap::new(
            self.dim,
            format!("act({g})"),
            move |m| f.apply(g, m),
            move |m| b.apply(ginv, m),
        )
    }

    /// `max |act(g)act(h)m − act(gh)m|` over sample points and element pairs.
    pub fn homomorphism_defect(&self, samples: &[PhasePoint<T>], pairs: &[(i64, i64)]) -> T {
        let mut worst = T::zero();
        for m in samples {
            for &(g, h) in pairs {
                let lhs = self.apply(g, &self.apply(h, m));
                let rhs = self.apply(self.compose(g, h), m);
                // x is only defined modulo 2π
                let mut d2 = T::zero();
                for k in 0..self.dim {
                    let ex = crate::scalar::wrap_centered(lhs.x[k] - rhs.x[k]);
                    let ep = lhs.p[k] - rhs.p[k];
                    d2 += ex * ex + ep * ep;
                }
                let d = d2.sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }
}
