//! Numerical workbench for G-operators on flat tori.
//!
//! A G-operator is a finite sum (or a Haar integral over a Lie group)
//! `D = Σ_g Op(a_g) Φ_g` of order-zero pseudodifferential operators composed
//! with quantized canonical transformations. This crate discretizes such
//! operators on `T¹` and `T²`, computes their symbols in the crossed product
//! `C(S*M) ⋊ G`, the trajectory symbols at points of the cosphere bundle, the
//! transverse cotangent space, numerical wavefront sets and finite-section
//! Fredholm indices.
//!
//! All numerics are generic over [`Real`] (`f32`, `f64`); the `f64` aliases
//! below are what the CLI and the acceptance suite use.

pub mod crossed;
pub mod error;
pub mod fredholm;
pub mod hamflow;
pub mod microlocal;
pub mod phasespace;
pub mod quantize;
pub mod scalar;
pub mod symbols;

pub(crate) mod spectral;

pub use error::{GopError, Result};
pub use scalar::{Complex, Real};

pub type Symbol = phasespace::HomogeneousSymbol<f64>;
pub type Point = phasespace::PhasePoint<f64>;
pub type Ham = phasespace::Hamiltonian<f64>;
pub type Map = phasespace::CanonicalMap<f64>;
pub type Transverse = phasespace::TransverseSet<f64>;
pub type Flow = hamflow::FlowMap<f64>;
pub type Generating = hamflow::GeneratingFunction<f64>;
pub type Operator = quantize::GridOperator<f64>;
pub type Element = crossed::CrossedElement<f64>;
pub type Group = crossed::GroupModel<f64>;
pub type C64 = Complex<f64>;
