//! Pointwise verification toolkit for polysymplectic (k-symplectic)
//! Marsden-Weinstein reduction.
//!
//! A polysymplectic structure on a vector space is a family of `k` skew
//! bilinear forms `(ω¹, …, ωᵏ)` whose kernels intersect trivially. This crate
//! provides the linear-algebra layer needed to check, at a single point of a
//! Hamiltonian G-space, everything the reduction procedure asserts:
//!
//! * [`subspace`] — tolerance-controlled subspace arithmetic (rank, kernel,
//!   intersection, sum, complements, equality via principal angles);
//! * [`polyspace`] — polysymplectic vector spaces, k-orthogonal complements,
//!   the musical maps `♭_ω`/`♯_ω`, quotient forms;
//! * [`liealg`] — structure-constant Lie algebras, `ad*`, the coadjoint and
//!   k-coadjoint actions, `so(3)` with the Rodrigues exponential;
//! * [`reduction`] — level-set and orbit tangents, the orbit-momentum lemma,
//!   the failed double-complement identity, the two reduction conditions and
//!   the reduced form family on the quotient;
//! * [`models`] — concrete G-spaces: covelocity bundles, products of
//!   symplectic factors, the group model `G × (g*)ᵏ`, k-coadjoint orbits and
//!   the `SO(3)` orbit classification;
//! * [`dynamics`] — Hamiltonian k-vector fields, minimum-norm solutions of
//!   `Σ_A i_{X_A}ω^A = dH`, reduced orbit flows, RK4/Munthe-Kaas integration
//!   and conservation monitoring.
//!
//! All checks are pointwise: quotient manifolds are represented by orthonormal
//! complements inside tangent spaces, never materialized globally.

// Structure-constant and block-matrix code reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod dynamics;
pub mod error;
pub mod liealg;
pub mod models;
pub mod polyspace;
pub mod reduction;
pub mod subspace;

pub use error::{Error, Result};
pub use subspace::{Subspace, Tolerance};

/// Scalar type for all core computations (`f32` or `f64`).
pub trait Real: nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy {
    /// Converts an `f64` constant into `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Lossy view of this scalar as `f64`, for diagnostics.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T> Real for T where
    T: nalgebra::RealField + num_traits::FromPrimitive + num_traits::ToPrimitive + Copy
{
}

/// Concrete `f64` aliases for the main domain types.
pub type Subspace64 = subspace::Subspace<f64>;
pub type Tolerance64 = subspace::Tolerance<f64>;
pub type FormFamily64 = polyspace::FormFamily<f64>;
pub type PolySymplecticSpace64 = polyspace::PolySymplecticSpace<f64>;
pub type LieAlgebraData64 = liealg::LieAlgebraData<f64>;
pub type GroupElementSO364 = liealg::GroupElementSO3<f64>;
pub type GSpaceSnapshot64 = reduction::GSpaceSnapshot<f64>;
pub type ReducedSpace64 = reduction::ReducedSpace<f64>;
