//! orbitlab: magnetic geodesic flow and magnetic billiards on the round
//! 3-sphere and its cyclic lens-space quotients.
//!
//! The library provides, as pure functions over immutable values:
//!
//! - exact sphere geometry, Hopf coordinates and projection, the contact
//!   form, the lens-space action and adapted complex structures ([`geom`]);
//! - closed-form magnetic geodesics, their conserved quantities, minimal
//!   periods and projected circle radii ([`flow`]);
//! - the reduced integrable system in Hopf coordinates with a confining cap
//!   barrier, quadrature periods and a direct integrator used as a
//!   cross-check oracle ([`reduced`]);
//! - the ideal magnetic billiard on the sphere with two polar caps removed:
//!   reflection law, event-driven tracing, periodic bounce orbits and the
//!   cap-angle estimate ([`billiard`]);
//! - lens-space orbit census machinery ([`lens`]);
//! - the admissible-Hamiltonian pipeline that certifies the capacity lower
//!   bound against the reference value 2 pi ([`capacity`]).
//!
//! Everything is safe to call concurrently; nothing holds interior mutable
//! state beyond a one-time orientation self-test.

pub mod billiard;
pub mod capacity;
pub mod error;
pub mod flow;
pub mod geom;
pub mod lens;
pub mod numerics;
pub mod reduced;

/// Tolerances used across the crate.
///
/// `TOL_UNIT` guards algebraic identities evaluated on exact inputs;
/// `TOL_ALG` covers composed operations where a few rounding steps stack up.
pub mod tol {
    pub const TOL_UNIT: f64 = 1e-12;
    pub const TOL_ALG: f64 = 1e-10;
    /// Sup-norm budget for closed-form ODE residuals.
    pub const TOL_ODE: f64 = 1e-10;
    /// Agreement between the two orbit representations.
    pub const TOL_EQUIV: f64 = 1e-9;
    /// Closure defect accepted for periodic bounce orbits.
    pub const TOL_CLOSE: f64 = 1e-9;
}

pub use error::{OrbitError, Result};
pub use geom::{
    contact_form, construct_j, hopf_project, zp_action, ComplexStructureJ, HopfCoords,
    MagneticParams, SpherePoint, TangentVector,
};
