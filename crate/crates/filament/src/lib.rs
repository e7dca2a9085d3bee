//! Numerical laboratory for two reduced models of vorticity growth at a
//! boundary stagnation point.
//!
//! The crate implements, audits, and diagnoses two ordinary-differential
//! reductions of an axisymmetric flow near the intersection of its symmetry
//! axis with a solid boundary:
//!
//! * **Profile model** ([`profile`], fed by [`quadrature`]) — an affine front
//!   profile `G(y) = A - B*y` whose intercept and slope grow under two
//!   nonlocal integrals of the front itself.  Despite double-exponential
//!   growth of the slope, every trajectory exists globally; the module
//!   integrates trajectories, locates the regime transition, and audits the
//!   inequalities that force global existence.
//! * **Boundary layer model** ([`boundary_layer`]) — a Lagrangian particle
//!   system for a vorticity patch hugging the boundary, coupled through a
//!   single Biot-Savart-type integral.  Here the feedback closes into a
//!   Riccati-type law and the solution blows up in finite time; the module
//!   simulates the patch, audits the structural inequalities of the blow-up
//!   mechanism, and extrapolates the blow-up time.
//!
//! [`diagnostics`] holds the shared time-series container and the regression
//! tools (power-law exponents, boundedness windows, blow-up extrapolation)
//! used to turn raw runs into the quantitative claims above.
//!
//! Everything is deterministic: given identical inputs, runs produce
//! bit-identical output regardless of thread count.

pub mod boundary_layer;
pub mod diagnostics;
pub mod profile;
pub mod quadrature;

pub mod guide;
