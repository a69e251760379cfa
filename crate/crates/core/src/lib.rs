//! Two-region SIR epidemic solver.
//!
//! Simulates a coupled reaction-diffusion SIR system on two adjacent 1D
//! regions that share a virtual interface. Migration between the regions
//! enters three ways: a volumetric exchange term proportional to the
//! migration probabilities, cross-region infection terms, and a flux
//! condition on the shared interface that switches from Robin (open
//! border) to Neumann (lockdown) when the infected level crosses a
//! threshold. The diffusion coefficient degenerates (vanishes) at the
//! outer domain boundaries, so no population leaks through them.
//!
//! The main solver is a finite-volume discretization with implicit-Euler
//! diffusion and explicit reaction/coupling terms, the two regions being
//! advanced in a Gauss-Seidel sweep. An independent spectral (Galerkin)
//! integrator over per-region sine modes, stepped with classical RK4,
//! serves as a cross-check oracle.

// Validation compares as `!(v >= 0.0)` on purpose: NaN must fail the
// check. Index loops mirror the stencil and matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_is_multiple_of)]

pub mod coefficients;
pub mod config;
pub mod fvm;
pub mod galerkin;
pub mod io;
pub mod metrics;
pub mod model;
pub mod policy;
pub mod reaction;
pub mod stepper;
pub mod sweep;

pub use config::{parse_config, parse_config_str, serialize_config};
pub use model::{
    validate_config, AlphaForm, Compartment, CrossDiffusion, EpidemicParams, InitialConditions,
    LockdownSignal, Region, RegionState, SigmaForm, SimulationConfig, TwoRegionGrid,
};
pub use stepper::{run_simulation, SimulationRecord};
