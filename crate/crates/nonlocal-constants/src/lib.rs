//! Nonlocal constants of motion for Lagrangian ODE systems.
//!
//! Given a solution q(t) of the Euler-Lagrange equation of an order-N
//! Lagrangian L(t, q, q', ..., q^(N)) and any smooth one-parameter family of
//! perturbed motions q_lambda(t) with q_0 = q, the quantity
//!
//! ```text
//! sum_{j=1..N} sum_{k=0..j-1} (-1)^k d^k/dt^k (dL/dq^(j)) . delta^(j-k-1)
//!   - integral from t0 to t of dL/dlambda |_{lambda=0} ds
//! ```
//!
//! is constant along the motion, where delta^(j) are the variation jets of
//! the family at lambda = 0. This crate evaluates such constants along
//! numerically integrated trajectories and provides the closed-form first
//! integrals this machinery produces for notable families: energy and the
//! time-shift constant K1 for autonomous Lagrangians, the space-change
//! constant K2 under the rho-condition, the constant-integrand K3, and the
//! exponentially weighted constant for viscously damped systems, with its
//! global-existence estimates.
//!
//! The Pais-Uhlenbeck oscillator catalog entry carries all three K-constants
//! in closed form, so the generic evaluators and the closed forms can
//! oracle-test each other.
//!
//! Start with [`systems`] for ready-made Lagrangians, [`integrate`] to
//! produce trajectories, [`families`] for variations, and [`constants`] for
//! the evaluators. The `examples/` directory has one runnable walk-through
//! per capability; the `nlc` binary drives TOML-configured experiments.

pub mod constants;
pub mod dual;
pub mod error;
pub mod experiment;
pub mod families;
pub mod integrate;
pub mod jet;
pub mod lagrangian;
mod quad;
pub mod stencil;
pub mod systems;
pub mod trajectory;

pub use constants::{
    attach_viscous_quadrature, check_mu_constancy, check_rho_condition, compute_f, energy,
    k1_timeshift, k2_space, k2_space_unchecked, k3_mu, k3_mu_unchecked, monotonicity_check,
    nonlocal_constant_2nd, nonlocal_constant_higher, viscous_constant, MonotonicityReport,
    NonlocalSample, RhoParams,
};
pub use dual::Dual;
pub use error::{Error, Result};
pub use families::{
    exp_timeshift_variation, integrand, rotation_variation, timeshift_variation,
    PerturbationFamily,
};
pub use integrate::{attach_integrand, attach_quadrature, integrate, Direction, IntegratorConfig};
pub use jet::{drift_report, DriftReport, JetState};
pub use lagrangian::{
    el_residual, eval_lagrangian, partial_wrt_jet, total_derivative_along, LagrangianSpec,
};
pub use systems::{
    make_central_force, make_harmonic, make_pais_uhlenbeck, make_viscous, pu_k1, pu_k2, pu_k3,
    Potential, RadialPotential, SystemParams,
};
pub use trajectory::{sample_jets, QuadratureChannel, Trajectory};
