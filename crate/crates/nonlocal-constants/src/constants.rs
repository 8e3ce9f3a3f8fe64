//! Nonlocal constants of motion and the closed-form first integrals built
//! from them: energy, the time-shift constant K1, the space-change constant
//! K2 with its rho-condition, the constant-integrand constant K3, and the
//! viscous-dissipation constant with its monotonicity estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{integrand, PerturbationFamily};
use crate::integrate::attach_integrand;
use crate::jet::JetState;
use crate::lagrangian::{
    eval_lagrangian, partial_wrt_jet, total_derivative_along, LagrangianSpec,
};
use crate::stencil;
use crate::systems::{dot, norm_sq, Potential};
use crate::trajectory::Trajectory;

/// Hard-validation threshold for the rho-condition spot check.
pub const RHO_CHECK_TOL: f64 = 1e-3;
/// Hard-validation threshold for mu-constancy.
pub const MU_CHECK_TOL: f64 = 1e-5;
/// Per-step tolerance for the monotonicity check.
const MONOTONE_SLACK: f64 = 1e-9;

/// One evaluation of a nonlocal constant: the boundary term, the
/// accumulated integral term I(t), and their difference (the quantity the
/// theorems assert constant).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlocalSample {
    pub t: f64,
    pub boundary_term: f64,
    pub integral_term: f64,
    pub value: f64,
}

impl NonlocalSample {
    fn new(t: f64, boundary_term: f64, integral_term: f64) -> Self {
        NonlocalSample {
            t,
            boundary_term,
            integral_term,
            value: boundary_term - integral_term,
        }
    }
}

/// Constant parameters rho_1..rho_N of the space-change condition
/// dL/dq^(i) = rho_i d^i/dt^i dL/dq.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoParams {
    pub rho: Vec<f64>,
}

impl RhoParams {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("rho parameters"));
        }
        Ok(RhoParams { rho })
    }

    /// The parameters satisfied by the Pais-Uhlenbeck Lagrangian:
    /// rho_1 = -(w1^2 + w2^2) / (w1^2 w2^2), rho_2 = 1 / (w1^2 w2^2).
    pub fn pais_uhlenbeck(w1: f64, w2: f64) -> Self {
        let wp = w1 * w1 * w2 * w2;
        RhoParams {
            rho: vec![-(w1 * w1 + w2 * w2) / wp, 1.0 / wp],
        }
    }
}

/// Second-order (N = 1) nonlocal constant of motion:
/// dL/dq' . delta^(0) - I(t), with I the attached family quadrature.
pub fn nonlocal_constant_2nd(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
    t: f64,
) -> Result<NonlocalSample> {
    if spec.order() != 1 {
        return Err(Error::Order {
            required: 1,
            actual: spec.order(),
        });
    }
    let state = traj.sample_jets(t)?;
    let p = partial_wrt_jet(spec, &state, 1)?;
    let delta = fam.variation(traj, t, 0)?;
    let boundary = dot(&p, &delta[0]);
    let integral = traj.integral_at(t)?;
    Ok(NonlocalSample::new(t, boundary, integral))
}

/// Boundary term of the higher-order nonlocal constant:
/// sum_{j=1}^{N} sum_{k=0}^{j-1} (-1)^k d^k/dt^k (dL/dq^(j)) . delta^(j-k-1).
fn higher_boundary(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    let n = spec.order();
    let delta = fam.variation(traj, t, n - 1)?;
    let mut acc = 0.0;
    for j in 1..=n {
        for k in 0..j {
            let d = total_derivative_along(traj, |st| partial_wrt_jet(spec, st, j), k, t)?;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * dot(&d, &delta[j - k - 1]);
        }
    }
    Ok(acc)
}

/// Nonlocal constant of motion for order-N Lagrangians. Reduces exactly to
/// [`nonlocal_constant_2nd`] at N = 1 (the k = 0 term is evaluated directly,
/// with no stencil).
pub fn nonlocal_constant_higher(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
    t: f64,
) -> Result<NonlocalSample> {
    let boundary = higher_boundary(spec, fam, traj, t)?;
    let integral = traj.integral_at(t)?;
    Ok(NonlocalSample::new(t, boundary, integral))
}

/// Energy of an autonomous first-order Lagrangian:
/// E = dL/dq' . q' - L.
pub fn energy(spec: &LagrangianSpec, state: &JetState) -> Result<f64> {
    if spec.order() != 1 {
        return Err(Error::Order {
            required: 1,
            actual: spec.order(),
        });
    }
    let p = partial_wrt_jet(spec, state, 1)?;
    Ok(dot(&p, state.jet(1)?) - eval_lagrangian(spec, state)?)
}

/// Time-shift first integral of an autonomous order-N Lagrangian:
/// K1 = sum_{i=1}^{N} sum_{k=0}^{i-1} (-1)^k d^k/dt^k (dL/dq^(i)) . q^(i-k) - L.
/// At N = 1 this is the energy.
pub fn k1_timeshift(spec: &LagrangianSpec, traj: &Trajectory, t: f64) -> Result<f64> {
    let n = spec.order();
    let jets = traj.jets_upto(t, n)?;
    let mut acc = 0.0;
    for i in 1..=n {
        for k in 0..i {
            let d = total_derivative_along(traj, |st| partial_wrt_jet(spec, st, i), k, t)?;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * dot(&d, &jets[i - k]);
        }
    }
    let state = traj.sample_jets(t)?;
    Ok(acc - eval_lagrangian(spec, &state)?)
}

/// The vectors F^(ell) of the space-change construction:
/// F^(0) = sum_{j=1}^{N} (-1)^{j+1} d^{j-1}/dt^{j-1} dL/dq^(j),
/// F^(ell) = d^{ell-1}/dt^{ell-1} dL/dq for ell = 1..=2N.
pub fn compute_f(
    spec: &LagrangianSpec,
    traj: &Trajectory,
    t: f64,
    ell: usize,
) -> Result<Vec<f64>> {
    let n = spec.order();
    if ell > 2 * n {
        return Err(Error::Index {
            index: ell,
            max: 2 * n,
        });
    }
    if ell == 0 {
        let mut acc = vec![0.0; spec.dim()];
        for j in 1..=n {
            let d = total_derivative_along(traj, |st| partial_wrt_jet(spec, st, j), j - 1, t)?;
            let sign = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
            for (a, x) in acc.iter_mut().zip(&d) {
                *a += sign * x;
            }
        }
        Ok(acc)
    } else {
        total_derivative_along(traj, |st| partial_wrt_jet(spec, st, 0), ell - 1, t)
    }
}

/// Max-norm residual of the rho-condition at one time.
fn rho_residual_at(
    spec: &LagrangianSpec,
    rho: &RhoParams,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    let state = traj.sample_jets(t)?;
    let mut worst = 0.0_f64;
    for i in 1..=spec.order() {
        let lhs = partial_wrt_jet(spec, &state, i)?;
        let rhs = total_derivative_along(traj, |st| partial_wrt_jet(spec, st, 0), i, t)?;
        let r = rho.rho[i - 1];
        let res = lhs
            .iter()
            .zip(&rhs)
            .map(|(l, x)| (l - r * x) * (l - r * x))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(res);
    }
    Ok(worst)
}

/// Interior sample times that keep `margin` clearance from the span ends.
fn interior_times(traj: &Trajectory, count: usize, margin: f64) -> Vec<f64> {
    let (lo, hi) = traj.span();
    let a = lo + margin;
    let b = hi - margin;
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1).max(1) as f64)
        .collect()
}

fn stencil_margin(traj: &Trajectory, max_k: usize) -> f64 {
    let k = max_k.max(1).min(stencil::MAX_DERIVATIVE);
    stencil::half_width(k) as f64 * stencil::step_size(k, traj.accuracy()) * 1.01
}

/// Max residual of dL/dq^(i) = rho_i d^i/dt^i dL/dq over sampled times of a
/// solution trajectory (Theorem hypothesis check for `k2_space`).
pub fn check_rho_condition(
    spec: &LagrangianSpec,
    rho: &RhoParams,
    traj: &Trajectory,
) -> Result<f64> {
    let n = spec.order();
    if rho.rho.len() != n {
        return Err(Error::Arity {
            what: "rho parameters",
            needed: n,
            got: rho.rho.len(),
        });
    }
    let margin = stencil_margin(traj, n);
    let mut worst = 0.0_f64;
    for t in interior_times(traj, 20, margin) {
        worst = worst.max(rho_residual_at(spec, rho, traj, t)?);
    }
    Ok(worst)
}

/// Space-change first integral without the hypothesis spot check; for
/// exploration when the rho-condition is known (or known to fail).
pub fn k2_space_unchecked(
    spec: &LagrangianSpec,
    rho: &RhoParams,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    let n = spec.order();
    if rho.rho.len() != n {
        return Err(Error::Arity {
            what: "rho parameters",
            needed: n,
            got: rho.rho.len(),
        });
    }
    let fs: Vec<Vec<f64>> = (0..=2 * n)
        .map(|ell| compute_f(spec, traj, t, ell))
        .collect::<Result<_>>()?;
    let mut acc = -0.5 * norm_sq(&fs[0]);
    for i in 1..=n {
        let mut bracket = -0.5 * norm_sq(&fs[i]);
        for k in 0..i {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            bracket += sign * dot(&fs[i + k + 1], &fs[i - k - 1]);
        }
        acc += rho.rho[i - 1] * bracket;
    }
    Ok(acc)
}

/// Space-change first integral
/// K2 = sum_i rho_i [ sum_{k=0}^{i-1} (-1)^k F^(i+k+1).F^(i-k-1)
///                    - (1/2)||F^(i)||^2 ] - (1/2)||F^(0)||^2,
/// after a hard spot check of the rho-condition at `t`.
pub fn k2_space(
    spec: &LagrangianSpec,
    rho: &RhoParams,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    if rho.rho.len() != spec.order() {
        return Err(Error::Arity {
            what: "rho parameters",
            needed: spec.order(),
            got: rho.rho.len(),
        });
    }
    let res = rho_residual_at(spec, rho, traj, t)?;
    if res > RHO_CHECK_TOL {
        return Err(Error::hypothesis(format!(
            "rho-condition residual {res:.3e} exceeds {RHO_CHECK_TOL:.0e} at t = {t}"
        )));
    }
    k2_space_unchecked(spec, rho, traj, t)
}

/// Max |dL/dlambda - mu| over sampled times (hypothesis check for `k3_mu`).
pub fn check_mu_constancy(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
) -> Result<f64> {
    let mu = fam
        .mu()
        .ok_or_else(|| Error::hypothesis("family declares no mu"))?;
    let mut worst = 0.0_f64;
    for t in interior_times(traj, 50, 0.0) {
        worst = worst.max((integrand(spec, fam, traj, t)? - mu).abs());
    }
    Ok(worst)
}

/// Constant-integrand first integral without the mu validation.
pub fn k3_mu_unchecked(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    let mu = fam
        .mu()
        .ok_or_else(|| Error::hypothesis("family declares no mu"))?;
    Ok(higher_boundary(spec, fam, traj, t)? - mu * t)
}

/// Constant-integrand first integral K3 = (boundary term) - mu t, valid for
/// families with dL/dlambda identically mu along motions; mu is validated
/// against the trajectory before evaluation.
pub fn k3_mu(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    let res = check_mu_constancy(spec, fam, traj)?;
    if res > MU_CHECK_TOL {
        return Err(Error::hypothesis(format!(
            "integrand deviates from mu by {res:.3e} (limit {MU_CHECK_TOL:.0e})"
        )));
    }
    k3_mu_unchecked(spec, fam, traj, t)
}

/// Attach the exponentially weighted potential integral
/// I(t) = integral from t0 to t of e^{2 k s / m} U(q(s)) ds
/// required by [`viscous_constant`].
pub fn attach_viscous_quadrature(
    traj: &Trajectory,
    m: f64,
    k: f64,
    potential: &Potential,
) -> Result<Trajectory> {
    let pot = potential.clone();
    attach_integrand(traj, "exp_weighted_potential", move |tr, s| {
        let q = &tr.sample_jets(s)?.jets[0];
        Ok((2.0 * k * s / m).exp() * pot.value(q))
    })
}

/// The viscous-dissipation constant of motion
/// e^{2kt/m} (m ||q'||^2 + 2 U(q)) + 4 (k/m) * integral from t to t0 of
/// e^{2ks/m} U(q(s)) ds, constant along solutions of m q'' = -k q' - grad U.
/// Requires the quadrature from [`attach_viscous_quadrature`].
pub fn viscous_constant(
    m: f64,
    k: f64,
    potential: &Potential,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    if m <= 0.0 {
        return Err(Error::Parameter {
            name: "m",
            value: m,
            reason: "mass must be positive",
        });
    }
    let state = traj.sample_jets(t)?;
    let local = (2.0 * k * t / m).exp()
        * (m * norm_sq(state.jet(1)?) + 2.0 * potential.value(state.jet(0)?));
    // The integral term as printed runs from t back to t0, i.e. minus the
    // accumulated channel.
    Ok(local - 4.0 * (k / m) * traj.integral_at(t)?)
}

/// Outcome of the dissipative monotonicity checks on a backward trajectory.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// e^{2kt/m}(m||q'||^2 + 2U) is nondecreasing in t across all samples.
    pub monotone: bool,
    /// m||q'(t)||^2 <= e^{2k(t0-t)/m} (m||q'(t0)||^2 + 2U(q(t0))) at all samples.
    pub estimate_holds: bool,
    /// Earliest sample time violating either check.
    pub first_violation: Option<f64>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.estimate_holds
    }
}

/// Check, on a backward trajectory, that the weighted mechanical energy
/// increases with t for t <= t0, and that the backward velocity estimate
/// holds at every accepted node. U >= 0 is validated at every sample.
pub fn monotonicity_check(
    m: f64,
    k: f64,
    potential: &Potential,
    traj: &Trajectory,
) -> Result<MonotonicityReport> {
    if !traj.is_backward() {
        return Err(Error::hypothesis(
            "monotonicity check expects a backward trajectory (t0 is the latest time)",
        ));
    }
    let nodes = traj.len();
    let weighted = |i: usize| -> Result<(f64, f64, f64)> {
        let st = traj.node_state(i);
        let u = potential.value(st.jet(0)?);
        if u < 0.0 {
            return Err(Error::hypothesis(format!(
                "U(q({})) = {u} < 0 violates the bounded-below hypothesis",
                st.t
            )));
        }
        let speed_sq = norm_sq(st.jet(1)?);
        Ok((st.t, (2.0 * k * st.t / m).exp() * (m * speed_sq + 2.0 * u), speed_sq))
    };

    let (t0, _, speed0_sq) = weighted(0)?;
    let st0 = traj.node_state(0);
    let bound0 = m * speed0_sq + 2.0 * potential.value(st0.jet(0)?);

    let mut monotone = true;
    let mut estimate_holds = true;
    let mut first_violation: Option<f64> = None;
    let mut entries = Vec::with_capacity(nodes);
    for i in 0..nodes {
        entries.push(weighted(i)?);
    }
    // Backward storage: reverse to ascending time.
    entries.reverse();
    for w in entries.windows(2) {
        if w[1].1 < w[0].1 - MONOTONE_SLACK {
            monotone = false;
            first_violation.get_or_insert(w[0].0);
            break;
        }
    }
    for &(t, _, speed_sq) in &entries {
        let rhs = (2.0 * k * (t0 - t) / m).exp() * bound0;
        if m * speed_sq > rhs + MONOTONE_SLACK * rhs.abs().max(1.0) {
            estimate_holds = false;
            if first_violation.map_or(true, |v| t < v) {
                first_violation = Some(t);
            }
            break;
        }
    }
    Ok(MonotonicityReport {
        monotone,
        estimate_holds,
        first_violation,
    })
}
