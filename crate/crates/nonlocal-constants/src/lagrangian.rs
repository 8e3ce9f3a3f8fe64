//! Order-N Lagrangians: evaluation, partials with respect to jet slots,
//! total time derivatives along trajectories, and the Euler-Lagrange
//! residual.

use std::sync::Arc;

use crate::dual::{lift_jets, Dual};
use crate::error::{Error, Result};
use crate::jet::JetState;
use crate::stencil;
use crate::trajectory::Trajectory;

/// Lagrangian evaluation map L(t, q, ..., q^(N)), written over duals so a
/// single definition serves both plain evaluation and exact forward-mode
/// partials. `jets[j]` is the j-th derivative vector.
pub type EvalFn = dyn Fn(Dual, &[Vec<Dual>]) -> Dual + Send + Sync;

/// Explicit closure for the highest derivative: maps (t, q, ..., q^(2N-1))
/// to q^(2N). Written over duals for the same reason.
pub type ClosureFn = dyn Fn(Dual, &[Vec<Dual>]) -> Vec<Dual> + Send + Sync;

#[derive(Clone)]
pub struct LagrangianSpec {
    order: usize,
    dim: usize,
    eval: Arc<EvalFn>,
    closure: Option<Arc<ClosureFn>>,
}

impl LagrangianSpec {
    pub fn new<F>(order: usize, dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(Dual, &[Vec<Dual>]) -> Dual + Send + Sync + 'static,
    {
        if order < 1 {
            return Err(Error::Parameter {
                name: "order",
                value: order as f64,
                reason: "must be >= 1",
            });
        }
        if dim < 1 {
            return Err(Error::Parameter {
                name: "dim",
                value: dim as f64,
                reason: "must be >= 1",
            });
        }
        Ok(LagrangianSpec {
            order,
            dim,
            eval: Arc::new(eval),
            closure: None,
        })
    }

    /// Attach the explicit closure q^(2N) = f(t, q, ..., q^(2N-1)).
    /// Only specs with a closure can be integrated.
    pub fn with_closure<F>(mut self, closure: F) -> Self
    where
        F: Fn(Dual, &[Vec<Dual>]) -> Vec<Dual> + Send + Sync + 'static,
    {
        self.closure = Some(Arc::new(closure));
        self
    }

    /// Lagrangian order N.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Configuration dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn closure(&self) -> Option<&Arc<ClosureFn>> {
        self.closure.as_ref()
    }

    pub fn has_closure(&self) -> bool {
        self.closure.is_some()
    }

    /// Raw dual evaluation with the caller's seeds.
    pub fn eval_dual(&self, t: Dual, jets: &[Vec<Dual>]) -> Dual {
        (self.eval)(t, jets)
    }

    fn checked_jets<'a>(&self, state: &'a JetState) -> Result<&'a [Vec<f64>]> {
        if state.jets.len() < self.order + 1 {
            return Err(Error::Arity {
                what: "jets for Lagrangian evaluation",
                needed: self.order + 1,
                got: state.jets.len(),
            });
        }
        if state.dim() != self.dim {
            return Err(Error::Dimension {
                what: "jet state",
                expected: self.dim,
                got: state.dim(),
            });
        }
        Ok(&state.jets[..=self.order])
    }
}

/// L(t, q, ..., q^(N)) at the given state.
pub fn eval_lagrangian(spec: &LagrangianSpec, state: &JetState) -> Result<f64> {
    let jets = spec.checked_jets(state)?;
    let value = spec
        .eval_dual(Dual::constant(state.t), &lift_jets(jets))
        .re;
    if !value.is_finite() {
        return Err(Error::NonFinite("Lagrangian value"));
    }
    Ok(value)
}

/// The n-vector dL/dq^(j) at the given state, by one forward-mode
/// directional pass per coordinate.
pub fn partial_wrt_jet(spec: &LagrangianSpec, state: &JetState, j: usize) -> Result<Vec<f64>> {
    if j > spec.order {
        return Err(Error::Index {
            index: j,
            max: spec.order,
        });
    }
    let jets = spec.checked_jets(state)?;
    let t = Dual::constant(state.t);
    let mut dual_jets = lift_jets(jets);
    let mut out = Vec::with_capacity(spec.dim);
    for c in 0..spec.dim {
        dual_jets[j][c].eps = 1.0;
        let v = spec.eval_dual(t, &dual_jets);
        dual_jets[j][c].eps = 0.0;
        if !v.eps.is_finite() {
            return Err(Error::NonFinite("Lagrangian partial"));
        }
        out.push(v.eps);
    }
    Ok(out)
}

/// k-th total time derivative at `t` of s -> f(sample_jets(traj, s)), via a
/// direct central stencil on the dense output (k = 0 evaluates f directly).
pub fn total_derivative_along<F>(traj: &Trajectory, f: F, k: usize, t: f64) -> Result<Vec<f64>>
where
    F: Fn(&JetState) -> Result<Vec<f64>>,
{
    if k == 0 {
        return f(&traj.sample_jets(t)?);
    }
    let h = stencil::step_size(k, traj.accuracy());
    traj.require_clearance(t, stencil::half_width(k) as f64 * h)?;
    stencil::derivative_vec(|s| f(&traj.sample_jets(s)?), t, k, h)
}

/// Euler-Lagrange residual sum_{k=0}^{N} (-1)^k d^k/dt^k dL/dq^(k) at `t`;
/// near zero along true solutions.
pub fn el_residual(spec: &LagrangianSpec, traj: &Trajectory, t: f64) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; spec.dim];
    for k in 0..=spec.order {
        let term = total_derivative_along(traj, |st| partial_wrt_jet(spec, st, k), k, t)?;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        for (a, x) in acc.iter_mut().zip(&term) {
            *a += sign * x;
        }
    }
    Ok(acc)
}

/// Plain-f64 closure evaluation (zero seeds).
pub(crate) fn closure_value(closure: &ClosureFn, t: f64, jets: &[Vec<f64>]) -> Vec<f64> {
    let out = closure(Dual::constant(t), &lift_jets(jets));
    out.into_iter().map(|d| d.re).collect()
}

/// Closure value together with its total time derivative along the flow
/// direction `jet_rates` (the time derivatives of each jet vector), from a
/// single dual pass seeded with (t' = 1, jets' = jet_rates).
pub(crate) fn closure_with_rate(
    closure: &ClosureFn,
    t: f64,
    jets: &[Vec<f64>],
    jet_rates: &[Vec<f64>],
) -> (Vec<f64>, Vec<f64>) {
    let t_dual = Dual::seeded(t);
    let dual_jets: Vec<Vec<Dual>> = jets
        .iter()
        .zip(jet_rates)
        .map(|(v, dv)| {
            v.iter()
                .zip(dv)
                .map(|(&x, &dx)| Dual::new(x, dx))
                .collect()
        })
        .collect();
    let out = closure(t_dual, &dual_jets);
    let mut value = Vec::with_capacity(out.len());
    let mut rate = Vec::with_capacity(out.len());
    for d in out {
        value.push(d.re);
        rate.push(d.eps);
    }
    (value, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use approx::assert_relative_eq;

    fn state(t: f64, jets: Vec<Vec<f64>>) -> JetState {
        JetState::new(t, jets).unwrap()
    }

    #[test]
    fn pais_uhlenbeck_evaluation() {
        let pu = systems::make_pais_uhlenbeck(1.0, 2.0, 1).unwrap();
        // jets (q, q', q'') = (1, 0, 0): L = (1/2) w1^2 w2^2 q^2 = 2
        let s = state(0.0, vec![vec![1.0], vec![0.0], vec![0.0]]);
        assert_relative_eq!(eval_lagrangian(&pu, &s).unwrap(), 2.0);
        let zero = state(0.0, vec![vec![0.0], vec![0.0], vec![0.0]]);
        assert_eq!(eval_lagrangian(&pu, &zero).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_evaluation() {
        let h = systems::make_harmonic();
        let s = state(0.0, vec![vec![0.0], vec![1.0]]);
        assert_relative_eq!(eval_lagrangian(&h, &s).unwrap(), 0.5);
    }

    #[test]
    fn pais_uhlenbeck_partials() {
        let pu = systems::make_pais_uhlenbeck(1.0, 2.0, 1).unwrap();
        let s = state(0.0, vec![vec![1.0], vec![0.5], vec![3.0]]);
        // dL/dq'' = q''
        assert_relative_eq!(partial_wrt_jet(&pu, &s, 2).unwrap()[0], 3.0);
        // dL/dq = w1^2 w2^2 q = 4
        assert_relative_eq!(partial_wrt_jet(&pu, &s, 0).unwrap()[0], 4.0);
        // dL/dq' = -(w1^2 + w2^2) q' = -2.5
        assert_relative_eq!(partial_wrt_jet(&pu, &s, 1).unwrap()[0], -2.5);
    }

    #[test]
    fn absent_variable_has_zero_partial() {
        // L = q^2, independent of q'.
        let spec = LagrangianSpec::new(1, 1, |_, jets| jets[0][0] * jets[0][0]).unwrap();
        let s = state(0.0, vec![vec![2.0], vec![5.0]]);
        assert_eq!(partial_wrt_jet(&spec, &s, 1).unwrap(), vec![0.0]);
        assert!(partial_wrt_jet(&spec, &s, 2).is_err());
    }

    #[test]
    fn partials_are_linear_in_the_lagrangian() {
        let (alpha, beta) = (0.7, -1.3);
        let l1 = systems::make_harmonic();
        let l2 = LagrangianSpec::new(1, 1, |_, jets| {
            jets[0][0].powi(3) + jets[1][0] * jets[0][0]
        })
        .unwrap();
        let combined = LagrangianSpec::new(1, 1, move |t, jets| {
            let a = 0.5 * (jets[1][0] * jets[1][0]) - 0.5 * (jets[0][0] * jets[0][0]);
            let b = jets[0][0].powi(3) + jets[1][0] * jets[0][0];
            let _ = t;
            alpha * a + beta * b
        })
        .unwrap();
        let s = state(0.3, vec![vec![1.2], vec![-0.4]]);
        for j in 0..=1 {
            let lhs = partial_wrt_jet(&combined, &s, j).unwrap()[0];
            let rhs = alpha * partial_wrt_jet(&l1, &s, j).unwrap()[0]
                + beta * partial_wrt_jet(&l2, &s, j).unwrap()[0];
            assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
        }
    }

    fn cos_traj(order: usize, span: f64) -> Trajectory {
        // q = cos t with all jets analytic.
        Trajectory::from_fn(order, 1, 0.0, span, (span * 100.0) as usize + 1, |t| {
            let mut js = Vec::new();
            for j in 0..(2 * order + 2) {
                js.push(vec![match j % 4 {
                    0 => t.cos(),
                    1 => -t.sin(),
                    2 => -t.cos(),
                    _ => t.sin(),
                }]);
            }
            js
        })
        .unwrap()
    }

    #[test]
    fn total_derivative_examples() {
        let traj = cos_traj(1, 3.0);
        // f = q, k = 1 at interior point: d(cos)/dt = -sin
        let d = total_derivative_along(&traj, |st| Ok(st.jets[0].clone()), 1, 1.0).unwrap();
        assert_relative_eq!(d[0], -1.0_f64.sin(), epsilon = 1e-6);

        // constant map differentiates to zero
        for k in 1..=3 {
            let d = total_derivative_along(&traj, |_| Ok(vec![7.0]), k, 1.5).unwrap();
            assert_relative_eq!(d[0], 0.0, epsilon = 1e-9);
        }

        // f = q^2 on q = t: d(t^2)/dt = 2t = 6 at t = 3
        let line = Trajectory::from_fn(1, 1, 0.0, 5.0, 41, |t| {
            vec![vec![t], vec![1.0], vec![0.0], vec![0.0]]
        })
        .unwrap();
        let d = total_derivative_along(
            &line,
            |st| Ok(vec![st.jets[0][0] * st.jets[0][0]]),
            1,
            3.0,
        )
        .unwrap();
        assert_relative_eq!(d[0], 6.0, epsilon = 1e-8);
    }

    #[test]
    fn stencil_clearance_is_enforced() {
        let traj = cos_traj(1, 3.0);
        assert!(matches!(
            total_derivative_along(&traj, |st| Ok(st.jets[0].clone()), 1, 0.0),
            Err(Error::OutOfSpan { .. })
        ));
    }

    #[test]
    fn el_residual_vanishes_on_solutions() {
        // Pais-Uhlenbeck with q = cos t.
        let pu = systems::make_pais_uhlenbeck(1.0, 2.0, 1).unwrap();
        let traj = cos_traj(2, 6.0);
        for &t in &[1.0, 2.5, 4.0] {
            let r = el_residual(&pu, &traj, t).unwrap();
            assert_relative_eq!(r[0], 0.0, epsilon = 1e-5);
        }

        // Harmonic with q = cos t.
        let h = systems::make_harmonic();
        let traj1 = cos_traj(1, 6.0);
        for &t in &[1.0, 3.0, 5.0] {
            let r = el_residual(&h, &traj1, t).unwrap();
            assert_relative_eq!(r[0], 0.0, epsilon = 1e-5);
        }

        // Free particle on a straight line.
        let free = LagrangianSpec::new(1, 1, |_, jets| 0.5 * (jets[1][0] * jets[1][0]))
            .unwrap()
            .with_closure(|_, jets| vec![jets[0][0] * 0.0]);
        let line = Trajectory::from_fn(1, 1, 0.0, 4.0, 33, |t| {
            vec![vec![2.0 * t - 1.0], vec![2.0], vec![0.0], vec![0.0]]
        })
        .unwrap();
        let r = el_residual(&free, &line, 2.0).unwrap();
        assert_relative_eq!(r[0], 0.0, epsilon = 1e-9);
    }
}
