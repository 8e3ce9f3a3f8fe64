//! Trajectories: dense-output solution samples plus the accumulated
//! nonlocal integral channel.
//!
//! A trajectory of an order-N Lagrangian system stores, at every accepted
//! node, the flattened jet state (q, q', ..., q^(2N-1)) together with its
//! first and (when available) second time derivatives. Dense output is
//! Hermite interpolation per step: quintic when second-derivative data is
//! stored, cubic otherwise. Both are exact at the nodes.
//!
//! Backward-in-time trajectories keep their naturally decreasing node times;
//! every consumer handles either orientation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::JetState;
use crate::lagrangian::{closure_value, ClosureFn};
use crate::quad::adaptive_lobatto;
use crate::stencil;

/// Integrand of a quadrature channel, evaluated on the trajectory's dense
/// output at time `s`.
pub type IntegrandFn = dyn Fn(&Trajectory, f64) -> Result<f64> + Send + Sync;

/// Accumulated integral values `I(t_i)` at the trajectory nodes, plus the
/// integrand needed to refine inside a step. `I(t0) = 0`; the integral is
/// signed, so backward runs accumulate negative spans naturally.
#[derive(Clone)]
pub struct QuadratureChannel {
    pub label: String,
    pub(crate) node_values: Vec<f64>,
    pub(crate) integrand: Arc<IntegrandFn>,
    pub(crate) tol: f64,
}

#[derive(Clone)]
pub struct Trajectory {
    order: usize,
    dim: usize,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
    seconds: Option<Vec<Vec<f64>>>,
    closure: Option<Arc<ClosureFn>>,
    quadrature: Option<QuadratureChannel>,
    accuracy: f64,
}

impl Trajectory {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_raw(
        order: usize,
        dim: usize,
        times: Vec<f64>,
        states: Vec<Vec<f64>>,
        derivs: Vec<Vec<f64>>,
        seconds: Option<Vec<Vec<f64>>>,
        closure: Option<Arc<ClosureFn>>,
        accuracy: f64,
    ) -> Self {
        debug_assert!(times.len() >= 2);
        debug_assert_eq!(times.len(), states.len());
        debug_assert_eq!(times.len(), derivs.len());
        Trajectory {
            order,
            dim,
            times,
            states,
            derivs,
            seconds,
            closure,
            quadrature: None,
            accuracy,
        }
    }

    /// Build a trajectory by sampling an analytic jet map on a uniform grid.
    ///
    /// `jets_of` must return the jet vectors (q, q', ...) at the given time:
    /// at least 2N+1 of them (one past the stored order, for Hermite
    /// derivative data); if it returns 2N+2 or more, quintic dense output is
    /// used. `t_end < t0` produces a backward trajectory.
    pub fn from_fn<F>(
        order: usize,
        dim: usize,
        t0: f64,
        t_end: f64,
        n_nodes: usize,
        jets_of: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Vec<Vec<f64>>,
    {
        if order < 1 {
            return Err(Error::Parameter {
                name: "order",
                value: order as f64,
                reason: "must be >= 1",
            });
        }
        if n_nodes < 2 {
            return Err(Error::Arity {
                what: "trajectory nodes",
                needed: 2,
                got: n_nodes,
            });
        }
        if t_end == t0 {
            return Err(Error::Parameter {
                name: "t_end",
                value: t_end,
                reason: "must differ from t0",
            });
        }
        let m = 2 * order; // state channels
        let probe = jets_of(t0);
        if probe.len() < m + 1 {
            return Err(Error::Arity {
                what: "jets from map",
                needed: m + 1,
                got: probe.len(),
            });
        }
        let with_seconds = probe.len() >= m + 2;
        let h = (t_end - t0) / (n_nodes - 1) as f64;

        let mut times = Vec::with_capacity(n_nodes);
        let mut states = Vec::with_capacity(n_nodes);
        let mut derivs = Vec::with_capacity(n_nodes);
        let mut seconds = if with_seconds {
            Some(Vec::with_capacity(n_nodes))
        } else {
            None
        };
        for i in 0..n_nodes {
            let t = if i == n_nodes - 1 {
                t_end
            } else {
                t0 + i as f64 * h
            };
            let jets = jets_of(t);
            if jets.len() < m + 1 || jets.iter().any(|v| v.len() != dim) {
                return Err(Error::Dimension {
                    what: "jets from map",
                    expected: dim,
                    got: jets.first().map_or(0, |v| v.len()),
                });
            }
            times.push(t);
            states.push(flatten(&jets[0..m]));
            derivs.push(flatten(&jets[1..m + 1]));
            if let Some(gs) = seconds.as_mut() {
                gs.push(flatten(&jets[2..m + 2]));
            }
        }
        // Accuracy scale of the dense output: quintic Hermite truncation on
        // this grid, assuming O(1) sixth derivatives.
        let accuracy = (h.abs().powi(6) / 46080.0).max(1e-14);
        Ok(Trajectory::from_raw(
            order, dim, times, states, derivs, seconds, None, accuracy,
        ))
    }

    /// Attach a closure so jets beyond order 2N-1 can be reconstructed.
    pub fn with_closure(mut self, closure: Arc<ClosureFn>) -> Self {
        self.closure = Some(closure);
        self
    }

    pub(crate) fn set_quadrature(&mut self, channel: QuadratureChannel) {
        self.quadrature = Some(channel);
    }

    /// Lagrangian order N of the system that produced this trajectory.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Configuration dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reference instant of the nonlocal integral (the start time).
    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// True when node times decrease.
    pub fn is_backward(&self) -> bool {
        self.times[1] < self.times[0]
    }

    /// Time span as (low, high) regardless of orientation.
    pub fn span(&self) -> (f64, f64) {
        let a = self.times[0];
        let b = self.end_time();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Accuracy scale of the stored data (integrator tolerance or
    /// interpolation budget); drives finite-difference step selection.
    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn closure(&self) -> Option<&Arc<ClosureFn>> {
        self.closure.as_ref()
    }

    pub fn quadrature(&self) -> Option<&QuadratureChannel> {
        self.quadrature.as_ref()
    }

    /// Accumulated integral values at the nodes, if a channel is attached.
    pub fn quadrature_values(&self) -> Option<&[f64]> {
        self.quadrature.as_ref().map(|q| q.node_values.as_slice())
    }

    /// Jet state stored at node `i`.
    pub fn node_state(&self, i: usize) -> JetState {
        JetState {
            t: self.times[i],
            jets: unflatten(&self.states[i], self.dim),
        }
    }

    /// Error unless `[t - margin, t + margin]` lies inside the span.
    pub fn require_clearance(&self, t: f64, margin: f64) -> Result<()> {
        let (lo, hi) = self.span();
        let slop = 1e-12 * (hi - lo).max(1.0);
        if t - margin < lo - slop || t + margin > hi + slop {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        Ok(())
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.span();
        let slop = 1e-12 * (hi - lo).max(1.0);
        if t < lo - slop || t > hi + slop {
            return Err(Error::OutOfSpan { t, lo, hi });
        }
        let t = t.clamp(lo, hi);
        let n = self.times.len();
        let i = if self.is_backward() {
            self.times.partition_point(|&x| x >= t)
        } else {
            self.times.partition_point(|&x| x <= t)
        };
        Ok((i.saturating_sub(1).min(n - 2), t))
    }

    /// Flattened state interpolated at `t` (exact at the nodes).
    fn interp_state(&self, t: f64) -> Result<Vec<f64>> {
        let (i, t) = self.locate(t)?;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let ya = &self.states[i];
        let yb = &self.states[i + 1];
        let fa = &self.derivs[i];
        let fb = &self.derivs[i + 1];
        let out = match &self.seconds {
            Some(gs) => quintic_hermite(s, h, ya, fa, &gs[i], yb, fb, &gs[i + 1]),
            None => cubic_hermite(s, h, ya, fa, yb, fb),
        };
        Ok(out)
    }

    /// Jet state at any `t` in the span, from the dense output.
    pub fn sample_jets(&self, t: f64) -> Result<JetState> {
        let state = self.interp_state(t)?;
        Ok(JetState {
            t,
            jets: unflatten(&state, self.dim),
        })
    }

    /// Jets 0..=j_max at `t`. Orders up to 2N-1 come from dense output;
    /// order 2N evaluates the closure on the interpolated state; higher
    /// orders differentiate the closure channel along the flow with direct
    /// finite-difference stencils.
    pub fn jets_upto(&self, t: f64, j_max: usize) -> Result<Vec<Vec<f64>>> {
        let stored_max = 2 * self.order - 1;
        let state = self.interp_state(t)?;
        let mut jets = unflatten(&state, self.dim);
        if j_max <= stored_max {
            jets.truncate(j_max + 1);
            return Ok(jets);
        }
        let closure = self.closure.as_ref().ok_or(Error::MissingClosure)?;
        jets.push(closure_value(closure.as_ref(), t, &jets));
        for j in (stored_max + 2)..=j_max {
            let k = j - (stored_max + 1);
            let h = stencil::step_size(k, self.accuracy);
            self.require_clearance(t, stencil::half_width(k) as f64 * h)?;
            let d = stencil::derivative_vec(
                |s| {
                    let st = self.interp_state(s)?;
                    let js = unflatten(&st, self.dim);
                    Ok(closure_value(closure.as_ref(), s, &js))
                },
                t,
                k,
                h,
            )?;
            jets.push(d);
        }
        Ok(jets)
    }

    /// Accumulated integral I(t) of the attached quadrature channel,
    /// refined inside a step by adaptive Lobatto quadrature.
    pub fn integral_at(&self, t: f64) -> Result<f64> {
        let q = self.quadrature.as_ref().ok_or(Error::QuadratureMissing)?;
        let (i, t) = self.locate(t)?;
        let ta = self.times[i];
        let tb = self.times[i + 1];
        if t == ta {
            return Ok(q.node_values[i]);
        }
        if t == tb {
            return Ok(q.node_values[i + 1]);
        }
        let (lo, hi) = self.span();
        let step_tol = q.tol * ((t - ta).abs() / (hi - lo).max(f64::MIN_POSITIVE));
        let partial = adaptive_lobatto(&|s| (q.integrand)(self, s), ta, t, step_tol)?;
        Ok(q.node_values[i] + partial)
    }
}

/// Free-function form of [`Trajectory::sample_jets`].
pub fn sample_jets(traj: &Trajectory, t: f64) -> Result<JetState> {
    traj.sample_jets(t)
}

pub(crate) fn flatten(jets: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(jets.len() * jets.first().map_or(0, |v| v.len()));
    for v in jets {
        out.extend_from_slice(v);
    }
    out
}

pub(crate) fn unflatten(state: &[f64], dim: usize) -> Vec<Vec<f64>> {
    state.chunks(dim).map(|c| c.to_vec()).collect()
}

fn cubic_hermite(s: f64, h: f64, ya: &[f64], fa: &[f64], yb: &[f64], fb: &[f64]) -> Vec<f64> {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 1.0 - 3.0 * s2 + 2.0 * s3;
    let h10 = s - 2.0 * s2 + s3;
    let h01 = 3.0 * s2 - 2.0 * s3;
    let h11 = -s2 + s3;
    ya.iter()
        .zip(fa)
        .zip(yb.iter().zip(fb))
        .map(|((&ya, &fa), (&yb, &fb))| ya * h00 + h * fa * h10 + yb * h01 + h * fb * h11)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn quintic_hermite(
    s: f64,
    h: f64,
    ya: &[f64],
    fa: &[f64],
    ga: &[f64],
    yb: &[f64],
    fb: &[f64],
    gb: &[f64],
) -> Vec<f64> {
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    // Two-point Taylor (Hermite) basis matching value, first and second
    // derivative at both ends.
    let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let k0 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let k1 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let k2 = 0.5 * (s3 - 2.0 * s4 + s5);
    let h2c = h * h;
    (0..ya.len())
        .map(|i| {
            ya[i] * h0
                + h * fa[i] * h1
                + h2c * ga[i] * h2
                + yb[i] * k0
                + h * fb[i] * k1
                + h2c * gb[i] * k2
        })
        .collect()
}
