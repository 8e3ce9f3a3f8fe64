//! Adaptive Runge-Kutta integration of explicit closures as first-order
//! systems, plus post-hoc attachment of the nonlocal quadrature channel.
//!
//! The method is the embedded Dormand-Prince 5(4) pair with FSAL. Every
//! accepted node stores the state, its derivative, and its second
//! derivative (one extra dual-mode closure evaluation), which the
//! trajectory's Hermite dense output consumes.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::families::{integrand, PerturbationFamily};
use crate::jet::JetState;
use crate::lagrangian::{closure_value, closure_with_rate, LagrangianSpec};
use crate::quad::adaptive_lobatto;
use crate::trajectory::{flatten, unflatten, QuadratureChannel, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    pub direction: Direction,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-10,
            initial_step: 1e-3,
            max_steps: 10_000_000,
            direction: Direction::Forward,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(mut self, rel: f64, abs: f64) -> Self {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }

    pub fn backward(mut self) -> Self {
        self.direction = Direction::Backward;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Parameter {
                name: "rel_tol",
                value: self.rel_tol,
                reason: "must be positive",
            });
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::Parameter {
                name: "abs_tol",
                value: self.abs_tol,
                reason: "must be positive",
            });
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::Parameter {
                name: "initial_step",
                value: self.initial_step,
                reason: "must be positive",
            });
        }
        if self.max_steps == 0 {
            return Err(Error::Parameter {
                name: "max_steps",
                value: 0.0,
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const SAFETY: f64 = 0.9;
/// State magnitude above which a step-size underflow is diagnosed as
/// finite-time escape rather than stiffness.
const ESCAPE_NORM: f64 = 1e8;

/// Integrate the Euler-Lagrange flow of a spec with an explicit closure,
/// from the initial jet state to `t_end` (either direction).
pub fn integrate(
    spec: &LagrangianSpec,
    initial: &JetState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let closure = spec.closure().cloned().ok_or(Error::MissingClosure)?;
    let order = spec.order();
    let dim = spec.dim();
    let channels = 2 * order;
    if initial.jets.len() < channels {
        return Err(Error::Arity {
            what: "initial jets",
            needed: channels,
            got: initial.jets.len(),
        });
    }
    if initial.dim() != dim {
        return Err(Error::Dimension {
            what: "initial state",
            expected: dim,
            got: initial.dim(),
        });
    }
    let t0 = initial.t;
    if t_end == t0 {
        return Err(Error::Parameter {
            name: "t_end",
            value: t_end,
            reason: "must differ from the initial time",
        });
    }
    let sign = if t_end > t0 { 1.0 } else { -1.0 };
    match cfg.direction {
        Direction::Forward if sign < 0.0 => {
            return Err(Error::Parameter {
                name: "t_end",
                value: t_end,
                reason: "before t0 but direction is forward",
            })
        }
        Direction::Backward if sign > 0.0 => {
            return Err(Error::Parameter {
                name: "t_end",
                value: t_end,
                reason: "after t0 but direction is backward",
            })
        }
        _ => {}
    }

    let rhs = |t: f64, y: &[f64]| -> Vec<f64> {
        let jets = unflatten(y, dim);
        let top = closure_value(closure.as_ref(), t, &jets);
        let mut out = Vec::with_capacity(y.len());
        out.extend_from_slice(&y[dim..]);
        out.extend_from_slice(&top);
        out
    };
    let second = |t: f64, y: &[f64], f: &[f64]| -> Vec<f64> {
        let jets = unflatten(y, dim);
        let rates = unflatten(f, dim);
        let (_, cdot) = closure_with_rate(closure.as_ref(), t, &jets, &rates);
        let mut g = Vec::with_capacity(y.len());
        g.extend_from_slice(&f[dim..]);
        g.extend_from_slice(&cdot);
        g
    };

    let mut t = t0;
    let mut y = flatten(&initial.jets[..channels]);
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }
    let mut f = rhs(t, &y);
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("closure at the initial state"));
    }

    let mut times = vec![t];
    let mut states = vec![y.clone()];
    let mut derivs = vec![f.clone()];
    let mut seconds = vec![second(t, &y, &f)];

    let mut h = cfg.initial_step.min((t_end - t0).abs()) * sign;
    let mut k: Vec<Vec<f64>> = vec![Vec::new(); 7];
    let mut steps = 0usize;

    loop {
        if (t - t_end) * sign >= 0.0 {
            break;
        }
        if steps >= cfg.max_steps {
            return Err(Error::MaxSteps {
                max_steps: cfg.max_steps,
                t,
            });
        }
        steps += 1;

        // Do not overshoot the end point.
        if (t + h - t_end) * sign > 0.0 {
            h = t_end - t;
        }
        if h.abs() < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            let escaped = y.iter().any(|x| x.abs() > ESCAPE_NORM);
            return if escaped {
                Err(Error::BlowUp { last_valid_time: t })
            } else {
                Err(Error::Stiffness { t })
            };
        }

        // Stages (k1 is the FSAL derivative from the previous step).
        k[0] = f.clone();
        for i in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(i) {
                let a = A[i][j];
                if a != 0.0 {
                    for (s, v) in ys.iter_mut().zip(kj) {
                        *s += h * a * v;
                    }
                }
            }
            k[i] = rhs(t + C[i] * h, &ys);
        }

        // Fifth-order solution and embedded error estimate.
        let mut y_new = y.clone();
        for (i, ki) in k.iter().enumerate() {
            if B[i] != 0.0 {
                for (s, v) in y_new.iter_mut().zip(ki) {
                    *s += h * B[i] * v;
                }
            }
        }
        // Error per unit step: the tolerance bounds |e|/h, so the global
        // error scales superlinearly in the tolerance and halving it at
        // least halves the endpoint error.
        let mut err = 0.0_f64;
        for idx in 0..y.len() {
            let mut e = 0.0;
            for (i, ki) in k.iter().enumerate() {
                e += E[i] * ki[idx];
            }
            e *= h / h.abs().min(1.0);
            let scale = cfg.abs_tol + cfg.rel_tol * y[idx].abs().max(y_new[idx].abs());
            err = err.max((e / scale).abs());
        }

        if err.is_finite() && err <= 1.0 {
            t += h;
            if (t - t_end) * sign > 0.0 || h == t_end - t {
                // Guard against rounding past the end point.
                t = t.clamp(t_end.min(times[0]), t_end.max(times[0]));
            }
            y = y_new;
            if y.iter().any(|x| !x.is_finite()) {
                return Err(Error::BlowUp {
                    last_valid_time: *times.last().unwrap(),
                });
            }
            f = k[6].clone(); // FSAL
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::BlowUp { last_valid_time: t });
            }
            times.push(t);
            states.push(y.clone());
            derivs.push(f.clone());
            seconds.push(second(t, &y, &f));
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.25)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            let factor = if err.is_finite() {
                (SAFETY * err.powf(-0.25)).clamp(MIN_FACTOR, 1.0)
            } else {
                MIN_FACTOR
            };
            h *= factor;
        }
    }

    let accuracy = cfg.rel_tol.max(cfg.abs_tol);
    Ok(Trajectory::from_raw(
        order,
        dim,
        times,
        states,
        derivs,
        Some(seconds),
        Some(closure),
        accuracy,
    ))
}

/// Attach a custom quadrature channel: I(t) = integral of `f` from t0 to t
/// on the dense output, accumulated per step with adaptive Lobatto rules at
/// one tenth of the trajectory's accuracy budget.
pub fn attach_integrand<F>(traj: &Trajectory, label: impl Into<String>, f: F) -> Result<Trajectory>
where
    F: Fn(&Trajectory, f64) -> Result<f64> + Send + Sync + 'static,
{
    let integrand: Arc<crate::trajectory::IntegrandFn> = Arc::new(f);
    let tol = 0.1 * traj.accuracy();
    let (lo, hi) = traj.span();
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let times = traj.times();
    let mut node_values = Vec::with_capacity(times.len());
    node_values.push(0.0);
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        let (ta, tb) = (times[i], times[i + 1]);
        let step_tol = tol * (tb - ta).abs() / span;
        acc += adaptive_lobatto(&|s| integrand(traj, s), ta, tb, step_tol)?;
        node_values.push(acc);
    }
    let mut out = traj.clone();
    out.set_quadrature(QuadratureChannel {
        label: label.into(),
        node_values,
        integrand,
        tol,
    });
    Ok(out)
}

/// Attach the nonlocal integral term of a perturbation family:
/// I(t) = integral from t0 to t of dL/dlambda at lambda = 0.
pub fn attach_quadrature(
    traj: &Trajectory,
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
) -> Result<Trajectory> {
    let spec = spec.clone();
    let fam_inner = fam.clone();
    attach_integrand(traj, format!("dL_dlambda[{}]", fam.name()), move |tr, s| {
        integrand(&spec, &fam_inner, tr, s)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::eval_lagrangian;
    use crate::systems;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn jet(t: f64, jets: Vec<Vec<f64>>) -> JetState {
        JetState::new(t, jets).unwrap()
    }

    #[test]
    fn harmonic_period_closes() {
        let spec = systems::make_harmonic();
        let cfg = IntegratorConfig::default();
        let traj = integrate(&spec, &jet(0.0, vec![vec![1.0], vec![0.0]]), TAU, &cfg).unwrap();
        let end = traj.sample_jets(TAU).unwrap();
        assert_relative_eq!(end.jets[0][0], 1.0, epsilon = 1e-8);
        assert_relative_eq!(end.jets[1][0], 0.0, epsilon = 1e-8);
        // interior closed-form check
        let mid = traj.sample_jets(PI).unwrap();
        assert_relative_eq!(mid.jets[0][0], -1.0, epsilon = 1e-8);
    }

    #[test]
    fn pais_uhlenbeck_cosine_closes() {
        let spec = systems::make_pais_uhlenbeck(1.0, 2.0, 1).unwrap();
        let cfg = IntegratorConfig::default();
        let init = jet(0.0, vec![vec![1.0], vec![0.0], vec![-1.0], vec![0.0]]);
        let traj = integrate(&spec, &init, TAU, &cfg).unwrap();
        assert_relative_eq!(
            traj.sample_jets(TAU).unwrap().jets[0][0],
            1.0,
            epsilon = 1e-8
        );
    }

    #[test]
    fn free_particle_backward() {
        let free = LagrangianSpec::new(1, 1, |_, jets| 0.5 * (jets[1][0] * jets[1][0]))
            .unwrap()
            .with_closure(|_, jets| vec![jets[0][0] * 0.0]);
        let cfg = IntegratorConfig::default().backward();
        let traj = integrate(&free, &jet(0.0, vec![vec![0.0], vec![1.0]]), -5.0, &cfg).unwrap();
        assert!(traj.is_backward());
        assert_relative_eq!(traj.sample_jets(-5.0).unwrap().jets[0][0], -5.0, epsilon = 1e-10);
    }

    #[test]
    fn direction_mismatch_is_rejected() {
        let spec = systems::make_harmonic();
        let cfg = IntegratorConfig::default();
        assert!(integrate(&spec, &jet(0.0, vec![vec![1.0], vec![0.0]]), -1.0, &cfg).is_err());
        let cfg = IntegratorConfig::default().backward();
        assert!(integrate(&spec, &jet(0.0, vec![vec![1.0], vec![0.0]]), 1.0, &cfg).is_err());
    }

    #[test]
    fn backward_then_forward_returns_to_start() {
        let spec = systems::make_harmonic();
        let cfg_b = IntegratorConfig::default().backward();
        let back = integrate(&spec, &jet(0.0, vec![vec![0.3], vec![0.7]]), -3.0, &cfg_b).unwrap();
        let turn = back.sample_jets(-3.0).unwrap();
        let cfg_f = IntegratorConfig::default();
        let fwd = integrate(&spec, &turn, 0.0, &cfg_f).unwrap();
        let home = fwd.sample_jets(0.0).unwrap();
        assert_relative_eq!(home.jets[0][0], 0.3, epsilon = 1e-9);
        assert_relative_eq!(home.jets[1][0], 0.7, epsilon = 1e-9);
    }

    #[test]
    fn halving_tolerance_improves_endpoint() {
        let spec = systems::make_harmonic();
        let init = jet(0.0, vec![vec![1.0], vec![0.0]]);
        let err_at = |tol: f64| {
            let cfg = IntegratorConfig::default().with_tolerances(tol, tol);
            let traj = integrate(&spec, &init, TAU, &cfg).unwrap();
            (traj.sample_jets(TAU).unwrap().jets[0][0] - 1.0).abs()
        };
        let coarse = err_at(1e-7);
        let fine = err_at(5e-8);
        assert!(
            fine * 2.0 <= coarse,
            "halving tolerance gave {coarse} -> {fine}"
        );
    }

    #[test]
    fn missing_closure_is_an_error() {
        let spec = LagrangianSpec::new(1, 1, |_, jets| jets[1][0] * jets[1][0]).unwrap();
        let cfg = IntegratorConfig::default();
        assert!(matches!(
            integrate(&spec, &jet(0.0, vec![vec![0.0], vec![1.0]]), 1.0, &cfg),
            Err(Error::MissingClosure)
        ));
    }

    #[test]
    fn quartic_hill_escapes_in_finite_time() {
        let spec = systems::make_viscous(1.0, 0.5, 1, systems::Potential::quartic_hill()).unwrap();
        let cfg = IntegratorConfig::default().backward();
        let res = integrate(&spec, &jet(0.0, vec![vec![1.0], vec![0.0]]), -20.0, &cfg);
        match res {
            Err(Error::BlowUp { last_valid_time }) => {
                assert!(last_valid_time.is_finite());
                assert!(last_valid_time > -20.0 && last_valid_time < 0.0);
            }
            Err(other) => panic!("expected blow-up, got {other}"),
            Ok(_) => panic!("expected blow-up, integration finished"),
        }
    }

    #[test]
    fn constant_integrand_quadrature_is_exact() {
        // Free particle q = t with family delta^(0) = t: dL/dlambda = q'.1 = 1.
        let free = LagrangianSpec::new(1, 1, |_, jets| 0.5 * (jets[1][0] * jets[1][0]))
            .unwrap()
            .with_closure(|_, jets| vec![jets[0][0] * 0.0]);
        let cfg = IntegratorConfig::default();
        let traj = integrate(&free, &jet(0.0, vec![vec![0.0], vec![1.0]]), 4.0, &cfg).unwrap();
        let fam = PerturbationFamily::custom("linear_drift", |_, t, j_max| {
            let mut out = vec![vec![t]];
            if j_max >= 1 {
                out.push(vec![1.0]);
            }
            for _ in 1..j_max {
                out.push(vec![0.0]);
            }
            Ok(out)
        })
        .with_mu(1.0);
        let traj = attach_quadrature(&traj, &free, &fam).unwrap();
        for &t in &[0.5, 1.7, 4.0] {
            assert_relative_eq!(traj.integral_at(t).unwrap(), t, epsilon = 1e-10);
        }
    }

    #[test]
    fn timeshift_quadrature_accumulates_lagrangian_difference() {
        let spec = systems::make_harmonic();
        let cfg = IntegratorConfig::default();
        let traj = integrate(&spec, &jet(0.0, vec![vec![1.0], vec![0.5]]), 6.0, &cfg).unwrap();
        let traj = attach_quadrature(&traj, &spec, &PerturbationFamily::time_shift()).unwrap();
        let l0 = eval_lagrangian(&spec, &traj.sample_jets(0.0).unwrap()).unwrap();
        for &t in &[1.3, 3.9, 6.0] {
            let lt = eval_lagrangian(&spec, &traj.sample_jets(t).unwrap()).unwrap();
            assert_relative_eq!(traj.integral_at(t).unwrap(), lt - l0, epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetric_family_quadrature_vanishes() {
        let spec = systems::make_central_force(1.0, systems::RadialPotential::harmonic()).unwrap();
        let cfg = IntegratorConfig::default();
        let init = jet(0.0, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let traj = integrate(&spec, &init, 10.0, &cfg).unwrap();
        let traj = attach_quadrature(&traj, &spec, &PerturbationFamily::rotation()).unwrap();
        for &t in &[2.0, 7.5, 10.0] {
            assert_relative_eq!(traj.integral_at(t).unwrap(), 0.0, epsilon = 1e-13);
        }
    }
}
