//! Perturbation families, represented by their first-order variation jets
//! at lambda = 0, and the dL/dlambda integrand feeding the nonlocal
//! integral term.

use std::sync::Arc;

use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::lagrangian::LagrangianSpec;
use crate::trajectory::Trajectory;

/// Variation callback: given a trajectory, a time and a maximum order J,
/// returns the vectors delta^(j) = d/dlambda q_lambda^(j)(t) |_{lambda=0}
/// for j = 0..=J.
pub type VariationFn = dyn Fn(&Trajectory, f64, usize) -> Result<Vec<Vec<f64>>> + Send + Sync;

/// A one-parameter family of perturbed motions, reduced to the only data
/// the constants need: its variation jets at lambda = 0, and optionally the
/// constant mu with dL/dlambda = mu along motions.
#[derive(Clone)]
pub struct PerturbationFamily {
    name: String,
    variation: Arc<VariationFn>,
    mu: Option<f64>,
}

impl PerturbationFamily {
    /// Planar rotation family: delta^(j) = G q^(j) with G (x, y) -> (-y, x).
    pub fn rotation() -> Self {
        PerturbationFamily {
            name: "rotation".to_string(),
            variation: Arc::new(rotation_variation),
            mu: None,
        }
    }

    /// Time-shift family q_lambda(t) = q(t + lambda): delta^(j) = q^(j+1).
    pub fn time_shift() -> Self {
        PerturbationFamily {
            name: "time_shift".to_string(),
            variation: Arc::new(timeshift_variation),
            mu: None,
        }
    }

    /// Exponential time-shift family q_lambda(t) = q(t + lambda e^{at}).
    pub fn exp_time_shift(a: f64) -> Self {
        PerturbationFamily {
            name: format!("exp_time_shift(a={a})"),
            variation: Arc::new(move |traj, t, j_max| {
                exp_timeshift_variation(traj, t, j_max, a)
            }),
            mu: None,
        }
    }

    /// User-defined family from a variation callback. The callback must be
    /// reentrant: it may be invoked concurrently on immutable trajectories.
    pub fn custom<F>(name: impl Into<String>, variation: F) -> Self
    where
        F: Fn(&Trajectory, f64, usize) -> Result<Vec<Vec<f64>>> + Send + Sync + 'static,
    {
        PerturbationFamily {
            name: name.into(),
            variation: Arc::new(variation),
            mu: None,
        }
    }

    /// Declare that dL/dlambda is identically the constant `mu` along
    /// motions. Validated at evaluation time, never inferred.
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    /// Variation jets delta^(0..=j_max) at `t`.
    pub fn variation(&self, traj: &Trajectory, t: f64, j_max: usize) -> Result<Vec<Vec<f64>>> {
        let out = (self.variation)(traj, t, j_max)?;
        if out.len() < j_max + 1 {
            return Err(Error::Arity {
                what: "variation jets",
                needed: j_max + 1,
                got: out.len(),
            });
        }
        Ok(out)
    }
}

/// Rotation-family variation jets: delta^(j) = G q^(j), planar only.
pub fn rotation_variation(traj: &Trajectory, t: f64, j_max: usize) -> Result<Vec<Vec<f64>>> {
    if traj.dim() != 2 {
        return Err(Error::Dimension {
            what: "rotation family",
            expected: 2,
            got: traj.dim(),
        });
    }
    let jets = traj.jets_upto(t, j_max)?;
    Ok(jets.iter().map(|v| vec![-v[1], v[0]]).collect())
}

/// Time-shift variation jets: delta^(j) = q^(j+1).
pub fn timeshift_variation(traj: &Trajectory, t: f64, j_max: usize) -> Result<Vec<Vec<f64>>> {
    let jets = traj.jets_upto(t, j_max + 1)?;
    Ok(jets[1..].to_vec())
}

/// Exponential time-shift variation jets:
/// delta^(j) = sum_{i=0}^{j} C(j,i) a^{j-i} e^{at} q^(i+1) (Leibniz rule).
pub fn exp_timeshift_variation(
    traj: &Trajectory,
    t: f64,
    j_max: usize,
    a: f64,
) -> Result<Vec<Vec<f64>>> {
    let jets = traj.jets_upto(t, j_max + 1)?;
    let eat = (a * t).exp();
    let n = traj.dim();
    let mut out = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let mut delta = vec![0.0; n];
        let mut binom = 1.0_f64; // C(j, 0)
        for i in 0..=j {
            if i > 0 {
                binom *= (j - i + 1) as f64 / i as f64; // C(j, i)
            }
            let coeff = binom * a.powi((j - i) as i32) * eat;
            for (d, &x) in delta.iter_mut().zip(&jets[i + 1]) {
                *d += coeff * x;
            }
        }
        out.push(delta);
    }
    Ok(out)
}

/// The nonlocal integrand dL/dlambda at lambda = 0:
/// sum_{j=0}^{N} dL/dq^(j) . delta^(j), computed as one forward-mode
/// directional pass seeded with the variation jets.
pub fn integrand(
    spec: &LagrangianSpec,
    fam: &PerturbationFamily,
    traj: &Trajectory,
    t: f64,
) -> Result<f64> {
    let order = spec.order();
    let delta = fam.variation(traj, t, order)?;
    let jets = traj.jets_upto(t, order)?;
    let dual_jets: Vec<Vec<Dual>> = jets
        .iter()
        .zip(&delta)
        .map(|(v, dv)| {
            v.iter()
                .zip(dv)
                .map(|(&x, &dx)| Dual::new(x, dx))
                .collect()
        })
        .collect();
    let value = spec.eval_dual(Dual::constant(t), &dual_jets);
    if !value.eps.is_finite() {
        return Err(Error::NonFinite("nonlocal integrand"));
    }
    Ok(value.eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn planar_circle(span: f64) -> Trajectory {
        // q = (cos t, sin t), all jets analytic.
        Trajectory::from_fn(1, 2, 0.0, span, (span * 60.0) as usize + 2, |t| {
            let (s, c) = t.sin_cos();
            vec![vec![c, s], vec![-s, c], vec![-c, -s], vec![s, -c]]
        })
        .unwrap()
    }

    fn cos_line(order: usize, span: f64) -> Trajectory {
        Trajectory::from_fn(order, 1, 0.0, span, (span * 80.0) as usize + 2, |t| {
            (0..2 * order + 2)
                .map(|j| {
                    vec![match j % 4 {
                        0 => t.cos(),
                        1 => -t.sin(),
                        2 => -t.cos(),
                        _ => t.sin(),
                    }]
                })
                .collect()
        })
        .unwrap()
    }

    #[test]
    fn rotation_generator_action() {
        let traj = planar_circle(2.0);
        // q(0) = (1, 0) -> delta = (0, 1)
        let d = rotation_variation(&traj, 0.0, 0).unwrap();
        assert_eq!(d[0], vec![0.0, 1.0]);
        // q(pi/2) = (0, 1): delta = (-1, 0); scaled check at a synthetic state
        let d = rotation_variation(&traj, std::f64::consts::FRAC_PI_2, 1).unwrap();
        assert_relative_eq!(d[0][0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(d[0][1], 0.0, epsilon = 1e-12);
        // zero jet maps to zero
        let still = Trajectory::from_fn(1, 2, 0.0, 1.0, 5, |_| {
            vec![vec![0.0, 2.0], vec![0.0, 0.0], vec![0.0, 0.0], vec![0.0, 0.0]]
        })
        .unwrap();
        let d = rotation_variation(&still, 0.5, 1).unwrap();
        assert_eq!(d[0], vec![-2.0, 0.0]);
        assert_eq!(d[1], vec![0.0, 0.0]);
    }

    #[test]
    fn rotation_requires_planar() {
        let traj = cos_line(1, 1.0);
        assert!(matches!(
            rotation_variation(&traj, 0.5, 0),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn rotation_is_linear_in_the_state() {
        let alpha = 2.5;
        let traj = planar_circle(2.0);
        let scaled = Trajectory::from_fn(1, 2, 0.0, 2.0, 122, |t| {
            let (s, c) = t.sin_cos();
            vec![
                vec![alpha * c, alpha * s],
                vec![-alpha * s, alpha * c],
                vec![-alpha * c, -alpha * s],
                vec![alpha * s, -alpha * c],
            ]
        })
        .unwrap();
        let d1 = rotation_variation(&traj, 0.9, 1).unwrap();
        let d2 = rotation_variation(&scaled, 0.9, 1).unwrap();
        for j in 0..2 {
            for c in 0..2 {
                assert_relative_eq!(alpha * d1[j][c], d2[j][c], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn timeshift_examples() {
        let traj = cos_line(1, 3.0).with_closure(Arc::clone(
            systems::make_harmonic().closure().unwrap(),
        ));
        // q = cos t at t = 0: delta^(0) = q'(0) = 0
        let d = timeshift_variation(&traj, 0.0, 0).unwrap();
        assert_relative_eq!(d[0][0], 0.0, epsilon = 1e-12);

        // constant solution: all variations vanish
        let still = Trajectory::from_fn(1, 1, 0.0, 1.0, 5, |_| {
            vec![vec![3.0], vec![0.0], vec![0.0], vec![0.0]]
        })
        .unwrap();
        let d = timeshift_variation(&still, 0.5, 0).unwrap();
        assert_eq!(d[0], vec![0.0]);

        // Pais-Uhlenbeck q = cos t at t = pi/2: delta^(1) = q''(pi/2) = 0
        let pu_traj = cos_line(2, 3.0);
        let d = timeshift_variation(&pu_traj, std::f64::consts::FRAC_PI_2, 1).unwrap();
        assert_relative_eq!(d[1][0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn exp_timeshift_reduces_to_timeshift_at_a_zero() {
        let traj = cos_line(2, 3.0);
        let plain = timeshift_variation(&traj, 1.2, 2).unwrap();
        let exp = exp_timeshift_variation(&traj, 1.2, 2, 0.0).unwrap();
        assert_eq!(plain, exp);
    }

    #[test]
    fn exp_timeshift_leibniz_terms() {
        // At t = 0 with a = 1: delta^(0) = q', delta^(1) = a q' + q''.
        let traj = Trajectory::from_fn(1, 1, -1.0, 1.0, 41, |t| {
            // q = 2t: q' = 2, higher jets zero
            vec![vec![2.0 * t], vec![2.0], vec![0.0], vec![0.0]]
        })
        .unwrap()
        .with_closure(Arc::new(|_t, jets: &[Vec<Dual>]| {
            vec![jets[0][0] * 0.0]
        }));
        let d = exp_timeshift_variation(&traj, 0.0, 1, 1.0).unwrap();
        assert_relative_eq!(d[0][0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(d[1][0], 2.0, epsilon = 1e-12); // a q' + q'' = 2 + 0
    }

    #[test]
    fn integrand_of_timeshift_is_total_lagrangian_derivative() {
        // Autonomous harmonic on q = cos t: dL/dlambda = dL/dt = sin(2t).
        let spec = systems::make_harmonic();
        let traj = cos_line(1, 3.0).with_closure(Arc::clone(spec.closure().unwrap()));
        let fam = PerturbationFamily::time_shift();
        let t = std::f64::consts::FRAC_PI_4;
        let v = integrand(&spec, &fam, &traj, t).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integrand_vanishes_for_symmetries() {
        // Rotation family on a rotation-invariant central-force Lagrangian.
        let spec = systems::make_central_force(1.0, systems::RadialPotential::harmonic()).unwrap();
        let traj = planar_circle(3.0);
        let fam = PerturbationFamily::rotation();
        for &t in &[0.0, 0.9, 2.4] {
            assert_eq!(integrand(&spec, &fam, &traj, t).unwrap(), 0.0);
        }

        // Rotation family on the planar Pais-Uhlenbeck oscillator.
        let pu = systems::make_pais_uhlenbeck(1.0, 2.0, 2).unwrap();
        let pu_traj = Trajectory::from_fn(2, 2, 0.0, 3.0, 181, |t| {
            let (s, c) = t.sin_cos();
            vec![
                vec![c, s],
                vec![-s, c],
                vec![-c, -s],
                vec![s, -c],
                vec![c, s],
                vec![-s, c],
            ]
        })
        .unwrap();
        for &t in &[0.4, 1.7] {
            assert_relative_eq!(
                integrand(&pu, &fam, &pu_traj, t).unwrap(),
                0.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn integrand_matches_explicit_chain_rule_sum() {
        use crate::lagrangian::partial_wrt_jet;
        let spec = systems::make_pais_uhlenbeck(1.3, 0.7, 1).unwrap();
        let traj = cos_line(2, 3.0);
        let fam = PerturbationFamily::time_shift();
        let t = 1.37;
        let fast = integrand(&spec, &fam, &traj, t).unwrap();
        let delta = fam.variation(&traj, t, 2).unwrap();
        let st = traj.sample_jets(t).unwrap();
        let mut slow = 0.0;
        for (j, d) in delta.iter().enumerate() {
            let p = partial_wrt_jet(&spec, &st, j).unwrap();
            slow += systems::dot(&p, d);
        }
        assert_relative_eq!(fast, slow, max_relative = 1e-13);
    }

    #[test]
    fn commutation_of_variation_and_time_derivative() {
        // d/dt delta^(j) along the trajectory equals delta^(j+1).
        use crate::stencil;
        let pu_traj = cos_line(2, 4.0);
        let families = [
            PerturbationFamily::time_shift(),
            PerturbationFamily::exp_time_shift(0.7),
        ];
        for fam in &families {
            for j in 0..2 {
                let h = 1e-3;
                let d_num = stencil::derivative_vec(
                    |s| Ok(fam.variation(&pu_traj, s, j).unwrap()[j].clone()),
                    2.0,
                    1,
                    h,
                )
                .unwrap();
                let d_exact = fam.variation(&pu_traj, 2.0, j + 1).unwrap()[j + 1].clone();
                assert_relative_eq!(d_num[0], d_exact[0], epsilon = 1e-5);
            }
        }
        // rotation on the planar circle
        let circle = planar_circle(4.0);
        let rot = PerturbationFamily::rotation();
        let d_num = stencil::derivative_vec(
            |s| Ok(rot.variation(&circle, s, 0).unwrap()[0].clone()),
            2.0,
            1,
            1e-3,
        )
        .unwrap();
        let d_exact = rot.variation(&circle, 2.0, 1).unwrap()[1].clone();
        for c in 0..2 {
            assert_relative_eq!(d_num[c], d_exact[c], epsilon = 1e-5);
        }
    }
}
