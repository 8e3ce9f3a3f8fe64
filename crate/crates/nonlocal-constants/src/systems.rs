//! Catalog of concrete Lagrangian systems with explicit closures, plus the
//! closed-form Pais-Uhlenbeck first integrals used as oracles for the
//! generic evaluators.

use std::sync::Arc;

use crate::dual::{self, Dual};
use crate::error::{Error, Result};
use crate::jet::JetState;
use crate::lagrangian::LagrangianSpec;

/// A potential U(q) given by user callbacks for the value and the gradient.
/// Both are written over duals so catalogued Lagrangians stay fully
/// differentiable; there is no automatic gradient.
#[derive(Clone)]
pub struct Potential {
    value: Arc<dyn Fn(&[Dual]) -> Dual + Send + Sync>,
    gradient: Arc<dyn Fn(&[Dual]) -> Vec<Dual> + Send + Sync>,
}

impl Potential {
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(&[Dual]) -> Dual + Send + Sync + 'static,
        G: Fn(&[Dual]) -> Vec<Dual> + Send + Sync + 'static,
    {
        Potential {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// U = 0.
    pub fn zero() -> Self {
        Potential::new(
            |_| Dual::constant(0.0),
            |q| vec![Dual::constant(0.0); q.len()],
        )
    }

    /// U = (1/2) ||q||^2.
    pub fn harmonic_well() -> Self {
        Potential::new(
            |q| 0.5 * dual::norm_sq(q),
            |q| q.to_vec(),
        )
    }

    /// U = -||q||^4. Unbounded below: used to exhibit finite-time escape in
    /// the past-existence experiments.
    pub fn quartic_hill() -> Self {
        Potential::new(
            |q| {
                let n = dual::norm_sq(q);
                -(n * n)
            },
            |q| {
                let n = dual::norm_sq(q);
                q.iter().map(|&qi| -4.0 * n * qi).collect()
            },
        )
    }

    pub fn value_dual(&self, q: &[Dual]) -> Dual {
        (self.value)(q)
    }

    pub fn gradient_dual(&self, q: &[Dual]) -> Vec<Dual> {
        (self.gradient)(q)
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        (self.value)(&dual::lift(q)).re
    }

    pub fn gradient(&self, q: &[f64]) -> Vec<f64> {
        (self.gradient)(&dual::lift(q))
            .into_iter()
            .map(|d| d.re)
            .collect()
    }
}

/// A radial potential u(r) for planar central-force fields, with its
/// derivative u'(r).
#[derive(Clone)]
pub struct RadialPotential {
    value: Arc<dyn Fn(Dual) -> Dual + Send + Sync>,
    derivative: Arc<dyn Fn(Dual) -> Dual + Send + Sync>,
}

impl RadialPotential {
    pub fn new<V, D>(value: V, derivative: D) -> Self
    where
        V: Fn(Dual) -> Dual + Send + Sync + 'static,
        D: Fn(Dual) -> Dual + Send + Sync + 'static,
    {
        RadialPotential {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    /// u(r) = (1/2) r^2 (isotropic oscillator).
    pub fn harmonic() -> Self {
        RadialPotential::new(|r| 0.5 * r * r, |r| r)
    }
}

/// Parameter bag for the catalog; resolved by the experiment runner.
#[derive(Clone)]
pub struct SystemParams {
    /// Mass, > 0.
    pub m: f64,
    /// Viscous coefficient, >= 0.
    pub k: f64,
    /// Pais-Uhlenbeck frequencies, > 0.
    pub w1: f64,
    pub w2: f64,
    /// Exponential time-shift rate.
    pub a: f64,
    /// Potential for the viscous / central systems.
    pub potential: Option<Potential>,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            m: 1.0,
            k: 0.0,
            w1: 1.0,
            w2: 2.0,
            a: 0.0,
            potential: None,
        }
    }
}

/// One-dimensional harmonic oscillator: L = (1/2) q'^2 - (1/2) q^2,
/// closure q'' = -q.
pub fn make_harmonic() -> LagrangianSpec {
    LagrangianSpec::new(1, 1, |_, jets| {
        0.5 * (jets[1][0] * jets[1][0]) - 0.5 * (jets[0][0] * jets[0][0])
    })
    .expect("valid order/dim")
    .with_closure(|_, jets| vec![-jets[0][0]])
}

/// Planar particle in a central force field:
/// L = (1/2) m ||q'||^2 - u(||q||), closure m q'' = -u'(r) q / r.
pub fn make_central_force(m: f64, u: RadialPotential) -> Result<LagrangianSpec> {
    if m <= 0.0 {
        return Err(Error::Parameter {
            name: "m",
            value: m,
            reason: "mass must be positive",
        });
    }
    let u_eval = u.clone();
    let spec = LagrangianSpec::new(1, 2, move |_, jets| {
        let r = dual::norm_sq(&jets[0]).sqrt();
        0.5 * m * dual::norm_sq(&jets[1]) - (u_eval.value)(r)
    })?
    .with_closure(move |_, jets| {
        let r = dual::norm_sq(&jets[0]).sqrt();
        let scale = (u.derivative)(r) / (m * r);
        jets[0].iter().map(|&qi| -(scale * qi)).collect()
    });
    Ok(spec)
}

/// Particle with viscous (linear) drag in the potential U: the
/// exponentially weighted Lagrangian L = e^{kt/m} ((1/2) m ||q'||^2 - U(q))
/// whose Euler-Lagrange equation is m q'' = -k q' - grad U(q).
pub fn make_viscous(m: f64, k: f64, dim: usize, potential: Potential) -> Result<LagrangianSpec> {
    if m <= 0.0 {
        return Err(Error::Parameter {
            name: "m",
            value: m,
            reason: "mass must be positive",
        });
    }
    if k < 0.0 {
        return Err(Error::Parameter {
            name: "k",
            value: k,
            reason: "viscous coefficient must be nonnegative",
        });
    }
    let pot = potential.clone();
    let spec = LagrangianSpec::new(1, dim, move |t, jets| {
        (t * (k / m)).exp() * (0.5 * m * dual::norm_sq(&jets[1]) - pot.value_dual(&jets[0]))
    })?
    .with_closure(move |_, jets| {
        let grad = potential.gradient_dual(&jets[0]);
        jets[1]
            .iter()
            .zip(&grad)
            .map(|(&v, &g)| (-(k * v) - g) / m)
            .collect()
    });
    Ok(spec)
}

/// Pais-Uhlenbeck oscillator of order 2 in n dimensions:
/// L = (1/2)||q''||^2 - (1/2)(w1^2 + w2^2)||q'||^2 + (1/2) w1^2 w2^2 ||q||^2,
/// closure q'''' = -(w1^2 + w2^2) q'' - w1^2 w2^2 q.
pub fn make_pais_uhlenbeck(w1: f64, w2: f64, n: usize) -> Result<LagrangianSpec> {
    if w1 <= 0.0 {
        return Err(Error::Parameter {
            name: "w1",
            value: w1,
            reason: "frequency must be positive",
        });
    }
    if w2 <= 0.0 {
        return Err(Error::Parameter {
            name: "w2",
            value: w2,
            reason: "frequency must be positive",
        });
    }
    let ws = w1 * w1 + w2 * w2;
    let wp = w1 * w1 * w2 * w2;
    let spec = LagrangianSpec::new(2, n, move |_, jets| {
        0.5 * dual::norm_sq(&jets[2]) - 0.5 * ws * dual::norm_sq(&jets[1])
            + 0.5 * wp * dual::norm_sq(&jets[0])
    })?
    .with_closure(move |_, jets| {
        jets[0]
            .iter()
            .zip(&jets[2])
            .map(|(&q, &q2)| -(ws * q2) - wp * q)
            .collect()
    });
    Ok(spec)
}

fn pu_jets(state: &JetState) -> Result<(&[f64], &[f64], &[f64], &[f64])> {
    if state.jets.len() < 4 {
        return Err(Error::Arity {
            what: "Pais-Uhlenbeck jets",
            needed: 4,
            got: state.jets.len(),
        });
    }
    Ok((
        &state.jets[0],
        &state.jets[1],
        &state.jets[2],
        &state.jets[3],
    ))
}

/// Time-shift first integral of the Pais-Uhlenbeck oscillator:
/// 2 K1 = ||q''||^2 - (w1^2 + w2^2)||q'||^2 - 2 q'''.q' - w1^2 w2^2 ||q||^2.
pub fn pu_k1(state: &JetState, w1: f64, w2: f64) -> Result<f64> {
    let (q, q1, q2, q3) = pu_jets(state)?;
    let ws = w1 * w1 + w2 * w2;
    let wp = w1 * w1 * w2 * w2;
    Ok(0.5
        * (norm_sq(q2) - ws * norm_sq(q1) - 2.0 * dot(q3, q1) - wp * norm_sq(q)))
}

/// Space-change first integral of the Pais-Uhlenbeck oscillator:
/// 2 K2 = (w1^4 + w1^2 w2^2 + w2^4)||q'||^2 + ||q'''||^2
///        + 2 w1^2 w2^2 q.q'' + (w1^2 + w2^2)(2 q'''.q' + w1^2 w2^2 ||q||^2).
pub fn pu_k2(state: &JetState, w1: f64, w2: f64) -> Result<f64> {
    let (q, q1, q2, q3) = pu_jets(state)?;
    let (w1s, w2s) = (w1 * w1, w2 * w2);
    let ws = w1s + w2s;
    let wp = w1s * w2s;
    Ok(0.5
        * ((w1s * w1s + wp + w2s * w2s) * norm_sq(q1)
            + norm_sq(q3)
            + 2.0 * wp * dot(q, q2)
            + ws * (2.0 * dot(q3, q1) + wp * norm_sq(q))))
}

/// Angular-momentum-like first integral of the planar Pais-Uhlenbeck
/// oscillator:
/// K3 = (w1^2 + w2^2) det(q', q) + det(q', q'') + det(q''', q).
pub fn pu_k3(state: &JetState, w1: f64, w2: f64) -> Result<f64> {
    let (q, q1, q2, q3) = pu_jets(state)?;
    if state.dim() != 2 {
        return Err(Error::Dimension {
            what: "planar Pais-Uhlenbeck state",
            expected: 2,
            got: state.dim(),
        });
    }
    let ws = w1 * w1 + w2 * w2;
    Ok(ws * det2(q1, q) + det2(q1, q2) + det2(q3, q))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn det2(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}
