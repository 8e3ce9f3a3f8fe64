//! Jets (tuples of time derivatives at an instant) and drift reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The state of a trajectory at one instant: time plus the jet vectors
/// `jets[j]` = j-th time derivative of the configuration, j = 0..=M.
#[derive(Clone, Debug, PartialEq)]
pub struct JetState {
    pub t: f64,
    pub jets: Vec<Vec<f64>>,
}

impl JetState {
    /// Build a jet state, validating shared dimension and finiteness.
    /// Requires at least two jet vectors (configuration and velocity).
    pub fn new(t: f64, jets: Vec<Vec<f64>>) -> Result<Self> {
        if jets.len() < 2 {
            return Err(Error::Arity {
                what: "jet vectors",
                needed: 2,
                got: jets.len(),
            });
        }
        let n = jets[0].len();
        if n == 0 {
            return Err(Error::Dimension {
                what: "jet vector",
                expected: 1,
                got: 0,
            });
        }
        for v in &jets {
            if v.len() != n {
                return Err(Error::Dimension {
                    what: "jet vector",
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("jet state"));
            }
        }
        if !t.is_finite() {
            return Err(Error::NonFinite("jet state time"));
        }
        Ok(JetState { t, jets })
    }

    /// Configuration dimension n.
    pub fn dim(&self) -> usize {
        self.jets[0].len()
    }

    /// Highest stored derivative order M.
    pub fn max_order(&self) -> usize {
        self.jets.len() - 1
    }

    /// The j-th jet, or an arity error if the state does not carry it.
    pub fn jet(&self, j: usize) -> Result<&[f64]> {
        self.jets.get(j).map(|v| v.as_slice()).ok_or(Error::Arity {
            what: "jet order",
            needed: j + 1,
            got: self.jets.len(),
        })
    }
}

/// Deviation statistics of a candidate constant along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// Value at the first sample (the reference instant).
    pub reference_value: f64,
    /// max_i |v_i - v_0|
    pub max_abs_drift: f64,
    /// max_abs_drift / max(1, |v_0|)
    pub max_rel_drift: f64,
    pub sample_count: usize,
}

/// Summarize the deviation of a `(time, value)` series from its first entry.
pub fn drift_report(values: &[(f64, f64)]) -> Result<DriftReport> {
    if values.len() < 2 {
        return Err(Error::Arity {
            what: "drift samples",
            needed: 2,
            got: values.len(),
        });
    }
    let reference = values[0].1;
    let mut max_abs = 0.0_f64;
    for &(_, v) in &values[1..] {
        max_abs = max_abs.max((v - reference).abs());
    }
    Ok(DriftReport {
        reference_value: reference,
        max_abs_drift: max_abs,
        max_rel_drift: max_abs / reference.abs().max(1.0),
        sample_count: values.len(),
    })
}
