//! Central finite-difference stencils for k-th total time derivatives.
//!
//! All stencils are fourth-order accurate; higher derivatives use wider
//! stencils directly instead of nesting first derivatives, which would
//! amplify interpolation noise multiplicatively.

use crate::error::{Error, Result};

/// Highest derivative order served by the tables.
pub const MAX_DERIVATIVE: usize = 4;

/// Offsets (in units of h) and weights (to be divided by h^k) of the
/// fourth-order central stencil for the k-th derivative, k = 1..=4.
pub fn coefficients(k: usize) -> Result<(&'static [isize], &'static [f64])> {
    const OFF5: [isize; 5] = [-2, -1, 0, 1, 2];
    const OFF7: [isize; 7] = [-3, -2, -1, 0, 1, 2, 3];
    const D1: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
    const D2: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
    const D3: [f64; 7] = [
        1.0 / 8.0,
        -1.0,
        13.0 / 8.0,
        0.0,
        -13.0 / 8.0,
        1.0,
        -1.0 / 8.0,
    ];
    const D4: [f64; 7] = [
        -1.0 / 6.0,
        2.0,
        -13.0 / 2.0,
        28.0 / 3.0,
        -13.0 / 2.0,
        2.0,
        -1.0 / 6.0,
    ];
    match k {
        1 => Ok((&OFF5, &D1)),
        2 => Ok((&OFF5, &D2)),
        3 => Ok((&OFF7, &D3)),
        4 => Ok((&OFF7, &D4)),
        _ => Err(Error::Index {
            index: k,
            max: MAX_DERIVATIVE,
        }),
    }
}

/// Half-width of the k-th derivative stencil, in units of h.
pub fn half_width(k: usize) -> usize {
    if k <= 2 {
        2
    } else {
        3
    }
}

/// Step size for the k-th derivative stencil given the accuracy scale of
/// the underlying data (the integrator tolerance): the truncation/noise
/// optimum eps^{1/(k+4)} of a fourth-order stencil, floored at 1e-3.
///
/// The noise a stencil amplifies is the per-step interpolation wiggle of
/// the quintic dense output, which scales like the step size to the sixth
/// power, i.e. tol^{3/2} under error-per-unit-step control - well below the
/// tolerance itself. Balancing against tol instead leaves an order of
/// magnitude of truncation error on the table for the highest derivatives.
pub fn step_size(k: usize, tol: f64) -> f64 {
    let eps = tol.abs().powf(1.5).max(5e-16);
    (1e-3_f64).max(eps.powf(1.0 / (k as f64 + 4.0)))
}

/// k-th derivative at `t` of a vector-valued function sampled through `f`.
/// `f` is called at the stencil nodes t + m*h.
pub fn derivative_vec<F>(mut f: F, t: f64, k: usize, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    if k == 0 {
        return f(t);
    }
    let (offsets, weights) = coefficients(k)?;
    let scale = h.powi(k as i32);
    let mut acc: Option<Vec<f64>> = None;
    for (&m, &w) in offsets.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let v = f(t + m as f64 * h)?;
        match &mut acc {
            None => {
                acc = Some(v.iter().map(|x| w * x).collect());
            }
            Some(a) => {
                if a.len() != v.len() {
                    return Err(Error::Dimension {
                        what: "stencil sample",
                        expected: a.len(),
                        got: v.len(),
                    });
                }
                for (ai, xi) in a.iter_mut().zip(&v) {
                    *ai += w * xi;
                }
            }
        }
    }
    let mut out = acc.expect("stencil has nonzero weights");
    for x in &mut out {
        *x /= scale;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn poly(t: f64) -> Result<Vec<f64>> {
        // t^4 + 2 t^3 - t
        Ok(vec![t.powi(4) + 2.0 * t.powi(3) - t])
    }

    #[test]
    fn exact_on_quartic() {
        // Fourth-order stencils differentiate a quartic exactly (up to rounding).
        let t = 0.7;
        let h = 0.1;
        let d1 = derivative_vec(poly, t, 1, h).unwrap()[0];
        let d2 = derivative_vec(poly, t, 2, h).unwrap()[0];
        let d3 = derivative_vec(poly, t, 3, h).unwrap()[0];
        let d4 = derivative_vec(poly, t, 4, h).unwrap()[0];
        assert_relative_eq!(d1, 4.0 * t.powi(3) + 6.0 * t * t - 1.0, epsilon = 1e-10);
        assert_relative_eq!(d2, 12.0 * t * t + 12.0 * t, epsilon = 1e-9);
        assert_relative_eq!(d3, 24.0 * t + 12.0, epsilon = 1e-8);
        assert_relative_eq!(d4, 24.0, epsilon = 1e-6);
    }

    #[test]
    fn fourth_order_on_sine() {
        let f = |t: f64| -> Result<Vec<f64>> { Ok(vec![t.sin()]) };
        for k in 1..=4 {
            let h = step_size(k, 1e-12);
            let d = derivative_vec(f, 0.6, k, h).unwrap()[0];
            let exact = match k {
                1 => 0.6_f64.cos(),
                2 => -0.6_f64.sin(),
                3 => -0.6_f64.cos(),
                _ => 0.6_f64.sin(),
            };
            assert_relative_eq!(d, exact, epsilon = 1e-6);
        }
    }

    #[test]
    fn k_zero_is_identity() {
        let v = derivative_vec(poly, 2.0, 0, 0.1).unwrap();
        assert_eq!(v, poly(2.0).unwrap());
    }

    #[test]
    fn rejects_unsupported_order() {
        assert!(coefficients(5).is_err());
    }

    #[test]
    fn step_size_floor() {
        assert_eq!(step_size(1, 1e-30), 1e-3);
        assert!(step_size(1, 1e-10) > 4.9e-3 && step_size(1, 1e-10) < 5.1e-3);
    }
}
