//! Adaptive composite Gauss-Lobatto quadrature.
//!
//! Used for the nonlocal integral channel: one call per integrator step (or
//! partial step), bisecting until the 5-point Lobatto rule agrees with its
//! two-half refinement. Integrals are signed, so `a > b` is fine.

use crate::error::Result;

const LOBATTO_NODE: f64 = 0.6546536707079771; // sqrt(3/7)
const W_END: f64 = 0.1; // 1/10
const W_MID: f64 = 49.0 / 90.0;
const W_CENTER: f64 = 32.0 / 45.0;

fn lobatto5<F>(f: &F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let x1 = c - LOBATTO_NODE * h;
    let x2 = c + LOBATTO_NODE * h;
    Ok(h * (W_END * (f(a)? + f(b)?) + W_MID * (f(x1)? + f(x2)?) + W_CENTER * f(c)?))
}

fn refine<F>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    let m = 0.5 * (a + b);
    let left = lobatto5(f, a, m)?;
    let right = lobatto5(f, m, b)?;
    let halves = left + right;
    let err = (halves - whole).abs();
    // Roundoff floor: once the two estimates agree to a few ulps of the
    // running value there is nothing left to gain by splitting.
    if err <= tol.max(4.0 * f64::EPSILON * halves.abs()) || depth >= 24 {
        return Ok(halves);
    }
    Ok(refine(f, a, m, left, 0.5 * tol, depth + 1)?
        + refine(f, m, b, right, 0.5 * tol, depth + 1)?)
}

/// Integral of `f` from `a` to `b` (signed), bisecting until the local
/// error estimate drops below `tol`.
pub fn adaptive_lobatto<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64> + ?Sized,
{
    if a == b {
        return Ok(0.0);
    }
    let whole = lobatto5(f, a, b)?;
    refine(f, a, b, whole, tol.abs(), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_on_degree_seven() {
        // One 5-point Lobatto panel integrates x^7 exactly.
        let q = adaptive_lobatto(&|x| Ok(x.powi(7)), 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(q, 2.0_f64.powi(8) / 8.0, max_relative = 1e-14);
    }

    #[test]
    fn oscillatory_integrand() {
        let q = adaptive_lobatto(&|x: f64| Ok((5.0 * x).sin()), 0.0, 3.0, 1e-13).unwrap();
        assert_relative_eq!(q, (1.0 - (15.0_f64).cos()) / 5.0, epsilon = 1e-12);
    }

    #[test]
    fn reversed_limits_are_signed() {
        let fwd = adaptive_lobatto(&|x: f64| Ok(x.exp()), 0.0, 1.0, 1e-13).unwrap();
        let bwd = adaptive_lobatto(&|x: f64| Ok(x.exp()), 1.0, 0.0, 1e-13).unwrap();
        assert_relative_eq!(fwd, -bwd, max_relative = 1e-14);
        assert_relative_eq!(fwd, 1.0_f64.exp() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_lobatto(&|_| Ok(1.0), 2.0, 2.0, 1e-12).unwrap(), 0.0);
    }
}
