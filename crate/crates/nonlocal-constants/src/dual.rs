//! First-order dual numbers for forward-mode directional differentiation.
//!
//! A [`Dual`] carries a value and the derivative of that value along one
//! seeded direction. Lagrangians and closures in this crate are written once
//! over `Dual`; evaluating with all seeds zero reproduces plain `f64`
//! arithmetic bit for bit, while seeding one slot yields an exact partial
//! derivative in a single pass.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    /// Value part.
    pub re: f64,
    /// Derivative along the seeded direction.
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub fn new(re: f64, eps: f64) -> Self {
        Dual { re, eps }
    }

    /// A constant: derivative zero.
    #[inline]
    pub fn constant(x: f64) -> Self {
        Dual { re: x, eps: 0.0 }
    }

    /// The seeded variable: derivative one.
    #[inline]
    pub fn seeded(x: f64) -> Self {
        Dual { re: x, eps: 1.0 }
    }

    #[inline]
    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::constant(1.0);
        }
        let d = self.re.powi(n - 1);
        Dual::new(d * self.re, f64::from(n) * d * self.eps)
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual::new(r, self.eps / (2.0 * r))
    }

    #[inline]
    pub fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.eps)
    }

    #[inline]
    pub fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    #[inline]
    pub fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.re.cos() * self.eps)
    }

    #[inline]
    pub fn cos(self) -> Self {
        Dual::new(self.re.cos(), -self.re.sin() * self.eps)
    }

    #[inline]
    pub fn recip(self) -> Self {
        let r = 1.0 / self.re;
        Dual::new(r, -r * r * self.eps)
    }
}

impl From<f64> for Dual {
    #[inline]
    fn from(x: f64) -> Self {
        Dual::constant(x)
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, rhs: Dual) -> Dual {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, rhs: Dual) -> Dual {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        Dual::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.re;
        Dual::new(
            self.re * inv,
            (self.eps - self.re * inv * rhs.eps) * inv,
        )
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, rhs: Dual) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, rhs: Dual) {
        *self = *self - rhs;
    }
}

macro_rules! scalar_ops {
    ($($op:ident :: $f:ident),*) => {$(
        impl $op<f64> for Dual {
            type Output = Dual;
            #[inline]
            fn $f(self, rhs: f64) -> Dual {
                self.$f(Dual::constant(rhs))
            }
        }
        impl $op<Dual> for f64 {
            type Output = Dual;
            #[inline]
            fn $f(self, rhs: Dual) -> Dual {
                Dual::constant(self).$f(rhs)
            }
        }
    )*};
}
scalar_ops!(Add::add, Sub::sub, Mul::mul, Div::div);

/// Dot product of two dual vectors.
#[inline]
pub fn dot(a: &[Dual], b: &[Dual]) -> Dual {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Dual::constant(0.0);
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Squared Euclidean norm of a dual vector.
#[inline]
pub fn norm_sq(a: &[Dual]) -> Dual {
    dot(a, a)
}

/// Lift an `f64` vector to constant duals.
pub fn lift(v: &[f64]) -> Vec<Dual> {
    v.iter().copied().map(Dual::constant).collect()
}

/// Lift a jet list (`jets[j]` = j-th derivative vector) to constant duals.
pub fn lift_jets(jets: &[Vec<f64>]) -> Vec<Vec<Dual>> {
    jets.iter().map(|v| lift(v)).collect()
}
