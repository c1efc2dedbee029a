use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{Func, Node};
use crate::error::ExprError;

/// A value together with its gradient with respect to `x1..xn`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub deriv: Vec<f64>,
}

impl Dual {
    pub fn constant(value: f64, n: usize) -> Self {
        Dual {
            value,
            deriv: vec![0.0; n],
        }
    }

    /// The `index`-th coordinate function evaluated at `value`.
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut deriv = vec![0.0; n];
        deriv[index] = 1.0;
        Dual { value, deriv }
    }

    fn chain(&self, value: f64, slope: f64) -> Self {
        Dual {
            value,
            deriv: self.deriv.iter().map(|d| slope * d).collect(),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, rhs: Dual) -> Dual {
        self.value += rhs.value;
        for (a, b) in self.deriv.iter_mut().zip(&rhs.deriv) {
            *a += b;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(mut self, rhs: Dual) -> Dual {
        self.value -= rhs.value;
        for (a, b) in self.deriv.iter_mut().zip(&rhs.deriv) {
            *a -= b;
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(mut self, rhs: Dual) -> Dual {
        for (a, b) in self.deriv.iter_mut().zip(&rhs.deriv) {
            *a = *a * rhs.value + self.value * b;
        }
        self.value *= rhs.value;
        self
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(mut self, rhs: Dual) -> Dual {
        let inv = 1.0 / rhs.value;
        let q = self.value * inv;
        for (a, b) in self.deriv.iter_mut().zip(&rhs.deriv) {
            *a = (*a - q * b) * inv;
        }
        self.value = q;
        self
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(mut self) -> Dual {
        self.value = -self.value;
        self.deriv.iter_mut().for_each(|d| *d = -*d);
        self
    }
}

/// Univariate dual number used for path velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet1 {
    pub value: f64,
    pub deriv: f64,
}

impl Jet1 {
    pub fn variable(value: f64) -> Self {
        Jet1 { value, deriv: 1.0 }
    }
}

/// Arithmetic needed by the tree walker. Domain checks live in `walk`, so the
/// implementations may assume valid arguments.
pub(crate) trait Scalar: Sized + Clone {
    /// Whether the type carries derivatives that must stay finite.
    const DIFFERENTIABLE: bool;
    fn is_finite(&self) -> bool;
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    /// `f(self)` given `f(value)` and `f'(value)`.
    fn apply(&self, value: f64, slope: f64) -> Self;
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Self;
    fn neg(self) -> Self;
    fn atan2(self, x: Self) -> Self;
}

impl Scalar for f64 {
    const DIFFERENTIABLE: bool = false;
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn apply(&self, value: f64, _slope: f64) -> Self {
        value
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

impl Scalar for Dual {
    const DIFFERENTIABLE: bool = true;
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.deriv.iter().all(|d| d.is_finite())
    }
    fn constant_like(&self, c: f64) -> Self {
        Dual::constant(c, self.deriv.len())
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn apply(&self, value: f64, slope: f64) -> Self {
        self.chain(value, slope)
    }
    fn add(self, rhs: Self) -> Self {
        self + rhs
    }
    fn sub(self, rhs: Self) -> Self {
        self - rhs
    }
    fn mul(self, rhs: Self) -> Self {
        self * rhs
    }
    fn div(self, rhs: Self) -> Self {
        self / rhs
    }
    fn neg(self) -> Self {
        -self
    }
    fn atan2(self, x: Self) -> Self {
        let (y0, x0) = (self.value, x.value);
        let r2 = x0 * x0 + y0 * y0;
        Dual {
            value: y0.atan2(x0),
            deriv: self
                .deriv
                .iter()
                .zip(&x.deriv)
                .map(|(dy, dx)| (x0 * dy - y0 * dx) / r2)
                .collect(),
        }
    }
}

impl Scalar for Jet1 {
    const DIFFERENTIABLE: bool = true;
    fn is_finite(&self) -> bool {
        self.value.is_finite() && self.deriv.is_finite()
    }
    fn constant_like(&self, c: f64) -> Self {
        Jet1 {
            value: c,
            deriv: 0.0,
        }
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn apply(&self, value: f64, slope: f64) -> Self {
        Jet1 {
            value,
            deriv: slope * self.deriv,
        }
    }
    fn add(self, rhs: Self) -> Self {
        Jet1 {
            value: self.value + rhs.value,
            deriv: self.deriv + rhs.deriv,
        }
    }
    fn sub(self, rhs: Self) -> Self {
        Jet1 {
            value: self.value - rhs.value,
            deriv: self.deriv - rhs.deriv,
        }
    }
    fn mul(self, rhs: Self) -> Self {
        Jet1 {
            value: self.value * rhs.value,
            deriv: self.deriv * rhs.value + self.value * rhs.deriv,
        }
    }
    fn div(self, rhs: Self) -> Self {
        let q = self.value / rhs.value;
        Jet1 {
            value: q,
            deriv: (self.deriv - q * rhs.deriv) / rhs.value,
        }
    }
    fn neg(self) -> Self {
        Jet1 {
            value: -self.value,
            deriv: -self.deriv,
        }
    }
    fn atan2(self, x: Self) -> Self {
        let r2 = x.value * x.value + self.value * self.value;
        Jet1 {
            value: self.value.atan2(x.value),
            deriv: (x.value * self.deriv - self.value * x.deriv) / r2,
        }
    }
}

/// Evaluates `node` at `x`; `zero` is a constant of the right shape.
pub(crate) fn walk<S: Scalar>(node: &Node, x: &[S], zero: &S) -> Result<S, ExprError> {
    let out = match node {
        Node::Num(c) => zero.constant_like(*c),
        Node::Var(i) => x[*i].clone(),
        Node::Neg(a) => walk(a, x, zero)?.neg(),
        Node::Add(a, b) => walk(a, x, zero)?.add(walk(b, x, zero)?),
        Node::Sub(a, b) => walk(a, x, zero)?.sub(walk(b, x, zero)?),
        Node::Mul(a, b) => walk(a, x, zero)?.mul(walk(b, x, zero)?),
        Node::Div(a, b) => {
            let num = walk(a, x, zero)?;
            let den = walk(b, x, zero)?;
            if den.value() == 0.0 {
                return Err(ExprError::Domain("division by zero".into()));
            }
            num.div(den)
        }
        Node::Pow(a, n) => {
            let base = walk(a, x, zero)?;
            let v = base.value();
            let value = v.powi(*n as i32);
            let slope = if *n == 0 {
                0.0
            } else {
                f64::from(*n) * v.powi(*n as i32 - 1)
            };
            base.apply(value, slope)
        }
        Node::Call(f, args) => {
            let arg = walk(&args[0], x, zero)?;
            let v = arg.value();
            match f {
                Func::Sin => arg.apply(v.sin(), v.cos()),
                Func::Cos => arg.apply(v.cos(), -v.sin()),
                Func::Exp => {
                    let e = v.exp();
                    arg.apply(e, e)
                }
                Func::Log => {
                    if v <= 0.0 {
                        return Err(ExprError::Domain(format!("log of non-positive value {v}")));
                    }
                    arg.apply(v.ln(), 1.0 / v)
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(ExprError::Domain(format!("sqrt of negative value {v}")));
                    }
                    let r = v.sqrt();
                    if r == 0.0 && S::DIFFERENTIABLE {
                        return Err(ExprError::Domain(
                            "sqrt is not differentiable at 0".into(),
                        ));
                    }
                    arg.apply(r, 0.5 / r)
                }
                Func::Atan2 => {
                    let xarg = walk(&args[1], x, zero)?;
                    if v == 0.0 && xarg.value() == 0.0 {
                        return Err(ExprError::Domain("atan2(0, 0) is undefined".into()));
                    }
                    arg.atan2(xarg)
                }
            }
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(ExprError::Domain("non-finite intermediate value".into()))
    }
}
