//! A small closed expression language for coefficient functions of chart
//! coordinates.
//!
//! Expressions are built over the variables `x1..x9`, numeric literals, the
//! four arithmetic operators, unary minus, integer powers and the functions
//! `sin`, `cos`, `exp`, `log`, `sqrt` and `atan2`. Values are computed in IEEE
//! double precision; first derivatives come from forward-mode dual numbers, so
//! they are exact up to rounding.
//!
//! ```
//! use holonome_core::expr::Expr;
//!
//! let e = Expr::parse("x1*x2 + sin(x1)", 2).unwrap();
//! let d = e.eval_dual(&[1.0, 0.0]).unwrap();
//! assert!((d.value - 1f64.sin()).abs() < 1e-15);
//! assert!((d.deriv[0] - 1f64.cos()).abs() < 1e-15);
//! assert!((d.deriv[1] - 1.0).abs() < 1e-15);
//! ```

mod dual;
mod parse;
mod print;

use std::fmt;

use nalgebra::DMatrix;

pub use dual::Dual;

use crate::error::ExprError;
use dual::{Jet1, Scalar};

/// Built-in functions of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Atan2,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Atan2 => "atan2",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "atan2" => Func::Atan2,
            _ => return None,
        })
    }
}

/// Expression tree node. Variables are zero-based (`x1` is `Var(0)`).
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, u32),
    Call(Func, Vec<Node>),
}

impl Node {
    pub fn node_count(&self) -> usize {
        match self {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) => 1 + a.node_count(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Node::Call(_, args) => 1 + args.iter().map(Node::node_count).sum::<usize>(),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Node::Num(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Pow(a, _) => a.max_var(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
            Node::Call(_, args) => args.iter().filter_map(Node::max_var).max(),
        }
    }

    fn check_arity(&self) -> Result<(), ExprError> {
        match self {
            Node::Num(_) | Node::Var(_) => Ok(()),
            Node::Neg(a) | Node::Pow(a, _) => a.check_arity(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.check_arity()?;
                b.check_arity()
            }
            Node::Call(f, args) => {
                if args.len() != f.arity() {
                    return Err(ExprError::Arity {
                        func: f.name(),
                        expected: f.arity(),
                        found: args.len(),
                        offset: 0,
                    });
                }
                args.iter().try_for_each(Node::check_arity)
            }
        }
    }

    fn substitute(&self, replacements: &[Node]) -> Node {
        match self {
            Node::Num(c) => Node::Num(*c),
            Node::Var(i) => replacements[*i].clone(),
            Node::Neg(a) => Node::Neg(Box::new(a.substitute(replacements))),
            Node::Pow(a, n) => Node::Pow(Box::new(a.substitute(replacements)), *n),
            Node::Add(a, b) => Node::Add(
                Box::new(a.substitute(replacements)),
                Box::new(b.substitute(replacements)),
            ),
            Node::Sub(a, b) => Node::Sub(
                Box::new(a.substitute(replacements)),
                Box::new(b.substitute(replacements)),
            ),
            Node::Mul(a, b) => Node::Mul(
                Box::new(a.substitute(replacements)),
                Box::new(b.substitute(replacements)),
            ),
            Node::Div(a, b) => Node::Div(
                Box::new(a.substitute(replacements)),
                Box::new(b.substitute(replacements)),
            ),
            Node::Call(f, args) => {
                Node::Call(*f, args.iter().map(|a| a.substitute(replacements)).collect())
            }
        }
    }
}

/// An immutable expression over `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    dim: usize,
}

impl Expr {
    /// Parses `source` as an expression in the variables `x1..x{dim}`.
    pub fn parse(source: &str, dim: usize) -> Result<Expr, ExprError> {
        let root = parse::parse(source, dim)?;
        Ok(Expr { root, dim })
    }

    /// Wraps an existing tree, checking operator arity and variable range.
    pub fn from_node(root: Node, dim: usize) -> Result<Expr, ExprError> {
        root.check_arity()?;
        if let Some(i) = root.max_var() {
            if i >= dim {
                return Err(ExprError::Dimension { index: i + 1, dim });
            }
        }
        Ok(Expr { root, dim })
    }

    pub fn constant(value: f64, dim: usize) -> Expr {
        Expr {
            root: Node::Num(value),
            dim,
        }
    }

    /// The coordinate function `x{index+1}`.
    pub fn var(index: usize, dim: usize) -> Expr {
        assert!(index < dim, "variable index {index} out of range for dim {dim}");
        Expr {
            root: Node::Var(index),
            dim,
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Num(c) if c == 0.0)
    }

    /// Composes with `replacements`: variable `x{i+1}` becomes
    /// `replacements[i]`. All replacements must share one dimension, which
    /// becomes the dimension of the result.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        assert_eq!(
            replacements.len(),
            self.dim,
            "substitution needs one replacement per variable"
        );
        let dim = replacements.first().map_or(0, |r| r.dim);
        assert!(replacements.iter().all(|r| r.dim == dim));
        let nodes: Vec<Node> = replacements.iter().map(|r| r.root.clone()).collect();
        Expr {
            root: self.root.substitute(&nodes),
            dim,
        }
    }

    fn check_len(&self, len: usize) -> Result<(), ExprError> {
        if len != self.dim {
            return Err(ExprError::PointDimension {
                expected: self.dim,
                found: len,
            });
        }
        Ok(())
    }

    /// Evaluates the expression at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, ExprError> {
        self.check_len(x.len())?;
        dual::walk(&self.root, x, &0.0)
    }

    /// Evaluates value and gradient at `x` by dual-number propagation.
    pub fn eval_dual(&self, x: &[f64]) -> Result<Dual, ExprError> {
        self.check_len(x.len())?;
        let n = x.len();
        let seeds: Vec<Dual> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual::variable(v, i, n))
            .collect();
        dual::walk(&self.root, &seeds, &Dual::constant(0.0, n))
    }

    /// Value and derivative of a one-variable expression.
    pub fn eval_univariate(&self, t: f64) -> Result<(f64, f64), ExprError> {
        self.check_len(1)?;
        let jet = dual::walk(&self.root, &[Jet1::variable(t)], &Jet1::variable(0.0).constant_like(0.0))?;
        Ok((jet.value(), jet.deriv))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_node(f, &self.root)
    }
}

/// A `k×k` matrix of expressions in `dim` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixExpr {
    entries: Vec<Vec<Expr>>,
    dim: usize,
}

impl MatrixExpr {
    pub fn new(entries: Vec<Vec<Expr>>) -> Result<MatrixExpr, ExprError> {
        let k = entries.len();
        if k == 0 || entries.iter().any(|row| row.len() != k) {
            return Err(ExprError::Syntax {
                offset: 0,
                message: format!("matrix expression must be square and non-empty ({k} rows)"),
            });
        }
        let dim = entries[0][0].dim();
        if let Some(bad) = entries.iter().flatten().find(|e| e.dim() != dim) {
            return Err(ExprError::Dimension {
                index: bad.dim(),
                dim,
            });
        }
        Ok(MatrixExpr { entries, dim })
    }

    /// Parses a row-major table of source strings.
    pub fn parse<S: AsRef<str>>(rows: &[Vec<S>], dim: usize) -> Result<MatrixExpr, ExprError> {
        let entries = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| Expr::parse(s.as_ref(), dim))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        MatrixExpr::new(entries)
    }

    /// Constant matrix.
    pub fn constant(m: &DMatrix<f64>, dim: usize) -> MatrixExpr {
        let entries = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| Expr::constant(m[(i, j)], dim))
                    .collect()
            })
            .collect();
        MatrixExpr { entries, dim }
    }

    pub fn zeros(k: usize, dim: usize) -> MatrixExpr {
        MatrixExpr::constant(&DMatrix::zeros(k, k), dim)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<Expr>] {
        &self.entries
    }

    pub fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        let k = self.size();
        let mut m = DMatrix::zeros(k, k);
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if !e.is_zero() {
                    m[(i, j)] = e.eval(x)?;
                }
            }
        }
        Ok(m)
    }

    /// Value and the partial derivatives `∂_ν M` for every coordinate `ν`.
    pub fn eval_jet(&self, x: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>), ExprError> {
        let k = self.size();
        let n = x.len();
        let mut value = DMatrix::zeros(k, k);
        let mut partials = vec![DMatrix::zeros(k, k); n];
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                if e.is_zero() {
                    continue;
                }
                let d = e.eval_dual(x)?;
                value[(i, j)] = d.value;
                for (nu, p) in partials.iter_mut().enumerate() {
                    p[(i, j)] = d.deriv[nu];
                }
            }
        }
        Ok((value, partials))
    }
}
