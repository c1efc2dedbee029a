use std::fmt::{self, Write};

use super::Node;

// Binding strength of each node kind; higher binds tighter.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const NEGATION: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn strength(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Neg(_) => NEGATION,
        Node::Pow(..) => POWER,
        Node::Num(v) if v.is_sign_negative() => SUM,
        Node::Num(_) | Node::Var(_) | Node::Call(..) => ATOM,
    }
}

fn child<W: Write>(out: &mut W, node: &Node, min: u8) -> fmt::Result {
    if strength(node) < min {
        out.write_char('(')?;
        write_node(out, node)?;
        out.write_char(')')
    } else {
        write_node(out, node)
    }
}

/// Writes `node` so that parsing the output reproduces the same tree.
pub(super) fn write_node<W: Write>(out: &mut W, node: &Node) -> fmt::Result {
    match node {
        Node::Num(v) => write!(out, "{v:?}"),
        Node::Var(i) => write!(out, "x{}", i + 1),
        Node::Neg(a) => {
            out.write_char('-')?;
            child(out, a, POWER)
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            child(out, a, SUM)?;
            out.write_str(if matches!(node, Node::Add(..)) { " + " } else { " - " })?;
            child(out, b, PRODUCT)
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            child(out, a, PRODUCT)?;
            out.write_str(if matches!(node, Node::Mul(..)) { "*" } else { "/" })?;
            child(out, b, NEGATION)
        }
        Node::Pow(a, n) => {
            child(out, a, ATOM)?;
            write!(out, "^{n}")
        }
        Node::Call(f, args) => {
            write!(out, "{}(", f.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.write_str(", ")?;
                }
                write_node(out, a)?;
            }
            out.write_char(')')
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::Expr;

    fn roundtrip(src: &str, dim: usize) {
        let e = Expr::parse(src, dim).unwrap();
        let printed = e.to_string();
        let again = Expr::parse(&printed, dim).unwrap();
        assert_eq!(e, again, "{src} printed as {printed}");
    }

    #[test]
    fn printed_form_reparses_to_the_same_tree() {
        for src in [
            "x1*x2 + sin(x1)",
            "-x1^2",
            "(-x1)^2",
            "x1 - (x2 - x3)",
            "x1/(x2*x3)",
            "x1*-x2",
            "-(-x1)",
            "-(x1 + x2)*3",
            "atan2(x1 - 1, 2*x2)^3",
            "1e-7 + 2.5",
            "(x1^2)^3",
            "exp(-x1/2)*cos(x2)",
        ] {
            roundtrip(src, 3);
        }
    }

    #[test]
    fn readable_output() {
        let e = Expr::parse("((x1)) + (x2*x3)", 3).unwrap();
        assert_eq!(e.to_string(), "x1 + x2*x3");
    }
}
