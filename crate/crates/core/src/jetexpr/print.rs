//! Canonical text form. Printing then reparsing (in a context declaring the
//! same names) reproduces the expression.

use num::{One, Signed};

use super::node::{Expr, Node, Rat};

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_prec(e, 0, &mut s);
    s
}

// Precedence levels: 0 sum, 1 product, 2 unary minus operand, 3 power base.
fn write_prec(e: &Expr, prec: u8, out: &mut String) {
    let own = precedence(e);
    if own < prec {
        out.push('(');
        write_node(e, out);
        out.push(')');
    } else {
        write_node(e, out);
    }
}

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Sum(_) => 0,
        Node::Product(_) => 1,
        Node::Num(r) => {
            if r.is_negative() || !r.is_integer() {
                0
            } else {
                4
            }
        }
        Node::Pow(..) => 2,
        _ => 4,
    }
}

fn write_node(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Num(r) => write_rat(r, out),
        Node::Const(c) => out.push_str(c.name()),
        Node::Indep(s) | Node::Param(s) | Node::Bound(s) => out.push_str(s),
        Node::Jet(j) => out.push_str(&j.to_string()),
        Node::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                let (neg, body) = strip_neg(t);
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else {
                    out.push_str(if neg { " - " } else { " + " });
                }
                write_prec(&body, 1, out);
            }
        }
        Node::Product(fs) => {
            for (i, f) in fs.iter().enumerate() {
                if i > 0 {
                    out.push('*');
                }
                write_prec(f, 2, out);
            }
        }
        Node::Pow(b, q) => {
            write_prec(b, 3, out);
            out.push('^');
            if q.is_integer() && !q.is_negative() {
                write_rat(q, out);
            } else {
                out.push('(');
                write_rat(q, out);
                out.push(')');
            }
        }
        Node::Elem(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_prec(a, 0, out);
            out.push(')');
        }
        Node::ArbFunc { name, deriv, args } => {
            out.push_str(name);
            if deriv.iter().any(|&d| d > 0) {
                out.push_str("^(");
                for (i, d) in deriv.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&d.to_string());
                }
                out.push(')');
            }
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_prec(a, 0, out);
            }
            out.push(')');
        }
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => {
            out.push_str("int(");
            out.push_str(var);
            out.push_str(", ");
            write_prec(lower, 0, out);
            out.push_str(", ");
            write_prec(upper, 0, out);
            out.push_str(", ");
            write_prec(integrand, 0, out);
            out.push(')');
        }
    }
}

/// Split a leading factor of -1 off a term so sums print with `-` signs.
fn strip_neg(e: &Expr) -> (bool, Expr) {
    match e.node() {
        Node::Num(r) if r.is_negative() => (true, Expr::num(-r.clone())),
        Node::Product(fs) => {
            if let Node::Num(r) = fs[0].node() {
                if r.is_negative() {
                    let mut parts = fs.clone();
                    let flipped = -r.clone();
                    if flipped.is_one() && parts.len() > 1 {
                        parts.remove(0);
                    } else {
                        parts[0] = Expr::num(flipped);
                    }
                    return (true, Expr::product(parts));
                }
            }
            (false, e.clone())
        }
        _ => (false, e.clone()),
    }
}

fn write_rat(r: &Rat, out: &mut String) {
    if r.is_integer() {
        out.push_str(&r.to_integer().to_string());
    } else {
        out.push_str(&format!("{}/{}", r.numer(), r.denom()));
    }
}
