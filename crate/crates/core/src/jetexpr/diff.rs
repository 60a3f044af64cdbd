//! Partial differentiation treating jet coordinates as independent, and the
//! total derivative built on top of it. Integral nodes differentiate by the
//! Leibniz rule; arbitrary-function symbols by the chain rule, raising the
//! derivative count of the relevant argument slot.

use super::node::{Coord, Elementary, Expr, Node, Rat};
use super::normal::normalize;

/// Exact partial derivative of `e` with respect to a coordinate.
pub fn diff(e: &Expr, wrt: &Coord) -> Expr {
    normalize(&diff_raw(e, wrt))
}

fn diff_raw(e: &Expr, wrt: &Coord) -> Expr {
    match e.node() {
        Node::Num(_) | Node::Const(_) | Node::Bound(_) => Expr::zero(),
        Node::Indep(s) => match wrt {
            Coord::Indep(t) if s == t => Expr::one(),
            _ => Expr::zero(),
        },
        Node::Param(s) => match wrt {
            Coord::Param(t) if s == t => Expr::one(),
            _ => Expr::zero(),
        },
        Node::Jet(j) => match wrt {
            Coord::Jet(k) if j == k => Expr::one(),
            _ => Expr::zero(),
        },
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| diff_raw(t, wrt)).collect()),
        Node::Product(fs) => {
            let mut terms = Vec::with_capacity(fs.len());
            for (i, f) in fs.iter().enumerate() {
                let df = diff_raw(f, wrt);
                if df.is_zero_literal() {
                    continue;
                }
                let mut parts: Vec<Expr> = fs.to_vec();
                parts[i] = df;
                terms.push(Expr::product(parts));
            }
            Expr::sum(terms)
        }
        Node::Pow(base, exp) => {
            let db = diff_raw(base, wrt);
            if db.is_zero_literal() {
                return Expr::zero();
            }
            let down = base.pow(exp - Rat::from_integer(1.into()));
            Expr::product(vec![Expr::num(exp.clone()), down, db])
        }
        Node::Elem(f, arg) => {
            let da = diff_raw(arg, wrt);
            if da.is_zero_literal() {
                return Expr::zero();
            }
            elem_derivative(*f, arg).mul(&da)
        }
        Node::ArbFunc { name, deriv, args } => {
            let mut terms = Vec::new();
            for (i, a) in args.iter().enumerate() {
                let da = diff_raw(a, wrt);
                if da.is_zero_literal() {
                    continue;
                }
                let mut d = deriv.clone();
                d[i] += 1;
                terms.push(Expr::func(name, d, args.clone()).mul(&da));
            }
            Expr::sum(terms)
        }
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => {
            // Leibniz: boundary terms plus derivative under the integral sign.
            let mut terms = Vec::new();
            let du = diff_raw(upper, wrt);
            if !du.is_zero_literal() {
                terms.push(replace_bound(integrand, var, upper).mul(&du));
            }
            let dl = diff_raw(lower, wrt);
            if !dl.is_zero_literal() {
                terms.push(replace_bound(integrand, var, lower).mul(&dl).neg());
            }
            let di = diff_raw(integrand, wrt);
            if !di.is_zero_literal() {
                terms.push(Expr::integral(var, lower.clone(), upper.clone(), di));
            }
            Expr::sum(terms)
        }
    }
}

fn elem_derivative(f: Elementary, arg: &Expr) -> Expr {
    let a = arg.clone();
    match f {
        Elementary::Exp => Expr::elem(Elementary::Exp, a),
        Elementary::Log => a.pow_i64(-1),
        Elementary::Sin => Expr::elem(Elementary::Cos, a),
        Elementary::Cos => Expr::elem(Elementary::Sin, a).neg(),
        Elementary::Tan => Expr::elem(Elementary::Cos, a).pow_i64(-2),
        Elementary::Sinh => Expr::elem(Elementary::Cosh, a),
        Elementary::Cosh => Expr::elem(Elementary::Sinh, a),
        Elementary::Tanh => Expr::elem(Elementary::Sech, a).pow_i64(2),
        Elementary::Sech => Expr::elem(Elementary::Sech, a.clone())
            .mul(&Expr::elem(Elementary::Tanh, a))
            .neg(),
    }
}

/// Replace the bound variable of an integral by a limit expression.
fn replace_bound(e: &Expr, var: &str, with: &Expr) -> Expr {
    match e.node() {
        Node::Bound(v) if v == var => with.clone(),
        Node::Num(_)
        | Node::Const(_)
        | Node::Indep(_)
        | Node::Param(_)
        | Node::Jet(_)
        | Node::Bound(_) => e.clone(),
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| replace_bound(t, var, with)).collect()),
        Node::Product(fs) => {
            Expr::product(fs.iter().map(|f| replace_bound(f, var, with)).collect())
        }
        Node::Pow(b, q) => replace_bound(b, var, with).pow(q.clone()),
        Node::Elem(f, a) => Expr::elem(*f, replace_bound(a, var, with)),
        Node::ArbFunc { name, deriv, args } => Expr::func(
            name,
            deriv.clone(),
            args.iter().map(|a| replace_bound(a, var, with)).collect(),
        ),
        Node::Integral {
            var: v2,
            lower,
            upper,
            integrand,
        } => {
            // An inner integral with the same bound name shadows it.
            let inner = if v2 == var {
                integrand.clone()
            } else {
                replace_bound(integrand, var, with)
            };
            Expr::integral(
                v2,
                replace_bound(lower, var, with),
                replace_bound(upper, var, with),
                inner,
            )
        }
    }
}

/// Total derivative `D_i e = ∂e/∂x_i + Σ_{γ,J} u^γ_{J∪{i}} ∂e/∂u^γ_J`.
pub fn total_derivative(e: &Expr, xi: &str) -> Expr {
    let mut terms = vec![diff(e, &Coord::Indep(xi.to_string()))];
    for j in e.jet_vars() {
        let de = diff(e, &Coord::Jet(j.clone()));
        if de.is_zero_literal() {
            continue;
        }
        let raised = Expr::jet(super::node::JetVar::new(&j.dep, j.index.push(xi)));
        terms.push(raised.mul(&de));
    }
    Expr::sum(terms)
}

/// Iterated total derivative over a multiindex.
pub fn total_derivative_multi(e: &Expr, index: &super::node::MultiIndex) -> Expr {
    let mut acc = e.clone();
    for v in index.vars() {
        acc = total_derivative(&acc, v);
    }
    acc
}
