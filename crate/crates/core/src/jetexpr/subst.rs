//! Substitution of solved-form bindings `u^γ_K := rhs`, closed under total
//! differentiation: an occurrence `u^γ_J` with `K ⊆ J` is replaced by
//! `D_{J−K} rhs`. Replacement repeats until no bound variable remains, so
//! the right-hand sides may themselves mention bound variables (as long as
//! the chain terminates).

use thiserror::Error;

use super::diff::total_derivative_multi;
use super::node::{Expr, JetVar, Node};
use super::normal::normalize;

#[derive(Debug, Error)]
pub enum SubstError {
    #[error("substitution did not terminate (cyclic bindings?) while rewriting {0}")]
    Cyclic(String),
}

const MAX_PASSES: usize = 64;

/// Rewrite `e` using the bindings, in declaration order. For an occurrence
/// matched by several keys the first declared key wins.
pub fn substitute(e: &Expr, bindings: &[(JetVar, Expr)]) -> Result<Expr, SubstError> {
    let mut cur = e.clone();
    for _ in 0..MAX_PASSES {
        let next = normalize(&subst_once(&cur, bindings));
        if next == cur {
            return Ok(next);
        }
        cur = next;
    }
    Err(SubstError::Cyclic(e.to_string()))
}

fn subst_once(e: &Expr, bindings: &[(JetVar, Expr)]) -> Expr {
    match e.node() {
        Node::Jet(j) => {
            for (key, rhs) in bindings {
                if key.dep == j.dep {
                    if let Some(rest) = j.index.subtract(&key.index) {
                        return total_derivative_multi(rhs, &rest);
                    }
                }
            }
            e.clone()
        }
        Node::Num(_)
        | Node::Const(_)
        | Node::Indep(_)
        | Node::Param(_)
        | Node::Bound(_) => e.clone(),
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| subst_once(t, bindings)).collect()),
        Node::Product(fs) => Expr::product(fs.iter().map(|f| subst_once(f, bindings)).collect()),
        Node::Pow(b, q) => subst_once(b, bindings).pow(q.clone()),
        Node::Elem(f, a) => Expr::elem(*f, subst_once(a, bindings)),
        Node::ArbFunc { name, deriv, args } => Expr::func(
            name,
            deriv.clone(),
            args.iter().map(|a| subst_once(a, bindings)).collect(),
        ),
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => Expr::integral(
            var,
            subst_once(lower, bindings),
            subst_once(upper, bindings),
            subst_once(integrand, bindings),
        ),
    }
}

/// Plain coordinate-for-expression replacement with no derivative closure.
/// Useful for change of variables; every occurrence of the exact jet
/// variable, independent variable, or parameter named in `map` is swapped.
pub fn replace_coords(e: &Expr, map: &[(super::node::Coord, Expr)]) -> Expr {
    use super::node::Coord;
    let lookup = |c: Coord| -> Option<Expr> {
        map.iter().find(|(k, _)| *k == c).map(|(_, v)| v.clone())
    };
    match e.node() {
        Node::Jet(j) => lookup(Coord::Jet(j.clone())).unwrap_or_else(|| e.clone()),
        Node::Indep(s) => lookup(Coord::Indep(s.clone())).unwrap_or_else(|| e.clone()),
        Node::Param(s) => lookup(Coord::Param(s.clone())).unwrap_or_else(|| e.clone()),
        Node::Num(_) | Node::Const(_) | Node::Bound(_) => e.clone(),
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| replace_coords(t, map)).collect()),
        Node::Product(fs) => Expr::product(fs.iter().map(|f| replace_coords(f, map)).collect()),
        Node::Pow(b, q) => replace_coords(b, map).pow(q.clone()),
        Node::Elem(f, a) => Expr::elem(*f, replace_coords(a, map)),
        Node::ArbFunc { name, deriv, args } => Expr::func(
            name,
            deriv.clone(),
            args.iter().map(|a| replace_coords(a, map)).collect(),
        ),
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => Expr::integral(
            var,
            replace_coords(lower, map),
            replace_coords(upper, map),
            replace_coords(integrand, map),
        ),
    }
}
