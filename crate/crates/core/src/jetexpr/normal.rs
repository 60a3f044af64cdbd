//! Normal form: flatten and sort sums/products, combine numeric factors and
//! like terms, absorb zero/one, fold constant elementary-function values.
//! Idempotent by construction; canonical only up to the term order (deeper
//! identities are left to the evaluation oracle).

use std::collections::BTreeMap;

use num::{BigInt, One, Signed, Zero};

use super::node::{Elementary, Expr, Node, Rat};

pub fn normalize(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(_)
        | Node::Const(_)
        | Node::Indep(_)
        | Node::Param(_)
        | Node::Bound(_)
        | Node::Jet(_) => e.clone(),
        Node::Sum(terms) => normalize_sum(terms),
        Node::Product(factors) => normalize_product(factors),
        Node::Pow(base, exp) => normalize_pow(&normalize(base), exp),
        Node::Elem(f, arg) => normalize_elem(*f, &normalize(arg)),
        Node::ArbFunc { name, deriv, args } => Expr::from(Node::ArbFunc {
            name: name.clone(),
            deriv: deriv.clone(),
            args: args.iter().map(normalize).collect(),
        }),
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => {
            let lower = normalize(lower);
            let upper = normalize(upper);
            let integrand = normalize(integrand);
            if integrand.is_zero_literal() || lower == upper {
                return Expr::zero();
            }
            Expr::from(Node::Integral {
                var: var.clone(),
                lower,
                upper,
                integrand,
            })
        }
    }
}

/// Split a normalized expression into (rational coefficient, non-numeric core).
/// The core of a pure number is 1.
fn split_coeff(e: &Expr) -> (Rat, Expr) {
    match e.node() {
        Node::Num(r) => (r.clone(), Expr::one()),
        Node::Product(fs) => {
            if let Some(Node::Num(r)) = fs.first().map(|f| f.node()) {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let core = if rest.len() == 1 {
                    rest[0].clone()
                } else {
                    Expr::from(Node::Product(rest))
                };
                (r.clone(), core)
            } else {
                (Rat::one(), e.clone())
            }
        }
        _ => (Rat::one(), e.clone()),
    }
}

fn rebuild_term(coeff: Rat, core: Expr) -> Expr {
    if coeff.is_zero() {
        return Expr::zero();
    }
    if core.is_one_literal() {
        return Expr::num(coeff);
    }
    if coeff.is_one() {
        return core;
    }
    let mut fs = match core.node() {
        Node::Product(fs) => fs.clone(),
        _ => vec![core],
    };
    fs.insert(0, Expr::num(coeff));
    Expr::from(Node::Product(fs))
}

fn normalize_sum(terms: &[Expr]) -> Expr {
    let mut numeric = Rat::zero();
    let mut cores: BTreeMap<Expr, Rat> = BTreeMap::new();
    let mut stack: Vec<Expr> = terms.iter().map(normalize).collect();
    stack.reverse();
    while let Some(t) = stack.pop() {
        match t.node() {
            Node::Sum(inner) => {
                for x in inner.iter().rev() {
                    stack.push(x.clone());
                }
            }
            Node::Num(r) => numeric += r.clone(),
            _ => {
                let (c, core) = split_coeff(&t);
                if core.is_one_literal() {
                    numeric += c;
                } else {
                    *cores.entry(core).or_insert_with(Rat::zero) += c;
                }
            }
        }
    }
    let mut out: Vec<Expr> = Vec::new();
    if !numeric.is_zero() {
        out.push(Expr::num(numeric));
    }
    for (core, c) in cores {
        if !c.is_zero() {
            out.push(rebuild_term(c, core));
        }
    }
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::from(Node::Sum(out)),
    }
}

fn rat_pow_int(base: &Rat, exp: &BigInt) -> Option<Rat> {
    let e32 = i32::try_from(exp).ok()?;
    if e32.unsigned_abs() > 64 {
        return None;
    }
    if e32 >= 0 {
        Some(num::pow::pow(base.clone(), e32 as usize))
    } else {
        if base.is_zero() {
            return None;
        }
        Some(num::pow::pow(base.clone(), (-e32) as usize).recip())
    }
}

fn normalize_product(factors: &[Expr]) -> Expr {
    let mut coeff = Rat::one();
    let mut bases: BTreeMap<Expr, Rat> = BTreeMap::new();
    let mut stack: Vec<Expr> = factors.iter().map(normalize).collect();
    stack.reverse();
    let push_power = |bases: &mut BTreeMap<Expr, Rat>, coeff: &mut Rat, b: Expr, q: Rat| {
        if let Node::Num(r) = b.node() {
            if q.is_integer() {
                if let Some(v) = rat_pow_int(r, q.numer()) {
                    *coeff *= v;
                    return;
                }
            }
        }
        *bases.entry(b).or_insert_with(Rat::zero) += q;
    };
    while let Some(f) = stack.pop() {
        match f.node() {
            Node::Product(inner) => {
                for x in inner.iter().rev() {
                    stack.push(x.clone());
                }
            }
            Node::Num(r) => {
                if r.is_zero() {
                    return Expr::zero();
                }
                coeff *= r.clone();
            }
            Node::Pow(b, q) => push_power(&mut bases, &mut coeff, b.clone(), q.clone()),
            _ => push_power(&mut bases, &mut coeff, f.clone(), Rat::one()),
        }
    }
    let mut out: Vec<Expr> = Vec::new();
    for (b, q) in bases {
        if q.is_zero() {
            continue;
        }
        if q.is_one() {
            out.push(b);
        } else {
            out.push(mk_pow(b, q));
        }
    }
    if out.is_empty() {
        return Expr::num(coeff);
    }
    // A numeric multiple of a bare sum distributes, so -(a+b) and -a-b meet
    // in the same normal form.
    if out.len() == 1 && !coeff.is_one() {
        if let Node::Sum(inner) = out[0].node() {
            let scaled: Vec<Expr> = inner
                .iter()
                .map(|t| normalize_product(&[Expr::num(coeff.clone()), t.clone()]))
                .collect();
            return normalize_sum(&scaled);
        }
    }
    if !coeff.is_one() {
        out.insert(0, Expr::num(coeff));
    }
    if out.len() == 1 {
        out.pop().unwrap()
    } else {
        Expr::from(Node::Product(out))
    }
}

fn mk_pow(base: Expr, exp: Rat) -> Expr {
    // base is normalized and non-numeric-foldable at this point
    Expr::from(Node::Pow(base, exp))
}

fn normalize_pow(base: &Expr, exp: &Rat) -> Expr {
    if exp.is_zero() {
        return Expr::one();
    }
    if exp.is_one() {
        return base.clone();
    }
    match base.node() {
        Node::Num(r) => {
            if exp.is_integer() {
                if let Some(v) = rat_pow_int(r, exp.numer()) {
                    return Expr::num(v);
                }
            }
            mk_pow(base.clone(), exp.clone())
        }
        // (b^p)^k = b^(pk) and (a·b)^k = a^k·b^k are safe for integer k.
        Node::Pow(inner, p) if exp.is_integer() => normalize_pow(inner, &(p * exp)),
        Node::Product(fs) if exp.is_integer() => {
            let parts: Vec<Expr> = fs.iter().map(|f| normalize_pow(f, exp)).collect();
            normalize_product(&parts)
        }
        _ => mk_pow(base.clone(), exp.clone()),
    }
}

fn normalize_elem(f: Elementary, arg: &Expr) -> Expr {
    if arg.is_zero_literal() {
        let v = match f {
            Elementary::Exp | Elementary::Cos | Elementary::Cosh | Elementary::Sech => 1,
            Elementary::Sin | Elementary::Tan | Elementary::Sinh | Elementary::Tanh => 0,
            Elementary::Log => return Expr::from(Node::Elem(f, arg.clone())),
        };
        return Expr::num_i64(v);
    }
    if f == Elementary::Log && arg.is_one_literal() {
        return Expr::zero();
    }
    Expr::from(Node::Elem(f, arg.clone()))
}

/// Distribute products over sums and expand positive-integer powers of sums,
/// leaving function arguments, integral nodes, and non-integer powers intact.
/// The result is normalized.
pub fn expand(e: &Expr) -> Expr {
    let e = normalize(e);
    match e.node() {
        Node::Sum(ts) => normalize_sum(&ts.iter().map(expand).collect::<Vec<_>>()),
        Node::Product(fs) => {
            let parts: Vec<Expr> = fs.iter().map(expand).collect();
            let mut acc: Vec<Expr> = vec![Expr::one()];
            for p in parts {
                let terms = p.terms();
                let mut next = Vec::with_capacity(acc.len() * terms.len());
                for a in &acc {
                    for t in &terms {
                        next.push(normalize_product(&[a.clone(), t.clone()]));
                    }
                }
                acc = next;
            }
            normalize_sum(&acc)
        }
        Node::Pow(base, exp) => {
            let base = expand(base);
            if exp.is_integer() && exp.is_positive() && matches!(base.node(), Node::Sum(_)) {
                if let Ok(n) = u32::try_from(exp.numer()) {
                    if n <= 16 {
                        let terms = base.terms();
                        let mut acc: Vec<Expr> = vec![Expr::one()];
                        for _ in 0..n {
                            let mut next = Vec::with_capacity(acc.len() * terms.len());
                            for a in &acc {
                                for t in &terms {
                                    next.push(normalize_product(&[a.clone(), t.clone()]));
                                }
                            }
                            acc = next;
                        }
                        return normalize_sum(&acc);
                    }
                }
            }
            normalize_pow(&base, exp)
        }
        _ => e,
    }
}
