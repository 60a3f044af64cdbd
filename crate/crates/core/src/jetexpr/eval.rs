//! Numeric evaluation of expressions at a point of jet space.
//!
//! Arbitrary-function symbols evaluate to memoized pseudo-random values: the
//! value of `F^(k)` at a given argument tuple is drawn once from a stream
//! keyed by (seed, name, derivative counts, argument bits) and reused, so
//! evaluation is deterministic and independent of traversal order.

use std::cell::RefCell;
use std::collections::HashMap;

use num::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::node::{Coord, Elementary, Expr, Node};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no value assigned to coordinate {0}")]
    UnboundCoord(String),
    #[error("unbound integration variable {0}")]
    UnboundVar(String),
    #[error("{0} evaluated outside its domain")]
    Domain(&'static str),
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("cannot integrate through an arbitrary-function symbol")]
    ArbFuncUnderIntegral,
    #[error("quadrature did not converge")]
    Quadrature,
}

type FuncKey = (String, Vec<u32>, Vec<u64>);

/// A point of (extended) jet space: numeric values for independent
/// variables, parameters, and jet coordinates, plus the seed that fixes the
/// sampled values of every arbitrary-function symbol.
pub struct JetPoint {
    values: HashMap<Coord, f64>,
    func_seed: u64,
    memo: RefCell<HashMap<FuncKey, f64>>,
}

impl JetPoint {
    pub fn new(func_seed: u64) -> Self {
        JetPoint {
            values: HashMap::new(),
            func_seed,
            memo: RefCell::new(HashMap::new()),
        }
    }

    pub fn set(&mut self, c: Coord, v: f64) {
        self.values.insert(c, v);
    }

    pub fn with(mut self, c: Coord, v: f64) -> Self {
        self.set(c, v);
        self
    }

    pub fn get(&self, c: &Coord) -> Option<f64> {
        self.values.get(c).copied()
    }

    /// Value of the arbitrary function `name^(deriv)` at `args`. Drawn once
    /// per key and memoized; magnitude in `[0.5, 2]`, either sign.
    pub fn func_value(&self, name: &str, deriv: &[u32], args: &[f64]) -> f64 {
        let key: FuncKey = (
            name.to_string(),
            deriv.to_vec(),
            args.iter().map(|a| a.to_bits()).collect(),
        );
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let mut h = fnv1a(self.func_seed, name.as_bytes());
        for d in deriv {
            h = fnv1a(h, &d.to_le_bytes());
        }
        for a in args {
            h = fnv1a(h, &a.to_bits().to_le_bytes());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let mag: f64 = rng.gen_range(0.5..2.0);
        let v = if rng.gen::<bool>() { mag } else { -mag };
        self.memo.borrow_mut().insert(key, v);
        v
    }
}

fn fnv1a(mut state: u64, bytes: &[u8]) -> u64 {
    // FNV-1a; DefaultHasher is not stable across releases, this is.
    state ^= 0xcbf29ce484222325;
    for &b in bytes {
        state ^= b as u64;
        state = state.wrapping_mul(0x100000001b3);
    }
    state
}

/// Evaluate `e` at `p`.
pub fn eval_at(e: &Expr, p: &JetPoint) -> Result<f64, EvalError> {
    let v = eval_env(e, p, &mut Vec::new())?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn eval_env(e: &Expr, p: &JetPoint, bound: &mut Vec<(String, f64)>) -> Result<f64, EvalError> {
    match e.node() {
        Node::Num(r) => r.to_f64().ok_or(EvalError::NonFinite),
        Node::Const(c) => Ok(c.value()),
        Node::Indep(_) | Node::Param(_) | Node::Jet(_) => {
            let c = match e.node() {
                Node::Indep(s) => Coord::Indep(s.clone()),
                Node::Param(s) => Coord::Param(s.clone()),
                Node::Jet(j) => Coord::Jet(j.clone()),
                _ => unreachable!(),
            };
            p.get(&c).ok_or_else(|| EvalError::UnboundCoord(c.to_string()))
        }
        Node::Bound(name) => bound
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| EvalError::UnboundVar(name.clone())),
        Node::Sum(ts) => {
            let mut acc = 0.0;
            for t in ts {
                acc += eval_env(t, p, bound)?;
            }
            Ok(acc)
        }
        Node::Product(fs) => {
            let mut acc = 1.0;
            for f in fs {
                acc *= eval_env(f, p, bound)?;
            }
            Ok(acc)
        }
        Node::Pow(b, q) => {
            let base = eval_env(b, p, bound)?;
            let exp = q.to_f64().ok_or(EvalError::NonFinite)?;
            let v = if q.is_integer() {
                base.powi(exp as i32)
            } else {
                if base < 0.0 {
                    return Err(EvalError::Domain("fractional power"));
                }
                base.powf(exp)
            };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::Domain("power"))
            }
        }
        Node::Elem(f, a) => {
            let x = eval_env(a, p, bound)?;
            let v = match f {
                Elementary::Exp => x.exp(),
                Elementary::Log => {
                    if x <= 0.0 {
                        return Err(EvalError::Domain("log"));
                    }
                    x.ln()
                }
                Elementary::Sin => x.sin(),
                Elementary::Cos => x.cos(),
                Elementary::Tan => x.tan(),
                Elementary::Sinh => x.sinh(),
                Elementary::Cosh => x.cosh(),
                Elementary::Tanh => x.tanh(),
                Elementary::Sech => 1.0 / x.cosh(),
            };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(EvalError::Domain("elementary function"))
            }
        }
        Node::ArbFunc { name, deriv, args } => {
            let mut xs = Vec::with_capacity(args.len());
            for a in args {
                xs.push(eval_env(a, p, bound)?);
            }
            Ok(p.func_value(name, deriv, &xs))
        }
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => {
            if !integrand.func_names().is_empty() {
                return Err(EvalError::ArbFuncUnderIntegral);
            }
            let lo = eval_env(lower, p, bound)?;
            let hi = eval_env(upper, p, bound)?;
            if lo == hi {
                return Ok(0.0);
            }
            let mut f = |x: f64, bound: &mut Vec<(String, f64)>| {
                bound.push((var.clone(), x));
                let r = eval_env(integrand, p, bound);
                bound.pop();
                r
            };
            simpson_adaptive(&mut f, bound, lo, hi, 1e-12)
        }
    }
}

fn simpson_adaptive(
    f: &mut impl FnMut(f64, &mut Vec<(String, f64)>) -> Result<f64, EvalError>,
    bound: &mut Vec<(String, f64)>,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64, EvalError> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    // Recursive bisection with Richardson acceptance.
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &mut impl FnMut(f64, &mut Vec<(String, f64)>) -> Result<f64, EvalError>,
        bound: &mut Vec<(String, f64)>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, EvalError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm, bound)?;
        let frm = f(rm, bound)?;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(EvalError::Quadrature);
        }
        let l = step(f, bound, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = step(f, bound, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
    let fa = f(a, bound)?;
    let m = 0.5 * (a + b);
    let fm = f(m, bound)?;
    let fb = f(b, bound)?;
    let whole = simpson(fa, fm, fb, b - a);
    let tol = rel_tol * whole.abs().max(1.0);
    step(f, bound, a, b, fa, fm, fb, whole, tol, 48)
}
