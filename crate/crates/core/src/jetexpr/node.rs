use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num::BigRational;

pub type Rat = BigRational;

/// Sorted multiset of independent-variable names, e.g. the `tx` in `u_tx`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<String>);

impl MultiIndex {
    pub fn new(mut vars: Vec<String>) -> Self {
        vars.sort();
        MultiIndex(vars)
    }

    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vars(&self) -> &[String] {
        &self.0
    }

    pub fn push(&self, var: &str) -> Self {
        let mut v = self.0.clone();
        v.push(var.to_string());
        v.sort();
        MultiIndex(v)
    }

    pub fn union(&self, other: &MultiIndex) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort();
        MultiIndex(v)
    }

    /// Multiset difference `self - other`, or None if `other ⊄ self`.
    pub fn subtract(&self, other: &MultiIndex) -> Option<Self> {
        let mut v = self.0.clone();
        for x in &other.0 {
            let pos = v.iter().position(|y| y == x)?;
            v.remove(pos);
        }
        Some(MultiIndex(v))
    }

    pub fn contains_subset(&self, other: &MultiIndex) -> bool {
        self.subtract(other).is_some()
    }

    /// Multiplicity of each distinct variable, paired with the variable.
    pub fn multiplicities(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for x in &self.0 {
            match out.last_mut() {
                Some((y, n)) if y == x => *n += 1,
                _ => out.push((x.clone(), 1)),
            }
        }
        out
    }

    /// Multiindex binomial coefficient `C(self, sub)`, assuming `sub ⊆ self`.
    pub fn binom(&self, sub: &MultiIndex) -> Rat {
        fn choose(n: usize, k: usize) -> u128 {
            let mut r: u128 = 1;
            for i in 0..k {
                r = r * (n - i) as u128 / (i + 1) as u128;
            }
            r
        }
        let subs = sub.multiplicities();
        let mut r: u128 = 1;
        for (var, n) in self.multiplicities() {
            let k = subs
                .iter()
                .find(|(v, _)| *v == var)
                .map(|(_, k)| *k)
                .unwrap_or(0);
            r *= choose(n, k);
        }
        Rat::from_integer(r.into())
    }

    /// Every sub-multiset of `self` (including empty and full).
    pub fn sub_multisets(&self) -> Vec<MultiIndex> {
        let mults = self.multiplicities();
        let mut out = vec![MultiIndex::empty()];
        for (var, n) in mults {
            let mut next = Vec::new();
            for base in &out {
                for k in 0..=n {
                    let mut v = base.0.clone();
                    for _ in 0..k {
                        v.push(var.clone());
                    }
                    v.sort();
                    next.push(MultiIndex(v));
                }
            }
            out = next;
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.0 {
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// A jet coordinate: a dependent variable with a derivative multiset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JetVar {
    pub dep: String,
    pub index: MultiIndex,
}

impl JetVar {
    pub fn new(dep: &str, index: MultiIndex) -> Self {
        JetVar {
            dep: dep.to_string(),
            index,
        }
    }

    pub fn base(dep: &str) -> Self {
        JetVar::new(dep, MultiIndex::empty())
    }

    pub fn order(&self) -> usize {
        self.index.order()
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index.is_empty() {
            write!(f, "{}", self.dep)
        } else {
            write!(f, "{}_{}", self.dep, self.index)
        }
    }
}

/// A coordinate that expressions may be differentiated with respect to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    Indep(String),
    Param(String),
    Jet(JetVar),
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Indep(s) | Coord::Param(s) => write!(f, "{s}"),
            Coord::Jet(j) => write!(f, "{j}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NamedConst {
    Pi,
    Sqrt2,
}

impl NamedConst {
    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::Sqrt2 => "sqrt2",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::Sqrt2 => std::f64::consts::SQRT_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Elementary {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Sech,
}

impl Elementary {
    pub const ALL: [Elementary; 9] = [
        Elementary::Exp,
        Elementary::Log,
        Elementary::Sin,
        Elementary::Cos,
        Elementary::Tan,
        Elementary::Sinh,
        Elementary::Cosh,
        Elementary::Tanh,
        Elementary::Sech,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Tan => "tan",
            Elementary::Sinh => "sinh",
            Elementary::Cosh => "cosh",
            Elementary::Tanh => "tanh",
            Elementary::Sech => "sech",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    /// Exact rational constant.
    Num(Rat),
    Const(NamedConst),
    Indep(String),
    Jet(JetVar),
    Param(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    /// Rational power of a base expression.
    Pow(Expr, Rat),
    Elem(Elementary, Expr),
    /// Arbitrary-function symbol with per-argument derivative counts.
    ArbFunc {
        name: String,
        deriv: Vec<u32>,
        args: Vec<Expr>,
    },
    /// Variable bound by an enclosing integral node.
    Bound(String),
    /// Definite integral over a bound variable with symbolic limits.
    Integral {
        var: String,
        lower: Expr,
        upper: Expr,
        integrand: Expr,
    },
}

impl Node {
    fn rank(&self) -> u8 {
        match self {
            Node::Num(_) => 0,
            Node::Const(_) => 1,
            Node::Indep(_) => 2,
            Node::Param(_) => 3,
            Node::Bound(_) => 4,
            Node::Jet(_) => 5,
            Node::Elem(..) => 6,
            Node::ArbFunc { .. } => 7,
            Node::Pow(..) => 8,
            Node::Product(_) => 9,
            Node::Sum(_) => 10,
            Node::Integral { .. } => 11,
        }
    }
}

/// Immutable, shareable expression tree. Cheap to clone.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num_i64(n: i64) -> Expr {
        Expr::from(Node::Num(Rat::from_integer(n.into())))
    }

    pub fn num(r: Rat) -> Expr {
        Expr::from(Node::Num(r))
    }

    pub fn zero() -> Expr {
        Expr::num_i64(0)
    }

    pub fn one() -> Expr {
        Expr::num_i64(1)
    }

    pub fn konst(c: NamedConst) -> Expr {
        Expr::from(Node::Const(c))
    }

    pub fn indep(name: &str) -> Expr {
        Expr::from(Node::Indep(name.to_string()))
    }

    pub fn param(name: &str) -> Expr {
        Expr::from(Node::Param(name.to_string()))
    }

    pub fn jet(j: JetVar) -> Expr {
        Expr::from(Node::Jet(j))
    }

    pub fn var(dep: &str) -> Expr {
        Expr::jet(JetVar::base(dep))
    }

    pub fn jet_named(dep: &str, index: &[&str]) -> Expr {
        Expr::jet(JetVar::new(
            dep,
            MultiIndex::new(index.iter().map(|s| s.to_string()).collect()),
        ))
    }

    pub fn coord(c: &Coord) -> Expr {
        match c {
            Coord::Indep(s) => Expr::indep(s),
            Coord::Param(s) => Expr::param(s),
            Coord::Jet(j) => Expr::jet(j.clone()),
        }
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        crate::jetexpr::normalize(&Expr::from(Node::Sum(terms)))
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        crate::jetexpr::normalize(&Expr::from(Node::Product(factors)))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::sum(vec![self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::product(vec![self.clone(), other.clone()])
    }

    pub fn div(&self, other: &Expr) -> Expr {
        self.mul(&other.pow_i64(-1))
    }

    pub fn neg(&self) -> Expr {
        self.mul(&Expr::num_i64(-1))
    }

    pub fn scale(&self, r: Rat) -> Expr {
        self.mul(&Expr::num(r))
    }

    pub fn pow(&self, exp: Rat) -> Expr {
        crate::jetexpr::normalize(&Expr::from(Node::Pow(self.clone(), exp)))
    }

    pub fn pow_i64(&self, exp: i64) -> Expr {
        self.pow(Rat::from_integer(exp.into()))
    }

    pub fn elem(f: Elementary, arg: Expr) -> Expr {
        crate::jetexpr::normalize(&Expr::from(Node::Elem(f, arg)))
    }

    pub fn func(name: &str, deriv: Vec<u32>, args: Vec<Expr>) -> Expr {
        debug_assert_eq!(deriv.len(), args.len());
        crate::jetexpr::normalize(&Expr::from(Node::ArbFunc {
            name: name.to_string(),
            deriv,
            args,
        }))
    }

    /// Single-argument arbitrary function `name^(order)(arg)`.
    pub fn func1(name: &str, order: u32, arg: Expr) -> Expr {
        Expr::func(name, vec![order], vec![arg])
    }

    pub fn bound(name: &str) -> Expr {
        Expr::from(Node::Bound(name.to_string()))
    }

    pub fn integral(var: &str, lower: Expr, upper: Expr, integrand: Expr) -> Expr {
        crate::jetexpr::normalize(&Expr::from(Node::Integral {
            var: var.to_string(),
            lower,
            upper,
            integrand,
        }))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r == &Rat::from_integer(0.into()))
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self.node(), Node::Num(r) if r == &Rat::from_integer(1.into()))
    }

    pub fn as_num(&self) -> Option<&Rat> {
        match self.node() {
            Node::Num(r) => Some(r),
            _ => None,
        }
    }

    /// Summands of a sum, or the expression itself as a single term.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            Node::Sum(ts) => ts.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Collect every jet variable occurring in the expression (including
    /// inside function arguments, integral bounds, and integrands).
    pub fn jet_vars(&self) -> Vec<JetVar> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::Jet(j) = n {
                if !out.contains(j) {
                    out.push(j.clone());
                }
            }
        });
        out.sort();
        out
    }

    /// Collect every coordinate (independent variable, parameter, jet
    /// variable) occurring in the expression.
    pub fn coords(&self) -> Vec<Coord> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            let c = match n {
                Node::Indep(s) => Some(Coord::Indep(s.clone())),
                Node::Param(s) => Some(Coord::Param(s.clone())),
                Node::Jet(j) => Some(Coord::Jet(j.clone())),
                _ => None,
            };
            if let Some(c) = c {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        });
        out.sort();
        out
    }

    /// Names of arbitrary-function symbols occurring in the expression.
    pub fn func_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if let Node::ArbFunc { name, .. } = n {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        });
        out.sort();
        out
    }

    pub fn contains_coord(&self, c: &Coord) -> bool {
        let mut found = false;
        self.visit(&mut |n| {
            let hit = match (n, c) {
                (Node::Indep(s), Coord::Indep(t)) => s == t,
                (Node::Param(s), Coord::Param(t)) => s == t,
                (Node::Jet(j), Coord::Jet(k)) => j == k,
                _ => false,
            };
            found |= hit;
        });
        found
    }

    /// Maximum derivative order of any jet variable in the expression.
    pub fn max_jet_order(&self) -> usize {
        self.jet_vars().iter().map(|j| j.order()).max().unwrap_or(0)
    }

    pub fn visit(&self, f: &mut impl FnMut(&Node)) {
        f(self.node());
        match self.node() {
            Node::Sum(v) | Node::Product(v) => {
                for e in v {
                    e.visit(f);
                }
            }
            Node::Pow(b, _) => b.visit(f),
            Node::Elem(_, a) => a.visit(f),
            Node::ArbFunc { args, .. } => {
                for a in args {
                    a.visit(f);
                }
            }
            Node::Integral {
                lower,
                upper,
                integrand,
                ..
            } => {
                lower.visit(f);
                upper.visit(f);
                integrand.visit(f);
            }
            _ => {}
        }
    }
}

impl From<Node> for Expr {
    fn from(n: Node) -> Self {
        Expr(Arc::new(n))
    }
}

// Total term order: node-kind rank, then structural content. Any total
// order works; this one is fixed for reproducibility.
impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.node();
        let b = other.node();
        a.rank().cmp(&b.rank()).then_with(|| match (a, b) {
            (Node::Num(x), Node::Num(y)) => x.cmp(y),
            (Node::Const(x), Node::Const(y)) => x.cmp(y),
            (Node::Indep(x), Node::Indep(y))
            | (Node::Param(x), Node::Param(y))
            | (Node::Bound(x), Node::Bound(y)) => x.cmp(y),
            (Node::Jet(x), Node::Jet(y)) => x.cmp(y),
            (Node::Sum(x), Node::Sum(y)) | (Node::Product(x), Node::Product(y)) => x.cmp(y),
            (Node::Pow(bx, ex), Node::Pow(by, ey)) => bx.cmp(by).then_with(|| ex.cmp(ey)),
            (Node::Elem(fx, ax), Node::Elem(fy, ay)) => fx.cmp(fy).then_with(|| ax.cmp(ay)),
            (
                Node::ArbFunc {
                    name: nx,
                    deriv: dx,
                    args: ax,
                },
                Node::ArbFunc {
                    name: ny,
                    deriv: dy,
                    args: ay,
                },
            ) => nx.cmp(ny).then_with(|| dx.cmp(dy)).then_with(|| ax.cmp(ay)),
            (
                Node::Integral {
                    var: vx,
                    lower: lx,
                    upper: ux,
                    integrand: ix,
                },
                Node::Integral {
                    var: vy,
                    lower: ly,
                    upper: uy,
                    integrand: iy,
                },
            ) => vx
                .cmp(vy)
                .then_with(|| lx.cmp(ly))
                .then_with(|| ux.cmp(uy))
                .then_with(|| ix.cmp(iy)),
            _ => Ordering::Equal,
        })
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::jetexpr::print_expr(self))
    }
}
