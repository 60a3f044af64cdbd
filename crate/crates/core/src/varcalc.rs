//! Variational calculus over jet space: Euler operators, the divergence
//! test, prolongation of symmetry generators, linear determining equations,
//! the Fréchet derivative and its formal adjoint, self-adjointness, and the
//! flux construction that turns a variational symmetry into a conservation
//! law.

use std::collections::{BTreeMap, HashMap};

use num::{One, Zero};
use thiserror::Error;

use crate::dcm::ConservationLaw;
use crate::jetexpr::oracle;
use crate::jetexpr::{
    diff, total_derivative, total_derivative_multi, Coord, Expr, JetVar, MultiIndex, Node,
    OracleConfig, OracleError, Rat, SubstError, VarContext, ZeroVerdict,
};
use crate::system::SystemDef;

#[derive(Debug, Error)]
pub enum VarcalcError {
    #[error("expression is not polynomial in jet variable {0}")]
    NotPolynomial(String),
    #[error("prolongation order {have} is below the expression's order {need}")]
    OrderTooLow { have: usize, need: usize },
    #[error("supplied fluxes do not match the symmetry action on the Lagrangian (residual {0})")]
    FluxMismatch(f64),
    #[error("generator is not a variational symmetry of the Lagrangian")]
    NotVariational,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// A symmetry generator: either evolutionary (one characteristic per
/// dependent variable) or a point generator with shifts for the independent
/// variables too.
#[derive(Debug, Clone)]
pub enum Generator {
    Evolutionary {
        etas: Vec<(String, Expr)>,
    },
    Point {
        xis: Vec<(String, Expr)>,
        etas: Vec<(String, Expr)>,
    },
}

impl Generator {
    /// Characteristics `η̂^σ = η^σ − ξ_i u^σ_i` (already `η^σ` for the
    /// evolutionary kind).
    pub fn characteristics(&self) -> Vec<(String, Expr)> {
        match self {
            Generator::Evolutionary { etas } => etas.clone(),
            Generator::Point { xis, etas } => etas
                .iter()
                .map(|(dep, eta)| {
                    let mut shift = Vec::new();
                    for (xi_name, xi) in xis {
                        let ui = Expr::jet(JetVar::new(dep, MultiIndex::new(vec![xi_name.clone()])));
                        shift.push(xi.mul(&ui));
                    }
                    (dep.clone(), eta.sub(&Expr::sum(shift)))
                })
                .collect(),
        }
    }
}

/// The prolonged action `X^(p)` of a generator, in evolutionary form.
pub struct Prolonged {
    chars: Vec<(String, Expr)>,
    order: usize,
}

pub fn prolong(g: &Generator, order: usize) -> Prolonged {
    Prolonged {
        chars: g.characteristics(),
        order,
    }
}

impl Prolonged {
    /// Apply `Σ_{σ,J} D_J(η̂^σ) ∂/∂u^σ_J` to an expression.
    pub fn apply(&self, e: &Expr) -> Result<Expr, VarcalcError> {
        let need = e.max_jet_order();
        if need > self.order {
            return Err(VarcalcError::OrderTooLow {
                have: self.order,
                need,
            });
        }
        Ok(apply_characteristics(&self.chars, e))
    }
}

fn apply_characteristics(chars: &[(String, Expr)], e: &Expr) -> Expr {
    let mut terms = Vec::new();
    for j in e.jet_vars() {
        let Some((_, eta)) = chars.iter().find(|(d, _)| *d == j.dep) else {
            continue;
        };
        let de = diff(e, &Coord::Jet(j.clone()));
        if de.is_zero_literal() {
            continue;
        }
        terms.push(total_derivative_multi(eta, &j.index).mul(&de));
    }
    Expr::sum(terms)
}

/// `E_{u^γ} e = Σ_J (−1)^{|J|} D_J (∂e/∂u^γ_J)`.
pub fn euler_operator(e: &Expr, dep: &str) -> Expr {
    let mut terms = Vec::new();
    for j in e.jet_vars() {
        if j.dep != dep {
            continue;
        }
        let de = diff(e, &Coord::Jet(j.clone()));
        if de.is_zero_literal() {
            continue;
        }
        let mut t = total_derivative_multi(&de, &j.index);
        if j.order() % 2 == 1 {
            t = t.neg();
        }
        terms.push(t);
    }
    Expr::sum(terms)
}

fn distinct_count(m: &MultiIndex) -> usize {
    m.multiplicities().len()
}

/// Weight of the `D_K ∂/∂u_{I∪K}` term in the higher Euler operator
/// `E_{u_I}`. Defined by the recursion that makes the flux identity
/// `Σ_i D_i W^i = X^(k)L − η·E(L)` exact; every weight is 1 in one
/// independent variable.
fn euler_weight(i: &MultiIndex, k: &MultiIndex, memo: &mut HashMap<(MultiIndex, MultiIndex), Rat>) -> Rat {
    if let Some(v) = memo.get(&(i.clone(), k.clone())) {
        return v.clone();
    }
    let s = Rat::from_integer((distinct_count(i) as i64).into());
    let v = if k.is_empty() {
        s.recip()
    } else {
        let mut acc = Rat::zero();
        for (var, _) in k.multiplicities() {
            let single = MultiIndex::new(vec![var.clone()]);
            let rest = k.subtract(&single).unwrap();
            acc += euler_weight(&i.push(&var), &rest, memo);
        }
        acc / s
    };
    memo.insert((i.clone(), k.clone()), v.clone());
    v
}

/// Higher Euler operator `E_{u^γ_I}` applied to `e` (|I| ≥ 1).
pub fn higher_euler(e: &Expr, dep: &str, index: &MultiIndex) -> Expr {
    assert!(!index.is_empty(), "use euler_operator for I = ∅");
    let mut memo = HashMap::new();
    let mut terms = Vec::new();
    for j in e.jet_vars() {
        if j.dep != dep {
            continue;
        }
        let Some(k) = j.index.subtract(index) else {
            continue;
        };
        let de = diff(e, &Coord::Jet(j.clone()));
        if de.is_zero_literal() {
            continue;
        }
        let mut w = euler_weight(index, &k, &mut memo);
        if k.order() % 2 == 1 {
            w = -w;
        }
        terms.push(total_derivative_multi(&de, &k).scale(w));
    }
    Expr::sum(terms)
}

#[derive(Debug, Clone)]
pub struct DivergenceVerdict {
    pub divergence: bool,
    /// Euler residual verdict per dependent variable tested.
    pub residuals: Vec<(String, ZeroVerdict)>,
}

/// Is `e` a total divergence `D_i Φ^i` in the given dependent variables?
pub fn is_divergence_wrt(
    e: &Expr,
    deps: &[String],
    cfg: &OracleConfig,
) -> Result<DivergenceVerdict, VarcalcError> {
    let mut residuals = Vec::new();
    let mut all = true;
    for d in deps {
        let r = euler_operator(e, d);
        let v = oracle::is_zero(&r, cfg)?;
        all &= v.zero;
        residuals.push((d.clone(), v));
    }
    Ok(DivergenceVerdict {
        divergence: all,
        residuals,
    })
}

/// Divergence test over every dependent variable occurring in `e`.
pub fn is_divergence(e: &Expr, cfg: &OracleConfig) -> Result<DivergenceVerdict, VarcalcError> {
    let mut deps: Vec<String> = e.jet_vars().into_iter().map(|j| j.dep).collect();
    deps.dedup();
    is_divergence_wrt(e, &deps, cfg)
}

/// A matrix of linear total-differential operators; entry (α,σ) is a list
/// of `coeff · D_J` terms.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    pub entries: Vec<Vec<Vec<(Expr, MultiIndex)>>>,
}

impl LinearOperator {
    pub fn new(entries: Vec<Vec<Vec<(Expr, MultiIndex)>>>) -> Self {
        let entries = entries
            .into_iter()
            .map(|row| row.into_iter().map(normalize_entry).collect())
            .collect();
        LinearOperator { entries }
    }

    pub fn rows(&self) -> usize {
        self.entries.len()
    }

    pub fn cols(&self) -> usize {
        self.entries.first().map(|r| r.len()).unwrap_or(0)
    }

    /// Apply to a vector of expressions: `(L v)_α = Σ_σ Σ coeff·D_J v_σ`.
    pub fn apply(&self, vs: &[Expr]) -> Vec<Expr> {
        assert_eq!(vs.len(), self.cols());
        self.entries
            .iter()
            .map(|row| {
                let mut terms = Vec::new();
                for (entry, v) in row.iter().zip(vs) {
                    for (c, j) in entry {
                        terms.push(c.mul(&total_derivative_multi(v, j)));
                    }
                }
                Expr::sum(terms)
            })
            .collect()
    }

    pub fn max_order(&self) -> usize {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .map(|(_, j)| j.order())
            .max()
            .unwrap_or(0)
    }
}

fn normalize_entry(terms: Vec<(Expr, MultiIndex)>) -> Vec<(Expr, MultiIndex)> {
    let mut map: BTreeMap<MultiIndex, Vec<Expr>> = BTreeMap::new();
    for (c, j) in terms {
        map.entry(j).or_default().push(c);
    }
    map.into_iter()
        .filter_map(|(j, cs)| {
            let c = Expr::sum(cs);
            if c.is_zero_literal() {
                None
            } else {
                Some((c, j))
            }
        })
        .collect()
}

/// Fréchet derivative (linearizing operator) of the system:
/// `L_{ασ} = Σ_J (∂G_α/∂u^σ_J) D_J`.
pub fn frechet(sys: &SystemDef) -> LinearOperator {
    let entries = sys
        .equations
        .iter()
        .map(|g| {
            sys.ctx
                .dep
                .iter()
                .map(|dep| {
                    g.jet_vars()
                        .into_iter()
                        .filter(|j| j.dep == *dep)
                        .map(|j| (diff(g, &Coord::Jet(j.clone())), j.index))
                        .collect()
                })
                .collect()
        })
        .collect();
    LinearOperator::new(entries)
}

/// Formal adjoint: the operator `L*` with
/// `(L*)_{σα} V = Σ_J (−1)^{|J|} D_J (coeff_{ασ,J} · V)`, expanded back
/// into `coeff·D_K` form by the Leibniz rule.
pub fn adjoint(l: &LinearOperator) -> LinearOperator {
    let rows = l.rows();
    let cols = l.cols();
    let entries = (0..cols)
        .map(|s| {
            (0..rows)
                .map(|a| {
                    let mut terms = Vec::new();
                    for (c, j) in &l.entries[a][s] {
                        let sign = if j.order() % 2 == 1 {
                            -Rat::one()
                        } else {
                            Rat::one()
                        };
                        for k in j.sub_multisets() {
                            let rest = j.subtract(&k).unwrap();
                            let coeff =
                                total_derivative_multi(c, &k).scale(j.binom(&k) * sign.clone());
                            terms.push((coeff, rest));
                        }
                    }
                    terms
                })
                .collect()
        })
        .collect();
    LinearOperator::new(entries)
}

/// Entrywise equality of two operators, coefficient by coefficient, decided
/// by the oracle.
pub fn operators_equal(
    a: &LinearOperator,
    b: &LinearOperator,
    cfg: &OracleConfig,
) -> Result<bool, VarcalcError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Ok(false);
    }
    for (ra, rb) in a.entries.iter().zip(&b.entries) {
        for (ea, eb) in ra.iter().zip(rb) {
            let mut keys: Vec<&MultiIndex> = ea.iter().chain(eb).map(|(_, j)| j).collect();
            keys.sort();
            keys.dedup();
            for j in keys {
                let ca = ea
                    .iter()
                    .find(|(_, k)| k == j)
                    .map(|(c, _)| c.clone())
                    .unwrap_or_else(Expr::zero);
                let cb = eb
                    .iter()
                    .find(|(_, k)| k == j)
                    .map(|(c, _)| c.clone())
                    .unwrap_or_else(Expr::zero);
                if !oracle::is_zero(&ca.sub(&cb), cfg)?.zero {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Check `V·LU − U·(L*V) = D_i P^i` by applying both operators to fresh
/// dependent variables and testing the bilinear combination for being a
/// divergence in those variables only.
pub fn bilinear_identity_check(
    l: &LinearOperator,
    lstar: &LinearOperator,
    cfg: &OracleConfig,
) -> Result<bool, VarcalcError> {
    let us: Vec<Expr> = (0..l.cols()).map(|i| Expr::var(&format!("bgu{i}"))).collect();
    let vs: Vec<Expr> = (0..l.rows()).map(|i| Expr::var(&format!("bgv{i}"))).collect();
    let lu = l.apply(&us);
    let lsv = lstar.apply(&vs);
    let mut terms = Vec::new();
    for (v, lu_a) in vs.iter().zip(&lu) {
        terms.push(v.mul(lu_a));
    }
    for (u, lsv_s) in us.iter().zip(&lsv) {
        terms.push(u.mul(lsv_s).neg());
    }
    let e = Expr::sum(terms);
    let fresh: Vec<String> = (0..l.cols())
        .map(|i| format!("bgu{i}"))
        .chain((0..l.rows()).map(|i| format!("bgv{i}")))
        .collect();
    Ok(is_divergence_wrt(&e, &fresh, cfg)?.divergence)
}

/// A system is self-adjoint when its Fréchet derivative equals the formal
/// adjoint of that derivative.
pub fn is_self_adjoint(sys: &SystemDef, cfg: &OracleConfig) -> Result<bool, VarcalcError> {
    let l = frechet(sys);
    if l.rows() != l.cols() {
        return Ok(false);
    }
    operators_equal(&l, &adjoint(&l), cfg)
}

/// An action density together with its declared coordinates.
#[derive(Debug, Clone)]
pub struct Lagrangian {
    pub ctx: VarContext,
    pub density: Expr,
}

/// Euler–Lagrange equations, one per dependent variable.
pub fn euler_lagrange(l: &Lagrangian) -> SystemDef {
    let equations = l
        .ctx
        .dep
        .iter()
        .map(|d| euler_operator(&l.density, d))
        .collect();
    SystemDef::new(l.ctx.clone(), equations)
}

/// A generator is a variational symmetry when the prolonged action takes
/// the Lagrangian density to a total divergence.
pub fn variational_symmetry_test(
    l: &Lagrangian,
    g: &Generator,
    cfg: &OracleConfig,
) -> Result<bool, VarcalcError> {
    let action = prolong(g, l.density.max_jet_order()).apply(&l.density)?;
    Ok(is_divergence_wrt(&action, &l.ctx.dep, cfg)?.divergence)
}

/// Every multiset over `vars` of order ≤ `max`, the empty one first.
pub fn multiindices_up_to(vars: &[String], max: usize) -> Vec<MultiIndex> {
    let mut out = vec![MultiIndex::empty()];
    let mut frontier = vec![MultiIndex::empty()];
    for _ in 0..max {
        let mut next = Vec::new();
        for m in &frontier {
            for v in vars {
                let cand = m.push(v);
                if !next.contains(&cand) {
                    next.push(cand);
                }
            }
        }
        for m in &next {
            if !out.contains(m) {
                out.push(m.clone());
            }
        }
        frontier = next;
    }
    out
}

/// Flux vector `W^i = Σ_σ Σ_J D_J(η̂^σ) · E_{u^σ_{J∪{i}}}(L)` so that
/// `Σ_i D_i W^i = X^(k)L − Σ_σ η̂^σ E_{u^σ}(L)`.
pub fn noether_w(l: &Lagrangian, chars: &[(String, Expr)]) -> Vec<Expr> {
    let ord = l.density.max_jet_order();
    let js = multiindices_up_to(&l.ctx.indep, ord.saturating_sub(1));
    l.ctx
        .indep
        .iter()
        .map(|xi| {
            let mut terms = Vec::new();
            for (dep, eta) in chars {
                for j in &js {
                    let he = higher_euler(&l.density, dep, &j.push(xi));
                    if he.is_zero_literal() {
                        continue;
                    }
                    terms.push(total_derivative_multi(eta, j).mul(&he));
                }
            }
            Expr::sum(terms)
        })
        .collect()
}

/// Build the conservation law a variational symmetry induces. The caller
/// supplies fluxes `f^i` with `X^(k)L = D_i f^i`; the densities returned
/// are `Φ^i = W^i − f^i`, verified against `Σ_σ η̂^σ E_{u^σ}(L) =
/// D_i(f^i − W^i)` before returning.
pub fn noether_flux(
    l: &Lagrangian,
    g: &Generator,
    f: &[Expr],
    cfg: &OracleConfig,
) -> Result<ConservationLaw, VarcalcError> {
    assert_eq!(f.len(), l.ctx.indep.len());
    let chars = g.characteristics();
    let action = prolong(g, l.density.max_jet_order()).apply(&l.density)?;
    let div_f = Expr::sum(
        f.iter()
            .zip(&l.ctx.indep)
            .map(|(fi, xi)| total_derivative(fi, xi))
            .collect(),
    );
    let mismatch = oracle::is_zero(&action.sub(&div_f), cfg)?;
    if !mismatch.zero {
        return Err(VarcalcError::FluxMismatch(mismatch.max_rel_residual));
    }
    let w = noether_w(l, &chars);
    // Independent check of the flux identity.
    let mut lhs = Vec::new();
    for (dep, eta) in &chars {
        lhs.push(eta.mul(&euler_operator(&l.density, dep)));
    }
    let mut rhs = Vec::new();
    for ((fi, wi), xi) in f.iter().zip(&w).zip(&l.ctx.indep) {
        rhs.push(total_derivative(&fi.sub(wi), xi));
    }
    let check = Expr::sum(lhs).sub(&Expr::sum(rhs));
    let v = oracle::is_zero(&check, cfg)?;
    if !v.zero {
        return Err(VarcalcError::FluxMismatch(v.max_rel_residual));
    }
    Ok(ConservationLaw {
        fluxes: w.iter().zip(f).map(|(wi, fi)| wi.sub(fi)).collect(),
        multipliers: None,
    })
}

/// Collect an expression as a polynomial in the jet variables selected by
/// `excluded`; returns (monomial, coefficient) pairs. Errors when a
/// selected variable occurs non-polynomially (inside a function argument,
/// under a non-integer or negative power, in an integral).
pub fn split_by_monomials(
    e: &Expr,
    excluded: &dyn Fn(&JetVar) -> bool,
) -> Result<Vec<(Vec<(JetVar, u32)>, Expr)>, VarcalcError> {
    let e = crate::jetexpr::expand(e);
    let mut groups: BTreeMap<Vec<(JetVar, u32)>, Vec<Expr>> = BTreeMap::new();
    for term in e.terms() {
        let factors = match term.node() {
            Node::Product(fs) => fs.clone(),
            _ => vec![term.clone()],
        };
        let mut key: BTreeMap<JetVar, u32> = BTreeMap::new();
        let mut coeff = Vec::new();
        for f in factors {
            match f.node() {
                Node::Jet(j) if excluded(j) => {
                    *key.entry(j.clone()).or_insert(0) += 1;
                }
                Node::Pow(b, q) => {
                    if let Node::Jet(j) = b.node() {
                        if excluded(j) {
                            use num::ToPrimitive;
                            let n = if q.is_integer() {
                                q.to_integer().to_u32()
                            } else {
                                None
                            };
                            match n {
                                Some(n) => {
                                    *key.entry(j.clone()).or_insert(0) += n;
                                    continue;
                                }
                                None => {
                                    return Err(VarcalcError::NotPolynomial(j.to_string()))
                                }
                            }
                        }
                    }
                    check_free(&f, excluded)?;
                    coeff.push(f.clone());
                }
                _ => {
                    check_free(&f, excluded)?;
                    coeff.push(f.clone());
                }
            }
        }
        groups
            .entry(key.into_iter().collect())
            .or_default()
            .push(Expr::product(coeff));
    }
    Ok(groups
        .into_iter()
        .map(|(k, cs)| (k, Expr::sum(cs)))
        .collect())
}

fn check_free(e: &Expr, excluded: &dyn Fn(&JetVar) -> bool) -> Result<(), VarcalcError> {
    for j in e.jet_vars() {
        if excluded(&j) {
            return Err(VarcalcError::NotPolynomial(j.to_string()));
        }
    }
    Ok(())
}

/// Linear determining equations for a symmetry ansatz: apply the prolonged
/// generator to each equation, restrict to the solution manifold, and split
/// by monomials in the jet variables the ansatz coefficients cannot depend
/// on (everything of order ≥ 1 that survives restriction).
pub fn symmetry_determining(
    sys: &SystemDef,
    ansatz: &Generator,
) -> Result<Vec<Expr>, VarcalcError> {
    let mut out = Vec::new();
    for g in &sys.equations {
        let order = g.max_jet_order() + 2;
        let acted = prolong(ansatz, order).apply(g)?;
        let restricted = sys.restrict(&acted)?;
        let excluded = |j: &JetVar| j.order() >= 1;
        for (_, coeff) in split_by_monomials(&restricted, &excluded)? {
            if !coeff.is_zero_literal() {
                out.push(coeff);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
