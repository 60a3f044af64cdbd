//! Action of point symmetries on conservation laws. A point transformation
//! between an original and a "tilde" copy of the variables carries
//! multipliers and density tuples of a system to new ones: densities pick up
//! the Jacobian-weighted cofactor combination, multipliers pick up the
//! Jacobian times the system's factor matrix. One-parameter families yield
//! ladders of new conservation laws through Taylor expansion in the
//! parameter.

use std::collections::HashMap;

use thiserror::Error;

use crate::dcm::{self, ConservationLaw, DcmError, MultiplierSet};
use crate::jetexpr::{
    diff, oracle, replace_coords, total_derivative, Coord, Expr, JetVar, Node, OracleConfig,
    OracleError, Rat, SubstError, VarContext, ZeroVerdict,
};
use crate::system::SystemDef;

/// Taylor orders beyond this require polynomial parameter dependence.
pub const SERIES_CAP: usize = 8;

#[derive(Debug, Error)]
pub enum SymError {
    #[error("forward and inverse maps do not compose to the identity in {0}")]
    NotInvertible(String),
    #[error("parameter {0} = 0 does not reduce the map for {1} to the identity")]
    NotIdentityAtZero(String, String),
    #[error("transformed densities fail the Jacobian-divergence self-check (residual {0})")]
    SelfCheck(f64),
    #[error("factor matrix does not relate the transformed equations to the originals")]
    FactorMatrix,
    #[error("transformation carries no expansion parameter")]
    MissingParameter,
    #[error("expansion order {0} exceeds the series cap for non-polynomial parameter maps")]
    SeriesCap(usize),
    #[error("transformed multipliers fail verification against the target system")]
    Verification,
    #[error("candidate multiplier set is trivial on the solution manifold")]
    TrivialCandidate,
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Dcm(#[from] DcmError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// The tilde-copy name of a variable.
pub fn tilde_name(name: &str) -> String {
    format!("{name}h")
}

pub fn tilde_ctx(ctx: &VarContext) -> VarContext {
    let mut out = ctx.clone();
    out.indep = ctx.indep.iter().map(|s| tilde_name(s)).collect();
    out.dep = ctx.dep.iter().map(|s| tilde_name(s)).collect();
    out
}

/// Rename independent and dependent variables throughout an expression,
/// including inside jet indices. Parameters are left alone.
pub fn rename_vars(e: &Expr, map: &[(String, String)]) -> Expr {
    let ren = |s: &str| -> String {
        map.iter()
            .find(|(from, _)| from == s)
            .map(|(_, to)| to.clone())
            .unwrap_or_else(|| s.to_string())
    };
    match e.node() {
        Node::Indep(s) => Expr::indep(&ren(s)),
        Node::Jet(j) => Expr::jet(JetVar::new(
            &ren(&j.dep),
            crate::jetexpr::MultiIndex::new(j.index.vars().iter().map(|v| ren(v)).collect()),
        )),
        Node::Num(_) | Node::Const(_) | Node::Param(_) | Node::Bound(_) => e.clone(),
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| rename_vars(t, map)).collect()),
        Node::Product(fs) => Expr::product(fs.iter().map(|f| rename_vars(f, map)).collect()),
        Node::Pow(b, q) => rename_vars(b, map).pow(q.clone()),
        Node::Elem(f, a) => Expr::elem(*f, rename_vars(a, map)),
        Node::ArbFunc { name, deriv, args } => Expr::func(
            name,
            deriv.clone(),
            args.iter().map(|a| rename_vars(a, map)).collect(),
        ),
        Node::Integral {
            var,
            lower,
            upper,
            integrand,
        } => Expr::integral(
            var,
            rename_vars(lower, map),
            rename_vars(upper, map),
            rename_vars(integrand, map),
        ),
    }
}

fn tilde_renaming(ctx: &VarContext) -> Vec<(String, String)> {
    ctx.indep
        .iter()
        .chain(&ctx.dep)
        .map(|s| (s.clone(), tilde_name(s)))
        .collect()
}

pub fn to_tilde(e: &Expr, ctx: &VarContext) -> Expr {
    rename_vars(e, &tilde_renaming(ctx))
}

pub fn from_tilde(e: &Expr, ctx: &VarContext) -> Expr {
    let map: Vec<(String, String)> = tilde_renaming(ctx)
        .into_iter()
        .map(|(a, b)| (b, a))
        .collect();
    rename_vars(e, &map)
}

/// An invertible point transformation from tilde variables to the original
/// ones. `forward` holds one expression per coordinate, in the declared
/// order independents-then-dependents, written in tilde names (and the
/// parameter, if any); `inverse` holds the tilde coordinates as expressions
/// in the original names. `factor` is the matrix relating the transformed
/// equations back to themselves, when the transformation is a symmetry.
#[derive(Debug, Clone)]
pub struct PointTransformation {
    pub ctx: VarContext,
    pub forward: Vec<Expr>,
    pub inverse: Vec<Expr>,
    pub eps: Option<String>,
    pub factor: Option<Vec<Vec<Expr>>>,
}

fn base_coords(ctx: &VarContext) -> Vec<Coord> {
    ctx.indep
        .iter()
        .map(|s| Coord::Indep(s.clone()))
        .chain(ctx.dep.iter().map(|s| Coord::Jet(JetVar::base(s))))
        .collect()
}

fn tilde_coords(ctx: &VarContext) -> Vec<Coord> {
    base_coords(&tilde_ctx(ctx))
}

impl PointTransformation {
    pub fn new(
        ctx: VarContext,
        forward: Vec<Expr>,
        inverse: Vec<Expr>,
        eps: Option<&str>,
        cfg: &OracleConfig,
    ) -> Result<Self, SymError> {
        let coords = base_coords(&ctx);
        assert_eq!(forward.len(), coords.len());
        assert_eq!(inverse.len(), coords.len());
        let t = PointTransformation {
            ctx,
            forward,
            inverse,
            eps: eps.map(str::to_string),
            factor: None,
        };
        // Forward after inverse must give back each original coordinate.
        let inv_map: Vec<(Coord, Expr)> = tilde_coords(&t.ctx)
            .into_iter()
            .zip(t.inverse.iter().cloned())
            .collect();
        for (c, f) in coords.iter().zip(&t.forward) {
            let composed = replace_coords(f, &inv_map);
            if !oracle::is_zero(&composed.sub(&Expr::coord(c)), cfg)?.zero {
                return Err(SymError::NotInvertible(c.to_string()));
            }
        }
        if let Some(eps) = &t.eps {
            let at0 = [(Coord::Param(eps.clone()), Expr::zero())];
            for (c, f) in tilde_coords(&t.ctx).iter().zip(&t.forward) {
                let frozen = replace_coords(f, &at0);
                if !oracle::is_zero(&frozen.sub(&Expr::coord(c)), cfg)?.zero {
                    return Err(SymError::NotIdentityAtZero(eps.clone(), c.to_string()));
                }
            }
        }
        Ok(t)
    }

    pub fn identity(ctx: VarContext) -> Self {
        let forward = tilde_coords(&ctx).iter().map(Expr::coord).collect();
        let inverse = base_coords(&ctx).iter().map(Expr::coord).collect();
        PointTransformation {
            ctx,
            forward,
            inverse,
            eps: None,
            factor: None,
        }
    }

    pub fn with_factor(mut self, a: Vec<Vec<Expr>>) -> Self {
        self.factor = Some(a);
        self
    }

    /// The inverse transformation (loses any factor matrix).
    pub fn inverted(&self) -> Self {
        PointTransformation {
            ctx: self.ctx.clone(),
            forward: self.inverse.iter().map(|e| to_tilde(e, &self.ctx)).collect(),
            inverse: self
                .forward
                .iter()
                .map(|e| from_tilde(e, &self.ctx))
                .collect(),
            eps: self.eps.clone(),
            factor: None,
        }
    }
}

/// Matrix of total tilde-derivatives of the independent-variable maps:
/// entry (j, i) is D̃_j x_i.
fn dmatrix(t: &PointTransformation) -> Vec<Vec<Expr>> {
    let n = t.ctx.indep.len();
    (0..n)
        .map(|j| {
            let tj = tilde_name(&t.ctx.indep[j]);
            (0..n)
                .map(|i| total_derivative(&t.forward[i], &tj))
                .collect()
        })
        .collect()
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|(r, _)| *r != row)
        .map(|(_, v)| {
            v.iter()
                .enumerate()
                .filter(|(c, _)| *c != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

fn det(m: &[Vec<Expr>]) -> Expr {
    if m.len() == 1 {
        return m[0][0].clone();
    }
    Expr::sum(
        (0..m.len())
            .map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                m[0][j]
                    .mul(&det(&minor(m, 0, j)))
                    .scale(Rat::from_integer(sign.into()))
            })
            .collect(),
    )
}

/// Adjugate: `adj[i][j]` is the (j, i) cofactor, so `M⁻¹ = adj / det M`.
fn adjugate(m: &[Vec<Expr>]) -> Vec<Vec<Expr>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![Expr::one()]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                    det(&minor(m, j, i)).scale(Rat::from_integer(sign.into()))
                })
                .collect()
        })
        .collect()
}

/// Jacobian determinant of the independent-variable maps, as an expression
/// in tilde coordinates.
pub fn jacobian(t: &PointTransformation) -> Expr {
    det(&dmatrix(t))
}

/// Express every original jet coordinate up to the given order in tilde
/// coordinates. First-order jets come from inverting the chain rule
/// D̃ = M·D; higher orders iterate the transformed total derivatives.
pub fn extend(t: &PointTransformation, order: usize) -> Vec<(Coord, Expr)> {
    let ctx = &t.ctx;
    let n = ctx.indep.len();
    let m = dmatrix(t);
    let adj = adjugate(&m);
    let jinv = det(&m).pow_i64(-1);
    let tindep: Vec<String> = ctx.indep.iter().map(|s| tilde_name(s)).collect();
    let mut jets: HashMap<JetVar, Expr> = HashMap::new();
    let mut frontier: Vec<JetVar> = Vec::new();
    for (s, d) in ctx.dep.iter().enumerate() {
        let j = JetVar::base(d);
        jets.insert(j.clone(), t.forward[n + s].clone());
        frontier.push(j);
    }
    for _ in 1..=order {
        let mut next = Vec::new();
        for j in frontier {
            let e = jets[&j].clone();
            for (i, xi) in ctx.indep.iter().enumerate() {
                let key = JetVar::new(&j.dep, j.index.push(xi));
                if jets.contains_key(&key) {
                    continue;
                }
                let val = Expr::sum(
                    (0..n)
                        .map(|jj| adj[i][jj].mul(&total_derivative(&e, &tindep[jj])))
                        .collect(),
                )
                .mul(&jinv);
                jets.insert(key.clone(), val);
                next.push(key);
            }
        }
        frontier = next;
    }
    let mut map: Vec<(Coord, Expr)> = ctx
        .indep
        .iter()
        .enumerate()
        .map(|(i, x)| (Coord::Indep(x.clone()), t.forward[i].clone()))
        .collect();
    map.extend(jets.into_iter().map(|(j, e)| (Coord::Jet(j), e)));
    map
}

/// Rewrite an expression in original coordinates through the transformation,
/// yielding an expression in tilde coordinates.
pub fn rewrite(e: &Expr, t: &PointTransformation) -> Expr {
    replace_coords(e, &extend(t, e.max_jet_order()))
}

/// Transport a density tuple through the transformation. The new densities
/// are the cofactor-weighted combinations of the transformed originals; the
/// identity J·(D_iΦ^i)∘T = D̃_iΨ^i is oracle-checked before returning, and
/// the result is renamed back to the original variables.
pub fn transform_densities(
    cl: &ConservationLaw,
    t: &PointTransformation,
    cfg: &OracleConfig,
) -> Result<ConservationLaw, SymError> {
    let ctx = &t.ctx;
    let n = ctx.indep.len();
    let m = dmatrix(t);
    let adj = adjugate(&m);
    let phit: Vec<Expr> = cl.fluxes.iter().map(|f| rewrite(f, t)).collect();
    let psi: Vec<Expr> = (0..n)
        .map(|j| Expr::sum((0..n).map(|i| adj[i][j].mul(&phit[i])).collect()))
        .collect();
    let div = Expr::sum(
        cl.fluxes
            .iter()
            .zip(&ctx.indep)
            .map(|(f, xi)| total_derivative(f, xi))
            .collect(),
    );
    let lhs = det(&m).mul(&rewrite(&div, t));
    let rhs = Expr::sum(
        psi.iter()
            .zip(&ctx.indep)
            .map(|(p, xi)| total_derivative(p, &tilde_name(xi)))
            .collect(),
    );
    let v = oracle::is_zero(&lhs.sub(&rhs), cfg)?;
    if !v.zero {
        return Err(SymError::SelfCheck(v.max_rel_residual));
    }
    Ok(ConservationLaw {
        fluxes: psi.iter().map(|p| from_tilde(p, ctx)).collect(),
        multipliers: None,
    })
}

#[derive(Debug, Clone)]
pub struct FactorVerdict {
    pub pass: bool,
    pub residuals: Vec<ZeroVerdict>,
}

/// Check that each transformed equation equals the factor-matrix combination
/// of the equations in tilde variables.
pub fn verify_factor_matrix(
    sys: &SystemDef,
    t: &PointTransformation,
    a: &[Vec<Expr>],
    cfg: &OracleConfig,
) -> Result<FactorVerdict, SymError> {
    let k = sys.equations.len();
    assert_eq!(a.len(), k);
    let mut residuals = Vec::new();
    let mut pass = true;
    for alpha in 0..k {
        let lhs = rewrite(&sys.equations[alpha], t);
        let rhs = Expr::sum(
            (0..k)
                .map(|beta| a[alpha][beta].mul(&to_tilde(&sys.equations[beta], &sys.ctx)))
                .collect(),
        );
        let v = oracle::is_zero(&lhs.sub(&rhs), cfg)?;
        pass &= v.zero;
        residuals.push(v);
    }
    Ok(FactorVerdict { pass, residuals })
}

fn identity_matrix(k: usize) -> Vec<Vec<Expr>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect()
}

fn transported_multipliers(m: &MultiplierSet, t: &PointTransformation, a: &[Vec<Expr>]) -> Vec<Expr> {
    let jac = jacobian(t);
    let k = m.exprs.len();
    (0..k)
        .map(|beta| {
            let combo = Expr::sum(
                (0..k)
                    .map(|alpha| a[alpha][beta].mul(&rewrite(&m.exprs[alpha], t)))
                    .collect(),
            );
            from_tilde(&jac.mul(&combo), &t.ctx)
        })
        .collect()
}

/// Transport a multiplier set through a symmetry: Λ̂^β = J·A_α^β·(Λ^α∘T),
/// renamed back to the original variables and re-verified against the
/// system.
pub fn transform_multipliers(
    sys: &SystemDef,
    m: &MultiplierSet,
    t: &PointTransformation,
    a: &[Vec<Expr>],
    cfg: &OracleConfig,
) -> Result<MultiplierSet, SymError> {
    if !verify_factor_matrix(sys, t, a, cfg)?.pass {
        return Err(SymError::FactorMatrix);
    }
    let out = MultiplierSet {
        exprs: transported_multipliers(m, t, a),
    };
    if !dcm::verify_multipliers(sys, &out, cfg)?.pass {
        return Err(SymError::Verification);
    }
    Ok(out)
}

/// One Taylor order of a parameter family of conservation laws.
#[derive(Debug, Clone)]
pub struct LieOrder {
    pub order: usize,
    pub multipliers: MultiplierSet,
    pub law: ConservationLaw,
}

fn taylor_coefficient(family: &[Expr], k: usize, eps: &Coord) -> Vec<Expr> {
    let mut fact = Rat::from_integer(1.into());
    for i in 1..=k {
        fact *= Rat::from_integer(i.into());
    }
    let at0 = [(eps.clone(), Expr::zero())];
    family
        .iter()
        .map(|e| {
            let mut d = e.clone();
            for _ in 0..k {
                d = diff(&d, eps);
            }
            replace_coords(&d, &at0).scale(fact.recip())
        })
        .collect()
}

/// Expand a one-parameter symmetry family's transported multipliers and
/// densities in powers of the parameter. Each nonvanishing order from 1 to
/// `max_order` is verified and emitted; orders where both the multipliers
/// and the densities vanish are dropped.
pub fn lie_expand(
    sys: &SystemDef,
    m: &MultiplierSet,
    cl: &ConservationLaw,
    t: &PointTransformation,
    max_order: usize,
    cfg: &OracleConfig,
) -> Result<Vec<LieOrder>, SymError> {
    let eps = t.eps.clone().ok_or(SymError::MissingParameter)?;
    let epsc = Coord::Param(eps);
    if max_order > SERIES_CAP {
        // Past the cap only polynomial parameter maps are expandable.
        for f in &t.forward {
            let mut d = f.clone();
            for _ in 0..=SERIES_CAP {
                d = diff(&d, &epsc);
            }
            if !d.is_zero_literal() {
                return Err(SymError::SeriesCap(max_order));
            }
        }
    }
    let ident = identity_matrix(sys.equations.len());
    let a = t.factor.as_deref().unwrap_or(&ident);
    if !verify_factor_matrix(sys, t, a, cfg)?.pass {
        return Err(SymError::FactorMatrix);
    }
    let lam = transported_multipliers(m, t, a);
    let fam_law = transform_densities(cl, t, cfg)?;
    let mut out = Vec::new();
    for k in 1..=max_order {
        let lk = taylor_coefficient(&lam, k, &epsc);
        let fk = taylor_coefficient(&fam_law.fluxes, k, &epsc);
        let mut all_zero = true;
        for e in lk.iter().chain(&fk) {
            all_zero &= oracle::is_zero(e, cfg)?.zero;
        }
        if all_zero {
            continue;
        }
        let ms = MultiplierSet { exprs: lk };
        let law = ConservationLaw {
            fluxes: fk,
            multipliers: Some(ms.clone()),
        };
        if !dcm::verify_multipliers(sys, &ms, cfg)?.pass
            || !dcm::verify_conservation_law(sys, &ms, &law, cfg)?.zero
        {
            return Err(SymError::Verification);
        }
        out.push(LieOrder {
            order: k,
            multipliers: ms,
            law,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Newness {
    New,
    Equivalent { index: usize, ratio: f64 },
}

/// Is a multiplier set new relative to known ones? Comparison happens on
/// the solution manifold: the candidate and each known set are restricted
/// through the system's solved forms, then tested for proportionality.
pub fn newness_test(
    candidate: &MultiplierSet,
    known: &[MultiplierSet],
    sys: &SystemDef,
    cfg: &OracleConfig,
) -> Result<Newness, SymError> {
    let cand = candidate
        .exprs
        .iter()
        .map(|e| sys.restrict(e))
        .collect::<Result<Vec<_>, _>>()?;
    let mut trivial = true;
    for e in &cand {
        trivial &= oracle::is_zero(e, cfg)?.zero;
    }
    if trivial {
        return Err(SymError::TrivialCandidate);
    }
    for (i, k) in known.iter().enumerate() {
        let kr = k
            .exprs
            .iter()
            .map(|e| sys.restrict(e))
            .collect::<Result<Vec<_>, _>>()?;
        match oracle::is_proportional(&cand, &kr, cfg) {
            Ok(v) if v.proportional => {
                return Ok(Newness::Equivalent {
                    index: i,
                    ratio: v.ratio.unwrap_or(f64::NAN),
                })
            }
            Ok(_) => {}
            Err(OracleError::Degenerate) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Newness::New)
}
