//! Potential systems and nonlocal symmetries. An equation in conserved form
//! (or a verified conservation law) introduces a potential variable whose
//! defining pair replaces the source; point symmetries of the potential
//! system whose coefficients genuinely involve the potential are nonlocal
//! symmetries of the original system. Also here: the classification residuals
//! for the nonlinear-telegraph family and its closed-form potential symmetry.

use thiserror::Error;

use crate::dcm::{self, ConservationLaw, DcmError};
use crate::jetexpr::{
    diff, oracle, replace_coords, total_derivative, Coord, Elementary, Expr, JetVar, Node,
    OracleConfig, OracleError, Rat, SubstError, ZeroVerdict,
};
use crate::system::SystemDef;
use crate::varcalc::Generator;

#[derive(Debug, Error)]
pub enum NonlocalError {
    #[error("potential systems need exactly two independent variables, got {0}")]
    IndepCount(usize),
    #[error("equation is not in conserved form: {0}")]
    NotConservedForm(String),
    #[error("conservation law carries no multipliers")]
    MissingMultipliers,
    #[error("all multipliers vanish on the solution manifold; no equation can be replaced")]
    NoUsefulMultiplier,
    #[error("potential equations fail to reproduce the source (residual {0})")]
    CrossCheck(f64),
    #[error("classification residuals are nonzero; no closed-form potential symmetry")]
    ResidualNonzero,
    #[error(transparent)]
    Dcm(#[from] DcmError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// Antiderivative of an expression in the single order-0 variable `dep`.
/// Handles the forms that arise from peeling total derivatives; anything
/// else becomes an explicit integral from 0.
fn antideriv(f: &Expr, dep: &str) -> Expr {
    let y = Expr::var(dep);
    let depends = |e: &Expr| e.contains_coord(&Coord::Jet(JetVar::base(dep)));
    if !depends(f) {
        return f.mul(&y);
    }
    match f.node() {
        Node::Jet(j) if j.dep == dep && j.index.is_empty() => {
            y.pow_i64(2).scale(Rat::new(1.into(), 2.into()))
        }
        Node::Pow(b, k) if *b == y => {
            let minus_one = Rat::from_integer((-1).into());
            if *k == minus_one {
                Expr::elem(Elementary::Log, y)
            } else {
                let k1 = k + Rat::from_integer(1.into());
                b.pow(k1.clone()).scale(k1.recip())
            }
        }
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| antideriv(t, dep)).collect()),
        Node::Product(fs) => {
            let (dep_parts, free): (Vec<_>, Vec<_>) = fs.iter().cloned().partition(depends);
            if dep_parts.len() == 1 && !free.is_empty() {
                Expr::product(free).mul(&antideriv(&dep_parts[0], dep))
            } else {
                integral_fallback(f, dep)
            }
        }
        Node::ArbFunc { name, deriv, args }
            if args.len() == 1 && args[0] == y && deriv[0] >= 1 =>
        {
            Expr::func(name, vec![deriv[0] - 1], args.clone())
        }
        Node::Elem(g, a) if *a == y => match g {
            Elementary::Exp => f.clone(),
            Elementary::Sin => Expr::elem(Elementary::Cos, y).neg(),
            Elementary::Cos => Expr::elem(Elementary::Sin, y),
            Elementary::Sinh => Expr::elem(Elementary::Cosh, y),
            Elementary::Cosh => Expr::elem(Elementary::Sinh, y),
            Elementary::Tanh => Expr::elem(Elementary::Log, Expr::elem(Elementary::Cosh, y)),
            _ => integral_fallback(f, dep),
        },
        _ => integral_fallback(f, dep),
    }
}

fn integral_fallback(f: &Expr, dep: &str) -> Expr {
    let integrand = replace_coords(
        f,
        &[(Coord::Jet(JetVar::base(dep)), Expr::bound("s"))],
    );
    Expr::integral("s", Expr::zero(), Expr::var(dep), integrand)
}

/// Split an expression into densities (T, X) with e = D_t T + D_x X, by
/// peeling the highest jet terms. Fails when a term resists peeling or a
/// nonzero remainder survives.
fn split_divergence(e: &Expr, tvar: &str, xvar: &str) -> Result<(Expr, Expr), NonlocalError> {
    let mut rem = crate::jetexpr::expand(e);
    let mut tt = Expr::zero();
    let mut xx = Expr::zero();
    let fail = |msg: &str| NonlocalError::NotConservedForm(msg.to_string());
    for _ in 0..256 {
        if rem.is_zero_literal() {
            break;
        }
        let order = rem.max_jet_order();
        if order == 0 {
            return Err(fail("order-zero remainder survives"));
        }
        // First term carrying a jet of maximal order.
        let term = rem
            .terms()
            .into_iter()
            .find(|t| t.max_jet_order() == order)
            .unwrap();
        let top = term
            .jet_vars()
            .into_iter()
            .rev()
            .find(|j| j.order() == order)
            .unwrap();
        let dir = if top.index.vars().contains(&tvar.to_string()) {
            tvar
        } else {
            xvar
        };
        let lowered = Expr::jet(JetVar::new(
            &top.dep,
            top.index.subtract(&crate::jetexpr::MultiIndex::new(vec![dir.to_string()])).unwrap(),
        ));
        // Coefficient of the jet in this term; the jet must occur linearly.
        let factors = match term.node() {
            Node::Product(fs) => fs.clone(),
            _ => vec![term.clone()],
        };
        let jet_expr = Expr::jet(top.clone());
        let mut coeff_parts = Vec::new();
        let mut seen = false;
        for f in factors {
            if f == jet_expr && !seen {
                seen = true;
            } else if f.contains_coord(&Coord::Jet(top.clone())) {
                return Err(fail("highest jet occurs nonlinearly"));
            } else {
                coeff_parts.push(f);
            }
        }
        if !seen {
            return Err(fail("highest jet occurs nonlinearly"));
        }
        let coeff = Expr::product(coeff_parts);
        let stub = if order == 1 {
            // D_dir of the stub must reproduce the term exactly, so the
            // coefficient may depend on nothing else that D_dir touches.
            let other_jets: Vec<JetVar> = coeff.jet_vars();
            if other_jets.is_empty() && !coeff.contains_coord(&Coord::Indep(dir.to_string())) {
                coeff.mul(&lowered)
            } else if other_jets.iter().all(|j| j.dep == top.dep && j.index.is_empty())
                && coeff.coords().iter().all(|c| matches!(c, Coord::Jet(_)))
            {
                antideriv(&coeff, &top.dep)
            } else {
                return Err(fail("order-one coefficient is not integrable"));
            }
        } else {
            coeff.mul(&lowered)
        };
        if dir == tvar {
            tt = tt.add(&stub);
        } else {
            xx = xx.add(&stub);
        }
        rem = crate::jetexpr::expand(&rem.sub(&total_derivative(&stub, dir)));
    }
    if !rem.is_zero_literal() {
        return Err(fail("peeling did not terminate"));
    }
    // Normalize the overall sign so the leading T term is positive.
    let neg_lead = match tt.terms().first().map(|t| t.node().clone()) {
        Some(Node::Num(r)) => r < Rat::from_integer(0.into()),
        Some(Node::Product(fs)) => {
            matches!(fs.first().map(|f| f.node().clone()), Some(Node::Num(r)) if r < Rat::from_integer(0.into()))
        }
        _ => false,
    };
    if neg_lead {
        Ok((tt.neg(), xx.neg()))
    } else {
        Ok((tt, xx))
    }
}

/// Where the potential pair comes from: an equation already in conserved
/// form, or a conservation law with known multipliers.
pub enum Source {
    Equation(usize),
    Law(ConservationLaw),
}

/// A system extended by one potential variable, with the defining pair
/// `v_t + X = 0`, `v_x - T = 0` in place of the source equation.
#[derive(Debug, Clone)]
pub struct PotentialSystem {
    pub sys: SystemDef,
    pub potential: String,
    pub t_density: Expr,
    pub x_density: Expr,
    /// Index of the replaced equation in the original system.
    pub replaced: usize,
}

fn fresh_potential_name(sys: &SystemDef) -> String {
    let taken = |n: &str| {
        sys.ctx.dep.iter().any(|d| d == n)
            || sys.ctx.indep.iter().any(|d| d == n)
            || sys.ctx.params.iter().any(|d| d == n)
    };
    for cand in ["v", "w"] {
        if !taken(cand) {
            return cand.to_string();
        }
    }
    let mut i = 1;
    loop {
        let cand = format!("p{i}");
        if !taken(&cand) {
            return cand;
        }
        i += 1;
    }
}

pub fn potentialize(
    sys: &SystemDef,
    source: &Source,
    cfg: &OracleConfig,
) -> Result<PotentialSystem, NonlocalError> {
    if sys.ctx.indep.len() != 2 {
        return Err(NonlocalError::IndepCount(sys.ctx.indep.len()));
    }
    let (tvar, xvar) = (sys.ctx.indep[0].clone(), sys.ctx.indep[1].clone());
    let (t_density, x_density, replaced, combo) = match source {
        Source::Equation(idx) => {
            let eq = &sys.equations[*idx];
            let (t, x) = split_divergence(eq, &tvar, &xvar)?;
            (t, x, *idx, None)
        }
        Source::Law(law) => {
            let m = law
                .multipliers
                .as_ref()
                .ok_or(NonlocalError::MissingMultipliers)?;
            let mut replaced = None;
            for (i, lam) in m.exprs.iter().enumerate() {
                if !oracle::is_zero(&sys.restrict(lam)?, cfg)?.zero {
                    replaced = Some(i);
                    break;
                }
            }
            let replaced = replaced.ok_or(NonlocalError::NoUsefulMultiplier)?;
            let combo = Expr::sum(
                m.exprs
                    .iter()
                    .zip(&sys.equations)
                    .map(|(l, g)| l.mul(g))
                    .collect(),
            );
            (
                law.fluxes[0].clone(),
                law.fluxes[1].clone(),
                replaced,
                Some(combo),
            )
        }
    };
    // The pair must reproduce its source when cross-differentiated.
    let div = total_derivative(&t_density, &tvar).add(&total_derivative(&x_density, &xvar));
    let target = match &combo {
        Some(c) => c.clone(),
        None => sys.equations[replaced].clone(),
    };
    let same = oracle::is_zero(&div.sub(&target), cfg)?;
    let flipped = oracle::is_zero(&div.add(&target), cfg)?;
    if !same.zero && !flipped.zero {
        return Err(NonlocalError::CrossCheck(
            same.max_rel_residual.min(flipped.max_rel_residual),
        ));
    }
    let potential = fresh_potential_name(sys);
    let v = Expr::var(&potential);
    let mut equations = vec![
        Expr::jet(JetVar::new(&potential, crate::jetexpr::MultiIndex::new(vec![tvar]))).add(&x_density),
        Expr::jet(JetVar::new(&potential, crate::jetexpr::MultiIndex::new(vec![xvar]))).sub(&t_density),
    ];
    let _ = v;
    for (i, eq) in sys.equations.iter().enumerate() {
        if i != replaced {
            equations.push(eq.clone());
        }
    }
    let mut ctx = sys.ctx.clone();
    ctx.dep.push(potential.clone());
    Ok(PotentialSystem {
        sys: SystemDef::new(ctx, equations),
        potential,
        t_density,
        x_density,
        replaced,
    })
}

/// Does a point generator on a potential system involve the potential
/// variables essentially? If so it projects to a nonlocal symmetry of the
/// source system.
pub fn nonlocal_symmetry_test(
    g: &Generator,
    potentials: &[String],
    cfg: &OracleConfig,
) -> Result<bool, NonlocalError> {
    let coeffs: Vec<Expr> = match g {
        Generator::Evolutionary { etas } => etas.iter().map(|(_, e)| e.clone()).collect(),
        Generator::Point { xis, etas } => xis
            .iter()
            .map(|(_, e)| e.clone())
            .chain(etas.iter().map(|(_, e)| e.clone()))
            .collect(),
    };
    for c in coeffs {
        for p in potentials {
            let d = diff(&c, &Coord::Jet(JetVar::base(p)));
            if !oracle::is_zero(&d, cfg)?.zero {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NltFlag {
    Linearizable,
    NotLinearizable,
    /// Every constant vanishes; the residual equations hold vacuously.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct NltClassification {
    pub residuals: [Expr; 2],
    pub verdicts: [ZeroVerdict; 2],
    pub flag: NltFlag,
}

/// Residuals of the classification ODE pair for the telegraph family:
/// (c₃u + c₄)F' − 2(c₁ − c₂ − G)F and (c₃u + c₄)G' + G² − (c₁ − 2c₂ + c₃)G − c₅,
/// plus the linearizability test c₁ = 0, c₅ = c₂(c₃ − c₂).
pub fn nlt_classification_residual(
    f: &Expr,
    g: &Expr,
    dep: &str,
    c: &[Expr; 5],
    cfg: &OracleConfig,
) -> Result<NltClassification, NonlocalError> {
    let u = Expr::var(dep);
    let du = Coord::Jet(JetVar::base(dep));
    let shift = c[2].mul(&u).add(&c[3]);
    let r1 = shift
        .mul(&diff(f, &du))
        .sub(&c[0].sub(&c[1]).sub(g).mul(f).scale(Rat::from_integer(2.into())));
    let r2 = shift
        .mul(&diff(g, &du))
        .add(&g.pow_i64(2))
        .sub(&c[0].sub(&c[1].scale(Rat::from_integer(2.into()))).add(&c[2]).mul(g))
        .sub(&c[4]);
    let v1 = oracle::is_zero(&r1, cfg)?;
    let v2 = oracle::is_zero(&r2, cfg)?;
    let mut all_const_zero = true;
    for ci in c {
        all_const_zero &= oracle::is_zero(ci, cfg)?.zero;
    }
    let flag = if all_const_zero {
        NltFlag::Degenerate
    } else if v1.zero
        && v2.zero
        && oracle::is_zero(&c[0], cfg)?.zero
        && oracle::is_zero(&c[4].sub(&c[1].mul(&c[2].sub(&c[1]))), cfg)?.zero
    {
        NltFlag::Linearizable
    } else {
        NltFlag::NotLinearizable
    };
    Ok(NltClassification {
        residuals: [r1, r2],
        verdicts: [v1, v2],
        flag,
    })
}

/// The eight determining equations a point generator
/// ξ∂_x + τ∂_t + η∂_u + φ∂_v must satisfy on the telegraph potential system.
pub fn potential_determining_residuals(
    xi: &Expr,
    tau: &Expr,
    eta: &Expr,
    phi: &Expr,
    f: &Expr,
    g: &Expr,
) -> Vec<Expr> {
    let d = |e: &Expr, c: Coord| diff(e, &c);
    let dx = |e: &Expr| d(e, Coord::Indep("x".into()));
    let dt = |e: &Expr| d(e, Coord::Indep("t".into()));
    let du = |e: &Expr| d(e, Coord::Jet(JetVar::base("u")));
    let dv = |e: &Expr| d(e, Coord::Jet(JetVar::base("v")));
    let fp = du(f);
    let gp = du(g);
    vec![
        dv(xi).sub(&du(tau)),
        du(eta).sub(&dv(phi)).add(&dx(xi)).sub(&dt(tau)),
        g.mul(&dv(eta).add(&dx(tau))).add(&dt(eta)).sub(&dx(phi)),
        du(xi).sub(&f.mul(&dv(tau))),
        du(phi).sub(&g.mul(&du(tau))).sub(&f.mul(&dv(eta))),
        g.mul(&dv(xi)).add(&dt(xi)).sub(&f.mul(&dx(tau))),
        f.mul(
            &dv(phi)
                .sub(&dt(tau))
                .add(&dx(xi))
                .sub(&du(eta))
                .sub(&g.mul(&dv(tau)).scale(Rat::from_integer(2.into()))),
        )
        .sub(&fp.mul(eta)),
        g.mul(&dv(phi).sub(&dt(tau)).sub(&g.mul(&dv(tau))))
            .sub(&f.mul(&dx(eta)))
            .sub(&gp.mul(eta))
            .add(&dt(phi)),
    ]
}

/// Closed-form potential symmetry of the telegraph potential system for a
/// pair (F, G) satisfying the classification ODEs:
/// ξ = c₁x + ∫F du, τ = c₂t + v, η = c₃u + c₄, φ = c₅t + (c₁ − c₂ + c₃)v.
pub fn nlt_potential_symmetry(
    f: &Expr,
    g: &Expr,
    c: &[Expr; 5],
    cfg: &OracleConfig,
) -> Result<(Generator, Vec<ZeroVerdict>), NonlocalError> {
    let class = nlt_classification_residual(f, g, "u", c, cfg)?;
    if !class.verdicts[0].zero || !class.verdicts[1].zero {
        return Err(NonlocalError::ResidualNonzero);
    }
    let xi = c[0].mul(&Expr::indep("x")).add(&antideriv(f, "u"));
    let tau = c[1].mul(&Expr::indep("t")).add(&Expr::var("v"));
    let eta = c[2].mul(&Expr::var("u")).add(&c[3]);
    let phi = c[4]
        .mul(&Expr::indep("t"))
        .add(&c[0].sub(&c[1]).add(&c[2]).mul(&Expr::var("v")));
    let mut verdicts = Vec::new();
    for r in potential_determining_residuals(&xi, &tau, &eta, &phi, f, g) {
        verdicts.push(oracle::is_zero(&r, cfg)?);
    }
    let gen = Generator::Point {
        xis: vec![("t".into(), tau), ("x".into(), xi)],
        etas: vec![("u".into(), eta), ("v".into(), phi)],
    };
    Ok((gen, verdicts))
}

/// Eliminating the potential by cross-differentiation must recover the
/// source: D_x(v_t + X) − D_t(v_x − T) = D_tT + D_xX.
pub fn cross_check(p: &PotentialSystem, cfg: &OracleConfig) -> Result<ZeroVerdict, NonlocalError> {
    let (tvar, xvar) = (p.sys.ctx.indep[0].clone(), p.sys.ctx.indep[1].clone());
    let lhs = total_derivative(&p.sys.equations[0], &xvar)
        .sub(&total_derivative(&p.sys.equations[1], &tvar));
    let rhs = total_derivative(&p.t_density, &tvar).add(&total_derivative(&p.x_density, &xvar));
    Ok(oracle::is_zero(&lhs.sub(&rhs), cfg)?)
}

// Keep dcm in the public signature story: potentialize's law route feeds on
// verified ConservationLaw values produced there.
#[allow(unused_imports)]
use dcm::MultiplierSet as _MultiplierSet;

#[cfg(test)]
mod tests;
