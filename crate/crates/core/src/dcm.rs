//! Direct construction of conservation laws from multipliers: determining
//! equations for a multiplier ansatz, verification of candidate multiplier
//! sets and density/flux pairs, closed-form densities for two-variable
//! first-order potential systems, and the classifying-function pair (d, h)
//! for wave-speed/forcing classification.

use thiserror::Error;

use crate::jetexpr::oracle;
use crate::jetexpr::{
    replace_coords, total_derivative, Coord, Expr, JetVar, OracleConfig, OracleError, Rat,
    SubstError, ZeroVerdict,
};
use crate::system::SystemDef;
use crate::varcalc::{euler_operator, split_by_monomials, VarcalcError};

#[derive(Debug, Error)]
pub enum DcmError {
    #[error("system does not have the expected potential form: {0}")]
    ShapeMismatch(String),
    #[error("constructed densities fail the divergence self-check (residual {0})")]
    SelfCheck(f64),
    #[error(transparent)]
    Varcalc(#[from] VarcalcError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Subst(#[from] SubstError),
}

/// Unknown-multiplier ansatz: one named function per equation, each applied
/// to a declared list of coordinate arguments.
#[derive(Debug, Clone)]
pub struct Ansatz {
    pub multipliers: Vec<(String, Vec<Coord>)>,
}

impl Ansatz {
    /// The multiplier expressions `Λ^σ = name(args...)` as opaque symbols.
    pub fn symbols(&self) -> Vec<Expr> {
        self.multipliers
            .iter()
            .map(|(name, coords)| {
                let args: Vec<Expr> = coords.iter().map(Expr::coord).collect();
                Expr::func(name, vec![0; args.len()], args)
            })
            .collect()
    }

    fn allows(&self, j: &JetVar) -> bool {
        self.multipliers
            .iter()
            .any(|(_, coords)| coords.contains(&Coord::Jet(j.clone())))
    }
}

/// Concrete multipliers, one per equation.
#[derive(Debug, Clone)]
pub struct MultiplierSet {
    pub exprs: Vec<Expr>,
}

/// Densities `Φ^i`, one per independent variable (in declaration order),
/// with `Σ_i D_i Φ^i = Λ^σ G_σ` when multipliers are attached.
#[derive(Debug, Clone)]
pub struct ConservationLaw {
    pub fluxes: Vec<Expr>,
    pub multipliers: Option<MultiplierSet>,
}

#[derive(Debug, Clone)]
pub struct MultiplierVerdict {
    pub pass: bool,
    /// Euler residual per dependent variable.
    pub residuals: Vec<(String, ZeroVerdict)>,
}

/// Multiplier determining equations: apply every Euler operator to
/// `Λ^σ G_σ` with the `Λ^σ` opaque, then split by monomials in the jet
/// variables the ansatz may not depend on. Zero rows and repeated rows
/// (up to sign) are dropped.
pub fn derive_determining(sys: &SystemDef, ansatz: &Ansatz) -> Result<Vec<Expr>, DcmError> {
    assert_eq!(ansatz.multipliers.len(), sys.equations.len());
    let lambdas = ansatz.symbols();
    let combo = Expr::sum(
        lambdas
            .iter()
            .zip(&sys.equations)
            .map(|(l, g)| l.mul(g))
            .collect(),
    );
    let excluded = |j: &JetVar| !ansatz.allows(j);
    let mut out: Vec<Expr> = Vec::new();
    for dep in &sys.ctx.dep {
        let r = euler_operator(&combo, dep);
        for (_, coeff) in split_by_monomials(&r, &excluded)? {
            if coeff.is_zero_literal() {
                continue;
            }
            if out.contains(&coeff) || out.contains(&coeff.neg()) {
                continue;
            }
            out.push(coeff);
        }
    }
    Ok(out)
}

/// Do the multipliers annihilate every Euler operator applied to `Λ^σG_σ`?
pub fn verify_multipliers(
    sys: &SystemDef,
    m: &MultiplierSet,
    cfg: &OracleConfig,
) -> Result<MultiplierVerdict, DcmError> {
    assert_eq!(m.exprs.len(), sys.equations.len());
    let combo = Expr::sum(
        m.exprs
            .iter()
            .zip(&sys.equations)
            .map(|(l, g)| l.mul(g))
            .collect(),
    );
    let mut residuals = Vec::new();
    let mut pass = true;
    for dep in &sys.ctx.dep {
        let v = oracle::is_zero(&euler_operator(&combo, dep), cfg)?;
        pass &= v.zero;
        residuals.push((dep.clone(), v));
    }
    Ok(MultiplierVerdict { pass, residuals })
}

/// All multiplier components vanish on the solution manifold: the law the
/// set generates is trivial.
pub fn is_trivial(
    sys: &SystemDef,
    m: &MultiplierSet,
    cfg: &OracleConfig,
) -> Result<bool, DcmError> {
    for e in &m.exprs {
        let r = sys.restrict(e)?;
        if !oracle::is_zero(&r, cfg)?.zero {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Does `Λ^σ G_σ = D_i Φ^i` hold identically in jet space?
pub fn verify_conservation_law(
    sys: &SystemDef,
    m: &MultiplierSet,
    cl: &ConservationLaw,
    cfg: &OracleConfig,
) -> Result<ZeroVerdict, DcmError> {
    let combo = Expr::sum(
        m.exprs
            .iter()
            .zip(&sys.equations)
            .map(|(l, g)| l.mul(g))
            .collect(),
    );
    let div = Expr::sum(
        cl.fluxes
            .iter()
            .zip(&sys.ctx.indep)
            .map(|(p, xi)| total_derivative(p, xi))
            .collect(),
    );
    Ok(oracle::is_zero(&combo.sub(&div), cfg)?)
}

/// The wave-speed/forcing pair (F, G) of a first-order potential system
/// `v_t − F(u)u_x − G(u) = 0`, `v_x − u_t = 0`.
pub struct PotentialShape {
    pub u: String,
    pub v: String,
    pub f: Expr,
    pub g: Expr,
}

/// Recognize the potential shape above; errors when the system differs
/// from it by more than the oracle tolerance.
pub fn potential_shape(sys: &SystemDef, cfg: &OracleConfig) -> Result<PotentialShape, DcmError> {
    if sys.ctx.indep != ["t".to_string(), "x".to_string()] || sys.ctx.dep.len() != 2 {
        return Err(DcmError::ShapeMismatch(
            "expected independent variables (t, x) and two dependent variables".into(),
        ));
    }
    if sys.equations.len() != 2 {
        return Err(DcmError::ShapeMismatch("expected two equations".into()));
    }
    let u = sys.ctx.dep[0].clone();
    let v = sys.ctx.dep[1].clone();
    let g1 = &sys.equations[0];
    let ux = Coord::Jet(JetVar::new(&u, crate::jetexpr::MultiIndex::new(vec!["x".into()])));
    let f = crate::jetexpr::diff(g1, &ux).neg();
    let zeroed = replace_coords(
        g1,
        &[
            (Coord::Jet(JetVar::new(&v, crate::jetexpr::MultiIndex::new(vec!["t".into()]))), Expr::zero()),
            (ux.clone(), Expr::zero()),
        ],
    );
    let g = zeroed.neg();
    let vt = Expr::jet_named(&v, &["t"]);
    let shape1 = vt.sub(&f.mul(&Expr::coord(&ux))).sub(&g);
    if !oracle::is_zero(&g1.sub(&shape1), cfg)?.zero {
        return Err(DcmError::ShapeMismatch(format!(
            "first equation is not of the form {v}_t - F({u})*{u}_x - G({u})"
        )));
    }
    let shape2 = Expr::jet_named(&v, &["x"]).sub(&Expr::jet_named(&u, &["t"]));
    if !oracle::is_zero(&sys.equations[1].sub(&shape2), cfg)?.zero {
        return Err(DcmError::ShapeMismatch(format!(
            "second equation is not {v}_x - {u}_t"
        )));
    }
    if f.jet_vars().iter().any(|j| j.dep != u || j.order() > 0)
        || g.jet_vars().iter().any(|j| j.dep != u || j.order() > 0)
    {
        return Err(DcmError::ShapeMismatch(
            "wave speed and forcing must depend on the first dependent variable only".into(),
        ));
    }
    Ok(PotentialShape { u, v, f, g })
}

/// Closed-form densities for a verified multiplier pair `[α, β]` of the
/// potential system, as integral-node expressions with base point (a, b):
///
/// ```text
/// T =  ∫_a^u −β(x,t,s,b) ds + ∫_b^v α(x,t,u,s) ds
/// X = −∫_a^u F(s)·α(x,t,s,b) ds + ∫_b^v β(x,t,u,s) ds − G(a)·∫_0^x α(s,t,a,b) ds
/// ```
///
/// The result is self-checked against `D_tT + D_xX = αG₁ + βG₂` before
/// being returned.
pub fn densities_2var(
    sys: &SystemDef,
    m: &MultiplierSet,
    base: (Expr, Expr),
    cfg: &OracleConfig,
) -> Result<ConservationLaw, DcmError> {
    let shape = potential_shape(sys, cfg)?;
    let (a, b) = base;
    let alpha = &m.exprs[0];
    let beta = &m.exprs[1];
    let uc = Coord::Jet(JetVar::base(&shape.u));
    let vc = Coord::Jet(JetVar::base(&shape.v));
    let xc = Coord::Indep("x".into());
    let s = Expr::bound("s");
    let uvar = Expr::coord(&uc);
    let vvar = Expr::coord(&vc);

    let sub = |e: &Expr, pairs: &[(Coord, Expr)]| replace_coords(e, pairs);

    // T = ∫_a^u −β(x,t,s,b) ds + ∫_b^v α(x,t,u,s) ds
    let t_density = Expr::integral(
        "s",
        a.clone(),
        uvar.clone(),
        sub(beta, &[(uc.clone(), s.clone()), (vc.clone(), b.clone())]).neg(),
    )
    .add(&Expr::integral(
        "s",
        b.clone(),
        vvar.clone(),
        sub(alpha, &[(vc.clone(), s.clone())]),
    ));

    // X = −∫_a^u F(s)α(x,t,s,b) ds + ∫_b^v β(x,t,u,s) ds − G(a)∫_0^x α(s,t,a,b) ds
    let f_of_s = sub(&shape.f, &[(uc.clone(), s.clone())]);
    let x_density = Expr::integral(
        "s",
        a.clone(),
        uvar.clone(),
        f_of_s
            .mul(&sub(alpha, &[(uc.clone(), s.clone()), (vc.clone(), b.clone())]))
            .neg(),
    )
    .add(&Expr::integral(
        "s",
        b.clone(),
        vvar.clone(),
        sub(beta, &[(vc.clone(), s.clone())]),
    ))
    .sub(
        &sub(&shape.g, &[(uc.clone(), a.clone())]).mul(&Expr::integral(
            "s",
            Expr::zero(),
            Expr::indep("x"),
            sub(alpha, &[(xc, s.clone()), (uc, a.clone()), (vc, b.clone())]),
        )),
    );

    let cl = ConservationLaw {
        fluxes: vec![t_density, x_density],
        multipliers: Some(m.clone()),
    };
    let check = verify_conservation_law(sys, m, &cl, cfg)?;
    if !check.zero {
        return Err(DcmError::SelfCheck(check.max_rel_residual));
    }
    Ok(cl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DhCase {
    BothZero,
    DNonzeroHZero,
    HNonzero,
}

/// The classifying functions
/// `d = G′²F‴ − 3G′G″F″ + (3G″² − G′G‴)F′` and
/// `h = G′²G⁗ − 4G′G″G‴ + 3G″³`, with the case tag decided by the oracle.
pub fn classify_dh(
    f: &Expr,
    g: &Expr,
    u: &str,
    cfg: &OracleConfig,
) -> Result<(Expr, Expr, DhCase), DcmError> {
    let uc = Coord::Jet(JetVar::base(u));
    let d1 = |e: &Expr| crate::jetexpr::diff(e, &uc);
    let f1 = d1(f);
    let f2 = d1(&f1);
    let f3 = d1(&f2);
    let g1 = d1(g);
    let g2 = d1(&g1);
    let g3 = d1(&g2);
    let g4 = d1(&g3);
    let d = g1
        .pow_i64(2)
        .mul(&f3)
        .sub(&g1.mul(&g2).mul(&f2).scale(Rat::from_integer(3.into())))
        .add(&g2.pow_i64(2).scale(Rat::from_integer(3.into())).sub(&g1.mul(&g3)).mul(&f1));
    let h = g1
        .pow_i64(2)
        .mul(&g4)
        .sub(&g1.mul(&g2).mul(&g3).scale(Rat::from_integer(4.into())))
        .add(&g2.pow_i64(3).scale(Rat::from_integer(3.into())));
    let d_zero = oracle::is_zero(&d, cfg)?.zero;
    let h_zero = oracle::is_zero(&h, cfg)?.zero;
    let case = match (d_zero, h_zero) {
        (true, true) => DhCase::BothZero,
        (false, true) => DhCase::DNonzeroHZero,
        (_, false) => DhCase::HNonzero,
    };
    Ok((d, h, case))
}

#[cfg(test)]
mod tests;
