use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use clawkit::dcm;
use clawkit::jetexpr::{oracle, print_expr, Expr, OracleConfig};
use clawkit::linearize::{self, LinearizationCandidate, LinError};
use clawkit::nonlocal;
use clawkit::problem::{parse_problem, CandidateSpec, ProblemFile};
use clawkit::report::{digest, Report};
use clawkit::symaction;
use clawkit::varcalc::{self, LinearOperator};

#[derive(Parser)]
#[command(name = "clawkit", version, about = "Conservation-law and symmetry analysis for PDE systems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Problem file with the blocks the command operates on.
    #[arg(long)]
    file: PathBuf,
    #[arg(long, default_value_t = 24601)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    mult: Option<String>,
    #[arg(long)]
    densities: Option<String>,
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    lagrangian: Option<String>,
    #[arg(long)]
    candidate: Option<String>,
    #[arg(long)]
    nlt: Option<String>,
    #[arg(long)]
    operator: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Determining equations for a multiplier ansatz.
    DeriveDet(Common),
    /// Verify a multiplier set against the determining equations.
    VerifyMult(Common),
    /// Verify a density pair against a multiplier set.
    VerifyCl(Common),
    /// Closed-form densities from a verified multiplier pair.
    Densities {
        #[command(flatten)]
        common: Common,
        /// Base point "a,b" for the density integrals.
        #[arg(long, default_value = "0,0")]
        base: String,
    },
    /// Push a conservation law through a point transformation.
    TransformCl(Common),
    /// Taylor-expand a parametric transformation of a law in its parameter.
    LieExpand {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        max_order: usize,
    },
    /// Is a multiplier set new relative to known ones?
    Newness {
        #[command(flatten)]
        common: Common,
        /// Names of known multiplier blocks.
        #[arg(long)]
        known: Vec<String>,
    },
    /// Replace a conserved-form equation by potential equations.
    Potentialize {
        #[command(flatten)]
        common: Common,
        /// Index of the equation to split (ignored when --law is given).
        #[arg(long, default_value_t = 0)]
        eq_index: usize,
        /// Seed from a conservation law instead: densities block name.
        #[arg(long)]
        law: Option<String>,
        /// Multiplier block for the law route.
        #[arg(long)]
        law_mult: Option<String>,
    },
    /// Do the generator coefficients depend on the named potentials?
    NonlocalTest {
        #[command(flatten)]
        common: Common,
        /// Comma-separated potential variable names.
        #[arg(long)]
        potentials: String,
    },
    /// Classification residuals for a telegraph wave-speed/forcing pair.
    NltResidual(Common),
    /// Euler-Lagrange equations of a Lagrangian density.
    EulerLagrange(Common),
    /// Is the generator a variational symmetry of the Lagrangian?
    VariationalSym(Common),
    /// Conserved densities from a variational symmetry.
    NoetherFlux {
        #[command(flatten)]
        common: Common,
        /// Densities block holding f with pr X(L) = D_i f^i.
        #[arg(long)]
        flux: Option<String>,
    },
    /// Linearizing (Frechet) operator of a system.
    Frechet(Common),
    /// Formal adjoint of the linearizing operator.
    Adjoint(Common),
    /// Is the system self-adjoint (variational as written)?
    SelfAdjoint(Common),
    /// Check V·LU - U·L*V is a total divergence.
    BilinearCheck(Common),
    /// Determining residuals of a symmetry generator.
    SymDet(Common),
    /// Verify a linearization candidate and emit the mapping.
    LinearizeCheck(Common),
    /// Verify the multiplier form Λ = A·F(X) against an adjoint target.
    MultiplierFormCheck(Common),
    /// Is one operator the formal adjoint of the other?
    AdjointPairing {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sym_op: Option<String>,
        #[arg(long)]
        mult_op: Option<String>,
    },
    /// Classifying functions d, h of a wave-speed/forcing pair.
    ClassifyDh(Common),
}

enum CliErr {
    Usage(String),
    Internal(String),
}

impl From<String> for CliErr {
    fn from(s: String) -> Self {
        CliErr::Usage(s)
    }
}

macro_rules! internal_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliErr {
            fn from(e: $t) -> Self { CliErr::Internal(e.to_string()) }
        }
    )*};
}
internal_from!(
    clawkit::jetexpr::OracleError,
    clawkit::jetexpr::SubstError,
    clawkit::dcm::DcmError,
    clawkit::varcalc::VarcalcError,
    clawkit::symaction::SymError,
    clawkit::nonlocal::NonlocalError,
    LinError
);

fn common(cmd: &Cmd) -> &Common {
    match cmd {
        Cmd::DeriveDet(c)
        | Cmd::VerifyMult(c)
        | Cmd::VerifyCl(c)
        | Cmd::TransformCl(c)
        | Cmd::NltResidual(c)
        | Cmd::EulerLagrange(c)
        | Cmd::VariationalSym(c)
        | Cmd::Frechet(c)
        | Cmd::Adjoint(c)
        | Cmd::SelfAdjoint(c)
        | Cmd::BilinearCheck(c)
        | Cmd::SymDet(c)
        | Cmd::LinearizeCheck(c)
        | Cmd::MultiplierFormCheck(c)
        | Cmd::ClassifyDh(c) => c,
        Cmd::Densities { common, .. }
        | Cmd::LieExpand { common, .. }
        | Cmd::Newness { common, .. }
        | Cmd::Potentialize { common, .. }
        | Cmd::NonlocalTest { common, .. }
        | Cmd::NoetherFlux { common, .. }
        | Cmd::AdjointPairing { common, .. } => common,
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::DeriveDet(_) => "derive-det",
        Cmd::VerifyMult(_) => "verify-mult",
        Cmd::VerifyCl(_) => "verify-cl",
        Cmd::Densities { .. } => "densities",
        Cmd::TransformCl(_) => "transform-cl",
        Cmd::LieExpand { .. } => "lie-expand",
        Cmd::Newness { .. } => "newness",
        Cmd::Potentialize { .. } => "potentialize",
        Cmd::NonlocalTest { .. } => "nonlocal-test",
        Cmd::NltResidual(_) => "nlt-residual",
        Cmd::EulerLagrange(_) => "euler-lagrange",
        Cmd::VariationalSym(_) => "variational-sym",
        Cmd::NoetherFlux { .. } => "noether-flux",
        Cmd::Frechet(_) => "frechet",
        Cmd::Adjoint(_) => "adjoint",
        Cmd::SelfAdjoint(_) => "self-adjoint",
        Cmd::BilinearCheck(_) => "bilinear-check",
        Cmd::SymDet(_) => "sym-det",
        Cmd::LinearizeCheck(_) => "linearize-check",
        Cmd::MultiplierFormCheck(_) => "multiplier-form-check",
        Cmd::AdjointPairing { .. } => "adjoint-pairing",
        Cmd::ClassifyDh(_) => "classify-dh",
    }
}

fn identity_factor(k: usize) -> Vec<Vec<Expr>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { Expr::num_i64(1) } else { Expr::zero() })
                .collect()
        })
        .collect()
}

fn derive_operator(r: &mut Report, prefix: &str, op: &LinearOperator) {
    for (row, entries) in op.entries.iter().enumerate() {
        for (col, entry) in entries.iter().enumerate() {
            for (c, j) in entry {
                let idx = if j.is_empty() {
                    "-".to_string()
                } else {
                    j.vars().join(".")
                };
                r.derive(
                    &format!("{prefix}[{row}][{col}] @ {idx}"),
                    print_expr(c),
                );
            }
        }
    }
}

fn build_candidate(
    pf: &ProblemFile,
    spec: &CandidateSpec,
) -> Result<LinearizationCandidate, CliErr> {
    let target = pf.operator(Some(&spec.target))?.clone();
    Ok(LinearizationCandidate {
        alpha: spec.alpha.clone(),
        beta: spec.beta.clone(),
        target,
        z_names: spec.z_names.clone(),
        w_names: spec.w_names.clone(),
        invariants: spec.invariants.clone(),
        psi: spec.psi.clone(),
    })
}

fn run(cmd: &Cmd) -> Result<Report, CliErr> {
    let c = common(cmd);
    let bytes = std::fs::read(&c.file)
        .map_err(|e| CliErr::Usage(format!("cannot read {}: {e}", c.file.display())))?;
    let text = String::from_utf8_lossy(&bytes);
    let pf = parse_problem(&text).map_err(|e| CliErr::Usage(e.to_string()))?;
    let cfg = OracleConfig {
        seed: c.seed,
        samples: c.samples,
        rel_tol: c.tol,
        ..OracleConfig::default()
    };
    let echo = format!(
        "{} seed={} samples={} tol={:e}",
        command_name(cmd),
        c.seed,
        c.samples,
        c.tol
    );
    let mut r = Report::new(command_name(cmd), digest(&bytes, &echo), &cfg);
    let started = Instant::now();

    match cmd {
        Cmd::DeriveDet(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let ansatz = pf.ansatz(c.ansatz.as_deref())?;
            let eqs = dcm::derive_determining(sys, ansatz)?;
            r.verdict("determining system derived", !eqs.is_empty(), None, None);
            for (i, e) in eqs.iter().enumerate() {
                r.derive(&format!("eq{}", i + 1), print_expr(e));
            }
        }
        Cmd::VerifyMult(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let m = pf.multiplier_set(c.mult.as_deref())?;
            let v = dcm::verify_multipliers(sys, m, &cfg)?;
            for (dep, z) in &v.residuals {
                r.verdict(
                    &format!("Euler residual in {dep}"),
                    z.zero,
                    Some(z.max_rel_residual),
                    None,
                );
            }
        }
        Cmd::VerifyCl(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let m = pf.multiplier_set(c.mult.as_deref())?;
            let law = pf.density_set(c.densities.as_deref())?;
            let v = dcm::verify_conservation_law(sys, m, law, &cfg)?;
            r.verdict(
                "divergence matches multiplier combination",
                v.zero,
                Some(v.max_rel_residual),
                None,
            );
        }
        Cmd::Densities { common: c, base } => {
            let sys = pf.system(c.system.as_deref())?;
            let m = pf.multiplier_set(c.mult.as_deref())?;
            let parts: Vec<&str> = base.splitn(2, ',').collect();
            if parts.len() != 2 {
                return Err(CliErr::Usage("--base expects 'a,b'".into()));
            }
            let pa = clawkit::jetexpr::parse_expr(parts[0].trim(), &sys.ctx)
                .map_err(|e| CliErr::Usage(e.to_string()))?;
            let pb = clawkit::jetexpr::parse_expr(parts[1].trim(), &sys.ctx)
                .map_err(|e| CliErr::Usage(e.to_string()))?;
            let law = dcm::densities_2var(sys, m, (pa, pb), &cfg)?;
            r.verdict("density pair balances the multipliers", true, None, None);
            for (name, e) in sys.ctx.indep.iter().zip(&law.fluxes) {
                r.derive(&format!("flux {name}"), print_expr(e));
            }
        }
        Cmd::TransformCl(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let spec = pf.transform(c.transform.as_deref())?;
            let t = spec.build(&sys.ctx, &cfg)?;
            let ident = identity_factor(sys.equations.len());
            let a = t.factor.clone().unwrap_or(ident);
            if let Ok(m) = pf.multiplier_set(c.mult.as_deref()) {
                let tm = symaction::transform_multipliers(sys, m, &t, &a, &cfg)?;
                r.verdict("transported multipliers verify", true, None, None);
                for (i, e) in tm.exprs.iter().enumerate() {
                    r.derive(&format!("multiplier {}", i + 1), print_expr(e));
                }
            }
            if let Ok(law) = pf.density_set(c.densities.as_deref()) {
                let tl = symaction::transform_densities(law, &t, &cfg)?;
                r.verdict("transported densities verify", true, None, None);
                for (name, e) in sys.ctx.indep.iter().zip(&tl.fluxes) {
                    r.derive(&format!("flux {name}"), print_expr(e));
                }
            }
            if r.verdicts.is_empty() {
                return Err(CliErr::Usage(
                    "transform-cl needs a multipliers or densities block".into(),
                ));
            }
        }
        Cmd::LieExpand { common: c, max_order } => {
            let sys = pf.system(c.system.as_deref())?;
            let m = pf.multiplier_set(c.mult.as_deref())?;
            let law = pf.density_set(c.densities.as_deref())?;
            let spec = pf.transform(c.transform.as_deref())?;
            let t = spec.build(&sys.ctx, &cfg)?;
            let orders = symaction::lie_expand(sys, m, law, &t, *max_order, &cfg)?;
            r.verdict("expansion orders verified", true, None, None);
            for o in &orders {
                for (i, e) in o.multipliers.exprs.iter().enumerate() {
                    r.derive(
                        &format!("order {} multiplier {}", o.order, i + 1),
                        print_expr(e),
                    );
                }
                for (name, e) in sys.ctx.indep.iter().zip(&o.law.fluxes) {
                    r.derive(&format!("order {} flux {name}", o.order), print_expr(e));
                }
            }
        }
        Cmd::Newness { common: c, known } => {
            let sys = pf.system(c.system.as_deref())?;
            let cand = pf.multiplier_set(c.mult.as_deref())?;
            let known: Vec<_> = known
                .iter()
                .map(|k| pf.multiplier_set(Some(k)).cloned())
                .collect::<Result<_, _>>()?;
            match symaction::newness_test(cand, &known, sys, &cfg) {
                Ok(symaction::Newness::New) => r.verdict("multiplier set is new", true, None, None),
                Ok(symaction::Newness::Equivalent { index, ratio }) => r.verdict(
                    "multiplier set is new",
                    false,
                    None,
                    Some(format!("equivalent to known set {index} with ratio {ratio}")),
                ),
                Err(symaction::SymError::TrivialCandidate) => {
                    r.degenerate("multiplier set is new", "candidate vanishes on solutions")
                }
                Err(e) => return Err(e.into()),
            }
        }
        Cmd::Potentialize { common: c, eq_index, law, law_mult } => {
            let sys = pf.system(c.system.as_deref())?;
            let source = match law {
                Some(name) => {
                    let mut l = pf.density_set(Some(name))?.clone();
                    l.multipliers = Some(
                        pf.multiplier_set(law_mult.as_deref().or(c.mult.as_deref()))?
                            .clone(),
                    );
                    nonlocal::Source::Law(l)
                }
                None => nonlocal::Source::Equation(*eq_index),
            };
            let pot = nonlocal::potentialize(sys, &source, &cfg)?;
            let check = nonlocal::cross_check(&pot, &cfg)?;
            r.verdict(
                "potential pair reproduces the source",
                check.zero,
                Some(check.max_rel_residual),
                None,
            );
            r.derive("potential", pot.potential.clone());
            for (i, e) in pot.sys.equations.iter().enumerate() {
                r.derive(&format!("eq{}", i + 1), print_expr(e));
            }
        }
        Cmd::NonlocalTest { common: c, potentials } => {
            let g = pf.generator(c.generator.as_deref())?;
            let pots: Vec<String> = potentials
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            let nonloc = nonlocal::nonlocal_symmetry_test(g, &pots, &cfg)?;
            r.verdict(
                "generator depends essentially on a potential",
                nonloc,
                None,
                Some("all coefficients are potential-free".into()),
            );
        }
        Cmd::NltResidual(c) => {
            let nlt = pf.nlt(c.nlt.as_deref())?;
            let sys_dep = pf
                .system(c.system.as_deref())
                .map(|s| s.ctx.dep[0].clone())
                .unwrap_or_else(|_| "u".to_string());
            let class =
                nonlocal::nlt_classification_residual(&nlt.f, &nlt.g, &sys_dep, &nlt.c, &cfg)?;
            for (i, v) in class.verdicts.iter().enumerate() {
                r.verdict(
                    &format!("classification residual {}", i + 1),
                    v.zero,
                    Some(v.max_rel_residual),
                    None,
                );
            }
            match class.flag {
                nonlocal::NltFlag::Linearizable => {
                    r.verdict("linearizable", true, None, None);
                    if let Ok((gen, _)) =
                        nonlocal::nlt_potential_symmetry(&nlt.f, &nlt.g, &nlt.c, &cfg)
                    {
                        if let varcalc::Generator::Point { xis, etas } = gen {
                            for (n, e) in xis.iter().chain(etas.iter()) {
                                r.derive(&format!("coefficient {n}"), print_expr(e));
                            }
                        }
                    }
                }
                nonlocal::NltFlag::NotLinearizable => r.verdict(
                    "linearizable",
                    false,
                    None,
                    Some("constants violate the linearizability conditions".into()),
                ),
                nonlocal::NltFlag::Degenerate => {
                    r.degenerate("linearizable", "all classification constants vanish")
                }
            }
        }
        Cmd::EulerLagrange(c) => {
            let l = pf.lagrangian(c.lagrangian.as_deref())?;
            let sys = varcalc::euler_lagrange(l);
            r.verdict("Euler-Lagrange system derived", true, None, None);
            for (dep, e) in l.ctx.dep.iter().zip(&sys.equations) {
                r.derive(&format!("E_{dep}"), print_expr(e));
            }
        }
        Cmd::VariationalSym(c) => {
            let l = pf.lagrangian(c.lagrangian.as_deref())?;
            let g = pf.generator(c.generator.as_deref())?;
            let ok = varcalc::variational_symmetry_test(l, g, &cfg)?;
            r.verdict(
                "action changes by a total divergence",
                ok,
                None,
                Some("prolonged action is not a divergence".into()),
            );
        }
        Cmd::NoetherFlux { common: c, flux } => {
            let l = pf.lagrangian(c.lagrangian.as_deref())?;
            let g = pf.generator(c.generator.as_deref())?;
            let f = pf.density_set(flux.as_deref().or(c.densities.as_deref()))?;
            let law = varcalc::noether_flux(l, g, &f.fluxes, &cfg)?;
            r.verdict("flux identity holds", true, None, None);
            for (name, e) in l.ctx.indep.iter().zip(&law.fluxes) {
                r.derive(&format!("density {name}"), print_expr(e));
            }
        }
        Cmd::Frechet(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let op = varcalc::frechet(sys);
            r.verdict("linearizing operator computed", true, None, None);
            derive_operator(&mut r, "L", &op);
        }
        Cmd::Adjoint(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let op = varcalc::adjoint(&varcalc::frechet(sys));
            r.verdict("adjoint operator computed", true, None, None);
            derive_operator(&mut r, "L*", &op);
        }
        Cmd::SelfAdjoint(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let ok = varcalc::is_self_adjoint(sys, &cfg)?;
            r.verdict(
                "L equals L*",
                ok,
                None,
                Some("linearizing operator differs from its adjoint".into()),
            );
            if !ok {
                derive_operator(&mut r, "L", &varcalc::frechet(sys));
                derive_operator(&mut r, "L*", &varcalc::adjoint(&varcalc::frechet(sys)));
            }
        }
        Cmd::BilinearCheck(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let l = varcalc::frechet(sys);
            let lstar = varcalc::adjoint(&l);
            let ok = varcalc::bilinear_identity_check(&l, &lstar, &cfg)?;
            r.verdict("V·LU - U·L*V is a divergence", ok, None, None);
        }
        Cmd::SymDet(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let g = pf.generator(c.generator.as_deref())?;
            let dets = varcalc::symmetry_determining(sys, g)?;
            if dets.is_empty() {
                r.verdict("determining residuals vanish", true, None, None);
            }
            for (i, e) in dets.iter().enumerate() {
                let v = oracle::is_zero(e, &cfg)?;
                r.verdict(
                    &format!("determining residual {}", i + 1),
                    v.zero,
                    Some(v.max_rel_residual),
                    Some(print_expr(e)),
                );
            }
        }
        Cmd::LinearizeCheck(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let spec = pf.candidate(c.candidate.as_deref())?;
            let cand = build_candidate(&pf, spec)?;
            if !spec.samples.is_empty() {
                let v = linearize::verify_symmetry_form(sys, &cand, &spec.samples, &cfg)?;
                r.verdict(
                    "infinite-parameter symmetry form",
                    v.pass,
                    Some(v.max_rel_residual),
                    None,
                );
            }
            match linearize::verify_theorem5(&cand, &sys.ctx.indep, &sys.ctx.dep, &cfg) {
                Ok(mapping) => {
                    r.verdict("invariants and companions verified", true, None, None);
                    for (n, e) in mapping.z.iter().chain(mapping.w.iter()) {
                        r.derive(n, print_expr(e));
                    }
                    let v = linearize::verify_mapped_linearity(
                        sys,
                        &mapping,
                        &cand.target,
                        16,
                        &cfg,
                    )?;
                    r.verdict(
                        "pullback of target solutions satisfies the system",
                        v.pass,
                        Some(v.max_rel_residual),
                        None,
                    );
                }
                Err(
                    e @ (LinError::InvariantEquation { .. }
                    | LinError::KroneckerEquation { .. }
                    | LinError::FunctionalDependence(_)
                    | LinError::MappingNotInvertible(_)),
                ) => {
                    r.verdict("invariants and companions verified", false, None, Some(e.to_string()));
                }
                Err(e) => return Err(e.into()),
            }
        }
        Cmd::MultiplierFormCheck(c) => {
            let sys = pf.system(c.system.as_deref())?;
            let spec = pf.candidate(c.candidate.as_deref())?;
            let cand = build_candidate(&pf, spec)?;
            let lstar = pf.operator(c.operator.as_deref())?;
            if spec.amatrix.is_empty() {
                return Err(CliErr::Usage(
                    "candidate block needs 'amatrix' rows for multiplier-form-check".into(),
                ));
            }
            let v = linearize::verify_multiplier_form(
                sys,
                &spec.amatrix,
                &cand,
                lstar,
                &spec.samples,
                &cfg,
            )?;
            r.verdict(
                "multiplier form A·F(X) verifies",
                v.pass,
                Some(v.max_rel_residual),
                None,
            );
        }
        Cmd::AdjointPairing { common: _, sym_op, mult_op } => {
            let l = pf.operator(sym_op.as_deref())?;
            let lstar = pf.operator(mult_op.as_deref())?;
            let ok = linearize::adjoint_pairing_check(l, lstar, &cfg)?;
            r.verdict(
                "multiplier system is the adjoint of the symmetry system",
                ok,
                None,
                None,
            );
        }
        Cmd::ClassifyDh(c) => {
            let (f, g, u) = match pf.nlt(c.nlt.as_deref()) {
                Ok(n) => {
                    let dep = pf
                        .system(c.system.as_deref())
                        .map(|s| s.ctx.dep[0].clone())
                        .unwrap_or_else(|_| "u".to_string());
                    (n.f.clone(), n.g.clone(), dep)
                }
                Err(_) => {
                    let sys = pf.system(c.system.as_deref())?;
                    let shape = dcm::potential_shape(sys, &cfg)?;
                    (shape.f, shape.g, shape.u)
                }
            };
            let (d, h, case) = dcm::classify_dh(&f, &g, &u, &cfg)?;
            let label = match case {
                dcm::DhCase::BothZero => "d = 0, h = 0",
                dcm::DhCase::DNonzeroHZero => "d ≠ 0, h = 0",
                dcm::DhCase::HNonzero => "h ≠ 0",
            };
            r.verdict("classified", true, None, None);
            r.derive("case", label.to_string());
            r.derive("d", print_expr(&d));
            r.derive("h", print_expr(&h));
        }
    }

    r.finish(started.elapsed().as_millis());
    Ok(r)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(r) => {
            let json = common(&cli.cmd).json;
            if json {
                println!("{}", serde_json::to_string_pretty(&r).unwrap());
            } else {
                print!("{}", r.render_text());
            }
            if r.all_pass() {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliErr::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliErr::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
