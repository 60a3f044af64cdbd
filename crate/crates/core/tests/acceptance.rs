//! End-to-end acceptance gate: one test per headline capability, each
//! finishing with a single PASS line (visible under --nocapture).

use clawkit::dcm::{
    derive_determining, verify_conservation_law, verify_multipliers, Ansatz, ConservationLaw,
    MultiplierSet,
};
use clawkit::fixtures::{
    cfg, law_exp, law_tanh, mult_exp, mult_tanh, nlt_ctx, pe, sys_exp, sys_exp_solved, sys_tanh,
};
use clawkit::jetexpr::{
    is_proportional, is_zero, parse_expr, total_derivative, Coord, Elementary, Expr, JetVar,
    MultiIndex, Rat, VarContext,
};
use clawkit::linearize::{
    adjoint_pairing_check, verify_mapped_linearity, verify_theorem5, LinearizationCandidate,
};
use clawkit::nonlocal::{
    nlt_classification_residual, nonlocal_symmetry_test, potentialize, NltFlag, Source,
};
use clawkit::symaction::{
    jacobian, lie_expand, newness_test, tilde_ctx, transform_densities, transform_multipliers,
    Newness, PointTransformation,
};
use clawkit::system::SystemDef;
use clawkit::varcalc::{
    adjoint, bilinear_identity_check, euler_lagrange, euler_operator, frechet, is_self_adjoint,
    operators_equal, Generator, Lagrangian, LinearOperator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn passed(what: &str) {
    println!("[PASS] {what}");
}

#[test]
fn euler_lagrange_recovers_the_potential_kdv_equation() {
    let ctx = VarContext::new(&["t", "x"], &["v"]);
    let p = |s: &str| parse_expr(s, &ctx).unwrap();
    let l = Lagrangian {
        ctx: ctx.clone(),
        density: p("1/2*v_xx^2 - 1/6*v_x^3 - 1/2*v_x*v_t"),
    };
    let sys = euler_lagrange(&l);
    assert_eq!(sys.equations.len(), 1);
    // Structural equality after normalization, no tolerance.
    assert_eq!(sys.equations[0], p("v_xxxx + v_x*v_xx + v_xt"));
    passed("Euler-Lagrange of the potential KdV Lagrangian is structurally exact");
}

#[test]
fn determining_system_matches_the_known_four_equations() {
    let ctx = nlt_ctx();
    let p = |s: &str| parse_expr(s, &ctx).unwrap();
    let sys = SystemDef::new(ctx.clone(), vec![p("v_t - F(u)*u_x - G(u)"), p("v_x - u_t")]);
    let coords = vec![
        Coord::Indep("x".into()),
        Coord::Indep("t".into()),
        Coord::Jet(JetVar::base("u")),
        Coord::Jet(JetVar::base("v")),
    ];
    let ansatz = Ansatz {
        multipliers: vec![("al".into(), coords.clone()), ("be".into(), coords)],
    };
    let derived = derive_determining(&sys, &ansatz).unwrap();
    let actx = VarContext::new(&["t", "x"], &["u", "v"])
        .with_funcs(&[("F", 1), ("G", 1), ("al", 4), ("be", 4)]);
    let ap = |s: &str| parse_expr(s, &actx).unwrap();
    let expected = [
        ap("al^(0,0,1,0)(x,t,u,v) + be^(0,0,0,1)(x,t,u,v)"),
        ap("be^(0,0,1,0)(x,t,u,v) + F(u)*al^(0,0,0,1)(x,t,u,v)"),
        ap("al^(0,1,0,0)(x,t,u,v) + be^(1,0,0,0)(x,t,u,v) + G(u)*al^(0,0,0,1)(x,t,u,v)"),
        ap("F(u)*al^(1,0,0,0)(x,t,u,v) + be^(0,1,0,0)(x,t,u,v) \
            - G'(u)*al(x,t,u,v) - G(u)*al^(0,0,1,0)(x,t,u,v)"),
    ];
    assert_eq!(derived.len(), expected.len());
    let mut used = [false; 4];
    for d in &derived {
        let hit = expected.iter().enumerate().find(|(i, e)| {
            !used[*i]
                && is_proportional(&[d.clone()], &[(*e).clone()], &cfg())
                    .map(|v| v.proportional)
                    .unwrap_or(false)
        });
        let (i, _) = hit.unwrap_or_else(|| panic!("no expected row matches {d}"));
        used[i] = true;
    }
    assert!(used.iter().all(|&b| b));
    passed("multiplier determining system matches the known four equations 1-1");
}

#[test]
fn multiplier_and_density_fixtures_verify_and_perturbations_fail() {
    for (sys, m, law) in [
        (sys_exp(), mult_exp(), law_exp()),
        (sys_tanh(), mult_tanh(), law_tanh()),
    ] {
        let v = verify_multipliers(&sys, &m, &cfg()).unwrap();
        assert!(v.pass);
        for (_, z) in &v.residuals {
            assert!(z.max_rel_residual < 1e-9);
        }
        let c = verify_conservation_law(&sys, &m, &law, &cfg()).unwrap();
        assert!(c.zero && c.max_rel_residual < 1e-9);

        // A single extra term must be loudly rejected.
        let bent = MultiplierSet {
            exprs: vec![m.exprs[0].add(&pe("u_x")), m.exprs[1].clone()],
        };
        let v = verify_multipliers(&sys, &bent, &cfg()).unwrap();
        assert!(!v.pass);
        assert!(v.residuals.iter().any(|(_, z)| z.max_rel_residual > 1e-3));
        let bent_law = ConservationLaw {
            fluxes: vec![law.fluxes[0].add(&pe("u")), law.fluxes[1].clone()],
            multipliers: None,
        };
        let c = verify_conservation_law(&sys, &m, &bent_law, &cfg()).unwrap();
        assert!(!c.zero && c.max_rel_residual > 1e-3);
    }
    passed("both multiplier/density pairs verify below 1e-9 and perturbations fail above 1e-3");
}

fn pt(s: &str) -> Expr {
    parse_expr(s, &tilde_ctx(&nlt_ctx()).with_params(&["eps"])).unwrap()
}

fn pu(s: &str) -> Expr {
    parse_expr(s, &nlt_ctx().with_params(&["eps"])).unwrap()
}

fn reflection() -> PointTransformation {
    PointTransformation::new(
        nlt_ctx(),
        vec![pt("-th"), pt("xh"), pt("uh"), pt("-vh")],
        vec![pu("-t"), pu("x"), pu("u"), pu("-v")],
        None,
        &cfg(),
    )
    .unwrap()
}

fn reflection_factor() -> Vec<Vec<Expr>> {
    vec![vec![pe("1"), pe("0")], vec![pe("0"), pe("-1")]]
}

fn t_translation() -> PointTransformation {
    PointTransformation::new(
        nlt_ctx(),
        vec![pt("th + eps"), pt("xh"), pt("uh"), pt("vh")],
        vec![pu("t - eps"), pu("x"), pu("u"), pu("v")],
        Some("eps"),
        &cfg(),
    )
    .unwrap()
}

fn boost_flow() -> PointTransformation {
    let t = PointTransformation::new(
        nlt_ctx(),
        vec![
            pt("th*cosh(eps) + vh*sinh(eps)"),
            pt("xh + log(cosh(uh + eps)) - log(cosh(uh))"),
            pt("uh + eps"),
            pt("vh*cosh(eps) + th*sinh(eps)"),
        ],
        vec![
            pu("t*cosh(eps) - v*sinh(eps)"),
            pu("x - log(cosh(u)) + log(cosh(u - eps))"),
            pu("u - eps"),
            pu("v*cosh(eps) - t*sinh(eps)"),
        ],
        Some("eps"),
        &cfg(),
    )
    .unwrap();
    let jinv = jacobian(&t).pow_i64(-1);
    let a = vec![
        vec![
            pt("cosh(eps) - sinh(eps)*tanh(uh + eps)").mul(&jinv),
            Expr::zero(),
        ],
        vec![Expr::zero(), jinv],
    ];
    t.with_factor(a)
}

fn assert_proportional(got: &[Expr], want: &[Expr]) -> f64 {
    let v = is_proportional(got, want, &cfg()).unwrap();
    assert!(v.proportional, "residual {}", v.max_rel_residual);
    let r = v.ratio.unwrap();
    assert!(r.abs() > 1e-12, "ratio {r} for {} vs {}", got[0], want[0]);
    r
}

#[test]
fn symmetry_action_generates_the_known_new_laws() {
    // Reflection transport of the first multiplier/density pair.
    let sys = sys_exp();
    let m2 = transform_multipliers(&sys, &mult_exp(), &reflection(), &reflection_factor(), &cfg())
        .unwrap();
    let refl = |e: &Expr| {
        clawkit::jetexpr::replace_coords(
            e,
            &[
                (Coord::Indep("t".into()), pe("-t")),
                (Coord::Jet(JetVar::base("v")), pe("-v")),
            ],
        )
    };
    let want_m = [refl(&mult_exp().exprs[0]).neg(), refl(&mult_exp().exprs[1])];
    assert_proportional(&m2.exprs, &want_m);
    let law2 = transform_densities(&law_exp(), &reflection(), &cfg()).unwrap();
    let want_f = [refl(&law_exp().fluxes[0]), refl(&law_exp().fluxes[1]).neg()];
    assert_proportional(&law2.fluxes, &want_f);
    assert!(verify_multipliers(&sys, &m2, &cfg()).unwrap().pass);
    assert_eq!(
        newness_test(&m2, &[mult_exp()], &sys_exp_solved(), &cfg()).unwrap(),
        Newness::New
    );

    // Lie expansion of the second pair under t-translation.
    let orders = lie_expand(
        &sys_tanh(),
        &mult_tanh(),
        &law_tanh(),
        &t_translation(),
        2,
        &cfg(),
    )
    .unwrap();
    assert_eq!(orders.len(), 2);
    assert_proportional(
        &orders[0].multipliers.exprs,
        &[pe("t*exp(x)"), pe("-exp(x)")],
    );
    assert_proportional(&orders[1].multipliers.exprs, &[pe("exp(x)"), pe("0")]);

    // Closed-form flow of the boost generator at order 1, applied to the
    // order-1 pair from the expansion above.
    let m2 = MultiplierSet {
        exprs: vec![pe("t*exp(x)"), pe("-exp(x)")],
    };
    let law2 = ConservationLaw {
        fluxes: vec![pe("exp(x)*(t*v + u)"), pe("-exp(x)*(v + t*tanh(u))")],
        multipliers: None,
    };
    let orders = lie_expand(&sys_tanh(), &m2, &law2, &boost_flow(), 1, &cfg()).unwrap();
    assert_eq!(orders.len(), 1);
    assert_proportional(
        &orders[0].multipliers.exprs,
        &[pe("exp(x)*v"), pe("-exp(x)*tanh(u)")],
    );
    for o in [&orders[0]] {
        assert!(verify_multipliers(&sys_tanh(), &o.multipliers, &cfg())
            .unwrap()
            .pass);
    }
    passed("reflection, translation and flow transports reproduce the known multiplier sets");
}

#[test]
fn self_adjointness_trio() {
    let ctx = VarContext::new(&["t", "x"], &["u"]).with_funcs(&[("H", 1)]);
    let p = |s: &str| parse_expr(s, &ctx).unwrap();
    let plain = SystemDef::new(ctx.clone(), vec![p("u_tt + H^(1)(u_x)*u_xx + H(u_x)")]);
    let weighted = SystemDef::new(
        ctx.clone(),
        vec![p("exp(x)*(u_tt + H^(1)(u_x)*u_xx + H(u_x))")],
    );
    let kctx = VarContext::new(&["t", "x"], &["u"]);
    let kdv = SystemDef::new(
        kctx.clone(),
        vec![parse_expr("u_xxx + u*u_x + u_t", &kctx).unwrap()],
    );
    assert!(is_self_adjoint(&weighted, &cfg()).unwrap());
    assert!(!is_self_adjoint(&plain, &cfg()).unwrap());
    assert!(!is_self_adjoint(&kdv, &cfg()).unwrap());
    passed("e^x-weighted wave equation is self-adjoint; unweighted and KdV are not");
}

fn z_ctx() -> VarContext {
    VarContext::new(&["z1", "z2"], &["w1", "w2"]).with_funcs(&[("F", 1)])
}

fn pz(s: &str) -> Expr {
    parse_expr(s, &z_ctx()).unwrap()
}

fn mi(v: &str) -> MultiIndex {
    MultiIndex::new(vec![v.into()])
}

/// A_u - F(u)B_v = 0, A_v - B_u = 0 on (B, A).
fn op_quasi_sym() -> LinearOperator {
    LinearOperator::new(vec![
        vec![vec![(pz("-F(z1)"), mi("z2"))], vec![(pz("1"), mi("z1"))]],
        vec![vec![(pz("-1"), mi("z1"))], vec![(pz("1"), mi("z2"))]],
    ])
}

/// a_U + b_V = 0, F(U)a_V + b_U = 0 on (a, b).
fn op_quasi_mult() -> LinearOperator {
    LinearOperator::new(vec![
        vec![vec![(pz("1"), mi("z1"))], vec![(pz("1"), mi("z2"))]],
        vec![vec![(pz("F(z1)"), mi("z2"))], vec![(pz("1"), mi("z1"))]],
    ])
}

/// B_z1 + A_z2 = 0, B_z2 + A_z1 - A = 0 on (B, A).
fn op_rec_sym() -> LinearOperator {
    LinearOperator::new(vec![
        vec![vec![(pz("1"), mi("z1"))], vec![(pz("1"), mi("z2"))]],
        vec![
            vec![(pz("1"), mi("z2"))],
            vec![(pz("1"), mi("z1")), (pz("-1"), MultiIndex::empty())],
        ],
    ])
}

/// a_V + b_Z = 0, a_Z + b_V + a = 0 on (a, b).
fn op_rec_mult() -> LinearOperator {
    LinearOperator::new(vec![
        vec![vec![(pz("1"), mi("z2"))], vec![(pz("1"), mi("z1"))]],
        vec![
            vec![(pz("1"), mi("z1")), (pz("1"), MultiIndex::empty())],
            vec![(pz("1"), mi("z2"))],
        ],
    ])
}

#[test]
fn symmetry_and_multiplier_operators_are_adjoint_pairs() {
    assert!(adjoint_pairing_check(&op_quasi_sym(), &op_quasi_mult(), &cfg()).unwrap());
    assert!(adjoint_pairing_check(&op_rec_sym(), &op_rec_mult(), &cfg()).unwrap());
    for op in [op_quasi_sym(), op_rec_sym()] {
        assert!(bilinear_identity_check(&op, &adjoint(&op), &cfg()).unwrap());
    }
    passed("both multiplier systems are adjoints of their symmetry systems");
}

fn solved_pair(ctx: &VarContext, vt_rhs: &str) -> Vec<(JetVar, Expr)> {
    let p = |s: &str| parse_expr(s, ctx).unwrap();
    let vt = p(vt_rhs);
    vec![
        (JetVar::new("v", mi("t")), vt.clone()),
        (JetVar::new("v", mi("x")), p("u_t")),
        (
            JetVar::new("u", MultiIndex::new(vec!["t".into(), "t".into()])),
            total_derivative(&vt, "x"),
        ),
    ]
}

#[test]
fn linearization_verifiers_emit_both_known_mappings() {
    // Quasilinear pair and the hodograph interchange.
    let qctx = VarContext::new(&["t", "x"], &["u", "v"]).with_funcs(&[("F", 1)]);
    let pq = |s: &str| parse_expr(s, &qctx).unwrap();
    let quasi = SystemDef::new(
        qctx.clone(),
        vec![pq("v_t - F(u)*u_x"), pq("v_x - u_t")],
    )
    .with_solved(solved_pair(&qctx, "F(u)*u_x"));
    let cand = LinearizationCandidate {
        alpha: vec![vec![pq("1"), pq("0")], vec![pq("0"), pq("1")]],
        beta: vec![vec![pq("0"), pq("0")], vec![pq("0"), pq("0")]],
        target: op_quasi_sym(),
        z_names: vec!["z1".into(), "z2".into()],
        w_names: vec!["w1".into(), "w2".into()],
        invariants: vec![pq("u"), pq("v")],
        psi: vec![pq("t"), pq("x")],
    };
    let mapping = verify_theorem5(&cand, &qctx.indep, &qctx.dep, &cfg()).unwrap();
    assert_eq!(mapping.z[0].1, pq("u"));
    assert_eq!(mapping.z[1].1, pq("v"));
    assert_eq!(mapping.w[0].1, pq("t"));
    assert_eq!(mapping.w[1].1, pq("x"));
    let v = verify_mapped_linearity(&quasi, &mapping, &cand.target, 16, &cfg()).unwrap();
    assert!(v.pass && v.max_rel_residual < 1e-7);

    // Reciprocal pair and the (x + log u, v, t, u) mapping.
    let rctx = VarContext::new(&["t", "x"], &["u", "v"]);
    let pr = |s: &str| parse_expr(s, &rctx).unwrap();
    let rec = SystemDef::new(
        rctx.clone(),
        vec![pr("v_t - u^(-2)*u_x - u^(-1)"), pr("v_x - u_t")],
    )
    .with_solved(solved_pair(&rctx, "u^(-2)*u_x + u^(-1)"));
    let cand = LinearizationCandidate {
        alpha: vec![vec![pr("1"), pr("0")], vec![pr("0"), pr("-u^(-1)")]],
        beta: vec![vec![pr("0"), pr("1")], vec![pr("0"), pr("0")]],
        target: op_rec_sym(),
        z_names: vec!["z1".into(), "z2".into()],
        w_names: vec!["w1".into(), "w2".into()],
        invariants: vec![pr("x + log(u)"), pr("v")],
        psi: vec![pr("t"), pr("u")],
    };
    let mapping = verify_theorem5(&cand, &rctx.indep, &rctx.dep, &cfg()).unwrap();
    assert_eq!(mapping.z[0].1, pr("x + log(u)"));
    assert_eq!(mapping.w[1].1, pr("u"));
    let v = verify_mapped_linearity(&rec, &mapping, &cand.target, 16, &cfg()).unwrap();
    assert!(v.pass && v.max_rel_residual < 1e-7);
    passed("hodograph and reciprocal mappings verified with pullback residuals below 1e-7");
}

#[test]
fn nonlocal_suite_reproduces_the_potential_chain() {
    // Scalar conserved-form equation splits into the telegraph pair.
    let sctx = VarContext::new(&["t", "x"], &["u"]).with_funcs(&[("F", 1), ("G", 1)]);
    let scalar = SystemDef::new(
        sctx.clone(),
        vec![parse_expr(
            "u_tt - F^(1)(u)*u_x^2 - F(u)*u_xx - G^(1)(u)*u_x",
            &sctx,
        )
        .unwrap()],
    );
    let pot = potentialize(&scalar, &Source::Equation(0), &cfg()).unwrap();
    assert_eq!(pot.potential, "v");
    assert_eq!(pot.sys.equations[0], pe("v_t - F(u)*u_x - G(u)"));
    assert_eq!(pot.sys.equations[1], pe("v_x - u_t"));

    // A second potential through the conservation law u_t - v_x = 0.
    let law = ConservationLaw {
        fluxes: vec![pe("u"), pe("-v")],
        multipliers: Some(MultiplierSet {
            exprs: vec![pe("0"), pe("1")],
        }),
    };
    let pot2 = potentialize(&pot.sys, &Source::Law(law), &cfg()).unwrap();
    assert_eq!(pot2.potential, "w");
    let wctx = pot2.sys.ctx.clone();
    let pw = |s: &str| parse_expr(s, &wctx).unwrap();
    assert_eq!(pot2.sys.equations[0], pw("w_t - v"));
    assert_eq!(pot2.sys.equations[1], pw("w_x - u"));
    assert_eq!(pot2.sys.equations[2], pw("v_t - F(u)*u_x - G(u)"));

    // The closed-form potential symmetry is nonlocal: tau depends on v.
    let rctx = VarContext::new(&["t", "x"], &["u", "v"]).with_params(&["c2"]);
    let p = |s: &str| parse_expr(s, &rctx).unwrap();
    let gen = Generator::Point {
        xis: vec![("t".into(), p("c2*t + v")), ("x".into(), p("-u^(-1)"))],
        etas: vec![("u".into(), p("c2*u + 1")), ("v".into(), p("0"))],
    };
    assert!(nonlocal_symmetry_test(&gen, &["v".into()], &cfg()).unwrap());

    // Classification residuals vanish for the reciprocal pair and the
    // linearizability conditions hold.
    let c = [p("0"), p("c2"), p("c2"), p("1"), p("0")];
    let class = nlt_classification_residual(&p("u^(-2)"), &p("u^(-1)"), "u", &c, &cfg()).unwrap();
    assert!(class.verdicts.iter().all(|v| v.zero));
    assert_eq!(class.flag, NltFlag::Linearizable);
    passed("potential chain is structurally exact, the symmetry is nonlocal, flag linearizable");
}

// ---- seeded property suites ----

const JETS: &[&str] = &["u", "v", "u_t", "u_x", "v_t", "v_x", "u_xx", "u_tx"];

fn random_monomial(rng: &mut ChaCha8Rng, ctx: &VarContext) -> Expr {
    let mut e = Expr::num_i64(rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 });
    for _ in 0..rng.gen_range(1..=2) {
        let b = parse_expr(JETS[rng.gen_range(0..JETS.len())], ctx).unwrap();
        e = e.mul(&b.pow_i64(rng.gen_range(1..=2)));
    }
    if rng.gen_bool(0.2) {
        let b = parse_expr(JETS[rng.gen_range(0..4)], ctx).unwrap();
        let wrapped = match rng.gen_range(0..3) {
            0 => b.mul(&b),
            1 => Expr::elem(Elementary::Sin, b),
            _ => Expr::elem(Elementary::Exp, b),
        };
        e = e.mul(&wrapped);
    }
    e
}

fn random_poly(rng: &mut ChaCha8Rng, ctx: &VarContext) -> Expr {
    let terms: Vec<Expr> = (0..rng.gen_range(1..=3))
        .map(|_| random_monomial(rng, ctx))
        .collect();
    Expr::sum(terms)
}

#[test]
fn property_suites() {
    let ctx = VarContext::new(&["t", "x"], &["u", "v"]);
    let mut rng = ChaCha8Rng::seed_from_u64(24601);

    // Every total divergence is annihilated by every Euler operator.
    for _ in 0..200 {
        let t = random_poly(&mut rng, &ctx);
        let x = random_poly(&mut rng, &ctx);
        let div = total_derivative(&t, "t").add(&total_derivative(&x, "x"));
        for dep in ["u", "v"] {
            let r = euler_operator(&div, dep);
            let v = is_zero(&r, &cfg()).unwrap();
            assert!(v.zero, "Euler residual {} on {div}", v.max_rel_residual);
        }
    }
    passed("200 random divergences are annihilated by every Euler operator");

    // Total derivatives commute.
    for _ in 0..100 {
        let e = random_poly(&mut rng, &ctx);
        let tx = total_derivative(&total_derivative(&e, "t"), "x");
        let xt = total_derivative(&total_derivative(&e, "x"), "t");
        assert!(is_zero(&tx.sub(&xt), &cfg()).unwrap().zero);
    }
    passed("total derivatives commute on 100 random expressions");

    // The adjoint is an involution.
    let zctx = VarContext::new(&["z1", "z2"], &["w1", "w2"]);
    let indices = ["-", "z1", "z2", "z1.z1", "z1.z2", "z2.z2"];
    for _ in 0..50 {
        let entries: Vec<Vec<Vec<(Expr, MultiIndex)>>> = (0..2)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        (0..rng.gen_range(1..=2))
                            .map(|_| {
                                let coeff = match rng.gen_range(0..3) {
                                    0 => parse_expr("z1", &zctx).unwrap(),
                                    1 => parse_expr("z1*z2", &zctx).unwrap(),
                                    _ => Expr::num_i64(rng.gen_range(-3..=3).max(1)),
                                };
                                let idx = indices[rng.gen_range(0..indices.len())];
                                let index = if idx == "-" {
                                    MultiIndex::empty()
                                } else {
                                    MultiIndex::new(
                                        idx.split('.').map(str::to_string).collect(),
                                    )
                                };
                                (coeff, index)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let op = LinearOperator::new(entries);
        assert!(operators_equal(&adjoint(&adjoint(&op)), &op, &cfg()).unwrap());
    }
    passed("adjoint is an involution on 50 random operators");

    // The linearization of an Euler-Lagrange system is self-adjoint.
    let lctx = VarContext::new(&["t", "x"], &["u"]);
    let ljets = ["u", "u_t", "u_x", "u_xx"];
    for _ in 0..30 {
        let terms: Vec<Expr> = (0..rng.gen_range(1..=3))
            .map(|_| {
                let b = parse_expr(ljets[rng.gen_range(0..ljets.len())], &lctx).unwrap();
                b.pow_i64(rng.gen_range(2..=3))
                    .scale(Rat::from_integer(rng.gen_range(1..=3).into()))
            })
            .collect();
        let l = Lagrangian {
            ctx: lctx.clone(),
            density: Expr::sum(terms),
        };
        let sys = euler_lagrange(&l);
        assert!(
            is_self_adjoint(&sys, &cfg()).unwrap(),
            "not self-adjoint for L = {}",
            l.density
        );
        // Equivalent statement through the linearizing operator directly.
        let f = frechet(&sys);
        assert!(operators_equal(&f, &adjoint(&f), &cfg()).unwrap());
    }
    passed("30 random polynomial Lagrangians linearize self-adjointly");

    // Transport by a symmetry and back is the identity with constant 1.
    let sys = sys_exp();
    let ident = vec![vec![pe("1"), pe("0")], vec![pe("0"), pe("1")]];
    for _ in 0..20 {
        let a = Rat::new(rng.gen_range(-8..=8).into(), 4.into());
        let b = Rat::new(rng.gen_range(-8..=8).into(), 4.into());
        let c = Rat::new(rng.gen_range(-8..=8).into(), 4.into());
        let shift = |n: &str, r: &Rat| format!("{n} + ({})", Expr::num(r.clone()));
        let t = PointTransformation::new(
            nlt_ctx(),
            vec![
                pt(&shift("th", &a)),
                pt(&shift("xh", &b)),
                pt("uh"),
                pt(&shift("vh", &c)),
            ],
            vec![
                pu(&format!("t - ({})", Expr::num(a.clone()))),
                pu(&format!("x - ({})", Expr::num(b.clone()))),
                pu("u"),
                pu(&format!("v - ({})", Expr::num(c.clone()))),
            ],
            None,
            &cfg(),
        )
        .unwrap();
        // A valid multiplier set: the fixture pair moved along a symmetry.
        let m = transform_multipliers(&sys, &mult_exp(), &t, &ident, &cfg()).unwrap();
        let back = transform_multipliers(&sys, &m, &t.inverted(), &ident, &cfg()).unwrap();
        let v = is_proportional(&back.exprs, &mult_exp().exprs, &cfg()).unwrap();
        assert!(v.proportional);
        assert!((v.ratio.unwrap() - 1.0).abs() < 1e-9);
    }
    passed("20 random transport round-trips return the original multipliers with constant 1");
}
