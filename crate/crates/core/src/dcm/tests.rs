use super::*;
use crate::fixtures::{
    cfg, law_exp, law_tanh, mult_exp, mult_tanh, nlt_ctx as ctx, pe as p, sys_exp, sys_tanh, PHASE,
};
use crate::jetexpr::{is_proportional, is_zero, parse_expr, VarContext};

#[test]
fn multiplier_fixtures_verify() {
    assert!(verify_multipliers(&sys_exp(), &mult_exp(), &cfg()).unwrap().pass);
    assert!(verify_multipliers(&sys_tanh(), &mult_tanh(), &cfg()).unwrap().pass);
}

#[test]
fn corrupted_multiplier_fails() {
    let mut m = mult_exp();
    m.exprs[0] = p(&format!("exp(-1/2*(u + t/sqrt2))*cos({PHASE})"));
    let v = verify_multipliers(&sys_exp(), &m, &cfg()).unwrap();
    assert!(!v.pass);
    assert!(v.residuals.iter().any(|(_, r)| !r.zero));
}

#[test]
fn conservation_law_fixtures_verify() {
    assert!(
        verify_conservation_law(&sys_exp(), &mult_exp(), &law_exp(), &cfg())
            .unwrap()
            .zero
    );
    assert!(
        verify_conservation_law(&sys_tanh(), &mult_tanh(), &law_tanh(), &cfg())
            .unwrap()
            .zero
    );
}

#[test]
fn flipped_flux_fails() {
    let mut cl = law_exp();
    cl.fluxes[1] = cl.fluxes[1].neg();
    assert!(
        !verify_conservation_law(&sys_exp(), &mult_exp(), &cl, &cfg())
            .unwrap()
            .zero
    );
}

fn xtuv_coords() -> Vec<Coord> {
    vec![
        Coord::Indep("x".into()),
        Coord::Indep("t".into()),
        Coord::Jet(JetVar::base("u")),
        Coord::Jet(JetVar::base("v")),
    ]
}

#[test]
fn determining_equations_match_known_system() {
    // General system with symbolic wave speed and forcing.
    let sys = SystemDef::new(
        ctx(),
        vec![p("v_t - F(u)*u_x - G(u)"), p("v_x - u_t")],
    );
    let ansatz = Ansatz {
        multipliers: vec![("al".into(), xtuv_coords()), ("be".into(), xtuv_coords())],
    };
    let derived = derive_determining(&sys, &ansatz).unwrap();
    let actx = VarContext::new(&["t", "x"], &["u", "v"])
        .with_funcs(&[("F", 1), ("G", 1), ("al", 4), ("be", 4)]);
    let ap = |s: &str| parse_expr(s, &actx).unwrap();
    let expected = vec![
        ap("al^(0,0,1,0)(x,t,u,v) + be^(0,0,0,1)(x,t,u,v)"),
        ap("be^(0,0,1,0)(x,t,u,v) + F(u)*al^(0,0,0,1)(x,t,u,v)"),
        ap("al^(0,1,0,0)(x,t,u,v) + be^(1,0,0,0)(x,t,u,v) + G(u)*al^(0,0,0,1)(x,t,u,v)"),
        ap("F(u)*al^(1,0,0,0)(x,t,u,v) + be^(0,1,0,0)(x,t,u,v) \
            - G'(u)*al(x,t,u,v) - G(u)*al^(0,0,1,0)(x,t,u,v)"),
    ];
    assert_eq!(derived.len(), expected.len());
    // Bipartite match up to scalar multiples.
    let mut used = vec![false; expected.len()];
    for d in &derived {
        let hit = expected.iter().enumerate().find(|(i, e)| {
            !used[*i]
                && is_proportional(
                    &[d.clone()],
                    &[(*e).clone()],
                    &cfg(),
                )
                .map(|v| v.proportional)
                .unwrap_or(false)
        });
        let (i, _) = hit.unwrap_or_else(|| panic!("no expected row matches {d}"));
        used[i] = true;
    }
    assert!(used.iter().all(|&b| b));
}

#[test]
fn determining_equations_single_equation() {
    let c1 = VarContext::new(&["t", "x"], &["u"]);
    let sys = SystemDef::new(c1, vec![parse_expr("u_t", &VarContext::new(&["t", "x"], &["u"])).unwrap()]);
    let ansatz = Ansatz {
        multipliers: vec![(
            "lam".into(),
            vec![Coord::Indep("x".into()), Coord::Indep("t".into())],
        )],
    };
    let derived = derive_determining(&sys, &ansatz).unwrap();
    assert_eq!(derived.len(), 1);
    let actx = VarContext::new(&["t", "x"], &["u"]).with_funcs(&[("lam", 2)]);
    let lam_t = parse_expr("lam^(0,1)(x,t)", &actx).unwrap();
    assert!(is_proportional(&[derived[0].clone()], &[lam_t], &cfg())
        .unwrap()
        .proportional);
}

#[test]
fn fixtures_satisfy_their_determining_equations() {
    // Bind the symbolic ansatz equations to the concrete multipliers of the
    // exp fixture and check every row vanishes.
    let sys = sys_exp();
    let ansatz = Ansatz {
        multipliers: vec![("al".into(), xtuv_coords()), ("be".into(), xtuv_coords())],
    };
    let rows = derive_determining(&sys, &ansatz).unwrap();
    let m = mult_exp();
    for row in rows {
        let bound = bind_ansatz(&row, &[("al", &m.exprs[0]), ("be", &m.exprs[1])]);
        let v = is_zero(&bound, &cfg()).unwrap();
        assert!(v.zero, "residual {} in {row}", v.max_rel_residual);
    }
}

/// Replace ansatz symbols (with any derivative tuple) by derivatives of a
/// concrete expression in (x, t, u, v).
fn bind_ansatz(e: &Expr, defs: &[(&str, &Expr)]) -> Expr {
    use crate::jetexpr::Node;
    match e.node() {
        Node::ArbFunc { name, deriv, args } => {
            if let Some((_, body)) = defs.iter().find(|(n, _)| n == name) {
                let order: Vec<Coord> = xtuv_coords();
                assert_eq!(args.len(), 4);
                let mut out = (*body).clone();
                for (d, c) in deriv.iter().zip(&order) {
                    for _ in 0..*d {
                        out = crate::jetexpr::diff(&out, c);
                    }
                }
                out
            } else {
                e.clone()
            }
        }
        Node::Sum(ts) => Expr::sum(ts.iter().map(|t| bind_ansatz(t, defs)).collect()),
        Node::Product(fs) => Expr::product(fs.iter().map(|f| bind_ansatz(f, defs)).collect()),
        Node::Pow(b, q) => bind_ansatz(b, defs).pow(q.clone()),
        Node::Elem(f, a) => Expr::elem(*f, bind_ansatz(a, defs)),
        _ => e.clone(),
    }
}

#[test]
fn densities_from_multipliers_tanh() {
    let sys = sys_tanh();
    let cl = densities_2var(&sys, &mult_tanh(), (Expr::zero(), Expr::zero()), &cfg()).unwrap();
    // Self-check already enforced; confirm agreement with the closed form
    // up to a trivial density by verifying both against the same source.
    assert!(verify_conservation_law(&sys, &mult_tanh(), &cl, &cfg())
        .unwrap()
        .zero);
}

#[test]
fn densities_from_multipliers_exp() {
    let sys = sys_exp();
    let cl = densities_2var(&sys, &mult_exp(), (Expr::zero(), Expr::zero()), &cfg()).unwrap();
    assert!(verify_conservation_law(&sys, &mult_exp(), &cl, &cfg())
        .unwrap()
        .zero);
}

#[test]
fn zero_multipliers_give_zero_densities() {
    let m = MultiplierSet {
        exprs: vec![Expr::zero(), Expr::zero()],
    };
    let cl = densities_2var(&sys_tanh(), &m, (Expr::zero(), Expr::zero()), &cfg()).unwrap();
    assert!(cl.fluxes.iter().all(|f| f.is_zero_literal()));
}

#[test]
fn shape_mismatch_is_reported() {
    let sys = SystemDef::new(ctx(), vec![p("v_t - u_xx"), p("v_x - u_t")]);
    let m = MultiplierSet {
        exprs: vec![Expr::zero(), Expr::zero()],
    };
    assert!(matches!(
        densities_2var(&sys, &m, (Expr::zero(), Expr::zero()), &cfg()),
        Err(DcmError::ShapeMismatch(_))
    ));
}

#[test]
fn triviality_flag() {
    let sys = sys_tanh().with_solved(vec![
        (
            JetVar::new("v", crate::jetexpr::MultiIndex::new(vec!["t".into()])),
            p("sech(u)^2*u_x + tanh(u)"),
        ),
        (
            JetVar::new("v", crate::jetexpr::MultiIndex::new(vec!["x".into()])),
            p("u_t"),
        ),
    ]);
    let zero = MultiplierSet {
        exprs: vec![p("v_t - sech(u)^2*u_x - tanh(u)"), Expr::zero()],
    };
    assert!(is_trivial(&sys, &zero, &cfg()).unwrap());
    assert!(!is_trivial(&sys, &mult_tanh(), &cfg()).unwrap());
}

#[test]
fn classifying_functions() {
    let u = "u";
    let (_, _, case) = classify_dh(&p("1"), &p("u"), u, &cfg()).unwrap();
    assert_eq!(case, DhCase::BothZero);
    let (_, _, case) = classify_dh(&p("u^(-2)"), &p("u^(-1)"), u, &cfg()).unwrap();
    assert_eq!(case, DhCase::BothZero);
    let (_, _, case) = classify_dh(&p("2*exp(2*u) - 1"), &p("exp(u)"), u, &cfg()).unwrap();
    assert_eq!(case, DhCase::BothZero);
    let (d, _, case) = classify_dh(&p("u^3"), &p("u"), u, &cfg()).unwrap();
    assert_eq!(case, DhCase::DNonzeroHZero);
    assert!(!is_zero(&d, &cfg()).unwrap().zero);
    let (_, h, case) = classify_dh(&p("1"), &p("u^2"), u, &cfg()).unwrap();
    assert_eq!(case, DhCase::HNonzero);
    assert_eq!(h, p("24"));
}
