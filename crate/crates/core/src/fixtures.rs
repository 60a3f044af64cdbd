//! Shared test fixtures: the two nonlinear-telegraph potential systems used
//! throughout the test suite, with their known multiplier sets and density
//! pairs.

use crate::dcm::{ConservationLaw, MultiplierSet};
use crate::jetexpr::{parse_expr, Expr, JetVar, MultiIndex, OracleConfig, VarContext};
use crate::system::SystemDef;

pub fn nlt_ctx() -> VarContext {
    VarContext::new(&["t", "x"], &["u", "v"]).with_funcs(&[("F", 1), ("G", 1)])
}

pub fn pe(s: &str) -> Expr {
    parse_expr(s, &nlt_ctx()).unwrap()
}

pub fn cfg() -> OracleConfig {
    OracleConfig::default()
}

/// v_t + (1 - 2e^{2u})u_x - e^u = 0, v_x - u_t = 0.
pub fn sys_exp() -> SystemDef {
    SystemDef::new(
        nlt_ctx(),
        vec![pe("v_t + (1 - 2*exp(2*u))*u_x - exp(u)"), pe("v_x - u_t")],
    )
}

pub fn sys_exp_solved() -> SystemDef {
    sys_exp().with_solved(vec![
        (
            JetVar::new("v", MultiIndex::new(vec!["t".into()])),
            pe("(2*exp(2*u) - 1)*u_x + exp(u)"),
        ),
        (
            JetVar::new("v", MultiIndex::new(vec!["x".into()])),
            pe("u_t"),
        ),
    ])
}

/// v_t - sech²(u)u_x - tanh(u) = 0, v_x - u_t = 0.
pub fn sys_tanh() -> SystemDef {
    SystemDef::new(
        nlt_ctx(),
        vec![pe("v_t - sech(u)^2*u_x - tanh(u)"), pe("v_x - u_t")],
    )
}

pub fn sys_tanh_solved() -> SystemDef {
    sys_tanh().with_solved(vec![
        (
            JetVar::new("v", MultiIndex::new(vec!["t".into()])),
            pe("sech(u)^2*u_x + tanh(u)"),
        ),
        (
            JetVar::new("v", MultiIndex::new(vec!["x".into()])),
            pe("u_t"),
        ),
    ])
}

pub const PHASE: &str = "1/2*(v + (x + 2*exp(u))/sqrt2)";

pub fn mult_exp() -> MultiplierSet {
    let alpha = format!("exp(-1/2*(u + t/sqrt2))*sin({PHASE})");
    let beta = format!("-exp(-1/2*(u + t/sqrt2))*(sqrt2*exp(u)*sin({PHASE}) + cos({PHASE}))");
    MultiplierSet {
        exprs: vec![pe(&alpha), pe(&beta)],
    }
}

pub fn law_exp() -> ConservationLaw {
    let t = format!("-2*exp(-1/2*(u + t/sqrt2))*cos({PHASE})");
    let x = format!("2*exp(-1/2*(u + t/sqrt2))*(sqrt2*exp(u)*cos({PHASE}) - sin({PHASE}))");
    ConservationLaw {
        fluxes: vec![pe(&t), pe(&x)],
        multipliers: None,
    }
}

pub fn mult_tanh() -> MultiplierSet {
    MultiplierSet {
        exprs: vec![
            pe("exp(x)*(2*x + t^2 - v^2 - 2*log(cosh(u)))"),
            pe("2*exp(x)*(v*tanh(u) - t)"),
        ],
    }
}

pub fn law_tanh() -> ConservationLaw {
    ConservationLaw {
        fluxes: vec![
            pe("exp(x)*(2*t*u - 1/3*v^3 + v*(t^2 + 2*x - 2*log(cosh(u))))"),
            pe("exp(x)*((v^2 - t^2 - 2*x + 2*(1 + log(cosh(u))))*tanh(u) - 2*(t*v + u))"),
        ],
        multipliers: None,
    }
}
