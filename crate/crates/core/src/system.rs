//! A PDE system: declared coordinates, the equations `G_α = 0`, and an
//! optional solved form used to restrict expressions to the solution
//! manifold.

use crate::jetexpr::{substitute, Expr, JetVar, SubstError, VarContext};

#[derive(Debug, Clone)]
pub struct SystemDef {
    pub ctx: VarContext,
    pub equations: Vec<Expr>,
    /// Leading-derivative substitutions `u^γ_K := rhs`, applied (closed
    /// under total differentiation) when restricting to solutions.
    pub solved: Vec<(JetVar, Expr)>,
}

impl SystemDef {
    pub fn new(ctx: VarContext, equations: Vec<Expr>) -> Self {
        SystemDef {
            ctx,
            equations,
            solved: Vec::new(),
        }
    }

    pub fn with_solved(mut self, solved: Vec<(JetVar, Expr)>) -> Self {
        self.solved = solved;
        self
    }

    /// Restrict an expression to the solution manifold via the solved form.
    pub fn restrict(&self, e: &Expr) -> Result<Expr, SubstError> {
        substitute(e, &self.solved)
    }

    pub fn num_equations(&self) -> usize {
        self.equations.len()
    }

    pub fn num_dep(&self) -> usize {
        self.ctx.dep.len()
    }
}
