//! Expression kernel over jet-space coordinates.
//!
//! Expressions are immutable trees over independent variables, parameters,
//! jet variables (a dependent variable together with a derivative multiset),
//! exact rational constants, named exact constants, elementary functions,
//! arbitrary-function symbols, and definite-integral nodes. Every operation
//! returns a normalized tree; symbolic identity is decided by the seeded
//! randomized evaluation oracle rather than by rewriting.

mod diff;
mod eval;
mod node;
mod normal;
pub mod oracle;
mod parse;
mod print;
mod subst;

pub use diff::{diff, total_derivative, total_derivative_multi};
pub use eval::{eval_at, EvalError, JetPoint};
pub use node::{Coord, Elementary, Expr, JetVar, MultiIndex, NamedConst, Node, Rat};
pub use normal::{expand, normalize};
pub use oracle::{is_proportional, is_zero, OracleConfig, OracleError, PropVerdict, ZeroVerdict};
pub use parse::{parse_expr, ParseError, VarContext};
pub use print::print_expr;
pub use subst::{replace_coords, substitute, SubstError};
