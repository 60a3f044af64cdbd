//! Problem-file format: named blocks declaring a system and the objects the
//! command-line verbs operate on. Line oriented; `#` starts a comment.
//!
//! ```text
//! system {
//!   indep t x
//!   dep u v
//!   func F 1
//!   eq v_t - F(u)*u_x
//!   eq v_x - u_t
//!   solve v_t := F(u)*u_x
//! }
//! multipliers m { expr ... }
//! densities d { flux ... }            # one per independent variable
//! transform s { eps e
//!               map t := th + e       # forward, in tilde variables
//!               inv th := t - e       # inverse, in plain variables
//!               factor 1, 0 }         # optional rows of the factor matrix
//! generator g { xi t := v
//!               eta u := 1 }
//! ansatz a { mult al t x u v }        # one unknown function per equation
//! lagrangian L { density ... }
//! nlt n { F u^(-2)
//!         G u^(-1)
//!         c 0, c2, c2, 1, 0 }
//! operator L { indep z1 z2
//!              func F 1
//!              entry 0 0 -F(z1) @ z2 }  # coeff·D_index at (row, col); @ - for order 0
//! linearization-candidate c { z z1 z2
//!                             w w1 w2
//!                             target L
//!                             alpha 1, 0
//!                             beta 0, 0
//!                             invariant u
//!                             psi t
//!                             amatrix 1, 0
//!                             sample z1, -z2 }
//! ```

use thiserror::Error;

use crate::dcm::{Ansatz, ConservationLaw, MultiplierSet};
use crate::jetexpr::{
    parse_expr, Coord, Expr, JetVar, MultiIndex, Node, OracleConfig, VarContext,
};
use crate::symaction::{tilde_ctx, PointTransformation, SymError};
use crate::system::SystemDef;
use crate::varcalc::{Generator, Lagrangian, LinearOperator};

#[derive(Debug, Error)]
#[error("line {line}: {msg}")]
pub struct ProblemError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ProblemError> {
    Err(ProblemError {
        line,
        msg: msg.into(),
    })
}

/// A transform block as written; the oracle-checked `PointTransformation`
/// is constructed on demand.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    pub forward: Vec<Expr>,
    pub inverse: Vec<Expr>,
    pub eps: Option<String>,
    pub factor: Option<Vec<Vec<Expr>>>,
}

impl TransformSpec {
    pub fn build(&self, ctx: &VarContext, cfg: &OracleConfig) -> Result<PointTransformation, SymError> {
        let t = PointTransformation::new(
            ctx.clone(),
            self.forward.clone(),
            self.inverse.clone(),
            self.eps.as_deref(),
            cfg,
        )?;
        Ok(match &self.factor {
            Some(a) => t.with_factor(a.clone()),
            None => t,
        })
    }
}

#[derive(Debug, Clone)]
pub struct NltSpec {
    pub f: Expr,
    pub g: Expr,
    pub c: [Expr; 5],
}

#[derive(Debug, Clone)]
pub struct CandidateSpec {
    pub z_names: Vec<String>,
    pub w_names: Vec<String>,
    pub target: String,
    pub alpha: Vec<Vec<Expr>>,
    pub beta: Vec<Vec<Expr>>,
    pub invariants: Vec<Expr>,
    pub psi: Vec<Expr>,
    pub amatrix: Vec<Vec<Expr>>,
    pub samples: Vec<Vec<Expr>>,
}

#[derive(Debug, Default)]
pub struct ProblemFile {
    pub systems: Vec<(String, SystemDef)>,
    pub multipliers: Vec<(String, MultiplierSet)>,
    pub densities: Vec<(String, ConservationLaw)>,
    pub transforms: Vec<(String, TransformSpec)>,
    pub generators: Vec<(String, Generator)>,
    pub ansatzes: Vec<(String, Ansatz)>,
    pub lagrangians: Vec<(String, Lagrangian)>,
    pub nlts: Vec<(String, NltSpec)>,
    pub operators: Vec<(String, LinearOperator)>,
    pub candidates: Vec<(String, CandidateSpec)>,
}

fn lookup<'a, T>(
    items: &'a [(String, T)],
    kind: &str,
    name: Option<&str>,
) -> Result<&'a T, String> {
    match name {
        Some(n) => items
            .iter()
            .find(|(k, _)| k == n)
            .map(|(_, v)| v)
            .ok_or_else(|| format!("no {kind} block named '{n}'")),
        None if items.len() == 1 => Ok(&items[0].1),
        None if items.is_empty() => Err(format!("no {kind} block in file")),
        None => Err(format!(
            "multiple {kind} blocks; name one of: {}",
            items
                .iter()
                .map(|(k, _)| k.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        )),
    }
}

impl ProblemFile {
    pub fn system(&self, name: Option<&str>) -> Result<&SystemDef, String> {
        lookup(&self.systems, "system", name)
    }
    pub fn multiplier_set(&self, name: Option<&str>) -> Result<&MultiplierSet, String> {
        lookup(&self.multipliers, "multipliers", name)
    }
    pub fn density_set(&self, name: Option<&str>) -> Result<&ConservationLaw, String> {
        lookup(&self.densities, "densities", name)
    }
    pub fn transform(&self, name: Option<&str>) -> Result<&TransformSpec, String> {
        lookup(&self.transforms, "transform", name)
    }
    pub fn generator(&self, name: Option<&str>) -> Result<&Generator, String> {
        lookup(&self.generators, "generator", name)
    }
    pub fn ansatz(&self, name: Option<&str>) -> Result<&Ansatz, String> {
        lookup(&self.ansatzes, "ansatz", name)
    }
    pub fn lagrangian(&self, name: Option<&str>) -> Result<&Lagrangian, String> {
        lookup(&self.lagrangians, "lagrangian", name)
    }
    pub fn nlt(&self, name: Option<&str>) -> Result<&NltSpec, String> {
        lookup(&self.nlts, "nlt", name)
    }
    pub fn operator(&self, name: Option<&str>) -> Result<&LinearOperator, String> {
        lookup(&self.operators, "operator", name)
    }
    pub fn candidate(&self, name: Option<&str>) -> Result<&CandidateSpec, String> {
        lookup(&self.candidates, "linearization-candidate", name)
    }
}

struct RawBlock {
    kind: String,
    name: String,
    lines: Vec<(usize, String)>,
    start: usize,
}

fn split_blocks(text: &str) -> Result<Vec<RawBlock>, ProblemError> {
    let mut blocks = Vec::new();
    let mut current: Option<RawBlock> = None;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        match &mut current {
            None => {
                let Some(head) = line.strip_suffix('{') else {
                    return err(lineno, "expected a block header ending in '{'");
                };
                let mut parts = head.split_whitespace();
                let kind = parts
                    .next()
                    .ok_or(ProblemError {
                        line: lineno,
                        msg: "missing block kind".into(),
                    })?
                    .to_string();
                let name = parts.next().unwrap_or(&kind).to_string();
                if parts.next().is_some() {
                    return err(lineno, "block header takes at most a kind and a name");
                }
                current = Some(RawBlock {
                    kind,
                    name,
                    lines: Vec::new(),
                    start: lineno,
                });
            }
            Some(b) => {
                if line == "}" {
                    blocks.push(current.take().unwrap());
                } else {
                    b.lines.push((lineno, line.to_string()));
                }
            }
        }
    }
    if let Some(b) = current {
        return err(b.start, format!("block '{}' never closed", b.name));
    }
    if blocks.is_empty() {
        return err(1, "no blocks");
    }
    Ok(blocks)
}

fn parse_in(ctx: &VarContext, s: &str, line: usize) -> Result<Expr, ProblemError> {
    parse_expr(s, ctx).map_err(|e| ProblemError {
        line,
        msg: e.to_string(),
    })
}

/// Parse `name := expr`, returning the name and the remainder.
fn split_binding(s: &str, line: usize) -> Result<(&str, &str), ProblemError> {
    match s.split_once(":=") {
        Some((l, r)) => Ok((l.trim(), r.trim())),
        None => err(line, "expected 'name := expression'"),
    }
}

fn coord_of(ctx: &VarContext, tok: &str, line: usize) -> Result<Coord, ProblemError> {
    let e = parse_in(ctx, tok, line)?;
    match e.node() {
        Node::Indep(n) => Ok(Coord::Indep(n.clone())),
        Node::Jet(j) => Ok(Coord::Jet(j.clone())),
        Node::Param(n) => Ok(Coord::Param(n.clone())),
        _ => err(line, format!("'{tok}' is not a coordinate")),
    }
}

fn jet_of(ctx: &VarContext, tok: &str, line: usize) -> Result<JetVar, ProblemError> {
    match coord_of(ctx, tok, line)? {
        Coord::Jet(j) => Ok(j),
        _ => err(line, format!("'{tok}' is not a jet variable")),
    }
}

fn comma_exprs(ctx: &VarContext, s: &str, line: usize) -> Result<Vec<Expr>, ProblemError> {
    s.split(',')
        .map(|p| parse_in(ctx, p.trim(), line))
        .collect()
}

fn parse_system(b: &RawBlock) -> Result<SystemDef, ProblemError> {
    let mut indep = Vec::new();
    let mut dep = Vec::new();
    let mut params = Vec::new();
    let mut funcs = Vec::new();
    let mut eq_lines = Vec::new();
    let mut solve_lines = Vec::new();
    for (ln, line) in &b.lines {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line.as_str(), ""));
        let rest = rest.trim();
        match key {
            "indep" => indep.extend(rest.split_whitespace().map(str::to_string)),
            "dep" => dep.extend(rest.split_whitespace().map(str::to_string)),
            "param" => params.extend(rest.split_whitespace().map(str::to_string)),
            "func" => {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next().and_then(|a| a.parse::<usize>().ok())) {
                    (Some(n), Some(a)) => funcs.push((n.to_string(), a)),
                    _ => return err(*ln, "expected 'func NAME ARITY'"),
                }
            }
            "eq" => eq_lines.push((*ln, rest.to_string())),
            "solve" => solve_lines.push((*ln, rest.to_string())),
            _ => return err(*ln, format!("unknown system key '{key}'")),
        }
    }
    if indep.is_empty() || dep.is_empty() {
        return err(b.start, "system needs 'indep' and 'dep' declarations");
    }
    let mut ctx = VarContext::new(
        &indep.iter().map(String::as_str).collect::<Vec<_>>(),
        &dep.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    ctx.params = params;
    ctx.funcs = funcs;
    let mut equations = Vec::new();
    for (ln, s) in &eq_lines {
        equations.push(parse_in(&ctx, s, *ln)?);
    }
    if equations.is_empty() {
        return err(b.start, "system has no equations");
    }
    let mut solved = Vec::new();
    for (ln, s) in &solve_lines {
        let (lhs, rhs) = split_binding(s, *ln)?;
        solved.push((jet_of(&ctx, lhs, *ln)?, parse_in(&ctx, rhs, *ln)?));
    }
    Ok(SystemDef::new(ctx, equations).with_solved(solved))
}

fn keyed_exprs(
    b: &RawBlock,
    ctx: &VarContext,
    key: &str,
) -> Result<Vec<Expr>, ProblemError> {
    let mut out = Vec::new();
    for (ln, line) in &b.lines {
        match line.split_once(char::is_whitespace) {
            Some((k, rest)) if k == key => out.push(parse_in(ctx, rest.trim(), *ln)?),
            _ => return err(*ln, format!("expected '{key} EXPR'")),
        }
    }
    if out.is_empty() {
        return err(b.start, format!("block '{}' is empty", b.name));
    }
    Ok(out)
}

fn parse_operator(b: &RawBlock) -> Result<LinearOperator, ProblemError> {
    let mut indep = Vec::new();
    let mut funcs = Vec::new();
    let mut entry_lines = Vec::new();
    for (ln, line) in &b.lines {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line.as_str(), ""));
        let rest = rest.trim();
        match key {
            "indep" => indep.extend(rest.split_whitespace().map(str::to_string)),
            "func" => {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next().and_then(|a| a.parse::<usize>().ok())) {
                    (Some(n), Some(a)) => funcs.push((n.to_string(), a)),
                    _ => return err(*ln, "expected 'func NAME ARITY'"),
                }
            }
            "entry" => entry_lines.push((*ln, rest.to_string())),
            _ => return err(*ln, format!("unknown operator key '{key}'")),
        }
    }
    if indep.is_empty() {
        return err(b.start, "operator needs an 'indep' declaration");
    }
    let mut ctx = VarContext::new(
        &indep.iter().map(String::as_str).collect::<Vec<_>>(),
        &[],
    );
    ctx.funcs = funcs;
    let mut cells: Vec<(usize, usize, Expr, MultiIndex)> = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for (ln, s) in &entry_lines {
        let (body, idx) = s
            .rsplit_once('@')
            .ok_or(ProblemError {
                line: *ln,
                msg: "expected 'entry ROW COL COEFF @ INDEX'".into(),
            })?;
        let idx = idx.trim();
        let index = if idx == "-" {
            MultiIndex::empty()
        } else {
            let vars: Vec<String> = idx.split('.').map(|v| v.trim().to_string()).collect();
            for v in &vars {
                if !indep.contains(v) {
                    return err(*ln, format!("index variable '{v}' not declared"));
                }
            }
            MultiIndex::new(vars)
        };
        let mut it = body.trim().splitn(3, char::is_whitespace);
        let row: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(ProblemError { line: *ln, msg: "bad row".into() })?;
        let col: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or(ProblemError { line: *ln, msg: "bad column".into() })?;
        let coeff = parse_in(&ctx, it.next().unwrap_or("").trim(), *ln)?;
        rows = rows.max(row + 1);
        cols = cols.max(col + 1);
        cells.push((row, col, coeff, index));
    }
    let mut entries = vec![vec![Vec::new(); cols]; rows];
    for (r, c, coeff, idx) in cells {
        entries[r][c].push((coeff, idx));
    }
    Ok(LinearOperator::new(entries))
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ProblemError> {
    let blocks = split_blocks(text)?;
    let mut pf = ProblemFile::default();

    // Expressions in later blocks see the first system's variables plus any
    // epsilon parameters declared by transform blocks.
    let mut eps_names = Vec::new();
    for b in &blocks {
        if b.kind == "transform" {
            for (_, line) in &b.lines {
                if let Some(rest) = line.strip_prefix("eps ") {
                    eps_names.push(rest.trim().to_string());
                }
            }
        }
    }

    for b in &blocks {
        if b.kind != "system" {
            continue;
        }
        let mut sys = parse_system(b)?;
        for e in &eps_names {
            if !sys.ctx.params.contains(e) {
                sys.ctx.params.push(e.clone());
            }
        }
        pf.systems.push((b.name.clone(), sys));
    }

    let base_ctx = match pf.systems.first() {
        Some((_, s)) => s.ctx.clone(),
        None => VarContext::new(&[], &[]),
    };

    for b in &blocks {
        let ctx = &base_ctx;
        match b.kind.as_str() {
            "system" => {}
            "multipliers" => {
                let exprs = keyed_exprs(b, ctx, "expr")?;
                pf.multipliers.push((b.name.clone(), MultiplierSet { exprs }));
            }
            "densities" => {
                let fluxes = keyed_exprs(b, ctx, "flux")?;
                if fluxes.len() != ctx.indep.len() {
                    return err(
                        b.start,
                        format!("expected {} fluxes, got {}", ctx.indep.len(), fluxes.len()),
                    );
                }
                pf.densities.push((
                    b.name.clone(),
                    ConservationLaw {
                        fluxes,
                        multipliers: None,
                    },
                ));
            }
            "transform" => {
                pf.transforms.push((b.name.clone(), parse_transform(b, ctx)?));
            }
            "generator" => {
                pf.generators.push((b.name.clone(), parse_generator(b, ctx)?));
            }
            "ansatz" => {
                let mut multipliers = Vec::new();
                for (ln, line) in &b.lines {
                    let Some(rest) = line.strip_prefix("mult ") else {
                        return err(*ln, "expected 'mult NAME COORD...'");
                    };
                    let mut it = rest.split_whitespace();
                    let name = it
                        .next()
                        .ok_or(ProblemError { line: *ln, msg: "missing name".into() })?
                        .to_string();
                    let coords: Result<Vec<Coord>, _> =
                        it.map(|t| coord_of(ctx, t, *ln)).collect();
                    multipliers.push((name, coords?));
                }
                if multipliers.is_empty() {
                    return err(b.start, "ansatz has no 'mult' lines");
                }
                pf.ansatzes.push((b.name.clone(), Ansatz { multipliers }));
            }
            "lagrangian" => {
                let exprs = keyed_exprs(b, ctx, "density")?;
                if exprs.len() != 1 {
                    return err(b.start, "lagrangian takes exactly one 'density' line");
                }
                pf.lagrangians.push((
                    b.name.clone(),
                    Lagrangian {
                        ctx: ctx.clone(),
                        density: exprs[0].clone(),
                    },
                ));
            }
            "nlt" => {
                let (mut f, mut g, mut c) = (None, None, None);
                for (ln, line) in &b.lines {
                    let (key, rest) = line
                        .split_once(char::is_whitespace)
                        .unwrap_or((line.as_str(), ""));
                    let rest = rest.trim();
                    match key {
                        "F" => f = Some(parse_in(ctx, rest, *ln)?),
                        "G" => g = Some(parse_in(ctx, rest, *ln)?),
                        "c" => {
                            let cs = comma_exprs(ctx, rest, *ln)?;
                            if cs.len() != 5 {
                                return err(*ln, "expected five constants");
                            }
                            c = Some([
                                cs[0].clone(),
                                cs[1].clone(),
                                cs[2].clone(),
                                cs[3].clone(),
                                cs[4].clone(),
                            ]);
                        }
                        _ => return err(*ln, format!("unknown nlt key '{key}'")),
                    }
                }
                match (f, g, c) {
                    (Some(f), Some(g), Some(c)) => {
                        pf.nlts.push((b.name.clone(), NltSpec { f, g, c }))
                    }
                    _ => return err(b.start, "nlt needs F, G and c lines"),
                }
            }
            "operator" => {
                pf.operators.push((b.name.clone(), parse_operator(b)?));
            }
            "linearization-candidate" => {
                pf.candidates.push((b.name.clone(), parse_candidate(b, ctx)?));
            }
            other => return err(b.start, format!("unknown block kind '{other}'")),
        }
    }
    let mut seen = Vec::new();
    for b in &blocks {
        let key = (b.kind.clone(), b.name.clone());
        if seen.contains(&key) {
            return err(b.start, format!("duplicate {} block '{}'", b.kind, b.name));
        }
        seen.push(key);
    }
    Ok(pf)
}

fn parse_transform(b: &RawBlock, ctx: &VarContext) -> Result<TransformSpec, ProblemError> {
    let mut eps = None;
    for (ln, line) in &b.lines {
        if let Some(rest) = line.strip_prefix("eps ") {
            if eps.is_some() {
                return err(*ln, "duplicate eps line");
            }
            eps = Some(rest.trim().to_string());
        }
    }
    let fwd_ctx = tilde_ctx(ctx);
    let coords: Vec<String> = ctx.indep.iter().chain(ctx.dep.iter()).cloned().collect();
    let tilde: Vec<String> = coords
        .iter()
        .map(|c| crate::symaction::tilde_name(c))
        .collect();
    let mut forward = vec![None; coords.len()];
    let mut inverse = vec![None; coords.len()];
    let mut factor = Vec::new();
    for (ln, line) in &b.lines {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line.as_str(), ""));
        let rest = rest.trim();
        match key {
            "eps" => {}
            "map" => {
                let (lhs, rhs) = split_binding(rest, *ln)?;
                let Some(i) = coords.iter().position(|c| c == lhs) else {
                    return err(*ln, format!("'{lhs}' is not a coordinate"));
                };
                forward[i] = Some(parse_in(&fwd_ctx, rhs, *ln)?);
            }
            "inv" => {
                let (lhs, rhs) = split_binding(rest, *ln)?;
                let Some(i) = tilde.iter().position(|c| c == lhs) else {
                    return err(*ln, format!("'{lhs}' is not a tilde coordinate"));
                };
                inverse[i] = Some(parse_in(ctx, rhs, *ln)?);
            }
            "factor" => factor.push(comma_exprs(&fwd_ctx, rest, *ln)?),
            _ => return err(*ln, format!("unknown transform key '{key}'")),
        }
    }
    let unwrap_all = |v: Vec<Option<Expr>>, what: &str| -> Result<Vec<Expr>, ProblemError> {
        v.into_iter()
            .zip(&coords)
            .map(|(e, c)| {
                e.ok_or(ProblemError {
                    line: b.start,
                    msg: format!("missing {what} for coordinate '{c}'"),
                })
            })
            .collect()
    };
    Ok(TransformSpec {
        forward: unwrap_all(forward, "map")?,
        inverse: unwrap_all(inverse, "inv")?,
        eps,
        factor: if factor.is_empty() { None } else { Some(factor) },
    })
}

fn parse_generator(b: &RawBlock, ctx: &VarContext) -> Result<Generator, ProblemError> {
    let mut xis = Vec::new();
    let mut etas = Vec::new();
    for (ln, line) in &b.lines {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line.as_str(), ""));
        let (lhs, rhs) = split_binding(rest.trim(), *ln)?;
        let e = parse_in(ctx, rhs, *ln)?;
        match key {
            "xi" if ctx.indep.contains(&lhs.to_string()) => xis.push((lhs.to_string(), e)),
            "eta" if ctx.dep.contains(&lhs.to_string()) => etas.push((lhs.to_string(), e)),
            "xi" | "eta" => return err(*ln, format!("'{lhs}' is not a declared variable")),
            _ => return err(*ln, format!("unknown generator key '{key}'")),
        }
    }
    if etas.is_empty() {
        return err(b.start, "generator has no eta lines");
    }
    // Fill unstated coefficients with zero so orderings match declarations.
    let full = |names: &[String], given: Vec<(String, Expr)>| {
        names
            .iter()
            .map(|n| {
                let e = given
                    .iter()
                    .find(|(k, _)| k == n)
                    .map(|(_, e)| e.clone())
                    .unwrap_or_else(Expr::zero);
                (n.clone(), e)
            })
            .collect::<Vec<_>>()
    };
    Ok(if xis.is_empty() {
        Generator::Evolutionary {
            etas: full(&ctx.dep, etas),
        }
    } else {
        Generator::Point {
            xis: full(&ctx.indep, xis),
            etas: full(&ctx.dep, etas),
        }
    })
}

fn parse_candidate(b: &RawBlock, ctx: &VarContext) -> Result<CandidateSpec, ProblemError> {
    let mut z_names = Vec::new();
    let mut w_names = Vec::new();
    let mut target = None;
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut invariants = Vec::new();
    let mut psi = Vec::new();
    let mut amatrix = Vec::new();
    let mut sample_lines = Vec::new();
    for (ln, line) in &b.lines {
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line.as_str(), ""));
        let rest = rest.trim();
        match key {
            "z" => z_names.extend(rest.split_whitespace().map(str::to_string)),
            "w" => w_names.extend(rest.split_whitespace().map(str::to_string)),
            "target" => target = Some(rest.to_string()),
            "alpha" => alpha.push(comma_exprs(ctx, rest, *ln)?),
            "beta" => beta.push(comma_exprs(ctx, rest, *ln)?),
            "invariant" => invariants.push(parse_in(ctx, rest, *ln)?),
            "psi" => psi.push(parse_in(ctx, rest, *ln)?),
            "amatrix" => amatrix.push(comma_exprs(ctx, rest, *ln)?),
            "sample" => sample_lines.push((*ln, rest.to_string())),
            _ => return err(*ln, format!("unknown candidate key '{key}'")),
        }
    }
    if z_names.is_empty() || w_names.is_empty() {
        return err(b.start, "candidate needs 'z' and 'w' declarations");
    }
    let mut zctx = VarContext::new(
        &z_names.iter().map(String::as_str).collect::<Vec<_>>(),
        &w_names.iter().map(String::as_str).collect::<Vec<_>>(),
    );
    zctx.funcs = ctx.funcs.clone();
    let mut samples = Vec::new();
    for (ln, s) in &sample_lines {
        samples.push(comma_exprs(&zctx, s, *ln)?);
    }
    Ok(CandidateSpec {
        z_names,
        w_names,
        target: target.ok_or(ProblemError {
            line: b.start,
            msg: "candidate needs a 'target' operator reference".into(),
        })?,
        alpha,
        beta,
        invariants,
        psi,
        amatrix,
        samples,
    })
}
