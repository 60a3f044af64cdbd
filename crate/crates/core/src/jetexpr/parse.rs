//! Text syntax for expressions.
//!
//! Identifiers resolve against a `VarContext`, so `u_tx` only reads as a jet
//! coordinate when `u` is a declared dependent variable and `t`, `x` are
//! declared independent variables. Arbitrary functions take primes (`F'`),
//! a derivative tuple (`alpha^(0,1,0,0)`), or both notations interchangeably
//! for the single-argument case (`F^(3)`). `int(s, a, u, body)` is a
//! definite integral binding `s` inside `body`.

use num::{BigInt, One, Zero};
use thiserror::Error;

use super::node::{Elementary, Expr, JetVar, MultiIndex, NamedConst, Rat};

#[derive(Debug, Error)]
#[error("parse error at position {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

/// Declared names the parser resolves identifiers against.
#[derive(Debug, Clone, Default)]
pub struct VarContext {
    pub indep: Vec<String>,
    pub dep: Vec<String>,
    pub params: Vec<String>,
    /// Arbitrary-function names with their arity.
    pub funcs: Vec<(String, usize)>,
}

impl VarContext {
    pub fn new(indep: &[&str], dep: &[&str]) -> Self {
        VarContext {
            indep: indep.iter().map(|s| s.to_string()).collect(),
            dep: dep.iter().map(|s| s.to_string()).collect(),
            params: Vec::new(),
            funcs: Vec::new(),
        }
    }

    pub fn with_params(mut self, params: &[&str]) -> Self {
        self.params = params.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_funcs(mut self, funcs: &[(&str, usize)]) -> Self {
        self.funcs = funcs.iter().map(|(n, a)| (n.to_string(), *a)).collect();
        self
    }

    pub fn func_arity(&self, name: &str) -> Option<usize> {
        self.funcs.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }
}

pub fn parse_expr(src: &str, ctx: &VarContext) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        ctx,
        bound: Vec::new(),
    };
    let e = p.expr()?;
    match p.peek() {
        None => Ok(e),
        Some(t) => Err(p.err_at(t.pos, "unexpected trailing input")),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rat),
    Ident(String),
    Primes(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let pos = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push(Token { tok: Tok::Plus, pos }),
            '-' => out.push(Token { tok: Tok::Minus, pos }),
            '*' => out.push(Token { tok: Tok::Star, pos }),
            '/' => out.push(Token { tok: Tok::Slash, pos }),
            '^' => out.push(Token { tok: Tok::Caret, pos }),
            '(' => out.push(Token { tok: Tok::LParen, pos }),
            ')' => out.push(Token { tok: Tok::RParen, pos }),
            ',' => out.push(Token { tok: Tok::Comma, pos }),
            '\'' => {
                let mut n = 0;
                while i < bytes.len() && bytes[i] == b'\'' {
                    n += 1;
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Primes(n),
                    pos,
                });
                continue;
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut seen_dot = false;
                while i < bytes.len() {
                    match bytes[i] as char {
                        '0'..='9' => i += 1,
                        '.' if !seen_dot => {
                            seen_dot = true;
                            i += 1;
                        }
                        _ => break,
                    }
                }
                let text = &src[start..i];
                let r = parse_number(text).ok_or(ParseError {
                    pos: start,
                    msg: format!("bad number `{text}`"),
                })?;
                out.push(Token {
                    tok: Tok::Num(r),
                    pos: start,
                });
                continue;
            }
            _ if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            _ => {
                return Err(ParseError {
                    pos,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

fn parse_number(text: &str) -> Option<Rat> {
    if let Some(dot) = text.find('.') {
        let whole = &text[..dot];
        let frac = &text[dot + 1..];
        if whole.is_empty() && frac.is_empty() {
            return None;
        }
        let mut num: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            whole.parse().ok()?
        };
        let mut den = BigInt::one();
        for ch in frac.chars() {
            num = num * 10 + ch.to_digit(10)?;
            den *= 10;
        }
        Some(Rat::new(num, den))
    } else {
        let n: BigInt = text.parse().ok()?;
        Some(Rat::from_integer(n))
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    ctx: &'a VarContext,
    bound: Vec<String>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, pos: usize, msg: &str) -> ParseError {
        ParseError {
            pos,
            msg: msg.to_string(),
        }
    }

    fn err_here(&self, msg: &str) -> ParseError {
        let pos = self
            .peek()
            .map(|t| t.pos)
            .unwrap_or_else(|| self.tokens.last().map(|t| t.pos + 1).unwrap_or(0));
        self.err_at(pos, msg)
    }

    fn eat(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err_here(&format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().map(|t| t.tok.clone()) {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    acc = acc.div(&self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(t) = self.peek() {
            if t.tok == Tok::Minus {
                self.pos += 1;
                return Ok(self.unary()?.neg());
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(t) = self.peek() {
            if t.tok == Tok::Caret {
                self.pos += 1;
                let exp = self.exponent()?;
                return Ok(base.pow(exp));
            }
        }
        Ok(base)
    }

    /// A literal rational exponent: `2`, `-1`, `(3/2)`, `(-1/2)`.
    fn exponent(&mut self) -> Result<Rat, ParseError> {
        let parens = matches!(self.peek().map(|t| &t.tok), Some(Tok::LParen));
        if parens {
            self.pos += 1;
        }
        let neg = matches!(self.peek().map(|t| &t.tok), Some(Tok::Minus));
        if neg {
            self.pos += 1;
        }
        let num = match self.next() {
            Some(Token {
                tok: Tok::Num(r), ..
            }) => r,
            _ => return Err(self.err_here("expected numeric exponent")),
        };
        let mut val = num;
        if parens {
            if matches!(self.peek().map(|t| &t.tok), Some(Tok::Slash)) {
                self.pos += 1;
                match self.next() {
                    Some(Token {
                        tok: Tok::Num(d), ..
                    }) if !d.is_zero() => val /= d,
                    _ => return Err(self.err_here("expected nonzero denominator")),
                }
            }
            self.eat(Tok::RParen, "`)` after exponent")?;
        }
        Ok(if neg { -val } else { val })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.next().ok_or_else(|| self.err_here("expected expression"))?;
        match t.tok {
            Tok::Num(r) => Ok(Expr::num(r)),
            Tok::LParen => {
                let e = self.expr()?;
                self.eat(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(&name, t.pos),
            _ => Err(self.err_at(t.pos, "expected expression")),
        }
    }

    fn ident(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        if name == "pi" {
            return Ok(Expr::konst(NamedConst::Pi));
        }
        if name == "sqrt2" {
            return Ok(Expr::konst(NamedConst::Sqrt2));
        }
        if name == "int" {
            return self.integral(pos);
        }
        if let Some(f) = Elementary::from_name(name) {
            self.eat(Tok::LParen, &format!("`(` after {name}"))?;
            let arg = self.expr()?;
            self.eat(Tok::RParen, "`)`")?;
            return Ok(Expr::elem(f, arg));
        }
        if let Some(arity) = self.ctx.func_arity(name) {
            return self.arb_func(name, arity, pos);
        }
        if self.bound.iter().any(|b| b == name) {
            return Ok(Expr::bound(name));
        }
        if self.ctx.indep.iter().any(|v| v == name) {
            return Ok(Expr::indep(name));
        }
        if self.ctx.params.iter().any(|v| v == name) {
            return Ok(Expr::param(name));
        }
        if self.ctx.dep.iter().any(|v| v == name) {
            return Ok(Expr::var(name));
        }
        // Jet coordinate `dep_suffix` with the suffix a string of
        // independent-variable names (longest name matched first).
        if let Some(us) = name.find('_') {
            let (dep, suffix) = (&name[..us], &name[us + 1..]);
            if self.ctx.dep.iter().any(|v| v == dep) {
                let index = self.jet_suffix(suffix, pos)?;
                return Ok(Expr::jet(JetVar::new(dep, index)));
            }
        }
        Err(self.err_at(pos, &format!("unknown identifier `{name}`")))
    }

    fn jet_suffix(&self, suffix: &str, pos: usize) -> Result<MultiIndex, ParseError> {
        let mut names: Vec<&String> = self.ctx.indep.iter().collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        let mut rest = suffix;
        let mut vars = Vec::new();
        'outer: while !rest.is_empty() {
            for n in &names {
                if let Some(r) = rest.strip_prefix(n.as_str()) {
                    vars.push(n.to_string());
                    rest = r;
                    continue 'outer;
                }
            }
            return Err(self.err_at(
                pos,
                &format!("`{suffix}` is not a string of independent variables"),
            ));
        }
        Ok(MultiIndex::new(vars))
    }

    fn arb_func(&mut self, name: &str, arity: usize, pos: usize) -> Result<Expr, ParseError> {
        let mut deriv = vec![0u32; arity];
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Primes(n)) => {
                self.pos += 1;
                if arity != 1 {
                    return Err(self.err_at(pos, "prime notation needs a unary function"));
                }
                deriv[0] = n as u32;
            }
            Some(Tok::Caret) => {
                self.pos += 1;
                self.eat(Tok::LParen, "`(` after `^`")?;
                for (i, d) in deriv.iter_mut().enumerate() {
                    if i > 0 {
                        self.eat(Tok::Comma, "`,` in derivative tuple")?;
                    }
                    *d = match self.next() {
                        Some(Token {
                            tok: Tok::Num(r), ..
                        }) if r.is_integer() => {
                            use num::ToPrimitive;
                            r.to_integer().to_u32().ok_or_else(|| {
                                self.err_at(pos, "derivative order out of range")
                            })?
                        }
                        _ => return Err(self.err_here("expected derivative order")),
                    };
                }
                self.eat(Tok::RParen, "`)` after derivative tuple")?;
            }
            _ => {}
        }
        self.eat(Tok::LParen, &format!("`(` after {name}"))?;
        let mut args = Vec::with_capacity(arity);
        for i in 0..arity {
            if i > 0 {
                self.eat(Tok::Comma, "`,` between arguments")?;
            }
            args.push(self.expr()?);
        }
        self.eat(Tok::RParen, "`)`")?;
        Ok(Expr::func(name, deriv, args))
    }

    fn integral(&mut self, pos: usize) -> Result<Expr, ParseError> {
        self.eat(Tok::LParen, "`(` after int")?;
        let var = match self.next() {
            Some(Token {
                tok: Tok::Ident(v), ..
            }) => v,
            _ => return Err(self.err_at(pos, "expected integration variable")),
        };
        self.eat(Tok::Comma, "`,` after integration variable")?;
        let lower = self.expr()?;
        self.eat(Tok::Comma, "`,` after lower limit")?;
        let upper = self.expr()?;
        self.eat(Tok::Comma, "`,` after upper limit")?;
        self.bound.push(var.clone());
        let body = self.expr();
        self.bound.pop();
        let body = body?;
        self.eat(Tok::RParen, "`)` closing int")?;
        Ok(Expr::integral(&var, lower, upper, body))
    }
}
