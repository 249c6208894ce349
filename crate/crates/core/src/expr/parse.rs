//! Expression DSL.
//!
//! ```text
//! input    := header* expr
//! header   := ("opaque" NAME "/" INT | "param" NAME ("," NAME)*) (";" | newline)
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := ("-" | "+") unary | power
//! power    := primary ("^" unary)?
//! primary  := NUMBER | NAME index? ("(" expr ("," expr)* ")")? | "(" expr ")"
//! index    := "[" INT ("," INT)* "]"
//! ```
//!
//! Numbers with a decimal point are read as exact rationals. Reserved names:
//! `t x1 x2 x3 r rt phi theta rho i pi vkappa` (`vkappa = phi - x3`) and the
//! functions `exp ln sin cos arctan sqrt`.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{Constant, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{msg} at position {pos}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

fn err<T>(pos: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { pos, msg: msg.into() })
}

pub const RESERVED: &[&str] =
    &["t", "x1", "x2", "x3", "r", "rt", "phi", "theta", "rho", "i", "pi", "vkappa", "exp", "ln", "sin", "cos", "arctan", "sqrt"];

/// Declared parameters and opaque functions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Declarations {
    pub params: BTreeSet<String>,
    pub opaques: BTreeMap<String, usize>,
}

impl Declarations {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn param(mut self, name: &str) -> Self {
        self.params.insert(name.to_string());
        self
    }

    pub fn opaque(mut self, name: &str, arity: usize) -> Self {
        self.opaques.insert(name.to_string(), arity);
        self
    }

    pub fn merge(&mut self, other: &Declarations) {
        self.params.extend(other.params.iter().cloned());
        self.opaques.extend(other.opaques.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Num(BigRational),
    Name(String),
    Sym(char),
    Newline,
}

pub(crate) fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        if c == '\n' || c == ';' {
            out.push((Tok::Newline, k));
            k += 1;
        } else if c.is_whitespace() {
            k += 1;
        } else if c == '#' {
            while k < bytes.len() && bytes[k] != b'\n' {
                k += 1;
            }
        } else if c.is_ascii_digit() || (c == '.' && k + 1 < bytes.len() && bytes[k + 1].is_ascii_digit()) {
            let start = k;
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            let mut frac = String::new();
            if k < bytes.len() && bytes[k] == b'.' {
                k += 1;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    frac.push(bytes[k] as char);
                    k += 1;
                }
            }
            let int_part = &src[start..start + src[start..].find(|ch: char| !ch.is_ascii_digit()).unwrap_or(src.len() - start)];
            let int_val: BigInt = if int_part.is_empty() { BigInt::zero() } else { int_part.parse().unwrap() };
            let mut q = BigRational::from_integer(int_val);
            if !frac.is_empty() {
                let num: BigInt = frac.parse().unwrap();
                let den = num_traits::pow(BigInt::from(10), frac.len());
                q += BigRational::new(num, den);
            }
            out.push((Tok::Num(q), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_' || bytes[k] == b'\'') {
                k += 1;
            }
            out.push((Tok::Name(src[start..k].to_string()), start));
        } else if "+-*/^()[],".contains(c) {
            out.push((Tok::Sym(c), k));
            k += 1;
        } else {
            return err(k, format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

/// Untyped syntax tree shared by the expression and operator readers.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Ast {
    Num(BigRational),
    Name(String, usize),
    Call { name: String, index: Option<Vec<u8>>, args: Vec<Ast>, pos: usize },
    Neg(Box<Ast>),
    Bin(char, Box<Ast>, Box<Ast>),
}

pub(crate) struct Parser {
    toks: Vec<(Tok, usize)>,
    k: usize,
    end: usize,
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(src)?, k: 0, end: src.len() })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.k).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn skip_newlines(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.k += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.k += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            err(self.pos(), format!("expected `{c}`"))
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Name(n)) => {
                self.k += 1;
                Ok(n)
            }
            _ => err(self.pos(), "expected a name"),
        }
    }

    fn int(&mut self) -> Result<u64, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(q)) if q.is_integer() => {
                self.k += 1;
                q.to_integer().try_into().or_else(|_| err(self.pos(), "integer too large"))
            }
            _ => err(self.pos(), "expected an integer"),
        }
    }

    /// Read `opaque F/2` and `param a, b` lines into `decls`.
    pub(crate) fn headers(&mut self, decls: &mut Declarations) -> Result<(), ParseError> {
        loop {
            self.skip_newlines();
            match self.peek() {
                Some(Tok::Name(n)) if n == "opaque" && matches!(self.toks.get(self.k + 1), Some((Tok::Name(_), _))) => {
                    self.k += 1;
                    let pos = self.pos();
                    let name = self.name()?;
                    if RESERVED.contains(&name.as_str()) {
                        return err(pos, format!("`{name}` is reserved"));
                    }
                    self.expect('/')?;
                    let arity = self.int()? as usize;
                    decls.opaques.insert(name, arity);
                }
                Some(Tok::Name(n)) if n == "param" && matches!(self.toks.get(self.k + 1), Some((Tok::Name(_), _))) => {
                    self.k += 1;
                    loop {
                        let pos = self.pos();
                        let name = self.name()?;
                        if RESERVED.contains(&name.as_str()) {
                            return err(pos, format!("`{name}` is reserved"));
                        }
                        decls.params.insert(name);
                        if !self.eat(',') {
                            break;
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    pub(crate) fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_newlines();
        if self.k < self.toks.len() {
            return err(self.pos(), "unexpected trailing input");
        }
        Ok(())
    }

    pub(crate) fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Ast::Bin('+', Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Ast::Bin('-', Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Ast::Bin('*', Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Ast::Bin('/', Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Ast, ParseError> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.primary()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Ast::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Ast, ParseError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(q)) => {
                self.k += 1;
                Ok(Ast::Num(q))
            }
            Some(Tok::Sym('(')) => {
                self.k += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Name(n)) => {
                self.k += 1;
                let mut index = None;
                if self.eat('[') {
                    let mut idx = vec![self.int()? as u8];
                    while self.eat(',') {
                        idx.push(self.int()? as u8);
                    }
                    self.expect(']')?;
                    index = Some(idx);
                }
                if self.eat('(') {
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    Ok(Ast::Call { name: n, index, args, pos })
                } else if index.is_some() {
                    err(self.pos(), "derivative index must be followed by arguments")
                } else {
                    Ok(Ast::Name(n, pos))
                }
            }
            Some(Tok::Newline) | None => err(pos, "unexpected end of input"),
            Some(Tok::Sym(c)) => err(pos, format!("unexpected `{c}`")),
        }
    }
}

/// Reserved atom by name.
pub(crate) fn reserved_atom(name: &str) -> Option<Expr> {
    Some(match name {
        "t" => Expr::t(),
        "x1" => Expr::x(1),
        "x2" => Expr::x(2),
        "x3" => Expr::x(3),
        "r" => Expr::r(),
        "rt" => Expr::rt(),
        "phi" => Expr::phi(),
        "theta" => Expr::theta(),
        "rho" => Expr::rho(),
        "i" => Expr::i(),
        "pi" => Expr::pi(),
        "vkappa" => &Expr::phi() - &Expr::x(3),
        _ => return None,
    })
}

pub(crate) fn func_by_name(name: &str) -> Option<Option<Func>> {
    Some(match name {
        "exp" => Some(Func::Exp),
        "ln" => Some(Func::Ln),
        "sin" => Some(Func::Sin),
        "cos" => Some(Func::Cos),
        "arctan" => Some(Func::Arctan),
        "sqrt" => None,
        _ => return None,
    })
}

pub(crate) fn power(base: Expr, exp: &Expr) -> Expr {
    base.pow_expr(exp)
}

/// Interpret an untyped tree as a scalar expression.
pub(crate) fn to_expr(ast: &Ast, decls: &Declarations) -> Result<Expr, ParseError> {
    Ok(match ast {
        Ast::Num(q) => Expr::constant(Constant::real(q.clone())),
        Ast::Name(n, pos) => {
            if let Some(e) = reserved_atom(n) {
                e
            } else if decls.params.contains(n) {
                Expr::param(n)
            } else if decls.opaques.contains_key(n) {
                return err(*pos, format!("opaque function `{n}` used without arguments"));
            } else {
                return err(*pos, format!("unknown identifier `{n}`"));
            }
        }
        Ast::Call { name, index, args, pos } => {
            let args: Vec<Expr> = args.iter().map(|a| to_expr(a, decls)).collect::<Result<_, _>>()?;
            if let Some(f) = func_by_name(name) {
                if index.is_some() {
                    return err(*pos, format!("`{name}` does not take a derivative index"));
                }
                if args.len() != 1 {
                    return err(*pos, format!("`{name}` takes one argument"));
                }
                let a = args.into_iter().next().unwrap();
                match f {
                    Some(f) => Expr::func(f, a),
                    None => a.sqrt(),
                }
            } else if let Some(&arity) = decls.opaques.get(name) {
                if args.len() != arity {
                    return err(*pos, format!("`{name}` declared with arity {arity}, applied to {}", args.len()));
                }
                let idx = index.clone().unwrap_or_else(|| vec![0; arity]);
                if idx.len() != arity {
                    return err(*pos, format!("derivative index of `{name}` must have {arity} entries"));
                }
                Expr::opaque(name, idx, args)
            } else {
                return err(*pos, format!("unknown function `{name}`"));
            }
        }
        Ast::Neg(a) => -to_expr(a, decls)?,
        Ast::Bin(op, a, b) => {
            let (x, y) = (to_expr(a, decls)?, to_expr(b, decls)?);
            match op {
                '+' => &x + &y,
                '-' => &x - &y,
                '*' => &x * &y,
                '/' => {
                    if y.is_zero() {
                        return err(0, "division by zero");
                    }
                    &x / &y
                }
                '^' => {
                    if x.is_zero() && y.as_const().and_then(|c| c.as_rational()).is_some_and(|q| q <= &BigRational::zero()) {
                        return err(0, "zero raised to a non-positive power");
                    }
                    power(x, &y)
                }
                _ => unreachable!(),
            }
        }
    })
}

/// Parse an expression, with optional `opaque`/`param` headers, against `decls`.
pub fn parse_expr(src: &str, decls: &Declarations) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let mut local = decls.clone();
    p.headers(&mut local)?;
    let ast = p.expr()?;
    p.finish()?;
    to_expr(&ast, &local)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    /// Parse without declarations; use headers for parameters and opaque functions.
    fn from_str(s: &str) -> Result<Expr, ParseError> {
        parse_expr(s, &Declarations::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_matches_rt_squared() {
        let e: Expr = "x1^2+x2^2".parse().unwrap();
        let d = &e - &Expr::rt().powi(2).expand_atoms();
        assert!(d.is_zero());
    }

    #[test]
    fn headers_and_params() {
        let e = parse_expr("param kappa\nkappa*arctan(x2/x1)", &Declarations::new()).unwrap();
        assert_eq!(e, &Expr::param("kappa") * &(&Expr::x(2) / &Expr::x(1)).arctan());
    }

    #[test]
    fn opaque_application() {
        let e = parse_expr("opaque F/2; F(rt, x3)", &Declarations::new()).unwrap();
        assert_eq!(e, Expr::opaque("F", vec![0, 0], vec![Expr::rt(), Expr::x(3)]));
        let d = parse_expr("opaque F/2; F[1,0](rt, x3)", &Declarations::new()).unwrap();
        assert_eq!(d, Expr::opaque("F", vec![1, 0], vec![Expr::rt(), Expr::x(3)]));
    }

    #[test]
    fn decimals_are_exact() {
        let e: Expr = "0.25*x1".parse().unwrap();
        assert_eq!(e, &Expr::ratio(1, 4) * &Expr::x(1));
    }

    #[test]
    fn errors_carry_positions() {
        let e = "x1 + foo".parse::<Expr>().unwrap_err();
        assert_eq!(e.pos, 5);
        assert!(e.msg.contains("unknown identifier"));
        let e = "x1 + (x2".parse::<Expr>().unwrap_err();
        assert_eq!(e.pos, 8);
        let e = parse_expr("opaque F/2; F(x1)", &Declarations::new()).unwrap_err();
        assert!(e.msg.contains("arity"));
    }

    #[test]
    fn symbolic_exponent() {
        let e = parse_expr("param a; r^a", &Declarations::new()).unwrap();
        assert_eq!(e, (&Expr::param("a") * &Expr::r().ln()).exp());
    }
}
