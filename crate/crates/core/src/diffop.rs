//! Differential operators with Pauli-matrix coefficients and optional parity.
//!
//! A term `c * d^m * P^r` applies the parity reflection first (if `r`), then
//! the derivatives, then multiplies by the matrix `c`. Operators are kept in
//! this normal form; composition pushes derivatives and parity to the right
//! with the Leibniz rule and `P c(x) = c(-x) P`, `P d_a = -d_a P`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::expr::parse::{self, Ast, Parser};
use crate::expr::zero::Witness;
use crate::expr::{Declarations, Expr, Var, ZeroTest, ZeroVerdict};
use crate::pauli::PauliExpr;

/// Exponents of `(dt, d1, d2, d3)`.
pub type Mono = [u8; 4];

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Key {
    pub mono: Mono,
    pub reflected: bool,
}

/// A finite sum of `PauliExpr * d^m * P^r` terms in normal form.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct DiffOp {
    terms: BTreeMap<Key, PauliExpr>,
}

/// A two-component symbolic wavefunction.
pub type Spinor = [Expr; 2];

fn binom(n: u8, k: u8) -> i64 {
    let mut acc: i64 = 1;
    for j in 0..k as i64 {
        acc = acc * (n as i64 - j) / (j + 1);
    }
    acc
}

fn spatial_order(m: &Mono) -> u8 {
    m[1] + m[2] + m[3]
}

impl DiffOp {
    pub fn zero() -> Self {
        DiffOp::default()
    }

    pub fn identity() -> Self {
        DiffOp::matrix(PauliExpr::identity())
    }

    /// Multiplication by a matrix function.
    pub fn matrix(c: PauliExpr) -> Self {
        DiffOp::term(Key { mono: [0; 4], reflected: false }, c)
    }

    /// Multiplication by a scalar function.
    pub fn scalar(e: Expr) -> Self {
        DiffOp::matrix(PauliExpr::scalar(e))
    }

    pub fn sigma(a: usize) -> Self {
        DiffOp::matrix(PauliExpr::sigma(a))
    }

    /// Partial derivative `d_v`.
    pub fn d(v: Var) -> Self {
        let mut mono = [0; 4];
        let k = match v {
            Var::T => 0,
            Var::X1 => 1,
            Var::X2 => 2,
            Var::X3 => 3,
            Var::Slot(_) => panic!("slot variables have no operator"),
        };
        mono[k] = 1;
        DiffOp::term(Key { mono, reflected: false }, PauliExpr::identity())
    }

    /// Momentum `p_a = -i d_a`.
    pub fn p(a: usize) -> Self {
        DiffOp::d(Var::x(a)).scale(&-Expr::i())
    }

    /// Parity `x -> -x`.
    pub fn parity() -> Self {
        DiffOp::term(Key { mono: [0; 4], reflected: true }, PauliExpr::identity())
    }

    pub fn term(key: Key, c: PauliExpr) -> Self {
        let mut op = DiffOp::zero();
        op.push(key, c);
        op
    }

    fn push(&mut self, key: Key, c: PauliExpr) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&key) {
            None => {
                self.terms.insert(key, c);
            }
            Some(old) => {
                let sum = &old + &c;
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &PauliExpr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, key: &Key) -> Option<&PauliExpr> {
        self.terms.get(key)
    }

    /// Structurally empty.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest total differential order (spatial and time).
    pub fn order(&self) -> u8 {
        self.terms.keys().map(|k| k.mono.iter().sum()).max().unwrap_or(0)
    }

    pub fn has_parity(&self) -> bool {
        self.terms.keys().any(|k| k.reflected)
    }

    /// Left multiplication by a scalar function.
    pub fn scale(&self, e: &Expr) -> Self {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            out.push(*k, c.scale(e));
        }
        out
    }

    /// Left multiplication by a matrix function.
    pub fn left_matrix(&self, m: &PauliExpr) -> Self {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            out.push(*k, m * c);
        }
        out
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&PauliExpr) -> PauliExpr) -> Self {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            out.push(*k, f(c));
        }
        out
    }

    pub fn simplify(&self) -> Self {
        self.map_coefficients(PauliExpr::simplify)
    }

    /// Substitute named parameters in every coefficient.
    pub fn subst_params(&self, map: &std::collections::HashMap<String, Expr>) -> Self {
        self.map_coefficients(|c| c.map(|e| e.subst_params(map)))
    }

    /// `self ∘ o`, normal-ordered.
    pub fn compose(&self, o: &DiffOp) -> Self {
        let mut out = DiffOp::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                // P^r1 c2 d^m2 P^r2 = sign * c2' d^m2 P^(r1+r2)
                let (c2p, sign) = if k1.reflected {
                    let s = if spatial_order(&k2.mono) % 2 == 1 { -1 } else { 1 };
                    (c2.reflect(), s)
                } else {
                    (c2.clone(), 1)
                };
                let reflected = k1.reflected ^ k2.reflected;
                // c1 d^m1 c2' = c1 sum_k binom(m1,k) (d^k c2') d^(m1-k)
                let m1 = k1.mono;
                for kt in 0..=m1[0] {
                    for ka in 0..=m1[1] {
                        for kb in 0..=m1[2] {
                            for kc in 0..=m1[3] {
                                let k = [kt, ka, kb, kc];
                                let mult = binom(m1[0], kt) * binom(m1[1], ka) * binom(m1[2], kb) * binom(m1[3], kc) * sign;
                                let dc = c2p.map(|e| e.diff_multi(k));
                                if dc.is_zero() {
                                    continue;
                                }
                                let coeff = (c1 * &dc).scale(&Expr::int(mult));
                                let mono = std::array::from_fn(|j| m1[j] - k[j] + k2.mono[j]);
                                out.push(Key { mono, reflected }, coeff);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, o: &DiffOp) -> Self {
        &self.compose(o) - &o.compose(self)
    }

    pub fn anticommutator(&self, o: &DiffOp) -> Self {
        &self.compose(o) + &o.compose(self)
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = DiffOp::identity();
        for _ in 0..n {
            acc = acc.compose(self);
        }
        acc
    }

    /// Formal adjoint: conjugate-transpose coefficients, integrate derivatives by parts.
    pub fn adjoint(&self) -> Self {
        let mut out = DiffOp::zero();
        for (k, c) in &self.terms {
            // (c d^m P)^+ = P (-1)^|m| d^m c^+
            let total: u8 = k.mono.iter().sum();
            let sign = if total % 2 == 1 { -1 } else { 1 };
            let deriv = DiffOp::term(Key { mono: k.mono, reflected: false }, PauliExpr::scalar(Expr::int(sign)));
            let mut piece = deriv.compose(&DiffOp::matrix(c.adjoint()));
            if k.reflected {
                piece = DiffOp::parity().compose(&piece);
            }
            out = &out + &piece;
        }
        out
    }

    /// Apply to a symbolic spinor.
    pub fn apply(&self, psi: &Spinor) -> Spinor {
        let mut out0 = Vec::new();
        let mut out1 = Vec::new();
        let reflected = [psi[0].reflect(), psi[1].reflect()];
        for (k, c) in &self.terms {
            let src = if k.reflected { &reflected } else { psi };
            let d0 = src[0].diff_multi(k.mono);
            let d1 = src[1].diff_multi(k.mono);
            let i = Expr::i();
            // [[c0 + c3, c1 - i c2], [c1 + i c2, c0 - c3]]
            let m00 = &c.c[0] + &c.c[3];
            let m01 = &c.c[1] - &(&i * &c.c[2]);
            let m10 = &c.c[1] + &(&i * &c.c[2]);
            let m11 = &c.c[0] - &c.c[3];
            out0.push(&m00 * &d0);
            out0.push(&m01 * &d1);
            out1.push(&m10 * &d0);
            out1.push(&m11 * &d1);
        }
        [Expr::add_all(out0), Expr::add_all(out1)]
    }

    /// Every coefficient component, for zero testing.
    pub fn coefficient_exprs(&self) -> Vec<Expr> {
        self.terms.values().flat_map(|c| c.c.iter().cloned()).collect()
    }

    /// Zero test by two routes: coefficients of the normal form, and the
    /// action on a random spinor. Disagreement is an error.
    pub fn is_zero_op(&self, test: &ZeroTest) -> Result<OpVerdict> {
        let coeffs = self.coefficient_exprs();
        let by_coeff = test.check_all(&coeffs)?;
        let psi = test_spinor();
        let applied = self.apply(&psi);
        let by_apply = test.fork(17).check_all(&applied)?;
        let coeff_zero = by_coeff.iter().all(ZeroVerdict::is_zero);
        let apply_zero = by_apply.iter().all(ZeroVerdict::is_zero);
        if coeff_zero != apply_zero {
            return Err(Error::Inconsistent(format!(
                "operator zero test: coefficient route says {}, application route says {}",
                if coeff_zero { "zero" } else { "nonzero" },
                if apply_zero { "zero" } else { "nonzero" }
            )));
        }
        if coeff_zero {
            return Ok(OpVerdict { zero: true, witness: None });
        }
        let (key, comp, w) = self
            .terms
            .keys()
            .flat_map(|k| (0..4).map(move |c| (*k, c)))
            .zip(by_coeff)
            .find_map(|((k, c), v)| v.witness().cloned().map(|w| (k, c, w)))
            .expect("a nonzero coefficient");
        Ok(OpVerdict { zero: false, witness: Some(OpWitness { key, component: comp, point: w }) })
    }

    /// Parse the operator DSL: scalar expressions, `s0..s3`, `dt d1 d2 d3`,
    /// `Par`, with `*` as composition; `lib` resolves generator names.
    pub fn parse(src: &str, decls: &Declarations, lib: &dyn Fn(&str, &[Expr]) -> Option<DiffOp>) -> Result<DiffOp> {
        let mut p = Parser::new(src)?;
        let mut local = decls.clone();
        p.headers(&mut local)?;
        let ast = p.expr()?;
        p.finish()?;
        Ok(to_op(&ast, &local, lib)?.into_op())
    }
}

/// A random test spinor of opaque functions of `(t, x1, x2, x3)`.
pub fn test_spinor() -> Spinor {
    let args = vec![Expr::t(), Expr::x(1), Expr::x(2), Expr::x(3)];
    [Expr::apply("psi_up", args.clone()), Expr::apply("psi_dn", args)]
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpWitness {
    pub key: Key,
    pub component: usize,
    pub point: Witness,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpVerdict {
    pub zero: bool,
    pub witness: Option<OpWitness>,
}

enum Val {
    Scalar(Expr),
    Op(DiffOp),
}

impl Val {
    fn into_op(self) -> DiffOp {
        match self {
            Val::Scalar(e) => DiffOp::scalar(e),
            Val::Op(o) => o,
        }
    }
}

fn op_err<T>(msg: String) -> std::result::Result<T, crate::expr::ParseError> {
    Err(crate::expr::ParseError { pos: 0, msg })
}

fn to_op(ast: &Ast, decls: &Declarations, lib: &dyn Fn(&str, &[Expr]) -> Option<DiffOp>) -> std::result::Result<Val, crate::expr::ParseError> {
    Ok(match ast {
        Ast::Num(_) => Val::Scalar(parse::to_expr(ast, decls)?),
        Ast::Name(n, _) => match n.as_str() {
            "dt" => Val::Op(DiffOp::d(Var::T)),
            "d1" => Val::Op(DiffOp::d(Var::X1)),
            "d2" => Val::Op(DiffOp::d(Var::X2)),
            "d3" => Val::Op(DiffOp::d(Var::X3)),
            "Par" => Val::Op(DiffOp::parity()),
            "s0" => Val::Op(DiffOp::sigma(0)),
            "s1" => Val::Op(DiffOp::sigma(1)),
            "s2" => Val::Op(DiffOp::sigma(2)),
            "s3" => Val::Op(DiffOp::sigma(3)),
            _ => match lib(n, &[]) {
                Some(op) => Val::Op(op),
                None => Val::Scalar(parse::to_expr(ast, decls)?),
            },
        },
        Ast::Call { name, args, .. } => {
            let scalar_args: Option<Vec<Expr>> = args.iter().map(|a| parse::to_expr(a, decls).ok()).collect();
            match scalar_args.as_ref().and_then(|xs| lib(name, xs)) {
                Some(op) => Val::Op(op),
                None => Val::Scalar(parse::to_expr(ast, decls)?),
            }
        }
        Ast::Neg(a) => match to_op(a, decls, lib)? {
            Val::Scalar(e) => Val::Scalar(-e),
            Val::Op(o) => Val::Op(-&o),
        },
        Ast::Bin(op, a, b) => {
            let (x, y) = (to_op(a, decls, lib)?, to_op(b, decls, lib)?);
            match (op, x, y) {
                (_, Val::Scalar(_), Val::Scalar(_)) => Val::Scalar(parse::to_expr(ast, decls)?),
                ('+', x, y) => Val::Op(&x.into_op() + &y.into_op()),
                ('-', x, y) => Val::Op(&x.into_op() - &y.into_op()),
                ('*', x, y) => Val::Op(x.into_op().compose(&y.into_op())),
                ('/', Val::Op(o), Val::Scalar(s)) => Val::Op(o.scale(&s.recip())),
                ('^', Val::Op(o), Val::Scalar(s)) => {
                    let n =
                        s.as_const().and_then(|c| c.as_rational()).filter(|q| q.is_integer() && **q >= BigRational::from_integer(BigInt::from(0)));
                    match n {
                        Some(q) => Val::Op(o.powi(q.to_integer().try_into().unwrap_or(0))),
                        None => return op_err("operator powers must be non-negative integers".into()),
                    }
                }
                (c, _, _) => return op_err(format!("operator `{c}` is not defined between these operands")),
            }
        }
    })
}

impl ops::Add for &DiffOp {
    type Output = DiffOp;
    fn add(self, o: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.push(*k, c.clone());
        }
        out
    }
}

impl ops::Sub for &DiffOp {
    type Output = DiffOp;
    fn sub(self, o: &DiffOp) -> DiffOp {
        self + &(-o)
    }
}

impl ops::Neg for &DiffOp {
    type Output = DiffOp;
    fn neg(self) -> DiffOp {
        self.map_coefficients(|c| -c)
    }
}

impl ops::Mul for &DiffOp {
    type Output = DiffOp;
    fn mul(self, o: &DiffOp) -> DiffOp {
        self.compose(o)
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = ["dt", "d1", "d2", "d3"];
        for (n, (k, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (j, &e) in k.mono.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*{}", names[j])?,
                    _ => write!(f, "*{}^{e}", names[j])?,
                }
            }
            if k.reflected {
                write!(f, "*Par")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nolib(_: &str, _: &[Expr]) -> Option<DiffOp> {
        None
    }

    fn l3() -> DiffOp {
        // L3 = x1 p2 - x2 p1
        &DiffOp::scalar(Expr::x(1)).compose(&DiffOp::p(2)) - &DiffOp::scalar(Expr::x(2)).compose(&DiffOp::p(1))
    }

    #[test]
    fn leibniz() {
        let op = DiffOp::d(Var::X1).compose(&DiffOp::scalar(Expr::x(1)));
        let expect = &DiffOp::scalar(Expr::x(1)).compose(&DiffOp::d(Var::X1)) + &DiffOp::identity();
        assert_eq!(op, expect);
    }

    #[test]
    fn parity_rules() {
        let p = DiffOp::parity();
        assert_eq!(p.compose(&p), DiffOp::identity());
        assert_eq!(p.compose(&DiffOp::d(Var::X2)), -&DiffOp::d(Var::X2).compose(&p));
        assert_eq!(p.compose(&DiffOp::d(Var::T)), DiffOp::d(Var::T).compose(&p));
        let x1d1 = DiffOp::scalar(Expr::x(1)).compose(&DiffOp::d(Var::X1));
        assert_eq!(p.compose(&x1d1), x1d1.compose(&p));
        assert!(p.commutator(&l3()).is_empty());
    }

    #[test]
    fn apply_examples() {
        let psi = [Expr::x(1).powi(2), Expr::zero()];
        assert_eq!(DiffOp::d(Var::X1).apply(&psi), [&Expr::int(2) * &Expr::x(1), Expr::zero()]);
        let axial = [Expr::apply("f", vec![Expr::rt()]), Expr::zero()];
        let out = l3().apply(&axial);
        assert!(out[0].simplify().is_zero() && out[1].is_zero(), "{}", out[0]);
        let psi = [Expr::x(1), &Expr::x(2) * &Expr::x(3)];
        assert_eq!(DiffOp::parity().apply(&psi), [-Expr::x(1), &Expr::x(2) * &Expr::x(3)]);
    }

    #[test]
    fn angular_momentum_algebra() {
        let l = |a: usize| {
            let (b, c) = (a % 3 + 1, (a + 1) % 3 + 1);
            &DiffOp::scalar(Expr::x(b)).compose(&DiffOp::p(c)) - &DiffOp::scalar(Expr::x(c)).compose(&DiffOp::p(b))
        };
        let lhs = l(1).commutator(&l(2));
        let rhs = l(3).scale(&Expr::i());
        assert!((&lhs - &rhs).is_empty());
    }

    #[test]
    fn zero_test_routes_agree() {
        let test = ZeroTest::new(9).with_trials(16);
        assert!(DiffOp::zero().is_zero_op(&test).unwrap().zero);
        let x1d1 = DiffOp::scalar(Expr::x(1)).compose(&DiffOp::d(Var::X1));
        let v = l3().commutator(&x1d1).is_zero_op(&test).unwrap();
        assert!(!v.zero && v.witness.is_some());
    }

    #[test]
    fn adjoint_of_momentum_is_momentum() {
        let p1 = DiffOp::p(1);
        assert_eq!(p1.adjoint(), p1);
        let x1p1 = DiffOp::scalar(Expr::x(1)).compose(&p1);
        let herm = &x1p1 + &x1p1.adjoint();
        assert_eq!(herm.adjoint(), herm);
    }

    #[test]
    fn operator_dsl() {
        let op = DiffOp::parse("x1*d2 - x2*d1", &Declarations::new(), &nolib).unwrap();
        assert_eq!(op, l3().scale(&Expr::i()));
        let j = DiffOp::parse("-i*(x1*d2 - x2*d1) + s3/2", &Declarations::new(), &nolib).unwrap();
        let expect = &l3() + &DiffOp::sigma(3).scale(&Expr::ratio(1, 2));
        assert_eq!(j, expect);
        let printed = j.to_string();
        assert_eq!(DiffOp::parse(&printed, &Declarations::new(), &nolib).unwrap(), j, "{printed}");
    }
}
