//! Printing in the DSL syntax; `parse(print(e)) == e` for canonical `e`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{Constant, Derived, Expr, Node, Var};

const ADD: u8 = 1;
const MUL: u8 = 2;
const POW: u8 = 3;
const ATOM: u8 = 4;

fn paren(s: (String, u8), need: u8) -> String {
    if s.1 < need {
        format!("({})", s.0)
    } else {
        s.0
    }
}

fn looks_negative(c: &Constant) -> bool {
    c.re.is_negative() || (c.re.is_zero() && c.im.is_negative())
}

fn fmt_exponent(q: &BigRational) -> String {
    if q.is_integer() && q.is_positive() {
        q.to_string()
    } else {
        format!("({q})")
    }
}

fn var_name(v: Var) -> String {
    match v {
        Var::T => "t".into(),
        Var::X1 => "x1".into(),
        Var::X2 => "x2".into(),
        Var::X3 => "x3".into(),
        Var::Slot(k) => format!("_u{k}"),
    }
}

pub(crate) fn atom_name(d: Derived) -> &'static str {
    match d {
        Derived::R => "r",
        Derived::Rt => "rt",
        Derived::Phi => "phi",
        Derived::Theta => "theta",
        Derived::Rho => "rho",
    }
}

/// A product `coef * factors` with negative powers moved to a denominator.
fn product(coef: &Constant, factors: &[Expr]) -> (String, u8) {
    let negative = looks_negative(coef);
    let coef = if negative { -coef } else { coef.clone() };
    let mut num = Vec::new();
    let mut den = Vec::new();
    for f in factors {
        match f.node() {
            Node::Pow(b, q) if q.is_negative() => {
                let flipped = -q;
                if num_traits::One::is_one(&flipped) {
                    den.push(b.clone());
                } else {
                    den.push(Expr::raw(Node::Pow(b.clone(), flipped)));
                }
            }
            _ => num.push(f.clone()),
        }
    }
    let mut parts: Vec<String> = Vec::new();
    if !coef.is_one() || num.is_empty() {
        let c = Expr::constant(coef);
        parts.push(paren(render(&c), MUL));
    }
    for f in &num {
        parts.push(paren(render(f), MUL + 1));
    }
    let mut s = parts.join("*");
    if !den.is_empty() {
        let d = if den.len() == 1 {
            paren(render(&den[0]), POW)
        } else {
            format!("({})", den.iter().map(|f| paren(render(f), MUL + 1)).collect::<Vec<_>>().join("*"))
        };
        s = format!("{s}/{d}");
    }
    if negative {
        (format!("-{s}"), MUL)
    } else {
        (s, MUL)
    }
}

fn render(e: &Expr) -> (String, u8) {
    match e.node() {
        Node::Const(c) => {
            let s = c.to_string();
            let prec = if looks_negative(c) && c.im.is_zero() {
                MUL
            } else if c.is_real() && c.re.is_integer() {
                ATOM
            } else if c.is_real() {
                MUL
            } else if c.re.is_zero() && (c.im == BigRational::from_integer(1.into()) || c.im == BigRational::from_integer((-1).into())) {
                if c.im.is_negative() {
                    MUL
                } else {
                    ATOM
                }
            } else if c.re.is_zero() {
                MUL
            } else {
                ATOM
            };
            (s, prec)
        }
        Node::Pi => ("pi".into(), ATOM),
        Node::Param(p) => (p.to_string(), ATOM),
        Node::Var(v) => (var_name(*v), ATOM),
        Node::Atom(d) => (atom_name(*d).into(), ATOM),
        Node::Pow(b, q) => {
            if q.is_negative() {
                return product(&Constant::one(), std::slice::from_ref(e));
            }
            (format!("{}^{}", paren(render(b), ATOM), fmt_exponent(q)), POW)
        }
        Node::Func(f, a) => (format!("{}({})", f.name(), render(a).0), ATOM),
        Node::Opaque { name, index, args } => {
            let args = args.iter().map(|a| render(a).0).collect::<Vec<_>>().join(", ");
            if index.iter().all(|&k| k == 0) {
                (format!("{name}({args})"), ATOM)
            } else {
                let idx = index.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
                (format!("{name}[{idx}]({args})"), ATOM)
            }
        }
        Node::Mul(_) => {
            let (c, rest) = e.split_coefficient();
            let factors = match rest.node() {
                Node::Mul(fs) => fs.clone(),
                _ => vec![rest.clone()],
            };
            product(&c, &factors)
        }
        Node::Add(ts) => {
            let mut s = String::new();
            for (k, t) in ts.iter().enumerate() {
                let (c, _) = t.split_coefficient();
                if k == 0 {
                    s.push_str(&paren(render(t), ADD + 1));
                } else if looks_negative(&c) {
                    s.push_str(" - ");
                    s.push_str(&paren(render(&-t), ADD + 1));
                } else {
                    s.push_str(" + ");
                    s.push_str(&paren(render(t), ADD + 1));
                }
            }
            (s, ADD)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, Declarations};

    fn roundtrip(src: &str) {
        let decls = Declarations::new().param("a").param("kappa").opaque("F", 2);
        let e = parse_expr(src, &decls).unwrap();
        let printed = e.to_string();
        let back = parse_expr(&printed, &decls).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(back, e, "{src} printed as {printed}");
    }

    #[test]
    fn samples_roundtrip() {
        for src in [
            "x1^2 + x2^2",
            "-x1/2 + 3/4*x2",
            "kappa*arctan(x2/x1)",
            "i*x1 - i*x2 + (1/2 - 2*i)*x3",
            "F[1,0](rt, x3)/r^3 - a",
            "exp(-i*a*t)*sin(phi)^2",
            "sqrt(x1 + x2)^3 + (x1 - x2)^(-1/2)",
            "-1",
            "-i",
            "r^(1/2)^(1/3)",
            "1/(x1*x2) + 1/(x1 + x2)^2",
            "-(x1 + x2)*x3",
            "ln(r)/(2*a)",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn readable_forms() {
        let e: Expr = "x2/(x1^2 + x2^2)".parse().unwrap();
        assert_eq!(e.to_string().matches('/').count(), 1);
        let e: Expr = "x1 - x2".parse().unwrap();
        assert!(e.to_string().contains(" - "));
    }
}
