//! Library of physical symmetry generators (hermitian normalisation).

use crate::diffop::DiffOp;
use crate::expr::{Expr, Var};
use crate::pauli::levi_civita;

fn x(a: usize) -> DiffOp {
    DiffOp::scalar(Expr::x(a))
}

/// `P0 = i dt`
pub fn p0() -> DiffOp {
    DiffOp::d(Var::T).scale(&Expr::i())
}

/// `L_a = eps_abc x_b p_c`
pub fn l(a: usize) -> DiffOp {
    let mut out = DiffOp::zero();
    for b in 1..=3 {
        for c in 1..=3 {
            let eps = levi_civita(a, b, c);
            if eps != 0 {
                out = &out + &x(b).compose(&DiffOp::p(c)).scale(&Expr::int(eps));
            }
        }
    }
    out
}

/// `J_a = L_a + s_a / 2`
pub fn j(a: usize) -> DiffOp {
    &l(a) + &DiffOp::sigma(a).scale(&Expr::ratio(1, 2))
}

/// `G_a = t P_a - x_a`
pub fn g(a: usize) -> DiffOp {
    &DiffOp::p(a).scale(&Expr::t()) - &x(a)
}

fn x_dot_p() -> DiffOp {
    let mut out = DiffOp::zero();
    for a in 1..=3 {
        out = &out + &x(a).compose(&DiffOp::p(a));
    }
    out
}

/// `D = 2t P0 - x_a p_a + 3i/2`
pub fn dilatation() -> DiffOp {
    let three_i_half = DiffOp::scalar(&Expr::ratio(3, 2) * &Expr::i());
    &(&p0().scale(&(&Expr::int(2) * &Expr::t())) - &x_dot_p()) + &three_i_half
}

/// `A = t D - t^2 P0 + r^2/2`
pub fn conformal() -> DiffOp {
    let t = Expr::t();
    let r2 = &Expr::r().powi(2) * &Expr::ratio(1, 2);
    &(&dilatation().scale(&t) - &p0().scale(&t.powi(2))) + &DiffOp::scalar(r2)
}

/// `A+(w) = exp(2wt) (P0 + w^2 r^2 - (w/2)(x_a P_a + P_a x_a))`
pub fn a_plus(w: &Expr) -> DiffOp {
    let mut sym = DiffOp::zero();
    for a in 1..=3 {
        sym = &sym + &x(a).compose(&DiffOp::p(a));
        sym = &sym + &DiffOp::p(a).compose(&x(a));
    }
    let inner = &(&p0() + &DiffOp::scalar(&w.powi(2) * &Expr::r().powi(2))) - &sym.scale(&(w / &Expr::int(2)));
    let f = Expr::mul_all([Expr::int(2), w.clone(), Expr::t()]).exp();
    inner.scale(&f)
}

/// `B+_a(w) = exp(wt)(P_a - w x_a)` for `sign = 1`, `B-_a(w) = exp(-wt)(P_a + w x_a)` for `sign = -1`.
pub fn b(sign: i64, a: usize, w: &Expr) -> DiffOp {
    let s = Expr::int(sign);
    let f = Expr::mul_all([s.clone(), w.clone(), Expr::t()]).exp();
    (&DiffOp::p(a) - &x(a).scale(&(&s * w))).scale(&f)
}

/// `s.x / r`
pub fn q_hat() -> DiffOp {
    let r = Expr::r();
    let mut out = DiffOp::zero();
    for a in 1..=3 {
        out = &out + &DiffOp::sigma(a).scale(&(&Expr::x(a) / &r));
    }
    out
}

/// `s.L + 1`
pub fn q_tilde() -> DiffOp {
    let mut out = DiffOp::identity();
    for a in 1..=3 {
        out = &out + &DiffOp::sigma(a).compose(&l(a));
    }
    out
}

/// `(s.L + 1) P` with the parity operator `P`.
pub fn q_parity() -> DiffOp {
    q_tilde().compose(&DiffOp::parity())
}

/// `J_a J_a`
pub fn j_squared() -> DiffOp {
    (1..=3).fold(DiffOp::zero(), |acc, a| &acc + &j(a).compose(&j(a)))
}

/// `s1 cos(w t) + s2 sin(w t) + c s3`
pub fn q_precessing(w: &Expr, c: &Expr) -> DiffOp {
    let wt = w * &Expr::t();
    &(&DiffOp::sigma(1).scale(&wt.cos()) + &DiffOp::sigma(2).scale(&wt.sin())) + &DiffOp::sigma(3).scale(c)
}

fn index(name: &str, prefix: &str) -> Option<usize> {
    let rest = name.strip_prefix(prefix)?;
    match rest {
        "1" => Some(1),
        "2" => Some(2),
        "3" => Some(3),
        _ => None,
    }
}

/// Names understood by the operator DSL.
pub const NAMES: &[&str] = &[
    "P0",
    "P1",
    "P2",
    "P3",
    "G1",
    "G2",
    "G3",
    "L1",
    "L2",
    "L3",
    "J1",
    "J2",
    "J3",
    "D",
    "A",
    "Aplus(w)",
    "Bp1(w)",
    "Bp2(w)",
    "Bp3(w)",
    "Bm1(w)",
    "Bm2(w)",
    "Bm3(w)",
    "Qhat",
    "Qtilde",
    "QPar",
    "Jsq",
    "Qprec(w, c)",
];

/// Resolve a generator by name, for [`DiffOp::parse`].
pub fn lookup(name: &str, args: &[Expr]) -> Option<DiffOp> {
    match (name, args) {
        ("P0", []) => Some(p0()),
        ("D", []) => Some(dilatation()),
        ("A", []) => Some(conformal()),
        ("Qhat", []) => Some(q_hat()),
        ("Qtilde", []) => Some(q_tilde()),
        ("QPar", []) => Some(q_parity()),
        ("Jsq", []) => Some(j_squared()),
        ("Aplus", [w]) => Some(a_plus(w)),
        ("Qprec", [w, c]) => Some(q_precessing(w, c)),
        (n, []) => {
            if let Some(a) = index(n, "P") {
                Some(DiffOp::p(a))
            } else if let Some(a) = index(n, "G") {
                Some(g(a))
            } else if let Some(a) = index(n, "L") {
                Some(l(a))
            } else {
                index(n, "J").map(j)
            }
        }
        (n, [w]) => {
            if let Some(a) = index(n, "Bp") {
                Some(b(1, a, w))
            } else {
                index(n, "Bm").map(|a| b(-1, a, w))
            }
        }
        _ => None,
    }
}
