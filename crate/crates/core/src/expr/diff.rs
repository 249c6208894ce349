//! Symbolic partial derivatives.

use std::collections::HashMap;

use super::{Derived, Expr, Func, Node, Var};

impl Expr {
    /// Partial derivative with respect to `v`. Total: every expression has one.
    pub fn diff(&self, v: Var) -> Expr {
        let mut memo = HashMap::new();
        diff_inner(self, v, &mut memo)
    }

    /// Mixed partial `∂t^k0 ∂1^k1 ∂2^k2 ∂3^k3`.
    pub fn diff_multi(&self, k: [u8; 4]) -> Expr {
        let mut e = self.clone();
        for (v, n) in Var::SPACETIME.iter().zip(k) {
            for _ in 0..n {
                e = e.diff(*v);
                if e.is_zero() {
                    return e;
                }
            }
        }
        e
    }

    /// Gradient `(∂1, ∂2, ∂3)`.
    pub fn grad(&self) -> [Expr; 3] {
        [self.diff(Var::X1), self.diff(Var::X2), self.diff(Var::X3)]
    }

    /// Spatial Laplacian.
    pub fn laplacian(&self) -> Expr {
        Expr::add_all((1..=3).map(|a| self.diff(Var::x(a)).diff(Var::x(a))))
    }
}

fn diff_inner(e: &Expr, v: Var, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(hit) = memo.get(&e.ptr_id()) {
        return hit.clone();
    }
    let out = match e.node() {
        Node::Const(_) | Node::Pi | Node::Param(_) => Expr::zero(),
        Node::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Atom(d) => atom_derivative(*d, v),
        Node::Pow(b, q) => {
            let db = diff_inner(b, v, memo);
            if db.is_zero() {
                Expr::zero()
            } else {
                let q1 = q - num_rational::BigRational::from_integer(1.into());
                Expr::mul_all([Expr::constant(super::Constant::real(q.clone())), b.pow(q1), db])
            }
        }
        Node::Func(f, a) => {
            let da = diff_inner(a, v, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let outer = match f {
                    Func::Exp => e.clone(),
                    Func::Ln => a.recip(),
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Arctan => (&Expr::one() + &a.powi(2)).recip(),
                };
                &outer * &da
            }
        }
        Node::Opaque { name, index, args } => {
            let mut terms = Vec::new();
            for (k, a) in args.iter().enumerate() {
                let da = diff_inner(a, v, memo);
                if da.is_zero() {
                    continue;
                }
                let mut idx = index.clone();
                idx[k] += 1;
                terms.push(&Expr::opaque(name, idx, args.clone()) * &da);
            }
            Expr::add_all(terms)
        }
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for (k, f) in fs.iter().enumerate() {
                let df = diff_inner(f, v, memo);
                if df.is_zero() {
                    continue;
                }
                let mut parts: Vec<Expr> = fs.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, g)| g.clone()).collect();
                parts.push(df);
                terms.push(Expr::mul_all(parts));
            }
            Expr::add_all(terms)
        }
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| diff_inner(t, v, memo)).collect::<Vec<_>>()),
    };
    memo.insert(e.ptr_id(), out.clone());
    out
}

fn atom_derivative(d: Derived, v: Var) -> Expr {
    let a = match v {
        Var::X1 => 1,
        Var::X2 => 2,
        Var::X3 => 3,
        Var::T | Var::Slot(_) => return Expr::zero(),
    };
    let xa = Expr::x(a);
    match d {
        Derived::R => &xa / &Expr::r(),
        Derived::Rt if a == 3 => Expr::zero(),
        Derived::Rt => &xa / &Expr::rt(),
        Derived::Phi => match a {
            1 => -(&Expr::x(2) / &Expr::rt().powi(2)),
            2 => &Expr::x(1) / &Expr::rt().powi(2),
            _ => Expr::zero(),
        },
        Derived::Theta if a == 3 => -(&Expr::rt() / &Expr::r().powi(2)),
        Derived::Theta => Expr::mul_all([xa, Expr::x(3), Expr::r().powi(-2), Expr::rt().recip()]),
        Derived::Rho if a == 3 => Expr::zero(),
        Derived::Rho => &xa / &Expr::rt().powi(2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_rule_through_opaque() {
        let f = Expr::apply("F", vec![Expr::rt(), Expr::x(3)]);
        assert_eq!(f.diff(Var::X3), Expr::opaque("F", vec![0, 1], vec![Expr::rt(), Expr::x(3)]));
        let d1 = f.diff(Var::X1);
        let expect = &Expr::opaque("F", vec![1, 0], vec![Expr::rt(), Expr::x(3)]) * &(&Expr::x(1) / &Expr::rt());
        assert_eq!(d1, expect);
    }

    #[test]
    fn parameters_and_constants_are_flat() {
        assert!(Expr::param("c").diff(Var::X1).is_zero());
        assert!(Expr::pi().diff(Var::T).is_zero());
        assert!(Expr::r().diff(Var::T).is_zero());
    }

    #[test]
    fn phi_derivative_matches_closed_form() {
        let d = Expr::phi().diff(Var::X2);
        assert_eq!(d, &Expr::x(1) / &Expr::rt().powi(2));
    }
}
