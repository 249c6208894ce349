//! Numeric evaluation of expressions at a point, and derivative jets.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex;
use num_traits::{ToPrimitive, Zero};

use super::constant::rat_to;
use super::{Derived, Expr, Func, Node, Realization, Var};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("singular point: {0}")]
    Singular(String),
    #[error("no realization for opaque function `{0}`")]
    MissingRealization(String),
    #[error("no value for parameter `{0}`")]
    MissingParam(String),
    #[error("opaque function `{0}` applied to {1} arguments")]
    Arity(String, usize),
}

/// A space-time point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<T> {
    pub t: T,
    pub x: [T; 3],
}

impl<T: Real> Point<T> {
    pub fn new(t: T, x: [T; 3]) -> Self {
        Point { t, x }
    }

    pub fn origin() -> Self {
        Point { t: T::zero(), x: [T::zero(); 3] }
    }

    pub fn coord(&self, v: Var) -> T {
        match v {
            Var::T => self.t,
            Var::X1 => self.x[0],
            Var::X2 => self.x[1],
            Var::X3 => self.x[2],
            Var::Slot(_) => T::nan(),
        }
    }
}

/// Evaluates expressions at one point, memoising shared sub-trees.
///
/// Alongside each value it tracks the largest magnitude met anywhere in the
/// sub-tree, which the zero test uses as its cancellation scale.
pub struct Evaluator<'a, T> {
    point: Point<T>,
    real: &'a Realization<T>,
    slots: Vec<Complex<T>>,
    memo: HashMap<usize, (Expr, Complex<T>, T)>,
}

impl<'a, T: Real> Evaluator<'a, T> {
    pub fn new(point: Point<T>, real: &'a Realization<T>) -> Self {
        Evaluator { point, real, slots: Vec::new(), memo: HashMap::new() }
    }

    pub fn point(&self) -> &Point<T> {
        &self.point
    }

    pub(crate) fn set_slots(&mut self, slots: Vec<Complex<T>>) {
        self.slots = slots;
        self.memo.clear();
    }

    pub fn eval(&mut self, e: &Expr) -> Result<Complex<T>, EvalError> {
        self.eval_scaled(e).map(|(v, _)| v)
    }

    /// Value together with the largest intermediate magnitude.
    pub fn eval_scaled(&mut self, e: &Expr) -> Result<(Complex<T>, T), EvalError> {
        if let Some((_, v, s)) = self.memo.get(&e.ptr_id()) {
            return Ok((*v, *s));
        }
        let re = |v: T| Complex::new(v, T::zero());
        let (value, child_scale) = match e.node() {
            Node::Const(c) => (c.to_complex(), T::zero()),
            Node::Pi => (re(T::lit(std::f64::consts::PI)), T::zero()),
            Node::Param(p) => {
                let v = self.real.params.get(p.as_ref()).ok_or_else(|| EvalError::MissingParam(p.to_string()))?;
                (re(*v), T::zero())
            }
            Node::Var(Var::Slot(k)) => {
                let v = self.slots.get(*k as usize).copied().ok_or_else(|| EvalError::Singular(format!("slot {k} unbound")))?;
                (v, T::zero())
            }
            Node::Var(v) => (re(self.point.coord(*v)), T::zero()),
            Node::Atom(d) => (re(self.atom(*d)?), T::zero()),
            Node::Pow(b, q) => {
                let (bv, bs) = self.eval_scaled(b)?;
                let out = if q.is_integer() {
                    let n = q.to_integer().to_i32().expect("small exponent");
                    if n < 0 && bv.norm() == T::zero() {
                        return Err(EvalError::Singular(format!("division by zero in {e}")));
                    }
                    bv.powi(n)
                } else {
                    if bv.im == T::zero() && bv.re <= T::zero() {
                        return Err(EvalError::Singular(format!("fractional power of non-positive base in {e}")));
                    }
                    bv.powf(rat_to::<T>(q))
                };
                (out, bs)
            }
            Node::Func(f, a) => {
                let (av, s) = self.eval_scaled(a)?;
                let out = match f {
                    Func::Exp => av.exp(),
                    Func::Ln => {
                        if av.im == T::zero() && av.re <= T::zero() {
                            return Err(EvalError::Singular(format!("logarithm of non-positive value in {e}")));
                        }
                        av.ln()
                    }
                    Func::Sin => av.sin(),
                    Func::Cos => av.cos(),
                    Func::Arctan => av.atan(),
                };
                (out, s)
            }
            Node::Opaque { name, index, args } => {
                let f = self.real.functions.get(name.as_ref()).ok_or_else(|| EvalError::MissingRealization(name.to_string()))?;
                if f.arity() != args.len() {
                    return Err(EvalError::Arity(name.to_string(), args.len()));
                }
                let mut us = Vec::with_capacity(args.len());
                let mut s = T::zero();
                for a in args {
                    let (v, sa) = self.eval_scaled(a)?;
                    us.push(v);
                    s = s.max(sa).max(v.norm());
                }
                (f.eval(index, &us)?, s)
            }
            Node::Mul(fs) => {
                let mut acc = Complex::new(T::one(), T::zero());
                let mut s = T::zero();
                for f in fs {
                    let (v, sf) = self.eval_scaled(f)?;
                    acc *= v;
                    s = s.max(sf).max(v.norm());
                }
                (acc, s)
            }
            Node::Add(ts) => {
                let mut acc = Complex::new(T::zero(), T::zero());
                let mut s = T::zero();
                for t in ts {
                    let (v, st) = self.eval_scaled(t)?;
                    acc += v;
                    s = s.max(st).max(v.norm());
                }
                (acc, s)
            }
        };
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(EvalError::Singular(format!("non-finite value in {e}")));
        }
        let scale = child_scale.max(value.norm());
        self.memo.insert(e.ptr_id(), (e.clone(), value, scale));
        Ok((value, scale))
    }

    fn atom(&self, d: Derived) -> Result<T, EvalError> {
        let [x1, x2, x3] = self.point.x;
        let rt = (x1 * x1 + x2 * x2).sqrt();
        let tiny = T::epsilon().sqrt();
        match d {
            Derived::R => {
                let r = (rt * rt + x3 * x3).sqrt();
                if r < tiny {
                    return Err(EvalError::Singular("r = 0".into()));
                }
                Ok(r)
            }
            Derived::Rt | Derived::Rho | Derived::Theta if rt < tiny => Err(EvalError::Singular("rt = 0".into())),
            Derived::Rt => Ok(rt),
            Derived::Rho => Ok(rt.ln()),
            Derived::Theta => Ok(rt.atan2(x3)),
            Derived::Phi => {
                if x1.abs() < tiny {
                    return Err(EvalError::Singular("x1 = 0 for phi".into()));
                }
                Ok((x2 / x1).atan())
            }
        }
    }
}

/// All partial derivatives up to a total order, indexed by `(k_t, k_1, k_2, k_3)`.
#[derive(Clone, Debug)]
pub struct Jet<T> {
    pub order: u8,
    pub entries: BTreeMap<[u8; 4], Complex<T>>,
}

impl<T: Real> Jet<T> {
    pub fn get(&self, k: [u8; 4]) -> Complex<T> {
        self.entries.get(&k).copied().unwrap_or_else(Complex::zero)
    }
}

/// Evaluate all partials of `e` up to `order` (at most 4) at `p`.
pub fn evaluate_jet<T: Real>(e: &Expr, p: Point<T>, order: u8, real: &Realization<T>) -> Result<Jet<T>, EvalError> {
    assert!(order <= 4, "jet order above 4 is not supported");
    let mut derivs: BTreeMap<[u8; 4], Expr> = BTreeMap::new();
    derivs.insert([0; 4], e.clone());
    let mut frontier = vec![[0u8; 4]];
    for _ in 0..order {
        let mut next = Vec::new();
        for k in &frontier {
            let base = derivs[k].clone();
            for (j, v) in Var::SPACETIME.iter().enumerate() {
                let mut k2 = *k;
                k2[j] += 1;
                if derivs.contains_key(&k2) {
                    continue;
                }
                derivs.insert(k2, base.diff(*v));
                next.push(k2);
            }
        }
        frontier = next;
    }
    let mut ev = Evaluator::new(p, real);
    let mut entries = BTreeMap::new();
    for (k, d) in derivs {
        entries.insert(k, ev.eval(&d)?);
    }
    Ok(Jet { order, entries })
}
