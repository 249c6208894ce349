//! Symbolic scalar expressions over the coordinates `t, x1, x2, x3`.
//!
//! Expressions are immutable, reference-counted trees. Every constructor
//! returns a canonical form: sums and products are flattened, like terms and
//! powers are collected, constants are folded, and operands are sorted. The
//! canonical form is not a decision procedure for zero; [`zero::is_zero`]
//! finishes the job numerically.
//!
//! Derived atoms (`r`, `rt`, `phi`, `theta`, `rho`) stay symbolic and are
//! differentiated through their definitions; [`Expr::expand_atoms`] rewrites
//! them into coordinate form on request.

mod constant;
mod diff;
pub mod eval;
pub mod parse;
mod print;
pub mod realize;
pub mod zero;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) use constant::rat;
pub use constant::Constant;
pub use eval::{evaluate_jet, EvalError, Evaluator, Jet, Point};
pub use parse::{parse_expr, Declarations, ParseError};
pub use realize::{OpaqueRealization, Realization};
pub use zero::{is_zero, ZeroTest, ZeroVerdict};

/// Independent variables. `Slot(k)` is the k-th argument of an opaque
/// function realization and never appears in physical expressions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Var {
    T,
    X1,
    X2,
    X3,
    Slot(u8),
}

impl Var {
    /// Spatial coordinate by index 1..=3.
    pub fn x(a: usize) -> Var {
        match a {
            1 => Var::X1,
            2 => Var::X2,
            3 => Var::X3,
            _ => panic!("spatial index {a} out of range"),
        }
    }

    pub fn is_spatial(self) -> bool {
        matches!(self, Var::X1 | Var::X2 | Var::X3)
    }

    pub const SPACETIME: [Var; 4] = [Var::T, Var::X1, Var::X2, Var::X3];
}

/// Atoms defined in terms of the spatial coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Derived {
    /// `sqrt(x1^2 + x2^2 + x3^2)`
    R,
    /// `sqrt(x1^2 + x2^2)`
    Rt,
    /// `arctan(x2/x1)`
    Phi,
    /// polar angle, `pi/2 - arctan(x3/rt)`
    Theta,
    /// `ln(rt)`
    Rho,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Arctan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Arctan => "arctan",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Node {
    Const(Constant),
    Pi,
    Param(Arc<str>),
    Var(Var),
    Atom(Derived),
    /// `base^q` for a rational `q` other than 0 and 1.
    Pow(Expr, BigRational),
    Func(Func, Expr),
    /// Opaque function application carrying its partial-derivative multi-index.
    Opaque {
        name: Arc<str>,
        index: Vec<u8>,
        args: Vec<Expr>,
    },
    Mul(Vec<Expr>),
    Add(Vec<Expr>),
}

struct Inner {
    node: Node,
    hash: u64,
}

/// A canonical symbolic expression; cheap to clone.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.node == other.0.node)
    }
}

impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if self == other {
            return std::cmp::Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({self})")
    }
}

fn node_hash(node: &Node) -> u64 {
    // SipHash with fixed keys, so hashes (and therefore term order) are reproducible.
    #[allow(deprecated)]
    let mut h = std::hash::SipHasher::new();
    node.hash(&mut h);
    h.finish()
}

fn is_integer(q: &BigRational) -> bool {
    q.is_integer()
}

impl Expr {
    fn raw(node: Node) -> Expr {
        let hash = node_hash(&node);
        Expr(Arc::new(Inner { node, hash }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub(crate) fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    // ---- leaves -------------------------------------------------------

    pub fn constant(c: Constant) -> Expr {
        Expr::raw(Node::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(Constant::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::constant(Constant::ratio(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::constant(Constant::i())
    }

    pub fn pi() -> Expr {
        Expr::raw(Node::Pi)
    }

    pub fn param(name: &str) -> Expr {
        Expr::raw(Node::Param(Arc::from(name)))
    }

    pub fn var(v: Var) -> Expr {
        Expr::raw(Node::Var(v))
    }

    pub fn t() -> Expr {
        Expr::var(Var::T)
    }

    /// Spatial coordinate `x_a`, `a` in 1..=3.
    pub fn x(a: usize) -> Expr {
        Expr::var(Var::x(a))
    }

    pub fn atom(d: Derived) -> Expr {
        Expr::raw(Node::Atom(d))
    }

    pub fn r() -> Expr {
        Expr::atom(Derived::R)
    }

    pub fn rt() -> Expr {
        Expr::atom(Derived::Rt)
    }

    pub fn phi() -> Expr {
        Expr::atom(Derived::Phi)
    }

    pub fn theta() -> Expr {
        Expr::atom(Derived::Theta)
    }

    pub fn rho() -> Expr {
        Expr::atom(Derived::Rho)
    }

    /// Opaque application `name^(index)(args)`.
    pub fn opaque(name: &str, index: Vec<u8>, args: Vec<Expr>) -> Expr {
        assert_eq!(index.len(), args.len(), "derivative index arity mismatch");
        Expr::raw(Node::Opaque { name: Arc::from(name), index, args })
    }

    /// Opaque application without derivatives.
    pub fn apply(name: &str, args: Vec<Expr>) -> Expr {
        let n = args.len();
        Expr::opaque(name, vec![0; n], args)
    }

    // ---- queries ------------------------------------------------------

    pub fn as_const(&self) -> Option<&Constant> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Structural zero (the canonical form of an identically vanishing sum
    /// need not be structurally zero; see [`zero::is_zero`]).
    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(Constant::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(Constant::is_one)
    }

    /// Split off the leading constant factor: `c * rest`.
    pub fn split_coefficient(&self) -> (Constant, Expr) {
        match self.node() {
            Node::Const(c) => (c.clone(), Expr::one()),
            Node::Mul(fs) => match fs[0].node() {
                Node::Const(c) => {
                    let rest = if fs.len() == 2 { fs[1].clone() } else { Expr::raw(Node::Mul(fs[1..].to_vec())) };
                    (c.clone(), rest)
                }
                _ => (Constant::one(), self.clone()),
            },
            _ => (Constant::one(), self.clone()),
        }
    }

    /// Visit every distinct sub-expression once (pre-order).
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        let mut seen = std::collections::HashSet::new();
        self.visit_inner(f, &mut seen);
    }

    fn visit_inner(&self, f: &mut impl FnMut(&Expr), seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(self.ptr_id()) {
            return;
        }
        f(self);
        match self.node() {
            Node::Pow(b, _) | Node::Func(_, b) => b.visit_inner(f, seen),
            Node::Opaque { args, .. } => args.iter().for_each(|a| a.visit_inner(f, seen)),
            Node::Mul(xs) | Node::Add(xs) => xs.iter().for_each(|a| a.visit_inner(f, seen)),
            _ => {}
        }
    }

    /// Names of parameters appearing in the expression.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Node::Param(p) = e.node() {
                out.insert(p.to_string());
            }
        });
        out
    }

    /// Opaque function names with their arities.
    pub fn opaques(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.visit(&mut |e| {
            if let Node::Opaque { name, args, .. } = e.node() {
                out.insert(name.to_string(), args.len());
            }
        });
        out
    }

    /// Whether the expression (through atoms) can depend on `v`.
    pub fn depends_on(&self, v: Var) -> bool {
        let mut hit = false;
        self.visit(&mut |e| match e.node() {
            Node::Var(w) if *w == v => hit = true,
            Node::Atom(d) if v.is_spatial() => {
                let spatial = match d {
                    Derived::R | Derived::Theta => true,
                    Derived::Rt | Derived::Phi | Derived::Rho => v != Var::X3,
                };
                hit |= spatial;
            }
            _ => {}
        });
        hit
    }

    /// Number of distinct nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    // ---- arithmetic ---------------------------------------------------

    pub fn add_all(terms: impl IntoIterator<Item = Expr>) -> Expr {
        let mut flat: Vec<Expr> = Vec::new();
        for t in terms {
            match t.node() {
                Node::Add(ts) => flat.extend(ts.iter().cloned()),
                _ => flat.push(t),
            }
        }
        let mut c0 = Constant::zero();
        let mut acc: BTreeMap<Expr, Constant> = BTreeMap::new();
        for t in flat {
            if let Node::Const(c) = t.node() {
                c0 = &c0 + c;
                continue;
            }
            let (c, rest) = t.split_coefficient();
            let slot = acc.entry(rest).or_insert_with(Constant::zero);
            *slot = &*slot + &c;
        }
        acc.retain(|_, c| !c.is_zero());
        pythagoras(&mut acc, &mut c0);
        let mut out: Vec<Expr> = Vec::with_capacity(acc.len() + 1);
        if !c0.is_zero() {
            out.push(Expr::constant(c0));
        }
        for (rest, c) in acc {
            out.push(scale_raw(&rest, c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => {
                out.sort();
                Expr::raw(Node::Add(out))
            }
        }
    }

    pub fn mul_all(factors: impl IntoIterator<Item = Expr>) -> Expr {
        Expr::mul_vec(factors.into_iter().collect())
    }

    fn mul_vec(factors: Vec<Expr>) -> Expr {
        let mut c = Constant::one();
        let mut powers: BTreeMap<Expr, BigRational> = BTreeMap::new();
        let mut exp_args: Vec<Expr> = Vec::new();
        let mut stack: Vec<Expr> = factors;
        while let Some(f) = stack.pop() {
            match f.node() {
                Node::Const(k) => c = &c * k,
                Node::Mul(fs) => stack.extend(fs.iter().cloned()),
                Node::Pow(b, q) => {
                    let slot = powers.entry(b.clone()).or_insert_with(BigRational::zero);
                    *slot += q;
                }
                Node::Func(Func::Exp, a) => exp_args.push(a.clone()),
                _ => {
                    let slot = powers.entry(f.clone()).or_insert_with(BigRational::zero);
                    *slot += BigRational::one();
                }
            }
            if c.is_zero() {
                return Expr::zero();
            }
        }
        if !exp_args.is_empty() {
            let combined = Expr::func(Func::Exp, Expr::add_all(exp_args));
            match combined.node() {
                Node::Func(Func::Exp, _) => {
                    let slot = powers.entry(combined.clone()).or_insert_with(BigRational::zero);
                    *slot += BigRational::one();
                }
                _ => {
                    let mut again = vec![Expr::constant(c)];
                    again.extend(powers.into_iter().map(|(b, q)| pow_raw(b, q)));
                    again.push(combined);
                    return Expr::mul_vec(again);
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(powers.len() + 1);
        for (b, q) in powers {
            if q.is_zero() {
                continue;
            }
            out.push(pow_raw(b, q));
        }
        // a pow_raw may have produced a constant (never for non-constant bases) or product;
        // both are excluded by construction, so just assemble.
        if out.is_empty() {
            return Expr::constant(c);
        }
        if out.len() == 1 {
            if c.is_one() {
                return out.pop().unwrap();
            }
            if let Node::Add(ts) = out[0].node() {
                return Expr::add_all(ts.iter().map(|t| Expr::mul_all([Expr::constant(c.clone()), t.clone()])));
            }
        }
        out.sort();
        if !c.is_one() {
            out.insert(0, Expr::constant(c));
        }
        Expr::raw(Node::Mul(out))
    }

    /// `self^q` for rational `q`.
    pub fn pow(&self, q: BigRational) -> Expr {
        if q.is_zero() {
            return Expr::one();
        }
        if q.is_one() {
            return self.clone();
        }
        match self.node() {
            Node::Const(c) => {
                if is_integer(&q) {
                    let n = q.to_integer().to_i64().expect("small exponent");
                    match c.powi(n) {
                        Some(v) => Expr::constant(v),
                        None => panic!("zero raised to a negative power"),
                    }
                } else if c.is_one() {
                    Expr::one()
                } else {
                    Expr::raw(Node::Pow(self.clone(), q))
                }
            }
            Node::Pow(b, p) if is_integer(&q) => b.pow(p * &q),
            Node::Mul(fs) if is_integer(&q) => Expr::mul_all(fs.iter().map(|f| f.pow(q.clone()))),
            Node::Func(Func::Exp, a) if is_integer(&q) => Expr::func(Func::Exp, Expr::mul_all([Expr::constant(Constant::real(q)), a.clone()])),
            _ => Expr::raw(Node::Pow(self.clone(), q)),
        }
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn sqrt(&self) -> Expr {
        self.pow(rat(1, 2))
    }

    pub fn recip(&self) -> Expr {
        self.powi(-1)
    }

    /// `self^e` for a symbolic exponent; falls back to `exp(e*ln(self))`.
    pub fn pow_expr(&self, e: &Expr) -> Expr {
        if let Some(c) = e.as_const() {
            if let Some(q) = c.as_rational() {
                return self.pow(q.clone());
            }
        }
        Expr::func(Func::Exp, e * &Expr::func(Func::Ln, self.clone()))
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        match f {
            Func::Exp => {
                if a.is_zero() {
                    return Expr::one();
                }
                match a.node() {
                    Node::Func(Func::Ln, b) => return b.clone(),
                    Node::Mul(fs) if fs.len() == 2 => {
                        if let (Node::Const(c), Node::Func(Func::Ln, b)) = (fs[0].node(), fs[1].node()) {
                            if let Some(q) = c.as_rational() {
                                return b.pow(q.clone());
                            }
                        }
                    }
                    _ => {}
                }
            }
            Func::Ln => {
                if a.is_one() {
                    return Expr::zero();
                }
                match a.node() {
                    Node::Func(Func::Exp, b) => return b.clone(),
                    Node::Atom(Derived::Rt) => return Expr::rho(),
                    Node::Pow(b, q) if matches!(b.node(), Node::Atom(Derived::R | Derived::Rt)) => {
                        return Expr::mul_all([Expr::constant(Constant::real(q.clone())), Expr::func(Func::Ln, b.clone())]);
                    }
                    _ => {}
                }
            }
            Func::Sin | Func::Arctan => {
                if a.is_zero() {
                    return Expr::zero();
                }
            }
            Func::Cos => {
                if a.is_zero() {
                    return Expr::one();
                }
            }
        }
        Expr::raw(Node::Func(f, a))
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self.clone())
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Func::Ln, self.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self.clone())
    }

    pub fn arctan(&self) -> Expr {
        Expr::func(Func::Arctan, self.clone())
    }

    pub fn scale(&self, c: &Constant) -> Expr {
        Expr::mul_all([Expr::constant(c.clone()), self.clone()])
    }

    // ---- structural rewrites -----------------------------------------

    /// Rebuild bottom-up through the canonical constructors, letting `leaf`
    /// replace leaves (parameters, variables, atoms, constants).
    pub fn rebuild(&self, leaf: &mut dyn FnMut(&Expr) -> Option<Expr>) -> Expr {
        let mut memo: HashMap<usize, Expr> = HashMap::new();
        self.rebuild_inner(leaf, &mut memo)
    }

    fn rebuild_inner(&self, leaf: &mut dyn FnMut(&Expr) -> Option<Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(hit) = memo.get(&self.ptr_id()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Const(_) | Node::Pi | Node::Param(_) | Node::Var(_) | Node::Atom(_) => leaf(self).unwrap_or_else(|| self.clone()),
            Node::Pow(b, q) => b.rebuild_inner(leaf, memo).pow(q.clone()),
            Node::Func(f, a) => Expr::func(*f, a.rebuild_inner(leaf, memo)),
            Node::Opaque { name, index, args } => {
                Expr::raw(Node::Opaque { name: name.clone(), index: index.clone(), args: args.iter().map(|a| a.rebuild_inner(leaf, memo)).collect() })
            }
            Node::Mul(fs) => Expr::mul_all(fs.iter().map(|f| f.rebuild_inner(leaf, memo)).collect::<Vec<_>>()),
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.rebuild_inner(leaf, memo)).collect::<Vec<_>>()),
        };
        memo.insert(self.ptr_id(), out.clone());
        out
    }

    /// Re-run canonicalisation over the whole tree.
    pub fn simplify(&self) -> Expr {
        self.rebuild(&mut |_| None)
    }

    /// Substitute variables. Derived atoms are expanded first when a spatial
    /// coordinate is replaced.
    pub fn subst(&self, map: &HashMap<Var, Expr>) -> Expr {
        let spatial = map.keys().any(|v| v.is_spatial());
        let base = if spatial { self.expand_atoms() } else { self.clone() };
        base.rebuild(&mut |e| match e.node() {
            Node::Var(v) => map.get(v).cloned(),
            _ => None,
        })
    }

    /// Substitute named parameters.
    pub fn subst_params(&self, map: &HashMap<String, Expr>) -> Expr {
        self.rebuild(&mut |e| match e.node() {
            Node::Param(p) => map.get(p.as_ref()).cloned(),
            _ => None,
        })
    }

    /// Replace derived atoms by their coordinate definitions.
    pub fn expand_atoms(&self) -> Expr {
        self.rebuild(&mut |e| match e.node() {
            Node::Atom(d) => Some(atom_definition(*d)),
            _ => None,
        })
    }

    /// Spatial reflection `x -> -x`.
    pub fn reflect(&self) -> Expr {
        self.rebuild(&mut |e| match e.node() {
            Node::Var(v) if v.is_spatial() => Some(-e),
            Node::Atom(Derived::Theta) => Some(&Expr::pi() - e),
            _ => None,
        })
    }

    /// Complex conjugate, treating coordinates, parameters and opaque functions as real.
    pub fn conj(&self) -> Expr {
        self.rebuild(&mut |e| match e.node() {
            Node::Const(c) if !c.is_real() => Some(Expr::constant(c.conj())),
            _ => None,
        })
    }

    /// Distribute products over sums (and positive integer powers of sums).
    pub fn expand(&self) -> Expr {
        let mut memo = HashMap::new();
        self.expand_inner(&mut memo)
    }

    fn expand_inner(&self, memo: &mut HashMap<usize, (Expr, Expr)>) -> Expr {
        if let Some((_, hit)) = memo.get(&self.ptr_id()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.expand_inner(memo)).collect::<Vec<_>>()),
            Node::Mul(fs) => {
                let mut acc = Expr::one();
                for f in fs {
                    acc = distribute(&acc, &f.expand_inner(memo));
                }
                acc
            }
            Node::Pow(b, q) if is_integer(q) && q.is_positive() && q.to_integer() <= BigInt::from(8) => {
                let be = b.expand_inner(memo);
                if matches!(be.node(), Node::Add(_)) {
                    let n = q.to_integer().to_i64().unwrap();
                    let mut acc = Expr::one();
                    for _ in 0..n {
                        acc = distribute(&acc, &be);
                    }
                    acc
                } else {
                    be.pow(q.clone())
                }
            }
            Node::Pow(b, q) => b.expand_inner(memo).pow(q.clone()),
            Node::Func(f, a) => Expr::func(*f, a.expand_inner(memo)),
            Node::Opaque { name, index, args } => {
                Expr::raw(Node::Opaque { name: name.clone(), index: index.clone(), args: args.iter().map(|a| a.expand_inner(memo)).collect() })
            }
            _ => self.clone(),
        };
        memo.insert(self.ptr_id(), (self.clone(), out.clone()));
        out
    }
}

/// Product of two expanded expressions, distributed.
fn distribute(a: &Expr, b: &Expr) -> Expr {
    let parts = |e: &Expr| match e.node() {
        Node::Add(ts) => ts.clone(),
        _ => vec![e.clone()],
    };
    let (pa, pb) = (parts(a), parts(b));
    let mut terms = Vec::with_capacity(pa.len() * pb.len());
    for x in &pa {
        for y in &pb {
            terms.push(Expr::mul_all([x.clone(), y.clone()]));
        }
    }
    Expr::add_all(terms)
}

/// Coordinate form of a derived atom.
pub fn atom_definition(d: Derived) -> Expr {
    let x1 = Expr::x(1);
    let x2 = Expr::x(2);
    let x3 = Expr::x(3);
    let rt2 = Expr::add_all([x1.powi(2), x2.powi(2)]);
    match d {
        Derived::R => Expr::add_all([x1.powi(2), x2.powi(2), x3.powi(2)]).sqrt(),
        Derived::Rt => rt2.sqrt(),
        Derived::Phi => (&x2 / &x1).arctan(),
        Derived::Theta => &(&Expr::pi() / &Expr::int(2)) - &(&x3 / &rt2.sqrt()).arctan(),
        Derived::Rho => rt2.sqrt().ln(),
    }
}

fn pow_raw(b: Expr, q: BigRational) -> Expr {
    if q.is_one() {
        b
    } else {
        Expr::raw(Node::Pow(b, q))
    }
}

fn scale_raw(rest: &Expr, c: Constant) -> Expr {
    if rest.is_one() {
        return Expr::constant(c);
    }
    if c.is_one() {
        return rest.clone();
    }
    match rest.node() {
        Node::Mul(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::constant(c));
            v.extend(fs.iter().cloned());
            Expr::raw(Node::Mul(v))
        }
        Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.scale(&c))),
        _ => Expr::raw(Node::Mul(vec![Expr::constant(c), rest.clone()])),
    }
}

/// Factor `sin(u)^2 * m` out of a monomial, returning `(u, m)`.
fn split_trig_square(e: &Expr, which: Func) -> Option<(Expr, Expr)> {
    let two = BigRational::from_integer(BigInt::from(2));
    let is_sq = |f: &Expr| match f.node() {
        Node::Pow(b, q) if *q == two => match b.node() {
            Node::Func(g, u) if *g == which => Some(u.clone()),
            _ => None,
        },
        _ => None,
    };
    if let Some(u) = is_sq(e) {
        return Some((u, Expr::one()));
    }
    if let Node::Mul(fs) = e.node() {
        for (k, f) in fs.iter().enumerate() {
            if let Some(u) = is_sq(f) {
                let rest: Vec<Expr> = fs.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, g)| g.clone()).collect();
                return Some((u, Expr::mul_all(rest)));
            }
        }
    }
    None
}

/// `c*m*sin(u)^2 + c*m*cos(u)^2 -> c*m`.
fn pythagoras(acc: &mut BTreeMap<Expr, Constant>, c0: &mut Constant) {
    loop {
        let mut hit: Option<(Expr, Expr, Expr, Constant)> = None;
        for (k, c) in acc.iter() {
            if let Some((u, m)) = split_trig_square(k, Func::Sin) {
                let partner = Expr::mul_all([u.cos().powi(2), m.clone()]);
                if acc.get(&partner) == Some(c) {
                    hit = Some((k.clone(), partner, m, c.clone()));
                    break;
                }
            }
        }
        let Some((k, partner, m, c)) = hit else { return };
        acc.remove(&k);
        acc.remove(&partner);
        if m.is_one() {
            *c0 = &*c0 + &c;
        } else {
            let (mc, mrest) = m.split_coefficient();
            let slot = acc.entry(mrest).or_insert_with(Constant::zero);
            *slot = &*slot + &(&mc * &c);
            if slot.is_zero() {
                let key = acc.iter().find(|(_, v)| v.is_zero()).map(|(k, _)| k.clone());
                if let Some(key) = key {
                    acc.remove(&key);
                }
            }
        }
    }
}

// ---- operator sugar ----------------------------------------------------

impl ops::Add for &Expr {
    type Output = Expr;
    fn add(self, o: &Expr) -> Expr {
        Expr::add_all([self.clone(), o.clone()])
    }
}

impl ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, o: &Expr) -> Expr {
        Expr::add_all([self.clone(), -o])
    }
}

impl ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, o: &Expr) -> Expr {
        Expr::mul_all([self.clone(), o.clone()])
    }
}

impl ops::Div for &Expr {
    type Output = Expr;
    fn div(self, o: &Expr) -> Expr {
        Expr::mul_all([self.clone(), o.recip()])
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::mul_all([Expr::int(-1), self.clone()])
    }
}

macro_rules! owned_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl ops::$tr for Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr { (&self).$m(&o) }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, o: &Expr) -> Expr { (&self).$m(o) }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, o: Expr) -> Expr { self.$m(&o) }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}
