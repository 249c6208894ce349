//! 2x2 matrix expressions in the Pauli basis `{s0, s1, s2, s3}`.

use std::fmt;
use std::ops;

use num_complex::Complex;

use crate::expr::{EvalError, Evaluator, Expr, Var, ZeroTest, ZeroVerdict};
use crate::scalar::Real;

/// `c0 s0 + c1 s1 + c2 s2 + c3 s3` with scalar-expression coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PauliExpr {
    pub c: [Expr; 4],
}

/// Levi-Civita symbol on indices 1..=3.
pub fn levi_civita(a: usize, b: usize, c: usize) -> i64 {
    match (a, b, c) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (3, 2, 1) | (1, 3, 2) | (2, 1, 3) => -1,
        _ => 0,
    }
}

impl PauliExpr {
    pub fn new(c: [Expr; 4]) -> Self {
        PauliExpr { c }
    }

    pub fn zero() -> Self {
        PauliExpr { c: [Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero()] }
    }

    pub fn identity() -> Self {
        PauliExpr::scalar(Expr::one())
    }

    pub fn scalar(e: Expr) -> Self {
        PauliExpr { c: [e, Expr::zero(), Expr::zero(), Expr::zero()] }
    }

    /// Basis matrix `s_a`, `a` in 0..=3.
    pub fn sigma(a: usize) -> Self {
        let mut p = PauliExpr::zero();
        p.c[a] = Expr::one();
        p
    }

    /// `v · s = v1 s1 + v2 s2 + v3 s3`.
    pub fn dot_sigma(v: &[Expr; 3]) -> Self {
        PauliExpr { c: [Expr::zero(), v[0].clone(), v[1].clone(), v[2].clone()] }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Expr::is_zero)
    }

    /// True when only the identity component can be nonzero.
    pub fn is_scalar(&self) -> bool {
        self.c[1..].iter().all(Expr::is_zero)
    }

    pub fn map(&self, mut f: impl FnMut(&Expr) -> Expr) -> Self {
        PauliExpr { c: [f(&self.c[0]), f(&self.c[1]), f(&self.c[2]), f(&self.c[3])] }
    }

    pub fn scale(&self, e: &Expr) -> Self {
        if e.is_one() {
            return self.clone();
        }
        self.map(|c| e * c)
    }

    pub fn diff(&self, v: Var) -> Self {
        self.map(|c| c.diff(v))
    }

    pub fn reflect(&self) -> Self {
        self.map(Expr::reflect)
    }

    /// Hermitian adjoint (the basis is hermitian, so coefficients are conjugated).
    pub fn adjoint(&self) -> Self {
        self.map(Expr::conj)
    }

    pub fn simplify(&self) -> Self {
        self.map(Expr::simplify)
    }

    pub fn commutator(&self, o: &PauliExpr) -> Self {
        // only the cross product survives: [a, b] = 2i (a x b) . s
        let mut out = PauliExpr::zero();
        for c in 1..=3 {
            let mut terms = Vec::new();
            for a in 1..=3 {
                for b in 1..=3 {
                    let eps = levi_civita(a, b, c);
                    if eps != 0 {
                        terms.push(Expr::mul_all([Expr::int(2 * eps), Expr::i(), self.c[a].clone(), o.c[b].clone()]));
                    }
                }
            }
            out.c[c] = Expr::add_all(terms);
        }
        out
    }

    pub fn anticommutator(&self, o: &PauliExpr) -> Self {
        &(self * o) + &(o * self)
    }

    /// Numeric 2x2 matrix at the evaluator's point.
    pub fn eval<T: Real>(&self, ev: &mut Evaluator<'_, T>) -> Result<Mat2<T>, EvalError> {
        let mut v = [Complex::new(T::zero(), T::zero()); 4];
        for (k, c) in self.c.iter().enumerate() {
            v[k] = ev.eval(c)?;
        }
        Ok(Mat2::from_pauli(v))
    }

    /// Each coefficient equals its own conjugate.
    pub fn is_hermitian(&self, test: &ZeroTest) -> Result<bool, EvalError> {
        let diffs: Vec<Expr> = self.c.iter().map(|c| c - &c.conj()).collect();
        Ok(test.check_all(&diffs)?.iter().all(ZeroVerdict::is_zero))
    }
}

impl ops::Add for &PauliExpr {
    type Output = PauliExpr;
    fn add(self, o: &PauliExpr) -> PauliExpr {
        PauliExpr { c: std::array::from_fn(|k| &self.c[k] + &o.c[k]) }
    }
}

impl ops::Sub for &PauliExpr {
    type Output = PauliExpr;
    fn sub(self, o: &PauliExpr) -> PauliExpr {
        PauliExpr { c: std::array::from_fn(|k| &self.c[k] - &o.c[k]) }
    }
}

impl ops::Neg for &PauliExpr {
    type Output = PauliExpr;
    fn neg(self) -> PauliExpr {
        self.map(|c| -c)
    }
}

impl ops::Mul for &PauliExpr {
    type Output = PauliExpr;
    /// `(a0 + a.s)(b0 + b.s) = a0 b0 + a.b + (a0 b + b0 a + i a x b).s`
    fn mul(self, o: &PauliExpr) -> PauliExpr {
        let (a, b) = (&self.c, &o.c);
        let c0 = Expr::add_all([&a[0] * &b[0], &a[1] * &b[1], &a[2] * &b[2], &a[3] * &b[3]]);
        let vec = |k: usize| {
            let (p, q) = (k % 3 + 1, (k + 1) % 3 + 1);
            let cross = &(&a[p] * &b[q]) - &(&a[q] * &b[p]);
            Expr::add_all([&a[0] * &b[k], &b[0] * &a[k], &Expr::i() * &cross])
        };
        PauliExpr { c: [c0, vec(1), vec(2), vec(3)] }
    }
}

impl fmt::Display for PauliExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "s{k}")?;
            } else {
                write!(f, "({c})*s{k}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Explicit complex 2x2 matrix, the numeric oracle for the basis algebra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Mat2 { m: [[z, z], [z, z]] }
    }

    /// `v0 I + v1 s1 + v2 s2 + v3 s3` written out entrywise.
    pub fn from_pauli(v: [Complex<T>; 4]) -> Self {
        let i = Complex::new(T::zero(), T::one());
        Mat2 { m: [[v[0] + v[3], v[1] - i * v[2]], [v[1] + i * v[2], v[0] - v[3]]] }
    }

    pub fn mul(&self, o: &Mat2<T>) -> Self {
        let mut out = Mat2::zero();
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = self.m[r][0] * o.m[0][c] + self.m[r][1] * o.m[1][c];
            }
        }
        out
    }

    pub fn sub(&self, o: &Mat2<T>) -> Self {
        let mut out = *self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = out.m[r][c] - o.m[r][c];
            }
        }
        out
    }

    pub fn add(&self, o: &Mat2<T>) -> Self {
        let mut out = *self;
        for r in 0..2 {
            for c in 0..2 {
                out.m[r][c] = out.m[r][c] + o.m[r][c];
            }
        }
        out
    }

    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Point, Realization};

    #[test]
    fn basis_relations() {
        let s = |a| PauliExpr::sigma(a);
        assert_eq!(&s(1) * &s(2), PauliExpr::sigma(3).scale(&Expr::i()));
        for a in 1..=3 {
            assert_eq!(&s(a) * &s(a), PauliExpr::identity());
        }
        assert_eq!(s(1).commutator(&s(2)), s(3).scale(&(&Expr::int(2) * &Expr::i())));
        assert!(s(1).anticommutator(&s(2)).is_zero());
    }

    #[test]
    fn unit_radial_spin_squares_to_one() {
        let n = PauliExpr::dot_sigma(&[&Expr::x(1) / &Expr::r(), &Expr::x(2) / &Expr::r(), &Expr::x(3) / &Expr::r()]);
        let sq = &n * &n;
        let test = ZeroTest::new(4).with_trials(16);
        let diff = &sq - &PauliExpr::identity();
        assert!(test.check_all(&diff.c).unwrap().iter().all(ZeroVerdict::is_zero));
    }

    #[test]
    fn commutator_with_pauli_term() {
        // [s3/2, g H1 s1] = i g H1 s2
        let g = Expr::param("g");
        let h1 = Expr::apply("H", vec![Expr::x(1)]);
        let eta = PauliExpr::sigma(3).scale(&Expr::ratio(1, 2));
        let v = PauliExpr::sigma(1).scale(&(&g * &h1));
        let expect = PauliExpr::sigma(2).scale(&Expr::mul_all([Expr::i(), g, h1]));
        assert_eq!(eta.commutator(&v), expect);
    }

    #[test]
    fn product_matches_matrix_oracle() {
        let a = PauliExpr::new([Expr::x(1), Expr::x(2), &Expr::i() * &Expr::x(3), Expr::r()]);
        let b = PauliExpr::new([Expr::phi(), Expr::int(2), Expr::rt(), &Expr::x(1) * &Expr::x(3)]);
        let ab = &a * &b;
        let real = Realization::new();
        let mut ev = Evaluator::new(Point::new(0.3, [0.7, 1.1, 0.4]), &real);
        let lhs = ab.eval(&mut ev).unwrap();
        let rhs = a.eval(&mut ev).unwrap().mul(&b.eval(&mut ev).unwrap());
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }
}
