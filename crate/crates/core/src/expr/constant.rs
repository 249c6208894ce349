//! Exact complex rational constants.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::scalar::Real;

/// `re + i·im` with arbitrary-precision rational parts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Constant {
    pub re: BigRational,
    pub im: BigRational,
}

impl Constant {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Self { re, im: BigRational::zero() }
    }

    pub fn int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn i() -> Self {
        Self { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// Real rational value, if the imaginary part vanishes.
    pub fn as_rational(&self) -> Option<&BigRational> {
        self.is_real().then_some(&self.re)
    }

    pub fn conj(&self) -> Self {
        Self { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(Self { re: &self.re / &n, im: -&self.im / &n })
    }

    /// Integer power; negative exponents invert.
    pub fn powi(&self, n: i64) -> Option<Self> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut acc = Constant::one();
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        Some(acc)
    }

    /// True if this is a negative real number (used by the printer).
    pub fn is_negative_real(&self) -> bool {
        self.is_real() && self.re.is_negative()
    }

    pub fn to_complex<T: Real>(&self) -> Complex<T> {
        Complex::new(rat_to::<T>(&self.re), rat_to::<T>(&self.im))
    }
}

pub(crate) fn rat_to<T: Real>(q: &BigRational) -> T {
    let v = q.to_f64().unwrap_or_else(|| q.numer().to_f64().unwrap_or(f64::NAN) / q.denom().to_f64().unwrap_or(f64::NAN));
    T::from_f64(v).expect("finite rational")
}

pub(crate) fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Add for &Constant {
    type Output = Constant;
    fn add(self, o: &Constant) -> Constant {
        Constant { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &Constant {
    type Output = Constant;
    fn sub(self, o: &Constant) -> Constant {
        Constant { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &Constant {
    type Output = Constant;
    fn mul(self, o: &Constant) -> Constant {
        Constant { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
}

impl Neg for &Constant {
    type Output = Constant;
    fn neg(self) -> Constant {
        Constant { re: -self.re.clone(), im: -self.im.clone() }
    }
}

fn fmt_rat(q: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Constant {
    /// Prints in a form the expression parser reads back, e.g. `3/2`, `-i`, `(1/2 + 2*i)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => fmt_rat(&self.re, f),
            (true, false) => {
                if self.im.is_one() {
                    write!(f, "i")
                } else if (-self.im.clone()).is_one() {
                    write!(f, "-i")
                } else {
                    fmt_rat(&self.im, f)?;
                    write!(f, "*i")
                }
            }
            (false, false) => {
                write!(f, "(")?;
                fmt_rat(&self.re, f)?;
                if self.im.is_negative() {
                    write!(f, " - ")?;
                    fmt_rat(&-self.im.clone(), f)?;
                } else {
                    write!(f, " + ")?;
                    fmt_rat(&self.im, f)?;
                }
                write!(f, "*i)")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_squared_is_minus_one() {
        let i = Constant::i();
        assert_eq!(&i * &i, Constant::int(-1));
        assert_eq!(i.powi(4).unwrap(), Constant::one());
        assert_eq!(i.recip().unwrap(), -&i);
    }

    #[test]
    fn display_forms() {
        assert_eq!(Constant::ratio(3, 2).to_string(), "3/2");
        assert_eq!((-&Constant::i()).to_string(), "-i");
        let c = &Constant::ratio(1, 2) + &(&Constant::int(-2) * &Constant::i());
        assert_eq!(c.to_string(), "(1/2 - 2*i)");
    }

    #[test]
    fn zero_has_no_inverse() {
        assert!(Constant::zero().recip().is_none());
    }
}
