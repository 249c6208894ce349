//! Concrete stand-ins for opaque functions, used only for numeric testing.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_complex::Complex;
use rand::Rng;

use super::{Expr, Var};
use crate::scalar::Real;

/// Dense-ish polynomial: exponent vector -> coefficient.
#[derive(Clone, Debug, Default)]
pub struct Poly<T> {
    terms: BTreeMap<Vec<u8>, T>,
}

impl<T: Real> Poly<T> {
    /// `∂_j p - u_j p / 4`, i.e. the polynomial factor of `∂_j (p g)` with `g = exp(-|u|²/8)`.
    fn gauss_derivative(&self, j: usize) -> Poly<T> {
        let quarter = T::lit(0.25);
        let mut out: BTreeMap<Vec<u8>, T> = BTreeMap::new();
        for (m, c) in &self.terms {
            if m[j] > 0 {
                let mut m2 = m.clone();
                m2[j] -= 1;
                *out.entry(m2).or_default() += *c * T::from_u8(m[j]).unwrap();
            }
            let mut m3 = m.clone();
            m3[j] += 1;
            *out.entry(m3).or_default() -= *c * quarter;
        }
        out.retain(|_, c| *c != T::zero());
        Poly { terms: out }
    }

    fn eval(&self, u: &[Complex<T>]) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (m, c) in &self.terms {
            let mut term = Complex::new(*c, T::zero());
            for (uj, &k) in u.iter().zip(m) {
                term *= uj.powi(k as i32);
            }
            acc += term;
        }
        acc
    }
}

/// How one opaque function is realized.
pub enum OpaqueRealization<T> {
    /// `p(u) exp(-|u|²/8)` with a polynomial `p`.
    PolyGauss { arity: usize, base: Poly<T>, cache: Mutex<HashMap<Vec<u8>, Poly<T>>> },
    /// A symbolic expression in the slot variables `Var::Slot(0..arity)`.
    Symbolic { arity: usize, expr: Expr, cache: Mutex<HashMap<Vec<u8>, Expr>> },
}

impl<T: Real> OpaqueRealization<T> {
    /// Random polynomial of total degree `<= degree` with coefficients in [-1, 1],
    /// times the Gaussian envelope.
    pub fn random(arity: usize, degree: u8, rng: &mut impl Rng) -> Self {
        let mut terms = BTreeMap::new();
        let mut m = vec![0u8; arity];
        loop {
            let total: u32 = m.iter().map(|&k| k as u32).sum();
            if total <= degree as u32 {
                terms.insert(m.clone(), T::lit(rng.gen_range(-1.0..=1.0)));
            }
            // odometer over [0, degree]^arity
            let mut k = 0;
            loop {
                if k == arity {
                    return OpaqueRealization::PolyGauss { arity, base: Poly { terms }, cache: Mutex::new(HashMap::new()) };
                }
                m[k] += 1;
                if m[k] <= degree {
                    break;
                }
                m[k] = 0;
                k += 1;
            }
        }
    }

    /// Realize by an expression in `Var::Slot(k)`, e.g. `slot(0)^3` for `F(u) = u^3`.
    pub fn symbolic(arity: usize, expr: Expr) -> Self {
        OpaqueRealization::Symbolic { arity, expr, cache: Mutex::new(HashMap::new()) }
    }

    pub fn arity(&self) -> usize {
        match self {
            OpaqueRealization::PolyGauss { arity, .. } | OpaqueRealization::Symbolic { arity, .. } => *arity,
        }
    }

    /// Value of the partial derivative with multi-index `index` at `u`.
    pub fn eval(&self, index: &[u8], u: &[Complex<T>]) -> Result<Complex<T>, super::EvalError> {
        match self {
            OpaqueRealization::PolyGauss { base, cache, .. } => {
                let poly = {
                    let mut cache = cache.lock().unwrap();
                    if let Some(p) = cache.get(index) {
                        p.clone()
                    } else {
                        let mut p = base.clone();
                        for (j, &k) in index.iter().enumerate() {
                            for _ in 0..k {
                                p = p.gauss_derivative(j);
                            }
                        }
                        cache.insert(index.to_vec(), p.clone());
                        p
                    }
                };
                let norm2 = u.iter().fold(Complex::new(T::zero(), T::zero()), |acc, z| acc + z * z);
                Ok(poly.eval(u) * (-norm2 * T::lit(0.125)).exp())
            }
            OpaqueRealization::Symbolic { expr, cache, .. } => {
                let d = {
                    let mut cache = cache.lock().unwrap();
                    cache
                        .entry(index.to_vec())
                        .or_insert_with(|| {
                            let mut e = expr.clone();
                            for (j, &k) in index.iter().enumerate() {
                                for _ in 0..k {
                                    e = e.diff(Var::Slot(j as u8));
                                }
                            }
                            e
                        })
                        .clone()
                };
                let empty = Realization::new();
                let mut ev = super::Evaluator::new(super::Point::origin(), &empty);
                ev.set_slots(u.to_vec());
                ev.eval(&d)
            }
        }
    }
}

/// Opaque-function name -> realization, plus values for free parameters.
pub struct Realization<T> {
    pub functions: HashMap<String, OpaqueRealization<T>>,
    pub params: HashMap<String, T>,
}

impl<T: Real> Default for Realization<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Realization<T> {
    pub fn new() -> Self {
        Realization { functions: HashMap::new(), params: HashMap::new() }
    }

    pub fn with_function(mut self, name: &str, r: OpaqueRealization<T>) -> Self {
        self.functions.insert(name.to_string(), r);
        self
    }

    pub fn with_param(mut self, name: &str, v: T) -> Self {
        self.params.insert(name.to_string(), v);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn gaussian_derivative_matches_finite_difference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let f: OpaqueRealization<f64> = OpaqueRealization::random(2, 4, &mut rng);
        let u = [Complex::new(0.7, 0.0), Complex::new(-0.3, 0.0)];
        let h = 1e-5;
        let up = [u[0] + h, u[1]];
        let um = [u[0] - h, u[1]];
        let fd = (f.eval(&[0, 1], &up).unwrap() - f.eval(&[0, 1], &um).unwrap()) / (2.0 * h);
        let exact = f.eval(&[1, 1], &u).unwrap();
        assert!((fd - exact).norm() < 1e-7, "{fd} vs {exact}");
    }

    #[test]
    fn symbolic_cube() {
        let f: OpaqueRealization<f64> = OpaqueRealization::symbolic(1, Expr::var(Var::Slot(0)).powi(3));
        let u = [Complex::new(2.0, 0.0)];
        let vals: Vec<f64> = (0..4).map(|k| f.eval(&[k], &u).unwrap().re).collect();
        assert_eq!(vals, vec![8.0, 12.0, 12.0, 6.0]);
    }
}
