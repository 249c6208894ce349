//! Probabilistic identity testing.
//!
//! An expression is declared zero when it vanishes, relative to the largest
//! intermediate magnitude of its evaluation, at every one of a number of random
//! points, each with fresh random realizations of all opaque functions and
//! fresh values of all free parameters.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{EvalError, Evaluator, Expr, OpaqueRealization, Point, Realization};
use crate::scalar::Real;

/// Retries per trial when a draw lands on a singular locus.
const MAX_REDRAWS: usize = 16;

/// Degree of the random polynomial in opaque realizations.
pub const OPAQUE_DEGREE: u8 = 4;

/// Where a nonzero verdict was observed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub trial: usize,
    pub t: f64,
    pub x: [f64; 3],
    pub params: BTreeMap<String, f64>,
    pub value: [f64; 2],
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    Zero,
    NonZero(Box<Witness>),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::Zero => None,
            ZeroVerdict::NonZero(w) => Some(w),
        }
    }
}

/// Settings of the randomized zero test.
#[derive(Clone, Debug)]
pub struct ZeroTest {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Parameters held at fixed values instead of being drawn per trial.
    pub fixed: BTreeMap<String, f64>,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest { trials: 64, tol: 1e-9, seed: 0x5eed, fixed: BTreeMap::new() }
    }
}

fn trial_seed(seed: u64, trial: usize, redraw: usize) -> u64 {
    let mut z = seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(trial as u64 + 1) ^ (redraw as u64).rotate_left(40);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl ZeroTest {
    pub fn new(seed: u64) -> Self {
        ZeroTest { seed, ..Default::default() }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_param(mut self, name: &str, v: f64) -> Self {
        self.fixed.insert(name.to_string(), v);
        self
    }

    /// Same settings with a derived seed, for independent sub-tests.
    pub fn fork(&self, salt: u64) -> Self {
        ZeroTest { seed: trial_seed(self.seed, salt as usize, 7), ..self.clone() }
    }

    pub fn check(&self, e: &Expr) -> Result<ZeroVerdict, EvalError> {
        Ok(self.check_all(std::slice::from_ref(e))?.pop().unwrap())
    }

    pub fn check_all(&self, es: &[Expr]) -> Result<Vec<ZeroVerdict>, EvalError> {
        self.check_all_in::<f64>(es)
    }

    /// Run the test in the floating-point type `T`.
    pub fn check_all_in<T: Real>(&self, es: &[Expr]) -> Result<Vec<ZeroVerdict>, EvalError> {
        let live: Vec<usize> = (0..es.len()).filter(|&k| !es[k].is_zero()).collect();
        let mut out = vec![ZeroVerdict::Zero; es.len()];
        if live.is_empty() {
            return Ok(out);
        }
        let mut params = std::collections::BTreeSet::new();
        let mut opaques = BTreeMap::new();
        for &k in &live {
            params.extend(es[k].params());
            opaques.extend(es[k].opaques());
        }
        let tol = T::lit(self.tol);
        let per_trial: Vec<Result<Vec<Option<Witness>>, EvalError>> = (0..self.trials)
            .into_par_iter()
            .map(|trial| {
                self.with_draw::<T, _>(trial, &params, &opaques, |ev, pvals| {
                    let mut results = Vec::with_capacity(live.len());
                    for &k in &live {
                        let (v, s) = ev.eval_scaled(&es[k])?;
                        if v.norm() <= tol * (T::one() + s) {
                            results.push(None);
                        } else {
                            let point = ev.point();
                            results.push(Some(Witness {
                                trial,
                                t: point.t.to_f64().unwrap(),
                                x: point.x.map(|c| c.to_f64().unwrap()),
                                params: pvals.clone(),
                                value: [v.re.to_f64().unwrap(), v.im.to_f64().unwrap()],
                                scale: s.to_f64().unwrap(),
                            }));
                        }
                    }
                    Ok(results)
                })
            })
            .collect();
        for res in per_trial {
            let res = res?;
            for (slot, w) in live.iter().zip(res) {
                if let (ZeroVerdict::Zero, Some(w)) = (&out[*slot], w) {
                    out[*slot] = ZeroVerdict::NonZero(Box::new(w));
                }
            }
        }
        Ok(out)
    }

    /// Values of `es` at every trial point, sharing one draw of parameters
    /// and opaque functions per trial.
    pub fn sample_values(&self, es: &[Expr]) -> Result<Vec<Vec<Complex<f64>>>, EvalError> {
        let mut params = std::collections::BTreeSet::new();
        let mut opaques = BTreeMap::new();
        for e in es {
            params.extend(e.params());
            opaques.extend(e.opaques());
        }
        (0..self.trials)
            .into_par_iter()
            .map(|trial| self.with_draw::<f64, _>(trial, &params, &opaques, |ev, _| es.iter().map(|e| ev.eval(e)).collect()))
            .collect()
    }

    /// Run `f` at the point of one trial, redrawing on singular loci.
    fn with_draw<T: Real, R>(
        &self,
        trial: usize,
        params: &std::collections::BTreeSet<String>,
        opaques: &BTreeMap<String, usize>,
        f: impl Fn(&mut Evaluator<'_, T>, &BTreeMap<String, f64>) -> Result<R, EvalError>,
    ) -> Result<R, EvalError> {
        let mut last = None;
        for redraw in 0..MAX_REDRAWS {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(self.seed, trial, redraw));
            let point = Point::new(
                T::lit(rng.gen_range(-1.0..=1.0)),
                [T::lit(rng.gen_range(0.4..=1.4)), T::lit(rng.gen_range(0.4..=1.4)), T::lit(rng.gen_range(0.4..=1.4))],
            );
            let mut real = Realization::<T>::new();
            let mut pvals = BTreeMap::new();
            for p in params {
                let v = self.fixed.get(p).copied().unwrap_or_else(|| rng.gen_range(0.4..=1.2));
                pvals.insert(p.clone(), v);
                real.params.insert(p.clone(), T::lit(v));
            }
            for (name, arity) in opaques {
                real.functions.insert(name.clone(), OpaqueRealization::random(*arity, OPAQUE_DEGREE, &mut rng));
            }
            let mut ev = Evaluator::new(point, &real);
            match f(&mut ev, &pvals) {
                Err(EvalError::Singular(msg)) => last = Some(msg),
                other => return other,
            }
        }
        Err(EvalError::Singular(format!("{} redraws exhausted: {}", MAX_REDRAWS, last.unwrap_or_default())))
    }
}

/// Zero test with default seed.
pub fn is_zero(e: &Expr, trials: usize, tol: f64) -> Result<ZeroVerdict, EvalError> {
    ZeroTest { trials, tol, ..Default::default() }.check(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Var;

    #[test]
    fn pythagoras_numerically() {
        // built so that structural simplification does not already see it
        let u = &Expr::x(1) + &Expr::x(2);
        let e = &(&u.sin().powi(2) + &(&u.cos() * &u.cos())) - &Expr::one();
        assert!(is_zero(&e, 32, 1e-9).unwrap().is_zero());
    }

    #[test]
    fn mixed_partials_commute() {
        let g = Expr::apply("G", vec![Expr::x(1), Expr::x(2)]);
        let e = &g.diff(Var::X1).diff(Var::X2) - &g.diff(Var::X2).diff(Var::X1);
        assert!(is_zero(&e, 16, 1e-9).unwrap().is_zero());
    }

    #[test]
    fn rotation_of_opaque_is_not_zero() {
        let f = Expr::apply("F", vec![Expr::x(1), Expr::x(2)]);
        let e = &(&Expr::x(1) * &f.diff(Var::X2)) - &(&Expr::x(2) * &f.diff(Var::X1));
        let v = is_zero(&e, 16, 1e-9).unwrap();
        assert!(v.witness().is_some());
    }

    #[test]
    fn atom_expansion_is_invisible() {
        for e in [Expr::r(), Expr::rt(), Expr::phi(), Expr::theta(), Expr::rho()] {
            let d = &e - &e.expand_atoms();
            assert!(is_zero(&d, 16, 1e-12).unwrap().is_zero(), "{e}");
        }
    }

    #[test]
    fn single_precision_runs() {
        let (a, b) = (Expr::x(1), Expr::x(3));
        let e = &(&a + &b).powi(2) - &Expr::add_all([a.powi(2), b.powi(2), Expr::int(2) * &a * &b]);
        let t = ZeroTest::new(1).with_trials(16).with_tol(1e-5);
        assert!(t.check_all_in::<f32>(&[e]).unwrap()[0].is_zero());
    }
}
