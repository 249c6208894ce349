//! Commutation relations of a generator set, by numeric expansion in the span
//! of the set plus the identity.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::diffop::{DiffOp, Key};
use crate::error::{Error, Result};
use crate::expr::{Expr, ZeroTest};

/// Relative residual above which a bracket is reported as not closing.
pub const CLOSURE_TOL: f64 = 1e-8;

/// Coefficients below this magnitude are dropped from the report.
const COEFF_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bracket {
    Commutator,
    Anticommutator,
    Square,
}

#[derive(Clone, Debug, Serialize)]
pub struct Relation {
    pub kind: Bracket,
    pub lhs: String,
    /// Expansion coefficients as `[re, im]`, keyed by basis name (`1` for the identity).
    pub coefficients: BTreeMap<String, [f64; 2]>,
    pub closes: bool,
    pub residual: f64,
}

impl Relation {
    /// The expansion as text, e.g. `i*J3` or `J^2 + 0.25`.
    pub fn rhs(&self) -> String {
        if self.coefficients.is_empty() {
            return "0".into();
        }
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .map(|(name, c)| format!("({}){}", fmt_complex(c), if name == "1" { String::new() } else { format!("*{name}") }))
            .collect();
        terms.join(" + ")
    }
}

fn fmt_complex(c: &[f64; 2]) -> String {
    let tidy = |v: f64| {
        let r = (v * 1e6).round() / 1e6;
        if r == 0.0 {
            0.0
        } else {
            r
        }
    };
    let (re, im) = (tidy(c[0]), tidy(c[1]));
    match (re == 0.0, im == 0.0) {
        (_, true) => format!("{re}"),
        (true, false) => format!("{im}i"),
        _ => format!("{re}{:+}i", im),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosureReport {
    pub basis: Vec<String>,
    pub odd: Vec<String>,
    pub relations: Vec<Relation>,
    pub closes: bool,
}

impl ClosureReport {
    pub fn find(&self, lhs: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.lhs == lhs)
    }
}

fn components(op: &DiffOp) -> BTreeMap<(Key, usize), Expr> {
    let mut out = BTreeMap::new();
    for (k, c) in op.terms() {
        for (i, e) in c.c.iter().enumerate() {
            if !e.is_zero() {
                out.insert((*k, i), e.clone());
            }
        }
    }
    out
}

/// Least-squares expansion of `target` in `basis`; returns coefficients and
/// the residual relative to `max(|b|, sqrt(rows))`.
fn expand(target: &DiffOp, basis: &[DiffOp], test: &ZeroTest) -> Result<(Vec<Complex64>, f64)> {
    let target_c = components(target);
    let basis_c: Vec<_> = basis.iter().map(components).collect();
    let slots: BTreeSet<(Key, usize)> = target_c.keys().chain(basis_c.iter().flat_map(|b| b.keys())).copied().collect();
    let slots: Vec<_> = slots.into_iter().collect();
    let n = basis.len();
    // One flat list of expressions: target slots, then every basis element's slots.
    let mut exprs = Vec::with_capacity(slots.len() * (n + 1));
    for map in std::iter::once(&target_c).chain(basis_c.iter()) {
        for s in &slots {
            exprs.push(map.get(s).cloned().unwrap_or_else(Expr::zero));
        }
    }
    let samples = test.sample_values(&exprs)?;
    let m = slots.len() * samples.len();
    let mut a = DMatrix::<Complex64>::zeros(m, n);
    let mut b = DVector::<Complex64>::zeros(m);
    for (t, row) in samples.iter().enumerate() {
        for (s, _) in slots.iter().enumerate() {
            let r = t * slots.len() + s;
            b[r] = row[s];
            for j in 0..n {
                a[(r, j)] = row[(j + 1) * slots.len() + s];
            }
        }
    }
    let bnorm = b.norm().max((m as f64).sqrt());
    if b.norm() <= COEFF_FLOOR * bnorm {
        return Ok((vec![Complex64::new(0.0, 0.0); n], 0.0));
    }
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).map_err(|e| Error::Catalog(format!("least squares: {e}")))?;
    let residual = (&a * &x - &b).norm() / bnorm;
    Ok((x.iter().copied().collect(), residual))
}

/// Expand every bracket of the set in the span of the set plus the identity.
/// Pairs of odd elements use anticommutators, and each odd element is also
/// squared. Non-closure is reported, not raised.
pub fn closure(generators: &[(String, DiffOp)], odd: &[&str], test: &ZeroTest) -> Result<ClosureReport> {
    let mut names: Vec<String> = generators.iter().map(|(n, _)| n.clone()).collect();
    let mut basis: Vec<DiffOp> = generators.iter().map(|(_, op)| op.clone()).collect();
    names.push("1".into());
    basis.push(DiffOp::identity());
    let is_odd = |n: &str| odd.contains(&n);
    let mut jobs = Vec::new();
    for (i, (ni, qi)) in generators.iter().enumerate() {
        if is_odd(ni) {
            jobs.push((Bracket::Square, format!("{ni}^2"), qi.compose(qi)));
        }
        for (nj, qj) in &generators[i + 1..] {
            if is_odd(ni) && is_odd(nj) {
                jobs.push((Bracket::Anticommutator, format!("{{{ni},{nj}}}"), qi.anticommutator(qj)));
            } else {
                jobs.push((Bracket::Commutator, format!("[{ni},{nj}]"), qi.commutator(qj)));
            }
        }
    }
    let mut relations = Vec::new();
    for (k, (kind, lhs, op)) in jobs.into_iter().enumerate() {
        let (coeffs, residual) = expand(&op, &basis, &test.fork(k as u64))?;
        let coefficients = names.iter().zip(&coeffs).filter(|(_, c)| c.norm() > COEFF_FLOOR).map(|(n, c)| (n.clone(), [c.re, c.im])).collect();
        relations.push(Relation { kind, lhs, coefficients, closes: residual <= CLOSURE_TOL, residual });
    }
    let closes = relations.iter().all(|r| r.closes);
    Ok(ClosureReport {
        basis: generators.iter().map(|(n, _)| n.clone()).collect(),
        odd: odd.iter().map(|s| s.to_string()).collect(),
        relations,
        closes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::generators::{j, lookup};

    fn coeff(r: &Relation, name: &str) -> [f64; 2] {
        r.coefficients.get(name).copied().unwrap_or([0.0, 0.0])
    }

    #[test]
    fn su2() {
        let gens: Vec<_> = (1..=3).map(|a| (format!("J{a}"), j(a))).collect();
        let rep = closure(&gens, &[], &ZeroTest::new(5).with_trials(8)).unwrap();
        assert!(rep.closes);
        let r = rep.find("[J1,J2]").unwrap();
        assert_eq!(r.coefficients.len(), 1);
        let c = coeff(r, "J3");
        assert!((c[0]).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn translations_and_boosts_need_the_identity() {
        let gens = vec![("P1".to_string(), lookup("P1", &[]).unwrap()), ("G1".to_string(), lookup("G1", &[]).unwrap())];
        let rep = closure(&gens, &[], &ZeroTest::new(2).with_trials(8)).unwrap();
        let r = rep.find("[P1,G1]").unwrap();
        assert!(r.closes);
        let c = coeff(r, "1");
        assert!((c[0] - 0.0).abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn open_set_is_reported() {
        let gens = vec![("J1".to_string(), j(1)), ("J2".to_string(), j(2))];
        let rep = closure(&gens, &[], &ZeroTest::new(1).with_trials(8)).unwrap();
        assert!(!rep.closes);
        assert!(!rep.find("[J1,J2]").unwrap().closes);
    }
}
