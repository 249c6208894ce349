//! The system with the matrix integral of motion `s.x/r`: `A0 = c ln(r)/nu`
//! with `c = 1/2`, and a vector potential that is either zero or of the
//! rotational form `A^a = eps_abc phi^b x_c / r^k`.

use serde::Serialize;

use super::closure::{closure, ClosureReport};
use super::generators::{j, j_squared, q_hat, q_parity, q_tilde};
use crate::diffop::DiffOp;
use crate::error::Result;
use crate::expr::{Expr, ZeroTest};
use crate::model::{PotentialConfig, Variant, VectorRep};
use crate::pauli::levi_civita;
use crate::verify::{verify, WitnessReport};

#[derive(Clone, Debug)]
pub enum VectorPotentialChoice {
    Zero,
    /// `A^a = eps_abc phi^b x_c / r^exponent`
    Rotational {
        phi: [Expr; 3],
        exponent: Expr,
    },
}

impl VectorPotentialChoice {
    /// Exponent `1 + nu + 1/g`, as printed for the family.
    pub fn printed(phi: [Expr; 3]) -> Self {
        let exponent = &(&Expr::one() + &Expr::param("nu")) + &Expr::param("g").recip();
        VectorPotentialChoice::Rotational { phi, exponent }
    }

    /// Exponent 2, the only one for which `curl A` is radial.
    pub fn radial_field(phi: [Expr; 3]) -> Self {
        VectorPotentialChoice::Rotational { phi, exponent: Expr::int(2) }
    }

    pub fn vector(&self) -> [Expr; 3] {
        match self {
            VectorPotentialChoice::Zero => [Expr::zero(), Expr::zero(), Expr::zero()],
            VectorPotentialChoice::Rotational { phi, exponent } => {
                let den = Expr::r().pow_expr(exponent);
                std::array::from_fn(|a| {
                    let mut terms = Vec::new();
                    for b in 0..3 {
                        for c in 0..3 {
                            let eps = levi_civita(a + 1, b + 1, c + 1);
                            if eps != 0 {
                                terms.push(Expr::mul_all([Expr::int(eps), phi[b].clone(), Expr::x(c + 1)]));
                            }
                        }
                    }
                    &Expr::add_all(terms) / &den
                })
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, VectorPotentialChoice::Zero)
    }

    /// Constant `phi` along the third axis.
    fn is_axial(&self) -> bool {
        match self {
            VectorPotentialChoice::Zero => false,
            VectorPotentialChoice::Rotational { phi, .. } => phi[0].is_zero() && phi[1].is_zero() && phi[2].as_const().is_some(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            VectorPotentialChoice::Zero => "A = 0".into(),
            VectorPotentialChoice::Rotational { phi, exponent } => {
                format!("A^a = eps_abc phi^b x_c / r^({exponent}), phi = ({}, {}, {})", phi[0], phi[1], phi[2])
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuperintegrableSystem {
    pub nu: f64,
    pub g: f64,
    pub mu: f64,
    /// `c` in `A0 = c ln(r) / nu`.
    pub scale: Expr,
    pub vector: VectorPotentialChoice,
    pub variant: Variant,
}

impl SuperintegrableSystem {
    pub fn new(nu: f64, vector: VectorPotentialChoice) -> Self {
        SuperintegrableSystem { nu, g: 1.0, mu: 0.7, scale: Expr::ratio(1, 2), vector, variant: Variant::QrseH3 }
    }

    pub fn config(&self) -> PotentialConfig {
        PotentialConfig {
            a0: &(&self.scale * &Expr::r().ln()) / &Expr::param("nu"),
            rep: VectorRep::Explicit(self.vector.vector()),
            ..Default::default()
        }
    }

    pub fn test(&self, base: &ZeroTest) -> ZeroTest {
        base.clone().with_param("nu", self.nu).with_param("g", self.g).with_param("mu", self.mu)
    }

    /// Integrals of motion expected for this choice.
    fn expected(&self, name: &str) -> bool {
        let canonical_scale = self.scale == Expr::ratio(1, 2);
        match (&self.vector, name) {
            _ if !canonical_scale => false,
            (VectorPotentialChoice::Zero, _) => true,
            (_, "Qhat") => true,
            (_, "J3") => self.vector.is_axial(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegralCheck {
    pub name: String,
    pub expected: bool,
    pub symmetry: bool,
    pub witness: Option<WitnessReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuperintegrableReport {
    pub variant: Variant,
    pub nu: f64,
    pub g: f64,
    pub scalar_potential: String,
    pub vector_potential: String,
    pub checks: Vec<IntegralCheck>,
    /// Brackets of the integrals, for the zero vector potential.
    pub algebra: Option<ClosureReport>,
    pub matches_expected: bool,
}

pub fn candidates() -> Vec<(String, DiffOp)> {
    let mut out = vec![("Qhat".to_string(), q_hat())];
    out.extend((1..=3).map(|a| (format!("J{a}"), j(a))));
    out.push(("Qtilde".into(), q_tilde()));
    out
}

pub fn verify_superintegrable(sys: &SuperintegrableSystem, base: &ZeroTest) -> Result<SuperintegrableReport> {
    let cfg = sys.config();
    let test = sys.test(base);
    let mut checks = Vec::new();
    for (k, (name, q)) in candidates().into_iter().enumerate() {
        let rep = verify(&name, &q, &cfg, sys.variant, &test.fork(k as u64), false)?;
        checks.push(IntegralCheck { expected: sys.expected(&name), symmetry: rep.symmetry, witness: rep.witness, name });
    }
    let algebra = if sys.vector.is_zero() {
        let mut gens = candidates();
        gens.push(("Jsq".into(), j_squared()));
        gens.push(("QPar".into(), q_parity()));
        Some(closure(&gens, &["Qhat", "Qtilde"], &test.fork(99))?)
    } else {
        None
    };
    let matches_expected = checks.iter().all(|c| c.expected == c.symmetry) && algebra.as_ref().is_none_or(|a| a.closes);
    Ok(SuperintegrableReport {
        variant: sys.variant,
        nu: sys.nu,
        g: sys.g,
        scalar_potential: cfg.a0.to_string(),
        vector_potential: sys.vector.describe(),
        checks,
        algebra,
        matches_expected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector_potential_is_superintegrable() {
        let sys = SuperintegrableSystem::new(1.0, VectorPotentialChoice::Zero);
        let rep = verify_superintegrable(&sys, &ZeroTest::new(3)).unwrap();
        assert!(rep.checks.iter().all(|c| c.symmetry), "{:?}", rep.checks);
        assert!(rep.matches_expected);
    }

    #[test]
    fn wrong_scale_breaks_radial_spin() {
        let mut sys = SuperintegrableSystem::new(1.0, VectorPotentialChoice::Zero);
        sys.scale = Expr::one();
        let rep = verify_superintegrable(&sys, &ZeroTest::new(3)).unwrap();
        let q = rep.checks.iter().find(|c| c.name == "Qhat").unwrap();
        assert!(!q.symmetry && q.witness.is_some());
    }
}
