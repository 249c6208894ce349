use std::time::Instant;

use paulisym::catalog::{verify_superintegrable, SuperintegrableSystem, VectorPotentialChoice};
use paulisym::expr::ZeroTest;
use paulisym::model::{cross, curl};
use paulisym::{Expr, Variant};

fn axial() -> [Expr; 3] {
    [Expr::zero(), Expr::zero(), Expr::one()]
}

fn survivors(sys: &SuperintegrableSystem) -> Vec<String> {
    let t = Instant::now();
    let rep = verify_superintegrable(sys, &ZeroTest::new(21)).unwrap();
    assert!(t.elapsed().as_secs_f64() < 10.0);
    rep.checks.iter().filter(|c| c.symmetry).map(|c| c.name.clone()).collect()
}

/// Exponents k for which the field of `A = z x x / r^k` is parallel to `x`.
fn radial_field_exponents() -> Vec<i64> {
    let x = [Expr::x(1), Expr::x(2), Expr::x(3)];
    (0..=5)
        .filter(|&k| {
            let rk = Expr::r().powi(k);
            let a = [-&(&Expr::x(2) / &rk), &Expr::x(1) / &rk, Expr::zero()];
            let hx = cross(&curl(&a), &x);
            ZeroTest::new(4).check_all(&hx).unwrap().iter().all(|v| v.is_zero())
        })
        .collect()
}

#[test]
fn zero_vector_potential_keeps_all_five() {
    for nu in [1.0, 0.5, 3.0] {
        let sys = SuperintegrableSystem::new(nu, VectorPotentialChoice::Zero);
        assert_eq!(survivors(&sys), ["Qhat", "J1", "J2", "J3", "Qtilde"]);
    }
    let rep = verify_superintegrable(&SuperintegrableSystem::new(1.0, VectorPotentialChoice::Zero), &ZeroTest::new(2)).unwrap();
    let alg = rep.algebra.unwrap();
    assert!(alg.closes);
    assert!(alg.find("{Qhat,Qtilde}").unwrap().coefficients.is_empty());
    assert!(alg.find("[Qhat,QPar]").unwrap().coefficients.is_empty());
}

#[test]
fn spin_orbit_is_required() {
    let mut sys = SuperintegrableSystem::new(1.0, VectorPotentialChoice::Zero);
    sys.variant = Variant::Sp;
    assert!(!survivors(&sys).contains(&"Qhat".to_string()));
    sys.variant = Variant::QrseH3a;
    assert!(survivors(&sys).contains(&"Qhat".to_string()));
}

#[test]
fn doubled_scalar_potential_loses_radial_spin() {
    let mut sys = SuperintegrableSystem::new(1.0, VectorPotentialChoice::Zero);
    sys.scale = Expr::one();
    assert!(!survivors(&sys).contains(&"Qhat".to_string()));
}

#[test]
fn radial_field_exponent_is_two() {
    assert_eq!(radial_field_exponents(), [2]);
    for (nu, g) in [(1.0, 1.0), (2.0, 0.5), (0.5, -1.0)] {
        let mut sys = SuperintegrableSystem::new(nu, VectorPotentialChoice::radial_field(axial()));
        sys.g = g;
        assert_eq!(survivors(&sys), ["Qhat", "J3"], "nu={nu} g={g}");
    }
}

#[test]
fn printed_exponent_loses_radial_spin() {
    let sys = SuperintegrableSystem::new(1.0, VectorPotentialChoice::printed(axial()));
    let rep = verify_superintegrable(&sys, &ZeroTest::new(5)).unwrap();
    let q = rep.checks.iter().find(|c| c.name == "Qhat").unwrap();
    assert!(q.expected && !q.symmetry && q.witness.is_some());
    assert!(rep.checks.iter().find(|c| c.name == "J3").unwrap().symmetry);
    assert!(!rep.checks.iter().find(|c| c.name == "J1").unwrap().symmetry);
    assert!(!rep.matches_expected);
}
