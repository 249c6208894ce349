use paulisym::catalog::closure;
use paulisym::catalog::generators::{j, j_squared, l, q_hat, q_parity, q_tilde};
use paulisym::expr::ZeroTest;
use paulisym::DiffOp;

fn test() -> ZeroTest {
    ZeroTest::new(11).with_trials(8)
}

fn coeff(rep: &closure::ClosureReport, lhs: &str, name: &str) -> [f64; 2] {
    let r = rep.find(lhs).unwrap_or_else(|| panic!("no relation {lhs}"));
    assert!(r.closes, "{lhs} residual {}", r.residual);
    r.coefficients.get(name).copied().unwrap_or([0.0, 0.0])
}

fn near(c: [f64; 2], re: f64, im: f64) -> bool {
    (c[0] - re).abs() < 1e-8 && (c[1] - im).abs() < 1e-8
}

#[test]
fn radial_spin_and_spin_orbit_anticommute() {
    let gens = vec![("Qhat".to_string(), q_hat()), ("Qtilde".to_string(), q_tilde()), ("Jsq".to_string(), j_squared())];
    let rep = closure::closure(&gens, &["Qhat", "Qtilde"], &test()).unwrap();
    let anti = rep.find("{Qhat,Qtilde}").unwrap();
    assert!(anti.closes && anti.coefficients.is_empty(), "{:?}", anti.coefficients);
    assert!(near(coeff(&rep, "Qhat^2", "1"), 1.0, 0.0));
    // (s.L + 1)^2 = L^2 + s.L + 1 and J^2 = L^2 + s.L + 3/4
    assert!(near(coeff(&rep, "Qtilde^2", "Jsq"), 1.0, 0.0));
    assert!(near(coeff(&rep, "Qtilde^2", "1"), 0.25, 0.0));
    assert!(rep.find("[Qhat,Jsq]").unwrap().coefficients.is_empty());
    assert!(rep.closes);
}

#[test]
fn total_angular_momentum_commutes_with_the_spin_invariants() {
    let mut gens: Vec<_> = (1..=3).map(|a| (format!("J{a}"), j(a))).collect();
    gens.push(("Qhat".into(), q_hat()));
    gens.push(("QPar".into(), q_parity()));
    let rep = closure::closure(&gens, &[], &test()).unwrap();
    for a in 1..=3 {
        for q in ["Qhat", "QPar"] {
            let r = rep.find(&format!("[J{a},{q}]")).unwrap();
            assert!(r.closes && r.coefficients.is_empty(), "[J{a},{q}] = {}", r.rhs());
        }
    }
    let r = rep.find("[Qhat,QPar]").unwrap();
    assert!(r.closes && r.coefficients.is_empty(), "{}", r.rhs());
}

#[test]
fn orbital_momentum_does_not_commute_with_radial_spin() {
    let gens = vec![("L3".to_string(), l(3)), ("Qhat".to_string(), q_hat())];
    let rep = closure::closure(&gens, &[], &test()).unwrap();
    assert!(!rep.find("[L3,Qhat]").unwrap().closes);
    let id = vec![("I".to_string(), DiffOp::identity())];
    assert!(closure::closure(&id, &[], &test()).unwrap().closes);
}
