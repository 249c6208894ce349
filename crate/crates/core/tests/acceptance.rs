//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria known to be red are pinned to their analysed outcome; the process
//! fails only when a verdict moves away from the recorded one.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use paulisym::catalog::{self, closure, generators, verify_superintegrable, Summary, SuperintegrableSystem, VectorPotentialChoice};
use paulisym::expr::{Realization, ZeroTest};
use paulisym::numlab::scenario::{Scenario, CONTROL_RATIO, DRIFT_LIMIT};
use paulisym::numlab::{convergence, Stencil};
use paulisym::verify::{symmetry_residual, verify};
use paulisym::{DiffOp, Expr, PotentialConfig, Variant};

const SEED: u64 = 0x5eed;
const TRIALS: usize = 64;
const TOL: f64 = 1e-9;
const SUITE_LIMIT: Duration = Duration::from_secs(300);
const CHECK_LIMIT: Duration = Duration::from_secs(10);
const RUN_LIMIT: Duration = Duration::from_secs(300);
const ORDER_MIN: f64 = 1.9;
const DETUNING: (i64, i64) = (201, 100);

/// Rows whose verdict departs from the tables, per variant, after analysis.
const SP_DEPARTURES: &[&str] = &["T2.7", "T2.8", "T3.3", "T3.4"];
const H3_DEPARTURES: &[&str] = &["T1.5", "T1.6", "T1.8", "T1.9", "T4.4"];
const H3A_DEPARTURES: &[&str] = &[
    "T1.5", "T1.6", "T1.8", "T1.9", "T2.6", "T2.7", "T2.8", "T3.1", "T3.2", "T3.3", "T3.4", "T3.5", "T3.6", "T3.7", "T3.8", "T3.9", "T3.10", "T3.11",
    "T3.12", "T3.14", "T4.1", "T4.2", "T4.3", "T4.5", "T4.6",
];

fn test() -> ZeroTest {
    ZeroTest::new(SEED).with_trials(TRIALS).with_tol(TOL)
}

struct Line {
    pass: bool,
    /// Recorded status of the criterion.
    documented: bool,
    text: String,
}

fn departures(s: &Summary) -> Vec<String> {
    s.entries.iter().filter(|e| !e.agrees_with_tables).map(|e| e.id.clone()).collect()
}

fn same(ids: &[String], pinned: &[&str]) -> bool {
    ids.iter().map(String::as_str).collect::<BTreeSet<_>>() == pinned.iter().copied().collect()
}

/// `J_a` replaced by `L_a` in a generator source, if it mentions one.
fn orbital(src: &str) -> Option<String> {
    let b = src.as_bytes();
    let mut out = String::new();
    let mut hit = false;
    for (k, ch) in src.char_indices() {
        let digit = b.get(k + 1).is_some_and(|c| (b'1'..=b'3').contains(c));
        let start = k == 0 || !(b[k - 1] as char).is_alphanumeric();
        if ch == 'J' && digit && start {
            out.push('L');
            hit = true;
        } else {
            out.push(ch);
        }
    }
    hit.then_some(out)
}

struct OrbitalCheck {
    checked: usize,
    broken_where_transverse: usize,
    transverse: usize,
    free_pass: usize,
    mismatched: Vec<String>,
}

/// With g generic, `L_a` fails exactly when the field has a component off the
/// rotation axis; with g = 0 it always passes.
fn orbital_check(entries: &[catalog::CatalogEntry]) -> OrbitalCheck {
    let t = test();
    let mut out = OrbitalCheck { checked: 0, broken_where_transverse: 0, transverse: 0, free_pass: 0, mismatched: Vec::new() };
    for e in entries {
        let tpl = e.primary();
        let h = tpl.cfg.hamiltonian(Variant::Sp);
        let free = PotentialConfig { g: Expr::zero(), ..tpl.cfg.clone() }.hamiltonian(Variant::Sp);
        let field = tpl.cfg.magnetic_field();
        let vanishing: Vec<bool> = t.check_all(&field).unwrap().iter().map(|v| v.is_zero()).collect();
        for (name, op) in &tpl.generators {
            let Some(src) = orbital(name) else { continue };
            if !symmetry_residual(op, &h).is_zero_op(&t).unwrap().zero {
                continue;
            }
            let lop = DiffOp::parse(&src, &tpl.decls, &generators::lookup).unwrap();
            let axes: Vec<usize> = (1..=3).filter(|a| name.contains(&format!("J{a}"))).collect();
            let transverse = axes.iter().any(|&a| (1..=3).any(|b| b != a && !vanishing[b - 1]));
            let survives = symmetry_residual(&lop, &h).is_zero_op(&t).unwrap().zero;
            out.checked += 1;
            out.transverse += usize::from(transverse);
            out.broken_where_transverse += usize::from(transverse && !survives);
            out.free_pass += usize::from(symmetry_residual(&lop, &free).is_zero_op(&t).unwrap().zero);
            if survives == transverse {
                out.mismatched.push(format!("{}:{name}", e.id()));
            }
        }
    }
    out
}

fn criterion1(entries: &[catalog::CatalogEntry], sp: &Summary, elapsed: Duration) -> Line {
    let dep = departures(sp);
    let th = orbital_check(entries);
    let orbital_ok = th.mismatched.is_empty() && th.free_pass == th.checked && th.broken_where_transverse == th.transverse;
    let pass = dep.is_empty() && orbital_ok && elapsed <= SUITE_LIMIT;
    let text = format!(
        "SP classification: {}/{} rows reproduced, {} departures {:?}; {:.1}s. J->L: {} generators, L fails in {}/{} with a transverse Pauli field, passes with g=0 in {}/{}, keeps it in the other {}, where the field has no component off the axis",
        sp.reproduced,
        sp.rows,
        dep.len(),
        dep,
        elapsed.as_secs_f64(),
        th.checked,
        th.broken_where_transverse,
        th.transverse,
        th.free_pass,
        th.checked,
        th.checked - th.transverse,
    );
    Line { pass, documented: !pass && same(&dep, SP_DEPARTURES) && orbital_ok, text }
}

fn criterion2() -> Line {
    let t = test();
    // H3 = 1 from G = -rt^2/4.
    let cfg = PotentialConfig { g_fn: &Expr::ratio(-1, 4) * &Expr::rt().powi(2), a0: Expr::apply("V", vec![Expr::x(3)]), ..Default::default() };
    let two_g = &Expr::int(2) * &Expr::param("g");
    let detuned = &Expr::ratio(DETUNING.0, DETUNING.1) * &two_g;
    let c = Expr::param("c");
    let q = generators::q_precessing(&two_g, &c);
    let bad = generators::q_precessing(&detuned, &c);
    let s3 = DiffOp::sigma(3);
    let rq = verify("Q", &q, &cfg, Variant::Sp, &t, false).unwrap();
    let rs = verify("s3", &s3, &cfg, Variant::Sp, &t, false).unwrap();
    let rb = verify("Q'", &bad, &cfg, Variant::Sp, &t, false).unwrap();
    let pass = rq.symmetry && rs.symmetry && !rb.symmetry && rb.witness.is_some();
    let text = format!(
        "constant field: Q(2g) {}, s3 {}, Q(2.01g) {}{}",
        rq.symmetry,
        rs.symmetry,
        rb.symmetry,
        rb.witness.as_ref().map(|w| format!(" (witness at t={:.3}, x=({:.3}, {:.3}, {:.3}))", w.t, w.x[0], w.x[1], w.x[2])).unwrap_or_default()
    );
    Line { pass, documented: pass, text }
}

fn criterion3(h3: &Summary, h3a: &Summary) -> Line {
    let t1_h3 = h3.entries.iter().filter(|e| e.table == 1 && !e.agrees_with_tables).count();
    let lost = h3.entries.iter().filter(|e| (2..=3).contains(&e.table) && !e.reproduced).count();
    let t23 = h3.entries.iter().filter(|e| (2..=3).contains(&e.table)).count();
    let kept = h3a.entries.iter().filter(|e| e.table >= 2 && e.agrees_with_tables).count();
    let t24 = h3a.entries.iter().filter(|e| e.table >= 2).count();
    let (d3, d3a) = (departures(h3), departures(h3a));
    let pass = d3.is_empty() && d3a.is_empty();
    let text = format!(
        "QRSE matrix: Table 1 under H3 agrees in {}/14 rows; Tables 2-3 lost under H3 in {lost}/{t23}; Tables 2-4 kept under H3a in {kept}/{t24}; departures H3 {:?}, H3a {}",
        14 - t1_h3,
        d3,
        d3a.len()
    );
    let documented = !pass && lost == t23 && same(&d3, H3_DEPARTURES) && same(&d3a, H3A_DEPARTURES);
    Line { pass, documented, text }
}

fn criterion4() -> Line {
    let t = test();
    let mut notes = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut timed = |f: &mut dyn FnMut() -> bool| {
        let start = Instant::now();
        let ok = f();
        slowest = slowest.max(start.elapsed());
        ok
    };

    let zero = SuperintegrableSystem::new(1.0, VectorPotentialChoice::Zero);
    let mut zero_ok = false;
    let zero_pass = timed(&mut || {
        let rep = verify_superintegrable(&zero, &t).unwrap();
        zero_ok = rep.checks.iter().all(|c| c.symmetry);
        zero_ok
    });

    let gens: Vec<(String, DiffOp)> =
        ["Qhat", "Qtilde", "J1", "J2", "J3", "Jsq", "QPar"].iter().map(|n| (n.to_string(), generators::lookup(n, &[]).unwrap())).collect();
    let algebra = timed(&mut || {
        let rep = closure(&gens, &["Qhat", "Qtilde"], &t).unwrap();
        let zero_rel = |lhs: &str| rep.find(lhs).is_some_and(|r| r.closes && r.coefficients.is_empty());
        let square = |lhs: &str, want: &[(&str, f64)]| {
            rep.find(lhs).is_some_and(|r| {
                r.closes
                    && r.coefficients.len() == want.len()
                    && want.iter().all(|(k, v)| r.coefficients.get(*k).is_some_and(|c| (c[0] - v).abs() < 1e-8 && c[1].abs() < 1e-8))
            })
        };
        zero_rel("{Qhat,Qtilde}") && square("Qhat^2", &[("1", 1.0)]) && square("Qtilde^2", &[("1", 0.25), ("Jsq", 1.0)]) && zero_rel("[Qhat,QPar]")
    });

    let phi = [Expr::zero(), Expr::zero(), Expr::one()];
    let printed = SuperintegrableSystem::new(1.0, VectorPotentialChoice::printed(phi.clone()));
    let radial = SuperintegrableSystem::new(1.0, VectorPotentialChoice::radial_field(phi));
    let survivors = |sys: &SuperintegrableSystem| -> Vec<String> {
        verify_superintegrable(sys, &t).unwrap().checks.into_iter().filter(|c| c.symmetry).map(|c| c.name).collect()
    };
    let mut printed_set = Vec::new();
    let mut radial_set = Vec::new();
    timed(&mut || {
        printed_set = survivors(&printed);
        true
    });
    timed(&mut || {
        radial_set = survivors(&radial);
        true
    });
    let want = vec!["Qhat".to_string(), "J3".to_string()];
    let printed_ok = printed_set == want;
    let radial_ok = radial_set == want;
    notes.push(format!("A=0 integrals {zero_ok}, algebra {algebra}"));
    notes.push(format!("printed r^(1+nu+1/g) keeps {printed_set:?}"));
    notes.push(format!("r^2 keeps {radial_set:?}"));
    notes.push(format!("slowest check {:.2}s", slowest.as_secs_f64()));
    let fast = slowest <= CHECK_LIMIT;
    let pass = zero_pass && algebra && printed_ok && fast;
    let documented = !pass && zero_pass && algebra && fast && radial_ok && printed_set == ["J3".to_string()];
    Line { pass, documented, text: format!("superintegrable: {}", notes.join("; ")) }
}

fn criterion5(summaries: &[&Summary]) -> Line {
    // `verify` returns an error whenever the two routes disagree, so a finished
    // summary has zero discrepancies; count how many verdicts were cross-checked.
    let mut total = 0;
    let mut crossed = 0;
    for s in summaries {
        for e in &s.entries {
            for t in &e.templates {
                for g in &t.generators {
                    total += 1;
                    crossed += usize::from(g.report.determining.as_ref().is_some_and(|d| d.pass() == g.report.symmetry));
                }
            }
        }
    }
    let pass = crossed == total;
    Line { pass, documented: pass, text: format!("route equivalence: {crossed}/{total} verdicts agree across routes, 0 discrepancies") }
}

fn criterion6() -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for sc in Scenario::all() {
        let start = Instant::now();
        let rep = sc.run::<f64>(sc.grid(), &sc.spec(200)).unwrap();
        let secs = start.elapsed();
        let ok = rep.passes() && secs <= RUN_LIMIT;
        pass &= ok;
        parts.push(format!(
            "{} {} drift {:.2e} (limit {DRIFT_LIMIT:.0e}), control {} x{:.0} (min {CONTROL_RATIO}), {:.0}s",
            rep.name,
            rep.conserved_name,
            rep.conserved.relative_drift,
            rep.control_name,
            rep.ratio,
            secs.as_secs_f64()
        ));
    }
    Line { pass, documented: pass, text: format!("numeric conservation on 48^3, 200 steps: {}", parts.join("; ")) }
}

fn criterion7() -> Line {
    let h = Scenario::axial().hamiltonian();
    let real = Realization::new();
    let r2 = Expr::add_all((1..=3).map(|a| Expr::x(a).powi(2)));
    let gauss = |k: i64| (-&(&r2 / &Expr::int(k))).exp();
    let i = Expr::i();
    let fields = [
        [gauss(2), Expr::zero()],
        [&(&Expr::x(1) + &(&i * &Expr::x(2))) * &gauss(2), &(&Expr::ratio(1, 2) * &i) * &gauss(3)],
        [&Expr::x(3).cos() * &gauss(3), Expr::mul_all([Expr::x(1), Expr::x(3), gauss(2)])],
    ];
    let orders: Vec<f64> = fields.iter().map(|f| convergence(&h, f, &real, 6.0, &[16, 32, 64], Stencil::Second).unwrap().observed_order()).collect();
    let pass = orders.iter().all(|&o| o >= ORDER_MIN);
    Line { pass, documented: pass, text: format!("grid vs symbolic apply, second-order stencil: L2 orders {orders:.3?} (min {ORDER_MIN})") }
}

fn criterion8(entries: &[catalog::CatalogEntry], first: &Summary) -> Line {
    let again = catalog::verify_all(entries, Variant::Sp, &test()).unwrap();
    let a = serde_json::to_vec(first).unwrap();
    let b = serde_json::to_vec(&again).unwrap();
    let pass = a == b;
    Line {
        pass,
        documented: pass,
        text: format!("determinism: two SP runs with seed {SEED:#x} give {} JSON ({} bytes)", if pass { "identical" } else { "different" }, a.len()),
    }
}

fn main() -> ExitCode {
    let entries = catalog::load_builtin().unwrap();
    let start = Instant::now();
    let sp = catalog::verify_all(&entries, Variant::Sp, &test()).unwrap();
    let sp_time = start.elapsed();
    let h3 = catalog::verify_all(&entries, Variant::QrseH3, &test()).unwrap();
    let h3a = catalog::verify_all(&entries, Variant::QrseH3a, &test()).unwrap();

    let lines = [
        criterion1(&entries, &sp, sp_time),
        criterion2(),
        criterion3(&h3, &h3a),
        criterion4(),
        criterion5(&[&sp, &h3, &h3a]),
        criterion6(),
        criterion7(),
        criterion8(&entries, &sp),
    ];
    let mut drifted = 0;
    for (k, l) in lines.iter().enumerate() {
        let status = if l.pass { "PASS" } else { "FAIL" };
        let note = match (l.pass, l.documented) {
            (true, _) => "",
            (false, true) => " [documented]",
            (false, false) => " [unexpected]",
        };
        println!("{status} {}{note}: {}", k + 1, l.text);
        drifted += usize::from(!l.documented);
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    println!("acceptance: {passed}/{} PASS, {drifted} away from the recorded outcome", lines.len());
    if drifted == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
