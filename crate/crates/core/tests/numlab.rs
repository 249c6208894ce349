use num_complex::Complex64 as C;
use paulisym::catalog::generators::j;
use paulisym::expr::Realization;
use paulisym::numlab::scenario::Scenario;
use paulisym::numlab::{convergence, discretize_apply, evolve, Boundary, DiscreteOp, EvolutionSpec, Grid, GridState, Stencil};
use paulisym::{DiffOp, Expr, PotentialConfig, Variant};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn free_h() -> DiffOp {
    PotentialConfig::default().hamiltonian(Variant::Sp)
}

fn gauss(k: i64) -> Expr {
    let r2 = Expr::add_all((1..=3).map(|a| Expr::x(a).powi(2)));
    (-&(&r2 / &Expr::int(k))).exp()
}

fn test_fields() -> Vec<[Expr; 2]> {
    let i = Expr::i();
    vec![
        [gauss(2), Expr::zero()],
        [&(&Expr::x(1) + &(&i * &Expr::x(2))) * &gauss(2), &(&Expr::ratio(1, 2) * &i) * &gauss(3)],
        [&Expr::x(3).cos() * &gauss(3), Expr::mul_all([Expr::x(1), Expr::x(3), gauss(2)])],
    ]
}

#[test]
fn second_order_stencils_converge_at_order_two() {
    let h = Scenario::axial().hamiltonian();
    let real = Realization::new();
    for (k, f) in test_fields().iter().enumerate() {
        let rep = convergence(&h, f, &real, 6.0, &[16, 32, 64], Stencil::Second).unwrap();
        assert!(rep.observed_order() >= 1.9, "field {k}: {rep:?}");
        assert!(rep.max_error[2] < rep.max_error[0]);
    }
}

#[test]
fn fourth_order_stencils_beat_second_order() {
    let real = Realization::new();
    let f = &test_fields()[1];
    let rep = convergence(&free_h(), f, &real, 6.0, &[24, 48], Stencil::Fourth).unwrap();
    assert!(rep.observed_order() >= 3.5, "{rep:?}");
}

#[test]
fn parity_reverses_indices() {
    let g = Grid::new(10, 4.0);
    let s = GridState::from_fn(g, 0.0, |x| [c(x[0] + 2.0 * x[1], x[2]), c(x[0] * x[2], 1.0)]);
    let p = discretize_apply(&DiffOp::parity(), &s, &Realization::new(), Stencil::Fourth, Boundary::Dirichlet).unwrap();
    for i in 0..g.len() {
        assert_eq!(p.psi[i], s.psi[g.mirror(i)]);
    }
}

#[test]
fn axial_spin_up_gaussian_is_a_j3_eigenstate() {
    let g = Grid::new(48, 8.0);
    let s = GridState::gaussian(g, [0.0; 3], 1.2, [0.0; 3], [c(1.0, 0.0), c(0.0, 0.0)]);
    let js = discretize_apply(&j(3), &s, &Realization::new(), Stencil::Fourth, Boundary::Dirichlet).unwrap();
    let err = js.psi.iter().zip(&s.psi).map(|(a, b)| (a[0] - b[0] * 0.5).norm().max(a[1].norm())).fold(0.0, f64::max);
    let peak = s.psi.iter().map(|v| v[0].norm()).fold(0.0, f64::max);
    assert!(err < 2e-3 * peak, "{}", err / peak);
}

#[test]
fn free_packet_spreads_as_predicted() {
    let (w, t_end) = (1.5, 1.0);
    // The fourth-order stencil slows group velocities by h^4 k^5 / 30.
    let g = Grid::new(48, 6.0);
    let s0 = GridState::gaussian(g, [0.0; 3], w, [0.0; 3], [c(1.0, 0.0), c(0.0, 0.0)]);
    let spec = EvolutionSpec { record_every: 10, ..EvolutionSpec::new(0.01, 100) };
    let x2 = DiffOp::scalar(Expr::x(1).powi(2));
    let traj = evolve(&s0, &free_h(), &Realization::new(), &spec, &[("x1^2".into(), x2)]).unwrap();
    for row in &traj.rows {
        let want = (w * w + row.t * row.t / (w * w)) / 2.0;
        assert!((row.values[0][0] - want).abs() < 1e-4, "t={} got {} want {want}", row.t, row.values[0][0]);
    }
    assert!((traj.rows.last().unwrap().t - t_end).abs() < 1e-12);
    assert!(traj.norm_drift() < 1e-8 * spec.steps as f64);
}

#[test]
fn spin_precesses_at_twice_the_coupling_times_the_field() {
    // G = -c rt^2 / 4 gives the constant field H3 = c.
    let (field, g_coupling) = (0.8, 1.0);
    let cfg = PotentialConfig { g_fn: Expr::mul_all([Expr::ratio(-1, 5), Expr::rt().powi(2)]), g: Expr::one(), ..Default::default() };
    let grid = Grid::new(16, 6.0);
    let s0 = GridState::gaussian(grid, [0.0; 3], 1.0, [0.0; 3], [c(1.0, 0.0), c(1.0, 0.0)]);
    let spec = EvolutionSpec { record_every: 20, ..EvolutionSpec::new(0.005, 200) };
    let tracked = [("s1".to_string(), DiffOp::sigma(1)), ("s2".to_string(), DiffOp::sigma(2))];
    let traj = evolve(&s0, &cfg.hamiltonian(Variant::Sp), &Realization::new(), &spec, &tracked).unwrap();
    // Crank-Nicolson phase errors are O(dt^2) per unit time.
    for row in &traj.rows {
        let w = 2.0 * g_coupling * field * row.t;
        assert!((row.values[0][0] - w.cos()).abs() < 1e-4, "t={} s1={}", row.t, row.values[0][0]);
        assert!((row.values[1][0] - w.sin()).abs() < 1e-4, "t={} s2={}", row.t, row.values[1][0]);
    }
    let last = traj.rows.last().unwrap();
    let detuned = 2.01 * g_coupling * field * last.t;
    assert!((last.values[0][0] - detuned.cos()).abs() > 1e-3);
}

#[test]
fn crank_nicolson_runs_backwards() {
    let sc = Scenario::axial();
    let grid = Grid::new(16, 8.0f64);
    let s0 = sc.initial(grid);
    let h = sc.hamiltonian();
    let real = sc.realization();
    let fwd = evolve(&s0, &h, &real, &EvolutionSpec::new(0.02, 20), &[]).unwrap();
    let back = evolve(&fwd.last, &h, &real, &EvolutionSpec::new(-0.02, 20), &[]).unwrap();
    let err = back.last.psi.iter().zip(&s0.psi).map(|(a, b)| (a[0] - b[0]).norm().max((a[1] - b[1]).norm())).fold(0.0, f64::max);
    assert!(err < 1e-7, "{err}");
    let still = evolve(&s0, &h, &real, &EvolutionSpec::new(0.02, 0), &[]).unwrap();
    assert_eq!(still.last.psi, s0.psi);
}

#[test]
fn single_precision_grid_runs() {
    let sc = Scenario::axial();
    let g = Grid::new(12, 8.0f32);
    let s = sc.initial(g);
    let out = discretize_apply(&sc.hamiltonian(), &s, &sc.realization(), Stencil::Second, Boundary::Periodic).unwrap();
    assert!(out.psi.iter().all(|v| v[0].re.is_finite() && v[1].im.is_finite()));
}

fn random_state(grid: Grid<f64>, seed: &[f64]) -> GridState<f64> {
    GridState::from_fn(grid, 0.0, |x| {
        let ph = seed[0] * x[0] + seed[1] * x[1] + seed[2] * x[2];
        let env = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (1.0 + seed[3])).exp();
        [C::from_polar(env, ph), C::from_polar(env * seed[4], -ph)]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn discrete_hamiltonians_are_hermitian(a in prop::collection::vec(0.1f64..2.0, 5), b in prop::collection::vec(0.1f64..2.0, 5)) {
        let grid = Grid::new(8, 4.0);
        let sc = Scenario::log_potential();
        let d = DiscreteOp::compile(&sc.hamiltonian(), grid, 0.0, &sc.realization(), Stencil::Fourth, Boundary::Dirichlet).unwrap();
        let (u, v) = (random_state(grid, &a), random_state(grid, &b));
        let lhs = u.inner(&d.apply(&v.psi));
        let rhs = v.inner(&d.apply(&u.psi)).conj();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()), "{lhs} vs {rhs}");
    }

    #[test]
    fn grid_application_is_linear(a in prop::collection::vec(0.1f64..2.0, 5), b in prop::collection::vec(0.1f64..2.0, 5), s in -2.0f64..2.0) {
        let grid = Grid::new(8, 4.0);
        let sc = Scenario::axial();
        let d = DiscreteOp::compile(&sc.hamiltonian(), grid, 0.0, &sc.realization(), Stencil::Second, Boundary::Periodic).unwrap();
        let (u, v) = (random_state(grid, &a), random_state(grid, &b));
        let k = c(s, 0.5);
        let mix: Vec<_> = u.psi.iter().zip(&v.psi).map(|(x, y)| [x[0] + k * y[0], x[1] + k * y[1]]).collect();
        let (du, dv, dm) = (d.apply(&u.psi), d.apply(&v.psi), d.apply(&mix));
        for i in 0..grid.len() {
            for comp in 0..2 {
                let want = du[i][comp] + k * dv[i][comp];
                prop_assert!((dm[i][comp] - want).norm() <= 1e-9 * (1.0 + want.norm()));
            }
        }
    }
}
