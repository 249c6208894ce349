//! Concrete configurations for conservation runs.

use num_complex::Complex;
use serde::Serialize;

use super::evolve::{drift_of, evolve, DriftReport, EvolutionSpec, Trajectory};
use super::grid::{Grid, GridState};
use crate::catalog::generators::{j, l, q_hat};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{Expr, Realization};
use crate::model::{PotentialConfig, Variant, VectorRep};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct Packet {
    pub center: [f64; 3],
    pub width: f64,
    pub momentum: [f64; 3],
    /// Unnormalised spin direction as `[re0, im0, re1, im1]`.
    pub spin: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    pub cfg: PotentialConfig,
    pub variant: Variant,
    pub params: Vec<(&'static str, f64)>,
    pub conserved: (String, DiffOp),
    /// Operator and configuration of the broken control.
    pub control: (String, DiffOp, PotentialConfig),
    pub packet: Packet,
    pub dt: f64,
}

/// Largest relative drift accepted for the conserved quantity.
pub const DRIFT_LIMIT: f64 = 1e-4;
/// Smallest accepted ratio of control drift to conserved drift.
pub const CONTROL_RATIO: f64 = 10.0;

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub name: String,
    pub conserved_name: String,
    pub conserved: DriftReport,
    pub control_name: String,
    pub control: DriftReport,
    /// `control.relative_drift / conserved.relative_drift`
    pub ratio: f64,
    pub max_iterations: usize,
}

fn gauss(scale: Expr, width2: i64) -> Expr {
    let rho2 = &Expr::rt().powi(2) + &Expr::x(3).powi(2);
    &scale * &(-&(&rho2 / &Expr::int(width2))).exp()
}

impl ScenarioReport {
    /// Conserved within [`DRIFT_LIMIT`], control broken by [`CONTROL_RATIO`], packet clear of the walls.
    pub fn passes(&self) -> bool {
        self.conserved.relative_drift <= DRIFT_LIMIT
            && self.ratio >= CONTROL_RATIO
            && !self.conserved.boundary_contact
            && !self.control.boundary_contact
    }
}

impl Scenario {
    /// Axially symmetric fields, `J3` conserved and `L3` not.
    pub fn axial() -> Self {
        let rt2 = Expr::rt().powi(2);
        let g_fn = Expr::mul_all([Expr::ratio(1, 16), rt2.clone(), &Expr::one() + &(&Expr::ratio(1, 5) * &Expr::x(3))]);
        let cfg = PotentialConfig {
            f: gauss(Expr::ratio(2, 5), 16),
            g_fn,
            a0: &Expr::ratio(1, 8) * &(&rt2 + &Expr::x(3).powi(2)),
            rep: VectorRep::Compact,
            g: Expr::one(),
            ..Default::default()
        };
        Scenario {
            name: "axial",
            about: "F = 0.4 exp(-(rt^2+x3^2)/16), G = rt^2 (1 + x3/5)/16, A0 = (rt^2 + x3^2)/8",
            control: ("L3".into(), l(3), cfg.clone()),
            cfg,
            variant: Variant::Sp,
            params: vec![],
            conserved: ("J3".into(), j(3)),
            packet: Packet { center: [1.5, 0.0, 0.5], width: 1.4, momentum: [0.0, 0.5, 0.0], spin: [1.0, 0.0, 0.0, 0.0] },
            dt: 0.005,
        }
    }

    /// `A0 = ln(r)/(2 nu)`, `A = 0`; the control doubles `A0`.
    pub fn log_potential() -> Self {
        let cfg = |scale: Expr| PotentialConfig { a0: &(&scale * &Expr::r().ln()) / &Expr::param("nu"), ..Default::default() };
        Scenario {
            name: "log",
            about: "A0 = ln(r)/(2 nu), A = 0, nu = 1, mu = 0.7; control A0 = ln(r)/nu",
            cfg: cfg(Expr::ratio(1, 2)),
            variant: Variant::QrseH3,
            params: vec![("nu", 1.0), ("mu", 0.7), ("g", 1.0)],
            conserved: ("Qhat".into(), q_hat()),
            control: ("Qhat".into(), q_hat(), cfg(Expr::one())),
            packet: Packet { center: [3.0, 0.0, 0.0], width: 0.9, momentum: [0.0, 0.8, 0.0], spin: [1.0, 0.0, 1.0, 0.0] },
            dt: 0.0025,
        }
    }

    pub fn all() -> Vec<Scenario> {
        vec![Scenario::axial(), Scenario::log_potential()]
    }

    pub fn by_name(name: &str) -> Result<Scenario> {
        Scenario::all().into_iter().find(|s| s.name == name).ok_or_else(|| Error::Invalid(format!("unknown scenario `{name}`")))
    }

    /// Default desk run: `N = 48` on `[-8, 8]^3`.
    pub fn grid<T: Real>(&self) -> Grid<T> {
        Grid::new(48, T::lit(8.0))
    }

    /// `steps` steps of the scenario's `dt`, recording every fifth.
    pub fn spec<T: Real>(&self, steps: usize) -> EvolutionSpec<T> {
        EvolutionSpec { record_every: 5, ..EvolutionSpec::new(T::lit(self.dt), steps) }
    }

    pub fn hamiltonian(&self) -> DiffOp {
        self.cfg.hamiltonian(self.variant)
    }

    pub fn realization<T: Real>(&self) -> Realization<T> {
        self.params.iter().fold(Realization::new(), |r, (k, v)| r.with_param(k, T::lit(*v)))
    }

    pub fn initial<T: Real>(&self, grid: Grid<T>) -> GridState<T> {
        let p = &self.packet;
        let c = |re: f64, im: f64| Complex::new(T::lit(re), T::lit(im));
        GridState::gaussian(grid, p.center.map(T::lit), T::lit(p.width), p.momentum.map(T::lit), [c(p.spin[0], p.spin[1]), c(p.spin[2], p.spin[3])])
    }

    pub fn run<T: Real>(&self, grid: Grid<T>, spec: &EvolutionSpec<T>) -> Result<ScenarioReport> {
        Ok(self.run_traced(grid, spec)?.0)
    }

    /// Like [`Scenario::run`], also returning the trajectory of the conserved run.
    pub fn run_traced<T: Real>(&self, grid: Grid<T>, spec: &EvolutionSpec<T>) -> Result<(ScenarioReport, Trajectory<T>)> {
        let real = self.realization::<T>();
        let s0 = self.initial(grid);
        let (cname, cop, ccfg) = &self.control;
        let same_h = ccfg.hamiltonian(self.variant) == self.hamiltonian();
        let mut tracked = vec![self.conserved.clone()];
        if same_h {
            tracked.push((cname.clone(), cop.clone()));
        }
        let traj = evolve(&s0, &self.hamiltonian(), &real, spec, &tracked)?;
        let conserved = drift_of(&traj, 0, spec.steps);
        let mut max_iterations = traj.max_iterations;
        let control = if same_h {
            drift_of(&traj, 1, spec.steps)
        } else {
            let t2 = evolve(&s0, &ccfg.hamiltonian(self.variant), &real, spec, &[(cname.clone(), cop.clone())])?;
            max_iterations = max_iterations.max(t2.max_iterations);
            drift_of(&t2, 0, spec.steps)
        };
        let report = ScenarioReport {
            name: self.name.into(),
            conserved_name: self.conserved.0.clone(),
            ratio: control.relative_drift / conserved.relative_drift.max(f64::MIN_POSITIVE),
            conserved,
            control_name: cname.clone(),
            control,
            max_iterations,
        };
        Ok((report, traj))
    }
}
