use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Boundary, GridState, Spinor};
use super::stencil::{DiscreteOp, Stencil};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{Realization, Var};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct EvolutionSpec<T> {
    pub dt: T,
    pub steps: usize,
    pub boundary: Boundary,
    pub stencil: Stencil,
    /// Relative residual of each Crank-Nicolson solve.
    pub tol: T,
    pub max_iter: usize,
    /// Record expectation values every this many steps.
    pub record_every: usize,
}

impl<T: Real> EvolutionSpec<T> {
    pub fn new(dt: T, steps: usize) -> Self {
        EvolutionSpec { dt, steps, boundary: Boundary::Dirichlet, stencil: Stencil::Fourth, tol: T::lit(1e-10), max_iter: 500, record_every: 1 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    /// `[re, im]` of each tracked expectation value.
    pub values: Vec<[f64; 2]>,
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub names: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
    pub last: GridState<T>,
    pub max_iterations: usize,
}

impl<T: Real> Trajectory<T> {
    /// `max_t |<Q>(t) - <Q>(0)|` for tracked operator `k`.
    pub fn drift(&self, k: usize) -> f64 {
        let v0 = self.rows[0].values[k];
        self.rows.iter().map(|r| (r.values[k][0] - v0[0]).hypot(r.values[k][1] - v0[1])).fold(0.0, f64::max)
    }

    pub fn norm_drift(&self) -> f64 {
        let n0 = self.rows[0].norm;
        self.rows.iter().map(|r| (r.norm - n0).abs()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "norm".to_string()];
        for n in &self.names {
            header.push(format!("{n}_re"));
            header.push(format!("{n}_im"));
        }
        let csv_err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![format!("{:.12e}", r.t), format!("{:.12e}", r.norm)];
            for v in &r.values {
                rec.push(format!("{:.12e}", v[0]));
                rec.push(format!("{:.12e}", v[1]));
            }
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

type Vector<T> = Vec<Spinor<T>>;

fn dot<T: Real>(a: &[Spinor<T>], b: &[Spinor<T>]) -> Complex<T> {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x[0].conj() * y[0] + x[1].conj() * y[1]).reduce(|| Complex::new(T::zero(), T::zero()), |p, q| p + q)
}

fn norm<T: Real>(a: &[Spinor<T>]) -> T {
    dot(a, a).re.sqrt()
}

/// `a + s b`
fn axpy<T: Real>(a: &[Spinor<T>], s: Complex<T>, b: &[Spinor<T>]) -> Vector<T> {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| [x[0] + s * y[0], x[1] + s * y[1]]).collect()
}

/// `psi + c H psi`
fn shifted<T: Real>(h: &DiscreteOp<T>, c: Complex<T>, psi: &[Spinor<T>]) -> Vector<T> {
    axpy(psi, c, &h.apply(psi))
}

/// BiCGSTAB for `(1 + c H) x = b`; returns the solution and iteration count.
fn solve<T: Real>(h: &DiscreteOp<T>, c: Complex<T>, b: &[Spinor<T>], x0: Vector<T>, tol: T, max_iter: usize) -> Result<(Vector<T>, usize)> {
    let one = Complex::new(T::one(), T::zero());
    let bnorm = norm(b);
    if bnorm == T::zero() {
        return Ok((x0, 0));
    }
    let mut x = x0;
    let mut r = axpy(b, -one, &shifted(h, c, &x));
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (one, one, one);
    let zero_v = vec![[Complex::new(T::zero(), T::zero()); 2]; b.len()];
    let (mut v, mut p) = (zero_v.clone(), zero_v);
    for it in 0..max_iter {
        if norm(&r) <= tol * bnorm {
            return Ok((x, it));
        }
        let rho_new = dot(&r_hat, &r);
        let beta = (rho_new / rho) * (alpha / omega);
        let pv = axpy(&p, -omega, &v);
        p = axpy(&r, beta, &pv);
        v = shifted(h, c, &p);
        alpha = rho_new / dot(&r_hat, &v);
        let s = axpy(&r, -alpha, &v);
        x = axpy(&x, alpha, &p);
        if norm(&s) <= tol * bnorm {
            return Ok((x, it + 1));
        }
        let t = shifted(h, c, &s);
        omega = dot(&t, &s) / dot(&t, &t);
        x = axpy(&x, omega, &s);
        r = axpy(&s, -omega, &t);
        rho = rho_new;
    }
    Err(Error::Invalid(format!("Crank-Nicolson solve did not converge in {max_iter} iterations")))
}

fn depends_on_time(op: &DiffOp) -> bool {
    op.coefficient_exprs().iter().any(|e| e.depends_on(Var::T))
}

struct Cached<'a, T> {
    op: &'a DiffOp,
    fixed: Option<DiscreteOp<T>>,
}

impl<'a, T: Real> Cached<'a, T> {
    fn new(op: &'a DiffOp, s: &GridState<T>, real: &Realization<T>, spec: &EvolutionSpec<T>) -> Result<Self> {
        let fixed = if depends_on_time(op) { None } else { Some(DiscreteOp::compile(op, s.grid, T::zero(), real, spec.stencil, spec.boundary)?) };
        Ok(Cached { op, fixed })
    }

    fn at(&self, t: T, s: &GridState<T>, real: &Realization<T>, spec: &EvolutionSpec<T>) -> Result<std::borrow::Cow<'_, DiscreteOp<T>>> {
        Ok(match &self.fixed {
            Some(d) => std::borrow::Cow::Borrowed(d),
            None => std::borrow::Cow::Owned(DiscreteOp::compile(self.op, s.grid, t, real, spec.stencil, spec.boundary)?),
        })
    }
}

fn record<T: Real>(s: &GridState<T>, tracked: &[Cached<'_, T>], real: &Realization<T>, spec: &EvolutionSpec<T>) -> Result<TrajectoryRow> {
    let n = s.norm_sq();
    let mut values = Vec::with_capacity(tracked.len());
    for q in tracked {
        let qd = q.at(s.time, s, real, spec)?;
        let e = s.inner(&qd.apply(&s.psi)) / n;
        values.push([e.re.to_f64().unwrap(), e.im.to_f64().unwrap()]);
    }
    Ok(TrajectoryRow { t: s.time.to_f64().unwrap(), norm: n.to_f64().unwrap(), values })
}

/// Crank-Nicolson evolution under `h`, evaluated at mid-step times, tracking
/// the expectation values of `tracked`.
pub fn evolve<T: Real>(
    s0: &GridState<T>,
    h: &DiffOp,
    real: &Realization<T>,
    spec: &EvolutionSpec<T>,
    tracked: &[(String, DiffOp)],
) -> Result<Trajectory<T>> {
    let hc = Cached::new(h, s0, real, spec)?;
    let qs: Vec<Cached<'_, T>> = tracked.iter().map(|(_, q)| Cached::new(q, s0, real, spec)).collect::<Result<_>>()?;
    let mut s = s0.clone();
    let mut rows = vec![record(&s, &qs, real, spec)?];
    let half_dt = spec.dt * T::lit(0.5);
    let c = Complex::new(T::zero(), half_dt);
    let mut max_iterations = 0;
    for step in 0..spec.steps {
        let hd = hc.at(s.time + half_dt, &s, real, spec)?;
        let rhs = shifted(&hd, -c, &s.psi);
        let (next, its) = solve(&hd, c, &rhs, rhs.clone(), spec.tol, spec.max_iter)?;
        max_iterations = max_iterations.max(its);
        s.psi = next;
        s.time += spec.dt;
        if (step + 1) % spec.record_every.max(1) == 0 || step + 1 == spec.steps {
            rows.push(record(&s, &qs, real, spec)?);
        }
    }
    Ok(Trajectory { names: tracked.iter().map(|(n, _)| n.clone()).collect(), rows, last: s, max_iterations })
}

#[derive(Clone, Debug, Serialize)]
pub struct DriftReport {
    pub initial: [f64; 2],
    pub drift: f64,
    /// `max(|<Q>(0)|, 1)`
    pub scale: f64,
    pub relative_drift: f64,
    pub norm_drift: f64,
    pub edge_mass: f64,
    /// Probability reached the outer cells; the run says nothing then.
    pub boundary_contact: bool,
    pub steps: usize,
}

/// Edge mass above which a run is flagged.
pub const EDGE_MASS_LIMIT: f64 = 1e-6;

pub fn conservation_drift<T: Real>(q: &DiffOp, s0: &GridState<T>, h: &DiffOp, real: &Realization<T>, spec: &EvolutionSpec<T>) -> Result<DriftReport> {
    let traj = evolve(s0, h, real, spec, &[("Q".into(), q.clone())])?;
    Ok(drift_of(&traj, 0, spec.steps))
}

pub(crate) fn drift_of<T: Real>(traj: &Trajectory<T>, k: usize, steps: usize) -> DriftReport {
    let initial = traj.rows[0].values[k];
    let drift = traj.drift(k);
    let scale = initial[0].hypot(initial[1]).max(1.0);
    let edge_mass = traj.last.edge_mass(3).to_f64().unwrap();
    DriftReport {
        initial,
        drift,
        scale,
        relative_drift: drift / scale,
        norm_drift: traj.norm_drift(),
        edge_mass,
        boundary_contact: edge_mass > EDGE_MASS_LIMIT,
        steps,
    }
}
