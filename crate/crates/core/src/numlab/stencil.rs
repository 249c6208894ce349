use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid, GridState, Spinor};
use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{Evaluator, Expr, Point, Realization, Var};
use crate::pauli::{Mat2, PauliExpr};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stencil {
    #[serde(rename = "2")]
    Second,
    #[serde(rename = "4")]
    Fourth,
}

impl Stencil {
    fn first(self) -> &'static [(isize, f64)] {
        match self {
            Stencil::Second => &[(-1, -0.5), (1, 0.5)],
            Stencil::Fourth => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    fn second(self) -> &'static [(isize, f64)] {
        match self {
            Stencil::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            Stencil::Fourth => &[(-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    pub fn nominal_order(self) -> f64 {
        match self {
            Stencil::Second => 2.0,
            Stencil::Fourth => 4.0,
        }
    }
}

/// A sampled coefficient; constants are stored once.
#[derive(Clone, Debug)]
enum Coef<T> {
    Const(Mat2<T>),
    Field(Vec<Mat2<T>>),
}

impl<T: Real> Coef<T> {
    fn at(&self, i: usize) -> &Mat2<T> {
        match self {
            Coef::Const(m) => m,
            Coef::Field(f) => &f[i],
        }
    }
}

#[derive(Clone, Debug)]
struct Part<T> {
    zeroth: Option<Coef<T>>,
    first: [Option<Coef<T>>; 3],
    second: Vec<(usize, usize, Coef<T>)>,
}

impl<T> Default for Part<T> {
    fn default() -> Self {
        Part { zeroth: None, first: [None, None, None], second: Vec::new() }
    }
}

impl<T> Part<T> {
    fn is_empty(&self) -> bool {
        self.zeroth.is_none() && self.first.iter().all(Option::is_none) && self.second.is_empty()
    }
}

/// A differential operator sampled on a grid at one time.
///
/// First-order terms `c d_a` are applied as `(c D_a + D_a c)/2 - (d_a c)/2`,
/// so a formally hermitian operator stays hermitian on the grid.
#[derive(Clone, Debug)]
pub struct DiscreteOp<T> {
    grid: Grid<T>,
    boundary: Boundary,
    parts: [Part<T>; 2],
    /// First- and second-derivative weights with the spacing folded in.
    w1: Vec<(isize, T)>,
    w2: Vec<(isize, T)>,
}

fn sample<T: Real>(grid: &Grid<T>, t: T, real: &Realization<T>, coeffs: &[PauliExpr]) -> Result<Vec<Coef<T>>> {
    let constant: Vec<bool> = coeffs.iter().map(|c| c.c.iter().all(|e| !(1..=3).any(|a| e.depends_on(Var::x(a))))).collect();
    let varying: Vec<&PauliExpr> = coeffs.iter().zip(&constant).filter(|(_, k)| !**k).map(|(c, _)| c).collect();
    let per_node: Vec<Vec<Mat2<T>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let mut ev = Evaluator::new(Point::new(t, grid.point(i)), real);
            varying.iter().map(|c| c.eval(&mut ev)).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let mut ev = Evaluator::new(Point::new(t, [T::zero(); 3]), real);
    let mut k = 0;
    let mut out = Vec::with_capacity(coeffs.len());
    for (c, is_const) in coeffs.iter().zip(constant) {
        if is_const {
            out.push(Coef::Const(c.eval(&mut ev)?));
        } else {
            out.push(Coef::Field(per_node.iter().map(|row| row[k]).collect()));
            k += 1;
        }
    }
    Ok(out)
}

fn madd<T: Real>(acc: &mut Spinor<T>, m: &Mat2<T>, v: Spinor<T>, s: T) {
    let w = m.apply(v);
    acc[0] += w[0] * s;
    acc[1] += w[1] * s;
}

/// Neighbour lookup for one node.
struct Site {
    idx: usize,
    ijk: [usize; 3],
}

impl<T: Real> DiscreteOp<T> {
    pub fn compile(op: &DiffOp, grid: Grid<T>, t: T, real: &Realization<T>, stencil: Stencil, boundary: Boundary) -> Result<Self> {
        let zero = PauliExpr::zero();
        // Expressions per part: zeroth, first[3], then second-order entries.
        let mut exprs: [Vec<PauliExpr>; 2] = [vec![zero.clone(); 4], vec![zero.clone(); 4]];
        let mut second_keys: [Vec<(usize, usize)>; 2] = [Vec::new(), Vec::new()];
        for (key, c) in op.terms() {
            let r = key.reflected as usize;
            let m = key.mono;
            if m[0] != 0 {
                return Err(Error::Invalid(format!("time derivative in {op} cannot be applied on a grid")));
            }
            let axes: Vec<usize> = (0..3).flat_map(|a| std::iter::repeat_n(a, m[a + 1] as usize)).collect();
            match axes.as_slice() {
                [] => exprs[r][0] = &exprs[r][0] + c,
                [a] => {
                    exprs[r][a + 1] = &exprs[r][a + 1] + c;
                    let dc = c.diff(Var::x(a + 1)).scale(&Expr::ratio(-1, 2));
                    exprs[r][0] = &exprs[r][0] + &dc;
                }
                [a, b] => {
                    second_keys[r].push((*a, *b));
                    exprs[r].push(c.clone());
                }
                _ => return Err(Error::Invalid(format!("differential order {} above 2", axes.len()))),
            }
        }
        let mut parts: [Part<T>; 2] = [Part::default(), Part::default()];
        for r in 0..2 {
            let live: Vec<usize> = (0..exprs[r].len()).filter(|&k| !exprs[r][k].simplify().is_zero()).collect();
            if live.is_empty() {
                continue;
            }
            let coeffs: Vec<PauliExpr> = live.iter().map(|&k| exprs[r][k].clone()).collect();
            let fields = sample(&grid, t, real, &coeffs)?;
            for (k, f) in live.into_iter().zip(fields) {
                match k {
                    0 => parts[r].zeroth = Some(f),
                    1..=3 => parts[r].first[k - 1] = Some(f),
                    _ => {
                        let (a, b) = second_keys[r][k - 4];
                        parts[r].second.push((a, b, f));
                    }
                }
            }
        }
        let h = grid.h();
        let w1 = stencil.first().iter().map(|&(o, w)| (o, T::lit(w) / h)).collect();
        let w2 = stencil.second().iter().map(|&(o, w)| (o, T::lit(w) / (h * h))).collect();
        Ok(DiscreteOp { grid, boundary, parts, w1, w2 })
    }

    fn stride(&self, axis: usize) -> usize {
        self.grid.n.pow(2 - axis as u32)
    }

    fn neighbour(&self, site: &Site, axis: usize, off: isize) -> Option<usize> {
        let n = self.grid.n as isize;
        let c = site.ijk[axis] as isize;
        let moved = c + off;
        let moved = match self.boundary {
            Boundary::Dirichlet if !(0..n).contains(&moved) => return None,
            Boundary::Dirichlet => moved,
            Boundary::Periodic => moved.rem_euclid(n),
        };
        let stride = self.stride(axis) as isize;
        Some((site.idx as isize + (moved - c) * stride) as usize)
    }

    /// `sum_k w_k f(neighbour_k)` for a first-derivative stencil along `axis`.
    fn d1_with(&self, site: &Site, axis: usize, mut f: impl FnMut(usize) -> Spinor<T>) -> Spinor<T> {
        let mut acc = [Complex::new(T::zero(), T::zero()); 2];
        for &(off, w) in &self.w1 {
            if let Some(j) = self.neighbour(site, axis, off) {
                let v = f(j);
                acc[0] += v[0] * w;
                acc[1] += v[1] * w;
            }
        }
        acc
    }

    fn d2_at(&self, f: &[Spinor<T>], site: &Site, a: usize, b: usize) -> Spinor<T> {
        if a != b {
            return self.d1_with(site, a, |j| {
                let inner = Site { idx: j, ijk: self.grid.unindex(j) };
                self.d1_with(&inner, b, |k| f[k])
            });
        }
        let mut acc = [Complex::new(T::zero(), T::zero()); 2];
        for &(off, w) in &self.w2 {
            if let Some(j) = self.neighbour(site, a, off) {
                acc[0] += f[j][0] * w;
                acc[1] += f[j][1] * w;
            }
        }
        acc
    }

    /// `c psi` for every field-valued first-order coefficient.
    fn products(&self, part: &Part<T>, input: &[Spinor<T>]) -> [Option<Vec<Spinor<T>>>; 3] {
        std::array::from_fn(|a| match &part.first[a] {
            Some(Coef::Field(f)) => Some(f.par_iter().zip(input.par_iter()).map(|(m, v)| m.apply(*v)).collect()),
            _ => None,
        })
    }

    fn apply_part(&self, part: &Part<T>, input: &[Spinor<T>], prods: &[Option<Vec<Spinor<T>>>; 3], site: &Site) -> Spinor<T> {
        let half = T::lit(0.5);
        let i = site.idx;
        let mut o = [Complex::new(T::zero(), T::zero()); 2];
        if let Some(v) = &part.zeroth {
            madd(&mut o, v.at(i), input[i], T::one());
        }
        for (axis, c) in part.first.iter().enumerate() {
            let Some(c) = c else { continue };
            let d_in = self.d1_with(site, axis, |j| input[j]);
            let d_prod = match &prods[axis] {
                Some(p) => self.d1_with(site, axis, |j| p[j]),
                None => c.at(i).apply(d_in),
            };
            madd(&mut o, c.at(i), d_in, half);
            o[0] += d_prod[0] * half;
            o[1] += d_prod[1] * half;
        }
        for (a, b, c) in &part.second {
            madd(&mut o, c.at(i), self.d2_at(input, site, *a, *b), T::one());
        }
        o
    }

    pub fn apply(&self, psi: &[Spinor<T>]) -> Vec<Spinor<T>> {
        let n = psi.len();
        let mirrored: Option<Vec<Spinor<T>>> = (!self.parts[1].is_empty()).then(|| (0..n).map(|i| psi[self.grid.mirror(i)]).collect());
        let prods0 = self.products(&self.parts[0], psi);
        let prods1 = mirrored.as_ref().map(|m| self.products(&self.parts[1], m));
        (0..n)
            .into_par_iter()
            .map(|idx| {
                let site = Site { idx, ijk: self.grid.unindex(idx) };
                let mut o = if self.parts[0].is_empty() {
                    [Complex::new(T::zero(), T::zero()); 2]
                } else {
                    self.apply_part(&self.parts[0], psi, &prods0, &site)
                };
                if let (Some(m), Some(pr)) = (&mirrored, &prods1) {
                    let p = self.apply_part(&self.parts[1], m, pr, &site);
                    o[0] += p[0];
                    o[1] += p[1];
                }
                o
            })
            .collect()
    }
}

/// `op` applied to a grid state at the state's time.
pub fn discretize_apply<T: Real>(op: &DiffOp, s: &GridState<T>, real: &Realization<T>, stencil: Stencil, boundary: Boundary) -> Result<GridState<T>> {
    let d = DiscreteOp::compile(op, s.grid, s.time, real, stencil, boundary)?;
    Ok(GridState { grid: s.grid, psi: d.apply(&s.psi), time: s.time })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub max_error: Vec<f64>,
    /// `sqrt(sum |e|^2 h^3)`; the order is measured on this norm because
    /// cell-centred nodes move when `h` is halved.
    pub l2_error: Vec<f64>,
    /// `ln(e_k / e_{k+1}) / ln(h_k / h_{k+1})` on the L2 error.
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn observed_order(&self) -> f64 {
        self.orders.last().copied().unwrap_or(f64::NAN)
    }
}

/// Error of the grid operator against the exact symbolic application, on
/// grids with the given numbers of nodes per axis.
pub fn convergence(
    op: &DiffOp,
    field: &[Expr; 2],
    real: &Realization<f64>,
    half_width: f64,
    ns: &[usize],
    stencil: Stencil,
) -> Result<ConvergenceReport> {
    let exact = op.apply(field);
    let eval_pair = |pair: &[Expr; 2], x: [f64; 3]| -> Result<Spinor<f64>> {
        let mut ev = Evaluator::new(Point::new(0.0, x), real);
        Ok([ev.eval(&pair[0])?, ev.eval(&pair[1])?])
    };
    let mut rep = ConvergenceReport { n: Vec::new(), h: Vec::new(), max_error: Vec::new(), l2_error: Vec::new(), orders: Vec::new() };
    for &n in ns {
        let grid = Grid::new(n, half_width);
        let pts: Vec<usize> = (0..grid.len()).collect();
        let psi: Vec<Spinor<f64>> = pts.par_iter().map(|&i| eval_pair(field, grid.point(i))).collect::<Result<_>>()?;
        let want: Vec<Spinor<f64>> = pts.par_iter().map(|&i| eval_pair(&exact, grid.point(i))).collect::<Result<_>>()?;
        let got = discretize_apply(op, &GridState { grid, psi, time: 0.0 }, real, stencil, Boundary::Dirichlet)?;
        let err = got.psi.par_iter().zip(want.par_iter()).map(|(g, w)| (g[0] - w[0]).norm().max((g[1] - w[1]).norm())).reduce(|| 0.0, f64::max);
        let sq: f64 = got.psi.par_iter().zip(want.par_iter()).map(|(g, w)| (g[0] - w[0]).norm_sqr() + (g[1] - w[1]).norm_sqr()).sum();
        rep.n.push(n);
        rep.h.push(grid.h());
        rep.max_error.push(err);
        rep.l2_error.push((sq * grid.cell_volume()).sqrt());
    }
    rep.orders = rep.l2_error.windows(2).zip(rep.h.windows(2)).map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()).collect();
    Ok(rep)
}
