use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub type Spinor<T> = [Complex<T>; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// Cell-centred cube `[-half_width, half_width]^3` with `n` nodes per axis.
/// No node sits on a coordinate plane, so the origin is never sampled and
/// reflection `x -> -x` maps nodes onto nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    pub n: usize,
    pub half_width: T,
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, half_width: T) -> Self {
        Grid { n, half_width }
    }

    pub fn h(&self) -> T {
        T::lit(2.0) * self.half_width / T::from_usize(self.n).unwrap()
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn coord(&self, i: usize) -> T {
        -self.half_width + (T::from_usize(i).unwrap() + T::lit(0.5)) * self.h()
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.n + ijk[1]) * self.n + ijk[2]
    }

    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        [idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n]
    }

    pub fn point(&self, idx: usize) -> [T; 3] {
        self.unindex(idx).map(|i| self.coord(i))
    }

    /// Neighbour `off` steps along `axis`, `None` outside a Dirichlet box.
    pub fn shift(&self, idx: usize, axis: usize, off: isize, boundary: Boundary) -> Option<usize> {
        let mut ijk = self.unindex(idx);
        let n = self.n as isize;
        let moved = ijk[axis] as isize + off;
        let moved = match boundary {
            Boundary::Periodic => moved.rem_euclid(n),
            Boundary::Dirichlet if (0..n).contains(&moved) => moved,
            Boundary::Dirichlet => return None,
        };
        ijk[axis] = moved as usize;
        Some(self.index(ijk))
    }

    /// Index of the node at `-x`.
    pub fn mirror(&self, idx: usize) -> usize {
        self.len() - 1 - idx
    }

    pub fn cell_volume(&self) -> T {
        let h = self.h();
        h * h * h
    }
}

#[derive(Clone, Debug)]
pub struct GridState<T> {
    pub grid: Grid<T>,
    pub psi: Vec<Spinor<T>>,
    pub time: T,
}

impl<T: Real> GridState<T> {
    pub fn from_fn(grid: Grid<T>, time: T, f: impl Fn([T; 3]) -> Spinor<T> + Sync) -> Self {
        let psi = (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect();
        GridState { grid, psi, time }
    }

    /// Normalised Gaussian `exp(-|x-c|^2/(2 w^2) + i k.x) spin`.
    pub fn gaussian(grid: Grid<T>, center: [T; 3], width: T, momentum: [T; 3], spin: Spinor<T>) -> Self {
        let mut s = Self::from_fn(grid, T::zero(), |x| {
            let mut d2 = T::zero();
            let mut phase = T::zero();
            for a in 0..3 {
                d2 += (x[a] - center[a]).powi(2);
                phase += momentum[a] * x[a];
            }
            let amp = Complex::from_polar(T::one(), phase) * (-d2 / (T::lit(2.0) * width * width)).exp();
            [spin[0] * amp, spin[1] * amp]
        });
        s.normalize();
        s
    }

    pub fn inner(&self, other: &[Spinor<T>]) -> Complex<T> {
        let dv = self.grid.cell_volume();
        let sum: Complex<T> = self
            .psi
            .par_iter()
            .zip(other.par_iter())
            .map(|(a, b)| a[0].conj() * b[0] + a[1].conj() * b[1])
            .reduce(|| Complex::new(T::zero(), T::zero()), |x, y| x + y);
        sum * dv
    }

    pub fn norm_sq(&self) -> T {
        self.inner(&self.psi).re
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sq().sqrt();
        if n > T::zero() {
            self.psi.par_iter_mut().for_each(|s| {
                s[0] = s[0] / n;
                s[1] = s[1] / n;
            });
        }
    }

    /// `(P psi)(x) = psi(-x)`
    pub fn reflected(&self) -> GridState<T> {
        let psi = (0..self.grid.len()).into_par_iter().map(|i| self.psi[self.grid.mirror(i)]).collect();
        GridState { grid: self.grid, psi, time: self.time }
    }

    /// Probability in the outer `layers` cells of every face.
    pub fn edge_mass(&self, layers: usize) -> T {
        let n = self.grid.n;
        let dv = self.grid.cell_volume();
        let sum: T = (0..self.grid.len())
            .into_par_iter()
            .filter(|&i| self.grid.unindex(i).iter().any(|&c| c < layers || c >= n - layers))
            .map(|i| self.psi[i][0].norm_sqr() + self.psi[i][1].norm_sqr())
            .sum();
        sum * dv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_reverses_coordinates() {
        let g = Grid::new(6, 3.0f64);
        for i in 0..g.len() {
            let (p, q) = (g.point(i), g.point(g.mirror(i)));
            for a in 0..3 {
                assert_eq!(p[a], -q[a]);
            }
        }
    }

    #[test]
    fn gaussian_is_normalised() {
        let g = Grid::new(24, 6.0f64);
        let one = Complex::new(1.0, 0.0);
        let s = GridState::gaussian(g, [0.5, 0.0, -0.5], 1.0, [0.3, 0.0, 0.0], [one, Complex::new(0.0, 0.0)]);
        assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    }
}
