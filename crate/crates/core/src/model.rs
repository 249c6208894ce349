//! Potentials, fields and Hamiltonians built from generating functions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diffop::DiffOp;
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Declarations, Expr, Var, ZeroTest};
use crate::pauli::{levi_civita, PauliExpr};

/// How the vector potential is generated from `F` and `G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VectorRep {
    /// `A = (d2 G, -d1 G, F)`
    Compact,
    /// `A = (d1 F + d2 G, d2 F - d1 G, 0)`
    Planar,
    /// Components given directly.
    Explicit([Expr; 3]),
}

/// Which Hamiltonian to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "sp")]
    Sp,
    #[serde(rename = "qrse-h3")]
    QrseH3,
    #[serde(rename = "qrse-h3a")]
    QrseH3a,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Sp, Variant::QrseH3, Variant::QrseH3a];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sp => "sp",
            Variant::QrseH3 => "qrse-h3",
            Variant::QrseH3a => "qrse-h3a",
        }
    }

    pub fn from_name(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// Momentum inside the spin-orbit term of the charged QRSE Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinOrbitMomentum {
    /// `p = -i grad`
    Canonical,
    /// `pi = p - e A`
    Kinetic,
}

/// Everything needed to build a Hamiltonian.
#[derive(Clone, Debug)]
pub struct PotentialConfig {
    pub f: Expr,
    pub g_fn: Expr,
    pub a0: Expr,
    /// Extra scalar potential entering `a_tilde = e A0 - q S`.
    pub s: Expr,
    /// Direct value of the effective potential, overriding `e A0 - q S`.
    pub a_tilde: Option<Expr>,
    pub rep: VectorRep,
    pub e: Expr,
    pub g: Expr,
    pub nu: Expr,
    pub mu: Expr,
    pub q: Expr,
    pub momentum: SpinOrbitMomentum,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        PotentialConfig {
            f: Expr::zero(),
            g_fn: Expr::zero(),
            a0: Expr::zero(),
            s: Expr::zero(),
            a_tilde: None,
            rep: VectorRep::Compact,
            e: Expr::one(),
            g: Expr::param("g"),
            nu: Expr::param("nu"),
            mu: Expr::param("mu"),
            q: Expr::param("q"),
            momentum: SpinOrbitMomentum::Kinetic,
        }
    }
}

/// Derived fields.
#[derive(Clone, Debug)]
pub struct FieldSet {
    pub a: [Expr; 3],
    pub h: [Expr; 3],
    pub e: [Expr; 3],
    pub e_tilde: [Expr; 3],
    pub h_tilde: [Expr; 3],
}

pub fn curl(a: &[Expr; 3]) -> [Expr; 3] {
    std::array::from_fn(|k| {
        let a_idx = k + 1;
        let mut terms = Vec::new();
        for b in 1..=3 {
            for c in 1..=3 {
                let eps = levi_civita(a_idx, b, c);
                if eps != 0 {
                    terms.push(&Expr::int(eps) * &a[c - 1].diff(Var::x(b)));
                }
            }
        }
        Expr::add_all(terms)
    })
}

pub fn divergence(a: &[Expr; 3]) -> Expr {
    Expr::add_all((1..=3).map(|k| a[k - 1].diff(Var::x(k))))
}

pub fn cross(u: &[Expr; 3], v: &[Expr; 3]) -> [Expr; 3] {
    std::array::from_fn(|k| {
        let (p, q) = ((k + 1) % 3, (k + 2) % 3);
        &(&u[p] * &v[q]) - &(&u[q] * &v[p])
    })
}

impl PotentialConfig {
    pub fn vector_potential(&self) -> [Expr; 3] {
        let (d1, d2) = (Var::X1, Var::X2);
        match &self.rep {
            VectorRep::Compact => [self.g_fn.diff(d2), -self.g_fn.diff(d1), self.f.clone()],
            VectorRep::Planar => [&self.f.diff(d1) + &self.g_fn.diff(d2), &self.f.diff(d2) - &self.g_fn.diff(d1), Expr::zero()],
            VectorRep::Explicit(a) => a.clone(),
        }
    }

    /// Magnetic field as the curl of the vector potential.
    pub fn magnetic_field(&self) -> [Expr; 3] {
        curl(&self.vector_potential())
    }

    /// Closed form of the magnetic field for the compact representation:
    /// `(d2 F + d1 d3 G, d2 d3 G - d1 F, -(d1^2 + d2^2) G)`.
    pub fn magnetic_field_closed_form(&self) -> [Expr; 3] {
        let (f, g) = (&self.f, &self.g_fn);
        [
            &f.diff(Var::X2) + &g.diff(Var::X1).diff(Var::X3),
            &g.diff(Var::X2).diff(Var::X3) - &f.diff(Var::X1),
            -&(&g.diff(Var::X1).diff(Var::X1) + &g.diff(Var::X2).diff(Var::X2)),
        ]
    }

    pub fn a_tilde(&self) -> Expr {
        match &self.a_tilde {
            Some(a) => a.clone(),
            None => &(&self.e * &self.a0) - &(&self.q * &self.s),
        }
    }

    pub fn fields(&self) -> FieldSet {
        let a = self.vector_potential();
        let h = curl(&a);
        let e = self.a0.grad();
        let e_tilde = self.a_tilde().grad();
        let axe = cross(&a, &e_tilde);
        let two_nu = &Expr::int(2) * &self.nu;
        let h_tilde = std::array::from_fn(|k| &h[k] - &(&two_nu * &axe[k]));
        FieldSet { a, h, e, e_tilde, h_tilde }
    }

    /// Every potential must be time independent.
    pub fn check_static(&self, test: &ZeroTest) -> Result<bool> {
        let mut exprs = vec![self.f.diff(Var::T), self.g_fn.diff(Var::T), self.a0.diff(Var::T), self.s.diff(Var::T)];
        if let Some(a) = &self.a_tilde {
            exprs.push(a.diff(Var::T));
        }
        if let VectorRep::Explicit(a) = &self.rep {
            exprs.extend(a.iter().map(|c| c.diff(Var::T)));
        }
        Ok(test.check_all(&exprs)?.iter().all(|v| v.is_zero()))
    }

    fn kinetic(&self, a: &[Expr; 3]) -> DiffOp {
        let mut h = DiffOp::zero();
        for k in 0..3 {
            let pi = &DiffOp::p(k + 1) - &DiffOp::scalar(&self.e * &a[k]);
            h = &h + &pi.compose(&pi);
        }
        h.scale(&Expr::ratio(1, 2))
    }

    /// `(nu/2) eps_abc s_a (E^b P^c + P^c E^b)`
    fn spin_orbit(&self, field: &[Expr; 3], a: &[Expr; 3], momentum: SpinOrbitMomentum) -> DiffOp {
        let mut out = DiffOp::zero();
        for c in 1..=3 {
            let mut pc = DiffOp::p(c);
            if momentum == SpinOrbitMomentum::Kinetic {
                pc = &pc - &DiffOp::scalar(&self.e * &a[c - 1]);
            }
            for a_idx in 1..=3 {
                for b in 1..=3 {
                    let eps = levi_civita(a_idx, b, c);
                    if eps == 0 {
                        continue;
                    }
                    let eb = DiffOp::matrix(PauliExpr::sigma(a_idx).scale(&field[b - 1]));
                    let sym = &eb.compose(&pc) + &pc.compose(&eb);
                    out = &out + &sym.scale(&Expr::int(eps));
                }
            }
        }
        out.scale(&(&self.nu / &Expr::int(2)))
    }

    /// `1/2 pi_a pi_a + A0 + g s.H`
    pub fn sp_hamiltonian(&self) -> DiffOp {
        let a = self.vector_potential();
        let h = curl(&a);
        let pauli = PauliExpr::dot_sigma(&h).scale(&self.g);
        &(&self.kinetic(&a) + &DiffOp::scalar(self.a0.clone())) + &DiffOp::matrix(pauli)
    }

    pub fn hamiltonian(&self, variant: Variant) -> DiffOp {
        let sp = self.sp_hamiltonian();
        let a = self.vector_potential();
        match variant {
            Variant::Sp => sp,
            Variant::QrseH3 => {
                let e = self.a0.grad();
                let so = self.spin_orbit(&e, &a, self.momentum);
                let darwin = DiffOp::scalar(&self.mu * &self.a0.laplacian());
                &(&sp + &so) + &darwin
            }
            Variant::QrseH3a => {
                let at = self.a_tilde();
                let et = at.grad();
                let so = self.spin_orbit(&et, &a, SpinOrbitMomentum::Kinetic);
                let darwin = DiffOp::scalar(&self.mu * &at.laplacian());
                &(&sp + &so) + &darwin
            }
        }
    }

    /// Closed-form split `H = -1/2 Laplacian + B^a d_a + U`, independent of the operator algebra.
    pub fn hamiltonian_parts(&self, variant: Variant) -> HamiltonianParts {
        let a = self.vector_potential();
        let h = curl(&a);
        let i = Expr::i();
        let mut b: [PauliExpr; 3] = std::array::from_fn(|k| PauliExpr::scalar(Expr::mul_all([i.clone(), self.e.clone(), a[k].clone()])));
        let a2 = Expr::add_all(a.iter().map(|c| c.powi(2)));
        let u0 = Expr::add_all([
            Expr::mul_all([i.clone(), self.e.clone(), Expr::ratio(1, 2), divergence(&a)]),
            Expr::mul_all([Expr::ratio(1, 2), self.e.powi(2), a2]),
            self.a0.clone(),
        ]);
        let mut u = &PauliExpr::scalar(u0) + &PauliExpr::dot_sigma(&h).scale(&self.g);
        let so = match variant {
            Variant::Sp => None,
            Variant::QrseH3 => Some((self.a0.clone(), self.momentum)),
            Variant::QrseH3a => Some((self.a_tilde(), SpinOrbitMomentum::Kinetic)),
        };
        if let Some((pot, momentum)) = so {
            let field = pot.grad();
            // nu eps_abc s_a E^b p^c  ->  B^c += -i nu eps_abc s_a E^b
            for c in 1..=3 {
                let mut comps = [Expr::zero(), Expr::zero(), Expr::zero()];
                for a_idx in 1..=3 {
                    for bb in 1..=3 {
                        let eps = levi_civita(a_idx, bb, c);
                        if eps != 0 {
                            comps[a_idx - 1] = &comps[a_idx - 1] + &(&Expr::int(eps) * &field[bb - 1]);
                        }
                    }
                }
                let extra = PauliExpr::dot_sigma(&comps).scale(&Expr::mul_all([Expr::int(-1), i.clone(), self.nu.clone()]));
                b[c - 1] = &b[c - 1] + &extra;
            }
            if momentum == SpinOrbitMomentum::Kinetic {
                // -e nu s.(E x A)
                let exa = cross(&field, &a);
                u = &u + &PauliExpr::dot_sigma(&exa).scale(&Expr::mul_all([Expr::int(-1), self.e.clone(), self.nu.clone()]));
            }
            u = &u + &PauliExpr::scalar(&self.mu * &pot.laplacian());
        }
        HamiltonianParts { b, u }
    }

    /// Same configuration with the vector potential replaced by `A - grad(phi)/e`.
    pub fn gauge_shifted(&self, phi: &Expr) -> PotentialConfig {
        let a = self.vector_potential();
        let grad = phi.grad();
        let shifted = std::array::from_fn(|k| &a[k] - &(&grad[k] / &self.e));
        PotentialConfig { rep: VectorRep::Explicit(shifted), ..self.clone() }
    }
}

/// First- and zeroth-order coefficients of a Hamiltonian `-1/2 Laplacian + B^a d_a + U`.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pub b: [PauliExpr; 3],
    pub u: PauliExpr,
}

impl HamiltonianParts {
    pub fn to_op(&self) -> DiffOp {
        let mut op = DiffOp::matrix(self.u.clone());
        for a in 1..=3 {
            let d = DiffOp::d(Var::x(a));
            op = &op + &DiffOp::matrix(self.b[a - 1].clone()).compose(&d);
            op = &op + &d.compose(&d).scale(&Expr::ratio(-1, 2));
        }
        op
    }
}

/// `exp(-i phi) H exp(i phi)`.
pub fn gauge_transform(h: &DiffOp, phi: &Expr) -> DiffOp {
    let i = Expr::i();
    let left = DiffOp::scalar((&(-&i) * phi).exp());
    let right = DiffOp::scalar((&i * phi).exp());
    left.compose(h).compose(&right)
}

/// The Pauli-term shift produced by a gauge transformation in the charged QRSE
/// with canonical spin-orbit momentum: `H' = H - (nu/g) grad(phi) x E`.
pub fn gauge_pauli_shift(cfg: &PotentialConfig, phi: &Expr) -> [Expr; 3] {
    let h = cfg.magnetic_field();
    let e = cfg.a0.grad();
    let gxe = cross(&phi.grad(), &e);
    let ratio = &cfg.nu / &cfg.g;
    std::array::from_fn(|k| &h[k] - &(&ratio * &gxe[k]))
}

/// JSON form of a configuration: expressions in the DSL.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default = "schema_version")]
    pub schema: u32,
    #[serde(default)]
    pub params: Vec<String>,
    /// Opaque function name -> arity.
    #[serde(default)]
    pub opaque: BTreeMap<String, usize>,
    #[serde(default, rename = "F")]
    pub f: Option<String>,
    #[serde(default, rename = "G")]
    pub g: Option<String>,
    #[serde(default, rename = "A0")]
    pub a0: Option<String>,
    #[serde(default, rename = "S")]
    pub s: Option<String>,
    #[serde(default, rename = "A_tilde")]
    pub a_tilde: Option<String>,
    /// Explicit vector potential components (overrides F and G).
    #[serde(default, rename = "A")]
    pub a: Option<[String; 3]>,
    /// "compact" or "planar".
    #[serde(default)]
    pub representation: Option<String>,
    #[serde(default)]
    pub couplings: BTreeMap<String, String>,
    #[serde(default)]
    pub momentum: Option<SpinOrbitMomentum>,
}

fn schema_version() -> u32 {
    1
}

pub const COUPLINGS: [&str; 5] = ["e", "g", "nu", "mu", "q"];

impl PotentialSpec {
    pub fn declarations(&self) -> Declarations {
        let mut d = Declarations::new();
        for p in &self.params {
            d.params.insert(p.clone());
        }
        for c in COUPLINGS {
            d.params.insert(c.to_string());
        }
        for (k, v) in &self.opaque {
            d.opaques.insert(k.clone(), *v);
        }
        d
    }

    pub fn build(&self) -> Result<PotentialConfig> {
        let d = self.declarations();
        let p = |s: &Option<String>| -> Result<Expr> {
            match s {
                Some(s) => Ok(parse_expr(s, &d)?),
                None => Ok(Expr::zero()),
            }
        };
        let mut cfg = PotentialConfig { f: p(&self.f)?, g_fn: p(&self.g)?, a0: p(&self.a0)?, s: p(&self.s)?, ..Default::default() };
        if let Some(a) = &self.a_tilde {
            cfg.a_tilde = Some(parse_expr(a, &d)?);
        }
        cfg.rep = match (&self.a, self.representation.as_deref()) {
            (Some(a), _) => VectorRep::Explicit([parse_expr(&a[0], &d)?, parse_expr(&a[1], &d)?, parse_expr(&a[2], &d)?]),
            (None, None | Some("compact")) => VectorRep::Compact,
            (None, Some("planar")) => VectorRep::Planar,
            (None, Some(other)) => return Err(Error::Invalid(format!("unknown representation `{other}`"))),
        };
        for (k, v) in &self.couplings {
            let e = parse_expr(v, &d)?;
            match k.as_str() {
                "e" => cfg.e = e,
                "g" => cfg.g = e,
                "nu" => cfg.nu = e,
                "mu" => cfg.mu = e,
                "q" => cfg.q = e,
                other => return Err(Error::Invalid(format!("unknown coupling `{other}`"))),
            }
        }
        if let Some(m) = self.momentum {
            cfg.momentum = m;
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test() -> ZeroTest {
        ZeroTest::new(11).with_trials(16)
    }

    #[test]
    fn compact_potential_examples() {
        let alpha = Expr::param("alpha");
        let cfg =
            PotentialConfig { f: Expr::mul_all([alpha.clone(), Expr::x(1), Expr::x(2)]), g_fn: &alpha * &Expr::x(1).powi(2), ..Default::default() };
        let a = cfg.vector_potential();
        assert!(a[0].is_zero());
        assert_eq!(a[1], Expr::mul_all([Expr::int(-2), alpha.clone(), Expr::x(1)]));
        assert_eq!(a[2], Expr::mul_all([alpha, Expr::x(1), Expr::x(2)]));

        let sym = PotentialConfig { g_fn: &Expr::ratio(-1, 4) * &(&Expr::x(1).powi(2) + &Expr::x(2).powi(2)), ..Default::default() };
        let a = sym.vector_potential();
        assert_eq!(a[0], &Expr::x(2) * &Expr::ratio(-1, 2));
        assert_eq!(a[1], &Expr::x(1) * &Expr::ratio(1, 2));
        let h = sym.magnetic_field();
        assert!(h[0].is_zero() && h[1].is_zero() && h[2].is_one());
    }

    #[test]
    fn closed_form_field_is_the_curl() {
        let args = vec![Expr::x(1), Expr::x(2), Expr::x(3)];
        let cfg = PotentialConfig { f: Expr::apply("F", args.clone()), g_fn: Expr::apply("G", args), ..Default::default() };
        let curl = cfg.magnetic_field();
        let closed = cfg.magnetic_field_closed_form();
        let diffs: Vec<Expr> = (0..3).map(|k| &curl[k] - &closed[k]).collect();
        assert!(test().check_all(&diffs).unwrap().iter().all(|v| v.is_zero()));
        assert!(test().check(&divergence(&curl)).unwrap().is_zero());
    }

    #[test]
    fn free_hamiltonian_is_half_laplacian() {
        let cfg = PotentialConfig { g: Expr::zero(), ..Default::default() };
        let h = cfg.sp_hamiltonian();
        let mut lap = DiffOp::zero();
        for a in 1..=3 {
            let d = DiffOp::d(Var::x(a));
            lap = &lap + &d.compose(&d);
        }
        assert_eq!(h, lap.scale(&Expr::ratio(-1, 2)));
    }

    #[test]
    fn parts_reassemble_the_hamiltonian() {
        let args = vec![Expr::x(1), Expr::x(2), Expr::x(3)];
        let cfg = PotentialConfig {
            f: Expr::apply("F", args.clone()),
            g_fn: Expr::apply("G", args.clone()),
            a0: Expr::apply("R", args),
            ..Default::default()
        };
        for variant in Variant::ALL {
            let h = cfg.hamiltonian(variant);
            let parts = cfg.hamiltonian_parts(variant).to_op();
            let v = (&h - &parts).is_zero_op(&test()).unwrap();
            assert!(v.zero, "{variant:?}");
        }
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let args = vec![Expr::x(1), Expr::x(2), Expr::x(3)];
        let cfg = PotentialConfig {
            f: Expr::apply("F", args.clone()),
            g_fn: Expr::apply("G", args.clone()),
            a0: Expr::apply("R", args.clone()),
            s: Expr::apply("S", args),
            ..Default::default()
        };
        for variant in Variant::ALL {
            let h = cfg.hamiltonian(variant);
            assert!((&h - &h.adjoint()).is_zero_op(&test()).unwrap().zero, "{variant:?}");
        }
    }

    #[test]
    fn qrse_reduces_to_sp() {
        let args = vec![Expr::x(1), Expr::x(2), Expr::x(3)];
        let cfg = PotentialConfig {
            f: Expr::apply("F", args.clone()),
            g_fn: Expr::apply("G", args.clone()),
            a0: Expr::apply("R", args),
            nu: Expr::zero(),
            mu: Expr::zero(),
            ..Default::default()
        };
        let sp = cfg.sp_hamiltonian();
        for variant in [Variant::QrseH3, Variant::QrseH3a] {
            assert!((&cfg.hamiltonian(variant) - &sp).is_zero_op(&test()).unwrap().zero);
        }
    }

    #[test]
    fn gauge_conjugation_shifts_the_potential() {
        let args = vec![Expr::x(1), Expr::x(2), Expr::x(3)];
        let cfg = PotentialConfig {
            f: Expr::apply("F", args.clone()),
            g_fn: Expr::apply("G", args.clone()),
            a0: Expr::apply("R", args.clone()),
            ..Default::default()
        };
        let phi = Expr::apply("Phi", args);
        let lhs = gauge_transform(&cfg.sp_hamiltonian(), &phi);
        let rhs = cfg.gauge_shifted(&phi).sp_hamiltonian();
        assert!((&lhs - &rhs).is_zero_op(&test()).unwrap().zero);
    }

    #[test]
    fn spec_roundtrip() {
        let json = r#"{"params":["kappa"],"opaque":{"R":2},"A0":"R(rt, x3) + kappa*phi","couplings":{"g":"2"}}"#;
        let spec: PotentialSpec = serde_json::from_str(json).unwrap();
        let cfg = spec.build().unwrap();
        assert_eq!(cfg.g, Expr::int(2));
        assert!(cfg.a0.params().contains("kappa"));
    }
}
