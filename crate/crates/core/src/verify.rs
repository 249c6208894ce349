//! Symmetry residuals and determining equations.
//!
//! A physical generator `Q` (hermitian form, e.g. `p3` or `J3`) is turned into
//! `i Q = xi0 dt + xi^a d_a + (1/2) d_a xi^a + i (eta0 + s_a eta^a)` and checked
//! against `[iQ, L] = alpha L` with `L = i dt - H` and `alpha = -dt xi0`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::diffop::{DiffOp, Key, OpWitness};
use crate::error::{Error, Result};
use crate::expr::{Expr, Var, ZeroTest, ZeroVerdict};
use crate::model::{cross, gauge_pauli_shift, gauge_transform, PotentialConfig, SpinOrbitMomentum, Variant};
use crate::pauli::{levi_civita, PauliExpr};

/// The `(xi, eta)` data of a first-order generator.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryCandidate {
    pub xi0: Expr,
    pub xi: [Expr; 3],
    pub eta0: Expr,
    pub eta: [Expr; 3],
}

fn key(mono: [u8; 4]) -> Key {
    Key { mono, reflected: false }
}

fn unit(k: usize) -> [u8; 4] {
    let mut m = [0; 4];
    m[k] = 1;
    m
}

impl SymmetryCandidate {
    pub fn alpha(&self) -> Expr {
        -self.xi0.diff(Var::T)
    }

    pub fn div_xi(&self) -> Expr {
        Expr::add_all((1..=3).map(|a| self.xi[a - 1].diff(Var::x(a))))
    }

    /// `i (eta0 + s.eta)` as a matrix.
    pub fn eta_matrix(&self) -> PauliExpr {
        PauliExpr::new([self.eta0.clone(), self.eta[0].clone(), self.eta[1].clone(), self.eta[2].clone()]).scale(&Expr::i())
    }

    /// The operator in the normalised form used by the residual.
    pub fn to_op(&self) -> DiffOp {
        let mut op = DiffOp::scalar(self.xi0.clone()).compose(&DiffOp::d(Var::T));
        for a in 1..=3 {
            op = &op + &DiffOp::scalar(self.xi[a - 1].clone()).compose(&DiffOp::d(Var::x(a)));
        }
        let zeroth = &PauliExpr::scalar(&self.div_xi() * &Expr::ratio(1, 2)) + &self.eta_matrix();
        &op + &DiffOp::matrix(zeroth)
    }

    /// Extract from a physical generator; `None` unless `i Q` is first order,
    /// parity free, with scalar leading coefficients.
    pub fn from_generator(q: &DiffOp) -> Option<SymmetryCandidate> {
        let iq = q.scale(&Expr::i());
        if iq.has_parity() || iq.order() > 1 {
            return None;
        }
        let scalar_at = |k: usize| -> Option<Expr> {
            match iq.coefficient(&key(unit(k))) {
                None => Some(Expr::zero()),
                Some(c) if c.is_scalar() => Some(c.c[0].clone()),
                Some(_) => None,
            }
        };
        let xi0 = scalar_at(0)?;
        let xi = [scalar_at(1)?, scalar_at(2)?, scalar_at(3)?];
        let zeroth = iq.coefficient(&key([0; 4])).cloned().unwrap_or_else(PauliExpr::zero);
        let mut cand = SymmetryCandidate { xi0, xi, eta0: Expr::zero(), eta: [Expr::zero(), Expr::zero(), Expr::zero()] };
        let half_div = &cand.div_xi() * &Expr::ratio(1, 2);
        let minus_i = -&Expr::i();
        cand.eta0 = (&minus_i * &(&zeroth.c[0] - &half_div)).expand();
        cand.eta = std::array::from_fn(|k| (&minus_i * &zeroth.c[k + 1]).expand());
        Some(cand)
    }
}

/// `L = i dt - H`.
pub fn schrodinger_operator(h: &DiffOp) -> DiffOp {
    &DiffOp::d(Var::T).scale(&Expr::i()) - h
}

/// `-dt` of the scalar `dt` coefficient of a normalised generator.
pub fn alpha_of(iq: &DiffOp) -> Expr {
    match iq.coefficient(&key(unit(0))) {
        Some(c) => -c.c[0].diff(Var::T),
        None => Expr::zero(),
    }
}

/// `[iQ, L] - alpha L` for a physical generator `q`.
pub fn symmetry_residual(q: &DiffOp, h: &DiffOp) -> DiffOp {
    let iq = q.scale(&Expr::i());
    let l = schrodinger_operator(h);
    let alpha = alpha_of(&iq);
    &iq.commutator(&l) - &l.scale(&alpha)
}

/// One named relation and its verdict.
#[derive(Clone, Debug, Serialize)]
pub struct EquationResult {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<crate::expr::zero::Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeterminingReport {
    /// Equations derived from the operator identity; their conjunction decides.
    pub derived: Vec<EquationResult>,
    /// The same relations in the printed form where that differs.
    pub printed: Vec<EquationResult>,
    /// Integrability consequence `eps_abc d_b (eta^c_a) = 0` of the vector part.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hop: Option<bool>,
}

impl DeterminingReport {
    pub fn pass(&self) -> bool {
        self.derived.iter().all(|e| e.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.derived.iter().filter(|e| !e.pass).map(|e| e.name.as_str()).collect()
    }
}

fn run(test: &ZeroTest, name: &str, exprs: Vec<Expr>) -> Result<EquationResult> {
    let verdicts = test.check_all(&exprs)?;
    let witness = verdicts.iter().find_map(ZeroVerdict::witness).cloned();
    Ok(EquationResult { name: name.to_string(), pass: witness.is_none(), witness })
}

fn vector_part(p: &PauliExpr) -> Vec<Expr> {
    p.c[1..].to_vec()
}

/// Coefficient groups of `[Q, L] - alpha L` for `H = -1/2 Laplacian + B^a d_a + U`,
/// written out in closed form.
struct Groups {
    /// `d xi0 / d x_a`
    static_time: Vec<Expr>,
    /// `xi^a_b + xi^b_a + alpha delta_ab`, split into traceless and trace parts.
    killing: Vec<Expr>,
    scaling: Expr,
    /// First-order coefficient, one matrix per `d_a`.
    first: [PauliExpr; 3],
    /// Zeroth-order coefficient.
    zeroth: PauliExpr,
    /// `i eta^c_a` demanded by the vector part of `first`.
    demanded: [PauliExpr; 3],
}

fn groups(c: &SymmetryCandidate, b: &[PauliExpr; 3], u: &PauliExpr) -> Groups {
    let i = Expr::i();
    let alpha = c.alpha();
    let static_time = (1..=3).map(|a| c.xi0.diff(Var::x(a))).collect();
    let div = c.div_xi();
    let mut killing = Vec::new();
    for a in 1..=3 {
        for bb in a..=3 {
            let mut e = &c.xi[a - 1].diff(Var::x(bb)) + &c.xi[bb - 1].diff(Var::x(a));
            if a == bb {
                e = &e - &(&Expr::ratio(2, 3) * &div);
            }
            killing.push(e);
        }
    }
    let scaling = &(&Expr::int(2) * &div) + &(&Expr::int(3) * &alpha);
    let y = &PauliExpr::scalar(&div * &Expr::ratio(1, 2)) + &c.eta_matrix();
    let mut first: [PauliExpr; 3] = std::array::from_fn(|_| PauliExpr::zero());
    let mut demanded: [PauliExpr; 3] = std::array::from_fn(|_| PauliExpr::zero());
    for a in 1..=3 {
        let xa = Var::x(a);
        let mut transport = PauliExpr::zero();
        for bb in 1..=3 {
            transport = &transport + &b[bb - 1].scale(&c.xi[a - 1].diff(Var::x(bb)));
            transport = &transport - &b[a - 1].diff(Var::x(bb)).scale(&c.xi[bb - 1]);
        }
        transport = &transport + &b[a - 1].scale(&alpha);
        let comm = &(&b[a - 1] * &y) - &(&y * &b[a - 1]);
        let rhs = &transport + &comm;
        let lap_xi = c.xi[a - 1].laplacian();
        let scalar = Expr::add_all([-(&i * &c.xi[a - 1].diff(Var::T)), -(&lap_xi * &Expr::ratio(1, 2))]);
        first[a - 1] = &(&PauliExpr::scalar(scalar) - &y.diff(xa)) + &rhs;
        let mut dem = rhs.clone();
        dem.c[0] = Expr::zero();
        demanded[a - 1] = dem;
    }
    let mut zeroth =
        &(&y.diff(Var::T).scale(&-&i) - &PauliExpr::new(std::array::from_fn(|k| y.c[k].laplacian())).scale(&Expr::ratio(1, 2))) + &u.scale(&alpha);
    for a in 1..=3 {
        let xa = Var::x(a);
        zeroth = &zeroth + &(&b[a - 1] * &y.diff(xa));
        zeroth = &zeroth - &u.diff(xa).scale(&c.xi[a - 1]);
    }
    zeroth = &zeroth + &(&(u * &y) - &(&y * u));
    Groups { static_time, killing, scaling, first, zeroth, demanded }
}

fn hop_exprs(demanded: &[PauliExpr; 3]) -> Vec<Expr> {
    // eps_abc d_b (eta^c_a), with i eta^c_a = demanded[a].c[c]
    (0..1)
        .map(|_| {
            let mut terms = Vec::new();
            for a in 1..=3 {
                for b in 1..=3 {
                    for c in 1..=3 {
                        let eps = levi_civita(a, b, c);
                        if eps != 0 {
                            terms.push(&Expr::int(eps) * &demanded[a - 1].c[c].diff(Var::x(b)));
                        }
                    }
                }
            }
            Expr::add_all(terms)
        })
        .collect()
}

fn common(test: &ZeroTest, g: &Groups) -> Result<Vec<EquationResult>> {
    Ok(vec![
        run(test, "static-time", g.static_time.clone())?,
        run(test, "conformal-killing", g.killing.clone())?,
        run(test, "scaling", vec![g.scaling.clone()])?,
        run(test, "first-order-scalar", g.first.iter().map(|p| p.c[0].clone()).collect())?,
    ])
}

/// The seven relations for the SP Hamiltonian.
pub fn check_determining_sp(c: &SymmetryCandidate, cfg: &PotentialConfig, test: &ZeroTest) -> Result<DeterminingReport> {
    let parts = cfg.hamiltonian_parts(Variant::Sp);
    let g = groups(c, &parts.b, &parts.u);
    let mut derived = common(test, &g)?;
    derived.push(run(test, "first-order-vector", g.first.iter().flat_map(vector_part).collect())?);
    derived.push(run(test, "zeroth-order-scalar", vec![g.zeroth.c[0].clone()])?);
    derived.push(run(test, "zeroth-order-vector", vector_part(&g.zeroth))?);

    let (sub_potential, sub_spin) = sp_substituted(c, cfg);
    derived.push(run(test, "potential", vec![sub_potential[0].clone()])?);
    derived.push(run(test, "spin-reduced", sub_spin[0].clone())?);

    let printed = vec![run(test, "potential", vec![sub_potential[1].clone()])?, run(test, "spin-reduced", sub_spin[1].clone())?];
    // The reduced potential and spin relations assume the first-order ones; keep them out of the verdict
    // when those fail so the conjunction stays equivalent to the residual.
    let prerequisites = derived.iter().filter(|e| e.name == "first-order-vector" || e.name == "first-order-scalar").all(|e| e.pass);
    if !prerequisites {
        derived.retain(|e| e.name != "potential" && e.name != "spin-reduced");
    }
    Ok(DeterminingReport { derived, printed, hop: None })
}

/// `[derived, printed]` forms of the reduced scalar and vector equations.
fn sp_substituted(c: &SymmetryCandidate, cfg: &PotentialConfig) -> ([Expr; 2], [Vec<Expr>; 2]) {
    let f = cfg.fields();
    let alpha = c.alpha();
    let xi_grad_a0 = Expr::add_all((1..=3).map(|a| &c.xi[a - 1] * &cfg.a0.diff(Var::x(a))));
    let xidot_a = Expr::add_all((0..3).map(|k| Expr::mul_all([cfg.e.clone(), c.xi[k].diff(Var::T), f.a[k].clone()])));
    let rest = &(&alpha * &cfg.a0) + &c.eta0.diff(Var::T);
    let potential_derived = Expr::add_all([xi_grad_a0.clone(), -&xidot_a, -&rest]);
    let potential_printed = Expr::add_all([xi_grad_a0, xidot_a, -&rest]);
    let spin_eq = |sign: i64| -> Vec<Expr> {
        (1..=3)
            .map(|b| {
                let mut terms = Vec::new();
                for a in 1..=3 {
                    terms.push(&c.xi[a - 1] * &f.h[b - 1].diff(Var::x(a)));
                }
                terms.push(-&(&alpha * &f.h[b - 1]));
                for cc in 1..=3 {
                    for d in 1..=3 {
                        let eps = levi_civita(b, cc, d);
                        if eps != 0 {
                            terms.push(Expr::mul_all([Expr::int(2 * sign * eps), c.eta[cc - 1].clone(), f.h[d - 1].clone()]));
                        }
                    }
                }
                &(&cfg.g * &Expr::add_all(terms)) - &c.eta[b - 1].diff(Var::T)
            })
            .collect()
    };
    ([potential_derived, potential_printed], [spin_eq(-1), spin_eq(1)])
}

/// Determining equations of the QRSE variants: the scalar and vector parts of
/// the first- and zeroth-order coefficients, plus the printed forms.
pub fn check_determining_qrse(c: &SymmetryCandidate, cfg: &PotentialConfig, variant: Variant, test: &ZeroTest) -> Result<DeterminingReport> {
    let parts = cfg.hamiltonian_parts(variant);
    let g = groups(c, &parts.b, &parts.u);
    let mut derived = common(test, &g)?;
    let (vec_first, scal_zero, vec_zero) = match variant {
        Variant::QrseH3a => ("first-order-vector", "zeroth-order-scalar", "zeroth-order-vector"),
        _ => ("first-order-vector", "zeroth-order-scalar", "zeroth-order-vector"),
    };
    derived.push(run(test, vec_first, g.first.iter().flat_map(vector_part).collect())?);
    derived.push(run(test, scal_zero, vec![g.zeroth.c[0].clone()])?);
    derived.push(run(test, vec_zero, vector_part(&g.zeroth))?);
    let hop = test.check_all(&hop_exprs(&g.demanded))?.iter().all(ZeroVerdict::is_zero);
    let printed = qrse_printed(c, cfg, variant, test)?;
    Ok(DeterminingReport { derived, printed, hop: Some(hop) })
}

fn qrse_printed(c: &SymmetryCandidate, cfg: &PotentialConfig, variant: Variant, test: &ZeroTest) -> Result<Vec<EquationResult>> {
    let f = cfg.fields();
    let alpha = c.alpha();
    let nu = &cfg.nu;
    let pot = match variant {
        Variant::QrseH3a => cfg.a_tilde(),
        _ => cfg.a0.clone(),
    };
    let e = pot.grad();
    let hess = |k: usize, d: usize| e[d - 1].diff(Var::x(k));
    // eta^c_a = nu (eps_bcd E_d xi^a_b - eps_acd (xi^k E_{kd} + alpha E_d) + 2 delta_ac eta^k E_k - 2 eta^a E_c)
    let eta_e = Expr::add_all((0..3).map(|k| &c.eta[k] * &e[k]));
    let mut eta_rel = Vec::new();
    for a in 1..=3 {
        for cc in 1..=3 {
            let mut terms = Vec::new();
            for b in 1..=3 {
                for d in 1..=3 {
                    let eps = levi_civita(b, cc, d);
                    if eps != 0 {
                        terms.push(Expr::mul_all([Expr::int(eps), e[d - 1].clone(), c.xi[a - 1].diff(Var::x(b))]));
                    }
                }
            }
            for d in 1..=3 {
                let eps = levi_civita(a, cc, d);
                if eps != 0 {
                    let inner = Expr::add_all((1..=3).map(|k| &c.xi[k - 1] * &hess(k, d)).chain([&alpha * &e[d - 1]]));
                    terms.push(&Expr::int(-eps) * &inner);
                }
            }
            if a == cc {
                terms.push(&Expr::int(2) * &eta_e);
            }
            terms.push(Expr::mul_all([Expr::int(-2), c.eta[a - 1].clone(), e[cc - 1].clone()]));
            eta_rel.push(&c.eta[cc - 1].diff(Var::x(a)) - &(nu * &Expr::add_all(terms)));
        }
    }
    // g (xi^a Ht^b_a - alpha Ht^b + 2 eps_bcd eta^c Ht^d) - dot eta^b + nu eps_abd eta0_a E_d - eta^b_a A^a = 0
    let ht: [Expr; 3] = {
        let axe = cross(&f.a, &e);
        std::array::from_fn(|k| &f.h[k] - &(&(&Expr::int(2) * nu) * &axe[k]))
    };
    let mut vec_zero = Vec::new();
    for b in 1..=3 {
        let mut inner = Vec::new();
        for a in 1..=3 {
            inner.push(&c.xi[a - 1] * &ht[b - 1].diff(Var::x(a)));
        }
        inner.push(-&(&alpha * &ht[b - 1]));
        for cc in 1..=3 {
            for d in 1..=3 {
                let eps = levi_civita(b, cc, d);
                if eps != 0 {
                    inner.push(Expr::mul_all([Expr::int(2 * eps), c.eta[cc - 1].clone(), ht[d - 1].clone()]));
                }
            }
        }
        let mut terms = vec![&cfg.g * &Expr::add_all(inner), -c.eta[b - 1].diff(Var::T)];
        for a in 1..=3 {
            for d in 1..=3 {
                let eps = levi_civita(a, b, d);
                if eps != 0 {
                    terms.push(Expr::mul_all([Expr::int(eps), nu.clone(), c.eta0.diff(Var::x(a)), cfg.a0.diff(Var::x(d))]));
                }
            }
            terms.push(-&(&c.eta[b - 1].diff(Var::x(a)) * &f.a[a - 1]));
        }
        vec_zero.push(Expr::add_all(terms));
    }
    // xi^a (A0_a + mu Lap A0_a) + dot xi^a A^a = alpha (A0 + mu Lap A0) + dot eta0 + nu^2 (...)
    let w = &pot + &(&cfg.mu * &pot.laplacian());
    let lhs = Expr::add_all((1..=3).map(|a| &c.xi[a - 1] * &w.diff(Var::x(a))).chain((0..3).map(|k| &c.xi[k].diff(Var::T) * &f.a[k])));
    let ee = Expr::add_all(e.iter().map(|x| x.powi(2)));
    let mut nu2 = vec![Expr::mul_all([Expr::int(2), alpha.clone(), ee.clone()]), &c.div_xi() * &ee];
    for k in 1..=3 {
        for d in 1..=3 {
            nu2.push(Expr::mul_all([Expr::int(2), c.xi[k - 1].clone(), hess(k, d), e[d - 1].clone()]));
            nu2.push(Expr::mul_all([Expr::int(-1), c.xi[k - 1].diff(Var::x(d)), e[k - 1].clone(), e[d - 1].clone()]));
        }
    }
    let rhs = Expr::add_all([&alpha * &w, c.eta0.diff(Var::T), &nu.powi(2) * &Expr::add_all(nu2)]);
    let scal_zero = vec![&lhs - &rhs];
    Ok(vec![run(test, "spin-rotation", eta_rel)?, run(test, "zeroth-order-vector", vec_zero)?, run(test, "zeroth-order-scalar", scal_zero)?])
}

/// Outcome of checking one generator against one Hamiltonian.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub id: String,
    pub variant: Variant,
    pub symmetry: bool,
    pub residual_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub determining: Option<DeterminingReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub term: String,
    pub component: usize,
    pub t: f64,
    pub x: [f64; 3],
    pub value: [f64; 2],
}

impl From<&OpWitness> for WitnessReport {
    fn from(w: &OpWitness) -> Self {
        let m = w.key.mono;
        let mut term = format!("dt^{} d1^{} d2^{} d3^{}", m[0], m[1], m[2], m[3]);
        if w.key.reflected {
            term.push_str(" Par");
        }
        WitnessReport { term, component: w.component, t: w.point.t, x: w.point.x, value: w.point.value }
    }
}

/// Residual route plus (when the generator is first order) the determining
/// equation route; the two must agree.
pub fn verify(id: &str, q: &DiffOp, cfg: &PotentialConfig, variant: Variant, test: &ZeroTest, keep_residual: bool) -> Result<VerificationReport> {
    let h = cfg.hamiltonian(variant);
    let residual = symmetry_residual(q, &h);
    let verdict = residual.is_zero_op(test)?;
    let determining = match SymmetryCandidate::from_generator(q) {
        Some(c) => {
            let rep = match variant {
                Variant::Sp => check_determining_sp(&c, cfg, test)?,
                v => check_determining_qrse(&c, cfg, v, test)?,
            };
            if rep.pass() != verdict.zero {
                return Err(Error::Inconsistent(format!(
                    "{id} ({}): residual says {}, determining equations say {} (failing: {:?})",
                    variant.name(),
                    if verdict.zero { "symmetry" } else { "not a symmetry" },
                    if rep.pass() { "symmetry" } else { "not a symmetry" },
                    rep.failing()
                )));
            }
            Some(rep)
        }
        None => None,
    };
    Ok(VerificationReport {
        id: id.to_string(),
        variant,
        symmetry: verdict.zero,
        residual_terms: residual.terms().count(),
        residual: (keep_residual && !verdict.zero).then(|| residual.to_string()),
        witness: verdict.witness.as_ref().map(WitnessReport::from),
        determining,
    })
}

/// Zero test of an operator identity `lhs = rhs`, returning a witness on failure.
pub fn check_identity(lhs: &DiffOp, rhs: &DiffOp, test: &ZeroTest) -> Result<Option<WitnessReport>> {
    let v = (lhs - rhs).is_zero_op(test)?;
    Ok(v.witness.as_ref().map(WitnessReport::from))
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    pub variant: Variant,
    pub momentum: SpinOrbitMomentum,
    pub phi: String,
    /// `exp(-i phi) H exp(i phi)` equals `H` rebuilt with `A - grad(phi)/e`.
    pub covariant: bool,
    /// The same identity once the Pauli term is shifted by `-(nu/g) grad(phi) x E`.
    pub with_pauli_shift: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
}

/// Conjugate the Hamiltonian by `exp(i phi)` and compare with the rebuilt one.
pub fn gauge_check(cfg: &PotentialConfig, variant: Variant, phi: &Expr, test: &ZeroTest) -> Result<GaugeReport> {
    if !test.check(&phi.diff(Var::T))?.is_zero() {
        return Err(Error::Invalid(format!("gauge function `{phi}` depends on t")));
    }
    let lhs = gauge_transform(&cfg.hamiltonian(variant), phi);
    let rebuilt = cfg.gauge_shifted(phi).hamiltonian(variant);
    let witness = check_identity(&lhs, &rebuilt, test)?;
    let covariant = witness.is_none();
    let shifted = gauge_pauli_shift(cfg, phi);
    let h = cfg.magnetic_field();
    let delta: [Expr; 3] = std::array::from_fn(|k| &shifted[k] - &h[k]);
    let pauli = DiffOp::matrix(PauliExpr::dot_sigma(&delta).scale(&cfg.g));
    let with_pauli_shift = check_identity(&lhs, &(&rebuilt + &pauli), test)?.is_none();
    Ok(GaugeReport { variant, momentum: cfg.momentum, phi: phi.to_string(), covariant, with_pauli_shift, witness })
}

/// Map of equation name to pass flag, for compact reporting.
pub fn summary(rep: &DeterminingReport) -> BTreeMap<String, bool> {
    rep.derived.iter().map(|e| (e.name.clone(), e.pass)).collect()
}
