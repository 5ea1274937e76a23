//! Classes on `A × B`, the isogeny `π: A → B̂` they determine, and the
//! numerical checks that a slope `μ = m/l` on `A × B` behaves like the slope of
//! a kernel inducing an equivalence `D(A) ≃ D(B)`.
//!
//! A class is written `m = [[m_A, c], [−cᵀ, m_B]]`. Its polarization map is
//! `(a, b) ↦ (m_A·a + c·b, m_B·b − cᵀ·a)`, so `π` has matrix `cᵀ` and the dual
//! map `B → Â` has matrix `c`; with this convention the graph of `π` enters the
//! checks with a minus sign.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice_core::{FiniteGroupStructure, Int, IntMat, Lattice, Rat, RatMat};
use crate::partners::{coefficient_box, find_isomorphism};
use crate::slopes::{a_mu, is_in_a_mu, membership_equations, pi1_invariants_of, reduce, Slope, SubvarietyEmbedding};
use crate::varieties::{
    kernel_of, phi_class, product, FiniteSubgroup, Homomorphism, NsClass, ProductVariety, TorusVariety,
};

/// Largest number of torsion points any brute-force enumeration may visit.
pub const ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Clone, Debug)]
pub struct ProductClass {
    pub product: ProductVariety,
    pub class: NsClass,
    pub m_a: NsClass,
    pub c: IntMat,
    pub m_b: NsClass,
}

impl ProductClass {
    pub fn new(product: ProductVariety, m: IntMat) -> Result<Self> {
        let class = NsClass::new(product.variety.clone(), m)?;
        let na = product.first.lattice_rank();
        let n = product.variety.lattice_rank();
        let e = class.form();
        let m_a = NsClass::new(product.first.clone(), e.submatrix(0..na, 0..na))?;
        let m_b = NsClass::new(product.second.clone(), e.submatrix(na..n, na..n))?;
        let c = e.submatrix(0..na, na..n);
        Ok(ProductClass { product, class, m_a, c, m_b })
    }

    pub fn from_parts(a: &Arc<TorusVariety>, b: &Arc<TorusVariety>, m: IntMat) -> Result<Self> {
        Self::new(product(a, b)?, m)
    }

    pub fn a(&self) -> &Arc<TorusVariety> {
        &self.product.first
    }

    pub fn b(&self) -> &Arc<TorusVariety> {
        &self.product.second
    }

    /// `π: A → B̂`, matrix `cᵀ`.
    pub fn pi(&self) -> Homomorphism {
        Homomorphism::new(self.a().clone(), self.b().dual(), self.c.transpose())
            .expect("correspondence block commutes with the structures")
    }

    /// `B → Â`, matrix `c`.
    pub fn pi_dual(&self) -> Homomorphism {
        Homomorphism::new(self.b().clone(), self.a().dual(), self.c.clone())
            .expect("correspondence block commutes with the structures")
    }

    pub fn form(&self) -> &IntMat {
        self.class.form()
    }

    /// Replaces `m_B` by `m_B + l·v·K`: the effect of tensoring a rank-`l` kernel
    /// with `q₂*K^v`. The slope moves by an integral class.
    pub fn twisted(&self, k: &IntMat, v: &Int, l: &Int) -> Result<ProductClass> {
        let na = self.a().lattice_rank();
        let mut m = self.form().clone();
        let shift = k.scale(&(v * l));
        let block = &self.m_b.form().clone() + &shift;
        m.set_block(na, na, &block);
        ProductClass::new(self.product.clone(), m)
    }
}

/// `(m_A, π, m_B)`
pub fn decompose(pc: &ProductClass) -> (NsClass, Homomorphism, NsClass) {
    (pc.m_a.clone(), pc.pi(), pc.m_b.clone())
}

/// Inverse of [`decompose`].
pub fn reassemble(m_a: &NsClass, pi: &Homomorphism, m_b: &NsClass) -> IntMat {
    let c = pi.matrix().transpose();
    IntMat::from_blocks(m_a.form(), &c, &(-pi.matrix()), m_b.form())
}

pub fn check_pi_isogeny(pi: &Homomorphism) -> bool {
    pi.is_isogeny()
}

/// Smallest `v ∈ [0, max_v]` making the twisted `m_B` ample, using `B`'s polarization.
pub fn twist_to_ample(pc: &ProductClass, l: &Int, max_v: i64) -> Option<(i64, ProductClass)> {
    let k = pc.b().polarization_form();
    (0..=max_v).find_map(|v| {
        let t = pc.twisted(&k, &Int::from(v), l).ok()?;
        t.m_b.is_ample().then_some((v, t))
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub description: &'static str,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

impl Check {
    fn new(id: &'static str, description: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        let (expected, actual) = (expected.to_string(), actual.to_string());
        let passed = expected == actual;
        Check { id, description, expected, actual, passed }
    }

    fn flag(id: &'static str, description: &'static str, passed: bool) -> Self {
        Check { id, description, expected: "true".into(), actual: passed.to_string(), passed }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub class_name: String,
    pub a: String,
    pub b: String,
    #[serde(serialize_with = "crate::io::ser_int")]
    pub l: Int,
    pub g: usize,
    pub checks: Vec<Check>,
    pub ker_f: Option<FiniteGroupStructure>,
    #[serde(serialize_with = "ser_opt_int")]
    pub deg_pi: Option<Int>,
    pub brute_force: Vec<Check>,
    pub all_pass: bool,
}

fn ser_opt_int<S: serde::Serializer>(x: &Option<Int>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => crate::io::ser_int(v, s),
        None => s.serialize_none(),
    }
}

impl AuditReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().chain(&self.brute_force).filter(|c| !c.passed)
    }

    pub fn check(&self, id: &str) -> Option<&Check> {
        self.checks.iter().chain(&self.brute_force).find(|c| c.id == id)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "audit of {} on {} x {} with l = {}", self.class_name, self.a, self.b, self.l)?;
        for c in self.checks.iter().chain(&self.brute_force) {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "  {mark} {:<22} expected {}, got {}", c.id, c.expected, c.actual)?;
        }
        write!(f, "all checks pass: {}", self.all_pass)
    }
}

pub struct AuditOptions {
    pub brute_force: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { brute_force: true }
    }
}

/// Slope `m/l` on `A × B`, checking reducedness and the ampleness of `m_B` for `l ≥ 2`.
pub fn audit_slope(pc: &ProductClass, l: &Int) -> Result<Slope> {
    let slope = Slope::new(pc.class.clone(), l.clone())?;
    if !l.is_one() && !pc.m_b.is_ample() {
        return Err(Error::Precondition("m_B must be ample on B (see twist_to_ample)".into()));
    }
    Ok(slope)
}

fn ones_in_first(pc: &ProductClass, n: &Int) -> Result<FiniteSubgroup> {
    let (na, nb) = (pc.a().lattice_rank(), pc.b().lattice_rank());
    let d = Rat::new(Int::one(), n.clone());
    let gens = RatMat::from_fn(na + nb, na + nb, |i, j| {
        if i != j {
            Rat::zero()
        } else if i < na {
            d.clone()
        } else {
            Rat::one()
        }
    });
    FiniteSubgroup::new(pc.product.variety.clone(), Lattice::from_generators(&gens))
}

fn ones_in_second(pc: &ProductClass, n: &Int) -> Result<FiniteSubgroup> {
    let (na, nb) = (pc.a().lattice_rank(), pc.b().lattice_rank());
    let d = Rat::new(Int::one(), n.clone());
    let gens = RatMat::from_fn(na + nb, na + nb, |i, j| {
        if i != j {
            Rat::zero()
        } else if i < na {
            Rat::one()
        } else {
            d.clone()
        }
    });
    FiniteSubgroup::new(pc.product.variety.clone(), Lattice::from_generators(&gens))
}

/// `Ker(φ_E) ∩ A_l = {v ∈ (1/l)Λ : E·v ∈ Λ*}`; finite even for degenerate `E`.
pub fn kernel_on_torsion(class: &NsClass, l: &Int) -> Result<FiniteSubgroup> {
    let n = class.variety().lattice_rank();
    let lat = Lattice::preimage(&class.form().to_rat(), &Lattice::standard(n), &Lattice::torsion(n, l))?;
    FiniteSubgroup::new(class.variety().clone(), lat)
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphEqualities {
    #[serde(serialize_with = "crate::io::ser_int")]
    pub graph_order: Int,
    #[serde(serialize_with = "crate::io::ser_int")]
    pub pi_image_order: Int,
    pub graphs_equal: bool,
    pub passed: bool,
}

/// `{(m_A·a, −π(a)) : a ∈ A_l} = {(π̂(b), m_B·b) : b ∈ B_l}` as subgroups of
/// `Â × B̂`, both of order `l²`, and `|π(A_l)| = l²`.
pub fn graph_subgroup_equalities(pc: &ProductClass, l: &Int) -> Result<GraphEqualities> {
    let phi = phi_class(&pc.class);
    let g1 = ones_in_first(pc, l)?.image_under(&phi)?;
    let g2 = ones_in_second(pc, l)?.image_under(&phi)?;
    let graphs_equal = g1.equals(&g2)?;
    let pi_image_order = pc.a().torsion_subgroup(l)?.image_under(&pc.pi())?.order();
    let graph_order = g1.order();
    let l2 = l * l;
    let passed = graphs_equal && graph_order == l2 && pi_image_order == l2;
    Ok(GraphEqualities { graph_order, pi_image_order, graphs_equal, passed })
}

pub fn audit_equivalence(pc: &ProductClass, l: &Int, options: &AuditOptions) -> Result<AuditReport> {
    let (a, b) = (pc.a().clone(), pc.b().clone());
    let mut report = AuditReport {
        class_name: pc.class.variety().name().to_string(),
        a: a.name().to_string(),
        b: b.name().to_string(),
        l: l.clone(),
        g: a.g(),
        checks: Vec::new(),
        ker_f: None,
        deg_pi: None,
        brute_force: Vec::new(),
        all_pass: false,
    };
    report.checks.push(Check::new("dimensions", "dim A = dim B", a.g(), b.g()));
    if a.g() != b.g() {
        return Ok(report);
    }
    let slope = audit_slope(pc, l)?;
    let g = a.g() as u32;
    let l2 = l * l;

    // (i) the projection f: (A×B)_μ → A×B
    let amu = a_mu(&slope)?;
    let inv = pi1_invariants_of(&amu)?;
    let phi = phi_class(&pc.class);
    let image_of_torsion = pc.product.variety.torsion_subgroup(l)?.image_under(&phi)?;
    report.checks.push(Check::new("ker_f", "|Ker(f)| = l^2", &l2, &inv.deg_pi1));
    report.checks.push(Check::new(
        "ker_f_as_image",
        "Ker(f) = phi_m((A x B)_l)",
        &inv.deg_pi1,
        image_of_torsion.order(),
    ));
    report.ker_f = Some(inv.sigma.structure().clone());

    // (ii) π
    let pi = pc.pi();
    let isogeny = check_pi_isogeny(&pi);
    report.checks.push(Check::flag("pi_isogeny", "pi is an isogeny", isogeny));
    let expected_deg = l.pow(2 * g - 2);
    if isogeny {
        let deg = pi.degree()?;
        report.checks.push(Check::new("deg_pi", "deg(pi) = l^(2g-2)", &expected_deg, &deg));
        report.checks.push(Check::new(
            "deg_pi_times_ker_f",
            "deg(pi) |Ker(f)| = l^(2g)",
            l.pow(2 * g),
            &deg * &inv.deg_pi1,
        ));
        report.deg_pi = Some(deg);

        // (iii) kernels of π and π̂
        let ker_pi = kernel_of(&pi)?;
        let bound_a = kernel_on_torsion(&pc.m_a, l)?;
        report.checks.push(Check::flag(
            "ker_pi_in_ker_m_a",
            "Ker(pi) in Ker(m_A) and A_l",
            bound_a.contains(&ker_pi)?,
        ));
        let ker_pi_dual = kernel_of(&pc.pi_dual())?;
        let bound_b = kernel_on_torsion(&pc.m_b, l)?;
        report.checks.push(Check::flag(
            "ker_pi_dual_in_ker_m_b",
            "Ker(pi^) in Ker(m_B) and B_l",
            bound_b.contains(&ker_pi_dual)?,
        ));
    } else {
        report.checks.push(Check::new("deg_pi", "deg(pi) = l^(2g-2)", &expected_deg, "undefined"));
    }

    // (iv) graph subgroups
    let graphs = graph_subgroup_equalities(pc, l)?;
    report.checks.push(Check::new("graph_order", "|{(m_A a, -pi a)}| = l^2", &l2, &graphs.graph_order));
    report.checks.push(Check::new("pi_image_order", "|pi(A_l)| = l^2", &l2, &graphs.pi_image_order));
    report.checks.push(Check::flag("graphs_equal", "graph over A_l = graph over B_l", graphs.graphs_equal));

    // (v) the blockwise description of (A×B)_μ
    let (na, nb) = (a.lattice_rank(), b.lattice_rank());
    let blockwise = blockwise_embedding(pc, l);
    report.checks.push(Check::flag(
        "blockwise_matrix",
        "(A x B)_mu embedding equals the block formula",
        blockwise == amu.embedding_map,
    ));
    let level = l * inv.sigma.structure().exponent();
    match blockwise_torsion_agreement(&amu, &level, na + nb)? {
        Some(ok) => report.checks.push(Check::flag("blockwise_torsion", "block formula matches A_mu on torsion", ok)),
        None => report.checks.push(Check::new(
            "blockwise_torsion",
            "block formula matches A_mu on torsion",
            "enumerated",
            "skipped: too many points",
        )),
    }

    if options.brute_force {
        report.brute_force = brute_force_checks(pc, l);
    }
    report.all_pass = report.checks.iter().chain(&report.brute_force).all(|c| c.passed);
    Ok(report)
}

/// Rows `(l·a, l·b, m_A·a + c·b, m_B·b − cᵀ·a)` as a matrix in `(a, b)`.
pub fn blockwise_embedding(pc: &ProductClass, l: &Int) -> RatMat {
    let (na, nb) = (pc.a().lattice_rank(), pc.b().lattice_rank());
    let top = IntMat::scalar(na + nb, l.clone());
    let bottom = IntMat::from_blocks(pc.m_a.form(), &pc.c, &(-&pc.c.transpose()), pc.m_b.form());
    top.vstack(&bottom).to_rat()
}

/// The displayed points `(l·v, m·v)` of order dividing `N` are exactly the
/// `N`-torsion of `A_μ` cut out by its membership equations.
fn blockwise_torsion_agreement(amu: &SubvarietyEmbedding, level: &Int, r: usize) -> Result<Option<bool>> {
    let l = amu.slope.denominator();
    let (Some(li), Some(n)) = (l.to_i64(), level.to_i64()) else { return Ok(None) };
    let denom = li * n;
    if (denom as u64).checked_pow(r as u32).is_none_or(|c| c > ENUMERATION_CAP) {
        return Ok(None);
    }
    let (Some(emb), Some(k)) = (
        amu.embedding_map.to_int().as_ref().and_then(to_i64),
        to_i64(&membership_equations(&amu.slope).transpose()),
    ) else {
        return Ok(None);
    };
    // v = u/(l·N); x = emb·u/(l·N) has order dividing N iff l divides emb·u mod l·N
    let mut seen = BTreeSet::new();
    let mut members = true;
    for_each_vector(r, denom, |u| {
        let x = mat_vec_mod(&emb, u, denom);
        if x.iter().all(|c| c % li == 0) {
            let x: Vec<i64> = x.iter().map(|c| c / li).collect();
            members &= k.iter().all(|row| dot(row, &x).rem_euclid(n) == 0);
            seen.insert(x);
        }
    });
    let ambient = amu.ambient.lattice_rank();
    let kq = membership_equations(&amu.slope).transpose().to_rat();
    let torsion = Lattice::preimage(&kq, &Lattice::standard(kq.rows()), &Lattice::torsion(ambient, level))?;
    let count = Lattice::quotient_structure(&Lattice::standard(ambient), &torsion)?.order();
    Ok(Some(members && Int::from(seen.len()) == count))
}

fn to_i64(m: &IntMat) -> Option<Vec<Vec<i64>>> {
    m.to_rows().iter().map(|r| r.iter().map(ToPrimitive::to_i64).collect()).collect()
}

fn dot(row: &[i64], v: &[i64]) -> i64 {
    row.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn for_each_vector(len: usize, modulus: i64, mut f: impl FnMut(&[i64])) {
    let mut v = vec![0i64; len];
    loop {
        f(&v);
        let mut k = 0;
        loop {
            if k == len {
                return;
            }
            v[k] += 1;
            if v[k] < modulus {
                break;
            }
            v[k] = 0;
            k += 1;
        }
    }
}

fn mat_vec_mod(m: &[Vec<i64>], v: &[i64], modulus: i64) -> Vec<i64> {
    m.iter().map(|row| dot(row, v).rem_euclid(modulus)).collect()
}

/// Every identity of the audit recomputed by enumerating torsion points.
fn brute_force_checks(pc: &ProductClass, l: &Int) -> Vec<Check> {
    let mut out = Vec::new();
    let (Some(li), Some(ma), Some(mb), Some(c)) =
        (l.to_i64(), to_i64(pc.m_a.form()), to_i64(pc.m_b.form()), to_i64(&pc.c))
    else {
        return out;
    };
    let (na, nb) = (ma.len(), mb.len());
    if (li as u64).checked_pow((na + nb) as u32).is_none_or(|x| x > ENUMERATION_CAP) {
        return out;
    }
    let ct = to_i64(&pc.c.transpose()).expect("fits");
    let neg_ct: Vec<Vec<i64>> = ct.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
    let l2 = (li * li).to_string();

    let mut ker_f = BTreeSet::new();
    for_each_vector(na + nb, li, |v| {
        let (x, y) = v.split_at(na);
        let top: Vec<i64> = (0..na).map(|i| (dot(&ma[i], x) + dot(&c[i], y)).rem_euclid(li)).collect();
        let bottom: Vec<i64> = (0..nb).map(|i| (dot(&mb[i], y) + dot(&neg_ct[i], x)).rem_euclid(li)).collect();
        ker_f.insert([top, bottom].concat());
    });
    out.push(Check::new("bf_ker_f", "|Ker(f)| by enumeration", &l2, ker_f.len()));

    let mut g1 = BTreeSet::new();
    let mut pi_image = BTreeSet::new();
    for_each_vector(na, li, |x| {
        let pa = mat_vec_mod(&ma, x, li);
        let px = mat_vec_mod(&neg_ct, x, li);
        pi_image.insert(mat_vec_mod(&ct, x, li));
        g1.insert([pa, px].concat());
    });
    let mut g2 = BTreeSet::new();
    for_each_vector(nb, li, |y| {
        g2.insert([mat_vec_mod(&c, y, li), mat_vec_mod(&mb, y, li)].concat());
    });
    out.push(Check::new("bf_graph_order", "|graph over A_l| by enumeration", &l2, g1.len()));
    out.push(Check::new("bf_pi_image_order", "|pi(A_l)| by enumeration", &l2, pi_image.len()));
    out.push(Check::flag("bf_graphs_equal", "graph sets equal by enumeration", g1 == g2));

    let det = pc.c.det().abs();
    if let Some(d) = det.to_i64().filter(|d| *d > 0 && (*d as u64).checked_pow(na as u32).is_some_and(|x| x <= ENUMERATION_CAP)) {
        let kernel = |m: &[Vec<i64>], n: usize| {
            let mut pts = Vec::new();
            for_each_vector(n, d, |v| {
                if mat_vec_mod(m, v, d).iter().all(|x| *x == 0) {
                    pts.push(v.to_vec());
                }
            });
            pts
        };
        let ker_pi = kernel(&ct, na);
        let ker_pi_dual = kernel(&c, nb);
        let expected = l.pow(2 * pc.a().g() as u32 - 2);
        out.push(Check::new("bf_deg_pi", "|Ker(pi)| by enumeration", &expected, ker_pi.len()));
        // v/d lies in Ker(m)∩B_l iff l·v ≡ 0 and m·v ≡ 0 modulo d
        let inside = |pts: &[Vec<i64>], m: &[Vec<i64>]| {
            pts.iter().all(|v| v.iter().all(|x| (x * li) % d == 0) && mat_vec_mod(m, v, d).iter().all(|x| *x == 0))
        };
        out.push(Check::flag("bf_ker_pi_in_ker_m_a", "Ker(pi) in Ker(m_A) and A_l by enumeration", inside(&ker_pi, &ma)));
        out.push(Check::flag(
            "bf_ker_pi_dual_in_ker_m_b",
            "Ker(pi^) in Ker(m_B) and B_l by enumeration",
            inside(&ker_pi_dual, &mb),
        ));
    }
    out
}

#[derive(Clone, Debug)]
pub struct ProjectionIso {
    pub p: Homomorphism,
    pub q: Homomorphism,
    pub eta: Homomorphism,
    pub delta: Slope,
    pub eta_image_ok: bool,
    pub eta_points_checked: usize,
    /// `dual(A) ≅ B_δ`, if found at the search bound.
    pub essential_certificate: Option<Homomorphism>,
}

/// `q: (A×B)_μ → A × Â`, `p: (A×B)_μ → B × B̂`, and `η = p ∘ q⁻¹`.
pub fn projection_iso(pc: &ProductClass, l: &Int, search_bound: i64) -> Result<ProjectionIso> {
    let report = audit_equivalence(pc, l, &AuditOptions { brute_force: false })?;
    if !report.all_pass {
        return Err(Error::Precondition("audit does not pass".into()));
    }
    let (a, b) = (pc.a().clone(), pc.b().clone());
    let slope = audit_slope(pc, l)?;
    let amu = a_mu(&slope)?;
    let (na, nb) = (a.lattice_rank(), b.lattice_rank());
    let bas = &amu.basis;
    let li = IntMat::scalar(na, l.clone());
    let lb = IntMat::scalar(nb, l.clone());
    let q0 = IntMat::from_blocks(&li, &IntMat::zeros(na, nb), pc.m_a.form(), &pc.c);
    let p0 = IntMat::from_blocks(&IntMat::zeros(nb, na), &lb, &(-&pc.c.transpose()), pc.m_b.form());
    let integral = |m: RatMat, what: &str| {
        m.to_int().ok_or_else(|| Error::InvariantViolation(format!("{what} is not integral")))
    };
    let q_mat = integral(&q0.to_rat() * bas, "q")?;
    let p_mat = integral(&p0.to_rat() * bas, "p")?;
    let a_ahat = product(&a, &a.dual())?.variety;
    let b_bhat = product(&b, &b.dual())?.variety;
    let q = Homomorphism::new(amu.variety.clone(), a_ahat.clone(), q_mat)?;
    let p = Homomorphism::new(amu.variety.clone(), b_bhat.clone(), p_mat)?;
    for (name, h) in [("q", &q), ("p", &p)] {
        if !h.is_isomorphism_certificate() {
            return Err(Error::InvariantViolation(format!("{name} is not an isomorphism")));
        }
    }
    let q_inv = q.matrix().to_rat().inverse().expect("unimodular");
    let eta_mat = integral(&p.matrix().to_rat() * &q_inv, "eta")?;
    let eta = Homomorphism::new(a_ahat, b_bhat, eta_mat)?;
    if !eta.is_isomorphism_certificate() {
        return Err(Error::InvariantViolation("eta is not an isomorphism".into()));
    }

    // η(0 × Â) = B_δ, δ = m_B/l, on torsion of order dividing l²
    let delta = reduce(&pc.m_b, l)?;
    let l2 = l * l;
    let mut points = vec![vec![Rat::zero(); na]];
    for i in 0..na {
        let mut e = vec![Rat::zero(); na];
        e[i] = Rat::new(Int::one(), l2.clone());
        points.push(e);
    }
    let full = l2.to_u64().and_then(|x| x.checked_pow(na as u32)).is_some_and(|c| c <= ENUMERATION_CAP);
    if full {
        let lim = l2.to_i64().expect("fits");
        points.clear();
        for_each_vector(na, lim, |v| points.push(v.iter().map(|x| Rat::new(Int::from(*x), l2.clone())).collect()));
    }
    let em = eta.matrix().to_rat();
    let mut eta_image_ok = true;
    for y in &points {
        let x: Vec<Rat> = std::iter::repeat_n(Rat::zero(), na).chain(y.iter().cloned()).collect();
        let image: Vec<Rat> = (0..em.rows()).map(|i| (0..em.cols()).map(|j| &em[(i, j)] * &x[j]).sum()).collect();
        eta_image_ok &= is_in_a_mu(&delta, &image[..nb], &image[nb..])?;
    }
    // ℚ-span check: the columns of η on 0 × Â lie in the span of v ↦ (l·v, m_B·v)
    let span = em.submatrix(0..na + nb, na..2 * na);
    let bdelta = RatMat::scalar(nb, Rat::from_integer(delta.denominator().clone())).vstack(&delta.form().to_rat());
    eta_image_ok &= bdelta.hstack(&span).rank() == bdelta.rank();

    let bd = a_mu(&delta)?;
    let essential_certificate = find_isomorphism(&a.dual(), &bd.variety, search_bound);
    Ok(ProjectionIso { p, q, eta, delta, eta_image_ok, eta_points_checked: points.len(), essential_certificate })
}

/// Classes `Σ cᵢEᵢ` on `A × B` with `|cᵢ| ≤ bound` whose slope `m/l` (exactly
/// denominator `l`, `m_B` ample) passes the audit, in enumeration order.
pub fn search_audit_classes(
    a: &Arc<TorusVariety>,
    b: &Arc<TorusVariety>,
    l: &Int,
    coeff_bound: i64,
) -> Result<Vec<(Vec<Int>, ProductClass)>> {
    let prod = product(a, b)?;
    let candidates: Vec<Vec<Int>> = coefficient_box(prod.variety.ns_basis().len(), coeff_bound)
        .into_iter()
        .map(|c| c.into_iter().map(Int::from).collect())
        .collect();
    let results: Vec<Option<(Vec<Int>, ProductClass)>> = candidates
        .par_iter()
        .map(|coeffs| {
            let m = prod.variety.combine(coeffs);
            if !m.content().gcd(l).is_one() {
                return None;
            }
            let pc = ProductClass::new(prod.clone(), m).ok()?;
            if !l.is_one() && !pc.m_b.is_ample() {
                return None;
            }
            let report = audit_equivalence(&pc, l, &AuditOptions { brute_force: false }).ok()?;
            report.all_pass.then(|| (coeffs.clone(), pc))
        })
        .collect();
    Ok(results.into_iter().flatten().collect())
}

/// Data of the existence criterion for a kernel with `Φ(O_e) = E_B`, where
/// `E_B` has slope `δ = M/l`.
#[derive(Clone, Debug)]
pub struct KernelBundleInstance {
    pub delta: Slope,
    pub b_delta: SubvarietyEmbedding,
    /// `dual(B_δ)`
    pub b_delta_dual: Arc<TorusVariety>,
    /// `Ker(π̂)` for `π: B → B_δ`.
    pub target: FiniteSubgroup,
    pub rank: Int,
    /// `deg(M)`: the Pfaffian of `M`.
    pub deg_m: Int,
}

pub fn kernel_bundle_instance(b: &Arc<TorusVariety>, m: &IntMat, l: &Int) -> Result<KernelBundleInstance> {
    let delta = Slope::new(NsClass::new(b.clone(), m.clone())?, l.clone())?;
    let b_delta = a_mu(&delta)?;
    let rank = pi1_invariants_of(&b_delta)?.rank;
    let pi_dual = b_delta.quotient.dual_hom();
    let target = kernel_of(&pi_dual)?;
    let b_delta_dual = pi_dual.source().clone();
    Ok(KernelBundleInstance { deg_m: m.pfaffian().abs(), delta, b_delta, b_delta_dual, target, rank })
}

#[derive(Clone, Debug)]
pub struct SearchNResult {
    pub coefficients: Vec<Int>,
    pub class: NsClass,
    pub intersection: FiniteSubgroup,
}

/// First nonzero `N = Σ cᵢEᵢ`, `|cᵢ| ≤ coeff_bound`, with `K(N) ∩ A_l = target`.
/// Candidates are visited by increasing max-norm, then lexicographically in
/// the order 0, 1, −1, 2, −2, … per coordinate. `None` means not found at this bound.
pub fn search_n(
    variety: &Arc<TorusVariety>,
    l: &Int,
    target: &FiniteSubgroup,
    coeff_bound: i64,
) -> Result<Option<SearchNResult>> {
    let torsion = variety.torsion_subgroup(l)?;
    if !torsion.contains(target)? {
        return Err(Error::Precondition("target is not contained in the l-torsion".into()));
    }
    let mut candidates: Vec<Vec<i64>> = coefficient_box(variety.ns_basis().len(), coeff_bound);
    let rank = |c: &i64| if *c > 0 { 2 * c - 1 } else { -2 * c };
    candidates.retain(|c| c.iter().any(|x| *x != 0));
    candidates.sort_by_key(|c| (c.iter().map(|x| x.abs()).max(), c.iter().map(rank).collect::<Vec<_>>()));
    let found = candidates.par_iter().find_map_first(|coeffs| {
        let c: Vec<Int> = coeffs.iter().map(|x| Int::from(*x)).collect();
        let class = NsClass::from_coefficients(variety.clone(), &c).ok()?;
        let intersection = kernel_on_torsion(&class, l).ok()?;
        intersection.equals(target).ok()?.then_some(SearchNResult { coefficients: c, class, intersection })
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lattice_core::{int, int_mat};

    fn e0() -> IntMat {
        int_mat(&[&[0, 1], &[-1, 0]])
    }

    fn poincare() -> ProductClass {
        let ei = Arc::new(corpus::e_i());
        ProductClass::from_parts(&ei, &ei.dual(), corpus::poincare_e_i().class).unwrap()
    }

    #[test]
    fn decompose_poincare() {
        let pc = poincare();
        let (ma, pi, mb) = decompose(&pc);
        assert!(ma.form().is_zero() && mb.form().is_zero());
        assert_eq!(pi.matrix(), &IntMat::identity(2));
        assert_eq!(reassemble(&ma, &pi, &mb), *pc.form());
        assert!(check_pi_isogeny(&pi));
    }

    #[test]
    fn block_diagonal_class_fails() {
        let ei = Arc::new(corpus::e_i());
        let m = e0().block_diag(&e0());
        let pc = ProductClass::from_parts(&ei, &ei, m).unwrap();
        assert!(!check_pi_isogeny(&pc.pi()));
        for l in 1..=3 {
            let r = audit_equivalence(&pc, &int(l), &AuditOptions::default()).unwrap();
            assert!(!r.all_pass);
            assert!(!r.check("pi_isogeny").unwrap().passed);
        }
        assert!(!graph_subgroup_equalities(&pc, &int(2)).unwrap().passed);
    }

    #[test]
    fn poincare_audit_and_eta() {
        let pc = poincare();
        let r = audit_equivalence(&pc, &int(1), &AuditOptions::default()).unwrap();
        assert!(r.all_pass, "{r}");
        assert_eq!(r.deg_pi, Some(int(1)));
        let iso = projection_iso(&pc, &int(1), 3).unwrap();
        assert_eq!(iso.eta.matrix(), &int_mat(&[&[0, 0, 1, 0], &[0, 0, 0, 1], &[-1, 0, 0, 0], &[0, -1, 0, 0]]));
        assert!(iso.eta_image_ok);
        assert!(iso.essential_certificate.is_some());
    }

    #[test]
    fn level_two_class_on_e_i_squared() {
        let ei = Arc::new(corpus::e_i());
        let m = IntMat::from_blocks(&e0(), &IntMat::identity(2), &(-&IntMat::identity(2)), &e0());
        let pc = ProductClass::from_parts(&ei, &ei, m).unwrap();
        let r = audit_equivalence(&pc, &int(2), &AuditOptions::default()).unwrap();
        assert!(r.all_pass, "{r}");
        assert!(r.brute_force.len() >= 7);
        let iso = projection_iso(&pc, &int(2), 3).unwrap();
        assert!(iso.eta_image_ok);
        assert_eq!(iso.eta_points_checked, 16);
        assert!(iso.essential_certificate.is_some());
    }

    #[test]
    fn search_finds_level_two_classes() {
        let ei = Arc::new(corpus::e_i());
        let found = search_audit_classes(&ei, &ei, &int(2), 2).unwrap();
        assert!(!found.is_empty());
        for (_, pc) in &found {
            let odd = |x: &Int| x.is_odd();
            assert!(odd(&pc.m_a.pfaffian()) && odd(&pc.m_b.pfaffian()));
            assert!(pc.c.det().abs().is_one());
        }
    }

    #[test]
    fn non_ample_m_b_is_rejected() {
        let ei = Arc::new(corpus::e_i());
        let m = IntMat::from_blocks(&e0(), &IntMat::identity(2), &(-&IntMat::identity(2)), &(-&e0()));
        let pc = ProductClass::from_parts(&ei, &ei, m).unwrap();
        assert!(matches!(audit_equivalence(&pc, &int(2), &AuditOptions::default()), Err(Error::Precondition(_))));
        let (v, t) = twist_to_ample(&pc, &int(2), 3).unwrap();
        assert_eq!(v, 1);
        assert!(t.m_b.is_ample());
    }

    #[test]
    fn unequal_dimensions_fail_with_reason() {
        let ei = Arc::new(corpus::e_i());
        let exe = Arc::new(corpus::e_i_x_e_i());
        let pc = ProductClass::from_parts(&ei, &exe, IntMat::zeros(6, 6)).unwrap();
        let r = audit_equivalence(&pc, &int(1), &AuditOptions::default()).unwrap();
        assert!(!r.all_pass);
        assert!(!r.check("dimensions").unwrap().passed);
    }

    #[test]
    fn search_n_examples() {
        let ei = Arc::new(corpus::e_i());
        for l in 1..=3 {
            let inst = kernel_bundle_instance(&ei, &e0(), &int(l)).unwrap();
            assert!(inst.target.is_trivial());
            assert_eq!(inst.rank, int(l));
            let n = search_n(&inst.b_delta_dual, &int(l), &inst.target, 3).unwrap().unwrap();
            assert!(n.intersection.is_trivial());
            let full = ei.torsion_subgroup(&int(l)).unwrap();
            let k = kernel_on_torsion(&NsClass::new(ei.clone(), e0().scale(&int(l))).unwrap(), &int(l)).unwrap();
            assert_eq!(k, full);
        }
        let exe = Arc::new(corpus::e_i_x_e_i());
        let m = e0().block_diag(&e0().scale(&int(2)));
        let inst = kernel_bundle_instance(&exe, &m, &int(2)).unwrap();
        assert_eq!(inst.target.order(), int(4));
        assert_eq!(inst.deg_m, int(2));
        let n = search_n(&inst.b_delta_dual, &int(2), &inst.target, 3).unwrap().unwrap();
        assert_eq!(n.intersection, inst.target);
    }
}
