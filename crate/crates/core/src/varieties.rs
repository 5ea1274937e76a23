//! Abelian varieties presented as polarizable complex tori `ℚ^{2g}/ℤ^{2g}`.
//!
//! A variety is the lattice `ℤ^{2g}` together with a rational matrix `J` with
//! `J² = −s·I` for a positive rational `s`. `J/√s` is the complex structure;
//! `s = 1` is the common case, while `s ≠ 1` lets curves such as `ℂ/ℤ[ω]`
//! (whose complex structure is irrational in lattice coordinates) be written
//! with rational entries. Néron–Severi classes are integral alternating forms
//! `E` with `Jᵀ·E·J = s·E`, and the designated polarization `H` satisfies
//! `H·J` positive definite.
//!
//! Conventions: the dual variety has lattice `ℤ^{2g}` in the dual basis and
//! structure `−Jᵀ`; the polarization map of `E` is `v ↦ E(·, v)`, i.e. the
//! matrix `E` itself.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice_core::matrix::{rat_from_int, rat_sqrt};
use crate::lattice_core::{hnf, integer_kernel, FiniteGroupStructure, Int, IntMat, Lattice, Rat, RatMat};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationFailure {
    Shape { reason: String },
    NotComplexStructure,
    NotAlternating { index: usize },
    IncompatibleClass { index: usize },
    DependentBasis,
    PolarizationLength { expected: usize, found: usize },
    PolarizationDegenerate,
    PolarizationNotPositive,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationFailure::Shape { reason } => write!(f, "bad shape: {reason}"),
            ValidationFailure::NotComplexStructure => write!(f, "J² is not a negative multiple of I"),
            ValidationFailure::NotAlternating { index } => write!(f, "E{index} is not alternating"),
            ValidationFailure::IncompatibleClass { index } => {
                write!(f, "E{index} is not compatible with J")
            }
            ValidationFailure::DependentBasis => write!(f, "ns_basis is linearly dependent"),
            ValidationFailure::PolarizationLength { expected, found } => {
                write!(f, "polarization has {found} coefficients, expected {expected}")
            }
            ValidationFailure::PolarizationDegenerate => write!(f, "polarization is degenerate"),
            ValidationFailure::PolarizationNotPositive => {
                write!(f, "polarization form E(x, Jy) is not positive definite")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid");
        }
        let parts: Vec<String> = self.failures.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Clone, Debug)]
pub struct TorusVariety {
    name: String,
    j: RatMat,
    ns_basis: Vec<IntMat>,
    polarization: Vec<Int>,
    dual: OnceLock<Arc<TorusVariety>>,
}

/// Names are labels only and do not take part in equality.
impl PartialEq for TorusVariety {
    fn eq(&self, other: &Self) -> bool {
        self.j == other.j && self.ns_basis == other.ns_basis && self.polarization == other.polarization
    }
}

impl Eq for TorusVariety {}

fn upper_coords(e: &IntMat) -> Vec<Int> {
    let n = e.rows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(e[(i, j)].clone());
        }
    }
    out
}

fn alternating_from_upper(n: usize, coords: &[Int]) -> IntMat {
    let mut e = IntMat::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            e[(i, j)] = coords[k].clone();
            e[(j, i)] = -coords[k].clone();
            k += 1;
        }
    }
    e
}

/// Canonical (HNF) basis of the integer kernel of a rational linear map.
fn saturated_solutions(map: &RatMat) -> Vec<Vec<Int>> {
    let (_, mi) = map.clear_denominators();
    let ker = integer_kernel(&mi);
    if ker.cols() == 0 {
        return Vec::new();
    }
    let canon = hnf(&ker).basis();
    (0..canon.cols()).map(|j| canon.column(j)).collect()
}

/// Canonical ℤ-basis of `{E alternating integral : Jᵀ·E·J = s·E}`.
pub fn ns_lattice_of(j: &RatMat, s: &Rat) -> Vec<IntMat> {
    let n = j.rows();
    let dims = n * (n - 1) / 2;
    let jt = j.transpose();
    let mut map = RatMat::zeros(dims, dims);
    for k in 0..dims {
        let mut unit = vec![Int::zero(); dims];
        unit[k] = Int::one();
        let e = alternating_from_upper(n, &unit).to_rat();
        let image = &(&(&jt * &e) * j) - &e.scale(s);
        let mut r = 0;
        for a in 0..n {
            for b in a + 1..n {
                map[(r, k)] = image[(a, b)].clone();
                r += 1;
            }
        }
    }
    saturated_solutions(&map).into_iter().map(|c| alternating_from_upper(n, &c)).collect()
}

/// Canonical ℤ-basis of `{C integral : j_aᵀ·C·j_b = s·C}` (correspondence blocks).
pub fn correspondence_lattice(ja: &RatMat, jb: &RatMat, s: &Rat) -> Vec<IntMat> {
    let (na, nb) = (ja.rows(), jb.rows());
    let dims = na * nb;
    let jat = ja.transpose();
    let mut map = RatMat::zeros(dims, dims);
    for k in 0..dims {
        let mut c = RatMat::zeros(na, nb);
        c[(k / nb, k % nb)] = Rat::one();
        let image = &(&(&jat * &c) * jb) - &c.scale(s);
        for r in 0..dims {
            map[(r, k)] = image[(r / nb, r % nb)].clone();
        }
    }
    saturated_solutions(&map)
        .into_iter()
        .map(|v| IntMat::from_fn(na, nb, |i, j| v[i * nb + j].clone()))
        .collect()
}

/// `r` with `r² = s_target / s_source`, when rational.
fn scale_ratio(source: &Rat, target: &Rat) -> Option<Rat> {
    rat_sqrt(&(target / source))
}

/// Primitive integral multiple of a nonzero rational matrix.
fn primitive(form: &RatMat) -> IntMat {
    let (_, m) = form.clear_denominators();
    let c = m.content();
    m.map(|x| x / &c)
}

impl TorusVariety {
    /// Builds a presentation without checking it; see [`TorusVariety::validate`].
    pub fn new(name: impl Into<String>, j: RatMat, ns_basis: Vec<IntMat>, polarization: Vec<Int>) -> Self {
        TorusVariety { name: name.into(), j, ns_basis, polarization, dual: OnceLock::new() }
    }

    pub fn validated(
        name: impl Into<String>,
        j: RatMat,
        ns_basis: Vec<IntMat>,
        polarization: Vec<Int>,
    ) -> Result<Self> {
        let v = Self::new(name, j, ns_basis, polarization);
        let report = v.validate();
        if report.is_valid() {
            Ok(v)
        } else {
            Err(Error::InvalidVariety(report))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn g(&self) -> usize {
        self.j.rows() / 2
    }

    /// `2g`
    pub fn lattice_rank(&self) -> usize {
        self.j.rows()
    }

    pub fn j(&self) -> &RatMat {
        &self.j
    }

    pub fn ns_basis(&self) -> &[IntMat] {
        &self.ns_basis
    }

    pub fn polarization(&self) -> &[Int] {
        &self.polarization
    }

    /// `s` with `J² = −s·I`, `s > 0`.
    pub fn scale(&self) -> Option<Rat> {
        if !self.j.is_square() || self.j.rows() == 0 {
            return None;
        }
        let sq = &self.j * &self.j;
        let s = -sq[(0, 0)].clone();
        (s.is_positive() && sq == RatMat::scalar(self.j.rows(), -s.clone())).then_some(s)
    }

    fn scale_or_one(&self) -> Rat {
        self.scale().unwrap_or_else(Rat::one)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut failures = Vec::new();
        let n = self.j.rows();
        if !self.j.is_square() || n == 0 || n % 2 == 1 {
            failures.push(ValidationFailure::Shape {
                reason: format!("J is {}x{}, expected 2g x 2g with g >= 1", self.j.rows(), self.j.cols()),
            });
            return ValidationReport { failures };
        }
        let scale = self.scale();
        if scale.is_none() {
            failures.push(ValidationFailure::NotComplexStructure);
        }
        for (index, e) in self.ns_basis.iter().enumerate() {
            if e.rows() != n || e.cols() != n {
                failures.push(ValidationFailure::Shape { reason: format!("E{index} is not {n}x{n}") });
                continue;
            }
            if !e.is_alternating() {
                failures.push(ValidationFailure::NotAlternating { index });
            } else if scale.is_some() && !self.is_compatible(e) {
                failures.push(ValidationFailure::IncompatibleClass { index });
            }
        }
        if !failures.is_empty() {
            return ValidationReport { failures };
        }
        let vectors = RatMat::from_fn(n * (n - 1) / 2, self.ns_basis.len(), |i, k| {
            rat_from_int(&upper_coords(&self.ns_basis[k])[i])
        });
        if vectors.rank() < self.ns_basis.len() {
            failures.push(ValidationFailure::DependentBasis);
        }
        if self.polarization.len() != self.ns_basis.len() {
            failures.push(ValidationFailure::PolarizationLength {
                expected: self.ns_basis.len(),
                found: self.polarization.len(),
            });
            return ValidationReport { failures };
        }
        let h = self.polarization_form();
        if h.det().is_zero() {
            failures.push(ValidationFailure::PolarizationDegenerate);
        } else if scale.is_some() && !self.is_positive(&h) {
            failures.push(ValidationFailure::PolarizationNotPositive);
        }
        ValidationReport { failures }
    }

    /// `Jᵀ·E·J = s·E`, i.e. `E(Jx, Jy) = E(x, y)` for the true complex structure.
    pub fn is_compatible(&self, e: &IntMat) -> bool {
        let er = e.to_rat();
        e.is_alternating()
            && e.rows() == self.j.rows()
            && &(&self.j.transpose() * &er) * &self.j == er.scale(&self.scale_or_one())
    }

    /// `E(x, Jy)` positive definite: `E` is ample.
    pub fn is_positive(&self, e: &IntMat) -> bool {
        (&e.to_rat() * &self.j).is_positive_definite()
    }

    pub fn combine(&self, coeffs: &[Int]) -> IntMat {
        let n = self.j.rows();
        coeffs
            .iter()
            .zip(&self.ns_basis)
            .fold(IntMat::zeros(n, n), |acc, (c, e)| &acc + &e.scale(c))
    }

    pub fn polarization_form(&self) -> IntMat {
        self.combine(&self.polarization)
    }

    /// Coordinates of `e` over `ns_basis`, when integral.
    pub fn coordinates(&self, e: &IntMat) -> Option<Vec<Int>> {
        coordinates_in(&self.ns_basis, e)
    }

    /// Canonical saturated basis of the full Néron–Severi lattice.
    pub fn ns_lattice(&self) -> Vec<IntMat> {
        ns_lattice_of(&self.j, &self.scale_or_one())
    }

    pub fn ns_rank(&self) -> usize {
        self.ns_lattice().len()
    }

    pub fn is_principally_polarized(&self) -> bool {
        self.polarization_form().det().abs().is_one()
    }

    /// The dual torus: dual lattice basis and structure `−Jᵀ`, with the full
    /// Néron–Severi lattice and the polarization induced by `H⁻¹`.
    pub fn dual(&self) -> Arc<TorusVariety> {
        self.dual
            .get_or_init(|| {
                let jd = -&self.j.transpose();
                let name = match self.name.strip_prefix("dual(").and_then(|s| s.strip_suffix(')')) {
                    Some(inner) => inner.to_string(),
                    None => format!("dual({})", self.name),
                };
                let ns_basis = ns_lattice_of(&jd, &self.scale_or_one());
                let h = self.polarization_form().to_rat();
                let polarization = match h.inverse() {
                    Some(inv) => {
                        let partial = TorusVariety::new(name.clone(), jd.clone(), ns_basis.clone(), Vec::new());
                        partial.positive_coordinates(&inv).unwrap_or_default()
                    }
                    None => Vec::new(),
                };
                Arc::new(TorusVariety::new(name, jd, ns_basis, polarization))
            })
            .clone()
    }

    /// Coordinates of the primitive positive multiple of a rational form.
    pub(crate) fn positive_coordinates(&self, form: &RatMat) -> Option<Vec<Int>> {
        let mut e = primitive(form);
        if !self.is_positive(&e) {
            e = -&e;
        }
        if !self.is_positive(&e) {
            return None;
        }
        self.coordinates(&e)
    }

    /// Presentation equality up to the choice of NS basis.
    pub fn same_presentation(&self, other: &TorusVariety) -> bool {
        let span = |v: &TorusVariety| {
            let n = v.lattice_rank();
            let dims = n * (n - 1) / 2;
            Lattice::from_int_generators(&IntMat::from_fn(dims, v.ns_basis.len(), |i, k| {
                upper_coords(&v.ns_basis[k])[i].clone()
            }))
        };
        self.j == other.j
            && span(self) == span(other)
            && self.polarization_form() == other.polarization_form()
    }

    pub fn identity(self: &Arc<Self>) -> Homomorphism {
        Homomorphism::new_unchecked(self.clone(), self.clone(), IntMat::identity(self.lattice_rank()))
    }

    /// Multiplication by `n`.
    pub fn multiplication(self: &Arc<Self>, n: &Int) -> Homomorphism {
        Homomorphism::new_unchecked(self.clone(), self.clone(), IntMat::scalar(self.lattice_rank(), n.clone()))
    }

    /// `A_n = (1/n)Λ / Λ`.
    pub fn torsion_subgroup(self: &Arc<Self>, n: &Int) -> Result<FiniteSubgroup> {
        if !n.is_positive() {
            return Err(Error::Precondition("torsion level must be positive".into()));
        }
        FiniteSubgroup::new(self.clone(), Lattice::torsion(self.lattice_rank(), n))
    }
}

pub(crate) fn coordinates_in(basis: &[IntMat], e: &IntMat) -> Option<Vec<Int>> {
    let n = e.rows();
    if basis.is_empty() {
        return e.is_zero().then(Vec::new);
    }
    let dims = n * (n - 1) / 2;
    let cols: Vec<Vec<Int>> = basis.iter().map(upper_coords).collect();
    let a = RatMat::from_fn(dims, basis.len(), |i, k| rat_from_int(&cols[k][i]));
    let target: Vec<Rat> = upper_coords(e).iter().map(rat_from_int).collect();
    let x = a.solve(&target)?;
    let check = (0..dims).all(|i| {
        let v: Rat = (0..basis.len()).map(|k| &x[k] * &a[(i, k)]).sum();
        v == target[i]
    });
    (check && x.iter().all(|c| c.is_integer())).then(|| x.iter().map(|c| c.to_integer()).collect())
}

/// An integral matrix between lattices commuting with the complex structures.
#[derive(Clone, Debug)]
pub struct Homomorphism {
    source: Arc<TorusVariety>,
    target: Arc<TorusVariety>,
    m: IntMat,
}

fn same_variety(a: &Arc<TorusVariety>, b: &Arc<TorusVariety>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Whether `m` intertwines the two (scaled) complex structures.
pub fn commutes(m: &IntMat, source: &TorusVariety, target: &TorusVariety) -> bool {
    if m.rows() != target.lattice_rank() || m.cols() != source.lattice_rank() {
        return false;
    }
    let (Some(ss), Some(st)) = (source.scale(), target.scale()) else {
        return false;
    };
    let mr = m.to_rat();
    match scale_ratio(&ss, &st) {
        Some(r) => (&mr * source.j()).scale(&r) == target.j() * &mr,
        None => m.is_zero(),
    }
}

impl Homomorphism {
    pub fn new(source: Arc<TorusVariety>, target: Arc<TorusVariety>, m: IntMat) -> Result<Self> {
        if commutes(&m, &source, &target) {
            Ok(Homomorphism { source, target, m })
        } else {
            Err(Error::NotAHomomorphism)
        }
    }

    pub(crate) fn new_unchecked(source: Arc<TorusVariety>, target: Arc<TorusVariety>, m: IntMat) -> Self {
        debug_assert!(commutes(&m, &source, &target), "homomorphism invariant");
        Homomorphism { source, target, m }
    }

    pub fn source(&self) -> &Arc<TorusVariety> {
        &self.source
    }

    pub fn target(&self) -> &Arc<TorusVariety> {
        &self.target
    }

    pub fn matrix(&self) -> &IntMat {
        &self.m
    }

    pub fn is_isogeny(&self) -> bool {
        self.m.is_square() && !self.m.det().is_zero()
    }

    /// `|det m|`
    pub fn degree(&self) -> Result<Int> {
        if !self.is_isogeny() {
            return Err(Error::NotAnIsogeny);
        }
        Ok(self.m.det().abs())
    }

    /// `B̂ → Â` with matrix `mᵀ`.
    pub fn dual_hom(&self) -> Homomorphism {
        Homomorphism::new_unchecked(self.target.dual(), self.source.dual(), self.m.transpose())
    }

    /// `self ∘ inner`
    pub fn compose(&self, inner: &Homomorphism) -> Result<Homomorphism> {
        if !same_variety(&inner.target, &self.source) {
            return Err(Error::VarietyMismatch);
        }
        Ok(Homomorphism::new_unchecked(inner.source.clone(), self.target.clone(), &self.m * &inner.m))
    }

    pub fn kernel(&self) -> Result<FiniteSubgroup> {
        kernel_of(self)
    }

    /// Integral, unimodular, and commuting with both structures.
    pub fn is_isomorphism_certificate(&self) -> bool {
        self.m.is_unimodular() && commutes(&self.m, &self.source, &self.target)
    }
}

/// `Ker f = m⁻¹(ℤ^{2g_t}) / ℤ^{2g_s}`.
pub fn kernel_of(f: &Homomorphism) -> Result<FiniteSubgroup> {
    if !f.is_isogeny() {
        return Err(Error::NotAnIsogeny);
    }
    let inv = f.m.to_rat().inverse().expect("isogeny matrix is invertible");
    FiniteSubgroup::new(f.source.clone(), Lattice::from_generators(&inv))
}

pub fn degree(f: &Homomorphism) -> Result<Int> {
    f.degree()
}

pub fn dual_hom(f: &Homomorphism) -> Homomorphism {
    f.dual_hom()
}

pub fn is_isomorphism_certificate(f: &Homomorphism) -> bool {
    f.is_isomorphism_certificate()
}

/// A Néron–Severi class: integral alternating form compatible with `J`.
#[derive(Clone, Debug)]
pub struct NsClass {
    variety: Arc<TorusVariety>,
    e: IntMat,
}

impl NsClass {
    pub fn new(variety: Arc<TorusVariety>, e: IntMat) -> Result<Self> {
        if e.rows() != variety.lattice_rank() || e.cols() != variety.lattice_rank() {
            return Err(Error::InvalidClass(format!("expected a {0}x{0} matrix", variety.lattice_rank())));
        }
        if !e.is_alternating() {
            return Err(Error::InvalidClass("not alternating".into()));
        }
        if !variety.is_compatible(&e) {
            return Err(Error::InvalidClass("not compatible with the complex structure".into()));
        }
        Ok(NsClass { variety, e })
    }

    pub fn from_coefficients(variety: Arc<TorusVariety>, coeffs: &[Int]) -> Result<Self> {
        if coeffs.len() != variety.ns_basis().len() {
            return Err(Error::InvalidClass(format!(
                "{} coefficients for an NS basis of size {}",
                coeffs.len(),
                variety.ns_basis().len()
            )));
        }
        let e = variety.combine(coeffs);
        Self::new(variety, e)
    }

    pub fn variety(&self) -> &Arc<TorusVariety> {
        &self.variety
    }

    pub fn form(&self) -> &IntMat {
        &self.e
    }

    pub fn is_ample(&self) -> bool {
        self.variety.is_positive(&self.e)
    }

    pub fn is_nondegenerate(&self) -> bool {
        !self.e.det().is_zero()
    }

    pub fn pfaffian(&self) -> Int {
        self.e.pfaffian()
    }

    /// `K(L) = Λ(E)/Λ`.
    pub fn kernel_group(&self) -> Result<FiniteGroupStructure> {
        let lam = Lattice::standard(self.variety.lattice_rank());
        let dual = Lattice::dual_lattice_of_form(&self.e, &lam)?;
        Lattice::quotient_structure(&lam, &dual)
    }
}

/// The polarization map `A → Â`, `v ↦ E(·, v)`.
pub fn phi_class(c: &NsClass) -> Homomorphism {
    Homomorphism::new_unchecked(c.variety.clone(), c.variety.dual(), c.e.clone())
}

/// `f*E = mᵀ·E·m` on the source.
pub fn ns_pullback(f: &Homomorphism, c: &NsClass) -> Result<NsClass> {
    if !same_variety(&f.target, &c.variety) {
        return Err(Error::VarietyMismatch);
    }
    let e = &(&f.m.transpose() * &c.e) * &f.m;
    NsClass::new(f.source.clone(), e)
}

/// A finite subgroup `Λ′/Λ` of the torsion points, `Λ = ℤ^{2g} ⊆ Λ′`.
#[derive(Clone, Debug)]
pub struct FiniteSubgroup {
    variety: Arc<TorusVariety>,
    overlattice: Lattice,
    structure: FiniteGroupStructure,
}

impl PartialEq for FiniteSubgroup {
    fn eq(&self, other: &Self) -> bool {
        same_variety(&self.variety, &other.variety) && self.overlattice == other.overlattice
    }
}

impl FiniteSubgroup {
    pub fn new(variety: Arc<TorusVariety>, overlattice: Lattice) -> Result<Self> {
        let lam = Lattice::standard(variety.lattice_rank());
        let structure = Lattice::quotient_structure(&lam, &overlattice)?;
        Ok(FiniteSubgroup { variety, overlattice, structure })
    }

    pub fn trivial(variety: Arc<TorusVariety>) -> Self {
        let overlattice = Lattice::standard(variety.lattice_rank());
        FiniteSubgroup { variety, overlattice, structure: FiniteGroupStructure::trivial() }
    }

    /// Subgroup generated by the given torsion points (rational vectors mod `ℤ^{2g}`).
    pub fn generated_by(variety: Arc<TorusVariety>, points: &[Vec<Rat>]) -> Result<Self> {
        let n = variety.lattice_rank();
        if let Some(bad) = points.iter().find(|p| p.len() != n) {
            return Err(Error::DimensionMismatch { left: n, right: bad.len() });
        }
        let gens = RatMat::from_fn(n, points.len(), |i, k| points[k][i].clone());
        let over = Lattice::standard(n).sum(&Lattice::from_generators(&gens))?;
        Self::new(variety, over)
    }

    pub fn variety(&self) -> &Arc<TorusVariety> {
        &self.variety
    }

    pub fn overlattice(&self) -> &Lattice {
        &self.overlattice
    }

    pub fn structure(&self) -> &FiniteGroupStructure {
        &self.structure
    }

    pub fn order(&self) -> Int {
        self.structure.order()
    }

    pub fn is_trivial(&self) -> bool {
        self.structure.is_trivial()
    }

    fn require_same(&self, other: &FiniteSubgroup) -> Result<()> {
        if same_variety(&self.variety, &other.variety) {
            Ok(())
        } else {
            Err(Error::VarietyMismatch)
        }
    }

    pub fn intersect(&self, other: &FiniteSubgroup) -> Result<FiniteSubgroup> {
        self.require_same(other)?;
        FiniteSubgroup::new(self.variety.clone(), self.overlattice.intersect(&other.overlattice)?)
    }

    pub fn sum(&self, other: &FiniteSubgroup) -> Result<FiniteSubgroup> {
        self.require_same(other)?;
        FiniteSubgroup::new(self.variety.clone(), self.overlattice.sum(&other.overlattice)?)
    }

    pub fn equals(&self, other: &FiniteSubgroup) -> Result<bool> {
        self.require_same(other)?;
        Ok(self.overlattice == other.overlattice)
    }

    pub fn contains(&self, other: &FiniteSubgroup) -> Result<bool> {
        self.require_same(other)?;
        self.overlattice.contains_lattice(&other.overlattice)
    }

    pub fn contains_point(&self, point: &[Rat]) -> Result<bool> {
        self.overlattice.contains_vector(point)
    }

    /// `(m·Λ′ + Λ_t) / Λ_t`
    pub fn image_under(&self, f: &Homomorphism) -> Result<FiniteSubgroup> {
        if !same_variety(&f.source, &self.variety) {
            return Err(Error::VarietyMismatch);
        }
        let img = &f.m.to_rat() * &self.overlattice.basis();
        let over = Lattice::from_generators(&img.hstack(&RatMat::identity(f.target.lattice_rank())));
        FiniteSubgroup::new(f.target.clone(), over)
    }

    /// `f⁻¹(self)` for an isogeny `f` into this subgroup's variety.
    pub fn preimage_under(&self, f: &Homomorphism) -> Result<FiniteSubgroup> {
        if !same_variety(&f.target, &self.variety) {
            return Err(Error::VarietyMismatch);
        }
        if !f.is_isogeny() {
            return Err(Error::NotAnIsogeny);
        }
        let inv = f.m.to_rat().inverse().expect("isogeny matrix is invertible");
        FiniteSubgroup::new(f.source.clone(), Lattice::from_generators(&(&inv * &self.overlattice.basis())))
    }

    /// Every element, as vectors of numerators over the exponent, reduced mod 1.
    pub fn elements(&self) -> Vec<Vec<Rat>> {
        let n = self.variety.lattice_rank();
        let exp = self.structure.exponent();
        let basis = self.overlattice.basis();
        let mut out = std::collections::BTreeSet::new();
        // the overlattice modulo ℤⁿ is spanned by its basis columns with coefficients mod exp
        let e = exp.to_string().parse::<u64>().unwrap_or(1);
        let cols = basis.cols();
        let mut idx = vec![0u64; cols];
        loop {
            let v: Vec<Rat> = (0..n)
                .map(|i| {
                    let s: Rat = (0..cols).map(|k| &basis[(i, k)] * Rat::from_integer(Int::from(idx[k]))).sum();
                    let fl = s.floor();
                    s - fl
                })
                .collect();
            out.insert(v.iter().map(|x| (x.numer().clone(), x.denom().clone())).collect::<Vec<_>>());
            let mut k = 0;
            loop {
                if k == cols {
                    return out
                        .into_iter()
                        .map(|v| v.into_iter().map(|(p, q)| Rat::new(p, q)).collect())
                        .collect();
                }
                idx[k] += 1;
                if idx[k] < e {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

pub fn intersect_subgroups(a: &FiniteSubgroup, b: &FiniteSubgroup) -> Result<FiniteSubgroup> {
    a.intersect(b)
}

pub fn subgroup_equal(a: &FiniteSubgroup, b: &FiniteSubgroup) -> Result<bool> {
    a.equals(b)
}

pub fn subgroup_contains(a: &FiniteSubgroup, b: &FiniteSubgroup) -> Result<bool> {
    a.contains(b)
}

pub fn image_under(f: &Homomorphism, h: &FiniteSubgroup) -> Result<FiniteSubgroup> {
    h.image_under(f)
}

pub fn preimage_under(f: &Homomorphism, h: &FiniteSubgroup) -> Result<FiniteSubgroup> {
    h.preimage_under(f)
}

/// `A × B` with its canonical injections and projections.
#[derive(Clone, Debug)]
pub struct ProductVariety {
    pub variety: Arc<TorusVariety>,
    pub first: Arc<TorusVariety>,
    pub second: Arc<TorusVariety>,
    pub inj_first: Homomorphism,
    pub inj_second: Homomorphism,
    pub proj_first: Homomorphism,
    pub proj_second: Homomorphism,
    /// Number of leading NS basis elements lifted from the first factor, then from the second;
    /// the rest are correspondence classes.
    pub lifted: (usize, usize),
}

/// Product with NS basis: lifts of each factor's basis, then the correspondence classes.
pub fn product(a: &Arc<TorusVariety>, b: &Arc<TorusVariety>) -> Result<ProductVariety> {
    for v in [a, b] {
        let report = v.validate();
        if !report.is_valid() {
            return Err(Error::InvalidVariety(report));
        }
    }
    let sa = a.scale().expect("validated");
    let sb = b.scale().expect("validated");
    let r = scale_ratio(&sb, &sa)
        .ok_or_else(|| Error::IncompatibleScales(sa.to_string(), sb.to_string()))?;
    let jb = b.j().scale(&r);
    let j = a.j().block_diag(&jb);
    let (na, nb) = (a.lattice_rank(), b.lattice_rank());
    let zero_a = IntMat::zeros(na, na);
    let zero_b = IntMat::zeros(nb, nb);
    let mut ns = Vec::new();
    ns.extend(a.ns_basis().iter().map(|e| e.block_diag(&zero_b)));
    ns.extend(b.ns_basis().iter().map(|e| zero_a.block_diag(e)));
    for c in correspondence_lattice(a.j(), &jb, &sa) {
        ns.push(IntMat::from_blocks(&zero_a, &c, &(-&c.transpose()), &zero_b));
    }
    let polarization: Vec<Int> = a
        .polarization()
        .iter()
        .chain(b.polarization())
        .cloned()
        .chain(std::iter::repeat_n(Int::zero(), ns.len() - a.ns_basis().len() - b.ns_basis().len()))
        .collect();
    let name = format!("{}x{}", a.name(), b.name());
    let variety = Arc::new(TorusVariety::new(name, j, ns, polarization));
    let n = na + nb;
    let pa = IntMat::from_fn(na, n, |i, k| if i == k { Int::one() } else { Int::zero() });
    let pb = IntMat::from_fn(nb, n, |i, k| if i + na == k { Int::one() } else { Int::zero() });
    Ok(ProductVariety {
        inj_first: Homomorphism::new(a.clone(), variety.clone(), pa.transpose())?,
        inj_second: Homomorphism::new(b.clone(), variety.clone(), pb.transpose())?,
        proj_first: Homomorphism::new(variety.clone(), a.clone(), pa)?,
        proj_second: Homomorphism::new(variety.clone(), b.clone(), pb)?,
        lifted: (a.ns_basis().len(), b.ns_basis().len()),
        first: a.clone(),
        second: b.clone(),
        variety,
    })
}

/// Canonical ℤ-basis of `Hom(source, target)` as matrices.
pub fn hom_lattice(source: &TorusVariety, target: &TorusVariety) -> Vec<IntMat> {
    let (ns, nt) = (source.lattice_rank(), target.lattice_rank());
    let (Some(ss), Some(st)) = (source.scale(), target.scale()) else {
        return Vec::new();
    };
    let Some(r) = scale_ratio(&ss, &st) else {
        return Vec::new();
    };
    let dims = nt * ns;
    let mut map = RatMat::zeros(dims, dims);
    for k in 0..dims {
        let mut m = RatMat::zeros(nt, ns);
        m[(k / ns, k % ns)] = Rat::one();
        let image = &(&m * source.j()).scale(&r) - &(target.j() * &m);
        for i in 0..dims {
            map[(i, k)] = image[(i / ns, i % ns)].clone();
        }
    }
    saturated_solutions(&map)
        .into_iter()
        .map(|v| IntMat::from_fn(nt, ns, |i, j| v[i * ns + j].clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::lattice_core::{int, int_mat, rat};

    fn e0() -> IntMat {
        int_mat(&[&[0, 1], &[-1, 0]])
    }

    #[test]
    fn validate_examples() {
        let ei = corpus::e_i();
        assert!(ei.validate().is_valid());
        let bad_j = TorusVariety::new(
            "bad",
            int_mat(&[&[0, 1], &[1, 0]]).to_rat(),
            vec![e0()],
            vec![int(1)],
        );
        assert!(bad_j.validate().failures.contains(&ValidationFailure::NotComplexStructure));
        let neg = TorusVariety::new("neg", ei.j().clone(), vec![-&e0()], vec![int(1)]);
        assert_eq!(neg.validate().failures, vec![ValidationFailure::PolarizationNotPositive]);
        let dep = TorusVariety::new("dep", ei.j().clone(), vec![e0(), e0().scale(&int(2))], vec![int(1), int(0)]);
        assert!(dep.validate().failures.contains(&ValidationFailure::DependentBasis));
    }

    #[test]
    fn e_omega_uses_scaled_structure() {
        let w = corpus::e_omega();
        assert!(w.validate().is_valid());
        assert_eq!(w.scale(), Some(rat(3, 1)));
        assert_eq!(w.ns_rank(), 1);
    }

    #[test]
    fn dual_examples() {
        let ei = Arc::new(corpus::e_i());
        let d = ei.dual();
        assert_eq!(d.j(), ei.j());
        assert!(d.validate().is_valid());
        assert!(d.dual().same_presentation(&ei));
        let exe = Arc::new(corpus::e_i_x_e_i());
        let dd = exe.dual().dual();
        assert!(dd.same_presentation(&exe));
        // dual of a product is the product of duals, block by block
        let p = product(&ei, &ei).unwrap();
        assert_eq!(p.variety.dual().j(), &ei.dual().j().block_diag(ei.dual().j()));
    }

    #[test]
    fn phi_class_degrees() {
        let ei = Arc::new(corpus::e_i());
        for n in 1..=6 {
            let c = NsClass::new(ei.clone(), e0().scale(&int(n))).unwrap();
            let phi = phi_class(&c);
            assert!(commutes(phi.matrix(), phi.source(), phi.target()));
            assert_eq!(phi.degree().unwrap(), int(n * n));
            assert_eq!(c.pfaffian(), int(n));
        }
    }

    #[test]
    fn kernels_and_torsion() {
        let ei = Arc::new(corpus::e_i());
        let c1 = NsClass::new(ei.clone(), e0()).unwrap();
        assert!(kernel_of(&phi_class(&c1)).unwrap().is_trivial());
        let c2 = NsClass::new(ei.clone(), e0().scale(&int(2))).unwrap();
        let k2 = kernel_of(&phi_class(&c2)).unwrap();
        assert_eq!(k2.structure().divisors(), &[int(2), int(2)]);
        assert_eq!(k2, ei.torsion_subgroup(&int(2)).unwrap());
        for l in 1..=4 {
            let k = kernel_of(&ei.multiplication(&int(l))).unwrap();
            assert_eq!(k.order(), int(l * l));
        }
        let exe = Arc::new(corpus::e_i_x_e_i());
        assert_eq!(exe.torsion_subgroup(&int(3)).unwrap().order(), int(81));
        assert!(ei.torsion_subgroup(&int(1)).unwrap().is_trivial());
        let zero = Homomorphism::new(ei.clone(), ei.clone(), IntMat::zeros(2, 2)).unwrap();
        assert!(matches!(kernel_of(&zero), Err(Error::NotAnIsogeny)));
    }

    #[test]
    fn subgroup_operations() {
        let ei = Arc::new(corpus::e_i());
        let a2 = ei.torsion_subgroup(&int(2)).unwrap();
        let a3 = ei.torsion_subgroup(&int(3)).unwrap();
        let a4 = ei.torsion_subgroup(&int(4)).unwrap();
        assert!(a2.intersect(&a3).unwrap().is_trivial());
        assert_eq!(a2.intersect(&a4).unwrap(), a2);
        assert!(a4.contains(&a2).unwrap());
        let phi = phi_class(&NsClass::new(ei.clone(), e0()).unwrap());
        for l in 1..=4 {
            let img = ei.torsion_subgroup(&int(l)).unwrap().image_under(&phi).unwrap();
            assert_eq!(img.order(), int(l * l));
            assert_eq!(img.elements().len() as i64, l * l);
        }
        let other = Arc::new(corpus::e_omega());
        assert!(matches!(a2.intersect(&other.torsion_subgroup(&int(2)).unwrap()), Err(Error::VarietyMismatch)));
        let two = ei.multiplication(&int(2));
        assert_eq!(FiniteSubgroup::trivial(ei.clone()).preimage_under(&two).unwrap(), a2);
    }

    #[test]
    fn certificates() {
        let ei = Arc::new(corpus::e_i());
        assert!(ei.identity().is_isomorphism_certificate());
        assert!(!ei.multiplication(&int(2)).is_isomorphism_certificate());
        let rot = Homomorphism::new(ei.clone(), ei.clone(), int_mat(&[&[0, -1], &[1, 0]])).unwrap();
        assert!(rot.is_isomorphism_certificate());
        assert!(Homomorphism::new(ei.clone(), ei.clone(), int_mat(&[&[1, 1], &[0, 1]])).is_err());
    }

    #[test]
    fn product_structure() {
        let ei = Arc::new(corpus::e_i());
        let p = product(&ei, &ei).unwrap();
        assert_eq!(p.variety.g(), 2);
        assert!(p.variety.validate().is_valid());
        assert_eq!(p.variety.ns_basis().len(), 4);
        assert_eq!(p.variety.ns_rank(), 4);
        assert_eq!(p.proj_first.compose(&p.inj_first).unwrap().matrix(), &IntMat::identity(2));
        assert_eq!(p.proj_second.compose(&p.inj_second).unwrap().matrix(), &IntMat::identity(2));
        assert!(p.proj_first.compose(&p.inj_second).unwrap().matrix().is_zero());
        assert_eq!(*p.variety, corpus::e_i_x_e_i());
        let w = Arc::new(corpus::e_omega());
        assert!(matches!(product(&ei, &w), Err(Error::IncompatibleScales(..))));
        assert_eq!(product(&w, &w).unwrap().variety.ns_rank(), 4);
    }

    #[test]
    fn pullback_examples() {
        let ei = Arc::new(corpus::e_i());
        let c = NsClass::new(ei.clone(), e0()).unwrap();
        assert_eq!(ns_pullback(&ei.identity(), &c).unwrap().form(), &e0());
        assert_eq!(ns_pullback(&ei.multiplication(&int(3)), &c).unwrap().form(), &e0().scale(&int(9)));
    }

    #[test]
    fn dual_hom_involution_and_polarization_symmetry() {
        let exe = Arc::new(corpus::e_i_x_e_i());
        for coeffs in [[1, 1, 0, 0], [2, 1, 1, 0], [1, 3, 1, -1]] {
            let c = NsClass::from_coefficients(exe.clone(), &coeffs.map(int)).unwrap();
            let phi = phi_class(&c);
            let d = phi.dual_hom();
            // under the identity identification Â^ = A the transpose of an alternating form is its negative
            assert_eq!(d.matrix(), &(-phi.matrix()));
            assert_eq!(d.dual_hom().matrix(), phi.matrix());
            assert_eq!(d.degree().unwrap(), phi.degree().unwrap());
            assert!(commutes(d.matrix(), d.source(), d.target()));
        }
    }

    #[test]
    fn hom_lattice_of_e_i_is_gaussian_integers() {
        let ei = corpus::e_i();
        assert_eq!(hom_lattice(&ei, &ei).len(), 2);
        let exe = corpus::e_i_x_e_i();
        assert_eq!(hom_lattice(&exe, &exe).len(), 8);
        assert!(hom_lattice(&ei, &corpus::e_omega()).is_empty());
    }
}
