//! Fourier–Mukai partners `B = dual(A_μ)`, isomorphism certificates, and the
//! rigidity check for principally polarized varieties.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice_core::{Int, IntMat};
use crate::slopes::{a_mu, a_mu_kernel, reduce, Slope, SubvarietyEmbedding};
use crate::varieties::{hom_lattice, FiniteSubgroup, Homomorphism, NsClass, TorusVariety};

pub const DEFAULT_SEARCH_BOUND: i64 = 3;

/// A partner together with the construction chain `A → A_μ`, `dual(B) = A_μ`.
#[derive(Clone, Debug)]
pub struct Partner {
    pub slope: Slope,
    pub a_mu: SubvarietyEmbedding,
    pub partner: Arc<TorusVariety>,
    /// `dual(B) → A_μ`; the identity matrix by construction.
    pub dual_certificate: Homomorphism,
}

pub fn partner_from_slope(slope: &Slope) -> Result<Partner> {
    let amu = a_mu(slope)?;
    let report = amu.variety.validate();
    if !report.is_valid() {
        return Err(Error::InvalidVariety(report));
    }
    let partner = amu.variety.dual();
    let report = partner.validate();
    if !report.is_valid() {
        return Err(Error::InvalidVariety(report));
    }
    let dual_certificate = Homomorphism::new(
        partner.dual(),
        amu.variety.clone(),
        IntMat::identity(partner.lattice_rank()),
    )?;
    if !dual_certificate.is_isomorphism_certificate() {
        return Err(Error::InvariantViolation("dual of the partner is not A_mu".into()));
    }
    Ok(Partner { slope: slope.clone(), a_mu: amu, partner, dual_certificate })
}

/// Integer data of a lower-echelon basis of `Hom`, flattened row-major.
struct Echelon {
    rows: usize,
    cols: usize,
    vectors: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

impl Echelon {
    fn new(basis: &[IntMat]) -> Option<Echelon> {
        let (rows, cols) = basis.first().map(|m| (m.rows(), m.cols()))?;
        let vectors: Vec<Vec<i64>> = basis
            .iter()
            .map(|m| m.entries().map(|x| x.to_i64()).collect::<Option<Vec<_>>>())
            .collect::<Option<_>>()?;
        let pivots: Vec<usize> = vectors.iter().map(|v| v.iter().position(|x| *x != 0).unwrap_or(v.len())).collect();
        let echelon = pivots.windows(2).all(|w| w[0] < w[1])
            && vectors.iter().zip(&pivots).all(|(v, &p)| p < v.len() && v[p] > 0);
        echelon.then_some(Echelon { rows, cols, vectors, pivots })
    }

    fn size(&self) -> usize {
        self.rows * self.cols
    }
}

fn det_i128(m: &[i64], n: usize) -> i128 {
    let mut a: Vec<i128> = m.iter().map(|&x| x as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&i| a[i * n + k] != 0) {
                Some(i) => {
                    for c in 0..n {
                        a.swap(k * n + c, i * n + c);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

/// 0, 1, −1, 2, −2, … restricted to `[lo, hi]`.
fn centered(lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    let reach = lo.abs().max(hi.abs());
    std::iter::once(0)
        .chain((1..=reach).flat_map(|k| [k, -k]))
        .filter(move |c| *c >= lo && *c <= hi)
}

struct Search<'a> {
    ech: &'a Echelon,
    bound: i64,
}

impl Search<'_> {
    /// Range of coefficient `j` keeping entry `pivots[j]` within the bound.
    fn range(&self, j: usize, partial: &[i64]) -> (i64, i64) {
        let p = self.ech.pivots[j];
        let piv = self.ech.vectors[j][p];
        let base = partial[p];
        (Integer::div_ceil(&(-self.bound - base), &piv), Integer::div_floor(&(self.bound - base), &piv))
    }

    /// Entries in `[from, to)` are final once coefficient `j-1` is chosen.
    fn within_bound(&self, partial: &[i64], from: usize, to: usize) -> bool {
        partial[from..to].iter().all(|x| x.abs() <= self.bound)
    }

    fn descend(&self, j: usize, partial: &mut Vec<i64>) -> Option<Vec<i64>> {
        let ech = self.ech;
        if j == ech.vectors.len() {
            let n = ech.rows;
            return (ech.rows == ech.cols && det_i128(partial, n).abs() == 1).then(|| partial.clone());
        }
        let (lo, hi) = self.range(j, partial);
        let next = ech.pivots.get(j + 1).copied().unwrap_or(ech.size());
        for c in centered(lo, hi) {
            for (x, v) in partial.iter_mut().zip(&ech.vectors[j]) {
                *x += c * v;
            }
            let found = if self.within_bound(partial, ech.pivots[j], next) { self.descend(j + 1, partial) } else { None };
            for (x, v) in partial.iter_mut().zip(&ech.vectors[j]) {
                *x -= c * v;
            }
            if found.is_some() {
                return found;
            }
        }
        None
    }
}

/// First unimodular `J`-commuting matrix `source → target` with entries in
/// `[−bound, bound]`, in the deterministic enumeration order of the `Hom`
/// lattice coordinates. `None` means no certificate at this bound.
pub fn find_isomorphism(source: &Arc<TorusVariety>, target: &Arc<TorusVariety>, bound: i64) -> Option<Homomorphism> {
    if source.lattice_rank() != target.lattice_rank() || bound < 1 {
        return None;
    }
    let basis = hom_lattice(source, target);
    let ech = Echelon::new(&basis)?;
    let search = Search { ech: &ech, bound };
    let first = ech.pivots[0];
    let zero = vec![0i64; ech.size()];
    if !search.within_bound(&zero, 0, first) {
        return None;
    }
    let (lo, hi) = search.range(0, &zero);
    let candidates: Vec<i64> = centered(lo, hi).collect();
    let found = candidates.par_iter().find_map_first(|&c| {
        let mut partial: Vec<i64> = ech.vectors[0].iter().map(|v| c * v).collect();
        let next = ech.pivots.get(1).copied().unwrap_or(ech.size());
        if !search.within_bound(&partial, first, next) {
            return None;
        }
        search.descend(1, &mut partial)
    })?;
    let m = IntMat::from_fn(ech.rows, ech.cols, |i, j| Int::from(found[i * ech.cols + j]));
    Homomorphism::new(source.clone(), target.clone(), m).ok()
}

/// Coarse isomorphism invariant: `g`, NS rank, and the multiset of `K(E)`
/// structures over nondegenerate classes `Σ cᵢEᵢ`, `|cᵢ| ≤ 2`, of the
/// canonical NS basis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fingerprint {
    pub g: usize,
    pub ns_rank: usize,
    pub profiles: Vec<Profile>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Profile {
    #[serde(serialize_with = "crate::io::ser_int_vec")]
    pub divisors: Vec<Int>,
    pub count: usize,
}

pub const FINGERPRINT_BOUND: i64 = 2;

pub(crate) fn coefficient_box(len: usize, bound: i64) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (-bound..=bound).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

pub fn fingerprint(a: &TorusVariety) -> Fingerprint {
    let basis = a.ns_lattice();
    let n = a.lattice_rank();
    let mut multiset: BTreeMap<Vec<Int>, usize> = BTreeMap::new();
    for coeffs in coefficient_box(basis.len(), FINGERPRINT_BOUND) {
        let e = coeffs
            .iter()
            .zip(&basis)
            .fold(IntMat::zeros(n, n), |acc, (c, b)| &acc + &b.scale(&Int::from(*c)));
        if e.det().is_zero() {
            continue;
        }
        let lam = crate::lattice_core::Lattice::standard(n);
        let k = crate::lattice_core::Lattice::dual_lattice_of_form(&e, &lam)
            .and_then(|d| crate::lattice_core::Lattice::quotient_structure(&lam, &d))
            .expect("nondegenerate alternating form");
        *multiset.entry(k.divisors().to_vec()).or_default() += 1;
    }
    Fingerprint {
        g: a.g(),
        ns_rank: basis.len(),
        profiles: multiset.into_iter().map(|(divisors, count)| Profile { divisors, count }).collect(),
    }
}

/// Representative of `μ` modulo `NS(A)`: coefficients reduced into `[0, l)`.
/// `A_{μ+E′}` is the image of `A_μ` under the shear `(x, y) ↦ (x, y + φ_{E′}(x))`,
/// so only this class matters for the partner.
pub fn canonical_slope(slope: &Slope) -> Result<Slope> {
    let coeffs = slope
        .coefficients()
        .ok_or_else(|| Error::InvalidClass("slope numerator is not in the span of ns_basis".into()))?;
    let l = slope.denominator();
    let reduced: Vec<Int> = coeffs.iter().map(|c| c.mod_floor(l)).collect();
    reduce(&NsClass::from_coefficients(slope.variety().clone(), &reduced)?, l)
}

#[derive(Clone, Debug)]
pub struct PartnerEntry {
    pub slope: Slope,
    pub coefficients: Vec<Int>,
    pub partner: Partner,
    pub fingerprint: Fingerprint,
    /// A certificate `B ≅ Â` at the search bound, if one was found.
    pub dual_isomorphism: Option<Homomorphism>,
}

/// Partners for the slopes `Σ cᵢEᵢ / l`, `|cᵢ| ≤ coeff_bound`, `1 ≤ l ≤ denom_bound`,
/// taken modulo `NS(A)`. The list depends on the bounds and is not exhaustive.
pub fn enumerate_partners(
    a: &Arc<TorusVariety>,
    coeff_bound: i64,
    denom_bound: i64,
    search_bound: i64,
) -> Result<Vec<PartnerEntry>> {
    if coeff_bound < 1 || denom_bound < 1 {
        return Err(Error::Precondition("bounds must be at least 1".into()));
    }
    let report = a.validate();
    if !report.is_valid() {
        return Err(Error::InvalidVariety(report));
    }
    let mut keys: Vec<(Int, Vec<Int>)> = Vec::new();
    for l in 1..=denom_bound {
        for coeffs in coefficient_box(a.ns_basis().len(), coeff_bound) {
            let c: Vec<Int> = coeffs.into_iter().map(Int::from).collect();
            let s = canonical_slope(&Slope::from_coefficients(a.clone(), &c, &Int::from(l))?)?;
            let key = s.coefficients().expect("canonical slope has coordinates");
            keys.push((s.denominator().clone(), key));
        }
    }
    keys.sort();
    keys.dedup();
    let dual = a.dual();
    keys.par_iter()
        .map(|(l, c)| {
            let slope = Slope::from_coefficients(a.clone(), c, l)?;
            let partner = partner_from_slope(&slope)?;
            let fingerprint = fingerprint(&partner.partner);
            let dual_isomorphism = find_isomorphism(&partner.partner, &dual, search_bound);
            Ok(PartnerEntry { slope, coefficients: c.clone(), partner, fingerprint, dual_isomorphism })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct PpavCheck {
    pub passed: bool,
    pub slope: Slope,
    pub kernel: FiniteSubgroup,
    /// The quotient `A → A_μ` when it is unimodular.
    pub certificate: Option<Homomorphism>,
}

/// For a principally polarized `A` and coprime `(n, l)`: `Ker(A → A_{nL/l}) = A_l ∩ K(nL)`
/// is trivial and the quotient map is an isomorphism.
pub fn ppav_rank1_check(a: &Arc<TorusVariety>, n: &Int, l: &Int) -> Result<PpavCheck> {
    let report = a.validate();
    if !report.is_valid() {
        return Err(Error::InvalidVariety(report));
    }
    if !a.is_principally_polarized() {
        return Err(Error::Precondition("designated polarization is not principal".into()));
    }
    if !l.is_positive() || n.is_zero() {
        return Err(Error::Precondition("need n != 0 and l >= 1".into()));
    }
    if !n.gcd(l).is_one() {
        return Err(Error::Precondition(format!("gcd({n}, {l}) != 1")));
    }
    let e = a.polarization_form().scale(n);
    let slope = Slope::new(NsClass::new(a.clone(), e)?, l.clone())?;
    let kernel = a_mu_kernel(&slope)?;
    let amu = a_mu(&slope)?;
    let certificate = amu.quotient.is_isomorphism_certificate().then(|| amu.quotient.clone());
    Ok(PpavCheck { passed: kernel.is_trivial() && certificate.is_some(), slope, kernel, certificate })
}

/// The same variety with NS basis cut down to the designated polarization.
pub fn restrict_to_polarization(a: &TorusVariety) -> TorusVariety {
    TorusVariety::new(
        format!("{}|pol", a.name()),
        a.j().clone(),
        vec![a.polarization_form()],
        vec![Int::one()],
    )
}
