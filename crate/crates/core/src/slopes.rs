//! Slopes `μ = E/l` and the abelian subvariety `A_μ = Im(A → A × Â)`,
//! `a ↦ (l·a, φ_E(a))`.
//!
//! `A_μ` is modelled by its member lattice `Λ_μ = (1/l)Λ ∩ {v : E·v ∈ ℤ^{2g}}`:
//! the map `A → A_μ` is the identity on `ℚ^{2g}` and has kernel `Λ_μ/Λ`.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::io::class_literal;
use crate::lattice_core::{integer_kernel, Int, IntMat, Lattice, Rat, RatMat};
use crate::varieties::{
    kernel_of, ns_lattice_of, product, FiniteSubgroup, Homomorphism, NsClass, TorusVariety,
};

/// A reduced fraction `E/l` in `NS(A) ⊗ ℚ`.
#[derive(Clone, Debug)]
pub struct Slope {
    class: NsClass,
    l: Int,
}

impl PartialEq for Slope {
    fn eq(&self, other: &Self) -> bool {
        self.l == other.l && self.class.form() == other.class.form()
    }
}

impl Eq for Slope {}

/// Divides out `gcd(l, content(E))`.
pub fn reduce(class: &NsClass, l: &Int) -> Result<Slope> {
    if !l.is_positive() {
        return Err(Error::ZeroDenominator);
    }
    let g = class.form().content().gcd(l);
    let e = class.form().map(|x| x / &g);
    Ok(Slope { class: NsClass::new(class.variety().clone(), e)?, l: l / &g })
}

impl Slope {
    /// Requires the fraction to be reduced already.
    pub fn new(class: NsClass, l: Int) -> Result<Self> {
        if !l.is_positive() {
            return Err(Error::ZeroDenominator);
        }
        let g = class.form().content().gcd(&l);
        if !g.is_one() {
            return Err(Error::NotReduced(g.to_string()));
        }
        Ok(Slope { class, l })
    }

    /// `Σ cᵢEᵢ / l`, reduced.
    pub fn from_coefficients(variety: Arc<TorusVariety>, coeffs: &[Int], l: &Int) -> Result<Self> {
        reduce(&NsClass::from_coefficients(variety, coeffs)?, l)
    }

    pub fn variety(&self) -> &Arc<TorusVariety> {
        self.class.variety()
    }

    pub fn class(&self) -> &NsClass {
        &self.class
    }

    pub fn form(&self) -> &IntMat {
        self.class.form()
    }

    pub fn denominator(&self) -> &Int {
        &self.l
    }

    /// Numerator coordinates over the variety's NS basis, if integral there.
    pub fn coefficients(&self) -> Option<Vec<Int>> {
        self.variety().coordinates(self.form())
    }

    /// `c*Ek/l` or `(c1*E0+…)/l`, or the raw matrix when the numerator is not in the basis span.
    pub fn literal(&self) -> String {
        match self.coefficients() {
            Some(c) if c.iter().filter(|x| !x.is_zero()).count() > 1 => format!("({})/{}", class_literal(&c), self.l),
            Some(c) => format!("{}/{}", class_literal(&c), self.l),
            None => format!("{:?}/{}", self.form().to_rows(), self.l),
        }
    }

    /// `μ + k·E′` for an integral class `E′`.
    pub fn translate(&self, by: &IntMat, k: &Int) -> Result<Slope> {
        let e = self.form() + &by.scale(&(k * &self.l));
        reduce(&NsClass::new(self.variety().clone(), e)?, &self.l)
    }
}

/// `A_μ` with its lattice model and the maps relating it to `A`, `Â` and `A × Â`.
#[derive(Clone, Debug)]
pub struct SubvarietyEmbedding {
    pub slope: Slope,
    /// `Λ_μ ⊂ ℚ^{2g}`.
    pub member_lattice: Lattice,
    /// Columns: the chosen basis of `Λ_μ`.
    pub basis: RatMat,
    /// `v ↦ (l·v, E·v)` in the coordinates of `ℚ^{2g}`.
    pub embedding_map: RatMat,
    /// `A_μ` as an abstract variety on the lattice `Λ_μ`.
    pub variety: Arc<TorusVariety>,
    /// `A × Â`.
    pub ambient: Arc<TorusVariety>,
    /// The isogeny `A → A_μ`.
    pub quotient: Homomorphism,
    /// `π₁: A_μ → A`, `v ↦ l·v`.
    pub pi1: Homomorphism,
    /// `π₂: A_μ → Â`, `v ↦ φ_E(v)`.
    pub pi2: Homomorphism,
    /// `A_μ → A × Â`.
    pub embedding: Homomorphism,
}

/// `Λ_μ = (1/l)ℤ^{2g} ∩ E⁻¹(ℤ^{2g})`; a lattice for degenerate `E` too.
pub fn member_lattice(slope: &Slope) -> Result<Lattice> {
    let n = slope.variety().lattice_rank();
    Lattice::preimage(&slope.form().to_rat(), &Lattice::standard(n), &Lattice::torsion(n, slope.denominator()))
}

pub fn a_mu(slope: &Slope) -> Result<SubvarietyEmbedding> {
    let a = slope.variety().clone();
    let lam = member_lattice(slope)?;
    let bas = lam.basis();
    let inv = bas.inverse().expect("member lattice is full rank");
    let l = Rat::from_integer(slope.l.clone());
    let s = a.scale().ok_or_else(|| Error::InvalidVariety(a.validate()))?;

    let j_mu = &(&inv * a.j()) * &bas;
    let ns = ns_lattice_of(&j_mu, &s);
    let name = format!("{}_mu[{}]", a.name(), slope.literal());
    let partial = TorusVariety::new(name.clone(), j_mu.clone(), ns.clone(), Vec::new());
    let h = a.polarization_form().to_rat();
    let pulled = &(&bas.transpose() * &h) * &bas;
    let polarization = partial
        .positive_coordinates(&pulled)
        .ok_or_else(|| Error::InvariantViolation("pulled-back polarization is not ample on A_mu".into()))?;
    let variety = Arc::new(TorusVariety::new(name, j_mu, ns, polarization));

    let as_int = |m: RatMat, what: &str| {
        m.to_int().ok_or_else(|| Error::InvariantViolation(format!("{what} is not integral")))
    };
    let quotient = Homomorphism::new(a.clone(), variety.clone(), as_int(inv, "A -> A_mu")?)?;
    let pi1 = Homomorphism::new(variety.clone(), a.clone(), as_int(bas.scale(&l), "pi1")?)?;
    let e = slope.form().to_rat();
    let pi2 = Homomorphism::new(variety.clone(), a.dual(), as_int(&e * &bas, "pi2")?)?;

    let ambient = product(&a, &a.dual())?.variety;
    let emb = pi1.matrix().vstack(pi2.matrix());
    let embedding = Homomorphism::new(variety.clone(), ambient.clone(), emb.clone())?;
    let image = Lattice::from_int_generators(&emb);
    if image.saturate(&Lattice::standard(emb.rows()))? != image {
        return Err(Error::InvariantViolation("image of A_mu in A x dual(A) is not primitive".into()));
    }
    let embedding_map = RatMat::scalar(a.lattice_rank(), l).vstack(&e);
    Ok(SubvarietyEmbedding {
        slope: slope.clone(),
        member_lattice: lam,
        basis: bas,
        embedding_map,
        variety,
        ambient,
        quotient,
        pi1,
        pi2,
        embedding,
    })
}

/// `Ker(A → A_μ) = Λ_μ / Λ`.
pub fn a_mu_kernel(slope: &Slope) -> Result<FiniteSubgroup> {
    FiniteSubgroup::new(slope.variety().clone(), member_lattice(slope)?)
}

/// `A_l ∩ K(E)`, computed by subgroup intersection; needs `E` nondegenerate.
pub fn a_mu_kernel_by_intersection(slope: &Slope) -> Result<FiniteSubgroup> {
    let a = slope.variety();
    let k = kernel_of(&crate::varieties::phi_class(slope.class()))?;
    a.torsion_subgroup(slope.denominator())?.intersect(&k)
}

/// Numerical invariants of the semi-homogeneous bundle of slope `μ`.
#[derive(Clone, Debug)]
pub struct Pi1Invariants {
    pub deg_pi1: Int,
    /// `Σ = Ker(π₁) ⊂ A_μ`.
    pub sigma: FiniteSubgroup,
    pub rank: Int,
}

pub fn pi1_invariants(slope: &Slope) -> Result<Pi1Invariants> {
    let amu = a_mu(slope)?;
    pi1_invariants_of(&amu)
}

pub fn pi1_invariants_of(amu: &SubvarietyEmbedding) -> Result<Pi1Invariants> {
    let deg_pi1 = amu.pi1.degree()?;
    let sigma = kernel_of(&amu.pi1)?;
    let rank = deg_pi1.sqrt();
    if &rank * &rank != deg_pi1 {
        return Err(Error::InvariantViolation(format!("deg(pi1) = {deg_pi1} is not a perfect square")));
    }
    if sigma.order() != deg_pi1 {
        return Err(Error::InvariantViolation("|Sigma| differs from deg(pi1)".into()));
    }
    Ok(Pi1Invariants { deg_pi1, sigma, rank })
}

/// Whether `(point, covector) ∈ A × Â` lies on `A_μ`: some `v ∈ ℚ^{2g}` has
/// `l·v ≡ point` and `E·v ≡ covector` modulo the lattices.
pub fn is_in_a_mu(slope: &Slope, point: &[Rat], covector: &[Rat]) -> Result<bool> {
    let n = slope.variety().lattice_rank();
    if point.len() != n || covector.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: point.len().max(covector.len()) });
    }
    let k = membership_equations(slope);
    let x: Vec<Rat> = point.iter().chain(covector).cloned().collect();
    Ok((0..k.cols()).all(|c| {
        let v: Rat = (0..2 * n).map(|i| Rat::from_integer(k[(i, c)].clone()) * &x[i]).sum();
        v.is_integer()
    }))
}

/// Columns `k` with `kᵀ·[[l·I],[E]] = 0`, spanning a saturated lattice: `x` lies
/// on `A_μ` iff every `kᵀ·x` is an integer.
pub fn membership_equations(slope: &Slope) -> IntMat {
    let n = slope.variety().lattice_rank();
    let emb = IntMat::scalar(n, slope.l.clone()).vstack(slope.form());
    integer_kernel(&emb.transpose())
}

impl SubvarietyEmbedding {
    pub fn contains(&self, point: &[Rat], covector: &[Rat]) -> Result<bool> {
        is_in_a_mu(&self.slope, point, covector)
    }

    /// Image of `A_μ[N]` inside `(A × Â)[N]`, as a subgroup of `A × Â`.
    pub fn torsion_image(&self, n: &Int) -> Result<FiniteSubgroup> {
        self.variety.torsion_subgroup(n)?.image_under(&self.embedding)
    }
}
