//! Lattices in ℚⁿ stored in canonical column Hermite normal form.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::group::FiniteGroupStructure;
use super::matrix::{rat_from_int, Int, IntMat, Rat, RatMat};
use super::normal_form::{hnf, integer_kernel, snf};
use crate::error::{Error, Result};

/// A finitely generated subgroup of ℚⁿ, `basis / denom` with `basis` in
/// column HNF and `denom` minimal. Two lattices are equal iff their
/// representations are equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Lattice {
    dim: usize,
    denom: Int,
    basis: IntMat,
}

impl Lattice {
    /// The lattice generated by the columns of `gens` (any rank).
    pub fn from_generators(gens: &RatMat) -> Self {
        let (d, scaled) = gens.clear_denominators();
        let h = hnf(&scaled).basis();
        let g = h.content().gcd(&d);
        Lattice { dim: gens.rows(), basis: h.map(|x| x / &g), denom: d / g }
    }

    pub fn from_int_generators(gens: &IntMat) -> Self {
        Self::from_generators(&gens.to_rat())
    }

    /// ℤⁿ
    pub fn standard(n: usize) -> Self {
        Lattice { dim: n, denom: Int::one(), basis: IntMat::identity(n) }
    }

    /// `(1/n)·ℤᵈ`
    pub fn torsion(dim: usize, n: &Int) -> Self {
        assert!(n.is_positive(), "torsion level must be positive");
        Lattice { dim, denom: n.clone(), basis: IntMat::identity(dim) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim
    }

    pub fn denominator(&self) -> &Int {
        &self.denom
    }

    /// Integer numerator of the basis; the actual basis is this divided by `denominator()`.
    pub fn numerator(&self) -> &IntMat {
        &self.basis
    }

    pub fn basis(&self) -> RatMat {
        let d = rat_from_int(&self.denom);
        self.basis.map(|x| rat_from_int(x) / &d)
    }

    /// Basis matrix when the lattice is integral.
    pub fn integer_basis(&self) -> Option<IntMat> {
        self.denom.is_one().then(|| self.basis.clone())
    }

    pub fn scaled(&self, q: &Rat) -> Self {
        Self::from_generators(&self.basis().map(|x| x * q))
    }

    fn require_full_rank(&self) -> Result<()> {
        if self.is_full_rank() {
            Ok(())
        } else {
            Err(Error::NotFullRank { rank: self.rank(), dim: self.dim })
        }
    }

    fn require_same_dim(&self, other: &Lattice) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { left: self.dim, right: other.dim })
        }
    }

    /// `|det|` of the basis; the covolume of a full-rank lattice.
    pub fn covolume(&self) -> Result<Rat> {
        self.require_full_rank()?;
        Ok(self.basis().det().abs())
    }

    pub fn sum(&self, other: &Lattice) -> Result<Lattice> {
        self.require_same_dim(other)?;
        Ok(Self::from_generators(&self.basis().hstack(&other.basis())))
    }

    pub fn contains_lattice(&self, other: &Lattice) -> Result<bool> {
        Ok(self.sum(other)? == *self)
    }

    pub fn contains_vector(&self, v: &[Rat]) -> Result<bool> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: v.len() });
        }
        let col = RatMat::column_vector(v.to_vec());
        Ok(Self::from_generators(&self.basis().hstack(&col)) == *self)
    }

    /// Dual with respect to the standard pairing: `{w : wᵀv ∈ ℤ for all v}`.
    pub fn dual(&self) -> Result<Lattice> {
        self.require_full_rank()?;
        let inv = self.basis().inverse().expect("full-rank basis is invertible");
        Ok(Self::from_generators(&inv.transpose()))
    }

    pub fn intersect(&self, other: &Lattice) -> Result<Lattice> {
        self.require_same_dim(other)?;
        self.require_full_rank()?;
        other.require_full_rank()?;
        self.dual()?.sum(&other.dual()?)?.dual()
    }

    /// `{v ∈ within : m·v ∈ target}` for a rational `k×n` matrix `m`.
    pub fn preimage(m: &RatMat, target: &Lattice, within: &Lattice) -> Result<Lattice> {
        target.require_full_rank()?;
        within.require_full_rank()?;
        if m.rows() != target.dim || m.cols() != within.dim {
            return Err(Error::DimensionMismatch { left: m.cols(), right: within.dim });
        }
        let w = within.basis();
        let t_inv = target.basis().inverse().expect("full-rank basis is invertible");
        let r = &(&t_inv * m) * &w;
        let (d, ri) = r.clear_denominators();
        let k = r.rows();
        let n = r.cols();
        let system = ri.hstack(&IntMat::scalar(k, d));
        let ker = integer_kernel(&system);
        let xs = ker.submatrix(0..n, 0..ker.cols());
        Ok(Self::from_generators(&(&w * &xs.to_rat())))
    }

    /// `{v : e(v, w) ∈ ℤ for every w ∈ lam}` for an alternating integral form.
    pub fn dual_lattice_of_form(e: &IntMat, lam: &Lattice) -> Result<Lattice> {
        if !e.is_alternating() {
            return Err(Error::NotAlternating);
        }
        lam.require_full_rank()?;
        if e.rows() != lam.dim {
            return Err(Error::DimensionMismatch { left: e.rows(), right: lam.dim });
        }
        if e.det().is_zero() {
            return Err(Error::DegenerateForm);
        }
        // vᵀ·e·W ∈ ℤ^{1×n}  ⇔  (Wᵀ·eᵀ)·v ∈ ℤⁿ
        let x = &lam.basis().transpose() * &e.transpose().to_rat();
        Ok(Self::from_generators(&x.inverse().expect("nondegenerate form")))
    }

    /// Smallest lattice containing `self` and `(ℚ·self) ∩ ambient`.
    pub fn saturate(&self, ambient: &Lattice) -> Result<Lattice> {
        self.require_same_dim(ambient)?;
        ambient.require_full_rank()?;
        if self.rank() == 0 {
            return Ok(self.clone());
        }
        let a = ambient.basis();
        let coords = &a.inverse().expect("full-rank basis is invertible") * &self.basis();
        let (_, ci) = coords.clear_denominators();
        // left annihilator of the span, then its annihilator back
        let left = integer_kernel(&ci.transpose());
        let sat = if left.cols() == 0 {
            IntMat::identity(self.dim)
        } else {
            integer_kernel(&left.transpose())
        };
        let lifted = Self::from_generators(&(&a * &sat.to_rat()));
        lifted.sum(self)
    }

    /// Elementary divisors of `sup / sub`.
    pub fn quotient_structure(sub: &Lattice, sup: &Lattice) -> Result<FiniteGroupStructure> {
        sub.require_same_dim(sup)?;
        sub.require_full_rank()?;
        sup.require_full_rank()?;
        let coords = &sup.basis().inverse().expect("full-rank basis is invertible") * &sub.basis();
        let x = coords.to_int().ok_or(Error::NotContained)?;
        let divisors: Vec<Int> = snf(&x).diagonal().into_iter().filter(|d| !d.is_one()).collect();
        Ok(FiniteGroupStructure::from_divisors(divisors))
    }

    /// `[sup : sub]` computed from covolumes.
    pub fn index_in(&self, sup: &Lattice) -> Result<Int> {
        let q = self.covolume()? / sup.covolume()?;
        if q.is_integer() && sup.contains_lattice(self)? {
            Ok(q.to_integer())
        } else {
            Err(Error::NotContained)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::matrix::{int, int_mat, rat};

    fn lat(cols: &[&[(i64, i64)]]) -> Lattice {
        // columns given as lists of fractions
        let n = cols[0].len();
        Lattice::from_generators(&RatMat::from_fn(n, cols.len(), |i, j| rat(cols[j][i].0, cols[j][i].1)))
    }

    /// Brute force membership / counting helpers over a grid of small fractions.
    fn grid(den: i64, range: i64) -> Vec<Vec<Rat>> {
        let mut out = Vec::new();
        for a in -range * den..=range * den {
            for b in -range * den..=range * den {
                out.push(vec![rat(a, den), rat(b, den)]);
            }
        }
        out
    }

    #[test]
    fn canonical_equality() {
        let a = lat(&[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]]);
        let b = lat(&[&[(2, 1), (1, 1)], &[(1, 1), (1, 1)]]);
        assert_eq!(a, b);
        assert_eq!(a, Lattice::standard(2));
        let half = Lattice::torsion(2, &int(2));
        assert_eq!(half, lat(&[&[(1, 2), (0, 1)], &[(0, 1), (1, 2)], &[(1, 1), (1, 1)]]));
    }

    #[test]
    fn intersect_examples() {
        let z2 = Lattice::standard(2);
        let half = Lattice::torsion(2, &int(2));
        assert_eq!(z2.intersect(&z2).unwrap(), z2);
        assert_eq!(half.intersect(&z2).unwrap(), z2);
        let third = lat(&[&[(1, 3), (0, 1)], &[(0, 1), (1, 1)]]);
        let meet = half.intersect(&third).unwrap();
        // brute force over denominators dividing 6
        for v in grid(6, 1) {
            let both = half.contains_vector(&v).unwrap() && third.contains_vector(&v).unwrap();
            assert_eq!(meet.contains_vector(&v).unwrap(), both, "{v:?}");
        }
        assert_eq!(meet, z2);
    }

    #[test]
    fn dual_lattice_of_forms() {
        let z2 = Lattice::standard(2);
        let e1 = int_mat(&[&[0, 1], &[-1, 0]]);
        assert_eq!(Lattice::dual_lattice_of_form(&e1, &z2).unwrap(), z2);
        let e2 = int_mat(&[&[0, 2], &[-2, 0]]);
        let d = Lattice::dual_lattice_of_form(&e2, &z2).unwrap();
        for v in grid(2, 1) {
            let pairs_integral = (0..2).all(|k| {
                let w: Vec<Rat> = (0..2).map(|i| if i == k { rat(1, 1) } else { rat(0, 1) }).collect();
                let val = &(&v[0] * &w[1] - &v[1] * &w[0]) * rat(2, 1);
                val.is_integer()
            });
            assert_eq!(d.contains_vector(&v).unwrap(), pairs_integral);
        }
        assert_eq!(d, Lattice::torsion(2, &int(2)));
        assert!(matches!(
            Lattice::dual_lattice_of_form(&IntMat::zeros(2, 2), &z2),
            Err(Error::DegenerateForm)
        ));
        assert!(matches!(
            Lattice::dual_lattice_of_form(&int_mat(&[&[0, 1], &[1, 0]]), &z2),
            Err(Error::NotAlternating)
        ));
    }

    #[test]
    fn quotient_structures() {
        let z2 = Lattice::standard(2);
        let q = Lattice::quotient_structure(&z2, &Lattice::torsion(2, &int(2))).unwrap();
        assert_eq!(q.divisors(), &[int(2), int(2)]);
        assert_eq!(q.order(), int(4));
        let t = Lattice::quotient_structure(&z2, &z2).unwrap();
        assert!(t.is_trivial());
        let third = lat(&[&[(1, 3), (0, 1)], &[(0, 1), (1, 1)]]);
        let q3 = Lattice::quotient_structure(&z2, &third).unwrap();
        assert_eq!(q3.divisors(), &[int(3)]);
        assert!(matches!(Lattice::quotient_structure(&third, &z2), Err(Error::NotContained)));
    }

    #[test]
    fn saturate_examples() {
        let z2 = Lattice::standard(2);
        let s = lat(&[&[(2, 1), (0, 1)]]).saturate(&z2).unwrap();
        assert_eq!(s, lat(&[&[(1, 1), (0, 1)]]));
        let diag = lat(&[&[(1, 1), (1, 1)]]);
        assert_eq!(diag.saturate(&z2).unwrap(), diag);
        // full rank: the saturation is all of ℤ²
        let full = lat(&[&[(2, 1), (2, 1)], &[(0, 1), (4, 1)]]);
        assert_eq!(full.saturate(&z2).unwrap(), z2);
        assert_eq!(full.index_in(&z2).unwrap(), int(8));
    }

    #[test]
    fn preimage_matches_direct_membership() {
        let z2 = Lattice::standard(2);
        // {v ∈ (1/4)ℤ² : [[0,2],[-2,0]]·v ∈ ℤ²} = (1/2)ℤ²
        let e = int_mat(&[&[0, 2], &[-2, 0]]).to_rat();
        let p = Lattice::preimage(&e, &z2, &Lattice::torsion(2, &int(4))).unwrap();
        assert_eq!(p, Lattice::torsion(2, &int(2)));
        // degenerate map still gives a lattice inside `within`
        let zero = RatMat::zeros(2, 2);
        let w = Lattice::torsion(2, &int(3));
        assert_eq!(Lattice::preimage(&zero, &z2, &w).unwrap(), w);
    }
}
