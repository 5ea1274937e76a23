//! Hermite and Smith normal forms over the integers, with unimodular transforms.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::{Int, IntMat};

/// Column Hermite normal form `h = m·u`.
///
/// `h` is in lower column-echelon form: the first `rank` columns carry the
/// pivots (strictly increasing pivot rows, positive pivots) and every entry left
/// of a pivot lies in `[0, pivot)`. The remaining columns are zero, and the
/// matching columns of `u` form a basis of the integer kernel of `m`.
#[derive(Clone, Debug)]
pub struct Hnf {
    pub h: IntMat,
    pub u: IntMat,
    pub rank: usize,
    pub pivot_rows: Vec<usize>,
}

impl Hnf {
    /// The nonzero columns of `h`: the canonical basis of the column span.
    pub fn basis(&self) -> IntMat {
        self.h.select_columns(&(0..self.rank).collect::<Vec<_>>())
    }

    pub fn kernel(&self) -> IntMat {
        self.u.select_columns(&(self.rank..self.u.cols()).collect::<Vec<_>>())
    }
}

/// Extended gcd with `x·a + y·b = g ≥ 0`.
pub fn ext_gcd(a: &Int, b: &Int) -> (Int, Int, Int) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

// col_i <- x·col_i + y·col_j,  col_j <- z·col_i + w·col_j  (simultaneously)
fn combine_cols(m: &mut IntMat, i: usize, j: usize, x: &Int, y: &Int, z: &Int, w: &Int) {
    for r in 0..m.rows() {
        let a = m[(r, i)].clone();
        let b = m[(r, j)].clone();
        m[(r, i)] = x * &a + y * &b;
        m[(r, j)] = z * &a + w * &b;
    }
}

fn add_col_multiple(m: &mut IntMat, target: usize, source: usize, q: &Int) {
    for r in 0..m.rows() {
        let v = &m[(r, source)] * q;
        m[(r, target)] += v;
    }
}

fn add_row_multiple(m: &mut IntMat, target: usize, source: usize, q: &Int) {
    for c in 0..m.cols() {
        let v = &m[(source, c)] * q;
        m[(target, c)] += v;
    }
}

fn negate_col(m: &mut IntMat, c: usize) {
    for r in 0..m.rows() {
        m[(r, c)] = -m[(r, c)].clone();
    }
}

fn negate_row(m: &mut IntMat, r: usize) {
    for c in 0..m.cols() {
        m[(r, c)] = -m[(r, c)].clone();
    }
}

pub fn hnf(m: &IntMat) -> Hnf {
    let mut h = m.clone();
    let mut u = IntMat::identity(m.cols());
    let mut k = 0;
    let mut pivot_rows = Vec::new();
    for i in 0..h.rows() {
        if k == h.cols() {
            break;
        }
        for j in k + 1..h.cols() {
            if h[(i, j)].is_zero() {
                continue;
            }
            let a = h[(i, k)].clone();
            let b = h[(i, j)].clone();
            let (g, x, y) = ext_gcd(&a, &b);
            let z = -(&b / &g);
            let w = &a / &g;
            combine_cols(&mut h, k, j, &x, &y, &z, &w);
            combine_cols(&mut u, k, j, &x, &y, &z, &w);
        }
        if h[(i, k)].is_zero() {
            continue;
        }
        if h[(i, k)].is_negative() {
            negate_col(&mut h, k);
            negate_col(&mut u, k);
        }
        let p = h[(i, k)].clone();
        for j in 0..k {
            let q = -h[(i, j)].div_floor(&p);
            if !q.is_zero() {
                add_col_multiple(&mut h, j, k, &q);
                add_col_multiple(&mut u, j, k, &q);
            }
        }
        pivot_rows.push(i);
        k += 1;
    }
    Hnf { h, u, rank: k, pivot_rows }
}

/// Basis (as columns) of `{x ∈ ℤⁿ : m·x = 0}`; always a saturated lattice.
pub fn integer_kernel(m: &IntMat) -> IntMat {
    hnf(m).kernel()
}

/// Smith normal form `d = u·m·v`, with `d_{i,i} | d_{i+1,i+1}` and nonnegative diagonal.
#[derive(Clone, Debug)]
pub struct Snf {
    pub d: IntMat,
    pub u: IntMat,
    pub v: IntMat,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<Int> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d[(i, i)].clone()).collect()
    }
}

pub fn snf(m: &IntMat) -> Snf {
    let (r, c) = (m.rows(), m.cols());
    let mut d = m.clone();
    let mut u = IntMat::identity(r);
    let mut v = IntMat::identity(c);
    for t in 0..r.min(c) {
        loop {
            // pivot on the entry of least absolute value in the trailing block
            let mut best: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    if !d[(i, j)].is_zero()
                        && best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs())
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return Snf { d, u, v };
            };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let p = d[(t, t)].clone();
            let mut clean = true;
            for i in t + 1..r {
                let q = -(&d[(i, t)] / &p);
                if !q.is_zero() {
                    add_row_multiple(&mut d, i, t, &q);
                    add_row_multiple(&mut u, i, t, &q);
                }
                clean &= d[(i, t)].is_zero();
            }
            for j in t + 1..c {
                let q = -(&d[(t, j)] / &p);
                if !q.is_zero() {
                    add_col_multiple(&mut d, j, t, &q);
                    add_col_multiple(&mut v, j, t, &q);
                }
                clean &= d[(t, j)].is_zero();
            }
            if !clean {
                continue;
            }
            let offender = (t + 1..r)
                .find(|&i| (t + 1..c).any(|j| !d[(i, j)].is_multiple_of(&p)));
            match offender {
                Some(i) => {
                    add_row_multiple(&mut d, t, i, &Int::one());
                    add_row_multiple(&mut u, t, i, &Int::one());
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            negate_row(&mut d, t);
            negate_row(&mut u, t);
        }
    }
    Snf { d, u, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_core::matrix::{int, int_mat};
    use proptest::prelude::*;

    fn check_hnf(m: &IntMat) -> Hnf {
        let out = hnf(m);
        assert_eq!(&(m * &out.u), &out.h);
        assert!(out.u.is_unimodular());
        for (k, &row) in out.pivot_rows.iter().enumerate() {
            assert!(out.h[(row, k)] > int(0));
            for j in 0..k {
                assert!(out.h[(row, j)] >= int(0) && out.h[(row, j)] < out.h[(row, k)]);
            }
            for i in 0..row {
                assert!(out.h[(i, k)] == int(0));
            }
        }
        assert!((out.rank..out.h.cols()).all(|j| out.h.column(j).iter().all(Zero::is_zero)));
        out
    }

    #[test]
    fn hnf_small_cases() {
        let out = check_hnf(&int_mat(&[&[2, 1], &[0, 1]]));
        assert_eq!(out.h, int_mat(&[&[1, 0], &[1, 2]]));
        assert_eq!(check_hnf(&IntMat::identity(3)).h, IntMat::identity(3));
        let zero = check_hnf(&IntMat::zeros(2, 2));
        assert_eq!(zero.rank, 0);
        assert_eq!(zero.basis().cols(), 0);
    }

    #[test]
    fn hnf_is_canonical_for_the_span() {
        let a = int_mat(&[&[4, 6], &[2, 8]]);
        let b = &a * &int_mat(&[&[3, 1], &[5, 2]]);
        assert_eq!(hnf(&a).basis(), hnf(&b).basis());
    }

    #[test]
    fn kernel_of_rank_deficient() {
        let m = int_mat(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = integer_kernel(&m);
        assert_eq!(k.cols(), 2);
        assert!((&m * &k).is_zero());
    }

    fn check_snf(m: &IntMat) -> Vec<Int> {
        let s = snf(m);
        assert_eq!(&(&s.u * m) * &s.v, s.d);
        assert!(s.u.is_unimodular() && s.v.is_unimodular());
        for i in 0..s.d.rows() {
            for j in 0..s.d.cols() {
                if i != j {
                    assert!(s.d[(i, j)].is_zero());
                }
            }
        }
        let diag = s.diagonal();
        for w in diag.windows(2) {
            assert!(w[0] >= int(0));
            if w[0].is_zero() {
                assert!(w[1].is_zero());
            } else {
                assert!(w[1].is_multiple_of(&w[0]));
            }
        }
        diag
    }

    #[test]
    fn snf_examples() {
        assert_eq!(check_snf(&int_mat(&[&[0, 2], &[-2, 0]])), vec![int(2), int(2)]);
        assert_eq!(check_snf(&IntMat::identity(3)), vec![int(1); 3]);
        assert_eq!(check_snf(&int_mat(&[&[0, 1], &[-1, 0]])), vec![int(1), int(1)]);
        assert_eq!(check_snf(&int_mat(&[&[2, 0], &[0, 3]])), vec![int(1), int(6)]);
        assert_eq!(check_snf(&int_mat(&[&[6, 4], &[4, 2], &[0, 0]])), vec![int(2), int(2)]);
    }

    #[test]
    fn snf_of_divisor_chain_is_itself() {
        let chain = int_mat(&[&[2, 0, 0], &[0, 4, 0], &[0, 0, 12]]);
        assert_eq!(snf(&chain).d, chain);
    }

    proptest! {
        #[test]
        fn hnf_and_snf_invariants(entries in proptest::collection::vec(-6i64..=6, 12)) {
            let m = IntMat::from_fn(3, 4, |i, j| int(entries[i * 4 + j]));
            check_hnf(&m);
            let diag = check_snf(&m);
            let rank = m.to_rat().rank();
            prop_assert_eq!(diag.iter().filter(|d| !d.is_zero()).count(), rank);
        }
    }
}
