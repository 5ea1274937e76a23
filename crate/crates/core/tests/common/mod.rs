//! Brute-force oracles on small `i64` matrices, independent of the library's
//! normal forms and lattice code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use fmpartners::lattice_core::{IntMat, RatMat};
use num_traits::ToPrimitive;

pub type M = Vec<Vec<i64>>;

pub fn small(m: &IntMat) -> M {
    m.to_rows().iter().map(|r| r.iter().map(|x| x.to_i64().expect("small entries")).collect()).collect()
}

/// An integral rational matrix as `i64`.
pub fn small_rat(m: &RatMat) -> M {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(|x| {
            assert!(x.is_integer(), "expected an integral matrix");
            x.to_integer().to_i64().unwrap()
        }).collect())
        .collect()
}

pub fn mul(a: &M, b: &M) -> M {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect()).collect()
}

pub fn transpose(a: &M) -> M {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Cofactor expansion.
pub fn det(a: &M) -> i64 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    if n == 1 {
        return a[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: M = a[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| *x).collect()).collect();
            let sign = if j % 2 == 0 { 1 } else { -1 };
            sign * a[0][j] * det(&minor)
        })
        .sum()
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Invariant factors from the gcds of `k × k` minors: `d_k = Δ_k / Δ_{k-1}`.
pub fn invariant_factors(a: &M) -> Vec<i64> {
    let n = a.len();
    let m = a[0].len();
    let mut deltas = vec![1i64];
    for k in 1..=n.min(m) {
        let mut g = 0;
        for rows in subsets(n, k) {
            for cols in subsets(m, k) {
                let minor: M = rows.iter().map(|&i| cols.iter().map(|&j| a[i][j]).collect()).collect();
                g = gcd(g, det(&minor));
            }
        }
        if g == 0 {
            break;
        }
        deltas.push(g);
    }
    deltas.windows(2).map(|w| w[1] / w[0]).collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Non-unit invariant factors of a nondegenerate form: the elementary divisors of `K(E)`.
pub fn kernel_divisors(e: &M) -> Vec<i64> {
    invariant_factors(e).into_iter().map(i64::abs).filter(|d| *d != 1).collect()
}

pub fn for_each(len: usize, modulus: i64, mut f: impl FnMut(&[i64])) {
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

pub fn apply_mod(m: &M, v: &[i64], modulus: i64) -> Vec<i64> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum::<i64>().rem_euclid(modulus)).collect()
}

/// `|{v ∈ (1/k)ℤⁿ/ℤⁿ : E·v ∈ ℤⁿ}|`.
pub fn count_killed(e: &M, k: i64) -> usize {
    let mut c = 0;
    for_each(e[0].len(), k, |v| {
        if apply_mod(e, v, k).iter().all(|x| *x == 0) {
            c += 1;
        }
    });
    c
}

/// `{E·v mod l : v ∈ [0,l)ⁿ}`: the image of the `l`-torsion under `φ_E`, with numerators over `l`.
pub fn image_of_torsion(e: &M, l: i64) -> BTreeSet<Vec<i64>> {
    let mut out = BTreeSet::new();
    for_each(e[0].len(), l, |v| {
        out.insert(apply_mod(e, v, l));
    });
    out
}

/// `M·J_s = J_t·M` for integral structures of equal scale.
pub fn commutes(m: &M, j_source: &M, j_target: &M) -> bool {
    mul(m, j_source) == mul(j_target, m)
}

pub fn is_unimodular(m: &M) -> bool {
    det(m).abs() == 1
}

pub fn block(a: &M, b: &M, c: &M, d: &M) -> M {
    let mut out: M = a.iter().zip(b).map(|(x, y)| [x.clone(), y.clone()].concat()).collect();
    out.extend(c.iter().zip(d).map(|(x, y)| [x.clone(), y.clone()].concat()));
    out
}
