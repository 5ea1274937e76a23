//! Dense exact matrices over arbitrary-precision integers and rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Int = BigInt;
pub type Rat = BigRational;

/// Row-major dense matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type IntMat = Matrix<Int>;
pub type RatMat = Matrix<Rat>;

impl<T: Clone + Zero + One> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn scalar(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = s.clone();
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn column_vector(v: Vec<T>) -> Self {
        Matrix { rows: v.len(), cols: 1, data: v }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows.start + i, cols.start + j)].clone())
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])].clone())
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "vstack column mismatch");
        Self::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)].clone()
            } else {
                other[(i - self.rows, j)].clone()
            }
        })
    }

    pub fn block_diag(&self, other: &Self) -> Self {
        let mut m = Self::zeros(self.rows + other.rows, self.cols + other.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, self.cols, other);
        m
    }

    /// `[[a, b], [c, d]]`
    pub fn from_blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        a.hstack(b).vstack(&c.hstack(d))
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Self) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)].clone();
            }
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Clone + Zero + One + Mul<Output = T>> Matrix<T> {
    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }
}

impl<'a, T> Mul for &'a Matrix<T>
where
    T: Clone + Zero + One + Mul<Output = T> + Add<Output = T>,
{
    type Output = Matrix<T>;
    fn mul(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a.clone() * rhs[(k, j)].clone();
                    let cell = &mut out[(i, j)];
                    *cell = std::mem::replace(cell, T::zero()) + prod;
                }
            }
        }
        out
    }
}

impl<'a, T> Add for &'a Matrix<T>
where
    T: Clone + Add<Output = T>,
{
    type Output = Matrix<T>;
    fn add(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }
}

impl<'a, T> Sub for &'a Matrix<T>
where
    T: Clone + Sub<Output = T>,
{
    type Output = Matrix<T>;
    fn sub(self, rhs: &'a Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference shape mismatch");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }
}

impl<'a, T> Neg for &'a Matrix<T>
where
    T: Clone + Neg<Output = T>,
{
    type Output = Matrix<T>;
    fn neg(self) -> Matrix<T> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a.clone()).collect() }
    }
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.data[i * self.cols + j])?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl<T: fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(Int::from(p), Int::from(q))
}

pub fn rat_from_int(v: &Int) -> Rat {
    Rat::from_integer(v.clone())
}

/// Square root of a nonnegative rational when it is itself rational.
pub fn rat_sqrt(q: &Rat) -> Option<Rat> {
    if q.is_negative() {
        return None;
    }
    let (n, d) = (q.numer().sqrt(), q.denom().sqrt());
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Rat::new(n, d))
}

/// Builds an integer matrix from small literals.
pub fn int_mat(rows: &[&[i64]]) -> IntMat {
    IntMat::from_rows(rows.iter().map(|r| r.iter().map(|&x| Int::from(x)).collect()).collect())
}

impl IntMat {
    pub fn to_rat(&self) -> RatMat {
        self.map(rat_from_int)
    }

    /// Gcd of all entries; zero for the zero matrix.
    pub fn content(&self) -> Int {
        self.entries().fold(Int::zero(), |g, x| g.gcd(x))
    }

    pub fn is_alternating(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                self[(i, i)].is_zero() && (0..i).all(|j| self[(i, j)] == -self[(j, i)].clone())
            })
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn det(&self) -> Int {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut a = self.clone();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return Int::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = v / &prev;
                }
            }
            prev = a[(k, k)].clone();
        }
        sign * a[(n - 1, n - 1)].clone()
    }

    pub fn is_unimodular(&self) -> bool {
        self.is_square() && self.det().abs().is_one()
    }

    /// Pfaffian by expansion along the first row; `Pf² = det` for alternating input.
    pub fn pfaffian(&self) -> Int {
        assert!(self.is_alternating(), "pfaffian of a non-alternating matrix");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        if n % 2 == 1 {
            return Int::zero();
        }
        let mut total = Int::zero();
        for j in 1..n {
            if self[(0, j)].is_zero() {
                continue;
            }
            let keep: Vec<usize> = (1..n).filter(|&k| k != j).collect();
            let minor = IntMat::from_fn(n - 2, n - 2, |a, b| self[(keep[a], keep[b])].clone());
            let term = &self[(0, j)] * minor.pfaffian();
            if j % 2 == 1 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    pub fn max_abs(&self) -> Int {
        self.entries().map(Signed::abs).max().unwrap_or_else(Int::zero)
    }
}

impl RatMat {
    pub fn is_integral(&self) -> bool {
        self.entries().all(|x| x.is_integer())
    }

    pub fn to_int(&self) -> Option<IntMat> {
        self.is_integral().then(|| self.map(|x| x.to_integer()))
    }

    /// Least common multiple of the entry denominators.
    pub fn denominator_lcm(&self) -> Int {
        self.entries().fold(Int::one(), |l, x| l.lcm(x.denom()))
    }

    /// Returns `(d, d·self)` with `d` the least common denominator.
    pub fn clear_denominators(&self) -> (Int, IntMat) {
        let d = self.denominator_lcm();
        let scaled = self.map(|x| (x * rat_from_int(&d)).to_integer());
        (d, scaled)
    }

    fn row_echelon(&self) -> (RatMat, Vec<usize>, bool) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut odd = false;
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| !a[(i, c)].is_zero()) else {
                continue;
            };
            if p != r {
                a.swap_rows(p, r);
                odd = !odd;
            }
            let inv = a[(r, c)].recip();
            for j in c..a.cols {
                a[(r, j)] = &a[(r, j)] * &inv;
            }
            for i in 0..a.rows {
                if i != r && !a[(i, c)].is_zero() {
                    let f = a[(i, c)].clone();
                    for j in c..a.cols {
                        let v = &a[(r, j)] * &f;
                        a[(i, j)] = &a[(i, j)] - &v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots, odd)
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().1.len()
    }

    pub fn det(&self) -> Rat {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rat::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !a[(i, c)].is_zero()) else {
                return Rat::zero();
            };
            if p != c {
                a.swap_rows(p, c);
                det = -det;
            }
            det = &det * &a[(c, c)];
            let inv = a[(c, c)].recip();
            for i in c + 1..n {
                if !a[(i, c)].is_zero() {
                    let f = &a[(i, c)] * &inv;
                    for j in c..n {
                        let v = &a[(c, j)] * &f;
                        a[(i, j)] = &a[(i, j)] - &v;
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<RatMat> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let aug = self.hstack(&RatMat::identity(n));
        let (red, pivots, _) = aug.row_echelon();
        if pivots.len() < n || pivots[n - 1] >= n {
            return None;
        }
        Some(red.submatrix(0..n, n..2 * n))
    }

    /// Some solution of `self·x = b`, if one exists.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(b.len(), self.rows, "right-hand side length mismatch");
        let aug = self.hstack(&RatMat::column_vector(b.to_vec()));
        let (red, pivots, _) = aug.row_echelon();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = red[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Sylvester's criterion on leading principal minors.
    pub fn is_positive_definite(&self) -> bool {
        self.is_square()
            && *self == self.transpose()
            && (1..=self.rows).all(|k| self.submatrix(0..k, 0..k).det().is_positive())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bareiss_matches_rational_det() {
        let m = int_mat(&[&[2, -1, 0, 3], &[1, 4, 2, 0], &[0, 5, -3, 1], &[7, 0, 1, 1]]);
        assert_eq!(rat_from_int(&m.det()), m.to_rat().det());
        assert_eq!(int_mat(&[&[0, 1], &[1, 0]]).det(), int(-1));
        assert_eq!(int_mat(&[&[1, 2], &[2, 4]]).det(), int(0));
    }

    #[test]
    fn inverse_round_trip() {
        let m = int_mat(&[&[2, 1], &[7, 4]]).to_rat();
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, RatMat::identity(2));
        assert!(int_mat(&[&[1, 2], &[2, 4]]).to_rat().inverse().is_none());
    }

    #[test]
    fn alternating_and_content() {
        let e = int_mat(&[&[0, 2], &[-2, 0]]);
        assert!(e.is_alternating());
        assert_eq!(e.content(), int(2));
        assert!(!int_mat(&[&[0, 1], &[1, 0]]).is_alternating());
    }

    #[test]
    fn pfaffian_squares_to_det() {
        let e = int_mat(&[&[0, 1, 2, -1], &[-1, 0, 3, 4], &[-2, -3, 0, 5], &[1, -4, -5, 0]]);
        let pf = e.pfaffian();
        assert_eq!(&pf * &pf, e.det());
        assert_eq!(int_mat(&[&[0, 3], &[-3, 0]]).pfaffian(), int(3));
    }

    #[test]
    fn solve_and_sqrt() {
        let a = int_mat(&[&[1, 0], &[0, 2], &[1, 1]]).to_rat();
        assert_eq!(a.solve(&[rat(1, 1), rat(4, 1), rat(3, 1)]), Some(vec![rat(1, 1), rat(2, 1)]));
        assert_eq!(a.solve(&[rat(1, 1), rat(4, 1), rat(0, 1)]), None);
        assert_eq!(rat_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(rat_sqrt(&rat(3, 1)), None);
    }

    #[test]
    fn positive_definite() {
        assert!(int_mat(&[&[2, -1], &[-1, 2]]).to_rat().is_positive_definite());
        assert!(!int_mat(&[&[-1, 0], &[0, -1]]).to_rat().is_positive_definite());
        assert!(!int_mat(&[&[1, 2], &[2, 1]]).to_rat().is_positive_definite());
    }
}
