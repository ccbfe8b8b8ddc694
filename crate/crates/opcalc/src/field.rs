//! Exact scalars and linear algebra over the rationals and prime fields.
//!
//! A [`FieldSpec`] names the ground field; a [`Scalar`] is one element of it.
//! Rational entries are kept in lowest terms with positive denominator, prime
//! field entries as canonical representatives in `[0, p)`, so equal scalars
//! are structurally equal and print identically.
//!
//! [`Matrix`] is dense and row-major. Elimination over the rationals is
//! fraction-free (Bareiss cross-multiplication on rows scaled to integers),
//! with a final rational normalization pass; over a prime field it is plain
//! Gauss-Jordan. [`SparseMat`] holds column-major sparse matrices and is used
//! internally where differentials are large but almost empty; its results
//! agree with the dense routines entry for entry.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Errors from field construction and exact solving.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("field characteristic {0} is not prime")]
    NotPrime(u64),
    #[error("scalar belongs to a different field than the operation")]
    MixedFields,
    #[error("division by zero")]
    DivisionByZero,
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
}

/// The ground field: the rationals or a prime field of characteristic `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldSpec {
    Q,
    Fp(u64),
}

/// One element of a [`FieldSpec`]. The prime is carried by context, not by
/// the scalar, so a `Scalar` is only meaningful relative to its field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Q(BigRational),
    Fp(u64),
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Q(r) => write!(f, "{}", r),
            Scalar::Fp(v) => write!(f, "{}", v),
        }
    }
}

impl Scalar {
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(r) => r.is_zero(),
            Scalar::Fp(v) => *v == 0,
        }
    }
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64 (the listed bases cover all of u64).
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl FieldSpec {
    /// A prime field, validated.
    pub fn fp(p: u64) -> Result<FieldSpec, FieldError> {
        if is_prime(p) {
            Ok(FieldSpec::Fp(p))
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Q => 0,
            FieldSpec::Fp(p) => *p,
        }
    }

    pub fn zero(&self) -> Scalar {
        match self {
            FieldSpec::Q => Scalar::Q(BigRational::zero()),
            FieldSpec::Fp(_) => Scalar::Fp(0),
        }
    }

    pub fn one(&self) -> Scalar {
        match self {
            FieldSpec::Q => Scalar::Q(BigRational::one()),
            FieldSpec::Fp(_) => Scalar::Fp(1),
        }
    }

    /// The image of an integer in this field.
    pub fn int(&self, n: i64) -> Scalar {
        match self {
            FieldSpec::Q => Scalar::Q(BigRational::from_integer(BigInt::from(n))),
            FieldSpec::Fp(p) => Scalar::Fp((n.rem_euclid(*p as i64)) as u64),
        }
    }

    /// The image of `num/den` in this field. Errors if `den` maps to zero.
    pub fn from_ratio(&self, num: i64, den: i64) -> Result<Scalar, FieldError> {
        let d = self.int(den);
        if d.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(self.mul(&self.int(num), &self.inv(&d)?))
    }

    pub fn add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (FieldSpec::Q, Scalar::Q(x), Scalar::Q(y)) => Scalar::Q(x + y),
            (FieldSpec::Fp(p), Scalar::Fp(x), Scalar::Fp(y)) => {
                Scalar::Fp(((*x as u128 + *y as u128) % *p as u128) as u64)
            }
            _ => panic!("scalar/field mismatch in add"),
        }
    }

    pub fn sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        self.add(a, &self.neg(b))
    }

    pub fn neg(&self, a: &Scalar) -> Scalar {
        match (self, a) {
            (FieldSpec::Q, Scalar::Q(x)) => Scalar::Q(-x),
            (FieldSpec::Fp(p), Scalar::Fp(x)) => Scalar::Fp(if *x == 0 { 0 } else { p - x }),
            _ => panic!("scalar/field mismatch in neg"),
        }
    }

    pub fn mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (FieldSpec::Q, Scalar::Q(x), Scalar::Q(y)) => Scalar::Q(x * y),
            (FieldSpec::Fp(p), Scalar::Fp(x), Scalar::Fp(y)) => Scalar::Fp(mulmod(*x, *y, *p)),
            _ => panic!("scalar/field mismatch in mul"),
        }
    }

    pub fn inv(&self, a: &Scalar) -> Result<Scalar, FieldError> {
        if a.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        Ok(match (self, a) {
            (FieldSpec::Q, Scalar::Q(x)) => Scalar::Q(x.recip()),
            (FieldSpec::Fp(p), Scalar::Fp(x)) => Scalar::Fp(powmod(*x, p - 2, *p)),
            _ => panic!("scalar/field mismatch in inv"),
        })
    }

    pub fn div(&self, a: &Scalar, b: &Scalar) -> Result<Scalar, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// `(-1)^e`.
    pub fn sign(&self, e: i64) -> Scalar {
        if e.rem_euclid(2) == 0 {
            self.one()
        } else {
            self.int(-1)
        }
    }
}

/// A dense row-major matrix over a fixed field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    pub field: FieldSpec,
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Scalar>,
}

impl Matrix {
    pub fn zero(field: FieldSpec, rows: usize, cols: usize) -> Matrix {
        Matrix {
            field,
            rows,
            cols,
            entries: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Matrix {
        let mut m = Matrix::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_rows(field: FieldSpec, rows: Vec<Vec<Scalar>>) -> Matrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            field,
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Convenience constructor from small integers.
    pub fn from_int_rows(field: FieldSpec, rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            field,
            rows.iter()
                .map(|row| row.iter().map(|&n| field.int(n)).collect())
                .collect(),
        )
    }

    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Scalar::is_zero)
    }

    pub fn trace(&self) -> Scalar {
        assert_eq!(self.rows, self.cols);
        let mut t = self.field.zero();
        for i in 0..self.rows {
            t = self.field.add(&t, self.get(i, i));
        }
        t
    }

    pub fn col(&self, j: usize) -> Vec<Scalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zero(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    /// Matrix product; the inner loop skips zero entries, so products with
    /// mostly-empty factors stay cheap.
    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        assert_eq!(self.field, other.field, "field mismatch");
        let f = self.field;
        let mut out = Matrix::zero(f, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = f.add(out.get(i, j), &f.mul(a, b));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        assert_eq!(self.field, other.field);
        let f = self.field;
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, f.add(self.get(i, j), other.get(i, j)));
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Matrix {
        let f = self.field;
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = f.neg(e);
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> Matrix {
        let f = self.field;
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = f.mul(e, c);
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.field, other.field);
        let mut out = Matrix::zero(self.field, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
            for j in 0..other.cols {
                out.set(i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        assert_eq!(self.field, other.field);
        let mut rows = Vec::with_capacity(self.rows + other.rows);
        for i in 0..self.rows {
            rows.push((0..self.cols).map(|j| self.get(i, j).clone()).collect());
        }
        for i in 0..other.rows {
            rows.push((0..other.cols).map(|j| other.get(i, j).clone()).collect());
        }
        Matrix::from_rows(self.field, rows)
    }

    /// Kronecker product (no sign conventions; callers add Koszul signs).
    pub fn kron(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.field, other.field);
        let f = self.field;
        let mut out = Matrix::zero(f, self.rows * other.rows, self.cols * other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        let b = other.get(k, l);
                        if b.is_zero() {
                            continue;
                        }
                        out.set(i * other.rows + k, j * other.cols + l, f.mul(a, b));
                    }
                }
            }
        }
        out
    }

    /// The matrix with the selected columns of `self`, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zero(self.field, self.rows, idx.len());
        for (jj, &j) in idx.iter().enumerate() {
            for i in 0..self.rows {
                out.set(i, jj, self.get(i, j).clone());
            }
        }
        out
    }
}

/// What [`solve_linear`] should produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    /// Basis of the null space, as matrix columns.
    Kernel,
    /// Basis of the column space: the pivot columns of the input.
    Image,
    /// The rank.
    Rank,
    /// Standard basis vectors of the target spanning a complement of the
    /// column space (a basis of the cokernel).
    QuotientBasis,
}

/// Result of [`solve_linear`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solved {
    Rank(usize),
    Basis(Matrix),
}

impl Solved {
    pub fn rank(self) -> usize {
        match self {
            Solved::Rank(r) => r,
            Solved::Basis(b) => b.cols,
        }
    }

    pub fn basis(self) -> Matrix {
        match self {
            Solved::Basis(b) => b,
            Solved::Rank(_) => panic!("rank result has no basis"),
        }
    }
}

/// Reduced row echelon form together with the pivot column of each pivot row.
#[derive(Clone, Debug)]
pub struct Rref {
    pub mat: Matrix,
    pub pivots: Vec<usize>,
}

/// Reduced row echelon form. Over the rationals the forward pass is
/// fraction-free: rows are scaled to integer entries and eliminated by
/// Bareiss cross-multiplication with exact division by the previous pivot;
/// pivot normalization and back-substitution happen once at the end. Over a
/// prime field this is Gauss-Jordan.
pub fn rref(m: &Matrix) -> Rref {
    let f = m.field;
    let mut rows: Vec<Vec<Scalar>> = (0..m.rows)
        .map(|i| (0..m.cols).map(|j| m.get(i, j).clone()).collect())
        .collect();
    if f == FieldSpec::Q {
        for row in &mut rows {
            scale_row_to_int(row);
        }
    }
    let mut pivots: Vec<usize> = Vec::new();
    let mut prev_pivot = f.one();
    let mut r = 0;
    for c in 0..m.cols {
        // Deterministic pivot: first row at or below r with a nonzero entry.
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let pivot = rows[r][c].clone();
        for i in (r + 1)..rows.len() {
            if rows[i][c].is_zero() {
                if f == FieldSpec::Q {
                    // Bareiss keeps untouched rows consistent by the same
                    // exact division they would get with a zero multiplier.
                    for j in c..m.cols {
                        let v = f.mul(&pivot, &rows[i][j]);
                        rows[i][j] = exact_div(&f, &v, &prev_pivot);
                    }
                }
                continue;
            }
            let mult = rows[i][c].clone();
            for j in c..m.cols {
                let v = f.sub(&f.mul(&pivot, &rows[i][j]), &f.mul(&mult, &rows[r][j]));
                rows[i][j] = if f == FieldSpec::Q {
                    exact_div(&f, &v, &prev_pivot)
                } else {
                    f.div(&v, &prev_pivot).expect("pivot is nonzero")
                };
            }
        }
        prev_pivot = pivot;
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    // Normalize pivot rows to leading 1 and eliminate above the pivots.
    for (pr, &pc) in pivots.iter().enumerate().rev() {
        let lead = rows[pr][pc].clone();
        let inv = f.inv(&lead).expect("pivot is nonzero");
        for j in pc..m.cols {
            rows[pr][j] = f.mul(&rows[pr][j], &inv);
        }
        for i in 0..pr {
            if rows[i][pc].is_zero() {
                continue;
            }
            let mult = rows[i][pc].clone();
            for j in pc..m.cols {
                let v = f.sub(&rows[i][j], &f.mul(&mult, &rows[pr][j]));
                rows[i][j] = v;
            }
        }
    }
    Rref {
        mat: Matrix::from_rows(f, rows),
        pivots,
    }
}

fn scale_row_to_int(row: &mut [Scalar]) {
    let mut lcm = BigInt::one();
    for s in row.iter() {
        if let Scalar::Q(r) = s {
            if !r.is_zero() {
                lcm = lcm.lcm(r.denom());
            }
        }
    }
    if lcm.is_one() {
        return;
    }
    let c = BigRational::from_integer(lcm);
    for s in row.iter_mut() {
        if let Scalar::Q(r) = s {
            *s = Scalar::Q(&*r * &c);
        }
    }
}

fn exact_div(f: &FieldSpec, a: &Scalar, b: &Scalar) -> Scalar {
    f.div(a, b).expect("previous pivot is nonzero")
}

/// Kernel, image, rank, or cokernel basis of a dense matrix.
pub fn solve_linear(m: &Matrix, mode: SolveMode) -> Solved {
    match mode {
        SolveMode::Rank => Solved::Rank(rref(m).pivots.len()),
        SolveMode::Kernel => Solved::Basis(kernel_from_rref(&rref(m), m.field, m.cols)),
        SolveMode::Image => {
            let r = rref(m);
            Solved::Basis(m.select_cols(&r.pivots))
        }
        SolveMode::QuotientBasis => {
            let r = rref(&m.transpose());
            let pivot_rows: Vec<usize> = r.pivots;
            let idx: Vec<usize> = (0..m.rows).filter(|i| !pivot_rows.contains(i)).collect();
            Solved::Basis(Matrix::identity(m.field, m.rows).select_cols(&idx))
        }
    }
}

pub fn rank(m: &Matrix) -> usize {
    solve_linear(m, SolveMode::Rank).rank()
}

pub fn kernel(m: &Matrix) -> Matrix {
    solve_linear(m, SolveMode::Kernel).basis()
}

pub fn image(m: &Matrix) -> Matrix {
    solve_linear(m, SolveMode::Image).basis()
}

pub fn quotient_basis(m: &Matrix) -> Matrix {
    solve_linear(m, SolveMode::QuotientBasis).basis()
}

fn kernel_from_rref(r: &Rref, field: FieldSpec, cols: usize) -> Matrix {
    let free: Vec<usize> = (0..cols).filter(|c| !r.pivots.contains(c)).collect();
    let mut out = Matrix::zero(field, cols, free.len());
    for (k, &fc) in free.iter().enumerate() {
        out.set(fc, k, field.one());
        for (pr, &pc) in r.pivots.iter().enumerate() {
            out.set(pc, k, field.neg(r.mat.get(pr, fc)));
        }
    }
    out
}

/// Solve `m x = b` column by column (free variables set to zero). `None` if
/// any column of `b` is outside the column space.
pub fn preimage(m: &Matrix, b: &Matrix) -> Option<Matrix> {
    assert_eq!(m.rows, b.rows, "target dimension mismatch");
    let aug = m.hstack(b);
    let r = rref(&aug);
    if r.pivots.iter().any(|&c| c >= m.cols) {
        return None;
    }
    let mut out = Matrix::zero(m.field, m.cols, b.cols);
    for (pr, &pc) in r.pivots.iter().enumerate() {
        for j in 0..b.cols {
            out.set(pc, j, r.mat.get(pr, m.cols + j).clone());
        }
    }
    Some(out)
}

/// A column-major sparse matrix. Each column lists `(row, value)` pairs with
/// strictly increasing rows and nonzero values, so structural equality is
/// mathematical equality.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    pub field: FieldSpec,
    pub rows: usize,
    pub cols: usize,
    pub col_data: Vec<Vec<(u32, Scalar)>>,
}

impl SparseMat {
    pub fn zero(field: FieldSpec, rows: usize, cols: usize) -> SparseMat {
        SparseMat {
            field,
            rows,
            cols,
            col_data: vec![Vec::new(); cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> SparseMat {
        let mut s = SparseMat::zero(field, n, n);
        for j in 0..n {
            s.col_data[j].push((j as u32, field.one()));
        }
        s
    }

    pub fn from_dense(m: &Matrix) -> SparseMat {
        let mut s = SparseMat::zero(m.field, m.rows, m.cols);
        for j in 0..m.cols {
            for i in 0..m.rows {
                if !m.get(i, j).is_zero() {
                    s.col_data[j].push((i as u32, m.get(i, j).clone()));
                }
            }
        }
        s
    }

    /// Builds from per-column entry lists, normalizing each column: entries
    /// are sorted by row, duplicates summed, zeros dropped.
    pub fn from_cols(
        field: FieldSpec,
        rows: usize,
        cols: Vec<Vec<(u32, Scalar)>>,
    ) -> SparseMat {
        let n = cols.len();
        let mut col_data = Vec::with_capacity(n);
        for raw in cols {
            let mut acc: BTreeMap<u32, Scalar> = BTreeMap::new();
            for (i, v) in raw {
                debug_assert!((i as usize) < rows);
                match acc.entry(i) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(v);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() = field.add(e.get(), &v);
                    }
                }
            }
            col_data.push(
                acc.into_iter()
                    .filter(|(_, v)| !v.is_zero())
                    .collect::<Vec<_>>(),
            );
        }
        SparseMat {
            field,
            rows,
            cols: n,
            col_data,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zero(self.field, self.rows, self.cols);
        for (j, col) in self.col_data.iter().enumerate() {
            for (i, v) in col {
                m.set(*i as usize, j, v.clone());
            }
        }
        m
    }

    /// Entry count.
    pub fn nnz(&self) -> usize {
        self.col_data.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.col_data.iter().all(Vec::is_empty)
    }

    /// Sparse product `self * other`.
    pub fn mul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.field, other.field);
        let f = self.field;
        let mut out = SparseMat::zero(f, self.rows, other.cols);
        for (j, bcol) in other.col_data.iter().enumerate() {
            let mut acc: BTreeMap<u32, Scalar> = BTreeMap::new();
            for (k, bv) in bcol {
                for (i, av) in &self.col_data[*k as usize] {
                    let term = f.mul(av, bv);
                    match acc.entry(*i) {
                        std::collections::btree_map::Entry::Vacant(e) => {
                            e.insert(term);
                        }
                        std::collections::btree_map::Entry::Occupied(mut e) => {
                            let v = f.add(e.get(), &term);
                            if v.is_zero() {
                                e.remove();
                            } else {
                                *e.get_mut() = v;
                            }
                        }
                    }
                }
            }
            out.col_data[j] = acc.into_iter().collect();
        }
        out
    }

    pub fn add(&self, other: &SparseMat) -> SparseMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        assert_eq!(self.field, other.field);
        let f = self.field;
        let one = f.one();
        let mut out = self.clone();
        for j in 0..self.cols {
            add_scaled_into(&f, &mut out.col_data[j], &other.col_data[j], &one);
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> SparseMat {
        if c.is_zero() {
            return SparseMat::zero(self.field, self.rows, self.cols);
        }
        let mut out = self.clone();
        for col in &mut out.col_data {
            for (_, v) in col.iter_mut() {
                *v = self.field.mul(v, c);
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseMat {
        let mut cols: Vec<Vec<(u32, Scalar)>> = vec![Vec::new(); self.rows];
        for (j, col) in self.col_data.iter().enumerate() {
            for (i, v) in col {
                cols[*i as usize].push((j as u32, v.clone()));
            }
        }
        SparseMat {
            field: self.field,
            rows: self.cols,
            cols: self.rows,
            col_data: cols,
        }
    }

    pub fn trace(&self) -> Scalar {
        assert_eq!(self.rows, self.cols);
        let f = self.field;
        let mut t = f.zero();
        for (j, col) in self.col_data.iter().enumerate() {
            if let Ok(k) = col.binary_search_by_key(&(j as u32), |e| e.0) {
                t = f.add(&t, &col[k].1);
            }
        }
        t
    }

    /// Kronecker product, row and column index `a*dim_b + b`.
    pub fn kron(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.field, other.field);
        let f = self.field;
        let mut cols = Vec::with_capacity(self.cols * other.cols);
        for ca in 0..self.cols {
            for cb in 0..other.cols {
                let mut col = Vec::new();
                for (ra, va) in &self.col_data[ca] {
                    for (rb, vb) in &other.col_data[cb] {
                        col.push((ra * other.rows as u32 + rb, f.mul(va, vb)));
                    }
                }
                cols.push(col);
            }
        }
        SparseMat {
            field: f,
            rows: self.rows * other.rows,
            cols: self.cols * other.cols,
            col_data: cols,
        }
    }
}

/// Incremental sparse column reducer. Maintains a triangular basis of the
/// span of inserted columns, with one basis column per pivot row (the pivot
/// is the largest row in its column, normalized to 1), and reduces vectors
/// to their unique remainder supported on the non-pivot rows. The remainder
/// coordinates on those rows present the quotient by the span.
pub struct SparseReducer {
    field: FieldSpec,
    rows: usize,
    basis: std::collections::BTreeMap<u32, Vec<(u32, Scalar)>>,
}

impl SparseReducer {
    pub fn new(field: FieldSpec, rows: usize) -> SparseReducer {
        SparseReducer {
            field,
            rows,
            basis: std::collections::BTreeMap::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn pivot_rows(&self) -> Vec<usize> {
        self.basis.keys().map(|&r| r as usize).collect()
    }

    /// Non-pivot rows in ascending order: a coordinate section of the
    /// quotient by the span.
    pub fn section_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&r| !self.basis.contains_key(&(r as u32)))
            .collect()
    }

    /// Canonical remainder of `v` modulo the span of the inserted columns.
    pub fn reduce(&self, mut v: Vec<(u32, Scalar)>) -> Vec<(u32, Scalar)> {
        let f = self.field;
        loop {
            // Clear the highest remaining pivot row; basis columns have no
            // entries above their pivot, so this terminates.
            let hit = v
                .iter()
                .rev()
                .find(|(r, _)| self.basis.contains_key(r))
                .map(|(r, c)| (*r, c.clone()));
            let Some((row, coeff)) = hit else { return v };
            let neg = f.neg(&coeff);
            add_scaled_into(&f, &mut v, &self.basis[&row], &neg);
        }
    }

    /// Reduces `v` and, when the remainder is nonzero, normalizes and stores
    /// it. Returns true when `v` enlarged the span.
    pub fn insert(&mut self, v: Vec<(u32, Scalar)>) -> bool {
        let f = self.field;
        let rem = self.reduce(v);
        let Some((row, lead)) = rem.last().map(|(r, c)| (*r, c.clone())) else {
            return false;
        };
        let inv = f.inv(&lead).expect("pivot entry is nonzero");
        let col: Vec<(u32, Scalar)> =
            rem.into_iter().map(|(r, c)| (r, f.mul(&c, &inv))).collect();
        self.basis.insert(row, col);
        true
    }
}

fn add_scaled_into(
    f: &FieldSpec,
    target: &mut Vec<(u32, Scalar)>,
    source: &[(u32, Scalar)],
    coeff: &Scalar,
) {
    let mut out = Vec::with_capacity(target.len() + source.len());
    let mut a = target.iter().peekable();
    let mut b = source.iter().peekable();
    loop {
        match (a.peek(), b.peek()) {
            (Some((ra, _)), Some((rb, _))) if ra == rb => {
                let (ra, va) = a.next().unwrap();
                let (_, vb) = b.next().unwrap();
                let v = f.add(va, &f.mul(coeff, vb));
                if !v.is_zero() {
                    out.push((*ra, v));
                }
            }
            (Some((ra, _)), Some((rb, _))) if ra < rb => {
                let (ra, va) = a.next().unwrap();
                out.push((*ra, va.clone()));
            }
            (Some(_), Some(_)) | (None, Some(_)) => {
                let (rb, vb) = b.next().unwrap();
                out.push((*rb, f.mul(coeff, vb)));
            }
            (Some(_), None) => {
                let (ra, va) = a.next().unwrap();
                out.push((*ra, va.clone()));
            }
            (None, None) => break,
        }
    }
    *target = out;
}

/// Result of a sparse elimination pass.
pub struct SparseSolved {
    pub rank: usize,
    /// Kernel basis as dense columns, present only when requested.
    pub kernel: Option<Matrix>,
    /// Rows holding a pivot of the reduced column space, ascending. Their
    /// complement indexes a coordinate section of the cokernel.
    pub pivot_rows: Vec<usize>,
}

/// Rank, and optionally a kernel basis, of a sparse matrix by left-to-right
/// column reduction with memory. Deterministic: columns are processed in
/// order and each reduced column pivots on its smallest remaining row.
pub fn sparse_solve(m: &SparseMat, want_kernel: bool) -> SparseSolved {
    let f = m.field;
    // pivot_of_row[r] = index into `reduced` whose column pivots at row r.
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; m.rows];
    let mut reduced: Vec<Vec<(u32, Scalar)>> = Vec::new();
    let mut memos: Vec<Vec<(u32, Scalar)>> = Vec::new();
    let mut rank = 0usize;
    let mut kernel_cols: Vec<Vec<(u32, Scalar)>> = Vec::new();
    for j in 0..m.cols {
        let mut col = m.col_data[j].clone();
        // Memory of the combination in terms of original columns.
        let mut memo: Vec<(u32, Scalar)> = vec![(j as u32, f.one())];
        loop {
            let Some(&(r, ref v)) = col.first() else {
                break;
            };
            let Some(k) = pivot_of_row[r as usize] else {
                break;
            };
            let pv = &reduced[k].first().expect("pivot column is nonempty").1;
            let coeff = f.neg(&f.div(v, pv).expect("pivot is nonzero"));
            add_scaled_into(&f, &mut col, &reduced[k], &coeff);
            if want_kernel {
                add_scaled_into(&f, &mut memo, &memos[k], &coeff);
            }
        }
        if col.is_empty() {
            if want_kernel {
                kernel_cols.push(memo);
            }
        } else {
            let r = col[0].0 as usize;
            pivot_of_row[r] = Some(reduced.len());
            reduced.push(col);
            memos.push(memo);
            rank += 1;
        }
    }
    let kernel = want_kernel.then(|| {
        let mut km = Matrix::zero(f, m.cols, kernel_cols.len());
        for (k, col) in kernel_cols.iter().enumerate() {
            for (i, v) in col {
                km.set(*i as usize, k, v.clone());
            }
        }
        km
    });
    let pivot_rows = pivot_of_row
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_some())
        .map(|(r, _)| r)
        .collect();
    SparseSolved {
        rank,
        kernel,
        pivot_rows,
    }
}

pub fn sparse_rank(m: &SparseMat) -> usize {
    sparse_solve(m, false).rank
}

pub fn sparse_kernel(m: &SparseMat) -> Matrix {
    sparse_solve(m, true).kernel.expect("kernel requested")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Q
    }

    #[test]
    fn primality_validation() {
        assert!(FieldSpec::fp(2).is_ok());
        assert!(FieldSpec::fp(3).is_ok());
        assert!(FieldSpec::fp(1_000_003).is_ok());
        assert_eq!(FieldSpec::fp(1), Err(FieldError::NotPrime(1)));
        assert_eq!(FieldSpec::fp(6), Err(FieldError::NotPrime(6)));
        assert_eq!(FieldSpec::fp(561), Err(FieldError::NotPrime(561)));
    }

    #[test]
    fn scalar_canonical_forms() {
        let f = q();
        let half = f.from_ratio(2, 4).unwrap();
        assert_eq!(half.to_string(), "1/2");
        let f5 = FieldSpec::fp(5).unwrap();
        // 2/4 = 2 * 4^{-1} = 2 * 4 = 8 = 3 (mod 5)
        assert_eq!(f5.from_ratio(2, 4).unwrap(), Scalar::Fp(3));
        assert_eq!(f5.int(-1), Scalar::Fp(4));
        let f7 = FieldSpec::fp(7).unwrap();
        assert_eq!(f7.inv(&f7.int(3)).unwrap(), Scalar::Fp(5));
    }

    #[test]
    fn kernel_of_zero_matrix_is_identity() {
        let m = Matrix::zero(q(), 2, 2);
        let k = kernel(&m);
        assert_eq!(k, Matrix::identity(q(), 2));
    }

    #[test]
    fn identity_over_f2_has_full_rank() {
        let f2 = FieldSpec::fp(2).unwrap();
        let m = Matrix::identity(f2, 3);
        assert_eq!(rank(&m), 3);
        assert_eq!(kernel(&m).cols, 0);
    }

    #[test]
    fn rank_one_kernel_span() {
        let m = Matrix::from_int_rows(q(), &[&[1, 2], &[2, 4]]);
        assert_eq!(rank(&m), 1);
        let k = kernel(&m);
        assert_eq!(k.cols, 1);
        // Canonical solver output is (-2, 1), spanning the same line as (2, -1).
        assert_eq!(k.get(0, 0), &q().int(-2));
        assert_eq!(k.get(1, 0), &q().int(1));
        assert!(m.mul(&k).is_zero());
        // Proportional to (2, -1).
        let cross = q().sub(
            &q().mul(k.get(0, 0), &q().int(-1)),
            &q().mul(k.get(1, 0), &q().int(2)),
        );
        assert!(cross.is_zero());
    }

    #[test]
    fn image_picks_pivot_columns() {
        let m = Matrix::from_int_rows(q(), &[&[1, 2, 0], &[2, 4, 1]]);
        let im = image(&m);
        assert_eq!(im.cols, 2);
        assert_eq!(im.col(0), vec![q().int(1), q().int(2)]);
        assert_eq!(im.col(1), vec![q().int(0), q().int(1)]);
    }

    #[test]
    fn quotient_basis_complements_image() {
        let m = Matrix::from_int_rows(q(), &[&[1], &[2]]);
        let qb = quotient_basis(&m);
        assert_eq!(qb.cols, 1);
        assert_eq!(qb.col(0), vec![q().int(0), q().int(1)]);
        // Image plus quotient basis spans the target.
        let full = image(&m).hstack(&qb);
        assert_eq!(rank(&full), 2);
    }

    #[test]
    fn preimage_solves_consistent_systems() {
        let m = Matrix::from_int_rows(q(), &[&[1, 2], &[2, 4]]);
        let b = Matrix::from_int_rows(q(), &[&[3], &[6]]);
        let x = preimage(&m, &b).unwrap();
        assert_eq!(x.col(0), vec![q().int(3), q().int(0)]);
        let bad = Matrix::from_int_rows(q(), &[&[1], &[0]]);
        assert!(preimage(&m, &bad).is_none());
    }

    #[test]
    fn rref_with_rational_entries() {
        let mut m = Matrix::zero(q(), 2, 2);
        m.set(0, 0, q().from_ratio(1, 2).unwrap());
        m.set(0, 1, q().from_ratio(1, 3).unwrap());
        m.set(1, 0, q().from_ratio(1, 4).unwrap());
        m.set(1, 1, q().from_ratio(1, 5).unwrap());
        assert_eq!(rank(&m), 2);
        let r = rref(&m);
        assert_eq!(r.mat, Matrix::identity(q(), 2));
    }

    #[test]
    fn fp_elimination_differs_from_q_when_p_divides() {
        // [[1,1],[1,1]] + diag(2) = [[3,1],[1,3]]: invertible over Q,
        // singular over F2 (and determinant 8 = 2^3, so rank drops mod 2).
        let m2 = Matrix::from_int_rows(FieldSpec::fp(2).unwrap(), &[&[3, 1], &[1, 3]]);
        assert_eq!(rank(&m2), 1);
        let mq = Matrix::from_int_rows(q(), &[&[3, 1], &[1, 3]]);
        assert_eq!(rank(&mq), 2);
    }

    #[test]
    fn sparse_matches_dense() {
        let m = Matrix::from_int_rows(
            q(),
            &[
                &[1, 0, 0, 2],
                &[0, 0, 1, -1],
                &[1, 0, 1, 1],
                &[0, 0, 0, 0],
            ],
        );
        let s = SparseMat::from_dense(&m);
        assert_eq!(s.to_dense(), m);
        assert_eq!(sparse_rank(&s), rank(&m));
        let k = sparse_kernel(&s);
        assert_eq!(k.cols, kernel(&m).cols);
        assert!(m.mul(&k).is_zero());
        // Each kernel column is nonzero.
        for j in 0..k.cols {
            assert!(k.col(j).iter().any(|v| !v.is_zero()));
        }
    }

    #[test]
    fn sparse_mul_matches_dense_mul() {
        let a = Matrix::from_int_rows(q(), &[&[1, 2], &[0, 1], &[3, 0]]);
        let b = Matrix::from_int_rows(q(), &[&[1, -1, 0], &[2, 0, 1]]);
        let sa = SparseMat::from_dense(&a);
        let sb = SparseMat::from_dense(&b);
        assert_eq!(sa.mul(&sb).to_dense(), a.mul(&b));
    }

    #[test]
    fn kron_shape_and_values() {
        let a = Matrix::from_int_rows(q(), &[&[1, 2]]);
        let b = Matrix::from_int_rows(q(), &[&[3], &[4]]);
        let k = a.kron(&b);
        assert_eq!((k.rows, k.cols), (2, 2));
        assert_eq!(k.get(0, 0), &q().int(3));
        assert_eq!(k.get(1, 1), &q().int(8));
    }

    proptest::proptest! {
        #[test]
        fn rank_nullity_and_consistency(
            rows in 1usize..5, cols in 1usize..5,
            seed in proptest::collection::vec(-4i64..5, 25),
            fp in proptest::bool::ANY,
        ) {
            let field = if fp { FieldSpec::fp(5).unwrap() } else { FieldSpec::Q };
            let mut m = Matrix::zero(field, rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m.set(i, j, field.int(seed[i * cols + j]));
                }
            }
            let r = rank(&m);
            let k = kernel(&m);
            proptest::prop_assert_eq!(r + k.cols, cols);
            proptest::prop_assert!(m.mul(&k).is_zero());
            let im = image(&m);
            proptest::prop_assert_eq!(rank(&im), r);
            let qb = quotient_basis(&m);
            proptest::prop_assert_eq!(qb.cols, rows - r);
            if qb.cols > 0 {
                proptest::prop_assert_eq!(rank(&im.hstack(&qb)), rows);
            }
            let s = SparseMat::from_dense(&m);
            proptest::prop_assert_eq!(sparse_rank(&s), r);
            let sk = sparse_kernel(&s);
            proptest::prop_assert_eq!(sk.cols, k.cols);
            proptest::prop_assert!(m.mul(&sk).is_zero());

            let mut red = SparseReducer::new(field, rows);
            for j in 0..cols {
                red.insert(s.col_data[j].clone());
            }
            proptest::prop_assert_eq!(red.rank(), r);
            // Remainders of columns in the span vanish; remainders are
            // supported on the section rows only.
            for j in 0..cols {
                proptest::prop_assert!(red.reduce(s.col_data[j].clone()).is_empty());
            }
            let section = red.section_rows();
            for probe in 0..rows {
                let rem = red.reduce(vec![(probe as u32, field.one())]);
                for (row, _) in rem {
                    proptest::prop_assert!(section.contains(&(row as usize)));
                }
            }
        }
    }

    #[test]
    fn sparse_kron_matches_dense() {
        let f = FieldSpec::Q;
        let a = Matrix::from_int_rows(f, &[&[1, 2], &[0, -1]]);
        let b = Matrix::from_int_rows(f, &[&[3, 0, 1], &[1, 1, 0]]);
        let dense = a.kron(&b);
        let sparse = SparseMat::from_dense(&a).kron(&SparseMat::from_dense(&b));
        assert_eq!(sparse.to_dense(), dense);
    }
}
