//! Graded vector spaces with ordered labeled bases, and chain complexes over
//! them.
//!
//! Degrees are homological: the differential of degree `n` lands in degree
//! `n-1`, and `d * d = 0` is checked whenever a complex is constructed.
//! Homology is only reported strictly inside the requested [`Window`]; at the
//! window edge the kernel or boundary group may be cut off by the truncation,
//! so edge degrees are considered unreliable and excluded.
//!
//! Sign conventions, fixed once for the whole crate:
//! * tensor products follow the Koszul rule
//!   `d(x (x) y) = dx (x) y + (-1)^{|x|} x (x) dy`;
//! * the dual complex has `(C^v)_n = (C_{-n})^*` with differential
//!   `(-1)^{n(n-1)/2}` times the transpose of `d_{1-n}`; the triangular sign
//!   is the one that makes dualization a strict involution on matrices.

use crate::field::{self, FieldSpec, Matrix, SparseMat};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Homological degree.
pub type Degree = i32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GradedError {
    #[error("differential at degree {0} has shape {1}x{2}, expected {3}x{4}")]
    DiffShape(Degree, usize, usize, usize, usize),
    #[error("d*d != 0 at degree {0}")]
    NotSquareZero(Degree),
    #[error("window is empty or inverted: arity {max_arity}, degrees [{min_deg}, {max_deg}]")]
    BadWindow {
        max_arity: usize,
        min_deg: Degree,
        max_deg: Degree,
    },
}

/// The finite region everything is computed in: arities `1..=max_arity` and
/// degrees `min_deg..=max_deg`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub max_arity: usize,
    pub min_deg: Degree,
    pub max_deg: Degree,
}

impl Window {
    pub fn new(max_arity: usize, min_deg: Degree, max_deg: Degree) -> Result<Window, GradedError> {
        if max_arity < 1 || min_deg > max_deg {
            return Err(GradedError::BadWindow {
                max_arity,
                min_deg,
                max_deg,
            });
        }
        Ok(Window {
            max_arity,
            min_deg,
            max_deg,
        })
    }

    pub fn contains_deg(&self, d: Degree) -> bool {
        self.min_deg <= d && d <= self.max_deg
    }

    /// Degrees strictly inside the window, where homology is reliable.
    pub fn interior(&self) -> impl Iterator<Item = Degree> {
        (self.min_deg + 1)..self.max_deg
    }
}

/// A graded vector space: an ordered, labeled basis in each degree.
/// Degrees without an entry are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSpace {
    pub field: FieldSpec,
    degrees: BTreeMap<Degree, Vec<String>>,
}

impl GradedSpace {
    pub fn new(field: FieldSpec) -> GradedSpace {
        GradedSpace {
            field,
            degrees: BTreeMap::new(),
        }
    }

    pub fn single(field: FieldSpec, deg: Degree, labels: Vec<String>) -> GradedSpace {
        let mut s = GradedSpace::new(field);
        s.set_basis(deg, labels);
        s
    }

    /// Install the basis of one degree. Empty label lists are dropped so that
    /// zero spaces have a unique representation.
    pub fn set_basis(&mut self, deg: Degree, labels: Vec<String>) {
        if labels.is_empty() {
            self.degrees.remove(&deg);
        } else {
            self.degrees.insert(deg, labels);
        }
    }

    pub fn dim(&self, deg: Degree) -> usize {
        self.degrees.get(&deg).map_or(0, Vec::len)
    }

    pub fn labels(&self, deg: Degree) -> &[String] {
        self.degrees.get(&deg).map_or(&[], Vec::as_slice)
    }

    /// Degrees with nonzero dimension, ascending.
    pub fn support(&self) -> Vec<Degree> {
        self.degrees.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Degree, &Vec<String>)> {
        self.degrees.iter().map(|(d, l)| (*d, l))
    }

    pub fn total_dim(&self) -> usize {
        self.degrees.values().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.degrees.is_empty()
    }

    /// Dimensions per degree, for reports.
    pub fn dims(&self) -> BTreeMap<Degree, usize> {
        self.degrees.iter().map(|(d, l)| (*d, l.len())).collect()
    }
}

/// A chain complex: a graded space plus differentials `d_n : C_n -> C_{n-1}`.
/// Construction validates shapes and `d * d = 0`; absent differentials are
/// zero maps. Differentials are stored sparsely; large complexes should be
/// built through [`ChainComplex::new_sparse`] and consumed via
/// [`ChainComplex::d_sparse`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChainComplex {
    pub space: GradedSpace,
    diff: BTreeMap<Degree, SparseMat>,
}

impl ChainComplex {
    pub fn new(
        space: GradedSpace,
        diff: BTreeMap<Degree, Matrix>,
    ) -> Result<ChainComplex, GradedError> {
        let sparse = diff
            .into_iter()
            .map(|(n, m)| (n, SparseMat::from_dense(&m)))
            .collect();
        ChainComplex::new_sparse(space, sparse)
    }

    pub fn new_sparse(
        space: GradedSpace,
        mut diff: BTreeMap<Degree, SparseMat>,
    ) -> Result<ChainComplex, GradedError> {
        // Drop zero maps so equal complexes compare equal.
        diff.retain(|_, m| !m.is_zero());
        for (&n, m) in &diff {
            let (er, ec) = (space.dim(n - 1), space.dim(n));
            if (m.rows, m.cols) != (er, ec) {
                return Err(GradedError::DiffShape(n, m.rows, m.cols, er, ec));
            }
        }
        let c = ChainComplex { space, diff };
        for &n in c.diff.keys() {
            if c.space.dim(n - 2) > 0 && !c.d_sparse(n - 1).mul(&c.d_sparse(n)).is_zero() {
                return Err(GradedError::NotSquareZero(n));
            }
        }
        Ok(c)
    }

    /// The complex with zero differential.
    pub fn with_zero_diff(space: GradedSpace) -> ChainComplex {
        ChainComplex {
            space,
            diff: BTreeMap::new(),
        }
    }

    /// The differential leaving degree `n`, densified (zero map if absent).
    /// Intended for small complexes; use [`ChainComplex::d_sparse`] when the
    /// component might be large.
    pub fn d(&self, n: Degree) -> Matrix {
        match self.diff.get(&n) {
            Some(m) => m.to_dense(),
            None => Matrix::zero(self.space.field, self.space.dim(n - 1), self.space.dim(n)),
        }
    }

    /// The differential leaving degree `n` in sparse form.
    pub fn d_sparse(&self, n: Degree) -> SparseMat {
        self.diff.get(&n).cloned().unwrap_or_else(|| {
            SparseMat::zero(self.space.field, self.space.dim(n - 1), self.space.dim(n))
        })
    }

    pub fn has_nonzero_d(&self, n: Degree) -> bool {
        self.diff.contains_key(&n)
    }

    pub fn field(&self) -> FieldSpec {
        self.space.field
    }
}

/// Homology of `c` at the degrees strictly inside `w`. Basis labels are
/// synthesized as `h{degree}#{index}`.
pub fn homology(c: &ChainComplex, w: &Window) -> GradedSpace {
    let mut out = GradedSpace::new(c.space.field);
    for n in w.interior() {
        let h = homology_dim(c, n);
        out.set_basis(n, (0..h).map(|i| format!("h{}#{}", n, i)).collect());
    }
    out
}

/// dim H_n = dim ker d_n - rank d_{n+1}.
pub fn homology_dim(c: &ChainComplex, n: Degree) -> usize {
    let dim_n = c.space.dim(n);
    if dim_n == 0 {
        return 0;
    }
    let rank_out = field::sparse_rank(&c.d_sparse(n));
    let rank_in = field::sparse_rank(&c.d_sparse(n + 1));
    dim_n - rank_out - rank_in
}

/// Homology of one degree with explicit cycle representatives: columns of
/// `reps` are cycles whose classes form a basis, `boundaries` is a basis of
/// the image of the incoming differential.
#[derive(Clone, Debug)]
pub struct HomologyAt {
    pub reps: Matrix,
    pub boundaries: Matrix,
}

impl HomologyAt {
    pub fn dim(&self) -> usize {
        self.reps.cols
    }

    /// Coordinates of the given cycles in the homology basis. `None` if some
    /// column is not a cycle in the span of boundaries and representatives.
    pub fn express(&self, vectors: &Matrix) -> Option<Matrix> {
        let aug = self.boundaries.hstack(&self.reps);
        let sol = field::preimage(&aug, vectors)?;
        let mut out = Matrix::zero(sol.field, self.reps.cols, vectors.cols);
        for i in 0..self.reps.cols {
            for j in 0..vectors.cols {
                out.set(i, j, sol.get(self.boundaries.cols + i, j).clone());
            }
        }
        Some(out)
    }
}

/// Cycle representatives for `H_n`: kernel columns of `d_n` completing a
/// basis of `im d_{n+1}`, chosen by pivot analysis, so the construction is
/// canonical in the input bases.
pub fn homology_at(c: &ChainComplex, n: Degree) -> HomologyAt {
    let z = field::kernel(&c.d(n));
    let b = field::image(&c.d(n + 1));
    let aug = b.hstack(&z);
    let r = field::rref(&aug);
    let sel: Vec<usize> = r
        .pivots
        .iter()
        .filter(|&&p| p >= b.cols)
        .map(|&p| p - b.cols)
        .collect();
    HomologyAt {
        reps: z.select_cols(&sel),
        boundaries: b,
    }
}

/// Degree shift: `(C[m])_n = C_{n-m}`, differential multiplied by `(-1)^m`.
pub fn shift(c: &ChainComplex, m: Degree) -> ChainComplex {
    let mut space = GradedSpace::new(c.space.field);
    for (d, labels) in c.space.iter() {
        space.set_basis(d + m, labels.clone());
    }
    let sign = c.space.field.sign(m as i64);
    let mut diff = BTreeMap::new();
    for (d, _) in c.space.iter() {
        if c.has_nonzero_d(d) {
            diff.insert(d + m, c.d_sparse(d).scale(&sign));
        }
    }
    ChainComplex::new_sparse(space, diff).expect("shift preserves d*d = 0")
}

/// Ordered basis of a tensor-product degree: for each degree `i` of `a`
/// (ascending), all pairs `(p, q)` with `p` in `a`'s degree-`i` basis (outer)
/// and `q` in `b`'s degree-`(n-i)` basis (inner).
fn tensor_basis_at(
    a: &GradedSpace,
    b: &GradedSpace,
    n: Degree,
) -> Vec<(Degree, usize, Degree, usize)> {
    let mut out = Vec::new();
    for i in a.support() {
        let j = n - i;
        for p in 0..a.dim(i) {
            for q in 0..b.dim(j) {
                out.push((i, p, j, q));
            }
        }
    }
    out
}

/// Tensor product of complexes inside the window, with Koszul signs.
pub fn tensor(a: &ChainComplex, b: &ChainComplex, w: &Window) -> ChainComplex {
    let f = a.space.field;
    assert_eq!(f, b.space.field, "field mismatch in tensor");
    let mut space = GradedSpace::new(f);
    let mut index: BTreeMap<Degree, BTreeMap<(Degree, usize, Degree, usize), usize>> =
        BTreeMap::new();
    for n in w.min_deg..=w.max_deg {
        let basis = tensor_basis_at(&a.space, &b.space, n);
        let labels = basis
            .iter()
            .map(|&(i, p, j, q)| format!("{}(x){}", a.space.labels(i)[p], b.space.labels(j)[q]))
            .collect();
        index.insert(n, basis.iter().copied().enumerate().map(|(k, t)| (t, k)).collect());
        space.set_basis(n, labels);
    }
    let mut diff = BTreeMap::new();
    for n in (w.min_deg + 1)..=w.max_deg {
        let src = tensor_basis_at(&a.space, &b.space, n);
        let tgt = &index[&(n - 1)];
        let mut m = Matrix::zero(f, tgt.len(), src.len());
        for (col, &(i, p, j, q)) in src.iter().enumerate() {
            // d_a (x) id
            let da = a.d(i);
            for r in 0..da.rows {
                let v = da.get(r, p);
                if v.is_zero() {
                    continue;
                }
                if let Some(&row) = tgt.get(&(i - 1, r, j, q)) {
                    m.set(row, col, f.add(m.get(row, col), v));
                }
            }
            // (-1)^i id (x) d_b
            let db = b.d(j);
            let sgn = f.sign(i as i64);
            for r in 0..db.rows {
                let v = db.get(r, q);
                if v.is_zero() {
                    continue;
                }
                if let Some(&row) = tgt.get(&(i, p, j - 1, r)) {
                    let term = f.mul(&sgn, v);
                    m.set(row, col, f.add(m.get(row, col), &term));
                }
            }
        }
        diff.insert(n, m);
    }
    ChainComplex::new(space, diff).expect("Koszul tensor differential squares to zero")
}

fn dual_label(l: &str) -> String {
    match l.strip_suffix('*') {
        Some(base) => base.to_string(),
        None => format!("{}*", l),
    }
}

/// Linear dual: `(C^v)_n = (C_{-n})^*`. The differential on degree `n` is the
/// transpose of `d_{1-n}` times `(-1)^{n(n-1)/2}`; with this sign
/// `dualize(dualize(C)) == C` exactly, labels included (a trailing `*` is
/// toggled).
pub fn dualize(c: &ChainComplex, w: &Window) -> ChainComplex {
    let f = c.space.field;
    let mut space = GradedSpace::new(f);
    for (d, labels) in c.space.iter() {
        let n = -d;
        if w.contains_deg(n) {
            space.set_basis(n, labels.iter().map(|l| dual_label(l)).collect());
        }
    }
    let mut diff = BTreeMap::new();
    for n in (w.min_deg + 1)..=w.max_deg {
        if space.dim(n) == 0 || space.dim(n - 1) == 0 {
            continue;
        }
        if !c.has_nonzero_d(1 - n) {
            continue;
        }
        let e = (n as i64) * (n as i64 - 1) / 2;
        diff.insert(n, c.d_sparse(1 - n).transpose().scale(&f.sign(e)));
    }
    ChainComplex::new_sparse(space, diff).expect("dual differential squares to zero")
}

/// Dimension table `(degree, dim)` of homology in the window interior,
/// ascending by degree, zero entries skipped.
pub fn homology_dims(c: &ChainComplex, w: &Window) -> Vec<(Degree, usize)> {
    homology(c, w)
        .dims()
        .into_iter()
        .filter(|&(_, d)| d > 0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> FieldSpec {
        FieldSpec::Q
    }

    fn lbl(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn two_step(d: i64) -> ChainComplex {
        // C_1 = K --d--> C_0 = K
        let mut s = GradedSpace::new(q());
        s.set_basis(0, lbl(&["a0"]));
        s.set_basis(1, lbl(&["a1"]));
        let mut diff = BTreeMap::new();
        diff.insert(1, Matrix::from_int_rows(q(), &[&[d]]));
        ChainComplex::new(s, diff).unwrap()
    }

    #[test]
    fn d_squared_is_checked() {
        let mut s = GradedSpace::new(q());
        s.set_basis(0, lbl(&["a"]));
        s.set_basis(1, lbl(&["b"]));
        s.set_basis(2, lbl(&["c"]));
        let mut diff = BTreeMap::new();
        diff.insert(1, Matrix::from_int_rows(q(), &[&[1]]));
        diff.insert(2, Matrix::from_int_rows(q(), &[&[1]]));
        assert_eq!(
            ChainComplex::new(s, diff).unwrap_err(),
            GradedError::NotSquareZero(2)
        );
    }

    #[test]
    fn homology_of_two_step_complexes() {
        let w = Window::new(5, -1, 2).unwrap();
        // d = 1: acyclic.
        let c = two_step(1);
        assert_eq!(homology(&c, &w).dims(), BTreeMap::new());
        // d = 0: homology is the whole space.
        let c0 = ChainComplex::with_zero_diff(c.space.clone());
        let h = homology(&c0, &w);
        assert_eq!(h.dim(0), 1);
        assert_eq!(h.dim(1), 1);
        // d = 2 over Q is still acyclic; over F2 it is not.
        assert_eq!(homology_dims(&two_step(2), &w), vec![]);
        let f2 = FieldSpec::fp(2).unwrap();
        let mut s = GradedSpace::new(f2);
        s.set_basis(0, lbl(&["a0"]));
        s.set_basis(1, lbl(&["a1"]));
        let mut diff = BTreeMap::new();
        diff.insert(1, Matrix::from_int_rows(f2, &[&[2]]));
        let cf2 = ChainComplex::new(s, diff).unwrap();
        assert_eq!(homology_dims(&cf2, &w), vec![(0, 1), (1, 1)]);
    }

    #[test]
    fn window_edges_are_excluded() {
        let c = two_step(0);
        let tight = Window::new(5, 0, 1).unwrap();
        assert!(homology(&c, &tight).is_zero());
        let wide = Window::new(5, -1, 2).unwrap();
        assert_eq!(homology(&c, &wide).total_dim(), 2);
    }

    #[test]
    fn shift_moves_degrees_and_signs() {
        let c = two_step(1);
        let s = shift(&c, 3);
        assert_eq!(s.space.dim(3), 1);
        assert_eq!(s.space.dim(4), 1);
        // Odd shift negates the differential.
        assert_eq!(s.d(4).get(0, 0), &q().int(-1));
        let back = shift(&s, -3);
        assert_eq!(back, c);
    }

    #[test]
    fn tensor_satisfies_kunneth_over_q() {
        let w = Window::new(5, -1, 4).unwrap();
        // Zero differential: dims multiply like polynomials.
        let c = ChainComplex::with_zero_diff(two_step(1).space.clone());
        let t = tensor(&c, &c, &w);
        assert_eq!(t.space.dim(0), 1);
        assert_eq!(t.space.dim(1), 2);
        assert_eq!(t.space.dim(2), 1);
        let h = homology(&t, &w);
        assert_eq!(h.dim(1), 2);
        // Acyclic (x) anything is acyclic.
        let a = two_step(2);
        let t2 = tensor(&a, &a, &w);
        assert_eq!(homology_dims(&t2, &w), vec![]);
        // Mixed: acyclic (x) zero-differential.
        let t3 = tensor(&a, &c, &w);
        assert_eq!(homology_dims(&t3, &w), vec![]);
    }

    #[test]
    fn tensor_koszul_sign_is_applied() {
        let w = Window::new(5, -1, 4).unwrap();
        let a = two_step(1);
        let t = tensor(&a, &a, &w);
        // Basis of degree 1: a1(x)a0, a0(x)a1. d(a1 (x) a1) = a0(x)a1... with
        // Koszul sign: d(a1(x)a1) = (da1)(x)a1 - a1(x)(da1).
        let d2 = t.d(2);
        let labels1 = t.space.labels(1);
        let i_a1a0 = labels1.iter().position(|l| l == "a1(x)a0").unwrap();
        let i_a0a1 = labels1.iter().position(|l| l == "a0(x)a1").unwrap();
        assert_eq!(d2.get(i_a0a1, 0), &q().int(1));
        assert_eq!(d2.get(i_a1a0, 0), &q().int(-1));
    }

    #[test]
    fn dualize_is_an_involution() {
        let w = Window::new(5, -4, 4).unwrap();
        let c = two_step(3);
        let d = dualize(&c, &w);
        assert_eq!(d.space.dim(-1), 1);
        assert_eq!(d.space.dim(0), 1);
        assert_eq!(dualize(&d, &w), c);
        // Homology dims mirror.
        let dd = dualize(&two_step(0), &w);
        assert_eq!(homology_dims(&dd, &w), vec![(-1, 1), (0, 1)]);
    }

    #[test]
    fn homology_representatives_express_cycles() {
        // C_1 = K^2 --(1,1)--> C_0 = K; H_1 = ker = span(e0 - e1).
        let mut s = GradedSpace::new(q());
        s.set_basis(0, lbl(&["x"]));
        s.set_basis(1, lbl(&["y0", "y1"]));
        let mut diff = BTreeMap::new();
        diff.insert(1, Matrix::from_int_rows(q(), &[&[1, 1]]));
        let c = ChainComplex::new(s, diff).unwrap();
        let h1 = homology_at(&c, 1);
        assert_eq!(h1.dim(), 1);
        // (2, -2) is twice the representative.
        let v = Matrix::from_int_rows(q(), &[&[2], &[-2]]);
        let coords = h1.express(&v).unwrap();
        assert_eq!(coords.rows, 1);
        // A non-cycle cannot be expressed.
        let bad = Matrix::from_int_rows(q(), &[&[1], &[0]]);
        assert!(h1.express(&bad).is_none());
    }
}
