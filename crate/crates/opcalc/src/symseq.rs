//! Symmetric sequences of chain complexes.
//!
//! A [`SymSeqObject`] assigns to each arity `n` a chain complex together with
//! an action of the symmetric group on `n` points, recorded on the adjacent
//! transpositions and validated against the Coxeter relations and the
//! differential. On top of that sit the composition product, truncations,
//! operadic shifts, direct sums, free-algebra tables, and the
//! coinvariants/invariants/norm machinery.
//!
//! Conventions, frozen for determinism:
//! * points of arity `n` are `0..n`; `transpositions[i]` acts as the swap of
//!   points `i` and `i+1`; an absent degree entry means the identity;
//! * permutations use one-line notation, `perm[i]` being the image of `i`;
//! * composition-product bases are indexed by set partitions whose blocks are
//!   listed ascending and ordered by their minima, decorated with left-factor
//!   and per-block right-factor basis elements.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{self, FieldSpec, Matrix, Scalar, SparseMat};
use crate::graded::{ChainComplex, Degree, GradedError, GradedSpace, Window};

#[derive(Debug, Error, PartialEq)]
pub enum SymSeqError {
    #[error("operands live over different fields")]
    FieldMismatch,
    #[error("operands carry different windows")]
    WindowMismatch,
    #[error("arity {0} exceeds the window's maximum arity")]
    ArityOutsideWindow(usize),
    #[error("degree {0} lies outside the window")]
    DegreeOutsideWindow(Degree),
    #[error("the right operand of compose must vanish in arity 0")]
    NonReducedRight,
    #[error("invalid symmetric action at arity {arity}: {reason}")]
    BadAction { arity: usize, reason: String },
    #[error("not a permutation: {0:?}")]
    BadPermutation(Vec<usize>),
    #[error("truncation arity must be at least 1")]
    BadTruncation,
    #[error("word length {0} exceeds the window's maximum arity")]
    WordLengthOutsideWindow(usize),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

/// Degree-indexed action matrices of one adjacent transposition.
pub type ActionMaps = BTreeMap<Degree, SparseMat>;

/// Number of inversions of a permutation, mod 2.
pub fn perm_parity(perm: &[usize]) -> u32 {
    let mut inv = 0u32;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inv ^= 1;
            }
        }
    }
    inv
}

fn check_permutation(perm: &[usize], n: usize) -> Result<(), SymSeqError> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(SymSeqError::BadPermutation(perm.to_vec()));
    }
    for &v in perm {
        if v >= n || seen[v] {
            return Err(SymSeqError::BadPermutation(perm.to_vec()));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Writes `perm` as a product of adjacent transpositions: the returned word
/// `w_1 .. w_k` satisfies `perm = s_{w_k} ∘ .. ∘ s_{w_1}`, so a left action is
/// evaluated by left-multiplying the generator matrices in recording order.
fn adjacent_word(perm: &[usize]) -> Vec<usize> {
    let mut p = perm.to_vec();
    let mut word = Vec::new();
    loop {
        let mut swapped = false;
        for i in 0..p.len().saturating_sub(1) {
            if p[i] > p[i + 1] {
                p.swap(i, i + 1);
                word.push(i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    word
}

/// All set partitions of `0..n`, blocks ascending and ordered by minima,
/// sorted by block count and then by restricted-growth order.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(n: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rgs.len() == n {
            out.push(rgs.clone());
            return;
        }
        let maxv = rgs.iter().copied().max().map_or(0, |m| m + 1);
        for v in 0..=maxv {
            rgs.push(v);
            rec(n, rgs, out);
            rgs.pop();
        }
    }
    let mut all: Vec<Vec<usize>> = Vec::new();
    rec(n, &mut Vec::new(), &mut all);
    let mut parts: Vec<Vec<Vec<usize>>> = all
        .iter()
        .map(|rgs| {
            let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
            let mut blocks = vec![Vec::new(); k];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b].push(i);
            }
            blocks
        })
        .collect();
    parts.sort_by_key(|p| p.len());
    parts
}

/// One arity component: a chain complex with a symmetric-group action.
///
/// The action is stored on adjacent transpositions; a missing degree entry is
/// the identity, and identity entries are normalized away so that structural
/// equality is equality of actions. Construction validates the Coxeter
/// relations (involutivity, braid, far commutation) and compatibility with
/// the differential.
#[derive(Clone, Debug, PartialEq)]
pub struct SymRep {
    pub arity: usize,
    pub complex: ChainComplex,
    transpositions: Vec<ActionMaps>,
}

impl SymRep {
    pub fn new(
        arity: usize,
        complex: ChainComplex,
        mut transpositions: Vec<ActionMaps>,
    ) -> Result<SymRep, SymSeqError> {
        let bad = |reason: String| SymSeqError::BadAction { arity, reason };
        if transpositions.len() != arity.saturating_sub(1) {
            return Err(bad(format!(
                "expected {} transposition maps, got {}",
                arity.saturating_sub(1),
                transpositions.len()
            )));
        }
        let field = complex.field();
        for (i, maps) in transpositions.iter_mut().enumerate() {
            let mut drop: Vec<Degree> = Vec::new();
            for (&deg, m) in maps.iter() {
                let dim = complex.space.dim(deg);
                if m.field != field {
                    return Err(bad(format!("transposition {i} has a foreign field")));
                }
                if (m.rows, m.cols) != (dim, dim) {
                    return Err(bad(format!(
                        "transposition {i} at degree {deg} is {}x{}, expected {dim}x{dim}",
                        m.rows, m.cols
                    )));
                }
                if dim == 0 || *m == SparseMat::identity(field, dim) {
                    drop.push(deg);
                }
            }
            for deg in drop {
                maps.remove(&deg);
            }
        }
        let rep = SymRep {
            arity,
            complex,
            transpositions,
        };
        rep.validate().map(|()| rep)
    }

    /// The component with the trivial action.
    pub fn trivial(arity: usize, complex: ChainComplex) -> SymRep {
        let transpositions = vec![ActionMaps::new(); arity.saturating_sub(1)];
        SymRep {
            arity,
            complex,
            transpositions,
        }
    }

    fn validate(&self) -> Result<(), SymSeqError> {
        let bad = |reason: String| SymSeqError::BadAction {
            arity: self.arity,
            reason,
        };
        let field = self.field();
        let gens = self.transpositions.len();
        for deg in self.complex.space.support() {
            let dim = self.complex.space.dim(deg);
            let id = SparseMat::identity(field, dim);
            let stored = |i: usize| self.transpositions[i].contains_key(&deg);
            for i in 0..gens {
                if !stored(i) {
                    continue;
                }
                let t = self.transposition(i, deg);
                if t.mul(&t) != id {
                    return Err(bad(format!(
                        "transposition {i} is not an involution at degree {deg}"
                    )));
                }
            }
            for i in 0..gens.saturating_sub(1) {
                if !stored(i) && !stored(i + 1) {
                    continue;
                }
                let a = self.transposition(i, deg);
                let b = self.transposition(i + 1, deg);
                if a.mul(&b).mul(&a) != b.mul(&a).mul(&b) {
                    return Err(bad(format!(
                        "braid relation fails for ({i},{}) at degree {deg}",
                        i + 1
                    )));
                }
            }
            for i in 0..gens {
                for j in i + 2..gens {
                    if !stored(i) && !stored(j) {
                        continue;
                    }
                    let a = self.transposition(i, deg);
                    let b = self.transposition(j, deg);
                    if a.mul(&b) != b.mul(&a) {
                        return Err(bad(format!(
                            "distant transpositions ({i},{j}) do not commute at degree {deg}"
                        )));
                    }
                }
            }
        }
        for deg in self.complex.space.support() {
            if !self.complex.has_nonzero_d(deg) {
                continue;
            }
            let d = self.complex.d_sparse(deg);
            for i in 0..gens {
                let here = self.transposition(i, deg);
                let below = self.transposition(i, deg - 1);
                if d.mul(&here) != below.mul(&d) {
                    return Err(bad(format!(
                        "transposition {i} does not commute with d at degree {deg}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn field(&self) -> FieldSpec {
        self.complex.field()
    }

    /// Action matrix of the swap of points `i` and `i+1` in the given degree.
    pub fn transposition(&self, i: usize, deg: Degree) -> SparseMat {
        let dim = self.complex.space.dim(deg);
        self.transpositions[i]
            .get(&deg)
            .cloned()
            .unwrap_or_else(|| SparseMat::identity(self.field(), dim))
    }

    /// The stored (non-identity) transposition maps, indexed by generator.
    pub fn transposition_maps(&self) -> &[ActionMaps] {
        &self.transpositions
    }

    /// Action of an arbitrary permutation, one matrix per supported degree.
    pub fn perm_action(&self, perm: &[usize]) -> Result<ActionMaps, SymSeqError> {
        check_permutation(perm, self.arity.max(1))?;
        let word = adjacent_word(perm);
        let mut out = ActionMaps::new();
        for deg in self.complex.space.support() {
            let dim = self.complex.space.dim(deg);
            let mut m = SparseMat::identity(self.field(), dim);
            for &i in &word {
                m = self.transposition(i, deg).mul(&m);
            }
            out.insert(deg, m);
        }
        Ok(out)
    }

    /// Trace of the permutation action in each supported degree.
    pub fn character(&self, perm: &[usize]) -> Result<BTreeMap<Degree, Scalar>, SymSeqError> {
        Ok(self
            .perm_action(perm)?
            .into_iter()
            .map(|(deg, m)| (deg, m.trace()))
            .collect())
    }

    pub fn total_dim(&self) -> usize {
        self.complex.space.total_dim()
    }
}

/// An arity-indexed family of [`SymRep`]s over a common field and window.
/// Zero components are not stored, so structural equality is equality of the
/// nonzero data.
#[derive(Clone, Debug, PartialEq)]
pub struct SymSeqObject {
    pub field: FieldSpec,
    pub window: Window,
    arities: BTreeMap<usize, SymRep>,
}

impl SymSeqObject {
    pub fn new(field: FieldSpec, window: Window) -> SymSeqObject {
        SymSeqObject {
            field,
            window,
            arities: BTreeMap::new(),
        }
    }

    /// Inserts one arity component, dropping it when zero.
    pub fn set_arity(&mut self, rep: SymRep) -> Result<(), SymSeqError> {
        if rep.field() != self.field {
            return Err(SymSeqError::FieldMismatch);
        }
        if rep.arity > self.window.max_arity {
            return Err(SymSeqError::ArityOutsideWindow(rep.arity));
        }
        for deg in rep.complex.space.support() {
            if !self.window.contains_deg(deg) {
                return Err(SymSeqError::DegreeOutsideWindow(deg));
            }
        }
        if rep.total_dim() == 0 {
            self.arities.remove(&rep.arity);
        } else {
            self.arities.insert(rep.arity, rep);
        }
        Ok(())
    }

    pub fn arity(&self, n: usize) -> Option<&SymRep> {
        self.arities.get(&n)
    }

    pub fn arity_iter(&self) -> impl Iterator<Item = (usize, &SymRep)> {
        self.arities.iter().map(|(&n, r)| (n, r))
    }

    /// `(arity, degree, dim)` rows for every nonzero component.
    pub fn dims(&self) -> Vec<(usize, Degree, usize)> {
        let mut out = Vec::new();
        for (&n, rep) in &self.arities {
            for deg in rep.complex.space.support() {
                out.push((n, deg, rep.complex.space.dim(deg)));
            }
        }
        out
    }

    /// True when the arity-0 component vanishes.
    pub fn is_reduced(&self) -> bool {
        !self.arities.contains_key(&0)
    }

    /// The monoidal unit: one basis element in arity 1, degree 0.
    pub fn triv(field: FieldSpec, window: Window) -> Result<SymSeqObject, SymSeqError> {
        let space = GradedSpace::single(field, 0, vec!["1".to_string()]);
        let mut out = SymSeqObject::new(field, window);
        out.set_arity(SymRep::trivial(1, ChainComplex::with_zero_diff(space)))?;
        Ok(out)
    }
}

/// The underlying sequence of the nonunital commutative structure: one basis
/// element `c{n}` per arity, in degree 0, with the trivial action.
pub fn comm_seq(field: FieldSpec, window: Window) -> Result<SymSeqObject, SymSeqError> {
    let mut out = SymSeqObject::new(field, window);
    for n in 1..=window.max_arity {
        let space = GradedSpace::single(field, 0, vec![format!("c{n}")]);
        out.set_arity(SymRep::trivial(n, ChainComplex::with_zero_diff(space)))?;
    }
    Ok(out)
}

/// The underlying sequence of the nonunital associative structure: arity `n`
/// has one basis element per linear order of the inputs, in degree 0, with
/// the relabeling action. The word `w312` stands for the product taken in the
/// order third, first, second input.
pub fn ass_seq(field: FieldSpec, window: Window) -> Result<SymSeqObject, SymSeqError> {
    let mut out = SymSeqObject::new(field, window);
    for n in 1..=window.max_arity {
        let words = permutations_lex(n);
        let index: BTreeMap<&[usize], usize> =
            words.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect();
        let labels: Vec<String> = words.iter().map(|w| word_label(w)).collect();
        let space = GradedSpace::single(field, 0, labels);
        let dim = words.len();
        let mut transpositions = Vec::new();
        for i in 0..n - 1 {
            let cols: Vec<Vec<(u32, Scalar)>> = words
                .iter()
                .map(|w| {
                    let img: Vec<usize> = w
                        .iter()
                        .map(|&v| {
                            if v == i {
                                i + 1
                            } else if v == i + 1 {
                                i
                            } else {
                                v
                            }
                        })
                        .collect();
                    vec![(index[img.as_slice()] as u32, field.one())]
                })
                .collect();
            let mut maps = ActionMaps::new();
            maps.insert(0, SparseMat::from_cols(field, dim, cols));
            transpositions.push(maps);
        }
        out.set_arity(SymRep::new(
            n,
            ChainComplex::with_zero_diff(space),
            transpositions,
        )?)?;
    }
    Ok(out)
}

pub(crate) fn permutations_lex(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    let mut used = vec![false; n];
    fn rec(n: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(n, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    rec(n, &mut cur, &mut used, &mut out);
    out
}

fn word_label(w: &[usize]) -> String {
    let body: String = w.iter().map(|&v| char::from(b'1' + v as u8)).collect();
    format!("w{body}")
}

/// One basis element of a composition product: a set partition of the source
/// (blocks ascending, ordered by minima), a left-factor basis element, and
/// one right-factor basis element per block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct ComposeElem {
    part: Vec<Vec<usize>>,
    x: (Degree, usize),
    ys: Vec<(Degree, usize)>,
}

struct Bucket {
    elems: Vec<ComposeElem>,
    index: BTreeMap<ComposeElem, usize>,
    labels: Vec<String>,
}

fn part_string(part: &[Vec<usize>]) -> String {
    part.iter()
        .map(|b| {
            b.iter()
                .map(|&e| char::from(b'1' + e as u8))
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("|")
}

fn flat_basis(rep: &SymRep) -> Vec<(Degree, usize)> {
    let mut out = Vec::new();
    for deg in rep.complex.space.support() {
        for i in 0..rep.complex.space.dim(deg) {
            out.push((deg, i));
        }
    }
    out
}

/// Composition product of symmetric sequences.
///
/// The arity-`n` component is spanned, over block counts `k`, by canonical
/// set partitions of the source decorated with an `X_k` basis element and one
/// `Y_{|block|}` element per block; this realizes the coinvariants because
/// permuting blocks acts freely on the set of surjections onto `0..k`. The
/// induced action relabels the source; crossing transpositions that swap two
/// adjacent blocks act on `X_k`, pick up the Koszul sign of the swapped
/// decorations, and reorder the blocks canonically.
pub fn compose(
    x: &SymSeqObject,
    y: &SymSeqObject,
    window: &Window,
) -> Result<SymSeqObject, SymSeqError> {
    if x.field != y.field {
        return Err(SymSeqError::FieldMismatch);
    }
    if x.window != *window || y.window != *window {
        return Err(SymSeqError::WindowMismatch);
    }
    if !y.is_reduced() {
        return Err(SymSeqError::NonReducedRight);
    }
    let field = x.field;
    let mut out = SymSeqObject::new(field, *window);
    if let Some(r0) = x.arity(0) {
        out.set_arity(r0.clone())?;
    }
    let reps: Result<Vec<Option<SymRep>>, SymSeqError> = (1..=window.max_arity)
        .into_par_iter()
        .map(|n| compose_arity(x, y, n, window))
        .collect();
    for rep in reps?.into_iter().flatten() {
        out.set_arity(rep)?;
    }
    Ok(out)
}

fn compose_arity(
    x: &SymSeqObject,
    y: &SymSeqObject,
    n: usize,
    window: &Window,
) -> Result<Option<SymRep>, SymSeqError> {
    let field = x.field;
    // Enumerate the basis, bucketed by total degree in encounter order.
    let mut buckets: BTreeMap<Degree, Bucket> = BTreeMap::new();
    for part in set_partitions(n) {
        let k = part.len();
        let Some(xrep) = x.arity(k) else { continue };
        let mut block_opts: Vec<Vec<(Degree, usize)>> = Vec::with_capacity(k);
        let mut ok = true;
        for b in &part {
            match y.arity(b.len()) {
                Some(yrep) => block_opts.push(flat_basis(yrep)),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || block_opts.iter().any(Vec::is_empty) {
            continue;
        }
        let pstr = part_string(&part);
        for (xd, xi) in flat_basis(xrep) {
            let xlab = &xrep.complex.space.labels(xd)[xi];
            let mut odo = vec![0usize; k];
            loop {
                let ys: Vec<(Degree, usize)> =
                    odo.iter().enumerate().map(|(b, &t)| block_opts[b][t]).collect();
                let total = xd + ys.iter().map(|&(d, _)| d).sum::<Degree>();
                if window.contains_deg(total) {
                    let ylabs: Vec<String> = part
                        .iter()
                        .zip(&ys)
                        .map(|(b, &(d, i))| {
                            y.arity(b.len()).unwrap().complex.space.labels(d)[i].clone()
                        })
                        .collect();
                    let label = format!("{xlab}({})[{pstr}]", ylabs.join(","));
                    let elem = ComposeElem {
                        part: part.clone(),
                        x: (xd, xi),
                        ys,
                    };
                    let bucket = buckets.entry(total).or_insert_with(|| Bucket {
                        elems: Vec::new(),
                        index: BTreeMap::new(),
                        labels: Vec::new(),
                    });
                    bucket.index.insert(elem.clone(), bucket.elems.len());
                    bucket.elems.push(elem);
                    bucket.labels.push(label);
                }
                // Advance the odometer, last block fastest.
                let mut pos = k;
                while pos > 0 {
                    pos -= 1;
                    odo[pos] += 1;
                    if odo[pos] < block_opts[pos].len() {
                        break;
                    }
                    odo[pos] = 0;
                    if pos == 0 {
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos == usize::MAX {
                    break;
                }
            }
        }
    }
    if buckets.values().all(|b| b.elems.is_empty()) {
        return Ok(None);
    }

    let mut space = GradedSpace::new(field);
    for (&deg, bucket) in &buckets {
        space.set_basis(deg, bucket.labels.clone());
    }

    let lookup = |deg: Degree, elem: &ComposeElem| -> Option<usize> {
        buckets.get(&deg).and_then(|b| b.index.get(elem).copied())
    };

    // Differential: d(x ⊗ y_1 ⊗ .. ⊗ y_k) = dx ⊗ y.. + Σ_b ±x ⊗ .. dy_b ..,
    // with the Koszul sign of moving d past x and y_1 .. y_{b-1}.
    let mut diff: BTreeMap<Degree, Matrix> = BTreeMap::new();
    for (&deg, bucket) in &buckets {
        let rows = buckets.get(&(deg - 1)).map_or(0, |b| b.elems.len());
        if rows == 0 {
            continue;
        }
        let mut cols: Vec<Vec<(u32, Scalar)>> = Vec::with_capacity(bucket.elems.len());
        for elem in &bucket.elems {
            let k = elem.part.len();
            let mut col: Vec<(u32, Scalar)> = Vec::new();
            let xrep = x.arity(k).unwrap();
            if xrep.complex.has_nonzero_d(elem.x.0) {
                let dm = xrep.complex.d(elem.x.0);
                for r in 0..dm.rows {
                    let v = dm.get(r, elem.x.1);
                    if v.is_zero() {
                        continue;
                    }
                    let target = ComposeElem {
                        part: elem.part.clone(),
                        x: (elem.x.0 - 1, r),
                        ys: elem.ys.clone(),
                    };
                    if let Some(t) = lookup(deg - 1, &target) {
                        col.push((t as u32, v.clone()));
                    }
                }
            }
            for b in 0..k {
                let yrep = y.arity(elem.part[b].len()).unwrap();
                if !yrep.complex.has_nonzero_d(elem.ys[b].0) {
                    continue;
                }
                let pass: Degree =
                    elem.x.0 + elem.ys[..b].iter().map(|&(d, _)| d).sum::<Degree>();
                let sign = field.sign(pass as i64);
                let dm = yrep.complex.d(elem.ys[b].0);
                for r in 0..dm.rows {
                    let v = dm.get(r, elem.ys[b].1);
                    if v.is_zero() {
                        continue;
                    }
                    let mut ys = elem.ys.clone();
                    ys[b] = (elem.ys[b].0 - 1, r);
                    let target = ComposeElem {
                        part: elem.part.clone(),
                        x: elem.x,
                        ys,
                    };
                    if let Some(t) = lookup(deg - 1, &target) {
                        col.push((t as u32, field.mul(&sign, v)));
                    }
                }
            }
            cols.push(col);
        }
        let sm = SparseMat::from_cols(field, rows, cols);
        if !sm.is_zero() {
            diff.insert(deg, sm.to_dense());
        }
    }
    let complex = ChainComplex::new(space, diff)?;

    // Induced action of the swap of source points i, i+1.
    let mut transpositions: Vec<ActionMaps> = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut maps = ActionMaps::new();
        for (&deg, bucket) in &buckets {
            let dim = bucket.elems.len();
            let mut cols: Vec<Vec<(u32, Scalar)>> = Vec::with_capacity(dim);
            for elem in &bucket.elems {
                let k = elem.part.len();
                let pa = elem.part.iter().position(|b| b.contains(&i)).unwrap();
                let pb = elem.part.iter().position(|b| b.contains(&(i + 1))).unwrap();
                let mut col: Vec<(u32, Scalar)> = Vec::new();
                if pa == pb {
                    // Internal: the swap stays inside one block, where i and
                    // i+1 sit in adjacent slots.
                    let p = elem.part[pa].iter().position(|&e| e == i).unwrap();
                    let yrep = y.arity(elem.part[pa].len()).unwrap();
                    let t = yrep.transposition(p, elem.ys[pa].0);
                    for (r, v) in &t.col_data[elem.ys[pa].1] {
                        let mut ys = elem.ys.clone();
                        ys[pa] = (elem.ys[pa].0, *r as usize);
                        let target = ComposeElem {
                            part: elem.part.clone(),
                            x: elem.x,
                            ys,
                        };
                        let t = lookup(deg, &target).expect("internal action stays in degree");
                        col.push((t as u32, v.clone()));
                    }
                } else {
                    // Crossing: move i and i+1 between their blocks. Each
                    // block maps order-preservingly, so decorations carry
                    // over; the block order flips exactly when the blocks'
                    // minima are i and i+1, which swaps two adjacent tensor
                    // factors and acts on the left factor.
                    let mut part = elem.part.clone();
                    part[pa].retain(|&e| e != i);
                    part[pa].push(i + 1);
                    part[pa].sort_unstable();
                    part[pb].retain(|&e| e != i + 1);
                    part[pb].push(i);
                    part[pb].sort_unstable();
                    let swap = elem.part[pa][0] == i && elem.part[pb][0] == i + 1;
                    if swap {
                        debug_assert_eq!(pb, pa + 1);
                        part.swap(pa, pb);
                        let mut ys = elem.ys.clone();
                        ys.swap(pa, pb);
                        let sign =
                            field.sign((elem.ys[pa].0 as i64) * (elem.ys[pb].0 as i64));
                        let xrep = x.arity(k).unwrap();
                        let t = xrep.transposition(pa, elem.x.0);
                        for (r, v) in &t.col_data[elem.x.1] {
                            let target = ComposeElem {
                                part: part.clone(),
                                x: (elem.x.0, *r as usize),
                                ys: ys.clone(),
                            };
                            let t =
                                lookup(deg, &target).expect("crossing action stays in degree");
                            col.push((t as u32, field.mul(&sign, v)));
                        }
                    } else {
                        part.sort_by_key(|b| b[0]);
                        let target = ComposeElem {
                            part,
                            x: elem.x,
                            ys: elem.ys.clone(),
                        };
                        let t = lookup(deg, &target).expect("relabeled basis element exists");
                        col.push((t as u32, field.one()));
                    }
                }
                cols.push(col);
            }
            maps.insert(deg, SparseMat::from_cols(field, dim, cols));
        }
        transpositions.push(maps);
    }
    SymRep::new(n, complex, transpositions).map(Some)
}

/// Arity-wise direct sum. Labels are prefixed `l.`/`r.` to stay unique.
pub fn direct_sum(x: &SymSeqObject, y: &SymSeqObject) -> Result<SymSeqObject, SymSeqError> {
    if x.field != y.field {
        return Err(SymSeqError::FieldMismatch);
    }
    if x.window != y.window {
        return Err(SymSeqError::WindowMismatch);
    }
    let field = x.field;
    let mut out = SymSeqObject::new(field, x.window);
    let arities: std::collections::BTreeSet<usize> = x
        .arity_iter()
        .map(|(n, _)| n)
        .chain(y.arity_iter().map(|(n, _)| n))
        .collect();
    for n in arities {
        let (xr, yr) = (x.arity(n), y.arity(n));
        let mut space = GradedSpace::new(field);
        let degs: std::collections::BTreeSet<Degree> = xr
            .iter()
            .flat_map(|r| r.complex.space.support())
            .chain(yr.iter().flat_map(|r| r.complex.space.support()))
            .collect();
        let dim_of = |r: Option<&SymRep>, d: Degree| r.map_or(0, |r| r.complex.space.dim(d));
        for &d in &degs {
            let mut labels = Vec::new();
            if let Some(r) = xr {
                labels.extend(r.complex.space.labels(d).iter().map(|l| format!("l.{l}")));
            }
            if let Some(r) = yr {
                labels.extend(r.complex.space.labels(d).iter().map(|l| format!("r.{l}")));
            }
            space.set_basis(d, labels);
        }
        let mut diff = BTreeMap::new();
        for &d in &degs {
            let (rows, cols) = (space.dim(d - 1), space.dim(d));
            let xd = xr.map(|r| r.complex.d(d));
            let yd = yr.map(|r| r.complex.d(d));
            if xd.as_ref().map_or(true, Matrix::is_zero) && yd.as_ref().map_or(true, Matrix::is_zero)
            {
                continue;
            }
            let mut m = Matrix::zero(field, rows, cols);
            if let Some(xd) = xd {
                for i in 0..xd.rows {
                    for j in 0..xd.cols {
                        m.set(i, j, xd.get(i, j).clone());
                    }
                }
            }
            if let Some(yd) = yd {
                let (ro, co) = (dim_of(xr, d - 1), dim_of(xr, d));
                for i in 0..yd.rows {
                    for j in 0..yd.cols {
                        m.set(ro + i, co + j, yd.get(i, j).clone());
                    }
                }
            }
            diff.insert(d, m);
        }
        let complex = ChainComplex::new(space, diff)?;
        let mut transpositions = Vec::new();
        for i in 0..n.saturating_sub(1) {
            let mut maps = ActionMaps::new();
            for &d in &degs {
                let dim = complex.space.dim(d);
                let mut cols: Vec<Vec<(u32, Scalar)>> = vec![Vec::new(); dim];
                let co = dim_of(xr, d);
                if let Some(r) = xr {
                    let t = r.transposition(i, d);
                    for (j, col) in t.col_data.iter().enumerate() {
                        cols[j] = col.clone();
                    }
                }
                if let Some(r) = yr {
                    let t = r.transposition(i, d);
                    for (j, col) in t.col_data.iter().enumerate() {
                        cols[co + j] =
                            col.iter().map(|(r, v)| (*r + co as u32, v.clone())).collect();
                    }
                }
                maps.insert(d, SparseMat::from_cols(field, dim, cols));
            }
            transpositions.push(maps);
        }
        out.set_arity(SymRep::new(n, complex, transpositions)?)?;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncateSide {
    /// Zero out arities strictly above `n`.
    Above,
    /// Zero out arities strictly below `n`.
    Below,
}

pub fn truncate(
    x: &SymSeqObject,
    n: usize,
    side: TruncateSide,
) -> Result<SymSeqObject, SymSeqError> {
    if n == 0 {
        return Err(SymSeqError::BadTruncation);
    }
    let mut out = SymSeqObject::new(x.field, x.window);
    for (r, rep) in x.arity_iter() {
        let keep = match side {
            TruncateSide::Above => r <= n,
            TruncateSide::Below => r >= n,
        };
        if keep {
            out.set_arity(rep.clone())?;
        }
    }
    Ok(out)
}

/// Operadic shift: the arity-`r` component is suspended by `(1-r)·m` and for
/// odd `m` the action is twisted by the sign character. The window grows just
/// enough to hold the shifted degrees, so shifting back is the identity.
pub fn operadic_shift(x: &SymSeqObject, m: Degree) -> Result<SymSeqObject, SymSeqError> {
    let (mut lo, mut hi) = (x.window.min_deg, x.window.max_deg);
    for (r, rep) in x.arity_iter() {
        let s = (1 - r as Degree) * m;
        for deg in rep.complex.space.support() {
            lo = lo.min(deg + s);
            hi = hi.max(deg + s);
        }
    }
    let window = Window::new(x.window.max_arity, lo, hi)?;
    let mut out = SymSeqObject::new(x.field, window);
    for (r, rep) in x.arity_iter() {
        let s = (1 - r as Degree) * m;
        let complex = crate::graded::shift(&rep.complex, s);
        let twist = x.field.sign(m as i64);
        let mut transpositions = Vec::new();
        for i in 0..r.saturating_sub(1) {
            let mut maps = ActionMaps::new();
            for deg in rep.complex.space.support() {
                let t = rep.transposition(i, deg).scale(&twist);
                maps.insert(deg + s, t);
            }
            transpositions.push(maps);
        }
        out.set_arity(SymRep::new(r, complex, transpositions)?)?;
    }
    Ok(out)
}

/// Output of [`norm_map`]: coinvariant and invariant dimensions per degree,
/// the induced map on the chosen bases, and whether it is invertible.
///
/// Coinvariants are presented on the coordinate section complementary to the
/// pivot rows of the span of all `σ - id`; invariants on the canonical kernel
/// basis of the stacked `σ - id`. The norm matrix is stored for degrees of
/// dimension at most [`NORM_MATRIX_LIMIT`]; invertibility is a rank check
/// either way.
#[derive(Clone, Debug)]
pub struct NormReport {
    pub arity: usize,
    pub coinvariants: BTreeMap<Degree, usize>,
    pub invariants: BTreeMap<Degree, usize>,
    pub norm: BTreeMap<Degree, Matrix>,
    pub is_iso: bool,
}

pub const NORM_MATRIX_LIMIT: usize = 512;

pub fn norm_map(rep: &SymRep) -> NormReport {
    let field = rep.field();
    let n = rep.arity.max(1);
    let mut coinvariants = BTreeMap::new();
    let mut invariants = BTreeMap::new();
    let mut norm = BTreeMap::new();
    let mut is_iso = true;
    for deg in rep.complex.space.support() {
        let m = rep.complex.space.dim(deg);
        if m == 0 {
            continue;
        }
        if n == 1 {
            coinvariants.insert(deg, m);
            invariants.insert(deg, m);
            norm.insert(deg, Matrix::identity(field, m));
            continue;
        }
        let gens: Vec<SparseMat> = (0..n - 1).map(|i| rep.transposition(i, deg)).collect();
        // Span of all (σ - id)v over the transposition generators; by the
        // cocycle rule (gh - 1) = (g - 1)h + (h - 1) this equals the span
        // over the whole group.
        let mut diff_cols: Vec<Vec<(u32, Scalar)>> = Vec::with_capacity((n - 1) * m);
        for g in &gens {
            for j in 0..m {
                let mut col = g.col_data[j].clone();
                add_unit(&field, &mut col, j as u32, &field.int(-1));
                diff_cols.push(col);
            }
        }
        let co = field::sparse_solve(&SparseMat::from_cols(field, m, diff_cols), false);
        let c = m - co.rank;
        let section: Vec<usize> = (0..m).filter(|r| !co.pivot_rows.contains(r)).collect();
        // Joint kernel of the stacked (σ - id).
        let stack_cols: Vec<Vec<(u32, Scalar)>> = (0..m)
            .map(|j| {
                let mut col = Vec::new();
                for (gi, g) in gens.iter().enumerate() {
                    let off = (gi * m) as u32;
                    let mut part = g.col_data[j].clone();
                    add_unit(&field, &mut part, j as u32, &field.int(-1));
                    col.extend(part.into_iter().map(|(r, v)| (r + off, v)));
                }
                col
            })
            .collect();
        let inv = field::sparse_solve(
            &SparseMat::from_cols(field, (n - 1) * m, stack_cols),
            true,
        );
        let kernel = inv.kernel.expect("kernel requested");
        let i_dim = kernel.cols;
        coinvariants.insert(deg, c);
        invariants.insert(deg, i_dim);
        // Apply the full group sum to the section via a breadth-first walk of
        // the Cayley graph: ρ(s_i σ) = ρ(s_i) ρ(σ) extends level by level.
        let section_cols: Vec<Vec<(u32, Scalar)>> = section
            .iter()
            .map(|&r| vec![(r as u32, field.one())])
            .collect();
        let s_mat = SparseMat::from_cols(field, m, section_cols);
        let mut visited: BTreeMap<Vec<u8>, SparseMat> = BTreeMap::new();
        let id_perm: Vec<u8> = (0..n as u8).collect();
        let mut total = s_mat.clone();
        visited.insert(id_perm.clone(), s_mat);
        let mut frontier = vec![id_perm];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for p in frontier {
                for i in 0..n - 1 {
                    let q: Vec<u8> = p
                        .iter()
                        .map(|&v| {
                            if v == i as u8 {
                                i as u8 + 1
                            } else if v == i as u8 + 1 {
                                i as u8
                            } else {
                                v
                            }
                        })
                        .collect();
                    if !visited.contains_key(&q) {
                        let mq = gens[i].mul(&visited[&p]);
                        total = total.add(&mq);
                        visited.insert(q.clone(), mq);
                        next.push(q);
                    }
                }
            }
            frontier = next;
        }
        let deg_iso = c == i_dim && field::sparse_rank(&total) == c;
        if !deg_iso {
            is_iso = false;
        }
        if m <= NORM_MATRIX_LIMIT {
            let expressed = field::preimage(&kernel, &total.to_dense())
                .expect("group sum lands in the invariants");
            norm.insert(deg, expressed);
        }
    }
    NormReport {
        arity: rep.arity,
        coinvariants,
        invariants,
        norm,
        is_iso,
    }
}

fn add_unit(field: &FieldSpec, col: &mut Vec<(u32, Scalar)>, row: u32, v: &Scalar) {
    match col.binary_search_by_key(&row, |e| e.0) {
        Ok(k) => {
            let s = field.add(&col[k].1, v);
            if s.is_zero() {
                col.remove(k);
            } else {
                col[k].1 = s;
            }
        }
        Err(k) => col.insert(k, (row, v.clone())),
    }
}

/// One row of [`norm_audit_compose`]: the block-permutation representation on
/// the arity-`arity`, `blocks`-block stratum of a composition product.
#[derive(Clone, Debug)]
pub struct NormAuditRow {
    pub arity: usize,
    pub blocks: usize,
    pub dim: usize,
    pub coinvariants: BTreeMap<Degree, usize>,
    pub is_iso: bool,
}

/// Builds, for each arity `n ≤ max_arity` and block count `k`, the
/// representation of the group permuting `k` blocks on the full span of
/// surjection-indexed tensors `X_k ⊗ Y_{fiber 0} ⊗ .. ⊗ Y_{fiber k-1}`, and
/// runs [`norm_map`] on it. The composition product is the coinvariants of
/// exactly these representations.
pub fn norm_audit_compose(
    x: &SymSeqObject,
    y: &SymSeqObject,
    max_arity: usize,
) -> Result<Vec<NormAuditRow>, SymSeqError> {
    if x.field != y.field {
        return Err(SymSeqError::FieldMismatch);
    }
    if !y.is_reduced() {
        return Err(SymSeqError::NonReducedRight);
    }
    let field = x.field;
    let mut rows = Vec::new();
    for n in 1..=max_arity.min(x.window.max_arity) {
        for k in 1..=n {
            let Some(xrep) = x.arity(k) else { continue };
            // All surjections 0..n -> 0..k as assignment vectors, lex order.
            let mut surjections = Vec::new();
            let mut cur = vec![0usize; n];
            loop {
                let mut seen = vec![false; k];
                for &v in &cur {
                    seen[v] = true;
                }
                if seen.iter().all(|&s| s) {
                    surjections.push(cur.clone());
                }
                let mut pos = n;
                while pos > 0 {
                    pos -= 1;
                    cur[pos] += 1;
                    if cur[pos] < k {
                        break;
                    }
                    cur[pos] = 0;
                    if pos == 0 {
                        pos = usize::MAX;
                        break;
                    }
                }
                if pos == usize::MAX || n == 0 {
                    break;
                }
            }
            #[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
            struct AuditElem {
                f: Vec<usize>,
                x: (Degree, usize),
                ys: Vec<(Degree, usize)>,
            }
            let mut elems: BTreeMap<Degree, Vec<AuditElem>> = BTreeMap::new();
            let mut ok = true;
            for f in &surjections {
                let mut block_opts: Vec<Vec<(Degree, usize)>> = Vec::with_capacity(k);
                for j in 0..k {
                    let size = f.iter().filter(|&&v| v == j).count();
                    match y.arity(size) {
                        Some(yrep) => block_opts.push(flat_basis(yrep)),
                        None => {
                            block_opts.clear();
                            break;
                        }
                    }
                }
                if block_opts.len() < k || block_opts.iter().any(Vec::is_empty) {
                    ok = false;
                    continue;
                }
                for (xd, xi) in flat_basis(xrep) {
                    let mut odo = vec![0usize; k];
                    loop {
                        let ys: Vec<(Degree, usize)> =
                            odo.iter().enumerate().map(|(b, &t)| block_opts[b][t]).collect();
                        let total = xd + ys.iter().map(|&(d, _)| d).sum::<Degree>();
                        elems.entry(total).or_default().push(AuditElem {
                            f: f.clone(),
                            x: (xd, xi),
                            ys,
                        });
                        let mut pos = k;
                        while pos > 0 {
                            pos -= 1;
                            odo[pos] += 1;
                            if odo[pos] < block_opts[pos].len() {
                                break;
                            }
                            odo[pos] = 0;
                            if pos == 0 {
                                pos = usize::MAX;
                                break;
                            }
                        }
                        if pos == usize::MAX {
                            break;
                        }
                    }
                }
            }
            let _ = ok;
            if elems.values().all(Vec::is_empty) {
                continue;
            }
            let index: BTreeMap<Degree, BTreeMap<AuditElem, usize>> = elems
                .iter()
                .map(|(&d, v)| {
                    (d, v.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect())
                })
                .collect();
            let mut space = GradedSpace::new(field);
            for (&d, v) in &elems {
                space.set_basis(d, (0..v.len()).map(|i| format!("b{d}#{i}")).collect());
            }
            let mut transpositions = Vec::new();
            for t in 0..k.saturating_sub(1) {
                let mut maps = ActionMaps::new();
                for (&d, v) in &elems {
                    let mut cols: Vec<Vec<(u32, Scalar)>> = Vec::with_capacity(v.len());
                    for e in v {
                        let f2: Vec<usize> = e
                            .f
                            .iter()
                            .map(|&b| {
                                if b == t {
                                    t + 1
                                } else if b == t + 1 {
                                    t
                                } else {
                                    b
                                }
                            })
                            .collect();
                        let mut ys = e.ys.clone();
                        ys.swap(t, t + 1);
                        let sign = field.sign((e.ys[t].0 as i64) * (e.ys[t + 1].0 as i64));
                        let xt = xrep.transposition(t, e.x.0);
                        let mut col = Vec::new();
                        for (r, val) in &xt.col_data[e.x.1] {
                            let target = AuditElem {
                                f: f2.clone(),
                                x: (e.x.0, *r as usize),
                                ys: ys.clone(),
                            };
                            let idx = index[&d][&target];
                            col.push((idx as u32, field.mul(&sign, val)));
                        }
                        cols.push(col);
                    }
                    maps.insert(d, SparseMat::from_cols(field, v.len(), cols));
                }
                transpositions.push(maps);
            }
            let rep = SymRep::new(k, ChainComplex::with_zero_diff(space), transpositions)?;
            let report = norm_map(&rep);
            rows.push(NormAuditRow {
                arity: n,
                blocks: k,
                dim: rep.total_dim(),
                coinvariants: report.coinvariants,
                is_iso: report.is_iso,
            });
        }
    }
    Ok(rows)
}

/// Word-length-graded dimensions of the free algebra `⊕_n (O_n ⊗ V^{⊗n})_Σn`
/// up to the given word length. The returned space is graded by word length;
/// [`free_algebra_bigraded`] keeps the internal degree as well.
pub fn free_algebra(
    o: &SymSeqObject,
    v: &ChainComplex,
    max_len: usize,
) -> Result<GradedSpace, SymSeqError> {
    let table = free_algebra_bigraded(o, v, max_len)?;
    let mut out = GradedSpace::new(o.field);
    for (n, by_deg) in table {
        let total: usize = by_deg.values().sum();
        out.set_basis(
            n as Degree,
            (0..total).map(|i| format!("len{n}#{i}")).collect(),
        );
    }
    Ok(out)
}

/// As [`free_algebra`], but returns `word length → internal degree → dim`.
pub fn free_algebra_bigraded(
    o: &SymSeqObject,
    v: &ChainComplex,
    max_len: usize,
) -> Result<BTreeMap<usize, BTreeMap<Degree, usize>>, SymSeqError> {
    if v.field() != o.field {
        return Err(SymSeqError::FieldMismatch);
    }
    if max_len > o.window.max_arity {
        return Err(SymSeqError::WordLengthOutsideWindow(max_len));
    }
    let field = o.field;
    let letters = flat_basis_space(&v.space);
    let mut out = BTreeMap::new();
    for n in 1..=max_len {
        let Some(rep) = o.arity(n) else { continue };
        // Basis: (operation, word), bucketed by total degree.
        let ops = flat_basis(rep);
        let mut buckets: BTreeMap<Degree, Vec<(usize, Vec<usize>)>> = BTreeMap::new();
        let mut words = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for w in &words {
                for l in 0..letters.len() {
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push(w2);
                }
            }
            words = next;
        }
        for (oi, &(od, _)) in ops.iter().enumerate() {
            for w in &words {
                let total = od + w.iter().map(|&l| letters[l].0).sum::<Degree>();
                buckets.entry(total).or_default().push((oi, w.clone()));
            }
        }
        let index: BTreeMap<Degree, BTreeMap<(usize, Vec<usize>), usize>> = buckets
            .iter()
            .map(|(&d, v)| {
                (d, v.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect())
            })
            .collect();
        let mut dims = BTreeMap::new();
        for (&d, elems) in &buckets {
            let m = elems.len();
            let mut cols: Vec<Vec<(u32, Scalar)>> = Vec::new();
            for t in 0..n - 1 {
                for (oi, w) in elems {
                    let (od, oidx) = ops[*oi];
                    let mut w2 = w.clone();
                    w2.swap(t, t + 1);
                    let sign = field
                        .sign((letters[w[t]].0 as i64) * (letters[w[t + 1]].0 as i64));
                    let tmat = rep.transposition(t, od);
                    let mut col: Vec<(u32, Scalar)> = Vec::new();
                    for (r, val) in &tmat.col_data[oidx] {
                        let key = (
                            ops.iter()
                                .position(|&(pd, pi)| pd == od && pi == *r as usize)
                                .unwrap(),
                            w2.clone(),
                        );
                        col.push((index[&d][&key] as u32, field.mul(&sign, val)));
                    }
                    let self_idx = index[&d][&(*oi, w.clone())];
                    add_unit(&field, &mut col, self_idx as u32, &field.int(-1));
                    col.sort_by_key(|e| e.0);
                    cols.push(col);
                }
            }
            let rank = if cols.is_empty() {
                0
            } else {
                field::sparse_rank(&SparseMat::from_cols(field, m, cols))
            };
            if m - rank > 0 {
                dims.insert(d, m - rank);
            }
        }
        if !dims.is_empty() {
            out.insert(n, dims);
        }
    }
    Ok(out)
}

fn flat_basis_space(space: &GradedSpace) -> Vec<(Degree, usize)> {
    let mut out = Vec::new();
    for deg in space.support() {
        for i in 0..space.dim(deg) {
            out.push((deg, i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::homology_dims;

    fn q() -> FieldSpec {
        FieldSpec::Q
    }

    fn w(max_arity: usize, lo: Degree, hi: Degree) -> Window {
        Window::new(max_arity, lo, hi).unwrap()
    }

    fn dims_of(x: &SymSeqObject, n: usize) -> BTreeMap<Degree, usize> {
        x.arity(n)
            .map(|r| r.complex.space.dims())
            .unwrap_or_default()
    }

    fn total_dim(x: &SymSeqObject, n: usize) -> usize {
        dims_of(x, n).values().sum()
    }

    /// Compares two sequences ignoring basis labels: same dims, same
    /// differentials, same stored action matrices.
    fn assert_eq_mod_labels(a: &SymSeqObject, b: &SymSeqObject) {
        let an: Vec<usize> = a.arity_iter().map(|(n, _)| n).collect();
        let bn: Vec<usize> = b.arity_iter().map(|(n, _)| n).collect();
        assert_eq!(an, bn, "arity supports differ");
        for (n, ra) in a.arity_iter() {
            let rb = b.arity(n).unwrap();
            assert_eq!(
                ra.complex.space.dims(),
                rb.complex.space.dims(),
                "dims differ at arity {n}"
            );
            for deg in ra.complex.space.support() {
                assert_eq!(
                    ra.complex.d(deg),
                    rb.complex.d(deg),
                    "differential differs at arity {n} degree {deg}"
                );
                for i in 0..n.saturating_sub(1) {
                    assert_eq!(
                        ra.transposition(i, deg),
                        rb.transposition(i, deg),
                        "action differs at arity {n} degree {deg} transposition {i}"
                    );
                }
            }
        }
    }

    #[test]
    fn adjacent_word_reconstructs_permutations() {
        for n in 1..=4 {
            for p in permutations_lex(n) {
                let word = adjacent_word(&p);
                let mut q: Vec<usize> = (0..n).collect();
                // p = s_{w_k} ∘ .. ∘ s_{w_1} applied to the identity.
                for &i in &word {
                    let img: Vec<usize> = q
                        .iter()
                        .map(|&v| {
                            if v == i {
                                i + 1
                            } else if v == i + 1 {
                                i
                            } else {
                                v
                            }
                        })
                        .collect();
                    q = img;
                }
                assert_eq!(q, p);
                assert_eq!(word.len() as u32 % 2, perm_parity(&p));
            }
        }
    }

    #[test]
    fn set_partition_counts_match_bell_triangle() {
        // Independent oracle: Bell triangle recurrence.
        let mut row = vec![1u64];
        let mut bell = vec![1u64];
        for _ in 1..=6 {
            let mut next = vec![*row.last().unwrap()];
            for v in &row {
                next.push(next.last().unwrap() + v);
            }
            bell.push(next[0]);
            row = next;
        }
        for n in 1..=6 {
            assert_eq!(set_partitions(n).len() as u64, bell[n], "Bell({n})");
        }
        // Blocks are ascending and ordered by minima.
        for part in set_partitions(4) {
            for b in &part {
                assert!(b.windows(2).all(|p| p[0] < p[1]));
            }
            assert!(part.windows(2).all(|p| p[0][0] < p[1][0]));
        }
    }

    #[test]
    fn regular_sequence_characters() {
        let a = ass_seq(q(), w(3, 0, 0)).unwrap();
        let r3 = a.arity(3).unwrap();
        assert_eq!(r3.total_dim(), 6);
        // Regular representation: trace 6 at the identity, 0 elsewhere.
        for p in permutations_lex(3) {
            let tr = r3.character(&p).unwrap()[&0].clone();
            let expected = if p == vec![0, 1, 2] { 6 } else { 0 };
            assert_eq!(tr, q().int(expected));
        }
    }

    #[test]
    fn bad_braid_rejected() {
        let space = GradedSpace::single(q(), 0, vec!["a".into(), "b".into()]);
        let complex = ChainComplex::with_zero_diff(space);
        let s1 = SparseMat::from_dense(&Matrix::from_int_rows(q(), &[&[1, 0], &[0, -1]]));
        let s2 = SparseMat::from_dense(&Matrix::from_int_rows(q(), &[&[0, 1], &[1, 0]]));
        let mut m1 = ActionMaps::new();
        m1.insert(0, s1);
        let mut m2 = ActionMaps::new();
        m2.insert(0, s2);
        let err = SymRep::new(3, complex, vec![m1, m2]).unwrap_err();
        assert!(matches!(err, SymSeqError::BadAction { .. }));
    }

    #[test]
    fn compose_comm_comm_gives_bell_numbers() {
        let win = w(5, 0, 0);
        let c = comm_seq(q(), win).unwrap();
        let cc = compose(&c, &c, &win).unwrap();
        let bell = [1usize, 2, 5, 15, 52];
        for n in 1..=5 {
            assert_eq!(total_dim(&cc, n), bell[n - 1], "arity {n}");
        }
    }

    #[test]
    fn compose_ass_ass_matches_independent_orbit_count() {
        let win = w(3, 0, 0);
        let a = ass_seq(q(), win).unwrap();
        let aa = compose(&a, &a, &win).unwrap();
        // Independent oracle: orbits of the block-permuting group on triples
        // (surjection, left word, per-fiber words), counted by breadth-first
        // closure. Words enter as plain relabelings, so orbits of the basis
        // set count the coinvariant dimension.
        for n in 1..=3usize {
            let mut count = 0usize;
            for k in 1..=n {
                let mut all: std::collections::BTreeSet<(Vec<usize>, Vec<usize>, Vec<Vec<usize>>)> =
                    Default::default();
                let mut assignments = vec![vec![]];
                for _ in 0..n {
                    let mut next = Vec::new();
                    for a in &assignments {
                        for v in 0..k {
                            let mut a2: Vec<usize> = a.clone();
                            a2.push(v);
                            next.push(a2);
                        }
                    }
                    assignments = next;
                }
                for f in assignments {
                    let mut seen = vec![false; k];
                    for &v in &f {
                        seen[v] = true;
                    }
                    if !seen.iter().all(|&s| s) {
                        continue;
                    }
                    for xw in permutations_lex(k) {
                        let sizes: Vec<usize> =
                            (0..k).map(|j| f.iter().filter(|&&v| v == j).count()).collect();
                        let mut yw_choices: Vec<Vec<Vec<usize>>> =
                            vec![vec![]; 1];
                        for j in 0..k {
                            let mut next = Vec::new();
                            for partial in &yw_choices {
                                for wj in permutations_lex(sizes[j]) {
                                    let mut p2 = partial.clone();
                                    p2.push(wj);
                                    next.push(p2);
                                }
                            }
                            yw_choices = next;
                        }
                        for yws in yw_choices {
                            all.insert((f.clone(), xw.clone(), yws));
                        }
                    }
                }
                // Orbit closure under the k-1 adjacent block swaps.
                let mut remaining = all;
                while let Some(seed) = remaining.iter().next().cloned() {
                    count += 1;
                    let mut stack = vec![seed];
                    while let Some(e) = stack.pop() {
                        if !remaining.remove(&e) {
                            continue;
                        }
                        for t in 0..k.saturating_sub(1) {
                            let (f, xw, yws) = &e;
                            let f2: Vec<usize> = f
                                .iter()
                                .map(|&b| {
                                    if b == t {
                                        t + 1
                                    } else if b == t + 1 {
                                        t
                                    } else {
                                        b
                                    }
                                })
                                .collect();
                            let xw2: Vec<usize> = xw
                                .iter()
                                .map(|&v| {
                                    if v == t {
                                        t + 1
                                    } else if v == t + 1 {
                                        t
                                    } else {
                                        v
                                    }
                                })
                                .collect();
                            let mut yws2 = yws.clone();
                            yws2.swap(t, t + 1);
                            stack.push((f2, xw2, yws2));
                        }
                    }
                }
            }
            assert_eq!(total_dim(&aa, n), count, "arity {n}");
        }
        // Frozen values: 1, 4 (two one-block plus two two-block classes), 24.
        assert_eq!(total_dim(&aa, 1), 1);
        assert_eq!(total_dim(&aa, 2), 4);
        assert_eq!(total_dim(&aa, 3), 24);
    }

    #[test]
    fn compose_units_are_identities() {
        let win = w(4, 0, 0);
        let t = SymSeqObject::triv(q(), win).unwrap();
        for x in [comm_seq(q(), win).unwrap(), ass_seq(q(), win).unwrap()] {
            assert_eq_mod_labels(&compose(&t, &x, &win).unwrap(), &x);
            assert_eq_mod_labels(&compose(&x, &t, &win).unwrap(), &x);
        }
    }

    #[test]
    fn compose_with_differential_and_odd_degrees() {
        // Y has arity 1 spanned by a (degree 0) and b (degree 1) with db = a,
        // and arity 2 spanned by m (degree 0, trivial action). The window is
        // wide enough that degrees 0..2 are interior.
        let win = w(2, -2, 4);
        let field = q();
        let mut y = SymSeqObject::new(field, win);
        let mut space = GradedSpace::new(field);
        space.set_basis(0, vec!["a".into()]);
        space.set_basis(1, vec!["b".into()]);
        let mut diff = BTreeMap::new();
        diff.insert(1, Matrix::from_int_rows(field, &[&[1]]));
        y.set_arity(SymRep::trivial(1, ChainComplex::new(space, diff).unwrap()))
            .unwrap();
        y.set_arity(SymRep::trivial(
            2,
            ChainComplex::with_zero_diff(GradedSpace::single(field, 0, vec!["m".into()])),
        ))
        .unwrap();
        let c = {
            let mut c = SymSeqObject::new(field, win);
            for n in 1..=2 {
                c.set_arity(SymRep::trivial(
                    n,
                    ChainComplex::with_zero_diff(GradedSpace::single(
                        field,
                        0,
                        vec![format!("c{n}")],
                    )),
                ))
                .unwrap();
            }
            c
        };
        let cy = compose(&c, &y, &win).unwrap();
        // Arity 2: block pattern {12} gives m in degree 0; {1}{2} gives
        // aa, ab, ba, bb in degrees 0, 1, 1, 2.
        assert_eq!(
            dims_of(&cy, 2),
            BTreeMap::from([(0, 2), (1, 2), (2, 1)])
        );
        // d(ab) = ±aa and d(bb) = ba - ab collapse homology to the m line.
        let r2 = cy.arity(2).unwrap();
        assert_eq!(homology_dims(&r2.complex, &win), vec![(0, 1)]);
        // The crossing swap on ab lands on ba with the Koszul sign for two
        // odd decorations: check the action transposes the degree-1 pair.
        let t = r2.transposition(0, 1);
        let d = t.to_dense();
        assert_eq!(d.get(0, 1), &field.int(1));
        assert_eq!(d.get(1, 0), &field.int(1));
    }

    #[test]
    fn compose_is_associative_in_dims_and_characters() {
        let win = w(4, 0, 0);
        let c = comm_seq(q(), win).unwrap();
        let a = ass_seq(q(), win).unwrap();
        for (x, y, z) in [(&c, &c, &c), (&a, &c, &c), (&c, &a, &c), (&c, &c, &a)] {
            let left = compose(&compose(x, y, &win).unwrap(), z, &win).unwrap();
            let right = compose(x, &compose(y, z, &win).unwrap(), &win).unwrap();
            for n in 1..=4 {
                assert_eq!(dims_of(&left, n), dims_of(&right, n), "arity {n}");
                if let (Some(lr), Some(rr)) = (left.arity(n), right.arity(n)) {
                    for p in permutations_lex(n) {
                        assert_eq!(
                            lr.character(&p).unwrap(),
                            rr.character(&p).unwrap(),
                            "character at arity {n}, perm {p:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn compose_requires_reduced_right_factor() {
        let win = w(2, 0, 0);
        let c = comm_seq(q(), win).unwrap();
        let mut bad = comm_seq(q(), win).unwrap();
        bad.set_arity(SymRep::trivial(
            0,
            ChainComplex::with_zero_diff(GradedSpace::single(q(), 0, vec!["u".into()])),
        ))
        .unwrap();
        assert_eq!(
            compose(&c, &bad, &win).unwrap_err(),
            SymSeqError::NonReducedRight
        );
        // A nonzero arity-0 component on the left passes through untouched.
        let mut x0 = comm_seq(q(), win).unwrap();
        x0.set_arity(SymRep::trivial(
            0,
            ChainComplex::with_zero_diff(GradedSpace::single(q(), 0, vec!["u".into()])),
        ))
        .unwrap();
        let out = compose(&x0, &c, &win).unwrap();
        assert_eq!(total_dim(&out, 0), 1);
    }

    #[test]
    fn truncate_and_compose_are_compatible() {
        let win = w(4, 0, 0);
        let a = ass_seq(q(), win).unwrap();
        let c = comm_seq(q(), win).unwrap();
        assert_eq_mod_labels(
            &truncate(&c, 1, TruncateSide::Above).unwrap(),
            &SymSeqObject::triv(q(), win).unwrap(),
        );
        let full = truncate(&compose(&a, &c, &win).unwrap(), 2, TruncateSide::Above).unwrap();
        let cut = truncate(
            &compose(
                &truncate(&a, 2, TruncateSide::Above).unwrap(),
                &truncate(&c, 2, TruncateSide::Above).unwrap(),
                &win,
            )
            .unwrap(),
            2,
            TruncateSide::Above,
        )
        .unwrap();
        assert_eq_mod_labels(&full, &cut);
        let below = truncate(&c, 3, TruncateSide::Below).unwrap();
        assert!(below.arity(2).is_none() && below.arity(3).is_some());
        assert_eq!(truncate(&c, 0, TruncateSide::Above), Err(SymSeqError::BadTruncation));
    }

    #[test]
    fn operadic_shift_twists_by_sign() {
        let win = w(3, -4, 4);
        let a = ass_seq(q(), win).unwrap();
        let s = operadic_shift(&a, 1).unwrap();
        // Arity r lands in degree 1-r.
        assert_eq!(dims_of(&s, 3), BTreeMap::from([(-2, 6)]));
        // Odd shift: transpositions pick up a global minus sign, so the
        // trace of a transposition flips.
        let tr = s.arity(2).unwrap().character(&[1, 0]).unwrap();
        assert_eq!(tr[&-1], q().int(-2 * 0 - 0)); // regular rep trace stays 0
        let c = comm_seq(q(), win).unwrap();
        let sc = operadic_shift(&c, 1).unwrap();
        let tr = sc.arity(2).unwrap().character(&[1, 0]).unwrap();
        assert_eq!(tr[&-1], q().int(-1));
        // Round trips.
        assert_eq_mod_labels(&operadic_shift(&operadic_shift(&c, 1).unwrap(), -1).unwrap(), &c);
        assert_eq!(operadic_shift(&c, 0).unwrap(), c);
        let t = SymSeqObject::triv(q(), win).unwrap();
        assert_eq!(operadic_shift(&t, 3).unwrap(), t);
    }

    #[test]
    fn norm_map_witnesses() {
        // Trivial Σ2-module over Q: norm is multiplication by 2.
        let rep = SymRep::trivial(
            2,
            ChainComplex::with_zero_diff(GradedSpace::single(q(), 0, vec!["v".into()])),
        );
        let r = norm_map(&rep);
        assert_eq!(r.coinvariants[&0], 1);
        assert_eq!(r.invariants[&0], 1);
        assert_eq!(r.norm[&0], Matrix::from_int_rows(q(), &[&[2]]));
        assert!(r.is_iso);
        // Trivial Σ2-module over F2: norm is 0.
        let f2 = FieldSpec::fp(2).unwrap();
        let rep = SymRep::trivial(
            2,
            ChainComplex::with_zero_diff(GradedSpace::single(f2, 0, vec!["v".into()])),
        );
        let r = norm_map(&rep);
        assert_eq!((r.coinvariants[&0], r.invariants[&0]), (1, 1));
        assert!(r.norm[&0].is_zero());
        assert!(!r.is_iso);
        // Trivial Σ3-module over F3: |Σ3| = 6 ≡ 0, norm is 0.
        let f3 = FieldSpec::fp(3).unwrap();
        let rep = SymRep::trivial(
            3,
            ChainComplex::with_zero_diff(GradedSpace::single(f3, 0, vec!["v".into()])),
        );
        let r = norm_map(&rep);
        assert_eq!((r.coinvariants[&0], r.invariants[&0]), (1, 1));
        assert!(r.norm[&0].is_zero());
        assert!(!r.is_iso);
        // The regular Σ3-module over F3 is free, and the norm map between
        // its one-dimensional coinvariants and invariants is invertible over
        // every field: the group sum of a basis vector is the all-ones
        // invariant. This is forced; freeness makes the norm split.
        let a3 = ass_seq(f3, w(3, 0, 0)).unwrap();
        let r = norm_map(a3.arity(3).unwrap());
        assert_eq!((r.coinvariants[&0], r.invariants[&0]), (1, 1));
        assert!(r.is_iso);
        assert!(!r.norm[&0].is_zero());
        // Sanity over Q too.
        let aq = ass_seq(q(), w(3, 0, 0)).unwrap();
        assert!(norm_map(aq.arity(3).unwrap()).is_iso);
    }

    #[test]
    fn norm_audit_matches_compose_dimensions() {
        let win = w(4, 0, 0);
        let c = comm_seq(q(), win).unwrap();
        let a = ass_seq(q(), win).unwrap();
        for (x, y) in [(&c, &c), (&a, &c), (&c, &a), (&a, &a)] {
            let rows = norm_audit_compose(x, y, 4).unwrap();
            assert!(rows.iter().all(|r| r.is_iso), "Maschke regime");
            let xy = compose(x, y, &win).unwrap();
            for n in 1..=4 {
                let coinv: usize = rows
                    .iter()
                    .filter(|r| r.arity == n)
                    .flat_map(|r| r.coinvariants.values())
                    .sum();
                assert_eq!(coinv, total_dim(&xy, n), "arity {n}");
            }
        }
        // The block group permutes the surjections freely, so every stratum
        // is an induced module and the norm splits over any field.
        let f2 = FieldSpec::fp(2).unwrap();
        let c2 = comm_seq(f2, win).unwrap();
        let rows = norm_audit_compose(&c2, &c2, 3).unwrap();
        assert!(rows.iter().all(|r| r.is_iso), "induced modules are norm-perfect");
        let row = rows.iter().find(|r| (r.arity, r.blocks) == (2, 2)).unwrap();
        assert_eq!((row.dim, row.coinvariants[&0]), (2, 1));
    }

    #[test]
    fn free_algebra_tables() {
        let win = w(5, 0, 0);
        let field = q();
        let v2 = ChainComplex::with_zero_diff(GradedSpace::single(
            field,
            0,
            vec!["x".into(), "y".into()],
        ));
        let c = comm_seq(field, win).unwrap();
        let t = free_algebra(&c, &v2, 4).unwrap();
        // Independent oracle: dim Sym^n(K^2) = n + 1.
        for n in 1..=4i32 {
            assert_eq!(t.dim(n), n as usize + 1, "length {n}");
        }
        let tr = SymSeqObject::triv(field, win).unwrap();
        let u = free_algebra(&tr, &v2, 3).unwrap();
        assert_eq!(u.dims(), BTreeMap::from([(1, 2)]));
        let a = ass_seq(field, win).unwrap();
        let ta = free_algebra(&a, &v2, 3).unwrap();
        // Tensor algebra: 2^n words of length n.
        assert_eq!(ta.dims(), BTreeMap::from([(1, 2), (2, 4), (3, 8)]));
        assert_eq!(
            free_algebra(&c, &v2, 6).unwrap_err(),
            SymSeqError::WordLengthOutsideWindow(6)
        );
    }

    #[test]
    fn direct_sum_blocks() {
        let win = w(3, 0, 0);
        let c = comm_seq(q(), win).unwrap();
        let a = ass_seq(q(), win).unwrap();
        let s = direct_sum(&c, &a).unwrap();
        for n in 1..=3 {
            assert_eq!(total_dim(&s, n), total_dim(&c, n) + total_dim(&a, n));
        }
        // Character is additive.
        let tr = s.arity(2).unwrap().character(&[1, 0]).unwrap();
        assert_eq!(tr[&0], q().int(1)); // 1 (comm) + 0 (regular)
    }
}
