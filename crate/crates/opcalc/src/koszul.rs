//! Two-sided bar complexes over an operad and the structures carried by
//! their homology.
//!
//! The central object is the leveled bar complex `B(X, O, Y)` of a right
//! module `X`, a reduced operad `O`, and a left slot `Y` that is either the
//! trivial module or `O` itself.  A basis element is a strict chain of
//! canonically labeled surjections decorated by basis elements of the
//! participating sequences; the differential merges adjacent levels and adds
//! the internal differentials with the usual sign bookkeeping.  On top of the
//! raw complex this module provides homology transfer together with the
//! induced symmetric-group action, the cut cocomposition on the homology of
//! `B(1, O, 1)` whenever that homology is concentrated in single degrees, a
//! double-dual comparison, and the tower of arity truncations with norm and
//! Euler-characteristic diagnostics.

use std::collections::BTreeMap;
use std::rc::Rc;

use thiserror::Error;

use crate::field::{sparse_rank, sparse_solve, FieldSpec, Matrix, Scalar, SparseMat, SparseReducer};
use crate::graded::{ChainComplex, Degree, GradedError, GradedSpace, Window};
use crate::operad::{self, BilinearBlocks, Cooperad, Operad, OperadError};
use crate::symseq::{norm_map, truncate, ActionMaps, SymRep, SymSeqError, SymSeqObject, TruncateSide};

#[derive(Debug, Error)]
pub enum KoszulError {
    #[error("the operad must be reduced")]
    NotReduced,
    #[error("the arity-one component must be spanned by a unit with coordinate one")]
    UnitNotNormalized,
    #[error("module structure maps fail validation: {0}")]
    NonEquivariantModule(String),
    #[error("tower stages must lie between one and the window arity")]
    BadStage,
    #[error("bar homology at arity {0} is not concentrated in a single degree")]
    NotFormal(usize),
    #[error(transparent)]
    Graded(#[from] GradedError),
    #[error(transparent)]
    SymSeq(#[from] SymSeqError),
    #[error(transparent)]
    Operad(#[from] OperadError),
}

/// Structure maps of a right module, keyed like operad compositions: the
/// entry at `(m, i, n)` holds the per-degree blocks of
/// `X(m) ⊗ O(n) → X(m + n - 1)` plugging into slot `i`.
pub type PartialMaps = BTreeMap<(usize, usize, usize), BilinearBlocks>;

/// A right module over an operad.
///
/// Blocks follow the operad convention: the block at degrees `(a, b)` maps
/// column `ia * dim_b + ib` to the coordinates of `x_{ia} ∘_i o_{ib}`, and
/// absent blocks are zero.
#[derive(Clone, Debug)]
pub struct OpModule {
    pub underlying: SymSeqObject,
    partial: PartialMaps,
}

impl OpModule {
    /// The operad as a right module over itself.
    pub fn regular(o: &Operad) -> OpModule {
        let mut partial = PartialMaps::new();
        for (key, blocks) in o.compositions() {
            partial.insert(*key, blocks.clone());
        }
        OpModule {
            underlying: o.underlying.clone(),
            partial,
        }
    }

    /// The one-dimensional trivial module in arity one, acted on through the
    /// augmentation.
    pub fn trivial(o: &Operad) -> Result<OpModule, KoszulError> {
        let field = o.field();
        let inv = unit_scale(o)?;
        let underlying = SymSeqObject::triv(field, o.window())?;
        let mut blocks = BilinearBlocks::new();
        blocks.insert((0, 0), Matrix::from_rows(field, vec![vec![inv]]));
        let mut partial = PartialMaps::new();
        partial.insert((1, 1, 1), blocks);
        Ok(OpModule { underlying, partial })
    }

    /// The arity truncation of the operad as a right module: components and
    /// structure maps are kept only where every arity stays at most `cutoff`.
    pub fn truncated(o: &Operad, cutoff: usize) -> Result<OpModule, KoszulError> {
        let underlying = truncate(&o.underlying, cutoff, TruncateSide::Above)?;
        let mut partial = PartialMaps::new();
        for (&(m, i, n), blocks) in o.compositions() {
            if m + n - 1 <= cutoff {
                partial.insert((m, i, n), blocks.clone());
            }
        }
        Ok(OpModule { underlying, partial })
    }

    /// A sequence with unit actions only: plugging the unit into any slot is
    /// the identity and every other composition vanishes.
    pub fn trivial_on(o: &Operad, v: &SymSeqObject) -> Result<OpModule, KoszulError> {
        let field = o.field();
        if v.field != field {
            return Err(KoszulError::SymSeq(SymSeqError::FieldMismatch));
        }
        if v.window != o.window() {
            return Err(KoszulError::SymSeq(SymSeqError::WindowMismatch));
        }
        let inv = unit_scale(o)?;
        let mut partial = PartialMaps::new();
        for (m, rep) in v.arity_iter() {
            for i in 1..=m {
                let mut blocks = BilinearBlocks::new();
                for d in rep.complex.space.support() {
                    let dim = rep.complex.space.dim(d);
                    blocks.insert((d, 0), Matrix::identity(field, dim).scale(&inv));
                }
                partial.insert((m, i, 1), blocks);
            }
        }
        Ok(OpModule {
            underlying: v.clone(),
            partial,
        })
    }

    /// Assembles a module from explicit structure maps; validate the result
    /// with [`check_right_module`].
    pub fn from_parts(underlying: SymSeqObject, partial: PartialMaps) -> OpModule {
        OpModule { underlying, partial }
    }

    /// The stored structure maps.
    pub fn compositions(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize, usize), &BilinearBlocks)> {
        self.partial.iter()
    }

    fn block_ref(&self, m: usize, i: usize, n: usize, a: Degree, b: Degree) -> Option<&Matrix> {
        self.partial
            .get(&(m, i, n))
            .and_then(|blocks| blocks.get(&(a, b)))
    }
}

/// Inverse of the unit coordinate, for modules acting through the
/// augmentation.
fn unit_scale(o: &Operad) -> Result<Scalar, KoszulError> {
    if !o.reduced || o.unit.rows != 1 || o.unit.cols != 1 {
        return Err(KoszulError::UnitNotNormalized);
    }
    o.field()
        .inv(o.unit.get(0, 0))
        .map_err(|_| KoszulError::UnitNotNormalized)
}

/// The left slot of the two-sided bar construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeftModule {
    /// The trivial module: units only, killed by the augmentation.
    Trivial,
    /// The operad acting on itself.
    Regular,
}

/// Validates the module axioms that do not involve the differential: block
/// shapes, the unit law, and equivariance against adjacent transpositions on
/// either tensor factor.  Associativity is exercised by the bar differential,
/// which squares to zero only when it holds.
pub fn check_right_module(x: &OpModule, o: &Operad) -> Vec<String> {
    let field = o.field();
    let mut failures = Vec::new();
    let xdim =
        |k: usize, d: Degree| -> usize { x.underlying.arity(k).map_or(0, |r| r.complex.space.dim(d)) };
    let odim =
        |k: usize, d: Degree| -> usize { o.underlying.arity(k).map_or(0, |r| r.complex.space.dim(d)) };
    for (&(m, i, n), blocks) in &x.partial {
        if i < 1 || i > m {
            failures.push(format!("slot {i} out of range for arity {m}"));
            continue;
        }
        for (&(a, b), mat) in blocks {
            let rows = xdim(m + n - 1, a + b);
            let cols = xdim(m, a) * odim(n, b);
            if (mat.rows, mat.cols) != (rows, cols) {
                failures.push(format!(
                    "block ({m},{i},{n}) at degrees ({a},{b}) is {}x{}, expected {rows}x{cols}",
                    mat.rows, mat.cols
                ));
            }
        }
    }
    if !failures.is_empty() {
        // Shapes are wrong, so the remaining products would panic.
        return failures;
    }
    let block = |m: usize, i: usize, n: usize, a: Degree, b: Degree| -> Matrix {
        match x.block_ref(m, i, n, a, b) {
            Some(mat) => mat.clone(),
            None => Matrix::zero(field, xdim(m + n - 1, a + b), xdim(m, a) * odim(n, b)),
        }
    };
    for (m, rm) in x.underlying.arity_iter() {
        for a in rm.complex.space.support() {
            let dm = xdim(m, a);
            if dm == 0 {
                continue;
            }
            let unit_side = Matrix::identity(field, dm).kron(&o.unit);
            for i in 1..=m {
                if block(m, i, 1, a, 0).mul(&unit_side) != Matrix::identity(field, dm) {
                    failures.push(format!("unit law fails at arity {m}, slot {i}, degree {a}"));
                }
            }
        }
    }
    for (m, rm) in x.underlying.arity_iter() {
        for (n, rn) in o.underlying.arity_iter() {
            let Some(rout) = x.underlying.arity(m + n - 1) else {
                continue;
            };
            for i in 1..=m {
                for a in rm.complex.space.support() {
                    for b in rn.complex.space.support() {
                        let (da, db) = (xdim(m, a), odim(n, b));
                        if da * db == 0 || xdim(m + n - 1, a + b) == 0 {
                            continue;
                        }
                        let comp = block(m, i, n, a, b);
                        let ida = Matrix::identity(field, da);
                        let idb = Matrix::identity(field, db);
                        for u in 0..n.saturating_sub(1) {
                            let lhs = rout.transposition(i - 1 + u, a + b).to_dense().mul(&comp);
                            let rhs = comp.mul(&ida.kron(&rn.transposition(u, b).to_dense()));
                            if lhs != rhs {
                                failures.push(format!(
                                    "inner equivariance fails at ({m},{i},{n}), degrees ({a},{b}), generator {u}"
                                ));
                            }
                        }
                        for t in 0..m.saturating_sub(1) {
                            let si = if i == t + 1 {
                                t + 2
                            } else if i == t + 2 {
                                t + 1
                            } else {
                                i
                            };
                            let mut sigma: Vec<usize> = (0..m).collect();
                            sigma.swap(t, t + 1);
                            let blow = operad::blowup_perm(&sigma, i, n);
                            let action =
                                rout.perm_action(&blow).expect("blowup is a permutation");
                            let rho = action
                                .get(&(a + b))
                                .map(SparseMat::to_dense)
                                .unwrap_or_else(|| {
                                    Matrix::identity(field, xdim(m + n - 1, a + b))
                                });
                            let lhs = block(m, si, n, a, b)
                                .mul(&rm.transposition(t, a).to_dense().kron(&idb));
                            let rhs = rho.mul(&comp);
                            if lhs != rhs {
                                failures.push(format!(
                                    "outer equivariance fails at ({m},{i},{n}), degrees ({a},{b}), generator {t}"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    failures
}

/// A strict chain of canonically labeled surjections underlying a bar cell.
///
/// `maps[t]` sends level `t + 1` to level `t` by parent index, and the last
/// map attaches the `arity` leaves.  Every level is labeled so that elements
/// are ordered by their smallest leaf, which makes each map a
/// restricted-growth array; all maps except the leaf attachment are strictly
/// non-bijective.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SurjectionChain {
    pub arity: usize,
    pub maps: Vec<Vec<usize>>,
}

impl SurjectionChain {
    /// Number of inner levels (one less than the number of maps).
    pub fn levels(&self) -> usize {
        self.maps.len() - 1
    }

    /// Checks sizes, surjectivity, canonical labeling, and strictness.
    pub fn validate(&self) -> Result<(), String> {
        if self.maps.is_empty() {
            return Err("a chain needs at least the leaf attachment".to_string());
        }
        if self.maps.last().unwrap().len() != self.arity {
            return Err("leaf count mismatch".to_string());
        }
        for (t, map) in self.maps.iter().enumerate() {
            if map.is_empty() {
                return Err(format!("map {t} is empty"));
            }
            let mut seen: i64 = -1;
            for &v in map {
                if (v as i64) > seen + 1 {
                    return Err(format!("map {t} is not a restricted-growth array"));
                }
                if (v as i64) == seen + 1 {
                    seen += 1;
                }
            }
            let target = (seen + 1) as usize;
            if t + 1 < self.maps.len() && target == map.len() {
                return Err(format!("inner map {t} is bijective"));
            }
            if t > 0 && self.maps[t - 1].len() != target {
                return Err(format!("map {t} does not match the size of level {t}"));
            }
        }
        Ok(())
    }
}

/// A decorated chain: one basis element of the bar complex.  `decs[t][j]`
/// decorates element `j` of level `t` by a basis element whose arity is the
/// fiber size of `maps[t]` over `j`; the root decorates the top level.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Cell {
    chain: SurjectionChain,
    root: (Degree, u32),
    decs: Vec<Vec<(Degree, u32)>>,
}

impl Cell {
    fn degree(&self) -> Degree {
        let mut d = (self.chain.maps.len() - 1) as Degree + self.root.0;
        for level in &self.decs {
            for &(e, _) in level {
                d += e;
            }
        }
        d
    }

    fn label(&self) -> String {
        let maps = self
            .chain
            .maps
            .iter()
            .map(|m| join_nums(m))
            .collect::<Vec<_>>()
            .join("/");
        let decs = self
            .decs
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|(d, i)| format!("{d}.{i}"))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";");
        format!("{maps}|r{}.{}|{decs}", self.root.0, self.root.1)
    }
}

fn join_nums(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// Cells of one arity, indexed per degree in canonical order.
struct CellTable {
    by_degree: BTreeMap<Degree, Vec<Cell>>,
    index: BTreeMap<Cell, u32>,
}

impl CellTable {
    fn from_cells(cells: Vec<Cell>) -> CellTable {
        let mut by_degree: BTreeMap<Degree, Vec<Cell>> = BTreeMap::new();
        for c in cells {
            by_degree.entry(c.degree()).or_default().push(c);
        }
        let mut index = BTreeMap::new();
        for list in by_degree.values_mut() {
            list.sort();
            for (j, c) in list.iter().enumerate() {
                index.insert(c.clone(), j as u32);
            }
        }
        CellTable { by_degree, index }
    }

    fn dim(&self, deg: Degree) -> usize {
        self.by_degree.get(&deg).map_or(0, Vec::len)
    }

    fn position(&self, cell: &Cell) -> u32 {
        *self
            .index
            .get(cell)
            .expect("structure maps left the enumerated basis")
    }
}

/// Sign of a permutation of graded factors: `perm[j]` is the new position of
/// factor `j`, and each crossing of two odd factors contributes a sign.
fn koszul_perm_sign(field: FieldSpec, degs: &[Degree], perm: &[usize]) -> Scalar {
    let mut odd_crossings = 0i64;
    for j in 0..perm.len() {
        for k in (j + 1)..perm.len() {
            if perm[j] > perm[k] && degs[j] % 2 != 0 && degs[k] % 2 != 0 {
                odd_crossings += 1;
            }
        }
    }
    field.sign(odd_crossings)
}

/// Ranks of distinct values: `out[g]` is the position of `vals[g]` in sorted
/// order.
fn ranks(vals: &[usize]) -> Vec<usize> {
    let mut sorted = vals.to_vec();
    sorted.sort_unstable();
    vals.iter()
        .map(|v| sorted.binary_search(v).expect("distinct values"))
        .collect()
}

fn fibers(map: &[usize], parents: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); parents];
    for (x, &p) in map.iter().enumerate() {
        out[p].push(x);
    }
    out
}

/// `x ↦ lower[upper[x]]`.
fn compose_maps(upper: &[usize], lower: &[usize]) -> Vec<usize> {
    upper.iter().map(|&x| lower[x]).collect()
}

fn is_identity_perm(p: &[usize]) -> bool {
    p.iter().enumerate().all(|(j, &v)| j == v)
}

/// All index tuples below the given bounds, odometer order.
fn cartesian(lens: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &len in lens {
        let mut next = Vec::with_capacity(out.len() * len);
        for base in &out {
            for j in 0..len {
                let mut row = base.clone();
                row.push(j);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

fn mul_vec(field: FieldSpec, m: &SparseMat, v: &[(u32, Scalar)]) -> Vec<(u32, Scalar)> {
    let mut acc: BTreeMap<u32, Scalar> = BTreeMap::new();
    for (col, c) in v {
        for (row, a) in &m.col_data[*col as usize] {
            let term = field.mul(c, a);
            let entry = acc.entry(*row).or_insert_with(|| field.zero());
            *entry = field.add(entry, &term);
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn add_term(acc: &mut BTreeMap<Cell, Scalar>, field: FieldSpec, cell: Cell, c: Scalar) {
    let entry = acc.entry(cell).or_insert_with(|| field.zero());
    *entry = field.add(entry, &c);
}

/// Convention knob: how an input relabeling (old position to new position)
/// is fed to a stored representation.
fn relabel_perm(tau: &[usize]) -> Vec<usize> {
    tau.to_vec()
}

/// Which sequence a decoration or composite lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Factor {
    Module,
    Operad,
}

struct BarBuilder<'a> {
    x: &'a OpModule,
    o: &'a Operad,
    y: LeftModule,
    field: FieldSpec,
    /// Memo of upward chains of strict canonical surjections, per source size.
    chains: BTreeMap<usize, Rc<Vec<Vec<Vec<usize>>>>>,
    /// Cache of permutation actions, keyed by target sequence, arity, and
    /// relabeling.
    perms: BTreeMap<(Factor, usize, Vec<usize>), Rc<ActionMaps>>,
}

impl<'a> BarBuilder<'a> {
    fn new(x: &'a OpModule, o: &'a Operad, y: LeftModule) -> BarBuilder<'a> {
        BarBuilder {
            x,
            o,
            y,
            field: o.field(),
            chains: BTreeMap::new(),
            perms: BTreeMap::new(),
        }
    }

    fn seq_slots(rep: Option<&SymRep>) -> Vec<(Degree, u32)> {
        let mut out = Vec::new();
        if let Some(r) = rep {
            for d in r.complex.space.support() {
                for j in 0..r.complex.space.dim(d) {
                    out.push((d, j as u32));
                }
            }
        }
        out
    }

    fn x_slots(&self, k: usize) -> Vec<(Degree, u32)> {
        Self::seq_slots(self.x.underlying.arity(k))
    }

    fn o_slots(&self, k: usize) -> Vec<(Degree, u32)> {
        Self::seq_slots(self.o.underlying.arity(k))
    }

    fn y_slots(&self, k: usize) -> Vec<(Degree, u32)> {
        match self.y {
            LeftModule::Trivial => {
                if k == 1 {
                    vec![(0, 0)]
                } else {
                    Vec::new()
                }
            }
            LeftModule::Regular => self.o_slots(k),
        }
    }

    /// Upward chains of strict canonical surjections starting at `[k]`,
    /// including the empty chain.
    fn chains(&mut self, k: usize) -> Rc<Vec<Vec<Vec<usize>>>> {
        for kk in 1..=k {
            if self.chains.contains_key(&kk) {
                continue;
            }
            let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
            let leaves: Vec<u32> = (0..kk as u32).collect();
            for smaller in 1..kk {
                let tails = self.chains.get(&smaller).unwrap().clone();
                for blocks in operad::partitions_of(&leaves, smaller) {
                    let mut h = vec![0usize; kk];
                    for (bi, block) in blocks.iter().enumerate() {
                        for &v in block {
                            h[v as usize] = bi;
                        }
                    }
                    for tail in tails.iter() {
                        let mut chain = Vec::with_capacity(tail.len() + 1);
                        chain.push(h.clone());
                        chain.extend(tail.iter().cloned());
                        out.push(chain);
                    }
                }
            }
            self.chains.insert(kk, Rc::new(out));
        }
        self.chains.get(&k).unwrap().clone()
    }

    fn enumerate_cells(&mut self, n: usize) -> CellTable {
        let mut cells = Vec::new();
        let leaves: Vec<u32> = (0..n as u32).collect();
        for k in 1..=n {
            for blocks in operad::partitions_of(&leaves, k) {
                let mut h = vec![0usize; n];
                let mut fiber_arity = vec![0usize; k];
                for (bi, block) in blocks.iter().enumerate() {
                    fiber_arity[bi] = block.len();
                    for &v in block {
                        h[v as usize] = bi;
                    }
                }
                if fiber_arity.iter().any(|&a| self.y_slots(a).is_empty()) {
                    continue;
                }
                let tails = self.chains(k);
                for tail in tails.iter() {
                    let mut maps: Vec<Vec<usize>> = tail.iter().rev().cloned().collect();
                    maps.push(h.clone());
                    let root_arity = maps[0].iter().copied().max().unwrap() + 1;
                    let root_opts = self.x_slots(root_arity);
                    if root_opts.is_empty() {
                        continue;
                    }
                    let s = maps.len() - 1;
                    let mut slot_opts: Vec<Vec<(Degree, u32)>> = vec![root_opts];
                    let mut level_sizes = Vec::with_capacity(s + 1);
                    let mut alive = true;
                    for (t, map) in maps.iter().enumerate() {
                        let level_len = if t == 0 { root_arity } else { maps[t - 1].len() };
                        level_sizes.push(level_len);
                        let fib = fibers(map, level_len);
                        for member in fib.iter().take(level_len) {
                            let a = member.len();
                            let opts = if t == s {
                                self.y_slots(a)
                            } else {
                                self.o_slots(a)
                            };
                            if opts.is_empty() {
                                alive = false;
                                break;
                            }
                            slot_opts.push(opts);
                        }
                        if !alive {
                            break;
                        }
                    }
                    if !alive {
                        continue;
                    }
                    let lens: Vec<usize> = slot_opts.iter().map(Vec::len).collect();
                    for pick in cartesian(&lens) {
                        let root = slot_opts[0][pick[0]];
                        let mut decs = Vec::with_capacity(s + 1);
                        let mut pos = 1;
                        for &len in &level_sizes {
                            let mut level = Vec::with_capacity(len);
                            for _ in 0..len {
                                level.push(slot_opts[pos][pick[pos]]);
                                pos += 1;
                            }
                            decs.push(level);
                        }
                        cells.push(Cell {
                            chain: SurjectionChain {
                                arity: n,
                                maps: maps.clone(),
                            },
                            root,
                            decs,
                        });
                    }
                }
            }
        }
        CellTable::from_cells(cells)
    }

    /// Iterated partial composition of `parent` with `args`, consumed left to
    /// right; the running slot offset keeps every application sign-free.
    fn gamma(
        &self,
        out: Factor,
        parent: (usize, (Degree, u32)),
        args: &[(usize, (Degree, u32))],
    ) -> Vec<((Degree, u32), Scalar)> {
        let field = self.field;
        let mut terms: Vec<((Degree, u32), Scalar)> = vec![(parent.1, field.one())];
        let mut arity = parent.0;
        let mut off = 0usize;
        for (j, &(k, (bdeg, bidx))) in args.iter().enumerate() {
            let slot = j + 1 + off;
            let dim_b = self
                .o
                .underlying
                .arity(k)
                .map_or(0, |r| r.complex.space.dim(bdeg));
            if dim_b == 0 {
                return Vec::new();
            }
            let mut next: BTreeMap<(Degree, u32), Scalar> = BTreeMap::new();
            for ((adeg, aidx), c) in &terms {
                let block = match out {
                    Factor::Module => self.x.block_ref(arity, slot, k, *adeg, bdeg),
                    Factor::Operad => self.o.comp_block_ref(arity, slot, k, *adeg, bdeg),
                };
                let Some(mat) = block else { continue };
                let col = (*aidx as usize) * dim_b + bidx as usize;
                for r in 0..mat.rows {
                    let v = mat.get(r, col);
                    if v.is_zero() {
                        continue;
                    }
                    let key = (adeg + bdeg, r as u32);
                    let e = next.entry(key).or_insert_with(|| field.zero());
                    *e = field.add(e, &field.mul(c, v));
                }
            }
            terms = next.into_iter().filter(|(_, c)| !c.is_zero()).collect();
            if terms.is_empty() {
                return terms;
            }
            arity += k - 1;
            off += k - 1;
        }
        terms
    }

    fn perm_maps(&mut self, kind: Factor, arity: usize, tau: &[usize]) -> Rc<ActionMaps> {
        let key = (kind, arity, tau.to_vec());
        if let Some(m) = self.perms.get(&key) {
            return m.clone();
        }
        let word = relabel_perm(tau);
        let rep = match kind {
            Factor::Module => self.x.underlying.arity(arity),
            Factor::Operad => self.o.underlying.arity(arity),
        };
        let maps = match rep {
            Some(r) => r.perm_action(&word).expect("relabeling is a permutation"),
            None => ActionMaps::new(),
        };
        let rc = Rc::new(maps);
        self.perms.insert(key, rc.clone());
        rc
    }

    /// Applies the input relabeling `tau` through the stored action of the
    /// target sequence.
    fn relabel(
        &mut self,
        kind: Factor,
        arity: usize,
        tau: &[usize],
        terms: Vec<((Degree, u32), Scalar)>,
    ) -> Vec<((Degree, u32), Scalar)> {
        if is_identity_perm(tau) {
            return terms;
        }
        let maps = self.perm_maps(kind, arity, tau);
        let field = self.field;
        let mut out: BTreeMap<(Degree, u32), Scalar> = BTreeMap::new();
        for ((deg, idx), c) in terms {
            match maps.get(&deg) {
                Some(m) => {
                    for (r, v) in &m.col_data[idx as usize] {
                        let e = out.entry((deg, *r)).or_insert_with(|| field.zero());
                        *e = field.add(e, &field.mul(&c, v));
                    }
                }
                None => {
                    let e = out.entry((deg, idx)).or_insert_with(|| field.zero());
                    *e = field.add(e, &c);
                }
            }
        }
        out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// The full differential of one cell: level merges with simplicial signs
    /// plus the internal differentials with the total-complex sign.
    fn differential_of(&mut self, cell: &Cell) -> BTreeMap<Cell, Scalar> {
        let field = self.field;
        let n = cell.chain.arity;
        let s = cell.chain.maps.len() - 1;
        let maps = cell.chain.maps.clone();
        let mut acc: BTreeMap<Cell, Scalar> = BTreeMap::new();

        // Face zero: the root absorbs level zero.
        if s >= 1 {
            let b0 = cell.decs[0].len();
            let fib = fibers(&maps[0], b0);
            let args: Vec<(usize, (Degree, u32))> = (0..b0)
                .map(|j| (fib[j].len(), cell.decs[0][j]))
                .collect();
            let terms = self.gamma(Factor::Module, (b0, cell.root), &args);
            if !terms.is_empty() {
                let grouped: Vec<usize> = fib.iter().flatten().copied().collect();
                let tau = ranks(&grouped);
                let terms = self.relabel(Factor::Module, maps[0].len(), &tau, terms);
                for ((deg, idx), c) in terms {
                    let chain = SurjectionChain {
                        arity: n,
                        maps: maps[1..].to_vec(),
                    };
                    let decs = cell.decs[1..].to_vec();
                    add_term(
                        &mut acc,
                        field,
                        Cell {
                            chain,
                            root: (deg, idx),
                            decs,
                        },
                        c,
                    );
                }
            }
        }

        // Faces merging level i - 1 with level i; the last one runs through
        // the left slot.
        for i in 1..=s {
            if i == s && self.y == LeftModule::Trivial {
                continue;
            }
            let parents = &cell.decs[i - 1];
            let children = &cell.decs[i];
            let pfib = fibers(&maps[i - 1], parents.len());
            let cfib = fibers(&maps[i], children.len());
            let m = parents.len();
            let mut degs: Vec<Degree> = parents.iter().map(|d| d.0).collect();
            degs.extend(children.iter().map(|d| d.0));
            let mut perm = vec![0usize; degs.len()];
            let mut pos = 0;
            for p in 0..m {
                perm[p] = pos;
                pos += 1;
                for &c in &pfib[p] {
                    perm[m + c] = pos;
                    pos += 1;
                }
            }
            let regroup = koszul_perm_sign(field, &degs, &perm);
            let mut options: Vec<Vec<((Degree, u32), Scalar)>> = Vec::with_capacity(m);
            let mut dead = false;
            for p in 0..m {
                let args: Vec<(usize, (Degree, u32))> = pfib[p]
                    .iter()
                    .map(|&c| (cfib[c].len(), children[c]))
                    .collect();
                let terms = self.gamma(Factor::Operad, (pfib[p].len(), parents[p]), &args);
                if terms.is_empty() {
                    dead = true;
                    break;
                }
                let grouped: Vec<usize> = pfib[p]
                    .iter()
                    .flat_map(|&c| cfib[c].iter().copied())
                    .collect();
                let tau = ranks(&grouped);
                let terms = self.relabel(Factor::Operad, grouped.len(), &tau, terms);
                if terms.is_empty() {
                    dead = true;
                    break;
                }
                options.push(terms);
            }
            if dead {
                continue;
            }
            let mut new_maps = maps.clone();
            new_maps[i - 1] = compose_maps(&maps[i], &maps[i - 1]);
            new_maps.remove(i);
            let face_sign = field.mul(&field.sign(i as i64), &regroup);
            let lens: Vec<usize> = options.iter().map(Vec::len).collect();
            for pick in cartesian(&lens) {
                let mut coef = face_sign.clone();
                let mut level = Vec::with_capacity(m);
                for (p, &j) in pick.iter().enumerate() {
                    let ((deg, idx), ref c) = options[p][j];
                    level.push((deg, idx));
                    coef = field.mul(&coef, c);
                }
                if coef.is_zero() {
                    continue;
                }
                let mut decs = cell.decs.clone();
                decs[i - 1] = level;
                decs.remove(i);
                add_term(
                    &mut acc,
                    field,
                    Cell {
                        chain: SurjectionChain {
                            arity: n,
                            maps: new_maps.clone(),
                        },
                        root: cell.root,
                        decs,
                    },
                    coef,
                );
            }
        }

        // Internal differentials, with the total-complex sign and the usual
        // prefix signs over earlier tensor factors.
        let int_sign = field.sign(s as i64);
        let root_arity = cell.decs[0].len();
        if let Some(rep) = self.x.underlying.arity(root_arity) {
            if rep.complex.has_nonzero_d(cell.root.0) {
                let d = rep.complex.d_sparse(cell.root.0);
                for (r, v) in &d.col_data[cell.root.1 as usize] {
                    let mut cell2 = cell.clone();
                    cell2.root = (cell.root.0 - 1, *r);
                    add_term(&mut acc, field, cell2, field.mul(&int_sign, v));
                }
            }
        }
        let mut prefix: i64 = cell.root.0 as i64;
        for t in 0..=s {
            let fib = fibers(&maps[t], cell.decs[t].len());
            for j in 0..cell.decs[t].len() {
                let (e, idx) = cell.decs[t][j];
                let arity = fib[j].len();
                let rep_opt = if t == s {
                    match self.y {
                        LeftModule::Trivial => None,
                        LeftModule::Regular => self.o.underlying.arity(arity),
                    }
                } else {
                    self.o.underlying.arity(arity)
                };
                if let Some(rep) = rep_opt {
                    if rep.complex.has_nonzero_d(e) {
                        let d = rep.complex.d_sparse(e);
                        let sgn = field.mul(&int_sign, &field.sign(prefix));
                        for (r, v) in &d.col_data[idx as usize] {
                            let mut cell2 = cell.clone();
                            cell2.decs[t][j] = (e - 1, *r);
                            add_term(&mut acc, field, cell2, field.mul(&sgn, v));
                        }
                    }
                }
                prefix += e as i64;
            }
        }
        acc.retain(|_, c| !c.is_zero());
        acc
    }

    /// Image of a cell under the adjacent transposition `s_t` of the leaves.
    fn action_of(&mut self, cell: &Cell, t: usize) -> BTreeMap<Cell, Scalar> {
        let field = self.field;
        let n = cell.chain.arity;
        let s = cell.chain.maps.len() - 1;
        let maps = cell.chain.maps.clone();
        let mut sigma: Vec<usize> = (0..n).collect();
        sigma.swap(t, t + 1);
        // Composite projections from the leaves to every level.
        let mut comps: Vec<Vec<usize>> = vec![Vec::new(); s + 2];
        comps[s + 1] = (0..n).collect();
        for u in (0..=s).rev() {
            comps[u] = comps[u + 1].iter().map(|&l| maps[u][l]).collect();
        }
        // New labels per level: order elements by their smallest relabeled
        // leaf.
        let mut pis: Vec<Vec<usize>> = Vec::with_capacity(s + 2);
        for u in 0..=s + 1 {
            let size = if u == s + 1 { n } else { cell.decs[u].len() };
            let mut mins = vec![usize::MAX; size];
            for l in 0..n {
                let j = comps[u][l];
                mins[j] = mins[j].min(sigma[l]);
            }
            pis.push(ranks(&mins));
        }
        let mut new_maps = Vec::with_capacity(s + 1);
        for u in 0..=s {
            let src = if u == s { n } else { cell.decs[u + 1].len() };
            let mut nm = vec![0usize; src];
            for x in 0..src {
                nm[pis[u + 1][x]] = pis[u][maps[u][x]];
            }
            new_maps.push(nm);
        }
        // Koszul sign from reordering each level's decorations.
        let mut sign = field.one();
        for u in 0..=s {
            let degs: Vec<Degree> = cell.decs[u].iter().map(|d| d.0).collect();
            sign = field.mul(&sign, &koszul_perm_sign(field, &degs, &pis[u]));
        }
        let root_terms = self.relabel(
            Factor::Module,
            cell.decs[0].len(),
            &pis[0],
            vec![(cell.root, field.one())],
        );
        let mut slot_terms: Vec<Vec<((Degree, u32), Scalar)>> = vec![root_terms];
        let mut placements: Vec<(usize, usize)> = Vec::new();
        for u in 0..=s {
            let fib = fibers(&maps[u], cell.decs[u].len());
            for j in 0..cell.decs[u].len() {
                let images: Vec<usize> = fib[j].iter().map(|&x| pis[u + 1][x]).collect();
                let tau = ranks(&images);
                let terms = self.relabel(
                    Factor::Operad,
                    fib[j].len(),
                    &tau,
                    vec![(cell.decs[u][j], field.one())],
                );
                slot_terms.push(terms);
                placements.push((u, pis[u][j]));
            }
        }
        let lens: Vec<usize> = slot_terms.iter().map(Vec::len).collect();
        let chain = SurjectionChain {
            arity: n,
            maps: new_maps,
        };
        let mut out = BTreeMap::new();
        for pick in cartesian(&lens) {
            let &((rdeg, ridx), ref c0) = &slot_terms[0][pick[0]];
            let mut coef = field.mul(&sign, c0);
            let mut decs: Vec<Vec<(Degree, u32)>> = cell
                .decs
                .iter()
                .map(|level| vec![(0, 0); level.len()])
                .collect();
            for (k, &(u, newpos)) in placements.iter().enumerate() {
                let &((d, idx), ref c) = &slot_terms[k + 1][pick[k + 1]];
                decs[u][newpos] = (d, idx);
                coef = field.mul(&coef, c);
            }
            if coef.is_zero() {
                continue;
            }
            add_term(
                &mut out,
                field,
                Cell {
                    chain: chain.clone(),
                    root: (rdeg, ridx),
                    decs,
                },
                coef,
            );
        }
        out
    }

    fn build_arity(&mut self, n: usize) -> Result<Option<BarArity>, KoszulError> {
        let table = self.enumerate_cells(n);
        if table.by_degree.is_empty() {
            return Ok(None);
        }
        let field = self.field;
        let mut space = GradedSpace::new(field);
        for (&deg, cells) in &table.by_degree {
            space.set_basis(deg, cells.iter().map(Cell::label).collect());
        }
        let mut diff: BTreeMap<Degree, SparseMat> = BTreeMap::new();
        for (&deg, cells) in &table.by_degree {
            let rows = table.dim(deg - 1);
            let mut cols = Vec::with_capacity(cells.len());
            for cell in cells {
                let terms = self.differential_of(cell);
                let mut col = Vec::with_capacity(terms.len());
                for (target, v) in terms {
                    debug_assert_eq!(target.degree(), deg - 1);
                    col.push((table.position(&target), v));
                }
                cols.push(col);
            }
            diff.insert(deg, SparseMat::from_cols(field, rows, cols));
        }
        let complex = ChainComplex::new_sparse(space, diff)?;
        let mut transpositions: Vec<ActionMaps> = Vec::new();
        for t in 0..n.saturating_sub(1) {
            let mut maps = ActionMaps::new();
            for (&deg, cells) in &table.by_degree {
                let mut cols = Vec::with_capacity(cells.len());
                for cell in cells {
                    let terms = self.action_of(cell, t);
                    let mut col = Vec::with_capacity(terms.len());
                    for (target, v) in terms {
                        debug_assert_eq!(target.degree(), deg);
                        col.push((table.position(&target), v));
                    }
                    cols.push(col);
                }
                maps.insert(deg, SparseMat::from_cols(field, cells.len(), cols));
            }
            transpositions.push(maps);
        }
        let rep = SymRep::new(n, complex, transpositions)?;
        Ok(Some(BarArity { table, rep }))
    }
}

struct BarArity {
    table: CellTable,
    rep: SymRep,
}

struct BarData {
    field: FieldSpec,
    arities: BTreeMap<usize, BarArity>,
}

fn build_bar(
    x: &OpModule,
    o: &Operad,
    y: LeftModule,
    max_arity: usize,
) -> Result<BarData, KoszulError> {
    if !o.reduced || !o.underlying.is_reduced() {
        return Err(KoszulError::NotReduced);
    }
    if x.underlying.field != o.field() {
        return Err(KoszulError::SymSeq(SymSeqError::FieldMismatch));
    }
    if x.underlying.window != o.window() {
        return Err(KoszulError::SymSeq(SymSeqError::WindowMismatch));
    }
    let failures = check_right_module(x, o);
    if !failures.is_empty() {
        return Err(KoszulError::NonEquivariantModule(failures.join("; ")));
    }
    let mut builder = BarBuilder::new(x, o, y);
    let mut arities = BTreeMap::new();
    for n in 1..=max_arity {
        if let Some(ar) = builder.build_arity(n)? {
            arities.insert(n, ar);
        }
    }
    Ok(BarData {
        field: o.field(),
        arities,
    })
}

/// The bar complex as a symmetric sequence, one basis element per decorated
/// chain.
#[derive(Clone, Debug)]
pub struct BarComplex {
    pub underlying: SymSeqObject,
}

/// Builds the two-sided bar complex `B(X, O, Y)` over `window`.
pub fn bar_complex(
    x: &OpModule,
    o: &Operad,
    y: LeftModule,
    window: &Window,
) -> Result<BarComplex, KoszulError> {
    let data = build_bar(x, o, y, window.max_arity)?;
    let mut underlying = SymSeqObject::new(data.field, *window);
    for (_, ar) in data.arities {
        underlying.set_arity(ar.rep)?;
    }
    Ok(BarComplex { underlying })
}

/// Homology of the bar complex `B(X, O, Y)`, assembled over `window`.
pub fn relative_compose_homology(
    x: &OpModule,
    o: &Operad,
    y: LeftModule,
    window: &Window,
) -> Result<SymSeqObject, KoszulError> {
    let data = build_bar(x, o, y, window.max_arity)?;
    let mut out = SymSeqObject::new(data.field, *window);
    for ar in data.arities.values() {
        let h = homology_rep(&ar.rep)?;
        if h.total_dim() > 0 {
            out.set_arity(h)?;
        }
    }
    Ok(out)
}

/// Homology of one representation, with canonical triangular representative
/// cycles and the projection data needed to transport structure maps.
struct HomologyTransfer {
    rep: SymRep,
    /// Representative cycles per degree, normalized with leading entry one.
    reps: BTreeMap<Degree, Vec<Vec<(u32, Scalar)>>>,
    /// Pivot row of each representative.
    pivots: BTreeMap<Degree, Vec<u32>>,
    /// Reducers spanning the boundaries in each degree.
    bounds: BTreeMap<Degree, SparseReducer>,
}

impl HomologyTransfer {
    /// Coordinates of a chain in the homology basis; boundaries vanish.
    fn project(&self, deg: Degree, v: &[(u32, Scalar)], field: FieldSpec) -> Vec<(u32, Scalar)> {
        let Some(cycles) = self.reps.get(&deg) else {
            return Vec::new();
        };
        let reduced = self.bounds[&deg].reduce(v.to_vec());
        peel(field, cycles, &self.pivots[&deg], &reduced)
    }
}

/// Back-substitution against the triangular representatives: reads only the
/// pivot rows, in descending order.
fn peel(
    field: FieldSpec,
    cycles: &[Vec<(u32, Scalar)>],
    pivots: &[u32],
    w: &[(u32, Scalar)],
) -> Vec<(u32, Scalar)> {
    let at = |v: &[(u32, Scalar)], row: u32| -> Scalar {
        match v.binary_search_by_key(&row, |e| e.0) {
            Ok(p) => v[p].1.clone(),
            Err(_) => field.zero(),
        }
    };
    let mut order: Vec<usize> = (0..cycles.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(pivots[k]));
    let mut chosen: Vec<(usize, Scalar)> = Vec::new();
    for &k in &order {
        let mut c = at(w, pivots[k]);
        for (j, cj) in &chosen {
            let r = at(&cycles[*j], pivots[k]);
            if !r.is_zero() {
                c = field.sub(&c, &field.mul(cj, &r));
            }
        }
        if !c.is_zero() {
            chosen.push((k, c));
        }
    }
    let mut out: Vec<(u32, Scalar)> = chosen.into_iter().map(|(k, c)| (k as u32, c)).collect();
    out.sort_by_key(|e| e.0);
    out
}

fn homology_transfer(rep: &SymRep) -> Result<HomologyTransfer, SymSeqError> {
    let field = rep.field();
    let c = &rep.complex;
    let support = c.space.support();
    let mut rank: BTreeMap<Degree, usize> = BTreeMap::new();
    for &deg in &support {
        if c.has_nonzero_d(deg) {
            rank.insert(deg, sparse_rank(&c.d_sparse(deg)));
        }
    }
    let rk = |d: Degree| rank.get(&d).copied().unwrap_or(0);
    let mut reps: BTreeMap<Degree, Vec<Vec<(u32, Scalar)>>> = BTreeMap::new();
    let mut pivots: BTreeMap<Degree, Vec<u32>> = BTreeMap::new();
    let mut bounds: BTreeMap<Degree, SparseReducer> = BTreeMap::new();
    let mut space = GradedSpace::new(field);
    for &deg in &support {
        let dim = c.space.dim(deg);
        let h = dim - rk(deg) - rk(deg + 1);
        if h == 0 {
            continue;
        }
        let mut rb = SparseReducer::new(field, dim);
        if c.has_nonzero_d(deg + 1) {
            for col in &c.d_sparse(deg + 1).col_data {
                rb.insert(col.clone());
            }
        }
        let kernel: Vec<Vec<(u32, Scalar)>> = if c.has_nonzero_d(deg) {
            let solved = sparse_solve(&c.d_sparse(deg), true);
            let k = solved.kernel.expect("kernel was requested");
            (0..k.cols)
                .map(|j| {
                    (0..k.rows)
                        .filter_map(|r| {
                            let v = k.get(r, j);
                            (!v.is_zero()).then(|| (r as u32, v.clone()))
                        })
                        .collect()
                })
                .collect()
        } else {
            (0..dim).map(|j| vec![(j as u32, field.one())]).collect()
        };
        let mut rh = SparseReducer::new(field, dim);
        let mut cycles = Vec::with_capacity(h);
        let mut pvs = Vec::with_capacity(h);
        for v in kernel {
            let w = rb.reduce(v);
            if w.is_empty() {
                continue;
            }
            let w = rh.reduce(w);
            if w.is_empty() {
                continue;
            }
            let lead = w.last().unwrap().1.clone();
            let inv = field.inv(&lead).expect("leading entry is nonzero");
            let cycle: Vec<(u32, Scalar)> =
                w.iter().map(|(r, c)| (*r, field.mul(c, &inv))).collect();
            pvs.push(cycle.last().unwrap().0);
            rh.insert(cycle.clone());
            cycles.push(cycle);
        }
        debug_assert_eq!(cycles.len(), h);
        space.set_basis(deg, (0..h).map(|k| format!("h{deg}#{k}")).collect());
        reps.insert(deg, cycles);
        pivots.insert(deg, pvs);
        bounds.insert(deg, rb);
    }
    let hcomplex = ChainComplex::with_zero_diff(space);
    let mut transpositions: Vec<ActionMaps> = Vec::new();
    for t in 0..rep.arity.saturating_sub(1) {
        let mut maps = ActionMaps::new();
        for (&deg, cycles) in &reps {
            let action = rep.transposition(t, deg);
            let mut cols = Vec::with_capacity(cycles.len());
            for v in cycles {
                let image = mul_vec(field, &action, v);
                let reduced = bounds[&deg].reduce(image);
                cols.push(peel(field, cycles, &pivots[&deg], &reduced));
            }
            maps.insert(deg, SparseMat::from_cols(field, cycles.len(), cols));
        }
        transpositions.push(maps);
    }
    let hrep = SymRep::new(rep.arity, hcomplex, transpositions)?;
    Ok(HomologyTransfer {
        rep: hrep,
        reps,
        pivots,
        bounds,
    })
}

/// The homology of a representation's complex, carrying the induced action.
pub fn homology_rep(rep: &SymRep) -> Result<SymRep, SymSeqError> {
    Ok(homology_transfer(rep)?.rep)
}

/// Splits a cell of `B(1, O, 1)` along every level element that carries a
/// contiguous leaf interval while every other strand of its level continues
/// as a unit singleton; those are exactly the splits realized by grafting a
/// cell of arity `m` with one of arity `n = arity - m + 1` at slot `i`.
/// Each split yields the lower half (the level's elements become leaves) and
/// the upper half (the subtree over the split element, relabeled).
fn all_cuts(cell: &Cell) -> Vec<(usize, usize, usize, Cell, Cell)> {
    let s = cell.chain.maps.len() - 1;
    let maps = &cell.chain.maps;
    let nleaves = cell.chain.arity;
    let mut comps: Vec<Vec<usize>> = vec![Vec::new(); s + 2];
    comps[s + 1] = (0..nleaves).collect();
    for u in (0..=s).rev() {
        comps[u] = comps[u + 1].iter().map(|&l| maps[u][l]).collect();
    }
    let mut out = Vec::new();
    for t in 0..=s {
        let m = cell.decs[t].len();
        let mut lo = vec![usize::MAX; m];
        let mut hi = vec![0usize; m];
        let mut count = vec![0usize; m];
        for l in 0..nleaves {
            let j = comps[t][l];
            lo[j] = lo[j].min(l);
            hi[j] = hi[j].max(l);
            count[j] += 1;
        }
        for j0 in 0..m {
            let n = count[j0];
            if hi[j0] - lo[j0] + 1 != n || m + n - 1 != nleaves {
                continue;
            }
            if t == s && n != 1 {
                continue;
            }
            let i = lo[j0] + 1;
            // Lower half: levels above t, with level t as the new leaves.
            let mut lmaps: Vec<Vec<usize>> = maps[0..t].to_vec();
            lmaps.push((0..m).collect());
            let mut ldecs: Vec<Vec<(Degree, u32)>> = cell.decs[0..t].to_vec();
            ldecs.push(vec![(0, 0); m]);
            let lower = Cell {
                chain: SurjectionChain {
                    arity: m,
                    maps: lmaps,
                },
                root: cell.root,
                decs: ldecs,
            };
            // Upper half: the subtree over the split element, relabeled
            // order-preservingly.
            let mut kept: Vec<Vec<usize>> = vec![vec![j0]];
            for u in t..=s {
                let prev = &kept[u - t];
                let src = if u == s {
                    nleaves
                } else {
                    cell.decs[u + 1].len()
                };
                let mut next = Vec::new();
                for x in 0..src {
                    if prev.binary_search(&maps[u][x]).is_ok() {
                        next.push(x);
                    }
                }
                kept.push(next);
            }
            let mut umaps = Vec::with_capacity(s - t + 1);
            for u in t..=s {
                let prev = &kept[u - t];
                let here = &kept[u - t + 1];
                umaps.push(
                    here.iter()
                        .map(|&x| prev.binary_search(&maps[u][x]).unwrap())
                        .collect(),
                );
            }
            let mut udecs: Vec<Vec<(Degree, u32)>> = vec![vec![cell.decs[t][j0]]];
            for u in (t + 1)..=s {
                let here = &kept[u - t];
                udecs.push(here.iter().map(|&x| cell.decs[u][x]).collect());
            }
            let upper = Cell {
                chain: SurjectionChain {
                    arity: n,
                    maps: umaps,
                },
                root: (0, 0),
                decs: udecs,
            };
            out.push((m, i, n, lower, upper));
        }
    }
    out
}

/// Bar dual data: the homology of `B(1, O, 1)` with the cut cocomposition
/// when every arity is concentrated in a single degree.
#[derive(Clone, Debug)]
pub struct KoszulDual {
    pub underlying: SymSeqObject,
    /// Present exactly when no arity in `concentrated` is spread.
    pub cooperad: Option<Cooperad>,
    /// Per arity with nonzero homology: its degree when concentrated, `None`
    /// when the homology spreads over several degrees.
    pub concentrated: BTreeMap<usize, Option<Degree>>,
}

/// The bar dual of a reduced operad with normalized unit.
pub fn koszul_dual(o: &Operad, window: &Window) -> Result<KoszulDual, KoszulError> {
    let field = o.field();
    if o.unit.rows != 1 || o.unit.cols != 1 || o.unit.get(0, 0) != &field.one() {
        return Err(KoszulError::UnitNotNormalized);
    }
    let x = OpModule::trivial(o)?;
    let data = build_bar(&x, o, LeftModule::Trivial, window.max_arity)?;
    let mut transfers: BTreeMap<usize, HomologyTransfer> = BTreeMap::new();
    let mut concentrated = BTreeMap::new();
    let mut underlying = SymSeqObject::new(field, *window);
    for (&n, ar) in &data.arities {
        let tr = homology_transfer(&ar.rep)?;
        let support = tr.rep.complex.space.support();
        match support.len() {
            0 => continue,
            1 => {
                concentrated.insert(n, Some(support[0]));
            }
            _ => {
                concentrated.insert(n, None);
            }
        }
        underlying.set_arity(tr.rep.clone())?;
        transfers.insert(n, tr);
    }
    let cooperad = if concentrated.values().all(Option::is_some) {
        Some(build_cut_cooperad(field, &data, &transfers, &underlying))
    } else {
        None
    };
    Ok(KoszulDual {
        underlying,
        cooperad,
        concentrated,
    })
}

/// Transports the cut coproduct of the bar complex to homology.
fn build_cut_cooperad(
    field: FieldSpec,
    data: &BarData,
    transfers: &BTreeMap<usize, HomologyTransfer>,
    underlying: &SymSeqObject,
) -> Cooperad {
    let hdim =
        |k: usize, d: Degree| underlying.arity(k).map_or(0, |r| r.complex.space.dim(d));
    let mut proj: BTreeMap<(usize, Degree, u32), Rc<Vec<(u32, Scalar)>>> = BTreeMap::new();
    let mut project = |arity: usize, cell: &Cell| -> Rc<Vec<(u32, Scalar)>> {
        let deg = cell.degree();
        let idx = data.arities[&arity].table.position(cell);
        let key = (arity, deg, idx);
        if let Some(v) = proj.get(&key) {
            return v.clone();
        }
        let v = match transfers.get(&arity) {
            Some(tr) => tr.project(deg, &[(idx, field.one())], field),
            None => Vec::new(),
        };
        let rc = Rc::new(v);
        proj.insert(key, rc.clone());
        rc
    };
    let mut cocompositions: BTreeMap<(usize, usize, usize), BilinearBlocks> = BTreeMap::new();
    for (&big, ar) in &data.arities {
        let Some(tr_big) = transfers.get(&big) else {
            continue;
        };
        for (&dd, cycles) in &tr_big.reps {
            let cells = &ar.table.by_degree[&dd];
            // Cut data per cell, resolved to homology coordinates once.
            let mut cellcuts: Vec<Vec<(usize, usize, usize, Degree, Rc<Vec<(u32, Scalar)>>, Rc<Vec<(u32, Scalar)>>)>> =
                Vec::with_capacity(cells.len());
            for cell in cells {
                let mut entry = Vec::new();
                for (m, i, n, lower, upper) in all_cuts(cell) {
                    let a = lower.degree();
                    debug_assert_eq!(dd - a, upper.degree());
                    let pl = project(m, &lower);
                    if pl.is_empty() {
                        continue;
                    }
                    let pu = project(n, &upper);
                    if pu.is_empty() {
                        continue;
                    }
                    entry.push((m, i, n, a, pl, pu));
                }
                cellcuts.push(entry);
            }
            for (col, cyc) in cycles.iter().enumerate() {
                for (cellrow, coef) in cyc {
                    for (m, i, n, a, pl, pu) in &cellcuts[*cellrow as usize] {
                        let b = dd - a;
                        let rb = hdim(*n, b);
                        let blocks = cocompositions.entry((*m, *i, *n)).or_default();
                        let block = blocks.entry((*a, b)).or_insert_with(|| {
                            Matrix::zero(field, hdim(*m, *a) * rb, cycles.len())
                        });
                        for (al, ca) in pl.iter() {
                            for (be, cb) in pu.iter() {
                                let row = (*al as usize) * rb + (*be as usize);
                                let add = field.mul(coef, &field.mul(ca, cb));
                                let cur = block.get(row, col).clone();
                                block.set(row, col, field.add(&cur, &add));
                            }
                        }
                    }
                }
            }
        }
    }
    for blocks in cocompositions.values_mut() {
        blocks.retain(|_, mat| !mat.is_zero());
    }
    cocompositions.retain(|_, blocks| !blocks.is_empty());
    Cooperad {
        underlying: underlying.clone(),
        counit: Matrix::identity(field, 1),
        reduced: true,
        cocompositions,
    }
}

/// One arity of the double-dual comparison.
#[derive(Clone, Debug)]
pub struct DoubleDualRow {
    pub arity: usize,
    pub expected: BTreeMap<Degree, usize>,
    pub computed: BTreeMap<Degree, usize>,
    pub dims_match: bool,
    pub characters_match: bool,
}

#[derive(Clone, Debug)]
pub struct DoubleDualReport {
    pub rows: Vec<DoubleDualRow>,
    pub all_match: bool,
}

/// Takes the bar dual, dualizes it linearly to an operad, takes the bar dual
/// again, and compares dimensions and characters with the original operad.
pub fn double_dual_check(o: &Operad, window: &Window) -> Result<DoubleDualReport, KoszulError> {
    let field = o.field();
    let kd = koszul_dual(o, window)?;
    let Some(coop) = kd.cooperad else {
        let bad = kd
            .concentrated
            .iter()
            .find_map(|(n, v)| v.is_none().then_some(*n))
            .unwrap_or(0);
        return Err(KoszulError::NotFormal(bad));
    };
    let p = operad::dual_operad(&coop)?;
    let x = OpModule::trivial(&p)?;
    let data = build_bar(&x, &p, LeftModule::Trivial, window.max_arity)?;
    let mut rows = Vec::new();
    for n in 1..=window.max_arity {
        let expected_rep = o.underlying.arity(n);
        let expected: BTreeMap<Degree, usize> =
            expected_rep.map_or_else(BTreeMap::new, |r| r.complex.space.dims());
        let computed_rep: Option<SymRep> = match data.arities.get(&n) {
            None => None,
            Some(ar) => {
                let h = homology_rep(&ar.rep)?;
                if h.total_dim() == 0 {
                    None
                } else {
                    let support = h.complex.space.support();
                    let (lo, hi) = (support[0], support[support.len() - 1]);
                    let dw = Window::new(window.max_arity, -hi, -lo)?;
                    Some(operad::dual_rep(n, &h, &dw)?)
                }
            }
        };
        let computed: BTreeMap<Degree, usize> = computed_rep
            .as_ref()
            .map_or_else(BTreeMap::new, |r| r.complex.space.dims());
        let dims_match = expected == computed;
        let mut characters_match = dims_match;
        if dims_match && !expected.is_empty() {
            let er = expected_rep.expect("dims agree and are nonempty");
            let cr = computed_rep.as_ref().expect("dims agree and are nonempty");
            'classes: for sigma in cycle_type_reps(n) {
                let ce = er.character(&sigma)?;
                let cc = cr.character(&sigma)?;
                for d in ce.keys().chain(cc.keys()) {
                    let a = ce.get(d).cloned().unwrap_or_else(|| field.zero());
                    let b = cc.get(d).cloned().unwrap_or_else(|| field.zero());
                    if a != b {
                        characters_match = false;
                        break 'classes;
                    }
                }
            }
        }
        rows.push(DoubleDualRow {
            arity: n,
            expected,
            computed,
            dims_match,
            characters_match,
        });
    }
    let all_match = rows.iter().all(|r| r.dims_match && r.characters_match);
    Ok(DoubleDualReport { rows, all_match })
}

/// One permutation per conjugacy class: consecutive cycles of each partition
/// shape.
pub(crate) fn cycle_type_reps(n: usize) -> Vec<Vec<usize>> {
    let mut shapes = Vec::new();
    int_partitions(n, n, &mut Vec::new(), &mut shapes);
    shapes
        .iter()
        .map(|shape| {
            let mut perm = vec![0usize; n];
            let mut off = 0;
            for &c in shape {
                for j in 0..c {
                    perm[off + j] = off + (j + 1) % c;
                }
                off += c;
            }
            perm
        })
        .collect()
}

fn int_partitions(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if n == 0 {
        out.push(cur.clone());
        return;
    }
    for c in (1..=n.min(max)).rev() {
        cur.push(c);
        int_partitions(n - c, c, cur, out);
        cur.pop();
    }
}

/// One stage of the arity-truncation tower.
#[derive(Clone, Debug)]
pub struct TowerStage {
    pub stage: usize,
    pub homology: SymSeqObject,
    /// Per arity with nonzero homology: whether its norm map is an
    /// isomorphism.
    pub norms: BTreeMap<usize, bool>,
    /// Per arity with nonzero homology: its degree when concentrated.
    pub concentration: BTreeMap<usize, Option<Degree>>,
}

/// Euler bookkeeping for one fiber sequence between consecutive stages.
#[derive(Clone, Debug)]
pub struct LesRow {
    pub from_stage: usize,
    pub arity: usize,
    pub chi_prev: i64,
    pub chi_next: i64,
    pub chi_fiber: i64,
    pub consistent: bool,
}

#[derive(Clone, Debug)]
pub struct TowerReport {
    pub stages: Vec<TowerStage>,
    pub les_rows: Vec<LesRow>,
}

impl TowerReport {
    pub fn all_consistent(&self) -> bool {
        self.les_rows.iter().all(|r| r.consistent)
    }
}

fn chi_of(dims: &BTreeMap<Degree, usize>) -> i64 {
    dims.iter()
        .map(|(d, &x)| if d % 2 == 0 { x as i64 } else { -(x as i64) })
        .sum()
}

/// Bar homology of the arity truncations `O(≤ m)` for `m = 1..=max_stage`,
/// with norm and concentration diagnostics, and Euler consistency of the
/// fiber sequences linking consecutive stages.
pub fn truncation_tower(
    o: &Operad,
    window: &Window,
    max_stage: usize,
) -> Result<TowerReport, KoszulError> {
    if max_stage == 0 || max_stage > window.max_arity {
        return Err(KoszulError::BadStage);
    }
    let field = o.field();
    let mut stages = Vec::with_capacity(max_stage);
    let mut stage_dims: Vec<BTreeMap<usize, BTreeMap<Degree, usize>>> = Vec::new();
    for m in 1..=max_stage {
        let x = OpModule::truncated(o, m)?;
        let data = build_bar(&x, o, LeftModule::Trivial, window.max_arity)?;
        let mut homology = SymSeqObject::new(field, *window);
        let mut norms = BTreeMap::new();
        let mut concentration = BTreeMap::new();
        let mut dims_all = BTreeMap::new();
        for (&k, ar) in &data.arities {
            let h = homology_rep(&ar.rep)?;
            if h.total_dim() == 0 {
                continue;
            }
            let support = h.complex.space.support();
            concentration.insert(
                k,
                if support.len() == 1 {
                    Some(support[0])
                } else {
                    None
                },
            );
            norms.insert(k, norm_map(&h).is_iso);
            dims_all.insert(k, h.complex.space.dims());
            homology.set_arity(h)?;
        }
        stage_dims.push(dims_all);
        stages.push(TowerStage {
            stage: m,
            homology,
            norms,
            concentration,
        });
    }
    let mut les_rows = Vec::new();
    for m in 1..max_stage {
        // The fiber of stage m + 1 over stage m: the arity-(m + 1) component
        // with unit actions only.
        let mut v = SymSeqObject::new(field, o.window());
        if let Some(r) = o.underlying.arity(m + 1) {
            v.set_arity(r.clone())?;
        }
        let f = OpModule::trivial_on(o, &v)?;
        let fdata = build_bar(&f, o, LeftModule::Trivial, window.max_arity)?;
        let mut chi_fiber_by_arity: BTreeMap<usize, i64> = BTreeMap::new();
        for (&k, ar) in &fdata.arities {
            let h = homology_rep(&ar.rep)?;
            if h.total_dim() > 0 {
                chi_fiber_by_arity.insert(k, chi_of(&h.complex.space.dims()));
            }
        }
        for k in 1..=window.max_arity {
            let empty = BTreeMap::new();
            let chi_prev = chi_of(stage_dims[m - 1].get(&k).unwrap_or(&empty));
            let chi_next = chi_of(stage_dims[m].get(&k).unwrap_or(&empty));
            let chi_fiber = chi_fiber_by_arity.get(&k).copied().unwrap_or(0);
            les_rows.push(LesRow {
                from_stage: m,
                arity: k,
                chi_prev,
                chi_next,
                chi_fiber,
                consistent: chi_next == chi_prev + chi_fiber,
            });
        }
    }
    Ok(TowerReport { stages, les_rows })
}
