//! Operads and cooperads at bounded arity.
//!
//! An [`Operad`] is a symmetric sequence equipped with a unit vector and
//! partial composition matrices `∘_i: O_m ⊗ O_n → O_{m+n-1}` stored per
//! degree pair. [`check_operad`] verifies unit, associativity, and
//! equivariance axioms and reports every failing instance. Built-in examples
//! and presented operads (generators with symmetry, modulo Σ-closed tree
//! relations) share the free-operad machinery in this module.
//!
//! Free-operad basis convention, frozen: a basis element is a rooted tree
//! with leaves labeled by distinct inputs and vertices labeled by
//! generators. Children of a vertex whose generator is symmetric or
//! antisymmetric are ordered by minimal leaf (the quotient sign is tracked);
//! children of an unconstrained generator keep their planar order as part of
//! the data.

use std::collections::BTreeMap;
use std::sync::Mutex;

use once_cell::sync::Lazy;
use thiserror::Error;

use crate::field::{FieldSpec, Matrix, Scalar, SparseMat, SparseReducer};
use crate::graded::{ChainComplex, Degree, GradedError, GradedSpace, Window};
use crate::symseq::{ActionMaps, SymRep, SymSeqError, SymSeqObject};

#[derive(Debug, Error, PartialEq)]
pub enum OperadError {
    #[error("generator '{0}' must have arity at least 2")]
    BadGenerator(String),
    #[error("window maximum arity {got} exceeds the supported bound {limit}")]
    WindowTooLarge { got: usize, limit: usize },
    #[error("inconsistent relation: {0}")]
    InconsistentRelation(String),
    #[error("unknown builtin '{0}'")]
    UnknownBuiltin(String),
    #[error("window mismatch: {0}")]
    BadWindow(String),
    #[error(transparent)]
    SymSeq(#[from] SymSeqError),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    None,
    Symmetric,
    Antisymmetric,
}

/// One generator of an operad presentation.
#[derive(Clone, Debug)]
pub struct GenSpec {
    pub label: String,
    pub arity: usize,
    pub degree: Degree,
    pub symmetry: Symmetry,
}

/// A rooted tree monomial: leaves carry 0-based input labels, nodes carry
/// generator indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tree {
    Leaf(u32),
    Node { gen: u32, children: Vec<Tree> },
}

impl Tree {
    pub fn leaf(l: usize) -> Tree {
        Tree::Leaf(l as u32)
    }

    pub fn node(gen: usize, children: Vec<Tree>) -> Tree {
        Tree::Node {
            gen: gen as u32,
            children,
        }
    }
}

/// A relation: an integer combination of tree monomials of one arity and one
/// degree. Terms are canonicalized on input.
#[derive(Clone, Debug)]
pub struct Relation {
    pub terms: Vec<(i64, Tree)>,
}

#[derive(Clone, Debug)]
pub struct OperadPresentation {
    pub generators: Vec<GenSpec>,
    pub relations: Vec<Relation>,
}

fn min_leaf(t: &Tree) -> u32 {
    match t {
        Tree::Leaf(l) => *l,
        Tree::Node { children, .. } => children.iter().map(min_leaf).min().unwrap(),
    }
}

fn tree_degree(gens: &[GenSpec], t: &Tree) -> Degree {
    match t {
        Tree::Leaf(_) => 0,
        Tree::Node { gen, children } => {
            gens[*gen as usize].degree
                + children.iter().map(|c| tree_degree(gens, c)).sum::<Degree>()
        }
    }
}

fn leaf_count(t: &Tree) -> usize {
    match t {
        Tree::Leaf(_) => 1,
        Tree::Node { children, .. } => children.iter().map(leaf_count).sum(),
    }
}

fn contains_leaf(t: &Tree, l: u32) -> bool {
    match t {
        Tree::Leaf(x) => *x == l,
        Tree::Node { children, .. } => children.iter().any(|c| contains_leaf(c, l)),
    }
}

fn render_tree(gens: &[GenSpec], t: &Tree) -> String {
    match t {
        Tree::Leaf(l) => (l + 1).to_string(),
        Tree::Node { gen, children } => {
            let args: Vec<String> = children.iter().map(|c| render_tree(gens, c)).collect();
            format!("{}({})", gens[*gen as usize].label, args.join(","))
        }
    }
}

/// Bubble-sorts children by minimal leaf, accumulating the Koszul sign of
/// each swap and the generator's symmetry sign. Only meaningful for
/// symmetric or antisymmetric generators.
fn sort_children(gens: &[GenSpec], gen: u32, children: &mut [Tree]) -> i64 {
    let sym = gens[gen as usize].symmetry;
    let mut sign = 1i64;
    loop {
        let mut swapped = false;
        for p in 0..children.len().saturating_sub(1) {
            if min_leaf(&children[p]) > min_leaf(&children[p + 1]) {
                let da = tree_degree(gens, &children[p]);
                let db = tree_degree(gens, &children[p + 1]);
                if (da & 1) == 1 && (db & 1) == 1 {
                    sign = -sign;
                }
                if sym == Symmetry::Antisymmetric {
                    sign = -sign;
                }
                children.swap(p, p + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    sign
}

/// Relabels leaves through `map` and re-canonicalizes. Passing the identity
/// canonicalizes an arbitrary input tree.
fn relabel(gens: &[GenSpec], t: &Tree, map: &[usize]) -> (i64, Tree) {
    match t {
        Tree::Leaf(l) => (1, Tree::Leaf(map[*l as usize] as u32)),
        Tree::Node { gen, children } => {
            let mut sign = 1i64;
            let mut ch = Vec::with_capacity(children.len());
            for c in children {
                let (s, c2) = relabel(gens, c, map);
                sign *= s;
                ch.push(c2);
            }
            if gens[*gen as usize].symmetry != Symmetry::None {
                sign *= sort_children(gens, *gen, &mut ch);
            }
            (sign, Tree::Node { gen: *gen, children: ch })
        }
    }
}

fn shift_leaves(t: &Tree, target: u32, amount: u32) -> Tree {
    match t {
        Tree::Leaf(l) => Tree::Leaf(if *l > target { l + amount } else { *l }),
        Tree::Node { gen, children } => Tree::Node {
            gen: *gen,
            children: children.iter().map(|c| shift_leaves(c, target, amount)).collect(),
        },
    }
}

fn add_leaves(t: &Tree, amount: u32) -> Tree {
    match t {
        Tree::Leaf(l) => Tree::Leaf(l + amount),
        Tree::Node { gen, children } => Tree::Node {
            gen: *gen,
            children: children.iter().map(|c| add_leaves(c, amount)).collect(),
        },
    }
}

/// Partial composition of tree monomials: grafts `y` into input `i`
/// (1-based) of `x`. The sign is the Koszul cost of carrying `y` past the
/// later siblings at each vertex on the path to the grafted leaf; leaf
/// renumbering is monotone, so canonical forms are preserved.
fn graft(gens: &[GenSpec], x: &Tree, i: usize, y: &Tree, y_arity: usize) -> (i64, Tree) {
    let target = (i - 1) as u32;
    let y2 = add_leaves(y, target);
    let ydeg = tree_degree(gens, y);
    fn rec(
        gens: &[GenSpec],
        t: &Tree,
        target: u32,
        amount: u32,
        y: &Tree,
        ydeg: Degree,
    ) -> (i64, Tree) {
        match t {
            Tree::Leaf(l) => {
                debug_assert_eq!(*l, target);
                (1, y.clone())
            }
            Tree::Node { gen, children } => {
                let j = children
                    .iter()
                    .position(|c| contains_leaf(c, target))
                    .expect("input index within arity");
                let mut sign = 1i64;
                let mut ch = Vec::with_capacity(children.len());
                for (p, c) in children.iter().enumerate() {
                    if p == j {
                        let (s, c2) = rec(gens, c, target, amount, y, ydeg);
                        sign *= s;
                        ch.push(c2);
                    } else {
                        if p > j && (ydeg & 1) == 1 && (tree_degree(gens, c) & 1) == 1 {
                            sign = -sign;
                        }
                        ch.push(shift_leaves(c, target, amount));
                    }
                }
                (sign, Tree::Node { gen: *gen, children: ch })
            }
        }
    }
    rec(gens, x, target, (y_arity - 1) as u32, &y2, ydeg)
}

/// Canonical basis of one arity of the free operad.
struct FreeArity {
    trees: Vec<Tree>,
    index: BTreeMap<Tree, u32>,
    degrees: Vec<Degree>,
}

fn free_arity(gens: &[GenSpec], n: usize, memo: &mut BTreeMap<Vec<u32>, Vec<Tree>>) -> FreeArity {
    let leaves: Vec<u32> = (0..n as u32).collect();
    let trees = enumerate_trees(gens, &leaves, memo);
    let index = trees.iter().cloned().zip(0u32..).collect();
    let degrees = trees.iter().map(|t| tree_degree(gens, t)).collect();
    FreeArity {
        trees,
        index,
        degrees,
    }
}

fn enumerate_trees(
    gens: &[GenSpec],
    leaves: &[u32],
    memo: &mut BTreeMap<Vec<u32>, Vec<Tree>>,
) -> Vec<Tree> {
    if let Some(hit) = memo.get(leaves) {
        return hit.clone();
    }
    let mut out = Vec::new();
    if leaves.len() == 1 {
        out.push(Tree::Leaf(leaves[0]));
    } else {
        for (gi, g) in gens.iter().enumerate() {
            let k = g.arity;
            if k > leaves.len() {
                continue;
            }
            for part in partitions_of(leaves, k) {
                let orders: Vec<Vec<usize>> = if g.symmetry == Symmetry::None {
                    crate::symseq::permutations_lex(k)
                } else {
                    vec![(0..k).collect()]
                };
                for order in orders {
                    let blocks: Vec<&Vec<u32>> = order.iter().map(|&j| &part[j]).collect();
                    let child_options: Vec<Vec<Tree>> = blocks
                        .iter()
                        .map(|b| enumerate_trees(gens, b, memo))
                        .collect();
                    let mut odo = vec![0usize; k];
                    loop {
                        out.push(Tree::Node {
                            gen: gi as u32,
                            children: odo
                                .iter()
                                .enumerate()
                                .map(|(b, &t)| child_options[b][t].clone())
                                .collect(),
                        });
                        let mut pos = k;
                        while pos > 0 {
                            pos -= 1;
                            odo[pos] += 1;
                            if odo[pos] < child_options[pos].len() {
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
        }
    }
    memo.insert(leaves.to_vec(), out.clone());
    out
}

/// Partitions of a leaf list into exactly `k` nonempty blocks, blocks
/// ordered by minimum, restricted-growth enumeration order.
pub(crate) fn partitions_of(leaves: &[u32], k: usize) -> Vec<Vec<Vec<u32>>> {
    let n = leaves.len();
    let mut out = Vec::new();
    let mut rgs = Vec::new();
    fn rec(n: usize, k: usize, rgs: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rgs.len() == n {
            if rgs.iter().copied().max().map_or(0, |m| m + 1) == k {
                out.push(rgs.clone());
            }
            return;
        }
        let maxv = (rgs.iter().copied().max().map_or(0, |m| m + 1)).min(k - 1);
        for v in 0..=maxv {
            rgs.push(v);
            rec(n, k, rgs, out);
            rgs.pop();
        }
    }
    let mut flat = Vec::new();
    rec(n, k, &mut rgs, &mut flat);
    for r in flat {
        let mut blocks = vec![Vec::new(); k];
        for (pos, &b) in r.iter().enumerate() {
            blocks[b].push(leaves[pos]);
        }
        out.push(blocks);
    }
    out
}

/// Per-degree-pair blocks of one bilinear structure map.
pub type BilinearBlocks = BTreeMap<(Degree, Degree), Matrix>;

/// Projection data from a presentation's free basis onto the quotient.
#[derive(Clone, Debug)]
pub struct QuotientTrace {
    pub free_dims: BTreeMap<usize, usize>,
    /// Per arity: quotient coordinates of each free-basis tree.
    pub projections: BTreeMap<usize, Matrix>,
}

/// An operad: a symmetric sequence with unit and partial compositions.
#[derive(Clone, Debug)]
pub struct Operad {
    pub underlying: SymSeqObject,
    /// Coordinates of the unit in the arity-1 degree-0 basis, as a column.
    pub unit: Matrix,
    /// `reduced` asserts the arity-1 component is spanned by the unit.
    pub reduced: bool,
    partial: BTreeMap<(usize, usize, usize), BilinearBlocks>,
    pub trace: Option<QuotientTrace>,
}

impl PartialEq for Operad {
    // The trace is bookkeeping, not structure.
    fn eq(&self, other: &Operad) -> bool {
        self.underlying == other.underlying
            && self.unit == other.unit
            && self.reduced == other.reduced
            && self.partial == other.partial
    }
}

impl Operad {
    pub fn field(&self) -> FieldSpec {
        self.underlying.field
    }

    pub fn window(&self) -> Window {
        self.underlying.window
    }

    pub fn compositions(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize, usize), &BilinearBlocks)> {
        self.partial.iter()
    }

    /// The `(a, b)` block of `∘_i: O_m ⊗ O_n → O_{m+n-1}`, zero when absent.
    /// Columns are indexed by `ia * dim_b + ib`.
    pub fn comp_block(&self, m: usize, i: usize, n: usize, a: Degree, b: Degree) -> Matrix {
        let rows = self.arity_dim(m + n - 1, a + b);
        let cols = self.arity_dim(m, a) * self.arity_dim(n, b);
        self.partial
            .get(&(m, i, n))
            .and_then(|blocks| blocks.get(&(a, b)))
            .cloned()
            .unwrap_or_else(|| Matrix::zero(self.field(), rows, cols))
    }

    fn arity_dim(&self, n: usize, deg: Degree) -> usize {
        self.underlying
            .arity(n)
            .map_or(0, |r| r.complex.space.dim(deg))
    }

    fn comp_sparse(&self, m: usize, i: usize, n: usize, a: Degree, b: Degree) -> SparseMat {
        SparseMat::from_dense(&self.comp_block(m, i, n, a, b))
    }

    /// Borrowed block of `∘_i`, `None` when absent (absent means zero).
    pub(crate) fn comp_block_ref(
        &self,
        m: usize,
        i: usize,
        n: usize,
        a: Degree,
        b: Degree,
    ) -> Option<&Matrix> {
        self.partial
            .get(&(m, i, n))
            .and_then(|blocks| blocks.get(&(a, b)))
    }
}

/// A cooperad: the arity-wise dual, with counit and partial cocompositions
/// `Δ_i: C_{m+n-1} → C_m ⊗ C_n` stored per degree pair of the target.
#[derive(Clone, Debug, PartialEq)]
pub struct Cooperad {
    pub underlying: SymSeqObject,
    /// Coordinates of the counit on the arity-1 degree-0 basis, as a row.
    pub counit: Matrix,
    pub reduced: bool,
    pub(crate) cocompositions: BTreeMap<(usize, usize, usize), BilinearBlocks>,
}

impl Cooperad {
    pub fn field(&self) -> FieldSpec {
        self.underlying.field
    }

    /// The `(a, b)` block of `Δ_i: C_{m+n-1} → C_m ⊗ C_n`, zero when absent.
    /// Rows are indexed by `ia * dim_b + ib`.
    pub fn cocomp_block(&self, m: usize, i: usize, n: usize, a: Degree, b: Degree) -> Matrix {
        let rows = self.arity_dim(m, a) * self.arity_dim(n, b);
        let cols = self.arity_dim(m + n - 1, a + b);
        self.cocompositions
            .get(&(m, i, n))
            .and_then(|blocks| blocks.get(&(a, b)))
            .cloned()
            .unwrap_or_else(|| Matrix::zero(self.field(), rows, cols))
    }

    pub fn cocompositions(
        &self,
    ) -> impl Iterator<Item = (&(usize, usize, usize), &BilinearBlocks)> {
        self.cocompositions.iter()
    }

    fn arity_dim(&self, n: usize, deg: Degree) -> usize {
        self.underlying
            .arity(n)
            .map_or(0, |r| r.complex.space.dim(deg))
    }
}

const PRESENTED_LIMIT: usize = 6;
const LIE_LIMIT: usize = 7;

/// Builds the quotient of the free operad on the presentation's generators
/// by the operadic ideal its relations generate, with induced actions and
/// partial compositions on canonical section bases.
pub fn presented_operad(
    field: FieldSpec,
    pres: &OperadPresentation,
    window: &Window,
) -> Result<Operad, OperadError> {
    presented_impl(field, pres, window, PRESENTED_LIMIT)
}

fn presented_impl(
    field: FieldSpec,
    pres: &OperadPresentation,
    window: &Window,
    limit: usize,
) -> Result<Operad, OperadError> {
    if window.max_arity > limit {
        return Err(OperadError::WindowTooLarge {
            got: window.max_arity,
            limit,
        });
    }
    let gens = &pres.generators;
    for g in gens {
        if g.arity < 2 {
            return Err(OperadError::BadGenerator(g.label.clone()));
        }
    }
    let max_a = window.max_arity;
    let mut memo = BTreeMap::new();
    let free: Vec<FreeArity> = (0..=max_a).map(|n| free_arity(gens, n, &mut memo)).collect();

    // Validate relations and canonicalize them into coordinate vectors.
    let mut rel_vecs: BTreeMap<usize, Vec<Vec<(u32, Scalar)>>> = BTreeMap::new();
    for rel in &pres.relations {
        let (arity, vec) = relation_vector(field, gens, rel, &free)?;
        rel_vecs.entry(arity).or_default().push(vec);
    }

    // Ideal closure, arity by arity: graft earlier ideal vectors below and
    // above free trees, adjoin same-arity relations, and saturate under the
    // adjacent-transposition action.
    let mut reducers: Vec<SparseReducer> = (0..=max_a)
        .map(|n| SparseReducer::new(field, free[n].trees.len()))
        .collect();
    let mut ideal_vecs: Vec<Vec<Vec<(u32, Scalar)>>> = vec![Vec::new(); max_a + 1];
    for n in 1..=max_a {
        let mut queue: Vec<Vec<(u32, Scalar)>> = Vec::new();
        if let Some(rels) = rel_vecs.get(&n) {
            queue.extend(rels.iter().cloned());
        }
        for m in 2..n {
            let k = n - m + 1;
            for v in &ideal_vecs[m] {
                for t in &free[k].trees {
                    for i in 1..=m {
                        queue.push(graft_vector(field, gens, v, &free[m], i, t, k, &free[n]));
                    }
                }
                for t in &free[k].trees {
                    for j in 1..=k {
                        queue.push(graft_vector_above(
                            field, gens, t, j, v, &free[m], m, &free[n],
                        ));
                    }
                }
            }
        }
        let mut worklist = Vec::new();
        for v in queue {
            let rem = reducers[n].reduce(v);
            if !rem.is_empty() {
                reducers[n].insert(rem.clone());
                ideal_vecs[n].push(rem.clone());
                worklist.push(rem);
            }
        }
        while let Some(v) = worklist.pop() {
            for t in 0..n.saturating_sub(1) {
                let acted = act_vector(field, gens, &v, &free[n], t);
                let rem = reducers[n].reduce(acted);
                if !rem.is_empty() {
                    reducers[n].insert(rem.clone());
                    ideal_vecs[n].push(rem.clone());
                    worklist.push(rem);
                }
            }
        }
    }

    // Quotient bases: section trees grouped by degree in enumeration order.
    let layouts: Vec<Layout> = (0..=max_a)
        .map(|n| {
            let section: Vec<u32> = reducers[n].section_rows().iter().map(|&r| r as u32).collect();
            let mut by_degree: BTreeMap<Degree, Vec<u32>> = BTreeMap::new();
            for &t in &section {
                by_degree.entry(free[n].degrees[t as usize]).or_default().push(t);
            }
            let mut position = BTreeMap::new();
            for (&d, list) in &by_degree {
                for (p, &t) in list.iter().enumerate() {
                    position.insert(t, (d, p));
                }
            }
            Layout {
                section,
                by_degree,
                position,
            }
        })
        .collect();

    let mut underlying = SymSeqObject::new(field, *window);
    let mut trace_projections = BTreeMap::new();
    let mut trace_free = BTreeMap::new();
    for n in 1..=max_a {
        let lay = &layouts[n];
        if lay.section.is_empty() {
            continue;
        }
        let mut space = GradedSpace::new(field);
        for (&d, list) in &lay.by_degree {
            space.set_basis(
                d,
                list.iter()
                    .map(|&t| render_tree(gens, &free[n].trees[t as usize]))
                    .collect(),
            );
        }
        let mut transpositions = Vec::new();
        for t in 0..n.saturating_sub(1) {
            let mut maps = ActionMaps::new();
            let mut cols_by_deg: BTreeMap<Degree, Vec<Vec<(u32, Scalar)>>> = BTreeMap::new();
            for (&d, list) in &lay.by_degree {
                let mut cols = Vec::with_capacity(list.len());
                for &tree_idx in list {
                    let unit_vec = vec![(tree_idx, field.one())];
                    let acted = act_vector(field, gens, &unit_vec, &free[n], t);
                    cols.push(to_section(&reducers[n], acted, lay, d));
                }
                cols_by_deg.insert(d, cols);
            }
            for (d, cols) in cols_by_deg {
                let dim = lay.by_degree[&d].len();
                maps.insert(d, SparseMat::from_cols(field, dim, cols));
            }
            transpositions.push(maps);
        }
        underlying.set_arity(SymRep::new(n, ChainComplex::with_zero_diff(space), transpositions)?)?;
        // Quotient coordinates of every free tree, stacked degree-blocks.
        let free_dim = free[n].trees.len();
        let sec_dim = lay.section.len();
        let mut proj = Matrix::zero(field, sec_dim, free_dim);
        let flat_pos: BTreeMap<u32, usize> =
            lay.section.iter().enumerate().map(|(p, &t)| (t, p)).collect();
        for j in 0..free_dim {
            let rem = reducers[n].reduce(vec![(j as u32, field.one())]);
            for (row, v) in rem {
                proj.set(flat_pos[&row], j, v);
            }
        }
        trace_projections.insert(n, proj);
        trace_free.insert(n, free_dim);
    }

    // Induced partial compositions on section representatives.
    let mut partial: BTreeMap<(usize, usize, usize), BilinearBlocks> = BTreeMap::new();
    for m in 1..=max_a {
        for n in 1..=max_a {
            if m + n - 1 > max_a {
                continue;
            }
            let (lm, ln, lout) = (&layouts[m], &layouts[n], &layouts[m + n - 1]);
            if lm.section.is_empty() || ln.section.is_empty() {
                continue;
            }
            for i in 1..=m {
                let mut blocks = BilinearBlocks::new();
                for (&a, alist) in &lm.by_degree {
                    for (&b, blist) in &ln.by_degree {
                        let rows = lout.by_degree.get(&(a + b)).map_or(0, Vec::len);
                        if rows == 0 {
                            continue;
                        }
                        let mut mat = Matrix::zero(field, rows, alist.len() * blist.len());
                        for (ia, &ta) in alist.iter().enumerate() {
                            for (ib, &tb) in blist.iter().enumerate() {
                                let (sign, tree) = graft(
                                    gens,
                                    &free[m].trees[ta as usize],
                                    i,
                                    &free[n].trees[tb as usize],
                                    n,
                                );
                                let idx = free[m + n - 1].index[&tree];
                                let v = vec![(idx, field.int(sign))];
                                let col = to_section(&reducers[m + n - 1], v, lout, a + b);
                                for (r, val) in col {
                                    mat.set(r as usize, ia * blist.len() + ib, val);
                                }
                            }
                        }
                        if !mat.is_zero() {
                            blocks.insert((a, b), mat);
                        }
                    }
                }
                if !blocks.is_empty() {
                    partial.insert((m, i, n), blocks);
                }
            }
        }
    }

    let unit = Matrix::identity(field, 1);
    let reduced = underlying.arity(1).map_or(false, |r| r.total_dim() == 1);
    Ok(Operad {
        underlying,
        unit,
        reduced,
        partial,
        trace: Some(QuotientTrace {
            free_dims: trace_free,
            projections: trace_projections,
        }),
    })
}

/// Section basis of one arity of a quotient, grouped by degree in free-basis
/// enumeration order.
struct Layout {
    section: Vec<u32>,
    by_degree: BTreeMap<Degree, Vec<u32>>,
    position: BTreeMap<u32, (Degree, usize)>,
}

/// Reduces a free-coordinate vector and reads off section coordinates,
/// asserting the remainder is homogeneous of the expected degree.
fn to_section(
    reducer: &SparseReducer,
    v: Vec<(u32, Scalar)>,
    lay: &Layout,
    expect: Degree,
) -> Vec<(u32, Scalar)> {
    let rem = reducer.reduce(v);
    let mut out = Vec::with_capacity(rem.len());
    for (row, val) in rem {
        let (d, p) = lay.position[&row];
        assert_eq!(d, expect, "ideal reduction must preserve degree");
        out.push((p as u32, val));
    }
    out.sort_by_key(|e| e.0);
    out
}

fn act_vector(
    field: FieldSpec,
    gens: &[GenSpec],
    v: &[(u32, Scalar)],
    free: &FreeArity,
    t: usize,
) -> Vec<(u32, Scalar)> {
    let n = leaf_count(&free.trees[0]);
    let map: Vec<usize> = (0..n)
        .map(|l| {
            if l == t {
                t + 1
            } else if l == t + 1 {
                t
            } else {
                l
            }
        })
        .collect();
    let mut entries = BTreeMap::new();
    for (idx, coeff) in v {
        let (sign, tree) = relabel(gens, &free.trees[*idx as usize], &map);
        let target = free.index[&tree];
        let add = field.mul(coeff, &field.int(sign));
        let slot = entries.entry(target).or_insert_with(|| field.zero());
        *slot = field.add(slot, &add);
    }
    entries
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn graft_vector(
    field: FieldSpec,
    gens: &[GenSpec],
    v: &[(u32, Scalar)],
    free_m: &FreeArity,
    i: usize,
    t: &Tree,
    t_arity: usize,
    free_out: &FreeArity,
) -> Vec<(u32, Scalar)> {
    let mut entries: BTreeMap<u32, Scalar> = BTreeMap::new();
    for (idx, coeff) in v {
        let (sign, tree) = graft(gens, &free_m.trees[*idx as usize], i, t, t_arity);
        let target = free_out.index[&tree];
        let add = field.mul(coeff, &field.int(sign));
        let slot = entries.entry(target).or_insert_with(|| field.zero());
        *slot = field.add(slot, &add);
    }
    entries.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

#[allow(clippy::too_many_arguments)]
fn graft_vector_above(
    field: FieldSpec,
    gens: &[GenSpec],
    t: &Tree,
    j: usize,
    v: &[(u32, Scalar)],
    free_m: &FreeArity,
    m: usize,
    free_out: &FreeArity,
) -> Vec<(u32, Scalar)> {
    let mut entries: BTreeMap<u32, Scalar> = BTreeMap::new();
    for (idx, coeff) in v {
        let (sign, tree) = graft(gens, t, j, &free_m.trees[*idx as usize], m);
        let target = free_out.index[&tree];
        let add = field.mul(coeff, &field.int(sign));
        let slot = entries.entry(target).or_insert_with(|| field.zero());
        *slot = field.add(slot, &add);
    }
    entries.into_iter().filter(|(_, c)| !c.is_zero()).collect()
}

fn relation_vector(
    field: FieldSpec,
    gens: &[GenSpec],
    rel: &Relation,
    free: &[FreeArity],
) -> Result<(usize, Vec<(u32, Scalar)>), OperadError> {
    if rel.terms.is_empty() {
        return Err(OperadError::InconsistentRelation("empty relation".into()));
    }
    let mut arity = None;
    let mut degree = None;
    let mut entries: BTreeMap<u32, Scalar> = BTreeMap::new();
    for (coeff, raw) in &rel.terms {
        validate_tree(gens, raw)?;
        let r = leaf_count(raw);
        if r < 2 {
            return Err(OperadError::InconsistentRelation(
                "relation terms must have arity at least 2".into(),
            ));
        }
        let mut seen = vec![false; r];
        mark_leaves(raw, &mut seen)
            .then_some(())
            .ok_or_else(|| OperadError::InconsistentRelation("leaves are not 1..arity".into()))?;
        if *arity.get_or_insert(r) != r {
            return Err(OperadError::InconsistentRelation(
                "terms of mixed arity".into(),
            ));
        }
        let d = tree_degree(gens, raw);
        if *degree.get_or_insert(d) != d {
            return Err(OperadError::InconsistentRelation(
                "terms of mixed degree".into(),
            ));
        }
        if r >= free.len() {
            return Err(OperadError::InconsistentRelation(format!(
                "relation arity {r} exceeds the window"
            )));
        }
        let id: Vec<usize> = (0..r).collect();
        let (sign, tree) = relabel(gens, raw, &id);
        let idx = free[r].index[&tree];
        let add = field.mul(&field.int(*coeff), &field.int(sign));
        let slot = entries.entry(idx).or_insert_with(|| field.zero());
        *slot = field.add(slot, &add);
    }
    let vec: Vec<(u32, Scalar)> =
        entries.into_iter().filter(|(_, c)| !c.is_zero()).collect();
    Ok((arity.unwrap(), vec))
}

fn validate_tree(gens: &[GenSpec], t: &Tree) -> Result<(), OperadError> {
    match t {
        Tree::Leaf(_) => Ok(()),
        Tree::Node { gen, children } => {
            let g = gens.get(*gen as usize).ok_or_else(|| {
                OperadError::InconsistentRelation(format!("unknown generator index {gen}"))
            })?;
            if g.arity != children.len() {
                return Err(OperadError::InconsistentRelation(format!(
                    "generator '{}' used with {} children",
                    g.label,
                    children.len()
                )));
            }
            children.iter().try_for_each(|c| validate_tree(gens, c))
        }
    }
}

fn mark_leaves(t: &Tree, seen: &mut [bool]) -> bool {
    match t {
        Tree::Leaf(l) => {
            let l = *l as usize;
            if l >= seen.len() || seen[l] {
                return false;
            }
            seen[l] = true;
            true
        }
        Tree::Node { children, .. } => children.iter().all(|c| mark_leaves(c, seen)),
    }
}

/// The antisymmetric-bracket presentation with the Jacobi relation.
pub fn lie_presentation() -> OperadPresentation {
    let b = |x: Tree, y: Tree| Tree::node(0, vec![x, y]);
    let l = Tree::leaf;
    OperadPresentation {
        generators: vec![GenSpec {
            label: "b".into(),
            arity: 2,
            degree: 0,
            symmetry: Symmetry::Antisymmetric,
        }],
        relations: vec![Relation {
            terms: vec![
                (1, b(b(l(0), l(1)), l(2))),
                (1, b(b(l(1), l(2)), l(0))),
                (1, b(b(l(2), l(0)), l(1))),
            ],
        }],
    }
}

/// A binary generator with no symmetry, modulo associativity.
pub fn ass_presentation() -> OperadPresentation {
    let m = |x: Tree, y: Tree| Tree::node(0, vec![x, y]);
    let l = Tree::leaf;
    OperadPresentation {
        generators: vec![GenSpec {
            label: "m".into(),
            arity: 2,
            degree: 0,
            symmetry: Symmetry::None,
        }],
        relations: vec![Relation {
            terms: vec![
                (1, m(m(l(0), l(1)), l(2))),
                (-1, m(l(0), m(l(1), l(2)))),
            ],
        }],
    }
}

/// A symmetric binary generator, modulo associativity.
pub fn comm_presentation() -> OperadPresentation {
    let c = |x: Tree, y: Tree| Tree::node(0, vec![x, y]);
    let l = Tree::leaf;
    OperadPresentation {
        generators: vec![GenSpec {
            label: "c".into(),
            arity: 2,
            degree: 0,
            symmetry: Symmetry::Symmetric,
        }],
        relations: vec![Relation {
            terms: vec![
                (1, c(c(l(0), l(1)), l(2))),
                (-1, c(l(0), c(l(1), l(2)))),
            ],
        }],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Triv,
    CommNu,
    AssNu,
    Lie,
    LieShifted,
}

impl std::str::FromStr for Builtin {
    type Err = OperadError;
    fn from_str(s: &str) -> Result<Builtin, OperadError> {
        match s {
            "triv" => Ok(Builtin::Triv),
            "comm_nu" => Ok(Builtin::CommNu),
            "ass_nu" => Ok(Builtin::AssNu),
            "lie" => Ok(Builtin::Lie),
            "lie_shifted" => Ok(Builtin::LieShifted),
            other => Err(OperadError::UnknownBuiltin(other.to_string())),
        }
    }
}

static LIE_CACHE: Lazy<Mutex<BTreeMap<(String, usize), Operad>>> =
    Lazy::new(|| Mutex::new(BTreeMap::new()));

pub fn builtin(field: FieldSpec, name: Builtin, window: &Window) -> Result<Operad, OperadError> {
    match name {
        Builtin::Triv => {
            let underlying = SymSeqObject::triv(field, *window)?;
            let mut partial = BTreeMap::new();
            let mut blocks = BilinearBlocks::new();
            blocks.insert((0, 0), Matrix::identity(field, 1));
            partial.insert((1, 1, 1), blocks);
            Ok(Operad {
                underlying,
                unit: Matrix::identity(field, 1),
                reduced: true,
                partial,
                trace: None,
            })
        }
        Builtin::CommNu => {
            let underlying = crate::symseq::comm_seq(field, *window)?;
            let mut partial = BTreeMap::new();
            for m in 1..=window.max_arity {
                for n in 1..=window.max_arity {
                    if m + n - 1 > window.max_arity {
                        continue;
                    }
                    for i in 1..=m {
                        let mut blocks = BilinearBlocks::new();
                        blocks.insert((0, 0), Matrix::identity(field, 1));
                        partial.insert((m, i, n), blocks);
                    }
                }
            }
            Ok(Operad {
                underlying,
                unit: Matrix::identity(field, 1),
                reduced: true,
                partial,
                trace: None,
            })
        }
        Builtin::AssNu => {
            let underlying = crate::symseq::ass_seq(field, *window)?;
            let words: Vec<Vec<Vec<usize>>> = (0..=window.max_arity)
                .map(crate::symseq::permutations_lex)
                .collect();
            let index: Vec<BTreeMap<&[usize], usize>> = words
                .iter()
                .map(|list| {
                    list.iter().enumerate().map(|(i, w)| (w.as_slice(), i)).collect()
                })
                .collect();
            let mut partial = BTreeMap::new();
            for m in 1..=window.max_arity {
                for n in 1..=window.max_arity {
                    if m + n - 1 > window.max_arity {
                        continue;
                    }
                    for i in 1..=m {
                        // Substitute the word of y for letter i of x: y's
                        // letters shift to the block starting at i, later
                        // letters of x shift past it.
                        let mut mat =
                            Matrix::zero(field, words[m + n - 1].len(), words[m].len() * words[n].len());
                        for (iu, u) in words[m].iter().enumerate() {
                            for (iv, v) in words[n].iter().enumerate() {
                                let mut w = Vec::with_capacity(m + n - 1);
                                for &letter in u {
                                    if letter == i - 1 {
                                        w.extend(v.iter().map(|&x| x + i - 1));
                                    } else if letter > i - 1 {
                                        w.push(letter + n - 1);
                                    } else {
                                        w.push(letter);
                                    }
                                }
                                let r = index[m + n - 1][w.as_slice()];
                                mat.set(r, iu * words[n].len() + iv, field.one());
                            }
                        }
                        let mut blocks = BilinearBlocks::new();
                        blocks.insert((0, 0), mat);
                        partial.insert((m, i, n), blocks);
                    }
                }
            }
            Ok(Operad {
                underlying,
                unit: Matrix::identity(field, 1),
                reduced: true,
                partial,
                trace: None,
            })
        }
        Builtin::Lie => {
            if window.max_arity > LIE_LIMIT {
                return Err(OperadError::WindowTooLarge {
                    got: window.max_arity,
                    limit: LIE_LIMIT,
                });
            }
            let key = (format!("{:?}", field), window.max_arity);
            let cached = LIE_CACHE.lock().unwrap().get(&key).cloned();
            let tight = match cached {
                Some(o) => o,
                None => {
                    let t = Window::new(window.max_arity, 0, 0)?;
                    let o = presented_impl(field, &lie_presentation(), &t, LIE_LIMIT)?;
                    LIE_CACHE.lock().unwrap().insert(key, o.clone());
                    o
                }
            };
            rewindow(&tight, window)
        }
        Builtin::LieShifted => {
            let lie = builtin(field, Builtin::Lie, &Window::new(window.max_arity, 0, 0)?)?;
            let shifted = shift_operad(&lie, 1)?;
            rewindow(&shifted, window)
        }
    }
}

/// Rebuilds an operad over a different window with the same maximum arity.
/// Fails when the support does not fit.
pub fn rewindow(o: &Operad, window: &Window) -> Result<Operad, OperadError> {
    if window.max_arity != o.underlying.window.max_arity {
        return Err(OperadError::BadWindow(
            "rewindow requires equal maximum arities".into(),
        ));
    }
    let mut underlying = SymSeqObject::new(o.underlying.field, *window);
    for (_, rep) in o.underlying.arity_iter() {
        underlying.set_arity(rep.clone())?;
    }
    Ok(Operad {
        underlying,
        unit: o.unit.clone(),
        reduced: o.reduced,
        partial: o.partial.clone(),
        trace: o.trace.clone(),
    })
}

/// Operadic suspension of a whole operad: the underlying sequence shifts,
/// and the `(a, b)` block of `∘_i` with right arity `n` is rescaled by
/// `(-1)^{s (n-1) (a + i - 1)}`, the rescaling compatible with the
/// sign-character twist of the action. Shifting by `s` and then `-s`
/// restores the operad up to the canonical isomorphism that rescales arity
/// `r` by `(-1)^{s (r-1)(r-2)/2}`; for even `s` the round trip is exact.
pub fn shift_operad(o: &Operad, s: Degree) -> Result<Operad, OperadError> {
    let field = o.field();
    let underlying = crate::symseq::operadic_shift(&o.underlying, s)?;
    let mut partial = BTreeMap::new();
    for ((m, i, n), blocks) in &o.partial {
        let mut out = BilinearBlocks::new();
        for ((a, b), mat) in blocks {
            let na = a + s * (1 - *m as Degree);
            let nb = b + s * (1 - *n as Degree);
            let e = (s as i64) * (*n as i64 - 1) * (*a as i64 + *i as i64 - 1);
            out.insert((na, nb), mat.scale(&field.sign(e)));
        }
        partial.insert((*m, *i, *n), out);
    }
    Ok(Operad {
        underlying,
        unit: o.unit.clone(),
        reduced: o.reduced,
        partial,
        trace: None,
    })
}

/// Arity-wise dual with transposed structure maps. Cocomposition blocks are
/// keyed by dual degrees and carry the Koszul sign `(-1)^{ab}` of the
/// tensor-factor pairing, which makes dualizing twice the identity.
pub fn dual_cooperad(o: &Operad) -> Result<Cooperad, OperadError> {
    let field = o.field();
    let w = o.underlying.window;
    let dw = Window::new(w.max_arity, -w.max_deg, -w.min_deg)?;
    let mut underlying = SymSeqObject::new(field, dw);
    for (n, rep) in o.underlying.arity_iter() {
        underlying.set_arity(dual_rep(n, rep, &dw)?)?;
    }
    let mut cocompositions = BTreeMap::new();
    for ((m, i, n), blocks) in &o.partial {
        let mut out = BilinearBlocks::new();
        for ((a, b), mat) in blocks {
            let sign = field.sign((*a as i64) * (*b as i64));
            out.insert((-a, -b), mat.transpose().scale(&sign));
        }
        cocompositions.insert((*m, *i, *n), out);
    }
    Ok(Cooperad {
        underlying,
        counit: o.unit.transpose(),
        reduced: o.reduced,
        cocompositions,
    })
}

/// Inverse of [`dual_cooperad`].
pub fn dual_operad(c: &Cooperad) -> Result<Operad, OperadError> {
    let field = c.field();
    let w = c.underlying.window;
    let dw = Window::new(w.max_arity, -w.max_deg, -w.min_deg)?;
    let mut underlying = SymSeqObject::new(field, dw);
    for (n, rep) in c.underlying.arity_iter() {
        underlying.set_arity(dual_rep(n, rep, &dw)?)?;
    }
    let mut partial = BTreeMap::new();
    for ((m, i, n), blocks) in &c.cocompositions {
        let mut out = BilinearBlocks::new();
        for ((a, b), mat) in blocks {
            let sign = field.sign((*a as i64) * (*b as i64));
            out.insert((-a, -b), mat.transpose().scale(&sign));
        }
        partial.insert((*m, *i, *n), out);
    }
    Ok(Operad {
        underlying,
        unit: c.counit.transpose(),
        reduced: c.reduced,
        partial,
        trace: None,
    })
}

pub(crate) fn dual_rep(n: usize, rep: &SymRep, dw: &Window) -> Result<SymRep, SymSeqError> {
    let complex = crate::graded::dualize(&rep.complex, dw);
    let mut transpositions = Vec::new();
    for t in 0..n.saturating_sub(1) {
        let mut maps = ActionMaps::new();
        for deg in rep.complex.space.support() {
            maps.insert(-deg, rep.transposition(t, deg).transpose());
        }
        transpositions.push(maps);
    }
    SymRep::new(n, complex, transpositions)
}

/// Result of [`check_operad`]: empty means every axiom instance holds.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }
}

const MAX_FAILURES: usize = 100;

/// Verifies unit axioms, nested and parallel associativity, equivariance on
/// both factors (generators suffice, the identities are multiplicative), and
/// the reducedness claim. Returns the list of failing instances.
pub fn check_operad(o: &Operad) -> CheckReport {
    let field = o.field();
    let w = o.window();
    let max_a = w.max_arity;
    let mut failures = Vec::new();
    let push = |failures: &mut Vec<String>, msg: String| {
        if failures.len() < MAX_FAILURES {
            failures.push(msg);
        } else if failures.len() == MAX_FAILURES {
            failures.push("further failures suppressed".into());
        }
    };

    let dim = |n: usize, d: Degree| o.arity_dim(n, d);
    let support = |n: usize| -> Vec<Degree> {
        o.underlying
            .arity(n)
            .map(|r| r.complex.space.support())
            .unwrap_or_default()
    };
    let label = |n: usize, d: Degree, i: usize| -> String {
        o.underlying
            .arity(n)
            .map(|r| r.complex.space.labels(d)[i].clone())
            .unwrap_or_default()
    };

    // Unit shape and reducedness.
    let u_dim = dim(1, 0);
    if (o.unit.rows, o.unit.cols) != (u_dim, 1) || o.unit.is_zero() {
        push(
            &mut failures,
            "unit is not a nonzero vector in the arity-1 degree-0 component".into(),
        );
        return CheckReport { failures };
    }
    if o.reduced {
        let total = o.underlying.arity(1).map_or(0, SymRep::total_dim);
        if total != 1 {
            push(
                &mut failures,
                format!("reduced flag set but the arity-1 component has dimension {total}"),
            );
        }
    }

    // Unit axioms.
    for n in 1..=max_a {
        for b in support(n) {
            let dn = dim(n, b);
            let m = o.comp_sparse(1, 1, n, 0, b);
            let mut cols: Vec<Vec<(u32, Scalar)>> = vec![Vec::new(); dn];
            for ia in 0..u_dim {
                let c = o.unit.get(ia, 0);
                if c.is_zero() {
                    continue;
                }
                for ib in 0..dn {
                    for (r, v) in &m.col_data[ia * dn + ib] {
                        cols[ib].push((*r, field.mul(v, c)));
                    }
                }
            }
            let acted = SparseMat::from_cols(field, dn, cols);
            if acted != SparseMat::identity(field, dn) {
                push(
                    &mut failures,
                    format!("left unit axiom fails at arity {n}, degree {b}"),
                );
            }
        }
        for i in 1..=n {
            for a in support(n) {
                let dn = dim(n, a);
                let m = o.comp_sparse(n, i, 1, a, 0);
                let mut cols: Vec<Vec<(u32, Scalar)>> = vec![Vec::new(); dn];
                for ib in 0..u_dim {
                    let c = o.unit.get(ib, 0);
                    if c.is_zero() {
                        continue;
                    }
                    for ia in 0..dn {
                        for (r, v) in &m.col_data[ia * u_dim + ib] {
                            cols[ia].push((*r, field.mul(v, c)));
                        }
                    }
                }
                let acted = SparseMat::from_cols(field, dn, cols);
                if acted != SparseMat::identity(field, dn) {
                    push(
                        &mut failures,
                        format!("right unit axiom fails at (m={n}, i={i}), degree {a}"),
                    );
                }
            }
        }
    }

    // Associativity, nested and parallel.
    for l in 2..=max_a {
        for m in 2..=max_a {
            for n in 2..=max_a {
                if l + m + n - 2 > max_a {
                    continue;
                }
                for a in support(l) {
                    for b in support(m) {
                        for c in support(n) {
                            let (da, db, dc) = (dim(l, a), dim(m, b), dim(n, c));
                            if da * db * dc == 0 {
                                continue;
                            }
                            let idc = SparseMat::identity(field, dc);
                            let idb = SparseMat::identity(field, db);
                            let ida = SparseMat::identity(field, da);
                            for i in 1..=l {
                                let inner = o.comp_sparse(l, i, m, a, b);
                                for j in 1..=m {
                                    let lhs = o
                                        .comp_sparse(l + m - 1, i - 1 + j, n, a + b, c)
                                        .mul(&inner.kron(&idc));
                                    let rhs = o
                                        .comp_sparse(l, i, m + n - 1, a, b + c)
                                        .mul(&ida.kron(&o.comp_sparse(m, j, n, b, c)));
                                    if lhs != rhs {
                                        if let Some((ia, ib, ic)) =
                                            first_diff(&lhs, &rhs, db, dc)
                                        {
                                            push(&mut failures, format!(
                                                "nested associativity fails at (l={l}, i={i}, m={m}, j={j}, n={n}), degrees ({a},{b},{c}), basis {} , {} , {}",
                                                label(l, a, ia), label(m, b, ib), label(n, c, ic)
                                            ));
                                        }
                                    }
                                }
                                for k in i + 1..=l {
                                    // (x o_i y) o_{k-1+m} z vs the swapped
                                    // composite with the Koszul sign of y, z.
                                    let lhs = o
                                        .comp_sparse(l + m - 1, k - 1 + m, n, a + b, c)
                                        .mul(&inner.kron(&idc));
                                    let swapped = o
                                        .comp_sparse(l + n - 1, i, m, a + c, b)
                                        .mul(&o.comp_sparse(l, k, n, a, c).kron(&idb));
                                    let rhs = swapped.mul(&swap23(field, da, db, dc, b, c));
                                    if lhs != rhs {
                                        if let Some((ia, ib, ic)) =
                                            first_diff(&lhs, &rhs, db, dc)
                                        {
                                            push(&mut failures, format!(
                                                "parallel associativity fails at (l={l}, i={i}, k={k}, m={m}, n={n}), degrees ({a},{b},{c}), basis {} , {} , {}",
                                                label(l, a, ia), label(m, b, ib), label(n, c, ic)
                                            ));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Equivariance on both tensor factors, on adjacent transpositions.
    for m in 1..=max_a {
        for n in 1..=max_a {
            if m + n - 1 > max_a {
                continue;
            }
            let (Some(rm), Some(rn), Some(rout)) = (
                o.underlying.arity(m),
                o.underlying.arity(n),
                o.underlying.arity(m + n - 1),
            ) else {
                continue;
            };
            for i in 1..=m {
                for a in support(m) {
                    for b in support(n) {
                        if dim(m, a) * dim(n, b) == 0 || dim(m + n - 1, a + b) == 0 {
                            continue;
                        }
                        let comp = o.comp_sparse(m, i, n, a, b);
                        let ida = SparseMat::identity(field, dim(m, a));
                        for u in 0..n.saturating_sub(1) {
                            let lhs = rout.transposition(i - 1 + u, a + b).mul(&comp);
                            let rhs = comp.mul(&ida.kron(&rn.transposition(u, b)));
                            if lhs != rhs {
                                push(&mut failures, format!(
                                    "inner equivariance fails at (m={m}, i={i}, n={n}), generator {u}, degrees ({a},{b})"
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
                            let sigma: Vec<usize> = (0..m)
                                .map(|x| {
                                    if x == t {
                                        t + 1
                                    } else if x == t + 1 {
                                        t
                                    } else {
                                        x
                                    }
                                })
                                .collect();
                            let blow = blowup_perm(&sigma, i, n);
                            let idb = SparseMat::identity(field, dim(n, b));
                            let lhs = o
                                .comp_sparse(m, si, n, a, b)
                                .mul(&rm.transposition(t, a).kron(&idb));
                            let rho = match rout.perm_action(&blow) {
                                Ok(maps) => maps[&(a + b)].clone(),
                                Err(e) => {
                                    push(&mut failures, format!("blowup action failed: {e}"));
                                    continue;
                                }
                            };
                            let rhs = rho.mul(&comp);
                            if lhs != rhs {
                                push(&mut failures, format!(
                                    "outer equivariance fails at (m={m}, i={i}, n={n}), generator {t}, degrees ({a},{b})"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    CheckReport { failures }
}

/// First differing column of two equal-shaped sparse matrices, decoded as
/// `(ia, ib, ic)` with `ic` fastest.
fn first_diff(a: &SparseMat, b: &SparseMat, db: usize, dc: usize) -> Option<(usize, usize, usize)> {
    for j in 0..a.cols {
        if a.col_data[j] != b.col_data[j] {
            let ic = j % dc;
            let ib = (j / dc) % db;
            let ia = j / (db * dc);
            return Some((ia, ib, ic));
        }
    }
    None
}

/// Column permutation `x (x) y (x) z -> x (x) z (x) y` with the Koszul sign
/// of swapping the last two factors.
fn swap23(field: FieldSpec, da: usize, db: usize, dc: usize, b: Degree, c: Degree) -> SparseMat {
    let sign = field.sign((b as i64) * (c as i64));
    let mut cols = Vec::with_capacity(da * db * dc);
    for ia in 0..da {
        for ib in 0..db {
            for ic in 0..dc {
                let target = (ia * dc + ic) * db + ib;
                cols.push(vec![(target as u32, sign.clone())]);
            }
        }
    }
    SparseMat::from_cols(field, da * db * dc, cols)
}

/// The permutation of `m+n-1` points induced by `sigma` on `m` slots when
/// slot `i` (1-based) has width `n` and the rest have width 1.
pub(crate) fn blowup_perm(sigma: &[usize], i: usize, n: usize) -> Vec<usize> {
    let m = sigma.len();
    let width = |s: usize| if s == i - 1 { n } else { 1 };
    let mut off = vec![0usize; m];
    for s in 1..m {
        off[s] = off[s - 1] + width(s - 1);
    }
    let mut out = vec![0usize; m + n - 1];
    for s in 0..m {
        let toff: usize = (0..m).filter(|&s2| sigma[s2] < sigma[s]).map(width).sum();
        for t in 0..width(s) {
            out[off[s] + t] = toff + t;
        }
    }
    out
}

/// Dimension of the space of right-module structure maps on `x` over `o`,
/// beyond the map forced by unitality in the arity-1 slot. For a sequence
/// concentrated in one arity with a reduced `o` this is zero: every higher
/// structure map lands in a zero component.
pub fn right_module_parameter_dim(x: &SymSeqObject, o: &Operad) -> usize {
    let max_a = x.window.max_arity;
    let mut total = 0usize;
    for (m, xm) in x.arity_iter() {
        for k in 2..=max_a {
            if m + k - 1 > max_a {
                continue;
            }
            let Some(ok) = o.underlying.arity(k) else { continue };
            let Some(xout) = x.arity(m + k - 1) else { continue };
            for a in xm.complex.space.support() {
                for b in ok.complex.space.support() {
                    let d = xm.complex.space.dim(a)
                        * ok.complex.space.dim(b)
                        * xout.complex.space.dim(a + b);
                    total += d * m;
                }
            }
        }
    }
    total
}
