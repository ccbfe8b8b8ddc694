//! Acceptance suite. Each test pins one headline guarantee of the engine end
//! to end — exact dimensions, concentration degrees, character-level
//! isomorphisms, honest failures in prime characteristic — together with a
//! wall-clock budget, so a single run of this target reports one pass/fail
//! line per guarantee.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use opcalc::field::{FieldSpec, Scalar, SparseMat};
use opcalc::graded::{homology_dim, ChainComplex, Degree, GradedSpace, Window};
use opcalc::hopf::{
    abelian_lie, check_hopf, enveloping, free_lie_presentation, heisenberg_lie,
    milnor_moore_check, primitives, restricted_monad, sym_exponential_check, tensor_hopf,
    witt_dims, Generator, HopfPresentation,
};
use opcalc::koszul::{
    bar_complex, double_dual_check, koszul_dual, truncation_tower, LeftModule, OpModule,
};
use opcalc::operad::{
    ass_presentation, builtin, check_operad, comm_presentation, lie_presentation,
    presented_operad, Builtin,
};
use opcalc::symseq::{
    compose, free_algebra_bigraded, norm_map, ActionMaps, SymRep, SymSeqObject,
};

const BUILTINS: [(&str, Builtin); 5] = [
    ("triv", Builtin::Triv),
    ("comm", Builtin::CommNu),
    ("ass", Builtin::AssNu),
    ("lie", Builtin::Lie),
    ("lie-shifted", Builtin::LieShifted),
];

fn q() -> FieldSpec {
    FieldSpec::Q
}

fn fp(p: u64) -> FieldSpec {
    FieldSpec::fp(p).unwrap()
}

fn win(max_arity: usize, min_deg: Degree, max_deg: Degree) -> Window {
    Window::new(max_arity, min_deg, max_deg).unwrap()
}

fn ev(label: &str, degree: Degree) -> Generator {
    Generator::new(label, degree, false)
}

fn od(label: &str, degree: Degree) -> Generator {
    Generator::new(label, degree, true)
}

fn budget(t: Instant, secs: u64, what: &str) {
    let elapsed = t.elapsed();
    assert!(
        elapsed < Duration::from_secs(secs),
        "{what} took {elapsed:?}, budget {secs}s"
    );
}

/// One permutation per conjugacy class of `Σ_n`, built from cycle types.
fn class_reps(n: usize) -> Vec<Vec<usize>> {
    fn partitions(n: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=max.min(n)).rev() {
            cur.push(p);
            partitions(n - p, p, cur, out);
            cur.pop();
        }
    }
    let mut types = Vec::new();
    partitions(n, n, &mut Vec::new(), &mut types);
    types
        .into_iter()
        .map(|cycles| {
            let mut perm = Vec::with_capacity(n);
            let mut start = 0;
            for c in cycles {
                for i in 0..c {
                    perm.push(start + (i + 1) % c);
                }
                start += c;
            }
            perm
        })
        .collect()
}

fn dim_table(x: &SymSeqObject) -> BTreeMap<(usize, Degree), usize> {
    x.dims().into_iter().map(|(a, d, m)| ((a, d), m)).collect()
}

fn characters_agree(a: &BTreeMap<Degree, Scalar>, b: &BTreeMap<Degree, Scalar>, field: FieldSpec) -> bool {
    a.keys().chain(b.keys()).all(|d| {
        let x = a.get(d).cloned().unwrap_or_else(|| field.zero());
        let y = b.get(d).cloned().unwrap_or_else(|| field.zero());
        x == y
    })
}

/// Isomorphism test over ℚ: equal dimension tables and equal characters on
/// every conjugacy class in every arity. Characters on all classes determine
/// a representation of a finite group in characteristic zero.
fn assert_iso(x: &SymSeqObject, y: &SymSeqObject, what: &str) {
    assert_eq!(dim_table(x), dim_table(y), "{what}: dimension tables differ");
    for n in 1..=x.window.max_arity {
        let (Some(a), Some(b)) = (x.arity(n), y.arity(n)) else {
            continue;
        };
        for perm in class_reps(n) {
            let ca = a.character(&perm).unwrap();
            let cb = b.character(&perm).unwrap();
            assert!(
                characters_agree(&ca, &cb, x.field),
                "{what}: characters differ in arity {n} at {perm:?}"
            );
        }
    }
}

/// Counts partitions of `{0, …, n−1}` by direct enumeration: each element in
/// turn joins an existing block or opens a new one. Independent of any
/// composition-product code.
fn count_set_partitions(n: usize) -> usize {
    fn place(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>) -> usize {
        if i == n {
            return 1;
        }
        let mut total = 0;
        for b in 0..blocks.len() {
            blocks[b].push(i);
            total += place(i + 1, n, blocks);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        total += place(i + 1, n, blocks);
        blocks.pop();
        total
    }
    place(0, n, &mut Vec::new())
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(n, cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// The regular representation of `Σ_n` in degree zero: basis indexed by group
/// elements, adjacent transpositions acting by left multiplication.
fn regular_rep(field: FieldSpec, n: usize) -> SymRep {
    let elems = all_perms(n);
    let m = elems.len();
    let index = |p: &[usize]| elems.iter().position(|e| e == p).unwrap();
    let labels = (0..m).map(|i| format!("g{i}")).collect();
    let complex = ChainComplex::with_zero_diff(GradedSpace::single(field, 0, labels));
    let mut transpositions = Vec::new();
    for i in 0..n - 1 {
        let mut s: Vec<usize> = (0..n).collect();
        s.swap(i, i + 1);
        let cols: Vec<Vec<(u32, Scalar)>> = elems
            .iter()
            .map(|g| {
                let sg: Vec<usize> = g.iter().map(|&k| s[k]).collect();
                vec![(index(&sg) as u32, field.one())]
            })
            .collect();
        let mut maps = ActionMaps::new();
        maps.insert(0, SparseMat::from_cols(field, m, cols));
        transpositions.push(maps);
    }
    SymRep::new(n, complex, transpositions).unwrap()
}

#[test]
fn criterion_1_commutative_dual_concentrates_factorials() {
    let t = Instant::now();
    let w = win(6, -8, 8);
    let comm = builtin(q(), Builtin::CommNu, &w).unwrap();
    let dual = koszul_dual(&comm, &w).unwrap();
    for n in 2..=6usize {
        let expect: usize = (1..n).product();
        let top = n as Degree - 1;
        assert_eq!(
            dual.concentrated.get(&n),
            Some(&Some(top)),
            "arity {n}: homology not concentrated in degree {top}"
        );
        let rep = dual.underlying.arity(n).expect("nonzero homology");
        assert_eq!(rep.complex.space.support(), vec![top], "arity {n}: spread homology");
        assert_eq!(rep.complex.space.dim(top), expect, "arity {n}: dimension");
    }
    budget(t, 60, "dual of the commutative operad through arity 6");
}

#[test]
fn criterion_2_double_dual_recovers_the_commutative_operad() {
    let t = Instant::now();
    let w = win(4, -8, 8);
    let comm = builtin(q(), Builtin::CommNu, &w).unwrap();
    let report = double_dual_check(&comm, &w).unwrap();
    assert!(report.all_match, "double dual disagrees with the original");
    let arities: Vec<usize> = report.rows.iter().map(|r| r.arity).collect();
    assert_eq!(arities, vec![1, 2, 3, 4]);
    for row in &report.rows {
        assert!(
            row.dims_match && row.characters_match,
            "arity {}: dual-of-dual mismatch",
            row.arity
        );
        assert_eq!(
            row.computed,
            BTreeMap::from([(0, 1)]),
            "arity {}: not one-dimensional in degree zero",
            row.arity
        );
    }
    budget(t, 120, "double dual of the commutative operad through arity 4");
}

#[test]
fn criterion_3_composition_counts_and_monoidal_laws() {
    let t = Instant::now();
    let w = win(5, -6, 2);
    let seqs: Vec<(&str, SymSeqObject)> = BUILTINS
        .iter()
        .map(|&(name, b)| (name, builtin(q(), b, &w).unwrap().underlying))
        .collect();

    // Set-partition counts, against an enumerator that never touches the
    // composition product.
    let comm = &seqs.iter().find(|(n, _)| *n == "comm").unwrap().1;
    let cc = compose(comm, comm, &w).unwrap();
    let bell: Vec<usize> = (1..=5).map(count_set_partitions).collect();
    assert_eq!(bell, vec![1, 2, 5, 15, 52]);
    for n in 1..=5usize {
        let got = cc.arity(n).map_or(0, SymRep::total_dim);
        assert_eq!(got, bell[n - 1], "(comm ∘ comm) arity {n}");
    }

    // Unit laws for every builtin.
    let unit = SymSeqObject::triv(q(), w).unwrap();
    for (name, x) in &seqs {
        assert_iso(&compose(&unit, x, &w).unwrap(), x, &format!("1 ∘ {name}"));
        assert_iso(&compose(x, &unit, &w).unwrap(), x, &format!("{name} ∘ 1"));
    }

    // Associativity for every ordered pair: (x ∘ y) ∘ y against x ∘ (y ∘ y),
    // compared as dimension tables plus characters on all conjugacy classes.
    for (ny, y) in &seqs {
        let yy = compose(y, y, &w).unwrap();
        for (nx, x) in &seqs {
            let xy = compose(x, y, &w).unwrap();
            let left = compose(&xy, y, &w).unwrap();
            let right = compose(x, &yy, &w).unwrap();
            assert_iso(&left, &right, &format!("({nx} ∘ {ny}) ∘ {ny} vs {nx} ∘ ({ny} ∘ {ny})"));
        }
    }
    budget(t, 60, "composition counts and monoidal laws through arity 5");
}

#[test]
fn criterion_4_presented_operads_match_builtins() {
    let t = Instant::now();
    let w = win(4, -4, 4);
    let cases = [
        ("lie", lie_presentation(), Builtin::Lie, [1usize, 1, 2, 6]),
        ("ass", ass_presentation(), Builtin::AssNu, [1, 2, 6, 24]),
        ("comm", comm_presentation(), Builtin::CommNu, [1, 1, 1, 1]),
    ];
    for (name, pres, b, dims) in cases {
        let presented = presented_operad(q(), &pres, &w).unwrap();
        let built = builtin(q(), b, &w).unwrap();
        for n in 1..=4usize {
            let got = presented.underlying.arity(n).map_or(0, SymRep::total_dim);
            assert_eq!(got, dims[n - 1], "{name}: arity {n} dimension");
        }
        assert_iso(&presented.underlying, &built.underlying, name);
    }
    budget(t, 60, "presented operads against builtins through arity 4");
}

#[test]
fn criterion_5_milnor_moore_over_the_rationals() {
    let t = Instant::now();
    let corpus = [
        ("abelian even", abelian_lie(q(), &[ev("u", 2), ev("w", 4)]).unwrap()),
        ("abelian odd", abelian_lie(q(), &[od("a", 1), od("b", 3)]).unwrap()),
        ("heisenberg", heisenberg_lie(q())),
        (
            "free lie on two generators",
            free_lie_presentation(q(), &[ev("x", 1), ev("y", 1)], 5).unwrap(),
        ),
    ];
    for (name, l) in &corpus {
        let rep = milnor_moore_check(l, 5).unwrap();
        assert!(rep.all_iso, "{name}: unit map is not an isomorphism through degree 5");
        assert!(rep.primitively_generated, "{name}: not primitively generated");
        for row in &rep.rows {
            assert_eq!(row.dim_lie, row.dim_primitives, "{name}: degree {}", row.degree);
        }
    }

    // Necklace dimensions for the free Lie algebra on two letters, by two
    // independent routes: the free algebra over the Lie operad, and the
    // primitives of the tensor Hopf algebra.
    let expected = witt_dims(2, 5);
    assert_eq!(expected, vec![2, 1, 2, 3, 6]);

    let w = win(5, -2, 2);
    let lie = builtin(q(), Builtin::Lie, &w).unwrap();
    let letters =
        ChainComplex::with_zero_diff(GradedSpace::single(q(), 0, vec!["x".into(), "y".into()]));
    let table = free_algebra_bigraded(&lie.underlying, &letters, 5).unwrap();
    let operadic: Vec<usize> = (1..=5)
        .map(|n| table.get(&n).map_or(0, |by| by.values().sum()))
        .collect();
    assert_eq!(operadic, expected, "free algebra over the Lie operad");

    let th = tensor_hopf(q(), &[ev("x", 1), ev("y", 1)], 5).unwrap();
    let primitive: Vec<usize> = (1..=5).map(|n| primitives(&th, n).unwrap().cols).collect();
    assert_eq!(primitive, expected, "primitives of the tensor Hopf algebra");

    budget(t, 60, "Milnor–Moore corpus through degree 5");
}

#[test]
fn criterion_6_restricted_primitives_in_prime_characteristic() {
    let t = Instant::now();
    let r2 = restricted_monad(fp(2), &[ev("v", 1)], 8).unwrap();
    let dims2: Vec<usize> = (1..=8).map(|n| r2.dims.get(&n).copied().unwrap_or(0)).collect();
    assert_eq!(dims2, vec![1, 1, 0, 1, 0, 0, 0, 1], "mod 2: primitives off the powers of 2");
    assert!(r2.closure_ok, "mod 2: commutators and squares fail to span");

    let r3 = restricted_monad(fp(3), &[ev("v", 1)], 9).unwrap();
    let dims3: Vec<usize> = (1..=9).map(|n| r3.dims.get(&n).copied().unwrap_or(0)).collect();
    assert_eq!(dims3, vec![1, 0, 1, 0, 0, 0, 0, 0, 1], "mod 3: primitives off the powers of 3");
    assert!(r3.closure_ok, "mod 3: commutators and cubes fail to span");

    // Negative control: in characteristic p the p-th power of a primitive is
    // again primitive, so the unit map of an abelian Lie algebra is not onto.
    let l = abelian_lie(fp(2), &[ev("x", 1)]).unwrap();
    let rep = milnor_moore_check(&l, 2).unwrap();
    assert!(!rep.all_iso, "mod 2: the unit map should fail");
    let row = rep.rows.iter().find(|r| r.degree == 2).unwrap();
    assert_eq!(row.dim_lie, 0);
    assert_eq!(row.dim_primitives, 1);
    assert!(!row.unit_iso);

    budget(t, 60, "restricted primitives in characteristic 2 and 3");
}

#[test]
fn criterion_7_norm_maps_detect_the_field() {
    let t = Instant::now();

    // Over ℚ the averaging argument makes every norm map invertible; check it
    // on every representation arising in composition products of builtins.
    let w = win(5, -6, 2);
    let seqs: Vec<(&str, SymSeqObject)> = BUILTINS
        .iter()
        .map(|&(name, b)| (name, builtin(q(), b, &w).unwrap().underlying))
        .collect();
    let mut seen = 0usize;
    for (nx, x) in &seqs {
        for (ny, y) in &seqs {
            let comp = compose(x, y, &w).unwrap();
            for (n, rep) in comp.arity_iter() {
                let report = norm_map(rep);
                assert!(report.is_iso, "{nx} ∘ {ny}: norm fails at arity {n} over ℚ");
                assert_eq!(
                    report.coinvariants, report.invariants,
                    "{nx} ∘ {ny}: arity {n} coinvariant/invariant dimensions differ"
                );
                seen += 1;
            }
        }
    }
    assert!(seen >= 25, "expected plenty of representations, saw {seen}");

    // Trivial modules in characteristic dividing the group order: the norm
    // multiplies by |Σ_n| and dies.
    let triv2 = SymRep::trivial(
        2,
        ChainComplex::with_zero_diff(GradedSpace::single(fp(2), 0, vec!["e".into()])),
    );
    assert!(!norm_map(&triv2).is_iso, "trivial Σ₂-module over F₂ has no norm");

    let triv3 = SymRep::trivial(
        3,
        ChainComplex::with_zero_diff(GradedSpace::single(fp(3), 0, vec!["e".into()])),
    );
    assert!(!norm_map(&triv3).is_iso, "trivial Σ₃-module over F₃ has no norm");

    // The regular module stays induced, hence keeps an invertible norm even
    // in characteristic 3.
    let reg = norm_map(&regular_rep(fp(3), 3));
    assert!(reg.is_iso, "regular Σ₃-module over F₃ keeps its norm");
    assert_eq!(reg.coinvariants, BTreeMap::from([(0, 1)]));
    assert_eq!(reg.invariants, BTreeMap::from([(0, 1)]));

    budget(t, 60, "norm maps through arity 5");
}

#[test]
fn criterion_8_truncation_tower_of_the_shifted_lie_operad() {
    let t = Instant::now();
    let w = win(4, -8, 8);
    let o = builtin(q(), Builtin::LieShifted, &w).unwrap();
    let report = truncation_tower(&o, &w, 2).unwrap();

    assert!(report.all_consistent(), "Euler bookkeeping fails across the tower");
    assert_eq!(report.stages.len(), 2);

    // Stage 1: one-dimensional homology in degree 0 at every arity.
    let s1 = &report.stages[0];
    assert_eq!(s1.stage, 1);
    let expected: BTreeMap<(usize, Degree), usize> =
        (1..=4).map(|n| ((n, 0), 1)).collect();
    assert_eq!(dim_table(&s1.homology), expected, "stage 1 dimensions");

    // Each stage concentrates in the single degree 1 − stage (arity 1 is the
    // untouched unit); arities with zero homology are absent.
    for stage in &report.stages {
        let drop = 1 - stage.stage as Degree;
        for (&n, conc) in &stage.concentration {
            let want = if n == 1 { 0 } else { drop };
            assert_eq!(
                conc,
                &Some(want),
                "stage {} arity {n}: homology not concentrated in degree {want}",
                stage.stage
            );
        }
        for (&n, ok) in &stage.norms {
            assert!(ok, "stage {} arity {n}: norm map fails", stage.stage);
        }
    }
    // Stage 2 genuinely carries homology beyond the unit.
    let s2 = &report.stages[1];
    assert!(
        s2.concentration.keys().any(|&n| n >= 2),
        "stage 2 carries no homology beyond arity 1"
    );

    budget(t, 300, "truncation tower of the shifted Lie operad through arity 4");
}

#[test]
fn criterion_9_structural_axioms_and_euler_bookkeeping() {
    let t = Instant::now();
    let w = win(4, -8, 8);

    // Operad axioms for every builtin over ℚ, and over small prime fields
    // where the construction is sign-free.
    for &(name, b) in &BUILTINS {
        let o = builtin(q(), b, &w).unwrap();
        let rep = check_operad(&o);
        assert!(rep.is_valid(), "{name} over Q: {:?}", rep.failures);
    }
    for p in [2u64, 3] {
        for &(name, b) in &[("triv", Builtin::Triv), ("comm", Builtin::CommNu), ("ass", Builtin::AssNu)] {
            let o = builtin(fp(p), b, &w).unwrap();
            let rep = check_operad(&o);
            assert!(rep.is_valid(), "{name} over F{p}: {:?}", rep.failures);
        }
    }

    // Every bar complex: the differential squares to zero degree by degree,
    // and the Euler characteristic of the chains equals that of the homology.
    let mut complexes = 0usize;
    for &(name, b) in &BUILTINS {
        let o = builtin(q(), b, &w).unwrap();
        let sides = [
            (OpModule::trivial(&o).unwrap(), LeftModule::Trivial),
            (OpModule::regular(&o), LeftModule::Trivial),
            (OpModule::trivial(&o).unwrap(), LeftModule::Regular),
        ];
        for (xm, ym) in sides {
            let bar = bar_complex(&xm, &o, ym, &w).unwrap();
            for (n, rep) in bar.underlying.arity_iter() {
                let c = &rep.complex;
                let mut chi_chain = 0i64;
                let mut chi_homology = 0i64;
                for deg in c.space.support() {
                    let sign = if deg.rem_euclid(2) == 0 { 1 } else { -1 };
                    chi_chain += sign * c.space.dim(deg) as i64;
                    chi_homology += sign * homology_dim(c, deg) as i64;
                    let squared = c.d_sparse(deg - 1).mul(&c.d_sparse(deg));
                    assert!(squared.is_zero(), "{name}: d² ≠ 0 at arity {n} degree {deg}");
                }
                assert_eq!(chi_chain, chi_homology, "{name}: Euler mismatch at arity {n}");
                complexes += 1;
            }
        }
    }
    assert!(complexes > 0, "no bar complexes were built");

    // Hopf axioms, antipode identities included, on every kind of Hopf
    // presentation the crate constructs.
    let hopfs: Vec<(&str, HopfPresentation)> = vec![
        ("tensor over Q", tensor_hopf(q(), &[od("a", 1), ev("b", 2)], 5).unwrap()),
        ("tensor over F2", tensor_hopf(fp(2), &[ev("x", 1)], 6).unwrap()),
        ("tensor over F3", tensor_hopf(fp(3), &[ev("x", 1), ev("y", 2)], 5).unwrap()),
        (
            "enveloping heisenberg",
            enveloping(&heisenberg_lie(q()), 5).unwrap().hopf,
        ),
        (
            "enveloping abelian odd",
            enveloping(&abelian_lie(q(), &[od("a", 1)]).unwrap(), 4).unwrap().hopf,
        ),
        (
            "enveloping free lie",
            enveloping(&free_lie_presentation(q(), &[ev("x", 1), ev("y", 1)], 4).unwrap(), 4)
                .unwrap()
                .hopf,
        ),
    ];
    for (name, h) in &hopfs {
        assert_eq!(check_hopf(h), Vec::<String>::new(), "{name}: axiom failures");
    }

    // Symmetric-algebra exponential law in three generator configurations.
    let configs: [(Vec<Generator>, Vec<Generator>, Degree); 3] = [
        (vec![ev("u", 2)], vec![ev("w", 2)], 8),
        (vec![od("a", 1)], vec![od("b", 1)], 5),
        (vec![od("a", 1), ev("u", 2)], vec![ev("w", 2), od("c", 3)], 6),
    ];
    for (xg, yg, d) in &configs {
        let r = sym_exponential_check(q(), xg, yg, *d).unwrap();
        assert!(r.all_equal, "exponential law fails up to degree {d}");
    }

    budget(t, 600, "structural suite");
}
