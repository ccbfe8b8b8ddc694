//! Input resolution: field names, generator lists, truncation windows with
//! fail-fast cost guards, and the JSON file formats for operad
//! presentations, symmetric sequences, and Lie presentations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use opcalc::field::{FieldSpec, Matrix, Scalar, SparseMat};
use opcalc::graded::{ChainComplex, Degree, GradedSpace, Window};
use opcalc::hopf::{
    abelian_lie, free_lie_presentation, heisenberg_lie, DegreeBlocks, Generator, LiePresentation,
};
use opcalc::operad::{
    builtin, presented_operad, Builtin, GenSpec, Operad, OperadError, OperadPresentation,
    Relation, Symmetry, Tree,
};
use opcalc::symseq::{ActionMaps, SymRep, SymSeqObject};

use crate::CliError;

/// Largest arity any command accepts.
pub const MAX_ARITY_BOUND: usize = 7;
/// Largest homological degree span any command accepts.
pub const MAX_DEGREE_SPAN: Degree = 32;
/// Largest degree cap for the word-algebra commands.
pub const MAX_HOPF_DEGREE: Degree = 32;
/// Largest total number of tensor words the word-algebra commands allow.
pub const MAX_WORDS: u128 = 100_000;

/// Builtin operad names accepted on the command line.
pub const BUILTIN_NAMES: [&str; 5] = ["triv", "comm-nu", "ass-nu", "lie", "lie-shifted"];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parse a field name: `q` for the rationals, `f<p>` or a bare prime for a
/// prime field.
pub fn parse_field(s: &str) -> Result<FieldSpec, CliError> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("q") {
        return Ok(FieldSpec::Q);
    }
    let digits = t
        .strip_prefix('f')
        .or_else(|| t.strip_prefix('F'))
        .unwrap_or(t);
    let p: u64 = digits
        .parse()
        .map_err(|_| usage(format!("unknown field '{s}': expected q, f<p>, or a prime p")))?;
    FieldSpec::fp(p).map_err(|e| usage(format!("field '{s}': {e}")))
}

/// Re-validate a field read from a file (the serialized form can name a
/// composite characteristic).
fn validate_field(f: FieldSpec) -> Result<FieldSpec, CliError> {
    match f {
        FieldSpec::Q => Ok(f),
        FieldSpec::Fp(p) => FieldSpec::fp(p).map_err(|e| usage(format!("field in file: {e}"))),
    }
}

/// Parse a generator list like `1:1` or `1:2:odd,2:1`. Each group is
/// `degree:count[:odd|:even]`; parity defaults to even. Labels are assigned
/// as `v0`, `v1`, ... across the whole list.
pub fn parse_gens(s: &str) -> Result<Vec<Generator>, CliError> {
    let mut out = Vec::new();
    for group in s.split(',') {
        let group = group.trim();
        let parts: Vec<&str> = group.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(usage(format!(
                "generator group '{group}' is not of the form degree:count[:odd|:even]"
            )));
        }
        let degree: Degree = parts[0]
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad degree '{}' in '{group}'", parts[0])))?;
        let count: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| usage(format!("bad count '{}' in '{group}'", parts[1])))?;
        let odd = match parts.get(2).map(|p| p.trim()) {
            None | Some("even") => false,
            Some("odd") => true,
            Some(other) => return Err(usage(format!("bad parity '{other}' in '{group}'"))),
        };
        for _ in 0..count {
            let j = out.len();
            out.push(Generator::new(&format!("v{j}"), degree, odd));
        }
    }
    if out.is_empty() {
        return Err(usage("no generators given"));
    }
    Ok(out)
}

/// Resolve a builtin operad name.
pub fn parse_builtin(s: &str) -> Option<Builtin> {
    match s {
        "triv" => Some(Builtin::Triv),
        "comm-nu" => Some(Builtin::CommNu),
        "ass-nu" => Some(Builtin::AssNu),
        "lie" => Some(Builtin::Lie),
        "lie-shifted" => Some(Builtin::LieShifted),
        _ => None,
    }
}

/// Resolve the truncation window, defaulting the degree range to
/// `[-2a, 2a]` for arity bound `a`, and fail fast when the bounds would
/// make the bar complexes unreasonably large.
pub fn resolve_window(
    max_arity: usize,
    min_deg: Option<Degree>,
    max_deg: Option<Degree>,
) -> Result<Window, CliError> {
    if max_arity == 0 {
        return Err(usage("--max-arity must be at least 1"));
    }
    if max_arity > MAX_ARITY_BOUND {
        return Err(usage(format!(
            "--max-arity {max_arity} exceeds the supported bound {MAX_ARITY_BOUND}; \
             a bar complex over that window would hold about {:.1e} cells",
            predicted_bar_cells(max_arity)
        )));
    }
    let a = max_arity as Degree;
    let lo = min_deg.unwrap_or(-2 * a);
    let hi = max_deg.unwrap_or(2 * a);
    if lo > hi {
        return Err(usage(format!("empty degree range {lo}..{hi}")));
    }
    let span = hi - lo + 1;
    if span > MAX_DEGREE_SPAN {
        return Err(usage(format!(
            "degree span {span} exceeds the supported bound {MAX_DEGREE_SPAN}"
        )));
    }
    Window::new(max_arity, lo, hi).map_err(|e| usage(e.to_string()))
}

/// Predict the number of bar cells over a window with the given arity
/// bound: cells at one arity are chains of proper coarsenings in the
/// partition lattice, counted through the Stirling recurrence. Quoted in
/// the diagnostic when a window is rejected.
pub fn predicted_bar_cells(max_arity: usize) -> f64 {
    let a = max_arity.min(64);
    // stirling[n][b] counts partitions of n points into b blocks
    let mut stirling = vec![vec![0.0_f64; a + 1]; a + 1];
    stirling[0][0] = 1.0;
    for n in 1..=a {
        for b in 1..=n {
            stirling[n][b] = stirling[n - 1][b - 1] + (b as f64) * stirling[n - 1][b];
        }
    }
    let mut cells = vec![0.0_f64; a + 1];
    let mut total = 0.0;
    for n in 2..=a {
        let mut c = 1.0;
        for b in 2..n {
            c += stirling[n][b] * cells[b];
        }
        cells[n] = c;
        total += c;
    }
    total
}

/// Bound the number of tensor words on the given letters up to the degree
/// cap, failing fast with the predicted count when it exceeds the budget.
pub fn guard_words(letters: &[(Degree, usize)], max_degree: Degree) -> Result<(), CliError> {
    if max_degree < 1 {
        return Err(usage("--max-degree must be at least 1"));
    }
    if max_degree > MAX_HOPF_DEGREE {
        return Err(usage(format!(
            "--max-degree {max_degree} exceeds the supported bound {MAX_HOPF_DEGREE}"
        )));
    }
    for &(d, _) in letters {
        if d < 1 {
            return Err(usage(format!(
                "generator degree {d} is not supported; degrees must be at least 1"
            )));
        }
    }
    let cap = max_degree as usize;
    let mut words = vec![0u128; cap + 1];
    words[0] = 1;
    for n in 1..=cap {
        let mut w: u128 = 0;
        for &(d, count) in letters {
            let d = d as usize;
            if d <= n {
                w = w.saturating_add(words[n - d].saturating_mul(count as u128));
            }
        }
        words[n] = w;
    }
    let total = words.iter().fold(0u128, |s, &w| s.saturating_add(w));
    if total > MAX_WORDS {
        return Err(usage(format!(
            "about {total} tensor words in degrees up to {max_degree}; the supported budget is {MAX_WORDS}"
        )));
    }
    Ok(())
}

/// Letter multiset of a generator list, for the word-count guard.
pub fn letters_of(gens: &[Generator]) -> Vec<(Degree, usize)> {
    gens.iter().map(|g| (g.degree, 1)).collect()
}

/// Letter multiset of a Lie presentation's basis, for the word-count guard.
pub fn lie_letters(l: &LiePresentation) -> Vec<(Degree, usize)> {
    l.space
        .support()
        .into_iter()
        .map(|d| (d, l.space.dim(d)))
        .collect()
}

// ---------------------------------------------------------------------------
// coefficients

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffFile {
    Int(i64),
    Text(String),
}

/// Parse a coefficient into a normalized fraction with positive denominator.
fn parse_coeff(c: &CoeffFile) -> Result<(i64, i64), CliError> {
    let (num, den) = match c {
        CoeffFile::Int(n) => (*n, 1),
        CoeffFile::Text(t) => {
            let t = t.trim();
            match t.split_once('/') {
                None => {
                    let n = t
                        .parse()
                        .map_err(|_| usage(format!("bad coefficient '{t}'")))?;
                    (n, 1)
                }
                Some((a, b)) => {
                    let num = a
                        .trim()
                        .parse()
                        .map_err(|_| usage(format!("bad coefficient '{t}'")))?;
                    let den: i64 = b
                        .trim()
                        .parse()
                        .map_err(|_| usage(format!("bad coefficient '{t}'")))?;
                    if den == 0 {
                        return Err(usage(format!("coefficient '{t}' has a zero denominator")));
                    }
                    (num, den)
                }
            }
        }
    };
    Ok(if den < 0 { (-num, -den) } else { (num, den) })
}

fn coeff_scalar(field: FieldSpec, c: &CoeffFile) -> Result<Scalar, CliError> {
    let (num, den) = parse_coeff(c)?;
    if den == 1 {
        return Ok(field.int(num));
    }
    let inv = field
        .inv(&field.int(den))
        .map_err(|e| usage(format!("coefficient with denominator {den}: {e}")))?;
    Ok(field.mul(&field.int(num), &inv))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

// ---------------------------------------------------------------------------
// operad presentations

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PresentationFile {
    field: FieldSpec,
    generators: Vec<GenFile>,
    #[serde(default)]
    relations: Vec<Vec<TermFile>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GenFile {
    label: String,
    arity: usize,
    degree: Degree,
    symmetry: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermFile {
    tree: serde_json::Value,
    #[serde(rename = "vertexLabels")]
    vertex_labels: Vec<String>,
    coeff: CoeffFile,
}

/// Parse a tree monomial from its nested-list form. Leaves are the 0-based
/// input labels; each internal vertex takes the next entry of
/// `vertexLabels` in preorder.
fn parse_tree(
    v: &serde_json::Value,
    labels: &[String],
    cursor: &mut usize,
    gens: &[GenSpec],
) -> Result<Tree, CliError> {
    match v {
        serde_json::Value::Number(n) => {
            let l = n
                .as_u64()
                .ok_or_else(|| usage(format!("leaf '{n}' is not a nonnegative integer")))?;
            Ok(Tree::leaf(l as usize))
        }
        serde_json::Value::Array(children) => {
            let label = labels
                .get(*cursor)
                .ok_or_else(|| usage("fewer vertexLabels than internal vertices"))?;
            *cursor += 1;
            let gen = gens
                .iter()
                .position(|g| g.label == *label)
                .ok_or_else(|| usage(format!("unknown generator label '{label}' in a tree")))?;
            let kids = children
                .iter()
                .map(|c| parse_tree(c, labels, cursor, gens))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Tree::node(gen, kids))
        }
        other => Err(usage(format!(
            "tree entries must be integers or arrays, found {other}"
        ))),
    }
}

/// Assemble one relation, clearing coefficient denominators by their least
/// common multiple so the combination has integer coefficients.
fn build_relation(terms: &[TermFile], gens: &[GenSpec]) -> Result<Relation, CliError> {
    let mut parsed = Vec::new();
    for t in terms {
        let (num, den) = parse_coeff(&t.coeff)?;
        let mut cursor = 0usize;
        let tree = parse_tree(&t.tree, &t.vertex_labels, &mut cursor, gens)?;
        if cursor != t.vertex_labels.len() {
            return Err(usage("more vertexLabels than internal vertices"));
        }
        parsed.push((num, den, tree));
    }
    let mut lcm: i64 = 1;
    for &(_, den, _) in &parsed {
        let g = gcd(lcm, den);
        lcm = (lcm / g)
            .checked_mul(den)
            .ok_or_else(|| usage("coefficient denominators overflow"))?;
    }
    let terms = parsed
        .into_iter()
        .map(|(num, den, tree)| {
            num.checked_mul(lcm / den)
                .map(|c| (c, tree))
                .ok_or_else(|| usage("coefficient overflow while clearing denominators"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Relation { terms })
}

/// Read an operad presentation from a JSON file.
///
/// Format: `{"field": "Q" | {"Fp": p}, "generators": [{"label", "arity",
/// "degree", "symmetry"}], "relations": [[{"tree", "vertexLabels",
/// "coeff"}, ...], ...]}` where `symmetry` is `none`, `symmetric`, or
/// `antisymmetric`, a tree is a nested list whose leaves are 0-based input
/// labels, `vertexLabels` names the internal vertices in preorder, and a
/// coefficient is an integer or a string like `"-1"` or `"1/2"`.
pub fn load_presentation(path: &Path) -> Result<(FieldSpec, OperadPresentation), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let file: PresentationFile = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let field = validate_field(file.field)?;
    let generators = file
        .generators
        .iter()
        .map(|g| {
            let symmetry = match g.symmetry.as_str() {
                "none" => Symmetry::None,
                "symmetric" => Symmetry::Symmetric,
                "antisymmetric" => Symmetry::Antisymmetric,
                other => {
                    return Err(usage(format!(
                        "unknown symmetry '{other}' (expected none, symmetric, or antisymmetric)"
                    )))
                }
            };
            Ok(GenSpec {
                label: g.label.clone(),
                arity: g.arity,
                degree: g.degree,
                symmetry,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let relations = file
        .relations
        .iter()
        .map(|r| build_relation(r, &generators))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((
        field,
        OperadPresentation {
            generators,
            relations,
        },
    ))
}

/// Classify presentation failures: malformed input exits 2, an inconsistent
/// presentation exits 3.
fn map_operad_err(e: OperadError) -> CliError {
    match e {
        OperadError::InconsistentRelation(_) => CliError::Axiom(e.to_string()),
        other => usage(other.to_string()),
    }
}

/// Resolve `--operad`/`--operad-json` into an operad over the window.
pub fn load_operad(
    name: Option<&str>,
    json: Option<&Path>,
    field_flag: Option<&str>,
    window: &Window,
) -> Result<Operad, CliError> {
    match (name, json) {
        (Some(_), Some(_)) => Err(usage("give exactly one of --operad and --operad-json")),
        (None, None) => Err(usage("one of --operad and --operad-json is required")),
        (Some(n), None) => {
            let b = parse_builtin(n).ok_or_else(|| {
                usage(format!(
                    "unknown operad '{n}' (expected one of {})",
                    BUILTIN_NAMES.join(", ")
                ))
            })?;
            let field = parse_field(field_flag.unwrap_or("q"))?;
            builtin(field, b, window).map_err(|e| usage(e.to_string()))
        }
        (None, Some(p)) => {
            if field_flag.is_some() {
                return Err(usage(
                    "--field conflicts with --operad-json; the file fixes the field",
                ));
            }
            let (field, pres) = load_presentation(p)?;
            presented_operad(field, &pres, window).map_err(map_operad_err)
        }
    }
}

// ---------------------------------------------------------------------------
// symmetric sequences

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SymSeqFile {
    arities: BTreeMap<String, ArityFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ArityFile {
    degrees: BTreeMap<String, DegreeFile>,
    #[serde(default)]
    transpositions: Vec<Vec<Vec<CoeffFile>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DegreeFile {
    basis: Vec<String>,
}

fn degree_at(offsets: &[(Degree, usize, usize)], i: usize) -> Degree {
    for &(d, off, dim) in offsets {
        if i >= off && i < off + dim {
            return d;
        }
    }
    unreachable!("index inside the total basis");
}

/// Build one arity of a sequence file; `None` when every degree is empty.
fn parse_rep(
    field: FieldSpec,
    n: usize,
    file: &ArityFile,
    window: &Window,
    name: &str,
) -> Result<Option<SymRep>, CliError> {
    let mut degrees: BTreeMap<Degree, Vec<String>> = BTreeMap::new();
    for (dk, df) in &file.degrees {
        let d: Degree = dk
            .trim()
            .parse()
            .map_err(|_| usage(format!("{name}: degree key '{dk}' is not an integer")))?;
        if d < window.min_deg || d > window.max_deg {
            return Err(usage(format!(
                "{name}: degree {d} lies outside the window {}..{}",
                window.min_deg, window.max_deg
            )));
        }
        if !df.basis.is_empty() {
            degrees.insert(d, df.basis.clone());
        }
    }
    let mut space = GradedSpace::new(field);
    let mut offsets: Vec<(Degree, usize, usize)> = Vec::new();
    let mut total = 0usize;
    for (&d, basis) in &degrees {
        offsets.push((d, total, basis.len()));
        total += basis.len();
        space.set_basis(d, basis.clone());
    }
    if total == 0 {
        return Ok(None);
    }
    if file.transpositions.len() != n - 1 {
        return Err(usage(format!(
            "{name}: arity {n} needs {} transposition matrices, found {}",
            n - 1,
            file.transpositions.len()
        )));
    }
    let mut actions: Vec<ActionMaps> = Vec::new();
    for (t, rows) in file.transpositions.iter().enumerate() {
        if rows.len() != total || rows.iter().any(|r| r.len() != total) {
            return Err(usage(format!(
                "{name}: transposition {t} at arity {n} must be a {total}x{total} matrix"
            )));
        }
        let mut entries = vec![vec![field.zero(); total]; total];
        for (i, row) in rows.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                entries[i][j] = coeff_scalar(field, c)?;
            }
        }
        // actions must preserve degree: anything off the diagonal blocks is
        // an input error
        for (i, row) in entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() && degree_at(&offsets, i) != degree_at(&offsets, j) {
                    return Err(usage(format!(
                        "{name}: transposition {t} at arity {n} mixes degrees at entry ({i}, {j})"
                    )));
                }
            }
        }
        let mut maps: ActionMaps = BTreeMap::new();
        for &(d, off, dim) in &offsets {
            let mut block = Matrix::zero(field, dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    block.set(i, j, entries[off + i][off + j].clone());
                }
            }
            maps.insert(d, SparseMat::from_dense(&block));
        }
        actions.push(maps);
    }
    let complex = ChainComplex::with_zero_diff(space);
    SymRep::new(n, complex, actions)
        .map(Some)
        .map_err(|e| usage(format!("{name}: arity {n}: {e}")))
}

/// Resolve `--left`/`--right` for sequence-valued commands: a builtin
/// operad name (its underlying sequence) or a path to a sequence JSON file.
///
/// File format: `{"arities": {"n": {"degrees": {"d": {"basis": [...]}},
/// "transpositions": [m_1, ..., m_{n-1}]}}}` where `m_i` is a square matrix
/// over the whole basis at that arity (degrees ascending, basis order
/// within a degree) giving the action of the adjacent transposition
/// `(i, i+1)`. Entries are integers or strings like `"1/2"`; every
/// transposition must preserve degree. The differential is zero.
pub fn load_sequence(
    spec: &str,
    field_flag: Option<&str>,
    window: &Window,
) -> Result<SymSeqObject, CliError> {
    let field = parse_field(field_flag.unwrap_or("q"))?;
    if let Some(b) = parse_builtin(spec) {
        return Ok(builtin(field, b, window)
            .map_err(|e| usage(e.to_string()))?
            .underlying);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(usage(format!(
            "'{spec}' is not a builtin name ({}) or a readable file",
            BUILTIN_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {spec}: {e}")))?;
    let file: SymSeqFile =
        serde_json::from_str(&text).map_err(|e| usage(format!("{spec}: {e}")))?;
    let mut obj = SymSeqObject::new(field, *window);
    for (key, arity_file) in &file.arities {
        let n: usize = key
            .trim()
            .parse()
            .map_err(|_| usage(format!("{spec}: arity key '{key}' is not an integer")))?;
        if n == 0 {
            return Err(usage(format!(
                "{spec}: arity 0 is not supported; sequences must be reduced"
            )));
        }
        if n > window.max_arity {
            return Err(usage(format!(
                "{spec}: arity {n} exceeds --max-arity {}",
                window.max_arity
            )));
        }
        if let Some(rep) = parse_rep(field, n, arity_file, window, spec)? {
            obj.set_arity(rep).map_err(|e| usage(format!("{spec}: {e}")))?;
        }
    }
    Ok(obj)
}

// ---------------------------------------------------------------------------
// Lie presentations

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LieFile {
    field: FieldSpec,
    generators: Vec<LieGenFile>,
    #[serde(default)]
    brackets: Vec<BracketFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LieGenFile {
    label: String,
    degree: Degree,
    #[serde(default)]
    odd: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BracketFile {
    left: String,
    right: String,
    #[serde(default)]
    value: Vec<ValueTermFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueTermFile {
    gen: String,
    coeff: CoeffFile,
}

/// Read a Lie presentation from a JSON file.
///
/// Format: `{"field": "Q" | {"Fp": p}, "generators": [{"label", "degree",
/// "odd"?}], "brackets": [{"left", "right", "value": [{"gen", "coeff"},
/// ...]}]}`. The basis is the generator list, and every nonzero bracket
/// `[left, right]` must be listed explicitly, including both orders:
/// antisymmetry is checked, never inferred.
pub fn load_lie_file(path: &Path) -> Result<LiePresentation, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let file: LieFile =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let field = validate_field(file.field)?;
    let mut by_degree: BTreeMap<Degree, Vec<(String, bool)>> = BTreeMap::new();
    for g in &file.generators {
        if g.degree < 1 {
            return Err(usage(format!(
                "generator '{}' has degree {}; degrees must be at least 1",
                g.label, g.degree
            )));
        }
        by_degree
            .entry(g.degree)
            .or_default()
            .push((g.label.clone(), g.odd));
    }
    if by_degree.is_empty() {
        return Err(usage("the Lie presentation has no generators"));
    }
    let mut locate: BTreeMap<String, (Degree, usize)> = BTreeMap::new();
    let mut space = GradedSpace::new(field);
    let mut parity: BTreeMap<Degree, Vec<bool>> = BTreeMap::new();
    for (&d, items) in &by_degree {
        for (i, (l, _)) in items.iter().enumerate() {
            if locate.insert(l.clone(), (d, i)).is_some() {
                return Err(usage(format!("duplicate generator label '{l}'")));
            }
        }
        parity.insert(d, items.iter().map(|&(_, o)| o).collect());
        space.set_basis(d, items.iter().map(|(l, _)| l.clone()).collect());
    }
    let mut bracket: DegreeBlocks = BTreeMap::new();
    for b in &file.brackets {
        let &(da, i) = locate
            .get(&b.left)
            .ok_or_else(|| usage(format!("unknown generator '{}' in a bracket", b.left)))?;
        let &(db, j) = locate
            .get(&b.right)
            .ok_or_else(|| usage(format!("unknown generator '{}' in a bracket", b.right)))?;
        let target = da + db;
        let rows = space.dim(target);
        let cols = space.dim(da) * space.dim(db);
        let block = bracket
            .entry((da, db))
            .or_insert_with(|| Matrix::zero(field, rows, cols));
        let col = i * space.dim(db) + j;
        for term in &b.value {
            let &(dg, k) = locate
                .get(&term.gen)
                .ok_or_else(|| usage(format!("unknown generator '{}' in a bracket value", term.gen)))?;
            if dg != target {
                return Err(usage(format!(
                    "bracket [{}, {}] lands in degree {target} but '{}' has degree {dg}",
                    b.left, b.right, term.gen
                )));
            }
            let c = coeff_scalar(field, &term.coeff)?;
            let prev = block.get(k, col).clone();
            block.set(k, col, field.add(&prev, &c));
        }
    }
    Ok(LiePresentation {
        space,
        parity,
        bracket,
        p_operation: None,
    })
}

/// Resolve `--lie`/`--lie-json`: the builtin families `heisenberg`,
/// `abelian` (with `--gens`), and `free` (with `--gens`), or a JSON file.
pub fn load_lie(
    kind: Option<&str>,
    json: Option<&Path>,
    field_flag: Option<&str>,
    gens: Option<&str>,
    max_degree: Degree,
) -> Result<LiePresentation, CliError> {
    match (kind, json) {
        (Some(_), Some(_)) => Err(usage("give exactly one of --lie and --lie-json")),
        (None, None) => Err(usage("one of --lie and --lie-json is required")),
        (None, Some(p)) => {
            if field_flag.is_some() {
                return Err(usage(
                    "--field conflicts with --lie-json; the file fixes the field",
                ));
            }
            if gens.is_some() {
                return Err(usage("--gens conflicts with --lie-json"));
            }
            load_lie_file(p)
        }
        (Some(k), None) => {
            let field = parse_field(field_flag.unwrap_or("q"))?;
            match k {
                "heisenberg" => {
                    if gens.is_some() {
                        return Err(usage("--gens is not used with --lie heisenberg"));
                    }
                    Ok(heisenberg_lie(field))
                }
                "abelian" => {
                    let g =
                        parse_gens(gens.ok_or_else(|| usage("--lie abelian requires --gens"))?)?;
                    abelian_lie(field, &g).map_err(|e| usage(e.to_string()))
                }
                "free" => {
                    let g = parse_gens(gens.ok_or_else(|| usage("--lie free requires --gens"))?)?;
                    guard_words(&letters_of(&g), max_degree)?;
                    free_lie_presentation(field, &g, max_degree).map_err(|e| usage(e.to_string()))
                }
                other => Err(usage(format!(
                    "unknown Lie family '{other}' (expected heisenberg, abelian, or free)"
                ))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_parse() {
        assert_eq!(parse_field("q").unwrap(), FieldSpec::Q);
        assert_eq!(parse_field("Q").unwrap(), FieldSpec::Q);
        assert_eq!(parse_field("f2").unwrap(), FieldSpec::fp(2).unwrap());
        assert_eq!(parse_field("F5").unwrap(), FieldSpec::fp(5).unwrap());
        assert_eq!(parse_field("3").unwrap(), FieldSpec::fp(3).unwrap());
        assert!(parse_field("f4").is_err());
        assert!(parse_field("notafield").is_err());
    }

    #[test]
    fn generator_lists_parse() {
        let gens = parse_gens("1:2:odd,2:1").unwrap();
        assert_eq!(gens.len(), 3);
        assert_eq!(gens[0].label, "v0");
        assert!(gens[0].odd && gens[1].odd && !gens[2].odd);
        assert_eq!(gens[2].degree, 2);
        assert!(parse_gens("1").is_err());
        assert!(parse_gens("1:1:strange").is_err());
        assert!(parse_gens("x:1").is_err());
    }

    #[test]
    fn window_guards_fail_fast() {
        assert!(resolve_window(4, None, None).is_ok());
        let err = resolve_window(9, None, None).unwrap_err();
        assert!(format!("{err}").contains("cells"));
        assert!(resolve_window(4, Some(-20), Some(20)).is_err());
        assert!(resolve_window(0, None, None).is_err());
    }

    #[test]
    fn bar_cell_counts_follow_the_partition_chains() {
        // arity-wise chain counts: 1, 4, 32, 436, 9012
        assert_eq!(predicted_bar_cells(2) as u64, 1);
        assert_eq!(predicted_bar_cells(3) as u64, 5);
        assert_eq!(predicted_bar_cells(6) as u64, 9485);
    }

    #[test]
    fn word_budget_guards_the_degree_cap() {
        let letters = vec![(1, 2)];
        assert!(guard_words(&letters, 8).is_ok());
        assert!(guard_words(&letters, 20).is_err());
        assert!(guard_words(&letters, 0).is_err());
        assert!(guard_words(&[(0, 1)], 4).is_err());
    }

    #[test]
    fn coefficients_normalize() {
        assert_eq!(parse_coeff(&CoeffFile::Int(-3)).unwrap(), (-3, 1));
        assert_eq!(
            parse_coeff(&CoeffFile::Text("4/-6".into())).unwrap(),
            (-4, 6)
        );
        assert!(parse_coeff(&CoeffFile::Text("1/0".into())).is_err());
    }

    #[test]
    fn trees_read_vertex_labels_in_preorder() {
        let gens = vec![
            GenSpec {
                label: "m".into(),
                arity: 2,
                degree: 0,
                symmetry: Symmetry::None,
            },
            GenSpec {
                label: "w".into(),
                arity: 2,
                degree: 0,
                symmetry: Symmetry::None,
            },
        ];
        let v: serde_json::Value = serde_json::from_str("[[0, 1], 2]").unwrap();
        let labels = vec!["m".to_string(), "w".to_string()];
        let mut cursor = 0;
        let tree = parse_tree(&v, &labels, &mut cursor, &gens).unwrap();
        assert_eq!(cursor, 2);
        assert_eq!(
            tree,
            Tree::node(0, vec![Tree::node(1, vec![Tree::leaf(0), Tree::leaf(1)]), Tree::leaf(2)])
        );
    }

    #[test]
    fn relations_clear_denominators() {
        let gens = vec![GenSpec {
            label: "m".into(),
            arity: 2,
            degree: 0,
            symmetry: Symmetry::None,
        }];
        let terms = vec![
            TermFile {
                tree: serde_json::from_str("[0, 1]").unwrap(),
                vertex_labels: vec!["m".into()],
                coeff: CoeffFile::Text("1/2".into()),
            },
            TermFile {
                tree: serde_json::from_str("[1, 0]").unwrap(),
                vertex_labels: vec!["m".into()],
                coeff: CoeffFile::Text("-1/3".into()),
            },
        ];
        let rel = build_relation(&terms, &gens).unwrap();
        let coeffs: Vec<i64> = rel.terms.iter().map(|&(c, _)| c).collect();
        assert_eq!(coeffs, vec![3, -2]);
    }
}
