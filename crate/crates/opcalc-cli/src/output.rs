//! Output rendering: every command produces one serializable report, shown
//! as an aligned text table, a CSV table with a fixed header, or pretty
//! JSON that re-parses into the same report value.

use serde::{Deserialize, Serialize};

/// Output format selector shared by all commands.
#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// One `(arity, degree, dim)` row of a dimension table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimRow {
    pub arity: usize,
    pub degree: i32,
    pub dim: usize,
}

/// A dimension table keyed by arity and degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub rows: Vec<DimRow>,
}

/// One `(degree, dim)` row of a word-algebra dimension table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeRow {
    pub degree: i32,
    pub dim: usize,
}

/// A dimension table keyed by degree alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub rows: Vec<DegreeRow>,
}

/// Enveloping-algebra dimensions with the monomial-basis comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub rows: Vec<DegreeRow>,
    pub pbw: Vec<DegreeRow>,
    pub pbw_match: bool,
}

/// One degree of the Lie-versus-primitives comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmRow {
    pub degree: i32,
    pub dim_lie: usize,
    pub dim_primitives: usize,
    pub unit_iso: bool,
}

/// The Milnor-Moore verdict: rows per degree plus the two global flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmReport {
    pub rows: Vec<MmRow>,
    pub all_iso: bool,
    pub primitively_generated: bool,
}

/// One arity of a norm-map audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub arity: usize,
    pub blocks: usize,
    pub dim: usize,
    pub coinvariants: Vec<DegreeRow>,
    pub is_iso: bool,
}

/// Norm-map audit over every arity of a composition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReportOut {
    pub rows: Vec<NormRow>,
    pub all_iso: bool,
}

/// One `(arity, degree)` cell of a double-dual comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleRow {
    pub arity: usize,
    pub degree: i32,
    pub expected: usize,
    pub computed: usize,
}

/// Per-arity verdict of a double-dual comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleVerdict {
    pub arity: usize,
    pub dims_match: bool,
    pub characters_match: bool,
}

/// Double-dual comparison: dimension cells, verdicts, and the global flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleReportOut {
    pub rows: Vec<DoubleRow>,
    pub verdicts: Vec<DoubleVerdict>,
    pub all_match: bool,
}

/// Norm verdict for one arity of a tower stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormFlag {
    pub arity: usize,
    pub is_iso: bool,
}

/// Concentration degree for one arity of a tower stage; `None` when the
/// homology spreads over several degrees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcFlag {
    pub arity: usize,
    pub degree: Option<i32>,
}

/// One stage of the truncation tower.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerStageOut {
    pub stage: usize,
    pub rows: Vec<DimRow>,
    pub norms: Vec<NormFlag>,
    pub concentration: Vec<ConcFlag>,
}

/// Euler bookkeeping for one fiber sequence between consecutive stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LesRowOut {
    pub from_stage: usize,
    pub arity: usize,
    pub chi_prev: i64,
    pub chi_next: i64,
    pub chi_fiber: i64,
    pub consistent: bool,
}

/// The whole tower: stages plus the Euler consistency audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerReportOut {
    pub stages: Vec<TowerStageOut>,
    pub les: Vec<LesRowOut>,
    pub all_consistent: bool,
}

/// Axiom-check verdict for one operad.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRowOut {
    pub name: String,
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Axiom-check verdicts over the requested operads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReportOut {
    pub results: Vec<CheckRowOut>,
}

/// Serialize a report as pretty JSON with a trailing newline.
pub fn render_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports always serialize");
    s.push('\n');
    s
}

/// A CSV table with exactly the given header.
pub fn render_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("csv header");
    for r in rows {
        w.write_record(r).expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf8")
}

fn table_line(out: &mut String, widths: &[usize], cells: &[String]) {
    for (i, c) in cells.iter().enumerate() {
        if i + 1 == cells.len() {
            out.push_str(c);
        } else {
            out.push_str(c);
            for _ in c.len()..widths[i] + 2 {
                out.push(' ');
            }
        }
    }
    out.push('\n');
}

/// An aligned text table: columns padded to their widest cell, two spaces
/// between columns, no trailing padding.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.len());
        }
    }
    let mut out = String::new();
    let head: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    table_line(&mut out, &widths, &head);
    for r in rows {
        table_line(&mut out, &widths, r);
    }
    out
}

/// Cells of an `(arity, degree, dim)` table.
pub fn dim_cells(rows: &[DimRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.arity.to_string(),
                r.degree.to_string(),
                r.dim.to_string(),
            ]
        })
        .collect()
}

/// Cells of a `(degree, dim)` table.
pub fn degree_cells(rows: &[DegreeRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![r.degree.to_string(), r.dim.to_string()])
        .collect()
}
