//! The nine subcommands. Each resolves its inputs, runs one engine
//! construction, and renders a single report in the requested format.
//! Mathematical verdicts ("this norm map is not invertible") are ordinary
//! output; only broken internal algebra is surfaced as an axiom failure.

use std::collections::BTreeSet;

use rayon::prelude::*;

use opcalc::field::FieldSpec;
use opcalc::graded::Degree;
use opcalc::hopf::{enveloping, milnor_moore_check, primitives, tensor_hopf, HopfError};
use opcalc::koszul::{double_dual_check, koszul_dual, truncation_tower, KoszulError};
use opcalc::operad::check_operad;
use opcalc::symseq::{compose, norm_audit_compose};

use crate::cli::{
    CheckArgs, Command, ComposeArgs, DoubleDualArgs, DualArgs, LieCmdArgs, NormArgs,
    PrimitivesArgs, TowerArgs,
};
use crate::input::{
    guard_words, letters_of, lie_letters, load_lie, load_operad, load_sequence, parse_builtin,
    parse_field, parse_gens, resolve_window, BUILTIN_NAMES,
};
use crate::output::{
    degree_cells, dim_cells, render_csv, render_json, render_table, CheckReportOut, CheckRowOut,
    ConcFlag, DegreeReport, DegreeRow, DimReport, DimRow, DoubleReportOut, DoubleRow,
    DoubleVerdict, EnvelopeReport, Format, LesRowOut, MmReport, MmRow, NormFlag, NormReportOut,
    NormRow, TowerReportOut, TowerStageOut,
};
use crate::CliError;

/// Rendered output plus an optional axiom failure; the text is printed
/// either way, and a failure turns the exit code to 3.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub axiom_failure: Option<String>,
}

fn ok(text: String) -> Outcome {
    Outcome {
        text,
        axiom_failure: None,
    }
}

/// Run one parsed subcommand to its rendered output.
pub fn run_command(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Dual(a) => dual(a),
        Command::Compose(a) => compose_cmd(a),
        Command::Tower(a) => tower(a),
        Command::Primitives(a) => primitives_cmd(a),
        Command::Envelope(a) => envelope(a),
        Command::MmCheck(a) => mm_check(a),
        Command::Norm(a) => norm(a),
        Command::DoubleDual(a) => double_dual(a),
        Command::Check(a) => check(a),
    }
}

/// Window overflows and malformed inputs exit 2; everything else the bar
/// machinery can report is a broken internal invariant and exits 3.
fn map_koszul_err(e: KoszulError) -> CliError {
    match e {
        KoszulError::NotReduced | KoszulError::BadStage => CliError::Usage(e.to_string()),
        KoszulError::Graded(_) | KoszulError::SymSeq(_) => CliError::Usage(format!(
            "{e}; try a wider degree window or a smaller arity bound"
        )),
        other => CliError::Axiom(other.to_string()),
    }
}

/// A presentation that is not Lie, a bad generator, or a missing prime
/// field is an input error; a quotient that fails to carry the structure
/// is an internal one.
fn map_hopf_err(e: HopfError) -> CliError {
    match e {
        HopfError::NotCoideal(_) | HopfError::NotStable(_) => CliError::Axiom(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn render_dims(r: &DimReport, f: Format) -> String {
    match f {
        Format::Json => render_json(r),
        Format::Csv => render_csv(&["arity", "degree", "dim"], &dim_cells(&r.rows)),
        Format::Table => render_table(&["arity", "degree", "dim"], &dim_cells(&r.rows)),
    }
}

fn render_degrees(r: &DegreeReport, f: Format) -> String {
    match f {
        Format::Json => render_json(r),
        Format::Csv => render_csv(&["degree", "dim"], &degree_cells(&r.rows)),
        Format::Table => render_table(&["degree", "dim"], &degree_cells(&r.rows)),
    }
}

fn dual(a: DualArgs) -> Result<Outcome, CliError> {
    let window = resolve_window(a.window.max_arity, a.window.min_deg, a.window.max_deg)?;
    let op = load_operad(
        a.operad.operad.as_deref(),
        a.operad.operad_json.as_deref(),
        a.operad.field.as_deref(),
        &window,
    )?;
    let kd = koszul_dual(&op, &window).map_err(map_koszul_err)?;
    // arity 1 is the unit and is left off the table
    let rows: Vec<DimRow> = kd
        .underlying
        .dims()
        .into_iter()
        .filter(|&(n, _, _)| n >= 2)
        .map(|(n, d, k)| DimRow {
            arity: n,
            degree: d,
            dim: k,
        })
        .collect();
    Ok(ok(render_dims(&DimReport { rows }, a.format.format)))
}

fn compose_cmd(a: ComposeArgs) -> Result<Outcome, CliError> {
    let window = resolve_window(a.window.max_arity, a.window.min_deg, a.window.max_deg)?;
    let x = load_sequence(&a.left, a.field.as_deref(), &window)?;
    let y = load_sequence(&a.right, a.field.as_deref(), &window)?;
    let z = compose(&x, &y, &window).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<DimRow> = z
        .dims()
        .into_iter()
        .map(|(n, d, k)| DimRow {
            arity: n,
            degree: d,
            dim: k,
        })
        .collect();
    Ok(ok(render_dims(&DimReport { rows }, a.format.format)))
}

fn tower(a: TowerArgs) -> Result<Outcome, CliError> {
    let window = resolve_window(a.window.max_arity, a.window.min_deg, a.window.max_deg)?;
    if a.max_stage == 0 || a.max_stage > window.max_arity {
        return Err(CliError::Usage(format!(
            "--max-stage must lie in 1..={}",
            window.max_arity
        )));
    }
    let op = load_operad(
        a.operad.operad.as_deref(),
        a.operad.operad_json.as_deref(),
        a.operad.field.as_deref(),
        &window,
    )?;
    let rep = truncation_tower(&op, &window, a.max_stage).map_err(map_koszul_err)?;
    let out = TowerReportOut {
        stages: rep
            .stages
            .iter()
            .map(|s| TowerStageOut {
                stage: s.stage,
                rows: s
                    .homology
                    .dims()
                    .into_iter()
                    .map(|(n, d, k)| DimRow {
                        arity: n,
                        degree: d,
                        dim: k,
                    })
                    .collect(),
                norms: s
                    .norms
                    .iter()
                    .map(|(&n, &b)| NormFlag {
                        arity: n,
                        is_iso: b,
                    })
                    .collect(),
                concentration: s
                    .concentration
                    .iter()
                    .map(|(&n, &d)| ConcFlag {
                        arity: n,
                        degree: d,
                    })
                    .collect(),
            })
            .collect(),
        les: rep
            .les_rows
            .iter()
            .map(|r| LesRowOut {
                from_stage: r.from_stage,
                arity: r.arity,
                chi_prev: r.chi_prev,
                chi_next: r.chi_next,
                chi_fiber: r.chi_fiber,
                consistent: r.consistent,
            })
            .collect(),
        all_consistent: rep.all_consistent(),
    };
    let text = match a.format.format {
        Format::Json => render_json(&out),
        Format::Csv => {
            let last = out.stages.last().expect("at least one stage");
            render_csv(&["arity", "degree", "dim"], &dim_cells(&last.rows))
        }
        Format::Table => render_tower_table(&out),
    };
    let axiom_failure = (!out.all_consistent)
        .then(|| "Euler characteristics are inconsistent across tower stages".to_string());
    Ok(Outcome {
        text,
        axiom_failure,
    })
}

fn render_tower_table(t: &TowerReportOut) -> String {
    let mut s = String::new();
    for st in &t.stages {
        s.push_str(&format!("stage {}\n", st.stage));
        s.push_str(&render_table(
            &["arity", "degree", "dim"],
            &dim_cells(&st.rows),
        ));
        let norms: Vec<String> = st
            .norms
            .iter()
            .map(|n| format!("{}:{}", n.arity, n.is_iso))
            .collect();
        s.push_str(&format!(
            "norms: {}\n",
            if norms.is_empty() {
                "-".to_string()
            } else {
                norms.join(" ")
            }
        ));
        let conc: Vec<String> = st
            .concentration
            .iter()
            .map(|c| match c.degree {
                Some(d) => format!("{}:{}", c.arity, d),
                None => format!("{}:spread", c.arity),
            })
            .collect();
        s.push_str(&format!(
            "concentration: {}\n\n",
            if conc.is_empty() {
                "-".to_string()
            } else {
                conc.join(" ")
            }
        ));
    }
    let les_cells: Vec<Vec<String>> = t
        .les
        .iter()
        .map(|r| {
            vec![
                r.from_stage.to_string(),
                r.arity.to_string(),
                r.chi_prev.to_string(),
                r.chi_next.to_string(),
                r.chi_fiber.to_string(),
                r.consistent.to_string(),
            ]
        })
        .collect();
    s.push_str(&render_table(
        &[
            "from_stage",
            "arity",
            "chi_prev",
            "chi_next",
            "chi_fiber",
            "consistent",
        ],
        &les_cells,
    ));
    s.push_str(&format!("all_consistent: {}\n", t.all_consistent));
    s
}

fn primitives_cmd(a: PrimitivesArgs) -> Result<Outcome, CliError> {
    let field = match (a.char_p, a.field.as_deref()) {
        (Some(p), _) => {
            FieldSpec::fp(p).map_err(|e| CliError::Usage(format!("--char {p}: {e}")))?
        }
        (None, Some(f)) => parse_field(f)?,
        (None, None) => FieldSpec::Q,
    };
    let gens = parse_gens(&a.gens)?;
    guard_words(&letters_of(&gens), a.max_degree)?;
    let h = tensor_hopf(field, &gens, a.max_degree).map_err(map_hopf_err)?;
    let mut rows = Vec::new();
    for n in 1..=a.max_degree {
        let kernel = primitives(&h, n).map_err(map_hopf_err)?;
        rows.push(DegreeRow {
            degree: n,
            dim: kernel.cols,
        });
    }
    Ok(ok(render_degrees(&DegreeReport { rows }, a.format.format)))
}

fn envelope(a: LieCmdArgs) -> Result<Outcome, CliError> {
    let l = load_lie(
        a.lie.as_deref(),
        a.lie_json.as_deref(),
        a.field.as_deref(),
        a.gens.as_deref(),
        a.max_degree,
    )?;
    guard_words(&lie_letters(&l), a.max_degree)?;
    let env = enveloping(&l, a.max_degree).map_err(map_hopf_err)?;
    let rows: Vec<DegreeRow> = (0..=a.max_degree)
        .map(|n| DegreeRow {
            degree: n,
            dim: env.hopf.dim(n),
        })
        .collect();
    let pbw: Vec<DegreeRow> = env
        .pbw_dims
        .iter()
        .map(|(&d, &k)| DegreeRow { degree: d, dim: k })
        .collect();
    let rep = EnvelopeReport {
        rows,
        pbw,
        pbw_match: env.pbw_match,
    };
    let text = match a.format.format {
        Format::Json => render_json(&rep),
        Format::Csv => render_csv(&["degree", "dim"], &degree_cells(&rep.rows)),
        Format::Table => {
            let mut s = render_table(&["degree", "dim"], &degree_cells(&rep.rows));
            s.push_str(&format!("pbw_match: {}\n", rep.pbw_match));
            s
        }
    };
    Ok(ok(text))
}

fn mm_check(a: LieCmdArgs) -> Result<Outcome, CliError> {
    let l = load_lie(
        a.lie.as_deref(),
        a.lie_json.as_deref(),
        a.field.as_deref(),
        a.gens.as_deref(),
        a.max_degree,
    )?;
    guard_words(&lie_letters(&l), a.max_degree)?;
    let rep = milnor_moore_check(&l, a.max_degree).map_err(map_hopf_err)?;
    let out = MmReport {
        rows: rep
            .rows
            .iter()
            .map(|r| MmRow {
                degree: r.degree,
                dim_lie: r.dim_lie,
                dim_primitives: r.dim_primitives,
                unit_iso: r.unit_iso,
            })
            .collect(),
        all_iso: rep.all_iso,
        primitively_generated: rep.primitively_generated,
    };
    let header = ["degree", "dim_lie", "dim_primitives", "unit_iso"];
    let cells: Vec<Vec<String>> = out
        .rows
        .iter()
        .map(|r| {
            vec![
                r.degree.to_string(),
                r.dim_lie.to_string(),
                r.dim_primitives.to_string(),
                r.unit_iso.to_string(),
            ]
        })
        .collect();
    let text = match a.format.format {
        Format::Json => render_json(&out),
        Format::Csv => render_csv(&header, &cells),
        Format::Table => {
            let mut s = render_table(&header, &cells);
            s.push_str(&format!("all_iso: {}\n", out.all_iso));
            s.push_str(&format!(
                "primitively_generated: {}\n",
                out.primitively_generated
            ));
            s
        }
    };
    Ok(ok(text))
}

fn norm(a: NormArgs) -> Result<Outcome, CliError> {
    let window = resolve_window(a.window.max_arity, a.window.min_deg, a.window.max_deg)?;
    let x = load_sequence(&a.left, a.field.as_deref(), &window)?;
    let y = load_sequence(&a.right, a.field.as_deref(), &window)?;
    let audited = norm_audit_compose(&x, &y, window.max_arity)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<NormRow> = audited
        .iter()
        .map(|r| NormRow {
            arity: r.arity,
            blocks: r.blocks,
            dim: r.dim,
            coinvariants: r
                .coinvariants
                .iter()
                .map(|(&d, &k)| DegreeRow { degree: d, dim: k })
                .collect(),
            is_iso: r.is_iso,
        })
        .collect();
    let all_iso = rows.iter().all(|r| r.is_iso);
    let out = NormReportOut { rows, all_iso };
    let header = ["arity", "blocks", "dim", "is_iso"];
    let cells: Vec<Vec<String>> = out
        .rows
        .iter()
        .map(|r| {
            vec![
                r.arity.to_string(),
                r.blocks.to_string(),
                r.dim.to_string(),
                r.is_iso.to_string(),
            ]
        })
        .collect();
    let text = match a.format.format {
        Format::Json => render_json(&out),
        Format::Csv => render_csv(&header, &cells),
        Format::Table => {
            let mut s = render_table(&header, &cells);
            s.push_str(&format!("all_iso: {}\n", out.all_iso));
            s
        }
    };
    Ok(ok(text))
}

fn double_dual(a: DoubleDualArgs) -> Result<Outcome, CliError> {
    let window = resolve_window(a.window.max_arity, a.window.min_deg, a.window.max_deg)?;
    let op = load_operad(
        a.operad.operad.as_deref(),
        a.operad.operad_json.as_deref(),
        a.operad.field.as_deref(),
        &window,
    )?;
    let rep = double_dual_check(&op, &window).map_err(map_koszul_err)?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for r in &rep.rows {
        let degs: BTreeSet<Degree> = r.expected.keys().chain(r.computed.keys()).copied().collect();
        for d in degs {
            rows.push(DoubleRow {
                arity: r.arity,
                degree: d,
                expected: *r.expected.get(&d).unwrap_or(&0),
                computed: *r.computed.get(&d).unwrap_or(&0),
            });
        }
        verdicts.push(DoubleVerdict {
            arity: r.arity,
            dims_match: r.dims_match,
            characters_match: r.characters_match,
        });
    }
    let out = DoubleReportOut {
        rows,
        verdicts,
        all_match: rep.all_match,
    };
    let text = match a.format.format {
        Format::Json => render_json(&out),
        Format::Csv => {
            // the dimension table of the recovered operad
            let cells: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.arity.to_string(),
                        r.degree.to_string(),
                        r.computed.to_string(),
                    ]
                })
                .collect();
            render_csv(&["arity", "degree", "dim"], &cells)
        }
        Format::Table => {
            let cells: Vec<Vec<String>> = out
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.arity.to_string(),
                        r.degree.to_string(),
                        r.expected.to_string(),
                        r.computed.to_string(),
                    ]
                })
                .collect();
            let mut s = render_table(&["arity", "degree", "expected", "computed"], &cells);
            for v in &out.verdicts {
                s.push_str(&format!(
                    "arity {}: dims={} characters={}\n",
                    v.arity, v.dims_match, v.characters_match
                ));
            }
            s.push_str(&format!("all_match: {}\n", out.all_match));
            s
        }
    };
    let axiom_failure = (!out.all_match)
        .then(|| "the double bar dual does not match the original operad".to_string());
    Ok(Outcome {
        text,
        axiom_failure,
    })
}

fn check(a: CheckArgs) -> Result<Outcome, CliError> {
    let field = parse_field(a.field.as_deref().unwrap_or("q"))?;
    let window = resolve_window(a.max_arity, a.min_deg, a.max_deg)?;
    let names: Vec<&str> = match a.operad.as_deref() {
        Some(n) => {
            parse_builtin(n).ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown operad '{n}' (expected one of {})",
                    BUILTIN_NAMES.join(", ")
                ))
            })?;
            vec![a.operad.as_deref().expect("just matched")]
        }
        None => BUILTIN_NAMES.to_vec(),
    };
    // fan out across operads; collect keeps the input order
    let results: Vec<CheckRowOut> = names
        .par_iter()
        .map(|&n| {
            let b = parse_builtin(n).expect("validated above");
            match opcalc::operad::builtin(field, b, &window) {
                Ok(op) => {
                    let rep = check_operad(&op);
                    CheckRowOut {
                        name: n.to_string(),
                        ok: rep.is_valid(),
                        failures: rep.failures,
                    }
                }
                Err(e) => CheckRowOut {
                    name: n.to_string(),
                    ok: false,
                    failures: vec![e.to_string()],
                },
            }
        })
        .collect();
    let out = CheckReportOut { results };
    let text = match a.format.format {
        Format::Json => render_json(&out),
        Format::Csv => {
            let cells: Vec<Vec<String>> = out
                .results
                .iter()
                .map(|r| vec![r.name.clone(), r.ok.to_string()])
                .collect();
            render_csv(&["name", "ok"], &cells)
        }
        Format::Table => {
            let mut s = String::new();
            for r in &out.results {
                if r.ok {
                    s.push_str(&format!("{}: ok\n", r.name));
                } else {
                    s.push_str(&format!("{}: FAILED\n", r.name));
                    for f in &r.failures {
                        s.push_str(&format!("  {f}\n"));
                    }
                }
            }
            s
        }
    };
    let failed = out.results.iter().filter(|r| !r.ok).count();
    let axiom_failure = (failed > 0).then(|| format!("{failed} operad(s) failed the axiom check"));
    Ok(Outcome {
        text,
        axiom_failure,
    })
}
