//! Command-line surface: argument definitions, dispatch, corpus replay,
//! and process exit codes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::commands::{run_command, Outcome};
use crate::output::Format;
use crate::CliError;

/// Exact operadic and Hopf-algebra computations over Q and prime fields.
#[derive(Parser)]
#[command(name = "opcalc", version, about)]
pub struct Cli {
    /// Replay a directory of recorded cases and compare outputs byte for byte
    #[arg(long, value_name = "DIR")]
    pub seed_corpus: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Bar-dual homology of an operad as a dimension table
    Dual(DualArgs),
    /// Arity-wise dimensions of a composition product of sequences
    Compose(ComposeArgs),
    /// Stagewise homology of the truncation tower with norm and Euler audits
    Tower(TowerArgs),
    /// Primitives of the tensor Hopf algebra on the given generators
    Primitives(PrimitivesArgs),
    /// Enveloping-algebra dimensions with a monomial-basis comparison
    Envelope(LieCmdArgs),
    /// Compare a Lie presentation with the primitives of its envelope
    MmCheck(LieCmdArgs),
    /// Norm-map audit for a composition of sequences
    Norm(NormArgs),
    /// Compare an operad with its double bar dual
    DoubleDual(DoubleDualArgs),
    /// Run the operad axiom checker on builtin operads
    Check(CheckArgs),
}

/// Operad selection shared by the operad-valued commands.
#[derive(Args)]
pub struct OperadSel {
    /// Builtin operad name (triv, comm-nu, ass-nu, lie, lie-shifted)
    #[arg(long)]
    pub operad: Option<String>,
    /// Operad presentation JSON file
    #[arg(long, value_name = "FILE")]
    pub operad_json: Option<PathBuf>,
    /// Ground field: q, or f<p> / a bare prime for a prime field
    #[arg(long)]
    pub field: Option<String>,
}

/// Truncation window shared by the operad-valued commands.
#[derive(Args)]
pub struct WindowArgs {
    /// Largest arity kept (at most 7)
    #[arg(long)]
    pub max_arity: usize,
    /// Lowest homological degree kept (default -2 * max-arity)
    #[arg(long)]
    pub min_deg: Option<i32>,
    /// Highest homological degree kept (default 2 * max-arity)
    #[arg(long)]
    pub max_deg: Option<i32>,
}

/// Output format selection.
#[derive(Args)]
pub struct FormatArg {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Args)]
pub struct DualArgs {
    #[command(flatten)]
    pub operad: OperadSel,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct ComposeArgs {
    /// Left factor: builtin name or symmetric-sequence JSON file
    #[arg(long)]
    pub left: String,
    /// Right factor: builtin name or symmetric-sequence JSON file
    #[arg(long)]
    pub right: String,
    /// Ground field: q, or f<p> / a bare prime for a prime field
    #[arg(long)]
    pub field: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct TowerArgs {
    #[command(flatten)]
    pub operad: OperadSel,
    #[command(flatten)]
    pub window: WindowArgs,
    /// Highest truncation stage computed (stages run from 1)
    #[arg(long, default_value_t = 2)]
    pub max_stage: usize,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct PrimitivesArgs {
    /// Prime characteristic (shorthand for --field f<p>)
    #[arg(long = "char", conflicts_with = "field")]
    pub char_p: Option<u64>,
    /// Ground field: q, or f<p> / a bare prime for a prime field
    #[arg(long)]
    pub field: Option<String>,
    /// Generators as degree:count[:odd|:even] groups, comma separated
    #[arg(long)]
    pub gens: String,
    /// Largest degree computed (at most 32)
    #[arg(long)]
    pub max_degree: i32,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct LieCmdArgs {
    /// Builtin Lie family: heisenberg, abelian, or free
    #[arg(long)]
    pub lie: Option<String>,
    /// Lie presentation JSON file
    #[arg(long, value_name = "FILE")]
    pub lie_json: Option<PathBuf>,
    /// Ground field: q, or f<p> / a bare prime for a prime field
    #[arg(long)]
    pub field: Option<String>,
    /// Generators for the abelian and free families
    #[arg(long)]
    pub gens: Option<String>,
    /// Largest degree computed (at most 32)
    #[arg(long)]
    pub max_degree: i32,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct NormArgs {
    /// Left factor: builtin name or symmetric-sequence JSON file
    #[arg(long)]
    pub left: String,
    /// Right factor: builtin name or symmetric-sequence JSON file
    #[arg(long)]
    pub right: String,
    /// Ground field: q, or f<p> / a bare prime for a prime field
    #[arg(long)]
    pub field: Option<String>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct DoubleDualArgs {
    #[command(flatten)]
    pub operad: OperadSel,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct CheckArgs {
    /// Builtin operad to check (default: all of them)
    #[arg(long)]
    pub operad: Option<String>,
    /// Ground field: q, or f<p> / a bare prime for a prime field
    #[arg(long)]
    pub field: Option<String>,
    /// Largest arity exercised
    #[arg(long, default_value_t = 4)]
    pub max_arity: usize,
    /// Lowest homological degree kept (default -2 * max-arity)
    #[arg(long)]
    pub min_deg: Option<i32>,
    /// Highest homological degree kept (default 2 * max-arity)
    #[arg(long)]
    pub max_deg: Option<i32>,
    #[command(flatten)]
    pub format: FormatArg,
}

/// Parse the process arguments, run, print, and exit: 0 on success, 2 on
/// invalid input, 3 on an internal axiom failure.
pub fn cli_main() -> ExitCode {
    let cli = Cli::parse();
    match entry(cli) {
        Ok(out) => {
            print!("{}", out.text);
            match out.axiom_failure {
                None => ExitCode::SUCCESS,
                Some(msg) => {
                    eprintln!("error: {msg}");
                    ExitCode::from(3)
                }
            }
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Axiom(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn entry(cli: Cli) -> Result<Outcome, CliError> {
    init_threads()?;
    match (cli.seed_corpus, cli.command) {
        (Some(dir), None) => run_corpus(&dir),
        (None, Some(cmd)) => run_command(cmd),
        (Some(_), Some(_)) => Err(CliError::Usage(
            "--seed-corpus replaces the subcommand; give one or the other".into(),
        )),
        (None, None) => Err(CliError::Usage(
            "a subcommand or --seed-corpus is required (try --help)".into(),
        )),
    }
}

/// The thread count comes from OPCALC_THREADS alone; output never depends
/// on it.
fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("OPCALC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "OPCALC_THREADS must be a positive integer, found '{v}'"
                ))
            })?;
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// One recorded case: an argument vector and the exact expected stdout.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusCase {
    argv: Vec<String>,
    expected: String,
}

/// Replay every `*.json` case in the directory in name order. A malformed
/// case is an input error; a byte mismatch fails the run with exit 3.
fn run_corpus(dir: &Path) -> Result<Outcome, CliError> {
    let mut cases: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    cases.sort();
    if cases.is_empty() {
        return Err(CliError::Usage(format!(
            "no .json cases in {}",
            dir.display()
        )));
    }
    let mut text = String::new();
    let mut failed = 0usize;
    for path in &cases {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let case: CorpusCase = serde_json::from_str(&raw)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let mut argv = vec!["opcalc".to_string()];
        argv.extend(case.argv.iter().cloned());
        let parsed =
            Cli::try_parse_from(&argv).map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        let cmd = parsed.command.ok_or_else(|| {
            CliError::Usage(format!("{name}: corpus cases must name a subcommand"))
        })?;
        match run_command(cmd) {
            Ok(out) if out.text == case.expected && out.axiom_failure.is_none() => {
                text.push_str(&format!("{name}: ok\n"));
            }
            Ok(_) => {
                failed += 1;
                text.push_str(&format!("{name}: MISMATCH\n"));
            }
            Err(e) => {
                failed += 1;
                text.push_str(&format!("{name}: ERROR ({e})\n"));
            }
        }
    }
    let axiom_failure = (failed > 0).then(|| format!("{failed} corpus case(s) failed"));
    Ok(Outcome {
        text,
        axiom_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::output::{
        CheckReportOut, DegreeReport, DimReport, DoubleReportOut, EnvelopeReport, MmReport,
        NormReportOut, TowerReportOut,
    };

    fn run(args: &[&str]) -> String {
        let mut argv = vec!["opcalc"];
        argv.extend_from_slice(args);
        let cli = Cli::try_parse_from(argv).expect("arguments parse");
        let out = run_command(cli.command.expect("a subcommand")).expect("command runs");
        assert!(out.axiom_failure.is_none(), "{:?}", out.axiom_failure);
        out.text
    }

    fn reparses<T>(text: &str)
    where
        T: serde::Serialize + serde::de::DeserializeOwned + PartialEq + std::fmt::Debug,
    {
        let parsed: T = serde_json::from_str(text).expect("report parses back");
        assert_eq!(crate::output::render_json(&parsed), text);
    }

    #[test]
    fn every_json_report_reparses_identically() {
        reparses::<DimReport>(&run(&[
            "dual", "--operad", "comm-nu", "--max-arity", "3", "--format", "json",
        ]));
        reparses::<DimReport>(&run(&[
            "compose", "--left", "comm-nu", "--right", "comm-nu", "--max-arity", "3", "--format",
            "json",
        ]));
        reparses::<TowerReportOut>(&run(&[
            "tower", "--operad", "comm-nu", "--max-arity", "3", "--max-stage", "2", "--format",
            "json",
        ]));
        reparses::<DegreeReport>(&run(&[
            "primitives", "--char", "2", "--gens", "1:1", "--max-degree", "4", "--format", "json",
        ]));
        reparses::<EnvelopeReport>(&run(&[
            "envelope", "--lie", "heisenberg", "--max-degree", "3", "--format", "json",
        ]));
        reparses::<MmReport>(&run(&[
            "mm-check", "--lie", "heisenberg", "--max-degree", "3", "--format", "json",
        ]));
        reparses::<NormReportOut>(&run(&[
            "norm", "--left", "comm-nu", "--right", "comm-nu", "--max-arity", "3", "--format",
            "json",
        ]));
        reparses::<DoubleReportOut>(&run(&[
            "double-dual", "--operad", "comm-nu", "--max-arity", "3", "--format", "json",
        ]));
        reparses::<CheckReportOut>(&run(&[
            "check", "--operad", "comm-nu", "--max-arity", "3", "--format", "json",
        ]));
    }

    #[test]
    fn dual_rows_match_the_recorded_example() {
        let csv = run(&[
            "dual", "--operad", "comm-nu", "--max-arity", "4", "--field", "q", "--format", "csv",
        ]);
        assert_eq!(csv, "arity,degree,dim\n2,1,1\n3,2,2\n4,3,6\n");
    }

    #[test]
    fn conflicting_selectors_are_rejected() {
        let cli = Cli::try_parse_from([
            "opcalc", "dual", "--operad", "comm-nu", "--operad-json", "x.json", "--max-arity",
            "3",
        ])
        .expect("parses syntactically");
        let err = run_command(cli.command.unwrap()).unwrap_err();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn corpus_mismatches_are_reported() {
        let dir = std::env::temp_dir().join(format!("opcalc-corpus-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(
            dir.join("bad.json"),
            r#"{"argv": ["dual", "--operad", "comm-nu", "--max-arity", "2", "--format", "csv"],
                "expected": "arity,degree,dim\n2,9,9\n"}"#,
        )
        .unwrap();
        let out = run_corpus(&dir).unwrap();
        assert_eq!(out.text, "bad: MISMATCH\n");
        assert!(out.axiom_failure.is_some());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
