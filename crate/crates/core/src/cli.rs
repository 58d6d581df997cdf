//! The `ogres` command-line interface.
//!
//! One verb per module: `validate`, `dim`, `partitions`, `schubert`,
//! `singular-locus`, `exceptional`, `tower`, and the three-headed `oracle`.
//! Every verb takes the sequence text as a positional argument and the
//! ambient dimension as `--n`; `--json` switches any verb to a JSON report.
//!
//! Exit codes: `0` success, `1` inadmissible sequence (violations are
//! printed), `2` parse or usage error, `3` oracle infeasible (realization,
//! budget, or an empty cell).
//!
//! Output is deterministic: identical invocations produce byte-identical
//! output, so reports can be diffed or cached.  All sequence text is
//! printed in the canonical grammar and can be fed back as input.

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::admissible::validate;
use crate::degen::GateMode;
use crate::dims::dim_restriction;
use crate::fforacle::{
    check_sigma_containment, count_cell_points, estimate_dim, realize_flag, CountMode,
};
use crate::seqmodel::{format_sequence, parse_sequence, to_partitions, Sequence};
use crate::singloc::{exceptional_image, singular_locus};
use crate::tower::{build_tower, tower_dim};
use crate::typea::{schubert_dim, schubert_singular_locus};
use crate::Error;

// ====================================================================
// Argument grammar
// ====================================================================

#[derive(Parser)]
#[command(
    name = "ogres",
    about = "Restriction varieties in orthogonal Grassmannians",
    disable_help_flag = false,
    version
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, ValueEnum)]
enum ModeArg {
    /// Count only the points of the open cell.
    #[default]
    Open,
    /// Count the points of the closure.
    Closure,
}

#[derive(Subcommand)]
enum Verb {
    /// Check the admissibility conditions and print any violations.
    Validate {
        /// Sequence text, e.g. "L2 L4 Q2_7".
        sequence: String,
        /// Ambient dimension n.
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// Dimension of the restriction variety, with per-step terms.
    Dim {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// The compressed partition form of a sequence.
    Partitions {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// Singular locus of a type-A Schubert variety from its jump list.
    Schubert {
        /// Jumping dimensions, e.g. "2 6 7 11 12 13 15".
        jumps: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// Singular locus of the restriction variety.
    #[command(name = "singular-locus")]
    SingularLocus {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
        /// Apply the literal case-analysis gates instead of the
        /// example-consistent ones.
        #[arg(long = "strict-gates")]
        strict_gates: bool,
    },
    /// The full exceptional image of the resolution, locus by locus.
    Exceptional {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
        #[arg(long = "strict-gates")]
        strict_gates: bool,
    },
    /// The resolution tower and its dimension bookkeeping.
    Tower {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
        /// Print the fixed-format diagram instead of the row summary.
        #[arg(long)]
        ascii: bool,
    },
    /// Finite-field verification: point counts, dimension estimates,
    /// containment checks.
    Oracle {
        #[command(subcommand)]
        op: OracleOp,
    },
}

#[derive(Subcommand)]
enum OracleOp {
    /// Count the F_q-points of the cell attached to the sequence.
    Count {
        sequence: String,
        #[arg(long)]
        n: u32,
        /// Field size (3, 5, or 7).
        #[arg(long, default_value_t = 3)]
        q: u32,
        #[arg(long, value_enum, default_value_t)]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// Estimate the cell dimension from counts over q = 3 and q = 5.
    Estimate {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        json: bool,
    },
    /// Verify that every singular-locus component is contained in the
    /// variety over F_q.
    Containment {
        sequence: String,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 3)]
        q: u32,
        #[arg(long)]
        json: bool,
        #[arg(long = "strict-gates")]
        strict_gates: bool,
    },
}

// ====================================================================
// Dispatch
// ====================================================================

/// Entry point used by the `ogres` binary: prints the report to standard
/// output and returns the exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let (code, report) = run_captured(args);
    print!("{report}");
    code
}

/// Same as [`run`], returning the report instead of printing it.  The
/// binary and the determinism tests share this function.
pub fn run_captured<I: IntoIterator<Item = String>>(args: I) -> (i32, String) {
    let argv = std::iter::once("ogres".to_string()).chain(args);
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful exits.
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    let mut out = String::new();
    let code = match dispatch(&cli.verb, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            exit_code_for(&e)
        }
    };
    (code, out)
}

/// Exit code for an error that escaped a verb.
fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::ParseError(_)
        | Error::OrderError(_)
        | Error::AmbientError(_)
        | Error::InconsistentPartition(_)
        | Error::IndexError(_) => 2,
        Error::RealizationFailed(_)
        | Error::BudgetExceeded(_)
        | Error::EmptyCell(_)
        | Error::RealizationMismatch(_) => 3,
        _ => 1,
    }
}

/// Parse the sequence text, or bubble a parse error (exit 2).
fn parse(text: &str, n: u32) -> crate::Result<Sequence> {
    parse_sequence(text, n)
}

/// Validate for the verbs that require admissibility; prints violations
/// and returns exit code 1 when the sequence is inadmissible.
fn demand_admissible(seq: &Sequence, out: &mut String) -> Option<i32> {
    let violations = validate(seq);
    if violations.is_empty() {
        return None;
    }
    for v in &violations {
        let _ = writeln!(out, "{v}");
    }
    Some(1)
}

fn gate(strict: bool) -> GateMode {
    if strict {
        GateMode::Strict
    } else {
        GateMode::Default
    }
}

fn dispatch(verb: &Verb, out: &mut String) -> crate::Result<i32> {
    match verb {
        Verb::Validate { sequence, n, json } => {
            let seq = parse(sequence, *n)?;
            let violations = validate(&seq);
            if *json {
                let vjson: Vec<_> = violations
                    .iter()
                    .map(|v| {
                        json!({
                            "condition": v.condition_id.to_string(),
                            "detail": v.detail,
                        })
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "sequence": format_sequence(&seq),
                        "n": seq.n(),
                        "admissible": violations.is_empty(),
                        "violations": vjson,
                    })
                );
            } else if violations.is_empty() {
                let _ = writeln!(out, "admissible");
            } else {
                for v in &violations {
                    let _ = writeln!(out, "{v}");
                }
            }
            Ok(if violations.is_empty() { 0 } else { 1 })
        }

        Verb::Dim { sequence, n, json } => {
            let seq = parse(sequence, *n)?;
            let report = dim_restriction(&seq)?;
            if *json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "dim": report.total,
                        "linear_terms": report.linear_terms,
                        "n": seq.n(),
                        "quadric_terms": report.quadric_terms,
                        "sequence": format_sequence(&seq),
                    })
                );
            } else {
                let _ = writeln!(out, "dim = {}", report.total);
                if !report.linear_terms.is_empty() {
                    let terms: Vec<String> =
                        report.linear_terms.iter().map(|t| t.to_string()).collect();
                    let _ = writeln!(out, "linear terms: {}", terms.join(" "));
                }
                if !report.quadric_terms.is_empty() {
                    let terms: Vec<String> =
                        report.quadric_terms.iter().map(|t| t.to_string()).collect();
                    let _ = writeln!(out, "quadric terms: {}", terms.join(" "));
                }
            }
            Ok(0)
        }

        Verb::Partitions { sequence, n, json } => {
            let seq = parse(sequence, *n)?;
            let triple = to_partitions(&seq);
            if *json {
                let _ = writeln!(out, "{}", serde_json::to_string(&triple).unwrap());
            } else {
                let fmt_runs = |runs: &[(u32, u32)]| {
                    runs.iter()
                        .map(|(top, len)| format!("{top}^{len}"))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                let _ = writeln!(out, "linear: {}", fmt_runs(&triple.linear));
                let _ = writeln!(out, "quadric: {}", fmt_runs(&triple.quadric));
                let coranks: Vec<String> =
                    triple.coranks.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "coranks: {}", coranks.join(" "));
            }
            Ok(0)
        }

        Verb::Schubert { jumps, n, json } => {
            let parsed: Vec<u32> = jumps
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u32>().map_err(|_| {
                        Error::ParseError(format!("jump `{tok}` is not a number"))
                    })
                })
                .collect::<crate::Result<_>>()?;
            let dim = schubert_dim(&parsed, *n)?;
            let components = schubert_singular_locus(&parsed, *n)?;
            if *json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "components": components,
                        "dim": dim,
                        "jumps": parsed,
                        "n": n,
                    })
                );
            } else {
                let _ = writeln!(out, "dim = {dim}");
                for c in &components {
                    let jumps: Vec<String> = c.jumps.iter().map(|j| j.to_string()).collect();
                    let _ = writeln!(
                        out,
                        "{}  [codim {}, fiber {}, preimage {}]",
                        jumps.join(" "),
                        c.codim,
                        c.fiber_dim,
                        c.preimage_codim
                    );
                }
                if components.is_empty() {
                    let _ = writeln!(out, "smooth");
                }
            }
            Ok(0)
        }

        Verb::SingularLocus { sequence, n, json, strict_gates } => {
            let seq = parse(sequence, *n)?;
            if let Some(code) = demand_admissible(&seq, out) {
                return Ok(code);
            }
            let report = singular_locus(&seq, gate(*strict_gates))?;
            if *json {
                let _ = writeln!(out, "{}", serde_json::to_string(&report).unwrap());
            } else {
                for c in &report.components {
                    let _ = writeln!(out, "{}", format_sequence(&c.sequence));
                }
                if report.components.is_empty() {
                    let _ = writeln!(out, "smooth");
                }
                for c in &report.smooth_excluded {
                    let _ = writeln!(out, "smooth: {}", format_sequence(&c.sequence));
                }
            }
            Ok(0)
        }

        Verb::Exceptional { sequence, n, json, strict_gates } => {
            let seq = parse(sequence, *n)?;
            if let Some(code) = demand_admissible(&seq, out) {
                return Ok(code);
            }
            let loci = exceptional_image(&seq, gate(*strict_gates))?;
            if *json {
                let _ = writeln!(out, "{}", serde_json::to_string(&loci).unwrap());
            } else {
                for locus in &loci {
                    let seqs: Vec<String> =
                        locus.sequences.iter().map(format_sequence).collect();
                    let _ = writeln!(
                        out,
                        "{}: {}  [codim {}, fiber {}, preimage {}, {:?}]",
                        locus.origin,
                        seqs.join(" / "),
                        locus.codim,
                        locus.fiber_dim,
                        locus.preimage_codim,
                        locus.classification
                    );
                }
                if loci.is_empty() {
                    let _ = writeln!(out, "empty");
                }
            }
            Ok(0)
        }

        Verb::Tower { sequence, n, json, ascii } => {
            let seq = parse(sequence, *n)?;
            if let Some(code) = demand_admissible(&seq, out) {
                return Ok(code);
            }
            let diagram = build_tower(&seq)?;
            let total = tower_dim(&diagram);
            if *json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "dim": total,
                        "rows": diagram.rows,
                    })
                );
            } else if *ascii {
                let _ = write!(out, "{}", diagram.ascii);
                let _ = writeln!(out, "dim = {total}");
            } else {
                for row in &diagram.rows {
                    let factors: Vec<String> = row
                        .factors
                        .iter()
                        .map(|f| {
                            let name = if f.orthogonal { "OG" } else { "G" };
                            format!("{name}({},{}) dim {}", f.m, f.space, f.dim)
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        "level {} [type {}]: {}",
                        row.level,
                        row.row_type,
                        factors.join(" x ")
                    );
                }
                let _ = writeln!(out, "dim = {total}");
            }
            Ok(0)
        }

        Verb::Oracle { op } => dispatch_oracle(op, out),
    }
}

fn dispatch_oracle(op: &OracleOp, out: &mut String) -> crate::Result<i32> {
    match op {
        OracleOp::Count { sequence, n, q, mode, json } => {
            let seq = parse(sequence, *n)?;
            if let Some(code) = demand_admissible(&seq, out) {
                return Ok(code);
            }
            let real = realize_flag(&seq, *q)?;
            let count_mode = match mode {
                ModeArg::Open => CountMode::Open,
                ModeArg::Closure => CountMode::Closure,
            };
            let count = count_cell_points(&seq, &real, count_mode)?;
            let mode_name = match mode {
                ModeArg::Open => "open",
                ModeArg::Closure => "closure",
            };
            if *json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "count": count,
                        "mode": mode_name,
                        "n": seq.n(),
                        "q": q,
                        "sequence": format_sequence(&seq),
                    })
                );
            } else {
                let _ = writeln!(out, "sequence,n,q,mode,count");
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{}",
                    format_sequence(&seq),
                    seq.n(),
                    q,
                    mode_name,
                    count
                );
            }
            Ok(0)
        }

        OracleOp::Estimate { sequence, n, json } => {
            let seq = parse(sequence, *n)?;
            if let Some(code) = demand_admissible(&seq, out) {
                return Ok(code);
            }
            let r3 = realize_flag(&seq, 3)?;
            let r5 = realize_flag(&seq, 5)?;
            let n3 = count_cell_points(&seq, &r3, CountMode::Open)?;
            let n5 = count_cell_points(&seq, &r5, CountMode::Open)?;
            let estimate = estimate_dim(&seq, &r3, &r5)?;
            let dim = dim_restriction(&seq)?.total;
            if *json {
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "count3": n3,
                        "count5": n5,
                        "dim": dim,
                        "estimate": estimate,
                        "n": seq.n(),
                        "sequence": format_sequence(&seq),
                    })
                );
            } else {
                let _ = writeln!(out, "sequence,n,count3,count5,estimate,dim");
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{},{},{}",
                    format_sequence(&seq),
                    seq.n(),
                    n3,
                    n5,
                    estimate,
                    dim
                );
            }
            Ok(0)
        }

        OracleOp::Containment { sequence, n, q, json, strict_gates } => {
            let seq = parse(sequence, *n)?;
            if let Some(code) = demand_admissible(&seq, out) {
                return Ok(code);
            }
            let real = realize_flag(&seq, *q)?;
            let loci = exceptional_image(&seq, gate(*strict_gates))?;
            let mut rows = Vec::new();
            let mut all = true;
            for locus in &loci {
                let contained = check_sigma_containment(locus, &seq, &real)?;
                all = all && contained;
                let seqs: Vec<String> = locus.sequences.iter().map(format_sequence).collect();
                rows.push((locus.origin.to_string(), seqs.join(" / "), contained));
            }
            if *json {
                let rows_json: Vec<_> = rows
                    .iter()
                    .map(|(origin, seqs, contained)| {
                        json!({
                            "contained": contained,
                            "locus": seqs,
                            "origin": origin,
                        })
                    })
                    .collect();
                let _ = writeln!(
                    out,
                    "{}",
                    json!({
                        "all_contained": all,
                        "loci": rows_json,
                        "n": seq.n(),
                        "q": q,
                        "sequence": format_sequence(&seq),
                    })
                );
            } else {
                for (origin, seqs, contained) in &rows {
                    let verdict = if *contained { "contained" } else { "NOT contained" };
                    let _ = writeln!(out, "{origin}: {seqs}: {verdict}");
                }
                if rows.is_empty() {
                    let _ = writeln!(out, "empty exceptional image");
                }
            }
            Ok(0)
        }
    }
}

// ====================================================================
// Tests
// ====================================================================
