//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or agreement failure, 2 usage or
//! input error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::algebra::{format_rational, RenderStyle};
use crate::conditions::{
    dedup_conditions, generate_conditions, render_generic_styled, GenerationFlags,
};
use crate::document::parse_rational_list;
use crate::oracle::{compare, PolyVectorField};
use crate::trees::{enumerate_by_leaf, format_tree, parse_tree, RootedTree};
use crate::verify::{verify_order, ButcherTableau, VerifyMode};
use crate::SCHEMA;

/// Largest expansion degree the oracle accepts.
pub const MAX_ORACLE_DEGREE: usize = 6;

#[derive(Debug, Parser)]
#[command(
    name = "butcher-kit",
    version,
    about = "Rooted trees and Runge-Kutta order conditions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List all rooted trees up to an order.
    Trees {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
        #[arg(long, value_enum, default_value_t = TreeFormat::Bracket)]
        format: TreeFormat,
    },
    /// Count rooted trees per order.
    Count {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
    },
    /// Generate order conditions.
    Conditions {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
        /// Stage count; not needed with --generic.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        stages: Option<u64>,
        /// Strictly lower triangular A, c[1] = 0.
        #[arg(long)]
        explicit: bool,
        /// Write row sums of A as c[i].
        #[arg(long = "subst-c")]
        subst_c: bool,
        #[arg(long, value_enum, default_value_t = ConditionFormat::Text)]
        format: ConditionFormat,
        /// Nested sums over a symbolic stage count instead of expanded polynomials.
        #[arg(long)]
        generic: bool,
        /// Only the condition of this tree, e.g. "[[],[[]]]".
        #[arg(long)]
        tree: Option<String>,
    },
    /// Verify the order of a tableau document.
    Verify {
        tableau: PathBuf,
        #[arg(long = "max-order", value_parser = clap::value_parser!(u64).range(1..))]
        max_order: u64,
        /// Order required for success; defaults to --max-order.
        #[arg(long, value_parser = clap::value_parser!(u64).range(0..))]
        require: Option<u64>,
        /// Compare rounded residuals against a tolerance.
        #[arg(long)]
        float: bool,
        /// Tolerance for --float (implies it).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Compare tree expansions of the flow (and of a step) with direct expansions.
    Oracle {
        field: PathBuf,
        /// Expansion point, comma separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Highest power of tau.
        #[arg(long)]
        p: usize,
        #[arg(long)]
        tableau: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Bracket,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConditionFormat {
    Text,
    Latex,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

/// Failure of a subcommand, mapped onto an exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Semantic,
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let mut buf = String::new();
    let result = dispatch(cli.command, &mut buf);
    let _ = out.write_all(buf.as_bytes());
    match result {
        Ok(()) => 0,
        Err(Failure::Semantic) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn dispatch(command: Command, out: &mut String) -> Outcome {
    match command {
        Command::Trees { order, format } => run_trees(order as usize, format, out),
        Command::Count { order } => run_count(order as usize, out),
        Command::Conditions {
            order,
            stages,
            explicit,
            subst_c,
            format,
            generic,
            tree,
        } => {
            let flags = GenerationFlags {
                explicit,
                substitute_c: subst_c,
            };
            let tree = tree
                .map(|t| parse_tree(&t).map_err(|e| usage(format!("--tree: {e}"))))
                .transpose()?;
            run_conditions(
                order as usize,
                stages.map(|s| s as usize),
                flags,
                format,
                generic,
                tree.as_ref(),
                out,
            )
        }
        Command::Verify {
            tableau,
            max_order,
            require,
            float,
            tol,
            format,
        } => {
            let mode = match (float, tol) {
                (_, Some(tol)) if !(tol.is_finite() && tol >= 0.0) => {
                    return Err(usage("--tol must be a nonnegative number"))
                }
                (_, Some(tol)) => VerifyMode::Float { tol },
                (true, None) => VerifyMode::Float {
                    tol: VerifyMode::DEFAULT_TOLERANCE,
                },
                (false, None) => VerifyMode::Exact,
            };
            run_verify(
                &tableau,
                max_order as usize,
                require.map(|r| r as usize),
                mode,
                format,
                out,
            )
        }
        Command::Oracle {
            field,
            x0,
            p,
            tableau,
            format,
        } => run_oracle(&field, &x0, p, tableau.as_deref(), format, out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn run_trees(order: usize, format: TreeFormat, out: &mut String) -> Outcome {
    let trees = enumerate_by_leaf(order);
    match format {
        TreeFormat::Bracket => {
            for t in trees.iter() {
                out.push_str(&format_tree(t));
                out.push('\n');
            }
        }
        TreeFormat::Json => {
            let orders: Vec<_> = trees
                .groups()
                .map(|(q, set)| json!({"order": q, "trees": set.iter().map(format_tree).collect::<Vec<_>>()}))
                .collect();
            push_json(
                out,
                json!({"schema": SCHEMA, "max_order": order, "orders": orders}),
            );
        }
    }
    Ok(())
}

fn run_count(order: usize, out: &mut String) -> Outcome {
    let trees = enumerate_by_leaf(order);
    for (q, set) in trees.groups() {
        out.push_str(&format!("order {q}: {}\n", set.len()));
    }
    out.push_str(&format!("total: {}\n", trees.total()));
    Ok(())
}

fn run_conditions(
    order: usize,
    stages: Option<usize>,
    flags: GenerationFlags,
    format: ConditionFormat,
    generic: bool,
    only: Option<&RootedTree>,
    out: &mut String,
) -> Outcome {
    let trees = enumerate_by_leaf(order);
    let selected: Vec<&RootedTree> = match only {
        Some(t) if t.order() > order => {
            return Err(usage(format!(
                "--tree has order {} > --order {order}",
                t.order()
            )))
        }
        Some(t) => vec![t],
        None => trees.iter().collect(),
    };
    if generic {
        let style = match format {
            ConditionFormat::Latex => RenderStyle::Latex,
            _ => RenderStyle::Plain,
        };
        let mut rows = Vec::new();
        for t in &selected {
            let lhs = render_generic_styled(t, style).map_err(|e| usage(e.to_string()))?;
            let rhs = num_rational::BigRational::new(1.into(), t.factorial().into());
            rows.push((t, lhs, rhs));
        }
        match format {
            ConditionFormat::Json => {
                let items: Vec<_> = rows
                    .iter()
                    .map(|(t, lhs, rhs)| {
                        json!({"tree": format_tree(t), "order": t.order(), "lhs": lhs, "rhs": format_rational(rhs)})
                    })
                    .collect();
                push_json(
                    out,
                    json!({"schema": SCHEMA, "order": order, "generic": true, "conditions": items}),
                );
            }
            ConditionFormat::Text => {
                for (_, lhs, rhs) in rows {
                    out.push_str(&format!("{lhs} == {}\n", format_rational(&rhs)));
                }
            }
            ConditionFormat::Latex => {
                for (_, lhs, rhs) in rows {
                    out.push_str(&format!(
                        "{lhs} = {}\n",
                        crate::algebra::format_rational_latex(&rhs)
                    ));
                }
            }
        }
        return Ok(());
    }
    let stages = stages.ok_or_else(|| usage("--stages is required unless --generic is given"))?;
    let conditions = dedup_conditions(generate_conditions(selected, stages, flags));
    match format {
        ConditionFormat::Text | ConditionFormat::Latex => {
            let style = if format == ConditionFormat::Text {
                RenderStyle::Plain
            } else {
                RenderStyle::Latex
            };
            for c in &conditions {
                out.push_str(&c.render(style));
                out.push('\n');
            }
        }
        ConditionFormat::Json => {
            let items: Vec<_> = conditions
                .iter()
                .map(|c| {
                    json!({
                        "tree": format_tree(&c.tree),
                        "order": c.order(),
                        "lhs": c.lhs.render(RenderStyle::Plain),
                        "rhs": format_rational(&c.rhs),
                        "unsatisfiable": c.is_unsatisfiable(),
                    })
                })
                .collect();
            push_json(
                out,
                json!({
                    "schema": SCHEMA,
                    "order": order,
                    "stages": stages,
                    "explicit": flags.explicit,
                    "substitute_c": flags.substitute_c,
                    "conditions": items,
                }),
            );
        }
    }
    Ok(())
}

fn run_verify(
    path: &Path,
    max_order: usize,
    require: Option<usize>,
    mode: VerifyMode,
    format: ReportFormat,
    out: &mut String,
) -> Outcome {
    let text = read(path)?;
    let tableau =
        ButcherTableau::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let report = verify_order(&tableau, max_order, mode);
    match format {
        ReportFormat::Text => out.push_str(&report.to_text()),
        ReportFormat::Json => {
            out.push_str(&report.to_json());
            out.push('\n');
        }
    }
    if report.achieved_order >= require.unwrap_or(max_order) {
        Ok(())
    } else {
        Err(Failure::Semantic)
    }
}

fn run_oracle(
    field_path: &Path,
    x0: &str,
    p: usize,
    tableau_path: Option<&Path>,
    format: ReportFormat,
    out: &mut String,
) -> Outcome {
    if p > MAX_ORACLE_DEGREE {
        return Err(usage(format!("--p must be at most {MAX_ORACLE_DEGREE}")));
    }
    let field = PolyVectorField::from_json(&read(field_path)?)
        .map_err(|e| usage(format!("{}: {e}", field_path.display())))?;
    let x0 = parse_rational_list(x0).map_err(|e| usage(format!("--x0: {e}")))?;
    if x0.len() != field.dim() {
        return Err(usage(format!(
            "--x0 has {} entries but the field has dimension {}",
            x0.len(),
            field.dim()
        )));
    }
    let tableau = tableau_path
        .map(|path| {
            read(path).and_then(|text| {
                ButcherTableau::from_json(&text)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))
            })
        })
        .transpose()?;
    let report = compare(&field, &x0, p, tableau.as_ref());
    match format {
        ReportFormat::Text => out.push_str(&report.to_text()),
        ReportFormat::Json => {
            out.push_str(&report.to_json());
            out.push('\n');
        }
    }
    if report.all_agree() {
        Ok(())
    } else {
        Err(Failure::Semantic)
    }
}

fn push_json(out: &mut String, value: serde_json::Value) {
    out.push_str(&serde_json::to_string_pretty(&value).expect("serializable"));
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["butcher-kit"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn trees_and_counts() {
        let (code, out, _) = run_args(&["trees", "--order", "1"]);
        assert_eq!((code, out.as_str()), (0, "[]\n"));
        let (code, out, _) = run_args(&["count", "--order", "6"]);
        assert_eq!(code, 0);
        assert!(out.ends_with("order 6: 20\ntotal: 37\n"));
        let (code, out, _) = run_args(&["count", "--order", "1"]);
        assert_eq!((code, out.as_str()), (0, "order 1: 1\ntotal: 1\n"));
        let (code, out, _) = run_args(&["trees", "--order", "3", "--format", "json"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["orders"][2]["trees"][1], "[[[]]]");
    }

    #[test]
    fn conditions_smallest() {
        let (code, out, _) = run_args(&["conditions", "--order", "1", "--stages", "1"]);
        assert_eq!((code, out.as_str()), (0, "b[1] == 1\n"));
    }

    #[test]
    fn conditions_generic_single_tree() {
        let (code, out, _) = run_args(&[
            "conditions",
            "--order",
            "8",
            "--generic",
            "--tree",
            "[[[[]],[[]],[]],[]]",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 1);
        assert!(out.trim_end().ends_with("== 1/192"), "{out}");
        let (code, out, _) = run_args(&[
            "conditions",
            "--order",
            "2",
            "--generic",
            "--format",
            "latex",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out, "\\sum_{i=1}^{s} b_i = 1\n\\sum_{i=1}^{s} b_i \\Big(\\sum_{j=1}^{s} a_{i,j}\\Big) = \\frac{1}{2}\n");
    }

    #[test]
    fn usage_errors_exit_two() {
        for args in [
            vec!["conditions", "--order", "2"],
            vec!["trees", "--order", "0"],
            vec!["trees"],
            vec!["frobnicate"],
            vec!["count", "--order", "3", "--bogus"],
            vec![
                "conditions",
                "--order",
                "2",
                "--stages",
                "2",
                "--tree",
                "[[]",
            ],
            vec![
                "conditions",
                "--order",
                "2",
                "--stages",
                "2",
                "--tree",
                "[[[]]]",
            ],
            vec!["verify", "/nonexistent/tableau.json", "--max-order", "2"],
            vec!["oracle", "/nonexistent/field.json", "--x0", "1", "--p", "7"],
        ] {
            let (code, _, err) = run_args(&args);
            assert_eq!(code, 2, "{args:?}");
            assert!(!err.is_empty(), "{args:?}");
        }
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("conditions"));
    }
}
