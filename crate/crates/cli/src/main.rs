//! `cbd`: decide (non)contextuality of finite systems of random variables.
//!
//! Systems come in as JSON documents; verdicts and couplings go out as JSON
//! on stdout. Exit codes: for `decide`, 0 means noncontextual, 1 contextual,
//! and 2 or more an error; every other command uses 0 for success and 2 for
//! errors. Human-readable notes go to stderr and `--quiet` silences them.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cbd_core::coupling::multimaximal_binary;
use cbd_core::decide::{
    decide_contextuality, decide_maximal_equality, decide_traditional, DecideOptions, Status,
};
use cbd_core::model::System;
use cbd_core::rational::Rational;
use cbd_core::split::{
    event_probability, plan_allowable, plan_cuts, plan_full_categorical, reduce_12, SplitPlan,
};
use cbd_core::vspace::VSpace;

use cbd_cli::doc::{load_system, tool_version, verdict_document, CoupleDocument, CouplingDoc};

#[derive(Parser)]
#[command(name = "cbd", version, about = "Contextuality analysis of finite systems of random variables")]
struct Cli {
    /// Silence the notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a system document parses and validates.
    Validate { file: PathBuf },
    /// Decide (non)contextuality of a system.
    Decide {
        file: PathBuf,
        /// Split plan: which dichotomizations represent each content.
        #[arg(long, value_enum, default_value_t = PlanArg::Full)]
        plan: PlanArg,
        /// Decide the identity-coupling notion instead (requires a
        /// consistently connected system).
        #[arg(long, conflicts_with_all = ["equality", "plan"])]
        traditional: bool,
        /// Decide direct maximal-equality couplings of the unsplit system
        /// instead.
        #[arg(long, conflicts_with = "plan")]
        equality: bool,
    },
    /// Inspect the vicinity space of a content.
    Vspace {
        file: PathBuf,
        content: String,
        /// List the canonical allowable dichotomizations.
        #[arg(long, conflicts_with = "check")]
        list_allowable: bool,
        /// Report whether the comma-separated labels form a V-linked set.
        #[arg(long, value_name = "LABELS")]
        check: Option<String>,
    },
    /// Print the staircase multimaximal coupling of a binary connection.
    /// Split contents of non-binary connections are addressed as `q:{a,b}`.
    Couple { file: PathBuf, content: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlanArg {
    /// Every dichotomization of a categorical space.
    Full,
    /// Cut dichotomizations of ordered spaces.
    Cuts,
    /// Dichotomizations with both cells V-linked.
    Allowable,
    /// One- and two-element dichotomizing subsets only.
    #[value(name = "12")]
    OneTwo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            if !cli.quiet {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(2)
        }
    }
}

fn note(cli: &Cli, text: &str) {
    if !cli.quiet {
        eprintln!("{text}");
    }
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Validate { file } => {
            let sys = load_system(file)?;
            note(
                cli,
                &format!(
                    "ok: {} contents, {} contexts",
                    sys.content_count(),
                    sys.context_count()
                ),
            );
            Ok(0)
        }
        Command::Decide {
            file,
            plan,
            traditional,
            equality,
        } => {
            let sys = load_system(file)?;
            let opts = decide_options()?;
            let (document, verdict) = if *traditional {
                let verdict = decide_traditional(&sys, &opts)?;
                (verdict_document("traditional-identity", None, &verdict), verdict)
            } else if *equality {
                let verdict = decide_maximal_equality(&sys, &opts)?;
                (verdict_document("maximal-equality", None, &verdict), verdict)
            } else {
                let plan = build_plan(&sys, *plan)?;
                let verdict = decide_contextuality(&sys, &plan, &opts)?;
                (
                    verdict_document("split-multimaximal", Some(&plan), &verdict),
                    verdict,
                )
            };
            println!("{}", serde_json::to_string_pretty(&document)?);
            note(cli, &format!("status: {}", verdict.status.name()));
            Ok(if verdict.status == Status::Noncontextual {
                0
            } else {
                1
            })
        }
        Command::Vspace {
            file,
            content,
            list_allowable,
            check,
        } => {
            let sys = load_system(file)?;
            let qi = sys
                .content_idx(content)
                .ok_or_else(|| anyhow!("unknown content `{content}`"))?;
            let space = VSpace::from_value_space(&sys.contents()[qi].space)?;
            match (list_allowable, check) {
                (true, None) => {
                    let dichotomies = space.allowable_dichotomizations()?;
                    let listed: Vec<serde_json::Value> = dichotomies
                        .iter()
                        .map(|d| {
                            serde_json::json!({
                                "part0": space.labels_of(d.part0),
                                "part1": space.labels_of(d.part1),
                            })
                        })
                        .collect();
                    let out = serde_json::json!({
                        "tool": tool_version(),
                        "content": content,
                        "labels": space.labels(),
                        "allowable": listed,
                        "count": listed.len(),
                    });
                    println!("{}", serde_json::to_string_pretty(&out)?);
                    Ok(0)
                }
                (false, Some(subset)) => {
                    let labels: Vec<String> =
                        subset.split(',').map(|s| s.trim().to_string()).collect();
                    let mask = space.mask_of(&labels)?;
                    let linked = space.is_vlinked(mask);
                    let out = serde_json::json!({
                        "tool": tool_version(),
                        "content": content,
                        "subset": space.labels_of(mask),
                        "linked": linked,
                    });
                    println!("{}", serde_json::to_string_pretty(&out)?);
                    Ok(0)
                }
                _ => bail!("pass exactly one of --list-allowable or --check LABELS"),
            }
        }
        Command::Couple { file, content } => {
            let sys = load_system(file)?;
            let document = couple_document(&sys, content)?;
            println!("{}", serde_json::to_string_pretty(&document)?);
            Ok(0)
        }
    }
}

fn decide_options() -> Result<DecideOptions> {
    let mut opts = DecideOptions::default();
    if let Ok(cap) = std::env::var("CBD_MAX_ATOMS") {
        opts.max_atoms = cap
            .parse()
            .with_context(|| format!("CBD_MAX_ATOMS must be a positive integer, got `{cap}`"))?;
    }
    Ok(opts)
}

fn build_plan(sys: &System, arg: PlanArg) -> Result<SplitPlan> {
    let plan = match arg {
        PlanArg::Full => plan_full_categorical(sys)?,
        PlanArg::Cuts => plan_cuts(sys)?,
        PlanArg::Allowable => plan_allowable(sys)?,
        PlanArg::OneTwo => reduce_12(&plan_full_categorical(sys)?),
    };
    Ok(plan)
}

/// Multimaximal coupling of a binary connection, or of a split content
/// addressed as `q:{a,b}`.
fn couple_document(sys: &System, addressed: &str) -> Result<CoupleDocument> {
    let (content, subset) = match addressed.split_once(':') {
        Some((q, rest)) => {
            let inner = rest
                .strip_prefix('{')
                .and_then(|r| r.strip_suffix('}'))
                .ok_or_else(|| anyhow!("split contents are addressed as `{q}:{{a,b}}`"))?;
            let labels: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
            (q.to_string(), Some(labels))
        }
        None => (addressed.to_string(), None),
    };
    let qi = sys
        .content_idx(&content)
        .ok_or_else(|| anyhow!("unknown content `{content}`"))?;
    let space = &sys.contents()[qi].space;
    let contexts = sys.measured_in(qi).to_vec();

    let (ps, labels): (Vec<Rational>, Vec<String>) = match &subset {
        Some(subset_labels) => {
            let space_v = VSpace::from_value_space(space)?;
            let mask = space_v.mask_of(subset_labels)?;
            let ps = contexts
                .iter()
                .map(|&ci| event_probability(sys, ci, qi, mask))
                .collect();
            (ps, vec!["0".to_string(), "1".to_string()])
        }
        None => {
            if space.len() != 2 {
                bail!(
                    "connection of `{content}` is not binary ({} values); \
                     address a split content instead, e.g. `{content}:{{{}}}`",
                    space.len(),
                    space.labels[0]
                );
            }
            let ps = contexts
                .iter()
                .map(|&ci| sys.marginal(ci, qi)[1].clone())
                .collect();
            (ps, space.labels.clone())
        }
    };

    let mut coupling = multimaximal_binary(&ps);
    for (var, &ci) in coupling.vars.iter_mut().zip(&contexts) {
        var.id = format!("{content}@{}", sys.context_id(ci));
        var.labels = labels.clone();
    }
    let success: BTreeMap<String, String> = contexts
        .iter()
        .zip(&ps)
        .map(|(&ci, p)| (sys.context_id(ci).to_string(), p.to_string()))
        .collect();
    Ok(CoupleDocument {
        tool: tool_version(),
        content,
        subset,
        success,
        coupling: CouplingDoc::from_coupling(&coupling),
    })
}
