use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use arrowlab::axioms::PropagationOrder;
use arrowlab::checker::{check_text, Status};
use arrowlab::cnf::{export_cnf, parse_dimacs, solve_cnf, SolveMode, SolveOutcome};
use arrowlab::model::{
    count_profiles, enumerate_weak_orders, orders_to_json, orders_to_text, profiles_to_json, write_profiles_text,
};
use arrowlab::search::Node;
use arrowlab::trace::emit_trace;
use arrowlab::{build_constraints, enumerate_models, refute_with, Config, Domain, Error};
use clap::{Args, Parser, Subcommand};

const EXIT_INVALID_PROOF: u8 = 2;
const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_USAGE: u8 = 64;
const EXIT_GUARD: u8 = 65;

/// Environment variable that lifts the default size guard.
const GUARD_OVERRIDE_VAR: &str = "ARROWLAB_GUARD_OVERRIDE";

#[derive(Parser)]
#[command(name = "arrowlab", version, about = "Refute the premises of Arrow's theorem for small electorates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Size {
    /// Number of voters
    #[arg(short = 'n', long, default_value_t = 2)]
    voters: usize,
    /// Number of alternatives
    #[arg(short = 'm', long, default_value_t = 3)]
    alternatives: usize,
}

#[derive(Subcommand)]
enum Command {
    /// List the weak orders over m alternatives
    Orders {
        #[arg(short = 'm', long, default_value_t = 3)]
        alternatives: usize,
        #[arg(long)]
        json: bool,
    },
    /// List or count the profiles
    Profiles {
        #[command(flatten)]
        size: Size,
        /// Print only the number of profiles
        #[arg(long)]
        count: bool,
        #[arg(long)]
        json: bool,
    },
    /// Refute the premises and write a proof trace
    Prove {
        #[command(flatten)]
        size: Size,
        /// Trace output file
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
        /// Print the refutation tree as JSON instead of the text summary
        #[arg(long)]
        json: bool,
        /// Propagate in a seeded random order instead of the canonical one
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a proof trace
    Check {
        trace: PathBuf,
        /// Print line counts per rule
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        json: bool,
    },
    /// Enumerate social welfare functions satisfying every premise but
    /// non-dictatorship
    Models {
        #[command(flatten)]
        size: Size,
        #[arg(long)]
        limit: Option<usize>,
        /// Print every model as JSON
        #[arg(long)]
        json: bool,
    },
    /// Export the premises as DIMACS CNF
    Cnf {
        #[command(flatten)]
        size: Size,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Variable map output file (JSON)
        #[arg(long)]
        map: Option<PathBuf>,
        /// Leave out the non-dictatorship clauses
        #[arg(long)]
        no_non_dictatorship: bool,
    },
    /// Solve a DIMACS file (exit 10 if satisfiable, 20 if not)
    Solve {
        cnf: PathBuf,
        /// Enumerate all models instead of deciding
        #[arg(long)]
        enumerate: bool,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Print constraint statistics as JSON
    Stats {
        #[command(flatten)]
        size: Size,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("arrowlab: {e}");
            ExitCode::from(match e {
                Failure::Lib(Error::Parameter(_)) => EXIT_GUARD,
                _ => 1,
            })
        }
    }
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(PathBuf, io::Error),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<u8, Failure>;

fn guard_lifted() -> bool {
    std::env::var(GUARD_OVERRIDE_VAR).is_ok_and(|v| v == "1")
}

fn config(size: &Size) -> Result<Config, Failure> {
    Ok(Config::with_guard(size.voters, size.alternatives, guard_lifted())?)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn stdout_err(e: io::Error) -> Failure {
    Failure::Io(PathBuf::from("<stdout>"), e)
}

fn print_json(v: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    writeln!(io::stdout(), "{text}").map_err(stdout_err)
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Orders { alternatives, json } => {
            let orders = enumerate_weak_orders(alternatives)?;
            if json {
                print_json(&orders_to_json(&orders))?;
            } else {
                print!("{}", orders_to_text(&orders));
            }
            Ok(0)
        }
        Command::Profiles { size, count, json } => {
            if count {
                println!("{}", count_profiles(size.voters, size.alternatives)?);
                return Ok(0);
            }
            let domain = Domain::new(config(&size)?);
            if json {
                print_json(&profiles_to_json(&domain))?;
            } else {
                let mut out = BufWriter::new(io::stdout().lock());
                write_profiles_text(&domain, &mut out).map_err(stdout_err)?;
                out.flush().map_err(stdout_err)?;
            }
            Ok(0)
        }
        Command::Prove { size, output, json, seed } => prove(&size, output.as_deref(), json, seed),
        Command::Check { trace, stats, json } => {
            let verdict = check_text(&read(&trace)?);
            if json {
                print_json(&verdict.to_json())?;
            } else {
                let lines: usize = verdict.stats.values().sum();
                match &verdict.status {
                    Status::Valid => println!("valid: {lines} lines checked"),
                    Status::Invalid { line, violation } => {
                        println!("invalid");
                        eprintln!("{}: line {line}: {violation}", trace.display());
                    }
                }
                if stats {
                    for (rule, n) in &verdict.stats {
                        println!("  {rule:<12} {n}");
                    }
                }
            }
            Ok(if verdict.is_valid() { 0 } else { EXIT_INVALID_PROOF })
        }
        Command::Models { size, limit, json } => models(&size, limit, json),
        Command::Cnf { size, output, map, no_non_dictatorship } => {
            let cfg = config(&size)?;
            let (doc, vars, counts) = export_cnf(&cfg, !no_non_dictatorship);
            write(&output, &doc.to_dimacs())?;
            if let Some(map) = map {
                write(&map, &serde_json::to_string_pretty(&vars.to_json()).expect("serializable"))?;
            }
            println!("{} variables, {} clauses -> {}", doc.num_vars, doc.clauses.len(), output.display());
            println!(
                "  unanimity {}, completeness {}, transitivity {}, iia {}, non-dictatorship {}",
                counts.unanimity, counts.completeness, counts.transitivity, counts.iia, counts.non_dictatorship
            );
            Ok(0)
        }
        Command::Solve { cnf, enumerate, limit } => {
            let doc = parse_dimacs(&read(&cnf)?)?;
            let mode = if enumerate { SolveMode::Enumerate { limit } } else { SolveMode::Decide };
            Ok(match solve_cnf(&doc, mode) {
                SolveOutcome::Unsat => {
                    println!("UNSAT");
                    EXIT_UNSAT
                }
                SolveOutcome::Sat(_) => {
                    println!("SAT");
                    EXIT_SAT
                }
                SolveOutcome::Models { models, complete } => {
                    let qualifier = if complete { "" } else { " (limit reached)" };
                    println!("{} models{qualifier}", models.len());
                    if models.is_empty() {
                        EXIT_UNSAT
                    } else {
                        EXIT_SAT
                    }
                }
            })
        }
        Command::Stats { size } => {
            let cfg = config(&size)?;
            let stats = build_constraints(&cfg, true).stats();
            print_json(&serde_json::to_value(stats).expect("serializable"))?;
            Ok(0)
        }
    }
}

fn prove(size: &Size, output: Option<&Path>, json: bool, seed: Option<u64>) -> Outcome {
    let cfg = config(size)?;
    let cs = build_constraints(&cfg, true);
    let mut order = match seed {
        Some(s) => PropagationOrder::shuffled(s),
        None => PropagationOrder::Canonical,
    };
    let refutation = refute_with(&cs, &mut order)?;
    let trace = emit_trace(&refutation, &cs)?;
    if let Some(path) = output {
        write(path, &trace.to_text())?;
    }
    if json {
        print_json(&refutation.summary_json())?;
        return Ok(0);
    }
    let cases = top_level_cases(&refutation.root);
    println!("refuted n={} m={}: {} top-level cases closed", cfg.voters(), cfg.alternatives(), cases.len());
    for (label, kind) in &cases {
        println!("  {label:<6} {kind}");
    }
    println!(
        "{} splits, depth {}, {} leaves, {} trace lines",
        refutation.root.splits(),
        refutation.root.depth(),
        refutation.leaves().len(),
        trace.lines.len()
    );
    if let Some(path) = output {
        println!("trace written to {}", path.display());
    }
    Ok(0)
}

/// Labels and outcomes of the cases below the root pair split.
fn top_level_cases(root: &Node) -> Vec<(String, String)> {
    let tf = |b: bool| if b { 'T' } else { 'F' };
    let outcome = |n: &Node| match n {
        Node::Leaf(c) => c.kind.to_string(),
        Node::Split { cell, .. } => format!("split on {cell}"),
    };
    let mut out = Vec::new();
    match root {
        Node::Leaf(c) => out.push(("root".to_string(), c.kind.to_string())),
        Node::Split { branches, .. } => {
            for outer in branches {
                match &outer.outcome {
                    Node::Split { cell, branches: inner } if outer.steps.is_empty() && is_converse_split(root, cell) => {
                        for b in inner {
                            out.push((format!("({},{})", tf(outer.value), tf(b.value)), outcome(&b.outcome)));
                        }
                    }
                    other => out.push((format!("({})", tf(outer.value)), outcome(other))),
                }
            }
        }
    }
    out
}

fn is_converse_split(root: &Node, cell: &arrowlab::Cell) -> bool {
    matches!(root, Node::Split { cell: c, .. } if c.converse() == *cell)
}

fn models(size: &Size, limit: Option<usize>, json: bool) -> Outcome {
    let cfg = config(size)?;
    let (models, complete) = enumerate_models(&cfg, limit.unwrap_or(usize::MAX))?;
    if json {
        let domain = Domain::new(cfg);
        let shape = arrowlab::CellAssignment::new(&domain);
        let list: Vec<serde_json::Value> = models
            .iter()
            .map(|m| {
                let mut cells = serde_json::Map::new();
                for pid in domain.profile_ids() {
                    let mut row = serde_json::Map::new();
                    for (x, y) in domain.pairs() {
                        let cell = arrowlab::Cell::new(pid, x, y);
                        let key = format!("{}{}", arrowlab::model::alt_letter(x), arrowlab::model::alt_letter(y));
                        row.insert(key, m.cells[shape.index_of(cell)].into());
                    }
                    cells.insert(pid.0.to_string(), row.into());
                }
                serde_json::json!({
                    "dictators": m.dictators.iter().map(|&k| arrowlab::model::voter_name(k)).collect::<Vec<_>>(),
                    "cells": cells,
                })
            })
            .collect();
        print_json(&serde_json::json!({ "complete": complete, "count": models.len(), "models": list }))?;
        return Ok(0);
    }
    let qualifier = if complete { "" } else { " (limit reached)" };
    println!("{} models{qualifier}", models.len());
    let mut by_dictator = std::collections::BTreeMap::<String, usize>::new();
    for m in &models {
        let key = if m.dictators.is_empty() {
            "none".to_string()
        } else {
            m.dictators.iter().map(|&k| arrowlab::model::voter_name(k)).collect::<Vec<_>>().join(",")
        };
        *by_dictator.entry(key).or_default() += 1;
    }
    for (d, n) in by_dictator {
        println!("  dictator {d}: {n}");
    }
    Ok(0)
}
