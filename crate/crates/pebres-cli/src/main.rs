use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pebres::blob::{blob_price_exact, BlobConfig, BlobError, BlobLimits, Subconfig};
use pebres::dag::{bit, LayeredDag, VSet};
use pebres::formula::{pebbling_contradiction, Clause, CnfFormula, PebblingFormula};
use pebres::hiding::{potential, spreading_check, Target, Verdict, POTENTIAL_BUDGET};
use pebres::induced::{translate, verify_bounds};
use pebres::pebbling::{exact_price, BwConfig, Mode, PebbleError, Pebbling, SearchLimits};
use pebres::resolution::{build_degree1, build_from_pebbling, build_linear, replay, DerivationTrace};
use serde_json::{json, Value};
use std::io::{Read, Write};
use std::process::ExitCode;
use std::time::Instant;

const MAX_DEGREE: usize = 4;

#[derive(Parser)]
#[command(name = "pebres", version, about = "Pebbling contradictions, resolution traces and pebble games")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads for exhaustive searches.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Seed for sampled checks; core commands are deterministic without it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct GraphArg {
    /// pyramid:<h>, tree:<h>, or a graph file (`-` for stdin).
    #[arg(long = "graph", value_name = "SPEC")]
    graph: Option<String>,
    /// Positional form of --graph.
    #[arg(value_name = "GRAPH", conflicts_with = "graph")]
    positional: Option<String>,
}

impl GraphArg {
    fn load(&self) -> Result<LayeredDag, Failure> {
        let spec = self.graph.as_ref().or(self.positional.as_ref()).ok_or_else(|| usage("missing --graph"))?;
        if spec.starts_with("pyramid:") || spec.starts_with("tree:") {
            return LayeredDag::from_spec(spec).map_err(|e| usage(e.to_string()));
        }
        let text = read_input(spec).map_err(|e| usage(format!("{e:#}")))?;
        LayeredDag::parse(&text).map_err(|e| usage(e.to_string()))
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit Peb^d_G (or *Peb^d_G) as DIMACS.
    Gen {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        /// Drop the target axioms.
        #[arg(long)]
        no_targets: bool,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Replay a derivation trace against a CNF.
    Check {
        #[arg(long)]
        cnf: String,
        #[arg(long)]
        trace: String,
        /// Goal clause as DIMACS literals; empty clause by default.
        #[arg(long, allow_hyphen_values = true, default_value = "")]
        goal: String,
    },
    /// Exact pebbling price by exhaustive search.
    Price {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_enum, default_value_t = PriceMode::Black)]
        mode: PriceMode,
        /// Largest cost tried.
        #[arg(long)]
        budget: Option<usize>,
        /// Blob search: allow inflation to any legal white set.
        #[arg(long)]
        full_inflation: bool,
        /// Blob search: cap on subconfigurations per configuration.
        #[arg(long)]
        max_subconfigs: Option<usize>,
        /// Include the witness pebbling.
        #[arg(long)]
        witness: bool,
    },
    /// Build a resolution derivation for Peb^d_G.
    Build {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 1)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Strategy::Linear)]
        strategy: Strategy,
        /// Derive All⁺(z) from *Peb instead of refuting Peb.
        #[arg(long)]
        no_targets: bool,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Translate a *Peb derivation into a blob pebbling.
    Translate {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long)]
        trace: String,
        /// Include the move list.
        #[arg(long)]
        moves: bool,
    },
    /// Potential of a black-white or blob configuration.
    Potential {
        #[command(flatten)]
        graph: GraphArg,
        /// Black vertex names, comma separated.
        #[arg(long, default_value = "")]
        black: String,
        /// White vertex names, comma separated.
        #[arg(long, default_value = "")]
        white: String,
        /// Subconfiguration `B/W` with comma-separated names; repeatable.
        #[arg(long = "blob")]
        blobs: Vec<String>,
    },
    /// Exhaustive spreading check.
    Spreading {
        #[command(flatten)]
        graph: GraphArg,
    },
    /// Check |C| ≥ cost(induced(C)) and the translation cost bound.
    VerifyBounds {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long)]
        trace: String,
        /// The trace derives All⁺(z) from *Peb.
        #[arg(long)]
        no_targets: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PriceMode {
    Black,
    Bw,
    Blob,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Strategy {
    Linear,
    Pebbling,
    Degree1,
}

/// An error with its exit code.
struct Failure {
    code: u8,
    msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn failed(msg: impl Into<String>) -> Failure {
    Failure { code: 1, msg: msg.into() }
}

fn budget(msg: impl Into<String>) -> Failure {
    Failure { code: 3, msg: msg.into() }
}

struct Outcome {
    inputs: Value,
    results: Value,
    pass: bool,
    /// Raw payload written instead of the report (DIMACS, traces).
    payload: Option<(String, String)>,
}

fn read_input(path: &str) -> Result<String> {
    let mut s = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
    } else {
        s = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    }
    Ok(s)
}

fn write_output(path: &str, text: &str) -> Result<()> {
    if path == "-" {
        std::io::stdout().write_all(text.as_bytes())?;
    } else {
        std::fs::write(path, text).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

fn formula(g: &LayeredDag, d: usize, no_targets: bool) -> Result<PebblingFormula, Failure> {
    if d == 0 || d > MAX_DEGREE {
        return Err(usage(format!("--degree must be in 1..={MAX_DEGREE}")));
    }
    let f = pebbling_contradiction(g, d).map_err(|e| usage(e.to_string()))?;
    Ok(if no_targets { f.strip_targets() } else { f })
}

fn state_cap(default: usize) -> Result<usize, Failure> {
    match std::env::var("PEBRES_BUDGET_STATES") {
        Ok(v) => v.parse().map_err(|_| usage("PEBRES_BUDGET_STATES must be an integer")),
        Err(_) => Ok(default),
    }
}

fn names(g: &LayeredDag, list: &str) -> Result<VSet, Failure> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .try_fold(0, |acc, n| Ok(acc | bit(g.vertex(n).map_err(|e| usage(e.to_string()))?)))
}

fn load_trace(path: &str, goal: Clause) -> Result<DerivationTrace, Failure> {
    let text = read_input(path).map_err(|e| usage(format!("{e:#}")))?;
    DerivationTrace::parse(&text, goal).map_err(|e| failed(e.to_string()))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.cmd {
        Cmd::Gen { graph, degree, no_targets, out } => {
            let g = graph.load()?;
            let f = formula(&g, *degree, *no_targets)?;
            let results = json!({
                "vars": f.cnf.num_vars,
                "clauses": f.cnf.clauses.len(),
                "groups": {
                    "source": f.count(pebres::formula::Group::Source),
                    "pebbling": f.count(pebres::formula::Group::Pebbling),
                    "target": f.count(pebres::formula::Group::Target),
                },
            });
            Ok(Outcome {
                inputs: json!({"degree": degree, "no_targets": no_targets}),
                results,
                pass: true,
                payload: Some((out.clone(), f.cnf.to_dimacs())),
            })
        }
        Cmd::Check { cnf, trace, goal } => {
            let text = read_input(cnf).map_err(|e| usage(format!("{e:#}")))?;
            let f = CnfFormula::from_dimacs(&text).map_err(|e| usage(e.to_string()))?;
            let lits: Vec<i32> = goal
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| usage(format!("bad literal `{t}`"))))
                .collect::<Result<_, _>>()?;
            let goal = Clause::new(lits).map_err(|e| usage(e.to_string()))?;
            let t = load_trace(trace, goal)?;
            let inputs = json!({"cnf": cnf, "trace": trace});
            Ok(match replay(&f, &t) {
                Ok(m) => Outcome { inputs, results: json!({"metrics": m}), pass: true, payload: None },
                Err(e) => Outcome { inputs, results: json!({"error": e.to_string()}), pass: false, payload: None },
            })
        }
        Cmd::Price { graph, mode, budget: k, full_inflation, max_subconfigs, witness } => {
            let g = graph.load()?;
            let inputs = json!({"mode": match mode { PriceMode::Black => "black", PriceMode::Bw => "bw", PriceMode::Blob => "blob" }});
            let results = match mode {
                PriceMode::Black | PriceMode::Bw => {
                    let m = if *mode == PriceMode::Black { Mode::Black } else { Mode::Bw };
                    let mut lim = SearchLimits::with_budget(k.unwrap_or(g.height() + 3));
                    lim.max_states = state_cap(lim.max_states)?;
                    lim.jobs = cli.jobs;
                    let r = exact_price(&g, m, lim).map_err(|e| match e {
                        PebbleError::ExceedsBudget { .. } | PebbleError::StateBudget(_) | PebbleError::TooLarge(_) => {
                            budget(e.to_string())
                        }
                        e => failed(e.to_string()),
                    })?;
                    let mut v = json!({"price": r.price, "states_explored": r.states_explored});
                    if *witness {
                        v["witness"] = json!(r.witness);
                    }
                    v
                }
                PriceMode::Blob => {
                    let mut lim = BlobLimits::defaults(&g);
                    if let Some(k) = k {
                        lim.max_cost = *k;
                    }
                    if let Some(s) = max_subconfigs {
                        lim.max_subconfigs = *s;
                    }
                    lim.full_inflation = *full_inflation;
                    lim.max_states = state_cap(lim.max_states)?;
                    lim.jobs = cli.jobs;
                    let r = blob_price_exact(&g, lim).map_err(|e| match e {
                        BlobError::TooLarge(_) | BlobError::Inconclusive { .. } => budget(e.to_string()),
                        e => failed(e.to_string()),
                    })?;
                    let mut v = json!({
                        "price": r.price,
                        "states_explored": r.states_explored,
                        "max_subconfigs": lim.max_subconfigs,
                        "full_inflation": lim.full_inflation,
                    });
                    if *witness {
                        v["witness"] = json!(r.witness);
                    }
                    v
                }
            };
            Ok(Outcome { inputs, results, pass: true, payload: None })
        }
        Cmd::Build { graph, degree, strategy, no_targets, out } => {
            let g = graph.load()?;
            let f = formula(&g, *degree, *no_targets)?;
            let t = match strategy {
                Strategy::Linear => build_linear(&f),
                Strategy::Pebbling => {
                    let mut lim = SearchLimits::with_budget(g.height() + 3);
                    lim.max_states = state_cap(lim.max_states)?;
                    lim.jobs = cli.jobs;
                    let p = exact_price(&g, Mode::Black, lim).map_err(|e| budget(e.to_string()))?;
                    build_from_pebbling(&f, &Pebbling::from_moves(p.witness)).map_err(|e| failed(e.to_string()))?
                }
                Strategy::Degree1 => build_degree1(&f).map_err(|e| usage(e.to_string()))?,
            };
            let m = replay(&f.cnf, &t).map_err(|e| failed(e.to_string()))?;
            Ok(Outcome {
                inputs: json!({"degree": degree, "no_targets": no_targets}),
                results: json!({"metrics": m}),
                pass: true,
                payload: Some((out.clone(), t.to_text())),
            })
        }
        Cmd::Translate { graph, degree, trace, moves } => {
            let g = graph.load()?;
            let f = formula(&g, *degree, true)?;
            let t = load_trace(trace, f.goal.clone())?;
            let space = replay(&f.cnf, &t).map_err(|e| failed(e.to_string()))?.clause_space;
            let r = translate(&f, &t).map_err(|e| match e {
                pebres::induced::InducedError::Budget { .. } => budget(e.to_string()),
                e => failed(e.to_string()),
            })?;
            let mut v = json!({
                "moves": r.moves.len(),
                "max_cost": r.max_cost,
                "max_boundary_cost": r.max_boundary_cost,
                "clause_space": space,
                "boundary_costs": r.boundary_costs,
                "fallbacks": r.fallbacks,
                "excess": r.excess,
            });
            if *moves {
                v["move_list"] = json!(r.moves);
            }
            Ok(Outcome { inputs: json!({"degree": degree, "trace": trace}), results: v, pass: true, payload: None })
        }
        Cmd::Potential { graph, black, white, blobs } => {
            let g = graph.load()?;
            let rep = if blobs.is_empty() {
                let c = BwConfig::new(names(&g, black)?, names(&g, white)?);
                potential(&g, Target::Bw(c), POTENTIAL_BUDGET)
            } else {
                let mut cfg = BlobConfig::new();
                for s in blobs {
                    let (b, w) = s.split_once('/').unwrap_or((s, ""));
                    let sc = Subconfig::new(names(&g, b)?, names(&g, w)?);
                    pebres::blob::check_subconfig(&sc, &g).map_err(|e| usage(format!("{s}: {e}")))?;
                    cfg.insert(sc);
                }
                potential(&g, Target::Blob(&cfg), POTENTIAL_BUDGET)
            };
            let witness: Vec<String> = rep.witness.iter().map(|&v| g.name(v)).collect();
            Ok(Outcome {
                inputs: json!({"black": black, "white": white, "blobs": blobs}),
                results: json!({"potential": rep.potential, "witness": witness, "exact": rep.exact}),
                pass: true,
                payload: None,
            })
        }
        Cmd::Spreading { graph } => {
            let g = graph.load()?;
            let r = spreading_check(&g);
            let pass = r.verdict != Verdict::Fail;
            Ok(Outcome { inputs: json!({}), results: json!(r), pass, payload: None })
        }
        Cmd::VerifyBounds { graph, degree, trace, no_targets } => {
            let g = graph.load()?;
            let f = formula(&g, *degree, *no_targets)?;
            let t = load_trace(trace, f.goal.clone())?;
            let r = verify_bounds(&f, &t).map_err(|e| match e {
                pebres::induced::InducedError::Budget { .. } => budget(e.to_string()),
                e => failed(e.to_string()),
            })?;
            Ok(Outcome {
                inputs: json!({"degree": degree, "trace": trace, "no_targets": no_targets}),
                results: json!(r),
                pass: r.passed(),
                payload: None,
            })
        }
    }
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Gen { .. } => "gen",
        Cmd::Check { .. } => "check",
        Cmd::Price { .. } => "price",
        Cmd::Build { .. } => "build",
        Cmd::Translate { .. } => "translate",
        Cmd::Potential { .. } => "potential",
        Cmd::Spreading { .. } => "spreading",
        Cmd::VerifyBounds { .. } => "verify-bounds",
    }
}

fn graph_of(cmd: &Cmd) -> Option<&GraphArg> {
    match cmd {
        Cmd::Gen { graph, .. }
        | Cmd::Price { graph, .. }
        | Cmd::Build { graph, .. }
        | Cmd::Translate { graph, .. }
        | Cmd::Potential { graph, .. }
        | Cmd::Spreading { graph }
        | Cmd::VerifyBounds { graph, .. } => Some(graph),
        Cmd::Check { .. } => None,
    }
}

fn text_lines(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                text_lines(&p, x, out);
            }
        }
        _ => out.push_str(&format!("{prefix}: {v}\n")),
    }
}

fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(report).expect("serializable")),
        Format::Text => {
            let mut s = String::new();
            text_lines("", report, &mut s);
            s
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let name = command_name(&cli.cmd);
    let mut inputs_base = json!({});
    if let Some(seed) = cli.seed {
        inputs_base["seed"] = json!(seed);
    }
    if let Some(g) = graph_of(&cli.cmd) {
        inputs_base["graph"] = json!(g.graph.as_ref().or(g.positional.as_ref()));
    }
    match run(&cli) {
        Ok(o) => {
            let mut inputs = inputs_base;
            if let (Value::Object(a), Value::Object(b)) = (&mut inputs, o.inputs) {
                a.extend(b);
            }
            let report = json!({
                "command": name,
                "inputs": inputs,
                "results": o.results,
                "wall_clock_ms": start.elapsed().as_secs_f64() * 1000.0,
                "verdict": if o.pass { "pass" } else { "fail" },
            });
            if let Some((path, text)) = &o.payload {
                if let Err(e) = write_output(path, text) {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(2);
                }
                let shown = render(&report, cli.format);
                if path == "-" {
                    eprint!("{shown}");
                } else {
                    print!("{shown}");
                }
            } else {
                print!("{}", render(&report, cli.format));
            }
            ExitCode::from(if o.pass { 0 } else { 1 })
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
