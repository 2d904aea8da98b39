mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use contlogic::herbrand::{
    affine_candidates, cover_definable_function, disk_grid, fit_alpha, offset_net,
    search_classical, search_continuous, Cover, CoverBudget, FormulaProblem, HerbrandCertificate,
    HerbrandError, ProblemRecord, Target,
};
use contlogic::models::discrete::DiscreteModel;
use contlogic::models::file::{DiscreteFile, FunctionFile, RelationFile};
use contlogic::models::hilbert::{Expansion, HilbertModel};
use contlogic::models::theory::{group_theory, hilbert_theory, projection_theory, unitary_theory};
use contlogic::models::{check_axioms, Model, ModelFile};
use contlogic::normalizer::{normalize_term, TheoryTag};
use contlogic::scalar::format_f64;
use contlogic::ubiq::{
    check_finitely_partitioned, check_ultrahomogeneous, classify_equivariant_function,
    expand_partition, UbiqError,
};
use contlogic::{
    eval_formula, parse_formula, parse_term, Assignment, EvalBudget, Mode, Structure, Var,
};
use serde_json::json;

use config::RunConfig;

const USAGE: u8 = 1;
const FAILED: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(
    name = "contlogic",
    version,
    about = "Continuous logic workbench: evaluation, normal forms, Herbrand covers"
)]
struct Cli {
    /// TOML file with run settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    run: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluates a sentence and prints its enclosure.
    Eval { formula: Option<String> },
    /// Prints the normal form of a term under the model's theory.
    Normalize { term: String },
    /// Searches for a Herbrand cover and writes a certificate.
    Herbrand {
        /// Universally quantified variables, as `name` or `name:sort`.
        #[arg(long = "x", default_value = "x", value_delimiter = ',')]
        x: Vec<String>,
        /// Witnessed variables.
        #[arg(long = "y", default_value = "y", value_delimiter = ',')]
        y: Vec<String>,
        /// Cover a function instead of a formula: `identity`, `radial-shrink` or `term:<text>`.
        #[arg(long)]
        target: Option<String>,
    },
    /// Checks the axioms of the theory matching the model's expansion.
    Axioms {
        /// The spectrum scheme uses the 2^k-th roots of unity.
        #[arg(long, default_value_t = 3)]
        sigma_k: u32,
    },
    /// Checks on finite classical structures.
    Ubiq {
        #[command(subcommand)]
        check: UbiqCommand,
    },
    /// Re-checks a certificate.
    Verify { certificate: PathBuf },
}

#[derive(Subcommand)]
enum UbiqCommand {
    /// Checks that each block's symmetric group acts by automorphisms.
    FinitelyPartitioned {
        /// Blocks of element names, `a,b;c,d`; defaults to the model's partition.
        #[arg(long)]
        partition: Option<String>,
    },
    /// Checks that partial isomorphisms of small substructures extend.
    Ultrahomogeneous {
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        /// Expand by the partition first.
        #[arg(long)]
        expand: bool,
        #[arg(long)]
        partition: Option<String>,
    },
    /// Writes the model expanded by one unary relation per block.
    Expand {
        #[arg(long)]
        partition: Option<String>,
    },
    /// Covers an automorphism-invariant function by terms.
    Classify {
        #[arg(long)]
        arity: usize,
        /// Values in row-major order over argument tuples, as element names.
        #[arg(long, value_delimiter = ',')]
        table: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = RunConfig::load(cli.run, cli.config.as_deref())?;
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("starting workers")?;
    }
    match cli.command {
        Command::Eval { formula } => cmd_eval(&cfg, formula.as_deref()),
        Command::Normalize { term } => cmd_normalize(&cfg, &term),
        Command::Herbrand { x, y, target } => cmd_herbrand(&cfg, &x, &y, target.as_deref()),
        Command::Axioms { sigma_k } => cmd_axioms(&cfg, sigma_k),
        Command::Ubiq { check } => cmd_ubiq(&cfg, check),
        Command::Verify { certificate } => cmd_verify(&certificate),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json values serialize")
}

fn load_model_file(cfg: &RunConfig) -> Result<ModelFile> {
    let path = cfg.model_path()?;
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(ModelFile::from_json(&text)?)
}

fn eval_budget(cfg: &RunConfig) -> Result<EvalBudget> {
    let mut b = EvalBudget {
        seed: cfg.seed(),
        tolerance: cfg.tolerance()?,
        ..Default::default()
    };
    if let Some(d) = cfg.delta()? {
        b.delta = d;
    }
    if let Some(s) = cfg.samples {
        b.samples = s;
    }
    Ok(b)
}

fn cmd_eval(cfg: &RunConfig, formula: Option<&str>) -> Result<u8> {
    let model = load_model_file(cfg)?.build()?;
    let text = cfg.formula_text(formula)?;
    let phi = parse_formula(&text, model.signature())?;
    if !phi.is_sentence() {
        bail!("formula has free variables");
    }
    let budget = eval_budget(cfg)?;
    let e = eval_formula(model.structure(), &phi, &Assignment::new(), &budget)?;
    emit(
        cfg,
        &pretty(&json!({
            "formula": phi.to_string(),
            "lo": format_f64(e.lo),
            "hi": format_f64(e.hi),
            "mode": e.mode,
            "seed": budget.seed,
        })),
    )?;
    Ok(0)
}

fn hilbert(model: &Model) -> Result<&HilbertModel> {
    match model {
        Model::Hilbert(m) => Ok(m),
        Model::Discrete(_) => bail!("this command needs a Hilbert model"),
    }
}

fn discrete(model: &Model) -> Result<&DiscreteModel> {
    match model {
        Model::Discrete(m) => Ok(m),
        Model::Hilbert(_) => bail!("this command needs a discrete model"),
    }
}

fn cmd_normalize(cfg: &RunConfig, text: &str) -> Result<u8> {
    let model = load_model_file(cfg)?.build()?;
    let m = hilbert(&model)?;
    let t = parse_term(text, m.signature())?;
    let tag = TheoryTag::of(m);
    let nf = normalize_term(&t, &tag)?;
    emit(
        cfg,
        &pretty(&json!({
            "term": t.to_string(),
            "theory": tag.name(),
            "normal_form": nf.to_record(),
            "display": nf.to_string(),
        })),
    )?;
    Ok(0)
}

fn cover_budget(cfg: &RunConfig) -> Result<CoverBudget> {
    let mut b = CoverBudget {
        seed: cfg.seed(),
        tolerance: cfg.tolerance()?,
        ..Default::default()
    };
    if let Some(s) = cfg.samples {
        b.samples = s;
    }
    if let Some(c) = cfg.candidates {
        b.max_candidates = c;
    }
    Ok(b)
}

fn parse_vars(names: &[String]) -> Result<Vec<Var>> {
    names
        .iter()
        .map(|n| contlogic::herbrand::parse_var(n).map_err(Into::into))
        .collect()
}

fn cmd_herbrand(cfg: &RunConfig, x: &[String], y: &[String], target: Option<&str>) -> Result<u8> {
    let file = load_model_file(cfg)?;
    let model = file.build()?;
    let budget = cover_budget(cfg)?;
    let xs = parse_vars(x)?;
    let problem;
    let eps;
    let gate;
    let mut evaluation = None;
    let result = match (&model, target) {
        (Model::Discrete(_), Some(_)) => bail!("function targets need a Hilbert model"),
        (Model::Discrete(m), None) => {
            let text = cfg.formula_text(None)?;
            let phi = parse_formula(&text, m.signature())?;
            let ys = parse_vars(y)?;
            problem = ProblemRecord::Formula {
                formula: phi.to_string(),
                x: x.to_vec(),
                y: y.to_vec(),
            };
            (eps, gate) = (0.0, 0.0);
            search_classical(m, &phi, &xs, &ys, cfg.depth.unwrap_or(1), &budget)
        }
        (Model::Hilbert(m), _) => {
            eps = cfg.epsilon()?;
            gate = cfg.gate(eps)?;
            let grid = disk_grid(&cfg.mesh()?, m.field());
            let offsets = offset_net(m, &grid);
            let candidates = match affine_candidates(m, &xs, &grid, &offsets, budget.max_candidates)
            {
                Ok(c) => c,
                Err(e @ HerbrandError::TooManyCandidates(_)) => return budget_exhausted(e),
                Err(e) => return Err(e.into()),
            };
            match target {
                Some(t) => {
                    let target = Target::parse(t, m.signature())?;
                    problem = ProblemRecord::Function {
                        target: target.to_string(),
                        x: x.to_vec(),
                    };
                    cover_definable_function(m, &target, &xs, eps, &candidates, &budget)
                }
                None => {
                    let text = cfg.formula_text(None)?;
                    let phi = parse_formula(&text, m.signature())?;
                    let ys = parse_vars(y)?;
                    if ys.len() != 1 {
                        bail!("continuous search witnesses exactly one variable");
                    }
                    problem = ProblemRecord::Formula {
                        formula: phi.to_string(),
                        x: x.to_vec(),
                        y: y.to_vec(),
                    };
                    let eb = eval_budget(cfg)?;
                    evaluation = Some(eb.clone());
                    let p = FormulaProblem::new(m, phi, xs.clone(), ys, eb);
                    search_continuous(&p, &candidates, eps, gate, &budget)
                }
            }
        }
    };
    let certificate = |cover: &Cover| {
        let cert = HerbrandCertificate::new(
            problem.clone(),
            file.clone(),
            eps,
            gate,
            cover,
            budget.clone(),
            evaluation.clone(),
        );
        match fit_alpha(&cover.pairs, cover.mode, budget.tolerance) {
            Ok(alpha) if !cover.pairs.is_empty() => cert.with_alpha(&alpha),
            _ => cert,
        }
    };
    match result {
        Ok(cover) => {
            emit(cfg, &certificate(&cover).to_json())?;
            Ok(0)
        }
        Err(HerbrandError::Uncovered(cover)) => {
            emit(cfg, &certificate(&cover).to_json())?;
            eprintln!(
                "budget exhausted: {} admitted points left uncovered; partial certificate written",
                cover.uncovered.len()
            );
            Ok(BUDGET)
        }
        Err(e @ HerbrandError::TooManyCandidates(_)) => budget_exhausted(e),
        Err(e) => Err(e.into()),
    }
}

fn budget_exhausted(e: impl std::fmt::Display) -> Result<u8> {
    eprintln!("budget exhausted: {e}");
    Ok(BUDGET)
}

fn cmd_axioms(cfg: &RunConfig, sigma_k: u32) -> Result<u8> {
    let model = load_model_file(cfg)?.build()?;
    let m = hilbert(&model)?;
    let depth = cfg.depth.unwrap_or(4);
    let theory = match m.expansion() {
        None => hilbert_theory(m, depth)?,
        Some(Expansion::Unitary { .. }) => unitary_theory(m, sigma_k, depth)?,
        Some(Expansion::Projection { .. }) => projection_theory(m, depth)?,
        Some(Expansion::Group(_)) => group_theory(m)?,
    };
    let tol = match cfg.tolerance {
        Some(_) => cfg.tolerance()?,
        None => 1e-6,
    };
    let report = check_axioms(m, &theory, tol, &eval_budget(cfg)?)?;
    let results: Vec<_> = report
        .results
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "sentence": r.sentence,
                "kind": r.kind,
                "lo": format_f64(r.enclosure.lo),
                "hi": format_f64(r.enclosure.hi),
                "mode": r.enclosure.mode,
                "pass": r.pass,
                "advisory": r.advisory,
            })
        })
        .collect();
    emit(
        cfg,
        &pretty(&json!({
            "theory": report.theory,
            "tolerance": format_f64(tol),
            "seed": cfg.seed(),
            "pass": report.all_pass(),
            "results": results,
            "untestable": report.untestable,
        })),
    )?;
    Ok(if report.all_pass() { 0 } else { FAILED })
}

fn element(m: &DiscreteModel, name: &str) -> Result<usize> {
    m.element_by_name(name.trim())
        .ok_or_else(|| anyhow!("unknown element `{}`", name.trim()))
}

fn partition(m: &DiscreteModel, text: Option<&str>) -> Result<Vec<Vec<usize>>> {
    match text {
        Some(t) => t
            .split(';')
            .map(|block| block.split(',').map(|e| element(m, e)).collect())
            .collect(),
        None => m
            .natural_partition()
            .map(<[_]>::to_vec)
            .ok_or_else(|| anyhow!("the model has no partition; pass --partition")),
    }
}

fn names(m: &DiscreteModel, xs: &[usize]) -> Vec<String> {
    xs.iter().map(|&a| m.element_name(a).to_string()).collect()
}

fn ubiq_failure(e: UbiqError) -> Result<u8> {
    match e {
        UbiqError::Budget(_) => budget_exhausted(e),
        e => Err(e.into()),
    }
}

fn cmd_ubiq(cfg: &RunConfig, check: UbiqCommand) -> Result<u8> {
    let model = load_model_file(cfg)?.build()?;
    let m = discrete(&model)?;
    match check {
        UbiqCommand::FinitelyPartitioned { partition: p } => {
            let blocks = partition(m, p.as_deref())?;
            let w = check_finitely_partitioned(m, &blocks)?;
            let blocks: Vec<Vec<String>> = w.blocks.iter().map(|b| names(m, b)).collect();
            emit(
                cfg,
                &pretty(&json!({
                    "check": "finitely-partitioned",
                    "blocks": blocks,
                    "holds": w.holds,
                    "transposition": w.transposition.map(|(a, b)| names(m, &[a, b])),
                    "violation": w.violation.map(|v| json!({"symbol": v.symbol, "tuple": names(m, &v.tuple)})),
                })),
            )?;
            Ok(if w.holds { 0 } else { FAILED })
        }
        UbiqCommand::Ultrahomogeneous {
            max_size,
            expand,
            partition: p,
        } => {
            let target = if expand {
                expand_partition(m, &partition(m, p.as_deref())?)?
            } else {
                m.clone()
            };
            let r = match check_ultrahomogeneous(&target, max_size) {
                Ok(r) => r,
                Err(e) => return ubiq_failure(e),
            };
            let failures: Vec<_> = r
                .failures
                .iter()
                .map(|(a, b)| json!({"from": names(m, a), "to": names(m, b)}))
                .collect();
            emit(
                cfg,
                &pretty(&json!({
                    "check": "ultrahomogeneous",
                    "expanded": expand,
                    "max_size": r.max_size,
                    "holds": r.ultrahomogeneous,
                    "tuples": r.tuples,
                    "failures": failures,
                })),
            )?;
            Ok(if r.ultrahomogeneous { 0 } else { FAILED })
        }
        UbiqCommand::Expand { partition: p } => {
            let e = expand_partition(m, &partition(m, p.as_deref())?)?;
            emit(cfg, &ModelFile::Discrete(model_file(&e)).to_json())?;
            Ok(0)
        }
        UbiqCommand::Classify { arity, table } => {
            let values = table
                .iter()
                .map(|t| element(m, t))
                .collect::<Result<Vec<_>>>()?;
            let cover =
                match classify_equivariant_function(m, arity, &values, cfg.depth.unwrap_or(1)) {
                    Ok(c) => c,
                    Err(UbiqError::NotEquivariant { args, automorphism }) => {
                        emit(
                            cfg,
                            &pretty(&json!({
                                "check": "classify",
                                "equivariant": false,
                                "args": names(m, &args),
                                "automorphism": names(m, &automorphism),
                            })),
                        )?;
                        return Ok(FAILED);
                    }
                    Err(e) => return ubiq_failure(e),
                };
            emit(
                cfg,
                &pretty(&json!({
                    "check": "classify",
                    "equivariant": true,
                    "arity": cover.arity,
                    "terms": cover.terms,
                    "pieces": cover.pieces,
                    "generators": cover.generators,
                })),
            )?;
            Ok(0)
        }
    }
}

/// Explicit-table description of a finite structure.
fn model_file(m: &DiscreteModel) -> DiscreteFile {
    let relations = m
        .relations()
        .iter()
        .map(|(k, r)| {
            (
                k.clone(),
                RelationFile {
                    arity: r.arity,
                    table: r.table.iter().map(|&b| b as u8).collect(),
                },
            )
        })
        .collect();
    let functions = m
        .functions()
        .iter()
        .map(|(k, f)| {
            (
                k.clone(),
                FunctionFile {
                    arity: f.arity,
                    table: names(m, &f.table),
                },
            )
        })
        .collect();
    let constants: BTreeMap<String, String> = m
        .constants()
        .iter()
        .map(|(k, &c)| (k.clone(), m.element_name(c).to_string()))
        .collect();
    DiscreteFile {
        builder: None,
        elements: m.element_names().to_vec(),
        relations,
        functions,
        constants,
        partition: m
            .natural_partition()
            .map(|bs| bs.iter().map(|b| names(m, b)).collect()),
    }
}

fn cmd_verify(path: &Path) -> Result<u8> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cert = HerbrandCertificate::from_json(&text)?;
    let report = cert.verify()?;
    println!(
        "{}",
        pretty(&json!({
            "ok": report.ok,
            "mode": report.mode,
            "max_residual": report.max_residual,
            "problems": report.problems,
            "proof": report.mode == Mode::Exact,
        }))
    );
    Ok(if report.ok { 0 } else { FAILED })
}
