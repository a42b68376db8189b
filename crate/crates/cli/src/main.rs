//! `toeplitz-forge`: plan, evaluate, export and verify Toeplitz arrays.

mod suite;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;

use toeplitz_core::analysis::{census, unique_ergodicity_probe, Census, CensusMode};
use toeplitz_core::blocks::DEFAULT_CELL_BUDGET;
use toeplitz_core::formats::{
    letters_field, parse_plan, patch_to_pgm, patch_to_text, plan_to_text, records_to_text, Record, PLAN_HEADER,
};
use toeplitz_core::planner::{certify, parse_rational, plan, ConstructionPlan, PlannerConfig, Verdict, DEFAULT_DIGIT_BUDGET};
use toeplitz_core::toeplitz::{theorem_a_pipeline, ArrayHandle};
use toeplitz_core::toy::{parse_toy_plan, ToyPlan};
use toeplitz_core::Error;

const DEFAULT_DEPTH_BUDGET: usize = 64;

#[derive(Parser, Debug)]
#[command(name = "toeplitz-forge", version, about = "Toeplitz Z^d-subshifts with prescribed entropy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Plan and certify a construction for (k, d, h); writes the plan file.
    Plan(PlanArgs),
    /// Extract a box of the array as text, PGM or records.
    Patch(ExtractArgs),
    /// Extract a box of the array as a binary PGM image.
    Render(ExtractArgs),
    /// Run the invariant suite on a plan.
    Verify(SourceArgs),
    /// Block census and frequency table at one level.
    Census(CensusArgs),
}

#[derive(Args, Debug, Clone)]
struct Budgets {
    #[arg(long, default_value_t = DEFAULT_DEPTH_BUDGET)]
    depth_budget: usize,
    #[arg(long, default_value_t = DEFAULT_DIGIT_BUDGET)]
    digit_budget: u64,
    #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
    cell_budget: u128,
}

#[derive(Args, Debug, Clone)]
struct PlanArgs {
    #[arg(long)]
    k: u64,
    #[arg(long)]
    d: usize,
    /// Entropy as a decimal or `p/q`, parsed exactly.
    #[arg(long)]
    h: String,
    #[command(flatten)]
    budgets: Budgets,
    #[arg(long, value_enum, default_value_t = Format::Txt)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Plan file: a certified plan or a toy plan.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    h: Option<String>,
    /// Build the rescaled array over `k` letters through a substitution.
    #[arg(long)]
    theorem_a: bool,
    #[command(flatten)]
    budgets: Budgets,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ExtractArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Box as `x0,y0:w,h` (lower corner, then sides).
    #[arg(long = "box", allow_hyphen_values = true)]
    box_: Option<String>,
    /// Use the level-n domain as the box.
    #[arg(long)]
    level: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct CensusArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// Number of level-(t+1) blocks sampled for the frequency table.
    #[arg(long, default_value_t = 50)]
    sample: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Txt,
    Pgm,
    Records,
}

/// An evaluable array together with where it came from.
pub struct Source {
    pub handle: ArrayHandle,
    pub plan: Option<ConstructionPlan>,
    pub toy: Option<ToyPlan>,
}

fn config(digit_budget: u64) -> anyhow::Result<PlannerConfig> {
    let mut cfg = PlannerConfig { digit_budget, ..PlannerConfig::default() };
    if let Ok(v) = std::env::var("TOEPLITZ_FORGE_PRECISION") {
        cfg.precision = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("TOEPLITZ_FORGE_PRECISION={} is not an integer", v)))?;
        cfg.max_precision = cfg.max_precision.max(cfg.precision);
    }
    Ok(cfg)
}

fn parse_h(s: &str) -> anyhow::Result<BigRational> {
    Ok(parse_rational(s)?)
}

/// Fails with a certification error unless every certificate passes.
fn check_certificates(p: &ConstructionPlan) -> anyhow::Result<()> {
    let certs = certify(p)?;
    if let Some(c) = certs.iter().find(|c| c.verdict != Verdict::Pass) {
        return Err(Error::Certification(c.to_string()).into());
    }
    Ok(())
}

/// Loads a plan; with `strict` off, toy families skip the structural checks
/// so that `verify` can report the defect itself.
fn load_source(a: &SourceArgs, strict: bool) -> anyhow::Result<Source> {
    let b = &a.budgets;
    if let Some(path) = &a.plan {
        let text = fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {}", path.display(), e)))?;
        if text.lines().next().map(str::trim) == Some(PLAN_HEADER) {
            let mut p = parse_plan(&text)?;
            p.digit_budget = b.digit_budget.max(p.digit_budget);
            check_certificates(&p)?;
            let handle = ArrayHandle::from_plan(p.clone(), b.depth_budget)?;
            return Ok(Source { handle, plan: Some(p), toy: None });
        }
        let toy = parse_toy_plan(&text)?;
        let fam = toy.domain_family()?;
        let c = if strict {
            toeplitz_core::blocks::Construction::explicit(toy.k, fam, toy.tables.clone(), b.depth_budget)?
        } else {
            toeplitz_core::blocks::Construction::explicit_unchecked(toy.k, fam, toy.tables.clone(), b.depth_budget)?
        };
        return Ok(Source { handle: ArrayHandle::new(c), plan: None, toy: Some(toy) });
    }
    let (k, d, h) = match (a.k, a.d, &a.h) {
        (Some(k), Some(d), Some(h)) => (k, d, parse_h(h)?),
        _ => bail!(Error::InvalidInput("give --plan or all of --k, --d, --h".into())),
    };
    let cfg = config(b.digit_budget)?;
    if a.theorem_a {
        let ta = theorem_a_pipeline(k, d, &h, &cfg, b.depth_budget)?;
        let plan = ta.handle.plan.as_deref().cloned();
        return Ok(Source { handle: ta.handle, plan, toy: None });
    }
    let p = plan(k, d, &h, &cfg)?;
    check_certificates(&p)?;
    let handle = ArrayHandle::from_plan(p.clone(), b.depth_budget)?;
    Ok(Source { handle, plan: Some(p), toy: None })
}

fn write_out(out: &Option<PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Error::Format(format!("{}: {}", p.display(), e)).into()),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(bytes).and_then(|_| so.flush()).context("writing to stdout")
        }
    }
}

fn cmd_plan(a: &PlanArgs) -> anyhow::Result<()> {
    let cfg = config(a.budgets.digit_budget)?;
    let h = parse_h(&a.h)?;
    let p = plan(a.k, a.d, &h, &cfg)?;
    let certs = certify(&p)?;
    let failed = certs.iter().find(|c| c.verdict != Verdict::Pass).cloned();
    let body = match a.format {
        Format::Txt => plan_to_text(&p),
        Format::Records => {
            let mut recs = vec![Record::new("plan")
                .field("k", p.k)
                .field("d", p.d)
                .rational("h", &p.h)
                .field("M", p.m)
                .field("N", p.n)];
            for c in &certs {
                let mut r = Record::new("certificate").field("label", &c.label).field("verdict", c.verdict).field("detail", &c.detail);
                if let Some(l) = c.level {
                    r = r.field("level", l);
                }
                recs.push(r);
            }
            records_to_text(&recs)
        }
        Format::Pgm => bail!(Error::InvalidInput("plans have no PGM form".into())),
    };
    write_out(&a.out, body.as_bytes())?;
    let report: String = certs.iter().map(|c| format!("{}\n", c)).collect();
    if a.out.is_some() {
        print!("{}", report);
    } else {
        eprint!("{}", report);
    }
    if let Some(c) = failed {
        bail!(Error::Certification(c.to_string()));
    }
    Ok(())
}

fn parse_box(s: &str, d: usize) -> anyhow::Result<(Vec<BigInt>, Vec<u64>)> {
    let bad = || Error::InvalidInput(format!("box {:?} is not of the form x0,y0:w,h", s));
    let (lo, si) = s.split_once(':').ok_or_else(bad)?;
    let lower: Vec<BigInt> = lo.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    let sides: Vec<u64> = si.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    if lower.len() != d || sides.len() != d {
        bail!(Error::DimensionMismatch { expected: d, got: lower.len().max(sides.len()) });
    }
    Ok((lower, sides))
}

fn cmd_extract(a: &ExtractArgs, default: Format) -> anyhow::Result<()> {
    let src = load_source(&a.source, true)?;
    let h = &src.handle;
    let (lower, sides) = match (&a.box_, a.level) {
        (Some(b), _) => parse_box(b, h.dim())?,
        (None, Some(n)) => {
            let dom = h.level_domain(n)?;
            let sides = dom
                .sides
                .iter()
                .map(|s| u64::try_from(s).map_err(|_| Error::CellBudgetExceeded { needed: u128::MAX, budget: a.source.budgets.cell_budget }))
                .collect::<Result<Vec<_>, _>>()?;
            (dom.lower, sides)
        }
        (None, None) => bail!(Error::InvalidInput("give --box or --level".into())),
    };
    let p = h.patch(&lower, &sides, a.source.budgets.cell_budget)?;
    let bytes = match a.source.format.unwrap_or(default) {
        Format::Txt => patch_to_text(&p)?.into_bytes(),
        Format::Pgm => patch_to_pgm(&p, h.alphabet())?,
        Format::Records => records_to_text(&[Record::new("patch")
            .field("origin", toeplitz_core::formats::coords(&p.origin))
            .field("sides", p.sides.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","))
            .field("alphabet", h.alphabet())
            .field("letters", letters_field(&p))])
        .into_bytes(),
    };
    write_out(&a.source.out, &bytes)
}

fn cmd_census(a: &CensusArgs) -> anyhow::Result<()> {
    let src = load_source(&a.source, true)?;
    let h = &src.handle;
    let budget = a.source.budgets.cell_budget;
    let t = a.level;
    let mut recs = Vec::new();
    let cen = match census(h, t, CensusMode::Scan, budget) {
        Ok(c) => c,
        Err(Error::CellBudgetExceeded { .. }) => census(h, t, CensusMode::Certificate, budget)?,
        Err(e) => return Err(e.into()),
    };
    match &cen {
        Census::Blocks(bs) => {
            for (i, b) in bs.iter().enumerate() {
                recs.push(Record::new("census").field("t", t).field("index", i + 1).field("letters", letters_field(b)));
            }
        }
        Census::Cardinality(_) => {}
    }
    recs.push(Record::new("census_size").field("t", t).field("count", cen.len()));
    let probe = match h.substitution {
        None => match unique_ergodicity_probe(h, t, a.sample, a.source.seed, budget) {
            Ok(rep) => Some(rep),
            Err(e @ (Error::CellBudgetExceeded { .. } | Error::DigitBudgetExceeded(_))) => {
                recs.push(Record::new("ap_summary").field("t", t).field("verdict", "skipped").field("reason", e));
                None
            }
            Err(e) => return Err(e.into()),
        },
        Some(_) => None,
    };
    if let Some(rep) = probe {
        for (i, j, v) in &rep.entries {
            recs.push(Record::new("ap").field("t", t).field("i", i).field("j", j).rational("value", v));
        }
        recs.push(
            Record::new("ap_summary")
                .field("t", t)
                .rational("min", &rep.min)
                .rational("max", &rep.max)
                .rational("spread", &rep.spread())
                .field("verdict", if rep.passed() { "pass" } else { "fail" }),
        );
    }
    write_out(&a.source.out, records_to_text(&recs).as_bytes())
}

fn cmd_verify(a: &SourceArgs) -> anyhow::Result<()> {
    let src = load_source(a, false)?;
    let checks = suite::run(&src, a.seed, a.budgets.cell_budget)?;
    let body = match a.format.unwrap_or(Format::Txt) {
        Format::Records => records_to_text(
            &checks
                .iter()
                .map(|c| Record::new("check").field("name", &c.name).field("verdict", if c.passed { "pass" } else { "fail" }).field("detail", &c.detail))
                .collect::<Vec<_>>(),
        ),
        _ => checks.iter().map(|c| format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)).collect(),
    };
    write_out(&a.out, body.as_bytes())?;
    if let Some(c) = checks.iter().find(|c| !c.passed) {
        bail!(Error::Verification(format!("{}: {}", c.name, c.detail)));
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) => err.exit_code() as u8,
        None => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Patch(a) => cmd_extract(a, Format::Txt),
        Command::Render(a) => cmd_extract(a, Format::Pgm),
        Command::Verify(a) => cmd_verify(a),
        Command::Census(a) => cmd_census(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            let kind = e.downcast_ref::<Error>().map_or("io", error_kind);
            let rec = Record::new("error").field("code", code).field("kind", kind).field("message", format!("{:#}", e));
            eprint!("{}", records_to_text(&[rec]));
            ExitCode::from(code)
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::DepthBudgetExceeded(_) => "depth_budget",
        Error::DigitBudgetExceeded(_) => "digit_budget",
        Error::CellBudgetExceeded { .. } => "cell_budget",
        Error::InfeasibleEntropy(_) => "infeasible_entropy",
        Error::Certification(_) => "certification",
        Error::InvalidInput(_) => "invalid_input",
        Error::Format(_) => "format",
        Error::Verification(_) => "verification",
    }
}
