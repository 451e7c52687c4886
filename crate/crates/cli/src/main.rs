mod plugin;

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use loewner::decompose::{
    decompose_commutative, decompose_cone_iso, decompose_effect_iso, decompose_sa_iso, BlackBoxMap, DecomposeConfig,
    RESIDUAL_BUDGET,
};
use loewner::effects::{homo_certificate, inf_p_with_halfsup, orth_by_order, spectral_staircase};
use loewner::harness::{self, TrialConfig};
use loewner::interchange::{to_json_line, to_json_pretty};
use loewner::maps::OrderIsoExpr;
use loewner::projections::{orthogonal_direct, require_projection};
use loewner::random::trial_rng;
use loewner::{leq, lt_strict, Algebra, Element, Error, IntervalKind, Result, Tolerances};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::plugin::PluginSpec;

#[derive(Parser, Debug)]
#[command(name = "loewner", version, about = "Order isomorphisms of operator intervals")]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare two hermitian elements in the Loewner order.
    Order { a: PathBuf, b: PathBuf },
    /// Certificates for the projection lattice identities.
    Lemma {
        #[command(subcommand)]
        which: Lemma,
    },
    /// Evaluate or invert a map expression.
    Map {
        #[command(subcommand)]
        action: MapAction,
    },
    /// Recover canonical parameters of an order isomorphism.
    Decompose {
        kind: DecomposeKind,
        /// Map expression, or a plugin spec with a `command` field.
        phi: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid resolution for `comm`.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Half-width of the sampled range for `comm` on cone and sa.
        #[arg(long, default_value_t = 1.0)]
        span: f64,
    },
    /// Run seeded property suites.
    Fuzz {
        /// Suite name or `all`.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        /// Block signatures such as `2,2`; repeatable.
        #[arg(long = "blocks", value_delimiter = ';')]
        pool: Vec<String>,
    },
    /// Spectral staircase approximation of an effect.
    Staircase {
        a: PathBuf,
        #[arg(long, default_value_t = 4)]
        n: u32,
    },
    /// Execute a v1 manifest.
    Run { manifest: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Lemma {
    /// inf{p, q + q⊥/2} for projections at angle t.
    Homo {
        #[arg(long)]
        t: f64,
        /// Block signature of the base algebra, e.g. `1` or `2,1`.
        #[arg(long, default_value = "1")]
        base: String,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Orthogonality of two projections read off the order.
    Orth { p: PathBuf, q: PathBuf },
}

#[derive(Subcommand, Debug)]
enum MapAction {
    Eval {
        map: PathBuf,
        x: PathBuf,
    },
    Inverse {
        map: PathBuf,
    },
    /// Answer one JSON element per stdin line with its image, as a plugin.
    Serve {
        map: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DecomposeKind {
    Effect,
    Cone,
    Sa,
    Comm,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: String,
    /// Subcommand words and options, e.g. `["decompose", "effect"]`.
    command: Vec<String>,
    /// Positional inputs, relative to the manifest's directory.
    #[serde(default)]
    inputs: Vec<PathBuf>,
    #[serde(default)]
    tolerances: Option<Tolerances>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    output: Option<PathBuf>,
}

/// JSON payload plus whether the checked property held.
struct Outcome {
    json: String,
    passed: bool,
}

impl Outcome {
    fn new<T: Serialize>(value: &T, passed: bool) -> Result<Self> {
        Ok(Outcome {
            json: to_json_pretty(value)?,
            passed,
        })
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parameter(format!("{}: {e}", path.display())))
}

fn parse_blocks(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad block signature {s:?}")))
        })
        .collect()
}

fn cmd_order(a: &Path, b: &Path, tol: &Tolerances) -> Result<Outcome> {
    let a: Element = read_json(a)?;
    let b: Element = read_json(b)?;
    let a = a.to_hermitian(tol)?;
    let b = b.to_hermitian(tol)?;
    let report = json!({
        "leq": leq(&a, &b, tol)?,
        "geq": leq(&b, &a, tol)?,
        "lt_strict": lt_strict(&a, &b, tol)?,
        "gt_strict": lt_strict(&b, &a, tol)?,
        "lambda_min": (&b - &a).lambda_min(tol)?,
    });
    Outcome::new(&report, true)
}

fn cmd_homo(t: f64, base: &str, samples: usize, seed: u64, tol: &Tolerances) -> Result<Outcome> {
    let base = Algebra::new(parse_blocks(base)?)?;
    let cert = homo_certificate(t, &base, samples, &mut trial_rng(seed, 0), tol)?;
    let bisection_ok = (cert.bisection_coefficient - cert.coefficient).abs() <= 1e-8;
    Outcome::new(&cert, cert.passes() && bisection_ok)
}

fn cmd_orth(p: &Path, q: &Path, tol: &Tolerances) -> Result<Outcome> {
    let p = require_projection(&read_json(p)?, tol)?;
    let q = require_projection(&read_json(q)?, tol)?;
    let by_order = orth_by_order(&p, &q, tol)?;
    let direct = orthogonal_direct(&p, &q, tol)?;
    let report = json!({
        "orthogonal_by_order": by_order,
        "orthogonal_direct": direct,
        "agree": by_order == direct,
        "inf": inf_p_with_halfsup(&p, &q, tol)?,
    });
    Outcome::new(&report, by_order == direct)
}

fn cmd_map_eval(map: &Path, x: &Path, tol: &Tolerances) -> Result<Outcome> {
    let expr: OrderIsoExpr = read_json(map)?;
    let x: Element = read_json(x)?;
    Outcome::new(&expr.evaluate(&x, tol)?, true)
}

fn cmd_serve(map: &Path, tol: &Tolerances) -> Result<()> {
    let expr: OrderIsoExpr = read_json(map)?;
    let mut out = std::io::stdout().lock();
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let x: Element = serde_json::from_str(&line)?;
        writeln!(out, "{}", to_json_line(&expr.evaluate(&x, tol)?)?)?;
        out.flush()?;
    }
    Ok(())
}

fn load_map(path: &Path, tol: &Tolerances) -> Result<BlackBoxMap> {
    let raw: Value = read_json(path)?;
    if raw.get("command").is_some() {
        let spec: PluginSpec = serde_json::from_value(raw)?;
        return spec.spawn(tol);
    }
    let expr: OrderIsoExpr = serde_json::from_value(raw)?;
    let source = expr
        .source_algebra()
        .ok_or_else(|| Error::Parameter("map expression needs a \"source\" algebra".into()))?;
    BlackBoxMap::from_expr(&expr, &source, tol)
}

fn residual_report<T: Serialize>(kind: &str, record: &T, residual: f64) -> Result<Outcome> {
    let passed = residual <= RESIDUAL_BUDGET;
    let value = json!({
        "kind": kind,
        "decomposition": record,
        "report": { "residual": residual, "budget": RESIDUAL_BUDGET, "passed": passed },
    });
    Outcome::new(&value, passed)
}

fn cmd_decompose(
    kind: DecomposeKind,
    phi: &Path,
    seed: u64,
    grid: usize,
    span: f64,
    tol: &Tolerances,
) -> Result<Outcome> {
    let phi = load_map(phi, tol)?;
    let cfg = DecomposeConfig {
        seed,
        ..DecomposeConfig::default()
    };
    match kind {
        DecomposeKind::Effect => {
            let d = decompose_effect_iso(&phi, &cfg)?;
            residual_report("effect", &d, d.residual)
        }
        DecomposeKind::Cone => {
            let d = decompose_cone_iso(&phi, &cfg)?;
            residual_report("cone", &d, d.residual)
        }
        DecomposeKind::Sa => {
            let d = decompose_sa_iso(&phi, &cfg)?;
            residual_report("sa", &d, d.residual)
        }
        DecomposeKind::Comm => {
            let d = decompose_commutative(&phi, grid, span, &cfg)?;
            residual_report("comm", &d, d.residual)
        }
    }
}

fn cmd_fuzz(suite: &str, trials: usize, seed: u64, pool: &[String], tol: &Tolerances) -> Result<Outcome> {
    let cfg = TrialConfig {
        seed,
        trials,
        algebra_pool: pool.iter().map(|s| parse_blocks(s)).collect::<Result<_>>()?,
        tolerances: *tol,
    };
    let report = harness::run(suite, &cfg)?;
    Outcome::new(&report, report.passed)
}

fn cmd_staircase(a: &Path, n: u32, tol: &Tolerances) -> Result<Outcome> {
    let a: Element = read_json(a)?;
    let a = IntervalKind::Effect.require(&a, tol)?;
    let st = spectral_staircase(&a, n, tol)?;
    let gap = &a - &st.sum(a.algebra());
    let (lo, hi) = (gap.lambda_min(tol)?, gap.lambda_max(tol)?);
    let passed = lo >= -tol.psd_tol && hi <= 1.0 / n as f64 + tol.psd_tol;
    let value = json!({
        "staircase": st,
        "gap_lambda_min": lo,
        "gap_lambda_max": hi,
        "bound": 1.0 / n as f64,
        "certified": passed,
    });
    Outcome::new(&value, passed)
}

fn cmd_run(manifest: &Path) -> Result<(Cli, Option<Tolerances>)> {
    let m: Manifest = read_json(manifest)?;
    if m.version != "v1" {
        return Err(Error::Parameter(format!(
            "unsupported manifest version {:?}",
            m.version
        )));
    }
    if m.command.first().map(String::as_str) == Some("run") {
        return Err(Error::Parameter("manifests cannot run manifests".into()));
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut argv: Vec<String> = vec!["loewner".into()];
    argv.extend(m.command.iter().cloned());
    argv.extend(m.inputs.iter().map(|p| dir.join(p).display().to_string()));
    if let Some(seed) = m.seed {
        argv.extend(["--seed".into(), seed.to_string()]);
    }
    if let Some(out) = &m.output {
        argv.extend(["--out".into(), dir.join(out).display().to_string()]);
    }
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Parameter(format!("manifest command: {e}")))?;
    if let Some(t) = &m.tolerances {
        t.validate()?;
    }
    Ok((cli, m.tolerances))
}

fn dispatch(cli: &Cli, tol: &Tolerances) -> Result<Outcome> {
    match &cli.command {
        Command::Order { a, b } => cmd_order(a, b, tol),
        Command::Lemma {
            which: Lemma::Homo { t, base, samples, seed },
        } => cmd_homo(*t, base, *samples, *seed, tol),
        Command::Lemma {
            which: Lemma::Orth { p, q },
        } => cmd_orth(p, q, tol),
        Command::Map {
            action: MapAction::Eval { map, x },
        } => cmd_map_eval(map, x, tol),
        Command::Map {
            action: MapAction::Inverse { map },
        } => {
            let expr: OrderIsoExpr = read_json(map)?;
            Outcome::new(&expr.inverse()?, true)
        }
        Command::Map {
            action: MapAction::Serve { map },
        } => {
            cmd_serve(map, tol)?;
            Ok(Outcome {
                json: String::new(),
                passed: true,
            })
        }
        Command::Decompose {
            kind,
            phi,
            seed,
            grid,
            span,
        } => cmd_decompose(*kind, phi, *seed, *grid, *span, tol),
        Command::Fuzz {
            suite,
            trials,
            seed,
            pool,
        } => cmd_fuzz(suite, *trials, *seed, pool, tol),
        Command::Staircase { a, n } => cmd_staircase(a, *n, tol),
        Command::Run { manifest } => {
            let (inner, override_tol) = cmd_run(manifest)?;
            let outcome = dispatch(&inner, &override_tol.unwrap_or(*tol))?;
            emit(&inner, &outcome)?;
            Ok(Outcome {
                json: String::new(),
                passed: outcome.passed,
            })
        }
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    if matches!(
        cli.command,
        Command::Run { .. }
            | Command::Map {
                action: MapAction::Serve { .. }
            }
    ) {
        return Ok(());
    }
    match &cli.out {
        Some(path) => fs::write(path, format!("{}\n", outcome.json))?,
        None => println!("{}", outcome.json),
    }
    Ok(())
}

/// Property failures exit with 1; malformed input and usage errors with 2.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Certificate { .. }
        | Error::Precondition(_)
        | Error::Callback(_)
        | Error::Singular(_)
        | Error::FunctionUndefined(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Tolerances::from_env().and_then(|tol| {
        let outcome = dispatch(&cli, &tol)?;
        emit(&cli, &outcome)?;
        Ok(outcome.passed)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
