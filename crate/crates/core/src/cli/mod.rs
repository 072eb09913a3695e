//! Command-line front end. `run_from` is the whole program; the binary only
//! forwards `std::env::args` and the process streams.

mod config;
mod tables;

pub use config::{default_workers, EngineKind, ScenarioConfig, ScenarioKind};
pub use tables::{format_report, reproduce_tables, TableRow, CURVE_CELLS, CURVE_REPLICATES, SIZED_CELLS, SIZED_REPLICATES};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::assurance::PriorSize;
use crate::conjugate_lm::InverseGamma;
use crate::error::{Error, Result};
use crate::precision::PrecisionMode;
use crate::sizing::{assurance_curve, min_sample_size, CurvePoint, Grid, NStar, SizingResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_ACHIEVED: i32 = 3;

pub const CSV_HEADER: &str = "n,assurance,stderr,engine,seed,replicates";

#[derive(Debug, Parser)]
#[command(name = "ssd", version, about = "Bayesian assurance and sample-size determination")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frequentist power at `n`, and the frequentist size for `gamma` if given.
    Power(ScenarioArgs),
    /// Assurance at a single sample size.
    Assurance(ScenarioArgs),
    /// Assurance over a grid of sample sizes, written as CSV.
    Curve(ScenarioArgs),
    /// Smallest sample size whose assurance reaches `gamma`.
    Size(ScenarioArgs),
    /// Rerun the published cost-effectiveness tables and compare.
    ReproduceTables(TableArgs),
}

#[derive(Debug, Args)]
struct TableArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    /// Also write the rows as JSON.
    #[arg(long)]
    json_file: Option<PathBuf>,
}

fn parse_prior_size(s: &str) -> std::result::Result<PriorSize, String> {
    match s {
        "inf" | "infinity" | "Inf" => Ok(PriorSize::Infinite),
        _ => s
            .parse::<f64>()
            .map(PriorSize::Finite)
            .map_err(|e| format!("expected a number or `inf`: {e}")),
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad grid entry `{t}`: {e}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err("grid range must be min:max:step".into());
        }
        Ok(Grid::Range {
            min: num(parts[0])?,
            max: num(parts[1])?,
            step: num(parts[2])?,
        })
    } else {
        Ok(Grid::Points(s.split(',').map(num).collect::<std::result::Result<_, _>>()?))
    }
}

fn parse_ig(s: &str) -> std::result::Result<InverseGamma, String> {
    let (a, b) = s.split_once(',').ok_or("expected shape,scale")?;
    let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad value `{t}`: {e}"));
    InverseGamma::new(f(a)?, f(b)?).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Scenario file (JSON). Flags override its fields.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,
    #[arg(long, value_enum)]
    engine: Option<EngineKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long)]
    n_a: Option<f64>,
    #[arg(long, value_parser = parse_prior_size)]
    n_d: Option<PriorSize>,
    /// Willingness-to-pay threshold.
    #[arg(long = "K")]
    k: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    /// Design inverse-gamma prior as `shape,scale`.
    #[arg(long, value_parser = parse_ig)]
    design_ig: Option<InverseGamma>,
    /// Analysis inverse-gamma prior as `shape,scale`.
    #[arg(long, value_parser = parse_ig)]
    analysis_ig: Option<InverseGamma>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    theta0_a: Option<f64>,
    #[arg(long)]
    theta0_d: Option<f64>,
    #[arg(long, value_parser = parse_precision_mode)]
    precision_mode: Option<PrecisionMode>,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    /// Use `p1` and `p2` as the true proportions instead of sampling them.
    #[arg(long)]
    exact_proportions: bool,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// `min:max:step` or a comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<Grid>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    inner_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    curve_file: Option<PathBuf>,
    #[arg(long)]
    summary_file: Option<PathBuf>,
    /// Write `elapsed_ms` as null so repeated runs are byte-identical.
    #[arg(long)]
    omit_timing: bool,
}

fn parse_precision_mode(s: &str) -> std::result::Result<PrecisionMode, String> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|_| "expected sample-mean or posterior-draw".into())
}

impl ScenarioArgs {
    fn flags(&self) -> ScenarioConfig {
        ScenarioConfig {
            scenario: self.scenario,
            engine: self.engine,
            n: self.n,
            alpha: self.alpha,
            delta: self.delta,
            sigma: self.sigma,
            n0: self.n0,
            n_a: self.n_a,
            n_d: self.n_d,
            k: self.k,
            sigma2: self.sigma2,
            tau2: self.tau2,
            design_ig: self.design_ig,
            analysis_ig: self.analysis_ig,
            d: self.d,
            theta0_a: self.theta0_a,
            theta0_d: self.theta0_d,
            precision_mode: self.precision_mode,
            p1: self.p1,
            p2: self.p2,
            exact_proportions: self.exact_proportions.then_some(true),
            alpha1: self.alpha1,
            beta1: self.beta1,
            alpha2: self.alpha2,
            beta2: self.beta2,
            gamma: self.gamma,
            grid: self.grid.clone(),
            replicates: self.replicates,
            inner_samples: self.inner_samples,
            seed: self.seed,
            workers: self.workers,
            curve_file: self.curve_file.clone(),
            summary_file: self.summary_file.clone(),
        }
    }

    /// File, then flags, then defaults.
    fn load(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
                ScenarioConfig::from_json(&text)?
            }
            None => ScenarioConfig::default(),
        };
        cfg.overlay(&self.flags());
        cfg.resolve()
    }
}

/// Exit status for an error: validation problems give 2, the rest 1.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Domain(_) | Error::Config(_) | Error::Dimension(_) => EXIT_INVALID,
        _ => EXIT_FAILURE,
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::config(format!("cannot write {}: {e}", path.display()))
}

fn fmt_seed(cfg: &mut ScenarioConfig, err: &mut dyn Write) -> u64 {
    *cfg.seed.get_or_insert_with(|| {
        let s: u64 = rand::random();
        let _ = writeln!(err, "seed: {s}");
        s
    })
}

/// Curve and refinement rows in CSV, ordered by `n` then replicate count.
pub fn curve_csv(result: &SizingResult) -> String {
    let mut rows: Vec<&CurvePoint> = result.curve.iter().chain(&result.refinement).collect();
    rows.sort_by_key(|p| (p.n, p.replicates));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.n, p.assurance, p.stderr, result.engine, p.seed, p.replicates
        ));
    }
    out
}

/// The config as echoed in outputs. The worker count never changes results,
/// so it is left out and runs at different widths hash the same.
fn echo(cfg: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig {
        workers: None,
        ..cfg.clone()
    }
}

fn summary(cfg: &ScenarioConfig, result: &SizingResult, curve_file: Option<&Path>, elapsed: Option<u128>) -> Value {
    let (n_star, max) = match result.n_star {
        NStar::Achieved { n } => (json!(n), None),
        NStar::NotAchieved { max_assurance } => (Value::Null, Some(max_assurance)),
    };
    let cfg = echo(cfg);
    let mut v = json!({
        "n_star": n_star,
        "gamma": result.gamma,
        "curve_file": curve_file.map(|p| p.display().to_string()),
        "seed": result.seed,
        "config": cfg,
        "config_hash": cfg.hash(),
        "elapsed_ms": elapsed.map(|e| e as u64),
        "engine": result.engine,
        "status": if max.is_some() { "not-achieved" } else { "achieved" },
    });
    if let Some(m) = max {
        v["max_assurance"] = json!(m);
    }
    v
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

fn cmd_power(args: &ScenarioArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.load()?;
    let kind = cfg.scenario_kind()?;
    let n = cfg.n.ok_or_else(|| Error::config("missing field `n`"))?;
    let (power, size) = cfg.frequentist(n)?;
    let v = json!({
        "scenario": kind.label(),
        "n": n,
        "power": power,
        "freq_sample_size": size,
        "config": cfg,
    });
    let _ = out.write_all(pretty(&v).as_bytes());
    Ok(EXIT_OK)
}

fn cmd_assurance(args: &ScenarioArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut cfg = args.load()?;
    let n = cfg.n.ok_or_else(|| Error::config("missing field `n`"))?;
    let seed = fmt_seed(&mut cfg, err);
    let engine = cfg.evaluator()?;
    let est = engine.evaluate(n, &cfg.settings(seed)).map_err(|e| e.at_n(n))?;
    let v = json!({
        "n": n,
        "assurance": est.delta_hat,
        "stderr": est.stderr,
        "replicates": est.replicates,
        "engine": engine.name(),
        "seed": seed,
        "config": echo(&cfg),
        "config_hash": echo(&cfg).hash(),
    });
    let _ = out.write_all(pretty(&v).as_bytes());
    Ok(EXIT_OK)
}

fn cmd_grid(args: &ScenarioArgs, search: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let start = Instant::now();
    let mut cfg = args.load()?;
    cfg.resolve_grid()?;
    if search && cfg.gamma.is_none() {
        return Err(Error::config("missing field `gamma`"));
    }
    if search && cfg.curve_file.is_none() {
        cfg.curve_file = Some(PathBuf::from("curve.csv"));
    }
    let seed = fmt_seed(&mut cfg, err);
    let engine = cfg.evaluator()?;
    // A plain curve has no target; 0.5 only feeds the unused n* of the result.
    let req = cfg.sizing_request(seed, cfg.gamma.unwrap_or(0.5))?;
    let result = if search {
        min_sample_size(engine.as_ref(), &req)?
    } else {
        assurance_curve(engine.as_ref(), &req)?
    };
    let csv = curve_csv(&result);
    match &cfg.curve_file {
        Some(path) => write_text(path, &csv)?,
        None => {
            let _ = out.write_all(csv.as_bytes());
        }
    }
    let elapsed = (!args.omit_timing).then(|| start.elapsed().as_millis());
    if search || cfg.summary_file.is_some() {
        let mut s = summary(&cfg, &result, cfg.curve_file.as_deref(), elapsed);
        if !search && cfg.gamma.is_none() {
            s["n_star"] = Value::Null;
            s["gamma"] = Value::Null;
            s["status"] = Value::Null;
        }
        let text = pretty(&s);
        if let Some(path) = &cfg.summary_file {
            write_text(path, &text)?;
        }
        if search {
            let _ = out.write_all(text.as_bytes());
        }
    }
    Ok(match result.n_star {
        NStar::NotAchieved { .. } if search => EXIT_NOT_ACHIEVED,
        _ => EXIT_OK,
    })
}

fn cmd_tables(args: &TableArgs, out: &mut dyn Write) -> Result<i32> {
    let rows = reproduce_tables(args.seed, args.workers.unwrap_or_else(default_workers))?;
    let _ = out.write_all(format_report(&rows).as_bytes());
    if let Some(path) = &args.json_file {
        write_text(path, &pretty(&json!({ "seed": args.seed, "rows": rows })))?;
    }
    Ok(EXIT_OK)
}

/// Parse `args` (program name first) and run, writing to `out` and `err`.
/// Returns the process exit status.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    let res = match &cli.command {
        Command::Power(a) => cmd_power(a, out),
        Command::Assurance(a) => cmd_assurance(a, out, err),
        Command::Curve(a) => cmd_grid(a, false, out, err),
        Command::Size(a) => cmd_grid(a, true, out, err),
        Command::ReproduceTables(a) => cmd_tables(a, out),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_from(std::iter::once("ssd").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn grid_flag_forms() {
        assert_eq!(parse_grid("1:9:4").unwrap(), Grid::Range { min: 1, max: 9, step: 4 });
        assert_eq!(parse_grid("3,5,8").unwrap(), Grid::Points(vec![3, 5, 8]));
        assert!(parse_grid("1:2").is_err());
    }

    #[test]
    fn prior_size_flag() {
        assert_eq!(parse_prior_size("inf").unwrap(), PriorSize::Infinite);
        assert_eq!(parse_prior_size("12.5").unwrap(), PriorSize::Finite(12.5));
        assert!(parse_prior_size("x").is_err());
    }

    #[test]
    fn missing_k_exits_2() {
        let (code, _, err) = run(&["size", "--scenario", "costeff", "--gamma", "0.7", "--seed", "1"]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("`K`"), "{err}");
    }

    #[test]
    fn bad_flag_exits_2() {
        let (code, _, _) = run(&["curve", "--scenario", "nope"]);
        assert_eq!(code, EXIT_INVALID);
    }

    #[test]
    fn power_reports_frequentist_size() {
        let (code, out, _) = run(&["power", "--scenario", "scalar", "--delta", "0.4", "--n", "34", "--gamma", "0.75"]);
        assert_eq!(code, EXIT_OK);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["power"].as_f64().unwrap() >= 0.75);
        assert!((v["freq_sample_size"].as_f64().unwrap() - 33.7).abs() < 0.5);
    }

    #[test]
    fn unreachable_gamma_exits_3() {
        let (code, out, _) = run(&[
            "size", "--scenario", "scalar", "--delta", "0.4", "--gamma", "0.99", "--grid", "1:20:1", "--seed", "0",
            "--curve-file", "/dev/null", "--omit-timing",
        ]);
        assert_eq!(code, EXIT_NOT_ACHIEVED);
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["n_star"].is_null());
        assert!(v["elapsed_ms"].is_null());
    }
}
