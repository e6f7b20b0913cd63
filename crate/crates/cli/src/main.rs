//! `demorgan-gate`: classify series, generate fixtures, analyse birth-death
//! chains and inspect reports.
//!
//! Exit status: 0 when a decision was reached (or files were written), 2 when
//! the verdict is inconclusive, 1 on any error.

mod config;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{ArgGroup, Args, Parser, Subcommand};
use demorgan_core::bdp::{classify_bdp_with, BdpFamily, BdpRates, ChainDecision, SimulationConfig};
use demorgan_core::catalog::Family;
use demorgan_core::classifier::{
    auto_escalate_with, classify_at, classify_necsuf_with, classify_ratio_sufficient_with, ClassifierConfig, Decision,
    Verdict,
};
use demorgan_core::io::{read_jsonl, write_jsonl, write_membership_csv, write_traces_csv, Report};
use demorgan_core::iterlog::{min_domain, BertrandLevel};
use demorgan_core::series::{extract_s_from_excess, Mode, TermStream};
use demorgan_core::synth::{
    boundary_family, closed_form_terms, closed_form_truth, divergent_case_terms, from_ratio, from_root,
    paired_counterexample, ratio_truth, renumbered_low_check, root_truth, table1_schedule_stream, DivergentCase, EpsKind,
    IndexRange, SFunction, SchedulePattern, StepMap, SynthMetadata, Table1Schedule, Truth,
};
use serde_json::json;

use config::{Config, Count, Grid};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] demorgan_core::Error),
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.display().to_string(), msg: e.to_string() }
}

#[derive(Parser)]
#[command(name = "demorgan-gate", version, about = "Iterated-logarithm convergence tests for positive series")]
struct Cli {
    /// key = value defaults, overridden by flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a series and write a JSON report plus an n,K,s trace table
    Classify(ClassifyArgs),
    /// Generate a fixture stream with a metadata sidecar
    Synth(SynthArgs),
    /// Recurrence/transience of a birth-death chain
    Bdp(BdpArgs),
    /// Summarise an existing report
    Report(ReportArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").args(["family", "terms"])))]
struct ClassifyArgs {
    /// Catalog family, e.g. harmonic, one_over_n_logsq, power:1.5, loglog_power:2
    #[arg(long)]
    family: Option<String>,
    /// JSONL stream of {"n", "ln_a"} or {"n", "a"} records
    #[arg(long)]
    terms: Option<PathBuf>,
    /// Terms generated for --family (default 1e5, at least 1e3)
    #[arg(long)]
    horizon: Option<Count>,
    /// necsuf | escalate | level | ratio | root | ratio-sufficient
    #[arg(long)]
    test: Option<String>,
    /// ratio | root | root-exponent (for escalate and level)
    #[arg(long)]
    mode: Option<Mode>,
    /// Level K for --test level/ratio/root (default 1)
    #[arg(long)]
    level: Option<u32>,
    /// Decision margin around s = 1 (default 0.05)
    #[arg(long)]
    margin: Option<f64>,
    /// Margin above the iterated-log domain edge (default 0.1)
    #[arg(long)]
    safety_margin: Option<f64>,
    /// Comma-separated c values for the index-set test
    #[arg(long)]
    c_grid: Option<Grid>,
    /// Fraction of the trace used as tail window (default 0.25)
    #[arg(long)]
    tail_fraction: Option<f64>,
    /// Report path (default report.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV path (default <out stem>.traces.csv)
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Omit generated_unix so reruns are byte-identical
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("generator").required(true).args([
    "from_root", "from_ratio", "closed_form", "boundary", "table1", "even_odd", "paired", "case1", "case2",
])))]
struct SynthArgs {
    /// a_n = (B_K(n) + s/D_K(n))^-n
    #[arg(long)]
    from_root: bool,
    /// a_n/a_{n+1} = B_K(n) + s/D_K(n), cumulative
    #[arg(long)]
    from_ratio: bool,
    /// a_n = e^-1 / (n ln n ... ln_(K-1)^s n)
    #[arg(long)]
    closed_form: bool,
    /// Root stream with s_n = 1 + eps_n
    #[arg(long)]
    boundary: bool,
    /// Boundary stream with alternating HIGH/LOW blocks from n0
    #[arg(long)]
    table1: bool,
    /// Boundary stream, HIGH at even n
    #[arg(long)]
    even_odd: bool,
    /// Pairwise-equal terms, converging, ratio test fails on half the indices
    #[arg(long)]
    paired: bool,
    /// Divergent root stream with constant s = c* <= 1 (--s, default 1)
    #[arg(long)]
    case1: bool,
    /// Divergent root stream stepping up through levels
    #[arg(long)]
    case2: bool,
    /// Level K (default 1)
    #[arg(long = "K")]
    k: Option<u32>,
    /// Planted constant s (default 1.5)
    #[arg(long)]
    s: Option<f64>,
    /// c-over-log | one-over-log; replaces s by 1 + eps_n
    #[arg(long)]
    eps: Option<String>,
    /// Constant C > 1 (default 2)
    #[arg(long = "C", visible_alias = "c")]
    c: Option<f64>,
    /// First index of the block schedule
    #[arg(long)]
    n0: Option<u64>,
    /// Index range start:end (default <domain start>:100000)
    #[arg(long)]
    range: Option<IndexRange>,
    /// First term for --from-ratio (default 1)
    #[arg(long)]
    a_start: Option<f64>,
    /// Stream path (default synth.jsonl)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("rates_source").args(["family", "rates"])))]
struct BdpArgs {
    /// telescoping | symmetric | constant | log_boundary | log_drift
    #[arg(long)]
    family: Option<String>,
    /// CSV with header n,lambda,mu
    #[arg(long)]
    rates: Option<PathBuf>,
    /// Birth rate for --family constant (default 2)
    #[arg(long)]
    lambda: Option<f64>,
    /// Death rate for --family constant (default 1)
    #[arg(long)]
    mu: Option<f64>,
    /// alpha for --family log_drift, below e (default 2)
    #[arg(long)]
    drift_alpha: Option<f64>,
    /// Rates generated for --family (default 1e5)
    #[arg(long)]
    horizon: Option<Count>,
    /// alpha in the simplified log bound
    #[arg(long)]
    alpha: Option<f64>,
    /// TRIALS STEP_CAP
    #[arg(long, num_args = 2, value_names = ["TRIALS", "STEP_CAP"])]
    simulate: Option<Vec<Count>>,
    /// Simulation seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Level counted as escape in simulation (default 1000)
    #[arg(long)]
    escape_level: Option<u64>,
    /// Decision margin around s = 1 (default 0.05)
    #[arg(long)]
    margin: Option<f64>,
    /// Report path (default bdp_report.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV path (default <out stem>.traces.csv)
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Omit generated_unix so reruns are byte-identical
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct ReportArgs {
    input: PathBuf,
    /// Print the report back as JSON instead of a summary
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // 2 is reserved for inconclusive verdicts
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    init_threads()?;
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.cmd {
        Command::Classify(a) => cmd_classify(a, &cfg),
        Command::Synth(a) => cmd_synth(a, &cfg),
        Command::Bdp(a) => cmd_bdp(a, &cfg),
        Command::Report(a) => cmd_report(a),
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("DEMORGAN_GATE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::Usage(format!("DEMORGAN_GATE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, write: impl FnOnce(&mut File) -> Result<(), CliError>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    write(tmp.as_file_mut())?;
    tmp.as_file_mut().flush().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn timestamp(disabled: bool) -> Option<u64> {
    (!disabled).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn classifier_config(
    cfg: &Config,
    margin: Option<f64>,
    safety: Option<f64>,
    grid: Option<Grid>,
    tail: Option<f64>,
) -> Result<ClassifierConfig, CliError> {
    let mut c = ClassifierConfig::default();
    c.decision_margin = cfg.pick(margin, "margin", c.decision_margin)?;
    c.safety_margin = cfg.pick(safety, "safety-margin", c.safety_margin)?;
    if let Some(g) = cfg.pick_opt(grid, "c-grid")? {
        c.c_grid = g.0;
    }
    c.trace.tail_fraction = cfg.pick(tail, "tail-fraction", c.trace.tail_fraction)?;
    c.index.tail_fraction = c.trace.tail_fraction;
    if c.safety_margin.is_nan() || c.safety_margin <= 0.0 {
        return Err(CliError::Usage("safety margin must be > 0".into()));
    }
    c.validate()?;
    Ok(c)
}

fn write_report(report: &Report, out: &Path, traces: Option<(&Path, &Verdict)>) -> Result<(), CliError> {
    if let Some((path, v)) = traces {
        write_atomic(path, |f| Ok(write_traces_csv(&v.traces, f)?))?;
    }
    write_atomic(out, |f| f.write_all(report.to_json().as_bytes()).map_err(io_err(out)))
}

fn summary_line(r: &Report) -> String {
    let level = r.level.map_or(String::new(), |k| format!(", level {k}"));
    let bdp = r.bdp.as_ref().map_or(String::new(), |b| format!(" => {}", b.decision.name()));
    format!("{}{bdp} ({}{level})", r.decision.name(), serde_json::to_value(r.theorem).unwrap().as_str().unwrap_or(""))
}

fn cmd_classify(a: ClassifyArgs, cfg: &Config) -> Result<u8, CliError> {
    let ccfg = classifier_config(cfg, a.margin, a.safety_margin, a.c_grid, a.tail_fraction)?;
    let horizon = cfg.pick(a.horizon, "horizon", Count(100_000))?.0;
    let (ts, source) = match (&a.family, &a.terms) {
        (Some(name), None) => {
            if horizon < 1000 {
                return Err(CliError::Usage(format!("horizon must be >= 1000, got {horizon}")));
            }
            let fam: Family = name.parse()?;
            (fam.stream(horizon)?, json!({ "family": fam.to_string(), "horizon": horizon }))
        }
        (None, Some(path)) => {
            let f = File::open(path).map_err(io_err(path))?;
            let ts = read_jsonl(BufReader::new(f)).map_err(|e| match e {
                demorgan_core::Error::Parse { line, msg } => CliError::Usage(format!("{}:{line}: {msg}", path.display())),
                other => other.into(),
            })?;
            if ts.end_index() < 1000 {
                return Err(CliError::Usage(format!("stream must reach n >= 1000, ends at {}", ts.end_index())));
            }
            (ts, json!({ "terms": path.display().to_string() }))
        }
        _ => return Err(CliError::Usage("give --family or --terms".into())),
    };
    let test = cfg.pick(a.test, "test", "necsuf".to_string())?;
    let mode = cfg.pick_opt(a.mode, "mode")?;
    let level = cfg.pick(a.level, "level", 1)?;
    let single = |m: Mode| -> Result<Verdict, CliError> {
        let lvl = BertrandLevel::with_margin(level, ccfg.safety_margin)?;
        Ok(classify_at(&ts, lvl, m, &ccfg)?)
    };
    let verdict = match test.as_str() {
        "necsuf" => classify_necsuf_with(&ts, &ccfg)?,
        "ratio-sufficient" => classify_ratio_sufficient_with(&ts, &ccfg)?,
        "escalate" => auto_escalate_with(&ts, mode.unwrap_or(Mode::Ratio), &ccfg)?.0,
        "level" => single(mode.unwrap_or(Mode::Ratio))?,
        "ratio" => single(Mode::Ratio)?,
        "root" => single(Mode::RootExponent)?,
        other => return Err(CliError::Usage(format!("unknown test {other:?}"))),
    };
    let out = cfg.pick(a.out, "out", PathBuf::from("report.json"))?;
    let traces = match cfg.pick_opt(a.traces, "traces")? {
        Some(t) => t,
        None => sibling(&out, ".traces.csv"),
    };
    let mut report = Report::from_verdict(&verdict, Some(traces.display().to_string()));
    report.source = Some(source);
    report.generated_unix = timestamp(a.no_timestamp || cfg.pick(None, "no-timestamp", false)?);
    write_report(&report, &out, Some((&traces, &verdict)))?;
    println!("{}", summary_line(&report));
    Ok(exit_for(verdict.decision))
}

fn exit_for(d: Decision) -> u8 {
    match d {
        Decision::Converges | Decision::Diverges => 0,
        Decision::Inconclusive => 2,
    }
}

fn parse_eps(name: &str, c: f64) -> Result<EpsKind, CliError> {
    match name {
        "c-over-log" => Ok(EpsKind::COverLog { c }),
        "one-over-log" => Ok(EpsKind::OneOverLog),
        other => Err(CliError::Usage(format!("unknown eps kind {other:?} (c-over-log | one-over-log)"))),
    }
}

/// Largest |planted - extracted| over the stream, or `None` when undefined.
fn round_trip_error(ts: &TermStream, k: u32, s: &SFunction, ratio: bool) -> Result<f64, CliError> {
    let lvl = BertrandLevel::new(k)?;
    let from = ts.start_index().max(lvl.domain_start()?);
    let to = if ratio { ts.end_index() - 1 } else { ts.end_index() };
    let mut worst = 0f64;
    for n in from..=to {
        let excess = if ratio {
            ts.log_ratio(n)?.exp_m1()
        } else {
            (-ts.ln_a(n)? / n as f64).exp_m1()
        };
        let got = extract_s_from_excess(lvl, n, excess)?;
        worst = worst.max((got - s.at(k, n)).abs());
    }
    Ok(worst)
}

fn cmd_synth(a: SynthArgs, cfg: &Config) -> Result<u8, CliError> {
    let k = cfg.pick(a.k, "k", 1)?;
    BertrandLevel::new(k)?;
    let c = cfg.pick(a.c, "c", 2.0)?;
    let eps = cfg.pick_opt(a.eps, "eps")?.map(|e| parse_eps(&e, c)).transpose()?;
    let s_const = cfg.pick(a.s, "s", 1.5)?;
    let sfun = match eps {
        Some(e) => SFunction::one_plus(e),
        None => SFunction::constant(s_const),
    };
    let default_start = |depth: u32| -> Result<u64, CliError> { Ok(min_domain(depth)?) };
    let pick_range = |start: u64| -> Result<IndexRange, CliError> {
        match cfg.pick_opt(a.range, "range")? {
            Some(r) => Ok(r),
            None => Ok(IndexRange::new(start, 100_000)?),
        }
    };
    let out = cfg.pick(a.out, "out", PathBuf::from("synth.jsonl"))?;
    let mut membership: Option<(u64, Vec<bool>)> = None;
    let mut extra = serde_json::Map::new();

    let (ts, meta) = if a.from_root || a.from_ratio || a.closed_form {
        let depth = if eps.is_some() { k + 1 } else { k };
        let range = pick_range(default_start(depth)?)?;
        let params = json!({ "K": k, "s": sfun, "range": range.to_string() });
        if a.from_root {
            let ts = from_root(k, &sfun, range)?;
            let mut meta = SynthMetadata::new("from_root", params, root_truth());
            meta.round_trip_verified = Some(round_trip_error(&ts, k, &sfun, false)? <= 1e-9);
            (ts, meta)
        } else if a.from_ratio {
            let a_start = cfg.pick(a.a_start, "a-start", 1.0)?;
            let ts = from_ratio(k, &sfun, a_start, range)?;
            let mut params = params;
            params["a_start"] = json!(a_start);
            let mut meta = SynthMetadata::new("from_ratio", params, ratio_truth(&sfun));
            if range.start >= BertrandLevel::new(k)?.domain_start()? {
                meta.round_trip_verified = Some(round_trip_error(&ts, k, &sfun, true)? <= 1e-9);
            }
            (ts, meta)
        } else {
            let ts = closed_form_terms(k, &sfun, range)?;
            (ts, SynthMetadata::new("closed_form", params, closed_form_truth(&sfun)))
        }
    } else if a.boundary {
        let e = eps.unwrap_or(EpsKind::COverLog { c });
        let range = pick_range(default_start(k + 1)?)?;
        let ts = boundary_family(k, e, range)?;
        let params = json!({ "K": k, "eps": e, "range": range.to_string() });
        (ts, SynthMetadata::new("boundary_family", params, root_truth()))
    } else if a.table1 || a.even_odd {
        let pattern = if a.table1 { SchedulePattern::Table1 } else { SchedulePattern::EvenOdd };
        let n0 = cfg.pick(a.n0, "n0", default_start(k + 1)?)?;
        let sched = Table1Schedule::new(n0, c, pattern)?;
        let range = pick_range(n0)?;
        let (ts, high) = table1_schedule_stream(k, sched, range)?;
        let check = renumbered_low_check(k, &sched, &ts)?;
        extra.insert("renumbered_low_check".into(), serde_json::to_value(&check).unwrap());
        membership = Some((range.start, high));
        let params = json!({ "K": k, "schedule": sched, "range": range.to_string() });
        (ts, SynthMetadata::new("table1_schedule", params, Truth::Diverges))
    } else if a.paired {
        let range = pick_range(2 * default_start(k)?)?;
        let ts = paired_counterexample(k, c, range)?;
        let params = json!({ "K": k, "c": c, "range": range.to_string() });
        (ts, SynthMetadata::new("paired_counterexample", params, Truth::Converges))
    } else if a.case1 {
        let range = pick_range(default_start(k)?)?;
        let case = DivergentCase::I { level: k, c_star: cfg.pick(a.s, "s", 1.0)? };
        let ts = divergent_case_terms(&case, range)?;
        let params = json!({ "case": case, "range": range.to_string() });
        (ts, SynthMetadata::new("divergent_case", params, Truth::Diverges))
    } else {
        let range = pick_range(default_start(1)?)?;
        let case = DivergentCase::II { steps: StepMap::aggressive(range)? };
        let ts = divergent_case_terms(&case, range)?;
        let params = json!({ "case": case, "range": range.to_string() });
        (ts, SynthMetadata::new("divergent_case", params, Truth::Diverges))
    };

    write_atomic(&out, |f| Ok(write_jsonl(&ts, std::io::BufWriter::new(f))?))?;
    let mut written = vec![out.clone()];
    let mut meta_value = serde_json::to_value(&meta).unwrap();
    if let Some((start, members)) = &membership {
        let path = sibling(&out, ".membership.csv");
        write_atomic(&path, |f| Ok(write_membership_csv(*start, members, std::io::BufWriter::new(f))?))?;
        extra.insert("membership_path".into(), json!(path.display().to_string()));
        written.push(path);
    }
    meta_value.as_object_mut().unwrap().extend(extra);
    let meta_path = sibling(&out, ".meta.json");
    let mut text = serde_json::to_string_pretty(&meta_value).unwrap();
    text.push('\n');
    write_atomic(&meta_path, |f| f.write_all(text.as_bytes()).map_err(io_err(&meta_path)))?;
    written.push(meta_path);
    for p in &written {
        println!("wrote {}", p.display());
    }
    if meta.round_trip_verified == Some(false) {
        eprintln!("warning: planted s not recovered to 1e-9");
    }
    Ok(0)
}

fn bdp_family(name: &str, lambda: f64, mu: f64, drift: f64) -> Result<BdpFamily, CliError> {
    Ok(match name {
        "telescoping" => BdpFamily::Telescoping,
        "symmetric" => BdpFamily::Symmetric,
        "constant" => BdpFamily::Constant { lambda, mu },
        "log_boundary" => BdpFamily::LogBoundary,
        "log_drift" => BdpFamily::LogDrift { alpha: drift },
        other => return Err(CliError::Usage(format!("unknown birth-death family {other:?}"))),
    })
}

fn cmd_bdp(a: BdpArgs, cfg: &Config) -> Result<u8, CliError> {
    let ccfg = classifier_config(cfg, a.margin, None, None, None)?;
    let (rates, source) = match (&a.family, &a.rates) {
        (Some(name), None) => {
            let horizon = cfg.pick(a.horizon, "horizon", Count(100_000))?.0;
            let fam = bdp_family(
                name,
                cfg.pick(a.lambda, "lambda", 2.0)?,
                cfg.pick(a.mu, "mu", 1.0)?,
                cfg.pick(a.drift_alpha, "drift-alpha", 2.0)?,
            )?;
            (BdpRates::builtin(fam, horizon)?, json!({ "family": fam, "horizon": horizon }))
        }
        (None, Some(path)) => {
            let f = File::open(path).map_err(io_err(path))?;
            (BdpRates::from_csv(BufReader::new(f))?, json!({ "rates": path.display().to_string() }))
        }
        _ => return Err(CliError::Usage("give --family or --rates".into())),
    };
    let alpha = cfg.pick(a.alpha, "alpha", 1.0)?;
    let sim = match a.simulate {
        Some(v) => Some((v[0].0, v[1].0)),
        None => match (cfg.get::<Count>("trials")?, cfg.get::<Count>("step-cap")?) {
            (Some(t), Some(c)) => Some((t.0, c.0)),
            _ => None,
        },
    };
    let sim_cfg = sim
        .map(|(trials, step_cap)| -> Result<SimulationConfig, CliError> {
            Ok(SimulationConfig {
                trials,
                step_cap,
                seed: cfg.pick(a.seed, "seed", 0)?,
                escape_level: cfg.pick(a.escape_level, "escape-level", 1000)?,
            })
        })
        .transpose()?;
    let v = classify_bdp_with(&rates, &ccfg, alpha, sim_cfg.as_ref())?;
    let out = cfg.pick(a.out, "out", PathBuf::from("bdp_report.json"))?;
    let traces = match cfg.pick_opt(a.traces, "traces")? {
        Some(t) => t,
        None => sibling(&out, ".traces.csv"),
    };
    let mut report = Report::from_bdp(&v, Some(traces.display().to_string()));
    report.source = Some(source);
    report.generated_unix = timestamp(a.no_timestamp || cfg.pick(None, "no-timestamp", false)?);
    write_report(&report, &out, Some((&traces, &v.series)))?;
    println!("{}", summary_line(&report));
    if let Some(s) = &v.simulation {
        println!(
            "return probability {:.6} [{:.6}, {:.6}] over {} trials{}",
            s.return_prob,
            s.ci_low,
            s.ci_high,
            s.trials,
            if s.dispositive { "" } else { " (non-dispositive)" }
        );
        for w in &s.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(match v.decision {
        ChainDecision::Inconclusive => 2,
        _ => 0,
    })
}

fn cmd_report(a: ReportArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&a.input).map_err(io_err(&a.input))?;
    let r = Report::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.input.display())))?;
    if a.json {
        print!("{}", r.to_json());
    } else {
        println!("{}", summary_line(&r));
        println!("horizon {}  margins {} / {}", r.horizon, r.margins.decision, r.margins.safety);
        if let Some(p) = &r.traces_path {
            println!("traces {p}");
        }
        for w in &r.warnings {
            println!("warning: {w}");
        }
    }
    let d = match &r.bdp {
        Some(b) if b.decision == ChainDecision::Inconclusive => Decision::Inconclusive,
        Some(_) => Decision::Converges,
        None => r.decision,
    };
    Ok(exit_for(d))
}
