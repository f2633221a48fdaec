//! Command-line front end. Results go to stdout as JSON objects carrying a
//! `schema_version`; grids are written as CSV. Failures produce a JSON error
//! record on stderr and a nonzero exit status.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{evolve_ensemble, evolve_mode, EvolutionSchedule, RationalPhase};
use crate::error::{Error, Result};
use crate::fock::{recommended_dim, ModeState};
use crate::protocols::{self, CollapseModel, Setup, Source};
use crate::quadrature::{dist_joint, dist_p, dist_x, GridSpec};

pub const SCHEMA_VERSION: u32 = 1;

const MANIFEST_FILE: &str = "sweep.manifest";
const ROWS_FILE: &str = "sweep.jsonl";

#[derive(Debug, Parser)]
#[command(name = "catbell", version, about = "Macroscopic-realism tests on cat and cat-Bell states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Defaults to alpha.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    /// Truncation per mode; sized automatically from the amplitudes if absent.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Seed for shot sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace exact correlations by estimates from this many shots.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Coherent,
    Cat,
    Bell,
    Mixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepProtocol {
    Epr,
    Lg,
    Lgbell,
    Bell4,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Variance of P for the cat state against the 1/2 bound.
    Epr {
        #[command(flatten)]
        common: Common,
    },
    /// Three-time Leggett-Garg test on one mode.
    Lg {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CollapseModel::Branch)]
        collapse_model: CollapseModel,
    },
    /// Bipartite Leggett-Garg-Bell test.
    Lgbell {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Source::Bell)]
        source: Source,
    },
    /// Four-term macroscopic Bell test.
    Bell4 {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Source::Bell)]
        source: Source,
        /// Common offset added to all four times, e.g. "1/4 pi".
        #[arg(long, default_value = "0")]
        shift: String,
    },
    /// Joint quadrature grids along the two snapshot sequences.
    Figures {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Source::Bell)]
        source: Source,
    },
    /// Immediate versus delayed collapse of the sign measurement at B.
    Delayed {
        #[command(flatten)]
        common: Common,
        /// t1, t2, or an explicit "p/q pi".
        #[arg(long, default_value = "t2")]
        measure_time: String,
        /// Time from the measurement to the collapse; defaults to pi/4 after t3.
        #[arg(long)]
        delay: Option<String>,
    },
    /// Quadrature distribution of a single state.
    Dist {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = StateKind::Cat)]
        state: StateKind,
        /// Single-mode states only.
        #[arg(long, value_enum, default_value_t = Quadrature::X)]
        quadrature: Quadrature,
        /// Evolution time at A (or of the single mode).
        #[arg(long, default_value = "0")]
        time_a: String,
        #[arg(long, default_value = "0")]
        time_b: String,
    },
    /// Cartesian parameter sweep, resumable from its output directory.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SweepProtocol::Lg)]
        protocol: SweepProtocol,
        /// Comma list or start:stop:step (inclusive).
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        /// Defaults to beta = alpha at every point.
        #[arg(long)]
        betas: Option<String>,
        #[arg(long)]
        dims: Option<String>,
        #[arg(long, value_enum, default_value_t = Source::Bell)]
        source: Source,
        #[arg(long, value_enum, default_value_t = CollapseModel::Branch)]
        collapse_model: CollapseModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum Protocol {
    Epr,
    Lg { collapse_model: CollapseModel },
    Lgbell { source: Source },
    Bell4 { source: Source, shift: RationalPhase },
    Figures { source: Source },
    Delayed { measure_time: RationalPhase, delay: Option<RationalPhase> },
    Dist { state: StateKind, quadrature: Quadrature, tau_a: RationalPhase, tau_b: RationalPhase },
    Sweep(SweepSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub target: SweepProtocol,
    pub alphas: Vec<f64>,
    pub betas: Option<Vec<f64>>,
    pub dims: Option<Vec<usize>>,
    pub source: Source,
    pub collapse_model: CollapseModel,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub alpha: f64,
    pub beta: f64,
    pub dim: Option<usize>,
    pub grid: Option<GridSpec>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub out: Option<PathBuf>,
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::InvalidInput(format!("bad {what} value {t:?}"))))
        .collect()
}

/// `a,b,c` or inclusive `start:stop:step`; empty input gives an empty list.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if !s.contains(':') {
        return parse_list(s, "range");
    }
    let parts: Vec<f64> = parse_list(&s.replace(':', ","), "range")?;
    let [start, stop, step] = parts[..] else {
        return Err(Error::InvalidInput(format!("range {s:?} must be start:stop:step")));
    };
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("range step must be positive, got {step}")));
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = start + k as f64 * step;
        if v > stop + 1e-9 * step {
            break;
        }
        out.push(v);
        k += 1;
    }
    Ok(out)
}

fn grid_from(common: &Common) -> Result<Option<GridSpec>> {
    if common.grid_min.is_none() && common.grid_max.is_none() && common.grid_points.is_none() {
        return Ok(None);
    }
    let d = GridSpec::default_for(common.alpha.max(common.beta.unwrap_or(common.alpha)));
    GridSpec::new(
        common.grid_min.unwrap_or(d.x_min),
        common.grid_max.unwrap_or(d.x_max),
        common.grid_points.unwrap_or(d.points),
    )
    .map(Some)
}

impl RunConfig {
    pub fn from_command(command: &Command) -> Result<Self> {
        let (common, protocol) = match command {
            Command::Epr { common } => (common, Protocol::Epr),
            Command::Lg { common, collapse_model } => (common, Protocol::Lg { collapse_model: *collapse_model }),
            Command::Lgbell { common, source } => (common, Protocol::Lgbell { source: *source }),
            Command::Bell4 { common, source, shift } => {
                (common, Protocol::Bell4 { source: *source, shift: protocols::parse_time(shift)? })
            }
            Command::Figures { common, source } => (common, Protocol::Figures { source: *source }),
            Command::Delayed { common, measure_time, delay } => (
                common,
                Protocol::Delayed {
                    measure_time: protocols::parse_time(measure_time)?,
                    delay: delay.as_deref().map(protocols::parse_time).transpose()?,
                },
            ),
            Command::Dist { common, state, quadrature, time_a, time_b } => (
                common,
                Protocol::Dist {
                    state: *state,
                    quadrature: *quadrature,
                    tau_a: protocols::parse_time(time_a)?,
                    tau_b: protocols::parse_time(time_b)?,
                },
            ),
            Command::Sweep { common, protocol, alphas, betas, dims, source, collapse_model } => (
                common,
                Protocol::Sweep(SweepSpec {
                    target: *protocol,
                    alphas: parse_range(alphas)?,
                    betas: betas.as_deref().map(parse_range).transpose()?,
                    dims: dims.as_deref().map(|d| parse_list(d, "dim")).transpose()?,
                    source: *source,
                    collapse_model: *collapse_model,
                }),
            ),
        };
        let config = RunConfig {
            protocol,
            alpha: common.alpha,
            beta: common.beta.unwrap_or(common.alpha),
            dim: common.dim,
            grid: grid_from(common)?,
            seed: common.seed,
            shots: common.shots,
            out: common.out.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        Setup::new(self.alpha, self.beta, self.dim)?;
        if self.protocol == Protocol::Epr && !(self.alpha > 0.0) {
            return Err(Error::InvalidInput("epr needs alpha > 0".into()));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidInput("shots must be positive".into()));
        }
        if let Protocol::Sweep(spec) = &self.protocol {
            if self.out.is_none() {
                return Err(Error::InvalidInput("sweep needs --out".into()));
            }
            let all = spec.alphas.iter().chain(spec.betas.iter().flatten());
            if let Some(v) = all.into_iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::InvalidInput(format!("sweep amplitude {v} must be finite and nonnegative")));
            }
            if spec.dims.iter().flatten().any(|&d| d == 0) {
                return Err(Error::InvalidInput("sweep dims must be positive".into()));
            }
        }
        Ok(())
    }

    fn setup(&self) -> Result<Setup> {
        Setup::new(self.alpha, self.beta, self.dim)
    }

    fn grids(&self, setup: &Setup) -> (GridSpec, GridSpec) {
        match self.grid {
            Some(g) => (g, g),
            None => setup.default_grid(),
        }
    }

    fn sample(&self, r: protocols::ProtocolResult) -> protocols::ProtocolResult {
        match self.shots {
            Some(shots) => r.sampled(shots, self.seed.unwrap_or(0)),
            None => r,
        }
    }
}

/// What a run leaves behind besides the files it wrote.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Json(Value),
    Csv(String),
}

fn record(command: &str, body: impl Serialize) -> Result<Value> {
    let mut v = serde_json::to_value(body)?;
    let map = v.as_object_mut().ok_or_else(|| Error::InvalidInput("result is not an object".into()))?;
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("command".into(), json!(command));
    Ok(v)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn command_name(p: &Protocol) -> &'static str {
    match p {
        Protocol::Epr => "epr",
        Protocol::Lg { .. } => "lg",
        Protocol::Lgbell { .. } => "lgbell",
        Protocol::Bell4 { .. } => "bell4",
        Protocol::Figures { .. } => "figures",
        Protocol::Delayed { .. } => "delayed",
        Protocol::Dist { .. } => "dist",
        Protocol::Sweep(_) => "sweep",
    }
}

/// Executes one validated configuration.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
    }
    let name = command_name(&config.protocol);
    let value = match &config.protocol {
        Protocol::Epr => record(name, protocols::epr_paradox(config.alpha, config.dim)?)?,
        Protocol::Lg { collapse_model } => {
            record(name, config.sample(protocols::lg_three_time(config.alpha, config.dim, *collapse_model)?))?
        }
        Protocol::Lgbell { source } => {
            record(name, config.sample(protocols::lg_bell_three(&config.setup()?, *source)?))?
        }
        Protocol::Bell4 { source, shift } => {
            record(name, config.sample(protocols::bell_four_shifted(&config.setup()?, *source, *shift)?))?
        }
        Protocol::Figures { source } => run_figures(config, *source)?,
        Protocol::Delayed { measure_time, delay } => {
            let setup = config.setup()?;
            let (ga, gb) = match config.grid {
                Some(g) => (g, g),
                None => setup.collapse_grid(),
            };
            let delay = match delay {
                Some(d) => *d,
                None => protocols::default_delay(*measure_time)?,
            };
            record(name, protocols::delayed_collapse_check(&setup, *measure_time, delay, &ga, &gb)?)?
        }
        Protocol::Dist { .. } => return run_dist(config),
        Protocol::Sweep(spec) => run_sweep(config, spec)?,
    };
    if let Some(dir) = &config.out {
        write_json(&dir.join(format!("{name}.json")), &value)?;
    }
    Ok(RunOutput::Json(value))
}

fn run_figures(config: &RunConfig, source: Source) -> Result<Value> {
    let setup = config.setup()?;
    let (ga, gb) = config.grids(&setup);
    let set = protocols::figure_sequences(&setup, source, &ga, &gb)?;
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    for sequence in [protocols::Sequence::Top, protocols::Sequence::Lower] {
        for (k, snap) in set.sequence(sequence).enumerate() {
            let file = format!("figures_{source}_{sequence}_{k}.csv");
            snap.grid.save_csv(&dir.join(&file))?;
            files.push(json!({
                "sequence": sequence,
                "schedule": snap.schedule,
                "file": file,
                "integral": snap.grid.integral(),
            }));
        }
    }
    record(
        "figures",
        json!({
            "source": source,
            "alpha": setup.alpha,
            "beta": setup.beta,
            "dims": [setup.dim_a, setup.dim_b],
            "grid_a": ga,
            "grid_b": gb,
            "snapshots": files,
        }),
    )
}

fn run_dist(config: &RunConfig) -> Result<RunOutput> {
    let Protocol::Dist { state, quadrature, tau_a, tau_b } = &config.protocol else {
        unreachable!("dist configuration");
    };
    let mut buf = Vec::new();
    let file = match state {
        StateKind::Coherent | StateKind::Cat => {
            let dim = config.dim.unwrap_or_else(|| recommended_dim(config.alpha));
            let psi = match state {
                StateKind::Coherent => ModeState::coherent(Complex64::new(config.alpha, 0.0), dim)?,
                _ => ModeState::cat_state(config.alpha, dim)?,
            };
            let psi = evolve_mode(&psi, *tau_a);
            let grid = config.grid.unwrap_or_else(|| GridSpec::default_for(config.alpha));
            let d = match quadrature {
                Quadrature::X => dist_x(&psi, &grid)?,
                Quadrature::P => dist_p(&psi, &grid)?,
            };
            d.write_csv(&mut buf)?;
            format!("dist_{}_{}.csv", state_name(*state), quadrature_name(*quadrature))
        }
        StateKind::Bell | StateKind::Mixture => {
            let setup = config.setup()?;
            let source = if *state == StateKind::Bell { Source::Bell } else { Source::Mixture };
            let ensemble =
                evolve_ensemble(&protocols::prepare(&setup, source)?, EvolutionSchedule::new(*tau_a, *tau_b));
            let (ga, gb) = config.grids(&setup);
            dist_joint(&ensemble, &ga, &gb)?.write_csv(&mut buf)?;
            format!("dist_{}_joint.csv", state_name(*state))
        }
    };
    let text = String::from_utf8(buf).expect("csv is ascii");
    match &config.out {
        Some(dir) => {
            let path = dir.join(&file);
            fs::write(&path, &text)?;
            Ok(RunOutput::Json(record("dist", json!({ "file": file, "state": state, "quadrature": quadrature }))?))
        }
        None => Ok(RunOutput::Csv(text)),
    }
}

fn state_name(s: StateKind) -> &'static str {
    match s {
        StateKind::Coherent => "coherent",
        StateKind::Cat => "cat",
        StateKind::Bell => "bell",
        StateKind::Mixture => "mixture",
    }
}

fn quadrature_name(q: Quadrature) -> &'static str {
    match q {
        Quadrature::X => "x",
        Quadrature::P => "p",
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub alpha: f64,
    pub beta: f64,
    pub dim: Option<usize>,
}

pub fn sweep_points(spec: &SweepSpec) -> Vec<SweepPoint> {
    let dims: Vec<Option<usize>> = match &spec.dims {
        Some(d) => d.iter().map(|&x| Some(x)).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &alpha in &spec.alphas {
        let betas = match &spec.betas {
            Some(b) => b.clone(),
            None => vec![alpha],
        };
        for &beta in &betas {
            for &dim in &dims {
                out.push(SweepPoint { index: out.len(), alpha, beta, dim });
            }
        }
    }
    out
}

fn sweep_row(spec: &SweepSpec, point: &SweepPoint, config: &RunConfig) -> Value {
    let result: Result<Value> = (|| {
        let setup = Setup::new(point.alpha, point.beta, point.dim)?;
        let (summary, full) = match spec.target {
            SweepProtocol::Epr => {
                let r = protocols::epr_paradox(point.alpha, point.dim)?;
                (json!({ "value": r.variance_p, "violated": r.paradox }), serde_json::to_value(r)?)
            }
            SweepProtocol::Lg => {
                let r = config.sample(protocols::lg_three_time(point.alpha, point.dim, spec.collapse_model)?);
                (json!({ "value": r.lhs, "violated": r.violated }), serde_json::to_value(r)?)
            }
            SweepProtocol::Lgbell => {
                let r = config.sample(protocols::lg_bell_three(&setup, spec.source)?);
                (json!({ "value": r.lhs, "violated": r.violated }), serde_json::to_value(r)?)
            }
            SweepProtocol::Bell4 => {
                let r = config.sample(protocols::bell_four(&setup, spec.source)?);
                (json!({ "value": r.lhs, "violated": r.violated }), serde_json::to_value(r)?)
            }
        };
        Ok(json!({ "summary": summary, "result": full }))
    })();
    let mut row = json!({ "index": point.index, "alpha": point.alpha, "beta": point.beta, "dim": point.dim });
    let map = row.as_object_mut().expect("object");
    match result {
        Ok(v) => {
            map.insert("status".into(), json!("ok"));
            map.insert("value".into(), v["summary"]["value"].clone());
            map.insert("violated".into(), v["summary"]["violated"].clone());
            map.insert("result".into(), v["result"].clone());
        }
        Err(e) => {
            log::warn!("sweep point {} failed: {e}", point.index);
            map.insert("status".into(), json!("failed"));
            map.insert("error".into(), json!({ "kind": e.kind(), "message": e.to_string() }));
        }
    }
    row
}

/// Fingerprint line heading the manifest; a resumed sweep must match it.
fn sweep_fingerprint(config: &RunConfig) -> Result<String> {
    let mut c = config.clone();
    c.out = None;
    Ok(serde_json::to_string(&c)?)
}

fn read_manifest(dir: &Path, fingerprint: &str) -> Result<Vec<usize>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        let mut f = File::create(&path)?;
        writeln!(f, "{fingerprint}")?;
        f.sync_all()?;
        File::create(dir.join(ROWS_FILE))?;
        return Ok(Vec::new());
    }
    let mut lines = BufReader::new(File::open(&path)?).lines();
    let head = lines.next().transpose()?.unwrap_or_default();
    if head != fingerprint {
        return Err(Error::InvalidInput(format!("{} belongs to a different sweep configuration", dir.display())));
    }
    let mut done = Vec::new();
    for line in lines {
        let line = line?;
        // a torn final line from an interrupted write is ignored
        if let Ok(i) = line.trim().parse() {
            done.push(i);
        }
    }
    Ok(done)
}

fn read_rows(dir: &Path, done: &[usize]) -> Result<Vec<Value>> {
    let mut rows = Vec::new();
    let path = dir.join(ROWS_FILE);
    if !path.exists() {
        return Ok(rows);
    }
    for line in BufReader::new(File::open(path)?).lines() {
        let Ok(v) = serde_json::from_str::<Value>(&line?) else { continue };
        if v["index"].as_u64().is_some_and(|i| done.contains(&(i as usize))) {
            rows.push(v);
        }
    }
    Ok(rows)
}

fn run_sweep(config: &RunConfig, spec: &SweepSpec) -> Result<Value> {
    let dir = config.out.as_ref().expect("validated");
    let fingerprint = sweep_fingerprint(config)?;
    let done = read_manifest(dir, &fingerprint)?;
    let points = sweep_points(spec);
    let pending: Vec<SweepPoint> = points.iter().filter(|p| !done.contains(&p.index)).copied().collect();
    log::info!("sweep: {} points, {} already complete", points.len(), points.len() - pending.len());

    let mut rows_out = OpenOptions::new().append(true).create(true).open(dir.join(ROWS_FILE))?;
    let mut manifest = OpenOptions::new().append(true).open(dir.join(MANIFEST_FILE))?;
    let chunk = rayon::current_num_threads().max(1);
    for batch in pending.chunks(chunk) {
        let rows: Vec<Value> = batch.par_iter().map(|p| sweep_row(spec, p, config)).collect();
        for row in rows {
            writeln!(rows_out, "{}", serde_json::to_string(&row)?)?;
            rows_out.sync_data()?;
            writeln!(manifest, "{}", row["index"])?;
            manifest.sync_data()?;
        }
    }

    let all: Vec<usize> = points.iter().map(|p| p.index).collect();
    let mut rows = read_rows(dir, &all)?;
    rows.sort_by_key(|r| r["index"].as_u64());
    rows.dedup_by_key(|r| r["index"].as_u64());
    write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    record(
        "sweep",
        json!({
            "protocol": spec.target,
            "points": points.len(),
            "failed": rows.iter().filter(|r| r["status"] == "failed").count(),
            "rows": rows,
        }),
    )
}

fn write_sweep_csv(path: &Path, rows: &[Value]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "index,alpha,beta,dim,status,value,violated")?;
    for r in rows {
        let field = |k: &str| match &r[k] {
            Value::Null => String::new(),
            v => v.to_string().trim_matches('"').to_string(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            field("index"),
            field("alpha"),
            field("beta"),
            field("dim"),
            field("status"),
            field("value"),
            field("violated")
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn error_record(kind: &str, message: &str) -> Value {
    json!({ "schema_version": SCHEMA_VERSION, "error": { "kind": kind, "message": message } })
}

/// Parses arguments, runs, and prints; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprintln!("{}", error_record("usage", e.to_string().trim()));
            return 2;
        }
    };
    let outcome = RunConfig::from_command(&cli.command).and_then(|c| run(&c));
    let text = match outcome {
        Ok(RunOutput::Json(v)) => Ok(serde_json::to_string_pretty(&v).expect("serializable") + "\n"),
        Ok(RunOutput::Csv(text)) => Ok(text),
        Err(e) => Err(e),
    };
    match text {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Ok(()) => 0,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
                Err(e) => {
                    eprintln!("{}", error_record("io", &e.to_string()));
                    1
                }
            }
        }
        Err(e) => {
            eprintln!("{}", error_record(e.kind(), &e.to_string()));
            1
        }
    }
}
