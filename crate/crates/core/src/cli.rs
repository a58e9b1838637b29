//! Command-line front end.
//!
//! Every subcommand prints one JSON summary on stdout and writes its data
//! files atomically. Exit status: 0 success, 1 failed check or I/O error,
//! 2 usage error, 3 budget or cap exhaustion.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::affine::{cycle_fixed_point, HalfOpenInterval};
use crate::analysis::{
    bifurcation_histogram, cycle, seed_grid, with_threads, write_bifurcation, Classifier, EntryRule, Histogram,
    OrbitMax,
};
use crate::error::ProverError;
use crate::map::{orbit, BoundaryRule, MapParams, NumericMode, OrbitValues};
use crate::piecewise::{lemma5_check, lemma5_table};
use crate::prover::{prove_interval, resume, ProverConfig, ProverResult, DEFAULT_EXTENSION_CAP, DEFAULT_ORBIT_CAP};
use crate::rational::Rational;
use crate::table::{emit_table, write_atomic, Table, TableFormat};
use crate::theorem::{contraction_report, fixed_point_check, theorem_pipeline, trace_check};
use crate::variant::{
    cycle_census, fractional_census, fractional_variant_orbit, FractionalVerdict, IntegerVariantParams, OddConvention,
};

#[derive(Debug, Parser)]
#[command(name = "fracdelta", version, about = "Exact verification toolkit for the fractional 3n+1 map")]
pub struct Cli {
    /// Worker threads for parallel sweeps; output bytes never depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run the command stored in this JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write the effective configuration to this JSON file.
    #[arg(long, global = true)]
    pub save_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

/// A complete, replayable invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandConfig {
    #[serde(default)]
    pub threads: Option<usize>,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Print an orbit.
    Iterate(IterateArgs),
    /// Check one lemma: 1 fixed point, 2 trace, 3 contraction, 4 first extension run, 5 range of the max.
    Verify(VerifyArgs),
    /// Run the interval-extension prover.
    Prove(ProveArgs),
    /// Exact range of max(delta^0..delta^6) on [1/2, 3/2].
    Lemma5(Lemma5Args),
    /// Run every stage certifying [0, upper].
    Theorem(TheoremArgs),
    /// Stopping-time sweep over a seed grid.
    StoppingTimes(StoppingTimesArgs),
    /// Orbit maxima.
    MaxValue(MaxValueArgs),
    /// Relative-phase matrix.
    PhaseGrid(PhaseGridArgs),
    /// Bifurcation-diagram data.
    Bifurcation(BifurcationArgs),
    /// Integer x/2 + c variant cycle census.
    Census(CensusArgs),
    /// Fractional x/2 + c variant orbit or sweep.
    VariantOrbit(VariantOrbitArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Iterate(_) => "iterate",
            Command::Verify(_) => "verify",
            Command::Prove(_) => "prove",
            Command::Lemma5(_) => "lemma5",
            Command::Theorem(_) => "theorem",
            Command::StoppingTimes(_) => "stopping-times",
            Command::MaxValue(_) => "max-value",
            Command::PhaseGrid(_) => "phase-grid",
            Command::Bifurcation(_) => "bifurcation",
            Command::Census(_) => "census",
            Command::VariantOrbit(_) => "variant-orbit",
        }
    }
}

/// Parses an argument struct from no flags at all, so serde defaults always
/// agree with the documented command-line defaults.
fn clap_default<T: Args + clap::FromArgMatches>() -> T {
    let cmd = T::augment_args(clap::Command::new("default").no_binary_name(true));
    T::from_arg_matches(&cmd.get_matches_from(Vec::<String>::new())).expect("every flag has a default")
}

macro_rules! clap_defaults {
    ($($t:ty),*) => {$(
        impl Default for $t {
            fn default() -> Self {
                clap_default()
            }
        }
    )*};
}

clap_defaults!(
    IterateArgs,
    VerifyArgs,
    ProveArgs,
    Lemma5Args,
    TheoremArgs,
    StoppingTimesArgs,
    MaxValueArgs,
    PhaseGridArgs,
    BifurcationArgs,
    CensusArgs,
    VariantOrbitArgs
);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct IterateArgs {
    #[arg(long, default_value = "27")]
    pub seed: Rational,
    #[arg(long, default_value_t = 29)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mode: NumericMode,
    /// Which branch takes a value exactly on the threshold.
    #[arg(long, value_enum, default_value_t)]
    pub boundary_rule: BoundaryRule,
    /// Replace the seed by the nearest binary double first.
    #[arg(long)]
    pub binary_float_seeds: bool,
    /// Data file (`n x`); format from the extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Add `p/q` columns next to exact values.
    #[arg(long)]
    pub exact_columns: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub lemma: u8,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CapArgs {
    #[arg(long, default_value_t = DEFAULT_ORBIT_CAP)]
    pub orbit_cap: usize,
    #[arg(long, default_value_t = DEFAULT_EXTENSION_CAP)]
    pub extension_cap: usize,
}

impl Default for CapArgs {
    fn default() -> Self {
        clap_default()
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ProveArgs {
    #[arg(long, default_value = "3/2")]
    pub a_in: Rational,
    #[arg(long, default_value = "41/27")]
    pub b_in: Rational,
    #[arg(long, default_value = "21")]
    pub b_out: Rational,
    /// Write the `x tof` plateaux table here.
    #[arg(long)]
    pub emit_plateaux: Option<PathBuf>,
    /// Save prover state here after extensions.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub checkpoint_every: usize,
    /// Continue from this checkpoint instead of starting at `--b-in`.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub caps: CapArgs,
    #[arg(long)]
    pub exact_columns: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct Lemma5Args {
    /// Plot data `x y min max`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoremArgs {
    #[arg(long, default_value = "100")]
    pub upper: Rational,
    /// Full JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub caps: CapArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct StoppingTimesArgs {
    #[arg(long, default_value = "1/2")]
    pub lo: Rational,
    #[arg(long, default_value = "100")]
    pub hi: Rational,
    #[arg(long, default_value = "1/100")]
    pub step: Rational,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mode: NumericMode,
    #[arg(long, value_enum, default_value_t)]
    pub boundary_rule: BoundaryRule,
    #[arg(long, value_enum, default_value_t)]
    pub entry_rule: EntryRule,
    #[arg(long)]
    pub binary_float_seeds: bool,
    /// `x tof` table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub exact_columns: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct MaxValueArgs {
    #[arg(long, num_args = 1.., default_values = ["1547/50", "3868/125", "619/20"])]
    pub seed: Vec<Rational>,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mode: NumericMode,
    #[arg(long)]
    pub binary_float_seeds: bool,
    /// Report exact, float and binary-seed results side by side.
    #[arg(long)]
    pub compare_modes: bool,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseGridArgs {
    #[arg(long, default_value = "1/2")]
    pub lo: Rational,
    #[arg(long, default_value = "100")]
    pub hi: Rational,
    #[arg(long, default_value_t = 100)]
    pub resolution: usize,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    /// CSV matrix of residues, `-1` where undefined.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct BifurcationArgs {
    #[arg(long, default_value = "0")]
    pub lo: Rational,
    #[arg(long, default_value = "100")]
    pub hi: Rational,
    #[arg(long, default_value_t = 500)]
    pub seeds: usize,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, value_enum, default_value_t = NumericMode::Float64)]
    pub mode: NumericMode,
    /// `x y` rows.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Value bin width for the frequency summary.
    #[arg(long, default_value_t = 1e-3)]
    pub bin: f64,
    /// Number of most frequent bins reported.
    #[arg(long, default_value_t = 29)]
    pub top: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CensusArgs {
    #[arg(long, default_value_t = 1)]
    pub c: u64,
    #[arg(long, value_enum, default_value_t)]
    pub convention: OddConvention,
    /// Seeds to skip, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Vec<u64>,
    #[arg(long, default_value_t = 3)]
    pub seed_lo: u64,
    #[arg(long, default_value_t = 100_000)]
    pub seed_hi: u64,
    #[arg(long, default_value_t = 100_000)]
    pub budget: usize,
    /// Full JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct VariantOrbitArgs {
    /// A single seed; without it the grid `--lo..--hi` by `--step` is swept.
    #[arg(long)]
    pub seed: Option<Rational>,
    #[arg(long, default_value = "1")]
    pub c: Rational,
    #[arg(long, default_value_t = 10_000)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t)]
    pub mode: NumericMode,
    #[arg(long, default_value = "1/2")]
    pub lo: Rational,
    #[arg(long, default_value = "100")]
    pub hi: Rational,
    #[arg(long, default_value = "1/10")]
    pub step: Rational,
    #[arg(long)]
    pub binary_float_seeds: bool,
    /// Full JSON result.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Why a command did not succeed; each kind has its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String, Value),
    Exhausted(String, Value),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Check(..) | Failure::Io(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Exhausted(..) => 3,
        }
    }

    fn summary(&self) -> Value {
        let (msg, detail) = match self {
            Failure::Usage(m) | Failure::Io(m) => (m, Value::Null),
            Failure::Check(m, d) | Failure::Exhausted(m, d) => (m, d.clone()),
        };
        json!({ "ok": false, "error": msg, "detail": detail })
    }
}

impl From<ProverError> for Failure {
    fn from(e: ProverError) -> Self {
        match e {
            ProverError::InvalidRange { .. } => Failure::Usage(e.to_string()),
            ProverError::Io { .. } | ProverError::Checkpoint { .. } => Failure::Io(e.to_string()),
            ref x if x.is_exhaustion() => Failure::Exhausted(e.to_string(), Value::Null),
            _ => Failure::Check(e.to_string(), Value::Null),
        }
    }
}

impl From<crate::error::IoError> for Failure {
    fn from(e: crate::error::IoError) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Parse `args` (program name first), run, print the summary; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (code, summary) = match resolve(&cli).and_then(|config| {
        if let Some(path) = &cli.save_config {
            save_config(&config, path)?;
        }
        execute(&config).map(|v| (config.command.name(), v))
    }) {
        Ok((name, mut v)) => {
            if let Value::Object(m) = &mut v {
                m.insert("ok".into(), json!(true));
                m.insert("command".into(), json!(name));
            }
            (0, v)
        }
        Err(f) => {
            eprintln!("fracdelta: {}", f.summary()["error"].as_str().unwrap_or("error"));
            (f.exit_code(), f.summary())
        }
    };
    // a closed pipe downstream is not our failure
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    code
}

fn resolve(cli: &Cli) -> Result<CommandConfig, Failure> {
    match (&cli.config, &cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let mut config: CommandConfig = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
            if cli.threads.is_some() {
                config.threads = cli.threads;
            }
            Ok(config)
        }
        (None, Some(cmd)) => Ok(CommandConfig { threads: cli.threads, command: cmd.clone() }),
        (None, None) => Err(Failure::Usage("a subcommand or --config is required".into())),
        (Some(_), Some(_)) => Err(Failure::Usage("--config cannot be combined with a subcommand".into())),
    }
}

pub fn save_config(config: &CommandConfig, path: &Path) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(config).expect("serializable");
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

/// Run one configured command and return its summary.
pub fn execute(config: &CommandConfig) -> Result<Value, Failure> {
    if config.threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let cmd = config.command.clone();
    with_threads(config.threads, move || match &cmd {
        Command::Iterate(a) => iterate(a),
        Command::Verify(a) => verify(a),
        Command::Prove(a) => prove(a),
        Command::Lemma5(a) => lemma5(a),
        Command::Theorem(a) => theorem(a),
        Command::StoppingTimes(a) => stopping_times(a),
        Command::MaxValue(a) => max_value(a),
        Command::PhaseGrid(a) => phase_grid(a),
        Command::Bifurcation(a) => bifurcation(a),
        Command::Census(a) => census(a),
        Command::VariantOrbit(a) => variant_orbit(a),
    })
}

fn seed_of(r: &Rational, binary: bool) -> Result<Rational, Failure> {
    if binary {
        r.nearest_binary().ok_or_else(|| Failure::Usage(format!("--binary-float-seeds: {r} has no finite double")))
    } else {
        Ok(r.clone())
    }
}

fn params_with(rule: BoundaryRule) -> MapParams {
    MapParams { rule, ..MapParams::delta() }
}

fn interval(lo: &Rational, hi: &Rational) -> Result<HalfOpenInterval, Failure> {
    HalfOpenInterval::new(lo.clone(), hi.clone()).map_err(|_| Failure::Usage(format!("--lo {lo} must be below --hi {hi}")))
}

fn emit(table: &Table, path: &Path, exact: bool) -> Result<(), Failure> {
    Ok(emit_table(table, TableFormat::from_path(path), exact, path)?)
}

fn write_json(path: &Path, text: &str) -> Result<(), Failure> {
    let mut text = text.to_string();
    text.push('\n');
    Ok(write_atomic(path, text.as_bytes())?)
}

fn iterate(a: &IterateArgs) -> Result<Value, Failure> {
    let seed = seed_of(&a.seed, a.binary_float_seeds)?;
    let o = orbit(&seed, a.steps, &params_with(a.boundary_rule), a.mode).map_err(|e| Failure::Usage(e.to_string()))?;
    let exact: Vec<Rational> = match &o.values {
        OrbitValues::Exact(v) => v.clone(),
        OrbitValues::Float64(v) => v.iter().map(|x| Rational::from_f64_exact(*x).unwrap_or_default()).collect(),
    };
    if let Some(path) = &a.out {
        let mut t = Table::new(["n", "x"]);
        for (i, x) in exact.iter().enumerate() {
            t.push(vec![crate::table::Cell::Int(i as i64), crate::table::Cell::Rational(x.clone())]);
        }
        emit(&t, path, a.exact_columns)?;
    }
    Ok(json!({
        "seed": seed,
        "steps": a.steps,
        "mode": a.mode,
        "values": exact.iter().map(|x| x.to_significant(4)).collect::<Vec<_>>(),
        "final": exact.last(),
    }))
}

fn verify(a: &VerifyArgs) -> Result<Value, Failure> {
    let check = |ok: bool, v: Value| if ok { Ok(v) } else { Err(Failure::Check(format!("lemma {} failed", a.lemma), v)) };
    match a.lemma {
        1 => {
            let r = fixed_point_check();
            check(r.fixed_point_ok, json!({ "lemma": 1, "fixed_point_ok": r.fixed_point_ok, "seed": r.seed, "image": r.image }))
        }
        2 => {
            let r = trace_check().map_err(|e| Failure::Check(e.to_string(), Value::Null))?;
            let ivs: Vec<[String; 2]> =
                r.trace.intervals.iter().map(|iv| [iv.lo.to_significant(3), iv.hi.to_significant(3)]).collect();
            check(
                r.composed_ok,
                json!({ "lemma": 2, "word": r.trace.word, "h": r.h_count, "l": r.l_count,
                        "composed": r.composed.to_string(), "composed_ok": r.composed_ok, "intervals": ivs }),
            )
        }
        3 => {
            let r = contraction_report().map_err(|e| Failure::Check(e.to_string(), Value::Null))?;
            check(
                r.slope_ok,
                json!({ "lemma": 3, "slope": r.contraction.slope, "attractive": r.contraction.attractive,
                        "fixed_point": r.contraction.fixed_point, "slope_ok": r.slope_ok,
                        "fixed_point_is_x0": r.contraction.fixed_point == cycle_fixed_point() }),
            )
        }
        4 => {
            let r = prove_interval(&Rational::frac_of(3, 2), &Rational::frac_of(41, 27), &Rational::from(21), &ProverConfig::default())?;
            let mut v = prover_summary(&r);
            v["lemma"] = json!(4);
            check(r.reached(), v)
        }
        _ => {
            let r = lemma5_check()?;
            check(
                r.contained,
                json!({ "lemma": 5, "inf": r.range.inf, "inf_at": r.range.inf_at, "sup": r.range.sup,
                        "sup_at": r.range.sup_at, "sup_attained": r.range.sup_attained,
                        "value_at_left": r.value_at_left, "value_at_right": r.value_at_right,
                        "pieces": r.pieces, "contained": r.contained, "strictly_contained": r.strictly_contained }),
            )
        }
    }
}

fn prover_summary(r: &ProverResult) -> Value {
    json!({
        "a_in": r.state.a_in,
        "target": r.target,
        "extensions": r.state.extensions,
        "final_bound": r.final_bound(),
        "final_bound_decimal": r.final_bound().to_decimal(4),
        "last_start": r.last_start(),
        "last_start_decimal": r.last_start().to_decimal(4),
        "reached": r.reached(),
        "outcome": r.outcome,
    })
}

fn prove(a: &ProveArgs) -> Result<Value, Failure> {
    if a.checkpoint_every == 0 {
        return Err(Failure::Usage("--checkpoint-every must be at least 1".into()));
    }
    let config = ProverConfig {
        params: MapParams::delta(),
        orbit_cap: a.caps.orbit_cap,
        extension_cap: a.caps.extension_cap,
        checkpoint: a.checkpoint.clone(),
        checkpoint_every: a.checkpoint_every,
    };
    let r = match &a.resume {
        Some(path) => resume(path, &a.b_out, &config)?,
        None => prove_interval(&a.a_in, &a.b_in, &a.b_out, &config)?,
    };
    if let Some(path) = &a.emit_plateaux {
        emit(&r.plateaux_table(), path, a.exact_columns)?;
    }
    let v = prover_summary(&r);
    if r.reached() {
        Ok(v)
    } else {
        Err(Failure::Exhausted("prover budget exhausted".into(), v))
    }
}

fn lemma5(a: &Lemma5Args) -> Result<Value, Failure> {
    let v = verify(&VerifyArgs { lemma: 5 })?;
    if let Some(path) = &a.out {
        emit(&lemma5_table(a.samples.max(2)), path, false)?;
    }
    Ok(v)
}

fn theorem(a: &TheoremArgs) -> Result<Value, Failure> {
    if a.upper < 20 {
        return Err(Failure::Usage(format!("--upper {} must be at least 20", a.upper)));
    }
    let config = ProverConfig { orbit_cap: a.caps.orbit_cap, extension_cap: a.caps.extension_cap, ..ProverConfig::default() };
    let r = theorem_pipeline(&a.upper, &config);
    if let Some(path) = &a.out {
        write_json(path, &r.to_json())?;
    }
    let v = json!({
        "upper": r.upper,
        "passed": r.passed,
        "stages": r.stages.iter().map(|s| json!({ "name": s.name, "passed": s.passed })).collect::<Vec<_>>(),
        "certified": r.certified,
        "extensions": r.plateaux.iter().map(|p| p.len().saturating_sub(1)).collect::<Vec<_>>(),
        "failure": r.failure,
    });
    match (r.passed, r.exhausted) {
        (true, _) => Ok(v),
        (false, true) => Err(Failure::Exhausted("theorem pipeline ran out of budget".into(), v)),
        (false, false) => Err(Failure::Check("theorem pipeline failed".into(), v)),
    }
}

fn histogram_summary(h: &Histogram) -> Value {
    let mode = h.mode_bin().map(|i| h.bin_range(i));
    json!({
        "lo": h.lo,
        "width": h.width,
        "counts": h.counts,
        "mode_range": mode,
        "secondary_prominence": h.secondary_prominence(),
        "unimodal": h.is_unimodal(0.05),
    })
}

fn stopping_times(a: &StoppingTimesArgs) -> Result<Value, Failure> {
    if a.lo > a.hi {
        return Err(Failure::Usage(format!("--lo {} exceeds --hi {}", a.lo, a.hi)));
    }
    if !a.step.is_positive() {
        return Err(Failure::Usage(format!("--step {} must be positive", a.step)));
    }
    if a.budget < 29 {
        return Err(Failure::Usage("--budget must be at least 29".into()));
    }
    let classifier = Classifier::new(params_with(a.boundary_rule), a.mode, a.entry_rule);
    let mut grid = classifier.stopping_time_grid(&a.lo, &a.hi, &a.step, a.budget);
    if a.binary_float_seeds {
        let seeds: Result<Vec<Rational>, Failure> = grid.seeds.iter().map(|s| seed_of(s, true)).collect();
        let seeds = seeds?;
        use rayon::prelude::*;
        grid.verdicts = seeds.par_iter().map(|s| classifier.classify(s, a.budget)).collect();
    }
    if let Some(path) = &a.out {
        emit(&grid.table(), path, a.exact_columns)?;
    }
    let counts = grid.counts();
    let st = grid.stopping_times();
    let v = json!({
        "seeds": grid.seeds.len(),
        "counts": counts,
        "fraction_below_160": grid.fraction_below(160),
        "max_stopping_time": st.iter().max(),
        "histogram": histogram_summary(&Histogram::sturges(&st)),
    });
    if counts.undetermined > 0 {
        Err(Failure::Exhausted(format!("{} seeds undetermined within budget", counts.undetermined), v))
    } else {
        Ok(v)
    }
}

fn max_entry(m: &OrbitMax) -> Value {
    json!({
        "max": m.value,
        "max_decimal": m.value.to_decimal(4),
        "integer_part": m.value.floor_int().to_string(),
        "index": m.index,
        "verdict": m.verdict,
    })
}

fn max_value(a: &MaxValueArgs) -> Result<Value, Failure> {
    if a.seed.is_empty() {
        return Err(Failure::Usage("--seed needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for s in &a.seed {
        if a.compare_modes {
            let exact = Classifier::default().orbit_max(s, a.budget);
            let float = Classifier { mode: NumericMode::Float64, ..Classifier::default() }.orbit_max(s, a.budget);
            let binary = Classifier::default().orbit_max(&seed_of(s, true)?, a.budget);
            let parts = [&exact, &float, &binary].map(|m| m.value.floor_int());
            rows.push(json!({
                "seed": s,
                "exact": max_entry(&exact),
                "float64": max_entry(&float),
                "binary_seed_exact": max_entry(&binary),
                "discrepancy": !(parts[0] == parts[1] && parts[1] == parts[2]),
            }));
        } else {
            let seed = seed_of(s, a.binary_float_seeds)?;
            let m = Classifier { mode: a.mode, ..Classifier::default() }.orbit_max(&seed, a.budget);
            let mut e = max_entry(&m);
            e["seed"] = json!(seed);
            rows.push(e);
        }
    }
    Ok(json!({ "mode": a.mode, "budget": a.budget, "results": rows }))
}

fn phase_grid(a: &PhaseGridArgs) -> Result<Value, Failure> {
    if a.resolution < 2 {
        return Err(Failure::Usage("--resolution must be at least 2".into()));
    }
    let iv = interval(&a.lo, &a.hi)?;
    let g = Classifier::default().phase_grid(&iv, a.resolution, a.budget);
    if let Some(path) = &a.out {
        write_atomic(path, g.to_csv().as_bytes())?;
    }
    let cells = a.resolution * a.resolution;
    Ok(json!({
        "resolution": a.resolution,
        "undefined_seeds": g.phases.iter().filter(|p| p.is_none()).count(),
        "antisymmetric": g.is_antisymmetric(),
        "largest_constant_block": g.largest_constant_block(),
        "largest_constant_block_fraction": g.largest_constant_block() as f64 / cells as f64,
        "adjacent_jumps": g.jump_count(),
    }))
}

fn bifurcation(a: &BifurcationArgs) -> Result<Value, Failure> {
    if a.iters == 0 || a.seeds == 0 {
        return Err(Failure::Usage("--seeds and --iters must be positive".into()));
    }
    if a.bin.is_nan() || a.bin <= 0.0 {
        return Err(Failure::Usage("--bin must be positive".into()));
    }
    let iv = interval(&a.lo, &a.hi)?;
    let rows = match &a.out {
        Some(path) => write_bifurcation(path, &iv, a.seeds, a.iters, a.mode)?,
        None => a.seeds * a.iters,
    };
    let h = bifurcation_histogram(&iv, a.seeds, a.iters, a.mode, a.bin);
    let points: Vec<f64> = cycle().points.iter().map(Rational::to_f64).collect();
    let top: Vec<Value> = h
        .top(a.top)
        .into_iter()
        .map(|(center, count)| {
            let d = points.iter().map(|p| (p - center).abs()).fold(f64::INFINITY, f64::min);
            json!({ "center": center, "count": count, "distance_to_cycle": d })
        })
        .collect();
    Ok(json!({ "rows": rows, "seeds": a.seeds, "iters": a.iters, "top_bins": top }))
}

fn census(a: &CensusArgs) -> Result<Value, Failure> {
    if a.seed_lo > a.seed_hi || a.seed_lo == 0 {
        return Err(Failure::Usage(format!("--seed-lo {} / --seed-hi {}: need 1 <= lo <= hi", a.seed_lo, a.seed_hi)));
    }
    if a.c == 0 {
        return Err(Failure::Usage("--c must be positive".into()));
    }
    let p = IntegerVariantParams { convention: a.convention, ..IntegerVariantParams::new(a.c) }.excluding(a.exclude.iter().copied());
    let r = cycle_census(&p, a.seed_lo, a.seed_hi, a.budget);
    if let Some(path) = &a.out {
        write_json(path, &r.to_json())?;
    }
    let v = json!({
        "c": a.c,
        "seeds_considered": r.seeds_considered,
        "cycle_count": r.cycles.len(),
        "cycles": r.cycles.iter().map(|c| json!({
            "min": c.min.to_string(), "length": c.length, "basin_count": c.basin_count, "basin_fraction": c.basin_fraction,
        })).collect::<Vec<_>>(),
        "exceptions": r.exceptions.len(),
    });
    if r.exceptions.is_empty() {
        Ok(v)
    } else {
        Err(Failure::Exhausted(format!("{} seeds exceeded the budget", r.exceptions.len()), v))
    }
}

fn variant_orbit(a: &VariantOrbitArgs) -> Result<Value, Failure> {
    if let Some(seed) = &a.seed {
        let seed = seed_of(seed, a.binary_float_seeds)?;
        let v = fractional_variant_orbit(&seed, &a.c, a.budget, a.mode);
        let text = serde_json::to_string_pretty(&v).expect("serializable");
        if let Some(path) = &a.out {
            write_json(path, &text)?;
        }
        let summary = json!({ "seed": seed, "c": a.c, "result": v });
        return match v {
            FractionalVerdict::Undetermined { .. } => Err(Failure::Exhausted("no cycle within budget".into(), summary)),
            _ => Ok(summary),
        };
    }
    if a.lo > a.hi || !a.step.is_positive() {
        return Err(Failure::Usage("need --lo <= --hi and a positive --step".into()));
    }
    let seeds: Result<Vec<Rational>, Failure> =
        seed_grid(&a.lo, &a.hi, &a.step).iter().map(|s| seed_of(s, a.binary_float_seeds)).collect();
    let c = fractional_census(&seeds?, &a.c, a.budget, a.mode);
    if let Some(path) = &a.out {
        write_json(path, &c.to_json())?;
    }
    let v = json!({
        "c": a.c,
        "seeds": c.seeds,
        "cycles": c.cycles.iter().map(|k| json!({
            "points": k.cycle.points, "length": k.cycle.len(), "count": k.count, "fraction": k.fraction,
        })).collect::<Vec<_>>(),
        "undetermined": c.undetermined.len(),
    });
    if c.undetermined.is_empty() {
        Ok(v)
    } else {
        Err(Failure::Exhausted(format!("{} seeds found no cycle", c.undetermined.len()), v))
    }
}
