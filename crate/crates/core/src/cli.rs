//! Argument parsing, dispatch and report rendering for the `distilcheck`
//! binary.
//!
//! [`run`] never exits the process. It returns an [`Outcome`] holding the
//! exit code and the text destined for stdout and stderr. Exit codes are 0 on
//! success, 1 when a numerical invariant fails (the failing checks are named
//! on stderr) and 2 for usage or input errors, which are detected before any
//! computation starts.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::lambda0;
use crate::certs::{certify_by_cdf, certify_by_normality, certify_by_schmidt_ranks};
use crate::error::{Error, Result};
use crate::io::{matrix_to_json, read_state, write_matrix_binary, write_state};
use crate::matrix_iso::is_normal_projection;
use crate::measures::halfp_schmidt_fact_report;
use crate::projectors::{
    build_qn_direct, build_qn_direct_dense, build_qn_recursive, build_qn_recursive_dense, qn_gamma_spectrum,
    DEFAULT_MEMORY_CAP,
};
use crate::sropt::{identity_tensor_p_plus, max_overlap_rank_k, verify_ip_maximizer_form, SeesawConfig};
use crate::suite::{self, Section, SuiteScale, Tolerances};
use crate::tensor::{projector_residual, schmidt, Cut, ZERO_TOL};

pub const REPORT_SCHEMA: &str = "distilcheck.report.v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "distilcheck", version, about = "Numerical checks for two-copy distillability of the 4x4 Werner state")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = all available cores, 1 = serial).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    output_format: OutputFormat,
    /// Shorthand for `--output-format json`.
    #[arg(long, global = true)]
    json: bool,
    /// Largest dense operator to materialize, in bytes.
    #[arg(long, global = true, default_value_t = DEFAULT_MEMORY_CAP)]
    memory_cap: usize,
    /// Override a named tolerance, e.g. `--tol appendix=1e-7`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tolerances: Vec<String>,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum QnFormat {
    Summary,
    Json,
    NpzLike,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OpChoice {
    Q1,
    Q2,
    Q3,
    /// `I⊗P₊` on two pairs.
    Ip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodChoice {
    Cdf,
    Rank,
    Normal,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build Qₙ and print a spectral summary or the dense operator.
    BuildQn {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, value_enum, default_value_t = QnFormat::Summary)]
        format: QnFormat,
        /// Destination for the dense operator (required for npz-like).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the product formula instead of the recursion (d = 4 only).
        #[arg(long)]
        direct: bool,
    },
    /// Maximize ⟨φ|op|φ⟩ over states of bounded Schmidt rank.
    Optimize {
        #[arg(long, value_enum)]
        op: OpChoice,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 50)]
        restarts: usize,
        #[arg(long, default_value_t = 4)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
        /// Save the best state as a state file.
        #[arg(long)]
        save_state: Option<PathBuf>,
    },
    /// Classify the Q-projection of a rank-two state as normal or not.
    Classify {
        #[arg(long)]
        state: PathBuf,
    },
    /// Issue half-property certificates for a rank-two state.
    Certify {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodChoice::All)]
        method: MethodChoice,
    },
    /// Constrained maximum (3d-4)/d² by three independent routes.
    Appendix {
        /// Local dimensions to evaluate. Repeatable.
        #[arg(long = "d", default_values_t = [3usize, 4, 5])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        starts: usize,
    },
    /// λ₀ table, closed-form checks, the γ pipeline and the soft targets.
    Bounds {
        /// Restarts for the product-pair estimates.
        #[arg(long, default_value_t = 500)]
        restarts: usize,
        /// Random maximal-form instances for the closed-form checks.
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        /// Report format (same as --output-format).
        #[arg(long, value_enum)]
        report: Option<OutputFormat>,
    },
    /// Twirled-family negativity, witness scan and monotonicity bound.
    Measures {
        #[arg(long, default_value_t = 20)]
        scan_grid: usize,
        /// Random rank-two states for the monotonicity bound.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Run the property suite; exits 1 if any invariant fails.
    Verify {
        /// Reduced sample and restart counts.
        #[arg(long)]
        quick: bool,
    },
    /// Run the property suite and include every result.
    Report {
        #[arg(long)]
        quick: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::BuildQn { .. } => "build-qn",
            Command::Optimize { .. } => "optimize",
            Command::Classify { .. } => "classify",
            Command::Certify { .. } => "certify",
            Command::Appendix { .. } => "appendix",
            Command::Bounds { .. } => "bounds",
            Command::Measures { .. } => "measures",
            Command::Verify { .. } => "verify",
            Command::Report { .. } => "report",
        }
    }

    fn restarts(&self) -> Option<usize> {
        match self {
            Command::Optimize { restarts, .. } | Command::Bounds { restarts, .. } => Some(*restarts),
            Command::Appendix { starts, .. } => Some(*starts),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub restarts: Option<usize>,
    pub tolerances: Tolerances,
    pub memory_cap: usize,
    pub output_format: OutputFormat,
    pub threads: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: RunConfig,
    pub results: BTreeMap<String, Value>,
    pub checks: Vec<suite::Check>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn usage(message: String) -> Self {
        Outcome { code: 2, stdout: String::new(), stderr: message }
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// renders the report.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome::usage(text)
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(msg) => return Outcome::usage(format!("error: {msg}\n")),
    };
    if let Err(msg) = validate(&cli.command) {
        return Outcome::usage(format!("error: {msg}\n"));
    }

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(config.threads).build() {
        Ok(p) => p,
        Err(e) => return Outcome::usage(format!("error: cannot start worker pool: {e}\n")),
    };
    let start = Instant::now();
    let section = pool.install(|| dispatch(&cli.command, &config));
    let section = match section {
        Ok(s) => s,
        Err(e) => {
            let code = match e {
                Error::Numerical(_)
                | Error::NotHermitian { .. }
                | Error::NotUnitary { .. }
                | Error::NotProjector { .. }
                | Error::NotOrthogonal { .. } => 1,
                _ => 2,
            };
            return Outcome { code, stdout: String::new(), stderr: format!("error: {e}\n") };
        }
    };
    let failed: Vec<String> = section
        .failed_invariants()
        .iter()
        .map(|c| format!("invariant failed: {}: {}\n", c.name, c.detail))
        .collect();
    let report = Report {
        schema: REPORT_SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        config: config.clone(),
        results: section.results,
        passed: failed.is_empty(),
        checks: section.checks,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let text = match config.output_format {
        OutputFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        OutputFormat::Csv => render_csv(&report),
    };
    let mut stderr = failed.concat();
    let stdout = match &cli.global.output {
        Some(path) => match std::fs::write(path, &text) {
            Ok(()) => {
                stderr.push_str(&format!("report written to {}\n", path.display()));
                String::new()
            }
            Err(e) => return Outcome::usage(format!("error: cannot write {}: {e}\n", path.display())),
        },
        None => text,
    };
    Outcome { code: if failed.is_empty() { 0 } else { 1 }, stdout, stderr }
}

fn build_config(cli: &Cli) -> std::result::Result<RunConfig, String> {
    let mut tolerances = Tolerances::default();
    for entry in &cli.global.tolerances {
        let (name, value) = entry.split_once('=').ok_or_else(|| format!("--tol expects NAME=VALUE, got '{entry}'"))?;
        let value: f64 = value.trim().parse().map_err(|_| format!("--tol {name}: '{value}' is not a number"))?;
        tolerances.set(name.trim(), value)?;
    }
    let mut output_format = cli.global.output_format;
    if cli.global.json {
        output_format = OutputFormat::Json;
    }
    if let Command::Bounds { report: Some(f), .. } = &cli.command {
        output_format = *f;
    }
    if cli.global.memory_cap == 0 {
        return Err("--memory-cap must be positive".into());
    }
    Ok(RunConfig {
        seed: cli.global.seed,
        restarts: cli.command.restarts(),
        tolerances,
        memory_cap: cli.global.memory_cap,
        output_format,
        threads: cli.global.threads,
    })
}

/// Input checks that need no computation.
fn validate(cmd: &Command) -> std::result::Result<(), String> {
    match cmd {
        Command::BuildQn { n, d, format, out, direct } => {
            if *n == 0 {
                return Err("--n must be at least 1".into());
            }
            if *d < 2 {
                return Err("--d must be at least 2".into());
            }
            if *direct && *d != 4 {
                return Err("--direct is only available for d = 4".into());
            }
            if *format == QnFormat::NpzLike && out.is_none() {
                return Err("--format npz-like needs --out".into());
            }
        }
        Command::Optimize { op, rank, restarts, d, max_iterations, .. } => {
            if *rank == 0 || *restarts == 0 || *max_iterations == 0 {
                return Err("--rank, --restarts and --max-iterations must be at least 1".into());
            }
            if *d < 2 {
                return Err("--d must be at least 2".into());
            }
            if *op == OpChoice::Q3 && *d != 4 {
                return Err("--op q3 is built matrix-free for d = 4 only".into());
            }
        }
        Command::Classify { state } | Command::Certify { state, .. } => {
            if !state.is_file() {
                return Err(format!("state file {} does not exist", state.display()));
            }
        }
        Command::Appendix { dims, starts } => {
            if let Some(d) = dims.iter().find(|&&d| d < 3) {
                return Err(format!("--d {d}: the appendix bound is stated for d >= 3"));
            }
            if *starts == 0 {
                return Err("--starts must be at least 1".into());
            }
        }
        Command::Bounds { restarts, instances, .. } => {
            if *restarts == 0 || *instances == 0 {
                return Err("--restarts and --instances must be at least 1".into());
            }
        }
        Command::Measures { scan_grid, samples } => {
            if *scan_grid < 2 || *samples == 0 {
                return Err("--scan-grid must be at least 2 and --samples at least 1".into());
            }
        }
        Command::Verify { .. } | Command::Report { .. } => {}
    }
    Ok(())
}

fn dispatch(cmd: &Command, config: &RunConfig) -> Result<Section> {
    let tol = &config.tolerances;
    let seed = config.seed;
    match cmd {
        Command::BuildQn { n, d, format, out, direct } => build_qn(*n, *d, *format, out.as_ref(), *direct, config),
        Command::Optimize { op, rank, restarts, d, max_iterations, save_state } => {
            let seesaw = SeesawConfig {
                restarts: *restarts,
                max_iterations: *max_iterations,
                seed,
                ..SeesawConfig::default()
            };
            optimize(*op, *rank, *d, &seesaw, save_state.as_ref(), tol)
        }
        Command::Classify { state } => classify(state),
        Command::Certify { state, method } => certify(state, *method, tol),
        Command::Appendix { dims, starts } => appendix(dims, *starts, tol, seed),
        Command::Bounds { restarts, instances, .. } => {
            let scale = SuiteScale { pair_restarts: *restarts, closed_form_instances: *instances, ..SuiteScale::full() };
            let mut s = suite::section_bound_pipeline(tol, &scale, seed)?;
            let table: Vec<Value> = (1..=6).map(|n| json!({ "n": n, "lambda0": lambda0(n, 4) })).collect();
            s.put("lambda0_table", table);
            Ok(s)
        }
        Command::Measures { scan_grid, samples } => {
            let scale = SuiteScale { grid_steps: *scan_grid, monotonicity_states: *samples, ..SuiteScale::full() };
            let mut s = suite::section_measures(tol, &scale, seed)?;
            let fact = halfp_schmidt_fact_report((*samples).min(50), 20, seed)?;
            s.check("twirl_p_equals_overlap", fact.agrees, format!("max deviation {:e}", fact.max_deviation));
            s.put("twirl_p_fact", fact);
            Ok(s)
        }
        Command::Verify { quick } => {
            let scale = if *quick { SuiteScale::quick() } else { SuiteScale::full() };
            let all = suite::run_all(tol, &scale, seed)?;
            let mut s = Section { results: BTreeMap::new(), checks: all.checks };
            s.put("scale", scale);
            let fatal = s.checks.iter().filter(|c| c.fatal).count();
            s.put("invariants_checked", fatal);
            s.put("references_checked", s.checks.len() - fatal);
            Ok(s)
        }
        Command::Report { quick } => {
            let scale = if *quick { SuiteScale::quick() } else { SuiteScale::full() };
            let mut s = suite::run_all(tol, &scale, seed)?;
            s.put("scale", scale);
            Ok(s)
        }
    }
}

fn build_qn(n: usize, d: usize, format: QnFormat, out: Option<&PathBuf>, direct: bool, config: &RunConfig) -> Result<Section> {
    let mut s = Section::default();
    let op = if direct { build_qn_direct(n, d)? } else { build_qn_recursive(n, d)? };
    s.put("n", n);
    s.put("d", d);
    s.put("dimension", d.pow(2 * n as u32));
    s.put("construction", if direct { "direct" } else { "recursive" });
    s.put("matrix_free", !op.is_dense());
    if d == 4 {
        s.put("lambda0", lambda0(n, d));
    }
    match qn_gamma_spectrum(n, d) {
        Ok(spectrum) => {
            let rows: Vec<Value> = spectrum
                .iter()
                .map(|e| json!({ "weight": e.weight, "eigenvalue": e.eigenvalue, "multiplicity": e.multiplicity }))
                .collect();
            s.put("gamma_spectrum", rows);
        }
        Err(e) => s.put("gamma_spectrum_unavailable", e.to_string()),
    }
    if format == QnFormat::Summary && !op.is_dense() {
        return Ok(s);
    }
    let dense = if direct {
        build_qn_direct_dense(n, d, config.memory_cap)?
    } else {
        build_qn_recursive_dense(n, d, config.memory_cap)?
    };
    let residual = projector_residual(&dense);
    s.put("projector_residual", residual);
    s.put("rank", dense.trace().re.round() as usize);
    s.check("qn_is_projector", residual <= 1e-10, format!("max |Q² - Q| and |Q - Q†| = {residual:e}"));
    let dims = vec![d; 2 * n];
    match (format, out) {
        (QnFormat::Summary, _) => {}
        (QnFormat::Json, None) => {
            let v: Value = serde_json::from_str(&matrix_to_json(&dense, Some(dims))?)?;
            s.put("matrix", v);
        }
        (QnFormat::Json, Some(path)) => {
            std::fs::write(path, matrix_to_json(&dense, Some(dims))?)?;
            s.put("written_to", path.display().to_string());
        }
        (QnFormat::NpzLike, Some(path)) => {
            write_matrix_binary(std::io::BufWriter::new(std::fs::File::create(path)?), &dense)?;
            s.put("written_to", path.display().to_string());
        }
        (QnFormat::NpzLike, None) => unreachable!("validated before dispatch"),
    }
    Ok(s)
}

fn optimize(
    op: OpChoice,
    rank: usize,
    d: usize,
    seesaw: &SeesawConfig,
    save_state: Option<&PathBuf>,
    tol: &Tolerances,
) -> Result<Section> {
    let mut s = Section::default();
    let excess = tol.get("excess");
    let report = match op {
        OpChoice::Q1 | OpChoice::Q2 | OpChoice::Q3 => {
            let n = match op {
                OpChoice::Q1 => 1,
                OpChoice::Q2 => 2,
                _ => 3,
            };
            let q = build_qn_recursive(n, d)?;
            let report = max_overlap_rank_k(&q, &q.dims(), &Cut::new((0..n).collect(), 2 * n)?, rank, seesaw)?;
            if rank == 1 {
                let l0 = lambda0(n, d);
                s.put("lambda0", l0);
                s.check(
                    "rank1_at_most_lambda0",
                    report.best_value <= l0 + excess,
                    format!("best {:.12} vs (1-(1-2/d)ⁿ)/2 = {l0:.12}", report.best_value),
                );
            }
            if n == 2 && rank == 2 && d == 4 {
                s.check(
                    "rank2_at_most_half",
                    report.best_value <= 0.5 + excess,
                    format!("best {:.15}; a value above 1/2 is a potential counterexample", report.best_value),
                );
            }
            report
        }
        OpChoice::Ip => {
            let m = identity_tensor_p_plus(d)?;
            let report = max_overlap_rank_k(&m, &[d; 4], &Cut::two_pair(), rank, seesaw)?;
            if rank == 2 {
                let form = verify_ip_maximizer_form(&report, d)?;
                s.put("maximizer_form", &form);
            }
            report
        }
    };
    s.check("overlap_at_most_one", report.best_value <= 1.0 + excess, format!("best {:.12}", report.best_value));
    s.put("op", op);
    s.put("best_value", report.best_value);
    s.put("report", &report);
    if let Some(path) = save_state {
        write_state(path, &report.best_pure_state())?;
        s.put("state_written_to", path.display().to_string());
    }
    Ok(s)
}

fn classify(path: &PathBuf) -> Result<Section> {
    let mut s = Section::default();
    let phi = read_state(path)?;
    if phi.dims() == [4, 4, 4, 4] {
        s.put("schmidt_rank", schmidt(&phi.normalized()?, &Cut::two_pair())?.rank(ZERO_TOL));
    }
    let r = is_normal_projection(&phi)?;
    s.check("overlap_at_most_half_if_normal", !r.certified || r.overlap <= 0.5 + 1e-10, format!("overlap {:.12}", r.overlap));
    s.put("normality", r);
    Ok(s)
}

fn certify(path: &PathBuf, method: MethodChoice, tol: &Tolerances) -> Result<Section> {
    let mut s = Section::default();
    let phi = read_state(path)?;
    let eps = tol.get("certificate");
    let mut certs = Vec::new();
    if matches!(method, MethodChoice::Cdf | MethodChoice::All) {
        certs.push(("cdf", certify_by_cdf(&phi, eps)?));
    }
    if matches!(method, MethodChoice::Rank | MethodChoice::All) {
        certs.push(("rank", certify_by_schmidt_ranks(&phi, eps)?));
    }
    if matches!(method, MethodChoice::Normal | MethodChoice::All) {
        certs.push(("normal", certify_by_normality(&phi)?));
    }
    s.put("certified", certs.iter().any(|(_, c)| c.certified));
    for (name, c) in certs {
        s.check(
            &format!("{name}_certificate_consistent"),
            !c.certified || c.overlap <= 0.5 + eps,
            format!("certified = {}, overlap {:.12}", c.certified, c.overlap),
        );
        s.put(name, c);
    }
    Ok(s)
}

fn appendix(dims: &[usize], starts: usize, tol: &Tolerances, seed: u64) -> Result<Section> {
    let eps = tol.get("appendix");
    let mut s = Section::default();
    for &d in dims {
        let r = crate::matrix_iso::appendix_max(d, starts, seed)?;
        let dev = r.max_deviation();
        s.check(&format!("d{d}_matches_closed_form"), dev <= eps, format!("max deviation {dev:e} (tol {eps:e})"));
        s.put(&format!("d{d}"), r);
    }
    Ok(s)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&join_key(prefix, k), x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&join_key(prefix, &i.to_string()), x, out);
            }
        }
        Value::String(text) => out.push((prefix.to_string(), text.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn join_key(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn render_csv(report: &Report) -> String {
    let mut rows = vec![
        ("schema".to_string(), report.schema.to_string()),
        ("command".to_string(), report.command.clone()),
        ("seed".to_string(), report.config.seed.to_string()),
        ("passed".to_string(), report.passed.to_string()),
    ];
    flatten("results", &Value::Object(report.results.clone().into_iter().collect()), &mut rows);
    for c in &report.checks {
        let kind = if c.fatal { "check" } else { "reference" };
        rows.push((format!("{kind}.{}", c.name), if c.passed { "pass".into() } else { "fail".into() }));
    }
    let mut text = String::from("key,value\n");
    for (k, v) in rows {
        text.push_str(&format!("{},{}\n", csv_field(&k), csv_field(&v)));
    }
    text
}
