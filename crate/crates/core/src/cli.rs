//! Command-line driver: argument parsing, analyses, checks and report assembly.

use crate::dsl::{format_map, load_corpus, parse_constant, parse_map, CorpusEntry, StepLabel};
use crate::dynamics::{
    estimate_dw_with, step_decide_with, step_sequences_with, DWReport, DwOptions, StepDecision,
    StepReport, StepThresholds,
};
use crate::error::{Error, Result};
use crate::expr::{MapExpr, C64};
use crate::grid::SampleGrid;
use crate::linearize::{
    commute_residual, commute_residual_at, require_zero_step, slc_estimate_with, KoenigsApprox, KoenigsScheme,
    MethodStatus, SlcMethod, SlcOptions,
};
use crate::metric::v_membership;
use crate::orbit::{iterate, StopRule};
use crate::report::{plot_csv, to_csv, to_json, PlotRow, Row};
use crate::semigroup::{
    build_family, embed_search, generator_estimate, parse_angle, zero_step_semigroup_check_with, RegisteredH,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const MAX_N: usize = 1_000_000;

/// Margin radius used for the V-set plot series.
const PLOT_V_RADIUS: f64 = 0.5;
const PLOT_ORBIT_LEN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Quotient,
    Interpolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Angular,
    Koenigs,
    Hprime,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepArg {
    Zero,
    Positive,
}

#[derive(Debug, Parser)]
#[command(name = "koenigs", version, about = "Iteration, classification and linearization of holomorphic self-maps of the unit disc")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalOpts {
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Report path; standard output when absent.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Writes orbits, distortion sequences and V-set margins as CSV.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub emit_plot_data: Option<PathBuf>,
    /// Adds wall-clock timings to the report.
    #[arg(long, global = true)]
    pub timing: bool,
    /// Number of orbit seeds.
    #[arg(long, global = true, default_value_t = 5)]
    pub seeds: usize,
    /// Iteration cap for Denjoy-Wolff estimation.
    #[arg(long, global = true, default_value_t = 16384)]
    pub n_max: usize,
    /// Tolerance separating parabolic from hyperbolic multipliers.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 1e-4)]
    pub tol_mult: f64,
    /// Agreement tolerance between per-seed Denjoy-Wolff estimates.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 1e-6)]
    pub agree_tol: f64,
    /// Distortion below which a decaying sequence counts as zero step.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 0.02)]
    pub zero_last: f64,
    /// Required ratio between the first and last distortion terms for a zero decision.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 10.0)]
    pub zero_decay: f64,
    /// Smallest tail distortion accepted as positive step.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 0.1)]
    pub positive_floor: f64,
    /// Relative spread allowed over the last quarter of a positive sequence.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 0.01)]
    pub positive_drift: f64,
    /// Step-size threshold for the orbit distance decision.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 1e-3)]
    pub q_zero: f64,
    /// Largest accepted disagreement between coefficient methods.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 1e-3)]
    pub slc_tol: f64,
    /// Number of Halton sample points.
    #[arg(long, global = true, default_value_t = 64)]
    pub grid_count: usize,
    /// Radius of the sample disc.
    #[arg(long, global = true, allow_hyphen_values = true, default_value_t = 0.9)]
    pub grid_radius: f64,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Denjoy-Wolff point, multiplier, type and hyperbolic step.
    Classify {
        #[arg(long)]
        map: String,
        /// Orbit length for the step decision.
        #[arg(long, default_value_t = 4096)]
        step_n: usize,
        #[arg(long, value_enum)]
        expect_step: Option<StepArg>,
    },
    /// Distortion and step sequences along one orbit.
    Step {
        #[arg(long)]
        map: String,
        #[arg(long, default_value = "0")]
        z0: String,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long, value_enum)]
        expect: Option<StepArg>,
    },
    /// Approximate Koenigs function and Abel residuals.
    Koenigs {
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, value_enum, default_value_t = SchemeArg::Interpolated)]
        scheme: SchemeArg,
        #[arg(long, default_value_t = 4)]
        half_nodes: usize,
        /// Extra evaluation points.
        #[arg(long)]
        at: Vec<String>,
        /// Closed-form Koenigs function to compare against, up to an additive constant.
        #[arg(long)]
        closed_form: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        oracle_tol: f64,
        /// Fails when the largest Abel residual exceeds this.
        #[arg(long)]
        abel_tol: Option<f64>,
    },
    /// Simultaneous linearization coefficient.
    Slc {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        psi: String,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
        #[arg(long, default_value_t = 4096)]
        n: usize,
        #[arg(long)]
        expect_c: Option<String>,
        #[arg(long, default_value_t = 1e-5)]
        c_tol: f64,
    },
    /// Commutation residual `|φ∘ψ − ψ∘φ|`.
    Commute {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        psi: String,
        /// Fails when the grid residual exceeds this.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Translation semigroup over a registered univalent map.
    Semigroup {
        /// slit, slit:<scale>, cayley-rh or cayley-h.
        #[arg(long)]
        h: String,
        /// Direction angle in radians; accepts `pi/2` style.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        /// Map to locate inside the family.
        #[arg(long)]
        embed: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        t_lo: f64,
        #[arg(long, default_value_t = 4.0)]
        t_hi: f64,
        #[arg(long, default_value = "0.3+0.2i")]
        z: String,
        #[arg(long, default_value_t = 1024.0)]
        t_max: f64,
    },
    /// Runs every expected-value check of a corpus file.
    Corpus {
        #[arg(long)]
        file: PathBuf,
        /// Iteration depth for closed-form Koenigs checks.
        #[arg(long, default_value_t = 2048)]
        koenigs_n: usize,
        #[arg(long, default_value_t = 4096)]
        step_n: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Step { .. } => "step",
            Command::Koenigs { .. } => "koenigs",
            Command::Slc { .. } => "slc",
            Command::Commute { .. } => "commute",
            Command::Semigroup { .. } => "semigroup",
            Command::Corpus { .. } => "corpus",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), pass: value <= tolerance, value, tolerance, detail: String::new() }
    }

    fn label(name: impl Into<String>, got: &str, want: &str) -> Self {
        let pass = got == want;
        Check {
            name: name.into(),
            pass,
            value: if pass { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: format!("got {got}, expected {want}"),
        }
    }

    fn failed(name: impl Into<String>, err: &Error) -> Self {
        Check {
            name: name.into(),
            pass: false,
            value: f64::NAN,
            tolerance: 0.0,
            detail: format!("{}: {err}", err.code()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorInfo {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo { code: e.code(), message: e.to_string(), offset: e.offset() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: Value,
    /// `pass`, `fail` or `error`.
    pub status: &'static str,
    pub results: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Vec<Timing>>,
}

#[derive(Default)]
struct Outcome {
    results: Value,
    checks: Vec<Check>,
    plot: Vec<PlotRow>,
    timing: Vec<Timing>,
}

impl Outcome {
    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timing.push(Timing { label: label.into(), seconds: t.elapsed().as_secs_f64() });
        out
    }
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub global: GlobalOpts,
    pub command: Command,
}

impl RunConfig {
    pub fn new(cli: Cli) -> Result<Self> {
        let g = &cli.global;
        let tolerances = [
            ("tol-mult", g.tol_mult),
            ("agree-tol", g.agree_tol),
            ("zero-last", g.zero_last),
            ("zero-decay", g.zero_decay),
            ("positive-floor", g.positive_floor),
            ("positive-drift", g.positive_drift),
            ("q-zero", g.q_zero),
            ("slc-tol", g.slc_tol),
        ];
        for (name, v) in tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("--{name} must be positive, got {v}")));
            }
        }
        check_n("n-max", g.n_max)?;
        if !(1..=64).contains(&g.seeds) {
            return Err(usage(format!("--seeds must be in 1..=64, got {}", g.seeds)));
        }
        if !(1..=4096).contains(&g.grid_count) {
            return Err(usage(format!("--grid-count must be in 1..=4096, got {}", g.grid_count)));
        }
        if !(g.grid_radius > 0.0 && g.grid_radius < 1.0) {
            return Err(usage(format!("--grid-radius must be in (0, 1), got {}", g.grid_radius)));
        }
        match &cli.command {
            Command::Classify { step_n: n, .. } | Command::Step { n, .. } | Command::Koenigs { n, .. } | Command::Slc { n, .. } => {
                check_n("n", *n)?
            }
            Command::Corpus { koenigs_n, step_n, .. } => {
                check_n("koenigs-n", *koenigs_n)?;
                check_n("step-n", *step_n)?;
            }
            _ => {}
        }
        let positive_opt = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(usage(format!("--{name} must be positive, got {v}"))),
            _ => Ok(()),
        };
        match &cli.command {
            Command::Koenigs { oracle_tol, abel_tol, .. } => {
                positive_opt("oracle-tol", Some(*oracle_tol))?;
                positive_opt("abel-tol", *abel_tol)?;
            }
            Command::Slc { c_tol, .. } => positive_opt("c-tol", Some(*c_tol))?,
            Command::Commute { tol, .. } => positive_opt("tol", *tol)?,
            _ => {}
        }
        Ok(RunConfig { global: cli.global, command: cli.command })
    }

    fn dw_options(&self) -> DwOptions {
        DwOptions {
            seeds: seed_points(self.global.seeds),
            n_max: self.global.n_max,
            agree_tol: self.global.agree_tol,
            tol_mult: self.global.tol_mult,
            ..DwOptions::default()
        }
    }

    fn thresholds(&self) -> StepThresholds {
        let g = &self.global;
        StepThresholds {
            zero_last: g.zero_last,
            zero_decay: g.zero_decay,
            positive_floor: g.positive_floor,
            positive_drift: g.positive_drift,
            q_zero: g.q_zero,
        }
    }

    fn grid(&self) -> SampleGrid {
        SampleGrid::new(self.global.grid_count, self.global.grid_radius, crate::grid::DEFAULT_SEED)
    }

    fn echo(&self) -> Value {
        let mut v = serde_json::to_value(&self.global).expect("plain data");
        let cmd = serde_json::to_value(&self.command).expect("plain data");
        if let (Value::Object(m), Value::Object(c)) = (&mut v, cmd) {
            for (k, x) in c {
                m.insert(k, x);
            }
        }
        v
    }
}

fn usage(msg: String) -> Error {
    Error::Usage(msg)
}

fn check_n(name: &str, n: usize) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(usage(format!("--{name} must be in 1..={MAX_N}, got {n}")));
    }
    Ok(())
}

/// The five default seeds followed by Halton points in `|z| ≤ 0.6`.
pub fn seed_points(k: usize) -> Vec<C64> {
    let mut s = crate::dynamics::default_seeds();
    if k > s.len() {
        s.extend(SampleGrid::new(k - s.len(), 0.6, 17).points);
    }
    s.truncate(k);
    s
}

fn parse_arg(src: &str, what: &str) -> Result<MapExpr> {
    parse_map(src).map_err(|e| tag_parse(e, what))
}

fn parse_const_arg(src: &str, what: &str) -> Result<C64> {
    parse_constant(src).map_err(|e| tag_parse(e, what))
}

fn tag_parse(e: Error, what: &str) -> Error {
    match e {
        Error::Syntax { offset, message } => Error::Syntax { offset, message: format!("{what}: {message}") },
        Error::UnknownIdentifier { offset, name } => Error::UnknownIdentifier { offset, name },
        Error::MalformedLiteral { offset, message } => {
            Error::MalformedLiteral { offset, message: format!("{what}: {message}") }
        }
        other => other,
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("plain data")
}

fn combined_step(runs: &[StepReport]) -> StepDecision {
    let first = match runs.first() {
        Some(r) => r.decision,
        None => return StepDecision::Inconclusive,
    };
    if runs.iter().all(|r| r.decision == first && r.q_decision == first) {
        first
    } else {
        StepDecision::Inconclusive
    }
}

fn step_run_summary(r: &StepReport) -> Value {
    json!({
        "z0": r.z0,
        "decision": r.decision,
        "q_decision": r.q_decision,
        "length": r.distortion_seq.len() - 1,
        "distortion_last": r.distortion_seq.last().copied().unwrap_or(f64::NAN),
        "q_last": r.q_seq.last().copied().unwrap_or(f64::NAN),
        "distortion_limit": r.distortion_limit,
        "q_limit": r.q_limit,
        "derivative_vanished": r.derivative_vanished,
        "monotonicity_excess": r.monotonicity_excess,
        "truncation": r.truncation.as_str(),
    })
}

fn plot_orbit(rows: &mut Vec<PlotRow>, series: &str, map: &MapExpr, z0: C64) {
    let stop = StopRule { boundary_margin: crate::dynamics::STEP_BOUNDARY_MARGIN, ..StopRule::no_stagnation() };
    if let Ok(o) = iterate(map, z0, PLOT_ORBIT_LEN, stop) {
        for (k, z) in o.points.iter().enumerate() {
            rows.push(PlotRow { series: series.into(), index: k, x: z.re, y: z.im, value: z.norm() });
        }
    }
}

fn plot_step(rows: &mut Vec<PlotRow>, tag: &str, r: &StepReport) {
    for (k, &d) in r.distortion_seq.iter().enumerate() {
        let q = r.q_seq.get(k).copied().unwrap_or(f64::NAN);
        rows.push(PlotRow { series: format!("distortion:{tag}"), index: k, x: k as f64, y: d, value: q });
    }
}

fn plot_vset(rows: &mut Vec<PlotRow>, map: &MapExpr, grid: &SampleGrid) {
    for (k, &z) in grid.points.iter().enumerate() {
        if let Ok(m) = v_membership(map, PLOT_V_RADIUS, z) {
            rows.push(PlotRow { series: "v_margin".into(), index: k, x: z.re, y: z.im, value: m.margin });
        }
    }
}

fn classify_cmd(cfg: &RunConfig, map_src: &str, step_n: usize, expect: Option<StepArg>, out: &mut Outcome) -> Result<()> {
    let map = parse_arg(map_src, "--map")?;
    let opts = cfg.dw_options();
    let dw = out.time("classify", || estimate_dw_with(&map, &opts))?;
    let th = cfg.thresholds();
    let mut runs = Vec::new();
    if !dw.type_label.is_elliptic() {
        out.time("step", || -> Result<()> {
            for &s in &opts.seeds {
                runs.push(step_sequences_with(&map, s, step_n, &th)?);
            }
            Ok(())
        })?;
    }
    let step = if runs.is_empty() { None } else { Some(combined_step(&runs)) };
    if let Some(want) = expect {
        let got = step.map_or("none", |s| s.as_str());
        out.checks.push(Check::label("step", got, step_arg(want).as_str()));
    }
    for (k, &s) in opts.seeds.iter().enumerate() {
        plot_orbit(&mut out.plot, &format!("orbit:seed{k}"), &map, s);
    }
    for (k, r) in runs.iter().enumerate() {
        plot_step(&mut out.plot, &format!("seed{k}"), r);
    }
    plot_vset(&mut out.plot, &map, &cfg.grid());
    out.results = json!({
        "map": format_map(&map),
        "type": dw.type_label,
        "dw": dw.location,
        "multiplier": dw.multiplier,
        "step": step,
        "report": dw,
        "step_runs": runs.iter().map(step_run_summary).collect::<Vec<_>>(),
    });
    Ok(())
}

fn step_arg(s: StepArg) -> StepDecision {
    match s {
        StepArg::Zero => StepDecision::Zero,
        StepArg::Positive => StepDecision::Positive,
    }
}

fn step_cmd(cfg: &RunConfig, map_src: &str, z0: &str, n: usize, expect: Option<StepArg>, out: &mut Outcome) -> Result<()> {
    let map = parse_arg(map_src, "--map")?;
    let z0 = parse_const_arg(z0, "--z0")?;
    let th = cfg.thresholds();
    let r = out.time("step", || step_sequences_with(&map, z0, n, &th))?;
    let decision = step_decide_with(&r, &th);
    let concordant =
        decision == r.q_decision || decision == StepDecision::Inconclusive || r.q_decision == StepDecision::Inconclusive;
    out.checks.push(Check {
        name: "criteria_concordance".into(),
        pass: concordant,
        value: if concordant { 0.0 } else { 1.0 },
        tolerance: 0.0,
        detail: format!("distortion {}, step sequence {}", decision.as_str(), r.q_decision.as_str()),
    });
    if let Some(want) = expect {
        out.checks.push(Check::label("decision", decision.as_str(), step_arg(want).as_str()));
    }
    plot_orbit(&mut out.plot, "orbit", &map, z0);
    plot_step(&mut out.plot, "z0", &r);
    plot_vset(&mut out.plot, &map, &cfg.grid());
    out.results = json!({ "map": format_map(&map), "report": r });
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn koenigs_cmd(
    cfg: &RunConfig,
    map_src: &str,
    n: usize,
    scheme: SchemeArg,
    half_nodes: usize,
    at: &[String],
    closed_form: Option<&str>,
    oracle_tol: f64,
    abel_tol: Option<f64>,
    out: &mut Outcome,
) -> Result<()> {
    let map = parse_arg(map_src, "--map")?;
    let oracle = closed_form.map(|s| parse_arg(s, "--closed-form")).transpose()?;
    let extra: Vec<C64> = at.iter().map(|s| parse_const_arg(s, "--at")).collect::<Result<_>>()?;
    let scheme = match scheme {
        SchemeArg::Quotient => KoenigsScheme::Quotient,
        SchemeArg::Interpolated => KoenigsScheme::Interpolated { half_nodes },
    };
    let dw = out.time("precondition", || require_zero_step(&map))?;
    let b = out.time("build", || KoenigsApprox::new(&map, n, scheme))?;
    let grid = cfg.grid();
    let stats = out.time("residual", || b.residual_stats(&grid))?;
    let mut samples = Vec::new();
    let mut oracle_gap = 0.0f64;
    let offset = match &oracle {
        Some(h) => Some(h.eval(C64::new(0.0, 0.0))?),
        None => None,
    };
    for (k, &z) in grid.points.iter().chain(&extra).enumerate() {
        let v = b.eval(z)?;
        let mut row = json!({ "z": z, "b": v });
        if let (Some(h), Some(h0)) = (&oracle, offset) {
            let want = h.eval(z)? - h0;
            let gap = (v - want).norm();
            if k < grid.points.len() {
                oracle_gap = oracle_gap.max(gap);
            }
            row["oracle"] = to_value(&want);
            row["oracle_gap"] = json!(gap);
        }
        let r = (b.eval(map.eval(z)?)? - v - 1.0).norm();
        row["abel_residual"] = json!(r);
        out.plot.push(PlotRow { series: "abel_residual".into(), index: k, x: z.re, y: z.im, value: r });
        samples.push(row);
    }
    if oracle.is_some() {
        out.checks.push(Check::below("oracle_gap", oracle_gap, oracle_tol));
    }
    if let Some(t) = abel_tol {
        out.checks.push(Check::below("abel_residual_max", stats.max, t));
    }
    plot_orbit(&mut out.plot, "base_orbit", &map, C64::new(0.0, 0.0));
    out.results = json!({
        "map": format_map(&map),
        "n": n,
        "scheme": scheme,
        "dw": dw.location,
        "abel_residual": { "max": stats.max, "mean": stats.mean },
        "oracle_gap": oracle.as_ref().map(|_| oracle_gap),
        "samples": samples,
    });
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn slc_cmd(
    cfg: &RunConfig,
    phi: &str,
    psi: &str,
    method: MethodArg,
    n: usize,
    expect_c: Option<&str>,
    c_tol: f64,
    out: &mut Outcome,
) -> Result<()> {
    let phi = parse_arg(phi, "--phi")?;
    let psi = parse_arg(psi, "--psi")?;
    let want = expect_c.map(|s| parse_const_arg(s, "--expect-c")).transpose()?;
    let method = match method {
        MethodArg::Angular => SlcMethod::Angular,
        MethodArg::Koenigs => SlcMethod::Koenigs,
        MethodArg::Hprime => SlcMethod::Hprime,
        MethodArg::All => SlcMethod::All,
    };
    let opts = SlcOptions { n, grid: cfg.grid(), ..SlcOptions::default() };
    let r = out.time("slc", || slc_estimate_with(&phi, &psi, method, &opts))?;
    let ok = [&r.angular, &r.koenigs, &r.hprime].iter().filter(|m| m.status == MethodStatus::Ok).count();
    if ok >= 2 {
        out.checks.push(Check::below("method_disagreement", r.disagreement, cfg.global.slc_tol));
    }
    if let Some(w) = want {
        out.checks.push(Check::below("coefficient", (r.c - w).norm(), c_tol));
    }
    plot_orbit(&mut out.plot, "orbit:phi", &phi, C64::new(0.0, 0.0));
    plot_orbit(&mut out.plot, "orbit:psi", &psi, C64::new(0.0, 0.0));
    out.results = json!({
        "phi": format_map(&phi),
        "psi": format_map(&psi),
        "c": r.c,
        "disagreement": r.disagreement,
        "report": r,
    });
    Ok(())
}

fn commute_cmd(cfg: &RunConfig, phi: &str, psi: &str, tol: Option<f64>, out: &mut Outcome) -> Result<()> {
    let phi = parse_arg(phi, "--phi")?;
    let psi = parse_arg(psi, "--psi")?;
    let grid = cfg.grid();
    let at0 = commute_residual_at(&phi, &psi, C64::new(0.0, 0.0))?;
    let max = out.time("commute", || commute_residual(&phi, &psi, &grid))?;
    for (k, &z) in grid.points.iter().enumerate() {
        let r = commute_residual_at(&phi, &psi, z)?;
        out.plot.push(PlotRow { series: "commute_residual".into(), index: k, x: z.re, y: z.im, value: r });
    }
    if let Some(t) = tol {
        out.checks.push(Check::below("commute_residual", max, t));
    }
    out.results = json!({
        "phi": format_map(&phi),
        "psi": format_map(&psi),
        "residual_at_zero": at0,
        "residual_max": max,
        "grid": grid,
    });
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn semigroup_cmd(
    cfg: &RunConfig,
    h: &str,
    theta: &str,
    embed: Option<&str>,
    t_range: (f64, f64),
    z: &str,
    t_max: f64,
    out: &mut Outcome,
) -> Result<()> {
    let target = embed.map(|s| parse_arg(s, "--embed")).transpose()?;
    let z = parse_const_arg(z, "--z")?;
    let h = RegisteredH::parse(h).map_err(|e| usage(format!("--h: {e}")))?;
    let theta = parse_angle(theta).map_err(|e| usage(format!("--theta: {e}")))?;
    let fam = out.time("build", || build_family(h, theta))?;
    let grid = cfg.grid();
    let mut gens = Vec::new();
    let mut gap = 0.0f64;
    out.time("generator", || -> Result<()> {
        for &w in grid.points.iter().take(16) {
            let g = generator_estimate(&fam, w)?;
            gap = gap.max(g.closed_form_gap);
            gens.push(g);
        }
        Ok(())
    })?;
    out.checks.push(Check::below("law_error", fam.validation.law_error, crate::semigroup::LAW_TOL));
    out.checks.push(Check::below("generator_gap", gap, 1e-6));
    let th = cfg.thresholds();
    let step = out.time("step", || zero_step_semigroup_check_with(&fam, z, t_max, &th))?;
    for (k, s) in step.samples.iter().enumerate() {
        out.plot.push(PlotRow { series: "criterion".into(), index: k, x: s.t, y: s.normalized, value: s.f });
    }
    let embedded = match &target {
        Some(phi) => {
            let e = out.time("embed", || embed_search(phi, &fam, t_range, &grid))?;
            out.checks.push(Check::below("embed_residual", e.residual, 1e-8));
            Some(e)
        }
        None => None,
    };
    plot_orbit(&mut out.plot, "orbit:time_one", &fam.member(1.0)?, z);
    out.results = json!({
        "family": fam,
        "generator": gens,
        "generator_gap_max": gap,
        "step": step,
        "embed": embedded,
    });
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct EntryOutcome {
    name: String,
    expr: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<DWReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    step_runs: Vec<Value>,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorInfo>,
    #[serde(skip)]
    seconds: f64,
}

fn run_entry(cfg: &RunConfig, entry: &CorpusEntry, koenigs_n: usize, step_n: usize) -> EntryOutcome {
    let t = Instant::now();
    let mut res = EntryOutcome {
        name: entry.name.clone(),
        expr: entry.expr.clone(),
        classification: None,
        step_runs: Vec::new(),
        checks: Vec::new(),
        error: None,
        seconds: 0.0,
    };
    if let Err(e) = entry_checks(cfg, entry, koenigs_n, step_n, &mut res) {
        res.checks.push(Check::failed("entry", &e));
        res.error = Some(ErrorInfo::from(&e));
    }
    res.seconds = t.elapsed().as_secs_f64();
    res
}

fn entry_checks(cfg: &RunConfig, entry: &CorpusEntry, koenigs_n: usize, step_n: usize, res: &mut EntryOutcome) -> Result<()> {
    let map = entry.map()?;
    let exp = entry.expected();
    let opts = cfg.dw_options();
    let dw = estimate_dw_with(&map, &opts)?;
    if let Some(want) = exp.type_label {
        res.checks.push(Check::label("type", dw.type_label.as_str(), want.as_str()));
    }
    if let Some(want) = entry.dw() {
        res.checks.push(Check::below("dw", (dw.location - want).norm(), cfg.global.agree_tol));
    }
    if let Some(want) = exp.multiplier {
        res.checks.push(Check::below("multiplier", (dw.multiplier - want).abs(), cfg.global.tol_mult));
    }
    if let Some(want) = exp.step {
        let want = match want {
            StepLabel::Zero => StepDecision::Zero,
            StepLabel::Positive => StepDecision::Positive,
        };
        if dw.type_label.is_elliptic() {
            res.checks.push(Check::label("step", "none", want.as_str()));
        } else {
            let th = cfg.thresholds();
            for (k, &s) in opts.seeds.iter().enumerate() {
                let r = step_sequences_with(&map, s, step_n, &th)?;
                res.checks.push(Check::label(format!("step:seed{k}"), step_decide_with(&r, &th).as_str(), want.as_str()));
                res.checks.push(Check::label(format!("q_step:seed{k}"), r.q_decision.as_str(), want.as_str()));
                res.step_runs.push(step_run_summary(&r));
            }
        }
    }
    if let Some(h) = entry.closed_form()? {
        let b = KoenigsApprox::new(&map, koenigs_n, KoenigsScheme::default())?;
        let h0 = h.eval(C64::new(0.0, 0.0))?;
        let mut gap = 0.0f64;
        for &z in &cfg.grid().points {
            gap = gap.max((b.eval(z)? - (h.eval(z)? - h0)).norm());
        }
        res.checks.push(Check::below("koenigs_oracle", gap, 0.05));
    }
    let partners = entry.partners()?;
    if !partners.is_empty() {
        let opts = SlcOptions { grid: cfg.grid(), ..SlcOptions::default() };
        for (k, (psi, c)) in partners.iter().enumerate() {
            match slc_estimate_with(&map, psi, SlcMethod::All, &opts) {
                Ok(r) => {
                    res.checks.push(Check::below(format!("slc:{k}"), (r.c - c).norm(), 1e-5));
                    res.checks.push(Check::below(format!("slc_disagreement:{k}"), r.disagreement, cfg.global.slc_tol));
                }
                Err(e) => res.checks.push(Check::failed(format!("slc:{k}"), &e)),
            }
        }
    }
    res.classification = Some(dw);
    Ok(())
}

/// Worker count from `KOENIGS_THREADS`, else the available parallelism.
pub fn thread_count(jobs: usize) -> usize {
    let requested = std::env::var("KOENIGS_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok());
    let n = requested
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    n.clamp(1, jobs.max(1))
}

fn corpus_cmd(cfg: &RunConfig, file: &Path, koenigs_n: usize, step_n: usize, out: &mut Outcome) -> Result<()> {
    let entries = load_corpus(file)?;
    let slots: Vec<Mutex<Option<EntryOutcome>>> = entries.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = thread_count(entries.len());
    out.time("corpus", || {
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= entries.len() {
                        break;
                    }
                    let r = run_entry(cfg, &entries[i], koenigs_n, step_n);
                    *slots[i].lock().expect("worker panicked") = Some(r);
                });
            }
        })
    });
    let results: Vec<EntryOutcome> =
        slots.into_iter().map(|m| m.into_inner().expect("worker panicked").expect("every entry ran")).collect();
    for r in &results {
        for c in &r.checks {
            out.checks.push(Check { name: format!("{}/{}", r.name, c.name), ..c.clone() });
        }
        out.timing.push(Timing { label: format!("entry:{}", r.name), seconds: r.seconds });
        if let Ok(map) = parse_map(&r.expr) {
            plot_orbit(&mut out.plot, &format!("orbit:{}", r.name), &map, C64::new(0.0, 0.0));
        }
    }
    let passed = results.iter().filter(|r| r.checks.iter().all(|c| c.pass)).count();
    out.results = json!({
        "file": file.display().to_string(),
        "entries": results.len(),
        "passed": passed,
        "results": results,
    });
    Ok(())
}

fn dispatch(cfg: &RunConfig, out: &mut Outcome) -> Result<()> {
    match &cfg.command {
        Command::Classify { map, step_n, expect_step } => classify_cmd(cfg, map, *step_n, *expect_step, out),
        Command::Step { map, z0, n, expect } => step_cmd(cfg, map, z0, *n, *expect, out),
        Command::Koenigs { map, n, scheme, half_nodes, at, closed_form, oracle_tol, abel_tol } => koenigs_cmd(
            cfg,
            map,
            *n,
            *scheme,
            *half_nodes,
            at,
            closed_form.as_deref(),
            *oracle_tol,
            *abel_tol,
            out,
        ),
        Command::Slc { phi, psi, method, n, expect_c, c_tol } => {
            slc_cmd(cfg, phi, psi, *method, *n, expect_c.as_deref(), *c_tol, out)
        }
        Command::Commute { phi, psi, tol } => commute_cmd(cfg, phi, psi, *tol, out),
        Command::Semigroup { h, theta, embed, t_lo, t_hi, z, t_max } => {
            semigroup_cmd(cfg, h, theta, embed.as_deref(), (*t_lo, *t_hi), z, *t_max, out)
        }
        Command::Corpus { file, koenigs_n, step_n } => corpus_cmd(cfg, file, *koenigs_n, *step_n, out),
    }
}

/// Flattens a JSON value into CSV rows keyed by path; array positions become the index.
fn flatten(analysis: &str, path: &str, index: usize, v: &Value, rows: &mut Vec<Row>) {
    match v {
        Value::Null => {}
        Value::Bool(b) => rows.push(Row::text(analysis, index, path, if *b { "true" } else { "false" })),
        Value::Number(n) => rows.push(Row::real(analysis, index, path, n.as_f64().unwrap_or(f64::NAN))),
        Value::String(s) => rows.push(Row::text(analysis, index, path, s)),
        Value::Array(items) => {
            let pair = items.len() == 2 && items.iter().all(Value::is_number);
            if pair {
                let re = items[0].as_f64().unwrap_or(f64::NAN);
                let im = items[1].as_f64().unwrap_or(f64::NAN);
                rows.push(Row::complex(analysis, index, path, C64::new(re, im)));
            } else {
                for (k, x) in items.iter().enumerate() {
                    flatten(analysis, path, k, x, rows);
                }
            }
        }
        Value::Object(m) => {
            for (k, x) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(analysis, &p, index, x, rows);
            }
        }
    }
}

/// CSV projection: results flattened by path, then one row per check.
pub fn report_csv(report: &Report, command: &str) -> String {
    let mut rows = Vec::new();
    flatten(command, "", 0, &report.results, &mut rows);
    for (k, c) in report.checks.iter().enumerate() {
        let mut r = Row::real("check", k, &c.name, c.value);
        r.im = c.tolerance;
        r.text = if c.pass { "pass".into() } else { "fail".into() };
        rows.push(r);
    }
    rows.push(Row::text("status", 0, "status", report.status));
    if let Some(e) = &report.error {
        rows.push(Row::text("error", e.offset.unwrap_or(0), e.code, &e.message));
    }
    to_csv(&rows)
}

/// Runs one configuration and returns the report with its exit code.
pub fn execute(cfg: &RunConfig) -> (Report, i32, Vec<PlotRow>) {
    let mut out = Outcome { results: Value::Null, ..Outcome::default() };
    let res = dispatch(cfg, &mut out);
    let (status, code, error) = match &res {
        Err(e) => ("error", if e.is_usage() { EXIT_USAGE } else { EXIT_CHECK_FAILED }, Some(ErrorInfo::from(e))),
        Ok(()) if out.checks.iter().all(|c| c.pass) => ("pass", EXIT_OK, None),
        Ok(()) => ("fail", EXIT_CHECK_FAILED, None),
    };
    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.echo(),
        status,
        results: out.results,
        checks: out.checks,
        error,
        timing: cfg.global.timing.then_some(out.timing),
    };
    (report, code, out.plot)
}

pub fn render(report: &Report, cfg: &RunConfig) -> String {
    match cfg.global.format {
        Format::Json => to_json(report),
        Format::Csv => report_csv(report, cfg.command.name()),
    }
}

fn write_text(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    use std::io::Write;
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()
        }
    }
}

/// Entry point used by the binary.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match RunConfig::new(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            return EXIT_USAGE;
        }
    };
    let (report, code, plot) = execute(&cfg);
    if let Some(e) = &report.error {
        match e.offset {
            Some(o) => eprintln!("error[{}] at offset {o}: {}", e.code, e.message),
            None => eprintln!("error[{}]: {}", e.code, e.message),
        }
    }
    if let Err(e) = write_text(cfg.global.output.as_deref(), &render(&report, &cfg)) {
        eprintln!("error[io]: cannot write report: {e}");
        return EXIT_CHECK_FAILED.max(code);
    }
    if let Some(p) = &cfg.global.emit_plot_data {
        if let Err(e) = std::fs::write(p, plot_csv(&plot)) {
            eprintln!("error[io]: cannot write plot data: {e}");
            return EXIT_CHECK_FAILED.max(code);
        }
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> Result<RunConfig> {
        let mut v = vec!["koenigs"];
        v.extend_from_slice(args);
        RunConfig::new(Cli::try_parse_from(v).expect("valid flags"))
    }

    #[test]
    fn invariants_enforced() {
        assert!(cfg(&["--n-max", "2000000", "classify", "--map", "z/2"]).is_err());
        assert!(cfg(&["--tol-mult", "0", "classify", "--map", "z/2"]).is_err());
        assert!(cfg(&["--tol-mult", "-1e-3", "classify", "--map", "z/2"]).is_err());
        assert!(cfg(&["classify", "--map", "z/2"]).is_ok());
    }

    #[test]
    fn parse_error_is_usage() {
        let c = cfg(&["classify", "--map", "z^"]).unwrap();
        let (r, code, _) = execute(&c);
        assert_eq!(code, EXIT_USAGE);
        let e = r.error.unwrap();
        assert_eq!((e.code, e.offset), ("syntax", Some(2)));
    }

    #[test]
    fn seeds_extend_deterministically() {
        let s = seed_points(9);
        assert_eq!(s.len(), 9);
        assert_eq!(&s[..5], &crate::dynamics::default_seeds()[..]);
        assert!(s.iter().all(|z| z.norm() < 1.0));
        assert_eq!(seed_points(2).len(), 2);
    }

    #[test]
    fn complex_pairs_flatten_to_one_row() {
        let mut rows = Vec::new();
        flatten("t", "", 0, &json!({ "dw": [1.0, 0.0], "seq": [0.5, 0.25, 0.125] }), &mut rows);
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].name, "dw");
        assert_eq!((rows[3].index, rows[3].re), (2, 0.125));
    }
}
