//! The `seqbayes` command line.
//!
//! Each command writes its artifacts plus a `manifest.json` into `--out-dir`
//! and prints a short summary to stdout (`--format json` or `csv`).
//! Exit codes: 0 success, 2 invalid input, 3 runtime failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::boundary;
use crate::error::{Error, Result};
use crate::io::read_history_csv;
use crate::io::read_monitor_csv;
use crate::model::{false_discovery_prob_from_log, AlternativeModel, PriorOdds};
use crate::pitfalls::{self, EnumerationSummary, UntilWinConfig};
use crate::prior_em::{em_fit_default, EmOptions, EmSummary};
use crate::simulate::{run_study_with_threads, write_calibration_csv, DiscreteModel, Hypothesis, StudyConfig};
use crate::stopping::{MonitorConfig, StoppingRule};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "seqbayes", version, about = "Bayesian A/B testing under optional stopping")]
pub struct Cli {
    /// Base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "seqbayes-out")]
    out_dir: PathBuf,
    /// Format of the stdout summary.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Validate and resolve the configuration, write the manifest, compute nothing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo calibration study.
    Simulate(SimulateArgs),
    /// Replay a recorded stream through a stopping rule.
    Monitor(MonitorArgs),
    /// Fit the prior (p, V) to historical experiments by EM.
    LearnPrior(LearnPriorArgs),
    /// Tabulate NHST and Bayesian rejection boundaries.
    Boundaries(BoundaryArgs),
    /// Run one of the bad-practice demonstrations.
    Pitfalls(PitfallArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleKind {
    FixedHorizon,
    BfUpper,
    BfTwoSided,
    PValue,
}

#[derive(Debug, Args, Clone, Default)]
struct ModelArgs {
    /// Precise alternative with this effect size.
    #[arg(long, conflicts_with = "composite")]
    delta: Option<f64>,
    /// Composite alternative with a N(0, V²) effect prior; needs --v.
    #[arg(long)]
    composite: bool,
    /// Prior standard deviation V of the effect under the composite alternative.
    #[arg(long)]
    v: Option<f64>,
}

#[derive(Debug, Args, Clone, Default)]
struct RuleArgs {
    #[arg(long, value_enum)]
    rule: Option<RuleKind>,
    /// Bayes factor threshold (required for bf rules).
    #[arg(long)]
    k: Option<f64>,
    /// Significance level of the p-value rule (default 0.05).
    #[arg(long)]
    alpha: Option<f64>,
    /// Minimum sample size of the p-value rule (default 1).
    #[arg(long)]
    n_min: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    check_every: Option<u64>,
    #[arg(long)]
    prior_odds: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON config: a stopping rule in monitor form plus study fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rule: RuleArgs,
    /// Runs per hypothesis.
    #[arg(long)]
    runs: Option<u64>,
    /// Posterior-odds threshold counted as a rejection in the metrics.
    #[arg(long)]
    reject_k: Option<f64>,
}

#[derive(Debug, Args)]
struct MonitorArgs {
    /// CSV with header `value` or `unit_id,group,value`.
    data: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rule: RuleArgs,
}

#[derive(Debug, Args)]
struct LearnPriorArgs {
    /// CSV with header `delta,n_effective`.
    history: PathBuf,
    /// Multiplier in the V² floor k²·Avg(1/N_E).
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct BoundaryArgs {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
    /// Composite prior standard deviation V.
    #[arg(long, default_value_t = 0.1)]
    v: f64,
    #[arg(long, default_value_t = 9.0)]
    k: f64,
    /// Explicit sample sizes, comma separated; overrides the log grid.
    #[arg(long, value_delimiter = ',')]
    grid: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    n_lo: u64,
    #[arg(long, default_value_t = 100_000_000)]
    n_hi: u64,
    #[arg(long, default_value_t = 50)]
    points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PracticeArg {
    Reanalysis,
    OptimalStopping,
    UntilWin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TruthArg {
    H0,
    H1,
}

#[derive(Debug, Args)]
struct PitfallArgs {
    #[arg(value_enum)]
    practice: PracticeArg,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long)]
    runs: Option<u64>,
    /// Replications per world (until-win).
    #[arg(long, default_value_t = 20)]
    iterations: u64,
    /// Worlds simulated (until-win).
    #[arg(long, default_value_t = 10_000)]
    worlds: u64,
    /// Ground truth of every world (until-win).
    #[arg(long, value_enum, default_value_t = TruthArg::H0)]
    truth: TruthArg,
    /// Also run the exact enumeration on a three-outcome toy model.
    #[arg(long)]
    enumerate: bool,
}

/// Record of one invocation. Re-running the same command line reproduces
/// every listed artifact byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub artifact_paths: Vec<String>,
    pub tool_version: String,
    pub dry_run: bool,
}

/// Optional values read from a `--config` JSON file.
#[derive(Debug, Default)]
struct FileConfig {
    rule: Option<StoppingRule>,
    raw: Map<String, Value>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path)?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Error::validation("config", format!("{}: {e}", path.display())))?;
        let Value::Object(raw) = value else {
            return Err(Error::validation("config", "top level must be a JSON object"));
        };
        let rule = if raw.contains_key("type") {
            Some(
                serde_json::from_value(Value::Object(raw.clone()))
                    .map_err(|e| Error::validation("type", e.to_string()))?,
            )
        } else {
            None
        };
        Ok(FileConfig { rule, raw })
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.raw.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::validation(key, "must be a number")),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        match self.raw.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| Error::validation(key, "must be a nonnegative integer")),
        }
    }
}

fn resolve_model(m: &ModelArgs, file: &FileConfig) -> Result<AlternativeModel> {
    let model = if m.composite {
        let v =
            m.v.or(file.f64("v")?)
                .ok_or_else(|| Error::validation("v", "--composite needs --v"))?;
        AlternativeModel::composite(v * v)
    } else if let Some(delta) = m.delta {
        AlternativeModel::precise(delta)
    } else if let Some(v) = m.v.or(file.f64("v")?) {
        AlternativeModel::composite(v * v)
    } else if let Some(v_sq) = file.f64("v_sq")? {
        AlternativeModel::composite(v_sq)
    } else if let Some(delta) = file.f64("delta")? {
        AlternativeModel::precise(delta)
    } else {
        return Err(Error::validation("delta", "give --delta, or --composite with --v"));
    };
    model.map_err(|e| Error::validation("model", e.to_string()))
}

fn resolve_monitor(r: &RuleArgs, file: &FileConfig, default_horizon: Option<u64>) -> Result<MonitorConfig> {
    let horizon = r
        .horizon
        .or(file.u64("horizon")?)
        .or(default_horizon)
        .ok_or_else(|| Error::validation("horizon", "required"))?;
    let check_every = r.check_every.or(file.u64("check_every")?).unwrap_or(1);
    let kind = r.rule.or_else(|| {
        file.rule.as_ref().map(|rule| match rule {
            StoppingRule::BfUpper { .. } => RuleKind::BfUpper,
            StoppingRule::BfTwoSided { .. } => RuleKind::BfTwoSided,
            StoppingRule::PValueMinN { .. } => RuleKind::PValue,
            _ => RuleKind::FixedHorizon,
        })
    });
    // composite rules from a config file are taken as they are
    if r.rule.is_none() {
        if let Some(rule @ (StoppingRule::All { .. } | StoppingRule::Any { .. })) = &file.rule {
            return Ok(MonitorConfig {
                rule: rule.clone(),
                horizon,
                check_every,
            });
        }
    }
    let file_k = file.rule.as_ref().and_then(StoppingRule::bf_threshold);
    let need_k = || {
        r.k.or(file_k)
            .ok_or_else(|| Error::validation("k", "a bf rule needs a threshold (--k)"))
    };
    let rule = match kind.unwrap_or(RuleKind::FixedHorizon) {
        RuleKind::FixedHorizon => StoppingRule::FixedHorizon { n_max: horizon },
        RuleKind::BfUpper => StoppingRule::BfUpper { k: need_k()? },
        RuleKind::BfTwoSided => StoppingRule::BfTwoSided { k: need_k()? },
        RuleKind::PValue => {
            let (fa, fn_) = match &file.rule {
                Some(StoppingRule::PValueMinN { alpha, n_min }) => (Some(*alpha), Some(*n_min)),
                _ => (None, None),
            };
            StoppingRule::PValueMinN {
                alpha: r.alpha.or(fa).unwrap_or(0.05),
                n_min: r.n_min.or(fn_).unwrap_or(1),
            }
        }
    };
    let cfg = MonitorConfig {
        rule,
        horizon,
        check_every,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_prior(r: &RuleArgs, file: &FileConfig) -> Result<PriorOdds> {
    let odds = r.prior_odds.or(file.f64("prior_odds")?).unwrap_or(1.0);
    PriorOdds::new(odds).map_err(|e| Error::validation("prior_odds", e.to_string()))
}

fn resolve_study(
    model: &ModelArgs,
    rule: &RuleArgs,
    runs: Option<u64>,
    reject_k: Option<f64>,
    file: &FileConfig,
    seed: u64,
    default_horizon: Option<u64>,
) -> Result<StudyConfig> {
    let model = resolve_model(model, file)?;
    let monitor = resolve_monitor(rule, file, default_horizon)?;
    let runs = runs.or(file.u64("runs")?).unwrap_or(10_000);
    let mut cfg = StudyConfig::new(model, monitor.rule.clone(), monitor.horizon, runs, seed);
    cfg.check_every = monitor.check_every;
    cfg.prior = resolve_prior(rule, file)?;
    cfg.reject_threshold_k = reject_k
        .or(file.f64("reject_k")?)
        .or(monitor.rule.bf_threshold())
        .or(rule.k)
        .unwrap_or(9.0);
    cfg.validate()?;
    Ok(cfg)
}

struct Context<'a> {
    out_dir: &'a Path,
    artifacts: Vec<String>,
}

impl Context<'_> {
    fn path(&mut self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(self.out_dir)?;
        let p = self.out_dir.join(name);
        self.artifacts.push(p.display().to_string());
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name)?;
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        fs::write(p, bytes)?;
        Ok(())
    }

    fn csv<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let p = self.path(name)?;
        let mut buf = Vec::new();
        write(&mut buf)?;
        fs::write(p, buf)?;
        Ok(())
    }
}

/// What a command hands back to the driver.
struct Outcome {
    name: &'static str,
    config: Value,
    seed: u64,
    summary: Value,
}

fn execute(cli: &Cli, ctx: &mut Context) -> Result<Outcome> {
    let seed = cli.seed.unwrap_or(7);
    match &cli.command {
        Command::Simulate(a) => {
            let file = FileConfig::load(a.config.as_deref())?;
            let seed = cli.seed.or(file.u64("seed")?).unwrap_or(seed);
            let cfg = resolve_study(&a.model, &a.rule, a.runs, a.reject_k, &file, seed, None)?;
            let config = serde_json::to_value(&cfg)?;
            if cli.dry_run {
                return Ok(Outcome {
                    name: "simulate",
                    config,
                    seed,
                    summary: json!({"valid": true}),
                });
            }
            let report = run_study_with_threads(&cfg, cli.threads)?;
            ctx.json("report.json", &report)?;
            ctx.csv("calibration.csv", |w| write_calibration_csv(&report.calibration, w))?;
            ctx.json("metrics.json", &report.metrics)?;
            Ok(Outcome {
                name: "simulate",
                config,
                seed,
                summary: serde_json::to_value(&report.metrics)?,
            })
        }
        Command::Monitor(a) => {
            let file = FileConfig::load(a.config.as_deref())?;
            let input = read_monitor_csv(fs::File::open(&a.data)?)?;
            let model = resolve_model(&a.model, &file)?;
            let monitor = resolve_monitor(&a.rule, &file, Some(input.len() as u64))?;
            let prior = resolve_prior(&a.rule, &file)?;
            let config = json!({
                "data": a.data.display().to_string(),
                "rows": input.len(),
                "model": model,
                "prior_odds": prior,
                "monitor": monitor,
            });
            if cli.dry_run {
                return Ok(Outcome {
                    name: "monitor",
                    config,
                    seed,
                    summary: json!({"valid": true}),
                });
            }
            let res = monitor.run_summaries(input.summaries()?, &model, prior)?;
            let out = json!({
                "stop_time": res.stop_time,
                "stopped_early": res.stopped_early,
                "log_bf_at_stop": res.log_bf_at_stop,
                "bf_at_stop": res.log_bf_at_stop.exp(),
                "log_post_odds_at_stop": res.log_post_odds_at_stop,
                "post_odds_at_stop": res.post_odds_at_stop,
                "p_h0_given_data": false_discovery_prob_from_log(res.log_post_odds_at_stop),
                "decision": res.decision,
            });
            ctx.json("monitor.json", &out)?;
            Ok(Outcome {
                name: "monitor",
                config,
                seed,
                summary: out,
            })
        }
        Command::LearnPrior(a) => {
            let records = read_history_csv(fs::File::open(&a.history)?)?;
            let opts = EmOptions {
                tol: a.tol,
                max_iter: a.max_iter,
                k: a.k,
            };
            let config = json!({
                "history": a.history.display().to_string(),
                "records": records.len(),
                "k": a.k,
                "tol": a.tol,
                "max_iter": a.max_iter,
            });
            if !(a.k > 0.0) || !(a.tol > 0.0) || a.max_iter == 0 {
                return Err(Error::validation("k/tol/max_iter", "must be positive"));
            }
            if cli.dry_run {
                return Ok(Outcome {
                    name: "learn-prior",
                    config,
                    seed,
                    summary: json!({"valid": true}),
                });
            }
            let (params, trace) = em_fit_default(&records, &opts)?;
            let summary = EmSummary::new(&params, &trace);
            ctx.json("prior.json", &summary)?;
            ctx.json("em_trace.json", &trace)?;
            Ok(Outcome {
                name: "learn-prior",
                config,
                seed,
                summary: serde_json::to_value(&summary)?,
            })
        }
        Command::Boundaries(a) => {
            let grid = if a.grid.is_empty() {
                boundary::log_grid(a.n_lo, a.n_hi, a.points)
            } else {
                a.grid.clone()
            };
            if grid.contains(&0) {
                return Err(Error::validation("grid", "sample sizes must be at least 1"));
            }
            let v_sq = a.v * a.v;
            let c1 = boundary::nhst_boundary(a.alpha)?;
            let (c2, c3) = boundary::precise_constants(a.delta, a.k);
            let config = json!({
                "alpha": a.alpha, "delta": a.delta, "v": a.v, "v_sq": v_sq, "k": a.k, "grid": grid,
            });
            let rows = boundary::boundary_table(&grid, a.alpha, a.delta, v_sq, a.k)?;
            if cli.dry_run {
                return Ok(Outcome {
                    name: "boundaries",
                    config,
                    seed,
                    summary: json!({"valid": true}),
                });
            }
            ctx.csv("boundaries.csv", |w| boundary::write_boundary_csv(&rows, w))?;
            let summary = json!({"c1": c1, "c2": c2, "c3": c3, "rows": rows.len()});
            ctx.json("boundaries.json", &json!({"constants": summary, "rows": rows}))?;
            Ok(Outcome {
                name: "boundaries",
                config,
                seed,
                summary,
            })
        }
        Command::Pitfalls(a) => run_pitfalls(cli, a, seed, ctx),
    }
}

fn run_pitfalls(cli: &Cli, a: &PitfallArgs, seed: u64, ctx: &mut Context) -> Result<Outcome> {
    let file = FileConfig::load(a.config.as_deref())?;
    let seed = cli.seed.or(file.u64("seed")?).unwrap_or(seed);
    let name = "pitfalls";
    let (report, config) = match a.practice {
        PracticeArg::UntilWin => {
            let model = resolve_model(&a.model, &file)?;
            let n = a.rule.horizon.or(file.u64("horizon")?).unwrap_or(100);
            let cfg = UntilWinConfig {
                n_iterations: a.iterations,
                per_test_n: n,
                k: a.rule.k.or(file.f64("k")?).unwrap_or(9.0),
                model,
                truth: match a.truth {
                    TruthArg::H0 => Hypothesis::H0,
                    TruthArg::H1 => Hypothesis::H1,
                },
                worlds: a.worlds,
                seed,
            };
            cfg.validate()?;
            let config = json!({"practice": "until_win", "until_win": cfg});
            if cli.dry_run {
                return Ok(Outcome {
                    name,
                    config,
                    seed,
                    summary: json!({"valid": true}),
                });
            }
            (
                pitfalls::demo_continuous_until_win_with_threads(&cfg, cli.threads)?,
                config,
            )
        }
        practice => {
            let mut cfg = resolve_study(&a.model, &a.rule, a.runs, None, &file, seed, Some(100))?;
            if let Some(k) = a.rule.k.or(file.f64("k")?) {
                cfg.reject_threshold_k = k;
            }
            let label = if practice == PracticeArg::Reanalysis {
                "reanalysis"
            } else {
                "optimal_stopping"
            };
            let config = json!({"practice": label, "study": cfg});
            if cli.dry_run {
                cfg.validate()?;
                return Ok(Outcome {
                    name,
                    config,
                    seed,
                    summary: json!({"valid": true}),
                });
            }
            let rep = if practice == PracticeArg::Reanalysis {
                let rescan = StoppingRule::BfUpper {
                    k: cfg.reject_threshold_k,
                };
                pitfalls::demo_reanalysis_with(&cfg, Some(&rescan), cli.threads)?
            } else {
                pitfalls::demo_optimal_stopping_with_threads(&cfg, cli.threads)?
            };
            if a.enumerate {
                let toy = DiscreteModel::new(&[(1, 2), (1, 3), (1, 6)], &[(1, 4), (1, 4), (1, 2)])?;
                let groups = if practice == PracticeArg::Reanalysis {
                    pitfalls::enumerate_reanalysis(&toy, 4.0, 6)?
                } else {
                    pitfalls::enumerate_optimal_stopping(&toy, 6)?
                };
                let summary = EnumerationSummary::from_groups(&groups);
                let listed: Vec<Value> = groups
                    .iter()
                    .map(|g| json!({"bf": g.bf.to_string(), "p_h1": g.p_h1.to_string(), "p_h0": g.p_h0.to_string(), "exact": g.holds_exactly()}))
                    .collect();
                ctx.json("enumeration.json", &json!({"summary": summary, "groups": listed}))?;
            }
            (rep, config)
        }
    };
    ctx.json("pitfall.json", &report)?;
    ctx.csv("calibration.csv", |w| write_calibration_csv(&report.calibration, w))?;
    ctx.csv("corrected_calibration.csv", |w| {
        write_calibration_csv(&report.corrected_calibration, w)
    })?;
    let mut summary = Map::new();
    summary.insert("nominal_fdr".into(), json!(report.nominal_fdr));
    summary.insert("observed_fdr".into(), json!(report.observed_fdr));
    for (k, v) in &report.metrics {
        summary.insert(k.clone(), json!(v));
    }
    Ok(Outcome {
        name,
        config,
        seed,
        summary: Value::Object(summary),
    })
}

fn write_summary(summary: &Value, format: Format, out: &mut dyn Write) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, summary)?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["key", "value"])?;
            if let Value::Object(m) = summary {
                for (k, v) in m {
                    let cell = match v {
                        Value::String(s) => s.clone(),
                        Value::Null => "NA".into(),
                        other => other.to_string(),
                    };
                    w.write_record([k.as_str(), cell.as_str()])?;
                }
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn drive(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let mut ctx = Context {
        out_dir: &cli.out_dir,
        artifacts: Vec::new(),
    };
    let outcome = execute(cli, &mut ctx)?;
    let manifest_path = cli.out_dir.join("manifest.json");
    let mut artifacts = std::mem::take(&mut ctx.artifacts);
    artifacts.push(manifest_path.display().to_string());
    let manifest = RunManifest {
        command: outcome.name.into(),
        config: outcome.config,
        seed: outcome.seed,
        artifact_paths: artifacts,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        dry_run: cli.dry_run,
    };
    fs::create_dir_all(&cli.out_dir)?;
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(manifest_path, bytes)?;
    write_summary(&outcome.summary, cli.format, stdout)
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match drive(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
