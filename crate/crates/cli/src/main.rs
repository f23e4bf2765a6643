//! `cyclepersist`: analyze a forced planar limit cycle, verify the predicted
//! periodic solutions, or run the built-in oracle suite.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 a standing hypothesis does
//! not hold for the input (the answer is "no", not "unknown"), 3 invalid
//! invocation or configuration.

mod output;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use cyclepersist_core::model::{parse_config, SystemConfig};
use cyclepersist_core::persist::{corollary1_probe, persistence_run, PersistOptions, SectionMode};
use cyclepersist_core::pipeline::{analyze, prepare, AnalysisError};
use cyclepersist_core::degree::assess_theorem3;
use cyclepersist_core::integrate::{MAX_TOL, MIN_TOL};
use cyclepersist_core::selfcheck::{self, SelfcheckOptions};

use output::Format;
use report::{AnalysisReport, Corollary1Entry, Provenance, SelfcheckEnvelope, Status, VerifyReport};

const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "cyclepersist", version, about = "Persistence of planar limit cycles under small periodic forcing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cycle, Floquet frame, bifurcation functions and degree for one config.
    Analyze {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve for the perturbed periodic solutions over a list of ε values.
    Verify {
        config: PathBuf,
        /// Comma-separated list; defaults to `analysis.eps` of the config.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eps: Vec<f64>,
        /// Measure distances on the curved sections instead of the linearized ones.
        #[arg(long)]
        exact_sections: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run the oracle suite and print a pass/fail table.
    Selfcheck {
        /// Print the JSON report instead of the table.
        #[arg(long)]
        json: bool,
        /// Multiplies every solver tolerance (for probing the checks).
        #[arg(long, env = "CYCLEPERSIST_TOL_SCALE", default_value_t = 1.0)]
        tol_scale: f64,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// θ grid for the f0 scan and the winding number.
    #[arg(long)]
    grid: Option<usize>,
    /// Integration and quadrature tolerance, within [1e-13, 1e-3].
    #[arg(long)]
    tol: Option<f64>,
    /// Directory for the report and any CSV/SVG artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Add a `generated_at` field (seconds since the Unix epoch).
    #[arg(long)]
    timestamp: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("CYCLEPERSIST_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("CYCLEPERSIST_THREADS must be a positive integer, got `{v}`")))?;
    if n == 0 {
        return Err(Failure::usage("CYCLEPERSIST_THREADS must be a positive integer, got `0`"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn load(path: &Path, common: &Common) -> Result<(SystemConfig, String), Failure> {
    let text = std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let hash = report::sha256_hex(&text);
    let text = String::from_utf8(text).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Some(g) = common.grid {
        if g < 64 {
            return Err(Failure::usage("--grid must be at least 64"));
        }
        cfg.analysis.theta_grid = g;
        cfg.analysis.degree_grid = g;
    }
    if let Some(t) = common.tol {
        if !(MIN_TOL..=MAX_TOL).contains(&t) {
            return Err(Failure::usage(format!("--tol must lie in [{MIN_TOL:e}, {MAX_TOL:e}]")));
        }
        cfg.analysis.tol = t;
    }
    Ok((cfg, hash))
}

fn status_of(e: &AnalysisError) -> Status {
    if e.is_hypothesis_failure() {
        Status::HypothesisFailure
    } else {
        Status::NumericalFailure
    }
}

fn now() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
}

fn check_format(common: &Common) -> Result<(), Failure> {
    if common.out.is_none() && (common.format.csv() || common.format.svg()) {
        return Err(Failure::usage("--format csv/svg/all needs --out <dir>"));
    }
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?;
    }
    Ok(())
}

/// The JSON goes to `<out>/<name>` when `--out` is given, to stdout otherwise.
fn emit_json(common: &Common, name: &str, json: &str) -> Result<(), Failure> {
    match &common.out {
        Some(dir) => {
            if common.format.json() {
                output::write_text(&dir.join(name), json).map_err(|m| Failure { code: 1, message: m })?;
            }
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn report_failure(status: Status, error: &str) {
    let kind = match status {
        Status::HypothesisFailure => "hypothesis failure",
        _ => "numerical failure",
    };
    eprintln!("error ({kind}): {error}");
}

fn cmd_analyze(config: &Path, common: &Common) -> Result<u8, Failure> {
    check_format(common)?;
    let (cfg, hash) = load(config, common)?;
    let mut rep = AnalysisReport::new(Provenance {
        config_sha256: hash,
        system: cfg.system.name().to_string(),
        settings: cfg.analysis.clone(),
        persist: None,
    });
    if common.timestamp {
        rep.generated_at = now();
    }
    let analysis = analyze(&cfg.system, &cfg.analysis);
    match &analysis {
        Ok(a) => {
            let s = a.summary();
            rep.cycle = Some(s.cycle);
            rep.floquet = Some(s.floquet);
            rep.bifurcation = Some(s.bifurcation);
            rep.degree = Some(s.degree);
        }
        Err(e) => {
            rep.status = status_of(e);
            rep.error = Some(e.to_string());
            report_failure(rep.status, &e.to_string());
        }
    }
    emit_json(common, "analysis.json", &report::to_json(&rep))?;
    if let (Some(dir), Ok(a)) = (&common.out, &analysis) {
        output::write_analysis_artifacts(dir, a, common.format).map_err(|m| Failure { code: 1, message: m })?;
    }
    Ok(rep.status.exit_code())
}

fn cmd_verify(config: &Path, eps: &[f64], exact: bool, common: &Common) -> Result<u8, Failure> {
    check_format(common)?;
    let (cfg, hash) = load(config, common)?;
    let eps_grid: Vec<f64> = if eps.is_empty() { cfg.analysis.eps.clone() } else { eps.to_vec() };
    if eps_grid.is_empty() {
        return Err(Failure::usage("no ε values: pass --eps or set analysis.eps"));
    }
    if let Some(bad) = eps_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Failure::usage(format!("ε must be positive, got {bad}")));
    }
    let opts = PersistOptions {
        tol: (10.0 * cfg.analysis.tol).max(1e-12),
        profile_grid: 128,
        sections: if exact { SectionMode::Exact } else { SectionMode::Linearized },
        ..PersistOptions::default()
    };
    let mut settings = cfg.analysis.clone();
    settings.eps = eps_grid.clone();
    let mut rep = VerifyReport::new(Provenance {
        config_sha256: hash,
        system: cfg.system.name().to_string(),
        settings,
        persist: Some(opts),
    });
    if common.timestamp {
        rep.generated_at = now();
    }

    let (_, _, bif, profile) = match prepare(&cfg.system, &cfg.analysis) {
        Ok(p) => p,
        Err(e) => {
            rep.status = status_of(&e);
            rep.error = Some(e.to_string());
            report_failure(rep.status, &e.to_string());
            emit_json(common, "verify.json", &report::to_json(&rep))?;
            return Ok(rep.status.exit_code());
        }
    };
    rep.pr1 = profile.pr1.clone();
    match assess_theorem3(&bif, &profile, cfg.analysis.degree_grid) {
        Ok(d) => rep.degree = Some(d),
        Err(e) => rep.degree_error = Some(e.to_string()),
    }
    let run = persistence_run(&bif, &profile, &eps_grid, &opts);
    for p in profile.pr1.iter().filter(|p| !p.holds) {
        let entry = match corollary1_probe(&bif, &profile, p.theta0, eps_grid[0], &opts) {
            Ok(probe) => Corollary1Entry { theta0: p.theta0, probe: Some(probe), error: None },
            Err(e) => Corollary1Entry { theta0: p.theta0, probe: None, error: Some(e.to_string()) },
        };
        rep.corollary1.push(entry);
    }
    let failed: Vec<String> = run
        .results
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("eps = {}: {e}", r.eps)))
        .collect();
    for f in &failed {
        eprintln!("error (numerical failure): {f}");
    }
    if !failed.is_empty() {
        rep.status = Status::NumericalFailure;
        rep.error = Some(failed.join("; "));
    }
    rep.persistence = Some(run);
    emit_json(common, "verify.json", &report::to_json(&rep))?;
    if let (Some(dir), Some(run)) = (&common.out, &rep.persistence) {
        output::write_verify_artifacts(dir, run, common.format).map_err(|m| Failure { code: 1, message: m })?;
    }
    Ok(rep.status.exit_code())
}

fn cmd_selfcheck(json: bool, tol_scale: f64) -> Result<u8, Failure> {
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return Err(Failure::usage(format!("tolerance scale must be positive, got {tol_scale}")));
    }
    let start = Instant::now();
    let rep = selfcheck::run(&SelfcheckOptions { tol_scale });
    if json {
        let env = SelfcheckEnvelope {
            schema_version: report::SCHEMA_VERSION,
            kind: "selfcheck",
            tool: report::Tool::default(),
            report: &rep,
        };
        print!("{}", report::to_json(&env));
    } else {
        print!("{}", selfcheck::render_table(&rep));
    }
    eprintln!("selfcheck finished in {:.1} s", start.elapsed().as_secs_f64());
    Ok(if rep.pass { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_threads().and_then(|_| match &cli.command {
        Command::Analyze { config, common } => cmd_analyze(config, common),
        Command::Verify {
            config,
            eps,
            exact_sections,
            common,
        } => cmd_verify(config, eps, *exact_sections, common),
        Command::Selfcheck { json, tol_scale } => cmd_selfcheck(*json, *tol_scale),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
