//! `longigate` command-line driver.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use longigate::experiments::{plan_point, points, run_sweep, SweepSpec};
use longigate::model::units::{to_mhz, to_ns};
use longigate::selftest::{run_selftest, Perturbation};
use serde_json::{json, Value};
use thiserror::Error;

const OUT_ENV: &str = "LONGIGATE_OUT";
const DEFAULT_OUT: &str = "results";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: not valid JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("config key `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("--override: {0}")]
    Override(String),
    #[error("unphysical parameters: {0}")]
    Physics(String),
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Experiment(#[from] longigate::experiments::ExperimentError),
}

#[derive(Debug, Parser)]
#[command(name = "longigate", version, about = "Longitudinal-coupling controlled-phase gate studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Replace a config value; KEY is a dotted path, VALUE is JSON or a bare string.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured study and write `<study>.csv` and `<study>.json`.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory [default: config `output_dir`, then $LONGIGATE_OUT, then ./results].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads [default: all cores].
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check the config and print the planned schedules without simulating.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the fast invariant suite.
    Selftest {
        #[arg(long, hide = true)]
        perturb: Option<PerturbArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PerturbArg {
    DephasingConvention,
}

fn load(args: &ConfigArgs) -> Result<SweepSpec, CliError> {
    let path = &args.config;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.clone(), source })?;
    for o in &args.overrides {
        let (key, raw) = o.split_once('=').ok_or_else(|| CliError::Override(format!("`{o}` is not KEY=VALUE")))?;
        config::apply_override(&mut value, key.trim(), raw)?;
    }
    config::parse(value)?.into_spec()
}

fn output_dir(flag: Option<PathBuf>, spec: &SweepSpec) -> PathBuf {
    flag.or_else(|| spec.output.clone())
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn emit(v: Value) {
    println!("{v}");
}

fn fatal(command: &str, e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    emit(json!({"command": command, "status": "error", "error": e.to_string()}));
    ExitCode::from(1)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_run(args: &ConfigArgs, out: Option<PathBuf>, jobs: Option<usize>) -> ExitCode {
    let spec = match load(args) {
        Ok(s) => s,
        Err(e) => return fatal("run", &e),
    };
    let dir = output_dir(out, &spec);
    let result = match run_sweep(&spec, jobs) {
        Ok(r) => r,
        Err(e) => return fatal("run", &e.into()),
    };
    let (csv, prov) = match result.write(&dir) {
        Ok(p) => p,
        Err(e) => return fatal("run", &e.into()),
    };
    let failed = result.failed();
    let rows = result.rows.len();
    for r in result.rows.iter().filter(|r| !r.is_ok()) {
        eprintln!("{} = {} [{}]: {}", spec.study.axis_label(), r.axis, r.series, r.status);
    }
    let status = match failed {
        0 => "ok",
        f if f == rows => "failed",
        _ => "partial",
    };
    emit(json!({
        "command": "run",
        "study": spec.study.name(),
        "status": status,
        "rows": rows,
        "failed": failed,
        "excluded": result.excluded(),
        "csv": display(&csv),
        "provenance": display(&prov),
        "summary": result.provenance.summary,
    }));
    match status {
        "ok" => ExitCode::SUCCESS,
        "partial" => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn cmd_validate(args: &ConfigArgs) -> ExitCode {
    let spec = match load(args) {
        Ok(s) => s,
        Err(e) => return fatal("validate", &e),
    };
    let pts = match points(&spec) {
        Ok(p) => p,
        Err(e) => return fatal("validate", &e.into()),
    };
    let mut planned = Vec::new();
    let (mut errors, mut excluded) = (0, 0);
    for p in &pts {
        let mut entry = json!({"axis": p.axis, "series": p.series, "variant": p.variant});
        if let Some(reason) = &p.excluded {
            excluded += 1;
            eprintln!("{} = {}: excluded: {reason}", spec.study.axis_label(), p.axis);
            entry["status"] = json!(format!("excluded: {reason}"));
        } else {
            match plan_point(&spec, p) {
                Ok(s) => {
                    eprintln!(
                        "{} = {} [{}]: t_g = {:.4} ns, n = {}, J = {:.6} MHz x 2pi, theta' = {:.6} rad",
                        spec.study.axis_label(),
                        p.axis,
                        p.series,
                        to_ns(s.t_g),
                        s.n,
                        to_mhz(s.j_bar),
                        s.theta_achieved
                    );
                    entry["t_g_ns"] = json!(to_ns(s.t_g));
                    entry["n"] = json!(s.n);
                    entry["j_bar_mhz_over_2pi"] = json!(to_mhz(s.j_bar));
                    entry["theta_achieved_rad"] = json!(s.theta_achieved);
                    entry["status"] = json!("ok");
                }
                Err(e) => {
                    errors += 1;
                    eprintln!("{} = {}: error: {e}", spec.study.axis_label(), p.axis);
                    entry["status"] = json!(format!("error: {e}"));
                }
            }
        }
        planned.push(entry);
    }
    let ok = errors == 0 && excluded < pts.len();
    emit(json!({
        "command": "validate",
        "study": spec.study.name(),
        "status": if ok { "ok" } else { "error" },
        "points": planned,
    }));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn cmd_selftest(perturb: Option<PerturbArg>) -> ExitCode {
    let perturb = perturb.map(|p| match p {
        PerturbArg::DephasingConvention => Perturbation::DephasingConvention,
    });
    let report = run_selftest(perturb);
    for c in &report.checks {
        eprintln!(
            "{} {}: {:.3e} (tolerance {:.0e}) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.detail
        );
    }
    let passed = report.passed();
    emit(json!({
        "command": "selftest",
        "status": if passed { "ok" } else { "failed" },
        "failures": report.failures(),
        "checks": report.checks.len(),
    }));
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config, out, jobs } => cmd_run(&config, out, jobs),
        Command::Validate { config } => cmd_validate(&config),
        Command::Selftest { perturb } => cmd_selftest(perturb),
    }
}
