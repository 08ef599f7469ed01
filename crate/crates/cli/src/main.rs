//! `adalloc` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or trace error, 2 invalid configuration,
//! 3 assumption check failed, 4 non-finite or unbounded signal,
//! 5 Riccati iteration failed.

mod overrides;
mod plots;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use adalloc::allocator::CheckStatus;
use adalloc::scenario::{check_config, metrics, Scenario, ScenarioConfig, ScenarioTrace};
use adalloc::Error;

#[derive(Parser, Debug)]
#[command(
    name = "adalloc",
    version,
    about = "Adaptive control allocation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// JSON experiment file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set allocator.l=0` or `--set mode=open_loop`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    duration: Option<f64>,
    /// `open_loop` or `closed_loop`.
    #[arg(long)]
    mode: Option<String>,
    /// Reference-model feedback gain.
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    fault_time: Option<f64>,
    /// Uniform effectiveness after the fault.
    #[arg(long)]
    fault_level: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its trace.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Trace CSV path.
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
        /// Directory for SVG figures.
        #[arg(long)]
        plots: Option<PathBuf>,
        /// Write the metrics report as JSON.
        #[arg(long)]
        metrics_out: Option<PathBuf>,
        /// Run every `*.json` in a directory; traces go to `--out-dir`.
        #[arg(long, conflicts_with = "config")]
        batch: Option<PathBuf>,
        #[arg(long, requires = "batch")]
        out_dir: Option<PathBuf>,
        /// Worker threads for `--batch`.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
    },
    /// Validate the allocator assumptions and matrix conditions.
    Check {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Solve for the LQR gain and print diagnostics.
    Gains {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
    /// Summarise an existing trace.
    Metrics {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        trace: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::Json(_) | Error::Linalg(_) => 2,
            Error::Assumption(_) => 3,
            Error::NonFinite { .. } | Error::Unbounded { .. } => 4,
            Error::DareNoConvergence { .. } => 5,
            Error::Io(_) | Error::Csv(_) | Error::Trace(_) => 1,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(1, format!("{}: {e}", path.display()))
}

fn load_config(args: &ConfigArgs) -> CliResult<ScenarioConfig> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Failure::new(2, "--config is required"))?;
    load_config_from(path, args)
}

fn load_config_from(path: &Path, args: &ConfigArgs) -> CliResult<ScenarioConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
    for assignment in &args.set {
        overrides::apply_assignment(&mut value, assignment).map_err(|e| Failure::new(2, e))?;
    }
    let flag = |key: &str, v: serde_json::Value, value: &mut serde_json::Value| {
        overrides::set_path(value, key, v).map_err(|e| Failure::new(2, e))
    };
    if let Some(d) = args.duration {
        flag("scenario.duration", d.into(), &mut value)?;
    }
    if let Some(m) = &args.mode {
        flag("allocator.mode", m.clone().into(), &mut value)?;
    }
    if let Some(l) = args.l {
        flag("allocator.l", l.into(), &mut value)?;
    }
    overrides::apply_fault(&mut value, args.fault_time, args.fault_level)
        .map_err(|e| Failure::new(2, e))?;
    Ok(ScenarioConfig::from_json_value(value)?)
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| io_failure(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_failure(path, e)
    })
}

struct SimOutputs<'a> {
    out: &'a Path,
    plots: Option<&'a Path>,
    metrics_out: Option<&'a Path>,
}

fn simulate_one(cfg: &ScenarioConfig, outputs: &SimOutputs) -> CliResult<String> {
    let scenario = Scenario::from_config(cfg)?;
    let trace = scenario.run()?;
    let report = metrics(&trace, &scenario)?;

    // render everything before touching the filesystem
    let csv = trace.to_csv_string()?;
    let figures = match outputs.plots {
        Some(_) => plots::figures(&trace, &scenario)?,
        None => Vec::new(),
    };
    let report_json = report.to_json_pretty()?;

    write_atomic(outputs.out, csv.as_bytes())?;
    if let Some(dir) = outputs.plots {
        for (name, svg) in &figures {
            write_atomic(&dir.join(name), svg.as_bytes())?;
        }
    }
    if let Some(path) = outputs.metrics_out {
        write_atomic(path, report_json.as_bytes())?;
    }

    let mut summary = format!(
        "{} rows written to {}\n",
        trace.len(),
        outputs.out.display()
    );
    for p in &report.phases {
        summary.push_str(&format!(
            "  {:<22} rows {:>5}..{:<5} alloc err {:.3e} (rel {:.3e})  peak |u| {:.3}  theta drift {:.3e}\n",
            p.name,
            p.start_row,
            p.end_row,
            p.allocation_error_inf,
            p.allocation_error_relative,
            p.peak_u.iter().fold(0.0_f64, |a, x| a.max(*x)),
            p.theta_drift
        ));
    }
    summary.push_str(&format!(
        "  max V increase {:.3e}, worst settled tracking {:.3e}, final theta drift {:.3e}",
        report.max_lyapunov_increase, report.worst_tracking_normalized, report.theta_final_drift
    ));
    Ok(summary)
}

fn batch(dir: &Path, out_dir: &Path, args: &ConfigArgs, jobs: usize) -> CliResult<()> {
    let mut configs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::new(2, format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err(Failure::new(
            2,
            format!("no *.json configs in {}", dir.display()),
        ));
    }

    let jobs = jobs.max(1);
    let chunk = configs.len().div_ceil(jobs);
    let results: Vec<(PathBuf, CliResult<String>)> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .chunks(chunk)
            .map(|group| {
                s.spawn(move || {
                    group
                        .iter()
                        .map(|path| {
                            let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                            let out = out_dir.join(format!("{stem}.csv"));
                            let result = load_config_from(path, args).and_then(|cfg| {
                                simulate_one(
                                    &cfg,
                                    &SimOutputs {
                                        out: &out,
                                        plots: None,
                                        metrics_out: None,
                                    },
                                )
                            });
                            (path.clone(), result)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("batch worker panicked"))
            .collect()
    });

    let mut first_failure = None;
    for (path, result) in results {
        match result {
            Ok(summary) => println!("{}: {summary}", path.display()),
            Err(f) => {
                eprintln!("{}: {}", path.display(), f.message);
                first_failure.get_or_insert(f.code);
            }
        }
    }
    match first_failure {
        None => Ok(()),
        Some(code) => Err(Failure::new(code, "one or more batch configs failed")),
    }
}

fn check(args: &ConfigArgs) -> CliResult<()> {
    let cfg = load_config(args)?;
    let items = check_config(&cfg)?;
    let mut ok = true;
    for item in &items {
        let tag = match item.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Boundary => "BOUNDARY",
            CheckStatus::Fail => "FAIL",
        };
        ok &= item.status == CheckStatus::Pass;
        println!("{tag:<8} {:<28} {:.6}", item.name, item.value);
    }
    if ok {
        Ok(())
    } else {
        let failed: Vec<&str> = items
            .iter()
            .filter(|c| c.status != CheckStatus::Pass)
            .map(|c| c.name.as_str())
            .collect();
        Err(Failure::new(3, format!("failed: {}", failed.join(", "))))
    }
}

fn gains(args: &ConfigArgs, json: bool) -> CliResult<()> {
    let cfg = load_config(args)?;
    let scenario = Scenario::from_config(&cfg)?;
    let sol = &scenario.controller.solution;
    let radius = scenario.design_radius()?;
    if json {
        let rows: Vec<Vec<f64>> = (0..sol.k.rows()).map(|i| sol.k.row(i).to_vec()).collect();
        let doc = serde_json::json!({
            "k": rows,
            "iterations": sol.iterations,
            "residual": sol.residual,
            "closed_loop_radius": radius,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).map_err(Error::from)?
        );
    } else {
        println!("K ({}×{}):", sol.k.rows(), sol.k.cols());
        for i in 0..sol.k.rows() {
            let row: Vec<String> = sol.k.row(i).iter().map(|x| format!("{x:>14.10}")).collect();
            println!("  {}", row.join(" "));
        }
        println!(
            "Riccati iterations {}, residual {:.3e}",
            sol.iterations, sol.residual
        );
        println!("closed-loop spectral radius {radius:.10}");
    }
    Ok(())
}

fn metrics_cmd(args: &ConfigArgs, trace_path: &Path, out: Option<&Path>) -> CliResult<()> {
    let cfg = load_config(args)?;
    let scenario = Scenario::from_config(&cfg)?;
    let file = fs::File::open(trace_path).map_err(|e| io_failure(trace_path, e))?;
    let trace = ScenarioTrace::read_csv(file)?;
    let report = metrics(&trace, &scenario)?.to_json_pretty()?;
    match out {
        Some(path) => write_atomic(path, report.as_bytes()),
        None => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{report}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            cfg,
            out,
            plots,
            metrics_out,
            batch: Some(dir),
            out_dir,
            jobs,
        } => {
            if plots.is_some() || metrics_out.is_some() {
                log::warn!("--plots and --metrics-out are ignored with --batch");
            }
            let _ = out;
            let out_dir = out_dir.unwrap_or_else(|| dir.clone());
            batch(&dir, &out_dir, &cfg, jobs)
        }
        Command::Simulate {
            cfg,
            out,
            plots,
            metrics_out,
            ..
        } => {
            let config = load_config(&cfg)?;
            let summary = simulate_one(
                &config,
                &SimOutputs {
                    out: &out,
                    plots: plots.as_deref(),
                    metrics_out: metrics_out.as_deref(),
                },
            )?;
            println!("{summary}");
            Ok(())
        }
        Command::Check { cfg } => check(&cfg),
        Command::Gains { cfg, json } => gains(&cfg, json),
        Command::Metrics { cfg, trace, out } => metrics_cmd(&cfg, &trace, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ALLOC_ADAPT_LOG", "warn"))
        .init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
