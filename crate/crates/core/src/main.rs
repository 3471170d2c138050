use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use barrierflow::experiment::{
    preset, run_experiment, sweep, ExperimentConfig, ExperimentOutput, Method, PRESET_NAMES,
};
use barrierflow::geometry::MirrorGeometry;
use barrierflow::oracle::{solve_barrier, solve_true, OracleResult};
use barrierflow::problem::{builtin, OuterSet};
use barrierflow::rates::{fit_rate, parse_window, read_samples, GapSource, RateModel};
use barrierflow::trajectory::fmt_float;
use barrierflow::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Log-barrier accelerated methods and their continuous-time flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Config file with `key = value` lines.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Named preset.
    #[arg(long)]
    preset: Option<String>,
    /// Override the output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Extra `key=value` overrides applied after the config or preset.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config or preset and write its trajectory, resolved config and plot script.
    Run(Source),
    /// Run a config once per value of a numeric key and summarise.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        param: String,
        /// Comma-separated values; may be empty.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Print a reference solution as one CSV or JSON row.
    Oracle {
        #[arg(long, default_value = "paper-quadratic")]
        problem: String,
        #[arg(long, default_value = "euclidean-ball")]
        geometry: String,
        #[arg(long, default_value_t = 3.0)]
        radius: f64,
        /// Solve the barrier surrogate for `c,s` instead of the original problem.
        #[arg(long, value_name = "C,S")]
        barrier: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Integrate the continuous-time flow for a preset or config.
    Dynamics(Source),
    /// Fit an empirical rate to a trajectory CSV.
    Rates {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Model::Loglog)]
        model: Model,
        /// Inclusive `lo:hi` range of k (or t).
        #[arg(long)]
        window: String,
        /// Gap column to fit.
        #[arg(long, default_value = "f_gap")]
        column: String,
        /// Fit the distance of x to this point instead of a column.
        #[arg(long, value_name = "X0,X1,..")]
        target: Option<String>,
    },
    /// List the presets.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Loglog,
    Semilog,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(src) => run_all(load(&src)?),
        Command::Dynamics(src) => {
            let cfgs = load(&src)?;
            if let Some(c) = cfgs.iter().find(|c| c.method().ok() != Some(Method::Dynamics)) {
                return Err(Error::config(
                    "algorithm",
                    format!("`{}` is not a dynamics run; use `run`", c.algorithm),
                ));
            }
            run_all(cfgs)
        }
        Command::Sweep {
            source,
            param,
            values,
        } => {
            let cfgs = load(&source)?;
            let [template] = cfgs.as_slice() else {
                return Err(Error::config("preset", "sweeps need a single-run config"));
            };
            let values: Vec<f64> = values
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| Error::config("values", format!("`{s}` is not a number"))))
                .collect::<Result<_>>()?;
            let rows = sweep(template, &param, &values)?;
            println!("value,iterations_to_tol,final_gap,error");
            for r in &rows {
                println!(
                    "{},{},{},{}",
                    fmt_float(r.value),
                    r.iterations_to_tol.map(|n| n.to_string()).unwrap_or_default(),
                    r.final_gap.map(fmt_float).unwrap_or_default(),
                    r.error.as_deref().unwrap_or("")
                );
            }
            eprintln!("summary written to {}", template.output.join("summary.csv").display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            problem,
            geometry,
            radius,
            barrier,
            tol,
            format,
        } => {
            let (outer, geom) = match geometry.as_str() {
                "euclidean-ball" => (OuterSet::EuclideanBall { radius }, MirrorGeometry::euclidean_ball(radius)?),
                "neg-entropy" => (OuterSet::Simplex { dim: 2 }, MirrorGeometry::neg_entropy(2)?),
                other => return Err(Error::config("geometry", format!("unknown geometry `{other}`"))),
            };
            let p = builtin(&problem, outer)?;
            let result = match barrier {
                Some(spec) => {
                    let (c, s) = spec
                        .split_once(',')
                        .ok_or_else(|| Error::config("barrier", "expected c,s"))?;
                    let parse = |v: &str| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::config("barrier", format!("`{v}` is not a number")))
                    };
                    solve_barrier(&p, &geom, parse(c)?, parse(s)?, tol)?
                }
                None => solve_true(&p, tol)?,
            };
            print_oracle(&result, format)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rates {
            input,
            model,
            window,
            column,
            target,
        } => {
            let source = match target {
                Some(t) => GapSource::DistanceTo(
                    t.split(',')
                        .map(|v| v.trim().parse().map_err(|_| Error::config("target", format!("`{v}` is not a number"))))
                        .collect::<Result<_>>()?,
                ),
                None => GapSource::Column(column),
            };
            let model = match model {
                Model::Loglog => RateModel::LogLog,
                Model::Semilog => RateModel::SemiLog,
            };
            let samples = read_samples(&input, &source)?;
            let fit = fit_rate(&samples, model, parse_window(&window)?)?;
            println!("slope,intercept,r2,points");
            println!(
                "{},{},{},{}",
                fmt_float(fit.slope),
                fmt_float(fit.intercept),
                fmt_float(fit.r2),
                fit.points
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name:<20} {}", preset(name)?.description);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load(src: &Source) -> Result<Vec<ExperimentConfig>> {
    let mut cfgs = match (&src.config, &src.preset) {
        (Some(path), _) => vec![read_config(path)?],
        (None, Some(name)) => preset(name)?.runs,
        (None, None) => return Err(Error::config("config", "give --config or --preset")),
    };
    let multi = cfgs.len() > 1;
    for cfg in &mut cfgs {
        for kv in &src.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::config(kv, "override must be key=value"))?;
            cfg.set(k.trim(), v)?;
        }
        if let Some(out) = &src.output {
            cfg.output = if multi {
                out.join(&cfg.algorithm)
            } else {
                out.clone()
            };
        }
    }
    Ok(cfgs)
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse(&text)
}

fn run_all(cfgs: Vec<ExperimentConfig>) -> Result<ExitCode> {
    let mut code = ExitCode::SUCCESS;
    for cfg in &cfgs {
        let out = run_experiment(cfg)?;
        report(&out);
        if out.record.error().is_some() {
            code = ExitCode::FAILURE;
        }
    }
    Ok(code)
}

fn report(out: &ExperimentOutput) {
    let rows = match &out.record {
        barrierflow::experiment::ExperimentRecord::Iterations(r) => r.rows.len(),
        barrierflow::experiment::ExperimentRecord::Dynamics(r) => r.rows.len(),
    };
    let gap = out.record.final_gap().map(fmt_float).unwrap_or_else(|| "n/a".into());
    println!(
        "{}: {} rows, final gap {gap}, {:?} -> {}",
        out.config.algorithm,
        rows,
        out.record.termination(),
        out.dir.display()
    );
    if let Some(e) = out.record.error() {
        eprintln!("run stopped early: {e} (partial trajectory written)");
    }
}

fn print_oracle(r: &OracleResult, format: Format) -> Result<()> {
    match format {
        Format::Json => {
            let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
            println!("{line}");
        }
        Format::Csv => {
            let coords: Vec<String> = (0..r.point.len()).map(|i| format!("x{i}")).collect();
            println!(
                "{},value,f_value,grad_norm,dual_norm_estimate,certificate,iterations",
                coords.join(",")
            );
            let point: Vec<String> = r.point.iter().map(|v| fmt_float(*v)).collect();
            println!(
                "{},{},{},{},{},{},{}",
                point.join(","),
                fmt_float(r.value),
                fmt_float(r.f_value),
                fmt_float(r.grad_norm),
                fmt_float(r.dual_norm_estimate),
                r.certificate,
                r.iterations
            );
        }
    }
    Ok(())
}
