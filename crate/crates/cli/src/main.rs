use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lapcens::distributions::{tw0_to_tw, tw_to_tw0, Tw0Params, TweedieParams};
use lapcens::input::{read_csv_column, read_lines};
use lapcens::montecarlo::{
    bundled_table, format_significant, run_experiment, BundledTable, ConversionRow, ExperimentPlan,
    DESK_SCALE_REPLICATIONS,
};
use lapcens::{default_registry, DistributionSpec, Error, FitSummary, GofOutcome, RngStream, Sample};
use serde_json::{json, Value};

/// Laplace-transform censoring estimators and goodness-of-fit tests.
///
/// Exit codes: 0 success, 1 input/parse/IO error, 2 statistical regime or
/// degenerate-data error.
#[derive(Parser, Debug)]
#[command(name = "lapcens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate parameters of a family (ps, tweedie, jacobi).
    Fit(DataArgs),
    /// Fit and run the goodness-of-fit test.
    Gof(DataArgs),
    /// Draw a seeded sample, one value per line.
    Sample {
        /// Distribution spec such as `ps:0.5,15`, `tw0:1,1,0.1` or `pa0:5,2,0.1`.
        spec: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a Monte Carlo plan from a JSON file or a bundled table.
    Experiment {
        /// JSON plan or single config.
        config: Option<PathBuf>,
        /// Bundled table: 1-7 or `coverage`.
        #[arg(long, conflicts_with = "config")]
        table: Option<String>,
        /// Use the reduced replication count.
        #[arg(long)]
        desk_scale: bool,
        #[arg(long)]
        replications: Option<usize>,
        /// Overrides the base seed of every config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Write `<plan name>.csv` and `<plan name>.json` here (`report` when unnamed).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Convert between Tweedie parametrizations.
    #[command(allow_negative_numbers = true)]
    Convert {
        #[arg(value_enum)]
        from: Parametrization,
        a: f64,
        b: f64,
        c: f64,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    family: String,
    /// Input file; `-` or absent reads stdin.
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Read this column of a headed CSV file instead of one value per line.
    #[arg(long)]
    column: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Human,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Parametrization {
    /// `(mu, w, p)` to `(gamma, lambda, theta)`.
    Tw0,
    /// `(gamma, lambda, theta)` to `(mu, w, p)`.
    Tw,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = run(cli.command, &mut out).and_then(|()| out.flush().map_err(Error::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = out.flush();
            drop(out);
            let obj = json!({ "error": e.kind(), "message": e.to_string() });
            println!("{obj}");
            eprintln!("lapcens: {e}");
            ExitCode::from(if e.is_statistical() { 2 } else { 1 })
        }
    }
}

fn run(command: Command, out: &mut impl Write) -> Result<(), Error> {
    match command {
        Command::Fit(args) => cmd_fit(&args, false, out),
        Command::Gof(args) => cmd_fit(&args, true, out),
        Command::Sample { spec, n, seed } => cmd_sample(&spec, n, seed, out),
        Command::Experiment {
            config,
            table,
            desk_scale,
            replications,
            seed,
            format,
            out_dir,
        } => {
            let source = match (config, table) {
                (Some(path), _) => Source::File(path),
                (None, Some(t)) => Source::Table(t),
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "give a config file or --table".into(),
                    ))
                }
            };
            let reps = replications.or(desk_scale.then_some(DESK_SCALE_REPLICATIONS));
            cmd_experiment(source, reps, seed, format.unwrap_or(Format::Csv), out_dir, out)
        }
        Command::Convert {
            from,
            a,
            b,
            c,
            format,
        } => cmd_convert(from, [a, b, c], format.unwrap_or(Format::Human), out),
    }
}

fn read_sample(args: &DataArgs) -> Result<Sample, Error> {
    let reader: Box<dyn Read> = match &args.input {
        Some(p) if p.as_os_str() != "-" => Box::new(File::open(p).map_err(|e| {
            Error::Io(format!("{}: {e}", p.display()))
        })?),
        _ => Box::new(io::stdin().lock()),
    };
    match &args.column {
        Some(col) => read_csv_column(reader, col),
        None => read_lines(reader),
    }
}

fn cmd_fit(args: &DataArgs, with_gof: bool, out: &mut impl Write) -> Result<(), Error> {
    let family = default_registry().get(&args.family)?;
    let sample = read_sample(args)?;
    let gof = if with_gof {
        Some(family.gof(&sample, args.alpha)?)
    } else {
        None
    };
    let fit = match (family.fit(&sample, args.alpha), &gof) {
        (Ok(fit), _) => fit,
        // the statistic can exist when the point estimates do not
        (Err(e), Some(g)) if e.is_statistical() => return emit_gof_only(args, &sample, g, &e, out),
        (Err(e), _) => return Err(e),
    };
    let value = fit.to_json(gof.as_ref());
    match args.format.unwrap_or(Format::Json) {
        Format::Json => writeln!(out, "{value}")?,
        Format::Csv => write_flat_csv(&value, out)?,
        Format::Human => write_human(&fit, &value, out)?,
    }
    Ok(())
}

fn emit_gof_only(
    args: &DataArgs,
    sample: &Sample,
    gof: &GofOutcome,
    fit_error: &Error,
    out: &mut impl Write,
) -> Result<(), Error> {
    let value = json!({
        "family": args.family,
        "n": sample.len(),
        "alpha": gof.alpha,
        "t_stat": gof.statistic,
        "sigma_hat": gof.sigma_hat,
        "z": gof.z,
        "p_value": gof.p_value,
        "reject": gof.reject,
        "fit_error": fit_error.kind(),
    });
    match args.format.unwrap_or(Format::Json) {
        Format::Json => writeln!(out, "{value}")?,
        Format::Csv => write_flat_csv(&value, out)?,
        Format::Human => writeln!(
            out,
            "family: {}  n = {}  (no point estimates: {fit_error})\n  GOF: T = {:.6}  sigma = {:.6}  z = {:.4}  p = {:.4}  reject at {}: {}",
            args.family,
            sample.len(),
            gof.statistic,
            gof.sigma_hat,
            gof.z,
            gof.p_value,
            gof.alpha,
            gof.reject
        )?,
    }
    Ok(())
}

fn flat_fields(value: &Value) -> Vec<(String, String)> {
    let mut fields = Vec::new();
    if let Value::Object(map) = value {
        for (k, v) in map {
            match v {
                Value::Array(items) if k.starts_with("ci_") => {
                    fields.push((format!("{k}_lo"), items[0].to_string()));
                    fields.push((format!("{k}_hi"), items[1].to_string()));
                }
                Value::Array(_) if k == "cov" => {}
                Value::Array(items) => {
                    let joined: Vec<String> =
                        items.iter().map(|i| i.as_str().unwrap_or("").to_string()).collect();
                    fields.push((k.clone(), joined.join(";")));
                }
                Value::String(s) => fields.push((k.clone(), s.clone())),
                Value::Null => fields.push((k.clone(), String::new())),
                other => fields.push((k.clone(), other.to_string())),
            }
        }
    }
    fields
}

fn write_flat_csv(value: &Value, out: &mut impl Write) -> Result<(), Error> {
    let fields = flat_fields(value);
    let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    writeln!(out, "{}", header.join(","))?;
    writeln!(out, "{}", row.join(","))?;
    Ok(())
}

fn write_human(fit: &FitSummary, value: &Value, out: &mut impl Write) -> Result<(), Error> {
    let pct = 100.0 * (1.0 - fit.alpha);
    writeln!(out, "family: {}  n = {}  A = {:.6}", fit.family, fit.n, fit.a)?;
    for p in &fit.params {
        writeln!(
            out,
            "  {:<7} {:>12.6}  se {:>10.6}  {pct:.0}% CI [{:.6}, {:.6}]",
            p.name, p.estimate, p.se, p.ci[0], p.ci[1]
        )?;
    }
    if let Some(z) = value.get("z").and_then(Value::as_f64) {
        writeln!(
            out,
            "  GOF: T = {:.6}  sigma = {:.6}  z = {z:.4}  p = {:.4}  reject at {}: {}",
            value["t_stat"].as_f64().unwrap_or(f64::NAN),
            value["sigma_hat"].as_f64().unwrap_or(f64::NAN),
            value["p_value"].as_f64().unwrap_or(f64::NAN),
            fit.alpha,
            value["reject"].as_bool().unwrap_or(false)
        )?;
    }
    if !fit.diagnostics.is_empty() {
        writeln!(out, "  diagnostics: {}", serde_json::to_string(&fit.diagnostics).unwrap_or_default())?;
    }
    Ok(())
}

fn cmd_sample(spec: &str, n: usize, seed: u64, out: &mut impl Write) -> Result<(), Error> {
    let spec: DistributionSpec = spec.parse()?;
    let values = spec.sample_n(n, &mut RngStream::from_seed(seed))?;
    for v in values {
        writeln!(out, "{v:?}")?;
    }
    Ok(())
}

enum Source {
    File(PathBuf),
    Table(String),
}

fn cmd_experiment(
    source: Source,
    replications: Option<usize>,
    seed: Option<u64>,
    format: Format,
    out_dir: Option<PathBuf>,
    out: &mut impl Write,
) -> Result<(), Error> {
    let plan = match source {
        Source::File(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            ExperimentPlan::from_json(&text)?
        }
        Source::Table(id) => match bundled_table(&id)? {
            BundledTable::Plan(p) => p,
            BundledTable::Conversions(rows) => {
                return emit_conversions(&rows, format, out_dir.as_deref(), out)
            }
        },
    };
    let plan = match replications {
        Some(r) => plan.with_replications(r),
        None => plan,
    };
    let plan = match seed {
        Some(s) => plan.with_seed(s),
        None => plan,
    };
    let report = run_experiment(&plan)?;
    for r in report.flagged() {
        eprintln!(
            "lapcens: warning: {} n={} {}: failure rate {:.2}% ({:?})",
            r.spec,
            r.n,
            r.metric,
            100.0 * r.failure_rate,
            r.failures
        );
    }
    match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let stem = plan.name.as_deref().unwrap_or("report");
            let csv_path = dir.join(format!("{stem}.csv"));
            let json_path = dir.join(format!("{stem}.json"));
            report.write_csv(File::create(&csv_path)?)?;
            std::fs::write(&json_path, report.to_json())?;
            writeln!(out, "{}", json!({ "csv": csv_path, "json": json_path, "config_hash": report.provenance.config_hash }))?;
        }
        None => match format {
            Format::Json => writeln!(out, "{}", report.to_json())?,
            _ => report.write_csv(&mut *out)?,
        },
    }
    Ok(())
}

fn emit_conversions(
    rows: &[ConversionRow],
    format: Format,
    out_dir: Option<&Path>,
    out: &mut impl Write,
) -> Result<(), Error> {
    let mut csv = String::from("model,gamma,lambda,theta\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            r.model,
            format_significant(r.gamma, 7),
            format_significant(r.lambda, 7),
            format_significant(r.theta, 7)
        ));
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("table-6.csv"), &csv)?;
        std::fs::write(
            dir.join("table-6.json"),
            serde_json::to_string_pretty(rows).unwrap_or_default(),
        )?;
    }
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(rows).unwrap_or_default())?,
        _ => write!(out, "{csv}")?,
    }
    Ok(())
}

fn cmd_convert(from: Parametrization, v: [f64; 3], format: Format, out: &mut impl Write) -> Result<(), Error> {
    let (names, values) = match from {
        Parametrization::Tw0 => {
            let p = tw0_to_tw(Tw0Params::new(v[0], v[1], v[2])?)?;
            (["gamma", "lambda", "theta"], [p.gamma, p.lambda, p.theta])
        }
        Parametrization::Tw => {
            let p = tw_to_tw0(TweedieParams::new(v[0], v[1], v[2])?)?;
            (["mu", "w", "p"], [p.mu, p.w, p.p])
        }
    };
    match format {
        Format::Json => {
            let obj: serde_json::Map<String, Value> = names
                .iter()
                .zip(values)
                .map(|(k, x)| (k.to_string(), json!(x)))
                .collect();
            writeln!(out, "{}", Value::Object(obj))?;
        }
        Format::Csv => {
            writeln!(out, "{}", names.join(","))?;
            let row: Vec<String> = values.iter().map(|&x| format_significant(x, 7)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Format::Human => {
            let row: Vec<String> = values.iter().map(|&x| format_significant(x, 7)).collect();
            writeln!(out, "({})", row.join(", "))?;
        }
    }
    Ok(())
}
