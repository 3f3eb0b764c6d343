use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use wildmap::basin::{basin_sample, BasinConfig};
use wildmap::cylinder::{cylinder_interval, measure_cn};
use wildmap::orbit::{iterate, OrbitMode};
use wildmap::plot::{render_svg, sample_graph, write_csv};
use wildmap::rational::{self, Rational};
use wildmap::verifier::{check_exp_uniform, check_p1_p4, dichotomy_scan};
use wildmap::{Error, ExpansionConfig, FullBranchMap, ProportionSchedule};

#[derive(Parser)]
#[command(name = "wildmap", version, about = "Full-branch interval maps with a wild attractor at 0")]
struct Cli {
    #[command(flatten)]
    map: MapArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MapArgs {
    /// Expansion base c > 1, as "num/den" or a finite decimal.
    #[arg(long, global = true, value_parser = parse_rational)]
    c: Option<Rational>,
    /// Geometric schedule p_n = 1 - beta 2^-n.
    #[arg(long, global = true, value_parser = parse_rational, conflicts_with_all = ["p_table", "p_const"])]
    beta: Option<Rational>,
    /// File of proportions p_1, p_2, ... (one per line or comma separated).
    #[arg(long, global = true, conflicts_with = "p_const")]
    p_table: Option<PathBuf>,
    /// Constant proportion p_n = p.
    #[arg(long, global = true, value_parser = parse_rational)]
    p_const: Option<Rational>,
    /// Require 1 < c < 2 and a certified schedule.
    #[arg(long, global = true)]
    strict: bool,
    #[arg(long, global = true)]
    quad_tol: Option<f64>,
    #[arg(long, global = true)]
    max_float_branch: Option<u32>,
    /// JSON file with the same keys as these flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the parameters and build the first branches.
    Build {
        #[arg(long, default_value_t = 30)]
        branches: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Graph of f over the first branches.
    Plot {
        #[arg(long, default_value_t = 6)]
        branches: u32,
        #[arg(long, default_value_t = 400)]
        samples_per_branch: usize,
        #[arg(long, value_enum, default_value_t = PlotFormat::Svg)]
        format: PlotFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate one orbit and write it as CSV.
    Orbit {
        #[arg(long, value_parser = parse_rational)]
        x0: Rational,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = ModeArg::Float)]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo statistics of the basin of 0.
    Basin {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        checkpoints: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1e-6")]
        delta: Vec<f64>,
        /// Worker threads; the output does not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Start every sample at this point instead of sampling uniformly.
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact cylinder interval of an itinerary.
    Cylinder {
        #[arg(long, value_delimiter = ',', required = true)]
        seq: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified bounds on the measure of C_n.
    Measure {
        #[arg(long)]
        depth: u32,
        #[arg(long, default_value_t = 40)]
        kmax: u32,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum branch slopes for c >= 2.
    Dichotomy {
        #[arg(long, default_value_t = 40)]
        n: u32,
        #[arg(long, value_parser = parse_rational, default_value = "1/100")]
        epsilon: Rational,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Branch property sweep and exact expansion ratios.
    Verify {
        #[arg(long, default_value_t = 30)]
        branches: u32,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotFormat {
    Svg,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Float,
    ExactAffine,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

/// Config file layout; rationals may be strings or JSON numbers.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    c: Option<serde_json::Value>,
    beta: Option<serde_json::Value>,
    p_const: Option<serde_json::Value>,
    /// A path or an inline array.
    p_table: Option<serde_json::Value>,
    strict: Option<bool>,
    quad_tol: Option<f64>,
    max_float_branch: Option<u32>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_usage() { 2 } else { 3 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 3, message: format!("i/o error: {e}") }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn json_rational(v: &serde_json::Value, key: &str) -> Result<Rational, Failure> {
    let text = match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Number(n) => n.to_string(),
        _ => return Err(usage(format!("config key {key}: expected a rational"))),
    };
    rational::parse(&text).map_err(|e| usage(format!("config key {key}: {e}")))
}

fn read_table(path: &Path) -> Result<ProportionSchedule, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(ProportionSchedule::parse_table(&text)?)
}

fn build_config(args: &MapArgs) -> Result<ExpansionConfig, Failure> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };

    let c = match (&args.c, &file.c) {
        (Some(c), _) => c.clone(),
        (None, Some(v)) => json_rational(v, "c")?,
        (None, None) => rational::ratio(3, 2),
    };

    let schedule = if let Some(beta) = &args.beta {
        ProportionSchedule::geometric(beta.clone())?
    } else if let Some(path) = &args.p_table {
        read_table(path)?
    } else if let Some(p) = &args.p_const {
        ProportionSchedule::constant(p.clone())?
    } else {
        let chosen = [file.beta.is_some(), file.p_table.is_some(), file.p_const.is_some()];
        if chosen.iter().filter(|&&b| b).count() > 1 {
            return Err(usage("config: give only one of beta, p_table, p_const"));
        }
        if let Some(v) = &file.beta {
            ProportionSchedule::geometric(json_rational(v, "beta")?)?
        } else if let Some(v) = &file.p_const {
            ProportionSchedule::constant(json_rational(v, "p_const")?)?
        } else if let Some(v) = &file.p_table {
            match v {
                serde_json::Value::String(path) => read_table(Path::new(path))?,
                serde_json::Value::Array(items) => ProportionSchedule::table(
                    items
                        .iter()
                        .map(|item| json_rational(item, "p_table"))
                        .collect::<Result<_, _>>()?,
                )?,
                _ => return Err(usage("config key p_table: expected a path or an array")),
            }
        } else {
            ProportionSchedule::geometric(rational::ratio(1, 2))?
        }
    };

    let mut config = ExpansionConfig::new(c, schedule).strict(args.strict || file.strict.unwrap_or(false));
    if let Some(tol) = args.quad_tol.or(file.quad_tol) {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(usage("quad-tol must be a positive number"));
        }
        config.quad_tol = tol;
    }
    config.max_float_branch = args.max_float_branch.or(file.max_float_branch);
    Ok(config)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => {
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = build_config(&cli.map)?;
    match cli.command {
        Command::Build { branches, out } => {
            if branches == 0 {
                return Err(usage("--branches must be at least 1"));
            }
            let report = wildmap::validate(&config, branches);
            emit(&out, &to_json(&report))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if !report.passed {
                let failed: Vec<_> = report.failures().map(|c| format!("{} ({})", c.name, c.detail)).collect();
                return Err(usage(format!("validation failed: {}", failed.join("; "))));
            }
            let map = FullBranchMap::new(config)?;
            for n in 1..=branches {
                map.branch(n)?;
            }
        }
        Command::Plot { branches, samples_per_branch, format, out } => {
            let map = FullBranchMap::new(config)?;
            let samples = sample_graph(&map, branches, samples_per_branch)?;
            let body = match format {
                PlotFormat::Svg => render_svg(&map, branches, &samples)?,
                PlotFormat::Csv => {
                    let mut buf = Vec::new();
                    write_csv(&samples, &mut buf)?;
                    String::from_utf8(buf).expect("ascii csv")
                }
            };
            emit(&out, &body)?;
        }
        Command::Orbit { x0, steps, mode, out } => {
            let map = FullBranchMap::new(config)?;
            let mode = match mode {
                ModeArg::Float => OrbitMode::Float,
                ModeArg::ExactAffine => OrbitMode::ExactAffine,
            };
            let record = iterate(&map, &x0, steps, mode)?;
            let mut buf = Vec::new();
            record.write_csv(&mut buf)?;
            emit(&out, &String::from_utf8(buf).expect("ascii csv"))?;
            eprintln!("{}", record.summary_json());
        }
        Command::Basin { samples, seed, checkpoints, delta, threads, x0, out } => {
            let map = FullBranchMap::new(config)?;
            let mut basin = BasinConfig::new(samples, seed, checkpoints, delta);
            basin.threads = threads;
            basin.forced_x0 = x0;
            let stats = basin_sample(&map, &basin)?;
            emit(&out, &to_json(&stats))?;
        }
        Command::Cylinder { seq, out } => {
            let map = FullBranchMap::new(config)?;
            let cylinder = cylinder_interval(&map, &seq)?;
            emit(&out, &to_json(&cylinder.to_json()))?;
        }
        Command::Measure { depth, kmax, tol, out } => {
            let map = FullBranchMap::new(config)?;
            let report = measure_cn(&map, depth, kmax, tol)?;
            emit(&out, &to_json(&report.to_json()))?;
        }
        Command::Dichotomy { n, epsilon, format, out } => {
            let report = dichotomy_scan(&config, n, &epsilon)?;
            let body = match format {
                ReportFormat::Json => to_json(&report),
                ReportFormat::Table => report.to_table(),
            };
            emit(&out, &body)?;
        }
        Command::Verify { branches, grid, tol, format, out } => {
            let map = FullBranchMap::new(config)?;
            let properties = check_p1_p4(&map, 1..=branches, grid, tol)?;
            let ratios = (1..=branches)
                .map(|n| check_exp_uniform(&map, n))
                .collect::<Result<Vec<_>, _>>()?;
            let passed = properties.passed && ratios.iter().all(|r| r.passed);
            let body = match format {
                ReportFormat::Json => to_json(&serde_json::json!({
                    "properties": properties,
                    "exp_uniform": ratios,
                    "passed": passed,
                })),
                ReportFormat::Table => {
                    let mut s = properties.to_table();
                    s.push_str("exact ratios |I-|/|L| = lambda/p_n and |I+|/|R| >= lambda/p_n: ");
                    s.push_str(if ratios.iter().all(|r| r.passed) { "ok\n" } else { "FAIL\n" });
                    s
                }
            };
            emit(&out, &body)?;
            if !passed {
                return Err(Failure { code: 3, message: "property checks failed".into() });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wildmap: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
