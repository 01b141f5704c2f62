//! `lunepv`: command-line front end for the two-moon principal-value integral.
//!
//! Every command writes one record (CSV header plus row, or a JSON object);
//! `scan` writes a table. Floats are written with 17 significant digits.
//! Exit codes: 0 success, 2 domain or usage error, 3 finished but not converged.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lunepv_core::geometry::{classify_point, delta, BOUNDARY_TOL};
use lunepv_core::mc_oracle::mc_estimate_f_with;
use lunepv_core::{
    compare_inner, f_eval_with, i_jordan, inner_numeric, mc_estimate_inner, scan_with, Error,
    FermiParameter, McFOptions, Point, QuadConfig, ScanRow, TouchConfig,
};
use serde_json::{Map, Number, Value};

/// Default tolerance for `F(a)` when `--tol` is absent; inner integrals use
/// the library defaults.
const OUTER_TOL: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(
    name = "lunepv",
    version,
    about = "Principal-value quadrature of the two-moon quadruple integral"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Absolute and relative quadrature tolerance.
    #[arg(long, global = true, env = "LUNEPV_TOL")]
    tol: Option<f64>,

    /// Worker threads; 0 uses one per core. Results do not depend on it.
    #[arg(long, global = true, env = "LUNEPV_JOBS")]
    jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct PointArgs {
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, allow_negative_numbers = true)]
    y: f64,
}

#[derive(Args, Debug)]
struct SeedArgs {
    #[arg(long)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct TouchArgs {
    /// Half-width of the innermost excluded window around each touch height.
    #[arg(long, default_value_t = TouchConfig::default().final_window)]
    final_window: f64,
    /// Number of dyadic windows refined toward the touch heights.
    #[arg(long, default_value_t = TouchConfig::default().windows)]
    windows: u32,
}

impl TouchArgs {
    fn config(&self) -> TouchConfig {
        TouchConfig {
            final_window: self.final_window,
            windows: self.windows,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Region and sign function at a point.
    Delta {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
    },
    /// Numeric inner integral over the unit disk at (center, 0).
    Inner {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        center: f64,
    },
    /// The published closed form for the inner integral.
    Jordan {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
    },
    /// Numeric inner integrals at +a and -a against the closed form.
    Compare {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
    },
    /// The full quadruple integral F(a).
    EvalF {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        /// Integrate both moons directly instead of folding by symmetry.
        #[arg(long)]
        no_symmetry: bool,
        #[command(flatten)]
        touch: TouchArgs,
    },
    /// F(a) on an evenly spaced grid, with a tightened rerun per row.
    Scan {
        #[arg(long, allow_negative_numbers = true)]
        a_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        a_max: f64,
        #[arg(long)]
        steps: usize,
        #[command(flatten)]
        touch: TouchArgs,
    },
    /// Seeded Monte Carlo estimates.
    Oracle {
        #[command(subcommand)]
        target: OracleTarget,
    },
}

#[derive(Subcommand, Debug)]
enum OracleTarget {
    /// Inner integral over the unit disk at (center, 0).
    Inner {
        #[command(flatten)]
        p: PointArgs,
        #[arg(long, allow_negative_numbers = true)]
        center: f64,
        #[command(flatten)]
        s: SeedArgs,
    },
    /// F(a) by nested sampling.
    F {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[command(flatten)]
        s: SeedArgs,
        /// Skip outer samples within this distance of a touch height.
        #[arg(long)]
        exclude_window: Option<f64>,
        #[arg(long, default_value_t = 1)]
        inner_draws: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Field {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Num(v) => format!("{v:.16e}"),
            Field::Int(v) => v.to_string(),
            Field::Bool(v) => v.to_string(),
            Field::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Field::Num(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Field::Int(v) => Value::from(*v),
            Field::Bool(v) => Value::Bool(*v),
            Field::Text(s) => Value::String(s.clone()),
            Field::Missing => Value::Null,
        }
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Num(v)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl<T: Into<Field>> From<Option<T>> for Field {
    fn from(v: Option<T>) -> Self {
        v.map_or(Field::Missing, Into::into)
    }
}

type Record = Vec<(&'static str, Field)>;

/// Rows sharing one header.
struct Table {
    rows: Vec<Record>,
    /// JSON shape: a bare object for single-record commands.
    single: bool,
}

impl Table {
    fn one(record: Record) -> Self {
        Self {
            rows: vec![record],
            single: true,
        }
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::new();
                if let Some(first) = self.rows.first() {
                    out += &first.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",");
                    out.push('\n');
                }
                for row in &self.rows {
                    out += &row
                        .iter()
                        .map(|(_, v)| v.csv())
                        .collect::<Vec<_>>()
                        .join(",");
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let objects: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        Value::Object(
                            row.iter()
                                .map(|(k, v)| (k.to_string(), v.json()))
                                .collect::<Map<_, _>>(),
                        )
                    })
                    .collect();
                let value = if self.single {
                    objects.into_iter().next().unwrap_or(Value::Null)
                } else {
                    Value::Array(objects)
                };
                let mut s = serde_json::to_string_pretty(&value).expect("JSON values serialize");
                s.push('\n');
                s
            }
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

struct Output {
    table: Table,
    converged: bool,
}

fn header(command: &str) -> Record {
    vec![
        ("command", command.into()),
        ("version", env!("CARGO_PKG_VERSION").into()),
    ]
}

fn tolerance(cfg: &QuadConfig) -> Record {
    vec![
        ("abs_tol", cfg.abs_tol.into()),
        ("rel_tol", cfg.rel_tol.into()),
    ]
}

fn quad_config(tol: Option<f64>, default: QuadConfig) -> Result<QuadConfig, Failure> {
    let cfg = tol.map_or(default, |t| QuadConfig::with_tol(t, t));
    cfg.validate()?;
    Ok(cfg)
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
fn grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>, Failure> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Failure::Usage("--a-min and --a-max must be finite".into()));
    }
    match steps {
        0 => Err(Failure::Usage("--steps must be at least 1".into())),
        1 => Ok(vec![lo]),
        n => Ok((0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()),
    }
}

fn scan_record(row: &ScanRow) -> Record {
    let f = row.f.as_ref();
    vec![
        ("a", row.a.into()),
        ("F", f.map(|f| f.value).into()),
        ("abs_err", f.map(|f| f.abs_err).into()),
        ("evals", f.map(|f| f.evals).into()),
        ("converged", row.converged().into()),
        ("refinement_delta", f.map(|_| row.refinement_delta).into()),
    ]
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let done = |record: Record, converged: bool| {
        Ok(Output {
            table: Table::one(record),
            converged,
        })
    };
    match &cli.command {
        Command::Delta { p, a } => {
            let fa = FermiParameter::new(*a)?;
            let point = Point::new(p.x, p.y);
            let region = classify_point(point, fa, BOUNDARY_TOL)?;
            let d = delta(point, fa)?;
            let mut r = header("delta");
            r.extend([
                ("x", p.x.into()),
                ("y", p.y.into()),
                ("a", (*a).into()),
                ("region", format!("{region:?}").as_str().into()),
                (
                    "delta",
                    Field::Text(if d > 0 {
                        format!("+{d}")
                    } else {
                        d.to_string()
                    }),
                ),
            ]);
            done(r, true)
        }
        Command::Inner { p, center } => {
            let cfg = quad_config(cli.tol, QuadConfig::default())?;
            let q = inner_numeric(p.x, p.y, *center, &cfg)?;
            let mut r = header("inner");
            r.extend([
                ("x", p.x.into()),
                ("y", p.y.into()),
                ("center", (*center).into()),
            ]);
            r.extend(tolerance(&cfg));
            r.extend([
                ("value", q.value.into()),
                ("abs_err", q.abs_err.into()),
                ("evals", q.evals.into()),
                ("converged", q.converged.into()),
            ]);
            done(r, q.converged)
        }
        Command::Jordan { p, a } => {
            let v = i_jordan(p.x, p.y, *a)?;
            let mut r = header("jordan");
            r.extend([
                ("x", p.x.into()),
                ("y", p.y.into()),
                ("a", (*a).into()),
                ("value", v.into()),
            ]);
            done(r, true)
        }
        Command::Compare { p, a } => {
            let cfg = quad_config(cli.tol, QuadConfig::default())?;
            let c = compare_inner(p.x, p.y, *a, &cfg)?;
            let mut r = header("compare");
            r.extend([("x", p.x.into()), ("y", p.y.into()), ("a", (*a).into())]);
            r.extend(tolerance(&cfg));
            r.extend([
                ("i_num_plus", c.i_num_plus.into()),
                ("i_num_minus", c.i_num_minus.into()),
                ("i_jordan", c.i_jordan.into()),
                ("disc_plus", c.disc_plus.into()),
                ("disc_minus", c.disc_minus.into()),
                ("err_bound", c.err_bound.into()),
                ("evals", c.evals.into()),
                ("converged", c.converged.into()),
            ]);
            // a finished comparison is a result whatever it shows
            done(r, true)
        }
        Command::EvalF {
            a,
            no_symmetry,
            touch,
        } => {
            let cfg = quad_config(cli.tol, QuadConfig::with_tol(OUTER_TOL, OUTER_TOL))?;
            let f = f_eval_with(
                FermiParameter::new(*a)?,
                &cfg,
                !no_symmetry,
                &touch.config(),
            )?;
            let d = f.touch.as_ref();
            let mut r = header("eval-f");
            r.extend([
                ("a", (*a).into()),
                ("exploit_symmetry", (!no_symmetry).into()),
            ]);
            r.extend(tolerance(&cfg));
            r.extend([
                ("value", f.value.into()),
                ("abs_err", f.abs_err.into()),
                ("evals", f.evals.into()),
                ("converged", f.converged.into()),
                ("touchpoint_window", f.touchpoint_window.into()),
                ("tail_estimate", d.and_then(|d| d.tail_estimate).into()),
                ("log_coefficient", d.map(|d| d.log_coefficient).into()),
                ("finite_part", d.and_then(|d| d.finite_part).into()),
            ]);
            done(r, f.converged)
        }
        Command::Scan {
            a_min,
            a_max,
            steps,
            touch,
        } => {
            let cfg = quad_config(cli.tol, QuadConfig::with_tol(OUTER_TOL, OUTER_TOL))?;
            let a_values = grid(*a_min, *a_max, *steps)?;
            let rows = scan_with(&a_values, &cfg, &touch.config());
            for row in &rows {
                if let Some(e) = &row.error {
                    eprintln!("a = {}: {e}", row.a);
                }
            }
            let converged = rows.iter().all(ScanRow::converged);
            Ok(Output {
                table: Table {
                    rows: rows.iter().map(scan_record).collect(),
                    single: false,
                },
                converged,
            })
        }
        Command::Oracle {
            target: OracleTarget::Inner { p, center, s },
        } => {
            let e = mc_estimate_inner(p.x, p.y, *center, s.samples, s.seed)?;
            let mut r = header("oracle-inner");
            r.extend([
                ("x", p.x.into()),
                ("y", p.y.into()),
                ("center", (*center).into()),
            ]);
            r.extend([
                ("samples", e.samples.into()),
                ("seed", e.seed.into()),
                ("mean", e.mean.into()),
                ("std_err", e.std_err.into()),
            ]);
            done(r, true)
        }
        Command::Oracle {
            target:
                OracleTarget::F {
                    a,
                    s,
                    exclude_window,
                    inner_draws,
                },
        } => {
            let opts = McFOptions {
                exclude_window: *exclude_window,
                inner_draws: *inner_draws,
            };
            let e = mc_estimate_f_with(FermiParameter::new(*a)?, s.samples, s.seed, &opts)?;
            let mut r = header("oracle-f");
            r.extend([
                ("a", (*a).into()),
                ("exclude_window", (*exclude_window).into()),
            ]);
            r.extend([
                ("samples", e.samples.into()),
                ("seed", e.seed.into()),
                ("mean", e.mean.into()),
                ("std_err", e.std_err.into()),
            ]);
            done(r, true)
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start {} workers: {e}", cli.jobs.unwrap_or(0));
            return ExitCode::from(2);
        }
    };
    let result = pool.install(|| run(&cli)).and_then(|output| {
        emit(&output.table.render(cli.format), cli.out.as_ref())?;
        Ok(output.converged)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
