//! `geotess` command-line front end.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geotess::experiments::{
    replicate_rng, replot, run_and_write, ExperimentConfig, ExperimentError, ExperimentKind,
};
use geotess::plp::{beta_integral, ArcPair};
use geotess::surface::build_genus2_surface;
use geotess::tracer::{self_intersections, trace_geodesic, TraceDump};

/// Poisson line processes and self-intersections of long geodesics on a
/// genus-2 surface.
#[derive(Debug, Parser)]
#[command(name = "geotess", version, propagate_version = true)]
struct Cli {
    /// Print every metric, not only the failed ones.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Line-process sanity checks (hitting law, crossing counts, tessellation).
    PlpSanity(ExperimentArgs),
    /// Print the crossing intensity of a pair of arcs.
    Beta(BetaArgs),
    /// Dump one geodesic trace and its self-intersections.
    Trace(TraceArgs),
    /// Self-intersection density sweep over trace lengths.
    Selfint(ExperimentArgs),
    /// Local chord statistics in a small disk.
    Local(ExperimentArgs),
    /// Joint crossing counts in two disjoint disks.
    TwoPoint(ExperimentArgs),
    /// Polygon statistics of the tessellation cut out by a trace.
    Global(ExperimentArgs),
    /// Re-render the plots of a finished run.
    Plot(PlotArgs),
    /// Print the geometry of the genus-2 octagon surface.
    SurfaceInfo(SurfaceInfoArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// TOML config (`schema = 1`); flags override its keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Independent replicates per trace length.
    #[arg(long)]
    replicates: Option<usize>,
    /// Comma-separated trace lengths.
    #[arg(long, value_name = "T[,T...]", value_parser = decimal_list)]
    lengths: Option<Lengths>,
    /// Radius of the rescaled observation disk.
    #[arg(long, value_parser = decimal)]
    alpha: Option<f64>,
    /// Line-process intensity.
    #[arg(long, value_parser = decimal)]
    lambda: Option<f64>,
    /// Output root (defaults to $GEOTESS_OUT, then ./results).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Run label; outputs go to <out>/<experiment>/<label>.
    #[arg(long)]
    label: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct BetaArgs {
    /// Circle radius.
    #[arg(long, default_value = "1", value_parser = decimal)]
    alpha: f64,
    /// First arc as START:END in radians.
    #[arg(long, value_name = "START:END", value_parser = arc, allow_hyphen_values = true)]
    arc_a: (f64, f64),
    /// Second arc as START:END in radians.
    #[arg(long, value_name = "START:END", value_parser = arc, allow_hyphen_values = true)]
    arc_b: (f64, f64),
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hyperbolic length of the trace.
    #[arg(long, default_value = "50", value_parser = decimal)]
    length: f64,
    /// Write trace.json and trace.csv here instead of printing JSON.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Run directory holding report.json.
    #[arg(long, value_name = "DIR")]
    input: PathBuf,
}

#[derive(Debug, Args)]
struct SurfaceInfoArgs {
    /// Print the full summary as JSON.
    #[arg(long)]
    json: bool,
}

/// Plain decimal: optional sign, digits, optional fraction.
fn decimal(s: &str) -> Result<f64, String> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) {
        return Err(format!("{s:?} is not a plain decimal number"));
    }
    s.parse().map_err(|e| format!("{s:?}: {e}"))
}

#[derive(Debug, Clone)]
struct Lengths(Vec<f64>);

fn decimal_list(s: &str) -> Result<Lengths, String> {
    s.split(',').map(|p| decimal(p.trim())).collect::<Result<_, _>>().map(Lengths)
}

fn arc(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("{s:?} is not START:END"))?;
    Ok((decimal(a)?, decimal(b)?))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Experiment(ExperimentError),
    Io(std::io::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "E_USAGE",
            CliError::Experiment(e) => e.code(),
            CliError::Io(_) => "E_IO",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Experiment(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Experiment(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn experiment_config(kind: ExperimentKind, args: &ExperimentArgs) -> Result<ExperimentConfig, CliError> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg = ExperimentConfig::from_toml_str(&text)?;
            if cfg.experiment != kind {
                return Err(CliError::Usage(format!(
                    "{} configures `{}`, not `{kind}`",
                    path.display(),
                    cfg.experiment
                )));
            }
            cfg
        }
        None => ExperimentConfig::defaults(kind),
    };
    let mut over = toml::Table::new();
    if let Some(v) = args.seed {
        let v = i64::try_from(v).map_err(|_| CliError::Usage(format!("seed {v} exceeds {}", i64::MAX)))?;
        over.insert("seed".into(), v.into());
    }
    if let Some(v) = args.replicates {
        over.insert("replicates".into(), (v as i64).into());
    }
    if let Some(v) = args.workers {
        over.insert("workers".into(), (v as i64).into());
    }
    if let Some(v) = &args.lengths {
        over.insert("lengths".into(), toml::Value::Array(v.0.iter().map(|&t| t.into()).collect()));
    }
    if let Some(v) = args.alpha {
        over.insert("alpha".into(), v.into());
    }
    if let Some(v) = args.lambda {
        over.insert("lambda".into(), v.into());
    }
    if let Some(v) = &args.out {
        over.insert("out_dir".into(), v.to_string_lossy().into_owned().into());
    }
    if let Some(v) = &args.label {
        over.insert("label".into(), v.clone().into());
    }
    Ok(base.with_overrides(over)?)
}

/// Exit status 2 when the run completes with failed checks.
fn run_experiment(kind: ExperimentKind, args: &ExperimentArgs, verbose: u8) -> Result<u8, CliError> {
    let cfg = experiment_config(kind, args)?;
    let (report, dir) = run_and_write(&cfg)?;
    if verbose > 0 {
        print!("{}", report.summary());
    } else {
        for m in report.metrics.iter().filter(|m| !m.passed) {
            println!("FAIL {}: {:.6} [{}]", m.name, m.estimate, m.rule);
        }
        println!("{kind}: {}", if report.passed { "PASS" } else { "FAIL" });
    }
    println!("outputs: {}", dir.display());
    Ok(if report.passed { 0 } else { 2 })
}

fn beta(args: &BetaArgs) -> Result<u8, CliError> {
    let pair = ArcPair::from_angles(args.arc_a, args.arc_b, args.alpha)
        .map_err(|e| CliError::Usage(format!("bad arcs: {e}")))?;
    println!("{:.10}", beta_integral(&pair));
    Ok(0)
}

fn trace(args: &TraceArgs, verbose: u8) -> Result<u8, CliError> {
    let surface = build_genus2_surface().map_err(ExperimentError::from)?;
    let mut rng = replicate_rng(args.seed, 0);
    let start = surface.sample_liouville(&mut rng);
    let mut tr = trace_geodesic(&surface, start, args.length)
        .map_err(|source| ExperimentError::Trace { replicate: 0, source })?;
    tr.seed = Some(args.seed);
    let inters = self_intersections(&tr);
    let dump = TraceDump::new(&tr, &inters);
    let json = serde_json::to_string_pretty(&dump).expect("trace serializes");
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("trace.json"), &json)?;
            let mut csv = Vec::new();
            dump.write_csv(&mut csv)?;
            fs::write(dir.join("trace.csv"), csv)?;
            println!("{} arcs, {} self-intersections -> {}", dump.arcs.len(), dump.vertices.len(), dir.display());
        }
        None => println!("{json}"),
    }
    if verbose > 0 {
        eprintln!("arcs {}, self-intersections {}", dump.arcs.len(), dump.vertices.len());
    }
    Ok(0)
}

fn surface_info(args: &SurfaceInfoArgs) -> Result<u8, CliError> {
    let surface = build_genus2_surface().map_err(ExperimentError::from)?;
    let s = surface.summary();
    if args.json {
        println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"));
    } else {
        println!("genus               {}", s.genus);
        println!("area                {:.5}", s.area);
        println!("kappa               {:.7}", s.kappa);
        println!("injectivity radius  {:.6}", s.injectivity_radius);
        println!("circumradius        {:.6}", s.circumradius);
        println!("inradius            {:.6}", s.inradius);
        let lengths: Vec<String> = s.generator_translation_lengths.iter().map(|l| format!("{l:.6}")).collect();
        println!("pairing lengths     {}", lengths.join(" "));
    }
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8, CliError> {
    let v = cli.verbose;
    match &cli.command {
        Command::PlpSanity(a) => run_experiment(ExperimentKind::PlpSanity, a, v),
        Command::Selfint(a) => run_experiment(ExperimentKind::Selfint, a, v),
        Command::Local(a) => run_experiment(ExperimentKind::Local, a, v),
        Command::TwoPoint(a) => run_experiment(ExperimentKind::TwoPoint, a, v),
        Command::Global(a) => run_experiment(ExperimentKind::Global, a, v),
        Command::Beta(a) => beta(a),
        Command::Trace(a) => trace(a, v),
        Command::SurfaceInfo(a) => surface_info(a),
        Command::Plot(a) => {
            for p in replot(&a.input)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            eprintln!("error code: E_USAGE");
            return ExitCode::from(1);
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}
