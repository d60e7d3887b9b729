use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Component, Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use varscale::garch::{self, GarchOptions, GarchParams};
use varscale::ingest::{self, CsvLayout, ReturnSeries};
use varscale::liquidity::LiquidityIndicators;
use varscale::rolling::{self, DateAnchor, GarchMode, Regime, RollingConfig};
use varscale::scaling::{mfdfa, scale_range};
use varscale::synth::{self, GeneratorSpec};
use varscale::ErrorClass;

mod manifest;

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "varscale", version, about = "Variance-scaling analysis of return series")]
struct Cli {
    /// Directory receiving every output file. Created if missing.
    #[arg(long, global = true, env = "VARSCALE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Whole-series analysis: fluctuation functions, scaling fit, indicators.
    Analyze(AnalyzeArgs),
    /// Sliding-window analysis.
    Roll(RollArgs),
    /// Write a seeded synthetic series.
    Synth(SynthArgs),
    /// Split a rolling CSV into per-indicator files and summarize regimes.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputKind {
    Prices,
    Returns,
}

#[derive(Clone, Copy, ValueEnum)]
enum GarchModeArg {
    WholeSample,
    PerWindow,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum DateAnchorArg {
    Start,
    Center,
    End,
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,
    /// Whether the value column holds prices or log returns.
    #[arg(long, value_enum, default_value_t = InputKind::Prices)]
    input_kind: InputKind,
    /// Date column name or zero-based index.
    #[arg(long, default_value = "date")]
    date_column: String,
    /// Value column name or zero-based index [default: close for prices, value for returns]
    #[arg(long)]
    value_column: Option<String>,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, default_value_t = 500)]
    window: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    #[arg(long, default_value_t = 10)]
    s_min: usize,
    #[arg(long, default_value_t = 50)]
    s_max: usize,
    /// Comma-separated moment orders; must include 2. Use `--q-set=-2,2` for negative orders.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    q_set: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    detrend_order: usize,
    #[arg(long, value_enum, default_value_t = GarchModeArg::WholeSample)]
    garch_mode: GarchModeArg,
    /// Which date of a window stamps its result.
    #[arg(long, value_enum, default_value_t = DateAnchorArg::End)]
    date_anchor: DateAnchorArg,
    /// Subtract the sample mean before GARCH fitting.
    #[arg(long)]
    demean: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct RollArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Worker threads [default: available cores]
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Fgn,
    White,
    Garch,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Hurst exponent (fgn).
    #[arg(long, default_value_t = 0.5)]
    h: f64,
    /// Standard deviation (fgn, white).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    omega: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 0.8)]
    beta: f64,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// File name inside the output directory.
    #[arg(long, default_value = "synth.csv")]
    output: String,
    /// Write a single `value` column without the business-day index.
    #[arg(long)]
    no_dates: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Rolling CSV written by `roll`.
    #[arg(long)]
    input: PathBuf,
    /// Hurst threshold separating regimes.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

impl ConfigArgs {
    fn to_config(&self) -> RollingConfig {
        RollingConfig {
            window: self.window,
            step: self.step,
            s_min: self.s_min,
            s_max: self.s_max,
            q_set: self.q_set.clone(),
            detrend_order: self.detrend_order,
            garch_mode: match self.garch_mode {
                GarchModeArg::WholeSample => GarchMode::WholeSample,
                GarchModeArg::PerWindow => GarchMode::PerWindow,
                GarchModeArg::None => GarchMode::None,
            },
            date_anchor: match self.date_anchor {
                DateAnchorArg::Start => DateAnchor::Start,
                DateAnchorArg::Center => DateAnchor::Center,
                DateAnchorArg::End => DateAnchor::End,
            },
            demean: self.demean,
        }
    }
}

/// Lifts a library error into `anyhow` while keeping its class recoverable.
fn lib<T, E: Into<varscale::Error>>(r: Result<T, E>) -> anyhow::Result<T> {
    r.map_err(|e| anyhow::Error::new(e.into()))
}

fn load_input(args: &InputArgs) -> anyhow::Result<ReturnSeries> {
    let value = args.value_column.clone().unwrap_or_else(|| {
        match args.input_kind {
            InputKind::Prices => "close",
            InputKind::Returns => "value",
        }
        .to_string()
    });
    let layout = CsvLayout::new(args.date_column.as_str(), value.as_str());
    match args.input_kind {
        InputKind::Prices => {
            let prices = lib(ingest::load_prices(&args.input, &layout))?;
            lib(ingest::log_returns(&prices))
        }
        InputKind::Returns => lib(ingest::load_returns(&args.input, &layout)),
    }
}

struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    fn open(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    /// Creates `name` directly inside the output directory.
    fn create(&mut self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let mut parts = Path::new(name).components();
        if !matches!((parts.next(), parts.next()), (Some(Component::Normal(_)), None)) {
            bail!("output name `{name}` must be a plain file name");
        }
        let path = self.root.join(name);
        let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

fn garch_options(config: &RollingConfig) -> GarchOptions {
    GarchOptions {
        demean: config.demean,
        ..GarchOptions::default()
    }
}

#[derive(Serialize)]
struct WholeSampleFit<'a> {
    #[serde(flatten)]
    fit: &'a garch::GarchFit,
    mean: f64,
}

fn analyze(args: &AnalyzeArgs, out: &mut OutDir, manifest: &mut RunManifest) -> anyhow::Result<()> {
    let config = args.config.to_config();
    manifest.config = Some(config.clone());
    manifest.inputs.push(args.input.input.clone());
    if !config.q_set.contains(&2.0) {
        bail!("--q-set must include 2");
    }
    let returns = load_input(&args.input)?;

    let filtered = match config.garch_mode {
        GarchMode::None => returns.values().to_vec(),
        GarchMode::WholeSample | GarchMode::PerWindow => {
            let fit = lib(garch::fit(returns.values(), &garch_options(&config)))?;
            let z = lib(garch::standardize(returns.values(), &fit))?;
            let json = serde_json::to_string_pretty(&WholeSampleFit { fit: &fit, mean: fit.mean })?;
            out.write_text("garch.json", &json)?;
            z
        }
    };

    let scales = scale_range(config.s_min, config.s_max);
    let moments = lib(mfdfa(&filtered, &scales, &config.q_set, config.detrend_order))?;
    for m in &moments {
        let mut w = out.create(&format!("fluctuation_q{}.csv", m.fit.q))?;
        lib(m.fluctuations.write_csv(&mut w))?;
        w.flush()?;
        if m.fit.q == 2.0 {
            out.write_text("scaling.json", &m.fit.to_json())?;
            let ind = lib(LiquidityIndicators::compute(&m.fluctuations, &m.fit))?;
            out.write_text("indicators.json", &ind.to_json())?;
        } else {
            out.write_text(&format!("scaling_q{}.json", m.fit.q), &m.fit.to_json())?;
        }
    }
    Ok(())
}

fn roll(args: &RollArgs, out: &mut OutDir, manifest: &mut RunManifest) -> anyhow::Result<()> {
    let config = args.config.to_config();
    manifest.config = Some(config.clone());
    manifest.inputs.push(args.input.input.clone());
    lib(config.validate())?;
    let returns = load_input(&args.input)?;
    let workers = match args.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };

    let last_pct = AtomicUsize::new(usize::MAX);
    let progress = |done: usize, total: usize| {
        let pct = done * 100 / total.max(1);
        if last_pct.swap(pct, Ordering::Relaxed) != pct {
            eprint!("\rwindows: {done}/{total} ({pct}%)");
        }
    };
    let results = lib(rolling::roll_with(&returns, &config, workers, &progress))?;
    eprintln!();

    let mut w = out.create("rolling.csv")?;
    lib(rolling::write_csv(&mut w, &results))?;
    w.flush()?;
    let mut w = out.create("rolling.jsonl")?;
    lib(rolling::write_jsonl(&mut w, &results))?;
    w.flush()?;
    Ok(())
}

fn synth(args: &SynthArgs, out: &mut OutDir, manifest: &mut RunManifest) -> anyhow::Result<()> {
    let spec = match args.kind {
        SynthKind::Fgn => GeneratorSpec::fgn(args.h, args.sigma, args.n, args.seed),
        SynthKind::White => GeneratorSpec::white(args.sigma, args.n, args.seed),
        SynthKind::Garch => {
            let params = lib(GarchParams::new(args.omega, args.alpha, args.beta))?;
            GeneratorSpec::garch(params, args.n, args.seed)
        }
    };
    manifest.generator = Some(spec);
    manifest.seeds.push(args.seed);
    let values = lib(synth::generate(&spec))?;

    let mut w = out.create(&args.output)?;
    if args.no_dates {
        writeln!(w, "value")?;
        for v in &values {
            writeln!(w, "{v}")?;
        }
    } else {
        let dates = ingest::business_days(ingest::default_start_date(), values.len());
        lib(ingest::write_series(&mut w, &dates, &values, "value"))?;
    }
    w.flush()?;
    Ok(())
}

fn report(args: &ReportArgs, out: &mut OutDir, manifest: &mut RunManifest) -> anyhow::Result<()> {
    manifest.inputs.push(args.input.clone());
    let file = File::open(&args.input).with_context(|| format!("cannot open {}", args.input.display()))?;
    let results = lib(rolling::read_csv(file))?;
    let runs = lib(rolling::detect_regimes(&results, args.threshold))?;
    let dates: Vec<_> = results.iter().map(|r| r.date).collect();

    let columns: [(&str, fn(&varscale::WindowResult) -> f64); 7] = [
        ("hurst", |r| r.hurst),
        ("stderr_hurst", |r| r.stderr_hurst),
        ("r_squared", |r| r.r_squared),
        ("f0", |r| r.indicators.f0),
        ("f_sigma", |r| r.indicators.f_sigma),
        ("f_range", |r| r.indicators.f_range),
        ("f_ratio", |r| r.indicators.f_ratio),
    ];
    for (name, get) in columns {
        let values: Vec<f64> = results.iter().map(get).collect();
        let mut w = out.create(&format!("{name}.csv"))?;
        lib(ingest::write_series(&mut w, &dates, &values, name))?;
        w.flush()?;
    }
    let extra_qs: Vec<f64> = results[0].generalized.iter().map(|(q, _)| *q).collect();
    for (i, q) in extra_qs.iter().enumerate() {
        let name = format!("hurst_q{q}");
        let values: Vec<f64> = results.iter().map(|r| r.generalized[i].1).collect();
        let mut w = out.create(&format!("{name}.csv"))?;
        lib(ingest::write_series(&mut w, &dates, &values, &name))?;
        w.flush()?;
    }

    let mut summary = format!("{} windows, threshold {}\n", results.len(), args.threshold);
    for run in &runs {
        let label = match run.label {
            Regime::Below => "below",
            Regime::Above => "above",
        };
        summary.push_str(&format!(
            "{label} {}: {} to {} ({} windows)\n",
            args.threshold, run.start, run.end, run.windows
        ));
    }
    out.write_text("regimes.txt", summary.trim_end())?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let class = err
        .chain()
        .find_map(|e| e.downcast_ref::<varscale::Error>())
        .map(varscale::Error::class);
    match class {
        Some(ErrorClass::Numerical) => 2,
        _ => 1,
    }
}

/// Joins the error chain, skipping causes whose text a wrapper already shows.
fn describe(err: &anyhow::Error) -> String {
    let mut msg = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !msg.contains(&text) {
            if !msg.is_empty() {
                msg.push_str(": ");
            }
            msg.push_str(&text);
        }
    }
    msg
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut out = OutDir::open(&cli.out_dir)?;
    let (name, manifest_name) = match &cli.command {
        Command::Analyze(_) => ("analyze", "analyze_manifest.json"),
        Command::Roll(_) => ("roll", "roll_manifest.json"),
        Command::Synth(_) => ("synth", "synth_manifest.json"),
        Command::Report(_) => ("report", "report_manifest.json"),
    };
    let mut manifest = RunManifest::new(name);
    match &cli.command {
        Command::Analyze(a) => analyze(a, &mut out, &mut manifest)?,
        Command::Roll(a) => roll(a, &mut out, &mut manifest)?,
        Command::Synth(a) => synth(a, &mut out, &mut manifest)?,
        Command::Report(a) => report(a, &mut out, &mut manifest)?,
    }
    manifest.outputs = out.written.clone();
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    out.write_text(manifest_name, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
