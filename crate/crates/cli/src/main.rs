//! `fpsketch`: build, merge and query F_p sketches of text update streams,
//! and run the benchmark and lower-bound experiments.

mod error;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fpsketch::oracle::NeumaierSum;
use fpsketch::stream::{parse_line, StreamError};
use fpsketch::{AssignmentKind, ConfigSpec, FpConfig, FpEstimate, FpSketch64, HashMode, Overrides, ShelfMode};
use fpsketch_harness::trials::write_csv;
use fpsketch_harness::{lb_distinguish, run_trials, HardInstanceSpec, InstanceKind, LbParams};
use serde_json::json;

use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "fpsketch", version, about = "Linear sketches for the p-th frequency moment of turnstile streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sketch a stream file ("i v" per line) into a sketch file.
    Sketch(SketchArgs),
    /// Estimate F_p from one sketch, or from several merged.
    Estimate(EstimateArgs),
    /// Measure the empirical failure rate on a generated instance.
    Bench(BenchArgs),
    /// Distinguishing experiment on the lower-bound hard distributions.
    Lbexp(LbArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shelves {
    Auto,
    On,
    Off,
}

#[derive(Args)]
struct ConfigArgs {
    /// Domain size; indices are 0..n.
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Constant profile: "desk" (tuned) or "theory".
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Multiplier on the level height C.
    #[arg(long)]
    c_mult: Option<f64>,
    /// Multiplier on the row count s.
    #[arg(long)]
    s_mult: Option<f64>,
    #[arg(long)]
    eps_bar: Option<f64>,
    /// Buckets per unit of height in level and shelf tables.
    #[arg(long)]
    bucket_factor: Option<f64>,
    #[arg(long, value_enum)]
    shelves: Option<Shelves>,
    /// Omit the F2 bank; the estimator then needs the stream for exact F2.
    #[arg(long)]
    exact_f2: bool,
    /// Use the keyed mixing hash instead of k-wise polynomials.
    #[arg(long)]
    prf_hash: bool,
}

impl ConfigArgs {
    fn config(&self) -> Result<FpConfig> {
        let mut o = Overrides::profile(&self.profile)?;
        if let Some(c) = self.c_mult {
            o.c_c = c;
        }
        if let Some(s) = self.s_mult {
            o.c_s = s;
        }
        if self.eps_bar.is_some() {
            o.eps_bar = self.eps_bar;
        }
        if let Some(b) = self.bucket_factor {
            o.bucket_factor = b;
        }
        if let Some(s) = self.shelves {
            o.shelves = match s {
                Shelves::Auto => ShelfMode::Auto,
                Shelves::On => ShelfMode::On,
                Shelves::Off => ShelfMode::Off,
            };
        }
        o.exact_f2 |= self.exact_f2;
        if self.prf_hash {
            o.hash_mode = HashMode::Prf;
        }
        Ok(FpConfig::derive(ConfigSpec { n: self.n, p: self.p, eps: self.eps, delta: self.delta, overrides: o })?)
    }
}

#[derive(Args)]
struct SketchArgs {
    /// Stream file, or "-" for stdin.
    stream: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EstimateArgs {
    /// Sketch files; more than one are merged first.
    #[arg(required = true)]
    sketches: Vec<PathBuf>,
    /// Take F2 exactly from `--stream` instead of the sketch's F2 bank.
    #[arg(long)]
    exact_f2: bool,
    /// The stream the sketches were built from (second pass for exact F2).
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Print the estimate with diagnostics as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Instance {
    Zipf,
    Spike,
    Largeish,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value = "zipf")]
    instance: Instance,
    /// Zipf exponent.
    #[arg(long, default_value_t = 1.1)]
    zipf_s: f64,
    /// Planted coordinates for spike (default 4) or largeish (default ceil(log2(1/delta))).
    #[arg(long)]
    spikes: Option<usize>,
    /// Spike magnitude (default n^(1/p)).
    #[arg(long)]
    magnitude: Option<f64>,
    /// Background noise level.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1)]
    instance_seed: u64,
    /// Base of the per-trial sketch seeds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    trials: usize,
    /// Worker threads (default: available cores).
    #[arg(long)]
    parallelism: Option<usize>,
    /// Write one row per trial here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct LbArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Sketch rows.
    #[arg(long)]
    r: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 1.0 / 81.0)]
    delta: f64,
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    /// Spike count (default ceil(log_3(1/sqrt(delta)))).
    #[arg(long)]
    t: Option<usize>,
    /// Spike scale constant.
    #[arg(long, default_value_t = 4.0)]
    c_prime: f64,
    /// Samples per distribution.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 10_000)]
    norm_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(Box::new(BufReader::new(f)))
}

/// Feeds every update to `sink`, checking indices against `n` so that an
/// out-of-range index is reported with its line.
fn for_each_update(path: &Path, n: u64, mut sink: impl FnMut(u64, f64) -> Result<()>) -> Result<()> {
    let stream_err = |source| CliError::Stream { path: path.to_path_buf(), source };
    for (k, line) in open_input(path)?.lines().enumerate() {
        let line = line.map_err(|e| stream_err(StreamError::Io(e.to_string())))?;
        let Some((i, v)) = parse_line(&line, k + 1).map_err(stream_err)? else {
            continue;
        };
        if i >= n {
            return Err(stream_err(StreamError::Parse { line: k + 1, message: format!("index {i} outside [0, {n})") }));
        }
        sink(i, v)?;
    }
    Ok(())
}

fn read_sketch(path: &Path) -> Result<FpSketch64> {
    let mut bytes = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(|e| CliError::io(path, e))?;
    Ok(FpSketch64::from_bytes(&bytes)?)
}

fn sketch(args: SketchArgs) -> Result<()> {
    let cfg = args.config.config()?;
    let mut sk = FpSketch64::new(cfg, args.seed)?;
    for_each_update(&args.stream, sk.config().n(), |i, v| Ok(sk.update(i, v)?))?;
    let out = &args.output;
    let mut w = BufWriter::new(File::create(out).map_err(|e| CliError::io(out, e))?);
    w.write_all(&sk.to_bytes()).and_then(|_| w.flush()).map_err(|e| CliError::io(out, e))
}

/// Rounds to 12 significant digits so that merged and whole-stream sketches,
/// whose complex cells can differ in the last bits, print the same value.
fn display(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    rounded.to_string()
}

fn diagnostics(est: &FpEstimate) -> serde_json::Value {
    let count = |f: fn(&AssignmentKind) -> bool| est.count(|a| f(&a.kind));
    json!({
        "value": est.value,
        "f2_hat": est.f2_hat,
        "ghss_part": est.ghss_part,
        "shelf_part": est.shelf_part,
        "recovered_nonzeros": est.recovered_nonzeros,
        "assigned_levels": count(|k| matches!(k, AssignmentKind::Level { .. })),
        "assigned_shelves": count(|k| matches!(k, AssignmentKind::Shelf { .. })),
        "dropped": count(|k| matches!(k, AssignmentKind::Dropped { .. })),
        "thresholds": est.thresholds,
        "shelf_thresholds": est.shelf_thresholds,
    })
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let mut paths = args.sketches.iter();
    let first = paths.next().expect("clap requires one sketch");
    let mut sk = read_sketch(first)?;
    for path in paths {
        sk.merge_from(&read_sketch(path)?)?;
    }
    let needs_stream = args.exact_f2 || sk.f2_sketch().is_none();
    let est = if needs_stream {
        let Some(stream) = &args.stream else {
            return Err(CliError::Usage("exact F2 needs the source stream: pass --stream <file>".into()));
        };
        let n = sk.config().n();
        let mut x = vec![0.0f64; n as usize];
        for_each_update(stream, n, |i, v| {
            x[i as usize] += v;
            Ok(())
        })?;
        let f2 = x.iter().map(|v| v * v).collect::<NeumaierSum>().total();
        sk.estimate_fp_with_f2(f2)?
    } else {
        sk.estimate_fp()?
    };
    if args.json {
        let out = json!({
            "estimate": display(est.value).parse::<f64>().unwrap_or(est.value),
            "sketches": args.sketches.len(),
            "updates": sk.update_count(),
            "config": sk.config().spec,
            "diagnostics": diagnostics(&est),
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    } else {
        println!("{}", display(est.value));
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = args.config.config()?;
    let n = cfg.n();
    let magnitude = args.magnitude.unwrap_or_else(|| (n as f64).powf(1.0 / cfg.p()));
    let kind = match args.instance {
        Instance::Zipf => InstanceKind::Zipf { s: args.zipf_s },
        Instance::Spike => InstanceKind::Spike { m: args.spikes.unwrap_or(4), magnitude, sigma: args.sigma },
        Instance::Largeish => {
            let t = args.spikes.unwrap_or_else(|| (1.0 / cfg.delta()).log2().ceil().max(1.0) as usize);
            InstanceKind::Largeish { t, p: cfg.p(), sigma: args.sigma }
        }
    };
    let x = HardInstanceSpec::new(kind, n, args.instance_seed).vector()?;
    let threads = args.parallelism.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |k| k.get()));
    let report = run_trials(&cfg, &x, args.trials, threads, args.seed)?;
    if let Some(path) = &args.csv {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        write_csv(&report.rows, BufWriter::new(f))?;
    }
    let s = &report.stats;
    if args.json {
        let out = json!({ "instance": kind, "config": cfg.spec, "stats": s });
        println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
    } else {
        println!(
            "{} trials: {} failed ({} errors), failure rate {:.4} (target {:.4}); rel. error p50 {:.4} p90 {:.4} p99 {:.4}; {:.1}s",
            s.trials, s.failures, s.errors, s.failure_rate, cfg.delta(), s.p50, s.p90, s.p99, s.wall_secs
        );
    }
    Ok(())
}

fn lbexp(args: LbArgs) -> Result<()> {
    let params = LbParams {
        n: args.n,
        r: args.r,
        eps: args.eps,
        delta: args.delta,
        p: args.p,
        c_prime: args.c_prime,
        t: args.t,
        samples: args.trials,
        norm_draws: args.norm_draws,
        seed: args.seed,
    };
    let r = lb_distinguish(&params)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&r).expect("serializable"));
    } else {
        println!(
            "n={} r={} t={}: advantage {:.4} (tpr {:.4}, fpr {:.4}); separation {:.4}; event G {:.4}",
            r.params.n, r.params.r, r.t, r.advantage, r.tpr, r.fpr, r.separation_rate, r.event_g_rate
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sketch(a) => sketch(a),
        Command::Estimate(a) => estimate(a),
        Command::Bench(a) => bench(a),
        Command::Lbexp(a) => lbexp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpsketch: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
