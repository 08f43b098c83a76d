//! Command-line surface tying the simulator together: encoding runs,
//! parameter sweeps, full optimization, squeezing scans, Husimi maps,
//! disorder ensembles, and the parallel-CNOT baseline.
//!
//! Exit codes: 0 success, 2 configuration/argument problem, 3 numerical
//! failure, 4 I/O failure.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use config::*;
use spinenc::analysis::squeeze_scan;
use spinenc::error::{Error, Result};
use spinenc::fullspace::{run_disordered_protocol, sample_disorder, Tau3Mode};
use spinenc::husimi::{husimi, husimi_diff, HusimiGrid};
use spinenc::optimizer::{optimize_full, run_sweep, FullOptOptions, SweepSpec, Tau2Spec};
use spinenc::protocol::{
    cnot_baseline_with_engine, time_budget, ProtocolMode, ProtocolParams, StageState,
};
use spinenc::{DickeSpace, ProtocolEngine, SpectralStore};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "spinenc",
    version,
    about = "Collective-spin GHZ encoding simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (TOML, one section per command). Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Directory for persisted spectral caches.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Parallelism degree (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Base random seed (disorder ensembles).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the encoding protocol once and report fidelity metrics.
    Encode(EncodeArgs),
    /// Grid sweep over (N, theta, tau1, tau2) with inner tau3 optimization.
    Sweep(SweepArgs),
    /// Full (tau1, tau2, tau3) optimization at one (N, theta).
    Optimize(OptimizeArgs),
    /// <Y^2> along the TAT trajectory and the squeezing minimum.
    SqueezeScan(SqueezeScanArgs),
    /// Per-stage Husimi distributions of a protocol run.
    Husimi(HusimiArgs),
    /// Disordered-coupling protocol runs on the full 2^N space.
    Disorder(DisorderArgs),
    /// Parallel-CNOT baseline (exact, T = pi/4).
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    tau3: Option<f64>,
    /// "reduced" or "two-branch"
    #[arg(long)]
    mode: Option<String>,
    /// Write per-stage Husimi CSVs.
    #[arg(long)]
    husimi: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Complete a previously interrupted sweep.
    #[arg(long)]
    resume: bool,
    /// Output CSV filename (inside --out).
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args)]
struct SqueezeScanArgs {
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    /// Also write the rescaled collapse data.
    #[arg(long)]
    collapse: bool,
}

#[derive(Args)]
struct HusimiArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    tau1: Option<f64>,
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    tau3: Option<f64>,
    /// "all" or a stage index 1..=7.
    #[arg(long)]
    stage: Option<String>,
    /// "csv" or "binary"
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct DisorderArgs {
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    seed_count: Option<usize>,
    /// Re-optimize tau3 per disorder realization.
    #[arg(long)]
    reoptimize_tau3: bool,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Argument(_) | Error::Capacity(_) | Error::Config(_) => 2u8,
                Error::Numeric(_) => 3u8,
                Error::Io(_) => 4u8,
            })
        }
    }
}

struct Ctx {
    out: PathBuf,
    store: Arc<SpectralStore>,
    jobs: usize,
    seed: u64,
    file: FileConfig,
}

impl Ctx {
    fn log(&self, command: &str, hash: &str) {
        // Timestamps live only here, never in artifacts.
        let ts = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let line = format!("ts={ts} command={command} config_hash={hash} version={VERSION}\n");
        let path = self.out.join("run.log");
        let _ = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| std::io::Write::write_all(&mut f, line.as_bytes()));
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.out.join(name);
        spinenc::util::atomic_write(&path, contents)?;
        Ok(path)
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    std::fs::create_dir_all(&cli.out)?;
    let store = Arc::new(match &cli.cache {
        Some(dir) => SpectralStore::with_disk_cache(dir),
        None => SpectralStore::new(),
    });
    let jobs = cli.jobs.unwrap_or(0);
    // Configure the global pool once; sweep builds its own sized pool.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global();
    let ctx = Ctx {
        out: cli.out,
        store,
        jobs,
        seed: cli.seed.unwrap_or(1),
        file,
    };
    match cli.command {
        Command::Encode(args) => cmd_encode(&ctx, args),
        Command::Sweep(args) => cmd_sweep(&ctx, args),
        Command::Optimize(args) => cmd_optimize(&ctx, args),
        Command::SqueezeScan(args) => cmd_squeeze_scan(&ctx, args),
        Command::Husimi(args) => cmd_husimi(&ctx, args),
        Command::Disorder(args) => cmd_disorder(&ctx, args),
        Command::Baseline(args) => cmd_baseline(&ctx, args),
    }
}

fn require<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing required setting: {what}")))
}

fn parse_mode(mode: &str) -> Result<ProtocolMode> {
    match mode {
        "reduced" => Ok(ProtocolMode::Reduced),
        "two-branch" => Ok(ProtocolMode::two_branch_equal()),
        other => Err(Error::Config(format!(
            "mode must be \"reduced\" or \"two-branch\", got \"{other}\""
        ))),
    }
}

fn stage_grid(stage: &StageState, polar: usize, azimuth: usize) -> Result<HusimiGrid> {
    match stage {
        StageState::Reduced(v) => husimi(v, polar, azimuth),
        StageState::TwoBranch(cs) => husimi_diff(&cs.branch0, &cs.branch1, polar, azimuth),
    }
}

fn cmd_encode(ctx: &Ctx, args: EncodeArgs) -> Result<()> {
    let base = ctx.file.encode.clone();
    let cfg = EncodeConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n)), "encode.n")?,
        theta: require(
            args.theta.or(base.as_ref().map(|c| c.theta)),
            "encode.theta",
        )?,
        tau1: require(args.tau1.or(base.as_ref().map(|c| c.tau1)), "encode.tau1")?,
        tau2: require(args.tau2.or(base.as_ref().map(|c| c.tau2)), "encode.tau2")?,
        tau3: require(args.tau3.or(base.as_ref().map(|c| c.tau3)), "encode.tau3")?,
        mode: args
            .mode
            .or(base.as_ref().map(|c| c.mode.clone()))
            .unwrap_or_else(|| "reduced".into()),
        husimi: args.husimi || base.as_ref().map(|c| c.husimi).unwrap_or(false),
        husimi_polar: base.as_ref().map(|c| c.husimi_polar).unwrap_or(128),
        husimi_azimuth: base.as_ref().map(|c| c.husimi_azimuth).unwrap_or(256),
    };
    let hash = config_hash("encode", &cfg);

    let params = ProtocolParams::new(cfg.n, cfg.theta, cfg.tau1, cfg.tau2, cfg.tau3)?;
    let mode = parse_mode(&cfg.mode)?;
    let engine = ProtocolEngine::new(params.space(), Arc::clone(&ctx.store))?;
    let trace = engine.run_protocol(&params, mode)?;
    let report = engine.fidelity_report(&trace)?;

    let json = report.to_json(VERSION, &hash);
    let doc = serde_json::to_string_pretty(&json)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?;
    let path = ctx.write("encode.json", doc.as_bytes())?;
    println!("{}", serde_json::to_string(&json).unwrap_or_default());

    if cfg.husimi {
        for (i, (label, stage)) in trace.stages.iter().enumerate() {
            let grid = stage_grid(stage, cfg.husimi_polar, cfg.husimi_azimuth)?;
            let mut buf = Vec::new();
            grid.write_csv(&mut buf, VERSION, &hash)?;
            ctx.write(&format!("husimi_stage{}_{label}.csv", i + 1), &buf)?;
        }
    }

    ctx.log("encode", &hash);
    println!(
        "encode ok epsilon={} epsilon_reduced={} T={} T_over_cnot={} norm_drift={:.3e} out={}",
        report.epsilon,
        report.epsilon_reduced,
        report.time_budget,
        report.t_over_cnot,
        trace.max_norm_drift(),
        path.display()
    );
    Ok(())
}

fn cmd_sweep(ctx: &Ctx, args: SweepArgs) -> Result<()> {
    let cfg = ctx
        .file
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep requires a [sweep] config section".into()))?;
    let output_name = args.output.unwrap_or_else(|| cfg.output.clone());
    let resume = args.resume || cfg.resume;
    let effective = SweepConfig {
        resume,
        output: output_name.clone(),
        ..cfg.clone()
    };
    let hash = config_hash("sweep", &effective);

    let tau2 = match &cfg.tau2 {
        Tau2Config::Grid(g) => Tau2Spec::Explicit(g.values()?),
        Tau2Config::Window {
            predictor_half_width,
            predictor_step,
            predictor_c,
        } => Tau2Spec::PredictorWindow {
            half_width: *predictor_half_width,
            step: *predictor_step,
            c: *predictor_c,
        },
    };
    let spec = SweepSpec {
        n_values: cfg.n.clone(),
        theta_grid: cfg.theta.values()?,
        tau1_grid: cfg.tau1.values()?,
        tau2,
        tau3_interval: (0.0, cfg.tau3_max),
        allow_extended_ranges: cfg.allow_extended_ranges,
        output: ctx.out.join(&output_name),
        resume,
    };
    let table = run_sweep(&spec, &ctx.store, ctx.jobs, VERSION)?;
    let best = table
        .rows
        .iter()
        .min_by(|a, b| a.epsilon.partial_cmp(&b.epsilon).unwrap())
        .expect("table has rows");

    ctx.log("sweep", &hash);
    println!(
        "sweep ok rows={} best_epsilon={} best_n={} best_theta={} best_tau1={} best_tau2={} best_tau3={} output={}",
        table.rows.len(),
        best.epsilon,
        best.n,
        best.theta,
        best.tau1,
        best.tau2,
        best.tau3,
        spec.output.display()
    );
    Ok(())
}

fn cmd_optimize(ctx: &Ctx, args: OptimizeArgs) -> Result<()> {
    let base = ctx.file.optimize.clone();
    let cfg = OptimizeConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n)), "optimize.n")?,
        theta: require(
            args.theta.or(base.as_ref().map(|c| c.theta)),
            "optimize.theta",
        )?,
        tau1_step: base.as_ref().map(|c| c.tau1_step).unwrap_or(0.005),
        tau2_window: base.as_ref().map(|c| c.tau2_window).unwrap_or(0.02),
        tau2_step: base.as_ref().map(|c| c.tau2_step).unwrap_or(0.002),
        predictor_c: base.as_ref().map(|c| c.predictor_c).unwrap_or(2.0),
    };
    let hash = config_hash("optimize", &cfg);

    let engine = ProtocolEngine::new(DickeSpace::new(cfg.n)?, Arc::clone(&ctx.store))?;
    let opts = FullOptOptions {
        tau1_step: cfg.tau1_step,
        tau2_window: cfg.tau2_window,
        tau2_step: cfg.tau2_step,
        predictor_c: cfg.predictor_c,
        ..FullOptOptions::default()
    };
    let opt = optimize_full(&engine, cfg.theta, &opts)?;
    let params = ProtocolParams::new(cfg.n, cfg.theta, opt.tau1, opt.tau2, opt.tau3)?;
    let t = time_budget(&params).total;

    let doc = serde_json::json!({
        "N": cfg.n,
        "theta": cfg.theta,
        "tau1": opt.tau1,
        "tau2": opt.tau2,
        "tau3": opt.tau3,
        "epsilon": opt.epsilon,
        "tau2_predicted": opt.tau2_predicted,
        "T": t,
        "version": VERSION,
        "config_hash": hash,
    });
    let path = ctx.write(
        "optimize.json",
        serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::Config(format!("serialization: {e}")))?
            .as_bytes(),
    )?;

    ctx.log("optimize", &hash);
    println!(
        "optimize ok n={} theta={} tau1={} tau2={} tau3={} epsilon={} tau2_predicted={} T={} out={}",
        cfg.n,
        cfg.theta,
        opt.tau1,
        opt.tau2,
        opt.tau3,
        opt.epsilon,
        opt.tau2_predicted,
        t,
        path.display()
    );
    Ok(())
}

fn cmd_squeeze_scan(ctx: &Ctx, args: SqueezeScanArgs) -> Result<()> {
    let base = ctx.file.squeeze_scan.clone();
    let cfg = SqueezeScanConfig {
        n: require(
            args.n.or(base.as_ref().map(|c| c.n.clone())),
            "squeeze_scan.n",
        )?,
        tau_start: base.as_ref().map(|c| c.tau_start).unwrap_or(0.0),
        tau_stop: base.as_ref().map(|c| c.tau_stop).unwrap_or(0.2),
        count: base.as_ref().map(|c| c.count).unwrap_or(101),
        collapse: args.collapse || base.as_ref().map(|c| c.collapse).unwrap_or(false),
    };
    let hash = config_hash("squeeze_scan", &cfg);

    if cfg.count < 2 {
        return Err(Error::Config(
            "squeeze_scan.count must be at least 2".into(),
        ));
    }
    let step = (cfg.tau_stop - cfg.tau_start) / (cfg.count as f64 - 1.0);
    let grid: Vec<f64> = (0..cfg.count)
        .map(|i| cfg.tau_start + i as f64 * step)
        .collect();

    let mut scan_csv = format!("# version={VERSION} config_hash={hash}\ntau,y_var,N\n");
    let mut summary_csv =
        format!("# version={VERSION} config_hash={hash}\nN,tau_min,y_var_min,delta_y_min\n");
    let mut collapse_csv =
        format!("# version={VERSION} config_hash={hash}\ntau_offset,dy_over_log_n,N\n");
    let mut tokens = String::new();
    for &n in &cfg.n {
        let scan = squeeze_scan(DickeSpace::new(n)?, &ctx.store, &grid)?;
        for (t, v) in scan.tau.iter().zip(scan.y_var.iter()) {
            scan_csv.push_str(&format!("{t},{v},{n}\n"));
        }
        summary_csv.push_str(&format!(
            "{n},{},{},{}\n",
            scan.tau_min,
            scan.y_var_min,
            scan.delta_y_min()
        ));
        if cfg.collapse {
            for (dt, dy) in scan.collapse_points() {
                collapse_csv.push_str(&format!("{dt},{dy},{n}\n"));
            }
        }
        tokens.push_str(&format!(
            " tau_min_{n}={} delta_y_{n}={}",
            scan.tau_min,
            scan.delta_y_min()
        ));
    }
    let scan_path = ctx.write("squeeze_scan.csv", scan_csv.as_bytes())?;
    ctx.write("squeeze_scan_minima.csv", summary_csv.as_bytes())?;
    if cfg.collapse {
        ctx.write("squeeze_scan_collapse.csv", collapse_csv.as_bytes())?;
    }

    ctx.log("squeeze-scan", &hash);
    println!("squeeze-scan ok{tokens} out={}", scan_path.display());
    Ok(())
}

fn cmd_husimi(ctx: &Ctx, args: HusimiArgs) -> Result<()> {
    let base = ctx.file.husimi.clone();
    let cfg = HusimiConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n)), "husimi.n")?,
        theta: require(
            args.theta.or(base.as_ref().map(|c| c.theta)),
            "husimi.theta",
        )?,
        tau1: require(args.tau1.or(base.as_ref().map(|c| c.tau1)), "husimi.tau1")?,
        tau2: require(args.tau2.or(base.as_ref().map(|c| c.tau2)), "husimi.tau2")?,
        tau3: require(args.tau3.or(base.as_ref().map(|c| c.tau3)), "husimi.tau3")?,
        stage: args
            .stage
            .or(base.as_ref().map(|c| c.stage.clone()))
            .unwrap_or_else(|| "all".into()),
        polar: base.as_ref().map(|c| c.polar).unwrap_or(128),
        azimuth: base.as_ref().map(|c| c.azimuth).unwrap_or(256),
        format: args
            .format
            .or(base.as_ref().map(|c| c.format.clone()))
            .unwrap_or_else(|| "csv".into()),
        mode: base
            .as_ref()
            .map(|c| c.mode.clone())
            .unwrap_or_else(|| "two-branch".into()),
    };
    let hash = config_hash("husimi", &cfg);

    let params = ProtocolParams::new(cfg.n, cfg.theta, cfg.tau1, cfg.tau2, cfg.tau3)?;
    let mode = parse_mode(&cfg.mode)?;
    let engine = ProtocolEngine::new(params.space(), Arc::clone(&ctx.store))?;
    let trace = engine.run_protocol(&params, mode)?;

    let selected: Vec<usize> = if cfg.stage == "all" {
        (0..trace.stages.len()).collect()
    } else {
        let idx: usize = cfg.stage.parse().map_err(|_| {
            Error::Config(format!("stage must be \"all\" or 1..=7, got {}", cfg.stage))
        })?;
        if idx == 0 || idx > trace.stages.len() {
            return Err(Error::Config(format!(
                "stage index {idx} out of range 1..=7"
            )));
        }
        vec![idx - 1]
    };

    let mut written = Vec::new();
    for &i in &selected {
        let (label, stage) = &trace.stages[i];
        let grid = stage_grid(stage, cfg.polar, cfg.azimuth)?;
        match cfg.format.as_str() {
            "csv" => {
                let mut buf = Vec::new();
                grid.write_csv(&mut buf, VERSION, &hash)?;
                written.push(ctx.write(&format!("husimi_stage{}_{label}.csv", i + 1), &buf)?);
            }
            "binary" => {
                let mut buf = Vec::new();
                grid.write_binary(&mut buf)?;
                written.push(ctx.write(&format!("husimi_stage{}_{label}.husq", i + 1), &buf)?);
            }
            other => {
                return Err(Error::Config(format!(
                    "format must be \"csv\" or \"binary\", got \"{other}\""
                )))
            }
        }
    }

    ctx.log("husimi", &hash);
    println!(
        "husimi ok stages={} resolution={}x{} format={} out={}",
        written.len(),
        cfg.polar,
        cfg.azimuth,
        cfg.format,
        ctx.out.display()
    );
    Ok(())
}

fn cmd_disorder(ctx: &Ctx, args: DisorderArgs) -> Result<()> {
    let base = ctx.file.disorder.clone();
    let cfg = DisorderConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n)), "disorder.n")?,
        theta: require(
            args.theta.or(base.as_ref().map(|c| c.theta)),
            "disorder.theta",
        )?,
        delta: require(
            args.delta.or(base.as_ref().map(|c| c.delta)),
            "disorder.delta",
        )?,
        seeds: args.seeds.or(base.as_ref().and_then(|c| c.seeds.clone())),
        seed_count: args
            .seed_count
            .or(base.as_ref().map(|c| c.seed_count))
            .unwrap_or(5),
        tau1: base.as_ref().and_then(|c| c.tau1),
        tau2: base.as_ref().and_then(|c| c.tau2),
        tau3: base.as_ref().and_then(|c| c.tau3),
        reoptimize_tau3: args.reoptimize_tau3
            || base.as_ref().map(|c| c.reoptimize_tau3).unwrap_or(false),
    };
    let hash = config_hash("disorder", &cfg);

    // Times: explicit, or optimized on the clean Dicke backend.
    let (tau1, tau2, tau3) = match (cfg.tau1, cfg.tau2, cfg.tau3) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        (None, None, None) => {
            let engine = ProtocolEngine::new(DickeSpace::new(cfg.n)?, Arc::clone(&ctx.store))?;
            let opt = optimize_full(&engine, cfg.theta, &FullOptOptions::default())?;
            (opt.tau1, opt.tau2, opt.tau3)
        }
        _ => {
            return Err(Error::Config(
                "disorder.tau1/tau2/tau3 must be given all together or not at all".into(),
            ))
        }
    };
    let params = ProtocolParams::new(cfg.n, cfg.theta, tau1, tau2, tau3)?;
    let seeds: Vec<u64> = cfg
        .seeds
        .clone()
        .unwrap_or_else(|| (0..cfg.seed_count as u64).map(|i| ctx.seed + i).collect());
    let mode = if cfg.reoptimize_tau3 {
        Tau3Mode::Reoptimize
    } else {
        Tau3Mode::ReuseClean
    };

    let mut csv = format!(
        "# version={VERSION} config_hash={hash} tau3_mode={}\nN,delta,seed,theta,tau1,tau2,tau3,epsilon,epsilon_clean,leakage\n",
        mode.label()
    );
    let mut tokens = String::new();
    for &seed in &seeds {
        let coupling = sample_disorder(cfg.n, cfg.delta, seed)?;
        let report = run_disordered_protocol(&params, &coupling, &ctx.store, mode)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            report.n_qubits,
            report.delta,
            report.seed,
            report.theta,
            report.tau1,
            report.tau2,
            report.tau3,
            report.epsilon,
            report.epsilon_clean,
            report.leakage
        ));
        tokens.push_str(&format!(" eps_seed{}={}", seed, report.epsilon));
    }
    let path = ctx.write("disorder.csv", csv.as_bytes())?;

    ctx.log("disorder", &hash);
    println!(
        "disorder ok n={} delta={} seeds={} tau3_mode={}{tokens} out={}",
        cfg.n,
        cfg.delta,
        seeds.len(),
        mode.label(),
        path.display()
    );
    Ok(())
}

fn cmd_baseline(ctx: &Ctx, args: BaselineArgs) -> Result<()> {
    let base = ctx.file.baseline.clone();
    let cfg = BaselineConfig {
        n: require(args.n.or(base.as_ref().map(|c| c.n.clone())), "baseline.n")?,
    };
    let hash = config_hash("baseline", &cfg);

    let mut csv = format!("# version={VERSION} config_hash={hash}\nN,epsilon,T\n");
    let mut worst = 0.0f64;
    for &n in &cfg.n {
        let engine = ProtocolEngine::new(DickeSpace::new(n)?, Arc::clone(&ctx.store))?;
        let report = cnot_baseline_with_engine(&engine)?;
        csv.push_str(&format!("{n},{},{}\n", report.epsilon, report.time_budget));
        worst = worst.max(report.epsilon);
    }
    let path = ctx.write("baseline.csv", csv.as_bytes())?;

    ctx.log("baseline", &hash);
    println!(
        "baseline ok count={} worst_epsilon={} T={} out={}",
        cfg.n.len(),
        worst,
        std::f64::consts::FRAC_PI_4,
        path.display()
    );
    Ok(())
}
