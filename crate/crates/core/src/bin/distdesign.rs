//! Command-line front end: design generation, design evaluation, Beta-shape
//! tuning, and the three benchmark studies, all reproducible from a seed.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use distdesign::bench::{alm_study, bo_study, csv_filename, logmse_study, StudyConfig};
use distdesign::design::{
    lhs_design, maximin_design, one_dim_uniform, phi_p_design, random_design, Design,
};
use distdesign::design::{dist_targeted_design, lhsbeta_design};
use distdesign::dist::{ksd, phi_p, DistanceTarget};
use distdesign::error::Error;
use distdesign::tuner::{
    catalog_lookup, quadratic_oracle, tune_shapes, tune_shapes_with, RimseConfig, TuneResult,
};

#[derive(Parser)]
#[command(name = "distdesign", version, about = "Distance-distributed designs for GP surrogates")]
struct Cli {
    /// Worker threads for study parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a design and write CSV coordinates plus JSON provenance.
    Generate(GenerateArgs),
    /// Evaluate a design file: KSD, minimum distance, phi_2, marginals.
    Eval(EvalArgs),
    /// Tune Beta shape parameters for a given (n, d).
    Tune(TuneArgs),
    /// Run a benchmark study and write its CSV tables plus a manifest.
    Study(StudyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Random,
    Lhs,
    Maximin,
    Phip,
    Unifdist,
    Betadist,
    Lhsbeta,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Beta target shape alpha (betadist/lhsbeta).
    #[arg(long)]
    alpha: Option<f64>,
    /// Beta target shape beta (betadist/lhsbeta).
    #[arg(long)]
    beta: Option<f64>,
    /// Use the tuned-shape catalog entry for (n, d) instead of --alpha/--beta.
    #[arg(long, default_value_t = false)]
    catalog: bool,
    /// phi_p exponent.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Stochastic-search iterations.
    #[arg(long, default_value_t = 100_000)]
    s: u64,
    /// RNG seed (falls back to $DISTDESIGN_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; provenance JSON lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    Uniform,
    Beta,
}

#[derive(Args)]
struct EvalArgs {
    /// Headerless coordinate CSV.
    #[arg(long)]
    design: PathBuf,
    /// Distance target family to score against.
    #[arg(long, value_enum)]
    target: Option<TargetArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// EI acquisitions after the 20-site seed design.
    #[arg(long, default_value_t = 50)]
    budget: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Replace the simulation criterion with a synthetic one.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long, default_value_t = 30)]
    t_grid: usize,
    #[arg(long, default_value_t = 30)]
    r_batches: usize,
    #[arg(long, default_value_t = 5)]
    designs_per_cell: usize,
    /// Search iterations per constructed design.
    #[arg(long, default_value_t = 10_000)]
    search_s: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyName {
    Logmse,
    Alm,
    Bo,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(value_enum)]
    study: StudyName,
    /// TOML study config; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input dimension(s); repeatable for logmse.
    #[arg(long)]
    d: Vec<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ninit: Option<usize>,
    #[arg(long)]
    total_n: Option<usize>,
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Comma-separated design sizes for BO p-value tables.
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<usize>,
    #[arg(long)]
    search_s: Option<u64>,
    /// Beta shape for the ALM comparators, e.g. 2,5.
    #[arg(long, value_delimiter = ',')]
    alm_shape: Vec<f64>,
    /// Full-size run: 1000 reps, 1e5 search iterations.
    #[arg(long, default_value_t = false)]
    paper_scale: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("distdesign: failed to size thread pool: {e}");
            std::process::exit(2);
        }
    }
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Tune(args) => cmd_tune(args),
        Command::Study(args) => cmd_study(args),
    };
    if let Err(e) = result {
        eprintln!("distdesign: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_) => 2,
        Error::Io(_) | Error::Parse { .. } => 3,
        Error::Numeric(_) | Error::DegenerateData(_) => 4,
    }
}

fn seed_or_env(seed: Option<u64>) -> u64 {
    seed.or_else(|| {
        std::env::var("DISTDESIGN_SEED")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn json_sibling(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let seed = seed_or_env(args.seed);
    let (n, d, s) = (args.n, args.d, args.s);

    let shape = |args: &GenerateArgs| -> Result<(f64, f64), Error> {
        if args.catalog {
            let e = catalog_lookup(n, d);
            if e.extrapolated {
                eprintln!(
                    "note: no catalog entry for (n={n}, d={d}); using nearest key ({}, {})",
                    e.alpha, e.beta
                );
            }
            Ok((e.alpha, e.beta))
        } else {
            match (args.alpha, args.beta) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(Error::invalid(
                    "betadist/lhsbeta need --alpha and --beta, or --catalog",
                )),
            }
        }
    };

    let design = match args.method {
        MethodArg::Random => random_design(n, d, seed)?,
        MethodArg::Lhs => lhs_design(n, d, seed)?,
        MethodArg::Maximin => maximin_design(n, d, s, seed)?,
        MethodArg::Phip => phi_p_design(n, d, args.p, s, seed)?,
        MethodArg::Unifdist => dist_targeted_design(n, d, &DistanceTarget::uniform(d), s, seed)?,
        MethodArg::Betadist => {
            let (a, b) = shape(&args)?;
            dist_targeted_design(n, d, &DistanceTarget::beta(a, b, d)?, s, seed)?
        }
        MethodArg::Lhsbeta => {
            let (a, b) = shape(&args)?;
            lhsbeta_design(n, d, &DistanceTarget::beta(a, b, d)?, s, seed)?
        }
    };

    design.save_csv(&args.out)?;
    std::fs::write(json_sibling(&args.out), design.to_json()?)?;
    println!(
        "wrote {} ({} x {}) and {}",
        args.out.display(),
        design.n(),
        design.d(),
        json_sibling(&args.out).display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Error> {
    let design = Design::load_csv(&args.design)?;
    let set = design.distances()?;
    println!("design: {} points in {} dimensions", design.n(), design.d());
    println!("min distance: {}", set.min_distance());
    println!("phi_2: {}", phi_p(&set, 2.0));
    println!(
        "1d-uniformity: {}",
        if one_dim_uniform(&design) { "pass" } else { "fail" }
    );
    if let Some(t) = args.target {
        let target = match t {
            TargetArg::Uniform => DistanceTarget::uniform(design.d()),
            TargetArg::Beta => {
                let (a, b) = match (args.alpha, args.beta) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::invalid("beta target needs --alpha and --beta")),
                };
                DistanceTarget::beta(a, b, design.d())?
            }
        };
        println!("ksd: {}", ksd(&set, &target));
    }
    Ok(())
}

/// On-disk form of a tuning run.
#[derive(Serialize, Deserialize)]
struct TuneOutput {
    n: usize,
    d: usize,
    budget: usize,
    seed: u64,
    oracle: Option<String>,
    config: RimseConfig,
    result: TuneResult,
}

fn cmd_tune(args: TuneArgs) -> Result<(), Error> {
    let seed = seed_or_env(args.seed);
    let config = RimseConfig::with_grid(args.n, args.d, args.t_grid, args.r_batches, args.designs_per_cell)
        .search_iters(args.search_s);

    let counter = std::sync::atomic::AtomicUsize::new(0);
    let log_eval = |a: f64, b: f64, v: f64| {
        let k = counter.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
        eprintln!("eval {k:4}: (alpha={a:.3}, beta={b:.3}) -> {v:.6}");
    };

    let result = match args.oracle.as_deref() {
        None => {
            eprintln!("building detrending surface (R={}, T={})", config.r_batches, config.t_grid);
            tune_shapes(&config, args.budget, seed)?
        }
        Some("quadratic") => {
            let criterion = |a: f64, b: f64, _s: u64| {
                let v = quadratic_oracle(a, b);
                log_eval(a, b, v);
                Ok(v)
            };
            tune_shapes_with(&criterion, args.budget, seed)?
        }
        Some(other) => {
            return Err(Error::invalid(format!(
                "unknown oracle {other:?}; available: quadratic"
            )))
        }
    };

    eprintln!(
        "best (alpha, beta) = ({:.3}, {:.3}), predicted {:.6}; selected near-optimal ({:.3}, {:.3})",
        result.best.0, result.best.1, result.best_predicted, result.selected.0, result.selected.1
    );
    let out = TuneOutput {
        n: args.n,
        d: args.d,
        budget: args.budget,
        seed,
        oracle: args.oracle,
        config,
        result,
    };
    let text = serde_json::to_string_pretty(&out).map_err(|e| Error::numeric(e.to_string()))?;
    std::fs::write(&args.out, text)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    study: &'a str,
    version: &'a str,
    created_unix: u64,
    config: &'a StudyConfig,
    outputs: Vec<String>,
    dropped_reps: usize,
    fit_failures: Vec<usize>,
}

fn build_study_config(args: &StudyArgs) -> Result<StudyConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::parse(0, e.to_string()))?
        }
        None => StudyConfig::new(0),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    } else if args.config.is_none() {
        config.master_seed = seed_or_env(None);
    }
    if !args.d.is_empty() {
        config.dims = args.d.clone();
        config.bo_d = args.d[0];
    }
    if let Some(r) = args.reps {
        config.reps = r;
    }
    if let Some(n) = args.ninit {
        config.n_init = n;
    }
    if let Some(n) = args.total_n {
        config.total_n = n;
    }
    if let Some(sd) = args.noise_sd {
        config.noise_sd = sd;
    }
    if !args.checkpoints.is_empty() {
        config.checkpoints = args.checkpoints.clone();
    }
    if let Some(s) = args.search_s {
        config.search_iters = s;
    }
    match args.alm_shape.len() {
        0 => {}
        2 => config.alm_shape = (args.alm_shape[0], args.alm_shape[1]),
        _ => return Err(Error::invalid("--alm-shape needs exactly two values")),
    }
    if args.paper_scale {
        config = config.paper_scale();
    }
    Ok(config)
}

fn write_manifest(
    dir: &Path,
    study: &str,
    config: &StudyConfig,
    outputs: Vec<String>,
    dropped: usize,
    failures: Vec<usize>,
) -> Result<(), Error> {
    let manifest = Manifest {
        study,
        version: env!("CARGO_PKG_VERSION"),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config,
        outputs,
        dropped_reps: dropped,
        fit_failures: failures,
    };
    let path = dir.join(format!("study-{study}-manifest.json"));
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::numeric(e.to_string()))?;
    std::fs::write(&path, text)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_study(args: StudyArgs) -> Result<(), Error> {
    let config = build_study_config(&args)?;
    std::fs::create_dir_all(&args.out_dir)?;
    match args.study {
        StudyName::Logmse => {
            let mut outputs = Vec::new();
            let mut failures = Vec::new();
            // tables are flushed per dimension as they complete
            for &d in &config.dims {
                let mut one = config.clone();
                one.dims = vec![d];
                let tables = logmse_study(&one)?;
                let table = &tables[0];
                let name = csv_filename("logmse", table.d, table.n);
                let file = std::fs::File::create(args.out_dir.join(&name))?;
                table.write_csv(std::io::BufWriter::new(file))?;
                println!("wrote {}", args.out_dir.join(&name).display());
                outputs.push(name);
                failures.extend_from_slice(&table.failures);
            }
            write_manifest(&args.out_dir, "logmse", &config, outputs, 0, failures)
        }
        StudyName::Alm => {
            let table = alm_study(&config)?;
            let name = csv_filename("alm", 2, config.total_n);
            let file = std::fs::File::create(args.out_dir.join(&name))?;
            table.write_csv(std::io::BufWriter::new(file))?;
            println!("wrote {}", args.out_dir.join(&name).display());
            write_manifest(
                &args.out_dir,
                "alm",
                &config,
                vec![name],
                table.dropped_reps,
                Vec::new(),
            )
        }
        StudyName::Bo => {
            let table = bo_study(&config)?;
            let mut outputs = Vec::new();
            for &ckpt in &table.checkpoints {
                let name = csv_filename("bo", config.bo_d, ckpt);
                let file = std::fs::File::create(args.out_dir.join(&name))?;
                table.write_pvals_csv(std::io::BufWriter::new(file), ckpt)?;
                println!("wrote {}", args.out_dir.join(&name).display());
                outputs.push(name);
            }
            let trace_name = csv_filename(
                "bo-trace",
                config.bo_d,
                *table.checkpoints.iter().max().unwrap(),
            );
            let file = std::fs::File::create(args.out_dir.join(&trace_name))?;
            table.write_summary_csv(std::io::BufWriter::new(file))?;
            println!("wrote {}", args.out_dir.join(&trace_name).display());
            outputs.push(trace_name);
            write_manifest(
                &args.out_dir,
                "bo",
                &config,
                outputs,
                table.dropped_reps,
                Vec::new(),
            )
        }
    }
}
