use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polybandit::analysis::{
    gap_dependent_leading, gap_free_bound, lower_bound_gap_dependent, lower_bound_gap_free,
};
use polybandit::experiment::{
    execute, resolve_seed, run_experiment, ExperimentConfig, ExperimentError, PolymatroidSpec, RunOptions,
    AXIOM_BUDGET,
};
use polybandit::polymatroid::{check_polymatroid_axioms, greedy_max_basis, greedy_min_basis};

const EXIT_ERROR: u8 = 1;
const EXIT_DIAGNOSTIC: u8 = 3;

#[derive(Parser)]
#[command(name = "polybandit", version, about = "Polymatroid semi-bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write CSV/JSON results.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Base seed; falls back to the config, then POLYBANDIT_SEED.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the greedy basis of a polymatroid for a weight vector.
    Greedy {
        /// Polymatroid spec (TOML, or JSON by extension).
        #[arg(long)]
        polymatroid: PathBuf,
        /// Whitespace-separated weights; `#` starts a comment.
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        minimize: bool,
    },
    /// Print the upper and lower regret bounds.
    Bounds {
        #[arg(long = "L", short = 'l')]
        l: usize,
        #[arg(long = "K", short = 'k')]
        k: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, short = 'n')]
        n: u64,
    },
    /// Check the polymatroid axioms and the regret decomposition for a config.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Episodes per policy to decompose.
        #[arg(long, default_value_t = 1000)]
        episodes: u64,
    },
}

fn parse_weights(path: &Path) -> Result<Vec<f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut weights = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut col = 0;
        for token in content.split_whitespace() {
            col = content[col..].find(token).map_or(col, |p| col + p) + token.len();
            let v: f64 = token.parse().map_err(|_| {
                format!("{}:{}:{}: invalid weight `{token}`", path.display(), i + 1, col - token.len() + 1)
            })?;
            weights.push(v);
        }
    }
    if weights.is_empty() {
        return Err(format!("{}: no weights", path.display()));
    }
    Ok(weights)
}

fn greedy(polymatroid: &Path, weights: &Path, minimize: bool) -> Result<(), String> {
    let m = PolymatroidSpec::load(polymatroid)
        .and_then(|s| s.build())
        .map_err(|e| e.to_string())?;
    let w = parse_weights(weights)?;
    let basis = if minimize { greedy_min_basis(&m, &w) } else { greedy_max_basis(&m, &w) }.map_err(|e| e.to_string())?;
    let entries: Vec<String> = basis.x.iter().map(|v| v.to_string()).collect();
    println!("{}", entries.join(" "));
    println!("value {}", basis.value(&w));
    Ok(())
}

fn bounds(l: usize, k: f64, delta: f64, n: u64) -> Result<(), String> {
    let leading = gap_dependent_leading(l, delta, n).map_err(|e| e.to_string())?;
    let free = gap_free_bound(k, l, n).map_err(|e| e.to_string())?;
    let blocks = (k.fract() == 0.0 && k >= 1.0).then_some(k as usize);
    let lower_dep = blocks.and_then(|k| lower_bound_gap_dependent(l, k, delta).ok());
    let lower_free = blocks.and_then(|k| lower_bound_gap_free::<f64>(l, k, n).ok());
    let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2}"));
    println!("gap_dependent_leading  {leading:.2}");
    println!("gap_free               {free:.2}");
    println!("lower_gap_dependent    {}", show(lower_dep.map(|c| c * (n as f64).ln())));
    println!("lower_gap_free         {}", show(lower_free));
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn check(config: &Path, seed: Option<u64>, episodes: u64) -> Result<(), ExperimentError> {
    let mut cfg = load_config(config)?;
    let (_, m) = cfg.environment.build()?;
    let base_seed = resolve_seed(seed, &cfg)?;
    let report = check_polymatroid_axioms(&m, AXIOM_BUDGET, base_seed);
    println!(
        "axioms: {} ({} checks, {})",
        if report.is_ok() { "ok" } else { "VIOLATED" },
        report.checks,
        if report.exhaustive { "exhaustive" } else { "sampled" }
    );
    for v in &report.violations {
        println!("  {v:?}");
    }
    if !report.is_ok() {
        return Err(ExperimentError::Diagnostic("polymatroid axioms".into()));
    }
    cfg.n = cfg.n.min(episodes);
    cfg.runs = 1;
    cfg.diagnostics.decomposition_check = true;
    let outcome = execute(&cfg, &RunOptions { seed: Some(base_seed), ..Default::default() })?;
    for p in &outcome.summary.policies {
        println!("decomposition {}: ok ({} episodes)", p.label, p.decomposition_checks);
    }
    let flags = &outcome.summary.flags;
    if flags.unnormalized {
        println!("note: unnormalized instance, max singleton value {}", flags.max_singleton);
    }
    if flags.leading_zero_contribution {
        println!("note: best item has no optimal contribution");
    }
    if flags.min_gap.is_none() {
        println!("note: no positive gap, gap-dependent bound undefined");
    }
    Ok(())
}

fn exit_for(e: &ExperimentError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ExperimentError::Diagnostic(_) => ExitCode::from(EXIT_DIAGNOSTIC),
        _ => ExitCode::from(EXIT_ERROR),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, jobs, out } => {
            let result = load_config(&config).and_then(|cfg| {
                let opts = RunOptions { jobs, seed, progress: true };
                run_experiment(&cfg, &opts, out.as_deref())
            });
            match result {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => exit_for(&e),
            }
        }
        Command::Greedy { polymatroid, weights, minimize } => match greedy(&polymatroid, &weights, minimize) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
        Command::Bounds { l, k, delta, n } => match bounds(l, k, delta, n) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
        Command::Check { config, seed, episodes } => match check(&config, seed, episodes) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_for(&e),
        },
    }
}
