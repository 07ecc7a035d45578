use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use analogcast_core::experiment::{parse_config, ExperimentOutput};
use analogcast_core::{print_config, run_experiment, ConcordanceMeasure, RunConfig};
use clap::Parser;

/// Forecast held-out horizons of a price series by analog matching plus
/// evolved mappings, and compare against an ARIMA baseline.
///
/// Every flag is optional; unset flags keep the value from `--config`, or the
/// built-in default shown by `--print-config`.
#[derive(Debug, Parser)]
#[command(name = "analogcast", version)]
struct Args {
    /// TOML config (as produced by --print-config) to start from.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Yahoo-format CSV with a Date column. [default: prices.csv]
    #[arg(long)]
    input: Option<PathBuf>,
    /// Value column to forecast. [default: "Adj Close"]
    #[arg(long)]
    column: Option<String>,
    /// Length of the present window. [default: 30]
    #[arg(long)]
    present_window: Option<usize>,
    /// Shortest analog considered. [default: 10]
    #[arg(long)]
    min_len: Option<usize>,
    /// Longest analog considered. [default: 30]
    #[arg(long)]
    max_len: Option<usize>,
    /// Comma-separated held-out horizons in business days. [default: 5,10,15,20]
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Comma-separated concordance measures: tau, rho, gini, weak. [default: tau,rho,gini]
    #[arg(long, value_delimiter = ',')]
    measures: Option<Vec<ConcordanceMeasure>>,
    /// GP population size. [default: 500]
    #[arg(long)]
    pop: Option<usize>,
    /// GP generation cap. [default: 200]
    #[arg(long)]
    gens: Option<usize>,
    /// GP tree depth cap. [default: 8]
    #[arg(long)]
    max_depth: Option<usize>,
    /// ARIMA differencing order. [default: 1]
    #[arg(long)]
    arima_d: Option<usize>,
    /// ARIMA order grid bound: `P` for p,q <= P, or `P,Q`. [default: 5]
    #[arg(long, value_delimiter = ',', num_args = 1..=2)]
    arima_grid: Option<Vec<usize>>,
    /// Master seed. [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Report CSV path. [default: report.csv]
    #[arg(long)]
    report: Option<PathBuf>,
    /// Forecast-path CSV path. [default: paths.csv]
    #[arg(long)]
    paths: Option<PathBuf>,
    /// Re-forecast one day ahead from each day of the horizon.
    #[arg(long)]
    rolling: bool,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn resolve(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| format!("config: {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| format!("config: {e}"))?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:expr, $arg:expr) => {
            if let Some(v) = $arg.clone() {
                $field = v;
            }
        };
    }
    set!(cfg.input, args.input);
    set!(cfg.column, args.column);
    set!(cfg.present_window, args.present_window);
    set!(cfg.min_len, args.min_len);
    set!(cfg.max_len, args.max_len);
    set!(cfg.horizons, args.horizons);
    set!(cfg.measures, args.measures);
    set!(cfg.gp.population_size, args.pop);
    set!(cfg.gp.max_generations, args.gens);
    set!(cfg.gp.max_depth, args.max_depth);
    set!(cfg.arima_d, args.arima_d);
    set!(cfg.seed, args.seed);
    set!(cfg.report, args.report);
    set!(cfg.paths, args.paths);
    if let Some(grid) = &args.arima_grid {
        cfg.arima_max_p = grid[0];
        cfg.arima_max_q = *grid.last().expect("clap enforces 1..=2 values");
    }
    if args.max_depth.is_some() {
        cfg.gp.init_max_depth = cfg.gp.init_max_depth.min(cfg.gp.max_depth);
    }
    cfg.rolling |= args.rolling;
    cfg.validate().map_err(|e| format!("config: {e}"))?;
    Ok(cfg)
}

fn summarize(cfg: &RunConfig, out: &ExperimentOutput) {
    for run in &out.runs {
        println!("# {} (h={})", run.label(), run.horizon);
        for (ens, model) in run.ensembles.iter().zip(&run.arima_models) {
            for f in &ens.per_measure {
                println!("  {}", f.to_record().join(","));
            }
            println!("  {}", model.summary());
        }
    }
    let r = &out.report;
    println!(
        "efficiency: Hybrid {:.2}%, ARIMA {:.2}%",
        r.efficiency_hybrid, r.efficiency_arima
    );
    println!(
        "wilcoxon: W={:.1} z={:.4} p={:.4} -> {}",
        r.wilcoxon.test.w,
        r.wilcoxon.test.z,
        r.wilcoxon.test.p,
        r.wilcoxon.verdict()
    );
    println!("wrote {} and {}", cfg.report.display(), cfg.paths.display());
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match resolve(&args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    print!("{}", print_config(&cfg));
    if args.print_config {
        return ExitCode::SUCCESS;
    }
    println!();
    match run_experiment(&cfg) {
        Ok(out) => {
            summarize(&cfg, &out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
