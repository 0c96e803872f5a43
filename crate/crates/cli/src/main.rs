mod config;
mod oracle;
mod report;
mod sweep;

use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use prethermal::analysis::{delta_series, inputs_hash, plateau_height, slope_six_subregions, FitRecord};
use prethermal::hamiltonian::{build_drive_part, build_static_part, initial_state};
use prethermal::krylov::{default_log_schedule, CheckpointPolicy, KrylovConfig};
use prethermal::magnus::{assemble_deff, words_csv};
use prethermal::observables::{energy_density, parse_observable_list};
use prethermal::thermal::{
    build_interpolant, default_beta_grid, ed_dense, estimate_plateau, plateau_from_timeseries, ThermalCurve,
};
use prethermal::{ModelParams, Observable, RangeMode, TimeSeries};

use crate::config::{SweepConfig, WindowConfig};
use crate::report::AnalysisSettings;
use crate::sweep::{Generator, RunSpec};

#[derive(Parser)]
#[command(name = "prethermal", version, about = "Floquet prethermalization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one initial state and write its time series.
    Evolve(EvolveArgs),
    /// Deviation between a full Floquet run and a truncated-generator run.
    Compare(CompareArgs),
    /// Thermal entropy curve from exact diagonalization, with plateau estimates.
    Thermal(ThermalArgs),
    /// Heating times and fits for a sweep directory.
    Analyze(AnalyzeArgs),
    /// Expansion coefficient tables.
    Words {
        #[command(subcommand)]
        command: WordsCommand,
    },
    /// Dense small-chain validation suite.
    Oracle {
        #[arg(long, default_value_t = 100)]
        periods: u64,
    },
    /// Run every job described by a config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the PRETHERMAL_WORKERS environment variable.
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Subcommand)]
enum WordsCommand {
    /// Print every operator word with its coefficient as CSV.
    Dump,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_parser = parse_range)]
    model: RangeMode,
    #[arg(long = "L")]
    sites: usize,
    #[arg(long)]
    omega: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        let p = ModelParams::new(self.sites, self.model, self.omega);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    domain_walls: usize,
    #[arg(long)]
    periods: u64,
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 2, 4])]
    orders: Vec<usize>,
    #[arg(long, default_value = "energy,entropy")]
    observables: String,
    #[arg(long, default_value_t = 10)]
    points_per_decade: u32,
    /// Evolve with the truncated generator of this order instead of the drive.
    #[arg(long)]
    deff_order: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Snapshot file; an existing compatible snapshot is resumed.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    checkpoint_every: u64,
    #[arg(long)]
    krylov_tolerance: Option<f64>,
}

#[derive(Args)]
struct CompareArgs {
    /// Series from the exact drive.
    #[arg(long)]
    full: PathBuf,
    /// Series from a truncated generator, on the same schedule.
    #[arg(long)]
    truncated: PathBuf,
    #[arg(long)]
    column: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_parser = parse_window)]
    plateau_window: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_window)]
    slope_window: Option<(f64, f64)>,
}

#[derive(Args)]
struct ThermalArgs {
    /// Model and chain length used for exact diagonalization.
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 4)]
    order: usize,
    #[arg(long, default_value_t = 40)]
    beta_points: usize,
    /// Where to write the `beta,epsilon,s_half` table.
    #[arg(long)]
    out: PathBuf,
    /// Time series of a larger chain whose plateau should be estimated.
    #[arg(long)]
    series: Option<PathBuf>,
    /// Chain length of `--series`.
    #[arg(long = "target-L")]
    target_sites: Option<usize>,
    #[arg(long)]
    t_pre: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    t_pre: Option<f64>,
    #[arg(long)]
    delta_observable: Option<String>,
    #[arg(long, value_parser = parse_window)]
    plateau_window: Option<(f64, f64)>,
    #[arg(long, value_parser = parse_window)]
    slope_window: Option<(f64, f64)>,
    /// Ignore the heating-time uncertainties in the frequency fit.
    #[arg(long)]
    unweighted: bool,
}

fn parse_range(s: &str) -> Result<RangeMode, String> {
    s.parse().map_err(|e: prethermal::Error| e.to_string())
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `start,end`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a < b) {
        return Err("window start must precede its end".into());
    }
    Ok((a, b))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Evolve(args) => evolve(args)?,
        Command::Compare(args) => compare(args)?,
        Command::Thermal(args) => thermal(args)?,
        Command::Analyze(args) => {
            let settings = settings_for_dir(&args)?;
            let records = report::analyze_dir(&args.dir, &settings)?;
            println!("{}", serde_json::to_string_pretty(&records)?);
        }
        Command::Words {
            command: WordsCommand::Dump,
        } => print!("{}", words_csv()),
        Command::Oracle { periods } => {
            let checks = oracle::run_all(periods)?;
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {}: {:.3e} ({})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.bound
                );
                ok &= c.passed;
            }
            if !ok {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Sweep { config, workers } => {
            let cfg = SweepConfig::load(&config)?;
            let workers = workers.unwrap_or_else(sweep::worker_count);
            let summary = sweep::run_sweep(&cfg, workers)?;
            println!(
                "completed {}, skipped {}, failed {}",
                summary.completed, summary.skipped, summary.failed
            );
            let settings = AnalysisSettings {
                t_pre: Some(cfg.t_pre()),
                delta_observable: cfg.delta_observable.clone(),
                windows: cfg.windows,
                weighted: true,
            };
            report::analyze_dir(&cfg.output_dir, &settings)?;
            if summary.failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn evolve(args: EvolveArgs) -> Result<()> {
    let params = args.model.params()?;
    let mut krylov = KrylovConfig::default();
    if let Some(tol) = args.krylov_tolerance {
        krylov.tolerance = tol;
    }
    let observables: Vec<String> = parse_observable_list(&args.observables, &args.orders, params.sites)?
        .iter()
        .map(Observable::name)
        .collect();
    let spec = RunSpec {
        params,
        domain_walls: args.domain_walls,
        generator: args.deff_order.map_or(Generator::Floquet, Generator::Deff),
        orders: args.orders,
        observables,
        schedule: default_log_schedule(args.periods, args.points_per_decade)?,
        krylov,
    };
    let checkpoint = args.checkpoint.map(|path| CheckpointPolicy {
        path,
        every_periods: args.checkpoint_every,
    });
    let stats = spec.execute(&args.out, checkpoint)?;
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let full = TimeSeries::load_csv(&args.full)?;
    let truncated = TimeSeries::load_csv(&args.truncated)?;
    let delta = delta_series(&full, &truncated, &args.column)?;
    delta.save_csv(&args.out)?;
    let mut inputs = delta.times().to_vec();
    inputs.extend(delta.column("delta")?);
    let hash = inputs_hash(&inputs);
    let mut records = Vec::new();
    if let Some(w) = args.plateau_window {
        let fit = plateau_height(&delta, "delta", w)?;
        records.push(FitRecord {
            quantity: "plateau_height".into(),
            value: Some(fit.value),
            uncertainty_2sigma: Some(fit.uncertainty),
            window: Some(fit.window),
            method: "mean of delta in window".into(),
            inputs_hash: hash.clone(),
        });
    }
    if let Some(w) = args.slope_window {
        let fit = slope_six_subregions(&delta, "delta", w)?;
        records.push(FitRecord {
            quantity: "delta_slope".into(),
            value: Some(fit.value),
            uncertainty_2sigma: Some(fit.uncertainty),
            window: Some(fit.window),
            method: "mean slope over six subregions".into(),
            inputs_hash: hash,
        });
    }
    println!("{}", serde_json::to_string_pretty(&records)?);
    Ok(())
}

fn thermal(args: ThermalArgs) -> Result<()> {
    let p = args.model.params()?;
    let deff = assemble_deff(&build_static_part(&p)?, &build_drive_part(&p)?, p.period(), args.order)?;
    let spectrum = ed_dense(&deff, p.sites)?;
    let curve = ThermalCurve::build(&spectrum, &default_beta_grid(args.beta_points), p.range)?;
    curve.write_csv(File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?)?;
    let interp = build_interpolant(&curve)?;
    println!(
        "L' = {}: energy density range [{:.6}, {:.6}]",
        p.sites,
        spectrum.min_energy_density(),
        spectrum.max_energy_density()
    );

    let Some(path) = args.series else {
        return Ok(());
    };
    let Some(target) = args.target_sites else {
        bail!("--series needs --target-L");
    };
    let series = TimeSeries::load_csv(&path)?;
    let column = format!("energy_n{}", args.order);
    let eps_l = *series
        .column(&column)?
        .first()
        .with_context(|| format!("{} has no rows", path.display()))?;
    let target_params = ModelParams { sites: target, ..p.clone() };
    let target_deff = assemble_deff(
        &build_static_part(&target_params)?,
        &build_drive_part(&target_params)?,
        p.period(),
        args.order,
    )?;
    let eps_l_max = energy_density(args.order, &target_deff, &initial_state(target, 0)?)?;
    let est = estimate_plateau(eps_l, eps_l_max, spectrum.max_energy_density(), &interp, target)?;
    println!("{}", serde_json::to_string_pretty(&est)?);
    if series.columns().iter().any(|c| c == "entropy") {
        let t_pre = args.t_pre.unwrap_or(match p.range {
            RangeMode::ShortRange => 300.0,
            RangeMode::LongRange => 200.0,
        });
        let measured = plateau_from_timeseries(&series, "entropy", t_pre)?;
        println!("measured entropy at t_pre = {t_pre}: {measured:.6}");
    }
    Ok(())
}

fn settings_for_dir(args: &AnalyzeArgs) -> Result<AnalysisSettings> {
    let saved = args.dir.join("sweep_config.json");
    let cfg: Option<SweepConfig> = if saved.exists() {
        Some(serde_json::from_str(&std::fs::read_to_string(&saved)?)?)
    } else {
        None
    };
    let windows = cfg.as_ref().map(|c| c.windows).unwrap_or_default();
    Ok(AnalysisSettings {
        t_pre: args.t_pre.or(cfg.as_ref().and_then(|c| c.t_pre)),
        delta_observable: args
            .delta_observable
            .clone()
            .or(cfg.as_ref().and_then(|c| c.delta_observable.clone())),
        windows: WindowConfig {
            plateau: args.plateau_window.or(windows.plateau),
            slope: args.slope_window.or(windows.slope),
        },
        weighted: !args.unweighted,
    })
}
