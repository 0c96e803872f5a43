//! Sweep planning, execution and per-run manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use prethermal::hamiltonian::{build_drive_part, build_static_part, initial_state};
use prethermal::krylov::{
    default_log_schedule, evolve_stroboscopic, evolve_under_deff, CheckpointPolicy, EvolveOptions, KrylovConfig,
    RunStats, SampleSchedule,
};
use prethermal::magnus::assemble_deff;
use prethermal::observables::parse_observable_list;
use prethermal::{ModelParams, Observable, RunMetadata};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SweepConfig;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "PRETHERMAL_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Floquet,
    Deff(usize),
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Floquet => write!(f, "floquet"),
            Generator::Deff(n) => write!(f, "deff_n{n}"),
        }
    }
}

/// Everything that determines the output of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub params: ModelParams,
    pub domain_walls: usize,
    pub generator: Generator,
    pub orders: Vec<usize>,
    pub observables: Vec<String>,
    pub schedule: SampleSchedule,
    pub krylov: KrylovConfig,
}

impl RunSpec {
    pub fn id(&self) -> String {
        format!(
            "{}_L{}_w{}_dw{}_{}",
            self.params.range.label(),
            self.params.sites,
            self.params.omega,
            self.domain_walls,
            self.generator
        )
    }

    /// Hex SHA-256 of the canonical JSON form of the spec.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("run spec serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn observables(&self) -> Result<Vec<Observable>> {
        self.observables
            .iter()
            .map(|s| s.parse::<Observable>().map_err(Into::into))
            .collect()
    }

    pub fn execute(&self, series_path: &Path, checkpoint: Option<CheckpointPolicy>) -> Result<RunStats> {
        let d = build_static_part(&self.params)?;
        let e = build_drive_part(&self.params)?;
        let v0 = initial_state(self.params.sites, self.domain_walls)?;
        let opts = EvolveOptions {
            krylov: self.krylov.clone(),
            checkpoint,
            series_path: Some(series_path.to_path_buf()),
            metadata: RunMetadata {
                params: Some(self.params.clone()),
                orders: self.orders.clone(),
                domain_walls: Some(self.domain_walls),
                schedule_hash: String::new(),
                generator: self.generator.to_string(),
            },
            stop: None,
        };
        let observables = self.observables()?;
        let evolution = match self.generator {
            Generator::Floquet => {
                evolve_stroboscopic(&d, &e, self.params.period(), &v0, &self.schedule, &observables, &opts)?
            }
            Generator::Deff(n) => {
                let map = assemble_deff(&d, &e, self.params.period(), n)?;
                evolve_under_deff(&map, &v0, &self.schedule, &observables, &opts)?
            }
        };
        Ok(evolution.stats)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Complete,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub hash: String,
    pub status: RunStatus,
    pub spec: RunSpec,
    pub schedule_hash: String,
    pub series_file: String,
    pub wall_seconds: f64,
    pub stats: Option<RunStats>,
    pub error: Option<String>,
}

impl Manifest {
    pub fn path(dir: &Path, run_id: &str) -> PathBuf {
        dir.join(format!("{run_id}.manifest.json"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = Self::path(dir, &self.run_id);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_string_pretty(self)?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Every manifest in `dir`, sorted by run id.
    pub fn load_all(dir: &Path) -> Result<Vec<Self>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
            let path = entry?.path();
            if path.to_string_lossy().ends_with(".manifest.json") {
                out.push(Self::load(&path)?);
            }
        }
        out.sort_by(|a, b| a.run_id.cmp(&b.run_id));
        Ok(out)
    }
}

/// All runs implied by a config: one Floquet run per frequency and initial
/// state, plus one run per truncation order when requested.
pub fn plan(cfg: &SweepConfig) -> Result<Vec<RunSpec>> {
    let schedule = default_log_schedule(cfg.periods_max, cfg.schedule.points_per_decade)?;
    let mut runs = Vec::new();
    for &omega in &cfg.omegas {
        let params = cfg.model.with_omega(omega)?;
        let observables: Vec<String> = parse_observable_list(&cfg.observables, &cfg.orders, params.sites)?
            .iter()
            .map(Observable::name)
            .collect();
        if observables.is_empty() {
            bail!("no observables requested");
        }
        for state in &cfg.initial_states {
            initial_state(params.sites, state.domain_walls)?;
            let mut generators = vec![Generator::Floquet];
            if cfg.deff_evolution {
                generators.extend(cfg.orders.iter().map(|&n| Generator::Deff(n)));
            }
            for generator in generators {
                runs.push(RunSpec {
                    params: params.clone(),
                    domain_walls: state.domain_walls,
                    generator,
                    orders: cfg.orders.clone(),
                    observables: observables.clone(),
                    schedule: schedule.clone(),
                    krylov: cfg.krylov.clone(),
                });
            }
        }
    }
    Ok(runs)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepSummary {
    pub completed: usize,
    pub skipped: usize,
    pub failed: usize,
}

enum Outcome {
    Completed,
    Skipped,
    Failed,
}

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> Result<SweepSummary> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("sweep_config.json"), serde_json::to_string_pretty(cfg)?)?;
    let runs = plan(cfg)?;
    log::info!("{} runs planned, {workers} workers", runs.len());
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let outcomes: Vec<Result<Outcome>> =
        pool.install(|| runs.par_iter().map(|spec| run_one(spec, dir, cfg.checkpoint_every)).collect());
    let mut summary = SweepSummary::default();
    for o in outcomes {
        match o? {
            Outcome::Completed => summary.completed += 1,
            Outcome::Skipped => summary.skipped += 1,
            Outcome::Failed => summary.failed += 1,
        }
    }
    Ok(summary)
}

fn run_one(spec: &RunSpec, dir: &Path, checkpoint_every: u64) -> Result<Outcome> {
    let id = spec.id();
    let hash = spec.hash();
    let manifest_path = Manifest::path(dir, &id);
    if manifest_path.exists() {
        let old = Manifest::load(&manifest_path)?;
        if old.hash == hash && old.status == RunStatus::Complete {
            log::info!("{id}: up to date, skipping");
            return Ok(Outcome::Skipped);
        }
    }
    let series_file = format!("{id}.csv");
    let checkpoint_path = dir.join(format!("{id}.ckpt"));
    let started = Instant::now();
    log::info!("{id}: starting");
    let result = spec.execute(
        &dir.join(&series_file),
        Some(CheckpointPolicy {
            path: checkpoint_path.clone(),
            every_periods: checkpoint_every,
        }),
    );
    let wall_seconds = started.elapsed().as_secs_f64();
    let (status, stats, error) = match result {
        Ok(stats) => {
            let _ = fs::remove_file(&checkpoint_path);
            (RunStatus::Complete, Some(stats), None)
        }
        Err(e) => {
            log::error!("{id}: {e:#}");
            (RunStatus::Failed, None, Some(format!("{e:#}")))
        }
    };
    Manifest {
        run_id: id,
        hash,
        status,
        schedule_hash: spec.schedule.hash_hex(),
        spec: spec.clone(),
        series_file,
        wall_seconds,
        stats,
        error,
    }
    .save(dir)?;
    Ok(match status {
        RunStatus::Complete => Outcome::Completed,
        RunStatus::Failed => Outcome::Failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use prethermal::RangeMode;

    fn spec() -> RunSpec {
        RunSpec {
            params: ModelParams::new(4, RangeMode::LongRange, 9.0),
            domain_walls: 1,
            generator: Generator::Deff(2),
            orders: vec![0, 2],
            observables: vec!["energy_n0".into(), "entropy".into()],
            schedule: default_log_schedule(10, 5).unwrap(),
            krylov: KrylovConfig::default(),
        }
    }

    #[test]
    fn id_and_hash() {
        let s = spec();
        assert_eq!(s.id(), "long_L4_w9_dw1_deff_n2");
        assert_eq!(s.hash().len(), 64);
        let mut t = s.clone();
        t.domain_walls = 2;
        assert_ne!(s.hash(), t.hash());
    }

    #[test]
    fn manifest_reconstructs_spec() {
        let s = spec();
        let m = Manifest {
            run_id: s.id(),
            hash: s.hash(),
            status: RunStatus::Complete,
            spec: s.clone(),
            schedule_hash: s.schedule.hash_hex(),
            series_file: "x.csv".into(),
            wall_seconds: 0.0,
            stats: None,
            error: None,
        };
        let back: Manifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.spec.hash(), m.hash);
    }
}
