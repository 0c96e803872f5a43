use std::fs::File;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Checkpoint, KrylovConfig, Propagator, SampleSchedule, StepStats};
use crate::error::{Error, Result};
use crate::magnus::LinearMapExpr;
use crate::observables::{Observable, ObservableSet};
use crate::pauli::PauliTermSum;
use crate::series::{RunMetadata, TimeSeries};
use crate::state::StateVector;

/// Where and how often to snapshot the state.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointPolicy {
    pub path: PathBuf,
    pub every_periods: u64,
}

/// Early termination once the quantity of interest has relaxed.
#[derive(Clone, Debug, PartialEq)]
pub enum StopRule {
    /// Stop `extra_samples` samples after `|column|` first drops to
    /// `fraction` of its magnitude at the first sample.
    DecayedBelow {
        column: String,
        fraction: f64,
        extra_samples: usize,
    },
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    pub krylov: KrylovConfig,
    pub checkpoint: Option<CheckpointPolicy>,
    /// Rows are appended and flushed here as they are produced.
    pub series_path: Option<PathBuf>,
    /// Copied into the series; the schedule hash is filled in by the driver.
    pub metadata: RunMetadata,
    pub stop: Option<StopRule>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Set when a [`StopRule`] ended the run before the schedule did.
    pub stopped_early: bool,
    /// Periods propagated in this call (excluding those restored from a checkpoint).
    pub periods: u64,
    pub resumed_from: Option<u64>,
    pub matvecs: u64,
    pub max_substeps: usize,
    pub max_renormalization: f64,
    pub total_renormalization: f64,
    pub error_estimate: f64,
    pub wall_seconds: f64,
}

impl RunStats {
    fn absorb(&mut self, s: &StepStats) {
        self.matvecs += s.matvecs as u64;
        self.max_substeps = self.max_substeps.max(s.substeps);
        self.max_renormalization = self.max_renormalization.max(s.renormalization);
        self.total_renormalization += s.renormalization;
        self.error_estimate += s.error_estimate;
    }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub series: TimeSeries,
    pub final_state: StateVector,
    pub stats: RunStats,
}

/// One drive period, `exp(-i T/2 (D - E)) exp(-i T/2 (D + E))`, with both
/// half-period propagators kept warm between calls.
pub struct FloquetStepper {
    first: Propagator<PauliTermSum>,
    second: Propagator<PauliTermSum>,
    half: f64,
}

impl FloquetStepper {
    pub fn new(static_part: &PauliTermSum, drive_part: &PauliTermSum, period: f64, cfg: &KrylovConfig) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidParams(format!("period must be positive, got {period}")));
        }
        Ok(Self {
            first: Propagator::new(static_part.add_scaled(drive_part, 1.0)?, cfg)?,
            second: Propagator::new(static_part.add_scaled(drive_part, -1.0)?, cfg)?,
            half: period / 2.0,
        })
    }

    pub fn step(&mut self, v: &StateVector) -> Result<(StateVector, StepStats)> {
        let (mid, a) = self.first.step(v, self.half)?;
        let (out, b) = self.second.step(&mid, self.half)?;
        Ok((
            out,
            StepStats {
                substeps: a.substeps.max(b.substeps),
                matvecs: a.matvecs + b.matvecs,
                max_subspace_used: a.max_subspace_used.max(b.max_subspace_used),
                error_estimate: a.error_estimate + b.error_estimate,
                renormalization: a.renormalization + b.renormalization,
            },
        ))
    }
}

/// Exact stroboscopic evolution under the two-step drive.
pub fn evolve_stroboscopic(
    static_part: &PauliTermSum,
    drive_part: &PauliTermSum,
    period: f64,
    v0: &StateVector,
    schedule: &SampleSchedule,
    observables: &[Observable],
    opts: &EvolveOptions,
) -> Result<Evolution> {
    let probes = ObservableSet::new(static_part, drive_part, period, observables)?;
    let mut stepper = FloquetStepper::new(static_part, drive_part, period, &opts.krylov)?;
    drive(|v| stepper.step(v), period, v0, schedule, &probes, opts, "floquet")
}

/// Evolution under `exp(-i T D_eff^n)` per period.
pub fn evolve_under_deff(
    deff: &LinearMapExpr,
    v0: &StateVector,
    schedule: &SampleSchedule,
    observables: &[Observable],
    opts: &EvolveOptions,
) -> Result<Evolution> {
    let period = deff.period();
    let order = deff
        .order()
        .ok_or_else(|| Error::InvalidParams("generator has no truncation order".into()))?;
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidParams(format!("period must be positive, got {period}")));
    }
    let probes = ObservableSet::new(deff.static_part(), deff.drive_part(), period, observables)?;
    let mut prop = Propagator::new(deff, &opts.krylov)?;
    let label = format!("deff_n{order}");
    drive(|v| prop.step(v, period), period, v0, schedule, &probes, opts, &label)
}

fn drive(
    mut step: impl FnMut(&StateVector) -> Result<(StateVector, StepStats)>,
    period: f64,
    v0: &StateVector,
    schedule: &SampleSchedule,
    probes: &ObservableSet,
    opts: &EvolveOptions,
    generator: &str,
) -> Result<Evolution> {
    let started = Instant::now();
    if v0.sites() != probes.sites() {
        return Err(Error::DimensionMismatch {
            expected: 1 << probes.sites(),
            found: v0.dim(),
        });
    }
    if let Some(policy) = &opts.checkpoint {
        if policy.every_periods == 0 {
            return Err(Error::InvalidParams("checkpoint interval must be positive".into()));
        }
    }
    let mut metadata = opts.metadata.clone();
    metadata.schedule_hash = schedule.hash_hex();
    if metadata.generator.is_empty() {
        metadata.generator = generator.to_string();
    }
    let mut series = TimeSeries::new(metadata, probes.names())?;
    let mut stats = RunStats::default();

    let mut state = v0.clone();
    let mut current = 0u64;
    if let Some(cp) = resume_point(opts, schedule, v0.sites())? {
        let path = opts.series_path.as_ref().expect("checked by resume_point");
        let mut previous = TimeSeries::load_csv(path)?;
        if previous.columns() != series.columns() {
            return Err(Error::Checkpoint(format!(
                "series columns {:?} do not match requested {:?}",
                previous.columns(),
                series.columns()
            )));
        }
        previous.truncate_after(cp.period);
        for k in 0..previous.len() {
            series.push(previous.periods()[k], previous.times()[k], previous.row(k).to_vec())?;
        }
        log::info!("resuming at period {} from {}", cp.period, path.display());
        stats.resumed_from = Some(cp.period);
        current = cp.period;
        state = cp.state;
    }

    let mut writer = match &opts.series_path {
        Some(path) => {
            let mut w = csv::Writer::from_writer(File::create(path)?);
            w.write_record(series.header())?;
            for k in 0..series.len() {
                w.write_record(series.record(k))?;
            }
            w.flush()?;
            Some(w)
        }
        None => None,
    };
    let mut record = |series: &mut TimeSeries, p: u64, state: &StateVector| -> Result<()> {
        series.push(p, p as f64 * period, probes.evaluate(state)?)?;
        if let Some(w) = writer.as_mut() {
            w.write_record(series.record(series.len() - 1))?;
            w.flush()?;
        }
        Ok(())
    };

    if stats.resumed_from.is_none() {
        record(&mut series, 0, &state)?;
    }
    let stop_due = stop_check(opts.stop.as_ref(), &series)?;
    let mut next_sample = schedule.periods().partition_point(|&p| p <= current);
    while current < schedule.last() {
        if stop_due(&series) {
            stats.stopped_early = true;
            break;
        }
        let (next, s) = step(&state).map_err(|e| {
            log::error!("evolution aborted after period {current}: {e}");
            e
        })?;
        state = next;
        current += 1;
        stats.periods += 1;
        stats.absorb(&s);
        if schedule.periods().get(next_sample) == Some(&current) {
            record(&mut series, current, &state)?;
            next_sample += 1;
        }
        if let Some(policy) = &opts.checkpoint {
            if current.is_multiple_of(policy.every_periods) || current == schedule.last() {
                Checkpoint {
                    period: current,
                    schedule_hash: schedule.hash(),
                    state: state.clone(),
                }
                .save(&policy.path)?;
            }
        }
    }
    if stats.stopped_early {
        if let Some(policy) = &opts.checkpoint {
            Checkpoint {
                period: current,
                schedule_hash: schedule.hash(),
                state: state.clone(),
            }
            .save(&policy.path)?;
        }
    }
    if stats.max_renormalization > super::RENORMALIZATION_WARNING {
        log::warn!(
            "accumulated renormalization {:.3e} over {} periods",
            stats.total_renormalization,
            stats.periods
        );
    }
    stats.wall_seconds = started.elapsed().as_secs_f64();
    Ok(Evolution {
        series,
        final_state: state,
        stats,
    })
}

/// Predicate telling whether the stop rule (if any) has fired on a series.
fn stop_check(rule: Option<&StopRule>, series: &TimeSeries) -> Result<impl Fn(&TimeSeries) -> bool> {
    let rule = match rule {
        Some(StopRule::DecayedBelow {
            column,
            fraction,
            extra_samples,
        }) => {
            let k = series
                .columns()
                .iter()
                .position(|c| c == column)
                .ok_or_else(|| Error::MissingColumn(column.clone()))?;
            Some((k, *fraction, *extra_samples))
        }
        None => None,
    };
    Ok(move |series: &TimeSeries| {
        let Some((k, fraction, extra)) = rule else {
            return false;
        };
        if series.is_empty() {
            return false;
        }
        let first = series.row(0)[k].abs();
        (1..series.len())
            .find(|&r| series.row(r)[k].abs() <= fraction * first)
            .is_some_and(|r| series.len() - 1 - r >= extra)
    })
}

/// Loads a compatible checkpoint when the options name one that exists.
fn resume_point(opts: &EvolveOptions, schedule: &SampleSchedule, sites: usize) -> Result<Option<Checkpoint>> {
    let Some(policy) = &opts.checkpoint else {
        return Ok(None);
    };
    if !policy.path.exists() {
        return Ok(None);
    }
    let cp = Checkpoint::load(&policy.path)?;
    if cp.state.sites() != sites {
        return Err(Error::Checkpoint(format!(
            "checkpoint has L = {}, run has L = {sites}",
            cp.state.sites()
        )));
    }
    if cp.schedule_hash != schedule.hash() {
        return Err(Error::Checkpoint("checkpoint was written for a different schedule".into()));
    }
    if cp.period > schedule.last() {
        return Err(Error::Checkpoint(format!(
            "checkpoint period {} is beyond the schedule end {}",
            cp.period,
            schedule.last()
        )));
    }
    match &opts.series_path {
        Some(p) if p.exists() => Ok(Some(cp)),
        _ => Err(Error::Checkpoint("resuming requires the partial series file".into())),
    }
}
