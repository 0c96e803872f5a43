//! Post-processing of evolution series: heating times, plateau onset,
//! deviation curves and the fits built on them.
//!
//! Uncertainties follow a two-sigma convention throughout. Crossing times
//! are interpolated linearly in `ln t` between neighbouring samples (linearly
//! in `t` when the earlier sample sits at `t = 0`).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::observables::page_value;
use crate::series::{RunMetadata, TimeSeries};
use crate::stats::{self, LineFit};

/// Initial energies below this magnitude count as infinite temperature.
pub const ZERO_ENERGY: f64 = 1e-12;

/// Fractions of the way to equilibrium that define a heating time and its band.
pub const CROSSING_LEVELS: (f64, f64, f64) = (0.35, 0.5, 0.65);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub value: f64,
    /// Two-sigma uncertainty.
    pub uncertainty: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub points: usize,
}

/// A heating time, or the reason none could be measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TauStar {
    Measured(FitResult),
    Censored(String),
}

impl TauStar {
    pub fn measured(&self) -> Option<&FitResult> {
        match self {
            TauStar::Measured(f) => Some(f),
            TauStar::Censored(_) => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.measured().map(|f| f.value)
    }
}

/// First time `values` reaches `level` from below (`rising`) or above.
fn crossing(times: &[f64], values: &[f64], level: f64, rising: bool) -> Option<f64> {
    let reached = |v: f64| if rising { v >= level } else { v <= level };
    let k = values.iter().position(|&v| reached(v))?;
    if k == 0 {
        return Some(times[0]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let (v0, v1) = (values[k - 1], values[k]);
    let f = (level - v0) / (v1 - v0);
    Some(if t0 > 0.0 {
        (t0.ln() + f * (t1.ln() - t0.ln())).exp()
    } else {
        t0 + f * (t1 - t0)
    })
}

fn banded(
    times: &[f64],
    values: &[f64],
    level_at: impl Fn(f64) -> f64,
    rising: bool,
    what: &str,
) -> TauStar {
    let (lo, mid, hi) = CROSSING_LEVELS;
    let Some(tau) = crossing(times, values, level_at(mid), rising) else {
        return TauStar::Censored(format!("{what} never reached the halfway level within the run"));
    };
    let end = *times.last().expect("crossing found implies samples");
    let early = crossing(times, values, level_at(lo), rising).unwrap_or(end);
    let late = crossing(times, values, level_at(hi), rising).unwrap_or(end);
    TauStar::Measured(FitResult {
        value: tau,
        uncertainty: (tau - early).abs().max((late - tau).abs()),
        window: (early, late),
        residual: 0.0,
        points: times.len(),
    })
}

/// Time at which the entropy column first rises halfway from the plateau
/// `s_plateau` to the random-state value for `sites` sites.
pub fn tau_star_entropy(series: &TimeSeries, column: &str, s_plateau: f64, sites: usize) -> Result<TauStar> {
    let page = page_value(sites)?;
    if page <= s_plateau {
        return Ok(TauStar::Censored(format!(
            "plateau {s_plateau} is not below the random-state value {page}"
        )));
    }
    let values = series.column(column)?;
    Ok(banded(
        series.times(),
        &values,
        |q| s_plateau + q * (page - s_plateau),
        true,
        "entropy",
    ))
}

/// Time at which `|<D_eff^n>|/L` first falls to half its initial magnitude.
pub fn tau_star_energy(series: &TimeSeries, order: usize) -> Result<TauStar> {
    let values = series.column(&format!("energy_n{order}"))?;
    let Some(&e0) = values.first() else {
        return Err(Error::InsufficientData("empty series".into()));
    };
    if e0.abs() < ZERO_ENERGY {
        return Ok(TauStar::Censored(format!(
            "initial energy density {e0:e} is indistinguishable from zero"
        )));
    }
    let magnitude: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    // Falling levels: 0.65 of the start is reached first, 0.35 last.
    Ok(banded(
        series.times(),
        &magnitude,
        |q| (1.0 - q) * e0.abs(),
        false,
        "energy",
    ))
}

/// Start of the entropy plateau: the first time the series enters
/// `|S - s_plateau| <= tol * s_plateau` and stays there for `dwell` samples.
pub fn tau_deff_onset(series: &TimeSeries, column: &str, s_plateau: f64, tol: f64, dwell: usize) -> Result<f64> {
    let values = series.column(column)?;
    let times = series.times();
    let band = tol * s_plateau.abs();
    let dist: Vec<f64> = values.iter().map(|v| (v - s_plateau).abs()).collect();
    let dwell = dwell.max(1);
    let k = (0..dist.len())
        .find(|&k| k + dwell <= dist.len() && dist[k..k + dwell].iter().all(|&d| d <= band))
        .ok_or_else(|| Error::NoPlateau(format!("no {dwell} consecutive samples within {band} of {s_plateau}")))?;
    Ok(crossing(&times[k.saturating_sub(1)..], &dist[k.saturating_sub(1)..], band, false)
        .expect("sample k is inside the band"))
}

fn check_aligned(a: &TimeSeries, b: &TimeSeries) -> Result<()> {
    if a.periods() != b.periods() || a.times() != b.times() {
        return Err(Error::ScheduleMismatch(format!(
            "{} vs {} samples with differing periods or times",
            a.len(),
            b.len()
        )));
    }
    let (ha, hb) = (&a.metadata().schedule_hash, &b.metadata().schedule_hash);
    if !ha.is_empty() && !hb.is_empty() && ha != hb {
        return Err(Error::ScheduleMismatch(format!("schedule hashes {ha} and {hb} differ")));
    }
    if a.metadata().domain_walls != b.metadata().domain_walls {
        return Err(Error::ScheduleMismatch("series start from different initial states".into()));
    }
    Ok(())
}

/// `|a - b|` of one column, sample by sample, in a column named `delta`.
pub fn delta_series(a: &TimeSeries, b: &TimeSeries, column: &str) -> Result<TimeSeries> {
    delta_series_mean(a, b, &[column])
}

/// Mean over `columns` of the per-column absolute differences.
pub fn delta_series_mean(a: &TimeSeries, b: &TimeSeries, columns: &[&str]) -> Result<TimeSeries> {
    check_aligned(a, b)?;
    if columns.is_empty() {
        return Err(Error::InsufficientData("no columns to compare".into()));
    }
    let mut sum = vec![0.0; a.len()];
    for c in columns {
        let (x, y) = (a.column(c)?, b.column(c)?);
        for (s, (p, q)) in sum.iter_mut().zip(x.iter().zip(&y)) {
            *s += (p - q).abs();
        }
    }
    let mut out = TimeSeries::new(
        RunMetadata {
            generator: "delta".into(),
            ..a.metadata().clone()
        },
        vec!["delta".into()],
    )?;
    for k in 0..a.len() {
        out.push(a.periods()[k], a.times()[k], vec![sum[k] / columns.len() as f64])?;
    }
    Ok(out)
}

fn window_samples(series: &TimeSeries, column: &str, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    let values = series.column(column)?;
    Ok(series
        .times()
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(t, v)| (*t, v))
        .unzip())
}

/// Mean of the least-squares slopes of six contiguous, equally populated
/// chunks of the window, with twice their spread as uncertainty.
pub fn slope_six_subregions(series: &TimeSeries, column: &str, window: (f64, f64)) -> Result<FitResult> {
    const CHUNKS: usize = 6;
    let (t, y) = window_samples(series, column, window)?;
    let n = t.len();
    if n < 2 * CHUNKS {
        return Err(Error::InsufficientData(format!(
            "{n} samples in window, need at least {}",
            2 * CHUNKS
        )));
    }
    let mut slopes = Vec::with_capacity(CHUNKS);
    let mut residual = 0.0;
    let mut start = 0;
    for c in 0..CHUNKS {
        let len = n / CHUNKS + usize::from(c < n % CHUNKS);
        let fit = stats::fit_line(&t[start..start + len], &y[start..start + len])?;
        slopes.push(fit.slope);
        residual += fit.residual;
        start += len;
    }
    Ok(FitResult {
        value: stats::mean(&slopes),
        uncertainty: 2.0 * stats::std_dev(&slopes),
        window: (t[0], t[n - 1]),
        residual: residual.sqrt(),
        points: n,
    })
}

/// Mean and twice the standard deviation of the samples in the window.
pub fn plateau_height(series: &TimeSeries, column: &str, window: (f64, f64)) -> Result<FitResult> {
    let (t, y) = window_samples(series, column, window)?;
    if y.is_empty() {
        return Err(Error::InsufficientData(format!("no samples in window {window:?}")));
    }
    let sd = stats::std_dev(&y);
    Ok(FitResult {
        value: stats::mean(&y),
        uncertainty: 2.0 * sd,
        window: (t[0], t[t.len() - 1]),
        residual: sd * (y.len() as f64).sqrt(),
        points: y.len(),
    })
}

/// `ln(rate) = intercept + slope * omega` with the energy scale `J_eff`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub j_eff: f64,
    pub j_eff_uncertainty: f64,
    pub slope: f64,
    pub slope_uncertainty: f64,
    /// `exp(intercept)`.
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
    /// False when the slope has the wrong sign for exponential scaling.
    pub exponential_regime: bool,
    pub weighted: bool,
}

fn exponential_fit(omegas: &[f64], values: &[f64], uncertainties: &[f64], weighted: bool, sign: f64) -> Result<ExponentialFit> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponential fit needs 3 measured points, got {}",
            values.len()
        )));
    }
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let use_weights = weighted && uncertainties.iter().all(|&u| u > 0.0);
    let weights: Vec<f64> = values
        .iter()
        .zip(uncertainties)
        .map(|(v, u)| (v / (u / 2.0)).powi(2))
        .collect();
    let fit: LineFit = stats::fit_line_weighted(omegas, &y, use_weights.then_some(&weights[..]))?;
    let slope = sign * fit.slope;
    if slope <= 0.0 {
        log::warn!("exponential fit slope {slope} is not positive; no exponential regime");
    }
    Ok(ExponentialFit {
        j_eff: 1.0 / slope,
        j_eff_uncertainty: 2.0 * fit.slope_stderr / (slope * slope),
        slope: fit.slope,
        slope_uncertainty: 2.0 * fit.slope_stderr,
        prefactor: fit.intercept.exp(),
        r_squared: fit.r_squared,
        points: fit.points,
        exponential_regime: slope > 0.0,
        weighted: use_weights,
    })
}

/// Fits `tau* ~ exp(omega / J_eff)` to the measured heating times; censored
/// entries are skipped. Weights are inverse variances of `ln tau*` when
/// `weighted` and every uncertainty is positive.
pub fn fit_exponential_tau(omegas: &[f64], taus: &[TauStar], weighted: bool) -> Result<ExponentialFit> {
    if omegas.len() != taus.len() {
        return Err(Error::InsufficientData("omegas and taus differ in length".into()));
    }
    let mut w = Vec::new();
    let mut v = Vec::new();
    let mut u = Vec::new();
    for (o, t) in omegas.iter().zip(taus) {
        if let Some(f) = t.measured() {
            if f.value <= 0.0 {
                return Err(Error::Domain(format!("heating time {} is not positive", f.value)));
            }
            w.push(*o);
            v.push(f.value);
            u.push(f.uncertainty);
        }
    }
    exponential_fit(&w, &v, &u, weighted, 1.0)
}

/// Fits `slope ~ exp(-omega / J_eff)` to late-time growth rates, which must
/// all be positive.
pub fn slope_from_delta_jeff(omegas: &[f64], slopes: &[FitResult], weighted: bool) -> Result<ExponentialFit> {
    if omegas.len() != slopes.len() {
        return Err(Error::InsufficientData("omegas and slopes differ in length".into()));
    }
    if slopes.iter().any(|s| s.value <= 0.0) {
        return Err(Error::Domain("growth rates must all be positive".into()));
    }
    let v: Vec<f64> = slopes.iter().map(|s| s.value).collect();
    let u: Vec<f64> = slopes.iter().map(|s| s.uncertainty).collect();
    exponential_fit(omegas, &v, &u, weighted, -1.0)
}

/// `h ~ omega^(-exponent)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub exponent_uncertainty: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Set when heights grow with frequency.
    pub negative_exponent: bool,
}

pub fn fit_powerlaw_plateau(omegas: &[f64], heights: &[FitResult]) -> Result<PowerLawFit> {
    if omegas.len() != heights.len() {
        return Err(Error::InsufficientData("omegas and heights differ in length".into()));
    }
    if heights.len() < 3 {
        return Err(Error::InsufficientData(format!("power-law fit needs 3 points, got {}", heights.len())));
    }
    if heights.iter().any(|h| h.value <= 0.0) || omegas.iter().any(|&o| o <= 0.0) {
        return Err(Error::Domain("heights and frequencies must be positive".into()));
    }
    let x: Vec<f64> = omegas.iter().map(|o| o.ln()).collect();
    let y: Vec<f64> = heights.iter().map(|h| h.value.ln()).collect();
    let fit = stats::fit_line(&x, &y)?;
    let exponent = -fit.slope;
    if exponent < 0.0 {
        log::warn!("plateau heights grow with frequency (exponent {exponent})");
    }
    Ok(PowerLawFit {
        exponent,
        exponent_uncertainty: 2.0 * fit.slope_stderr,
        prefactor: fit.intercept.exp(),
        r_squared: fit.r_squared,
        points: fit.points,
        negative_exponent: exponent < 0.0,
    })
}

/// One line of the fit summary written next to a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub quantity: String,
    pub value: Option<f64>,
    pub uncertainty_2sigma: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub method: String,
    pub inputs_hash: String,
}

/// Hex SHA-256 of the little-endian bytes of `inputs`.
pub fn inputs_hash(inputs: &[f64]) -> String {
    let mut h = Sha256::new();
    for x in inputs {
        h.update(x.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
