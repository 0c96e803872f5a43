//! Fits over a finished sweep directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Result;
use prethermal::analysis::{
    delta_series, fit_exponential_tau, inputs_hash, plateau_height, slope_six_subregions, tau_star_energy,
    tau_star_entropy, FitRecord, FitResult, TauStar,
};
use prethermal::thermal::plateau_from_timeseries;
use prethermal::{RangeMode, TimeSeries};

use crate::config::WindowConfig;
use crate::sweep::{Generator, Manifest, RunStatus};

pub const FITS_FILE: &str = "fits.json";

/// Settings that are not recorded in the run manifests.
#[derive(Clone, Debug, Default)]
pub struct AnalysisSettings {
    pub t_pre: Option<f64>,
    pub delta_observable: Option<String>,
    pub windows: WindowConfig,
    pub weighted: bool,
}

fn record(quantity: String, fit: Option<&FitResult>, method: &str, inputs: &[f64]) -> FitRecord {
    FitRecord {
        quantity,
        value: fit.map(|f| f.value),
        uncertainty_2sigma: fit.map(|f| f.uncertainty),
        window: fit.map(|f| f.window),
        method: method.into(),
        inputs_hash: inputs_hash(inputs),
    }
}

fn tau_record(quantity: String, tau: &TauStar, method: &str, inputs: &[f64]) -> FitRecord {
    let mut r = record(quantity, tau.measured(), method, inputs);
    if let TauStar::Censored(reason) = tau {
        r.method = format!("{method}; censored: {reason}");
    }
    r
}

fn series_inputs(series: &TimeSeries, column: &str) -> Vec<f64> {
    let mut v = series.times().to_vec();
    v.extend(series.column(column).unwrap_or_default());
    v
}

/// Heating times per Floquet run, exponential fits across frequency per
/// initial state, and deviation-curve fits when truncated runs exist.
pub fn analyze_dir(dir: &Path, settings: &AnalysisSettings) -> Result<Vec<FitRecord>> {
    let manifests: Vec<Manifest> = Manifest::load_all(dir)?
        .into_iter()
        .filter(|m| m.status == RunStatus::Complete)
        .collect();
    let mut records = Vec::new();
    // (range, L, walls) -> [(omega, tau)]
    let mut groups: BTreeMap<(String, usize, usize), Vec<(f64, TauStar)>> = BTreeMap::new();

    for m in manifests.iter().filter(|m| m.spec.generator == Generator::Floquet) {
        let series = TimeSeries::load_csv(&dir.join(&m.series_file))?;
        let p = &m.spec.params;
        let order = if m.spec.orders.contains(&2) { Some(2) } else { m.spec.orders.first().copied() };
        if let Some(n) = order.filter(|n| series.columns().contains(&format!("energy_n{n}"))) {
            let tau = tau_star_energy(&series, n)?;
            records.push(tau_record(
                format!("tau_star_energy/{}", m.run_id),
                &tau,
                &format!("halfway decay of |<D_eff^{n}>|/L, log-time interpolation"),
                &series_inputs(&series, &format!("energy_n{n}")),
            ));
            groups
                .entry((p.range.label().to_string(), p.sites, m.spec.domain_walls))
                .or_default()
                .push((p.omega, tau));
        }
        if series.columns().iter().any(|c| c == "entropy") && p.sites % 2 == 0 {
            let t_pre = settings.t_pre.unwrap_or(match p.range {
                RangeMode::ShortRange => 300.0,
                RangeMode::LongRange => 200.0,
            });
            let inputs = series_inputs(&series, "entropy");
            match plateau_from_timeseries(&series, "entropy", t_pre) {
                Ok(s_p) => {
                    let tau = tau_star_entropy(&series, "entropy", s_p, p.sites)?;
                    records.push(tau_record(
                        format!("tau_star_entropy/{}", m.run_id),
                        &tau,
                        &format!("halfway from plateau S(t_pre={t_pre}) = {s_p:.6} to the random-state value"),
                        &inputs,
                    ));
                }
                Err(e) => records.push(tau_record(
                    format!("tau_star_entropy/{}", m.run_id),
                    &TauStar::Censored(e.to_string()),
                    "plateau from t_pre",
                    &inputs,
                )),
            }
        }
        records.extend(delta_records(dir, m, &manifests, &series, settings)?);
    }

    for ((range, sites, walls), mut points) in groups {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let omegas: Vec<f64> = points.iter().map(|p| p.0).collect();
        let taus: Vec<TauStar> = points.into_iter().map(|p| p.1).collect();
        let inputs: Vec<f64> = omegas.iter().copied().chain(taus.iter().filter_map(TauStar::value)).collect();
        let quantity = format!("j_eff_energy/{range}_L{sites}_dw{walls}");
        match fit_exponential_tau(&omegas, &taus, settings.weighted) {
            Ok(fit) => records.push(FitRecord {
                quantity,
                value: Some(fit.j_eff),
                uncertainty_2sigma: Some(fit.j_eff_uncertainty),
                window: Some((omegas[0], omegas[omegas.len() - 1])),
                method: format!(
                    "{} fit of ln tau* vs omega, r2 = {:.4}{}",
                    if fit.weighted { "weighted" } else { "unweighted" },
                    fit.r_squared,
                    if fit.exponential_regime { "" } else { "; no exponential regime" }
                ),
                inputs_hash: inputs_hash(&inputs),
            }),
            Err(e) => records.push(FitRecord {
                quantity,
                value: None,
                uncertainty_2sigma: None,
                window: None,
                method: format!("not fitted: {e}"),
                inputs_hash: inputs_hash(&inputs),
            }),
        }
    }
    fs::write(dir.join(FITS_FILE), serde_json::to_string_pretty(&records)?)?;
    Ok(records)
}

fn delta_records(
    dir: &Path,
    floquet: &Manifest,
    all: &[Manifest],
    full: &TimeSeries,
    settings: &AnalysisSettings,
) -> Result<Vec<FitRecord>> {
    let Some(observable) = settings
        .delta_observable
        .clone()
        .or_else(|| full.columns().first().cloned())
    else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for m in all {
        let Generator::Deff(n) = m.spec.generator else { continue };
        if m.spec.params != floquet.spec.params || m.spec.domain_walls != floquet.spec.domain_walls {
            continue;
        }
        let deff = TimeSeries::load_csv(&dir.join(&m.series_file))?;
        let delta = delta_series(full, &deff, &observable)?;
        let name = format!("{}_delta_n{n}", floquet.run_id);
        delta.save_csv(&dir.join(format!("{name}.csv")))?;
        let inputs = series_inputs(&delta, "delta");
        if let Some(w) = settings.windows.plateau {
            let fit = plateau_height(&delta, "delta", w).ok();
            out.push(record(format!("plateau_height/{name}"), fit.as_ref(), "mean of delta in window", &inputs));
        }
        if let Some(w) = settings.windows.slope {
            let fit = slope_six_subregions(&delta, "delta", w).ok();
            out.push(record(
                format!("delta_slope/{name}"),
                fit.as_ref(),
                "mean slope over six subregions",
                &inputs,
            ));
        }
    }
    Ok(out)
}
