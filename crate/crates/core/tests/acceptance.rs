//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! The heating-time runs at L=14 take hours. Their series and checkpoints are
//! kept under `target/tmp/acceptance`, keyed by model, state, generator and
//! schedule, so a repeated `cargo test` resumes or reuses them. Set
//! `PRETHERMAL_ACCEPTANCE_FRESH=1` to discard the cache before each run.

mod common;

use common::*;
use faer::Mat;
use num_complex::Complex64;
use prethermal::analysis::{
    delta_series, fit_exponential_tau, plateau_height, slope_six_subregions, tau_star_energy, tau_star_entropy,
    ExponentialFit, FitResult, TauStar,
};
use prethermal::dense::materialize;
use prethermal::hamiltonian::{build_drive_part, build_local_operator, build_static_part, initial_state, LocalKind};
use prethermal::krylov::{
    default_log_schedule, evolve_stroboscopic, evolve_under_deff, CheckpointPolicy, EvolveOptions, FloquetStepper,
    KrylovConfig, SampleSchedule, StopRule,
};
use prethermal::magnus::{assemble_deff, bch_order_check, MAX_ORDER};
use prethermal::observables::{energy_density, page_value};
use prethermal::thermal::{
    build_interpolant, default_beta_grid, ed_dense, estimate_plateau, plateau_from_timeseries, ThermalCurve,
};
use prethermal::{ModelParams, Observable, RangeMode, RunMetadata, TimeSeries};
use std::f64::consts::LN_2;
use std::io::Write;
use std::path::PathBuf;

const RANGES: [RangeMode; 2] = [RangeMode::ShortRange, RangeMode::LongRange];

/// Written straight to stdout so the line survives the harness capture.
fn report(criterion: u32, title: &str, passed: bool, detail: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance {criterion} [{verdict}] {title}: {detail}").unwrap();
}

fn cached_options(tag: &str, schedule: &SampleSchedule) -> EvolveOptions {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let stem = format!("{tag}_{}", schedule.hash_hex());
    let checkpoint = dir.join(format!("{stem}.ckpt"));
    let series = dir.join(format!("{stem}.csv"));
    if std::env::var_os("PRETHERMAL_ACCEPTANCE_FRESH").is_some() {
        let _ = std::fs::remove_file(&checkpoint);
        let _ = std::fs::remove_file(&series);
    }
    EvolveOptions {
        checkpoint: Some(CheckpointPolicy {
            path: checkpoint,
            every_periods: 200,
        }),
        series_path: Some(series),
        ..EvolveOptions::default()
    }
}

#[test]
fn criterion_1_krylov_matches_dense_floquet_oracle() {
    let mut worst: f64 = 0.0;
    for range in RANGES {
        for sites in [4, 6, 8] {
            let p = ModelParams::new(sites, range, 9.0);
            let u = floquet_matrix(&p);
            let v0 = random_state(sites, 11 * sites as u64);
            let mut stepper = FloquetStepper::new(
                &build_static_part(&p).unwrap(),
                &build_drive_part(&p).unwrap(),
                p.period(),
                &KrylovConfig::default(),
            )
            .unwrap();
            let mut v = v0.clone();
            let mut reference = v0.amplitudes().to_vec();
            for _ in 0..100 {
                v = stepper.step(&v).unwrap().0;
                reference = apply(&u, &reference);
            }
            worst = worst.max(distance(v.amplitudes(), &reference));
        }
    }
    let passed = worst <= 1e-7;
    report(1, "Krylov vs dense Floquet, L=4,6,8, 100 periods", passed, &format!("max |dpsi| = {worst:.2e} (<= 1e-7)"));
    assert!(passed);
}

#[test]
fn criterion_2_truncation_error_scales_with_order() {
    let grid: Vec<f64> = (0..17).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 16.0)).collect();
    let mut passed = true;
    let mut slopes = Vec::new();
    for range in RANGES {
        let p = ModelParams::new(4, range, 9.0);
        let (d, e) = (build_static_part(&p).unwrap(), build_drive_part(&p).unwrap());
        for n in 0..=MAX_ORDER {
            let slope = bch_order_check(&d, &e, n, &grid).unwrap().slope;
            passed &= (slope - (n + 2) as f64).abs() <= 0.3;
            slopes.push(format!("{slope:.2}"));
        }
    }
    report(
        2,
        "order-check slopes n+2 +- 0.3, L=4",
        passed,
        &format!("short/long slopes n=0..4: {}", slopes.join(" ")),
    );
    assert!(passed);
}

fn hermiticity_defect(m: &Mat<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[test]
fn criterion_3_hermiticity_and_conservation() {
    let mut defect: f64 = 0.0;
    for range in RANGES {
        for sites in [4, 6] {
            let p = ModelParams::new(sites, range, 9.0);
            let (d, e) = (build_static_part(&p).unwrap(), build_drive_part(&p).unwrap());
            defect = defect.max(hermiticity_defect(&materialize(&d).unwrap()));
            defect = defect.max(hermiticity_defect(&materialize(&e).unwrap()));
            for n in 0..=MAX_ORDER {
                let deff = assemble_deff(&d, &e, p.period(), n).unwrap();
                defect = defect.max(hermiticity_defect(&materialize(&deff).unwrap()));
            }
            for kind in LocalKind::ALL {
                for site in 0..=sites - kind.span() {
                    let op = build_local_operator(kind, site, sites).unwrap();
                    defect = defect.max(hermiticity_defect(&materialize(&op).unwrap()));
                }
            }
        }
    }

    let p = ModelParams::new(10, RangeMode::ShortRange, 9.0);
    let (d, e) = (build_static_part(&p).unwrap(), build_drive_part(&p).unwrap());
    let v0 = initial_state(10, 9).unwrap();
    let mut drift: f64 = 0.0;
    for n in [0, 2, 4] {
        let deff = assemble_deff(&d, &e, p.period(), n).unwrap();
        let ev = evolve_under_deff(
            &deff,
            &v0,
            &default_log_schedule(1000, 10).unwrap(),
            &[Observable::EnergyDensity(n)],
            &EvolveOptions::default(),
        )
        .unwrap();
        let energy = ev.series.column(&format!("energy_n{n}")).unwrap();
        drift = drift.max(energy.iter().map(|x| (x - energy[0]).abs()).fold(0.0, f64::max));
    }
    let passed = defect <= 1e-12 && drift <= 1e-8;
    report(
        3,
        "Hermiticity (L<=6) and D^n conservation (L=10, 1000 periods)",
        passed,
        &format!("max defect {defect:.1e} (<= 1e-12), max drift {drift:.1e} (<= 1e-8)"),
    );
    assert!(passed);
}

#[test]
fn criterion_4_thermal_identities() {
    let mut anchor: f64 = 0.0;
    for range in RANGES {
        let p = ModelParams::new(6, range, 9.0);
        let deff = assemble_deff(&build_static_part(&p).unwrap(), &build_drive_part(&p).unwrap(), p.period(), 4).unwrap();
        let spectrum = ed_dense(&deff, 6).unwrap();
        let curve = ThermalCurve::build(&spectrum, &default_beta_grid(40), range).unwrap();
        let zero = curve.samples.iter().find(|s| s.beta == 0.0).unwrap();
        anchor = anchor.max(zero.epsilon.abs()).max((zero.s_half - LN_2).abs());

        let interp = build_interpolant(&curve).unwrap();
        for sites in [10, 14, 20] {
            let est = estimate_plateau(0.0, -0.5, spectrum.max_energy_density(), &interp, sites).unwrap();
            anchor = anchor.max((est.value - (sites as f64 / 2.0 * LN_2 - 0.5)).abs());
        }
    }
    let passed = anchor <= 1e-10;
    report(
        4,
        "beta=0 anchor and zero-energy plateau estimate",
        passed,
        &format!("max deviation {anchor:.1e} (<= 1e-10)"),
    );
    assert!(passed);
}

const HEATING_OMEGAS: [f64; 4] = [4.0, 5.0, 6.0, 7.0];

/// `tau*` from `<D^2>` at L=14, stopping shortly after the energy has fallen
/// to 30% of its start.
///
/// Ten walls put the state near `eps = -0.5`, on the low-energy side but off
/// the spectral edge. The Neel state itself sits at the edge, where heating
/// is not a clean single-rate process at this size.
fn heating_times(range: RangeMode) -> Vec<TauStar> {
    const SITES: usize = 14;
    const WALLS: usize = 10;
    HEATING_OMEGAS
        .iter()
        .map(|&omega| {
            let p = ModelParams::new(SITES, range, omega);
            let schedule = default_log_schedule(20_000, 10).unwrap();
            let tag = format!("heating_{range}_L{SITES}_w{omega}_dw{WALLS}_stop30");
            let opts = EvolveOptions {
                stop: Some(StopRule::DecayedBelow {
                    column: "energy_n2".into(),
                    fraction: 0.3,
                    extra_samples: 2,
                }),
                ..cached_options(&tag, &schedule)
            };
            let ev = evolve_stroboscopic(
                &build_static_part(&p).unwrap(),
                &build_drive_part(&p).unwrap(),
                p.period(),
                &initial_state(SITES, WALLS).unwrap(),
                &schedule,
                &[Observable::EnergyDensity(2)],
                &opts,
            )
            .unwrap();
            tau_star_energy(&ev.series, 2).unwrap()
        })
        .collect()
}

fn describe(taus: &[TauStar]) -> String {
    taus.iter()
        .map(|t| t.value().map_or("censored".to_string(), |v| format!("{v:.0}")))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn criterion_5_heating_time_grows_exponentially() {
    let short = heating_times(RangeMode::ShortRange);
    let long = heating_times(RangeMode::LongRange);
    let values: Vec<Option<f64>> = short.iter().map(TauStar::value).collect();
    let monotone = values.iter().all(Option::is_some) && values.windows(2).all(|w| w[1] > w[0]);
    let fit = |taus: &[TauStar]| -> Option<ExponentialFit> { fit_exponential_tau(&HEATING_OMEGAS, taus, true).ok() };
    let (fs, fl) = (fit(&short), fit(&long));
    let r2 = fs.map_or(f64::NAN, |f| f.r_squared);
    let js = fs.map_or(f64::NAN, |f| f.j_eff);
    let jl = fl.map_or(f64::NAN, |f| f.j_eff);
    let ratio = jl / js;
    let passed = monotone && r2 >= 0.9 && (0.2..=1.5).contains(&js) && ratio > 1.0;
    report(
        5,
        "L=14 heating times, omega=4..7",
        passed,
        &format!(
            "short tau* [{}], long tau* [{}], r2 {r2:.3} (>= 0.9), J_s {js:.3} (in [0.2, 1.5]), J_l {jl:.3}, J_l/J_s {ratio:.2} (> 1)",
            describe(&short),
            describe(&long)
        ),
    );
    assert!(passed);
}

struct DeltaFits {
    plateau: FitResult,
    slope: FitResult,
}

/// Energy difference between the exact drive and `exp(-i T D^n)` for the
/// Neel state at L=10, fitted over an early and a late window.
fn delta_fits(omega: f64) -> Vec<DeltaFits> {
    const SITES: usize = 10;
    let p = ModelParams::new(SITES, RangeMode::ShortRange, omega);
    let (d, e) = (build_static_part(&p).unwrap(), build_drive_part(&p).unwrap());
    let v0 = initial_state(SITES, SITES - 1).unwrap();
    let schedule = default_log_schedule((120.0 / p.period()).ceil() as u64, 40).unwrap();
    let obs = [Observable::EnergyDensity(0)];
    let full = evolve_stroboscopic(&d, &e, p.period(), &v0, &schedule, &obs, &EvolveOptions::default()).unwrap();
    [0, 2, 4]
        .iter()
        .map(|&n| {
            let deff = assemble_deff(&d, &e, p.period(), n).unwrap();
            let truncated = evolve_under_deff(&deff, &v0, &schedule, &obs, &EvolveOptions::default()).unwrap();
            let delta = delta_series(&full.series, &truncated.series, "energy_n0").unwrap();
            DeltaFits {
                plateau: plateau_height(&delta, "delta", (1.0, 8.0)).unwrap(),
                slope: slope_six_subregions(&delta, "delta", (10.0, 100.0)).unwrap(),
            }
        })
        .collect()
}

#[test]
fn criterion_6_delta_plateaus_and_growth() {
    let low = delta_fits(6.0);
    let high = delta_fits(9.0);
    let mut passed = true;
    for fits in [&low, &high] {
        passed &= fits.windows(2).all(|w| w[1].plateau.value < w[0].plateau.value);
        passed &= fits.iter().all(|f| f.slope.value > 0.0);
    }
    for (a, b) in low.iter().zip(&high) {
        passed &= b.plateau.value < a.plateau.value;
        passed &= b.slope.value.abs() < a.slope.value.abs();
    }
    let row = |fits: &[DeltaFits], pick: fn(&DeltaFits) -> f64| {
        fits.iter().map(|f| format!("{:.2e}", pick(f))).collect::<Vec<_>>().join("/")
    };
    report(
        6,
        "delta_n plateau ordering and late growth, L=10",
        passed,
        &format!(
            "plateau n=0/2/4 w=6 {} w=9 {}; slope w=6 {} w=9 {}",
            row(&low, |f| f.plateau.value),
            row(&high, |f| f.plateau.value),
            row(&low, |f| f.slope.value),
            row(&high, |f| f.slope.value),
        ),
    );
    assert!(passed);
}

#[test]
fn criterion_7_entropy_plateau_matches_thermal_estimate() {
    const SITES: usize = 12;
    const T_PRE: f64 = 300.0;
    let p = ModelParams::new(SITES, RangeMode::ShortRange, 9.0);
    let (d, e) = (build_static_part(&p).unwrap(), build_drive_part(&p).unwrap());
    let deff = assemble_deff(&d, &e, p.period(), 4).unwrap();
    let spectrum = ed_dense(&deff, SITES).unwrap();
    let curve = ThermalCurve::build(&spectrum, &default_beta_grid(40), p.range).unwrap();
    let interp = build_interpolant(&curve).unwrap();

    let v0 = initial_state(SITES, SITES - 1).unwrap();
    let eps = energy_density(4, &deff, &v0).unwrap();
    let eps_max = energy_density(4, &deff, &initial_state(SITES, 0).unwrap()).unwrap();
    let estimate = estimate_plateau(eps, eps_max, spectrum.max_energy_density(), &interp, SITES).unwrap();

    let schedule = default_log_schedule((T_PRE / p.period()).ceil() as u64, 20).unwrap();
    let tag = format!("plateau_short_L{SITES}_w9_dw{}", SITES - 1);
    let ev = evolve_stroboscopic(
        &d,
        &e,
        p.period(),
        &v0,
        &schedule,
        &[Observable::HalfChainEntropy],
        &cached_options(&tag, &schedule),
    )
    .unwrap();
    let measured = plateau_from_timeseries(&ev.series, "entropy", T_PRE).unwrap();
    let gap = (measured - estimate.value).abs();
    let passed = gap <= 0.5;
    report(
        7,
        "entropy plateau vs thermal estimate, L=12 omega=9",
        passed,
        &format!(
            "measured {measured:.3}, estimated {:.3} at eps {eps:.4}, gap {gap:.3} (<= 0.5 nats)",
            estimate.value
        ),
    );
    assert!(passed);
}

fn synthetic(times: &[f64], column: &str, f: impl Fn(f64) -> f64) -> TimeSeries {
    let mut s = TimeSeries::new(RunMetadata::default(), vec![column.into()]).unwrap();
    for (k, &t) in times.iter().enumerate() {
        s.push(k as u64, t, vec![f(t)]).unwrap();
    }
    s
}

#[test]
fn criterion_8_analysis_on_exact_synthetic_series() {
    let mut worst: f64 = 0.0;

    let omegas = [3.0, 4.5, 6.0, 7.5, 9.0];
    for j in [0.4f64, 0.9, 1.7] {
        let taus: Vec<TauStar> = omegas
            .iter()
            .map(|w| {
                let v = 2.5 * (w / j).exp();
                TauStar::Measured(FitResult {
                    value: v,
                    uncertainty: 0.2 * v,
                    window: (v, v),
                    residual: 0.0,
                    points: 1,
                })
            })
            .collect();
        for weighted in [false, true] {
            let fit = fit_exponential_tau(&omegas, &taus, weighted).unwrap();
            worst = worst.max((fit.j_eff - j).abs() / j);
        }
    }

    let times: Vec<f64> = (0..60).map(|k| 0.5 * k as f64).collect();
    let line = synthetic(&times, "delta", |t| 3e-3 + 2e-4 * t);
    let slope = slope_six_subregions(&line, "delta", (0.0, 30.0)).unwrap();
    worst = worst.max((slope.value - 2e-4).abs() / 2e-4).max(slope.uncertainty);

    // The halfway crossing is interpolated, so one sample sits on it exactly.
    let tau0 = 37.0;
    let mut times: Vec<f64> = (1..=40).map(|k| 10f64.powf(k as f64 / 10.0)).collect();
    times.push(tau0 * LN_2);
    times.push(0.0);
    times.sort_by(f64::total_cmp);
    let (sites, s_p) = (12, 1.5);
    let page = page_value(sites).unwrap();
    let rising = synthetic(&times, "entropy", |t| s_p + (page - s_p) * (1.0 - (-t / tau0).exp()));
    let tau = tau_star_entropy(&rising, "entropy", s_p, sites).unwrap().value().unwrap();
    worst = worst.max((tau - tau0 * LN_2).abs() / (tau0 * LN_2));
    let decaying = synthetic(&times, "energy_n2", |t| -0.4 * (-t / tau0).exp());
    let tau = tau_star_energy(&decaying, 2).unwrap().value().unwrap();
    worst = worst.max((tau - tau0 * LN_2).abs() / (tau0 * LN_2));

    let passed = worst <= 1e-9;
    report(
        8,
        "analysis oracles on exact synthetic series",
        passed,
        &format!("max relative error {worst:.1e} (<= 1e-9)"),
    );
    assert!(passed);
}
