mod common;

use common::*;
use num_complex::Complex64;
use prethermal::analysis::{delta_series, fit_exponential_tau, tau_star_energy, TauStar};
use prethermal::hamiltonian::{build_drive_part, build_static_part};
use prethermal::krylov::{expm_apply, KrylovConfig};
use prethermal::observables::entanglement_entropy;
use prethermal::{ModelParams, RangeMode, RunMetadata, StateVector, TimeSeries};
use proptest::prelude::*;

fn state_strategy(sites: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1usize << sites)
        .prop_filter_map("nonzero", move |amps| {
            let amps: Vec<Complex64> = amps.into_iter().map(|(a, b)| c(a, b)).collect();
            StateVector::normalized(sites, amps).ok()
        })
}

fn model(range: bool, omega: f64) -> ModelParams {
    let range = if range { RangeMode::LongRange } else { RangeMode::ShortRange };
    ModelParams::new(6, range, omega)
}

fn energy_series(times: &[f64], values: &[f64]) -> TimeSeries {
    let mut s = TimeSeries::new(RunMetadata::default(), vec!["energy_n2".into()]).unwrap();
    for (k, (t, v)) in times.iter().zip(values).enumerate() {
        s.push(k as u64, *t, vec![*v]).unwrap();
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn entropy_is_symmetric_and_bounded(v in state_strategy(6), cut in 1usize..6) {
        let s = entanglement_entropy(&v, cut).unwrap();
        // Reversing the chain turns sites cut..6 into the leading block.
        let reversed: Vec<Complex64> = (0..64usize)
            .map(|i| v.amplitudes()[i.reverse_bits() >> (usize::BITS - 6)])
            .collect();
        let complement = entanglement_entropy(&StateVector::normalized(6, reversed).unwrap(), 6 - cut).unwrap();
        let smaller = cut.min(6 - cut) as f64;
        prop_assert!(s >= -1e-12 && s <= smaller * std::f64::consts::LN_2 + 1e-12);
        prop_assert!((s - complement).abs() < 1e-10);
        prop_assert!((s - entropy_reference(v.amplitudes(), 6, cut)).abs() < 1e-10);
    }

    #[test]
    fn propagation_is_linear_and_phase_covariant(
        a in state_strategy(6),
        b in state_strategy(6),
        alpha in -2.0f64..2.0,
        phase in 0.0f64..6.3,
        long in any::<bool>(),
        t in 0.05f64..2.0,
    ) {
        let h = build_static_part(&model(long, 5.0)).unwrap();
        let cfg = KrylovConfig::default();
        let combo: Vec<Complex64> = a.amplitudes().iter().zip(b.amplitudes())
            .map(|(x, y)| x + c(alpha, 0.0) * y).collect();
        let scale = prethermal::linalg::norm(&combo);
        prop_assume!(scale > 1e-3);
        let combo_state = StateVector::normalized(6, combo).unwrap();
        let ua = expm_apply(&h, &a, t, &cfg).unwrap();
        let ub = expm_apply(&h, &b, t, &cfg).unwrap();
        let uc = expm_apply(&h, &combo_state, t, &cfg).unwrap();
        let expected: Vec<Complex64> = ua.amplitudes().iter().zip(ub.amplitudes())
            .map(|(x, y)| (x + c(alpha, 0.0) * y) / scale).collect();
        prop_assert!(distance(uc.amplitudes(), &expected) < 1e-8);

        let rot = Complex64::from_polar(1.0, phase);
        let rotated = StateVector::normalized(6, a.amplitudes().iter().map(|x| x * rot).collect()).unwrap();
        let ur = expm_apply(&h, &rotated, t, &cfg).unwrap();
        let expected: Vec<Complex64> = ua.amplitudes().iter().map(|x| x * rot).collect();
        prop_assert!(distance(ur.amplitudes(), &expected) < 1e-8);
    }

    #[test]
    fn propagation_preserves_norm_and_composes(
        v in state_strategy(6),
        t1 in 0.0f64..3.0,
        t2 in 0.0f64..3.0,
        long in any::<bool>(),
    ) {
        let p = model(long, 5.0);
        let h = build_static_part(&p).unwrap().add_scaled(&build_drive_part(&p).unwrap(), 1.0).unwrap();
        let cfg = KrylovConfig::default();
        let once = expm_apply(&h, &v, t1 + t2, &cfg).unwrap();
        let twice = expm_apply(&h, &expm_apply(&h, &v, t1, &cfg).unwrap(), t2, &cfg).unwrap();
        prop_assert!((once.norm() - 1.0).abs() < 1e-12);
        prop_assert!((twice.norm() - 1.0).abs() < 1e-12);
        prop_assert!(once.distance(&twice) < 1e-8);
    }

    #[test]
    fn energy_tau_scales_with_time_and_ignores_sign(
        tau0 in 1.0f64..500.0,
        e0 in 0.05f64..2.0,
        negative in any::<bool>(),
        stretch in 0.1f64..10.0,
    ) {
        let times: Vec<f64> = (0..80).map(|k| if k == 0 { 0.0 } else { 10f64.powf(-1.0 + k as f64 / 15.0) }).collect();
        let sign = if negative { -1.0 } else { 1.0 };
        let values: Vec<f64> = times.iter().map(|t| sign * e0 * (-t / tau0).exp()).collect();
        let base = tau_star_energy(&energy_series(&times, &values), 2).unwrap();
        let flipped: Vec<f64> = values.iter().map(|v| -v).collect();
        let mirrored = tau_star_energy(&energy_series(&times, &flipped), 2).unwrap();
        let stretched_times: Vec<f64> = times.iter().map(|t| t * stretch).collect();
        let stretched = tau_star_energy(&energy_series(&stretched_times, &values), 2).unwrap();
        let (a, b, s) = (base.value().unwrap(), mirrored.value().unwrap(), stretched.value().unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!((s - stretch * a).abs() <= 1e-9 * s);
    }

    #[test]
    fn delta_is_symmetric(values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40)) {
        let times: Vec<f64> = (0..values.len()).map(|k| k as f64).collect();
        let a = energy_series(&times, &values.iter().map(|v| v.0).collect::<Vec<_>>());
        let b = energy_series(&times, &values.iter().map(|v| v.1).collect::<Vec<_>>());
        let ab = delta_series(&a, &b, "energy_n2").unwrap().column("delta").unwrap();
        let ba = delta_series(&b, &a, "energy_n2").unwrap().column("delta").unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert!(ab.iter().all(|d| *d >= 0.0));
    }

    #[test]
    fn exponential_fit_recovers_energy_scale(j in 0.2f64..2.0, log_prefactor in -3.0f64..3.0) {
        let omegas = [4.0, 5.0, 6.0, 7.0];
        let taus: Vec<TauStar> = omegas
            .iter()
            .map(|w| TauStar::Measured(prethermal::analysis::FitResult {
                value: (log_prefactor + w / j).exp(),
                uncertainty: 0.1 * (log_prefactor + w / j).exp(),
                window: (0.0, 1.0),
                residual: 0.0,
                points: 10,
            }))
            .collect();
        let fit = fit_exponential_tau(&omegas, &taus, true).unwrap();
        prop_assert!((fit.j_eff - j).abs() < 1e-9 * j);
        prop_assert!((fit.r_squared - 1.0).abs() < 1e-9);
    }
}
