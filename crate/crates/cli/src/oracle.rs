//! Dense small-chain checks of the matrix-free machinery.

use anyhow::Result;
use num_complex::Complex64;
use prethermal::dense::{hermiticity_defect, materialize, matvec, HermitianEigen};
use prethermal::hamiltonian::{build_drive_part, build_static_part, initial_state};
use prethermal::krylov::{FloquetStepper, KrylovConfig};
use prethermal::magnus::{assemble_deff, bch_order_check, MAX_ORDER};
use prethermal::thermal::{build_interpolant, default_beta_grid, ed_dense, estimate_plateau, ThermalCurve};
use prethermal::{ModelParams, RangeMode};

pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    fn below(name: String, value: f64, tol: f64) -> Self {
        Check {
            name,
            value,
            bound: format!("<= {tol:e}"),
            passed: value <= tol,
        }
    }
}

/// Runs every check; individual failures are reported, not propagated.
pub fn run_all(periods: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for range in [RangeMode::ShortRange, RangeMode::LongRange] {
        for sites in [4, 6] {
            out.push(floquet_vs_dense(&ModelParams::new(sites, range, 9.0), periods)?);
        }
        let p = ModelParams::new(6, range, 9.0);
        let d = build_static_part(&p)?;
        let e = build_drive_part(&p)?;
        for n in 0..=MAX_ORDER {
            let deff = assemble_deff(&d, &e, p.period(), n)?;
            let defect = hermiticity_defect(&materialize(&deff)?);
            out.push(Check::below(format!("hermitian D^{n} {range} L=6"), defect, 1e-12));
        }
    }

    let p = ModelParams::new(4, RangeMode::LongRange, 9.0);
    let d = build_static_part(&p)?;
    let e = build_drive_part(&p)?;
    let grid: Vec<f64> = (0..17).map(|k| 10f64.powf(-3.0 + 2.0 * k as f64 / 16.0)).collect();
    for n in 0..=MAX_ORDER {
        let check = bch_order_check(&d, &e, n, &grid)?;
        let expected = (n + 2) as f64;
        out.push(Check {
            name: format!("order check slope n={n}"),
            value: check.slope,
            bound: format!("{expected} +- 0.3"),
            passed: (check.slope - expected).abs() <= 0.3,
        });
    }

    let p = ModelParams::new(6, RangeMode::ShortRange, 9.0);
    let deff = assemble_deff(&build_static_part(&p)?, &build_drive_part(&p)?, p.period(), 2)?;
    let spectrum = ed_dense(&deff, 6)?;
    let curve = ThermalCurve::build(&spectrum, &default_beta_grid(40), p.range)?;
    let anchor = curve.samples.iter().find(|s| s.beta == 0.0).expect("grid holds beta = 0");
    out.push(Check::below(
        "thermal anchor |s(0) - ln 2|".into(),
        (anchor.s_half - std::f64::consts::LN_2).abs() + anchor.epsilon.abs(),
        1e-10,
    ));
    let interp = build_interpolant(&curve)?;
    let est = estimate_plateau(0.0, 1.0, 1.0, &interp, 12)?;
    out.push(Check::below(
        "plateau estimate at zero energy".into(),
        (est.value - (6.0 * std::f64::consts::LN_2 - 0.5)).abs(),
        1e-10,
    ));
    Ok(out)
}

fn floquet_vs_dense(p: &ModelParams, periods: u64) -> Result<Check> {
    let d = build_static_part(p)?;
    let e = build_drive_part(p)?;
    let half = p.period() / 2.0;
    let plus = HermitianEigen::new(&materialize(&d.add_scaled(&e, 1.0)?)?)?.propagator(half);
    let minus = HermitianEigen::new(&materialize(&d.add_scaled(&e, -1.0)?)?)?.propagator(half);
    let floquet = &minus * &plus;

    let v0 = initial_state(p.sites, 1)?;
    let mut dense: Vec<Complex64> = v0.amplitudes().to_vec();
    let mut stepper = FloquetStepper::new(&d, &e, p.period(), &KrylovConfig::default())?;
    let mut v = v0;
    for _ in 0..periods {
        v = stepper.step(&v)?.0;
        dense = matvec(&floquet, &dense);
    }
    let diff = prethermal::linalg::distance(v.amplitudes(), &dense);
    Ok(Check::below(
        format!("krylov vs dense {} L={} ({periods} periods)", p.range, p.sites),
        diff,
        1e-7,
    ))
}
