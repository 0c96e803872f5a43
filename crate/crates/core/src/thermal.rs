//! Thermal reference curves from exact diagonalization of a small chain,
//! and the plateau-entropy estimate derived from them.
//!
//! For each inverse temperature `beta` the Gibbs state `exp(-beta H) / Z` of
//! an `L'`-site chain gives an energy density `epsilon` and an entropy per
//! site `s` of its reduced state on the right half. The `(epsilon, s)` curve
//! is interpolated and used to predict the half-chain entropy an `L`-site
//! chain reaches at a given energy density, after rescaling positive energy
//! densities by the ratio of the two spectral edges.

use std::io::Write;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{self, HermitianEigen, MAX_DENSE_SITES};
use crate::error::{Error, Result};
use crate::hamiltonian::RangeMode;
use crate::linalg::LinearOperator;
use crate::series::TimeSeries;

/// Finite-size correction subtracted from the rescaled thermal entropy.
pub const PAGE_CORRECTION: f64 = 0.5;

/// Reduced-density eigenvalues below this do not enter the entropy.
const EIGEN_CUTOFF: f64 = 1e-14;

/// Tolerance of the `beta = 0` identities.
const ANCHOR_TOLERANCE: f64 = 1e-10;

/// Full spectrum of a densely materialized generator.
pub struct DenseSpectrum {
    sites: usize,
    eigen: HermitianEigen,
}

impl DenseSpectrum {
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Ascending eigenvalues.
    pub fn values(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn vectors(&self) -> &Mat<Complex64> {
        &self.eigen.vectors
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }

    /// Largest eigenvalue per site.
    pub fn max_energy_density(&self) -> f64 {
        self.eigen.values.last().copied().unwrap_or(0.0) / self.sites as f64
    }

    pub fn min_energy_density(&self) -> f64 {
        self.eigen.values.first().copied().unwrap_or(0.0) / self.sites as f64
    }
}

/// Exact diagonalization of `op` on `sites <= 12` sites.
pub fn ed_dense<O: LinearOperator + ?Sized>(op: &O, sites: usize) -> Result<DenseSpectrum> {
    if sites > MAX_DENSE_SITES {
        return Err(Error::TooLargeForDense {
            sites,
            limit: MAX_DENSE_SITES,
        });
    }
    if op.dim() != 1usize << sites {
        return Err(Error::DimensionMismatch {
            expected: 1 << sites,
            found: op.dim(),
        });
    }
    let m = dense::materialize(op)?;
    let defect = dense::hermiticity_defect(&m);
    if defect > 1e-10 * dense::frobenius(&m).max(1.0) {
        return Err(Error::NonHermitian { imag: defect });
    }
    let mut eigen = HermitianEigen::new(&m)?;
    let mut order: Vec<usize> = (0..eigen.values.len()).collect();
    order.sort_by(|&a, &b| eigen.values[a].total_cmp(&eigen.values[b]));
    if order.iter().enumerate().any(|(i, &k)| i != k) {
        let values = order.iter().map(|&k| eigen.values[k]).collect();
        let vectors = Mat::from_fn(eigen.dim(), eigen.dim(), |i, j| eigen.vectors[(i, order[j])]);
        eigen = HermitianEigen { values, vectors };
    }
    Ok(DenseSpectrum { sites, eigen })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalSample {
    pub beta: f64,
    /// Energy per site.
    pub epsilon: f64,
    /// Entropy of the right half per site of that half, in nats.
    pub s_half: f64,
}

/// Energy density and half-chain entropy density of the Gibbs state at `beta`.
///
/// Requires an even number of sites.
pub fn thermal_point(spectrum: &DenseSpectrum, beta: f64) -> Result<ThermalSample> {
    let sites = spectrum.sites;
    if sites % 2 == 1 {
        return Err(Error::OddChain(sites));
    }
    if !beta.is_finite() {
        return Err(Error::Domain(format!("inverse temperature must be finite, got {beta}")));
    }
    let values = spectrum.values();
    let shift = if beta >= 0.0 {
        values[0]
    } else {
        values[values.len() - 1]
    };
    let weights: Vec<f64> = values.iter().map(|&e| (-beta * (e - shift)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / z).collect();
    let epsilon = values.iter().zip(&probs).map(|(e, p)| e * p).sum::<f64>() / sites as f64;

    // Reduced state on the right half: rho = sum_k p_k M_k M_k^dagger, with
    // M_k[right][left] the reshaped eigenvector. Stack sqrt(p_k) M_k side by
    // side and form A A^dagger in one product.
    let half = sites / 2;
    let side = 1usize << half;
    let vectors = spectrum.vectors();
    let kept: Vec<usize> = (0..probs.len()).filter(|&k| probs[k] > 1e-300).collect();
    let a = Mat::<Complex64>::from_fn(side, side * kept.len(), |right, col| {
        let k = kept[col / side];
        let left = col % side;
        vectors[(left | (right << half), k)] * probs[k].sqrt()
    });
    let rho = &a * a.adjoint();
    let evd = rho
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let entropy: f64 = (0..side)
        .map(|i| s[i].re)
        .filter(|&p| p >= EIGEN_CUTOFF)
        .map(|p| -p * p.ln())
        .sum();
    Ok(ThermalSample {
        beta,
        epsilon,
        s_half: entropy / half as f64,
    })
}

/// `0` plus `points` log-spaced magnitudes in `[1e-3, 10]` on each side.
pub fn default_beta_grid(points: usize) -> Vec<f64> {
    let mut grid = vec![0.0];
    if points == 0 {
        return grid;
    }
    let (lo, hi) = (1e-3f64.log10(), 10f64.log10());
    for k in 0..points {
        let frac = if points == 1 { 1.0 } else { k as f64 / (points - 1) as f64 };
        let b = 10f64.powf(lo + frac * (hi - lo));
        grid.push(b);
        grid.push(-b);
    }
    grid.sort_by(f64::total_cmp);
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalCurve {
    /// Sorted by increasing `beta`.
    pub samples: Vec<ThermalSample>,
    pub source_sites: usize,
    pub range: RangeMode,
}

impl ThermalCurve {
    /// Evaluates every `beta` of the grid, which must contain `0`.
    pub fn build(spectrum: &DenseSpectrum, betas: &[f64], range: RangeMode) -> Result<Self> {
        if !betas.contains(&0.0) {
            return Err(Error::InsufficientData("beta grid must contain 0".into()));
        }
        let mut betas = betas.to_vec();
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        let samples = betas
            .iter()
            .map(|&b| thermal_point(spectrum, b))
            .collect::<Result<Vec<_>>>()?;
        let curve = Self {
            samples,
            source_sites: spectrum.sites(),
            range,
        };
        curve.check()?;
        Ok(curve)
    }

    /// Monotone energy in `beta` and the infinite-temperature anchor.
    pub fn check(&self) -> Result<()> {
        let zero = self
            .samples
            .iter()
            .find(|s| s.beta == 0.0)
            .ok_or_else(|| Error::InsufficientData("curve lacks the beta = 0 point".into()))?;
        if zero.epsilon.abs() > ANCHOR_TOLERANCE
            || (zero.s_half - std::f64::consts::LN_2).abs() > ANCHOR_TOLERANCE
        {
            return Err(Error::Domain(format!(
                "beta = 0 point is ({}, {}), expected (0, ln 2)",
                zero.epsilon, zero.s_half
            )));
        }
        for w in self.samples.windows(2) {
            if w[1].epsilon > w[0].epsilon + 1e-12 {
                return Err(Error::Domain(format!(
                    "energy increases from beta {} to {}",
                    w[0].beta, w[1].beta
                )));
            }
        }
        Ok(())
    }

    /// CSV with columns `beta,epsilon,s_half`.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["beta", "epsilon", "s_half"])?;
        for s in &self.samples {
            out.write_record([format!("{:?}", s.beta), format!("{:?}", s.epsilon), format!("{:?}", s.s_half)])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shape-preserving piecewise cubic `s(epsilon)` through the curve samples.
///
/// Hermite cubics with Fritsch-Carlson slopes: the interpolant never
/// overshoots between knots, so the maximum at `epsilon = 0` stays `ln 2`.
/// Queries outside the sampled range are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermalInterpolant {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    pub range: RangeMode,
}

/// Knots closer than this in energy are merged.
const KNOT_MERGE: f64 = 1e-12;

pub fn build_interpolant(curve: &ThermalCurve) -> Result<ThermalInterpolant> {
    curve.check()?;
    let mut pts: Vec<(f64, f64)> = curve
        .samples
        .iter()
        .map(|s| {
            if s.beta == 0.0 {
                (0.0, std::f64::consts::LN_2)
            } else {
                (s.epsilon, s.s_half)
            }
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|b, a| (b.0 - a.0).abs() < KNOT_MERGE);
    if pts.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "interpolant needs 4 distinct energies, got {}",
            pts.len()
        )));
    }
    let (knots, values): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let slopes = pchip_slopes(&knots, &values);
    Ok(ThermalInterpolant {
        knots,
        values,
        slopes,
        range: curve.range,
    })
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if d[k - 1] * d[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

impl ThermalInterpolant {
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn eval(&self, epsilon: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(epsilon >= lo && epsilon <= hi) {
            return Err(Error::Domain(format!(
                "energy density {epsilon} outside the thermal curve range [{lo}, {hi}]"
            )));
        }
        let k = self.knots.partition_point(|&x| x <= epsilon).clamp(1, self.knots.len() - 1) - 1;
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let h = x1 - x0;
        let t = (epsilon - x0) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.values[k]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
            + (-2.0 * t3 + 3.0 * t2) * self.values[k + 1]
            + (t3 - t2) * h * self.slopes[k + 1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauEstimate {
    /// Predicted half-chain entropy in nats.
    pub value: f64,
    /// Energy density at which the interpolant was evaluated.
    pub argument: f64,
    pub rescaled: bool,
    /// Positive-energy estimates for long-range chains tend to come out high.
    pub overestimate_risk: bool,
}

/// `(L/2) s(epsilon') - 0.5`, where `epsilon' = epsilon_L / eps_l_max * eps_lp_max`
/// for positive `epsilon_L` and `epsilon_L` itself otherwise.
pub fn estimate_plateau(
    eps_l: f64,
    eps_l_max: f64,
    eps_lp_max: f64,
    interp: &ThermalInterpolant,
    sites: usize,
) -> Result<PlateauEstimate> {
    if eps_l_max == 0.0 || !eps_l_max.is_finite() {
        return Err(Error::Domain(format!("reference energy density must be nonzero, got {eps_l_max}")));
    }
    let rescaled = eps_l > 0.0;
    let argument = if rescaled { eps_l / eps_l_max * eps_lp_max } else { eps_l };
    let s = interp.eval(argument)?;
    Ok(PlateauEstimate {
        value: sites as f64 / 2.0 * s - PAGE_CORRECTION,
        argument,
        rescaled,
        overestimate_risk: rescaled && interp.range == RangeMode::LongRange,
    })
}

/// Value of `column` at the first sample with `t >= t_pre`.
pub fn plateau_from_timeseries(series: &TimeSeries, column: &str, t_pre: f64) -> Result<f64> {
    let values = series.column(column)?;
    let k = series.times().partition_point(|&t| t < t_pre);
    values.get(k).copied().ok_or_else(|| {
        Error::InsufficientData(format!(
            "series ends at t = {} before t_pre = {t_pre}",
            series.times().last().copied().unwrap_or(f64::NAN)
        ))
    })
}
