//! Action of `exp(-iHt)` on a state through Lanczos projection, and the
//! stroboscopic drivers built on top of it.
//!
//! Each call splits `t` into equal substeps. A substep builds an orthonormal
//! Krylov basis with the Hermitian three-term recurrence (optionally fully
//! reorthogonalized), exponentiates the projected tridiagonal matrix exactly,
//! and stops once `beta_k |[exp(-i tau T_k) e_1]_k|` drops below the
//! tolerance. A substep that exhausts the subspace doubles the substep count
//! and restarts the call, so substeps stay uniform within one call. Between
//! calls a [`Propagator`] halves its count again when the subspace is
//! comfortably large enough.

mod checkpoint;
mod evolve;
mod schedule;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, LinearOperator};
use crate::state::StateVector;

pub use checkpoint::Checkpoint;
pub use evolve::{
    evolve_stroboscopic, evolve_under_deff, CheckpointPolicy, Evolution, EvolveOptions,
    FloquetStepper, RunStats, StopRule,
};
pub use schedule::{default_log_schedule, SampleSchedule};

/// Renormalization magnitudes above this are logged as warnings.
pub const RENORMALIZATION_WARNING: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrylovConfig {
    pub max_subspace: usize,
    /// Per-substep error target.
    pub tolerance: f64,
    pub max_substeps: usize,
    pub reorthogonalize: bool,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            max_subspace: 30,
            tolerance: 1e-10,
            max_substeps: 4096,
            reorthogonalize: true,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_subspace < 2 {
            return Err(Error::InvalidParams("max_subspace must be at least 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams("tolerance must be positive".into()));
        }
        if self.max_substeps == 0 {
            return Err(Error::InvalidParams("max_substeps must be positive".into()));
        }
        Ok(())
    }
}

/// Diagnostics of one propagation call.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub substeps: usize,
    pub matvecs: usize,
    pub max_subspace_used: usize,
    /// Sum of the per-substep error estimates.
    pub error_estimate: f64,
    /// `| ||w|| - 1 |` before the final renormalization.
    pub renormalization: f64,
}

/// Reusable propagator for one generator (owned or borrowed), keeping its Krylov workspace and
/// the substep count that worked last time.
pub struct Propagator<O: LinearOperator> {
    op: O,
    cfg: KrylovConfig,
    substeps: usize,
    basis: Vec<Vec<Complex64>>,
    work: Vec<Complex64>,
}

impl<O: LinearOperator> Propagator<O> {
    pub fn new(op: O, cfg: &KrylovConfig) -> Result<Self> {
        cfg.validate()?;
        let dim = op.dim();
        Ok(Self {
            op,
            cfg: cfg.clone(),
            substeps: 1,
            basis: Vec::new(),
            work: vec![Complex64::new(0.0, 0.0); dim],
        })
    }

    pub fn operator(&self) -> &O {
        &self.op
    }

    /// Substep count the next call will start from.
    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Returns `exp(-i H t) v`, renormalized to unit norm.
    pub fn step(&mut self, v: &StateVector, t: f64) -> Result<(StateVector, StepStats)> {
        if v.dim() != self.op.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.op.dim(),
                found: v.dim(),
            });
        }
        if t == 0.0 {
            return Ok((v.clone(), StepStats::default()));
        }
        loop {
            match self.try_uniform(v.amplitudes(), t, self.substeps) {
                Some((mut w, mut stats)) => {
                    if stats.max_subspace_used * 2 <= self.cfg.max_subspace && self.substeps > 1 {
                        self.substeps /= 2;
                    }
                    let n = linalg::norm(&w);
                    stats.renormalization = (n - 1.0).abs();
                    if stats.renormalization > RENORMALIZATION_WARNING {
                        log::warn!(
                            "Krylov step renormalized by {:.3e} (t = {t}, substeps = {})",
                            stats.renormalization,
                            stats.substeps
                        );
                    }
                    linalg::scale(Complex64::new(1.0 / n, 0.0), &mut w);
                    let out = StateVector::normalized(v.sites(), w)?;
                    return Ok((out, stats));
                }
                None => {
                    let next = self.substeps * 2;
                    if next > self.cfg.max_substeps {
                        return Err(Error::KrylovNonConvergence(format!(
                            "t = {t}: tolerance {:e} not met with {} substeps of dimension {}",
                            self.cfg.tolerance, self.substeps, self.cfg.max_subspace
                        )));
                    }
                    log::debug!("Krylov substeps {} -> {next} (t = {t})", self.substeps);
                    self.substeps = next;
                }
            }
        }
    }

    fn try_uniform(&mut self, v: &[Complex64], t: f64, count: usize) -> Option<(Vec<Complex64>, StepStats)> {
        let tau = t / count as f64;
        let mut stats = StepStats {
            substeps: count,
            ..StepStats::default()
        };
        let mut current = v.to_vec();
        for _ in 0..count {
            let (next, used, err) = self.substep(&current, tau)?;
            stats.matvecs += used;
            stats.max_subspace_used = stats.max_subspace_used.max(used);
            stats.error_estimate += err;
            current = next;
        }
        Some((current, stats))
    }

    /// One Lanczos projection; `None` when the subspace limit is reached
    /// before the error estimate meets the tolerance.
    fn substep(&mut self, v: &[Complex64], tau: f64) -> Option<(Vec<Complex64>, usize, f64)> {
        let m = self.cfg.max_subspace;
        let dim = v.len();
        let beta0 = linalg::norm(v);
        if beta0 == 0.0 {
            return Some((v.to_vec(), 0, 0.0));
        }
        while self.basis.len() < m.min(dim) {
            self.basis.push(vec![Complex64::new(0.0, 0.0); dim]);
        }
        self.basis[0].copy_from_slice(v);
        linalg::scale(Complex64::new(1.0 / beta0, 0.0), &mut self.basis[0]);

        let mut alphas: Vec<f64> = Vec::with_capacity(m);
        let mut betas: Vec<f64> = Vec::with_capacity(m);
        let breakdown = 1e-13 * beta0.max(1.0);
        for j in 0..m.min(dim) {
            self.op.apply_into(&self.basis[j], &mut self.work);
            let alpha = linalg::inner(&self.basis[j], &self.work).re;
            linalg::axpy(Complex64::new(-alpha, 0.0), &self.basis[j], &mut self.work);
            if j > 0 {
                linalg::axpy(Complex64::new(-betas[j - 1], 0.0), &self.basis[j - 1], &mut self.work);
            }
            if self.cfg.reorthogonalize {
                for i in 0..=j {
                    let h = linalg::inner(&self.basis[i], &self.work);
                    linalg::axpy(-h, &self.basis[i], &mut self.work);
                }
            }
            let beta = linalg::norm(&self.work);
            alphas.push(alpha);
            let k = j + 1;
            let y = tridiagonal_propagator_column(&alphas, &betas, tau);
            let exhausted = beta < breakdown || k == dim;
            let err = if exhausted { 0.0 } else { beta0 * beta * y[k - 1].norm() };
            if exhausted || err <= self.cfg.tolerance {
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                for (i, yi) in y.iter().enumerate() {
                    linalg::axpy(yi * beta0, &self.basis[i], &mut out);
                }
                return Some((out, k, err));
            }
            if k == m {
                return None;
            }
            betas.push(beta);
            let next = &mut self.basis[j + 1];
            next.copy_from_slice(&self.work);
            linalg::scale(Complex64::new(1.0 / beta, 0.0), next);
        }
        None
    }
}

/// `exp(-i tau T) e_1` for the symmetric tridiagonal `T` with diagonal
/// `alphas` and off-diagonal `betas`.
fn tridiagonal_propagator_column(alphas: &[f64], betas: &[f64], tau: f64) -> Vec<Complex64> {
    let k = alphas.len();
    if k == 1 {
        return vec![Complex64::new(0.0, -alphas[0] * tau).exp()];
    }
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i == j + 1 {
            betas[j]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let evd = t
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric tridiagonal eigendecomposition");
    let s = evd.S().column_vector();
    let q = evd.U();
    let phases: Vec<Complex64> = (0..k)
        .map(|l| Complex64::new(0.0, -s[l] * tau).exp() * q[(0, l)])
        .collect();
    (0..k)
        .map(|i| (0..k).map(|l| q[(i, l)] * phases[l]).sum())
        .collect()
}

/// One-shot `exp(-i H t) v`.
pub fn expm_apply<O: LinearOperator + ?Sized>(
    op: &O,
    v: &StateVector,
    t: f64,
    cfg: &KrylovConfig,
) -> Result<StateVector> {
    Propagator::new(op, cfg)?.step(v, t).map(|(w, _)| w)
}
