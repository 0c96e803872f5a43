//! Expectation values, energy densities and half-chain entanglement.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_local_operator, LocalKind};
use crate::linalg::{self, LinearOperator};
use crate::magnus::{assemble_deff, LinearMapExpr};
use crate::pauli::PauliTermSum;
use crate::state::StateVector;

/// Largest imaginary part tolerated in an expectation value.
pub const IMAGINARY_TOLERANCE: f64 = 1e-10;

/// Schmidt weights below this are dropped from the entropy sum.
pub const SCHMIDT_CUTOFF: f64 = 1e-14;

/// `<v|O|v>`, checked to be real.
pub fn expectation<O: LinearOperator + ?Sized>(op: &O, v: &StateVector) -> Result<f64> {
    if op.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: v.dim(),
        });
    }
    let z = linalg::inner(v.amplitudes(), &op.apply_vec(v.amplitudes()));
    if z.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::NonHermitian { imag: z.im });
    }
    Ok(z.re)
}

/// `<v|D_eff^n|v> / L`; `n` is only used in error messages.
pub fn energy_density(n: usize, deff: &LinearMapExpr, v: &StateVector) -> Result<f64> {
    let sites = v.sites();
    expectation(deff, v)
        .map(|e| e / sites as f64)
        .map_err(|e| match e {
            Error::NonHermitian { imag } => {
                log::error!("order {n} generator gave imaginary expectation {imag:e}");
                e
            }
            other => other,
        })
}

/// Von Neumann entropy in nats of sites `0..cut` against the rest.
pub fn entanglement_entropy(v: &StateVector, cut: usize) -> Result<f64> {
    let sites = v.sites();
    if cut == 0 || cut >= sites {
        return Err(Error::InvalidCut { cut, sites });
    }
    let rows = 1usize << cut;
    let cols = 1usize << (sites - cut);
    let amps = v.amplitudes();
    let m = Mat::<Complex64>::from_fn(rows, cols, |r, c| amps[r | (c << cut)]);
    let sv = m
        .singular_values()
        .map_err(|e| Error::Linalg(format!("singular values: {e:?}")))?;
    Ok(sv
        .iter()
        .map(|s| s * s)
        .filter(|&p| p >= SCHMIDT_CUTOFF)
        .map(|p| -p * p.ln())
        .sum())
}

/// Mean half-chain entropy of a random pure state, `(L ln 2 - 1) / 2`.
pub fn page_value(sites: usize) -> Result<f64> {
    if sites % 2 == 1 {
        return Err(Error::OddChain(sites));
    }
    Ok((sites as f64 * std::f64::consts::LN_2 - 1.0) / 2.0)
}

/// A quantity recorded along an evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `<D_eff^n>/L`
    EnergyDensity(usize),
    /// Entropy across the middle of the chain.
    HalfChainEntropy,
    Local(LocalKind, usize),
}

impl Observable {
    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::EnergyDensity(n) => write!(f, "energy_n{n}"),
            Observable::HalfChainEntropy => write!(f, "entropy"),
            Observable::Local(kind, site) => write!(f, "{}_{site}", kind.label()),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("unknown observable `{s}`"));
        if s == "entropy" {
            return Ok(Observable::HalfChainEntropy);
        }
        if let Some(n) = s.strip_prefix("energy_n") {
            return n.parse().map(Observable::EnergyDensity).map_err(|_| bad());
        }
        let (kind, site) = s.split_once('_').ok_or_else(bad)?;
        Ok(Observable::Local(
            kind.parse()?,
            site.parse().map_err(|_| bad())?,
        ))
    }
}

enum Probe {
    Energy(usize, LinearMapExpr),
    Entropy,
    Local(PauliTermSum),
}

/// Observables bound to a concrete model, ready to evaluate on states.
pub struct ObservableSet {
    observables: Vec<Observable>,
    probes: Vec<Probe>,
    sites: usize,
}

impl ObservableSet {
    pub fn new(
        static_part: &PauliTermSum,
        drive_part: &PauliTermSum,
        period: f64,
        observables: &[Observable],
    ) -> Result<Self> {
        let sites = static_part.sites();
        let mut probes = Vec::with_capacity(observables.len());
        for (i, obs) in observables.iter().enumerate() {
            if observables[..i].contains(obs) {
                return Err(Error::InvalidParams(format!("observable `{obs}` requested twice")));
            }
            probes.push(match *obs {
                Observable::EnergyDensity(n) => {
                    Probe::Energy(n, assemble_deff(static_part, drive_part, period, n)?)
                }
                Observable::HalfChainEntropy => {
                    if sites % 2 == 1 {
                        return Err(Error::OddChain(sites));
                    }
                    Probe::Entropy
                }
                Observable::Local(kind, site) => Probe::Local(build_local_operator(kind, site, sites)?),
            });
        }
        Ok(Self {
            observables: observables.to_vec(),
            probes,
            sites,
        })
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn names(&self) -> Vec<String> {
        self.observables.iter().map(Observable::name).collect()
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn evaluate(&self, v: &StateVector) -> Result<Vec<f64>> {
        self.probes
            .iter()
            .map(|p| match p {
                Probe::Energy(n, map) => energy_density(*n, map, v),
                Probe::Entropy => entanglement_entropy(v, self.sites / 2),
                Probe::Local(op) => expectation(op, v),
            })
            .collect()
    }
}

/// Expands a comma-separated request such as `energy,entropy,locals` into
/// observables: `energy` gives one energy density per order, `locals` gives
/// `z` and `x` on every site, anything else is parsed as a single name.
pub fn parse_observable_list(spec: &str, orders: &[usize], sites: usize) -> Result<Vec<Observable>> {
    let mut out: Vec<Observable> = Vec::new();
    let mut add = |o: Observable| {
        if !out.contains(&o) {
            out.push(o);
        }
    };
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "energy" => orders.iter().for_each(|&n| add(Observable::EnergyDensity(n))),
            "locals" => {
                for kind in [LocalKind::Z, LocalKind::X] {
                    (0..sites).for_each(|i| add(Observable::Local(kind, i)));
                }
            }
            other => add(other.parse()?),
        }
    }
    Ok(out)
}
