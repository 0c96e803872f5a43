//! The driven Ising chain: static part `D`, square-wave drive `E`, local probes
//! and domain-wall product states.
//!
//! Over one period the Hamiltonian is `D + E` for the first half and `D - E`
//! for the second, with
//!
//! ```text
//! D = J sum_{i<j} Z_i Z_j / |i-j|^alpha + Jx sum_i X_i X_{i+1} + hx sum_i X_i
//! E = hy sum_i Y_i + hz sum_i Z_i
//! ```
//!
//! The short-range variant keeps only Ising pairs with `|i-j| <= 2`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliTermSum, MAX_SITES};
use crate::state::StateVector;

/// Longest Ising bond kept by [`RangeMode::ShortRange`].
pub const SHORT_RANGE_CUTOFF: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RangeMode {
    LongRange,
    ShortRange,
}

impl RangeMode {
    pub fn label(self) -> &'static str {
        match self {
            RangeMode::LongRange => "long",
            RangeMode::ShortRange => "short",
        }
    }
}

impl fmt::Display for RangeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RangeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "long" | "longrange" | "long-range" => Ok(RangeMode::LongRange),
            "short" | "shortrange" | "short-range" => Ok(RangeMode::ShortRange),
            other => Err(Error::InvalidParams(format!("unknown range mode `{other}`"))),
        }
    }
}

/// Only open chains are supported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "J")]
    pub ising: f64,
    #[serde(rename = "Jx")]
    pub xx: f64,
    pub hx: f64,
    pub hy: f64,
    pub hz: f64,
    pub alpha: f64,
    pub range: RangeMode,
    pub omega: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelParams {
    pub const DEFAULT_J: f64 = 1.0;
    pub const DEFAULT_JX: f64 = 0.19;
    pub const DEFAULT_HX: f64 = 0.21;
    pub const DEFAULT_HY: f64 = 0.17;
    pub const DEFAULT_HZ: f64 = 0.13;
    pub const DEFAULT_ALPHA: f64 = 1.25;

    /// Model with the reference couplings and the given size, range and drive.
    pub fn new(sites: usize, range: RangeMode, omega: f64) -> Self {
        Self {
            sites,
            ising: Self::DEFAULT_J,
            xx: Self::DEFAULT_JX,
            hx: Self::DEFAULT_HX,
            hy: Self::DEFAULT_HY,
            hz: Self::DEFAULT_HZ,
            alpha: Self::DEFAULT_ALPHA,
            range,
            omega,
            boundary: Boundary::Open,
        }
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 {
            return Err(Error::InvalidParams(format!(
                "L = {} but a chain needs at least 2 sites",
                self.sites
            )));
        }
        self.validate_fields()
    }

    fn validate_fields(&self) -> Result<()> {
        if self.sites == 0 || self.sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "L = {} outside 1..={MAX_SITES}",
                self.sites
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha = {} must be > 0", self.alpha)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidParams(format!("omega = {} must be > 0", self.omega)));
        }
        let couplings = [self.ising, self.xx, self.hx, self.hy, self.hz];
        if couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite coupling".into()));
        }
        Ok(())
    }

    /// Parses and validates a JSON document; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Static part `D`: Ising interactions, nearest-neighbour XX and the
/// transverse field.
pub fn build_static_part(p: &ModelParams) -> Result<PauliTermSum> {
    p.validate()?;
    let l = p.sites;
    let mut terms = Vec::with_capacity(l * (l - 1) / 2 + 2 * l);
    for i in 0..l {
        for j in i + 1..l {
            let r = j - i;
            if p.range == RangeMode::ShortRange && r > SHORT_RANGE_CUTOFF {
                continue;
            }
            let zz = PauliString::from_ops(&[(i, Pauli::Z), (j, Pauli::Z)]);
            terms.push((p.ising / (r as f64).powf(p.alpha), zz));
        }
    }
    for i in 0..l - 1 {
        terms.push((p.xx, PauliString::from_ops(&[(i, Pauli::X), (i + 1, Pauli::X)])));
    }
    for i in 0..l {
        terms.push((p.hx, PauliString::single(i, Pauli::X)));
    }
    PauliTermSum::new(l, terms)
}

/// Driven part `E`, the field whose sign flips at half period.
///
/// Unlike [`build_static_part`] this is well defined for a single site.
pub fn build_drive_part(p: &ModelParams) -> Result<PauliTermSum> {
    p.validate_fields()?;
    let terms = (0..p.sites).flat_map(|i| {
        [
            (p.hy, PauliString::single(i, Pauli::Y)),
            (p.hz, PauliString::single(i, Pauli::Z)),
        ]
    });
    PauliTermSum::new(p.sites, terms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocalKind {
    Z,
    X,
    ZZ,
    XX,
}

impl LocalKind {
    pub const ALL: [LocalKind; 4] = [LocalKind::Z, LocalKind::X, LocalKind::ZZ, LocalKind::XX];

    pub fn label(self) -> &'static str {
        match self {
            LocalKind::Z => "z",
            LocalKind::X => "x",
            LocalKind::ZZ => "zz",
            LocalKind::XX => "xx",
        }
    }

    /// Number of sites the operator touches.
    pub fn span(self) -> usize {
        match self {
            LocalKind::Z | LocalKind::X => 1,
            LocalKind::ZZ | LocalKind::XX => 2,
        }
    }
}

impl FromStr for LocalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(LocalKind::Z),
            "x" => Ok(LocalKind::X),
            "zz" => Ok(LocalKind::ZZ),
            "xx" => Ok(LocalKind::XX),
            other => Err(Error::InvalidParams(format!("unknown local operator `{other}`"))),
        }
    }
}

/// `sigma^z_i`, `sigma^x_i`, `sigma^z_i sigma^z_{i+1}` or
/// `sigma^x_i sigma^x_{i+1}` with unit weight.
pub fn build_local_operator(kind: LocalKind, site: usize, sites: usize) -> Result<PauliTermSum> {
    let last = site + kind.span() - 1;
    if last >= sites {
        return Err(Error::SiteOutOfRange { site: last, sites });
    }
    let s = match kind {
        LocalKind::Z => PauliString::single(site, Pauli::Z),
        LocalKind::X => PauliString::single(site, Pauli::X),
        LocalKind::ZZ => PauliString::from_ops(&[(site, Pauli::Z), (site + 1, Pauli::Z)]),
        LocalKind::XX => PauliString::from_ops(&[(site, Pauli::X), (site + 1, Pauli::X)]),
    };
    PauliTermSum::new(sites, [(1.0, s)])
}

/// Down-spin flags of the domain-wall product state, site by site.
///
/// The chain is cut at `round(k L / (walls + 1))`, `k = 1..=walls`, and the
/// resulting segments alternate up, down, up, ... starting from site 0.
pub fn domain_wall_pattern(sites: usize, walls: usize) -> Result<Vec<bool>> {
    if sites == 0 || walls >= sites {
        return Err(Error::DomainWalls { walls, sites });
    }
    let cuts: Vec<usize> = (1..=walls)
        .map(|k| (k as f64 * sites as f64 / (walls + 1) as f64).round() as usize)
        .collect();
    Ok((0..sites)
        .map(|i| cuts.iter().filter(|&&c| c <= i).count() % 2 == 1)
        .collect())
}

/// z-polarized product state with `walls` equally spaced domain walls.
pub fn initial_state(sites: usize, walls: usize) -> Result<StateVector> {
    let pattern = domain_wall_pattern(sites, walls)?;
    let index = pattern
        .iter()
        .enumerate()
        .fold(0usize, |acc, (i, &down)| if down { acc | 1 << i } else { acc });
    StateVector::basis(sites, index)
}
