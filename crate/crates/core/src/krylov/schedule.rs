use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Strictly increasing period indices at which observables are recorded,
/// always starting at period 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct SampleSchedule {
    periods: Vec<u64>,
}

impl SampleSchedule {
    pub fn new(periods: Vec<u64>) -> Result<Self> {
        if periods.first() != Some(&0) {
            return Err(Error::InvalidSchedule("first entry must be period 0".into()));
        }
        if let Some(w) = periods.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "periods not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(Self { periods })
    }

    /// Every period from 0 to `last` inclusive.
    pub fn every_period(last: u64) -> Self {
        Self {
            periods: (0..=last).collect(),
        }
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn last(&self) -> u64 {
        *self.periods.last().expect("schedule is never empty")
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, period: u64) -> bool {
        self.periods.binary_search(&period).is_ok()
    }

    /// First 8 bytes of the SHA-256 of the little-endian period list.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        for p in &self.periods {
            h.update(p.to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }
}

impl TryFrom<Vec<u64>> for SampleSchedule {
    type Error = Error;

    fn try_from(periods: Vec<u64>) -> Result<Self> {
        Self::new(periods)
    }
}

impl From<SampleSchedule> for Vec<u64> {
    fn from(s: SampleSchedule) -> Self {
        s.periods
    }
}

/// Approximately log-uniform schedule: 0, then `round(10^(k / points_per_decade))`
/// up to `max_period`, deduplicated, with `max_period` always included.
pub fn default_log_schedule(max_period: u64, points_per_decade: u32) -> Result<SampleSchedule> {
    if max_period < 1 {
        return Err(Error::InvalidSchedule("max_period must be at least 1".into()));
    }
    if points_per_decade == 0 {
        return Err(Error::InvalidSchedule("points_per_decade must be positive".into()));
    }
    let ppd = points_per_decade as f64;
    let steps = ((max_period as f64).log10() * ppd).floor() as u64;
    let mut periods = vec![0u64];
    periods.extend(
        (0..=steps)
            .map(|k| 10f64.powf(k as f64 / ppd).round() as u64)
            .filter(|&p| p <= max_period),
    );
    periods.push(max_period);
    periods.sort_unstable();
    periods.dedup();
    SampleSchedule::new(periods)
}
