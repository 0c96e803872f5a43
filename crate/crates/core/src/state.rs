use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::pauli::MAX_SITES;

/// Normalized pure state of a chain of spin-1/2 sites in the product basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    sites: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Basis state `|index>`; bit `i` of `index` set means site `i` points down.
    pub fn basis(sites: usize, index: usize) -> Result<Self> {
        check_sites(sites)?;
        let dim = 1usize << sites;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { sites, amplitudes })
    }

    /// Wraps `amplitudes` after rescaling them to unit norm.
    pub fn normalized(sites: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        check_sites(sites)?;
        if amplitudes.len() != 1usize << sites {
            return Err(Error::DimensionMismatch {
                expected: 1 << sites,
                found: amplitudes.len(),
            });
        }
        let n = linalg::norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!("cannot normalize vector of norm {n}")));
        }
        linalg::scale(Complex64::new(1.0 / n, 0.0), &mut amplitudes);
        Ok(Self { sites, amplitudes })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::distance(&self.amplitudes, &other.amplitudes)
    }

    /// `<sigma^z_site>`
    pub fn magnetization(&self, site: usize) -> Result<f64> {
        if site >= self.sites {
            return Err(Error::SiteOutOfRange {
                site,
                sites: self.sites,
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(b, a)| if b >> site & 1 == 1 { -a.norm_sqr() } else { a.norm_sqr() })
            .sum())
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::InvalidParams(format!(
            "site count {sites} outside 1..={MAX_SITES}"
        )));
    }
    Ok(())
}
