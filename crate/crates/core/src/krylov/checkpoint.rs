//! Binary snapshot of an evolution in progress.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic  b"PTCK"
//! u32    format version (1)
//! u32    L
//! u64    period index of the stored state
//! u64    schedule hash
//! 2^L x (f64 re, f64 im) amplitudes
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::MAX_SITES;
use crate::state::StateVector;

const MAGIC: &[u8; 4] = b"PTCK";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub period: u64,
    pub schedule_hash: u64,
    pub state: StateVector,
}

impl Checkpoint {
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.state.sites() as u32).to_le_bytes())?;
        w.write_all(&self.period.to_le_bytes())?;
        w.write_all(&self.schedule_hash.to_le_bytes())?;
        for a in self.state.amplitudes() {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let sites = read_u32(&mut r)? as usize;
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::Checkpoint(format!("invalid site count {sites}")));
        }
        let period = read_u64(&mut r)?;
        let schedule_hash = read_u64(&mut r)?;
        let dim = 1usize << sites;
        let mut amps = Vec::with_capacity(dim);
        let mut buf = [0u8; 16];
        for _ in 0..dim {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            amps.push(Complex64::new(re, im));
        }
        let state = StateVector::normalized(sites, amps)?;
        Ok(Self {
            period,
            schedule_hash,
            state,
        })
    }

    /// Writes through a temporary file and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        {
            let f = File::create(&tmp)?;
            self.write_to(BufWriter::new(f))?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let cp = Checkpoint {
            period: 7,
            schedule_hash: 0xdead_beef,
            state: StateVector::basis(2, 3).unwrap(),
        };
        let mut bytes = Vec::new();
        cp.write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 4 + 8 + 8 + 4 * 16);
        assert_eq!(&bytes[..4], b"PTCK");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 7);
        let back = Checkpoint::read_from(&bytes[..]).unwrap();
        assert_eq!(back, cp);
    }

    #[test]
    fn truncated_file_rejected() {
        let cp = Checkpoint {
            period: 1,
            schedule_hash: 1,
            state: StateVector::basis(3, 0).unwrap(),
        };
        let mut bytes = Vec::new();
        cp.write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(Checkpoint::read_from(&bytes[..]).is_err());
        assert!(Checkpoint::read_from(&b"NOPE"[..]).is_err());
    }
}
