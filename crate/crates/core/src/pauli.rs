//! Pauli strings and real-weighted sums of them.
//!
//! Basis convention: the computational basis is ordered by the integer
//! bitstring, bit `i` encodes site `i`, and bit value 0 is spin up (the +1
//! eigenstate of sigma^z). A Pauli string is stored as an X mask and a Z mask
//! (Y sets both), so that
//!
//! ```text
//! P |b> = i^{#Y} (-1)^{popcount(b & z)} |b ^ x>
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::state::StateVector;

/// Largest chain that can be represented in the bit masks and addressed as a
/// dense amplitude vector.
pub const MAX_SITES: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-site Pauli matrices; identity on unlisted sites.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(site: usize, op: Pauli) -> Self {
        Self::identity().with(site, op)
    }

    pub fn from_ops(ops: &[(usize, Pauli)]) -> Self {
        ops.iter()
            .fold(Self::identity(), |s, &(site, op)| s.with(site, op))
    }

    /// Returns a copy with `op` placed on `site`, replacing whatever was there.
    pub fn with(self, site: usize, op: Pauli) -> Self {
        assert!(site < 64, "site index {site} exceeds mask width");
        let bit = 1u64 << site;
        let (x, z) = match op {
            Pauli::X => (bit, 0),
            Pauli::Y => (bit, bit),
            Pauli::Z => (0, bit),
        };
        Self {
            x_mask: (self.x_mask & !bit) | x,
            z_mask: (self.z_mask & !bit) | z,
        }
    }

    pub fn op_at(&self, site: usize) -> Option<Pauli> {
        if site >= 64 {
            return None;
        }
        let bit = 1u64 << site;
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (true, true) => Some(Pauli::Y),
            (true, false) => Some(Pauli::X),
            (false, true) => Some(Pauli::Z),
            (false, false) => None,
        }
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn support(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    pub fn weight(&self) -> u32 {
        self.support().count_ones()
    }

    pub fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    /// Highest site index acted on, `None` for the identity.
    pub fn max_site(&self) -> Option<usize> {
        let s = self.support();
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    /// Non-identity factors in increasing site order.
    pub fn ops(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        (0..64).filter_map(move |site| self.op_at(site).map(|op| (site, op)))
    }

    /// `i^{#Y}`, the phase picked up when acting on a basis state.
    fn phase(&self) -> Complex64 {
        match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.support() == 0 {
            return write!(f, "I");
        }
        for (site, op) in self.ops() {
            write!(f, "{}{}", op.symbol(), site)?;
        }
        Ok(())
    }
}

/// Hermitian operator represented as a real-weighted sum of Pauli strings.
///
/// Terms are canonical: sorted, without duplicates and without zero weights.
/// The matrix-free kernel used by [`LinearOperator::apply_into`] is built
/// lazily on first use and cached.
pub struct PauliTermSum {
    sites: usize,
    terms: Vec<(f64, PauliString)>,
    kernel: OnceLock<Kernel>,
}

impl Clone for PauliTermSum {
    fn clone(&self) -> Self {
        Self {
            sites: self.sites,
            terms: self.terms.clone(),
            kernel: OnceLock::new(),
        }
    }
}

impl PartialEq for PauliTermSum {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites && self.terms == other.terms
    }
}

impl fmt::Debug for PauliTermSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PauliTermSum")
            .field("sites", &self.sites)
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl fmt::Display for PauliTermSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (c, s)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{s}")?;
        }
        Ok(())
    }
}

impl PauliTermSum {
    pub fn new<I>(sites: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::InvalidParams(format!(
                "site count {sites} outside 1..={MAX_SITES}"
            )));
        }
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, s) in terms {
            if let Some(top) = s.max_site() {
                if top >= sites {
                    return Err(Error::SiteOutOfRange { site: top, sites });
                }
            }
            if !c.is_finite() {
                return Err(Error::InvalidParams(format!("non-finite weight on {s}")));
            }
            *merged.entry(s).or_insert(0.0) += c;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(s, c)| (c, s))
            .collect();
        Ok(Self {
            sites,
            terms,
            kernel: OnceLock::new(),
        })
    }

    pub fn zero(sites: usize) -> Result<Self> {
        Self::new(sites, std::iter::empty())
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Weight of `string`, zero when absent.
    pub fn coefficient(&self, string: &PauliString) -> f64 {
        self.terms
            .binary_search_by(|(_, s)| s.cmp(string))
            .map(|k| self.terms[k].0)
            .unwrap_or(0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(_, s)| s.is_diagonal())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.sites, self.terms.iter().map(|&(c, s)| (factor * c, s)))
            .expect("scaling preserves validity")
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        if self.sites != other.sites {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Self::new(
            self.sites,
            self.terms
                .iter()
                .copied()
                .chain(other.terms.iter().map(|&(c, s)| (factor * c, s))),
        )
    }

    /// Sum of the absolute weights, an upper bound on the spectral norm.
    pub fn weight_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }

    /// Applies the operator to a state, returning the unnormalized image.
    pub fn apply(&self, v: &StateVector) -> Result<Vec<Complex64>> {
        if v.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.dim(),
            });
        }
        Ok(self.apply_vec(v.amplitudes()))
    }

    fn kernel(&self) -> &Kernel {
        self.kernel.get_or_init(|| Kernel::build(self))
    }
}

impl LinearOperator for PauliTermSum {
    fn dim(&self) -> usize {
        1usize << self.sites
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(input.len(), self.dim(), "input dimension mismatch");
        assert_eq!(out.len(), self.dim(), "output dimension mismatch");
        self.kernel().apply(input, out);
    }
}

/// Terms grouped by flip pattern, with the diagonal part tabulated.
///
/// Groups with a constant weight or a weight selected by a single bit are
/// fused into one sweep over the output; anything else gets its own pass.
struct Kernel {
    diagonal: Option<Vec<f64>>,
    constant: Vec<(usize, Complex64)>,
    /// `(x mask, sign bit, weight if clear, weight if set)`
    one_bit: Vec<(usize, usize, Complex64, Complex64)>,
    general: Vec<FlipGroup>,
}

struct FlipGroup {
    x_mask: usize,
    /// (z mask, weight * i^{#Y})
    parts: Vec<(usize, Complex64)>,
}

impl FlipGroup {
    /// When every sign depends on one bit `m` of the source index, returns
    /// `(m, weight if clear, weight if set)`.
    fn single_bit_sign(&self) -> Option<(usize, Complex64, Complex64)> {
        let union = self.parts.iter().fold(0, |acc, &(z, _)| acc | z);
        if union.count_ones() != 1 {
            return None;
        }
        let mut clear = Complex64::new(0.0, 0.0);
        let mut set = Complex64::new(0.0, 0.0);
        for &(z, w) in &self.parts {
            clear += w;
            set += if z == 0 { w } else { -w };
        }
        Some((union, clear, set))
    }
}

impl Kernel {
    fn build(op: &PauliTermSum) -> Self {
        let dim = op.dim();
        let mut diag_terms = Vec::new();
        let mut by_flip: HashMap<u64, Vec<(usize, Complex64)>> = HashMap::new();
        for &(c, s) in &op.terms {
            if s.is_diagonal() {
                diag_terms.push((s.z_mask() as usize, c));
            } else {
                by_flip
                    .entry(s.x_mask())
                    .or_default()
                    .push((s.z_mask() as usize, s.phase() * c));
            }
        }
        let diagonal = (!diag_terms.is_empty()).then(|| {
            (0..dim)
                .map(|b| {
                    diag_terms
                        .iter()
                        .map(|&(z, c)| if (b & z).count_ones() & 1 == 1 { -c } else { c })
                        .sum()
                })
                .collect()
        });
        let mut groups: Vec<FlipGroup> = by_flip
            .into_iter()
            .map(|(x, parts)| FlipGroup {
                x_mask: x as usize,
                parts,
            })
            .collect();
        groups.sort_by_key(|g| g.x_mask);
        let mut kernel = Self {
            diagonal,
            constant: Vec::new(),
            one_bit: Vec::new(),
            general: Vec::new(),
        };
        for g in groups {
            if let [(0, c)] = g.parts[..] {
                kernel.constant.push((g.x_mask, c));
            } else if let Some((bit, clear, set)) = g.single_bit_sign() {
                kernel.one_bit.push((g.x_mask, bit, clear, set));
            } else {
                kernel.general.push(g);
            }
        }
        kernel
    }

    fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (a, o) in out.iter_mut().enumerate() {
            let mut acc = match &self.diagonal {
                Some(d) => input[a] * d[a],
                None => Complex64::new(0.0, 0.0),
            };
            for &(x, c) in &self.constant {
                acc += c * input[a ^ x];
            }
            for &(x, bit, clear, set) in &self.one_bit {
                let b = a ^ x;
                acc += if b & bit == 0 { clear } else { set } * input[b];
            }
            *o = acc;
        }
        for g in &self.general {
            let x = g.x_mask;
            for (a, o) in out.iter_mut().enumerate() {
                let b = a ^ x;
                let mut c = Complex64::new(0.0, 0.0);
                for &(z, w) in &g.parts {
                    if (b & z).count_ones() & 1 == 1 {
                        c -= w;
                    } else {
                        c += w;
                    }
                }
                *o += c * input[b];
            }
        }
    }
}
