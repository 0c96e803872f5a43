//! High-frequency expansion of the stroboscopic generator as words over the
//! two operators `D` and `E`, truncated at fourth order in the period.
//!
//! With `tau = T/2` the expansion reads
//!
//! ```text
//! D_eff = D + (i/2) tau (ED - DE) - (1/6) tau^2 (EED - 2EDE + DEE)
//!       + (i/24) tau^3 [ (EDDD + DEEE - EEED - DDDE) + 3(EEDE + DDED - EDEE - DEDD) ]
//!       + (1/360) tau^4 [ -27(EDDED + DEDDE) + 23(DDEDE + EDEDD) + 18(EDDDE + EEDEE)
//!                         + 8 DEDED - 12(EEEDE + EDEEE) - 7(EEDDD + DDDEE)
//!                         + 3(DEEEE + EEEED) - 2(DEEDD + DDEED) ]
//! ```
//!
//! Words are read left to right as operator products and applied to a state
//! right to left as chained matvecs; they are never multiplied out.

use std::fmt;

use num_complex::Complex64;

use crate::dense::{self, HermitianEigen};
use crate::error::{Error, Result};
use crate::krylov::{KrylovConfig, Propagator};
use crate::linalg::{self, LinearOperator};
use crate::pauli::PauliTermSum;
use crate::state::StateVector;
use crate::stats;

pub const MAX_ORDER: usize = 4;

/// Residuals below this are roundoff and are excluded from the order fit.
pub const ORDER_CHECK_NOISE_FLOOR: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    D,
    E,
}

pub fn parse_letters(word: &str) -> Result<Vec<Letter>> {
    word.chars()
        .map(|c| match c {
            'D' => Ok(Letter::D),
            'E' => Ok(Letter::E),
            other => Err(Error::InvalidParams(format!("unknown letter `{other}` in word"))),
        })
        .collect()
}

struct OrderBlock {
    /// Common rational prefactor `num / den`.
    num: i64,
    den: i64,
    /// Whether the prefactor carries a factor of `i`.
    imaginary: bool,
    words: &'static [(i64, &'static str)],
}

const TABLE: [OrderBlock; MAX_ORDER + 1] = [
    OrderBlock {
        num: 1,
        den: 1,
        imaginary: false,
        words: &[(1, "D")],
    },
    OrderBlock {
        num: 1,
        den: 2,
        imaginary: true,
        words: &[(1, "ED"), (-1, "DE")],
    },
    OrderBlock {
        num: -1,
        den: 6,
        imaginary: false,
        words: &[(1, "EED"), (-2, "EDE"), (1, "DEE")],
    },
    OrderBlock {
        num: 1,
        den: 24,
        imaginary: true,
        words: &[
            (1, "EDDD"),
            (1, "DEEE"),
            (-1, "EEED"),
            (-1, "DDDE"),
            (3, "EEDE"),
            (3, "DDED"),
            (-3, "EDEE"),
            (-3, "DEDD"),
        ],
    },
    OrderBlock {
        num: 1,
        den: 360,
        imaginary: false,
        words: &[
            (-27, "EDDED"),
            (-27, "DEDDE"),
            (23, "DDEDE"),
            (23, "EDEDD"),
            (18, "EDDDE"),
            (18, "EEDEE"),
            (8, "DEDED"),
            (-12, "EEEDE"),
            (-12, "EDEEE"),
            (-7, "EEDDD"),
            (-7, "DDDEE"),
            (3, "DEEEE"),
            (3, "EEEED"),
            (-2, "DEEDD"),
            (-2, "DDEED"),
        ],
    },
];

/// One term of the expansion: `multiplicity * prefactor * (T/2)^order * word`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorWord {
    pub order: usize,
    pub letters: Vec<Letter>,
    pub multiplicity: i64,
    pub prefactor_num: i64,
    pub prefactor_den: i64,
    pub imaginary: bool,
}

impl OperatorWord {
    /// Numeric coefficient at drive period `period`.
    pub fn coefficient(&self, period: f64) -> Complex64 {
        let real = (self.multiplicity * self.prefactor_num) as f64 / self.prefactor_den as f64
            * (period / 2.0).powi(self.order as i32);
        if self.imaginary {
            Complex64::new(0.0, real)
        } else {
            Complex64::new(real, 0.0)
        }
    }

    /// Reduced rational coefficient without the `(T/2)^order` factor, e.g.
    /// `-1/2*i` or `3/40`.
    pub fn rational(&self) -> String {
        let (n, d) = reduce(self.multiplicity * self.prefactor_num, self.prefactor_den);
        let base = if d == 1 { format!("{n}") } else { format!("{n}/{d}") };
        if self.imaginary {
            format!("{base}*i")
        } else {
            base
        }
    }

    pub fn word(&self) -> String {
        self.letters
            .iter()
            .map(|l| match l {
                Letter::D => 'D',
                Letter::E => 'E',
            })
            .collect()
    }
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) (T/2)^{} {}", self.rational(), self.order, self.word())
    }
}

fn reduce(n: i64, d: i64) -> (i64, i64) {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let g = gcd(n, d).max(1);
    let (n, d) = (n / g, d / g);
    if d < 0 {
        (-n, -d)
    } else {
        (n, d)
    }
}

/// Words of exactly the given order.
pub fn magnus_words(order: usize) -> Result<Vec<OperatorWord>> {
    let block = TABLE.get(order).ok_or(Error::UnsupportedOrder(order))?;
    block
        .words
        .iter()
        .map(|&(multiplicity, w)| {
            Ok(OperatorWord {
                order,
                letters: parse_letters(w)?,
                multiplicity,
                prefactor_num: block.num,
                prefactor_den: block.den,
                imaginary: block.imaginary,
            })
        })
        .collect()
}

/// CSV audit table of every word up to [`MAX_ORDER`]:
/// `order,word,multiplicity,prefactor,coefficient,half_period_power`.
pub fn words_csv() -> String {
    let mut out = String::from("order,word,multiplicity,prefactor,coefficient,half_period_power\n");
    for order in 0..=MAX_ORDER {
        let block = &TABLE[order];
        let prefactor = {
            let (n, d) = reduce(block.num, block.den);
            let base = if d == 1 { format!("{n}") } else { format!("{n}/{d}") };
            if block.imaginary {
                format!("{base}*i")
            } else {
                base
            }
        };
        for w in magnus_words(order).expect("table order") {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                w.order,
                w.word(),
                w.multiplicity,
                prefactor,
                w.rational(),
                w.order
            ));
        }
    }
    out
}

/// Weighted sum of words in `D` and `E`, evaluated matrix-free.
///
/// Words are merged into a trie keyed by the order in which letters are
/// applied, so shared suffixes are evaluated once per matvec.
#[derive(Clone, Debug)]
pub struct LinearMapExpr {
    static_part: PauliTermSum,
    drive_part: PauliTermSum,
    period: f64,
    order: Option<usize>,
    components: Vec<(Complex64, Vec<Letter>)>,
    nodes: Vec<TrieNode>,
    roots: Vec<usize>,
    depth: usize,
}

#[derive(Clone, Debug)]
struct TrieNode {
    letter: Letter,
    coefficient: Complex64,
    children: Vec<usize>,
}

impl LinearMapExpr {
    /// Arbitrary combination of words; used for testing and custom probes.
    pub fn from_words(
        static_part: &PauliTermSum,
        drive_part: &PauliTermSum,
        components: Vec<(Complex64, Vec<Letter>)>,
    ) -> Result<Self> {
        if static_part.dim() != drive_part.dim() {
            return Err(Error::DimensionMismatch {
                expected: static_part.dim(),
                found: drive_part.dim(),
            });
        }
        let mut nodes: Vec<TrieNode> = Vec::new();
        let mut roots: Vec<usize> = Vec::new();
        let mut depth = 0;
        for (c, letters) in &components {
            if letters.is_empty() {
                return Err(Error::InvalidParams("empty word".into()));
            }
            depth = depth.max(letters.len());
            let mut siblings_of: Option<usize> = None;
            let mut current = 0;
            for &letter in letters.iter().rev() {
                let siblings = match siblings_of {
                    None => &roots,
                    Some(p) => &nodes[p].children,
                };
                let found = siblings.iter().copied().find(|&k| nodes[k].letter == letter);
                current = match found {
                    Some(k) => k,
                    None => {
                        nodes.push(TrieNode {
                            letter,
                            coefficient: Complex64::new(0.0, 0.0),
                            children: Vec::new(),
                        });
                        let k = nodes.len() - 1;
                        match siblings_of {
                            None => roots.push(k),
                            Some(p) => nodes[p].children.push(k),
                        }
                        k
                    }
                };
                siblings_of = Some(current);
            }
            nodes[current].coefficient += c;
        }
        Ok(Self {
            static_part: static_part.clone(),
            drive_part: drive_part.clone(),
            period: f64::NAN,
            order: None,
            components,
            nodes,
            roots,
            depth,
        })
    }

    pub fn static_part(&self) -> &PauliTermSum {
        &self.static_part
    }

    pub fn drive_part(&self) -> &PauliTermSum {
        &self.drive_part
    }

    /// Drive period the coefficients were evaluated at (NaN for custom maps).
    pub fn period(&self) -> f64 {
        self.period
    }

    /// Truncation order, `None` for custom maps.
    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn components(&self) -> &[(Complex64, Vec<Letter>)] {
        &self.components
    }

    pub fn sites(&self) -> usize {
        self.static_part.sites()
    }

    /// Operator applications per matvec after suffix sharing.
    pub fn applications_per_matvec(&self) -> usize {
        self.nodes.len()
    }

    fn letter_op(&self, letter: Letter) -> &PauliTermSum {
        match letter {
            Letter::D => &self.static_part,
            Letter::E => &self.drive_part,
        }
    }

    fn visit(&self, node: usize, input: &[Complex64], scratch: &mut [Vec<Complex64>], out: &mut [Complex64]) {
        let (head, rest) = scratch.split_first_mut().expect("scratch depth covers the trie");
        let n = &self.nodes[node];
        self.letter_op(n.letter).apply_into(input, head);
        if n.coefficient != Complex64::new(0.0, 0.0) {
            linalg::axpy(n.coefficient, head, out);
        }
        for &child in &n.children {
            self.visit(child, head, rest, out);
        }
    }
}

impl LinearOperator for LinearMapExpr {
    fn dim(&self) -> usize {
        self.static_part.dim()
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = self.dim();
        assert_eq!(input.len(), dim, "input dimension mismatch");
        out.fill(Complex64::new(0.0, 0.0));
        let mut scratch = vec![vec![Complex64::new(0.0, 0.0); dim]; self.depth];
        for &r in &self.roots {
            self.visit(r, input, &mut scratch, out);
        }
    }
}

/// Truncation of the effective generator to order `order` in the period.
pub fn assemble_deff(
    static_part: &PauliTermSum,
    drive_part: &PauliTermSum,
    period: f64,
    order: usize,
) -> Result<LinearMapExpr> {
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    let mut components = Vec::new();
    for k in 0..=order {
        for w in magnus_words(k)? {
            components.push((w.coefficient(period), w.letters));
        }
    }
    let mut map = LinearMapExpr::from_words(static_part, drive_part, components)?;
    map.period = period;
    map.order = Some(order);
    Ok(map)
}

/// One drive period: `exp(-i T/2 (D - E)) exp(-i T/2 (D + E)) v`.
pub fn floquet_unitary_apply(
    static_part: &PauliTermSum,
    drive_part: &PauliTermSum,
    period: f64,
    v: &StateVector,
    cfg: &KrylovConfig,
) -> Result<StateVector> {
    let first = static_part.add_scaled(drive_part, 1.0)?;
    let second = static_part.add_scaled(drive_part, -1.0)?;
    let (mid, _) = Propagator::new(&first, cfg)?.step(v, period / 2.0)?;
    let (out, _) = Propagator::new(&second, cfg)?.step(&mid, period / 2.0)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderCheck {
    /// Fitted exponent of `||U_f - exp(-i T D^n)||` against `T`.
    pub slope: f64,
    /// `(T, residual)` for every grid point.
    pub residuals: Vec<(f64, f64)>,
    /// Number of points above the noise floor that entered the fit.
    pub fitted_points: usize,
}

/// Scaling exponent of the truncation error against the exact one-period
/// propagator, both built densely. Expected to be `order + 2`.
pub fn bch_order_check(
    static_part: &PauliTermSum,
    drive_part: &PauliTermSum,
    order: usize,
    period_grid: &[f64],
) -> Result<OrderCheck> {
    const MAX_CHECK_SITES: usize = 6;
    if static_part.sites() > MAX_CHECK_SITES {
        return Err(Error::TooLargeForDense {
            sites: static_part.sites(),
            limit: MAX_CHECK_SITES,
        });
    }
    if order > MAX_ORDER {
        return Err(Error::UnsupportedOrder(order));
    }
    if period_grid.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "order check needs at least 4 periods, got {}",
            period_grid.len()
        )));
    }
    let plus = HermitianEigen::new(&dense::materialize(&static_part.add_scaled(drive_part, 1.0)?)?)?;
    let minus = HermitianEigen::new(&dense::materialize(&static_part.add_scaled(drive_part, -1.0)?)?)?;
    let mut residuals = Vec::with_capacity(period_grid.len());
    for &t in period_grid {
        let exact = &minus.propagator(t / 2.0) * &plus.propagator(t / 2.0);
        let gen = dense::materialize(&assemble_deff(static_part, drive_part, t, order)?)?;
        let approx = HermitianEigen::new(&gen)?.propagator(t);
        residuals.push((t, (&exact - &approx).norm_l2()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = residuals
        .iter()
        .filter(|(_, r)| *r > ORDER_CHECK_NOISE_FLOOR)
        .map(|(t, r)| (t.ln(), r.ln()))
        .unzip();
    if xs.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} residuals above the noise floor {ORDER_CHECK_NOISE_FLOOR:e}",
            xs.len()
        )));
    }
    let fit = stats::fit_line(&xs, &ys)?;
    Ok(OrderCheck {
        slope: fit.slope,
        residuals,
        fitted_points: xs.len(),
    })
}
