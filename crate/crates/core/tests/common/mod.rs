//! Dense reference implementations built directly from the basis, without
//! going through the Pauli-string machinery of the crate.
#![allow(dead_code)]

use faer::{Mat, Side};
use num_complex::Complex64;
use prethermal::{ModelParams, RangeMode, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `+1` for spin up (bit clear), `-1` for spin down.
fn z(state: usize, site: usize) -> f64 {
    if state >> site & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Static part of the model written out element by element.
pub fn static_matrix(p: &ModelParams) -> Mat<Complex64> {
    let l = p.sites;
    let dim = 1usize << l;
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for i in 0..l {
            for j in i + 1..l {
                let r = j - i;
                if p.range == RangeMode::ShortRange && r > 2 {
                    continue;
                }
                diag += p.ising / (r as f64).powf(p.alpha) * z(s, i) * z(s, j);
            }
        }
        m[(s, s)] += c(diag, 0.0);
        for i in 0..l {
            m[(s ^ (1 << i), s)] += c(p.hx, 0.0);
        }
        for i in 0..l - 1 {
            m[(s ^ (3 << i), s)] += c(p.xx, 0.0);
        }
    }
    m
}

/// Drive part: `hy sum Y_i + hz sum Z_i`.
pub fn drive_matrix(p: &ModelParams) -> Mat<Complex64> {
    let dim = 1usize << p.sites;
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        for i in 0..p.sites {
            m[(s, s)] += c(p.hz * z(s, i), 0.0);
            // Y|up> = i|down>, Y|down> = -i|up>
            m[(s ^ (1 << i), s)] += c(0.0, p.hy * z(s, i));
        }
    }
    m
}

/// `exp(-i t H)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &Mat<Complex64>, t: f64) -> Mat<Complex64> {
    let evd = h.self_adjoint_eigen(Side::Lower).unwrap();
    let u = evd.U();
    let s = evd.S().column_vector();
    let n = h.nrows();
    let scaled = Mat::<Complex64>::from_fn(n, n, |i, k| u[(i, k)] * c(0.0, -s[k].re * t).exp());
    &scaled * u.adjoint()
}

pub fn floquet_matrix(p: &ModelParams) -> Mat<Complex64> {
    let d = static_matrix(p);
    let e = drive_matrix(p);
    let half = p.period() / 2.0;
    &expm_hermitian(&(&d - &e), half) * &expm_hermitian(&(&d + &e), half)
}

pub fn apply(m: &Mat<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_entry_diff(a: &Mat<Complex64>, b: &Mat<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn random_state(sites: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << sites)
        .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    StateVector::normalized(sites, amps).unwrap()
}

/// Von Neumann entropy of sites `0..cut` from the reduced density matrix.
pub fn entropy_reference(v: &[Complex64], sites: usize, cut: usize) -> f64 {
    let a = 1usize << cut;
    let b = 1usize << (sites - cut);
    let rho = Mat::<Complex64>::from_fn(a, a, |i, k| {
        (0..b).map(|r| v[i | r << cut] * v[k | r << cut].conj()).sum()
    });
    let evd = rho.self_adjoint_eigen(Side::Lower).unwrap();
    let s = evd.S().column_vector();
    (0..a)
        .map(|k| s[k].re)
        .filter(|&p| p > 1e-15)
        .map(|p| -p * p.ln())
        .sum()
}

/// Dense matrix of a Pauli sum, acting one site at a time on basis states.
pub fn pauli_sum_matrix(sum: &prethermal::PauliTermSum) -> Mat<Complex64> {
    use prethermal::Pauli;
    let dim = sum.dim();
    let mut m = Mat::<Complex64>::zeros(dim, dim);
    for s in 0..dim {
        for (coef, string) in sum.terms() {
            let mut target = s;
            let mut amp = c(*coef, 0.0);
            for (site, op) in string.ops() {
                match op {
                    Pauli::X => target ^= 1 << site,
                    Pauli::Y => {
                        amp *= c(0.0, z(s, site));
                        target ^= 1 << site;
                    }
                    Pauli::Z => amp *= z(s, site),
                }
            }
            m[(target, s)] += amp;
        }
    }
    m
}

pub fn commutator(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Mat<Complex64> {
    a * b - b * a
}
