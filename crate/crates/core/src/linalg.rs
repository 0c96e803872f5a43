//! Small dense vector kernels shared by the propagators and observables.

use num_complex::Complex64;

/// A Hermitian linear map acting on complex amplitude vectors of fixed length.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// Overwrites `out` with the action of the operator on `input`.
    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]);

    fn apply_vec(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); input.len()];
        self.apply_into(input, &mut out);
        out
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) {
        (**self).apply_into(input, out)
    }
}

/// `<a|b>` with the first argument conjugated.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    // Independent accumulators so the reduction vectorizes.
    let mut re = [0.0f64; LANES];
    let mut im = [0.0f64; LANES];
    let (ha, ta) = a.split_at(a.len() - a.len() % LANES);
    let (hb, tb) = b.split_at(ha.len());
    for (xs, ys) in ha.chunks_exact(LANES).zip(hb.chunks_exact(LANES)) {
        for k in 0..LANES {
            re[k] += xs[k].re * ys[k].re + xs[k].im * ys[k].im;
            im[k] += xs[k].re * ys[k].im - xs[k].im * ys[k].re;
        }
    }
    for (x, y) in ta.iter().zip(tb) {
        re[0] += x.re * y.re + x.im * y.im;
        im[0] += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re.iter().sum(), im.iter().sum())
}

const LANES: usize = 4;

pub fn norm(a: &[Complex64]) -> f64 {
    let mut acc = [0.0f64; LANES];
    let (head, tail) = a.split_at(a.len() - a.len() % LANES);
    for xs in head.chunks_exact(LANES) {
        for k in 0..LANES {
            acc[k] += xs[k].norm_sqr();
        }
    }
    (acc.iter().sum::<f64>() + tail.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: Complex64, x: &mut [Complex64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Euclidean distance between two vectors.
pub fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
