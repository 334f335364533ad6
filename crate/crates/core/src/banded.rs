//! Banded LU without pivoting for the shifted systems `W + c K` that appear in
//! the implicit time step and in the elliptic solves.
//!
//! `W` is the positive diagonal of quadrature weights and `K` the symmetric
//! positive semidefinite Dirichlet form, so for `Re c >= 0` the matrix has a
//! positive definite real part and elimination without pivoting is stable.

use num_complex::Complex64;

use crate::error::{NlsError, Result};
use crate::radial::SymmetricBand;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    // row-major, 2*bw + 1 entries per row, column offset j - i + bw
    lu: Vec<Complex64>,
}

impl BandedLu {
    /// Factors `diag(d) + c K`.
    pub fn factor_shifted(diag: &[f64], c: Complex64, k: &SymmetricBand) -> Result<Self> {
        let n = k.n();
        if diag.len() != n {
            return Err(NlsError::SolverFailure("diagonal length mismatch".into()));
        }
        let bw = k.bandwidth();
        let width = 2 * bw + 1;
        let mut lu = vec![Complex64::new(0.0, 0.0); n * width];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let hi = (i + bw).min(n - 1);
            for j in lo..=hi {
                lu[i * width + (j + bw - i)] = c * k.get(i, j);
            }
            lu[i * width + bw] += diag[i];
        }
        for p in 0..n {
            let pivot = lu[p * width + bw];
            if !(pivot.norm() > 0.0) || !pivot.re.is_finite() {
                return Err(NlsError::SolverFailure(format!("zero pivot at row {p}")));
            }
            let last = (p + bw).min(n - 1);
            for i in p + 1..=last {
                let l = lu[i * width + (p + bw - i)] / pivot;
                lu[i * width + (p + bw - i)] = l;
                for j in p + 1..=last {
                    let upper = lu[p * width + (j + bw - p)];
                    lu[i * width + (j + bw - i)] -= l * upper;
                }
            }
        }
        Ok(Self { n, bw, lu })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        let (n, bw) = (self.n, self.bw);
        let width = 2 * bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut acc = x[i];
            for j in lo..i {
                acc -= self.lu[i * width + (j + bw - i)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut acc = x[i];
            for j in i + 1..=hi {
                acc -= self.lu[i * width + (j + bw - i)] * x[j];
            }
            x[i] = acc / self.lu[i * width + bw];
        }
    }
}
