//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the k
//! lowest eigenvalues, inverse iteration with a partially pivoted tridiagonal
//! LU for the eigenvectors.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix in banded storage.
#[derive(Debug, Clone)]
pub struct SymmetricTridiagonal {
    pub diagonal: Vec<f64>,
    /// Sub/super-diagonal; length = diagonal.len() - 1.
    pub off_diagonal: Vec<f64>,
}

impl SymmetricTridiagonal {
    pub fn order(&self) -> usize {
        self.diagonal.len()
    }

    /// Gershgorin bounds on the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let n = self.order();
        let mut lo = f64::MAX;
        let mut hi = f64::MIN;
        for i in 0..n {
            let left = if i > 0 { self.off_diagonal[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off_diagonal[i].abs() } else { 0.0 };
            lo = lo.min(self.diagonal[i] - left - right);
            hi = hi.max(self.diagonal[i] + left + right);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `lambda`, by counting negative
    /// pivots of the LDL^T factorization (Sturm sequence).
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let n = self.order();
        if n == 0 {
            return 0;
        }
        let guard = f64::MIN_POSITIVE;
        let mut count = 0;
        let mut q = self.diagonal[0] - lambda;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let q_safe = if q.abs() < guard {
                if q >= 0.0 {
                    guard
                } else {
                    -guard
                }
            } else {
                q
            };
            let e = self.off_diagonal[i - 1];
            q = (self.diagonal[i] - lambda) - e * e / q_safe;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The k lowest eigenvalues, ascending, each found by bisection on the
    /// Sturm count. Exact to a few ulps for well-separated eigenvalues.
    pub fn lowest_eigenvalues(&self, k: usize) -> Vec<f64> {
        let n = self.order();
        let k = k.min(n);
        let (glo, ghi) = self.spectral_bounds();
        let pad = 1e-3 * (ghi - glo).abs().max(1.0);
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let mut lo = glo - pad;
            let mut hi = ghi + pad;
            for _ in 0..160 {
                let mid = 0.5 * (lo + hi);
                if hi - lo <= 2.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
                    break;
                }
                if self.sturm_count(mid) <= j {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        out
    }

    /// y = A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diagonal[i] * x[i];
            if i > 0 {
                v += self.off_diagonal[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off_diagonal[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Eigenvector for the (converged) eigenvalue estimate `sigma` by inverse
    /// iteration. Returns the normalized vector, the Rayleigh-quotient
    /// refinement of the eigenvalue, and the 2-norm residual ||A x - E x||.
    pub fn inverse_iteration(
        &self,
        sigma: f64,
        state: usize,
        deflate: &[Vec<f64>],
    ) -> Result<(Vec<f64>, f64, f64)> {
        let n = self.order();
        let lu = ShiftedLu::factor(self, sigma);
        let mut x = vec![1.0; n];
        normalize(&mut x);
        let mut energy = sigma;
        let mut residual = f64::MAX;
        const MAX_ITER: usize = 30;
        for iter in 0..MAX_ITER {
            let mut y = lu.solve(&x);
            for d in deflate {
                let dot: f64 = y.iter().zip(d).map(|(a, b)| a * b).sum();
                for (yi, di) in y.iter_mut().zip(d) {
                    *yi -= dot * di;
                }
            }
            if !normalize(&mut y) {
                // solve collapsed onto the deflated subspace; reseed
                x.iter_mut().enumerate().for_each(|(i, v)| {
                    *v = if i % 2 == 0 { 1.0 } else { -0.5 } + (i as f64 * 1e-3).sin()
                });
                normalize(&mut x);
                continue;
            }
            x = y;
            let ax = self.apply(&x);
            let rq: f64 = ax.iter().zip(&x).map(|(a, b)| a * b).sum();
            residual = ax
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - rq * b) * (a - rq * b))
                .sum::<f64>()
                .sqrt();
            energy = rq;
            let scale = self
                .diagonal
                .iter()
                .map(|d| d.abs())
                .fold(0.0_f64, f64::max)
                .max(1.0);
            if residual <= 1e-13 * scale || (iter >= 2 && residual <= 1e-10) {
                return Ok((x, energy, residual));
            }
        }
        if residual <= 1e-10 {
            return Ok((x, energy, residual));
        }
        Err(Error::Convergence {
            state,
            residual,
            iterations: MAX_ITER,
        })
    }
}

fn normalize(x: &mut [f64]) -> bool {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    for v in x.iter_mut() {
        *v /= norm;
    }
    true
}

/// LU factorization of (A - sigma I) with partial pivoting; tridiagonal input
/// gains one extra superdiagonal (the usual gttrf layout).
struct ShiftedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper1: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(a: &SymmetricTridiagonal, sigma: f64) -> ShiftedLu {
        let n = a.order();
        let mut d: Vec<f64> = a.diagonal.iter().map(|v| v - sigma).collect();
        let mut dl = a.off_diagonal.clone();
        let mut du = a.off_diagonal.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut lower = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::MIN_POSITIVE
            * a.diagonal
                .iter()
                .map(|v| v.abs())
                .fold(1.0_f64, f64::max);
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                // no row interchange
                let piv = if d[i] != 0.0 { d[i] } else { tiny };
                let m = dl[i] / piv;
                lower[i] = m;
                d[i + 1] -= m * du[i];
                if i + 2 < n {
                    du2[i] = 0.0;
                }
            } else {
                // interchange rows i and i+1
                swapped[i] = true;
                let m = d[i] / dl[i];
                lower[i] = m;
                let tmp_d = du[i];
                d[i] = dl[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp_d - m * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -m * du2[i];
                }
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        ShiftedLu {
            lower,
            diag: d,
            upper1: du,
            upper2: du2,
            swapped,
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut x = b.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            let m = self.lower[i];
            x[i + 1] -= m * x[i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            if i + 1 < n {
                v -= self.upper1[i] * x[i + 1];
            }
            if i + 2 < n {
                v -= self.upper2[i] * x[i + 2];
            }
            x[i] = v / self.diag[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sturm_count_two_by_two() {
        // [[1, -1], [-1, 3]] has eigenvalues 2 -+ sqrt(2)
        let a = SymmetricTridiagonal {
            diagonal: vec![1.0, 3.0],
            off_diagonal: vec![-1.0],
        };
        assert_eq!(a.sturm_count(0.0), 0);
        assert_eq!(a.sturm_count(1.0), 1);
        assert_eq!(a.sturm_count(4.0), 2);
    }

    #[test]
    fn tight_binding_chain_eigenvalues() {
        // d = 0, e = -1: eigenvalues 2 cos(k pi/(N+1)) - lowest is most negative
        let n = 50;
        let a = SymmetricTridiagonal {
            diagonal: vec![0.0; n],
            off_diagonal: vec![-1.0; n - 1],
        };
        let vals = a.lowest_eigenvalues(5);
        for (j, v) in vals.iter().enumerate() {
            let exact =
                -2.0 * ((n - j) as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((v - exact).abs() < 1e-12, "j={j}: {v} vs {exact}");
        }
        assert!(vals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn inverse_iteration_residual_and_vector() {
        let n = 200;
        let h = 1.0 / (n as f64 + 1.0);
        let a = SymmetricTridiagonal {
            diagonal: vec![2.0 / (h * h); n],
            off_diagonal: vec![-1.0 / (h * h); n - 1],
        };
        let vals = a.lowest_eigenvalues(2);
        let (v0, e0, r0) = a.inverse_iteration(vals[0], 0, &[]).unwrap();
        assert!(r0 <= 1e-10 * (2.0 / (h * h)));
        assert!((e0 - vals[0]).abs() < 1e-9 * vals[0]);
        // ground state of the chain has no sign change
        let flips = v0.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(flips, 0);
        let (v1, ..) = a.inverse_iteration(vals[1], 1, &[v0.clone()]).unwrap();
        let flips = v1.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        assert_eq!(flips, 1);
    }
}
