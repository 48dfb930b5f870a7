use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pivot size below which a shifted system is reported singular.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[j]` couples rows `j` and `j + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length must be n - 1");
        SymTridiag { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `A·x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut acc = self.diag[j] * x[j];
                if j > 0 {
                    acc += self.off[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    acc += self.off[j] * x[j + 1];
                }
                acc
            })
            .collect()
    }

    pub fn apply_real(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut acc = self.diag[j] * x[j];
                if j > 0 {
                    acc += self.off[j - 1] * x[j - 1];
                }
                if j + 1 < n {
                    acc += self.off[j] * x[j + 1];
                }
                acc
            })
            .collect()
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|j| {
                let mut s = self.diag[j].abs();
                if j > 0 {
                    s += self.off[j - 1].abs();
                }
                if j + 1 < n {
                    s += self.off[j].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = self.diag[j];
            if j + 1 < n {
                m[(j, j + 1)] = self.off[j];
                m[(j + 1, j)] = self.off[j];
            }
        }
        m
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        let tiny = f64::MIN_POSITIVE.sqrt() * self.norm_inf().max(1.0);
        for j in 0..self.len() {
            let coupling = if j > 0 { self.off[j - 1] * self.off[j - 1] / q } else { 0.0 };
            q = self.diag[j] - x - coupling;
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..n {
            let mut rad = 0.0;
            if j > 0 {
                rad += self.off[j - 1].abs();
            }
            if j + 1 < n {
                rad += self.off[j].abs();
            }
            lo = lo.min(self.diag[j] - rad);
            hi = hi.max(self.diag[j] + rad);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (from 0) by bisection.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        assert!(k < self.len(), "eigenvalue index out of range");
        let (mut lo, mut hi) = self.gershgorin();
        let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvalue closest to `x`.
    pub fn nearest_eigenvalue(&self, x: f64) -> f64 {
        let k = self.count_below(x);
        let mut best = f64::NAN;
        for idx in [k.wrapping_sub(1), k] {
            if idx < self.len() {
                let e = self.eigenvalue(idx);
                if best.is_nan() || (e - x).abs() < (best - x).abs() {
                    best = e;
                }
            }
        }
        best
    }

    /// LU factorization of `A − shift·I` with partial pivoting. Fails when a
    /// pivot drops below `PIVOT_TOLERANCE·‖A‖`, or when a real shift lies within
    /// `10³·PIVOT_TOLERANCE·‖A‖` of an eigenvalue.
    pub fn factor(&self, shift: Complex64) -> Result<ShiftedLu> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Domain("empty matrix".into()));
        }
        let norm = self.norm_inf().max(shift.norm());
        let floor = PIVOT_TOLERANCE * norm;
        let singular = |pivot: f64| Error::Singular { pivot, nearest_eigenvalue: self.nearest_eigenvalue(shift.re) };
        if shift.im.abs() < 1e3 * floor {
            let nearest = self.nearest_eigenvalue(shift.re);
            if (shift - nearest).norm() < 1e3 * floor {
                return Err(Error::Singular { pivot: (shift - nearest).norm(), nearest_eigenvalue: nearest });
            }
        }
        let mut d: Vec<Complex64> = self.diag.iter().map(|&x| x - shift).collect();
        let mut dl: Vec<Complex64> = self.off.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut du = dl.clone();
        let mut du2 = vec![Complex64::new(0.0, 0.0); n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].norm() >= dl[i].norm() {
                if d[i].norm() > 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        let min_pivot = d.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min);
        if !(min_pivot >= floor) {
            return Err(singular(min_pivot));
        }
        Ok(ShiftedLu { d, dl, du, du2, swapped, min_pivot, norm })
    }
}

/// LU factors of a shifted tridiagonal matrix (LAPACK `gttrf` layout).
#[derive(Debug, Clone)]
pub struct ShiftedLu {
    d: Vec<Complex64>,
    dl: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swapped: Vec<bool>,
    min_pivot: f64,
    norm: f64,
}

impl ShiftedLu {
    /// Smallest pivot relative to the matrix norm.
    pub fn pivot_ratio(&self) -> f64 {
        self.min_pivot / self.norm
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.d.len();
        let mut b = rhs.to_vec();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                let bi = b[i];
                b[i + 1] -= self.dl[i] * bi;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> SymTridiag {
        SymTridiag::new(
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            (0..n - 1).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        )
    }

    #[test]
    fn solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 3, 7, 40] {
            let a = random_matrix(&mut rng, n.max(1));
            let shift = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.1..1.0));
            let rhs: Vec<Complex64> =
                (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let x = a.factor(shift).unwrap().solve(&rhs);
            let back = a.apply(&x);
            for j in 0..n {
                assert!((back[j] - shift * x[j] - rhs[j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = SymTridiag::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0]);
        let lu = a.factor(Complex64::new(0.0, 0.5)).unwrap();
        let rhs = vec![Complex64::new(1.0, 0.0); 3];
        let x = lu.solve(&rhs);
        let back = a.apply(&x);
        for j in 0..3 {
            assert!((back[j] - Complex64::new(0.0, 0.5) * x[j] - rhs[j]).norm() < 1e-14);
        }
    }

    #[test]
    fn sturm_eigenvalues_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 30);
        let mut dense: Vec<f64> = SymmetricEigen::new(a.to_dense()).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (k, e) in dense.iter().enumerate() {
            assert!((a.eigenvalue(k) - e).abs() < 1e-12, "k = {k}");
        }
        assert_eq!(a.count_below(dense[10] + 1e-9), 11);
        assert!((a.nearest_eigenvalue(dense[5] + 1e-6) - dense[5]).abs() < 1e-12);
    }

    #[test]
    fn near_eigenvalue_shift_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 50);
        let e = a.eigenvalue(20);
        match a.factor(Complex64::new(e + 1e-12, 0.0)) {
            Err(Error::Singular { nearest_eigenvalue, .. }) => assert!((nearest_eigenvalue - e).abs() < 1e-12),
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
