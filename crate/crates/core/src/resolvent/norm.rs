use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seed of the starting vectors of every power iteration.
pub const POWER_SEED: u64 = 0x5eed;
/// Relative change of the estimate at which power iteration stops.
pub const POWER_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 20_000;
/// Largest size for which a dense SVD replaces a stalled power iteration.
pub const DENSE_LIMIT: usize = 600;

pub(crate) type Apply<'a> = dyn Fn(&[Complex64]) -> Vec<Complex64> + Sync + 'a;

pub(crate) fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn random_vector(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

/// Largest singular value of `A` given actions of `A` and `A*`, by power
/// iteration on `A*A`, with a dense SVD fallback for `n ≤ DENSE_LIMIT`.
pub(crate) fn largest_singular_value(n: usize, apply: &Apply, adjoint: &Apply) -> Result<f64> {
    let mut x = random_vector(n, POWER_SEED);
    let nx = norm2(&x);
    x.iter_mut().for_each(|z| *z /= nx);
    let mut previous = 0.0;
    for it in 0..MAX_ITERATIONS {
        let y = apply(&x);
        let sigma = norm2(&y);
        if sigma == 0.0 {
            return Ok(0.0);
        }
        let z = adjoint(&y);
        let nz = norm2(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if it > 2 && (sigma - previous).abs() <= POWER_TOLERANCE * sigma {
            // ‖Ax‖² ≤ ‖A*Ax‖ ≤ σ_max².
            return Ok(sigma.max(nz.sqrt()));
        }
        previous = sigma;
    }
    if n <= DENSE_LIMIT {
        return Ok(dense_singular_values(n, apply)[0]);
    }
    Err(Error::Convergence(format!("power iteration did not converge in {MAX_ITERATIONS} steps")))
}

/// Singular values of `A` (descending) from its columns.
pub(crate) fn dense_singular_values(n: usize, apply: &Apply) -> Vec<f64> {
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        let col = apply(&e);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = Complex64::new(0.0, 0.0);
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}
