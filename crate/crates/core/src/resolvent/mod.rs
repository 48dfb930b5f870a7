//! Per-mode finite-difference operators for `G = −c²Δ + V`, resolvent solves at
//! complex frequency and the weighted resolvent checks built on them.

mod checks;
mod norm;
mod tridiag;

pub use checks::{
    fredholm_check, holder_sweep, neumann_radius, resolvent_derivative_check, segment_lipschitz_check,
    DerivativeCheck, LipschitzCheck, NeumannReport, ResolventSweep,
};
pub use norm::{DENSE_LIMIT, POWER_SEED, POWER_TOLERANCE};
pub use tridiag::{ShiftedLu, SymTridiag, PIVOT_TOLERANCE};

use num_complex::Complex64;

use crate::carleman::mode_eigenvalue;
use crate::error::{Error, Result};
use crate::model::{bracket, MediumSpec, RadialGrid, SemiclassicalParams};

use norm::{largest_singular_value, norm2};

/// `−∂_r² + λ_ℓ/r²` with three-point differences and Dirichlet ends.
pub fn kinetic_matrix(grid: &RadialGrid, ell: usize, n: usize) -> SymTridiag {
    let d = grid.spacing();
    let lambda = mode_eigenvalue(ell, n);
    let diag = grid.nodes().iter().map(|r| 2.0 / (d * d) + lambda / (r * r)).collect();
    let off = vec![-1.0 / (d * d); grid.len() - 1];
    SymTridiag::new(diag, off)
}

/// Mode-`ℓ` discretization of `G` acting on `ũ = r^{(n−1)/2}u`:
/// `c²T + V` with `T = −∂_r² + λ_ℓ/r²`, and its symmetric representative
/// `M = CTC + V` (`C = diag(c)`), similar to it through `ũ = Cv`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub grid: RadialGrid,
    pub ell: usize,
    pub dimension: usize,
    pub kinetic: SymTridiag,
    pub c: Vec<f64>,
    pub v: Vec<f64>,
}

impl DiscreteOperator {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// `M = CTC + V`.
    pub fn symmetric(&self) -> SymTridiag {
        let t = &self.kinetic;
        let diag = (0..self.len()).map(|j| self.c[j] * self.c[j] * t.diag[j] + self.v[j]).collect();
        let off = (0..self.len().saturating_sub(1)).map(|j| self.c[j] * t.off[j] * self.c[j + 1]).collect();
        SymTridiag::new(diag, off)
    }

    /// `⟨r_j⟩^{−s}`.
    pub fn weights(&self, s: f64) -> Vec<f64> {
        self.grid.nodes().iter().map(|&r| bracket(r).powf(-s)).collect()
    }

    /// Rows of `c²T + V − z` as `(sub, diag, super)` (sub/super padded to length N).
    fn unsymmetric_rows(&self, z: Complex64) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let n = self.len();
        let t = &self.kinetic;
        let mut sub = vec![Complex64::new(0.0, 0.0); n];
        let mut sup = vec![Complex64::new(0.0, 0.0); n];
        let mut diag = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let c2 = self.c[j] * self.c[j];
            diag[j] = c2 * t.diag[j] + self.v[j] - z;
            if j > 0 {
                sub[j] = (c2 * t.off[j - 1]).into();
            }
            if j + 1 < n {
                sup[j] = (c2 * t.off[j]).into();
            }
        }
        (sub, diag, sup)
    }
}

/// Assembles the mode-`ℓ` operator of a medium on `grid`.
pub fn assemble_mode_operator(medium: &MediumSpec, ell: usize, grid: &RadialGrid) -> Result<DiscreteOperator> {
    let nodes = grid.nodes();
    let c: Vec<f64> = nodes.iter().map(|&r| medium.c(r)).collect();
    if let Some((r, cv)) = nodes.iter().zip(&c).find(|(_, cv)| !(**cv > 0.0) || !cv.is_finite()) {
        return Err(Error::InvalidMedium(format!("c = {cv} at r = {r}")));
    }
    let v = nodes.iter().map(|&r| medium.v(r)).collect();
    Ok(DiscreteOperator {
        grid: *grid,
        ell,
        dimension: medium.dimension,
        kinetic: kinetic_matrix(grid, ell, medium.dimension),
        c,
        v,
    })
}

/// Diagonals of the rescaled operator `P = h²T + V_L + V_S + iW_L` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiclassicalOperator {
    pub params: SemiclassicalParams,
    pub v_l: Vec<f64>,
    pub v_s: Vec<f64>,
    pub w_l: Vec<f64>,
}

/// `h = |Re λ|⁻¹`, `ε = Im λ`, `V_L = (h²ε² − 1)c⁻²`, `V_S = h²c⁻²V`,
/// `W_L = −2 sgn(Re λ) hε c⁻²` at the grid nodes.
pub fn semiclassical_map(op: &DiscreteOperator, lambda: Complex64) -> Result<SemiclassicalOperator> {
    let params = SemiclassicalParams::from_frequency(lambda)?;
    let (h, eps, sign) = (params.h, params.eps, params.sign);
    let inv2: Vec<f64> = op.c.iter().map(|c| 1.0 / (c * c)).collect();
    Ok(SemiclassicalOperator {
        params,
        v_l: inv2.iter().map(|k| (h * h * eps * eps - 1.0) * k).collect(),
        v_s: inv2.iter().zip(&op.v).map(|(k, v)| h * h * k * v).collect(),
        w_l: inv2.iter().map(|k| -2.0 * sign * h * eps * k).collect(),
    })
}

/// `‖(G − λ²) − h⁻²c²P‖_F / ‖G − λ²‖_F` with both matrices assembled from the
/// same diagonals.
pub fn check_rescale_identity(op: &DiscreteOperator, lambda: Complex64) -> Result<f64> {
    let sc = semiclassical_map(op, lambda)?;
    let h = sc.params.h;
    let (sub, diag, sup) = op.unsymmetric_rows(lambda * lambda);
    let t = &op.kinetic;
    let n = op.len();
    let (mut diff, mut total) = (0.0, 0.0);
    for j in 0..n {
        let scale = op.c[j] * op.c[j] / (h * h);
        let p_diag = h * h * t.diag[j] + Complex64::new(sc.v_l[j] + sc.v_s[j], sc.w_l[j]);
        diff += (diag[j] - scale * p_diag).norm_sqr();
        total += diag[j].norm_sqr();
        if j > 0 {
            diff += (sub[j] - scale * h * h * t.off[j - 1]).norm_sqr();
            total += sub[j].norm_sqr();
        }
        if j + 1 < n {
            diff += (sup[j] - scale * h * h * t.off[j]).norm_sqr();
            total += sup[j].norm_sqr();
        }
    }
    Ok((diff / total).sqrt())
}

/// Factorization of `M − λ²` for repeated solves.
#[derive(Debug, Clone)]
pub struct Resolvent {
    matrix: SymTridiag,
    shift: Complex64,
    lu: ShiftedLu,
}

impl Resolvent {
    pub fn new(op: &DiscreteOperator, lambda_sq: Complex64) -> Result<Self> {
        Self::from_matrix(op.symmetric(), lambda_sq)
    }

    pub fn from_matrix(matrix: SymTridiag, lambda_sq: Complex64) -> Result<Self> {
        let lu = matrix.factor(lambda_sq)?;
        Ok(Resolvent { matrix, shift: lambda_sq, lu })
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn pivot_ratio(&self) -> f64 {
        self.lu.pivot_ratio()
    }

    /// `(M − λ²)⁻¹ rhs` with one step of iterative refinement when the residual
    /// exceeds `10⁻¹⁰‖rhs‖`.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let target = 1e-10 * norm2(rhs);
        let mut u = self.lu.solve(rhs);
        for _ in 0..2 {
            let r = self.residual(&u, rhs);
            if norm2(&r) <= target {
                return Ok(u);
            }
            let du = self.lu.solve(&r);
            u.iter_mut().zip(du).for_each(|(a, b)| *a += b);
        }
        let res = norm2(&self.residual(&u, rhs));
        if res <= target {
            Ok(u)
        } else {
            Err(Error::Accuracy(format!("resolvent residual {res:.3e} exceeds {target:.3e}")))
        }
    }

    fn residual(&self, u: &[Complex64], rhs: &[Complex64]) -> Vec<Complex64> {
        let mu = self.matrix.apply(u);
        rhs.iter().zip(mu).zip(u).map(|((b, m), x)| b - (m - self.shift * x)).collect()
    }

    /// Unrefined solve, for inner loops that only need LU accuracy.
    pub(crate) fn solve_fast(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        self.lu.solve(rhs)
    }
}

/// `(M − λ²)⁻¹ rhs` on the symmetric representative.
pub fn resolvent_solve(op: &DiscreteOperator, lambda_sq: Complex64, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    if rhs.len() != op.len() {
        return Err(Error::Domain(format!("rhs has {} entries, operator has {}", rhs.len(), op.len())));
    }
    Resolvent::new(op, lambda_sq)?.solve(rhs)
}

/// `‖W_s(M − λ²)⁻¹W_s‖` with `W_s = diag(⟨r_j⟩^{−s})`.
pub fn weighted_resolvent_norm(op: &DiscreteOperator, lambda: Complex64, s: f64) -> Result<f64> {
    let z = lambda * lambda;
    let forward = Resolvent::new(op, z)?;
    let backward = Resolvent::new(op, z.conj())?;
    let w = op.weights(s);
    let sandwich = |r: &Resolvent, x: &[Complex64]| {
        let wx: Vec<Complex64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        r.solve_fast(&wx).into_iter().zip(&w).map(|(a, b)| a * b).collect::<Vec<_>>()
    };
    largest_singular_value(op.len(), &|x| sandwich(&forward, x), &|x| sandwich(&backward, x))
}
