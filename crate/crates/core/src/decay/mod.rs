//! Functional calculus of the per-mode operator `G = c²T + V`: wave
//! propagators, spectral cutoffs, Stone's formula and decay curves.
//!
//! Vectors live in `ũ` coordinates. The eigendecomposition is taken on the
//! symmetric representative `M = CTC + V`, so `f(G) = C·Q f(Λ) Qᵀ·C⁻¹` and the
//! `c⁻²`-weighted norm of `ũ` is the plain norm of `C⁻¹ũ`. Discrete norms carry
//! the grid spacing: `‖x‖² = Σ|x_j|²Δ`.

mod fit;
mod stone;
mod sweep;

pub use fit::{fit_decay, DecayCurve, DecayFit, DecayModel};
pub use stone::{frequency_gap, mollifier_factor, stone_propagator, StoneParams, StoneReport};
pub use sweep::{
    cutoff_level, cutoff_norm_sweep, evolve_wave, frequency_split, CausalWindow, CutoffSweep, FrequencySplit,
    WaveEvolution, WaveState,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::resolvent::DiscreteOperator;

/// Largest grid accepted by the dense eigensolver.
pub const SPECTRAL_LIMIT: usize = 800;

/// Spectral multiplier of a propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    /// `λ^m cos(t√λ)`.
    Cos,
    /// `λ^{m−1/2} sin(t√λ)`, equal to `t·λ^m` at `λ = 0`.
    Sinc,
    /// `λ^m e^{it√λ}`.
    Exp,
}

impl PropagatorKind {
    pub fn multiplier(self, t: f64, m: f64, lambda: f64) -> Complex64 {
        let w = lambda.max(0.0).sqrt();
        let power = if m == 0.0 { 1.0 } else { lambda.max(0.0).powf(m) };
        match self {
            PropagatorKind::Cos => Complex64::new(power * (t * w).cos(), 0.0),
            PropagatorKind::Sinc => {
                let s = if (t * w).abs() < 1e-8 { t } else { (t * w).sin() / w };
                Complex64::new(power * s, 0.0)
            }
            PropagatorKind::Exp => Complex64::from_polar(power, t * w),
        }
    }
}

/// Eigendecomposition of `M`, ascending, with the similarity back to `ũ`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `M` as columns.
    pub vectors: DMatrix<f64>,
    /// Wavespeed at the nodes; `ũ = C·v`.
    pub back: Vec<f64>,
    pub operator: DiscreteOperator,
    /// `‖M‖_∞`.
    pub matrix_norm: f64,
}

/// Full symmetric eigendecomposition of the mode operator.
pub fn spectral_decompose(op: &DiscreteOperator) -> Result<SpectralData> {
    let n = op.len();
    if n == 0 || n > SPECTRAL_LIMIT {
        return Err(Error::Domain(format!("{n} grid points; the dense eigensolver takes 1..={SPECTRAL_LIMIT}")));
    }
    let sym = op.symmetric();
    let norm = sym.norm_inf();
    let dense = sym.to_dense();
    let eig = SymmetricEigen::try_new(dense.clone(), f64::EPSILON, 100 * n).ok_or_else(|| {
        let (lo, hi) = sym.gershgorin();
        Error::Convergence(format!("eigensolver failed; ‖M‖ = {norm:.3e}, Gershgorin [{lo:.3e}, {hi:.3e}]"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
        eigenvalues.push(eig.eigenvalues[i]);
    }

    let residual = (&dense * &vectors - &vectors * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues.clone())))
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let gram = vectors.transpose() * &vectors - DMatrix::<f64>::identity(n, n);
    let orth = gram.amax();
    if residual > 1e-8 * norm || orth > 1e-10 {
        return Err(Error::Convergence(format!(
            "eigenpairs inaccurate: residual {residual:.3e} (‖M‖ = {norm:.3e}), orthogonality defect {orth:.3e}"
        )));
    }
    if eigenvalues[0] < -1e-10 * norm {
        return Err(Error::Domain(format!("operator is not nonnegative: lowest eigenvalue {:.6e}", eigenvalues[0])));
    }
    eigenvalues.iter_mut().for_each(|l| *l = l.max(0.0));
    Ok(SpectralData { eigenvalues, vectors, back: op.c.clone(), operator: op.clone(), matrix_norm: norm })
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.operator.grid.spacing()
    }

    /// Number of eigenvalues in `[0, a_sq]`.
    pub fn count_up_to(&self, a_sq: f64) -> usize {
        self.eigenvalues.partition_point(|&l| l <= a_sq)
    }

    /// Coefficients `Qᵀ C⁻¹ x`.
    pub fn coefficients(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let re = DVector::from_iterator(n, x.iter().zip(&self.back).map(|(z, c)| z.re / c));
        let im = DVector::from_iterator(n, x.iter().zip(&self.back).map(|(z, c)| z.im / c));
        let (a, b) = (self.vectors.tr_mul(&re), self.vectors.tr_mul(&im));
        a.iter().zip(b.iter()).map(|(&p, &q)| Complex64::new(p, q)).collect()
    }

    /// `C Q α`.
    pub fn synthesize(&self, alpha: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        let re = &self.vectors * DVector::from_iterator(n, alpha.iter().map(|z| z.re));
        let im = &self.vectors * DVector::from_iterator(n, alpha.iter().map(|z| z.im));
        (0..n).map(|j| Complex64::new(re[j], im[j]) * self.back[j]).collect()
    }

    /// Multipliers `1_{[0,a_sq]}(λ_k) f(λ_k)`.
    pub fn multipliers(&self, kind: PropagatorKind, t: f64, m: f64, a_sq: f64) -> Vec<Complex64> {
        self.eigenvalues
            .iter()
            .map(|&l| if l <= a_sq { kind.multiplier(t, m, l) } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// `1_{[0,a_sq]}(G) f(G) x`.
    pub fn apply(&self, kind: PropagatorKind, t: f64, m: f64, a_sq: f64, x: &[Complex64]) -> Vec<Complex64> {
        let alpha = self.coefficients(x);
        let f = self.multipliers(kind, t, m, a_sq);
        let scaled: Vec<Complex64> = alpha.iter().zip(&f).map(|(a, b)| a * b).collect();
        self.synthesize(&scaled)
    }

    /// Matrix of `1_{[0,a_sq]}(G) f(G)` in `ũ` coordinates.
    pub fn matrix(&self, kind: PropagatorKind, t: f64, m: f64, a_sq: f64) -> DMatrix<Complex64> {
        let n = self.len();
        let f = self.multipliers(kind, t, m, a_sq);
        let scaled = |part: fn(&Complex64) -> f64| {
            let mut qf = self.vectors.clone();
            for (k, mut col) in qf.column_iter_mut().enumerate() {
                col *= part(&f[k]);
            }
            qf * self.vectors.transpose()
        };
        let (re, im) = (scaled(|z| z.re), scaled(|z| z.im));
        DMatrix::from_fn(n, n, |i, j| Complex64::new(re[(i, j)], im[(i, j)]) * (self.back[i] / self.back[j]))
    }

    /// `‖∇u‖² = ⟨Tũ, ũ⟩` for the mode.
    pub fn gradient_energy(&self, x: &[Complex64]) -> f64 {
        let tx = self.operator.kinetic.apply(x);
        self.spacing() * x.iter().zip(&tx).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
    }

    /// `‖x‖²` in the plain discrete `L²`.
    pub fn l2_sq(&self, x: &[Complex64]) -> f64 {
        self.spacing() * x.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// `‖x‖²` in the `c⁻²`-weighted `L²`.
    pub fn l2c_sq(&self, x: &[Complex64]) -> f64 {
        self.spacing() * x.iter().zip(&self.back).map(|(z, c)| z.norm_sqr() / (c * c)).sum::<f64>()
    }

    /// `‖√G x‖²` in the `c⁻²`-weighted `L²`.
    pub fn sqrt_g_sq(&self, x: &[Complex64]) -> f64 {
        let alpha = self.coefficients(x);
        self.spacing() * alpha.iter().zip(&self.eigenvalues).map(|(a, l)| l * a.norm_sqr()).sum::<f64>()
    }

    /// Conserved energy `‖√G u‖²_c + ‖∂_t u‖²_c`.
    pub fn energy(&self, u: &[Complex64], ut: &[Complex64]) -> f64 {
        self.sqrt_g_sq(u) + self.l2c_sq(ut)
    }

    pub fn c_max(&self) -> f64 {
        self.back.iter().copied().fold(0.0, f64::max)
    }
}

/// `1_{[0,a_sq]}(G) f(G) x`; `a_sq = ∞` disables the cutoff.
pub fn apply_propagator(
    spec: &SpectralData,
    kind: PropagatorKind,
    t: f64,
    m: f64,
    a_sq: f64,
    x: &[Complex64],
) -> Vec<Complex64> {
    spec.apply(kind, t, m, a_sq, x)
}
