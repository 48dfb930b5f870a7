use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::resolvent::DiscreteOperator;

/// Quadrature panels per unit of `ε` and nodes per panel.
const PANELS_PER_EPS: f64 = 4.0;
const NODES_PER_PANEL: usize = 4;

/// Inputs of the Stone's-formula propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoneParams {
    pub t: f64,
    /// Distance of the resolvent from the real frequency axis.
    pub eps: f64,
    /// Width of the mollifier applied to the frequency integrand; 0 disables it.
    pub width: f64,
    /// Upper end of the frequency integral.
    pub cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoneReport {
    pub action: Vec<Complex64>,
    /// Smallest spacing between consecutive frequencies `√λ_k` in `[0, cap]`.
    pub gap: f64,
    /// `1 − e^{−ε|t|}`, the relative damping each mode receives.
    pub broadening: f64,
    pub nodes: usize,
}

/// Smallest spacing between consecutive `√λ_k` below `cap` (Sturm bisection).
pub fn frequency_gap(op: &DiscreteOperator, cap: f64) -> f64 {
    let m = op.symmetric();
    let count = m.count_below(cap * cap);
    let freqs: Vec<f64> = (0..count).map(|k| m.eigenvalue(k).max(0.0).sqrt()).collect();
    freqs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// `∫φ(σ) cos(xσ) dσ` for the normalized bump `φ ∝ (1 − σ²)⁴` on `(−1, 1)`.
pub fn mollifier_factor(x: f64) -> f64 {
    let (nodes, weights) = gauss_legendre(40);
    let norm = 256.0 / 315.0;
    nodes.iter().zip(&weights).map(|(s, w)| w * (1.0 - s * s).powi(4) * (x * s).cos()).sum::<f64>() / norm
}

/// Approximates `sin(t√G)/√G x` by
/// `(1/πi)∫₀^cap sin(tλ)[R(λ+iε) − R(λ−iε)]x dλ` with `R(z) = (G − z²)⁻¹`.
/// Each mode `ω < cap` comes out as `e^{−ε|t|} sin(tω)/ω` up to the truncation
/// at `cap`. With a mollifier of width `w`, `sin(tλ)` is replaced by its
/// convolution with `φ_w`, which by Fubini is the same as mollifying the
/// resolvent difference. `ε` must be below a tenth of the frequency gap.
pub fn stone_propagator(op: &DiscreteOperator, params: &StoneParams, x: &[Complex64]) -> Result<StoneReport> {
    let StoneParams { t, eps, width, cap } = *params;
    if !(eps > 0.0) || !(cap > 0.0) || !(width >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("need ε > 0, cap > 0, width ≥ 0; got ε = {eps}, cap = {cap}, width = {width}")));
    }
    if x.len() != op.len() {
        return Err(Error::Domain(format!("vector has {} entries, operator has {}", x.len(), op.len())));
    }
    let m = op.symmetric();
    let gap = frequency_gap(op, cap);
    if eps > 0.1 * gap {
        return Err(Error::Accuracy(format!(
            "ε = {eps:.3e} exceeds a tenth of the frequency gap {gap:.3e}; Lorentzian broadening merges modes"
        )));
    }

    let z: Vec<Complex64> = x.iter().zip(&op.c).map(|(a, c)| a / c).collect();
    let zc: Vec<Complex64> = z.iter().map(|a| a.conj()).collect();
    let damping = if width > 0.0 { mollifier_factor(width * t) } else { 1.0 };
    let panels = (PANELS_PER_EPS * cap / eps).ceil() as usize;
    let h = cap / panels as f64;
    let (gx, gw) = gauss_legendre(NODES_PER_PANEL);
    let n = op.len();
    let zero = || vec![Complex64::new(0.0, 0.0); n];
    // Fixed chunks summed in order keep the result independent of the thread count.
    let chunk = panels.div_ceil(64).max(1);
    let partial = (0..panels.div_ceil(chunk))
        .into_par_iter()
        .map(|c| -> Result<Vec<Complex64>> {
            let mut acc = zero();
            for p in c * chunk..((c + 1) * chunk).min(panels) {
                let mid = (p as f64 + 0.5) * h;
                for (xi, wi) in gx.iter().zip(&gw) {
                    let lambda = mid + 0.5 * h * xi;
                    let shift = Complex64::new(lambda, eps).powi(2);
                    let lu = m.factor(shift)?;
                    let plus = lu.solve(&z);
                    let minus = lu.solve(&zc);
                    let weight = 0.5 * h * wi * (t * lambda).sin() * damping;
                    for j in 0..n {
                        acc[j] += weight * (plus[j] - minus[j].conj());
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sum = zero();
    for part in partial {
        sum.iter_mut().zip(part).for_each(|(x, y)| *x += y);
    }
    let scale = Complex64::new(0.0, -1.0 / PI);
    let action = sum.iter().zip(&op.c).map(|(s, c)| scale * s * c).collect();
    Ok(StoneReport { action, gap, broadening: 1.0 - (-eps * t.abs()).exp(), nodes: panels * NODES_PER_PANEL })
}
