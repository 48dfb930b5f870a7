use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::carleman::least_squares_slope;
use crate::error::{Error, Result};
use crate::model::{bracket, MediumSpec, RadialGrid};

use super::norm::{largest_singular_value, norm2, random_vector, POWER_SEED};
use super::{kinetic_matrix, DiscreteOperator, Resolvent, SymTridiag};

fn scale(x: &[Complex64], w: &[f64]) -> Vec<Complex64> {
    x.iter().zip(w).map(|(a, b)| a * b).collect()
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Central differences of the weighted resolvent in λ against `2λW(M − λ²)⁻²W`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub deltas: Vec<f64>,
    /// Worst relative error over the probe vectors, per δ.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log δ`.
    pub order: f64,
    /// Some δ is below `10⁻⁵|λ|`, where rounding dominates the difference quotient.
    pub ill_conditioned: bool,
}

const PROBES: u64 = 3;

/// Compares `(R_s(λ+δ) − R_s(λ−δ))/(2δ)` with `2λ·W_s(M − λ²)⁻²W_s` on fixed
/// random vectors, for each δ.
pub fn resolvent_derivative_check(
    op: &DiscreteOperator,
    lambda: Complex64,
    s: f64,
    deltas: &[f64],
) -> Result<DerivativeCheck> {
    if deltas.len() < 2 || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Domain("need at least two positive step sizes".into()));
    }
    let w = op.weights(s);
    let probes: Vec<Vec<Complex64>> = (0..PROBES).map(|k| random_vector(op.len(), POWER_SEED + k)).collect();
    let center = Resolvent::new(op, lambda * lambda)?;
    let exact: Vec<Vec<Complex64>> = probes
        .iter()
        .map(|x| {
            let once = center.solve(&scale(x, &w))?;
            let twice = center.solve(&once)?;
            Ok(twice.iter().zip(&w).map(|(v, wj)| 2.0 * lambda * v * wj).collect())
        })
        .collect::<Result<_>>()?;
    let mut errors = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let plus = Resolvent::new(op, (lambda + delta) * (lambda + delta))?;
        let minus = Resolvent::new(op, (lambda - delta) * (lambda - delta))?;
        let mut worst = 0.0f64;
        for (x, ex) in probes.iter().zip(&exact) {
            let wx = scale(x, &w);
            let fd: Vec<Complex64> = scale(&sub(&plus.solve(&wx)?, &minus.solve(&wx)?), &w)
                .into_iter()
                .map(|v| v / (2.0 * delta))
                .collect();
            worst = worst.max(norm2(&sub(&fd, ex)) / norm2(ex));
        }
        errors.push(worst);
    }
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let ill_conditioned = deltas.iter().any(|d| *d < 1e-5 * lambda.norm());
    Ok(DerivativeCheck { deltas: deltas.to_vec(), errors, order: least_squares_slope(&xs, &ys), ill_conditioned })
}

/// `‖R_s(λ₂) − R_s(λ₁)‖` against `|λ₂ − λ₁|·max‖2λW(M − λ²)⁻²W‖` over sampled
/// points of the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCheck {
    pub difference: f64,
    pub bound: f64,
}

fn weighted_apply(w: &[f64], r: &Resolvent, x: &[Complex64]) -> Vec<Complex64> {
    scale(&r.solve_fast(&scale(x, w)), w)
}

pub fn segment_lipschitz_check(
    op: &DiscreteOperator,
    l1: Complex64,
    l2: Complex64,
    s: f64,
    points: usize,
) -> Result<LipschitzCheck> {
    let w = op.weights(s);
    let n = op.len();
    let pair = |l: Complex64| -> Result<(Resolvent, Resolvent)> {
        Ok((Resolvent::new(op, l * l)?, Resolvent::new(op, (l * l).conj())?))
    };
    let (f1, b1) = pair(l1)?;
    let (f2, b2) = pair(l2)?;
    let difference = largest_singular_value(
        n,
        &|x| sub(&weighted_apply(&w, &f2, x), &weighted_apply(&w, &f1, x)),
        &|x| sub(&weighted_apply(&w, &b2, x), &weighted_apply(&w, &b1, x)),
    )?;
    let derivative_norms: Vec<f64> = (0..=points)
        .into_par_iter()
        .map(|k| {
            let l = l1 + (l2 - l1) * (k as f64 / points.max(1) as f64);
            let (f, b) = pair(l)?;
            let twice = |r: &Resolvent, x: &[Complex64]| scale(&r.solve_fast(&r.solve_fast(&scale(x, &w))), &w);
            Ok(2.0 * l.norm() * largest_singular_value(n, &|x| twice(&f, x), &|x| twice(&b, x))?)
        })
        .collect::<Result<_>>()?;
    let max = derivative_norms.into_iter().fold(0.0, f64::max);
    Ok(LipschitzCheck { difference, bound: (l2 - l1).norm() * max })
}

/// Low-frequency Neumann series radius.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannReport {
    /// Largest sampled κ with `‖K(λ)‖ < 1` on the half-circle `|λ| = κ`, `Im λ > 0`.
    pub kappa: f64,
    /// `(|λ|, ‖K(λ)‖)` along the imaginary axis near zero.
    pub small_lambda: Vec<(f64, f64)>,
    /// Fitted exponent of `‖K(λ)‖` in `|λ|` from `small_lambda`.
    pub exponent: f64,
    /// `sup_θ ‖K(κe^{iθ})‖` at the returned κ.
    pub norm_at_kappa: f64,
}

struct NeumannOperator {
    base: SymTridiag,
    /// `⟨r⟩^{s}V_c`.
    left: Vec<f64>,
    /// `⟨r⟩^{−s}`.
    right: Vec<f64>,
}

impl NeumannOperator {
    /// `‖λ²⟨r⟩^{s}V_c(−Δ_ℓ + c⁻²V − λ²)⁻¹⟨r⟩^{−s}‖`.
    fn norm(&self, lambda: Complex64) -> Result<f64> {
        let z = lambda * lambda;
        let forward = Resolvent::from_matrix(self.base.clone(), z)?;
        let backward = Resolvent::from_matrix(self.base.clone(), z.conj())?;
        let apply = |x: &[Complex64]| scale(&forward.solve_fast(&scale(x, &self.right)), &self.left);
        let adjoint = |x: &[Complex64]| scale(&backward.solve_fast(&scale(x, &self.left)), &self.right);
        Ok(z.norm() * largest_singular_value(self.base.len(), &apply, &adjoint)?)
    }

    fn sup_on_circle(&self, kappa: f64, angles: usize) -> Result<f64> {
        let values: Vec<f64> = (0..angles)
            .into_par_iter()
            .map(|k| {
                let theta = std::f64::consts::PI * (k as f64 + 0.5) / angles as f64;
                self.norm(Complex64::from_polar(kappa, theta))
            })
            .collect::<Result<_>>()?;
        Ok(values.into_iter().fold(0.0, f64::max))
    }
}

/// Largest κ ≤ `cap` for which the sampled `‖K(λ)‖` stays below 1 on the
/// half-circle of radius κ, with `K(λ) = λ²⟨r⟩^{2s}V_c·W_s(−Δ_ℓ + c⁻²V − λ²)⁻¹W_s`
/// and `V_c = 1 − c⁻²`. Angles avoid the real axis, where the truncated
/// operator has eigenvalues.
pub fn neumann_radius(
    medium: &MediumSpec,
    grid: &RadialGrid,
    ell: usize,
    s: f64,
    cap: f64,
    angles: usize,
) -> Result<NeumannReport> {
    if !(1.0 < s && 2.0 * s < medium.delta0) {
        return Err(Error::Domain(format!("need 1 < s < delta0/2, got s = {s}, delta0 = {}", medium.delta0)));
    }
    if !(cap > 0.0) || angles == 0 {
        return Err(Error::Domain("cap must be positive and at least one angle sampled".into()));
    }
    let nodes = grid.nodes();
    let mut base = kinetic_matrix(grid, ell, medium.dimension);
    for (d, &r) in base.diag.iter_mut().zip(&nodes) {
        *d += medium.v(r) / medium.c(r).powi(2);
    }
    let k_op = NeumannOperator {
        base,
        left: nodes.iter().map(|&r| bracket(r).powf(s) * (1.0 - medium.c(r).powi(-2))).collect(),
        right: nodes.iter().map(|&r| bracket(r).powf(-s)).collect(),
    };
    let small: Vec<(f64, f64)> = (0..=8)
        .map(|k| {
            let t = 1e-3 * 10f64.powf(k as f64 / 4.0);
            Ok((t, k_op.norm(Complex64::new(0.0, t))?))
        })
        .collect::<Result<_>>()?;
    let exponent = if small.iter().all(|(_, v)| *v > 0.0) {
        let xs: Vec<f64> = small.iter().map(|(t, _)| t.ln()).collect();
        let ys: Vec<f64> = small.iter().map(|(_, v)| v.ln()).collect();
        least_squares_slope(&xs, &ys)
    } else {
        f64::NAN
    };

    let at_cap = k_op.sup_on_circle(cap, angles)?;
    if at_cap < 1.0 {
        return Ok(NeumannReport { kappa: cap, small_lambda: small, exponent, norm_at_kappa: at_cap });
    }
    let floor = cap * 1e-6;
    let at_floor = k_op.sup_on_circle(floor, angles)?;
    if at_floor >= 1.0 {
        return Ok(NeumannReport { kappa: 0.0, small_lambda: small, exponent, norm_at_kappa: at_floor });
    }
    let (mut lo, mut hi, mut lo_norm) = (floor, cap, at_floor);
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        let v = k_op.sup_on_circle(mid, angles)?;
        if v < 1.0 {
            lo = mid;
            lo_norm = v;
        } else {
            hi = mid;
        }
        if hi / lo < 1.0 + 1e-6 {
            break;
        }
    }
    Ok(NeumannReport { kappa: lo, small_lambda: small, exponent, norm_at_kappa: lo_norm })
}

/// Largest grid for the dense Fredholm check.
const FREDHOLM_LIMIT: usize = 1500;

/// `σ_min(I + K(0))` for `n = 3`, mode 0, with
/// `K(0) = V⟨r⟩^{s+s′}·W_{s′}(−Δ)⁻¹W_s = V⟨r⟩^{s}(−Δ)⁻¹⟨r⟩^{−s}` as a dense matrix.
pub fn fredholm_check(grid: &RadialGrid, potential: &dyn Fn(f64) -> f64, s: f64, s_prime: f64) -> Result<f64> {
    if !(0.5 < s_prime && s_prime < s && s + s_prime > 2.0) {
        return Err(Error::Domain(format!("need 1/2 < s' < s and s + s' > 2, got s = {s}, s' = {s_prime}")));
    }
    let n = grid.len();
    if n > FREDHOLM_LIMIT {
        return Err(Error::Domain(format!("grid of {n} nodes exceeds the dense limit {FREDHOLM_LIMIT}")));
    }
    let nodes = grid.nodes();
    let lu = Resolvent::from_matrix(kinetic_matrix(grid, 0, 3), Complex64::new(0.0, 0.0))?;
    let left: Vec<f64> = nodes.iter().map(|&r| potential(r) * bracket(r).powf(s)).collect();
    let right: Vec<f64> = nodes.iter().map(|&r| bracket(r).powf(-s)).collect();
    let columns: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(right[j], 0.0);
            lu.solve(&e)
        })
        .collect::<Result<_>>()?;
    let mut m = DMatrix::<f64>::identity(n, n);
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            m[(i, j)] += left[i] * col[i].re;
        }
    }
    Ok(m.singular_values().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Weighted resolvent norms along `[λ₀, Λ] + iε` and Lipschitz quotients of
/// adjacent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSweep {
    pub lambdas: Vec<Complex64>,
    pub norms: Vec<f64>,
    /// Smallest LU pivot relative to `‖M − λ²‖`, per sample.
    pub pivot_ratios: Vec<f64>,
    /// `‖R_s(λ_{k+1}) − R_s(λ_k)‖/|λ_{k+1} − λ_k|`.
    pub quotients: Vec<f64>,
    pub eps: f64,
    /// Max quotient of this sweep over the max quotient with the sample spacing halved.
    pub refinement_ratio: f64,
    /// `refinement_ratio ∈ [1/2, 2]`.
    pub stable: bool,
}

impl ResolventSweep {
    pub fn max_quotient(&self) -> f64 {
        self.quotients.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `lambda_re,lambda_im,weighted_norm,lipschitz_quotient,h,eps`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_re,lambda_im,weighted_norm,lipschitz_quotient,h,eps\n");
        for (k, l) in self.lambdas.iter().enumerate() {
            let q = self.quotients.get(k).map(|q| q.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{},{},{}\n", l.re, l.im, self.norms[k], q, 1.0 / l.re.abs(), self.eps));
        }
        out
    }
}

struct SweepData {
    norms: Vec<f64>,
    pivots: Vec<f64>,
    quotients: Vec<f64>,
}

fn sweep_once(op: &DiscreteOperator, lambdas: &[Complex64], s: f64) -> Result<SweepData> {
    let w = op.weights(s);
    let n = op.len();
    let factors: Vec<(Resolvent, Resolvent)> = lambdas
        .par_iter()
        .map(|l| Ok((Resolvent::new(op, l * l)?, Resolvent::new(op, (l * l).conj())?)))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = factors
        .par_iter()
        .map(|(f, b)| largest_singular_value(n, &|x| weighted_apply(&w, f, x), &|x| weighted_apply(&w, b, x)))
        .collect::<Result<_>>()?;
    let quotients: Vec<f64> = (0..lambdas.len().saturating_sub(1))
        .into_par_iter()
        .map(|k| {
            let ((f1, b1), (f2, b2)) = (&factors[k], &factors[k + 1]);
            let diff = largest_singular_value(
                n,
                &|x| sub(&weighted_apply(&w, f2, x), &weighted_apply(&w, f1, x)),
                &|x| sub(&weighted_apply(&w, b2, x), &weighted_apply(&w, b1, x)),
            )?;
            Ok(diff / (lambdas[k + 1] - lambdas[k]).norm())
        })
        .collect::<Result<_>>()?;
    Ok(SweepData { norms, pivots: factors.iter().map(|(f, _)| f.pivot_ratio()).collect(), quotients })
}

/// Sweeps `samples` equally spaced frequencies on `[λ₀, Λ] + iε` and repeats with
/// `2·samples − 1` to judge the stability of the Lipschitz quotients.
pub fn holder_sweep(
    op: &DiscreteOperator,
    lambda0: f64,
    lambda1: f64,
    eps: f64,
    s: f64,
    samples: usize,
) -> Result<ResolventSweep> {
    if !(lambda0 > 0.0 && lambda1 > lambda0) || samples < 2 || !(eps > 0.0) {
        return Err(Error::Domain("need 0 < λ₀ < Λ, ε > 0 and at least two samples".into()));
    }
    let line = |count: usize| -> Vec<Complex64> {
        (0..count)
            .map(|k| Complex64::new(lambda0 + (lambda1 - lambda0) * k as f64 / (count - 1) as f64, eps))
            .collect()
    };
    let lambdas = line(samples);
    let coarse = sweep_once(op, &lambdas, s)?;
    let fine = sweep_once(op, &line(2 * samples - 1), s)?;
    let max = |q: &[f64]| q.iter().copied().fold(0.0, f64::max);
    let refinement_ratio = max(&coarse.quotients) / max(&fine.quotients);
    Ok(ResolventSweep {
        lambdas,
        norms: coarse.norms,
        pivot_ratios: coarse.pivots,
        quotients: coarse.quotients,
        eps,
        refinement_ratio,
        stable: (0.5..=2.0).contains(&refinement_ratio),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Potential, Wavespeed};
    use crate::resolvent::assemble_mode_operator;

    fn flat(r_max: f64, n: usize) -> DiscreteOperator {
        assemble_mode_operator(&MediumSpec::flat(3), 0, &RadialGrid::new(r_max, n).unwrap()).unwrap()
    }

    #[test]
    fn derivative_converges_at_second_order() {
        let op = flat(8.0, 300);
        let chk = resolvent_derivative_check(&op, Complex64::new(2.0, 0.2), 0.75, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(chk.order >= 1.9 && chk.order < 2.2, "{chk:?}");
        assert!(!chk.ill_conditioned);
        let tiny = resolvent_derivative_check(&op, Complex64::new(2.0, 0.2), 0.75, &[1e-6, 5e-7]).unwrap();
        assert!(tiny.ill_conditioned);
    }

    #[test]
    fn scalar_derivative_identity() {
        // One unknown: d/dλ (m − λ²)⁻¹ = 2λ(m − λ²)⁻².
        let op = flat(1.0, 1);
        let l = Complex64::new(1.3, 0.4);
        let chk = resolvent_derivative_check(&op, l, 0.0, &[1e-3, 5e-4]).unwrap();
        assert!(chk.errors.iter().all(|e| *e < 1e-5));
    }

    #[test]
    fn lipschitz_bound_holds() {
        let op = flat(8.0, 200);
        let chk = segment_lipschitz_check(&op, Complex64::new(1.5, 0.3), Complex64::new(1.8, 0.25), 0.75, 16).unwrap();
        assert!(chk.difference <= chk.bound * (1.0 + 1e-6), "{chk:?}");
    }

    #[test]
    fn neumann_radius_flat_is_cap() {
        let grid = RadialGrid::new(10.0, 200).unwrap();
        let rep = neumann_radius(&MediumSpec::flat(3), &grid, 0, 1.5, 2.0, 6).unwrap();
        assert_eq!(rep.kappa, 2.0);
        assert_eq!(rep.norm_at_kappa, 0.0);
    }

    #[test]
    fn neumann_radius_bump() {
        let medium = MediumSpec { wavespeed: Wavespeed::SmoothBump { amplitude: 0.3, radius: 2.0 }, ..MediumSpec::flat(3) };
        let grid = RadialGrid::new(10.0, 300).unwrap();
        let rep = neumann_radius(&medium, &grid, 0, 1.5, 4.0, 6).unwrap();
        assert!(rep.kappa > 0.0);
        assert!((rep.exponent - 2.0).abs() < 0.2, "{rep:?}");
        assert!(neumann_radius(&medium, &grid, 0, 0.9, 4.0, 6).is_err());
    }

    #[test]
    fn fredholm_examples() {
        let grid = RadialGrid::new(20.0, 400).unwrap();
        assert_eq!(fredholm_check(&grid, &|_| 0.0, 1.2, 0.9).unwrap(), 1.0);
        let p = Potential::Bracket { amplitude: 1.0, rho: 4.0 };
        let mut previous = None;
        for tau in [0.0, 2.5, 5.0, 7.5, 10.0] {
            let sigma = fredholm_check(&grid, &|r| tau * p.eval(r), 1.2, 0.9).unwrap();
            assert!(sigma > 0.0);
            if let Some(prev) = previous {
                let prev: f64 = prev;
                assert!((sigma - prev).abs() < 0.5);
            }
            previous = Some(sigma);
        }
        assert!(fredholm_check(&grid, &|_| 0.0, 1.2, 0.7).is_err());
    }

    #[test]
    fn flat_holder_sweep_is_stable() {
        let op = flat(10.0, 200);
        let sweep = holder_sweep(&op, 1.0, 3.0, 1e-3, 1.0, 41).unwrap();
        assert!(sweep.quotients.iter().all(|q| q.is_finite()));
        assert!(sweep.norms.iter().all(|v| *v >= 0.0));
        let csv = sweep.to_csv();
        assert_eq!(csv.lines().count(), 42);
        assert!(csv.starts_with("lambda_re,lambda_im,weighted_norm,lipschitz_quotient,h,eps"));
    }
}
