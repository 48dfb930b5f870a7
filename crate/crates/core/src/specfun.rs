//! Macdonald functions `K_ν`, the log-subtracted function `A(z) = K₀(z) + log(z/2)`,
//! free-resolvent kernels of `−Δ − λ²` on `ℝⁿ`, and weighted Hilbert–Schmidt norms.
//!
//! Integer orders use the power/log series for `|z| ≤ 2`, Temme's continued
//! fraction for `2 < |z| < 30` and the asymptotic series beyond; half-integer
//! orders use their closed forms. The internal evaluators accept the closed
//! half-plane `Re z ≥ 0` so that sweeps can reach real frequencies.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::bracket;
use crate::quad;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 30.0;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn order_index(nu: f64) -> Result<u32> {
    let twice = 2.0 * nu;
    if twice.fract() == 0.0 && (0.0..=4.0).contains(&twice) {
        Ok(twice as u32)
    } else {
        Err(Error::UnsupportedOrder(nu))
    }
}

/// `K_ν(z)` for `ν ∈ {0, 1/2, 1, 3/2, 2}` and `Re z > 0`.
pub fn macdonald_k(nu: f64, z: Complex64) -> Result<Complex64> {
    let idx = order_index(nu)?;
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("K_nu needs Re z > 0, got z = {z}")));
    }
    Ok(k_closed_half_plane(idx, z))
}

/// `K_{idx/2}(z)` on `Re z ≥ 0`, `z ≠ 0`.
pub(crate) fn k_closed_half_plane(idx: u32, z: Complex64) -> Complex64 {
    match idx {
        1 => k_half(z),
        3 => k_half(z) * (c(1.0) + z.inv()),
        _ => {
            let (k0, k1) = k01(z);
            match idx {
                0 => k0,
                2 => k1,
                _ => k0 + k1 * 2.0 / z,
            }
        }
    }
}

fn k_half(z: Complex64) -> Complex64 {
    (c(PI / 2.0) / z).sqrt() * (-z).exp()
}

/// `(K₀(z), K₁(z))`.
fn k01(z: Complex64) -> (Complex64, Complex64) {
    let r = z.norm();
    if r <= SERIES_RADIUS {
        k01_series(z)
    } else if r < ASYMPTOTIC_RADIUS {
        k01_continued_fraction(z)
    } else {
        (macdonald_asymptotic(0.0, z, None), macdonald_asymptotic(1.0, z, None))
    }
}

/// Power/log series: returns `(K₀, K₁)`.
fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let (a, k1) = a_and_k1_series(z);
    (a - (z / 2.0).ln(), k1)
}

/// Series for `A(z) = K₀(z) + log(z/2)` and `K₁(z)`; no cancellation in `A` near 0.
fn a_and_k1_series(z: Complex64) -> (Complex64, Complex64) {
    let t = z * z / 4.0;
    let log = (z / 2.0).ln();
    // term_k = t^k / (k!)²; harmonic H_k; psi(k+1) = −γ + H_k.
    let mut term = c(1.0);
    let mut harmonic = 0.0;
    let mut i0 = c(0.0);
    let mut a_sum = c(0.0);
    let mut i1 = c(0.0);
    let mut k1_sum = c(0.0);
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            term *= t / (kf * kf);
            harmonic += 1.0 / kf;
        }
        i0 += term;
        a_sum += term * harmonic;
        // t^k / (k!(k+1)!) = term / (k+1)
        let term1 = term / (kf + 1.0);
        i1 += term1;
        let psi_sum = 2.0 * (-EULER_GAMMA + harmonic) + 1.0 / (kf + 1.0);
        k1_sum += term1 * psi_sum;
        if k > 2 && term.norm() < 1e-18 * i0.norm() {
            break;
        }
    }
    let i1 = i1 * z / 2.0;
    let a = log * (c(1.0) - i0) - i0 * EULER_GAMMA + a_sum;
    let k1 = z.inv() + log * i1 - k1_sum * z / 4.0;
    (a, k1)
}

/// Temme's continued fraction (Steed's algorithm) for `(K₀, K₁)`, `|z| ≥ 2`.
fn k01_continued_fraction(z: Complex64) -> (Complex64, Complex64) {
    let a1 = 0.25;
    let mut b = (c(1.0) + z) * 2.0;
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = c(0.0);
    let mut q2 = c(1.0);
    let mut q = c(a1);
    let mut cc = c(a1);
    let mut a = -a1;
    let mut s = c(1.0) + q * delh;
    for i in 2..100_000 {
        a -= 2.0 * (i - 1) as f64;
        cc = -cc * a / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += cc * qnew;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            break;
        }
    }
    let h = h * a1;
    let k0 = (c(PI / 2.0) / z).sqrt() * (-z).exp() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

/// Asymptotic series `(π/2z)^{1/2} e^{−z} Σ_k a_k(ν) z^{−k}`, truncated at
/// `terms` or, when `None`, just before the smallest term.
pub fn macdonald_asymptotic(nu: f64, z: Complex64, terms: Option<usize>) -> Complex64 {
    let mu = 4.0 * nu * nu;
    let mut sum = c(1.0);
    let mut term = c(1.0);
    let cap = terms.unwrap_or(usize::MAX);
    let mut k = 1usize;
    while k < cap {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0) / z;
        if terms.is_none() && (next.norm() >= term.norm() || next.norm() < 1e-18 * sum.norm()) {
            if next.norm() < term.norm() {
                sum += next;
            }
            break;
        }
        term = next;
        sum += term;
        k += 1;
        if term == c(0.0) {
            break;
        }
    }
    (c(PI / 2.0) / z).sqrt() * (-z).exp() * sum
}

/// `A(z) = K₀(z) + log(z/2)` for `Re z > 0`.
pub fn a_function(z: Complex64) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::Domain(format!("A needs Re z > 0, got z = {z}")));
    }
    Ok(a_closed_half_plane(z))
}

/// `A(z)` on `Re z ≥ 0` including the limit `A(0) = −γ`.
pub(crate) fn a_closed_half_plane(z: Complex64) -> Complex64 {
    if z == c(0.0) {
        return c(-EULER_GAMMA);
    }
    if z.norm() <= SERIES_RADIUS {
        a_and_k1_series(z).0
    } else {
        k01(z).0 + (z / 2.0).ln()
    }
}

/// Kernel of `(−Δ − λ²)⁻¹` on `ℝⁿ` at separation `d`, `Im λ > 0`.
pub fn free_resolvent_kernel(n: usize, lambda: Complex64, d: f64) -> Result<Complex64> {
    if !(lambda.im > 0.0) {
        return Err(Error::Domain(format!("direct kernel evaluation needs Im λ > 0, got {lambda}")));
    }
    if !(d > 0.0) {
        return Err(Error::Domain(format!("separation must be positive, got {d}")));
    }
    if !(2..=6).contains(&n) {
        return Err(Error::UnsupportedOrder(n as f64 / 2.0 - 1.0));
    }
    Ok(free_kernel_closed(n, lambda, d))
}

/// Kernel on `Im λ ≥ 0`; `λ = 0` gives the Newtonian kernel for `n ≥ 3`.
pub(crate) fn free_kernel_closed(n: usize, lambda: Complex64, d: f64) -> Complex64 {
    let nu = n as f64 / 2.0 - 1.0;
    if lambda == c(0.0) {
        debug_assert!(n >= 3, "raw kernel at λ = 0 is not defined for n = 2");
        return c(gamma_half(n as u32 - 2) / (4.0 * PI.powf(n as f64 / 2.0) * d.powi(n as i32 - 2)));
    }
    let z = Complex64::new(0.0, -1.0) * lambda * d;
    if n == 3 {
        // K_{1/2} reduces the kernel to e^{iλd}/(4πd); evaluate it without the
        // branch bookkeeping of the general formula.
        return (Complex64::i() * lambda * d).exp() / (4.0 * PI * d);
    }
    let prefactor = (Complex64::new(0.0, -1.0) * lambda / (2.0 * PI * d)).powf(nu);
    prefactor * k_closed_half_plane((2.0 * nu) as u32, z) / (2.0 * PI)
}

/// Log-subtracted two-dimensional kernel `(1/2π)A(−iλd)`.
pub(crate) fn subtracted_kernel_2d(lambda: Complex64, d: f64) -> Complex64 {
    a_closed_half_plane(Complex64::new(0.0, -1.0) * lambda * d) / (2.0 * PI)
}

/// `Γ(k/2)`.
pub fn gamma_half(k: u32) -> f64 {
    match k {
        0 => f64::INFINITY,
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
    }
}

/// Area of the unit sphere `S^{k}` in `ℝ^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    2.0 * PI.powf((k as f64 + 1.0) / 2.0) / gamma_half(k as u32 + 1)
}

/// Result of a weighted Hilbert–Schmidt quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsNorm {
    pub value: f64,
    /// Relative change against the next-coarser quadrature.
    pub refinement_change: f64,
    /// Relative change when the truncation radius is halved.
    pub tail_change: f64,
    /// Both changes below the 1e−4 target.
    pub converged: bool,
}

/// Quadrature resolution for [`weighted_hs_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsQuadrature {
    /// Gauss points per panel.
    pub order: usize,
    /// Each radial (and angular) panel is split into `2^level` pieces.
    pub level: u32,
    /// Angular panels on `[0, π]` before splitting.
    pub angle_panels: usize,
}

impl Default for HsQuadrature {
    fn default() -> Self {
        HsQuadrature { order: 8, level: 1, angle_panels: 4 }
    }
}

const HS_TARGET: f64 = 1e-4;

/// Squared HS norm `∫∫⟨x⟩^{−2s}|k|²⟨y⟩^{−2s}` over `|x|, |y| ≤ r_box`, reduced by
/// rotational symmetry to `(|x|, |y|, angle)`.
fn hs_squared(
    n: usize,
    s: f64,
    kernel: &(dyn Fn(f64, f64, f64) -> Complex64 + Sync),
    r_box: f64,
    quad_spec: HsQuadrature,
) -> f64 {
    let (r, wr) = quad::composite_gauss(&quad::graded_edges(r_box, quad_spec.level), quad_spec.order);
    let angle_edges: Vec<f64> = (0..=quad_spec.angle_panels)
        .map(|k| PI * k as f64 / quad_spec.angle_panels as f64)
        .collect();
    let (th, wth) = quad::composite_gauss(&quad::refine_edges(&angle_edges, quad_spec.level), quad_spec.order);
    let radial: Vec<f64> = r
        .iter()
        .zip(&wr)
        .map(|(x, w)| w * bracket(*x).powf(-2.0 * s) * x.powi(n as i32 - 1))
        .collect();
    let angular: Vec<f64> = th.iter().zip(&wth).map(|(t, w)| w * t.sin().powi(n as i32 - 2)).collect();
    let total: f64 = (0..r.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..r.len() {
                let mut inner = 0.0;
                for (t, wt) in th.iter().zip(&angular) {
                    inner += wt * kernel(r[i], r[j], *t).norm_sqr();
                }
                acc += radial[j] * inner;
            }
            radial[i] * acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    total * sphere_area(n - 1) * sphere_area(n - 2)
}

/// Weighted HS norm `‖⟨x⟩^{−s}k(x,y)⟨y⟩^{−s}‖` of a rotation-invariant kernel
/// given as a function of `(|x|, |y|, angle)`, truncated to `|x|, |y| ≤ r_box`.
/// The result carries refinement and tail diagnostics.
pub fn weighted_hs_norm(
    n: usize,
    s: f64,
    kernel: &(dyn Fn(f64, f64, f64) -> Complex64 + Sync),
    r_box: f64,
    quad_spec: HsQuadrature,
) -> Result<HsNorm> {
    if n < 2 {
        return Err(Error::Domain("dimension must be at least 2".into()));
    }
    if !(r_box > 0.0) {
        return Err(Error::Domain("truncation radius must be positive".into()));
    }
    let fine = hs_squared(n, s, kernel, r_box, quad_spec).sqrt();
    let coarse_spec = HsQuadrature { level: quad_spec.level.saturating_sub(1), ..quad_spec };
    let coarse = if quad_spec.level == 0 {
        hs_squared(n, s, kernel, r_box, HsQuadrature { order: quad_spec.order.saturating_sub(2).max(2), ..quad_spec })
            .sqrt()
    } else {
        hs_squared(n, s, kernel, r_box, coarse_spec).sqrt()
    };
    let half = hs_squared(n, s, kernel, r_box / 2.0, quad_spec).sqrt();
    let rel = |a: f64, b: f64| if a == 0.0 && b == 0.0 { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let refinement_change = rel(fine, coarse);
    let tail_change = rel(fine, half);
    Ok(HsNorm {
        value: fine,
        refinement_change,
        tail_change,
        converged: refinement_change <= HS_TARGET && tail_change <= HS_TARGET,
    })
}

/// Separation `|x − y|` from `(|x|, |y|, angle)`.
pub fn separation(r: f64, rho: f64, theta: f64) -> f64 {
    (r * r + rho * rho - 2.0 * r * rho * theta.cos()).max(0.0).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimate {
    pub lambda_samples: Vec<Complex64>,
    pub hs_norms: Vec<f64>,
    /// `‖k_{λ_{j+1}} − k_{λ_j}‖_HS / |λ_{j+1} − λ_j|`; one fewer than the samples.
    pub lipschitz_quotients: Vec<f64>,
}

impl KernelEstimate {
    pub fn max_quotient(&self) -> f64 {
        self.lipschitz_quotients.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with columns `lambda_re, lambda_im, hs_norm, lipschitz_quotient`
    /// (the quotient on row `j` belongs to the interval `[λ_j, λ_{j+1}]`).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda_re,lambda_im,hs_norm,lipschitz_quotient\n");
        for (j, (l, h)) in self.lambda_samples.iter().zip(&self.hs_norms).enumerate() {
            let q = self.lipschitz_quotients.get(j).map(|q| q.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", l.re, l.im, h, q));
        }
        out
    }
}

/// HS norms of the weighted free-resolvent kernel (log-subtracted for `n = 2`
/// when requested) along a λ-grid, plus difference quotients between adjacent
/// samples. Samples are sorted by `|λ|`.
pub fn kernel_lipschitz_sweep(
    n: usize,
    s: f64,
    lambdas: &[Complex64],
    with_log_subtraction: bool,
    r_box: f64,
    quad_spec: HsQuadrature,
) -> Result<KernelEstimate> {
    if !(s > 1.0) {
        return Err(Error::Domain(format!("weight exponent must exceed 1, got {s}")));
    }
    if !(2..=6).contains(&n) {
        return Err(Error::UnsupportedOrder(n as f64 / 2.0 - 1.0));
    }
    let mut samples: Vec<Complex64> = lambdas.to_vec();
    if samples.iter().any(|l| l.im < 0.0) {
        return Err(Error::Domain("sweep frequencies need Im λ ≥ 0".into()));
    }
    if n == 2 && !with_log_subtraction && samples.iter().any(|l| *l == c(0.0)) {
        return Err(Error::Domain("raw n = 2 kernel is undefined at λ = 0".into()));
    }
    samples.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let kernel_at = move |lambda: Complex64, d: f64| -> Complex64 {
        if n == 2 && with_log_subtraction {
            subtracted_kernel_2d(lambda, d)
        } else {
            free_kernel_closed(n, lambda, d)
        }
    };
    let norm_of = |f: &(dyn Fn(f64, f64, f64) -> Complex64 + Sync)| hs_squared(n, s, f, r_box, quad_spec).sqrt();
    let hs_norms: Vec<f64> = samples
        .iter()
        .map(|&l| norm_of(&move |r, rho, t| kernel_at(l, separation(r, rho, t))))
        .collect();
    let lipschitz_quotients = samples
        .windows(2)
        .map(|w| {
            let (l1, l2) = (w[0], w[1]);
            let diff = move |r: f64, rho: f64, t: f64| {
                let d = separation(r, rho, t);
                kernel_at(l2, d) - kernel_at(l1, d)
            };
            norm_of(&diff) / (l2 - l1).norm()
        })
        .collect();
    Ok(KernelEstimate { lambda_samples: samples, hs_norms, lipschitz_quotients })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integral representation `∫₀^∞ e^{−z cosh t} cosh(νt) dt` by trapezoid in t.
    fn k_integral(nu: f64, z: Complex64) -> Complex64 {
        let t_max = (60.0 / z.re).max(2.0).acosh() + 1.0;
        let step = 1.0 / 256.0;
        let n = (t_max / step).ceil() as usize;
        let mut acc = c(0.0);
        for i in 0..=n {
            let t = i as f64 * step;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            acc += (-z * t.cosh()).exp() * (nu * t).cosh() * w;
        }
        acc * step
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn matches_integral_representation() {
        let zs = [0.05, 0.5, 1.0, 1.9, 2.1, 4.0, 8.0, 15.0, 29.0, 31.0, 60.0];
        let args = [0.0, 0.4, 1.0];
        for &nu in &[0.0, 0.5, 1.0, 1.5, 2.0] {
            for &r in &zs {
                for &arg in &args {
                    let z = Complex64::from_polar(r, arg);
                    let got = macdonald_k(nu, z).unwrap();
                    let want = k_integral(nu, z);
                    assert!(rel(got, want) < 1e-10, "nu={nu} z={z} got={got} want={want}");
                }
            }
        }
    }

    #[test]
    fn reference_values() {
        // Real-axis values of K₀, K₁.
        let table = [
            (1.0, 0.421_024_438_240_708_3, 0.601_907_230_197_234_6),
            (2.0, 0.113_893_872_749_533_4, 0.139_865_881_816_522_4),
            (5.0, 0.003_691_098_334_042_594, 0.004_044_613_445_452_164),
        ];
        for (x, k0, k1) in table {
            assert!(rel(macdonald_k(0.0, c(x)).unwrap(), c(k0)) < 1e-13);
            assert!(rel(macdonald_k(1.0, c(x)).unwrap(), c(k1)) < 1e-13);
        }
    }

    #[test]
    fn imaginary_axis_matches_hankel() {
        // K₀(−ix) = (iπ/2) H₀⁽¹⁾(x) with J₀, Y₀ reference values.
        for (x, j0, y0) in [(1.0, 0.765_197_686_557_966_6, 0.088_256_964_215_676_96), (5.0, -0.177_596_771_314_338_3, -0.308_517_625_249_033_8)] {
            let want = Complex64::new(0.0, PI / 2.0) * Complex64::new(j0, y0);
            let got = k_closed_half_plane(0, Complex64::new(0.0, -x));
            assert!(rel(got, want) < 1e-12, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn half_order_closed_form() {
        let v = macdonald_k(0.5, c(2.0)).unwrap();
        assert!((v.re - 0.119_937_771_968_061_45).abs() < 1e-15);
        assert!(macdonald_k(0.5, c(0.0)).is_err());
        assert!(macdonald_k(0.25, c(1.0)).is_err());
    }

    #[test]
    fn large_argument_ratio() {
        let z = c(50.0);
        let leading = (PI / 100.0).sqrt() * (-50.0f64).exp();
        let ratio = |nu: f64| macdonald_k(nu, z).unwrap().re / leading;
        for &nu in &[0.0, 0.5, 1.0] {
            assert!((ratio(nu) - 1.0).abs() < 1e-2, "nu={nu}: {}", ratio(nu));
        }
        // Higher orders keep an O(1/z) offset: exactly 1 + 1/z for ν = 3/2.
        assert!((ratio(1.5) - 1.02).abs() < 1e-14);
        let two_term = 1.0 + 15.0 / 400.0 + 15.0 * 7.0 / (2.0 * 64.0 * 2500.0);
        assert!((ratio(2.0) - two_term).abs() < 1e-5);
    }

    #[test]
    fn derivative_recurrence() {
        let h = 1e-5;
        let d = (macdonald_k(0.0, c(1.0 + h)).unwrap() - macdonald_k(0.0, c(1.0 - h)).unwrap()) / (2.0 * h);
        assert!((d + macdonald_k(1.0, c(1.0)).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn bessel_ode_residual() {
        let h = 1e-4;
        for &nu in &[0.0, 0.5, 1.0, 1.5, 2.0] {
            for &x in &[0.3, 1.0, 3.0, 9.0] {
                let z = Complex64::from_polar(x, 0.3);
                let k = |w: Complex64| macdonald_k(nu, w).unwrap();
                let (km, k0, kp) = (k(z - h), k(z), k(z + h));
                let d1 = (kp - km) / (2.0 * h);
                let d2 = (kp - k0 * 2.0 + km) / (h * h);
                let res = z * z * d2 + z * d1 - (z * z + nu * nu) * k0;
                assert!(res.norm() <= 1e-6 * k0.norm().max(1.0), "nu={nu} z={z}: {res}");
            }
        }
    }

    #[test]
    fn a_function_limits() {
        let a = a_function(c(1e-6)).unwrap();
        assert!((a.re + 0.577_215_664_9).abs() < 1e-5);
        let h = 1e-6;
        let z = 1e-4;
        let d = (a_function(c(z + h)).unwrap() - a_function(c(z - h)).unwrap()) / (2.0 * h);
        assert!(d.norm() <= 1e-3);
        let a50 = a_function(c(50.0)).unwrap();
        assert!((a50.re - 25f64.ln()).abs() < 1e-15);
        assert!((a50.re - 3.218_875_8).abs() < 1e-7);
        assert_eq!(a_closed_half_plane(c(0.0)), c(-EULER_GAMMA));
        assert!(a_function(Complex64::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn a_function_continuous_across_regimes() {
        for &arg in &[0.0, 0.7, 1.5] {
            let lo = a_closed_half_plane(Complex64::from_polar(SERIES_RADIUS * (1.0 - 1e-12), arg));
            let hi = a_closed_half_plane(Complex64::from_polar(SERIES_RADIUS * (1.0 + 1e-12), arg));
            assert!((lo - hi).norm() < 1e-11);
        }
    }

    #[test]
    fn three_dimensional_kernel() {
        let k = free_resolvent_kernel(3, Complex64::i(), 1.0).unwrap();
        assert!((k - c((-1.0f64).exp() / (4.0 * PI))).norm() < 1e-16);
        let ratio = free_resolvent_kernel(3, Complex64::new(0.0, 2.0), 2.0).unwrap()
            / free_resolvent_kernel(3, Complex64::new(0.0, 1.0), 4.0).unwrap();
        assert!((ratio - c(2.0)).norm() < 1e-12);
        assert!(free_resolvent_kernel(3, c(1.0), 1.0).is_err());
    }

    #[test]
    fn general_formula_reduces_for_n3() {
        // The n = 3 shortcut agrees with the Macdonald form.
        let lambda = Complex64::new(1.3, 0.4);
        let d = 0.7;
        let z = Complex64::new(0.0, -1.0) * lambda * d;
        let general = (Complex64::new(0.0, -1.0) * lambda / (2.0 * PI * d)).powf(0.5)
            * macdonald_k(0.5, z).unwrap()
            / (2.0 * PI);
        assert!(rel(general, free_resolvent_kernel(3, lambda, d).unwrap()) < 1e-13);
    }

    #[test]
    fn two_dimensional_kernel_log_limit() {
        let lambda = Complex64::i();
        let d = 1e-8;
        let k = free_resolvent_kernel(2, lambda, d).unwrap();
        let z = Complex64::new(0.0, -1.0) * lambda * d;
        let limit = k + (z / 2.0).ln() / (2.0 * PI);
        assert!((limit - c(-EULER_GAMMA / (2.0 * PI))).norm() < 1e-9);
    }

    #[test]
    fn newtonian_limit() {
        for n in 3..=6 {
            let d = 0.8;
            let small = free_kernel_closed(n, Complex64::new(0.0, 1e-7), d);
            let zero = free_kernel_closed(n, c(0.0), d);
            assert!(rel(small, zero) < 1e-5, "n={n}");
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(0) - 2.0).abs() < 1e-15);
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn hs_norm_of_constant_kernel() {
        // Direct Cartesian oracle for ∫_{|x|≤R}⟨x⟩^{−4}dx in two dimensions.
        let r_box = 40.0;
        let m = 1600;
        let h = 2.0 * r_box / m as f64;
        let mut single = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = -r_box + (i as f64 + 0.5) * h;
                let y = -r_box + (j as f64 + 0.5) * h;
                let rr = x * x + y * y;
                if rr <= r_box * r_box {
                    single += h * h / (1.0 + rr).powi(2);
                }
            }
        }
        let want = single;
        let got = weighted_hs_norm(2, 2.0, &|_, _, _| c(1.0), r_box, HsQuadrature::default()).unwrap();
        assert!((got.value - want).abs() / want < 2e-3, "{} vs {want}", got.value);
        let exact = PI * (1.0 - 1.0 / (1.0 + r_box * r_box));
        assert!((got.value - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn hs_norm_of_zero_kernel() {
        let got = weighted_hs_norm(3, 1.5, &|_, _, _| c(0.0), 10.0, HsQuadrature::default()).unwrap();
        assert_eq!(got.value, 0.0);
        assert!(got.converged);
    }

    #[test]
    fn hs_norm_distance_kernel_threshold() {
        let kernel = |r: f64, rho: f64, t: f64| c(separation(r, rho, t));
        let q = HsQuadrature { order: 8, level: 1, angle_panels: 2 };
        let good: Vec<f64> = [1e3, 1e4]
            .iter()
            .map(|&rb| weighted_hs_norm(2, 2.5, &kernel, rb, q).unwrap().value)
            .collect();
        assert!((good[1] - good[0]) / good[1] < 2e-3);
        let bad = weighted_hs_norm(2, 1.0, &kernel, 1e3, q).unwrap();
        assert!(!bad.converged && bad.tail_change > 0.5);
        // Nondecreasing in the truncation radius.
        let radii = [10.0, 20.0, 40.0];
        let vals: Vec<f64> = radii.iter().map(|&rb| weighted_hs_norm(2, 2.5, &kernel, rb, q).unwrap().value).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }
}
