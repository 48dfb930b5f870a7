use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{bracket, MediumSpec, RadialGrid, SemiclassicalParams};

use super::phase::PhaseSolution;
use super::weight::Weight;

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Eigenvalue `ℓ(ℓ+n−2) + (n−1)(n−3)/4` of the conjugated spherical operator on mode `ℓ`.
pub fn mode_eigenvalue(ell: usize, n: usize) -> f64 {
    let (l, nf) = (ell as f64, n as f64);
    l * (l + nf - 2.0) + (nf - 1.0) * (nf - 3.0) / 4.0
}

/// Semiclassical potentials `V = V_L + V_S + i(W_L + W_S)` at fixed `(h, ε)`.
pub struct Potentials {
    pub h: f64,
    pub eps: f64,
    /// Right-continuous `V_L`.
    pub v_l: RealFn,
    pub v_l_left: RealFn,
    /// Absolutely continuous part of `V_L′`.
    pub v_l_prime: RealFn,
    pub v_s: RealFn,
    pub w_l: RealFn,
    pub w_s: RealFn,
    /// `V_L` has no jumps.
    pub smooth: bool,
}

impl Potentials {
    /// `V_L ≡ −a`, `V_S = W_S = 0`, `W_L ≡ ε`.
    pub fn flat(a: f64, eps: f64, h: f64) -> Self {
        Potentials {
            h,
            eps,
            v_l: Box::new(move |_| -a),
            v_l_left: Box::new(move |_| -a),
            v_l_prime: Box::new(|_| 0.0),
            v_s: Box::new(|_| 0.0),
            w_l: Box::new(move |_| eps),
            w_s: Box::new(|_| 0.0),
            smooth: true,
        }
    }

    /// Rescaled potentials of `−c²Δ + V − λ²`: `V_L = (h²ε² − 1)c⁻²`,
    /// `V_S = h²c⁻²V`, `W_L = −2 sgn(Re λ) hε c⁻²`.
    pub fn from_medium(medium: &MediumSpec, lambda: Complex64) -> Result<Self> {
        let sc = SemiclassicalParams::from_frequency(lambda)?;
        let (h, eps, sign) = (sc.h, sc.eps, sc.sign);
        let k = h * h * eps * eps - 1.0;
        let (c1, c2, c3, c4) = (medium.wavespeed.clone(), medium.wavespeed.clone(), medium.wavespeed.clone(), medium.wavespeed.clone());
        let c5 = medium.wavespeed.clone();
        let pot = medium.potential.clone();
        Ok(Potentials {
            h,
            eps,
            v_l: Box::new(move |r| k / c1.eval(r).powi(2)),
            v_l_left: Box::new(move |r| k / c2.eval_left(r).powi(2)),
            v_l_prime: Box::new(move |r| -2.0 * k * c3.derivative(r) / c3.eval(r).powi(3)),
            v_s: Box::new(move |r| h * h * pot.eval(r) / c4.eval(r).powi(2)),
            w_l: Box::new(move |r| -2.0 * sign * h * eps / c5.eval(r).powi(2)),
            w_s: Box::new(|_| 0.0),
            smooth: medium.wavespeed.jumps().is_empty(),
        })
    }

    /// Complex potential at `r` (right-continuous).
    pub fn total(&self, r: f64) -> Complex64 {
        Complex64::new((self.v_l)(r) + (self.v_s)(r), (self.w_l)(r) + (self.w_s)(r))
    }
}

/// Smooth compactly supported (or rapidly decaying) per-mode test functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothTest {
    /// `exp(−((r − center)/width)²)`.
    Gaussian { center: f64, width: f64 },
    /// `(1 − x²)⁴` with `x = (r − center)/half_width`, zero for `|x| ≥ 1`.
    Bump { center: f64, half_width: f64 },
    /// `e^{i·frequency·r}` times the bump.
    Wkb { center: f64, half_width: f64, frequency: f64 },
}

impl SmoothTest {
    /// `(u, u′, u″)` at `r`.
    pub fn eval(&self, r: f64) -> [Complex64; 3] {
        let re = |v: [f64; 3]| v.map(|x| Complex64::new(x, 0.0));
        match *self {
            SmoothTest::Gaussian { center, width } => {
                let x = (r - center) / width;
                let g = (-x * x).exp();
                re([g, -2.0 * x / width * g, (4.0 * x * x - 2.0) / (width * width) * g])
            }
            SmoothTest::Bump { center, half_width } => re(bump(r, center, half_width)),
            SmoothTest::Wkb { center, half_width, frequency: k } => {
                let [b, b1, b2] = bump(r, center, half_width);
                let e = Complex64::from_polar(1.0, k * r);
                let i = Complex64::i();
                [e * b, e * (b1 + i * k * b), e * (b2 + 2.0 * i * k * b1 - k * k * b)]
            }
        }
    }

    /// Values at the grid nodes.
    pub fn sample(&self, grid: &RadialGrid) -> Vec<Complex64> {
        grid.nodes().into_iter().map(|r| self.eval(r)[0]).collect()
    }
}

fn bump(r: f64, center: f64, half_width: f64) -> [f64; 3] {
    let x = (r - center) / half_width;
    if x.abs() >= 1.0 {
        return [0.0; 3];
    }
    let s = 1.0 - x * x;
    let w = half_width;
    [s.powi(4), -8.0 * x * s.powi(3) / w, (-8.0 * s.powi(3) + 48.0 * x * x * s * s) / (w * w)]
}

/// `Pũ` at every node with the three-point Laplacian and Dirichlet ends.
fn apply_p(v: &[Complex64], grid: &RadialGrid, pots: &Potentials, lambda: f64) -> Vec<Complex64> {
    let d = grid.spacing();
    let h2 = pots.h * pots.h;
    let n = v.len();
    (0..n)
        .map(|j| {
            let r = grid.node(j + 1);
            let left = if j > 0 { v[j - 1] } else { Complex64::new(0.0, 0.0) };
            let right = if j + 1 < n { v[j + 1] } else { Complex64::new(0.0, 0.0) };
            let lap = (right - 2.0 * v[j] + left) / (d * d);
            -h2 * lap + (h2 * lambda / (r * r) + pots.total(r)) * v[j]
        })
        .collect()
}

/// Both sides of the weighted estimates for one test function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanRatio {
    /// `‖⟨r⟩^{−s}1_{≤M}ũ‖²`.
    pub a_int: f64,
    /// `‖⟨r⟩^{−s}1_{>M}ũ‖²`.
    pub a_ext: f64,
    /// `‖⟨r⟩^{s}Pũ‖²`.
    pub b_p: f64,
    /// `‖|W_L|^{1/2}ũ‖²`.
    pub b_w: f64,
    /// Smallest `C` with `e^{−C/h}a_int ≤ b_p + b_w`, clamped at 0.
    pub c_int: f64,
    /// Smallest `C` with `a_ext ≤ C(b_p/h² + b_w/h)`.
    pub c_ext: f64,
}

/// Implied constants of the interior and exterior weighted estimates for the
/// per-mode function `ũ = r^{(n−1)/2}v` sampled on `grid`.
pub fn carleman_ratio(
    v: &[Complex64],
    grid: &RadialGrid,
    pots: &Potentials,
    m: f64,
    s: f64,
    ell: usize,
    n: usize,
) -> Result<CarlemanRatio> {
    if v.len() != grid.len() {
        return Err(Error::Domain(format!("test function has {} samples, grid has {}", v.len(), grid.len())));
    }
    let d = grid.spacing();
    let h = pots.h;
    let pv = apply_p(v, grid, pots, mode_eigenvalue(ell, n));
    let (mut a_int, mut a_ext, mut b_p, mut b_w) = (0.0, 0.0, 0.0, 0.0);
    for (j, (vj, pj)) in v.iter().zip(&pv).enumerate() {
        let r = grid.node(j + 1);
        let br = bracket(r);
        let mass = vj.norm_sqr() * d;
        if r <= m {
            a_int += br.powf(-2.0 * s) * mass;
        } else {
            a_ext += br.powf(-2.0 * s) * mass;
        }
        b_p += br.powf(2.0 * s) * pj.norm_sqr() * d;
        b_w += (pots.w_l)(r).abs() * mass;
    }
    let rhs = b_p + b_w;
    if rhs == 0.0 && a_int + a_ext > 0.0 {
        return Err(Error::Degenerate("right-hand side vanishes for a nonzero test function".into()));
    }
    let c_int = if a_int > 0.0 { (h * (a_int / rhs).ln()).max(0.0) } else { 0.0 };
    let ext_rhs = b_p / (h * h) + b_w / h;
    let c_ext = if a_ext > 0.0 { a_ext / ext_rhs } else { 0.0 };
    Ok(CarlemanRatio { a_int, a_ext, b_p, b_w, c_int, c_ext })
}

/// `f(2r/h)` with `f(x) = x^{(n−1)/2+ℓ}(1 − x²)⁴` on `[0, 1)`: a per-mode function
/// supported in `r < h/2` whose near-origin ratio is independent of `h`.
pub fn origin_test_function(grid: &RadialGrid, h: f64, ell: usize, n: usize) -> Vec<Complex64> {
    let power = (n as f64 - 1.0) / 2.0 + ell as f64;
    grid.nodes()
        .into_iter()
        .map(|r| {
            let x = 2.0 * r / h;
            let f = if x < 1.0 { x.powf(power) * (1.0 - x * x).powi(4) } else { 0.0 };
            Complex64::new(f, 0.0)
        })
        .collect()
}

/// `h⁴·LHS/RHS` of the near-origin estimate with the potential term restricted
/// to `α < r < 1`, `α = ηh`.
#[allow(clippy::too_many_arguments)]
pub fn near_origin_check(
    v: &[Complex64],
    grid: &RadialGrid,
    pots: &Potentials,
    t0: f64,
    eta: f64,
    ell: usize,
    n: usize,
) -> Result<f64> {
    if !(t0 > -0.5 && t0 < 0.0) {
        return Err(Error::Domain(format!("t0 must lie in (-1/2, 0), got {t0}")));
    }
    if v.len() != grid.len() {
        return Err(Error::Domain(format!("test function has {} samples, grid has {}", v.len(), grid.len())));
    }
    if grid.r_max() < 1.0 {
        return Err(Error::Domain("grid must cover the unit interval".into()));
    }
    let h = pots.h;
    let alpha = eta * h;
    let d = grid.spacing();
    if d > alpha / 20.0 {
        return Err(Error::Resolution { alpha, spacing: d });
    }
    let pv = apply_p(v, grid, pots, mode_eigenvalue(ell, n));
    let (mut lhs, mut p_term, mut v_term, mut mass, mut grad) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..v.len() {
        let r = grid.node(j + 1);
        if r >= 1.0 {
            break;
        }
        let outer = r.powf(3.0 - 2.0 * t0);
        if r < 0.5 {
            lhs += r.powf(-1.0 - 2.0 * t0) * v[j].norm_sqr() * d;
        }
        p_term += outer * pv[j].norm_sqr() * d;
        if r > alpha {
            v_term += outer * (pots.total(r) * v[j]).norm_sqr() * d;
        }
        if r > 0.5 {
            let right = if j + 1 < v.len() { v[j + 1] } else { Complex64::new(0.0, 0.0) };
            let left = if j > 0 { v[j - 1] } else { Complex64::new(0.0, 0.0) };
            let dv = h * (right - left) / (2.0 * d);
            mass += outer * v[j].norm_sqr() * d;
            grad += outer * dv.norm_sqr() * d;
        }
    }
    if lhs == 0.0 {
        return Ok(0.0);
    }
    let rhs = p_term + v_term + h.powi(4) * mass + h * h * grad;
    if rhs == 0.0 {
        return Err(Error::Degenerate("near-origin right-hand side vanishes".into()));
    }
    Ok(h.powi(4) * lhs / rhs)
}

/// Phase data entering the energy identity at one radius: `φ′`, `Ψ = (φ′)² − hφ″`, `Ψ′`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseJet {
    pub phi1: f64,
    pub psi: f64,
    pub psi_prime: f64,
}

impl PhaseJet {
    pub const ZERO: PhaseJet = PhaseJet { phi1: 0.0, psi: 0.0, psi_prime: 0.0 };

    fn of(phase: Option<&PhaseSolution>, r: f64) -> Self {
        match phase {
            None => Self::ZERO,
            Some(p) => PhaseJet { phi1: p.y_at(r), psi: p.psi().value(r), psi_prime: p.psi().density(r) },
        }
    }
}

/// `F = |hu′|² − (h²λ_ℓ/r² + V_L − Ψ)|u|²`.
fn energy(r: f64, u: &[Complex64; 3], jet: &PhaseJet, pots: &Potentials, lambda: f64) -> f64 {
    let h = pots.h;
    (h * u[1]).norm_sqr() - (h * h * lambda / (r * r) + (pots.v_l)(r) - jet.psi) * u[0].norm_sqr()
}

/// The terms of the expanded derivative of `wF` at `r`, in order:
/// `−2w Re(P_φu·ū′)`, `2wV_S Re(ūu′)`, `2w(W_L+W_S) Im(ūu′)`, `|hu′|²(4wφ′/h + w′)`,
/// `h²λ_ℓ r⁻²|u|²(2w/r − w′)`, `|u|²(w′Ψ + wΨ′)`, `−|u|²V_L w′`, `−w|u|²V_L′`.
/// `P_φu = −h²u″ + 2hφ′u′ + h²λ_ℓ r⁻²u + Vu − Ψu`.
pub fn energy_derivative_terms(
    r: f64,
    u: &[Complex64; 3],
    w: (f64, f64),
    jet: &PhaseJet,
    pots: &Potentials,
    lambda: f64,
) -> [f64; 8] {
    let h = pots.h;
    let (w, wp) = w;
    let [u0, u1, u2] = *u;
    let angular = h * h * lambda / (r * r);
    let p_phi = -h * h * u2 + 2.0 * h * jet.phi1 * u1 + (angular + pots.total(r) - jet.psi) * u0;
    let cross = u0.conj() * u1;
    let v_l = (pots.v_l)(r);
    [
        -2.0 * w * (p_phi * u1.conj()).re,
        2.0 * w * (pots.v_s)(r) * cross.re,
        2.0 * w * ((pots.w_l)(r) + (pots.w_s)(r)) * cross.im,
        (h * u1).norm_sqr() * (4.0 * w * jet.phi1 / h + wp),
        angular * u0.norm_sqr() * (2.0 * w / r - wp),
        u0.norm_sqr() * (wp * jet.psi + w * jet.psi_prime),
        -u0.norm_sqr() * v_l * wp,
        -w * u0.norm_sqr() * (pots.v_l_prime)(r),
    ]
}

/// Pointwise comparison of a central difference of `wF` with the expanded derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCheck {
    pub r: Vec<f64>,
    pub residual: Vec<f64>,
    pub max_residual: f64,
    pub spacing: f64,
}

/// Evaluates the energy identity at the grid nodes for a smooth test function.
/// `phase = None` means `φ ≡ 0`. Nodes within `1.5Δ` of a kink of `w′` or ψ are skipped.
pub fn energy_functional_check(
    u: &SmoothTest,
    grid: &RadialGrid,
    weight: &Weight,
    phase: Option<&PhaseSolution>,
    pots: &Potentials,
    ell: usize,
    n: usize,
) -> Result<EnergyCheck> {
    if !pots.smooth {
        return Err(Error::Domain("energy identity is checked only for V_L without jumps".into()));
    }
    let d = grid.spacing();
    let lambda = mode_eigenvalue(ell, n);
    let mut kinks = vec![weight.m];
    if let Some(p) = phase {
        kinks.extend(p.psi().breakpoints());
    }
    let wf = |r: f64| {
        let jet = PhaseJet::of(phase, r);
        weight.w(r) * energy(r, &u.eval(r), &jet, pots, lambda)
    };
    let mut rs = Vec::new();
    let mut residual = Vec::new();
    for r in grid.nodes() {
        if r - d <= 0.0 || kinks.iter().any(|k| (r - k).abs() < 1.5 * d) {
            continue;
        }
        let lhs = (wf(r + d) - wf(r - d)) / (2.0 * d);
        let jet = PhaseJet::of(phase, r);
        let rhs: f64 =
            energy_derivative_terms(r, &u.eval(r), (weight.w(r), weight.w_prime(r)), &jet, pots, lambda).iter().sum();
        rs.push(r);
        residual.push((lhs - rhs).abs());
    }
    let max_residual = residual.iter().copied().fold(0.0, f64::max);
    Ok(EnergyCheck { r: rs, residual, max_residual, spacing: d })
}

/// Centers of the quasimode family used by [`interior_constant_sweep`].
pub const QUASIMODE_CENTERS: [f64; 5] = [1.5, 2.5, 3.5, 4.5, 5.5];

/// WKB bumps oscillating at the local frequency `1/(h·c(center))`.
pub fn quasimode_family(medium: &MediumSpec, h: f64) -> Vec<SmoothTest> {
    QUASIMODE_CENTERS
        .iter()
        .map(|&center| SmoothTest::Wkb { center, half_width: 1.0, frequency: 1.0 / (h * medium.c(center)) })
        .collect()
}

/// Interior constants across `h` at `λ = 1/h + iε`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorSweep {
    pub hs: Vec<f64>,
    /// `C_int(h)` for each member of the family, one row per `h`.
    pub per_function: Vec<Vec<f64>>,
    /// Largest constant over the family at each `h`.
    pub c_int: Vec<f64>,
}

impl InteriorSweep {
    /// `max/min` of the per-`h` constants; infinite if any vanishes.
    pub fn spread(&self) -> f64 {
        let hi = self.c_int.iter().copied().fold(0.0, f64::max);
        let lo = self.c_int.iter().copied().fold(f64::INFINITY, f64::min);
        if lo > 0.0 { hi / lo } else { f64::INFINITY }
    }
}

/// Runs [`carleman_ratio`] on the quasimode family for each `h`, with the
/// rescaled potentials of the medium.
pub fn interior_constant_sweep(
    medium: &MediumSpec,
    grid: &RadialGrid,
    hs: &[f64],
    eps: f64,
    m: f64,
    s: f64,
    ell: usize,
) -> Result<InteriorSweep> {
    let mut per_function = Vec::with_capacity(hs.len());
    for &h in hs {
        let pots = Potentials::from_medium(medium, Complex64::new(1.0 / h, eps))?;
        let row = quasimode_family(medium, h)
            .iter()
            .map(|u| Ok(carleman_ratio(&u.sample(grid), grid, &pots, m, s, ell, medium.dimension)?.c_int))
            .collect::<Result<Vec<f64>>>()?;
        per_function.push(row);
    }
    let c_int = per_function.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).collect();
    Ok(InteriorSweep { hs: hs.to_vec(), per_function, c_int })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::tests::sample_setup;
    use crate::carleman::{solve_phase, Psi};
    use crate::model::{Envelope, Wavespeed};
    use proptest::prelude::*;

    fn grid() -> RadialGrid {
        RadialGrid::new(12.0, 2399).unwrap()
    }

    #[test]
    fn mode_eigenvalues() {
        assert_eq!(mode_eigenvalue(0, 3), 0.0);
        assert_eq!(mode_eigenvalue(1, 3), 2.0);
        assert_eq!(mode_eigenvalue(0, 2), -0.25);
        assert_eq!(mode_eigenvalue(2, 4), 8.0 + 0.75);
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let g = grid();
        let pots = Potentials::flat(1.0, 0.1, 1.0);
        let zero = vec![Complex64::new(0.0, 0.0); g.len()];
        let r = carleman_ratio(&zero, &g, &pots, 6.0, 0.75, 0, 3).unwrap();
        assert_eq!((r.c_int, r.c_ext), (0.0, 0.0));
        let fine = RadialGrid::new(2.0, 3999).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); fine.len()];
        assert_eq!(near_origin_check(&zero, &fine, &pots, -0.25, 0.5, 0, 3).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_baseline_is_finite() {
        let g = grid();
        let pots = Potentials::flat(1.0, 0.1, 1.0);
        let v = SmoothTest::Gaussian { center: 3.0, width: 0.5 }.sample(&g);
        let r = carleman_ratio(&v, &g, &pots, 6.0, 0.75, 0, 3).unwrap();
        assert!(r.c_int.is_finite() && r.a_int > 0.0 && r.b_p > 0.0);
    }

    #[test]
    fn degenerate_rhs_is_rejected() {
        let g = grid();
        let mut pots = Potentials::flat(0.0, 0.0, 1.0);
        pots.h = 0.0;
        let v = SmoothTest::Gaussian { center: 3.0, width: 0.5 }.sample(&g);
        let err = carleman_ratio(&v, &g, &pots, 6.0, 0.75, 0, 3).unwrap_err();
        assert!(matches!(err, Error::Degenerate(_)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn ratio_is_a_quadratic_form(theta in 0.0f64..6.28, c in 0.1f64..10.0, center in 1.0f64..10.0) {
            let g = grid();
            let pots = Potentials::flat(1.0, 0.2, 0.5);
            let v = SmoothTest::Wkb { center, half_width: 1.0, frequency: 2.0 }.sample(&g);
            let base = carleman_ratio(&v, &g, &pots, 6.0, 0.75, 1, 3).unwrap();
            let phase = Complex64::from_polar(1.0, theta);
            let rot: Vec<_> = v.iter().map(|x| phase * x).collect();
            let turned = carleman_ratio(&rot, &g, &pots, 6.0, 0.75, 1, 3).unwrap();
            prop_assert!((turned.a_int - base.a_int).abs() <= 1e-12 * base.a_int.max(1e-300));
            prop_assert!((turned.b_p - base.b_p).abs() <= 1e-12 * base.b_p);
            prop_assert!((turned.c_int - base.c_int).abs() <= 1e-9);
            let scaled: Vec<_> = v.iter().map(|x| c * x).collect();
            let big = carleman_ratio(&scaled, &g, &pots, 6.0, 0.75, 1, 3).unwrap();
            prop_assert!((big.b_p - c * c * base.b_p).abs() <= 1e-10 * c * c * base.b_p);
            prop_assert!((big.b_w - c * c * base.b_w).abs() <= 1e-10 * c * c * base.b_w);
            prop_assert!((big.c_int - base.c_int).abs() <= 1e-9);
        }
    }

    #[test]
    fn near_origin_resolution_and_domain() {
        let pots = Potentials::flat(1.0, 0.1, 0.5);
        let coarse = RadialGrid::new(2.0, 99).unwrap();
        let v = origin_test_function(&coarse, 0.5, 0, 3);
        assert!(matches!(near_origin_check(&v, &coarse, &pots, -0.25, 0.5, 0, 3), Err(Error::Resolution { .. })));
        assert!(matches!(near_origin_check(&v, &coarse, &pots, 0.25, 0.5, 0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn near_origin_constant_is_stable_in_h() {
        let mut values = Vec::new();
        for h in [0.5, 0.25, 0.125] {
            let g = RadialGrid::new(1.5, (1.5 / (h / 200.0)) as usize).unwrap();
            let pots = Potentials::flat(1.0, 0.1, h);
            let v = origin_test_function(&g, h, 0, 3);
            let c = near_origin_check(&v, &g, &pots, -0.25, 0.5, 0, 3).unwrap();
            assert!(c.is_finite() && c > 0.0);
            values.push(c);
        }
        let hi = values.iter().copied().fold(0.0, f64::max);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 4.0, "{values:?}");
    }

    #[test]
    fn energy_identity_zero_function() {
        let g = grid();
        let pots = Potentials::flat(1.0, 0.1, 1.0);
        let w = Weight::from_parts(1e9, 4.0, 6.0, 0.75, Envelope::new(1.0, 1.0), 0.0);
        let u = SmoothTest::Bump { center: 100.0, half_width: 1.0 };
        let chk = energy_functional_check(&u, &g, &w, None, &pots, 0, 3).unwrap();
        assert_eq!(chk.max_residual, 0.0);
    }

    #[test]
    fn energy_terms_match_direct_derivative_without_phase() {
        // φ = 0, w = r², V_L = −a, V_S = 0, real u: d/dr[r²(h²u′² − h²λu²/r² + au²)].
        let (a, h, lambda) = (0.7, 0.6, 2.0);
        let pots = Potentials::flat(a, 0.3, h);
        let u = SmoothTest::Gaussian { center: 2.0, width: 0.8 };
        for &r in &[0.5, 1.3, 2.0, 2.9, 4.1] {
            let [u0, u1, u2] = u.eval(r).map(|z| z.re);
            let direct = 2.0 * r * h * h * u1 * u1 + 2.0 * r * r * h * h * u1 * u2 - 2.0 * h * h * lambda * u0 * u1
                + 2.0 * a * r * u0 * u0
                + 2.0 * a * r * r * u0 * u1;
            let terms = energy_derivative_terms(r, &u.eval(r), (r * r, 2.0 * r), &PhaseJet::ZERO, &pots, lambda);
            let sum: f64 = terms.iter().sum();
            assert!((sum - direct).abs() < 1e-12 * (1.0 + direct.abs()), "r = {r}: {sum} vs {direct}");
        }
    }

    #[test]
    fn energy_identity_converges_at_second_order() {
        let setup = sample_setup();
        let phase = solve_phase(&Psi::from_setup(&setup), 1.0, 0.05).unwrap();
        let weight = Weight::new(&setup, 3.0 * setup.m);
        let pots = Potentials::flat(setup.config.a, 0.1, 1.0);
        let u = SmoothTest::Gaussian { center: setup.m / 2.0, width: 2.0 };
        let coarse = RadialGrid::new(setup.m, 400).unwrap();
        let fine = coarse.refined();
        let e1 = energy_functional_check(&u, &coarse, &weight, Some(&phase), &pots, 1, 3).unwrap();
        let e2 = energy_functional_check(&u, &fine, &weight, Some(&phase), &pots, 1, 3).unwrap();
        let order = (e1.max_residual / e2.max_residual).log2();
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn energy_identity_for_smooth_medium() {
        let medium = MediumSpec {
            wavespeed: Wavespeed::SmoothBump { amplitude: 0.3, radius: 3.0 },
            ..MediumSpec::flat(3)
        };
        let pots = Potentials::from_medium(&medium, Complex64::new(2.0, 0.1)).unwrap();
        let w = Weight::from_parts(1e9, 4.0, 6.0, 0.75, Envelope::new(1.0, 1.0), 0.0);
        // Support inside the bump radius, where c is smooth.
        let u = SmoothTest::Wkb { center: 1.7, half_width: 1.2, frequency: 2.0 };
        let coarse = RadialGrid::new(4.0, 399).unwrap();
        let e1 = energy_functional_check(&u, &coarse, &w, None, &pots, 2, 3).unwrap();
        let e2 = energy_functional_check(&u, &coarse.refined(), &w, None, &pots, 2, 3).unwrap();
        assert!((e1.max_residual / e2.max_residual).log2() >= 1.9);
        let step = MediumSpec { wavespeed: Wavespeed::Step { inner: 1.5, outer: 1.0, radius: 2.0 }, ..MediumSpec::flat(3) };
        let rough = Potentials::from_medium(&step, Complex64::new(2.0, 0.1)).unwrap();
        assert!(energy_functional_check(&u, &coarse, &w, None, &rough, 2, 3).is_err());
    }
}
