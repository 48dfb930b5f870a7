//! Inequality and identity checks for radial functions: Hardy inequalities,
//! oscillatory integrals, the Euler-operator commutator and discrete elliptic
//! norm ratios.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::RadialGrid;
use crate::quad::{composite_gauss, graded_edges};

/// One inequality `lhs ≤ rhs = constant·base`, with `ratio = lhs/base`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub ratio: f64,
    /// `lhs ≤ rhs·(1 + 10⁻⁹)`.
    pub pass: bool,
}

impl InequalityReport {
    pub fn new(name: impl Into<String>, lhs: f64, base: f64, constant: f64) -> Self {
        let rhs = constant * base;
        let ratio = if lhs == 0.0 { 0.0 } else { lhs / base };
        InequalityReport { name: name.into(), lhs, rhs, constant, ratio, pass: lhs <= rhs * (1.0 + 1e-9) }
    }

    pub const CSV_HEADER: &'static str = "name,lhs,rhs,constant,ratio,pass";

    pub fn csv_row(&self) -> String {
        format!("{},{:.12e},{:.12e},{:.12e},{:.12e},{}", self.name, self.lhs, self.rhs, self.constant, self.ratio, self.pass)
    }
}

/// Writes reports as CSV rows, with the header when `header` is set.
pub fn write_reports<W: Write>(mut out: W, reports: &[InequalityReport], header: bool) -> std::io::Result<()> {
    let mut s = String::new();
    if header {
        s.push_str(InequalityReport::CSV_HEADER);
        s.push('\n');
    }
    for r in reports {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    out.write_all(s.as_bytes())
}

/// `∫₀^R f` on graded Gauss panels, doubling the panel count until two
/// successive values agree to `10⁻¹²` relative.
fn refined_integral(f: &dyn Fn(f64) -> f64, r_max: f64) -> f64 {
    let eval = |level: u32| {
        let (x, w) = composite_gauss(&graded_edges(r_max, level), 8);
        x.iter().zip(&w).map(|(x, w)| w * f(*x)).sum::<f64>()
    };
    let mut prev = eval(2);
    for level in 3..=9 {
        let next = eval(level);
        if (next - prev).abs() <= 1e-12 * next.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Hardy inequality for a radial `u` on `ℝⁿ` supported in `[0, r_max]`.
/// For `n ≥ 3`: `‖u/r‖² ≤ (2/(n−2))²‖∇u‖²`. For `n = 2`:
/// `‖r^{−1/2}u‖² ≤ ‖u‖² + ‖∇u‖²`. Sphere areas cancel and are omitted.
pub fn hardy_check(u: &dyn Fn(f64) -> f64, du: &dyn Fn(f64) -> f64, r_max: f64, n: usize) -> Result<InequalityReport> {
    if n < 2 {
        return Err(Error::Domain(format!("Hardy checks need n ≥ 2, got {n}")));
    }
    if !(r_max > 0.0) {
        return Err(Error::Domain("r_max must be positive".into()));
    }
    let jac = |r: f64| r.powi(n as i32 - 1);
    let grad = refined_integral(&|r| du(r).powi(2) * jac(r), r_max);
    if n == 2 {
        let lhs = refined_integral(&|r| u(r).powi(2), r_max);
        let mass = refined_integral(&|r| u(r).powi(2) * r, r_max);
        Ok(InequalityReport::new("hardy_n2", lhs, mass + grad, 1.0))
    } else {
        let lhs = refined_integral(&|r| u(r).powi(2) * r.powi(n as i32 - 3), r_max);
        let k = 2.0 / (n as f64 - 2.0);
        Ok(InequalityReport::new(format!("hardy_n{n}"), lhs, grad, k * k))
    }
}

/// Radial test function `Σ a_k r^{p_k} e^{−b_k r^{q_k}}` with `q_k ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestProfile {
    pub terms: Vec<(f64, i32, f64, i32)>,
}

impl TestProfile {
    pub fn value(&self, r: f64) -> f64 {
        self.terms.iter().map(|&(a, p, b, q)| a * r.powi(p) * (-b * r.powi(q)).exp()).sum()
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, p, b, q)| {
                let e = (-b * r.powi(q)).exp();
                let d_pow = if p == 0 { 0.0 } else { p as f64 * r.powi(p - 1) };
                a * e * (d_pow - r.powi(p) * b * q as f64 * r.powi(q - 1))
            })
            .sum()
    }

    /// Up to four terms, each negligible (below 10⁻¹²) at `r = 40`.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let count = rng.gen_range(1..=4);
        let terms = (0..count)
            .map(|_| {
                let q = rng.gen_range(1..=2);
                let b = if q == 1 { rng.gen_range(1.0..3.0) } else { rng.gen_range(0.1..2.0) };
                (rng.gen_range(-2.0..2.0), rng.gen_range(0..=3), b, q)
            })
            .collect();
        TestProfile { terms }
    }
}

/// `∫₀^κ λ^m sin(tλ) dλ` in closed form by repeated integration by parts
/// (power series when `tκ < 1`).
pub fn oscillatory_integral(m: u32, kappa: f64, t: f64) -> Result<f64> {
    if !(kappa > 0.0) || !(t > 0.0) {
        return Err(Error::Domain(format!("need κ > 0 and t > 0, got κ = {kappa}, t = {t}")));
    }
    let mf = m as f64;
    if t * kappa < 1.0 {
        let mut sum = 0.0;
        let mut coeff = t;
        for k in 0..40 {
            let kf = k as f64;
            let term = coeff * kappa.powf(mf + 2.0 * kf + 2.0) / (mf + 2.0 * kf + 2.0);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            coeff *= -t * t / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
        }
        return Ok(sum);
    }
    // ∫₀^κ λ^m e^{itλ} = Σ_j (−1)^j m!/(m−j)! κ^{m−j} e^{itκ}/(it)^{j+1} − (−1)^m m!/(it)^{m+1}.
    let it = Complex64::new(0.0, t);
    let phase = Complex64::from_polar(1.0, t * kappa);
    let mut falling = 1.0;
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..=m {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * falling * kappa.powi((m - j) as i32) * phase / it.powi(j as i32 + 1);
        falling *= (m - j) as f64;
    }
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    total -= sign * factorial / it.powi(m as i32 + 1);
    Ok(total.im)
}

/// `sup_t |∫₀^κ λ^m sin(tλ)dλ|·t^ν` over a time grid, with the integration by
/// parts envelope `Σ_j m!/(m−j)! κ^{m−j} t^{−j−1} + m! t^{−m−1}` scaled the same way.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatoryDecay {
    pub nu: f64,
    pub sup_scaled: f64,
    pub envelope_sup: f64,
    pub argmax: f64,
}

impl OscillatoryDecay {
    pub fn bounded(&self) -> bool {
        self.sup_scaled.is_finite() && self.sup_scaled <= self.envelope_sup
    }
}

pub fn oscillatory_decay(m: u32, kappa: f64, times: &[f64], nu: f64) -> Result<OscillatoryDecay> {
    let mut out = OscillatoryDecay { nu, sup_scaled: 0.0, envelope_sup: 0.0, argmax: f64::NAN };
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    for &t in times {
        let scaled = oscillatory_integral(m, kappa, t)?.abs() * t.powf(nu);
        if scaled > out.sup_scaled || out.argmax.is_nan() {
            out.sup_scaled = scaled;
            out.argmax = t;
        }
        let mut falling = 1.0;
        let mut env = factorial / t.powi(m as i32 + 1);
        for j in 0..=m {
            env += falling * kappa.powi((m - j) as i32) / t.powi(j as i32 + 1);
            falling *= (m - j) as f64;
        }
        out.envelope_sup = out.envelope_sup.max(env * t.powf(nu));
    }
    Ok(out)
}

/// Fourth-order first and second differences at node `j` of samples `f`.
fn d1(f: &[f64], j: usize, h: f64) -> f64 {
    (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h)
}

fn d2(f: &[f64], j: usize, h: f64) -> f64 {
    (-f[j - 2] + 16.0 * f[j - 1] - 30.0 * f[j] + 16.0 * f[j + 1] - f[j + 2]) / (12.0 * h * h)
}

/// Residual of `Δ(r∂_r u) − r∂_r(Δu) = 2Δu` for radial `u` on `ℝⁿ`, with all
/// derivatives by fourth-order central differences on `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub max_residual: f64,
    /// `max |Δu|` over the same nodes.
    pub scale: f64,
    pub spacing: f64,
}

pub fn commutator_residual(u: &dyn Fn(f64) -> f64, grid: &RadialGrid, n: usize) -> Result<CommutatorReport> {
    if grid.len() < 9 {
        return Err(Error::Domain("commutator check needs at least 9 nodes".into()));
    }
    let h = grid.spacing();
    let r = grid.nodes();
    let f: Vec<f64> = r.iter().map(|&x| u(x)).collect();
    let k = n as f64 - 1.0;
    let len = r.len();
    let lap = |g: &[f64], j: usize| d2(g, j, h) + k / r[j] * d1(g, j, h);
    let mut euler = vec![0.0; len];
    let mut lap_u = vec![0.0; len];
    for j in 2..len - 2 {
        euler[j] = r[j] * d1(&f, j, h);
        lap_u[j] = lap(&f, j);
    }
    let mut out = CommutatorReport { max_residual: 0.0, scale: 0.0, spacing: h };
    for j in 4..len - 4 {
        let lhs = lap(&euler, j) - r[j] * d1(&lap_u, j, h);
        out.max_residual = out.max_residual.max((lhs - 2.0 * lap_u[j]).abs());
        out.scale = out.scale.max(lap_u[j].abs());
    }
    Ok(out)
}

/// Observed order of the commutator residual between `grid` and its refinement.
pub fn commutator_order(u: &dyn Fn(f64) -> f64, grid: &RadialGrid, n: usize) -> Result<f64> {
    let coarse = commutator_residual(u, grid, n)?.max_residual;
    let fine = commutator_residual(u, &grid.refined(), n)?.max_residual;
    Ok((coarse / fine).log2())
}

/// `‖f‖_{H²}/(‖f‖ + ‖Δf‖)` and `‖f‖²_{H¹}/(‖f‖‖f‖_{H²})` for the Dirichlet
/// difference Laplacian, with `‖f‖²_{H¹} = ‖f‖² + ‖D⁺f‖²` and
/// `‖f‖²_{H²} = ‖f‖²_{H¹} + ‖Δf‖²`. Summation by parts bounds them by 1 and √2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticRatios {
    pub h2_ratio: f64,
    pub interpolation_ratio: f64,
}

pub fn elliptic_norm_check(f: &[f64], grid: &RadialGrid) -> Result<EllipticRatios> {
    if f.len() != grid.len() {
        return Err(Error::Domain(format!("{} samples on a grid of {}", f.len(), grid.len())));
    }
    if f.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("f vanishes identically".into()));
    }
    let h = grid.spacing();
    let at = |j: isize| if j < 0 || j as usize >= f.len() { 0.0 } else { f[j as usize] };
    let l2: f64 = f.iter().map(|x| x * x).sum::<f64>() * h;
    let grad: f64 = (-1..f.len() as isize).map(|j| ((at(j + 1) - at(j)) / h).powi(2)).sum::<f64>() * h;
    let lap: f64 = (0..f.len() as isize)
        .map(|j| ((at(j + 1) - 2.0 * at(j) + at(j - 1)) / (h * h)).powi(2))
        .sum::<f64>()
        * h;
    let h1 = l2 + grad;
    let h2 = h1 + lap;
    Ok(EllipticRatios {
        h2_ratio: h2.sqrt() / (l2.sqrt() + lap.sqrt()),
        interpolation_ratio: h1 / (l2.sqrt() * h2.sqrt()),
    })
}
