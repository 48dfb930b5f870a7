use crate::error::{Error, Result};
use crate::model::{bracket, Envelope, RadialGrid};
use crate::quad;

use super::CarlemanSetup;

const TABLE_STEP: f64 = 0.25;
const GAUSS_POINTS: usize = 8;

/// The weight `w = r²` on `(0, M]`, `M²exp(∫_M^r g)` beyond, with
/// `g = max(κ₁(r+1)⁻¹m, κ₂⟨r⟩^{−2s})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub m: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub s: f64,
    pub m_env: Envelope,
    /// `∫_M^{M + k·TABLE_STEP} g` for `k = 0, 1, …`.
    exponent_table: Vec<f64>,
}

impl Weight {
    pub fn new(setup: &CarlemanSetup, r_end: f64) -> Self {
        Self::from_parts(setup.m, setup.kappa1, setup.kappa2, setup.config.s, setup.config.m, r_end)
    }

    pub fn from_parts(m: f64, kappa1: f64, kappa2: f64, s: f64, m_env: Envelope, r_end: f64) -> Self {
        let mut w = Weight { m, kappa1, kappa2, s, m_env, exponent_table: vec![0.0] };
        let cells = ((r_end - m).max(0.0) / TABLE_STEP).ceil() as usize + 1;
        let mut acc = 0.0;
        for k in 0..cells {
            let lo = m + k as f64 * TABLE_STEP;
            acc += w.rate_integral(lo, lo + TABLE_STEP);
            w.exponent_table.push(acc);
        }
        w
    }

    /// `g(r)` (defined for all r; only used beyond M).
    pub fn rate(&self, r: f64) -> f64 {
        (self.kappa1 * self.m_env.eval(r) / (r + 1.0)).max(self.kappa2 * bracket(r).powf(-2.0 * self.s))
    }

    fn branch_gap(&self, r: f64) -> f64 {
        self.kappa1 * self.m_env.eval(r) / (r + 1.0) - self.kappa2 * bracket(r).powf(-2.0 * self.s)
    }

    /// `∫_a^b g` with a split where the two branches cross.
    fn rate_integral(&self, a: f64, b: f64) -> f64 {
        let (ga, gb) = (self.branch_gap(a), self.branch_gap(b));
        if ga * gb < 0.0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if self.branch_gap(mid) * ga > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            let c = 0.5 * (lo + hi);
            return self.rate_integral_smooth(a, c) + self.rate_integral_smooth(c, b);
        }
        self.rate_integral_smooth(a, b)
    }

    fn rate_integral_smooth(&self, a: f64, b: f64) -> f64 {
        quad::integrate(|r| self.rate(r), a, b, 1, GAUSS_POINTS)
    }

    /// `∫_M^r g` for `r ≥ M`.
    fn exponent(&self, r: f64) -> f64 {
        let k = ((r - self.m) / TABLE_STEP).floor() as usize;
        if k + 1 < self.exponent_table.len() {
            let lo = self.m + k as f64 * TABLE_STEP;
            self.exponent_table[k] + self.rate_integral(lo, r)
        } else {
            let last = self.exponent_table.len() - 1;
            let mut lo = self.m + last as f64 * TABLE_STEP;
            let mut acc = self.exponent_table[last];
            let mut width = TABLE_STEP;
            while lo < r {
                let hi = (lo + width).min(r);
                acc += self.rate_integral(lo, hi);
                lo = hi;
                width *= 1.5;
            }
            acc
        }
    }

    pub fn w(&self, r: f64) -> f64 {
        if r <= self.m {
            r * r
        } else {
            self.m * self.m * self.exponent(r).exp()
        }
    }

    /// `w′`, right-sided at `M`.
    pub fn w_prime(&self, r: f64) -> f64 {
        if r < self.m {
            2.0 * r
        } else {
            self.rate(r) * self.w(r)
        }
    }

    /// `w′`, left-sided at `M`.
    pub fn w_prime_left(&self, r: f64) -> f64 {
        if r <= self.m {
            2.0 * r
        } else {
            self.w_prime(r)
        }
    }

    /// `q = 2w/r − w′` (right-sided).
    pub fn q(&self, r: f64) -> f64 {
        2.0 * self.w(r) / r - self.w_prime(r)
    }

    /// `w(∞)`: the exponent is integrated to `10⁶·M` and the power-law tail of
    /// the dominant branch is added in closed form.
    pub fn w_infinity(&self) -> f64 {
        let far = 1e6 * self.m.max(1.0);
        let body = self.exponent(far);
        let e = self.m_env.exponent;
        let tail1 = self.kappa1 * self.m_env.scale * (1.0 + far).powf(-e) / e;
        let tail2 = self.kappa2 * far.powf(1.0 - 2.0 * self.s) / (2.0 * self.s - 1.0);
        self.m * self.m * (body + tail1.max(tail2)).exp()
    }
}

/// Samples of `w`, `w′` and `q` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTriple {
    pub weight: Weight,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prime: Vec<f64>,
    pub q: Vec<f64>,
}

/// Builds the weight and checks `q ≥ 0` at every grid node.
pub fn build_weight(setup: &CarlemanSetup, grid: &RadialGrid) -> Result<WeightTriple> {
    let weight = Weight::new(setup, grid.r_max());
    let r = grid.nodes();
    let w: Vec<f64> = r.iter().map(|&x| weight.w(x)).collect();
    let w_prime: Vec<f64> = r.iter().map(|&x| weight.w_prime(x)).collect();
    let q: Vec<f64> = r.iter().zip(&w).zip(&w_prime).map(|((x, w), wp)| 2.0 * w / x - wp).collect();
    if let Some((x, qv)) = r.iter().zip(&q).find(|(_, qv)| **qv < -1e-12 * (1.0 + qv.abs())) {
        return Err(Error::ConstantsInconsistent(format!("q = 2w/r - w' = {qv} < 0 at r = {x}; M too small")));
    }
    Ok(WeightTriple { weight, r, w, w_prime, q })
}

impl WeightTriple {
    /// CSV with columns `r,w,w_prime,q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,w,w_prime,q\n");
        for i in 0..self.r.len() {
            out.push_str(&format!("{},{},{},{}\n", self.r[i], self.w[i], self.w_prime[i], self.q[i]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::tests::sample_setup;

    #[test]
    fn weight_shape() {
        let setup = sample_setup();
        let m = setup.m;
        let grid = RadialGrid::new(3.0 * m, 3000).unwrap();
        let triple = build_weight(&setup, &grid).unwrap();
        let wt = &triple.weight;
        assert_eq!(wt.w(m / 2.0), m * m / 4.0);
        for (i, &r) in triple.r.iter().enumerate() {
            if r <= m {
                assert!(triple.q[i].abs() < 1e-9 * r);
            }
            assert!(triple.q[i] >= -1e-12 * r);
            // w/w′ ≤ r/2 inside, ≤ ⟨r⟩^{2s}/κ₂ outside.
            let ratio = triple.w[i] / triple.w_prime[i];
            let bound = if r <= m { r / 2.0 } else { bracket(r).powf(2.0 * setup.config.s) / setup.kappa2 };
            assert!(ratio <= bound * (1.0 + 1e-12));
        }
        assert!(triple.w.windows(2).all(|p| p[1] >= p[0]));
        let w_inf = wt.w_infinity();
        assert!(w_inf.is_finite() && w_inf >= wt.w(3.0 * m));
    }

    #[test]
    fn exponent_matches_direct_quadrature() {
        let setup = sample_setup();
        let wt = Weight::new(&setup, 2.0 * setup.m);
        let m = setup.m;
        for &r in &[m + 0.1, m + 3.7, 1.9 * m, 5.0 * m] {
            let direct = quad::integrate(|x| wt.rate(x), m, r, 4000, 8);
            let got = (wt.w(r) / (m * m)).ln();
            assert!((got - direct).abs() < 1e-9, "r = {r}: {got} vs {direct}");
        }
    }

    #[test]
    fn derivative_is_consistent() {
        let setup = sample_setup();
        let wt = Weight::new(&setup, 2.0 * setup.m);
        let r = 1.3 * setup.m;
        let d = 1e-5;
        let fd = (wt.w(r + d) - wt.w(r - d)) / (2.0 * d);
        assert!((fd - wt.w_prime(r)).abs() < 1e-6 * wt.w_prime(r));
    }
}
