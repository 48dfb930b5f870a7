use num_complex::Complex64;

use crate::error::{Error, Result};

/// Power-law envelope `scale·(1 + r)^{−exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub scale: f64,
    pub exponent: f64,
}

impl Envelope {
    pub fn new(scale: f64, exponent: f64) -> Self {
        Envelope { scale, exponent }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.scale * (1.0 + r).powf(-self.exponent)
    }
}

/// Finite nonnegative measure on `(0, ∞)` made of point masses and constant-density blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointMeasure {
    /// `(r, mass)` pairs.
    pub atoms: Vec<(f64, f64)>,
    /// `(a, b, density)` blocks on `(a, b]`.
    pub blocks: Vec<(f64, f64, f64)>,
}

impl PointMeasure {
    pub fn atoms(atoms: Vec<(f64, f64)>) -> Self {
        PointMeasure { atoms, blocks: Vec::new() }
    }

    /// `μ(0, r]`.
    pub fn cumulative(&self, r: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|(x, _)| *x <= r).map(|(_, m)| m).sum();
        let blocks: f64 = self
            .blocks
            .iter()
            .map(|&(a, b, d)| d * (r.min(b) - a).max(0.0))
            .sum();
        atoms + blocks
    }

    /// `μ(0, r)` (atoms at `r` excluded).
    pub fn cumulative_left(&self, r: f64) -> f64 {
        self.cumulative(r) - self.atom_mass(r)
    }

    pub fn atom_mass(&self, r: f64) -> f64 {
        self.atoms.iter().filter(|(x, _)| *x == r).map(|(_, m)| m).sum()
    }

    /// Density of the absolutely continuous part (right-continuous at block ends).
    pub fn density(&self, r: f64) -> f64 {
        self.blocks.iter().filter(|&&(a, b, _)| r >= a && r < b).map(|(_, _, d)| d).sum()
    }

    pub fn total(&self) -> f64 {
        self.cumulative(f64::INFINITY)
    }

    /// Right end of the support (0 for the zero measure).
    pub fn support_max(&self) -> f64 {
        let a = self.atoms.iter().filter(|(_, m)| *m != 0.0).map(|(r, _)| *r);
        let b = self.blocks.iter().filter(|(_, _, d)| *d != 0.0).map(|(_, b, _)| *b);
        a.chain(b).fold(0.0, f64::max)
    }

    /// Block boundaries and atom locations in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .atoms
            .iter()
            .map(|(r, _)| *r)
            .chain(self.blocks.iter().flat_map(|(a, b, _)| [*a, *b]))
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn validate(&self) -> Result<()> {
        if self.atoms.iter().any(|&(r, m)| !(r > 0.0) || m < 0.0 || !r.is_finite())
            || self.blocks.iter().any(|&(a, b, d)| !(a >= 0.0 && b > a && b.is_finite()) || d < 0.0)
        {
            return Err(Error::Hypothesis("mu must be a nonnegative compactly supported measure on (0, inf)".into()));
        }
        Ok(())
    }
}

/// Envelope constants of the Carleman construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanConfig {
    /// Level `a > 0` with `V_L + a ≤ p`.
    pub a: f64,
    pub c_v: f64,
    pub delta0: f64,
    /// Decreasing envelope `p` for `V_L + a`.
    pub p: Envelope,
    /// Envelope `m ∈ (0, 1]` in the variation bound `dV_L ≤ c_V(r+1)⁻¹m + μ`.
    pub m: Envelope,
    pub mu: PointMeasure,
    pub h0: f64,
    pub eps0: f64,
    /// Weight exponent with `1 < 2s < 1 + δ₀`.
    pub s: f64,
}

impl CarlemanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Hypothesis(msg.to_string()));
        if !(self.a > 0.0) {
            return bad("a must be positive");
        }
        if !(self.c_v > 0.0) || !(self.delta0 > 0.0) {
            return bad("c_V and delta0 must be positive");
        }
        if !(self.p.scale > 0.0 && self.p.exponent > 0.0) {
            return bad("p must be positive and decrease to zero");
        }
        if !(self.m.scale > 0.0 && self.m.scale <= 1.0 && self.m.exponent > 0.0) {
            return bad("m must take values in (0, 1] and tend to zero");
        }
        if !(1.0 < 2.0 * self.s && 2.0 * self.s < 1.0 + self.delta0) {
            return bad("s must satisfy 1 < 2s < 1 + delta0");
        }
        if !(self.h0 > 0.0) || self.eps0 < 0.0 {
            return bad("h0 must be positive and eps0 nonnegative");
        }
        self.mu.validate()
    }

    /// `γ = (8c_V)⁻¹`.
    pub fn gamma(&self) -> f64 {
        1.0 / (8.0 * self.c_v)
    }
}

/// Semiclassical parameters of a complex frequency λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalParams {
    /// `h = |Re λ|⁻¹`.
    pub h: f64,
    /// `ε = Im λ`.
    pub eps: f64,
    /// `sgn(Re λ)`.
    pub sign: f64,
}

impl SemiclassicalParams {
    pub fn from_frequency(lambda: Complex64) -> Result<Self> {
        if lambda.re == 0.0 || !lambda.re.is_finite() {
            return Err(Error::Domain(format!("Re λ must be nonzero, got λ = {lambda}")));
        }
        Ok(SemiclassicalParams { h: 1.0 / lambda.re.abs(), eps: lambda.im, sign: lambda.re.signum() })
    }

    /// The frequency `λ = sgn/h + iε`.
    pub fn frequency(&self) -> Complex64 {
        Complex64::new(self.sign / self.h, self.eps)
    }
}

/// `a = 1 − (sup c⁻²)h₀²ε₀²`, rejected unless positive.
pub fn absorption_level(c_min: f64, h0: f64, eps0: f64) -> Result<f64> {
    let a = 1.0 - h0 * h0 * eps0 * eps0 / (c_min * c_min);
    if a > 0.0 {
        Ok(a)
    } else {
        Err(Error::Hypothesis(format!("a = 1 - sup(c^-2) h0^2 eps0^2 = {a} is not positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semiclassical_parameters() {
        let p = SemiclassicalParams::from_frequency(Complex64::new(2.0, 0.1)).unwrap();
        assert_eq!((p.h, p.eps, p.sign), (0.5, 0.1, 1.0));
        assert!(SemiclassicalParams::from_frequency(Complex64::new(0.0, 1.0)).is_err());
        let q = SemiclassicalParams::from_frequency(Complex64::new(-4.0, 0.0)).unwrap();
        assert_eq!(q.frequency(), Complex64::new(-4.0, 0.0));
    }

    #[test]
    fn absorption_level_rejects_large_eps0() {
        assert!((absorption_level(1.0, 1.0, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert!(absorption_level(0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn measure_cumulative() {
        let mu = PointMeasure { atoms: vec![(1.0, 0.5)], blocks: vec![(2.0, 3.0, 0.25)] };
        assert_eq!(mu.cumulative(0.5), 0.0);
        assert_eq!(mu.cumulative(1.0), 0.5);
        assert_eq!(mu.cumulative_left(1.0), 0.0);
        assert_eq!(mu.cumulative(2.5), 0.625);
        assert_eq!(mu.total(), 0.75);
        assert_eq!(mu.support_max(), 3.0);
        assert_eq!(mu.density(2.0), 0.25);
    }
}
