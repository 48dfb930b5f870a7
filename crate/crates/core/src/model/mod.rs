//! Media, grids, BV calculus and hypothesis validation.

mod bv;
mod params;

pub use bv::{Atom, BvProfile};
pub use params::{
    absorption_level, CarlemanConfig, Envelope, PointMeasure, SemiclassicalParams,
};

use crate::error::{Error, Result};

/// Japanese bracket `⟨r⟩ = (1 + r²)^{1/2}`.
pub fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

/// Uniform radial grid `r_j = j·spacing`, `j = 1..=n_interior`; `r_max` is a
/// Dirichlet node that carries no unknown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid {
    r_max: f64,
    n_interior: usize,
    spacing: f64,
}

impl RadialGrid {
    pub fn new(r_max: f64, n_interior: usize) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() || n_interior == 0 {
            return Err(Error::Domain(format!("bad grid r_max = {r_max}, n = {n_interior}")));
        }
        Ok(RadialGrid { r_max, n_interior, spacing: r_max / (n_interior as f64 + 1.0) })
    }

    pub fn with_spacing(spacing: f64, n_interior: usize) -> Result<Self> {
        Self::new(spacing * (n_interior as f64 + 1.0), n_interior)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_interior
    }

    pub fn is_empty(&self) -> bool {
        self.n_interior == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Node `r_j` for `j` in `1..=n_interior` (index 0 is the origin).
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n_interior).map(|j| self.node(j)).collect()
    }

    /// Same interval with the spacing halved.
    pub fn refined(&self) -> Self {
        RadialGrid::new(self.r_max, 2 * self.n_interior + 1).expect("refinement of a valid grid")
    }
}

/// Radial wavespeed profiles. Values are right-continuous at jumps.
#[derive(Debug, Clone, PartialEq)]
pub enum Wavespeed {
    Constant(f64),
    /// `inner` on `(0, radius)`, `outer` from `radius` on.
    Step { inner: f64, outer: f64, radius: f64 },
    /// Piecewise constant: `speeds[k]` on `[radii[k-1], radii[k])`.
    Layers { radii: Vec<f64>, speeds: Vec<f64> },
    /// `1 + amplitude·(1 − (r/radius)²)²` inside `radius`, 1 outside (C¹).
    SmoothBump { amplitude: f64, radius: f64 },
    /// `1 + amplitude·⟨r⟩^{−rate}`.
    Decaying { amplitude: f64, rate: f64 },
}

impl Wavespeed {
    fn layers(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Wavespeed::Step { inner, outer, radius } => Some((vec![*radius], vec![*inner, *outer])),
            Wavespeed::Layers { radii, speeds } => Some((radii.clone(), speeds.clone())),
            _ => None,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Wavespeed::Constant(c) => *c,
            Wavespeed::SmoothBump { amplitude, radius } => {
                if r < *radius {
                    let x = r / radius;
                    1.0 + amplitude * (1.0 - x * x).powi(2)
                } else {
                    1.0
                }
            }
            Wavespeed::Decaying { amplitude, rate } => 1.0 + amplitude * bracket(r).powf(-rate),
            _ => {
                let (radii, speeds) = self.layers().unwrap();
                speeds[radii.partition_point(|&x| x <= r)]
            }
        }
    }

    /// Left limit `c(r⁻)`.
    pub fn eval_left(&self, r: f64) -> f64 {
        match self.layers() {
            Some((radii, speeds)) => speeds[radii.partition_point(|&x| x < r)],
            None => self.eval(r),
        }
    }

    /// Absolutely continuous part of `∂_r c`.
    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Wavespeed::SmoothBump { amplitude, radius } if r < *radius => {
                let x = r / radius;
                -4.0 * amplitude * x * (1.0 - x * x) / radius
            }
            Wavespeed::Decaying { amplitude, rate } => {
                -amplitude * rate * r * bracket(r).powf(-rate - 2.0)
            }
            _ => 0.0,
        }
    }

    /// Jumps as `(radius, left, right)`.
    pub fn jumps(&self) -> Vec<(f64, f64, f64)> {
        match self.layers() {
            Some((radii, speeds)) => radii
                .iter()
                .enumerate()
                .filter(|(k, _)| speeds[*k] != speeds[k + 1])
                .map(|(k, &r)| (r, speeds[k], speeds[k + 1]))
                .collect(),
            None => Vec::new(),
        }
    }

    /// `(c_min, c_max)` over `(0, ∞)`.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Wavespeed::Constant(c) => (*c, *c),
            Wavespeed::SmoothBump { amplitude, .. } | Wavespeed::Decaying { amplitude, .. } => {
                (1.0f64.min(1.0 + amplitude), 1.0f64.max(1.0 + amplitude))
            }
            _ => {
                let (_, speeds) = self.layers().unwrap();
                let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }

    /// `∂_r c` as a BV measure on `[0, r_max]` with `cells` uniform cells.
    pub fn variation_profile(&self, r_max: f64, cells: usize) -> Result<BvProfile> {
        let atoms = self
            .jumps()
            .into_iter()
            .filter(|(r, _, _)| *r < r_max)
            .map(|(r, l, rt)| Atom::jump(r, l, rt))
            .collect();
        let value = |r: f64| self.eval(r);
        let deriv = |r: f64| self.derivative(r);
        BvProfile::from_fn(0.0, r_max, cells, &deriv, Some(&value), atoms)
    }
}

/// Nonnegative radial potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    /// `amplitude·⟨r⟩^{−rho}`.
    Bracket { amplitude: f64, rho: f64 },
    /// `amplitude·exp(−r²/width²)`.
    Gaussian { amplitude: f64, width: f64 },
}

impl Potential {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Bracket { amplitude, rho } => amplitude * bracket(r).powf(-rho),
            Potential::Gaussian { amplitude, width } => amplitude * (-(r / width).powi(2)).exp(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Bracket { amplitude, .. } | Potential::Gaussian { amplitude, .. } => *amplitude == 0.0,
        }
    }

    /// Decay exponent ρ with `V ≲ ⟨r⟩^{−ρ}` (infinite for rapidly decaying profiles).
    pub fn decay_exponent(&self) -> f64 {
        match self {
            Potential::Bracket { rho, amplitude } if *amplitude != 0.0 => *rho,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumSpec {
    pub wavespeed: Wavespeed,
    pub potential: Potential,
    pub dimension: usize,
    /// Declared δ₀ with `|1 − c| ≤ witness·⟨r⟩^{−δ₀}`.
    pub delta0: f64,
    /// Declared δ₁ with `|∂_r c|_ac ≤ witness·⟨r⟩^{−δ₁}`.
    pub delta1: f64,
    pub witness: f64,
    pub potential_lipschitz: bool,
}

impl MediumSpec {
    /// Flat medium `c ≡ 1`, `V ≡ 0`.
    pub fn flat(dimension: usize) -> Self {
        MediumSpec {
            wavespeed: Wavespeed::Constant(1.0),
            potential: Potential::Zero,
            dimension,
            delta0: f64::INFINITY,
            delta1: f64::INFINITY,
            witness: 1.0,
            potential_lipschitz: true,
        }
    }

    pub fn c(&self, r: f64) -> f64 {
        self.wavespeed.eval(r)
    }

    pub fn v(&self, r: f64) -> f64 {
        self.potential.eval(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumReport {
    pub checks: Vec<HypothesisCheck>,
    /// Combined decay exponent of `λ²V_c + c⁻²V`.
    pub combined_decay: f64,
}

impl MediumReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&HypothesisCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Threshold on the potential decay exponent ρ by dimension (`None` when V must vanish).
pub fn potential_decay_threshold(n: usize) -> Option<f64> {
    match n {
        2 => None,
        3 => Some(3.5),
        4 => Some(5.0),
        _ => Some(3.0f64.max(n as f64 / 2.0)),
    }
}

/// Reports each hypothesis on the medium as pass/fail. Witness bounds are
/// sampled on a geometric radius grid up to 10⁴.
pub fn validate_medium(medium: &MediumSpec) -> MediumReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        checks.push(HypothesisCheck { name: name.to_string(), pass, detail })
    };
    let n = medium.dimension;
    push("dimension n >= 2", n >= 2, format!("n = {n}"));

    let (c_min, c_max) = medium.wavespeed.bounds();
    push(
        "0 < c_min <= c <= c_max < inf",
        c_min > 0.0 && c_max.is_finite(),
        format!("c_min = {c_min}, c_max = {c_max}"),
    );

    let samples: Vec<f64> = std::iter::once(0.0)
        .chain((0..=400).map(|k| 1e-3 * 10f64.powf(7.0 * k as f64 / 400.0)))
        .collect();
    let worst = |f: &dyn Fn(f64) -> f64, rate: f64| {
        samples
            .iter()
            .map(|&r| f(r) * bracket(r).powf(rate.min(1e3)))
            .fold(0.0f64, f64::max)
    };
    let w0 = worst(&|r| (1.0 - medium.c(r)).abs().max((1.0 - medium.wavespeed.eval_left(r)).abs()), medium.delta0);
    push("delta0 > 2", medium.delta0 > 2.0, format!("delta0 = {}", medium.delta0));
    push(
        "|1 - c| <= C<r>^-delta0",
        w0 <= medium.witness * (1.0 + 1e-12),
        format!("sampled sup |1-c|<r>^delta0 = {w0:.4e}, C = {}", medium.witness),
    );
    let w1 = worst(&|r| medium.wavespeed.derivative(r).abs(), medium.delta1);
    push("delta1 > 1", medium.delta1 > 1.0, format!("delta1 = {}", medium.delta1));
    push(
        "|d_r c| <= C<r>^-delta1",
        w1 <= medium.witness * (1.0 + 1e-12),
        format!("sampled sup |c'|<r>^delta1 = {w1:.4e}, C = {}", medium.witness),
    );

    let v_min = samples.iter().map(|&r| medium.v(r)).fold(f64::INFINITY, f64::min);
    push("V >= 0", v_min >= 0.0, format!("sampled min V = {v_min:.4e}"));

    let rho = medium.potential.decay_exponent();
    match potential_decay_threshold(n) {
        None => push(
            "n=2 requires V ≡ 0",
            medium.potential.is_zero(),
            if medium.potential.is_zero() { "V ≡ 0".into() } else { "n=2 requires V ≡ 0".into() },
        ),
        Some(th) => push(
            "rho above dimension threshold",
            medium.potential.is_zero() || rho > th,
            format!("rho = {rho}, needs > {th}"),
        ),
    }
    if n == 4 {
        push(
            "n=4 requires Lipschitz V",
            medium.potential.is_zero() || medium.potential_lipschitz,
            format!("lipschitz flag = {}", medium.potential_lipschitz),
        );
    }
    let combined_decay = medium.delta0.min(if medium.potential.is_zero() { f64::INFINITY } else { rho });
    push(
        "combined decay delta > 2",
        combined_decay > 2.0,
        format!("min(delta0, rho) = {combined_decay}"),
    );
    MediumReport { checks, combined_decay }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(n: usize, rho: f64) -> MediumSpec {
        MediumSpec {
            wavespeed: Wavespeed::Decaying { amplitude: 0.2, rate: 2.5 },
            potential: Potential::Bracket { amplitude: 1.0, rho },
            dimension: n,
            delta0: 2.5,
            delta1: 1.5,
            witness: 1.0,
            potential_lipschitz: true,
        }
    }

    #[test]
    fn grid_layout() {
        let g = RadialGrid::new(10.0, 9).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.nodes(), (1..=9).map(|j| j as f64).collect::<Vec<_>>());
        assert_eq!(g.refined().spacing(), 0.5);
        assert!(RadialGrid::new(0.0, 3).is_err());
    }

    #[test]
    fn three_dimensional_medium_passes() {
        let report = validate_medium(&medium(3, 4.0));
        assert!(report.all_pass(), "{:?}", report.failures());
        assert_eq!(report.combined_decay, 2.5);
    }

    #[test]
    fn two_dimensional_medium_needs_zero_potential() {
        let report = validate_medium(&medium(2, 4.0));
        let fails = report.failures();
        assert_eq!(fails.len(), 1);
        assert_eq!(fails[0].detail, "n=2 requires V ≡ 0");
    }

    #[test]
    fn five_dimensional_threshold() {
        let report = validate_medium(&medium(5, 2.9));
        assert!(report.failures().iter().any(|c| c.name == "rho above dimension threshold"));
        assert_eq!(potential_decay_threshold(5), Some(3.0));
        assert_eq!(potential_decay_threshold(8), Some(4.0));
        assert!(validate_medium(&medium(5, 3.1)).all_pass());
    }

    #[test]
    fn four_dimensions_need_lipschitz() {
        let mut m = medium(4, 6.0);
        assert!(validate_medium(&m).all_pass());
        m.potential_lipschitz = false;
        assert!(!validate_medium(&m).all_pass());
    }

    #[test]
    fn step_wavespeed_jumps() {
        let c = Wavespeed::Step { inner: 0.5, outer: 1.0, radius: 1.0 };
        assert_eq!(c.eval(1.0), 1.0);
        assert_eq!(c.eval_left(1.0), 0.5);
        assert_eq!(c.jumps(), vec![(1.0, 0.5, 1.0)]);
        let dc = c.variation_profile(4.0, 40).unwrap();
        assert_eq!(dc.integrate(0.5, 1.5).unwrap(), 0.5);
    }

    #[test]
    fn constant_speed_other_than_one_fails_decay() {
        let mut m = MediumSpec::flat(3);
        m.wavespeed = Wavespeed::Constant(2.0);
        m.delta0 = 3.0;
        assert!(!validate_medium(&m).all_pass());
    }
}
