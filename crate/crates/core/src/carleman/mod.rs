//! Phase and weight construction for the semiclassical Carleman estimate,
//! the pointwise lower bound on the weighted energy measure, and numerical
//! probes of the resulting estimates.

mod estimates;
mod goal;
mod phase;
mod psi;
mod weight;

pub use estimates::{
    carleman_ratio, energy_derivative_terms, energy_functional_check, interior_constant_sweep, mode_eigenvalue,
    near_origin_check, origin_test_function, quasimode_family, CarlemanRatio, EnergyCheck, InteriorSweep, PhaseJet,
    Potentials, SmoothTest, QUASIMODE_CENTERS,
};
pub use goal::{check_goal_estimate, random_long_range, GoalEstimateReport, LhsAtom};
pub use phase::{solve_phase, PhaseSolution, PHASE_TOLERANCE};
pub use psi::Psi;
pub use weight::{build_weight, Weight, WeightTriple};

use crate::error::{Error, Result};
use crate::model::{absorption_level, bracket, CarlemanConfig, Envelope, MediumSpec, PointMeasure};

/// Constants of the construction derived from a [`CarlemanConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct CarlemanSetup {
    pub config: CarlemanConfig,
    pub r0: f64,
    pub c0: f64,
    pub m: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl CarlemanSetup {
    pub fn gamma(&self) -> f64 {
        self.config.gamma()
    }

    /// `ψ(R₀) = c₀/R₀²`, the plateau value of ψ.
    pub fn psi_r0(&self) -> f64 {
        self.c0 / (self.r0 * self.r0)
    }

    /// Logarithmic growth rate `max(κ₁(r+1)⁻¹m(r), κ₂⟨r⟩^{−2s})` of the exterior weight.
    pub fn exterior_rate(&self, r: f64) -> f64 {
        let cfg = &self.config;
        (self.kappa1 * cfg.m.eval(r) / (r + 1.0)).max(self.kappa2 * bracket(r).powf(-2.0 * cfg.s))
    }
}

const SCAN_END: f64 = 1e8;
const SCAN_PER_DECADE: usize = 4000;

/// Geometric sample points on `[start, SCAN_END]`.
fn scan_points(start: f64) -> impl Iterator<Item = f64> {
    let decades = (SCAN_END / start).log10();
    let count = (decades * SCAN_PER_DECADE as f64).ceil() as usize;
    (0..=count).map(move |k| start * 10f64.powf(decades * k as f64 / count as f64))
}

/// First scan point after the last point where `holds` fails (`start` if it never fails).
fn settle_radius(start: f64, holds: impl Fn(f64) -> bool) -> Result<f64> {
    let mut settled = start;
    let mut last_failure = None;
    let mut previous_failed = false;
    for r in scan_points(start) {
        if holds(r) {
            if previous_failed {
                settled = r;
            }
            previous_failed = false;
        } else {
            last_failure = Some(r);
            previous_failed = true;
        }
    }
    match (previous_failed, last_failure) {
        (true, Some(r)) => Err(Error::NoR0 { last_failure: r }),
        _ => Ok(settled),
    }
}

/// Fills in `R₀`, `c₀`, `M`, `κ₁`, `κ₂`.
///
/// `sup_vl_plus_a(r)` bounds `V_L + a` over the whole potential family at
/// radius `r`. `R₀` is rounded up to a multiple of `spacing`.
///
/// Besides `2R₀`, `√(32c₀/a)` and the tail condition `κ₁(r+1)⁻¹m, κ₂⟨r⟩^{−2s} ≤ 2/r`,
/// `M` is enlarged until `⟨r⟩^{2s} ≤ r³` beyond it, which the exterior bound
/// on `h²q/(4r²)` uses.
pub fn derive_constants(
    config: CarlemanConfig,
    sup_vl_plus_a: &dyn Fn(f64) -> f64,
    spacing: f64,
) -> Result<CarlemanSetup> {
    config.validate()?;
    if !(spacing > 0.0) {
        return Err(Error::Domain("spacing must be positive".into()));
    }
    let cfg = &config;
    let quarter = cfg.a / 4.0;
    let r0_conditions = |r: f64| {
        sup_vl_plus_a(r) <= quarter
            && cfg.c_v * cfg.m.eval(r) <= quarter
            && 16.0 * cfg.c_v * cfg.c_v * bracket(r).powf(2.0 * cfg.s) / (r + 1.0).powf(1.0 + cfg.delta0) <= quarter
    };
    let settled = settle_radius(1.0, r0_conditions)?;
    let r0_raw = settled.max(cfg.mu.support_max()).max(1.0);
    let r0 = (r0_raw / spacing).ceil() * spacing;

    let c0 = (cfg.p.eval(0.0) + (1.0 + 16.0 * cfg.c_v) * cfg.c_v + cfg.mu.cumulative(r0)) * r0 * r0;
    let kappa1 = 4.0 * cfg.c_v / cfg.a;
    let kappa2 = (1.0f64).max((4.0 + 2.0 * cfg.h0 * cfg.h0) / cfg.a);

    let tail = settle_radius(1.0, |r| {
        kappa1 * cfg.m.eval(r) / (r + 1.0) <= 2.0 / r && kappa2 * bracket(r).powf(-2.0 * cfg.s) <= 2.0 / r
    })
    .map_err(|_| Error::ConstantsInconsistent("exterior weight rate never drops below 2/r".into()))?;
    let cubic = settle_radius(1.0, |r| bracket(r).powf(2.0 * cfg.s) <= r * r * r)
        .map_err(|_| Error::ConstantsInconsistent("<r>^{2s} <= r^3 fails for large r (needs 2s <= 3)".into()))?;
    let m = (2.0 * r0).max((32.0 * c0 / cfg.a).sqrt()).max(tail).max(cubic);
    Ok(CarlemanSetup { config, r0, c0, m, kappa1, kappa2 })
}

const ENVELOPE_CAP: f64 = 4.0;

/// Sup of `f` over a geometric sample of `(0, 10⁴]` plus the given extra points.
fn sampled_sup(f: impl Fn(f64) -> f64, extra: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for k in 0..=4000 {
        best = best.max(f(1e-3 * 10f64.powf(7.0 * k as f64 / 4000.0)));
    }
    for &r in extra {
        best = best.max(f(r));
    }
    best
}

/// Carleman constants for the rescaled wave operator of a medium, valid for
/// `h ≤ h₀` and `0 ≤ ε ≤ ε₀`.
///
/// `V_L + a ≤ (1 − c⁻²)₊` is enveloped by `p = scale·(1+r)^{−e}` with
/// `e = min(δ₀, 4)`. Upward jumps of `V_L` (where `c` increases outward) become
/// atoms of μ with mass `c_L⁻² − c_R⁻²`. `c_V` covers `V_S`, `W_L`, the ratio
/// `c₂/c₁ = (c_max/c_min)²` and the absolutely continuous variation of `V_L`
/// against `m = (1+r)^{−e_m}`.
pub fn medium_setup(medium: &MediumSpec, h0: f64, eps0: f64, s: f64, spacing: f64) -> Result<CarlemanSetup> {
    let ws = &medium.wavespeed;
    let (c_min, c_max) = ws.bounds();
    let a = absorption_level(c_min, h0, eps0)?;
    let jumps = ws.jumps();
    let jump_radii: Vec<f64> = jumps.iter().map(|j| j.0).collect();
    let excess = |r: f64| (1.0 - ws.eval(r).powi(-2)).max(1.0 - ws.eval_left(r).powi(-2)).max(0.0);

    let e_p = medium.delta0.min(ENVELOPE_CAP);
    let p_scale = sampled_sup(|r| excess(r) * (1.0 + r).powf(e_p), &jump_radii) + 0.01 * a;
    let e_m = if medium.delta1.is_finite() { (0.5 * (medium.delta1 - 1.0)).clamp(0.1, 1.0) } else { 1.0 };
    let variation = sampled_sup(|r| 2.0 * ws.derivative(r).abs() / c_min.powi(3) * (1.0 + r).powf(1.0 + e_m), &[]);

    let rho = medium.potential.decay_exponent();
    let delta0 = if rho.is_finite() { rho - 1.0 } else { ENVELOPE_CAP }.min(ENVELOPE_CAP);
    let short = sampled_sup(|r| h0 * medium.v(r) / (c_min * c_min) * (1.0 + r).powf(1.0 + delta0), &[]);
    let c_v = [short, 2.0 * h0 * eps0 / (c_min * c_min), (c_max / c_min).powi(2), variation, 1e-3]
        .into_iter()
        .fold(0.0, f64::max);

    let atoms: Vec<(f64, f64)> =
        jumps.iter().filter(|(_, l, rt)| rt > l).map(|&(r, l, rt)| (r, l.powi(-2) - rt.powi(-2))).collect();
    let config = CarlemanConfig {
        a,
        c_v,
        delta0,
        p: Envelope::new(p_scale, e_p),
        m: Envelope::new(1.0, e_m),
        mu: PointMeasure::atoms(atoms),
        h0,
        eps0,
        s,
    };
    derive_constants(config, &excess, spacing)
}

/// `M(E) = max(2R₀, √(32c₀/E))` across energies and the least-squares slope of
/// `log M` against `log E`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorScaling {
    pub energies: Vec<f64>,
    pub radii: Vec<f64>,
    pub slope: f64,
}

/// Exterior radius for a long-range part supported in `B(0, R₀)` with the
/// level `a` replaced by the energy `E`.
pub fn exterior_weight_scaling(r0: f64, c0: f64, energies: &[f64]) -> Result<ExteriorScaling> {
    if energies.len() < 2 || energies.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Domain("need at least two positive energies".into()));
    }
    let radii: Vec<f64> = energies.iter().map(|e| (2.0 * r0).max((32.0 * c0 / e).sqrt())).collect();
    let xs: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = radii.iter().map(|m| m.ln()).collect();
    Ok(ExteriorScaling { energies: energies.to_vec(), radii, slope: least_squares_slope(&xs, &ys) })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{Envelope, PointMeasure};

    /// a = 1, c_V = 1, p(0) = 1, μ = 0.5 δ_{1/2}.
    pub(crate) fn sample_config() -> CarlemanConfig {
        CarlemanConfig {
            a: 1.0,
            c_v: 1.0,
            delta0: 4.0,
            p: Envelope::new(1.0, 2.0),
            m: Envelope::new(1.0, 1.0),
            mu: PointMeasure::atoms(vec![(0.5, 0.5)]),
            h0: 1.0,
            eps0: 0.1,
            s: 0.75,
        }
    }

    pub(crate) fn sample_setup() -> CarlemanSetup {
        let cfg = sample_config();
        let p = cfg.p;
        derive_constants(cfg, &move |r| p.eval(r), 0.05).unwrap()
    }

    #[test]
    fn c0_formula() {
        // With R₀ = 1: c₀ = (1 + 17 + 0.5)·1.
        let cfg = sample_config();
        let c0 = (cfg.p.eval(0.0) + (1.0 + 16.0 * cfg.c_v) * cfg.c_v + cfg.mu.cumulative(1.0)) * 1.0;
        assert_eq!(c0, 18.5);
        assert!(((32.0 * c0).sqrt() - 24.33).abs() < 0.01);
        assert_eq!(cfg.gamma(), 0.125);
    }

    #[test]
    fn derived_constants_satisfy_conditions() {
        let s = sample_setup();
        let cfg = &s.config;
        assert!(s.r0 >= 1.0);
        for k in 1..2000 {
            let r = s.r0 * (1.0 + 0.01 * k as f64);
            assert!(cfg.p.eval(r) <= cfg.a / 4.0);
            assert!(cfg.c_v * cfg.m.eval(r) <= cfg.a / 4.0);
            assert!(16.0 * bracket(r).powf(2.0 * cfg.s) / (r + 1.0).powf(1.0 + cfg.delta0) <= cfg.a / 4.0);
        }
        assert!(s.m >= 2.0 * s.r0 && s.m >= (32.0 * s.c0 / cfg.a).sqrt());
        assert!((s.psi_r0() - (1.0 + 17.0 + 0.5)).abs() < 1e-12);
        assert_eq!(s.kappa1, 4.0);
        assert_eq!(s.kappa2, 6.0);
    }

    #[test]
    fn medium_setup_from_step() {
        use crate::model::Wavespeed;
        let outward = MediumSpec {
            wavespeed: Wavespeed::Layers { radii: vec![1.0, 2.0], speeds: vec![1.0, 1.5, 1.0] },
            ..MediumSpec::flat(3)
        };
        let s = medium_setup(&outward, 1.0, 0.1, 0.75, 0.05).unwrap();
        assert!((s.config.a - 0.99).abs() < 1e-12);
        assert_eq!(s.config.mu.atoms.len(), 1);
        assert!((s.config.mu.atoms[0].1 - (1.0 - 1.0 / 2.25)).abs() < 1e-12);
        assert!(s.r0 >= 2.0);
        let inward = MediumSpec {
            wavespeed: Wavespeed::Step { inner: 1.5, outer: 1.0, radius: 2.0 },
            ..MediumSpec::flat(3)
        };
        let s = medium_setup(&inward, 1.0, 0.1, 0.75, 0.05).unwrap();
        assert!(s.config.mu.atoms.is_empty());
        assert!(s.config.p.eval(1.0) >= 1.0 - 1.0 / 2.25);
    }

    #[test]
    fn no_r0_when_envelope_never_small() {
        let cfg = sample_config();
        let err = derive_constants(cfg, &|_| 1.0, 0.05).unwrap_err();
        assert!(matches!(err, Error::NoR0 { .. }));
    }

    #[test]
    fn exterior_scaling_slope() {
        let energies: Vec<f64> = (0..=20).map(|k| 1e-4 * 10f64.powf(k as f64 / 10.0)).collect();
        let sc = exterior_weight_scaling(1.0, 18.5, &energies).unwrap();
        assert!((sc.slope + 0.5).abs() < 1e-12);
        let half = exterior_weight_scaling(1.0, 18.5, &[1e-3, 5e-4]).unwrap();
        assert!((half.radii[1] / half.radii[0] - 2f64.sqrt()).abs() < 1e-12);
        let large = exterior_weight_scaling(1.0, 18.5, &[1e4, 2e4]).unwrap();
        assert_eq!(large.radii, vec![2.0, 2.0]);
    }
}
