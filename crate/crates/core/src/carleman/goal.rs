use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{bracket, Atom, BvProfile};

use super::phase::PhaseSolution;
use super::weight::Weight;
use super::CarlemanSetup;

/// Atom of the left-hand measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsAtom {
    pub r: f64,
    pub mass: f64,
}

/// Pointwise comparison of the left-hand measure
/// `d(w((φ′)² − hφ″)) − V_L w′ − c_V(r+1)⁻¹m w − wμ − 16c_V²w(r+1)^{−1−δ₀} − h²q/(4r²)`
/// against `a·r` on `(0, M]` and `⟨r⟩^{−2s}` beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalEstimateReport {
    pub r: Vec<f64>,
    /// Smaller of the two one-sided densities at each node.
    pub lhs_density: Vec<f64>,
    pub rhs_density: Vec<f64>,
    pub lhs_atoms: Vec<LhsAtom>,
    /// `min(lhs − rhs)` over nodes and sides.
    pub margin: f64,
    /// Radius where the margin is attained.
    pub worst_r: f64,
    pub pass: bool,
}

impl GoalEstimateReport {
    /// CSV with columns `r,lhs_density,rhs_density,margin`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,lhs_density,rhs_density,margin\n");
        for i in 0..self.r.len() {
            let (l, rh) = (self.lhs_density[i], self.rhs_density[i]);
            out.push_str(&format!("{},{},{},{}\n", self.r[i], l, rh, l - rh));
        }
        out
    }
}

fn left_value(v: &BvProfile, r: f64) -> Result<f64> {
    match v.atom_at(r) {
        Some(at) => Ok(at.left),
        None => v.value_at(r),
    }
}

/// Checks `V_L + a ≤ p` and `dV_L ≤ c_V(r+1)⁻¹m + μ` on the profile's nodes
/// (and cell midpoints for the density).
fn validate_long_range(v: &BvProfile, setup: &CarlemanSetup) -> Result<()> {
    let cfg = &setup.config;
    let values = v
        .values()
        .ok_or_else(|| Error::Hypothesis("V_L profile must carry values".into()))?;
    let nodes = v.nodes();
    for (i, &r) in nodes.iter().enumerate() {
        let left = left_value(v, r)?;
        let worst = values[i].max(left);
        if worst + cfg.a > cfg.p.eval(r) * (1.0 + 1e-12) + 1e-14 {
            return Err(Error::Hypothesis(format!(
                "V_L + a <= p fails at r = {r}: V_L + a = {}, p = {}",
                worst + cfg.a,
                cfg.p.eval(r)
            )));
        }
    }
    let dens = v.density();
    let bound = |r: f64, left: bool| {
        let mu_density: f64 = cfg
            .mu
            .blocks
            .iter()
            .filter(|&&(a, b, _)| if left { r > a && r <= b } else { r >= a && r < b })
            .map(|(_, _, d)| d)
            .sum();
        cfg.c_v * cfg.m.eval(r) / (r + 1.0) + mu_density
    };
    for i in 0..nodes.len() {
        let r = nodes[i];
        if r <= 0.0 {
            continue;
        }
        let allowed = bound(r, false).max(bound(r, true));
        if dens[i] > allowed * (1.0 + 1e-12) + 1e-14 {
            return Err(Error::Hypothesis(format!(
                "dV_L <= c_V (r+1)^-1 m + mu fails at r = {r}: density {} > {allowed}",
                dens[i]
            )));
        }
        if i + 1 < nodes.len() {
            let mid = 0.5 * (r + nodes[i + 1]);
            let d_mid = 0.5 * (dens[i] + dens[i + 1]);
            if d_mid > bound(mid, false) * (1.0 + 1e-12) + 1e-14 {
                return Err(Error::Hypothesis(format!(
                    "dV_L <= c_V (r+1)^-1 m + mu fails at r = {mid}: density {d_mid}"
                )));
            }
        }
    }
    for at in v.atoms() {
        if at.mass > 0.0 {
            let budget = cfg.mu.atom_mass(at.r);
            if at.mass > budget * (1.0 + 1e-12) {
                return Err(Error::Hypothesis(format!(
                    "upward jump {} of V_L at r = {} exceeds the mu atom {budget}",
                    at.mass, at.r
                )));
            }
        }
    }
    Ok(())
}

/// Verifies the lower bound on the left-hand measure for each sampled
/// direction profile of `V_L`. `(φ′)² − hφ″ = ψ` holds by construction of the
/// phase, so the measure `d(w((φ′)² − hφ″))` is assembled as `d(wψ) = w′ψ dr + w dψ`.
/// Densities are compared on both sides of every node; the `h²q/(4r²)` term
/// enters only for `n = 2`.
pub fn check_goal_estimate(
    v_l: &[BvProfile],
    setup: &CarlemanSetup,
    phase: &PhaseSolution,
    weight: &Weight,
    n: usize,
) -> Result<GoalEstimateReport> {
    if v_l.is_empty() {
        return Err(Error::Domain("no V_L profiles given".into()));
    }
    if (phase.m() - setup.m).abs() > 1e-12 * setup.m || (weight.m - setup.m).abs() > 1e-12 * setup.m {
        return Err(Error::ConstantsInconsistent("phase, weight and setup disagree on M".into()));
    }
    for v in v_l {
        validate_long_range(v, setup)?;
    }
    let cfg = &setup.config;
    let h = phase.h;
    let psi = phase.psi();
    let m = setup.m;

    let mut r_out = Vec::new();
    let mut lhs_out = Vec::new();
    let mut rhs_out = Vec::new();
    let mut margin = f64::INFINITY;
    let mut worst_r = 0.0;
    let mut pass = true;

    for v in v_l {
        let mut nodes: Vec<f64> = v.nodes().iter().copied().filter(|&r| r > 0.0).collect();
        let (_, r_end) = v.domain();
        nodes.extend(psi.breakpoints().into_iter().filter(|&b| b <= r_end));
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        for &r in &nodes {
            let mut node_lhs = f64::INFINITY;
            let mut node_rhs = 0.0;
            for left in [true, false] {
                let w = weight.w(r);
                let wp = if left { weight.w_prime_left(r) } else { weight.w_prime(r) };
                let psi_v = if left { psi.value_left(r) } else { psi.value(r) };
                let psi_d = if left { psi.density_left(r) } else { psi.density(r) };
                let vl = if left { left_value(v, r)? } else { v.value_at(r)? };
                let mu_ac: f64 = cfg
                    .mu
                    .blocks
                    .iter()
                    .filter(|&&(a, b, _)| if left { r > a && r <= b } else { r >= a && r < b })
                    .map(|(_, _, d)| d)
                    .sum();
                let q = 2.0 * w / r - wp;
                let terms = [
                    wp * psi_v,
                    w * psi_d,
                    -vl * wp,
                    -cfg.c_v * cfg.m.eval(r) / (r + 1.0) * w,
                    -w * mu_ac,
                    -16.0 * cfg.c_v * cfg.c_v * w * (r + 1.0).powf(-1.0 - cfg.delta0),
                    if n == 2 { -h * h * q / (4.0 * r * r) } else { 0.0 },
                ];
                let lhs: f64 = terms.iter().sum();
                let inside = if left { r <= m } else { r < m };
                let rhs = if inside { cfg.a * r } else { bracket(r).powf(-2.0 * cfg.s) };
                let slack = 1e-12 * terms.iter().map(|t| t.abs()).sum::<f64>();
                if lhs - rhs < -slack {
                    pass = false;
                }
                if lhs - rhs < margin {
                    margin = lhs - rhs;
                    worst_r = r;
                }
                if lhs - rhs < node_lhs - node_rhs {
                    node_lhs = lhs;
                    node_rhs = rhs;
                }
            }
            r_out.push(r);
            lhs_out.push(node_lhs);
            rhs_out.push(node_rhs);
        }
    }

    // d(wψ) has atoms w·μ_k at the atoms of μ; −wμ removes them.
    let mut lhs_atoms = Vec::new();
    for (r, _) in psi.atoms() {
        if r > m {
            continue;
        }
        let w = weight.w(r);
        let mass = w * (psi.value(r) - psi.value_left(r)) - w * cfg.mu.atom_mass(r);
        if mass < -1e-12 * w * cfg.mu.atom_mass(r).max(1.0) {
            pass = false;
        }
        lhs_atoms.push(LhsAtom { r, mass });
    }
    Ok(GoalEstimateReport {
        r: r_out,
        lhs_density: lhs_out,
        rhs_density: rhs_out,
        lhs_atoms,
        margin,
        worst_r,
        pass,
    })
}

/// A random long-range profile admissible for `setup`:
/// `V_L + a = αp(r) − Σ_{r_k > r} J_k + σ(sin ωr − 1)e^{−r}` on `[0, r_end]`,
/// with upward jumps `J_k ≤ μ({r_k})` at up to `max_jumps` atoms of μ and `σ`
/// small enough that the smooth part respects `c_V(r+1)⁻¹m`.
pub fn random_long_range<R: Rng>(
    setup: &CarlemanSetup,
    rng: &mut R,
    max_jumps: usize,
    r_end: f64,
    cells: usize,
) -> Result<BvProfile> {
    let cfg = &setup.config;
    let alpha: f64 = rng.gen_range(0.0..=1.0);
    let omega: f64 = rng.gen_range(0.0..5.0);
    let e = cfg.m.exponent;
    // max_r e^{−r}(1+r)^{1+e} is attained at r = e.
    let peak = (-e).exp() * (1.0 + e).powf(1.0 + e);
    let sigma_max = cfg.c_v * cfg.m.scale / ((omega + 2.0) * peak);
    let sigma = rng.gen_range(0.0..=1.0) * sigma_max;

    let mut candidates: Vec<(f64, f64)> =
        cfg.mu.atoms.iter().copied().filter(|(r, m)| *m > 0.0 && *r < r_end).collect();
    let mut jumps = Vec::new();
    while jumps.len() < max_jumps && !candidates.is_empty() {
        let k = rng.gen_range(0..candidates.len());
        let (r, mass) = candidates.swap_remove(k);
        jumps.push((r, rng.gen_range(0.0..=1.0) * mass));
    }
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));

    let p = cfg.p;
    let a = cfg.a;
    let smooth = move |r: f64| alpha * p.eval(r) + sigma * ((omega * r).sin() - 1.0) * (-r).exp();
    let pending = |r: f64, strict: bool| -> f64 {
        jumps.iter().filter(|(rk, _)| if strict { *rk > r } else { *rk >= r }).map(|(_, j)| j).sum()
    };
    let value = |r: f64| smooth(r) - pending(r, true) - a;
    let density = |r: f64| {
        let dp = -p.exponent * p.scale * (1.0 + r).powf(-p.exponent - 1.0);
        alpha * dp + sigma * (omega * (omega * r).cos() - (omega * r).sin() + 1.0) * (-r).exp()
    };
    let atoms: Vec<Atom> = jumps
        .iter()
        .map(|&(r, _)| {
            let right = value(r);
            Atom::jump(r, smooth(r) - pending(r, false) - a, right)
        })
        .collect();
    BvProfile::from_fn(0.0, r_end, cells, &density, Some(&value), atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::phase::solve_phase;
    use crate::carleman::psi::Psi;
    use crate::carleman::tests::sample_setup;
    use crate::model::PointMeasure;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_profile(value: f64, r_end: f64, atoms: Vec<Atom>) -> BvProfile {
        BvProfile::from_fn(0.0, r_end, 2000, &|_| 0.0, Some(&|_| value), atoms).unwrap()
    }

    #[test]
    fn flat_long_range_passes() {
        let setup = sample_setup();
        let r_end = 2.0 * setup.m;
        let phase = solve_phase(&Psi::from_setup(&setup), 0.5, 0.05).unwrap();
        let weight = Weight::new(&setup, r_end);
        let v = constant_profile(-setup.config.a, r_end, vec![]);
        let rep = check_goal_estimate(&[v], &setup, &phase, &weight, 3).unwrap();
        assert!(rep.pass && rep.margin > 0.0, "margin {}", rep.margin);
    }

    #[test]
    fn jump_atom_cancels() {
        let mut setup = sample_setup();
        setup.config.mu = PointMeasure::atoms(vec![(1.0, 0.2)]);
        let cfg = setup.config.clone();
        let p = cfg.p;
        let setup = super::super::derive_constants(cfg, &move |r| p.eval(r), 0.05).unwrap();
        let r_end = 1.5 * setup.m;
        let a = setup.config.a;
        // V_L + a = −0.2 before r = 1, 0 after: an upward jump of exactly the μ atom.
        let value = move |r: f64| if r < 1.0 { -a - 0.2 } else { -a };
        let v = BvProfile::from_fn(0.0, r_end, 3000, &|_| 0.0, Some(&value), vec![Atom::jump(1.0, -a - 0.2, -a)])
            .unwrap();
        let phase = solve_phase(&Psi::from_setup(&setup), 0.5, 0.05).unwrap();
        let weight = Weight::new(&setup, r_end);
        let rep = check_goal_estimate(&[v], &setup, &phase, &weight, 2).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.lhs_atoms.len(), 1);
        assert!(rep.lhs_atoms[0].mass.abs() < 1e-14);
    }

    #[test]
    fn saturated_envelope_passes() {
        let setup = sample_setup();
        let r_end = 2.0 * setup.m;
        let p = setup.config.p;
        let a = setup.config.a;
        let v = BvProfile::from_fn(
            0.0,
            r_end,
            4000,
            &|r| -p.exponent * p.scale * (1.0 + r).powf(-p.exponent - 1.0),
            Some(&|r| p.eval(r) - a),
            vec![],
        )
        .unwrap();
        let phase = solve_phase(&Psi::from_setup(&setup), 1.0, 0.05).unwrap();
        let weight = Weight::new(&setup, r_end);
        for n in [2, 3] {
            let rep = check_goal_estimate(std::slice::from_ref(&v), &setup, &phase, &weight, n).unwrap();
            assert!(rep.pass, "n = {n}: margin {} at {}", rep.margin, rep.worst_r);
        }
    }

    #[test]
    fn envelope_violation_is_reported() {
        let setup = sample_setup();
        let v = constant_profile(1.0, 10.0, vec![]);
        let phase = solve_phase(&Psi::from_setup(&setup), 1.0, 0.05).unwrap();
        let weight = Weight::new(&setup, 10.0);
        let err = check_goal_estimate(&[v], &setup, &phase, &weight, 3).unwrap_err();
        assert!(matches!(err, Error::Hypothesis(msg) if msg.contains("V_L + a <= p")));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_profiles_pass(seed in any::<u64>(), n in 2usize..=3, h in 0.1f64..1.0) {
            let mut setup = sample_setup();
            setup.config.mu = PointMeasure::atoms(vec![(0.5, 0.3), (1.0, 0.2), (1.5, 0.4)]);
            let cfg = setup.config.clone();
            let p = cfg.p;
            let setup = super::super::derive_constants(cfg, &move |r| p.eval(r), 0.05).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r_end = 1.5 * setup.m;
            let v = random_long_range(&setup, &mut rng, 3, r_end, 2000).unwrap();
            let phase = solve_phase(&Psi::from_setup(&setup), h, 0.05).unwrap();
            let weight = Weight::new(&setup, r_end);
            let rep = check_goal_estimate(&[v], &setup, &phase, &weight, n).unwrap();
            prop_assert!(rep.pass, "margin {} at {}", rep.margin, rep.worst_r);
        }
    }
}
