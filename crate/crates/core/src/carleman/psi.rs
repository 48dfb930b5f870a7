use crate::error::Result;
use crate::model::{Atom, BvProfile, PointMeasure};

use super::CarlemanSetup;

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// Plateau, `c₀/r²`, quartic taper, zero.
    Piecewise { r0: f64, c0: f64, base: f64, mu: PointMeasure },
    /// `ψ₀` on `(0, M]`, zero beyond.
    Constant(f64),
}

/// The target `ψ = (φ′)² − hφ″` of the phase equation.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi {
    m: f64,
    shape: Shape,
}

impl Psi {
    pub fn from_setup(setup: &CarlemanSetup) -> Self {
        let cfg = &setup.config;
        let mu = PointMeasure {
            atoms: cfg.mu.atoms.iter().copied().filter(|(r, m)| *r <= setup.r0 && *m > 0.0).collect(),
            blocks: cfg.mu.blocks.clone(),
        };
        Psi {
            m: setup.m,
            shape: Shape::Piecewise {
                r0: setup.r0,
                c0: setup.c0,
                base: cfg.p.eval(0.0) + (1.0 + 16.0 * cfg.c_v) * cfg.c_v,
                mu,
            },
        }
    }

    pub fn constant(psi0: f64, m: f64) -> Self {
        Psi { m, shape: Shape::Constant(psi0) }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    /// `sup ψ`, attained on the plateau.
    pub fn sup(&self) -> f64 {
        match &self.shape {
            Shape::Piecewise { r0, c0, .. } => c0 / (r0 * r0),
            Shape::Constant(p) => *p,
        }
    }

    /// Right-continuous value.
    pub fn value(&self, r: f64) -> f64 {
        let m = self.m;
        match &self.shape {
            Shape::Constant(p) => {
                if r <= m {
                    *p
                } else {
                    0.0
                }
            }
            Shape::Piecewise { r0, c0, base, mu } => {
                if r <= *r0 {
                    base + mu.cumulative(r)
                } else if r <= m / 2.0 {
                    c0 / (r * r)
                } else if r <= m {
                    64.0 * c0 / m.powi(6) * (m - r).powi(4)
                } else {
                    0.0
                }
            }
        }
    }

    /// Left limit `ψ(r⁻)`.
    pub fn value_left(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Piecewise { r0, base, mu, .. } if r <= *r0 => base + mu.cumulative_left(r),
            _ => self.value(r),
        }
    }

    /// Absolutely continuous part of `dψ`, right-sided at breakpoints.
    pub fn density(&self, r: f64) -> f64 {
        self.density_side(r, false)
    }

    /// Absolutely continuous part of `dψ`, left-sided at breakpoints.
    pub fn density_left(&self, r: f64) -> f64 {
        self.density_side(r, true)
    }

    fn density_side(&self, r: f64, left: bool) -> f64 {
        let m = self.m;
        let below = |edge: f64| if left { r <= edge } else { r < edge };
        match &self.shape {
            Shape::Constant(_) => 0.0,
            Shape::Piecewise { r0, c0, mu, .. } => {
                if below(*r0) {
                    mu.blocks
                        .iter()
                        .filter(|&&(a, b, _)| if left { r > a && r <= b } else { r >= a && r < b })
                        .map(|(_, _, d)| d)
                        .sum()
                } else if below(m / 2.0) {
                    -2.0 * c0 / (r * r * r)
                } else if below(m) {
                    -256.0 * c0 / m.powi(6) * (m - r).powi(3)
                } else {
                    0.0
                }
            }
        }
    }

    /// Atoms of `dψ` as `(r, mass)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::Constant(p) if *p != 0.0 => vec![(self.m, -p)],
            Shape::Constant(_) => Vec::new(),
            Shape::Piecewise { mu, .. } => mu.atoms.clone(),
        }
    }

    /// Points in `(0, M]` where ψ or its density may be discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        let m = self.m;
        let mut pts = vec![m];
        if let Shape::Piecewise { r0, mu, .. } = &self.shape {
            pts.extend(mu.breakpoints().into_iter().filter(|&x| x > 0.0 && x < *r0));
            pts.push(*r0);
            pts.push(m / 2.0);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts.retain(|&x| x > 0.0 && x <= m);
        pts
    }

    /// ψ as a BV profile on `[0, r_end]` sampled at `nodes` plus all breakpoints.
/// The stored density is right-sided.
    pub fn profile(&self, nodes: &[f64], r_end: f64) -> Result<BvProfile> {
        let mut all: Vec<f64> = nodes.iter().copied().filter(|&x| x > 0.0 && x < r_end).collect();
        all.push(0.0);
        all.push(r_end);
        // A node just left of each breakpoint keeps density jumps out of the interpolation.
        for b in self.breakpoints().into_iter().filter(|&x| x < r_end) {
            all.push(b);
            all.push(b * (1.0 - 1e-9));
        }
        all.sort_by(f64::total_cmp);
        all.dedup();
        let atoms = self
            .atoms()
            .into_iter()
            .filter(|(r, _)| *r > 0.0 && *r < r_end)
            .map(|(r, _)| Atom::jump(r, self.value_left(r), self.value(r)))
            .collect();
        let density = |r: f64| self.density(r);
        let value = |r: f64| if r == 0.0 { self.value_left(f64::MIN_POSITIVE) } else { self.value(r) };
        BvProfile::from_nodes(all, &density, Some(&value), atoms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::tests::sample_setup;

    #[test]
    fn continuity_at_breakpoints() {
        let setup = sample_setup();
        let psi = Psi::from_setup(&setup);
        let m = setup.m;
        let at_half = 4.0 * setup.c0 / (m * m);
        let below = setup.c0 / (m / 2.0).powi(2);
        let above = 64.0 * setup.c0 / m.powi(6) * (m / 2.0).powi(4);
        assert!((below - at_half).abs() <= 1e-15 * at_half);
        assert!((above - at_half).abs() <= 1e-15 * at_half);
        assert_eq!(psi.value(m), 0.0);
        let r0 = setup.r0;
        let plateau = psi.value(r0);
        let outside = setup.c0 / (r0 * r0);
        assert!((plateau - outside).abs() <= 1e-12 * plateau);
        assert!((psi.value(r0 * (1.0 + 1e-12)) - plateau).abs() < 1e-9);
    }

    #[test]
    fn atoms_match_measure() {
        let setup = sample_setup();
        let psi = Psi::from_setup(&setup);
        assert_eq!(psi.atoms(), vec![(0.5, 0.5)]);
        assert!((psi.value(0.5) - psi.value_left(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profile_integrates_to_value_differences() {
        let setup = sample_setup();
        let psi = Psi::from_setup(&setup);
        let nodes: Vec<f64> = (1..4000).map(|k| k as f64 * setup.m / 2000.0).collect();
        let prof = psi.profile(&nodes, 1.5 * setup.m).unwrap();
        for &(a, b) in &[(0.1, 2.0), (1.0, setup.m), (0.2, 0.9 * setup.m)] {
            let got = prof.integrate(a, b).unwrap();
            let want = psi.value(b) - psi.value(a);
            assert!((got - want).abs() < 1e-3 * psi.sup(), "({a},{b}): {got} vs {want}");
        }
    }
}
