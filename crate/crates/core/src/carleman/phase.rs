use crate::error::{Error, Result};

use super::psi::Psi;

/// Residual tolerance for the integrated phase equation, per unit length.
pub const PHASE_TOLERANCE: f64 = 1e-8;

const MAX_HALVINGS: u32 = 6;

/// Solution of `y′ = (y² − ψ)/h`, `y(M) = 0`, and the phase `φ = ∫₀^r y`.
///
/// `y` is stored on a fine mesh of `(0, M]` that has every breakpoint of ψ as a
/// node; between nodes it is the cubic Hermite interpolant built from the ODE
/// slopes, which is also what `φ` integrates.
#[derive(Debug, Clone)]
pub struct PhaseSolution {
    pub h: f64,
    /// Upper bound `√ψ(R₀)` used for clamping.
    pub cap: f64,
    /// Largest integrated residual per unit length over pairs of fine steps.
    pub residual: f64,
    /// Largest fine step used.
    pub step: f64,
    psi: Psi,
    r: Vec<f64>,
    y: Vec<f64>,
    /// Slopes at the left/right end of each fine interval (one-sided at breakpoints).
    slope_lo: Vec<f64>,
    slope_hi: Vec<f64>,
    phi: Vec<f64>,
}

/// Solves the phase equation. The step starts at
/// `min(h/20, spacing, h/(100·√sup ψ))` and is halved until the residual audit passes.
pub fn solve_phase(psi: &Psi, h: f64, spacing: f64) -> Result<PhaseSolution> {
    if !(h > 0.0) || !(spacing > 0.0) {
        return Err(Error::Domain(format!("need h > 0 and spacing > 0, got h = {h}, spacing = {spacing}")));
    }
    let cap = psi.sup().max(0.0).sqrt();
    let mut step = (h / 20.0).min(spacing).min(h / (100.0 * cap.max(1e-300)));
    let mut last = None;
    for _ in 0..=MAX_HALVINGS {
        let sol = integrate(psi, h, step, cap);
        if sol.residual <= PHASE_TOLERANCE {
            return Ok(sol);
        }
        last = Some(sol.residual);
        step /= 2.0;
    }
    Err(Error::Refinement { residual: last.unwrap_or(f64::NAN), suggested_step: step / 2.0 })
}

fn integrate(psi: &Psi, h: f64, target: f64, cap: f64) -> PhaseSolution {
    let m = psi.m();
    let mut edges = vec![0.0];
    edges.extend(psi.breakpoints().into_iter().filter(|&b| b < m));
    edges.push(m);
    edges.dedup();

    // Backward sweep, collecting nodes from M down to 0.
    let mut r_rev = vec![m];
    let mut y_rev = vec![0.0];
    let mut used_step = 0.0f64;
    let mut pieces_rev = Vec::new();
    for piece in edges.windows(2).rev() {
        let (lo, hi) = (piece[0], piece[1]);
        let count = 2 * ((hi - lo) / (2.0 * target)).ceil().max(1.0) as usize;
        let dr = (hi - lo) / count as f64;
        used_step = used_step.max(dr);
        let inside = |r: f64| if r >= hi { psi.value_left(hi) } else { psi.value(r.max(lo)) };
        let f = |r: f64, y: f64| (y * y - inside(r)) / h;
        let mut y = *y_rev.last().unwrap();
        let start_index = r_rev.len() - 1;
        for k in (0..count).rev() {
            let r = lo + (k + 1) as f64 * dr;
            let k1 = f(r, y);
            let k2 = f(r - dr / 2.0, y - dr / 2.0 * k1);
            let k3 = f(r - dr / 2.0, y - dr / 2.0 * k2);
            let k4 = f(r - dr, y - dr * k3);
            y = (y - dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).clamp(0.0, cap);
            r_rev.push(if k == 0 { lo } else { lo + k as f64 * dr });
            y_rev.push(y);
        }
        pieces_rev.push((start_index, r_rev.len() - 1, lo, hi));
    }
    r_rev.reverse();
    y_rev.reverse();
    let total = r_rev.len();
    let r = r_rev;
    let y = y_rev;
    // Piece bounds in forward indices.
    let pieces: Vec<(usize, usize, f64, f64)> = pieces_rev
        .into_iter()
        .rev()
        .map(|(a, b, lo, hi)| (total - 1 - b, total - 1 - a, lo, hi))
        .collect();

    let mut slope_lo = vec![0.0; total - 1];
    let mut slope_hi = vec![0.0; total - 1];
    let mut residual = 0.0f64;
    for &(first, last, lo, hi) in &pieces {
        let inside = |r: f64| if r >= hi { psi.value_left(hi) } else { psi.value(r.max(lo)) };
        for j in first..last {
            slope_lo[j] = (y[j] * y[j] - inside(r[j])) / h;
            slope_hi[j] = (y[j + 1] * y[j + 1] - inside(r[j + 1])) / h;
        }
        let mut j = first;
        while j + 2 <= last {
            let dr = r[j + 1] - r[j];
            let g = |i: usize| y[i] * y[i] - inside(r[i]);
            let simpson = dr / 3.0 * (g(j) + 4.0 * g(j + 1) + g(j + 2));
            let res = (h * (y[j + 2] - y[j]) - simpson).abs() / (2.0 * dr);
            residual = residual.max(res);
            j += 2;
        }
    }

    let mut phi = vec![0.0; total];
    for j in 0..total - 1 {
        let dr = r[j + 1] - r[j];
        phi[j + 1] = phi[j] + dr / 2.0 * (y[j] + y[j + 1]) + dr * dr / 12.0 * (slope_lo[j] - slope_hi[j]);
    }
    PhaseSolution { h, cap, residual, step: used_step, psi: psi.clone(), r, y, slope_lo, slope_hi, phi }
}

impl PhaseSolution {
    pub fn m(&self) -> f64 {
        self.psi.m()
    }

    pub fn psi(&self) -> &Psi {
        &self.psi
    }

    /// Fine mesh nodes.
    pub fn mesh(&self) -> &[f64] {
        &self.r
    }

    /// `y` on the fine mesh.
    pub fn y_mesh(&self) -> &[f64] {
        &self.y
    }

    /// Interval index and local coordinate `(j, t, dr)` for `r ∈ (0, M)`.
    fn locate(&self, r: f64) -> (usize, f64, f64) {
        let j = self.r.partition_point(|&x| x <= r).saturating_sub(1).min(self.r.len() - 2);
        let dr = self.r[j + 1] - self.r[j];
        (j, (r - self.r[j]) / dr, dr)
    }

    /// `y(r) = φ′(r)`.
    pub fn y_at(&self, r: f64) -> f64 {
        if r >= self.m() {
            return 0.0;
        }
        let (j, t, dr) = self.locate(r.max(0.0));
        let (h00, h10, h01, h11) = (
            2.0 * t.powi(3) - 3.0 * t * t + 1.0,
            t.powi(3) - 2.0 * t * t + t,
            -2.0 * t.powi(3) + 3.0 * t * t,
            t.powi(3) - t * t,
        );
        h00 * self.y[j] + h10 * dr * self.slope_lo[j] + h01 * self.y[j + 1] + h11 * dr * self.slope_hi[j]
    }

    /// `φ″(r) = (y² − ψ)/h`, right-sided at breakpoints.
    pub fn phi_second(&self, r: f64) -> f64 {
        if r >= self.m() {
            return 0.0;
        }
        let y = self.y_at(r);
        (y * y - self.psi.value(r)) / self.h
    }

    /// `φ(r) = ∫₀^r y`.
    pub fn phi_at(&self, r: f64) -> f64 {
        let last = *self.phi.last().unwrap();
        if r >= self.m() {
            return last;
        }
        if r <= 0.0 {
            return 0.0;
        }
        let (j, t, dr) = self.locate(r);
        let i00 = t.powi(4) / 2.0 - t.powi(3) + t;
        let i10 = t.powi(4) / 4.0 - 2.0 * t.powi(3) / 3.0 + t * t / 2.0;
        let i01 = -t.powi(4) / 2.0 + t.powi(3);
        let i11 = t.powi(4) / 4.0 - t.powi(3) / 3.0;
        self.phi[j]
            + dr * (i00 * self.y[j] + i10 * dr * self.slope_lo[j] + i01 * self.y[j + 1] + i11 * dr * self.slope_hi[j])
    }

    /// `max φ = φ(M)`.
    pub fn phi_max(&self) -> f64 {
        *self.phi.last().unwrap()
    }

    /// `∫_a^b (y² − ψ) − h(y(b) − y(a))` by 4-point Gauss per fine interval.
    pub fn integrated_residual(&self, a: f64, b: f64) -> f64 {
        let (x, w) = crate::quad::gauss_legendre(4);
        let m = self.m();
        let (a, b) = (a.max(0.0), b.min(m));
        if b <= a {
            return 0.0;
        }
        let start = self.r.partition_point(|&v| v <= a).saturating_sub(1);
        let mut acc = 0.0;
        let mut j = start;
        while j + 1 < self.r.len() && self.r[j] < b {
            let lo = self.r[j].max(a);
            let hi = self.r[j + 1].min(b);
            if hi > lo {
                let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                for (xi, wi) in x.iter().zip(&w) {
                    let rr = mid + half * xi;
                    let yy = self.y_at(rr);
                    acc += half * wi * (yy * yy - self.psi.value(rr));
                }
            }
            j += 1;
        }
        acc - self.h * (self.y_at(b) - self.y_at(a))
    }

    /// Rows `(r, ψ(r), y(r), φ(r))` at the given radii.
    pub fn samples(&self, nodes: &[f64]) -> Vec<[f64; 4]> {
        nodes.iter().map(|&r| [r, self.psi.value(r), self.y_at(r), self.phi_at(r)]).collect()
    }

    /// CSV with columns `r,psi,y,phi`.
    pub fn to_csv(&self, nodes: &[f64]) -> String {
        let mut out = String::from("r,psi,y,phi\n");
        for row in self.samples(nodes) {
            out.push_str(&format!("{},{},{},{}\n", row[0], row[1], row[2], row[3]));
        }
        out
    }
}
