use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use super::fit::{fit_decay, log_weight, DecayCurve, DecayModel};
use super::{PropagatorKind, SpectralData};
use crate::carleman::least_squares_slope;
use crate::error::{Error, Result};

/// Times for which no wave reflected at `r_max` reaches the observation region:
/// `t ≤ (r_max − r_data − r_obs)/c_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalWindow {
    pub r_data: f64,
    pub r_obs: f64,
}

impl CausalWindow {
    pub fn arrival(&self, spec: &SpectralData) -> f64 {
        (spec.operator.grid.r_max() - self.r_data - self.r_obs) / spec.c_max()
    }

    pub fn check(&self, spec: &SpectralData, times: &[f64]) -> Result<()> {
        let arrival = self.arrival(spec);
        match times.iter().find(|&&t| !(t.abs() <= arrival)) {
            Some(&t) => Err(Error::Window { t, arrival }),
            None => Ok(()),
        }
    }
}

/// `A(t)² = (γ log t)²` for `t > 1` (zero otherwise), raised to `floor` when given.
pub fn cutoff_level(t: f64, gamma: f64, floor: Option<f64>) -> f64 {
    let a = gamma * t.max(1.0).ln();
    let a_sq = a * a;
    floor.map_or(a_sq, |f| a_sq.max(f))
}

/// Parameters of a cutoff-propagator norm sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSweep {
    pub kind: PropagatorKind,
    pub s: f64,
    pub m: f64,
    pub gamma: f64,
    /// Clamp `A(t)²` below by the lowest eigenvalue.
    pub floor: bool,
}

/// `‖W_s 1_{[0,A(t)²]}(G) G^m prop(t) W_s‖_{L²→H¹}` over `times`, with
/// `‖f‖²_{H¹} = ‖f‖² + ⟨Tf, f⟩`. A power law is fitted when at least eight
/// values are positive.
pub fn cutoff_norm_sweep(
    spec: &SpectralData,
    sweep: &CutoffSweep,
    times: &[f64],
    window: &CausalWindow,
) -> Result<DecayCurve> {
    if !(sweep.gamma > 0.0) || sweep.m < 0.0 {
        return Err(Error::Domain(format!("need γ > 0 and m ≥ 0, got γ = {}, m = {}", sweep.gamma, sweep.m)));
    }
    if sweep.kind == PropagatorKind::Exp {
        return Err(Error::Domain("norm sweeps take the cos or sinc propagator".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("times must be positive and increasing".into()));
    }
    window.check(spec, times)?;

    // The operator is X D Yᵀ with X = W C Q and Y = W C⁻¹ Q. Its H¹ norm squared
    // is the top eigenvalue of D Xᵀ(I+T)X D · YᵀY restricted to the cutoff block.
    let n = spec.len();
    let w = spec.operator.weights(sweep.s);
    let x = DMatrix::from_fn(n, n, |i, k| w[i] * spec.back[i] * spec.vectors[(i, k)]);
    let y = DMatrix::from_fn(n, n, |i, k| w[i] / spec.back[i] * spec.vectors[(i, k)]);
    let kin = &spec.operator.kinetic;
    let mut tx = x.clone();
    for (k, mut col) in tx.column_iter_mut().enumerate() {
        let applied = kin.apply_real(x.column(k).as_slice());
        col.iter_mut().zip(applied).for_each(|(a, b)| *a += b);
    }
    let h1 = x.tr_mul(&tx);
    let gram = y.tr_mul(&y);
    let floor = sweep.floor.then(|| spec.eigenvalues[0]);

    let rows: Vec<Result<(f64, f64)>> = times
        .par_iter()
        .map(|&t| {
            let a_sq = cutoff_level(t, sweep.gamma, floor);
            let k = spec.count_up_to(a_sq);
            if k == 0 {
                return Ok((0.0, a_sq));
            }
            let d: Vec<f64> =
                spec.eigenvalues[..k].iter().map(|&l| sweep.kind.multiplier(t, sweep.m, l).re).collect();
            let a = DMatrix::from_fn(k, k, |i, j| d[i] * h1[(i, j)] * d[j]);
            let chol = Cholesky::new(gram.view((0, 0), (k, k)).into_owned())
                .ok_or_else(|| Error::Convergence("weighted Gram matrix is not positive definite".into()))?;
            let l = chol.l();
            let sym = l.transpose() * a * &l;
            let sym = (&sym + sym.transpose()) * 0.5;
            let top = SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(0.0, f64::max);
            Ok((top.sqrt(), a_sq))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let a_sq = rows.iter().map(|r| r.1).collect();
    let fit = fit_decay(times, &values, DecayModel::Power).ok();
    Ok(DecayCurve { times: times.to_vec(), values, a_sq, fit })
}

/// `u(t)` and `∂_t u(t)` in `ũ` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: Vec<Complex64>,
    pub ut: Vec<Complex64>,
}

impl SpectralData {
    /// Solution at time `t` restricted to the eigenvalues selected by `keep`.
    pub(crate) fn wave_from_coefficients(
        &self,
        alpha: &[Complex64],
        beta: &[Complex64],
        t: f64,
        keep: impl Fn(f64) -> bool,
    ) -> WaveState {
        let n = self.len();
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            let l = self.eigenvalues[k];
            if !keep(l) {
                continue;
            }
            let w = l.sqrt();
            let cos = PropagatorKind::Cos.multiplier(t, 0.0, l);
            let sinc = PropagatorKind::Sinc.multiplier(t, 0.0, l);
            a[k] = cos * alpha[k] + sinc * beta[k];
            b[k] = -(w * (t * w).sin()) * alpha[k] + cos * beta[k];
        }
        WaveState { u: self.synthesize(&a), ut: self.synthesize(&b) }
    }

    /// `cos(t√G)u₀ + sin(t√G)/√G u₁` and its time derivative.
    pub fn wave(&self, u0: &[Complex64], u1: &[Complex64], t: f64) -> WaveState {
        self.wave_from_coefficients(&self.coefficients(u0), &self.coefficients(u1), t, |_| true)
    }

    /// `‖∇(W_s u)‖² + ‖W_s ∂_t u‖²`.
    pub fn weighted_energy(&self, state: &WaveState, s: f64) -> f64 {
        let w = self.operator.weights(s);
        let wu: Vec<Complex64> = state.u.iter().zip(&w).map(|(a, b)| a * b).collect();
        let wut: Vec<Complex64> = state.ut.iter().zip(&w).map(|(a, b)| a * b).collect();
        self.gradient_energy(&wu) + self.l2_sq(&wut)
    }
}

/// Weighted local energy of a wave over time.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveEvolution {
    /// `E_s(t)^{1/2}`, with a log-envelope fit.
    pub curve: DecayCurve,
    /// Unweighted conserved energy at each time.
    pub energies: Vec<f64>,
    /// `E_s(t)^{1/2}(1 + log⟨t⟩)`.
    pub envelope: Vec<f64>,
    pub sup_envelope: f64,
    /// Least-squares slope of the envelope over the final third of the times.
    pub tail_slope: f64,
}

impl WaveEvolution {
    /// Largest relative deviation of the unweighted energy from its initial value.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.max(f64::MIN_POSITIVE)
    }
}

/// Evolves `(u₀, u₁)` and records `E_s(t)^{1/2}` inside the causal window.
pub fn evolve_wave(
    spec: &SpectralData,
    u0: &[Complex64],
    u1: &[Complex64],
    times: &[f64],
    s: f64,
    window: &CausalWindow,
) -> Result<WaveEvolution> {
    let n = spec.len();
    if u0.len() != n || u1.len() != n {
        return Err(Error::Domain(format!("data must have {n} entries")));
    }
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("times must be increasing".into()));
    }
    window.check(spec, times)?;
    let alpha = spec.coefficients(u0);
    let beta = spec.coefficients(u1);
    let rows: Vec<(f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let state = spec.wave_from_coefficients(&alpha, &beta, t, |_| true);
            (spec.weighted_energy(&state, s).max(0.0).sqrt(), spec.energy(&state.u, &state.ut))
        })
        .collect();
    let values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let energies = rows.iter().map(|r| r.1).collect();
    let envelope: Vec<f64> =
        times.iter().zip(&values).map(|(&t, v)| v / log_weight((1.0 + t * t).sqrt())).collect();
    let sup_envelope = envelope.iter().copied().fold(0.0, f64::max);
    let start = times.len() - times.len().div_ceil(3);
    let tail_slope = if times.len() - start >= 2 {
        least_squares_slope(&times[start..], &envelope[start..])
    } else {
        0.0
    };
    let fit = fit_decay(times, &values, DecayModel::LogEnvelope).ok();
    Ok(WaveEvolution {
        curve: DecayCurve { times: times.to_vec(), values, a_sq: vec![f64::INFINITY; times.len()], fit },
        energies,
        envelope,
        sup_envelope,
        tail_slope,
    })
}

/// Split of a wave at the spectral level `A(t)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySplit {
    pub a_sq: f64,
    pub low: WaveState,
    pub high: WaveState,
    /// Largest entry of `low + high − full`.
    pub completeness: f64,
    /// Conserved energy of the high part.
    pub high_energy: f64,
    /// `(A²)^{−2η}(‖G^{1/2+η}u₀‖²_c + ‖G^η u₁‖²_c)`.
    pub bound: f64,
    /// Same with `A²` replaced by the first eigenvalue above it and the data
    /// norms restricted to the high part; equality for single-mode data.
    pub sharp_bound: f64,
}

impl FrequencySplit {
    pub fn bound_holds(&self) -> bool {
        self.high_energy <= self.sharp_bound * (1.0 + 1e-12) && self.sharp_bound <= self.bound * (1.0 + 1e-12)
    }
}

/// Splits the solution at time `t` into spectral parts below and above
/// `A(t)² = (γ log t)²` and checks the functional-calculus bound on the high part.
pub fn frequency_split(
    spec: &SpectralData,
    u0: &[Complex64],
    u1: &[Complex64],
    t: f64,
    gamma: f64,
    eta: f64,
) -> Result<FrequencySplit> {
    if !(gamma > 0.0) || !(eta > 0.0) {
        return Err(Error::Domain(format!("need γ, η > 0, got γ = {gamma}, η = {eta}")));
    }
    let a_sq = cutoff_level(t, gamma, None);
    split_at(spec, u0, u1, t, a_sq, eta)
}

pub(crate) fn split_at(
    spec: &SpectralData,
    u0: &[Complex64],
    u1: &[Complex64],
    t: f64,
    a_sq: f64,
    eta: f64,
) -> Result<FrequencySplit> {
    let n = spec.len();
    if u0.len() != n || u1.len() != n {
        return Err(Error::Domain(format!("data must have {n} entries")));
    }
    let alpha = spec.coefficients(u0);
    let beta = spec.coefficients(u1);
    let low = spec.wave_from_coefficients(&alpha, &beta, t, |l| l <= a_sq);
    let high = spec.wave_from_coefficients(&alpha, &beta, t, |l| l > a_sq);
    let full = spec.wave_from_coefficients(&alpha, &beta, t, |_| true);
    let completeness = (0..n)
        .map(|j| (low.u[j] + high.u[j] - full.u[j]).norm().max((low.ut[j] + high.ut[j] - full.ut[j]).norm()))
        .fold(0.0, f64::max);

    let d = spec.spacing();
    let smooth = |k: usize| {
        let l = spec.eigenvalues[k];
        (l.powf(1.0 + 2.0 * eta) * alpha[k].norm_sqr() + l.powf(2.0 * eta) * beta[k].norm_sqr()) * d
    };
    let first_high = spec.count_up_to(a_sq);
    let high_energy: f64 = (first_high..n)
        .map(|k| (spec.eigenvalues[k] * alpha[k].norm_sqr() + beta[k].norm_sqr()) * d)
        .sum();
    let data_norm: f64 = (0..n).map(smooth).sum();
    let high_norm: f64 = (first_high..n).map(smooth).sum();
    let bound = if a_sq > 0.0 { a_sq.powf(-2.0 * eta) * data_norm } else { f64::INFINITY };
    let sharp_bound = if first_high < n { spec.eigenvalues[first_high].powf(-2.0 * eta) * high_norm } else { 0.0 };
    Ok(FrequencySplit { a_sq, low, high, completeness, high_energy, bound, sharp_bound })
}
