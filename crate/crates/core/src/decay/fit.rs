use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};

/// Decay envelope fitted to a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    /// `C t^{−ν}`, fitted linearly in `(log t, log value)`.
    Power,
    /// `C/(1 + log max(t, 1))`, fitted by least squares in `C`.
    LogEnvelope,
}

impl DecayModel {
    pub fn tag(self) -> &'static str {
        match self {
            DecayModel::Power => "power",
            DecayModel::LogEnvelope => "log_envelope",
        }
    }
}

/// Fitted parameters: `C` and `ν` (power law) or `C` and 0 (log envelope).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    pub params: [f64; 2],
    /// Coefficient of determination in the fitting coordinates.
    pub r2: f64,
}

impl DecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        match self.model {
            DecayModel::Power => self.params[0] * t.powf(-self.params[1]),
            DecayModel::LogEnvelope => self.params[0] * log_weight(t),
        }
    }
}

pub(crate) fn log_weight(t: f64) -> f64 {
    1.0 / (1.0 + t.max(1.0).ln())
}

/// Values sampled in time, with the spectral cutoff used at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Cutoff `A(t)²`; infinite when no cutoff applies.
    pub a_sq: Vec<f64>,
    pub fit: Option<DecayFit>,
}

impl DecayCurve {
    /// CSV with columns `t, value, A_sq, fit_model, fit_param1, fit_param2, r2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,A_sq,fit_model,fit_param1,fit_param2,r2\n");
        let (tag, p1, p2, r2) = match &self.fit {
            Some(f) => (f.model.tag(), f.params[0], f.params[1], f.r2),
            None => ("none", f64::NAN, f64::NAN, f64::NAN),
        };
        for i in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:.10e},{:.10e},{:.10e},{tag},{p1:.10e},{p2:.10e},{r2:.10e}",
                self.times[i], self.values[i], self.a_sq[i]
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Least-squares fit of a decay model; needs at least 8 positive samples.
pub fn fit_decay(times: &[f64], values: &[f64], model: DecayModel) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::Domain(format!("need at least 8 (t, value) pairs, got {}", times.len().min(values.len()))));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Model(format!("{} fit needs positive values, found {v}", model.tag())));
    }
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Domain("fit times must be positive".into()));
    }
    match model {
        DecayModel::Power => {
            let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
            let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
            let n = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / n;
            let my = ys.iter().sum::<f64>() / n;
            let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            if sxx == 0.0 {
                return Err(Error::Domain("power fit needs distinct times".into()));
            }
            let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
            let intercept = my - slope * mx;
            let res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
            let tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
            Ok(DecayFit { model, params: [intercept.exp(), -slope], r2: r_squared(res, tot) })
        }
        DecayModel::LogEnvelope => {
            let g: Vec<f64> = times.iter().map(|&t| log_weight(t)).collect();
            let c = values.iter().zip(&g).map(|(y, g)| y * g).sum::<f64>() / g.iter().map(|g| g * g).sum::<f64>();
            let my = values.iter().sum::<f64>() / values.len() as f64;
            let res: f64 = values.iter().zip(&g).map(|(y, g)| (y - c * g).powi(2)).sum();
            let tot: f64 = values.iter().map(|y| (y - my).powi(2)).sum();
            Ok(DecayFit { model, params: [c, 0.0], r2: r_squared(res, tot) })
        }
    }
}

fn r_squared(res: f64, tot: f64) -> f64 {
    if tot > 0.0 {
        1.0 - res / tot
    } else if res <= 1e-24 {
        1.0
    } else {
        f64::NEG_INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    /// Box–Muller standard normal.
    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        let (u, v): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
        (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
    }

    fn times() -> Vec<f64> {
        (0..20).map(|k| 2.0 * 1.3f64.powi(k)).collect()
    }

    #[test]
    fn exact_power_law() {
        let t = times();
        let v: Vec<f64> = t.iter().map(|t| 3.0 * t.powf(-0.5)).collect();
        let fit = fit_decay(&t, &v, DecayModel::Power).unwrap();
        assert!((fit.params[1] - 0.5).abs() < 1e-6);
        assert!((fit.params[0] - 3.0).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_log_envelope() {
        let t = times();
        let v: Vec<f64> = t.iter().map(|t| 2.5 / (1.0 + t.ln())).collect();
        let fit = fit_decay(&t, &v, DecayModel::LogEnvelope).unwrap();
        assert!((fit.params[0] - 2.5).abs() < 1e-6);
        assert!((fit.eval(10.0) - 2.5 / (1.0 + 10f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let t = times();
        let mut worst: f64 = 0.0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = t.iter().map(|t| t.powf(-0.7) * (1.0 + 0.01 * normal(&mut rng))).collect();
            let fit = fit_decay(&t, &v, DecayModel::Power).unwrap();
            worst = worst.max((fit.params[1] - 0.7).abs());
        }
        assert!(worst < 0.02, "worst ν error {worst}");
    }

    #[test]
    fn rejects_bad_input() {
        let t = times();
        let mut v = vec![1.0; t.len()];
        v[3] = 0.0;
        assert!(matches!(fit_decay(&t, &v, DecayModel::Power), Err(Error::Model(_))));
        assert!(matches!(fit_decay(&t[..5], &v[..5], DecayModel::Power), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_layout() {
        let curve = DecayCurve { times: vec![1.0], values: vec![0.5], a_sq: vec![f64::INFINITY], fit: None };
        let csv = curve.to_csv();
        assert!(csv.starts_with("t,value,A_sq,fit_model,fit_param1,fit_param2,r2\n"));
        assert!(csv.contains(",none,"));
    }
}
