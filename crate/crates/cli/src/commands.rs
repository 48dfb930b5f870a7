use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use logdecay::analysis::{
    commutator_order, commutator_residual, elliptic_norm_check, hardy_check, oscillatory_decay, write_reports,
    InequalityReport, TestProfile,
};
use logdecay::carleman::{
    build_weight, check_goal_estimate, derive_constants, interior_constant_sweep, medium_setup, near_origin_check,
    origin_test_function, random_long_range, solve_phase, CarlemanSetup, Potentials, Psi, Weight, PHASE_TOLERANCE,
};
use logdecay::decay::{
    cutoff_norm_sweep, evolve_wave, fit_decay, frequency_gap, frequency_split, spectral_decompose, stone_propagator,
    CausalWindow, CutoffSweep, DecayModel, PropagatorKind, SpectralData, StoneParams,
};
use logdecay::model::{PointMeasure, RadialGrid};
use logdecay::resolvent::{
    assemble_mode_operator, check_rescale_identity, fredholm_check, holder_sweep, neumann_radius,
    resolvent_derivative_check, DiscreteOperator,
};
use logdecay::specfun::{a_function, free_resolvent_kernel, macdonald_asymptotic, macdonald_k, EULER_GAMMA};
use logdecay::{Error, Result};

use crate::config::RunConfig;
use crate::report::{decay_svg, Outcome};

pub const COMMANDS: [&str; 11] = [
    "phase",
    "weight-check",
    "goal-est",
    "carleman-test",
    "specfun-audit",
    "resolvent-sweep",
    "neumann",
    "fredholm",
    "decay-sim",
    "stone-compare",
    "inequalities",
];

/// Shared run state: the parsed config and the seed.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub plot: bool,
}

pub fn dispatch(run: &Run) -> Result<Outcome> {
    match run.cfg.command.as_str() {
        "phase" => phase(run),
        "weight-check" => weight_check(run),
        "goal-est" => goal_est(run),
        "carleman-test" => carleman_test(run),
        "specfun-audit" => specfun_audit(run),
        "resolvent-sweep" => resolvent_sweep(run),
        "neumann" => neumann(run),
        "fredholm" => fredholm(run),
        "decay-sim" => decay_sim(run),
        "stone-compare" => stone_compare(run),
        "inequalities" => inequalities(run),
        other => Err(Error::Domain(format!("unknown command {other:?}"))),
    }
}

fn grid(cfg: &RunConfig) -> Result<RadialGrid> {
    RadialGrid::new(cfg.grid.r_max, cfg.grid.n_interior)
}

fn setup(cfg: &RunConfig) -> Result<CarlemanSetup> {
    let c = &cfg.carleman;
    medium_setup(&cfg.medium, c.h0, c.eps0, c.s, grid(cfg)?.spacing())
}

fn operator(cfg: &RunConfig) -> Result<DiscreteOperator> {
    assemble_mode_operator(&cfg.medium, cfg.grid.ell, &grid(cfg)?)
}

fn gaussian(spec: &SpectralData, center: f64, width: f64) -> Vec<Complex64> {
    spec.operator.grid.nodes().iter().map(|&r| Complex64::new((-((r - center) / width).powi(2)).exp(), 0.0)).collect()
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(0.0, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `phase.csv`: the Riccati phase for `phase_h` on `[0, 1.25M]`.
fn phase(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let setup = setup(cfg)?;
    let psi = Psi::from_setup(&setup);
    let sol = solve_phase(&psi, cfg.carleman.phase_h, grid(cfg)?.spacing())?;
    let m = setup.m;
    let nodes: Vec<f64> = (0..=500).map(|k| 1.25 * m * k as f64 / 500.0).collect();
    let mut out = Outcome::default();
    out.file("phase.csv", sol.to_csv(&nodes));

    let cap = setup.psi_r0().sqrt();
    let worst = sol.y_mesh().iter().copied().fold(0.0, f64::max);
    let low = sol.y_mesh().iter().copied().fold(f64::INFINITY, f64::min);
    out.check(
        "phase_bounds",
        "riccati phase: 0 <= y <= sqrt(psi(R0))",
        low >= 0.0 && worst <= cap * (1.0 + 1e-12),
        format!("min y {low:.3e}, max y {worst:.6e}, cap {cap:.6e}"),
    );
    out.check(
        "phase_residual",
        "riccati phase ODE residual",
        sol.residual <= PHASE_TOLERANCE,
        format!("residual {:.3e} (tolerance {PHASE_TOLERANCE:.0e})", sol.residual),
    );
    let beyond = [sol.y_at(m), sol.y_at(1.1 * m), sol.y_at(2.0 * m)];
    out.check(
        "phase_vanishes_beyond_m",
        "riccati phase terminal condition",
        beyond.iter().all(|&y| y == 0.0),
        format!("y(M), y(1.1M), y(2M) = {beyond:?}"),
    );
    let target = 4.0 * setup.c0 / (m * m);
    let (left, right) = (psi.value(0.5 * m * (1.0 - 1e-13)), psi.value(0.5 * m));
    out.check(
        "psi_continuity_half_m",
        "piecewise psi continuity at M/2",
        (left - target).abs() <= 1e-9 * target && (right - target).abs() <= 1e-12 * target,
        format!("psi(M/2-) {left:.12e}, psi(M/2) {right:.12e}, 4c0/M^2 {target:.12e}"),
    );
    Ok(out)
}

fn weight_grid(setup: &CarlemanSetup) -> Result<RadialGrid> {
    RadialGrid::new(1.5 * setup.m, 3000)
}

/// `weight.csv`: `w`, `w′` and `q = 2w/r − w′` on `[0, 1.5M]`.
fn weight_check(run: &Run) -> Result<Outcome> {
    let setup = setup(run.cfg)?;
    let mut out = Outcome::default();
    match build_weight(&setup, &weight_grid(&setup)?) {
        Ok(triple) => {
            let positive = triple.w.iter().all(|&w| w > 0.0 && w.is_finite());
            let q_min = triple.q.iter().copied().fold(f64::INFINITY, f64::min);
            out.file("weight.csv", triple.to_csv());
            out.check("weight_positive", "Carleman weight w > 0", positive, format!("{} nodes", triple.w.len()));
            out.check("weight_q_nonnegative", "Carleman weight q = 2w/r - w' >= 0", true, format!("min q {q_min:.6e}"));
        }
        Err(e @ Error::ConstantsInconsistent(_)) => {
            out.check("weight_q_nonnegative", "Carleman weight q = 2w/r - w' >= 0", false, e.to_string())
        }
        Err(e) => return Err(e),
    }
    Ok(out)
}

/// `goal.csv`: one row per randomized draw; `goal_profile.csv`: the
/// pointwise comparison for the first draw.
fn goal_est(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let c = &cfg.carleman;
    let mut setup = setup(cfg)?;
    if !c.atoms.is_empty() {
        let mut config = setup.config.clone();
        let mut atoms = config.mu.atoms.clone();
        atoms.extend(c.atoms.iter().copied());
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        config.mu = PointMeasure::atoms(atoms);
        let p = config.p;
        setup = derive_constants(config, &move |r| p.eval(r), grid(cfg)?.spacing())?;
    }
    let r_end = 1.5 * setup.m;
    let weight = Weight::new(&setup, r_end);
    let psi = Psi::from_setup(&setup);
    let phases = c
        .h
        .iter()
        .map(|&h| solve_phase(&psi, h.min(c.h0), 0.05))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut csv = String::from("draw,h,n,jumps,margin,worst_r,min_atom,pass\n");
    let mut failures = Vec::new();
    let mut out = Outcome::default();
    for draw in 0..c.draws {
        let k = draw % phases.len();
        let n = 2 + draw % 2;
        let v = random_long_range(&setup, &mut rng, c.max_jumps, r_end, 2000)?;
        let jumps = v.atoms().len();
        let rep = check_goal_estimate(std::slice::from_ref(&v), &setup, &phases[k], &weight, n)?;
        let min_atom = rep.lhs_atoms.iter().map(|a| a.mass).fold(f64::INFINITY, f64::min);
        let _ = writeln!(
            csv,
            "{draw},{},{n},{jumps},{},{},{},{}",
            phases[k].h, rep.margin, rep.worst_r, min_atom, rep.pass
        );
        if !rep.pass {
            failures.push(draw);
        }
        if draw == 0 {
            out.file("goal_profile.csv", rep.to_csv());
        }
    }
    out.file("goal.csv", csv);
    out.check(
        "goal_estimate",
        "measure lower bound for the Carleman energy derivative",
        failures.is_empty(),
        format!("{} draws, failing draws {failures:?}", c.draws),
    );
    Ok(out)
}

/// `carleman.csv`: interior constants per `h`; `origin.csv`: near-origin constants.
fn carleman_test(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let c = &cfg.carleman;
    let setup = setup(cfg)?;
    let g = grid(cfg)?;
    let eps = c.eps[0];
    let sweep = interior_constant_sweep(&cfg.medium, &g, &c.h, eps, setup.m, c.s, cfg.grid.ell)?;
    let mut csv = String::from("h,c_int_1,c_int_2,c_int_3,c_int_4,c_int_5,c_int_max\n");
    for (h, row) in sweep.hs.iter().zip(&sweep.per_function) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        let max = row.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(csv, "{h},{},{max}", cells.join(","));
    }
    let mut out = Outcome::default();
    out.file("carleman.csv", csv);
    let finite = sweep.c_int.iter().all(|v| v.is_finite() && *v >= 0.0);
    out.check("interior_constant_finite", "weighted Carleman estimate", finite, format!("{:?}", sweep.c_int));
    out.check(
        "interior_constant_spread",
        "weighted Carleman estimate, h-uniformity",
        sweep.spread() <= 10.0,
        format!("max/min {:.4e} over h = {:?}", sweep.spread(), sweep.hs),
    );

    let mut origin = String::from("h,constant\n");
    let mut values = Vec::new();
    for &h in &c.origin_h {
        let og = RadialGrid::new(1.5, (1.5 / (h / 200.0)) as usize)?;
        let pots = Potentials::from_medium(&cfg.medium, Complex64::new(1.0 / h, eps))?;
        let v = origin_test_function(&og, h, cfg.grid.ell, cfg.medium.dimension);
        let k = near_origin_check(&v, &og, &pots, -0.25, 0.5, cfg.grid.ell, cfg.medium.dimension)?;
        let _ = writeln!(origin, "{h},{k}");
        values.push(k);
    }
    out.file("origin.csv", origin);
    out.check(
        "near_origin_stability",
        "near-origin estimate",
        spread(&values) <= 4.0,
        format!("constants {values:?}, max/min {:.4}", spread(&values)),
    );
    Ok(out)
}

/// `specfun.csv`: every audited value against its reference.
fn specfun_audit(run: &Run) -> Result<Outcome> {
    let mut csv = String::from("check,arg,value,reference,error,tolerance\n");
    let mut out = Outcome::default();
    let mut record = |out: &mut Outcome, name: &str, anchor: &'static str, rows: Vec<(String, f64, f64, f64)>, tol: f64| {
        let mut worst = 0.0f64;
        for (arg, value, reference, error) in rows {
            let _ = writeln!(csv, "{name},{arg},{value},{reference},{error},{tol}");
            worst = worst.max(error);
        }
        out.check(name, anchor, worst <= tol, format!("worst error {worst:.3e} (tolerance {tol:.0e})"));
    };

    let a = a_function(Complex64::new(1e-6, 0.0))?;
    record(&mut out, "a_function_small", "small-argument Macdonald expansion", vec![("1e-6".into(), a.re, -EULER_GAMMA, (a.re + EULER_GAMMA).abs())], 1e-5);

    let rows = (0..=199)
        .map(|k| {
            let z = 0.1 + 19.9 * k as f64 / 199.0;
            let v = macdonald_k(0.5, Complex64::new(z, 0.0))?.re;
            let exact = (PI / (2.0 * z)).sqrt() * (-z).exp();
            Ok((format!("{z}"), v, exact, (v - exact).abs() / exact))
        })
        .collect::<Result<Vec<_>>>()?;
    record(&mut out, "k_half_closed_form", "half-integer Macdonald function", rows, 1e-10);

    let z = Complex64::new(50.0, 0.0);
    let lead = (PI / 100.0).sqrt() * (-50f64).exp();
    let rows = [0.0, 0.5, 1.0]
        .iter()
        .map(|&nu| {
            let ratio = macdonald_k(nu, z)?.re / lead;
            Ok((format!("nu={nu}"), ratio, 1.0, (ratio - 1.0).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    record(&mut out, "k_asymptotic_ratio", "large-argument Macdonald asymptotic", rows, 1e-2);
    let k32 = macdonald_k(1.5, z)?.re / lead;
    let k2 = macdonald_k(2.0, z)?;
    let k2_series = macdonald_asymptotic(2.0, z, None);
    let rows = vec![
        ("nu=1.5".into(), k32, 1.02, (k32 - 1.02).abs() / 1.02),
        ("nu=2".into(), k2.re / lead, k2_series.re / lead, (k2 - k2_series).norm() / k2.norm()),
    ];
    record(&mut out, "k_asymptotic_higher_order", "large-argument Macdonald asymptotic", rows, 1e-10);

    // Absolute error; the points stay clear of the algorithm crossovers at |z| = 2 and 30.
    let rows = [0.5, 1.0, 3.0, 5.0]
        .iter()
        .map(|&x| {
            let h = 1e-5;
            let d = (macdonald_k(0.0, Complex64::new(x + h, 0.0))? - macdonald_k(0.0, Complex64::new(x - h, 0.0))?)
                / (2.0 * h);
            let k1 = macdonald_k(1.0, Complex64::new(x, 0.0))?;
            Ok((format!("{x}"), d.re, -k1.re, (d + k1).norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    record(&mut out, "k0_derivative", "Macdonald recurrence dK0 = -K1", rows, 1e-8);

    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let rows = (0..20)
        .map(|_| {
            let lambda = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..2.0));
            let d: f64 = rng.gen_range(0.1..5.0);
            let k = free_resolvent_kernel(3, lambda, d)?;
            let exact = (Complex64::i() * lambda * d).exp() / (4.0 * PI * d);
            Ok((format!("{lambda};{d}"), k.norm(), exact.norm(), (k - exact).norm() / exact.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    record(&mut out, "free_kernel_n3", "free resolvent kernel in three dimensions", rows, 1e-10);
    out.file("specfun.csv", csv);
    Ok(out)
}

/// `resolvent.csv`: weighted norms and Lipschitz quotients on a frequency line;
/// `resolvent_checks.csv`: rescale identity and derivative order at random λ.
fn resolvent_sweep(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let r = &cfg.resolvent;
    let op = operator(cfg)?;
    let sweep = holder_sweep(&op, r.lambda_min, r.lambda_max, r.eps, r.s, r.samples)?;
    let mut out = Outcome::default();
    out.file("resolvent.csv", sweep.to_csv());
    out.check(
        "resolvent_norms_finite",
        "limiting absorption on a frequency segment",
        sweep.norms.iter().all(|v| v.is_finite()),
        format!("max quotient {:.4e}, refinement ratio {:.4}", sweep.max_quotient(), sweep.refinement_ratio),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut csv = String::from("lambda_re,lambda_im,rescale_residual,derivative_order\n");
    let (mut worst_rescale, mut worst_order) = (0.0f64, f64::INFINITY);
    for _ in 0..r.probes {
        let lambda = Complex64::new(rng.gen_range(r.lambda_min..r.lambda_max), rng.gen_range(0.05..0.5));
        let rescale = check_rescale_identity(&op, lambda)?;
        let d = 5e-3 * lambda.norm();
        let order = resolvent_derivative_check(&op, lambda, r.s, &[2.0 * d, d, 0.5 * d])?.order;
        let _ = writeln!(csv, "{},{},{rescale},{order}", lambda.re, lambda.im);
        worst_rescale = worst_rescale.max(rescale);
        worst_order = worst_order.min(order);
    }
    out.file("resolvent_checks.csv", csv);
    out.check("rescale_identity", "semiclassical rescaling of the resolvent", worst_rescale <= 1e-12, format!("worst {worst_rescale:.3e}"));
    out.check("resolvent_derivative_order", "resolvent derivative identity", worst_order >= 1.9, format!("lowest order {worst_order:.4}"));
    Ok(out)
}

/// `neumann.csv`: `‖K(iτ)‖` at small τ and the Neumann radius.
fn neumann(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let r = &cfg.resolvent;
    let rep = neumann_radius(&cfg.medium, &grid(cfg)?, cfg.grid.ell, r.s_low, r.cap, r.angles)?;
    let mut csv = String::from("tau,norm\n");
    for (t, v) in &rep.small_lambda {
        let _ = writeln!(csv, "{t},{v}");
    }
    let _ = writeln!(csv, "# kappa,{},norm_at_kappa,{},exponent,{}", rep.kappa, rep.norm_at_kappa, rep.exponent);
    let mut out = Outcome::default();
    out.file("neumann.csv", csv);
    out.check("neumann_radius_positive", "low-frequency Neumann series", rep.kappa > 0.0, format!("kappa {:.6e}", rep.kappa));
    if rep.small_lambda.iter().all(|(_, v)| *v > 0.0) {
        out.check(
            "neumann_exponent",
            "low-frequency Neumann series, |K| ~ lambda^2",
            (1.8..=2.2).contains(&rep.exponent),
            format!("exponent {:.4}", rep.exponent),
        );
    }
    Ok(out)
}

/// `fredholm.csv`: `σ_min(I + K(0))` for the configured potential and for `V ≡ 0`.
fn fredholm(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let r = &cfg.resolvent;
    let g = grid(cfg)?;
    let medium = &cfg.medium;
    let sigma = fredholm_check(&g, &|x| medium.v(x), r.s_low, r.s_prime)?;
    let free = fredholm_check(&g, &|_| 0.0, r.s_low, r.s_prime)?;
    let mut out = Outcome::default();
    out.file("fredholm.csv", format!("potential,sigma_min\nconfigured,{sigma}\nzero,{free}\n"));
    out.check("fredholm_invertible", "zero-frequency Fredholm invertibility", sigma > 1e-8, format!("sigma_min {sigma:.6e}"));
    out.check("fredholm_identity", "zero-frequency Fredholm invertibility, V = 0", free == 1.0, format!("sigma_min {free}"));
    Ok(out)
}

fn window(cfg: &RunConfig) -> CausalWindow {
    CausalWindow { r_data: cfg.decay.r_data, r_obs: cfg.decay.r_obs }
}

/// `decay.csv`: `E_s(t)^{1/2}` with its log-envelope fit; `cutoff.csv`: the
/// cutoff-propagator norms with a power fit; `decay.svg` with `--plot`.
fn decay_sim(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let d = &cfg.decay;
    let spec = spectral_decompose(&operator(cfg)?)?;
    let u0 = gaussian(&spec, d.data_center, d.data_width);
    let u1 = vec![Complex64::new(0.0, 0.0); spec.len()];
    let win = window(cfg);
    let evo = evolve_wave(&spec, &u0, &u1, &d.times, d.s, &win)?;
    let mut out = Outcome::default();
    out.file("decay.csv", evo.curve.to_csv());
    if run.plot || cfg.output.svg {
        let mut fits = Vec::new();
        let power = fit_decay(&d.times, &evo.curve.values, DecayModel::Power).ok();
        if let Some(f) = &evo.curve.fit {
            fits.push(("log_envelope", f));
        }
        if let Some(f) = &power {
            fits.push(("power", f));
        }
        out.file("decay.svg", decay_svg(&d.times, &evo.curve.values, &fits));
    }
    out.check("energy_conservation", "conserved wave energy", evo.energy_drift() <= 1e-8, format!("drift {:.3e}", evo.energy_drift()));
    out.check(
        "envelope_trend",
        "local energy decay, log envelope",
        evo.sup_envelope.is_finite() && evo.tail_slope <= 0.0,
        format!("sup {:.6e}, final-third slope {:.3e}", evo.sup_envelope, evo.tail_slope),
    );

    let split = frequency_split(&spec, &u0, &u1, d.split_time, d.gamma, d.eta)?;
    out.check("split_completeness", "frequency split", split.completeness <= 1e-12, format!("{:.3e}", split.completeness));
    out.check(
        "split_high_bound",
        "functional calculus bound on the high part",
        split.bound_holds(),
        format!("energy {:.6e}, sharp {:.6e}, coarse {:.6e}", split.high_energy, split.sharp_bound, split.bound),
    );

    let kind = if d.kind == "sinc" { PropagatorKind::Sinc } else { PropagatorKind::Cos };
    let sweep = CutoffSweep { kind, s: d.s, m: d.m, gamma: d.gamma, floor: true };
    let curve = cutoff_norm_sweep(&spec, &sweep, &d.times, &win)?;
    out.file("cutoff.csv", curve.to_csv());
    let nu = curve.fit.as_ref().map(|f| f.params[1]);
    out.check("cutoff_power_decay", "cutoff propagator decay", nu.is_some_and(|v| v > 0.0), format!("nu {nu:?}"));
    Ok(out)
}

/// `stone.csv`: Stone's-formula propagator against the spectral one.
fn stone_compare(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let d = &cfg.decay;
    let spec = spectral_decompose(&operator(cfg)?)?;
    window(cfg).check(&spec, &d.stone_times)?;
    let x = gaussian(&spec, d.data_center, d.data_width);
    let gap = frequency_gap(&spec.operator, d.stone_cap);
    let mut csv = String::from("t,eps,gap,rel_diff,rel_diff_half_eps,ratio,damped_residual\n");
    let (mut worst, mut ratios) = (0.0f64, Vec::new());
    for &t in &d.stone_times {
        let exact = spec.apply(PropagatorKind::Sinc, t, 0.0, f64::INFINITY, &x);
        let mut diffs = Vec::new();
        let mut damped_residual = 0.0;
        for eps in [gap / 10.0, gap / 20.0] {
            let rep = stone_propagator(&spec.operator, &StoneParams { t, eps, width: 0.0, cap: d.stone_cap }, &x)?;
            if diffs.is_empty() {
                let damped: Vec<Complex64> = exact.iter().map(|z| z * (1.0 - rep.broadening)).collect();
                damped_residual = rel_l2(&rep.action, &damped);
            }
            diffs.push(rel_l2(&rep.action, &exact));
        }
        let ratio = diffs[0] / diffs[1];
        let _ = writeln!(csv, "{t},{},{gap},{},{},{ratio},{damped_residual}", gap / 10.0, diffs[0], diffs[1]);
        worst = worst.max(diffs[0]);
        ratios.push(ratio);
    }
    let mut out = Outcome::default();
    out.file("stone.csv", csv);
    out.check("stone_difference", "Stone's formula at eps = gap/10", worst <= 0.02, format!("worst relative L2 difference {worst:.4e}"));
    out.check(
        "stone_halving",
        "Stone's formula, eps halving",
        ratios.iter().all(|r| (1.5..=3.0).contains(r)),
        format!("ratios {ratios:?}"),
    );
    Ok(out)
}

/// `inequalities.csv`: every Hardy and elliptic report.
fn inequalities(run: &Run) -> Result<Outcome> {
    let cfg = run.cfg;
    let a = &cfg.analysis;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut reports: Vec<InequalityReport> = Vec::new();
    let mut out = Outcome::default();
    for n in [2, 3] {
        let mut count = 0;
        for _ in 0..a.profiles {
            let p = TestProfile::random(&mut rng);
            let rep = hardy_check(&|r| p.value(r), &|r| p.derivative(r), 40.0, n)?;
            count += usize::from(!rep.pass);
            reports.push(rep);
        }
        out.check(format!("hardy_n{n}"), "Hardy inequality", count == 0, format!("{count} of {} profiles fail", a.profiles));
    }
    let g = hardy_check(&|r| (-r * r / 2.0).exp(), &|r| -r * (-r * r / 2.0).exp(), 40.0, 3)?;
    out.check("hardy_gaussian", "Hardy inequality, Gaussian ratio 4/3", (g.ratio - 4.0 / 3.0).abs() <= 1e-4, format!("ratio {:.12}", g.ratio));
    reports.push(InequalityReport { name: "hardy_gaussian_n3".into(), ..g });

    let times: Vec<f64> = (0..=300).map(|k| 10.0 * 1000f64.powf(k as f64 / 300.0)).collect();
    for m in 0..=2 {
        let dec = oscillatory_decay(m, a.kappa, &times, a.nu)?;
        out.check(
            format!("oscillatory_m{m}"),
            "oscillatory integral decay",
            dec.bounded(),
            format!("sup |I| t^{} = {:.6e} at t = {:.3e}, envelope {:.6e}", dec.nu, dec.sup_scaled, dec.argmax, dec.envelope_sup),
        );
    }

    let cgrid = RadialGrid::new(6.0, 300)?;
    let gauss = |r: f64| (-r * r).exp();
    let orders = [2, 3]
        .iter()
        .map(|&n| Ok((n, commutator_order(&gauss, &cgrid, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let quartic = commutator_residual(&|r: f64| r.powi(4) - 3.0 * r * r, &cgrid, 3)?;
    out.check(
        "commutator_order",
        "Euler-Laplacian commutator",
        orders.iter().all(|(_, o)| *o >= 1.9),
        format!("orders {orders:?}, even quartic residual {:.3e}", quartic.max_residual),
    );

    let egrid = RadialGrid::new(10.0, 400)?;
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..a.profiles {
        let p = TestProfile::random(&mut rng);
        let f: Vec<f64> = egrid.nodes().iter().map(|&r| p.value(r)).collect();
        let e = match elliptic_norm_check(&f, &egrid) {
            Ok(e) => e,
            Err(Error::Degenerate(_)) => continue,
            Err(err) => return Err(err),
        };
        worst = (worst.0.max(e.h2_ratio), worst.1.max(e.interpolation_ratio));
        reports.push(InequalityReport::new("elliptic_h2", e.h2_ratio, 1.0, 1.0));
        reports.push(InequalityReport::new("elliptic_interpolation", e.interpolation_ratio, 1.0, 2f64.sqrt()));
    }
    out.check(
        "elliptic_norms",
        "elliptic norm equivalence",
        worst.0 <= 1.0 + 1e-12 && worst.1 <= 2f64.sqrt() + 1e-12,
        format!("largest ratios {:.6}, {:.6}", worst.0, worst.1),
    );

    let mut buf = Vec::new();
    write_reports(&mut buf, &reports, true).map_err(|e| Error::Domain(e.to_string()))?;
    out.file("inequalities.csv", String::from_utf8_lossy(&buf).into_owned());
    Ok(out)
}
