//! Monte-Carlo stability experiments: mean-square decay towards a stationary
//! state, synchronous-coupling contraction, pathwise stabilization by scalar
//! multiplicative noise and almost-sure tail slopes.
//!
//! Rates are fitted by ordinary least squares on the log of the ensemble mean
//! over `[burn_in·T, T]`, with a Student-t interval on the slope. The
//! theorems bound the decay from above by an exponential, so the verdict only
//! asks that the fitted decay be at least the theoretical rate minus the CI.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScbfError};
use crate::integrator::{simulate_observed, RunStatus, SolverConfig, Stepper};
use crate::noise::NoiseModel;
use crate::operators::PhysicsParams;
use crate::spectral::{SpectralField, SpectralSpace};
use crate::stats::{linear_fit, mean, std_error, t_quantile};
use crate::verify::random::RandomFieldLaw;

/// Fraction of the horizon discarded before fitting.
pub const DEFAULT_BURN_IN: f64 = 0.2;
/// Confidence level of every interval reported here.
pub const CONFIDENCE: f64 = 0.95;
/// Ensemble means below this fraction of the initial mean are treated as
/// round-off and excluded from fits.
const UNDERFLOW_FLOOR: f64 = 1e-26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Satisfied
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub theoretical_rate: f64,
    pub fitted_rate: f64,
    pub ci_half_width: f64,
    pub fit_window: (f64, f64),
    pub verdict: Verdict,
    pub note: String,
}

/// Cross-path aggregate of a squared deviation series.
#[derive(Clone, Debug, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    /// `log ‖u(t) - ref‖²_H` per path (−∞ where the deviation vanishes).
    pub log_series: Vec<Vec<f64>>,
    pub paths: usize,
}

impl EnsembleStats {
    fn from_series(times: Vec<f64>, series: Vec<Vec<f64>>) -> Self {
        let paths = series.len();
        let mut mean_v = Vec::with_capacity(times.len());
        let mut ci = Vec::with_capacity(times.len());
        let tq = if paths > 1 { t_quantile(CONFIDENCE, (paths - 1) as f64) } else { f64::INFINITY };
        for i in 0..times.len() {
            let col: Vec<f64> = series.iter().map(|s| s[i]).collect();
            mean_v.push(mean(&col));
            ci.push(if paths > 1 { tq * std_error(&col) } else { f64::INFINITY });
        }
        let log_series = series.iter().map(|s| s.iter().map(|x| x.ln()).collect()).collect();
        EnsembleStats { times, mean: mean_v, ci_half_width: ci, log_series, paths }
    }

    /// CSV with columns `t,mean,ci`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean_sq_deviation,ci_half_width\n");
        for i in 0..self.times.len() {
            out.push_str(&format!("{},{},{}\n", self.times[i], self.mean[i], self.ci_half_width[i]));
        }
        out
    }
}

/// `μλ₁ - (2η + L)`, the mean-square and contraction rate.
pub fn stability_rate(params: &PhysicsParams, model: &NoiseModel, lambda1: f64) -> Result<f64> {
    Ok(params.mu * lambda1 - (2.0 * params.eta()? + model.lipschitz_constant()))
}

/// `μλ₁ - 2η`, the deterministic relaxation rate of `‖u - u∞‖²_H`.
pub fn deterministic_rate(params: &PhysicsParams, lambda1: f64) -> Result<f64> {
    Ok(params.mu * lambda1 - 2.0 * params.eta()?)
}

/// `ζ = ½(σ² + 2μλ₁ - 2η)`.
pub fn stabilization_rate(params: &PhysicsParams, sigma: f64, lambda1: f64) -> Result<f64> {
    Ok(0.5 * (sigma * sigma + 2.0 * params.mu * lambda1 - 2.0 * params.eta()?))
}

fn require_stable(params: &PhysicsParams, model: &NoiseModel, lambda1: f64) -> Result<f64> {
    let eta = params.eta()?;
    let l = model.lipschitz_constant();
    if params.mu * lambda1 <= 2.0 * eta + l {
        return Err(ScbfError::ConditionNotMet(format!(
            "mu*lambda1 = {} must exceed 2*eta + L = {}",
            params.mu * lambda1,
            2.0 * eta + l
        )));
    }
    Ok(params.mu * lambda1 - (2.0 * eta + l))
}

/// Fits the decay rate of a positive series on `[burn_in·T, T]` and compares
/// it with `theoretical`.
pub fn fit_decay(times: &[f64], values: &[f64], burn_in: f64, theoretical: f64) -> RateReport {
    let t_end = times.last().copied().unwrap_or(0.0);
    let t0 = burn_in * t_end;
    let v0 = values.first().copied().unwrap_or(0.0);
    if values.iter().all(|&v| v == 0.0) {
        return RateReport {
            theoretical_rate: theoretical,
            fitted_rate: f64::INFINITY,
            ci_half_width: 0.0,
            fit_window: (t0, t_end),
            verdict: Verdict::Satisfied,
            note: "deviation identically zero".into(),
        };
    }
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= t0 && v.is_finite() && **v > UNDERFLOW_FLOOR * v0)
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    match linear_fit(&x, &y) {
        Ok(fit) => {
            let rate = -fit.slope;
            let ci = fit.slope_ci(CONFIDENCE);
            let verdict = if rate >= theoretical - ci { Verdict::Satisfied } else { Verdict::Violated };
            RateReport {
                theoretical_rate: theoretical,
                fitted_rate: rate,
                ci_half_width: ci,
                fit_window: (x[0], *x.last().unwrap()),
                verdict,
                note: format!("{} points", x.len()),
            }
        }
        Err(e) => RateReport {
            theoretical_rate: theoretical,
            fitted_rate: f64::NAN,
            ci_half_width: f64::NAN,
            fit_window: (t0, t_end),
            verdict: Verdict::Inconclusive,
            note: e.to_string(),
        },
    }
}

fn path_failure(status: &RunStatus) -> Option<ScbfError> {
    match *status {
        RunStatus::Completed => None,
        RunStatus::BlowUp { t } => Some(ScbfError::BlowUp { t, norm: f64::INFINITY }),
        RunStatus::NonFinite { t } => Some(ScbfError::NonFinite { t }),
    }
}

/// Squared deviation from `reference` at every recording time of one path.
pub fn deviation_path(
    u0: &SpectralField,
    reference: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    master_seed: u64,
    path: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    u0.check_same_space(reference)?;
    let mut times = Vec::new();
    let mut dev = Vec::new();
    let mut stream = config.stream(master_seed, path);
    let rec = simulate_observed(u0, params, model, config, &mut stream, |t, u| {
        times.push(t);
        dev.push((u - reference).h_norm_sq());
    })?;
    if let Some(e) = path_failure(&rec.status) {
        return Err(e);
    }
    Ok((times, dev))
}

fn collect_ensemble(results: Vec<Result<(Vec<f64>, Vec<f64>)>>) -> Result<EnsembleStats> {
    let mut times = Vec::new();
    let mut series = Vec::with_capacity(results.len());
    for r in results {
        let (t, d) = r?;
        times = t;
        series.push(d);
    }
    if series.len() < 2 {
        return Err(ScbfError::InsufficientSamples("ensembles need at least 2 paths".into()));
    }
    Ok(EnsembleStats::from_series(times, series))
}

fn check_fixed_point(model: &NoiseModel, u_star: &SpectralField) -> Result<()> {
    let ok = match model {
        NoiseModel::None => true,
        NoiseModel::Additive { spectrum } => spectrum.trace() == 0.0,
        NoiseModel::ScalarStationary { u_star: s, .. } | NoiseModel::LinearDiagonal { u_star: s, .. } => {
            (s - u_star).h_norm() <= 1e-12 * (1.0 + u_star.h_norm())
        }
    };
    if ok {
        Ok(())
    } else {
        Err(ScbfError::InvalidArgument("noise must vanish at the stationary state".into()))
    }
}

/// Mean-square stability: `M` paths from `u∞ + ξ`, `ξ ~ u0_law`, fitted decay
/// of `log E‖u(t) - u∞‖²` against `θ = μλ₁ - (2η + L)`.
#[allow(clippy::too_many_arguments)]
pub fn ms_stability_experiment(
    params: &PhysicsParams,
    model: &NoiseModel,
    u_star: &SpectralField,
    u0_law: &RandomFieldLaw,
    paths: usize,
    config: &SolverConfig,
    seed: u64,
) -> Result<(RateReport, EnsembleStats)> {
    let space = u_star.space().clone();
    let theta = require_stable(params, model, space.lambda1())?;
    check_fixed_point(model, u_star)?;
    let results: Vec<_> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let u0 = u_star + &u0_law.sample(&space, seed ^ (p as u64).wrapping_mul(0xA24B_AED4_963E_E407));
            deviation_path(&u0, u_star, params, model, config, seed, p as u64)
        })
        .collect();
    let stats = collect_ensemble(results)?;
    let report = fit_decay(&stats.times, &stats.mean, DEFAULT_BURN_IN, theta);
    Ok((report, stats))
}

/// Deterministic relaxation towards `u_star` from a single initial state,
/// compared with `κ = μλ₁ - 2η`.
pub fn relaxation_experiment(
    u0: &SpectralField,
    u_star: &SpectralField,
    params: &PhysicsParams,
    config: &SolverConfig,
) -> Result<(RateReport, Vec<f64>, Vec<f64>)> {
    let kappa = deterministic_rate(params, u0.space().lambda1())?;
    if kappa <= 0.0 {
        return Err(ScbfError::ConditionNotMet(format!("kappa = {kappa} is not positive")));
    }
    let (times, dev) = deviation_path(u0, u_star, params, &NoiseModel::None, config, 0, 0)?;
    Ok((fit_decay(&times, &dev, DEFAULT_BURN_IN, kappa), times, dev))
}

/// Squared distance between two solutions driven by bit-identical increments.
pub fn coupled_pair(
    u0: &SpectralField,
    v0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    master_seed: u64,
    path: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    u0.check_same_space(v0)?;
    let stepper = Stepper::new(u0.space(), params, model, config)?;
    let mut stream = config.stream(master_seed, path);
    let (mut u, mut v) = (u0.clone(), v0.clone());
    let mut times = vec![0.0];
    let mut dev = vec![(&u - &v).h_norm_sq()];
    let n = config.n_steps();
    for i in 0..n {
        let t = i as f64 * config.dt;
        let incr = stepper.sample(&mut stream)?;
        u = stepper.step_with(&u, t, &incr)?.0;
        v = stepper.step_with(&v, t, &incr)?.0;
        if (i + 1) % config.record_every == 0 || i + 1 == n {
            times.push((i + 1) as f64 * config.dt);
            dev.push((&u - &v).h_norm_sq());
        }
    }
    Ok((times, dev))
}

/// Contraction under synchronous coupling: fitted decay of `E‖u - v‖²`
/// against `μλ₁ - (2η + L)`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_experiment(
    params: &PhysicsParams,
    model: &NoiseModel,
    u0: &SpectralField,
    v0: &SpectralField,
    paths: usize,
    config: &SolverConfig,
    seed: u64,
) -> Result<(RateReport, EnsembleStats)> {
    let rate = require_stable(params, model, u0.space().lambda1())?;
    let results: Vec<_> =
        (0..paths).into_par_iter().map(|p| coupled_pair(u0, v0, params, model, config, seed, p as u64)).collect();
    let stats = collect_ensemble(results)?;
    let report = fit_decay(&stats.times, &stats.mean, DEFAULT_BURN_IN, rate);
    Ok((report, stats))
}

/// Recorded deviation and scalar Wiener path of one stabilized trajectory.
#[derive(Clone, Debug)]
pub struct StabilizationTrace {
    pub times: Vec<f64>,
    pub dev_sq: Vec<f64>,
    pub wiener: Vec<f64>,
    pub dt: f64,
}

pub fn stabilization_trace(
    u0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    master_seed: u64,
    path: u64,
) -> Result<StabilizationTrace> {
    let NoiseModel::ScalarStationary { u_star, .. } = model else {
        return Err(ScbfError::WrongNoiseVariant("pathwise stabilization needs scalar noise".into()));
    };
    let mut dev = Vec::new();
    let mut stream = config.stream(master_seed, path);
    let rec = simulate_observed(u0, params, model, config, &mut stream, |_, u| dev.push((u - u_star).h_norm_sq()))?;
    if let Some(e) = path_failure(&rec.status) {
        return Err(e);
    }
    Ok(StabilizationTrace { times: rec.times, dev_sq: dev, wiener: rec.wiener.unwrap_or_default(), dt: config.dt })
}

#[derive(Clone, Debug, Serialize)]
pub struct PathwiseReport {
    pub holds: Vec<bool>,
    pub checked: usize,
    pub violations: usize,
    pub zeta: f64,
    /// `true` when `u₀ = u∞` and the check is vacuous.
    pub degenerate: bool,
}

impl PathwiseReport {
    pub fn violation_fraction(&self) -> f64 {
        if self.checked == 0 {
            0.0
        } else {
            self.violations as f64 / self.checked as f64
        }
    }
}

/// Slack multiplier `c` in `c·σ²·√(2t·dt)`.
pub const PATHWISE_SLACK: f64 = 3.0;

/// `log‖u(t)-u∞‖² <= log‖u₀-u∞‖² + (2η - 2μλ₁ - σ²)t + 2σW(t)` at every
/// recorded time, up to `c·σ²·√(2t·dt)`: the standard deviation of the
/// discrete quadratic variation `Σ ΔW²` around `t`, which is what the
/// Euler-Maruyama log-increment carries in place of the Itô correction.
pub fn stabilization_pathwise_check(
    params: &PhysicsParams,
    sigma: f64,
    lambda1: f64,
    trace: &StabilizationTrace,
) -> Result<PathwiseReport> {
    let zeta = stabilization_rate(params, sigma, lambda1)?;
    let eta = params.eta()?;
    let d0 = trace.dev_sq[0];
    if d0 == 0.0 {
        return Ok(PathwiseReport { holds: vec![true; trace.times.len()], checked: 0, violations: 0, zeta, degenerate: true });
    }
    let drift = 2.0 * eta - 2.0 * params.mu * lambda1 - sigma * sigma;
    let mut holds = Vec::with_capacity(trace.times.len());
    let mut checked = 0;
    let mut violations = 0;
    for i in 0..trace.times.len() {
        let t = trace.times[i];
        let d = trace.dev_sq[i];
        // exact zero deviation is below every finite bound
        let lhs = if d > 0.0 { d.ln() } else { f64::NEG_INFINITY };
        let rhs = d0.ln() + drift * t + 2.0 * sigma * trace.wiener[i];
        let slack = PATHWISE_SLACK * sigma * sigma * (2.0 * t * trace.dt).sqrt();
        let ok = lhs <= rhs + slack + 1e-12 * rhs.abs();
        if i > 0 {
            checked += 1;
            if !ok {
                violations += 1;
            }
        }
        holds.push(ok);
    }
    Ok(PathwiseReport { holds, checked, violations, zeta, degenerate: false })
}

/// Tail slope of `log‖u(t) - ref‖_H` over the second half of the run; `−∞`
/// if the deviation underflows there.
pub fn as_lyapunov_estimate(times: &[f64], dev_sq: &[f64]) -> Result<f64> {
    let n = times.len();
    if n < 6 {
        return Err(ScbfError::InsufficientSamples(format!("{n} points")));
    }
    let half = n / 2;
    if dev_sq[half..].iter().any(|&d| !(d > 0.0)) {
        return Ok(f64::NEG_INFINITY);
    }
    let y: Vec<f64> = dev_sq[half..].iter().map(|d| 0.5 * d.ln()).collect();
    Ok(linear_fit(&times[half..], &y)?.slope)
}

/// Runs `paths` stabilization traces and checks each one.
pub fn stabilization_experiment(
    params: &PhysicsParams,
    model: &NoiseModel,
    u0_law: &RandomFieldLaw,
    paths: usize,
    config: &SolverConfig,
    seed: u64,
) -> Result<Vec<PathwiseReport>> {
    let NoiseModel::ScalarStationary { sigma, u_star } = model else {
        return Err(ScbfError::WrongNoiseVariant("pathwise stabilization needs scalar noise".into()));
    };
    let space: SpectralSpace = u_star.space().clone();
    (0..paths)
        .into_par_iter()
        .map(|p| {
            let u0 = u_star + &u0_law.sample(&space, seed ^ (p as u64).wrapping_mul(0xA24B_AED4_963E_E407));
            let tr = stabilization_trace(&u0, params, model, config, seed, p as u64)?;
            stabilization_pathwise_check(params, *sigma, space.lambda1(), &tr)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> SpectralSpace {
        SpectralSpace::new(2, 8).unwrap()
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let v: Vec<f64> = t.iter().map(|x| 3.0 * (-1.7 * x).exp()).collect();
        let r = fit_decay(&t, &v, 0.2, 1.7);
        assert!((r.fitted_rate - 1.7).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Satisfied);
        assert_eq!(fit_decay(&t, &v, 0.2, 2.0).verdict, Verdict::Violated);
    }

    #[test]
    fn zero_deviation_is_trivially_satisfied() {
        let s = space();
        let p = PhysicsParams::new(2.0, 1.0, 5.0).unwrap();
        let m = NoiseModel::scalar(0.5, SpectralField::zeros(&s)).unwrap();
        let u = RandomFieldLaw::default().sample(&s, 3);
        let cfg = SolverConfig::new(0.01, 0.2);
        let (r, st) = contraction_experiment(&p, &m, &u, &u, 4, &cfg, 1).unwrap();
        assert!(st.mean.iter().all(|&x| x == 0.0));
        assert_eq!(r.verdict, Verdict::Satisfied);
        let z = SpectralField::zeros(&s);
        let law = RandomFieldLaw::default().with_amplitude(0.0);
        let (_, st) = ms_stability_experiment(&p, &m, &z, &law, 3, &cfg, 1).unwrap();
        assert!(st.mean.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coupling_is_symmetric() {
        let s = space();
        let p = PhysicsParams::new(2.0, 1.0, 5.0).unwrap();
        let m = NoiseModel::scalar(0.5, SpectralField::zeros(&s)).unwrap();
        let u = RandomFieldLaw::default().sample(&s, 3);
        let v = RandomFieldLaw::default().sample(&s, 4);
        let cfg = SolverConfig::new(0.01, 0.1);
        let a = coupled_pair(&u, &v, &p, &m, &cfg, 9, 0).unwrap();
        let b = coupled_pair(&v, &u, &p, &m, &cfg, 9, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unstable_regime_rejected() {
        let s = space();
        let p = PhysicsParams::new(0.1, 1.0, 5.0).unwrap();
        let u = RandomFieldLaw::default().sample(&s, 3);
        let cfg = SolverConfig::new(0.01, 0.1);
        let err = contraction_experiment(&p, &NoiseModel::None, &u, &u, 2, &cfg, 0).unwrap_err();
        assert!(matches!(err, ScbfError::ConditionNotMet(_)));
    }

    #[test]
    fn pathwise_check_needs_scalar_noise() {
        let s = space();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let u = RandomFieldLaw::default().sample(&s, 3);
        let cfg = SolverConfig::new(0.01, 0.1);
        let err = stabilization_trace(&u, &p, &NoiseModel::None, &cfg, 0, 0).unwrap_err();
        assert!(matches!(err, ScbfError::WrongNoiseVariant(_)));
    }

    #[test]
    fn degenerate_start_is_vacuous() {
        let s = space();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let z = SpectralField::zeros(&s);
        let m = NoiseModel::scalar(1.0, z.clone()).unwrap();
        let mut cfg = SolverConfig::new(0.01, 0.1);
        cfg.record_every = 1;
        let tr = stabilization_trace(&z, &p, &m, &cfg, 0, 0).unwrap();
        let rep = stabilization_pathwise_check(&p, 1.0, 1.0, &tr).unwrap();
        assert!(rep.degenerate && rep.violation_fraction() == 0.0);
        assert_eq!(as_lyapunov_estimate(&tr.times, &tr.dev_sq).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn deterministic_pathwise_bound_holds() {
        let s = space();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let m = NoiseModel::scalar(0.0, SpectralField::zeros(&s)).unwrap();
        let u = RandomFieldLaw::default().sample(&s, 5);
        let cfg = SolverConfig::new(1e-3, 1.0);
        let tr = stabilization_trace(&u, &p, &m, &cfg, 0, 0).unwrap();
        let rep = stabilization_pathwise_check(&p, 0.0, 1.0, &tr).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(as_lyapunov_estimate(&tr.times, &tr.dev_sq).unwrap() < -0.5);
    }

    #[test]
    fn rates_share_eta() {
        let p = PhysicsParams::new(2.0, 1.0, 5.0).unwrap();
        let s = space();
        let m = NoiseModel::scalar(0.5, SpectralField::zeros(&s)).unwrap();
        assert!((stability_rate(&p, &m, 1.0).unwrap() - 1.6875).abs() < 1e-15);
        assert!((deterministic_rate(&p, 1.0).unwrap() - 1.9375).abs() < 1e-15);
    }
}
