//! Invariant-measure diagnostics: long-time averages with batch-means errors,
//! the tightness estimate behind the Krylov-Bogoliubov construction, and
//! two-initial-condition mixing tests.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScbfError};
use crate::integrator::{simulate_observed, SolverConfig, Stepper, TrajectoryRecord};
use crate::noise::NoiseModel;
use crate::operators::{absorption_integral, PhysicsParams};
use crate::spectral::{SpectralField, SpectralSpace};
use crate::stability::stability_rate;
use crate::stats::{batch_means, mean, std_error};

/// Batches used for every batch-means error.
pub const BATCHES: usize = 20;
pub const DEFAULT_BURN_IN: f64 = 0.2;

#[derive(Clone, Debug)]
pub enum Observable {
    Energy,
    Enstrophy,
    Absorption { r: f64 },
    /// `Σ_c |û_k,c|²` for one retained mode.
    ModeAmplitude { k: [i32; 3] },
    /// `tanh(⟨u, g⟩)`.
    Probe { name: String, g: SpectralField },
    Constant,
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Energy => "energy".into(),
            Observable::Enstrophy => "enstrophy".into(),
            Observable::Absorption { .. } => "absorption".into(),
            Observable::ModeAmplitude { k } => format!("mode_{}_{}_{}", k[0], k[1], k[2]),
            Observable::Probe { name, .. } => name.clone(),
            Observable::Constant => "constant".into(),
        }
    }

    pub fn eval(&self, u: &SpectralField) -> f64 {
        match self {
            Observable::Energy => u.h_norm_sq(),
            Observable::Enstrophy => u.v_norm_sq(),
            Observable::Absorption { r } => absorption_integral(u, *r),
            Observable::ModeAmplitude { k } => {
                let m = u.space().index_of(*k).expect("retained mode");
                u.mode(m).iter().map(|z| z.norm_sqr()).sum()
            }
            Observable::Probe { g, .. } => u.inner(g).tanh(),
            Observable::Constant => 1.0,
        }
    }

    /// Lipschitz constant with respect to `‖·‖_H` on the ball of radius `radius`
    /// in the Galerkin space of `space`.
    ///
    /// Unbounded functionals are only Lipschitz on balls; the constants for
    /// enstrophy and absorption use the finite-dimensional equivalences
    /// `‖u‖²_V <= λ_max‖u‖²_H` and `‖u‖_{L^∞} <= sqrt(n/|T|)‖u‖_H`, with `n` the
    /// number of retained modes.
    pub fn lipschitz(&self, space: &SpectralSpace, radius: f64) -> f64 {
        let vol = space.volume();
        match self {
            Observable::Energy => 2.0 * radius,
            Observable::Enstrophy => 2.0 * radius * space.lambda_max(),
            Observable::Absorption { r } => {
                let sup = (space.n_retained() as f64 / vol).sqrt();
                let s = vol.powf(1.0 / (r + 1.0)) * sup;
                (r + 1.0) * (s * radius).powf(*r) * s
            }
            // ‖u‖²_H >= 2|T| |û_k|²
            Observable::ModeAmplitude { .. } => radius / vol,
            Observable::Probe { g, .. } => g.h_norm(),
            Observable::Constant => 0.0,
        }
    }
}

/// Named functionals evaluated along trajectories.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub observables: Vec<Observable>,
}

impl ObservableSet {
    /// Energy, enstrophy, absorption, the low modes with `|k|² <= 4` in the upper
    /// half-lattice, and three `tanh` probes on unit-norm low-mode fields.
    pub fn standard(space: &SpectralSpace, r: f64) -> Result<Self> {
        let mut observables = vec![Observable::Energy, Observable::Enstrophy, Observable::Absorption { r }];
        for &m in space.positive_modes() {
            if space.lambda(m) <= 4.0 {
                observables.push(Observable::ModeAmplitude { k: space.wavevector(m) });
            }
        }
        let probes: [([i32; 3], [f64; 3], bool); 3] =
            [([1, 0, 0], [0.0, 1.0, 0.0], true), ([0, 1, 0], [1.0, 0.0, 0.0], false), ([1, 1, 0], [1.0, -1.0, 0.0], true)];
        for (i, (k, a, cos)) in probes.iter().enumerate() {
            let mut a = *a;
            if space.dim() == 3 && i == 0 {
                a = [0.0, 1.0, 1.0];
            }
            let g = if *cos { SpectralField::cosine_mode(space, *k, a)? } else { SpectralField::sine_mode(space, *k, a)? };
            let n = g.h_norm();
            observables.push(Observable::Probe { name: format!("probe_{i}"), g: g.scaled(1.0 / n) });
        }
        Ok(ObservableSet { observables })
    }

    pub fn names(&self) -> Vec<String> {
        self.observables.iter().map(|o| o.name()).collect()
    }

    pub fn eval(&self, u: &SpectralField) -> Vec<f64> {
        self.observables.iter().map(|o| o.eval(u)).collect()
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeAverageReport {
    pub names: Vec<String>,
    pub burn_in: f64,
    pub averages: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub samples: usize,
    pub times: Vec<f64>,
    /// Running averages from the end of burn-in, one row per recorded time.
    pub running: Vec<Vec<f64>>,
}

impl TimeAverageReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("t,{}\n", self.names.join(","));
        for (t, row) in self.times.iter().zip(&self.running) {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&format!("{t},{}\n", cells.join(",")));
        }
        out
    }
}

/// Time averages of `values[i][j]` (time `i`, observable `j`) after discarding
/// `times < burn_in`.
pub fn time_average(times: &[f64], values: &[Vec<f64>], names: Vec<String>, burn_in: f64) -> Result<TimeAverageReport> {
    if times.len() != values.len() {
        return Err(ScbfError::InvalidArgument("times and samples differ in length".into()));
    }
    let start = times.iter().position(|&t| t >= burn_in).unwrap_or(times.len());
    let kept = &values[start..];
    if kept.len() < BATCHES {
        return Err(ScbfError::InsufficientSamples(format!(
            "{} samples after burn-in, need at least {BATCHES}",
            kept.len()
        )));
    }
    let n_obs = names.len();
    let mut averages = Vec::with_capacity(n_obs);
    let mut std_errors = Vec::with_capacity(n_obs);
    for j in 0..n_obs {
        let col: Vec<f64> = kept.iter().map(|row| row[j]).collect();
        let (_, se) = batch_means(&col, BATCHES)?;
        averages.push(mean(&col));
        std_errors.push(se);
    }
    let mut running = Vec::with_capacity(kept.len());
    let mut sums = vec![0.0; n_obs];
    for (i, row) in kept.iter().enumerate() {
        for (s, x) in sums.iter_mut().zip(row) {
            *s += x;
        }
        running.push(sums.iter().map(|s| s / (i + 1) as f64).collect());
    }
    Ok(TimeAverageReport {
        names,
        burn_in,
        averages,
        std_errors,
        samples: kept.len(),
        times: times[start..].to_vec(),
        running,
    })
}

/// Simulates one long path and time-averages `obs` after `burn_in_frac·T`.
pub fn long_run_average(
    u0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    obs: &ObservableSet,
    seed: u64,
    burn_in_frac: f64,
) -> Result<(TimeAverageReport, TrajectoryRecord)> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut stream = config.stream(seed, 0);
    let rec = simulate_observed(u0, params, model, config, &mut stream, |t, u| {
        times.push(t);
        values.push(obs.eval(u));
    })?;
    if !rec.status.is_completed() {
        return Err(ScbfError::InvalidArgument(format!("run ended early: {}", rec.status.label())));
    }
    let report = time_average(&times, &values, obs.names(), burn_in_frac * config.t_end)?;
    Ok((report, rec))
}

/// Mean and standard error of each observable at `T` over `paths` paths.
pub fn ensemble_average(
    u0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    obs: &ObservableSet,
    paths: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let finals = final_states(u0, params, model, config, paths, seed)?;
    let values: Vec<Vec<f64>> = finals.iter().map(|u| obs.eval(u)).collect();
    let (mut m, mut se) = (Vec::new(), Vec::new());
    for j in 0..obs.len() {
        let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
        m.push(mean(&col));
        se.push(std_error(&col));
    }
    Ok((m, se))
}

fn final_states(
    u0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    paths: usize,
    seed: u64,
) -> Result<Vec<SpectralField>> {
    let stepper = Stepper::new(u0.space(), params, model, config)?;
    (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut stream = config.stream(seed, p as u64);
            let mut u = u0.clone();
            for i in 0..config.n_steps() {
                u = stepper.step(&u, i as f64 * config.dt, &mut stream)?.0;
            }
            Ok(u)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TightnessReport {
    /// Ensemble mean of `(1/T)∫₀ᵀ ‖u‖²_V dt`.
    pub lhs_mean: f64,
    pub lhs_se: f64,
    /// `(E‖u₀‖² + K·T) / ((2μ - K/λ₁)·T)`.
    pub bound: f64,
    pub holds: bool,
}

/// Time-averaged enstrophy against the bound that drives tightness.
///
/// From Itô's formula and `‖Φ‖²_{L_Q} <= K(1 + ‖u‖²_H) <= K + (K/λ₁)‖u‖²_V`:
/// `(2μ - K/λ₁) E∫₀ᵀ‖u‖²_V <= E‖u₀‖² + K·T`. The `K·T` term comes from the
/// constant in the growth hypothesis and is kept. Requires `f = 0`.
pub fn tightness_diagnostic(
    records: &[TrajectoryRecord],
    params: &PhysicsParams,
    model: &NoiseModel,
    lambda1: f64,
) -> Result<TightnessReport> {
    let k = model.growth_constant();
    if params.mu <= k / (2.0 * lambda1) {
        return Err(ScbfError::ConditionNotMet(format!("mu = {} must exceed K/(2 lambda1) = {}", params.mu, k / (2.0 * lambda1))));
    }
    if params.forcing.as_ref().is_some_and(|f| !f.is_zero()) {
        return Err(ScbfError::InvalidArgument("the tightness bound is stated for f = 0".into()));
    }
    if records.is_empty() {
        return Err(ScbfError::InsufficientSamples("no trajectories".into()));
    }
    let t_end = *records[0].times.last().unwrap();
    let lhs: Vec<f64> = records.iter().map(|r| r.int_v.last().unwrap() / t_end).collect();
    let h0 = mean(&records.iter().map(|r| r.initial_h_norm_sq()).collect::<Vec<_>>());
    let bound = (h0 + k * t_end) / ((2.0 * params.mu - k / lambda1) * t_end);
    let lhs_mean = mean(&lhs);
    let lhs_se = if lhs.len() > 1 { std_error(&lhs) } else { 0.0 };
    Ok(TightnessReport { lhs_mean, lhs_se, bound, holds: lhs_mean <= bound + lhs_se })
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservableDiscrepancy {
    pub name: String,
    pub discrepancy: f64,
    pub std_error: f64,
    pub lipschitz: f64,
    pub envelope: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingPair {
    pub first: usize,
    pub second: usize,
    pub observables: Vec<ObservableDiscrepancy>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingReport {
    pub rate: f64,
    pub horizon: f64,
    /// Largest `‖u(T)‖_H` seen; Lipschitz constants are taken on this ball.
    pub radius: f64,
    pub pairs: Vec<MixingPair>,
}

impl MixingReport {
    pub fn all_hold(&self) -> bool {
        self.pairs.iter().all(|p| p.observables.iter().all(|o| o.holds))
    }
}

/// `|P_Tφ(u₀) - P_Tφ(v₀)| <= L_φ e^{-(μλ₁-(2η+L))T/2}(‖u₀‖ + ‖v₀‖) + 3 SE` for
/// every pair of initial conditions and every observable. Path `p` uses the
/// same noise for every initial condition, so the standard error is that of
/// the paired differences.
pub fn mixing_test(
    u0_list: &[SpectralField],
    params: &PhysicsParams,
    model: &NoiseModel,
    obs: &ObservableSet,
    config: &SolverConfig,
    paths: usize,
    seed: u64,
) -> Result<MixingReport> {
    if u0_list.is_empty() {
        return Err(ScbfError::InsufficientSamples("no initial conditions".into()));
    }
    let space = u0_list[0].space().clone();
    let rate = stability_rate(params, model, space.lambda1())?;
    if rate <= 0.0 {
        return Err(ScbfError::ConditionNotMet(format!("mu*lambda1 - (2 eta + L) = {rate} is not positive")));
    }
    let finals: Vec<Vec<SpectralField>> =
        u0_list.iter().map(|u0| final_states(u0, params, model, config, paths, seed)).collect::<Result<_>>()?;
    let radius = finals.iter().flatten().map(|u| u.h_norm()).fold(0.0, f64::max);
    let values: Vec<Vec<Vec<f64>>> = finals.iter().map(|fs| fs.iter().map(|u| obs.eval(u)).collect()).collect();
    let horizon = config.n_steps() as f64 * config.dt;
    let decay = (-rate * horizon / 2.0).exp();
    let mut pairs = Vec::new();
    for a in 0..u0_list.len() {
        for b in a + 1..u0_list.len() {
            let norms = u0_list[a].h_norm() + u0_list[b].h_norm();
            let observables = obs
                .observables
                .iter()
                .enumerate()
                .map(|(j, o)| {
                    let diffs: Vec<f64> = (0..paths).map(|p| values[a][p][j] - values[b][p][j]).collect();
                    let discrepancy = mean(&diffs).abs();
                    let se = if paths > 1 { std_error(&diffs) } else { 0.0 };
                    let lipschitz = o.lipschitz(&space, radius);
                    let envelope = lipschitz * decay * norms;
                    ObservableDiscrepancy {
                        name: o.name(),
                        discrepancy,
                        std_error: se,
                        lipschitz,
                        envelope,
                        holds: discrepancy <= envelope + 3.0 * se,
                    }
                })
                .collect();
            pairs.push(MixingPair { first: a, second: b, observables });
        }
    }
    Ok(MixingReport { rate, horizon, radius, pairs })
}
