//! Time stepping of the Galerkin system
//! `du + (μAu + B(u) + βC(u)) dt = f dt + Φ(u) dW`
//! with pathwise bookkeeping of every term of the Itô energy balance.
//!
//! A step forms `w = u_n + dt·N(u_n) + Φ(u_n)ΔW` with `N = f - B - βC` and
//! then applies the linear propagator: `e^{-μA dt}` (exponential scheme) or
//! `(I + μ dt A)^{-1}` (semi-implicit scheme). The dissipated energy of the
//! linear part is booked exactly, `I_n = (‖w‖² - ‖u_{n+1}‖²)/(2μ)`, so the
//! discrete balance
//!
//! `‖u_{n+1}‖² + 2μ I_n + 2β dt ‖u_n‖^{r+1} = ‖u_n‖² + 2dt⟨f,u_n⟩ + 2(ΦΔW,u_n) + ‖dt N + ΦΔW‖²`
//!
//! holds to round-off and the residual against the continuous equality is
//! pure time-discretization error.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScbfError};
use crate::noise::{NoiseModel, WienerIncrement};
use crate::operators::{convective_b, forchheimer_c_with_integral, PhysicsParams};
use crate::rng::PathStream;
use crate::spectral::{SpectralField, SpectralSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExponentialEulerMaruyama,
    SemiImplicitEm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Record diagnostics every this many steps (plus the final step).
    pub record_every: usize,
    /// Blow-up guard on `‖u‖_H`.
    pub clip_threshold: f64,
    /// Base Brownian blocks aggregated per step; see [`PathStream::with_substeps`].
    pub noise_substeps: u32,
    /// Keep a field snapshot every this many recordings (0 = never).
    pub snapshot_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::ExponentialEulerMaruyama,
            record_every: 10,
            clip_threshold: 1e6,
            noise_substeps: 1,
            snapshot_every: 0,
        }
    }
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig { dt, t_end, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ScbfError::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt) {
            return Err(ScbfError::InvalidArgument(format!("t_end {} shorter than dt {}", self.t_end, self.dt)));
        }
        if !(self.clip_threshold > 0.0) {
            return Err(ScbfError::InvalidArgument("clip_threshold must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(ScbfError::InvalidArgument("record_every must be at least 1".into()));
        }
        if self.noise_substeps == 0 {
            return Err(ScbfError::InvalidArgument("noise_substeps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Stream for path `path` positioned for this configuration.
    pub fn stream(&self, master: u64, path: u64) -> PathStream {
        PathStream::new(master, path).with_substeps(self.noise_substeps)
    }
}

/// Energy-balance contributions of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    /// `2(Φ(u_n)ΔW, u_n)`.
    pub martingale: f64,
    /// `‖Φ(u_n)‖²_{L_Q} dt`.
    pub hs: f64,
    /// `‖Φ(u_n)ΔW‖²`, the realized quadratic variation.
    pub qv: f64,
    /// Scalar Brownian increment (zero for Q-Wiener models).
    pub dw: f64,
    /// `∫‖u‖²_V dt` along the linear flow of the step.
    pub int_v: f64,
    /// `dt ‖u_n‖^{r+1}_{L^{r+1}}`.
    pub int_lr1: f64,
    /// `dt ⟨f, u_n⟩`.
    pub forcing_work: f64,
    /// `‖u_n‖^{r+1}_{L^{r+1}}`.
    pub lr1: f64,
}

/// Precomputed linear propagator for one `(space, μ, dt, scheme)`.
#[derive(Clone, Debug)]
pub struct Stepper {
    params: PhysicsParams,
    model: NoiseModel,
    dt: f64,
    clip: f64,
    factor: Vec<f64>,
}

impl Stepper {
    pub fn new(space: &SpectralSpace, params: &PhysicsParams, model: &NoiseModel, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if let Some(f) = &params.forcing {
            if f.space() != space {
                return Err(ScbfError::SpaceMismatch("forcing lives on a different space".into()));
            }
        }
        let dt = config.dt;
        let factor = space
            .lambdas()
            .iter()
            .map(|&l| match config.scheme {
                Scheme::ExponentialEulerMaruyama => (-params.mu * l * dt).exp(),
                Scheme::SemiImplicitEm => 1.0 / (1.0 + params.mu * l * dt),
            })
            .collect();
        Ok(Stepper { params: params.clone(), model: model.clone(), dt, clip: config.clip_threshold, factor })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn sample(&self, stream: &mut PathStream) -> Result<WienerIncrement> {
        self.model.sample_increment(self.dt, stream)
    }

    /// Advances `u` from `t` by one step driven by `incr`.
    pub fn step_with(&self, u: &SpectralField, t: f64, incr: &WienerIncrement) -> Result<(SpectralField, StepDiagnostics)> {
        let dt = self.dt;
        let p = &self.params;
        let mut w = u.clone();
        let mut diag = StepDiagnostics::default();
        if !u.is_zero() {
            w.axpy(-dt, &convective_b(u));
            if p.beta != 0.0 {
                let (c, lr1) = forchheimer_c_with_integral(u, p.r);
                w.axpy(-dt * p.beta, &c);
                diag.lr1 = lr1;
                diag.int_lr1 = dt * lr1;
            }
        }
        if let Some(f) = &p.forcing {
            w.axpy(dt, f);
            diag.forcing_work = dt * f.inner(u);
        }
        if !matches!(self.model, NoiseModel::None) {
            let noise = self.model.phi_apply_increment(t, u, incr)?;
            diag.martingale = 2.0 * noise.inner(u);
            diag.qv = noise.h_norm_sq();
            diag.hs = self.model.hs_norm_sq(t, u)? * dt;
            if let NoiseModel::ScalarStationary { .. } = self.model {
                diag.dw = incr.scalar();
            }
            w += &noise;
        }
        let d = u.space().dim();
        let wn = w.h_norm_sq();
        let mut next = w;
        for (m, chunk) in next.coeffs_mut().chunks_mut(d).enumerate() {
            let s = self.factor[m];
            for c in chunk {
                *c *= s;
            }
        }
        next.enforce_hermitian();
        let nn = next.h_norm_sq();
        diag.int_v = (wn - nn) / (2.0 * p.mu);
        if !next.is_finite() || !nn.is_finite() {
            return Err(ScbfError::NonFinite { t: t + dt });
        }
        if nn.sqrt() > self.clip {
            return Err(ScbfError::BlowUp { t: t + dt, norm: nn.sqrt() });
        }
        Ok((next, diag))
    }

    /// Draws the next increment from `stream` and advances.
    pub fn step(&self, u: &SpectralField, t: f64, stream: &mut PathStream) -> Result<(SpectralField, StepDiagnostics)> {
        let incr = self.sample(stream)?;
        self.step_with(u, t, &incr)
    }
}

/// One step of the scheme; see [`Stepper`] for repeated use.
pub fn step(
    u: &SpectralField,
    t: f64,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    stream: &mut PathStream,
) -> Result<(SpectralField, StepDiagnostics)> {
    Stepper::new(u.space(), params, model, config)?.step(u, t, stream)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    BlowUp { t: f64 },
    NonFinite { t: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlowUp { .. } => "blow_up",
            RunStatus::NonFinite { .. } => "non_finite",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Diagnostics at the recording times. Accumulators are cumulative from 0.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub h_norm_sq: Vec<f64>,
    pub v_norm_sq: Vec<f64>,
    pub lr1_norm: Vec<f64>,
    pub martingale: Vec<f64>,
    pub hs: Vec<f64>,
    pub qv: Vec<f64>,
    /// Scalar Wiener path, present for the scalar noise model.
    pub wiener: Option<Vec<f64>>,
    pub int_v: Vec<f64>,
    pub int_lr1: Vec<f64>,
    pub forcing_work: Vec<f64>,
    /// Largest `‖u‖²_H` over every step, not only recorded ones.
    pub h_sup: f64,
    pub status: RunStatus,
    pub snapshots: Vec<(f64, SpectralField)>,
    pub final_state: SpectralField,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_h_norm_sq(&self) -> f64 {
        self.h_norm_sq[0]
    }

    /// CSV with a header line; floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,h_norm_sq,v_norm_sq,lr1_norm,M,HS,");
        if self.wiener.is_some() {
            out.push_str("W,");
        }
        out.push_str("status,int_v,int_lr1,forcing_work,QV\n");
        let last = self.len().saturating_sub(1);
        for i in 0..self.len() {
            let status = if i == last { self.status.label() } else { "ok" };
            out.push_str(&format!(
                "{},{},{},{},{},{},",
                self.times[i], self.h_norm_sq[i], self.v_norm_sq[i], self.lr1_norm[i], self.martingale[i], self.hs[i]
            ));
            if let Some(w) = &self.wiener {
                out.push_str(&format!("{},", w[i]));
            }
            out.push_str(&format!(
                "{status},{},{},{},{}\n",
                self.int_v[i], self.int_lr1[i], self.forcing_work[i], self.qv[i]
            ));
        }
        out
    }
}

struct Accum {
    m: f64,
    hs: f64,
    qv: f64,
    w: f64,
    iv: f64,
    il: f64,
    fw: f64,
}

/// Integrates from `u0` over `[0, t_end]`. Blow-up and non-finite states end
/// the run early and are reported in [`TrajectoryRecord::status`].
pub fn simulate(
    u0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    stream: &mut PathStream,
) -> Result<TrajectoryRecord> {
    simulate_observed(u0, params, model, config, stream, |_, _| {})
}

/// [`simulate`] with a callback at every recording time.
pub fn simulate_observed(
    u0: &SpectralField,
    params: &PhysicsParams,
    model: &NoiseModel,
    config: &SolverConfig,
    stream: &mut PathStream,
    mut observe: impl FnMut(f64, &SpectralField),
) -> Result<TrajectoryRecord> {
    if !u0.is_finite() {
        return Err(ScbfError::InvalidArgument("initial field is not finite".into()));
    }
    let stepper = Stepper::new(u0.space(), params, model, config)?;
    let scalar = matches!(model, NoiseModel::ScalarStationary { .. });
    let n = config.n_steps();
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        h_norm_sq: Vec::new(),
        v_norm_sq: Vec::new(),
        lr1_norm: Vec::new(),
        martingale: Vec::new(),
        hs: Vec::new(),
        qv: Vec::new(),
        wiener: if scalar { Some(Vec::new()) } else { None },
        int_v: Vec::new(),
        int_lr1: Vec::new(),
        forcing_work: Vec::new(),
        h_sup: u0.h_norm_sq(),
        status: RunStatus::Completed,
        snapshots: Vec::new(),
        final_state: u0.clone(),
    };
    let mut acc = Accum { m: 0.0, hs: 0.0, qv: 0.0, w: 0.0, iv: 0.0, il: 0.0, fw: 0.0 };
    let push = |rec: &mut TrajectoryRecord, acc: &Accum, t: f64, u: &SpectralField, lr1: f64| {
        rec.times.push(t);
        rec.h_norm_sq.push(u.h_norm_sq());
        rec.v_norm_sq.push(u.v_norm_sq());
        rec.lr1_norm.push(lr1);
        rec.martingale.push(acc.m);
        rec.hs.push(acc.hs);
        rec.qv.push(acc.qv);
        if let Some(w) = rec.wiener.as_mut() {
            w.push(acc.w);
        }
        rec.int_v.push(acc.iv);
        rec.int_lr1.push(acc.il);
        rec.forcing_work.push(acc.fw);
        if config.snapshot_every > 0 && (rec.times.len() - 1) % config.snapshot_every == 0 {
            rec.snapshots.push((t, u.clone()));
        }
    };
    let lr1_of = |u: &SpectralField| crate::operators::absorption_integral(u, params.r);
    let mut u = u0.clone();
    let mut t = 0.0;
    push(&mut rec, &acc, 0.0, &u, lr1_of(&u));
    observe(0.0, &u);
    for i in 0..n {
        match stepper.step(&u, t, stream) {
            Ok((next, d)) => {
                acc.m += d.martingale;
                acc.hs += d.hs;
                acc.qv += d.qv;
                acc.w += d.dw;
                acc.iv += d.int_v;
                acc.il += d.int_lr1;
                acc.fw += d.forcing_work;
                u = next;
                t = (i + 1) as f64 * config.dt;
                rec.h_sup = rec.h_sup.max(u.h_norm_sq());
                if (i + 1) % config.record_every == 0 || i + 1 == n {
                    push(&mut rec, &acc, t, &u, lr1_of(&u));
                    observe(t, &u);
                }
            }
            Err(ScbfError::BlowUp { t: tb, .. }) => {
                rec.status = RunStatus::BlowUp { t: tb };
                break;
            }
            Err(ScbfError::NonFinite { t: tb }) => {
                rec.status = RunStatus::NonFinite { t: tb };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    rec.final_state = u;
    Ok(rec)
}

/// Which Itô correction enters the residual.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualKind {
    /// Realized quadratic variation `sum ‖ΦΔW‖²`: pure discretization error.
    Pathwise,
    /// `∫‖Φ‖²_{L_Q} dt`: contains a mean-zero martingale fluctuation.
    Expected,
}

/// `R(t) = ‖u(t)‖² + 2μ∫‖u‖²_V + 2β∫‖u‖^{r+1} - ‖u₀‖² - correction - M(t) - 2∫⟨f,u⟩`.
pub fn energy_residual(record: &TrajectoryRecord, params: &PhysicsParams, kind: ResidualKind) -> Vec<f64> {
    let h0 = record.initial_h_norm_sq();
    (0..record.len())
        .map(|i| {
            let corr = match kind {
                ResidualKind::Pathwise => record.qv[i],
                ResidualKind::Expected => record.hs[i],
            };
            record.h_norm_sq[i] + 2.0 * params.mu * record.int_v[i] + 2.0 * params.beta * record.int_lr1[i]
                - h0
                - corr
                - record.martingale[i]
                - 2.0 * record.forcing_work[i]
        })
        .collect()
}

/// Monte-Carlo test of `E[sup‖u‖² + 4μ∫‖u‖²_V + 4β∫‖u‖^{r+1}] <= (2E‖u₀‖² + 14KT) e^{28KT}`.
///
/// With a body force and no noise the forced deterministic estimate
/// `sup‖u‖² + μ∫‖u‖²_V + 2β∫‖u‖^{r+1} <= 2(‖u₀‖² + T‖f‖²_{V'}/μ)` is used instead.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AprioriReport {
    pub lhs_mean: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn apriori_bound_check(records: &[TrajectoryRecord], params: &PhysicsParams, model: &NoiseModel) -> Result<AprioriReport> {
    if records.is_empty() {
        return Err(ScbfError::InsufficientSamples("no trajectories".into()));
    }
    let t_end = records[0].times.last().copied().unwrap_or(0.0);
    let h0: Vec<f64> = records.iter().map(|r| r.initial_h_norm_sq()).collect();
    let forced = params.forcing.as_ref().map_or(0.0, |f| f.vprime_norm_sq());
    let (lhs, rhs): (Vec<f64>, f64) = if forced > 0.0 {
        if !model.is_deterministic() {
            return Err(ScbfError::InvalidArgument("forced a-priori bound is deterministic only".into()));
        }
        let lhs = records
            .iter()
            .map(|r| r.h_sup + params.mu * r.int_v.last().unwrap() + 2.0 * params.beta * r.int_lr1.last().unwrap())
            .collect();
        (lhs, 2.0 * (crate::stats::mean(&h0) + t_end * forced / params.mu))
    } else {
        let k = model.growth_constant();
        let lhs = records
            .iter()
            .map(|r| {
                r.h_sup + 4.0 * params.mu * r.int_v.last().unwrap() + 4.0 * params.beta * r.int_lr1.last().unwrap()
            })
            .collect();
        (lhs, (2.0 * crate::stats::mean(&h0) + 14.0 * k * t_end) * (28.0 * k * t_end).exp())
    };
    let lhs_mean = crate::stats::mean(&lhs);
    let lhs_se = if lhs.len() > 1 { crate::stats::std_error(&lhs) } else { 0.0 };
    Ok(AprioriReport { lhs_mean, lhs_se, rhs, holds: lhs_mean <= rhs * (1.0 + 1e-12) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::random::RandomFieldLaw;

    fn space() -> SpectralSpace {
        SpectralSpace::new(2, 8).unwrap()
    }

    #[test]
    fn linear_flow_is_exact_heat_decay() {
        let s = space();
        let p = PhysicsParams::new(0.8, 0.0, 5.0).unwrap();
        let cfg = SolverConfig::new(0.01, 0.01);
        let mut st = PathStream::new(0, 0);
        let stepper = Stepper::new(&s, &p, &NoiseModel::None, &cfg).unwrap();
        // A single shear mode has B = 0, so with β = 0 the step is pure heat decay.
        let v = SpectralField::cosine_mode(&s, [2, 1, 0], [-1.0, 2.0, 0.0]).unwrap();
        let (next, _) = stepper.step(&v, 0.0, &mut st).unwrap();
        let e = (-0.8 * 5.0 * 0.01f64).exp();
        for (a, b) in v.coeffs().iter().zip(next.coeffs()) {
            assert!((a * e - b).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let s = space();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let cfg = SolverConfig::new(0.01, 0.1);
        let rec = simulate(&SpectralField::zeros(&s), &p, &NoiseModel::None, &cfg, &mut PathStream::new(0, 0)).unwrap();
        assert!(rec.final_state.is_zero());
        assert!(rec.h_norm_sq.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 1.0).validate().is_err());
        assert!(SolverConfig::new(0.1, 0.01).validate().is_err());
        let mut c = SolverConfig::new(0.1, 1.0);
        c.record_every = 0;
        assert!(c.validate().is_err());
        assert_eq!(SolverConfig::new(1e-3, 1.0).n_steps(), 1000);
    }

    #[test]
    fn blow_up_is_reported_not_raised() {
        let s = space();
        let u = RandomFieldLaw::default().sample(&s, 1);
        let p = PhysicsParams::new(1.0, 0.0, 5.0).unwrap();
        let mut cfg = SolverConfig::new(1e-3, 0.01);
        cfg.clip_threshold = 1e-6;
        let rec = simulate(&u, &p, &NoiseModel::None, &cfg, &mut PathStream::new(0, 0)).unwrap();
        assert!(matches!(rec.status, RunStatus::BlowUp { .. }));
        assert!(rec.to_csv().contains("blow_up"));
    }

    #[test]
    fn csv_has_wiener_column_for_scalar_noise() {
        let s = space();
        let u = RandomFieldLaw::default().sample(&s, 2);
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let m = NoiseModel::scalar(0.5, SpectralField::zeros(&s)).unwrap();
        let cfg = SolverConfig::new(0.01, 0.05);
        let rec = simulate(&u, &p, &m, &cfg, &mut PathStream::new(4, 0)).unwrap();
        let csv = rec.to_csv();
        assert!(csv.starts_with("t,h_norm_sq,v_norm_sq,lr1_norm,M,HS,W,status"));
        assert_eq!(csv.lines().count(), rec.len() + 1);
    }

    #[test]
    fn discrete_balance_matches_increment_norm() {
        // Pathwise residual equals sum ‖dt N + ΦΔW‖² - ‖ΦΔW‖² exactly; for
        // additive noise and small data this is tiny but nonzero.
        let s = space();
        let u = RandomFieldLaw::default().sample(&s, 5);
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let m = NoiseModel::additive(&s, 0.1).unwrap();
        let mut cfg = SolverConfig::new(1e-3, 0.05);
        cfg.record_every = 1;
        let rec = simulate(&u, &p, &m, &cfg, &mut PathStream::new(9, 0)).unwrap();
        let r = energy_residual(&rec, &p, ResidualKind::Pathwise);
        assert_eq!(r[0], 0.0);
        assert!(r.iter().all(|x| x.abs() < 1e-2 * rec.initial_h_norm_sq()));
    }
}
