//! Experiment dispatch.

use std::fs::File;
use std::io::BufReader;

use serde::Serialize;
use serde_json::json;

use scbf_core::ergodics::{long_run_average, mixing_test, tightness_diagnostic, ObservableSet};
use scbf_core::integrator::{apriori_bound_check, energy_residual, simulate, ResidualKind};
use scbf_core::noise::QSpectrum;
use scbf_core::spectral::snapshot::{read_snapshot, snapshot_bytes};
use scbf_core::spectral::stokes_apply;
use scbf_core::stability::{
    contraction_experiment, ms_stability_experiment, stability_rate, stabilization_experiment, stabilization_rate,
};
use scbf_core::stationary::{solve_stationary, stationary_bound_check, uniqueness_condition, StationaryResult};
use scbf_core::verify::oracles::{convolution_oracle_b, pointwise_oracle_c, relative_deviation, ORACLE_MAX_MODES};
use scbf_core::verify::{run_property_battery_with, trial_field, BatteryOptions};
use scbf_core::operators::{convective_pair, forchheimer_c};
use scbf_core::{NoiseModel, PhysicsParams, RandomFieldLaw, ScbfError, SpectralField, SpectralSpace};

use crate::config::{ConfigError, Experiment, FieldRecipe, NoiseSection, RunConfig, UStar};
use crate::manifest::OutputDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] ScbfError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(ScbfError::BlowUp { .. })
            | CliError::Core(ScbfError::NonFinite { .. })
            | CliError::Core(ScbfError::NotConverged { .. })
            | CliError::Core(ScbfError::InsufficientSamples(_)) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Core(ScbfError::ConditionNotMet(_)) => "condition_not_met",
            CliError::Core(_) if self.exit_code() == 3 => "numerical",
            CliError::Core(_) => "invalid_input",
            CliError::Io(_) => "io",
        }
    }
}

/// Result of a completed experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Outputs were written but some path blew up or went non-finite.
    Numerical,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Numerical => 3,
        }
    }

    fn of(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Serialize)]
struct Header<'a> {
    experiment: &'a str,
    seed: u64,
    verdict: &'a str,
}

fn build_field(recipe: &FieldRecipe, space: &SpectralSpace, params: &PhysicsParams, seed: u64) -> Result<SpectralField, CliError> {
    Ok(match recipe {
        FieldRecipe::Zero => SpectralField::zeros(space),
        FieldRecipe::Mode { k, amplitude, sine, stokes } => {
            let u = if *sine {
                SpectralField::sine_mode(space, *k, *amplitude)?
            } else {
                SpectralField::cosine_mode(space, *k, *amplitude)?
            };
            if *stokes {
                stokes_apply(&u).scaled(params.mu)
            } else {
                u
            }
        }
        FieldRecipe::Random { decay, amplitude, cutoff, seed: s } => {
            RandomFieldLaw::new(*decay, *amplitude, *cutoff).sample(space, s.wrapping_add(seed))
        }
        FieldRecipe::Snapshot { path } => {
            let file = File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let u = read_snapshot(BufReader::new(file))?;
            if u.space().dim() != space.dim() || u.space().n_modes() != space.n_modes() {
                return Err(CliError::Usage(format!(
                    "snapshot {} is {}D with {} modes, config expects {}D with {}",
                    path.display(),
                    u.space().dim(),
                    u.space().n_modes(),
                    space.dim(),
                    space.n_modes()
                )));
            }
            // rebuild on this run's space so space identity checks pass
            SpectralField::from_coeffs(space, u.coeffs().to_vec())?
        }
    })
}

fn law_of(recipe: &FieldRecipe) -> RandomFieldLaw {
    match recipe {
        FieldRecipe::Random { decay, amplitude, cutoff, .. } => RandomFieldLaw::new(*decay, *amplitude, *cutoff),
        _ => RandomFieldLaw::default(),
    }
}

/// Everything an experiment needs, built once.
struct Setup {
    cfg: RunConfig,
    space: SpectralSpace,
    params: PhysicsParams,
    forcing: SpectralField,
}

impl Setup {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let space = SpectralSpace::new(cfg.space.dim, cfg.space.n_modes)?;
        let base = cfg.params()?;
        let forcing = build_field(&cfg.physics.forcing, &space, &base, cfg.seed)?;
        let params = if forcing.is_zero() { base } else { base.with_forcing(forcing.clone()) };
        Ok(Setup { cfg: cfg.clone(), space, params, forcing })
    }

    fn steady_state(&self) -> Result<StationaryResult, CliError> {
        let s = &self.cfg.settings;
        let unforced = PhysicsParams { forcing: None, ..self.params.clone() };
        Ok(solve_stationary(&self.forcing, &unforced, s.tol, s.max_iter)?)
    }

    fn u_star(&self, which: UStar) -> Result<SpectralField, CliError> {
        match which {
            UStar::Zero => Ok(SpectralField::zeros(&self.space)),
            UStar::Stationary => Ok(self.steady_state()?.into_converged()?.u_star),
        }
    }

    fn noise(&self) -> Result<NoiseModel, CliError> {
        Ok(match &self.cfg.noise {
            NoiseSection::None => NoiseModel::None,
            NoiseSection::Additive { trace, gamma } => match gamma {
                Some(g) => NoiseModel::Additive { spectrum: QSpectrum::with_trace(&self.space, *trace, *g)? },
                None => NoiseModel::additive(&self.space, *trace)?,
            },
            NoiseSection::Scalar { sigma, u_star } => NoiseModel::scalar(*sigma, self.u_star(*u_star)?)?,
            NoiseSection::LinearDiagonal { trace, sigma, u_star } => {
                let spectrum = QSpectrum::default_law(&self.space, *trace)?;
                let n = spectrum.values().len();
                NoiseModel::linear_diagonal(spectrum, vec![*sigma; n], self.u_star(*u_star)?)?
            }
        })
    }

    /// Rejects regimes outside `μλ₁ > 2η + L` before any compute.
    fn require_stable(&self, model: &NoiseModel) -> Result<f64, CliError> {
        let rate = stability_rate(&self.params, model, self.space.lambda1())?;
        if rate <= 0.0 {
            return Err(ScbfError::ConditionNotMet(format!(
                "stability needs mu*lambda1 > 2*eta + L; here mu*lambda1 - (2*eta + L) = {rate}"
            ))
            .into());
        }
        Ok(rate)
    }
}

pub fn dispatch(exp: Experiment, cfg: &RunConfig, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let setup = Setup::new(cfg)?;
    let verdict = match exp {
        Experiment::Simulate => run_simulate(&setup, out)?,
        Experiment::Stationary => run_stationary(&setup, out)?,
        Experiment::Stability => run_stability(&setup, out)?,
        Experiment::Stabilize => run_stabilize(&setup, out)?,
        Experiment::Invariant => run_invariant(&setup, out)?,
        Experiment::Verify => run_verify(&setup, out)?,
        Experiment::Oracle => run_oracle(&setup, out)?,
    };
    Ok(verdict)
}

fn label(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Numerical => "numerical_failure",
    }
}

fn write_report(out: &mut OutputDir, setup: &Setup, exp: &str, v: Verdict, body: serde_json::Value) -> Result<(), CliError> {
    let header = Header { experiment: exp, seed: setup.cfg.seed, verdict: label(v) };
    out.write_json("report.json", &json!({ "run": header, "results": body }))?;
    Ok(())
}

fn run_simulate(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let model = s.noise()?;
    let solver = s.cfg.solver.to_solver();
    let mut records = Vec::new();
    let mut paths = Vec::new();
    for p in 0..s.cfg.paths {
        let u0 = build_field(&s.cfg.initial, &s.space, &s.params, s.cfg.seed.wrapping_add(p as u64))?;
        let rec = simulate(&u0, &s.params, &model, &solver, &mut solver.stream(s.cfg.seed, p as u64))?;
        out.write(&format!("trajectory_{p:03}.csv"), rec.to_csv().as_bytes())?;
        out.write(&format!("final_{p:03}.scbf"), &snapshot_bytes(&rec.final_state))?;
        for (i, (t, u)) in rec.snapshots.iter().enumerate() {
            let _ = t;
            out.write(&format!("snapshot_{p:03}_{i:04}.scbf"), &snapshot_bytes(u))?;
        }
        let residual = energy_residual(&rec, &s.params, ResidualKind::Pathwise);
        paths.push(json!({
            "path": p,
            "status": rec.status.label(),
            "final_h_norm_sq": rec.h_norm_sq.last(),
            "max_abs_energy_residual": residual.iter().fold(0.0f64, |a, b| a.max(b.abs())),
        }));
        records.push(rec);
    }
    let all_ok = records.iter().all(|r| r.status.is_completed());
    let apriori = if all_ok {
        match apriori_bound_check(&records, &s.params, &model) {
            Ok(r) => json!(r),
            Err(e) => json!({ "skipped": e.to_string() }),
        }
    } else {
        json!({ "skipped": "some paths ended early" })
    };
    let holds = apriori.get("holds").and_then(|h| h.as_bool()).unwrap_or(true);
    let v = if !all_ok { Verdict::Numerical } else { Verdict::of(holds) };
    write_report(out, s, "simulate", v, json!({ "noise": model.name(), "paths": paths, "apriori_bound": apriori }))?;
    Ok(v)
}

fn run_stationary(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let res = s.steady_state()?;
    let unforced = PhysicsParams { forcing: None, ..s.params.clone() };
    let bound = stationary_bound_check(&res, &s.forcing, &unforced);
    out.write("u_star.scbf", &snapshot_bytes(&res.u_star))?;
    let pass = res.converged && bound.holds(1e-9, 0.0);
    let v = if res.converged { Verdict::of(pass) } else { Verdict::Numerical };
    write_report(
        out,
        s,
        "stationary",
        v,
        json!({
            "residual_dual_norm": res.residual_dual_norm,
            "forcing_dual_norm": s.forcing.vprime_norm_sq().sqrt(),
            "iterations": res.iterations,
            "converged": res.converged,
            "used_fallback": res.used_fallback,
            "energy_bound": { "lhs": bound.lhs, "rhs": bound.rhs, "holds": bound.holds(1e-9, 0.0) },
            "uniqueness_condition": uniqueness_condition(&s.params, s.space.lambda1()),
        }),
    )?;
    Ok(v)
}

fn run_stability(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let model = s.noise()?;
    s.require_stable(&model)?;
    let reference = match model.u_star() {
        Some(u) => u.clone(),
        None => s.u_star(if s.forcing.is_zero() { UStar::Zero } else { UStar::Stationary })?,
    };
    let solver = s.cfg.solver.to_solver();
    let law = law_of(&s.cfg.initial);
    let (ms, ms_stats) = ms_stability_experiment(&s.params, &model, &reference, &law, s.cfg.paths, &solver, s.cfg.seed)?;
    out.write("mean_square.csv", ms_stats.to_csv().as_bytes())?;
    let u0 = &reference + &law.sample(&s.space, s.cfg.seed ^ 0x55);
    let v0 = &reference + &law.sample(&s.space, s.cfg.seed ^ 0xAA);
    let (ct, ct_stats) = contraction_experiment(&s.params, &model, &u0, &v0, s.cfg.paths, &solver, s.cfg.seed)?;
    out.write("contraction.csv", ct_stats.to_csv().as_bytes())?;
    let v = Verdict::of(ms.verdict.passed() && ct.verdict.passed());
    write_report(out, s, "stability", v, json!({ "mean_square": ms, "contraction": ct, "paths": s.cfg.paths }))?;
    Ok(v)
}

fn run_stabilize(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let model = s.noise()?;
    let NoiseModel::ScalarStationary { sigma, .. } = &model else {
        return Err(ScbfError::WrongNoiseVariant("stabilize needs noise.kind = \"scalar\"".into()).into());
    };
    let zeta = stabilization_rate(&s.params, *sigma, s.space.lambda1())?;
    let law = law_of(&s.cfg.initial);
    let mut coarse = s.cfg.solver.to_solver();
    coarse.noise_substeps = 2;
    let mut fine = coarse.clone();
    fine.dt = coarse.dt / 2.0;
    fine.noise_substeps = 1;
    fine.record_every = coarse.record_every * 2;
    let mut fractions = Vec::new();
    let mut csv = String::from("path,violations_dt,checked_dt,violations_half_dt,checked_half_dt\n");
    let a = stabilization_experiment(&s.params, &model, &law, s.cfg.paths, &coarse, s.cfg.seed)?;
    let b = stabilization_experiment(&s.params, &model, &law, s.cfg.paths, &fine, s.cfg.seed)?;
    for (p, (x, y)) in a.iter().zip(&b).enumerate() {
        csv.push_str(&format!("{p},{},{},{},{}\n", x.violations, x.checked, y.violations, y.checked));
    }
    for reps in [&a, &b] {
        let checked: usize = reps.iter().map(|r| r.checked).sum();
        let bad: usize = reps.iter().map(|r| r.violations).sum();
        fractions.push(if checked == 0 { 0.0 } else { bad as f64 / checked as f64 });
    }
    out.write("pathwise.csv", csv.as_bytes())?;
    let v = Verdict::of(fractions[0] <= 0.01 && fractions[1] <= fractions[0]);
    write_report(
        out,
        s,
        "stabilize",
        v,
        json!({
            "zeta": zeta,
            "zeta_positive": zeta > 0.0,
            "violation_fraction_dt": fractions[0],
            "violation_fraction_half_dt": fractions[1],
            "dt": coarse.dt,
            "paths": s.cfg.paths,
        }),
    )?;
    Ok(v)
}

fn run_invariant(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let model = s.noise()?;
    let solver = s.cfg.solver.to_solver();
    let obs = ObservableSet::standard(&s.space, s.params.r)?;
    let u0 = build_field(&s.cfg.initial, &s.space, &s.params, s.cfg.seed)?;
    let (avg, _) = long_run_average(&u0, &s.params, &model, &solver, &obs, s.cfg.seed, s.cfg.settings.burn_in)?;
    out.write("running_averages.csv", avg.to_csv().as_bytes())?;
    let mut pass = true;
    let tightness = {
        let mut records = Vec::new();
        for p in 0..s.cfg.paths {
            let rec = simulate(&u0, &s.params, &model, &solver, &mut solver.stream(s.cfg.seed, p as u64))?;
            if !rec.status.is_completed() {
                return Ok(Verdict::Numerical);
            }
            records.push(rec);
        }
        match tightness_diagnostic(&records, &s.params, &model, s.space.lambda1()) {
            Ok(t) => {
                pass &= t.holds;
                json!(t)
            }
            Err(e) => json!({ "skipped": e.to_string() }),
        }
    };
    let mixing = match stability_rate(&s.params, &model, s.space.lambda1()) {
        Ok(rate) if rate > 0.0 => {
            let v0 = law_of(&s.cfg.initial).sample(&s.space, s.cfg.seed ^ 0x3C3C);
            let m = mixing_test(&[u0.clone(), v0], &s.params, &model, &obs, &solver, s.cfg.paths, s.cfg.seed)?;
            pass &= m.all_hold();
            json!(m)
        }
        _ => json!({ "skipped": "mu*lambda1 <= 2*eta + L" }),
    };
    let v = Verdict::of(pass);
    write_report(
        out,
        s,
        "invariant",
        v,
        json!({
            "time_average": { "names": avg.names, "averages": avg.averages, "std_errors": avg.std_errors, "samples": avg.samples },
            "tightness": tightness,
            "mixing": mixing,
        }),
    )?;
    Ok(v)
}

fn run_verify(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let opts = BatteryOptions { mu: s.params.mu, ..Default::default() };
    let reports = run_property_battery_with(s.cfg.seed, s.cfg.settings.trials, &opts);
    let v = Verdict::of(reports.iter().all(|r| r.pass));
    write_report(out, s, "verify", v, json!(reports))?;
    Ok(v)
}

fn run_oracle(s: &Setup, out: &mut OutputDir) -> Result<Verdict, CliError> {
    let space = SpectralSpace::new(s.space.dim(), s.space.n_modes().min(ORACLE_MAX_MODES))?;
    let trials = s.cfg.settings.trials;
    let mut worst_b: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for t in 0..trials {
        let u = trial_field(&space, s.cfg.seed, t, 0);
        let w = trial_field(&space, s.cfg.seed, t, 1);
        worst_b = worst_b.max(relative_deviation(&convective_pair(&u, &w), &convolution_oracle_b(&u, &w)?));
        worst_c = worst_c.max(relative_deviation(&forchheimer_c(&u, s.params.r), &pointwise_oracle_c(&u, s.params.r)?));
    }
    let tol = 1e-10;
    let v = Verdict::of(worst_b <= tol && worst_c <= tol);
    write_report(
        out,
        s,
        "oracle",
        v,
        json!({
            "n_modes": space.n_modes(),
            "trials": trials,
            "convective_max_deviation": worst_b,
            "absorption_max_deviation": worst_c,
            "tolerance": tol,
        }),
    )?;
    Ok(v)
}
