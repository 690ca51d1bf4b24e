//! Run configuration: strict TOML with defaults for every optional section.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use scbf_core::integrator::Scheme;
use scbf_core::operators::GUARANTEED_R;
use scbf_core::{PhysicsParams, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Simulate,
    Stationary,
    Stability,
    Stabilize,
    Invariant,
    Verify,
    Oracle,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Stationary => "stationary",
            Experiment::Stability => "stability",
            Experiment::Stabilize => "stabilize",
            Experiment::Invariant => "invariant",
            Experiment::Verify => "verify",
            Experiment::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
}

fn default_dim() -> usize {
    2
}
fn default_modes() -> usize {
    16
}

impl Default for SpaceSection {
    fn default() -> Self {
        SpaceSection { dim: default_dim(), n_modes: default_modes() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldRecipe {
    Zero,
    /// `a cos(k·x)`, or `a sin(k·x)` when `sine` is set.
    Mode {
        k: [i32; 3],
        amplitude: [f64; 3],
        #[serde(default)]
        sine: bool,
        /// Multiply by `μA`, so the recipe is the forcing whose steady state is the mode.
        #[serde(default)]
        stokes: bool,
    },
    Random {
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        #[serde(default = "default_cutoff")]
        cutoff: i32,
        #[serde(default)]
        seed: u64,
    },
    Snapshot {
        path: PathBuf,
    },
}

fn default_decay() -> f64 {
    2.0
}
fn default_amplitude() -> f64 {
    1.0
}
fn default_cutoff() -> i32 {
    i32::MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    #[serde(default = "one")]
    pub mu: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "five")]
    pub r: f64,
    /// Restrict `r` to the exponents the theory fully covers.
    #[serde(default = "yes")]
    pub guaranteed: bool,
    #[serde(default = "zero_recipe")]
    pub forcing: FieldRecipe,
}

fn one() -> f64 {
    1.0
}
fn five() -> f64 {
    5.0
}
fn yes() -> bool {
    true
}
fn zero_recipe() -> FieldRecipe {
    FieldRecipe::Zero
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection { mu: 1.0, beta: 1.0, r: 5.0, guaranteed: true, forcing: FieldRecipe::Zero }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UStar {
    /// `u∞ = 0`.
    Zero,
    /// The steady state of the configured forcing.
    Stationary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSection {
    None,
    Additive {
        trace: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Scalar {
        sigma: f64,
        #[serde(default = "ustar_zero")]
        u_star: UStar,
    },
    LinearDiagonal {
        trace: f64,
        sigma: f64,
        #[serde(default = "ustar_zero")]
        u_star: UStar,
    },
}

fn ustar_zero() -> UStar {
    UStar::Zero
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection::None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default = "default_record")]
    pub record_every: usize,
    #[serde(default = "default_clip")]
    pub clip_threshold: f64,
    #[serde(default = "default_substeps")]
    pub noise_substeps: u32,
    #[serde(default)]
    pub snapshot_every: usize,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_t_end() -> f64 {
    1.0
}
fn default_scheme() -> Scheme {
    Scheme::ExponentialEulerMaruyama
}
fn default_record() -> usize {
    10
}
fn default_clip() -> f64 {
    1e6
}
fn default_substeps() -> u32 {
    1
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: default_dt(),
            t_end: default_t_end(),
            scheme: default_scheme(),
            record_every: default_record(),
            clip_threshold: default_clip(),
            noise_substeps: default_substeps(),
            snapshot_every: 0,
        }
    }
}

impl SolverSection {
    pub fn to_solver(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            scheme: self.scheme,
            record_every: self.record_every,
            clip_threshold: self.clip_threshold,
            noise_substeps: self.noise_substeps,
            snapshot_every: self.snapshot_every,
        }
    }
}

/// Per-experiment knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

fn default_trials() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iter() -> usize {
    10_000
}
fn default_burn_in() -> f64 {
    0.2
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection { trials: 200, tol: 1e-8, max_iter: 10_000, burn_in: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default = "default_initial")]
    pub initial: FieldRecipe,
    #[serde(default)]
    pub settings: ExperimentSection,
}

fn default_paths() -> usize {
    16
}
fn default_initial() -> FieldRecipe {
    FieldRecipe::Random { decay: 2.0, amplitude: 1.0, cutoff: i32::MAX, seed: 0 }
}

/// One configuration problem, located in the source text when possible.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigIssue {
    pub key: String,
    pub line: Option<usize>,
    pub reason: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{} (line {l}): {}", self.key, self.reason),
            None => write!(f, "{}: {}", self.key, self.reason),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.issues.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

impl std::error::Error for ConfigError {}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key =` assignment, if any.
fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let leaf = key.rsplit('.').next().unwrap_or(key);
    text.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(leaf).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Parses and validates; every error carries key, line and reason.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let key = msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "config".into());
        ConfigError {
            issues: vec![ConfigIssue {
                key,
                line: e.span().map(|s| line_of_offset(text, s.start)),
                reason: msg,
            }],
        }
    })?;
    let issues = cfg.validate();
    if issues.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError {
            issues: issues
                .into_iter()
                .map(|(key, reason)| ConfigIssue { line: line_of_key(text, &key), key, reason })
                .collect(),
        })
    }
}

impl RunConfig {
    /// Field-level and cross-field checks that do not need the experiment kind.
    pub fn validate(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut bad = |k: &str, r: String| out.push((k.to_string(), r));
        if !(2..=3).contains(&self.space.dim) {
            bad("space.dim", format!("must be 2 or 3, got {}", self.space.dim));
        }
        if self.space.n_modes < 4 || !self.space.n_modes.is_power_of_two() {
            bad("space.n_modes", format!("must be a power of two >= 4, got {}", self.space.n_modes));
        }
        let p = &self.physics;
        if !(p.mu > 0.0) {
            bad("physics.mu", format!("must be positive, got {}", p.mu));
        }
        if !(p.beta >= 0.0) {
            bad("physics.beta", format!("must be nonnegative, got {}", p.beta));
        }
        if !(p.r >= 1.0) {
            bad("physics.r", format!("must be at least 1, got {}", p.r));
        } else if p.guaranteed && !GUARANTEED_R.contains(&p.r) {
            bad(
                "physics.r",
                format!(
                    "r = {} is outside the supported exponents {{3, 5, 7, 9}}; set physics.guaranteed = false to run it unguarded",
                    p.r
                ),
            );
        }
        let s = &self.solver;
        if !(s.dt > 0.0) {
            bad("solver.dt", format!("must be positive, got {}", s.dt));
        }
        if !(s.t_end >= s.dt) {
            bad("solver.t_end", format!("must be at least dt, got {}", s.t_end));
        }
        if s.record_every == 0 {
            bad("solver.record_every", "must be at least 1".into());
        }
        if s.noise_substeps == 0 {
            bad("solver.noise_substeps", "must be at least 1".into());
        }
        if self.paths == 0 {
            bad("paths", "must be at least 1".into());
        }
        match &self.noise {
            NoiseSection::Additive { trace, gamma } => {
                if !(*trace >= 0.0) {
                    bad("noise.trace", format!("must be nonnegative, got {trace}"));
                }
                if let Some(g) = gamma {
                    if !(*g > self.space.dim as f64) {
                        bad("noise.gamma", format!("must exceed the dimension for trace class, got {g}"));
                    }
                }
            }
            NoiseSection::Scalar { sigma, .. } if !sigma.is_finite() => bad("noise.sigma", "must be finite".into()),
            NoiseSection::LinearDiagonal { trace, .. } if !(*trace >= 0.0) => {
                bad("noise.trace", format!("must be nonnegative, got {trace}"))
            }
            _ => {}
        }
        if !(0.0..1.0).contains(&self.settings.burn_in) {
            bad("settings.burn_in", "must lie in [0, 1)".into());
        }
        out
    }

    /// Warnings that do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let p = &self.physics;
        let mut w = Vec::new();
        if p.r == 3.0 && 2.0 * p.beta * p.mu < 1.0 {
            w.push(format!(
                "r = 3 with 2*beta*mu = {} < 1: the critical-case monotonicity does not apply",
                2.0 * p.beta * p.mu
            ));
        }
        w
    }

    pub fn params(&self) -> scbf_core::Result<PhysicsParams> {
        PhysicsParams::new(self.physics.mu, self.physics.beta, self.physics.r)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.space.n_modes, 16);
        assert_eq!(c.physics.r, 5.0);
        assert_eq!(c.noise, NoiseSection::None);
        assert_eq!(c.solver.dt, 1e-3);
    }

    #[test]
    fn unknown_key_rejected_with_line() {
        let err = parse_config("seed = 1\n[physics]\nmu = 1.0\nnu = 2.0\n").unwrap_err();
        let i = &err.issues[0];
        assert_eq!(i.key, "nu");
        assert_eq!(i.line, Some(4));
    }

    #[test]
    fn unsupported_exponent_names_the_restriction() {
        let err = parse_config("[physics]\nr = 2.5\n").unwrap_err();
        assert_eq!(err.issues[0].key, "physics.r");
        assert_eq!(err.issues[0].line, Some(2));
        assert!(err.issues[0].reason.contains("supported exponents"));
        assert!(parse_config("[physics]\nr = 2.5\nguaranteed = false\n").is_ok());
    }

    #[test]
    fn several_issues_reported_together() {
        let err = parse_config("paths = 0\n[space]\nn_modes = 12\n").unwrap_err();
        assert_eq!(err.issues.len(), 2);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let text = r#"
seed = 7
paths = 4
[physics]
mu = 2.0
forcing = { kind = "mode", k = [1, 0, 0], amplitude = [0.0, 1.0, 0.0] }
[noise]
kind = "scalar"
sigma = 0.5
[solver]
dt = 0.002
scheme = "semi_implicit_em"
"#;
        let a = parse_config(text).unwrap();
        let once = a.to_toml();
        let b = parse_config(&once).unwrap();
        assert_eq!(a, b);
        assert_eq!(once, b.to_toml());
    }

    #[test]
    fn critical_case_warns() {
        let c = parse_config("[physics]\nr = 3.0\nmu = 1.0\nbeta = 0.1\n").unwrap();
        assert_eq!(c.warnings().len(), 1);
    }
}
