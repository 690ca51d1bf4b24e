//! Steady states `μAu + B(u) + βC(u) = f`.
//!
//! Damped Picard iteration on the exactly invertible `μA`, starting from the
//! Stokes solution `(μA)⁻¹f`. The relaxation is halved whenever the residual
//! grows; if it stagnates the solver marches the deterministic flow with the
//! semi-implicit scheme (whose fixed points are exactly the steady states)
//! and then resumes Picard from there.

use serde::Serialize;

use crate::error::{Result, ScbfError};
use crate::integrator::{Scheme, SolverConfig, Stepper};
use crate::noise::{NoiseModel, WienerIncrement};
use crate::operators::{combined_g, convective_b, forchheimer_c, BoundCheck, PhysicsParams};
use crate::spectral::{stokes_power, SpectralField};

#[derive(Clone, Debug, Serialize)]
pub struct StationaryOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub omega: f64,
    /// Picard iterations without a new best residual before falling back.
    pub stagnation_window: usize,
    pub march_dt: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions { tol: 1e-8, max_iter: 10_000, omega: 0.7, stagnation_window: 50, march_dt: 1e-2 }
    }
}

#[derive(Clone, Debug)]
pub struct StationaryResult {
    pub u_star: SpectralField,
    /// `‖μAu + B(u) + βC(u) - f‖_{V'}`.
    pub residual_dual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub used_fallback: bool,
}

impl StationaryResult {
    /// Turns a non-converged result into [`ScbfError::NotConverged`].
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(ScbfError::NotConverged { residual: self.residual_dual_norm, iterations: self.iterations })
        }
    }
}

/// `‖μAu + B(u) + βC(u) - f‖_{V'}`, recomputed from scratch.
pub fn stationary_residual(u: &SpectralField, f: &SpectralField, params: &PhysicsParams) -> f64 {
    (&combined_g(u, params) - f).vprime_norm_sq().sqrt()
}

fn picard_map(u: &SpectralField, f: &SpectralField, params: &PhysicsParams) -> SpectralField {
    let mut rhs = f.clone();
    if !u.is_zero() {
        rhs -= &convective_b(u);
        if params.beta != 0.0 {
            rhs.axpy(-params.beta, &forchheimer_c(u, params.r));
        }
    }
    stokes_power(&rhs, -1.0).scaled(1.0 / params.mu)
}

pub fn solve_stationary(f: &SpectralField, params: &PhysicsParams, tol: f64, max_iter: usize) -> Result<StationaryResult> {
    solve_stationary_with(f, params, &StationaryOptions { tol, max_iter, ..Default::default() }, None)
}

/// Full control over the iteration, with an optional initial guess.
pub fn solve_stationary_with(
    f: &SpectralField,
    params: &PhysicsParams,
    opts: &StationaryOptions,
    guess: Option<&SpectralField>,
) -> Result<StationaryResult> {
    if !(opts.tol > 0.0) || !(opts.omega > 0.0 && opts.omega <= 1.0) {
        return Err(ScbfError::InvalidArgument("tol must be positive and omega in (0, 1]".into()));
    }
    if let Some(g) = guess {
        f.check_same_space(g)?;
    }
    let target = opts.tol * f.vprime_norm_sq().sqrt();
    let mut u = match guess {
        Some(g) => g.clone(),
        None => stokes_power(f, -1.0).scaled(1.0 / params.mu),
    };
    let mut res = stationary_residual(&u, f, params);
    let mut best = (u.clone(), res);
    let mut omega = opts.omega;
    let mut iterations = 0;
    let mut since_best = 0;
    let mut used_fallback = false;
    while res > target && iterations < opts.max_iter {
        if since_best >= opts.stagnation_window && !used_fallback {
            used_fallback = true;
            let (marched, steps) = march(&best.0, f, params, opts, target)?;
            iterations += steps;
            u = marched;
            res = stationary_residual(&u, f, params);
            if res < best.1 {
                best = (u.clone(), res);
            }
            omega = opts.omega;
            since_best = 0;
            continue;
        }
        let next = &u.scaled(1.0 - omega) + &picard_map(&u, f, params).scaled(omega);
        iterations += 1;
        let next_res = stationary_residual(&next, f, params);
        if !next_res.is_finite() {
            omega *= 0.5;
            since_best += 1;
            continue;
        }
        if next_res > res {
            omega = (omega * 0.5).max(1e-6);
        }
        u = next;
        res = next_res;
        if res < best.1 {
            best = (u.clone(), res);
            since_best = 0;
        } else {
            since_best += 1;
        }
    }
    let (u_star, residual_dual_norm) = best;
    Ok(StationaryResult {
        converged: residual_dual_norm <= target,
        u_star,
        residual_dual_norm,
        iterations,
        used_fallback,
    })
}

/// Deterministic pseudo-time marching until the residual target or the
/// iteration budget is reached.
fn march(
    u0: &SpectralField,
    f: &SpectralField,
    params: &PhysicsParams,
    opts: &StationaryOptions,
    target: f64,
) -> Result<(SpectralField, usize)> {
    let forced = params.clone().with_forcing(f.clone());
    let mut cfg = SolverConfig::new(opts.march_dt, opts.march_dt);
    cfg.scheme = Scheme::SemiImplicitEm;
    let stepper = Stepper::new(f.space(), &forced, &NoiseModel::None, &cfg)?;
    let none = WienerIncrement { dt: opts.march_dt, draws: Vec::new() };
    let mut u = u0.clone();
    let mut steps = 0;
    while steps < opts.max_iter {
        for _ in 0..100 {
            u = stepper.step_with(&u, 0.0, &none)?.0;
            steps += 1;
        }
        if stationary_residual(&u, f, params) <= target {
            break;
        }
    }
    Ok((u, steps))
}

/// `μ‖u∞‖²_V + 2β‖u∞‖^{r+1}_{L^{r+1}} <= ‖f‖²_{V'}/μ`.
pub fn stationary_bound_check(result: &StationaryResult, f: &SpectralField, params: &PhysicsParams) -> BoundCheck {
    let u = &result.u_star;
    let lhs = params.mu * u.v_norm_sq() + 2.0 * params.beta * u.lp_norm_pow(params.r + 1.0);
    let rhs = f.vprime_norm_sq() / params.mu;
    BoundCheck { lhs, rhs }
}

/// Uniqueness of the steady state: `μλ₁ > 2η` for `r > 3`, `2βμ >= 1` for `r = 3`.
pub fn uniqueness_condition(params: &PhysicsParams, lambda1: f64) -> bool {
    match params.eta() {
        Ok(eta) => params.mu * lambda1 > 2.0 * eta,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{stokes_apply, SpectralSpace};
    use crate::verify::random::RandomFieldLaw;

    #[test]
    fn shear_mode_is_exact_immediately() {
        let s = SpectralSpace::new(2, 16).unwrap();
        let p = PhysicsParams::new(1.3, 0.0, 5.0).unwrap();
        let u0 = SpectralField::cosine_mode(&s, [1, 2, 0], [2.0, -1.0, 0.0]).unwrap();
        let f = stokes_apply(&u0).scaled(1.3);
        let r = solve_stationary(&f, &p, 1e-8, 100).unwrap();
        assert!(r.converged && r.iterations <= 2);
        assert!((&r.u_star - &u0).h_norm() < 1e-14);
        let b = stationary_bound_check(&r, &f, &p);
        assert!((b.lhs - b.rhs).abs() <= 1e-12 * b.rhs);
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let s = SpectralSpace::new(2, 8).unwrap();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let r = solve_stationary(&SpectralField::zeros(&s), &p, 1e-8, 10).unwrap();
        assert!(r.converged && r.u_star.is_zero() && r.iterations == 0);
    }

    #[test]
    fn generic_forcing_converges_and_satisfies_bound() {
        let s = SpectralSpace::new(2, 16).unwrap();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let f = RandomFieldLaw::new(2.0, 1.0, 3).sample(&s, 8);
        let r = solve_stationary(&f, &p, 1e-8, 10_000).unwrap().into_converged().unwrap();
        let fresh = stationary_residual(&r.u_star, &f, &p);
        assert!((fresh - r.residual_dual_norm).abs() <= 1e-12 * fresh.max(1e-300));
        let b = stationary_bound_check(&r, &f, &p);
        assert!(b.holds(1e-9, 0.0), "{b:?}");
    }

    #[test]
    fn independent_guesses_agree_when_unique() {
        let s = SpectralSpace::new(2, 8).unwrap();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        assert!(uniqueness_condition(&p, 1.0));
        let f = RandomFieldLaw::new(2.0, 2.0, 3).sample(&s, 1);
        let opts = StationaryOptions::default();
        let g1 = RandomFieldLaw::default().sample(&s, 2);
        let g2 = RandomFieldLaw::default().sample(&s, 3);
        let a = solve_stationary_with(&f, &p, &opts, Some(&g1)).unwrap();
        let b = solve_stationary_with(&f, &p, &opts, Some(&g2)).unwrap();
        assert!(a.converged && b.converged);
        assert!((&a.u_star - &b.u_star).h_norm() <= 10.0 * opts.tol * f.vprime_norm_sq().sqrt().max(1.0));
    }

    #[test]
    fn fallback_marching_reaches_steady_state() {
        let s = SpectralSpace::new(2, 8).unwrap();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let f = RandomFieldLaw::new(2.0, 1.0, 3).sample(&s, 4);
        let opts = StationaryOptions { stagnation_window: 0, ..Default::default() };
        let r = solve_stationary_with(&f, &p, &opts, None).unwrap();
        assert!(r.used_fallback && r.converged);
    }

    #[test]
    fn uniqueness_predicate() {
        assert!(uniqueness_condition(&PhysicsParams::new(1.0, 1.0, 5.0).unwrap(), 1.0));
        assert!(uniqueness_condition(&PhysicsParams::new(1.0, 1.0, 3.0).unwrap(), 1.0));
        assert!(!uniqueness_condition(&PhysicsParams::new(0.01, 0.01, 5.0).unwrap(), 1.0));
        assert!(!uniqueness_condition(&PhysicsParams::new(1.0, 0.1, 3.0).unwrap(), 1.0));
    }
}
