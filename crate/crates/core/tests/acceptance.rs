//! Acceptance criteria. Prints one `PASS`/`FAIL` line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use scbf_core::integrator::{energy_residual, simulate, ResidualKind, Scheme};
use scbf_core::operators::{convective_pair, forchheimer_c, monotonicity_gap};
use scbf_core::stability::{
    contraction_experiment, ms_stability_experiment, relaxation_experiment, stabilization_experiment, stability_rate,
    stabilization_rate,
};
use scbf_core::stationary::{solve_stationary, stationary_bound_check, stationary_residual};
use scbf_core::stats::{mean, std_error};
use scbf_core::verify::oracles::{convolution_oracle_b, pointwise_oracle_c, relative_deviation};
use scbf_core::verify::{run_property_battery, trial_field};
use scbf_core::{
    ergodics::{mixing_test, ObservableSet},
    spectral::stokes_apply,
    NoiseModel, PhysicsParams, RandomFieldLaw, SolverConfig, SpectralField, SpectralSpace,
};

const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(id: usize, title: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let took = start.elapsed();
    let in_budget = took <= budget;
    let pass = out.pass && in_budget;
    println!(
        "{} [{id}] {title}: {} ({:.1} s, budget {} s{})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        took.as_secs_f64(),
        budget.as_secs(),
        if in_budget { "" } else { ", over budget" }
    );
    pass
}

fn oracle_equivalence() -> Outcome {
    let sp = SpectralSpace::new(2, 8).unwrap();
    let mut worst_b: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for t in 0..200 {
        let u = trial_field(&sp, SEED, t, 0);
        let v = trial_field(&sp, SEED, t, 1);
        worst_b = worst_b.max(relative_deviation(&convective_pair(&u, &v), &convolution_oracle_b(&u, &v).unwrap()));
        let r = [3.0, 5.0, 7.0, 9.0][t % 4];
        worst_c = worst_c.max(relative_deviation(&forchheimer_c(&u, r), &pointwise_oracle_c(&u, r).unwrap()));
    }
    Outcome {
        pass: worst_b <= 1e-10 && worst_c <= 1e-10,
        detail: format!("200 fields on 8^2, max rel dev B {worst_b:.2e}, C {worst_c:.2e} (tol 1e-10)"),
    }
}

fn monotonicity() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let p5 = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
    let p3 = PhysicsParams::new(1.0, 1.0, 3.0).unwrap();
    let eta = p5.eta().unwrap();
    let mut worst5: f64 = 0.0;
    let mut worst3: f64 = 0.0;
    for t in 0..1000 {
        let u = trial_field(&sp, SEED ^ 5, t, 0);
        let v = trial_field(&sp, SEED ^ 5, t, 1);
        let rep = monotonicity_gap(&u, &v, &p5).unwrap();
        if rep.gap < 0.0 {
            worst5 = worst5.max(-rep.gap / rep.scale());
        }
        let rep = monotonicity_gap(&u, &v, &p3).unwrap();
        worst3 = worst3.max(-rep.gap);
    }
    Outcome {
        pass: (eta - 0.125).abs() < 1e-15 && worst5 <= 1e-9 && worst3 <= 1e-9,
        detail: format!(
            "eta(1,1,5) = {eta}; r=5 worst scaled violation {worst5:.2e}, r=3 worst violation {worst3:.2e} over 1000 pairs"
        ),
    }
}

fn structural() -> Outcome {
    let reports = run_property_battery(SEED, 200);
    let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| format!("{} ({:.2e})", r.name, r.max_deviation)).collect();
    let skipped = reports.iter().filter(|r| r.skipped).count();
    let min_trials = reports.iter().filter(|r| !r.skipped).map(|r| r.trials).min().unwrap_or(0);
    Outcome {
        pass: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{} battery entries pass, {skipped} skipped, min trials {min_trials}", reports.len())
        } else {
            format!("failing: {}", failed.join("; "))
        },
    }
}

fn ito_energy() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
    let model = NoiseModel::additive(&sp, 0.1).unwrap();
    let u0 = SpectralField::zeros(&sp);
    let max_residual = |dt: f64, substeps: u32| {
        let mut cfg = SolverConfig::new(dt, 1.0);
        cfg.noise_substeps = substeps;
        cfg.record_every = 1;
        let rec = simulate(&u0, &p, &model, &cfg, &mut cfg.stream(SEED, 0)).unwrap();
        energy_residual(&rec, &p, ResidualKind::Pathwise).iter().fold(0.0f64, |a, b| a.max(b.abs()))
    };
    // the coarse run sums pairs of fine blocks: one Brownian path for both
    let coarse = max_residual(1e-3, 2);
    let fine = max_residual(5e-4, 1);
    let ratio = coarse / fine;
    let cfg = SolverConfig::new(1e-3, 1.0);
    let finals: Vec<f64> = (0..64)
        .map(|path| {
            let rec = simulate(&u0, &p, &model, &cfg, &mut cfg.stream(SEED, path)).unwrap();
            *energy_residual(&rec, &p, ResidualKind::Expected).last().unwrap()
        })
        .collect();
    let (m, se) = (mean(&finals), std_error(&finals));
    Outcome {
        pass: ratio >= 1.8 && m.abs() <= 2.0 * se,
        detail: format!(
            "max|R| {coarse:.3e} at dt=1e-3, {fine:.3e} at dt=5e-4, ratio {ratio:.2} (need >= 1.8); ensemble R(T) = {m:.2e} +/- {se:.2e} over 64 paths"
        ),
    }
}

fn stationary() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    // shear mode, beta = 0: exact
    let p0 = PhysicsParams::new(1.0, 0.0, 5.0).unwrap();
    let shear = SpectralField::cosine_mode(&sp, [2, 1, 0], [1.0, -2.0, 0.0]).unwrap();
    let f0 = stokes_apply(&shear);
    let r0 = solve_stationary(&f0, &p0, 1e-8, 10_000).unwrap();
    let shear_err = (&r0.u_star - &shear).h_norm() / shear.h_norm();
    let shear_ok = r0.converged && r0.iterations <= 2 && shear_err < 1e-14;
    // generic small forcing
    let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
    let f = RandomFieldLaw::new(2.0, 0.5, 4).sample(&sp, SEED);
    let fv = f.vprime_norm_sq().sqrt();
    let r = solve_stationary(&f, &p, 1e-8, 10_000).unwrap();
    let res_ok = r.converged && r.residual_dual_norm <= 1e-8 * fv;
    let recomputed = stationary_residual(&r.u_star, &f, &p);
    let bound = stationary_bound_check(&r, &f, &p);
    let bound_ok = bound.holds(1e-9, 0.0);
    // grid doubling
    let sp2 = SpectralSpace::new(2, 32).unwrap();
    let f2 = embed(&f, &sp2);
    let r2 = solve_stationary(&f2, &p, 1e-8, 10_000).unwrap();
    let drift = (&embed(&r.u_star, &sp2) - &r2.u_star).h_norm() / r2.u_star.h_norm();
    // relaxation from a perturbed state
    let u0 = &r.u_star + &RandomFieldLaw::default().sample(&sp, SEED + 1);
    let mut cfg = SolverConfig::new(1e-3, 10.0);
    cfg.scheme = Scheme::SemiImplicitEm;
    let forced = p.clone().with_forcing(f.clone());
    let (rate, _, _) = relaxation_experiment(&u0, &r.u_star, &forced, &cfg).unwrap();
    Outcome {
        pass: shear_ok && res_ok && bound_ok && drift < 5e-4 && rate.verdict.passed(),
        detail: format!(
            "shear: {} iterations, rel err {shear_err:.1e}; generic: residual {:.2e} ({:.2e} recomputed) vs {:.2e}, bound {:.4e} <= {:.4e}, grid-doubling drift {drift:.1e}; relaxation rate {:.3} vs kappa {:.3} (CI {:.3})",
            r0.iterations,
            r.residual_dual_norm,
            recomputed,
            1e-8 * fv,
            bound.lhs,
            bound.rhs,
            rate.fitted_rate,
            rate.theoretical_rate,
            rate.ci_half_width
        ),
    }
}

/// Copies the modes of `u` into a finer space.
fn embed(u: &SpectralField, fine: &SpectralSpace) -> SpectralField {
    let coarse = u.space();
    let mut out = SpectralField::zeros(fine);
    for m in 0..coarse.n_retained() {
        let j = fine.index_of(coarse.wavevector(m)).unwrap();
        out.mode_mut(j).copy_from_slice(u.mode(m));
    }
    out
}

fn stable_regime(sp: &SpectralSpace) -> (PhysicsParams, NoiseModel) {
    (PhysicsParams::new(2.0, 1.0, 5.0).unwrap(), NoiseModel::scalar(0.5, SpectralField::zeros(sp)).unwrap())
}

fn mean_square() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let (p, model) = stable_regime(&sp);
    let cfg = SolverConfig::new(1e-3, 5.0);
    let z = SpectralField::zeros(&sp);
    let (rep, _) = ms_stability_experiment(&p, &model, &z, &RandomFieldLaw::default(), 64, &cfg, SEED).unwrap();
    Outcome {
        pass: rep.verdict.passed() && rep.fitted_rate >= 1.625 - rep.ci_half_width,
        detail: format!(
            "theta = 2 - (0.25 + 2 eta(2,1,5)) = {} with eta = 1/32; fitted {:.3} +/- {:.3} on [{:.1}, {:.1}]",
            rep.theoretical_rate, rep.fitted_rate, rep.ci_half_width, rep.fit_window.0, rep.fit_window.1
        ),
    }
}

fn contraction() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let (p, model) = stable_regime(&sp);
    let cfg = SolverConfig::new(1e-3, 5.0);
    let u0 = RandomFieldLaw::default().sample(&sp, SEED + 10);
    let v0 = RandomFieldLaw::default().sample(&sp, SEED + 11);
    let (rep, _) = contraction_experiment(&p, &model, &u0, &v0, 64, &cfg, SEED).unwrap();
    Outcome {
        pass: rep.verdict.passed(),
        detail: format!(
            "synchronous coupling, 64 paths: fitted {:.3} +/- {:.3} vs mu*lambda1 - (2 eta + L) = {}",
            rep.fitted_rate, rep.ci_half_width, rep.theoretical_rate
        ),
    }
}

fn stabilization() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let p = PhysicsParams::new(0.1, 1.0, 5.0).unwrap();
    let sigma = 5.5;
    let zeta = stabilization_rate(&p, sigma, 1.0).unwrap();
    let model = NoiseModel::scalar(sigma, SpectralField::zeros(&sp)).unwrap();
    let law = RandomFieldLaw::default().with_amplitude(0.05);
    let fraction = |dt: f64| {
        let mut cfg = SolverConfig::new(dt, 1.0);
        cfg.record_every = (1e-2 / dt).round() as usize;
        let reps = stabilization_experiment(&p, &model, &law, 64, &cfg, SEED).unwrap();
        let checked: usize = reps.iter().map(|r| r.checked).sum();
        let bad: usize = reps.iter().map(|r| r.violations).sum();
        bad as f64 / checked as f64
    };
    let coarse = fraction(1e-3);
    let fine = fraction(5e-4);
    Outcome {
        pass: zeta > 0.0 && coarse <= 0.01 && fine <= coarse,
        detail: format!(
            "mu=0.1, eta={}, sigma={sigma}, zeta={zeta:.3}; violation fraction {coarse:.4} at dt=1e-3, {fine:.4} at dt=5e-4",
            p.eta().unwrap()
        ),
    }
}

fn mixing() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let p = PhysicsParams::new(2.0, 1.0, 5.0).unwrap();
    let model = NoiseModel::additive(&sp, 0.1).unwrap();
    let u0 = RandomFieldLaw::default().sample(&sp, SEED + 20);
    let v0 = RandomFieldLaw::default().sample(&sp, SEED + 21);
    let obs = ObservableSet::standard(&sp, 5.0).unwrap();
    let cfg = SolverConfig::new(1e-3, 5.0);
    let rep = mixing_test(&[u0.clone(), v0.clone()], &p, &model, &obs, &cfg, 64, SEED).unwrap();
    let worst = rep.pairs[0]
        .observables
        .iter()
        .map(|o| o.discrepancy / (o.envelope + 3.0 * o.std_error).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Outcome {
        pass: rep.all_hold(),
        detail: format!(
            "|u0 - v0|_H = {:.2}, rate {}, {} observables; worst discrepancy/(envelope + 3 SE) = {worst:.2e}",
            (&u0 - &v0).h_norm(),
            stability_rate(&p, &model, 1.0).unwrap(),
            obs.len()
        ),
    }
}

fn determinism() -> Outcome {
    let sp = SpectralSpace::new(2, 16).unwrap();
    let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
    let u0 = RandomFieldLaw::default().sample(&sp, SEED);
    let cfg = SolverConfig::new(1e-3, 0.2);
    let mut same = true;
    for model in [
        NoiseModel::additive(&sp, 0.1).unwrap(),
        NoiseModel::scalar(0.5, SpectralField::zeros(&sp)).unwrap(),
    ] {
        let a = simulate(&u0, &p, &model, &cfg, &mut cfg.stream(SEED, 3)).unwrap().to_csv();
        let b = simulate(&u0, &p, &model, &cfg, &mut cfg.stream(SEED, 3)).unwrap().to_csv();
        same &= a == b;
    }
    let (p2, m2) = stable_regime(&sp);
    let z = SpectralField::zeros(&sp);
    let e1 = ms_stability_experiment(&p2, &m2, &z, &RandomFieldLaw::default(), 8, &cfg, SEED).unwrap().1.to_csv();
    let e2 = ms_stability_experiment(&p2, &m2, &z, &RandomFieldLaw::default(), 8, &cfg, SEED).unwrap().1.to_csv();
    same &= e1 == e2;
    Outcome { pass: same, detail: "trajectory and ensemble CSVs byte-identical across reruns".into() }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "operator oracle equivalence", secs(10), oracle_equivalence),
        run(2, "monotonicity battery", secs(60), monotonicity),
        run(3, "structural identities and bounds", secs(60), structural),
        run(4, "Ito energy equality", secs(300), ito_energy),
        run(5, "stationary solver", secs(120), stationary),
        run(6, "mean-square stability", secs(600), mean_square),
        run(7, "two-solution contraction", secs(600), contraction),
        run(8, "stabilization by multiplicative noise", secs(600), stabilization),
        run(9, "mixing envelope", secs(900), mixing),
        run(10, "determinism", secs(60), determinism),
    ];
    let passed = results.iter().filter(|&&x| x).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
