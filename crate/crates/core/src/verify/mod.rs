//! Oracle comparisons and the property battery that gates the operator code.
//!
//! Each battery entry draws `trials` random inputs from its own seeded
//! stream, evaluates one identity or inequality and reports the worst
//! normalized violation. A failure names the entry, the worst trial and the
//! seed needed to replay it.

pub mod oracles;
pub mod random;

use rayon::prelude::*;
use serde::Serialize;

use crate::operators::{
    advection_raw, b_interpolated_bound_check, b_operator_bound_check, c_monotonicity_check, combined_g,
    convective_b, convective_pair, forchheimer_c, forchheimer_c_with_integral, lipschitz_check_c,
    local_monotonicity_2d, monotonicity_gap, periodic_regularity_bounds, trilinear_b, truncate_modes, PhysicsParams,
};
use crate::rng::PathStream;
use crate::spectral::{leray_project, smoothing_projection, stokes_apply, SpectralField, SpectralSpace};
use oracles::{convolution_oracle_b, leray_oracle, pointwise_oracle_c, relative_deviation};
use random::RandomFieldLaw;

/// Tolerance for exact identities (skew symmetry, projector algebra).
pub const STRUCTURAL_TOL: f64 = 1e-11;
/// Relative slack for inequalities.
pub const INEQUALITY_TOL: f64 = 1e-9;
/// Tolerance for pseudo-spectral versus brute-force operators.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    pub trials: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub skipped: bool,
    pub seed: u64,
    /// Index of the worst trial, for replay.
    pub worst_trial: usize,
    pub note: String,
}

/// Parameters of the battery. Defaults: `μ = β = 1`, 8² oracle grid, 16²
/// inequality grid, and a small three-dimensional smoke subset.
#[derive(Clone, Debug)]
pub struct BatteryOptions {
    pub mu: f64,
    pub beta: f64,
    pub oracle_modes: usize,
    pub inequality_modes: usize,
    pub smoke_3d: bool,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        BatteryOptions { mu: 1.0, beta: 1.0, oracle_modes: 8, inequality_modes: 16, smoke_3d: true }
    }
}

/// Names of every battery entry, in execution order.
pub const BATTERY_MANIFEST: &[&str] = &[
    "convective term matches direct convolution",
    "absorption term matches dense pointwise evaluation",
    "Leray projection matches per-mode least squares",
    "Leray projection is idempotent",
    "Stokes operator commutes with Leray projection",
    "Stokes pairing equals gradient quadrature",
    "Parseval agrees with collocation quadrature",
    "collocation round trip is the identity",
    "Poincare inequality with unit first eigenvalue",
    "Lebesgue interpolation inequality",
    "smoothing projection contracts in H and V",
    "trilinear form vanishes on repeated argument",
    "trilinear form antisymmetric in last two arguments",
    "convective term orthogonal to its argument",
    "absorption pairing equals L^{r+1} norm power",
    "bilinear dual-norm Holder bound",
    "bilinear interpolated dual-norm bound",
    "absorption local Lipschitz bound",
    "absorption increment lower bound",
    "absorption increment nonnegative",
    "shifted monotonicity of the combined operator",
    "global monotonicity in the critical case",
    "two-dimensional local monotonicity on L4 balls",
    "periodic regularity chain",
    "periodic Sobolev ratio stays bounded",
    "demicontinuity along spectral truncation",
    "three-dimensional convective orthogonality",
    "three-dimensional shifted monotonicity",
];

fn entry_seed(seed: u64, entry: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(entry as u64)
}

/// Random field for trial `t`: amplitude spread over three decades, varying
/// smoothness and bandwidth, with periodic degenerate (zero / tiny) inputs.
pub fn trial_field(space: &SpectralSpace, seed: u64, t: usize, slot: u64) -> SpectralField {
    use rand::Rng;
    let mut rng = PathStream::new(seed, t as u64).auxiliary(slot);
    let amp = 10f64.powf(rng.random_range(-1.0..1.0));
    let decay = rng.random_range(0.0..4.0);
    let cutoff = rng.random_range(1..=space.kmax());
    let law = RandomFieldLaw::new(decay, amp, cutoff);
    match t % 97 {
        13 => SpectralField::zeros(space),
        41 => law.with_amplitude(1e-9).sample_with(space, &mut rng),
        _ => law.sample_with(space, &mut rng),
    }
}

fn worst(values: Vec<f64>) -> (f64, usize) {
    values
        .into_iter()
        .enumerate()
        .fold((0.0, 0), |(m, i), (j, v)| if v > m || v.is_nan() { (v, j) } else { (m, i) })
}

fn report(name: &str, seed: u64, trials: usize, tol: f64, devs: Vec<f64>, note: String) -> OracleReport {
    let (max_deviation, worst_trial) = worst(devs);
    OracleReport {
        name: name.to_string(),
        trials,
        max_deviation,
        tolerance: tol,
        pass: max_deviation <= tol,
        skipped: false,
        seed,
        worst_trial,
        note,
    }
}

fn skipped(name: &str, seed: u64, note: String) -> OracleReport {
    OracleReport {
        name: name.to_string(),
        trials: 0,
        max_deviation: 0.0,
        tolerance: 0.0,
        pass: true,
        skipped: true,
        seed,
        worst_trial: 0,
        note,
    }
}

fn excess(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 || lhs <= rhs {
        return 0.0;
    }
    (lhs - rhs) / scale
}

/// Runs one trial function over `trials` inputs in parallel.
fn sweep(trials: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> Vec<f64> {
    (0..trials).into_par_iter().map(f).collect()
}

/// Runs every entry with default options.
pub fn run_property_battery(seed: u64, trials: usize) -> Vec<OracleReport> {
    run_property_battery_with(seed, trials, &BatteryOptions::default())
}

pub fn run_property_battery_with(seed: u64, trials: usize, opts: &BatteryOptions) -> Vec<OracleReport> {
    let small = SpectralSpace::new(2, opts.oracle_modes).expect("oracle space");
    let mid = SpectralSpace::new(2, opts.inequality_modes).expect("inequality space");
    let mut out = Vec::with_capacity(BATTERY_MANIFEST.len());
    let name = |i: usize| BATTERY_MANIFEST[i];
    let s = |i: usize| entry_seed(seed, i);

    // 0: convective oracle
    {
        let sd = s(0);
        let devs = sweep(trials, |t| {
            let u = trial_field(&small, sd, t, 0);
            let v = trial_field(&small, sd, t, 1);
            let a = convective_pair(&u, &v);
            let b = convolution_oracle_b(&u, &v).expect("small grid");
            relative_deviation(&a, &b)
        });
        out.push(report(name(0), sd, trials, ORACLE_TOL, devs, format!("{}^2 grid", opts.oracle_modes)));
    }
    // 1: absorption oracle
    {
        let sd = s(1);
        let devs = sweep(trials, |t| {
            let u = trial_field(&small, sd, t, 0);
            let r = [3.0, 5.0, 7.0][t % 3];
            relative_deviation(&forchheimer_c(&u, r), &pointwise_oracle_c(&u, r).expect("small grid"))
        });
        out.push(report(name(1), sd, trials, ORACLE_TOL, devs, "r in {3,5,7}".into()));
    }
    // 2: Leray vs least squares on raw (non-solenoidal) input
    {
        let sd = s(2);
        let devs = sweep(trials, |t| {
            let mut v = trial_field(&small, sd, t, 0);
            let g = trial_field(&small, sd, t, 1);
            // add a gradient part k φ_k
            for m in 0..small.n_retained() {
                let k = small.wavevector(m);
                let phi = g.coeff(m, 0);
                for c in 0..2 {
                    v.mode_mut(m)[c] += phi * k[c] as f64;
                }
            }
            relative_deviation(&leray_project(&v), &leray_oracle(&v))
        });
        out.push(report(name(2), sd, trials, STRUCTURAL_TOL, devs, String::new()));
    }
    // 3: idempotence
    {
        let sd = s(3);
        let devs = sweep(trials, |t| {
            let v = advection_raw(&trial_field(&mid, sd, t, 0), &trial_field(&mid, sd, t, 1));
            let p = leray_project(&v);
            relative_deviation(&leray_project(&p), &p)
        });
        out.push(report(name(3), sd, trials, STRUCTURAL_TOL, devs, String::new()));
    }
    // 4: A commutes with P
    {
        let sd = s(4);
        let devs = sweep(trials, |t| {
            let v = advection_raw(&trial_field(&mid, sd, t, 0), &trial_field(&mid, sd, t, 1));
            relative_deviation(&stokes_apply(&leray_project(&v)), &leray_project(&stokes_apply(&v)))
        });
        out.push(report(name(4), sd, trials, STRUCTURAL_TOL, devs, String::new()));
    }
    // 5: ⟨Au,u⟩ = ‖∇u‖² by quadrature
    {
        let sd = s(5);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let m = mid.n_modes();
            let grad = u.gradient_physical(m);
            let q: f64 = grad.iter().flatten().map(|x| x * x).sum::<f64>() * mid.volume() / (m * m) as f64;
            let a = stokes_apply(&u).inner(&u);
            let scale = a.abs().max(q.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - q).abs() / scale
            }
        });
        out.push(report(name(5), sd, trials, 1e-12, devs, String::new()));
    }
    // 6: Parseval
    {
        let sd = s(6);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let p = u.to_physical_grid(mid.n_modes());
            let q = p.lp_integral(2.0, mid.volume());
            let h = u.h_norm_sq();
            if h == 0.0 {
                q.abs()
            } else {
                (h - q).abs() / h
            }
        });
        out.push(report(name(6), sd, trials, 1e-12, devs, String::new()));
    }
    // 7: round trip
    {
        let sd = s(7);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let pad = [1.0, 1.5, 2.0, 3.0][t % 4];
            let back = u.to_physical(pad).expect("padding >= 1").to_spectral(&mid).expect("same space");
            relative_deviation(&back, &u)
        });
        out.push(report(name(7), sd, trials, 1e-13, devs, String::new()));
    }
    // 8: Poincaré
    {
        let sd = s(8);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            excess(mid.lambda1() * u.h_norm_sq(), u.v_norm_sq())
        });
        out.push(report(name(8), sd, trials, INEQUALITY_TOL, devs, format!("lambda1 = {}", mid.lambda1())));
    }
    // 9: interpolation on a common grid
    {
        let sd = s(9);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let triples = [(2.0, 4.0, 6.0), (2.0, 3.0, 8.0), (1.0, 2.0, 4.0), (4.0, 6.0, f64::INFINITY)];
            let (a, b, c) = triples[t % triples.len()];
            let theta = if c.is_infinite() { a / b } else { (1.0 / b - 1.0 / c) / (1.0 / a - 1.0 / c) };
            let m = 4 * mid.n_modes();
            let lhs = u.lp_norm_on(b, m);
            let rhs = u.lp_norm_on(a, m).powf(theta) * u.lp_norm_on(c, m).powf(1.0 - theta);
            excess(lhs, rhs + 1e-10)
        });
        out.push(report(name(9), sd, trials, INEQUALITY_TOL, devs, String::new()));
    }
    // 10: smoothing contraction
    {
        let sd = s(10);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let n = 0.5 + (t % 10) as f64;
            let p = smoothing_projection(&u, n).expect("positive index");
            excess(p.h_norm_sq(), u.h_norm_sq()).max(excess(p.v_norm_sq(), u.v_norm_sq()))
        });
        out.push(report(name(10), sd, trials, INEQUALITY_TOL, devs, String::new()));
    }
    // 11: b(u,v,v) = 0
    {
        let sd = s(11);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = trial_field(&mid, sd, t, 1);
            let scale = u.lp_norm(4.0) * v.v_norm_sq().sqrt() * v.lp_norm(4.0);
            if scale == 0.0 {
                0.0
            } else {
                trilinear_b(&u, &v, &v).abs() / scale
            }
        });
        out.push(report(name(11), sd, trials, STRUCTURAL_TOL, devs, String::new()));
    }
    // 12: b(u,v,w) = -b(u,w,v)
    {
        let sd = s(12);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = trial_field(&mid, sd, t, 1);
            let w = trial_field(&mid, sd, t, 2);
            let a = trilinear_b(&u, &v, &w);
            let b = trilinear_b(&u, &w, &v);
            let scale = u.lp_norm(4.0) * (v.v_norm_sq().sqrt() * w.lp_norm(4.0) + w.v_norm_sq().sqrt() * v.lp_norm(4.0));
            if scale == 0.0 {
                0.0
            } else {
                (a + b).abs() / scale
            }
        });
        out.push(report(name(12), sd, trials, STRUCTURAL_TOL, devs, String::new()));
    }
    // 13: ⟨B(u),u⟩ = 0
    {
        let sd = s(13);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let scale = u.v_norm_sq().sqrt() * u.lp_norm_pow(4.0).sqrt();
            if scale == 0.0 {
                0.0
            } else {
                convective_b(&u).inner(&u).abs() / scale
            }
        });
        out.push(report(name(13), sd, trials, STRUCTURAL_TOL, devs, String::new()));
    }
    // 14: ⟨C(u),u⟩ = ‖u‖^{r+1}
    {
        let sd = s(14);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let r = [3.0, 5.0, 7.0, 9.0][t % 4];
            let (c, _) = forchheimer_c_with_integral(&u, r);
            let a = c.inner(&u);
            let b = u.lp_norm_pow(r + 1.0);
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        });
        out.push(report(name(14), sd, trials, STRUCTURAL_TOL, devs, "r in {3,5,7,9}".into()));
    }
    // 15: (2p9)
    {
        let sd = s(15);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = trial_field(&mid, sd, t, 1);
            let r = [3.0, 5.0, 7.0][t % 3];
            let b = b_operator_bound_check(&u, &v, r).expect("r > 1");
            excess(b.lhs, b.rhs)
        });
        out.push(report(name(15), sd, trials, INEQUALITY_TOL, devs, "r in {3,5,7}".into()));
    }
    // 16: (2.9a)
    {
        let sd = s(16);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let r = [5.0, 7.0][t % 2];
            let b = b_interpolated_bound_check(&u, r).expect("r > 3");
            excess(b.lhs, b.rhs)
        });
        out.push(report(
            name(16),
            sd,
            trials,
            INEQUALITY_TOL,
            devs,
            "single-term V' norm, which dominates the sum-space norm".into(),
        ));
    }
    // 17: Lipschitz C
    {
        let sd = s(17);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = if t % 5 == 0 { SpectralField::zeros(&mid) } else { trial_field(&mid, sd, t, 1) };
            let r = [3.0, 5.0][t % 2];
            let b = lipschitz_check_c(&u, &v, r).expect("same space");
            excess(b.lhs, b.rhs)
        });
        out.push(report(name(17), sd, trials, INEQUALITY_TOL, devs, String::new()));
    }
    // 18: (2.23)
    {
        let sd = s(18);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = trial_field(&mid, sd, t, 1);
            let r = [1.0, 3.0, 5.0, 7.0][t % 4];
            let b = c_monotonicity_check(&u, &v, r).expect("same space");
            excess(b.lhs, b.rhs)
        });
        out.push(report(name(18), sd, trials, INEQUALITY_TOL, devs, "r in {1,3,5,7}".into()));
    }
    // 19: ⟨C(u)-C(v), u-v⟩ >= 0 through the projected operator
    {
        let sd = s(19);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = trial_field(&mid, sd, t, 1);
            let r = [3.0, 5.0][t % 2];
            let w = &u - &v;
            let val = (&forchheimer_c(&u, r) - &forchheimer_c(&v, r)).inner(&w);
            let scale = u.lp_norm_pow(r + 1.0) + v.lp_norm_pow(r + 1.0);
            if scale == 0.0 || val >= 0.0 {
                0.0
            } else {
                -val / scale
            }
        });
        out.push(report(name(19), sd, trials, INEQUALITY_TOL, devs, String::new()));
    }
    // 20: shifted monotonicity, r = 5
    {
        let sd = s(20);
        let p = PhysicsParams::new(opts.mu, opts.beta, 5.0).expect("valid params");
        match p.eta() {
            Ok(eta) => {
                let devs = sweep(trials, |t| {
                    let u = trial_field(&mid, sd, t, 0);
                    let v = if t % 7 == 0 { u.clone() } else { trial_field(&mid, sd, t, 1) };
                    let rep = monotonicity_gap(&u, &v, &p).expect("regime checked");
                    if rep.gap >= 0.0 {
                        0.0
                    } else {
                        -rep.gap / rep.scale()
                    }
                });
                out.push(report(name(20), sd, trials, INEQUALITY_TOL, devs, format!("r = 5, eta = {eta}")));
            }
            Err(e) => out.push(skipped(name(20), sd, e.to_string())),
        }
    }
    // 21: global monotonicity, r = 3
    {
        let sd = s(21);
        let p = PhysicsParams::new(opts.mu, opts.beta, 3.0).expect("valid params");
        if p.critical_monotone() {
            let devs = sweep(trials, |t| {
                let u = trial_field(&mid, sd, t, 0);
                let v = trial_field(&mid, sd, t, 1);
                let rep = monotonicity_gap(&u, &v, &p).expect("regime checked");
                let w = &u - &v;
                let scale = p.mu * w.v_norm_sq() + rep.lhs.abs();
                if rep.gap >= 0.0 || scale == 0.0 {
                    0.0
                } else {
                    -rep.gap / scale
                }
            });
            out.push(report(name(21), sd, trials, INEQUALITY_TOL, devs, String::new()));
        } else {
            out.push(skipped(
                name(21),
                sd,
                format!("2*beta*mu = {} < 1: outside the critical-case hypothesis", 2.0 * opts.beta * opts.mu),
            ));
        }
    }
    // 22: 2D local monotonicity
    {
        let sd = s(22);
        let p = PhysicsParams::new(opts.mu, opts.beta, 3.0).expect("valid params");
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let v = trial_field(&mid, sd, t, 1);
            let (lhs, corr) = local_monotonicity_2d(&u, &v, &p).expect("2D");
            let w = &u - &v;
            let scale = lhs.abs() + corr + p.mu * w.v_norm_sq();
            if lhs + corr >= 0.0 || scale == 0.0 {
                0.0
            } else {
                -(lhs + corr) / scale
            }
        });
        out.push(report(name(22), sd, trials, INEQUALITY_TOL, devs, "r = 3".into()));
    }
    // 23: regularity chain
    {
        let sd = s(23);
        let devs = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            let r = [3.0, 5.0][t % 2];
            let reg = periodic_regularity_bounds(&u, r);
            let scale = reg.i3.abs();
            if scale == 0.0 {
                return 0.0;
            }
            [(-reg.i1).max(0.0), (reg.i1 - reg.i2).max(0.0), (reg.i2 - reg.i3).max(0.0)]
                .iter()
                .fold(0.0f64, |a, b| a.max(*b))
                / scale
        });
        out.push(report(name(23), sd, trials, INEQUALITY_TOL, devs, "r in {3,5}".into()));
    }
    // 24: Sobolev ratio, constant unknown: report the largest ratio, pass if finite
    {
        let sd = s(24);
        let ratios = sweep(trials, |t| {
            let u = trial_field(&mid, sd, t, 0);
            periodic_regularity_bounds(&u, [3.0, 5.0][t % 2]).sobolev_ratio
        });
        let (maxr, wt) = worst(ratios);
        out.push(OracleReport {
            name: name(24).into(),
            trials,
            max_deviation: maxr,
            tolerance: f64::INFINITY,
            pass: maxr.is_finite(),
            skipped: false,
            seed: sd,
            worst_trial: wt,
            note: "largest ||u||^{r+1}_{L^{3(r+1)}} / I1; the constant is not explicit".into(),
        });
    }
    // 25: demicontinuity: ⟨G(u_n) - G(u), w⟩ -> 0 as the truncation widens
    {
        let sd = s(25);
        let p = PhysicsParams::new(opts.mu, opts.beta, 5.0).expect("valid params");
        let devs = sweep(trials.min(50), |t| {
            let u = trial_field(&mid, sd, t, 0);
            let g = combined_g(&u, &p);
            let dict: Vec<SpectralField> = (0..3).map(|j| trial_field(&mid, sd, t, 10 + j)).collect();
            let seq: Vec<f64> = (1..=mid.kmax())
                .map(|kc| {
                    let gn = combined_g(&truncate_modes(&u, kc), &p);
                    dict.iter().map(|w| (&gn - &g).inner(w).abs()).fold(0.0, f64::max)
                })
                .collect();
            let first = seq[0].max(1e-300);
            // final entry must vanish; flag any growth beyond the first entry
            let last = *seq.last().unwrap();
            (last / first).max(0.0)
        });
        out.push(report(name(25), sd, trials.min(50), 1e-10, devs, "full truncation reproduces G(u)".into()));
    }
    if opts.smoke_3d {
        let cube = SpectralSpace::new(3, 8).expect("3D space");
        let n3 = (trials / 10).max(5);
        let sd = s(26);
        let devs = sweep(n3, |t| {
            let u = trial_field(&cube, sd, t, 0);
            let scale = u.v_norm_sq().sqrt() * u.lp_norm_pow(4.0).sqrt();
            if scale == 0.0 {
                0.0
            } else {
                convective_b(&u).inner(&u).abs() / scale
            }
        });
        out.push(report(name(26), sd, n3, STRUCTURAL_TOL, devs, "8^3 grid".into()));
        let sd = s(27);
        let p = PhysicsParams::new(opts.mu, opts.beta, 5.0).expect("valid params");
        let devs = sweep(n3, |t| {
            let u = trial_field(&cube, sd, t, 0);
            let v = trial_field(&cube, sd, t, 1);
            match monotonicity_gap(&u, &v, &p) {
                Ok(rep) if rep.gap < 0.0 => -rep.gap / rep.scale(),
                _ => 0.0,
            }
        });
        out.push(report(name(27), sd, n3, INEQUALITY_TOL, devs, "8^3 grid, r = 5".into()));
    }
    out
}
