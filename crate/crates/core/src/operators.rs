//! Stokes, convective and Forchheimer operators, the combined operator
//! `G = μA + B + βC`, its monotonicity constant and the operator inequalities
//! as checkable quantities.
//!
//! Every pointwise product is evaluated on a grid large enough to be exact
//! for trigonometric polynomials of the retained degree: `3N/2` for the
//! quadratic term, `((r+1)/2)·N` for `C` with odd integer `r`. Non-integer
//! or even `r` fall back to a 4x padded grid.

use num_complex::Complex64;

use crate::error::{Result, ScbfError};
use crate::spectral::{leray_project, stokes_apply, PhysicalField, SpectralField, SpectralSpace};

/// Absorption exponents with exact dealiasing and full theoretical coverage.
pub const GUARANTEED_R: [f64; 4] = [3.0, 5.0, 7.0, 9.0];

/// `μ`, `β`, `r` and an optional body force. The Darcy term is absent.
#[derive(Clone, Debug)]
pub struct PhysicsParams {
    pub mu: f64,
    pub beta: f64,
    pub r: f64,
    pub forcing: Option<SpectralField>,
}

impl PhysicsParams {
    pub fn new(mu: f64, beta: f64, r: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(ScbfError::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(ScbfError::InvalidArgument(format!("beta must be nonnegative, got {beta}")));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(ScbfError::InvalidArgument(format!("r must be >= 1, got {r}")));
        }
        Ok(PhysicsParams { mu, beta, r, forcing: None })
    }

    pub fn with_forcing(mut self, f: SpectralField) -> Self {
        self.forcing = if f.is_zero() { None } else { Some(f) };
        self
    }

    pub fn forcing_or_zero(&self, space: &SpectralSpace) -> SpectralField {
        self.forcing.clone().unwrap_or_else(|| SpectralField::zeros(space))
    }

    /// `r = 3` and `2βμ >= 1`: the combined operator is globally monotone.
    pub fn critical_monotone(&self) -> bool {
        self.r == 3.0 && 2.0 * self.beta * self.mu >= 1.0
    }

    pub fn is_guaranteed_r(&self) -> bool {
        GUARANTEED_R.contains(&self.r)
    }

    pub fn eta(&self) -> Result<f64> {
        eta_constant(self.mu, self.beta, self.r)
    }
}

/// Shift making `G + ηI` monotone:
/// `η = (r-3)/(2μ(r-1)) · (2/(βμ(r-1)))^{2/(r-3)}` for `r > 3`, and 0 for
/// `r = 3` with `2βμ >= 1`.
pub fn eta_constant(mu: f64, beta: f64, r: f64) -> Result<f64> {
    if r == 3.0 {
        if 2.0 * beta * mu >= 1.0 {
            return Ok(0.0);
        }
        return Err(ScbfError::ConditionNotMet(format!(
            "r = 3 needs 2*beta*mu >= 1 (got {})",
            2.0 * beta * mu
        )));
    }
    if r < 3.0 {
        return Err(ScbfError::ConditionNotMet(format!("no monotonicity constant for r = {r} < 3")));
    }
    if !(beta > 0.0) {
        return Err(ScbfError::ConditionNotMet("monotonicity constant needs beta > 0".into()));
    }
    Ok((r - 3.0) / (2.0 * mu * (r - 1.0)) * (2.0 / (beta * mu * (r - 1.0))).powf(2.0 / (r - 3.0)))
}

/// Grid size on which `|u|^{r-1}u` and `∫|u|^{r+1}` are computed.
pub fn nonlinear_grid_size(space: &SpectralSpace, r: f64) -> usize {
    if r.fract() == 0.0 && (r as i64) % 2 == 1 && r <= 63.0 {
        ((r as usize + 1) / 2) * space.n_modes()
    } else {
        4 * space.n_modes()
    }
}

/// Forward transform of one real grid array, restricted to retained modes and
/// normalized to Fourier-series coefficients.
pub(crate) fn scalar_forward(space: &SpectralSpace, m: usize, data: &[f64]) -> Vec<Complex64> {
    let grid = space.grid(m);
    let mut buf: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    grid.forward(&mut buf);
    let norm = 1.0 / grid.len() as f64;
    grid.mode_slots.iter().map(|&s| buf[s] * norm).collect()
}

/// Unprojected `(u·∇)v` on retained modes, via `∂_j(u_j v_i)`.
/// Exact for divergence-free `u`.
pub fn advection_raw(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let sp = u.space().clone();
    let d = sp.dim();
    let m = sp.quadratic_grid_size();
    let up = u.to_physical_grid(m);
    let same = std::ptr::eq(u, v) || u.coeffs() == v.coeffs();
    let vp = if same { up.clone() } else { v.to_physical_grid(m) };
    let n = up.n_points();
    let mut out = SpectralField::zeros(&sp);
    let mut prod = vec![0.0; n];
    let mut cache: Vec<Option<Vec<Complex64>>> = vec![None; d * d];
    for i in 0..d {
        for j in 0..d {
            let coeffs = if same && j < i {
                cache[j * d + i].take().expect("symmetric product cached")
            } else {
                for (p, (a, b)) in prod.iter_mut().zip(up.comps[j].iter().zip(&vp.comps[i])) {
                    *p = a * b;
                }
                let c = scalar_forward(&sp, m, &prod);
                if same && j > i {
                    cache[i * d + j] = Some(c.clone());
                }
                c
            };
            for (mi, c) in coeffs.iter().enumerate() {
                let kj = sp.wavevector(mi)[j] as f64;
                out.coeffs_mut()[mi * d + i] += c * Complex64::new(0.0, kj);
            }
        }
    }
    out
}

/// `B(u, v) = P_H (u·∇)v`.
pub fn convective_pair(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let mut out = leray_project(&advection_raw(u, v));
    out.enforce_hermitian();
    out
}

/// `B(u) = P_H (u·∇)u`, dealiased by the 3/2 rule.
pub fn convective_b(u: &SpectralField) -> SpectralField {
    convective_pair(u, u)
}

/// `b(u, v, w) = ∫ (u·∇)v · w dx`.
pub fn trilinear_b(u: &SpectralField, v: &SpectralField, w: &SpectralField) -> f64 {
    advection_raw(u, v).inner(w)
}

/// `|u|^{r-1} u` sampled on `p`, in place of a new field.
fn absorption_samples(p: &PhysicalField, r: f64) -> (PhysicalField, Vec<f64>) {
    let mag2 = p.magnitude_sq();
    let e = (r - 1.0) / 2.0;
    let integer = e.fract() == 0.0 && e <= 64.0;
    let weight: Vec<f64> = mag2
        .iter()
        .map(|&x| if integer { x.powi(e as i32) } else { x.powf(e) })
        .collect();
    let mut out = p.clone();
    for comp in &mut out.comps {
        for (c, w) in comp.iter_mut().zip(&weight) {
            *c *= w;
        }
    }
    (out, weight)
}

/// `C(u) = P_H(|u|^{r-1}u)` together with `∫|u|^{r+1} dx` from the same samples.
pub fn forchheimer_c_with_integral(u: &SpectralField, r: f64) -> (SpectralField, f64) {
    let sp = u.space().clone();
    if u.is_zero() {
        return (SpectralField::zeros(&sp), 0.0);
    }
    let m = nonlinear_grid_size(&sp, r);
    let p = u.to_physical_grid(m);
    let (g, weight) = absorption_samples(&p, r);
    let mag2 = p.magnitude_sq();
    let integral = mag2.iter().zip(&weight).map(|(a, b)| a * b).sum::<f64>() * sp.volume() / p.n_points() as f64;
    let d = sp.dim();
    let mut raw = SpectralField::zeros(&sp);
    for c in 0..d {
        let coeffs = scalar_forward(&sp, m, &g.comps[c]);
        for (mi, z) in coeffs.into_iter().enumerate() {
            raw.coeffs_mut()[mi * d + c] = z;
        }
    }
    let mut out = leray_project(&raw);
    out.enforce_hermitian();
    (out, integral)
}

/// `C(u) = P_H(|u|^{r-1}u)`.
pub fn forchheimer_c(u: &SpectralField, r: f64) -> SpectralField {
    forchheimer_c_with_integral(u, r).0
}

/// `‖u‖^{r+1}_{L^{r+1}}` on the same grid as `C`.
pub fn absorption_integral(u: &SpectralField, r: f64) -> f64 {
    let m = nonlinear_grid_size(u.space(), r);
    u.to_physical_grid(m).lp_integral(r + 1.0, u.space().volume())
}

/// `G(u) = μAu + B(u) + βC(u)`.
pub fn combined_g(u: &SpectralField, params: &PhysicsParams) -> SpectralField {
    let mut g = stokes_apply(u).scaled(params.mu);
    g += &convective_b(u);
    if params.beta != 0.0 {
        g.axpy(params.beta, &forchheimer_c(u, params.r));
    }
    g
}

/// Terms of `⟨G(u)-G(v), w⟩ + η‖w‖²_H - (μ/2)‖w‖²_V` with `w = u - v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub lhs: f64,
    pub eta_term: f64,
    pub v_term: f64,
    pub gap: f64,
}

impl MonotonicityReport {
    /// Magnitude used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.eta_term.abs() + self.v_term.abs()
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.gap >= -rel_tol * self.scale().max(f64::MIN_POSITIVE)
    }
}

/// Monotonicity gap. For `r > 3` the gap carries `η` and the `(μ/2)‖w‖²_V`
/// surplus; for `r = 3`, `2βμ >= 1` it is the plain `⟨G(u)-G(v), w⟩`.
pub fn monotonicity_gap(u: &SpectralField, v: &SpectralField, params: &PhysicsParams) -> Result<MonotonicityReport> {
    u.check_same_space(v)?;
    let eta = params.eta()?;
    let w = u - v;
    let lhs = (&combined_g(u, params) - &combined_g(v, params)).inner(&w);
    if params.r == 3.0 {
        return Ok(MonotonicityReport { lhs, eta_term: 0.0, v_term: 0.0, gap: lhs });
    }
    let eta_term = eta * w.h_norm_sq();
    let v_term = 0.5 * params.mu * w.v_norm_sq();
    Ok(MonotonicityReport { lhs, eta_term, v_term, gap: lhs + eta_term - v_term })
}

/// Two-dimensional local monotonicity on `L⁴` balls:
/// returns `(⟨G(u)-G(v), w⟩, 27/(32μ³)‖v‖⁴_{L⁴}‖w‖²_H)`; their sum is nonnegative.
pub fn local_monotonicity_2d(u: &SpectralField, v: &SpectralField, params: &PhysicsParams) -> Result<(f64, f64)> {
    u.check_same_space(v)?;
    if u.space().dim() != 2 {
        return Err(ScbfError::InvalidArgument("local monotonicity bound is two-dimensional".into()));
    }
    let w = u - v;
    let lhs = (&combined_g(u, params) - &combined_g(v, params)).inner(&w);
    let corr = 27.0 / (32.0 * params.mu.powi(3)) * v.lp_norm_pow(4.0) * w.h_norm_sq();
    Ok((lhs, corr))
}

/// The two sides of an inequality `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheck {
    pub fn holds(&self, rel_tol: f64, abs_tol: f64) -> bool {
        self.lhs <= self.rhs + rel_tol * self.rhs.abs().max(self.lhs.abs()) + abs_tol
    }

    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs <= 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / self.rhs
        }
    }
}

/// Grid shared by all norms of a mixed-exponent inequality, so the discrete
/// Hölder inequality applies to the computed values.
fn common_grid(space: &SpectralSpace) -> usize {
    4 * space.n_modes()
}

/// `‖B(u,v)‖_{V'} <= ‖u‖_{L^{r+1}} ‖v‖_{L^{2(r+1)/(r-1)}}` for `r > 1`.
pub fn b_operator_bound_check(u: &SpectralField, v: &SpectralField, r: f64) -> Result<BoundCheck> {
    u.check_same_space(v)?;
    if !(r > 1.0) {
        return Err(ScbfError::InvalidArgument("bilinear bound needs r > 1".into()));
    }
    let lhs = convective_pair(u, v).vprime_norm_sq().sqrt();
    let m = common_grid(u.space());
    let rhs = u.lp_norm_on(r + 1.0, m) * v.lp_norm_on(2.0 * (r + 1.0) / (r - 1.0), m);
    Ok(BoundCheck { lhs, rhs })
}

/// `‖B(u)‖_{V'} <= ‖u‖^{(r+1)/(r-1)}_{L^{r+1}} ‖u‖^{(r-3)/(r-1)}_H` for `r > 3`.
///
/// Checks the single-term dual norm, which dominates the infimum norm on
/// `V' + L^{(r+1)/r}`.
pub fn b_interpolated_bound_check(u: &SpectralField, r: f64) -> Result<BoundCheck> {
    if !(r > 3.0) {
        return Err(ScbfError::InvalidArgument("interpolated bilinear bound needs r > 3".into()));
    }
    let lhs = convective_b(u).vprime_norm_sq().sqrt();
    let m = common_grid(u.space());
    let rhs = u.lp_norm_on(r + 1.0, m).powf((r + 1.0) / (r - 1.0)) * u.h_norm().powf((r - 3.0) / (r - 1.0));
    Ok(BoundCheck { lhs, rhs })
}

/// `‖|u|^{r-1}u - |v|^{r-1}v‖_{L^{(r+1)/r}} <= r(‖u‖+‖v‖)^{r-1}‖u-v‖` in `L^{r+1}`.
pub fn lipschitz_check_c(u: &SpectralField, v: &SpectralField, r: f64) -> Result<BoundCheck> {
    u.check_same_space(v)?;
    let sp = u.space();
    let m = nonlinear_grid_size(sp, r);
    let up = u.to_physical_grid(m);
    let vp = v.to_physical_grid(m);
    let (cu, _) = absorption_samples(&up, r);
    let (cv, _) = absorption_samples(&vp, r);
    let mut diff = cu;
    for (a, b) in diff.comps.iter_mut().zip(&cv.comps) {
        for (x, y) in a.iter_mut().zip(b) {
            *x -= y;
        }
    }
    let vol = sp.volume();
    let lhs = diff.lp_norm((r + 1.0) / r, vol);
    let w = (u - v).to_physical_grid(m);
    let rhs = r * (up.lp_norm(r + 1.0, vol) + vp.lp_norm(r + 1.0, vol)).powf(r - 1.0) * w.lp_norm(r + 1.0, vol);
    Ok(BoundCheck { lhs, rhs })
}

/// Lower bound for the absorption increment:
/// `½‖|u|^{(r-1)/2}w‖² + ½‖|v|^{(r-1)/2}w‖² <= ⟨C(u)-C(v), w⟩`.
pub fn c_monotonicity_check(u: &SpectralField, v: &SpectralField, r: f64) -> Result<BoundCheck> {
    u.check_same_space(v)?;
    let sp = u.space();
    let m = nonlinear_grid_size(sp, r);
    let up = u.to_physical_grid(m);
    let vp = v.to_physical_grid(m);
    let wp = (u - v).to_physical_grid(m);
    let (cu, wu) = absorption_samples(&up, r);
    let (cv, wv) = absorption_samples(&vp, r);
    let w2 = wp.magnitude_sq();
    let n = wp.n_points();
    let mut inc = 0.0;
    for c in 0..sp.dim() {
        for j in 0..n {
            inc += (cu.comps[c][j] - cv.comps[c][j]) * wp.comps[c][j];
        }
    }
    let mut lower = 0.0;
    for j in 0..n {
        lower += 0.5 * (wu[j] + wv[j]) * w2[j];
    }
    let q = sp.volume() / n as f64;
    Ok(BoundCheck { lhs: lower * q, rhs: inc * q })
}

/// `(I₁, I₂, I₃) = (∫|∇u|²|u|^{r-1}, ∫|u|^{r-1}u·Au, r·I₁)` and the ratio
/// `‖u‖^{r+1}_{L^{3(r+1)}} / I₁` whose boundedness is the periodic Sobolev estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityIntegrals {
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub sobolev_ratio: f64,
}

impl RegularityIntegrals {
    pub fn chain_holds(&self, rel_tol: f64) -> bool {
        let s = self.i3.abs().max(1e-300);
        self.i1 >= -rel_tol * s && self.i1 <= self.i2 + rel_tol * s && self.i2 <= self.i3 + rel_tol * s
    }
}

pub fn periodic_regularity_bounds(u: &SpectralField, r: f64) -> RegularityIntegrals {
    let sp = u.space();
    if u.is_zero() {
        return RegularityIntegrals { i1: 0.0, i2: 0.0, i3: 0.0, sobolev_ratio: 0.0 };
    }
    let d = sp.dim();
    let m = nonlinear_grid_size(sp, r).max(sp.quadratic_grid_size());
    let up = u.to_physical_grid(m);
    let grad = u.gradient_physical(m);
    let au = stokes_apply(u).to_physical_grid(m);
    let (_, weight) = absorption_samples(&up, r);
    let n = up.n_points();
    let q = sp.volume() / n as f64;
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    for j in 0..n {
        let g2: f64 = grad.iter().map(|g| g[j] * g[j]).sum();
        i1 += g2 * weight[j];
        let mut dot = 0.0;
        for c in 0..d {
            dot += up.comps[c][j] * au.comps[c][j];
        }
        i2 += weight[j] * dot;
    }
    i1 *= q;
    i2 *= q;
    let l3 = u.lp_norm_on(3.0 * (r + 1.0), 4 * sp.n_modes()).powf(r + 1.0);
    RegularityIntegrals { i1, i2, i3: r * i1, sobolev_ratio: if i1 > 0.0 { l3 / i1 } else { 0.0 } }
}

/// Keeps only modes with `|k_i| <= kcut` on every axis.
pub fn truncate_modes(u: &SpectralField, kcut: i32) -> SpectralField {
    let sp = u.space().clone();
    u.map_modes(|m| {
        let k = sp.wavevector(m);
        if k.iter().all(|x| x.abs() <= kcut) {
            1.0
        } else {
            0.0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sp(n: usize) -> SpectralSpace {
        SpectralSpace::new(2, n).unwrap()
    }

    #[test]
    fn eta_hand_values() {
        assert_relative_eq!(eta_constant(1.0, 1.0, 5.0).unwrap(), 0.125, max_relative = 1e-15);
        assert_relative_eq!(eta_constant(2.0, 0.5, 5.0).unwrap(), 0.0625, max_relative = 1e-15);
        // (2/16)·(2/8) = 1/32
        assert_relative_eq!(eta_constant(2.0, 1.0, 5.0).unwrap(), 0.03125, max_relative = 1e-15);
        assert_relative_eq!(eta_constant(0.1, 1.0, 5.0).unwrap(), 12.5, max_relative = 1e-13);
        assert_eq!(eta_constant(1.0, 1.0, 3.0).unwrap(), 0.0);
        assert!(eta_constant(1.0, 0.2, 3.0).is_err());
        assert!(eta_constant(1.0, 1.0, 2.5).is_err());
    }

    #[test]
    fn shear_mode_has_no_convection() {
        let s = sp(8);
        let u = SpectralField::cosine_mode(&s, [1, 2, 0], [2.0, -1.0, 0.0]).unwrap();
        assert!(convective_b(&u).h_norm() < 1e-13);
        assert!(convective_b(&SpectralField::zeros(&s)).is_zero());
    }

    #[test]
    fn cubic_absorption_of_cosine() {
        // cos³x = (3 cos x + cos 3x)/4
        let s = sp(8);
        let u = SpectralField::cosine_mode(&s, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let (c, integral) = forchheimer_c_with_integral(&u, 3.0);
        let m1 = s.index_of([1, 0, 0]).unwrap();
        let m3 = s.index_of([3, 0, 0]).unwrap();
        assert_relative_eq!(c.coeff(m1, 1).re, 3.0 / 8.0, epsilon = 1e-14);
        assert_relative_eq!(c.coeff(m3, 1).re, 1.0 / 8.0, epsilon = 1e-14);
        let rest: f64 = (0..s.n_retained())
            .filter(|&m| ![m1, m3, s.neg(m1), s.neg(m3)].contains(&m))
            .map(|m| c.mode(m).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        assert!(rest < 1e-28);
        assert_relative_eq!(integral, 1.5 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(c.inner(&u), 1.5 * PI * PI, max_relative = 1e-13);
    }

    #[test]
    fn linear_absorption_is_identity() {
        let s = sp(8);
        let u = SpectralField::cosine_mode(&s, [2, 1, 0], [-1.0, 2.0, 0.0]).unwrap();
        let c = forchheimer_c(&u, 1.0);
        for (a, b) in u.coeffs().iter().zip(c.coeffs()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn g_of_shear_mode_without_absorption() {
        let s = sp(8);
        let u = SpectralField::cosine_mode(&s, [2, 1, 0], [-1.0, 2.0, 0.0]).unwrap();
        let p = PhysicsParams::new(0.7, 0.0, 5.0).unwrap();
        let g = combined_g(&u, &p);
        for (a, b) in u.coeffs().iter().zip(g.coeffs()) {
            assert!((a * 3.5 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn params_validation() {
        assert!(PhysicsParams::new(0.0, 1.0, 5.0).is_err());
        assert!(PhysicsParams::new(1.0, -1.0, 5.0).is_err());
        assert!(PhysicsParams::new(1.0, 1.0, 0.5).is_err());
        assert!(PhysicsParams::new(1.0, 1.0, 3.0).unwrap().critical_monotone());
        assert!(!PhysicsParams::new(0.4, 1.0, 3.0).unwrap().critical_monotone());
    }

    #[test]
    fn identical_arguments_give_zero_gap() {
        let s = sp(8);
        let u = SpectralField::cosine_mode(&s, [1, 1, 0], [1.0, -1.0, 0.0]).unwrap();
        let p = PhysicsParams::new(1.0, 1.0, 5.0).unwrap();
        let rep = monotonicity_gap(&u, &u, &p).unwrap();
        assert_eq!(rep.gap, 0.0);
        assert!(monotonicity_gap(&u, &u, &PhysicsParams::new(1.0, 0.1, 3.0).unwrap()).is_err());
    }

    #[test]
    fn bounds_on_zero_and_shear_fields() {
        let s = sp(8);
        let z = SpectralField::zeros(&s);
        let b = b_operator_bound_check(&z, &z, 5.0).unwrap();
        assert_eq!((b.lhs, b.rhs), (0.0, 0.0));
        assert!(b.holds(0.0, 0.0));
        let u = SpectralField::cosine_mode(&s, [0, 1, 0], [1.0, 0.0, 0.0]).unwrap();
        let b = b_interpolated_bound_check(&u, 5.0).unwrap();
        assert!(b.lhs < 1e-13 && b.rhs > 0.0);
        let l = lipschitz_check_c(&u, &u, 5.0).unwrap();
        assert_eq!(l.lhs, 0.0);
        let reg = periodic_regularity_bounds(&z, 3.0);
        assert_eq!((reg.i1, reg.i2, reg.i3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn regularity_chain_for_single_mode() {
        let s = sp(8);
        let u = SpectralField::cosine_mode(&s, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let reg = periodic_regularity_bounds(&u, 3.0);
        // u = cos x e2: |∇u|²|u|² = sin²x cos²x, ∫ = 4π²/8; Au = u so I₂ = ∫cos⁴ = 3π²/2.
        assert_relative_eq!(reg.i1, PI * PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(reg.i2, 1.5 * PI * PI, max_relative = 1e-13);
        assert!(reg.chain_holds(1e-12));
    }
}
