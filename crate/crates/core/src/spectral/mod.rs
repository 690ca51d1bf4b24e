//! Periodic torus discretization: divergence-free Fourier modes, collocation
//! transforms, projections and the norms used by every estimate in the crate.
//!
//! Fields are stored as Fourier-series coefficients, `u(x) = sum_k û_k e^{ik.x}`
//! on `[0, 2π)^dim`, so `‖u‖²_H = (2π)^dim sum_k |û_k|²`. The retained set is
//! every wavevector with `|k_i| <= n_modes/2 - 1` on each axis, minus `k = 0`.
//! Dropping the Nyquist line keeps the set closed under `k -> -k`.

mod fft;
pub mod snapshot;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;

pub use fft::Grid;

use crate::error::{Result, ScbfError};

/// Discretization of the torus `[0, 2π)^dim`.
///
/// Cloning is cheap; clones share mode tables and FFT plans.
#[derive(Clone)]
pub struct SpectralSpace {
    inner: Arc<SpaceInner>,
}

struct SpaceInner {
    dim: usize,
    n_modes: usize,
    kmax: i32,
    modes: Vec<[i32; 3]>,
    k2: Vec<f64>,
    neg: Vec<usize>,
    lookup: Vec<Option<usize>>,
    positive: Vec<usize>,
    polarizations: Vec<[[f64; 3]; 2]>,
    grids: Mutex<HashMap<usize, Arc<Grid>>>,
}

impl fmt::Debug for SpectralSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralSpace")
            .field("dim", &self.dim())
            .field("n_modes", &self.n_modes())
            .field("retained", &self.n_retained())
            .finish()
    }
}

impl PartialEq for SpectralSpace {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.n_modes() == other.n_modes()
    }
}

impl SpectralSpace {
    /// Builds the retained mode table for a `dim`-torus with `n_modes` points per axis.
    pub fn new(dim: usize, n_modes: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(ScbfError::InvalidArgument(format!("dim must be 2 or 3, got {dim}")));
        }
        if n_modes < 4 || !n_modes.is_power_of_two() {
            return Err(ScbfError::InvalidArgument(format!(
                "n_modes must be a power of two >= 4, got {n_modes}"
            )));
        }
        let kmax = (n_modes / 2 - 1) as i32;
        let side = (2 * kmax + 1) as usize;
        let mut modes = Vec::new();
        let range = -kmax..=kmax;
        let third: Vec<i32> = if dim == 3 { range.clone().collect() } else { vec![0] };
        for k0 in range.clone() {
            for k1 in range.clone() {
                for &k2 in &third {
                    if k0 == 0 && k1 == 0 && k2 == 0 {
                        continue;
                    }
                    modes.push([k0, k1, k2]);
                }
            }
        }
        let mut lookup = vec![None; side.pow(dim as u32)];
        let slot = |k: &[i32; 3]| -> usize {
            let mut idx = 0usize;
            for &ki in k.iter().take(dim) {
                idx = idx * side + (ki + kmax) as usize;
            }
            idx
        };
        for (m, k) in modes.iter().enumerate() {
            lookup[slot(k)] = Some(m);
        }
        let neg: Vec<usize> = modes
            .iter()
            .map(|k| lookup[slot(&[-k[0], -k[1], -k[2]])].expect("retained set is symmetric"))
            .collect();
        let k2: Vec<f64> = modes.iter().map(|k| k.iter().map(|&x| (x * x) as f64).sum()).collect();
        let positive: Vec<usize> = (0..modes.len()).filter(|&m| lex_positive(&modes[m])).collect();
        let polarizations = modes
            .iter()
            .map(|k| {
                let rep = if lex_positive(k) { *k } else { [-k[0], -k[1], -k[2]] };
                polarization_basis(dim, &rep)
            })
            .collect();
        Ok(SpectralSpace {
            inner: Arc::new(SpaceInner {
                dim,
                n_modes,
                kmax,
                modes,
                k2,
                neg,
                lookup,
                positive,
                polarizations,
                grids: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n_modes(&self) -> usize {
        self.inner.n_modes
    }

    /// Largest retained wavenumber per axis.
    pub fn kmax(&self) -> i32 {
        self.inner.kmax
    }

    pub fn domain_length(&self) -> f64 {
        2.0 * PI
    }

    /// Lebesgue measure of the torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim() as i32)
    }

    /// Smallest Stokes eigenvalue. Always 1 on the `2π`-torus.
    pub fn lambda1(&self) -> f64 {
        self.inner.k2.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn lambda_max(&self) -> f64 {
        self.inner.k2.iter().cloned().fold(0.0, f64::max)
    }

    pub fn n_retained(&self) -> usize {
        self.inner.modes.len()
    }

    /// Retained wavevectors in lexicographic order (unused trailing entries are 0 in 2D).
    pub fn modes(&self) -> &[[i32; 3]] {
        &self.inner.modes
    }

    pub fn wavevector(&self, m: usize) -> [i32; 3] {
        self.inner.modes[m]
    }

    /// Stokes eigenvalue `|k|²` of mode `m`.
    pub fn lambda(&self, m: usize) -> f64 {
        self.inner.k2[m]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.inner.k2
    }

    /// Index of `-k` for mode `m`.
    pub fn neg(&self, m: usize) -> usize {
        self.inner.neg[m]
    }

    /// Modes whose wavevector is lexicographically positive: one representative per `{k, -k}` pair.
    pub fn positive_modes(&self) -> &[usize] {
        &self.inner.positive
    }

    /// Number of independent polarizations per wavevector (`dim - 1`).
    pub fn n_polarizations(&self) -> usize {
        self.dim() - 1
    }

    /// Unit polarization vectors orthogonal to `k`, shared by `k` and `-k`.
    pub fn polarization(&self, m: usize, p: usize) -> [f64; 3] {
        self.inner.polarizations[m][p]
    }

    pub fn index_of(&self, k: [i32; 3]) -> Option<usize> {
        let kmax = self.kmax();
        let dim = self.dim();
        if k.iter().take(dim).any(|&x| x.abs() > kmax) || (dim == 2 && k[2] != 0) {
            return None;
        }
        let side = (2 * kmax + 1) as usize;
        let mut idx = 0usize;
        for &ki in k.iter().take(dim) {
            idx = idx * side + (ki + kmax) as usize;
        }
        self.inner.lookup[idx]
    }

    /// Collocation grid with `m` points per axis (cached).
    pub fn grid(&self, m: usize) -> Arc<Grid> {
        let mut grids = self.inner.grids.lock().expect("grid cache poisoned");
        grids
            .entry(m)
            .or_insert_with(|| Arc::new(Grid::new(m, self.dim(), &self.inner.modes)))
            .clone()
    }

    /// Grid size for a padding factor; padding must be at least 1.
    pub fn padded_size(&self, padding: f64) -> Result<usize> {
        if !(padding >= 1.0) {
            return Err(ScbfError::InvalidArgument(format!("padding must be >= 1, got {padding}")));
        }
        Ok((padding * self.n_modes() as f64 - 1e-9).ceil() as usize)
    }

    /// Grid size for exact dealiasing of quadratic products (3/2 rule).
    pub fn quadratic_grid_size(&self) -> usize {
        3 * self.n_modes() / 2
    }

    /// Grid used to evaluate `‖u‖_{L^p}`: exact for even integer `p`, 4x padded otherwise.
    pub fn lp_grid_size(&self, p: f64) -> usize {
        if p.is_finite() && p >= 2.0 && p.fract() == 0.0 && (p as u64) % 2 == 0 {
            (p as usize / 2) * self.n_modes()
        } else {
            4 * self.n_modes()
        }
    }
}

fn lex_positive(k: &[i32; 3]) -> bool {
    for &x in k {
        if x != 0 {
            return x > 0;
        }
    }
    false
}

fn polarization_basis(dim: usize, k: &[i32; 3]) -> [[f64; 3]; 2] {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let kn = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    if dim == 2 {
        return [[-kf[1] / kn, kf[0] / kn, 0.0], [0.0; 3]];
    }
    let cross = |a: [f64; 3], b: [f64; 3]| {
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    };
    let mut a1 = cross(kf, [0.0, 0.0, 1.0]);
    if a1.iter().all(|&x| x == 0.0) {
        a1 = cross(kf, [1.0, 0.0, 0.0]);
    }
    let n1 = (a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]).sqrt();
    let a1 = [a1[0] / n1, a1[1] / n1, a1[2] / n1];
    let khat = [kf[0] / kn, kf[1] / kn, kf[2] / kn];
    let a2 = cross(khat, a1);
    [a1, a2]
}

/// Fourier coefficients of a real vector field on the torus.
///
/// Layout is `coeffs[m * dim + c]` for retained mode `m` and component `c`.
/// Operators in this crate return divergence-free, Hermitian-symmetric fields;
/// raw (unprojected) fields are produced only by transforms and constructors.
#[derive(Clone, Debug)]
pub struct SpectralField {
    space: SpectralSpace,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(space: &SpectralSpace) -> Self {
        SpectralField { space: space.clone(), coeffs: vec![Complex64::default(); space.n_retained() * space.dim()] }
    }

    pub fn from_coeffs(space: &SpectralSpace, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != space.n_retained() * space.dim() {
            return Err(ScbfError::SpaceMismatch(format!(
                "expected {} coefficients, got {}",
                space.n_retained() * space.dim(),
                coeffs.len()
            )));
        }
        Ok(SpectralField { space: space.clone(), coeffs })
    }

    /// `a cos(k.x)` for a real amplitude vector `a`; divergence-free iff `a . k = 0`.
    pub fn cosine_mode(space: &SpectralSpace, k: [i32; 3], a: [f64; 3]) -> Result<Self> {
        Self::trig_mode(space, k, a, Complex64::new(0.5, 0.0))
    }

    /// `a sin(k.x)`.
    pub fn sine_mode(space: &SpectralSpace, k: [i32; 3], a: [f64; 3]) -> Result<Self> {
        Self::trig_mode(space, k, a, Complex64::new(0.0, -0.5))
    }

    fn trig_mode(space: &SpectralSpace, k: [i32; 3], a: [f64; 3], w: Complex64) -> Result<Self> {
        let m = space
            .index_of(k)
            .ok_or_else(|| ScbfError::InvalidArgument(format!("wavevector {k:?} not retained")))?;
        let n = space.neg(m);
        let mut u = Self::zeros(space);
        let dim = space.dim();
        for c in 0..dim {
            u.coeffs[m * dim + c] += w * a[c];
            u.coeffs[n * dim + c] += w.conj() * a[c];
        }
        Ok(u)
    }

    pub fn space(&self) -> &SpectralSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, m: usize, c: usize) -> Complex64 {
        self.coeffs[m * self.space.dim() + c]
    }

    pub fn mode(&self, m: usize) -> &[Complex64] {
        let d = self.space.dim();
        &self.coeffs[m * d..(m + 1) * d]
    }

    pub fn mode_mut(&mut self, m: usize) -> &mut [Complex64] {
        let d = self.space.dim();
        &mut self.coeffs[m * d..(m + 1) * d]
    }

    pub fn check_same_space(&self, other: &SpectralField) -> Result<()> {
        if self.space != other.space {
            return Err(ScbfError::SpaceMismatch(format!(
                "dim/n_modes {}/{} vs {}/{}",
                self.space.dim(),
                self.space.n_modes(),
                other.space.dim(),
                other.space.n_modes()
            )));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Multiplies mode `m` by `f(m)`.
    pub fn map_modes(&self, f: impl Fn(usize) -> f64) -> SpectralField {
        let d = self.space.dim();
        let mut out = self.clone();
        for m in 0..self.space.n_retained() {
            let s = f(m);
            for c in &mut out.coeffs[m * d..(m + 1) * d] {
                *c *= s;
            }
        }
        out
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) {
        debug_assert!(self.space == other.space);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> SpectralField {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= alpha;
        }
        out
    }

    /// L² inner product `∫ u . v dx`.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        debug_assert!(self.space == other.space);
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a.conj() * b).re).sum();
        s * self.space.volume()
    }

    /// `‖u‖²_H` by Parseval.
    pub fn h_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.space.volume()
    }

    pub fn h_norm(&self) -> f64 {
        self.h_norm_sq().sqrt()
    }

    /// `‖u‖²_V = ⟨Au, u⟩ = ‖∇u‖²_H`.
    pub fn v_norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|l| l)
    }

    /// `‖u‖²_{V'} = ‖A^{-1/2} u‖²_H`.
    pub fn vprime_norm_sq(&self) -> f64 {
        self.weighted_norm_sq(|l| 1.0 / l)
    }

    /// `sum_k w(λ_k) |û_k|²` scaled by the torus volume.
    pub fn weighted_norm_sq(&self, w: impl Fn(f64) -> f64) -> f64 {
        let d = self.space.dim();
        let lam = self.space.lambdas();
        let mut s = 0.0;
        for (m, chunk) in self.coeffs.chunks(d).enumerate() {
            let e: f64 = chunk.iter().map(|c| c.norm_sqr()).sum();
            if e != 0.0 {
                s += w(lam[m]) * e;
            }
        }
        s * self.space.volume()
    }

    /// Largest `|k . û_k|` over retained modes.
    pub fn divergence_defect(&self) -> f64 {
        let d = self.space.dim();
        let mut worst: f64 = 0.0;
        for (m, chunk) in self.coeffs.chunks(d).enumerate() {
            let k = self.space.wavevector(m);
            let mut div = Complex64::default();
            for c in 0..d {
                div += chunk[c] * k[c] as f64;
            }
            worst = worst.max(div.norm());
        }
        worst
    }

    /// Largest `|û_k - conj(û_{-k})|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.space.dim();
        let mut worst: f64 = 0.0;
        for m in 0..self.space.n_retained() {
            let n = self.space.neg(m);
            for c in 0..d {
                worst = worst.max((self.coeffs[m * d + c] - self.coeffs[n * d + c].conj()).norm());
            }
        }
        worst
    }

    /// Replaces `û_k` and `û_{-k}` by their Hermitian average.
    pub fn enforce_hermitian(&mut self) {
        let d = self.space.dim();
        for &m in self.space.positive_modes() {
            let n = self.space.neg(m);
            for c in 0..d {
                let a = (self.coeffs[m * d + c] + self.coeffs[n * d + c].conj()) * 0.5;
                self.coeffs[m * d + c] = a;
                self.coeffs[n * d + c] = a.conj();
            }
        }
    }

    /// Real coordinates of the field in the orthonormal H-basis, two per
    /// (positive mode, polarization): `(⟨u, e_re⟩, ⟨u, e_im⟩)`.
    pub fn basis_coordinates(&self) -> Vec<f64> {
        let sp = &self.space;
        let scale = (2.0 * sp.volume()).sqrt();
        let mut out = Vec::with_capacity(2 * sp.positive_modes().len() * sp.n_polarizations());
        for &m in sp.positive_modes() {
            for p in 0..sp.n_polarizations() {
                let c = self.polarized(m, p);
                out.push(scale * c.re);
                out.push(scale * c.im);
            }
        }
        out
    }

    /// `a_p(k) . û_k`.
    pub fn polarized(&self, m: usize, p: usize) -> Complex64 {
        let a = self.space.polarization(m, p);
        self.mode(m).iter().zip(a.iter()).map(|(c, ai)| c * ai).sum()
    }

    /// Inverse of [`SpectralField::basis_coordinates`].
    pub fn from_basis_coordinates(space: &SpectralSpace, coords: &[f64]) -> Result<Self> {
        let npol = space.n_polarizations();
        if coords.len() != 2 * space.positive_modes().len() * npol {
            return Err(ScbfError::SpaceMismatch("basis coordinate count".into()));
        }
        let scale = 1.0 / (2.0 * space.volume()).sqrt();
        let d = space.dim();
        let mut u = SpectralField::zeros(space);
        for (i, &m) in space.positive_modes().iter().enumerate() {
            let n = space.neg(m);
            for p in 0..npol {
                let j = 2 * (i * npol + p);
                let c = Complex64::new(coords[j], coords[j + 1]) * scale;
                let a = space.polarization(m, p);
                for comp in 0..d {
                    u.coeffs[m * d + comp] += c * a[comp];
                    u.coeffs[n * d + comp] += c.conj() * a[comp];
                }
            }
        }
        Ok(u)
    }

    /// Samples on an `m^dim` collocation grid, one array per component.
    pub fn to_physical_grid(&self, m: usize) -> PhysicalField {
        let grid = self.space.grid(m);
        let d = self.space.dim();
        let comps = (0..d)
            .map(|c| {
                let mut buf = vec![Complex64::default(); grid.len()];
                for (mi, &slot) in grid.mode_slots.iter().enumerate() {
                    buf[slot] = self.coeffs[mi * d + c];
                }
                grid.inverse(&mut buf);
                buf.into_iter().map(|z| z.re).collect()
            })
            .collect();
        PhysicalField { m, dim: d, comps }
    }

    /// Samples on a grid padded by `padding` (>= 1) relative to `n_modes`.
    pub fn to_physical(&self, padding: f64) -> Result<PhysicalField> {
        let m = self.space.padded_size(padding)?;
        Ok(self.to_physical_grid(m))
    }

    /// Velocity gradient on the grid: entry `i * dim + j` holds `∂_j u_i`.
    pub fn gradient_physical(&self, m: usize) -> Vec<Vec<f64>> {
        let grid = self.space.grid(m);
        let d = self.space.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let mut buf = vec![Complex64::default(); grid.len()];
                for (mi, &slot) in grid.mode_slots.iter().enumerate() {
                    let kj = self.space.wavevector(mi)[j] as f64;
                    buf[slot] = self.coeffs[mi * d + i] * Complex64::new(0.0, kj);
                }
                grid.inverse(&mut buf);
                out.push(buf.into_iter().map(|z| z.re).collect());
            }
        }
        out
    }

    /// `‖u‖_{L^p}` with the grid chosen by [`SpectralSpace::lp_grid_size`].
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_on(p, self.space.lp_grid_size(p))
    }

    /// `‖u‖_{L^p}` by equal-weight quadrature on an `m^dim` grid.
    pub fn lp_norm_on(&self, p: f64, m: usize) -> f64 {
        self.to_physical_grid(m).lp_norm(p, self.space.volume())
    }

    /// `‖u‖^{p}_{L^{p}}` without taking the root.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let m = self.space.lp_grid_size(p);
        self.to_physical_grid(m).lp_integral(p, self.space.volume())
    }
}

/// Real samples of a vector field on a cubic collocation grid.
#[derive(Clone, Debug)]
pub struct PhysicalField {
    pub m: usize,
    pub dim: usize,
    pub comps: Vec<Vec<f64>>,
}

impl PhysicalField {
    pub fn zeros(m: usize, dim: usize) -> Self {
        PhysicalField { m, dim, comps: vec![vec![0.0; m.pow(dim as u32)]; dim] }
    }

    pub fn n_points(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    /// `|u(x_j)|²` at every grid point.
    pub fn magnitude_sq(&self) -> Vec<f64> {
        let n = self.n_points();
        let mut out = vec![0.0; n];
        for comp in &self.comps {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += v * v;
            }
        }
        out
    }

    /// `∫ |u|^p dx` by equal-weight quadrature.
    pub fn lp_integral(&self, p: f64, volume: f64) -> f64 {
        let w = volume / self.n_points() as f64;
        let mag2 = self.magnitude_sq();
        let half = p / 2.0;
        let s: f64 = if half.fract() == 0.0 && half <= 64.0 {
            let e = half as i32;
            mag2.iter().map(|&x| x.powi(e)).sum()
        } else {
            mag2.iter().map(|&x| x.powf(half)).sum()
        };
        s * w
    }

    /// `‖u‖_{L^p}`; `p = ∞` gives the grid maximum of `|u|`.
    pub fn lp_norm(&self, p: f64, volume: f64) -> f64 {
        if p.is_infinite() {
            return self.magnitude_sq().into_iter().fold(0.0, f64::max).sqrt();
        }
        self.lp_integral(p, volume).powf(1.0 / p)
    }

    /// Forward transform onto the retained modes of `space` (no projection).
    pub fn to_spectral(&self, space: &SpectralSpace) -> Result<SpectralField> {
        if self.dim != space.dim() {
            return Err(ScbfError::SpaceMismatch(format!("dim {} vs {}", self.dim, space.dim())));
        }
        if self.m < space.n_modes() {
            return Err(ScbfError::InvalidArgument(format!(
                "grid of {} points cannot carry {} modes",
                self.m,
                space.n_modes()
            )));
        }
        let grid = space.grid(self.m);
        let d = self.dim;
        let norm = 1.0 / self.n_points() as f64;
        let mut out = SpectralField::zeros(space);
        for c in 0..d {
            let mut buf: Vec<Complex64> = self.comps[c].iter().map(|&x| Complex64::new(x, 0.0)).collect();
            grid.forward(&mut buf);
            for (mi, &slot) in grid.mode_slots.iter().enumerate() {
                out.coeffs[mi * d + c] = buf[slot] * norm;
            }
        }
        out.enforce_hermitian();
        Ok(out)
    }
}

/// Helmholtz-Hodge projection `(I - k k^T/|k|²)` applied mode-wise.
pub fn leray_project(v: &SpectralField) -> SpectralField {
    let sp = v.space();
    let d = sp.dim();
    let mut out = v.clone();
    for m in 0..sp.n_retained() {
        let k = sp.wavevector(m);
        let l = sp.lambda(m);
        let chunk = &mut out.coeffs[m * d..(m + 1) * d];
        let mut kdotv = Complex64::default();
        for c in 0..d {
            kdotv += chunk[c] * k[c] as f64;
        }
        let s = kdotv / l;
        for c in 0..d {
            chunk[c] -= s * k[c] as f64;
        }
    }
    out
}

/// Checked variant of [`leray_project`] against an expected space.
pub fn leray_project_in(space: &SpectralSpace, v: &SpectralField) -> Result<SpectralField> {
    if v.space() != space {
        return Err(ScbfError::SpaceMismatch("leray_project: field lives on a different space".into()));
    }
    Ok(leray_project(v))
}

/// Stokes operator `A`, multiplication by `|k|²`.
pub fn stokes_apply(u: &SpectralField) -> SpectralField {
    let sp = u.space().clone();
    u.map_modes(|m| sp.lambda(m))
}

/// `A^s` for real `s` (mode 0 is absent so negative powers are fine).
pub fn stokes_power(u: &SpectralField, s: f64) -> SpectralField {
    let sp = u.space().clone();
    u.map_modes(|m| sp.lambda(m).powf(s))
}

/// `P_{1/n}`: weights `e^{-λ_k/n}` on modes with `λ_k < n²`, zero elsewhere.
pub fn smoothing_projection(u: &SpectralField, n: f64) -> Result<SpectralField> {
    if !(n > 0.0) {
        return Err(ScbfError::InvalidArgument(format!("smoothing index must be positive, got {n}")));
    }
    let sp = u.space().clone();
    Ok(u.map_modes(|m| {
        let l = sp.lambda(m);
        if l < n * n {
            (-l / n).exp()
        } else {
            0.0
        }
    }))
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        debug_assert!(self.space == rhs.space);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        debug_assert!(self.space == rhs.space);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn space2(n: usize) -> SpectralSpace {
        SpectralSpace::new(2, n).unwrap()
    }

    #[test]
    fn lambda1_is_one_and_zero_mode_absent() {
        for (d, n) in [(2, 8), (3, 8), (2, 16)] {
            let sp = SpectralSpace::new(d, n).unwrap();
            assert_eq!(sp.lambda1(), 1.0);
            assert!(sp.index_of([0, 0, 0]).is_none());
            for m in 0..sp.n_retained() {
                let k = sp.wavevector(m);
                let n = sp.neg(m);
                assert_eq!(sp.wavevector(n), [-k[0], -k[1], -k[2]]);
            }
        }
    }

    #[test]
    fn modes_are_lexicographic() {
        let sp = space2(8);
        let modes = sp.modes();
        for w in modes.windows(2) {
            assert!(w[0] < w[1]);
        }
        assert_eq!(sp.n_retained(), 7 * 7 - 1);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(SpectralSpace::new(4, 8).is_err());
        assert!(SpectralSpace::new(2, 12).is_err());
        assert!(SpectralSpace::new(2, 2).is_err());
    }

    #[test]
    fn polarizations_are_orthonormal_and_transverse() {
        let sp = SpectralSpace::new(3, 8).unwrap();
        for m in 0..sp.n_retained() {
            let k = sp.wavevector(m);
            let a = sp.polarization(m, 0);
            let b = sp.polarization(m, 1);
            let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            assert!(dot(a, kf).abs() < 1e-14);
            assert!(dot(b, kf).abs() < 1e-14);
            assert!((dot(a, a) - 1.0).abs() < 1e-14);
            assert!((dot(b, b) - 1.0).abs() < 1e-14);
            assert!(dot(a, b).abs() < 1e-14);
            assert_eq!(a, sp.polarization(sp.neg(m), 0));
        }
    }

    #[test]
    fn gradient_mode_projects_to_zero() {
        let sp = space2(8);
        // v(k) = k at k = (1,0): a pure gradient.
        let v = SpectralField::cosine_mode(&sp, [1, 0, 0], [1.0, 0.0, 0.0]).unwrap();
        let p = leray_project(&v);
        assert!(p.h_norm_sq() < 1e-30);
    }

    #[test]
    fn divergence_free_field_unchanged_by_projection() {
        let sp = space2(8);
        let u = SpectralField::cosine_mode(&sp, [2, 1, 0], [-1.0, 2.0, 0.0]).unwrap();
        let p = leray_project(&u);
        for (a, b) in u.coeffs().iter().zip(p.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn leray_rejects_foreign_space() {
        let a = space2(8);
        let b = space2(16);
        let v = SpectralField::zeros(&b);
        assert!(leray_project_in(&a, &v).is_err());
    }

    #[test]
    fn stokes_eigenvalues_of_single_modes() {
        let sp = space2(8);
        let u = SpectralField::cosine_mode(&sp, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let au = stokes_apply(&u);
        for (a, b) in u.coeffs().iter().zip(au.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
        let w = SpectralField::cosine_mode(&sp, [2, 1, 0], [-1.0, 2.0, 0.0]).unwrap();
        let aw = stokes_apply(&w);
        for (a, b) in w.coeffs().iter().zip(aw.coeffs()) {
            assert!((a * 5.0 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_mode_norms() {
        // u = cos(x1) e2: ‖u‖²_H = 2π², ‖u‖⁴_{L⁴} = (3/8)(2π)² = 1.5π².
        let sp = space2(8);
        let u = SpectralField::cosine_mode(&sp, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(u.h_norm_sq(), 2.0 * PI * PI, max_relative = 1e-14);
        assert_relative_eq!(u.lp_norm_pow(4.0), 1.5 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(u.lp_norm(4.0).powi(4), 1.5 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(u.v_norm_sq(), 2.0 * PI * PI, max_relative = 1e-14);
    }

    #[test]
    fn cosine_mode_samples() {
        let sp = space2(8);
        let u = SpectralField::cosine_mode(&sp, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let p = u.to_physical(1.0).unwrap();
        let m = p.m;
        for i in 0..m {
            for j in 0..m {
                let x = 2.0 * PI * i as f64 / m as f64;
                let idx = i * m + j;
                assert!((p.comps[1][idx] - x.cos()).abs() < 1e-14);
                assert!(p.comps[0][idx].abs() < 1e-14);
            }
        }
        assert!(u.to_physical(0.5).is_err());
        let z = SpectralField::zeros(&sp).to_physical(1.5).unwrap();
        assert!(z.comps.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn smoothing_cutoff_at_unit_index() {
        // λ = 1 is not < n² = 1, so the mode is removed.
        let sp = space2(8);
        let u = SpectralField::cosine_mode(&sp, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let s = smoothing_projection(&u, 1.0).unwrap();
        assert!(s.is_zero());
        let s2 = smoothing_projection(&u, 2.0).unwrap();
        assert_relative_eq!(s2.h_norm_sq(), u.h_norm_sq() * (-1.0f64).exp(), max_relative = 1e-14);
        assert!(smoothing_projection(&u, 0.0).is_err());
    }

    #[test]
    fn basis_coordinates_roundtrip_and_isometry() {
        let sp = SpectralSpace::new(3, 4).unwrap();
        let coords: Vec<f64> = (0..2 * sp.positive_modes().len() * 2).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let u = SpectralField::from_basis_coordinates(&sp, &coords).unwrap();
        assert!(u.divergence_defect() < 1e-12);
        assert!(u.hermitian_defect() < 1e-15);
        let back = u.basis_coordinates();
        for (a, b) in coords.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let e: f64 = coords.iter().map(|x| x * x).sum();
        assert_relative_eq!(u.h_norm_sq(), e, max_relative = 1e-13);
    }
}
