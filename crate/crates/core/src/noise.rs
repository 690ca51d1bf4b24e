//! Q-Wiener increments and noise coefficients with known growth and
//! Lipschitz constants.
//!
//! `Q` is diagonal in the real orthonormal basis built from each pair
//! `{k, -k}` and polarization `a`: `e_re ∝ a cos(k·x)`, `e_im ∝ -a sin(k·x)`.
//! Both basis functions of a pair share the eigenvalue `q_k`, so
//! `Tr Q = sum over retained k and polarizations of q_k`. Modes outside the
//! retained set receive no noise.

use crate::error::{Result, ScbfError};
use crate::rng::PathStream;
use crate::spectral::{SpectralField, SpectralSpace};

/// Eigenvalues of `Q`, one per (positive mode, polarization).
#[derive(Clone, Debug)]
pub struct QSpectrum {
    space: SpectralSpace,
    q: Vec<f64>,
}

impl QSpectrum {
    pub fn from_values(space: &SpectralSpace, q: Vec<f64>) -> Result<Self> {
        let expected = space.positive_modes().len() * space.n_polarizations();
        if q.len() != expected {
            return Err(ScbfError::SpaceMismatch(format!("expected {expected} eigenvalues, got {}", q.len())));
        }
        if q.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(ScbfError::InvalidArgument("Q eigenvalues must be finite and nonnegative".into()));
        }
        Ok(QSpectrum { space: space.clone(), q })
    }

    /// `q_k = c |k|^{-γ}` on every retained mode.
    pub fn power_law(space: &SpectralSpace, c: f64, gamma: f64) -> Result<Self> {
        if !(gamma > space.dim() as f64) {
            return Err(ScbfError::InvalidArgument(format!(
                "decay exponent {gamma} must exceed the dimension for a trace-class Q"
            )));
        }
        let npol = space.n_polarizations();
        let q = space
            .positive_modes()
            .iter()
            .flat_map(|&m| std::iter::repeat_n(c * space.lambda(m).powf(-gamma / 2.0), npol))
            .collect();
        Self::from_values(space, q)
    }

    /// Power law scaled to a prescribed trace.
    pub fn with_trace(space: &SpectralSpace, trace: f64, gamma: f64) -> Result<Self> {
        let unit = Self::power_law(space, 1.0, gamma)?;
        let t = unit.trace();
        Self::power_law(space, trace / t, gamma)
    }

    /// Default decay `γ = dim + 2`.
    pub fn default_law(space: &SpectralSpace, trace: f64) -> Result<Self> {
        Self::with_trace(space, trace, space.dim() as f64 + 2.0)
    }

    /// All of `Q` on a single wavevector and polarization.
    pub fn single_mode(space: &SpectralSpace, k: [i32; 3], pol: usize, q: f64) -> Result<Self> {
        let m = space
            .index_of(k)
            .ok_or_else(|| ScbfError::InvalidArgument(format!("wavevector {k:?} not retained")))?;
        let rep = if space.positive_modes().contains(&m) { m } else { space.neg(m) };
        let i = space.positive_modes().iter().position(|&x| x == rep).expect("representative");
        let npol = space.n_polarizations();
        if pol >= npol {
            return Err(ScbfError::InvalidArgument(format!("polarization {pol} out of range")));
        }
        let mut values = vec![0.0; space.positive_modes().len() * npol];
        values[i * npol + pol] = q;
        Self::from_values(space, values)
    }

    pub fn space(&self) -> &SpectralSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    /// `Tr Q`; each value counts for both members of its `{k, -k}` pair.
    pub fn trace(&self) -> f64 {
        2.0 * self.q.iter().sum::<f64>()
    }

    /// `sum λ_k q_k`, the trace of `A^{1/2} Q A^{1/2}`.
    pub fn weighted_trace(&self) -> f64 {
        let npol = self.space.n_polarizations();
        2.0 * self
            .q
            .iter()
            .enumerate()
            .map(|(j, q)| q * self.space.lambda(self.space.positive_modes()[j / npol]))
            .sum::<f64>()
    }

    /// Largest eigenvalue.
    pub fn max(&self) -> f64 {
        self.q.iter().cloned().fold(0.0, f64::max)
    }

    /// `Q^{1/2} dW` for standard normal `draws` (two per eigenvalue), as a field.
    fn apply(&self, dt: f64, draws: &[f64], weights: Option<&[f64]>) -> SpectralField {
        let mut coords = vec![0.0; draws.len()];
        for (j, q) in self.q.iter().enumerate() {
            let s = (q * dt).sqrt();
            let (w_re, w_im) = match weights {
                Some(w) => (w[2 * j], w[2 * j + 1]),
                None => (1.0, 1.0),
            };
            coords[2 * j] = s * draws[2 * j] * w_re;
            coords[2 * j + 1] = s * draws[2 * j + 1] * w_im;
        }
        SpectralField::from_basis_coordinates(&self.space, &coords).expect("coordinate count matches")
    }
}

/// Noise coefficient `Φ(u)` driving `du = ... dt + Φ(u) dW`.
#[derive(Clone, Debug)]
pub enum NoiseModel {
    /// Deterministic dynamics.
    None,
    /// `Φ = I` with a trace-class `Q`.
    Additive { spectrum: QSpectrum },
    /// `Φ(u) dW = σ (u - u*) dβ` for a single real Brownian motion `β`.
    ScalarStationary { sigma: f64, u_star: SpectralField },
    /// `Φ(u) e_j = σ_j ⟨u - u*, e_j⟩ e_j`, diagonal in the noise basis.
    LinearDiagonal { spectrum: QSpectrum, sigma: Vec<f64>, u_star: SpectralField },
}

/// Gaussian draws for one step. Q-Wiener variants keep two standard normals
/// per eigenvalue; the scalar variant keeps one.
#[derive(Clone, Debug, PartialEq)]
pub struct WienerIncrement {
    pub dt: f64,
    pub draws: Vec<f64>,
}

impl WienerIncrement {
    /// Increment of the scalar Brownian motion, `sqrt(dt) ξ`.
    pub fn scalar(&self) -> f64 {
        self.draws.first().map_or(0.0, |x| x * self.dt.sqrt())
    }
}

impl NoiseModel {
    pub fn additive(space: &SpectralSpace, trace: f64) -> Result<Self> {
        Ok(NoiseModel::Additive { spectrum: QSpectrum::default_law(space, trace)? })
    }

    pub fn scalar(sigma: f64, u_star: SpectralField) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(ScbfError::InvalidArgument("sigma must be finite".into()));
        }
        Ok(NoiseModel::ScalarStationary { sigma, u_star })
    }

    pub fn linear_diagonal(spectrum: QSpectrum, sigma: Vec<f64>, u_star: SpectralField) -> Result<Self> {
        if sigma.len() != spectrum.values().len() {
            return Err(ScbfError::SpaceMismatch("one sigma per Q eigenvalue expected".into()));
        }
        if spectrum.space() != u_star.space() {
            return Err(ScbfError::SpaceMismatch("u_star and spectrum live on different spaces".into()));
        }
        Ok(NoiseModel::LinearDiagonal { spectrum, sigma, u_star })
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::Additive { .. } => "additive",
            NoiseModel::ScalarStationary { .. } => "scalar_stationary",
            NoiseModel::LinearDiagonal { .. } => "linear_diagonal",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            NoiseModel::None => true,
            NoiseModel::ScalarStationary { sigma, .. } => *sigma == 0.0,
            NoiseModel::Additive { spectrum } => spectrum.trace() == 0.0,
            NoiseModel::LinearDiagonal { spectrum, sigma, .. } => {
                spectrum.values().iter().zip(sigma).all(|(q, s)| q * s * s == 0.0)
            }
        }
    }

    /// Number of standard normals consumed per step.
    pub fn n_draws(&self) -> usize {
        match self {
            NoiseModel::None => 0,
            NoiseModel::ScalarStationary { .. } => 1,
            NoiseModel::Additive { spectrum } | NoiseModel::LinearDiagonal { spectrum, .. } => 2 * spectrum.values().len(),
        }
    }

    /// The state at which `Φ` vanishes, if any.
    pub fn u_star(&self) -> Option<&SpectralField> {
        match self {
            NoiseModel::ScalarStationary { u_star, .. } | NoiseModel::LinearDiagonal { u_star, .. } => Some(u_star),
            _ => None,
        }
    }

    fn check_space(&self, u: &SpectralField) -> Result<()> {
        match self {
            NoiseModel::None => Ok(()),
            NoiseModel::Additive { spectrum } => {
                if spectrum.space() != u.space() {
                    return Err(ScbfError::SpaceMismatch("noise spectrum and state differ".into()));
                }
                Ok(())
            }
            NoiseModel::ScalarStationary { u_star, .. } | NoiseModel::LinearDiagonal { u_star, .. } => {
                u_star.check_same_space(u)
            }
        }
    }

    /// Draws the increment for the next step of `stream`.
    pub fn sample_increment(&self, dt: f64, stream: &mut PathStream) -> Result<WienerIncrement> {
        if !(dt >= 0.0) {
            return Err(ScbfError::InvalidArgument(format!("dt must be nonnegative, got {dt}")));
        }
        let n = self.n_draws();
        let draws = if n == 0 { Vec::new() } else { stream.next_normals(n) };
        Ok(WienerIncrement { dt, draws })
    }

    /// The Q-Wiener increment `ΔW` as a field (zero for scalar and deterministic models).
    pub fn increment_field(&self, space: &SpectralSpace, incr: &WienerIncrement) -> SpectralField {
        match self {
            NoiseModel::Additive { spectrum } | NoiseModel::LinearDiagonal { spectrum, .. } => {
                spectrum.apply(incr.dt, &incr.draws, None)
            }
            _ => SpectralField::zeros(space),
        }
    }

    /// `Φ(u) ΔW`.
    pub fn phi_apply_increment(&self, _t: f64, u: &SpectralField, incr: &WienerIncrement) -> Result<SpectralField> {
        self.check_space(u)?;
        if incr.draws.len() != self.n_draws() {
            return Err(ScbfError::WrongNoiseVariant(format!(
                "{} noise expects {} draws, increment has {}",
                self.name(),
                self.n_draws(),
                incr.draws.len()
            )));
        }
        Ok(match self {
            NoiseModel::None => SpectralField::zeros(u.space()),
            NoiseModel::Additive { spectrum } => spectrum.apply(incr.dt, &incr.draws, None),
            NoiseModel::ScalarStationary { sigma, u_star } => (u - u_star).scaled(sigma * incr.scalar()),
            NoiseModel::LinearDiagonal { spectrum, sigma, u_star } => {
                let x = (u - u_star).basis_coordinates();
                let w: Vec<f64> = x.iter().enumerate().map(|(i, xi)| sigma[i / 2] * xi).collect();
                spectrum.apply(incr.dt, &incr.draws, Some(&w))
            }
        })
    }

    /// `‖Φ(u)‖²_{L_Q} = Tr(Φ Q Φ*)`.
    pub fn hs_norm_sq(&self, _t: f64, u: &SpectralField) -> Result<f64> {
        self.check_space(u)?;
        Ok(match self {
            NoiseModel::None => 0.0,
            NoiseModel::Additive { spectrum } => spectrum.trace(),
            NoiseModel::ScalarStationary { sigma, u_star } => sigma * sigma * (u - u_star).h_norm_sq(),
            NoiseModel::LinearDiagonal { spectrum, sigma, u_star } => {
                let x = (u - u_star).basis_coordinates();
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| spectrum.values()[i / 2] * sigma[i / 2].powi(2) * xi * xi)
                    .sum()
            }
        })
    }

    /// `‖Φ(u) - Φ(v)‖²_{L_Q}`.
    pub fn hs_diff_norm_sq(&self, u: &SpectralField, v: &SpectralField) -> Result<f64> {
        u.check_same_space(v)?;
        self.check_space(u)?;
        Ok(match self {
            NoiseModel::None | NoiseModel::Additive { .. } => 0.0,
            NoiseModel::ScalarStationary { sigma, .. } => sigma * sigma * (u - v).h_norm_sq(),
            NoiseModel::LinearDiagonal { spectrum, sigma, .. } => {
                let x = (u - v).basis_coordinates();
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| spectrum.values()[i / 2] * sigma[i / 2].powi(2) * xi * xi)
                    .sum()
            }
        })
    }

    /// Lipschitz constant `L`: `‖Φ(u) - Φ(v)‖²_{L_Q} <= L ‖u - v‖²_H`.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            NoiseModel::None | NoiseModel::Additive { .. } => 0.0,
            NoiseModel::ScalarStationary { sigma, .. } => sigma * sigma,
            NoiseModel::LinearDiagonal { spectrum, sigma, .. } => spectrum
                .values()
                .iter()
                .zip(sigma)
                .map(|(q, s)| q * s * s)
                .fold(0.0, f64::max),
        }
    }

    /// Growth constant `K`: `‖Φ(u)‖²_{L_Q} <= K (1 + ‖u‖²_H)`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Additive { spectrum } => spectrum.trace(),
            NoiseModel::ScalarStationary { sigma, u_star } => {
                if u_star.is_zero() {
                    sigma * sigma
                } else {
                    2.0 * sigma * sigma * u_star.h_norm_sq().max(1.0)
                }
            }
            NoiseModel::LinearDiagonal { u_star, .. } => {
                let l = self.lipschitz_constant();
                if u_star.is_zero() {
                    l
                } else {
                    2.0 * l * u_star.h_norm_sq().max(1.0)
                }
            }
        }
    }

    /// Constant `K̃` with `‖A^{1/2} Φ(u)‖²_{L_Q} <= K̃ (1 + ‖u‖²_V)`.
    pub fn regularity_constant(&self) -> f64 {
        match self {
            NoiseModel::None => 0.0,
            NoiseModel::Additive { spectrum } => spectrum.weighted_trace(),
            NoiseModel::ScalarStationary { sigma, u_star } => 2.0 * sigma * sigma * u_star.v_norm_sq().max(1.0),
            NoiseModel::LinearDiagonal { u_star, .. } => 2.0 * self.lipschitz_constant() * u_star.v_norm_sq().max(1.0),
        }
    }

    /// `‖A^{1/2} Φ(u)‖²_{L_Q}`.
    pub fn regularity_hs_norm_sq(&self, u: &SpectralField) -> Result<f64> {
        self.check_space(u)?;
        Ok(match self {
            NoiseModel::None => 0.0,
            NoiseModel::Additive { spectrum } => spectrum.weighted_trace(),
            NoiseModel::ScalarStationary { sigma, u_star } => sigma * sigma * (u - u_star).v_norm_sq(),
            NoiseModel::LinearDiagonal { spectrum, sigma, u_star } => {
                let sp = u.space();
                let npol = sp.n_polarizations();
                let x = (u - u_star).basis_coordinates();
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| {
                        let lam = sp.lambda(sp.positive_modes()[i / 2 / npol]);
                        lam * spectrum.values()[i / 2] * sigma[i / 2].powi(2) * xi * xi
                    })
                    .sum()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sp() -> SpectralSpace {
        SpectralSpace::new(2, 8).unwrap()
    }

    #[test]
    fn trace_targets() {
        let s = sp();
        let q = QSpectrum::with_trace(&s, 0.5, 4.0).unwrap();
        assert_relative_eq!(q.trace(), 0.5, max_relative = 1e-14);
        assert!(QSpectrum::power_law(&s, 1.0, 2.0).is_err());
        let m = NoiseModel::Additive { spectrum: q };
        let u = SpectralField::cosine_mode(&s, [1, 0, 0], [0.0, 3.0, 0.0]).unwrap();
        assert_relative_eq!(m.hs_norm_sq(0.0, &u).unwrap(), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn zero_dt_gives_zero_increment() {
        let s = sp();
        let m = NoiseModel::additive(&s, 1.0).unwrap();
        let mut st = PathStream::new(1, 0);
        let inc = m.sample_increment(0.0, &mut st).unwrap();
        assert!(m.phi_apply_increment(0.0, &SpectralField::zeros(&s), &inc).unwrap().is_zero());
    }

    #[test]
    fn additive_increment_passes_through() {
        let s = sp();
        let m = NoiseModel::additive(&s, 1.0).unwrap();
        let mut st = PathStream::new(1, 0);
        let inc = m.sample_increment(0.01, &mut st).unwrap();
        let u = SpectralField::cosine_mode(&s, [1, 1, 0], [1.0, -1.0, 0.0]).unwrap();
        let a = m.phi_apply_increment(0.0, &u, &inc).unwrap();
        let b = m.increment_field(&s, &inc);
        assert_eq!(a.coeffs(), b.coeffs());
        assert!(a.divergence_defect() < 1e-14);
        assert!(a.hermitian_defect() < 1e-15);
    }

    #[test]
    fn scalar_model_vanishes_at_u_star() {
        let s = sp();
        let ustar = SpectralField::cosine_mode(&s, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let m = NoiseModel::scalar(0.7, ustar.clone()).unwrap();
        let mut st = PathStream::new(1, 0);
        let inc = m.sample_increment(0.01, &mut st).unwrap();
        assert!(m.phi_apply_increment(0.0, &ustar, &inc).unwrap().is_zero());
        assert_eq!(m.hs_norm_sq(0.0, &ustar).unwrap(), 0.0);
    }

    #[test]
    fn scalar_hs_norm_hand_value() {
        // σ = 2 and ‖u - u*‖² = 3 give 12.
        let s = sp();
        let base = SpectralField::cosine_mode(&s, [1, 0, 0], [0.0, 1.0, 0.0]).unwrap();
        let u = base.scaled((3.0 / base.h_norm_sq()).sqrt());
        let m = NoiseModel::scalar(2.0, SpectralField::zeros(&s)).unwrap();
        assert_relative_eq!(m.hs_norm_sq(0.0, &u).unwrap(), 12.0, max_relative = 1e-14);
        assert_eq!(m.lipschitz_constant(), 4.0);
        assert_eq!(m.growth_constant(), 4.0);
    }

    #[test]
    fn diagonal_single_mode_is_product_of_scalars() {
        let s = sp();
        let q = QSpectrum::single_mode(&s, [1, 0, 0], 0, 0.25).unwrap();
        let j = 2 * s.positive_modes().iter().position(|&m| s.wavevector(m) == [1, 0, 0]).unwrap();
        let mut sigma = vec![0.0; q.values().len()];
        sigma[j / 2] = 3.0;
        let m = NoiseModel::linear_diagonal(q, sigma, SpectralField::zeros(&s)).unwrap();
        let u = SpectralField::cosine_mode(&s, [1, 0, 0], [0.0, 2.0, 0.0]).unwrap();
        let x = u.basis_coordinates()[j];
        let inc = WienerIncrement { dt: 0.04, draws: { let mut d = vec![0.0; m.n_draws()]; d[j] = 1.5; d } };
        let out = m.phi_apply_increment(0.0, &u, &inc).unwrap();
        let y = out.basis_coordinates();
        assert_relative_eq!(y[j], 3.0 * (0.25f64 * 0.04).sqrt() * 1.5 * x, max_relative = 1e-13);
        assert!(y.iter().enumerate().all(|(i, v)| i == j || v.abs() < 1e-15));
        assert_relative_eq!(m.hs_norm_sq(0.0, &u).unwrap(), 0.25 * 9.0 * x * x, max_relative = 1e-13);
    }

    #[test]
    fn wrong_draw_count_is_rejected() {
        let s = sp();
        let m = NoiseModel::additive(&s, 1.0).unwrap();
        let inc = WienerIncrement { dt: 0.1, draws: vec![1.0] };
        assert!(m.phi_apply_increment(0.0, &SpectralField::zeros(&s), &inc).is_err());
    }
}
