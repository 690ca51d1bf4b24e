//! Seeded random divergence-free fields.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::PathStream;
use crate::spectral::{SpectralField, SpectralSpace};

/// Gaussian coordinates in the noise basis with variance `|k|^{-decay}` on
/// modes with `max_i |k_i| <= cutoff`, rescaled to `‖u‖_H = amplitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldLaw {
    pub decay: f64,
    pub amplitude: f64,
    pub cutoff: i32,
}

impl Default for RandomFieldLaw {
    fn default() -> Self {
        RandomFieldLaw { decay: 2.0, amplitude: 1.0, cutoff: i32::MAX }
    }
}

impl RandomFieldLaw {
    pub fn new(decay: f64, amplitude: f64, cutoff: i32) -> Self {
        RandomFieldLaw { decay, amplitude, cutoff }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn sample(&self, space: &SpectralSpace, seed: u64) -> SpectralField {
        let mut rng = PathStream::new(seed, 0x00F1_E1D5).auxiliary(0);
        self.sample_with(space, &mut rng)
    }

    pub fn sample_with<R: Rng>(&self, space: &SpectralSpace, rng: &mut R) -> SpectralField {
        let npol = space.n_polarizations();
        let mut coords = Vec::with_capacity(2 * npol * space.positive_modes().len());
        for &m in space.positive_modes() {
            let k = space.wavevector(m);
            let active = k.iter().all(|x| x.abs() <= self.cutoff);
            let s = space.lambda(m).powf(-self.decay / 4.0);
            for _ in 0..2 * npol {
                let z: f64 = rng.sample(StandardNormal);
                coords.push(if active { z * s } else { 0.0 });
            }
        }
        let u = SpectralField::from_basis_coordinates(space, &coords).expect("coordinate count");
        let n = u.h_norm();
        if n == 0.0 {
            return u;
        }
        u.scaled(self.amplitude / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fields_are_valid_and_reproducible() {
        let sp = SpectralSpace::new(3, 8).unwrap();
        let law = RandomFieldLaw::new(3.0, 2.5, 2);
        let u = law.sample(&sp, 17);
        assert!(u.divergence_defect() < 1e-13);
        assert!(u.hermitian_defect() == 0.0);
        assert_relative_eq!(u.h_norm(), 2.5, max_relative = 1e-13);
        assert_eq!(u.coeffs(), law.sample(&sp, 17).coeffs());
        let k = sp.index_of([3, 0, 0]).unwrap();
        assert!(u.mode(k).iter().all(|c| c.norm() == 0.0));
    }
}
