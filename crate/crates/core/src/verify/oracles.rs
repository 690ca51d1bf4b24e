//! Brute-force references for the pseudo-spectral operators. Only for small
//! grids: the convolution is quadratic in the number of retained modes.

use num_complex::Complex64;

use crate::error::{Result, ScbfError};
use crate::spectral::{SpectralField, SpectralSpace};

/// Largest per-axis resolution the oracles accept.
pub const ORACLE_MAX_MODES: usize = 8;

fn guard(space: &SpectralSpace) -> Result<()> {
    if space.n_modes() > ORACLE_MAX_MODES {
        return Err(ScbfError::GridTooLarge(space.n_modes()));
    }
    Ok(())
}

/// Per-mode orthogonal projection onto `k^⊥`, built from a Gram-Schmidt basis
/// of the plane rather than the closed-form projector.
pub fn leray_oracle(v: &SpectralField) -> SpectralField {
    let sp = v.space();
    let d = sp.dim();
    let mut out = SpectralField::zeros(sp);
    for m in 0..sp.n_retained() {
        let k = sp.wavevector(m);
        let kn: Vec<f64> = (0..d).map(|i| k[i] as f64).collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut ortho: Vec<Vec<f64>> = vec![kn.clone()];
        for e in 0..d {
            let mut x = vec![0.0; d];
            x[e] = 1.0;
            for b in &ortho {
                let bb: f64 = b.iter().map(|y| y * y).sum();
                let xb: f64 = x.iter().zip(b).map(|(a, c)| a * c).sum();
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi -= xb / bb * bi;
                }
            }
            let n: f64 = x.iter().map(|y| y * y).sum::<f64>().sqrt();
            if n > 1e-8 {
                let x: Vec<f64> = x.iter().map(|y| y / n).collect();
                ortho.push(x.clone());
                basis.push(x);
            }
        }
        let vm = v.mode(m);
        let om = out.mode_mut(m);
        for b in &basis {
            let c: Complex64 = vm.iter().zip(b).map(|(z, bi)| z * bi).sum();
            for (o, bi) in om.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
    }
    out
}

/// `P_H (u·∇)v` by direct summation over wavevector triads `p + q = k`.
pub fn convolution_oracle_b(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let sp = u.space();
    guard(sp)?;
    u.check_same_space(v)?;
    let d = sp.dim();
    let mut raw = SpectralField::zeros(sp);
    for mk in 0..sp.n_retained() {
        let k = sp.wavevector(mk);
        let mut acc = [Complex64::default(); 3];
        for mp in 0..sp.n_retained() {
            let p = sp.wavevector(mp);
            let q = [k[0] - p[0], k[1] - p[1], k[2] - p[2]];
            let Some(mq) = sp.index_of(q) else { continue };
            let up = u.mode(mp);
            let mut udotq = Complex64::default();
            for j in 0..d {
                udotq += up[j] * Complex64::new(0.0, q[j] as f64);
            }
            let vq = v.mode(mq);
            for i in 0..d {
                acc[i] += udotq * vq[i];
            }
        }
        raw.mode_mut(mk).copy_from_slice(&acc[..d]);
    }
    Ok(leray_oracle(&raw))
}

/// `P_H(|u|^{r-1}u)` evaluated on an 8x refined grid.
pub fn pointwise_oracle_c(u: &SpectralField, r: f64) -> Result<SpectralField> {
    let sp = u.space();
    guard(sp)?;
    let m = 8 * sp.n_modes();
    let mut p = u.to_physical_grid(m);
    let mag2 = p.magnitude_sq();
    for comp in &mut p.comps {
        for (c, a) in comp.iter_mut().zip(&mag2) {
            *c *= a.powf((r - 1.0) / 2.0);
        }
    }
    Ok(leray_oracle(&p.to_spectral(sp)?))
}

/// Relative distance `‖a - b‖_H / max(‖a‖_H, ‖b‖_H)`; zero when both vanish.
pub fn relative_deviation(a: &SpectralField, b: &SpectralField) -> f64 {
    let scale = a.h_norm().max(b.h_norm());
    if scale == 0.0 {
        return 0.0;
    }
    (a - b).h_norm() / scale
}
