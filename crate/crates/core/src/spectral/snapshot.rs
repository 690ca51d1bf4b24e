//! Binary and text snapshots of spectral fields.
//!
//! Binary layout (little-endian): `b"SCBF"`, version `u32`, dim `u32`,
//! n_modes `u32`, retained-mode count `u32`, then `(re, im)` as `f64` per
//! mode per component, modes in lexicographic order of `k`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{SpectralField, SpectralSpace};
use crate::error::{Result, ScbfError};

pub const MAGIC: &[u8; 4] = b"SCBF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(u: &SpectralField, mut w: W) -> Result<()> {
    let sp = u.space();
    w.write_all(MAGIC)?;
    for v in [VERSION, sp.dim() as u32, sp.n_modes() as u32, sp.n_retained() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    for c in u.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn snapshot_bytes(u: &SpectralField) -> Vec<u8> {
    let mut buf = Vec::with_capacity(20 + 16 * u.coeffs().len());
    write_snapshot(u, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

/// Reads a snapshot and rebuilds its space.
pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ScbfError::Format("bad magic".into()));
    }
    let mut word = [0u8; 4];
    let mut next = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let version = next(&mut r)?;
    if version != VERSION {
        return Err(ScbfError::Format(format!("unsupported version {version}")));
    }
    let dim = next(&mut r)? as usize;
    let n_modes = next(&mut r)? as usize;
    let count = next(&mut r)? as usize;
    let space = SpectralSpace::new(dim, n_modes).map_err(|e| ScbfError::Format(e.to_string()))?;
    if count != space.n_retained() {
        return Err(ScbfError::Format(format!("mode count {count}, expected {}", space.n_retained())));
    }
    let mut coeffs = Vec::with_capacity(count * dim);
    let mut f = [0u8; 8];
    for _ in 0..count * dim {
        r.read_exact(&mut f)?;
        let re = f64::from_le_bytes(f);
        r.read_exact(&mut f)?;
        let im = f64::from_le_bytes(f);
        coeffs.push(Complex64::new(re, im));
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(ScbfError::Format("trailing bytes".into()));
    }
    SpectralField::from_coeffs(&space, coeffs)
}

/// One line per mode and component: `k0 k1 [k2] component re im`.
pub fn text_dump(u: &SpectralField) -> String {
    let sp = u.space();
    let d = sp.dim();
    let mut out = String::new();
    for m in 0..sp.n_retained() {
        let k = sp.wavevector(m);
        for c in 0..d {
            let z = u.coeff(m, c);
            for ki in k.iter().take(d) {
                out.push_str(&format!("{ki} "));
            }
            out.push_str(&format!("{c} {:e} {:e}\n", z.re, z.im));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_bytes() {
        let sp = SpectralSpace::new(3, 4).unwrap();
        let u = SpectralField::cosine_mode(&sp, [1, 0, 1], [1.0, 0.5, -1.0]).unwrap();
        let bytes = snapshot_bytes(&u);
        assert_eq!(&bytes[..4], b"SCBF");
        let v = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(u.coeffs(), v.coeffs());
        assert_eq!(v.space(), &sp);
    }

    #[test]
    fn rejects_corrupt_input() {
        let sp = SpectralSpace::new(2, 4).unwrap();
        let u = SpectralField::zeros(&sp);
        let mut bytes = snapshot_bytes(&u);
        bytes.push(0);
        assert!(read_snapshot(bytes.as_slice()).is_err());
        bytes.truncate(10);
        assert!(read_snapshot(bytes.as_slice()).is_err());
        assert!(read_snapshot(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn text_dump_line_count() {
        let sp = SpectralSpace::new(2, 4).unwrap();
        let u = SpectralField::zeros(&sp);
        assert_eq!(text_dump(&u).lines().count(), sp.n_retained() * 2);
    }
}
