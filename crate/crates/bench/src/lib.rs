//! Fixtures shared by the benchmarks.

use scbf_core::{RandomFieldLaw, SpectralField, SpectralSpace};

/// Smooth random divergence-free field on an `n`^`dim` grid.
pub fn bench_field(dim: usize, n: usize, seed: u64) -> SpectralField {
    let space = SpectralSpace::new(dim, n).expect("valid grid");
    RandomFieldLaw::new(1.0, 1.0, n as i32).sample(&space, seed)
}
