//! Numerical toolkit for small-inclusion perturbation analysis of diffusion
//! and Helmholtz Neumann problems.
//!
//! The library is organized around a pipeline:
//!
//! 1. [`meshgeom`] builds simplicial meshes of the reference inclusion `B`
//!    and of the validation domain, and enumerates graded multi-indices.
//! 2. [`kernels`] evaluates the fundamental solution of the Laplacian and
//!    Newtonian volume potentials with singularity-aware quadrature.
//! 3. [`lippmann`] discretizes and solves the second-kind volume integral
//!    equations that define the corrector fields on `B`.
//! 4. [`tensors`] assembles polarization tensors from solved correctors and
//!    verifies their structural properties.
//! 5. [`fem`] solves the Neumann problems on the validation domain directly
//!    and computes Green-function derivative traces.
//! 6. [`expand`] forms asymptotic boundary-trace predictions and fits
//!    convergence rates against the direct solves.

pub mod error;
pub mod expand;
pub mod fem;
pub mod kernels;
pub mod linalg;
pub mod lippmann;
pub mod meshgeom;
pub mod tensors;

pub use error::{Error, Result};

/// Stable 64-bit FNV-1a hash used for provenance fingerprints.
///
/// `std::hash::DefaultHasher` is not guaranteed stable across toolchains,
/// and provenance hashes are written into serialized reports.
#[derive(Clone, Copy)]
pub struct Fnv64(u64);

impl Fnv64 {
    pub fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub fn write(&mut self, bytes: &[u8]) {
        let mut h = self.0;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self.0 = h;
    }

    pub fn write_f64(&mut self, x: f64) {
        self.write(&x.to_bits().to_le_bytes());
    }

    pub fn write_usize(&mut self, x: usize) {
        self.write(&(x as u64).to_le_bytes());
    }

    pub fn write_u64(&mut self, x: u64) {
        self.write(&x.to_le_bytes());
    }

    pub fn finish(&self) -> u64 {
        self.0
    }

    pub fn finish_hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

impl Default for Fnv64 {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_matches_reference_vectors() {
        // Reference values for 64-bit FNV-1a.
        let mut h = Fnv64::new();
        h.write(b"");
        assert_eq!(h.finish(), 0xcbf29ce484222325);
        let mut h = Fnv64::new();
        h.write(b"a");
        assert_eq!(h.finish(), 0xaf63dc4c8601ec8c);
        let mut h = Fnv64::new();
        h.write(b"foobar");
        assert_eq!(h.finish(), 0x85944171f73967e8);
    }
}
