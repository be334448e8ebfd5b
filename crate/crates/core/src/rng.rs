//! Seeded random streams and Haar-random samplers.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by the
//! user seed plus a `(module, index)` pair. The pair selects the ChaCha
//! stream, so restart `i` sees the same numbers whether it runs first, last or
//! on another thread.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::{c64, ComplexMatrix, ComplexVector, C64};

/// Stream namespaces. Each sampling site in the crate uses its own id.
pub mod module_id {
    pub const TESTS: u64 = 0;
    pub const SEESAW: u64 = 1;
    pub const NORMAL_SAMPLER: u64 = 2;
    pub const APPENDIX: u64 = 3;
    pub const CERTS: u64 = 4;
    pub const BOUNDS: u64 = 5;
    pub const MEASURES: u64 = 6;
    pub const ISO: u64 = 7;
    pub const FIT: u64 = 8;
}

/// Generator for stream `(module, index)` under `seed`.
pub fn stream_rng(seed: u64, module: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((module << 48) ^ index);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im)
}

/// Unnormalized vector with i.i.d. standard complex Gaussian entries.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| complex_gaussian(rng))
}

/// Haar-random unit vector in `C^n`.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-300 {
            return v.unscale(norm);
        }
    }
}

/// Uniform random unit vector in `R^n`, embedded in `C^n`.
pub fn real_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(n, |_, _| c64(rng.sample(StandardNormal), 0.0));
        let norm = v.norm();
        if norm > 1e-300 {
            return v.unscale(norm);
        }
    }
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix, with the
/// phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g: ComplexMatrix = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}
