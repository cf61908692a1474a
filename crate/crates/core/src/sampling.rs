//! Seeded random matrices and states for restarts and property checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, CMatrix, RVector};

pub use rand_chacha::ChaCha8Rng as SeededRng;
pub use rand::SeedableRng;

pub fn rng(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> RVector {
    RVector::from_fn(n, |_, _| normal(rng))
}

/// Complex Ginibre matrix with standard normal real and imaginary parts.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(normal(rng), normal(rng)))
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = ginibre(rng, n);
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// Random full-rank density matrix `G G^dagger / tr(G G^dagger)`.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = ginibre(rng, n);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho / c(tr, 0.0)
}

/// Uniform point in the Bloch ball of radius `radius`.
pub fn bloch_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> [f64; 3] {
    loop {
        let v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let r2: f64 = v.iter().map(|x| x * x).sum();
        if r2 <= 1.0 {
            return v.map(|x| x * radius);
        }
    }
}
