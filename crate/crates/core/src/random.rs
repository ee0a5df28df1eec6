//! Seeded random states and operators.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::CMatrix;

pub type StdRng = ChaCha8Rng;

pub fn rng(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Complex Gaussian (Ginibre) matrix.
pub fn ginibre(dim: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_vec(dim, (0..dim * dim).map(|_| gaussian(rng)).collect()).expect("finite samples")
}

/// `(G + G†)/2` for Ginibre `G`.
pub fn hermitian(dim: usize, rng: &mut impl Rng) -> CMatrix {
    ginibre(dim, rng).hermitian_part()
}

/// `G G† / tr(G G†)`: full rank with probability one.
pub fn density_matrix(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let g = ginibre(dim, rng);
    let gg = &g * &g.adjoint();
    let tr = gg.trace().re;
    gg.scale_real(1.0 / tr).hermitian_part()
}

/// Unit ket with Gaussian amplitudes.
pub fn ket(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = crate::linalg::vec_norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Uniform point in the unit ball.
pub fn bloch_in_ball(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let p: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if p.iter().map(|v| v * v).sum::<f64>() < 1.0 {
            return p;
        }
    }
}
