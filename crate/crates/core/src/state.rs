//! Quantum states and observables.
//!
//! Validation is explicit: [`DensityMatrix::new`] checks Hermiticity, unit
//! trace and positivity, while [`DensityMatrix::new_unchecked`] lets the
//! integrator carry transient near-valid states between steps.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, CMatrix, SpectralDecomposition, HERMITIAN_TOL};
use crate::pauli;

/// Tolerance on `|tr ρ − 1|` for a valid state.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues down to `-POSITIVITY_TOL` are treated as roundoff.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Maximum tolerated imaginary part of an expectation value.
pub const EXPECTATION_IM_TOL: f64 = 1e-12;

/// Hermitian operator with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub label: String,
    matrix: CMatrix,
}

impl Observable {
    pub fn new(label: impl Into<String>, matrix: CMatrix) -> Result<Self> {
        matrix.check_hermitian(HERMITIAN_TOL)?;
        Ok(Self {
            label: label.into(),
            matrix,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    pub fn new_unchecked(matrix: CMatrix) -> Self {
        Self { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.matrix.check_hermitian(HERMITIAN_TOL)?;
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::TraceNotOne { trace: tr.re });
        }
        let lowest = self.spectrum()?.eigenvalues[0];
        if lowest < -POSITIVITY_TOL {
            return Err(Error::NegativeEigenvalue { value: lowest });
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn spectrum(&self) -> Result<SpectralDecomposition> {
        hermitian_eig(&self.matrix)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.spectrum()?.eigenvalues)
    }
}

/// Ket `|ψ⟩`. Normalization is not required; only a nonzero norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() || linalg::vec_norm(&amplitudes) <= 1e-12 {
            return Err(Error::ZeroVector);
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: 0,
                col: amplitudes
                    .iter()
                    .position(|z| !z.re.is_finite() || !z.im.is_finite())
                    .unwrap_or(0),
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        linalg::vec_norm(&self.amplitudes)
    }

    /// `⟨ψ|A|ψ⟩ / ⟨ψ|ψ⟩` (complex; real for Hermitian `A`).
    pub fn expect(&self, op: &CMatrix) -> Result<C64> {
        let a_psi = op.matvec(&self.amplitudes)?;
        Ok(linalg::inner(&self.amplitudes, &a_psi) / self.norm().powi(2))
    }
}

/// Ensemble decomposition `Σ p_n |ψ_n⟩⟨ψ_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<(f64, StateVector)>,
}

impl Mixture {
    pub fn new(components: Vec<(f64, StateVector)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::EmptyMixture);
        };
        let dim = first.dim();
        for (w, ket) in &components {
            if !(*w > 0.0 && *w <= 1.0) {
                return Err(Error::InvalidWeight { weight: *w });
            }
            if ket.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: ket.dim(),
                });
            }
        }
        let sum: f64 = components.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::WeightsNotNormalized { sum });
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, StateVector)] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components[0].1.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) || r.norm_sqr() > 1.0 + 1e-10 {
            return Err(Error::BlochOutsideBall { norm: r.norm() });
        }
        Ok(r)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

fn real_part_checked(z: C64, scale: f64) -> Result<f64> {
    if z.im.abs() > EXPECTATION_IM_TOL * scale.max(1.0) {
        return Err(Error::ImaginaryResidue { im: z.im });
    }
    Ok(z.re)
}

/// `tr(ρ A)`.
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    let z = linalg::trace_product(rho.matrix(), obs.matrix())?;
    real_part_checked(z, obs.matrix().frobenius_norm())
}

/// Symmetrized covariance `½ tr(ρ{a,b}) − tr(ρa) tr(ρb)`.
///
/// For `b` commuting with `ρ` (e.g. `b = ln ρ`) this equals the plain
/// `tr(ρab) − tr(ρa) tr(ρb)`.
pub fn covariance(rho: &DensityMatrix, a: &Observable, b: &CMatrix) -> Result<f64> {
    covariance_raw(rho.matrix(), a.matrix(), b)
}

pub(crate) fn covariance_raw(rho: &CMatrix, a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let ab = linalg::anticommutator(a, b)?;
    let sym = linalg::trace_product(rho, &ab)? * 0.5;
    let ea = linalg::trace_product(rho, a)?;
    let eb = linalg::trace_product(rho, b)?;
    Ok(sym.re - ea.re * eb.re)
}

/// `−Σ λ ln λ` with `0 ln 0 = 0`; eigenvalues in `[−1e-10, 0)` are clamped.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues()?)
}

pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigenvalues {
        if l < -POSITIVITY_TOL {
            return Err(Error::NegativeEigenvalue { value: l });
        }
        if l > 0.0 {
            s -= l * l.ln();
        }
    }
    Ok(s)
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    purity_raw(rho.matrix())
}

pub(crate) fn purity_raw(rho: &CMatrix) -> f64 {
    // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ.
    rho.as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
pub fn projector_from_ket(psi: &StateVector) -> DensityMatrix {
    DensityMatrix::new_unchecked(projector_raw(psi.amplitudes()))
}

pub(crate) fn projector_raw(psi: &[C64]) -> CMatrix {
    let n2 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>();
    CMatrix::outer(psi, psi).scale_real(1.0 / n2)
}

/// `Σ p_n Π_n`.
pub fn from_mixture(mix: &Mixture) -> DensityMatrix {
    let mut acc = CMatrix::zeros(mix.dim());
    for (w, ket) in mix.components() {
        acc += &projector_raw(ket.amplitudes()).scale_real(*w);
    }
    DensityMatrix::new_unchecked(acc)
}

/// `(I + xσx + yσy + zσz)/2`.
pub fn bloch_decode(r: &BlochVector) -> DensityMatrix {
    let h = 0.5;
    let m = CMatrix::from_vec(
        2,
        vec![
            C64::new(h * (1.0 + r.z), 0.0),
            C64::new(h * r.x, -h * r.y),
            C64::new(h * r.x, h * r.y),
            C64::new(h * (1.0 - r.z), 0.0),
        ],
    )
    .expect("finite 2x2");
    DensityMatrix::new_unchecked(m)
}

/// Inverse of [`bloch_decode`]: `r_a = tr(ρ σ_a)`.
pub fn bloch_encode(rho: &DensityMatrix) -> Result<BlochVector> {
    bloch_encode_raw(rho.matrix())
}

pub(crate) fn bloch_encode_raw(m: &CMatrix) -> Result<BlochVector> {
    if m.dim() != 2 {
        return Err(Error::BlochDimension { dim: m.dim() });
    }
    Ok(BlochVector {
        x: m[(0, 1)].re + m[(1, 0)].re,
        y: m[(1, 0)].im - m[(0, 1)].im,
        z: m[(0, 0)].re - m[(1, 1)].re,
    })
}

/// Observable `n·σ` for a (not necessarily unit) direction `n`.
pub fn spin_along(n: [f64; 3]) -> CMatrix {
    let mut m = pauli::x().scale_real(n[0]);
    m += &pauli::y().scale_real(n[1]);
    m += &pauli::z().scale_real(n[2]);
    m
}
