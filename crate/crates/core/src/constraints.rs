//! Constraint families `tr(ρ Φ^k) = c^k` and their Lagrange multipliers.
//!
//! Two multiplier schemes exist. The commutator scheme solves
//! `Σ_j λ_j w^{jk} = tr(ρ[H, Φ^k])` with the antisymmetric
//! `w^{jk} = tr(ρ[Φ^j, Φ^k])`, which is only invertible for an even number
//! of constraints. The symmetric scheme solves
//! `Σ_j λ_j m^{jk} = i tr(ρ[H, Φ^k])` with the covariance matrix
//! `m^{jk} = tr(ρ{Φ^j, Φ^k}) − 2 tr(ρΦ^j) tr(ρΦ^k)`, valid for any count.
//!
//! Both schemes only need expectation values of fixed operators, so the
//! same code serves density matrices and kets through [`Expectation`].

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, SINGULAR_RCOND};
use crate::state::{DensityMatrix, Observable};

/// Largest tolerated `|Im λ|` before a multiplier is rejected.
pub const MULTIPLIER_IM_TOL: f64 = 1e-10;
/// Commutator Frobenius norms at or below this count as vanishing.
pub const COMMUTES_TOL: f64 = 1e-12;

/// Anything that can produce `⟨A⟩` for a fixed operator `A`.
pub trait Expectation {
    fn dim(&self) -> usize;
    fn expect(&self, op: &CMatrix) -> C64;
}

impl Expectation for CMatrix {
    fn dim(&self) -> usize {
        CMatrix::dim(self)
    }
    fn expect(&self, op: &CMatrix) -> C64 {
        linalg::trace_product_unchecked(self, op)
    }
}

impl Expectation for DensityMatrix {
    fn dim(&self) -> usize {
        DensityMatrix::dim(self)
    }
    fn expect(&self, op: &CMatrix) -> C64 {
        linalg::trace_product_unchecked(self.matrix(), op)
    }
}

/// A ket, read as `⟨ψ|A|ψ⟩ / ⟨ψ|ψ⟩`.
impl Expectation for [C64] {
    fn dim(&self) -> usize {
        self.len()
    }
    fn expect(&self, op: &CMatrix) -> C64 {
        let n = self.len();
        let ops = op.as_slice();
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for i in 0..n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..n {
                row += ops[i * n + j] * self[j];
            }
            num += self[i].conj() * row;
            den += self[i].norm_sqr();
        }
        num / den
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    observables: Vec<Observable>,
    targets: Vec<f64>,
}

impl ConstraintSet {
    /// Constraints with all targets zero; see [`ConstraintSet::capture_targets`].
    pub fn new(observables: Vec<Observable>) -> Result<Self> {
        let n = observables.len();
        Self::with_targets(observables, vec![0.0; n])
    }

    pub fn with_targets(observables: Vec<Observable>, targets: Vec<f64>) -> Result<Self> {
        if targets.len() != observables.len() {
            return Err(Error::DimensionMismatch {
                expected: observables.len(),
                found: targets.len(),
            });
        }
        if let Some(first) = observables.first() {
            let dim = first.dim();
            if let Some(bad) = observables.iter().find(|o| o.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.dim(),
                });
            }
        }
        Ok(Self {
            observables,
            targets,
        })
    }

    pub fn empty() -> Self {
        Self {
            observables: Vec::new(),
            targets: Vec::new(),
        }
    }

    /// Same observables, targets set to `tr(ρ Φ^k)`.
    pub fn capture_targets(&self, rho: &(impl Expectation + ?Sized)) -> Result<Self> {
        let mut targets = Vec::with_capacity(self.len());
        for o in &self.observables {
            check_dim(rho.dim(), o.dim())?;
            targets.push(rho.expect(o.matrix()).re);
        }
        Ok(Self {
            observables: self.observables.clone(),
            targets,
        })
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.observables.first().map(Observable::dim)
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `tr(ρΦ^k) − c^k` per constraint.
pub fn residuals(rho: &(impl Expectation + ?Sized), cs: &ConstraintSet) -> Result<Vec<f64>> {
    cs.observables
        .iter()
        .zip(&cs.targets)
        .map(|(o, c)| {
            check_dim(rho.dim(), o.dim())?;
            Ok(rho.expect(o.matrix()).re - c)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierScheme {
    /// Antisymmetric `w`, even constraint count.
    Commutator,
    /// Symmetric covariance `m`, any count.
    Symmetric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSolution {
    pub lambdas: Vec<f64>,
    pub rcond: f64,
    /// The `w` or `m` matrix that was solved against.
    pub geometry_matrix: CMatrix,
    /// Max-abs residual of the stationarity equations at the returned λ.
    pub stationarity_residual: f64,
}

/// State-independent operators needed by the multiplier solves:
/// `[H, Φ^k]`, `[Φ^j, Φ^k]` and `{Φ^j, Φ^k}`.
#[derive(Debug, Clone)]
pub struct ConstraintGeometry {
    dim: usize,
    n: usize,
    phis: Vec<CMatrix>,
    h_comm: Vec<CMatrix>,
    pair_comm: Vec<CMatrix>,
    pair_anti: Vec<CMatrix>,
}

impl ConstraintGeometry {
    pub fn new(cs: &ConstraintSet, h: &Observable) -> Result<Self> {
        let dim = h.dim();
        let n = cs.len();
        let phis: Vec<CMatrix> = cs.observables.iter().map(|o| o.matrix().clone()).collect();
        let mut h_comm = Vec::with_capacity(n);
        for p in &phis {
            h_comm.push(linalg::commutator(h.matrix(), p)?);
        }
        let mut pair_comm = Vec::with_capacity(n * n);
        let mut pair_anti = Vec::with_capacity(n * n);
        for a in &phis {
            for b in &phis {
                pair_comm.push(linalg::commutator(a, b)?);
                pair_anti.push(linalg::anticommutator(a, b)?);
            }
        }
        Ok(Self {
            dim,
            n,
            phis,
            h_comm,
            pair_comm,
            pair_anti,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn phis(&self) -> &[CMatrix] {
        &self.phis
    }

    fn check(&self, state: &(impl Expectation + ?Sized)) -> Result<()> {
        check_dim(self.dim, state.dim())
    }

    /// `w^{jk} = ⟨[Φ^j, Φ^k]⟩`.
    pub fn w_matrix(&self, state: &(impl Expectation + ?Sized)) -> Result<CMatrix> {
        self.check(state)?;
        let n = self.n;
        let mut w = CMatrix::zeros(n);
        for j in 0..n {
            for k in (j + 1)..n {
                let v = state.expect(&self.pair_comm[j * n + k]);
                w[(j, k)] = v;
                w[(k, j)] = -v;
            }
        }
        Ok(w)
    }

    /// `m^{jk} = ⟨{Φ^j, Φ^k}⟩ − 2⟨Φ^j⟩⟨Φ^k⟩`.
    pub fn m_matrix(&self, state: &(impl Expectation + ?Sized)) -> Result<CMatrix> {
        self.check(state)?;
        let n = self.n;
        let means: Vec<f64> = self.phis.iter().map(|p| state.expect(p).re).collect();
        let mut m = CMatrix::zeros(n);
        for j in 0..n {
            for k in j..n {
                let v = state.expect(&self.pair_anti[j * n + k]).re - 2.0 * means[j] * means[k];
                m[(j, k)] = C64::new(v, 0.0);
                m[(k, j)] = C64::new(v, 0.0);
            }
        }
        Ok(m)
    }

    /// `b_k = ⟨[H, Φ^k]⟩`, purely imaginary for Hermitian inputs.
    pub fn drive(&self, state: &(impl Expectation + ?Sized)) -> Result<Vec<C64>> {
        self.check(state)?;
        Ok(self.h_comm.iter().map(|c| state.expect(c)).collect())
    }

    pub fn solve(
        &self,
        scheme: MultiplierScheme,
        state: &(impl Expectation + ?Sized),
    ) -> Result<MultiplierSolution> {
        match scheme {
            MultiplierScheme::Commutator => self.solve_commutator(state),
            MultiplierScheme::Symmetric => self.solve_symmetric(state),
        }
    }

    /// Solves `Σ_j λ_j w^{jk} = b_k`, i.e. `λ_k = Σ_j (w⁻¹)_{jk} b_j`.
    pub fn solve_commutator(&self, state: &(impl Expectation + ?Sized)) -> Result<MultiplierSolution> {
        if self.n % 2 == 1 {
            return Err(Error::OddConstraintCount { n: self.n });
        }
        let w = self.w_matrix(state)?;
        let b = self.drive(state)?;
        if self.n == 0 {
            return Ok(empty_solution());
        }
        let (lam, rcond) = solve_geometry(&w.transpose(), &b)?;
        let lambdas = real_multipliers(&lam)?;
        let stationarity_residual = (0..self.n)
            .map(|k| {
                let lw: C64 = (0..self.n).map(|j| w[(j, k)] * lambdas[j]).sum();
                (b[k] - lw).norm()
            })
            .fold(0.0, f64::max);
        Ok(MultiplierSolution {
            lambdas,
            rcond,
            geometry_matrix: w,
            stationarity_residual,
        })
    }

    /// Solves `Σ_j λ_j m^{jk} = i b_k`.
    pub fn solve_symmetric(&self, state: &(impl Expectation + ?Sized)) -> Result<MultiplierSolution> {
        let m = self.m_matrix(state)?;
        let b = self.drive(state)?;
        if self.n == 0 {
            return Ok(empty_solution());
        }
        let i = C64::new(0.0, 1.0);
        let ib: Vec<C64> = b.iter().map(|&v| i * v).collect();
        let (lam, rcond) = solve_geometry(&m, &ib)?;
        let lambdas = real_multipliers(&lam)?;
        // tr(ρ[H,Φ^k]) = −i Σ_j λ_j m^{jk}
        let stationarity_residual = (0..self.n)
            .map(|k| {
                let lm: C64 = (0..self.n).map(|j| m[(j, k)] * lambdas[j]).sum();
                (b[k] + i * lm).norm()
            })
            .fold(0.0, f64::max);
        Ok(MultiplierSolution {
            lambdas,
            rcond,
            geometry_matrix: m,
            stationarity_residual,
        })
    }
}

fn empty_solution() -> MultiplierSolution {
    MultiplierSolution {
        lambdas: Vec::new(),
        rcond: 1.0,
        geometry_matrix: CMatrix::zeros(0),
        stationarity_residual: 0.0,
    }
}

fn solve_geometry(m: &CMatrix, rhs: &[C64]) -> Result<(Vec<C64>, f64)> {
    linalg::solve_linear_with(m, rhs, SINGULAR_RCOND).map_err(|e| match e {
        Error::SingularSystem { rcond } => Error::SingularConstraintGeometry { rcond },
        other => other,
    })
}

fn real_multipliers(lam: &[C64]) -> Result<Vec<f64>> {
    lam.iter()
        .enumerate()
        .map(|(index, z)| {
            if z.im.abs() > MULTIPLIER_IM_TOL {
                Err(Error::ComplexMultiplier { index, im: z.im })
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

/// `w^{jk} = tr(ρ[Φ^j, Φ^k])`.
pub fn w_matrix(rho: &DensityMatrix, cs: &ConstraintSet) -> Result<CMatrix> {
    let n = cs.len();
    let mut w = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let c = linalg::commutator(cs.observables[j].matrix(), cs.observables[k].matrix())?;
            w[(j, k)] = linalg::trace_product(rho.matrix(), &c)?;
        }
    }
    Ok(w)
}

/// `m^{jk} = tr(ρ{Φ^j, Φ^k}) − 2 tr(ρΦ^j) tr(ρΦ^k)`.
pub fn m_matrix(rho: &DensityMatrix, cs: &ConstraintSet) -> Result<CMatrix> {
    let n = cs.len();
    let mut means = Vec::with_capacity(n);
    for o in &cs.observables {
        means.push(linalg::trace_product(rho.matrix(), o.matrix())?.re);
    }
    let mut m = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let a = linalg::anticommutator(cs.observables[j].matrix(), cs.observables[k].matrix())?;
            let v = linalg::trace_product(rho.matrix(), &a)?.re - 2.0 * means[j] * means[k];
            m[(j, k)] = C64::new(v, 0.0);
        }
    }
    Ok(m)
}

pub fn solve_multipliers_commutator(
    rho: &DensityMatrix,
    cs: &ConstraintSet,
    h: &Observable,
) -> Result<MultiplierSolution> {
    if cs.len() % 2 == 1 {
        return Err(Error::OddConstraintCount { n: cs.len() });
    }
    ConstraintGeometry::new(cs, h)?.solve_commutator(rho)
}

pub fn solve_multipliers_symmetric(
    rho: &DensityMatrix,
    cs: &ConstraintSet,
    h: &Observable,
) -> Result<MultiplierSolution> {
    ConstraintGeometry::new(cs, h)?.solve_symmetric(rho)
}

#[derive(Debug, Clone, PartialEq)]
pub enum QualificationIssue {
    DimensionMismatch { label: String, dim: usize, expected: usize },
    CommutesWithHamiltonian { label: String },
    RedundantPair { first: String, second: String },
    OddConstraintCount { n: usize },
}

impl fmt::Display for QualificationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::DimensionMismatch { label, dim, expected } => {
                write!(f, "constraint {label} has dimension {dim}, Hamiltonian has {expected}")
            }
            Self::CommutesWithHamiltonian { label } => {
                write!(f, "[H, {label}] = 0: constraint is trivially conserved")
            }
            Self::RedundantPair { first, second } => {
                write!(f, "[{first}, {second}] = 0: constraints are redundant")
            }
            Self::OddConstraintCount { n } => {
                write!(f, "odd constraint count ({n}) for the commutator flow")
            }
        }
    }
}

/// Advisory report on a constraint family.
#[derive(Debug, Clone, PartialEq)]
pub struct QualificationReport {
    pub n: usize,
    pub even_parity: bool,
    /// `(label, ‖[H, Φ^k]‖_F)`.
    pub hamiltonian_commutators: Vec<(String, f64)>,
    /// `(j, k, ‖[Φ^j, Φ^k]‖_F)` for `j < k`.
    pub pair_commutators: Vec<(usize, usize, f64)>,
    pub issues: Vec<QualificationIssue>,
}

impl QualificationReport {
    pub fn is_qualified(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks dimensions, `[H, Φ^k] ≠ 0`, `[Φ^j, Φ^k] ≠ 0`, and parity when the
/// commutator scheme is requested.
pub fn qualification_check(
    cs: &ConstraintSet,
    h: &Observable,
    scheme: Option<MultiplierScheme>,
) -> QualificationReport {
    let n = cs.len();
    let dim = h.dim();
    let mut issues = Vec::new();
    let mut hamiltonian_commutators = Vec::new();
    let mut pair_commutators = Vec::new();

    let consistent: Vec<bool> = cs.observables.iter().map(|o| o.dim() == dim).collect();
    for (o, ok) in cs.observables.iter().zip(&consistent) {
        if !ok {
            issues.push(QualificationIssue::DimensionMismatch {
                label: o.label.clone(),
                dim: o.dim(),
                expected: dim,
            });
        }
    }

    for (o, ok) in cs.observables.iter().zip(&consistent) {
        let norm = if *ok {
            linalg::commutator(h.matrix(), o.matrix())
                .map(|c| c.frobenius_norm())
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        if *ok && norm <= COMMUTES_TOL {
            issues.push(QualificationIssue::CommutesWithHamiltonian {
                label: o.label.clone(),
            });
        }
        hamiltonian_commutators.push((o.label.clone(), norm));
    }

    for j in 0..n {
        for k in (j + 1)..n {
            let (a, b) = (&cs.observables[j], &cs.observables[k]);
            let norm = linalg::commutator(a.matrix(), b.matrix())
                .map(|c| c.frobenius_norm())
                .unwrap_or(f64::NAN);
            if norm <= COMMUTES_TOL {
                issues.push(QualificationIssue::RedundantPair {
                    first: a.label.clone(),
                    second: b.label.clone(),
                });
            }
            pair_commutators.push((j, k, norm));
        }
    }

    let even_parity = n.is_multiple_of(2);
    if scheme == Some(MultiplierScheme::Commutator) && !even_parity {
        issues.push(QualificationIssue::OddConstraintCount { n });
    }

    QualificationReport {
        n,
        even_parity,
        hamiltonian_commutators,
        pair_commutators,
        issues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli;
    use crate::state::{bloch_decode, BlochVector};
    use approx::assert_abs_diff_eq;

    fn obs(label: &str, m: CMatrix) -> Observable {
        Observable::new(label, m).unwrap()
    }

    fn bloch(x: f64, y: f64, z: f64) -> DensityMatrix {
        bloch_decode(&BlochVector::new(x, y, z).unwrap())
    }

    fn xy_pair() -> ConstraintSet {
        ConstraintSet::new(vec![obs("sx", pauli::x()), obs("sy", pauli::y())]).unwrap()
    }

    fn sx_only(target: f64) -> ConstraintSet {
        ConstraintSet::with_targets(vec![obs("sx", pauli::x())], vec![target]).unwrap()
    }

    #[test]
    fn residual_examples() {
        let rho = bloch(0.3, -0.2, 0.5);
        let cs = xy_pair().capture_targets(&rho).unwrap();
        for r in residuals(&rho, &cs).unwrap() {
            assert_eq!(r, 0.0);
        }
        assert_abs_diff_eq!(residuals(&bloch(0.5, 0.0, 0.0), &sx_only(0.5)).unwrap()[0], 0.0);
        assert_abs_diff_eq!(
            residuals(&bloch(0.4, 0.0, 0.0), &sx_only(0.5)).unwrap()[0],
            -0.1,
            epsilon = 1e-15
        );
    }

    #[test]
    fn w_matrix_for_xy_pair() {
        let z = 0.35;
        let w = w_matrix(&bloch(0.1, 0.2, z), &xy_pair()).unwrap();
        assert_abs_diff_eq!(w[(0, 1)].im, 2.0 * z, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(0, 1)].re, 0.0);
        assert_eq!(w[(1, 0)], -w[(0, 1)]);
        assert_eq!(w[(0, 0)], C64::new(0.0, 0.0));
        let w0 = w_matrix(&bloch(0.1, 0.2, 0.0), &xy_pair()).unwrap();
        assert_eq!(w0.frobenius_norm(), 0.0);
    }

    #[test]
    fn m_matrix_examples() {
        let (x, y, z) = (0.4, -0.3, 0.5);
        let m = m_matrix(&bloch(x, y, z), &sx_only(0.0)).unwrap();
        assert_abs_diff_eq!(m[(0, 0)].re, 2.0 * (1.0 - x * x), epsilon = 1e-15);
        let sz = ConstraintSet::new(vec![obs("sz", pauli::z())]).unwrap();
        let m = m_matrix(&DensityMatrix::maximally_mixed(2), &sz).unwrap();
        assert_abs_diff_eq!(m[(0, 0)].re, 2.0, epsilon = 1e-15);
        let m = m_matrix(&bloch(0.0, 0.0, 1.0), &sz).unwrap();
        assert_abs_diff_eq!(m[(0, 0)].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn prepared_geometry_matches_direct_construction() {
        let rho = bloch(0.2, -0.5, 0.3);
        let h = obs("sz", pauli::z());
        let g = ConstraintGeometry::new(&xy_pair(), &h).unwrap();
        assert!((&g.w_matrix(&rho).unwrap() - &w_matrix(&rho, &xy_pair()).unwrap()).frobenius_norm() < 1e-15);
        assert!((&g.m_matrix(&rho).unwrap() - &m_matrix(&rho, &xy_pair()).unwrap()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn commutator_multipliers_for_xy_pair() {
        let h = obs("sz", pauli::z());
        let (x, y, z) = (0.5, 0.3, 0.2);
        let sol = solve_multipliers_commutator(&bloch(x, y, z), &xy_pair(), &h).unwrap();
        assert_abs_diff_eq!(sol.lambdas[0], -2.5, epsilon = 1e-13);
        assert_abs_diff_eq!(sol.lambdas[1], -1.5, epsilon = 1e-13);
        assert!(sol.stationarity_residual < 1e-12);
    }

    #[test]
    fn commutator_multipliers_vanish_without_drive() {
        // Φ = (σx⊗I, σy⊗I) both commute with H = I⊗σz.
        let h = obs("h", pauli::id().kron(&pauli::z()));
        let cs = ConstraintSet::new(vec![
            obs("x1", pauli::x().kron(&pauli::id())),
            obs("y1", pauli::y().kron(&pauli::id())),
        ])
        .unwrap();
        let rho = DensityMatrix::new(
            &CMatrix::identity(4).scale_real(0.25) + &pauli::z().kron(&pauli::id()).scale_real(0.1),
        )
        .unwrap();
        let sol = solve_multipliers_commutator(&rho, &cs, &h).unwrap();
        assert_eq!(sol.lambdas, vec![0.0, 0.0]);
    }

    #[test]
    fn commutator_multipliers_singular_and_odd() {
        let h = obs("sz", pauli::z());
        assert!(matches!(
            solve_multipliers_commutator(&bloch(0.5, 0.3, 0.0), &xy_pair(), &h),
            Err(Error::SingularConstraintGeometry { .. })
        ));
        assert!(matches!(
            solve_multipliers_commutator(&bloch(0.5, 0.3, 0.1), &sx_only(0.5), &h),
            Err(Error::OddConstraintCount { n: 1 })
        ));
    }

    #[test]
    fn symmetric_multiplier_for_sigma_x() {
        let h = obs("sz", pauli::z());
        let (x, y, z) = (0.5, 0.3, 0.2);
        let sol = solve_multipliers_symmetric(&bloch(x, y, z), &sx_only(x), &h).unwrap();
        assert_abs_diff_eq!(sol.lambdas[0], -y / (1.0 - x * x), epsilon = 1e-15);
        assert!(sol.stationarity_residual < 1e-14);

        let sol = solve_multipliers_symmetric(&bloch(x, 0.0, z), &sx_only(x), &h).unwrap();
        assert_abs_diff_eq!(sol.lambdas[0], 0.0);

        let sol =
            solve_multipliers_symmetric(&DensityMatrix::maximally_mixed(2), &xy_pair(), &h).unwrap();
        assert_eq!(sol.lambdas, vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_multiplier_singular_on_eigenstate() {
        let h = obs("sz", pauli::z());
        assert!(matches!(
            solve_multipliers_symmetric(&bloch(1.0, 0.0, 0.0), &sx_only(1.0), &h),
            Err(Error::SingularConstraintGeometry { .. })
        ));
    }

    #[test]
    fn ket_and_projector_expectations_agree() {
        let psi = [C64::new(0.6, 0.1), C64::new(-0.2, 0.7)];
        let rho = crate::state::projector_raw(&psi);
        let h = obs("h", &pauli::z() + &pauli::x().scale_real(0.3));
        let g = ConstraintGeometry::new(&xy_pair(), &h).unwrap();
        let a = g.solve_commutator(&psi[..]).unwrap();
        let b = g.solve_commutator(&rho).unwrap();
        for (l1, l2) in a.lambdas.iter().zip(&b.lambdas) {
            assert_abs_diff_eq!(l1, l2, epsilon = 1e-13);
        }
    }

    #[test]
    fn qualification_examples() {
        let sz = obs("sz", pauli::z());
        let rep = qualification_check(&xy_pair(), &sz, Some(MultiplierScheme::Commutator));
        assert!(rep.is_qualified());
        assert!(rep.even_parity);
        assert_eq!(rep.pair_commutators.len(), 1);

        let cs = ConstraintSet::new(vec![obs("sz", pauli::z())]).unwrap();
        let rep = qualification_check(&cs, &sz, Some(MultiplierScheme::Symmetric));
        assert_eq!(
            rep.issues,
            vec![QualificationIssue::CommutesWithHamiltonian { label: "sz".into() }]
        );

        let rep = qualification_check(&sx_only(0.0), &sz, Some(MultiplierScheme::Commutator));
        assert_eq!(rep.issues, vec![QualificationIssue::OddConstraintCount { n: 1 }]);
        assert!(rep.issues[0].to_string().contains("odd constraint count"));
    }

    #[test]
    fn qualification_flags_redundant_pair() {
        let sz = obs("sz", pauli::z());
        let cs = ConstraintSet::new(vec![obs("a", pauli::x()), obs("b", pauli::x().scale_real(2.0))]).unwrap();
        let rep = qualification_check(&cs, &sz, Some(MultiplierScheme::Symmetric));
        assert!(matches!(rep.issues[0], QualificationIssue::RedundantPair { .. }));
    }
}
