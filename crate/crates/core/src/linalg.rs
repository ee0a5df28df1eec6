//! Dense complex square matrices for small Hilbert dimensions.
//!
//! Everything downstream (states, constraint geometry, vector fields) is
//! built on [`CMatrix`] and plain `Vec<C64>` kets. Dimensions are small
//! (2 to 64), so storage is a flat row-major `Vec` and all products are the
//! naive triple loop.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative Frobenius tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Reciprocal condition number below which a linear system is rejected.
pub const SINGULAR_RCOND: f64 = 1e-10;

/// Jacobi eigensolver settings.
#[derive(Debug, Clone, Copy)]
pub struct JacobiConfig {
    pub max_sweeps: usize,
    /// Stop once the off-diagonal Frobenius norm falls below `tol * ‖a‖_F`.
    pub tol: f64,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            tol: 1e-14,
        }
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged input and non-finite entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::RaggedMatrix {
                    row: i,
                    len: row.len(),
                    dim,
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_vec(dim, data)
    }

    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    /// Real diagonal matrix.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// Outer product `|a⟩⟨b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.dim)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b * s)
                .collect(),
        }
    }

    /// Checked matrix product.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        same_dim(self, other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(self
            .rows()
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Frobenius norm of `a − a†` relative to `max(‖a‖_F, 1)`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.frobenius_norm().max(1.0);
        (self - &self.adjoint()).frobenius_norm() / scale
    }

    /// Rejects non-Hermitian input, naming the worst entry.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect <= tol {
            return Ok(());
        }
        let n = self.dim;
        let (mut row, mut col, mut worst) = (0, 0, -1.0);
        for i in 0..n {
            for j in i..n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                if d > worst {
                    (row, col, worst) = (i, j, d);
                }
            }
        }
        Err(Error::NotHermitian {
            defect,
            row,
            col,
        })
    }

    /// `(a + a†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

// Operator impls panic on dimension mismatch; the checked free functions
// below are the public entry points for untrusted shapes.
impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl Mul<C64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, s: C64) -> CMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, s: f64) -> CMatrix {
        self.scale_real(s)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// `ab − ba`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    same_dim(a, b)?;
    let mut out = a.mul_unchecked(b);
    out -= &b.mul_unchecked(a);
    Ok(out)
}

/// `ab + ba`.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    same_dim(a, b)?;
    let mut out = a.mul_unchecked(b);
    out += &b.mul_unchecked(a);
    Ok(out)
}

/// `tr(ab)` as `Σ_ij a_ij b_ji`, without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Result<C64> {
    same_dim(a, b)?;
    Ok(trace_product_unchecked(a, b))
}

#[inline]
pub(crate) fn trace_product_unchecked(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.dim;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.data[i * n + j] * b.data[j * n + i];
        }
    }
    acc
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector for `eigenvalues[k]`.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for (k, &fk) in fl.iter().enumerate() {
                    acc += v[(i, k)] * v[(j, k)].conj() * fk;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| l)
    }
}

/// Hermitian eigensolver with default settings.
pub fn hermitian_eig(a: &CMatrix) -> Result<SpectralDecomposition> {
    hermitian_eig_with(a, JacobiConfig::default())
}

/// Cyclic complex Jacobi.
///
/// Each rotation first removes the phase of `a_pq` with a diagonal unitary,
/// then applies the real symmetric Jacobi rotation to the `(p, q)` block.
/// Eigenvalues come out ascending; each eigenvector is phased so its first
/// non-negligible component is real and nonnegative.
pub fn hermitian_eig_with(a: &CMatrix, cfg: JacobiConfig) -> Result<SpectralDecomposition> {
    a.check_hermitian(HERMITIAN_TOL)?;
    let n = a.dim();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let threshold = cfg.tol * a.frobenius_norm();

    let off_norm = |m: &CMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&m) > threshold {
        if sweeps == cfg.max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r == 0.0 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / r; // e^{iφ}
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]].
                let u_qp = -phase.conj() * s;
                let u_qq = phase.conj() * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c + mkq * u_qp;
                    m[(k, q)] = mkp * s + mkq * u_qq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c + mqk * u_qp.conj();
                    m[(q, k)] = mpk * s + mqk * u_qq.conj();
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * u_qp;
                    v[(k, q)] = vkp * s + vkq * u_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vecs = CMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|i| v[(i, src)])
            .find(|z| z.norm() > 1e-8)
            .unwrap_or(C64::new(1.0, 0.0));
        let fix = lead.conj() / lead.norm();
        for i in 0..n {
            vecs[(i, dst)] = v[(i, src)] * fix;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors: vecs,
    })
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
    rcond: f64,
}

impl Lu {
    pub fn factor(a: &CMatrix) -> Result<Self> {
        let n = a.dim();
        let anorm = a.norm_one();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return Err(Error::SingularSystem { rcond: 0.0 });
            }
            if piv != k {
                perm.swap(k, piv);
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        let mut out = Self {
            lu,
            perm,
            rcond: 0.0,
        };
        // Systems here are tiny (N ≤ a handful), so the 1-norm of the inverse
        // is computed exactly column by column rather than estimated.
        let mut inv_norm: f64 = 0.0;
        for j in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[j] = C64::new(1.0, 0.0);
            let col = out.solve_unchecked(&e);
            inv_norm = inv_norm.max(col.iter().map(|z| z.norm()).sum());
        }
        out.rcond = if anorm == 0.0 || !inv_norm.is_finite() {
            0.0
        } else {
            1.0 / (anorm * inv_norm)
        };
        Ok(out)
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    fn solve_unchecked(&self, rhs: &[C64]) -> Vec<C64> {
        let n = self.lu.dim();
        let mut x: Vec<C64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        if rhs.len() != self.lu.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.lu.dim(),
                found: rhs.len(),
            });
        }
        Ok(self.solve_unchecked(rhs))
    }
}

/// Solves `m x = rhs`, returning the solution and the reciprocal 1-norm
/// condition number. Fails with [`Error::SingularSystem`] below `threshold`.
pub fn solve_linear_with(m: &CMatrix, rhs: &[C64], threshold: f64) -> Result<(Vec<C64>, f64)> {
    let lu = Lu::factor(m)?;
    if lu.rcond < threshold {
        return Err(Error::SingularSystem { rcond: lu.rcond });
    }
    let x = lu.solve(rhs)?;
    Ok((x, lu.rcond))
}

pub fn solve_linear(m: &CMatrix, rhs: &[C64]) -> Result<(Vec<C64>, f64)> {
    solve_linear_with(m, rhs, SINGULAR_RCOND)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() < tol
    }

    #[test]
    fn pauli_commutators() {
        let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
        let i2 = c(0.0, 2.0);
        assert!(close(&commutator(&x, &y).unwrap(), &z.scale(i2), 1e-15));
        assert!(close(&commutator(&z, &x).unwrap(), &y.scale(i2), 1e-15));
        assert_eq!(commutator(&x, &x).unwrap().frobenius_norm(), 0.0);
    }

    #[test]
    fn pauli_anticommutators() {
        let (x, y) = (pauli::x(), pauli::y());
        let id = CMatrix::identity(2);
        assert!(close(&anticommutator(&x, &x).unwrap(), &id.scale_real(2.0), 1e-15));
        assert_eq!(anticommutator(&x, &y).unwrap().frobenius_norm(), 0.0);
        assert!(close(&anticommutator(&id, &y).unwrap(), &y.scale_real(2.0), 1e-15));
    }

    #[test]
    fn trace_products() {
        let half = CMatrix::identity(2).scale_real(0.5);
        let z = pauli::z();
        assert_eq!(trace_product(&half, &z).unwrap(), c(0.0, 0.0));
        assert_eq!(trace_product(&CMatrix::diag(&[1.0, 0.0]), &z).unwrap(), c(1.0, 0.0));
        assert_eq!(trace_product(&pauli::x(), &pauli::x()).unwrap(), c(2.0, 0.0));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = CMatrix::identity(2);
        let b = CMatrix::identity(3);
        assert!(matches!(commutator(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(anticommutator(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(trace_product(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn construction_validates_shape_and_finiteness() {
        assert!(matches!(
            CMatrix::from_rows(&[vec![c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]]),
            Err(Error::RaggedMatrix { row: 0, .. })
        ));
        assert!(matches!(
            CMatrix::from_rows(&[vec![c(1.0, 0.0), c(f64::NAN, 0.0)], vec![c(0.0, 0.0); 2]]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn eig_of_sigma_z_and_identity() {
        let d = hermitian_eig(&pauli::z()).unwrap();
        assert_eq!(d.eigenvalues, vec![-1.0, 1.0]);
        let d = hermitian_eig(&CMatrix::identity(2)).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0]);
        let vhv = &d.eigenvectors.adjoint() * &d.eigenvectors;
        assert!(close(&vhv, &CMatrix::identity(2), 1e-15));
    }

    #[test]
    fn eig_of_tilted_qubit_state() {
        // (I + 0.6 σx)/2: characteristic polynomial (0.5 − λ)² − 0.09 = 0.
        let a = &CMatrix::identity(2).scale_real(0.5) + &pauli::x().scale_real(0.3);
        let d = hermitian_eig(&a).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eigenvalues[1], 0.8, epsilon = 1e-15);
        assert!(close(&d.reconstruct(), &a, 1e-15));
    }

    #[test]
    fn eigenvectors_have_canonical_phase() {
        let a = &pauli::y() + &pauli::z().scale_real(0.3);
        let d = hermitian_eig(&a).unwrap();
        for k in 0..2 {
            let v = d.eigenvector(k);
            let lead = v.iter().find(|z| z.norm() > 1e-8).unwrap();
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = pauli::x();
        a[(0, 1)] = c(2.0, 0.0);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { row: 0, col: 1, .. })));
    }

    #[test]
    fn eig_reports_exhausted_budget() {
        let a = &pauli::x() + &pauli::y().scale_real(0.5);
        let cfg = JacobiConfig {
            max_sweeps: 0,
            tol: 1e-14,
        };
        assert!(matches!(hermitian_eig_with(&a, cfg), Err(Error::NoConvergence { sweeps: 0 })));
    }

    #[test]
    fn solve_identity_returns_rhs() {
        let rhs = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0)];
        let (x, rcond) = solve_linear(&CMatrix::identity(3), &rhs).unwrap();
        assert_eq!(x, rhs);
        assert_abs_diff_eq!(rcond, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn solve_antisymmetric_pair() {
        // [[0, 2i], [−2i, 0]] x = (0.6i, −i): row 1 gives 2i·x₂ = 0.6i, row 2 gives −2i·x₁ = −i.
        let m = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(0.0, 2.0)], vec![c(0.0, -2.0), c(0.0, 0.0)]])
            .unwrap();
        let (x, _) = solve_linear(&m, &[c(0.0, 0.6), c(0.0, -1.0)]).unwrap();
        assert_abs_diff_eq!(x[0].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1].re, 0.3, epsilon = 1e-15);

        // The transposed w-matrix for Bloch z = 0.2 with rhs (2i·0.3, −2i·0.5).
        let z = 0.2;
        let wt = CMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(0.0, -2.0 * z)],
            vec![c(0.0, 2.0 * z), c(0.0, 0.0)],
        ])
        .unwrap();
        let (x, _) = solve_linear(&wt, &[c(0.0, 0.6), c(0.0, -1.0)]).unwrap();
        assert_abs_diff_eq!(x[0].re, -2.5, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1].re, -1.5, epsilon = 1e-14);
    }

    #[test]
    fn solve_zero_matrix_is_singular() {
        let r = solve_linear(&CMatrix::zeros(2), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(r, Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn solve_near_singular_reports_rcond() {
        let m = CMatrix::diag(&[1.0, 1e-12]);
        match solve_linear(&m, &[c(1.0, 0.0), c(1.0, 0.0)]) {
            Err(Error::SingularSystem { rcond }) => assert_abs_diff_eq!(rcond, 1e-12, epsilon = 1e-20),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn kron_of_paulis() {
        let zx = pauli::z().kron(&pauli::x());
        assert_eq!(zx.dim(), 4);
        assert_eq!(zx[(0, 1)], c(1.0, 0.0));
        assert_eq!(zx[(2, 3)], c(-1.0, 0.0));
        assert_eq!(zx[(0, 2)], c(0.0, 0.0));
    }
}
