//! Vector fields for the constrained and unconstrained dynamics, and the
//! RK4 integrators that advance them.
//!
//! Orientation is `dρ/dt = i[ρ, H]` with ħ = 1. The constrained fields are
//! autonomous in the state: multipliers are re-solved at every RK4 stage.

use num_complex::Complex64 as C64;

use crate::constraints::{ConstraintGeometry, ConstraintSet, Expectation, MultiplierScheme, MultiplierSolution};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::{self, Observable};

/// Smallest substep the step-doubling integrator will try.
pub const MIN_SUBSTEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowKind {
    /// `i[ρ, H]`.
    Unitary,
    /// `i[ρ, H] − i Σ λ_k [ρ, Φ^k]` with w-based multipliers.
    CommutatorConstrained,
    /// `i[ρ, H] − Σ λ_k ({ρ, Φ^k} − 2⟨Φ^k⟩ρ)` with m-based multipliers.
    SymmetricConstrained,
    /// `−i(H − ⟨H⟩)ψ`.
    PureProjective,
    /// `−i(H − ⟨H⟩)ψ + i Σ λ_k (Φ^k − ⟨Φ^k⟩)ψ`, w-based multipliers.
    PureConstrainedCommutator,
    /// `−i(H − ⟨H⟩)ψ − Σ λ_k (Φ^k − ⟨Φ^k⟩)ψ`, m-based multipliers.
    PureConstrainedSymmetric,
}

impl FlowKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Unitary => "unitary",
            Self::CommutatorConstrained => "commutator",
            Self::SymmetricConstrained => "symmetric",
            Self::PureProjective => "pure_projective",
            Self::PureConstrainedCommutator => "pure_commutator",
            Self::PureConstrainedSymmetric => "pure_symmetric",
        }
    }

    pub fn is_pure(self) -> bool {
        matches!(
            self,
            Self::PureProjective | Self::PureConstrainedCommutator | Self::PureConstrainedSymmetric
        )
    }

    pub fn scheme(self) -> Option<MultiplierScheme> {
        match self {
            Self::Unitary | Self::PureProjective => None,
            Self::CommutatorConstrained | Self::PureConstrainedCommutator => Some(MultiplierScheme::Commutator),
            Self::SymmetricConstrained | Self::PureConstrainedSymmetric => Some(MultiplierScheme::Symmetric),
        }
    }

    /// The ket-level equation that reduces to this density-matrix flow.
    pub fn pure_counterpart(self) -> Self {
        match self {
            Self::Unitary | Self::PureProjective => Self::PureProjective,
            Self::CommutatorConstrained | Self::PureConstrainedCommutator => Self::PureConstrainedCommutator,
            Self::SymmetricConstrained | Self::PureConstrainedSymmetric => Self::PureConstrainedSymmetric,
        }
    }

    pub fn matrix_counterpart(self) -> Self {
        match self {
            Self::Unitary | Self::PureProjective => Self::Unitary,
            Self::CommutatorConstrained | Self::PureConstrainedCommutator => Self::CommutatorConstrained,
            Self::SymmetricConstrained | Self::PureConstrainedSymmetric => Self::SymmetricConstrained,
        }
    }
}

/// Which field to integrate, with its Hamiltonian and constraint family.
///
/// Unconstrained kinds ignore the constraints in their right-hand side, but
/// still report residuals against them.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub kind: FlowKind,
    pub hamiltonian: Observable,
    pub constraints: ConstraintSet,
}

impl FlowSpec {
    pub fn new(kind: FlowKind, hamiltonian: Observable, constraints: ConstraintSet) -> Result<Self> {
        if let Some(dim) = constraints.dim() {
            if dim != hamiltonian.dim() {
                return Err(Error::DimensionMismatch {
                    expected: hamiltonian.dim(),
                    found: dim,
                });
            }
        }
        if kind.scheme() == Some(MultiplierScheme::Commutator) && constraints.len() % 2 == 1 {
            return Err(Error::OddConstraintCount { n: constraints.len() });
        }
        Ok(Self {
            kind,
            hamiltonian,
            constraints,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn with_kind(&self, kind: FlowKind) -> Result<Self> {
        Self::new(kind, self.hamiltonian.clone(), self.constraints.clone())
    }

    pub fn with_constraints(&self, constraints: ConstraintSet) -> Result<Self> {
        Self::new(self.kind, self.hamiltonian.clone(), constraints)
    }
}

/// Integration state: a density matrix or a (possibly unnormalized) ket.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowState {
    Density(CMatrix),
    Ket(Vec<C64>),
}

impl FlowState {
    pub fn dim(&self) -> usize {
        match self {
            Self::Density(m) => m.dim(),
            Self::Ket(v) => v.len(),
        }
    }

    /// `self + s * other`; both must be the same variant.
    fn axpy(&self, s: f64, other: &Self) -> Self {
        match (self, other) {
            (Self::Density(a), Self::Density(b)) => Self::Density(a.axpy(s, b)),
            (Self::Ket(a), Self::Ket(b)) => Self::Ket(a.iter().zip(b).map(|(&x, &y)| x + y * s).collect()),
            _ => unreachable!("mixed state variants in one integration"),
        }
    }

    fn diff_norm(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Density(a), Self::Density(b)) => (a - b).frobenius_norm(),
            (Self::Ket(a), Self::Ket(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt(),
            _ => unreachable!("mixed state variants in one integration"),
        }
    }

    /// The density matrix this state represents (projector for kets).
    pub fn density(&self) -> CMatrix {
        match self {
            Self::Density(m) => m.clone(),
            Self::Ket(v) => state::projector_raw(v),
        }
    }

    /// `⟨A⟩` in this state.
    pub fn expect(&self, op: &CMatrix) -> C64 {
        match self {
            Self::Density(m) => m.expect(op),
            Self::Ket(v) => v.as_slice().expect(op),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepDiagnostics {
    pub lambdas: Vec<f64>,
    /// Reciprocal condition of the `w`/`m` solve; 1 for unconstrained flows.
    pub geometry_rcond: f64,
    /// Frobenius norm of the hygiene correction applied after the step.
    pub hygiene_correction: f64,
}

/// A [`FlowSpec`] with its state-independent commutators precomputed.
#[derive(Debug, Clone)]
pub struct Flow {
    spec: FlowSpec,
    geometry: ConstraintGeometry,
}

impl Flow {
    pub fn new(spec: FlowSpec) -> Result<Self> {
        let geometry = ConstraintGeometry::new(&spec.constraints, &spec.hamiltonian)?;
        Ok(Self { spec, geometry })
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn kind(&self) -> FlowKind {
        self.spec.kind
    }

    pub fn geometry(&self) -> &ConstraintGeometry {
        &self.geometry
    }

    fn check_state(&self, state: &FlowState) -> Result<()> {
        let ok = matches!(
            (self.spec.kind.is_pure(), state),
            (false, FlowState::Density(_)) | (true, FlowState::Ket(_))
        );
        if !ok {
            return Err(Error::StateKindMismatch {
                flow: self.spec.kind.name(),
            });
        }
        if state.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                found: state.dim(),
            });
        }
        Ok(())
    }

    /// Multipliers at `state`, or `None` for unconstrained kinds.
    pub fn multipliers(&self, state: &FlowState) -> Result<Option<MultiplierSolution>> {
        let Some(scheme) = self.spec.kind.scheme() else {
            return Ok(None);
        };
        let sol = match state {
            FlowState::Density(m) => self.geometry.solve(scheme, m)?,
            FlowState::Ket(v) => self.geometry.solve(scheme, v.as_slice())?,
        };
        Ok(Some(sol))
    }

    /// Evaluates the vector field.
    pub fn rhs(&self, state: &FlowState) -> Result<(FlowState, StepDiagnostics)> {
        self.check_state(state)?;
        let sol = self.multipliers(state)?;
        let (lambdas, rcond) = match sol {
            Some(s) => (s.lambdas, s.rcond),
            None => (Vec::new(), 1.0),
        };
        let h = self.spec.hamiltonian.matrix();
        let phis = self.geometry.phis();
        let i = C64::new(0.0, 1.0);
        let out = match (self.spec.kind, state) {
            (FlowKind::Unitary, FlowState::Density(rho)) => FlowState::Density(unitary_field(rho, h)),
            (FlowKind::CommutatorConstrained, FlowState::Density(rho)) => {
                let h_eff = effective_hamiltonian(h, phis, &lambdas);
                FlowState::Density(unitary_field(rho, &h_eff))
            }
            (FlowKind::SymmetricConstrained, FlowState::Density(rho)) => {
                let mut d = unitary_field(rho, h);
                for (phi, &lam) in phis.iter().zip(&lambdas) {
                    let mean = rho.expect(phi).re;
                    let mut term = linalg::anticommutator(rho, phi)?;
                    term -= &rho.scale_real(2.0 * mean);
                    d -= &term.scale_real(lam);
                }
                FlowState::Density(d)
            }
            (FlowKind::PureProjective, FlowState::Ket(psi)) => FlowState::Ket(centered_action(h, psi, -i)),
            (FlowKind::PureConstrainedCommutator, FlowState::Ket(psi)) => {
                let mut d = centered_action(h, psi, -i);
                for (phi, &lam) in phis.iter().zip(&lambdas) {
                    add_assign(&mut d, &centered_action(phi, psi, i * lam));
                }
                FlowState::Ket(d)
            }
            (FlowKind::PureConstrainedSymmetric, FlowState::Ket(psi)) => {
                let mut d = centered_action(h, psi, -i);
                for (phi, &lam) in phis.iter().zip(&lambdas) {
                    add_assign(&mut d, &centered_action(phi, psi, C64::new(-lam, 0.0)));
                }
                FlowState::Ket(d)
            }
            _ => unreachable!("checked by check_state"),
        };
        Ok((
            out,
            StepDiagnostics {
                lambdas,
                geometry_rcond: rcond,
                hygiene_correction: 0.0,
            },
        ))
    }
}

/// `i[ρ, H]`.
fn unitary_field(rho: &CMatrix, h: &CMatrix) -> CMatrix {
    let mut c = rho * h;
    c -= &(h * rho);
    c.scale(C64::new(0.0, 1.0))
}

/// `H − Σ λ_k Φ^k`.
fn effective_hamiltonian(h: &CMatrix, phis: &[CMatrix], lambdas: &[f64]) -> CMatrix {
    let mut out = h.clone();
    for (phi, &lam) in phis.iter().zip(lambdas) {
        out -= &phi.scale_real(lam);
    }
    out
}

/// `s (A − ⟨A⟩) ψ`.
fn centered_action(a: &CMatrix, psi: &[C64], s: C64) -> Vec<C64> {
    let mean = psi.expect(a).re;
    let a_psi = a.matvec(psi).expect("dimension checked");
    a_psi
        .iter()
        .zip(psi)
        .map(|(&ap, &p)| (ap - p * mean) * s)
        .collect()
}

fn add_assign(a: &mut [C64], b: &[C64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// `i[ρ, H]`.
pub fn rhs_unitary(rho: &CMatrix, h: &Observable) -> Result<CMatrix> {
    let c = linalg::commutator(rho, h.matrix())?;
    Ok(c.scale(C64::new(0.0, 1.0)))
}

fn rhs_density(rho: &CMatrix, spec: &FlowSpec, kind: FlowKind) -> Result<(CMatrix, StepDiagnostics)> {
    let flow = Flow::new(spec.with_kind(kind)?)?;
    match flow.rhs(&FlowState::Density(rho.clone()))? {
        (FlowState::Density(d), diag) => Ok((d, diag)),
        _ => unreachable!(),
    }
}

fn rhs_ket(psi: &[C64], spec: &FlowSpec, kind: FlowKind) -> Result<(Vec<C64>, StepDiagnostics)> {
    let flow = Flow::new(spec.with_kind(kind)?)?;
    match flow.rhs(&FlowState::Ket(psi.to_vec()))? {
        (FlowState::Ket(d), diag) => Ok((d, diag)),
        _ => unreachable!(),
    }
}

/// Commutator-constrained field `i[ρ, H] − i Σ_k λ_k [ρ, Φ^k]`.
pub fn rhs_commutator_constrained(rho: &CMatrix, spec: &FlowSpec) -> Result<(CMatrix, StepDiagnostics)> {
    rhs_density(rho, spec, FlowKind::CommutatorConstrained)
}

/// Symmetric-constrained field `i[ρ, H] − Σ_k λ_k ({ρ, Φ^k} − 2 tr(ρΦ^k) ρ)`.
pub fn rhs_symmetric_constrained(rho: &CMatrix, spec: &FlowSpec) -> Result<(CMatrix, StepDiagnostics)> {
    rhs_density(rho, spec, FlowKind::SymmetricConstrained)
}

/// Projective Schrödinger field `−i(H − ⟨H⟩)ψ`.
pub fn rhs_pure_projective(psi: &[C64], h: &Observable) -> Result<Vec<C64>> {
    if psi.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi.len(),
        });
    }
    Ok(centered_action(h.matrix(), psi, C64::new(0.0, -1.0)))
}

/// Constrained ket field; `spec.kind` selects the commutator or symmetric
/// variant (either the matrix or the pure kind is accepted).
pub fn rhs_pure_constrained(psi: &[C64], spec: &FlowSpec) -> Result<(Vec<C64>, StepDiagnostics)> {
    rhs_ket(psi, spec, spec.kind.pure_counterpart())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    /// RK4 with step-doubling error control inside each `dt` interval.
    Rk4StepDoubling,
}

/// Post-step corrections. Rehermitization defaults on, trace renormalization off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hygiene {
    pub rehermitize: bool,
    pub renormalize_trace: bool,
}

impl Default for Hygiene {
    fn default() -> Self {
        Self {
            rehermitize: true,
            renormalize_trace: false,
        }
    }
}

impl Hygiene {
    pub fn off() -> Self {
        Self {
            rehermitize: false,
            renormalize_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Output interval; also the fixed RK4 step.
    pub dt: f64,
    /// Rounded to a whole number of `dt` steps.
    pub t_final: f64,
    pub record_stride: usize,
    /// Local error bound per substep for [`Method::Rk4StepDoubling`].
    pub adapt_tol: f64,
    pub hygiene: Hygiene,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_final: f64) -> Self {
        Self {
            method: Method::Rk4Fixed,
            dt,
            t_final,
            record_stride: 1,
            adapt_tol: 1e-10,
            hygiene: Hygiene::default(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_hygiene(mut self, hygiene: Hygiene) -> Self {
        self.hygiene = hygiene;
        self
    }

    pub fn with_method(mut self, method: Method, adapt_tol: f64) -> Self {
        self.method = method;
        self.adapt_tol = adapt_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_final.is_finite() && self.dt <= self.t_final * (1.0 + 1e-12)) {
            return bad("dt must not exceed t_final");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive");
        }
        if self.adapt_tol.is_nan() || self.adapt_tol <= 0.0 {
            return bad("adapt_tol must be positive");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

fn rk4_step(flow: &Flow, y: &FlowState, h: f64) -> Result<(FlowState, StepDiagnostics)> {
    let (k1, diag) = flow.rhs(y)?;
    let (k2, _) = flow.rhs(&y.axpy(0.5 * h, &k1))?;
    let (k3, _) = flow.rhs(&y.axpy(0.5 * h, &k2))?;
    let (k4, _) = flow.rhs(&y.axpy(h, &k3))?;
    let next = y
        .axpy(h / 6.0, &k1)
        .axpy(h / 3.0, &k2)
        .axpy(h / 3.0, &k3)
        .axpy(h / 6.0, &k4);
    Ok((next, diag))
}

/// Covers one `dt` interval with RK4 substeps, halving on rejection. The
/// error estimate compares one full substep with two half substeps
/// (Richardson factor 15 for a fourth-order method). Returns the substep
/// to start the next interval with.
fn step_doubling(
    flow: &Flow,
    y: &FlowState,
    dt: f64,
    tol: f64,
    first_substep: f64,
) -> Result<(FlowState, StepDiagnostics, f64)> {
    let mut t = 0.0;
    let mut h = first_substep.min(dt);
    let mut cur = y.clone();
    let mut first_diag = None;
    while dt - t > 1e-14 * dt {
        h = h.min(dt - t);
        let (full, diag) = rk4_step(flow, &cur, h)?;
        let (half, _) = rk4_step(flow, &cur, 0.5 * h)?;
        let (two_half, _) = rk4_step(flow, &half, 0.5 * h)?;
        let err = two_half.diff_norm(&full) / 15.0;
        if err <= tol {
            first_diag.get_or_insert(diag);
            cur = two_half;
            t += h;
            if err < tol / 32.0 {
                h *= 2.0;
            }
        } else {
            h *= 0.5;
            if h < MIN_SUBSTEP {
                return Err(Error::StepSizeUnderflow { t });
            }
        }
    }
    Ok((cur, first_diag.unwrap_or_default(), h.min(dt)))
}

fn apply_hygiene(state: FlowState, hygiene: Hygiene) -> (FlowState, f64) {
    match state {
        FlowState::Density(mut m) => {
            let mut correction = 0.0;
            if hygiene.rehermitize {
                let h = m.hermitian_part();
                correction += (&h - &m).frobenius_norm();
                m = h;
            }
            if hygiene.renormalize_trace {
                let tr = m.trace().re;
                let n = m.scale_real(1.0 / tr);
                correction += (&n - &m).frobenius_norm();
                m = n;
            }
            (FlowState::Density(m), correction)
        }
        FlowState::Ket(mut v) => {
            let mut correction = 0.0;
            if hygiene.renormalize_trace {
                let norm = linalg::vec_norm(&v);
                correction = (norm - 1.0).abs();
                for z in v.iter_mut() {
                    *z /= norm;
                }
            }
            (FlowState::Ket(v), correction)
        }
    }
}

/// Advances `state` by one `config.dt` interval, then applies hygiene.
pub fn step(flow: &Flow, state: &FlowState, config: &IntegratorConfig) -> Result<(FlowState, StepDiagnostics)> {
    Stepper::new(config).advance(flow, state)
}

/// Stateful wrapper carrying the adaptive substep between intervals.
#[derive(Debug, Clone)]
struct Stepper {
    config: IntegratorConfig,
    substep: f64,
}

impl Stepper {
    fn new(config: &IntegratorConfig) -> Self {
        Self {
            config: *config,
            substep: config.dt,
        }
    }

    fn advance(&mut self, flow: &Flow, state: &FlowState) -> Result<(FlowState, StepDiagnostics)> {
        let (next, mut diag) = match self.config.method {
            Method::Rk4Fixed => rk4_step(flow, state, self.config.dt)?,
            Method::Rk4StepDoubling => {
                let (next, diag, h) =
                    step_doubling(flow, state, self.config.dt, self.config.adapt_tol, self.substep)?;
                self.substep = (2.0 * h).min(self.config.dt);
                (next, diag)
            }
        };
        let (next, correction) = apply_hygiene(next, self.config.hygiene);
        diag.hygiene_correction = correction;
        Ok((next, diag))
    }
}

/// Which monitor channels [`evolve`] records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monitors {
    pub entropy: bool,
    pub purity: bool,
    pub eigenvalues: bool,
    pub residuals: bool,
    pub lambdas: bool,
    pub hygiene: bool,
    /// Entropy production formula plus its finite-difference counterpart.
    pub entropy_rate: bool,
    /// Bloch coordinates, dimension 2 only.
    pub bloch: bool,
    /// Keep density-matrix snapshots.
    pub states: bool,
}

impl Default for Monitors {
    fn default() -> Self {
        Self {
            entropy: true,
            purity: true,
            eigenvalues: true,
            residuals: true,
            lambdas: true,
            hygiene: true,
            entropy_rate: true,
            bloch: true,
            states: true,
        }
    }
}

impl Monitors {
    pub fn none() -> Self {
        Self {
            entropy: false,
            purity: false,
            eigenvalues: false,
            residuals: false,
            lambdas: false,
            hygiene: false,
            entropy_rate: false,
            bloch: false,
            states: false,
        }
    }
}

pub mod channel {
    pub const ENTROPY: &str = "entropy";
    pub const PURITY: &str = "purity";
    pub const HYGIENE: &str = "hygiene_correction";
    pub const DS_DT_FORMULA: &str = "ds_dt_formula";
    pub const DS_DT_FD: &str = "ds_dt_fd";
    pub const BLOCH_X: &str = "bloch_x";
    pub const BLOCH_Y: &str = "bloch_y";
    pub const BLOCH_Z: &str = "bloch_z";

    pub fn eig(i: usize) -> String {
        format!("eig_{}", i + 1)
    }

    pub fn residual(k: usize) -> String {
        format!("residual_{}", k + 1)
    }

    pub fn lambda(k: usize) -> String {
        format!("lambda_{}", k + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub name: String,
    pub values: Vec<f64>,
}

/// Recorded time series. Every channel has one value per entry of `times`;
/// unavailable values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub kind: FlowKind,
    pub times: Vec<f64>,
    /// Density-matrix snapshots (projectors for ket flows), if monitored.
    pub states: Vec<CMatrix>,
    pub channels: Vec<Channel>,
    /// State at the last recorded time.
    pub last: FlowState,
}

impl TrajectoryRecord {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    fn push(&mut self, name: &str, v: f64) {
        match self.channels.iter_mut().find(|c| c.name == name) {
            Some(c) => c.values.push(v),
            None => self.channels.push(Channel {
                name: name.to_string(),
                values: vec![v],
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Bloch vectors of the snapshots (dimension 2).
    pub fn bloch_path(&self) -> Option<Vec<[f64; 3]>> {
        let (x, y, z) = (
            self.channel(channel::BLOCH_X)?,
            self.channel(channel::BLOCH_Y)?,
            self.channel(channel::BLOCH_Z)?,
        );
        Some((0..x.len()).map(|i| [x[i], y[i], z[i]]).collect())
    }
}

/// Integration failure with the partial record up to the last good step.
#[derive(Debug, Clone)]
pub struct EvolveError {
    pub t: f64,
    pub error: Error,
    pub partial: Box<TrajectoryRecord>,
}

impl std::fmt::Display for EvolveError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "integration failed at t = {}: {}", self.t, self.error)
    }
}

impl std::error::Error for EvolveError {}

impl From<EvolveError> for Error {
    fn from(e: EvolveError) -> Self {
        Error::Integration {
            t: e.t,
            source: Box::new(e.error),
        }
    }
}

/// Eigenvalues at or below this are treated as rank-deficient for `ln ρ`.
pub const LOG_EIGEN_FLOOR: f64 = 1e-12;

/// `dS/dt = 2 Σ_k λ_k cov(Φ^k, ln ρ)` for the symmetric flow; `None` when
/// ρ is too close to rank-deficient for `ln ρ`.
pub fn entropy_rate_formula(rho: &CMatrix, phis: &[CMatrix], lambdas: &[f64]) -> Result<Option<f64>> {
    let spec = linalg::hermitian_eig(&rho.hermitian_part())?;
    if spec.eigenvalues[0] <= LOG_EIGEN_FLOOR {
        return Ok(None);
    }
    let log_rho = spec.map(f64::ln);
    let mut rate = 0.0;
    for (phi, &lam) in phis.iter().zip(lambdas) {
        rate += 2.0 * lam * state::covariance_raw(rho, phi, &log_rho)?;
    }
    Ok(Some(rate))
}

/// Centered differences of `values` over `times`; NaN at the endpoints and
/// wherever a neighbour is NaN.
pub fn centered_difference(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 >= n {
                f64::NAN
            } else {
                (values[i + 1] - values[i - 1]) / (times[i + 1] - times[i - 1])
            }
        })
        .collect()
}

struct Recorder<'a> {
    flow: &'a Flow,
    monitors: Monitors,
    record: TrajectoryRecord,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, state: &FlowState, hygiene: f64) -> Result<()> {
        let m = self.monitors;
        let rho = state.density();
        let flow = self.flow;
        let rec = &mut self.record;
        rec.times.push(t);
        if m.purity {
            rec.push(channel::PURITY, state::purity_raw(&rho));
        }
        if m.entropy || m.eigenvalues {
            let eig = linalg::hermitian_eig(&rho.hermitian_part())?.eigenvalues;
            if m.entropy {
                let s = state::entropy_of_spectrum(&eig).unwrap_or(f64::NAN);
                rec.push(channel::ENTROPY, s);
            }
            if m.eigenvalues {
                for (i, &l) in eig.iter().enumerate() {
                    rec.push(&channel::eig(i), l);
                }
            }
        }
        if m.residuals {
            let cs = &flow.spec.constraints;
            for (k, (o, c)) in cs.observables().iter().zip(cs.targets()).enumerate() {
                rec.push(&channel::residual(k), state.expect(o.matrix()).re - c);
            }
        }
        let lambdas = if m.lambdas || m.entropy_rate {
            match flow.multipliers(state)? {
                Some(sol) => sol.lambdas,
                None => vec![0.0; flow.spec.constraints.len()],
            }
        } else {
            Vec::new()
        };
        if m.lambdas {
            for (k, &l) in lambdas.iter().enumerate() {
                rec.push(&channel::lambda(k), l);
            }
        }
        if m.hygiene {
            rec.push(channel::HYGIENE, hygiene);
        }
        if m.entropy_rate {
            let rate = match flow.kind() {
                FlowKind::SymmetricConstrained => entropy_rate_formula(&rho, flow.geometry.phis(), &lambdas)?
                    .unwrap_or(f64::NAN),
                // Isospectral or pure: the entropy is constant.
                _ => 0.0,
            };
            rec.push(channel::DS_DT_FORMULA, rate);
        }
        if m.bloch && rho.dim() == 2 {
            let b = state::bloch_encode_raw(&rho)?;
            rec.push(channel::BLOCH_X, b.x);
            rec.push(channel::BLOCH_Y, b.y);
            rec.push(channel::BLOCH_Z, b.z);
        }
        if m.states {
            rec.states.push(rho);
        }
        rec.last = state.clone();
        Ok(())
    }

    fn finish(mut self) -> TrajectoryRecord {
        if self.monitors.entropy_rate && self.monitors.entropy {
            let fd = centered_difference(
                &self.record.times,
                self.record.channel(channel::ENTROPY).unwrap_or(&[]),
            );
            self.record.channels.push(Channel {
                name: channel::DS_DT_FD.to_string(),
                values: fd,
            });
        }
        self.record
    }
}

/// Integrates from `initial` over `[0, n_steps·dt]`, recording every
/// `record_stride` steps and at the final step. Deterministic: identical
/// inputs give bit-identical records.
pub fn evolve(
    initial: &FlowState,
    flow: &Flow,
    config: &IntegratorConfig,
    monitors: &Monitors,
) -> std::result::Result<TrajectoryRecord, EvolveError> {
    let mut rec = Recorder {
        flow,
        monitors: *monitors,
        record: TrajectoryRecord {
            kind: flow.kind(),
            times: Vec::new(),
            states: Vec::new(),
            channels: Vec::new(),
            last: initial.clone(),
        },
    };
    let fail = |rec: Recorder, t: f64, error: Error| EvolveError {
        t,
        error,
        partial: Box::new(rec.finish()),
    };
    if let Err(e) = config.validate().and_then(|_| flow.check_state(initial)) {
        return Err(fail(rec, 0.0, e));
    }
    if let Err(e) = rec.record(0.0, initial, 0.0) {
        return Err(fail(rec, 0.0, e));
    }
    let n = config.n_steps();
    let mut stepper = Stepper::new(config);
    let mut state = initial.clone();
    let mut hygiene_max: f64 = 0.0;
    for i in 1..=n {
        let t_prev = (i - 1) as f64 * config.dt;
        let t = i as f64 * config.dt;
        match stepper.advance(flow, &state) {
            Ok((next, diag)) => {
                state = next;
                hygiene_max = hygiene_max.max(diag.hygiene_correction);
            }
            Err(e) => {
                let t_fail = match e {
                    Error::StepSizeUnderflow { t: dt_in } => t_prev + dt_in,
                    _ => t_prev,
                };
                return Err(fail(rec, t_fail, e));
            }
        }
        if i % config.record_stride == 0 || i == n {
            if let Err(e) = rec.record(t, &state, hygiene_max) {
                return Err(fail(rec, t, e));
            }
            hygiene_max = 0.0;
        }
    }
    Ok(rec.finish())
}
