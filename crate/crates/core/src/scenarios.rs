//! Built-in scenarios, trajectory fan-out, and the diagnostics that check
//! recorded trajectories against independent references.

use num_complex::Complex64 as C64;

use crate::constraints::{qualification_check, ConstraintSet, QualificationReport};
use crate::error::{Error, Result};
use crate::flow::{
    self, channel, evolve, EvolveError, Flow, FlowKind, FlowSpec, FlowState, IntegratorConfig, Monitors,
    TrajectoryRecord,
};
use crate::linalg::{self, CMatrix};
use crate::parallel::{self, Execution};
use crate::pauli;
use crate::random;
use crate::state::{self, BlochVector, DensityMatrix, Mixture, Observable, StateVector};

/// One initial condition, in whichever form it was specified.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Density(DensityMatrix),
    Mixture(Mixture),
    Ket(StateVector),
    Bloch(BlochVector),
}

impl InitialState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            Self::Density(d) => d.clone(),
            Self::Mixture(m) => state::from_mixture(m),
            Self::Ket(k) => state::projector_from_ket(k),
            Self::Bloch(b) => state::bloch_decode(b),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Density(d) => d.dim(),
            Self::Mixture(m) => m.dim(),
            Self::Ket(k) => k.dim(),
            Self::Bloch(_) => 2,
        }
    }

    /// Integration state for `kind`. Ket flows accept kets directly and
    /// rank-one density matrices through their dominant eigenvector.
    pub fn flow_state(&self, kind: FlowKind) -> Result<FlowState> {
        if !kind.is_pure() {
            return Ok(FlowState::Density(self.density().into_matrix()));
        }
        if let Self::Ket(k) = self {
            return Ok(FlowState::Ket(k.amplitudes().to_vec()));
        }
        let rho = self.density();
        let spec = rho.spectrum()?;
        let top = *spec.eigenvalues.last().expect("nonempty spectrum");
        if top < 1.0 - 1e-10 {
            return Err(Error::NotPure {
                purity: state::purity(&rho),
            });
        }
        Ok(FlowState::Ket(spec.eigenvector(rho.dim() - 1)))
    }
}

/// A complete, runnable simulation setup. Constraint targets are never
/// stored here: each trajectory captures them from its own initial state.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub hamiltonian: Observable,
    pub constraints: Vec<Observable>,
    pub kind: FlowKind,
    pub initial_states: Vec<InitialState>,
    pub integrator: IntegratorConfig,
    pub monitors: Monitors,
    pub seed: u64,
}

pub type Outcome = std::result::Result<TrajectoryRecord, EvolveError>;

impl Scenario {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn constraint_set(&self) -> Result<ConstraintSet> {
        ConstraintSet::new(self.constraints.clone())
    }

    pub fn qualification(&self) -> Result<QualificationReport> {
        Ok(qualification_check(&self.constraint_set()?, &self.hamiltonian, self.kind.scheme()))
    }

    /// Flow with targets captured from `initial`.
    pub fn flow_for(&self, initial: &InitialState) -> Result<Flow> {
        let rho = initial.density();
        let cs = self.constraint_set()?.capture_targets(&rho)?;
        Flow::new(FlowSpec::new(self.kind, self.hamiltonian.clone(), cs)?)
    }

    /// Checks dimensions, state validity and the integrator config.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        self.integrator.validate()?;
        FlowSpec::new(self.kind, self.hamiltonian.clone(), self.constraint_set()?)?;
        for s in &self.initial_states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
            s.density().validate()?;
            s.flow_state(self.kind)?;
        }
        Ok(())
    }

    pub fn run_one(&self, index: usize) -> Outcome {
        let initial = &self.initial_states[index];
        let prepared = self
            .flow_for(initial)
            .and_then(|flow| Ok((initial.flow_state(self.kind)?, flow)));
        match prepared {
            Ok((y0, flow)) => evolve(&y0, &flow, &self.integrator, &self.monitors),
            Err(error) => Err(EvolveError {
                t: 0.0,
                error,
                partial: Box::new(TrajectoryRecord {
                    kind: self.kind,
                    times: Vec::new(),
                    states: Vec::new(),
                    channels: Vec::new(),
                    last: FlowState::Density(initial.density().into_matrix()),
                }),
            }),
        }
    }

    /// Runs every initial state; results are ordered by initial-state index.
    pub fn run(&self, execution: Execution) -> Vec<Outcome> {
        parallel::map_indexed(&self.initial_states, execution, |i, _| self.run_one(i))
    }
}

fn obs(label: &str, m: CMatrix) -> Observable {
    Observable::new(label, m).expect("built-in operators are Hermitian")
}

/// Lattice points of the `(y, z)` disc of radius `√(1 − x0²)`: cell centres
/// of a `grid × grid` square covering the disc, kept if strictly inside.
pub fn figure1_lattice(x0: f64, grid: usize) -> Vec<BlochVector> {
    let r = (1.0 - x0 * x0).sqrt();
    let cell = 2.0 * r / grid as f64;
    let mut out = Vec::new();
    for iz in (0..grid).rev() {
        let z = -r + (iz as f64 + 0.5) * cell;
        for iy in 0..grid {
            let y = -r + (iy as f64 + 0.5) * cell;
            if y * y + z * z < r * r {
                out.push(BlochVector { x: x0, y, z });
            }
        }
    }
    out
}

/// The two pure equator states on the slice: `(x0, +r, 0)` then `(x0, −r, 0)`.
pub fn figure1_equator(x0: f64) -> [BlochVector; 2] {
    let r = (1.0 - x0 * x0).sqrt();
    [BlochVector { x: x0, y: r, z: 0.0 }, BlochVector { x: x0, y: -r, z: 0.0 }]
}

/// Spin-½ with `H = σz`, single constraint `σx`, symmetric flow. Initial
/// states are the slice lattice followed by the two equator points.
pub fn builtin_figure1(x0: f64, grid: usize) -> Result<Scenario> {
    if !(x0 > -1.0 && x0 < 1.0) {
        return Err(Error::InvalidConfig(format!("x0 = {x0} outside (-1, 1)")));
    }
    if grid == 0 {
        return Err(Error::InvalidConfig("grid must be positive".into()));
    }
    let mut initial_states: Vec<InitialState> =
        figure1_lattice(x0, grid).into_iter().map(InitialState::Bloch).collect();
    initial_states.extend(figure1_equator(x0).map(InitialState::Bloch));
    Ok(Scenario {
        name: "figure1".into(),
        hamiltonian: obs("sigma_z", pauli::z()),
        constraints: vec![obs("sigma_x", pauli::x())],
        kind: FlowKind::SymmetricConstrained,
        initial_states,
        integrator: IntegratorConfig::rk4(1e-3, 50.0).with_stride(100),
        monitors: Monitors::default(),
        seed: 0,
    })
}

/// Two-qubit Hamiltonian `σz⊗I + ½ σx⊗σx`.
pub fn even_pair_hamiltonian() -> Observable {
    let mut h = pauli::z().kron(&pauli::id());
    h += &pauli::x().kron(&pauli::x()).scale_real(0.5);
    obs("sz1+0.5sxsx", h)
}

/// Constraints `(σx⊗I, σy⊗I)`.
pub fn even_pair_constraints() -> Vec<Observable> {
    vec![
        obs("sx1", pauli::x().kron(&pauli::id())),
        obs("sy1", pauli::y().kron(&pauli::id())),
    ]
}

/// Seeded random full-rank two-qubit state with `|⟨σz⊗I⟩| > 0.2`.
pub fn even_pair_initial_state(seed: u64) -> DensityMatrix {
    let mut rng = random::rng(seed);
    let sz1 = pauli::z().kron(&pauli::id());
    loop {
        let rho = random::density_matrix(4, &mut rng);
        let mz = linalg::trace_product(&rho, &sz1).expect("4x4").re;
        if mz.abs() > 0.2 {
            return DensityMatrix::new_unchecked(rho);
        }
    }
}

pub const EVEN_PAIR_SEED: u64 = 7;

/// Two-qubit commutator-flow scenario with an even constraint pair.
pub fn builtin_even_pair() -> Scenario {
    builtin_even_pair_seeded(EVEN_PAIR_SEED)
}

pub fn builtin_even_pair_seeded(seed: u64) -> Scenario {
    Scenario {
        name: "even_pair".into(),
        hamiltonian: even_pair_hamiltonian(),
        constraints: even_pair_constraints(),
        kind: FlowKind::CommutatorConstrained,
        initial_states: vec![InitialState::Density(even_pair_initial_state(seed))],
        integrator: IntegratorConfig::rk4(1e-3, 10.0).with_stride(10),
        monitors: Monitors::default(),
        seed,
    }
}

/// Spin-½ rotating rigidly about z; `σx` is monitored but not enforced.
pub fn builtin_unitary_control() -> Scenario {
    Scenario {
        name: "unitary_control".into(),
        hamiltonian: obs("sigma_z", pauli::z()),
        constraints: vec![obs("sigma_x", pauli::x())],
        kind: FlowKind::Unitary,
        initial_states: vec![InitialState::Bloch(BlochVector {
            x: 0.6,
            y: 0.0,
            z: 0.5,
        })],
        integrator: IntegratorConfig::rk4(1e-3, 10.0).with_stride(10),
        monitors: Monitors::default(),
        seed: 0,
    }
}

/// Reduced `(y, z)` field of the spin-½ example on the slice `x = x0`:
/// `ẏ = 2x0 − 2x0 y²/(1 − x0²)`, `ż = −2x0 y z/(1 − x0²)`.
pub fn bloch_oracle_rhs(x0: f64, y: f64, z: f64) -> (f64, f64) {
    let a = 1.0 - x0 * x0;
    (2.0 * x0 - 2.0 * x0 * y * y / a, -2.0 * x0 * y * z / a)
}

/// Scalar RK4 on [`bloch_oracle_rhs`]; returns `(t, y, z)` every `stride`
/// steps including both endpoints.
pub fn integrate_bloch_oracle(x0: f64, y0: f64, z0: f64, dt: f64, n_steps: usize, stride: usize) -> Vec<[f64; 3]> {
    let f = |y: f64, z: f64| bloch_oracle_rhs(x0, y, z);
    let (mut y, mut z) = (y0, z0);
    let mut out = vec![[0.0, y, z]];
    for i in 1..=n_steps {
        let (a1, b1) = f(y, z);
        let (a2, b2) = f(y + 0.5 * dt * a1, z + 0.5 * dt * b1);
        let (a3, b3) = f(y + 0.5 * dt * a2, z + 0.5 * dt * b2);
        let (a4, b4) = f(y + dt * a3, z + dt * b3);
        y += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        z += dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        if i % stride == 0 || i == n_steps {
            out.push([i as f64 * dt, y, z]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyRateReport {
    pub max_abs_mismatch: f64,
    pub max_abs_rate: f64,
    /// Interior samples where both the formula and the difference exist.
    pub samples: usize,
}

impl EntropyRateReport {
    pub fn relative_mismatch(&self) -> f64 {
        if self.max_abs_rate == 0.0 {
            self.max_abs_mismatch
        } else {
            self.max_abs_mismatch / self.max_abs_rate
        }
    }
}

/// Compares the entropy-production formula channel against centered
/// differences of the entropy channel. Samples where either side is NaN
/// (rank-deficient states, endpoints) are skipped.
pub fn entropy_rate_check(record: &TrajectoryRecord) -> Result<EntropyRateReport> {
    let missing = |name: &str| Error::InvalidConfig(format!("trajectory has no {name} channel"));
    let formula = record
        .channel(channel::DS_DT_FORMULA)
        .ok_or_else(|| missing(channel::DS_DT_FORMULA))?;
    let entropy = record.channel(channel::ENTROPY).ok_or_else(|| missing(channel::ENTROPY))?;
    let fd = flow::centered_difference(&record.times, entropy);
    let mut rep = EntropyRateReport {
        max_abs_mismatch: 0.0,
        max_abs_rate: 0.0,
        samples: 0,
    };
    for (f, d) in formula.iter().zip(&fd) {
        if f.is_finite() && d.is_finite() {
            rep.samples += 1;
            rep.max_abs_mismatch = rep.max_abs_mismatch.max((f - d).abs());
            rep.max_abs_rate = rep.max_abs_rate.max(f.abs()).max(d.abs());
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureReport {
    pub times: Vec<f64>,
    /// `‖ρ_a(t) − ρ_b(t)‖_F` between the density flows started from each construction.
    pub autonomy_gap: Vec<f64>,
    /// `‖ρ_a(t) − Σ p_n Π_n(t)‖_F` for the components of the first mixture.
    pub ensemble_gap_a: Vec<f64>,
    pub ensemble_gap_b: Vec<f64>,
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

impl MixtureReport {
    pub fn max_autonomy_gap(&self) -> f64 {
        max_of(&self.autonomy_gap)
    }

    pub fn max_ensemble_gap(&self) -> f64 {
        max_of(&self.ensemble_gap_a).max(max_of(&self.ensemble_gap_b))
    }
}

fn ensemble_average(mix: &Mixture, spec: &FlowSpec, config: &IntegratorConfig) -> Result<Vec<CMatrix>> {
    let kind = spec.kind.pure_counterpart();
    let monitors = Monitors {
        states: true,
        ..Monitors::none()
    };
    let records = parallel::map_indexed(mix.components(), Execution::Parallel, |_, (_, ket)| -> Result<_> {
        let cs = spec.constraints.capture_targets(ket.amplitudes())?;
        let flow = Flow::new(FlowSpec::new(kind, spec.hamiltonian.clone(), cs)?)?;
        Ok(evolve(&FlowState::Ket(ket.amplitudes().to_vec()), &flow, config, &monitors)?)
    });
    let mut avg: Option<Vec<CMatrix>> = None;
    for ((w, _), rec) in mix.components().iter().zip(records) {
        let rec = rec?;
        match avg.as_mut() {
            None => avg = Some(rec.states.iter().map(|s| s.scale_real(*w)).collect()),
            Some(acc) => {
                for (a, s) in acc.iter_mut().zip(&rec.states) {
                    *a += &s.scale_real(*w);
                }
            }
        }
    }
    Ok(avg.unwrap_or_default())
}

/// Evolves one `ρ0` built from two different ensembles, and each ensemble's
/// pure components separately.
///
/// The density flow is autonomous, so the two constructions must agree;
/// the component-wise average only agrees with it for linear dynamics.
pub fn mixture_experiment(
    a: &Mixture,
    b: &Mixture,
    spec: &FlowSpec,
    config: &IntegratorConfig,
) -> Result<MixtureReport> {
    let rho_a = state::from_mixture(a);
    let rho_b = state::from_mixture(b);
    let distance = (rho_a.matrix() - rho_b.matrix()).frobenius_norm();
    if distance > 1e-12 {
        return Err(Error::MixturesDiffer { distance });
    }
    let kind = spec.kind.matrix_counterpart();
    let monitors = Monitors {
        states: true,
        ..Monitors::none()
    };
    let run = |rho: &DensityMatrix| -> Result<TrajectoryRecord> {
        let cs = spec.constraints.capture_targets(rho)?;
        let flow = Flow::new(FlowSpec::new(kind, spec.hamiltonian.clone(), cs)?)?;
        Ok(evolve(&FlowState::Density(rho.matrix().clone()), &flow, config, &monitors)?)
    };
    let traj_a = run(&rho_a)?;
    let traj_b = run(&rho_b)?;
    let avg_a = ensemble_average(a, spec, config)?;
    let avg_b = ensemble_average(b, spec, config)?;
    let gaps = |x: &[CMatrix], y: &[CMatrix]| -> Vec<f64> {
        x.iter().zip(y).map(|(p, q)| (p - q).frobenius_norm()).collect()
    };
    Ok(MixtureReport {
        times: traj_a.times.clone(),
        autonomy_gap: gaps(&traj_a.states, &traj_b.states),
        ensemble_gap_a: gaps(&traj_a.states, &avg_a),
        ensemble_gap_b: gaps(&traj_a.states, &avg_b),
    })
}

/// Ket `|ψ⟩` whose projector has Bloch vector `r` (`|r| = 1`).
pub fn ket_from_bloch(r: &BlochVector) -> Result<StateVector> {
    let theta = r.z.clamp(-1.0, 1.0).acos();
    let phi = r.y.atan2(r.x);
    StateVector::new(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn oracle_examples() {
        let (dy, dz) = bloch_oracle_rhs(0.5, 0.0, 0.0);
        assert_abs_diff_eq!(dy, 1.0);
        assert_abs_diff_eq!(dz, 0.0);
        let (dy, dz) = bloch_oracle_rhs(0.5, 0.75f64.sqrt(), 0.0);
        assert_abs_diff_eq!(dy, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dz, 0.0);
        let (dy, dz) = bloch_oracle_rhs(0.5, 0.3, 0.2);
        assert_abs_diff_eq!(dy, 0.88, epsilon = 1e-15);
        assert_abs_diff_eq!(dz, -0.08, epsilon = 1e-15);
    }

    #[test]
    fn figure1_construction() {
        let sc = builtin_figure1(0.5, 7).unwrap();
        assert!(sc.initial_states.len() <= 51);
        assert_eq!(sc.initial_states.len(), figure1_lattice(0.5, 7).len() + 2);
        let sx = Observable::new("sx", pauli::x()).unwrap();
        for s in &sc.initial_states {
            assert_abs_diff_eq!(state::expectation(&s.density(), &sx).unwrap(), 0.5, epsilon = 1e-15);
        }
        sc.validate().unwrap();
        assert!(builtin_figure1(1.0, 7).is_err());
        assert!(builtin_figure1(0.5, 0).is_err());
    }

    #[test]
    fn lattice_is_strictly_inside() {
        for grid in 1..12 {
            for p in figure1_lattice(0.3, grid) {
                assert!(p.y * p.y + p.z * p.z < 1.0 - 0.09);
            }
        }
        assert_eq!(figure1_lattice(0.5, 9).len(), 69);
    }

    #[test]
    fn even_pair_initial_state_is_full_rank_and_polarized() {
        let rho = even_pair_initial_state(EVEN_PAIR_SEED);
        rho.validate().unwrap();
        assert!(rho.eigenvalues().unwrap()[0] > 1e-3);
        let sz1 = Observable::new("sz1", pauli::z().kron(&pauli::id())).unwrap();
        assert!(state::expectation(&rho, &sz1).unwrap().abs() > 0.2);
        assert_eq!(even_pair_initial_state(EVEN_PAIR_SEED), rho);
    }

    #[test]
    fn ket_from_bloch_round_trip() {
        let r = BlochVector::new(0.5, -0.6, (1.0f64 - 0.25 - 0.36).sqrt()).unwrap();
        let back = state::bloch_encode(&state::projector_from_ket(&ket_from_bloch(&r).unwrap())).unwrap();
        assert!(back.distance(&r) < 1e-15);
    }

    #[test]
    fn pure_flow_needs_pure_initial_state() {
        let s = InitialState::Bloch(BlochVector::new(0.5, 0.0, 0.0).unwrap());
        assert!(matches!(
            s.flow_state(FlowKind::PureConstrainedSymmetric),
            Err(Error::NotPure { .. })
        ));
        let p = InitialState::Bloch(BlochVector::new(0.6, 0.8, 0.0).unwrap());
        let FlowState::Ket(k) = p.flow_state(FlowKind::PureConstrainedSymmetric).unwrap() else {
            panic!()
        };
        let b = state::bloch_encode_raw(&state::projector_raw(&k)).unwrap();
        assert_abs_diff_eq!(b.y, 0.8, epsilon = 1e-14);
    }

    #[test]
    fn mixtures_must_agree() {
        let up = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let down = StateVector::from_real(&[0.0, 1.0]).unwrap();
        let a = Mixture::new(vec![(1.0, up.clone())]).unwrap();
        let b = Mixture::new(vec![(0.5, up), (0.5, down)]).unwrap();
        let spec = FlowSpec::new(
            FlowKind::Unitary,
            Observable::new("sz", pauli::z()).unwrap(),
            ConstraintSet::empty(),
        )
        .unwrap();
        assert!(matches!(
            mixture_experiment(&a, &b, &spec, &IntegratorConfig::rk4(0.1, 0.2)),
            Err(Error::MixturesDiffer { .. })
        ));
    }
}
