//! On-disk scenario documents (JSON).

use std::path::Path;

use anyhow::{bail, Context, Result};
use qdyn::flow::{FlowKind, Hygiene, IntegratorConfig, Method, Monitors};
use qdyn::linalg::CMatrix;
use qdyn::scenarios::{InitialState, Scenario};
use qdyn::state::{BlochVector, DensityMatrix, Mixture, Observable, StateVector};
use qdyn::C64;
use serde::{Deserialize, Serialize};

/// Rows of `[re, im]` pairs.
pub type MatrixDoc = Vec<Vec<[f64; 2]>>;
pub type KetDoc = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub dimension: usize,
    pub hamiltonian: MatrixDoc,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
    pub flow: FlowDoc,
    pub initial_states: Vec<InitialStateDoc>,
    pub integrator: IntegratorDoc,
    #[serde(default)]
    pub hygiene: HygieneDoc,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub label: String,
    pub observable: MatrixDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDoc {
    Unitary,
    Commutator,
    Symmetric,
    PureProjective,
    PureCommutator,
    PureSymmetric,
}

impl From<FlowDoc> for FlowKind {
    fn from(f: FlowDoc) -> Self {
        match f {
            FlowDoc::Unitary => FlowKind::Unitary,
            FlowDoc::Commutator => FlowKind::CommutatorConstrained,
            FlowDoc::Symmetric => FlowKind::SymmetricConstrained,
            FlowDoc::PureProjective => FlowKind::PureProjective,
            FlowDoc::PureCommutator => FlowKind::PureConstrainedCommutator,
            FlowDoc::PureSymmetric => FlowKind::PureConstrainedSymmetric,
        }
    }
}

impl From<FlowKind> for FlowDoc {
    fn from(f: FlowKind) -> Self {
        match f {
            FlowKind::Unitary => FlowDoc::Unitary,
            FlowKind::CommutatorConstrained => FlowDoc::Commutator,
            FlowKind::SymmetricConstrained => FlowDoc::Symmetric,
            FlowKind::PureProjective => FlowDoc::PureProjective,
            FlowKind::PureConstrainedCommutator => FlowDoc::PureCommutator,
            FlowKind::PureConstrainedSymmetric => FlowDoc::PureSymmetric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateDoc {
    Bloch { vector: [f64; 3] },
    Matrix { matrix: MatrixDoc },
    Ket { amplitudes: KetDoc },
    Mixture { components: Vec<ComponentDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub weight: f64,
    pub amplitudes: KetDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodDoc {
    Rk4,
    Rk4Adaptive,
}

fn default_stride() -> usize {
    1
}

fn default_adapt_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorDoc {
    pub method: MethodDoc,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_adapt_tol")]
    pub adapt_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HygieneDoc {
    pub rehermitize: bool,
    pub renormalize_trace: bool,
}

impl Default for HygieneDoc {
    fn default() -> Self {
        let h = Hygiene::default();
        Self {
            rehermitize: h.rehermitize,
            renormalize_trace: h.renormalize_trace,
        }
    }
}

fn matrix_from_doc(doc: &MatrixDoc, what: &str) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = doc
        .iter()
        .map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .collect();
    CMatrix::from_rows(&rows).with_context(|| format!("{what}: invalid matrix"))
}

fn matrix_to_doc(m: &CMatrix) -> MatrixDoc {
    m.rows().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

fn ket_from_doc(doc: &KetDoc, what: &str) -> Result<StateVector> {
    StateVector::new(doc.iter().map(|[re, im]| C64::new(*re, *im)).collect())
        .with_context(|| format!("{what}: invalid ket"))
}

fn ket_to_doc(k: &StateVector) -> KetDoc {
    k.amplitudes().iter().map(|z| [z.re, z.im]).collect()
}

fn observable(doc: &MatrixDoc, label: &str) -> Result<Observable> {
    let m = matrix_from_doc(doc, label)?;
    Observable::new(label, m).with_context(|| format!("{label}: not a valid observable"))
}

impl ScenarioFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: schema violation", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents always serialize")
    }

    /// Builds the runnable scenario, validating every matrix and state.
    pub fn to_scenario(&self) -> Result<Scenario> {
        let hamiltonian = observable(&self.hamiltonian, "hamiltonian")?;
        if hamiltonian.dim() != self.dimension {
            bail!(
                "hamiltonian is {0}x{0} but dimension is {1}",
                hamiltonian.dim(),
                self.dimension
            );
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| observable(&c.observable, &format!("constraint {}", c.label)).map(|o| relabel(o, &c.label)))
            .collect::<Result<Vec<_>>>()?;
        let initial_states = self
            .initial_states
            .iter()
            .enumerate()
            .map(|(i, s)| initial_state(s).with_context(|| format!("initial state {i}")))
            .collect::<Result<Vec<_>>>()?;
        if initial_states.is_empty() {
            bail!("scenario has no initial states");
        }
        let method = match self.integrator.method {
            MethodDoc::Rk4 => Method::Rk4Fixed,
            MethodDoc::Rk4Adaptive => Method::Rk4StepDoubling,
        };
        let integrator = IntegratorConfig::rk4(self.integrator.dt, self.integrator.t_final)
            .with_stride(self.integrator.record_stride)
            .with_method(method, self.integrator.adapt_tol)
            .with_hygiene(Hygiene {
                rehermitize: self.hygiene.rehermitize,
                renormalize_trace: self.hygiene.renormalize_trace,
            });
        let sc = Scenario {
            name: self.name.clone(),
            hamiltonian,
            constraints,
            kind: self.flow.into(),
            initial_states,
            integrator,
            monitors: cli_monitors(),
            seed: self.seed,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        Self {
            name: sc.name.clone(),
            dimension: sc.dim(),
            hamiltonian: matrix_to_doc(sc.hamiltonian.matrix()),
            constraints: sc
                .constraints
                .iter()
                .map(|o| ConstraintDoc {
                    label: o.label.clone(),
                    observable: matrix_to_doc(o.matrix()),
                })
                .collect(),
            flow: sc.kind.into(),
            initial_states: sc.initial_states.iter().map(initial_state_doc).collect(),
            integrator: IntegratorDoc {
                method: match sc.integrator.method {
                    Method::Rk4Fixed => MethodDoc::Rk4,
                    Method::Rk4StepDoubling => MethodDoc::Rk4Adaptive,
                },
                dt: sc.integrator.dt,
                t_final: sc.integrator.t_final,
                record_stride: sc.integrator.record_stride,
                adapt_tol: sc.integrator.adapt_tol,
            },
            hygiene: HygieneDoc {
                rehermitize: sc.integrator.hygiene.rehermitize,
                renormalize_trace: sc.integrator.hygiene.renormalize_trace,
            },
            seed: sc.seed,
        }
    }
}

fn relabel(o: Observable, label: &str) -> Observable {
    Observable::new(label, o.matrix().clone()).expect("already validated")
}

/// Channels written by `run` and `sweep`.
pub fn cli_monitors() -> Monitors {
    Monitors {
        entropy_rate: false,
        states: false,
        ..Monitors::default()
    }
}

fn initial_state(doc: &InitialStateDoc) -> Result<InitialState> {
    Ok(match doc {
        InitialStateDoc::Bloch { vector: [x, y, z] } => InitialState::Bloch(BlochVector::new(*x, *y, *z)?),
        InitialStateDoc::Matrix { matrix } => {
            let m = matrix_from_doc(matrix, "density matrix")?;
            InitialState::Density(DensityMatrix::new(m)?)
        }
        InitialStateDoc::Ket { amplitudes } => InitialState::Ket(ket_from_doc(amplitudes, "ket")?),
        InitialStateDoc::Mixture { components } => {
            let comps = components
                .iter()
                .enumerate()
                .map(|(i, c)| Ok((c.weight, ket_from_doc(&c.amplitudes, &format!("component {i}"))?)))
                .collect::<Result<Vec<_>>>()?;
            InitialState::Mixture(Mixture::new(comps)?)
        }
    })
}

fn initial_state_doc(s: &InitialState) -> InitialStateDoc {
    match s {
        InitialState::Bloch(b) => InitialStateDoc::Bloch { vector: b.to_array() },
        InitialState::Density(d) => InitialStateDoc::Matrix {
            matrix: matrix_to_doc(d.matrix()),
        },
        InitialState::Ket(k) => InitialStateDoc::Ket {
            amplitudes: ket_to_doc(k),
        },
        InitialState::Mixture(m) => InitialStateDoc::Mixture {
            components: m
                .components()
                .iter()
                .map(|(w, k)| ComponentDoc {
                    weight: *w,
                    amplitudes: ket_to_doc(k),
                })
                .collect(),
        },
    }
}
