//! Scenario-file front end: `check`, `run`, `sweep` and `demo`.

pub mod file;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use qdyn::constraints::{residuals, MultiplierScheme};
use qdyn::parallel::Execution;
use qdyn::scenarios::{self, Scenario};
use qdyn::state;

pub use file::ScenarioFile;
use output::{SvgCounts, Summary, TrajectorySummary};

/// Command failure, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid input; exit code 1.
    Validation(anyhow::Error),
    /// A trajectory failed or outputs could not be written; exit code 2.
    Integration(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 1,
            Self::Integration(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(e) => write!(f, "validation failed: {e:#}"),
            Self::Integration(e) => write!(f, "integration failed: {e:#}"),
        }
    }
}

impl std::error::Error for Failure {}

type CmdResult<T> = Result<T, Failure>;

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

fn failed(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Integration(e.into())
}

pub fn load(path: &Path) -> CmdResult<(ScenarioFile, Scenario)> {
    let doc = ScenarioFile::read(path).map_err(invalid)?;
    let sc = doc
        .to_scenario()
        .with_context(|| format!("{}", path.display()))
        .map_err(invalid)?;
    Ok((doc, sc))
}

/// Prints the qualification report and the initial multiplier conditioning.
pub fn check(path: &Path, out: &mut impl Write) -> CmdResult<()> {
    let (_, sc) = load(path)?;
    let rep = sc.qualification().map_err(invalid)?;
    let scheme = sc.kind.scheme();
    let p = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(failed);
    p(out, format!("scenario: {}", sc.name))?;
    p(out, format!("dimension: {}", sc.dim()))?;
    p(out, format!("flow: {}", sc.kind.name()))?;
    p(out, format!("constraints: N = {}", rep.n))?;
    let parity = match scheme {
        Some(MultiplierScheme::Commutator) if rep.even_parity => "even (required by commutator flow)",
        Some(MultiplierScheme::Commutator) => "odd (commutator flow needs even)",
        _ if rep.even_parity => "even",
        _ => "odd",
    };
    p(out, format!("parity: {parity}"))?;
    for (label, norm) in &rep.hamiltonian_commutators {
        p(out, format!("  {label}: |[H, phi]| = {norm:.6e}"))?;
    }
    for (j, k, norm) in &rep.pair_commutators {
        p(out, format!("  pair ({}, {}): |[phi_j, phi_k]| = {norm:.6e}", j + 1, k + 1))?;
    }
    let matrix_name = match scheme {
        Some(MultiplierScheme::Commutator) => "w",
        Some(MultiplierScheme::Symmetric) => "m",
        None => "",
    };
    let mut problems: Vec<String> = rep.issues.iter().map(|i| i.to_string()).collect();
    if problems.is_empty() {
        let mut max_res: f64 = 0.0;
        let mut min_rcond: Option<f64> = None;
        for (i, s) in sc.initial_states.iter().enumerate() {
            let rho = s.density();
            let flow = sc.flow_for(s).map_err(invalid)?;
            let res = residuals(&rho, &flow.spec().constraints).map_err(invalid)?;
            max_res = res.iter().fold(max_res, |m, r| m.max(r.abs()));
            let y0 = s.flow_state(sc.kind).map_err(invalid)?;
            match flow.multipliers(&y0) {
                Ok(Some(sol)) => min_rcond = Some(min_rcond.map_or(sol.rcond, |m: f64| m.min(sol.rcond))),
                Ok(None) => {}
                Err(e) => problems.push(format!("initial state {i}: {e}")),
            }
        }
        p(out, format!("initial states: {}", sc.initial_states.len()))?;
        p(out, format!("initial max |residual| = {max_res:.3e}"))?;
        if let Some(r) = min_rcond {
            p(out, format!("initial min {matrix_name}-rcond = {r:.6e}"))?;
        }
    }
    if problems.is_empty() {
        p(out, "status: ok".into())?;
        Ok(())
    } else {
        for pr in &problems {
            p(out, format!("issue: {pr}"))?;
        }
        Err(invalid(anyhow!(problems.join("; "))))
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub summary: Summary,
    pub svg: Option<(PathBuf, SvgCounts)>,
}

pub fn trajectory_file(index: usize) -> String {
    format!("traj_{index}.csv")
}

/// Runs every initial state and writes `traj_<i>.csv`, `summary.json` and,
/// with `svg`, `figure1.svg`. Files are written in index order.
pub fn run(path: &Path, out_dir: &Path, svg: bool, execution: Execution) -> CmdResult<RunReport> {
    let (_, sc) = load(path)?;
    if svg && sc.dim() != 2 {
        return Err(invalid(anyhow!("--svg needs a two-level scenario, got dimension {}", sc.dim())));
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))
        .map_err(failed)?;
    let outcomes = sc.run(execution);
    let (dim, n) = (sc.dim(), sc.constraints.len());
    let mut trajectories = Vec::with_capacity(outcomes.len());
    let mut paths = Vec::new();
    for (i, o) in outcomes.iter().enumerate() {
        let (rec, failure) = match o {
            Ok(rec) => (rec, None),
            Err(e) => (&*e.partial, Some((e.t, e.error.to_string()))),
        };
        let name = trajectory_file(i);
        write(&out_dir.join(&name), &output::trajectory_csv(rec, dim, n))?;
        if svg {
            paths.push(rec.bloch_path().unwrap_or_default());
        }
        trajectories.push(TrajectorySummary::new(i, name, rec, failure));
    }
    let summary = Summary {
        scenario: sc.name.clone(),
        flow: sc.kind.name(),
        dimension: dim,
        constraints: n,
        failed: trajectories.iter().filter(|t| t.error.is_some()).count(),
        trajectories,
    };
    for t in summary.trajectories.iter().filter(|t| t.positivity_violated) {
        eprintln!(
            "qdyn: warning: trajectory {} lost positivity (min eigenvalue {:.3e})",
            t.index,
            t.min_eigenvalue.unwrap_or(f64::NAN)
        );
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write(&out_dir.join("summary.json"), &(json + "\n"))?;
    let svg = if svg {
        let x0 = state::bloch_encode(&sc.initial_states[0].density()).map_err(invalid)?.x;
        let (text, counts) = output::cross_section_svg(x0, &paths);
        let p = out_dir.join("figure1.svg");
        write(&p, &text)?;
        Some((p, counts))
    } else {
        None
    };
    if summary.failed > 0 {
        return Err(failed(anyhow!(
            "{} of {} trajectories failed; partial records kept, see {}",
            summary.failed,
            summary.trajectories.len(),
            out_dir.join("summary.json").display()
        )));
    }
    Ok(RunReport { summary, svg })
}

fn write(path: &Path, text: &str) -> CmdResult<()> {
    std::fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(failed)
}

/// Writes the built-in spin-½ scenario file to `out_dir/figure1.json` and sweeps it.
pub fn demo_figure1(x0: f64, grid: usize, out_dir: &Path, execution: Execution) -> CmdResult<(PathBuf, RunReport)> {
    let sc = scenarios::builtin_figure1(x0, grid).map_err(invalid)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))
        .map_err(failed)?;
    let file = out_dir.join("figure1.json");
    write(&file, &(ScenarioFile::from_scenario(&sc).to_json() + "\n"))?;
    let report = run(&file, out_dir, true, execution)?;
    Ok((file, report))
}

/// Reads a thread cap from `QDYN_THREADS`; unset means machine parallelism.
pub fn threads_from_env() -> CmdResult<Option<usize>> {
    match std::env::var("QDYN_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(invalid(anyhow!("QDYN_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}
