use proptest::prelude::*;
use qdyn::constraints::{self, qualification_check, ConstraintGeometry, ConstraintSet, MultiplierScheme, QualificationIssue};
use qdyn::linalg::{hermitian_eig, CMatrix};
use qdyn::random::{self, StdRng};
use qdyn::state::{DensityMatrix, Observable};
use qdyn::{pauli, Error};

struct Instance {
    rho: DensityMatrix,
    h: Observable,
    phis: Vec<Observable>,
}

fn instance(dim: usize, n: usize, rng: &mut StdRng) -> Instance {
    Instance {
        rho: DensityMatrix::new(random::density_matrix(dim, rng)).unwrap(),
        h: Observable::new("h", random::hermitian(dim, rng)).unwrap(),
        phis: (0..n)
            .map(|k| Observable::new(format!("phi{k}"), random::hermitian(dim, rng)).unwrap())
            .collect(),
    }
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=8, 1usize..=4).prop_map(|(d, n)| (d, n.min(d * d - 1)))
}

proptest! {
    #[test]
    fn geometry_matrices_have_their_symmetry((dim, n) in dims(), seed in any::<u64>()) {
        let inst = instance(dim, n, &mut random::rng(seed));
        let cs = ConstraintSet::new(inst.phis).unwrap();
        let w = constraints::w_matrix(&inst.rho, &cs).unwrap();
        let m = constraints::m_matrix(&inst.rho, &cs).unwrap();
        prop_assert!((&w.transpose() + &w).frobenius_norm() < 1e-13);
        prop_assert!((&m.transpose() - &m).frobenius_norm() < 1e-13);
        // Entries of w are imaginary, entries of m real.
        prop_assert!(w.as_slice().iter().all(|z| z.re.abs() < 1e-13));
        prop_assert!(m.as_slice().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn m_matrix_is_positive_semidefinite((dim, n) in dims(), seed in any::<u64>()) {
        let inst = instance(dim, n, &mut random::rng(seed));
        let cs = ConstraintSet::new(inst.phis).unwrap();
        let m = constraints::m_matrix(&inst.rho, &cs).unwrap();
        prop_assert!(hermitian_eig(&m).unwrap().eigenvalues[0] >= -1e-10);
    }

    #[test]
    fn solved_multipliers_satisfy_stationarity((dim, n) in dims(), seed in any::<u64>()) {
        let inst = instance(dim, n, &mut random::rng(seed));
        let cs = ConstraintSet::new(inst.phis).unwrap();
        if let Ok(sol) = constraints::solve_multipliers_symmetric(&inst.rho, &cs, &inst.h) {
            prop_assert!(sol.stationarity_residual < 1e-9);
        }
        if n % 2 == 0 {
            if let Ok(sol) = constraints::solve_multipliers_commutator(&inst.rho, &cs, &inst.h) {
                prop_assert!(sol.stationarity_residual < 1e-9);
            }
        }
    }

    #[test]
    fn multipliers_follow_constraint_permutation(dim in 3usize..=6, seed in any::<u64>(), perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
        let inst = instance(dim, 4, &mut random::rng(seed));
        let permuted: Vec<Observable> = perm.iter().map(|&i| inst.phis[i].clone()).collect();
        let cs = ConstraintSet::new(inst.phis).unwrap();
        let cp = ConstraintSet::new(permuted).unwrap();
        for scheme in [MultiplierScheme::Symmetric, MultiplierScheme::Commutator] {
            let a = ConstraintGeometry::new(&cs, &inst.h).unwrap().solve(scheme, &inst.rho);
            let b = ConstraintGeometry::new(&cp, &inst.h).unwrap().solve(scheme, &inst.rho);
            if let (Ok(a), Ok(b)) = (a, b) {
                let scale = a.lambdas.iter().map(|l| l.abs()).fold(1.0, f64::max);
                for (j, &i) in perm.iter().enumerate() {
                    prop_assert!((b.lambdas[j] - a.lambdas[i]).abs() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn captured_targets_have_zero_residual((dim, n) in dims(), seed in any::<u64>()) {
        let inst = instance(dim, n, &mut random::rng(seed));
        let cs = ConstraintSet::new(inst.phis).unwrap().capture_targets(&inst.rho).unwrap();
        prop_assert!(constraints::residuals(&inst.rho, &cs).unwrap().iter().all(|r| r.abs() < 1e-10));
    }
}

fn obs(label: &str, m: CMatrix) -> Observable {
    Observable::new(label, m).unwrap()
}

#[test]
fn odd_count_is_rejected_by_commutator_scheme() {
    let cs = ConstraintSet::new(vec![obs("sx", pauli::x())]).unwrap();
    let rho = DensityMatrix::maximally_mixed(2);
    assert_eq!(
        constraints::solve_multipliers_commutator(&rho, &cs, &obs("sz", pauli::z())),
        Err(Error::OddConstraintCount { n: 1 })
    );
    let rep = qualification_check(&cs, &obs("sz", pauli::z()), Some(MultiplierScheme::Commutator));
    assert!(!rep.is_qualified());
    assert!(rep.issues.iter().any(|i| i.to_string().contains("odd constraint count")));
}

#[test]
fn qualification_flags_conserved_and_redundant_constraints() {
    let cs = ConstraintSet::new(vec![obs("sz", pauli::z()), obs("sx", pauli::x()), obs("sx2", pauli::x())]).unwrap();
    let rep = qualification_check(&cs, &obs("sz", pauli::z()), Some(MultiplierScheme::Symmetric));
    assert!(rep.issues.contains(&QualificationIssue::CommutesWithHamiltonian { label: "sz".into() }));
    assert!(rep.issues.iter().any(|i| matches!(i, QualificationIssue::RedundantPair { .. })));
    let good = ConstraintSet::new(vec![obs("sx", pauli::x())]).unwrap();
    assert!(qualification_check(&good, &obs("sz", pauli::z()), Some(MultiplierScheme::Symmetric)).is_qualified());
}

#[test]
fn symmetric_geometry_is_singular_on_constraint_eigenstates() {
    // ⟨σx⟩ = 1 leaves no variance to push against.
    let plus = qdyn::state::bloch_decode(&qdyn::state::BlochVector::new(1.0, 0.0, 0.0).unwrap());
    let cs = ConstraintSet::new(vec![obs("sx", pauli::x())]).unwrap();
    assert!(matches!(
        constraints::solve_multipliers_symmetric(&plus, &cs, &obs("sz", pauli::z())),
        Err(Error::SingularConstraintGeometry { .. })
    ));
}
