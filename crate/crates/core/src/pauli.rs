//! Pauli matrices and small operator builders.

use num_complex::Complex64 as C64;

use crate::linalg::CMatrix;

fn m2(a: [[C64; 2]; 2]) -> CMatrix {
    CMatrix::from_vec(2, vec![a[0][0], a[0][1], a[1][0], a[1][1]]).expect("2x2 literal")
}

const O: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn x() -> CMatrix {
    m2([[O, ONE], [ONE, O]])
}

pub fn y() -> CMatrix {
    m2([[O, -I], [I, O]])
}

pub fn z() -> CMatrix {
    m2([[ONE, O], [O, -ONE]])
}

pub fn id() -> CMatrix {
    CMatrix::identity(2)
}
