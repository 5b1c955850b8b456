#![allow(dead_code)]

use proptest::prelude::*;
use wigvol_core::linalg::{ComplexMatrix, HermitianOperator, QuantumState, C64};

/// rho = B B^dag / tr, B with entries in the unit square.
pub fn state(d: usize) -> impl Strategy<Value = QuantumState> {
    prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |v| {
        let b = ComplexMatrix::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        let m = &b * b.adjoint();
        let tr = m.trace();
        QuantumState::new(m / tr).unwrap()
    })
}

pub fn hermitian(d: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec(-2.0f64..2.0, 2 * d * d).prop_map(move |v| {
        let b = ComplexMatrix::from_fn(d, d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]));
        HermitianOperator::new((&b + b.adjoint()) * C64::new(0.5, 0.0)).unwrap()
    })
}

pub fn max_dist(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

use wigvol_core::catalog::*;

/// One representative of every built-in family at a noisy parameter point.
pub fn families() -> Vec<OperatorSet> {
    let p = |s: &str| parse_sign(s).unwrap();
    vec![
        mub_pauli(2).unwrap(),
        mub_pauli(3).unwrap(),
        noisy_projector_set(&[p("x+"), p("y-")], 0.3).unwrap(),
        noisy_projector_set(&[p("x+"), p("y+"), p("z+")], 0.25).unwrap(),
        noisy_projector_set(&[p("x+"), p("y+"), p("y-")], 0.5).unwrap(),
        noisy_projector_set(&[p("x+"), p("x-"), p("y+"), p("y-")], 0.2).unwrap(),
        noisy_pauli_set(&[0.1, 0.4], false).unwrap(),
        noisy_pauli_set(&[0.2, 0.3, 0.5], false).unwrap(),
        noisy_pauli_set(&[0.3, 0.3], true).unwrap(),
        noisy_pauli_set(&[0.4, 0.4, 0.4], true).unwrap(),
        arb_qubit_triple(1.2, 0.3, 1.0, 1.9).unwrap(),
        arb_qubit_pair(0.6).unwrap(),
        gellmann_set(3, 2).unwrap(),
        gellmann_set(4, 3).unwrap(),
        noisy_gellmann_set(3, &[0.2, 0.3, 0.1]).unwrap(),
    ]
}

/// The generator behind each primed Bloch coordinate (sign included).
pub fn bloch_generators(set: &OperatorSet) -> Vec<HermitianOperator> {
    let coords = set.coords().unwrap();
    coords
        .bloch
        .iter()
        .map(|&(axis, s)| {
            let g = gellmann(set.dim(), axis).unwrap();
            HermitianOperator::new(g.matrix() * C64::new(s, 0.0)).unwrap()
        })
        .collect()
}
