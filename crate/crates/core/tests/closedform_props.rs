mod common;

use common::families;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;
use wigvol_core::catalog::*;
use wigvol_core::closedform::*;
use wigvol_core::grid::PhaseGrid;
use wigvol_core::linalg::*;
use wigvol_core::negativity::Mask;
use wigvol_core::regularizer::family_regularizer;

fn closed(set: &OperatorSet) -> ClosedFormCase {
    ClosedFormCase::new(set).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // noiseless parameter points reduce to the MUB / Gell-Mann forms
    #[test]
    fn reductions_are_pointwise(
        a in prop::collection::vec(-0.9f64..0.9, 3),
        r in prop::collection::vec(-0.5f64..0.5, 3),
        eps in 1e-4f64..1e-1,
    ) {
        let rho = bloch_to_state(&r, 2).unwrap();
        let rho2 = bloch_to_state(&r[..2], 2).unwrap();
        let mub2 = closed(&mub_pauli(2).unwrap());
        let mub3 = closed(&mub_pauli(3).unwrap());
        let pairs = [
            (closed(&noisy_pauli_set(&[0.0, 0.0], false).unwrap()), &mub2, &rho2, 2),
            (closed(&noisy_pauli_set(&[0.0, 0.0], true).unwrap()), &mub2, &rho2, 2),
            (closed(&arb_qubit_pair(1.0).unwrap()), &mub2, &rho2, 2),
            (closed(&noisy_pauli_set(&[0.0, 0.0, 0.0], false).unwrap()), &mub3, &rho, 3),
            (closed(&noisy_pauli_set(&[0.0, 0.0, 0.0], true).unwrap()), &mub3, &rho, 3),
            (closed(&arb_qubit_triple(FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2).unwrap()), &mub3, &rho, 3),
        ];
        for (case, mub, st, n) in pairs {
            let x = &a[..n];
            let got = wigner_closed(&case, st, x, eps).unwrap();
            let want = wigner_closed(mub, st, x, eps).unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "{}: {got} vs {want}", case.expression());
        }
        let rq = bloch_to_state(&r, 3).unwrap();
        let gm = closed(&gellmann_set(3, 3).unwrap());
        let ngm = closed(&noisy_gellmann_set(3, &[0.0, 0.0, 0.0]).unwrap());
        let got = wigner_closed(&ngm, &rq, &a, eps).unwrap();
        let want = wigner_closed(&gm, &rq, &a, eps).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn ratios_lie_in_the_unit_interval() {
    for set in families() {
        let c = negativity_closed(&closed(&set), 1e-4, None).unwrap();
        assert!((0.0..=1.0).contains(&c.ratio), "{}: {}", set.family().tag(), c.ratio);
    }
}

fn magnitude(set: &OperatorSet, eps: f64) -> f64 {
    negativity_closed(&closed(set), eps, None).unwrap().absolute.abs()
}

#[test]
fn negativity_decreases_with_noise() {
    let lambdas: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    let (x, y, z) = (parse_sign("x+").unwrap(), parse_sign("y+").unwrap(), parse_sign("z-").unwrap());
    let y_minus = parse_sign("y-").unwrap();
    type Make = Box<dyn Fn(f64) -> OperatorSet>;
    let sweeps: Vec<(&str, Make)> = vec![
        ("proj n=2", Box::new(move |l| noisy_projector_set(&[x, y], l).unwrap())),
        ("proj n=3", Box::new(move |l| noisy_projector_set(&[x, y, z], l).unwrap())),
        ("proj mixed", Box::new(move |l| noisy_projector_set(&[x, y, y_minus], l).unwrap())),
        ("pauli l1", Box::new(|l| noisy_pauli_set(&[l, 0.2], false).unwrap())),
        ("pauli l2", Box::new(|l| noisy_pauli_set(&[0.1, l, 0.3], false).unwrap())),
        ("pauli l3", Box::new(|l| noisy_pauli_set(&[0.1, 0.3, l], false).unwrap())),
        ("symm n=2", Box::new(|l| noisy_pauli_set(&[l, l], true).unwrap())),
        ("symm n=3", Box::new(|l| noisy_pauli_set(&[l, l, l], true).unwrap())),
        ("gell-mann", Box::new(|l| noisy_gellmann_set(4, &[l, 0.2]).unwrap())),
        ("pair", Box::new(|l| arb_qubit_pair(1.0 - l).unwrap())),
    ];
    for (name, make) in sweeps {
        let v: Vec<f64> = lambdas.iter().map(|&l| magnitude(&make(l), 1e-4)).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "{name}: {v:?}");
    }
}

#[test]
fn negativity_decreases_with_dimension() {
    for n in [2, 3] {
        let v: Vec<f64> = (2..=6).map(|d| magnitude(&noisy_gellmann_set(d, &vec![0.2; n]).unwrap(), 1e-4)).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "n={n}: {v:?}");
    }
}

#[test]
fn triple_factor_geometry() {
    assert!((coplanarity_factor(FRAC_PI_2, 0.0, FRAC_PI_2, FRAC_PI_2) - 1.0).abs() < 1e-15);
    let mut last = f64::INFINITY;
    for k in 1..=8 {
        let d = 0.5f64.powi(k);
        let f = coplanarity_factor(1.1, 0.4, 0.9, 0.4 + d);
        assert!(f < last);
        last = f;
    }
    assert!(last < 0.01);
    assert!(coplanarity_factor(1.1, 0.4, 0.9, 0.4) < 1e-15);
    assert!(arb_qubit_triple(1.1, 0.4, 0.9, 0.4).is_err());
}

/// Bloch vectors inside the ball, supported on the family's own axes.
fn random_states(set: &OperatorSet, count: usize, seed: u64) -> Vec<QuantumState> {
    let axes: Vec<usize> = set.coords().unwrap().bloch.iter().map(|b| b.0).collect();
    let d = set.dim();
    let mut s = seed;
    let mut uniform = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut out = Vec::new();
    while out.len() < count {
        let v: Vec<f64> = axes.iter().map(|_| 2.0 * uniform() - 1.0).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 0.81 {
            continue;
        }
        let mut r = vec![0.0; d * d - 1];
        for (ax, x) in axes.iter().zip(&v) {
            r[ax - 1] = *x;
        }
        out.push(bloch_to_state(&r, d).unwrap());
    }
    out
}

#[test]
fn closed_negativity_is_independent_of_the_state() {
    let eps = 1e-3;
    for set in families() {
        let case = closed(&set);
        let reg = family_regularizer(&set, eps).unwrap();
        let counts = vec![if set.n() == 2 { 201 } else { 41 }; set.n()];
        let grid = PhaseGrid::natural(&set, &reg, Some(&counts)).unwrap();
        let mask = Mask::singular_shell(&case, &grid, default_mask(eps)).unwrap();
        let points = grid.points();
        let vols: Vec<f64> = random_states(&set, 20, 11)
            .iter()
            .map(|rho| {
                let s: f64 = points
                    .iter()
                    .zip(mask.excluded())
                    .filter(|(_, ex)| !**ex)
                    .map(|(a, _)| wigner_closed(&case, rho, a, eps).unwrap().min(0.0))
                    .sum();
                s * grid.cell_volume()
            })
            .collect();
        let lo = vols.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vols.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(hi < 0.0 && (hi - lo) < 0.01 * lo.abs(), "{}: {vols:?}", case.expression());
    }
}
