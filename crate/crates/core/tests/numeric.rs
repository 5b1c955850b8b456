//! Numeric fields against exact values, closed forms and Erfc baselines.

mod common;

use std::f64::consts::PI;
use wigvol_core::catalog::*;
use wigvol_core::charfunc::factorization_coefficient;
use wigvol_core::closedform::*;
use wigvol_core::grid::{Axis, PhaseGrid};
use wigvol_core::linalg::*;
use wigvol_core::negativity::*;
use wigvol_core::regularizer::*;
use wigvol_core::special::erfc;
use wigvol_core::transform::*;

fn field(rho: &QuantumState, set: &OperatorSet, grid: &PhaseGrid, reg: &Regularizer) -> WignerField {
    regularized_wigner(rho, set, grid, reg, reg.default_cutoff().unwrap()).unwrap()
}

/// Re[(eps - i) / (pi ((eps - i)^2 + r^2)^{3/2})], the exact W_I of
/// (sigma_x, sigma_y) under e^{-eps|xi|}.
fn exact_mub_pair(a: &[f64], eps: f64) -> f64 {
    let s = C64::new(eps, -1.0);
    let r2 = a[0] * a[0] + a[1] * a[1];
    (s / (PI * (s * s + r2).powf(1.5))).re
}

#[test]
fn ray_engine_matches_the_exact_mub_pair_field() {
    let set = mub_pauli(2).unwrap();
    for eps in [1e-4, 1e-3, 3e-2] {
        let reg = Regularizer::exp_iso(2, eps).unwrap();
        let grid = PhaseGrid::new(vec![Axis::new(-1.3, 1.3, 27), Axis::new(-0.2, 1.1, 14)]).unwrap();
        let f = field(&QuantumState::maximally_mixed(2), &set, &grid, &reg);
        let scale = f.max_abs();
        for (i, a) in grid.points().iter().enumerate() {
            let want = 0.5 * exact_mub_pair(a, eps);
            assert!((f.values()[i] - want).abs() < 1e-7 * scale, "eps {eps} at {a:?}: {} vs {want}", f.values()[i]);
        }
    }
}

#[test]
fn mub_triple_negative_volume_matches_the_erfc_form() {
    let eps = 1e-4;
    let set = mub_pauli(3).unwrap();
    let reg = family_regularizer(&set, eps).unwrap();
    let grid = PhaseGrid::natural(&set, &reg, Some(&[129, 129, 129])).unwrap();
    let f = field(&QuantumState::maximally_mixed(2), &set, &grid, &reg);
    let want = 0.5 * (-1.0 + 1.0 / (PI * eps).sqrt() + erfc(1.0 / (2.0 * eps.sqrt())));
    assert!((want - 27.709).abs() < 1e-3);
    let neg = negative_volume(&f);
    assert!((neg.abs() - want).abs() < 0.05 * want, "{neg} vs {want}");
    assert!((f.integral() - 1.0).abs() < 0.02, "{}", f.integral());
    let split = negative_volume(&f) + positive_volume(&f);
    assert!((split - f.integral()).abs() < 1e-12 * f.values().iter().map(|v| v.abs()).sum::<f64>());
}

#[test]
fn mub_pair_integrates_to_one() {
    let set = mub_pauli(2).unwrap();
    let reg = family_regularizer(&set, 3e-2).unwrap();
    let grid = PhaseGrid::default_for(&set, &reg, Some(129)).unwrap();
    let f = field(&bloch_to_state(&[0.2, 0.3], 2).unwrap(), &set, &grid, &reg);
    assert!((f.integral() - 1.0).abs() < 0.02, "{}", f.integral());
    assert!(f.min() < 0.0);
}

#[test]
fn commuting_sets_are_nonnegative() {
    let cases = [
        OperatorSet::custom(vec![gellmann(3, 3).unwrap(), gellmann(3, 8).unwrap()]).unwrap(),
        OperatorSet::custom(vec![pauli(3).unwrap(), pauli(3).unwrap()]).unwrap(),
    ];
    for set in cases {
        let reg = Regularizer::gauss_iso(2, 1e-2).unwrap();
        let grid = PhaseGrid::default_for(&set, &reg, Some(129)).unwrap();
        let rho = QuantumState::maximally_mixed(set.dim());
        let f = field(&rho, &set, &grid, &reg);
        assert!(f.min() >= -1e-6 * f.max_abs(), "{} vs {}", f.min(), f.max_abs());
        let domain: f64 = grid.axes().iter().map(|a| a.max - a.min).product();
        assert!(negative_volume(&f).abs() < 1e-6 * f.max_abs() * domain);
    }
}

#[test]
fn fields_are_real() {
    let eps = 1e-2;
    for set in common::families() {
        let reg = family_regularizer(&set, eps).unwrap();
        let count = if set.n() == 2 { 33 } else { 25 };
        let grid = PhaseGrid::natural(&set, &reg, Some(&vec![count; set.n()])).unwrap();
        let f = field(&QuantumState::maximally_mixed(set.dim()), &set, &grid, &reg);
        assert!(f.imag_ratio() < 1e-8, "{}: {:e}", set.family().tag(), f.imag_ratio());
    }
}

// exponential kernels make the convolution error of the product form small
// away from the singular edge
#[test]
fn state_factorization_for_exponential_kernels() {
    let eps = 1e-4;
    let rho = bloch_to_state(&[0.4, -0.3, 0.0], 2).unwrap();
    for set in [mub_pauli(2).unwrap(), arb_qubit_pair(0.7).unwrap(), noisy_pauli_set(&[0.2, 0.4], false).unwrap()] {
        let reg = family_regularizer(&set, eps).unwrap();
        let grid = PhaseGrid::natural(&set, &reg, Some(&[31, 31])).unwrap();
        let w = field(&rho, &set, &grid, &reg);
        let wi = identity_wigner(&set, &grid, &reg, reg.default_cutoff().unwrap()).unwrap();
        let top = wi.max_abs();
        let case = ClosedFormCase::new(&set).unwrap();
        let mask = Mask::singular_shell(&case, &grid, default_mask(eps)).unwrap();
        for (i, a) in grid.points().iter().enumerate() {
            if !mask.excluded()[i] && wi.values()[i].abs() > 1e-6 * top {
                let c = factorization_coefficient(&rho, &set, a).unwrap();
                let d = (w.values()[i] - c * wi.values()[i]).abs();
                assert!(d < 1e-6 * top, "{} at {a:?}: {d:e}", set.family().tag());
            }
        }
    }
}

#[test]
fn numeric_matches_closed_forms_on_the_top_decile() {
    let eps = 1e-3;
    let p = |s: &str| parse_sign(s).unwrap();
    let sets = [
        mub_pauli(2).unwrap(),
        mub_pauli(3).unwrap(),
        noisy_projector_set(&[p("x+"), p("y+"), p("z-")], 0.4).unwrap(),
    ];
    for set in sets {
        let case = ClosedFormCase::new(&set).unwrap();
        let reg = family_regularizer(&set, eps).unwrap();
        let count = if set.n() == 2 { 61 } else { 65 };
        let grid = PhaseGrid::natural(&set, &reg, Some(&vec![count; set.n()])).unwrap();
        // shells: the product form is exact only for r = 0 under a Gaussian kernel
        let rho = if set.n() == 2 { bloch_to_state(&[0.3, 0.2], 2).unwrap() } else { QuantumState::maximally_mixed(2) };
        let f = field(&rho, &set, &grid, &reg);
        let mask = Mask::singular_shell(&case, &grid, default_mask(eps)).unwrap();
        let mut pairs = Vec::new();
        for (i, a) in grid.points().iter().enumerate() {
            if !mask.excluded()[i] {
                pairs.push((wigner_closed(&case, &rho, a, eps).unwrap(), f.values()[i]));
            }
        }
        let mut mags: Vec<f64> = pairs.iter().map(|p| p.0.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let cut = mags[(0.9 * mags.len() as f64) as usize];
        let worst = pairs
            .iter()
            .filter(|p| p.0.abs() >= cut)
            .map(|p| (p.1 - p.0).abs() / p.0.abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{}: {worst}", case.expression());
    }
}

#[test]
fn normalization_examples() {
    let p = |s: &str| parse_sign(s).unwrap();
    let set = noisy_projector_set(&[p("x+"), p("y+")], 0.5).unwrap();
    let reg = family_regularizer(&set, 1e-5).unwrap();
    assert!((norm_factor(&reg, &reg.reference()).unwrap() - 16.0).abs() < 1e-10);
    let set = noisy_pauli_set(&[0.2, 0.2, 0.2], false).unwrap();
    let reg = family_regularizer(&set, 1e-4).unwrap();
    assert!((norm_factor(&reg, &reg.reference()).unwrap() - 1.953125).abs() < 1e-10);
}
