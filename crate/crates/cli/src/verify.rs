//! Self-checks of the numeric pipeline against properties that hold exactly
//! or against the closed forms. Each check yields one JSON line.

use serde::Serialize;
use wigvol_core::catalog::*;
use wigvol_core::charfunc::{char_fn_identity, char_fn_identity_grad, factorization_coefficient};
use wigvol_core::closedform::{default_mask, negativity_closed, wigner_closed, ClosedFormCase, Shape};
use wigvol_core::grid::PhaseGrid;
use wigvol_core::linalg::{bloch_to_state, HermitianOperator, QuantumState};
use wigvol_core::negativity::{normalized_negativity, Mask};
use wigvol_core::regularizer::{family_regularizer, Regularizer};
use wigvol_core::transform::{
    identity_wigner, marginal_check, probe_directions, regularized_wigner, support_distance_lower_bound, WignerField,
};

use crate::error::Result;
use crate::sweep::numeric_baseline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    /// n = 2 fields run on the cheap ray engine, so they afford a smaller
    /// eps; qudit origin terms bias the ratio by O(eps).
    pub fn epsilon(self, n: usize) -> f64 {
        match (self, n) {
            (Level::Quick, 2) => 1e-3,
            (Level::Quick, _) => 1e-2,
            (Level::Full, 2) => 1e-4,
            (Level::Full, _) => 1e-3,
        }
    }

    pub fn count(self, n: usize) -> usize {
        match (self, n) {
            (Level::Quick, 2) => 65,
            (Level::Quick, _) => 33,
            (Level::Full, 2) => 129,
            (Level::Full, _) => 65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    pub family: String,
    pub params: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(check: &'static str, set: &OperatorSet, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        let doc = OperatorSetDoc::from_set(set);
        let params = serde_json::to_string(&doc.params).expect("plain data");
        Self {
            check,
            family: doc.family,
            params,
            value,
            tolerance,
            // NaN fails
            passed: value <= tolerance,
            detail: detail.into(),
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }
}

/// Deliberate corruption of one stage, to prove the checks can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// closed-form values scaled by 1.1
    ClosedForm,
}

impl Fault {
    fn closed(self) -> f64 {
        match self {
            Fault::None => 1.0,
            Fault::ClosedForm => 1.1,
        }
    }
}

pub fn families(level: Level) -> Vec<OperatorSet> {
    let p = |s: &str| parse_sign(s).unwrap();
    let mut v = vec![
        mub_pauli(2).unwrap(),
        mub_pauli(3).unwrap(),
        noisy_pauli_set(&[0.2, 0.4], false).unwrap(),
        noisy_projector_set(&[p("x+"), p("y-"), p("z+")], 0.3).unwrap(),
        noisy_pauli_set(&[0.25; 3], true).unwrap(),
        gellmann_set(3, 2).unwrap(),
    ];
    if level == Level::Full {
        v.extend([
            noisy_pauli_set(&[0.1, 0.2, 0.3], false).unwrap(),
            noisy_projector_set(&[p("x+"), p("x-"), p("y+")], 0.2).unwrap(),
            noisy_pauli_set(&[0.3; 2], true).unwrap(),
            arb_qubit_triple(1.2, 0.3, 0.7, 2.0).unwrap(),
            arb_qubit_pair(0.6).unwrap(),
            gellmann_set(4, 3).unwrap(),
            noisy_gellmann_set(3, &[0.2, 0.1]).unwrap(),
        ]);
    }
    v
}

/// Two commuting diagonal operators; their field is a sum of positive bumps.
pub fn commuting_set() -> OperatorSet {
    let a = HermitianOperator::from_real(2, &[1.0, 0.0, 0.0, -1.0]).unwrap();
    let b = HermitianOperator::from_real(2, &[0.5, 0.0, 0.0, 0.2]).unwrap();
    OperatorSet::custom(vec![a, b]).unwrap()
}

pub fn natural_grid(set: &OperatorSet, reg: &Regularizer, count: usize) -> Result<PhaseGrid> {
    let counts = vec![count; set.n()];
    Ok(match set.coords() {
        Some(_) => PhaseGrid::natural(set, reg, Some(&counts))?,
        None => PhaseGrid::default_for(set, reg, Some(count))?,
    })
}

/// A state with Bloch components only along the family's Bloch axes.
pub fn spanned_state(set: &OperatorSet) -> Result<QuantumState> {
    let d = set.dim();
    let mut r = vec![0.0; d * d - 1];
    if let Some(c) = set.coords() {
        for (&(ax, _), v) in c.bloch.iter().zip([0.3, -0.2, 0.25]) {
            r[ax - 1] = v;
        }
    }
    Ok(bloch_to_state(&r, d)?)
}

pub fn imag_check(set: &OperatorSet, field: &WignerField) -> CheckResult {
    CheckResult::new("realness", set, field.imag_ratio(), 1e-8, "max |Im W| / max |W|")
}

/// Gaussian kernels: |W| <= 1e-6 max beyond 6 widths (along the widest kernel
/// direction) of the range.
/// Exponential kernels decay as a power, so they only need 1e-2 max beyond 0.25.
pub fn support_check(set: &OperatorSet, field: &WignerField) -> CheckResult {
    let reg = field.regularizer();
    // widest kernel direction: largest singular value of C
    let t = reg.matrix().singular_values().max();
    let (dist, tol) = if reg.m_e() == 0 { (6.0 * (2.0 * reg.epsilon()).sqrt() * t, 1e-6) } else { (0.25, 1e-2) };
    let dirs = probe_directions(set.n());
    let grid = field.grid();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (i, w) in field.values().iter().enumerate() {
        if support_distance_lower_bound(set, &grid.point(i), &dirs) > dist {
            worst = worst.max(w.abs());
            count += 1;
        }
    }
    CheckResult::new(
        "support",
        set,
        worst / field.max_abs(),
        tol,
        format!("max |W| / max |W| over {count} points farther than {dist:.3e} from the range"),
    )
}

pub fn commuting_check(set: &OperatorSet, field: &WignerField) -> CheckResult {
    CheckResult::new("commuting", set, (-field.min()).max(0.0) / field.max_abs(), 1e-6, "-min W / max |W|")
}

/// |W_rho - c W_I - corr| / max |W_I| outside the singular mask. For Gaussian
/// kernels corr = grad c . Sigma grad W_I with Sigma = 2 eps C^T C (the kernel
/// covariance), evaluated by fourth-order central differences; without it the product form
/// is off by that term. Exponential kernels use corr = 0.
pub fn factorization_residual(
    set: &OperatorSet,
    reg: &Regularizer,
    grid: &PhaseGrid,
    corrected: bool,
) -> Result<f64> {
    let rho = spanned_state(set)?;
    let cutoff = reg.default_cutoff()?;
    let w = regularized_wigner(&rho, set, grid, reg, cutoff)?;
    let wi = identity_wigner(set, grid, reg, cutoff)?;
    let top = wi.max_abs();
    let case = ClosedFormCase::new(set)?;
    let mask = Mask::singular_shell(&case, grid, default_mask(reg.epsilon()))?;
    let n = set.n();

    let origin = vec![0.0; n];
    let c0 = factorization_coefficient(&rho, set, &origin)?;
    let grad_c: Vec<f64> = (0..n)
        .map(|k| {
            let mut e = origin.clone();
            e[k] = 1.0;
            factorization_coefficient(&rho, set, &e).map(|v| v - c0)
        })
        .collect::<wigvol_core::Result<_>>()?;
    let c = reg.matrix();
    let sigma = (c.transpose() * c) * (2.0 * reg.epsilon());
    let sigma_grad_c = &sigma * nalgebra_vec(&grad_c);
    // frame: a = L x + o, so grad_a = L^{-T} grad_x
    let l_inv_t = grid.frame_matrix().try_inverse().expect("frame").transpose();
    let steps = grid.steps();
    let counts = grid.counts();

    let mut worst = 0.0f64;
    for (i, a) in grid.points().iter().enumerate() {
        if mask.excluded()[i] || wi.values()[i].abs() <= 1e-6 * top {
            continue;
        }
        let mut corr = 0.0;
        if corrected && reg.m_e() == 0 {
            let idx = grid.index(i);
            if idx.iter().zip(&counts).any(|(&j, &m)| j < 2 || j + 2 >= m) {
                continue;
            }
            // fourth-order central differences
            let v = wi.values();
            let mut stride = 1;
            let mut gx = vec![0.0; n];
            for k in (0..n).rev() {
                let s = stride;
                gx[k] = (v[i - 2 * s] - 8.0 * v[i - s] + 8.0 * v[i + s] - v[i + 2 * s]) / (12.0 * steps[k]);
                stride *= counts[k];
            }
            let ga = &l_inv_t * nalgebra_vec(&gx);
            corr = sigma_grad_c.dot(&ga);
        }
        let cf = factorization_coefficient(&rho, set, a)?;
        worst = worst.max((w.values()[i] - cf * wi.values()[i] - corr).abs());
    }
    Ok(worst / top)
}

fn nalgebra_vec(v: &[f64]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v)
}

/// Analytic gradient of chi_I against central differences.
pub fn gradient_check(set: &OperatorSet) -> Result<CheckResult> {
    let n = set.n();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for s in 0..20 {
        let xi: Vec<f64> = (0..n).map(|k| ((s * 7 + k * 3) as f64 * 0.61).sin() * 4.0).collect();
        let g = char_fn_identity_grad(set, &xi)?;
        for k in 0..n {
            let mut p = xi.clone();
            let mut m = xi.clone();
            p[k] += h;
            m[k] -= h;
            let fd = (char_fn_identity(set, &p)? - char_fn_identity(set, &m)?) / (2.0 * h);
            worst = worst.max((g[k] - fd).norm() / set.dim() as f64);
        }
    }
    Ok(CheckResult::new("gradient", set, worst, 1e-6, "max |grad chi_I - central difference| / N over 20 points"))
}

/// Worst relative error of the numeric field on the top decile of |closed|,
/// outside the singular mask, for rho = I/N.
pub fn oracle_error(set: &OperatorSet, field: &WignerField, fault: Fault) -> Result<f64> {
    let case = ClosedFormCase::new(set)?;
    let eps = field.regularizer().epsilon();
    let grid = field.grid();
    let rho = QuantumState::maximally_mixed(set.dim());
    let mask = Mask::singular_shell(&case, grid, default_mask(eps))?;
    let mut pairs = Vec::new();
    for (i, a) in grid.points().iter().enumerate() {
        if !mask.excluded()[i] {
            pairs.push((fault.closed() * wigner_closed(&case, &rho, a, eps)?, field.values()[i]));
        }
    }
    let mut mags: Vec<f64> = pairs.iter().map(|p| p.0.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let cut = mags[((0.9 * mags.len() as f64) as usize).min(mags.len() - 1)];
    Ok(pairs.iter().filter(|p| p.0.abs() >= cut).map(|p| (p.1 - p.0).abs() / p.0.abs()).fold(0.0, f64::max))
}

/// |numeric ratio - closed ratio|, numeric against the qubit MUB field on the
/// same Bloch grid and mask.
pub fn ratio_error(set: &OperatorSet, field: &WignerField, count: usize, fault: Fault) -> Result<(f64, f64, f64)> {
    let case = ClosedFormCase::new(set)?;
    let eps = field.regularizer().epsilon();
    let nb = match case.shape() {
        Shape::Line => 1,
        Shape::Disk => 2,
        Shape::Shell => 3,
    };
    let mask_w = (case.shape() == Shape::Disk).then(|| default_mask(eps));
    let mask = match mask_w {
        Some(w) => Some(Mask::singular_shell(&case, field.grid(), w)?),
        None => None,
    };
    let rep = normalized_negativity(field, &field.regularizer().reference(), mask.as_ref())?;
    let closed = fault.closed() * negativity_closed(&case, eps, mask_w)?.ratio;
    let base = numeric_baseline(nb, eps, &vec![count; nb], mask_w)?;
    let numeric = rep.normalized / base;
    Ok(((numeric - closed).abs(), numeric, closed))
}

/// Run the suite; `filter` keeps checks whose name contains it.
pub fn run(level: Level, filter: Option<&str>, fault: Fault, mut emit: impl FnMut(&CheckResult)) -> Result<Vec<CheckResult>> {
    let want = |name: &str| filter.is_none_or(|f| name.contains(f));
    let mut out = Vec::new();
    let mut push = |r: CheckResult, out: &mut Vec<CheckResult>| {
        emit(&r);
        out.push(r);
    };

    if want("commuting") {
        let set = commuting_set();
        let reg = Regularizer::gauss_iso(2, level.epsilon(2))?;
        let grid = PhaseGrid::default_for(&set, &reg, Some(level.count(2)))?;
        let f = regularized_wigner(&QuantumState::maximally_mixed(2), &set, &grid, &reg, reg.default_cutoff()?)?;
        push(commuting_check(&set, &f), &mut out);
    }

    for set in families(level) {
        let n = set.n();
        let reg = family_regularizer(&set, level.epsilon(n))?;
        let count = level.count(n);
        let grid = natural_grid(&set, &reg, count)?;
        let needs_field = ["realness", "support", "marginals", "oracle", "ratio"].iter().any(|c| want(c));
        let field = if needs_field {
            let rho = QuantumState::maximally_mixed(set.dim());
            Some(regularized_wigner(&rho, &set, &grid, &reg, reg.default_cutoff()?)?)
        } else {
            None
        };
        if let Some(f) = &field {
            if want("realness") {
                push(imag_check(&set, f), &mut out);
            }
            if want("support") {
                push(support_check(&set, f), &mut out);
            }
            if want("marginals") && reg.m_e() == 0 {
                let rho = QuantumState::maximally_mixed(set.dim());
                let mut worst = 0.0f64;
                for u in probe_directions(n).iter().take(4) {
                    worst = worst.max(marginal_check(&rho, &set, u, f)?.max());
                }
                push(CheckResult::new("marginals", &set, worst, 1e-2, "max moment error over 4 directions"), &mut out);
            }
            if want("oracle") {
                let e = oracle_error(&set, f, fault)?;
                push(CheckResult::new("oracle", &set, e, 0.02, "max relative error on the top decile of |closed|"), &mut out);
            }
            if want("ratio") {
                let (e, numeric, closed) = ratio_error(&set, f, count, fault)?;
                push(
                    CheckResult::new("ratio", &set, e, 0.05 * closed.max(0.05), format!("numeric {numeric:.5} vs closed {closed:.5}")),
                    &mut out,
                );
            }
        }
        if want("factorization") {
            let e = factorization_residual(&set, &reg, &grid, true)?;
            let tol = if reg.m_e() == 0 { 1e-2 } else { 1e-6 };
            let what = if reg.m_e() == 0 { "with the kernel-covariance term" } else { "outside the singular mask" };
            push(CheckResult::new("factorization", &set, e, tol, format!("|W_rho - c W_I| / max |W_I| {what}")), &mut out);
        }
        if want("gradient") {
            push(gradient_check(&set)?, &mut out);
        }
    }
    Ok(out)
}
