//! Characteristic function W^(xi) = tr[rho e^{i xi.A}] and the state factorization.

use crate::catalog::OperatorSet;
use crate::error::{Error, Result};
use crate::linalg::{eigh, lin_comb, trace_product, ComplexMatrix, QuantumState, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CharSample {
    pub xi: Vec<f64>,
    pub value: C64,
}

/// What the trace is weighted with: a density matrix, or the identity (no 1/d).
#[derive(Debug, Clone, PartialEq)]
pub enum Weight {
    State(QuantumState),
    Identity,
}

impl Weight {
    pub fn matrix(&self, d: usize) -> ComplexMatrix {
        match self {
            Weight::State(rho) => rho.matrix().clone(),
            Weight::Identity => ComplexMatrix::identity(d, d),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Weight::Identity => "identity".into(),
            Weight::State(rho) => match rho.bloch() {
                Some(r) => format!("bloch{:?}", r),
                None => "rho".into(),
            },
        }
    }
}

fn check_xi(set: &OperatorSet, xi: &[f64]) -> Result<()> {
    if xi.len() != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), got: xi.len() });
    }
    Ok(())
}

fn weighted_trace(w: &ComplexMatrix, set: &OperatorSet, xi: &[f64]) -> C64 {
    let (vals, vecs) = eigh(&lin_comb(xi, set.ops()));
    let mut acc = C64::new(0.0, 0.0);
    for (j, mu) in vals.iter().enumerate() {
        let v = vecs.column(j);
        let p = (v.adjoint() * w * v)[(0, 0)];
        acc += C64::from_polar(1.0, *mu) * p;
    }
    acc
}

pub fn char_fn(rho: &QuantumState, set: &OperatorSet, xi: &[f64]) -> Result<C64> {
    check_xi(set, xi)?;
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: rho.dim() });
    }
    Ok(weighted_trace(rho.matrix(), set, xi))
}

/// tr[e^{i xi.A}], W^_I (no 1/d).
pub fn char_fn_identity(set: &OperatorSet, xi: &[f64]) -> Result<C64> {
    check_xi(set, xi)?;
    let (vals, _) = eigh(&lin_comb(xi, set.ops()));
    Ok(vals.iter().map(|mu| C64::from_polar(1.0, *mu)).sum())
}

/// (i tr[A_k e^{i xi.A}])_k, the gradient of `char_fn_identity`.
pub fn char_fn_identity_grad(set: &OperatorSet, xi: &[f64]) -> Result<Vec<C64>> {
    check_xi(set, xi)?;
    let e = crate::linalg::expm_i_matrix(&lin_comb(xi, set.ops()), 1.0)?;
    Ok(set.ops().iter().map(|a| C64::new(0.0, 1.0) * trace_product(a.matrix(), &e)).collect())
}

/// t_i = s_i r_{k_i}, the Bloch weights of the leading primed coordinates.
pub(crate) fn bloch_weights(rho: &QuantumState, set: &OperatorSet) -> Result<Vec<f64>> {
    let coords = set.coords().ok_or(Error::NoAffineMap)?;
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: rho.dim() });
    }
    let r = rho.bloch_vector();
    for (k, rk) in r.iter().enumerate() {
        if rk.abs() > 1e-10 && !coords.bloch.iter().any(|(ax, _)| *ax == k + 1) {
            return Err(Error::UnsupportedState(format!("r_{} = {rk}", k + 1)));
        }
    }
    Ok(coords.bloch.iter().map(|(ax, s)| s * r[ax - 1]).collect())
}

/// c(a) with W_rho(a) = c(a) W_I(a): (1/d)(1 + sum_i s_i r_{k_i} a'_i).
pub fn factorization_coefficient(rho: &QuantumState, set: &OperatorSet, a: &[f64]) -> Result<f64> {
    if a.len() != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), got: a.len() });
    }
    let t = bloch_weights(rho, set)?;
    let ap = set.affine().ok_or(Error::NoAffineMap)?.apply(a);
    let dot: f64 = t.iter().zip(&ap).map(|(t, x)| t * x).sum();
    Ok((1.0 + dot) / set.dim() as f64)
}

/// Fast repeated evaluation of tr[W e^{i xi.A}] for one (weight, set).
///
/// Sets whose operators all live in the top-left 2x2 block (plus a multiple
/// of the identity below it) use the closed form for e^{i(c + V.sigma)};
/// that covers every qubit and Gell-Mann family. Anything else falls back to
/// an eigendecomposition per call.
#[derive(Debug, Clone)]
pub struct CharEvaluator {
    kind: EvalKind,
}

#[derive(Debug, Clone)]
enum EvalKind {
    Block {
        // A_l = c_l I_2 + v_l . sigma on the block, e_l on the rest
        c: Vec<f64>,
        v: Vec<[f64; 3]>,
        e: Vec<f64>,
        // W block = w0 I + w . sigma, trace of the lower part
        w0: f64,
        w: [f64; 3],
        lower_trace: f64,
    },
    General {
        ops: OperatorSet,
        weight: ComplexMatrix,
    },
}

fn pauli_parts(m: &ComplexMatrix) -> (f64, [f64; 3]) {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = m[(0, 1)];
    (0.5 * (a + d), [b.re, -b.im, 0.5 * (a - d)])
}

fn embedded_block(m: &ComplexMatrix) -> Option<f64> {
    let d = m.nrows();
    if d == 2 {
        return Some(0.0);
    }
    let e = m[(2, 2)].re;
    for i in 0..d {
        for j in 0..d {
            if i < 2 && j < 2 {
                continue;
            }
            let want = if i == j { C64::new(e, 0.0) } else { C64::new(0.0, 0.0) };
            if (m[(i, j)] - want).norm() > 1e-15 {
                return None;
            }
        }
    }
    Some(e)
}

impl CharEvaluator {
    pub fn new(weight: &Weight, set: &OperatorSet) -> Self {
        let d = set.dim();
        let wm = weight.matrix(d);
        let lowers: Option<Vec<f64>> = set.ops().iter().map(|a| embedded_block(a.matrix())).collect();
        let kind = match lowers {
            Some(e) => {
                let mut c = Vec::new();
                let mut v = Vec::new();
                for a in set.ops() {
                    let (ci, vi) = pauli_parts(a.matrix());
                    c.push(ci);
                    v.push(vi);
                }
                let (w0, w) = pauli_parts(&wm);
                let lower_trace = (2..d).map(|i| wm[(i, i)].re).sum();
                EvalKind::Block { c, v, e, w0, w, lower_trace }
            }
            None => EvalKind::General { ops: set.clone(), weight: wm },
        };
        Self { kind }
    }

    pub fn is_fast(&self) -> bool {
        matches!(self.kind, EvalKind::Block { .. })
    }

    pub fn eval(&self, xi: &[f64]) -> C64 {
        match &self.kind {
            EvalKind::Block { c, v, e, w0, w, lower_trace } => {
                let mut cc = 0.0;
                let mut ee = 0.0;
                let mut vv = [0.0; 3];
                for (l, x) in xi.iter().enumerate() {
                    cc += x * c[l];
                    ee += x * e[l];
                    for q in 0..3 {
                        vv[q] += x * v[l][q];
                    }
                }
                let norm = (vv[0] * vv[0] + vv[1] * vv[1] + vv[2] * vv[2]).sqrt();
                let (s, co) = norm.sin_cos();
                let sinc = if norm < 1e-8 { 1.0 - norm * norm / 6.0 } else { s / norm };
                let wv = w[0] * vv[0] + w[1] * vv[1] + w[2] * vv[2];
                let block = C64::from_polar(1.0, cc) * C64::new(2.0 * w0 * co, 2.0 * wv * sinc);
                if *lower_trace != 0.0 {
                    block + C64::from_polar(*lower_trace, ee)
                } else {
                    block
                }
            }
            EvalKind::General { ops, weight } => weighted_trace(weight, ops, xi),
        }
    }
}
