//! Small dense complex Hermitian algebra.
//!
//! Dimensions are tiny (d <= 16), so everything goes through a full
//! eigendecomposition: exact unitarity matters more than speed here.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::catalog::gellmann_basis;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

pub const MAX_DIM: usize = 16;
const HERMITIAN_TOL: f64 = 1e-12;
const EXPM_TOL: f64 = 1e-9;

pub fn max_asymmetry(m: &ComplexMatrix) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..d {
        for k in j..d {
            worst = worst.max((m[(j, k)] - m[(k, j)].conj()).norm());
        }
    }
    worst
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// A d x d complex Hermitian matrix, one of the A_k.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let d = m.nrows();
        if !(2..=MAX_DIM).contains(&d) {
            return Err(Error::BadDim(format!("operator dimension {d} outside 2..={MAX_DIM}")));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite matrix entry".into()));
        }
        let asym = max_asymmetry(&m);
        if asym > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput(asym));
        }
        Ok(Self { m: hermitian_part(&m) })
    }

    pub fn from_real(d: usize, rows: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(d, d, rows).map(|x| C64::new(x, 0.0)))
    }

    pub fn identity(d: usize) -> Self {
        Self { m: ComplexMatrix::identity(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        eigh(&self.m)
    }

    /// Spectrum bounds (lambda_min, lambda_max).
    pub fn spectral_range(&self) -> (f64, f64) {
        let (vals, _) = self.eigh();
        (vals[0], *vals.last().unwrap())
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let d = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = ComplexMatrix::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Real linear combination sum_k c_k A_k as a plain matrix.
pub fn lin_comb(coeffs: &[f64], ops: &[HermitianOperator]) -> ComplexMatrix {
    let d = ops[0].dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for (c, op) in coeffs.iter().zip(ops) {
        if *c != 0.0 {
            out += op.matrix() * C64::new(*c, 0.0);
        }
    }
    out
}

/// tr[A B] without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

fn expm_from_eig(vals: &[f64], vecs: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let d = vals.len();
    let mut scaled = vecs.clone();
    for (c, &mu) in vals.iter().enumerate() {
        let phase = C64::from_polar(1.0, t * mu);
        for r in 0..d {
            scaled[(r, c)] *= phase;
        }
    }
    scaled * vecs.adjoint()
}

/// e^{itH} via U e^{itD} U^dagger.
pub fn expm_i(h: &HermitianOperator, t: f64) -> ComplexMatrix {
    let (vals, vecs) = h.eigh();
    expm_from_eig(&vals, &vecs, t)
}

/// e^{itH} for a raw matrix, rejecting inputs that are not Hermitian to 1e-9.
pub fn expm_i_matrix(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let asym = max_asymmetry(m);
    if asym > EXPM_TOL {
        return Err(Error::NonHermitianInput(asym));
    }
    let (vals, vecs) = eigh(&hermitian_part(m));
    Ok(expm_from_eig(&vals, &vecs, t))
}

/// Density matrix, optionally tagged with its generalized Bloch vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    m: ComplexMatrix,
    bloch: Option<Vec<f64>>,
}

impl QuantumState {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let asym = max_asymmetry(&m);
        if asym > HERMITIAN_TOL {
            return Err(Error::NonHermitianInput(asym));
        }
        let m = hermitian_part(&m);
        let tr = m.trace();
        if (tr.re - 1.0).abs() > HERMITIAN_TOL || tr.im.abs() > HERMITIAN_TOL {
            return Err(Error::NotAState(format!("trace {}", tr)));
        }
        let (vals, _) = eigh(&m);
        if vals[0] < -1e-10 {
            return Err(Error::NotAState(format!("min eigenvalue {:.3e}", vals[0])));
        }
        Ok(Self { m, bloch: None })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            m: ComplexMatrix::identity(d, d) / C64::new(d as f64, 0.0),
            bloch: Some(vec![0.0; d * d - 1]),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn bloch(&self) -> Option<&[f64]> {
        self.bloch.as_deref()
    }

    /// Bloch vector, recomputed from the matrix when not stored.
    pub fn bloch_vector(&self) -> Vec<f64> {
        match &self.bloch {
            Some(r) => r.clone(),
            None => state_to_bloch(self),
        }
    }
}

/// (1/d)(I + sum_k r_k Lambda_k); a short r is padded with zeros.
pub fn bloch_to_state(r: &[f64], d: usize) -> Result<QuantumState> {
    if !(2..=MAX_DIM).contains(&d) {
        return Err(Error::BadDim(format!("state dimension {d}")));
    }
    if r.len() > d * d - 1 {
        return Err(Error::DimensionMismatch { expected: d * d - 1, got: r.len() });
    }
    let basis = gellmann_basis(d);
    let mut m = ComplexMatrix::identity(d, d);
    for (rk, lam) in r.iter().zip(&basis) {
        m += lam.matrix() * C64::new(*rk, 0.0);
    }
    m /= C64::new(d as f64, 0.0);
    let (vals, _) = eigh(&m);
    if vals[0] < -1e-10 {
        return Err(Error::NotAState(format!("min eigenvalue {:.3e}", vals[0])));
    }
    let mut full = r.to_vec();
    full.resize(d * d - 1, 0.0);
    Ok(QuantumState { m, bloch: Some(full) })
}

/// r_k = (d/2) tr[rho Lambda_k].
pub fn state_to_bloch(rho: &QuantumState) -> Vec<f64> {
    let d = rho.dim();
    gellmann_basis(d)
        .iter()
        .map(|lam| 0.5 * d as f64 * trace_product(rho.matrix(), lam.matrix()).re)
        .collect()
}

pub fn expectation(rho: &QuantumState, a: &HermitianOperator) -> Result<f64> {
    if rho.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: a.dim() });
    }
    Ok(trace_product(rho.matrix(), a.matrix()).re)
}
