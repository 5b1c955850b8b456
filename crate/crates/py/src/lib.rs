//! Python bindings: fields, negative volumes and closed forms for the
//! built-in operator families. Families are named by tag and parameterized
//! with the same keys as the CLI config (`n`, `N`, `lambda`, `lambdas`,
//! `signs`, `beta`, `theta1`, ...).

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use wigvol_core::catalog::{OperatorSet, OperatorSetDoc, ParamsDoc};
use wigvol_core::closedform::{default_mask, mub_reference, negativity_closed, ClosedFormCase, Shape};
use wigvol_core::grid::PhaseGrid;
use wigvol_core::linalg::{bloch_to_state, QuantumState};
use wigvol_core::negativity::{normalized_negativity, Mask};
use wigvol_core::regularizer::{family_regularizer, KernelKind, Regularizer};
use wigvol_core::transform::{epsilon_floor, regularized_wigner, WignerField};
use wigvol_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::CutoffTooSmall(_)
        | Error::UnderResolved(_)
        | Error::ImaginaryResidue(_)
        | Error::NonIntegrable(_)
        | Error::InsufficientSupport(_)
        | Error::QuadratureBudget(_)
        | Error::SingularPoint(_) => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn build_set(py: Python<'_>, family: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<OperatorSet> {
    let params: ParamsDoc = match params {
        Some(p) => {
            let text: String = py.import("json")?.call_method1("dumps", (p,))?.extract()?;
            serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("params: {e}")))?
        }
        None => ParamsDoc::default(),
    };
    OperatorSetDoc { family: family.to_string(), params, matrices: None }.to_set().map_err(err)
}

fn build_state(set: &OperatorSet, bloch: Option<Vec<f64>>) -> PyResult<QuantumState> {
    match bloch {
        Some(r) => bloch_to_state(&r, set.dim()).map_err(err),
        None => Ok(QuantumState::maximally_mixed(set.dim())),
    }
}

fn field_for(set: &OperatorSet, rho: &QuantumState, epsilon: f64, count: Option<usize>) -> Result<WignerField, Error> {
    let floor = epsilon_floor(set.n());
    if epsilon < floor {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon:e} below the floor {floor:e}")));
    }
    let reg = family_regularizer(set, epsilon)?;
    let grid = match set.coords() {
        Some(_) => PhaseGrid::natural(set, &reg, count.map(|c| vec![c; set.n()]).as_deref())?,
        None => PhaseGrid::default_for(set, &reg, count)?,
    };
    regularized_wigner(rho, set, &grid, &reg, reg.default_cutoff()?)
}

/// Regularized field on the family's natural grid. Returns a dict with
/// `points` (list of phase-space points), `values`, `engine`, `grid`,
/// `kernel` and `imag_ratio`.
#[pyfunction]
#[pyo3(signature = (family, params=None, epsilon=1e-4, count=None, bloch=None))]
fn wigner<'py>(
    py: Python<'py>,
    family: &str,
    params: Option<&Bound<'py, PyDict>>,
    epsilon: f64,
    count: Option<usize>,
    bloch: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let set = build_set(py, family, params)?;
    let rho = build_state(&set, bloch)?;
    let field = py.detach(|| field_for(&set, &rho, epsilon, count)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("points", field.grid().points())?;
    out.set_item("values", field.values().to_vec())?;
    out.set_item("engine", field.engine().name())?;
    out.set_item("grid", field.grid().describe())?;
    out.set_item("kernel", field.regularizer().describe())?;
    out.set_item("imag_ratio", field.imag_ratio())?;
    Ok(out)
}

/// Normalized negative volume of the field for rho = I/N (or `bloch`), with
/// the singular mask (R - |x|) > mask for disk shapes (default 3 sqrt(eps)).
#[pyfunction]
#[pyo3(signature = (family, params=None, epsilon=1e-4, count=None, bloch=None, mask=None))]
fn negativity<'py>(
    py: Python<'py>,
    family: &str,
    params: Option<&Bound<'py, PyDict>>,
    epsilon: f64,
    count: Option<usize>,
    bloch: Option<Vec<f64>>,
    mask: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let set = build_set(py, family, params)?;
    let rho = build_state(&set, bloch)?;
    let report = py
        .detach(|| {
            let field = field_for(&set, &rho, epsilon, count)?;
            let m = match ClosedFormCase::new(&set) {
                Ok(case) if case.shape() == Shape::Disk && set.coords().is_some() => {
                    Some(Mask::singular_shell(&case, field.grid(), mask.unwrap_or_else(|| default_mask(epsilon)))?)
                }
                _ => None,
            };
            normalized_negativity(&field, &field.regularizer().reference(), m.as_ref())
        })
        .map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("raw", report.raw)?;
    out.set_item("norm_factor", report.norm_factor)?;
    out.set_item("normalized", report.normalized)?;
    out.set_item("mask_fraction", report.mask_fraction)?;
    out.set_item("mask", report.mask_policy)?;
    out.set_item("kernel", report.kernel)?;
    Ok(out)
}

/// Closed-form negativity: `ratio` to the qubit MUB baseline, `absolute` and `baseline`.
#[pyfunction]
#[pyo3(signature = (family, params=None, epsilon=1e-4, mask=None))]
fn closed_negativity<'py>(
    py: Python<'py>,
    family: &str,
    params: Option<&Bound<'py, PyDict>>,
    epsilon: f64,
    mask: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let set = build_set(py, family, params)?;
    let case = ClosedFormCase::new(&set).map_err(err)?;
    let c = negativity_closed(&case, epsilon, mask).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("ratio", c.ratio)?;
    out.set_item("absolute", c.absolute)?;
    out.set_item("baseline", c.baseline)?;
    out.set_item("reference_kernel", c.reference_kernel.name())?;
    out.set_item("shape", case.shape().name())?;
    Ok(out)
}

/// Baseline MUB negative volume: n = 2 with EXP_ISO (masked), n = 3 with GAUSS_ISO.
#[pyfunction]
#[pyo3(signature = (n, dim=2, epsilon=1e-4, mask=None))]
fn mub_baseline(n: usize, dim: usize, epsilon: f64, mask: Option<f64>) -> PyResult<f64> {
    let kernel = if n == 2 { KernelKind::ExpIso } else { KernelKind::GaussIso };
    mub_reference(n, dim, epsilon, kernel, mask).map_err(err)
}

/// I_reg / I_reference for the family's kernel.
#[pyfunction]
#[pyo3(signature = (family, params=None, epsilon=1e-4))]
fn norm_factor(py: Python<'_>, family: &str, params: Option<&Bound<'_, PyDict>>, epsilon: f64) -> PyResult<f64> {
    let set = build_set(py, family, params)?;
    let reg: Regularizer = family_regularizer(&set, epsilon).map_err(err)?;
    wigvol_core::regularizer::norm_factor(&reg, &reg.reference()).map_err(err)
}

#[pymodule]
fn wigvol(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(wigner, m)?)?;
    m.add_function(wrap_pyfunction!(negativity, m)?)?;
    m.add_function(wrap_pyfunction!(closed_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(mub_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(norm_factor, m)?)?;
    Ok(())
}
